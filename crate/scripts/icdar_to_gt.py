#!/usr/bin/env python3
"""Convert ICDAR Robust Reading annotations to the labelreader ground-truth format.

Output format, one block per image:

    image <name> <width> <height>
    x y w h [transcription]

Supported inputs:

  2003  the `words.xml` / `locations.xml` file. Each <image> gives
        <imageName> and <resolution x= y=>. Each <taggedRectangle> gives
        float x, y, width, height and an optional <tag> transcription.
        Coordinates are rounded outward: x0 = floor(x), x1 = ceil(x + width).

  2011  a directory of `gt_<stem>.txt` files next to (or pointed at) the
        images. Each line is `left top right bottom "word"`, separated by
        commas or spaces. Right and bottom are inclusive, so
        w = right - left + 1. Image size comes from the JPEG/PNG header.

Rules common to both:
  * The image name is the file's basename, matching what `labelreader
    localize` writes for the same file.
  * Boxes reaching outside the image are clamped, with a warning on stderr.
    Boxes that end up empty are dropped, with a warning.
  * Transcriptions are kept only when they contain no whitespace, since the
    format is whitespace-delimited; "###" (don't care) is dropped as text.
  * Images are written in name order.
"""

import argparse
import math
import os
import re
import struct
import sys
import xml.etree.ElementTree as ET


def warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def clamp_box(name, x0, y0, x1, y1, width, height):
    """Half-open box [x0,x1)x[y0,y1) clamped to the image, or None if empty."""
    cx0, cy0 = max(0, x0), max(0, y0)
    cx1, cy1 = min(width, x1), min(height, y1)
    if (cx0, cy0, cx1, cy1) != (x0, y0, x1, y1):
        warn(f"{name}: box {x0} {y0} {x1 - x0} {y1 - y0} clamped to {width}x{height}")
    if cx1 <= cx0 or cy1 <= cy0:
        warn(f"{name}: box {x0} {y0} {x1 - x0} {y1 - y0} is empty after clamping; dropped")
        return None
    return cx0, cy0, cx1 - cx0, cy1 - cy0


def clean_text(text):
    if text is None:
        return None
    text = text.strip()
    if not text or text == "###" or any(c.isspace() for c in text):
        return None
    return text


def image_size(path):
    """(width, height) from a PNG or JPEG header."""
    with open(path, "rb") as f:
        head = f.read(24)
        if head[:8] == b"\x89PNG\r\n\x1a\n":
            return struct.unpack(">II", head[16:24])
        if head[:2] != b"\xff\xd8":
            raise ValueError(f"{path}: not a PNG or JPEG file")
        f.seek(2)
        while True:
            marker = f.read(2)
            if len(marker) < 2 or marker[0] != 0xFF:
                raise ValueError(f"{path}: no JPEG frame header")
            if marker[1] in (0xD8, 0x01) or 0xD0 <= marker[1] <= 0xD7:
                continue
            (length,) = struct.unpack(">H", f.read(2))
            if 0xC0 <= marker[1] <= 0xCF and marker[1] not in (0xC4, 0xC8, 0xCC):
                h, w = struct.unpack(">xHH", f.read(5))
                return w, h
            f.seek(length - 2, os.SEEK_CUR)


def convert_2003(xml_path):
    images = {}
    for img in ET.parse(xml_path).getroot().iter("image"):
        name = os.path.basename(img.findtext("imageName").strip())
        res = img.find("resolution")
        width, height = int(res.get("x")), int(res.get("y"))
        boxes = []
        for r in img.iter("taggedRectangle"):
            x, y = float(r.get("x")), float(r.get("y"))
            w, h = float(r.get("width")), float(r.get("height"))
            box = clamp_box(name, math.floor(x), math.floor(y), math.ceil(x + w), math.ceil(y + h), width, height)
            if box:
                boxes.append((*box, clean_text(r.findtext("tag"))))
        images[name] = (width, height, boxes)
    return images


LINE_2011 = re.compile(r'^\s*(-?\d+)[,\s]+(-?\d+)[,\s]+(-?\d+)[,\s]+(-?\d+)[,\s]*(?:"(.*)")?\s*$')


def convert_2011(gt_dir, image_dir):
    images = {}
    for gt in sorted(os.listdir(gt_dir)):
        m = re.fullmatch(r"gt_(.+)\.txt", gt)
        if not m:
            continue
        stem = m.group(1)
        candidates = [f for f in os.listdir(image_dir) if os.path.splitext(f)[0] == stem]
        if not candidates:
            warn(f"{gt}: no image named {stem}.* in {image_dir}; skipped")
            continue
        name = sorted(candidates)[0]
        width, height = image_size(os.path.join(image_dir, name))
        boxes = []
        with open(os.path.join(gt_dir, gt), encoding="utf-8-sig") as f:
            for n, line in enumerate(f, 1):
                if not line.strip():
                    continue
                p = LINE_2011.match(line)
                if not p:
                    raise ValueError(f"{gt}:{n}: cannot parse {line.strip()!r}")
                l, t, r, b = map(int, p.group(1, 2, 3, 4))
                box = clamp_box(name, l, t, r + 1, b + 1, width, height)
                if box:
                    boxes.append((*box, clean_text(p.group(5))))
        images[name] = (width, height, boxes)
    return images


def write(images, out):
    for name in sorted(images):
        if any(c.isspace() for c in name):
            raise ValueError(f"image name {name!r} contains whitespace")
        width, height, boxes = images[name]
        out.write(f"image {name} {width} {height}\n")
        for x, y, w, h, text in boxes:
            out.write(f"{x} {y} {w} {h}" + (f" {text}" if text else "") + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="edition", required=True)
    a = sub.add_parser("2003", help="convert an ICDAR 2003 XML file")
    a.add_argument("xml")
    b = sub.add_parser("2011", help="convert a directory of ICDAR 2011 gt_*.txt files")
    b.add_argument("gt_dir")
    b.add_argument("--images", help="image directory (default: gt_dir)")
    ap.add_argument("-o", "--out", help="output file (default: stdout)")
    args = ap.parse_args()

    try:
        if args.edition == "2003":
            images = convert_2003(args.xml)
        else:
            images = convert_2011(args.gt_dir, args.images or args.gt_dir)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as f:
                write(images, f)
        else:
            write(images, sys.stdout)
    except (OSError, ValueError, ET.ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
