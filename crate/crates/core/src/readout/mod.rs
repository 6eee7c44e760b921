//! From localized text boxes to words and a speech script.

mod adapters;
mod otsu;
mod script;

pub use adapters::{
    filter_words, ocr_input_image, run_ocr, speak, speak_to, OcrAdapter, RecognizedText, TtsAdapter, PLACEHOLDER,
};
pub use otsu::{between_class_variance, histogram, otsu_binarize, otsu_binarize_with_margins, otsu_threshold, Margins};
pub use script::{emit_script, Prosody, SpeechScript};

use crate::error::Result;
use crate::imaging::{BinaryMask, GrayImage, Rect};

/// Pixels added on each side of a localized box before binarization.
pub const REGION_MARGIN: u32 = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct TextRegion {
    /// Localized box, source-image pixels.
    pub bbox: Rect,
    pub padded: Rect,
    /// Ink mask over `padded`.
    pub binarized: BinaryMask,
}

/// Grows `bbox` by 5 px per side, clamped to the image.
pub fn pad_region(bbox: Rect, (width, height): (u32, u32)) -> Rect {
    bbox.expand_clamped(REGION_MARGIN, width, height)
}

/// Pads `bbox` inside `gray`, then binarizes the padded patch with the band
/// outside `bbox` forced to background. Where clamping left less than 5 px,
/// the band shrinks accordingly.
pub fn binarize_region(gray: &GrayImage, bbox: Rect) -> Result<TextRegion> {
    let padded = pad_region(bbox, (gray.width(), gray.height()));
    let patch = gray.crop(padded)?;
    let margins = Margins {
        left: bbox.x - padded.x,
        top: bbox.y - padded.y,
        right: padded.right() - bbox.right(),
        bottom: padded.bottom() - bbox.bottom(),
    };
    let binarized = otsu_binarize_with_margins(&patch, margins)?;
    Ok(TextRegion { bbox, padded, binarized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pad_examples() {
        assert_eq!(pad_region(Rect::new(10, 10, 50, 20), (640, 480)), Rect::new(5, 5, 60, 30));
        assert_eq!(pad_region(Rect::new(0, 0, 50, 20), (640, 480)), Rect::new(0, 0, 55, 25));
        assert_eq!(pad_region(Rect::new(0, 0, 640, 480), (640, 480)), Rect::new(0, 0, 640, 480));
    }

    #[test]
    fn region_band_is_background() {
        let g = GrayImage::from_fn(60, 40, |x, y| if (x / 3 + y / 3) % 2 == 0 { 20 } else { 220 });
        let r = binarize_region(&g, Rect::new(10, 10, 30, 12)).unwrap();
        assert_eq!(r.padded, Rect::new(5, 5, 40, 22));
        let m = &r.binarized;
        assert_eq!(m.dims(), (40, 22));
        for y in 0..22 {
            for x in 0..40 {
                if !(5..35).contains(&x) || !(5..17).contains(&y) {
                    assert!(!m.get(x, y));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn padding_contains_input(x in 0u32..100, y in 0u32..100, w in 1u32..100, h in 1u32..100) {
            let dims = (200, 200);
            let b = Rect::new(x, y, w, h);
            let p = pad_region(b, dims);
            prop_assert!(p.contains(&b));
            prop_assert!(p.right() <= 200 && p.bottom() <= 200);
        }
    }
}
