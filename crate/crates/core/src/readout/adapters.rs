//! External OCR and TTS engines, driven through command templates.
//!
//! A template is split on whitespace into a program and its arguments; the
//! `{input}` placeholder is replaced with a file path. No shell is involved.

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::script::SpeechScript;
use super::TextRegion;
use crate::error::{Error, Result};
use crate::imaging::{pnm, GrayImage};

pub const PLACEHOLDER: &str = "{input}";

fn check_template(template: &str) -> Result<()> {
    let n = template.matches(PLACEHOLDER).count();
    if n != 1 {
        return Err(Error::Parameter(format!(
            "command template must contain {PLACEHOLDER} exactly once, found {n}: {template:?}"
        )));
    }
    Ok(())
}

fn build_command(template: &str, input: &Path) -> Result<Command> {
    let input = input.to_string_lossy();
    let mut parts = template.split_whitespace().map(|tok| tok.replace(PLACEHOLDER, &input));
    let program = parts.next().ok_or_else(|| Error::Parameter("empty command template".into()))?;
    let mut cmd = Command::new(program);
    cmd.args(parts);
    Ok(cmd)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OcrAdapter {
    pub command: String,
    pub timeout: Duration,
}

impl OcrAdapter {
    pub fn new(command: impl Into<String>, timeout: Duration) -> Result<Self> {
        let command = command.into();
        check_template(&command)?;
        Ok(OcrAdapter { command, timeout })
    }

    /// Runs the engine on an image file and returns its trimmed stdout.
    pub fn recognize_file(&self, input: &Path) -> Result<String> {
        let ocr_err = |message: String, status| Error::Ocr { message, status };
        let mut child = build_command(&self.command, input)?
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| ocr_err(format!("cannot start {:?}: {e}", self.command), None))?;

        let mut stdout = child.stdout.take().expect("stdout is piped");
        let mut stderr = child.stderr.take().expect("stderr is piped");
        let out_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            buf
        });
        let err_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            buf
        });

        let start = Instant::now();
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if start.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ocr_err(format!("timed out after {:?}", self.timeout), None));
                }
                Ok(None) => thread::sleep(Duration::from_millis(5)),
                Err(e) => return Err(ocr_err(format!("wait failed: {e}"), None)),
            }
        };
        let out = out_reader.join().unwrap_or_default();
        let err = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(ocr_err(
                format!("engine exited with {status}: {}", String::from_utf8_lossy(&err).trim()),
                status.code(),
            ));
        }
        Ok(String::from_utf8_lossy(&out).trim().to_string())
    }
}

/// Output of OCR on one region.
#[derive(Clone, Debug, PartialEq)]
pub struct RecognizedText {
    pub region: TextRegion,
    pub raw: String,
    pub words: Vec<String>,
}

/// Splits OCR output into words, strips surrounding punctuation and keeps
/// words of at least three characters.
pub fn filter_words(raw: &str) -> Vec<String> {
    raw.split_whitespace()
        .map(|tok| tok.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| w.chars().count() >= 3)
        .map(str::to_string)
        .collect()
}

/// Ink as black on white, the polarity OCR engines expect.
pub fn ocr_input_image(region: &TextRegion) -> GrayImage {
    let m = &region.binarized;
    GrayImage::from_fn(m.width(), m.height(), |x, y| if m.get(x, y) { 0 } else { 255 })
}

pub fn run_ocr(adapter: &OcrAdapter, region: &TextRegion) -> Result<RecognizedText> {
    let tmp = tempfile::Builder::new()
        .prefix("labelreader-region-")
        .suffix(".pgm")
        .tempfile()
        .map_err(|e| Error::io(std::env::temp_dir(), e))?;
    pnm::write_pgm(tmp.path(), &ocr_input_image(region))?;
    let raw = adapter.recognize_file(tmp.path())?;
    let words = filter_words(&raw);
    Ok(RecognizedText { region: region.clone(), raw, words })
}

/// Text-to-speech engine. `"null"` prints the script entries instead.
#[derive(Clone, Debug, PartialEq)]
pub enum TtsAdapter {
    Null,
    Command(String),
}

impl TtsAdapter {
    pub fn from_config(command: &str) -> Result<Self> {
        if command.trim() == "null" {
            return Ok(TtsAdapter::Null);
        }
        check_template(command)?;
        Ok(TtsAdapter::Command(command.to_string()))
    }
}

pub fn speak(adapter: &TtsAdapter, script: &SpeechScript, script_path: &Path) -> Result<()> {
    speak_to(adapter, script, script_path, &mut std::io::stdout().lock())
}

pub fn speak_to(adapter: &TtsAdapter, script: &SpeechScript, script_path: &Path, out: &mut dyn Write) -> Result<()> {
    match adapter {
        TtsAdapter::Null => {
            for (id, text) in &script.entries {
                writeln!(out, "{id}: {text}").map_err(|e| Error::Tts { message: e.to_string(), status: None })?;
            }
            Ok(())
        }
        TtsAdapter::Command(template) => {
            let status = build_command(template, script_path)?
                .stdin(Stdio::null())
                .status()
                .map_err(|e| Error::Tts { message: format!("cannot start {template:?}: {e}"), status: None })?;
            if status.success() {
                Ok(())
            } else {
                Err(Error::Tts { message: format!("speech engine exited with {status}"), status: status.code() })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn word_filter_example() {
        assert_eq!(filter_words("MILK 2% fat"), vec!["MILK", "fat"]);
        assert!(filter_words("").is_empty());
        assert_eq!(filter_words("\"Hello,\" (world)!"), vec!["Hello", "world"]);
    }

    #[test]
    fn template_needs_one_placeholder() {
        assert!(OcrAdapter::new("tesseract {input} stdout", Duration::from_secs(1)).is_ok());
        assert!(OcrAdapter::new("tesseract stdout", Duration::from_secs(1)).is_err());
        assert!(OcrAdapter::new("cat {input} {input}", Duration::from_secs(1)).is_err());
        assert_eq!(TtsAdapter::from_config("null").unwrap(), TtsAdapter::Null);
    }

    proptest! {
        #[test]
        fn filter_is_idempotent(raw in "[a-zA-Z0-9%,.!? ]{0,60}") {
            let once = filter_words(&raw);
            prop_assert!(once.iter().all(|w| w.chars().count() >= 3));
            prop_assert_eq!(filter_words(&once.join(" ")), once);
        }
    }
}
