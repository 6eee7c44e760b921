use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::adapters::RecognizedText;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Prosody {
    /// -10..=10
    pub rate: i32,
    /// 0..=100
    pub volume: i32,
    /// -10..=10, passed through to the engine as is.
    pub tone: i32,
}

impl Default for Prosody {
    fn default() -> Self {
        Prosody { rate: 0, volume: 80, tone: 0 }
    }
}

impl Prosody {
    pub fn validate(&self) -> Result<()> {
        if !(-10..=10).contains(&self.rate) {
            return Err(Error::Parameter(format!("speech rate must be in -10..=10, got {}", self.rate)));
        }
        if !(0..=100).contains(&self.volume) {
            return Err(Error::Parameter(format!("speech volume must be in 0..=100, got {}", self.volume)));
        }
        if !(-10..=10).contains(&self.tone) {
            return Err(Error::Parameter(format!("speech tone must be in -10..=10, got {}", self.tone)));
        }
        Ok(())
    }
}

/// Recognized words in reading order plus prosody settings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpeechScript {
    /// `(region id, words joined by single spaces)`.
    pub entries: Vec<(usize, String)>,
    pub prosody: Prosody,
}

impl SpeechScript {
    /// Orders regions top-to-bottom then left-to-right; region ids are
    /// positions in that order. Regions without words are left out.
    pub fn build(texts: &[RecognizedText], prosody: Prosody) -> Result<Self> {
        prosody.validate()?;
        let mut order: Vec<&RecognizedText> = texts.iter().collect();
        order.sort_by_key(|t| (t.region.bbox.y, t.region.bbox.x, t.region.bbox.h, t.region.bbox.w));
        let entries = order
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.words.is_empty())
            .map(|(id, t)| (id, t.words.join(" ")))
            .collect();
        Ok(SpeechScript { entries, prosody })
    }

    pub fn render(&self) -> String {
        let mut s = format!("#rate {}\n#volume {}\n#tone {}\n", self.prosody.rate, self.prosody.volume, self.prosody.tone);
        for (id, text) in &self.entries {
            let _ = writeln!(s, "{id}: {text}");
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().flat_map(|(_, t)| t.split(' '))
    }
}

/// Builds the script and writes it to `path`.
pub fn emit_script(texts: &[RecognizedText], prosody: Prosody, path: impl AsRef<Path>) -> Result<SpeechScript> {
    let script = SpeechScript::build(texts, prosody)?;
    script.write(path)?;
    Ok(script)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{BinaryMask, Rect};
    use crate::readout::TextRegion;

    fn text(x: u32, y: u32, words: &[&str]) -> RecognizedText {
        let bbox = Rect::new(x, y, 10, 10);
        RecognizedText {
            region: TextRegion { bbox, padded: bbox, binarized: BinaryMask::new(10, 10) },
            raw: words.join(" "),
            words: words.iter().map(|w| w.to_string()).collect(),
        }
    }

    #[test]
    fn single_region_script() {
        let s = SpeechScript::build(&[text(0, 0, &["MILK"])], Prosody::default()).unwrap();
        assert_eq!(s.render(), "#rate 0\n#volume 80\n#tone 0\n0: MILK\n");
    }

    #[test]
    fn empty_script_is_header_only() {
        let s = SpeechScript::build(&[], Prosody::default()).unwrap();
        assert_eq!(s.render().lines().count(), 3);
    }

    #[test]
    fn reading_order_is_top_first() {
        let s = SpeechScript::build(&[text(0, 50, &["LOWER"]), text(40, 5, &["UPPER"])], Prosody::default()).unwrap();
        assert_eq!(s.entries, vec![(0, "UPPER".to_string()), (1, "LOWER".to_string())]);
    }

    #[test]
    fn wordless_regions_are_skipped() {
        let s = SpeechScript::build(&[text(0, 0, &[]), text(0, 20, &["ONE", "TWO"])], Prosody::default()).unwrap();
        assert_eq!(s.entries, vec![(1, "ONE TWO".to_string())]);
    }

    #[test]
    fn prosody_ranges() {
        assert!(Prosody { rate: 11, ..Prosody::default() }.validate().is_err());
        assert!(Prosody { volume: -1, ..Prosody::default() }.validate().is_err());
        assert!(Prosody { tone: -10, rate: -10, volume: 100 }.validate().is_ok());
    }
}
