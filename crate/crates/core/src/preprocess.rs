//! Comment cleaning: emoji removal, whitespace tokenization, stopword
//! removal and punctuation stripping, applied in that order.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

static PUNCTUATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{P}+").unwrap());

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_bn.txt");

/// Inclusive codepoint interval. Serialized as a pair of hex strings,
/// e.g. `["1F600", "1F64F"]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CodepointRange {
    pub start: u32,
    pub end: u32,
}

impl CodepointRange {
    pub const fn new(start: u32, end: u32) -> Self {
        CodepointRange { start, end }
    }

    pub fn contains(&self, c: char) -> bool {
        (self.start..=self.end).contains(&(c as u32))
    }
}

impl fmt::Display for CodepointRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U+{:04X}..U+{:04X}", self.start, self.end)
    }
}

impl Serialize for CodepointRange {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [format!("{:04X}", self.start), format!("{:04X}", self.end)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for CodepointRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [a, b] = <[String; 2]>::deserialize(d)?;
        let parse = |s: &str| {
            let s = s.trim_start_matches("U+").trim_start_matches("0x");
            u32::from_str_radix(s, 16).map_err(serde::de::Error::custom)
        };
        Ok(CodepointRange::new(parse(&a)?, parse(&b)?))
    }
}

/// Emoji presentation blocks removed by default.
pub const DEFAULT_EMOJI_RANGES: &[CodepointRange] = &[
    CodepointRange::new(0x20E3, 0x20E3),   // combining enclosing keycap
    CodepointRange::new(0x2600, 0x26FF),   // miscellaneous symbols
    CodepointRange::new(0x2700, 0x27BF),   // dingbats
    CodepointRange::new(0xFE0F, 0xFE0F),   // emoji presentation selector
    CodepointRange::new(0x1F1E6, 0x1F1FF), // regional indicators (flags)
    CodepointRange::new(0x1F300, 0x1F5FF), // misc symbols and pictographs
    CodepointRange::new(0x1F600, 0x1F64F), // emoticons
    CodepointRange::new(0x1F680, 0x1F6FF), // transport and map
    CodepointRange::new(0x1F900, 0x1F9FF), // supplemental symbols and pictographs
    CodepointRange::new(0x1FA70, 0x1FAFF), // symbols and pictographs extended-A
];

/// Parses a stopword list: one token per line, blank lines and lines
/// starting with `#` ignored.
pub fn parse_stopwords(contents: &str) -> BTreeSet<String> {
    contents
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn load_stopwords(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&raw))
}

pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    stopwords: BTreeSet<String>,
    emoji_ranges: Vec<CodepointRange>,
    strip_punctuation: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stopwords: default_stopwords(),
            emoji_ranges: DEFAULT_EMOJI_RANGES.to_vec(),
            strip_punctuation: true,
        }
    }
}

/// On-disk form of [`PipelineConfig`]. Stopwords may be given inline, as a
/// file path (relative paths resolve against the config file's directory),
/// or omitted to use the bundled Bangla list.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineConfigFile {
    stopwords: Option<Vec<String>>,
    stopwords_file: Option<String>,
    emoji_ranges: Option<Vec<CodepointRange>>,
    strip_punctuation: Option<bool>,
}

impl<'de> Deserialize<'de> for PipelineConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = PipelineConfigFile::deserialize(d)?;
        if file.stopwords_file.is_some() {
            return Err(serde::de::Error::custom(
                "stopwords_file must be resolved with PipelineConfig::from_json_file",
            ));
        }
        PipelineConfig::from_file_form(file, None).map_err(serde::de::Error::custom)
    }
}

impl PipelineConfig {
    pub fn new(
        stopwords: BTreeSet<String>,
        emoji_ranges: Vec<CodepointRange>,
        strip_punctuation: bool,
    ) -> Result<Self> {
        let mut sorted = emoji_ranges;
        sorted.sort();
        for r in &sorted {
            if r.start > r.end {
                return Err(Error::config(format!("emoji range {r} is reversed")));
            }
        }
        for w in sorted.windows(2) {
            if w[0].end >= w[1].start {
                return Err(Error::config(format!("emoji ranges {} and {} overlap", w[0], w[1])));
            }
        }
        Ok(PipelineConfig {
            stopwords,
            emoji_ranges: sorted,
            strip_punctuation,
        })
    }

    /// Default emoji ranges and punctuation stripping with the given stopwords.
    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        PipelineConfig {
            stopwords: words.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    fn from_file_form(file: PipelineConfigFile, base: Option<&Path>) -> Result<Self> {
        let mut stopwords = match (&file.stopwords, &file.stopwords_file) {
            (Some(_), Some(_)) => return Err(Error::config("give either `stopwords` or `stopwords_file`, not both")),
            (Some(list), None) => list.iter().cloned().collect(),
            (None, Some(p)) => {
                let p = Path::new(p);
                let p = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.to_path_buf(),
                };
                load_stopwords(p)?
            }
            (None, None) => default_stopwords(),
        };
        stopwords.retain(|w| !w.trim().is_empty());
        PipelineConfig::new(
            stopwords,
            file.emoji_ranges.unwrap_or_else(|| DEFAULT_EMOJI_RANGES.to_vec()),
            file.strip_punctuation.unwrap_or(true),
        )
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: PipelineConfigFile = serde_json::from_str(&raw)?;
        PipelineConfig::from_file_form(file, path.parent())
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn emoji_ranges(&self) -> &[CodepointRange] {
        &self.emoji_ranges
    }

    pub fn strips_punctuation(&self) -> bool {
        self.strip_punctuation
    }

    pub fn is_emoji(&self, c: char) -> bool {
        let cp = c as u32;
        // ranges are sorted and disjoint
        let i = self.emoji_ranges.partition_point(|r| r.end < cp);
        self.emoji_ranges.get(i).is_some_and(|r| r.contains(c))
    }
}

/// Ordered, non-empty, whitespace-free tokens of one comment.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    /// Keeps only the tokens that are non-empty and whitespace-free.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSequence(
            tokens
                .into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty() && !t.chars().any(char::is_whitespace))
                .collect(),
        )
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

pub fn remove_emoji(text: &str, cfg: &PipelineConfig) -> String {
    text.chars().filter(|&c| !cfg.is_emoji(c)).collect()
}

/// Splits on Unicode whitespace. ASCII letters are lowercased; other scripts
/// are left untouched.
pub fn tokenize(text: &str) -> TokenSequence {
    TokenSequence(text.split_whitespace().map(str::to_ascii_lowercase).collect())
}

/// Deletes stopword tokens. When the config strips punctuation, a token also
/// counts as a stopword if it becomes one once its punctuation is removed, so
/// `"ami!"` is dropped along with `"ami"` and no stopword survives the
/// pipeline.
pub fn remove_stopwords(t: &TokenSequence, cfg: &PipelineConfig) -> TokenSequence {
    let is_stop = |tok: &str| {
        cfg.stopwords.contains(tok)
            || (cfg.strip_punctuation && cfg.stopwords.contains(PUNCTUATION.replace_all(tok, "").as_ref()))
    };
    TokenSequence(t.0.iter().filter(|tok| !is_stop(tok)).cloned().collect())
}

/// Removes Unicode punctuation (general categories P*) from every token and
/// drops tokens left empty.
pub fn strip_punctuation(t: &TokenSequence) -> TokenSequence {
    TokenSequence(
        t.0.iter()
            .map(|tok| PUNCTUATION.replace_all(tok, "").into_owned())
            .filter(|tok| !tok.is_empty())
            .collect(),
    )
}

pub fn preprocess(text: &str, cfg: &PipelineConfig) -> TokenSequence {
    let tokens = remove_stopwords(&tokenize(&remove_emoji(text, cfg)), cfg);
    if cfg.strip_punctuation {
        strip_punctuation(&tokens)
    } else {
        tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(v: &[&str]) -> TokenSequence {
        TokenSequence::from_tokens(v.iter().copied())
    }

    #[test]
    fn emoji_removed() {
        let cfg = PipelineConfig::default();
        assert_eq!(remove_emoji("ha ha \u{1F602}", &cfg), "ha ha ");
        assert_eq!(remove_emoji("valo lagse", &cfg), "valo lagse");
        assert_eq!(remove_emoji("\u{1F602}\u{1F680}\u{1F1E7}", &cfg), "");
    }

    #[test]
    fn bangla_joiners_survive_emoji_removal() {
        let cfg = PipelineConfig::default();
        let s = "র\u{200D}্য";
        assert_eq!(remove_emoji(s, &cfg), s);
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("ki darun  bepar"), toks(&["ki", "darun", "bepar"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("one\ttwo\nthree"), toks(&["one", "two", "three"]));
        assert_eq!(tokenize("Darun BHAI"), toks(&["darun", "bhai"]));
    }

    #[test]
    fn stopword_examples() {
        let cfg = PipelineConfig::with_stopwords(["ami"]);
        let t = toks(&["ami", "khub", "khushi"]);
        assert_eq!(remove_stopwords(&t, &cfg), toks(&["khub", "khushi"]));
        let empty = PipelineConfig::with_stopwords(Vec::<String>::new());
        assert_eq!(remove_stopwords(&t, &empty), t);
        let all = PipelineConfig::with_stopwords(["ami", "khub", "khushi"]);
        assert!(remove_stopwords(&t, &all).is_empty());
    }

    #[test]
    fn punctuation_examples() {
        assert_eq!(strip_punctuation(&toks(&["darun!!", "..."])), toks(&["darun"]));
        assert_eq!(strip_punctuation(&toks(&["no-punct"])), toks(&["nopunct"]));
        assert!(strip_punctuation(&toks(&["।"])).is_empty());
    }

    #[test]
    fn punctuated_stopword_removed() {
        let cfg = PipelineConfig::with_stopwords(["ami"]);
        assert_eq!(preprocess("ami! darun", &cfg), toks(&["darun"]));
        let keep = PipelineConfig::new(cfg.stopwords().clone(), vec![], false).unwrap();
        assert_eq!(preprocess("ami! darun", &keep), toks(&["ami!", "darun"]));
    }

    #[test]
    fn emoji_and_stopwords_only() {
        let cfg = PipelineConfig::with_stopwords(["ami", "tumi"]);
        assert!(preprocess("ami \u{1F602} tumi \u{1F923}", &cfg).is_empty());
    }

    #[test]
    fn bundled_bangla_stopwords_apply() {
        let cfg = PipelineConfig::default();
        let out = preprocess("আমি খুব খুশি!", &cfg);
        assert_eq!(out, toks(&["খুশি"]));
    }

    #[test]
    fn overlapping_ranges_rejected() {
        let r = PipelineConfig::new(
            BTreeSet::new(),
            vec![CodepointRange::new(10, 20), CodepointRange::new(15, 30)],
            true,
        );
        assert!(r.is_err());
    }

    #[test]
    fn config_file_with_hex_ranges() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("stop.txt"), "# comment\nami\n\ntumi\n").unwrap();
        let cfg_path = dir.path().join("pre.json");
        std::fs::write(
            &cfg_path,
            r#"{"stopwords_file": "stop.txt", "emoji_ranges": [["1F600", "1F64F"]]}"#,
        )
        .unwrap();
        let cfg = PipelineConfig::from_json_file(&cfg_path).unwrap();
        assert_eq!(cfg.stopwords().len(), 2);
        assert!(cfg.is_emoji('\u{1F602}'));
        assert!(!cfg.is_emoji('\u{1F680}'));
        let echoed = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&echoed).unwrap();
        assert_eq!(back, cfg);
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        let pieces = prop::sample::select(vec![
            "ami",
            "Tumi",
            "khub",
            "darun!",
            "।",
            "\u{1F602}",
            " ",
            "\t",
            "no-punct",
            "বাহ",
            "আমি",
            "...",
            "\u{1F680}x",
            "?!",
            "ভালো,",
            "\n",
            "a.b",
            "\u{2764}\u{FE0F}",
        ]);
        prop::collection::vec(pieces, 0..16).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn preprocess_is_composition(text in text_strategy()) {
            let cfg = PipelineConfig::with_stopwords(["ami", "khub", "আমি"]);
            let step = strip_punctuation(&remove_stopwords(&tokenize(&remove_emoji(&text, &cfg)), &cfg));
            prop_assert_eq!(preprocess(&text, &cfg), step);
        }

        #[test]
        fn preprocess_idempotent_on_joined_output(text in text_strategy()) {
            let cfg = PipelineConfig::with_stopwords(["ami", "khub", "আমি"]);
            let once = preprocess(&text, &cfg);
            prop_assert_eq!(preprocess(&once.join(), &cfg), once);
        }

        #[test]
        fn no_new_codepoints_and_never_longer(text in text_strategy()) {
            let cfg = PipelineConfig::default();
            let out = preprocess(&text, &cfg);
            let lowered = text.to_ascii_lowercase();
            for c in out.iter().flat_map(str::chars) {
                prop_assert!(lowered.contains(c));
            }
            prop_assert!(out.len() <= tokenize(&text).len());
            for tok in out.iter() {
                prop_assert!(!tok.is_empty());
                prop_assert!(!tok.chars().any(char::is_whitespace));
                prop_assert!(!cfg.stopwords().contains(tok));
            }
        }

        #[test]
        fn tokenize_round_trips_whitespace(text in text_strategy()) {
            let joined = tokenize(&text).join();
            let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ").to_ascii_lowercase();
            prop_assert_eq!(joined, normalized);
        }
    }
}
