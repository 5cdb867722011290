//! Labeled comment datasets, stratified splits and stratified K-fold
//! partitions.
//!
//! Texts are NFC-normalized when loaded. Every random operation takes an
//! explicit seed and is a pure function of its inputs.

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Binary sarcasm label. Serialized as the integers 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub enum Label {
    NonSarcastic,
    Sarcastic,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::NonSarcastic, Label::Sarcastic];

    pub fn index(self) -> usize {
        match self {
            Label::NonSarcastic => 0,
            Label::Sarcastic => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::NonSarcastic),
            1 => Some(Label::Sarcastic),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Sarcastic
    }
}

impl TryFrom<i64> for Label {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            0 => Ok(Label::NonSarcastic),
            1 => Ok(Label::Sarcastic),
            other => Err(Error::InvalidLabel(other)),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.index() as u8
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledComment {
    pub text: String,
    pub label: Label,
}

impl LabeledComment {
    /// Builds a record, NFC-normalizing the text. Fails if the text is blank.
    pub fn new(text: &str, label: Label) -> Result<Self> {
        let text: String = text.nfc().collect();
        if text.trim().is_empty() {
            return Err(Error::precondition("comment text is empty"));
        }
        Ok(LabeledComment { text, label })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub total: usize,
    /// Indexed by [`Label::index`].
    pub per_class: [usize; 2],
}

impl ClassCounts {
    pub fn of(&self, label: Label) -> usize {
        self.per_class[label.index()]
    }

    pub fn minority(&self) -> usize {
        self.per_class[0].min(self.per_class[1])
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub name: String,
    pub records: Vec<LabeledComment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    /// Guesses the format from a file extension (`.jsonl`/`.ndjson` vs. anything else).
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => DataFormat::Jsonl,
            _ => DataFormat::Csv,
        }
    }
}

impl Dataset {
    pub fn new(name: impl Into<String>, records: Vec<LabeledComment>) -> Self {
        Dataset {
            name: name.into(),
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn summary(&self) -> ClassCounts {
        let mut per_class = [0usize; 2];
        for r in &self.records {
            per_class[r.label.index()] += 1;
        }
        ClassCounts {
            total: self.records.len(),
            per_class,
        }
    }

    pub fn texts(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.text.as_str()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Sub-dataset with the records at `indices`, in the given order.
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Dataset {
        Dataset {
            name: name.into(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Record indices grouped by class, in file order.
    pub fn class_indices(&self) -> [Vec<usize>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for (i, r) in self.records.iter().enumerate() {
            out[r.label.index()].push(i);
        }
        out
    }
}

#[derive(Deserialize)]
struct CsvRow {
    text: String,
    label: String,
}

#[derive(Deserialize)]
struct JsonRow {
    text: String,
    label: i64,
}

/// Loads a dataset. CSV files need a `text,label` header; JSONL files hold
/// one `{"text": ..., "label": ...}` object per line. Row numbers in errors
/// are 1-based data rows (the CSV header is not counted).
pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    let records = match format {
        DataFormat::Csv => parse_csv(path, &raw)?,
        DataFormat::Jsonl => parse_jsonl(path, &raw)?,
    };
    Ok(Dataset { name, records })
}

fn row_error(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::InvalidRow {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

fn make_record(path: &Path, row: usize, text: &str, label: i64) -> Result<LabeledComment> {
    let label = Label::try_from(label).map_err(|e| row_error(path, row, e.to_string()))?;
    LabeledComment::new(text, label).map_err(|_| row_error(path, row, "empty text"))
}

fn parse_csv(path: &Path, raw: &str) -> Result<Vec<LabeledComment>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(raw.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<CsvRow>().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| row_error(path, row_no, e.to_string()))?;
        let label: i64 = row
            .label
            .trim()
            .parse()
            .map_err(|_| row_error(path, row_no, format!("invalid label {:?}", row.label)))?;
        out.push(make_record(path, row_no, &row.text, label)?);
    }
    Ok(out)
}

fn parse_jsonl(path: &Path, raw: &str) -> Result<Vec<LabeledComment>> {
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row_no = i + 1;
        let row: JsonRow = serde_json::from_str(line).map_err(|e| row_error(path, row_no, e.to_string()))?;
        out.push(make_record(path, row_no, &row.text, row.label)?);
    }
    Ok(out)
}

/// Writes a dataset as `text,label` CSV.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    let io = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
    w.write_record(["text", "label"]).map_err(io)?;
    for r in &d.records {
        w.write_record([r.text.as_str(), &r.label.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Train/validation/test fractions plus the shuffling seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64, seed: u64) -> Result<Self> {
        let s = SplitSpec {
            train_fraction: train,
            val_fraction: val,
            test_fraction: test,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.fractions();
        if f.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
            return Err(Error::config(format!("split fractions must lie in (0,1), got {f:?}")));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("split fractions must sum to 1, got {sum}")));
        }
        Ok(())
    }

    pub fn fractions(&self) -> [f64; 3] {
        [self.train_fraction, self.val_fraction, self.test_fraction]
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.6,
            val_fraction: 0.2,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Apportions `n` items over `fractions` with the largest-remainder method.
/// Remainder ties go to the earlier part.
pub fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Record indices of each partition, each list in ascending (file) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn stratified_split_indices(d: &Dataset, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    let by_class = d.class_indices();
    for (c, idx) in by_class.iter().enumerate() {
        if idx.len() < 3 {
            return Err(Error::precondition(format!(
                "class {c} has {} records; a stratified split needs at least 3",
                idx.len()
            )));
        }
    }
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (c, idx) in by_class.iter().enumerate() {
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut rng_for(spec.seed, c as u64));
        let sizes = apportion(shuffled.len(), &spec.fractions());
        let mut offset = 0;
        for (p, size) in sizes.iter().enumerate() {
            parts[p].extend_from_slice(&shuffled[offset..offset + size]);
            offset += size;
        }
    }
    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    let [train, val, test] = parts;
    Ok(SplitIndices { train, val, test })
}

/// Splits a dataset into train/validation/test parts that preserve the class
/// proportions. Per-class part sizes come from largest-remainder rounding, so
/// every part is within one record of its exact quota for every class.
pub fn stratified_split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let idx = stratified_split_indices(d, spec)?;
    Ok((
        d.subset(format!("{}-train", d.name), &idx.train),
        d.subset(format!("{}-val", d.name), &idx.val),
        d.subset(format!("{}-test", d.name), &idx.test),
    ))
}

/// Fold index per record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    /// (training indices, held-out indices) for fold `fold`.
    pub fn train_test(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.fold_of.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }

    /// counts[fold][class]
    pub fn class_counts(&self, d: &Dataset) -> Vec<[usize; 2]> {
        let mut counts = vec![[0usize; 2]; self.k];
        for (r, &f) in d.records.iter().zip(&self.fold_of) {
            counts[f][r.label.index()] += 1;
        }
        counts
    }
}

/// Stratified K-fold assignment: each class is shuffled and dealt round-robin
/// over the folds. The starting fold of each class continues where the
/// previous class stopped so that fold totals also stay balanced.
pub fn stratified_kfold(d: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::precondition(format!("k must be at least 2, got {k}")));
    }
    let by_class = d.class_indices();
    let minority = by_class.iter().map(Vec::len).min().unwrap_or(0);
    if minority < k {
        return Err(Error::precondition(format!(
            "k = {k} exceeds the minority class count {minority}"
        )));
    }
    let mut fold_of = vec![0usize; d.len()];
    let mut start = 0usize;
    for (c, idx) in by_class.iter().enumerate() {
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut rng_for(seed, 100 + c as u64));
        for (j, &i) in shuffled.iter().enumerate() {
            fold_of[i] = (start + j) % k;
        }
        start = (start + shuffled.len()) % k;
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Two-component one-hot label vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotLabel(pub [u8; 2]);

pub fn one_hot(label: i64) -> Result<OneHotLabel> {
    let label = Label::try_from(label)?;
    let mut v = [0u8; 2];
    v[label.index()] = 1;
    Ok(OneHotLabel(v))
}

/// Seeded synthetic corpus whose class is decided by marker tokens.
///
/// Each document mixes 3 to 7 filler words shared by both classes with one or
/// two markers drawn from a class-specific list. About 60% of the documents
/// are non-sarcastic.
pub fn synthetic_marker_corpus(n: usize, seed: u64) -> Dataset {
    use rand::Rng;
    const FILLER: &[&str] = &[
        "ami", "tumi", "khub", "aaj", "bhai", "video", "desh", "manush", "kotha", "din", "team", "post",
    ];
    const MARK_POS: &[&str] = &["wahre", "osadharon", "bahh", "jiniyas", "dhonnobad_bhai"];
    const MARK_NEG: &[&str] = &["shotti", "bhalo", "shundor", "shikhlam", "tothyo"];
    let mut rng = rng_for(seed, 7);
    let records = (0..n)
        .map(|_| {
            let label = if rng.random_bool(0.4) {
                Label::Sarcastic
            } else {
                Label::NonSarcastic
            };
            let markers = if label.is_positive() { MARK_POS } else { MARK_NEG };
            let mut words: Vec<&str> = (0..rng.random_range(3..=7))
                .map(|_| FILLER[rng.random_range(0..FILLER.len())])
                .collect();
            for _ in 0..rng.random_range(1..=2) {
                let pos = rng.random_range(0..=words.len());
                words.insert(pos, markers[rng.random_range(0..markers.len())]);
            }
            LabeledComment {
                text: words.join(" "),
                label,
            }
        })
        .collect();
    Dataset::new("synthetic", records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn ds(counts: [usize; 2]) -> Dataset {
        let mut records = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                records.push(LabeledComment {
                    text: format!("doc {c} {i}"),
                    label: Label::from_index(c).unwrap(),
                });
            }
        }
        Dataset::new("t", records)
    }

    fn write_tmp(contents: &str, suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_small_csv() {
        let f = write_tmp("text,label\nfirst,0\n\"second, quoted\",1\nthird,0\n", ".csv");
        let d = load_dataset(f.path(), DataFormat::Csv).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.summary().per_class, [2, 1]);
        assert_eq!(d.records[1].text, "second, quoted");
    }

    #[test]
    fn bad_label_names_row() {
        let f = write_tmp("text,label\na,0\nb,2\n", ".csv");
        let err = load_dataset(f.path(), DataFormat::Csv).unwrap_err();
        match err {
            Error::InvalidRow { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_text_rejected() {
        let f = write_tmp(
            "{\"text\":\"ok\",\"label\":1}\n{\"text\":\"   \",\"label\":0}\n",
            ".jsonl",
        );
        let err = load_dataset(f.path(), DataFormat::Jsonl).unwrap_err();
        assert!(matches!(err, Error::InvalidRow { row: 2, .. }), "{err}");
    }

    #[test]
    fn missing_file() {
        let err = load_dataset("/nonexistent/file.csv", DataFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn nfc_normalized_on_load() {
        // "e" + combining acute
        let f = write_tmp("{\"text\":\"cafe\\u0301\",\"label\":0}\n", ".jsonl");
        let d = load_dataset(f.path(), DataFormat::Jsonl).unwrap();
        assert_eq!(d.records[0].text, "caf\u{e9}");
    }

    #[test]
    fn banglasarc_sized_summary() {
        let d = ds([3159, 1951]);
        let s = d.summary();
        assert_eq!(s.total, 5110);
        assert_eq!(s.per_class, [3159, 1951]);
    }

    #[test]
    fn split_counts_match_quota() {
        let d = ds([60, 40]);
        let spec = SplitSpec::new(0.6, 0.2, 0.2, 3).unwrap();
        let (train, val, test) = stratified_split(&d, &spec).unwrap();
        assert_eq!(train.summary().per_class, [36, 24]);
        assert_eq!(val.summary().per_class, [12, 8]);
        assert_eq!(test.summary().per_class, [12, 8]);
        let again = stratified_split(&d, &spec).unwrap();
        assert_eq!(again.0, train);
        assert_eq!(again.2, test);
    }

    #[test]
    fn split_requires_three_per_class() {
        let d = ds([10, 1]);
        assert!(stratified_split(&d, &SplitSpec::default()).is_err());
    }

    #[test]
    fn split_rejects_bad_fractions() {
        assert!(SplitSpec::new(0.5, 0.2, 0.2, 0).is_err());
        assert!(SplitSpec::new(1.0, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn kfold_one_per_class_per_fold() {
        let d = ds([5, 5]);
        let f = stratified_kfold(&d, 5, 1).unwrap();
        for counts in f.class_counts(&d) {
            assert_eq!(counts, [1, 1]);
        }
    }

    #[test]
    fn kfold_preconditions() {
        assert!(stratified_kfold(&ds([5, 5]), 1, 0).is_err());
        assert!(stratified_kfold(&ds([4, 2]), 3, 0).is_err());
    }

    #[test]
    fn one_hot_values() {
        assert_eq!(one_hot(0).unwrap().0, [1, 0]);
        assert_eq!(one_hot(1).unwrap().0, [0, 1]);
        assert!(one_hot(2).is_err());
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(3, &[0.6, 0.2, 0.2]), vec![2, 1, 0]);
        assert_eq!(apportion(7, &[0.6, 0.2, 0.2]), vec![4, 2, 1]);
    }

    proptest! {
        #[test]
        fn split_partitions_dataset(n0 in 3usize..80, n1 in 3usize..80, seed in any::<u64>()) {
            let d = ds([n0, n1]);
            let spec = SplitSpec::new(0.6, 0.2, 0.2, seed).unwrap();
            let idx = stratified_split_indices(&d, &spec).unwrap();
            let mut all: Vec<usize> = idx.train.iter().chain(&idx.val).chain(&idx.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..d.len()).collect::<Vec<_>>());
            for (part, frac) in [&idx.train, &idx.val, &idx.test].iter().zip(spec.fractions()) {
                for (c, n) in [n0, n1].iter().enumerate() {
                    let got = part.iter().filter(|&&i| d.records[i].label.index() == c).count() as f64;
                    prop_assert!((got - frac * *n as f64).abs() <= 1.0);
                }
            }
        }

        #[test]
        fn kfold_balanced(n0 in 2usize..60, n1 in 2usize..60, k in 2usize..6, seed in any::<u64>()) {
            prop_assume!(n0.min(n1) >= k);
            let d = ds([n0, n1]);
            let f = stratified_kfold(&d, k, seed).unwrap();
            let counts = f.class_counts(&d);
            for c in 0..2 {
                let max = counts.iter().map(|x| x[c]).max().unwrap();
                let min = counts.iter().map(|x| x[c]).min().unwrap();
                prop_assert!(max - min <= 1);
                prop_assert!(min >= 1);
            }
            prop_assert_eq!(f, stratified_kfold(&d, k, seed).unwrap());
        }
    }
}
