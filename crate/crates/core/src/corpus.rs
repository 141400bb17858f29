//! Affect-in-tweets task files.
//!
//! Five subtasks share one tab-separated layout family: emotion-intensity
//! regression and ordinal classification (one file per emotion), valence
//! regression and ordinal classification, and 11-label multi-label
//! emotion classification. Text is kept exactly as read; preprocessing is a
//! separate pass.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four emotions of the intensity subtasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Fear,
    Joy,
    Sadness,
}

impl Emotion {
    pub const ALL: [Emotion; 4] = [Emotion::Anger, Emotion::Fear, Emotion::Joy, Emotion::Sadness];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "anger" => Ok(Emotion::Anger),
            "fear" => Ok(Emotion::Fear),
            "joy" => Ok(Emotion::Joy),
            "sadness" => Ok(Emotion::Sadness),
            other => Err(Error::InvalidInput(format!("unknown emotion `{other}`"))),
        }
    }
}

/// Canonical label order of the multi-label subtask. Column order in E-c
/// files and bit order in [`LabelSet`].
pub const EC_LABELS: [&str; 11] = [
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "love",
    "optimism",
    "pessimism",
    "sadness",
    "surprise",
    "trust",
];

/// Subtask identifier. The emotion is carried only by the EI variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TaskKind {
    EiReg(Emotion),
    EiOc(Emotion),
    VReg,
    VOc,
    Ec,
}

/// A task without its emotion, e.g. `EI-reg`. Used where several per-emotion
/// datasets are handled together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskFamily {
    EiReg,
    EiOc,
    VReg,
    VOc,
    Ec,
}

impl TaskFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskFamily::EiReg => "EI-reg",
            TaskFamily::EiOc => "EI-oc",
            TaskFamily::VReg => "V-reg",
            TaskFamily::VOc => "V-oc",
            TaskFamily::Ec => "E-c",
        }
    }

    /// Attach an emotion. Fails for EI families without one, and for the
    /// other families when one is supplied.
    pub fn with_emotion(self, emotion: Option<Emotion>) -> Result<TaskKind> {
        match (self, emotion) {
            (TaskFamily::EiReg, Some(e)) => Ok(TaskKind::EiReg(e)),
            (TaskFamily::EiOc, Some(e)) => Ok(TaskKind::EiOc(e)),
            (TaskFamily::VReg, None) => Ok(TaskKind::VReg),
            (TaskFamily::VOc, None) => Ok(TaskKind::VOc),
            (TaskFamily::Ec, None) => Ok(TaskKind::Ec),
            (f, Some(e)) => Err(Error::InvalidInput(format!("task {} takes no emotion (got {e})", f.as_str()))),
            (f, None) => Err(Error::InvalidInput(format!("task {} requires an emotion", f.as_str()))),
        }
    }

    pub fn is_emotion_intensity(self) -> bool {
        matches!(self, TaskFamily::EiReg | TaskFamily::EiOc)
    }
}

impl fmt::Display for TaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ei-reg" => Ok(TaskFamily::EiReg),
            "ei-oc" => Ok(TaskFamily::EiOc),
            "v-reg" => Ok(TaskFamily::VReg),
            "v-oc" => Ok(TaskFamily::VOc),
            "e-c" => Ok(TaskFamily::Ec),
            other => Err(Error::InvalidInput(format!("unknown task `{other}`"))),
        }
    }
}

impl TaskKind {
    pub fn family(self) -> TaskFamily {
        match self {
            TaskKind::EiReg(_) => TaskFamily::EiReg,
            TaskKind::EiOc(_) => TaskFamily::EiOc,
            TaskKind::VReg => TaskFamily::VReg,
            TaskKind::VOc => TaskFamily::VOc,
            TaskKind::Ec => TaskFamily::Ec,
        }
    }

    pub fn emotion(self) -> Option<Emotion> {
        match self {
            TaskKind::EiReg(e) | TaskKind::EiOc(e) => Some(e),
            _ => None,
        }
    }

    pub fn is_regression(self) -> bool {
        matches!(self, TaskKind::EiReg(_) | TaskKind::VReg)
    }

    pub fn is_ordinal(self) -> bool {
        matches!(self, TaskKind::EiOc(_) | TaskKind::VOc)
    }

    /// Number of stored ordinal classes (`0..n`), if ordinal.
    pub fn ordinal_classes(self) -> Option<u8> {
        match self {
            TaskKind::EiOc(_) => Some(4),
            TaskKind::VOc => Some(7),
            _ => None,
        }
    }

    /// Offset subtracted from a file label to get the stored class.
    /// Valence classes `-3..=3` are stored as `0..=6`.
    fn ordinal_offset(self) -> i64 {
        match self {
            TaskKind::VOc => -3,
            _ => 0,
        }
    }

    /// File-level label (e.g. `-3` for V-oc) for a stored class.
    pub fn display_class(self, class: u8) -> i64 {
        class as i64 + self.ordinal_offset()
    }

    /// Value of the `Affect Dimension` column for this task.
    pub fn affect_dimension(self) -> &'static str {
        match self {
            TaskKind::EiReg(e) | TaskKind::EiOc(e) => e.as_str(),
            TaskKind::VReg | TaskKind::VOc => "valence",
            TaskKind::Ec => "",
        }
    }

    /// Official description text for an ordinal class label.
    pub fn class_description(self, class: u8) -> String {
        let label = self.display_class(class);
        match self {
            TaskKind::EiOc(e) => {
                let amount = match class {
                    0 => return format!("0: no {e} can be inferred"),
                    1 => "low",
                    2 => "moderate",
                    _ => "high",
                };
                format!("{label}: {amount} amount of {e} can be inferred")
            }
            TaskKind::VOc => {
                let state = match label {
                    3 => "very positive emotional state",
                    2 => "moderately positive emotional state",
                    1 => "slightly positive emotional state",
                    0 => "neutral or mixed emotional state",
                    -1 => "slightly negative emotional state",
                    -2 => "moderately negative emotional state",
                    _ => "very negative emotional state",
                };
                format!("{label}: {state} can be inferred")
            }
            _ => label.to_string(),
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.emotion() {
            Some(e) => write!(f, "{}:{e}", self.family()),
            None => write!(f, "{}", self.family()),
        }
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    /// Accepts `EI-reg:anger`, `EI-reg-anger`, `V-oc`, `E-c`, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((fam, emo)) = s.split_once(':') {
            return fam.parse::<TaskFamily>()?.with_emotion(Some(emo.parse()?));
        }
        if let Ok(fam) = s.parse::<TaskFamily>() {
            return fam.with_emotion(None);
        }
        if let Some((fam, emo)) = s.rsplit_once('-') {
            if let (Ok(fam), Ok(emo)) = (fam.parse::<TaskFamily>(), emo.parse::<Emotion>()) {
                return fam.with_emotion(Some(emo));
            }
        }
        Err(Error::InvalidInput(format!("unknown task `{s}`")))
    }
}

impl TryFrom<String> for TaskKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TaskKind> for String {
    fn from(t: TaskKind) -> String {
        t.to_string()
    }
}

/// The 11 E-c labels, one bit each in [`EC_LABELS`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LabelSet(u16);

impl LabelSet {
    pub const LEN: usize = EC_LABELS.len();

    pub fn empty() -> Self {
        LabelSet(0)
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.len() != Self::LEN {
            return Err(Error::DimensionMismatch {
                expected: Self::LEN,
                got: bits.len(),
            });
        }
        Ok(bits.iter().enumerate().fold(LabelSet(0), |acc, (i, &b)| {
            if b {
                LabelSet(acc.0 | (1 << i))
            } else {
                acc
            }
        }))
    }

    pub fn from_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut set = LabelSet(0);
        for name in names {
            let idx = EC_LABELS
                .iter()
                .position(|l| *l == name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown E-c label `{name}`")))?;
            set.set(idx, true);
        }
        Ok(set)
    }

    pub fn get(self, idx: usize) -> bool {
        self.0 & (1 << idx) != 0
    }

    pub fn set(&mut self, idx: usize, on: bool) {
        assert!(idx < Self::LEN, "label index {idx} out of range");
        if on {
            self.0 |= 1 << idx;
        } else {
            self.0 &= !(1 << idx);
        }
    }

    pub fn bits(self) -> [bool; 11] {
        std::array::from_fn(|i| self.get(i))
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn intersection_len(self, other: LabelSet) -> usize {
        (self.0 & other.0).count_ones() as usize
    }

    pub fn union_len(self, other: LabelSet) -> usize {
        (self.0 | other.0).count_ones() as usize
    }
}

/// Gold value for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// Intensity in `[0, 1]`.
    Scalar(f64),
    /// Stored ordinal class, always non-negative (see [`TaskKind::display_class`]).
    Ordinal(u8),
    LabelSet(LabelSet),
}

impl Target {
    /// Numeric regression target for single-output tasks. `None` for label sets.
    pub fn as_numeric(&self) -> Option<f64> {
        match *self {
            Target::Scalar(v) => Some(v),
            Target::Ordinal(c) => Some(c as f64),
            Target::LabelSet(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub text: String,
    /// `None` for unlabeled test rows.
    pub target: Option<Target>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    Merged,
}

/// Samples of one task, in file order, with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    task: TaskKind,
    split: Split,
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(task: TaskKind, split: Split, samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.id.is_empty() {
                return Err(Error::InvalidInput("sample with empty id".into()));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate sample id `{}`", s.id)));
            }
            if let Some(t) = &s.target {
                check_target(task, t).map_err(|m| Error::InvalidInput(format!("sample `{}`: {m}", s.id)))?;
            }
        }
        Ok(Dataset { task, split, samples })
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Targets of every sample, failing if any sample is unlabeled.
    pub fn targets(&self) -> Result<Vec<Target>> {
        self.samples
            .iter()
            .map(|s| {
                s.target
                    .ok_or_else(|| Error::InvalidInput(format!("sample `{}` has no gold target", s.id)))
            })
            .collect()
    }

    /// Restrict to the given positions, keeping their order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            task: self.task,
            split: self.split,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Same samples with the targets replaced.
    pub fn with_targets(&self, targets: &[Option<Target>]) -> Result<Dataset> {
        if targets.len() != self.samples.len() {
            return Err(Error::DimensionMismatch {
                expected: self.samples.len(),
                got: targets.len(),
            });
        }
        let samples = self
            .samples
            .iter()
            .zip(targets)
            .map(|(s, t)| Sample {
                id: s.id.clone(),
                text: s.text.clone(),
                target: *t,
            })
            .collect();
        Dataset::new(self.task, self.split, samples)
    }
}

pub(crate) fn check_target(task: TaskKind, target: &Target) -> std::result::Result<(), String> {
    match (task, target) {
        (TaskKind::EiReg(_) | TaskKind::VReg, Target::Scalar(v)) => {
            if (0.0..=1.0).contains(v) {
                Ok(())
            } else {
                Err(format!("intensity {v} outside [0, 1]"))
            }
        }
        (TaskKind::EiOc(_) | TaskKind::VOc, Target::Ordinal(c)) => {
            let n = task.ordinal_classes().unwrap_or(0);
            if *c < n {
                Ok(())
            } else {
                Err(format!("class {c} outside 0..{n}"))
            }
        }
        (TaskKind::Ec, Target::LabelSet(_)) => Ok(()),
        (task, t) => Err(format!("target {t:?} does not fit task {task}")),
    }
}

/// Leading integer of an ordinal label such as `"2: moderate amount of fear can be inferred"`.
pub fn parse_ordinal_label(label: &str) -> Result<i64> {
    let trimmed = label.trim();
    let head = match trimmed.split_once(':') {
        Some((head, _)) => head.trim(),
        None => trimmed,
    };
    head.parse::<i64>()
        .map_err(|_| Error::InvalidInput(format!("ordinal label `{label}` has no leading integer")))
}

const NONE_TARGET: &str = "NONE";

fn expected_header(task: TaskKind) -> Vec<&'static str> {
    let mut cols = vec!["ID", "Tweet"];
    match task {
        TaskKind::EiReg(_) | TaskKind::VReg => cols.extend(["Affect Dimension", "Intensity Score"]),
        TaskKind::EiOc(_) | TaskKind::VOc => cols.extend(["Affect Dimension", "Intensity Class"]),
        TaskKind::Ec => cols.extend(EC_LABELS),
    }
    cols
}

/// Load a task file. See [`parse_tsv`].
pub fn load_tsv(path: impl AsRef<Path>, task: TaskKind, split: Split) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tsv(&text, &path.display().to_string(), task, split)
}

/// Parse task-file contents. `source_name` only labels error messages.
///
/// Errors name the 1-based line of the offending row.
pub fn parse_tsv(text: &str, source_name: &str, task: TaskKind, split: Split) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l,
            None => return Err(Error::parse(source_name, 1, "missing header row")),
        }
    };
    let want = expected_header(task);
    let got: Vec<&str> = header.trim_start_matches('\u{feff}').split('\t').map(str::trim).collect();
    let header_ok = got.len() == want.len() && got.iter().zip(&want).all(|(g, w)| g.eq_ignore_ascii_case(w));
    if !header_ok {
        return Err(Error::parse(
            source_name,
            1,
            format!("unknown header `{header}` for task {task}; expected `{}`", want.join("\\t")),
        ));
    }

    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != want.len() {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected {} columns, found {}", want.len(), cols.len()),
            ));
        }
        let id = cols[0].trim();
        if id.is_empty() {
            return Err(Error::parse(source_name, line_no, "empty id"));
        }
        if !seen.insert(id) {
            return Err(Error::parse(source_name, line_no, format!("duplicate id `{id}`")));
        }
        let target = parse_target(task, &cols[2..]).map_err(|m| Error::parse(source_name, line_no, m))?;
        samples.push(Sample {
            id: id.to_string(),
            text: cols[1].to_string(),
            target,
        });
    }
    Dataset::new(task, split, samples)
}

fn parse_target(task: TaskKind, cols: &[&str]) -> std::result::Result<Option<Target>, String> {
    match task {
        TaskKind::EiReg(_) | TaskKind::VReg | TaskKind::EiOc(_) | TaskKind::VOc => {
            let dim = cols[0].trim();
            if !dim.eq_ignore_ascii_case(task.affect_dimension()) {
                return Err(format!(
                    "affect dimension `{dim}` does not match task {task} (expected `{}`)",
                    task.affect_dimension()
                ));
            }
            let raw = cols[1].trim();
            if raw == NONE_TARGET {
                return Ok(None);
            }
            if task.is_regression() {
                let v: f64 = raw.parse().map_err(|_| format!("unparsable intensity `{raw}`"))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("intensity {v} outside [0, 1]"));
                }
                Ok(Some(Target::Scalar(v)))
            } else {
                let label = parse_ordinal_label(raw).map_err(|e| e.to_string())?;
                let class = label - task.ordinal_offset();
                let n = task.ordinal_classes().unwrap_or(0) as i64;
                if !(0..n).contains(&class) {
                    return Err(format!("class label {label} out of range for {task}"));
                }
                Ok(Some(Target::Ordinal(class as u8)))
            }
        }
        TaskKind::Ec => {
            if cols.iter().all(|c| c.trim() == NONE_TARGET) {
                return Ok(None);
            }
            let mut set = LabelSet::empty();
            for (i, c) in cols.iter().enumerate() {
                match c.trim() {
                    "0" => {}
                    "1" => set.set(i, true),
                    other => return Err(format!("label column `{}` has non-binary value `{other}`", EC_LABELS[i])),
                }
            }
            Ok(Some(Target::LabelSet(set)))
        }
    }
}

/// Write a dataset in its task's file layout; absent targets become `NONE`.
pub fn write_tsv<W: Write>(dataset: &Dataset, mut out: W) -> std::io::Result<()> {
    let task = dataset.task();
    writeln!(out, "{}", expected_header(task).join("\t"))?;
    for s in dataset.samples() {
        write!(out, "{}\t{}", s.id, s.text)?;
        match (task, s.target) {
            (TaskKind::Ec, None) => {
                for _ in EC_LABELS {
                    write!(out, "\t{NONE_TARGET}")?;
                }
            }
            (TaskKind::Ec, Some(Target::LabelSet(set))) => {
                for bit in set.bits() {
                    write!(out, "\t{}", bit as u8)?;
                }
            }
            (_, None) => write!(out, "\t{}\t{NONE_TARGET}", task.affect_dimension())?,
            (_, Some(Target::Scalar(v))) => write!(out, "\t{}\t{v}", task.affect_dimension())?,
            (_, Some(Target::Ordinal(c))) => {
                write!(out, "\t{}\t{}", task.affect_dimension(), task.class_description(c))?
            }
            (_, Some(Target::LabelSet(_))) => unreachable!("label set on a single-output task"),
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Concatenate train and dev splits of the same task.
pub fn merge(train: &Dataset, dev: &Dataset) -> Result<Dataset> {
    if train.task() != dev.task() {
        return Err(Error::InvalidInput(format!(
            "cannot merge {} with {}",
            train.task(),
            dev.task()
        )));
    }
    let samples = train.samples().iter().chain(dev.samples()).cloned().collect();
    Dataset::new(train.task(), Split::Merged, samples)
}

/// Read the task of a file from its header and first `Affect Dimension`
/// value. Lets per-emotion files be passed without naming the emotion.
pub fn detect_task(path: impl AsRef<Path>, family: TaskFamily) -> Result<TaskKind> {
    if !family.is_emotion_intensity() {
        return family.with_emotion(None);
    }
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let row = text
        .lines()
        .skip(1)
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::parse(path.display().to_string(), 2, "no data rows to detect the emotion from"))?;
    let dim = row
        .split('\t')
        .nth(2)
        .ok_or_else(|| Error::parse(path.display().to_string(), 2, "missing affect dimension column"))?;
    family.with_emotion(Some(dim.parse()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ANGER: TaskKind = TaskKind::EiReg(Emotion::Anger);

    fn reg_file(rows: &[(&str, &str, &str)]) -> String {
        let mut s = String::from("ID\tTweet\tAffect Dimension\tIntensity Score\n");
        for (id, text, score) in rows {
            s.push_str(&format!("{id}\t{text}\tanger\t{score}\n"));
        }
        s
    }

    #[test]
    fn ordinal_labels() {
        assert_eq!(parse_ordinal_label("0: no anger can be inferred").unwrap(), 0);
        assert_eq!(parse_ordinal_label("3").unwrap(), 3);
        assert_eq!(parse_ordinal_label("-2: moderately negative emotional state can be inferred").unwrap(), -2);
        assert!(parse_ordinal_label("moderate").is_err());
        assert!(parse_ordinal_label("").is_err());
    }

    #[test]
    fn header_only_file_is_empty_dataset() {
        let ds = parse_tsv(&reg_file(&[]), "t", ANGER, Split::Train).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn regression_rows_parse_in_order() {
        let ds = parse_tsv(
            &reg_file(&[("a1", "so mad", "0.75"), ("a2", "calm", "0.1"), ("a3", "?", "NONE")]),
            "t",
            ANGER,
            Split::Dev,
        )
        .unwrap();
        let ids: Vec<_> = ds.samples().iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["a1", "a2", "a3"]);
        assert_eq!(ds.samples()[0].target, Some(Target::Scalar(0.75)));
        assert_eq!(ds.samples()[2].target, None);
        assert!(ds.targets().is_err());
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let err = parse_tsv(&reg_file(&[("a1", "x", "0.5"), ("a2", "y", "lots")]), "f.txt", ANGER, Split::Train)
            .unwrap_err();
        assert!(err.to_string().contains("f.txt:3"), "{err}");

        let bad_cols = "ID\tTweet\tAffect Dimension\tIntensity Score\na1\tx\tanger\n";
        let err = parse_tsv(bad_cols, "f.txt", ANGER, Split::Train).unwrap_err();
        assert!(err.to_string().contains("f.txt:2"), "{err}");

        let out_of_range = reg_file(&[("a1", "x", "1.5")]);
        assert!(parse_tsv(&out_of_range, "f", ANGER, Split::Train).is_err());
    }

    #[test]
    fn unknown_header_rejected() {
        let err = parse_tsv("id\ttext\tscore\n", "f", ANGER, Split::Train).unwrap_err();
        assert!(err.to_string().contains("unknown header"));
    }

    #[test]
    fn wrong_emotion_rejected() {
        let text = reg_file(&[("a1", "x", "0.5")]);
        assert!(parse_tsv(&text, "f", TaskKind::EiReg(Emotion::Fear), Split::Train).is_err());
    }

    #[test]
    fn valence_classes_are_reindexed() {
        let text = "ID\tTweet\tAffect Dimension\tIntensity Class\n\
                    v1\tawful\tvalence\t-3: very negative emotional state can be inferred\n\
                    v2\tgreat\tvalence\t3: very positive emotional state can be inferred\n\
                    v3\tmeh\tvalence\t0\n";
        let ds = parse_tsv(text, "f", TaskKind::VOc, Split::Train).unwrap();
        let t: Vec<_> = ds.targets().unwrap();
        assert_eq!(t, vec![Target::Ordinal(0), Target::Ordinal(6), Target::Ordinal(3)]);
        assert_eq!(TaskKind::VOc.display_class(0), -3);

        let bad = "ID\tTweet\tAffect Dimension\tIntensity Class\nv1\tx\tvalence\t4: off the scale\n";
        assert!(parse_tsv(bad, "f", TaskKind::VOc, Split::Train).is_err());
    }

    #[test]
    fn ec_rows() {
        let text = format!(
            "ID\tTweet\t{}\ne1\thappy love\t0\t0\t0\t0\t1\t1\t0\t0\t0\t0\t0\n",
            EC_LABELS.join("\t")
        );
        let ds = parse_tsv(&text, "f", TaskKind::Ec, Split::Train).unwrap();
        assert_eq!(
            ds.samples()[0].target,
            Some(Target::LabelSet(LabelSet::from_names(["joy", "love"]).unwrap()))
        );
    }

    #[test]
    fn merge_counts_and_errors() {
        let train = parse_tsv(&reg_file(&[("a1", "x", "0.5"), ("a2", "y", "0.2")]), "t", ANGER, Split::Train).unwrap();
        let dev = parse_tsv(&reg_file(&[("a3", "z", "0.9")]), "d", ANGER, Split::Dev).unwrap();
        let merged = merge(&train, &dev).unwrap();
        assert_eq!(merged.len(), 3);
        assert_eq!(merged.split(), Split::Merged);

        let empty = Dataset::new(ANGER, Split::Dev, vec![]).unwrap();
        assert_eq!(merge(&train, &empty).unwrap().samples(), train.samples());

        let fear = Dataset::new(TaskKind::EiReg(Emotion::Fear), Split::Dev, vec![]).unwrap();
        assert!(merge(&train, &fear).is_err());
        assert!(merge(&train, &train).is_err(), "duplicate ids across splits");
    }

    #[test]
    fn task_kind_strings() {
        assert_eq!("EI-reg:anger".parse::<TaskKind>().unwrap(), ANGER);
        assert_eq!("ei-oc-joy".parse::<TaskKind>().unwrap(), TaskKind::EiOc(Emotion::Joy));
        assert_eq!("V-oc".parse::<TaskKind>().unwrap(), TaskKind::VOc);
        assert!("EI-reg".parse::<TaskKind>().is_err());
        assert!("V-reg:anger".parse::<TaskKind>().is_err());
        for t in [ANGER, TaskKind::EiOc(Emotion::Sadness), TaskKind::VReg, TaskKind::VOc, TaskKind::Ec] {
            assert_eq!(t.to_string().parse::<TaskKind>().unwrap(), t);
        }
    }
}
