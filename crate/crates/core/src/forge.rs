//! Seeded instance sampling and dataset generation.
//!
//! Every record draws its randomness from a ChaCha stream keyed by
//! `(seed, split, index)`, so records can be built in parallel and in any
//! order without changing the output. Train and test are kept disjoint by a
//! hash partition of equation strings: an equation is reserved for test iff
//! the first byte of `sha256(seed || equation)` is below [`TEST_SHARE`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expr::Equation;
use crate::malrules::{reduce_with_misconceptions, MisconceptionId, MisconceptionSet};
use crate::rational::Rational;
use crate::reduction::{reduce, Answer, Form, ReductionTrace};
use crate::space::{enumerate, successors};
use crate::taxonomy::{classify, ProblemType, Shape};

pub const MAX_DRAWS: usize = 1000;

/// Out of 256: one eighth of all equation strings are test-only.
pub const TEST_SHARE: u8 = 32;

pub const TRAIN_FILE: &str = "train.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug)]
pub struct InstanceSampler {
    seed: u64,
    min: i64,
    max: i64,
    values: Vec<i64>,
}

impl InstanceSampler {
    /// Coefficients in `[-9, 9] \ {0}`.
    pub fn new(seed: u64) -> InstanceSampler {
        InstanceSampler::with_range(seed, -9, 9).expect("default range is non-empty")
    }

    /// Coefficients in `[min, max] \ {0}`.
    pub fn with_range(seed: u64, min: i64, max: i64) -> Result<InstanceSampler> {
        let values: Vec<i64> = (min..=max).filter(|&v| v != 0).collect();
        if values.is_empty() {
            return Err(Error::InvalidRange(min, max));
        }
        Ok(InstanceSampler {
            seed,
            min,
            max,
            values,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn range(&self) -> (i64, i64) {
        (self.min, self.max)
    }

    /// An independent stream for `(seed, stream, index)`.
    pub fn rng(&self, stream: &str, index: u64) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(stream.as_bytes());
        hasher.update([0]);
        hasher.update(index.to_le_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        ChaCha8Rng::from_seed(key)
    }

    pub fn draw_shape(&self, ty: ProblemType, rng: &mut impl Rng) -> Shape {
        let slots = (0..ty.arity())
            .map(|_| Rational::integer(self.values[rng.random_range(0..self.values.len())]))
            .collect();
        Shape::new(ty, slots)
    }

    /// Draws instances of `ty` until `accept` returns a value.
    pub fn sample<T>(
        &self,
        ty: ProblemType,
        rng: &mut impl Rng,
        mut accept: impl FnMut(&Equation) -> Option<T>,
    ) -> Result<T> {
        for _ in 0..MAX_DRAWS {
            let equation = self.draw_shape(ty, rng).to_equation();
            if let Some(found) = accept(&equation) {
                return Ok(found);
            }
        }
        Err(Error::Exhausted {
            ty,
            tries: MAX_DRAWS,
        })
    }

    /// The deterministic sequence of non-degenerate instances of `ty`.
    pub fn instances(&self, ty: ProblemType) -> impl Iterator<Item = Result<Equation>> + '_ {
        (0..).map(move |i| sample_instance(ty, self, i))
    }
}

/// The `index`-th non-degenerate instance of `ty`.
pub fn sample_instance(ty: ProblemType, sampler: &InstanceSampler, index: u64) -> Result<Equation> {
    let mut rng = sampler.rng(&format!("instance/{ty}"), index);
    sampler.sample(ty, &mut rng, |e| solvable(e, ty).map(|_| e.clone()))
}

/// The correct trace of `e` if it classifies as `ty`, reduces, and agrees
/// with the closed-form solution.
pub fn solvable(e: &Equation, ty: ProblemType) -> Option<ReductionTrace> {
    if classify(e).ok()? != ty {
        return None;
    }
    let trace = reduce(e).ok()?;
    let expected = Answer::Value(e.closed_form_solution().ok()?);
    (trace.answer()? == expected).then_some(trace)
}

/// The misconception-aware trace of `e` under `{m}`, if it is usable as a training
/// example: `m` fires, the answer differs from `correct`, and no path of
/// any other single misconception produces the same steps.
pub fn malgorithm(e: &Equation, m: MisconceptionId, correct: &ReductionTrace) -> Option<ReductionTrace> {
    let trace = reduce_with_misconceptions(e, &MisconceptionSet::single(m)).ok()?;
    if trace.misconceptions() != [m] || trace.answer()? == correct.answer()? {
        return None;
    }
    let steps: Vec<&Equation> = trace.steps.iter().map(|s| &s.equation).collect();
    let tree = enumerate(e, &MisconceptionSet::full(), 1).ok()?;
    let ambiguous = tree
        .leaves()
        .iter()
        .any(|leaf| leaf.misconceptions != [m] && tree.path_equations(leaf.node) == steps);
    (!ambiguous).then_some(trace)
}

pub fn reserved_for_test(seed: u64, equation: &str) -> bool {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(equation.as_bytes());
    hasher.finalize()[0] < TEST_SHARE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Correct train records per type when no misconception is selected.
    pub n_correct_per_type: usize,
    /// Misconception train records.
    pub n_m: usize,
    /// `n_c / n_m`; one of 0, 0.25, 0.5, 1.0.
    pub ratio: f64,
    pub test_per_type: usize,
    pub seed: u64,
    pub misconception: Option<MisconceptionId>,
    pub coefficient_min: i64,
    pub coefficient_max: i64,
    #[serde(skip_serializing)]
    pub out: PathBuf,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            n_correct_per_type: 2000,
            n_m: 0,
            ratio: 0.0,
            test_per_type: 500,
            seed: 0,
            misconception: None,
            coefficient_min: -9,
            coefficient_max: 9,
            out: PathBuf::from("dataset"),
        }
    }
}

impl DatasetConfig {
    /// `floor(ratio * n_m)`, exact because the ratio is a multiple of 1/4.
    pub fn n_correct_from_ratio(&self) -> Result<usize> {
        let quarters = [0.0, 0.25, 0.5, 1.0]
            .iter()
            .position(|&r| r == self.ratio)
            .map(|i| [0, 1, 2, 4][i])
            .ok_or(Error::InvalidRatio(self.ratio))?;
        Ok(self.n_m * quarters / 4)
    }

    pub fn validate(&self) -> Result<()> {
        self.n_correct_from_ratio()?;
        InstanceSampler::with_range(self.seed, self.coefficient_min, self.coefficient_max)?;
        if self.misconception.is_none() && self.n_m > 0 {
            return Err(Error::InvalidConfig(
                "n_m > 0 requires a misconception".to_string(),
            ));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let echo = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(echo.as_bytes()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Correct,
    Misconception,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: String,
    pub problem_type: ProblemType,
    pub equation: String,
    pub steps: Vec<String>,
    pub final_answer: String,
    pub label: Label,
    pub misconception_id: Option<MisconceptionId>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Split {
    Train,
    Test,
}

impl Split {
    fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Correct(ProblemType),
    CorrectAnyType,
    Misconception(MisconceptionId),
}

fn make_record(sampler: &InstanceSampler, split: Split, index: usize, kind: Kind) -> Result<DatasetRecord> {
    let mut rng = sampler.rng(split.name(), index as u64);
    let ty = match kind {
        Kind::Correct(ty) => ty,
        Kind::CorrectAnyType => ProblemType::ALL[rng.random_range(0..ProblemType::ALL.len())],
        Kind::Misconception(m) => {
            let types = m.info().applicable_types;
            types[rng.random_range(0..types.len())]
        }
    };
    let seed = sampler.seed();
    let trace = sampler.sample(ty, &mut rng, |e| {
        if reserved_for_test(seed, &e.to_string()) != (split == Split::Test) {
            return None;
        }
        let correct = solvable(e, ty)?;
        match kind {
            Kind::Misconception(m) => malgorithm(e, m, &correct),
            _ => Some(correct),
        }
    })?;
    let (label, misconception_id) = match kind {
        Kind::Misconception(m) => (Label::Misconception, Some(m)),
        _ => (Label::Correct, None),
    };
    Ok(DatasetRecord {
        id: format!("{}-{index:06}", split.name()),
        problem_type: ty,
        equation: trace.steps[0].equation.to_string(),
        steps: trace.equations(),
        final_answer: trace.answer().expect("trace ends in an answer").to_string(),
        label,
        misconception_id,
        seed,
    })
}

fn build_split(sampler: &InstanceSampler, split: Split, plan: &[Kind]) -> Result<Vec<DatasetRecord>> {
    plan.par_iter()
        .enumerate()
        .map(|(index, &kind)| make_record(sampler, split, index, kind))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub train: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
}

/// Builds the records of a run in memory.
///
/// With a misconception: `n_m` misconception records over its applicable
/// types followed by `floor(ratio * n_m)` correct records over all types.
/// Without one: `n_correct_per_type` correct records for each type. The
/// test split always holds `test_per_type` correct records per type.
pub fn build(config: &DatasetConfig) -> Result<Dataset> {
    config.validate()?;
    let sampler =
        InstanceSampler::with_range(config.seed, config.coefficient_min, config.coefficient_max)?;
    let stratified = |n: usize| -> Vec<Kind> {
        ProblemType::ALL
            .iter()
            .flat_map(|&ty| std::iter::repeat_n(Kind::Correct(ty), n))
            .collect()
    };
    let train_plan: Vec<Kind> = match config.misconception {
        Some(m) => std::iter::repeat_n(Kind::Misconception(m), config.n_m)
            .chain(std::iter::repeat_n(Kind::CorrectAnyType, config.n_correct_from_ratio()?))
            .collect(),
        None => stratified(config.n_correct_per_type),
    };
    let test_plan = stratified(config.test_per_type);
    Ok(Dataset {
        train: build_split(&sampler, Split::Train, &train_plan)?,
        test: build_split(&sampler, Split::Test, &test_plan)?,
    })
}

pub fn to_jsonl(records: &[DatasetRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSummary {
    pub lines: usize,
    pub sha256: String,
    /// type -> label -> count.
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
}

impl FileSummary {
    fn of(records: &[DatasetRecord], bytes: &str) -> FileSummary {
        let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for r in records {
            let label = match r.label {
                Label::Correct => "correct",
                Label::Misconception => "misconception",
            };
            *counts
                .entry(r.problem_type.to_string())
                .or_default()
                .entry(label.to_string())
                .or_default() += 1;
        }
        FileSummary {
            lines: bytes.lines().count(),
            sha256: hex::encode(Sha256::digest(bytes.as_bytes())),
            counts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub config: DatasetConfig,
    pub config_hash: String,
    pub n_misconception: usize,
    pub n_correct: usize,
    pub files: BTreeMap<String, FileSummary>,
    /// sha256 over the train bytes followed by the test bytes.
    pub digest: String,
}

/// Builds the dataset and writes train, test and manifest files into
/// `config.out`.
pub fn generate(config: &DatasetConfig) -> Result<Manifest> {
    let dataset = build(config)?;
    let train = to_jsonl(&dataset.train);
    let test = to_jsonl(&dataset.test);
    let mut hasher = Sha256::new();
    hasher.update(train.as_bytes());
    hasher.update(test.as_bytes());
    let n_misconception = dataset
        .train
        .iter()
        .filter(|r| r.label == Label::Misconception)
        .count();
    let manifest = Manifest {
        generator: format!("malgebra {}", env!("CARGO_PKG_VERSION")),
        config: config.clone(),
        config_hash: config.hash(),
        n_misconception,
        n_correct: dataset.train.len() - n_misconception,
        files: BTreeMap::from([
            (TRAIN_FILE.to_string(), FileSummary::of(&dataset.train, &train)),
            (TEST_FILE.to_string(), FileSummary::of(&dataset.test, &test)),
        ]),
        digest: hex::encode(hasher.finalize()),
    };
    fs::create_dir_all(&config.out)?;
    fs::write(config.out.join(TRAIN_FILE), train)?;
    fs::write(config.out.join(TEST_FILE), test)?;
    let mut manifest_text = serde_json::to_string_pretty(&manifest)?;
    manifest_text.push('\n');
    fs::write(config.out.join(MANIFEST_FILE), manifest_text)?;
    Ok(manifest)
}

/// Replays a record's steps through the engine.
pub fn verify_record(record: &DatasetRecord) -> std::result::Result<(), String> {
    let parse = |text: &str| {
        text.parse::<Equation>()
            .map_err(|e| format!("cannot parse `{text}`: {e}"))
    };
    let root = parse(&record.equation)?;
    let ty = classify(&root).map_err(|e| e.to_string())?;
    if ty != record.problem_type {
        return Err(format!("equation is {ty}, record says {}", record.problem_type));
    }
    let (ms, cap) = match (record.label, record.misconception_id) {
        (Label::Correct, None) => (MisconceptionSet::empty(), 0),
        (Label::Misconception, Some(m)) => (MisconceptionSet::single(m), 1),
        (Label::Correct, Some(_)) => return Err("correct record names a misconception".into()),
        (Label::Misconception, None) => return Err("misconception record without an id".into()),
    };
    match record.steps.first() {
        Some(first) if parse(first)? == root => {}
        _ => return Err("steps must start with the equation".into()),
    }
    let mut equation = root.clone();
    let mut form = Form::Typed(ty);
    let mut used = Vec::new();
    for (k, text) in record.steps.iter().enumerate().skip(1) {
        let next = parse(text)?;
        let found = successors(&equation, &form, &ms, &used, cap)
            .map_err(|e| e.to_string())?
            .into_iter()
            .find(|s| s.equation == next)
            .ok_or_else(|| format!("step {} `{text}` does not follow from `{equation}`", k + 1))?;
        used.extend(found.edge.misconception());
        equation = found.equation;
        form = found.form;
    }
    let answer = form
        .answer()
        .ok_or_else(|| format!("steps stop at `{equation}` before an answer"))?;
    match Answer::parse(&record.final_answer) {
        Some(stated) if stated == answer => {}
        _ => {
            return Err(format!(
                "final_answer `{}` but steps give `{answer}`",
                record.final_answer
            ))
        }
    }
    match record.misconception_id {
        Some(m) if used != [m] => Err(format!("steps never apply {m}")),
        Some(_) => Ok(()),
        None => {
            let expected = root.closed_form_solution().map_err(|e| e.to_string())?;
            if answer == Answer::Value(expected.clone()) {
                Ok(())
            } else {
                Err(format!("answer {answer} differs from the solution {expected}"))
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub total: usize,
    pub passed: usize,
    /// `(line, message)` for records that failed replay.
    pub failures: Vec<(usize, String)>,
    /// `(line, message)` for lines that are not records.
    pub schema_errors: Vec<(usize, String)>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty() && self.schema_errors.is_empty()
    }
}

/// Verifies JSON-lines text; blank lines are ignored.
/// `Err` is a schema error; `Ok(Err)` is a replay failure.
type LineOutcome = std::result::Result<std::result::Result<(), String>, String>;

pub fn verify_jsonl(text: &str) -> Result<VerifyReport> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    if lines.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let outcomes: Vec<(usize, LineOutcome)> = lines
        .par_iter()
        .map(|&(line, text)| {
            let outcome = serde_json::from_str::<DatasetRecord>(text)
                .map_err(|e| e.to_string())
                .map(|record| verify_record(&record));
            (line, outcome)
        })
        .collect();
    let mut report = VerifyReport {
        total: lines.len(),
        ..VerifyReport::default()
    };
    for (line, outcome) in outcomes {
        match outcome {
            Ok(Ok(())) => report.passed += 1,
            Ok(Err(message)) => report.failures.push((line, message)),
            Err(message) => report.schema_errors.push((line, message)),
        }
    }
    Ok(report)
}

/// Verifies a JSON-lines file, or `train.jsonl` and `test.jsonl` inside a
/// dataset directory.
pub fn verify_path(path: &Path) -> Result<VerifyReport> {
    if !path.is_dir() {
        return verify_jsonl(&fs::read_to_string(path)?);
    }
    let mut text = String::new();
    for name in [TRAIN_FILE, TEST_FILE] {
        let file = path.join(name);
        if file.exists() {
            text.push_str(&fs::read_to_string(file)?);
        }
    }
    verify_jsonl(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(m: Option<&str>, n_m: usize, ratio: f64) -> DatasetConfig {
        DatasetConfig {
            n_correct_per_type: 3,
            n_m,
            ratio,
            test_per_type: 2,
            seed: 7,
            misconception: m.map(|id| id.parse().unwrap()),
            ..DatasetConfig::default()
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let sampler = InstanceSampler::new(42);
        let a: Vec<String> = sampler
            .instances(ProblemType::T12)
            .take(5)
            .map(|e| e.unwrap().to_string())
            .collect();
        let b: Vec<String> = InstanceSampler::new(42)
            .instances(ProblemType::T12)
            .take(5)
            .map(|e| e.unwrap().to_string())
            .collect();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn degenerate_range_exhausts() {
        let sampler = InstanceSampler::with_range(1, 1, 1).unwrap();
        assert!(matches!(
            sample_instance(ProblemType::T9, &sampler, 0),
            Err(Error::Exhausted { tries: MAX_DRAWS, .. })
        ));
        assert_eq!(
            sample_instance(ProblemType::T1, &sampler, 0).unwrap().to_string(),
            "1x = 1"
        );
        assert!(InstanceSampler::with_range(1, 0, 0).is_err());
    }

    #[test]
    fn t7_instances_avoid_zero_slope() {
        let sampler = InstanceSampler::new(3);
        for e in sampler.instances(ProblemType::T7).take(50) {
            let shape = Shape::of(&e.unwrap()).unwrap();
            assert_ne!(shape.slots[0], shape.slots[1]);
        }
    }

    #[test]
    fn ratio_is_validated() {
        assert_eq!(small(Some("M1"), 800, 0.25).n_correct_from_ratio().unwrap(), 200);
        assert_eq!(small(Some("M1"), 101, 0.5).n_correct_from_ratio().unwrap(), 50);
        assert!(matches!(
            small(Some("M1"), 100, 0.3).n_correct_from_ratio(),
            Err(Error::InvalidRatio(_))
        ));
        assert!(small(None, 5, 0.0).validate().is_err());
    }

    #[test]
    fn counts_follow_the_plan() {
        let base = build(&small(None, 0, 0.0)).unwrap();
        assert_eq!(base.train.len(), 45);
        assert_eq!(base.test.len(), 30);
        let mixed = build(&small(Some("M8"), 8, 0.5)).unwrap();
        let mis = mixed.train.iter().filter(|r| r.label == Label::Misconception).count();
        assert_eq!((mis, mixed.train.len() - mis), (8, 4));
        for r in mixed.train.iter().take(8) {
            assert!(matches!(r.problem_type, ProblemType::T9 | ProblemType::T12));
        }
    }

    #[test]
    fn generated_records_verify() {
        let data = build(&small(Some("M13"), 10, 1.0)).unwrap();
        let report = verify_jsonl(&(to_jsonl(&data.train) + &to_jsonl(&data.test))).unwrap();
        assert_eq!(report.passed, report.total, "{:?}", report.failures);
    }

    #[test]
    fn splits_are_disjoint() {
        let data = build(&small(None, 0, 0.0)).unwrap();
        for r in &data.train {
            assert!(!reserved_for_test(7, &r.equation));
        }
        for r in &data.test {
            assert!(reserved_for_test(7, &r.equation));
        }
    }

    #[test]
    fn corrupted_step_is_reported() {
        let data = build(&small(None, 0, 0.0)).unwrap();
        let mut record = data.train[20].clone();
        let last = record.steps.len() - 1;
        record.steps[last - 1] = "3x = 1".to_string();
        let text = to_jsonl(&data.train[..2]) + &to_jsonl(&[record]) + "{\"id\": 1}\n";
        let report = verify_jsonl(&text).unwrap();
        assert_eq!(report.passed, 2);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].0, 3);
        assert_eq!(report.schema_errors.len(), 1);
        assert!(matches!(verify_jsonl("\n\n"), Err(Error::EmptyBatch)));
    }
}
