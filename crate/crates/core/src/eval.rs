//! Grading transcripts against the engine, the four accuracy aggregates, the
//! two-property student-model verdict, and misconception diagnosis.
//!
//! Accuracies are exact fractions on a 0 to 100 scale. An aggregate over a
//! set of types is undefined when any type in the set has no transcripts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::expr::Equation;
use crate::malrules::{MisconceptionId, MisconceptionSet};
use crate::rational::Rational;
use crate::reduction::Answer;
use crate::space::{enumerate, successors, SolutionTree};
use crate::taxonomy::{classify, ProblemType};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transcript {
    pub problem_type: ProblemType,
    pub equation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_steps: Option<Vec<String>>,
    pub model_answer: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grade {
    Correct,
    MisconceptionMatch,
    Other,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradeMode {
    #[default]
    AnswerOnly,
    StrictSteps,
}

impl FromStr for GradeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<GradeMode, String> {
        match s {
            "answer" | "answer-only" => Ok(GradeMode::AnswerOnly),
            "steps" | "strict-steps" => Ok(GradeMode::StrictSteps),
            other => Err(format!("unknown grading mode `{other}`")),
        }
    }
}

impl Transcript {
    /// Parses the equation and checks it against the declared type.
    pub fn equation(&self) -> Result<Equation> {
        let e: Equation = self.equation.parse()?;
        let found = classify(&e)?;
        if found != self.problem_type {
            return Err(Error::TypeMismatch {
                equation: self.equation.clone(),
                expected: self.problem_type,
                found,
            });
        }
        Ok(e)
    }

    fn parsed_steps(&self) -> Option<Vec<Equation>> {
        self.model_steps
            .as_ref()?
            .iter()
            .map(|s| s.parse().ok())
            .collect()
    }
}

fn path_matches(tree: &SolutionTree, node: usize, steps: &[Equation]) -> bool {
    let path = tree.path_equations(node);
    path.len() == steps.len() && path.iter().zip(steps).all(|(a, b)| *a == b)
}

/// Checks against the correct paths first, then against the paths that use
/// exactly `m`.
pub fn grade(t: &Transcript, m: Option<MisconceptionId>, mode: GradeMode) -> Result<Grade> {
    let e = t.equation()?;
    let ms = m.map(MisconceptionSet::single).unwrap_or_default();
    let tree = enumerate(&e, &ms, 1)?;
    let Some(answer) = Answer::parse(&t.model_answer) else {
        return Ok(Grade::Other);
    };
    let steps = match mode {
        GradeMode::AnswerOnly => None,
        GradeMode::StrictSteps => match t.parsed_steps() {
            Some(steps) => Some(steps),
            None => return Ok(Grade::Other),
        },
    };
    let leaves = tree.leaves();
    let matches = |want: &[MisconceptionId]| {
        leaves.iter().any(|leaf| {
            leaf.misconceptions == want
                && leaf.answer.as_ref() == Some(&answer)
                && steps.as_ref().is_none_or(|s| path_matches(&tree, leaf.node, s))
        })
    };
    if matches(&[]) {
        Ok(Grade::Correct)
    } else if m.is_some_and(|m| matches(&[m])) {
        Ok(Grade::MisconceptionMatch)
    } else {
        Ok(Grade::Other)
    }
}

/// `100 * part / whole` as an exact fraction.
fn percent(part: usize, whole: usize) -> Rational {
    Rational::new(100 * part as i64, whole as i64)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeScore {
    pub total: usize,
    pub correct: usize,
    pub misconception_match: usize,
}

impl TypeScore {
    pub fn ca(&self) -> Rational {
        percent(self.correct, self.total)
    }

    pub fn ma(&self) -> Rational {
        percent(self.misconception_match, self.total)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CsmVerdict {
    /// `MA >= theta_m`.
    pub property_1: bool,
    /// `CA_NA >= theta_c`.
    pub property_2: bool,
}

impl CsmVerdict {
    /// An undefined aggregate fails its property.
    pub fn evaluate(
        ma: Option<&Rational>,
        ca_na: Option<&Rational>,
        theta_m: &Rational,
        theta_c: &Rational,
    ) -> CsmVerdict {
        CsmVerdict {
            property_1: ma.is_some_and(|v| v >= theta_m),
            property_2: ca_na.is_some_and(|v| v >= theta_c),
        }
    }

    pub fn is_csm(&self) -> bool {
        self.property_1 && self.property_2
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricsReport {
    pub misconception: MisconceptionId,
    pub per_type: BTreeMap<ProblemType, TypeScore>,
    pub ma: Option<Rational>,
    pub ca_a: Option<Rational>,
    pub ca_na: Option<Rational>,
    pub oca: Option<Rational>,
    pub theta_m: Rational,
    pub theta_c: Rational,
    pub verdict: CsmVerdict,
    pub absent_types: Vec<ProblemType>,
    /// `(transcript index, message)` for transcripts graded `other` because
    /// they could not be read.
    pub errors: Vec<(usize, String)>,
    pub notes: Vec<String>,
}

pub fn default_theta() -> Rational {
    Rational::integer(90)
}

/// Mean of `value` over `types`; `None` if the set is empty or any type is
/// absent from the batch.
fn mean_over(
    per_type: &BTreeMap<ProblemType, TypeScore>,
    types: &[ProblemType],
    value: impl Fn(&TypeScore) -> Rational,
) -> Option<Rational> {
    if types.is_empty() {
        return None;
    }
    let mut sum = Rational::zero();
    for t in types {
        sum = sum + value(per_type.get(t)?);
    }
    sum.checked_div(&Rational::integer(types.len() as i64))
}

pub fn score(
    transcripts: &[Transcript],
    m: MisconceptionId,
    mode: GradeMode,
    theta_m: &Rational,
    theta_c: &Rational,
) -> Result<MetricsReport> {
    if transcripts.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let grades: Vec<Result<Grade>> = transcripts
        .par_iter()
        .map(|t| grade(t, Some(m), mode))
        .collect();
    let mut per_type: BTreeMap<ProblemType, TypeScore> = BTreeMap::new();
    let mut errors = Vec::new();
    for (i, (t, g)) in transcripts.iter().zip(grades).enumerate() {
        let entry = per_type.entry(t.problem_type).or_default();
        entry.total += 1;
        match g {
            Ok(Grade::Correct) => entry.correct += 1,
            Ok(Grade::MisconceptionMatch) => entry.misconception_match += 1,
            Ok(Grade::Other) => {}
            Err(e) => errors.push((i, e.to_string())),
        }
    }
    let alpha = m.info().applicable_types;
    let rest: Vec<ProblemType> = ProblemType::ALL
        .into_iter()
        .filter(|t| !alpha.contains(t))
        .collect();
    let ma = mean_over(&per_type, alpha, TypeScore::ma);
    let ca_a = mean_over(&per_type, alpha, TypeScore::ca);
    let ca_na = mean_over(&per_type, &rest, TypeScore::ca);
    let oca = mean_over(&per_type, &ProblemType::ALL, TypeScore::ca);
    let absent_types: Vec<ProblemType> = ProblemType::ALL
        .into_iter()
        .filter(|t| !per_type.contains_key(t))
        .collect();
    let mut notes = Vec::new();
    for (name, value) in [("MA", &ma), ("CA_A", &ca_a), ("CA_NA", &ca_na), ("OCA", &oca)] {
        if value.is_none() {
            let why = if name == "CA_NA" && rest.is_empty() {
                format!("{m} applies to every type")
            } else {
                "a type it averages over has no transcripts".to_string()
            };
            notes.push(format!("{name} undefined: {why}"));
        }
    }
    let verdict = CsmVerdict::evaluate(ma.as_ref(), ca_na.as_ref(), theta_m, theta_c);
    Ok(MetricsReport {
        misconception: m,
        per_type,
        ma,
        ca_a,
        ca_na,
        oca,
        theta_m: theta_m.clone(),
        theta_c: theta_c.clone(),
        verdict,
        absent_types,
        errors,
        notes,
    })
}

fn metric_json(value: &Option<Rational>) -> serde_json::Value {
    match value {
        Some(v) => json!({ "value": v.to_f64(), "exact": v.to_string() }),
        None => serde_json::Value::Null,
    }
}

fn render(value: &Option<Rational>) -> String {
    match value {
        Some(v) => format!("{:.2}", v.to_f64()),
        None => "undefined".to_string(),
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> serde_json::Value {
        let alpha = self.misconception.info().applicable_types;
        let per_type: Vec<serde_json::Value> = self
            .per_type
            .iter()
            .map(|(t, s)| {
                json!({
                    "problem_type": t.to_string(),
                    "total": s.total,
                    "correct": s.correct,
                    "misconception_match": s.misconception_match,
                    "ca": metric_json(&Some(s.ca())),
                    "ma": if alpha.contains(t) { metric_json(&Some(s.ma())) } else { serde_json::Value::Null },
                })
            })
            .collect();
        json!({
            "misconception": self.misconception.as_str(),
            "per_type": per_type,
            "ma": metric_json(&self.ma),
            "ca_a": metric_json(&self.ca_a),
            "ca_na": metric_json(&self.ca_na),
            "oca": metric_json(&self.oca),
            "theta_m": metric_json(&Some(self.theta_m.clone())),
            "theta_c": metric_json(&Some(self.theta_c.clone())),
            "verdict": {
                "property_1": self.verdict.property_1,
                "property_2": self.verdict.property_2,
                "is_csm": self.verdict.is_csm(),
            },
            "absent_types": self.absent_types.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "errors": self.errors.iter().map(|(i, m)| json!({ "index": i, "message": m })).collect::<Vec<_>>(),
            "notes": self.notes,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "misconception {}", self.misconception);
        let _ = writeln!(out, "type   n      CA      MA");
        let alpha = self.misconception.info().applicable_types;
        for (t, s) in &self.per_type {
            let ma = if alpha.contains(t) {
                format!("{:7.2}", s.ma().to_f64())
            } else {
                "      -".to_string()
            };
            let _ = writeln!(out, "{:<4} {:>4} {:7.2} {ma}", t.to_string(), s.total, s.ca().to_f64());
        }
        let _ = writeln!(out, "MA     {}", render(&self.ma));
        let _ = writeln!(out, "CA_A   {}", render(&self.ca_a));
        let _ = writeln!(out, "CA_NA  {}", render(&self.ca_na));
        let _ = writeln!(out, "OCA    {}", render(&self.oca));
        let _ = writeln!(
            out,
            "property 1 (MA >= {}): {}",
            self.theta_m, self.verdict.property_1
        );
        let _ = writeln!(
            out,
            "property 2 (CA_NA >= {}): {}",
            self.theta_c, self.verdict.property_2
        );
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        for (i, message) in &self.errors {
            let _ = writeln!(out, "error: transcript {i}: {message}");
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MatchQuality {
    Full,
    /// The first `matched` of the transcript's steps agree.
    Prefix { matched: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagnosisMatch {
    pub misconceptions: Vec<MisconceptionId>,
    pub quality: MatchQuality,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Diagnosis {
    pub matches: Vec<DiagnosisMatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Diagnosis {
    fn note(text: impl Into<String>) -> Diagnosis {
        Diagnosis {
            matches: Vec::new(),
            note: Some(text.into()),
        }
    }
}

/// Largest number of misconceptions considered on one path.
pub const DIAGNOSE_CAP: usize = 2;

/// Best `(full, prefix)` per misconception set (in catalog order).
type Best = BTreeMap<Vec<MisconceptionId>, (bool, usize)>;

fn record(best: &mut Best, used: &[MisconceptionId], full: bool, prefix: usize) {
    let mut key = used.to_vec();
    key.sort();
    let entry = best.entry(key).or_insert((false, 0));
    *entry = (*entry).max((full, prefix));
}

/// Walks the solution tree only along nodes that agree with `steps`; each
/// matching node credits its own misconception set.
fn walk(
    equation: &Equation,
    form: &crate::reduction::Form,
    used: &[MisconceptionId],
    depth: usize,
    steps: &[Equation],
    best: &mut Best,
) -> Result<()> {
    if depth + 1 == steps.len() {
        record(best, used, form.is_terminal(), depth + 1);
        return Ok(());
    }
    record(best, used, false, depth + 1);
    let children = successors(equation, form, &MisconceptionSet::full(), used, DIAGNOSE_CAP)?;
    for child in children {
        if child.equation != steps[depth + 1] {
            continue;
        }
        let mut child_used = used.to_vec();
        child_used.extend(child.edge.misconception());
        walk(&child.equation, &child.form, &child_used, depth + 1, steps, best)?;
    }
    Ok(())
}

/// Misconception sets of size at most two whose paths best explain the
/// transcript's steps. Full matches win; otherwise the sets with the longest
/// matching prefix, provided it beats every correct path. Ties break on
/// fewer misconceptions, then catalog order. Empty if a correct path matches.
pub fn diagnose(t: &Transcript) -> Diagnosis {
    let Some(raw) = t.model_steps.as_ref().filter(|s| !s.is_empty()) else {
        return Diagnosis::note("transcript has no steps");
    };
    let Some(steps) = t.parsed_steps() else {
        return Diagnosis::note(format!("a step in {raw:?} does not parse"));
    };
    let root = match t.equation() {
        Ok(e) => e,
        Err(e) => return Diagnosis::note(e.to_string()),
    };
    if steps[0] != root {
        return Diagnosis::note("first step is not the problem equation");
    }
    let mut best = Best::new();
    let form = crate::reduction::Form::Typed(t.problem_type);
    if let Err(e) = walk(&root, &form, &[], 0, &steps, &mut best) {
        return Diagnosis::note(e.to_string());
    }
    let baseline = best.remove(&Vec::new()).unwrap_or((false, 0));
    if baseline.0 {
        return Diagnosis::default();
    }
    let rank = |ids: &Vec<MisconceptionId>| (ids.len(), ids.clone());
    let fulls: Vec<&Vec<MisconceptionId>> =
        best.iter().filter(|(_, v)| v.0).map(|(k, _)| k).collect();
    let mut chosen: Vec<(Vec<MisconceptionId>, MatchQuality)> = if !fulls.is_empty() {
        fulls.into_iter().map(|k| (k.clone(), MatchQuality::Full)).collect()
    } else {
        let longest = best.values().map(|v| v.1).max().unwrap_or(0);
        if longest <= baseline.1 {
            return Diagnosis::note("no misconception explains the steps better than a correct path");
        }
        best.iter()
            .filter(|(_, v)| v.1 == longest)
            .map(|(k, _)| (k.clone(), MatchQuality::Prefix { matched: longest }))
            .collect()
    };
    chosen.sort_by_key(|(ids, _)| rank(ids));
    Diagnosis {
        matches: chosen
            .into_iter()
            .map(|(misconceptions, quality)| DiagnosisMatch {
                misconceptions,
                quality,
            })
            .collect(),
        note: None,
    }
}

/// Parses JSON-lines transcripts. Blank lines are skipped; the first bad
/// line is a schema error.
pub fn read_transcripts(text: &str) -> Result<Vec<Transcript>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t = serde_json::from_str(line).map_err(|e| Error::Schema {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(t);
    }
    Ok(out)
}
