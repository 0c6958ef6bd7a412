//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any FAIL.
//!
//! Oracles are test-local: equations are rendered from slot values by a
//! formatter written here, and rule outcomes are computed here from the
//! slot arithmetic of each rewrite.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use malgebra::eval::{
    default_theta, diagnose, score, CsmVerdict, GradeMode, MatchQuality, Transcript,
};
use malgebra::forge::{build, generate, malgorithm, solvable, DatasetConfig, InstanceSampler, Label};
use malgebra::space::{enumerate, leaf_answers};
use malgebra::{
    apply_misconception, catalog, classify, reduce, reduce_step, reduce_with_misconceptions,
    solve_terminal, Answer, Edge, Equation, Form, MisconceptionId, MisconceptionSet, ProblemType,
    Rational,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use MisconceptionId as M;
use ProblemType::*;

const ROUND_TRIP_LIMIT: Duration = Duration::from_secs(5);
const CLASSIFY_LIMIT: Duration = Duration::from_secs(10);
const SOLVE_LIMIT: Duration = Duration::from_secs(30);
const GENERATE_LIMIT: Duration = Duration::from_secs(120);
const DIAGNOSE_RATE_PERCENT: usize = 98;

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn r(n: i64) -> Rational {
    Rational::integer(n)
}

/// Nonzero integer in [-9, 9].
fn nonzero(rng: &mut ChaCha8Rng) -> Rational {
    let v: i64 = rng.random_range(1..=9);
    r(if rng.random_bool(0.5) { v } else { -v })
}

/// Nonzero rational with a small denominator.
fn fraction(rng: &mut ChaCha8Rng) -> Rational {
    let n: i64 = rng.random_range(1..=20);
    let d: i64 = rng.random_range(1..=5);
    let n = if rng.random_bool(0.5) { n } else { -n };
    Rational::new(n, d)
}

fn slots(ty: ProblemType, rng: &mut ChaCha8Rng, draw: fn(&mut ChaCha8Rng) -> Rational) -> Vec<Rational> {
    (0..ty.arity()).map(|_| draw(rng)).collect()
}

/// Canonical surface text of a template instance.
fn render(ty: ProblemType, s: &[Rational]) -> String {
    let t = |v: &Rational| {
        if v.is_negative() {
            format!("- {}", v.abs())
        } else {
            format!("+ {v}")
        }
    };
    let tx = |v: &Rational| format!("{}x", t(v));
    match ty {
        T1 => format!("{}x = {}", s[0], s[1]),
        T2 => format!("{}x = {} {}", s[0], s[1], t(&s[2])),
        T3 => format!("{}x = {} * {}", s[0], s[1], s[2]),
        T4 => format!("{}x {} = {}", s[0], tx(&s[1]), s[2]),
        T5 => format!("{}x {} = {}", s[0], t(&s[1]), s[2]),
        T6 => format!("{} {} = {}", s[0], tx(&s[1]), s[2]),
        T7 if s[2].is_zero() => format!("{}x = {}x", s[0], s[1]),
        T7 => format!("{}x = {}x {}", s[0], s[1], t(&s[2])),
        T8 => format!("{}x = {}({} * {})", s[0], s[1], s[2], s[3]),
        T9 => format!("{}x = {}({}x {})", s[0], s[1], s[2], t(&s[3])),
        T10 => format!("{}x = {} {} * {}", s[0], s[1], t(&s[2]), s[3]),
        T11 => format!("{} {} {} = {}", s[0], tx(&s[1]), tx(&s[2]), s[3]),
        T12 => format!("{}x = {} {}({}x {})", s[0], s[1], t(&s[2]), s[3], t(&s[4])),
        T14 => format!("{}x {} = {}x {}", s[0], t(&s[1]), s[2], t(&s[3])),
        T15 => format!("{}x {} = {} {}", s[0], tx(&s[1]), s[2], t(&s[3])),
        T16 => format!("{}x = {}x {} {}", s[0], s[1], t(&s[2]), t(&s[3])),
    }
}

fn parse(text: &str) -> Equation {
    text.parse().unwrap_or_else(|e| panic!("`{text}` does not parse: {e}"))
}

fn elapsed(start: Instant) -> String {
    format!("{:.2}s", start.elapsed().as_secs_f64())
}

/// `(type, slots)` for the same 15 x 1000 instances used by criteria 2 and 3.
fn classifier_instances() -> Vec<(ProblemType, Vec<Rational>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    ProblemType::ALL
        .iter()
        .flat_map(|&ty| (0..1000).map(move |_| ty))
        .map(|ty| (ty, slots(ty, &mut rng, nonzero)))
        .collect()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    for i in 0..10_000 {
        let ty = ProblemType::ALL[i % 15];
        let draw = if i % 2 == 0 { nonzero } else { fraction };
        let text = render(ty, &slots(ty, &mut rng, draw));
        let e = parse(&text);
        let printed = e.to_string();
        if printed != text || parse(&printed) != e {
            failures.push(text);
        }
    }
    let time = start.elapsed();
    if !failures.is_empty() {
        return Err(format!("{} of 10000 failed, first `{}`", failures.len(), failures[0]));
    }
    if time > ROUND_TRIP_LIMIT {
        return Err(format!("10000/10000 but took {}", elapsed(start)));
    }
    Ok(format!("10000/10000 in {}", elapsed(start)))
}

fn criterion_2(instances: &[(ProblemType, Vec<Rational>)]) -> Verdict {
    let start = Instant::now();
    let wrong: Vec<String> = instances
        .iter()
        .filter_map(|(ty, s)| {
            let text = render(*ty, s);
            match classify(&parse(&text)) {
                Ok(found) if found == *ty => None,
                other => Some(format!("{text} -> {other:?}")),
            }
        })
        .collect();
    if let Some(first) = wrong.first() {
        return Err(format!("{} of 15000 misclassified, first {first}", wrong.len()));
    }
    if start.elapsed() > CLASSIFY_LIMIT {
        return Err(format!("15000/15000 but took {}", elapsed(start)));
    }
    Ok(format!("15000/15000 in {}", elapsed(start)))
}

/// Degenerate instances (zero slope) must fail in both the solver and the
/// closed form; all others must agree exactly.
fn criterion_3(instances: &[(ProblemType, Vec<Rational>)]) -> Verdict {
    let start = Instant::now();
    let mut degenerate = 0;
    let mut wrong = Vec::new();
    for (ty, s) in instances {
        let e = parse(&render(*ty, s));
        match (reduce(&e), e.closed_form_solution()) {
            (Ok(trace), Ok(v)) if trace.answer() == Some(Answer::Value(v.clone())) => {}
            (Err(_), Err(_)) => degenerate += 1,
            (got, want) => wrong.push(format!("{e}: {:?} vs {want:?}", got.map(|t| t.answer()))),
        }
    }
    if let Some(first) = wrong.first() {
        return Err(format!("{} of 15000 disagree, first {first}", wrong.len()));
    }
    if start.elapsed() > SOLVE_LIMIT {
        return Err(format!("15000/15000 but took {}", elapsed(start)));
    }
    Ok(format!(
        "15000/15000 agree ({degenerate} zero-slope instances rejected by both) in {}",
        elapsed(start)
    ))
}

fn criterion_4(instances: &[(ProblemType, Vec<Rational>)]) -> Verdict {
    let mut sets: Vec<MisconceptionSet> = MisconceptionId::ALL
        .iter()
        .map(|&m| MisconceptionSet::single(m))
        .collect();
    sets.push(MisconceptionSet::full());
    let mut correct = 0;
    let mut misconception = 0;
    let mut longest = 0;
    for (i, (ty, s)) in instances.iter().enumerate() {
        let e = parse(&render(*ty, s));
        if let Ok(trace) = reduce(&e) {
            let solves = trace.edges().filter(|e| *e == Edge::Solve).count();
            if trace.reduction_steps() > 5 || solves != 1 || trace.edges().count() != trace.reduction_steps() + 1 {
                return Err(format!("correct trace of {e} has {} edges", trace.edges().count()));
            }
            correct += 1;
        }
        // Every misconception set on the first 100 instances of each type.
        if i % 1000 >= 100 {
            continue;
        }
        for ms in &sets {
            match reduce_with_misconceptions(&e, ms) {
                Ok(trace) => {
                    let n = trace.edges().count();
                    longest = longest.max(n);
                    if n > 12 {
                        return Err(format!("{e} under {ms} takes {n} steps"));
                    }
                    misconception += 1;
                }
                Err(malgebra::Error::NonTermination(_)) => {
                    return Err(format!("{e} under {ms} does not terminate"))
                }
                Err(_) => {}
            }
        }
    }
    Ok(format!(
        "{correct} correct traces within 5+1, {misconception} misconception traces within 12 (longest {longest})"
    ))
}

/// What firing `m` on `(ty, s)` must produce.
#[derive(Debug, PartialEq)]
enum Expect {
    Equation(String, Form),
    Value(Rational),
}

fn typed(ty: ProblemType, s: &[Rational]) -> Option<Expect> {
    Some(Expect::Equation(render(ty, s), Form::Typed(ty)))
}

fn constants(lhs: Rational, rhs: Rational) -> Option<Expect> {
    let form = if lhs == rhs { Form::Identity } else { Form::NoSolution };
    Some(Expect::Equation(format!("{lhs} = {rhs}"), form))
}

/// Independent oracle: the slot-level result of each rewrite, `None` where
/// the rule does not fire.
fn oracle(m: MisconceptionId, ty: ProblemType, s: &[Rational]) -> Option<Expect> {
    let (a, b) = (&s[0], &s[1]);
    let c = s.get(2);
    let d = s.get(3);
    let e = s.get(4);
    match (m, ty) {
        (M::M19, T1) => Some(Expect::Value(a + b)),
        (M::M20S20, T1) => Some(Expect::Value(b.clone())),
        (M::M21, T1) => Some(Expect::Value(a - b)),
        (M::M22S1, T1) => a.checked_div(b).map(Expect::Value),

        // A(part) -> A + (part)
        (M::M1, T8) => typed(T10, &[a.clone(), b.clone(), c?.clone(), d?.clone()]),
        (M::M1, T9) => typed(T16, &[a.clone(), c?.clone(), b.clone(), d?.clone()]),
        (M::M1, T10) => typed(T2, &[a.clone(), b + c?, d?.clone()]),
        (M::M1, T12) => typed(T16, &[a.clone(), d?.clone(), b + c?, e?.clone()]),

        // Multiply only the first term.
        (M::M2S3, T9) => typed(T7, &[a.clone(), b * c?, d?.clone()]),
        (M::M2S3, T12) => typed(T16, &[a.clone(), c? * d?, b.clone(), e?.clone()]),

        // Add before multiplying.
        (M::M3, T10) => typed(T3, &[a.clone(), b + c?, d?.clone()]),
        (M::M3, T12) => typed(T9, &[a.clone(), b + c?, d?.clone(), e?.clone()]),

        (M::M4, T8) => typed(T3, &[a.clone(), b * c?, b * d?]),

        (M::M5, T9) => typed(T9, &[a.clone(), b.clone(), b * c?, b * d?]),
        (M::M5, T12) => typed(T12, &[a.clone(), b.clone(), c?.clone(), c? * d?, c? * e?]),

        (M::M6, T9) if b.is_negative() && d?.is_negative() => typed(T7, &[a.clone(), b * c?, -(b * d?)]),
        (M::M6, T12) if c?.is_negative() && e?.is_negative() => {
            typed(T16, &[a.clone(), c? * d?, b.clone(), -(c? * e?)])
        }

        // Multiply only the constant term.
        (M::M8, T9) => typed(T7, &[a.clone(), c?.clone(), b * d?]),
        (M::M8, T12) => typed(T16, &[a.clone(), d?.clone(), b.clone(), c? * e?]),

        (M::M11, T14) => typed(T15, &[a.clone(), c?.clone(), b.clone(), d?.clone()]),

        (M::M12S15, T5 | T6) => typed(T1, &[a + b, c?.clone()]),
        (M::M12S15, T7) if !c?.is_zero() => typed(T7, &[a.clone(), b + c?, r(0)]),
        (M::M12S15, T9) => typed(T7, &[a.clone(), b * &(c? + d?), r(0)]),
        (M::M12S15, T12) => typed(T7, &[a.clone(), c? * &(d? + e?), b.clone()]),

        (M::M13, T5 | T6) => constants(a + b, c?.clone()),
        (M::M13, T7) if !c?.is_zero() => typed(T1, &[a.clone(), b + c?]),
        (M::M13, T9) => typed(T3, &[a.clone(), b.clone(), c? + d?]),
        (M::M13, T12) => typed(T10, &[a.clone(), b.clone(), c?.clone(), d? + e?]),

        (M::M14, T2) if c?.is_positive() => typed(T2, &[a.clone(), b.clone(), -c?.clone()]),
        (M::M14, T4) if b.is_positive() => typed(T4, &[a.clone(), -b, c?.clone()]),
        (M::M15, T2) if c?.is_negative() => typed(T2, &[a.clone(), b.clone(), -c?.clone()]),
        (M::M15, T4) if b.is_negative() => typed(T4, &[a.clone(), -b, c?.clone()]),

        (M::M16, T3) => typed(T2, &[a.clone(), b.clone(), c?.clone()]),
        (M::M16, T10) => {
            // `B ± C * D -> B ± (C + D)` on magnitudes.
            let sum = c?.abs() + d?.clone();
            let signed = if c?.is_negative() { -sum } else { sum };
            typed(T2, &[a.clone(), b.clone(), signed])
        }

        (M::M17, T2) if c?.is_positive() => typed(T2, &[a.clone(), c?.clone(), -b]),
        (M::M17, T4) if b.is_positive() => typed(T4, &[b.clone(), -a, c?.clone()]),
        (M::M18, T2) if c?.is_negative() => typed(T2, &[a.clone(), c?.abs(), -b]),
        (M::M18, T4) if b.is_negative() => typed(T4, &[b.abs(), -a, c?.clone()]),

        _ => None,
    }
}

fn observed(m: MisconceptionId, e: &Equation) -> Option<Expect> {
    let (eq, form) = apply_misconception(m, e).ok()?;
    Some(match form {
        Form::Solved(v) => Expect::Value(v),
        form => Expect::Equation(eq.to_string(), form),
    })
}

/// For solve-step rules on types above T1: the trace follows the correct
/// path to T1 and then fires at the solve step. Returns whether it fired.
fn check_solve_step(m: MisconceptionId, e: &Equation) -> Result<bool, String> {
    let correct = reduce(e).map_err(|err| err.to_string())?;
    let trace = reduce_with_misconceptions(e, &MisconceptionSet::single(m)).map_err(|err| err.to_string())?;
    let n = correct.steps.len();
    let t1 = &correct.steps[n - 2].equation;
    let (a, b) = (t1.lhs.linear_form().unwrap().0, t1.rhs.linear_form().unwrap().1);
    let Some(want) = oracle(m, T1, &[a, b]) else {
        return (trace.steps == correct.steps)
            .then_some(false)
            .ok_or(format!("{e}: {m} cannot fire but the trace changed"));
    };
    if trace.steps.len() != n || correct.equations()[..n - 1] != trace.equations()[..n - 1] {
        return Err(format!("{e}: path diverges before the solve step"));
    }
    if trace.steps[n - 2].edge != Some(Edge::Misconception(m)) {
        return Err(format!("{e}: {m} is not the final edge"));
    }
    let got = Expect::Value(trace.steps[n - 1].equation.as_solved().cloned().ok_or("unsolved")?);
    (want == got).then_some(true).ok_or(format!("{e}: {got:?} != {want:?}"))
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pairs = 0;
    let mut checked = 0;
    for info in catalog() {
        let m = info.id;
        for &ty in &ProblemType::ALL {
            let applicable = info.applicable_types.contains(&ty);
            let mut found = 0;
            for _ in 0..20_000 {
                if found == 100 || (!applicable && found == 20) {
                    break;
                }
                let s = slots(ty, &mut rng, nonzero);
                let e = parse(&render(ty, &s));
                if !applicable {
                    if observed(m, &e).is_some() {
                        return Err(format!("{m} fires on {e} outside its types"));
                    }
                    found += 1;
                    continue;
                }
                if m.is_solve_step() && ty != T1 {
                    if solvable(&e, ty).is_none() {
                        continue;
                    }
                    if check_solve_step(m, &e)? {
                        found += 1;
                    }
                    continue;
                }
                let want = oracle(m, ty, &s);
                let got = observed(m, &e);
                if want != got {
                    return Err(format!("{m} on {e}: expected {want:?}, got {got:?}"));
                }
                if want.is_some() {
                    found += 1;
                }
            }
            if applicable {
                if found < 100 {
                    return Err(format!("only {found} instances for ({m}, {ty})"));
                }
                pairs += 1;
                checked += found;
            }
        }
    }
    let anchors = [
        (M::M2S3, "2x = 3(4x + 5)", "2x = 12x + 5"),
        (M::M8, "2x = 3(4x + 5)", "2x = 4x + 15"),
        (M::M20S20, "4x = 12", "x = 12"),
    ];
    for (m, source, target) in anchors {
        let (got, _) = apply_misconception(m, &parse(source)).map_err(|e| e.to_string())?;
        if got.to_string() != target {
            return Err(format!("anchor {m} on `{source}` gave `{got}`"));
        }
    }
    Ok(format!("{pairs} (rule, type) pairs x 100 = {checked} rewrites exact; 3 anchors match"))
}

fn criterion_6() -> Verdict {
    let sampler = InstanceSampler::new(6);
    let empty = MisconceptionSet::empty();
    for i in 0..1000u64 {
        let ty = ProblemType::ALL[(i % 15) as usize];
        let e = malgebra::forge::sample_instance(ty, &sampler, i).map_err(|e| e.to_string())?;
        let plain = reduce(&e).map_err(|e| e.to_string())?;
        let degenerate = reduce_with_misconceptions(&e, &empty).map_err(|e| e.to_string())?;
        if plain.steps != degenerate.steps {
            return Err(format!("traces differ on {e}"));
        }
    }
    Ok("1000/1000 traces identical".to_string())
}

/// State reached by replaying a choice vector.
enum Replay {
    Open(Equation, bool),
    Done(Answer, bool),
    Invalid,
}

/// Outgoing options of an open node, in the order correct edges, solve,
/// misconception. Order only has to be stable, not equal to the engine's.
fn options(e: &Equation, m: MisconceptionId, used: bool) -> Vec<Replay> {
    let ty = classify(e).expect("replayed nodes classify");
    let mut out = Vec::new();
    for (_, rule) in malgebra::taxonomy::correct_successors(ty) {
        let (next, _) = reduce_step(e, ty, rule).expect("listed edge applies");
        out.push(Replay::Open(next, used));
    }
    if ty == T1 {
        if let Ok(v) = solve_terminal(e) {
            out.push(Replay::Done(Answer::Value(v), used));
        }
    }
    if !used {
        if let Ok((next, form)) = apply_misconception(m, e) {
            out.push(match form.answer() {
                Some(answer) => Replay::Done(answer, true),
                None => Replay::Open(next, true),
            });
        }
    }
    out
}

fn replay(root: &Equation, m: MisconceptionId, choices: &[usize]) -> Replay {
    let mut state = Replay::Open(root.clone(), false);
    for &c in choices {
        let Replay::Open(e, used) = state else {
            return Replay::Invalid;
        };
        state = options(&e, m, used).into_iter().nth(c).unwrap_or(Replay::Invalid);
    }
    state
}

/// Every complete choice vector, found by extending valid prefixes one
/// position at a time and replaying each candidate from the root.
fn brute_force(root: &Equation, m: MisconceptionId) -> Vec<(String, Vec<MisconceptionId>)> {
    let mut complete = Vec::new();
    let mut prefixes: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..12 {
        let mut next = Vec::new();
        for prefix in &prefixes {
            for choice in 0..4 {
                let mut vector = prefix.clone();
                vector.push(choice);
                match replay(root, m, &vector) {
                    Replay::Open(..) => next.push(vector),
                    Replay::Done(answer, used) => {
                        complete.push((answer.to_string(), if used { vec![m] } else { vec![] }))
                    }
                    Replay::Invalid => {}
                }
            }
        }
        prefixes = next;
    }
    complete.sort();
    complete
}

fn criterion_7() -> Verdict {
    let sampler = InstanceSampler::new(7);
    let mut leaves = 0;
    for i in 0..200u64 {
        let ty = ProblemType::ALL[(i % 15) as usize];
        let ms: Vec<MisconceptionId> = catalog()
            .iter()
            .filter(|c| c.applicable_types.contains(&ty))
            .map(|c| c.id)
            .collect();
        let m = ms[(i / 15) as usize % ms.len()];
        let e = malgebra::forge::sample_instance(ty, &sampler, i).map_err(|e| e.to_string())?;
        let tree = enumerate(&e, &MisconceptionSet::single(m), 1).map_err(|e| e.to_string())?;
        let mut got: Vec<(String, Vec<MisconceptionId>)> = leaf_answers(&tree)
            .into_iter()
            .map(|(a, ids)| (a.to_string(), ids))
            .collect();
        got.sort();
        let want = brute_force(&e, m);
        if got != want {
            return Err(format!("{e} under {m}: tree {got:?} vs brute force {want:?}"));
        }
        leaves += got.len();
    }
    Ok(format!("200/200 instances, {leaves} leaves matched as multisets"))
}

fn count_label(records: &[malgebra::forge::DatasetRecord], label: Label) -> usize {
    records.iter().filter(|r| r.label == label).count()
}

fn per_type_test_counts(records: &[malgebra::forge::DatasetRecord]) -> BTreeMap<ProblemType, usize> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(r.problem_type).or_insert(0) += 1;
    }
    counts
}

fn check_test_split(records: &[malgebra::forge::DatasetRecord]) -> Result<(), String> {
    let counts = per_type_test_counts(records);
    if counts.len() != 15 || counts.values().any(|&n| n != 500) {
        return Err(format!("test split per type: {counts:?}"));
    }
    if count_label(records, Label::Correct) != records.len() {
        return Err("test split holds non-correct records".to_string());
    }
    Ok(())
}

fn criterion_8() -> Verdict {
    let base = DatasetConfig {
        seed: 8,
        ..DatasetConfig::default()
    };
    let dataset = build(&base).map_err(|e| e.to_string())?;
    if dataset.train.len() != 30_000 || count_label(&dataset.train, Label::Correct) != 30_000 {
        return Err(format!("base train holds {} records", dataset.train.len()));
    }
    let per_type = per_type_test_counts(&dataset.train);
    if per_type.values().any(|&n| n != 2000) {
        return Err(format!("base train per type: {per_type:?}"));
    }
    check_test_split(&dataset.test)?;
    let test_equations: std::collections::HashSet<&str> =
        dataset.test.iter().map(|r| r.equation.as_str()).collect();
    if dataset.train.iter().any(|r| test_equations.contains(r.equation.as_str())) {
        return Err("train and test share an equation".to_string());
    }

    let mut slowest = Duration::ZERO;
    for n_m in [100, 200, 400, 800, 1600, 3200] {
        for ratio in [0.25, 0.5, 1.0] {
            let config = DatasetConfig {
                n_m,
                ratio,
                seed: 8,
                misconception: Some(M::M1),
                ..DatasetConfig::default()
            };
            let start = Instant::now();
            let dataset = build(&config).map_err(|e| e.to_string())?;
            slowest = slowest.max(start.elapsed());
            let want_c = (ratio * n_m as f64).floor() as usize;
            let got = (
                count_label(&dataset.train, Label::Misconception),
                count_label(&dataset.train, Label::Correct),
            );
            if got != (n_m, want_c) {
                return Err(format!("n_m={n_m} ratio={ratio}: emitted {got:?}"));
            }
            check_test_split(&dataset.test)?;
        }
    }

    let largest = DatasetConfig {
        n_m: 3200,
        ratio: 1.0,
        seed: 8,
        misconception: Some(M::M1),
        ..DatasetConfig::default()
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut digests = Vec::new();
    for (name, config) in [("base", &base), ("largest", &largest)] {
        for run in 0..2 {
            let out = dir.path().join(format!("{name}-{run}"));
            let start = Instant::now();
            let manifest = generate(&DatasetConfig {
                out: out.clone(),
                ..config.clone()
            })
            .map_err(|e| e.to_string())?;
            slowest = slowest.max(start.elapsed());
            let bytes = ["train.jsonl", "test.jsonl"]
                .map(|f| std::fs::read(out.join(f)).expect("generated file"));
            digests.push((name, manifest.digest, bytes));
        }
    }
    for pair in digests.chunks(2) {
        if pair[0].1 != pair[1].1 || pair[0].2 != pair[1].2 {
            return Err(format!("{} re-run is not byte-identical", pair[0].0));
        }
    }
    if slowest > GENERATE_LIMIT {
        return Err(format!("slowest run took {:.2}s", slowest.as_secs_f64()));
    }
    Ok(format!(
        "base 30000 + 15x500 test; 18 grid configs exact; re-runs byte-identical; slowest run {:.2}s",
        slowest.as_secs_f64()
    ))
}

fn transcript(ty: ProblemType, equation: &str, answer: &str) -> Transcript {
    Transcript {
        problem_type: ty,
        equation: equation.to_string(),
        model_steps: None,
        model_answer: answer.to_string(),
    }
}

fn criterion_9() -> Verdict {
    let theta = default_theta();
    // M8 answers worked by hand: T9 gives bd/(a-c), T12 gives (b+ce)/(a-d).
    let t9 = [
        ("2x = 3(4x + 5)", "x = -15/2"),
        ("5x = -2(3x + 7)", "x = -7"),
        ("-4x = 6(x - 2)", "x = 12/5"),
        ("7x = 2(-3x - 5)", "x = -1"),
        ("3x = -5(-6x + 4)", "x = -20/9"),
    ];
    let t12 = [
        ("2x = 3 + 4(5x + 6)", "x = -9"),
        ("-3x = 1 - 2(4x - 5)", "x = -11/7"),
        ("6x = -7 + 2(-3x + 8)", "x = 1"),
        ("4x = 5 - 1(-6x + 2)", "x = 3/10"),
        ("-8x = 2 + 3(9x - 4)", "x = 10/17"),
    ];
    // The fifth T9 answer is replaced by a wrong one: 4/5 on T9, 5/5 on T12.
    let mut batch: Vec<Transcript> = t9
        .iter()
        .enumerate()
        .map(|(i, (e, a))| transcript(T9, e, if i == 4 { "x = 1000" } else { a }))
        .collect();
    batch.extend(t12.iter().map(|(e, a)| transcript(T12, e, a)));
    let report = score(&batch, M::M8, GradeMode::AnswerOnly, &theta, &theta).map_err(|e| e.to_string())?;
    if report.ma != Some(r(90)) {
        return Err(format!("MA fixture gave {:?}", report.ma));
    }
    // The replaced answer is -20/9; the engine must accept it as M8.
    let check = score(&[transcript(T9, t9[4].0, "x = -20/9")], M::M8, GradeMode::AnswerOnly, &theta, &theta)
        .map_err(|e| e.to_string())?;
    if check.per_type[&T9].misconception_match != 1 {
        return Err("hand-computed M8 answer for the fifth T9 fixture rejected".to_string());
    }

    // All-correct batch over every type, answers from the closed form.
    let sampler = InstanceSampler::new(9);
    let mut all_correct = Vec::new();
    for &ty in &ProblemType::ALL {
        for i in 0..4 {
            let e = malgebra::forge::sample_instance(ty, &sampler, i).map_err(|e| e.to_string())?;
            let v = e.closed_form_solution().map_err(|e| e.to_string())?;
            all_correct.push(transcript(ty, &e.to_string(), &format!("x = {v}")));
        }
    }
    let report = score(&all_correct, M::M8, GradeMode::AnswerOnly, &theta, &theta).map_err(|e| e.to_string())?;
    if report.oca != Some(r(100)) {
        return Err(format!("all-correct OCA gave {:?}", report.oca));
    }

    let table = [
        ((r(95), r(95)), (true, true, true)),
        ((r(95), r(60)), (true, false, false)),
        ((r(60), r(95)), (false, true, false)),
        ((r(60), r(60)), (false, false, false)),
        ((r(90), r(90)), (true, true, true)),
    ];
    for ((ma, ca_na), (p1, p2, csm)) in table {
        let v = CsmVerdict::evaluate(Some(&ma), Some(&ca_na), &theta, &theta);
        if (v.property_1, v.property_2, v.is_csm()) != (p1, p2, csm) {
            return Err(format!("verdict at MA={ma}, CA_NA={ca_na} gave {v:?}"));
        }
    }
    Ok("MA = 90 exactly; all-correct OCA = 100 exactly; 4 verdict combinations plus the boundary".to_string())
}

fn criterion_10() -> Verdict {
    let theta = default_theta();
    let sampler = InstanceSampler::new(10);
    let mut correct_batch = Vec::new();
    for &ty in &ProblemType::ALL {
        for i in 0..10 {
            let e = malgebra::forge::sample_instance(ty, &sampler, i).map_err(|e| e.to_string())?;
            let trace = reduce(&e).map_err(|e| e.to_string())?;
            correct_batch.push(Transcript {
                problem_type: ty,
                equation: e.to_string(),
                model_steps: Some(trace.equations()),
                model_answer: trace.answer().expect("answer").to_string(),
            });
        }
    }
    let mut worst_rate = (100, String::new());
    let mut diagnosed = 0;
    for info in catalog() {
        let m = info.id;
        let mut batch = Vec::new();
        for &ty in info.applicable_types {
            let mut rng = sampler.rng(&format!("acceptance/{m}/{ty}"), 0);
            let mut hits = 0;
            for j in 0..50 {
                let trace = sampler
                    .sample(ty, &mut rng, |e| malgorithm(e, m, &solvable(e, ty)?))
                    .map_err(|e| e.to_string())?;
                let t = Transcript {
                    problem_type: ty,
                    equation: trace.steps[0].equation.to_string(),
                    model_steps: Some(trace.equations()),
                    model_answer: trace.answer().expect("answer").to_string(),
                };
                let d = diagnose(&t);
                if d.matches.first().is_some_and(|top| {
                    top.misconceptions == [m] && top.quality == MatchQuality::Full
                }) {
                    hits += 1;
                }
                if j < 10 {
                    batch.push(t);
                }
            }
            diagnosed += 50;
            let rate = hits * 2;
            if rate < worst_rate.0 {
                worst_rate = (rate, format!("({m}, {ty})"));
            }
        }
        for mode in [GradeMode::AnswerOnly, GradeMode::StrictSteps] {
            let report = score(&batch, m, mode, &theta, &theta).map_err(|e| e.to_string())?;
            if report.ma != Some(r(100)) {
                return Err(format!("{m} malgorithm batch MA = {:?} ({mode:?})", report.ma));
            }
            let report = score(&correct_batch, m, mode, &theta, &theta).map_err(|e| e.to_string())?;
            if report.oca != Some(r(100)) {
                return Err(format!("correct batch OCA = {:?} under {m} ({mode:?})", report.oca));
            }
        }
    }
    if worst_rate.0 < DIAGNOSE_RATE_PERCENT {
        return Err(format!("diagnose rank-1 rate {}% on {}", worst_rate.0, worst_rate.1));
    }
    Ok(format!(
        "MA = 100 and OCA = 100 for all 19; diagnose rank-1 on {diagnosed} transcripts, worst pair {}%",
        worst_rate.0
    ))
}

fn main() -> ExitCode {
    let instances = classifier_instances();
    let criteria: Vec<Criterion> = vec![
        ("parser round trip", Box::new(criterion_1)),
        ("classifier exactness", Box::new(|| criterion_2(&instances))),
        ("solver oracle equivalence", Box::new(|| criterion_3(&instances))),
        ("termination bound", Box::new(|| criterion_4(&instances))),
        ("rule fidelity", Box::new(criterion_5)),
        ("empty-set degeneration", Box::new(criterion_6)),
        ("solution-space brute force", Box::new(criterion_7)),
        ("dataset regimes", Box::new(criterion_8)),
        ("metric fixtures", Box::new(criterion_9)),
        ("end-to-end self-consistency", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
