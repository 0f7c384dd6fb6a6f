//! Random families and the engine-agreement harness behind `chainsynth bench`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::family::{Branch, Family, Formula, Hole, Realisation};
use crate::model::{check_with, CmpOp, Specification};
use crate::synth::{solve, Engine, Query, SynthError, SynthOptions, Verdict};

/// Shape bounds for [`random_family`].
#[derive(Debug, Clone)]
pub struct RandomShape {
    pub max_states: usize,
    pub max_holes: usize,
    pub max_options: usize,
    pub max_realisations: u128,
}

impl Default for RandomShape {
    fn default() -> Self {
        RandomShape {
            max_states: 12,
            max_holes: 4,
            max_options: 4,
            max_realisations: 256,
        }
    }
}

/// A random family within `shape`. Each state has one to three branches;
/// roughly half of the branches are hole references, a few of them on two
/// holes at once.
pub fn random_family(rng: &mut impl Rng, shape: &RandomShape) -> Family {
    let n = rng.gen_range(2..=shape.max_states.max(2));
    let mut sizes: Vec<usize> = Vec::new();
    let mut product = 1u128;
    for _ in 0..rng.gen_range(1..=shape.max_holes.max(1)) {
        let k = rng.gen_range(2..=shape.max_options.max(2));
        if product * k as u128 > shape.max_realisations {
            break;
        }
        product *= k as u128;
        sizes.push(k);
    }
    let holes: Vec<Hole> = sizes
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            Hole::new(format!("h{i}"), (0..k).map(|o| format!("o{o}")).collect())
                .with_costs((0..k).map(|_| rng.gen_range(0..4)).collect())
        })
        .collect();
    let transitions = (0..n)
        .map(|_| {
            let m = rng.gen_range(1..=3usize);
            let weights: Vec<u32> = (0..m).map(|_| rng.gen_range(1..=10)).collect();
            let total: u32 = weights.iter().sum();
            let mut left = 1.0;
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| {
                    let p = if i + 1 == m {
                        left
                    } else {
                        w as f64 / total as f64
                    };
                    left -= p;
                    random_branch(rng, p, n, &sizes)
                })
                .collect()
        })
        .collect();
    Family::new(0, transitions, holes).expect("generated family is well formed")
}

fn random_branch(rng: &mut impl Rng, p: f64, n: usize, sizes: &[usize]) -> Branch {
    if sizes.is_empty() || rng.gen_bool(0.5) {
        return Branch::fixed(p, rng.gen_range(0..n));
    }
    let h = rng.gen_range(0..sizes.len());
    if sizes.len() > 1 && rng.gen_bool(0.15) {
        let mut g = rng.gen_range(0..sizes.len());
        while g == h {
            g = rng.gen_range(0..sizes.len());
        }
        let table = (0..sizes[h] * sizes[g])
            .map(|_| rng.gen_range(0..n))
            .collect();
        return Branch {
            prob: p,
            target: crate::family::Target::HoleRef {
                holes: vec![h, g],
                table,
            },
        };
    }
    Branch::hole(p, h, (0..sizes[h]).map(|_| rng.gen_range(0..n)).collect())
}

/// A random goal and threshold whose distance to every member's value is
/// at least `gap`, so that no engine decides a member within rounding of
/// the threshold. `None` when no such threshold was found.
pub fn random_spec(
    rng: &mut impl Rng,
    fam: &Family,
    opts: &SynthOptions,
    gap: f64,
) -> Result<Option<Specification>, SynthError> {
    let n = fam.len();
    let mut goal: Vec<usize> = (1..n).collect();
    goal.shuffle(rng);
    goal.truncate(rng.gen_range(1..=2.min(n - 1).max(1)));
    if goal.is_empty() {
        goal.push(0);
    }
    let probe = Specification::new(goal.clone(), CmpOp::Ge, 0.0)?;
    let mut values = Vec::new();
    for r in fam.realisations(&fam.full()) {
        values.push(check_with(&fam.chain_of(&r), &probe, &opts.checker)?.value);
    }
    let op = *[CmpOp::Ge, CmpOp::Gt, CmpOp::Le, CmpOp::Lt]
        .choose(rng)
        .expect("nonempty");
    for _ in 0..32 {
        let t: f64 = match values.choose(rng) {
            Some(&v) if rng.gen_bool(0.7) => (v + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0),
            _ => rng.gen_range(0.0..=1.0),
        };
        let tol = opts.tolerance();
        let clear = values
            .iter()
            .all(|&v| (v - (t + tol)).abs() > gap && (v - (t - tol)).abs() > gap);
        if clear {
            return Ok(Some(Specification::new(goal, op, t)?));
        }
    }
    Ok(None)
}

/// Totals for one engine across a benchmark run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EngineTotals {
    pub runs: u64,
    pub candidates: u64,
    pub checks: u64,
    pub wall_ms: u64,
}

/// One engine disagreeing with the enumeration oracle.
#[derive(Debug, Clone)]
pub struct Disagreement {
    pub instance: usize,
    pub engine: Engine,
    pub query: String,
    pub detail: String,
    /// Family JSON of the smallest restriction that still disagrees.
    pub repro: String,
    pub spec: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub instances: usize,
    pub skipped: usize,
    pub totals: BTreeMap<&'static str, EngineTotals>,
    pub failures: Vec<Disagreement>,
}

impl BenchReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "instances {}  skipped {}  failures {}",
            self.instances,
            self.skipped,
            self.failures.len()
        );
        let _ = writeln!(
            s,
            "{:<8}{:>8}{:>14}{:>12}{:>10}",
            "engine", "runs", "candidates", "checks", "ms"
        );
        for (name, t) in &self.totals {
            let _ = writeln!(
                s,
                "{:<8}{:>8}{:>14}{:>12}{:>10}",
                name, t.runs, t.candidates, t.checks, t.wall_ms
            );
        }
        for f in &self.failures {
            let _ = writeln!(
                s,
                "instance {} engine {} query {}: {}\n  spec {}\n  family {}",
                f.instance, f.engine, f.query, f.detail, f.spec, f.repro
            );
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "instances": self.instances,
            "skipped": self.skipped,
            "engines": self.totals.iter().map(|(k, t)| (k.to_string(), serde_json::json!({
                "runs": t.runs,
                "candidates": t.candidates,
                "checks": t.checks,
                "wall_ms": t.wall_ms,
            }))).collect::<serde_json::Map<_, _>>(),
            "failures": self.failures.iter().map(|f| serde_json::json!({
                "instance": f.instance,
                "engine": f.engine.name(),
                "query": f.query,
                "detail": f.detail,
                "spec": f.spec,
                "family": serde_json::from_str::<serde_json::Value>(&f.repro).unwrap_or_default(),
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub seed: u64,
    pub instances: usize,
    pub shape: RandomShape,
    pub engines: Vec<Engine>,
    pub opts: SynthOptions,
    /// Agreement slack on optimal values.
    pub value_tolerance: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 0,
            instances: 100,
            shape: RandomShape::default(),
            engines: Engine::ALL.to_vec(),
            opts: SynthOptions::default(),
            value_tolerance: 1e-6,
        }
    }
}

/// Compares `engine` with the oracle on one query; `Some(detail)` on
/// disagreement.
fn compare(
    fam: &Family,
    q: &Query,
    engine: Engine,
    oracle: &Verdict,
    cfg: &BenchConfig,
    totals: &mut EngineTotals,
) -> Option<String> {
    let out = match solve(engine, fam, q, &cfg.opts) {
        Ok(out) => out,
        Err(e) => return Some(format!("error: {e}")),
    };
    totals.runs += 1;
    totals.candidates += out.stats.candidates;
    totals.checks += out.stats.checks;
    totals.wall_ms += out.stats.wall_ms;
    let got = &out.verdict;
    match (oracle, got) {
        (Verdict::Partition { .. }, _) if got != oracle => Some(format!(
            "partition differs: {} vs oracle {}",
            show(got),
            show(oracle)
        )),
        (Verdict::Feasible { .. }, Verdict::Feasible { witness, .. }) => {
            let v = check_with(&fam.chain_of(witness), &q.spec, &cfg.opts.checker).ok()?;
            let within = q.budget.is_none_or(|b| fam.cost(witness) <= b);
            (!v.holds || !within).then(|| format!("witness {witness} is not a solution"))
        }
        (Verdict::Optimal { value: a, .. }, Verdict::Optimal { value: b, .. }) => {
            let ok = match q.kind {
                crate::synth::QueryKind::EpsOptimal(e) => *b >= (1.0 - e) * a - cfg.value_tolerance,
                _ => (a - b).abs() <= cfg.value_tolerance,
            };
            (!ok).then(|| format!("value {b} vs oracle {a}"))
        }
        (Verdict::Unsatisfiable, Verdict::Unsatisfiable) => None,
        (Verdict::Partition { .. }, _) => None,
        _ => Some(format!("{} vs oracle {}", show(got), show(oracle))),
    }
}

fn show(v: &Verdict) -> String {
    match v {
        Verdict::Partition { accepted, rejected } => format!(
            "T=[{}] F=[{}]",
            accepted
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(" "),
            rejected
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ),
        Verdict::Feasible { witness, value, .. } | Verdict::Optimal { witness, value, .. } => {
            format!("{} {witness} value {value}", v.kind())
        }
        Verdict::Unsatisfiable => "unsatisfiable".into(),
    }
}

/// Pins holes to the options of `r` one at a time while the disagreement
/// persists, and returns the smallest such family.
fn shrink(fam: &Family, q: &Query, engine: Engine, r: &Realisation, cfg: &BenchConfig) -> Family {
    let mut cur = fam.clone();
    for h in 0..fam.holes().len() {
        let mut pinned = cur.constraints().to_vec();
        pinned.push(Formula::atom(h, r.option(h)));
        let Ok(candidate) = cur.clone().with_constraints(pinned) else {
            continue;
        };
        let Ok(oracle) = solve(Engine::Enumerate, &candidate, q, &cfg.opts) else {
            continue;
        };
        let mut scratch = EngineTotals::default();
        if compare(&candidate, q, engine, &oracle.verdict, cfg, &mut scratch).is_some() {
            cur = candidate;
        }
    }
    cur
}

/// Runs every configured engine on `cfg.instances` random families with
/// partition, feasibility, max and min queries, using enumeration as the
/// oracle.
pub fn run_bench(cfg: &BenchConfig) -> BenchReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = BenchReport::default();
    for &e in &cfg.engines {
        report.totals.insert(e.name(), EngineTotals::default());
    }
    for i in 0..cfg.instances {
        let fam = random_family(&mut rng, &cfg.shape);
        let spec = match random_spec(&mut rng, &fam, &cfg.opts, 1e-5) {
            Ok(Some(s)) => s,
            _ => {
                report.skipped += 1;
                continue;
            }
        };
        report.instances += 1;
        let goal = spec.goal().to_vec();
        let budget = rng.gen_bool(0.3).then(|| rng.gen_range(3..30));
        let queries = [
            Query::partition(spec.clone()),
            Query::feasibility(spec.clone()).with_budget(budget),
            Query::max(goal.clone()).expect("goal is nonempty"),
            Query::min(goal.clone()).expect("goal is nonempty"),
            Query::eps_optimal(goal, 0.1).expect("goal is nonempty"),
        ];
        for q in &queries {
            let oracle = match solve(Engine::Enumerate, &fam, q, &cfg.opts) {
                Ok(o) => o.verdict,
                Err(_) => continue,
            };
            for &e in &cfg.engines {
                if e == Engine::Enumerate {
                    continue;
                }
                let totals = report.totals.get_mut(e.name()).expect("engine registered");
                if let Some(detail) = compare(&fam, q, e, &oracle, cfg, totals) {
                    let pivot = match &oracle {
                        Verdict::Partition { accepted, rejected } => {
                            accepted.first().or(rejected.first()).cloned()
                        }
                        v => v.witness().cloned(),
                    }
                    .unwrap_or_else(|| fam.full().first());
                    let small = shrink(&fam, q, e, &pivot, cfg);
                    report.failures.push(Disagreement {
                        instance: i,
                        engine: e,
                        query: q.kind.name().to_string(),
                        detail,
                        repro: small.to_json(),
                        spec: format!(
                            "P{}{} [F state in {:?}]",
                            spec.op(),
                            spec.threshold(),
                            spec.goal()
                        ),
                    });
                }
            }
            if let Some(t) = report.totals.get_mut(Engine::Enumerate.name()) {
                if let Ok(o) = solve(Engine::Enumerate, &fam, q, &cfg.opts) {
                    t.runs += 1;
                    t.candidates += o.stats.candidates;
                    t.checks += o.stats.checks;
                    t.wall_ms += o.stats.wall_ms;
                }
            }
        }
    }
    report
}

/// One hole choosing the successor of the initial state's first branch:
/// every option but the last sends it straight to the goal. With
/// `P<=0.3 [F goal]` only the last option is a solution.
pub fn pruning_instance(options: usize) -> (Family, Specification) {
    assert!(options >= 1);
    // 0 init, 1 goal, 2 safe sink
    let table: Vec<usize> = (0..options)
        .map(|o| if o + 1 == options { 2 } else { 1 })
        .collect();
    let transitions = vec![
        vec![Branch::hole(0.5, 0, table), Branch::fixed(0.5, 2)],
        vec![Branch::fixed(1.0, 1)],
        vec![Branch::fixed(1.0, 2)],
    ];
    let hole = Hole::new("edge", (0..options).map(|o| format!("o{o}")).collect());
    let fam = Family::new(0, transitions, vec![hole]).expect("well formed");
    let spec = Specification::new(vec![1], CmpOp::Le, 0.3).expect("valid");
    (fam, spec)
}

/// Two holes of `options` options each, `options²` members. Hole `a` picks
/// the initial state's first successor and only its last option avoids the
/// goal; hole `b` picks where a middle state goes, where the last tenth of
/// its options lead to states reaching the goal with small probability and
/// the rest lead to the goal. Exactly `⌈options/10⌉` members satisfy
/// `P<=0.3 [F goal]`.
pub fn pruning_grid(options: usize) -> (Family, Specification) {
    assert!(options >= 2);
    // 0 init, 1 goal, 2 safe, 3 middle, 4.. soft states
    let good_b = options.div_ceil(10);
    let soft = 4;
    let a_table: Vec<usize> = (0..options)
        .map(|o| if o + 1 == options { 2 } else { 1 })
        .collect();
    let b_table: Vec<usize> = (0..options)
        .map(|o| {
            if o + good_b >= options {
                soft + (o + good_b - options)
            } else {
                1
            }
        })
        .collect();
    let mut transitions = vec![
        vec![Branch::hole(0.5, 0, a_table), Branch::fixed(0.5, 3)],
        vec![Branch::fixed(1.0, 1)],
        vec![Branch::fixed(1.0, 2)],
        vec![Branch::hole(0.8, 1, b_table), Branch::fixed(0.2, 2)],
    ];
    for k in 0..good_b {
        let p = 0.05 + 0.4 * (k as f64) / (good_b as f64);
        transitions.push(vec![Branch::fixed(p, 1), Branch::fixed(1.0 - p, 2)]);
    }
    let holes = vec![
        Hole::new("a", (0..options).map(|o| format!("o{o}")).collect()),
        Hole::new("b", (0..options).map(|o| format!("o{o}")).collect()),
    ];
    let fam = Family::new(0, transitions, holes).expect("well formed");
    let spec = Specification::new(vec![1], CmpOp::Le, 0.3).expect("valid");
    (fam, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::cegis_solve;

    #[test]
    fn random_families_respect_the_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shape = RandomShape::default();
        for _ in 0..50 {
            let fam = random_family(&mut rng, &shape);
            assert!(fam.len() <= shape.max_states);
            assert!(fam.product_size() <= shape.max_realisations);
        }
    }

    #[test]
    fn small_agreement_run() {
        let cfg = BenchConfig {
            instances: 20,
            ..BenchConfig::default()
        };
        let report = run_bench(&cfg);
        assert!(report.failures.is_empty(), "{}", report.render());
        assert!(report.instances > 10);
    }

    #[test]
    fn single_member_family() {
        let (fam, spec) = pruning_instance(1);
        for e in Engine::ALL {
            let out = solve(
                e,
                &fam,
                &Query::partition(spec.clone()),
                &SynthOptions::default(),
            )
            .unwrap();
            assert_eq!(
                out.verdict,
                Verdict::Partition {
                    accepted: vec![Realisation::new(vec![0])],
                    rejected: vec![],
                }
            );
        }
    }

    #[test]
    fn one_conflict_prunes_every_bad_edge() {
        let (fam, spec) = pruning_instance(64);
        let out = cegis_solve(&fam, &Query::feasibility(spec), &SynthOptions::default()).unwrap();
        assert_eq!(out.verdict.witness(), Some(&Realisation::new(vec![63])));
        assert_eq!(out.stats.checks, 2);
    }

    #[test]
    fn grid_has_the_advertised_solutions() {
        let (fam, spec) = pruning_grid(20);
        let out = solve(
            Engine::Enumerate,
            &fam,
            &Query::partition(spec),
            &SynthOptions::default(),
        )
        .unwrap();
        let Verdict::Partition { accepted, .. } = out.verdict else {
            unreachable!()
        };
        assert_eq!(accepted.len(), 2);
        assert!(accepted
            .iter()
            .all(|r| r.option(0) == 19 && r.option(1) >= 18));
    }
}
