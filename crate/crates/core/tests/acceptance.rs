//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use chainsynth::bench::{random_family, random_spec, RandomShape};
use chainsynth::family::{Consistency, Family, Quotient, Realisation, Subfamily};
use chainsynth::model::{
    check_with, mdp_extremal, reach_probability, reach_probability_with, sub_mc, CheckerConfig,
    CmpOp, MarkovChain, Optimum, SolveMethod, Specification,
};
use chainsynth::synth::{
    cegis_solve, solve, Cegar, Engine, Query, StepVerdict, SynthOptions, TraceRecord, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VALUE_TOL: f64 = 1e-6;
const SUBMC_TOL: f64 = 1e-7;
const NUMERIC_TOL: f64 = 1e-6;
const PARTITION_TIME: Duration = Duration::from_secs(1);
const AGREEMENT_TIME: Duration = Duration::from_secs(300);
const BENCH_TIME: Duration = Duration::from_secs(60);
const AGREEMENT_FAMILIES: usize = 200;
const MONOTONICITY_TRIPLES: usize = 1000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn sketch(name: &str) -> Family {
    let path = format!("{}/sketches/{name}", env!("CARGO_MANIFEST_DIR"));
    chainsynth::sketch::load(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn spec_of(fam: &Family, text: &str) -> Specification {
    let p = chainsynth::sketch::parse_property(text).unwrap();
    let goal = chainsynth::sketch::goal_states_of(fam, &p.goal).unwrap();
    Specification::new(goal, p.op, p.threshold).unwrap()
}

fn goal_of(fam: &Family, text: &str) -> Vec<usize> {
    chainsynth::sketch::goal_states(fam, text).unwrap()
}

fn r(fam: &Family, text: &str) -> Realisation {
    fam.parse_realisation(text).unwrap()
}

fn opts() -> SynthOptions {
    SynthOptions {
        trace: true,
        ..SynthOptions::default()
    }
}

fn ac1() -> Outcome {
    let fam = sketch("toy.sk");
    let q = Query::partition(spec_of(&fam, "P>=0.1 [F s=4]"));
    let want = Verdict::Partition {
        accepted: vec![r(&fam, "k2=2,k3=4"), r(&fam, "k2=3,k3=4")],
        rejected: vec![r(&fam, "k2=2,k3=2"), r(&fam, "k2=3,k3=2")],
    };
    let mut times = Vec::new();
    for e in Engine::ALL {
        let t = Instant::now();
        let out = solve(e, &fam, &q, &opts()).map_err(|x| x.to_string())?;
        let dt = t.elapsed();
        ensure(out.verdict == want, format!("{e}: {:?}", out.verdict))?;
        ensure(dt < PARTITION_TIME, format!("{e} took {dt:?}"))?;
        times.push(format!("{e} {:.1} ms", dt.as_secs_f64() * 1e3));
    }
    Ok(format!(
        "T={{r2,r4}} F={{r1,r3}} for all engines ({})",
        times.join(", ")
    ))
}

fn ac2() -> Outcome {
    let fam = sketch("toy.sk");
    let q = Query::max(goal_of(&fam, "s=4")).unwrap();
    let ok = [r(&fam, "k2=2,k3=4"), r(&fam, "k2=3,k3=4")];
    for e in Engine::ALL {
        let out = solve(e, &fam, &q, &opts()).map_err(|x| x.to_string())?;
        let v = out.verdict.value().ok_or("no value")?;
        ensure((v - 1.0).abs() <= VALUE_TOL, format!("{e}: value {v}"))?;
        let w = out.verdict.witness().ok_or("no witness")?;
        ensure(ok.contains(w), format!("{e}: witness {w}"))?;
    }
    Ok("max = 1.0 with witness r2 or r4 for all engines".into())
}

fn ac3() -> Outcome {
    let fam = sketch("toy.sk");
    let costs: Vec<u64> = ["k2=2,k3=2", "k2=2,k3=4", "k2=3,k3=2", "k2=3,k3=4"]
        .iter()
        .map(|t| fam.cost(&r(&fam, t)))
        .collect();
    ensure(costs == [8, 10, 11, 11], format!("costs {costs:?}"))?;
    Ok("costs 8, 10, 11, 11".into())
}

fn ac4() -> Outcome {
    let fam = sketch("toy.sk");
    let goal = goal_of(&fam, "s=4");
    for e in Engine::ALL {
        let q = |b| Query::max(goal.clone()).unwrap().with_budget(Some(b));
        let w10 = solve(e, &fam, &q(10), &opts()).map_err(|x| x.to_string())?;
        ensure(
            w10.verdict.witness() == Some(&r(&fam, "k2=2,k3=4")),
            format!("{e} B=10: {:?}", w10.verdict),
        )?;
        let w9 = solve(e, &fam, &q(9), &opts()).map_err(|x| x.to_string())?;
        ensure(
            w9.verdict.witness() == Some(&r(&fam, "k2=2,k3=2")),
            format!("{e} B=9: {:?}", w9.verdict),
        )?;
        let w7 = solve(e, &fam, &q(7), &opts()).map_err(|x| x.to_string())?;
        ensure(
            w7.verdict == Verdict::Unsatisfiable,
            format!("{e} B=7: {:?}", w7.verdict),
        )?;
    }
    Ok("B=10 -> r2, B=9 -> r1, B=7 -> unsatisfiable for all engines".into())
}

fn ac5() -> Outcome {
    let fam = sketch("toy.sk");
    let q = Query::feasibility(spec_of(&fam, "P<=0.4 [F s=2]"));
    let out = cegis_solve(&fam, &q, &opts()).map_err(|x| x.to_string())?;
    let init = fam.init();
    let TraceRecord::Cegis {
        candidate,
        verdict,
        critical,
        cube,
        ..
    } = &out.stats.trace[0]
    else {
        return Err("no CEGIS trace".into());
    };
    ensure(
        candidate == &r(&fam, "k2=2,k3=2"),
        format!("first candidate {candidate}"),
    )?;
    ensure(
        *verdict == StepVerdict::Reject,
        format!("first verdict {verdict:?}"),
    )?;
    let want: BTreeSet<usize> = [init].into();
    ensure(critical == &want, format!("critical set {critical:?}"))?;
    let r2 = r(&fam, "k2=2,k3=4");
    let covers_r2 = cube.iter().all(|(h, o)| o.contains(&r2.option(*h)));
    ensure(covers_r2, format!("cube {cube:?} misses r2"))?;
    let candidates: Vec<&Realisation> = out
        .stats
        .trace
        .iter()
        .filter_map(|t| match t {
            TraceRecord::Cegis { candidate, .. } => Some(candidate),
            _ => None,
        })
        .collect();
    ensure(!candidates.contains(&&r2), "r2 was proposed")?;
    ensure(out.stats.checks < 4, format!("{} checks", out.stats.checks))?;
    Ok(format!(
        "critical set {{0}} prunes r2; {} checks, witness {}",
        out.stats.checks,
        out.verdict
            .witness()
            .map(|w| fam.describe(w))
            .unwrap_or_default()
    ))
}

fn ac6() -> Outcome {
    let fam = sketch("toy.sk");
    let goal = goal_of(&fam, "s=4");
    let quo = Quotient::build(&fam, &fam.full());
    let hi = mdp_extremal(quo.mdp(), &goal, Optimum::Max).map_err(|e| e.to_string())?;
    let k3 = fam.hole_id("k3").unwrap();
    let scheduler = match quo
        .consistency(&fam.full(), &hi.scheduler)
        .map_err(|e| e.to_string())?
    {
        Consistency::Inconsistent(c) => {
            let opts: Vec<usize> = c
                .get(&k3)
                .map(|m| m.keys().copied().collect())
                .unwrap_or_default();
            ensure(opts == [0, 1], format!("inconsistent holes {c:?}"))?;
            "k3 inconsistent with options {2,4}".to_string()
        }
        Consistency::Consistent(w) => {
            let v = check_with(
                &fam.realise(&w).unwrap(),
                &Specification::new(goal.clone(), CmpOp::Ge, 0.0).unwrap(),
                &CheckerConfig::default(),
            )
            .unwrap()
            .value;
            ensure(
                (v - 1.0).abs() <= VALUE_TOL,
                format!("consistent witness {w} value {v}"),
            )?;
            format!("consistent witness {} of value 1.0", fam.describe(&w))
        }
    };
    let q = Query::partition(spec_of(&fam, "P>=0.1 [F s=4]"));
    let o = opts();
    let mut run = Cegar::new(&fam, &q, &o).map_err(|e| e.to_string())?;
    while run.step().map_err(|e| e.to_string())? {}
    let splits = run
        .stats()
        .trace
        .iter()
        .filter(|t| {
            matches!(
                t,
                TraceRecord::Cegar {
                    verdict: StepVerdict::Split,
                    ..
                }
            )
        })
        .count();
    ensure(splits >= 1, "no refinement step")?;
    Ok(format!(
        "{scheduler}; {splits} refinement step(s) before classification"
    ))
}

fn ac7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let shape = RandomShape {
        max_states: 200,
        max_holes: 5,
        max_options: 6,
        max_realisations: 1000,
    };
    let o = SynthOptions::default();
    let mut families = 0;
    let mut biggest = (0usize, 0u128);
    while families < AGREEMENT_FAMILIES {
        let fam = random_family(&mut rng, &shape);
        ensure(
            fam.len() <= 200 && fam.product_size() <= 1000,
            "shape exceeded",
        )?;
        let Some(spec) = random_spec(&mut rng, &fam, &o, 1e-5).map_err(|e| e.to_string())? else {
            continue;
        };
        families += 1;
        biggest = (biggest.0.max(fam.len()), biggest.1.max(fam.product_size()));
        let part = Query::partition(spec.clone());
        let base = solve(Engine::Enumerate, &fam, &part, &o).map_err(|e| e.to_string())?;
        let max = Query::max(spec.goal().to_vec()).unwrap();
        let base_max = solve(Engine::Enumerate, &fam, &max, &o)
            .map_err(|e| e.to_string())?
            .verdict
            .value()
            .ok_or("no max")?;
        for e in [Engine::Cegar, Engine::Cegis] {
            let got = solve(e, &fam, &part, &o).map_err(|x| x.to_string())?;
            ensure(
                got.verdict == base.verdict,
                format!("{e} partition differs on family {families}"),
            )?;
            let v = solve(e, &fam, &max, &o)
                .map_err(|x| x.to_string())?
                .verdict
                .value()
                .ok_or("no max")?;
            ensure(
                (v - base_max).abs() <= VALUE_TOL,
                format!("{e} max {v} vs {base_max}"),
            )?;
        }
    }
    let dt = start.elapsed();
    ensure(dt < AGREEMENT_TIME, format!("took {dt:?}"))?;
    Ok(format!(
        "{families} families (up to {} states, {} realisations) agree in {:.1} s",
        biggest.0,
        biggest.1,
        dt.as_secs_f64()
    ))
}

fn ac8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let shape = RandomShape {
        max_states: 30,
        ..RandomShape::default()
    };
    let mut worst = f64::MIN;
    for _ in 0..MONOTONICITY_TRIPLES {
        let fam = random_family(&mut rng, &shape);
        let member = Realisation::new(
            fam.holes()
                .iter()
                .map(|h| rng.gen_range(0..h.len()))
                .collect(),
        );
        let mc = fam.realise(&member).unwrap();
        let n = mc.len();
        let keep = rng.gen_range(0.0..1.0);
        let mut c: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(keep)).collect();
        c.insert(mc.init());
        let goal: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.2)).collect();
        let goal = if goal.is_empty() { vec![n - 1] } else { goal };
        let full = reach_probability(&mc, &goal).unwrap()[mc.init()];
        let sub = reach_probability(&sub_mc(&mc, &c).unwrap(), &goal).unwrap()[mc.init()];
        worst = worst.max(sub - full);
        ensure(sub <= full + SUBMC_TOL, format!("sub {sub} > full {full}"))?;
    }

    let o = opts();
    let small = RandomShape {
        max_states: 16,
        max_realisations: 256,
        ..RandomShape::default()
    };
    let (mut clauses, mut members) = (0, 0);
    let mut families = 0;
    while families < 100 {
        let fam = random_family(&mut rng, &small);
        let Some(spec) = random_spec(&mut rng, &fam, &o, 1e-5).map_err(|e| e.to_string())? else {
            continue;
        };
        families += 1;
        let out =
            cegis_solve(&fam, &Query::partition(spec.clone()), &o).map_err(|e| e.to_string())?;
        for t in &out.stats.trace {
            let TraceRecord::Cegis {
                verdict,
                cube,
                critical,
                ..
            } = t
            else {
                continue;
            };
            if critical.is_empty() {
                continue;
            }
            clauses += 1;
            let sat = *verdict == StepVerdict::Accept;
            let mut per_hole: Vec<Vec<usize>> =
                fam.holes().iter().map(|h| (0..h.len()).collect()).collect();
            for (h, opts) in cube {
                per_hole[*h] = opts.clone();
            }
            for m in fam.realisations(&Subfamily::from_options(per_hole)) {
                members += 1;
                let v = check_with(&fam.realise(&m).unwrap(), &spec, &CheckerConfig::default())
                    .unwrap();
                ensure(v.holds == sat, format!("learned clause wrong for {m}"))?;
            }
        }
    }
    Ok(format!(
        "{MONOTONICITY_TRIPLES} triples (max excess {worst:.1e}); {clauses} clauses re-validated on {members} members"
    ))
}

fn ac9() -> Outcome {
    let start = Instant::now();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = chainsynth::cli::run(
        ["chainsynth", "bench", "--pruning-grid", "100", "--json"],
        &mut out,
        &mut err,
    );
    let dt = start.elapsed();
    ensure(
        code == 0,
        format!("exit {code}: {}", String::from_utf8_lossy(&err)),
    )?;
    let v: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    let size: u64 = v["realisations"]
        .as_str()
        .unwrap_or("0")
        .parse()
        .unwrap_or(0);
    ensure(size == 10_000, format!("{size} realisations"))?;
    let checks = v["engines"]
        .as_array()
        .and_then(|a| a.iter().find(|e| e["engine"] == "cegis"))
        .and_then(|e| e["checks"].as_u64())
        .ok_or("no cegis row")?;
    ensure(checks * 5 < size, format!("cegis used {checks} checks"))?;
    ensure(dt < BENCH_TIME, format!("took {dt:?}"))?;
    Ok(format!(
        "10^4 members: cegis {checks} checks (< 2000), all engines agree, {:.2} s",
        dt.as_secs_f64()
    ))
}

fn chains_under_test() -> Vec<(MarkovChain, Vec<usize>)> {
    let mut out = Vec::new();
    for (name, goal) in [
        ("toy.sk", "s=4"),
        ("toy.sk", "s=2"),
        ("bsn.sk", "s=3"),
        ("dpm.sk", "done=1"),
    ] {
        let fam = sketch(name);
        let g = goal_of(&fam, goal);
        for m in fam.realisations(&fam.full()) {
            out.push((fam.realise(&m).unwrap(), g.clone()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let shape = RandomShape {
        max_states: 60,
        ..RandomShape::default()
    };
    for _ in 0..300 {
        let fam = random_family(&mut rng, &shape);
        let m = fam.full().first();
        let n = fam.len();
        let goal: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.15)).collect();
        out.push((
            fam.realise(&m).unwrap(),
            if goal.is_empty() { vec![0] } else { goal },
        ));
    }
    out
}

fn ac10() -> Outcome {
    let direct = CheckerConfig {
        method: SolveMethod::Direct,
        ..CheckerConfig::default()
    };
    let iterative = CheckerConfig {
        method: SolveMethod::ValueIteration,
        vi_epsilon: 1e-12,
        ..CheckerConfig::default()
    };
    let chains = chains_under_test();
    let mut worst: f64 = 0.0;
    for (mc, goal) in &chains {
        let a = reach_probability_with(mc, goal, &direct).map_err(|e| e.to_string())?;
        let b = reach_probability_with(mc, goal, &iterative).map_err(|e| e.to_string())?;
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    ensure(worst <= NUMERIC_TOL, format!("max difference {worst:e}"))?;

    // unreachable goals and almost-sure reachability in the running example
    let fam = sketch("toy.sk");
    let s4 = goal_of(&fam, "s=4");
    let s2 = goal_of(&fam, "s=2");
    let value = |t: &str, goal: &[usize]| {
        reach_probability(&fam.realise(&r(&fam, t)).unwrap(), goal).unwrap()
    };
    for t in ["k2=2,k3=2", "k2=3,k3=2"] {
        let v = value(t, &s4);
        let zero_at = [0usize, 1, 2, 3];
        ensure(
            zero_at.iter().all(|&s| v[s] == 0.0),
            format!("{t}: expected exact zeros, got {v:?}"),
        )?;
    }
    for (t, goal) in [("k2=2,k3=4", &s4), ("k2=3,k3=4", &s4), ("k2=2,k3=2", &s2)] {
        let v = value(t, goal);
        ensure(
            v[0] == 1.0,
            format!("{t}: expected exact one, got {}", v[0]),
        )?;
    }
    Ok(format!(
        "{} chains, direct vs iterative max difference {worst:.1e}; exact 0/1 on the running example",
        chains.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1", "running-example partition", ac1),
        ("AC2", "max synthesis", ac2),
        ("AC3", "structural costs", ac3),
        ("AC4", "budgeted max", ac4),
        ("AC5", "CEGIS conflict", ac5),
        ("AC6", "CEGAR inconsistency", ac6),
        ("AC7", "engine agreement", ac7),
        ("AC8", "sub-chain monotonicity and clause soundness", ac8),
        ("AC9", "pruning benchmark", ac9),
        ("AC10", "numerics", ac10),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match res {
            Ok(detail) => println!("{id} PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id} FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
