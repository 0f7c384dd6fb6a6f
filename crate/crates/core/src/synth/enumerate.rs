//! Exhaustive engine: realise and check every member.

use std::time::Instant;

use rayon::prelude::*;

use super::{Outcome, Query, QueryKind, Stats, SynthError, SynthOptions, Verdict, Verifier};
use crate::family::{Family, Realisation};
use crate::model::{check_with, Specification};

/// Value of one member, or `None` when the budget excludes it unchecked.
struct Eval {
    value: Option<f64>,
    cost: u64,
}

pub fn enum_solve(fam: &Family, q: &Query, opts: &SynthOptions) -> Result<Outcome, SynthError> {
    q.validate()?;
    let start = Instant::now();
    let members = fam.collect_realisations(&fam.full(), opts.max_realisations)?;
    let mut stats = Stats {
        candidates: members.len() as u64,
        iterations: members.len() as u64,
        ..Stats::default()
    };
    let tol = opts.tolerance();
    let verdict = match q.kind {
        QueryKind::Feasibility if !q.cheapest => {
            let mut v = Verifier::new(fam, &opts.checker);
            let found = if opts.threads > 1 {
                let evals = evaluate(fam, q, &members, opts)?;
                v.checks = evals.iter().filter(|e| e.value.is_some()).count() as u64;
                evals
                    .iter()
                    .position(|e| e.value.is_some_and(|x| q.spec.holds(x, tol)))
                    .map(|i| (members[i].clone(), evals[i].value.unwrap(), evals[i].cost))
            } else {
                let mut found = None;
                for r in &members {
                    let cost = fam.cost(r);
                    if q.budget.is_some_and(|b| cost > b) {
                        continue;
                    }
                    let (holds, value) = v.check(r, &q.spec)?;
                    if holds {
                        found = Some((r.clone(), value, cost));
                        break;
                    }
                }
                found
            };
            stats.checks = v.checks;
            match found {
                Some((witness, value, cost)) => Verdict::Feasible {
                    witness,
                    value,
                    cost,
                },
                None => Verdict::Unsatisfiable,
            }
        }
        QueryKind::Feasibility => {
            let evals = evaluate(fam, q, &members, opts)?;
            stats.checks = checked(&evals);
            members
                .iter()
                .zip(&evals)
                .filter_map(|(r, e)| {
                    e.value
                        .filter(|&x| q.spec.holds(x, tol))
                        .map(|x| (r, x, e.cost))
                })
                .min_by_key(|&(_, _, cost)| cost)
                .map_or(Verdict::Unsatisfiable, |(r, value, cost)| {
                    Verdict::Feasible {
                        witness: r.clone(),
                        value,
                        cost,
                    }
                })
        }
        QueryKind::Partition => {
            let evals = evaluate(fam, q, &members, opts)?;
            stats.checks = checked(&evals);
            let (mut accepted, mut rejected) = (Vec::new(), Vec::new());
            for (r, e) in members.iter().zip(&evals) {
                if e.value.is_some_and(|x| q.spec.holds(x, tol)) {
                    accepted.push(r.clone());
                } else {
                    rejected.push(r.clone());
                }
            }
            Verdict::Partition { accepted, rejected }
        }
        QueryKind::Max | QueryKind::Min | QueryKind::EpsOptimal(_) => {
            let evals = evaluate(fam, q, &members, opts)?;
            stats.checks = checked(&evals);
            optimum(q, tol, &members, &evals)
        }
    };
    stats.wall_ms = start.elapsed().as_millis() as u64;
    Ok(Outcome { verdict, stats })
}

/// Cheapest satisfying realisation, ties broken lexicographically.
pub fn cost_optimal(
    fam: &Family,
    spec: &Specification,
    opts: &SynthOptions,
) -> Result<Option<(Realisation, u64)>, SynthError> {
    let q = Query::feasibility(spec.clone()).with_cheapest(true);
    Ok(match enum_solve(fam, &q, opts)?.verdict {
        Verdict::Feasible { witness, cost, .. } => Some((witness, cost)),
        _ => None,
    })
}

fn checked(evals: &[Eval]) -> u64 {
    evals.iter().filter(|e| e.value.is_some()).count() as u64
}

fn evaluate(
    fam: &Family,
    q: &Query,
    members: &[Realisation],
    opts: &SynthOptions,
) -> Result<Vec<Eval>, SynthError> {
    let one = |r: &Realisation| -> Result<Eval, SynthError> {
        let cost = fam.cost(r);
        if q.budget.is_some_and(|b| cost > b) {
            return Ok(Eval { value: None, cost });
        }
        let res = check_with(&fam.chain_of(r), &q.spec, &opts.checker)?;
        Ok(Eval {
            value: Some(res.value),
            cost,
        })
    };
    if opts.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| SynthError::Query(format!("thread pool: {e}")))?;
        pool.install(|| members.par_iter().map(one).collect())
    } else {
        members.iter().map(one).collect()
    }
}

fn optimum(q: &Query, tol: f64, members: &[Realisation], evals: &[Eval]) -> Verdict {
    let scored = || {
        members
            .iter()
            .zip(evals)
            .filter_map(|(r, e)| e.value.map(|v| (r, v, e.cost)))
    };
    let best = match q.kind {
        QueryKind::Min => scored().map(|(_, v, _)| v).min_by(f64::total_cmp),
        _ => scored().map(|(_, v, _)| v).max_by(f64::total_cmp),
    };
    let Some(best) = best else {
        return Verdict::Unsatisfiable;
    };
    let pick = match q.kind {
        QueryKind::EpsOptimal(eps) => scored().find(|&(_, v, _)| v >= (1.0 - eps) * best),
        _ if q.cheapest => {
            let near = |v: f64| match q.kind {
                QueryKind::Min => v <= best + tol,
                _ => v >= best - tol,
            };
            scored()
                .filter(|&(_, v, _)| near(v))
                .min_by_key(|&(_, _, c)| c)
        }
        _ => scored().find(|&(_, v, _)| v == best),
    };
    let (r, value, cost) = pick.expect("the optimum is attained");
    Verdict::Optimal {
        witness: r.clone(),
        value,
        cost,
    }
}
