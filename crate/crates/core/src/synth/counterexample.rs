//! Critical sub-chains that already decide a reachability property.

use crate::model::{
    forward_reachable, reach_probability_with, sub_mc, CheckerConfig, MarkovChain, Specification,
    StateId, StateSet,
};

use super::SynthError;

/// Above this many candidate states the ranking uses expected visit counts
/// instead of exact visiting probabilities.
const EXACT_RANKING_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CeMode {
    /// Show that a `≤`/`<` property is violated.
    Refute,
    /// Show that a `≥`/`>` property holds.
    Establish,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub critical: StateSet,
    /// Goal probability of the sub-chain at the initial state.
    pub value: f64,
    /// Sub-chain evaluations spent.
    pub evaluations: u64,
}

/// Greedy critical set: states are ranked once by
/// `Pr(reach s) · Pr(s reaches goal)` and added in that order until the
/// sub-chain decides the property. The shortest deciding prefix is found by
/// bisection, which gives the same set as adding states one at a time since
/// sub-chain values only grow with the set.
pub fn extract_counterexample(
    mc: &MarkovChain,
    spec: &Specification,
    mode: CeMode,
    cfg: &CheckerConfig,
) -> Result<Counterexample, SynthError> {
    let upper = spec.op().is_upper_bound();
    match (mode, upper) {
        (CeMode::Refute, false) => {
            return Err(SynthError::Counterexample(
                "refutation needs a <= or < property".into(),
            ))
        }
        (CeMode::Establish, true) => {
            return Err(SynthError::Counterexample(
                "establishing needs a >= or > property".into(),
            ))
        }
        _ => {}
    }
    let to_goal = reach_probability_with(mc, spec.goal(), cfg)?;
    let full = to_goal[mc.init()];
    let decided = |v: f64| match mode {
        CeMode::Refute => !spec.holds(v, cfg.tolerance),
        CeMode::Establish => spec.holds(v, cfg.tolerance),
    };
    if !decided(full) {
        return Err(SynthError::Counterexample(format!(
            "the chain does not {} the property (value {full})",
            match mode {
                CeMode::Refute => "violate",
                CeMode::Establish => "satisfy",
            }
        )));
    }

    let is_goal = spec.goal_mask(mc.len())?;
    let init = mc.init();
    let reach = forward_reachable(mc);
    let useful: Vec<StateId> = reach
        .iter()
        .copied()
        .filter(|&s| s != init && !is_goal[s] && to_goal[s] > 0.0)
        .collect();
    let visits = visiting(mc, init, &is_goal, &to_goal, &useful);
    let mut ranked: Vec<(f64, StateId)> = useful
        .iter()
        .zip(&visits)
        .map(|(&s, &p)| (p * to_goal[s], s))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut evaluations = 0u64;
    let mut value_of = |k: usize| -> Result<f64, SynthError> {
        evaluations += 1;
        let c = prefix(init, &ranked, k);
        let sub = sub_mc(mc, &c)?;
        Ok(reach_probability_with(&sub, spec.goal(), cfg)?[init])
    };
    // smallest k whose prefix decides; k = |ranked| always does
    let (mut lo, mut hi) = (0usize, ranked.len());
    let mut hi_value = None;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let v = value_of(mid)?;
        if decided(v) {
            hi = mid;
            hi_value = Some(v);
        } else {
            lo = mid + 1;
        }
    }
    let value = match hi_value {
        Some(v) => v,
        None => value_of(hi)?,
    };
    if !decided(value) {
        return Err(SynthError::Counterexample(format!(
            "critical set of all {} states does not decide the property",
            hi + 1
        )));
    }
    Ok(Counterexample {
        critical: prefix(init, &ranked, hi),
        value,
        evaluations,
    })
}

fn prefix(init: StateId, ranked: &[(f64, StateId)], k: usize) -> StateSet {
    std::iter::once(init)
        .chain(ranked[..k].iter().map(|&(_, s)| s))
        .collect()
}

/// Probability of ever visiting each state of `states` from `init` (or the
/// expected number of visits when there are many states). Goal states are
/// treated as absorbing and states that cannot reach the goal are dropped,
/// which leaves every remaining state transient.
fn visiting(
    mc: &MarkovChain,
    init: StateId,
    is_goal: &[bool],
    to_goal: &[f64],
    states: &[StateId],
) -> Vec<f64> {
    if states.is_empty() {
        return Vec::new();
    }
    // transient states: init (if it can reach the goal) plus `states`
    let mut idx = vec![usize::MAX; mc.len()];
    let mut order: Vec<StateId> = Vec::with_capacity(states.len() + 1);
    if !is_goal[init] && to_goal[init] > 0.0 {
        idx[init] = 0;
        order.push(init);
    }
    for &s in states {
        idx[s] = order.len();
        order.push(s);
    }
    let n = order.len();
    let q = |i: usize| {
        mc.distribution(order[i])
            .entries()
            .iter()
            .filter(|(t, _)| idx[*t] != usize::MAX)
            .map(|&(t, p)| (idx[t], p))
            .collect::<Vec<_>>()
    };
    let Some(i0) = (idx[init] != usize::MAX).then_some(idx[init]) else {
        // init cannot reach the goal, so nothing is worth adding
        return vec![0.0; states.len()];
    };
    let offset = 1; // `states` follow init in `order`

    if n <= EXACT_RANKING_LIMIT {
        // fundamental matrix N = (I - Q)^-1; visiting prob = N[i0][j] / N[j][j]
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += 1.0;
            for (j, p) in q(i) {
                row[j] -= p;
            }
        }
        if let Some(inv) = invert(a) {
            return (0..states.len())
                .map(|k| {
                    let j = k + offset;
                    (inv[i0][j] / inv[j][j]).clamp(0.0, 1.0)
                })
                .collect();
        }
    }
    // expected visits x = e_init + Q^T x, by forward sweeps
    let rows: Vec<Vec<(usize, f64)>> = (0..n).map(q).collect();
    let mut x = vec![0.0; n];
    for _ in 0..10_000 {
        let mut next = vec![0.0; n];
        next[i0] = 1.0;
        for (i, row) in rows.iter().enumerate() {
            for &(j, p) in row {
                next[j] += p * x[i];
            }
        }
        let delta = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        if delta < 1e-12 {
            break;
        }
    }
    (0..states.len()).map(|k| x[k + offset]).collect()
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col && a[i][col] != 0.0 {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reach_probability, CmpOp};
    use crate::testutil::{toy_family, toy_r};

    fn spec(goal: Vec<StateId>, op: CmpOp, t: f64) -> Specification {
        Specification::new(goal, op, t).unwrap()
    }

    #[test]
    fn refuting_r1_needs_only_the_initial_state() {
        let mc = toy_family().realise(&toy_r(1)).unwrap();
        let ce = extract_counterexample(
            &mc,
            &spec(vec![2], CmpOp::Le, 0.4),
            CeMode::Refute,
            &CheckerConfig::default(),
        )
        .unwrap();
        assert_eq!(ce.critical, [0].into());
        assert!((ce.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn establishing_r2_reaches_the_threshold() {
        let mc = toy_family().realise(&toy_r(2)).unwrap();
        let s = spec(vec![4], CmpOp::Ge, 0.1);
        let ce =
            extract_counterexample(&mc, &s, CeMode::Establish, &CheckerConfig::default()).unwrap();
        assert!(ce.critical.contains(&0));
        let sub = sub_mc(&mc, &ce.critical).unwrap();
        let v = reach_probability(&sub, &[4]).unwrap()[0];
        assert!(v >= 0.1 - 1e-9);
        assert_eq!(v, ce.value);
        // states outside the reachable part never appear
        assert!(ce
            .critical
            .iter()
            .all(|s| forward_reachable(&mc).contains(s)));
    }

    #[test]
    fn wrong_direction_is_an_error() {
        let mc = toy_family().realise(&toy_r(1)).unwrap();
        let cfg = CheckerConfig::default();
        assert!(
            extract_counterexample(&mc, &spec(vec![2], CmpOp::Ge, 0.1), CeMode::Refute, &cfg)
                .is_err()
        );
        assert!(extract_counterexample(
            &mc,
            &spec(vec![2], CmpOp::Le, 0.1),
            CeMode::Establish,
            &cfg
        )
        .is_err());
        // r4 does not violate P<=0.4 [F 2]
        let mc4 = toy_family().realise(&toy_r(4)).unwrap();
        assert!(
            extract_counterexample(&mc4, &spec(vec![2], CmpOp::Le, 0.4), CeMode::Refute, &cfg)
                .is_err()
        );
    }

    #[test]
    fn visiting_probabilities_match_direct_computation() {
        let mc = toy_family().realise(&toy_r(3)).unwrap();
        let to_goal = reach_probability(&mc, &[2]).unwrap();
        let mut is_goal = vec![false; 5];
        is_goal[2] = true;
        let states = vec![1, 3];
        let got = visiting(&mc, 0, &is_goal, &to_goal, &states);
        for (k, &s) in states.iter().enumerate() {
            // state 2 is absorbing in D_r3, so plain reachability agrees
            let direct = reach_probability(&mc, &[s]).unwrap()[0];
            assert!(
                (got[k] - direct).abs() < 1e-9,
                "state {s}: {} vs {direct}",
                got[k]
            );
        }
    }
}
