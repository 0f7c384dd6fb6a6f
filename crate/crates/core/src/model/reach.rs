use super::graph::{backward_reach, predecessors, sccs};
use super::spec::DEFAULT_TOLERANCE;
use super::{MarkovChain, ModelError, Specification, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Gaussian elimination per component up to `direct_limit` states,
    /// Gauss-Seidel iteration above.
    Auto,
    /// Gaussian elimination on every component.
    Direct,
    /// Gauss-Seidel iteration over all undecided states at once.
    ValueIteration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckerConfig {
    /// Slack τ used by threshold comparisons.
    pub tolerance: f64,
    pub method: SolveMethod,
    pub direct_limit: usize,
    /// Stop iterating once no value moves by more than this.
    pub vi_epsilon: f64,
    pub vi_max_sweeps: usize,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        CheckerConfig {
            tolerance: DEFAULT_TOLERANCE,
            method: SolveMethod::Auto,
            direct_limit: 4_096,
            vi_epsilon: 1e-10,
            vi_max_sweeps: 1_000_000,
        }
    }
}

impl CheckerConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        CheckerConfig {
            tolerance,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckResult {
    pub holds: bool,
    pub value: f64,
}

/// Probability of eventually reaching `goal`, for every state of `mc`.
pub fn reach_probability(mc: &MarkovChain, goal: &[StateId]) -> Result<Vec<f64>, ModelError> {
    reach_probability_with(mc, goal, &CheckerConfig::default())
}

pub fn reach_probability_with(
    mc: &MarkovChain,
    goal: &[StateId],
    cfg: &CheckerConfig,
) -> Result<Vec<f64>, ModelError> {
    let n = mc.len();
    let mut goal_mask = vec![false; n];
    for &g in goal {
        if g >= n {
            return Err(ModelError::StateOutOfRange { state: g, len: n });
        }
        goal_mask[g] = true;
    }
    let succ = mc.successor_lists();
    let pred = predecessors(&succ);
    let (prob0, prob1) = qualitative(&pred, &goal_mask);

    let mut x = vec![0.0; n];
    let mut maybe = vec![false; n];
    for s in 0..n {
        if prob1[s] {
            x[s] = 1.0;
        } else if !prob0[s] {
            maybe[s] = true;
        }
    }
    if !maybe.iter().any(|&m| m) {
        return Ok(x);
    }

    match cfg.method {
        SolveMethod::ValueIteration => {
            let states: Vec<StateId> = (0..n).filter(|&s| maybe[s]).collect();
            gauss_seidel(mc, &states, &mut x, cfg);
        }
        SolveMethod::Auto | SolveMethod::Direct => {
            for comp in sccs(&succ, &maybe) {
                if cfg.method == SolveMethod::Direct || comp.len() <= cfg.direct_limit {
                    solve_dense(mc, &comp, &mut x);
                } else {
                    gauss_seidel(mc, &comp, &mut x, cfg);
                }
            }
        }
    }
    Ok(x)
}

/// `(prob0, prob1)` masks: states that cannot reach the goal, and states
/// that reach it almost surely.
pub(crate) fn qualitative(pred: &[Vec<StateId>], goal: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let can_reach = backward_reach(pred, goal, |_| true);
    let prob0: Vec<bool> = can_reach.iter().map(|&b| !b).collect();
    let may_fail = backward_reach(pred, &prob0, |s| !goal[s]);
    let prob1 = may_fail.iter().map(|&b| !b).collect();
    (prob0, prob1)
}

/// Solves `x_s = Σ_t P(s,t) x_t` for the states of one component, with all
/// values outside the component already final.
fn solve_dense(mc: &MarkovChain, comp: &[StateId], x: &mut [f64]) {
    let m = comp.len();
    if m == 1 {
        let s = comp[0];
        let d = mc.distribution(s);
        let mut self_p = 0.0;
        let mut rhs = 0.0;
        for &(t, p) in d.entries() {
            if t == s {
                self_p += p;
            } else {
                rhs += p * x[t];
            }
        }
        x[s] = rhs / (1.0 - self_p);
        return;
    }
    let local = |s: StateId| comp.binary_search(&s).ok();
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    for (i, &s) in comp.iter().enumerate() {
        a[i * m + i] = 1.0;
        for &(t, p) in mc.distribution(s).entries() {
            match local(t) {
                Some(j) => a[i * m + j] -= p,
                None => b[i] += p * x[t],
            }
        }
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .unwrap_or(col);
        if pivot != col {
            for k in 0..m {
                a.swap(col * m + k, pivot * m + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * m + col];
        for row in col + 1..m {
            let factor = a[row * m + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..m {
                a[row * m + k] -= factor * a[col * m + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut sol = vec![0.0; m];
    for row in (0..m).rev() {
        let mut acc = b[row];
        for k in row + 1..m {
            acc -= a[row * m + k] * sol[k];
        }
        sol[row] = acc / a[row * m + row];
    }
    for (i, &s) in comp.iter().enumerate() {
        x[s] = sol[i].clamp(0.0, 1.0);
    }
}

fn gauss_seidel(mc: &MarkovChain, states: &[StateId], x: &mut [f64], cfg: &CheckerConfig) {
    for _ in 0..cfg.vi_max_sweeps {
        let mut delta: f64 = 0.0;
        for &s in states {
            let mut self_p = 0.0;
            let mut rhs = 0.0;
            for &(t, p) in mc.distribution(s).entries() {
                if t == s {
                    self_p += p;
                } else {
                    rhs += p * x[t];
                }
            }
            let v = rhs / (1.0 - self_p);
            delta = delta.max((v - x[s]).abs());
            x[s] = v;
        }
        if delta < cfg.vi_epsilon {
            break;
        }
    }
}

/// Decides `mc ⊨ spec` and reports the probability at the initial state.
pub fn check(mc: &MarkovChain, spec: &Specification) -> Result<CheckResult, ModelError> {
    check_with(mc, spec, &CheckerConfig::default())
}

pub fn check_with(
    mc: &MarkovChain,
    spec: &Specification,
    cfg: &CheckerConfig,
) -> Result<CheckResult, ModelError> {
    let values = reach_probability_with(mc, spec.goal(), cfg)?;
    let value = values[mc.init()];
    Ok(CheckResult {
        holds: spec.holds(value, cfg.tolerance),
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CmpOp, Distribution};

    /// The realised chain for k2=2, k3=2 of the running example.
    fn d_r1() -> MarkovChain {
        MarkovChain::new(
            0,
            vec![
                Distribution::new(vec![(1, 0.5), (2, 0.5)]).unwrap(),
                Distribution::new(vec![(0, 0.1), (1, 0.9)]).unwrap(),
                Distribution::dirac(2),
                Distribution::new(vec![(2, 0.8), (3, 0.2)]).unwrap(),
                Distribution::dirac(4),
            ],
        )
        .unwrap()
    }

    #[test]
    fn unreachable_goal_is_exact_zero() {
        let v = reach_probability(&d_r1(), &[4]).unwrap();
        assert_eq!(v[0], 0.0);
        assert_eq!(v[4], 1.0);
    }

    #[test]
    fn goal_containing_init() {
        let v = reach_probability(&d_r1(), &[0]).unwrap();
        assert_eq!(v[0], 1.0);
    }

    #[test]
    fn almost_sure_reach() {
        let v = reach_probability(&d_r1(), &[2]).unwrap();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 1.0);
    }

    #[test]
    fn goal_out_of_range() {
        assert!(matches!(
            reach_probability(&d_r1(), &[7]),
            Err(ModelError::StateOutOfRange { state: 7, .. })
        ));
    }

    #[test]
    fn interior_values_match_hand_solution() {
        // 0 -> {0: .5, 1: .25, 2: .25}; 1 goal; 2 sink. x0 = .25 / .5 = .5
        let mc = MarkovChain::new(
            0,
            vec![
                Distribution::new(vec![(0, 0.5), (1, 0.25), (2, 0.25)]).unwrap(),
                Distribution::dirac(1),
                Distribution::dirac(2),
            ],
        )
        .unwrap();
        let direct = reach_probability(&mc, &[1]).unwrap();
        assert!((direct[0] - 0.5).abs() < 1e-12);
        let cfg = CheckerConfig {
            method: SolveMethod::ValueIteration,
            ..CheckerConfig::default()
        };
        let vi = reach_probability_with(&mc, &[1], &cfg).unwrap();
        assert!((vi[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn check_reports_value_and_verdict() {
        let spec = Specification::new(vec![2], CmpOp::Le, 0.4).unwrap();
        let r = check(&d_r1(), &spec).unwrap();
        assert!(!r.holds);
        assert_eq!(r.value, 1.0);
        let spec = Specification::new(vec![4], CmpOp::Ge, 0.1).unwrap();
        let r = check(&d_r1(), &spec).unwrap();
        assert!(!r.holds);
        assert_eq!(r.value, 0.0);
    }
}
