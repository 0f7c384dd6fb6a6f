use std::collections::VecDeque;

use super::graph::backward_reach;
use super::mdp::induced_chain;
use super::reach::{reach_probability_with, CheckerConfig};
use super::{Mdp, MemorylessScheduler, ModelError, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Optimum {
    Min,
    Max,
}

/// Optimal reachability probabilities of an MDP with a witnessing scheduler.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremal {
    /// Optimum at the initial state.
    pub value: f64,
    /// Optimum at every state.
    pub values: Vec<f64>,
    /// Memoryless scheduler whose induced chain attains `values`.
    pub scheduler: MemorylessScheduler,
}

const SWITCH_EPS: f64 = 1e-12;
const VI_SWEEP_CAP: usize = 10_000;
const PI_ROUND_CAP: usize = 10_000;

pub fn mdp_extremal(mdp: &Mdp, goal: &[StateId], mode: Optimum) -> Result<Extremal, ModelError> {
    mdp_extremal_with(mdp, goal, mode, &CheckerConfig::default())
}

/// Min or max probability of reaching `goal`.
///
/// Graph analysis settles the states with optimum 0 or 1, value iteration
/// approximates the rest, a scheduler is extracted from the approximation
/// and then improved by policy iteration, evaluating each scheduler exactly
/// with the chain solver. The returned values are those of the final
/// scheduler.
pub fn mdp_extremal_with(
    mdp: &Mdp,
    goal: &[StateId],
    mode: Optimum,
    cfg: &CheckerConfig,
) -> Result<Extremal, ModelError> {
    let n = mdp.len();
    let mut goal_mask = vec![false; n];
    for &g in goal {
        if g >= n {
            return Err(ModelError::StateOutOfRange { state: g, len: n });
        }
        goal_mask[g] = true;
    }
    let graph = ActionGraph::new(mdp);

    let mut choice = vec![0usize; n];
    let (zero, one) = match mode {
        Optimum::Max => {
            let can_reach = backward_reach(&graph.state_pred, &goal_mask, |_| true);
            let zero: Vec<bool> = can_reach.iter().map(|&b| !b).collect();
            let one = prob1_exists(mdp, &graph, &goal_mask, &mut choice);
            (zero, one)
        }
        Optimum::Min => {
            let zero = prob0_forall(mdp, &graph, &goal_mask, &mut choice);
            let may_fail = backward_reach(&graph.state_pred, &zero, |s| !goal_mask[s]);
            let one: Vec<bool> = may_fail.iter().map(|&b| !b).collect();
            (zero, one)
        }
    };

    let mut x = vec![0.0; n];
    let mut maybe = Vec::new();
    for s in 0..n {
        if one[s] {
            x[s] = 1.0;
        } else if !zero[s] {
            maybe.push(s);
        }
    }

    if !maybe.is_empty() {
        value_iterate(mdp, &maybe, &mut x, mode, cfg);
        match mode {
            Optimum::Max => extract_max(mdp, &graph, &maybe, &x, &goal_mask, &one, &mut choice),
            Optimum::Min => {
                for &s in &maybe {
                    choice[s] = best_action(mdp, s, &x, mode).0;
                }
            }
        }
    }

    let mut sched = MemorylessScheduler::new(choice);
    let mut values = evaluate(mdp, &sched, goal, cfg)?;
    if !maybe.is_empty() {
        for _ in 0..PI_ROUND_CAP {
            let mut next = sched.choices().to_vec();
            let mut improved = false;
            for &s in &maybe {
                let (a, q) = best_action(mdp, s, &values, mode);
                let better = match mode {
                    Optimum::Max => q > values[s] + SWITCH_EPS,
                    Optimum::Min => q < values[s] - SWITCH_EPS,
                };
                if better && a != next[s] {
                    next[s] = a;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
            sched = MemorylessScheduler::new(next);
            values = evaluate(mdp, &sched, goal, cfg)?;
        }
    }

    Ok(Extremal {
        value: values[mdp.init()],
        values,
        scheduler: sched,
    })
}

fn evaluate(
    mdp: &Mdp,
    sched: &MemorylessScheduler,
    goal: &[StateId],
    cfg: &CheckerConfig,
) -> Result<Vec<f64>, ModelError> {
    let mc = induced_chain(mdp, sched)?;
    reach_probability_with(&mc, goal, cfg)
}

struct ActionGraph {
    state_pred: Vec<Vec<StateId>>,
    /// For each state t, the (state, action) pairs with t in their support.
    action_pred: Vec<Vec<(StateId, usize)>>,
}

impl ActionGraph {
    fn new(mdp: &Mdp) -> Self {
        let n = mdp.len();
        let mut state_pred = vec![Vec::new(); n];
        let mut action_pred = vec![Vec::new(); n];
        for s in 0..n {
            for (a, d) in mdp.actions(s).iter().enumerate() {
                for t in d.support() {
                    action_pred[t].push((s, a));
                    if state_pred[t].last() != Some(&s) {
                        state_pred[t].push(s);
                    }
                }
            }
        }
        ActionGraph {
            state_pred,
            action_pred,
        }
    }
}

/// States where some scheduler reaches the goal almost surely. Records in
/// `choice` an action per such state that moves towards the goal.
fn prob1_exists(mdp: &Mdp, graph: &ActionGraph, goal: &[bool], choice: &mut [usize]) -> Vec<bool> {
    let n = mdp.len();
    let mut u = vec![true; n];
    loop {
        let mut r = goal.to_vec();
        let mut queue: VecDeque<StateId> = (0..n).filter(|&s| goal[s]).collect();
        while let Some(t) = queue.pop_front() {
            for &(s, a) in &graph.action_pred[t] {
                if r[s] || !u[s] {
                    continue;
                }
                if mdp.actions(s)[a].support().all(|v| u[v]) {
                    r[s] = true;
                    choice[s] = a;
                    queue.push_back(s);
                }
            }
        }
        if r == u {
            return r;
        }
        u = r;
    }
}

/// States where every scheduler avoids the goal with probability 1 under
/// some choice: the complement of "all schedulers reach with positive
/// probability". Records in `choice` an action that stays inside the set.
fn prob0_forall(mdp: &Mdp, graph: &ActionGraph, goal: &[bool], choice: &mut [usize]) -> Vec<bool> {
    let n = mdp.len();
    let mut reached = goal.to_vec();
    let mut hit: Vec<Vec<bool>> = (0..n).map(|s| vec![false; mdp.actions(s).len()]).collect();
    let mut hits = vec![0usize; n];
    let mut queue: VecDeque<StateId> = (0..n).filter(|&s| goal[s]).collect();
    while let Some(t) = queue.pop_front() {
        for &(s, a) in &graph.action_pred[t] {
            if reached[s] || hit[s][a] {
                continue;
            }
            hit[s][a] = true;
            hits[s] += 1;
            if hits[s] == mdp.actions(s).len() {
                reached[s] = true;
                queue.push_back(s);
            }
        }
    }
    let zero: Vec<bool> = reached.iter().map(|&b| !b).collect();
    for s in 0..n {
        if zero[s] {
            choice[s] = hit[s].iter().position(|&h| !h).unwrap_or(0);
        }
    }
    zero
}

fn best_action(mdp: &Mdp, s: StateId, x: &[f64], mode: Optimum) -> (usize, f64) {
    let mut best = (0, mdp.actions(s)[0].expectation(x));
    for (a, d) in mdp.actions(s).iter().enumerate().skip(1) {
        let q = d.expectation(x);
        let better = match mode {
            Optimum::Max => q > best.1,
            Optimum::Min => q < best.1,
        };
        if better {
            best = (a, q);
        }
    }
    best
}

fn value_iterate(mdp: &Mdp, maybe: &[StateId], x: &mut [f64], mode: Optimum, cfg: &CheckerConfig) {
    let sweeps = cfg.vi_max_sweeps.min(VI_SWEEP_CAP);
    for _ in 0..sweeps {
        let mut delta: f64 = 0.0;
        for &s in maybe {
            let (_, v) = best_action(mdp, s, x, mode);
            delta = delta.max((v - x[s]).abs());
            x[s] = v;
        }
        if delta < cfg.vi_epsilon {
            break;
        }
    }
}

/// Among near-optimal actions, pick one that makes progress towards states
/// already known to reach the goal, so the induced chain has no trap.
fn extract_max(
    mdp: &Mdp,
    graph: &ActionGraph,
    maybe: &[StateId],
    x: &[f64],
    goal: &[bool],
    one: &[bool],
    choice: &mut [usize],
) {
    let n = mdp.len();
    let mut is_maybe = vec![false; n];
    let mut optimal: Vec<Vec<bool>> = vec![Vec::new(); n];
    for &s in maybe {
        is_maybe[s] = true;
        let (_, best) = best_action(mdp, s, x, Optimum::Max);
        optimal[s] = mdp
            .actions(s)
            .iter()
            .map(|d| d.expectation(x) >= best - 1e-9)
            .collect();
    }
    let mut done: Vec<bool> = (0..n).map(|s| goal[s] || one[s]).collect();
    let mut queue: VecDeque<StateId> = (0..n).filter(|&s| done[s]).collect();
    while let Some(t) = queue.pop_front() {
        for &(s, a) in &graph.action_pred[t] {
            if is_maybe[s] && !done[s] && optimal[s][a] {
                done[s] = true;
                choice[s] = a;
                queue.push_back(s);
            }
        }
    }
    for &s in maybe {
        if !done[s] {
            choice[s] = best_action(mdp, s, x, Optimum::Max).0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reach_probability, Distribution, MarkovChain};

    /// States: 0 start; 1 may loop forever or go to goal 2; 3 sink.
    fn trap_mdp() -> Mdp {
        Mdp::new(
            0,
            vec![
                vec![Distribution::new(vec![(1, 0.5), (3, 0.5)]).unwrap()],
                vec![Distribution::dirac(1), Distribution::dirac(2)],
                vec![Distribution::dirac(2)],
                vec![Distribution::dirac(3)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn max_avoids_end_component_trap() {
        let r = mdp_extremal(&trap_mdp(), &[2], Optimum::Max).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert_eq!(r.scheduler.choice(1), 1);
    }

    #[test]
    fn min_stays_in_trap() {
        let r = mdp_extremal(&trap_mdp(), &[2], Optimum::Min).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.scheduler.choice(1), 0);
    }

    #[test]
    fn witness_reproduces_value() {
        // 0: a -> {1: .3, 2: .7}, b -> {1: .6, 3: .4}; goal 1
        let mdp = Mdp::new(
            0,
            vec![
                vec![
                    Distribution::new(vec![(1, 0.3), (2, 0.7)]).unwrap(),
                    Distribution::new(vec![(1, 0.6), (3, 0.4)]).unwrap(),
                ],
                vec![Distribution::dirac(1)],
                vec![Distribution::new(vec![(0, 0.5), (3, 0.5)]).unwrap()],
                vec![Distribution::dirac(3)],
            ],
        )
        .unwrap();
        for mode in [Optimum::Min, Optimum::Max] {
            let r = mdp_extremal(&mdp, &[1], mode).unwrap();
            let mc = induced_chain(&mdp, &r.scheduler).unwrap();
            let v = reach_probability(&mc, &[1]).unwrap();
            assert!((v[0] - r.value).abs() < 1e-12);
        }
        // max: a gives x = .3 + .35 x => x = .3/.65; b gives .6
        let max = mdp_extremal(&mdp, &[1], Optimum::Max).unwrap();
        assert!((max.value - 0.6f64.max(0.3 / 0.65)).abs() < 1e-12);
        let min = mdp_extremal(&mdp, &[1], Optimum::Min).unwrap();
        assert!((min.value - 0.6f64.min(0.3 / 0.65)).abs() < 1e-12);
    }

    #[test]
    fn single_action_matches_chain() {
        let mc = MarkovChain::new(
            0,
            vec![
                Distribution::new(vec![(0, 0.2), (1, 0.3), (2, 0.5)]).unwrap(),
                Distribution::dirac(1),
                Distribution::dirac(2),
            ],
        )
        .unwrap();
        let expected = reach_probability(&mc, &[1]).unwrap()[0];
        let mdp = Mdp::from(mc);
        for mode in [Optimum::Min, Optimum::Max] {
            let r = mdp_extremal(&mdp, &[1], mode).unwrap();
            assert!((r.value - expected).abs() < 1e-8);
        }
    }
}
