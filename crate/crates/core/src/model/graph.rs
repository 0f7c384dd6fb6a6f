use std::collections::{BTreeSet, VecDeque};

use super::{MarkovChain, StateId};

pub type StateSet = BTreeSet<StateId>;

pub(crate) fn predecessors(succ: &[Vec<StateId>]) -> Vec<Vec<StateId>> {
    let mut pred = vec![Vec::new(); succ.len()];
    for (s, ts) in succ.iter().enumerate() {
        for &t in ts {
            pred[t].push(s);
        }
    }
    for p in &mut pred {
        p.dedup();
    }
    pred
}

/// States that can reach `targets` moving only through `passable` states
/// (targets themselves are always included).
pub(crate) fn backward_reach(
    pred: &[Vec<StateId>],
    targets: &[bool],
    passable: impl Fn(StateId) -> bool,
) -> Vec<bool> {
    let mut seen = targets.to_vec();
    let mut queue: VecDeque<StateId> = (0..targets.len()).filter(|&s| targets[s]).collect();
    while let Some(t) = queue.pop_front() {
        for &s in &pred[t] {
            if !seen[s] && passable(s) {
                seen[s] = true;
                queue.push_back(s);
            }
        }
    }
    seen
}

pub(crate) fn forward_mask(succ: &[Vec<StateId>], from: StateId) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(s) = queue.pop_front() {
        for &t in &succ[s] {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    seen
}

/// States reachable from the initial state of `mc`.
pub fn forward_reachable(mc: &MarkovChain) -> StateSet {
    let mask = forward_mask(&mc.successor_lists(), mc.init());
    mask_to_set(&mask)
}

pub(crate) fn mask_to_set(mask: &[bool]) -> StateSet {
    mask.iter()
        .enumerate()
        .filter_map(|(s, &b)| b.then_some(s))
        .collect()
}

/// Strongly connected components of the subgraph induced by `member`,
/// emitted in reverse topological order (every component comes after all
/// components it can reach). States inside a component are sorted.
pub(crate) fn sccs(succ: &[Vec<StateId>], member: &[bool]) -> Vec<Vec<StateId>> {
    const UNSEEN: usize = usize::MAX;
    let n = succ.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<StateId> = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0usize;
    // (node, next successor position)
    let mut call: Vec<(StateId, usize)> = Vec::new();

    for root in 0..n {
        if !member[root] || index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if !member[w] {
                    continue;
                }
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scc_order_is_reverse_topological() {
        // 0 -> 1 <-> 2 -> 3
        let succ = vec![vec![1], vec![2], vec![1, 3], vec![3]];
        let comps = sccs(&succ, &[true; 4]);
        assert_eq!(comps, vec![vec![3], vec![1, 2], vec![0]]);
    }

    #[test]
    fn scc_respects_membership() {
        let succ = vec![vec![1], vec![0]];
        let comps = sccs(&succ, &[true, false]);
        assert_eq!(comps, vec![vec![0]]);
    }

    #[test]
    fn backward_reach_avoids_blocked() {
        let succ = vec![vec![1], vec![2], vec![2]];
        let pred = predecessors(&succ);
        let r = backward_reach(&pred, &[false, false, true], |s| s != 1);
        assert_eq!(r, vec![false, false, true]);
    }
}
