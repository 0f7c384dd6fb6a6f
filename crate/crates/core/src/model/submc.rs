use super::graph::StateSet;
use super::{Distribution, MarkovChain, ModelError, StateId};

/// `Succ(C)`: states with positive probability from some state in `critical`.
pub fn successors_of(mc: &MarkovChain, critical: &StateSet) -> StateSet {
    critical
        .iter()
        .flat_map(|&s| mc.distribution(s).support())
        .collect()
}

/// Sub-chain induced by the critical states `critical`.
///
/// The index space of `mc` is kept: states in `critical` keep their
/// transitions and every other state becomes absorbing. States outside
/// `C ∪ Succ(C)` are unreachable in the result, so reachability values at
/// the initial state coincide with those of the sub-MC over `C ∪ Succ(C)`.
pub fn sub_mc(mc: &MarkovChain, critical: &StateSet) -> Result<MarkovChain, ModelError> {
    if !critical.contains(&mc.init()) {
        return Err(ModelError::MissingInitial(mc.init()));
    }
    if let Some(&s) = critical.iter().next_back() {
        if s >= mc.len() {
            return Err(ModelError::StateOutOfRange {
                state: s,
                len: mc.len(),
            });
        }
    }
    let transitions = (0..mc.len())
        .map(|s: StateId| {
            if critical.contains(&s) {
                mc.distribution(s).clone()
            } else {
                Distribution::dirac(s)
            }
        })
        .collect();
    MarkovChain::new(mc.init(), transitions)
}
