use std::fmt;

use super::{Distribution, ModelError, StateId};

/// A discrete-time Markov chain over states `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    init: StateId,
    transitions: Vec<Distribution>,
}

impl MarkovChain {
    pub fn new(init: StateId, transitions: Vec<Distribution>) -> Result<Self, ModelError> {
        let len = transitions.len();
        if len == 0 {
            return Err(ModelError::NoStates);
        }
        if init >= len {
            return Err(ModelError::StateOutOfRange { state: init, len });
        }
        for d in &transitions {
            let m = d.max_state();
            if m >= len {
                return Err(ModelError::StateOutOfRange { state: m, len });
            }
        }
        Ok(MarkovChain { init, transitions })
    }

    pub fn init(&self) -> StateId {
        self.init
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Distribution] {
        &self.transitions
    }

    pub fn distribution(&self, s: StateId) -> &Distribution {
        &self.transitions[s]
    }

    pub(crate) fn successor_lists(&self) -> Vec<Vec<StateId>> {
        self.transitions
            .iter()
            .map(|d| d.support().collect())
            .collect()
    }

    /// Total number of transition entries over all states.
    pub fn transition_count(&self) -> usize {
        self.transitions.iter().map(Distribution::len).sum()
    }
}

/// Line-oriented dump: `state i: p1 -> j1, p2 -> j2`.
impl fmt::Display for MarkovChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "init {}", self.init)?;
        for (i, d) in self.transitions.iter().enumerate() {
            writeln!(f, "state {i}: {d}")?;
        }
        Ok(())
    }
}
