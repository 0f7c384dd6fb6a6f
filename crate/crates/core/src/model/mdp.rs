use std::fmt;

use super::{Distribution, MarkovChain, ModelError, StateId};

/// A Markov decision process. Actions are identified by their position in
/// the per-state action list.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    init: StateId,
    actions: Vec<Vec<Distribution>>,
}

impl Mdp {
    pub fn new(init: StateId, actions: Vec<Vec<Distribution>>) -> Result<Self, ModelError> {
        let len = actions.len();
        if len == 0 {
            return Err(ModelError::NoStates);
        }
        if init >= len {
            return Err(ModelError::StateOutOfRange { state: init, len });
        }
        for (s, acts) in actions.iter().enumerate() {
            if acts.is_empty() {
                return Err(ModelError::NoActions(s));
            }
            for d in acts {
                let m = d.max_state();
                if m >= len {
                    return Err(ModelError::StateOutOfRange { state: m, len });
                }
            }
        }
        Ok(Mdp { init, actions })
    }

    pub fn init(&self) -> StateId {
        self.init
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn actions(&self, s: StateId) -> &[Distribution] {
        &self.actions[s]
    }

    pub fn action_count(&self) -> usize {
        self.actions.iter().map(Vec::len).sum()
    }

    /// The chain obtained when every state has exactly one action.
    pub fn as_chain(&self) -> Option<MarkovChain> {
        if self.actions.iter().any(|a| a.len() != 1) {
            return None;
        }
        let transitions = self.actions.iter().map(|a| a[0].clone()).collect();
        MarkovChain::new(self.init, transitions).ok()
    }
}

impl From<MarkovChain> for Mdp {
    fn from(mc: MarkovChain) -> Self {
        let init = mc.init();
        let actions = mc.transitions().iter().map(|d| vec![d.clone()]).collect();
        Mdp { init, actions }
    }
}

impl fmt::Display for Mdp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "init {}", self.init)?;
        for (i, acts) in self.actions.iter().enumerate() {
            for (a, d) in acts.iter().enumerate() {
                writeln!(f, "state {i} action {a}: {d}")?;
            }
        }
        Ok(())
    }
}

/// Memoryless deterministic scheduler: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MemorylessScheduler {
    choice: Vec<usize>,
}

impl MemorylessScheduler {
    pub fn new(choice: Vec<usize>) -> Self {
        MemorylessScheduler { choice }
    }

    /// The scheduler that always picks the first action.
    pub fn first_actions(len: usize) -> Self {
        MemorylessScheduler {
            choice: vec![0; len],
        }
    }

    pub fn choice(&self, s: StateId) -> usize {
        self.choice[s]
    }

    pub fn choices(&self) -> &[usize] {
        &self.choice
    }

    pub fn len(&self) -> usize {
        self.choice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choice.is_empty()
    }

    pub fn validate(&self, mdp: &Mdp) -> Result<(), ModelError> {
        if self.choice.len() != mdp.len() {
            return Err(ModelError::SchedulerLength {
                expected: mdp.len(),
                got: self.choice.len(),
            });
        }
        for (state, &action) in self.choice.iter().enumerate() {
            let available = mdp.actions(state).len();
            if action >= available {
                return Err(ModelError::SchedulerAction {
                    state,
                    action,
                    available,
                });
            }
        }
        Ok(())
    }
}

/// Resolves the nondeterminism of `mdp` with `sched`.
pub fn induced_chain(mdp: &Mdp, sched: &MemorylessScheduler) -> Result<MarkovChain, ModelError> {
    sched.validate(mdp)?;
    let transitions = (0..mdp.len())
        .map(|s| mdp.actions(s)[sched.choice(s)].clone())
        .collect();
    MarkovChain::new(mdp.init(), transitions)
}
