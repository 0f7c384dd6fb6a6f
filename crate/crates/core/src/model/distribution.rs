use std::fmt;

use super::{ModelError, StateId};

/// Absolute tolerance on `Σ p = 1` accepted when building a distribution.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// A finite-support probability distribution over state indices.
///
/// Entries are kept sorted by state index; every probability lies in (0, 1]
/// and the probabilities sum to one within [`PROB_SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    entries: Vec<(StateId, f64)>,
}

impl Distribution {
    /// Builds a distribution, rejecting duplicate successors.
    pub fn new(mut entries: Vec<(StateId, f64)>) -> Result<Self, ModelError> {
        entries.sort_by_key(|&(s, _)| s);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(ModelError::DuplicateTarget(pair[0].0));
            }
        }
        Self::validated(entries)
    }

    /// Builds a distribution from weighted successors, summing the weights of
    /// repeated successors in the order given.
    pub fn merged<I>(weighted: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (StateId, f64)>,
    {
        let mut entries: Vec<(StateId, f64)> = Vec::new();
        for (s, p) in weighted {
            match entries.iter_mut().find(|(t, _)| *t == s) {
                Some(e) => e.1 += p,
                None => entries.push((s, p)),
            }
        }
        entries.sort_by_key(|&(s, _)| s);
        Self::validated(entries)
    }

    pub fn dirac(state: StateId) -> Self {
        Distribution {
            entries: vec![(state, 1.0)],
        }
    }

    fn validated(entries: Vec<(StateId, f64)>) -> Result<Self, ModelError> {
        if entries.is_empty() {
            return Err(ModelError::EmptyDistribution);
        }
        let mut sum = 0.0;
        for &(target, prob) in &entries {
            if !(prob > 0.0 && prob <= 1.0 + PROB_SUM_TOLERANCE) || !prob.is_finite() {
                return Err(ModelError::InvalidProbability { target, prob });
            }
            sum += prob;
        }
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(ModelError::BadSum(sum));
        }
        Ok(Distribution { entries })
    }

    pub fn entries(&self) -> &[(StateId, f64)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.entries.iter().map(|&(s, _)| s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn prob(&self, state: StateId) -> f64 {
        self.entries
            .binary_search_by_key(&state, |&(s, _)| s)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub(crate) fn max_state(&self) -> StateId {
        self.entries.last().map(|&(s, _)| s).unwrap_or(0)
    }

    /// Σ_t P(t) · values[t]
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.entries.iter().map(|&(s, p)| p * values[s]).sum()
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, p)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p} -> {s}")?;
        }
        Ok(())
    }
}
