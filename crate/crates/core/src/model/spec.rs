use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ModelError, StateId};

/// Default slack τ applied to every threshold comparison.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl CmpOp {
    /// `value ∼ threshold` under slack `tol`: `≥ λ` means `value ≥ λ − τ`,
    /// `> λ` means `value > λ + τ`, mirrored for `≤` and `<`.
    pub fn holds(self, value: f64, threshold: f64, tol: f64) -> bool {
        match self {
            CmpOp::Ge => value >= threshold - tol,
            CmpOp::Gt => value > threshold + tol,
            CmpOp::Le => value <= threshold + tol,
            CmpOp::Lt => value < threshold - tol,
        }
    }

    /// True for `≤` and `<`: properties refuted by a large enough fragment.
    pub fn is_upper_bound(self) -> bool {
        matches!(self, CmpOp::Le | CmpOp::Lt)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for CmpOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "<" => Ok(CmpOp::Lt),
            "<=" => Ok(CmpOp::Le),
            ">=" => Ok(CmpOp::Ge),
            ">" => Ok(CmpOp::Gt),
            other => Err(format!("unknown comparison operator `{other}`")),
        }
    }
}

/// Reachability property `P∼λ(◇G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Specification {
    goal: Vec<StateId>,
    op: CmpOp,
    threshold: f64,
}

impl Specification {
    pub fn new(goal: Vec<StateId>, op: CmpOp, threshold: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(ModelError::InvalidThreshold(threshold));
        }
        let mut goal = goal;
        goal.sort_unstable();
        goal.dedup();
        if goal.is_empty() {
            return Err(ModelError::EmptyGoal);
        }
        Ok(Specification {
            goal,
            op,
            threshold,
        })
    }

    pub fn goal(&self) -> &[StateId] {
        &self.goal
    }

    pub fn op(&self) -> CmpOp {
        self.op
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(&self, op: CmpOp, threshold: f64) -> Result<Self, ModelError> {
        Specification::new(self.goal.clone(), op, threshold)
    }

    pub fn holds(&self, value: f64, tol: f64) -> bool {
        self.op.holds(value, self.threshold, tol)
    }

    pub(crate) fn goal_mask(&self, len: usize) -> Result<Vec<bool>, ModelError> {
        let mut mask = vec![false; len];
        for &g in &self.goal {
            if g >= len {
                return Err(ModelError::StateOutOfRange { state: g, len });
            }
            mask[g] = true;
        }
        Ok(mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_policy() {
        let tol = 1e-6;
        assert!(CmpOp::Ge.holds(0.1 - 5e-7, 0.1, tol));
        assert!(!CmpOp::Ge.holds(0.1 - 2e-6, 0.1, tol));
        assert!(!CmpOp::Gt.holds(0.1 + 5e-7, 0.1, tol));
        assert!(CmpOp::Gt.holds(0.1 + 2e-6, 0.1, tol));
        assert!(CmpOp::Le.holds(0.4 + 5e-7, 0.4, tol));
        assert!(!CmpOp::Lt.holds(0.4 - 5e-7, 0.4, tol));
    }

    #[test]
    fn rejects_bad_specs() {
        assert_eq!(
            Specification::new(vec![], CmpOp::Ge, 0.5),
            Err(ModelError::EmptyGoal)
        );
        assert_eq!(
            Specification::new(vec![1], CmpOp::Ge, 1.5),
            Err(ModelError::InvalidThreshold(1.5))
        );
    }
}
