//! Finite families of Markov chains over a shared state space.

mod constraint;
mod json;
mod quotient;
mod realisation;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::graph::forward_mask;
use crate::model::{Distribution, MarkovChain, ModelError, StateId, StateSet};

pub use constraint::{ConstraintError, Formula, Literal, SExpr};
pub use quotient::{AllInOne, Consistency, Quotient, ALL_IN_ONE_BOUND};
pub use realisation::{Realisation, Realisations, Subfamily};

pub type HoleId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum FamilyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("family has no states")]
    NoStates,
    #[error("initial state {init} out of range (|S| = {len})")]
    InitOutOfRange { init: StateId, len: usize },
    #[error("state {0} has no transitions")]
    NoBranches(StateId),
    #[error("state {state}: branch probability {prob} is not in (0, 1]")]
    BadProbability { state: StateId, prob: f64 },
    #[error("state {state}: probabilities sum to {sum}")]
    BadSum { state: StateId, sum: f64 },
    #[error("state {state}: successor {target} out of range")]
    TargetOutOfRange { state: StateId, target: StateId },
    #[error("state {state}: successor table has {got} entries, expected {expected}")]
    TableSize {
        state: StateId,
        expected: usize,
        got: usize,
    },
    #[error("state {state}: hole id {hole} out of range")]
    BadHoleRef { state: StateId, hole: HoleId },
    #[error("state {state}: hole {hole} listed twice in one branch")]
    RepeatedHoleRef { state: StateId, hole: HoleId },
    #[error("duplicate hole name `{0}`")]
    DuplicateHole(String),
    #[error("hole `{0}` has no options")]
    NoOptions(String),
    #[error("hole `{hole}`: duplicate option `{option}`")]
    DuplicateOption { hole: String, option: String },
    #[error("hole `{hole}`: {got} costs for {expected} options")]
    CostCount {
        hole: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown hole `{0}`")]
    UnknownHole(String),
    #[error("hole `{hole}` has no option `{option}`")]
    UnknownOption { hole: String, option: String },
    #[error("assignment covers {got} of {expected} holes")]
    IncompleteAssignment { expected: usize, got: usize },
    #[error("hole `{hole}` assigned twice")]
    RepeatedAssignment { hole: String },
    #[error("option index {option} out of range for hole `{hole}`")]
    OptionOutOfRange { hole: String, option: usize },
    #[error("realisation {0} violates the family constraints")]
    ConstraintViolation(String),
    #[error("family has {count} realisations, above the bound {bound}")]
    TooManyRealisations { count: u128, bound: u128 },
    #[error("constraint `{0}` is not a restriction of a single hole")]
    NonDecomposable(String),
    #[error("state labels: {0}")]
    Labels(String),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error("json: {0}")]
    Json(String),
}

/// An unknown part of the family with finitely many options.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hole {
    pub name: String,
    pub options: Vec<String>,
    pub costs: Vec<u64>,
}

impl Hole {
    pub fn new(name: impl Into<String>, options: Vec<String>) -> Self {
        let costs = vec![0; options.len()];
        Hole {
            name: name.into(),
            options,
            costs,
        }
    }

    pub fn with_costs(mut self, costs: Vec<u64>) -> Self {
        self.costs = costs;
        self
    }

    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }

    pub fn option_index(&self, label: &str) -> Option<usize> {
        self.options.iter().position(|o| o == label)
    }
}

/// Successor of a branch. A `HoleRef` names one or more holes and a table
/// indexed by their options in mixed radix, the first hole most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Fixed(StateId),
    HoleRef {
        holes: Vec<HoleId>,
        table: Vec<StateId>,
    },
}

impl Target {
    pub fn hole(hole: HoleId, table: Vec<StateId>) -> Self {
        Target::HoleRef {
            holes: vec![hole],
            table,
        }
    }

    pub fn holes(&self) -> &[HoleId] {
        match self {
            Target::Fixed(_) => &[],
            Target::HoleRef { holes, .. } => holes,
        }
    }

    /// Resolves the successor given an option lookup per hole.
    pub fn resolve(&self, fam: &Family, option: impl Fn(HoleId) -> usize) -> StateId {
        match self {
            Target::Fixed(t) => *t,
            Target::HoleRef { holes, table } => {
                let mut idx = 0;
                for &h in holes {
                    idx = idx * fam.holes[h].len() + option(h);
                }
                table[idx]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub prob: f64,
    pub target: Target,
}

impl Branch {
    pub fn fixed(prob: f64, t: StateId) -> Self {
        Branch {
            prob,
            target: Target::Fixed(t),
        }
    }

    pub fn hole(prob: f64, hole: HoleId, table: Vec<StateId>) -> Self {
        Branch {
            prob,
            target: Target::hole(hole, table),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostModel {
    /// Reachable states plus their outgoing transitions.
    #[default]
    Structural,
    /// Sum of the chosen options' declared costs.
    OptionSum,
}

/// Variable valuations attached to states, used to resolve goal expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLabels {
    pub variables: Vec<String>,
    pub valuations: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    init: StateId,
    transitions: Vec<Vec<Branch>>,
    holes: Vec<Hole>,
    constraints: Vec<Formula>,
    cost_model: CostModel,
    labels: Option<StateLabels>,
}

const SUM_TOLERANCE: f64 = 1e-9;

impl Family {
    pub fn new(
        init: StateId,
        transitions: Vec<Vec<Branch>>,
        holes: Vec<Hole>,
    ) -> Result<Self, FamilyError> {
        let n = transitions.len();
        if n == 0 {
            return Err(FamilyError::NoStates);
        }
        if init >= n {
            return Err(FamilyError::InitOutOfRange { init, len: n });
        }
        let mut names = BTreeSet::new();
        for h in &holes {
            if !names.insert(h.name.as_str()) {
                return Err(FamilyError::DuplicateHole(h.name.clone()));
            }
            if h.options.is_empty() {
                return Err(FamilyError::NoOptions(h.name.clone()));
            }
            if h.costs.len() != h.options.len() {
                return Err(FamilyError::CostCount {
                    hole: h.name.clone(),
                    expected: h.options.len(),
                    got: h.costs.len(),
                });
            }
            let mut seen = BTreeSet::new();
            for o in &h.options {
                if !seen.insert(o.as_str()) {
                    return Err(FamilyError::DuplicateOption {
                        hole: h.name.clone(),
                        option: o.clone(),
                    });
                }
            }
        }
        for (s, branches) in transitions.iter().enumerate() {
            if branches.is_empty() {
                return Err(FamilyError::NoBranches(s));
            }
            let mut sum = 0.0;
            for b in branches {
                if !(b.prob > 0.0 && b.prob <= 1.0 + SUM_TOLERANCE) {
                    return Err(FamilyError::BadProbability {
                        state: s,
                        prob: b.prob,
                    });
                }
                sum += b.prob;
                match &b.target {
                    Target::Fixed(t) => {
                        if *t >= n {
                            return Err(FamilyError::TargetOutOfRange {
                                state: s,
                                target: *t,
                            });
                        }
                    }
                    Target::HoleRef { holes: hs, table } => {
                        let mut expected = 1usize;
                        for (i, &h) in hs.iter().enumerate() {
                            if h >= holes.len() {
                                return Err(FamilyError::BadHoleRef { state: s, hole: h });
                            }
                            if hs[..i].contains(&h) {
                                return Err(FamilyError::RepeatedHoleRef { state: s, hole: h });
                            }
                            expected = expected.saturating_mul(holes[h].len());
                        }
                        if table.len() != expected {
                            return Err(FamilyError::TableSize {
                                state: s,
                                expected,
                                got: table.len(),
                            });
                        }
                        if let Some(&t) = table.iter().find(|&&t| t >= n) {
                            return Err(FamilyError::TargetOutOfRange {
                                state: s,
                                target: t,
                            });
                        }
                    }
                }
            }
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(FamilyError::BadSum { state: s, sum });
            }
        }
        Ok(Family {
            init,
            transitions,
            holes,
            constraints: Vec::new(),
            cost_model: CostModel::Structural,
            labels: None,
        })
    }

    pub fn with_constraints(mut self, constraints: Vec<Formula>) -> Result<Self, FamilyError> {
        for c in &constraints {
            c.validate(&self.holes)?;
        }
        self.constraints = constraints;
        Ok(self)
    }

    pub fn with_cost_model(mut self, model: CostModel) -> Self {
        self.cost_model = model;
        self
    }

    pub fn with_labels(mut self, labels: StateLabels) -> Result<Self, FamilyError> {
        if labels.valuations.len() != self.len() {
            return Err(FamilyError::Labels(format!(
                "{} valuations for {} states",
                labels.valuations.len(),
                self.len()
            )));
        }
        if let Some(v) = labels
            .valuations
            .iter()
            .find(|v| v.len() != labels.variables.len())
        {
            return Err(FamilyError::Labels(format!(
                "valuation {:?} does not match {} variables",
                v,
                labels.variables.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
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

    pub fn holes(&self) -> &[Hole] {
        &self.holes
    }

    pub fn hole(&self, h: HoleId) -> &Hole {
        &self.holes[h]
    }

    pub fn hole_id(&self, name: &str) -> Option<HoleId> {
        self.holes.iter().position(|h| h.name == name)
    }

    pub fn branches(&self, s: StateId) -> &[Branch] {
        &self.transitions[s]
    }

    pub fn constraints(&self) -> &[Formula] {
        &self.constraints
    }

    pub fn cost_model(&self) -> CostModel {
        self.cost_model
    }

    pub fn labels(&self) -> Option<&StateLabels> {
        self.labels.as_ref()
    }

    /// Size of the unconstrained product of option sets.
    pub fn product_size(&self) -> u128 {
        self.holes
            .iter()
            .fold(1u128, |acc, h| acc.saturating_mul(h.len() as u128))
    }

    /// Holes mentioned by the branches of `s`, sorted.
    pub fn holes_at(&self, s: StateId) -> Vec<HoleId> {
        let set: BTreeSet<HoleId> = self.transitions[s]
            .iter()
            .flat_map(|b| b.target.holes().iter().copied())
            .collect();
        set.into_iter().collect()
    }

    /// Holes occurring in the transitions of any state of `critical`.
    pub fn conflict_holes(&self, critical: &StateSet) -> BTreeSet<HoleId> {
        critical
            .iter()
            .filter(|&&s| s < self.len())
            .flat_map(|&s| self.transitions[s].iter())
            .flat_map(|b| b.target.holes().iter().copied())
            .collect()
    }

    pub fn satisfies_constraints(&self, r: &Realisation) -> bool {
        self.constraints.iter().all(|c| c.eval(r.options()))
    }

    /// Checks that `r` assigns every hole a valid option.
    pub fn validate_realisation(&self, r: &Realisation) -> Result<(), FamilyError> {
        if r.len() != self.holes.len() {
            return Err(FamilyError::IncompleteAssignment {
                expected: self.holes.len(),
                got: r.len(),
            });
        }
        for (h, &o) in r.options().iter().enumerate() {
            if o >= self.holes[h].len() {
                return Err(FamilyError::OptionOutOfRange {
                    hole: self.holes[h].name.clone(),
                    option: o,
                });
            }
        }
        Ok(())
    }

    /// The chain `D_r` of a valid, constraint-satisfying realisation.
    pub fn realise(&self, r: &Realisation) -> Result<MarkovChain, FamilyError> {
        self.validate_realisation(r)?;
        if !self.satisfies_constraints(r) {
            return Err(FamilyError::ConstraintViolation(self.describe(r)));
        }
        Ok(self.chain_of(r))
    }

    /// `D_r` without validation; `r` must be total and in range.
    pub(crate) fn chain_of(&self, r: &Realisation) -> MarkovChain {
        let transitions = (0..self.len())
            .map(|s| self.distribution_with(s, |h| r.option(h)))
            .collect();
        MarkovChain::new(self.init, transitions).expect("validated family yields a valid chain")
    }

    /// Distribution of `s` with holes resolved by `option`; repeated
    /// successors are merged.
    pub(crate) fn distribution_with(
        &self,
        s: StateId,
        option: impl Fn(HoleId) -> usize,
    ) -> Distribution {
        let entries = self.transitions[s]
            .iter()
            .map(|b| (b.target.resolve(self, &option), b.prob))
            .collect::<Vec<_>>();
        Distribution::merged(entries).expect("validated family yields valid distributions")
    }

    /// Realisation cost under the family's cost model.
    pub fn cost(&self, r: &Realisation) -> u64 {
        match self.cost_model {
            CostModel::OptionSum => self.option_sum_cost(r),
            CostModel::Structural => self.structural_cost(r),
        }
    }

    pub fn option_sum_cost(&self, r: &Realisation) -> u64 {
        r.options()
            .iter()
            .enumerate()
            .map(|(h, &o)| self.holes[h].costs[o])
            .sum()
    }

    pub fn structural_cost(&self, r: &Realisation) -> u64 {
        let mc = self.chain_of(r);
        let reach = forward_mask(&mc.successor_lists(), mc.init());
        let mut cost = 0u64;
        for (s, &live) in reach.iter().enumerate() {
            if live {
                cost += 1 + mc.distribution(s).len() as u64;
            }
        }
        cost
    }

    /// Lowest cost any member of `sub` can have, when cheaply known.
    pub fn cost_lower_bound(&self, sub: &Subfamily) -> u64 {
        match self.cost_model {
            CostModel::OptionSum => (0..self.holes.len())
                .map(|h| {
                    sub.remaining(h)
                        .iter()
                        .map(|&o| self.holes[h].costs[o])
                        .min()
                        .unwrap_or(0)
                })
                .sum(),
            CostModel::Structural => 0,
        }
    }

    /// Constraint-satisfying members of `sub`, in lexicographic order.
    pub fn realisations<'a>(&'a self, sub: &Subfamily) -> Realisations<'a> {
        Realisations::new(self, sub.clone())
    }

    /// All constraint-satisfying members of `sub`, refusing more than `bound`.
    pub fn collect_realisations(
        &self,
        sub: &Subfamily,
        bound: u128,
    ) -> Result<Vec<Realisation>, FamilyError> {
        let count = sub.size();
        if count > bound {
            return Err(FamilyError::TooManyRealisations { count, bound });
        }
        Ok(self.realisations(sub).collect())
    }

    pub fn full(&self) -> Subfamily {
        Subfamily::full(self)
    }

    /// Folds top-level conjuncts that each restrict one hole into the full
    /// subfamily. `Ok(None)` means the constraints admit no member.
    pub fn decompose_constraints(&self) -> Result<Option<Subfamily>, FamilyError> {
        let mut sub = self.full();
        let mut conjuncts = Vec::new();
        for c in &self.constraints {
            c.conjuncts(&mut conjuncts);
        }
        for c in conjuncts {
            let holes = c.holes();
            match holes.len() {
                0 => {
                    if !c.eval(&[]) {
                        return Ok(None);
                    }
                }
                1 => {
                    let h = *holes.iter().next().unwrap();
                    let mut probe = vec![0; self.holes.len()];
                    let keep: Vec<usize> = sub
                        .remaining(h)
                        .iter()
                        .copied()
                        .filter(|&o| {
                            probe[h] = o;
                            c.eval(&probe)
                        })
                        .collect();
                    if keep.is_empty() {
                        return Ok(None);
                    }
                    sub = sub.restrict(h, keep);
                }
                _ => {
                    return Err(FamilyError::NonDecomposable(
                        c.to_sexpr(&self.holes).to_string(),
                    ))
                }
            }
        }
        Ok(Some(sub))
    }

    /// `k2=2, k3=4` style rendering.
    pub fn describe(&self, r: &Realisation) -> String {
        r.options()
            .iter()
            .enumerate()
            .map(|(h, &o)| format!("{}={}", self.holes[h].name, self.holes[h].options[o]))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Parses `name=label,...` into (hole, option) pairs. Hole names may be
    /// written with or without surrounding `@`.
    pub fn parse_assignment(&self, text: &str) -> Result<Vec<(HoleId, usize)>, FamilyError> {
        let mut out: Vec<(HoleId, usize)> = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, label) = part
                .split_once('=')
                .ok_or_else(|| FamilyError::UnknownHole(part.to_string()))?;
            let name = name.trim().trim_matches('@');
            let label = label.trim();
            let h = self
                .hole_id(name)
                .ok_or_else(|| FamilyError::UnknownHole(name.to_string()))?;
            let o =
                self.holes[h]
                    .option_index(label)
                    .ok_or_else(|| FamilyError::UnknownOption {
                        hole: name.to_string(),
                        option: label.to_string(),
                    })?;
            if out.iter().any(|&(g, _)| g == h) {
                return Err(FamilyError::RepeatedAssignment {
                    hole: name.to_string(),
                });
            }
            out.push((h, o));
        }
        Ok(out)
    }

    /// A total realisation from `name=label,...`.
    pub fn parse_realisation(&self, text: &str) -> Result<Realisation, FamilyError> {
        let pairs = self.parse_assignment(text)?;
        if pairs.len() != self.holes.len() {
            return Err(FamilyError::IncompleteAssignment {
                expected: self.holes.len(),
                got: pairs.len(),
            });
        }
        let mut opts = vec![0; self.holes.len()];
        for (h, o) in pairs {
            opts[h] = o;
        }
        Ok(Realisation::new(opts))
    }

    /// The subfamily pinning the holes named in `text`.
    pub fn parse_subfamily(&self, text: &str) -> Result<Subfamily, FamilyError> {
        let mut sub = self.full();
        for (h, o) in self.parse_assignment(text)? {
            sub = sub.restrict(h, vec![o]);
        }
        Ok(sub)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

#[cfg(test)]
mod tests;
