//! Synthesis problems over a family and the three engines that solve them.
//!
//! * [`enumerate`] checks every realisation and serves as the oracle.
//! * [`cegar`] verifies quotient MDPs of subfamilies and splits them.
//! * [`cegis`] proposes candidates from a clause database and learns
//!   conflicts from critical sub-chains.

pub mod cegar;
pub mod cegis;
mod counterexample;
pub mod enumerate;
mod report;
mod space;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::family::{Family, FamilyError, HoleId, Realisation};
use crate::model::{
    check_with, CheckerConfig, CmpOp, ModelError, Specification, StateId, StateSet,
};

pub use cegar::{cegar_solve, split, Cegar};
pub use cegis::cegis_solve;
pub use counterexample::{extract_counterexample, CeMode, Counterexample};
pub use enumerate::{cost_optimal, enum_solve};
pub use report::{outcome_json, realisation_json};
pub use space::{AssignmentSpace, Clause, ClauseKind};

/// Bound on explicitly listed realisations (enumeration, partitions).
pub const DEFAULT_MAX_REALISATIONS: u128 = 1_000_000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid query: {0}")]
    Query(String),
    #[error("engine {engine} cannot solve this query: {reason}")]
    Incompatible { engine: Engine, reason: String },
    #[error("counterexample: {0}")]
    Counterexample(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QueryKind {
    Feasibility,
    Partition,
    Max,
    Min,
    /// Any realisation within a factor `1 - ε` of the maximum.
    EpsOptimal(f64),
}

impl QueryKind {
    pub fn name(self) -> &'static str {
        match self {
            QueryKind::Feasibility => "feasible",
            QueryKind::Partition => "partition",
            QueryKind::Max => "max",
            QueryKind::Min => "min",
            QueryKind::EpsOptimal(_) => "eps-optimal",
        }
    }

    pub(crate) fn is_optimisation(self) -> bool {
        matches!(
            self,
            QueryKind::Max | QueryKind::Min | QueryKind::EpsOptimal(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub kind: QueryKind,
    /// For optimisation queries only the goal set is used.
    pub spec: Specification,
    pub budget: Option<u64>,
    /// Minimise cost: over satisfying realisations for feasibility, over
    /// value-optimal ones for max/min.
    pub cheapest: bool,
}

impl Query {
    pub fn new(kind: QueryKind, spec: Specification) -> Self {
        Query {
            kind,
            spec,
            budget: None,
            cheapest: false,
        }
    }

    pub fn feasibility(spec: Specification) -> Self {
        Self::new(QueryKind::Feasibility, spec)
    }

    pub fn partition(spec: Specification) -> Self {
        Self::new(QueryKind::Partition, spec)
    }

    pub fn max(goal: Vec<StateId>) -> Result<Self, ModelError> {
        Ok(Self::new(
            QueryKind::Max,
            Specification::new(goal, CmpOp::Ge, 0.0)?,
        ))
    }

    pub fn min(goal: Vec<StateId>) -> Result<Self, ModelError> {
        Ok(Self::new(
            QueryKind::Min,
            Specification::new(goal, CmpOp::Ge, 0.0)?,
        ))
    }

    pub fn eps_optimal(goal: Vec<StateId>, eps: f64) -> Result<Self, ModelError> {
        Ok(Self::new(
            QueryKind::EpsOptimal(eps),
            Specification::new(goal, CmpOp::Ge, 0.0)?,
        ))
    }

    pub fn with_budget(mut self, budget: Option<u64>) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_cheapest(mut self, cheapest: bool) -> Self {
        self.cheapest = cheapest;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if let QueryKind::EpsOptimal(eps) = self.kind {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(SynthError::Query(format!(
                    "epsilon {eps} is outside (0, 1]"
                )));
            }
            if self.cheapest {
                return Err(SynthError::Query(
                    "cost minimisation is not defined for eps-optimal queries".into(),
                ));
            }
        }
        if self.cheapest && self.kind == QueryKind::Partition {
            return Err(SynthError::Query(
                "cost minimisation is not defined for partition queries".into(),
            ));
        }
        Ok(())
    }

    fn within_budget(&self, fam: &Family, r: &Realisation) -> bool {
        self.budget.is_none_or(|b| fam.cost(r) <= b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Enumerate,
    Cegar,
    Cegis,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Enumerate, Engine::Cegar, Engine::Cegis];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Enumerate => "enum",
            Engine::Cegar => "cegar",
            Engine::Cegis => "cegis",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "enum" | "enumerate" => Ok(Engine::Enumerate),
            "cegar" => Ok(Engine::Cegar),
            "cegis" => Ok(Engine::Cegis),
            other => Err(format!("unknown engine `{other}` (enum, cegar, cegis)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub checker: CheckerConfig,
    /// Worker threads for the enumeration engine.
    pub threads: usize,
    pub max_realisations: u128,
    pub trace: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            checker: CheckerConfig::default(),
            threads: 1,
            max_realisations: DEFAULT_MAX_REALISATIONS,
            trace: false,
        }
    }
}

impl SynthOptions {
    pub fn tolerance(&self) -> f64 {
        self.checker.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Feasible {
        witness: Realisation,
        value: f64,
        cost: u64,
    },
    /// Satisfying (`accepted`) and violating (`rejected`) realisations, both
    /// in lexicographic order.
    Partition {
        accepted: Vec<Realisation>,
        rejected: Vec<Realisation>,
    },
    Optimal {
        witness: Realisation,
        value: f64,
        cost: u64,
    },
    Unsatisfiable,
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Feasible { .. } => "feasible",
            Verdict::Partition { .. } => "partition",
            Verdict::Optimal { .. } => "optimal",
            Verdict::Unsatisfiable => "unsatisfiable",
        }
    }

    pub fn witness(&self) -> Option<&Realisation> {
        match self {
            Verdict::Feasible { witness, .. } | Verdict::Optimal { witness, .. } => Some(witness),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Verdict::Feasible { value, .. } | Verdict::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepVerdict {
    /// Classified as satisfying.
    Accept,
    /// Classified as violating.
    Reject,
    /// Over budget, classified without model checking.
    Budget,
    Split,
    /// Cannot beat the incumbent.
    Prune,
    /// New best value.
    Incumbent,
    Witness,
}

impl StepVerdict {
    pub fn name(self) -> &'static str {
        match self {
            StepVerdict::Accept => "accept",
            StepVerdict::Reject => "reject",
            StepVerdict::Budget => "budget",
            StepVerdict::Split => "split",
            StepVerdict::Prune => "prune",
            StepVerdict::Incumbent => "incumbent",
            StepVerdict::Witness => "witness",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceRecord {
    Cegar {
        size: u128,
        lower: Option<f64>,
        upper: Option<f64>,
        verdict: StepVerdict,
        split_hole: Option<HoleId>,
    },
    Cegis {
        candidate: Realisation,
        value: Option<f64>,
        verdict: StepVerdict,
        /// Critical states of the counterexample; empty when only the
        /// candidate itself was excluded.
        critical: StateSet,
        /// Excluded options per hole; every member picking one of them for
        /// each listed hole shares the candidate's verdict.
        cube: Vec<(HoleId, Vec<usize>)>,
        /// Realisations newly classified by this step, when tracked.
        pruned: Option<u128>,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stats {
    /// Realisations (or subfamilies, for CEGAR) examined.
    pub candidates: u64,
    /// Model-checker calls on candidates and quotients.
    pub checks: u64,
    pub iterations: u64,
    pub wall_ms: u64,
    pub trace: Vec<TraceRecord>,
}

impl Stats {
    fn absorb(&mut self, other: Stats) {
        self.candidates += other.candidates;
        self.checks += other.checks;
        self.iterations += other.iterations;
        self.trace.extend(other.trace);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdict: Verdict,
    pub stats: Stats,
}

/// Solves `query` on `fam` with the chosen engine.
pub fn solve(
    engine: Engine,
    fam: &Family,
    query: &Query,
    opts: &SynthOptions,
) -> Result<Outcome, SynthError> {
    match engine {
        Engine::Enumerate => enum_solve(fam, query, opts),
        Engine::Cegar => cegar_solve(fam, query, opts),
        Engine::Cegis => cegis_solve(fam, query, opts),
    }
}

/// Model-checks single realisations and counts the calls.
pub(crate) struct Verifier<'a> {
    pub fam: &'a Family,
    pub cfg: CheckerConfig,
    pub checks: u64,
}

impl<'a> Verifier<'a> {
    pub fn new(fam: &'a Family, cfg: &CheckerConfig) -> Self {
        Verifier {
            fam,
            cfg: cfg.clone(),
            checks: 0,
        }
    }

    /// Reachability value of `spec`'s goal in `D_r`, and whether it holds.
    pub fn check(
        &mut self,
        r: &Realisation,
        spec: &Specification,
    ) -> Result<(bool, f64), SynthError> {
        self.checks += 1;
        let res = check_with(&self.fam.chain_of(r), spec, &self.cfg)?;
        Ok((res.holds, res.value))
    }
}

/// For engines without built-in cost minimisation: solve, then tighten the
/// budget below the best cost found until nothing cheaper exists.
pub(crate) fn with_cost_descent(
    query: &Query,
    mut run: impl FnMut(&Query) -> Result<Outcome, SynthError>,
) -> Result<Outcome, SynthError> {
    let start = Instant::now();
    let mut plain = query.clone();
    plain.cheapest = false;
    let first = run(&plain)?;
    let mut stats = first.stats;
    let mut best = first.verdict;
    let spec = match (&best, query.kind) {
        (Verdict::Unsatisfiable, _) => None,
        (_, QueryKind::Feasibility) => Some(query.spec.clone()),
        (Verdict::Optimal { value, .. }, QueryKind::Max) => {
            Some(query.spec.with_threshold(CmpOp::Ge, *value)?)
        }
        (Verdict::Optimal { value, .. }, QueryKind::Min) => {
            Some(query.spec.with_threshold(CmpOp::Le, *value)?)
        }
        _ => None,
    };
    if let Some(spec) = spec {
        loop {
            let cost = match &best {
                Verdict::Feasible { cost, .. } | Verdict::Optimal { cost, .. } => *cost,
                _ => unreachable!("descent starts from a witness"),
            };
            if cost == 0 {
                break;
            }
            let q = Query::feasibility(spec.clone()).with_budget(Some(cost - 1));
            let next = run(&q)?;
            stats.absorb(next.stats);
            match next.verdict {
                Verdict::Feasible {
                    witness,
                    value,
                    cost,
                } => {
                    best = match best {
                        Verdict::Optimal { .. } => Verdict::Optimal {
                            witness,
                            value,
                            cost,
                        },
                        _ => Verdict::Feasible {
                            witness,
                            value,
                            cost,
                        },
                    }
                }
                _ => break,
            }
        }
    }
    stats.wall_ms = start.elapsed().as_millis() as u64;
    Ok(Outcome {
        verdict: best,
        stats,
    })
}

/// Mixed-radix index of `r` over the full option space.
pub(crate) fn rank(fam: &Family, r: &Realisation) -> usize {
    r.options()
        .iter()
        .enumerate()
        .fold(0usize, |acc, (h, &o)| acc * fam.hole(h).len() + o)
}
