//! Inductive synthesis: candidates come from an [`AssignmentSpace`]; every
//! verified candidate is excluded, and refuting (or establishing) critical
//! sub-chains exclude every realisation that shares them.

use std::time::Instant;

use super::counterexample::{extract_counterexample, CeMode};
use super::space::{AssignmentSpace, Clause, ClauseKind};
use super::{
    rank, with_cost_descent, Outcome, Query, QueryKind, Stats, StepVerdict, SynthError,
    SynthOptions, TraceRecord, Verdict,
};
use crate::family::{CostModel, Family, HoleId, Realisation, Subfamily};
use crate::model::{check_with, CheckerConfig, CmpOp, Specification, StateSet};

const UNSEEN: u8 = 0;
const SAT: u8 = 1;
const UNSAT: u8 = 2;

pub fn cegis_solve(fam: &Family, q: &Query, opts: &SynthOptions) -> Result<Outcome, SynthError> {
    q.validate()?;
    if q.cheapest {
        return with_cost_descent(q, |q| cegis_solve(fam, q, opts));
    }
    let start = Instant::now();
    let mut run = Cegis::new(fam, q, opts)?;
    let verdict = match q.kind {
        QueryKind::Feasibility | QueryKind::Partition => run.threshold()?,
        QueryKind::Max | QueryKind::Min | QueryKind::EpsOptimal(_) => run.optimise()?,
    };
    let mut stats = run.stats;
    stats.wall_ms = start.elapsed().as_millis() as u64;
    Ok(Outcome { verdict, stats })
}

/// Members of `fam` that agree with `r` on the transitions of every state
/// in `critical`: per conflict hole, the options that give the same targets
/// as `r` on all single-hole branches there. Holes that share a branch with
/// another hole keep only `r`'s option.
pub fn conflict_cube(
    fam: &Family,
    r: &Realisation,
    critical: &StateSet,
) -> Vec<(HoleId, Vec<usize>)> {
    let holes = fam.conflict_holes(critical);
    holes
        .into_iter()
        .map(|h| {
            let mine = r.option(h);
            let mut keep: Vec<usize> = (0..fam.hole(h).len()).collect();
            for &s in critical {
                for b in fam.branches(s) {
                    let hs = b.target.holes();
                    if !hs.contains(&h) {
                        continue;
                    }
                    if hs.len() > 1 {
                        keep.retain(|&o| o == mine);
                        continue;
                    }
                    let at = |o: usize| {
                        b.target
                            .resolve(fam, |g| if g == h { o } else { r.option(g) })
                    };
                    let target = at(mine);
                    keep.retain(|&o| at(o) == target);
                }
            }
            (h, keep)
        })
        .collect()
}

struct Cegis<'a> {
    fam: &'a Family,
    q: &'a Query,
    opts: &'a SynthOptions,
    space: AssignmentSpace,
    /// Per-realisation classification, when the family is small enough to
    /// track explicitly.
    marks: Option<Vec<u8>>,
    stats: Stats,
}

impl<'a> Cegis<'a> {
    fn new(fam: &'a Family, q: &'a Query, opts: &'a SynthOptions) -> Result<Self, SynthError> {
        let size = fam.product_size();
        if q.kind == QueryKind::Partition && size > opts.max_realisations {
            return Err(crate::family::FamilyError::TooManyRealisations {
                count: size,
                bound: opts.max_realisations,
            }
            .into());
        }
        let mut space = AssignmentSpace::new(fam);
        if let (Some(b), CostModel::OptionSum) = (q.budget, fam.cost_model()) {
            space.set_option_budget(fam, b);
        }
        let marks = (size <= opts.max_realisations).then(|| vec![UNSEEN; size as usize]);
        Ok(Cegis {
            fam,
            q,
            opts,
            space,
            marks,
            stats: Stats::default(),
        })
    }

    fn next(&mut self) -> Option<Realisation> {
        let r = self.space.next_candidate()?;
        self.stats.candidates += 1;
        self.stats.iterations += 1;
        Some(r)
    }

    /// Structural budgets are checked per candidate; option-sum budgets are
    /// already enforced by the space.
    fn over_budget(&self, r: &Realisation) -> bool {
        self.q.budget.is_some_and(|b| {
            self.fam.cost_model() == CostModel::Structural && self.fam.structural_cost(r) > b
        })
    }

    /// Marks the members of `cube` not classified before; returns how many.
    fn mark(&mut self, cube: &[(HoleId, Vec<usize>)], verdict: u8) -> Option<u128> {
        let marks = self.marks.as_mut()?;
        let mut options: Vec<Vec<usize>> = (0..self.fam.holes().len())
            .map(|h| (0..self.fam.hole(h).len()).collect())
            .collect();
        for (h, opts) in cube {
            options[*h] = opts.clone();
        }
        let mut fresh = 0u128;
        for r in self.fam.realisations(&Subfamily::from_options(options)) {
            let m = &mut marks[rank(self.fam, &r)];
            if *m == UNSEEN {
                *m = verdict;
                fresh += 1;
            }
        }
        Some(fresh)
    }

    fn singleton(r: &Realisation) -> Vec<(HoleId, Vec<usize>)> {
        r.options()
            .iter()
            .enumerate()
            .map(|(h, &o)| (h, vec![o]))
            .collect()
    }

    fn record(
        &mut self,
        r: &Realisation,
        value: Option<f64>,
        verdict: StepVerdict,
        critical: StateSet,
        cube: Vec<(HoleId, Vec<usize>)>,
        pruned: Option<u128>,
    ) {
        if self.opts.trace {
            self.stats.trace.push(TraceRecord::Cegis {
                candidate: r.clone(),
                value,
                verdict,
                critical,
                cube,
                pruned,
            });
        }
    }

    /// Blocks `r` alone with the given verdict.
    fn classify_single(
        &mut self,
        r: &Realisation,
        value: Option<f64>,
        sat: bool,
        step: StepVerdict,
    ) {
        let kind = if sat {
            ClauseKind::Accept
        } else {
            ClauseKind::Reject
        };
        self.space.block(r, kind);
        if !sat {
            self.space
                .note_refuted(r.options().iter().enumerate().map(|(h, &o)| (h, o)));
        }
        let cube = Self::singleton(r);
        let pruned = self.mark(&cube, if sat { SAT } else { UNSAT });
        self.record(r, value, step, StateSet::new(), cube, pruned);
    }

    /// Learns the cube of a critical set found for `r`.
    fn generalise(
        &mut self,
        r: &Realisation,
        value: f64,
        spec: &Specification,
        mode: CeMode,
        cfg: &CheckerConfig,
    ) -> Result<(), SynthError> {
        let mc = self.fam.chain_of(r);
        let ce = match extract_counterexample(&mc, spec, mode, cfg) {
            Ok(ce) => ce,
            // a value within rounding of the threshold: exclude `r` alone
            Err(SynthError::Counterexample(_)) => {
                let sat = mode == CeMode::Establish;
                let step = if sat {
                    StepVerdict::Accept
                } else {
                    StepVerdict::Reject
                };
                self.classify_single(r, Some(value), sat, step);
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let cube = conflict_cube(self.fam, r, &ce.critical);
        let (kind, verdict, step) = match mode {
            CeMode::Refute => (ClauseKind::Reject, UNSAT, StepVerdict::Reject),
            CeMode::Establish => (ClauseKind::Accept, SAT, StepVerdict::Accept),
        };
        self.space.learn(Clause::blocking(self.fam, &cube, kind));
        if mode == CeMode::Refute {
            self.space
                .note_refuted(cube.iter().map(|(h, _)| (*h, r.option(*h))));
        }
        let pruned = self.mark(&cube, verdict);
        self.record(r, Some(value), step, ce.critical, cube, pruned);
        Ok(())
    }

    fn check(
        &mut self,
        r: &Realisation,
        spec: &Specification,
        cfg: &CheckerConfig,
    ) -> Result<(bool, f64), SynthError> {
        self.stats.checks += 1;
        let res = check_with(&self.fam.chain_of(r), spec, cfg)?;
        Ok((res.holds, res.value))
    }

    fn threshold(&mut self) -> Result<Verdict, SynthError> {
        let spec = &self.q.spec;
        let cfg = self.opts.checker.clone();
        let upper = spec.op().is_upper_bound();
        let partition = self.q.kind == QueryKind::Partition;
        while let Some(r) = self.next() {
            if self.over_budget(&r) {
                self.classify_single(&r, None, false, StepVerdict::Budget);
                continue;
            }
            let (holds, value) = self.check(&r, spec, &cfg)?;
            if holds && !partition {
                self.record(
                    &r,
                    Some(value),
                    StepVerdict::Witness,
                    StateSet::new(),
                    Vec::new(),
                    None,
                );
                return Ok(Verdict::Feasible {
                    cost: self.fam.cost(&r),
                    witness: r,
                    value,
                });
            }
            match (holds, upper) {
                (false, true) => self.generalise(&r, value, spec, CeMode::Refute, &cfg)?,
                (true, false) => self.generalise(&r, value, spec, CeMode::Establish, &cfg)?,
                (true, true) => self.classify_single(&r, Some(value), true, StepVerdict::Accept),
                (false, false) => self.classify_single(&r, Some(value), false, StepVerdict::Reject),
            }
        }
        if !partition {
            return Ok(Verdict::Unsatisfiable);
        }
        let marks = self.marks.as_ref().expect("partition tracks every member");
        let (mut accepted, mut rejected) = (Vec::new(), Vec::new());
        for r in self.fam.realisations(&self.fam.full()) {
            let m = marks[rank(self.fam, &r)];
            let affordable = self.q.within_budget(self.fam, &r);
            // option-sum budgets keep unaffordable members out of the space
            debug_assert!(m != UNSEEN || !affordable, "{r} left unclassified");
            if m == SAT && affordable {
                accepted.push(r);
            } else {
                rejected.push(r);
            }
        }
        Ok(Verdict::Partition { accepted, rejected })
    }

    /// Max, min and ε-optimal values by iterated feasibility: each found
    /// value becomes the strict threshold of the next query. Learned
    /// exclusions stay valid because the thresholds only tighten.
    fn optimise(&mut self) -> Result<Verdict, SynthError> {
        let minimise = self.q.kind == QueryKind::Min;
        let eps = match self.q.kind {
            QueryKind::EpsOptimal(e) => e,
            _ => 0.0,
        };
        let strict = CheckerConfig {
            tolerance: 0.0,
            ..self.opts.checker.clone()
        };
        let goal = self.q.spec.goal().to_vec();
        let mut best: Option<(Realisation, f64)> = None;
        while let Some(r) = self.next() {
            if self.over_budget(&r) {
                self.classify_single(&r, None, false, StepVerdict::Budget);
                continue;
            }
            let Some((_, v)) = &best else {
                let any = Specification::new(goal.clone(), CmpOp::Ge, 0.0)?;
                let (_, value) = self.check(&r, &any, &strict)?;
                self.classify_single(&r, Some(value), true, StepVerdict::Incumbent);
                best = Some((r, value));
                if self.done(value, eps, minimise) {
                    break;
                }
                continue;
            };
            let v = *v;
            let spec = if minimise {
                Specification::new(goal.clone(), CmpOp::Lt, v)?
            } else {
                Specification::new(goal.clone(), CmpOp::Gt, (v / (1.0 - eps)).min(1.0))?
            };
            let (better, value) = self.check(&r, &spec, &strict)?;
            if better {
                self.classify_single(&r, Some(value), true, StepVerdict::Incumbent);
                best = Some((r, value));
                if self.done(value, eps, minimise) {
                    break;
                }
            } else if minimise {
                // value >= v: a critical set reaching v excludes its cube
                self.generalise(&r, value, &spec, CeMode::Refute, &strict)?;
            } else {
                self.classify_single(&r, Some(value), false, StepVerdict::Reject);
            }
        }
        Ok(match best {
            Some((witness, value)) => Verdict::Optimal {
                cost: self.fam.cost(&witness),
                witness,
                value,
            },
            None => Verdict::Unsatisfiable,
        })
    }

    fn done(&self, value: f64, eps: f64, minimise: bool) -> bool {
        if minimise {
            value <= 0.0
        } else {
            eps >= 1.0 || value >= 1.0 - eps || value >= 1.0
        }
    }
}
