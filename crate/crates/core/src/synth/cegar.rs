//! Abstraction refinement over subfamilies: the quotient MDP of a subfamily
//! bounds the values of all its members at once; undecided subfamilies are
//! split along the holes on which the optimal scheduler is inconsistent.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::time::Instant;

use super::{
    with_cost_descent, Engine, Outcome, Query, QueryKind, Stats, StepVerdict, SynthError,
    SynthOptions, TraceRecord, Verdict,
};
use crate::family::{
    Consistency, CostModel, Family, FamilyError, HoleId, Quotient, Realisation, Subfamily,
};
use crate::model::{check_with, mdp_extremal_with, Optimum};

pub fn cegar_solve(fam: &Family, q: &Query, opts: &SynthOptions) -> Result<Outcome, SynthError> {
    q.validate()?;
    if q.cheapest {
        return with_cost_descent(q, |q| cegar_solve(fam, q, opts));
    }
    let mut run = Cegar::new(fam, q, opts)?;
    while run.step()? {}
    run.into_outcome()
}

/// Splits an undecided subfamily on the hole with the most options chosen
/// by the scheduler (lowest id on ties): the option chosen most often
/// (lowest on ties) against the rest.
pub fn split(sub: &Subfamily, c: &Consistency) -> Result<(Subfamily, Subfamily), SynthError> {
    let Consistency::Inconsistent(usage) = c else {
        return Err(SynthError::Query(
            "a consistent scheduler gives no split".into(),
        ));
    };
    let (h, opts) = usage
        .iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
        .ok_or_else(|| SynthError::Query("inconsistency without holes".into()))?;
    let (&part, _) = opts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .expect("inconsistent holes have several options");
    sub.split(*h, &[part])
        .ok_or_else(|| SynthError::Query(format!("hole {h} cannot be split further")))
}

fn split_hole(sub: &Subfamily, a: &Subfamily) -> HoleId {
    (0..sub.hole_count())
        .find(|&h| sub.remaining(h) != a.remaining(h))
        .expect("split changes one hole")
}

/// Heap entry for optimisation: larger keys first, then older entries.
struct Entry {
    key: f64,
    seq: u64,
    sub: Subfamily,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Step-wise CEGAR run. At any point the accepted, rejected, pruned and
/// pending subfamilies partition the (constraint-restricted) family.
pub struct Cegar<'a> {
    fam: &'a Family,
    q: &'a Query,
    opts: &'a SynthOptions,
    queue: VecDeque<Subfamily>,
    heap: BinaryHeap<Entry>,
    seq: u64,
    accepted: Vec<Subfamily>,
    rejected: Vec<Subfamily>,
    pruned: Vec<Subfamily>,
    witness: Option<(Realisation, f64)>,
    start: Instant,
    stats: Stats,
}

impl<'a> Cegar<'a> {
    pub fn new(fam: &'a Family, q: &'a Query, opts: &'a SynthOptions) -> Result<Self, SynthError> {
        q.validate()?;
        if q.kind == QueryKind::Partition && fam.product_size() > opts.max_realisations {
            return Err(FamilyError::TooManyRealisations {
                count: fam.product_size(),
                bound: opts.max_realisations,
            }
            .into());
        }
        let root = match fam.decompose_constraints() {
            Ok(root) => root,
            Err(FamilyError::NonDecomposable(c)) => {
                return Err(SynthError::Incompatible {
                    engine: Engine::Cegar,
                    reason: format!("constraint `{c}` relates several holes"),
                })
            }
            Err(e) => return Err(e.into()),
        };
        let mut run = Cegar {
            fam,
            q,
            opts,
            queue: VecDeque::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            accepted: Vec::new(),
            rejected: Vec::new(),
            pruned: Vec::new(),
            witness: None,
            start: Instant::now(),
            stats: Stats::default(),
        };
        if let Some(root) = root {
            let key = if q.kind == QueryKind::Min { 0.0 } else { 1.0 };
            run.push(root, key);
        }
        Ok(run)
    }

    fn optimising(&self) -> bool {
        self.q.kind.is_optimisation()
    }

    fn minimising(&self) -> bool {
        self.q.kind == QueryKind::Min
    }

    /// Queues `sub`; `bound` is the best value its members can have.
    fn push(&mut self, sub: Subfamily, bound: f64) {
        if self.optimising() {
            let key = if self.minimising() { -bound } else { bound };
            self.seq += 1;
            self.heap.push(Entry {
                key,
                seq: self.seq,
                sub,
            });
        } else {
            self.queue.push_back(sub);
        }
    }

    fn pop(&mut self) -> Option<(Subfamily, f64)> {
        if self.optimising() {
            let e = self.heap.pop()?;
            let bound = if self.minimising() { -e.key } else { e.key };
            Some((e.sub, bound))
        } else {
            self.queue.pop_front().map(|s| (s, f64::NAN))
        }
    }

    pub fn accepted(&self) -> &[Subfamily] {
        &self.accepted
    }

    pub fn rejected(&self) -> &[Subfamily] {
        &self.rejected
    }

    /// Subfamilies that cannot improve on the incumbent.
    pub fn pruned(&self) -> &[Subfamily] {
        &self.pruned
    }

    pub fn pending(&self) -> Vec<Subfamily> {
        self.queue
            .iter()
            .cloned()
            .chain(self.heap.iter().map(|e| e.sub.clone()))
            .collect()
    }

    /// Best realisation so far (optimisation) or the witness (feasibility).
    pub fn incumbent(&self) -> Option<&(Realisation, f64)> {
        self.witness.as_ref()
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    fn done(&self) -> bool {
        (self.q.kind == QueryKind::Feasibility && self.witness.is_some())
            || (self.queue.is_empty() && self.heap.is_empty())
    }

    fn trace(
        &mut self,
        sub: &Subfamily,
        bounds: Option<(f64, f64)>,
        verdict: StepVerdict,
        split_hole: Option<HoleId>,
    ) {
        if self.opts.trace {
            self.stats.trace.push(TraceRecord::Cegar {
                size: sub.size(),
                lower: bounds.map(|b| b.0),
                upper: bounds.map(|b| b.1),
                verdict,
                split_hole,
            });
        }
    }

    fn value_of(&mut self, r: &Realisation) -> Result<f64, SynthError> {
        self.stats.checks += 1;
        Ok(check_with(&self.fam.chain_of(r), &self.q.spec, &self.opts.checker)?.value)
    }

    fn within_budget(&self, r: &Realisation) -> bool {
        self.q.within_budget(self.fam, r)
    }

    /// The subfamily has no member within budget.
    fn over_budget(&self, sub: &Subfamily) -> bool {
        match (self.q.budget, self.fam.cost_model()) {
            (Some(b), CostModel::OptionSum) => self.fam.cost_lower_bound(sub) > b,
            _ => false,
        }
    }

    /// Every member of the subfamily is within budget.
    fn affordable(&self, sub: &Subfamily) -> bool {
        match (self.q.budget, self.fam.cost_model()) {
            (None, _) => true,
            (Some(b), CostModel::OptionSum) => {
                let worst: u64 = (0..sub.hole_count())
                    .map(|h| {
                        sub.remaining(h)
                            .iter()
                            .map(|&o| self.fam.hole(h).costs[o])
                            .max()
                            .unwrap_or(0)
                    })
                    .sum();
                worst <= b
            }
            (Some(_), CostModel::Structural) => false,
        }
    }

    /// Min and max over the quotient of `sub`, with the schedulers.
    fn bounds(
        &mut self,
        sub: &Subfamily,
    ) -> Result<(Quotient, crate::model::Extremal, crate::model::Extremal), SynthError> {
        let quo = Quotient::build(self.fam, sub);
        let goal = self.q.spec.goal();
        let lo = mdp_extremal_with(quo.mdp(), goal, Optimum::Min, &self.opts.checker)?;
        let hi = mdp_extremal_with(quo.mdp(), goal, Optimum::Max, &self.opts.checker)?;
        self.stats.checks += 2;
        Ok((quo, lo, hi))
    }

    /// Performs one refinement step. Returns `false` once the run is over.
    pub fn step(&mut self) -> Result<bool, SynthError> {
        if self.done() {
            return Ok(false);
        }
        let Some((sub, bound)) = self.pop() else {
            return Ok(false);
        };
        self.stats.candidates += 1;
        self.stats.iterations += 1;
        if self.optimising() {
            self.optimise_step(sub, bound)?;
        } else {
            self.threshold_step(sub)?;
        }
        Ok(!self.done())
    }

    fn threshold_step(&mut self, sub: Subfamily) -> Result<(), SynthError> {
        if self.over_budget(&sub) {
            self.trace(&sub, None, StepVerdict::Budget, None);
            self.rejected.push(sub);
            return Ok(());
        }
        if let Some(r) = sub.as_realisation() {
            if !self.within_budget(&r) {
                self.trace(&sub, None, StepVerdict::Budget, None);
                self.rejected.push(sub);
                return Ok(());
            }
            let v = self.value_of(&r)?;
            let verdict = self.classify_member(r, v);
            self.trace(&sub, Some((v, v)), verdict, None);
            return Ok(());
        }
        let (quo, lo, hi) = self.bounds(&sub)?;
        let spec = &self.q.spec;
        let tol = self.opts.tolerance();
        let upper = spec.op().is_upper_bound();
        let (all_sat, all_unsat) = if upper {
            (spec.holds(hi.value, tol), !spec.holds(lo.value, tol))
        } else {
            (spec.holds(lo.value, tol), !spec.holds(hi.value, tol))
        };
        let b = Some((lo.value, hi.value));
        if all_sat {
            self.trace(&sub, b, StepVerdict::Accept, None);
            self.accept(sub)?;
            return Ok(());
        }
        if all_unsat {
            self.trace(&sub, b, StepVerdict::Reject, None);
            self.rejected.push(sub);
            return Ok(());
        }
        // the scheduler pushing towards violation
        let sched = if upper { &hi.scheduler } else { &lo.scheduler };
        match quo.consistency(&sub, sched)? {
            Consistency::Consistent(r) => {
                self.trace(&sub, b, StepVerdict::Split, None);
                for rest in sub.carve(&r) {
                    self.push(rest, f64::NAN);
                }
                let single = Subfamily::singleton(&r);
                if self.within_budget(&r) {
                    let v = self.value_of(&r)?;
                    self.classify_member(r, v);
                } else {
                    self.rejected.push(single);
                }
            }
            c => {
                let (a, rest) = split(&sub, &c)?;
                self.trace(&sub, b, StepVerdict::Split, Some(split_hole(&sub, &a)));
                self.push(a, f64::NAN);
                self.push(rest, f64::NAN);
            }
        }
        Ok(())
    }

    /// Files a within-budget member with known value.
    fn classify_member(&mut self, r: Realisation, v: f64) -> StepVerdict {
        let single = Subfamily::singleton(&r);
        if !self.q.spec.holds(v, self.opts.tolerance()) {
            self.rejected.push(single);
            return StepVerdict::Reject;
        }
        self.accepted.push(single);
        if self.q.kind == QueryKind::Feasibility {
            self.witness = Some((r, v));
            return StepVerdict::Witness;
        }
        StepVerdict::Accept
    }

    /// Files a subfamily whose members all satisfy the property, splitting
    /// off the members the budget excludes.
    fn accept(&mut self, sub: Subfamily) -> Result<(), SynthError> {
        if self.affordable(&sub) {
            if self.q.kind == QueryKind::Feasibility {
                let r = sub.first();
                let v = self.value_of(&r)?;
                self.witness = Some((r, v));
            }
            self.accepted.push(sub);
            return Ok(());
        }
        for r in self.fam.realisations(&sub) {
            let single = Subfamily::singleton(&r);
            if !self.within_budget(&r) {
                self.rejected.push(single);
                continue;
            }
            if self.q.kind == QueryKind::Feasibility && self.witness.is_none() {
                let v = self.value_of(&r)?;
                self.witness = Some((r, v));
            }
            self.accepted.push(single);
        }
        Ok(())
    }

    fn eps(&self) -> f64 {
        match self.q.kind {
            QueryKind::EpsOptimal(e) => e,
            _ => 0.0,
        }
    }

    /// No member of a subfamily bounded by `bound` can matter any more.
    fn prunable(&self, bound: f64) -> bool {
        let Some((_, v)) = self.witness else {
            return false;
        };
        if self.minimising() {
            v <= bound + 1e-9
        } else {
            v >= (1.0 - self.eps()) * bound - 1e-9
        }
    }

    fn offer(&mut self, r: Realisation, v: f64) {
        let better = match &self.witness {
            None => true,
            Some((_, w)) if self.minimising() => v < *w,
            Some((_, w)) => v > *w,
        };
        if better {
            self.witness = Some((r, v));
        }
    }

    fn optimise_step(&mut self, sub: Subfamily, bound: f64) -> Result<(), SynthError> {
        if self.prunable(bound) {
            self.trace(&sub, None, StepVerdict::Prune, None);
            self.pruned.push(sub);
            return Ok(());
        }
        if self.over_budget(&sub) {
            self.trace(&sub, None, StepVerdict::Budget, None);
            self.rejected.push(sub);
            return Ok(());
        }
        if let Some(r) = sub.as_realisation() {
            if !self.within_budget(&r) {
                self.trace(&sub, None, StepVerdict::Budget, None);
                self.rejected.push(sub);
                return Ok(());
            }
            let v = self.value_of(&r)?;
            self.offer(r, v);
            self.trace(&sub, Some((v, v)), StepVerdict::Incumbent, None);
            self.pruned.push(sub);
            return Ok(());
        }
        let (quo, lo, hi) = self.bounds(&sub)?;
        let b = Some((lo.value, hi.value));
        let (best, sched) = if self.minimising() {
            (lo.value, &lo.scheduler)
        } else {
            (hi.value, &hi.scheduler)
        };
        if self.prunable(best) {
            self.trace(&sub, b, StepVerdict::Prune, None);
            self.pruned.push(sub);
            return Ok(());
        }
        match quo.consistency(&sub, sched)? {
            Consistency::Consistent(r) if self.within_budget(&r) => {
                // r attains the subfamily's optimum
                let v = self.value_of(&r)?;
                self.offer(r, v);
                self.trace(&sub, b, StepVerdict::Incumbent, None);
                self.pruned.push(sub);
            }
            Consistency::Consistent(r) => {
                self.trace(&sub, b, StepVerdict::Budget, None);
                for rest in sub.carve(&r) {
                    self.push(rest, best);
                }
                self.rejected.push(Subfamily::singleton(&r));
            }
            c => {
                let (a, rest) = split(&sub, &c)?;
                self.trace(&sub, b, StepVerdict::Split, Some(split_hole(&sub, &a)));
                self.push(a, best);
                self.push(rest, best);
            }
        }
        Ok(())
    }

    pub fn into_outcome(mut self) -> Result<Outcome, SynthError> {
        let verdict = match self.q.kind {
            QueryKind::Partition => {
                let list = |subs: &[Subfamily]| {
                    let mut out: Vec<Realisation> =
                        subs.iter().flat_map(|s| self.fam.realisations(s)).collect();
                    out.sort();
                    out
                };
                Verdict::Partition {
                    accepted: list(&self.accepted),
                    rejected: list(&self.rejected),
                }
            }
            QueryKind::Feasibility => match self.witness.take() {
                Some((witness, value)) => Verdict::Feasible {
                    cost: self.fam.cost(&witness),
                    witness,
                    value,
                },
                None => Verdict::Unsatisfiable,
            },
            _ => match self.witness.take() {
                Some((witness, value)) => Verdict::Optimal {
                    cost: self.fam.cost(&witness),
                    witness,
                    value,
                },
                None => Verdict::Unsatisfiable,
            },
        };
        self.stats.wall_ms = self.start.elapsed().as_millis() as u64;
        Ok(Outcome {
            verdict,
            stats: self.stats,
        })
    }
}
