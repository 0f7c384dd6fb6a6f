//! Candidate generator for CEGIS: a small DPLL solver over hole domains.
//!
//! Every hole takes exactly one option, so assignments are represented by
//! per-hole domains instead of boolean atoms. A clause is a disjunction of
//! parts `h ∈ A`; a part is false once the domain of `h` misses `A`, and a
//! clause with a single non-false part narrows that hole's domain. Two parts
//! of every clause are watched.

use crate::family::{Family, Formula, HoleId, Realisation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseKind {
    Constraint,
    /// Members matching the negated clause violate the specification.
    Reject,
    /// Members matching the negated clause satisfy the specification.
    Accept,
}

/// `∨ (h ∈ allowed)`, at most one part per hole.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub parts: Vec<(HoleId, Vec<usize>)>,
    pub kind: ClauseKind,
}

impl Clause {
    /// Excludes every realisation that picks an option of `cube[h]` for
    /// each listed hole.
    pub fn blocking(fam: &Family, cube: &[(HoleId, Vec<usize>)], kind: ClauseKind) -> Self {
        let parts = cube
            .iter()
            .map(|(h, opts)| {
                let rest = (0..fam.hole(*h).len())
                    .filter(|o| !opts.contains(o))
                    .collect();
                (*h, rest)
            })
            .collect();
        Clause { parts, kind }
    }

    pub fn admits(&self, r: &Realisation) -> bool {
        self.parts.iter().any(|(h, a)| a.contains(&r.option(*h)))
    }
}

struct Stored {
    parts: Vec<(HoleId, Vec<bool>)>,
    watch: [usize; 2],
}

type Domains = Vec<Vec<bool>>;

pub struct AssignmentSpace {
    counts: Vec<usize>,
    clauses: Vec<Clause>,
    stored: Vec<Stored>,
    watches: Vec<Vec<usize>>,
    units: Vec<(HoleId, Vec<bool>)>,
    /// Constraint conjuncts that are not clauses, checked on partial
    /// assignments.
    formulas: Vec<Formula>,
    refuted_at: Vec<Vec<u64>>,
    clock: u64,
    budget: Option<(Vec<Vec<u64>>, u64)>,
    empty: bool,
}

impl AssignmentSpace {
    pub fn new(fam: &Family) -> Self {
        let counts: Vec<usize> = fam.holes().iter().map(|h| h.len()).collect();
        let mut space = AssignmentSpace {
            refuted_at: counts.iter().map(|&n| vec![0; n]).collect(),
            watches: vec![Vec::new(); counts.len()],
            counts,
            clauses: Vec::new(),
            stored: Vec::new(),
            units: Vec::new(),
            formulas: Vec::new(),
            clock: 0,
            budget: None,
            empty: false,
        };
        let mut conjuncts = Vec::new();
        for c in fam.constraints() {
            c.conjuncts(&mut conjuncts);
        }
        for c in conjuncts {
            match c.to_clause() {
                Some(lits) => {
                    let mut parts: Vec<(HoleId, Vec<usize>)> = Vec::new();
                    for l in lits {
                        let opts: Vec<usize> = if l.positive {
                            vec![l.option]
                        } else {
                            (0..space.counts[l.hole])
                                .filter(|&o| o != l.option)
                                .collect()
                        };
                        match parts.iter_mut().find(|(h, _)| *h == l.hole) {
                            Some((_, a)) => {
                                a.extend(opts);
                                a.sort_unstable();
                                a.dedup();
                            }
                            None => parts.push((l.hole, opts)),
                        }
                    }
                    space.learn(Clause {
                        parts,
                        kind: ClauseKind::Constraint,
                    });
                }
                None => space.formulas.push(c),
            }
        }
        space
    }

    /// Rejects partial assignments whose cheapest completion exceeds `bound`.
    pub fn set_option_budget(&mut self, fam: &Family, bound: u64) {
        let costs = fam.holes().iter().map(|h| h.costs.clone()).collect();
        self.budget = Some((costs, bound));
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn learn(&mut self, clause: Clause) {
        let mut parts = Vec::new();
        for (h, allowed) in &clause.parts {
            let mut mask = vec![false; self.counts[*h]];
            for &o in allowed {
                mask[o] = true;
            }
            if mask.iter().all(|&b| b) {
                // always satisfied
                self.clauses.push(clause);
                return;
            }
            if mask.iter().any(|&b| b) {
                parts.push((*h, mask));
            }
        }
        match parts.len() {
            0 => self.empty = true,
            1 => self.units.push(parts.pop().expect("one part")),
            _ => {
                let idx = self.stored.len();
                self.watches[parts[0].0].push(idx);
                self.watches[parts[1].0].push(idx);
                self.stored.push(Stored {
                    parts,
                    watch: [0, 1],
                });
            }
        }
        self.clauses.push(clause);
    }

    /// Blocks the single realisation `r`.
    pub fn block(&mut self, r: &Realisation, kind: ClauseKind) {
        let cube: Vec<(HoleId, Vec<usize>)> = r
            .options()
            .iter()
            .enumerate()
            .map(|(h, &o)| (h, vec![o]))
            .collect();
        let parts = cube
            .iter()
            .map(|(h, opts)| {
                (
                    *h,
                    (0..self.counts[*h]).filter(|o| !opts.contains(o)).collect(),
                )
            })
            .collect();
        self.learn(Clause { parts, kind });
    }

    /// Records that option `o` of `h` took part in a refutation.
    pub fn note_refuted(&mut self, pairs: impl IntoIterator<Item = (HoleId, usize)>) {
        self.clock += 1;
        for (h, o) in pairs {
            self.refuted_at[h][o] = self.clock;
        }
    }

    /// A total assignment satisfying every clause and constraint, found by
    /// branching on the lowest unassigned hole and trying its
    /// least-recently-refuted option first.
    pub fn next_candidate(&mut self) -> Option<Realisation> {
        if self.empty {
            return None;
        }
        let mut dom: Domains = self.counts.iter().map(|&n| vec![true; n]).collect();
        let mut queue = Vec::new();
        for (h, mask) in &self.units {
            let mut changed = false;
            for (o, keep) in mask.iter().enumerate() {
                if !keep && dom[*h][o] {
                    dom[*h][o] = false;
                    changed = true;
                }
            }
            if changed {
                if !dom[*h].iter().any(|&b| b) {
                    return None;
                }
                queue.push(*h);
            }
        }
        if !self.propagate(&mut dom, queue) {
            return None;
        }
        self.search(dom)
    }

    fn search(&mut self, dom: Domains) -> Option<Realisation> {
        let Some(h) = (0..dom.len()).find(|&h| dom[h].iter().filter(|&&b| b).count() > 1) else {
            let options: Vec<usize> = dom
                .iter()
                .map(|d| d.iter().position(|&b| b).expect("nonempty domain"))
                .collect();
            let r = Realisation::new(options);
            debug_assert!(self.formulas.iter().all(|f| f.eval(r.options())));
            return Some(r);
        };
        let mut order: Vec<usize> = (0..dom[h].len()).filter(|&o| dom[h][o]).collect();
        order.sort_by_key(|&o| (self.refuted_at[h][o], o));
        for o in order {
            let mut next = dom.clone();
            next[h]
                .iter_mut()
                .enumerate()
                .for_each(|(i, b)| *b = i == o);
            if self.propagate(&mut next, vec![h]) {
                if let Some(r) = self.search(next) {
                    return Some(r);
                }
            }
        }
        None
    }

    fn propagate(&mut self, dom: &mut Domains, mut queue: Vec<HoleId>) -> bool {
        while let Some(h) = queue.pop() {
            let list = std::mem::take(&mut self.watches[h]);
            let mut keep = Vec::with_capacity(list.len());
            let mut conflict = false;
            for (i, &ci) in list.iter().enumerate() {
                if conflict {
                    keep.extend_from_slice(&list[i..]);
                    break;
                }
                let c = &mut self.stored[ci];
                let w = if c.parts[c.watch[0]].0 == h { 0 } else { 1 };
                let (wh, ref wm) = c.parts[c.watch[w]];
                if !part_false(&dom[wh], wm) {
                    keep.push(ci);
                    continue;
                }
                let other = c.watch[1 - w];
                let replacement = (0..c.parts.len()).find(|&k| {
                    k != c.watch[0]
                        && k != c.watch[1]
                        && !part_false(&dom[c.parts[k].0], &c.parts[k].1)
                });
                if let Some(k) = replacement {
                    c.watch[w] = k;
                    let nh = c.parts[k].0;
                    self.watches[nh].push(ci);
                    continue;
                }
                keep.push(ci);
                let (oh, ref om) = c.parts[other];
                if part_false(&dom[oh], om) {
                    conflict = true;
                    continue;
                }
                let mut changed = false;
                for (o, allowed) in om.iter().enumerate() {
                    if !allowed && dom[oh][o] {
                        dom[oh][o] = false;
                        changed = true;
                    }
                }
                if changed {
                    queue.push(oh);
                }
            }
            self.watches[h] = keep;
            if conflict {
                return false;
            }
        }
        self.consistent_partial(dom)
    }

    fn consistent_partial(&self, dom: &Domains) -> bool {
        if let Some((costs, bound)) = &self.budget {
            let least: u64 = dom
                .iter()
                .enumerate()
                .map(|(h, d)| {
                    (0..d.len())
                        .filter(|&o| d[o])
                        .map(|o| costs[h][o])
                        .min()
                        .unwrap_or(0)
                })
                .sum();
            if least > *bound {
                return false;
            }
        }
        if self.formulas.is_empty() {
            return true;
        }
        let partial: Vec<Option<usize>> = dom
            .iter()
            .map(|d| {
                let mut it = (0..d.len()).filter(|&o| d[o]);
                match (it.next(), it.next()) {
                    (Some(o), None) => Some(o),
                    _ => None,
                }
            })
            .collect();
        self.formulas
            .iter()
            .all(|f| f.eval_partial(&partial) != Some(false))
    }
}

fn part_false(dom: &[bool], allowed: &[bool]) -> bool {
    !dom.iter().zip(allowed).any(|(&d, &a)| d && a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{toy_family, toy_r};

    fn all(space: &mut AssignmentSpace) -> Vec<Realisation> {
        let mut out = Vec::new();
        while let Some(r) = space.next_candidate() {
            space.block(&r, ClauseKind::Reject);
            out.push(r);
        }
        out
    }

    #[test]
    fn fresh_space_starts_lexicographically() {
        let fam = toy_family();
        let mut space = AssignmentSpace::new(&fam);
        assert_eq!(space.next_candidate(), Some(toy_r(1)));
        assert_eq!(all(&mut space).len(), 4);
        assert_eq!(space.next_candidate(), None);
    }

    #[test]
    fn unit_clause_forces_other_option() {
        let fam = toy_family();
        let mut space = AssignmentSpace::new(&fam);
        space.learn(Clause::blocking(&fam, &[(0, vec![0])], ClauseKind::Reject));
        assert_eq!(space.next_candidate().unwrap().option(0), 1);
    }

    #[test]
    fn refuted_options_go_last() {
        let fam = toy_family();
        let mut space = AssignmentSpace::new(&fam);
        space.note_refuted([(1, 0)]);
        assert_eq!(space.next_candidate(), Some(toy_r(2)));
    }

    #[test]
    fn enumerates_each_member_once_under_cubes() {
        // 3 holes x 3 options, learn a few cubes, the rest comes out once each
        let fam = crate::family::Family::new(
            0,
            vec![vec![crate::family::Branch::hole(1.0, 0, vec![0, 0, 0])]],
            vec![
                crate::family::Hole::new("a", vec!["0".into(), "1".into(), "2".into()]),
                crate::family::Hole::new("b", vec!["0".into(), "1".into(), "2".into()]),
                crate::family::Hole::new("c", vec!["0".into(), "1".into(), "2".into()]),
            ],
        )
        .unwrap();
        let mut space = AssignmentSpace::new(&fam);
        let cubes = [
            vec![(0, vec![1])],
            vec![(1, vec![0, 2]), (2, vec![1])],
            vec![(0, vec![2]), (2, vec![0])],
        ];
        for cube in &cubes {
            space.learn(Clause::blocking(&fam, cube, ClauseKind::Reject));
        }
        let got = all(&mut space);
        let want: Vec<Realisation> = fam
            .realisations(&fam.full())
            .filter(|r| space.clauses()[..3].iter().all(|c| c.admits(r)))
            .collect();
        let mut sorted = got.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), got.len());
        assert_eq!(sorted, want);
    }

    #[test]
    fn constraints_and_budget_restrict_candidates() {
        let fam = toy_family()
            .with_constraints(vec![Formula::atom(0, 0).implies(Formula::atom(1, 1))])
            .unwrap();
        let mut space = AssignmentSpace::new(&fam);
        assert_eq!(all(&mut space), vec![toy_r(2), toy_r(3), toy_r(4)]);

        let fam = toy_family()
            .with_constraints(vec![Formula::Or(vec![
                Formula::And(vec![Formula::atom(0, 0), Formula::atom(1, 0)]),
                Formula::And(vec![Formula::atom(0, 1), Formula::atom(1, 1)]),
            ])])
            .unwrap();
        let mut space = AssignmentSpace::new(&fam);
        assert_eq!(all(&mut space), vec![toy_r(1), toy_r(4)]);

        let mut holes = toy_family().holes().to_vec();
        holes[0] = holes[0].clone().with_costs(vec![0, 5]);
        holes[1] = holes[1].clone().with_costs(vec![1, 2]);
        let fam = crate::family::Family::new(
            toy_family().init(),
            (0..5).map(|s| toy_family().branches(s).to_vec()).collect(),
            holes,
        )
        .unwrap();
        let mut space = AssignmentSpace::new(&fam);
        space.set_option_budget(&fam, 2);
        assert_eq!(all(&mut space), vec![toy_r(1), toy_r(2)]);
    }

    #[test]
    fn empty_clause_exhausts() {
        let fam = toy_family();
        let mut space = AssignmentSpace::new(&fam);
        space.learn(Clause {
            parts: vec![],
            kind: ClauseKind::Reject,
        });
        assert_eq!(space.next_candidate(), None);
    }
}
