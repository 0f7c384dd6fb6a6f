use std::collections::BTreeMap;

use super::{Family, FamilyError, HoleId, Realisation, Subfamily};
use crate::model::{
    forward_reachable, induced_chain, Distribution, Mdp, MemorylessScheduler, StateId, StateSet,
};

/// Default cap on the number of members folded into an all-in-one MDP.
pub const ALL_IN_ONE_BOUND: u128 = 100_000;

/// One MDP whose initial choice picks a family member. State `(s, i)` of
/// member `i` has index `1 + i·|S| + s`; index 0 is the fresh initial state.
#[derive(Debug, Clone)]
pub struct AllInOne {
    mdp: Mdp,
    members: Vec<Realisation>,
    states: usize,
}

impl AllInOne {
    pub fn build(fam: &Family) -> Result<Self, FamilyError> {
        Self::build_bounded(fam, &fam.full(), ALL_IN_ONE_BOUND)
    }

    pub fn build_bounded(fam: &Family, sub: &Subfamily, bound: u128) -> Result<Self, FamilyError> {
        let members = fam.collect_realisations(sub, bound)?;
        let n = fam.len();
        let mut actions = Vec::with_capacity(1 + members.len() * n);
        actions.push(
            (0..members.len())
                .map(|i| Distribution::dirac(1 + i * n + fam.init()))
                .collect::<Vec<_>>(),
        );
        for r in &members {
            let base = actions.len();
            for s in 0..n {
                let d = fam.distribution_with(s, |h| r.option(h));
                let shifted = d.entries().iter().map(|&(t, p)| (base + t, p)).collect();
                actions.push(vec![Distribution::new(shifted)?]);
            }
        }
        if members.is_empty() {
            // no member: the initial state keeps a self-loop so the MDP stays well-formed
            actions[0].push(Distribution::dirac(0));
        }
        let mdp = Mdp::new(0, actions)?;
        Ok(AllInOne {
            mdp,
            members,
            states: n,
        })
    }

    pub fn mdp(&self) -> &Mdp {
        &self.mdp
    }

    /// Realisation selected by initial action `a`.
    pub fn members(&self) -> &[Realisation] {
        &self.members
    }

    pub fn state(&self, s: StateId, member: usize) -> StateId {
        1 + member * self.states + s
    }

    /// Copies of `goal` in every member.
    pub fn lift_goal(&self, goal: &[StateId]) -> Vec<StateId> {
        (0..self.members.len())
            .flat_map(|i| goal.iter().map(move |&g| self.state(g, i)))
            .collect()
    }
}

/// The quotient MDP of a subfamily: states of the family plus a fresh
/// initial state (index `|S|`). At each state, one action per combination of
/// remaining options of the holes the state's branches mention.
#[derive(Debug, Clone)]
pub struct Quotient {
    mdp: Mdp,
    choices: Vec<Vec<Vec<(HoleId, usize)>>>,
    states: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consistency {
    Consistent(Realisation),
    /// Holes with several chosen options, with the number of reachable
    /// states choosing each option.
    Inconsistent(BTreeMap<HoleId, BTreeMap<usize, usize>>),
}

impl Quotient {
    pub fn build(fam: &Family, sub: &Subfamily) -> Self {
        let n = fam.len();
        let mut actions = Vec::with_capacity(n + 1);
        let mut choices = Vec::with_capacity(n + 1);
        for s in 0..n {
            let hs = fam.holes_at(s);
            let mut acts = Vec::new();
            let mut metas = Vec::new();
            let mut pos = vec![0usize; hs.len()];
            'combos: loop {
                let combo: Vec<(HoleId, usize)> = hs
                    .iter()
                    .zip(&pos)
                    .map(|(&h, &i)| (h, sub.remaining(h)[i]))
                    .collect();
                let lookup = |h: HoleId| {
                    let i = hs.binary_search(&h).expect("hole of this state");
                    combo[i].1
                };
                acts.push(fam.distribution_with(s, lookup));
                metas.push(combo);
                let mut k = hs.len();
                loop {
                    if k == 0 {
                        break 'combos;
                    }
                    k -= 1;
                    pos[k] += 1;
                    if pos[k] < sub.remaining(hs[k]).len() {
                        break;
                    }
                    pos[k] = 0;
                }
            }
            actions.push(acts);
            choices.push(metas);
        }
        actions.push(vec![Distribution::dirac(fam.init())]);
        choices.push(vec![Vec::new()]);
        let mdp = Mdp::new(n, actions).expect("validated family yields a valid quotient");
        Quotient {
            mdp,
            choices,
            states: n,
        }
    }

    pub fn mdp(&self) -> &Mdp {
        &self.mdp
    }

    /// Hole options fixed by action `a` at state `s`.
    pub fn choice(&self, s: StateId, a: usize) -> &[(HoleId, usize)] {
        &self.choices[s][a]
    }

    pub fn family_states(&self) -> usize {
        self.states
    }

    /// States reachable from the initial state under `sched`.
    pub fn reachable_under(&self, sched: &MemorylessScheduler) -> Result<StateSet, FamilyError> {
        let mc = induced_chain(&self.mdp, sched)?;
        Ok(forward_reachable(&mc))
    }

    /// Per-hole option usage of `sched` over `states`.
    pub fn option_usage(
        &self,
        sched: &MemorylessScheduler,
        states: &StateSet,
    ) -> BTreeMap<HoleId, BTreeMap<usize, usize>> {
        let mut usage: BTreeMap<HoleId, BTreeMap<usize, usize>> = BTreeMap::new();
        for &s in states {
            for &(h, o) in self.choice(s, sched.choice(s)) {
                *usage.entry(h).or_default().entry(o).or_default() += 1;
            }
        }
        usage
    }

    /// Whether `sched` behaves like a single member of `sub` on the states
    /// it reaches. Holes it never consults take their first remaining option.
    pub fn consistency(
        &self,
        sub: &Subfamily,
        sched: &MemorylessScheduler,
    ) -> Result<Consistency, FamilyError> {
        let reach = self.reachable_under(sched)?;
        Ok(self.consistency_over(sub, sched, &reach))
    }

    /// Consistency of `sched` restricted to `states`.
    pub fn consistency_over(
        &self,
        sub: &Subfamily,
        sched: &MemorylessScheduler,
        states: &StateSet,
    ) -> Consistency {
        let usage = self.option_usage(sched, states);
        let conflicts: BTreeMap<HoleId, BTreeMap<usize, usize>> = usage
            .iter()
            .filter(|(_, opts)| opts.len() > 1)
            .map(|(&h, opts)| (h, opts.clone()))
            .collect();
        if !conflicts.is_empty() {
            return Consistency::Inconsistent(conflicts);
        }
        let options = (0..sub.hole_count())
            .map(|h| match usage.get(&h) {
                Some(opts) => *opts.keys().next().expect("nonempty usage"),
                None => sub.remaining(h)[0],
            })
            .collect();
        Consistency::Consistent(Realisation::new(options))
    }
}
