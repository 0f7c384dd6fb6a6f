use std::collections::{BTreeMap, VecDeque};

use super::*;
use crate::model::{induced_chain, mdp_extremal, reach_probability, MemorylessScheduler, Optimum};
use crate::testutil::{toy_family, toy_r};

fn chain_entries(mc: &MarkovChain) -> Vec<Vec<(StateId, f64)>> {
    (0..mc.len())
        .map(|s| mc.distribution(s).entries().to_vec())
        .collect()
}

#[test]
fn realise_r1_matches_hand_chain() {
    let mc = toy_family().realise(&toy_r(1)).unwrap();
    assert_eq!(
        chain_entries(&mc),
        vec![
            vec![(1, 0.5), (2, 0.5)],
            vec![(0, 0.1), (1, 0.9)],
            vec![(2, 1.0)],
            vec![(2, 0.8), (3, 0.2)],
            vec![(4, 1.0)],
        ]
    );
}

#[test]
fn realise_r4_leaves_state_2_unreachable() {
    let mc = toy_family().realise(&toy_r(4)).unwrap();
    assert_eq!(mc.len(), 5);
    let reach = crate::model::forward_reachable(&mc);
    assert!(!reach.contains(&2));
    assert_eq!(reach, [0, 1, 3, 4].into());
}

#[test]
fn realise_rejects_bad_assignments() {
    let fam = toy_family();
    assert!(matches!(
        fam.realise(&Realisation::new(vec![0])),
        Err(FamilyError::IncompleteAssignment { .. })
    ));
    assert!(matches!(
        fam.realise(&Realisation::new(vec![0, 2])),
        Err(FamilyError::OptionOutOfRange { .. })
    ));
    let fam = fam
        .with_constraints(vec![Formula::atom(0, 0).negate()])
        .unwrap();
    assert!(matches!(
        fam.realise(&toy_r(1)),
        Err(FamilyError::ConstraintViolation(_))
    ));
}

#[test]
fn zero_hole_family_has_one_member() {
    let fam = Family::new(0, vec![vec![Branch::fixed(1.0, 0)]], vec![]).unwrap();
    let all: Vec<_> = fam.realisations(&fam.full()).collect();
    assert_eq!(all, vec![Realisation::new(vec![])]);
    assert_eq!(fam.realise(&all[0]).unwrap().len(), 1);
}

#[test]
fn enumeration_orders_and_filters() {
    let fam = toy_family();
    let all: Vec<_> = fam.realisations(&fam.full()).collect();
    assert_eq!(all, (1..=4).map(toy_r).collect::<Vec<_>>());

    let pinned = fam.full().restrict(0, vec![0]).restrict(1, vec![1]);
    assert_eq!(
        fam.realisations(&pinned).collect::<Vec<_>>(),
        vec![toy_r(2)]
    );

    let forbid = Formula::And(vec![Formula::atom(0, 0), Formula::atom(1, 0)]).negate();
    let fam = fam.with_constraints(vec![forbid.clone()]).unwrap();
    let kept: Vec<_> = fam.realisations(&fam.full()).collect();
    let brute: Vec<_> = (1..=4)
        .map(toy_r)
        .filter(|r| !(r.option(0) == 0 && r.option(1) == 0))
        .collect();
    assert_eq!(kept, brute);
    assert_eq!(kept.len(), 3);
}

#[test]
fn structural_costs() {
    let fam = toy_family();
    let costs: Vec<u64> = (1..=4).map(|i| fam.cost(&toy_r(i))).collect();
    assert_eq!(costs, vec![8, 10, 11, 11]);
}

/// Reachable states plus outgoing entries, by a separate BFS on the family
/// tables.
fn bfs_cost(fam: &Family, r: &Realisation) -> u64 {
    let mut seen = vec![false; fam.len()];
    seen[fam.init()] = true;
    let mut queue = VecDeque::from([fam.init()]);
    let mut cost = 0;
    while let Some(s) = queue.pop_front() {
        let mut succ: Vec<StateId> = fam
            .branches(s)
            .iter()
            .map(|b| b.target.resolve(fam, |h| r.option(h)))
            .collect();
        succ.sort_unstable();
        succ.dedup();
        cost += 1 + succ.len() as u64;
        for t in succ {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    cost
}

#[test]
fn structural_cost_matches_bfs() {
    let fam = toy_family();
    for r in fam.realisations(&fam.full()) {
        assert_eq!(fam.structural_cost(&r), bfs_cost(&fam, &r));
    }
}

#[test]
fn option_sum_costs() {
    let mut fam = toy_family().with_cost_model(CostModel::OptionSum);
    for r in fam.realisations(&fam.full()) {
        assert_eq!(fam.cost(&r), 0);
    }
    let holes = vec![
        fam.hole(0).clone().with_costs(vec![1, 2]),
        fam.hole(1).clone().with_costs(vec![0, 5]),
    ];
    fam = Family::new(0, fam.transitions.clone(), holes)
        .unwrap()
        .with_cost_model(CostModel::OptionSum);
    assert_eq!(fam.cost(&toy_r(2)), 6);
    assert_eq!(fam.cost_lower_bound(&fam.full()), 1);
}

#[test]
fn validation_errors() {
    let holes = || vec![Hole::new("h", vec!["a".into(), "b".into()])];
    assert!(matches!(
        Family::new(0, vec![vec![Branch::hole(1.0, 0, vec![0])]], holes()),
        Err(FamilyError::TableSize { .. })
    ));
    assert!(matches!(
        Family::new(0, vec![vec![Branch::fixed(0.5, 0)]], holes()),
        Err(FamilyError::BadSum { .. })
    ));
    assert!(matches!(
        Family::new(0, vec![vec![Branch::fixed(1.0, 3)]], holes()),
        Err(FamilyError::TargetOutOfRange { .. })
    ));
    let dup = vec![Hole::new("h", vec!["a".into(), "a".into()])];
    assert!(matches!(
        Family::new(0, vec![vec![Branch::fixed(1.0, 0)]], dup),
        Err(FamilyError::DuplicateOption { .. })
    ));
}

#[test]
fn all_in_one_structure_and_extremes() {
    let fam = toy_family();
    let aio = AllInOne::build(&fam).unwrap();
    assert_eq!(aio.mdp().len(), 1 + 5 * 4);
    assert_eq!(aio.mdp().actions(0).len(), 4);
    let goal = aio.lift_goal(&[4]);
    let max = mdp_extremal(aio.mdp(), &goal, Optimum::Max).unwrap();
    let min = mdp_extremal(aio.mdp(), &goal, Optimum::Min).unwrap();
    assert_eq!(max.value, 1.0);
    assert_eq!(min.value, 0.0);
}

#[test]
fn all_in_one_fragments_are_exact() {
    let fam = toy_family();
    let aio = AllInOne::build(&fam).unwrap();
    let sched = MemorylessScheduler::first_actions(aio.mdp().len());
    let mc = induced_chain(aio.mdp(), &sched).unwrap();
    for goal in [vec![2], vec![4], vec![1, 3]] {
        let lifted = aio.lift_goal(&goal);
        let values = reach_probability(&mc, &lifted).unwrap();
        for (i, r) in aio.members().iter().enumerate() {
            let own = reach_probability(&fam.realise(r).unwrap(), &goal).unwrap();
            assert_eq!(values[aio.state(fam.init(), i)], own[fam.init()]);
        }
    }
}

#[test]
fn zero_hole_all_in_one() {
    let fam = Family::new(
        0,
        vec![
            vec![Branch::fixed(0.5, 0), Branch::fixed(0.5, 1)],
            vec![Branch::fixed(1.0, 1)],
        ],
        vec![],
    )
    .unwrap();
    let aio = AllInOne::build(&fam).unwrap();
    assert_eq!(aio.mdp().actions(0).len(), 1);
    let v = mdp_extremal(aio.mdp(), &aio.lift_goal(&[1]), Optimum::Max).unwrap();
    assert!((v.value - 1.0).abs() < 1e-12);
}

/// Subfamily of r1 and r2 (k2 pinned to its first option).
fn r1_r2(fam: &Family) -> Subfamily {
    fam.full().restrict(0, vec![0])
}

#[test]
fn quotient_action_counts() {
    let fam = toy_family();
    let q = Quotient::build(&fam, &r1_r2(&fam));
    let counts: Vec<usize> = (0..=5).map(|s| q.mdp().actions(s).len()).collect();
    assert_eq!(counts, vec![1, 1, 2, 2, 1, 1]);
    assert_eq!(q.mdp().init(), 5);
    assert_eq!(q.choice(2, 1), &[(1, 1)]);
}

#[test]
fn quotient_extremes_on_r1_r2() {
    let fam = toy_family();
    let q = Quotient::build(&fam, &r1_r2(&fam));
    let max = mdp_extremal(q.mdp(), &[4], Optimum::Max).unwrap();
    assert!((max.value - 1.0).abs() < 1e-12);
    assert_eq!(q.choice(2, max.scheduler.choice(2)), &[(1, 1)]);
    let min = mdp_extremal(q.mdp(), &[4], Optimum::Min).unwrap();
    assert_eq!(min.value, 0.0);
    assert_eq!(q.choice(2, min.scheduler.choice(2)), &[(1, 0)]);
}

#[test]
fn quotient_of_singleton_is_the_chain() {
    let fam = toy_family();
    for i in 1..=4 {
        let r = toy_r(i);
        let q = Quotient::build(&fam, &Subfamily::singleton(&r));
        assert!((0..5).all(|s| q.mdp().actions(s).len() == 1));
        let mc =
            induced_chain(q.mdp(), &MemorylessScheduler::first_actions(q.mdp().len())).unwrap();
        let d = fam.realise(&r).unwrap();
        for s in 0..5 {
            assert_eq!(mc.distribution(s), d.distribution(s));
        }
    }
}

#[test]
fn quotient_max_bounds_family() {
    let fam = toy_family();
    let q = Quotient::build(&fam, &fam.full());
    let max = mdp_extremal(q.mdp(), &[4], Optimum::Max).unwrap();
    let best = fam
        .realisations(&fam.full())
        .map(|r| reach_probability(&fam.realise(&r).unwrap(), &[4]).unwrap()[0])
        .fold(0.0, f64::max);
    assert_eq!(best, 1.0);
    assert!(max.value >= best - 1e-12);
    if let Consistency::Consistent(r) = q.consistency(&fam.full(), &max.scheduler).unwrap() {
        let v = reach_probability(&fam.realise(&r).unwrap(), &[4]).unwrap()[0];
        assert!((v - 1.0).abs() < 1e-9);
    }
}

#[test]
fn mixed_scheduler_is_inconsistent() {
    let fam = toy_family();
    let sub = r1_r2(&fam);
    let q = Quotient::build(&fam, &sub);
    // a_{k3=2} at state 2, a_{k3=4} at state 3
    let sched = MemorylessScheduler::new(vec![0, 0, 0, 1, 0, 0]);
    let all: StateSet = (0..=5).collect();
    let expected: BTreeMap<HoleId, BTreeMap<usize, usize>> = [(1, [(0, 1), (1, 1)].into())].into();
    assert_eq!(
        q.consistency_over(&sub, &sched, &all),
        Consistency::Inconsistent(expected)
    );
    // the induced chain matches none of the four members
    let mc = induced_chain(q.mdp(), &sched).unwrap();
    for i in 1..=4 {
        let d = fam.realise(&toy_r(i)).unwrap();
        assert!((0..5).any(|s| mc.distribution(s) != d.distribution(s)));
    }
}

#[test]
fn uniform_scheduler_is_consistent() {
    let fam = toy_family();
    let q = Quotient::build(&fam, &fam.full());
    // k2=2 at 0, k3=4 at 2 and 3
    let sched = MemorylessScheduler::new(vec![0, 0, 1, 1, 0, 0]);
    assert_eq!(
        q.consistency(&fam.full(), &sched).unwrap(),
        Consistency::Consistent(toy_r(2))
    );
}

#[test]
fn json_round_trip_is_byte_exact() {
    let fam = toy_family()
        .with_constraints(vec![Formula::atom(0, 1).implies(Formula::atom(1, 1))])
        .unwrap()
        .with_cost_model(CostModel::OptionSum);
    let text = fam.to_json();
    let back = Family::from_json(&text).unwrap();
    assert_eq!(back, fam);
    assert_eq!(back.to_json(), text);
}

#[test]
fn json_rejects_malformed() {
    let missing = r#"{"states":2,"init":0,"holes":[],"transitions":[{"from":0,"branches":[{"p":1.0,"fixed":1}]}]}"#;
    assert!(matches!(
        Family::from_json(missing),
        Err(FamilyError::Json(_))
    ));
    let both = r#"{"states":1,"init":0,"holes":[],"transitions":[{"from":0,"branches":[{"p":1.0,"fixed":0,"table":[0]}]}]}"#;
    assert!(matches!(Family::from_json(both), Err(FamilyError::Json(_))));
}

#[test]
fn decomposable_constraints_fold_into_subfamily() {
    let fam = toy_family()
        .with_constraints(vec![Formula::And(vec![
            Formula::atom(0, 1),
            Formula::atom(1, 0).negate(),
        ])])
        .unwrap();
    let sub = fam.decompose_constraints().unwrap().unwrap();
    assert_eq!(sub.as_realisation(), Some(toy_r(4)));
    let coupled = toy_family()
        .with_constraints(vec![Formula::atom(0, 1).implies(Formula::atom(1, 1))])
        .unwrap();
    assert!(matches!(
        coupled.decompose_constraints(),
        Err(FamilyError::NonDecomposable(_))
    ));
}

#[test]
fn subfamily_carve_partitions() {
    let fam = Family::new(
        0,
        vec![vec![Branch::fixed(1.0, 0)]],
        vec![
            Hole::new("a", vec!["0".into(), "1".into(), "2".into()]),
            Hole::new("b", vec!["0".into(), "1".into()]),
        ],
    )
    .unwrap();
    let full = fam.full();
    let r = Realisation::new(vec![1, 0]);
    let parts = full.carve(&r);
    let mut members: Vec<Realisation> = parts
        .iter()
        .flat_map(|p| fam.realisations(p).collect::<Vec<_>>())
        .collect();
    members.push(r);
    members.sort();
    assert_eq!(members, fam.realisations(&full).collect::<Vec<_>>());
}

#[test]
fn assignments_parse() {
    let fam = toy_family();
    assert_eq!(fam.parse_realisation("k2=3,k3=4").unwrap(), toy_r(4));
    assert_eq!(fam.parse_realisation("@k2@=2, @k3@=2").unwrap(), toy_r(1));
    assert!(matches!(
        fam.parse_realisation("k2=2"),
        Err(FamilyError::IncompleteAssignment { .. })
    ));
    assert!(matches!(
        fam.parse_realisation("k2=5,k3=2"),
        Err(FamilyError::UnknownOption { .. })
    ));
    assert_eq!(fam.describe(&toy_r(2)), "k2=2, k3=4");
}
