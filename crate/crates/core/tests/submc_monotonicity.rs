//! Restricting a chain to a state set never increases reachability.

use std::collections::BTreeSet;

use chainsynth::bench::{random_family, RandomShape};
use chainsynth::model::{reach_probability, sub_mc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn sub_chains_underapproximate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let shape = RandomShape {
        max_states: 30,
        ..RandomShape::default()
    };
    for _ in 0..1000 {
        let fam = random_family(&mut rng, &shape);
        let r = chainsynth::family::Realisation::new(
            fam.holes()
                .iter()
                .map(|h| rng.gen_range(0..h.len()))
                .collect(),
        );
        let mc = fam.realise(&r).unwrap();
        let n = mc.len();
        let keep = rng.gen_range(0.0..1.0);
        let mut c: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(keep)).collect();
        c.insert(mc.init());
        let goal: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.2)).collect();
        let goal = if goal.is_empty() { vec![n - 1] } else { goal };
        let full = reach_probability(&mc, &goal).unwrap();
        let sub = reach_probability(&sub_mc(&mc, &c).unwrap(), &goal).unwrap();
        for s in 0..n {
            assert!(
                sub[s] <= full[s] + 1e-7,
                "state {s}: {} > {}",
                sub[s],
                full[s]
            );
        }
        // the whole state set changes nothing
        let all: BTreeSet<usize> = (0..n).collect();
        let same = reach_probability(&sub_mc(&mc, &all).unwrap(), &goal).unwrap();
        assert!((same[mc.init()] - full[mc.init()]).abs() < 1e-9);
    }
}
