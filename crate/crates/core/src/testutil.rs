use crate::family::{Branch, Family, Hole, Realisation};

/// Five-state family with holes k2 ∈ {2,3} (successor of 0) and
/// k3 ∈ {2,4} (successor of 2 and 3).
pub fn toy_family() -> Family {
    let holes = vec![
        Hole::new("k2", vec!["2".into(), "3".into()]),
        Hole::new("k3", vec!["2".into(), "4".into()]),
    ];
    let transitions = vec![
        vec![Branch::fixed(0.5, 1), Branch::hole(0.5, 0, vec![2, 3])],
        vec![Branch::fixed(0.1, 0), Branch::fixed(0.9, 1)],
        vec![Branch::hole(1.0, 1, vec![2, 4])],
        vec![Branch::fixed(0.2, 3), Branch::hole(0.8, 1, vec![2, 4])],
        vec![Branch::fixed(1.0, 4)],
    ];
    Family::new(0, transitions, holes).unwrap()
}

/// r1..r4 of the toy family, indexed from 1.
pub fn toy_r(i: usize) -> Realisation {
    let (k2, k3) = match i {
        1 => (0, 0),
        2 => (0, 1),
        3 => (1, 0),
        4 => (1, 1),
        _ => panic!("toy family has four members"),
    };
    Realisation::new(vec![k2, k3])
}
