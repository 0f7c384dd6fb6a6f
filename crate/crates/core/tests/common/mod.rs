#![allow(dead_code)]

use chainsynth::family::{Family, Realisation};
use chainsynth::model::{check_with, CheckerConfig, CmpOp, Specification};

pub fn sketch_path(name: &str) -> String {
    format!("{}/sketches/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn toy() -> Family {
    let text = std::fs::read_to_string(sketch_path("toy.sk")).unwrap();
    chainsynth::sketch::load(&text).unwrap()
}

/// Realisation of the toy sketch by option labels.
pub fn toy_r(k2: u32, k3: u32) -> Realisation {
    toy()
        .parse_realisation(&format!("k2={k2},k3={k3}"))
        .unwrap()
}

/// Value of `goal` in `D_r`, computed from scratch.
pub fn direct_value(fam: &Family, r: &Realisation, goal: &[usize]) -> f64 {
    let spec = Specification::new(goal.to_vec(), CmpOp::Ge, 0.0).unwrap();
    check_with(&fam.realise(r).unwrap(), &spec, &CheckerConfig::default())
        .unwrap()
        .value
}
