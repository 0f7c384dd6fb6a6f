//! Golden transcripts of the command-line tool: exit codes, text and JSON.

mod common;

use std::process::Command;

use serde_json::{json, Value};

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Run {
    let o = Command::new(env!("CARGO_BIN_EXE_chainsynth"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap();
    Run {
        code: o.status.code().unwrap(),
        out: String::from_utf8(o.stdout).unwrap(),
        err: String::from_utf8(o.stderr).unwrap(),
    }
}

/// Parses JSON output with the timing field zeroed.
fn stable(out: &str) -> Value {
    let mut v: Value = serde_json::from_str(out).unwrap();
    v["stats"]["wall_ms"] = json!(0);
    v
}

#[test]
fn check_unreachable_goal() {
    let r = run(&[
        "check",
        "--input",
        "sketches/toy.sk",
        "--assign",
        "k2=2,k3=2",
        "--spec",
        "P>=0.1 [F s=4]",
    ]);
    assert_eq!(r.code, 1);
    assert_eq!(r.out, "realisation k2=2, k3=2\nvalue 0\nverdict false\n");
}

#[test]
fn check_holds() {
    let r = run(&[
        "check",
        "--input",
        "sketches/toy.sk",
        "--assign",
        "k2=3,k3=4",
        "--spec",
        "P>=0.1 [F s=4]",
        "--json",
    ]);
    assert_eq!(r.code, 0);
    assert_eq!(
        serde_json::from_str::<Value>(&r.out).unwrap(),
        json!({
            "holds": true,
            "realisation": {"k2": "3", "k3": "4"},
            "spec": "P>=0.1 [F s=4]",
            "value": 1.0,
        })
    );
}

#[test]
fn check_without_holes() {
    let r = run(&[
        "check",
        "--input",
        "tests/data/noholes.sk",
        "--spec",
        "P>=0 [F c=2]",
    ]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out, "realisation (no holes)\nvalue 0.5\nverdict true\n");
}

#[test]
fn check_errors() {
    for args in [
        &[
            "check",
            "--input",
            "sketches/toy.sk",
            "--assign",
            "k2=2",
            "--spec",
            "P>=0.1 [F s=4]",
        ][..],
        &[
            "check",
            "--input",
            "sketches/toy.sk",
            "--spec",
            "P>=0.1 [F s=4]",
        ],
        &[
            "check",
            "--input",
            "sketches/toy.sk",
            "--assign",
            "k2=5,k3=2",
            "--spec",
            "P>=0.1 [F s=4]",
        ],
        &[
            "check",
            "--input",
            "sketches/toy.sk",
            "--assign",
            "k2=2,k3=2",
            "--spec",
            "P>=2 [F s=4]",
        ],
        &[
            "check",
            "--input",
            "sketches/toy.sk",
            "--assign",
            "k2=2,k3=2",
            "--spec",
            "P>=0.1 [F q=4]",
        ],
        &[
            "check",
            "--input",
            "tests/data/broken.sk",
            "--assign",
            "h=1",
            "--spec",
            "P>=0 [F x=2]",
        ],
        &[
            "check",
            "--input",
            "missing.sk",
            "--assign",
            "k2=2",
            "--spec",
            "P>=0 [F s=4]",
        ],
        &[
            "check",
            "--input",
            "sketches/toy.sk",
            "--format",
            "json",
            "--assign",
            "k2=2,k3=2",
            "--spec",
            "P>=0 [F s=4]",
        ],
    ] {
        let r = run(args);
        assert_eq!(r.code, 2, "{args:?}");
        assert!(r.out.is_empty(), "{args:?}");
        assert!(r.err.starts_with("error:"), "{args:?}: {}", r.err);
    }
    let r = run(&[
        "check",
        "--input",
        "tests/data/broken.sk",
        "--assign",
        "h=1",
        "--spec",
        "P>=0 [F x=2]",
    ]);
    assert_eq!(r.err, "error: 4:1: probabilities sum to 1.1\n");
}

#[test]
fn partition_with_every_engine() {
    for engine in ["enum", "cegar", "cegis"] {
        let r = run(&[
            "synth",
            "partition",
            "--input",
            "sketches/toy.sk",
            "--spec",
            "P>=0.1 [F s=4]",
            "--engine",
            engine,
            "--json",
        ]);
        assert_eq!(r.code, 0);
        let v = stable(&r.out);
        assert_eq!(v["engine"], engine);
        assert_eq!(
            v["outcome"],
            json!({
                "kind": "partition",
                "T": [{"k2": "2", "k3": "4"}, {"k2": "3", "k3": "4"}],
                "F": [{"k2": "2", "k3": "2"}, {"k2": "3", "k3": "2"}],
            })
        );
        assert_eq!(
            v["query"],
            json!({"kind": "partition", "spec": "P>=0.1 [F s=4]", "cost_model": "structural"})
        );
    }
}

#[test]
fn cegar_partition_golden() {
    let r = run(&[
        "synth",
        "partition",
        "--input",
        "sketches/toy.sk",
        "--spec",
        "P>=0.1 [F s=4]",
        "--engine",
        "cegar",
        "--json",
    ]);
    assert_eq!(
        r.out.replace(
            &format!("\"wall_ms\":{}", stable_ms(&r.out)),
            "\"wall_ms\":0"
        ),
        concat!(
            r#"{"engine":"cegar","outcome":{"F":[{"k2":"2","k3":"2"},{"k2":"3","k3":"2"}],"#,
            r#""T":[{"k2":"2","k3":"4"},{"k2":"3","k3":"4"}],"kind":"partition"},"#,
            r#""query":{"cost_model":"structural","kind":"partition","spec":"P>=0.1 [F s=4]"},"#,
            r#""stats":{"candidates":4,"checks":8,"iterations":4,"wall_ms":0}}"#,
            "\n"
        )
    );
}

fn stable_ms(out: &str) -> u64 {
    serde_json::from_str::<Value>(out).unwrap()["stats"]["wall_ms"]
        .as_u64()
        .unwrap()
}

#[test]
fn budgeted_max() {
    for engine in ["enum", "cegar", "cegis"] {
        let r = run(&[
            "synth",
            "max",
            "--input",
            "sketches/toy.sk",
            "--goal",
            "s=4",
            "--cost",
            "structural",
            "--budget",
            "9",
            "--engine",
            engine,
            "--json",
        ]);
        assert_eq!(r.code, 0);
        let v = stable(&r.out);
        assert_eq!(
            v["outcome"],
            json!({"kind": "optimal", "witness": {"k2": "2", "k3": "2"}, "value": 0.0, "cost": 8})
        );
        assert_eq!(v["query"]["budget"], 9);
        let r = run(&[
            "synth",
            "max",
            "--input",
            "sketches/toy.sk",
            "--goal",
            "s=4",
            "--budget",
            "7",
            "--engine",
            engine,
        ]);
        assert_eq!(r.code, 1);
        assert!(r.out.contains("unsatisfiable"));
    }
}

#[test]
fn pinned_subfamily_is_unsatisfiable() {
    for engine in ["enum", "cegar", "cegis"] {
        let r = run(&[
            "synth",
            "feasible",
            "--input",
            "sketches/toy.sk",
            "--spec",
            "P>=0.1 [F s=4]",
            "--assign",
            "k3=2",
            "--engine",
            engine,
            "--json",
        ]);
        assert_eq!(r.code, 1, "{engine}");
        assert_eq!(stable(&r.out)["outcome"], json!({"kind": "unsatisfiable"}));
    }
}

#[test]
fn json_family_input() {
    let r = run(&[
        "synth",
        "max",
        "--input",
        "sketches/toy.json",
        "--goal",
        "state=4",
        "--json",
    ]);
    assert_eq!(r.code, 0);
    let v = stable(&r.out);
    assert_eq!(v["outcome"]["value"], 1.0);
    assert_eq!(v["outcome"]["witness"], json!({"k2": "2", "k3": "4"}));
}

#[test]
fn eps_and_min() {
    let r = run(&[
        "synth",
        "eps",
        "--input",
        "sketches/bsn.sk",
        "--goal",
        "s=3",
        "--epsilon",
        "0.2",
        "--engine",
        "cegar",
        "--json",
    ]);
    assert_eq!(r.code, 0);
    let v = stable(&r.out);
    assert!(v["outcome"]["value"].as_f64().unwrap() >= 0.8 * 0.94 - 1e-9);
    assert_eq!(v["query"]["epsilon"], 0.2);
    let r = run(&[
        "synth",
        "min",
        "--input",
        "sketches/bsn.sk",
        "--goal",
        "s=3",
        "--json",
    ]);
    assert_eq!(stable(&r.out)["outcome"]["value"], 0.0);
}

#[test]
fn synth_errors() {
    for args in [
        &[
            "synth",
            "max",
            "--input",
            "sketches/dpm.sk",
            "--goal",
            "done=1",
            "--engine",
            "cegar",
        ][..],
        &[
            "synth",
            "feasible",
            "--input",
            "sketches/toy.sk",
            "--goal",
            "s=4",
        ],
        &[
            "synth",
            "eps",
            "--input",
            "sketches/toy.sk",
            "--goal",
            "s=4",
        ],
        &[
            "synth",
            "eps",
            "--input",
            "sketches/toy.sk",
            "--goal",
            "s=4",
            "--epsilon",
            "1.5",
        ],
        &[
            "synth",
            "max",
            "--input",
            "sketches/toy.sk",
            "--goal",
            "s=4",
            "--epsilon",
            "0.1",
        ],
        &[
            "synth",
            "max",
            "--input",
            "sketches/toy.sk",
            "--goal",
            "s=9",
        ],
        &[
            "synth",
            "max",
            "--input",
            "sketches/toy.sk",
            "--goal",
            "s=4",
            "--engine",
            "smt",
        ],
        &[
            "synth",
            "partition",
            "--input",
            "sketches/toy.sk",
            "--spec",
            "P>=0.1 [F s=4]",
            "--cheapest",
        ],
        &[
            "synth",
            "max",
            "--input",
            "sketches/toy.sk",
            "--goal",
            "s=4",
            "--assign",
            "k9=1",
        ],
        &[
            "synth",
            "max",
            "--input",
            "sketches/toy.sk",
            "--goal",
            "s=4",
            "--tolerance",
            "-1",
        ],
        &["bogus"],
    ] {
        let r = run(args);
        assert_eq!(r.code, 2, "{args:?}");
        assert!(r.out.is_empty(), "{args:?}");
        assert!(!r.err.is_empty(), "{args:?}");
    }
    let r = run(&[
        "synth",
        "max",
        "--input",
        "sketches/dpm.sk",
        "--goal",
        "done=1",
        "--engine",
        "cegar",
    ]);
    assert!(r.err.contains("cannot solve"), "{}", r.err);
}

#[test]
fn output_is_stable_across_runs() {
    let args = [
        "synth",
        "partition",
        "--input",
        "sketches/dpm.sk",
        "--spec",
        "P>=0.5 [F done=1]",
        "--engine",
        "cegis",
        "--json",
        "--trace",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.code, 0);
    assert_eq!(stable(&a.out), stable(&b.out));
    assert!(!stable(&a.out)["stats"]["trace"].as_array().unwrap().is_empty());
}

#[test]
fn bench_commands() {
    let r = run(&["bench", "--seed", "0", "--instances", "100", "--json"]);
    assert_eq!(r.code, 0, "{}", r.out);
    let v: Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["failures"], json!([]));
    assert_eq!(v["instances"], 100);

    let r = run(&["bench", "--instances", "1", "--max-realisations", "1"]);
    assert_eq!(r.code, 0);
    assert!(r.out.starts_with("instances 1  skipped 0  failures 0"));

    let r = run(&["bench", "--pruning", "64", "--json"]);
    assert_eq!(r.code, 0);
    let v: Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["agree"], true);
    let cegis = v["engines"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["engine"] == "cegis")
        .unwrap();
    assert!(cegis["checks"].as_u64().unwrap() < 64);
}
