//! End-to-end runs of the `ncakit` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ncakit::checkpoint::Checkpoint;
use ncakit::io::{fmt_f64, load_csv, load_features, load_schema, write_csv};
use ncakit_core::data::{ColumnSchema, Targets};
use ncakit_core::model::{predict, Predictions};
use ncakit_core::synth::two_moons;
use proptest::prelude::*;

fn ncakit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncakit"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(p: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(p)
        .unwrap();
    r.records()
        .map(|x| x.unwrap().iter().map(str::to_string).collect())
        .collect()
}

/// Synthesizes moons and trains one small checkpoint in `dir`.
fn trained(dir: &Path) {
    let o = ncakit(
        dir,
        &[
            "synth",
            "--kind",
            "moons",
            "--n",
            "120",
            "--dims",
            "1",
            "--out-dir",
            ".",
            "--name",
            "moons",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    fs::write(
        dir.join("m.toml"),
        "output = \"out\"\nvariant = \"modern_nca\"\n[[datasets]]\npath = \"moons.csv\"\nschema = \"moons.schema.toml\"\n\
         [overrides]\nmax_epochs = 5\nbatch_size = 32\narch = { d_prime = 8, hidden_width = 8 }\n",
    )
    .unwrap();
    let o = ncakit(dir, &["train", "m.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = ncakit(
        dir.path(),
        &["verify", "--trials", "200", "--instances", "3"],
    );
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let out = String::from_utf8_lossy(&ok.stdout);
    assert!(out.contains("checks passed"), "{out}");
    let bad = ncakit(
        dir.path(),
        &[
            "verify",
            "--trials",
            "200",
            "--instances",
            "3",
            "--inject-fault",
        ],
    );
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}

#[test]
fn missing_schema_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), "a,y\n1,0\n").unwrap();
    fs::write(
        dir.path().join("m.toml"),
        "output = \"out\"\n[[datasets]]\npath = \"d.csv\"\nschema = \"nope.schema.toml\"\n",
    )
    .unwrap();
    let o = ncakit(dir.path(), &["train", "m.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.schema.toml"), "{}", stderr(&o));
}

#[test]
fn predict_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    trained(dir);
    let ck = "out/moons/checkpoint_seed0.json";

    fs::write(dir.join("empty.csv"), "x0,x1,x2\n").unwrap();
    let o = ncakit(
        dir,
        &[
            "predict",
            "--checkpoint",
            ck,
            "--train",
            "moons.csv",
            "--query",
            "empty.csv",
            "--out",
            "e.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        rows(&dir.join("e.csv")),
        vec![vec!["prediction", "p_0", "p_1"]]
    );

    let o = ncakit(
        dir,
        &[
            "predict",
            "--checkpoint",
            ck,
            "--train",
            "moons.csv",
            "--query",
            "moons.csv",
            "--out",
            "p.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let got = rows(&dir.join("p.csv"));
    assert_eq!(got.len(), 121);
    for r in &got[1..] {
        let p: Vec<f64> = r[1..].iter().map(|v| v.parse().unwrap()).collect();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let arg = if p[1] > p[0] { "1" } else { "0" };
        assert!(r[0] == arg || p[0] == p[1]);
    }

    // same rows as a direct library call on the restored model
    let c = Checkpoint::load(&dir.join(ck)).unwrap();
    let cands = c
        .standardizer
        .apply(&load_csv(&dir.join("moons.csv"), &c.schema).unwrap())
        .unwrap();
    let q = c
        .standardizer
        .apply_features(&load_features(&dir.join("moons.csv"), &c.schema).unwrap())
        .unwrap();
    let Predictions::Classes { probs, .. } =
        predict(&c.model().unwrap(), &cands, &q, c.config.neighbourhood()).unwrap()
    else {
        panic!("classification checkpoint");
    };
    for (i, r) in got[1..].iter().enumerate() {
        assert_eq!(r[1], fmt_f64(probs[(i, 0)]));
    }

    fs::write(dir.join("bad.csv"), "x0,x1\n0.1,0.2\n").unwrap();
    let o = ncakit(
        dir,
        &[
            "predict",
            "--checkpoint",
            ck,
            "--train",
            "moons.csv",
            "--query",
            "bad.csv",
            "--out",
            "b.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("bad.csv") && msg.contains("x2"), "{msg}");
}

#[test]
fn synth_writes_loadable_files() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["separable", "moons", "sine"] {
        let o = ncakit(
            dir.path(),
            &[
                "synth",
                "--kind",
                kind,
                "--n",
                "40",
                "--out-dir",
                ".",
                "--name",
                kind,
            ],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        let schema = load_schema(&dir.path().join(format!("{kind}.schema.toml"))).unwrap();
        assert_eq!(
            load_csv(&dir.path().join(format!("{kind}.csv")), &schema)
                .unwrap()
                .len(),
            40
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fmt_f64_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn csv_round_trips(n in 5usize..40, seed in 0u64..1000) {
        let dir = tempfile::tempdir().unwrap();
        let d = two_moons(n, 0.3, 2, seed).unwrap();
        let p = dir.path().join("d.csv");
        write_csv(&p, &d).unwrap();
        let back = load_csv(&p, d.schema()).unwrap();
        prop_assert_eq!(back.numerical().as_slice(), d.numerical().as_slice());
        prop_assert_eq!(back.targets(), d.targets());
    }

    #[test]
    fn regression_csv_round_trips(ys in proptest::collection::vec(-1e6f64..1e6, 1..30)) {
        let dir = tempfile::tempdir().unwrap();
        let n = ys.len();
        let schema = vec![ColumnSchema::numerical("a"), ColumnSchema::regression_label("y")];
        let body: String = ys.iter().enumerate().map(|(i, y)| format!("{i},{}\n", fmt_f64(*y))).collect();
        let p = dir.path().join("r.csv");
        fs::write(&p, format!("a,y\n{body}")).unwrap();
        let d = load_csv(&p, &schema).unwrap();
        let q = dir.path().join("s.csv");
        write_csv(&q, &d).unwrap();
        let back = load_csv(&q, &schema).unwrap();
        prop_assert_eq!(back.len(), n);
        prop_assert_eq!(back.targets(), &Targets::Values(ys));
    }
}
