//! Run configurations, manifests and their error paths.

use exitdp::harness::{run, InstanceRef, Pipeline, RunConfig};
use exitdp::model::document::ProblemDocument;
use exitdp::solve::LatticeOptions;
use exitdp::Error;

fn solve_config(out: &std::path::Path) -> RunConfig {
    RunConfig {
        instance: InstanceRef::gallery("smooth_benchmark"),
        seed: 1,
        output: out.to_path_buf(),
        run: Pipeline::Solve {
            lattice: LatticeOptions::new(0.1),
            level: None,
            eps: 0.0,
        },
    }
}

#[test]
fn configs_round_trip_through_json() {
    let cfg = solve_config(std::path::Path::new("out"));
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
}

#[test]
fn unknown_fields_and_pipelines_are_rejected() {
    let bad_field = r#"{"instance":{"gallery":"pure_discount"},"run":{"pipeline":"solve","lattice":{"h":0.1}},"colour":1}"#;
    assert!(RunConfig::from_json(bad_field).is_err());
    let bad_pipeline = r#"{"instance":{"gallery":"pure_discount"},"run":{"pipeline":"plot"}}"#;
    assert!(RunConfig::from_json(bad_pipeline).is_err());
}

#[test]
fn unknown_gallery_entries_list_the_valid_names() {
    let mut cfg = solve_config(std::path::Path::new("out"));
    cfg.instance = InstanceRef::gallery("no_such_entry");
    let msg = cfg.validate().unwrap_err().to_string();
    assert!(
        msg.contains("annulus_flow") && msg.contains("pure_discount"),
        "{msg}"
    );
}

#[test]
fn rate_sweeps_need_three_distinct_steps() {
    let mut cfg = solve_config(std::path::Path::new("out"));
    cfg.run = Pipeline::Rates {
        hs: vec![0.1, 0.05],
        probes: 10,
        threshold: 0.45,
    };
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    cfg.run = Pipeline::Rates {
        hs: vec![0.1, 0.05, 0.05],
        probes: 10,
        threshold: 0.45,
    };
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
}

#[test]
fn solve_run_writes_a_deterministic_manifest() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run(&solve_config(a.path())).unwrap();
    let mb = run(&solve_config(b.path())).unwrap();
    assert!(ma.pass);
    assert_eq!(ma.verdicts, mb.verdicts);
    for name in ["values.csv", "meta.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let text = std::fs::read_to_string(a.path().join("manifest.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["pipeline"], "solve");
    assert_eq!(json["pass"], true);
}

#[test]
fn simulate_run_reports_an_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"{{"instance":{{"gallery":"pure_discount"}},"seed":2,"output":{:?},
            "run":{{"pipeline":"simulate","start":{{"t":0.0,"x":[0.1]}},"dt":0.001,"n_paths":4,
                    "policy":{{"kind":"constant","control":0}}}}}}"#,
        dir.path()
    );
    let m = run(&RunConfig::from_json(&text).unwrap()).unwrap();
    let e = m.estimate.unwrap();
    assert!((e.mean - exitdp::gallery::pure_discount_exact(0.0)).abs() < 1e-3);
    let csv = std::fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn failing_verdicts_fail_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"{{"instance":{{"gallery":"brownian_annulus"}},"output":{:?},
            "run":{{"pipeline":"verify","check":{{"check":"band","lattice":{{"h":0.1}},"k1":0.0,"factor":0.0}}}}}}"#,
        dir.path()
    );
    let m = run(&RunConfig::from_json(&text).unwrap()).unwrap();
    assert!(!m.pass);
    assert!(dir.path().join("band.json").exists());
}

#[test]
fn document_instances_resolve_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("problem.json");
    let doc = ProblemDocument::gallery("singular_control", &[("n", 2.0)]);
    std::fs::write(&path, doc.to_json().unwrap()).unwrap();
    let r = InstanceRef {
        gallery: None,
        params: Default::default(),
        path: Some(path),
    };
    let inst = r.resolve().unwrap();
    assert_eq!(inst.name, "singular_control");
    assert_eq!(
        inst.controls.labels(),
        exitdp::gallery::singular_control(2.0).controls.labels()
    );
    let both = InstanceRef {
        gallery: Some("pure_discount".into()),
        ..r
    };
    assert!(matches!(both.resolve(), Err(Error::Config(_))));
}
