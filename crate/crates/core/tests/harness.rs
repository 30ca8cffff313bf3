use vibraverify::eval::{compute_roc, parse_manifest, run_manifest, write_reports, EvalError, MetricsReport};
use vibraverify::wearsim::{parse_scenario, run_scenario, AccelModel, AttackKind, Label, MANIFEST_NAME};
use vibraverify::VerifyConfig;

const SCENARIO: &str = r#"[
    {"kind": "normal", "count": 4, "seed": 100},
    {"kind": "replay", "accel": "ambient", "count": 2, "seed": 200},
    {"kind": "hidden_command", "count": 2, "seed": 300},
    {"kind": "ultrasound", "count": 2, "seed": 400},
    {"kind": "random_attack", "count": 2, "seed": 500}
]"#;

#[test]
fn scenario_to_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let entries = parse_scenario(SCENARIO).unwrap();
    let manifest = run_scenario(&entries, dir.path(), &AccelModel::default(), 0).unwrap();
    assert_eq!(manifest.len(), 12);
    assert_eq!(manifest.iter().filter(|m| m.label == Label::Legit).count(), 4);

    let records = run_manifest(dir.path().join(MANIFEST_NAME), &VerifyConfig::default()).unwrap();
    assert_eq!(records.len(), 12);
    for r in &records {
        let expect = r.label == Label::Legit;
        assert_eq!(r.accepted, expect, "{r:?}");
    }
    let summary = compute_roc(&records).unwrap();
    assert_eq!(summary.auc, 1.0);

    let report = MetricsReport::new(&summary, &records, 0.30);
    assert_eq!(report.accept_rate_by_kind["ultrasound"], 0.0);
    assert_eq!(report.accept_rate_by_kind["normal"], 1.0);
    let out = dir.path().join("reports");
    write_reports(&out, &summary, &report).unwrap();
    let roc = std::fs::read_to_string(out.join("roc.csv")).unwrap();
    assert_eq!(roc.lines().count(), 102);
    assert!(roc.starts_with("eta,tpr,fpr\n0.00,1,1\n"));
    let confusion = std::fs::read_to_string(out.join("confusion.csv")).unwrap();
    assert_eq!(confusion, "truth,accept,reject\nlegit,4,0\nattack,0,8\n");
    let metrics: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["auc"], 1.0);
}

#[test]
fn scenario_output_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let entries = parse_scenario(r#"[{"kind":"normal","count":2},{"kind":"replay","accel":"other_utterance"}]"#).unwrap();
    let ma = run_scenario(&entries, a.path(), &AccelModel::default(), 7).unwrap();
    let mb = run_scenario(&entries, b.path(), &AccelModel::default(), 7).unwrap();
    assert_eq!(ma, mb);
    for m in &ma {
        assert_eq!(std::fs::read(a.path().join(&m.wav)).unwrap(), std::fs::read(b.path().join(&m.wav)).unwrap());
        assert_eq!(std::fs::read(a.path().join(&m.csv)).unwrap(), std::fs::read(b.path().join(&m.csv)).unwrap());
    }
    assert_eq!(ma[2].kind, AttackKind::Replay);
    let c = tempfile::tempdir().unwrap();
    let mc = run_scenario(&entries, c.path(), &AccelModel::default(), 8).unwrap();
    assert_ne!(std::fs::read(a.path().join(&ma[0].csv)).unwrap(), std::fs::read(c.path().join(&mc[0].csv)).unwrap());
}

#[test]
fn manifest_errors() {
    assert!(matches!(parse_manifest("\n\n"), Err(EvalError::EmptyManifest)));
    let bad = "{\"trial_id\":\"a\",\"kind\":\"normal\",\"label\":\"legit\",\"wav\":\"a.wav\",\"csv\":\"a.csv\"}\n{oops}\n";
    assert!(matches!(parse_manifest(bad), Err(EvalError::MalformedManifest { line: 2, .. })));

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(MANIFEST_NAME), &bad[..bad.find('\n').unwrap() + 1]).unwrap();
    let err = run_manifest(dir.path().join(MANIFEST_NAME), &VerifyConfig::default()).unwrap_err();
    assert!(err.to_string().contains('a'), "{err}");
}
