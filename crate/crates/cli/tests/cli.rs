mod common;

use std::fs;
use std::path::Path;

use serde_json::Value;
use visrisk_core::ewm::read_labels;
use visrisk_core::{encode_state, ViewId, ViewState};
use visrisk_server::artifacts::{self as art, write_json};
use visrisk_server::Config;

fn error_json(stderr: &[u8]) -> Value {
    let text = String::from_utf8_lossy(stderr);
    let line = text.lines().last().expect("stderr line");
    serde_json::from_str(line).expect("json error line")
}

fn pipeline(config: &Path, data: &Path) {
    for stage in ["ingest", "train-som", "train-sotm", "network", "ewm-fit", "ewm-score"] {
        let out = common::visrisk(&[
            stage,
            "--config",
            config.to_str().unwrap(),
            "--data-dir",
            data.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{stage}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn empty_observations_exit_with_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("obs.csv"), "entity,time,indicator,value\n").unwrap();
    fs::write(tmp.path().join("config.json"), r#"{"observations": "obs.csv"}"#).unwrap();
    let out = common::visrisk(&[
        "ingest",
        "--config",
        tmp.path().join("config.json").to_str().unwrap(),
        "--data-dir",
        tmp.path().join("data").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = error_json(&out.stderr);
    assert_eq!(err["error"]["kind"], "data");
    assert!(err["error"]["message"].as_str().unwrap().contains("no observations"));
}

#[test]
fn usage_errors_exit_two() {
    let out = common::visrisk(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out.stderr)["error"]["kind"], "usage");

    let tmp = tempfile::tempdir().unwrap();
    let out = common::visrisk(&["ingest", "--data-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_cube_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = common::visrisk(&["train-som", "--data-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(error_json(&out.stderr)["error"]["message"].is_string());
}

#[test]
fn export_renders_view_from_token() {
    let tmp = tempfile::tempdir().unwrap();
    let config = common::write_inputs(tmp.path(), &common::SMALL, 7);
    let data = tmp.path().join("data");
    pipeline(&config, &data);
    let token = encode_state(&ViewState {
        view: ViewId::Fsm,
        entities: vec!["E01".into()],
        from: Some("1991Q1".into()),
        to: Some("1992Q4".into()),
        layer: Some("state:crisis".into()),
        ..ViewState::default()
    })
    .unwrap();
    let out = common::visrisk(&["export", "fsm", "--state", &token, "--data-dir", data.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = String::from_utf8(out.stdout).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));

    let file = tmp.path().join("bim.svg");
    let out = common::visrisk(&[
        "export",
        "bim",
        "--out",
        file.to_str().unwrap(),
        "--data-dir",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(fs::read_to_string(file).unwrap().contains("</svg>"));

    let out = common::visrisk(&["export", "fsm", "--state", "not-a-token", "--data-dir", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn artifacts_match_library_calls() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = common::write_inputs(tmp.path(), &common::SMALL, 11);
    let data = tmp.path().join("data");
    pipeline(&config_path, &data);

    let expected = tmp.path().join("expected");
    fs::create_dir_all(&expected).unwrap();
    let config = Config::load(&config_path).unwrap();
    let (cube, events) = art::ingest(&config).unwrap();
    write_json(&expected.join(art::CUBE), &cube).unwrap();
    write_json(&expected.join(art::EVENTS), &events).unwrap();
    let states = read_labels(fs::File::open(config.states.as_ref().unwrap()).unwrap()).unwrap();
    let som = art::train_som(&cube, &config.som, Some(&states)).unwrap();
    write_json(&expected.join(art::SOM), &som).unwrap();
    write_json(&expected.join(art::SOTM), &art::train_sotm(&cube, &config.sotm).unwrap()).unwrap();
    let records = art::read_occurrence_csv(&config).unwrap();
    write_json(&expected.join(art::OCCURRENCES), &records).unwrap();
    let network = art::build_network(&records, &config.network, &config.distress_terms).unwrap();
    write_json(&expected.join(art::NETWORK), &network).unwrap();
    let labels = read_labels(fs::File::open(config.labels.as_ref().unwrap()).unwrap()).unwrap();
    let fit = art::fit_ewm(&cube, &labels, &config.ewm).unwrap();
    write_json(&expected.join(art::EWM_MODEL), &fit.model).unwrap();
    write_json(&expected.join(art::RISK), &art::score_ewm(&cube, &fit.model).unwrap()).unwrap();

    for name in [
        art::CUBE,
        art::EVENTS,
        art::SOM,
        art::SOTM,
        art::OCCURRENCES,
        art::NETWORK,
        art::EWM_MODEL,
        art::RISK,
    ] {
        assert_eq!(
            fs::read(data.join(name)).unwrap(),
            fs::read(expected.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn ewm_score_falls_back_to_configured_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let config = common::write_inputs(tmp.path(), &common::SMALL, 3);
    let data = tmp.path().join("data");
    let args = |stage: &'static str| {
        vec![
            stage.to_string(),
            "--config".into(),
            config.to_str().unwrap().into(),
            "--data-dir".into(),
            data.to_str().unwrap().into(),
        ]
    };
    for stage in ["ingest", "ewm-score"] {
        let a = args(stage);
        let out = common::visrisk(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
        if stage == "ewm-score" {
            assert_eq!(summary["artifact"], art::RISK);
            assert!(summary["rows"].as_u64().unwrap() > 0);
        }
    }
}
