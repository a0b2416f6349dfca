//! End-to-end tests of the binary: exit codes, file outputs, and the
//! match -> verify contract.

use std::path::Path;
use std::process::{Command, Output};

use hiermatch_core::fixtures::{self, ConflictPrefs};
use hiermatch_core::io::{save_instance, to_canonical_json, OutcomeFile};

fn hiermatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hiermatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_conflict_instance(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("instance.json");
    let instance = fixtures::reserved_conflict_instance(ConflictPrefs::OpenFirst);
    save_instance(&path, &instance).unwrap();
    path
}

#[test]
fn match_writes_outcome_with_log_and_verify_accepts_it() {
    let dir = tempfile::tempdir().unwrap();
    let instance = write_conflict_instance(dir.path());
    let outcome = dir.path().join("outcome.json");

    let run = hiermatch(&[
        "match",
        instance.to_str().unwrap(),
        "--log",
        "--out",
        outcome.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{run:?}");

    let file: OutcomeFile =
        serde_json::from_str(&std::fs::read_to_string(&outcome).unwrap()).unwrap();
    // the displaced candidate falls back to the reserved seat
    let mut triples: Vec<(String, String)> = file
        .matching
        .iter()
        .map(|r| (r.individual.clone(), r.category.clone()))
        .collect();
    triples.sort();
    assert_eq!(
        triples,
        vec![
            ("i".to_string(), "o".to_string()),
            ("j".to_string(), "OBC".to_string())
        ]
    );
    let log = file.offer_log.as_ref().expect("log recorded");
    assert_eq!(log.steps.len(), 3);

    let verify = hiermatch(&[
        "verify",
        instance.to_str().unwrap(),
        outcome.to_str().unwrap(),
        "--exhaustive",
    ]);
    assert!(verify.status.success(), "{verify:?}");
}

#[test]
fn verify_rejects_a_hand_edited_unfair_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let instance = write_conflict_instance(dir.path());
    let outcome = dir.path().join("outcome.json");
    assert!(hiermatch(&[
        "match",
        instance.to_str().unwrap(),
        "--out",
        outcome.to_str().unwrap(),
    ])
    .status
    .success());

    // push j onto the open seat next to i: the institution would never
    // re-choose that pair
    let mut file: OutcomeFile =
        serde_json::from_str(&std::fs::read_to_string(&outcome).unwrap()).unwrap();
    for record in &mut file.matching {
        if record.individual == "j" {
            record.category = "o".into();
            record.seat_pool = "o".into();
        }
    }
    std::fs::write(&outcome, to_canonical_json(&file)).unwrap();

    let verify = hiermatch(&[
        "verify",
        instance.to_str().unwrap(),
        outcome.to_str().unwrap(),
    ]);
    assert_eq!(verify.status.code(), Some(1), "{verify:?}");
    let stdout = String::from_utf8_lossy(&verify.stdout);
    assert!(stdout.contains("[FAIL]"), "{stdout}");
}

#[test]
fn validate_rejects_malformed_documents_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ this is not json").unwrap();
    let run = hiermatch(&["validate", path.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn validate_surfaces_validation_errors_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("overflow.json");
    std::fs::write(
        &path,
        r#"{
            "schema_version": 1,
            "institutions": [{"id": "s", "total_capacity": 1,
                "vertical_capacities": {"SC": 2}, "merit_scores": {}}],
            "individuals": []
        }"#,
    )
    .unwrap();
    let run = hiermatch(&["validate", path.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("CAPACITY_OVERFLOW"), "{stderr}");
}

#[test]
fn gen_is_deterministic_per_seed_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let run = hiermatch(&[
            "gen",
            "--seed",
            "42",
            "--out",
            path.to_str().unwrap(),
            "--individuals",
            "7",
            "--institutions",
            "2",
        ]);
        assert!(run.status.success(), "{run:?}");
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "same seed must produce identical files"
    );
    assert!(hiermatch(&["validate", a.to_str().unwrap()])
        .status
        .success());
}

#[test]
fn choose_emits_a_selection_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("instance.json");
    save_instance(&path, &fixtures::hierarchical_open_instance()).unwrap();
    let run = hiermatch(&["choose", path.to_str().unwrap(), "--institution", "s"]);
    assert!(run.status.success(), "{run:?}");
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).expect("choose emits JSON");
    assert_eq!(report["institution"], "s");
    assert!(report["traces"]
        .as_array()
        .map(|t| !t.is_empty())
        .unwrap_or(false));
    let chosen: Vec<&str> = report["chosen"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["individual"].as_str().unwrap())
        .collect();
    assert_eq!(chosen, vec!["i3", "i2", "i1", "i4"]);
}

#[test]
fn generated_matches_always_verify() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["3", "17", "5150"] {
        let instance = dir.path().join(format!("g{seed}.json"));
        let outcome = dir.path().join(format!("g{seed}.out.json"));
        assert!(hiermatch(&[
            "gen",
            "--seed",
            seed,
            "--out",
            instance.to_str().unwrap(),
            "--individuals",
            "6",
            "--institutions",
            "2",
        ])
        .status
        .success());
        for extra in [&[][..], &["--transfer"][..]] {
            let mut args = vec![
                "match",
                instance.to_str().unwrap(),
                "--log",
                "--out",
                outcome.to_str().unwrap(),
            ];
            args.extend_from_slice(extra);
            assert!(hiermatch(&args).status.success());
            let verify = hiermatch(&[
                "verify",
                instance.to_str().unwrap(),
                outcome.to_str().unwrap(),
                "--exhaustive",
            ]);
            assert!(verify.status.success(), "seed {seed} {extra:?}: {verify:?}");
        }
    }
}

#[test]
fn probe_respects_the_enumeration_cap() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("instance.json");
    save_instance(&path, &fixtures::over_and_above_instance()).unwrap();
    let run = hiermatch(&[
        "probe",
        path.to_str().unwrap(),
        "--trials",
        "50",
        "--cap",
        "10",
    ]);
    assert!(run.status.success(), "{run:?}");
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("[SKIP] strategy-proofness"), "{stdout}");
}

#[test]
fn probe_passes_on_a_clean_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("instance.json");
    save_instance(&path, &fixtures::over_and_above_instance()).unwrap();
    let run = hiermatch(&[
        "probe",
        path.to_str().unwrap(),
        "--trials",
        "200",
        "--seed",
        "9",
    ]);
    assert!(run.status.success(), "{run:?}");
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("[PASS] strategy-proofness[cumulative-offer]"));
}
