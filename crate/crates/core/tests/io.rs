use std::path::PathBuf;

use pta_core::bench::{
    gen_robot, gen_task_completion, running_example, BenchmarkInstance, RobotParams,
    RunningConstants, TaskParams,
};
use pta_core::io::{document, export_mdp, parse_model, serialize_model, IoError};
use pta_core::mdp::{check_pta, CheckOptions};
use pta_core::region::{build_region_mdp, RegionOptions};

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

fn instances() -> Vec<BenchmarkInstance> {
    vec![
        gen_task_completion(&TaskParams::two_task()).unwrap(),
        gen_task_completion(&TaskParams::scaled(3, 0)).unwrap(),
        gen_task_completion(&TaskParams::scaled(5, 2)).unwrap(),
        gen_robot(&RobotParams::grid3x2()).unwrap(),
        gen_robot(&RobotParams::scaled(3, 0).unwrap()).unwrap(),
        gen_robot(&RobotParams::scaled(4, 9).unwrap()).unwrap(),
        running_example(RunningConstants::default()).unwrap(),
    ]
}

#[test]
fn benchmark_instances_round_trip() {
    for inst in instances() {
        let doc = document(Some(&inst.pta), Some(&inst.dtra), Some(inst.mode));
        let text = serialize_model(&doc);
        let back = parse_model(&text).unwrap();
        assert_eq!(
            back.pta.as_ref(),
            Some(&inst.pta),
            "{} {}",
            inst.family,
            inst.n
        );
        assert_eq!(
            back.dtra.as_ref(),
            Some(&inst.dtra),
            "{} {}",
            inst.family,
            inst.n
        );
        assert_eq!(back.start_mode(), Some(inst.mode));
        assert_eq!(serialize_model(&back), text);
    }
}

#[test]
fn fixtures_parse_and_keep_named_constants() {
    let doc = parse_model(&fixture("running_example.toml")).unwrap();
    assert_eq!(doc.raw.constants.get("C_alpha"), Some(&3));
    let text = serialize_model(&doc);
    assert!(text.contains("C_alpha"));
    assert_eq!(parse_model(&text).unwrap(), doc);
    for name in ["two_task.toml", "empty_acceptance.toml", "diagonal.toml"] {
        parse_model(&fixture(name)).unwrap();
    }
}

#[test]
fn running_fixture_matches_generator() {
    let doc = parse_model(&fixture("running_example.toml")).unwrap();
    let inst = running_example(RunningConstants::default()).unwrap();
    let opts = CheckOptions::default();
    let a = check_pta(
        doc.pta.as_ref().unwrap(),
        doc.dtra.as_ref().unwrap(),
        doc.start_mode().unwrap(),
        &opts,
    )
    .unwrap();
    let b = check_pta(&inst.pta, &inst.dtra, inst.mode, &opts).unwrap();
    assert_eq!((a.p_min, a.p_max, a.states), (b.p_min, b.p_max, b.states));
}

#[test]
fn errors_name_their_cause() {
    let base = fixture("running_example.toml");
    let err = parse_model(&base.replace("format = 1", "format = 9")).unwrap_err();
    assert!(matches!(err, IoError::Version(9)), "{err:?}");
    let err = parse_model(&base.replace("\"0.9\"", "\"0.8\"")).unwrap_err();
    assert!(
        matches!(err, IoError::Model(_) | IoError::Probability { .. }),
        "{err:?}"
    );
    let err = parse_model(&base.replace("C_beta = 4\n", "")).unwrap_err();
    assert!(err.to_string().contains("C_beta"), "{err}");
    let err = parse_model(&base.replace("to = \"WORK_beta\"", "to = \"NOWHERE\"")).unwrap_err();
    assert!(err.to_string().contains("NOWHERE"), "{err}");
    let err = parse_model(&base.replace("x <= 10", "x <=")).unwrap_err();
    assert!(matches!(err, IoError::Constraint { .. }), "{err:?}");
}

#[test]
fn mdp_listing_is_complete() {
    let inst = gen_task_completion(&TaskParams::two_task()).unwrap();
    let reg = build_region_mdp(&inst.pta, &RegionOptions::default()).unwrap();
    let text = export_mdp(&reg.mdp);
    let rows = text
        .lines()
        .filter(|l| l.split(' ').count() == 5 && l.starts_with(|c: char| c.is_ascii_digit()))
        .count();
    assert_eq!(rows, reg.mdp.num_branches());
    assert!(text.starts_with("mdp 1\n"));
    assert!(text.contains(&format!("states {}", reg.mdp.num_states())));
}
