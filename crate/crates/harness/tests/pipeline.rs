mod common;

use reachlab_harness::commands::{self, TABLE_METRICS};
use reachlab_harness::manifest::{CellStatus, RunDir, MANIFEST_FILE};

fn assert_complete(root: &std::path::Path) {
    let run = RunDir::open(root).unwrap();
    let (unlisted, missing) = run.completeness().unwrap();
    assert!(unlisted.is_empty(), "files not in manifest: {unlisted:?}");
    assert!(missing.is_empty(), "manifest entries not on disk: {missing:?}");
}

#[test]
fn single_cell_grid_trains_one_agent() {
    let dir = tempfile::tempdir().unwrap();
    let s = commands::train(&common::tiny(), dir.path()).unwrap();
    assert_eq!(s.trained, ["baseline_pos_id2"]);
    let agents: Vec<_> = std::fs::read_dir(dir.path().join("agents")).unwrap().collect();
    assert_eq!(agents.len(), 1);
    let run = RunDir::open(dir.path()).unwrap();
    let rec = &run.manifest.cells["baseline_pos_id2"];
    assert!(matches!(rec.status, CellStatus::Trained | CellStatus::NonReaching));
    assert_complete(dir.path());
}

#[test]
fn rerun_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::tiny();
    commands::train(&config, dir.path()).unwrap();
    let manifest = std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
    let agent = std::fs::read(dir.path().join("agents/baseline_pos_id2.json")).unwrap();
    let s = commands::train(&config, dir.path()).unwrap();
    assert!(s.trained.is_empty());
    assert_eq!(s.skipped, ["baseline_pos_id2"]);
    assert_eq!(std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap(), manifest);
    assert_eq!(std::fs::read(dir.path().join("agents/baseline_pos_id2.json")).unwrap(), agent);
}

#[test]
fn changed_config_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    commands::train(&common::tiny(), dir.path()).unwrap();
    let err = commands::train(&common::tiny_with("optimizer.iterations = 3"), dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn full_pipeline_is_reproducible_and_complete() {
    let config = common::tiny_with("grid.p_tols = [0.105, 0.045, 0.021]");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for root in [a.path(), b.path()] {
        commands::train(&config, root).unwrap();
        commands::evaluate(root, None).unwrap();
        commands::report(root).unwrap();
        assert_complete(root);
    }
    let run = RunDir::open(a.path()).unwrap();
    let mut compared = 0;
    for rel in &run.manifest.artifacts {
        if rel == "timings.json" {
            continue;
        }
        assert_eq!(
            std::fs::read(a.path().join(rel)).unwrap(),
            std::fs::read(b.path().join(rel)).unwrap(),
            "{rel} differs between runs"
        );
        compared += 1;
    }
    assert!(compared > 10);
    assert_eq!(std::fs::read(a.path().join(MANIFEST_FILE)).unwrap(), std::fs::read(b.path().join(MANIFEST_FILE)).unwrap());
}

#[test]
fn report_covers_declared_axes() {
    let config = common::tiny_with("grid.p_tols = [0.105, 0.045]\ngrid.requirements = [\"pos\", \"pos-vel\"]");
    let dir = tempfile::tempdir().unwrap();
    commands::train(&config, dir.path()).unwrap();
    commands::evaluate(dir.path(), Some(3)).unwrap();
    let files = commands::report(dir.path()).unwrap();
    for fam in ["fig_trajectories", "fig_speed", "fig_activations", "fig_fitts"] {
        assert!(files.contains(&format!("report/{fam}.svg")), "{fam}");
        assert!(files.contains(&format!("report/{fam}.csv")), "{fam}");
    }
    let mut r = csv::Reader::from_path(dir.path().join(commands::TABLE_FILE)).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    // metrics x cells, plus one R_F per (model, requirement)
    assert_eq!(rows.len(), TABLE_METRICS.len() * 4 + 2);
    let p_line = rows.iter().find(|r| &r[0] == "p_line" && &r[1] == "pos" && &r[2] == "baseline" && &r[3] == "id3").unwrap();
    let v = &p_line[4];
    assert!(v == "absent" || v.parse::<f64>().unwrap() <= 1.0, "{v}");
    assert!(rows.iter().filter(|r| &r[0] == "r_f").all(|r| &r[3] == "all"));
    assert_complete(dir.path());
}

#[test]
fn report_on_empty_dir_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    assert!(commands::report(dir.path()).is_err());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

    commands::train(&common::tiny(), dir.path()).unwrap();
    let before: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(commands::report(dir.path()).is_err());
    let after: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(before.len(), after.len());
    assert!(!dir.path().join("report").exists());
}

#[test]
fn missing_agents_give_partial_results() {
    let config = common::tiny_with("grid.p_tols = [0.105, 0.045]");
    let dir = tempfile::tempdir().unwrap();
    commands::train(&config, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("agents/baseline_pos_id3.json")).unwrap();
    let err = commands::evaluate(dir.path(), None).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(dir.path().join("metrics/baseline_pos_id2.json").is_file());
    let err = commands::report(dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let table = std::fs::read_to_string(dir.path().join(commands::TABLE_FILE)).unwrap();
    assert!(table.lines().any(|l| l.starts_with("p_line,pos,baseline,id3,NA")), "{table}");
}

#[test]
fn grid_cells_use_derived_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::tiny();
    commands::train(&config, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("agents/baseline_pos_id2.json")).unwrap();
    let agent = reachlab::train::TrainedAgent::from_json(&text).unwrap();
    let cell = &config.grid.cells()[0];
    assert_eq!(agent.optimizer.seed, cell.seed);
    assert_eq!(agent.seed_lineage, vec![11, cell.seed]);
}
