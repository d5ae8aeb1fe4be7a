//! Subcommand implementations. Each function works on an already resolved
//! configuration; thread-pool sizing is left to the caller.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use reachlab::arm::MusclePair;
use reachlab::env::{EnvMode, ModelVariant, RequirementKind};
use reachlab::metrics::{self, FittsFit, MetricsReport, NormalizedTrajectory};
use reachlab::policy::{self, PolicyParams};
use reachlab::train::{self, TrainedAgent};
use reachlab::trajectory::{col, COLUMNS};

use crate::config::{self, HarnessConfig};
use crate::error::{HarnessError, Result};
use crate::grid::{id_label, Cell};
use crate::manifest::{write_atomic, CellRecord, CellStatus, RunDir};
use crate::svg::{self, Panel, Series, PALETTE};
use crate::trajio;

pub const FITTS_FILE: &str = "metrics/fitts.json";
pub const TABLE_FILE: &str = "report/table.csv";

pub fn agent_path(cell: &Cell) -> String {
    format!("agents/{}.json", cell.key())
}

pub fn metrics_path(cell: &Cell) -> String {
    format!("metrics/{}.json", cell.key())
}

pub fn mean_path(cell: &Cell) -> String {
    format!("metrics/{}.mean.csv", cell.key())
}

/// Resolve the configuration from the command-line flags.
pub fn resolve_config(path: Option<&Path>, paper: bool, seed: Option<u64>, n_rollouts: Option<usize>) -> Result<HarnessConfig> {
    let mut c = config::load(path, paper)?;
    if let Some(s) = seed {
        c.grid.seed = s;
    }
    if let Some(n) = n_rollouts {
        c.evaluation.n_rollouts = n;
    }
    c.validate()?;
    Ok(c)
}

/// Run `f` on a pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

// ---------------------------------------------------------------------------
// train

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrainSummary {
    pub trained: Vec<String>,
    pub skipped: Vec<String>,
    pub failed: Vec<String>,
}

fn is_done(run: &RunDir, cell: &Cell) -> bool {
    run.manifest.cells.get(&cell.key()).is_some_and(|r| {
        matches!(r.status, CellStatus::Trained | CellStatus::NonReaching)
            && r.agent.as_ref().is_some_and(|a| run.path(a).is_file())
    })
}

fn train_cell(config: &HarnessConfig, cell: &Cell) -> reachlab::Result<TrainedAgent> {
    let env = cell.env_config(&config.env);
    let mut opt = config.optimizer.clone();
    opt.seed = cell.seed;
    let mut agent = train::train(&env, &opt)?;
    agent.seed_lineage = vec![config.grid.seed, cell.seed];
    Ok(agent)
}

/// Train every grid cell not already completed in `out`. Cells run
/// concurrently on the current thread pool; a failing cell is recorded and
/// the rest continue.
pub fn train(config: &HarnessConfig, out: &Path) -> Result<TrainSummary> {
    let run = RunDir::open_or_create(out, config)?;
    let cells = config.grid.cells();
    let mut summary = TrainSummary::default();
    let todo: Vec<Cell> = cells
        .into_iter()
        .filter(|c| {
            let done = is_done(&run, c);
            if done {
                summary.skipped.push(c.key());
            }
            !done
        })
        .collect();
    log::info!("{} cells to train, {} already complete", todo.len(), summary.skipped.len());
    let run = Mutex::new(run);

    let outcomes: Vec<(String, bool)> = todo
        .par_iter()
        .map(|cell| {
            let key = cell.key();
            let started = Instant::now();
            log::info!("training {key}");
            let result = train_cell(config, cell);
            let elapsed = started.elapsed().as_secs_f64();
            let rel = agent_path(cell);
            let root = run.lock().expect("manifest lock").root.clone();
            let record = match result {
                Ok(agent) => match write_atomic(&root.join(&rel), agent.to_json().as_bytes()) {
                    Ok(()) => {
                        let status = if agent.reaching { CellStatus::Trained } else { CellStatus::NonReaching };
                        log::info!("{key}: {status:?} in {elapsed:.1} s");
                        CellRecord {
                            cell: cell.clone(),
                            status,
                            agent: Some(rel.clone()),
                            best_iteration: agent.best_iteration,
                            error: None,
                            metrics: None,
                        }
                    }
                    Err(e) => failed_record(cell, e.to_string()),
                },
                Err(e) => failed_record(cell, e.to_string()),
            };
            let ok = record.status != CellStatus::Failed;
            let mut run = run.lock().expect("manifest lock");
            if ok {
                run.register(&rel);
            }
            run.record_time(&format!("train/{key}"), elapsed);
            run.manifest.cells.insert(key.clone(), record);
            if let Err(e) = run.save() {
                log::error!("cannot save manifest: {e}");
            }
            (key, ok)
        })
        .collect();

    for (key, ok) in outcomes {
        if ok {
            summary.trained.push(key);
        } else {
            summary.failed.push(key);
        }
    }
    let mut run = run.into_inner().expect("manifest lock");
    run.save()?;
    if !summary.failed.is_empty() {
        return Err(HarnessError::Partial(format!(
            "{} of {} cells failed: {}",
            summary.failed.len(),
            summary.failed.len() + summary.trained.len() + summary.skipped.len(),
            summary.failed.join(", ")
        )));
    }
    Ok(summary)
}

fn failed_record(cell: &Cell, error: String) -> CellRecord {
    log::error!("{}: {error}", cell.key());
    CellRecord {
        cell: cell.clone(),
        status: CellStatus::Failed,
        agent: None,
        best_iteration: None,
        error: Some(error),
        metrics: None,
    }
}

// ---------------------------------------------------------------------------
// evaluate

/// Per-agent metrics file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub cell: Cell,
    pub agent: String,
    pub n_rollouts: usize,
    pub report: MetricsReport,
}

/// Fitts regression over the IDs of one (model, requirement) column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittsEntry {
    pub variant: ModelVariant,
    pub requirement: RequirementKind,
    /// (ID, mean MT) for every cell with at least one successful rollout.
    pub points: Vec<(f64, f64)>,
    pub fit: Option<FittsFit>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalSummary {
    pub evaluated: Vec<String>,
    pub skipped: Vec<String>,
}

fn read_agent(path: &Path) -> Result<TrainedAgent> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    TrainedAgent::from_json(&text).map_err(|e| HarnessError::Artifact(format!("{}: {e}", path.display())))
}

fn mean_header() -> Vec<&'static str> {
    std::iter::once("phase").chain(COLUMNS).collect()
}

fn mean_rows(mean: &NormalizedTrajectory) -> Vec<Vec<f64>> {
    mean.phase().into_iter().zip(&mean.rows).map(|(p, r)| std::iter::once(p).chain(r.iter().copied()).collect()).collect()
}

/// Fitts regressions for every (model, requirement) of the grid.
pub fn fitts_entries(config: &HarnessConfig, metrics: &BTreeMap<String, CellMetrics>) -> Vec<FittsEntry> {
    let mut out = Vec::new();
    for &variant in &config.grid.variants {
        for &requirement in &config.grid.requirements {
            let points: Vec<(f64, f64)> = config
                .grid
                .cells()
                .iter()
                .filter(|c| c.variant == variant && c.requirement == requirement)
                .filter_map(|c| metrics.get(&c.key()).and_then(|m| m.report.mean_mt).map(|mt| (c.id, mt)))
                .collect();
            let (fit, note) = match metrics::fitts_fit(&points) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(FittsEntry { variant, requirement, points, fit, note });
        }
    }
    out
}

/// Evaluate every trained cell of the run in `root` and write per-agent
/// metrics, mean trajectories, sample rollouts and the Fitts regressions.
pub fn evaluate(root: &Path, n_rollouts: Option<usize>) -> Result<EvalSummary> {
    let mut run = RunDir::open(root)?;
    let config = run.manifest.config.clone();
    let n = n_rollouts.unwrap_or(config.evaluation.n_rollouts);
    if n == 0 {
        return Err(HarnessError::Config("n_rollouts must be positive".into()));
    }
    let mut summary = EvalSummary::default();
    let mut all = BTreeMap::new();

    for cell in config.grid.cells() {
        let key = cell.key();
        let Some(rel) = run
            .manifest
            .cells
            .get(&key)
            .filter(|r| r.status != CellStatus::Failed)
            .and_then(|r| r.agent.clone())
            .filter(|a| run.path(a).is_file())
        else {
            log::warn!("{key}: no trained agent, skipped");
            summary.skipped.push(key);
            continue;
        };
        let started = Instant::now();
        let agent = read_agent(&run.path(&rel))?;
        let eval = metrics::evaluate_agent(&agent, n, cell.seed, &config.metrics)?;
        let r = &eval.report;
        log::info!(
            "{key}: {}/{} successful, MT {:?}, p_line {:?}, v_bell {:?}, triphasic {:?}",
            r.n_successful,
            r.n_rollouts,
            r.mean_mt,
            r.p_line,
            r.v_bell,
            r.u_triphasic
        );

        for (i, traj) in eval.rollouts.iter().take(config.evaluation.save_trajectories).enumerate() {
            let csv = format!("trajectories/{key}/rollout_{i:04}.csv");
            let path = run.path(&csv);
            std::fs::create_dir_all(path.parent().expect("has parent")).map_err(|e| HarnessError::io(&path, e))?;
            trajio::write_trajectory(&path, traj, &agent.eval_config)?;
            run.register(&csv);
            run.register(&format!("trajectories/{key}/rollout_{i:04}.json"));
        }
        if let Some(mean) = &eval.mean {
            let rel_mean = mean_path(&cell);
            let path = run.path(&rel_mean);
            std::fs::create_dir_all(path.parent().expect("has parent")).map_err(|e| HarnessError::io(&path, e))?;
            trajio::write_rows(&path, &mean_header(), mean_rows(mean))?;
            run.register(&rel_mean);
        }
        let cm = CellMetrics { cell: cell.clone(), agent: rel, n_rollouts: n, report: eval.report };
        let rel_metrics = metrics_path(&cell);
        run.write(&rel_metrics, serde_json::to_string_pretty(&cm).expect("metrics serialize").as_bytes())?;
        if let Some(record) = run.manifest.cells.get_mut(&key) {
            record.metrics = Some(rel_metrics);
        }
        run.record_time(&format!("evaluate/{key}"), started.elapsed().as_secs_f64());
        run.save()?;
        all.insert(key.clone(), cm);
        summary.evaluated.push(key);
    }

    if summary.evaluated.is_empty() {
        return Err(HarnessError::Artifact(format!("{}: no trained agents to evaluate", root.display())));
    }
    let fitts = fitts_entries(&config, &all);
    run.write(FITTS_FILE, serde_json::to_string_pretty(&fitts).expect("fitts serialize").as_bytes())?;
    run.save()?;
    if !summary.skipped.is_empty() {
        return Err(HarnessError::Partial(format!("no agent for {}", summary.skipped.join(", "))));
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// report

pub const TABLE_METRICS: [&str; 5] = ["success_rate", "mt", "p_line", "v_bell", "u_triphasic"];

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "absent".to_string(), |x| x.to_string())
}

fn table_value(metric: &str, m: &CellMetrics) -> String {
    let r = &m.report;
    match metric {
        "success_rate" => (r.n_successful as f64 / r.n_rollouts as f64).to_string(),
        "mt" => fmt_value(r.mean_mt),
        "p_line" => fmt_value(r.p_line),
        "v_bell" => fmt_value(r.v_bell),
        "u_triphasic" => fmt_value(r.u_triphasic.map(f64::from)),
        _ => unreachable!("unknown table metric {metric}"),
    }
}

/// Rows of the results table: metric, requirement, model, id, value. Every
/// grid coordinate appears; `NA` marks cells without metrics and `absent`
/// metrics that are undefined for the agent.
pub fn table_rows(config: &HarnessConfig, metrics: &BTreeMap<String, CellMetrics>, fitts: &[FittsEntry]) -> Vec<[String; 5]> {
    let mut rows = Vec::new();
    let cells = config.grid.cells();
    for metric in TABLE_METRICS {
        for &req in &config.grid.requirements {
            for &variant in &config.grid.variants {
                for cell in cells.iter().filter(|c| c.variant == variant && c.requirement == req) {
                    let value = metrics.get(&cell.key()).map_or_else(|| "NA".to_string(), |m| table_value(metric, m));
                    rows.push([
                        metric.to_string(),
                        req.label().to_string(),
                        variant.label().to_string(),
                        id_label(cell.id),
                        value,
                    ]);
                }
            }
        }
    }
    for &req in &config.grid.requirements {
        for &variant in &config.grid.variants {
            let value = fitts
                .iter()
                .find(|f| f.variant == variant && f.requirement == req)
                .map_or_else(|| "NA".to_string(), |f| fmt_value(f.fit.and_then(|x| x.r)));
            rows.push(["r_f".into(), req.label().into(), variant.label().into(), "all".into(), value]);
        }
    }
    rows
}

struct MeanCurves {
    phase: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    speed: Vec<f64>,
    act: Vec<Vec<f64>>,
}

fn read_mean(path: &Path) -> Result<MeanCurves> {
    let cols = ["phase", "hand_x", "hand_y", "speed", "a1", "a2", "a3", "a4", "a5", "a6"];
    let rows = trajio::read_columns(path, &cols)?;
    let get = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    Ok(MeanCurves { phase: get(0), x: get(1), y: get(2), speed: get(3), act: (4..10).map(get).collect() })
}

fn write_csv(run: &mut RunDir, rel: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let path = run.path(rel);
    let err = |e: csv::Error| HarnessError::Artifact(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Artifact(format!("{}: {e}", path.display())))?;
    run.write(rel, &bytes)
}

/// Build the results table and figures from the metrics in `root`.
pub fn report(root: &Path) -> Result<Vec<String>> {
    if !RunDir::exists(root) {
        return Err(HarnessError::Artifact(format!("{}: not a run directory (no manifest)", root.display())));
    }
    let mut run = RunDir::open(root)?;
    let config = run.manifest.config.clone();
    let cells = config.grid.cells();

    let mut metrics = BTreeMap::new();
    let mut means = BTreeMap::new();
    for cell in &cells {
        let path = run.path(&metrics_path(cell));
        if !path.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        let m: CellMetrics =
            serde_json::from_str(&text).map_err(|e| HarnessError::Artifact(format!("{}: {e}", path.display())))?;
        MetricsReport::from_json(&serde_json::to_string(&m.report).expect("report serializes"))
            .map_err(|e| HarnessError::Artifact(format!("{}: {e}", path.display())))?;
        let mean = run.path(&mean_path(cell));
        if mean.is_file() {
            means.insert(cell.key(), read_mean(&mean)?);
        }
        metrics.insert(cell.key(), m);
    }
    if metrics.is_empty() {
        return Err(HarnessError::Artifact(format!("{}: no metrics to report; run evaluate first", root.display())));
    }
    let fitts = fitts_entries(&config, &metrics);
    let missing: Vec<String> = cells.iter().map(Cell::key).filter(|k| !metrics.contains_key(k)).collect();

    let mut written = Vec::new();
    let rows = table_rows(&config, &metrics, &fitts).into_iter().map(|r| r.to_vec()).collect();
    write_csv(&mut run, TABLE_FILE, &["metric", "requirement", "model", "id", "value"], rows)?;
    written.push(TABLE_FILE.to_string());

    let columns: Vec<(ModelVariant, RequirementKind)> = config
        .grid
        .variants
        .iter()
        .flat_map(|&v| config.grid.requirements.iter().map(move |&r| (v, r)))
        .collect();
    let n_req = config.grid.requirements.len();
    let column_cells = |v: ModelVariant, r: RequirementKind| -> Vec<(usize, &Cell)> {
        cells.iter().filter(|c| c.variant == v && c.requirement == r).enumerate().collect()
    };
    let title = |v: ModelVariant, r: RequirementKind| format!("{} / {}", v.label(), r.label());
    let empty_note = Some("no successful rollouts".to_string());

    // Hand trajectories.
    let mut panels = Vec::new();
    let mut rows = Vec::new();
    for &(v, r) in &columns {
        let mut p = Panel {
            title: title(v, r),
            x_label: "x (m)".into(),
            y_label: "y (m)".into(),
            equal_aspect: true,
            note: empty_note.clone(),
            ..Default::default()
        };
        for (i, cell) in column_cells(v, r) {
            if let Some(m) = means.get(&cell.key()) {
                p.series.push(Series::line(id_label(cell.id), m.x.iter().copied().zip(m.y.iter().copied()).collect(), PALETTE[i % 6]));
                for k in 0..m.phase.len() {
                    rows.push(vec![v.label().into(), r.label().into(), id_label(cell.id), m.phase[k].to_string(), m.x[k].to_string(), m.y[k].to_string()]);
                }
            }
        }
        let env = config.env.with_mode(EnvMode::Evaluation);
        if !p.series.is_empty() {
            if let Ok(goal) = env.evaluation_goal() {
                p.series.push(Series::line("", vec![env.initial_hand(), goal].into_iter().map(|q| (q[0], q[1])).collect(), "#888").dashed());
            }
        }
        panels.push(p);
    }
    emit_figure(&mut run, &mut written, "fig_trajectories", "Mean hand paths", &panels, n_req,
        &["model", "requirement", "id", "phase", "hand_x", "hand_y"], rows)?;

    // Speed profiles with Gaussian fits.
    let mut panels = Vec::new();
    let mut rows = Vec::new();
    for &(v, r) in &columns {
        let mut p = Panel { title: title(v, r), x_label: "normalized time".into(), y_label: "speed (m/s)".into(), note: empty_note.clone(), ..Default::default() };
        for (i, cell) in column_cells(v, r) {
            let Some(m) = means.get(&cell.key()) else { continue };
            let fit = metrics.get(&cell.key()).and_then(|c| c.report.bell_fit);
            p.series.push(Series::line(id_label(cell.id), m.phase.iter().copied().zip(m.speed.iter().copied()).collect(), PALETTE[i % 6]));
            let fitted: Option<Vec<f64>> = fit.map(|f| m.phase.iter().map(|&t| metrics::gaussian(t, f.amplitude, f.mu, f.sigma)).collect());
            if let Some(g) = &fitted {
                p.series.push(Series::line("", m.phase.iter().copied().zip(g.iter().copied()).collect(), PALETTE[i % 6]).dashed());
            }
            for k in 0..m.phase.len() {
                let g = fitted.as_ref().map_or_else(|| "absent".to_string(), |g| g[k].to_string());
                rows.push(vec![v.label().into(), r.label().into(), id_label(cell.id), m.phase[k].to_string(), m.speed[k].to_string(), g]);
            }
        }
        panels.push(p);
    }
    emit_figure(&mut run, &mut written, "fig_speed", "Speed profiles (dashed: Gaussian fit)", &panels, n_req,
        &["model", "requirement", "id", "phase", "speed", "gaussian_fit"], rows)?;

    // Activation traces per antagonist pair.
    let mut panels = Vec::new();
    let mut rows = Vec::new();
    for &(v, r) in &columns {
        for pair in MusclePair::ALL {
            let mut p = Panel {
                title: format!("{} / pair {} (dashed: extensor)", title(v, r), pair.label()),
                x_label: "normalized time".into(),
                y_label: "activation".into(),
                note: empty_note.clone(),
                ..Default::default()
            };
            let (fi, ei) = (pair.flexor().index(), pair.extensor().index());
            for (i, cell) in column_cells(v, r) {
                let Some(m) = means.get(&cell.key()) else { continue };
                let color = PALETTE[i % 6];
                p.series.push(Series::line(id_label(cell.id), m.phase.iter().copied().zip(m.act[fi].iter().copied()).collect(), color));
                p.series.push(Series::line("", m.phase.iter().copied().zip(m.act[ei].iter().copied()).collect(), color).dashed());
                for k in 0..m.phase.len() {
                    rows.push(vec![
                        v.label().into(),
                        r.label().into(),
                        id_label(cell.id),
                        pair.label().into(),
                        m.phase[k].to_string(),
                        m.act[fi][k].to_string(),
                        m.act[ei][k].to_string(),
                    ]);
                }
            }
            panels.push(p);
        }
    }
    emit_figure(&mut run, &mut written, "fig_activations", "Muscle activations", &panels, 3,
        &["model", "requirement", "id", "pair", "phase", "flexor", "extensor"], rows)?;

    // Fitts scatter and regression lines.
    let mut panels = Vec::new();
    let mut rows = Vec::new();
    for &v in &config.grid.variants {
        let mut p = Panel { title: v.label().into(), x_label: "ID (bits)".into(), y_label: "MT (s)".into(), note: empty_note.clone(), ..Default::default() };
        for (i, f) in fitts.iter().filter(|f| f.variant == v).enumerate() {
            let color = PALETTE[i % 6];
            let label = match f.fit.and_then(|x| x.r) {
                Some(rf) => format!("{} R_F={rf:.3}", f.requirement.label()),
                None => f.requirement.label().to_string(),
            };
            p.series.push(Series::line(label, f.points.clone(), color).markers());
            if let Some(fit) = f.fit {
                let lo = f.points.iter().map(|q| q.0).fold(f64::INFINITY, f64::min);
                let hi = f.points.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max);
                p.series.push(Series::line("", vec![(lo, fit.intercept + fit.slope * lo), (hi, fit.intercept + fit.slope * hi)], color));
            }
            for &(id, mt) in &f.points {
                rows.push(vec![
                    v.label().into(),
                    f.requirement.label().into(),
                    id.to_string(),
                    mt.to_string(),
                    f.fit.map_or_else(|| "absent".into(), |x| x.intercept.to_string()),
                    f.fit.map_or_else(|| "absent".into(), |x| x.slope.to_string()),
                    fmt_value(f.fit.and_then(|x| x.r)),
                ]);
            }
        }
        panels.push(p);
    }
    emit_figure(&mut run, &mut written, "fig_fitts", "Movement time vs index of difficulty", &panels, 2,
        &["model", "requirement", "id", "mt", "intercept", "slope", "r_f"], rows)?;

    run.save()?;
    if !missing.is_empty() {
        return Err(HarnessError::Partial(format!("report has gaps for {}", missing.join(", "))));
    }
    Ok(written)
}

#[allow(clippy::too_many_arguments)]
fn emit_figure(
    run: &mut RunDir,
    written: &mut Vec<String>,
    name: &str,
    title: &str,
    panels: &[Panel],
    cols: usize,
    header: &[&str],
    rows: Vec<Vec<String>>,
) -> Result<()> {
    let svg_rel = format!("report/{name}.svg");
    let csv_rel = format!("report/{name}.csv");
    run.write(&svg_rel, svg::render(title, panels, cols).as_bytes())?;
    write_csv(run, &csv_rel, header, rows)?;
    written.push(svg_rel);
    written.push(csv_rel);
    Ok(())
}

// ---------------------------------------------------------------------------
// rollout

/// Record one evaluation-mode episode to `out/rollout.csv` (plus sidecar).
/// Without an agent the zero-parameter policy is used.
pub fn rollout(config: &HarnessConfig, out: &Path, agent: Option<&Path>, seed: u64) -> Result<reachlab::trajectory::Trajectory> {
    let (params, env) = match agent {
        Some(p) => {
            let a = read_agent(p)?;
            (a.params, a.eval_config)
        }
        None => (PolicyParams::zeros(config.optimizer.policy.clone()), config.env.with_mode(EnvMode::Evaluation)),
    };
    let env = env.with_mode(EnvMode::Evaluation);
    let (traj, ret) = policy::rollout(&params, &env, seed)?;
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    trajio::write_trajectory(&out.join("rollout.csv"), &traj, &env)?;
    log::info!(
        "{} steps, success {}, return {ret:.3}, final speed {:.4} m/s",
        traj.n_steps(),
        traj.success,
        traj.rows.last().map_or(0.0, |r| r[col::SPEED])
    );
    Ok(traj)
}
