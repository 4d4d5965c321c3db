//! Banded optimisation and the multi-stage schedule.

use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use nalgebra::DMatrix;
use serde::Serialize;

use super::metrics::{hausdorff_distance, surface_area_error, SampledSurface, TriangleGrid};
use super::optimizer::{GradientDescent, Optimizer};
use super::{Objective, ReconstructionConfig, SpectralShape};
use crate::bem::FarFieldDataset;
use crate::error::{Error, Result};
use crate::mesh::{save_obj, ControlMesh};
use crate::mhb::band_partition;
use crate::subdivision::limit_area;
use crate::vsrm::decimate;

/// Samples per patch for the Hausdorff column of the log.
const LOG_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BandStatus {
    /// `J` dropped below the tolerance.
    Converged,
    /// Relative improvement over the stagnation window fell below its threshold.
    Stagnated,
    MaxIterations,
    /// The line search found no decrease.
    Stalled,
}

impl fmt::Display for BandStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One convergence-log line. Metrics are `NaN` without a reference shape.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRow {
    pub stage: usize,
    pub band: usize,
    pub iteration: usize,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "S_err")]
    pub s_err: f64,
    #[serde(rename = "Hausdorff")]
    pub hausdorff: f64,
    pub wall_time_s: f64,
}

/// Mutable optimisation state of the current stage.
#[derive(Debug)]
pub struct ReconstructionState {
    pub stage: usize,
    pub band: usize,
    /// Accepted steps so far, over the whole run.
    pub iteration: usize,
    pub shape: SpectralShape,
    pub beta: DMatrix<f64>,
    pub mesh: ControlMesh,
    pub j: f64,
    pub log: Vec<LogRow>,
}

impl ReconstructionState {
    /// State at the starting coefficients of `shape`.
    pub fn new(shape: SpectralShape, stage: usize, j: f64) -> Self {
        let beta = shape.initial().clone();
        let mesh = shape.template().clone();
        Self { stage, band: 0, iteration: 0, shape, beta, mesh, j, log: Vec::new() }
    }
}

/// Reference shape and clock used to fill the log.
pub struct Monitor<'a> {
    pub reference: Option<&'a ControlMesh>,
    pub start: Instant,
}

impl<'a> Monitor<'a> {
    pub fn new(reference: Option<&'a ControlMesh>) -> Self {
        Self { reference, start: Instant::now() }
    }

    fn row(&self, mesh: &ControlMesh, stage: usize, band: usize, iteration: usize, j: f64) -> Result<LogRow> {
        let (s_err, hausdorff) = match self.reference {
            Some(r) => (surface_area_error(mesh, r)?, hausdorff_distance(mesh, r, LOG_SAMPLES)?),
            None => (f64::NAN, f64::NAN),
        };
        let wall_time_s = self.start.elapsed().as_secs_f64();
        Ok(LogRow { stage, band, iteration, j, s_err, hausdorff, wall_time_s })
    }

    fn record(&self, state: &mut ReconstructionState) -> Result<()> {
        let row = self.row(&state.mesh, state.stage, state.band, state.iteration, state.j)?;
        state.log.push(row);
        Ok(())
    }
}

/// Default FD step: `1e-3 ×` bounding-box diagonal.
pub fn default_fd_step(mesh: &ControlMesh) -> f64 {
    1e-3 * mesh.bounding_box_diagonal()
}

/// Descend on the coefficient rows in `band` until convergence, stagnation,
/// a stalled line search or the iteration limit. Appends one log row per
/// accepted step.
pub fn optimize_band(
    state: &mut ReconstructionState,
    goal: &FarFieldDataset,
    band: Range<usize>,
    cfg: &ReconstructionConfig,
    optimizer: &mut dyn Optimizer,
    monitor: &Monitor,
) -> Result<BandStatus> {
    optimizer.reset();
    if state.j < cfg.tolerance {
        return Ok(BandStatus::Converged);
    }
    let tau = cfg.fd_step.unwrap_or_else(|| default_fd_step(state.shape.template()));
    let objective = Objective::new(&state.shape, goal, cfg.alpha);
    let mut history = vec![state.j];
    for _ in 0..cfg.max_iterations {
        let g = objective.fd_gradient(&state.beta, state.j, band.clone(), tau)?;
        let Some(step) = optimizer.step(&mut |b| objective.eval(b), &state.beta, state.j, &g)? else {
            return Ok(BandStatus::Stalled);
        };
        debug_assert!(step.value <= state.j);
        state.mesh = objective.shape.mesh(&step.x)?;
        state.beta = step.x;
        state.j = step.value;
        state.iteration += 1;
        let row = monitor.row(&state.mesh, state.stage, state.band, state.iteration, state.j)?;
        state.log.push(row);
        if state.j < cfg.tolerance {
            return Ok(BandStatus::Converged);
        }
        history.push(state.j);
        if history.len() > cfg.stagnation_window {
            let old = history[history.len() - 1 - cfg.stagnation_window];
            if (old - state.j) < cfg.stagnation_tol * old {
                return Ok(BandStatus::Stagnated);
            }
        }
    }
    Ok(BandStatus::MaxIterations)
}

/// Refine `mesh` to about `target` vertices while keeping its limit surface:
/// one Loop subdivision, decimation down to the budget, then control
/// points fitted so the new limit positions lie on the old limit surface.
pub fn refine_mesh(mesh: &ControlMesh, target: usize) -> Result<ControlMesh> {
    let sub = mesh.loop_subdivide()?;
    if target >= sub.num_vertices() {
        return Ok(sub);
    }
    let (pos, faces) = decimate(sub.vertices().to_vec(), sub.faces().to_vec(), target);
    let coarse = ControlMesh::new(pos, faces)?;
    let surface = SampledSurface::new(mesh, 28)?;
    let grid = TriangleGrid::new(&surface);
    let targets: Vec<_> = coarse.limit_positions().iter().map(|p| grid.closest(p).0).collect();
    let fitted = coarse.fit_limit_positions(&targets)?;
    fitted.check_geometry()?;
    Ok(fitted)
}

/// Summary of one stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: usize,
    pub vertices: usize,
    pub mh_count: usize,
    pub initial_j: f64,
    pub final_j: f64,
    pub band_status: Vec<BandStatus>,
}

#[derive(Debug)]
pub struct ReconstructionReport {
    pub mesh: ControlMesh,
    pub beta: DMatrix<f64>,
    pub stages: Vec<StageReport>,
    pub log: Vec<LogRow>,
}

impl ReconstructionReport {
    pub fn initial_j(&self) -> f64 {
        self.stages.first().map_or(f64::NAN, |s| s.initial_j)
    }

    pub fn final_j(&self) -> f64 {
        self.stages.last().map_or(f64::NAN, |s| s.final_j)
    }
}

pub fn write_log_csv(rows: &[LogRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Mesh entering `stage`: the previous result refined by the stage's vertex
/// factor, or by repeated Loop subdivision until edges meet λ/7.
fn stage_mesh(cfg: &ReconstructionConfig, stage: usize, current: &ControlMesh) -> Result<ControlMesh> {
    if let Some(factor) = cfg.stages[stage].vertex_factor {
        if factor < 1.0 {
            warn!("stage {stage}: vertex_factor {factor} < 1 ignored; meshes are never coarsened");
        }
        if factor <= 1.0 {
            return Ok(current.clone());
        }
        let target = (factor * current.num_vertices() as f64).round() as usize;
        return refine_mesh(current, target);
    }
    let kmax = cfg.wavenumbers(stage).into_iter().fold(0.0, f64::max);
    let limit = 2.0 * std::f64::consts::PI / kmax / 7.0;
    let mut mesh = current.clone();
    while mesh.mean_edge_length() > limit {
        if mesh.num_faces() > 20_000 {
            warn!("stage {stage}: stopping refinement at {} faces above λ/7", mesh.num_faces());
            break;
        }
        mesh = mesh.loop_subdivide()?;
    }
    Ok(mesh)
}

/// Run every stage and band of `cfg` from `initial`, with one goal dataset
/// per stage. `reference` (if known) fills the metric columns of the log.
/// With `out_dir`, the log and band checkpoints are written as they are
/// produced; on failure the last valid mesh is saved as `partial.obj`.
pub fn run_multiresolution(
    cfg: &ReconstructionConfig,
    goals: &[FarFieldDataset],
    initial: &ControlMesh,
    reference: Option<&ControlMesh>,
    out_dir: Option<&Path>,
) -> Result<ReconstructionReport> {
    cfg.validate()?;
    if goals.len() != cfg.stages.len() {
        return Err(Error::Config(format!("{} stages but {} goal datasets", cfg.stages.len(), goals.len())));
    }
    for (s, goal) in goals.iter().enumerate() {
        let want = cfg.wavenumbers(s);
        let same = want.len() == goal.wavenumbers.len()
            && want.iter().zip(&goal.wavenumbers).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
        if !same {
            return Err(Error::Config(format!(
                "stage {s}: goal wavenumbers {:?} do not match configured {:?}",
                goal.wavenumbers, want
            )));
        }
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let monitor = Monitor::new(reference);
    let mut current = initial.clone();
    let mut log = Vec::new();
    let mut stages = Vec::new();
    let mut iteration = 0;
    let mut beta = DMatrix::zeros(0, 3);
    for (s, goal) in goals.iter().enumerate() {
        let result = run_stage(cfg, s, goal, &current, &monitor, out_dir, &mut log, &mut iteration);
        match result {
            Ok((state, report)) => {
                current = state.mesh;
                beta = state.beta;
                stages.push(report);
            }
            Err(e) => {
                if let Some(dir) = out_dir {
                    let partial = dir.join("partial.obj");
                    if !partial.exists() {
                        save_obj(&current, partial)?;
                    }
                    write_log_csv(&log, &dir.join("convergence.csv"))?;
                }
                return Err(e);
            }
        }
    }
    if let Some(dir) = out_dir {
        save_obj(&current, dir.join("final.obj"))?;
        write_log_csv(&log, &dir.join("convergence.csv"))?;
    }
    Ok(ReconstructionReport { mesh: current, beta, stages, log })
}

#[allow(clippy::too_many_arguments)]
fn run_stage(
    cfg: &ReconstructionConfig,
    s: usize,
    goal: &FarFieldDataset,
    current: &ControlMesh,
    monitor: &Monitor,
    out_dir: Option<&Path>,
    log: &mut Vec<LogRow>,
    iteration: &mut usize,
) -> Result<(ReconstructionState, StageReport)> {
    let sc = &cfg.stages[s];
    let mesh = stage_mesh(cfg, s, current)?;
    let shape = SpectralShape::new(&mesh, sc.mh_count)?;
    let j0 = Objective::new(&shape, goal, cfg.alpha).eval(shape.initial())?;
    info!("stage {s}: {} vertices, {} harmonics, J = {j0:.6e}", mesh.num_vertices(), shape.len());
    let mut state = ReconstructionState::new(shape, s, j0);
    state.iteration = *iteration;
    monitor.record(&mut state)?;

    let diag = mesh.bounding_box_diagonal();
    let mut optimizer = GradientDescent::new(0.05 * diag * limit_area(&mesh)?.sqrt());
    let mut band_status = Vec::new();
    for (b, band) in band_partition(state.shape.len(), sc.band_size).into_iter().enumerate() {
        state.band = b;
        let status = optimize_band(&mut state, goal, band.clone(), cfg, &mut optimizer, monitor);
        let status = match status {
            Ok(st) => st,
            Err(e) => {
                log.append(&mut state.log);
                if let Some(dir) = out_dir {
                    save_obj(&state.mesh, dir.join("partial.obj"))?;
                }
                return Err(e);
            }
        };
        info!("stage {s} band {b} ({band:?}): {status}, J = {:.6e}", state.j);
        band_status.push(status);
        if let Some(dir) = out_dir {
            save_obj(&state.mesh, dir.join(format!("stage{s}_band{b}.obj")))?;
            let mut rows = log.clone();
            rows.extend(state.log.iter().cloned());
            write_log_csv(&rows, &dir.join("convergence.csv"))?;
        }
    }
    *iteration = state.iteration;
    log.append(&mut state.log);
    let report = StageReport {
        stage: s,
        vertices: state.mesh.num_vertices(),
        mh_count: state.shape.len(),
        initial_j: j0,
        final_j: state.j,
        band_status,
    };
    Ok((state, report))
}
