use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use mhrecon::bem::FarFieldDataset;
use mhrecon::mesh::{load_obj, save_obj};
use mhrecon::mhb::{build_basis, mht_forward, mht_inverse_unchecked, write_spectrum, ShapeSpectrum};
use mhrecon::recon::{
    add_noise, hausdorff_distance, run_multiresolution, surface_area_error, synthesize_goal, ForwardModel, Incidences,
    ReconstructionConfig,
};
use mhrecon::vsrm::{backproject, extract_point_cloud, initial_mesh, GridSpec};
use mhrecon::{Error, Result, Vec3};

/// Acoustic shape reconstruction on Loop subdivision surfaces.
#[derive(Parser, Debug)]
#[command(name = "mhrecon", version, about)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the scattering problem and write complex far fields.
    Forward(ForwardArgs),
    /// Compute manifold harmonics and write the shape spectrum.
    Mhb(MhbArgs),
    /// Low-pass a mesh through its first M harmonics.
    Compress(CompressArgs),
    /// Generate (noisy) goal far fields for every stage of a schedule.
    Synth(SynthArgs),
    /// Build an initial mesh from complex far fields by back-projection.
    Init(InitArgs),
    /// Run the multi-stage reconstruction.
    Reconstruct(ReconstructArgs),
    /// Surface-area error and Hausdorff distance between two meshes.
    Metrics(MetricsArgs),
}

#[derive(Args, Debug)]
struct WaveArgs {
    /// Frequencies in Hz, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    freq: Vec<f64>,
    /// Number of incident directions (Fibonacci coverage).
    #[arg(long, default_value_t = 1)]
    incidences: usize,
    /// Number of observation directions (26 selects the Lebedev rule).
    #[arg(long, default_value_t = 26)]
    observations: usize,
    /// Coupling parameter in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Speed of sound in m/s.
    #[arg(long, default_value_t = 343.0)]
    sound_speed: f64,
}

impl WaveArgs {
    fn config(&self) -> Result<ReconstructionConfig> {
        let mut cfg = ReconstructionConfig::single_stage(self.freq.clone(), Incidences::Count(self.incidences), 1, 1);
        cfg.alpha = self.alpha;
        cfg.observations = self.observations;
        cfg.sound_speed = self.sound_speed;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct ForwardArgs {
    /// Control mesh (OBJ).
    #[arg(long)]
    mesh: PathBuf,
    #[command(flatten)]
    waves: WaveArgs,
    /// Output far-field file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MhbArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Number of harmonics.
    #[arg(long)]
    mh_count: usize,
    /// Band size recorded in the spectrum file (default: one band).
    #[arg(long)]
    band_size: Option<usize>,
    /// Output spectrum file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompressArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Harmonics kept.
    #[arg(long)]
    mh_count: usize,
    /// Output mesh (OBJ).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Target mesh (OBJ).
    #[arg(long)]
    mesh: PathBuf,
    /// Run configuration (TOML); one goal file is written per stage.
    #[arg(long, conflicts_with = "freq")]
    config: Option<PathBuf>,
    /// Frequencies in Hz for a single stage when no configuration is given.
    #[arg(long, value_delimiter = ',', required_unless_present = "config")]
    freq: Vec<f64>,
    /// Incident directions for the single-stage form.
    #[arg(long, default_value_t = 1)]
    incidences: usize,
    /// Signal-to-noise ratio in dB (overrides the configuration; omit for clean data).
    #[arg(long)]
    snr: Option<f64>,
    /// Noise seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InitArgs {
    /// Complex far-field file.
    #[arg(long)]
    goal: PathBuf,
    /// Relative intensity threshold in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Voxels per side.
    #[arg(long, default_value_t = 48)]
    grid: usize,
    /// Edge length of the cubic grid, centred at the origin (m).
    #[arg(long, default_value_t = 4.0)]
    extent: f64,
    /// Control-vertex budget of the mesh.
    #[arg(long, default_value_t = 162)]
    target_vertices: usize,
    /// Also write the thresholded point cloud (XYZ).
    #[arg(long)]
    cloud: Option<PathBuf>,
    /// Output mesh (OBJ).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Goal far fields, one file per stage in order.
    #[arg(long, required = true, num_args = 1..)]
    goal: Vec<PathBuf>,
    /// Initial mesh (OBJ).
    #[arg(long)]
    mesh: PathBuf,
    /// Known target shape; enables the S_err and Hausdorff log columns.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Override the harmonic count of every stage.
    #[arg(long)]
    mh_count: Option<usize>,
    /// Override the band size of every stage.
    #[arg(long)]
    band_size: Option<usize>,
    /// Override the configured seed (recorded in the resolved configuration).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the log, checkpoints and final mesh.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Candidate mesh (OBJ).
    #[arg(long)]
    mesh: PathBuf,
    /// Reference mesh (OBJ).
    #[arg(long)]
    reference: PathBuf,
    /// Limit-surface samples per patch.
    #[arg(long, default_value_t = 28)]
    samples: usize,
    /// Also write the metrics as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_dataset(path: &Path) -> Result<FarFieldDataset> {
    FarFieldDataset::from_text(fs::File::open(path)?)
}

fn forward(a: &ForwardArgs) -> Result<()> {
    let mesh = load_obj(&a.mesh)?;
    let cfg = a.waves.config()?;
    let model = ForwardModel::new(cfg.wavenumbers(0), cfg.stages[0].incidences.directions(), cfg.observation_set(), cfg.alpha);
    let data = synthesize_goal(&mesh, &model)?;
    fs::write(&a.out, data.to_text())?;
    Ok(())
}

fn mhb(a: &MhbArgs) -> Result<()> {
    let mesh = load_obj(&a.mesh)?;
    let (mats, basis) = build_basis(&mesh, a.mh_count)?;
    let mut spectrum = mht_forward(&mesh, &basis, &mats)?;
    if let Some(n) = a.band_size {
        spectrum = spectrum.with_band_size(n);
    }
    fs::write(&a.out, write_spectrum(&spectrum, &basis.eigenvalues, &basis.mesh_hash)?)?;
    println!("eigenvalues {:?}", &basis.eigenvalues[..basis.len().min(8)]);
    Ok(())
}

fn compress(a: &CompressArgs) -> Result<()> {
    let mesh = load_obj(&a.mesh)?;
    let (mats, basis) = build_basis(&mesh, a.mh_count)?;
    let spectrum: ShapeSpectrum = mht_forward(&mesh, &basis, &mats)?;
    let out = mht_inverse_unchecked(&spectrum, &basis, &mesh)?;
    save_obj(&out, &a.out)?;
    out.check_geometry()?;
    println!("S_err {:.17e}", surface_area_error(&out, &mesh)?);
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mesh = load_obj(&a.mesh)?;
    let mut cfg = match &a.config {
        Some(p) => ReconstructionConfig::load(p)?,
        None => ReconstructionConfig::single_stage(a.freq.clone(), Incidences::Count(a.incidences), 1, 1),
    };
    if a.snr.is_some() {
        cfg.snr_db = a.snr;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    fs::create_dir_all(&a.out)?;
    for s in 0..cfg.stages.len() {
        let model = ForwardModel::new(cfg.wavenumbers(s), cfg.stages[s].incidences.directions(), cfg.observation_set(), cfg.alpha);
        let clean = synthesize_goal(&mesh, &model)?;
        let noisy = add_noise(&clean, cfg.snr_db, cfg.seed.wrapping_add(s as u64));
        let path = a.out.join(format!("goal_stage{s}.txt"));
        fs::write(&path, noisy.to_text())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn init(a: &InitArgs) -> Result<()> {
    let data = load_dataset(&a.goal)?;
    let spec = GridSpec::cube(Vec3::zeros(), a.extent, a.grid)?;
    let grid = backproject(&data, &spec)?;
    if let Some(p) = &a.cloud {
        fs::write(p, extract_point_cloud(&grid, a.threshold)?.to_xyz())?;
    }
    let mesh = initial_mesh(&grid, a.threshold, a.target_vertices)?;
    save_obj(&mesh, &a.out)?;
    println!("vertices {} faces {}", mesh.num_vertices(), mesh.num_faces());
    Ok(())
}

fn reconstruct(a: &ReconstructArgs) -> Result<()> {
    let mut cfg = ReconstructionConfig::load(&a.config)?;
    for s in &mut cfg.stages {
        if let Some(m) = a.mh_count {
            s.mh_count = m;
        }
        if let Some(b) = a.band_size {
            s.band_size = b;
        }
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let resolved = cfg.to_toml();
    info!("resolved configuration:\n{resolved}");
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("config.resolved.toml"), &resolved)?;

    let goals = a.goal.iter().map(|p| load_dataset(p)).collect::<Result<Vec<_>>>()?;
    let initial = load_obj(&a.mesh)?;
    let reference = a.reference.as_ref().map(load_obj).transpose()?;
    let report = run_multiresolution(&cfg, &goals, &initial, reference.as_ref(), Some(&a.out))?;
    for s in &report.stages {
        println!(
            "stage {} vertices {} harmonics {} J {:.17e} -> {:.17e} bands {:?}",
            s.stage, s.vertices, s.mh_count, s.initial_j, s.final_j, s.band_status
        );
    }
    println!("J ratio {:.17e}", report.final_j() / report.initial_j());
    Ok(())
}

fn metrics(a: &MetricsArgs) -> Result<()> {
    let cand = load_obj(&a.mesh)?;
    let reference = load_obj(&a.reference)?;
    if a.samples < 3 {
        return Err(Error::Validation(format!("need at least 3 samples per patch, got {}", a.samples)));
    }
    let s_err = surface_area_error(&cand, &reference)?;
    let h = hausdorff_distance(&cand, &reference, a.samples)?;
    let rel = h / reference.bounding_box_diagonal();
    println!("S_err {s_err:.17e}");
    println!("hausdorff {h:.17e}");
    println!("hausdorff_relative {rel:.17e}");
    if let Some(p) = &a.out {
        fs::write(p, format!("S_err,hausdorff,hausdorff_relative\n{s_err:.17e},{h:.17e},{rel:.17e}\n"))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Forward(a) => forward(a),
        Command::Mhb(a) => mhb(a),
        Command::Compress(a) => compress(a),
        Command::Synth(a) => synth(a),
        Command::Init(a) => init(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Metrics(a) => metrics(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let msg = e.kind().to_string();
            eprintln!("error: kind=UsageError message={msg}");
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: kind=UsageError message={e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: kind={} message={}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::from(if e.is_validation() { 3 } else { 4 })
        }
    }
}
