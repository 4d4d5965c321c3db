use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mhrecon::bem::FarFieldDataset;
use mhrecon::mesh::{load_obj, save_obj};
use mhrecon::shapes;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhrecon")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("{key} missing in {text}"))
}

fn write_mesh(dir: &Path, name: &str, mesh: &mhrecon::ControlMesh) -> String {
    let p = dir.join(name);
    save_obj(mesh, &p).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("reconstruct"));
}

#[test]
fn usage_errors_exit_two() {
    let o = run(&["metrics", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error: kind=UsageError"), "{}", stderr(&o));
}

#[test]
fn missing_input_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.obj");
    let o = run(&["compress", "--mesh", "/nonexistent/mesh.obj", "--mh-count", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error: kind=IoError message="), "{}", stderr(&o));
}

#[test]
fn metrics_of_identical_meshes_vanish() {
    let dir = TempDir::new().unwrap();
    let m = write_mesh(dir.path(), "a.obj", &shapes::bumpy_cube(1));
    let o = run(&["metrics", "--mesh", &m, "--reference", &m]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(value(&text, "S_err"), 0.0);
    assert!(value(&text, "hausdorff") < 1e-12);
}

#[test]
fn full_rank_compression_reproduces_the_mesh() {
    let dir = TempDir::new().unwrap();
    let mesh = shapes::bumpy_cube(1);
    let m = write_mesh(dir.path(), "a.obj", &mesh);
    let out = dir.path().join("b.obj");
    let o = run(&["compress", "--mesh", &m, "--mh-count", &mesh.num_vertices().to_string(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let back = load_obj(&out).unwrap();
    let err = back.vertices().iter().zip(mesh.vertices()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn forward_writes_a_dataset() {
    let dir = TempDir::new().unwrap();
    let m = write_mesh(dir.path(), "s.obj", &shapes::limit_fitted_sphere(1, 0.5));
    let out = dir.path().join("ff.txt");
    let o = run(&["forward", "--mesh", &m, "--freq", "100,150", "--incidences", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let data = FarFieldDataset::from_text(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!((data.wavenumbers.len(), data.incidences.len(), data.observations.len()), (2, 2, 26));
    assert!(data.values.iter().all(|v| v.norm() > 0.0));
}

#[test]
fn synth_then_reconstruct() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let target = write_mesh(p, "target.obj", &shapes::limit_fitted_ellipsoid(1, [1.2, 1.0, 0.9]));
    let start = write_mesh(p, "start.obj", &shapes::limit_fitted_sphere(1, 1.0));
    let config = p.join("run.toml");
    fs::write(
        &config,
        "max_iterations = 1\nseed = 4\n\n[[stage]]\nfrequencies_hz = [54.6]\nincidences = 2\nmh_count = 3\nband_size = 3\n",
    )
    .unwrap();
    let goals = p.join("goals");
    let o = run(&["synth", "--mesh", &target, "--config", config.to_str().unwrap(), "--out", goals.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let goal = goals.join("goal_stage0.txt");
    assert!(goal.exists());

    let out = p.join("run");
    let o = run(&[
        "reconstruct",
        "--config",
        config.to_str().unwrap(),
        "--goal",
        goal.to_str().unwrap(),
        "--mesh",
        &start,
        "--reference",
        &target,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(value(&stdout(&o), "J ratio") <= 1.0);
    for f in ["final.obj", "convergence.csv", "config.resolved.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("stage,band,iteration,J,S_err,Hausdorff,wall_time_s"));
}

#[test]
fn bad_config_is_rejected() {
    let dir = TempDir::new().unwrap();
    let m = write_mesh(dir.path(), "s.obj", &shapes::limit_fitted_sphere(1, 1.0));
    let config = dir.path().join("bad.toml");
    fs::write(&config, "[[stage]]\nfrequencies_hz = [50.0]\nincidences = 1\nmh_count = 0\nband_size = 1\n").unwrap();
    let o = run(&["synth", "--mesh", &m, "--config", config.to_str().unwrap(), "--out", dir.path().join("g").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: kind="));
}
