use std::path::Path;
use std::process::{Command, Output};

fn nematic(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nematic"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const TRIVIAL: &str = "[scenario]\nname = \"disk_trivial\"\nepsilon = 0.2\nresolution = 20\n\n[verify]\nchecks = [\"el_residual\"]\n";

#[test]
fn coarse_grid_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &TRIVIAL.replace("resolution = 20", "resolution = 8"));
    let out = nematic(&["run", &cfg], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon >= 2h"));
}

#[test]
fn unknown_key_and_missing_file_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{TRIVIAL}colour = 3\n"));
    assert_eq!(nematic(&["run", &cfg], dir.path()).status.code(), Some(2));
    assert_eq!(nematic(&["run", "/nonexistent.toml"], dir.path()).status.code(), Some(2));
}

#[test]
fn empty_sweep_list_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TRIVIAL);
    let out = nematic(&["sweep", &cfg, "--eps", ""], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_rejects_any_coarse_member_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TRIVIAL);
    let out_dir = dir.path().join("out");
    let out = nematic(&["sweep", &cfg, "--eps", "0.2,0.1,0.05"], &out_dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.join("eps_0.2").exists());
}

#[test]
fn run_writes_all_outputs_with_config_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TRIVIAL);
    let out_dir = dir.path().join("out");
    let out = nematic(&["--threads", "1", "run", &cfg], &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trace.csv", "defects.csv", "verify.csv"] {
        let text = std::fs::read_to_string(out_dir.join(f)).unwrap();
        assert!(text.contains("disk_trivial"), "{f} lacks the config echo");
    }
    assert!(std::fs::read_to_string(out_dir.join("field.vtk")).unwrap().starts_with("# vtk DataFile"));
}

#[test]
fn failed_check_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[scenario]\nname = \"disk\"\nepsilon = 0.2\nresolution = 20\n\n[solver]\nmax_iters = 3\n";
    let cfg = write_config(dir.path(), text);
    assert_eq!(nematic(&["run", &cfg], &dir.path().join("a")).status.code(), Some(3));
    // a point core carries far less than the line density
    let text = "[scenario]\nname = \"hedgehog\"\nepsilon = 0.25\nresolution = 16\n\n[verify]\nchecks = [\"line_density\"]\nradius = 0.25\n";
    let cfg = write_config(dir.path(), text);
    assert_eq!(nematic(&["run", &cfg], &dir.path().join("b")).status.code(), Some(4));
}

#[test]
fn dumps_follow_the_cadence() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[scenario]\nname = \"disk\"\nepsilon = 0.2\nresolution = 20\n\n[outputs]\ndump_every = 10\n";
    let cfg = write_config(dir.path(), text);
    let out_dir = dir.path().join("out");
    assert_eq!(nematic(&["run", &cfg], &out_dir).status.code(), Some(0));
    assert!(out_dir.join("field_00000000.vtk").exists());
    assert!(out_dir.join("field_00000010.vtk").exists());
}
