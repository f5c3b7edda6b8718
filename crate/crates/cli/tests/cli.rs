//! Black-box tests of the `motiondepth` binary: artifact layout, config
//! archiving, determinism of reruns and exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_motiondepth"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

/// Small/fast base config used throughout.
const SMALL: &str = r#"{
  "seed": 7,
  "scene_count": 2,
  "scene": {"primitive_count": 6, "box_half_extent": 50.0, "size_range": [2.0, 8.0], "clear_radius": 2.5},
  "intrinsics": {"width": 64, "height": 64, "focal_px": 32.0, "principal_point": [32.0, 32.0]}
}"#;

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn generate_layout_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("ds");
    let status = bin().args(["generate", "--config"]).arg(&cfg).arg("--out").arg(&out)
        .args(["--scenes", "5"]).status().unwrap();
    assert!(status.success());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenes"].as_array().unwrap().len(), 5);
    // Ten frames per scene by default.
    for i in 0..10 {
        assert!(out.join(format!("scene_0000/frame_{i:03}.pgm")).exists());
        assert!(out.join(format!("scene_0000/frame_{i:03}.pfm")).exists());
        assert!(out.join(format!("scene_0000/frame_{i:03}.json")).exists());
    }
    assert!(!out.join("scene_0000/frame_010.pgm").exists());
    assert!(out.join("scene_0000/scene.json").exists());
    assert!(out.join("config.json").exists());
}

#[test]
fn generate_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    for name in ["a", "b"] {
        let status = bin().args(["generate", "--config"]).arg(&cfg)
            .arg("--out").arg(tmp.path().join(name)).status().unwrap();
        assert!(status.success());
    }
    assert_eq!(tree_bytes(&tmp.path().join("a")), tree_bytes(&tmp.path().join("b")));
}

#[test]
fn run_archives_noise_knob_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("run");
    let status = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out)
        .args(["--noise", "0.001", "--estimator", "oracle", "--viz"]).status().unwrap();
    assert!(status.success());

    let archived: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(archived["noise_n0"].as_f64().unwrap(), 0.001);
    assert_eq!(archived["estimator"]["name"], "oracle");
    assert!(out.join("metrics.csv").exists());
    assert!(out.join("trace.jsonl").exists());
    assert!(out.join("scene_0000/depth_step_001.pfm").exists());
    assert!(out.join("scene_0000/viz_step_001.pgm").exists());

    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "scene_id,step,n_planes,estimator,l1,rmse,norm_err,runtime_ms");
}

#[test]
fn run_from_generated_dataset_matches_live_render() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let ds = tmp.path().join("ds");
    assert!(bin().args(["generate", "--config"]).arg(&cfg).arg("--out").arg(&ds)
        .status().unwrap().success());

    let live = tmp.path().join("live");
    let disk = tmp.path().join("disk");
    assert!(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&live)
        .status().unwrap().success());
    assert!(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&disk)
        .arg("--dataset").arg(&ds).status().unwrap().success());

    // The oracle depends on gt depth, which PFM stores exactly, so fused
    // depth maps agree bit for bit; the dataset image quantization (8-bit
    // PGM) does not enter the oracle path.
    let a = fs::read(live.join("scene_0000/depth_step_005.pfm")).unwrap();
    let b = fs::read(disk.join("scene_0000/depth_step_005.pfm")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn oracle_run_reports_near_zero_normalized_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("run");
    assert!(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out)
        .args(["--estimator", "oracle"]).status().unwrap().success());

    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let norm_err: f64 = last.split(',').nth(6).unwrap().parse().unwrap();
    assert!(norm_err < 1e-6, "final norm_err {norm_err}");
}

/// CSV with the wall-clock column blanked (timings are not reproducible).
fn mask_runtime(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let mut cells: Vec<&str> = line.split(',').collect();
            if cells.len() == 8 && cells[7] != "runtime_ms" {
                cells[7] = "-";
            }
            cells.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn run_rerun_deterministic_up_to_timing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let mut csvs = Vec::new();
    for name in ["r1", "r2"] {
        let out = tmp.path().join(name);
        assert!(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out)
            .status().unwrap().success());
        csvs.push(mask_runtime(&fs::read_to_string(out.join("metrics.csv")).unwrap()));
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn sweep_emits_positive_runtimes_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("sw");
    let status = bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out)
        .args(["--planes", "1,2", "--estimators", "oracle,oracle-clamped"]).status().unwrap();
    assert!(status.success());

    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 2 * 2); // estimators × planes × scenes
    for row in &rows {
        let runtime: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(runtime > 0.0, "non-positive runtime in {row}");
    }
    assert!(out.join("summary.csv").exists());
}

#[test]
fn invalid_config_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"scene": {"primitive_count": 0}}"#);
    let status = bin().args(["run", "--config"]).arg(&cfg)
        .arg("--out").arg(tmp.path().join("x")).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_estimator_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let status = bin().args(["run", "--config"]).arg(&cfg)
        .arg("--out").arg(tmp.path().join("x"))
        .args(["--estimator", "cnn"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}
