use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sphinpaint"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"{
    "synth": {"band_limit": 8, "support": {"degrees": [1, 3]}, "noise_ratio": 0.01},
    "mask": {"shape": {"kind": "polar_cap", "center_colatitude": 0.0, "center_longitude": 0.0, "angular_radius": 0.35}},
    "band_limit": 8,
    "seed": 3,
    "map_height": 32
}"#;

fn read(path: PathBuf) -> Vec<u8> {
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn synth_is_deterministic_and_complete() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "c.json", SMALL);
    for out in ["a", "b"] {
        let o = run(dir.path(), &["--config", "c.json", "--out", out, "synth"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = read(dir.path().join("a/truth.csv"));
    assert_eq!(a, read(dir.path().join("b/truth.csv")));
    assert_eq!(
        read(dir.path().join("a/truth.png")),
        read(dir.path().join("b/truth.png"))
    );
    assert!(dir.path().join("a/truth.png.json").exists());

    let text = String::from_utf8(a).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "l,m,re,im");
    assert_eq!(rows.len(), 1 + 81);
    let nonzero_degrees: std::collections::BTreeSet<usize> = rows[1..]
        .iter()
        .filter(|r| {
            let f: Vec<&str> = r.split(',').collect();
            f[2].parse::<f64>().unwrap() != 0.0 || f[3].parse::<f64>().unwrap() != 0.0
        })
        .map(|r| r.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(nonzero_degrees, [1, 3].into());

    let other = run(
        dir.path(),
        &["--config", "c.json", "--out", "c", "--seed", "4", "synth"],
    );
    assert_eq!(code(&other), 0);
    assert_ne!(
        read(dir.path().join("a/truth.csv")),
        read(dir.path().join("c/truth.csv"))
    );
}

#[test]
fn configuration_and_io_errors_have_distinct_codes() {
    let dir = TempDir::new().unwrap();
    let bad = SMALL.replace("[1, 3]", "[1, 9]");
    write_config(dir.path(), "bad.json", &bad);
    assert_eq!(code(&run(dir.path(), &["--config", "bad.json", "synth"])), 3);
    write_config(dir.path(), "garbled.json", "{ not json");
    assert_eq!(code(&run(dir.path(), &["--config", "garbled.json", "synth"])), 3);
    assert_eq!(code(&run(dir.path(), &["--config", "missing.json", "synth"])), 4);
    assert_eq!(code(&run(dir.path(), &["synth"])), 3);
    assert_eq!(code(&run(dir.path(), &["inpaint", "--model", "missing.bin"])), 4);
}

#[test]
fn pipeline_recovers_support_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "c.json", SMALL);
    for out in ["a", "b"] {
        for cmd in ["synth", "mask", "discretize"] {
            let o = run(dir.path(), &["--config", "c.json", "--out", out, cmd]);
            assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
        let model = format!("{out}/model.bin");
        let o = run(
            dir.path(),
            &["--config", "c.json", "--out", out, "inpaint", "--model", &model],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in [
        "model.bin",
        "model.json",
        "mask.json",
        "recovered.csv",
        "result.json",
        "trace.jsonl",
    ] {
        assert_eq!(
            read(dir.path().join("a").join(file)),
            read(dir.path().join("b").join(file)),
            "{file}"
        );
    }

    let result: serde_json::Value = serde_json::from_slice(&read(dir.path().join("a/result.json"))).unwrap();
    assert_eq!(result["status"], "converged");
    assert!(result["feasibility"].as_f64().unwrap() <= 1e-6);
    assert!(result.get("wall_time").is_none());

    let trace = String::from_utf8(read(dir.path().join("a/trace.jsonl"))).unwrap();
    for line in trace.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["k", "lambda", "mu", "eps", "phi", "g", "gplus", "inner_iters"] {
            assert!(rec.get(key).is_some(), "{key}");
        }
    }

    let o = run(
        dir.path(),
        &[
            "--out",
            "a",
            "report",
            "--truth",
            "a/truth.csv",
            "--estimate",
            "a/recovered.csv",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&read(dir.path().join("a/report.json"))).unwrap();
    assert_eq!(report["false_positives"], 0);
    assert_eq!(report["nnz"], 2);
    assert!(report["relerr"].as_f64().unwrap() < 0.05);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2);

    // the stored KKT report is reproduced from the files alone
    let o = run(
        dir.path(),
        &[
            "--out",
            "a",
            "kkt-check",
            "--model",
            "a/model.bin",
            "--coefficients",
            "a/recovered.csv",
            "--tol",
            "1",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let kkt: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let stored = result["kkt"]["max_residual"].as_f64().unwrap();
    assert!((kkt["max_residual"].as_f64().unwrap() - stored).abs() <= 1e-9 * (1.0 + stored));
    let strict = run(
        dir.path(),
        &[
            "--out",
            "a",
            "kkt-check",
            "--model",
            "a/model.bin",
            "--coefficients",
            "a/recovered.csv",
            "--tol",
            "1e-30",
        ],
    );
    assert_eq!(code(&strict), 2);
}

#[test]
fn noiseless_full_sphere_is_recovered() {
    let dir = TempDir::new().unwrap();
    let body = r#"{
        "synth": {"band_limit": 6, "support": {"degrees": [2, 5]}},
        "mask": {"shape": {"kind": "union", "shapes": []}},
        "band_limit": 6,
        "rho": {"explicit": 1e-14},
        "penalty": {"outer_tol": 1e-13, "eps_floor": 1e-11},
        "seed": 11
    }"#;
    // with Ŷ = I the error is about sqrt((g)₊), so the tolerance is squared
    write_config(dir.path(), "c.json", body);
    for cmd in ["synth", "inpaint"] {
        let o = run(dir.path(), &["--config", "c.json", "--out", "o", cmd]);
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(
        dir.path(),
        &[
            "--out",
            "o",
            "report",
            "--truth",
            "o/truth.csv",
            "--estimate",
            "o/recovered.csv",
        ],
    );
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&read(dir.path().join("o/report.json"))).unwrap();
    assert!(report["relerr"].as_f64().unwrap() <= 1e-6, "{report}");
}

#[test]
fn infeasible_problem_exits_with_reason() {
    let dir = TempDir::new().unwrap();
    let body = r#"{
        "synth": {"band_limit": 12, "support": {"degrees": [12]}},
        "mask": {"shape": {"kind": "polar_cap", "center_colatitude": 0.0, "center_longitude": 0.0, "angular_radius": 0.5}},
        "band_limit": 6,
        "rho": {"explicit": 1e-6}
    }"#;
    write_config(dir.path(), "c.json", body);
    let o = run(dir.path(), &["--config", "c.json", "--out", "o", "inpaint"]);
    assert_eq!(code(&o), 2);
    let flag: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(flag["reason"], "infeasible");
    assert_eq!(flag["status"], "infeasible");
    assert!(dir.path().join("o/result.json").exists());
}

fn csv_with(degree: usize, entries: &[(usize, i64, f64)]) -> String {
    let mut s = String::from("l,m,re,im\n");
    for l in 0..=degree {
        for m in -(l as i64)..=l as i64 {
            let re = entries.iter().find(|e| e.0 == l && e.1 == m).map_or(0.0, |e| e.2);
            s.push_str(&format!("{l},{m},{re:.16e},{:.16e}\n", 0.0));
        }
    }
    s
}

/// Width, height and grayscale pixels, checked against the sidecar.
fn png_rows(path: &Path) -> (u32, u32, Vec<u8>) {
    let info: serde_json::Value = serde_json::from_slice(&read(sphinpaint::render::sidecar_path(path))).unwrap();
    let img = image::open(path).unwrap().to_luma8();
    assert_eq!(img.width() as u64, info["width"].as_u64().unwrap());
    (img.width(), img.height(), img.into_raw())
}

#[test]
fn render_examples() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("const.csv"), csv_with(2, &[(0, 0, 1.0)])).unwrap();
    std::fs::write(dir.path().join("y10.csv"), csv_with(2, &[(1, 0, 1.0)])).unwrap();
    for name in ["const", "y10"] {
        let csv = format!("{name}.csv");
        let png = format!("{name}.png");
        let o = run(
            dir.path(),
            &["render", "--coefficients", &csv, "--height", "16", "--output", &png],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (w, h, px) = png_rows(&dir.path().join("const.png"));
    assert_eq!((w, h), (32, 16));
    assert!(px.iter().all(|&v| v == px[0]));

    let (w, _, px) = png_rows(&dir.path().join("y10.png"));
    let column: Vec<u8> = px.chunks(w as usize).map(|row| row[0]).collect();
    assert_eq!(column[0], 255);
    assert_eq!(*column.last().unwrap(), 0);
    assert!(column.windows(2).all(|p| p[0] >= p[1]));
    for row in px.chunks(w as usize) {
        assert!(row.iter().all(|&v| v == row[0]));
    }
}

#[test]
fn report_errors_name_the_problem() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("a.csv"), csv_with(2, &[(0, 0, 1.0)])).unwrap();
    std::fs::write(dir.path().join("b.csv"), csv_with(3, &[(0, 0, 1.0)])).unwrap();
    let broken = csv_with(2, &[(0, 0, 1.0)]).replace("1,0,", "1,0,x");
    std::fs::write(dir.path().join("broken.csv"), broken).unwrap();

    let o = run(dir.path(), &["report", "--truth", "a.csv", "--estimate", "b.csv"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("band limits differ"));

    let o = run(dir.path(), &["report", "--truth", "a.csv", "--estimate", "broken.csv"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.csv:4"));

    let o = run(dir.path(), &["report", "--truth", "a.csv", "--estimate", "a.csv"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&read(dir.path().join("report.json"))).unwrap();
    assert_eq!(report["relerr"], 0.0);
    assert_eq!(report["snr_capped"], true);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(cfg.get("synth").is_some(), "{}", path.display());
        let out = TempDir::new().unwrap();
        let o = run(out.path(), &["--config", path.to_str().unwrap(), "--out", ".", "mask"]);
        assert_eq!(
            code(&o),
            0,
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&o.stderr)
        );
        n += 1;
    }
    assert!(n > 0);
}
