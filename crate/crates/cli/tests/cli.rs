use std::path::Path;
use std::process::{Command, Output};

use mug_core::image_io::{encode_jpeg, encode_png, synthesize_chessboard, synthesize_scene};
use mug_core::RgbImage;

fn mug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mug"))
        .args(args)
        .env_remove("MUG_JOBS")
        .output()
        .expect("run mug")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_png(path: &Path, img: &RgbImage) {
    std::fs::write(path, encode_png(img).unwrap().bytes).unwrap();
}

#[test]
fn score_constant_json() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("flat.png");
    write_png(&f, &RgbImage::from_fn(64, 64, |_, _| [128, 128, 128]));
    let out = mug(&["score", p(&f), "--metric", "all", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        r#"{"nug":1,"mug":0.0,"mug_plus":0.0,"n_available":1}"#
    );
}

#[test]
fn score_chessboard_ratio_is_integer() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("board.png");
    write_png(&f, &synthesize_chessboard(256, 32, 0, 255).unwrap());
    let out = mug(&["score", p(&f), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ratio = v["mug"].as_f64().unwrap() / v["mug_plus"].as_f64().unwrap();
    let n = v["n_available"].as_u64().unwrap() as f64;
    assert!((ratio - (19.0 - n + 1.0)).abs() < 1e-12 * ratio);
    assert!((ratio - ratio.round()).abs() < 1e-12 * ratio);
}

#[test]
fn score_single_metric_text() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.png");
    write_png(&f, &synthesize_scene(48, 40, 2));
    let out = mug(&["score", p(&f), "--metric", "mug+"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("mug_plus "));
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn score_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = mug(&["score", p(&dir.path().join("nope.png"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let tiny = dir.path().join("tiny.png");
    write_png(&tiny, &RgbImage::from_fn(2, 2, |_, _| [1, 2, 3]));
    assert_eq!(mug(&["score", p(&tiny)]).status.code(), Some(3));
}

fn write_manifest(dir: &Path, n: usize, corrupt: bool) -> std::path::PathBuf {
    let mut text = String::from("path,mos\n");
    for i in 0..n {
        let name = format!("img{i}.jpg");
        let img = synthesize_scene(64, 48, i as u64);
        std::fs::write(
            dir.join(&name),
            encode_jpeg(&img, 90 - 15 * i as u8).unwrap().bytes,
        )
        .unwrap();
        text.push_str(&format!("{name},{}\n", 5.0 - i as f64 * 0.7));
    }
    if corrupt {
        std::fs::write(dir.join("broken.jpg"), b"\xFF\xD8\xFF\xE0 not really").unwrap();
        text.push_str("broken.jpg,1.0\n");
    }
    let m = dir.join("manifest.csv");
    std::fs::write(&m, text).unwrap();
    m
}

#[test]
fn batch_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), 5, false);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(
        mug(&["batch", "--manifest", p(&m), "--out", p(&a), "--jobs", "1"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        mug(&["batch", "--manifest", p(&m), "--out", p(&b), "--jobs", "8"])
            .status
            .code(),
        Some(0)
    );
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert_eq!(text.lines().next().unwrap(), "path,nug,mug,mug_plus,mos");
}

#[test]
fn batch_jobs_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), 2, false);
    let out = dir.path().join("o.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_mug"))
        .args(["batch", "--manifest", p(&m), "--out", p(&out)])
        .env("MUG_JOBS", "3")
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn batch_corrupt_entry() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), 3, true);
    let out = dir.path().join("o.csv");
    let r = mug(&["batch", "--manifest", p(&m), "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8(r.stderr).unwrap().contains("broken.jpg"));

    let r = mug(&[
        "batch",
        "--manifest",
        p(&m),
        "--out",
        p(&out),
        "--skip-errors",
    ]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 4);
}

#[test]
fn eval_linear_table() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    let mut text = String::from("path,nug,mug,mug_plus,mos\n");
    for i in 0..10 {
        let s = 0.001 * (i + 1) as f64;
        text.push_str(&format!(
            "i{i}.jpg,{},{s},{s},{}\n",
            1000 - i,
            2.0 * s + 1.0
        ));
    }
    std::fs::write(&scores, text).unwrap();
    let (report, scatter) = (dir.path().join("r.json"), dir.path().join("sc.csv"));
    let r = mug(&[
        "eval",
        "--scores",
        p(&scores),
        "--metric",
        "mug",
        "--out",
        p(&report),
        "--scatter",
        p(&scatter),
    ]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["srcc"].as_f64().unwrap(), 1.0);
    assert_eq!(v["metric"], "mug");
    assert_eq!(v["n"], 10);
    assert_eq!(v["beta"].as_array().unwrap().len(), 5);
    let sc = std::fs::read_to_string(&scatter).unwrap();
    assert_eq!(sc.lines().next().unwrap(), "score,mos,fitted");
    assert_eq!(sc.lines().count(), 11);

    let r = mug(&[
        "eval",
        "--scores",
        p(&scores),
        "--metric",
        "nug",
        "--out",
        p(&report),
    ]);
    assert_eq!(r.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["srcc"].as_f64().unwrap(), -1.0);
}

#[test]
fn eval_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    let mut text = String::from("path,nug,mug,mug_plus,mos\n");
    for i in 0..6 {
        text.push_str(&format!("i{i}.jpg,1,0,0,{i}\n"));
    }
    std::fs::write(&scores, text).unwrap();
    let r = mug(&[
        "eval",
        "--scores",
        p(&scores),
        "--metric",
        "mug",
        "--out",
        p(&dir.path().join("r.json")),
    ]);
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn misalign_identity_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), 5, false);
    let out = dir.path().join("mis.json");
    assert_eq!(
        mug(&[
            "misalign",
            "--manifest",
            p(&m),
            "--k",
            "0",
            "--out",
            p(&out)
        ])
        .status
        .code(),
        Some(0)
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for entry in v["metrics"].as_array().unwrap() {
        assert_eq!(entry["aligned"], entry["cropped"]);
        assert_eq!(entry["max_abs_score_delta"], 0.0);
    }
    let r = mug(&[
        "misalign",
        "--manifest",
        p(&m),
        "--k",
        "30",
        "--out",
        p(&out),
    ]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn ladder_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.png");
    write_png(&src, &synthesize_scene(256, 192, 12));
    let out = dir.path().join("ladder");
    let r = mug(&[
        "ladder",
        "--input",
        p(&src),
        "--qualities",
        "90,70,50,30,10",
        "--out",
        p(&out),
    ]);
    assert_eq!(r.status.code(), Some(0));
    for q in ["q090", "q070", "q050", "q030", "q010"] {
        assert!(out.join(format!("{q}.jpg")).exists());
    }
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("monotonicity.json")).unwrap())
            .unwrap();
    assert!(v["monotonicity"]["nug"].as_f64().unwrap() >= 0.9);
    assert_eq!(v["degenerate"], false);
    assert_eq!(v["steps"].as_array().unwrap().len(), 5);
}

#[test]
fn ladder_degenerate_and_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("flat.png");
    write_png(&src, &RgbImage::from_fn(32, 32, |_, _| [50, 50, 50]));
    let out = dir.path().join("l");
    let r = mug(&["ladder", "--input", p(&src), "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("monotonicity.json")).unwrap())
            .unwrap();
    assert_eq!(v["degenerate"], true);
    assert!(v["monotonicity"]["mug"].is_null());

    let r = mug(&[
        "ladder",
        "--input",
        p(&src),
        "--qualities",
        "80",
        "--out",
        p(&out),
    ]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn bench_single_iteration() {
    let r = mug(&[
        "bench", "--width", "64", "--height", "48", "--iters", "1", "--metric", "mug",
    ]);
    assert_eq!(r.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["iterations"], 1);
    assert_eq!(v["mean_ms"], v["p95_ms"]);
    let again: serde_json::Value = serde_json::from_slice(
        &mug(&[
            "bench", "--width", "64", "--height", "48", "--iters", "2", "--metric", "mug",
        ])
        .stdout,
    )
    .unwrap();
    assert_eq!(v["score"], again["score"]);
}
