use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use namf::{load_image, save_image, GrayImage};

fn namf_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_namf"))
        .args(args)
        .output()
        .expect("spawn namf")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_gradient(path: &Path, w: usize, h: usize) -> GrayImage {
    let img = GrayImage::from_fn(w, h, |i, j| (30 + 2 * i + 3 * j) as u8).unwrap();
    save_image(&img, path).unwrap();
    img
}

#[test]
fn inject_then_denoise_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean.pgm");
    let noisy = dir.path().join("noisy.pgm");
    let truth = dir.path().join("truth.png");
    let out = dir.path().join("out.pgm");
    let mask = dir.path().join("mask.pgm");
    let original = write_gradient(&clean, 48, 40);

    let o = namf_cmd(&[
        "inject",
        "--input",
        s(&clean),
        "--output",
        s(&noisy),
        "--density",
        "0.3",
        "--seed",
        "4",
        "--mask",
        s(&truth),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let o = namf_cmd(&[
        "denoise",
        "--method",
        "namf",
        "--input",
        s(&noisy),
        "--output",
        s(&out),
        "--search-radius",
        "6",
        "--dump-mask",
        s(&mask),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let restored = load_image(&out).unwrap();
    assert_eq!(restored.dimensions(), original.dimensions());

    // the gradient has no natural extremes, so detection recovers the truth
    let dumped = load_image(&mask).unwrap();
    assert!(dumped.pixels().iter().all(|&v| v == 0 || v == 255));
    assert_eq!(dumped, load_image(&truth).unwrap());

    let o = namf_cmd(&[
        "metrics",
        "--reference",
        s(&clean),
        "--test",
        s(&out),
        "--ssim-global",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let psnr: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("psnr_db "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(psnr > 30.0, "{text}");
    assert!(text.contains("ssim_global "));
}

#[test]
fn default_denoise_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    let output = dir.path().join("out.pgm");
    write_gradient(&input, 30, 30);
    let o = namf_cmd(&[
        "denoise",
        "--method",
        "namf",
        "--input",
        s(&input),
        "--output",
        s(&output),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(output.is_file());

    let o = namf_cmd(&[
        "denoise",
        "--method",
        "mf",
        "--input",
        s(&input),
        "--output",
        s(&output),
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn metrics_of_identical_images_is_inf() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.pgm");
    write_gradient(&a, 20, 20);
    let o = namf_cmd(&["metrics", "--reference", s(&a), "--test", s(&a)]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("psnr_db inf"), "{text}");
    assert!(text.contains("ssim 1.000000"), "{text}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    write_gradient(&input, 8, 8);
    let out = dir.path().join("o.pgm");

    let o = namf_cmd(&[
        "inject",
        "--input",
        s(&input),
        "--output",
        s(&out),
        "--density",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("density must be in [0,1]"));
    assert!(!out.exists());

    let o = namf_cmd(&[
        "denoise",
        "--input",
        s(&input),
        "--output",
        s(&out),
        "--bogus",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let missing = dir.path().join("missing.pgm");
    let o = namf_cmd(&["denoise", "--input", s(&missing), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));

    let o = namf_cmd(&[
        "denoise",
        "--method",
        "bm3d",
        "--input",
        s(&input),
        "--output",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = namf_cmd(&[
        "denoise",
        "--input",
        s(&input),
        "--output",
        s(&out),
        "--threshold",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreadable_image_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.pgm");
    fs::write(&input, b"P2\n2 2\n255\n0 0 0 0\n").unwrap();
    let o = namf_cmd(&[
        "denoise",
        "--input",
        s(&input),
        "--output",
        s(&dir.path().join("o.pgm")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("P2"));
}

fn sweep_fixture(dir: &Path) -> PathBuf {
    write_gradient(&dir.join("a.pgm"), 32, 32);
    write_gradient(&dir.join("b.pgm"), 24, 40);
    let cfg = dir.join("sweep.toml");
    fs::write(
        &cfg,
        "images = [\"a.pgm\", \"b.pgm\"]\n\
         densities = [0.2, 0.5, 0.8]\n\
         seed = 3\n\
         search_radius = 4\n\
         output_csv = \"out.csv\"\n",
    )
    .unwrap();
    cfg
}

#[test]
fn sweep_row_count_and_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_fixture(dir.path());
    let o = namf_cmd(&["sweep", "--config", s(&cfg), "--no-runtime"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(dir.path().join("out.csv")).unwrap();

    let text = String::from_utf8(first.clone()).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        lines.next(),
        Some("image,method,alpha,psnr_db,ssim,runtime_ms,seed")
    );
    assert_eq!(lines.count(), 2 * 3 * 2);
    assert_eq!(
        text.lines().filter(|l| l.starts_with("# sha256")).count(),
        2
    );

    let other = dir.path().join("again.csv");
    let o = namf_cmd(&[
        "sweep",
        "--config",
        s(&cfg),
        "--no-runtime",
        "--output",
        s(&other),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(&other).unwrap(), first);
}

#[test]
fn sweep_records_missing_image_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    write_gradient(&dir.path().join("a.pgm"), 20, 20);
    let cfg = dir.path().join("s.toml");
    fs::write(
        &cfg,
        "images = [\"a.pgm\", \"gone.pgm\"]\ndensities = [0.3]\nmethods = [\"mf\"]\noutput_csv = \"o.csv\"\n",
    )
    .unwrap();
    let o = namf_cmd(&["sweep", "--config", s(&cfg)]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("o.csv")).unwrap();
    assert!(
        text.lines().any(|l| l.starts_with("# error gone")),
        "{text}"
    );
    assert!(text.lines().any(|l| l.starts_with("a,mf,0.3,")), "{text}");
}

#[test]
fn sweep_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(&cfg, "images = [\"a.pgm\"]\nunknown_key = 1\n").unwrap();
    let o = namf_cmd(&["sweep", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}
