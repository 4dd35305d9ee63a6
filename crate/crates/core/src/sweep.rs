//! Noise-density sweeps: corrupt each image at each density, run each
//! method, and record PSNR/SSIM/runtime rows as CSV.
//!
//! # Config file
//!
//! A flat TOML table; every key is optional except `images`:
//!
//! ```toml
//! images = ["lena.pgm", "barbara.pgm"]   # relative to the config file
//! densities = [0.1, 0.5, 0.9]            # default 0.1, 0.2, ..., 0.9
//! methods = ["namf", "mf"]               # default both
//! seed = 7                               # default 0
//! salt_fraction = 0.5
//! output_csv = "sweep.csv"               # relative to the config file
//! record_runtime = true                  # false writes 0 for byte-stable output
//! threshold = 0.8
//! w_max = 7
//! w_step = 1
//! patch_radius = 2
//! search_radius = 20
//! beta0 = 4.5595
//! beta1 = 6.0314
//! beta2 = 2.2186
//! kernel_a = 0.0
//! ```
//!
//! # CSV
//!
//! Leading `#` lines carry metadata (a SHA-256 per input image, and any
//! per-image errors). The header is
//! `image,method,alpha,psnr_db,ssim,runtime_ms,seed`; a PSNR of identical
//! images is written as `inf`, and rows for images that failed to load have
//! empty metric fields.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::io::load_image;
use crate::metrics::evaluate;
use crate::noise::{inject_sap, NoiseSpec};
use crate::pipeline::{Method, NamfParams};

pub const CSV_HEADER: [&str; 7] = [
    "image",
    "method",
    "alpha",
    "psnr_db",
    "ssim",
    "runtime_ms",
    "seed",
];

pub fn default_densities() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub images: Vec<PathBuf>,
    pub densities: Vec<f64>,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub salt_fraction: f64,
    pub output_csv: PathBuf,
    pub record_runtime: bool,
    pub params: NamfParams,
}

impl RunConfig {
    pub fn new(images: Vec<PathBuf>, output_csv: PathBuf) -> Self {
        Self {
            images,
            densities: default_densities(),
            methods: Method::ALL.to_vec(),
            seed: 0,
            salt_fraction: 0.5,
            output_csv,
            record_runtime: true,
            params: NamfParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.is_empty() {
            return Err(Error::Config("at least one image is required".into()));
        }
        if self.densities.is_empty() {
            return Err(Error::Config("at least one density is required".into()));
        }
        if let Some(d) = self.densities.iter().find(|&&d| !(d > 0.0 && d <= 1.0)) {
            return Err(Error::Config(format!("density {d} must be in (0,1]")));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if !(0.0..=1.0).contains(&self.salt_fraction) {
            return Err(Error::Config("salt_fraction must be in [0,1]".into()));
        }
        self.params.validate()
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        raw.into_config(base_dir)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    images: Vec<PathBuf>,
    densities: Option<Vec<f64>>,
    methods: Option<Vec<String>>,
    seed: Option<u64>,
    salt_fraction: Option<f64>,
    output_csv: Option<PathBuf>,
    record_runtime: Option<bool>,
    threshold: Option<f64>,
    w_max: Option<usize>,
    w_step: Option<usize>,
    patch_radius: Option<usize>,
    search_radius: Option<usize>,
    beta0: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    kernel_a: Option<f64>,
}

impl RawConfig {
    fn into_config(self, base: &Path) -> Result<RunConfig> {
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let mut cfg = RunConfig::new(
            self.images.into_iter().map(resolve).collect(),
            resolve(
                self.output_csv
                    .unwrap_or_else(|| PathBuf::from("sweep.csv")),
            ),
        );
        if let Some(d) = self.densities {
            cfg.densities = d;
        }
        if let Some(m) = self.methods {
            cfg.methods = m.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.salt_fraction = self.salt_fraction.unwrap_or(cfg.salt_fraction);
        cfg.record_runtime = self.record_runtime.unwrap_or(cfg.record_runtime);
        let d = &mut cfg.params.detector;
        d.threshold = self.threshold.unwrap_or(d.threshold);
        d.w_max = self.w_max.unwrap_or(d.w_max);
        d.w_step = self.w_step.unwrap_or(d.w_step);
        let n = &mut cfg.params.nlm;
        n.patch_radius = self.patch_radius.unwrap_or(n.patch_radius);
        n.search_radius = self.search_radius.unwrap_or(n.search_radius);
        n.beta0 = self.beta0.unwrap_or(n.beta0);
        n.beta1 = self.beta1.unwrap_or(n.beta1);
        n.beta2 = self.beta2.unwrap_or(n.beta2);
        n.kernel_a = self.kernel_a.unwrap_or(n.kernel_a);
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub image: String,
    pub method: Method,
    pub alpha: f64,
    pub psnr_db: Option<f64>,
    pub ssim: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub seed: u64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// `(image id, sha256 hex)` for each image that loaded.
    pub checksums: Vec<(String, String)>,
}

/// Image id used in CSV rows: the file stem.
pub fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Noise seed for one `(image, density)` cell, derived from the sweep seed
/// by hashing so every cell gets an independent realisation.
pub fn derive_seed(seed: u64, image: &str, alpha: f64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((image.len() as u64).to_le_bytes());
    hasher.update(image.as_bytes());
    hasher.update(alpha.to_bits().to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

struct Job<'a> {
    image: &'a str,
    original: &'a GrayImage,
    alpha: f64,
    method: Method,
}

/// Runs the sweep and returns its rows in `(image, alpha, method)` order.
/// Does not write anything; see [`run_sweep`].
pub fn sweep_rows(cfg: &RunConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut loaded: Vec<(String, std::result::Result<GrayImage, String>)> = Vec::new();
    let mut checksums = Vec::new();
    for path in &cfg.images {
        let id = image_id(path);
        match fs::read(path)
            .map_err(|e| Error::io(path, e))
            .and_then(|bytes| {
                let img = load_image(path)?;
                Ok((hex::encode(Sha256::digest(&bytes)), img))
            }) {
            Ok((sum, img)) => {
                checksums.push((id.clone(), sum));
                loaded.push((id, Ok(img)));
            }
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                loaded.push((id, Err(e.to_string())));
            }
        }
    }

    let mut jobs = Vec::new();
    let mut rows = Vec::new();
    for (id, img) in &loaded {
        for &alpha in &cfg.densities {
            for &method in &cfg.methods {
                match img {
                    Ok(original) => jobs.push(Job {
                        image: id,
                        original,
                        alpha,
                        method,
                    }),
                    Err(msg) => rows.push(SweepRow {
                        image: id.clone(),
                        method,
                        alpha,
                        psnr_db: None,
                        ssim: None,
                        runtime_ms: None,
                        seed: derive_seed(cfg.seed, id, alpha),
                        error: Some(msg.clone()),
                    }),
                }
            }
        }
    }

    let computed: Vec<SweepRow> = jobs.par_iter().map(|job| run_job(cfg, job)).collect();
    rows.extend(computed);

    let order: BTreeMap<&str, usize> = loaded
        .iter()
        .enumerate()
        .map(|(k, (id, _))| (id.as_str(), k))
        .collect();
    rows.sort_by(|a, b| {
        order[a.image.as_str()]
            .cmp(&order[b.image.as_str()])
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.method.cmp(&b.method))
    });
    Ok(SweepResult { rows, checksums })
}

fn run_job(cfg: &RunConfig, job: &Job<'_>) -> SweepRow {
    let seed = derive_seed(cfg.seed, job.image, job.alpha);
    let mut row = SweepRow {
        image: job.image.to_string(),
        method: job.method,
        alpha: job.alpha,
        psnr_db: None,
        ssim: None,
        runtime_ms: None,
        seed,
        error: None,
    };
    let spec = NoiseSpec {
        density: job.alpha,
        salt_fraction: cfg.salt_fraction,
        seed,
    };
    let outcome = inject_sap(job.original, &spec).and_then(|(noisy, _)| {
        let start = Instant::now();
        let restored = job.method.apply(&noisy, &cfg.params)?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        Ok((evaluate(job.original, &restored)?, elapsed))
    });
    match outcome {
        Ok((report, elapsed)) => {
            row.psnr_db = Some(report.psnr_db);
            row.ssim = Some(report.ssim);
            row.runtime_ms = Some(if cfg.record_runtime { elapsed } else { 0.0 });
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn fmt_metric(v: Option<f64>, precision: usize) -> String {
    match v {
        Some(x) if x == f64::INFINITY => "inf".into(),
        Some(x) => format!("{x:.precision$}"),
        None => String::new(),
    }
}

/// Renders the CSV document (metadata comments, header, rows).
pub fn render_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (id, sum) in &result.checksums {
        writeln!(out, "# sha256 {id} {sum}").expect("writing to a Vec");
    }
    for row in result.rows.iter().filter(|r| r.error.is_some()) {
        let msg = row.error.as_deref().unwrap_or_default().replace('\n', " ");
        writeln!(
            out,
            "# error {} {} {}: {msg}",
            row.image, row.method, row.alpha
        )
        .expect("writing to a Vec");
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in &result.rows {
        w.write_record([
            row.image.clone(),
            row.method.to_string(),
            format!("{}", row.alpha),
            fmt_metric(row.psnr_db, 4),
            fmt_metric(row.ssim, 6),
            fmt_metric(row.runtime_ms, 3),
            row.seed.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

/// Runs the sweep and writes the CSV atomically (temp file + rename).
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    let result = sweep_rows(cfg)?;
    let bytes = render_csv(&result)?;
    let target = &cfg.output_csv;
    let dir = target
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        target
            .file_name()
            .map(|s| s.to_string_lossy())
            .unwrap_or_default()
    ));
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, target).map_err(|e| Error::io(target, e))?;
    Ok(result)
}
