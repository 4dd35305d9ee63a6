//! Full-reference quality metrics: MSE, PSNR and SSIM.

use crate::error::{Error, Result};
use crate::image::GrayImage;

const PEAK: f64 = 255.0;
pub const SSIM_C1: f64 = (0.01 * PEAK) * (0.01 * PEAK);
pub const SSIM_C2: f64 = (0.03 * PEAK) * (0.03 * PEAK);
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    /// `f64::INFINITY` for identical images.
    pub psnr_db: f64,
    pub ssim: f64,
    pub runtime_ms: Option<f64>,
}

pub fn mse(u: &GrayImage, v: &GrayImage) -> Result<f64> {
    u.same_dims(v)?;
    let total: u64 = u
        .pixels()
        .iter()
        .zip(v.pixels())
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as u64
        })
        .sum();
    Ok(total as f64 / u.pixels().len() as f64)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` when the images match.
pub fn psnr(u: &GrayImage, v: &GrayImage) -> Result<f64> {
    Ok(psnr_from_mse(mse(u, v)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

#[inline]
fn ssim_formula(mu_u: f64, mu_v: f64, var_u: f64, var_v: f64, cov: f64) -> f64 {
    ((2.0 * mu_u * mu_v + SSIM_C1) * (2.0 * cov + SSIM_C2))
        / ((mu_u * mu_u + mu_v * mu_v + SSIM_C1) * (var_u + var_v + SSIM_C2))
}

fn gaussian_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|o| (-((o * o) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable "valid" filtering: output is `(w - n + 1) x (h - n + 1)`.
fn filter_valid(src: &[f64], width: usize, height: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let ow = width - n + 1;
    let oh = height - n + 1;
    let mut rows = vec![0.0; ow * height];
    for y in 0..height {
        let line = &src[y * width..(y + 1) * width];
        for x in 0..ow {
            rows[y * ow + x] = k.iter().zip(&line[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k
                .iter()
                .enumerate()
                .map(|(t, a)| a * rows[(y + t) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM over all 11x11 Gaussian-weighted (sigma 1.5) windows that fit
/// inside the image.
pub fn ssim(u: &GrayImage, v: &GrayImage) -> Result<f64> {
    u.same_dims(v)?;
    let (width, height) = u.dimensions();
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            width,
            height,
            window: SSIM_WINDOW,
        });
    }
    let k = gaussian_window();
    let a: Vec<f64> = u.pixels().iter().map(|&p| f64::from(p)).collect();
    let b: Vec<f64> = v.pixels().iter().map(|&p| f64::from(p)).collect();
    let product =
        |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p * q).collect() };

    let mu_a = filter_valid(&a, width, height, &k);
    let mu_b = filter_valid(&b, width, height, &k);
    let aa = filter_valid(&product(&a, &a), width, height, &k);
    let bb = filter_valid(&product(&b, &b), width, height, &k);
    let ab = filter_valid(&product(&a, &b), width, height, &k);

    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|t| {
            let (ma, mb) = (mu_a[t], mu_b[t]);
            ssim_formula(ma, mb, aa[t] - ma * ma, bb[t] - mb * mb, ab[t] - ma * mb)
        })
        .sum();
    Ok(total / n as f64)
}

/// SSIM from whole-image statistics (one window covering everything).
pub fn ssim_global(u: &GrayImage, v: &GrayImage) -> Result<f64> {
    u.same_dims(v)?;
    let n = u.pixels().len() as f64;
    let a = u.pixels().iter().map(|&p| f64::from(p));
    let b = v.pixels().iter().map(|&p| f64::from(p));
    let mu_a = a.clone().sum::<f64>() / n;
    let mu_b = b.clone().sum::<f64>() / n;
    let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in a.zip(b) {
        var_a += (x - mu_a) * (x - mu_a);
        var_b += (y - mu_b) * (y - mu_b);
        cov += (x - mu_a) * (y - mu_b);
    }
    Ok(ssim_formula(mu_a, mu_b, var_a / n, var_b / n, cov / n))
}

/// MSE, PSNR and windowed SSIM of `test` against `reference`.
pub fn evaluate(reference: &GrayImage, test: &GrayImage) -> Result<MetricReport> {
    let mse = mse(reference, test)?;
    Ok(MetricReport {
        mse,
        psnr_db: psnr_from_mse(mse),
        ssim: ssim(reference, test)?,
        runtime_ms: None,
    })
}
