//! First restoration pass: every detected pixel is replaced by the mean of
//! the noiseless pixels in its detection window, or, when that window holds
//! only extremes, by the mean of its three already-restored upper/left
//! neighbours.

use crate::detector::{detect, window_stats, DetectionResult, DetectorParams};
use crate::error::Result;
use crate::image::{reflect_index, FloatImage, GrayImage, PixelMask};

/// Value used when none of the three fallback neighbours holds a usable value.
pub const FALLBACK_GRAY: f64 = 128.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Stage1Output {
    /// Initially restored image.
    pub restored: FloatImage,
    pub mask: PixelMask,
    /// Detection radius per pixel (0 for non-candidates).
    pub window: Vec<usize>,
}

/// Replacement value for the noisy pixel `(i, j)` at window radius `w`.
///
/// `z` must hold final values for every pixel before `(i, j)` in raster
/// order. In the three-neighbour fallback an out-of-range neighbour is
/// reflected into the image; a reflected neighbour that is still an
/// unprocessed noisy pixel is skipped, and if all three are skipped the
/// result is [`FALLBACK_GRAY`].
///
/// # Panics
///
/// If `(i, j)` is not marked noisy in `mask`.
pub fn adaptive_mean(
    noisy: &GrayImage,
    z: &FloatImage,
    mask: &PixelMask,
    i: usize,
    j: usize,
    w: usize,
) -> f64 {
    assert!(
        mask.get(i, j),
        "adaptive_mean called on noiseless pixel ({i}, {j})"
    );
    let (ci, cj, r) = (i as isize, j as isize, w as isize);
    if window_stats(noisy, i, j, w).non_extreme > 0 {
        let (mut sum, mut count) = (0.0, 0usize);
        for di in -r..=r {
            for dj in -r..=r {
                if !mask.get_reflect(ci + di, cj + dj) {
                    sum += f64::from(noisy.get_reflect(ci + di, cj + dj));
                    count += 1;
                }
            }
        }
        // non-extreme pixels are never marked, so count > 0
        return sum / count as f64;
    }

    let width = noisy.width();
    let here = i * width + j;
    let (mut sum, mut count) = (0.0, 0usize);
    for (di, dj) in [(-1isize, -1isize), (-1, 0), (0, -1)] {
        let a = reflect_index(ci + di, noisy.height());
        let b = reflect_index(cj + dj, width);
        let idx = a * width + b;
        let usable = idx < here || (idx != here && !mask.get(a, b));
        if usable {
            sum += z.get(a, b);
            count += 1;
        }
    }
    if count == 0 {
        FALLBACK_GRAY
    } else {
        sum / count as f64
    }
}

/// Raster-order pass over the noisy image. Detection depends only on the
/// noisy input, so the full discriminant is computed first; the replacement
/// values are then filled in top-left to bottom-right so that each fallback
/// sees restored neighbours.
pub fn restore_stage1(noisy: &GrayImage, p: &DetectorParams) -> Result<Stage1Output> {
    let DetectionResult { mask, window } = detect(noisy, p)?;
    let mut z = noisy.to_float();
    let (width, height) = noisy.dimensions();
    for i in 0..height {
        for j in 0..width {
            if mask.get(i, j) {
                let v = adaptive_mean(noisy, &z, &mask, i, j, window[i * width + j]);
                z.set(i, j, v);
            }
        }
    }
    Ok(Stage1Output {
        restored: z,
        mask,
        window,
    })
}
