//! Non-local means refinement of the pixels flagged by detection.
//!
//! Each flagged pixel becomes a weighted average of the pixels in its search
//! window, weighted by `exp(-d / h^2)` where `d` is the weighted mean squared
//! difference between the two surrounding patches. The pixel itself gets
//! weight zero. The smoothing parameter `h` grows quadratically with the
//! detected noise fraction.
//!
//! Windows extend past the image with reflect-101 mirroring. A search
//! position outside the image is treated as the padded pixel at that
//! position, so its patch is read from the padded raster as well.
//!
//! [`nlm_restore_naive`] evaluates the definition directly and is the
//! reference for [`nlm_restore_fast`], which visits one search offset at a
//! time and gets every patch distance for that offset from line sums of the
//! squared-difference image.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{reflect_index, FloatImage, PixelMask};

/// Normalisation constants below this are treated as zero.
pub const MIN_WEIGHT_SUM: f64 = 1e-300;

/// Rows per work unit in the fast path. Fixed so that results do not depend
/// on the thread count.
const STRIP_ROWS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NlmParams {
    /// Similarity-window (patch) radius; 2 gives 5x5 patches.
    pub patch_radius: usize,
    /// Search-window radius; 20 gives a 41x41 search area.
    pub search_radius: usize,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Standard deviation of the Gaussian patch kernel; 0 selects uniform
    /// patch weights.
    pub kernel_a: f64,
}

impl Default for NlmParams {
    fn default() -> Self {
        Self {
            patch_radius: 2,
            search_radius: 20,
            beta0: 4.5595,
            beta1: 6.0314,
            beta2: 2.2186,
            kernel_a: 0.0,
        }
    }
}

impl NlmParams {
    pub fn validate(&self) -> Result<()> {
        if self.search_radius == 0 {
            return Err(Error::InvalidParameter(
                "search_radius must be at least 1".into(),
            ));
        }
        if ![self.beta0, self.beta1, self.beta2]
            .iter()
            .all(|b| b.is_finite())
        {
            return Err(Error::InvalidParameter(
                "beta coefficients must be finite".into(),
            ));
        }
        if !(self.kernel_a.is_finite() && self.kernel_a >= 0.0) {
            return Err(Error::InvalidParameter("kernel_a must be >= 0".into()));
        }
        Ok(())
    }

    /// Normalised 1-D kernel over `-patch_radius..=patch_radius`. The 2-D
    /// patch weight at `(oy, ox)` is `k[oy] * k[ox]`.
    pub fn line_kernel(&self) -> Vec<f64> {
        let r = self.patch_radius as isize;
        let raw: Vec<f64> = (-r..=r)
            .map(|o| {
                if self.kernel_a > 0.0 {
                    (-((o * o) as f64) / (2.0 * self.kernel_a * self.kernel_a)).exp()
                } else {
                    1.0
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }

    /// Row-major `(2r+1)^2` patch weights summing to one.
    pub fn patch_kernel(&self) -> Vec<f64> {
        let k = self.line_kernel();
        k.iter()
            .flat_map(|a| k.iter().map(move |b| a * b))
            .collect()
    }
}

/// Smoothing parameter from the fraction `q` of flagged pixels:
/// `h = beta2 q^2 + beta1 q + beta0`.
pub fn smoothing_h(mask: &PixelMask, p: &NlmParams) -> f64 {
    let q = mask.count_ones() as f64 / mask.bits().len() as f64;
    smoothing_h_for_fraction(q, p)
}

pub fn smoothing_h_for_fraction(q: f64, p: &NlmParams) -> f64 {
    q * q * p.beta2 + q * p.beta1 + p.beta0
}

/// Weighted squared distance between the patches centred at `a` and `b`
/// (row, column), reading out-of-range pixels through reflect-101.
pub fn patch_distance(z: &FloatImage, a: (isize, isize), b: (isize, isize), p: &NlmParams) -> f64 {
    let kernel = p.patch_kernel();
    let r = p.patch_radius as isize;
    let side = 2 * r + 1;
    let mut d = 0.0;
    for oy in -r..=r {
        for ox in -r..=r {
            let g = kernel[((oy + r) * side + ox + r) as usize];
            let diff = z.get_reflect(a.0 + oy, a.1 + ox) - z.get_reflect(b.0 + oy, b.1 + ox);
            d += g * diff * diff;
        }
    }
    d
}

#[inline]
pub fn nlm_weight(d: f64, h: f64, is_center: bool) -> f64 {
    if is_center {
        0.0
    } else {
        (-d / (h * h)).exp()
    }
}

fn check_inputs(z: &FloatImage, mask: &PixelMask, p: &NlmParams, h: f64) -> Result<()> {
    p.validate()?;
    if z.dimensions() != mask.dimensions() {
        return Err(Error::DimensionMismatch {
            left_width: z.width(),
            left_height: z.height(),
            right_width: mask.width(),
            right_height: mask.height(),
        });
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing parameter h = {h} must be positive"
        )));
    }
    Ok(())
}

/// Direct evaluation, one patch distance at a time. `O(pixels * search^2 *
/// patch^2)`; meant for small inputs and as the reference implementation.
pub fn nlm_restore_naive(z: &FloatImage, mask: &PixelMask, p: &NlmParams) -> Result<FloatImage> {
    let h = smoothing_h(mask, p);
    nlm_restore_naive_with_h(z, mask, p, h)
}

pub fn nlm_restore_naive_with_h(
    z: &FloatImage,
    mask: &PixelMask,
    p: &NlmParams,
    h: f64,
) -> Result<FloatImage> {
    check_inputs(z, mask, p, h)?;
    let (width, height) = z.dimensions();
    let s = p.search_radius as isize;
    let mut out = z.clone();
    for i in 0..height {
        for j in 0..width {
            if !mask.get(i, j) {
                continue;
            }
            let centre = (i as isize, j as isize);
            let (mut acc, mut c) = (0.0, 0.0);
            for dy in -s..=s {
                for dx in -s..=s {
                    let other = (centre.0 + dy, centre.1 + dx);
                    let d = patch_distance(z, centre, other, p);
                    let u = nlm_weight(d, h, dy == 0 && dx == 0);
                    acc += u * z.get_reflect(other.0, other.1);
                    c += u;
                }
            }
            if c >= MIN_WEIGHT_SUM {
                out.set(i, j, acc / c);
            }
        }
    }
    Ok(out)
}

/// Same result as [`nlm_restore_naive`] (to floating-point reassociation),
/// computed offset by offset with separable line sums so each patch distance
/// costs O(1) for uniform kernels.
pub fn nlm_restore_fast(z: &FloatImage, mask: &PixelMask, p: &NlmParams) -> Result<FloatImage> {
    let h = smoothing_h(mask, p);
    nlm_restore_fast_with_h(z, mask, p, h)
}

pub fn nlm_restore_fast_with_h(
    z: &FloatImage,
    mask: &PixelMask,
    p: &NlmParams,
    h: f64,
) -> Result<FloatImage> {
    check_inputs(z, mask, p, h)?;
    let (width, height) = z.dimensions();
    let margin = p.search_radius + p.patch_radius;
    let padded = Padded::new(z, margin);
    let kernel = p.line_kernel();
    let uniform = p.kernel_a == 0.0;
    let inv_h2 = 1.0 / (h * h);

    let strips: Vec<(usize, Vec<f64>)> = (0..height)
        .step_by(STRIP_ROWS)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|row0| {
            let row1 = (row0 + STRIP_ROWS).min(height);
            let mut out = z.pixels()[row0 * width..row1 * width].to_vec();
            let any_flagged = mask.bits()[row0 * width..row1 * width].iter().any(|&b| b);
            if any_flagged {
                let ctx = StripContext {
                    padded: &padded,
                    mask,
                    kernel: &kernel,
                    uniform,
                    inv_h2,
                    patch_radius: p.patch_radius,
                    search_radius: p.search_radius,
                    row0,
                    row1,
                };
                ctx.run(&mut out);
            }
            (row0, out)
        })
        .collect();

    let mut pixels = Vec::with_capacity(width * height);
    for (_, rows) in strips {
        pixels.extend(rows);
    }
    FloatImage::new(width, height, pixels)
}

/// Reflect-101 padded copy of the working image. Unlike
/// [`crate::image::PadReflect`], the margin may exceed the image size.
struct Padded {
    data: Vec<f64>,
    stride: usize,
    margin: usize,
}

impl Padded {
    fn new(z: &FloatImage, margin: usize) -> Self {
        let (w, h) = z.dimensions();
        let stride = w + 2 * margin;
        let m = margin as isize;
        let mut data = Vec::with_capacity(stride * (h + 2 * margin));
        for pi in 0..h + 2 * margin {
            let si = reflect_index(pi as isize - m, h);
            for pj in 0..stride {
                data.push(z.get(si, reflect_index(pj as isize - m, w)));
            }
        }
        Self {
            data,
            stride,
            margin,
        }
    }

    /// Value at image coordinates `(i, j)`, which may lie in the margin.
    #[inline]
    fn at(&self, i: isize, j: isize) -> f64 {
        let m = self.margin as isize;
        self.data[((i + m) as usize) * self.stride + (j + m) as usize]
    }
}

struct StripContext<'a> {
    padded: &'a Padded,
    mask: &'a PixelMask,
    kernel: &'a [f64],
    uniform: bool,
    inv_h2: f64,
    patch_radius: usize,
    search_radius: usize,
    row0: usize,
    row1: usize,
}

impl StripContext<'_> {
    fn run(&self, out: &mut [f64]) {
        let width = self.mask.width();
        let rows = self.row1 - self.row0;
        let r = self.patch_radius;
        let ext_w = width + 2 * r;
        let ext_h = rows + 2 * r;
        let s = self.search_radius as isize;

        let mut diff = vec![0.0; ext_w * ext_h];
        let mut vert = vec![0.0; ext_w * rows];
        let mut acc = vec![0.0; width * rows];
        let mut norm = vec![0.0; width * rows];
        let mut dist_row = vec![0.0; width];

        let flagged: Vec<(usize, usize)> = (0..rows)
            .flat_map(|a| (0..width).map(move |b| (a, b)))
            .filter(|&(a, b)| self.mask.get(self.row0 + a, b))
            .collect();
        let mut flagged_rows = vec![false; rows];
        for &(a, _) in &flagged {
            flagged_rows[a] = true;
        }

        for dy in -s..=s {
            for dx in -s..=s {
                if dy == 0 && dx == 0 {
                    continue;
                }
                self.squared_differences(dy, dx, &mut diff, ext_w, ext_h);
                self.vertical_sums(&diff, &mut vert, ext_w, rows, &flagged_rows);
                for a in (0..rows).filter(|&a| flagged_rows[a]) {
                    self.horizontal_sums(&vert[a * ext_w..(a + 1) * ext_w], &mut dist_row);
                    let i = (self.row0 + a) as isize;
                    for b in 0..width {
                        if !self.mask.get(self.row0 + a, b) {
                            continue;
                        }
                        let u = (-dist_row[b] * self.inv_h2).exp();
                        acc[a * width + b] += u * self.padded.at(i + dy, b as isize + dx);
                        norm[a * width + b] += u;
                    }
                }
            }
        }

        for (a, b) in flagged {
            let k = a * width + b;
            if norm[k] >= MIN_WEIGHT_SUM {
                out[k] = acc[k] / norm[k];
            }
        }
    }

    /// `diff[y][x] = (Z(p) - Z(p + t))^2` over the strip extended by the patch
    /// radius on every side.
    fn squared_differences(
        &self,
        dy: isize,
        dx: isize,
        diff: &mut [f64],
        ext_w: usize,
        ext_h: usize,
    ) {
        let r = self.patch_radius as isize;
        for y in 0..ext_h {
            let i = self.row0 as isize + y as isize - r;
            let row = &mut diff[y * ext_w..(y + 1) * ext_w];
            for (x, slot) in row.iter_mut().enumerate() {
                let j = x as isize - r;
                let e = self.padded.at(i, j) - self.padded.at(i + dy, j + dx);
                *slot = e * e;
            }
        }
    }

    fn vertical_sums(
        &self,
        diff: &[f64],
        vert: &mut [f64],
        ext_w: usize,
        rows: usize,
        wanted: &[bool],
    ) {
        let span = 2 * self.patch_radius + 1;
        for a in (0..rows).filter(|&a| wanted[a]) {
            let dst = &mut vert[a * ext_w..(a + 1) * ext_w];
            dst.fill(0.0);
            for (k, &g) in self.kernel.iter().enumerate().take(span) {
                let src = &diff[(a + k) * ext_w..(a + k + 1) * ext_w];
                if self.uniform {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += s;
                    }
                } else {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += g * s;
                    }
                }
            }
        }
    }

    /// Patch distances for one row from its column sums: a running window
    /// sum for uniform kernels, a short convolution otherwise.
    fn horizontal_sums(&self, vert: &[f64], out: &mut [f64]) {
        let span = 2 * self.patch_radius + 1;
        if self.uniform {
            let scale = 1.0 / (span * span) as f64;
            let mut running: f64 = vert[..span].iter().sum();
            out[0] = running * scale;
            for b in 1..out.len() {
                running += vert[b + span - 1] - vert[b - 1];
                out[b] = running * scale;
            }
        } else {
            for (b, o) in out.iter_mut().enumerate() {
                *o = self
                    .kernel
                    .iter()
                    .zip(&vert[b..b + span])
                    .map(|(g, v)| g * v)
                    .sum();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_float(w: usize, h: usize, rng: &mut ChaCha8Rng) -> FloatImage {
        FloatImage::new(
            w,
            h,
            (0..w * h).map(|_| rng.random_range(0.0..255.0)).collect(),
        )
        .unwrap()
    }

    fn random_mask(w: usize, h: usize, density: f64, rng: &mut ChaCha8Rng) -> PixelMask {
        PixelMask::new(w, h, (0..w * h).map(|_| rng.random_bool(density)).collect()).unwrap()
    }

    #[test]
    fn smoothing_h_examples() {
        let p = NlmParams::default();
        assert_eq!(smoothing_h(&PixelMask::zeros(4, 4).unwrap(), &p), 4.5595);
        let full = PixelMask::new(4, 4, vec![true; 16]).unwrap();
        assert!((smoothing_h(&full, &p) - 12.8095).abs() < 1e-12);
        let half = PixelMask::new(2, 1, vec![true, false]).unwrap();
        assert!((smoothing_h(&half, &p) - 8.12985).abs() < 1e-12);
    }

    #[test]
    fn smoothing_h_increases_with_noise() {
        let p = NlmParams::default();
        let hs: Vec<f64> = (0..=100)
            .map(|k| smoothing_h_for_fraction(k as f64 / 100.0, &p))
            .collect();
        assert!(hs.windows(2).all(|w| w[1] > w[0]));
        assert!(hs.iter().all(|&h| h > 0.0));
    }

    #[test]
    fn weights() {
        assert_eq!(nlm_weight(0.0, 5.0, true), 0.0);
        assert_eq!(nlm_weight(123.0, 5.0, true), 0.0);
        assert_eq!(nlm_weight(0.0, 5.0, false), 1.0);
        assert!((nlm_weight(25.0, 5.0, false) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn patch_distance_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = random_float(12, 12, &mut rng);
        let p = NlmParams::default();
        assert_eq!(patch_distance(&z, (5, 5), (5, 5), &p), 0.0);

        let flat_a = FloatImage::new(12, 12, vec![40.0; 144]).unwrap();
        let mut px = vec![40.0; 144];
        for (k, v) in px.iter_mut().enumerate() {
            if k % 12 >= 6 {
                *v = 47.0;
            }
        }
        let split = FloatImage::new(12, 12, px).unwrap();
        let p1 = NlmParams {
            patch_radius: 1,
            ..Default::default()
        };
        // left 3x3 patch is all 40, right patch all 47
        let d = patch_distance(&split, (5, 1), (5, 9), &p1);
        assert!((d - 49.0).abs() < 1e-12);
        assert_eq!(patch_distance(&flat_a, (0, 0), (11, 11), &p1), 0.0);
    }

    #[test]
    fn patch_distance_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = random_float(9, 9, &mut rng);
        for kernel_a in [0.0, 1.3] {
            let p = NlmParams {
                kernel_a,
                ..Default::default()
            };
            let (a, b) = ((4isize, 4isize), (2isize, 6isize));
            // unnormalised Gaussian written out independently
            let mut num = 0.0;
            let mut den = 0.0;
            for oy in -2isize..=2 {
                for ox in -2isize..=2 {
                    let g = if kernel_a > 0.0 {
                        (-((oy * oy + ox * ox) as f64) / (2.0 * kernel_a * kernel_a)).exp()
                    } else {
                        1.0
                    };
                    let e = z.get((a.0 + oy) as usize, (a.1 + ox) as usize)
                        - z.get((b.0 + oy) as usize, (b.1 + ox) as usize);
                    num += g * e * e;
                    den += g;
                }
            }
            assert!((patch_distance(&z, a, b, &p) - num / den).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_mask_and_constant_image_are_fixed_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = random_float(20, 17, &mut rng);
        let p = NlmParams {
            search_radius: 4,
            ..Default::default()
        };
        let none = PixelMask::zeros(20, 17).unwrap();
        assert_eq!(nlm_restore_naive(&z, &none, &p).unwrap(), z);
        assert_eq!(nlm_restore_fast(&z, &none, &p).unwrap(), z);

        let flat = FloatImage::new(20, 17, vec![77.25; 340]).unwrap();
        let mask = random_mask(20, 17, 0.5, &mut rng);
        for out in [
            nlm_restore_naive(&flat, &mask, &p).unwrap(),
            nlm_restore_fast(&flat, &mask, &p).unwrap(),
        ] {
            assert!(out.pixels().iter().all(|&v| (v - 77.25).abs() < 1e-12));
        }
    }

    #[test]
    fn underflowing_weights_keep_input() {
        let mut px = vec![0.0; 81];
        px[40] = 255.0;
        // checkerboard of extremes: every other patch is far away
        for (k, v) in px.iter_mut().enumerate() {
            *v = if k % 2 == 0 { 0.0 } else { 255.0 };
        }
        let z = FloatImage::new(9, 9, px).unwrap();
        let mut mask = PixelMask::zeros(9, 9).unwrap();
        mask.set(4, 4, true);
        let p = NlmParams {
            patch_radius: 1,
            search_radius: 1,
            ..Default::default()
        };
        // with a tiny h every non-centre weight underflows to zero
        let out = nlm_restore_naive_with_h(&z, &mask, &p, 1e-3).unwrap();
        assert_eq!(out, z);
        let out = nlm_restore_fast_with_h(&z, &mask, &p, 1e-3).unwrap();
        assert_eq!(out, z);
    }

    #[test]
    fn centre_value_never_enters_the_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = random_float(15, 15, &mut rng);
        let mut mask = PixelMask::zeros(15, 15).unwrap();
        mask.set(7, 7, true);
        let p = NlmParams {
            patch_radius: 0,
            search_radius: 3,
            ..Default::default()
        };
        let others: f64 = (4..=10)
            .flat_map(|i| (4..=10).map(move |j| (i, j)))
            .filter(|&(i, j)| (i, j) != (7, 7))
            .map(|(i, j)| z.get(i, j))
            .sum::<f64>()
            / 48.0;
        // with an enormous h every weight is 1 except the centre's 0
        for centre in [3.0, 250.0] {
            let mut px = z.pixels().to_vec();
            px[7 * 15 + 7] = centre;
            let moved = FloatImage::new(15, 15, px).unwrap();
            let fast = nlm_restore_fast_with_h(&moved, &mask, &p, 1e9)
                .unwrap()
                .get(7, 7);
            let naive = nlm_restore_naive_with_h(&moved, &mask, &p, 1e9)
                .unwrap()
                .get(7, 7);
            assert!((fast - others).abs() < 1e-6);
            assert!((naive - others).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let z = FloatImage::new(4, 4, vec![0.0; 16]).unwrap();
        let m = PixelMask::zeros(4, 4).unwrap();
        let bad = NlmParams {
            search_radius: 0,
            ..Default::default()
        };
        assert!(nlm_restore_fast(&z, &m, &bad).is_err());
        let bad = NlmParams {
            kernel_a: -1.0,
            ..Default::default()
        };
        assert!(nlm_restore_naive(&z, &m, &bad).is_err());
        let m2 = PixelMask::zeros(3, 4).unwrap();
        assert!(nlm_restore_fast(&z, &m2, &NlmParams::default()).is_err());
    }

    #[test]
    fn fast_is_independent_of_thread_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let z = random_float(70, 53, &mut rng);
        let mask = random_mask(70, 53, 0.4, &mut rng);
        let p = NlmParams {
            search_radius: 5,
            ..Default::default()
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| nlm_restore_fast(&z, &mask, &p).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(7));
    }
}
