//! Impulse detection with an adaptive window.
//!
//! Only pixels at exactly 0 or 255 are candidates. A candidate is noisy as
//! soon as a growing square window around it contains a non-extreme pixel.
//! If the window reaches its maximum radius without finding one, the
//! candidate is treated as texture when the share of window pixels with its
//! own value exceeds the threshold, and as noise otherwise.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GrayImage, PixelMask};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorParams {
    /// Largest window radius tried.
    pub w_max: usize,
    /// Radius increment between successive windows.
    pub w_step: usize,
    /// Proportion threshold: a fully extreme window is noise when the
    /// same-value share is `<= threshold`.
    pub threshold: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            w_max: 7,
            w_step: 1,
            threshold: 0.8,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if self.w_max == 0 {
            return Err(Error::InvalidParameter("w_max must be at least 1".into()));
        }
        if self.w_step == 0 || self.w_step > self.w_max {
            return Err(Error::InvalidParameter(
                "w_step must be in [1, w_max]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter("threshold must be in [0,1]".into()));
        }
        Ok(())
    }

    /// Radii visited by the window search, ending at `w_max`.
    pub fn radii(&self) -> impl Iterator<Item = usize> + '_ {
        let mut next = Some(1usize);
        std::iter::from_fn(move || {
            let w = next?;
            next = if w >= self.w_max {
                None
            } else {
                Some((w + self.w_step).min(self.w_max))
            };
            Some(w)
        })
    }
}

#[inline]
pub fn is_extreme(v: u8) -> bool {
    v == 0 || v == 255
}

/// Per-pixel outcome of the detection pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectionResult {
    /// Discriminant: pixels classified as noisy.
    pub mask: PixelMask,
    /// Window radius at which each candidate's search stopped; 0 for
    /// non-candidates.
    pub window: Vec<usize>,
}

impl DetectionResult {
    #[inline]
    pub fn window_at(&self, i: usize, j: usize) -> usize {
        self.window[i * self.mask.width() + j]
    }
}

/// Counts over the `(2w+1)^2` window centred at `(i, j)`, reflect-101 at
/// the borders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowStats {
    /// Pixels that are neither 0 nor 255.
    pub non_extreme: usize,
    /// Pixels equal to the centre value, centre included.
    pub same_value: usize,
}

pub fn candidate_mask(img: &GrayImage) -> PixelMask {
    let bits = img.pixels().iter().map(|&v| is_extreme(v)).collect();
    PixelMask::new(img.width(), img.height(), bits).expect("dimensions come from a valid image")
}

pub fn window_stats(img: &GrayImage, i: usize, j: usize, w: usize) -> WindowStats {
    let center = img.get(i, j);
    let (ci, cj, r) = (i as isize, j as isize, w as isize);
    let mut stats = WindowStats {
        non_extreme: 0,
        same_value: 0,
    };
    for di in -r..=r {
        for dj in -r..=r {
            let v = img.get_reflect(ci + di, cj + dj);
            stats.non_extreme += usize::from(!is_extreme(v));
            stats.same_value += usize::from(v == center);
        }
    }
    stats
}

/// Classifies one candidate. Returns `(is_noisy, radius)`.
///
/// # Panics
///
/// If the pixel at `(i, j)` is not 0 or 255.
pub fn detect_pixel(img: &GrayImage, i: usize, j: usize, p: &DetectorParams) -> (bool, usize) {
    assert!(
        is_extreme(img.get(i, j)),
        "detect_pixel called on non-candidate ({i}, {j}) with value {}",
        img.get(i, j)
    );
    let mut last = 1;
    for w in p.radii() {
        last = w;
        if window_stats(img, i, j, w).non_extreme > 0 {
            return (true, w);
        }
    }
    let side = 2 * last + 1;
    let rho = window_stats(img, i, j, last).same_value as f64 / (side * side) as f64;
    (rho <= p.threshold, last)
}

pub fn detect(img: &GrayImage, p: &DetectorParams) -> Result<DetectionResult> {
    p.validate()?;
    let (w, h) = img.dimensions();
    let rows: Vec<(Vec<bool>, Vec<usize>)> = (0..h)
        .into_par_iter()
        .map(|i| {
            let mut bits = vec![false; w];
            let mut radii = vec![0; w];
            for j in 0..w {
                if is_extreme(img.get(i, j)) {
                    let (noisy, r) = detect_pixel(img, i, j, p);
                    bits[j] = noisy;
                    radii[j] = r;
                }
            }
            (bits, radii)
        })
        .collect();
    let mut bits = Vec::with_capacity(w * h);
    let mut window = Vec::with_capacity(w * h);
    for (b, r) in rows {
        bits.extend(b);
        window.extend(r);
    }
    Ok(DetectionResult {
        mask: PixelMask::new(w, h, bits)?,
        window,
    })
}
