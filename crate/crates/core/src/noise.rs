//! Salt-and-pepper corruption with ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{GrayImage, PixelMask};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Probability that a pixel is corrupted.
    pub density: f64,
    /// Share of corrupted pixels that become 255; the rest become 0.
    pub salt_fraction: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(density: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            density,
            salt_fraction: 0.5,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::InvalidParameter("density must be in [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.salt_fraction) {
            return Err(Error::InvalidParameter(
                "salt fraction must be in [0,1]".into(),
            ));
        }
        Ok(())
    }
}

/// Corrupts each pixel independently: with probability `density` it is
/// overwritten by 255 (share `salt_fraction`) or 0, otherwise it is kept.
///
/// The generator is ChaCha8 seeded with `spec.seed`; every pixel consumes
/// exactly two `f64` draws in raster order, so the output depends only on
/// the seed and the image size.
pub fn inject_sap(img: &GrayImage, spec: &NoiseSpec) -> Result<(GrayImage, PixelMask)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pixels = img.pixels().to_vec();
    let mut truth = vec![false; pixels.len()];
    for (px, hit) in pixels.iter_mut().zip(truth.iter_mut()) {
        let corrupt: f64 = rng.random();
        let salt: f64 = rng.random();
        if corrupt < spec.density {
            *px = if salt < spec.salt_fraction { 255 } else { 0 };
            *hit = true;
        }
    }
    Ok((
        GrayImage::new(img.width(), img.height(), pixels)?,
        PixelMask::new(img.width(), img.height(), truth)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |i, j| ((i * 7 + j * 3) % 256) as u8).unwrap()
    }

    #[test]
    fn zero_density_is_identity() {
        let img = ramp(32, 32);
        let (noisy, truth) = inject_sap(&img, &NoiseSpec::new(0.0, 1).unwrap()).unwrap();
        assert_eq!(noisy, img);
        assert_eq!(truth.count_ones(), 0);
    }

    #[test]
    fn full_density_corrupts_everything() {
        let img = ramp(32, 32);
        let (noisy, truth) = inject_sap(&img, &NoiseSpec::new(1.0, 1).unwrap()).unwrap();
        assert!(noisy.pixels().iter().all(|&v| v == 0 || v == 255));
        assert_eq!(truth.count_ones(), 32 * 32);
    }

    #[test]
    fn salt_fraction_extremes() {
        let img = ramp(16, 16);
        let spec = NoiseSpec {
            density: 1.0,
            salt_fraction: 1.0,
            seed: 3,
        };
        let (noisy, _) = inject_sap(&img, &spec).unwrap();
        assert!(noisy.pixels().iter().all(|&v| v == 255));
        let spec = NoiseSpec {
            salt_fraction: 0.0,
            ..spec
        };
        let (noisy, _) = inject_sap(&img, &spec).unwrap();
        assert!(noisy.pixels().iter().all(|&v| v == 0));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(NoiseSpec::new(1.5, 0).is_err());
        assert!(NoiseSpec::new(-0.1, 0).is_err());
        let bad = NoiseSpec {
            density: 0.5,
            salt_fraction: 2.0,
            seed: 0,
        };
        assert!(inject_sap(&ramp(2, 2), &bad).is_err());
    }

    #[test]
    fn already_extreme_pixels_are_still_marked() {
        let img = GrayImage::filled(64, 64, 255).unwrap();
        let spec = NoiseSpec {
            density: 0.5,
            salt_fraction: 1.0,
            seed: 11,
        };
        let (noisy, truth) = inject_sap(&img, &spec).unwrap();
        assert_eq!(noisy, img);
        assert!(truth.count_ones() > 0);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn corruption_model_holds(alpha in 0.0f64..=1.0, seed: u64) {
            let img = ramp(96, 96);
            let spec = NoiseSpec::new(alpha, seed).unwrap();
            let (noisy, truth) = inject_sap(&img, &spec).unwrap();
            let (again, truth2) = inject_sap(&img, &spec).unwrap();
            proptest::prop_assert_eq!(&noisy, &again);
            proptest::prop_assert_eq!(&truth, &truth2);
            for k in 0..img.pixels().len() {
                if truth.bits()[k] {
                    let v = noisy.pixels()[k];
                    proptest::prop_assert!(v == 0 || v == 255);
                } else {
                    proptest::prop_assert_eq!(noisy.pixels()[k], img.pixels()[k]);
                }
            }
            let n = (96 * 96) as f64;
            let frac = truth.count_ones() as f64 / n;
            let sigma = (alpha * (1.0 - alpha) / n).sqrt();
            // 5 sigma over 32 cases keeps the false-failure rate negligible
            proptest::prop_assert!((frac - alpha).abs() <= 5.0 * sigma + 1e-12);
        }
    }

    #[test]
    fn fraction_concentrates_within_three_sigma() {
        let img = ramp(256, 256);
        for (k, &alpha) in [0.1, 0.3, 0.5, 0.7, 0.9].iter().enumerate() {
            let (_, truth) =
                inject_sap(&img, &NoiseSpec::new(alpha, 100 + k as u64).unwrap()).unwrap();
            let n = (256 * 256) as f64;
            let frac = truth.count_ones() as f64 / n;
            assert!(
                (frac - alpha).abs() < 3.0 * (alpha * (1.0 - alpha) / n).sqrt(),
                "{alpha} {frac}"
            );
        }
    }
}
