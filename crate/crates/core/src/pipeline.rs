use std::fmt;
use std::str::FromStr;

use crate::detector::DetectorParams;
use crate::error::{Error, Result};
use crate::image::{GrayImage, PixelMask};
use crate::median::median_filter;
use crate::nlm::{nlm_restore_fast_with_h, smoothing_h, NlmParams};
use crate::stage1::restore_stage1;

/// All tunables of the two-stage filter.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NamfParams {
    pub detector: DetectorParams,
    pub nlm: NlmParams,
}

impl NamfParams {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        self.nlm.validate()
    }
}

/// Output of [`namf_detailed`].
#[derive(Clone, Debug, PartialEq)]
pub struct NamfOutput {
    pub image: GrayImage,
    pub mask: PixelMask,
    pub h: f64,
}

/// Detection + adaptive mean, then non-local means on the detected pixels.
/// The result is clamped to `[0, 255]` and rounded once at the end.
pub fn namf(img: &GrayImage, params: &NamfParams) -> Result<GrayImage> {
    Ok(namf_detailed(img, params)?.image)
}

pub fn namf_detailed(img: &GrayImage, params: &NamfParams) -> Result<NamfOutput> {
    params.validate()?;
    let stage1 = restore_stage1(img, &params.detector)?;
    let h = smoothing_h(&stage1.mask, &params.nlm);
    let refined = nlm_restore_fast_with_h(&stage1.restored, &stage1.mask, &params.nlm, h)?;
    Ok(NamfOutput {
        image: refined.to_gray(),
        mask: stage1.mask,
        h,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Namf,
    Mf,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Namf, Method::Mf];

    pub fn id(self) -> &'static str {
        match self {
            Method::Namf => "namf",
            Method::Mf => "mf",
        }
    }

    pub fn apply(self, img: &GrayImage, params: &NamfParams) -> Result<GrayImage> {
        match self {
            Method::Namf => namf(img, params),
            Method::Mf => Ok(median_filter(img)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "namf" => Ok(Method::Namf),
            "mf" => Ok(Method::Mf),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected namf or mf)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{inject_sap, NoiseSpec};

    #[test]
    fn clean_image_is_unchanged() {
        let img = GrayImage::from_fn(40, 40, |i, j| (20 + (i * 3 + j * 5) % 200) as u8).unwrap();
        let small = NamfParams {
            nlm: NlmParams {
                search_radius: 5,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(namf(&img, &small).unwrap(), img);
    }

    #[test]
    fn improves_noisy_gradient() {
        let img = GrayImage::from_fn(48, 48, |i, j| (40 + 2 * i + j) as u8).unwrap();
        let (noisy, _) = inject_sap(&img, &NoiseSpec::new(0.5, 21).unwrap()).unwrap();
        let params = NamfParams {
            nlm: NlmParams {
                search_radius: 6,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = namf_detailed(&noisy, &params).unwrap();
        let before = crate::metrics::psnr(&img, &noisy).unwrap();
        let after = crate::metrics::psnr(&img, &out.image).unwrap();
        assert!(after > before + 15.0, "{before} -> {after}");
        assert!(out.h > NlmParams::default().beta0);
    }

    #[test]
    fn method_ids_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.id().parse::<Method>().unwrap(), m);
        }
        assert!("amf".parse::<Method>().is_err());
    }
}
