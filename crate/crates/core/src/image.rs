//! Raster containers shared by every stage of the pipeline.
//!
//! All rasters are row-major with the origin at the top-left pixel. Row index
//! `i` runs over `0..height`, column index `j` over `0..width`.

use crate::error::{Error, Result};

/// Maps a possibly out-of-range coordinate onto `0..n` by mirror reflection
/// without repeating the edge sample (reflect-101: `-1 -> 1`, `n -> n-2`).
///
/// Coordinates further than one period away keep reflecting, so the mapping is
/// defined for any offset.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    if (0..n).contains(&i) {
        return i as usize;
    }
    let period = 2 * (n - 1);
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - m }) as usize
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions {
            width,
            height,
            reason: "width and height must be positive",
        });
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidDimensions {
            width,
            height,
            reason: "pixel buffer length does not match width*height",
        });
    }
    Ok(())
}

fn pad_plane<T: Copy>(
    src: &[T],
    width: usize,
    height: usize,
    radius: usize,
) -> Result<(Vec<T>, usize, usize)> {
    if radius >= width.min(height) && radius > 0 {
        return Err(Error::RadiusTooLarge {
            radius,
            width,
            height,
        });
    }
    let pw = width + 2 * radius;
    let ph = height + 2 * radius;
    let r = radius as isize;
    let mut out = Vec::with_capacity(pw * ph);
    for pi in 0..ph {
        let si = reflect_index(pi as isize - r, height);
        let row = &src[si * width..(si + 1) * width];
        for pj in 0..pw {
            out.push(row[reflect_index(pj as isize - r, width)]);
        }
    }
    Ok((out, pw, ph))
}

/// Reflect-101 boundary padding.
pub trait PadReflect: Sized {
    /// Returns a `(width + 2r) x (height + 2r)` image whose interior equals
    /// `self`. Fails when `radius >= min(width, height)`.
    fn pad_reflect(&self, radius: usize) -> Result<Self>;
}

/// 8-bit single-channel image.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                pixels.push(f(i, j));
            }
        }
        Self::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.pixels[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u8) {
        self.pixels[i * self.width + j] = v;
    }

    /// Pixel lookup with reflect-101 extension outside the image.
    #[inline]
    pub fn get_reflect(&self, i: isize, j: isize) -> u8 {
        self.get(reflect_index(i, self.height), reflect_index(j, self.width))
    }

    pub fn to_float(&self) -> FloatImage {
        FloatImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| f64::from(v)).collect(),
        }
    }

    pub(crate) fn same_dims(&self, other: &GrayImage) -> Result<()> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            });
        }
        Ok(())
    }
}

impl PadReflect for GrayImage {
    fn pad_reflect(&self, radius: usize) -> Result<Self> {
        let (pixels, width, height) = pad_plane(&self.pixels, self.width, self.height, radius)?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }
}

/// Real-valued working raster. Every entry is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "float image contains NaN or infinite values".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * self.width + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(v.is_finite());
        self.pixels[i * self.width + j] = v;
    }

    #[inline]
    pub fn get_reflect(&self, i: isize, j: isize) -> f64 {
        self.get(reflect_index(i, self.height), reflect_index(j, self.width))
    }

    /// Clamps to `[0, 255]` and rounds half away from zero.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self
                .pixels
                .iter()
                .map(|&v| v.clamp(0.0, 255.0).round() as u8)
                .collect(),
        }
    }
}

impl PadReflect for FloatImage {
    fn pad_reflect(&self, radius: usize) -> Result<Self> {
        let (pixels, width, height) = pad_plane(&self.pixels, self.width, self.height, radius)?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }
}

/// Binary per-pixel annotation (candidate indicator, discriminant, ground truth).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PixelMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[i * self.width + j] = v;
    }

    #[inline]
    pub fn get_reflect(&self, i: isize, j: isize) -> bool {
        self.get(reflect_index(i, self.height), reflect_index(j, self.width))
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// `true` when every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &PixelMask) -> bool {
        self.dimensions() == other.dimensions()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Renders the mask as a {0, 255} image.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }
}
