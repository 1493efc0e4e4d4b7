//! Undecimated (à-trous) Haar frame with periodic extension.
//!
//! At level `j` the one-dimensional filters are
//!
//! ```text
//! low:  (x[i] + x[i + s]) / 2        high: (x[i] - x[i + s]) / 2        s = 2^(j-1)
//! ```
//!
//! applied separably along both axes of the current approximation. Since
//! `LᵀL + GᵀG = I` for this pair, every level is a Parseval map and the
//! cascade satisfies `W Wᵀ = I`, where `Wᵀ` is [`analysis`] and `W` is
//! [`synthesis`]. The redundancy is `3·levels + 1`.
//!
//! Subband order is fixed: level 1 (H, V, D), level 2 (H, V, D), ...,
//! approximation last. `H` is low-pass along rows and high-pass down
//! columns (horizontal edges), `V` is the transpose case and `D` is
//! high-pass in both directions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Detail orientation within one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Horizontal = 0,
    Vertical = 1,
    Diagonal = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    levels: usize,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec { levels: 4 }
    }
}

impl FrameSpec {
    /// Per-dimension scale applied to both taps of each filter, at every
    /// level. This is what makes the frame Parseval.
    pub const TAP_SCALE: f64 = 0.5;

    pub fn new(levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::invalid("frame needs at least one level"));
        }
        if levels >= usize::BITS as usize - 1 {
            return Err(Error::invalid("too many frame levels"));
        }
        Ok(FrameSpec { levels })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn subband_count(&self) -> usize {
        3 * self.levels + 1
    }

    /// Image dimensions must be multiples of `2^levels`.
    pub fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        let block = 1usize << self.levels;
        let (h, w) = shape;
        if h == 0 || w == 0 || h % block != 0 || w % block != 0 {
            return Err(Error::invalid(format!(
                "image {h}x{w} is not divisible by 2^{} = {block}",
                self.levels
            )));
        }
        Ok(())
    }
}

/// Frame coefficients: `3·levels + 1` subbands, each the size of the image,
/// stored back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCoeffs {
    levels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FrameCoeffs {
    pub fn zeros(spec: &FrameSpec, shape: (usize, usize)) -> Self {
        let (height, width) = shape;
        FrameCoeffs {
            levels: spec.levels,
            height,
            width,
            data: vec![0.0; spec.subband_count() * height * width],
        }
    }

    pub fn from_data(spec: &FrameSpec, shape: (usize, usize), data: Vec<f64>) -> Result<Self> {
        let expected = spec.subband_count() * shape.0 * shape.1;
        if data.len() != expected {
            return Err(Error::LayoutMismatch(format!(
                "{} coefficients given, layout holds {expected}",
                data.len()
            )));
        }
        Ok(FrameCoeffs {
            levels: spec.levels,
            height: shape.0,
            width: shape.1,
            data,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn subband_count(&self) -> usize {
        3 * self.levels + 1
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn band_len(&self) -> usize {
        self.height * self.width
    }

    pub fn subband(&self, index: usize) -> &[f64] {
        let n = self.band_len();
        &self.data[index * n..(index + 1) * n]
    }

    pub fn subband_mut(&mut self, index: usize) -> &mut [f64] {
        let n = self.band_len();
        &mut self.data[index * n..(index + 1) * n]
    }

    /// Detail subband at `level` (1-based).
    pub fn detail(&self, level: usize, orientation: Orientation) -> &[f64] {
        assert!(level >= 1 && level <= self.levels);
        self.subband(3 * (level - 1) + orientation as usize)
    }

    pub fn approximation(&self) -> &[f64] {
        self.subband(3 * self.levels)
    }

    pub fn same_layout(&self, other: &FrameCoeffs) -> bool {
        self.levels == other.levels && self.height == other.height && self.width == other.width
    }

    pub(crate) fn check_layout(&self, other: &FrameCoeffs) -> Result<()> {
        if !self.same_layout(other) {
            return Err(Error::LayoutMismatch(format!(
                "{} levels on {}x{} vs {} levels on {}x{}",
                self.levels, self.height, self.width, other.levels, other.height, other.width
            )));
        }
        Ok(())
    }

    pub(crate) fn check_spec(&self, spec: &FrameSpec, shape: (usize, usize)) -> Result<()> {
        if self.levels != spec.levels || self.shape() != shape {
            return Err(Error::LayoutMismatch(format!(
                "coefficients have {} levels on {}x{}, expected {} levels on {}x{}",
                self.levels, self.height, self.width, spec.levels, shape.0, shape.1
            )));
        }
        Ok(())
    }

    /// `self += alpha · x`.
    pub fn axpy(&mut self, alpha: f64, x: &FrameCoeffs) -> Result<()> {
        self.check_layout(x)?;
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn dot(&self, other: &FrameCoeffs) -> Result<f64> {
        self.check_layout(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Sum of absolute values over all subbands.
    pub fn norm1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn norm2(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `alpha · x + y`.
pub fn coeffs_axpy(alpha: f64, x: &FrameCoeffs, y: &FrameCoeffs) -> Result<FrameCoeffs> {
    let mut out = y.clone();
    out.axpy(alpha, x)?;
    Ok(out)
}

pub fn coeffs_scale(alpha: f64, x: &FrameCoeffs) -> FrameCoeffs {
    let mut out = x.clone();
    out.scale(alpha);
    out
}

pub fn coeffs_norm1(x: &FrameCoeffs) -> f64 {
    x.norm1()
}

pub fn coeffs_norm2(x: &FrameCoeffs) -> f64 {
    x.norm2()
}

// Haar filter pair with periodic wrap. `shift` is the à-trous hole size and
// is always smaller than the axis length.
fn split_rows(src: &[f64], lo: &mut [f64], hi: &mut [f64], width: usize, shift: usize) {
    let k = FrameSpec::TAP_SCALE;
    for ((x, l), h) in src
        .chunks_exact(width)
        .zip(lo.chunks_exact_mut(width))
        .zip(hi.chunks_exact_mut(width))
    {
        for c in 0..width {
            let p = if c + shift < width { c + shift } else { c + shift - width };
            l[c] = k * (x[c] + x[p]);
            h[c] = k * (x[c] - x[p]);
        }
    }
}

fn merge_rows(lo: &[f64], hi: &[f64], dst: &mut [f64], width: usize, shift: usize) {
    let k = FrameSpec::TAP_SCALE;
    for ((l, h), d) in lo
        .chunks_exact(width)
        .zip(hi.chunks_exact(width))
        .zip(dst.chunks_exact_mut(width))
    {
        for c in 0..width {
            let p = if c >= shift { c - shift } else { c + width - shift };
            d[c] = k * (l[c] + l[p]) + k * (h[c] - h[p]);
        }
    }
}

fn split_cols(src: &[f64], lo: &mut [f64], hi: &mut [f64], width: usize, shift: usize) {
    let k = FrameSpec::TAP_SCALE;
    let height = src.len() / width;
    for r in 0..height {
        let p = (r + shift) % height;
        let a = &src[r * width..(r + 1) * width];
        let b = &src[p * width..(p + 1) * width];
        let l = &mut lo[r * width..(r + 1) * width];
        let h = &mut hi[r * width..(r + 1) * width];
        for c in 0..width {
            l[c] = k * (a[c] + b[c]);
            h[c] = k * (a[c] - b[c]);
        }
    }
}

// `Σ rows[i][c]`, left to right
#[inline(always)]
fn sum_at<const N: usize>(rows: &[&[f64]; N], c: usize) -> f64 {
    let mut s = rows[0][c];
    for row in &rows[1..] {
        s += row[c];
    }
    s
}

// column merge of the band sums `Σ lo` and `Σ hi`
fn merge_cols<const L: usize, const H: usize>(
    lo: [&[f64]; L],
    hi: [&[f64]; H],
    dst: &mut [f64],
    width: usize,
    shift: usize,
) {
    let k = FrameSpec::TAP_SCALE;
    let height = dst.len() / width;
    for r in 0..height {
        let p = (r + height - shift % height) % height;
        let l0 = lo.map(|b| &b[r * width..(r + 1) * width]);
        let l1 = lo.map(|b| &b[p * width..(p + 1) * width]);
        let h0 = hi.map(|b| &b[r * width..(r + 1) * width]);
        let h1 = hi.map(|b| &b[p * width..(p + 1) * width]);
        for (c, d) in dst[r * width..(r + 1) * width].iter_mut().enumerate() {
            *d = k * (sum_at(&l0, c) + sum_at(&l1, c)) + k * (sum_at(&h0, c) - sum_at(&h1, c));
        }
    }
}

/// Scratch buffers for repeated transforms at one image size.
#[derive(Debug, Clone)]
pub struct FrameWorkspace {
    spec: FrameSpec,
    height: usize,
    width: usize,
    approx: Vec<f64>,
    next: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl FrameWorkspace {
    pub fn new(spec: FrameSpec, shape: (usize, usize)) -> Result<Self> {
        spec.check_shape(shape)?;
        let n = shape.0 * shape.1;
        Ok(FrameWorkspace {
            spec,
            height: shape.0,
            width: shape.1,
            approx: vec![0.0; n],
            next: vec![0.0; n],
            lo: vec![0.0; n],
            hi: vec![0.0; n],
        })
    }

    pub fn spec(&self) -> &FrameSpec {
        &self.spec
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// `out = Wᵀ image`.
    pub fn analysis_into(&mut self, image: &[f64], out: &mut FrameCoeffs) -> Result<()> {
        let n = self.height * self.width;
        if image.len() != n {
            return Err(Error::invalid("image length does not match the workspace"));
        }
        out.check_spec(&self.spec, self.shape())?;
        let width = self.width;
        self.approx.copy_from_slice(image);
        for level in 1..=self.spec.levels {
            let shift = 1usize << (level - 1);
            split_rows(&self.approx, &mut self.lo, &mut self.hi, width, shift);
            let base = 3 * (level - 1) * n;
            let bands = &mut out.data[base..base + 3 * n];
            let (h_band, rest) = bands.split_at_mut(n);
            let (v_band, d_band) = rest.split_at_mut(n);
            split_cols(&self.lo, &mut self.next, h_band, width, shift);
            split_cols(&self.hi, v_band, d_band, width, shift);
            core::mem::swap(&mut self.approx, &mut self.next);
        }
        out.subband_mut(3 * self.spec.levels)
            .copy_from_slice(&self.approx);
        Ok(())
    }

    /// `out = W coeffs`.
    pub fn synthesis_into(&mut self, coeffs: &FrameCoeffs, out: &mut [f64]) -> Result<()> {
        self.synthesis_of([coeffs], out)
    }

    /// `out = W (a + b)` without forming `a + b`.
    pub fn synthesis_of_sum_into(&mut self, a: &FrameCoeffs, b: &FrameCoeffs, out: &mut [f64]) -> Result<()> {
        self.synthesis_of([a, b], out)
    }

    fn synthesis_of<const N: usize>(&mut self, parts: [&FrameCoeffs; N], out: &mut [f64]) -> Result<()> {
        for c in parts {
            c.check_spec(&self.spec, self.shape())?;
        }
        if out.len() != self.height * self.width {
            return Err(Error::invalid("image length does not match the workspace"));
        }
        let width = self.width;
        let approx = parts.map(|c| c.approximation());
        for (i, a) in self.approx.iter_mut().enumerate() {
            *a = sum_at(&approx, i);
        }
        for level in (1..=self.spec.levels).rev() {
            let shift = 1usize << (level - 1);
            let h_band = parts.map(|c| c.detail(level, Orientation::Horizontal));
            let v_band = parts.map(|c| c.detail(level, Orientation::Vertical));
            let d_band = parts.map(|c| c.detail(level, Orientation::Diagonal));
            merge_cols([&self.approx[..]], h_band, &mut self.lo, width, shift);
            merge_cols(v_band, d_band, &mut self.hi, width, shift);
            merge_rows(&self.lo, &self.hi, &mut self.approx, width, shift);
        }
        out.copy_from_slice(&self.approx);
        Ok(())
    }
}

/// Analysis operator `Wᵀ`.
pub fn analysis(image: &ImageBuffer, spec: &FrameSpec) -> Result<FrameCoeffs> {
    let mut ws = FrameWorkspace::new(*spec, image.shape())?;
    let mut out = FrameCoeffs::zeros(spec, image.shape());
    ws.analysis_into(image.data(), &mut out)?;
    Ok(out)
}

/// Synthesis operator `W`, the adjoint of [`analysis`] and its left inverse.
pub fn synthesis(coeffs: &FrameCoeffs, spec: &FrameSpec) -> Result<ImageBuffer> {
    let shape = coeffs.shape();
    coeffs.check_spec(spec, shape)?;
    let mut ws = FrameWorkspace::new(*spec, shape)?;
    let mut out = vec![0.0; shape.0 * shape.1];
    ws.synthesis_into(coeffs, &mut out)?;
    Ok(ImageBuffer::from_raw(shape.0, shape.1, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_image(h: usize, w: usize) -> ImageBuffer {
        ImageBuffer::from_fn(h, w, |r, c| {
            libm::sin(0.37 * (r * r) as f64 + 1.1 * c as f64) * 50.0 + (r ^ c) as f64
        })
    }

    #[test]
    fn constant_image_has_no_details() {
        let img = ImageBuffer::from_fn(16, 16, |_, _| 7.5);
        let spec = FrameSpec::new(1).unwrap();
        let c = analysis(&img, &spec).unwrap();
        assert_eq!(c.subband_count(), 4);
        for o in [Orientation::Horizontal, Orientation::Vertical, Orientation::Diagonal] {
            assert!(c.detail(1, o).iter().all(|&v| v == 0.0));
        }
        assert!(c.approximation().iter().all(|&v| (v - 7.5).abs() < 1e-12));
    }

    #[test]
    fn zero_in_zero_out() {
        let spec = FrameSpec::new(3).unwrap();
        let c = analysis(&ImageBuffer::zeros(16, 8), &spec).unwrap();
        assert_eq!(c.norm1(), 0.0);
        let img = synthesis(&FrameCoeffs::zeros(&spec, (16, 8)), &spec).unwrap();
        assert!(img.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn round_trip_and_linearity() {
        let spec = FrameSpec::new(2).unwrap();
        let img = test_image(16, 16);
        let c = analysis(&img, &spec).unwrap();
        let back = synthesis(&c, &spec).unwrap();
        for (a, b) in back.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        let doubled = synthesis(&coeffs_scale(2.0, &c), &spec).unwrap();
        for (a, b) in doubled.data().iter().zip(img.data()) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indivisible_dimensions() {
        let spec = FrameSpec::new(4).unwrap();
        assert!(matches!(
            analysis(&test_image(24, 32), &spec),
            Err(Error::InvalidArgument(_))
        ));
        assert!(FrameSpec::new(0).is_err());
    }

    #[test]
    fn rejects_wrong_layout() {
        let c = FrameCoeffs::zeros(&FrameSpec::new(2).unwrap(), (16, 16));
        assert!(matches!(
            synthesis(&c, &FrameSpec::new(3).unwrap()),
            Err(Error::LayoutMismatch(_))
        ));
        let other = FrameCoeffs::zeros(&FrameSpec::new(1).unwrap(), (16, 16));
        let mut c2 = c.clone();
        assert!(c2.axpy(1.0, &other).is_err());
        assert!(c.dot(&other).is_err());
    }

    #[test]
    fn vector_space_helpers() {
        let spec = FrameSpec::new(1).unwrap();
        let c = analysis(&test_image(8, 8), &spec).unwrap();
        let z = coeffs_axpy(1.0, &c, &coeffs_scale(-1.0, &c)).unwrap();
        assert_eq!(coeffs_norm1(&z), 0.0);
        assert_eq!(coeffs_norm2(&FrameCoeffs::zeros(&spec, (8, 8))), 0.0);
        assert!((c.dot(&c).unwrap() - c.norm2() * c.norm2()).abs() < 1e-9 * c.dot(&c).unwrap());
    }

    #[test]
    fn coefficient_count() {
        for levels in 1..=4 {
            let spec = FrameSpec::new(levels).unwrap();
            let c = analysis(&test_image(32, 16), &spec).unwrap();
            assert_eq!(c.len(), (3 * levels + 1) * 32 * 16);
        }
    }
}
