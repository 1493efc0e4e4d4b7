//! Periodic blur operators held in the DFT domain.
//!
//! A blur `H` is a circular convolution, so it is diagonalized by the 2-D
//! DFT: `H = Uᴴ D U`. [`psf_to_otf`] builds the diagonal `D` from a kernel,
//! [`apply_filter`] and [`adjoint_filter`] multiply by `H` and `Hᵀ`, and
//! [`build_inversion_filter`] forms the real gains `|d|²/(|d|² + μ)` used by
//! the exact quadratic step of the solver.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{Fft2, Fft2Scratch, RealFft2};
use crate::image::ImageBuffer;

/// Blur kernel families of the standard deblurring benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlurKind {
    /// Box blur, all taps equal.
    Uniform,
    /// `exp(-(i² + j²) / (2s²))`.
    Gaussian,
    /// `1 / (1 + i² + j²)`.
    InverseQuadratic,
}

/// Kernel support and shape parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurParams {
    /// Side of the square support; must be odd.
    pub size: usize,
    /// Standard deviation in pixels; only read by [`BlurKind::Gaussian`].
    pub sigma: f64,
}

impl BlurParams {
    pub const DEFAULT_GAUSSIAN_SIGMA: f64 = 2.0;

    /// 9×9 for uniform, 15×15 for the others, `s = 2` for the Gaussian.
    pub fn default_for(kind: BlurKind) -> Self {
        let size = match kind {
            BlurKind::Uniform => 9,
            BlurKind::Gaussian | BlurKind::InverseQuadratic => 15,
        };
        BlurParams {
            size,
            sigma: Self::DEFAULT_GAUSSIAN_SIGMA,
        }
    }
}

/// A normalized convolution kernel with odd support.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    support_height: usize,
    support_width: usize,
    taps: Vec<f64>,
}

impl Psf {
    /// Builds a kernel from raw taps, normalizing them to unit sum.
    pub fn from_taps(support_height: usize, support_width: usize, taps: Vec<f64>) -> Result<Self> {
        if support_height.is_multiple_of(2) || support_width.is_multiple_of(2) {
            return Err(Error::invalid("kernel support must be odd"));
        }
        if taps.len() != support_height * support_width {
            return Err(Error::invalid(format!(
                "kernel has {} taps, expected {}x{}",
                taps.len(),
                support_height,
                support_width
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("kernel taps must be finite"));
        }
        let sum: f64 = taps.iter().sum();
        if sum.abs() < f64::MIN_POSITIVE {
            return Err(Error::invalid("kernel taps sum to zero"));
        }
        Ok(Psf {
            support_height,
            support_width,
            taps: taps.into_iter().map(|t| t / sum).collect(),
        })
    }

    pub fn support(&self) -> (usize, usize) {
        (self.support_height, self.support_width)
    }

    /// Index of the kernel origin inside the support.
    pub fn center(&self) -> (usize, usize) {
        (self.support_height / 2, self.support_width / 2)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Tap at offset `(i, j)` from the center, zero outside the support.
    pub fn tap(&self, i: isize, j: isize) -> f64 {
        let (cr, cc) = self.center();
        let r = cr as isize + i;
        let c = cc as isize + j;
        if r < 0 || c < 0 || r >= self.support_height as isize || c >= self.support_width as isize {
            return 0.0;
        }
        self.taps[r as usize * self.support_width + c as usize]
    }
}

pub fn build_psf(kind: BlurKind, params: &BlurParams) -> Result<Psf> {
    let size = params.size;
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "kernel size must be odd and positive, got {size}"
        )));
    }
    if kind == BlurKind::Gaussian && !(params.sigma.is_finite() && params.sigma > 0.0) {
        return Err(Error::invalid("gaussian sigma must be positive"));
    }
    let half = (size / 2) as isize;
    let mut taps = Vec::with_capacity(size * size);
    for i in -half..=half {
        for j in -half..=half {
            let r2 = (i * i + j * j) as f64;
            taps.push(match kind {
                BlurKind::Uniform => 1.0,
                BlurKind::Gaussian => libm::exp(-r2 / (2.0 * params.sigma * params.sigma)),
                BlurKind::InverseQuadratic => 1.0 / (1.0 + r2),
            });
        }
    }
    Psf::from_taps(size, size, taps)
}

/// DFT-domain gains of a linear shift-invariant operator on `H×W` images.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqFilter {
    height: usize,
    width: usize,
    values: Vec<Complex64>,
}

impl FreqFilter {
    pub fn new(height: usize, width: usize, values: Vec<Complex64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::invalid("filter values do not match its shape"));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid("filter contains non-finite values"));
        }
        Ok(FreqFilter {
            height,
            width,
            values,
        })
    }

    /// The identity operator.
    pub fn ones(height: usize, width: usize) -> Self {
        FreqFilter {
            height,
            width,
            values: vec![Complex64::new(1.0, 0.0); height * width],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Filter with gains `|d|²`, i.e. the operator `HᵀH`.
    pub fn gram(&self) -> FreqFilter {
        FreqFilter {
            height: self.height,
            width: self.width,
            values: self
                .values
                .iter()
                .map(|d| Complex64::new(d.norm_sqr(), 0.0))
                .collect(),
        }
    }

    /// `max |d|²`, the squared spectral norm of the operator.
    pub fn max_gain_squared(&self) -> f64 {
        self.values.iter().map(|d| d.norm_sqr()).fold(0.0, f64::max)
    }
}

pub fn psf_to_otf(psf: &Psf, shape: (usize, usize)) -> Result<FreqFilter> {
    let (height, width) = shape;
    let (sh, sw) = psf.support();
    if height == 0 || width == 0 {
        return Err(Error::invalid("image dimensions must be positive"));
    }
    let (cr, cc) = psf.center();
    let mut grid = vec![Complex64::new(0.0, 0.0); height * width];
    for r in 0..sh {
        for c in 0..sw {
            // origin of the kernel goes to (0, 0); offsets wrap, so a kernel
            // wider than the image folds onto itself
            let gr = (r as isize - cr as isize).rem_euclid(height as isize) as usize;
            let gc = (c as isize - cc as isize).rem_euclid(width as isize) as usize;
            grid[gr * width + gc] += psf.taps()[r * sw + c];
        }
    }
    Fft2::new(height, width).forward(&mut grid);
    FreqFilter::new(height, width, grid)
}

/// FFT plans and buffers for filtering many images of one size.
///
/// Even-sized images take the packed real-input route; anything else goes
/// through a full complex transform.
#[derive(Debug, Clone)]
pub struct FilterWorkspace {
    shape: (usize, usize),
    route: Route,
}

#[derive(Debug, Clone)]
enum Route {
    Real(RealFft2),
    Complex {
        plan: Fft2,
        buf: Vec<Complex64>,
        scratch: Fft2Scratch,
    },
}

impl FilterWorkspace {
    pub fn new(shape: (usize, usize)) -> Self {
        let route = match RealFft2::new(shape.0, shape.1) {
            Some(real) => Route::Real(real),
            None => Self::complex_route(shape),
        };
        FilterWorkspace { shape, route }
    }

    fn complex_route(shape: (usize, usize)) -> Route {
        Route::Complex {
            plan: Fft2::new(shape.0, shape.1),
            buf: vec![Complex64::new(0.0, 0.0); shape.0 * shape.1],
            scratch: Fft2Scratch::default(),
        }
    }

    /// Always uses the full complex transform.
    pub fn new_complex(shape: (usize, usize)) -> Self {
        FilterWorkspace {
            shape,
            route: Self::complex_route(shape),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    /// `out = Re IDFT(g ⊙ DFT(input))` with `g` the filter gains, or their
    /// conjugates when `conjugate` is set.
    pub fn apply(
        &mut self,
        filter: &FreqFilter,
        input: &[f64],
        out: &mut [f64],
        conjugate: bool,
    ) -> Result<()> {
        let shape = self.shape;
        if filter.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: filter.shape(),
            });
        }
        let n = shape.0 * shape.1;
        if input.len() != n || out.len() != n {
            return Err(Error::invalid("buffer length does not match the filter"));
        }
        match &mut self.route {
            Route::Real(real) => {
                let (h, w) = shape;
                let values = &filter.values;
                // only the Hermitian part of the gains survives the real part
                real.filter(input, out, |r, k| {
                    let g = values[r * w + k];
                    let mirror = values[((h - r) % h) * w + (w - k) % w].conj();
                    let sym = (g + mirror) * 0.5;
                    if conjugate {
                        sym.conj()
                    } else {
                        sym
                    }
                });
            }
            Route::Complex { plan, buf, scratch } => {
                for (b, &v) in buf.iter_mut().zip(input) {
                    *b = Complex64::new(v, 0.0);
                }
                plan.forward_with(buf, scratch);
                if conjugate {
                    for (b, d) in buf.iter_mut().zip(&filter.values) {
                        *b *= d.conj();
                    }
                } else {
                    for (b, d) in buf.iter_mut().zip(&filter.values) {
                        *b *= d;
                    }
                }
                plan.inverse_with(buf, scratch);
                for (o, b) in out.iter_mut().zip(buf.iter()) {
                    *o = b.re;
                }
            }
        }
        Ok(())
    }
}

fn filter_image(filter: &FreqFilter, image: &ImageBuffer, conjugate: bool) -> Result<ImageBuffer> {
    image.check_shape(filter.shape())?;
    let (height, width) = filter.shape();
    let mut out = vec![0.0; height * width];
    FilterWorkspace::new(filter.shape()).apply(filter, image.data(), &mut out, conjugate)?;
    Ok(ImageBuffer::from_raw(height, width, out))
}

/// Real part of `IDFT(filter ⊙ DFT(image))`.
pub fn apply_filter(filter: &FreqFilter, image: &ImageBuffer) -> Result<ImageBuffer> {
    filter_image(filter, image, false)
}

/// Transpose of [`apply_filter`]: multiplies by the conjugate gains.
pub fn adjoint_filter(filter: &FreqFilter, image: &ImageBuffer) -> Result<ImageBuffer> {
    filter_image(filter, image, true)
}

/// Gains `|d|²/(|d|² + μ)` of `H(HᵀH + μI)⁻¹Hᵀ`, all real and in `[0, 1)`.
pub fn build_inversion_filter(otf: &FreqFilter, mu: f64) -> Result<FreqFilter> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::invalid(format!("mu must be positive, got {mu}")));
    }
    let values = otf
        .values
        .iter()
        .map(|d| {
            let p = d.norm_sqr();
            Complex64::new(p / (p + mu), 0.0)
        })
        .collect();
    FreqFilter::new(otf.height, otf.width, values)
}
