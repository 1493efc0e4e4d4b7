//! Complex discrete Fourier transforms of arbitrary length.
//!
//! Power-of-two lengths use an iterative radix-2 transform; every other
//! length goes through Bluestein's chirp-z reformulation on top of a
//! radix-2 transform of the next power of two at least `2n - 1`.
//!
//! Forward transforms are unnormalized. [`Fft2::inverse`] carries the `1/n`
//! factor, so a forward/inverse pair is the identity.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

fn unit(angle: f64) -> Complex64 {
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

#[derive(Debug, Clone)]
struct Radix2 {
    n: usize,
    /// Per-stage twiddles laid out back to back: the stage with butterfly
    /// span `2h` holds `exp(-iπj/h)` for `j < h`, starting at offset `h - 1`.
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let mut twiddles = Vec::with_capacity(n.saturating_sub(1));
        let mut half = 1;
        while half < n {
            twiddles.extend((0..half).map(|j| unit(-PI * j as f64 / half as f64)));
            half <<= 1;
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Radix2 { n, twiddles, bitrev }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let tw = &self.twiddles[half - 1..2 * half - 1];
            for block in buf.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(tw) {
                    let v = *b * w;
                    let u = *a;
                    *a = u + v;
                    *b = u - v;
                }
            }
            half <<= 1;
        }
    }
}

#[derive(Debug, Clone)]
struct Bluestein {
    n: usize,
    inner: Radix2,
    /// `exp(-iπk²/n)` for `k < n`.
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp, wrapped to the inner length.
    kernel: Vec<Complex64>,
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k² mod 2n keeps the phase argument small for large k.
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
                unit(-PI * k2 / n as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Bluestein {
            n,
            inner,
            chirp,
            kernel,
        }
    }

    fn forward(&self, buf: &mut [Complex64], work: &mut Vec<Complex64>) {
        let m = self.inner.n;
        work.clear();
        work.resize(m, Complex64::new(0.0, 0.0));
        for (w, (x, c)) in work.iter_mut().zip(buf.iter().zip(&self.chirp)) {
            *w = x * c;
        }
        self.inner.forward(work);
        for (w, k) in work.iter_mut().zip(&self.kernel) {
            // conj so the next forward pass acts as an inverse transform
            *w = (*w * k).conj();
        }
        self.inner.forward(work);
        let scale = 1.0 / m as f64;
        for (x, (w, c)) in buf.iter_mut().zip(work.iter().zip(&self.chirp)) {
            *x = w.conj() * c * scale;
        }
        debug_assert_eq!(buf.len(), self.n);
    }
}

#[derive(Debug, Clone)]
enum Plan {
    Trivial,
    Radix2(Radix2),
    Bluestein(Bluestein),
}

/// A one-dimensional transform plan for a fixed length.
///
/// Plans are immutable; scratch space is allocated per call, so one plan may
/// be shared across threads.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    plan: Plan,
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "transform length must be positive");
        let plan = if len == 1 {
            Plan::Trivial
        } else if len.is_power_of_two() {
            Plan::Radix2(Radix2::new(len))
        } else {
            Plan::Bluestein(Bluestein::new(len))
        };
        Fft { len, plan }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place unnormalized forward DFT: `X_k = Σ x_j exp(-2πijk/n)`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        let mut work = Vec::new();
        self.forward_with(buf, &mut work);
    }

    /// In-place unnormalized inverse DFT (positive exponent, no `1/n`).
    pub fn inverse(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        let mut work = Vec::new();
        self.inverse_with(buf, &mut work);
    }

    pub(crate) fn forward_with(&self, buf: &mut [Complex64], work: &mut Vec<Complex64>) {
        match &self.plan {
            Plan::Trivial => {}
            Plan::Radix2(p) => p.forward(buf),
            Plan::Bluestein(p) => p.forward(buf, work),
        }
    }

    pub(crate) fn inverse_with(&self, buf: &mut [Complex64], work: &mut Vec<Complex64>) {
        buf.iter_mut().for_each(|v| *v = v.conj());
        self.forward_with(buf, work);
        buf.iter_mut().for_each(|v| *v = v.conj());
    }
}

/// Two-dimensional transform over a row-major `height × width` grid.
///
/// Rows are transformed in place, then the grid is transposed so that the
/// column pass also runs over contiguous memory.
#[derive(Debug, Clone)]
pub struct Fft2 {
    height: usize,
    width: usize,
    rows: Fft,
    cols: Fft,
}

/// Reusable buffers for [`Fft2`]; one per thread.
#[derive(Debug, Clone, Default)]
pub struct Fft2Scratch {
    transposed: Vec<Complex64>,
    work: Vec<Complex64>,
}

const TILE: usize = 32;

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r0 in (0..rows).step_by(TILE) {
        for c0 in (0..cols).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                for c in c0..(c0 + TILE).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        Fft2 {
            height,
            width,
            rows: Fft::new(width),
            cols: Fft::new(height),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Unnormalized forward 2-D DFT, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward_with(data, &mut Fft2Scratch::default());
    }

    /// Inverse 2-D DFT including the `1/(height·width)` factor, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse_with(data, &mut Fft2Scratch::default());
    }

    pub fn forward_with(&self, data: &mut [Complex64], scratch: &mut Fft2Scratch) {
        self.run(data, false, scratch);
    }

    pub fn inverse_with(&self, data: &mut [Complex64], scratch: &mut Fft2Scratch) {
        self.run(data, true, scratch);
        let scale = 1.0 / (self.height * self.width) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn pass(plan: &Fft, data: &mut [Complex64], inverse: bool, work: &mut Vec<Complex64>) {
        for line in data.chunks_exact_mut(plan.len) {
            if inverse {
                plan.inverse_with(line, work);
            } else {
                plan.forward_with(line, work);
            }
        }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool, scratch: &mut Fft2Scratch) {
        assert_eq!(data.len(), self.height * self.width);
        Self::pass(&self.rows, data, inverse, &mut scratch.work);
        if self.height == 1 {
            return;
        }
        scratch
            .transposed
            .resize(data.len(), Complex64::new(0.0, 0.0));
        transpose(data, &mut scratch.transposed, self.height, self.width);
        Self::pass(&self.cols, &mut scratch.transposed, inverse, &mut scratch.work);
        transpose(&scratch.transposed, data, self.width, self.height);
    }
}

/// Filtering of real images with even height and width.
///
/// Pairs of rows are packed into one complex row transform, and only the
/// `width/2 + 1` non-redundant columns of the spectrum are transformed and
/// filtered. The result equals the real part of the full complex route.
#[derive(Debug, Clone)]
pub struct RealFft2 {
    height: usize,
    width: usize,
    rows: Fft,
    cols: Fft,
    /// Half spectrum stored column-major: bin `(r, k)` at `k * height + r`.
    half: Vec<Complex64>,
    line: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl RealFft2 {
    /// `None` unless both dimensions are even.
    pub fn new(height: usize, width: usize) -> Option<Self> {
        if height == 0 || width == 0 || !height.is_multiple_of(2) || !width.is_multiple_of(2) {
            return None;
        }
        let zero = Complex64::new(0.0, 0.0);
        Some(RealFft2 {
            height,
            width,
            rows: Fft::new(width),
            cols: Fft::new(height),
            half: vec![zero; (width / 2 + 1) * height],
            line: vec![zero; width],
            work: Vec::new(),
        })
    }

    /// `out = Re IDFT(g ⊙ DFT(input))`; `gain(r, k)` must return the gain of
    /// bin `(r, k)` for `k ≤ width/2`, already made Hermitian.
    pub fn filter(&mut self, input: &[f64], out: &mut [f64], gain: impl Fn(usize, usize) -> Complex64) {
        let (h, w) = (self.height, self.width);
        let hw = w / 2 + 1;
        assert_eq!(input.len(), h * w);
        assert_eq!(out.len(), h * w);
        let half_i = Complex64::new(0.0, -0.5);
        for p in 0..h / 2 {
            let (r0, r1) = (2 * p, 2 * p + 1);
            let (a, b) = (&input[r0 * w..(r0 + 1) * w], &input[r1 * w..(r1 + 1) * w]);
            for (l, (&x0, &x1)) in self.line.iter_mut().zip(a.iter().zip(b)) {
                *l = Complex64::new(x0, x1);
            }
            self.rows.forward_with(&mut self.line, &mut self.work);
            for k in 0..hw {
                let z = self.line[k];
                let zc = self.line[(w - k) % w].conj();
                self.half[k * h + r0] = (z + zc) * 0.5;
                self.half[k * h + r1] = (z - zc) * half_i;
            }
        }
        for k in 0..hw {
            let col = &mut self.half[k * h..(k + 1) * h];
            self.cols.forward_with(col, &mut self.work);
            for (r, v) in col.iter_mut().enumerate() {
                *v *= gain(r, k);
            }
            self.cols.inverse_with(col, &mut self.work);
        }
        let scale = 1.0 / (h * w) as f64;
        let i = Complex64::new(0.0, 1.0);
        for p in 0..h / 2 {
            let (r0, r1) = (2 * p, 2 * p + 1);
            for k in 0..hw {
                self.line[k] = self.half[k * h + r0] + i * self.half[k * h + r1];
            }
            for k in hw..w {
                let m = w - k;
                self.line[k] = self.half[m * h + r0].conj() + i * self.half[m * h + r1].conj();
            }
            self.rows.inverse_with(&mut self.line, &mut self.work);
            for (c, l) in self.line.iter().enumerate() {
                out[r0 * w + c] = l.re * scale;
                out[r1 * w + c] = l.im * scale;
            }
        }
    }
}
