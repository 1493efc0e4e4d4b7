#![allow(dead_code)]

use nalgebra::DMatrix;
use salsa_core::bench::GaussianNoise;
use salsa_core::{FrameCoeffs, FrameSpec, ImageBuffer, Psf};

pub fn random_image(h: usize, w: usize, seed: u64) -> ImageBuffer {
    let mut g = GaussianNoise::new(seed);
    ImageBuffer::from_fn(h, w, |_, _| g.next_standard())
}

pub fn random_coeffs(spec: &FrameSpec, shape: (usize, usize), seed: u64) -> FrameCoeffs {
    let mut g = GaussianNoise::new(seed);
    let mut c = FrameCoeffs::zeros(spec, shape);
    c.data_mut().iter_mut().for_each(|v| *v = g.next_standard());
    c
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel_l2(a: &[f64], reference: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(reference).map(|(x, y)| (x - y) * (x - y)).sum();
    let norm: f64 = reference.iter().map(|v| v * v).sum();
    (diff / norm).sqrt()
}

/// `y[r][c] = Σ k[i][j] x[r − i][c − j]` with indices taken mod the image size.
pub fn periodic_convolve(psf: &Psf, x: &ImageBuffer) -> ImageBuffer {
    let (h, w) = x.shape();
    let (sh, sw) = psf.support();
    let (ch, cw) = psf.center();
    ImageBuffer::from_fn(h, w, |r, c| {
        let mut acc = 0.0;
        for i in 0..sh {
            for j in 0..sw {
                let di = i as isize - ch as isize;
                let dj = j as isize - cw as isize;
                let rr = (r as isize - di).rem_euclid(h as isize) as usize;
                let cc = (c as isize - dj).rem_euclid(w as isize) as usize;
                acc += psf.taps()[i * sw + j] * x.get(rr, cc);
            }
        }
        acc
    })
}

/// Dense `H` acting on row-major vectorized images.
pub fn dense_blur(psf: &Psf, h: usize, w: usize) -> DMatrix<f64> {
    let n = h * w;
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        let e = ImageBuffer::from_fn(h, w, |r, c| if r * w + c == k { 1.0 } else { 0.0 });
        let col = periodic_convolve(psf, &e);
        for (i, v) in col.data().iter().enumerate() {
            m[(i, k)] = *v;
        }
    }
    m
}

/// Dense one-level analysis operator `Wᵀ` (rows = coefficients, in H, V, D,
/// approximation order), written straight from the filter definitions.
pub fn dense_analysis_1level(h: usize, w: usize) -> DMatrix<f64> {
    let n = h * w;
    let mut m = DMatrix::zeros(4 * n, n);
    // (row-direction filter is high-pass, column-direction filter is high-pass)
    let bands = [(false, true), (true, false), (true, true), (false, false)];
    for (b, &(row_high, col_high)) in bands.iter().enumerate() {
        for r in 0..h {
            for c in 0..w {
                for dr in 0..2 {
                    for dc in 0..2 {
                        let sr = if col_high && dr == 1 { -1.0 } else { 1.0 };
                        let sc = if row_high && dc == 1 { -1.0 } else { 1.0 };
                        let src = ((r + dr) % h) * w + (c + dc) % w;
                        m[(b * n + r * w + c, src)] += 0.25 * sr * sc;
                    }
                }
            }
        }
    }
    m
}

// argmin_b ½(a − b)² + t|b| by repeated grid refinement
pub fn grid_argmin(a: f64, t: f64) -> f64 {
    // f(b) − f(c) in factored form; comparing raw values would stall at
    // √ε resolution
    let gain = |b: f64, c: f64| 0.5 * (b - c) * (b + c - 2.0 * a) + t * (b.abs() - c.abs());
    let (mut lo, mut hi) = (-a.abs() - 1.0, a.abs() + 1.0);
    for _ in 0..60 {
        let step = (hi - lo) / 200.0;
        let mut best = lo;
        for i in 1..=200 {
            let b = lo + step * i as f64;
            if gain(b, best) < 0.0 {
                best = b;
            }
        }
        lo = best - step;
        hi = best + step;
    }
    0.5 * (lo + hi)
}
