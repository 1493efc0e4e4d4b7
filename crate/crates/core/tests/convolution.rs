mod common;

use common::{dense_blur, max_abs_diff, periodic_convolve, random_image};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use salsa_core::{
    adjoint_filter, apply_filter, build_inversion_filter, build_psf, psf_to_otf, BlurKind,
    BlurParams, FreqFilter, ImageBuffer, Psf,
};

const KINDS: [BlurKind; 3] = [BlurKind::Uniform, BlurKind::Gaussian, BlurKind::InverseQuadratic];

fn default_psf(kind: BlurKind) -> Psf {
    build_psf(kind, &BlurParams::default_for(kind)).unwrap()
}

#[test]
fn fft_blur_matches_direct_convolution() {
    for kind in KINDS {
        for n in [16, 32] {
            let psf = default_psf(kind);
            let x = random_image(n, n, n as u64);
            let fast = apply_filter(&psf_to_otf(&psf, (n, n)).unwrap(), &x).unwrap();
            let slow = periodic_convolve(&psf, &x);
            let err = max_abs_diff(fast.data(), slow.data());
            assert!(err <= 1e-9, "{kind:?} {n}x{n}: {err:e}");
        }
    }
}

#[test]
fn asymmetric_kernel_is_convolution_not_correlation() {
    let taps = (1..=15).map(f64::from).collect();
    let psf = Psf::from_taps(3, 5, taps).unwrap();
    let x = random_image(12, 20, 4);
    let fast = apply_filter(&psf_to_otf(&psf, (12, 20)).unwrap(), &x).unwrap();
    assert!(max_abs_diff(fast.data(), periodic_convolve(&psf, &x).data()) < 1e-12);
}

#[test]
fn symmetric_kernels_have_real_spectra() {
    for kind in KINDS {
        let otf = psf_to_otf(&default_psf(kind), (32, 32)).unwrap();
        let worst = otf.values().iter().map(|d| d.im.abs()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{kind:?}: imaginary part {worst:e}");
    }
}

#[test]
fn otf_is_dft_of_shifted_kernel() {
    // direct DFT sum, no FFT involved
    let psf = default_psf(BlurKind::Gaussian);
    let (h, w) = (16usize, 16usize);
    let otf = psf_to_otf(&psf, (h, w)).unwrap();
    let (sh, sw) = psf.support();
    let (ch, cw) = psf.center();
    for (u, v) in [(0, 0), (1, 0), (3, 5), (8, 8), (15, 2)] {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..sh {
            for j in 0..sw {
                let di = i as f64 - ch as f64;
                let dj = j as f64 - cw as f64;
                let phase = -2.0 * std::f64::consts::PI * (u as f64 * di / h as f64 + v as f64 * dj / w as f64);
                acc += psf.taps()[i * sw + j] * Complex64::from_polar(1.0, phase);
            }
        }
        assert!((otf.values()[u * w + v] - acc).norm() < 1e-12, "bin ({u}, {v})");
    }
}

#[test]
fn inversion_gains_match_dense_eigenvalues() {
    // eigen-gains of HᵀH (HᵀH + μI)⁻¹ on 8×8, read off as the response to
    // each Fourier mode
    let psf = default_psf(BlurKind::Uniform);
    let (h, w) = (8, 8);
    let mu = 0.1;
    let hm = dense_blur(&psf, h, w);
    let hth = hm.transpose() * &hm;
    // (HᵀH + μI)⁻¹ HᵀH, equal to the target since the factors commute
    let dense = (&hth + DMatrix::identity(64, 64) * mu)
        .lu()
        .solve(&hth)
        .unwrap();
    let gains = build_inversion_filter(&psf_to_otf(&psf, (h, w)).unwrap(), mu).unwrap();
    for u in 0..h {
        for v in 0..w {
            // real cosine mode is an eigenvector since the operator is symmetric
            // and shift-invariant
            let mode = DMatrix::from_fn(64, 1, |k, _| {
                let (r, c) = (k / w, k % w);
                (2.0 * std::f64::consts::PI * ((u * r) as f64 / h as f64 + (v * c) as f64 / w as f64)).cos()
            });
            let out = &dense * &mode;
            let g = gains.values()[u * w + v];
            assert!(g.im.abs() < 1e-15);
            let err = (&out - &mode * g.re).amax();
            assert!(err < 1e-10, "mode ({u}, {v}): {err:e}");
            assert!((0.0..1.0).contains(&g.re));
        }
    }
}

#[test]
fn inversion_gain_limits() {
    let ones = FreqFilter::ones(4, 4);
    let half = build_inversion_filter(&ones, 1.0).unwrap();
    assert!(half.values().iter().all(|g| (g.re - 0.5).abs() < 1e-15 && g.im == 0.0));
    let otf = psf_to_otf(&default_psf(BlurKind::Gaussian), (16, 16)).unwrap();
    let tiny = build_inversion_filter(&otf, 1e12).unwrap();
    assert!(tiny.values().iter().all(|g| g.re.abs() < 1e-12));
    assert!(build_inversion_filter(&otf, 0.0).is_err());
    assert!(build_inversion_filter(&otf, -1.0).is_err());
}

fn image_strategy(h: usize, w: usize) -> impl Strategy<Value = ImageBuffer> {
    prop::collection::vec(-255.0f64..255.0, h * w).prop_map(move |v| ImageBuffer::new(h, w, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn blur_adjoint_identity(x in image_strategy(16, 24), y in image_strategy(16, 24), k in 0usize..3) {
        let otf = psf_to_otf(&default_psf(KINDS[k]), (16, 24)).unwrap();
        let lhs = apply_filter(&otf, &x).unwrap().dot(&y).unwrap();
        let rhs = x.dot(&adjoint_filter(&otf, &y).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn blur_is_linear(x in image_strategy(8, 8), y in image_strategy(8, 8), a in -3.0f64..3.0) {
        let otf = psf_to_otf(&default_psf(BlurKind::InverseQuadratic), (8, 8)).unwrap();
        let combo = ImageBuffer::from_fn(8, 8, |r, c| a * x.get(r, c) + y.get(r, c));
        let lhs = apply_filter(&otf, &combo).unwrap();
        let hx = apply_filter(&otf, &x).unwrap();
        let hy = apply_filter(&otf, &y).unwrap();
        for (i, v) in lhs.data().iter().enumerate() {
            prop_assert!((v - (a * hx.data()[i] + hy.data()[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn blur_preserves_sum(x in image_strategy(16, 16), k in 0usize..3) {
        let otf = psf_to_otf(&default_psf(KINDS[k]), (16, 16)).unwrap();
        let y = apply_filter(&otf, &x).unwrap();
        let (sx, sy): (f64, f64) = (x.data().iter().sum(), y.data().iter().sum());
        prop_assert!((sx - sy).abs() < 1e-8);
    }
}
