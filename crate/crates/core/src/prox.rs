//! Regularizers, their proximal maps and the synthesis objective
//! `½‖HWβ − y‖² + τ φ(β)`.

use crate::convolution::{apply_filter, FreqFilter};
use crate::error::{Error, Result};
use crate::frame::{synthesis, FrameCoeffs, FrameSpec};
use crate::image::ImageBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegularizerKind {
    /// `φ(β) = ‖β‖₁`, prox is the soft threshold.
    #[default]
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    /// When false, the approximation subband is left out of both the
    /// penalty and the shrinkage.
    pub penalize_approximation: bool,
}

impl Default for Regularizer {
    fn default() -> Self {
        Regularizer {
            kind: RegularizerKind::L1,
            penalize_approximation: true,
        }
    }
}

impl Regularizer {
    pub fn l1() -> Self {
        Self::default()
    }

    /// Range of coefficient indices the regularizer acts on.
    pub(crate) fn active_len(&self, coeffs: &FrameCoeffs) -> usize {
        if self.penalize_approximation {
            coeffs.len()
        } else {
            let (h, w) = coeffs.shape();
            coeffs.len() - h * w
        }
    }

    /// `φ(β)`.
    pub fn value(&self, coeffs: &FrameCoeffs) -> f64 {
        match self.kind {
            RegularizerKind::L1 => coeffs.data()[..self.active_len(coeffs)]
                .iter()
                .map(|v| v.abs())
                .sum(),
        }
    }

    /// In-place `Ψ_{tφ}`.
    pub fn prox_in_place(&self, coeffs: &mut FrameCoeffs, threshold: f64) -> Result<()> {
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::invalid("threshold must be finite and nonnegative"));
        }
        let n = self.active_len(coeffs);
        match self.kind {
            RegularizerKind::L1 => coeffs.data_mut()[..n]
                .iter_mut()
                .for_each(|v| *v = soft_threshold(*v, threshold)),
        }
        Ok(())
    }
}

/// `sign(a) · max(|a| − t, 0)`.
#[inline]
pub fn soft_threshold(a: f64, t: f64) -> f64 {
    // branch-free; coefficient signs are unpredictable
    libm::copysign((libm::fabs(a) - t).max(0.0), a)
}

/// `argmin_β ½‖a − β‖² + threshold · φ(β)`.
pub fn prox(reg: &Regularizer, coeffs: &FrameCoeffs, threshold: f64) -> Result<FrameCoeffs> {
    let mut out = coeffs.clone();
    reg.prox_in_place(&mut out, threshold)?;
    Ok(out)
}

/// `½‖H W coeffs − y‖² + tau · ‖coeffs‖₁`.
pub fn objective(
    y: &ImageBuffer,
    otf: &FreqFilter,
    spec: &FrameSpec,
    coeffs: &FrameCoeffs,
    tau: f64,
) -> Result<f64> {
    objective_with(&Regularizer::l1(), y, otf, spec, coeffs, tau)
}

/// [`objective`] for an arbitrary regularizer.
pub fn objective_with(
    reg: &Regularizer,
    y: &ImageBuffer,
    otf: &FreqFilter,
    spec: &FrameSpec,
    coeffs: &FrameCoeffs,
    tau: f64,
) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau must be finite and nonnegative"));
    }
    y.check_shape(otf.shape())?;
    coeffs.check_spec(spec, y.shape())?;
    let blurred = apply_filter(otf, &synthesis(coeffs, spec)?)?;
    Ok(0.5 * blurred.distance_squared(y)? + tau * reg.value(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::analysis;

    #[test]
    fn scalar_soft_threshold() {
        assert_eq!(soft_threshold(1.5, 1.0), 0.5);
        assert_eq!(soft_threshold(-0.3, 1.0), 0.0);
        assert_eq!(soft_threshold(-2.5, 1.0), -1.5);
        assert_eq!(soft_threshold(0.7, 0.0), 0.7);
    }

    fn sample() -> (FrameSpec, FrameCoeffs) {
        let spec = FrameSpec::new(1).unwrap();
        let img = ImageBuffer::from_fn(8, 8, |r, c| (r as f64 - 3.5) * (c as f64 + 1.0));
        (spec, analysis(&img, &spec).unwrap())
    }

    #[test]
    fn zero_threshold_is_identity() {
        let (_, c) = sample();
        assert_eq!(prox(&Regularizer::l1(), &c, 0.0).unwrap(), c);
    }

    #[test]
    fn large_threshold_zeroes_everything() {
        let (_, c) = sample();
        let t = c.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(prox(&Regularizer::l1(), &c, t).unwrap().norm1(), 0.0);
    }

    #[test]
    fn negative_threshold_rejected() {
        let (_, c) = sample();
        assert!(matches!(
            prox(&Regularizer::l1(), &c, -1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn approximation_band_can_be_exempt() {
        let (_, c) = sample();
        let reg = Regularizer {
            penalize_approximation: false,
            ..Regularizer::l1()
        };
        let out = prox(&reg, &c, 1e9).unwrap();
        assert_eq!(out.approximation(), c.approximation());
        assert!(out.data()[..3 * 64].iter().all(|&v| v == 0.0));
        assert_eq!(reg.value(&out), 0.0);
    }

    #[test]
    fn objective_at_zero_is_half_energy() {
        let (spec, c) = sample();
        let y = ImageBuffer::from_fn(8, 8, |r, c| (r + 2 * c) as f64);
        let zero = FrameCoeffs::zeros(&spec, (8, 8));
        let f = objective(&y, &FreqFilter::ones(8, 8), &spec, &zero, 3.0).unwrap();
        assert!((f - 0.5 * y.norm2_squared()).abs() < 1e-9);
        assert!(objective(&y, &FreqFilter::ones(8, 8), &spec, &c, -1.0).is_err());
    }

    #[test]
    fn exact_fit_has_zero_objective() {
        let spec = FrameSpec::new(2).unwrap();
        let y = ImageBuffer::from_fn(16, 16, |r, c| libm::cos((r * c) as f64));
        let c = analysis(&y, &spec).unwrap();
        let f = objective(&y, &FreqFilter::ones(16, 16), &spec, &c, 0.0).unwrap();
        assert!(f < 1e-20);
    }
}
