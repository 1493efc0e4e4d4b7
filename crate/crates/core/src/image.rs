use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A real-valued image stored row-major.
///
/// Intensities are nominally in `[0, 255]`; nothing here enforces that.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if data.len() != height * width {
            return Err(Error::invalid(alloc::format!(
                "image data has {} values, expected {}x{}",
                data.len(),
                height,
                width
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite values"));
        }
        Ok(ImageBuffer {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        ImageBuffer {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut img = Self::zeros(height, width);
        for r in 0..height {
            for c in 0..width {
                img.data[r * width + c] = f(r, c);
            }
        }
        img
    }

    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        ImageBuffer {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
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

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub(crate) fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: self.shape(),
            });
        }
        Ok(())
    }

    pub fn dot(&self, other: &ImageBuffer) -> Result<f64> {
        other.check_shape(self.shape())?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm2_squared(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// `‖self − other‖²`.
    pub fn distance_squared(&self, other: &ImageBuffer) -> Result<f64> {
        other.check_shape(self.shape())?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }
}
