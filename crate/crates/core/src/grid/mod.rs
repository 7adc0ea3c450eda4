//! Dense `f64` grids and the kernels every other module builds on.
//!
//! A [`Grid`] is an `H×W×C` array stored row-major with channels innermost:
//! element `(y, x, c)` lives at `(y * W + x) * C + c`. All values are finite;
//! constructors reject NaN/Inf and so does every kernel's output.
//!
//! Conventions fixed here and relied on by the oracles in the test suites:
//!
//! - Padding defaults to reflection without edge repeat (`…, 2, 1, 0, 1, 2, …`).
//! - Convolution uses "same" padding; output size is `ceil(dim / stride)`
//!   and output sample `o` is centred on input sample `o * stride`.
//! - Bilinear resampling uses half-pixel centres: output `i` samples input
//!   coordinate `(i + 0.5) * in / out - 0.5`, clamped to the valid range.

mod conv;
mod matrix;
mod resample;

pub use conv::{conv2d, Kernel, Padding};
pub use matrix::{softmax_rows, Matrix};
pub use resample::{avg_pool, bilinear_resize, gaussian_down2};

use crate::error::{shape, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Argument(format!(
                "grid dims must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(shape(format!(
                "grid {height}x{width}x{channels} needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value {} at index {i}", data[i])));
        }
        Ok(Self { height, width, channels, data })
    }

    /// Panics if any dimension is zero.
    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0 && channels > 0, "grid dims must be positive");
        assert!(value.is_finite(), "grid fill value must be finite");
        Self { height, width, channels, data: vec![value; height * width * channels] }
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, 0.0)
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width, channels)`
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(y, x, c)]
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn check_same_shape(&self, other: &Grid, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(shape(format!("{what}: {:?} vs {:?}", self.dims(), other.dims())))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Grid> {
        Grid::new(self.height, self.width, self.channels, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Grid> {
        self.check_same_shape(other, "zip_map")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Grid::new(self.height, self.width, self.channels, data)
    }

    pub fn sub(&self, other: &Grid) -> Result<Grid> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Grid) -> Result<Grid> {
        self.zip_map(other, |a, b| a + b)
    }

    /// Extracts one channel as a single-channel grid.
    pub fn channel(&self, c: usize) -> Result<Grid> {
        if c >= self.channels {
            return Err(shape(format!("channel {c} out of range for {} channels", self.channels)));
        }
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Grid::new(self.height, self.width, 1, data)
    }

    /// Stacks grids of equal spatial size along the channel axis, in order.
    pub fn concat_channels(parts: &[&Grid]) -> Result<Grid> {
        let first = parts.first().ok_or_else(|| shape("concat of zero grids"))?;
        let (h, w) = (first.height, first.width);
        if let Some(bad) = parts.iter().find(|g| g.height != h || g.width != w) {
            return Err(shape(format!(
                "concat spatial mismatch: {h}x{w} vs {}x{}",
                bad.height, bad.width
            )));
        }
        let channels: usize = parts.iter().map(|g| g.channels).sum();
        let mut data = Vec::with_capacity(h * w * channels);
        for p in 0..h * w {
            for g in parts {
                data.extend_from_slice(&g.data[p * g.channels..(p + 1) * g.channels]);
            }
        }
        Grid::new(h, w, channels, data)
    }

    /// Views the grid as an `(H·W) × C` matrix, one row per pixel.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(self.height * self.width, self.channels, self.data.clone())
            .expect("grid data length is consistent")
    }

    /// Inverse of [`Grid::to_matrix`].
    pub fn from_matrix(height: usize, width: usize, m: &Matrix) -> Result<Grid> {
        if m.rows() != height * width {
            return Err(shape(format!(
                "matrix with {} rows cannot form a {height}x{width} grid",
                m.rows()
            )));
        }
        Grid::new(height, width, m.cols(), m.data().to_vec())
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Reflect an out-of-range index back into `0..n` without repeating the edge.
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Neumaier-compensated sum in iteration order.
pub(crate) fn stable_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn stable_mean(values: &[f64]) -> f64 {
    stable_sum(values.iter().copied()) / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length_and_nan() {
        assert!(matches!(Grid::new(2, 2, 1, vec![0.0; 3]), Err(Error::Shape(_))));
        assert!(matches!(Grid::new(1, 1, 1, vec![f64::NAN]), Err(Error::Domain(_))));
        assert!(matches!(Grid::new(0, 1, 1, vec![]), Err(Error::Argument(_))));
    }

    #[test]
    fn reflect_index_mirrors_without_edge_repeat() {
        let got: Vec<usize> = (-4..8).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1]);
        assert_eq!(reflect_index(-3, 1), 0);
    }

    #[test]
    fn concat_interleaves_channels_per_pixel() {
        let a = Grid::new(1, 2, 1, vec![1.0, 2.0]).unwrap();
        let b = Grid::new(1, 2, 2, vec![10.0, 11.0, 20.0, 21.0]).unwrap();
        let c = Grid::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(c.data(), &[1.0, 10.0, 11.0, 2.0, 20.0, 21.0]);
        assert_eq!(c.channel(2).unwrap().data(), &[11.0, 21.0]);
    }

    #[test]
    fn matrix_roundtrip() {
        let g = Grid::from_fn(2, 3, 2, |y, x, c| (y * 10 + x * 2 + c) as f64).unwrap();
        let m = g.to_matrix();
        assert_eq!(m.rows(), 6);
        assert_eq!(Grid::from_matrix(2, 3, &m).unwrap(), g);
    }

    #[test]
    fn compensated_sum_of_tenths() {
        let v = vec![0.1; 4096];
        assert_eq!(stable_mean(&v), 0.1);
    }
}
