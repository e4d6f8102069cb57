//! Monotone piecewise-cubic (Fritsch–Carlson) interpolation for sampled SER
//! curves. Shape preservation keeps the interpolant from inventing wiggles,
//! and with them spurious non-convexity, between grid points.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Scalar> MonotoneCubic<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidArgument(
                "interpolation needs at least two matching samples".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid);
        }
        let n = xs.len();
        let secants: Vec<T> = (0..n - 1)
            .map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]))
            .collect();
        let mut slopes = vec![T::zero(); n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            let (d0, d1) = (secants[k - 1], secants[k]);
            if d0 * d1 <= T::zero() {
                slopes[k] = T::zero();
            } else {
                // weighted harmonic mean (Fritsch–Butland)
                let h0 = xs[k] - xs[k - 1];
                let h1 = xs[k + 1] - xs[k];
                let w0 = T::of(2.0) * h1 + h0;
                let w1 = h1 + T::of(2.0) * h0;
                slopes[k] = (w0 + w1) / (w0 / d0 + w1 / d1);
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn eval(&self, x: T) -> T {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&g| g <= x) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::of(2.0);
        let three = T::of(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        h00 * self.ys[k]
            + h10 * h * self.slopes[k]
            + h01 * self.ys[k + 1]
            + h11 * h * self.slopes[k + 1]
    }
}

/// A sampled SER curve turned into a callable `pe(γ)`: monotone cubic
/// inside the grid, clamped to [0, 1], constant beyond the last point, and
/// the largest sampled value below the first point.
#[derive(Debug, Clone)]
pub struct SerInterpolant<T> {
    inner: MonotoneCubic<T>,
    low_value: T,
}

impl<T: Scalar> SerInterpolant<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        let low_value = ys.iter().copied().fold(T::neg_infinity(), T::max);
        Ok(Self {
            inner: MonotoneCubic::new(xs, ys)?,
            low_value,
        })
    }

    pub fn eval(&self, x: T) -> T {
        let v = if x < self.inner.xs[0] {
            self.low_value
        } else {
            self.inner.eval(x)
        };
        v.max(T::zero()).min(T::one())
    }
}
