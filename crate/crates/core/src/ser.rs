//! Noise model, ML detection and symbol error rate estimators.
//!
//! Derivatives in SNR or noise power are estimated by differentiating the
//! Gaussian density under the integral: `d^k P_ci = E[w_k(ξ)·1{ξ ∈ Ω_i}]`
//! with analytic weights `w_k = (d^k p/dx^k)/p`. Monte Carlo work is split
//! into fixed-size chunks, each with its own ChaCha stream derived from
//! `(seed, cell, chunk)`, and partial sums are combined in chunk order, so
//! results are bit-identical regardless of thread count. The same stream is
//! reused at every grid point (common random numbers).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constellation::{Constellation, DecisionRegion};
use crate::error::{Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::scalar::{norm_sq, Scalar};
use crate::special::{normal_pdf, q_function};

const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// γ = 1/σ₀².
    Snr,
    /// P_N = σ₀².
    NoisePower,
}

impl Axis {
    /// Per-dimension noise standard deviation at `value` on this axis.
    pub fn sigma<T: Scalar>(self, value: T) -> T {
        match self {
            Axis::Snr => value.sqrt().recip(),
            Axis::NoisePower => value.sqrt(),
        }
    }

    pub fn snr<T: Scalar>(self, value: T) -> T {
        match self {
            Axis::Snr => value,
            Axis::NoisePower => value.recip(),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Snr => "snr",
            Axis::NoisePower => "noise",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "snr" | "gamma" => Ok(Axis::Snr),
            "noise" | "noise-power" | "pn" => Ok(Axis::NoisePower),
            other => Err(Error::Parse(format!("unknown axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel<T> {
    dim: usize,
    snr: T,
    noise_power: T,
}

impl<T: Scalar> NoiseModel<T> {
    pub fn from_snr(dim: usize, snr: T) -> Result<Self> {
        positive("snr", snr)?;
        Ok(Self {
            dim,
            snr,
            noise_power: snr.recip(),
        })
    }

    pub fn from_noise_power(dim: usize, noise_power: T) -> Result<Self> {
        positive("noise power", noise_power)?;
        Ok(Self {
            dim,
            snr: noise_power.recip(),
            noise_power,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn snr(&self) -> T {
        self.snr
    }

    pub fn noise_power(&self) -> T {
        self.noise_power
    }

    pub fn sigma(&self) -> T {
        self.noise_power.sqrt()
    }

    /// `(2πσ₀²)^{−n/2} e^{−|x|²/2σ₀²}`.
    pub fn pdf(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let n = T::of_usize(self.dim);
        let two = T::of(2.0);
        Ok((T::TAU() * self.noise_power).powf(-n / two)
            * (-norm_sq(x) / (two * self.noise_power)).exp())
    }
}

pub(crate) fn positive<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            name,
            value: v.as_f64(),
        })
    }
}

/// Gaussian noise density at `x` for SNR `γ` (dimension taken from `x`).
pub fn noise_pdf<T: Scalar>(x: &[T], snr: T) -> Result<T> {
    NoiseModel::from_snr(x.len(), snr)?.pdf(x)
}

/// Index of the nearest constellation point, ties to the lowest index.
pub fn ml_detect<T: Scalar>(r: &[T], c: &Constellation<T>) -> Result<usize> {
    c.detect(r)
}

/// Weight `(d^k p/dγ^k)/p` as a function of `t = |x|²`.
///
/// Order 1: `½(n/γ − t)`. Order 2: `¼(t − α₁/γ)(t − α₂/γ)` with
/// `α₁,₂ = n ± √(2n)`.
pub fn snr_weight<T: Scalar>(t: T, dim: usize, snr: T, order: u8) -> Result<T> {
    let n = T::of_usize(dim);
    match order {
        1 => Ok(T::of(0.5) * (n / snr - t)),
        2 => {
            let r = (T::of(2.0) * n).sqrt();
            Ok(T::of(0.25) * (t - (n + r) / snr) * (t - (n - r) / snr))
        }
        o => Err(Error::InvalidOrder(o)),
    }
}

/// Weight `(d^k p/dP_N^k)/p` as a function of `t = |x|²`.
///
/// Order 1: `t/(2P²) − n/(2P)`. Order 2: `[(t − nP)² + 2nP² − 4tP]/(4P⁴)`,
/// whose roots in `t` are `P·(n + 2 ± √(2(n+2)))`.
pub fn noise_weight<T: Scalar>(t: T, dim: usize, noise_power: T, order: u8) -> Result<T> {
    let n = T::of_usize(dim);
    let p = noise_power;
    let two = T::of(2.0);
    match order {
        1 => Ok((t - n * p) / (two * p * p)),
        2 => {
            let d = t - n * p;
            Ok((d * d + two * n * p * p - T::of(4.0) * t * p) / (T::of(4.0) * p * p * p * p))
        }
        o => Err(Error::InvalidOrder(o)),
    }
}

pub fn deriv_weight_snr<T: Scalar>(x: &[T], snr: T, order: u8) -> Result<T> {
    positive("snr", snr)?;
    snr_weight(norm_sq(x), x.len(), snr, order)
}

pub fn deriv_weight_noise<T: Scalar>(x: &[T], noise_power: T, order: u8) -> Result<T> {
    positive("noise power", noise_power)?;
    noise_weight(norm_sq(x), x.len(), noise_power, order)
}

fn weight<T: Scalar>(axis: Axis, t: T, dim: usize, value: T, order: u8) -> T {
    match axis {
        Axis::Snr => snr_weight(t, dim, value, order),
        Axis::NoisePower => noise_weight(t, dim, value, order),
    }
    .expect("order validated by caller")
}

/// A measurable set in the noise frame (transmitted point at the origin).
pub trait Region<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    /// `scratch` has length `dim()` and may be overwritten.
    fn contains(&self, x: &[T], scratch: &mut [T]) -> bool;
}

/// The Voronoi cell of point `index`, tested through the detector itself.
#[derive(Debug, Clone, Copy)]
pub struct VoronoiCell<'a, T> {
    pub constellation: &'a Constellation<T>,
    pub index: usize,
}

impl<T: Scalar> Region<T> for VoronoiCell<'_, T> {
    fn dim(&self) -> usize {
        self.constellation.dim()
    }

    fn contains(&self, x: &[T], scratch: &mut [T]) -> bool {
        self.constellation.decodes_offset(self.index, x, scratch)
    }
}

impl<T: Scalar> Region<T> for DecisionRegion<T> {
    fn dim(&self) -> usize {
        DecisionRegion::dim(self)
    }

    fn contains(&self, x: &[T], _scratch: &mut [T]) -> bool {
        DecisionRegion::contains(self, x)
    }
}

/// All of ℝⁿ; every derivative of its probability vanishes.
#[derive(Debug, Clone, Copy)]
pub struct WholeSpace(pub usize);

impl<T: Scalar> Region<T> for WholeSpace {
    fn dim(&self) -> usize {
        self.0
    }

    fn contains(&self, _x: &[T], _scratch: &mut [T]) -> bool {
        true
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub std_error: T,
}

impl<T: Scalar> Estimate<T> {
    pub fn exact(value: T) -> Self {
        Self {
            value,
            std_error: T::zero(),
        }
    }
}

impl<T: Scalar> std::ops::Neg for Estimate<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            value: -self.value,
            std_error: self.std_error,
        }
    }
}

/// How `E[w·1_Ω]` is formed from samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Sample mean of `w·1_Ω`.
    Plain,
    /// Regression on the zero-mean control `w` (exact because the whole-space
    /// integral of every weight is zero).
    #[default]
    ControlVariate,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    y: f64,
    w: f64,
    yy: f64,
    ww: f64,
    yw: f64,
}

impl Moments {
    fn push(&mut self, w: f64, inside: bool) {
        let y = if inside { w } else { 0.0 };
        self.y += y;
        self.w += w;
        self.yy += y * y;
        self.ww += w * w;
        self.yw += y * w;
    }

    fn merge(&mut self, o: &Moments) {
        self.y += o.y;
        self.w += o.w;
        self.yy += o.yy;
        self.ww += o.ww;
        self.yw += o.yw;
    }

    fn estimate(&self, n: usize, estimator: Estimator) -> (f64, f64) {
        let nf = n as f64;
        let my = self.y / nf;
        let mw = self.w / nf;
        let vy = (self.yy / nf - my * my).max(0.0);
        let vw = (self.ww / nf - mw * mw).max(0.0);
        let cyw = self.yw / nf - my * mw;
        let denom = (nf - 1.0).max(1.0);
        match estimator {
            Estimator::ControlVariate if vw > 0.0 => {
                let beta = cyw / vw;
                let resid = (vy - cyw * cyw / vw).max(0.0);
                (my - beta * mw, (resid / denom).sqrt())
            }
            _ => (my, (vy / denom).sqrt()),
        }
    }
}

/// Sufficient statistics from one sampling pass over one region.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PassStats {
    samples: usize,
    inside: usize,
    order1: Moments,
    order2: Moments,
}

impl PassStats {
    fn merge(&mut self, o: &PassStats) {
        self.samples += o.samples;
        self.inside += o.inside;
        self.order1.merge(&o.order1);
        self.order2.merge(&o.order2);
    }

    /// Probability of the region with its binomial standard error.
    pub(crate) fn probability<T: Scalar>(&self) -> Estimate<T> {
        let n = self.samples as f64;
        let p = self.inside as f64 / n;
        Estimate {
            value: T::of(p),
            std_error: T::of((p * (1.0 - p) / n).sqrt()),
        }
    }

    pub(crate) fn derivative<T: Scalar>(&self, order: u8, estimator: Estimator) -> Estimate<T> {
        let m = if order == 1 {
            &self.order1
        } else {
            &self.order2
        };
        let (v, s) = m.estimate(self.samples, estimator);
        Estimate {
            value: T::of(v),
            std_error: T::of(s),
        }
    }
}

fn chunk_rng(seed: u64, cell: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((cell << 32) ^ chunk);
    rng
}

/// One pass of `samples` draws `ξ ~ N(0, σ²I)` at `value` on `axis`,
/// accumulating membership and weight moments. `weights` disables the
/// weight arithmetic for plain SER runs.
pub(crate) fn sample_pass<T: Scalar, R: Region<T> + ?Sized>(
    region: &R,
    axis: Axis,
    value: T,
    samples: usize,
    seed: u64,
    cell: u64,
    weights: bool,
) -> PassStats {
    let dim = region.dim();
    let sigma = axis.sigma(value);
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<PassStats> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let count = CHUNK.min(samples - k * CHUNK);
            let mut rng = chunk_rng(seed, cell, k as u64);
            let mut x = vec![T::zero(); dim];
            let mut scratch = vec![T::zero(); dim];
            let mut st = PassStats {
                samples: count,
                ..Default::default()
            };
            for _ in 0..count {
                for xi in x.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *xi = sigma * T::of(z);
                }
                let inside = region.contains(&x, &mut scratch);
                if inside {
                    st.inside += 1;
                }
                if weights {
                    let t = norm_sq(&x);
                    st.order1
                        .push(weight(axis, t, dim, value, 1).as_f64(), inside);
                    st.order2
                        .push(weight(axis, t, dim, value, 2).as_f64(), inside);
                }
            }
            st
        })
        .collect();
    let mut total = PassStats::default();
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Monte Carlo probability of `region` at SNR `γ`.
pub fn region_pc_mc<T: Scalar, R: Region<T> + ?Sized>(
    region: &R,
    snr: T,
    samples: usize,
    seed: u64,
) -> Result<Estimate<T>> {
    positive("snr", snr)?;
    check_samples(samples)?;
    Ok(sample_pass(region, Axis::Snr, snr, samples, seed, 0, false).probability())
}

/// Monte Carlo `d^k/dx^k` of the probability of `region` on `axis`.
pub fn region_derivative_mc<T: Scalar, R: Region<T> + ?Sized>(
    region: &R,
    axis: Axis,
    value: T,
    order: u8,
    samples: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<Estimate<T>> {
    positive("axis value", value)?;
    check_order(order)?;
    check_samples(samples)?;
    Ok(sample_pass(region, axis, value, samples, seed, 0, true).derivative(order, estimator))
}

pub(crate) fn check_order(order: u8) -> Result<()> {
    if order == 1 || order == 2 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(order))
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    Ok(())
}

/// Per-point and averaged SER from a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct SerEstimate<T> {
    pub per_point: Vec<T>,
    pub per_point_std_error: Vec<T>,
    pub samples_per_point: Vec<usize>,
    pub average: T,
    pub std_error: T,
}

/// Sample budget for point `i`: the total split by priors, at least one.
pub(crate) fn split_budget<T: Scalar>(c: &Constellation<T>, samples: usize) -> Vec<usize> {
    c.priors()
        .iter()
        .map(|&p| ((p.as_f64() * samples as f64).round() as usize).max(1))
        .collect()
}

/// Monte Carlo SER: for each `s_i`, count `ml_detect(s_i + ξ) ≠ i`.
pub fn ser_mc<T: Scalar>(
    c: &Constellation<T>,
    snr: T,
    samples: usize,
    seed: u64,
) -> Result<SerEstimate<T>> {
    positive("snr", snr)?;
    check_samples(samples)?;
    let budget = split_budget(c, samples);
    let mut per_point = Vec::with_capacity(c.len());
    let mut per_point_std_error = Vec::with_capacity(c.len());
    let mut average = T::zero();
    let mut var = T::zero();
    for (i, &n_i) in budget.iter().enumerate() {
        let cell = VoronoiCell {
            constellation: c,
            index: i,
        };
        let pc = sample_pass(&cell, Axis::Snr, snr, n_i, seed, i as u64, false).probability::<T>();
        let pe = T::one() - pc.value;
        let p = c.priors()[i];
        average = average + p * pe;
        var = var + p * p * pc.std_error * pc.std_error;
        per_point.push(pe);
        per_point_std_error.push(pc.std_error);
    }
    Ok(SerEstimate {
        per_point,
        per_point_std_error,
        samples_per_point: budget,
        average,
        std_error: var.sqrt(),
    })
}

/// Monte Carlo `d^k P_ci / dx^k` (negate for `P_ei`).
pub fn ser_derivative_mc<T: Scalar>(
    c: &Constellation<T>,
    i: usize,
    axis: Axis,
    value: T,
    order: u8,
    samples: usize,
    seed: u64,
) -> Result<Estimate<T>> {
    if i >= c.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: c.len(),
        });
    }
    positive("axis value", value)?;
    check_order(order)?;
    check_samples(samples)?;
    let cell = VoronoiCell {
        constellation: c,
        index: i,
    };
    Ok(
        sample_pass(&cell, axis, value, samples, seed, i as u64, true)
            .derivative(order, Estimator::default()),
    )
}

/// `[P_ei, dP_ei/dγ, d²P_ei/dγ²]` for a region of dimension one or two.
///
/// In one dimension the region is an interval and the tails are Gaussian
/// Q-functions. In two dimensions the integral is reduced to polar form,
/// `P_ei = (1/2π)∫ exp(−γρ(θ)²/2) dθ` where `ρ(θ)` is the distance from the
/// origin to the boundary along direction θ, which is exact for regions
/// containing the origin and needs no box clipping.
pub fn region_error_integrals<T: Scalar>(region: &DecisionRegion<T>, snr: T) -> Result<[T; 3]> {
    positive("snr", snr)?;
    match region.dim() {
        1 => Ok(interval_error(region, snr)),
        2 => polar_error(region, snr),
        n => Err(Error::Capability(format!(
            "quadrature supports n <= 2, got n = {n}"
        ))),
    }
}

fn interval_error<T: Scalar>(region: &DecisionRegion<T>, snr: T) -> [T; 3] {
    let mut right = T::infinity();
    let mut left = T::infinity();
    for row in region.rows() {
        if row.normal[0] > T::zero() {
            right = right.min(row.offset);
        } else {
            left = left.min(row.offset);
        }
    }
    let mut out = [T::zero(); 3];
    for b in [left, right] {
        if b.is_infinite() {
            continue;
        }
        let s = b * snr.sqrt();
        let phi = normal_pdf(s);
        out[0] = out[0] + q_function(s);
        out[1] = out[1] - phi * s / (T::of(2.0) * snr);
        out[2] = out[2] + phi * s * (T::one() + s * s) / (T::of(4.0) * snr * snr);
    }
    out
}

fn polar_error<T: Scalar>(region: &DecisionRegion<T>, snr: T) -> Result<[T; 3]> {
    let rows = region.rows();
    let tau = T::TAU();
    let mut cuts = vec![T::zero(), tau];
    let wrap = |a: T| {
        let r = a % tau;
        if r < T::zero() {
            r + tau
        } else {
            r
        }
    };
    for (j, rj) in rows.iter().enumerate() {
        let base = rj.normal[1].atan2(rj.normal[0]);
        cuts.push(wrap(base + T::FRAC_PI_2()));
        cuts.push(wrap(base - T::FRAC_PI_2()));
        for rk in &rows[j + 1..] {
            let det = rj.normal[0] * rk.normal[1] - rj.normal[1] * rk.normal[0];
            if det.abs() < T::tol(1e-14) {
                continue;
            }
            let x = (rj.offset * rk.normal[1] - rk.offset * rj.normal[1]) / det;
            let y = (rj.normal[0] * rk.offset - rk.normal[0] * rj.offset) / det;
            cuts.push(wrap(y.atan2(x)));
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < T::tol(1e-15));

    let radius = |theta: T| {
        let (s, c) = theta.sin_cos();
        rows.iter()
            .filter_map(|r| {
                let proj = r.normal[0] * c + r.normal[1] * s;
                (proj > T::zero()).then(|| r.offset / proj)
            })
            .fold(T::infinity(), T::min)
    };
    let half = T::of(0.5);
    let tol = Tolerance::new(1e-15, 1e-13);
    let mut out = [T::zero(); 3];
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= T::zero() {
            continue;
        }
        for (k, slot) in out.iter_mut().enumerate() {
            let v = integrate(
                |theta: T| {
                    let rho = radius(theta);
                    if rho.is_infinite() {
                        return T::zero();
                    }
                    let r2 = rho * rho;
                    let e = (-snr * r2 * half).exp();
                    match k {
                        0 => e,
                        1 => -half * r2 * e,
                        _ => T::of(0.25) * r2 * r2 * e,
                    }
                },
                a,
                b,
                tol,
            )?;
            *slot = *slot + v.value;
        }
    }
    Ok(out.map(|v| v / tau))
}

/// Converts `[f, f_γ, f_γγ]` into `[f, f_P, f_PP]` with `P = 1/γ`.
pub fn snr_to_noise_derivatives<T: Scalar>(d: [T; 3], snr: T) -> [T; 3] {
    let g2 = snr * snr;
    [
        d[0],
        -g2 * d[1],
        g2 * g2 * d[2] + T::of(2.0) * g2 * snr * d[1],
    ]
}

/// Deterministic average SER by quadrature (n ≤ 2).
pub fn ser_quadrature<T: Scalar>(c: &Constellation<T>, snr: T) -> Result<T> {
    Ok(ser_quadrature_derivatives(c, snr)?[0])
}

/// Average `[P_e, dP_e/dγ, d²P_e/dγ²]` by quadrature (n ≤ 2).
pub fn ser_quadrature_derivatives<T: Scalar>(c: &Constellation<T>, snr: T) -> Result<[T; 3]> {
    if c.dim() > 2 {
        return Err(Error::Capability(format!(
            "quadrature supports n <= 2, got n = {}",
            c.dim()
        )));
    }
    let mut acc = [T::zero(); 3];
    for i in 0..c.len() {
        let d = region_error_integrals(&c.region(i)?, snr)?;
        for k in 0..3 {
            acc[k] = acc[k] + c.priors()[i] * d[k];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::StandardConstellation;

    fn std(k: StandardConstellation) -> Constellation<f64> {
        Constellation::standard(k).unwrap()
    }

    #[test]
    fn pdf_peak_values() {
        let v = noise_pdf(&[0.0], 1.0f64).unwrap();
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-15);
        let v = noise_pdf(&[0.0, 0.0], 1.0).unwrap();
        assert!((v - 1.0 / std::f64::consts::TAU).abs() < 1e-15);
        assert!(noise_pdf(&[0.0], 0.0).is_err());
        assert!(noise_pdf(&[0.0], -1.0).is_err());
    }

    #[test]
    fn noise_model_invariants() {
        let m = NoiseModel::from_snr(2, 4.0f64).unwrap();
        assert!((m.noise_power() - 0.25).abs() < 1e-15);
        assert!((m.sigma() - 0.5).abs() < 1e-15);
        assert!(NoiseModel::<f64>::from_noise_power(2, 0.0).is_err());
    }

    #[test]
    fn pdf_normalizes_by_mc() {
        // E_u[p(u)]·vol over a box of half-width 6σ, uniform sampling.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let half = 6.0;
        let vol = (2.0 * half) * (2.0 * half);
        let vals: Vec<f64> = (0..n)
            .map(|_| {
                let x = [rng.random_range(-half..half), rng.random_range(-half..half)];
                noise_pdf(&x, 1.0).unwrap() * vol
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
            / (n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sd, "mean {mean} sd {sd}");
    }

    #[test]
    fn weight_examples() {
        let n = 2usize;
        let a1 = n as f64 + (2.0 * n as f64).sqrt();
        // order 2 vanishes on the root |x|² = α₁/γ
        let g = 1.7;
        let x = [(a1 / g).sqrt(), 0.0];
        assert!(deriv_weight_snr(&x, g, 2).unwrap().abs() < 1e-14);
        assert_eq!(deriv_weight_snr(&[0.0, 0.0], 1.0, 2).unwrap(), 0.0);
        assert_eq!(deriv_weight_snr(&[1.0], 1.0, 1).unwrap(), 0.0);
        assert!(matches!(
            deriv_weight_snr(&[1.0], 1.0, 3),
            Err(Error::InvalidOrder(3))
        ));
        // noise weights
        assert!(deriv_weight_noise(&[1.0, 1.0], 1.0f64, 1).unwrap().abs() < 1e-15);
        assert_eq!(
            deriv_weight_noise(&[0.0, 0.0, 0.0], 2.0, 1).unwrap(),
            -3.0 / 4.0
        );
        assert!(deriv_weight_noise(&[1.0], 1.0, 0).is_err());
    }

    /// Central differences of the density itself, independent of the weights.
    fn fd_density(x: &[f64], axis: Axis, v: f64, order: u8) -> f64 {
        let p = |val: f64| match axis {
            Axis::Snr => noise_pdf(x, val).unwrap(),
            Axis::NoisePower => NoiseModel::from_noise_power(x.len(), val)
                .unwrap()
                .pdf(x)
                .unwrap(),
        };
        let h = 1e-4 * v;
        match order {
            1 => (p(v + h) - p(v - h)) / (2.0 * h),
            _ => (p(v + h) - 2.0 * p(v) + p(v - h)) / (h * h),
        }
    }

    #[test]
    fn weights_match_finite_differences() {
        let points: [&[f64]; 4] = [
            &[0.3],
            &[1.2, -0.4],
            &[0.1, 0.2, 2.0],
            &[0.9, 0.9, 0.9, 0.9, 0.9],
        ];
        for x in points {
            for &(axis, v) in &[
                (Axis::Snr, 0.7),
                (Axis::Snr, 3.0),
                (Axis::NoisePower, 0.5),
                (Axis::NoisePower, 2.5),
            ] {
                let p = match axis {
                    Axis::Snr => noise_pdf(x, v).unwrap(),
                    Axis::NoisePower => NoiseModel::from_noise_power(x.len(), v)
                        .unwrap()
                        .pdf(x)
                        .unwrap(),
                };
                for order in [1u8, 2] {
                    let w = match axis {
                        Axis::Snr => deriv_weight_snr(x, v, order).unwrap(),
                        Axis::NoisePower => deriv_weight_noise(x, v, order).unwrap(),
                    };
                    let fd = fd_density(x, axis, v, order);
                    let scale = fd.abs().max(p * 1e-3);
                    assert!(
                        (p * w - fd).abs() / scale < 1e-6,
                        "{axis} order {order} x={x:?}: {} vs {fd}",
                        p * w
                    );
                }
            }
        }
    }

    #[test]
    fn detection_rules() {
        let c = std(StandardConstellation::Mpsk(8));
        for i in 0..8 {
            assert_eq!(ml_detect(c.point(i), &c).unwrap(), i);
        }
        let b = std(StandardConstellation::Bpsk);
        assert_eq!(ml_detect(&[0.0], &b).unwrap(), 0);
        assert!(ml_detect(&[0.0, 1.0], &b).is_err());
    }

    #[test]
    fn bpsk_mc_against_q() {
        let c = std(StandardConstellation::Bpsk);
        let est = ser_mc(&c, 1.0, 1_000_000, 11).unwrap();
        let q1 = q_function(1.0);
        assert!(
            (est.average - q1).abs() < 3.0 * est.std_error,
            "{} vs {q1}",
            est.average
        );
        let high = ser_mc(&c, 1e4, 100_000, 11).unwrap();
        assert!(high.average < 1e-6);
        for (pe, se) in est.per_point.iter().zip(&est.per_point_std_error) {
            assert!((0.0..=1.0).contains(pe) && *se > 0.0);
        }
    }

    #[test]
    fn qpsk_mc_against_quadrature() {
        let c = std(StandardConstellation::Qpsk);
        for g in [1.0, 4.0] {
            let quad = ser_quadrature(&c, g).unwrap();
            let est = ser_mc(&c, g, 1_000_000, 5).unwrap();
            assert!(
                (est.average - quad).abs() < 4.0 * est.std_error,
                "γ={g}: {} vs {quad}",
                est.average
            );
        }
        // closed form 2q − q², q = Q(√(γ/2))
        let q = q_function((4.0_f64 / 2.0).sqrt());
        assert!((ser_quadrature(&c, 4.0).unwrap() - (2.0 * q - q * q)).abs() < 1e-12);
    }

    #[test]
    fn quadrature_bpsk_and_capability() {
        let b = std(StandardConstellation::Bpsk);
        assert!((ser_quadrature(&b, 1.0).unwrap() - 0.158_655_253_931_457_05).abs() < 1e-8);
        let c3 = std(StandardConstellation::Cube(3));
        assert!(matches!(
            ser_quadrature(&c3, 1.0),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn quadrature_derivatives_match_finite_differences() {
        for k in [
            StandardConstellation::Bpsk,
            StandardConstellation::Qpsk,
            StandardConstellation::Mpsk(8),
            StandardConstellation::Mqam(16),
        ] {
            let c = std(k);
            for g in [0.3, 2.0, 15.0] {
                let d = ser_quadrature_derivatives(&c, g).unwrap();
                let h = 1e-3 * g;
                let stencil = |f: &dyn Fn(f64) -> f64| {
                    (f(g - 2.0 * h) - 8.0 * f(g - h) + 8.0 * f(g + h) - f(g + 2.0 * h)) / (12.0 * h)
                };
                let d1 = stencil(&|x| ser_quadrature(&c, x).unwrap());
                let d2 = stencil(&|x| ser_quadrature_derivatives(&c, x).unwrap()[1]);
                assert!(
                    (d[1] - d1).abs() < 1e-6 * d1.abs().max(1e-6),
                    "{k} γ={g}: {} vs {d1}",
                    d[1]
                );
                assert!(
                    (d[2] - d2).abs() < 1e-6 * d2.abs().max(1e-6),
                    "{k} γ={g}: {} vs {d2}",
                    d[2]
                );
            }
        }
    }

    #[test]
    fn whole_space_derivative_is_zero() {
        for &(axis, v) in &[(Axis::Snr, 0.5f64), (Axis::NoisePower, 2.0)] {
            for order in [1u8, 2] {
                let e = region_derivative_mc(
                    &WholeSpace(3),
                    axis,
                    v,
                    order,
                    200_000,
                    9,
                    Estimator::Plain,
                )
                .unwrap();
                assert!(e.value.abs() <= 3.0 * e.std_error, "{axis} {order}: {e:?}");
                assert!(e.std_error > 0.0);
                let cv = region_derivative_mc(
                    &WholeSpace(3),
                    axis,
                    v,
                    order,
                    10_000,
                    9,
                    Estimator::ControlVariate,
                )
                .unwrap();
                assert!(cv.value.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bpsk_first_derivative() {
        let c = std(StandardConstellation::Bpsk);
        let e = ser_derivative_mc(&c, 0, Axis::Snr, 1.0, 1, 1_000_000, 21).unwrap();
        let expected = normal_pdf(1.0_f64) / 2.0;
        assert!(
            (e.value - expected).abs() < 3.0 * e.std_error,
            "{e:?} vs {expected}"
        );
    }

    #[test]
    fn seed_determinism() {
        let c = std(StandardConstellation::Mqam(16));
        let a = ser_mc(&c, 3.0, 50_000, 42).unwrap();
        let b = ser_mc(&c, 3.0, 50_000, 42).unwrap();
        assert_eq!(a, b);
        let d1 = ser_derivative_mc(&c, 5, Axis::NoisePower, 0.3, 2, 40_000, 42).unwrap();
        let d2 = ser_derivative_mc(&c, 5, Axis::NoisePower, 0.3, 2, 40_000, 42).unwrap();
        assert_eq!(d1.value.to_bits(), d2.value.to_bits());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let c = std(StandardConstellation::Qpsk);
        let base = ser_mc(&c, 2.0, 100_000, 8).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let single = pool.install(|| ser_mc(&c, 2.0, 100_000, 8).unwrap());
        assert_eq!(base, single);
    }

    #[test]
    fn f32_estimators_run() {
        let c = Constellation::<f32>::standard(StandardConstellation::Qpsk).unwrap();
        let est = ser_mc(&c, 4.0_f32, 200_000, 1).unwrap();
        let exact = ser_quadrature(&c, 4.0_f32).unwrap();
        assert!((est.average - exact).abs() < 4.0 * est.std_error + 1e-6);
    }
}
