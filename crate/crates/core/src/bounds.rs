//! Universal derivative bounds, convexity regimes, and numerical checks of
//! estimated curves against them.

use std::fmt::Write as _;

use crate::constellation::Constellation;
use crate::curve::{CurveEstimate, Target};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::ser::Axis;
use crate::special::ln_gamma;

/// Standard errors allowed outside a bound before a check fails.
pub const BOUND_K: f64 = 4.0;
/// Flanking significance for counting an inflection crossing.
pub const INFLECTION_K: f64 = 3.0;

/// Dimension-dependent coefficients of the derivative bounds.
///
/// With `u = γR²/2` and `v = R²/(2P_N)`:
/// `−c_n/γ ≤ P'_e ≤ 0`, `β_l/γ² ≤ P''_e ≤ β_u/γ²` on the SNR axis and
/// `0 ≤ P'_e ≤ c_n/P_N`, `b_l/P_N² ≤ P''_e ≤ b_u/P_N²` on the noise axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSet<T> {
    pub n: usize,
    pub c_n: T,
    pub beta_l: T,
    pub beta_u: T,
    pub b_l: T,
    pub b_u: T,
    pub b_1: T,
    pub b_2: T,
    /// `½(2 + √(2n))`, the prefactor of `β_u`.
    pub a_n: T,
    /// `½(2 − √(2n))`, the prefactor of `β_l` before the clamp.
    pub b_n: T,
}

/// `x^{n/2} e^{−x} / Γ(n/2)` for `x > 0`, zero otherwise.
fn kernel<T: Scalar>(n: usize, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    let a = T::of_usize(n) * T::of(0.5);
    (a * x.ln() - x - ln_gamma(a)).exp()
}

pub fn coefficients<T: Scalar>(n: usize) -> Result<BoundSet<T>> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "bound coefficients need n >= 1".into(),
        ));
    }
    let half = T::of(0.5);
    let nf = T::of_usize(n);
    let h = nf * half;
    let root = h.sqrt();
    let a_n = T::one() + root;
    let b_n = T::one() - root;
    // extremes of γ²P''_e over u sit at u = n/2 ± √(n/2)
    let beta_u = a_n * kernel(n, h + root);
    let beta_l = if n > 2 {
        b_n * kernel(n, h - root)
    } else {
        T::zero()
    };
    let m = nf + T::of(2.0);
    let s = (T::of(2.0) * m).sqrt();
    let b_1 = half * (m + s);
    let b_2 = half * (m - s);
    let w = (m * half).sqrt();
    Ok(BoundSet {
        n,
        c_n: kernel(n, h),
        beta_l,
        beta_u,
        b_l: -w * kernel(n, b_2),
        b_u: w * kernel(n, b_1),
        b_1,
        b_2,
        a_n,
        b_n,
    })
}

impl<T: Scalar> BoundSet<T> {
    /// `(lower, upper)` on the `order`-th derivative of `P_e` at `x`.
    pub fn envelope(&self, axis: Axis, order: u8, x: T) -> Result<(T, T)> {
        let z = T::zero();
        Ok(match (axis, order) {
            (Axis::Snr, 1) => (-self.c_n / x, z),
            (Axis::Snr, 2) => (self.beta_l / (x * x), self.beta_u / (x * x)),
            (Axis::NoisePower, 1) => (z, self.c_n / x),
            (Axis::NoisePower, 2) => (self.b_l / (x * x), self.b_u / (x * x)),
            _ => return Err(Error::InvalidOrder(order)),
        })
    }

    /// `(β_l, β_u)` evaluated with `a_n`, `b_n` as the base of the power
    /// instead of the extremal `u`. Agrees with the stored values only at
    /// `n = 2`; NaN where the base is negative and the power fractional.
    pub fn literal_beta(&self) -> (T, T) {
        let g = ln_gamma(T::of_usize(self.n) * T::of(0.5)).exp();
        let p = T::of_usize(self.n) * T::of(0.5);
        let upper = self.a_n * self.a_n.powf(p) * (-self.a_n).exp() / g;
        let lower = if self.b_n >= T::zero() {
            T::zero()
        } else {
            self.b_n * self.b_n.powf(p) * (-self.b_n).exp() / g
        };
        (lower, upper)
    }
}

/// Closed interval `[lo, hi]`; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

/// Regimes for one decision region (or the global substitution).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeEntry<T> {
    /// `None` for the global entry.
    pub point: Option<usize>,
    pub d_min: T,
    pub d_max: T,
    pub convex: Interval<T>,
    /// Empty when `d_max` is infinite or, on the SNR axis, when `n ≤ 2`.
    pub concave: Option<Interval<T>>,
    /// The region between the two modes where inflection points may sit;
    /// `None` when the curve is convex everywhere.
    pub intermediate: Option<Interval<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport<T> {
    pub axis: Axis,
    pub dim: usize,
    pub entries: Vec<RegimeEntry<T>>,
    /// `n ≤ 2` on the SNR axis.
    pub globally_convex: bool,
}

/// SNR-axis regimes for a region with the given distances: convex for
/// `γ ≥ (n+√(2n))/d_min²`, concave for `γ ≤ (n−√(2n))/d_max²`.
pub fn snr_regime<T: Scalar>(n: usize, d_min: T, d_max: T, point: Option<usize>) -> RegimeEntry<T> {
    let nf = T::of_usize(n);
    let r = (T::of(2.0) * nf).sqrt();
    let inf = T::infinity();
    if n <= 2 {
        return RegimeEntry {
            point,
            d_min,
            d_max,
            convex: Interval {
                lo: T::zero(),
                hi: inf,
            },
            concave: None,
            intermediate: None,
        };
    }
    let onset = (nf + r) / (d_min * d_min);
    let concave = d_max.is_finite().then(|| Interval {
        lo: T::zero(),
        hi: (nf - r) / (d_max * d_max),
    });
    RegimeEntry {
        point,
        d_min,
        d_max,
        convex: Interval { lo: onset, hi: inf },
        concave,
        intermediate: Some(Interval {
            lo: concave.map_or(T::zero(), |c| c.hi),
            hi: onset,
        }),
    }
}

/// Noise-axis regimes: convex for `P_N ≤ d_min²/(n+2+√(2(n+2)))`, concave
/// for `P_N ≥ d_max²/(n+2−√(2(n+2)))`.
pub fn noise_regime<T: Scalar>(
    n: usize,
    d_min: T,
    d_max: T,
    point: Option<usize>,
) -> RegimeEntry<T> {
    let m = T::of_usize(n + 2);
    let r = (T::of(2.0) * m).sqrt();
    let inf = T::infinity();
    let cutoff = d_min * d_min / (m + r);
    let concave = d_max.is_finite().then(|| Interval {
        lo: d_max * d_max / (m - r),
        hi: inf,
    });
    RegimeEntry {
        point,
        d_min,
        d_max,
        convex: Interval {
            lo: T::zero(),
            hi: cutoff,
        },
        concave,
        intermediate: Some(Interval {
            lo: cutoff,
            hi: concave.map_or(inf, |c| c.lo),
        }),
    }
}

fn regimes<T: Scalar>(
    c: &Constellation<T>,
    per_point: bool,
    axis: Axis,
    entry: fn(usize, T, T, Option<usize>) -> RegimeEntry<T>,
) -> Result<RegimeReport<T>> {
    let n = c.dim();
    let entries = if per_point {
        (0..c.len())
            .map(|i| {
                let r = c.region(i)?;
                Ok(entry(n, r.d_min(), r.d_max(), Some(i)))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        let (d_min, d_max) = c.global_distances()?;
        vec![entry(n, d_min, d_max, None)]
    };
    Ok(RegimeReport {
        axis,
        dim: n,
        entries,
        globally_convex: axis == Axis::Snr && n <= 2,
    })
}

pub fn snr_regimes<T: Scalar>(c: &Constellation<T>, per_point: bool) -> Result<RegimeReport<T>> {
    regimes(c, per_point, Axis::Snr, snr_regime)
}

pub fn noise_regimes<T: Scalar>(c: &Constellation<T>, per_point: bool) -> Result<RegimeReport<T>> {
    regimes(c, per_point, Axis::NoisePower, noise_regime)
}

fn fmt_interval<T: Scalar>(i: Option<Interval<T>>) -> String {
    match i {
        None => "empty".into(),
        Some(i) => format!(
            "[{:.17e}, {}]",
            i.lo.as_f64(),
            if i.hi.is_finite() {
                format!("{:.17e}", i.hi.as_f64())
            } else {
                "inf".into()
            }
        ),
    }
}

impl<T: Scalar> RegimeReport<T> {
    pub fn summary(&self) -> String {
        let mut s = format!("regimes axis={} n={}", self.axis, self.dim);
        if self.globally_convex {
            s.push_str(" globally_convex=true");
        }
        s.push('\n');
        for e in &self.entries {
            let who = e
                .point
                .map_or("global".to_string(), |i| format!("point {i}"));
            let dmax = if e.d_max.is_finite() {
                format!("{:.17e}", e.d_max.as_f64())
            } else {
                "inf".into()
            };
            let _ = writeln!(
                s,
                "{who}: d_min={:.17e} d_max={dmax} convex={} concave={} intermediate={}",
                e.d_min.as_f64(),
                fmt_interval(Some(e.convex)),
                fmt_interval(e.concave),
                fmt_interval(e.intermediate)
            );
        }
        s
    }
}

/// One grid point of a bound check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow<T> {
    pub x: T,
    pub estimate: T,
    pub std_error: T,
    pub lower: T,
    pub upper: T,
    /// `min(estimate − lower, upper − estimate)`; negative outside the band.
    pub margin: T,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T> {
    pub axis: Axis,
    pub order: u8,
    pub k: f64,
    pub rows: Vec<BoundRow<T>>,
    /// Index of the row with the smallest margin.
    pub closest: usize,
}

impl<T: Scalar> BoundReport<T> {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("axis_value,estimate,std_error,lower,upper,margin,pass\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.x.as_f64(),
                r.estimate.as_f64(),
                r.std_error.as_f64(),
                r.lower.as_f64(),
                r.upper.as_f64(),
                r.margin.as_f64(),
                r.pass
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let failed = self.rows.iter().filter(|r| !r.pass).count();
        let c = &self.rows[self.closest];
        format!(
            "bound check axis={} order={} k={}: {} of {} points pass; closest approach at x={:.17e} (margin {:.17e}, {:.3} std errors)\n",
            self.axis,
            self.order,
            self.k,
            self.rows.len() - failed,
            self.rows.len(),
            c.x.as_f64(),
            c.margin.as_f64(),
            if c.std_error > T::zero() { (c.margin / c.std_error).as_f64() } else { f64::INFINITY },
        )
    }
}

/// Checks every grid point of a derivative curve against the envelope with
/// `k = 4` standard errors of slack. Curves of `P_c` use the negated band.
pub fn check_derivative_bounds<T: Scalar>(
    curve: &CurveEstimate<T>,
    bs: &BoundSet<T>,
) -> Result<BoundReport<T>> {
    let order = curve.quantity.order;
    if order == 0 {
        return Err(Error::Incompatible(
            "bound checks need a derivative curve".into(),
        ));
    }
    if curve.is_empty() {
        return Err(Error::InvalidGrid);
    }
    let flip = matches!(
        curve.quantity.target,
        Target::CorrectAvg | Target::CorrectAt(_)
    );
    let k = T::of(BOUND_K);
    let mut rows = Vec::with_capacity(curve.len());
    for idx in 0..curve.len() {
        let x = curve.grid[idx];
        let (mut lower, mut upper) = bs.envelope(curve.axis, order, x)?;
        if flip {
            (lower, upper) = (-upper, -lower);
        }
        let est = curve.values[idx];
        let se = curve.std_errors[idx];
        let slack = k * se + T::of(64.0) * T::epsilon() * lower.abs().max(upper.abs());
        let margin = (est - lower).min(upper - est);
        rows.push(BoundRow {
            x,
            estimate: est,
            std_error: se,
            lower,
            upper,
            margin,
            pass: margin >= -slack,
        });
    }
    let closest = (0..rows.len())
        .min_by(|&a, &b| {
            rows[a]
                .margin
                .partial_cmp(&rows[b].margin)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    Ok(BoundReport {
        axis: curve.axis,
        order,
        k: BOUND_K,
        rows,
        closest,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InflectionScan<T> {
    pub crossings: Vec<T>,
    /// Sign changes between neighbouring grid points where at least one
    /// side is within `3σ̂` of zero.
    pub unresolved: usize,
    pub odd: bool,
}

/// Sign changes of a second-derivative curve inside `bracket`, counting only
/// changes whose flanking estimates both exceed `3σ̂` in magnitude. The
/// bracket is clipped to the grid.
pub fn inflection_scan<T: Scalar>(
    curve: &CurveEstimate<T>,
    bracket: (T, T),
) -> Result<InflectionScan<T>> {
    if curve.quantity.order != 2 {
        return Err(Error::Incompatible(
            "inflection scans need a second-derivative curve".into(),
        ));
    }
    let (lo, hi) = bracket;
    let (first, last) = match (curve.grid.first(), curve.grid.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::InvalidGrid),
    };
    if !(lo <= hi) || hi < first || lo > last {
        return Err(Error::BracketOutsideGrid {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    let k = T::of(INFLECTION_K);
    let inside: Vec<usize> = (0..curve.len())
        .filter(|&i| curve.grid[i] >= lo && curve.grid[i] <= hi)
        .collect();
    let significant = |i: usize| {
        let v = curve.values[i];
        v.abs() > k * curve.std_errors[i] && v != T::zero()
    };
    let mut crossings = Vec::new();
    let mut prev: Option<usize> = None;
    for &i in inside.iter().filter(|&&i| significant(i)) {
        if let Some(p) = prev {
            let (va, vb) = (curve.values[p], curve.values[i]);
            if (va > T::zero()) != (vb > T::zero()) {
                let (xa, xb) = (curve.grid[p], curve.grid[i]);
                crossings.push(xa + (xb - xa) * va / (va - vb));
            }
        }
        prev = Some(i);
    }
    let unresolved = inside
        .windows(2)
        .filter(|w| {
            let (a, b) = (curve.values[w[0]], curve.values[w[1]]);
            (a > T::zero()) != (b > T::zero()) && !(significant(w[0]) && significant(w[1]))
        })
        .count();
    let odd = crossings.len() % 2 == 1;
    Ok(InflectionScan {
        crossings,
        unresolved,
        odd,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogConcavityReport<T> {
    /// Interior grid points, one per second divided difference.
    pub x: Vec<T>,
    /// Change in slope of `ln P` across each interior point.
    pub slope_change: Vec<T>,
    pub std_error: Vec<T>,
    /// Largest `slope_change − 4σ̂`; the curve passes when this is ≤ 0.
    pub worst: T,
    pub worst_at: Option<T>,
    pub passed: bool,
}

/// Discrete log-concavity of a `P_c` / `P_ci` curve on the SNR axis: the
/// divided-difference slope of `ln P` may not increase by more than `4σ̂`,
/// with `σ̂` propagated from the per-point errors as if independent.
pub fn log_concavity_check<T: Scalar>(curve: &CurveEstimate<T>) -> Result<LogConcavityReport<T>> {
    if curve.quantity.order != 0
        || !matches!(
            curve.quantity.target,
            Target::CorrectAvg | Target::CorrectAt(_)
        )
    {
        return Err(Error::Incompatible(
            "log-concavity applies to P_c curves".into(),
        ));
    }
    if curve.axis != Axis::Snr {
        return Err(Error::Incompatible(
            "log-concavity is checked on the SNR axis".into(),
        ));
    }
    if let Some(k) = curve.values.iter().position(|&v| !(v > T::zero())) {
        return Err(Error::NonPositiveValue(k));
    }
    let l: Vec<T> = curve.values.iter().map(|v| v.ln()).collect();
    let sl: Vec<T> = curve
        .values
        .iter()
        .zip(&curve.std_errors)
        .map(|(&v, &s)| s / v)
        .collect();
    let kk = T::of(BOUND_K);
    let mut report = LogConcavityReport {
        x: Vec::new(),
        slope_change: Vec::new(),
        std_error: Vec::new(),
        worst: T::neg_infinity(),
        worst_at: None,
        passed: true,
    };
    for j in 1..curve.len().saturating_sub(1) {
        let h0 = curve.grid[j] - curve.grid[j - 1];
        let h1 = curve.grid[j + 1] - curve.grid[j];
        let (c0, c2) = (h0.recip(), h1.recip());
        let c1 = -(c0 + c2);
        let d = c2 * l[j + 1] + c1 * l[j] + c0 * l[j - 1];
        let se =
            ((c2 * sl[j + 1]).powi(2) + (c1 * sl[j]).powi(2) + (c0 * sl[j - 1]).powi(2)).sqrt();
        let slack = T::of(64.0) * T::epsilon() * (c0.abs() + c2.abs()) * (l[j].abs() + T::one());
        let excess = d - kk * se;
        if excess > report.worst {
            report.worst = excess;
            report.worst_at = Some(curve.grid[j]);
        }
        if excess > slack {
            report.passed = false;
        }
        report.x.push(curve.grid[j]);
        report.slope_change.push(d);
        report.std_error.push(se);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::StandardConstellation;
    use crate::curve::{curve, Grid, Method, Quantity};
    use crate::sphere::{sphere_pe_noise_d, SphereRegion};
    use std::f64::consts::{E, PI, SQRT_2};

    #[test]
    fn coefficient_examples() {
        let b1 = coefficients::<f64>(1).unwrap();
        assert!((b1.c_n - 1.0 / (2.0 * PI * E).sqrt()).abs() < 1e-15);
        assert!((b1.c_n - 0.241_971).abs() < 1e-6);
        assert_eq!(b1.beta_l, 0.0);
        let b2 = coefficients::<f64>(2).unwrap();
        assert!((b2.c_n - 1.0 / E).abs() < 1e-15);
        assert_eq!(b2.beta_l, 0.0);
        assert!((b2.beta_u - 4.0 / (E * E)).abs() < 1e-12);
        assert!((b2.b_1 - (2.0 + SQRT_2)).abs() < 1e-15);
        assert!((b2.b_2 - (2.0 - SQRT_2)).abs() < 1e-15);
        assert!(coefficients::<f64>(0).is_err());
    }

    #[test]
    fn coefficient_invariants() {
        for n in 1..=12 {
            let b = coefficients::<f64>(n).unwrap();
            assert!(b.c_n > 0.0 && b.beta_u > 0.0 && b.beta_l <= 0.0 && b.b_u > 0.0 && b.b_l < 0.0);
            assert!(b.b_1 > b.b_2 && b.b_2 > 0.0);
            if n > 2 {
                assert!(b.beta_l < 0.0);
            }
        }
    }

    #[test]
    fn beta_matches_numerical_extremes() {
        for n in 1..=6usize {
            let b = coefficients::<f64>(n).unwrap();
            let prof = |u: f64| crate::sphere::snr_profile::<f64>(n, u, 2).unwrap();
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 1..200_000 {
                let v = prof(k as f64 * 1e-4);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            assert!((hi - b.beta_u).abs() < 1e-8, "n={n}");
            assert!((lo.min(0.0) - b.beta_l).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn literal_form_agrees_only_at_two() {
        let b2 = coefficients::<f64>(2).unwrap();
        let (l, u) = b2.literal_beta();
        assert!((u - b2.beta_u).abs() < 1e-15 && l == 0.0);
        for n in [1, 3, 4] {
            let b = coefficients::<f64>(n).unwrap();
            assert!((b.literal_beta().1 - b.beta_u).abs() > 1e-3, "n={n}");
        }
    }

    #[test]
    fn regime_examples() {
        let qpsk = Constellation::<f64>::standard(StandardConstellation::Qpsk).unwrap();
        let r = snr_regimes(&qpsk, false).unwrap();
        assert!(r.globally_convex && r.entries[0].intermediate.is_none());

        let cube = Constellation::<f64>::standard(StandardConstellation::Cube(3)).unwrap();
        let e = snr_regimes(&cube, false).unwrap().entries[0];
        assert!((e.convex.lo - (3.0 + 6f64.sqrt()) * 3.0).abs() < 1e-9);
        assert!((e.convex.lo - 16.348).abs() < 1e-3);
        assert!(e.concave.is_none());
        let e = noise_regimes(&cube, true).unwrap().entries[5];
        assert!((e.convex.hi - (1.0 / 3.0) / (5.0 + 10f64.sqrt())).abs() < 1e-12);
        assert!((e.convex.hi - 0.040_838).abs() < 1e-6);
        assert!(e.concave.is_none());

        let bpsk = Constellation::<f64>::standard(StandardConstellation::Bpsk).unwrap();
        let e = noise_regimes(&bpsk, false).unwrap().entries[0];
        assert!((e.convex.hi - 1.0 / (3.0 + 6f64.sqrt())).abs() < 1e-15);
        assert!((e.convex.hi - 0.183_50).abs() < 1e-5);
        assert!(e.concave.is_none());

        let d = 1.3;
        let e = snr_regime(3, d, d, None);
        let r = 6f64.sqrt();
        let i = e.intermediate.unwrap();
        assert!(
            (i.lo - (3.0 - r) / (d * d)).abs() < 1e-15
                && (i.hi - (3.0 + r) / (d * d)).abs() < 1e-15
        );
    }

    #[test]
    fn sphere_first_order_bound_is_tight() {
        let n = 3;
        let bs = coefficients::<f64>(n).unwrap();
        let grid = Grid::log(0.1, 10.0, 9).unwrap();
        // R² = n/γ at every point means a different sphere per grid value
        let c = CurveEstimate::from_fn(
            Axis::Snr,
            Quantity::pei(0).derivative(1),
            &grid,
            |g: f64| {
                let s = SphereRegion::new(n, (n as f64 / g).sqrt()).unwrap();
                -crate::sphere::sphere_pc_d(&s, g, 1).unwrap()
            },
        );
        let rep = check_derivative_bounds(&c, &bs).unwrap();
        assert!(rep.passed());
        assert!(rep
            .rows
            .iter()
            .all(|r| r.margin.abs() < 1e-12 * r.lower.abs()));
    }

    #[test]
    fn bound_check_detects_violations_and_mismatch() {
        let bs = coefficients::<f64>(2).unwrap();
        let grid = Grid::log(1.0, 2.0, 3).unwrap();
        let bad = CurveEstimate::from_fn(Axis::Snr, Quantity::d2(), &grid, |g: f64| 1.0 / (g * g));
        let rep = check_derivative_bounds(&bad, &bs).unwrap();
        assert!(!rep.passed());
        assert!(rep.summary().contains("0 of 3"));
        assert_eq!(rep.to_csv().lines().count(), 4);
        let pe = CurveEstimate::from_fn(Axis::Snr, Quantity::pe(), &grid, |_: f64| 0.1);
        assert!(check_derivative_bounds(&pe, &bs).is_err());
    }

    #[test]
    fn qpsk_quadrature_curves_respect_bounds() {
        let c = Constellation::<f64>::standard(StandardConstellation::Qpsk).unwrap();
        let bs = coefficients::<f64>(2).unwrap();
        let grid = Grid::log(0.05, 100.0, 40).unwrap();
        for axis in [Axis::Snr, Axis::NoisePower] {
            for q in [Quantity::d1(), Quantity::d2(), Quantity::pc().derivative(2)] {
                let cv = curve(&c, axis, &grid, q, Method::Quadrature, 0, 0).unwrap();
                assert!(
                    check_derivative_bounds(&cv, &bs).unwrap().passed(),
                    "{axis} {q}"
                );
            }
        }
    }

    #[test]
    fn sphere_noise_inflection() {
        let (n, r) = (3, 1.5);
        let s = SphereRegion::new(n, r).unwrap();
        let grid = Grid::log(0.05, 5.0, 101).unwrap();
        let cv = CurveEstimate::from_fn(
            Axis::NoisePower,
            Quantity::pei(0).derivative(2),
            &grid,
            |p: f64| sphere_pe_noise_d(&s, p, 2).unwrap(),
        );
        let scan = inflection_scan(&cv, (0.01, 100.0)).unwrap();
        assert_eq!(scan.crossings.len(), 1);
        assert!(scan.odd);
        let exact = r * r / (n as f64 + 2.0);
        assert!((scan.crossings[0] - exact).abs() < 0.01 * exact);
        assert!(matches!(
            inflection_scan(&cv, (10.0, 20.0)),
            Err(Error::BracketOutsideGrid { .. })
        ));
    }

    #[test]
    fn qpsk_has_no_inflection_and_noisy_signs_are_unresolved() {
        let c = Constellation::<f64>::standard(StandardConstellation::Qpsk).unwrap();
        let grid = Grid::log(0.1, 30.0, 25).unwrap();
        let cv = curve(
            &c,
            Axis::Snr,
            &grid,
            Quantity::d2(),
            Method::Quadrature,
            0,
            0,
        )
        .unwrap();
        assert!(inflection_scan(&cv, (0.1, 30.0))
            .unwrap()
            .crossings
            .is_empty());

        let mut noisy = CurveEstimate::from_fn(
            Axis::Snr,
            Quantity::d2(),
            &Grid::linear(1.0, 4.0, 4).unwrap(),
            |_: f64| 0.0,
        );
        noisy.values = vec![1.0, -0.1, 0.1, -1.0];
        noisy.std_errors = vec![0.1; 4];
        let scan = inflection_scan(&noisy, (0.0, 10.0)).unwrap();
        assert_eq!(scan.crossings.len(), 1);
        assert_eq!(scan.unresolved, 3);
        assert!((scan.crossings[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn log_concavity_of_bpsk_and_errors() {
        let c = Constellation::<f64>::standard(StandardConstellation::Bpsk).unwrap();
        let grid = Grid::log(0.01, 100.0, 50).unwrap();
        let cv = curve(
            &c,
            Axis::Snr,
            &grid,
            Quantity::pci(0),
            Method::Quadrature,
            0,
            0,
        )
        .unwrap();
        let rep = log_concavity_check(&cv).unwrap();
        assert!(rep.passed, "worst {:?} at {:?}", rep.worst, rep.worst_at);
        // a log-convex curve fails
        let bad = CurveEstimate::from_fn(Axis::Snr, Quantity::pc(), &grid, |g: f64| {
            (g * g / 1e4).exp() * 1e-2
        });
        assert!(!log_concavity_check(&bad).unwrap().passed);
        let zero = CurveEstimate::from_fn(Axis::Snr, Quantity::pc(), &grid, |_: f64| 0.0);
        assert!(matches!(
            log_concavity_check(&zero),
            Err(Error::NonPositiveValue(0))
        ));
        let pe = curve(
            &c,
            Axis::Snr,
            &grid,
            Quantity::pe(),
            Method::Quadrature,
            0,
            0,
        )
        .unwrap();
        assert!(log_concavity_check(&pe).is_err());
    }
}
