//! Power allocation across V-BLAST streams, jammer power/time sharing, and
//! transmitter sharing.
//!
//! Every solver takes smooth callables (closed forms or interpolants); raw
//! Monte Carlo curves break the monotonicity the bisections rely on.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `P_B = 1 − Π(1 − pe(α_i γ_i))`.
pub fn blast_bler<T: Scalar, F: Fn(T) -> T>(pe: F, fractions: &[T], snrs: &[T]) -> Result<T> {
    if fractions.len() != snrs.len() {
        return Err(Error::DimensionMismatch {
            expected: snrs.len(),
            found: fractions.len(),
        });
    }
    let mut ok = T::one();
    for (i, (&a, &g)) in fractions.iter().zip(snrs).enumerate() {
        if !(a >= T::zero()) {
            return Err(Error::NegativePrior {
                index: i,
                value: a.as_f64(),
            });
        }
        let p = pe(a * g);
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::ProbabilityOutOfRange(p.as_f64()));
        }
        ok = ok * (T::one() - p);
    }
    Ok(T::one() - ok)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult<T> {
    pub fractions: Vec<T>,
    pub multiplier: T,
    /// Block error rate at the returned fractions.
    pub objective: T,
    /// Largest relative violation of stationarity, complementary slackness
    /// or the budget.
    pub kkt_residual: T,
}

/// SNR standing in for `0⁺` when evaluating marginals at `α = 0`.
const ZERO_PLUS: f64 = 1e-12;

struct Stream<'a, T, F, D> {
    pe: &'a F,
    pe_d1: &'a D,
    snr: T,
}

impl<T: Scalar, F: Fn(T) -> T, D: Fn(T) -> T> Stream<'_, T, F, D> {
    /// `∂/∂α ln(1 − pe(αγ))`.
    fn marginal(&self, alpha: T) -> T {
        let x = (alpha * self.snr).max(T::of(ZERO_PLUS));
        -self.snr * (self.pe_d1)(x) / (T::one() - (self.pe)(x))
    }

    /// Fraction whose marginal equals `lambda`, zero if even `0⁺` falls short.
    fn fraction(&self, lambda: T, budget: T) -> Result<T> {
        let m0 = self.marginal(T::zero());
        if m0 <= lambda {
            return Ok(T::zero());
        }
        let mut hi = budget;
        let mut m_hi = self.marginal(hi);
        let mut expansions = 0;
        while m_hi > lambda {
            hi = hi * T::of(2.0);
            m_hi = self.marginal(hi);
            expansions += 1;
            if expansions > 200 || !m_hi.is_finite() {
                return Err(Error::BracketExpansion(format!(
                    "stream marginal stays above {lambda} up to alpha = {hi}"
                )));
            }
        }
        let (mut lo, mut m_lo) = (T::zero(), m0);
        let slack = T::of(1e-9);
        for _ in 0..200 {
            let mid = (lo + hi) * T::of(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            let m_mid = self.marginal(mid);
            if m_mid > m_lo * (T::one() + slack) + slack * lambda
                || m_mid < m_hi * (T::one() - slack) - slack * lambda
            {
                return Err(Error::NonConvex(format!(
                    "marginal utility is not decreasing near alpha = {mid} (snr {})",
                    self.snr
                )));
            }
            if m_mid > lambda {
                lo = mid;
                m_lo = m_mid;
            } else {
                hi = mid;
                m_hi = m_mid;
            }
        }
        Ok((lo + hi) * T::of(0.5))
    }

    fn check_monotone(&self, budget: T) -> Result<()> {
        let mut prev = T::infinity();
        for k in 0..=48 {
            let a = budget * T::of(10f64.powf(-6.0 + 7.0 * k as f64 / 48.0));
            let m = self.marginal(a);
            if m > prev * (T::one() + T::of(1e-9)) {
                return Err(Error::NonConvex(format!(
                    "marginal utility increases at alpha = {a} (snr {})",
                    self.snr
                )));
            }
            prev = m;
        }
        Ok(())
    }
}

/// Minimizes the block error rate over fractions `α ≥ 0`, `Σα = m`, by
/// bisection on the shared multiplier of `Σ ln(1 − pe(α_iγ_i))`.
pub fn blast_allocate<T: Scalar, F: Fn(T) -> T, D: Fn(T) -> T>(
    pe: F,
    pe_d1: D,
    snrs: &[T],
) -> Result<AllocationResult<T>> {
    let m = snrs.len();
    if m == 0 {
        return Err(Error::InvalidArgument(
            "allocation needs at least one stream".into(),
        ));
    }
    for &g in snrs {
        if !(g > T::zero()) {
            return Err(Error::NonPositive {
                name: "stream snr",
                value: g.as_f64(),
            });
        }
    }
    let budget = T::of_usize(m);
    let streams: Vec<Stream<'_, T, F, D>> = snrs
        .iter()
        .map(|&snr| Stream {
            pe: &pe,
            pe_d1: &pe_d1,
            snr,
        })
        .collect();
    for s in &streams {
        s.check_monotone(budget)?;
    }
    let total = |lambda: T| -> Result<(Vec<T>, T)> {
        let a = streams
            .iter()
            .map(|s| s.fraction(lambda, budget))
            .collect::<Result<Vec<T>>>()?;
        let sum = a.iter().copied().sum();
        Ok((a, sum))
    };
    let (mut lo, mut hi) = (T::one(), T::one());
    for _ in 0..2000 {
        if total(lo)?.1 >= budget {
            break;
        }
        lo = lo * T::of(0.5);
    }
    for _ in 0..2000 {
        if total(hi)?.1 <= budget {
            break;
        }
        hi = hi * T::of(2.0);
    }
    let mut best = total(lo)?;
    let mut lambda = lo;
    for _ in 0..300 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let r = total(mid)?;
        let gap = r.1 - budget;
        lambda = mid;
        best = r;
        if gap.abs() <= T::of(1e-13) * budget {
            break;
        }
        if gap > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (mut fractions, sum) = best;
    if sum > T::zero() {
        for a in fractions.iter_mut() {
            *a = *a * budget / sum;
        }
    }
    let objective = blast_bler(&pe, &fractions, snrs)?;
    let kkt_residual = kkt_residual(&streams, &fractions, lambda, budget);
    Ok(AllocationResult {
        fractions,
        multiplier: lambda,
        objective,
        kkt_residual,
    })
}

fn kkt_residual<T: Scalar, F: Fn(T) -> T, D: Fn(T) -> T>(
    streams: &[Stream<'_, T, F, D>],
    fractions: &[T],
    lambda: T,
    budget: T,
) -> T {
    let mut r = (fractions.iter().copied().sum::<T>() - budget).abs() / budget;
    for (s, &a) in streams.iter().zip(fractions) {
        let m = s.marginal(a);
        let v = if a > T::zero() {
            (m - lambda).abs()
        } else {
            (m - lambda).max(T::zero())
        };
        r = r.max(v / lambda);
    }
    r
}

/// Bisects the single sign change of `d2` on `[lo, hi]` after a 400-point
/// log-spaced pre-scan.
pub fn find_inflection<T: Scalar, F: Fn(T) -> T>(d2: F, lo: T, hi: T) -> Result<T> {
    if !(lo > T::zero()) || !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "inflection bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    const SCAN: usize = 400;
    let (ll, lh) = (lo.ln(), hi.ln());
    let xs: Vec<T> = (0..SCAN)
        .map(|k| (ll + (lh - ll) * T::of_usize(k) / T::of_usize(SCAN - 1)).exp())
        .collect();
    let vals: Vec<T> = xs.iter().map(|&x| d2(x)).collect();
    let mut changes = Vec::new();
    let mut last: Option<usize> = None;
    for k in 0..SCAN {
        if vals[k] == T::zero() || !vals[k].is_finite() {
            continue;
        }
        if let Some(j) = last {
            if (vals[j] > T::zero()) != (vals[k] > T::zero()) {
                changes.push((j, k));
            }
        }
        last = Some(k);
    }
    match changes.len() {
        0 => {
            return Err(Error::NoSignChange {
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            })
        }
        1 => {}
        count => return Err(Error::MultipleInflections { count }),
    }
    let (j, k) = changes[0];
    let (mut a, mut b) = (xs[j], xs[k]);
    let positive_left = vals[j] > T::zero();
    for _ in 0..200 {
        let mid = (a + b) * T::of(0.5);
        if mid <= a || mid >= b || (b - a) <= T::of(1e-14) * b {
            break;
        }
        let v = d2(mid);
        if v == T::zero() {
            return Ok(mid);
        }
        if (v > T::zero()) == positive_left {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((a + b) * T::of(0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SharingKind {
    /// A single level at the budget; sharing does not help.
    None,
    /// On-off sharing at the inflection point.
    OnOffSuboptimal,
    /// On-off sharing at the tangent point.
    TangentOptimal,
}

impl fmt::Display for SharingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SharingKind::None => "none",
            SharingKind::OnOffSuboptimal => "on_off_suboptimal",
            SharingKind::TangentOptimal => "tangent_optimal",
        })
    }
}

/// Fraction of time spent at a power (noise power for the jammer, SNR for
/// the transmitter).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level<T> {
    pub fraction: T,
    pub power: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharingStrategy<T> {
    /// One or two levels.
    pub levels: Vec<Level<T>>,
    /// Time-averaged objective.
    pub achieved: T,
    /// Threshold the on level sits at, if any was found.
    pub threshold: Option<T>,
    pub kind: SharingKind,
}

impl<T: Scalar> SharingStrategy<T> {
    pub fn budget(&self) -> T {
        self.levels.iter().map(|l| l.fraction * l.power).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("fraction,power\n");
        for l in &self.levels {
            s.push_str(&format!(
                "{:.16e},{:.16e}\n",
                l.fraction.as_f64(),
                l.power.as_f64()
            ));
        }
        s
    }

    pub fn summary(&self) -> String {
        let th = self
            .threshold
            .map_or("none".to_string(), |t| format!("{:.16e}", t.as_f64()));
        format!(
            "strategy kind={} levels={} threshold={th} achieved={:.16e}\n",
            self.kind,
            self.levels.len(),
            self.achieved.as_f64()
        )
    }
}

fn single<T: Scalar>(value: T, budget: T, threshold: Option<T>) -> SharingStrategy<T> {
    SharingStrategy {
        levels: vec![Level {
            fraction: T::one(),
            power: budget,
        }],
        achieved: value,
        threshold,
        kind: SharingKind::None,
    }
}

/// Spend `budget/threshold` of the time at `threshold` and the rest off,
/// when the budget is below the threshold.
fn on_off<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    anchor: T,
    threshold: T,
    budget: T,
    kind: SharingKind,
) -> SharingStrategy<T> {
    if budget >= threshold {
        return single(f(budget), budget, Some(threshold));
    }
    let a = budget / threshold;
    SharingStrategy {
        levels: vec![
            Level {
                fraction: a,
                power: threshold,
            },
            Level {
                fraction: T::one() - a,
                power: T::zero(),
            },
        ],
        achieved: anchor + (f(threshold) - anchor) * a,
        threshold: Some(threshold),
        kind,
    }
}

fn check_budget<T: Scalar>(budget: T) -> Result<()> {
    if budget > T::zero() && budget.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            name: "budget",
            value: budget.as_f64(),
        })
    }
}

/// On-off jamming at the inflection `P_0`: always on when `P_N ≥ P_0`,
/// otherwise on at `P_0` for a fraction `P_N/P_0`.
pub fn jam_suboptimal<T: Scalar, F: Fn(T) -> T>(
    pe: F,
    p0: T,
    budget: T,
) -> Result<SharingStrategy<T>> {
    check_budget(budget)?;
    check_budget(p0)?;
    Ok(on_off(
        &pe,
        T::zero(),
        p0,
        budget,
        SharingKind::OnOffSuboptimal,
    ))
}

/// Tangent point of the line from `(0, anchor)` to the concave part of `f`,
/// searched from the inflection `p0` upward.
fn tangent_point<T: Scalar, F: Fn(T) -> T, D: Fn(T) -> T>(
    f: &F,
    d1: &D,
    anchor: T,
    p0: T,
) -> Result<T> {
    let g = |p: T| p * d1(p) - (f(p) - anchor);
    let g0 = g(p0);
    let scale = (f(p0) - anchor).abs().max(T::epsilon());
    if g0 <= T::of(1e-12) * scale {
        return Ok(p0);
    }
    let (mut lo, mut hi) = (p0, p0 * T::of(2.0));
    let mut g_hi = g(hi);
    let mut steps = 0;
    while g_hi > T::zero() {
        lo = hi;
        hi = hi * T::of(2.0);
        g_hi = g(hi);
        steps += 1;
        if steps > 200 || !g_hi.is_finite() {
            return Err(Error::BracketExpansion(format!(
                "tangent condition p*f'(p) - (f(p) - f(0)) stays positive up to p = {hi} (last value {g_hi}); f does not flatten"
            )));
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if mid <= lo || mid >= hi || hi - lo <= T::of(1e-15) * hi {
            break;
        }
        if g(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::of(0.5))
}

/// Optimal two-level jamming: on-off at the tangent point `P*` where the line
/// from the origin touches `pe`. `p0` is the inflection point; `None` means
/// `pe` is concave on the range of interest and sharing cannot help.
pub fn jam_optimal<T: Scalar, F: Fn(T) -> T, D: Fn(T) -> T>(
    pe: F,
    pe_d1: D,
    p0: Option<T>,
    budget: T,
) -> Result<SharingStrategy<T>> {
    check_budget(budget)?;
    let Some(p0) = p0 else {
        return Ok(single(pe(budget), budget, None));
    };
    check_budget(p0)?;
    let star = tangent_point(&pe, &pe_d1, T::zero(), p0)?;
    Ok(on_off(
        &pe,
        T::zero(),
        star,
        budget,
        SharingKind::TangentOptimal,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport<T> {
    pub grid: Vec<T>,
    pub values: Vec<T>,
    /// `value − chord` at each interior grid point.
    pub margins: Vec<T>,
    /// Interior points where the midpoint test fails.
    pub violations: Vec<T>,
    pub passed: bool,
}

/// Midpoint concavity over adjacent grid triples at tolerance 1e-7.
pub fn envelope_concavity_check<T: Scalar, F: Fn(T) -> T>(
    f: F,
    grid: &[T],
) -> Result<ConcavityReport<T>> {
    if grid.len() < 3 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid);
    }
    let values: Vec<T> = grid.iter().map(|&x| f(x)).collect();
    let mut margins = Vec::with_capacity(grid.len() - 2);
    let mut violations = Vec::new();
    for j in 1..grid.len() - 1 {
        let w = (grid[j] - grid[j - 1]) / (grid[j + 1] - grid[j - 1]);
        let chord = values[j - 1] + (values[j + 1] - values[j - 1]) * w;
        let m = values[j] - chord;
        if m < -T::of(1e-7) {
            violations.push(grid[j]);
        }
        margins.push(m);
    }
    let passed = violations.is_empty();
    Ok(ConcavityReport {
        grid: grid.to_vec(),
        values,
        margins,
        violations,
        passed,
    })
}

/// Time sharing for a transmitter maximizing `pc` at average SNR `budget`.
/// The inflection of `pc` is located on `scan` from a numerical second
/// derivative of `pc_d1`; if `pc` is concave there the answer is always on.
/// The off state earns `pc(0)`.
pub fn transmitter_sharing<T: Scalar, F: Fn(T) -> T, D: Fn(T) -> T>(
    pc: F,
    pc_d1: D,
    budget: T,
    scan: (T, T),
) -> Result<SharingStrategy<T>> {
    check_budget(budget)?;
    let d2 = |g: T| {
        let h = g * T::of(1e-5);
        (pc_d1(g + h) - pc_d1(g - h)) / (h + h)
    };
    let p0 = match find_inflection(d2, scan.0, scan.1) {
        Ok(p) => p,
        Err(Error::NoSignChange { lo, hi }) => {
            if d2(scan.0) <= T::zero() {
                return Ok(single(pc(budget), budget, None));
            }
            return Err(Error::NoSignChange { lo, hi });
        }
        Err(e) => return Err(e),
    };
    let anchor = pc(T::zero());
    let star = tangent_point(&pc, &pc_d1, anchor, p0)?;
    Ok(on_off(
        &pc,
        anchor,
        star,
        budget,
        SharingKind::TangentOptimal,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::ClosedForm;
    use proptest::prelude::*;

    fn bpsk() -> ClosedForm<f64> {
        ClosedForm::Bpsk
    }

    #[test]
    fn bler_examples() {
        let b = bpsk();
        assert!((blast_bler(|g| b.pe(g), &[1.0], &[3.0]).unwrap() - b.pe(3.0)).abs() < 1e-16);
        assert_eq!(blast_bler(|_| 0.0, &[1.0, 1.0], &[3.0, 1.0]).unwrap(), 0.0);
        let v = blast_bler(|g| b.pe(g), &[1.0, 1.0], &[4.0, 4.0]).unwrap();
        let q2 = 0.022_750_131_948_179_21;
        assert!((v - (1.0 - (1.0 - q2) * (1.0 - q2))).abs() < 1e-15);
        assert!((v - 0.044_98).abs() < 1e-5);
        assert!(matches!(
            blast_bler(|_| 1.5, &[1.0], &[1.0]),
            Err(Error::ProbabilityOutOfRange(_))
        ));
        assert!(blast_bler(|_| 0.1, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn allocation_matches_grid_search() {
        let b = bpsk();
        let snrs = [10.0, 1.0];
        let r = blast_allocate(|g| b.pe(g), |g| b.pe_d1(g), &snrs).unwrap();
        let (mut best_a, mut best_v) = (0.0, f64::INFINITY);
        for k in 0..=20_000 {
            let a = k as f64 * 1e-4;
            let v = blast_bler(|g| b.pe(g), &[a, 2.0 - a], &snrs).unwrap();
            if v < best_v {
                best_v = v;
                best_a = a;
            }
        }
        assert!(
            (r.fractions[0] - best_a).abs() < 1e-3,
            "{:?} vs {best_a}",
            r.fractions
        );
        assert!((r.objective - best_v).abs() < 1e-8 && r.objective <= best_v + 1e-15);
        assert!(r.kkt_residual < 1e-6, "{}", r.kkt_residual);
        assert!(((r.fractions[0] + r.fractions[1]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn allocation_trivial_cases() {
        let b = bpsk();
        let r = blast_allocate(|g| b.pe(g), |g| b.pe_d1(g), &[3.0]).unwrap();
        assert!((r.fractions[0] - 1.0).abs() < 1e-15);
        let r = blast_allocate(|g| b.pe(g), |g| b.pe_d1(g), &[5.0; 4]).unwrap();
        assert!(
            r.fractions.iter().all(|a| (a - 1.0).abs() < 1e-9),
            "{:?}",
            r.fractions
        );
        assert!(blast_allocate(|g| b.pe(g), |g| b.pe_d1(g), &[]).is_err());
    }

    #[test]
    fn allocation_rejects_non_convex_pe() {
        // log-convex success probability: the marginal utility increases
        let pe = |g: f64| 1.0 - 0.1 * (0.01 * g * g).exp();
        let d1 = |g: f64| -0.002 * g * (0.01 * g * g).exp();
        let r = blast_allocate(pe, d1, &[1.0, 1.0]);
        assert!(matches!(r, Err(Error::NonConvex(_))), "{r:?}");
    }

    #[test]
    fn allocation_clamps_useless_streams() {
        // pe' finite at 0 so a weak stream can be switched off
        let pe = |g: f64| 0.5 * (-g).exp();
        let d1 = |g: f64| -0.5 * (-g).exp();
        let r = blast_allocate(pe, d1, &[2.0, 0.01]).unwrap();
        assert_eq!(r.fractions[1], 0.0);
        assert!((r.fractions[0] - 2.0).abs() < 1e-12);
        assert!(r.kkt_residual < 1e-6);
    }

    #[test]
    fn inflection_examples() {
        let b = bpsk();
        let p0 = find_inflection(|p| b.pe_noise_d2(p), 0.01, 10.0).unwrap();
        assert!((p0 - 1.0 / 3.0).abs() < 1e-10);
        let s = ClosedForm::<f64>::Sphere {
            dim: 3,
            radius: 1.5,
        };
        let p0 = find_inflection(|p| s.pe_noise_d2(p), 0.01, 10.0).unwrap();
        assert!((p0 - 1.5 * 1.5 / 5.0).abs() < 1e-10);
        assert!(matches!(
            find_inflection(|p: f64| -p, 0.1, 1.0),
            Err(Error::NoSignChange { .. })
        ));
        assert!(matches!(
            find_inflection(|p: f64| (p * 20.0).sin(), 0.1, 1.0),
            Err(Error::MultipleInflections { .. })
        ));
    }

    #[test]
    fn suboptimal_jamming() {
        let b = bpsk();
        let pe = |p| b.pe_noise(p);
        let p0 = 1.0 / 3.0;
        let s = jam_suboptimal(pe, p0, 2.0 * p0).unwrap();
        assert_eq!(s.levels.len(), 1);
        assert_eq!(s.achieved, pe(2.0 * p0));
        let s = jam_suboptimal(pe, p0, p0 / 2.0).unwrap();
        assert_eq!(s.kind, SharingKind::OnOffSuboptimal);
        assert_eq!(
            s.levels,
            vec![
                Level {
                    fraction: 0.5,
                    power: p0
                },
                Level {
                    fraction: 0.5,
                    power: 0.0
                }
            ]
        );
        assert!((s.achieved - pe(p0) / 2.0).abs() < 1e-16);
        assert!(s.achieved >= pe(p0 / 2.0));
        assert!((s.budget() - p0 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn tangent_matches_grid_oracle() {
        let b = bpsk();
        let pe = |p| b.pe_noise(p);
        let budget = 0.05;
        let s = jam_optimal(pe, |p| b.pe_noise_d1(p), Some(1.0 / 3.0), budget).unwrap();
        assert_eq!(s.kind, SharingKind::TangentOptimal);
        let star = s.threshold.unwrap();
        // best single on-level: maximize pe(P)·budget/P over P ≥ budget
        let (mut best_p, mut best) = (0.0, 0.0);
        for k in 0..=2_000_000 {
            let p = budget + k as f64 * 1e-6;
            let v = pe(p) * budget / p;
            if v > best {
                best = v;
                best_p = p;
            }
        }
        assert!((star - best_p).abs() < 1e-4, "{star} vs {best_p}");
        assert!((s.achieved - best).abs() < 1e-12);
        assert!((star - 0.7).abs() < 0.05);
    }

    #[test]
    fn degenerate_and_concave_cases() {
        let b = bpsk();
        let (pe, d1) = (|p| b.pe_noise(p), |p| b.pe_noise_d1(p));
        let star = jam_optimal(pe, d1, Some(1.0 / 3.0), 0.01)
            .unwrap()
            .threshold
            .unwrap();
        // with the tangent point given as the threshold the two strategies coincide
        let opt = jam_optimal(pe, d1, Some(star), 0.01).unwrap();
        let sub = jam_suboptimal(pe, star, 0.01).unwrap();
        assert_eq!(opt.threshold, Some(star));
        assert!((opt.achieved - sub.achieved).abs() < 1e-15);
        let none = jam_optimal(pe, d1, None, 0.2).unwrap();
        assert_eq!(none.kind, SharingKind::None);
        assert_eq!(none.achieved, pe(0.2));
        assert!(matches!(
            jam_optimal(|p: f64| p * p, |p: f64| 2.0 * p, Some(0.1), 0.05),
            Err(Error::BracketExpansion(_))
        ));
    }

    #[test]
    fn envelope_concavity() {
        let b = bpsk();
        let (pe, d1) = (|p| b.pe_noise(p), |p| b.pe_noise_d1(p));
        let grid: Vec<f64> = (1..=120).map(|k| k as f64 * 0.01).collect();
        let opt = envelope_concavity_check(
            |p| jam_optimal(pe, d1, Some(1.0 / 3.0), p).unwrap().achieved,
            &grid,
        )
        .unwrap();
        assert!(opt.passed);
        let sub = envelope_concavity_check(
            |p| jam_suboptimal(pe, 1.0 / 3.0, p).unwrap().achieved,
            &grid,
        )
        .unwrap();
        assert!(!sub.passed);
        assert!(
            sub.violations.iter().all(|&p| (p - 1.0 / 3.0).abs() < 0.02),
            "{:?}",
            sub.violations
        );
        let lin = envelope_concavity_check(|p: f64| 0.1 * p, &grid).unwrap();
        assert!(lin.passed);
    }

    #[test]
    fn envelope_is_a_fixed_point() {
        let b = bpsk();
        let (pe, d1) = (|p| b.pe_noise(p), |p| b.pe_noise_d1(p));
        let env = |p: f64| jam_optimal(pe, d1, Some(1.0 / 3.0), p).unwrap().achieved;
        let env_d1 = |p: f64| (env(p * (1.0 + 1e-6)) - env(p * (1.0 - 1e-6))) / (2e-6 * p);
        for budget in [0.05, 0.3, 0.9, 1.5] {
            let again = jam_optimal(env, env_d1, Some(0.2), budget).unwrap();
            assert!((again.achieved - env(budget)).abs() < 1e-9, "{budget}");
        }
    }

    #[test]
    fn transmitter_sharing_cases() {
        let q = ClosedForm::<f64>::Qpsk;
        let s =
            transmitter_sharing(|g| 1.0 - q.pe(g), |g| -q.pe_d1(g), 2.0, (0.01, 100.0)).unwrap();
        assert_eq!(s.kind, SharingKind::None);
        assert_eq!(s.levels.len(), 1);

        let sph = ClosedForm::<f64>::Sphere {
            dim: 3,
            radius: 1.0,
        };
        let (pc, pc_d1) = (|g| 1.0 - sph.pe(g), |g| -sph.pe_d1(g));
        let budget = 0.5;
        let s = transmitter_sharing(pc, pc_d1, budget, (0.01, 100.0)).unwrap();
        assert_eq!(s.kind, SharingKind::TangentOptimal);
        assert!(s.achieved > pc(budget));
        assert!((s.budget() - budget).abs() < 1e-12);
        // above the tangent point there is nothing to gain
        let star = s.threshold.unwrap();
        let s = transmitter_sharing(pc, pc_d1, 1.5 * star, (0.01, 100.0)).unwrap();
        assert_eq!(s.levels.len(), 1);
    }

    proptest! {
        #[test]
        fn dominance_chain(budget in 0.01f64..1.5) {
            let b = ClosedForm::<f64>::Bpsk;
            let (pe, d1) = (|p| b.pe_noise(p), |p| b.pe_noise_d1(p));
            let opt = jam_optimal(pe, d1, Some(1.0 / 3.0), budget).unwrap();
            let sub = jam_suboptimal(pe, 1.0 / 3.0, budget).unwrap();
            prop_assert!(opt.achieved >= sub.achieved - 1e-9);
            prop_assert!(sub.achieved >= pe(budget) - 1e-9);
            prop_assert!(opt.levels.len() <= 2 && sub.levels.len() <= 2);
            prop_assert!((opt.budget() - budget).abs() <= 1e-9);
            let total: f64 = opt.levels.iter().map(|l| l.fraction).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12 && opt.levels.iter().all(|l| l.fraction > 0.0));
        }

        #[test]
        fn allocation_is_locally_optimal(g1 in 0.5f64..30.0, g2 in 0.5f64..30.0, g3 in 0.5f64..30.0) {
            let b = ClosedForm::<f64>::Bpsk;
            let snrs = [g1, g2, g3];
            let r = blast_allocate(|g| b.pe(g), |g| b.pe_d1(g), &snrs).unwrap();
            let uniform = blast_bler(|g| b.pe(g), &[1.0; 3], &snrs).unwrap();
            prop_assert!(r.objective <= uniform + 1e-12);
            for i in 0..3 {
                for j in 0..3 {
                    if i == j { continue; }
                    let mut a = r.fractions.clone();
                    let d = 1e-3f64.min(a[j]);
                    a[i] += d;
                    a[j] -= d;
                    let v = blast_bler(|g| b.pe(g), &a, &snrs).unwrap();
                    prop_assert!(v >= r.objective - 1e-9);
                }
            }
        }
    }
}
