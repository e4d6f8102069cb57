//! Special functions: log-gamma, the regularized incomplete gamma pair, the
//! Gaussian tail (Q-function) and a scaled modified Bessel function.
//!
//! Everything funnels through [`gamma_p`] / [`gamma_q`]; the Gaussian tail is
//! the half-integer case `Q(x) = ½·Q(½, x²/2)`. Out-of-domain arguments yield
//! NaN rather than an error so the kernels stay usable inside integrands.

#![allow(clippy::excessive_precision)]

use crate::scalar::Scalar;

const MAX_ITER: usize = 500;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(n/2) for a positive integer `n`, by exact recurrence from Γ(1) and Γ(½).
pub fn gamma_half<T: Scalar>(n: u32) -> T {
    assert!(n >= 1, "gamma_half needs n >= 1");
    let half = T::of(0.5);
    let (mut value, mut arg) = if n.is_multiple_of(2) {
        (T::one(), T::one())
    } else {
        (T::PI().sqrt(), half)
    };
    let target = T::of(n as f64) * half;
    while arg < target {
        value = value * arg;
        arg = arg + T::one();
    }
    value
}

/// ln Γ(x) for x > 0 (reflection handles x < ½).
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    if x.is_nan() || x <= T::zero() && x == x.floor() {
        return T::nan();
    }
    // Half-integers up to 100 are exact through the recurrence.
    let twice = x + x;
    if x > T::zero() && twice == twice.floor() && twice <= T::of(200.0) {
        if let Some(n) = twice.to_u32() {
            return gamma_half::<T>(n).ln();
        }
    }
    if x < T::of(0.5) {
        let pi = T::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::of(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::of(c) / (x + T::of_usize(i));
    }
    let t = x + T::of(LANCZOS_G + 0.5);
    T::of(0.5) * (T::TAU()).ln() + (x + T::of(0.5)) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p<T: Scalar>(a: T, x: T) -> T {
    gamma_pair(a, x).0
}

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x), computed without
/// cancellation in the tail.
pub fn gamma_q<T: Scalar>(a: T, x: T) -> T {
    gamma_pair(a, x).1
}

fn gamma_pair<T: Scalar>(a: T, x: T) -> (T, T) {
    let (zero, one) = (T::zero(), T::one());
    if !(a > zero) || !(x >= zero) {
        return (T::nan(), T::nan());
    }
    if x == zero {
        return (zero, one);
    }
    if x.is_infinite() {
        return (one, zero);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    let prefactor = log_prefactor.exp();
    if x < a + one {
        let p = prefactor * series(a, x);
        (p, one - p)
    } else {
        let q = prefactor * continued_fraction(a, x);
        (one - q, q)
    }
}

/// Σ x^k / (a(a+1)…(a+k)).
fn series<T: Scalar>(a: T, x: T) -> T {
    let eps = T::epsilon();
    let mut ap = a;
    let mut term = T::one() / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap = ap + T::one();
        term = term * x / ap;
        sum = sum + term;
        if term.abs() < sum.abs() * eps {
            break;
        }
    }
    sum
}

/// Modified Lentz evaluation of the Legendre continued fraction for Q(a, x).
fn continued_fraction<T: Scalar>(a: T, x: T) -> T {
    let one = T::one();
    let eps = T::epsilon();
    let tiny = T::min_positive_value() / eps;
    let mut b = x + one - a;
    let mut c = one / tiny;
    let mut d = one / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = T::of_usize(i);
        let an = -fi * (fi - a);
        b = b + T::of(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() < eps {
            break;
        }
    }
    h
}

/// Gaussian tail Q(x) = Pr[Z > x] for a standard normal Z.
pub fn q_function<T: Scalar>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let half = T::of(0.5);
    if x >= T::zero() {
        half * gamma_q(half, x * x * half)
    } else {
        T::one() - q_function(-x)
    }
}

/// Standard normal CDF Φ(x) = Q(−x).
pub fn normal_cdf<T: Scalar>(x: T) -> T {
    q_function(-x)
}

/// Standard normal density φ(x).
pub fn normal_pdf<T: Scalar>(x: T) -> T {
    (-(x * x) * T::of(0.5)).exp() / T::TAU().sqrt()
}

/// Complementary error function, erfc(x) = 2·Q(x·√2).
pub fn erfc<T: Scalar>(x: T) -> T {
    T::of(2.0) * q_function(x * T::SQRT_2())
}

/// Exponentially scaled modified Bessel function e^{−z}·I₀(z), z ≥ 0.
///
/// Power series summed term by term in the log domain, so large arguments
/// neither overflow nor lose relative accuracy.
pub fn bessel_i0_scaled<T: Scalar>(z: T) -> T {
    if !(z >= T::zero()) {
        return T::nan();
    }
    if z == T::zero() {
        return T::one();
    }
    let eps = T::epsilon();
    let log_quarter_sq = T::of(2.0) * (z * T::of(0.5)).ln();
    let mut log_term = -z;
    let mut sum = log_term.exp();
    let mut k = 0usize;
    loop {
        k += 1;
        let kf = T::of_usize(k);
        log_term = log_term + log_quarter_sq - T::of(2.0) * kf.ln();
        let term = log_term.exp();
        sum = sum + term;
        // Terms grow until k ≈ z/2; only stop on the decreasing side.
        if kf > z * T::of(0.5) && term <= sum * eps {
            break;
        }
        if k > 10_000_000 {
            break;
        }
    }
    sum
}
