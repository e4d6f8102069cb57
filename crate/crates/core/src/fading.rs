//! Fading distributions of the instantaneous SNR and SER averaged over them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quad::{integrate_half_line, Tolerance};
use crate::scalar::Scalar;
use crate::special::{bessel_i0_scaled, ln_gamma};

/// Averaging tolerance; tighter than needed so that second differences of
/// averaged curves are not dominated by quadrature error.
const AVG_TOL: Tolerance = Tolerance::new(1e-13, 1e-11);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingFamily {
    Rayleigh,
    /// Rician with K-factor `k ≥ 0`.
    Rice {
        k: f64,
    },
    /// Nakagami-m with `m ≥ ½`.
    Nakagami {
        m: f64,
    },
    /// Lognormal SNR with the given dB spread, mean held at `γ₀`.
    LogNormal {
        sigma_db: f64,
    },
}

impl FadingFamily {
    fn validate(self) -> Result<Self> {
        let bad = |what: &str| {
            Err(Error::InvalidArgument(format!(
                "invalid fading parameter: {what}"
            )))
        };
        match self {
            FadingFamily::Rice { k } if !(k >= 0.0 && k.is_finite()) => bad("rice K must be >= 0"),
            FadingFamily::Nakagami { m } if !(m >= 0.5 && m.is_finite()) => {
                bad("nakagami m must be >= 0.5")
            }
            FadingFamily::LogNormal { sigma_db } if !(sigma_db > 0.0 && sigma_db.is_finite()) => {
                bad("lognormal sigma_db must be > 0")
            }
            f => Ok(f),
        }
    }
}

impl fmt::Display for FadingFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FadingFamily::Rayleigh => f.write_str("rayleigh"),
            FadingFamily::Rice { k } => write!(f, "rice:{k}"),
            FadingFamily::Nakagami { m } => write!(f, "nakagami:{m}"),
            FadingFamily::LogNormal { sigma_db } => write!(f, "lognormal:{sigma_db}"),
        }
    }
}

impl FromStr for FadingFamily {
    type Err = Error;

    /// `rayleigh`, `rice:K`, `nakagami:m` or `lognormal:sigma_db`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.as_str(), None),
        };
        let param = || -> Result<f64> {
            arg.ok_or_else(|| Error::Parse(format!("fading family '{name}' needs a parameter")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad fading parameter in '{s}'")))
        };
        let family = match name {
            "rayleigh" if arg.is_none() => FadingFamily::Rayleigh,
            "rice" | "rician" => FadingFamily::Rice { k: param()? },
            "nakagami" => FadingFamily::Nakagami { m: param()? },
            "lognormal" => FadingFamily::LogNormal { sigma_db: param()? },
            _ => return Err(Error::Parse(format!("unknown fading family '{s}'"))),
        };
        family.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingModel<T> {
    pub family: FadingFamily,
    pub mean_snr: T,
}

impl<T: Scalar> FadingModel<T> {
    pub fn new(family: FadingFamily, mean_snr: T) -> Result<Self> {
        if !(mean_snr > T::zero()) || !mean_snr.is_finite() {
            return Err(Error::NonPositive {
                name: "mean snr",
                value: mean_snr.as_f64(),
            });
        }
        Ok(Self {
            family: family.validate()?,
            mean_snr,
        })
    }

    pub fn with_mean(&self, mean_snr: T) -> Result<Self> {
        Self::new(self.family, mean_snr)
    }

    /// Density of the instantaneous SNR at `γ ≥ 0` (zero for `γ < 0`).
    pub fn pdf(&self, snr: T) -> T {
        let g0 = self.mean_snr;
        if snr < T::zero() {
            return T::zero();
        }
        let t = snr / g0;
        match self.family {
            FadingFamily::Rayleigh => (-t).exp() / g0,
            FadingFamily::Rice { k } => {
                let k = T::of(k);
                let k1 = T::one() + k;
                let z = T::of(2.0) * (k * k1 * t).sqrt();
                k1 / g0 * (-k - k1 * t + z).exp() * bessel_i0_scaled(z)
            }
            FadingFamily::Nakagami { m } => {
                let m = T::of(m);
                if t == T::zero() {
                    return if m == T::one() {
                        g0.recip()
                    } else if m < T::one() {
                        T::infinity()
                    } else {
                        T::zero()
                    };
                }
                (m * m.ln() + (m - T::one()) * t.ln() - m * t - ln_gamma(m)).exp() / g0
            }
            FadingFamily::LogNormal { sigma_db } => {
                if snr == T::zero() {
                    return T::zero();
                }
                let s = T::of(sigma_db * std::f64::consts::LN_10 / 10.0);
                let mu = g0.ln() - s * s * T::of(0.5);
                let z = (snr.ln() - mu) / s;
                (-z * z * T::of(0.5)).exp() / (snr * s * T::TAU().sqrt())
            }
        }
    }
}

/// True iff `γ₀·pdf(γ; γ₀) = cγ₀·pdf(cγ; cγ₀)` within 1e-9 for
/// `c ∈ {0.5, 2, 5}` over a spread of probe points, i.e. the density has the
/// form `g(γ/γ₀)/γ₀`.
pub fn scale_family_check<T: Scalar>(f: &FadingModel<T>) -> bool {
    let g0 = f.mean_snr;
    let probes = [1e-3, 0.01, 0.1, 0.3, 0.7, 1.0, 1.5, 2.5, 4.0, 8.0];
    [0.5, 2.0, 5.0].iter().all(|&c| {
        let c = T::of(c);
        let Ok(scaled) = f.with_mean(c * g0) else {
            return false;
        };
        probes.iter().all(|&p| {
            let g = T::of(p) * g0;
            let a = g0 * f.pdf(g);
            let b = c * g0 * scaled.pdf(c * g);
            (a - b).abs() <= T::tol(1e-9) * a.abs().max(T::one())
        })
    })
}

/// `∫ pe(γ)·pdf(γ) dγ`, integrated in `t = γ/γ₀`.
pub fn average_ser<T: Scalar, F: Fn(T) -> T>(pe: F, f: &FadingModel<T>) -> Result<T> {
    let g0 = f.mean_snr;
    let r = integrate_half_line(
        |t: T| {
            let d = g0 * f.pdf(g0 * t);
            if d == T::zero() {
                T::zero()
            } else {
                pe(g0 * t) * d
            }
        },
        AVG_TOL,
    )?;
    Ok(r.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenReport<T> {
    pub average: T,
    pub at_mean: T,
    /// `average − at_mean`; nonnegative for convex `pe`.
    pub gap: T,
}

pub fn jensen_check<T: Scalar, F: Fn(T) -> T>(
    pe: F,
    f: &FadingModel<T>,
) -> Result<JensenReport<T>> {
    let at_mean = pe(f.mean_snr);
    let average = average_ser(&pe, f)?;
    Ok(JensenReport {
        average,
        at_mean,
        gap: average - at_mean,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport<T> {
    pub mean_snr: Vec<T>,
    pub average: Vec<T>,
    /// Second divided differences at interior grid points.
    pub second_difference: Vec<T>,
    /// Smallest second difference relative to its tolerance scale.
    pub worst: T,
    pub passed: bool,
}

/// Averages `pe` over `family` at every `γ₀` and checks second divided
/// differences are `≥ −1e-7` relative to the magnitude of their terms.
pub fn avg_convexity_check<T: Scalar, F: Fn(T) -> T>(
    pe: F,
    family: FadingFamily,
    mean_snrs: &[T],
) -> Result<ConvexityReport<T>> {
    if mean_snrs.len() < 3 || mean_snrs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid);
    }
    let average = mean_snrs
        .iter()
        .map(|&g0| average_ser(&pe, &FadingModel::new(family, g0)?))
        .collect::<Result<Vec<T>>>()?;
    let mut second_difference = Vec::with_capacity(mean_snrs.len() - 2);
    let mut worst = T::infinity();
    let mut passed = true;
    for j in 1..mean_snrs.len() - 1 {
        let h0 = mean_snrs[j] - mean_snrs[j - 1];
        let h1 = mean_snrs[j + 1] - mean_snrs[j];
        let (a, b, c) = (
            average[j - 1] / h0,
            average[j] * (h0.recip() + h1.recip()),
            average[j + 1] / h1,
        );
        let d = a - b + c;
        let scale = a.abs() + b.abs() + c.abs();
        let rel = if scale > T::zero() {
            d / scale
        } else {
            T::zero()
        };
        worst = worst.min(rel);
        if rel < -T::of(1e-7) {
            passed = false;
        }
        second_difference.push(d);
    }
    Ok(ConvexityReport {
        mean_snr: mean_snrs.to_vec(),
        average,
        second_difference,
        worst,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::ClosedForm;
    use crate::quad::integrate_half_line;

    fn model(f: FadingFamily, g0: f64) -> FadingModel<f64> {
        FadingModel::new(f, g0).unwrap()
    }

    const FAMILIES: [FadingFamily; 6] = [
        FadingFamily::Rayleigh,
        FadingFamily::Rice { k: 3.0 },
        FadingFamily::Rice { k: 0.0 },
        FadingFamily::Nakagami { m: 0.5 },
        FadingFamily::Nakagami { m: 3.0 },
        FadingFamily::LogNormal { sigma_db: 6.0 },
    ];

    #[test]
    fn densities_normalize_with_the_right_mean() {
        for fam in FAMILIES {
            let f = model(fam, 2.5);
            let mass = integrate_half_line(|g| f.pdf(g), Tolerance::default())
                .unwrap()
                .value;
            let mean = integrate_half_line(|g| g * f.pdf(g), Tolerance::default())
                .unwrap()
                .value;
            assert!((mass - 1.0).abs() < 1e-9, "{fam}: {mass}");
            assert!((mean - 2.5).abs() < 1e-8, "{fam}: {mean}");
        }
    }

    #[test]
    fn pdf_examples() {
        assert_eq!(model(FadingFamily::Rayleigh, 4.0).pdf(0.0), 0.25);
        let r = model(FadingFamily::Rayleigh, 4.0);
        let n = model(FadingFamily::Nakagami { m: 1.0 }, 4.0);
        let rice0 = model(FadingFamily::Rice { k: 0.0 }, 4.0);
        for g in [0.0, 0.1, 1.0, 7.0, 30.0] {
            assert!((r.pdf(g) - n.pdf(g)).abs() < 1e-15);
            assert!((r.pdf(g) - rice0.pdf(g)).abs() < 1e-15);
        }
        assert!(model(FadingFamily::Nakagami { m: 0.5 }, 1.0)
            .pdf(0.0)
            .is_infinite());
    }

    #[test]
    fn parsing_and_validation() {
        assert_eq!(
            "rayleigh".parse::<FadingFamily>().unwrap(),
            FadingFamily::Rayleigh
        );
        assert_eq!(
            "rice:3".parse::<FadingFamily>().unwrap(),
            FadingFamily::Rice { k: 3.0 }
        );
        assert_eq!(
            "nakagami:2.5".parse::<FadingFamily>().unwrap(),
            FadingFamily::Nakagami { m: 2.5 }
        );
        assert!("nakagami:0.3".parse::<FadingFamily>().is_err());
        assert!("lognormal".parse::<FadingFamily>().is_err());
        assert!("weibull:2".parse::<FadingFamily>().is_err());
        assert!(FadingModel::new(FadingFamily::Rayleigh, 0.0).is_err());
    }

    #[test]
    fn scale_family_membership() {
        for fam in [
            FadingFamily::Rayleigh,
            FadingFamily::Rice { k: 3.0 },
            FadingFamily::Nakagami { m: 3.0 },
        ] {
            assert!(scale_family_check(&model(fam, 3.0)), "{fam}");
        }
    }

    #[test]
    fn rayleigh_bpsk_closed_form() {
        // Q(√γ) averages to ½(1 − √(γ₀/(2+γ₀))); Q(√(2γ)) gives the Es/N0 form
        let bpsk = ClosedForm::<f64>::Bpsk;
        for g0 in [1.0, 10.0, 100.0] {
            let f = model(FadingFamily::Rayleigh, g0);
            let avg = average_ser(|g| bpsk.pe(g), &f).unwrap();
            let exact = 0.5 * (1.0 - (g0 / (2.0 + g0)).sqrt());
            assert!((avg - exact).abs() < 1e-10, "g0={g0}: {avg} vs {exact}");
            let avg = average_ser(|g| bpsk.pe(2.0 * g), &f).unwrap();
            let exact = 0.5 * (1.0 - (g0 / (1.0 + g0)).sqrt());
            assert!((avg - exact).abs() < 1e-10, "g0={g0}: {avg} vs {exact}");
        }
    }

    #[test]
    fn constant_and_affine_inputs() {
        for fam in FAMILIES {
            let f = model(fam, 3.0);
            assert!((average_ser(|_| 0.3, &f).unwrap() - 0.3).abs() < 1e-10);
            let j = jensen_check(|g| 0.1 + 0.01 * g, &f).unwrap();
            assert!(j.gap.abs() < 1e-8, "{fam}: {}", j.gap);
        }
    }

    #[test]
    fn high_snr_rayleigh_slope_is_minus_one() {
        let bpsk = ClosedForm::<f64>::Bpsk;
        let a = average_ser(|g| bpsk.pe(g), &model(FadingFamily::Rayleigh, 100.0)).unwrap();
        let b = average_ser(|g| bpsk.pe(g), &model(FadingFamily::Rayleigh, 1000.0)).unwrap();
        let slope = (b.ln() - a.ln()) / 10f64.ln();
        assert!((slope + 1.0).abs() < 0.01, "{slope}");
    }

    #[test]
    fn jensen_gaps() {
        let bpsk = ClosedForm::<f64>::Bpsk;
        let j = jensen_check(|g| bpsk.pe(g), &model(FadingFamily::Rayleigh, 10.0)).unwrap();
        assert!((j.average - 0.5 * (1.0 - (10.0f64 / 12.0).sqrt())).abs() < 1e-10);
        assert!((j.at_mean - 7.827e-4).abs() < 1e-6);
        assert!(j.gap > 0.0);
        let qpsk = ClosedForm::<f64>::Qpsk;
        let j = jensen_check(
            |g| qpsk.pe(g),
            &model(FadingFamily::Nakagami { m: 2.0 }, 5.0),
        )
        .unwrap();
        assert!(j.gap > 0.0);
    }

    #[test]
    fn averaged_curves_are_convex() {
        let grid: Vec<f64> = (0..30)
            .map(|k| 0.1 * 1000f64.powf(k as f64 / 29.0))
            .collect();
        let bpsk = ClosedForm::<f64>::Bpsk;
        let r = avg_convexity_check(|g| bpsk.pe(g), FadingFamily::Rayleigh, &grid).unwrap();
        assert!(r.passed, "worst {}", r.worst);
        let qpsk = ClosedForm::<f64>::Qpsk;
        let r = avg_convexity_check(|g| qpsk.pe(g), FadingFamily::Rice { k: 3.0 }, &grid).unwrap();
        assert!(r.passed, "worst {}", r.worst);
        let r = avg_convexity_check(|_| 0.2, FadingFamily::Rayleigh, &grid).unwrap();
        assert!(r.second_difference.iter().all(|d| d.abs() < 1e-9));
    }
}
