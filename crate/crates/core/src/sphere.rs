//! Closed-form SER and derivatives for a spherical decision region of radius
//! `R` centred on the transmitted point. `P_c = P(n/2, γR²/2)`, a chi-square
//! probability; this is the region attaining every universal derivative
//! bound.

use crate::error::{Error, Result};
use crate::scalar::{norm_sq, Scalar};
use crate::ser::{check_order, positive, Axis, Region};
use crate::special::{gamma_p, gamma_q, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereRegion<T> {
    dim: usize,
    radius: T,
}

impl<T: Scalar> SphereRegion<T> {
    pub fn new(dim: usize, radius: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "sphere dimension must be at least 1".into(),
            ));
        }
        positive("radius", radius)?;
        Ok(Self { dim, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> T {
        self.radius
    }
}

impl<T: Scalar> Region<T> for SphereRegion<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, x: &[T], _scratch: &mut [T]) -> bool {
        norm_sq(x) <= self.radius * self.radius
    }
}

fn half_dim<T: Scalar>(dim: usize) -> T {
    T::of_usize(dim) * T::of(0.5)
}

/// `u^{n/2} e^{−u} / Γ(n/2)`, evaluated in the log domain.
fn kernel<T: Scalar>(dim: usize, u: T) -> T {
    if u <= T::zero() {
        return T::zero();
    }
    let a = half_dim::<T>(dim);
    (a * u.ln() - u - ln_gamma(a)).exp()
}

/// `γ^k · d^k P_e/dγ^k` of a sphere as a function of `u = γR²/2`.
///
/// Order 1: `−u^{n/2}e^{−u}/Γ(n/2)`; order 2: `u^{n/2}e^{−u}(u + 1 − n/2)/Γ(n/2)`.
pub fn snr_profile<T: Scalar>(dim: usize, u: T, order: u8) -> Result<T> {
    check_order(order)?;
    let k = kernel(dim, u);
    Ok(match order {
        1 => -k,
        _ => k * (u + T::one() - half_dim::<T>(dim)),
    })
}

/// `P_N^k · d^k P_e/dP_N^k` of a sphere as a function of `v = R²/(2P_N)`.
///
/// Order 1: `v^{n/2}e^{−v}/Γ(n/2)`; order 2: `v^{n/2}e^{−v}(v − (n+2)/2)/Γ(n/2)`.
pub fn noise_profile<T: Scalar>(dim: usize, v: T, order: u8) -> Result<T> {
    check_order(order)?;
    let k = kernel(dim, v);
    Ok(match order {
        1 => k,
        _ => k * (v - half_dim::<T>(dim + 2)),
    })
}

/// Probability of correct decision, `P(n/2, γR²/2)`.
pub fn sphere_pc<T: Scalar>(s: &SphereRegion<T>, snr: T) -> Result<T> {
    positive("snr", snr)?;
    Ok(gamma_p(
        half_dim(s.dim),
        snr * s.radius * s.radius * T::of(0.5),
    ))
}

/// Error probability `Q(n/2, γR²/2)` without cancellation.
pub fn sphere_pe<T: Scalar>(s: &SphereRegion<T>, snr: T) -> Result<T> {
    positive("snr", snr)?;
    Ok(gamma_q(
        half_dim(s.dim),
        snr * s.radius * s.radius * T::of(0.5),
    ))
}

/// `d^k P_c/dγ^k`.
pub fn sphere_pc_d<T: Scalar>(s: &SphereRegion<T>, snr: T, order: u8) -> Result<T> {
    positive("snr", snr)?;
    let u = snr * s.radius * s.radius * T::of(0.5);
    Ok(-snr_profile(s.dim, u, order)? / snr.powi(order as i32))
}

/// `P_e` as a function of the noise power.
pub fn sphere_pe_noise<T: Scalar>(s: &SphereRegion<T>, noise_power: T) -> Result<T> {
    positive("noise power", noise_power)?;
    Ok(gamma_q(
        half_dim(s.dim),
        s.radius * s.radius / (T::of(2.0) * noise_power),
    ))
}

/// `d^k P_e/dP_N^k`.
pub fn sphere_pe_noise_d<T: Scalar>(s: &SphereRegion<T>, noise_power: T, order: u8) -> Result<T> {
    positive("noise power", noise_power)?;
    let v = s.radius * s.radius / (T::of(2.0) * noise_power);
    Ok(noise_profile(s.dim, v, order)? / noise_power.powi(order as i32))
}

/// Radii of the spheres attaining the lower/upper second-derivative bounds
/// and the first-derivative bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalRadii<T> {
    pub lower: T,
    pub upper: T,
    pub first_order: T,
}

/// SNR axis: `R_l = √((n−√(2n))₊/γ)`, `R_u = √((n+√(2n))/γ)`, `√(n/γ)`.
/// Noise axis: `R_l = √(2b₂P_N)`, `R_u = √(2b₁P_N)`, `√(nP_N)` with
/// `b₁,₂ = ½(n+2 ± √(2(n+2)))`.
pub fn extremal_radii<T: Scalar>(dim: usize, axis: Axis, value: T) -> Result<ExtremalRadii<T>> {
    positive("axis value", value)?;
    let n = T::of_usize(dim);
    let two = T::of(2.0);
    Ok(match axis {
        Axis::Snr => {
            let r = (two * n).sqrt();
            ExtremalRadii {
                lower: ((n - r).max(T::zero()) / value).sqrt(),
                upper: ((n + r) / value).sqrt(),
                first_order: (n / value).sqrt(),
            }
        }
        Axis::NoisePower => {
            let m = n + two;
            let r = (two * m).sqrt();
            ExtremalRadii {
                lower: ((m - r) * value).sqrt(),
                upper: ((m + r) * value).sqrt(),
                first_order: (n * value).sqrt(),
            }
        }
    })
}
