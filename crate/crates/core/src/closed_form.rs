//! Smooth closed-form SER curves used as noise-free inputs to the
//! optimizers and as oracles: BPSK `Q(√γ)`, QPSK `2q − q²` with
//! `q = Q(√(γ/2))`, and the sphere of radius `R` in `n` dimensions.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::ser::snr_to_noise_derivatives;
use crate::special::{gamma_q, normal_pdf, q_function};
use crate::sphere::snr_profile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm<T> {
    Bpsk,
    Qpsk,
    Sphere { dim: usize, radius: T },
}

/// `[Q(s), d/dγ, d²/dγ²]` for `s = b√γ`.
fn scaled_tail<T: Scalar>(b: T, snr: T) -> [T; 3] {
    let s = b * snr.sqrt();
    let phi = normal_pdf(s);
    [
        q_function(s),
        -phi * s / (T::of(2.0) * snr),
        phi * s * (T::one() + s * s) / (T::of(4.0) * snr * snr),
    ]
}

impl<T: Scalar> ClosedForm<T> {
    /// `[P_e, dP_e/dγ, d²P_e/dγ²]` at SNR `γ`.
    pub fn snr_derivatives(&self, snr: T) -> [T; 3] {
        match *self {
            ClosedForm::Bpsk => scaled_tail(T::one(), snr),
            ClosedForm::Qpsk => {
                let [q, q1, q2] = scaled_tail(T::FRAC_1_SQRT_2(), snr);
                let two = T::of(2.0);
                [
                    two * q - q * q,
                    two * (T::one() - q) * q1,
                    two * (T::one() - q) * q2 - two * q1 * q1,
                ]
            }
            ClosedForm::Sphere { dim, radius } => {
                let u = snr * radius * radius * T::of(0.5);
                let pe = gamma_q(T::of_usize(dim) * T::of(0.5), u);
                let d1 = snr_profile(dim, u, 1).expect("order 1") / snr;
                let d2 = snr_profile(dim, u, 2).expect("order 2") / (snr * snr);
                [pe, d1, d2]
            }
        }
    }

    /// `[P_e, dP_e/dP_N, d²P_e/dP_N²]` at noise power `P_N`.
    pub fn noise_derivatives(&self, noise_power: T) -> [T; 3] {
        let snr = noise_power.recip();
        snr_to_noise_derivatives(self.snr_derivatives(snr), snr)
    }

    pub fn pe(&self, snr: T) -> T {
        self.snr_derivatives(snr)[0]
    }

    pub fn pe_d1(&self, snr: T) -> T {
        self.snr_derivatives(snr)[1]
    }

    pub fn pe_d2(&self, snr: T) -> T {
        self.snr_derivatives(snr)[2]
    }

    pub fn pe_noise(&self, noise_power: T) -> T {
        self.noise_derivatives(noise_power)[0]
    }

    pub fn pe_noise_d1(&self, noise_power: T) -> T {
        self.noise_derivatives(noise_power)[1]
    }

    pub fn pe_noise_d2(&self, noise_power: T) -> T {
        self.noise_derivatives(noise_power)[2]
    }

    pub fn dim(&self) -> usize {
        match *self {
            ClosedForm::Bpsk => 1,
            ClosedForm::Qpsk => 2,
            ClosedForm::Sphere { dim, .. } => dim,
        }
    }
}

impl<T: Scalar> fmt::Display for ClosedForm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedForm::Bpsk => f.write_str("bpsk-closed-form"),
            ClosedForm::Qpsk => f.write_str("qpsk-closed-form"),
            ClosedForm::Sphere { dim, radius } => write!(f, "sphere:{dim}:{radius}"),
        }
    }
}

impl<T: Scalar> FromStr for ClosedForm<T> {
    type Err = Error;

    /// `bpsk-closed-form`, `qpsk-closed-form` or `sphere:n:R`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "bpsk-closed-form" | "bpsk" => return Ok(ClosedForm::Bpsk),
            "qpsk-closed-form" | "qpsk" => return Ok(ClosedForm::Qpsk),
            _ => {}
        }
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 && parts[0] == "sphere" {
            let dim: usize = parts[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad sphere dimension in '{s}'")))?;
            let radius: f64 = parts[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad sphere radius in '{s}'")))?;
            if dim == 0 || !(radius > 0.0) {
                return Err(Error::Parse(format!(
                    "sphere needs n >= 1 and R > 0, got '{s}'"
                )));
            }
            return Ok(ClosedForm::Sphere {
                dim,
                radius: T::of(radius),
            });
        }
        Err(Error::Parse(format!("unknown closed form '{s}'")))
    }
}
