//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals and on the
//! half line.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SEGMENTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-12, 1e-12)
    }
}

/// Integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
}

fn kronrod<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::of(0.5);
    let center = (a + b) * half;
    let radius = (b - a) * half;
    let fc = f(center);
    let mut kron = fc * T::of(WGK[7]);
    let mut gauss = fc * T::of(WG[3]);
    for j in 0..7 {
        let dx = radius * T::of(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kron = kron + pair * T::of(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::of(WG[j / 2]);
        }
    }
    (kron * radius, ((kron - gauss) * radius).abs())
}

/// ∫_a^b f by globally adaptive bisection of the worst segment.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    tol: Tolerance,
) -> Result<Integral<T>> {
    if a == b {
        return Ok(Integral {
            value: T::zero(),
            error: T::zero(),
        });
    }
    let mut segments = vec![{
        let (v, e) = kronrod(&f, a, b);
        (a, b, v, e)
    }];
    loop {
        let value: T = segments.iter().map(|s| s.2).sum();
        let error: T = segments.iter().map(|s| s.3).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        let target = T::of(tol.abs).max(T::of(tol.rel) * value.abs());
        if error <= target {
            return Ok(Integral { value, error });
        }
        if segments.len() >= MAX_SEGMENTS {
            // Accept when the residual error is at rounding level.
            if error <= T::epsilon() * T::of(1e3) * value.abs().max(T::one()) {
                return Ok(Integral { value, error });
            }
            return Err(Error::Quadrature(format!(
                "error estimate {} above target {} after {} segments",
                error.as_f64(),
                target.as_f64(),
                segments.len()
            )));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| {
                x.1 .3
                    .partial_cmp(&y.1 .3)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = segments.swap_remove(worst);
        let mid = (lo + hi) * T::of(0.5);
        if mid <= lo || mid >= hi {
            // Segment has collapsed to machine resolution.
            let (v, _) = kronrod(&f, lo, hi);
            segments.push((lo, hi, v, T::zero()));
            continue;
        }
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
}

/// ∫_0^∞ f, split at 1: `t = s²` on [0, 1] absorbs integrable t^{−½}
/// singularities and `t = 1/u` maps the tail onto (0, 1].
pub fn integrate_half_line<T: Scalar, F: Fn(T) -> T>(f: F, tol: Tolerance) -> Result<Integral<T>> {
    let two = T::of(2.0);
    let head = integrate(|s: T| f(s * s) * two * s, T::zero(), T::one(), tol)?;
    let tail = integrate(
        |u: T| {
            if u <= T::zero() {
                return T::zero();
            }
            let v = f(T::one() / u) / (u * u);
            if v.is_finite() {
                v
            } else {
                T::zero()
            }
        },
        T::zero(),
        T::one(),
        tol,
    )?;
    Ok(Integral {
        value: head.value + tail.value,
        error: head.error + tail.error,
    })
}
