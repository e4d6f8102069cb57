//! Sampled SER and derivative curves over an SNR or noise-power grid.

use std::fmt;
use std::str::FromStr;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::ser::{
    check_order, positive, region_error_integrals, sample_pass, snr_to_noise_derivatives,
    split_budget, Axis, Estimator, Region, VoronoiCell,
};

/// Which probability a curve samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Prior-averaged error probability `P_e`.
    ErrorAvg,
    /// Error probability `P_ei` given point `i`.
    ErrorAt(usize),
    /// Prior-averaged correct-decision probability `P_c`.
    CorrectAvg,
    /// `P_ci`.
    CorrectAt(usize),
}

impl Target {
    fn is_correct(self) -> bool {
        matches!(self, Target::CorrectAvg | Target::CorrectAt(_))
    }

    fn point(self) -> Option<usize> {
        match self {
            Target::ErrorAt(i) | Target::CorrectAt(i) => Some(i),
            _ => None,
        }
    }
}

/// A target probability and a derivative order (0 for the value itself).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quantity {
    pub target: Target,
    pub order: u8,
}

impl Quantity {
    pub fn pe() -> Self {
        Self {
            target: Target::ErrorAvg,
            order: 0,
        }
    }

    pub fn pei(i: usize) -> Self {
        Self {
            target: Target::ErrorAt(i),
            order: 0,
        }
    }

    pub fn pc() -> Self {
        Self {
            target: Target::CorrectAvg,
            order: 0,
        }
    }

    pub fn pci(i: usize) -> Self {
        Self {
            target: Target::CorrectAt(i),
            order: 0,
        }
    }

    /// First derivative of `P_e`.
    pub fn d1() -> Self {
        Self::pe().derivative(1)
    }

    /// Second derivative of `P_e`.
    pub fn d2() -> Self {
        Self::pe().derivative(2)
    }

    pub fn derivative(self, order: u8) -> Self {
        Self { order, ..self }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.order > 0 {
            write!(f, "d{}:", self.order)?;
        }
        match self.target {
            Target::ErrorAvg => f.write_str("pe"),
            Target::ErrorAt(i) => write!(f, "pei:{i}"),
            Target::CorrectAvg => f.write_str("pc"),
            Target::CorrectAt(i) => write!(f, "pci:{i}"),
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    /// `pe`, `pc`, `pei:i`, `pci:i`, optionally prefixed with `d1:` / `d2:`;
    /// bare `d1` and `d2` mean derivatives of `pe`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::Parse(format!("unknown quantity '{s}'"));
        let (order, rest) = match s.split_once(':') {
            Some(("d1", r)) => (1, r),
            Some(("d2", r)) => (2, r),
            _ if s == "d1" => (1, "pe"),
            _ if s == "d2" => (2, "pe"),
            _ => (0, s.as_str()),
        };
        let target = match rest.split_once(':') {
            None if rest == "pe" => Target::ErrorAvg,
            None if rest == "pc" => Target::CorrectAvg,
            Some((kind, idx)) => {
                let i: usize = idx.parse().map_err(|_| bad())?;
                match kind {
                    "pei" => Target::ErrorAt(i),
                    "pci" => Target::CorrectAt(i),
                    _ => return Err(bad()),
                }
            }
            None => return Err(bad()),
        };
        Ok(Quantity { target, order })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    MonteCarlo,
    /// Deterministic integration, `n ≤ 2` only.
    Quadrature,
    /// Closed-form values supplied by the caller.
    Exact,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MonteCarlo => "mc",
            Method::Quadrature => "quadrature",
            Method::Exact => "exact",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" | "monte-carlo" | "montecarlo" => Ok(Method::MonteCarlo),
            "quad" | "quadrature" => Ok(Method::Quadrature),
            "exact" | "closed-form" => Ok(Method::Exact),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }
}

/// Strictly ascending positive abscissas.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidGrid);
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid);
        }
        Ok(Self { points })
    }

    pub fn linear(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 1 {
            return Self::new(vec![start]);
        }
        Self::new(
            (0..count)
                .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
                .collect(),
        )
    }

    pub fn log(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !(start > 0.0) || !(stop > 0.0) {
            return Err(Error::InvalidGrid);
        }
        if count == 1 {
            return Self::new(vec![start]);
        }
        let (a, b) = (start.ln(), stop.ln());
        let mut pts: Vec<f64> = (0..count)
            .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
            .collect();
        // pin the endpoints against exp/ln round trip
        pts[0] = start;
        pts[count - 1] = stop;
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `start:stop:count[:lin|log]`, log spacing by default.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || {
            Error::Parse(format!(
                "grid must be start:stop:count[:lin|log], got '{s}'"
            ))
        };
        if parts.len() < 3 || parts.len() > 4 {
            return Err(bad());
        }
        let start: f64 = parts[0].parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].parse().map_err(|_| bad())?;
        let count: usize = parts[2].parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(bad());
        }
        match parts.get(3).copied().unwrap_or("log") {
            "log" => Self::log(start, stop, count),
            "lin" | "linear" => Self::linear(start, stop, count),
            _ => Err(bad()),
        }
    }
}

/// Estimates of one quantity over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveEstimate<T> {
    pub axis: Axis,
    pub quantity: Quantity,
    pub method: Method,
    pub grid: Vec<T>,
    pub values: Vec<T>,
    pub std_errors: Vec<T>,
    /// Samples per grid point (0 for deterministic methods).
    pub sample_count: usize,
    pub seed: u64,
}

impl<T: Scalar> CurveEstimate<T> {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Deterministic curve from a closed form.
    pub fn from_fn(axis: Axis, quantity: Quantity, grid: &Grid, f: impl Fn(T) -> T) -> Self {
        let xs: Vec<T> = grid.points().iter().map(|&x| T::of(x)).collect();
        let values = xs.iter().map(|&x| f(x)).collect();
        Self {
            axis,
            quantity,
            method: Method::Exact,
            std_errors: vec![T::zero(); xs.len()],
            grid: xs,
            values,
            sample_count: 0,
            seed: 0,
        }
    }

    /// CSV with a `#` metadata line, a column header, and one row per grid
    /// point at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# quantity={} method={} axis={} samples={} seed={}\naxis_value,estimate,std_error\n",
            self.quantity, self.method, self.axis, self.sample_count, self.seed
        );
        for k in 0..self.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                self.grid[k].as_f64(),
                self.values[k].as_f64(),
                self.std_errors[k].as_f64()
            ));
        }
        out
    }

    /// Parses the output of [`CurveEstimate::to_csv`]. Extra `#` lines are
    /// ignored; missing metadata defaults to a `pe` curve on the SNR axis.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut curve = CurveEstimate {
            axis: Axis::Snr,
            quantity: Quantity::pe(),
            method: Method::MonteCarlo,
            grid: Vec::new(),
            values: Vec::new(),
            std_errors: Vec::new(),
            sample_count: 0,
            seed: 0,
        };
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    let Some((k, v)) = kv.split_once('=') else {
                        continue;
                    };
                    match k {
                        "quantity" => curve.quantity = v.parse()?,
                        "method" => curve.method = v.parse()?,
                        "axis" => curve.axis = v.parse()?,
                        "samples" => {
                            curve.sample_count = v
                                .parse()
                                .map_err(|_| Error::Parse(format!("bad samples '{v}'")))?
                        }
                        "seed" => {
                            curve.seed = v
                                .parse()
                                .map_err(|_| Error::Parse(format!("bad seed '{v}'")))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("axis_value") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() < 2 {
                return Err(Error::Parse(format!(
                    "expected at least two columns in '{line}'"
                )));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number '{s}'")))
            };
            curve.grid.push(T::of(num(cols[0])?));
            curve.values.push(T::of(num(cols[1])?));
            curve
                .std_errors
                .push(T::of(if cols.len() > 2 { num(cols[2])? } else { 0.0 }));
        }
        if curve.grid.windows(2).any(|w| !(w[1] > w[0])) || curve.grid.is_empty() {
            return Err(Error::InvalidGrid);
        }
        Ok(curve)
    }
}

/// Estimates `quantity` at every grid point. Monte Carlo runs reuse the
/// same seed at every grid point (common random numbers), condition on each
/// transmitted point in turn, and split `samples` by the priors for averaged
/// targets; a single-point target gets the full budget.
pub fn curve<T: Scalar>(
    c: &Constellation<T>,
    axis: Axis,
    grid: &Grid,
    quantity: Quantity,
    method: Method,
    samples: usize,
    seed: u64,
) -> Result<CurveEstimate<T>> {
    if quantity.order > 2 {
        return Err(Error::InvalidOrder(quantity.order));
    }
    if let Some(i) = quantity.target.point() {
        if i >= c.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: c.len(),
            });
        }
    }
    let cells: Vec<(usize, T, usize)> = match quantity.target.point() {
        Some(i) => vec![(i, T::one(), samples)],
        None => {
            let budget = split_budget(c, samples);
            (0..c.len())
                .map(|i| (i, c.priors()[i], budget[i]))
                .collect()
        }
    };
    // maps a P_c-side value onto the requested target
    let correct = quantity.target.is_correct();
    let target = |pc: T| match (correct, quantity.order) {
        (true, _) => pc,
        (false, 0) => T::one() - pc,
        (false, _) => -pc,
    };
    let mut values = Vec::with_capacity(grid.len());
    let mut std_errors = Vec::with_capacity(grid.len());
    match method {
        Method::MonteCarlo => {
            if samples == 0 {
                return Err(Error::InvalidArgument("samples must be at least 1".into()));
            }
            for &x in grid.points() {
                let x = T::of(x);
                positive("axis value", x)?;
                let (mut v, mut var) = (T::zero(), T::zero());
                for &(i, w, n) in &cells {
                    let cell = VoronoiCell {
                        constellation: c,
                        index: i,
                    };
                    let st = sample_pass(&cell, axis, x, n, seed, i as u64, quantity.order > 0);
                    let est = if quantity.order == 0 {
                        st.probability::<T>()
                    } else {
                        st.derivative::<T>(quantity.order, Estimator::default())
                    };
                    v = v + w * target(est.value);
                    var = var + w * w * est.std_error * est.std_error;
                }
                values.push(v);
                std_errors.push(var.sqrt());
            }
        }
        Method::Quadrature => {
            if c.dim() > 2 {
                return Err(Error::Capability(format!(
                    "quadrature supports n <= 2, got n = {}",
                    c.dim()
                )));
            }
            let regions = cells
                .iter()
                .map(|&(i, _, _)| c.region(i))
                .collect::<Result<Vec<_>>>()?;
            for &x in grid.points() {
                let x = T::of(x);
                positive("axis value", x)?;
                let snr = axis.snr(x);
                let mut v = T::zero();
                for (region, &(_, w, _)) in regions.iter().zip(&cells) {
                    let mut d = region_error_integrals(region, snr)?;
                    if axis == Axis::NoisePower {
                        d = snr_to_noise_derivatives(d, snr);
                    }
                    let pc = if quantity.order == 0 {
                        T::one() - d[0]
                    } else {
                        -d[quantity.order as usize]
                    };
                    v = v + w * target(pc);
                }
                values.push(v);
                std_errors.push(T::zero());
            }
        }
        Method::Exact => {
            return Err(Error::Incompatible(
                "exact curves come from closed forms, not constellations".into(),
            ));
        }
    }
    Ok(CurveEstimate {
        axis,
        quantity,
        method,
        grid: grid.points().iter().map(|&x| T::of(x)).collect(),
        values,
        std_errors,
        sample_count: if method == Method::MonteCarlo {
            samples
        } else {
            0
        },
        seed,
    })
}

/// Curve of `P_e` (order 0) or its derivative for an arbitrary region
/// containing the origin, by Monte Carlo.
pub fn region_curve<T: Scalar, R: Region<T> + ?Sized>(
    region: &R,
    axis: Axis,
    grid: &Grid,
    order: u8,
    samples: usize,
    seed: u64,
) -> Result<CurveEstimate<T>> {
    if order != 0 {
        check_order(order)?;
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut std_errors = Vec::with_capacity(grid.len());
    for &x in grid.points() {
        let x = T::of(x);
        positive("axis value", x)?;
        let st = sample_pass(region, axis, x, samples, seed, 0, order > 0);
        let est = if order == 0 {
            st.probability::<T>()
        } else {
            st.derivative::<T>(order, Estimator::default())
        };
        values.push(if order == 0 {
            T::one() - est.value
        } else {
            -est.value
        });
        std_errors.push(est.std_error);
    }
    Ok(CurveEstimate {
        axis,
        quantity: Quantity::pei(0).derivative(order),
        method: Method::MonteCarlo,
        grid: grid.points().iter().map(|&x| T::of(x)).collect(),
        values,
        std_errors,
        sample_count: samples,
        seed,
    })
}
