//! Constellations, their Voronoi decision polyhedra and the distance
//! parameters `d_min`/`d_max` that drive every regime threshold.
//!
//! Regions are expressed in the frame centred on the owning point, so the
//! transmitted symbol sits at the origin and every offset `b_j` is positive.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dist_sq, dot, norm_sq, Scalar};

/// Exact vertex enumeration is limited to desk-scale geometry.
pub const MAX_ENUM_DIM: usize = 4;
pub const MAX_ENUM_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation<T> {
    dim: usize,
    points: Vec<Vec<T>>,
    priors: Vec<T>,
}

impl<T: Scalar> Constellation<T> {
    /// Validates `points` (and optional `priors`, uniform by default).
    ///
    /// With `rescale` set, points are multiplied by the common factor that
    /// brings the average energy `(1/M)Σ|s_i|²` to one; otherwise the energy
    /// must already be one within 1e-9.
    pub fn new(points: Vec<Vec<T>>, priors: Option<Vec<T>>, rescale: bool) -> Result<Self> {
        let m = points.len();
        if m < 2 {
            return Err(Error::TooFewPoints(m));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "points must have at least one coordinate".into(),
            ));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("non-finite coordinate".into()));
            }
        }
        let energy = points.iter().map(|p| norm_sq(p)).sum::<T>() / T::of_usize(m);
        if energy <= T::zero() {
            return Err(Error::ZeroEnergy);
        }
        for i in 0..m {
            for j in i + 1..m {
                if dist_sq(&points[i], &points[j]) <= energy * T::epsilon() * T::epsilon() {
                    return Err(Error::DuplicatePoints(i, j));
                }
            }
        }
        let points = if rescale {
            let scale = energy.sqrt().recip();
            points
                .into_iter()
                .map(|p| p.into_iter().map(|x| x * scale).collect())
                .collect()
        } else {
            if (energy - T::one()).abs() > T::tol(1e-9) {
                return Err(Error::NotNormalized(energy.as_f64()));
            }
            points
        };
        let priors = match priors {
            None => vec![T::one() / T::of_usize(m); m],
            Some(pr) => {
                if pr.len() != m {
                    return Err(Error::PriorCount {
                        expected: m,
                        found: pr.len(),
                    });
                }
                if let Some((index, &value)) =
                    pr.iter().enumerate().find(|(_, &p)| !(p >= T::zero()))
                {
                    return Err(Error::NegativePrior {
                        index,
                        value: value.as_f64(),
                    });
                }
                let total: T = pr.iter().copied().sum();
                if (total - T::one()).abs() > T::tol(1e-12) {
                    return Err(Error::PriorSum(total.as_f64()));
                }
                pr
            }
        };
        Ok(Self {
            dim,
            points,
            priors,
        })
    }

    pub fn standard(kind: StandardConstellation) -> Result<Self> {
        use StandardConstellation::*;
        let pts: Vec<Vec<f64>> = match kind {
            Bpsk => vec![vec![1.0], vec![-1.0]],
            Qpsk => (0..4)
                .map(|k| {
                    let a = std::f64::consts::FRAC_PI_4 + std::f64::consts::FRAC_PI_2 * k as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect(),
            Mpsk(m) => {
                if m < 2 {
                    return Err(Error::Unsupported(format!(
                        "{m}-PSK needs at least 2 points"
                    )));
                }
                (0..m)
                    .map(|k| {
                        let a = std::f64::consts::TAU * k as f64 / m as f64;
                        vec![a.cos(), a.sin()]
                    })
                    .collect()
            }
            Mqam(m) => {
                let side = (m as f64).sqrt().round() as usize;
                if m < 4 || side * side != m || !side.is_multiple_of(2) {
                    return Err(Error::Unsupported(format!(
                        "{m}-QAM must be a square with even side"
                    )));
                }
                let mut v = Vec::with_capacity(m);
                for a in 0..side {
                    for b in 0..side {
                        v.push(vec![
                            (2 * a) as f64 - (side - 1) as f64,
                            (2 * b) as f64 - (side - 1) as f64,
                        ]);
                    }
                }
                v
            }
            Orthogonal(n) => {
                if n < 2 {
                    return Err(Error::Unsupported(format!(
                        "orthogonal signalling needs n >= 2, got {n}"
                    )));
                }
                (0..n)
                    .map(|k| (0..n).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
                    .collect()
            }
            Cube(n) => {
                if !(1..=16).contains(&n) {
                    return Err(Error::Unsupported(format!(
                        "hypercube dimension {n} outside 1..=16"
                    )));
                }
                let c = 1.0 / (n as f64).sqrt();
                (0..1usize << n)
                    .map(|mask| {
                        (0..n)
                            .map(|j| if mask >> j & 1 == 0 { c } else { -c })
                            .collect()
                    })
                    .collect()
            }
        };
        let pts = pts
            .into_iter()
            .map(|p| p.into_iter().map(T::of).collect())
            .collect();
        Self::new(pts, None, true)
    }

    /// Parses the JSON constellation file format
    /// `{ "n": int, "points": [[..]..], "priors": [..]?, "rescale": bool? }`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConstellationFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        for p in &file.points {
            if p.len() != file.n {
                return Err(Error::DimensionMismatch {
                    expected: file.n,
                    found: p.len(),
                });
            }
        }
        let conv = |v: Vec<f64>| v.into_iter().map(T::of).collect::<Vec<T>>();
        Self::new(
            file.points.into_iter().map(conv).collect(),
            file.priors.map(conv),
            file.rescale.unwrap_or(false),
        )
    }

    pub fn to_json(&self) -> String {
        let file = ConstellationFile {
            n: self.dim,
            points: self
                .points
                .iter()
                .map(|p| p.iter().map(|x| x.as_f64()).collect())
                .collect(),
            priors: Some(self.priors.iter().map(|x| x.as_f64()).collect()),
            rescale: None,
        };
        serde_json::to_string_pretty(&file).expect("constellation serializes")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i]
    }

    pub fn priors(&self) -> &[T] {
        &self.priors
    }

    pub fn energy(&self) -> T {
        self.points.iter().map(|p| norm_sq(p)).sum::<T>() / T::of_usize(self.len())
    }

    /// Minimum-distance (ML in AWGN) decision, ties to the lowest index.
    pub fn detect(&self, r: &[T]) -> Result<usize> {
        if r.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: r.len(),
            });
        }
        Ok(self.nearest(r))
    }

    #[inline]
    pub(crate) fn nearest(&self, r: &[T]) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (j, p) in self.points.iter().enumerate() {
            let d = dist_sq(r, p);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }

    /// Is `x` (in the frame centred on point `i`) decoded as `i`?
    #[inline]
    pub(crate) fn decodes_offset(&self, i: usize, x: &[T], scratch: &mut [T]) -> bool {
        for ((r, &s), &xi) in scratch.iter_mut().zip(&self.points[i]).zip(x) {
            *r = s + xi;
        }
        self.nearest(scratch) == i
    }

    /// Half-space rows of the Voronoi cell of point `i`, one per `j ≠ i`.
    pub fn halfspaces(&self, i: usize) -> Result<Vec<HalfSpace<T>>> {
        self.check_index(i)?;
        let si = &self.points[i];
        Ok((0..self.len())
            .filter(|&j| j != i)
            .map(|j| {
                let diff: Vec<T> = self.points[j]
                    .iter()
                    .zip(si)
                    .map(|(&a, &b)| a - b)
                    .collect();
                let len = norm_sq(&diff).sqrt();
                HalfSpace {
                    normal: diff.into_iter().map(|d| d / len).collect(),
                    offset: len * T::of(0.5),
                    neighbor: Some(j),
                }
            })
            .collect())
    }

    pub fn region(&self, i: usize) -> Result<DecisionRegion<T>> {
        let rows = self.halfspaces(i)?;
        DecisionRegion::build(Some(i), self.dim, rows)
    }

    /// Global `(d_min, d_max)`: minimum of the per-region minima and maximum
    /// of the per-region maxima (infinite if any region is unbounded).
    pub fn global_distances(&self) -> Result<(T, T)> {
        let mut d_min = T::infinity();
        let mut d_max = T::zero();
        for i in 0..self.len() {
            let r = self.region(i)?;
            d_min = d_min.min(r.d_min);
            d_max = d_max.max(r.d_max);
        }
        Ok((d_min, d_max))
    }

    /// True when every point has the same per-point SER by symmetry, i.e.
    /// all regions share the same sorted multiset of offsets. Used only to
    /// decide when `P_c = P_ci`.
    pub fn is_symmetric(&self) -> bool {
        let profile = |i: usize| {
            let mut d: Vec<T> = (0..self.len())
                .filter(|&j| j != i)
                .map(|j| dist_sq(&self.points[i], &self.points[j]))
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d
        };
        let first = profile(0);
        let uniform = self
            .priors
            .iter()
            .all(|&p| (p - self.priors[0]).abs() <= T::tol(1e-12));
        uniform
            && (1..self.len()).all(|i| {
                profile(i)
                    .iter()
                    .zip(&first)
                    .all(|(a, b)| (*a - *b).abs() <= T::tol(1e-9))
            })
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ConstellationFile {
    n: usize,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    priors: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rescale: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardConstellation {
    Bpsk,
    Qpsk,
    Mpsk(usize),
    Mqam(usize),
    Orthogonal(usize),
    Cube(usize),
}

impl fmt::Display for StandardConstellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use StandardConstellation::*;
        match self {
            Bpsk => write!(f, "bpsk"),
            Qpsk => write!(f, "qpsk"),
            Mpsk(m) => write!(f, "psk:{m}"),
            Mqam(m) => write!(f, "qam:{m}"),
            Orthogonal(n) => write!(f, "orthogonal:{n}"),
            Cube(n) => write!(f, "cube:{n}"),
        }
    }
}

impl FromStr for StandardConstellation {
    type Err = Error;

    /// Accepts `bpsk`, `qpsk`, `8psk`/`psk:8`, `16qam`/`qam:16`,
    /// `orthogonal:3` and `cube:3`.
    fn from_str(s: &str) -> Result<Self> {
        use StandardConstellation::*;
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::Parse(format!("unknown constellation '{s}'"));
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        if s == "bpsk" {
            return Ok(Bpsk);
        }
        if s == "qpsk" {
            return Ok(Qpsk);
        }
        if let Some((name, arg)) = s.split_once(':') {
            let v = num(arg)?;
            return match name {
                "psk" | "mpsk" => Ok(Mpsk(v)),
                "qam" | "mqam" => Ok(Mqam(v)),
                "orthogonal" | "orth" => Ok(Orthogonal(v)),
                "cube" => Ok(Cube(v)),
                _ => Err(bad()),
            };
        }
        if let Some(m) = s.strip_suffix("psk") {
            return Ok(Mpsk(num(m)?));
        }
        if let Some(m) = s.strip_suffix("qam") {
            return Ok(Mqam(num(m)?));
        }
        Err(bad())
    }
}

/// One row `a·x ≤ b` of a decision polyhedron.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace<T> {
    pub normal: Vec<T>,
    pub offset: T,
    /// Constellation index of the point that generated the row, if any.
    pub neighbor: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes<T> {
    pub d_min: T,
    pub d_max: T,
    pub bounded: bool,
}

/// Convex polyhedron `{x | Ax ≤ b}` containing the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRegion<T> {
    owner: Option<usize>,
    dim: usize,
    rows: Vec<HalfSpace<T>>,
    d_min: T,
    d_max: T,
    bounded: bool,
}

impl<T: Scalar> DecisionRegion<T> {
    /// A region from explicit half-spaces (unit normals, positive offsets).
    pub fn from_halfspaces(dim: usize, rows: Vec<HalfSpace<T>>) -> Result<Self> {
        Self::build(None, dim, rows)
    }

    fn build(owner: Option<usize>, dim: usize, rows: Vec<HalfSpace<T>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidHalfSpace(
                "a region needs at least one row".into(),
            ));
        }
        for (k, row) in rows.iter().enumerate() {
            if row.normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.normal.len(),
                });
            }
            if (norm_sq(&row.normal).sqrt() - T::one()).abs() > T::tol(1e-12) {
                return Err(Error::InvalidHalfSpace(format!(
                    "row {k} normal is not unit length"
                )));
            }
            if !(row.offset > T::zero()) {
                return Err(Error::InvalidHalfSpace(format!(
                    "row {k} offset must be positive"
                )));
            }
        }
        let ext = region_extremes(dim, &rows)?;
        Ok(Self {
            owner,
            dim,
            rows,
            d_min: ext.d_min,
            d_max: ext.d_max,
            bounded: ext.bounded,
        })
    }

    /// The axis-aligned box `{x | |x_k| ≤ half_width}`.
    pub fn cube(dim: usize, half_width: T) -> Result<Self> {
        let rows = (0..dim)
            .flat_map(|k| {
                [T::one(), -T::one()]
                    .into_iter()
                    .map(move |sign| HalfSpace {
                        normal: (0..dim)
                            .map(|j| if j == k { sign } else { T::zero() })
                            .collect(),
                        offset: half_width,
                        neighbor: None,
                    })
            })
            .collect();
        Self::from_halfspaces(dim, rows)
    }

    pub fn owner(&self) -> Option<usize> {
        self.owner
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[HalfSpace<T>] {
        &self.rows
    }

    pub fn d_min(&self) -> T {
        self.d_min
    }

    pub fn d_max(&self) -> T {
        self.d_max
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    pub fn extremes(&self) -> Extremes<T> {
        Extremes {
            d_min: self.d_min,
            d_max: self.d_max,
            bounded: self.bounded,
        }
    }

    /// Membership of `x` in the cell. Rows generated by a lower-indexed
    /// neighbour are strict so ties follow the detector's lowest-index rule.
    pub fn contains(&self, x: &[T]) -> bool {
        self.rows.iter().all(|row| {
            let v = dot(&row.normal, x);
            match (row.neighbor, self.owner) {
                (Some(j), Some(i)) if j < i => v < row.offset,
                _ => v <= row.offset,
            }
        })
    }
}

/// `d_min = min_j b_j`; boundedness from the recession cone `{x | Ax ≤ 0}`;
/// `d_max` as the largest vertex norm when bounded, `+∞` otherwise.
pub fn region_extremes<T: Scalar>(dim: usize, rows: &[HalfSpace<T>]) -> Result<Extremes<T>> {
    if dim > MAX_ENUM_DIM || rows.len() >= MAX_ENUM_POINTS {
        return Err(Error::Capability(format!(
            "vertex enumeration limited to n <= {MAX_ENUM_DIM} and at most {} rows (got n = {dim}, {} rows)",
            MAX_ENUM_POINTS - 1,
            rows.len()
        )));
    }
    let d_min = rows.iter().map(|r| r.offset).fold(T::infinity(), T::min);

    // The cone is {0} iff its intersection with the unit box has no vertex
    // other than the origin.
    let mut cone: Vec<(Vec<T>, T)> = rows.iter().map(|r| (r.normal.clone(), T::zero())).collect();
    for k in 0..dim {
        for sign in [T::one(), -T::one()] {
            cone.push((
                (0..dim)
                    .map(|j| if j == k { sign } else { T::zero() })
                    .collect(),
                T::one(),
            ));
        }
    }
    let mut unbounded = false;
    enumerate_vertices(dim, &cone, |v| {
        if norm_sq(v) > T::tol(1e-9) * T::tol(1e-9) {
            unbounded = true;
        }
        !unbounded
    });
    if unbounded {
        return Ok(Extremes {
            d_min,
            d_max: T::infinity(),
            bounded: false,
        });
    }

    let sys: Vec<(Vec<T>, T)> = rows.iter().map(|r| (r.normal.clone(), r.offset)).collect();
    let mut best = T::zero();
    enumerate_vertices(dim, &sys, |v| {
        best = best.max(norm_sq(v).sqrt());
        true
    });
    Ok(Extremes {
        d_min,
        d_max: best.max(d_min),
        bounded: true,
    })
}

/// Calls `visit` for every feasible basic solution of `{x | a_j·x ≤ b_j}`;
/// `visit` returns false to stop early.
fn enumerate_vertices<T: Scalar, F: FnMut(&[T]) -> bool>(
    dim: usize,
    sys: &[(Vec<T>, T)],
    mut visit: F,
) {
    let m = sys.len();
    if m < dim {
        return;
    }
    let mut idx: Vec<usize> = (0..dim).collect();
    let mut mat = vec![T::zero(); dim * (dim + 1)];
    loop {
        for (r, &k) in idx.iter().enumerate() {
            mat[r * (dim + 1)..r * (dim + 1) + dim].copy_from_slice(&sys[k].0);
            mat[r * (dim + 1) + dim] = sys[k].1;
        }
        if let Some(x) = solve_augmented(dim, &mut mat) {
            let feasible = sys
                .iter()
                .all(|(a, b)| dot(a, &x) <= *b + T::tol(1e-9) * (T::one() + b.abs()));
            if feasible && !visit(&x) {
                return;
            }
        }
        // next combination
        let mut pos = dim;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if idx[pos] < m - dim + pos {
                idx[pos] += 1;
                for q in pos + 1..dim {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Gaussian elimination with partial pivoting on an `n × (n+1)` row-major
/// augmented matrix. `None` when (numerically) singular.
fn solve_augmented<T: Scalar>(n: usize, mat: &mut [T]) -> Option<Vec<T>> {
    let w = n + 1;
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| {
            mat[a * w + col]
                .abs()
                .partial_cmp(&mat[b * w + col].abs())
                .unwrap()
        })?;
        if mat[piv * w + col].abs() < T::tol(1e-10) {
            return None;
        }
        if piv != col {
            for c in 0..w {
                mat.swap(piv * w + c, col * w + c);
            }
        }
        for r in col + 1..n {
            let f = mat[r * w + col] / mat[col * w + col];
            for c in col..w {
                mat[r * w + c] = mat[r * w + c] - f * mat[col * w + c];
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut acc = mat[r * w + n];
        for c in r + 1..n {
            acc = acc - mat[r * w + c] * x[c];
        }
        x[r] = acc / mat[r * w + r];
    }
    Some(x)
}
