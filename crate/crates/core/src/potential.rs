//! 1-periodic matrix potentials `V = [[q₁, q₂], [q₂, −q₁]]` stored as exact
//! piecewise-constant data.
//!
//! The piecewise-constant representation admits exact 2×2 propagators per
//! segment, and shifts are performed on the breakpoints themselves, so no
//! resampling error accumulates in dislocation sweeps. Smooth potentials are
//! approximated up front via [`Potential::sample`].

use serde::{Deserialize, Serialize};
use std::fmt;

/// Tolerance used when merging breakpoints that collide after a shift.
const BREAK_MERGE_EPS: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialError {
    Empty,
    FirstBreakpointNotZero(f64),
    Unsorted { index: usize },
    OutOfRange { index: usize, value: f64 },
    LengthMismatch { breakpoints: usize, values: usize },
}

impl fmt::Display for PotentialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialError::Empty => write!(f, "potential needs at least one segment"),
            PotentialError::FirstBreakpointNotZero(b) => {
                write!(f, "first breakpoint must be 0, got {b}")
            }
            PotentialError::Unsorted { index } => {
                write!(f, "breakpoints must be strictly increasing (index {index})")
            }
            PotentialError::OutOfRange { index, value } => {
                write!(f, "breakpoint {value} at index {index} is outside [0, 1)")
            }
            PotentialError::LengthMismatch {
                breakpoints,
                values,
            } => write!(
                f,
                "{breakpoints} breakpoints but {values} value pairs"
            ),
        }
    }
}

impl std::error::Error for PotentialError {}

/// One period of a trace-free symmetric 2×2 potential, constant on each
/// interval `[breakpoints[i], breakpoints[i+1])` (the last one wraps to 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialJson", into = "PotentialJson")]
pub struct Potential {
    breakpoints: Vec<f64>,
    values: Vec<(f64, f64)>,
}

/// Wire format: `{"breakpoints": [...], "q1": [...], "q2": [...]}`.
#[derive(Serialize, Deserialize)]
struct PotentialJson {
    breakpoints: Vec<f64>,
    q1: Vec<f64>,
    q2: Vec<f64>,
}

impl TryFrom<PotentialJson> for Potential {
    type Error = PotentialError;
    fn try_from(j: PotentialJson) -> Result<Self, Self::Error> {
        if j.q1.len() != j.q2.len() {
            return Err(PotentialError::LengthMismatch {
                breakpoints: j.q1.len(),
                values: j.q2.len(),
            });
        }
        let values: Vec<(f64, f64)> = j.q1.into_iter().zip(j.q2).collect();
        Potential::piecewise(j.breakpoints, values)
    }
}

impl From<Potential> for PotentialJson {
    fn from(p: Potential) -> Self {
        PotentialJson {
            breakpoints: p.breakpoints.clone(),
            q1: p.values.iter().map(|v| v.0).collect(),
            q2: p.values.iter().map(|v| v.1).collect(),
        }
    }
}

impl Potential {
    /// Validated constructor from raw breakpoint/value data.
    pub fn piecewise(
        breakpoints: Vec<f64>,
        values: Vec<(f64, f64)>,
    ) -> Result<Self, PotentialError> {
        if breakpoints.is_empty() || values.is_empty() {
            return Err(PotentialError::Empty);
        }
        if breakpoints.len() != values.len() {
            return Err(PotentialError::LengthMismatch {
                breakpoints: breakpoints.len(),
                values: values.len(),
            });
        }
        if breakpoints[0] != 0.0 {
            return Err(PotentialError::FirstBreakpointNotZero(breakpoints[0]));
        }
        for (i, w) in breakpoints.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(PotentialError::Unsorted { index: i + 1 });
            }
        }
        for (i, &b) in breakpoints.iter().enumerate() {
            if !(0.0..1.0).contains(&b) {
                return Err(PotentialError::OutOfRange { index: i, value: b });
            }
        }
        Ok(Potential {
            breakpoints,
            values,
        })
    }

    /// The free potential `V = 0`.
    pub fn free() -> Self {
        Potential {
            breakpoints: vec![0.0],
            values: vec![(0.0, 0.0)],
        }
    }

    /// Constant mass potential `q₁ = m`, `q₂ = 0`.
    pub fn constant_mass(m: f64) -> Self {
        Potential {
            breakpoints: vec![0.0],
            values: vec![(m, 0.0)],
        }
    }

    /// Even two-step potential: `q₁ = 0`, `q₂ = c` on `[0, ½)`, `−c` on `[½, 1)`.
    pub fn even_two_step(c: f64) -> Self {
        Potential {
            breakpoints: vec![0.0, 0.5],
            values: vec![(0.0, c), (0.0, -c)],
        }
    }

    /// Constant mass `m` with the even two-step coupling of amplitude `c`.
    pub fn mass_with_two_step(m: f64, c: f64) -> Self {
        Potential {
            breakpoints: vec![0.0, 0.5],
            values: vec![(m, c), (m, -c)],
        }
    }

    /// Even two-step coupling of amplitude `c2` with `q₁ = c` concentrated
    /// on the edge wells `[0, δ) ∪ [1−δ, 1)`.
    pub fn edge_wells_two_step(c: f64, delta: f64, c2: f64) -> Self {
        assert!(delta > 0.0 && delta < 0.5);
        Potential {
            breakpoints: vec![0.0, delta, 0.5, 1.0 - delta],
            values: vec![(c, c2), (0.0, c2), (0.0, -c2), (c, -c2)],
        }
    }

    /// Samples a callable onto `n` uniform segments.
    pub fn sample(f: impl Fn(f64) -> (f64, f64), n: usize) -> Self {
        assert!(n > 0);
        let breakpoints: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let values = (0..n)
            .map(|i| f((i as f64 + 0.5) / n as f64))
            .collect();
        Potential {
            breakpoints,
            values,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[(f64, f64)] {
        &self.values
    }

    /// Segments `(start, end, q₁, q₂)` covering one period.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let n = self.breakpoints.len();
        (0..n).map(move |i| {
            let end = if i + 1 < n { self.breakpoints[i + 1] } else { 1.0 };
            let (q1, q2) = self.values[i];
            (self.breakpoints[i], end, q1, q2)
        })
    }

    /// Value at `x` (periodically extended, right-continuous).
    pub fn value_at(&self, x: f64) -> (f64, f64) {
        let xf = frac(x);
        let idx = match self
            .breakpoints
            .partition_point(|&b| b <= xf)
        {
            0 => self.breakpoints.len() - 1, // xf slightly below 0 after rounding
            k => k - 1,
        };
        self.values[idx]
    }

    /// Distance from `x` to the nearest breakpoint, measured on the circle.
    pub fn breakpoint_distance(&self, x: f64) -> f64 {
        let xf = frac(x);
        self.breakpoints
            .iter()
            .map(|&b| {
                let d = (xf - b).abs();
                d.min(1.0 - d)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// The shifted potential `x ↦ V(x + t)`, computed exactly on the
    /// breakpoints (rotated by `−t` mod 1 and re-sorted).
    pub fn shift(&self, t: f64) -> Potential {
        let mut starts: Vec<(f64, (f64, f64))> = self
            .breakpoints
            .iter()
            .zip(&self.values)
            .map(|(&b, &v)| (frac(b - t), v))
            .collect();
        starts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        // Drop zero-length segments created when a breakpoint lands on another.
        let mut merged: Vec<(f64, (f64, f64))> = Vec::with_capacity(starts.len());
        for (b, v) in starts {
            if let Some(last) = merged.last_mut() {
                if b - last.0 < BREAK_MERGE_EPS {
                    last.1 = v;
                    continue;
                }
            }
            merged.push((b, v));
        }
        // The segment wrapping through 0 is the last one in sorted order.
        if merged[0].0 > 0.0 {
            if merged[0].0 < BREAK_MERGE_EPS {
                merged[0].0 = 0.0;
            } else {
                let wrap_value = merged.last().unwrap().1;
                merged.insert(0, (0.0, wrap_value));
            }
        }
        if merged.last().unwrap().0 > 1.0 - BREAK_MERGE_EPS && merged.len() > 1 {
            merged.pop();
        }
        Potential {
            breakpoints: merged.iter().map(|s| s.0).collect(),
            values: merged.iter().map(|s| s.1).collect(),
        }
    }

    /// Membership in the even class `q₁(x) = q₁(1−x)`, `q₂(x) = −q₂(1−x)`,
    /// checked pointwise a.e. on a breakpoint-refined grid.
    pub fn is_even_class(&self, tol: f64) -> bool {
        let mut probes: Vec<f64> = Vec::new();
        for &b in &self.breakpoints {
            probes.push(b);
            probes.push(frac(1.0 - b));
        }
        probes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        probes.push(1.0);
        for w in probes.windows(2) {
            if w[1] - w[0] < BREAK_MERGE_EPS {
                continue;
            }
            let x = 0.5 * (w[0] + w[1]);
            let (q1, q2) = self.value_at(x);
            let (r1, r2) = self.value_at(1.0 - x);
            if (q1 - r1).abs() > tol || (q2 + r2).abs() > tol {
                return false;
            }
        }
        true
    }

    /// `(‖V‖_P, ‖V‖_∞)`: the period norm `(∫ q₁² + q₂²)^{1/2}` and the sup
    /// norm `max 2(q₁² + q₂²)`, both exact sums over segments.
    pub fn norms(&self) -> (f64, f64) {
        let mut p2 = 0.0;
        let mut sup: f64 = 0.0;
        for (a, b, q1, q2) in self.segments() {
            let tr_half = q1 * q1 + q2 * q2;
            p2 += (b - a) * tr_half;
            sup = sup.max(2.0 * tr_half);
        }
        (p2.sqrt(), sup)
    }

    pub fn norm_p(&self) -> f64 {
        self.norms().0
    }

    /// `∫_a^b f(q₁(τ), q₂(τ)) dτ`, exact over the piecewise-constant data.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let (a, b, orientation) = if b < a { (b, a, -1.0) } else { (a, b, 1.0) };
        let mut total = 0.0;
        // Per-period value plus the two partial ends.
        let whole = (b.floor() - a.ceil()).max(0.0);
        if whole > 0.0 {
            let per: f64 = self
                .segments()
                .map(|(s, e, q1, q2)| (e - s) * f(q1, q2))
                .sum();
            total += whole * per;
        }
        let mut piece = |lo: f64, hi: f64| {
            if hi <= lo {
                return;
            }
            let (lo_f, hi_f) = (frac(lo), frac(lo) + (hi - lo));
            for (s, e, q1, q2) in self.segments() {
                let l = s.max(lo_f);
                let r = e.min(hi_f);
                if r > l {
                    total += (r - l) * f(q1, q2);
                }
                // The stretch may extend past x = 1 into the next period copy.
                let l2 = (s + 1.0).max(lo_f);
                let r2 = (e + 1.0).min(hi_f);
                if r2 > l2 {
                    total += (r2 - l2) * f(q1, q2);
                }
            }
        };
        if whole > 0.0 {
            piece(a, a.ceil());
            piece(b.floor(), b);
        } else {
            piece(a, b);
        }
        orientation * total
    }
}

/// Fractional part mapped into `[0, 1)`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}
