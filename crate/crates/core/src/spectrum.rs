//! Band/gap structure of the periodic background operator.
//!
//! Open gaps are the intervals where the Lyapunov function satisfies
//! `|Δ| > 1`; band edges carry `Δ = (−1)ⁿ`. Since `Δ′` vanishes exactly
//! once in each gap closure and nowhere inside bands, gaps are located by
//! bracketing the extrema of `Δ` and bisecting `Δ² − 1` outwards. Gap
//! indices are anchored by the Prüfer angle of the Dirichlet point, which
//! is exact for potentials of any size.

use crate::potential::Potential;
use crate::surface::{Sheet, SurfacePoint};
use crate::transfer::{monodromy, segment_exponential};
use crate::RVec2;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;

/// Bisection runs until the bracket width falls below this absolute size
/// (or machine resolution near large λ).
const ROOT_ATOL: f64 = 1e-13;
/// Relative gap width below which tangency detection is ill-conditioned
/// and the gap is reported closed.
const CLOSED_GAP_REL: f64 = 1e-9;
/// `|Δ² − 1|` below this at an extremum is a tangency (closed gap).
const TANGENCY_ABS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumError {
    WindowCutsGap { boundary: f64 },
    DirichletNotFound { lo: f64, hi: f64 },
    NeumannNotFound { lo: f64, hi: f64 },
    MassSignViolation { n: i64 },
    GapClosed { n: i64 },
}

impl fmt::Display for SpectrumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumError::WindowCutsGap { boundary } => write!(
                f,
                "window boundary {boundary} lies inside a gap; widen the window"
            ),
            SpectrumError::DirichletNotFound { lo, hi } => {
                write!(f, "no sign change of φ₁(1, ·) in [{lo}, {hi}]")
            }
            SpectrumError::NeumannNotFound { lo, hi } => {
                write!(f, "no sign change of θ₂(1, ·) in [{lo}, {hi}]")
            }
            SpectrumError::MassSignViolation { n } => {
                write!(f, "effective masses of gap {n} violate the sign contract")
            }
            SpectrumError::GapClosed { n } => write!(f, "gap {n} is closed"),
        }
    }
}

impl std::error::Error for SpectrumError {}

/// One spectral gap `(α⁻, α⁺)` with its Dirichlet/Neumann data at `t = 0`
/// and the effective masses at the edges.
#[derive(Debug, Clone, Serialize)]
pub struct GapInfo {
    pub n: i64,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    /// Dirichlet point `μₙ(0)` with its sheet.
    pub mu: SurfacePoint,
    /// Neumann eigenvalue `νₙ(0)`.
    pub nu: f64,
    pub mass_minus: f64,
    pub mass_plus: f64,
    pub closed: bool,
}

impl GapInfo {
    pub fn width(&self) -> f64 {
        self.alpha_plus - self.alpha_minus
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.alpha_minus + self.alpha_plus)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width()
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.alpha_minus && lambda <= self.alpha_plus
    }
}

/// Plain bisection on a bracketing interval; `f(a)` and `f(b)` must have
/// opposite signs.
pub(crate) fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    let fb = f(b);
    debug_assert!(fa * fb <= 0.0, "bisect needs a sign change");
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a < ROOT_ATOL.max(mid.abs() * 1e-16) {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Continuous Prüfer angle `β(1, λ)` of `φ(·, λ, t)`: the polar angle of
/// `(φ₁, φ₂)` with `β(0) = 0`, unwrapped along `x ∈ [0, 1]`.
///
/// Strictly decreasing in λ, with `β(1, μₙ(t)) = −πn`.
pub fn prufer_angle(v: &Potential, lambda: f64, t: f64) -> f64 {
    let shifted = v.shift(t);
    let mut phi = RVec2::new(0.0, 1.0);
    let mut raw = 0.0_f64; // angle of the current φ
    let mut beta = 0.0_f64;
    for (a, b, q1, q2) in shifted.segments() {
        let len = b - a;
        // |β′| ≤ |λ| + |q₁| + |q₂|; keep increments safely below π/2.
        let rate = lambda.abs() + q1.abs() + q2.abs() + 1.0;
        let nsub = (len * rate / 0.5).ceil().max(1.0) as usize;
        let step = segment_exponential(q1, q2, lambda, len / nsub as f64);
        for _ in 0..nsub {
            phi = step.mul_vec(&phi);
            let new_raw = phi.x1.atan2(phi.x2);
            let mut inc = new_raw - raw;
            while inc > PI {
                inc -= 2.0 * PI;
            }
            while inc < -PI {
                inc += 2.0 * PI;
            }
            beta += inc;
            raw = new_raw;
            let n = phi.norm();
            if n > 1e100 {
                phi = phi.scale(1.0 / n);
            }
        }
    }
    beta
}

fn delta_at(v: &Potential, lambda: f64) -> f64 {
    monodromy(v, lambda, 0.0).delta()
}

fn delta_prime_at(v: &Potential, lambda: f64) -> f64 {
    monodromy(v, lambda, 0.0).delta_prime()
}

/// Scans `[lo, hi]` and returns every gap (open or closed) fully contained
/// in the window, ordered by λ and indexed by the Prüfer count of its
/// Dirichlet point.
///
/// Fails if a window boundary lies strictly inside a gap, where partial
/// data would otherwise be returned.
pub fn band_edges(
    v: &Potential,
    window: (f64, f64),
    grid: usize,
) -> Result<Vec<GapInfo>, SpectrumError> {
    let (lo, hi) = window;
    assert!(lo < hi, "empty window");
    let n_pts = grid.max(16);
    let xs: Vec<f64> = (0..n_pts)
        .map(|i| lo + (hi - lo) * i as f64 / (n_pts - 1) as f64)
        .collect();
    let deltas: Vec<f64> = xs.iter().map(|&x| delta_at(v, x)).collect();
    let dprimes: Vec<f64> = xs.iter().map(|&x| delta_prime_at(v, x)).collect();

    for (&boundary, &d) in [(lo, deltas[0]), (hi, deltas[n_pts - 1])].iter().map(|p| (&p.0, &p.1)) {
        if d.abs() > 1.0 + 1e-12 {
            return Err(SpectrumError::WindowCutsGap { boundary });
        }
    }

    // Extrema of Δ are in one-to-one correspondence with gap closures.
    let mut extrema = Vec::new();
    for i in 0..n_pts - 1 {
        if dprimes[i] == 0.0 {
            extrema.push(xs[i]);
        } else if dprimes[i] * dprimes[i + 1] < 0.0 {
            extrema.push(bisect(&|x| delta_prime_at(v, x), xs[i], xs[i + 1]));
        }
    }

    let mut gaps = Vec::new();
    for lambda_e in extrema {
        let de = delta_at(v, lambda_e);
        let g = de * de - 1.0;
        if g <= -TANGENCY_ABS {
            continue; // interior-band artifact, not a gap
        }
        let (mut a_minus, mut a_plus) = (lambda_e, lambda_e);
        let mut closed = g <= TANGENCY_ABS;
        if !closed {
            let gap_fn = |x: f64| {
                let d = delta_at(v, x);
                d * d - 1.0
            };
            // Walk out to the enclosing band on each side, then bisect.
            let idx = xs.partition_point(|&x| x < lambda_e);
            let mut left = None;
            for i in (0..idx).rev() {
                if deltas[i] * deltas[i] - 1.0 < 0.0 {
                    left = Some(xs[i]);
                    break;
                }
            }
            let mut right = None;
            for i in idx..n_pts {
                if deltas[i] * deltas[i] - 1.0 < 0.0 {
                    right = Some(xs[i]);
                    break;
                }
            }
            match (left, right) {
                (Some(l), Some(r)) => {
                    a_minus = bisect(&gap_fn, l, lambda_e);
                    a_plus = bisect(&gap_fn, lambda_e, r);
                }
                _ => return Err(SpectrumError::WindowCutsGap { boundary: lambda_e }),
            }
            if a_plus - a_minus < CLOSED_GAP_REL * a_minus.abs().max(1.0) {
                closed = true;
                a_minus = lambda_e;
                a_plus = lambda_e;
            }
        }

        let gap = assemble_gap(v, a_minus, a_plus, closed)?;
        gaps.push(gap);
    }
    gaps.sort_by(|a, b| a.alpha_minus.partial_cmp(&b.alpha_minus).unwrap());
    Ok(gaps)
}

fn assemble_gap(
    v: &Potential,
    alpha_minus: f64,
    alpha_plus: f64,
    closed: bool,
) -> Result<GapInfo, SpectrumError> {
    let mu_proj = if closed {
        alpha_minus
    } else {
        dirichlet_projection(v, alpha_minus, alpha_plus, 0.0)?
    };
    let n = {
        let count = -prufer_angle(v, mu_proj, 0.0) / PI;
        let rounded = count.round();
        debug_assert!(
            (count - rounded).abs() < 0.01,
            "Prüfer count {count} is not near an integer"
        );
        rounded as i64
    };
    if closed {
        return Ok(GapInfo {
            n,
            alpha_minus,
            alpha_plus,
            mu: SurfacePoint::edge(mu_proj),
            nu: mu_proj,
            mass_minus: 0.0,
            mass_plus: 0.0,
            closed: true,
        });
    }
    let mut gap = GapInfo {
        n,
        alpha_minus,
        alpha_plus,
        mu: SurfacePoint::edge(mu_proj),
        nu: mu_proj,
        mass_minus: 0.0,
        mass_plus: 0.0,
        closed: false,
    };
    let (m_minus, m_plus) = effective_masses(v, &gap)?;
    gap.mass_minus = m_minus;
    gap.mass_plus = m_plus;
    gap.mu = assign_sheet(v, &gap, mu_proj, 0.0);
    gap.nu = neumann_point(v, &gap, 0.0)?;
    Ok(gap)
}

/// Projection of the Dirichlet point: the unique zero of `φ₁(1, ·, t)` in
/// the gap closure, possibly at an edge.
fn dirichlet_projection(
    v: &Potential,
    alpha_minus: f64,
    alpha_plus: f64,
    t: f64,
) -> Result<f64, SpectrumError> {
    let f = |x: f64| monodromy(v, x, t).phi1();
    zero_in_gap(f, alpha_minus, alpha_plus)
        .ok_or(SpectrumError::DirichletNotFound {
            lo: alpha_minus,
            hi: alpha_plus,
        })
}

/// Finds the unique zero of `f` in `[lo, hi]`, where `f` may vanish at an
/// endpoint (within rounding) instead of changing sign inside.
fn zero_in_gap(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Option<f64> {
    let f_lo = f(lo);
    let f_hi = f(hi);
    let scale = f_lo.abs().max(f_hi.abs());
    if scale == 0.0 {
        return None;
    }
    let lo_zero = f_lo.abs() <= 1e-9 * scale;
    let hi_zero = f_hi.abs() <= 1e-9 * scale;
    match (lo_zero, hi_zero) {
        (true, false) => Some(lo),
        (false, true) => Some(hi),
        (true, true) => None,
        (false, false) => {
            if f_lo * f_hi < 0.0 {
                Some(bisect(&|x| f(x), lo, hi))
            } else {
                None
            }
        }
    }
}

/// Sheet assignment of an interior Dirichlet point via the pole rule
/// `b(μ) = −a(μ, t)`: the sheet is the one whose sign of `b` matches.
fn assign_sheet(v: &Potential, gap: &GapInfo, mu_proj: f64, t: f64) -> SurfacePoint {
    let edge_band = 1e-9 * gap.width().max(1.0);
    if (mu_proj - gap.alpha_minus).abs() < edge_band
        || (mu_proj - gap.alpha_plus).abs() < edge_band
    {
        let alpha = if (mu_proj - gap.alpha_minus).abs() < (mu_proj - gap.alpha_plus).abs() {
            gap.alpha_minus
        } else {
            gap.alpha_plus
        };
        return SurfacePoint::edge(alpha);
    }
    let mono = monodromy(v, mu_proj, t);
    let a = mono.a();
    let d = mono.delta();
    let root = (d * d - 1.0).max(0.0).sqrt();
    // b on sheet 1 is (−1)ⁿ √(Δ² − 1).
    let b_sheet1 = if gap.n % 2 == 0 { root } else { -root };
    let sheet = if -a * b_sheet1 > 0.0 {
        Sheet::One
    } else {
        Sheet::Two
    };
    SurfacePoint::interior(mu_proj, sheet)
}

/// Dirichlet point `μₙ(t)` of the shifted problem, with its sheet; a
/// sheet-neutral edge marker when it sits at a band edge.
pub fn dirichlet_point(
    v: &Potential,
    gap: &GapInfo,
    t: f64,
) -> Result<SurfacePoint, SpectrumError> {
    if gap.closed {
        return Ok(SurfacePoint::edge(gap.alpha_minus));
    }
    let proj = dirichlet_projection(v, gap.alpha_minus, gap.alpha_plus, t)?;
    Ok(assign_sheet(v, gap, proj, t))
}

/// Neumann eigenvalue `νₙ(t)`: the unique zero of `θ₂(1, ·, t)` in the gap
/// closure.
pub fn neumann_point(v: &Potential, gap: &GapInfo, t: f64) -> Result<f64, SpectrumError> {
    if gap.closed {
        return Ok(gap.alpha_minus);
    }
    let f = |x: f64| monodromy(v, x, t).theta2();
    zero_in_gap(f, gap.alpha_minus, gap.alpha_plus).ok_or(SpectrumError::NeumannNotFound {
        lo: gap.alpha_minus,
        hi: gap.alpha_plus,
    })
}

/// Effective masses `(M⁻, M⁺) = −Δ(α^∓)Δ′(α^∓)` at the gap edges, with the
/// sign contract `±M^± > 0` enforced.
pub fn effective_masses(v: &Potential, gap: &GapInfo) -> Result<(f64, f64), SpectrumError> {
    if gap.closed {
        return Err(SpectrumError::GapClosed { n: gap.n });
    }
    let mass = |alpha: f64| {
        let mono = monodromy(v, alpha, 0.0);
        -mono.delta() * mono.delta_prime()
    };
    let m_minus = mass(gap.alpha_minus);
    let m_plus = mass(gap.alpha_plus);
    if !(m_minus < 0.0 && m_plus > 0.0) {
        return Err(SpectrumError::MassSignViolation { n: gap.n });
    }
    Ok((m_minus, m_plus))
}
