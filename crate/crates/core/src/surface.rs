//! Points and functions on the two-sheeted Riemann surface glued over the
//! spectral gaps.
//!
//! Only the real trace of the surface is modelled: the real axis plus the
//! circle gaps `γ_n^c` obtained by joining the gap copies on both sheets at
//! the band edges. That is exactly where the sheeted square root `b`, the
//! Weyl-Titchmarsh functions `m±` and the gap states live.

use crate::potential::Potential;
use crate::spectrum::{prufer_angle, GapInfo};
use crate::transfer::{fundamental, monodromy, Monodromy};
use crate::{CVec2, RVec2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Angular tolerance for coincidence of circle-gap points.
const ANGLE_EPS: f64 = 1e-12;
/// Angles this close to 0 or π snap to the band-edge markers: the edge
/// chart `λ = α ∓ z²` cannot resolve `|z| ≲ √ε` anyway.
const EDGE_SNAP_ANGLE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceError {
    OutsideGap { lambda: f64 },
    MixedGaps,
    PoleOfM { lambda: f64 },
    NotABandPoint { lambda: f64 },
    GapClosed,
}

impl fmt::Display for SurfaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceError::OutsideGap { lambda } => {
                write!(f, "λ = {lambda} projects outside the gap closure")
            }
            SurfaceError::MixedGaps => write!(f, "points lie in different circle gaps"),
            SurfaceError::PoleOfM { lambda } => {
                write!(f, "Weyl function has a pole at λ = {lambda}")
            }
            SurfaceError::NotABandPoint { lambda } => {
                write!(f, "λ = {lambda} is not a band point")
            }
            SurfaceError::GapClosed => write!(f, "gap is closed"),
        }
    }
}

impl std::error::Error for SurfaceError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sheet {
    One,
    Two,
}

impl Sheet {
    pub fn index(self) -> u8 {
        match self {
            Sheet::One => 1,
            Sheet::Two => 2,
        }
    }

    pub fn other(self) -> Sheet {
        match self {
            Sheet::One => Sheet::Two,
            Sheet::Two => Sheet::One,
        }
    }

    /// `(−1)^j` for sheet index `j`.
    pub fn parity(self) -> f64 {
        match self {
            Sheet::One => -1.0,
            Sheet::Two => 1.0,
        }
    }
}

/// A point of the real trace of the Riemann surface: a real spectral
/// parameter with a sheet index. Band edges are shared by both sheets and
/// carry the `edge` flag; their `sheet` is ignored in comparisons.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "SurfacePointJson", into = "SurfacePointJson")]
pub struct SurfacePoint {
    pub lambda: f64,
    pub sheet: Sheet,
    pub edge: bool,
}

#[derive(Serialize, Deserialize)]
struct SurfacePointJson {
    lambda: f64,
    sheet: u8,
    edge: bool,
}

impl TryFrom<SurfacePointJson> for SurfacePoint {
    type Error = String;
    fn try_from(j: SurfacePointJson) -> Result<Self, String> {
        let sheet = match j.sheet {
            1 => Sheet::One,
            2 => Sheet::Two,
            s => return Err(format!("sheet must be 1 or 2, got {s}")),
        };
        Ok(SurfacePoint {
            lambda: j.lambda,
            sheet,
            edge: j.edge,
        })
    }
}

impl From<SurfacePoint> for SurfacePointJson {
    fn from(p: SurfacePoint) -> Self {
        SurfacePointJson {
            lambda: p.lambda,
            sheet: p.sheet.index(),
            edge: p.edge,
        }
    }
}

impl SurfacePoint {
    pub fn interior(lambda: f64, sheet: Sheet) -> Self {
        SurfacePoint {
            lambda,
            sheet,
            edge: false,
        }
    }

    pub fn edge(lambda: f64) -> Self {
        SurfacePoint {
            lambda,
            sheet: Sheet::One,
            edge: true,
        }
    }

    /// Projection onto the other sheet; band edges are fixed points.
    pub fn star(self) -> Self {
        if self.edge {
            self
        } else {
            SurfacePoint {
                sheet: self.sheet.other(),
                ..self
            }
        }
    }

    pub fn approx_eq(&self, other: &SurfacePoint, tol: f64) -> bool {
        if (self.lambda - other.lambda).abs() > tol {
            return false;
        }
        self.edge || other.edge || self.sheet == other.sheet
    }
}

/// Angle parametrization of a circle gap: `λ(θ) = mid − half·cos θ`, with
/// `θ ∈ (0, π)` on sheet 1 (from `α⁻` at `θ = 0` to `α⁺` at `θ = π`) and
/// `θ ∈ (π, 2π)` on sheet 2.
pub fn circle_angle(gap: &GapInfo, p: &SurfacePoint) -> f64 {
    let half = gap.half_width();
    let u = ((gap.midpoint() - p.lambda) / half).clamp(-1.0, 1.0);
    let theta = u.acos();
    if p.edge {
        if theta < 0.5 * PI {
            0.0
        } else {
            PI
        }
    } else {
        match p.sheet {
            Sheet::One => theta,
            Sheet::Two => 2.0 * PI - theta,
        }
    }
}

/// Inverse of [`circle_angle`].
pub fn point_at_angle(gap: &GapInfo, theta: f64) -> SurfacePoint {
    let th = theta.rem_euclid(2.0 * PI);
    let lambda = gap.midpoint() - gap.half_width() * th.cos();
    if th.abs() < EDGE_SNAP_ANGLE || (th - 2.0 * PI).abs() < EDGE_SNAP_ANGLE {
        SurfacePoint::edge(gap.alpha_minus)
    } else if (th - PI).abs() < EDGE_SNAP_ANGLE {
        SurfacePoint::edge(gap.alpha_plus)
    } else if th < PI {
        SurfacePoint::interior(lambda, Sheet::One)
    } else {
        SurfacePoint::interior(lambda, Sheet::Two)
    }
}

/// Membership of `x` in the clockwise oriented arc from `a` to `b` on the
/// circle gap; endpoints excluded, interior band edges included.
pub fn arc_contains(
    gap: &GapInfo,
    a: &SurfacePoint,
    b: &SurfacePoint,
    x: &SurfacePoint,
) -> Result<bool, SurfaceError> {
    for p in [a, b, x] {
        if p.lambda < gap.alpha_minus - 1e-9 || p.lambda > gap.alpha_plus + 1e-9 {
            return Err(SurfaceError::MixedGaps);
        }
    }
    let ta = circle_angle(gap, a);
    let tb = circle_angle(gap, b);
    let tx = circle_angle(gap, x);
    let da = (tx - ta).rem_euclid(2.0 * PI);
    let db = (tb - ta).rem_euclid(2.0 * PI);
    Ok(da > ANGLE_EPS && da < db - ANGLE_EPS)
}

/// The sheeted square root `b` on the circle gap `γ_n^c`:
/// `(−1)^{n+j+1} |Δ² − 1|^{1/2}` on sheet `j`, zero at the band edges, with
/// `b(λ_*) = −b(λ)`.
pub fn b_sheeted(v: &Potential, p: &SurfacePoint, gap: &GapInfo) -> Result<f64, SurfaceError> {
    let width_tol = 1e-9 * gap.width().max(1.0);
    if p.lambda < gap.alpha_minus - width_tol || p.lambda > gap.alpha_plus + width_tol {
        return Err(SurfaceError::OutsideGap { lambda: p.lambda });
    }
    if p.edge {
        return Ok(0.0);
    }
    let mono = monodromy(v, p.lambda, 0.0);
    Ok(b_from_mono(&mono, p, gap.n))
}

pub(crate) fn b_from_mono(mono: &Monodromy, p: &SurfacePoint, n: i64) -> f64 {
    if p.edge {
        return 0.0;
    }
    let d = mono.delta();
    let root = (d * d - 1.0).max(0.0).sqrt();
    let sign = if (n + p.sheet.index() as i64 + 1) % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    sign * root
}

/// An extended-real value of a Weyl function: finite, or the pole marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Pole,
}

impl ExtReal {
    pub fn is_pole(&self) -> bool {
        matches!(self, ExtReal::Pole)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(*x),
            ExtReal::Pole => None,
        }
    }

    fn from_value(x: f64) -> ExtReal {
        if x.is_finite() {
            ExtReal::Finite(x)
        } else {
            ExtReal::Pole
        }
    }
}

/// True when both `a − b` and `a + b` are negligible: the point is a band
/// edge carrying a Dirichlet or Neumann eigenvalue (`a = b = 0` there), and
/// branch selection must fall back to comparing `|φ₁|` with `|θ₂|`.
pub(crate) fn degenerate_edge(mono: &Monodromy, diff: f64, sum: f64) -> bool {
    diff.abs().max(sum.abs()) < 1e-9 * (1.0 + mono.phi1().abs() + mono.theta2().abs())
}

/// `m₊` and `m₋` at a gap point from monodromy data, evaluated through
/// whichever of the two algebraically equal forms
/// `(a ∓ b)/φ₁ = −θ₂/(a ± b)` avoids the numerator cancellation.
pub(crate) fn weyl_pair_from_mono(mono: &Monodromy, b: f64) -> (ExtReal, ExtReal) {
    let a = mono.a();
    let phi1 = mono.phi1();
    let theta2 = mono.theta2();
    let diff = a - b;
    let sum = a + b;
    let (m_plus, m_minus) = if degenerate_edge(mono, diff, sum) {
        // Dirichlet edge (φ₁ ≈ 0): both Weyl functions blow up; Neumann
        // edge (θ₂ ≈ 0): both vanish.
        if phi1.abs() > theta2.abs() {
            (diff / phi1, sum / phi1)
        } else {
            (-theta2 / sum, -theta2 / diff)
        }
    } else {
        (
            if diff.abs() >= sum.abs() {
                diff / phi1
            } else {
                -theta2 / sum
            },
            if sum.abs() >= diff.abs() {
                sum / phi1
            } else {
                -theta2 / diff
            },
        )
    };
    (ExtReal::from_value(m_plus), ExtReal::from_value(m_minus))
}

/// Weyl-Titchmarsh function `m₊(p, t)` of the right half-line problem.
pub fn m_plus(
    v: &Potential,
    p: &SurfacePoint,
    gap: &GapInfo,
    t: f64,
) -> Result<ExtReal, SurfaceError> {
    let b = b_sheeted(v, p, gap)?;
    let mono = monodromy(v, p.lambda, t);
    Ok(weyl_pair_from_mono(&mono, b).0)
}

/// Weyl-Titchmarsh function `m₋(p, t)` of the left half-line problem.
pub fn m_minus(
    v: &Potential,
    p: &SurfacePoint,
    gap: &GapInfo,
    t: f64,
) -> Result<ExtReal, SurfaceError> {
    let b = b_sheeted(v, p, gap)?;
    let mono = monodromy(v, p.lambda, t);
    Ok(weyl_pair_from_mono(&mono, b).1)
}

/// λ-derivatives `(∂_λ m₊, ∂_λ m₋)` from analytic monodromy derivatives.
/// Not defined at band edges, where `∂_λ b` blows up.
pub(crate) fn weyl_pair_dl(mono: &Monodromy, b: f64) -> (ExtReal, ExtReal) {
    let a = mono.a();
    let ap = mono.a_prime();
    let phi1 = mono.phi1();
    let phi1p = mono.phi1_prime();
    let theta2 = mono.theta2();
    let theta2p = mono.theta2_prime();
    let bp = mono.delta() * mono.delta_prime() / b; // b² = Δ² − 1
    let diff = a - b;
    let sum = a + b;
    let mp = if diff.abs() >= sum.abs() {
        ((ap - bp) * phi1 - diff * phi1p) / (phi1 * phi1)
    } else {
        (-theta2p * sum + theta2 * (ap + bp)) / (sum * sum)
    };
    let mm = if sum.abs() >= diff.abs() {
        ((ap + bp) * phi1 - sum * phi1p) / (phi1 * phi1)
    } else {
        (-theta2p * diff + theta2 * (ap - bp)) / (diff * diff)
    };
    (ExtReal::from_value(mp), ExtReal::from_value(mm))
}

/// Bloch solution `ψ⁺(x, p, t) = θ(x) + m₊(p, t) φ(x)`, exponentially
/// decaying as `x → +∞` for sheet-1 gap points.
pub fn bloch_solution(
    v: &Potential,
    p: &SurfacePoint,
    gap: &GapInfo,
    t: f64,
    x: f64,
) -> Result<RVec2, SurfaceError> {
    let m = match m_plus(v, p, gap, t)? {
        ExtReal::Finite(m) => m,
        ExtReal::Pole => return Err(SurfaceError::PoleOfM { lambda: p.lambda }),
    };
    let psi = fundamental(v, x, p.lambda, t);
    Ok(RVec2::new(
        psi.e[0][0] + m * psi.e[0][1],
        psi.e[1][0] + m * psi.e[1][1],
    ))
}

/// Bloch solution on a spectral band, where `m±` are complex conjugates:
/// `b = ±i√(1 − Δ²)`. Returns `θ + m φ` for the chosen sign.
pub fn bloch_band_solution(
    v: &Potential,
    lambda: f64,
    t: f64,
    x: f64,
    plus: bool,
) -> Result<CVec2, SurfaceError> {
    let mono = monodromy(v, lambda, t);
    let d = mono.delta();
    if d.abs() > 1.0 {
        return Err(SurfaceError::NotABandPoint { lambda });
    }
    let b = Complex64::new(0.0, (1.0 - d * d).max(0.0).sqrt());
    let b = if plus { b } else { -b };
    let m = (Complex64::new(mono.a(), 0.0) - b) / Complex64::new(mono.phi1(), 0.0);
    let psi = fundamental(v, x, Complex64::new(lambda, 0.0), t);
    Ok(CVec2::new(
        psi.e[0][0] + m * psi.e[0][1],
        psi.e[1][0] + m * psi.e[1][1],
    ))
}

/// Quasimomentum `k(λ)` on the bands: the continuous branch of
/// `arccos Δ(λ)` anchored by `k = πn` at the edges of gap `n`.
pub fn quasimomentum(v: &Potential, lambda: f64) -> Result<f64, SurfaceError> {
    let mono = monodromy(v, lambda, 0.0);
    let d = mono.delta();
    if d.abs() > 1.0 + 1e-9 {
        return Err(SurfaceError::NotABandPoint { lambda });
    }
    let count = -prufer_angle(v, lambda, 0.0) / PI;
    let rounded = count.round();
    let u = d.clamp(-1.0, 1.0).acos();
    if (count - rounded).abs() < 1e-2 && u.min(PI - u) < 1e-4 {
        // Band edge: k is exactly a multiple of π there.
        return Ok(PI * rounded);
    }
    let n = count.ceil() as i64;
    Ok(if n % 2 == 0 {
        PI * n as f64 - u
    } else {
        PI * (n - 1) as f64 + u
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::band_edges;

    fn two_step_gap(n_want: i64) -> (Potential, GapInfo) {
        let v = Potential::even_two_step(2.0);
        let gaps = band_edges(&v, (-8.0, 8.0), 600).unwrap();
        let gap = gaps
            .into_iter()
            .find(|g| g.n == n_want && !g.closed)
            .expect("open gap");
        (v, gap)
    }

    #[test]
    fn star_is_an_involution_and_fixes_edges() {
        let p = SurfacePoint::interior(1.0, Sheet::One);
        assert_eq!(p.star().sheet, Sheet::Two);
        assert_eq!(p.star().star().sheet, Sheet::One);
        let e = SurfacePoint::edge(2.0);
        assert!(e.star().edge);
    }

    #[test]
    fn circle_coordinates_round_trip() {
        let (_, gap) = two_step_gap(1);
        for i in 1..40 {
            let theta = 2.0 * PI * i as f64 / 40.0;
            if (theta - PI).abs() < 0.1 {
                continue;
            }
            let p = point_at_angle(&gap, theta);
            let back = circle_angle(&gap, &p);
            assert!((back - theta).abs() < 1e-12, "theta {theta} -> {back}");
        }
    }

    #[test]
    fn sheeted_root_flips_sign_under_star() {
        let (v, gap) = two_step_gap(1);
        let p = point_at_angle(&gap, 0.7);
        let b1 = b_sheeted(&v, &p, &gap).unwrap();
        let b2 = b_sheeted(&v, &p.star(), &gap).unwrap();
        assert!(b1 != 0.0);
        assert!((b1 + b2).abs() < 1e-12);
        let e = SurfacePoint::edge(gap.alpha_plus);
        assert_eq!(b_sheeted(&v, &e, &gap).unwrap(), 0.0);
        assert!(b_sheeted(
            &v,
            &SurfacePoint::interior(gap.alpha_plus + 1.0, Sheet::One),
            &gap
        )
        .is_err());
    }

    #[test]
    fn small_z_slope_of_b_matches_effective_mass() {
        // b on sheet 1 grows like (−1)ⁿ z √(2|M±|) in the edge coordinate
        // λ = α± ∓ z².
        let (v, gap) = two_step_gap(1);
        for (alpha, mass, inward) in [
            (gap.alpha_plus, gap.mass_plus, -1.0),
            (gap.alpha_minus, gap.mass_minus, 1.0),
        ] {
            let expected_slope = (2.0 * mass.abs()).sqrt();
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 1..=8 {
                let z = 1e-3 * k as f64;
                let lambda = alpha + inward * z * z;
                let p = SurfacePoint::interior(lambda, Sheet::One);
                let b = b_sheeted(&v, &p, &gap).unwrap();
                let target = if gap.n % 2 == 0 { b } else { -b };
                num += target * z;
                den += z * z;
            }
            let slope = num / den;
            assert!(
                (slope - expected_slope).abs() < 0.01 * expected_slope,
                "slope {slope} vs {expected_slope}"
            );
        }
    }

    #[test]
    fn weyl_symmetry_under_star() {
        let (v, gap) = two_step_gap(1);
        for &theta in &[0.4, 1.1, 2.0, 3.9, 5.2] {
            let p = point_at_angle(&gap, theta);
            let mp = m_plus(&v, &p.star(), &gap, 0.3).unwrap();
            let mm = m_minus(&v, &p, &gap, 0.3).unwrap();
            match (mp, mm) {
                (ExtReal::Finite(x), ExtReal::Finite(y)) => {
                    assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0))
                }
                (a, b) => assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn weyl_product_identity() {
        // m₊ m₋ = −θ₂/φ₁ away from poles.
        let (v, gap) = two_step_gap(1);
        for &theta in &[0.5, 1.3, 2.4, 4.0, 5.5] {
            let p = point_at_angle(&gap, theta);
            let mono = monodromy(&v, p.lambda, 0.7);
            let b = b_from_mono(&mono, &p, gap.n);
            let (mp, mm) = weyl_pair_from_mono(&mono, b);
            if let (ExtReal::Finite(x), ExtReal::Finite(y)) = (mp, mm) {
                let rhs = -mono.theta2() / mono.phi1();
                assert!(
                    (x * y - rhs).abs() < 1e-9 * rhs.abs().max(1.0),
                    "θ = {theta}"
                );
            }
        }
    }

    #[test]
    fn algebraic_identity_a2_b2() {
        let (v, gap) = two_step_gap(1);
        for &theta in &[0.3, 1.0, 2.2, 3.6, 5.0] {
            let p = point_at_angle(&gap, theta);
            let mono = monodromy(&v, p.lambda, 0.11);
            let b = b_from_mono(&mono, &p, gap.n);
            let lhs = mono.a() * mono.a() - b * b;
            let rhs = -mono.phi1() * mono.theta2();
            assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn herglotz_monotonicity_on_sheet_one() {
        // ∂_λ m₊ < 0 and ∂_λ m₋ > 0 on the sheet-1 gap closure, off poles.
        let (v, gap) = two_step_gap(1);
        let mut checked = 0;
        for i in 1..30 {
            let theta = PI * i as f64 / 30.0;
            let p = point_at_angle(&gap, theta);
            let mono = monodromy(&v, p.lambda, 0.0);
            let b = b_from_mono(&mono, &p, gap.n);
            if mono.phi1().abs() < 1e-3 {
                continue; // pole neighbourhood
            }
            let (dp, dm) = weyl_pair_dl(&mono, b);
            if let (ExtReal::Finite(dp), ExtReal::Finite(dm)) = (dp, dm) {
                assert!(dp < 0.0, "∂m₊ = {dp} at θ = {theta}");
                assert!(dm > 0.0, "∂m₋ = {dm} at θ = {theta}");
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn weyl_derivative_matches_finite_differences() {
        let (v, gap) = two_step_gap(1);
        let p = point_at_angle(&gap, 0.9);
        let mono = monodromy(&v, p.lambda, 0.4);
        let b = b_from_mono(&mono, &p, gap.n);
        let (dp, _) = weyl_pair_dl(&mono, b);
        let h = 1e-6;
        let at = |lam: f64| {
            let q = SurfacePoint::interior(lam, p.sheet);
            let mono = monodromy(&v, lam, 0.4);
            let b = b_from_mono(&mono, &q, gap.n);
            weyl_pair_from_mono(&mono, b).0.finite().unwrap()
        };
        let fd = (at(p.lambda + h) - at(p.lambda - h)) / (2.0 * h);
        let dp = dp.finite().unwrap();
        assert!((dp - fd).abs() < 1e-4 * dp.abs().max(1.0), "{dp} vs {fd}");
    }

    #[test]
    fn bloch_solution_decays_on_sheet_one() {
        let (v, gap) = two_step_gap(1);
        let p = point_at_angle(&gap, 1.2);
        let t = 0.37;
        let n5 = bloch_solution(&v, &p, &gap, t, 5.0).unwrap().norm();
        let n10 = bloch_solution(&v, &p, &gap, t, 10.0).unwrap().norm();
        let n15 = bloch_solution(&v, &p, &gap, t, 15.0).unwrap().norm();
        assert!(n10 < 0.9 * n5 && n15 < 0.9 * n10, "{n5} {n10} {n15}");
        // The sheet-2 partner grows.
        let q = p.star();
        let g5 = bloch_solution(&v, &q, &gap, t, 5.0).unwrap().norm();
        let g10 = bloch_solution(&v, &q, &gap, t, 10.0).unwrap().norm();
        assert!(g10 > g5);
    }

    #[test]
    fn bloch_star_symmetry_and_pole_at_dirichlet() {
        // ψ⁺(x, p_*) = ψ⁻(x, p) pointwise, and m₊ blows up at the
        // Dirichlet point with a(μ) = −b(μ) on its sheet.
        let (v, gap) = two_step_gap(1);
        let t = 0.41;
        let p = point_at_angle(&gap, 2.1);
        for &x in &[0.3, 1.2, 2.5] {
            let plus_star = bloch_solution(&v, &p.star(), &gap, t, x).unwrap();
            let mono = monodromy(&v, p.lambda, t);
            let b = b_from_mono(&mono, &p, gap.n);
            let mm = weyl_pair_from_mono(&mono, b).1.finite().unwrap();
            let psi = crate::transfer::fundamental(&v, x, p.lambda, t);
            let minus = RVec2::new(
                psi.e[0][0] + mm * psi.e[0][1],
                psi.e[1][0] + mm * psi.e[1][1],
            );
            assert!((plus_star.x1 - minus.x1).abs() < 1e-9 * minus.norm().max(1.0));
            assert!((plus_star.x2 - minus.x2).abs() < 1e-9 * minus.norm().max(1.0));
        }
        let mu = crate::spectrum::dirichlet_point(&v, &gap, t).unwrap();
        assert!(!mu.edge, "want an interior Dirichlet point here");
        let mono = monodromy(&v, mu.lambda, t);
        let b_mu = b_from_mono(&mono, &mu, gap.n);
        assert!(
            (mono.a() + b_mu).abs() < 1e-9 * b_mu.abs(),
            "pole rule a = −b fails: a = {}, b = {}",
            mono.a(),
            b_mu
        );
        // The value is a pole marker or numerically enormous.
        match m_plus(&v, &mu, &gap, t).unwrap() {
            ExtReal::Pole => {}
            ExtReal::Finite(m) => assert!(m.abs() > 1e9, "m₊ at μ should blow up, got {m}"),
        }
    }

    #[test]
    fn band_bloch_has_periodic_modulus() {
        let v = Potential::even_two_step(2.0);
        let lambda = 1.0;
        assert!(monodromy(&v, lambda, 0.0).delta().abs() < 1.0);
        for plus in [true, false] {
            for &x in &[0.2, 1.7, 3.3] {
                let a = bloch_band_solution(&v, lambda, 0.0, x, plus).unwrap();
                let b = bloch_band_solution(&v, lambda, 0.0, x + 1.0, plus).unwrap();
                assert!((a.norm() - b.norm()).abs() < 1e-9 * a.norm());
            }
        }
    }

    #[test]
    fn quasimomentum_free_and_anchored() {
        let free = Potential::free();
        for &l in &[0.5_f64, 2.0, -2.0, 4.0, -4.9] {
            let k = quasimomentum(&free, l).unwrap();
            assert!((k - l).abs() < 1e-9, "k({l}) = {k}");
        }
        // Gap edges carry k = πn, and k is monotone across a band.
        let (v, gap) = two_step_gap(1);
        let k_minus = quasimomentum(&v, gap.alpha_minus).unwrap();
        let k_plus = quasimomentum(&v, gap.alpha_plus).unwrap();
        assert!((k_minus - PI * gap.n as f64).abs() < 1e-6);
        assert!((k_plus - PI * gap.n as f64).abs() < 1e-6);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=40 {
            let l = gap.alpha_minus - 1.2 + 1.15 * i as f64 / 40.0;
            if let Ok(k) = quasimomentum(&v, l) {
                assert!(k >= prev - 1e-9, "k not monotone at λ = {l}");
                prev = k;
            }
        }
        assert!(quasimomentum(&v, gap.midpoint()).is_err());
    }

    // Case-by-case transcription of the clockwise-arc definition, used as
    // an oracle against the angle-interval implementation.
    fn arc_oracle(gap: &GapInfo, a: &SurfacePoint, b: &SurfacePoint, x: &SurfacePoint) -> bool {
        let am = gap.alpha_minus;
        let ap = gap.alpha_plus;
        let on_sheet1_closure = |p: &SurfacePoint| p.edge || p.sheet == Sheet::One;
        let on_sheet2_closure = |p: &SurfacePoint| p.edge || p.sheet == Sheet::Two;
        let is_edge_at = |p: &SurfacePoint, alpha: f64| p.edge && (p.lambda - alpha).abs() < 1e-12;
        let same = |p: &SurfacePoint, q: &SurfacePoint| p.approx_eq(q, 1e-12);

        // Both on the closed sheet-1 copy, pr a ≤ pr b.
        if on_sheet1_closure(a) && on_sheet1_closure(b) && a.lambda <= b.lambda {
            return !x.edge && x.sheet == Sheet::One && x.lambda > a.lambda && x.lambda < b.lambda;
        }
        // Both on the closed sheet-2 copy, pr b ≤ pr a.
        if on_sheet2_closure(a) && on_sheet2_closure(b) && b.lambda <= a.lambda {
            return !x.edge && x.sheet == Sheet::Two && x.lambda > b.lambda && x.lambda < a.lambda;
        }
        // a on the sheet-1 side (or α⁻), b on the sheet-2 side (or α⁻):
        // the arc passes through α⁺.
        if (is_edge_at(a, am) || (!a.edge && a.sheet == Sheet::One))
            && (is_edge_at(b, am) || (!b.edge && b.sheet == Sheet::Two))
            && !same(a, b)
        {
            let top = SurfacePoint::edge(ap);
            return same(x, &top) || arc_oracle(gap, a, &top, x) || arc_oracle(gap, &top, b, x);
        }
        // a on the sheet-2 side (or α⁺), b on the sheet-1 side (or α⁺):
        // the arc passes through α⁻.
        if (is_edge_at(a, ap) || (!a.edge && a.sheet == Sheet::Two))
            && (is_edge_at(b, ap) || (!b.edge && b.sheet == Sheet::One))
            && !same(a, b)
        {
            let bottom = SurfacePoint::edge(am);
            return same(x, &bottom)
                || arc_oracle(gap, a, &bottom, x)
                || arc_oracle(gap, &bottom, b, x);
        }
        // Same open sheet, reversed order: go around through a*.
        if !a.edge && !b.edge && a.sheet == b.sheet {
            let j = a.sheet.parity();
            if j * (b.lambda - a.lambda) > 0.0 {
                let astar = a.star();
                return same(x, &astar)
                    || arc_oracle(gap, a, &astar, x)
                    || arc_oracle(gap, &astar, b, x);
            }
        }
        false
    }

    #[test]
    fn arc_membership_matches_case_definition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
        let (_, gap) = two_step_gap(1);
        let random_point = |rng: &mut rand_chacha::ChaCha8Rng| {
            if rng.gen_bool(0.15) {
                if rng.gen_bool(0.5) {
                    point_at_angle(&gap, 0.0)
                } else {
                    point_at_angle(&gap, PI)
                }
            } else {
                point_at_angle(&gap, rng.gen_range(0.02..2.0 * PI - 0.02))
            }
        };
        let mut xor_checked = 0;
        for _ in 0..1000 {
            let a = random_point(&mut rng);
            let b = random_point(&mut rng);
            let x = random_point(&mut rng);
            if a.approx_eq(&b, 1e-9) || a.approx_eq(&x, 1e-9) || b.approx_eq(&x, 1e-9) {
                continue;
            }
            let got = arc_contains(&gap, &a, &b, &x).unwrap();
            let want = arc_oracle(&gap, &a, &b, &x);
            assert_eq!(got, want, "a {a:?} b {b:?} x {x:?}");
            let rev = arc_contains(&gap, &b, &a, &x).unwrap();
            assert!(got ^ rev, "xor fails for a {a:?} b {b:?} x {x:?}");
            xor_checked += 1;
        }
        assert!(xor_checked > 800);
    }
}
