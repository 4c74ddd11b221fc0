//! Brute-force verification of gap states by half-line shooting, with no
//! Weyl-function machinery involved.
//!
//! Inside a gap every solution of the dislocated system either grows or
//! decays exponentially on each half-line. Integrating backward from
//! `x = +L` (forward from `x = −L`) with arbitrary data makes the solution
//! decaying at `+∞` (`−∞`) dominant, exactly like a power iteration with
//! the per-period transfer matrix; their Wronskian at the match point
//! vanishes precisely at the eigenvalues. First-order grid discretizations
//! of Dirac operators produce spurious interior spectrum, so only exact
//! segment propagators are used here.

use crate::dislocation::swap_dislocation;
use crate::mat2::{wronskian, Vec2};
use crate::potential::Potential;
use crate::spectrum::{bisect, GapInfo};
use crate::transfer::{fundamental, monodromy};
use crate::RVec2;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    NotInsideGap { lambda: f64 },
    BadConfig(String),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::NotInsideGap { lambda } => {
                write!(f, "λ = {lambda} is not strictly inside a gap")
            }
            OracleError::BadConfig(msg) => write!(f, "bad oracle config: {msg}"),
        }
    }
}

impl std::error::Error for OracleError {}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Half-line truncation length in periods; grown adaptively when the
    /// gap decay rate is slow.
    pub l: f64,
    /// Match point for the Wronskian.
    pub match_point: f64,
    /// Renormalization interval in periods.
    pub renorm_every: f64,
    /// Angular inset of the scan grid from the gap edges.
    pub edge_inset: f64,
    /// Scan grid size over the gap.
    pub scan_points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            l: 30.0,
            match_point: 0.0,
            renorm_every: 1.0,
            edge_inset: 5e-3,
            scan_points: 600,
        }
    }
}

impl OracleConfig {
    fn validate(&self) -> Result<(), OracleError> {
        if self.l < 10.0 {
            return Err(OracleError::BadConfig("L must be at least 10".into()));
        }
        if !(self.renorm_every > 0.0 && self.renorm_every <= self.l) {
            return Err(OracleError::BadConfig(
                "renormalization interval must lie in (0, L]".into(),
            ));
        }
        Ok(())
    }

    /// Periods needed so that the truncation error is negligible at the
    /// per-period decay rate `arccosh |Δ(λ)|`.
    fn effective_periods(&self, v: &Potential, lambda: f64) -> usize {
        let d = monodromy(v, lambda, 0.0).delta().abs().max(1.0);
        let rate = (d + (d * d - 1.0).sqrt()).ln();
        let needed = if rate > 1e-12 { 40.0 / rate } else { f64::INFINITY };
        needed.max(self.l).min(20_000.0).ceil() as usize
    }
}

/// Wronskian at the match point of the two renormalized shooting
/// directions; its zeros in λ are the eigenvalues of the dislocated
/// operator. The sign is fixed by `reference` directions (from a
/// neighbouring λ) to keep the scan continuous.
fn match_wronskian(
    v: &Potential,
    t: f64,
    lambda: f64,
    cfg: &OracleConfig,
    reference: Option<(&RVec2, &RVec2)>,
) -> Result<(f64, RVec2, RVec2), OracleError> {
    cfg.validate()?;
    let periods = cfg.effective_periods(v, lambda);

    // Left half-line: potential V, forward from −L to 0.
    let step_left = fundamental(v, 1.0, lambda, 0.0);
    // Right half-line: potential V(· + t), backward from +L to 0.
    let step_right = fundamental(v, 1.0, lambda, t).inverse();

    let chunk = cfg.renorm_every.max(1.0).floor() as usize;
    let mut u = Vec2::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);
    let mut w_dir = u;
    let mut k = 0;
    while k < periods {
        let m = chunk.min(periods - k);
        for _ in 0..m {
            u = step_left.mul_vec(&u);
            w_dir = step_right.mul_vec(&w_dir);
        }
        u = u.scale(1.0 / u.norm());
        w_dir = w_dir.scale(1.0 / w_dir.norm());
        k += m;
    }

    // Carry both directions from x = 0 to the match point.
    if cfg.match_point != 0.0 {
        let xm = cfg.match_point;
        let carry = if xm > 0.0 {
            fundamental(v, xm, lambda, t)
        } else {
            fundamental(v, xm, lambda, 0.0)
        };
        u = carry.mul_vec(&u);
        w_dir = carry.mul_vec(&w_dir);
        u = u.scale(1.0 / u.norm());
        w_dir = w_dir.scale(1.0 / w_dir.norm());
    }

    if let Some((ru, rw)) = reference {
        if u.x1 * ru.x1 + u.x2 * ru.x2 < 0.0 {
            u = u.scale(-1.0);
        }
        if w_dir.x1 * rw.x1 + w_dir.x2 * rw.x2 < 0.0 {
            w_dir = w_dir.scale(-1.0);
        }
    }
    Ok((wronskian(&u, &w_dir), u, w_dir))
}

/// Wronskian mismatch of the decaying half-line solutions at `λ`; a zero
/// in λ marks an eigenvalue of the dislocated operator.
pub fn decaying_match(
    v: &Potential,
    t: f64,
    lambda: f64,
    cfg: &OracleConfig,
) -> Result<f64, OracleError> {
    if monodromy(v, lambda, 0.0).delta().abs() <= 1.0 {
        return Err(OracleError::NotInsideGap { lambda });
    }
    match_wronskian(v, t, lambda, cfg, None).map(|r| r.0)
}

/// Scans the open gap for eigenvalues of the dislocated operator: zeros
/// of the shooting Wronskian, located by sign change and bisection with
/// direction-continuous sign fixing.
pub fn eigenvalue_scan(
    v: &Potential,
    t: f64,
    gap: &GapInfo,
    cfg: &OracleConfig,
) -> Result<Vec<f64>, OracleError> {
    cfg.validate()?;
    if gap.closed {
        return Ok(Vec::new());
    }
    // Uniform grid in the circle angle resolves the edge neighbourhoods
    // quadratically in λ.
    let n = cfg.scan_points.max(64);
    let half = gap.half_width();
    let mid = gap.midpoint();
    let theta_lo = cfg.edge_inset;
    let theta_hi = PI - cfg.edge_inset;
    let lam_at = |i: usize| {
        let theta = theta_lo + (theta_hi - theta_lo) * i as f64 / (n - 1) as f64;
        mid - half * theta.cos()
    };

    let mut zeros = Vec::new();
    let mut prev: Option<(f64, f64, RVec2, RVec2)> = None;
    for i in 0..n {
        let lambda = lam_at(i);
        let reference = prev.as_ref().map(|(_, _, u, w)| (u, w));
        let (val, u, w_dir) = match_wronskian(v, t, lambda, cfg, reference)?;
        if let Some((prev_lambda, prev_val, prev_u, prev_w)) = prev.take() {
            if prev_val * val < 0.0 {
                let f = |x: f64| {
                    match_wronskian(v, t, x, cfg, Some((&prev_u, &prev_w)))
                        .map(|r| r.0)
                        .unwrap_or(f64::NAN)
                };
                zeros.push(bisect(&f, prev_lambda, lambda));
            }
        }
        prev = Some((lambda, val, u, w_dir));
    }
    Ok(zeros)
}

/// Resonance projections of the dislocated operator: the eigenvalues of
/// the swapped dislocation, found by the same shooting scan.
pub fn resonance_oracle(
    v: &Potential,
    t: f64,
    gap: &GapInfo,
    cfg: &OracleConfig,
) -> Result<Vec<f64>, OracleError> {
    let (q, tau) = swap_dislocation(v, t);
    eigenvalue_scan(&q, tau, gap, cfg)
}
