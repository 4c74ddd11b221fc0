//! The `validate` invariant suite and the `oracle-check` comparison.

use crate::output::Check;
use anyhow::Result;
use disloc_core::dislocation::{self, locate_states, riccati_rhs, StateKind};
use disloc_core::spectrum::GapInfo;
use disloc_core::surface::{
    b_sheeted, m_minus, m_plus, point_at_angle, ExtReal, Sheet, SurfacePoint,
};
use disloc_core::transfer::{fundamental, monodromy, phi_norm_sq};
use disloc_core::{oracle, Potential};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_validation(
    v: &Potential,
    gaps: &[GapInfo],
    t: f64,
    seed: u64,
    _tol_root: f64,
    tol_invariant: f64,
) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Vec::new();
    let open: Vec<&GapInfo> = gaps.iter().filter(|g| !g.closed).collect();

    // Unimodularity of the fundamental solution.
    {
        let mut worst = 0.0_f64;
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-1.0..2.0);
            let lambda: f64 = rng.gen_range(-8.0..8.0);
            let tt: f64 = rng.gen_range(-1.5..1.5);
            let det = fundamental(v, x, lambda, tt).det();
            worst = worst.max((det - 1.0).abs());
        }
        report.push(Check::new(
            "wronskian",
            worst < tol_invariant.max(1e-10),
            format!("max |det ψ − 1| = {worst:.3e}"),
        ));
    }

    // Growth bound in the operator norm.
    {
        let mut worst = 0.0_f64;
        let norm_p = v.norm_p();
        for _ in 0..100 {
            let lambda = Complex64::new(rng.gen_range(-6.0..6.0), rng.gen_range(-5.0..5.0));
            let x: f64 = rng.gen_range(0.0..1.0);
            let psi = fundamental(v, x, lambda, 0.0);
            let bound = (norm_p + lambda.im.abs() * x).exp();
            worst = worst.max(psi.op_norm() / bound);
        }
        report.push(Check::new(
            "growth-bound",
            worst <= 1.0 + 1e-8,
            format!("max |ψ|/bound = {worst:.12}"),
        ));
    }

    // Shift conjugation: ψ(1, λ, t) = ψ(t, λ) ψ(1, λ) ψ(t, λ)⁻¹ and the
    // t-invariance of the Lyapunov function.
    {
        let mut worst_conj = 0.0_f64;
        let mut worst_delta = 0.0_f64;
        for _ in 0..50 {
            let lambda: f64 = rng.gen_range(-6.0..6.0);
            let tt: f64 = rng.gen_range(-1.0..2.0);
            let lhs = monodromy(v, lambda, tt);
            let pt = fundamental(v, tt, lambda, 0.0);
            let rhs = pt * fundamental(v, 1.0, lambda, 0.0) * pt.inverse();
            worst_conj = worst_conj.max((lhs.psi - rhs).frobenius());
            worst_delta =
                worst_delta.max((lhs.delta() - monodromy(v, lambda, 0.0).delta()).abs());
        }
        report.push(Check::new(
            "shift-conjugation",
            worst_conj < 1e-9 && worst_delta < 1e-10,
            format!("conjugation {worst_conj:.3e}, Δ drift {worst_delta:.3e}"),
        ));
    }

    // Dirichlet norm identity ‖φ(·, μ)‖² = −φ₂ ∂_λφ₁ at μₙ(t).
    {
        let mut worst = 0.0_f64;
        let mut checked = 0;
        for gap in &open {
            if let Ok(mu) = disloc_core::spectrum::dirichlet_point(v, gap, t) {
                let mono = monodromy(v, mu.lambda, t);
                let lhs = phi_norm_sq(v, mu.lambda, t);
                let rhs = -mono.phi2() * mono.phi1_prime();
                worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
                checked += 1;
            }
        }
        report.push(Check::new(
            "dirichlet-norm-identity",
            checked > 0 && worst < 1e-7,
            format!("max rel err = {worst:.3e} over {checked} gaps"),
        ));
    }

    // Algebraic identities a² − b² = −φ₁θ₂ and m₊m₋ = −θ₂/φ₁, plus the
    // star symmetry of the Weyl functions.
    {
        let mut worst = 0.0_f64;
        let mut worst_star = 0.0_f64;
        for gap in &open {
            for i in 1..8 {
                let p = point_at_angle(gap, 0.75 * i as f64);
                let mono = monodromy(v, p.lambda, t);
                let b = b_sheeted(v, &p, gap).unwrap();
                let lhs = mono.a() * mono.a() - b * b;
                let rhs = -mono.phi1() * mono.theta2();
                worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
                if let (Ok(ExtReal::Finite(mp)), Ok(ExtReal::Finite(mm))) =
                    (m_plus(v, &p, gap, t), m_minus(v, &p, gap, t))
                {
                    let prod = -mono.theta2() / mono.phi1();
                    worst = worst.max((mp * mm - prod).abs() / prod.abs().max(1.0));
                }
                let b_star = b_sheeted(v, &p.star(), gap).unwrap();
                worst_star = worst_star.max((b + b_star).abs());
                if let (Ok(ExtReal::Finite(x)), Ok(ExtReal::Finite(y))) =
                    (m_plus(v, &p.star(), gap, t), m_minus(v, &p, gap, t))
                {
                    worst_star = worst_star.max((x - y).abs() / x.abs().max(1.0));
                }
            }
        }
        report.push(Check::new(
            "weyl-algebraic-identities",
            worst < tol_invariant && worst_star < 1e-12,
            format!("identities {worst:.3e}, star symmetry {worst_star:.3e}"),
        ));
    }

    // Derivative sign identities at the located states.
    {
        let mut ok = true;
        let mut detail = String::new();
        for gap in &open {
            match locate_states(v, gap, t) {
                Ok((a, b)) => {
                    for s in [a, b] {
                        match state_sign_check(v, gap, &s.point, t) {
                            Some(true) | None => {}
                            Some(false) => {
                                ok = false;
                                detail = format!("sign violated at gap {}", gap.n);
                            }
                        }
                    }
                }
                Err(e) => {
                    ok = false;
                    detail = format!("gap {}: {e}", gap.n);
                }
            }
        }
        if detail.is_empty() {
            detail = "sign of w′ matches the sheet at every located state".into();
        }
        report.push(Check::new("derivative-signs", ok, detail));
    }

    // Riccati flow of m₊ against central finite differences.
    {
        let mut worst_ratio = 0.0_f64;
        let mut checked = 0;
        'outer: for gap in &open {
            for _ in 0..40 {
                if checked >= 20 {
                    break 'outer;
                }
                let theta: f64 = rng.gen_range(0.2..std::f64::consts::PI - 0.2);
                let p = point_at_angle(gap, theta);
                let tt: f64 = rng.gen_range(0.05..0.95);
                if v.breakpoint_distance(tt) < 5e-3 {
                    continue;
                }
                let m_at = |s: f64| m_plus(v, &p, gap, s).ok().and_then(|m| m.finite());
                let (Some(m0), Some(mp1), Some(mm1), Some(mp2), Some(mm2)) = (
                    m_at(tt),
                    m_at(tt + 1e-4),
                    m_at(tt - 1e-4),
                    m_at(tt + 5e-5),
                    m_at(tt - 5e-5),
                ) else {
                    continue;
                };
                if m0.abs() > 1e3 {
                    continue;
                }
                let (q1, q2) = v.value_at(tt);
                let g = riccati_rhs(m0, p.lambda, q1, q2);
                let e1 = ((mp1 - mm1) / 2e-4 - g).abs();
                let e2 = ((mp2 - mm2) / 1e-4 - g).abs();
                if e1 > 1e-8 * (1.0 + g.abs()) {
                    // Quadratic convergence: halving h divides the error by 4.
                    worst_ratio = worst_ratio.max(e2 / e1);
                }
                checked += 1;
            }
        }
        report.push(Check::new(
            "riccati-flow",
            checked >= 10 && worst_ratio < 0.5,
            format!("worst halving ratio = {worst_ratio:.3} over {checked} points"),
        ));
    }

    report
}

/// Sign of `∂_λ w` at an interior state must be `(−1)^j`; edges and
/// Dirichlet-guard states are skipped (their sign identities are covered
/// by the edge-chart formulas).
fn state_sign_check(v: &Potential, gap: &GapInfo, p: &SurfacePoint, t: f64) -> Option<bool> {
    if p.edge {
        return None;
    }
    let h = 1e-7 * gap.width();
    let at = |lam: f64| {
        let q = SurfacePoint::interior(lam, p.sheet);
        dislocation::w(v, gap, &q, t).finite()
    };
    let (wp, wm) = (at(p.lambda + h)?, at(p.lambda - h)?);
    let slope = (wp - wm) / (2.0 * h);
    if slope.abs() < 1e-6 {
        return None;
    }
    let parity = match p.sheet {
        Sheet::One => -1.0,
        Sheet::Two => 1.0,
    };
    Some(slope * parity > 0.0)
}

pub fn run_oracle_check(v: &Potential, gaps: &[&GapInfo], t: f64) -> Result<Vec<Check>> {
    let cfg = oracle::OracleConfig::default();
    let mut report = Vec::new();
    for gap in gaps {
        let (a, b) = locate_states(v, gap, t)
            .map_err(|e| anyhow::anyhow!("locating states of gap {}: {e}", gap.n))?;
        let eig: Vec<f64> = [a, b]
            .iter()
            .filter(|s| s.kind == StateKind::Eigenvalue)
            .map(|s| s.point.lambda)
            .collect();
        let res: Vec<f64> = [a, b]
            .iter()
            .filter(|s| s.kind == StateKind::Resonance)
            .map(|s| s.point.lambda)
            .collect();
        let ora_e = oracle::eigenvalue_scan(v, t, gap, &cfg)?;
        let ora_r = oracle::resonance_oracle(v, t, gap, &cfg)?;
        let agree = |want: &[f64], got: &[f64]| -> (bool, f64) {
            if want.len() != got.len() {
                return (false, f64::NAN);
            }
            let mut worst = 0.0_f64;
            for (x, y) in want.iter().zip(got) {
                worst = worst.max((x - y).abs());
            }
            (worst < 1e-6, worst)
        };
        let (ok_e, d_e) = agree(&eig, &ora_e);
        let (ok_r, d_r) = agree(&res, &ora_r);
        report.push(Check::new(
            &format!("oracle-gap-{}", gap.n),
            ok_e && ok_r,
            format!(
                "{} eigenvalue(s) Δ={d_e:.2e}, {} resonance(s) Δ={d_r:.2e}",
                eig.len(),
                res.len()
            ),
        ));
    }
    Ok(report)
}
