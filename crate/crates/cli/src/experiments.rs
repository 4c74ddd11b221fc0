//! Built-in experiment suite: four dislocation scenarios with verifiable
//! outcomes, regenerated as plot data plus a pass/fail verdict.

use crate::output;
use anyhow::{Context, Result};
use disloc_core::dislocation::{locate_states, track_states, StateKind, StepControl};
use disloc_core::spectrum::{band_edges, dirichlet_point, neumann_point, GapInfo};
use disloc_core::Potential;
use serde::Serialize;
use std::fs;
use std::path::Path;

#[derive(Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

pub fn run_all(out: &Path) -> Result<Vec<Verdict>> {
    fs::create_dir_all(out)?;
    let verdicts = vec![
        monotone_winding(&out.join("winding"))?,
        eigenvalue_resonance_split(&out.join("split"))?,
        same_sheet_pairs(&out.join("same-sheet"))?,
        mass_gap_statics(&out.join("mass-gap"))?,
    ];
    fs::write(
        out.join("verdicts.json"),
        serde_json::to_string_pretty(&verdicts)?,
    )?;
    Ok(verdicts)
}

fn write_potential(dir: &Path, v: &Potential) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("potential.json"), serde_json::to_string_pretty(v)?)
        .context("writing potential")?;
    Ok(())
}

fn scan(v: &Potential, window: (f64, f64)) -> Result<Vec<GapInfo>> {
    band_edges(v, window, 900).map_err(|e| anyhow::anyhow!("band scan: {e}"))
}

/// A small sup-norm potential: both states run monotonically around the
/// first circle gaps with half a revolution per unit dislocation, clockwise
/// on the positive-λ side.
fn monotone_winding(dir: &Path) -> Result<Verdict> {
    let v = Potential::even_two_step(1.0);
    write_potential(dir, &v)?;
    let gaps = scan(&v, (-8.0, 8.0))?;
    output::emit_bands(&gaps, Some(dir))?;
    let steps: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let ctrl = StepControl {
        record_times: steps.clone(),
        ..StepControl::default()
    };
    let mut pass = true;
    let mut details = Vec::new();
    let mut summaries = Vec::new();
    for n in [1, -1] {
        let gap = gaps
            .iter()
            .find(|g| g.n == n && !g.closed)
            .context("expected open gap")?;
        let (tp, tm) = track_states(&v, gap, 0.0, 1.0, &ctrl)
            .map_err(|e| anyhow::anyhow!("tracking gap {n}: {e}"))?;
        output::write_track_csv(dir, n, &steps, &tp, &tm)?;
        summaries.push(output::track_summary(n, &tp, &tm));
        let expect = 0.5 * (n.signum() as f64);
        for traj in [&tp, &tm] {
            let w = traj.winding();
            let monotone = traj
                .angles
                .windows(2)
                .all(|s| (s[1] - s[0]) * expect.signum() >= -1e-9);
            if (w - expect).abs() > 0.02 || !monotone {
                pass = false;
            }
            details.push(format!("gap {n}: winding {w:.4} (want {expect})"));
        }
    }
    output::write_track_summary(dir, 0.0, 1.0, &summaries)?;
    Ok(Verdict {
        name: "monotone-winding".into(),
        pass,
        detail: details.join("; "),
    })
}

/// Even potential with `q₁ = 0`: for small dislocation every open gap holds
/// exactly one eigenvalue and one resonance, and the central gap is closed.
fn eigenvalue_resonance_split(dir: &Path) -> Result<Verdict> {
    let v = Potential::even_two_step(2.0);
    write_potential(dir, &v)?;
    let gaps = scan(&v, (-8.0, 8.0))?;
    output::emit_bands(&gaps, Some(dir))?;
    let central_closed = gaps.iter().any(|g| g.n == 0 && g.closed);
    let mut pass = central_closed;
    let mut rows = Vec::new();
    for &t in &[0.01, 0.02, 0.05] {
        for gap in gaps.iter().filter(|g| !g.closed && g.n.abs() <= 2) {
            let (a, b) = locate_states(&v, gap, t)
                .map_err(|e| anyhow::anyhow!("gap {} at t = {t}: {e}", gap.n))?;
            let kinds = [a.kind, b.kind];
            if !(kinds.contains(&StateKind::Eigenvalue) && kinds.contains(&StateKind::Resonance)) {
                pass = false;
            }
            rows.push((gap.n, a, b));
        }
        output::emit_states(t, &rows, Some(dir))?;
        rows.clear();
    }
    Ok(Verdict {
        name: "eigenvalue-resonance-split".into(),
        pass,
        detail: format!("central gap closed: {central_closed}; one eigenvalue + one resonance per open gap"),
    })
}

/// Large `q₁` concentrated at the period edges: in every open gap inside
/// `(−c, c)` both states move onto the same sheet, the physical one when
/// the Dirichlet point starts below the Neumann one.
fn same_sheet_pairs(dir: &Path) -> Result<Verdict> {
    let (c, delta, c2) = (20.0, 0.02, 2.0);
    let v = Potential::edge_wells_two_step(c, delta, c2);
    write_potential(dir, &v)?;
    let gaps = scan(&v, (-8.0, 8.0))?;
    output::emit_bands(&gaps, Some(dir))?;
    let t = 0.002;
    let mut pass = true;
    let mut details = Vec::new();
    let mut rows = Vec::new();
    for gap in gaps.iter().filter(|g| !g.closed) {
        if gap.alpha_minus < -c || gap.alpha_plus > c {
            continue;
        }
        let mu = dirichlet_point(&v, gap, 0.0)
            .map_err(|e| anyhow::anyhow!("gap {}: {e}", gap.n))?;
        let nu = neumann_point(&v, gap, 0.0).map_err(|e| anyhow::anyhow!("gap {}: {e}", gap.n))?;
        let want = if mu.lambda < nu {
            StateKind::Eigenvalue
        } else {
            StateKind::Resonance
        };
        let (a, b) =
            locate_states(&v, gap, t).map_err(|e| anyhow::anyhow!("gap {}: {e}", gap.n))?;
        if a.kind != want || b.kind != want {
            pass = false;
        }
        details.push(format!("gap {}: {:?}/{:?} want {want:?}", gap.n, a.kind, b.kind));
        rows.push((gap.n, a, b));
    }
    output::emit_states(t, &rows, Some(dir))?;
    Ok(Verdict {
        name: "same-sheet-pairs".into(),
        pass,
        detail: details.join("; "),
    })
}

/// Constant mass with an even coupling: the mass gap is exactly `(−m, m)`
/// and keeps two static virtual states at `±m` for every dislocation.
fn mass_gap_statics(dir: &Path) -> Result<Verdict> {
    let m = 1.0;
    let v = Potential::mass_with_two_step(m, 2.0);
    write_potential(dir, &v)?;
    let gaps = scan(&v, (-5.0, 5.0))?;
    output::emit_bands(&gaps, Some(dir))?;
    let g0 = gaps
        .iter()
        .find(|g| g.n == 0 && !g.closed)
        .context("expected an open central gap")?;
    let mut pass = (g0.alpha_minus + m).abs() < 1e-9 && (g0.alpha_plus - m).abs() < 1e-9;
    let mut rows = Vec::new();
    for &t in &[0.0, 0.2, 0.5, 0.9, 1.3] {
        let mu = dirichlet_point(&v, g0, t).map_err(|e| anyhow::anyhow!("{e}"))?;
        let nu = neumann_point(&v, g0, t).map_err(|e| anyhow::anyhow!("{e}"))?;
        if (mu.lambda + m).abs() > 1e-8 || (nu - m).abs() > 1e-8 {
            pass = false;
        }
        let (a, b) = locate_states(&v, g0, t).map_err(|e| anyhow::anyhow!("t = {t}: {e}"))?;
        if a.kind != StateKind::Virtual || b.kind != StateKind::Virtual {
            pass = false;
        }
        let mut lams = [a.point.lambda, b.point.lambda];
        lams.sort_by(|x, y| x.partial_cmp(y).unwrap());
        if (lams[0] + m).abs() > 1e-7 || (lams[1] - m).abs() > 1e-7 {
            pass = false;
        }
        rows.push((g0.n, a, b));
        output::emit_states(t, &rows, Some(dir))?;
        rows.clear();
    }
    Ok(Verdict {
        name: "mass-gap-statics".into(),
        pass,
        detail: format!(
            "gap ({:.9}, {:.9}), Dirichlet −m and Neumann +m pinned, virtual states at ±m",
            g0.alpha_minus, g0.alpha_plus
        ),
    })
}
