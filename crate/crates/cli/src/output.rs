//! Serialization of results: JSON with stable field order, fixed-column
//! CSV for trajectories.

use anyhow::{Context, Result};
use disloc_core::dislocation::{State, StateKind, StateTrajectory};
use disloc_core::spectrum::GapInfo;
use serde::Serialize;
use std::fs;
use std::path::Path;

#[derive(Serialize)]
struct BandRow {
    n: i64,
    alpha_minus: f64,
    alpha_plus: f64,
    mu: f64,
    mu_sheet: u8,
    mu_edge: bool,
    nu: f64,
    mass_minus: f64,
    mass_plus: f64,
    closed: bool,
}

pub fn emit_bands(gaps: &[GapInfo], out: Option<&Path>) -> Result<()> {
    let rows: Vec<BandRow> = gaps
        .iter()
        .map(|g| BandRow {
            n: g.n,
            alpha_minus: g.alpha_minus,
            alpha_plus: g.alpha_plus,
            mu: g.mu.lambda,
            mu_sheet: if g.mu.edge { 0 } else { g.mu.sheet.index() },
            mu_edge: g.mu.edge,
            nu: g.nu,
            mass_minus: g.mass_minus,
            mass_plus: g.mass_plus,
            closed: g.closed,
        })
        .collect();
    emit_json(&rows, out, "bands.json")
}

#[derive(Serialize)]
struct StateRow {
    lambda: f64,
    sheet: u8,
    edge: bool,
    kind: StateKind,
    angle: f64,
}

#[derive(Serialize)]
struct GapStates {
    n: i64,
    states: [StateRow; 2],
}

#[derive(Serialize)]
struct StatesDoc {
    t: f64,
    gaps: Vec<GapStates>,
}

fn state_row(s: &State) -> StateRow {
    StateRow {
        lambda: s.point.lambda,
        sheet: if s.point.edge { 0 } else { s.point.sheet.index() },
        edge: s.point.edge,
        kind: s.kind,
        angle: s.angle,
    }
}

pub fn emit_states(t: f64, rows: &[(i64, State, State)], out: Option<&Path>) -> Result<()> {
    let doc = StatesDoc {
        t,
        gaps: rows
            .iter()
            .map(|(n, a, b)| GapStates {
                n: *n,
                states: [state_row(a), state_row(b)],
            })
            .collect(),
    };
    emit_json(&doc, out, "states.json")
}

fn kind_str(k: StateKind) -> &'static str {
    match k {
        StateKind::Eigenvalue => "eigenvalue",
        StateKind::Resonance => "resonance",
        StateKind::Virtual => "virtual",
    }
}

/// Fixed column order:
/// `t, lambda_plus, sheet_plus, angle_plus, lambda_minus, sheet_minus,
/// angle_minus, kind_plus, kind_minus`. Sheet 0 marks a band edge.
pub fn write_track_csv(
    out: &Path,
    n: i64,
    sample_times: &[f64],
    tp: &StateTrajectory,
    tm: &StateTrajectory,
) -> Result<()> {
    let mut csv = String::from(
        "t,lambda_plus,sheet_plus,angle_plus,lambda_minus,sheet_minus,angle_minus,kind_plus,kind_minus\n",
    );
    for &t in sample_times {
        let ip = tp
            .index_at(t, 1e-9)
            .with_context(|| format!("sample t = {t} missing from the plus trajectory"))?;
        let im = tm
            .index_at(t, 1e-9)
            .with_context(|| format!("sample t = {t} missing from the minus trajectory"))?;
        let (pp, pm) = (&tp.points[ip], &tm.points[im]);
        csv.push_str(&format!(
            "{:.12e},{:.12e},{},{:.12e},{:.12e},{},{:.12e},{},{}\n",
            t,
            pp.lambda,
            if pp.edge { 0 } else { pp.sheet.index() },
            tp.angles[ip],
            pm.lambda,
            if pm.edge { 0 } else { pm.sheet.index() },
            tm.angles[im],
            kind_str(tp.kinds[ip]),
            kind_str(tm.kinds[im]),
        ));
    }
    let path = out.join(format!("track_gap_{n}.csv"));
    fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
pub struct TrackSummary {
    n: i64,
    winding_plus: f64,
    winding_minus: f64,
    collisions_plus: Vec<(f64, f64)>,
    collisions_minus: Vec<(f64, f64)>,
}

pub fn track_summary(n: i64, tp: &StateTrajectory, tm: &StateTrajectory) -> TrackSummary {
    TrackSummary {
        n,
        winding_plus: tp.winding(),
        winding_minus: tm.winding(),
        collisions_plus: tp.collisions.clone(),
        collisions_minus: tm.collisions.clone(),
    }
}

#[derive(Serialize)]
struct TrackDoc<'a> {
    t0: f64,
    t1: f64,
    gaps: &'a [TrackSummary],
}

pub fn write_track_summary(out: &Path, t0: f64, t1: f64, summaries: &[TrackSummary]) -> Result<()> {
    let doc = TrackDoc {
        t0,
        t1,
        gaps: summaries,
    };
    let path = out.join("track_summary.json");
    fs::write(&path, serde_json::to_string_pretty(&doc)?)
        .with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize, Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String) -> Check {
        Check {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

pub fn emit_report(report: &[Check], out: Option<&Path>) -> Result<()> {
    for c in report {
        println!(
            "{:32} {}  {}",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let path = dir.join("report.json");
        fs::write(&path, serde_json::to_string_pretty(report)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>, file: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(file);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}
