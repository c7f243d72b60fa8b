//! CSV and JSON artifacts.
//!
//! Floats in CSV files are written with 17 significant digits so that a
//! profile read back reproduces the stored doubles exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::analysis::ThresholdBracket;
use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::minimizer::{HistoryEntry, MinimizeResult};
use crate::shooting::{GroundState, ShootTrajectory};

/// Relative tolerance on node spacing when reading a profile back.
const SPACING_TOL: f64 = 1e-9;

pub fn write_profile<W: Write>(u: &RadialField, mut out: W) -> Result<()> {
    writeln!(out, "r,u")?;
    for (r, v) in u.grid().nodes().iter().zip(u.values()) {
        writeln!(out, "{r:.16e},{v:.16e}")?;
    }
    Ok(())
}

pub fn save_profile(u: &RadialField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_profile(u, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Read an `r,u` profile. The nodes must start at zero and be uniform.
pub fn read_profile<R: Read>(input: R) -> Result<RadialField> {
    let mut lines = BufReader::new(input).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty profile".into()))??;
    if header.trim() != "r,u" {
        return Err(Error::Parse(format!(
            "expected header `r,u`, got `{}`",
            header.trim()
        )));
    }
    let mut rs = Vec::new();
    let mut us = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (r, u) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected two columns", k + 2)))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))
        };
        rs.push(parse(r)?);
        us.push(parse(u)?);
    }
    let n = rs.len();
    if n < 2 {
        return Err(Error::Sizing(format!("profile has {n} rows")));
    }
    if rs[0] != 0.0 {
        return Err(Error::Parse(format!("first node must be 0, got {}", rs[0])));
    }
    let grid = Arc::new(RadialGrid::new(rs[n - 1], n)?);
    let h = grid.spacing();
    for (i, (r, expect)) in rs.iter().zip(grid.nodes()).enumerate() {
        if (r - expect).abs() > SPACING_TOL * h.max(1.0) * (i as f64).max(1.0) {
            return Err(Error::Parse(format!(
                "non-uniform node {i}: {r} (expected {expect})"
            )));
        }
    }
    RadialField::new(grid, us)
}

pub fn load_profile(path: &Path) -> Result<RadialField> {
    read_profile(File::open(path)?)
}

pub fn write_trajectory<W: Write>(t: &ShootTrajectory, mut out: W) -> Result<()> {
    writeln!(out, "r,f,g")?;
    for s in &t.samples {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", s.r, s.f, s.g)?;
    }
    Ok(())
}

pub fn save_trajectory(t: &ShootTrajectory, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trajectory(t, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_history<W: Write>(history: &[HistoryEntry], mut out: W) -> Result<()> {
    writeln!(out, "iter,energy,residual,step")?;
    for e in history {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e}",
            e.iter, e.energy, e.residual, e.step
        )?;
    }
    Ok(())
}

pub fn save_history(history: &[HistoryEntry], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_history(history, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Summary of a minimization. `energy` is the full breakdown.
pub fn minimize_json(r: &MinimizeResult) -> Value {
    json!({
        "energy": r.energy,
        "b": r.multiplier_b,
        "iterations": r.iterations,
        "residual": r.residual,
        "converged": r.converged,
        "status": r.status,
        "regime": r.regime,
        "i_estimate": r.i_estimate,
        "max_abs_u": r.field.max_abs(),
        "note": "radial computation: the energy is an upper bound on the infimum over all fields",
    })
}

pub fn ground_state_json(gs: &GroundState) -> Value {
    json!({
        "a": gs.a,
        "b": gs.b,
        "g0": gs.g0,
        "bracket": [gs.bracket.0, gs.bracket.1],
        "max_g": gs.max_g(),
        "tail_norm": gs.tail_norm(),
        "classification": gs.trajectory.classification,
    })
}

pub fn threshold_json(t: &ThresholdBracket) -> Value {
    json!({
        "a_lo": t.a_lo,
        "a_hi": t.a_hi,
        "tol_a": t.tol_a,
        "a0_upper_estimate": t.a0_upper_estimate,
        "probes": t.probes,
        "diagnostics": t.diagnostics,
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn save_json(v: &Value, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_round_trip_is_exact() {
        let g = Arc::new(RadialGrid::new(3.7, 101).unwrap());
        let u = RadialField::from_fn(Arc::clone(&g), |r| 0.3 * (-r * r / 3.0).exp() + 1e-17 * r).unwrap();
        let mut buf = Vec::new();
        write_profile(&u, &mut buf).unwrap();
        let back = read_profile(buf.as_slice()).unwrap();
        assert_eq!(back.values(), u.values());
        assert_eq!(back.grid().nodes(), g.nodes());
    }

    #[test]
    fn malformed_profiles() {
        assert!(matches!(read_profile("".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(
            read_profile("x,y\n0,1\n".as_bytes()),
            Err(Error::Parse(_))
        ));
        let bad = "r,u\n0,1\n1,abc\n";
        assert!(matches!(read_profile(bad.as_bytes()), Err(Error::Parse(_))));
        let skew = "r,u\n".to_string()
            + &(0..20)
                .map(|i| format!("{},0\n", (i as f64).powi(2)))
                .collect::<String>();
        assert!(matches!(read_profile(skew.as_bytes()), Err(Error::Parse(_))));
        let short = "r,u\n0,0\n1,0\n";
        assert!(matches!(read_profile(short.as_bytes()), Err(Error::Sizing(_))));
    }

    #[test]
    fn history_csv_header() {
        let h = [HistoryEntry {
            iter: 0,
            energy: -1.0,
            residual: 0.5,
            step: 1.0,
        }];
        let mut buf = Vec::new();
        write_history(&h, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("iter,energy,residual,step\n0,"));
    }
}
