//! Trajectory CSV: `t,x1..xn,z1,z2..zm,u,y,Vp,mode,residual`.
//!
//! Floats are written in shortest round-trip form so a re-read file audits
//! bit-identically. `Vp` is empty for plants without storage.

use std::io::{Read, Write};

use pbc_core::{BoundaryMode, ClosedLoopState, Sample, Trajectory};

use crate::error::CliError;

pub fn header(n: usize, m: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("x{i}")));
    cols.extend((1..=m).map(|i| format!("z{i}")));
    cols.extend(["u", "y", "Vp", "mode", "residual"].map(String::from));
    cols
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = traj.first() else {
        w.flush()?;
        return Ok(());
    };
    w.write_record(header(first.state.x.len(), first.state.controller_dim()))?;
    for s in traj.samples() {
        let mut row = vec![format_float(s.t)];
        row.extend(s.state.x.iter().map(|v| format_float(*v)));
        row.push(format_float(s.state.z1));
        row.extend(s.state.z2.iter().map(|v| format_float(*v)));
        row.push(format_float(s.u));
        row.push(format_float(s.y));
        row.push(s.storage.map(format_float).unwrap_or_default());
        row.push(s.mode.letter().to_string());
        row.push(format_float(s.residual));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trajectory written by [`write_trajectory`]. Run metadata (step,
/// divergence) is not part of the file and comes back empty.
pub fn read_trajectory<R: Read>(input: R) -> Result<Trajectory, CliError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let n = headers.iter().filter(|h| h.starts_with('x')).count();
    let m = headers.iter().filter(|h| h.starts_with('z')).count();
    let expected = header(n, m);
    if headers.iter().ne(expected.iter().map(String::as_str)) || m == 0 {
        return Err(CliError::Io(format!(
            "unexpected CSV header `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut traj = Trajectory::new();
    for (row_idx, record) in r.records().enumerate() {
        let record = record?;
        let bad = |what: &str| CliError::Io(format!("row {}: bad {what}", row_idx + 1));
        let num = |i: usize| -> Result<f64, CliError> {
            record
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad(&expected[i]))
        };
        let t = num(0)?;
        let x = (1..=n).map(num).collect::<Result<Vec<_>, _>>()?;
        let z = (n + 1..=n + m).map(num).collect::<Result<Vec<_>, _>>()?;
        let base = n + m + 1;
        let storage = match record.get(base + 2) {
            Some("") => None,
            _ => Some(num(base + 2)?),
        };
        let mode = record
            .get(base + 3)
            .and_then(|s| s.chars().next())
            .and_then(BoundaryMode::from_letter)
            .ok_or_else(|| bad("mode"))?;
        traj.push(Sample {
            t,
            state: ClosedLoopState::new(x, z[0], z[1..].to_vec()),
            u: num(base)?,
            y: num(base + 1)?,
            storage,
            mode,
            residual: num(base + 4)?,
        })
        .map_err(|e| CliError::Io(format!("row {}: {e}", row_idx + 1)))?;
    }
    Ok(traj)
}
