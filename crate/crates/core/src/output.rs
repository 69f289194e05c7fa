//! CSV and JSON emission. CSV floats carry 12 significant digits; absent values are empty fields.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scan::{Resonance, ResonanceScan};
use crate::spectral::CurveRow;
use crate::twomode::TrajectoryRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// `%.12g`-style formatting.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.11e}");
        let (mant, e) = s.split_once('e').unwrap();
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}e{e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Header plus string rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        wr.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            wr.write_record(r).map_err(io)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(std::io::Error::other(e)))
    }
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(w)?;
    Ok(())
}

pub fn trajectory_table(rec: &TrajectoryRecord) -> Table {
    let mut t = Table::new(&["t", "jz_mean_over_N", "jz_var", "frag", "jz_timeavg"]);
    for i in 0..rec.len() {
        t.push(vec![
            fmt_float(rec.times[i]),
            fmt_float(rec.jz_mean_over_n[i]),
            opt(rec.jz_var.as_ref().map(|v| v[i])),
            opt(rec.frag.as_ref().map(|v| v[i])),
            fmt_float(rec.jz_timeavg[i]),
        ]);
    }
    t
}

pub fn scan_table(scan: &ResonanceScan) -> Table {
    let mut t = Table::new(&[
        "omega_over_dE0",
        "lambda1",
        "jz_timeavg_over_N",
        "model",
        "variant",
        "u0n",
        "n_atoms",
        "calibration_hash",
        "missing",
    ]);
    for r in &scan.records {
        t.push(vec![
            fmt_float(r.omega_over_de0),
            fmt_float(r.lambda1),
            opt(r.jz_timeavg_over_n),
            r.model.name().into(),
            r.variant.name().into(),
            fmt_float(scan.spec.u0n),
            scan.spec.n_atoms.to_string(),
            scan.calibration_hash.clone(),
            r.missing.clone().unwrap_or_default(),
        ]);
    }
    t
}

pub fn resonance_table(res: &[Resonance]) -> Table {
    let mut t = Table::new(&["n", "omega_min_over_dE0", "depth", "fwhm", "value_min"]);
    for r in res {
        t.push(vec![r.n.to_string(), fmt_float(r.omega_min), fmt_float(r.depth), fmt_float(r.fwhm), fmt_float(r.value_min)]);
    }
    t
}

pub fn curves_table(rows: &[CurveRow]) -> Table {
    let mut t = Table::new(&["lambda", "omega", "delta_e", "kappa", "warn_two_mode"]);
    for r in rows {
        t.push(vec![
            fmt_float(r.lambda),
            fmt_float(r.omega),
            fmt_float(r.delta_e),
            fmt_float(r.kappa),
            r.warn_two_mode.to_string(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_float(1.0), "1");
        assert_eq!(fmt_float(0.1), "0.1");
        assert_eq!(fmt_float(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_float(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(fmt_float(1.23456789012345e-7), "1.23456789012e-7");
        assert_eq!(fmt_float(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt_float(123456.0), "123456");
    }
}
