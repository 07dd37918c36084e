//! Parameter-slice sweeps and crisis traces, written as CSV.

use std::io::Write;

use anyhow::{bail, Result};
use bcnf::bifurcation::{trace_ht_curve, CurveTrace};
use bcnf::region::classify_region;
use bcnf::Params;
use rayon::prelude::*;
use serde::Serialize;

pub const SWEEP_HEADER: [&str; 11] = [
    "tau_L", "tau_R", "region_code", "rn_index", "phi", "phi_g", "J1", "J2", "sum_stable", "thm1",
    "thm2",
];

pub const TRACE_HEADER: [&str; 5] = ["tau_L", "tau_R_star", "residual", "iterations", "depth"];

/// `steps` evenly spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Range {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            bail!("range bounds must be finite, got [{min}, {max}]");
        }
        if min > max {
            bail!("range [{min}, {max}] is not ordered");
        }
        Ok(Self { min, max, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceConfig {
    pub delta_l: f64,
    pub delta_r: f64,
    pub tau_l: Range,
    pub tau_r: Range,
    pub n_max: usize,
}

/// One grid cell. `region_code` is `outside` (not in `Phi`), `phi` (in `Phi`
/// but not `Phi_BYG`), `byg` (in `Phi_BYG`, no `R_n` up to `n_max`) or `R<n>`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "tau_L")]
    pub tau_l: f64,
    #[serde(rename = "tau_R")]
    pub tau_r: f64,
    pub region_code: String,
    pub rn_index: Option<usize>,
    pub phi: Option<f64>,
    pub phi_g: Option<f64>,
    #[serde(rename = "J1")]
    pub j1: Option<f64>,
    #[serde(rename = "J2")]
    pub j2: Option<f64>,
    pub sum_stable: Option<f64>,
    pub thm1: Option<bool>,
    pub thm2: Option<bool>,
}

pub fn classify_row(xi: &Params, n_max: usize) -> SweepRow {
    let c = classify_region(xi, n_max);
    let region_code = match (c.in_phi, c.in_phi_byg, c.rn_index) {
        (false, _, _) => "outside".to_string(),
        (_, _, Some(n)) => format!("R{n}"),
        (true, true, None) => "byg".to_string(),
        (true, false, None) => "phi".to_string(),
    };
    SweepRow {
        tau_l: xi.tau_l,
        tau_r: xi.tau_r,
        region_code,
        rn_index: c.rn_index,
        phi: c.phi,
        phi_g: c.phi_g,
        j1: c.flags.map(|f| f.j1),
        j2: c.flags.map(|f| f.j2),
        sum_stable: c.flags.map(|f| f.sum_stable),
        thm1: c.flags.map(|f| f.thm1_applies),
        thm2: c.flags.map(|f| f.thm2_applies),
    }
}

/// Rows in row-major order: `tau_L` outer, `tau_R` inner.
pub fn sweep_rows(cfg: &SliceConfig) -> Vec<SweepRow> {
    let tl = cfg.tau_l.values();
    let tr = cfg.tau_r.values();
    let cells: Vec<(f64, f64)> = tl
        .iter()
        .flat_map(|&a| tr.iter().map(move |&b| (a, b)))
        .collect();
    cells
        .par_iter()
        .map(|&(a, b)| classify_row(&Params::new(a, cfg.delta_l, b, cfg.delta_r), cfg.n_max))
        .collect()
}

/// Seventeen significant digits; NaN and infinities as Rust prints them.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

impl SweepRow {
    pub fn record(&self) -> [String; 11] {
        [
            fmt_real(self.tau_l),
            fmt_real(self.tau_r),
            self.region_code.clone(),
            opt(self.rn_index, |n| n.to_string()),
            opt(self.phi, fmt_real),
            opt(self.phi_g, fmt_real),
            opt(self.j1, fmt_real),
            opt(self.j2, fmt_real),
            opt(self.sum_stable, fmt_real),
            opt(self.thm1, |b| b.to_string()),
            opt(self.thm2, |b| b.to_string()),
        ]
    }
}

pub fn write_sweep<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceConfig {
    pub delta_l: f64,
    pub delta_r: f64,
    pub tau_l: Range,
    pub tol: f64,
    pub depth: usize,
}

pub fn run_trace(cfg: &TraceConfig) -> Result<CurveTrace> {
    if !(cfg.tol > 0.0) {
        bail!("bisection tolerance must be positive, got {}", cfg.tol);
    }
    Ok(trace_ht_curve(cfg.delta_l, cfg.delta_r, &cfg.tau_l.values(), cfg.tol, cfg.depth))
}

pub fn write_trace<W: Write>(trace: &CurveTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for s in &trace.samples {
        w.write_record([
            fmt_real(s.tau_l),
            opt(s.tau_r_star, fmt_real),
            opt(s.residual, fmt_real),
            s.iterations.to_string(),
            s.depth.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(Range::new(0.0, 1.0, 0).unwrap().values(), Vec::<f64>::new());
        assert_eq!(Range::new(0.5, 1.0, 1).unwrap().values(), vec![0.5]);
        assert_eq!(Range::new(0.0, 1.0, 3).unwrap().values(), vec![0.0, 0.5, 1.0]);
        assert!(Range::new(1.0, 0.0, 3).is_err());
        assert!(Range::new(f64::NAN, 0.0, 3).is_err());
    }

    #[test]
    fn region_codes() {
        assert_eq!(classify_row(&Params::new(1.5, 0.2, -2.0, 0.5), 12).region_code, "R0");
        assert_eq!(classify_row(&Params::new(1.5, 0.2, -1.53, 0.5), 12).region_code, "R1");
        assert_eq!(classify_row(&Params::new(1.5, 0.2, -3.2, 0.5), 12).region_code, "phi");
        let out = classify_row(&Params::new(1.1, 0.2, -2.0, 0.5), 12);
        assert_eq!(out.region_code, "outside");
        assert_eq!(out.record()[4..].iter().filter(|s| s.is_empty()).count(), 7);
    }

    #[test]
    fn real_format_round_trips() {
        for x in [0.1, -1.727455, 1.0 / 3.0, 6.02e23, -5e-324] {
            assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
        }
    }
}
