use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::Result;
use crate::lagrangian::ParticleSample;

pub const PARTICLE_COLUMNS: [&str; 8] = [
    "t",
    "seed_id",
    "x1",
    "x2",
    "x3",
    "rho_interp",
    "rho_carried",
    "flux_integral",
];

/// Shortest round-trip decimal form, so rows are reproducible to the bit.
fn num(v: f64) -> String {
    format!("{v:e}")
}

pub struct DiagnosticsCsv {
    out: BufWriter<File>,
}

impl DiagnosticsCsv {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", DiagnosticsRecord::CSV_COLUMNS.join(","))?;
        Ok(Self { out })
    }

    pub fn write(&mut self, r: &DiagnosticsRecord) -> Result<()> {
        let row: Vec<String> = r.csv_values().iter().map(|v| num(*v)).collect();
        writeln!(self.out, "{}", row.join(","))?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub struct ParticlesCsv {
    out: BufWriter<File>,
}

impl ParticlesCsv {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", PARTICLE_COLUMNS.join(","))?;
        Ok(Self { out })
    }

    pub fn write(&mut self, t: f64, samples: &[ParticleSample]) -> Result<()> {
        for s in samples {
            let [x1, x2, x3] = s.position;
            writeln!(
                self.out,
                "{},{},{},{},{},{},{},{}",
                num(t),
                s.seed_id,
                num(x1),
                num(x2),
                num(x3),
                num(s.rho_interp),
                num(s.rho_carried),
                num(s.flux_integral)
            )?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorridorVerdict {
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_lower: f64,
    pub rho_upper: f64,
    /// `"PASS"` or `"FAIL"`.
    pub verdict: String,
    pub max_log_rho_excursion: f64,
    pub max_flux_excursion: f64,
}

/// End-of-run report, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    /// `"ok"` or `"blow_up"`.
    pub status: String,
    pub error: Option<String>,
    pub steps: usize,
    pub t_final: f64,
    pub c0_target: f64,
    pub c0_achieved: f64,
    pub c0_shrunk: bool,
    pub a_functional: f64,
    pub energy_residual: f64,
    pub max_abs_energy_residual: f64,
    pub max_res_momdecomp: f64,
    pub max_res_poissonflux: f64,
    pub max_res_wv: f64,
    pub max_div_h: f64,
    pub max_particle_mismatch: f64,
    pub corridor: CorridorVerdict,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}
