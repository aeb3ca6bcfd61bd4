use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fields::{GridSpec, Interpolation};
use crate::model::{Corridor, ModelParams, NonMonotone, PressureLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PressureKind {
    #[default]
    Gamma,
    NonMonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    Equilibrium,
    #[default]
    RandomSmooth,
    Manufactured,
}

impl FromStr for PressureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(Self::Gamma),
            "non_monotone" => Ok(Self::NonMonotone),
            _ => Err(Error::Config(format!(
                "unknown pressure law `{s}` (expected gamma | non_monotone)"
            ))),
        }
    }
}

impl FromStr for InitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equilibrium" => Ok(Self::Equilibrium),
            "random_smooth" => Ok(Self::RandomSmooth),
            "manufactured" => Ok(Self::Manufactured),
            _ => Err(Error::Config(format!(
                "unknown init mode `{s}` (expected equilibrium | random_smooth | manufactured)"
            ))),
        }
    }
}

impl PressureKind {
    fn name(self) -> &'static str {
        match self {
            Self::Gamma => "gamma",
            Self::NonMonotone => "non_monotone",
        }
    }
}

impl InitMode {
    fn name(self) -> &'static str {
        match self {
            Self::Equilibrium => "equilibrium",
            Self::RandomSmooth => "random_smooth",
            Self::Manufactured => "manufactured",
        }
    }
}

/// Everything a run needs. Parsed from flat `key = value` text where keys
/// are the field names below.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: usize,
    pub length: f64,
    pub mu: f64,
    pub lambda: f64,
    pub rho_tilde: f64,
    pub h_tilde: [f64; 3],
    pub pressure: PressureKind,
    /// Gamma law constant `K` in `P = Kρ^γ`.
    pub pressure_k: f64,
    pub gamma: f64,
    pub rho_prime: Option<f64>,
    pub rho_double_prime: Option<f64>,
    /// `P'(0)` of the non-monotone cubic.
    pub pressure_slope: f64,
    /// Position of the local pressure maximum between `ρ'` and `ρ''`.
    pub peak_fraction: f64,
    /// Corridor bounds and margin; default to `ρ̃/2`, `3ρ̃/2`, `ρ̃/4`.
    pub rho_lower: Option<f64>,
    pub rho_upper: Option<f64>,
    pub d: Option<f64>,
    pub init: InitMode,
    pub seed: u64,
    pub spectral_decay_rate: f64,
    pub target_c0: f64,
    /// Largest `|k|∞` of the random initial modes.
    pub max_mode: usize,
    pub manufactured_case: u32,
    pub manufactured_amplitude: f64,
    pub t_end: f64,
    /// Fixed step; the CFL rule is used when absent.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub diagnostics_every: usize,
    pub snapshot_every: usize,
    pub particles_every: usize,
    /// Seeds per axis; 0 disables particles.
    pub particle_lattice: usize,
    pub dealias: bool,
    pub deterministic: bool,
    pub spectral_interp: bool,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: 32,
            length: 2.0 * std::f64::consts::PI,
            mu: 0.1,
            lambda: 0.1,
            rho_tilde: 1.0,
            h_tilde: [1.0, 1.0, 1.0],
            pressure: PressureKind::Gamma,
            pressure_k: 1.0,
            gamma: 1.4,
            rho_prime: None,
            rho_double_prime: None,
            pressure_slope: 1.0,
            peak_fraction: 2.0 / 3.0,
            rho_lower: None,
            rho_upper: None,
            d: None,
            init: InitMode::RandomSmooth,
            seed: 0,
            spectral_decay_rate: 1.0,
            target_c0: 1e-2,
            max_mode: 3,
            manufactured_case: 1,
            manufactured_amplitude: 0.1,
            t_end: 1.0,
            dt: None,
            cfl: crate::dynamics::DEFAULT_CFL,
            diagnostics_every: 1,
            snapshot_every: 100,
            particles_every: 1,
            particle_lattice: 4,
            dealias: true,
            deterministic: true,
            spectral_interp: false,
            output: PathBuf::from("mhd0_out"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "cannot parse `{value}` as a flag for key `{key}`"
        ))),
    }
}

fn parse_triple(key: &str, value: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "key `{key}` needs 3 numbers, got `{value}`"
        )));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_value(key, p)?;
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
            cfg.set(key, value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one key from its text form. Does not re-validate.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let opt = |v: &str| -> Result<Option<f64>> {
            if v == "none" {
                Ok(None)
            } else {
                parse_value(key, v).map(Some)
            }
        };
        match key {
            "grid" => self.grid = parse_value(key, value)?,
            "length" => self.length = parse_value(key, value)?,
            "mu" => self.mu = parse_value(key, value)?,
            "lambda" => self.lambda = parse_value(key, value)?,
            "rho_tilde" => self.rho_tilde = parse_value(key, value)?,
            "h_tilde" => self.h_tilde = parse_triple(key, value)?,
            "pressure" => self.pressure = value.parse()?,
            "pressure_k" => self.pressure_k = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "rho_prime" => self.rho_prime = opt(value)?,
            "rho_double_prime" => self.rho_double_prime = opt(value)?,
            "pressure_slope" => self.pressure_slope = parse_value(key, value)?,
            "peak_fraction" => self.peak_fraction = parse_value(key, value)?,
            "rho_lower" => self.rho_lower = opt(value)?,
            "rho_upper" => self.rho_upper = opt(value)?,
            "d" => self.d = opt(value)?,
            "init" => self.init = value.parse()?,
            "seed" => self.seed = parse_value(key, value)?,
            "spectral_decay_rate" => self.spectral_decay_rate = parse_value(key, value)?,
            "target_c0" => self.target_c0 = parse_value(key, value)?,
            "max_mode" => self.max_mode = parse_value(key, value)?,
            "manufactured_case" => self.manufactured_case = parse_value(key, value)?,
            "manufactured_amplitude" => self.manufactured_amplitude = parse_value(key, value)?,
            "t_end" => self.t_end = parse_value(key, value)?,
            "dt" => self.dt = opt(value)?,
            "cfl" => self.cfl = parse_value(key, value)?,
            "diagnostics_every" => self.diagnostics_every = parse_value(key, value)?,
            "snapshot_every" => self.snapshot_every = parse_value(key, value)?,
            "particles_every" => self.particles_every = parse_value(key, value)?,
            "particle_lattice" => self.particle_lattice = parse_value(key, value)?,
            "dealias" => self.dealias = parse_bool(key, value)?,
            "deterministic" => self.deterministic = parse_bool(key, value)?,
            "spectral_interp" => self.spectral_interp = parse_bool(key, value)?,
            "output" => self.output = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Text form accepted by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |v| format!("{v:e}"));
        let h = self.h_tilde;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("grid", self.grid.to_string());
        kv("length", format!("{:e}", self.length));
        kv("mu", format!("{:e}", self.mu));
        kv("lambda", format!("{:e}", self.lambda));
        kv("rho_tilde", format!("{:e}", self.rho_tilde));
        kv("h_tilde", format!("{:e}, {:e}, {:e}", h[0], h[1], h[2]));
        kv("pressure", self.pressure.name().into());
        kv("pressure_k", format!("{:e}", self.pressure_k));
        kv("gamma", format!("{:e}", self.gamma));
        kv("rho_prime", opt(self.rho_prime));
        kv("rho_double_prime", opt(self.rho_double_prime));
        kv("pressure_slope", format!("{:e}", self.pressure_slope));
        kv("peak_fraction", format!("{:e}", self.peak_fraction));
        kv("rho_lower", opt(self.rho_lower));
        kv("rho_upper", opt(self.rho_upper));
        kv("d", opt(self.d));
        kv("init", self.init.name().into());
        kv("seed", self.seed.to_string());
        kv(
            "spectral_decay_rate",
            format!("{:e}", self.spectral_decay_rate),
        );
        kv("target_c0", format!("{:e}", self.target_c0));
        kv("max_mode", self.max_mode.to_string());
        kv("manufactured_case", self.manufactured_case.to_string());
        kv(
            "manufactured_amplitude",
            format!("{:e}", self.manufactured_amplitude),
        );
        kv("t_end", format!("{:e}", self.t_end));
        kv("dt", opt(self.dt));
        kv("cfl", format!("{:e}", self.cfl));
        kv("diagnostics_every", self.diagnostics_every.to_string());
        kv("snapshot_every", self.snapshot_every.to_string());
        kv("particles_every", self.particles_every.to_string());
        kv("particle_lattice", self.particle_lattice.to_string());
        kv("dealias", self.dealias.to_string());
        kv("deterministic", self.deterministic.to_string());
        kv("spectral_interp", self.spectral_interp.to_string());
        kv("output", self.output.display().to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.grid_spec()?;
        self.model_params()?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return bad(format!("cfl must be positive, got {}", self.cfl));
        }
        if self.diagnostics_every == 0 || self.snapshot_every == 0 || self.particles_every == 0 {
            return bad("cadences must be at least 1".into());
        }
        match self.init {
            InitMode::RandomSmooth => {
                if !(self.target_c0 > 0.0 && self.target_c0.is_finite()) {
                    return bad(format!(
                        "target_c0 must be positive, got {}",
                        self.target_c0
                    ));
                }
                if !(self.spectral_decay_rate >= 0.0 && self.spectral_decay_rate.is_finite()) {
                    return bad(format!(
                        "spectral_decay_rate must be >= 0, got {}",
                        self.spectral_decay_rate
                    ));
                }
                if self.max_mode == 0 || 2 * self.max_mode >= self.grid {
                    return bad(format!(
                        "max_mode must lie in [1, grid/2), got {} for grid {}",
                        self.max_mode, self.grid
                    ));
                }
            }
            InitMode::Manufactured => {
                crate::dynamics::ManufacturedCase::new(
                    self.manufactured_case,
                    self.manufactured_amplitude,
                )?;
            }
            InitMode::Equilibrium => {}
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid, self.length).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let law = match self.pressure {
            PressureKind::Gamma => PressureLaw::gamma_law(self.pressure_k, self.gamma)?,
            PressureKind::NonMonotone => {
                let (Some(rp), Some(rpp)) = (self.rho_prime, self.rho_double_prime) else {
                    return Err(Error::Config(
                        "non_monotone pressure needs rho_prime and rho_double_prime".into(),
                    ));
                };
                PressureLaw::NonMonotone(NonMonotone::from_landmarks(
                    rp,
                    rpp,
                    self.pressure_slope,
                    self.peak_fraction,
                )?)
            }
        };
        let rt = self.rho_tilde;
        let corridor = Corridor {
            rho_lower: self.rho_lower.unwrap_or(0.5 * rt),
            rho_upper: self.rho_upper.unwrap_or(1.5 * rt),
            d: self.d.unwrap_or(0.25 * rt),
        };
        ModelParams::new(self.mu, self.lambda, rt, self.h_tilde, law, corridor)
    }

    pub fn interpolation(&self) -> Interpolation {
        if self.spectral_interp {
            Interpolation::Spectral
        } else {
            Interpolation::Trilinear
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_defaults() {
        let cfg = RunConfig::parse(
            "# small run\ngrid = 16\nh_tilde = 1, 0 ,2\n\ninit = equilibrium # trailing\ndealias = off\ndt = 0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.grid, 16);
        assert_eq!(cfg.h_tilde, [1.0, 0.0, 2.0]);
        assert_eq!(cfg.init, InitMode::Equilibrium);
        assert!(!cfg.dealias);
        assert_eq!(cfg.dt, Some(0.01));
        assert_eq!(cfg.mu, RunConfig::default().mu);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.pressure = PressureKind::NonMonotone;
        cfg.rho_prime = Some(0.8);
        cfg.rho_double_prime = Some(1.2);
        cfg.dt = Some(1.0 / 3.0);
        cfg.output = PathBuf::from("some/dir");
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "grid 16",
            "colour = red",
            "grid = 16\ngrid = 32",
            "grid = sixteen",
            "grid = 1",
            "t_end = 0",
            "diagnostics_every = 0",
            "rho_lower = 1.0",
            "pressure = non_monotone",
            "init = random_smooth\ntarget_c0 = 0",
            "grid = 8\nmax_mode = 4",
            "init = manufactured\nmanufactured_case = 7",
            "dealias = maybe",
        ] {
            assert!(
                matches!(
                    RunConfig::parse(text),
                    Err(Error::Config(_) | Error::InvalidParams(_))
                ),
                "{text}"
            );
        }
    }

    #[test]
    fn non_monotone_params() {
        let cfg =
            RunConfig::parse("pressure = non_monotone\nrho_prime = 0.8\nrho_double_prime = 1.2")
                .unwrap();
        let p = cfg.model_params().unwrap();
        assert_eq!(p.pressure.landmarks(1.0), (0.8, 1.2));
    }
}
