use std::path::Path;
use std::sync::Arc;

use super::config::{InitMode, RunConfig};
use super::init::{generate_initial_data, InitialData};
use super::output::{CorridorVerdict, DiagnosticsCsv, ParticlesCsv, RunSummary};
use super::snapshot::write_snapshot;
use crate::diagnostics::{DiagnosticsRecord, DiagnosticsTracker};
use crate::dynamics::{Dynamics, FluidState, ManufacturedCase, ManufacturedForcing};
use crate::error::{Error, Result};
use crate::fields::{set_deterministic, Interpolation};
use crate::lagrangian::{CorridorCertificate, CorridorTracker, ParticleSample, ParticleSet};
use crate::model::ModelParams;

/// A stepping solver with its diagnostic trackers and particles.
pub struct Simulation {
    config: RunConfig,
    params: ModelParams,
    dynamics: Dynamics,
    interp: Interpolation,
    initial: InitialData,
    state: FluidState,
    particles: Option<ParticleSet>,
    diagnostics: DiagnosticsTracker,
    corridor: CorridorTracker,
    dissipation_integral: f64,
    steps: usize,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        set_deterministic(config.deterministic);
        let initial = generate_initial_data(&config)?;
        Self::with_initial(config, initial)
    }

    /// Starts from a given state, e.g. one read from a snapshot.
    pub fn from_state(config: RunConfig, state: FluidState) -> Result<Self> {
        config.validate()?;
        set_deterministic(config.deterministic);
        config.grid_spec()?.ensure_compatible(state.grid())?;
        let c0 = super::init::initial_size(&state, &config.model_params()?)?;
        let initial = InitialData {
            state,
            c0_target: c0,
            c0_achieved: c0,
            shrunk: false,
        };
        Self::with_initial(config, initial)
    }

    fn with_initial(config: RunConfig, initial: InitialData) -> Result<Self> {
        let params = config.model_params()?;
        let mut dynamics = Dynamics::new(params.clone())
            .with_dealias(config.dealias)
            .with_cfl(config.cfl);
        if config.init == InitMode::Manufactured {
            let case =
                ManufacturedCase::new(config.manufactured_case, config.manufactured_amplitude)?;
            dynamics = dynamics.with_forcing(Arc::new(ManufacturedForcing::new(
                case,
                params.clone(),
                config.dealias,
            )));
        }
        let interp = config.interpolation();
        let state = initial.state.clone();
        state.ensure_admissible()?;
        let particles = match config.particle_lattice {
            0 => None,
            m => Some(ParticleSet::lattice(&state, m)?),
        };
        let mut corridor = CorridorTracker::new(&params);
        corridor.observe(&state, particles.as_ref());
        Ok(Self {
            diagnostics: DiagnosticsTracker::new(params.clone()),
            config,
            params,
            dynamics,
            interp,
            initial,
            state,
            particles,
            corridor,
            dissipation_integral: 0.0,
            steps: 0,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn initial(&self) -> &InitialData {
        &self.initial
    }

    pub fn state(&self) -> &FluidState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn particles(&self) -> Option<&ParticleSet> {
        self.particles.as_ref()
    }

    /// `∫₀ᵗ D ds` accumulated with the integrator's stage weights.
    pub fn dissipation_integral(&self) -> f64 {
        self.dissipation_integral
    }

    /// Step size the configuration asks for at the current time, never
    /// overshooting `t_end`. Zero once `t_end` is reached.
    pub fn next_dt(&self) -> f64 {
        let remaining = self.config.t_end - self.state.t;
        if remaining <= 1e-12 * self.config.t_end {
            return 0.0;
        }
        match self.config.dt {
            Some(_) => self.fixed_dt().min(remaining),
            None => self.dynamics.cfl_dt(&self.state).min(remaining),
        }
    }

    /// `t_end` split into equal steps no longer than the configured `dt`.
    fn fixed_dt(&self) -> f64 {
        let dt = self.config.dt.unwrap_or(self.config.t_end);
        self.config.t_end / (self.config.t_end / dt - 1e-9).ceil().max(1.0)
    }

    /// Number of steps a fixed-step run takes, if `dt` is configured.
    pub fn planned_steps(&self) -> Option<usize> {
        self.config
            .dt
            .map(|dt| (self.config.t_end / dt - 1e-9).ceil().max(1.0) as usize)
    }

    /// Advances fields, particles and the dissipation integral by `dt`.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let out = self.dynamics.step_rk4_with_stages(&self.state, dt)?;
        if let Some(p) = &self.particles {
            self.particles =
                Some(p.carry_log_density(&out.stages, &self.params, dt, self.interp)?);
        }
        self.state = out.state;
        self.dissipation_integral += out.dissipation;
        self.steps += 1;
        self.corridor.observe(&self.state, self.particles.as_ref());
        Ok(())
    }

    /// Diagnostics at the current state. Feeds the running A functional, so
    /// call it once per recorded time, in time order.
    pub fn record(&mut self) -> Result<DiagnosticsRecord> {
        let deriv = self.dynamics.rhs(&self.state)?;
        self.diagnostics
            .record(&self.state, &deriv, self.dissipation_integral)
    }

    pub fn particle_samples(&self) -> Vec<ParticleSample> {
        self.particles
            .as_ref()
            .map(|p| p.samples(&self.state, self.interp))
            .unwrap_or_default()
    }

    pub fn certificate(&self) -> CorridorCertificate {
        self.corridor.certificate()
    }
}

#[derive(Default)]
struct Extremes {
    last: Option<DiagnosticsRecord>,
    energy: f64,
    momdecomp: f64,
    poissonflux: f64,
    wv: f64,
    div_h: f64,
    particle_mismatch: f64,
}

impl Extremes {
    fn add(&mut self, r: &DiagnosticsRecord) {
        self.energy = self.energy.max(r.energy_residual.abs());
        self.momdecomp = self.momdecomp.max(r.res_momdecomp);
        self.poissonflux = self.poissonflux.max(r.res_poissonflux);
        self.wv = self.wv.max(r.res_wv);
        self.div_h = self.div_h.max(r.div_h_l2);
        self.last = Some(*r);
    }

    fn add_particles(&mut self, samples: &[ParticleSample], rho_tilde: f64) {
        for s in samples {
            let m = (s.rho_carried - s.rho_interp).abs() / rho_tilde;
            self.particle_mismatch = self.particle_mismatch.max(m);
        }
    }
}

fn summarize(sim: &Simulation, ex: &Extremes, error: Option<&Error>) -> RunSummary {
    let cert = sim.certificate();
    let last = ex.last.unwrap_or_default();
    let fold = |f: fn(&crate::lagrangian::ParticleExcursion) -> f64| {
        cert.particles.iter().map(f).fold(0.0, f64::max)
    };
    RunSummary {
        status: if error.is_some() { "blow_up" } else { "ok" }.into(),
        error: error.map(|e| e.to_string()),
        steps: sim.steps(),
        t_final: sim.time(),
        c0_target: sim.initial().c0_target,
        c0_achieved: sim.initial().c0_achieved,
        c0_shrunk: sim.initial().shrunk,
        a_functional: last.a_functional,
        energy_residual: last.energy_residual,
        max_abs_energy_residual: ex.energy,
        max_res_momdecomp: ex.momdecomp,
        max_res_poissonflux: ex.poissonflux,
        max_res_wv: ex.wv,
        max_div_h: ex.div_h,
        max_particle_mismatch: ex.particle_mismatch,
        corridor: CorridorVerdict {
            rho_min: cert.rho_min,
            rho_max: cert.rho_max,
            rho_lower: cert.rho_lower,
            rho_upper: cert.rho_upper,
            verdict: if cert.satisfied { "PASS" } else { "FAIL" }.into(),
            max_log_rho_excursion: fold(|e| e.log_rho),
            max_flux_excursion: fold(|e| e.flux),
        },
    }
}

struct Outputs {
    diagnostics: DiagnosticsCsv,
    particles: Option<ParticlesCsv>,
}

impl Outputs {
    fn flush(&mut self) -> Result<()> {
        self.diagnostics.flush()?;
        if let Some(p) = &mut self.particles {
            p.flush()?;
        }
        Ok(())
    }
}

fn snapshot_path(dir: &Path, step: usize) -> std::path::PathBuf {
    dir.join(format!("snapshot_{step:06}.bin"))
}

fn emit(sim: &mut Simulation, out: &mut Outputs, ex: &mut Extremes, dir: &Path) -> Result<()> {
    let cfg = sim.config();
    let step = sim.steps();
    let (diag, part, snap) = (
        step % cfg.diagnostics_every == 0,
        step % cfg.particles_every == 0,
        step % cfg.snapshot_every == 0,
    );
    if diag {
        let r = sim.record()?;
        out.diagnostics.write(&r)?;
        ex.add(&r);
    }
    if part {
        if let Some(csv) = &mut out.particles {
            let samples = sim.particle_samples();
            ex.add_particles(&samples, sim.params().rho_tilde);
            csv.write(sim.time(), &samples)?;
        }
    }
    if snap {
        write_snapshot(sim.state(), snapshot_path(dir, step))?;
    }
    Ok(())
}

/// Runs a configuration to `t_end`, writing `diagnostics.csv`,
/// `particles.csv`, snapshots and `summary.json` into the output
/// directory. On blow-up the artifacts written so far are flushed, the
/// summary records the failure, and the error is returned.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let mut sim = Simulation::new(config.clone())?;
    let dir = config.output.clone();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.txt"), config.to_text())?;
    let mut out = Outputs {
        diagnostics: DiagnosticsCsv::create(dir.join("diagnostics.csv"))?,
        particles: match sim.particles() {
            Some(_) => Some(ParticlesCsv::create(dir.join("particles.csv"))?),
            None => None,
        },
    };
    let mut ex = Extremes::default();

    let result = (|| -> Result<()> {
        emit(&mut sim, &mut out, &mut ex, &dir)?;
        loop {
            let dt = sim.next_dt();
            if dt <= 0.0 {
                break;
            }
            sim.step(dt)?;
            emit(&mut sim, &mut out, &mut ex, &dir)?;
        }
        Ok(())
    })();

    out.flush()?;
    match result {
        Ok(()) => {
            write_snapshot(sim.state(), dir.join("final.bin"))?;
            let summary = summarize(&sim, &ex, None);
            summary.write(dir.join("summary.json"))?;
            Ok(summary)
        }
        Err(e) => {
            summarize(&sim, &ex, Some(&e)).write(dir.join("summary.json"))?;
            Err(e)
        }
    }
}
