//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::Instant;

use mhd0::diagnostics::{
    auxiliary_wv, energy_ledger, momentum_decomposition_residual, poisson_flux_residual,
    DiagnosticsTracker,
};
use mhd0::dynamics::{Dynamics, FluidState};
use mhd0::fields::{curl, divergence, l2_norm, GridSpec, ScalarField, VectorField};
use mhd0::io::{run, PressureKind, RunConfig, Simulation};
use mhd0::model::{Corridor, ModelParams, NonMonotone, PressureLaw};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gamma_params() -> ModelParams {
    ModelParams::with_gamma(0.1, 0.1, 1.0, [1.0, 1.0, 1.0], 1.4).unwrap()
}

fn cubic_params() -> ModelParams {
    let law = NonMonotone::from_landmarks(0.8, 1.2, 1.0, 2.0 / 3.0).unwrap();
    let corridor = Corridor {
        rho_lower: 0.5,
        rho_upper: 1.5,
        d: 0.25,
    };
    ModelParams::new(
        0.1,
        0.1,
        1.0,
        [1.0, 1.0, 1.0],
        PressureLaw::NonMonotone(law),
        corridor,
    )
    .unwrap()
}

/// Sum of at most ten random Fourier modes with `|k_i| ≤ 5`.
fn band_limited(g: GridSpec, rng: &mut ChaCha8Rng, amp: f64) -> ScalarField {
    let count = rng.random_range(1..=10);
    let modes: Vec<([f64; 3], f64, f64)> = (0..count)
        .map(|_| {
            let k = [0; 3].map(|_| rng.random_range(-5i32..=5) as f64);
            (
                k,
                amp * rng.random_range(-1.0..1.0),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    ScalarField::from_fn(g, |x| {
        modes
            .iter()
            .map(|(k, a, ph)| a * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).cos())
            .sum()
    })
}

fn band_limited_vector(g: GridSpec, rng: &mut ChaCha8Rng, amp: f64) -> VectorField {
    VectorField::new([0; 3].map(|_| band_limited(g, rng, amp))).unwrap()
}

fn random_state(g: GridSpec, p: &ModelParams, rng: &mut ChaCha8Rng) -> FluidState {
    let rho = band_limited(g, rng, 0.02).map(|r| p.rho_tilde + r);
    let u = band_limited_vector(g, rng, 0.05);
    let h = curl(&band_limited_vector(g, rng, 0.02)).offset(p.h_tilde);
    FluidState::new(0.0, rho, u, h).unwrap()
}

fn identity_suite(p: &ModelParams) -> Outcome {
    let g = GridSpec::new(32, 2.0 * PI).unwrap();
    let dy = Dynamics::new(p.clone()).with_dealias(false);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = [0.0_f64; 4];
    for _ in 0..20 {
        let s = random_state(g, p, &mut rng);
        let d = dy.rhs(&s).unwrap();
        let v = band_limited_vector(g, &mut rng, 1.0);
        let r = [
            momentum_decomposition_residual(&s, &d, p).unwrap(),
            poisson_flux_residual(&s, &d, p).unwrap(),
            auxiliary_wv(&s, p).unwrap().identity_residual,
            l2_norm(&divergence(&curl(&v))) / l2_norm(&v),
        ];
        for (w, r) in worst.iter_mut().zip(r) {
            *w = w.max(r);
        }
    }
    let limits = [1e-10, 1e-10, 1e-11, 1e-12];
    outcome(
        worst.iter().zip(limits).all(|(w, l)| *w <= l),
        format!(
            "momdecomp={:.2e} poissonflux={:.2e} wv={:.2e} divcurl={:.2e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn equilibrium_fixed_point(p: &ModelParams) -> Outcome {
    let g = GridSpec::new(16, 2.0 * PI).unwrap();
    let dy = Dynamics::new(p.clone());
    let s0 = FluidState::equilibrium(g, p);
    let dt = dy.cfl_dt(&s0);
    let mut s = s0.clone();
    let mut tracker = DiagnosticsTracker::new(p.clone());
    let mut integral = 0.0;
    let mut nonzero = 0;
    for _ in 0..1000 {
        let out = dy.step_rk4_with_stages(&s, dt).unwrap();
        integral += out.dissipation;
        s = out.state;
        let rec = tracker.record(&s, &dy.rhs(&s).unwrap(), integral).unwrap();
        let columns = mhd0::diagnostics::DiagnosticsRecord::CSV_COLUMNS;
        nonzero += columns
            .iter()
            .zip(rec.csv_values())
            .filter(|(c, v)| !matches!(**c, "t" | "rho_min" | "rho_max") && *v != 0.0)
            .count();
        nonzero += usize::from(rec.lyapunov_wv != 0.0);
    }
    let mut dev = s.rho.sub(&s0.rho).max_abs();
    for j in 0..3 {
        dev = dev.max(s.u.component(j).sub(s0.u.component(j)).max_abs());
        dev = dev.max(s.h.component(j).sub(s0.h.component(j)).max_abs());
    }
    outcome(
        dev <= 1e-12 && nonzero == 0,
        format!("dt={dt:.3e} deviation={dev:.2e} nonzero_diagnostics={nonzero}"),
    )
}

fn small_data_config(grid: usize, t_end: f64) -> RunConfig {
    RunConfig {
        grid,
        t_end,
        target_c0: 1e-2,
        gamma: 1.4,
        mu: 0.1,
        lambda: 0.1,
        dealias: true,
        ..RunConfig::default()
    }
}

struct EnergyRun {
    residual: f64,
    max_div_h: f64,
    max_mass_drift: f64,
}

fn energy_run(dt: f64) -> EnergyRun {
    let mut cfg = small_data_config(32, 1.0);
    cfg.dt = Some(dt);
    cfg.particle_lattice = 0;
    let mut sim = Simulation::new(cfg).unwrap();
    let p = sim.params().clone();
    let e0 = energy_ledger(sim.state(), &p).unwrap().total();
    let m0 = sim.state().mass();
    let (mut max_div_h, mut max_mass_drift) = (l2_norm(&divergence(&sim.state().h)), 0.0_f64);
    loop {
        let dt = sim.next_dt();
        if dt == 0.0 {
            break;
        }
        sim.step(dt).unwrap();
        max_div_h = max_div_h.max(l2_norm(&divergence(&sim.state().h)));
        max_mass_drift = max_mass_drift.max((sim.state().mass() - m0).abs() / m0);
    }
    let e = energy_ledger(sim.state(), &p).unwrap().total();
    EnergyRun {
        residual: (e - e0 + sim.dissipation_integral()).abs(),
        max_div_h,
        max_mass_drift,
    }
}

fn energy_runs() -> Vec<(f64, EnergyRun)> {
    let sim = Simulation::new(small_data_config(32, 1.0)).unwrap();
    let cfl = sim.dynamics().cfl_dt(sim.state());
    // Coarsest step: the largest 1/2^k not above half the CFL step. At the
    // CFL step itself the fastest viscous modes are not yet in the RK4
    // asymptotic regime.
    let base = 0.5_f64.powi((2.0 / cfl).log2().ceil() as i32);
    [base, base / 2.0, base / 4.0]
        .into_iter()
        .map(|dt| (dt, energy_run(dt)))
        .collect()
}

fn energy_convergence(runs: &[(f64, EnergyRun)]) -> Outcome {
    let r: Vec<f64> = runs.iter().map(|(_, e)| e.residual).collect();
    let ratios = [r[0] / r[1], r[1] / r[2]];
    outcome(
        ratios.iter().all(|q| (13.0..=19.0).contains(q)),
        format!(
            "dt={:.3e} residuals=[{:.3e}, {:.3e}, {:.3e}] ratios=[{:.2}, {:.2}]",
            runs[0].0, r[0], r[1], r[2], ratios[0], ratios[1]
        ),
    )
}

fn conservation(runs: &[(f64, EnergyRun)]) -> Outcome {
    let div_h = runs.iter().map(|(_, e)| e.max_div_h).fold(0.0, f64::max);
    let mass = runs
        .iter()
        .map(|(_, e)| e.max_mass_drift)
        .fold(0.0, f64::max);
    outcome(
        div_h <= 1e-8 && mass <= 1e-12,
        format!("max_divH={div_h:.2e} max_mass_drift={mass:.2e}"),
    )
}

struct LongRun {
    mismatch: f64,
    rho_min: f64,
    rho_max: f64,
    a_monotone: bool,
    a_final: f64,
    c0: f64,
    steps: usize,
}

/// T = 5 small-data run with a particle lattice. Diagnostics are recorded at
/// every step when `record` is set.
fn long_run(grid: usize, record: bool) -> LongRun {
    let mut sim = Simulation::new(small_data_config(grid, 5.0)).unwrap();
    let p = sim.params().clone();
    let interp = sim.config().interpolation();
    let mismatch_now = |sim: &Simulation| {
        sim.particles()
            .unwrap()
            .max_density_mismatch(sim.state(), &p, interp)
    };
    let mut out = LongRun {
        mismatch: mismatch_now(&sim),
        rho_min: sim.state().rho.min(),
        rho_max: sim.state().rho.max(),
        a_monotone: true,
        a_final: 0.0,
        c0: sim.initial().c0_achieved,
        steps: 0,
    };
    let mut last_a = if record {
        sim.record().unwrap().a_functional
    } else {
        0.0
    };
    loop {
        let dt = sim.next_dt();
        if dt == 0.0 {
            break;
        }
        sim.step(dt).unwrap();
        out.mismatch = out.mismatch.max(mismatch_now(&sim));
        out.rho_min = out.rho_min.min(sim.state().rho.min());
        out.rho_max = out.rho_max.max(sim.state().rho.max());
        if record {
            let a = sim.record().unwrap().a_functional;
            out.a_monotone &= a >= last_a && a.is_finite();
            last_a = a;
        }
    }
    out.a_final = last_a;
    out.steps = sim.steps();
    out
}

fn lagrangian(coarse: &LongRun, fine: &LongRun) -> Outcome {
    let reduction = coarse.mismatch / fine.mismatch;
    outcome(
        coarse.mismatch <= 1e-3 && reduction >= 4.0,
        format!(
            "n32={:.3e} ({} steps) n64={:.3e} ({} steps) reduction={reduction:.2}",
            coarse.mismatch, coarse.steps, fine.mismatch, fine.steps
        ),
    )
}

fn corridor(run: &LongRun) -> Outcome {
    let inside = run.rho_min >= 0.5 && run.rho_max <= 1.5;
    outcome(
        inside && run.a_monotone && run.a_final <= run.c0,
        format!(
            "rho in [{:.6}, {:.6}] A nondecreasing={} A(T)={:.4e} C0={:.4e}",
            run.rho_min, run.rho_max, run.a_monotone, run.a_final, run.c0
        ),
    )
}

fn non_monotone() -> Outcome {
    let law = NonMonotone::from_landmarks(0.8, 1.2, 1.0, 2.0 / 3.0);
    let mut cfg = RunConfig {
        pressure: PressureKind::NonMonotone,
        rho_prime: Some(0.8),
        rho_double_prime: Some(1.2),
        ..RunConfig::default()
    };
    cfg.grid = 16;
    let built = cfg.validate().is_ok() && cfg.model_params().is_ok();
    let p = cubic_params();
    let c1 = identity_suite(&p);
    let c2 = equilibrium_fixed_point(&p);
    outcome(
        law.is_ok() && built && c1.pass && c2.pass,
        format!(
            "validation={} config={} identities: {} | equilibrium: {}",
            law.is_ok(),
            built,
            c1.detail,
            c2.detail
        ),
    )
}

fn csv_bytes(dir: &Path) -> (Vec<u8>, Vec<u8>) {
    (
        fs::read(dir.join("diagnostics.csv")).unwrap(),
        fs::read(dir.join("particles.csv")).unwrap(),
    )
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let runs: Vec<(Vec<u8>, Vec<u8>)> = [1, 1, 2]
        .into_iter()
        .enumerate()
        .map(|(i, threads)| {
            let mut cfg = small_data_config(16, 0.5);
            cfg.seed = 11;
            cfg.output = root.path().join(format!("run{i}"));
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run(&cfg)).unwrap();
            csv_bytes(&cfg.output)
        })
        .collect();
    let repeat = runs[0] == runs[1];
    let threads = runs[0] == runs[2];
    outcome(
        repeat && threads && !runs[0].0.is_empty(),
        format!("repeat_identical={repeat} one_vs_two_threads_identical={threads}"),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!(
            "{verdict} criterion {id} {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
    };
    let p = gamma_params();
    report(1, "identity suite", &mut || identity_suite(&p));
    report(2, "equilibrium fixed point", &mut || {
        equilibrium_fixed_point(&p)
    });
    let mut runs = Vec::new();
    report(3, "energy balance convergence", &mut || {
        runs = energy_runs();
        energy_convergence(&runs)
    });
    report(4, "solenoidal and mass conservation", &mut || {
        conservation(&runs)
    });
    let mut coarse = None;
    report(5, "lagrangian cross-check", &mut || {
        let c = long_run(32, true);
        let f = long_run(64, false);
        let o = lagrangian(&c, &f);
        coarse = Some(c);
        o
    });
    report(6, "density corridor and A functional", &mut || {
        corridor(coarse.as_ref().unwrap())
    });
    report(7, "non-monotone pressure", &mut non_monotone);
    report(8, "determinism", &mut determinism);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
