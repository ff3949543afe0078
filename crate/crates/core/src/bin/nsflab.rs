//! Command-line front end. Every subcommand prints what it measured next to
//! what the theory predicts and exits nonzero when a check misses: 2 for a
//! failed invariant or runtime fault, 3 for a bad config or I/O problem.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use nsflab::equilibrium::{static_rate_study, ForcePotentials, StaticStudyConfig};
use nsflab::error::{Error, Result};
use nsflab::harness::{emit_report, gen_ill_prepared, run_sweep, ReportFormats, RunConfig};
use nsflab::limits::{
    ob_divergence, ob_stable_dt, ob_step, qg_dissipation_rate, qg_energy, qg_stable_dt, qg_step, LimitCoeffs,
    OBState, QGState,
};
use nsflab::lp::{bernstein_check, DyadicSystem};
use nsflab::primitive::{primitive_diagnostics, primitive_step, stable_dt, PrimitiveState};
use nsflab::scaling::EpsilonScaling;
use nsflab::spectral::{Field, Parity, SpectralGrid};
use nsflab::thermo::audit_model;
use nsflab::waves::{WavePropagator, WaveState};

#[derive(Parser)]
#[command(
    name = "nsflab",
    version,
    about = "Numerical laboratory for rotating compressible flow near its singular limits"
)]
struct Cli {
    /// TOML run configuration; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding [output].dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed, overriding [run].seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the eps sweep (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Structural audit of the equation of state and transport laws.
    AuditEos,
    /// Convergence rates of the static states toward their limit profiles.
    Statics,
    /// Littlewood-Paley toolkit: partition of unity, Bernstein, Besov norms.
    Lp,
    /// Linear acoustic-Poincare waves: conservation and forced gamma drift.
    Waves,
    /// Quasi-geostrophic limit: single-mode vortex decay and the energy law.
    Qg,
    /// Oberbeck-Boussinesq limit: Taylor-Green decay and the divergence gauge.
    Ob,
    /// Primitive-system run from seeded ill-prepared data, with a CSV log.
    Primitive,
    /// Full eps sweep with CSV/JSON/SVG reports.
    Sweep,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    cfg.validate()?;

    match cli.cmd {
        Cmd::AuditEos => cmd_audit_eos(&cfg),
        Cmd::Statics => cmd_statics(&cfg),
        Cmd::Lp => cmd_lp(&cfg),
        Cmd::Waves => cmd_waves(&cfg),
        Cmd::Qg => cmd_qg(&cfg),
        Cmd::Ob => cmd_ob(&cfg),
        Cmd::Primitive => cmd_primitive(&cfg),
        Cmd::Sweep => cmd_sweep(&cfg),
    }
}

fn check(name: &str, observed: f64, tol: f64, failures: &mut usize) {
    let ok = observed.abs() <= tol;
    if !ok {
        *failures += 1;
    }
    println!(
        "  {:<44} {:>12.3e}  (tol {:>8.1e})  {}",
        name,
        observed,
        tol,
        if ok { "ok" } else { "FAIL" }
    );
}

fn finish(failures: usize) -> Result<()> {
    if failures == 0 {
        Ok(())
    } else {
        Err(Error::Invariant(format!("{failures} check(s) failed")))
    }
}

fn cmd_audit_eos(cfg: &RunConfig) -> Result<()> {
    let model = cfg.model();
    let report = audit_model(&model, 10.0, 2000);
    println!("equation-of-state audit (a = {}, theta_bar = {}):", model.a, model.theta_bar);
    for c in &report.checks {
        match c.witness {
            Some(w) => println!(
                "  {:<44} {:>12.4e}  at {:>10.4e}  {}",
                c.name,
                c.observed,
                w,
                if c.passed { "ok" } else { "FAIL" }
            ),
            None => println!(
                "  {:<44} {:>12.4e}  {:>14}  {}",
                c.name,
                c.observed,
                "",
                if c.passed { "ok" } else { "FAIL" }
            ),
        }
    }
    println!("  sup (5/3 P - Z P')/Z = {:.6e}", report.ratio_sup);
    if report.passed {
        Ok(())
    } else {
        Err(Error::Invariant("equation-of-state audit failed".into()))
    }
}

fn cmd_statics(cfg: &RunConfig) -> Result<()> {
    let model = cfg.model();
    let grid = cfg.make_grid()?;
    let base = cfg.forces(&grid);
    let regimes: [(f64, bool); 5] = [
        (2.0, true),
        (1.5, true),
        (1.0, true),
        (1.0, false),
        (2.0, false),
    ];
    let mut failures = 0usize;
    println!("static-state convergence (slope of deviation vs eps):");
    for (m, centrifugal) in regimes {
        let forces = ForcePotentials {
            centrifugal_on: centrifugal,
            gravity_on: true,
            ..base
        };
        let study = static_rate_study(&model, &StaticStudyConfig::new(m, forces))?;
        let ok = (study.fit.slope - study.expected_rate).abs() <= 0.1 && study.rho_min >= 0.5;
        if !ok {
            failures += 1;
        }
        println!(
            "  m = {:<4} centrifugal = {:<5}  slope {:>7.4} (expect {:.2}), rho_min {:>7.4}  {}",
            m,
            centrifugal,
            study.fit.slope,
            study.expected_rate,
            study.rho_min,
            if ok { "ok" } else { "FAIL" }
        );
    }
    finish(failures)
}

fn cmd_lp(cfg: &RunConfig) -> Result<()> {
    let grid = cfg.make_grid()?;
    let sys = DyadicSystem::new(&grid);
    let mut failures = 0usize;
    println!("Littlewood-Paley toolkit on {}^2 x {}:", cfg.grid.nx, cfg.grid.nz);
    check("partition-of-unity defect", sys.partition_defect(), 1e-12, &mut failures);

    for j in [1, 2] {
        let rep = bernstein_check(&sys, j, 2.0, f64::INFINITY, 20, cfg.run.seed)?;
        println!(
            "  block {:>2}: grad ratio in [{:.4}, {:.4}] x 2^j, embed const {:.4} (coherent {:.4})",
            j, rep.grad_ratio_min, rep.grad_ratio_max, rep.embed_constant_random, rep.embed_constant_coherent
        );
        if !(rep.grad_ratio_min >= 0.4 && rep.grad_ratio_max <= 2.0) {
            failures += 1;
            println!("  block {j}: gradient ratio escaped the annulus bounds  FAIL");
        }
    }

    let scaling = first_scaling(cfg)?;
    let data = gen_ill_prepared(
        &grid,
        &cfg.model(),
        scaling,
        cfg.forces(&grid),
        cfg.run.seed,
        cfg.run.band,
        cfg.amplitudes(),
    )?;
    let f = data.rho1.to_spec();
    for s in [0.0, 1.0, 2.0] {
        let besov = sys.besov_norm(&f, s, 2.0, 2.0)?;
        let sob = f.sobolev_norm(s);
        let ratio = besov / sob;
        let ok = (0.25..=4.0).contains(&ratio);
        if !ok {
            failures += 1;
        }
        println!(
            "  B^{s}_22 / H^{s} on seeded density deviation: {:.4}  {}",
            ratio,
            if ok { "ok" } else { "FAIL" }
        );
    }
    finish(failures)
}

fn first_scaling(cfg: &RunConfig) -> Result<EpsilonScaling> {
    let eps = cfg
        .scaling
        .eps
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    EpsilonScaling::new(eps, cfg.scaling.m)
}

/// Wave state Lambda = dp_drho R0 + dp_dtheta Theta0, W = rho0 u0 built from
/// the seeded data, as the sweep uses it.
fn seeded_wave_state(
    cfg: &RunConfig,
    grid: &Arc<SpectralGrid>,
    scaling: EpsilonScaling,
    coeffs: &LimitCoeffs,
) -> Result<WaveState> {
    let model = cfg.model();
    let forces = cfg.forces(grid);
    let data = gen_ill_prepared(
        grid,
        &model,
        scaling,
        forces,
        cfg.run.seed,
        cfg.run.band,
        cfg.amplitudes(),
    )?;
    let state = data.initial_state(&model, forces)?;
    let mut w0 = WaveState::zeros(grid);
    let mut lam = data.r0.clone();
    lam.scale(coeffs.dp_drho);
    lam.axpy(coeffs.dp_dtheta, &data.theta0);
    w0.lambda = lam.to_spec();
    for c in 0..3 {
        w0.w[c] = state.rho.product(&data.u0[c]).to_spec();
    }
    Ok(w0)
}

fn cmd_waves(cfg: &RunConfig) -> Result<()> {
    let grid = cfg.make_grid()?;
    let scaling = first_scaling(cfg)?;
    let coeffs = LimitCoeffs::from_model(&cfg.model())?;
    let prop = WavePropagator::new(&grid, scaling, coeffs.a_wave)?;
    let w0 = seeded_wave_state(cfg, &grid, scaling, &coeffs)?;
    let mut failures = 0usize;

    println!(
        "linear waves at eps = {}, m = {} (speed sqrt(A)/eps^m = {:.3}):",
        scaling.eps,
        scaling.m,
        prop.propagation_speed()
    );
    let e0 = prop.energy(&w0);
    let g0 = prop.gamma_of(&w0);
    let wt = prop.propagate(&w0, 1.0);
    let e1 = prop.energy(&wt);
    let mut gdrift = prop.gamma_of(&wt);
    gdrift.axpy((-1.0).into(), &g0);
    check("relative energy drift over t = 1", (e1 - e0) / e0, 1e-12, &mut failures);
    check(
        "relative gamma drift over t = 1",
        gdrift.l2_norm() / g0.l2_norm().max(1e-300),
        1e-12,
        &mut failures,
    );

    // constant forcing moves gamma linearly at the rate curl_h <g^h> - <f>/A
    let fscale = first_scaling(cfg)?;
    let fdata = gen_ill_prepared(
        &grid,
        &cfg.model(),
        fscale,
        cfg.forces(&grid),
        cfg.run.seed + 1,
        cfg.run.band,
        cfg.amplitudes(),
    )?;
    let f_force = fdata.theta0.to_spec();
    let g_force = [
        fdata.u0[0].to_spec(),
        fdata.u0[1].to_spec(),
        fdata.u0[2].to_spec(),
    ];
    let t = 0.7;
    let forced = prop.propagate_forced(&w0, Some((&f_force, &g_force)), t);
    let mut gmove = prop.gamma_of(&forced);
    gmove.axpy((-1.0).into(), &g0);
    let mut expected = prop.gamma_rate(&f_force, &g_force);
    expected.scale(t);
    gmove.axpy((-1.0).into(), &expected);
    check(
        "forced gamma drift vs t * rate",
        gmove.l2_norm() / expected.l2_norm().max(1e-300),
        1e-10,
        &mut failures,
    );
    finish(failures)
}

fn cmd_qg(cfg: &RunConfig) -> Result<()> {
    let grid = cfg.make_grid()?;
    let coeffs = LimitCoeffs::from_model(&cfg.model())?;
    let ell = grid.period[0] / (2.0 * std::f64::consts::PI);
    let k2 = 1.0 / (ell * ell);

    // single-mode vortex: the advection term vanishes, so the amplitude obeys
    // d/dt A (1/A_wave + k^2) = -mu k^4 A exactly
    let q0 = Field::from_fn(&grid, Parity::Even, |x, _, _| (x / ell).sin());
    let zero = Field::zeros(&grid, Parity::Even);
    let mut state = QGState::new(&q0, &zero, coeffs)?;
    let a0 = state.q.l2_norm();
    let e_start = qg_energy(&state);
    let t_end = 1.0;
    let mut diss = 0.0;
    let mut t = 0.0;
    while t < t_end - 1e-13 {
        // the step itself is exact for a single mode; the dt cap keeps the
        // trapezoid quadrature of the dissipation below the 1e-6 gate
        let dt = (0.4 * qg_stable_dt(&state)).min(5e-4).min(t_end - t);
        let d0 = qg_dissipation_rate(&state);
        state = qg_step(&state, dt)?;
        diss += 0.5 * dt * (d0 + qg_dissipation_rate(&state));
        t += dt;
    }
    let measured = state.q.l2_norm() / a0;
    let expected =
        (-state.coeffs.mu * k2 * k2 * t_end / (1.0 / state.coeffs.a_wave + k2)).exp();
    let mut failures = 0usize;
    println!("quasi-geostrophic vortex on {}^2 (mu = {}):", cfg.grid.nx, coeffs.mu);
    println!("  amplitude ratio at t = 1: measured {measured:.8}, exact {expected:.8}");
    check("vortex decay defect", measured - expected, 1e-6, &mut failures);
    check(
        "energy law E(t) - E(0) + integral of dissipation",
        (qg_energy(&state) - e_start + diss) / e_start,
        1e-6,
        &mut failures,
    );
    finish(failures)
}

fn cmd_ob(cfg: &RunConfig) -> Result<()> {
    let grid = cfg.make_grid()?;
    let coeffs = LimitCoeffs::from_model(&cfg.model())?;
    let scaling = EpsilonScaling::new(0.1, 2.0)?;
    let ell = grid.period[0] / (2.0 * std::f64::consts::PI);
    let forces = ForcePotentials {
        centrifugal_on: false,
        gravity_on: false,
        ..cfg.forces(&grid)
    };

    // Taylor-Green cell: u = (sin x cos y, -cos x sin y) decays as
    // exp(-2 mu t / ell^2) with the advection term absorbed by the pressure
    let u0 = Field::from_fn(&grid, Parity::Even, |x, y, _| (x / ell).sin() * (y / ell).cos());
    let u1 = Field::from_fn(&grid, Parity::Even, |x, y, _| -(x / ell).cos() * (y / ell).sin());
    let theta0 = Field::zeros(&grid, Parity::Even);
    let mut state = OBState::new([&u0, &u1], &theta0, coeffs, forces)?;
    let ke0 = state.kinetic_energy();
    let t_end = 0.5;
    let mut t = 0.0;
    while t < t_end - 1e-13 {
        let dt = (0.4 * ob_stable_dt(&state)).min(t_end - t);
        state = ob_step(&state, dt, &scaling)?;
        t += dt;
    }
    let measured = (state.kinetic_energy() / ke0).sqrt();
    let expected = (-2.0 * coeffs.mu * t_end / (ell * ell)).exp();
    let mut failures = 0usize;
    println!("Oberbeck-Boussinesq Taylor-Green on {}^2 (mu = {}):", cfg.grid.nx, coeffs.mu);
    println!("  amplitude ratio at t = {t_end}: measured {measured:.8}, exact {expected:.8}");
    check("Taylor-Green decay defect", measured - expected, 1e-6, &mut failures);
    check(
        "horizontal divergence",
        ob_divergence(&state),
        1e-12,
        &mut failures,
    );
    finish(failures)
}

fn cmd_primitive(cfg: &RunConfig) -> Result<()> {
    let grid = cfg.make_grid()?;
    let model = cfg.model();
    let forces = cfg.forces(&grid);
    let scaling = first_scaling(cfg)?;
    let data = gen_ill_prepared(
        &grid,
        &model,
        scaling,
        forces,
        cfg.run.seed,
        cfg.run.band,
        cfg.amplitudes(),
    )?;
    let mut state = data.initial_state(&model, forces)?;
    let static_state = PrimitiveState::static_state(&model, scaling, forces, &grid)?;

    let n_samples = (cfg.run.t_end / cfg.run.sample_every).round().max(1.0) as usize;
    let dt_sample = cfg.run.t_end / n_samples as f64;
    let mut csv = String::from(
        "t,total_mass,kinetic_energy,total_energy,relative_entropy,balance_residual,sigma_min,taylor_proudman,rho_min,parity_defect\n",
    );
    let mut push_row = |d: &nsflab::primitive::PrimitiveDiagnostics| {
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            d.t,
            d.total_mass,
            d.kinetic_energy,
            d.total_energy,
            d.relative_entropy,
            d.balance_residual,
            d.sigma_min,
            d.taylor_proudman,
            d.rho_min,
            d.parity_defect,
        ));
    };
    let d0 = primitive_diagnostics(&state)?;
    let mass0 = d0.total_mass;
    push_row(&d0);
    for _ in 0..n_samples {
        let mut remaining = dt_sample;
        while remaining > 1e-13 {
            let bound = 0.7 * stable_dt(&state);
            let n_sub = (remaining / bound).ceil().max(1.0) as usize;
            let dt = remaining / n_sub as f64;
            state = primitive_step(&state, dt)?;
            remaining -= dt;
        }
        push_row(&primitive_diagnostics(&state)?);
    }
    let out_dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&out_dir)?;
    let csv_path = out_dir.join("primitive.csv");
    std::fs::write(&csv_path, csv)?;

    let d1 = primitive_diagnostics(&state)?;
    let mut static_drift = 0.0f64;
    {
        // drift of the unperturbed static state over the same horizon
        let mut s = static_state;
        let mut t = 0.0;
        while t < cfg.run.t_end - 1e-13 {
            let dt = (0.7 * stable_dt(&s)).min(cfg.run.t_end - t);
            s = primitive_step(&s, dt)?;
            t += dt;
        }
        let d = primitive_diagnostics(&s)?;
        for c in 0..3 {
            static_drift = static_drift.max(s.mom[c].l2_norm());
        }
        static_drift = static_drift.max((d.total_mass - mass0).abs() / mass0.abs());
    }

    let mut failures = 0usize;
    println!(
        "primitive system at eps = {}, m = {}, t_end = {} ({} samples -> {}):",
        scaling.eps,
        scaling.m,
        cfg.run.t_end,
        n_samples + 1,
        csv_path.display()
    );
    check("static state residual drift", static_drift, 1e-8, &mut failures);
    check(
        "relative mass drift",
        (d1.total_mass - mass0) / mass0,
        1e-12,
        &mut failures,
    );
    check("parity defect", d1.parity_defect, 1e-12, &mut failures);
    println!(
        "  sigma_min {:.3e}, balance residual {:.3e}, rho_min {:.4}",
        d1.sigma_min, d1.balance_residual, d1.rho_min
    );
    if d1.sigma_min < -1e-12 {
        failures += 1;
        println!("  entropy production went negative  FAIL");
    }
    finish(failures)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let report = run_sweep(cfg)?;
    let out_dir = PathBuf::from(&cfg.output.dir);
    let files = emit_report(
        &report,
        &out_dir,
        ReportFormats {
            csv: true,
            json: true,
            svg: cfg.output.svg,
        },
    )?;

    println!("sweep {} over eps = {:?}, m = {}:", report.config_hash, cfg.scaling.eps, cfg.scaling.m);
    println!(
        "  {:>6} {:>14} {:>14} {:>14} {:>12} {:>12} {:>7}",
        "eps", "avg d3u/u", "avg boussinesq", "avg geostroph", "gamma mod", "W mod", "steps"
    );
    for s in &report.summaries {
        println!(
            "  {:>6} {:>14.5e} {:>14.5e} {:>14} {:>12.4e} {:>12.4e} {:>7}",
            s.eps,
            s.avg_taylor_proudman,
            s.avg_boussinesq,
            s.avg_geostrophic
                .map(|v| format!("{v:.5e}"))
                .unwrap_or_else(|| "-".into()),
            s.gamma_modulus,
            s.w_modulus,
            s.steps_taken
        );
    }
    let f = &report.flags;
    println!("  taylor_proudman_decreasing = {}", f.taylor_proudman_decreasing);
    println!("  boussinesq_decreasing      = {}", f.boussinesq_decreasing);
    if let Some(g) = f.geostrophic_decreasing {
        println!("  geostrophic_decreasing     = {g}");
    }
    println!(
        "  gamma_modulus_bounded      = {} (ratio {:.3})",
        f.gamma_modulus_bounded, f.gamma_modulus_ratio
    );
    println!(
        "  w_modulus_growing          = {} (ratio {:.3})",
        f.w_modulus_growing, f.w_modulus_ratio
    );
    if let Some(slopes) = &report.slopes {
        if let Some(fit) = &slopes.taylor_proudman {
            println!("  taylor-proudman slope      = {:.3}", fit.slope);
        }
        if let Some(fit) = &slopes.boussinesq {
            println!("  boussinesq slope           = {:.3}", fit.slope);
        }
        if let Some(fit) = &slopes.geostrophic {
            println!("  geostrophic slope          = {:.3}", fit.slope);
        }
    }
    for p in files
        .csv
        .iter()
        .chain(files.json.iter())
        .chain(files.svgs.iter())
    {
        println!("  wrote {}", p.display());
    }
    Ok(())
}
