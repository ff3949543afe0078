//! The eps sweep: run the primitive solver per eps from matched ill-prepared
//! data, measure how far the solution sits from the limit balances, evolve
//! the m = 1 quasi-geostrophic system alongside for comparison, and measure
//! the time-modulus contrast between the slow invariant gamma and the fast
//! wave variable W on the linear propagator.
//!
//! Fast waves do not decay with eps, they only average out: instantaneous
//! residual norms therefore stay O(1) in eps, while residuals of the
//! time-averaged fields shrink. Records carry the instantaneous values; the
//! monotonicity flags are computed from the time-averaged fields.

use crate::error::{Error, Result};
use crate::limits::{qg_stable_dt, qg_step, qg_velocity, LimitCoeffs, QGState};
use crate::primitive::{primitive_diagnostics, primitive_step, stable_dt, PrimitiveState};
use crate::ratefit::{fit_rate, RateFit};
use crate::scaling::EpsilonScaling;
use crate::spectral::ops::curl_h;
use crate::spectral::{Field, Parity, SpecField};
use crate::thermo::{EquationOfState, ThermoModel};
use crate::waves::{WavePropagator, WaveState};
use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use super::initdata::{band_noise, gen_ill_prepared};

/// One sampled instant of one eps run.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub t: f64,
    /// Instantaneous columnarity ||d3 u^h|| / ||u^h||.
    pub taylor_proudman: f64,
    /// H^-1-proxy norm of grad(dp_drho R + dp_dtheta Theta - G - delta_2 F).
    pub boussinesq_residual: f64,
    /// || e3 x <rho u>^h + grad_h <delta p> / eps^(2m-1) ||, m = 1 runs only.
    pub geostrophic_residual: Option<f64>,
    /// || <u^h> - perp_grad q || against the co-evolved QG system, m = 1 only.
    pub qg_mismatch: Option<f64>,
    pub total_mass: f64,
    pub total_energy: f64,
    pub relative_entropy: f64,
    pub balance_residual: f64,
    pub sigma_min: f64,
    pub rho_min: f64,
    pub parity_defect: f64,
}

/// Per-eps summary; the metrics here are built from time-averaged fields and
/// feed the monotonicity flags.
#[derive(Debug, Clone, Serialize)]
pub struct EpsSummary {
    pub eps: f64,
    pub avg_taylor_proudman: f64,
    pub avg_boussinesq: f64,
    pub avg_geostrophic: Option<f64>,
    /// max_t || gamma(t + delta) - gamma(t) || on the forced linear waves.
    pub gamma_modulus: f64,
    /// Same modulus for the wave vector W.
    pub w_modulus: f64,
    pub mass_drift_rel: f64,
    pub rho_min: f64,
    pub steps_taken: usize,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct SweepFlags {
    /// Time-averaged columnarity strictly decreasing as eps decreases.
    pub taylor_proudman_decreasing: bool,
    pub boussinesq_decreasing: bool,
    /// Present for m = 1 sweeps.
    pub geostrophic_decreasing: Option<bool>,
    /// gamma modulus uniformly bounded across eps (max/min ratio <= 3).
    pub gamma_modulus_bounded: bool,
    pub gamma_modulus_ratio: f64,
    /// W modulus strictly growing as eps decreases, by at least 2x overall.
    pub w_modulus_growing: bool,
    pub w_modulus_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSlopes {
    pub taylor_proudman: Option<RateFit>,
    pub boussinesq: Option<RateFit>,
    pub geostrophic: Option<RateFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub config: RunConfig,
    pub config_hash: String,
    /// Records ordered by eps descending, then by time.
    pub records: Vec<SweepRecord>,
    pub summaries: Vec<EpsSummary>,
    pub flags: SweepFlags,
    /// Fitted log-log slopes of the averaged metrics; present with >= 3 eps.
    pub slopes: Option<SweepSlopes>,
}

fn tag_eps(e: Error, eps: f64) -> Error {
    match e {
        Error::Domain(s) => Error::Domain(format!("eps {eps}: {s}")),
        Error::Structural(s) => Error::Structural(format!("eps {eps}: {s}")),
        Error::Invariant(s) => Error::Invariant(format!("eps {eps}: {s}")),
        Error::Config(s) => Error::Config(format!("eps {eps}: {s}")),
        Error::Grid(s) => Error::Grid(format!("eps {eps}: {s}")),
        Error::Io(ioe) => Error::Io(std::io::Error::new(
            ioe.kind(),
            format!("eps {eps}: {ioe}"),
        )),
    }
}

struct EpsRun {
    records: Vec<SweepRecord>,
    summary: EpsSummary,
}

pub fn run_sweep(config: &RunConfig) -> Result<SweepReport> {
    config.validate()?;
    let hash = config.config_hash()?;
    let mut eps_list = config.scaling.eps.clone();
    eps_list.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eps_list.dedup();

    let runs: Vec<EpsRun> = eps_list
        .par_iter()
        .map(|&eps| run_single(config, eps, &hash).map_err(|e| tag_eps(e, eps)))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for run in runs {
        records.extend(run.records);
        summaries.push(run.summary);
    }

    let tp: Vec<f64> = summaries.iter().map(|s| s.avg_taylor_proudman).collect();
    let bous: Vec<f64> = summaries.iter().map(|s| s.avg_boussinesq).collect();
    let geo: Vec<f64> = summaries
        .iter()
        .filter_map(|s| s.avg_geostrophic)
        .collect();
    let gmod: Vec<f64> = summaries.iter().map(|s| s.gamma_modulus).collect();
    let wmod: Vec<f64> = summaries.iter().map(|s| s.w_modulus).collect();

    let gamma_max = gmod.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let gamma_min = gmod.iter().cloned().fold(f64::INFINITY, f64::min);
    let gamma_ratio = if gamma_min > 0.0 {
        gamma_max / gamma_min
    } else if gamma_max <= 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let w_ratio = if wmod.first().copied().unwrap_or(0.0) > 0.0 {
        wmod.last().copied().unwrap_or(0.0) / wmod[0]
    } else {
        f64::INFINITY
    };
    let single = eps_list.len() < 2;

    let flags = SweepFlags {
        taylor_proudman_decreasing: !single && strictly_decreasing(&tp),
        boussinesq_decreasing: !single && strictly_decreasing(&bous),
        geostrophic_decreasing: if geo.is_empty() {
            None
        } else {
            Some(!single && strictly_decreasing(&geo))
        },
        gamma_modulus_bounded: gamma_ratio <= 3.0,
        gamma_modulus_ratio: gamma_ratio,
        w_modulus_growing: !single && strictly_increasing_along(&wmod) && w_ratio >= 2.0,
        w_modulus_ratio: w_ratio,
    };

    let slopes = if eps_list.len() >= 3 {
        Some(SweepSlopes {
            taylor_proudman: fit_positive(&eps_list, &tp),
            boussinesq: fit_positive(&eps_list, &bous),
            geostrophic: if geo.len() == eps_list.len() {
                fit_positive(&eps_list, &geo)
            } else {
                None
            },
        })
    } else {
        None
    };

    Ok(SweepReport {
        config: config.clone(),
        config_hash: hash,
        records,
        summaries,
        flags,
        slopes,
    })
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn strictly_increasing_along(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn fit_positive(eps: &[f64], vals: &[f64]) -> Option<RateFit> {
    if vals.iter().all(|&v| v > 0.0) {
        fit_rate(eps, vals).ok()
    } else {
        None
    }
}

fn run_single(config: &RunConfig, eps: f64, hash: &str) -> Result<EpsRun> {
    let grid = config.make_grid()?;
    let model = config.model();
    let forces = config.forces(&grid);
    let m = config.scaling.m;
    let scaling = EpsilonScaling::new(eps, m)?;
    let coeffs = LimitCoeffs::from_model(&model)?;
    let is_m1 = (m - 1.0).abs() < 1e-12;

    let data = gen_ill_prepared(
        &grid,
        &model,
        scaling,
        forces,
        config.run.seed,
        config.run.band,
        config.amplitudes(),
    )?;
    let mut state = data.initial_state(&model, forces)?;

    // combined potential for the Boussinesq combination: G + delta_2 F
    let delta2 = scaling.delta2();
    let pot = Field::from_fn(&grid, Parity::Even, |x, y, z| {
        forces.g_pot(z) + delta2 * forces.f_pot(x, y)
    });

    // linear wave study: Lambda = dp_drho R + dp_dtheta Theta, W = rho u,
    // driven by a fixed band-limited force so gamma moves at an eps-uniform
    // rate instead of being exactly conserved
    let propagator = WavePropagator::new(&grid, scaling, coeffs.a_wave)?;
    let mut w0 = WaveState::zeros(&grid);
    {
        let mut lam = data.r0.clone();
        lam.scale(coeffs.dp_drho);
        lam.axpy(coeffs.dp_dtheta, &data.theta0);
        w0.lambda = lam.to_spec();
        for c in 0..3 {
            w0.w[c] = state.rho.product(&data.u0[c]).to_spec();
        }
    }
    let fseed = config.run.seed.wrapping_add(100);
    let f_force = band_noise(&grid, fseed, config.run.band, 0.1, Parity::Even).to_spec();
    let g_force = [
        band_noise(&grid, fseed + 1, config.run.band, 0.1, Parity::Even).to_spec(),
        band_noise(&grid, fseed + 2, config.run.band, 0.1, Parity::Even).to_spec(),
        band_noise(&grid, fseed + 3, config.run.band, 0.1, Parity::Odd).to_spec(),
    ];
    let forcing = Some((&f_force, &g_force));

    // QG companion for m = 1, initialized per the limit theorem:
    // q(0) = curl_h <u0^h> - (dp_drho <R0> + dp_dtheta <Theta0>), zero mean
    let mut qg = if is_m1 {
        let u0h = [
            data.u0[0].to_spec().vertical_mean(),
            data.u0[1].to_spec().vertical_mean(),
        ];
        let mut q0 = curl_h(&u0h).to_phys();
        let mut pressure_part = data.r0.to_spec().vertical_mean().to_phys();
        pressure_part.scale(coeffs.dp_drho);
        pressure_part.axpy(
            coeffs.dp_dtheta,
            &data.theta0.to_spec().vertical_mean().to_phys(),
        );
        q0.axpy(-1.0, &pressure_part);
        let zero = Field::zeros(&grid, Parity::Even);
        Some(QGState::new(&q0, &zero, coeffs)?)
    } else {
        None
    };

    let n_samples = (config.run.t_end / config.run.sample_every).round() as usize;
    let dt_sample = config.run.t_end / n_samples as f64;
    let delta = config.run.gamma_delta;

    let mut records = Vec::with_capacity(n_samples + 1);
    let mut steps_taken = 0usize;
    // Time averages accumulate per integrator substep: the substep trapezoid
    // resolves the fast oscillations (omega dt stays below pi under the CFL
    // bound), so their contribution telescopes to O(eps / t_end). Sampling
    // only at the record times would alias them and bury the trends.
    let mut averager = FieldAverager::new(&state, &model, &coeffs, &pot, is_m1, scaling)?;
    let mut gamma_modulus = 0.0f64;
    let mut w_modulus = 0.0f64;

    for j in 0..=n_samples {
        if j > 0 {
            // advance the primitive state across one sample interval
            let mut remaining = dt_sample;
            while remaining > 1e-13 {
                let bound = 0.7 * stable_dt(&state);
                let n_sub = (remaining / bound).ceil().max(1.0) as usize;
                let dt = remaining / n_sub as f64;
                state = primitive_step(&state, dt)?;
                steps_taken += 1;
                remaining -= dt;
                averager.absorb(&state, dt)?;
            }
            if let Some(q) = qg.as_mut() {
                let mut remaining: f64 = dt_sample;
                while remaining > 1e-13 {
                    let bound = (0.9 * qg_stable_dt(q)).min(remaining);
                    let n_sub = (remaining / bound).ceil().max(1.0) as usize;
                    let dt = remaining / n_sub as f64;
                    *q = qg_step(q, dt)?;
                    remaining -= dt;
                }
            }
        }
        let t = j as f64 * dt_sample;

        let diag = primitive_diagnostics(&state)?;
        let snap =
            InstantFields::of(&state, &model, &coeffs, &pot, &averager.p_tilde, is_m1, scaling)?;
        let bous_res = h1_dual_grad_norm(&snap.g.to_spec());
        let geo_res = snap
            .geo_residual()
            .map(|r| (r[0].l2_norm().powi(2) + r[1].l2_norm().powi(2)).sqrt());

        // QG mismatch (m = 1): || <u^h> - perp_grad q ||
        let qg_mismatch = qg.as_ref().map(|q| {
            let vel = qg_velocity(&q.q);
            let mut d0 = snap.u[0].to_spec().vertical_mean();
            d0.axpy(num_complex::Complex64::new(-1.0, 0.0), &vel[0]);
            let mut d1 = snap.u[1].to_spec().vertical_mean();
            d1.axpy(num_complex::Complex64::new(-1.0, 0.0), &vel[1]);
            (d0.l2_norm().powi(2) + d1.l2_norm().powi(2)).sqrt()
        });

        // wave moduli at this sample (exact propagation from t = 0)
        let wave_a = propagator.propagate_forced(&w0, forcing, t);
        let wave_b = propagator.propagate_forced(&w0, forcing, t + delta);
        let mut gdiff = propagator.gamma_of(&wave_b);
        gdiff.axpy(
            num_complex::Complex64::new(-1.0, 0.0),
            &propagator.gamma_of(&wave_a),
        );
        gamma_modulus = gamma_modulus.max(gdiff.l2_norm());
        let mut wdiff2 = 0.0;
        for c in 0..3 {
            let mut d = wave_b.w[c].clone();
            d.axpy(num_complex::Complex64::new(-1.0, 0.0), &wave_a.w[c]);
            wdiff2 += d.l2_norm().powi(2);
        }
        w_modulus = w_modulus.max(wdiff2.sqrt());

        records.push(SweepRecord {
            eps,
            t,
            taylor_proudman: diag.taylor_proudman,
            boussinesq_residual: bous_res,
            geostrophic_residual: geo_res,
            qg_mismatch,
            total_mass: diag.total_mass,
            total_energy: diag.total_energy,
            relative_entropy: diag.relative_entropy,
            balance_residual: diag.balance_residual,
            sigma_min: diag.sigma_min,
            rho_min: diag.rho_min,
            parity_defect: diag.parity_defect,
        });
    }

    let (avg_tp, avg_bous_val, avg_geo_val) = averager.finish(config.run.t_end);

    let mass0 = records.first().map(|r| r.total_mass).unwrap_or(0.0);
    let mass1 = records.last().map(|r| r.total_mass).unwrap_or(0.0);
    let rho_min = records.iter().map(|r| r.rho_min).fold(f64::INFINITY, f64::min);

    Ok(EpsRun {
        summary: EpsSummary {
            eps,
            avg_taylor_proudman: avg_tp,
            avg_boussinesq: avg_bous_val,
            avg_geostrophic: avg_geo_val,
            gamma_modulus,
            w_modulus,
            mass_drift_rel: ((mass1 - mass0) / mass0).abs(),
            rho_min,
            steps_taken,
            config_hash: hash.to_string(),
        },
        records,
    })
}

/// || grad g ||_{H^-1 proxy}: each gradient mode divided by (1 + |k|^2)^1/2.
/// Insensitive to the constant gauge of g.
fn h1_dual_grad_norm(g: &SpecField) -> f64 {
    let mut acc = 0.0;
    for axis in 0..3 {
        acc += g.ddx(axis).h_minus_one().l2_norm().powi(2);
    }
    acc.sqrt()
}

/// Pointwise fields feeding the balance diagnostics at one instant:
/// horizontal velocity, the Boussinesq combination, and for m = 1 the
/// momentum and pressure deviation behind the geostrophic residual.
struct InstantFields {
    u: [Field; 2],
    g: Field,
    mom_h: Option<[Field; 2]>,
    dp: Option<Field>,
    geo_scale: f64,
}

impl InstantFields {
    fn of(
        state: &PrimitiveState,
        model: &ThermoModel,
        coeffs: &LimitCoeffs,
        pot: &Field,
        p_tilde: &Field,
        is_m1: bool,
        scaling: EpsilonScaling,
    ) -> Result<Self> {
        let grid = &state.rho.grid;
        let theta = state.temperature()?;
        let inv_ma = scaling.mach().recip();
        let mut u = [
            Field::zeros(grid, Parity::Even),
            Field::zeros(grid, Parity::Even),
        ];
        let mut g = Field::zeros(grid, Parity::Even);
        for i in 0..grid.len() {
            let r = state.rho.data[i];
            u[0].data[i] = state.mom[0].data[i] / r;
            u[1].data[i] = state.mom[1].data[i] / r;
            let r_eps = (r - 1.0) * inv_ma;
            let th_eps = (theta.data[i] - model.theta_bar) * inv_ma;
            g.data[i] = coeffs.dp_drho * r_eps + coeffs.dp_dtheta * th_eps - pot.data[i];
        }
        let (mom_h, dp) = if is_m1 {
            let mut dp = Field::zeros(grid, Parity::Even);
            for i in 0..grid.len() {
                dp.data[i] =
                    model.pressure(state.rho.data[i], theta.data[i])? - p_tilde.data[i];
            }
            (
                Some([state.mom[0].clone(), state.mom[1].clone()]),
                Some(dp),
            )
        } else {
            (None, None)
        };
        Ok(InstantFields {
            u,
            g,
            mom_h,
            dp,
            geo_scale: scaling.eps.powf(2.0 * scaling.m - 1.0).recip(),
        })
    }

    fn geo_residual(&self) -> Option<[SpecField; 2]> {
        match (&self.mom_h, &self.dp) {
            (Some(mom), Some(dp)) => Some(geo_residual(mom, dp, self.geo_scale)),
            _ => None,
        }
    }
}

/// e3 x <mom^h> + grad_h <dp> / eps^(2m - 1) as two spectral components.
fn geo_residual(mom_h: &[Field; 2], dp: &Field, scale: f64) -> [SpecField; 2] {
    let dp_mean = dp.to_spec().vertical_mean();
    let mom_mean = [
        mom_h[0].to_spec().vertical_mean(),
        mom_h[1].to_spec().vertical_mean(),
    ];
    let mut res = [dp_mean.ddx(0), dp_mean.ddx(1)];
    res[0].scale(scale);
    res[1].scale(scale);
    res[0].axpy(num_complex::Complex64::new(-1.0, 0.0), &mom_mean[1]);
    res[1].axpy(num_complex::Complex64::new(1.0, 0.0), &mom_mean[0]);
    res
}

/// Trapezoid-in-time accumulator over integrator substeps for the fields
/// whose averages define the sweep trends.
struct FieldAverager {
    model: ThermoModel,
    coeffs: LimitCoeffs,
    pot: Field,
    p_tilde: Field,
    is_m1: bool,
    scaling: EpsilonScaling,
    prev: InstantFields,
    acc_u: [Field; 2],
    acc_g: Field,
    acc_mom: Option<[Field; 2]>,
    acc_dp: Option<Field>,
}

impl FieldAverager {
    fn new(
        state: &PrimitiveState,
        model: &ThermoModel,
        coeffs: &LimitCoeffs,
        pot: &Field,
        is_m1: bool,
        scaling: EpsilonScaling,
    ) -> Result<Self> {
        let grid = &state.rho.grid;
        let mut p_tilde = Field::zeros(grid, Parity::Even);
        for i in 0..grid.len() {
            p_tilde.data[i] = model.pressure(state.rho_tilde.data[i], model.theta_bar)?;
        }
        let prev = InstantFields::of(state, model, coeffs, pot, &p_tilde, is_m1, scaling)?;
        Ok(FieldAverager {
            model: model.clone(),
            coeffs: *coeffs,
            pot: pot.clone(),
            p_tilde,
            is_m1,
            scaling,
            acc_u: [
                Field::zeros(grid, Parity::Even),
                Field::zeros(grid, Parity::Even),
            ],
            acc_g: Field::zeros(grid, Parity::Even),
            acc_mom: is_m1.then(|| {
                [
                    Field::zeros(grid, Parity::Even),
                    Field::zeros(grid, Parity::Even),
                ]
            }),
            acc_dp: is_m1.then(|| Field::zeros(grid, Parity::Even)),
            prev,
        })
    }

    /// Fold in one substep [t, t + dt]; `state` is the post-step state.
    fn absorb(&mut self, state: &PrimitiveState, dt: f64) -> Result<()> {
        let cur = InstantFields::of(
            state,
            &self.model,
            &self.coeffs,
            &self.pot,
            &self.p_tilde,
            self.is_m1,
            self.scaling,
        )?;
        let half = 0.5 * dt;
        for c in 0..2 {
            self.acc_u[c].axpy(half, &self.prev.u[c]);
            self.acc_u[c].axpy(half, &cur.u[c]);
        }
        self.acc_g.axpy(half, &self.prev.g);
        self.acc_g.axpy(half, &cur.g);
        if let (Some(acc), Some(pm), Some(cm)) =
            (&mut self.acc_mom, &self.prev.mom_h, &cur.mom_h)
        {
            for c in 0..2 {
                acc[c].axpy(half, &pm[c]);
                acc[c].axpy(half, &cm[c]);
            }
        }
        if let (Some(acc), Some(pd), Some(cd)) = (&mut self.acc_dp, &self.prev.dp, &cur.dp) {
            acc.axpy(half, pd);
            acc.axpy(half, cd);
        }
        self.prev = cur;
        Ok(())
    }

    /// Averaged Taylor-Proudman ratio, Boussinesq residual, and (for m = 1)
    /// geostrophic residual.
    fn finish(mut self, t_end: f64) -> (f64, f64, Option<f64>) {
        let s = t_end.recip();
        self.acc_u[0].scale(s);
        self.acc_u[1].scale(s);
        self.acc_g.scale(s);
        let uh = [self.acc_u[0].to_spec(), self.acc_u[1].to_spec()];
        let uh_norm = (uh[0].l2_norm().powi(2) + uh[1].l2_norm().powi(2)).sqrt();
        let dz_norm = (uh[0].ddx(2).l2_norm().powi(2) + uh[1].ddx(2).l2_norm().powi(2)).sqrt();
        if std::env::var("NSFLAB_PROBE").is_ok() {
            for k0 in [2.0f64, 3.0] {
                let lp = |f: &SpecField| {
                    f.map_modes(|k, c| {
                        if k[0] * k[0] + k[1] * k[1] <= k0 * k0 + 1e-9 {
                            c
                        } else {
                            num_complex::Complex64::new(0.0, 0.0)
                        }
                    })
                };
                let l = [lp(&uh[0]), lp(&uh[1])];
                let ln = (l[0].l2_norm().powi(2) + l[1].l2_norm().powi(2)).sqrt();
                let ld = (l[0].ddx(2).l2_norm().powi(2) + l[1].ddx(2).l2_norm().powi(2)).sqrt();
                eprintln!(
                    "probe eps={} K0={k0}: |d3 lp|={ld:.4e} |lp|={ln:.4e} ratio={:.4e} (full {:.4e})",
                    self.scaling.eps,
                    ld / ln,
                    dz_norm / uh_norm
                );
            }
        }
        let avg_tp = if uh_norm < 1e-14 { 0.0 } else { dz_norm / uh_norm };
        let avg_bous = h1_dual_grad_norm(&self.acc_g.to_spec());
        let avg_geo = match (&mut self.acc_mom, &mut self.acc_dp) {
            (Some(mom), Some(dp)) => {
                mom[0].scale(s);
                mom[1].scale(s);
                dp.scale(s);
                let r = geo_residual(mom, dp, self.prev.geo_scale);
                Some((r[0].l2_norm().powi(2) + r[1].l2_norm().powi(2)).sqrt())
            }
            _ => None,
        };
        (avg_tp, avg_bous, avg_geo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(m: f64, eps: Vec<f64>) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.grid.nx = 16;
        cfg.grid.nz = 8;
        cfg.scaling.m = m;
        cfg.scaling.eps = eps;
        cfg.scaling.gravity = false;
        cfg.run.t_end = 0.1;
        cfg.run.sample_every = 0.05;
        cfg.run.amp_density = 0.05;
        cfg.run.amp_temperature = 0.05;
        cfg.run.amp_velocity = 0.2;
        cfg
    }

    #[test]
    fn records_cover_every_eps_and_sample_and_carry_the_hash() {
        let cfg = small_config(1.0, vec![0.4, 0.2]);
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.records.len(), 2 * 3);
        assert_eq!(report.summaries.len(), 2);
        // descending eps, time within each block
        assert_eq!(report.records[0].eps, 0.4);
        assert_eq!(report.records[3].eps, 0.2);
        assert!(report.records[1].t > report.records[0].t);
        for s in &report.summaries {
            assert_eq!(s.config_hash, report.config_hash);
            assert!(s.mass_drift_rel < 1e-12);
        }
        // m = 1 extras present
        assert!(report.records[0].geostrophic_residual.is_some());
        assert!(report.records[0].qg_mismatch.is_some());
        // two eps only: no slopes
        assert!(report.slopes.is_none());
        assert!(report.flags.w_modulus_ratio > 1.0);
    }

    #[test]
    fn m2_sweep_skips_the_geostrophic_diagnostics() {
        let mut cfg = small_config(2.0, vec![0.4, 0.3]);
        cfg.scaling.centrifugal = true;
        let report = run_sweep(&cfg).unwrap();
        assert!(report.records.iter().all(|r| r.geostrophic_residual.is_none()));
        assert!(report.records.iter().all(|r| r.qg_mismatch.is_none()));
        assert!(report.flags.geostrophic_decreasing.is_none());
        assert!(report.summaries.iter().all(|s| s.rho_min > 0.5));
    }

    #[test]
    fn identical_configs_reproduce_bitwise() {
        let cfg = small_config(1.0, vec![0.3]);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.total_energy.to_bits(), rb.total_energy.to_bits());
            assert_eq!(ra.taylor_proudman.to_bits(), rb.taylor_proudman.to_bits());
            assert_eq!(
                ra.boussinesq_residual.to_bits(),
                rb.boussinesq_residual.to_bits()
            );
        }
        // single eps: flags that need a trend stay false, no slope fitted
        assert!(!a.flags.taylor_proudman_decreasing);
        assert!(a.slopes.is_none());
    }

    #[test]
    #[ignore]
    fn probe_avg_field_components() {
        let cfg = RunConfig::default();
        for &eps in &cfg.scaling.eps.clone() {
            let mut c1 = cfg.clone();
            c1.scaling.eps = vec![eps];
            let rep = run_sweep(&c1).unwrap();
            let s = &rep.summaries[0];
            println!(
                "eps={eps}: avg_tp={:.4e} avg_geo={:?} avg_bous={:.4e}",
                s.avg_taylor_proudman, s.avg_geostrophic, s.avg_boussinesq
            );
        }
    }

    #[test]
    fn failing_eps_is_named_in_the_error() {
        let mut cfg = small_config(1.0, vec![0.4]);
        cfg.run.amp_density = 25.0; // way outside the essential window
        let err = run_sweep(&cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("eps 0.4"), "unexpected message: {msg}");
    }
}
