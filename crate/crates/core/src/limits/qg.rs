//! The m = 1 limit: a quasi-geostrophic equation for the stream function q,
//!
//! ```text
//! d/dt (q/A - lap_h q) - perp_grad q . grad_h (lap_h q) + mu lap_h^2 q = 0,
//! ```
//!
//! coupled to a transport-diffusion equation for the entropy combination
//!
//! ```text
//! c_p (d/dt Upsilon + perp_grad q . grad_h Upsilon) - kappa lap Upsilon
//!     = kappa alpha lap_h q.
//! ```
//!
//! q lives on the horizontal torus (stored as a z-constant field); Upsilon is
//! fully three-dimensional with even vertical extension.

use super::{if_rk4, LimitCoeffs};
use crate::error::{Error, Result};
use crate::spectral::ops::{dealiased_product, perp_grad_h};
use crate::spectral::{Field, SpecField};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct QGState {
    /// Stream function; zero-mean gauge, vertical wavenumbers absent.
    pub q: SpecField,
    /// Entropy combination ds_drho . R + ds_dtheta . Theta.
    pub upsilon: SpecField,
    pub coeffs: LimitCoeffs,
    pub t: f64,
}

impl QGState {
    /// Projects q onto the z-constant zero-mean gauge and dealiases both
    /// unknowns; the dynamics then preserves the gauge exactly.
    pub fn new(q: &Field, upsilon: &Field, coeffs: LimitCoeffs) -> Result<Self> {
        if !std::sync::Arc::ptr_eq(&q.grid, &upsilon.grid) {
            return Err(Error::Grid("q and Upsilon live on different grids".into()));
        }
        let mut qs = q.to_spec().vertical_mean();
        qs.coef[0] = Complex64::new(0.0, 0.0);
        qs.dealias();
        let mut up = upsilon.to_spec();
        up.dealias();
        Ok(Self {
            q: qs,
            upsilon: up,
            coeffs,
            t: 0.0,
        })
    }

    /// Geostrophic velocity perp_grad_h q at the current time.
    pub fn velocity(&self) -> [SpecField; 2] {
        qg_velocity(&self.q)
    }
}

pub fn qg_velocity(q: &SpecField) -> [SpecField; 2] {
    perp_grad_h(q)
}

/// Advective step-size bound 0.5 dx / max |U|.
pub fn qg_stable_dt(state: &QGState) -> f64 {
    let vel = state.velocity();
    let speed = vel[0]
        .to_phys()
        .linf_norm()
        .max(vel[1].to_phys().linf_norm());
    let dx = state.q.grid.spacing(0).min(state.q.grid.spacing(1));
    if speed < 1e-14 {
        f64::INFINITY
    } else {
        0.5 * dx / speed
    }
}

/// E = 1/2 int (q^2 / A + |grad_h q|^2).
pub fn qg_energy(state: &QGState) -> f64 {
    let q2 = state.q.l2_norm().powi(2);
    let gx = state.q.ddx(0).l2_norm().powi(2);
    let gy = state.q.ddx(1).l2_norm().powi(2);
    0.5 * (q2 / state.coeffs.a_wave + gx + gy)
}

/// Instantaneous dissipation mu ||lap_h q||^2; the energy law reads
/// dE/dt = -dissipation.
pub fn qg_dissipation_rate(state: &QGState) -> f64 {
    state.coeffs.mu * state.q.laplace_h().l2_norm().powi(2)
}

/// Advances q by dt. The per-mode linear factor
/// exp(-mu |k_h|^4 dt / (1/A + |k_h|^2)) is exact; the Jacobian
/// perp_grad q . grad_h lap_h q is explicit RK4 with dealiased products.
pub fn qg_step(state: &QGState, dt: f64) -> Result<QGState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let bound = qg_stable_dt(state);
    if dt > bound {
        return Err(Error::Invariant(format!(
            "advective CFL violated: dt = {dt} exceeds bound {bound}"
        )));
    }
    let a = state.coeffs.a_wave;
    let mu = state.coeffs.mu;
    let decay = |_: usize, k: [f64; 3]| -> f64 {
        let kh2 = k[0] * k[0] + k[1] * k[1];
        -mu * kh2 * kh2 / (1.0 / a + kh2)
    };
    let nonlinear = |u: &[SpecField; 1]| -> [SpecField; 1] {
        let lap = u[0].laplace_h();
        let vel = perp_grad_h(&u[0]);
        let mut jac = dealiased_product(&vel[0].to_phys(), &lap.ddx(0).to_phys());
        jac.axpy(
            Complex64::new(1.0, 0.0),
            &dealiased_product(&vel[1].to_phys(), &lap.ddx(1).to_phys()),
        );
        [jac.map_modes(|k, c| c / (1.0 / a + k[0] * k[0] + k[1] * k[1]))]
    };
    let [q] = if_rk4(&[state.q.clone()], decay, nonlinear, dt);
    Ok(QGState {
        q,
        upsilon: state.upsilon.clone(),
        coeffs: state.coeffs,
        t: state.t + dt,
    })
}

/// Advances Upsilon by dt with q held at its current value: exact per-mode
/// diffusion factor exp(-kappa |k|^2 dt / c_p), explicit dealiased advection
/// by perp_grad q, and the z-constant source (kappa alpha / c_p) lap_h q.
pub fn upsilon_step(state: &QGState, dt: f64) -> Result<QGState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let bound = qg_stable_dt(state);
    if dt > bound {
        return Err(Error::Invariant(format!(
            "advective CFL violated: dt = {dt} exceeds bound {bound}"
        )));
    }
    let coeffs = state.coeffs;
    let decay = |_: usize, k: [f64; 3]| -> f64 {
        -coeffs.kappa * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) / coeffs.c_p
    };
    let vel = state.velocity();
    let vel_phys = [vel[0].to_phys(), vel[1].to_phys()];
    let mut source = state.q.laplace_h();
    source.scale(coeffs.kappa * coeffs.alpha / coeffs.c_p);
    let nonlinear = |u: &[SpecField; 1]| -> [SpecField; 1] {
        let mut adv = dealiased_product(&vel_phys[0], &u[0].ddx(0).to_phys());
        adv.axpy(
            Complex64::new(1.0, 0.0),
            &dealiased_product(&vel_phys[1], &u[0].ddx(1).to_phys()),
        );
        adv.scale(-1.0);
        adv.axpy(Complex64::new(1.0, 0.0), &source);
        [adv]
    };
    let [upsilon] = if_rk4(&[state.upsilon.clone()], decay, nonlinear, dt);
    Ok(QGState {
        q: state.q.clone(),
        upsilon,
        coeffs: state.coeffs,
        t: state.t + dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ops::integral;
    use crate::spectral::{Parity, SpectralGrid};
    use crate::thermo::ThermoModel;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn default_coeffs() -> LimitCoeffs {
        LimitCoeffs::from_model(&ThermoModel::default()).unwrap()
    }

    fn grid() -> Arc<SpectralGrid> {
        SpectralGrid::reflected_slab(16, 8, 1.0).unwrap()
    }

    fn state_from(
        grid: &Arc<SpectralGrid>,
        q: impl FnMut(f64, f64, f64) -> f64,
        upsilon: impl FnMut(f64, f64, f64) -> f64,
    ) -> QGState {
        let qf = Field::from_fn(grid, Parity::Even, q);
        let uf = Field::from_fn(grid, Parity::Even, upsilon);
        QGState::new(&qf, &uf, default_coeffs()).unwrap()
    }

    #[test]
    fn single_mode_decays_at_the_closed_form_rate() {
        // q = cos x: the Jacobian vanishes identically, so the evolution is
        // the pure linear factor exp(-mu t / (1/A + 1)) with A = 10/3, mu = 1.
        let grid = grid();
        let mut state = state_from(&grid, |x, _, _| x.cos(), |_, _, _| 0.0);
        assert_relative_eq!(state.coeffs.a_wave, 10.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(state.coeffs.mu, 1.0, max_relative = 1e-12);
        let n0 = state.q.l2_norm();
        for _ in 0..10 {
            state = qg_step(&state, 0.1).unwrap();
        }
        let ratio = state.q.l2_norm() / n0;
        assert!(
            (ratio - (-1.0f64 / 1.3).exp()).abs() < 1e-6,
            "ratio {ratio}"
        );
        assert!((ratio - 0.46337).abs() < 1e-5);

        // and zero data stays zero
        let zero = state_from(&grid, |_, _, _| 0.0, |_, _, _| 0.0);
        let stepped = qg_step(&zero, 0.5).unwrap();
        assert_eq!(stepped.q.l2_norm(), 0.0);
    }

    #[test]
    fn inviscid_single_mode_is_steady() {
        let grid = grid();
        let mut state = state_from(&grid, |x, y, _| (x + y).cos(), |_, _, _| 0.0);
        state.coeffs.mu = 0.0;
        let q0 = state.q.clone();
        for _ in 0..20 {
            state = qg_step(&state, 0.05).unwrap();
        }
        let mut diff = state.q.clone();
        diff.axpy(Complex64::new(-1.0, 0.0), &q0);
        assert!(diff.l2_norm() < 1e-10, "drift {}", diff.l2_norm());
    }

    #[test]
    fn energy_law_balances_the_dissipation_integral() {
        let grid = grid();
        let mut state = state_from(
            &grid,
            |x, y, _| {
                0.3 * (x.cos() * y.sin() + 0.5 * (2.0 * x + y).cos()) + 0.2 * (y - 2.0 * x).sin()
            },
            |_, _, _| 0.0,
        );
        let e0 = qg_energy(&state);
        let dt = 1.25e-3;
        let steps = 200;
        let mut diss = vec![qg_dissipation_rate(&state)];
        for _ in 0..steps {
            state = qg_step(&state, dt).unwrap();
            diss.push(qg_dissipation_rate(&state));
        }
        // Simpson quadrature of the dissipation history
        let mut integral_d = 0.0;
        for i in (0..steps).step_by(2) {
            integral_d += dt / 3.0 * (diss[i] + 4.0 * diss[i + 1] + diss[i + 2]);
        }
        let e1 = qg_energy(&state);
        assert!(
            (e1 - e0 + integral_d).abs() < 1e-8,
            "energy defect {}",
            e1 - e0 + integral_d
        );

        // with mu = 0 the energy is conserved outright over unit time
        let mut inviscid = state_from(
            &grid,
            |x, y, _| 0.3 * (x.cos() * y.sin() + 0.5 * (2.0 * x + y).cos()),
            |_, _, _| 0.0,
        );
        inviscid.coeffs.mu = 0.0;
        let e0 = qg_energy(&inviscid);
        for _ in 0..100 {
            inviscid = qg_step(&inviscid, 0.01).unwrap();
        }
        assert!((qg_energy(&inviscid) - e0).abs() < 1e-8);
    }

    #[test]
    fn upsilon_mean_is_conserved_and_pure_modes_decay() {
        let grid = grid();
        // generic multi-mode data with a nonzero mean
        let mut state = state_from(
            &grid,
            |x, y, _| 0.4 * (x.cos() + (x - y).sin()),
            |x, y, z| {
                0.7 + 0.3 * x.cos() * (std::f64::consts::PI * z).cos() + 0.2 * (y * 2.0).sin()
            },
        );
        let mean0 = integral(&state.upsilon.to_phys()) / grid.volume();
        for _ in 0..50 {
            state = upsilon_step(&state, 0.02).unwrap();
        }
        let mean1 = integral(&state.upsilon.to_phys()) / grid.volume();
        assert!((mean1 - mean0).abs() < 1e-10, "mean drift {}", mean1 - mean0);

        // q = 0: a single mode with |k|^2 = 2 decays by the exact factor
        let mut pure = state_from(&grid, |_, _, _| 0.0, |x, y, _| (x + y).cos());
        let n0 = pure.upsilon.l2_norm();
        let t = 0.3;
        for _ in 0..3 {
            pure = upsilon_step(&pure, 0.1).unwrap();
        }
        let expected = (-pure.coeffs.kappa * 2.0 * t / pure.coeffs.c_p).exp();
        assert_relative_eq!(pure.upsilon.l2_norm() / n0, expected, epsilon = 1e-12);
    }

    #[test]
    fn pure_transport_conserves_the_l2_norm() {
        let grid = grid();
        let mut state = state_from(
            &grid,
            |x, y, _| 0.5 * x.cos() + 0.3 * (x + 2.0 * y).sin(),
            |x, y, z| y.cos() + 0.4 * (2.0 * x).sin() * (std::f64::consts::PI * z).cos(),
        );
        state.coeffs.kappa = 0.0;
        let n0 = state.upsilon.l2_norm();
        for _ in 0..100 {
            // q frozen: only upsilon_step is applied
            state = upsilon_step(&state, 0.005).unwrap();
        }
        assert!(
            (state.upsilon.l2_norm() - n0).abs() < 1e-8,
            "L2 drift {}",
            state.upsilon.l2_norm() - n0
        );
    }

    #[test]
    fn cfl_violation_is_reported() {
        let grid = grid();
        let state = state_from(&grid, |x, _, _| 5.0 * x.cos(), |_, _, _| 0.0);
        let bound = qg_stable_dt(&state);
        assert!(bound.is_finite());
        assert!(matches!(
            qg_step(&state, 2.0 * bound),
            Err(Error::Invariant(_))
        ));
        assert!(qg_step(&state, 0.9 * bound).is_ok());
    }
}
