//! Solvers for the two limit systems the scaled model converges to:
//! the quasi-geostrophic system at m = 1 (stream function q coupled to the
//! transported entropy combination Upsilon) and the Oberbeck-Boussinesq
//! system at m > 1 (2D velocity, 3D temperature, diagnosed density).

pub mod ob;
pub mod qg;

pub use ob::{boussinesq_residual, ob_divergence, ob_stable_dt, ob_step, recover_r, OBState};
pub use qg::{
    qg_dissipation_rate, qg_energy, qg_stable_dt, qg_step, qg_velocity, upsilon_step, QGState,
};

use crate::error::Result;
use crate::spectral::SpecField;
use crate::thermo::ThermoModel;

/// Linearization and transport coefficients, all evaluated at the reference
/// point (1, theta_bar), in the combination the limit systems need them.
#[derive(Debug, Clone, Copy)]
pub struct LimitCoeffs {
    pub a_wave: f64,
    pub alpha: f64,
    pub c_p: f64,
    pub dp_drho: f64,
    pub dp_dtheta: f64,
    pub ds_drho: f64,
    pub ds_dtheta: f64,
    pub theta_bar: f64,
    /// Shear viscosity at the reference temperature.
    pub mu: f64,
    /// Heat conductivity at the reference temperature.
    pub kappa: f64,
}

impl LimitCoeffs {
    pub fn from_model(model: &ThermoModel) -> Result<Self> {
        let lin = model.linearization_coeffs()?;
        let partials = model.partials(1.0, model.theta_bar)?;
        Ok(Self {
            a_wave: lin.a_wave,
            alpha: lin.alpha,
            c_p: lin.c_p,
            dp_drho: partials.dp_drho,
            dp_dtheta: partials.dp_dtheta,
            ds_drho: partials.ds_drho,
            ds_dtheta: partials.ds_dtheta,
            theta_bar: model.theta_bar,
            mu: model.mu(model.theta_bar),
            kappa: model.kappa(model.theta_bar),
        })
    }
}

/// One step of the integrating-factor RK4 scheme for
/// d/dt u_i = lambda_i(k) u_i + N_i(u).
///
/// The stiff diagonal part is integrated exactly through the exponential
/// factors; the nonlinearity sees the classical RK4 quadrature. With N = 0
/// the step is exact for any dt.
pub(crate) fn if_rk4<const K: usize>(
    u0: &[SpecField; K],
    decay: impl Fn(usize, [f64; 3]) -> f64,
    mut nonlinear: impl FnMut(&[SpecField; K]) -> [SpecField; K],
    dt: f64,
) -> [SpecField; K] {
    let scaled = |fields: &[SpecField; K], half: bool| -> [SpecField; K] {
        let fraction = if half { 0.5 } else { 1.0 };
        std::array::from_fn(|i| {
            fields[i].map_modes(|k, c| c * (decay(i, k) * dt * fraction).exp())
        })
    };
    let lin_comb = |a: &[SpecField; K], ca: f64, b: &[SpecField; K], cb: f64| -> [SpecField; K] {
        std::array::from_fn(|i| {
            let mut out = a[i].clone();
            out.scale(ca);
            out.axpy(num_complex::Complex64::new(cb, 0.0), &b[i]);
            out
        })
    };

    let s1 = nonlinear(u0);
    let e2_u0 = scaled(u0, true);
    let s2 = nonlinear(&scaled(&lin_comb(u0, 1.0, &s1, dt / 2.0), true));
    let s3 = nonlinear(&lin_comb(&e2_u0, 1.0, &s2, dt / 2.0));
    let e_u0 = scaled(u0, false);
    let s4 = nonlinear(&lin_comb(&e_u0, 1.0, &scaled(&s3, true), dt));

    let mut out = e_u0;
    let e_s1 = scaled(&s1, false);
    let e2_s23 = scaled(&lin_comb(&s2, 1.0, &s3, 1.0), true);
    for i in 0..K {
        out[i].axpy(num_complex::Complex64::new(dt / 6.0, 0.0), &e_s1[i]);
        out[i].axpy(num_complex::Complex64::new(dt / 3.0, 0.0), &e2_s23[i]);
        out[i].axpy(num_complex::Complex64::new(dt / 6.0, 0.0), &s4[i]);
    }
    out
}
