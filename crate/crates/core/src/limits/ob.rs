//! The m > 1 limit: incompressible Oberbeck-Boussinesq dynamics.
//!
//! The velocity is horizontal, two-dimensional and divergence-free
//! (Taylor-Proudman); the temperature deviation Theta is three-dimensional
//! with even vertical extension (Neumann walls); the density deviation R is
//! not evolved but diagnosed from the balance
//!
//! ```text
//! dp_drho . R + dp_dtheta . Theta = G + delta_2(m) F   (up to a constant).
//! ```

use super::{if_rk4, LimitCoeffs};
use crate::equilibrium::ForcePotentials;
use crate::error::{Error, Result};
use crate::scaling::EpsilonScaling;
use crate::spectral::ops::{dealiased_product, div_h, leray_project_h, vertical_mean_field};
use crate::spectral::{Field, Parity, SpecField};
use num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct OBState {
    /// Horizontal velocity, z-constant and divergence-free.
    pub u: [SpecField; 2],
    /// Temperature deviation, even vertical extension.
    pub theta: SpecField,
    pub coeffs: LimitCoeffs,
    pub forces: ForcePotentials,
    pub t: f64,
    // force data sampled once on the grid
    f_pot: Field,
    g_pot: Field,
    grad_f_h: [Field; 2],
}

impl OBState {
    /// Projects the velocity onto its invariant manifold (z-constant,
    /// divergence-free, dealiased) and samples the force potentials.
    /// Theta must carry even parity: that is the Neumann condition.
    pub fn new(
        u: [&Field; 2],
        theta: &Field,
        coeffs: LimitCoeffs,
        forces: ForcePotentials,
    ) -> Result<Self> {
        let grid = theta.grid.clone();
        if !Arc::ptr_eq(&u[0].grid, &grid) || !Arc::ptr_eq(&u[1].grid, &grid) {
            return Err(Error::Grid("velocity and Theta on different grids".into()));
        }
        if theta.parity != Parity::Even {
            return Err(Error::Invariant(
                "Theta must have even vertical extension (Neumann walls)".into(),
            ));
        }
        let mut uh = [u[0].to_spec().vertical_mean(), u[1].to_spec().vertical_mean()];
        uh[0].dealias();
        uh[1].dealias();
        let uh = leray_project_h(&uh);
        let mut th = theta.to_spec();
        th.dealias();
        let f_pot = Field::from_fn(&grid, Parity::Even, |x, y, _| forces.f_pot(x, y));
        let g_pot = Field::from_fn(&grid, Parity::Even, |_, _, z| forces.g_pot(z));
        let grad_f_h = [
            Field::from_fn(&grid, Parity::Even, |x, y, _| forces.grad_f(x, y)[0]),
            Field::from_fn(&grid, Parity::Even, |x, y, _| forces.grad_f(x, y)[1]),
        ];
        Ok(Self {
            u: uh,
            theta: th,
            coeffs,
            forces,
            t: 0.0,
            f_pot,
            g_pot,
            grad_f_h,
        })
    }

    /// G + delta_2(m) F on the grid.
    pub fn g_script(&self, scaling: &EpsilonScaling) -> Field {
        let mut g = self.g_pot.clone();
        g.axpy(scaling.delta2(), &self.f_pot);
        g
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * (self.u[0].l2_norm().powi(2) + self.u[1].l2_norm().powi(2))
    }
}

/// Advective step-size bound 0.5 dx / max |U|.
pub fn ob_stable_dt(state: &OBState) -> f64 {
    let speed = state.u[0]
        .to_phys()
        .linf_norm()
        .max(state.u[1].to_phys().linf_norm());
    let dx = state.theta.grid.spacing(0).min(state.theta.grid.spacing(1));
    if speed < 1e-14 {
        f64::INFINITY
    } else {
        0.5 * dx / speed
    }
}

/// Advances velocity and temperature jointly by dt:
///
///   d/dt U + div_h(U (x) U) + grad_h Gamma - mu lap_h U = delta_2 <R> grad_h F
///   c_p (d/dt Theta + div_h(Theta U)) - kappa lap Theta = theta_bar alpha U . grad_h(G + delta_2 F)
///
/// Diffusion is exact per mode; transport and forces are explicit RK4 with
/// dealiased products; the pressure gauge never appears (Leray projection).
pub fn ob_step(state: &OBState, dt: f64, scaling: &EpsilonScaling) -> Result<OBState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let bound = ob_stable_dt(state);
    if dt > bound {
        return Err(Error::Invariant(format!(
            "advective CFL violated: dt = {dt} exceeds bound {bound}"
        )));
    }
    let coeffs = state.coeffs;
    let delta2 = scaling.delta2();
    let decay = |i: usize, k: [f64; 3]| -> f64 {
        let kh2 = k[0] * k[0] + k[1] * k[1];
        if i < 2 {
            -coeffs.mu * kh2
        } else {
            -coeffs.kappa * (kh2 + k[2] * k[2]) / coeffs.c_p
        }
    };
    let nonlinear = |fields: &[SpecField; 3]| -> [SpecField; 3] {
        let p = [fields[0].to_phys(), fields[1].to_phys()];
        let pth = fields[2].to_phys();

        let p11 = dealiased_product(&p[0], &p[0]);
        let p12 = dealiased_product(&p[0], &p[1]);
        let p22 = dealiased_product(&p[1], &p[1]);
        let mut n1 = p11.ddx(0);
        n1.axpy(Complex64::new(1.0, 0.0), &p12.ddx(1));
        n1.scale(-1.0);
        let mut n2 = p12.ddx(0);
        n2.axpy(Complex64::new(1.0, 0.0), &p22.ddx(1));
        n2.scale(-1.0);
        if delta2 != 0.0 {
            // buoyancy-type source: the vertical mean of the diagnosed R
            // against the centrifugal gradient
            let r = recover_r_impl(&pth, &coeffs, &state.g_pot, &state.f_pot, delta2);
            let r_mean = vertical_mean_field(&r);
            n1.axpy(
                Complex64::new(delta2, 0.0),
                &dealiased_product(&r_mean, &state.grad_f_h[0]),
            );
            n2.axpy(
                Complex64::new(delta2, 0.0),
                &dealiased_product(&r_mean, &state.grad_f_h[1]),
            );
        }
        let [n1, n2] = leray_project_h(&[n1, n2]);

        let flux_x = dealiased_product(&pth, &p[0]);
        let flux_y = dealiased_product(&pth, &p[1]);
        let mut nth = flux_x.ddx(0);
        nth.axpy(Complex64::new(1.0, 0.0), &flux_y.ddx(1));
        nth.scale(-1.0);
        if delta2 != 0.0 {
            let gain = coeffs.theta_bar * coeffs.alpha / coeffs.c_p * delta2;
            nth.axpy(
                Complex64::new(gain, 0.0),
                &dealiased_product(&p[0], &state.grad_f_h[0]),
            );
            nth.axpy(
                Complex64::new(gain, 0.0),
                &dealiased_product(&p[1], &state.grad_f_h[1]),
            );
        }
        [n1, n2, nth]
    };
    let start = [
        state.u[0].clone(),
        state.u[1].clone(),
        state.theta.clone(),
    ];
    let [u1, u2, theta] = if_rk4(&start, decay, nonlinear, dt);
    Ok(OBState {
        u: [u1, u2],
        theta,
        coeffs: state.coeffs,
        forces: state.forces,
        t: state.t + dt,
        f_pot: state.f_pot.clone(),
        g_pot: state.g_pot.clone(),
        grad_f_h: state.grad_f_h.clone(),
    })
}

fn recover_r_impl(
    theta: &Field,
    coeffs: &LimitCoeffs,
    g_pot: &Field,
    f_pot: &Field,
    delta2: f64,
) -> Field {
    let parity = if theta.parity == Parity::Even {
        Parity::Even
    } else {
        Parity::Mixed
    };
    let mut r = Field::zeros(&theta.grid, parity);
    for i in 0..theta.data.len() {
        let g_script = g_pot.data[i] + delta2 * f_pot.data[i];
        r.data[i] = (g_script - coeffs.dp_dtheta * theta.data[i]) / coeffs.dp_drho;
    }
    let mean = r.mean();
    for v in &mut r.data {
        *v -= mean;
    }
    r
}

/// Inverts the balance dp_drho R + dp_dtheta Theta = G + delta_2 F for R,
/// fixing the free constant by the zero-mean gauge.
pub fn recover_r(
    theta: &Field,
    coeffs: &LimitCoeffs,
    forces: &ForcePotentials,
    scaling: &EpsilonScaling,
) -> Result<Field> {
    if !(coeffs.dp_drho > 0.0) {
        return Err(Error::Domain(format!(
            "dp_drho must be positive to invert the balance, got {}",
            coeffs.dp_drho
        )));
    }
    let grid = &theta.grid;
    let g_pot = Field::from_fn(grid, Parity::Even, |_, _, z| forces.g_pot(z));
    let f_pot = Field::from_fn(grid, Parity::Even, |x, y, _| forces.f_pot(x, y));
    Ok(recover_r_impl(theta, coeffs, &g_pot, &f_pot, scaling.delta2()))
}

/// Pointwise defect of the balance after recovery: the combination
/// dp_drho R + dp_dtheta Theta - G - delta_2 F should be spatially constant,
/// so its sup-deviation from its own mean measures the gradient residual.
pub fn boussinesq_residual(
    r: &Field,
    theta: &Field,
    coeffs: &LimitCoeffs,
    forces: &ForcePotentials,
    scaling: &EpsilonScaling,
) -> f64 {
    let delta2 = scaling.delta2();
    let grid = &theta.grid;
    let [nx, ny, nz] = grid.n;
    let mut h = vec![0.0; grid.len()];
    for ix in 0..nx {
        let x = grid.coord(0, ix);
        for iy in 0..ny {
            let y = grid.coord(1, iy);
            for iz in 0..nz {
                let z = grid.coord(2, iz);
                let i = grid.index(ix, iy, iz);
                h[i] = coeffs.dp_drho * r.data[i] + coeffs.dp_dtheta * theta.data[i]
                    - forces.g_pot(z)
                    - delta2 * forces.f_pot(x, y);
            }
        }
    }
    let mean = h.iter().sum::<f64>() / h.len() as f64;
    h.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()))
}

/// Horizontal divergence defect of the current velocity.
pub fn ob_divergence(state: &OBState) -> f64 {
    div_h(&[state.u[0].clone(), state.u[1].clone()]).l2_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralGrid;
    use crate::thermo::ThermoModel;
    use approx::assert_relative_eq;

    fn default_coeffs() -> LimitCoeffs {
        LimitCoeffs::from_model(&ThermoModel::default()).unwrap()
    }

    fn forces_off() -> ForcePotentials {
        ForcePotentials {
            centrifugal_on: false,
            gravity_on: false,
            center: [0.0, 0.0],
        }
    }

    #[test]
    fn taylor_green_vortex_decays_exponentially() {
        let grid = SpectralGrid::reflected_slab(16, 8, 1.0).unwrap();
        let u1 = Field::from_fn(&grid, Parity::Even, |x, y, _| x.sin() * y.cos());
        let u2 = Field::from_fn(&grid, Parity::Even, |x, y, _| -x.cos() * y.sin());
        let th = Field::zeros(&grid, Parity::Even);
        let mut state = OBState::new([&u1, &u2], &th, default_coeffs(), forces_off()).unwrap();
        assert_relative_eq!(state.coeffs.mu, 1.0, max_relative = 1e-12);
        let scaling = EpsilonScaling::new(0.5, 3.0).unwrap();
        let n0 = (state.u[0].l2_norm().powi(2) + state.u[1].l2_norm().powi(2)).sqrt();
        for _ in 0..10 {
            state = ob_step(&state, 0.05, &scaling).unwrap();
        }
        let n1 = (state.u[0].l2_norm().powi(2) + state.u[1].l2_norm().powi(2)).sqrt();
        // the nonlinearity is a pure gradient here, so the decay is exact
        assert_relative_eq!(n1 / n0, (-1.0f64).exp(), epsilon = 1e-9);
        assert!((n1 / n0 - 0.36788).abs() < 1e-5);
    }

    #[test]
    fn still_fluid_diffuses_temperature_mode_by_mode() {
        let grid = SpectralGrid::reflected_slab(16, 16, 1.0).unwrap();
        let z1 = Field::zeros(&grid, Parity::Even);
        let z2 = Field::zeros(&grid, Parity::Even);
        let th = Field::from_fn(&grid, Parity::Even, |x, _, z| {
            x.cos() * (std::f64::consts::PI * z).cos()
        });
        let mut state = OBState::new([&z1, &z2], &th, default_coeffs(), forces_off()).unwrap();
        let scaling = EpsilonScaling::new(0.5, 1.5).unwrap();
        let n0 = state.theta.l2_norm();
        let t = 0.25;
        for _ in 0..5 {
            state = ob_step(&state, 0.05, &scaling).unwrap();
        }
        let k2 = 1.0 + std::f64::consts::PI.powi(2);
        let expected = (-state.coeffs.kappa * k2 * t / state.coeffs.c_p).exp();
        assert_relative_eq!(state.theta.l2_norm() / n0, expected, epsilon = 1e-12);
    }

    #[test]
    fn velocity_stays_divergence_free_z_constant_and_theta_even() {
        let grid = SpectralGrid::reflected_slab(16, 8, 1.0).unwrap();
        // deliberately non-solenoidal input: the constructor projects it
        let u1 = Field::from_fn(&grid, Parity::Even, |x, y, _| {
            x.sin() * y.cos() + 0.3 * (x + y).cos()
        });
        let u2 = Field::from_fn(&grid, Parity::Even, |x, y, _| 0.4 * (2.0 * x).sin() + y.cos());
        let th = Field::from_fn(&grid, Parity::Even, |x, y, z| {
            0.2 * x.cos() * (std::f64::consts::PI * z).cos() + 0.1 * y.sin()
        });
        let forces = ForcePotentials {
            centrifugal_on: true,
            gravity_on: true,
            center: [std::f64::consts::PI, std::f64::consts::PI],
        };
        let mut state = OBState::new([&u1, &u2], &th, default_coeffs(), forces).unwrap();
        // m = 2 switches the centrifugal coupling on
        let scaling = EpsilonScaling::new(0.5, 2.0).unwrap();
        for _ in 0..5 {
            state = ob_step(&state, 0.02, &scaling).unwrap();
        }
        assert!(ob_divergence(&state) < 1e-12);
        assert!(state.u[0].vertical_fluctuation().l2_norm() == 0.0);
        assert!(state.u[1].vertical_fluctuation().l2_norm() == 0.0);
        assert!(state.theta.to_phys().parity_defect() < 1e-12);
    }

    #[test]
    fn recovered_density_matches_the_closed_form() {
        let grid = SpectralGrid::reflected_slab(8, 16, 1.0).unwrap();
        let coeffs = default_coeffs();
        let forces = ForcePotentials {
            centrifugal_on: false,
            gravity_on: true,
            center: [0.0, 0.0],
        };
        let scaling = EpsilonScaling::new(0.5, 3.0).unwrap();
        let theta = Field::zeros(&grid, Parity::Even);
        let r = recover_r(&theta, &coeffs, &forces, &scaling).unwrap();
        // G = -x3 with zero-mean gauge: R = (1/2 - x3) * 3/8 on the slab
        assert_relative_eq!(r.data[grid.index(0, 0, 0)], 0.1875, epsilon = 1e-12);
        let iz_half = grid.n[2] / 4; // z = 1/2
        assert!(r.data[grid.index(3, 2, iz_half)].abs() < 1e-12);
        assert!(boussinesq_residual(&r, &theta, &coeffs, &forces, &scaling) < 1e-12);

        // a Theta that absorbs the whole balance leaves R = 0
        let g_mean = -0.5;
        let absorbed = Field::from_fn(&grid, Parity::Even, |_, _, z| {
            (forces.g_pot(z) - g_mean) / coeffs.dp_dtheta
        });
        let r0 = recover_r(&absorbed, &coeffs, &forces, &scaling).unwrap();
        assert!(r0.linf_norm() < 1e-12);
    }

    #[test]
    fn rejects_odd_temperature_and_degenerate_pressure_slope() {
        let grid = SpectralGrid::reflected_slab(8, 8, 1.0).unwrap();
        let z = Field::zeros(&grid, Parity::Even);
        let odd = Field::zeros(&grid, Parity::Odd);
        assert!(matches!(
            OBState::new([&z, &z], &odd, default_coeffs(), forces_off()),
            Err(Error::Invariant(_))
        ));
        let mut bad = default_coeffs();
        bad.dp_drho = 0.0;
        let scaling = EpsilonScaling::new(0.5, 2.0).unwrap();
        assert!(matches!(
            recover_r(&z, &bad, &forces_off(), &scaling),
            Err(Error::Domain(_))
        ));
    }
}
