// temporary diagnostic probe, not part of the crate
use nsflab::equilibrium::ForcePotentials;
use nsflab::harness::{gen_ill_prepared, Amplitudes};
use nsflab::spectral::Field;
use nsflab::limits::LimitCoeffs;
use nsflab::scaling::EpsilonScaling;
use nsflab::spectral::{Parity, SpectralGrid};
use nsflab::thermo::ThermoModel;
use nsflab::waves::{WavePropagator, WaveState};

fn main() {
    let grid = SpectralGrid::reflected_slab(32, 8, 1.0).unwrap();
    let mut model = ThermoModel::default();
    model.mu_bar = 0.02;
    let forces = ForcePotentials {
        centrifugal_on: true,
        gravity_on: true,
        center: grid.horizontal_center(),
    };
    let amps = Amplitudes {
        density: 0.1,
        temperature: 0.1,
        velocity: 0.3,
    };
    let coeffs = LimitCoeffs::from_model(&model).unwrap();
    let seed = 7u64;
    let delta = 5e-4;

    let tau = std::f64::consts::TAU;
    let f_force = Field::from_fn(&grid, Parity::Even, |x, y, z| {
        0.1 * ((tau * x).cos() + (tau * (y + 0.3)).cos() * (tau * z / 2.0).cos())
    })
    .to_spec();
    let g_force = [
        Field::from_fn(&grid, Parity::Even, |x, y, _| {
            0.1 * ((tau * (x + 0.1)).sin() * (tau * y).cos())
        })
        .to_spec(),
        Field::from_fn(&grid, Parity::Even, |x, y, z| {
            0.1 * ((tau * y).sin() + (tau * x).cos() * (tau * z / 2.0).cos())
        })
        .to_spec(),
        Field::from_fn(&grid, Parity::Odd, |x, _, z| {
            0.1 * ((tau * z / 2.0).sin() * (tau * x).cos())
        })
        .to_spec(),
    ];
    let forcing = Some((&f_force, &g_force));

    for eps in [0.4, 0.1] {
        let scaling = EpsilonScaling::new(eps, 2.0).unwrap();
        let data = gen_ill_prepared(&grid, &model, scaling, forces, seed, 2, amps).unwrap();
        let state = data.initial_state(&model, forces).unwrap();
        let propagator = WavePropagator::new(&grid, scaling, coeffs.a_wave).unwrap();
        let mut w0 = WaveState::zeros(&grid);
        let mut lam = data.r0.clone();
        lam.scale(coeffs.dp_drho);
        lam.axpy(coeffs.dp_dtheta, &data.theta0);
        w0.lambda = lam.to_spec();
        for c in 0..3 {
            w0.w[c] = state.rho.product(&data.u0[c]).to_spec();
        }

        let rate = propagator.gamma_rate(&f_force, &g_force);
        println!(
            "eps = {eps}: delta*||gamma_rate|| = {:.6e}",
            delta * rate.l2_norm()
        );
        for t in [0.0, 0.25, 0.5] {
            // unforced: gamma(t+delta) - gamma(t) should be roundoff
            let a = propagator.propagate(&w0, t);
            let b = propagator.propagate(&w0, t + delta);
            let mut gd = propagator.gamma_of(&b);
            gd.axpy(num_complex::Complex64::new(-1.0, 0.0), &propagator.gamma_of(&a));
            let free = gd.l2_norm();
            // forced: should be exactly delta * rate
            let a = propagator.propagate_forced(&w0, forcing, t);
            let b = propagator.propagate_forced(&w0, forcing, t + delta);
            let mut gd = propagator.gamma_of(&b);
            gd.axpy(num_complex::Complex64::new(-1.0, 0.0), &propagator.gamma_of(&a));
            let forced = gd.l2_norm();
            println!("  t = {t}: free |dgamma| = {free:.4e}, forced |dgamma| = {forced:.4e}");
        }
    }
}
