//! Seeded ill-prepared initial data: zero-mean band-limited perturbations
//! that are close to the static state in amplitude but not constrained to
//! any limit balance.

use crate::equilibrium::{static_density_at, ForcePotentials};
use crate::error::{Error, Result};
use crate::primitive::PrimitiveState;
use crate::scaling::EpsilonScaling;
use crate::spectral::{Field, Parity, SpectralGrid};
use crate::thermo::ThermoModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, Copy)]
pub struct Amplitudes {
    pub density: f64,
    pub temperature: f64,
    pub velocity: f64,
}

impl Default for Amplitudes {
    fn default() -> Self {
        Self {
            density: 0.1,
            temperature: 0.1,
            velocity: 0.3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DataNorms {
    pub rho1_l2: f64,
    pub rho1_linf: f64,
    pub theta0_l2: f64,
    pub theta0_linf: f64,
    pub u0_l2: f64,
    pub u0_linf: f64,
}

/// The generated data set. rho1 and theta0 are the O(1) deviation fields
/// (the initial density is rho_tilde + eps^m rho1, the temperature
/// theta_bar + eps^m theta0); r_tilde = (rho_tilde - 1)/eps^m is the static
/// deviation and r0 = rho1 + r_tilde the total scaled density deviation.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub rho1: Field,
    pub theta0: Field,
    pub u0: [Field; 3],
    pub rho_tilde: Field,
    pub r_tilde: Field,
    pub r0: Field,
    pub norms: DataNorms,
    pub scaling: EpsilonScaling,
}

/// A deterministic random trigonometric polynomial: modes up to `band` per
/// axis, peak-normalized to `amp`. The draw order is fixed, so equal seeds
/// give bit-identical fields.
pub(crate) fn band_noise(
    grid: &Arc<SpectralGrid>,
    seed: u64,
    band: usize,
    amp: f64,
    parity: Parity,
) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ell = grid.period[0] / (2.0 * std::f64::consts::PI);
    let b = band as i64;
    let mut terms: Vec<(f64, f64, f64, f64, usize)> = Vec::new();
    for mx in 0..=b {
        for my in -b..=b {
            if mx == 0 && my < 0 {
                continue;
            }
            let n_lo = match parity {
                Parity::Odd => 1,
                _ => {
                    if mx == 0 && my == 0 {
                        1
                    } else {
                        0
                    }
                }
            };
            for n in n_lo..=band {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let phase: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
                terms.push((a, mx as f64 / ell, my as f64 / ell, phase, n));
            }
        }
    }
    let pi = std::f64::consts::PI;
    let mut f = Field::from_fn(grid, parity, |x, y, z| {
        let mut v = 0.0;
        for &(a, wx, wy, phase, n) in &terms {
            let h = (wx * x + wy * y + phase).cos();
            let vert = match parity {
                Parity::Odd => (pi * n as f64 * z).sin(),
                _ => (pi * n as f64 * z).cos(),
            };
            v += a * h * vert;
        }
        v
    });
    let peak = f.linf_norm();
    if peak > 0.0 {
        f.scale(amp / peak);
    }
    f
}

/// Generate seeded ill-prepared data on the grid. The scalar deviations have
/// their spectral zero mode removed; amplitude 0 reduces the data to the
/// static state exactly.
pub fn gen_ill_prepared(
    grid: &Arc<SpectralGrid>,
    model: &ThermoModel,
    scaling: EpsilonScaling,
    forces: ForcePotentials,
    seed: u64,
    band: usize,
    amps: Amplitudes,
) -> Result<InitialData> {
    let [nx, ny, nz] = grid.n;
    if 3 * band > nx.min(ny) || 3 * band > nz {
        return Err(Error::Config(format!(
            "band {band} exceeds the dealiased resolution of a {nx} x {ny} x {nz} grid \
             (need 3 band <= n per axis)"
        )));
    }

    let mut rho1 = band_noise(grid, seed, band, amps.density, Parity::Even);
    let mut theta0 = band_noise(grid, seed.wrapping_add(1), band, amps.temperature, Parity::Even);
    let u0 = [
        band_noise(grid, seed.wrapping_add(2), band, amps.velocity, Parity::Even),
        band_noise(grid, seed.wrapping_add(3), band, amps.velocity, Parity::Even),
        band_noise(grid, seed.wrapping_add(4), band, amps.velocity, Parity::Odd),
    ];
    // remove the zero mode of the scalar deviations exactly
    let m1 = rho1.mean();
    for v in &mut rho1.data {
        *v -= m1;
    }
    let m2 = theta0.mean();
    for v in &mut theta0.data {
        *v -= m2;
    }

    let mut rho_tilde = Field::zeros(grid, Parity::Even);
    for ix in 0..nx {
        let x = grid.coord(0, ix);
        for iy in 0..ny {
            let y = grid.coord(1, iy);
            for iz in 0..nz {
                let z = grid.coord(2, iz);
                rho_tilde.data[grid.index(ix, iy, iz)] =
                    static_density_at(model, &forces, &scaling, x, y, z)?;
            }
        }
    }
    let inv_ma = scaling.mach().recip();
    let mut r_tilde = rho_tilde.clone();
    for v in &mut r_tilde.data {
        *v = (*v - 1.0) * inv_ma;
    }
    let mut r0 = r_tilde.clone();
    r0.axpy(1.0, &rho1);

    let norms = DataNorms {
        rho1_l2: rho1.l2_norm(),
        rho1_linf: rho1.linf_norm(),
        theta0_l2: theta0.l2_norm(),
        theta0_linf: theta0.linf_norm(),
        u0_l2: (u0[0].l2_norm().powi(2) + u0[1].l2_norm().powi(2) + u0[2].l2_norm().powi(2))
            .sqrt(),
        u0_linf: u0[0].linf_norm().max(u0[1].linf_norm()).max(u0[2].linf_norm()),
    };

    Ok(InitialData {
        rho1,
        theta0,
        u0,
        rho_tilde,
        r_tilde,
        r0,
        norms,
        scaling,
    })
}

impl InitialData {
    /// Assemble the primitive solver state for these data:
    /// rho = rho_tilde + eps^m rho1, theta = theta_bar + eps^m theta0, u = u0.
    pub fn initial_state(
        &self,
        model: &ThermoModel,
        forces: ForcePotentials,
    ) -> Result<PrimitiveState> {
        let grid = &self.rho1.grid;
        let ma = self.scaling.mach();
        let mut rho = self.rho_tilde.clone();
        rho.axpy(ma, &self.rho1);
        let mut theta = Field::constant(grid, model.theta_bar);
        theta.axpy(ma, &self.theta0);
        PrimitiveState::from_primitive_fields(
            model,
            self.scaling,
            forces,
            &rho,
            [&self.u0[0], &self.u0[1], &self.u0[2]],
            &theta,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ops::integral;

    fn setup(
        seed: u64,
        amps: Amplitudes,
    ) -> (Arc<SpectralGrid>, ThermoModel, EpsilonScaling, ForcePotentials) {
        let grid = SpectralGrid::reflected_slab(16, 8, 1.0).unwrap();
        let model = ThermoModel::default();
        let scaling = EpsilonScaling::new(0.2, 1.0).unwrap();
        let forces = ForcePotentials {
            centrifugal_on: false,
            gravity_on: true,
            center: grid.horizontal_center(),
        };
        let _ = (seed, amps);
        (grid, model, scaling, forces)
    }

    #[test]
    fn scalar_deviations_have_no_mean_and_correct_parity() {
        let (grid, model, scaling, forces) = setup(3, Amplitudes::default());
        let data =
            gen_ill_prepared(&grid, &model, scaling, forces, 3, 2, Amplitudes::default()).unwrap();
        assert!(integral(&data.rho1).abs() <= 1e-13);
        assert!(integral(&data.theta0).abs() <= 1e-13);
        assert!(data.rho1.parity_defect() < 1e-12);
        assert!(data.u0[2].parity_defect() < 1e-12);
        assert_eq!(data.u0[2].parity, Parity::Odd);
        // reported norms match the fields
        assert!((data.norms.rho1_linf - data.rho1.linf_norm()).abs() < 1e-15);
        assert!(data.norms.u0_linf <= 0.3 + 1e-12);
        assert!(data.norms.u0_linf > 0.0);
    }

    #[test]
    fn same_seed_is_bit_identical_and_seeds_differ() {
        let (grid, model, scaling, forces) = setup(9, Amplitudes::default());
        let a = gen_ill_prepared(&grid, &model, scaling, forces, 9, 2, Amplitudes::default())
            .unwrap();
        let b = gen_ill_prepared(&grid, &model, scaling, forces, 9, 2, Amplitudes::default())
            .unwrap();
        assert_eq!(a.rho1.data, b.rho1.data);
        assert_eq!(a.theta0.data, b.theta0.data);
        for c in 0..3 {
            assert_eq!(a.u0[c].data, b.u0[c].data);
        }
        let c = gen_ill_prepared(&grid, &model, scaling, forces, 10, 2, Amplitudes::default())
            .unwrap();
        assert_ne!(a.rho1.data, c.rho1.data);
    }

    #[test]
    fn zero_amplitudes_reduce_to_the_static_state() {
        let (grid, model, scaling, forces) = setup(5, Amplitudes::default());
        let amps = Amplitudes {
            density: 0.0,
            temperature: 0.0,
            velocity: 0.0,
        };
        let data = gen_ill_prepared(&grid, &model, scaling, forces, 5, 2, amps).unwrap();
        let state = data.initial_state(&model, forces).unwrap();
        let mut diff = state.rho.clone();
        diff.axpy(-1.0, &state.rho_tilde);
        assert!(diff.linf_norm() <= 1e-13);
        for c in 0..3 {
            assert_eq!(state.mom[c].linf_norm(), 0.0);
        }
    }

    #[test]
    fn band_beyond_the_dealiased_ball_is_rejected() {
        let (grid, model, scaling, forces) = setup(1, Amplitudes::default());
        assert!(matches!(
            gen_ill_prepared(&grid, &model, scaling, forces, 1, 3, Amplitudes::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn r0_combines_the_static_deviation_with_the_perturbation() {
        let (grid, model, scaling, forces) = setup(2, Amplitudes::default());
        let data =
            gen_ill_prepared(&grid, &model, scaling, forces, 2, 2, Amplitudes::default()).unwrap();
        let i = grid.index(3, 5, 2);
        let expect = data.rho1.data[i] + (data.rho_tilde.data[i] - 1.0) / scaling.mach();
        assert!((data.r0.data[i] - expect).abs() < 1e-12);
    }
}
