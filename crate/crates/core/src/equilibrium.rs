//! Static density profiles under centrifugal and gravitational forcing.
//!
//! A static state at reference temperature `theta_bar` balances the pressure
//! gradient against the forces, which integrates to
//!
//! ```text
//! Pi(rho_tilde) = eps^(2(m-1)) F + eps^m G,
//! Pi(rho) = integral_1^rho  dp_drho(z, theta_bar) / z  dz,
//! ```
//!
//! with `F = |x_h - c|^2` (centrifugal) and `G = -x3` (gravity). `Pi` is
//! strictly increasing, so each point solves independently by safeguarded
//! Newton. For the default profile `Pi` is closed-form:
//! `theta_bar ln rho + (5/2)(rho^(2/3) - 1)` — the radiative pressure part
//! carries no density dependence and drops out.

use crate::error::{Error, Result};
use crate::ratefit::{fit_rate_robust, RateFit};
use crate::scaling::EpsilonScaling;
use crate::thermo::{PKind, StructuralP, ThermoModel};
use crate::util::{adaptive_simpson, solve_increasing};
use serde::{Deserialize, Serialize};

/// Which forces act, and where the centrifugal axis sits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ForcePotentials {
    pub centrifugal_on: bool,
    pub gravity_on: bool,
    /// Horizontal coordinates of the rotation axis.
    pub center: [f64; 2],
}

impl ForcePotentials {
    pub fn both(center: [f64; 2]) -> Self {
        Self {
            centrifugal_on: true,
            gravity_on: true,
            center,
        }
    }

    /// F at a horizontal point (0 when the centrifugal force is off).
    pub fn f_pot(&self, x: f64, y: f64) -> f64 {
        if !self.centrifugal_on {
            return 0.0;
        }
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        dx * dx + dy * dy
    }

    /// grad F = 2 (x_h - c).
    pub fn grad_f(&self, x: f64, y: f64) -> [f64; 2] {
        if !self.centrifugal_on {
            return [0.0, 0.0];
        }
        [2.0 * (x - self.center[0]), 2.0 * (y - self.center[1])]
    }

    /// G on the vertical period cell [0, 2): the even extension of -x3 from
    /// the physical slab [0, 1], i.e. -z below the midplane image, -(2 - z)
    /// above. Continuous, with kinks at z = 0 and z = 1.
    pub fn g_pot(&self, z: f64) -> f64 {
        if !self.gravity_on {
            return 0.0;
        }
        let z = z.rem_euclid(2.0);
        if z <= 1.0 {
            -z
        } else {
            -(2.0 - z)
        }
    }

    /// dG/dz, with the convention that the kink points z = 0, 1 report 0
    /// (the symmetric choice for an odd derivative).
    pub fn dg_dz(&self, z: f64) -> f64 {
        if !self.gravity_on {
            return 0.0;
        }
        let z = z.rem_euclid(2.0);
        if z == 0.0 || z == 1.0 {
            0.0
        } else if z < 1.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// The pressure potential Pi(rho).
pub fn profile_pi(model: &ThermoModel, rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("Pi needs rho > 0, got {rho}")));
    }
    let th = model.theta_bar;
    match &model.p_kind {
        PKind::Default => Ok(th * rho.ln() + 2.5 * (rho.powf(2.0 / 3.0) - 1.0)),
        PKind::Table(t) => {
            // dp_drho(z, th) = th P'(z th^(-3/2))
            let integrand = |z: f64| th * t.dp(z * th.powf(-1.5)) / z;
            Ok(adaptive_simpson(integrand, 1.0, rho, 1e-13))
        }
    }
}

/// dPi/drho = dp_drho(rho, theta_bar) / rho.
pub fn profile_pi_prime(model: &ThermoModel, rho: f64) -> Result<f64> {
    let th = model.theta_bar;
    match &model.p_kind {
        PKind::Default => Ok((th + 5.0 / 3.0 * rho.powf(2.0 / 3.0)) / rho),
        PKind::Table(t) => Ok(th * t.dp(rho * th.powf(-1.5)) / rho),
    }
}

/// Invert Pi: find rho with Pi(rho) = target, to |Pi - target| <= 1e-12.
pub fn solve_static(model: &ThermoModel, target: f64) -> Result<f64> {
    let rho = solve_increasing(
        |r| profile_pi(model, r).unwrap_or(f64::NAN),
        |r| profile_pi_prime(model, r).unwrap_or(f64::NAN),
        target,
        1.0,
        1e-12,
        1e-13,
    )?;
    let residual = (profile_pi(model, rho)? - target).abs();
    if residual > 1e-12 {
        return Err(Error::Invariant(format!(
            "static solve stalled: |Pi - target| = {residual:.3e} at rho = {rho}"
        )));
    }
    Ok(rho)
}

/// The static density at one spatial point for a given scaling.
pub fn static_density_at(
    model: &ThermoModel,
    forces: &ForcePotentials,
    scaling: &EpsilonScaling,
    x: f64,
    y: f64,
    z: f64,
) -> Result<f64> {
    let rhs = scaling.centrifugal_prefactor() * forces.f_pot(x, y)
        + scaling.gravity_prefactor() * forces.g_pot(z);
    solve_static(model, rhs)
}

/// The eps -> 0 limit of the static profile: for m = 1 with the centrifugal
/// force on this is the non-constant solution of Pi = F; otherwise the
/// uniform state 1.
pub fn limit_density_at(
    model: &ThermoModel,
    forces: &ForcePotentials,
    m: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    if forces.centrifugal_on && m == 1.0 {
        solve_static(model, forces.f_pot(x, y))
    } else {
        Ok(1.0)
    }
}

/// The convergence rate sup_x |rho_tilde_eps - limit| should exhibit:
/// eps^m when only gravity acts or m >= 2; eps^(2(m-1)) for 1 < m < 2 where
/// the centrifugal term dominates; eps^1 for m = 1 against the centrifugal
/// limit profile.
pub fn expected_static_rate(m: f64, centrifugal_on: bool) -> f64 {
    if !centrifugal_on || m >= 2.0 {
        m
    } else if m > 1.0 {
        2.0 * (m - 1.0)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StaticStudyConfig {
    pub m: f64,
    pub eps: Vec<f64>,
    pub forces: ForcePotentials,
    /// Radial samples in [0, r_max] and vertical samples in [0, 1].
    pub n_r: usize,
    pub n_z: usize,
    pub r_max: f64,
}

impl StaticStudyConfig {
    pub fn new(m: f64, forces: ForcePotentials) -> Self {
        Self {
            m,
            eps: vec![0.5, 0.25, 0.125, 0.0625],
            forces,
            n_r: 17,
            n_z: 17,
            r_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StaticStudy {
    pub fit: RateFit,
    /// Which eps survived the robust fit.
    pub used: Vec<bool>,
    pub expected_rate: f64,
    /// sup-norm deviation from the limit profile, one entry per eps.
    pub deviations: Vec<f64>,
    /// Minimum density seen across every eps and sample point.
    pub rho_min: f64,
}

/// Measure the static convergence rate on an (r, z) sample sheet of the
/// cylinder: F = r^2, G = -z with r in [0, r_max], z in [0, 1].
pub fn static_rate_study(model: &ThermoModel, cfg: &StaticStudyConfig) -> Result<StaticStudy> {
    if cfg.eps.len() < 2 {
        return Err(Error::Config("rate study needs at least two eps values".into()));
    }
    let expected_rate = expected_static_rate(cfg.m, cfg.forces.centrifugal_on);
    let mut deviations = Vec::with_capacity(cfg.eps.len());
    let mut rho_min = f64::INFINITY;
    for &eps in &cfg.eps {
        let scaling = EpsilonScaling::new(eps, cfg.m)?;
        let mut sup: f64 = 0.0;
        for i in 0..cfg.n_r {
            let r = cfg.r_max * i as f64 / (cfg.n_r - 1) as f64;
            // sample the axis at (center + r, center): F = r^2 regardless
            let (x, y) = (cfg.forces.center[0] + r, cfg.forces.center[1]);
            let limit = limit_density_at(model, &cfg.forces, cfg.m, x, y)?;
            for j in 0..cfg.n_z {
                let z = j as f64 / (cfg.n_z - 1) as f64;
                let rho = static_density_at(model, &cfg.forces, &scaling, x, y, z)?;
                sup = sup.max((rho - limit).abs());
                rho_min = rho_min.min(rho);
            }
        }
        deviations.push(sup);
    }
    let (fit, used) = fit_rate_robust(&cfg.eps, &deviations)?;
    Ok(StaticStudy {
        fit,
        used,
        expected_rate,
        deviations,
        rho_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::TableP;
    use approx::assert_relative_eq;

    #[test]
    fn pi_closed_form_values() {
        let m = ThermoModel::default();
        let exact2 = 2f64.ln() + 2.5 * (2f64.powf(2.0 / 3.0) - 1.0);
        assert_relative_eq!(profile_pi(&m, 2.0).unwrap(), exact2, max_relative = 1e-14);
        assert!((profile_pi(&m, 2.0).unwrap() - 2.1616).abs() < 5e-4);
        assert!((profile_pi(&m, 0.5).unwrap() - (-1.6182)).abs() < 5e-4);
        assert!(profile_pi(&m, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn static_solve_inverts_pi_tightly() {
        let m = ThermoModel::default();
        let rho = solve_static(&m, -0.1).unwrap();
        assert!((rho - 0.9629).abs() < 5e-4, "got {rho}");
        assert!((profile_pi(&m, rho).unwrap() + 0.1).abs() <= 1e-12);
        for &t in &[-1.5, -0.3, 0.0, 0.4, 2.0, 5.0] {
            let rho = solve_static(&m, t).unwrap();
            assert!((profile_pi(&m, rho).unwrap() - t).abs() <= 1e-12, "target {t}");
        }
    }

    #[test]
    fn table_profile_pi_matches_closed_form() {
        let table = TableP::from_default_profile(1e-3, 100.0, 600).unwrap();
        let mt = ThermoModel {
            p_kind: PKind::Table(table),
            ..ThermoModel::default()
        };
        let md = ThermoModel::default();
        for &rho in &[0.5, 0.9, 1.5, 2.0] {
            let a = profile_pi(&mt, rho).unwrap();
            let b = profile_pi(&md, rho).unwrap();
            assert!((a - b).abs() < 2e-3, "rho {rho}: {a} vs {b}");
        }
        let rho = solve_static(&mt, 0.7).unwrap();
        assert!((profile_pi(&mt, rho).unwrap() - 0.7).abs() <= 1e-12);
    }

    #[test]
    fn gravity_potential_is_even_with_odd_slope() {
        let f = ForcePotentials::both([0.0, 0.0]);
        // even around z = 0 and z = 1 on the period cell
        assert_relative_eq!(f.g_pot(0.3), f.g_pot(2.0 - 0.3), max_relative = 1e-15);
        assert_relative_eq!(f.g_pot(1.2), f.g_pot(0.8), max_relative = 1e-15);
        assert_eq!(f.dg_dz(0.0), 0.0);
        assert_eq!(f.dg_dz(1.0), 0.0);
        assert_eq!(f.dg_dz(0.5), -1.0);
        assert_eq!(f.dg_dz(1.5), 1.0);
        assert_relative_eq!(f.g_pot(-0.4), f.g_pot(0.4), max_relative = 1e-15);
    }

    #[test]
    fn rates_by_regime() {
        let model = ThermoModel::default();
        let forces = ForcePotentials::both([0.0, 0.0]);
        let tol = 0.15;

        let s = static_rate_study(&model, &StaticStudyConfig::new(1.0, forces)).unwrap();
        assert!((s.fit.slope - 1.0).abs() < tol, "m=1 slope {}", s.fit.slope);
        assert!(s.rho_min >= 0.5 && s.rho_min < 0.9, "rho_min {}", s.rho_min);

        let s = static_rate_study(&model, &StaticStudyConfig::new(1.5, forces)).unwrap();
        assert!((s.fit.slope - 1.0).abs() < tol, "m=1.5 slope {}", s.fit.slope);
        assert_eq!(s.expected_rate, 1.0);

        let s = static_rate_study(&model, &StaticStudyConfig::new(2.0, forces)).unwrap();
        assert!((s.fit.slope - 2.0).abs() < tol, "m=2 slope {}", s.fit.slope);

        let no_f = ForcePotentials {
            centrifugal_on: false,
            ..forces
        };
        let s = static_rate_study(&model, &StaticStudyConfig::new(1.5, no_f)).unwrap();
        assert!((s.fit.slope - 1.5).abs() < tol, "gravity-only slope {}", s.fit.slope);
        assert_eq!(s.expected_rate, 1.5);
    }
}
