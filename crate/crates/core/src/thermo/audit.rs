//! Hypothesis audit for a structural pressure profile.
//!
//! Every inequality the analysis leans on gets probed numerically on dense
//! sample grids; the report carries a witness point whenever one fails, so a
//! bad profile is diagnosed rather than silently accepted.

use super::{PKind, ThermoModel};
use serde::Serialize;

/// A pressure profile P(Z) with its derivative, evaluated on Z > 0.
pub trait StructuralP {
    fn p(&self, z: f64) -> f64;
    fn dp(&self, z: f64) -> f64;
}

/// P(Z) = Z + Z^(5/3).
pub struct DefaultP;

impl StructuralP for DefaultP {
    fn p(&self, z: f64) -> f64 {
        z + z.powf(5.0 / 3.0)
    }
    fn dp(&self, z: f64) -> f64 {
        1.0 + 5.0 / 3.0 * z.powf(2.0 / 3.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    /// Z (or theta) at the worst sample.
    pub witness: Option<f64>,
    /// Observed extreme value of the audited quantity.
    pub observed: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
    pub passed: bool,
    /// sup of (5/3 P(Z) - Z P'(Z)) / Z over the sampled range; the analysis
    /// needs it finite and the integrand positive.
    pub ratio_sup: f64,
}

impl AuditReport {
    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Transport laws probed alongside the profile.
#[derive(Debug, Clone, Copy)]
pub struct TransportLaws {
    pub mu_bar: f64,
    pub eta_bar: f64,
    pub kappa_bar: f64,
}

impl From<&ThermoModel> for TransportLaws {
    fn from(m: &ThermoModel) -> Self {
        Self {
            mu_bar: m.mu_bar,
            eta_bar: m.eta_bar,
            kappa_bar: m.kappa_bar,
        }
    }
}

/// Run every structural check on a profile over Z in (0, z_max].
///
/// Checks: P(0+) -> 0, P' > 0, positivity of (5/3 P - Z P')/Z together with a
/// finite sup, large-Z stiffness (P(Z)/Z^(5/3) bounded below away from 0 near
/// the tail), and positivity of the transport laws over the temperature
/// window [theta_lo, theta_hi].
pub fn structural_audit(
    profile: &dyn StructuralP,
    transport: TransportLaws,
    z_max: f64,
    n_samples: usize,
) -> AuditReport {
    let n = n_samples.max(16);
    let mut checks = Vec::new();

    // Geometric sample ladder: resolves both Z -> 0 and the tail.
    let z_lo = 1e-8_f64;
    let zs: Vec<f64> = (0..n)
        .map(|i| z_lo * (z_max / z_lo).powf(i as f64 / (n - 1) as f64))
        .collect();

    // P(0+) = 0
    let p_origin = profile.p(z_lo);
    checks.push(AuditCheck {
        name: "origin".into(),
        passed: p_origin.abs() <= 1e-6 && p_origin >= -1e-12,
        witness: Some(z_lo),
        observed: p_origin,
        detail: format!("P({z_lo:.1e}) = {p_origin:.3e}, expected -> 0"),
    });

    // P' > 0 everywhere sampled
    let mut worst_dp = f64::INFINITY;
    let mut worst_dp_z = zs[0];
    for &z in &zs {
        let d = profile.dp(z);
        if d < worst_dp {
            worst_dp = d;
            worst_dp_z = z;
        }
    }
    checks.push(AuditCheck {
        name: "monotone".into(),
        passed: worst_dp > 0.0,
        witness: Some(worst_dp_z),
        observed: worst_dp,
        detail: format!("min P' = {worst_dp:.3e} at Z = {worst_dp_z:.4}"),
    });

    // (5/3 P - Z P') / Z > 0 and bounded
    let mut ratio_min = f64::INFINITY;
    let mut ratio_min_z = zs[0];
    let mut ratio_sup = f64::NEG_INFINITY;
    for &z in &zs {
        let r = (5.0 / 3.0 * profile.p(z) - z * profile.dp(z)) / z;
        if r < ratio_min {
            ratio_min = r;
            ratio_min_z = z;
        }
        ratio_sup = ratio_sup.max(r);
    }
    checks.push(AuditCheck {
        name: "entropy_slope".into(),
        passed: ratio_min > 0.0 && ratio_sup.is_finite(),
        witness: Some(ratio_min_z),
        observed: ratio_min,
        detail: format!(
            "min (5/3 P - Z P')/Z = {ratio_min:.3e} at Z = {ratio_min_z:.4}, sup = {ratio_sup:.3e}"
        ),
    });

    // Tail stiffness: P(Z)/Z^(5/3) stays above a positive constant near z_max.
    let mut tail_min = f64::INFINITY;
    let mut tail_z = z_max;
    for &z in zs.iter().filter(|&&z| z >= 0.5 * z_max) {
        let r = profile.p(z) / z.powf(5.0 / 3.0);
        if r < tail_min {
            tail_min = r;
            tail_z = z;
        }
    }
    checks.push(AuditCheck {
        name: "tail_stiffness".into(),
        passed: tail_min > 1e-10,
        witness: Some(tail_z),
        observed: tail_min,
        detail: format!("min P/Z^(5/3) on the tail = {tail_min:.3e}"),
    });

    // Transport positivity over a representative temperature window.
    let mut tr_min = f64::INFINITY;
    let mut tr_theta = 0.0;
    for i in 0..n {
        let theta = 0.25 + (4.0 - 0.25) * i as f64 / (n - 1) as f64;
        let mu = transport.mu_bar * (1.0 + theta);
        let kappa = transport.kappa_bar * (1.0 + theta * theta * theta);
        let m = mu.min(kappa);
        if m < tr_min {
            tr_min = m;
            tr_theta = theta;
        }
    }
    checks.push(AuditCheck {
        name: "transport".into(),
        passed: tr_min > 0.0 && transport.eta_bar >= 0.0,
        witness: Some(tr_theta),
        observed: tr_min,
        detail: format!(
            "min(mu, kappa) = {tr_min:.3e} on theta in [0.25, 4], eta_bar = {}",
            transport.eta_bar
        ),
    });

    let passed = checks.iter().all(|c| c.passed);
    AuditReport {
        checks,
        passed,
        ratio_sup,
    }
}

/// Convenience: audit a full model (dispatches on its profile kind).
pub fn audit_model(model: &ThermoModel, z_max: f64, n_samples: usize) -> AuditReport {
    let transport = TransportLaws::from(model);
    match &model.p_kind {
        PKind::Default => structural_audit(&DefaultP, transport, z_max, n_samples),
        PKind::Table(t) => structural_audit(t, transport, z_max, n_samples),
    }
}
