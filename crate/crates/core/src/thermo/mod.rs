//! Equation of state and its linearization.
//!
//! The model family is built from a structural pressure profile `P(Z)` of the
//! single self-similarity variable `Z = rho * theta^(-3/2)`, plus an optional
//! radiative part with coefficient `a`:
//!
//! ```text
//! p(rho, theta) = theta^(5/2) P(Z) + (a/3) theta^4
//! e(rho, theta) = (3/2) (theta^(5/2) / rho) P(Z) + a theta^4 / rho
//! s(rho, theta) = S(Z) + (4a/3) theta^3 / rho,   S'(Z) = -(3/2) (5/3 P - Z P') / Z^2
//! ```
//!
//! The default profile `P(Z) = Z + Z^(5/3)` closes every formula:
//! `p = rho theta + rho^(5/3)`, `e = (3/2)(theta + rho^(2/3))`,
//! `s = -ln rho + (3/2) ln(theta / theta_bar)` (entropy gauged to vanish at
//! `(1, theta_bar)`). Tabulated profiles go through monotone interpolation
//! and quadrature instead.
//!
//! ```
//! use nsflab::thermo::ThermoModel;
//! let model = ThermoModel::default();
//! let v = model.eval(1.0, 1.0).unwrap();
//! assert!((v.p - 2.0).abs() < 1e-14 && (v.e - 3.0).abs() < 1e-14 && v.s.abs() < 1e-14);
//! let c = model.linearization_coeffs().unwrap();
//! assert!((c.a_wave - 10.0 / 3.0).abs() < 1e-12);
//! ```

mod audit;
mod table;

pub use audit::{
    audit_model, structural_audit, AuditCheck, AuditReport, DefaultP, StructuralP, TransportLaws,
};
pub use table::TableP;

use crate::error::{Error, Result};
use crate::util::adaptive_simpson;
use serde::{Deserialize, Serialize};

/// Choice of the structural pressure profile P.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PKind {
    /// P(Z) = Z + Z^(5/3); all thermodynamic functions in closed form.
    Default,
    /// Monotone-interpolated table of (Z, P) nodes.
    Table(TableP),
}

/// Complete gas model: structural profile, radiation constant, reference
/// temperature and transport coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermoModel {
    pub p_kind: PKind,
    /// Radiation constant a >= 0.
    pub a: f64,
    /// Reference temperature theta_bar > 0 (entropy gauge point).
    pub theta_bar: f64,
    pub mu_bar: f64,
    pub eta_bar: f64,
    pub kappa_bar: f64,
}

impl Default for ThermoModel {
    fn default() -> Self {
        Self {
            p_kind: PKind::Default,
            a: 0.0,
            theta_bar: 1.0,
            mu_bar: 0.5,
            eta_bar: 0.0,
            kappa_bar: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EosValues {
    pub p: f64,
    pub e: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EosPartials {
    pub dp_drho: f64,
    pub dp_dtheta: f64,
    pub de_drho: f64,
    pub de_dtheta: f64,
    pub ds_drho: f64,
    pub ds_dtheta: f64,
}

/// Coefficients of the linearized pressure/entropy coupling at (1, theta_bar).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearizationCoeffs {
    /// A = dp_drho + dp_dtheta^2 / ds_dtheta: the acoustic stiffness.
    pub a_wave: f64,
    /// B = dp_dtheta / ds_dtheta.
    pub b_wave: f64,
    /// alpha = dp_dtheta / (rho dp_drho) at (1, theta_bar).
    pub alpha: f64,
    /// c_p = de_dtheta + alpha theta dp_dtheta / rho at (1, theta_bar).
    pub c_p: f64,
}

/// Anything that can report (p, e, s); lets checks run on deliberately
/// corrupted models as well as on the real one.
pub trait EquationOfState {
    fn pressure(&self, rho: f64, theta: f64) -> Result<f64>;
    fn energy(&self, rho: f64, theta: f64) -> Result<f64>;
    fn entropy(&self, rho: f64, theta: f64) -> Result<f64>;
}

impl EquationOfState for ThermoModel {
    fn pressure(&self, rho: f64, theta: f64) -> Result<f64> {
        self.check_domain(rho, theta)?;
        let radiation = self.a / 3.0 * theta.powi(4);
        match &self.p_kind {
            PKind::Default => Ok(rho * theta + rho.powf(5.0 / 3.0) + radiation),
            PKind::Table(t) => {
                let z = rho * theta.powf(-1.5);
                Ok(theta.powf(2.5) * t.p(z) + radiation)
            }
        }
    }

    fn energy(&self, rho: f64, theta: f64) -> Result<f64> {
        self.check_domain(rho, theta)?;
        let radiation = self.a * theta.powi(4) / rho;
        match &self.p_kind {
            PKind::Default => Ok(1.5 * (theta + rho.powf(2.0 / 3.0)) + radiation),
            PKind::Table(t) => {
                let z = rho * theta.powf(-1.5);
                Ok(1.5 * theta.powf(2.5) / rho * t.p(z) + radiation)
            }
        }
    }

    fn entropy(&self, rho: f64, theta: f64) -> Result<f64> {
        self.check_domain(rho, theta)?;
        let radiation = 4.0 * self.a / 3.0 * (theta.powi(3) / rho - self.theta_bar.powi(3));
        match &self.p_kind {
            PKind::Default => {
                Ok(-rho.ln() + 1.5 * (theta / self.theta_bar).ln() + radiation)
            }
            PKind::Table(t) => {
                let z = rho * theta.powf(-1.5);
                let z_ref = self.theta_bar.powf(-1.5);
                let ds = |w: f64| -1.5 * (5.0 / 3.0 * t.p(w) - w * t.dp(w)) / (w * w);
                Ok(adaptive_simpson(ds, z_ref, z, 1e-12) + radiation)
            }
        }
    }
}

impl ThermoModel {
    fn check_domain(&self, rho: f64, theta: f64) -> Result<()> {
        if !(rho > 0.0) || !(theta > 0.0) || !rho.is_finite() || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "equation of state evaluated outside rho, theta > 0: ({rho}, {theta})"
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_bar > 0.0) {
            return Err(Error::Config(format!(
                "theta_bar must be positive, got {}",
                self.theta_bar
            )));
        }
        if self.a < 0.0 {
            return Err(Error::Config(format!("radiation constant a < 0: {}", self.a)));
        }
        if !(self.mu_bar >= 0.0 && self.eta_bar >= 0.0 && self.kappa_bar >= 0.0) {
            return Err(Error::Config("transport coefficients must be >= 0".into()));
        }
        Ok(())
    }

    /// (p, e, s) at a state point.
    pub fn eval(&self, rho: f64, theta: f64) -> Result<EosValues> {
        Ok(EosValues {
            p: self.pressure(rho, theta)?,
            e: self.energy(rho, theta)?,
            s: self.entropy(rho, theta)?,
        })
    }

    /// Shear viscosity mu(theta) = mu_bar (1 + theta).
    pub fn mu(&self, theta: f64) -> f64 {
        self.mu_bar * (1.0 + theta)
    }

    /// Bulk viscosity (constant law).
    pub fn eta(&self, _theta: f64) -> f64 {
        self.eta_bar
    }

    /// Heat conductivity kappa(theta) = kappa_bar (1 + theta^3).
    pub fn kappa(&self, theta: f64) -> f64 {
        self.kappa_bar * (1.0 + theta * theta * theta)
    }

    /// First partial derivatives of p, e, s.
    ///
    /// Closed-form for the default profile; a tabulated profile falls back to
    /// central differences with relative step 1e-6 (its interpolant is only
    /// piecewise smooth anyway).
    pub fn partials(&self, rho: f64, theta: f64) -> Result<EosPartials> {
        self.check_domain(rho, theta)?;
        match &self.p_kind {
            PKind::Default => {
                let a = self.a;
                Ok(EosPartials {
                    dp_drho: theta + 5.0 / 3.0 * rho.powf(2.0 / 3.0),
                    dp_dtheta: rho + 4.0 * a / 3.0 * theta.powi(3),
                    de_drho: rho.powf(-1.0 / 3.0) - a * theta.powi(4) / (rho * rho),
                    de_dtheta: 1.5 + 4.0 * a * theta.powi(3) / rho,
                    ds_drho: -1.0 / rho - 4.0 * a / 3.0 * theta.powi(3) / (rho * rho),
                    ds_dtheta: 1.5 / theta + 4.0 * a * theta * theta / rho,
                })
            }
            PKind::Table(_) => {
                let hr = 1e-6 * rho;
                let ht = 1e-6 * theta;
                let d = |f: &dyn Fn(f64, f64) -> Result<f64>,
                         r: f64,
                         t: f64,
                         hr: f64,
                         ht: f64|
                 -> Result<f64> {
                    Ok((f(r + hr, t + ht)? - f(r - hr, t - ht)?) / (2.0 * hr.max(ht)))
                };
                let p = |r: f64, t: f64| self.pressure(r, t);
                let e = |r: f64, t: f64| self.energy(r, t);
                let s = |r: f64, t: f64| self.entropy(r, t);
                Ok(EosPartials {
                    dp_drho: d(&p, rho, theta, hr, 0.0)?,
                    dp_dtheta: d(&p, rho, theta, 0.0, ht)?,
                    de_drho: d(&e, rho, theta, hr, 0.0)?,
                    de_dtheta: d(&e, rho, theta, 0.0, ht)?,
                    ds_drho: d(&s, rho, theta, hr, 0.0)?,
                    ds_dtheta: d(&s, rho, theta, 0.0, ht)?,
                })
            }
        }
    }

    /// Wave/limit coefficients at the reference state (1, theta_bar).
    ///
    /// They satisfy `A + B ds_drho = dp_drho` and `B ds_dtheta = dp_dtheta`
    /// by construction; positivity of A is enforced.
    pub fn linearization_coeffs(&self) -> Result<LinearizationCoeffs> {
        self.validate()?;
        let pp = self.partials(1.0, self.theta_bar)?;
        if pp.ds_dtheta <= 0.0 {
            return Err(Error::Structural(format!(
                "ds_dtheta <= 0 at the reference state ({})",
                pp.ds_dtheta
            )));
        }
        if pp.dp_drho <= 0.0 {
            return Err(Error::Structural(format!(
                "dp_drho <= 0 at the reference state ({})",
                pp.dp_drho
            )));
        }
        let b_wave = pp.dp_dtheta / pp.ds_dtheta;
        let a_wave = pp.dp_drho - b_wave * pp.ds_drho;
        if a_wave <= 0.0 {
            return Err(Error::Structural(format!("nonpositive wave coefficient A = {a_wave}")));
        }
        let alpha = pp.dp_dtheta / pp.dp_drho;
        let c_p = pp.de_dtheta + alpha * self.theta_bar * pp.dp_dtheta;
        Ok(LinearizationCoeffs {
            a_wave,
            b_wave,
            alpha,
            c_p,
        })
    }

    /// Ballistic free energy H(rho, theta) = rho (e - theta_bar s).
    pub fn ballistic(&self, rho: f64, theta: f64) -> Result<f64> {
        Ok(rho * (self.energy(rho, theta)? - self.theta_bar * self.entropy(rho, theta)?))
    }

    fn dballistic_drho(&self, rho: f64) -> Result<f64> {
        let th = self.theta_bar;
        let pp = self.partials(rho, th)?;
        let e = self.energy(rho, th)?;
        let s = self.entropy(rho, th)?;
        Ok(e + rho * pp.de_drho - th * (s + rho * pp.ds_drho))
    }

    /// Relative entropy of (rho, theta) against the static point
    /// (rho_tilde, theta_bar):
    /// `H(rho,theta) - (rho - rho_tilde) dH/drho(rho_tilde) - H(rho_tilde)`.
    ///
    /// Nonnegative on the essential window, quadratic near the base point
    /// with Hessian dp_drho(rho_tilde, theta_bar) / rho_tilde in the density
    /// direction.
    pub fn relative_entropy(&self, rho: f64, theta: f64, rho_tilde: f64) -> Result<f64> {
        let h = self.ballistic(rho, theta)?;
        let h0 = self.ballistic(rho_tilde, self.theta_bar)?;
        let dh0 = self.dballistic_drho(rho_tilde)?;
        Ok(h - (rho - rho_tilde) * dh0 - h0)
    }
}

/// Max over the two state directions of the Gibbs defect
/// `|theta Ds - De - p D(1/rho)|`, by central differences, normalized by the
/// size of the terms involved.
///
/// Works through the [`EquationOfState`] trait so that deliberately broken
/// models can be fed in; a thermodynamically consistent closed-form model
/// lands at the finite-difference floor (~1e-10).
pub fn gibbs_residual(eos: &dyn EquationOfState, rho: f64, theta: f64) -> Result<f64> {
    let hr = 1e-6 * rho;
    let ht = 1e-6 * theta;
    let p = eos.pressure(rho, theta)?;

    // rho direction
    let ds = (eos.entropy(rho + hr, theta)? - eos.entropy(rho - hr, theta)?) / (2.0 * hr);
    let de = (eos.energy(rho + hr, theta)? - eos.energy(rho - hr, theta)?) / (2.0 * hr);
    let dinv = (1.0 / (rho + hr) - 1.0 / (rho - hr)) / (2.0 * hr);
    let lhs = theta * ds;
    let rhs = de + p * dinv;
    let scale_r = lhs.abs() + de.abs() + (p * dinv).abs() + 1e-300;
    let res_r = (lhs - rhs).abs() / scale_r;

    // theta direction (the 1/rho term drops out)
    let ds = (eos.entropy(rho, theta + ht)? - eos.entropy(rho, theta - ht)?) / (2.0 * ht);
    let de = (eos.energy(rho, theta + ht)? - eos.energy(rho, theta - ht)?) / (2.0 * ht);
    let lhs = theta * ds;
    let scale_t = lhs.abs() + de.abs() + 1e-300;
    let res_t = (lhs - de).abs() / scale_t;

    Ok(res_r.max(res_t))
}

/// Which thermodynamic function to linearize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThermoFunction {
    Pressure,
    Energy,
    Entropy,
}

#[derive(Debug, Clone)]
pub struct LinearizeOutput {
    /// (G(rho_eps, theta_eps) - G(1, theta_bar)) / eps^m per sample.
    pub difference: Vec<f64>,
    /// dG_drho * R_eps + dG_dtheta * Theta_eps per sample.
    pub prediction: Vec<f64>,
    pub remainder_l2: f64,
    pub remainder_linf: f64,
}

/// First-order Taylor comparison of G around (1, theta_bar) for perturbed
/// state fields, in the rescaled variables R = (rho - 1)/eps^m,
/// Theta = (theta - theta_bar)/eps^m.
pub fn linearize(
    model: &ThermoModel,
    func: ThermoFunction,
    rho_eps: &[f64],
    theta_eps: &[f64],
    eps: f64,
    m: f64,
) -> Result<LinearizeOutput> {
    if rho_eps.len() != theta_eps.len() {
        return Err(Error::Config(format!(
            "field lengths differ: {} vs {}",
            rho_eps.len(),
            theta_eps.len()
        )));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Config(format!("eps out of (0,1]: {eps}")));
    }
    let g = |r: f64, t: f64| -> Result<f64> {
        match func {
            ThermoFunction::Pressure => model.pressure(r, t),
            ThermoFunction::Energy => model.energy(r, t),
            ThermoFunction::Entropy => model.entropy(r, t),
        }
    };
    let pp = model.partials(1.0, model.theta_bar)?;
    let (dg_drho, dg_dtheta) = match func {
        ThermoFunction::Pressure => (pp.dp_drho, pp.dp_dtheta),
        ThermoFunction::Energy => (pp.de_drho, pp.de_dtheta),
        ThermoFunction::Entropy => (pp.ds_drho, pp.ds_dtheta),
    };
    let g0 = g(1.0, model.theta_bar)?;
    let scale = eps.powf(m);
    let mut difference = Vec::with_capacity(rho_eps.len());
    let mut prediction = Vec::with_capacity(rho_eps.len());
    let mut sum2 = 0.0;
    let mut linf: f64 = 0.0;
    for (&r, &t) in rho_eps.iter().zip(theta_eps) {
        let diff = (g(r, t)? - g0) / scale;
        let pred = dg_drho * (r - 1.0) / scale + dg_dtheta * (t - model.theta_bar) / scale;
        let rem = diff - pred;
        sum2 += rem * rem;
        linf = linf.max(rem.abs());
        difference.push(diff);
        prediction.push(pred);
    }
    let n = rho_eps.len().max(1) as f64;
    Ok(LinearizeOutput {
        difference,
        prediction,
        remainder_l2: (sum2 / n).sqrt(),
        remainder_linf: linf,
    })
}

/// The window where states are treated as "essential": densities within
/// [2 rho_star / 3, 2] and temperatures within [theta_bar / 2, 2 theta_bar].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EssentialWindow {
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl EssentialWindow {
    pub fn new(rho_star: f64, theta_bar: f64) -> Result<Self> {
        let w = Self {
            rho_lo: 2.0 * rho_star / 3.0,
            rho_hi: 2.0,
            theta_lo: theta_bar / 2.0,
            theta_hi: 2.0 * theta_bar,
        };
        if !(w.rho_lo > 0.0 && w.rho_lo < 1.0) {
            return Err(Error::Config(format!(
                "essential window needs 0 < 2 rho_star/3 < 1, got {}",
                w.rho_lo
            )));
        }
        Ok(w)
    }

    /// Conservative default window: rho_star = 0.5.
    pub fn default_for(theta_bar: f64) -> Self {
        Self::new(0.5, theta_bar).expect("0.5 is a valid rho_star")
    }

    pub fn contains(&self, rho: f64, theta: f64) -> bool {
        rho >= self.rho_lo && rho <= self.rho_hi && theta >= self.theta_lo && theta <= self.theta_hi
    }
}
