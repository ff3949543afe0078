//! Monotone cubic interpolation of a tabulated pressure profile.

use super::audit::StructuralP;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A pressure profile given as (Z, P) nodes, interpolated by a monotone
/// Hermite cubic (Fritsch–Carlson limited slopes) and extended beyond the
/// last node by the stiff power law `P_n (Z / Z_n)^(5/3)` so that the tail
/// behaves like the default profile. Below the first node it decays linearly
/// to the origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableP {
    z: Vec<f64>,
    p: Vec<f64>,
    #[serde(skip)]
    slopes: Vec<f64>,
}

impl TableP {
    pub fn new(z: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if z.len() != p.len() || z.len() < 2 {
            return Err(Error::Config(format!(
                "profile table needs >= 2 matching nodes, got {} / {}",
                z.len(),
                p.len()
            )));
        }
        for w in z.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Config(format!(
                    "profile table abscissae must increase: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if z[0] <= 0.0 {
            return Err(Error::Config(format!("profile nodes must have Z > 0, got {}", z[0])));
        }
        if p.iter().any(|&v| !v.is_finite()) {
            return Err(Error::Config("profile table has non-finite values".into()));
        }
        let slopes = fritsch_carlson(&z, &p);
        Ok(Self { z, p, slopes })
    }

    /// Sample the default profile onto n geometric nodes; useful for testing
    /// the table path against closed forms.
    pub fn from_default_profile(z_lo: f64, z_hi: f64, n: usize) -> Result<Self> {
        let zs: Vec<f64> = (0..n)
            .map(|i| z_lo * (z_hi / z_lo).powf(i as f64 / (n - 1) as f64))
            .collect();
        let ps = zs.iter().map(|&z| z + z.powf(5.0 / 3.0)).collect();
        Self::new(zs, ps)
    }

    /// Rebuild slopes after deserialization (serde skips them).
    pub fn rehydrate(&mut self) {
        if self.slopes.len() != self.z.len() {
            self.slopes = fritsch_carlson(&self.z, &self.p);
        }
    }

    fn segment(&self, z: f64) -> usize {
        match self.z.binary_search_by(|v| v.partial_cmp(&z).unwrap()) {
            Ok(i) => i.min(self.z.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.z.len() - 2),
        }
    }
}

impl StructuralP for TableP {
    fn p(&self, z: f64) -> f64 {
        let n = self.z.len();
        if z <= self.z[0] {
            // linear to the origin keeps P(0) = 0 and monotonicity
            return self.p[0] * (z / self.z[0]).max(0.0);
        }
        if z >= self.z[n - 1] {
            return self.p[n - 1] * (z / self.z[n - 1]).powf(5.0 / 3.0);
        }
        let i = self.segment(z);
        let h = self.z[i + 1] - self.z[i];
        let t = (z - self.z[i]) / h;
        let (p0, p1) = (self.p[i], self.p[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        p0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + p1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }

    fn dp(&self, z: f64) -> f64 {
        let n = self.z.len();
        if z <= self.z[0] {
            return self.p[0] / self.z[0];
        }
        if z >= self.z[n - 1] {
            return 5.0 / 3.0 * self.p[n - 1] / self.z[n - 1] * (z / self.z[n - 1]).powf(2.0 / 3.0);
        }
        let i = self.segment(z);
        let h = self.z[i + 1] - self.z[i];
        let t = (z - self.z[i]) / h;
        let (p0, p1) = (self.p[i], self.p[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        (p0 * (6.0 * t2 - 6.0 * t)
            + m0 * (3.0 * t2 - 4.0 * t + 1.0)
            + p1 * (-6.0 * t2 + 6.0 * t)
            + m1 * (3.0 * t2 - 2.0 * t))
            / h
    }
}

/// Fritsch–Carlson slope limiting: start from three-point estimates, then
/// shrink any (alpha, beta) pair outside the circle of radius 3 back onto it,
/// which guarantees the cubic never overshoots on monotone data.
fn fritsch_carlson(z: &[f64], p: &[f64]) -> Vec<f64> {
    let n = z.len();
    let d: Vec<f64> = (0..n - 1).map(|i| (p[i + 1] - p[i]) / (z[i + 1] - z[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        m[i] = if d[i - 1] * d[i] <= 0.0 { 0.0 } else { 0.5 * (d[i - 1] + d[i]) };
    }
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let alpha = m[i] / d[i];
        let beta = m[i + 1] / d[i];
        let r = alpha * alpha + beta * beta;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[i] = tau * alpha * d[i];
            m[i + 1] = tau * beta * d[i];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_default_profile_between_nodes() {
        let t = TableP::from_default_profile(1e-3, 50.0, 400).unwrap();
        for &z in &[0.01f64, 0.3, 1.0, 2.5, 10.0, 40.0] {
            let exact = z + z.powf(5.0 / 3.0);
            assert!(
                (t.p(z) - exact).abs() / exact < 5e-4,
                "z = {z}: {} vs {exact}",
                t.p(z)
            );
        }
        // tail extrapolation is the frozen power law P_n (Z/Z_n)^(5/3):
        // ratio to Z^(5/3) is exactly P(50)/50^(5/3) = 1 + 50^(-2/3)
        let z = 200.0;
        let ratio = t.p(z) / z.powf(5.0 / 3.0);
        let expected = 1.0 + 50f64.powf(-2.0 / 3.0);
        assert!((ratio - expected).abs() < 1e-3, "tail ratio {ratio} vs {expected}");
    }

    #[test]
    fn interpolant_is_monotone_on_monotone_data() {
        // data with sharply varying slopes to provoke overshoot
        let z = vec![0.1, 0.2, 0.21, 1.0, 1.05, 3.0];
        let p = vec![0.1, 0.11, 0.5, 0.52, 1.9, 2.0];
        let t = TableP::new(z.clone(), p).unwrap();
        let mut prev = t.p(z[0]);
        for i in 1..=3000 {
            let zz = 0.1 + (3.0 - 0.1) * i as f64 / 3000.0;
            let v = t.p(zz);
            assert!(v >= prev - 1e-12, "dip at Z = {zz}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(TableP::new(vec![1.0], vec![1.0]).is_err());
        assert!(TableP::new(vec![1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(TableP::new(vec![-1.0, 1.0], vec![0.5, 2.0]).is_err());
    }
}
