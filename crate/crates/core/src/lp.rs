//! Dyadic frequency decomposition on the grid.
//!
//! The cutoff is a quintic smoothstep profile: `chi = 1` on `|xi| <= 1.1`,
//! `0` from `1.9`, and the band function is `phi(xi) = chi(xi) - chi(2 xi)`.
//! Blocks are `D_{-1} = chi(2|D|)`, `D_j = phi(2^-j |D|)` for `j >= 0`, and
//! the low-pass is `S_j = chi(2^(1-j) |D|)`. Scaling the argument by powers
//! of two is exact in floating point, so the telescoping partition
//! `D_{-1} + sum_j D_j = 1` holds to machine precision on every mode.

use crate::error::{Error, Result};
use crate::spectral::{Field, SpecField, SpectralGrid};
use crate::util::smoothstep;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::sync::Arc;

/// The low-pass profile: 1 inside 1.1, 0 outside 1.9, smooth between.
pub fn chi(xi: f64) -> f64 {
    let r = xi.abs();
    if r <= 1.1 {
        1.0
    } else if r >= 1.9 {
        0.0
    } else {
        smoothstep((1.9 - r) / 0.8)
    }
}

/// The band profile phi(xi) = chi(xi) - chi(2 xi), supported on [0.55, 1.9].
pub fn phi(xi: f64) -> f64 {
    chi(xi) - chi(2.0 * xi)
}

pub struct DyadicSystem {
    pub grid: Arc<SpectralGrid>,
    /// Highest block index with support on this grid.
    pub j_max: i32,
}

impl DyadicSystem {
    pub fn new(grid: &Arc<SpectralGrid>) -> Self {
        let kmax = (0..3)
            .map(|a| {
                let k = std::f64::consts::PI * grid.n[a] as f64 / grid.period[a];
                k * k
            })
            .sum::<f64>()
            .sqrt();
        let j_max = (kmax / 0.55).log2().ceil() as i32;
        Self {
            grid: grid.clone(),
            j_max,
        }
    }

    /// Block multiplier at modulus |k| for block j (j = -1 is the low ball).
    pub fn weight(&self, j: i32, kmod: f64) -> f64 {
        if j == -1 {
            chi(2.0 * kmod)
        } else {
            phi(kmod * 2f64.powi(-j))
        }
    }

    /// Apply block j.
    pub fn block(&self, f: &SpecField, j: i32) -> SpecField {
        assert!(j >= -1, "block index starts at -1");
        f.map_modes(|k, c| {
            let kmod = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            c * self.weight(j, kmod)
        })
    }

    /// Low-pass S_j = chi(2^(1-j) |D|), the sum of blocks below j.
    pub fn low_pass(&self, f: &SpecField, j: i32) -> SpecField {
        f.map_modes(|k, c| {
            let kmod = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            c * chi(kmod * 2f64.powi(1 - j))
        })
    }

    /// Mollification of initial data: keep the low end, fade by block M.
    pub fn mollify(&self, f: &SpecField, m: i32) -> SpecField {
        self.low_pass(f, m)
    }

    /// Worst deviation of the block sum from 1 over all grid modes.
    pub fn partition_defect(&self) -> f64 {
        let [nx, ny, nz] = self.grid.n;
        let mut worst = 0.0f64;
        for ix in 0..nx {
            let kx = self.grid.wavenumber(0, ix);
            for iy in 0..ny {
                let ky = self.grid.wavenumber(1, iy);
                for iz in 0..nz {
                    let kz = self.grid.wavenumber(2, iz);
                    let kmod = (kx * kx + ky * ky + kz * kz).sqrt();
                    let mut sum = self.weight(-1, kmod);
                    for j in 0..=self.j_max {
                        sum += self.weight(j, kmod);
                    }
                    worst = worst.max((sum - 1.0).abs());
                }
            }
        }
        worst
    }

    /// Besov norm: l^r over blocks of 2^(j s) ||D_j f||_{L^p}. Infinite p or
    /// r select sup norms.
    pub fn besov_norm(&self, f: &SpecField, s: f64, p: f64, r: f64) -> Result<f64> {
        if !(p >= 1.0) || !(r >= 1.0) {
            return Err(Error::Config(format!("Besov indices need p, r >= 1, got ({p}, {r})")));
        }
        let mut terms = Vec::new();
        for j in -1..=self.j_max {
            let bj = self.block(f, j).to_phys();
            let norm = lp_norm(&bj, p);
            terms.push(2f64.powf(j as f64 * s) * norm);
        }
        if r.is_infinite() {
            Ok(terms.iter().fold(0.0f64, |m, &t| m.max(t)))
        } else {
            Ok(terms.iter().map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r))
        }
    }
}

/// L^p norm of a physical field with the volume element; p = inf gives the
/// sup norm.
pub fn lp_norm(f: &Field, p: f64) -> f64 {
    if p.is_infinite() {
        return f.linf_norm();
    }
    let w = f.grid.volume() / f.grid.len() as f64;
    (f.data.iter().map(|v| v.abs().powf(p)).sum::<f64>() * w).powf(1.0 / p)
}

#[derive(Debug, Clone, Serialize)]
pub struct BernsteinReport {
    pub j: i32,
    pub trials: usize,
    /// min and max over random trials of ||grad D_j f||_2 / (2^j ||D_j f||_2).
    pub grad_ratio_min: f64,
    pub grad_ratio_max: f64,
    /// max over random trials of ||D_j f||_q / ||D_j f||_p, normalized by the
    /// Bernstein factor 2^(3 j (1/p - 1/q)).
    pub embed_constant_random: f64,
    /// Same normalized ratio for the coherent kernel (all annulus modes in
    /// phase) — the profile that saturates the inequality, so this should
    /// stay bounded away from 0 uniformly in j.
    pub embed_constant_coherent: f64,
}

/// Probe the Bernstein inequalities on block j.
///
/// Random annulus-supported fields must respect both bounds; they do not
/// saturate the L^p -> L^q embedding (random phases spread mass almost
/// flatly), so the sharpness witness is the coherent kernel with every
/// annulus coefficient equal. The gradient ratio is exact by Parseval: it
/// must land inside the annulus bounds [0.55, 1.9] for any sample.
pub fn bernstein_check(
    sys: &DyadicSystem,
    j: i32,
    p: f64,
    q: f64,
    trials: usize,
    seed: u64,
) -> Result<BernsteinReport> {
    if q < p {
        return Err(Error::Config(format!("embedding needs q >= p, got p = {p}, q = {q}")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let grid = &sys.grid;
    let bernstein_factor = 2f64.powf(3.0 * j as f64 * (1.0 / p - 1.0 / q));
    let mut grad_min = f64::INFINITY;
    let mut grad_max = f64::NEG_INFINITY;
    let mut emb_max = f64::NEG_INFINITY;
    for _ in 0..trials {
        let mut white = Field::zeros(grid, crate::spectral::Parity::Mixed);
        for v in &mut white.data {
            *v = rng.gen_range(-1.0..1.0);
        }
        let bj = sys.block(&white.to_spec(), j);
        let l2 = bj.l2_norm();
        if l2 < 1e-12 {
            return Err(Error::Grid(format!(
                "block {j} has no support on this grid; refine or lower j"
            )));
        }
        let g2 = {
            let gx = bj.ddx(0).l2_norm();
            let gy = bj.ddx(1).l2_norm();
            let gz = bj.ddx(2).l2_norm();
            (gx * gx + gy * gy + gz * gz).sqrt()
        };
        let ratio = g2 / (2f64.powi(j) * l2);
        grad_min = grad_min.min(ratio);
        grad_max = grad_max.max(ratio);

        let phys = bj.to_phys();
        let emb = lp_norm(&phys, q) / lp_norm(&phys, p) / bernstein_factor;
        emb_max = emb_max.max(emb);
    }

    // coherent kernel: unit coefficient on every annulus mode
    let ones = Field::constant(grid, 1.0);
    let mut kernel = ones.to_spec();
    for c in &mut kernel.coef {
        *c = num_complex::Complex64::new(1.0, 0.0);
    }
    let kernel = sys.block(&kernel, j).to_phys();
    let coherent = lp_norm(&kernel, q) / lp_norm(&kernel, p) / bernstein_factor;

    Ok(BernsteinReport {
        j,
        trials,
        grad_ratio_min: grad_min,
        grad_ratio_max: grad_max,
        embed_constant_random: emb_max,
        embed_constant_coherent: coherent,
    })
}
