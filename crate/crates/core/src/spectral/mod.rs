//! Fourier grids and parity-aware fields.
//!
//! The computational domain is a 3-torus; the vertical direction represents a
//! slab `[0, 1]` carried through its even/odd reflection onto the period cell
//! `[0, 2)`. Every field records its vertical parity so that reflection
//! symmetry can be enforced at initialization and asserted on output.
//!
//! Layout is flat row-major with z contiguous: `index = (ix * ny + iy) * nz + iz`.
//! Forward transforms are normalized by `1/N`, so coefficients are mode
//! amplitudes and the inverse is a plain unnormalized sum.

mod io;
pub mod ops;
#[cfg(test)]
mod tests;

pub use io::{read_snapshot, write_snapshot, Snapshot, SnapshotHeader};

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Vertical reflection symmetry of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    /// f(-x3) = f(x3): densities, temperature, horizontal velocity.
    Even,
    /// f(-x3) = -f(x3): vertical velocity.
    Odd,
    /// No symmetry tracked.
    Mixed,
}

impl Parity {
    /// Parity of a pointwise product.
    pub fn product(self, other: Parity) -> Parity {
        use Parity::*;
        match (self, other) {
            (Even, Even) | (Odd, Odd) => Even,
            (Even, Odd) | (Odd, Even) => Odd,
            _ => Mixed,
        }
    }

    /// Parity after one vertical derivative.
    pub fn flipped(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::Mixed => Parity::Mixed,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Mixed => "mixed",
        };
        f.write_str(s)
    }
}

/// A periodic grid with cached FFT plans for each axis.
pub struct SpectralGrid {
    pub n: [usize; 3],
    pub period: [f64; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl SpectralGrid {
    pub fn new(n: [usize; 3], period: [f64; 3]) -> Result<Arc<Self>> {
        for (i, &ni) in n.iter().enumerate() {
            if ni < 4 || ni % 2 != 0 {
                return Err(Error::Grid(format!(
                    "grid size along axis {i} must be even and >= 4, got {ni}"
                )));
            }
        }
        for (i, &li) in period.iter().enumerate() {
            if !(li > 0.0) || !li.is_finite() {
                return Err(Error::Grid(format!("period along axis {i} must be positive, got {li}")));
            }
        }
        let mut planner = FftPlanner::new();
        let fwd = [
            planner.plan_fft_forward(n[0]),
            planner.plan_fft_forward(n[1]),
            planner.plan_fft_forward(n[2]),
        ];
        let inv = [
            planner.plan_fft_inverse(n[0]),
            planner.plan_fft_inverse(n[1]),
            planner.plan_fft_inverse(n[2]),
        ];
        Ok(Arc::new(Self { n, period, fwd, inv }))
    }

    /// The reflected slab: horizontal torus of period `2 pi l_h`, vertical
    /// period 2 (physical slab `[0, 1]` plus its mirror image).
    pub fn reflected_slab(nh: usize, nz: usize, l_h: f64) -> Result<Arc<Self>> {
        Self::new(
            [nh, nh, nz],
            [2.0 * std::f64::consts::PI * l_h, 2.0 * std::f64::consts::PI * l_h, 2.0],
        )
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.period[0] * self.period[1] * self.period[2]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.period[axis] / self.n[axis] as f64
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n[1] + iy) * self.n[2] + iz
    }

    /// Physical coordinate of a grid index along an axis.
    #[inline]
    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        self.period[axis] * j as f64 / self.n[axis] as f64
    }

    /// Center of the horizontal cell (rotation axis for the centrifugal force).
    pub fn horizontal_center(&self) -> [f64; 2] {
        [self.period[0] / 2.0, self.period[1] / 2.0]
    }

    /// Signed integer mode of index j along an axis (Nyquist maps to -n/2).
    #[inline]
    pub fn mode(&self, axis: usize, j: usize) -> i64 {
        let n = self.n[axis];
        if j < n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    /// Wavenumber of index j along an axis: 2 pi mode / period.
    #[inline]
    pub fn wavenumber(&self, axis: usize, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode(axis, j) as f64 / self.period[axis]
    }

    /// True iff mode index j along each axis survives the 2/3 rule.
    #[inline]
    pub fn keeps(&self, axis: usize, j: usize) -> bool {
        3 * self.mode(axis, j).unsigned_abs() as usize <= self.n[axis]
    }

    /// Mirror of vertical index iz under z -> -z.
    #[inline]
    pub fn mirror_z(&self, iz: usize) -> usize {
        (self.n[2] - iz) % self.n[2]
    }

    /// In-place FFT along one axis over the whole flat array.
    fn fft_axis(&self, data: &mut [Complex64], axis: usize, forward: bool) {
        let [nx, ny, nz] = self.n;
        let plan = if forward { &self.fwd[axis] } else { &self.inv[axis] };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        match axis {
            2 => plan.process_with_scratch(data, &mut scratch),
            1 => {
                let mut line = vec![Complex64::new(0.0, 0.0); ny];
                for ix in 0..nx {
                    for iz in 0..nz {
                        let base = ix * ny * nz + iz;
                        for iy in 0..ny {
                            line[iy] = data[base + iy * nz];
                        }
                        plan.process_with_scratch(&mut line, &mut scratch);
                        for iy in 0..ny {
                            data[base + iy * nz] = line[iy];
                        }
                    }
                }
            }
            0 => {
                let stride = ny * nz;
                let mut line = vec![Complex64::new(0.0, 0.0); nx];
                for rest in 0..stride {
                    for ix in 0..nx {
                        line[ix] = data[rest + ix * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for ix in 0..nx {
                        data[rest + ix * stride] = line[ix];
                    }
                }
            }
            _ => unreachable!("axis {axis}"),
        }
    }
}

/// Real scalar field on a grid, in physical space.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Arc<SpectralGrid>,
    pub data: Vec<f64>,
    pub parity: Parity,
}

/// Complex coefficient field on a grid, in spectral space.
#[derive(Debug, Clone)]
pub struct SpecField {
    pub grid: Arc<SpectralGrid>,
    pub coef: Vec<Complex64>,
    pub parity: Parity,
}

impl Field {
    pub fn zeros(grid: &Arc<SpectralGrid>, parity: Parity) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![0.0; grid.len()],
            parity,
        }
    }

    pub fn constant(grid: &Arc<SpectralGrid>, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![value; grid.len()],
            parity: Parity::Even,
        }
    }

    /// Sample a function of physical coordinates.
    pub fn from_fn(
        grid: &Arc<SpectralGrid>,
        parity: Parity,
        mut f: impl FnMut(f64, f64, f64) -> f64,
    ) -> Self {
        let [nx, ny, nz] = grid.n;
        let mut data = vec![0.0; grid.len()];
        for ix in 0..nx {
            let x = grid.coord(0, ix);
            for iy in 0..ny {
                let y = grid.coord(1, iy);
                for iz in 0..nz {
                    let z = grid.coord(2, iz);
                    data[grid.index(ix, iy, iz)] = f(x, y, z);
                }
            }
        }
        Self {
            grid: grid.clone(),
            data,
            parity,
        }
    }

    pub fn to_spec(&self) -> SpecField {
        let mut coef: Vec<Complex64> = self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.fft_axis(&mut coef, 2, true);
        self.grid.fft_axis(&mut coef, 1, true);
        self.grid.fft_axis(&mut coef, 0, true);
        let scale = 1.0 / self.grid.len() as f64;
        for c in &mut coef {
            *c *= scale;
        }
        SpecField {
            grid: self.grid.clone(),
            coef,
            parity: self.parity,
        }
    }

    /// L2 norm with the volume element: sqrt(V/N sum f^2).
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.volume() / self.grid.len() as f64;
        (self.data.iter().map(|v| v * v).sum::<f64>() * w).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.grid.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Largest deviation from the declared vertical symmetry, relative to the
    /// field's sup norm (0 reported for Mixed).
    pub fn parity_defect(&self) -> f64 {
        let sign = match self.parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
            Parity::Mixed => return 0.0,
        };
        let [nx, ny, nz] = self.grid.n;
        let linf = self.linf_norm();
        if linf < 1e-14 {
            return 0.0; // numerically zero fields are trivially symmetric
        }
        let scale = linf;
        let mut worst = 0.0f64;
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..nz {
                    let a = self.data[self.grid.index(ix, iy, iz)];
                    let b = self.data[self.grid.index(ix, iy, self.grid.mirror_z(iz))];
                    worst = worst.max((a - sign * b).abs());
                }
            }
        }
        worst / scale
    }

    /// Symmetrize onto the declared parity (projects out the defect).
    pub fn enforce_parity(&mut self) {
        let sign = match self.parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
            Parity::Mixed => return,
        };
        let [nx, ny, nz] = self.grid.n;
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..=nz / 2 {
                    let i = self.grid.index(ix, iy, iz);
                    let j = self.grid.index(ix, iy, self.grid.mirror_z(iz));
                    let (a, b) = (self.data[i], self.data[j]);
                    let sym = 0.5 * (a + sign * b);
                    self.data[i] = sym;
                    self.data[j] = sign * sym;
                }
            }
        }
    }

    /// Pointwise product; parities combine.
    pub fn product(&self, other: &Field) -> Field {
        assert_eq!(self.grid.n, other.grid.n, "grid mismatch in product");
        Field {
            grid: self.grid.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
            parity: self.parity.product(other.parity),
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &Field) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.data {
            *a *= alpha;
        }
    }
}

impl SpecField {
    pub fn zeros(grid: &Arc<SpectralGrid>, parity: Parity) -> Self {
        Self {
            grid: grid.clone(),
            coef: vec![Complex64::new(0.0, 0.0); grid.len()],
            parity,
        }
    }

    pub fn to_phys(&self) -> Field {
        let mut buf = self.coef.clone();
        self.grid.fft_axis(&mut buf, 0, false);
        self.grid.fft_axis(&mut buf, 1, false);
        self.grid.fft_axis(&mut buf, 2, false);
        Field {
            grid: self.grid.clone(),
            data: buf.iter().map(|c| c.re).collect(),
            parity: self.parity,
        }
    }

    /// L2 norm by Parseval: sqrt(V sum |c|^2).
    pub fn l2_norm(&self) -> f64 {
        let v = self.grid.volume();
        (self.coef.iter().map(|c| c.norm_sqr()).sum::<f64>() * v).sqrt()
    }

    /// Sobolev norm sqrt(V sum (1 + |k|^2)^s |c|^2).
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let [nx, ny, nz] = self.grid.n;
        let v = self.grid.volume();
        let mut sum = 0.0;
        for ix in 0..nx {
            let kx = self.grid.wavenumber(0, ix);
            for iy in 0..ny {
                let ky = self.grid.wavenumber(1, iy);
                for iz in 0..nz {
                    let kz = self.grid.wavenumber(2, iz);
                    let k2 = kx * kx + ky * ky + kz * kz;
                    let c = self.coef[self.grid.index(ix, iy, iz)];
                    sum += (1.0 + k2).powf(s) * c.norm_sqr();
                }
            }
        }
        (sum * v).sqrt()
    }

    pub fn axpy(&mut self, alpha: Complex64, other: &SpecField) {
        for (a, b) in self.coef.iter_mut().zip(&other.coef) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for c in &mut self.coef {
            *c *= alpha;
        }
    }
}
