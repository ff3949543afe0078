//! Derivative, projection and filtering operators in coefficient space.

use super::{Field, Parity, SpecField};
use num_complex::Complex64;
use std::sync::Arc;

impl SpecField {
    /// Partial derivative along an axis (multiply by i k). A vertical
    /// derivative flips parity. The Nyquist mode is zeroed: its derivative
    /// is not representable with a real symmetric stencil.
    pub fn ddx(&self, axis: usize) -> SpecField {
        let grid = &self.grid;
        let [nx, ny, nz] = grid.n;
        let mut out = self.clone();
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..nz {
                    let j = [ix, iy, iz][axis];
                    let i = grid.index(ix, iy, iz);
                    if 2 * grid.mode(axis, j).unsigned_abs() as usize == grid.n[axis] {
                        out.coef[i] = Complex64::new(0.0, 0.0);
                    } else {
                        let k = grid.wavenumber(axis, j);
                        out.coef[i] *= Complex64::new(0.0, k);
                    }
                }
            }
        }
        if axis == 2 {
            out.parity = self.parity.flipped();
        }
        out
    }

    /// Multiply coefficients by a function of the wavenumber vector.
    pub fn map_modes(&self, mut f: impl FnMut([f64; 3], Complex64) -> Complex64) -> SpecField {
        let grid = &self.grid;
        let [nx, ny, nz] = grid.n;
        let mut out = self.clone();
        for ix in 0..nx {
            let kx = grid.wavenumber(0, ix);
            for iy in 0..ny {
                let ky = grid.wavenumber(1, iy);
                for iz in 0..nz {
                    let kz = grid.wavenumber(2, iz);
                    let i = grid.index(ix, iy, iz);
                    out.coef[i] = f([kx, ky, kz], self.coef[i]);
                }
            }
        }
        out
    }

    pub fn laplace(&self) -> SpecField {
        self.map_modes(|k, c| c * -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]))
    }

    pub fn laplace_h(&self) -> SpecField {
        self.map_modes(|k, c| c * -(k[0] * k[0] + k[1] * k[1]))
    }

    /// Inverse horizontal Laplacian with zero mean on each horizontal slice
    /// (the k_h = 0 column is annihilated).
    pub fn inv_laplace_h(&self) -> SpecField {
        self.map_modes(|k, c| {
            let kh2 = k[0] * k[0] + k[1] * k[1];
            if kh2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                c * (-1.0 / kh2)
            }
        })
    }

    /// Smoothing weight (1 + |k|^2)^(-1/2); used as an H^-1-type gauge for
    /// residuals that concentrate at high frequency.
    pub fn h_minus_one(&self) -> SpecField {
        self.map_modes(|k, c| {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            c * (1.0 + k2).sqrt().recip()
        })
    }

    /// Keep only the vertical mean (k_z = 0 plane); result is z-constant,
    /// hence even. Equals the average over the physical slab for fields with
    /// a declared parity.
    pub fn vertical_mean(&self) -> SpecField {
        let grid = &self.grid;
        let [nx, ny, nz] = grid.n;
        let mut out = SpecField::zeros(grid, Parity::Even);
        for ix in 0..nx {
            for iy in 0..ny {
                let i = grid.index(ix, iy, 0);
                out.coef[i] = self.coef[i];
            }
        }
        let _ = nz;
        out
    }

    pub fn vertical_fluctuation(&self) -> SpecField {
        let mut out = self.clone();
        let [nx, ny, _] = self.grid.n;
        for ix in 0..nx {
            for iy in 0..ny {
                let i = self.grid.index(ix, iy, 0);
                out.coef[i] = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// 2/3-rule dealias mask (also removes Nyquist modes).
    pub fn dealias(&mut self) {
        let grid = self.grid.clone();
        let [nx, ny, nz] = grid.n;
        for ix in 0..nx {
            let kx_ok = grid.keeps(0, ix);
            for iy in 0..ny {
                let ky_ok = grid.keeps(1, iy);
                for iz in 0..nz {
                    if !(kx_ok && ky_ok && grid.keeps(2, iz)) {
                        self.coef[grid.index(ix, iy, iz)] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
    }

    /// Defect of conjugate symmetry c(-k) = conj(c(k)); zero for transforms
    /// of real fields.
    pub fn reality_defect(&self) -> f64 {
        let grid = &self.grid;
        let [nx, ny, nz] = grid.n;
        let mut worst = 0.0f64;
        for ix in 0..nx {
            let jx = (nx - ix) % nx;
            for iy in 0..ny {
                let jy = (ny - iy) % ny;
                for iz in 0..nz {
                    let jz = (nz - iz) % nz;
                    let a = self.coef[grid.index(ix, iy, iz)];
                    let b = self.coef[grid.index(jx, jy, jz)].conj();
                    worst = worst.max((a - b).norm());
                }
            }
        }
        worst
    }
}

fn combined(a: Parity, b: Parity) -> Parity {
    if a == b {
        a
    } else {
        Parity::Mixed
    }
}

/// Gradient: [d/dx, d/dy, d/dz].
pub fn grad(f: &SpecField) -> [SpecField; 3] {
    [f.ddx(0), f.ddx(1), f.ddx(2)]
}

/// Horizontal perp gradient (-d/dy, d/dx) of a scalar.
pub fn perp_grad_h(f: &SpecField) -> [SpecField; 2] {
    let mut dy = f.ddx(1);
    dy.scale(-1.0);
    [dy, f.ddx(0)]
}

/// Divergence; (even, even, odd) input yields an even result.
pub fn div(v: &[SpecField; 3]) -> SpecField {
    let mut out = v[0].ddx(0);
    out.axpy(Complex64::new(1.0, 0.0), &v[1].ddx(1));
    out.axpy(Complex64::new(1.0, 0.0), &v[2].ddx(2));
    out.parity = combined(
        combined(v[0].parity, v[1].parity),
        v[2].parity.flipped(),
    );
    out
}

pub fn div_h(vh: &[SpecField; 2]) -> SpecField {
    let mut out = vh[0].ddx(0);
    out.axpy(Complex64::new(1.0, 0.0), &vh[1].ddx(1));
    out.parity = combined(vh[0].parity, vh[1].parity);
    out
}

/// Vertical component of the curl of a horizontal pair: d1 v2 - d2 v1.
pub fn curl_h(vh: &[SpecField; 2]) -> SpecField {
    let mut out = vh[1].ddx(0);
    out.axpy(Complex64::new(-1.0, 0.0), &vh[0].ddx(1));
    out.parity = combined(vh[0].parity, vh[1].parity);
    out
}

pub fn curl(v: &[SpecField; 3]) -> [SpecField; 3] {
    let mut cx = v[2].ddx(1);
    cx.axpy(Complex64::new(-1.0, 0.0), &v[1].ddx(2));
    cx.parity = combined(v[2].parity, v[1].parity.flipped());
    let mut cy = v[0].ddx(2);
    cy.axpy(Complex64::new(-1.0, 0.0), &v[2].ddx(0));
    cy.parity = combined(v[0].parity.flipped(), v[2].parity);
    let mut cz = v[1].ddx(0);
    cz.axpy(Complex64::new(-1.0, 0.0), &v[0].ddx(1));
    cz.parity = combined(v[1].parity, v[0].parity);
    [cx, cy, cz]
}

/// Full Leray projection onto divergence-free fields: u - k (k.u)/|k|^2.
pub fn leray_project(v: &[SpecField; 3]) -> [SpecField; 3] {
    let grid = v[0].grid.clone();
    let [nx, ny, nz] = grid.n;
    let mut out = [v[0].clone(), v[1].clone(), v[2].clone()];
    for ix in 0..nx {
        let kx = grid.wavenumber(0, ix);
        for iy in 0..ny {
            let ky = grid.wavenumber(1, iy);
            for iz in 0..nz {
                let kz = grid.wavenumber(2, iz);
                let k2 = kx * kx + ky * ky + kz * kz;
                if k2 == 0.0 {
                    continue;
                }
                let i = grid.index(ix, iy, iz);
                let kdotu = kx * v[0].coef[i] + ky * v[1].coef[i] + kz * v[2].coef[i];
                let f = kdotu / k2;
                out[0].coef[i] -= kx * f;
                out[1].coef[i] -= ky * f;
                out[2].coef[i] -= kz * f;
            }
        }
    }
    out
}

/// Horizontal Leray projection of a horizontal pair (applied slice by slice
/// in k_z, so it also serves for z-constant 2D systems).
pub fn leray_project_h(vh: &[SpecField; 2]) -> [SpecField; 2] {
    let grid = vh[0].grid.clone();
    let [nx, ny, nz] = grid.n;
    let mut out = [vh[0].clone(), vh[1].clone()];
    for ix in 0..nx {
        let kx = grid.wavenumber(0, ix);
        for iy in 0..ny {
            let ky = grid.wavenumber(1, iy);
            let kh2 = kx * kx + ky * ky;
            if kh2 == 0.0 {
                continue;
            }
            for iz in 0..nz {
                let i = grid.index(ix, iy, iz);
                let kdotu = kx * vh[0].coef[i] + ky * vh[1].coef[i];
                let f = kdotu / kh2;
                out[0].coef[i] -= kx * f;
                out[1].coef[i] -= ky * f;
            }
        }
    }
    out
}

/// Dealiased pointwise product: multiply in physical space, transform, mask.
pub fn dealiased_product(a: &Field, b: &Field) -> SpecField {
    let mut s = a.product(b).to_spec();
    s.dealias();
    s
}

/// Band-limit a physical field to modes passing the 2/3 mask (projection
/// used on initial data so later quadratic products are alias-free).
pub fn band_limit(f: &Field) -> Field {
    let mut s = f.to_spec();
    s.dealias();
    s.to_phys()
}

/// L2 inner product of two physical fields including the volume element.
pub fn inner(a: &Field, b: &Field) -> f64 {
    let w = a.grid.volume() / a.grid.len() as f64;
    a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum::<f64>() * w
}

/// Integral of a physical field.
pub fn integral(f: &Field) -> f64 {
    let w = f.grid.volume() / f.grid.len() as f64;
    f.data.iter().sum::<f64>() * w
}

/// Assemble a z-constant SpecField from the k_z = 0 plane of `f`, i.e. the
/// spectral vertical mean returned to physical space.
pub fn vertical_mean_field(f: &Field) -> Field {
    f.to_spec().vertical_mean().to_phys()
}

/// Make a grid share the same Arc (convenience for modules that build many
/// fields).
pub fn same_grid(a: &SpecField, b: &SpecField) -> bool {
    Arc::ptr_eq(&a.grid, &b.grid)
}
