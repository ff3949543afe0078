use super::ops::*;
use super::*;
use approx::assert_relative_eq;
use proptest::prelude::*;
use std::f64::consts::PI;

fn slab(nh: usize, nz: usize) -> Arc<SpectralGrid> {
    SpectralGrid::reflected_slab(nh, nz, 1.0).unwrap()
}

/// Random band-limited field built from parity-correct trig modes.
fn trig_field(grid: &Arc<SpectralGrid>, parity: Parity, seeds: &[(i64, i64, i64, f64)]) -> Field {
    let lx = grid.period[0];
    let ly = grid.period[1];
    Field::from_fn(grid, parity, |x, y, z| {
        let mut v = 0.0;
        for &(a, b, c, amp) in seeds {
            let hor = (2.0 * PI * (a as f64 * x / lx + b as f64 * y / ly)).cos();
            let vert = match parity {
                Parity::Odd => (PI * c as f64 * z).sin(),
                _ => (PI * c as f64 * z).cos(),
            };
            v += amp * hor * vert;
        }
        v
    })
}

#[test]
fn roundtrip_and_parseval() {
    let g = slab(8, 8);
    let f = trig_field(&g, Parity::Even, &[(1, 0, 1, 0.7), (2, 1, 2, -0.3), (0, 3, 0, 0.2)]);
    let s = f.to_spec();
    let back = s.to_phys();
    let err = f
        .data
        .iter()
        .zip(&back.data)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-12, "roundtrip error {err}");
    assert_relative_eq!(f.l2_norm(), s.l2_norm(), max_relative = 1e-12);
}

#[test]
fn derivatives_are_exact_on_trig_modes() {
    let g = slab(8, 8);
    let lx = g.period[0];
    let f = Field::from_fn(&g, Parity::Even, |x, _, z| {
        (2.0 * PI * x / lx).sin() * (PI * z).cos()
    });
    let s = f.to_spec();
    let fx = s.ddx(0).to_phys();
    let fz = s.ddx(2).to_phys();
    let fx_exact = Field::from_fn(&g, Parity::Even, |x, _, z| {
        (2.0 * PI / lx) * (2.0 * PI * x / lx).cos() * (PI * z).cos()
    });
    let fz_exact = Field::from_fn(&g, Parity::Odd, |x, _, z| {
        -PI * (2.0 * PI * x / lx).sin() * (PI * z).sin()
    });
    for (a, b) in fx.data.iter().zip(&fx_exact.data) {
        assert!((a - b).abs() < 1e-11);
    }
    for (a, b) in fz.data.iter().zip(&fz_exact.data) {
        assert!((a - b).abs() < 1e-11);
    }
    assert_eq!(fz.parity, Parity::Odd);
    assert!(fz.parity_defect() < 1e-12);
}

#[test]
fn laplacian_matches_composition() {
    let g = slab(8, 8);
    let f = trig_field(&g, Parity::Even, &[(1, 2, 1, 1.0), (3, 0, 2, 0.4)]);
    let s = f.to_spec();
    let lap = s.laplace();
    let composed = {
        let mut out = s.ddx(0).ddx(0);
        out.axpy(num_complex::Complex64::new(1.0, 0.0), &s.ddx(1).ddx(1));
        out.axpy(num_complex::Complex64::new(1.0, 0.0), &s.ddx(2).ddx(2));
        out
    };
    for (a, b) in lap.coef.iter().zip(&composed.coef) {
        assert!((a - b).norm() < 1e-11);
    }
}

#[test]
fn leray_removes_divergence_and_is_idempotent() {
    let g = slab(8, 8);
    let u = [
        trig_field(&g, Parity::Even, &[(1, 0, 1, 0.5), (0, 2, 2, 0.3)]).to_spec(),
        trig_field(&g, Parity::Even, &[(2, 1, 0, -0.4)]).to_spec(),
        trig_field(&g, Parity::Odd, &[(1, 1, 1, 0.8)]).to_spec(),
    ];
    let p = leray_project(&u);
    assert!(div(&p).l2_norm() < 1e-12);
    let pp = leray_project(&p);
    for (a, b) in p[0].coef.iter().zip(&pp[0].coef) {
        assert!((a - b).norm() < 1e-13);
    }
    // parity survives projection
    assert!(p[0].to_phys().parity_defect() < 1e-10);
    assert!(p[2].to_phys().parity_defect() < 1e-10);

    let vh = [u[0].clone(), u[1].clone()];
    let ph = leray_project_h(&vh);
    assert!(div_h(&ph).l2_norm() < 1e-12);
}

#[test]
fn dealiased_product_is_exact_for_band_limited_factors() {
    // cos(a.x) cos(b.x) = (cos((a+b).x) + cos((a-b).x)) / 2: both factors
    // inside the 2/3 band, the product reconstructs exactly after masking
    // as long as a+b is also inside.
    let g = slab(12, 12);
    let lx = g.period[0];
    let a = Field::from_fn(&g, Parity::Even, |x, _, z| {
        (2.0 * PI * x / lx).cos() * (PI * z).cos()
    });
    let b = Field::from_fn(&g, Parity::Even, |x, _, _| (2.0 * PI * 2.0 * x / lx).cos());
    let prod = dealiased_product(&a, &b);
    let expect = Field::from_fn(&g, Parity::Even, |x, _, z| {
        0.5 * ((2.0 * PI * 3.0 * x / lx).cos() + (2.0 * PI * x / lx).cos()) * (PI * z).cos()
    })
    .to_spec();
    for (p, q) in prod.coef.iter().zip(&expect.coef) {
        assert!((p - q).norm() < 1e-12);
    }
    assert_eq!(prod.parity, Parity::Even);
}

#[test]
fn vertical_mean_picks_the_kz0_plane() {
    let g = slab(8, 8);
    let f = Field::from_fn(&g, Parity::Even, |x, _, z| {
        1.5 + (2.0 * PI * x / g.period[0]).cos() * (1.0 + (PI * z).cos())
    });
    let mean = f.to_spec().vertical_mean().to_phys();
    // z-constant
    let [nx, ny, nz] = g.n;
    for ix in 0..nx {
        for iy in 0..ny {
            let v0 = mean.data[g.index(ix, iy, 0)];
            for iz in 1..nz {
                assert!((mean.data[g.index(ix, iy, iz)] - v0).abs() < 1e-12);
            }
        }
    }
    // equals the column average of the original
    let expect = Field::from_fn(&g, Parity::Even, |x, _, _| {
        1.5 + (2.0 * PI * x / g.period[0]).cos()
    });
    for (a, b) in mean.data.iter().zip(&expect.data) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn snapshot_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.snap");
    let g = slab(8, 4);
    let rho = trig_field(&g, Parity::Even, &[(1, 1, 1, 0.1)]);
    let w = trig_field(&g, Parity::Odd, &[(0, 1, 1, 0.7)]);
    write_snapshot(&path, 1.25, &[("rho", &rho), ("w", &w)]).unwrap();
    let snap = read_snapshot(&path).unwrap();
    assert_eq!(snap.header.n, g.n);
    assert_eq!(snap.header.time, 1.25);
    let rho2 = snap.field("rho").unwrap();
    assert_eq!(rho2.parity, Parity::Even);
    for (a, b) in rho.data.iter().zip(&rho2.data) {
        assert_eq!(a, b, "payload must roundtrip bit-exactly");
    }
    assert!(snap.field("missing").is_none());
}

#[test]
fn rejects_bad_grids() {
    assert!(SpectralGrid::new([7, 8, 8], [1.0, 1.0, 1.0]).is_err());
    assert!(SpectralGrid::new([2, 8, 8], [1.0, 1.0, 1.0]).is_err());
    assert!(SpectralGrid::new([8, 8, 8], [0.0, 1.0, 1.0]).is_err());
}

#[test]
fn parity_enforcement_projects_cleanly() {
    let g = slab(4, 8);
    let mut f = Field::from_fn(&g, Parity::Even, |x, y, z| {
        (x + 0.3 * y).sin() + 0.01 * z // symmetric + small symmetry-breaking part
    });
    assert!(f.parity_defect() > 1e-4);
    f.enforce_parity();
    assert!(f.parity_defect() < 1e-14);
    // enforcing is a projection: doing it twice changes nothing
    let before = f.data.clone();
    f.enforce_parity();
    assert_eq!(before, f.data);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parseval_holds_for_random_fields(seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = slab(8, 8);
        let mut f = Field::zeros(&g, Parity::Mixed);
        for v in &mut f.data {
            *v = rng.gen_range(-1.0..1.0);
        }
        let s = f.to_spec();
        prop_assert!((f.l2_norm() - s.l2_norm()).abs() < 1e-10 * f.l2_norm().max(1.0));
        prop_assert!(s.reality_defect() < 1e-12);
    }

    #[test]
    fn products_combine_parity(seed in 0u64..1000) {
        let g = slab(4, 8);
        let a_seeds = [(1i64, 0i64, (seed % 3) as i64, 0.8f64)];
        let b_seeds = [(0i64, 1i64, 1 + (seed % 2) as i64, 0.6f64)];
        let a = trig_field(&g, Parity::Even, &a_seeds);
        let b = trig_field(&g, Parity::Odd, &b_seeds);
        let p = a.product(&b);
        prop_assert_eq!(p.parity, Parity::Odd);
        prop_assert!(p.parity_defect() < 1e-12);
        let q = b.product(&b);
        prop_assert_eq!(q.parity, Parity::Even);
        prop_assert!(q.parity_defect() < 1e-12);
    }
}
