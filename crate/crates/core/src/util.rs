//! Small numerical helpers shared across modules.

use crate::error::{Error, Result};

/// Adaptive Simpson quadrature on [a, b] (a <= b or reversed).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    sign * simpson_rec(&f, lo, hi, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)
    }
}

/// Root of a strictly increasing function: solves f(x) = target.
///
/// Safeguarded Newton: keeps a bracket (expanded geometrically from `x0`
/// towards `lo_limit`) and bisects whenever the Newton step leaves it.
pub fn solve_increasing<F, D>(
    f: F,
    df: D,
    target: f64,
    x0: f64,
    lo_limit: f64,
    tol: f64,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut lo = x0;
    let mut hi = x0;
    // expand the bracket
    let mut step = 0.5 * x0.abs().max(1e-3);
    let mut n = 0;
    while f(lo) > target {
        lo = (lo - step).max(lo_limit + (lo - lo_limit) * 0.5);
        step *= 2.0;
        n += 1;
        if n > 200 {
            return Err(Error::Domain(format!(
                "no lower bracket for target {target} (reached {lo})"
            )));
        }
    }
    step = 0.5 * x0.abs().max(1e-3);
    n = 0;
    while f(hi) < target {
        hi += step;
        step *= 2.0;
        n += 1;
        if n > 200 {
            return Err(Error::Domain(format!(
                "no upper bracket for target {target} (reached {hi})"
            )));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x) - target;
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let fx = f(x) - target;
    if fx.abs() <= tol * 100.0 {
        Ok(x)
    } else {
        Err(Error::Domain(format!(
            "root solve stalled at x = {x}, residual {fx:.3e}"
        )))
    }
}

/// Quintic smoothstep: 0 for t <= 0, 1 for t >= 1, C^2 in between.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
        let v = adaptive_simpson(|x| 1.0 / x, 1.0, 2.0, 1e-12);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-11);
        // reversed interval flips the sign
        let v = adaptive_simpson(|x| x * x, 2.0, 1.0, 1e-12);
        assert!((v + 7.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn solver_handles_log_like_functions() {
        // f(x) = ln x + x, increasing on (0, inf)
        let f = |x: f64| x.ln() + x;
        let df = |x: f64| 1.0 / x + 1.0;
        let x = solve_increasing(f, df, -3.0, 1.0, 0.0, 1e-13).unwrap();
        assert!((f(x) + 3.0).abs() < 1e-12);
        let x = solve_increasing(f, df, 5.0, 1.0, 0.0, 1e-13).unwrap();
        assert!((f(x) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn smoothstep_clamps_and_interpolates() {
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(2.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
        assert!(smoothstep(0.3) < smoothstep(0.31));
    }
}
