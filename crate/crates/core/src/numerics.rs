//! Scalar root finding, quadrature and one-dimensional optimization.

use crate::error::{Error, Result};

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign.
///
/// Terminates when the bracket is narrower than `xtol + 4·eps·|x|` or `f` hits
/// zero exactly.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    brent_with(f, a, b, fa, fb, xtol)
}

/// As [`brent`] but reuses already computed end-point values.
pub fn brent_with<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, xtol: f64) -> Result<f64> {
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::RootFinding(format!("NaN at bracket [{a}, {b}]")));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{a}, {b}] (f = {fa}, {fb})"
        )));
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::RootFinding(format!("NaN at x = {b}")));
        }
    }
    Err(Error::RootFinding("Brent iteration limit".into()))
}

/// Plain bisection for monotone functions where only the sign is reliable.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let flo = f(lo);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All sign changes of `f` on a geometric grid between `lo` and `hi` (both > 0),
/// each refined with Brent. Points where `|f|` stays large after refinement
/// (poles) are dropped.
pub fn positive_roots<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, ratio: f64, xtol_rel: f64) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    let mut scale = f0.abs();
    if f0 == 0.0 {
        roots.push(x0);
    }
    while x0 < hi {
        let x1 = (x0 * ratio).min(hi);
        let f1 = f(x1);
        if f1.is_finite() {
            scale = scale.max(f1.abs());
        }
        // a domain edge inside the step: shrink the step to its finite part
        let (mut a, mut fa, mut b, mut fb) = (x0, f0, x1, f1);
        if f0.is_finite() != f1.is_finite() {
            let (edge, fe) = finite_edge(&mut f, x0, x1, f0.is_finite());
            if f0.is_finite() {
                (b, fb) = (edge, fe);
            } else {
                (a, fa) = (edge, fe);
            }
        }
        if f1 == 0.0 {
            roots.push(x1);
        } else if fa != 0.0 && fa.is_finite() && fb.is_finite() && fa.signum() != fb.signum() {
            let r = brent_with(&mut f, a, b, fa, fb, xtol_rel * a)?;
            let fr = f(r).abs();
            let near = fa.abs().min(fb.abs());
            if fr <= near.max(1e-9 * scale) {
                roots.push(r);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(roots)
}

/// Bisects towards the boundary of the region where `f` is finite, which
/// lies in `[a, b]`. Returns the finite point closest to it.
fn finite_edge<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, left_finite: bool) -> (f64, f64) {
    let (mut good, mut bad) = if left_finite { (a, b) } else { (b, a) };
    let mut fg = f(good);
    for _ in 0..200 {
        let mid = 0.5 * (good + bad);
        if mid == good || mid == bad {
            break;
        }
        let fm = f(mid);
        if fm.is_finite() {
            good = mid;
            fg = fm;
        } else {
            bad = mid;
        }
    }
    (good, fg)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// Composite Simpson starting from `n0` panels and doubling until two successive
/// estimates differ by less than `tol` or `max_panels` is reached.
pub fn simpson_doubling<F: FnMut(f64) -> std::result::Result<f64, E>, E>(
    mut f: F,
    a: f64,
    b: f64,
    n0: usize,
    tol: f64,
    max_panels: usize,
) -> std::result::Result<f64, E> {
    let mut n = n0.max(2);
    n += n % 2;
    let h = (b - a) / n as f64;
    let ends = f(a)? + f(b)?;
    let mut evens = 0.0;
    let mut odds = 0.0;
    for i in 1..n {
        let v = f(a + h * i as f64)?;
        if i % 2 == 1 {
            odds += v;
        } else {
            evens += v;
        }
    }
    let mut est = (ends + 4.0 * odds + 2.0 * evens) * h / 3.0;
    loop {
        if n >= max_panels {
            return Ok(est);
        }
        let n2 = 2 * n;
        let h2 = (b - a) / n2 as f64;
        evens += odds;
        odds = 0.0;
        for i in (1..n2).step_by(2) {
            odds += f(a + h2 * i as f64)?;
        }
        let next = (ends + 4.0 * odds + 2.0 * evens) * h2 / 3.0;
        let done = (next - est).abs() < tol;
        est = next;
        n = n2;
        if done {
            return Ok(est);
        }
    }
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_step(&mut f, a, b, fa, fm, fb, whole, tol, 30)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: FnMut(f64) -> f64>(
    f: &mut F,
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
    // stop once the refinement is at the level of rounding noise
    let noise = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= (15.0 * tol).max(noise) || (m - a) <= f64::EPSILON * m.abs() {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Aitken extrapolation of three successive terms of a geometric-error sequence.
pub fn aitken(s0: f64, s1: f64, s2: f64) -> f64 {
    let denom = s2 - 2.0 * s1 + s0;
    if denom.abs() <= f64::EPSILON * (s0.abs() + s1.abs() + s2.abs()) {
        return s2;
    }
    s2 - (s2 - s1).powi(2) / denom
}

/// Smallest eigenvalue of the symmetric matrix `[[a, b], [b, d]]`.
pub fn sym2_min_eigen(a: f64, b: f64, d: f64) -> f64 {
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d).powi(2) + b * b).sqrt();
    mean - rad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 3.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn brent_rejects_no_sign_change() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn positive_roots_reports_all() {
        let roots = positive_roots(|x| (x - 0.5) * (x - 3.0), 1e-3, 1e3, 1.5, 1e-14).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - 0.5).abs() < 1e-12);
        assert!((roots[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn positive_roots_skips_poles() {
        let roots = positive_roots(|x| 1.0 / (x - 2.0), 0.1, 10.0, 1.3, 1e-14).unwrap();
        assert!(roots.is_empty());
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let v = simpson(|x| x * x * x - x, 0.0, 2.0, 2);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_doubling_converges() {
        let v: f64 = simpson_doubling(|x| Ok::<_, ()>(x.sin()), 0.0, std::f64::consts::PI, 4, 1e-12, 1 << 16).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_handles_sqrt_singularity() {
        let v = adaptive_simpson(|x| x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let x = golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn aitken_exact_for_geometric_error() {
        let s: Vec<f64> = (0..3).map(|k| 1.0 + 0.5f64.powi(k)).collect();
        assert!((aitken(s[0], s[1], s[2]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn min_eigen_of_diagonal() {
        assert_eq!(sym2_min_eigen(2.0, 0.0, 1.0), 1.0);
        assert!((sym2_min_eigen(1.0, 1.0, 1.0)).abs() < 1e-15);
    }
}
