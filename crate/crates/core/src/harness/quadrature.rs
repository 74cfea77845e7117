//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 60;

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &impl Fn(f64) -> f64,
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
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}

/// Integral of `f` over `[a, b]` to absolute tolerance `tol` (heuristically).
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 0)
}

/// Integral of `f` over `[0, inf)`: the upper limit doubles until both the
/// integrand at the limit and the increment drop below `tail_tol`.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, tol: f64, tail_tol: f64) -> Option<f64> {
    let mut upper = 1.0;
    let mut total = adaptive_simpson(&f, 0.0, upper, tol);
    for _ in 0..64 {
        let next = adaptive_simpson(&f, upper, 2.0 * upper, tol);
        total += next;
        upper *= 2.0;
        if next.abs() <= tail_tol && f(upper).abs() * upper <= tail_tol {
            return Some(total);
        }
        if !total.is_finite() {
            return None;
        }
    }
    None
}
