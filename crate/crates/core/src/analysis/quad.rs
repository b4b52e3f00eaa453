//! Adaptive Simpson quadrature.

/// Maximum bisection depth of [`adaptive_simpson`].
pub const MAX_DEPTH: u32 = 48;

#[inline]
fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
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
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `eps`.
///
/// The interval is pre-split into 16 panels so that narrow features near an
/// endpoint are not missed by the first Simpson estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, eps: f64) -> f64 {
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let panel_eps = eps / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == PANELS { b } else { lo + h };
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(fa, fm, fb, lo, hi);
            recurse(&f, lo, hi, fa, fm, fb, whole, panel_eps, MAX_DEPTH)
        })
        .sum()
}

/// Integrates `f(x, y)` over the unit square, nesting [`adaptive_simpson`].
pub fn unit_square<F: Fn(f64, f64) -> f64>(f: F, eps: f64) -> f64 {
    adaptive_simpson(|x| adaptive_simpson(|y| f(x, y), 0.0, 1.0, eps), 0.0, 1.0, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_exponentials() {
        assert!((adaptive_simpson(|x| x * x, 0.0, 1.0, 1e-12) - 1.0 / 3.0).abs() < 1e-12);
        let e = adaptive_simpson(f64::exp, 0.0, 2.0, 1e-10);
        assert!((e - (2f64.exp() - 1.0)).abs() < 1e-9);
        let s = adaptive_simpson(|x| x.powf(-0.5), 1e-12, 1.0, 1e-8);
        assert!((s - 2.0).abs() < 1e-4);
    }

    #[test]
    fn double_integral() {
        let v = unit_square(|x, y| x * y, 1e-10);
        assert!((v - 0.25).abs() < 1e-9);
    }
}
