/// Outcome of a bracketed root search.
#[derive(Debug, Clone, Copy)]
pub struct RootResult {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Brent's method on a bracket [a, b] with f(a) and f(b) of opposite sign.
/// Combines bisection, secant, and inverse quadratic interpolation; each
/// iteration keeps a valid bracket, so the search cannot escape [a, b].
///
/// Stops when |f(x)| <= f_tol or the bracket width falls below x_tol.
#[allow(clippy::too_many_arguments)]
pub fn brent_root<F: FnMut(f64) -> f64>(
    mut f: F,
    a0: f64,
    b0: f64,
    fa0: f64,
    fb0: f64,
    x_tol: f64,
    f_tol: f64,
    max_iter: usize,
) -> RootResult {
    let (mut a, mut b, mut fa, mut fb) = (a0, b0, fa0, fb0);
    debug_assert!(fa * fb <= 0.0, "brent_root requires a sign change");
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    // b is the best estimate, c the previous one.
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for iter in 0..max_iter {
        if fb.abs() <= f_tol {
            return RootResult {
                x: b,
                fx: fb,
                iterations: iter,
                converged: true,
            };
        }
        if fb * fc > 0.0 {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 {
            return RootResult {
                x: b,
                fx: fb,
                iterations: iter,
                converged: fb.abs() <= f_tol,
            };
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Attempt interpolation.
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                // Secant step.
                (2.0 * xm * s, 1.0 - s)
            } else {
                // Inverse quadratic interpolation.
                let q1 = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q1 * (q1 - r) - (b - a) * (r - 1.0)),
                    (q1 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else {
            tol1.copysign(xm)
        };
        fb = f(b);
    }
    RootResult {
        x: b,
        fx: fb,
        iterations: max_iter,
        converged: fb.abs() <= f_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let f = |x: f64| x * x * x - 2.0 * x - 5.0;
        let r = brent_root(f, 2.0, 3.0, f(2.0), f(3.0), 1e-14, 1e-14, 100);
        assert!(r.converged);
        assert!((r.x - 2.0945514815423265).abs() < 1e-12);
    }

    #[test]
    fn respects_f_tolerance() {
        let f = |x: f64| x.exp() - 10.0;
        let r = brent_root(f, 0.0, 5.0, f(0.0), f(5.0), 0.0, 1e-10, 200);
        assert!(r.converged);
        assert!(r.fx.abs() <= 1e-10);
    }

    #[test]
    fn root_at_bracket_edge() {
        let f = |x: f64| x;
        let r = brent_root(f, 0.0, 1.0, 0.0, 1.0, 1e-15, 1e-15, 100);
        assert!(r.converged);
        assert_eq!(r.x, 0.0);
    }
}
