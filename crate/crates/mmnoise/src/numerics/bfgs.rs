use super::central_gradient;

/// Options for the dense quasi-Newton minimizer.
#[derive(Debug, Clone)]
pub struct BfgsOptions {
    /// Convergence once the gradient sup-norm falls to this level.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Cap on the step sup-norm. Likelihood surfaces with flat ridges (for
    /// example near-cancelling AR and MA factors) otherwise invite huge
    /// exploratory steps that overflow the model recursions.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            grad_tol: 1e-6,
            max_iter: 2000,
            max_step: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub fn_evals: usize,
    pub converged: bool,
}

/// BFGS with central-difference gradients and Armijo backtracking only (no
/// step expansion). The inverse Hessian update is skipped whenever the
/// curvature product s'y is too small to be trustworthy, and the direction
/// falls back to steepest descent if the model loses descent.
///
/// The objective must return finite values; callers guard invalid regions
/// by returning a large finite penalty there.
pub fn minimize_bfgs<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &BfgsOptions,
) -> BfgsResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        debug_assert!(v.is_finite(), "objective returned a non-finite value");
        v
    };

    let mut x = x0.to_vec();
    let mut fx = eval(&x, &mut evals);
    let mut g = central_gradient(&mut |p: &[f64]| eval(p, &mut evals), &x);
    let mut h_inv = identity(n);
    let mut h_fresh = true;

    for iter in 0..opts.max_iter {
        let g_norm = sup_norm(&g);
        if g_norm <= opts.grad_tol {
            return BfgsResult {
                x,
                fx,
                grad_norm: g_norm,
                iterations: iter,
                fn_evals: evals,
                converged: true,
            };
        }

        let mut p = neg_mat_vec(&h_inv, &g);
        if dot(&g, &p) >= 0.0 {
            // Lost descent; restart from steepest descent.
            h_inv = identity(n);
            h_fresh = true;
            p = g.iter().map(|gi| -gi).collect();
        }
        let p_norm = sup_norm(&p);
        if p_norm > opts.max_step {
            let scale = opts.max_step / p_norm;
            for pi in p.iter_mut() {
                *pi *= scale;
            }
        }
        let slope = dot(&g, &p);

        // Armijo backtracking from unit step.
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + alpha * pi).collect();
            let fn_ = eval(&xn, &mut evals);
            if fn_ <= fx + 1e-4 * alpha * slope {
                accepted = Some((xn, fn_));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            if !h_fresh {
                // A stale curvature model can poison the direction long
                // before the minimum; retry from steepest descent before
                // giving up on the line search.
                h_inv = identity(n);
                h_fresh = true;
                continue;
            }
            // Even steepest descent cannot improve; report the best point.
            return BfgsResult {
                x,
                fx,
                grad_norm: g_norm,
                iterations: iter,
                fn_evals: evals,
                converged: g_norm <= opts.grad_tol,
            };
        };

        let gn = central_gradient(&mut |q: &[f64]| eval(q, &mut evals), &xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm2(&s) * norm2(&y) {
            bfgs_update(&mut h_inv, &s, &y, sy);
            h_fresh = false;
        }
        x = xn;
        fx = fn_;
        g = gn;
    }

    let g_norm = sup_norm(&g);
    BfgsResult {
        x,
        fx,
        grad_norm: g_norm,
        iterations: opts.max_iter,
        fn_evals: evals,
        converged: g_norm <= opts.grad_tol,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn neg_mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| -dot(row, v)).collect()
}

/// H <- (I - rho s y') H (I - rho y s') + rho s s'  with rho = 1 / s'y.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = h.iter().map(|row| dot(row, y)).collect();
    let yhy = dot(&hy, y);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                + rho * rho * yhy * s[i] * s[j]
                + rho * s[i] * s[j];
        }
    }
}
