//! Small numerical utilities shared by the pricing and calibration modules:
//! order-stable summation, lower-interpolation quantiles, dense linear
//! algebra on small matrices, and three solvers (bracketed root finding,
//! simplex minimization, quasi-Newton minimization).

mod bfgs;
mod brent;
mod nelder_mead;

pub use bfgs::{minimize_bfgs, BfgsOptions, BfgsResult};
pub use brent::brent_root;
pub use nelder_mead::{axis_simplex, minimize_nelder_mead, NelderMeadOptions, NelderMeadResult};

/// Pairwise (cascade) summation. Error grows as O(log n) in the number of
/// terms instead of O(n) for a running sum, which keeps large Monte Carlo
/// reductions insensitive to accumulation order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 32;
    if values.len() <= BASE {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Empirical quantile with lower interpolation: the sorted value at index
/// floor((n - 1) * q). For q = 0.5 this is the lower median.
pub fn quantile_lower(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in quantile input"));
    let idx = ((sorted.len() - 1) as f64 * q).floor() as usize;
    Some(sorted[idx])
}

/// Lower median: middle element for odd counts, lower of the two middle
/// elements for even counts.
pub fn median_lower(values: &[f64]) -> Option<f64> {
    quantile_lower(values, 0.5)
}

/// Invert a small dense matrix by Gauss-Jordan elimination with partial
/// pivoting. Returns None when a pivot collapses (singular or nearly so).
pub fn invert_matrix(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) {
        return None;
    }
    // Augmented [A | I].
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot_row);
        let pivot = m[col][col];
        for v in m[col].iter_mut() {
            *v /= pivot;
        }
        for row in 0..n {
            if row != col {
                let factor = m[row][col];
                if factor != 0.0 {
                    let (head, tail) = m.split_at_mut(row.max(col));
                    let (src, dst) = if row < col {
                        (&tail[0], &mut head[row])
                    } else {
                        (&head[col], &mut tail[0])
                    };
                    for (d, s) in dst.iter_mut().zip(src.iter()) {
                        *d -= factor * s;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Central-difference gradient with per-coordinate steps
/// h_i = max(1e-6, 1e-7 |x_i|).
pub fn central_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = (1e-7 * x[i].abs()).max(1e-6);
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Central-difference Hessian. `steps` gives the per-coordinate step sizes.
pub fn central_hessian<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x: &[f64],
    steps: &[f64],
) -> Vec<Vec<f64>> {
    let n = x.len();
    let f0 = f(x);
    let mut h = vec![vec![0.0; n]; n];
    let mut xt = x.to_vec();
    for i in 0..n {
        let hi = steps[i];
        xt[i] = x[i] + hi;
        let fp = f(&xt);
        xt[i] = x[i] - hi;
        let fm = f(&xt);
        xt[i] = x[i];
        h[i][i] = (fp - 2.0 * f0 + fm) / (hi * hi);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (hi, hj) = (steps[i], steps[j]);
            let mut eval = |si: f64, sj: f64| {
                xt[i] = x[i] + si * hi;
                xt[j] = x[j] + sj * hj;
                let v = f(&xt);
                xt[i] = x[i];
                xt[j] = x[j];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * hi * hj);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    h
}
