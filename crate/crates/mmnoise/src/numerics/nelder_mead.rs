/// Options for the downhill simplex search. The construction is fully
/// deterministic: no randomized restarts, stable ordering on ties.
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Stop as soon as the best vertex value falls to this level or below.
    pub f_target: f64,
    /// Stop when the simplex has collapsed: max vertex distance below this.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            f_target: f64::NEG_INFINITY,
            x_tol: 1e-12,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead with the standard coefficients (reflect 1, expand 2,
/// contract 0.5, shrink 0.5) from an explicit initial simplex.
pub fn minimize_nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    initial_simplex: Vec<Vec<f64>>,
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = initial_simplex[0].len();
    assert!(
        initial_simplex.len() == n + 1,
        "simplex must have dim + 1 vertices"
    );
    let mut verts: Vec<(Vec<f64>, f64)> = initial_simplex
        .into_iter()
        .map(|v| {
            let fv = f(&v);
            (v, fv)
        })
        .collect();

    let centroid = |verts: &[(Vec<f64>, f64)]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        for (v, _) in &verts[..n] {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi;
            }
        }
        for ci in c.iter_mut() {
            *ci /= n as f64;
        }
        c
    };

    for iter in 0..opts.max_iter {
        // Stable sort keeps tie order deterministic.
        verts.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("non-finite objective"));
        let best = verts[0].1;
        let worst = verts[n].1;
        if best <= opts.f_target {
            return NelderMeadResult {
                x: verts[0].0.clone(),
                fx: best,
                iterations: iter,
                converged: true,
            };
        }
        let spread = verts[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&verts[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if spread <= opts.x_tol {
            return NelderMeadResult {
                x: verts[0].0.clone(),
                fx: best,
                iterations: iter,
                converged: best <= opts.f_target,
            };
        }

        let c = centroid(&verts);
        let point_at = |t: f64, from: &[f64]| -> Vec<f64> {
            c.iter()
                .zip(from)
                .map(|(ci, wi)| ci + t * (ci - wi))
                .collect()
        };

        let xr = point_at(1.0, &verts[n].0);
        let fr = f(&xr);
        if fr < verts[0].1 {
            let xe = point_at(2.0, &verts[n].0);
            let fe = f(&xe);
            verts[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < verts[n - 1].1 {
            verts[n] = (xr, fr);
        } else {
            // Contract toward the better of worst and reflected.
            let (xc, fc) = if fr < worst {
                let x = point_at(0.5, &verts[n].0);
                let v = f(&x);
                (x, v)
            } else {
                let x: Vec<f64> = c
                    .iter()
                    .zip(&verts[n].0)
                    .map(|(ci, wi)| ci - 0.5 * (ci - wi))
                    .collect();
                let v = f(&x);
                (x, v)
            };
            if fc < worst.min(fr) {
                verts[n] = (xc, fc);
            } else {
                // Shrink toward the best vertex.
                let best_x = verts[0].0.clone();
                for (v, fv) in verts.iter_mut().skip(1) {
                    for (vi, bi) in v.iter_mut().zip(&best_x) {
                        *vi = bi + 0.5 * (*vi - bi);
                    }
                    *fv = f(v);
                }
            }
        }
    }
    verts.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("non-finite objective"));
    NelderMeadResult {
        x: verts[0].0.clone(),
        fx: verts[0].1,
        iterations: opts.max_iter,
        converged: verts[0].1 <= opts.f_target,
    }
}

/// Axis-aligned initial simplex around x0 with per-coordinate offsets.
pub fn axis_simplex(x0: &[f64], deltas: &[f64]) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += deltas[i];
        simplex.push(v);
    }
    simplex
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let opts = NelderMeadOptions {
            f_target: 1e-12,
            x_tol: 1e-14,
            max_iter: 2000,
        };
        let r = minimize_nelder_mead(f, axis_simplex(&[-1.0, 1.0], &[0.5, 0.5]), &opts);
        assert!(r.converged, "fx = {}", r.fx);
        assert!((r.x[0] - 1.0).abs() < 1e-5);
        assert!((r.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn deterministic_across_runs() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] + 0.7).powi(2);
        let opts = NelderMeadOptions {
            f_target: 1e-16,
            ..Default::default()
        };
        let a = minimize_nelder_mead(f, axis_simplex(&[0.0, 0.0], &[0.1, 0.1]), &opts);
        let b = minimize_nelder_mead(f, axis_simplex(&[0.0, 0.0], &[0.1, 0.1]), &opts);
        assert_eq!(a.x, b.x);
        assert_eq!(a.fx, b.fx);
    }
}
