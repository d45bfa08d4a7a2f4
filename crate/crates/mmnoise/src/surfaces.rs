//! Presentation-side processing of implied surfaces: upper-tail
//! winsorization, Gaussian-kernel smoothing onto a regular grid, and a
//! round-trippable on-disk format (long CSV plus a JSON sidecar).
//!
//! Smoothing is a Nadaraya-Watson weighted average: each grid cell takes
//! value sum(w_i v_i) / sum(w_i) with
//! w_i = exp(-1/2 [((T - t_i)/h_T)^2 + ((M - m_i)/h_M)^2]). Cells whose
//! total weight falls below 1e-12 carry no information and are masked as
//! missing rather than extrapolated.

use crate::error::{Error, Result};
use crate::numerics::quantile_lower;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Clip values above the empirical `quantile` level down to that level.
/// The lower tail is left alone, and order is preserved. Idempotent at a
/// fixed quantile. The quantile estimator is the lower-interpolation
/// order statistic sorted[floor((n-1) q)], so results are reproducible
/// exactly.
pub fn winsorize(values: &[f64], quantile: f64) -> Result<Vec<f64>> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::Domain(format!(
            "winsorization quantile must lie strictly inside (0, 1), got {quantile}"
        )));
    }
    let cap = quantile_lower(values, quantile).ok_or_else(|| Error::InsufficientData {
        msg: "cannot winsorize an empty value set".into(),
        required: 1,
        actual: 0,
    })?;
    Ok(values.iter().map(|&v| v.min(cap)).collect())
}

/// One scattered observation: expiry in days, moneyness, value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub t: f64,
    pub m: f64,
    pub value: f64,
}

/// A smoothed surface on a regular grid. `values` is row-major over
/// (t_axis, m_axis); `None` marks cells with no kernel support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub t_axis: Vec<f64>,
    pub m_axis: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub bandwidth_t: f64,
    pub bandwidth_m: f64,
}

impl SurfaceGrid {
    pub fn get(&self, ti: usize, mi: usize) -> Option<f64> {
        self.values[ti * self.m_axis.len() + mi]
    }

    /// Row-major missing mask, as stored in the sidecar.
    pub fn missing_mask(&self) -> Vec<bool> {
        self.values.iter().map(|v| v.is_none()).collect()
    }
}

/// `count` evenly spaced values covering [lo, hi].
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// The default kernel bandwidth for an axis spanning `range`: one tenth
/// of the range, or 1 when the data has no spread to measure.
pub fn default_bandwidth(range: f64) -> f64 {
    if range > 0.0 {
        0.1 * range
    } else {
        1.0
    }
}

/// Gaussian-kernel regression of scattered points onto the given axes.
/// Cells are independent, so they are computed in parallel; each cell's
/// accumulation is a fixed-order sum, keeping results deterministic.
pub fn smooth_surface(
    points: &[SurfacePoint],
    t_axis: &[f64],
    m_axis: &[f64],
    bandwidth_t: f64,
    bandwidth_m: f64,
) -> Result<SurfaceGrid> {
    if points.is_empty() {
        return Err(Error::InsufficientData {
            msg: "smoothing needs at least one data point".into(),
            required: 1,
            actual: 0,
        });
    }
    if !(bandwidth_t > 0.0 && bandwidth_m > 0.0) {
        return Err(Error::Domain(format!(
            "bandwidths must be positive, got ({bandwidth_t}, {bandwidth_m})"
        )));
    }
    if t_axis.is_empty() || m_axis.is_empty() {
        return Err(Error::Domain("grid axes must be nonempty".into()));
    }

    let m_len = m_axis.len();
    let values: Vec<Option<f64>> = (0..t_axis.len() * m_len)
        .into_par_iter()
        .map(|idx| {
            let t = t_axis[idx / m_len];
            let m = m_axis[idx % m_len];
            let mut w_sum = 0.0;
            let mut wv_sum = 0.0;
            for p in points {
                let zt = (t - p.t) / bandwidth_t;
                let zm = (m - p.m) / bandwidth_m;
                let w = (-0.5 * (zt * zt + zm * zm)).exp();
                w_sum += w;
                wv_sum += w * p.value;
            }
            if w_sum < 1e-12 {
                None
            } else {
                Some(wv_sum / w_sum)
            }
        })
        .collect();

    Ok(SurfaceGrid {
        t_axis: t_axis.to_vec(),
        m_axis: m_axis.to_vec(),
        values,
        bandwidth_t,
        bandwidth_m,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    t_axis: Vec<f64>,
    m_axis: Vec<f64>,
    bandwidth_t: f64,
    bandwidth_m: f64,
    missing: Vec<bool>,
}

fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("json")
}

/// Write the grid as long-format CSV (`T,M,value`, empty value for
/// missing cells) plus a JSON sidecar next to it carrying the axes,
/// bandwidths, and missing mask. The sidecar shares the CSV's file stem
/// with a `.json` extension.
pub fn export_grid(grid: &SurfaceGrid, csv_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let mut w = csv::Writer::from_path(csv_path).map_err(|e| Error::Parse {
        path: csv_path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })?;
    let mut write_all = || -> csv::Result<()> {
        w.write_record(["T", "M", "value"])?;
        let m_len = grid.m_axis.len();
        for (idx, value) in grid.values.iter().enumerate() {
            w.write_record([
                grid.t_axis[idx / m_len].to_string(),
                grid.m_axis[idx % m_len].to_string(),
                value.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)
    };
    write_all().map_err(|e| Error::Parse {
        path: csv_path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })?;

    let sidecar = Sidecar {
        t_axis: grid.t_axis.clone(),
        m_axis: grid.m_axis.clone(),
        bandwidth_t: grid.bandwidth_t,
        bandwidth_m: grid.bandwidth_m,
        missing: grid.missing_mask(),
    };
    let meta = sidecar_path(csv_path);
    let json = serde_json::to_string_pretty(&sidecar)
        .expect("sidecar serialization cannot fail");
    std::fs::write(&meta, json).map_err(|e| Error::io(&meta, e))
}

/// Read back a grid written by [`export_grid`]. Exact inverse: values
/// round-trip bit for bit through the decimal encoding.
pub fn import_grid(csv_path: impl AsRef<Path>) -> Result<SurfaceGrid> {
    let csv_path = csv_path.as_ref();
    let meta = sidecar_path(csv_path);
    let raw = std::fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
    let sidecar: Sidecar = serde_json::from_str(&raw).map_err(|e| Error::Parse {
        path: meta.clone(),
        line: 0,
        msg: e.to_string(),
    })?;

    let mut rdr = csv::Reader::from_path(csv_path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                Error::io(csv_path, io)
            } else {
                unreachable!()
            }
        }
        _ => Error::Parse {
            path: csv_path.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        },
    })?;
    let mut values = Vec::new();
    for row in rdr.deserialize::<(f64, f64, Option<f64>)>() {
        let (_, _, value) = row.map_err(|e| Error::Parse {
            path: csv_path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        values.push(value);
    }

    let expected = sidecar.t_axis.len() * sidecar.m_axis.len();
    if values.len() != expected {
        return Err(Error::Parse {
            path: csv_path.to_path_buf(),
            line: 0,
            msg: format!(
                "grid file has {} cells but the sidecar axes imply {expected}",
                values.len()
            ),
        });
    }
    for (i, (v, &miss)) in values.iter().zip(&sidecar.missing).enumerate() {
        if v.is_none() != miss {
            return Err(Error::Parse {
                path: csv_path.to_path_buf(),
                line: i as u64 + 2,
                msg: "missing-cell mask disagrees with the sidecar".into(),
            });
        }
    }
    Ok(SurfaceGrid {
        t_axis: sidecar.t_axis,
        m_axis: sidecar.m_axis,
        values,
        bandwidth_t: sidecar.bandwidth_t,
        bandwidth_m: sidecar.bandwidth_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn winsorize_matches_hand_examples() {
        assert_eq!(winsorize(&[1.0, 2.0, 3.0], 0.5).unwrap(), vec![1.0, 2.0, 2.0]);
        let hundred: Vec<f64> = (1..=100).map(f64::from).collect();
        let clipped = winsorize(&hundred, 0.99).unwrap();
        assert_eq!(clipped[99], 99.0);
        assert_eq!(&clipped[..99], &hundred[..99]);
        assert_eq!(winsorize(&[5.0; 7], 0.9).unwrap(), vec![5.0; 7]);
    }

    #[test]
    fn winsorize_rejects_bad_inputs() {
        assert!(winsorize(&[], 0.5).is_err());
        assert!(winsorize(&[1.0], 0.0).is_err());
        assert!(winsorize(&[1.0], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn winsorize_is_idempotent_and_order_preserving(
            values in proptest::collection::vec(-100f64..100.0, 1..60),
            q in 0.01f64..0.99,
        ) {
            let once = winsorize(&values, q).unwrap();
            let twice = winsorize(&once, q).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(once.len(), values.len());
            for (a, b) in once.iter().zip(&values) {
                prop_assert!(a <= b);
            }
        }
    }

    fn cross_points(value: f64) -> Vec<SurfacePoint> {
        vec![
            SurfacePoint { t: 7.0, m: 0.95, value },
            SurfacePoint { t: 7.0, m: 1.05, value },
            SurfacePoint { t: 30.0, m: 0.95, value },
            SurfacePoint { t: 30.0, m: 1.05, value },
        ]
    }

    #[test]
    fn constant_field_smooths_to_the_constant() {
        let grid = smooth_surface(
            &cross_points(0.42),
            &linspace(7.0, 30.0, 5),
            &linspace(0.95, 1.05, 5),
            2.3,
            0.01,
        )
        .unwrap();
        for v in &grid.values {
            assert_relative_eq!(v.unwrap(), 0.42, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_point_fills_the_grid_with_its_value() {
        let grid = smooth_surface(
            &[SurfacePoint { t: 10.0, m: 1.0, value: 3.5 }],
            &linspace(8.0, 12.0, 4),
            &linspace(0.9, 1.1, 4),
            5.0,
            0.5,
        )
        .unwrap();
        for v in &grid.values {
            assert_relative_eq!(v.unwrap(), 3.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn midpoint_of_two_points_is_their_mean() {
        let points = [
            SurfacePoint { t: 10.0, m: 0.9, value: 1.0 },
            SurfacePoint { t: 20.0, m: 1.1, value: 3.0 },
        ];
        let grid = smooth_surface(&points, &[15.0], &[1.0], 4.0, 0.08).unwrap();
        assert_relative_eq!(grid.get(0, 0).unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn far_cells_with_tiny_bandwidth_are_masked() {
        let points = [SurfacePoint { t: 1.0, m: 1.0, value: 5.0 }];
        let grid = smooth_surface(&points, &[1.0, 500.0], &[1.0], 0.5, 0.5).unwrap();
        assert!(grid.get(0, 0).is_some());
        assert!(grid.get(1, 0).is_none());
        assert_eq!(grid.missing_mask(), vec![false, true]);
    }

    #[test]
    fn smoothing_is_shift_equivariant_and_stays_in_the_value_hull() {
        let points: Vec<SurfacePoint> = (0..12)
            .map(|i| SurfacePoint {
                t: 5.0 + i as f64 * 2.0,
                m: 0.9 + 0.02 * (i % 4) as f64,
                value: (i as f64 * 0.7).sin(),
            })
            .collect();
        let t_axis = linspace(5.0, 27.0, 6);
        let m_axis = linspace(0.9, 0.96, 4);
        let grid = smooth_surface(&points, &t_axis, &m_axis, 2.0, 0.03).unwrap();

        let lo = points.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
        for v in grid.values.iter().flatten() {
            assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }

        let shifted: Vec<SurfacePoint> = points
            .iter()
            .map(|p| SurfacePoint {
                value: p.value + 10.0,
                ..*p
            })
            .collect();
        let grid2 = smooth_surface(&shifted, &t_axis, &m_axis, 2.0, 0.03).unwrap();
        for (a, b) in grid.values.iter().zip(&grid2.values) {
            assert_abs_diff_eq!(a.unwrap() + 10.0, b.unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn export_writes_one_row_per_cell_and_round_trips() {
        let grid = SurfaceGrid {
            t_axis: vec![7.0, 30.0],
            m_axis: vec![0.95, 1.05],
            values: vec![Some(0.1234567891234567), Some(2.5e-7), None, Some(-3.25)],
            bandwidth_t: 2.3,
            bandwidth_m: 0.01,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        export_grid(&grid, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5, "header plus one row per cell");
        assert_eq!(lines[0], "T,M,value");
        assert_eq!(lines[3], "30,0.95,", "missing cell leaves the value field empty");

        let back = import_grid(&path).unwrap();
        assert_eq!(grid, back);
    }

    #[test]
    fn import_rejects_a_mask_mismatch() {
        let grid = SurfaceGrid {
            t_axis: vec![1.0],
            m_axis: vec![1.0, 2.0],
            values: vec![Some(1.0), None],
            bandwidth_t: 1.0,
            bandwidth_m: 1.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        export_grid(&grid, &path).unwrap();
        // Corrupt the CSV: fill the masked cell.
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("1,2,\n", "1,2,9\n")).unwrap();
        assert!(matches!(
            import_grid(&path),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn bandwidth_default_is_a_range_fraction_with_a_degenerate_fallback() {
        assert_relative_eq!(default_bandwidth(23.0), 2.3, max_relative = 1e-15);
        assert_eq!(default_bandwidth(0.0), 1.0);
    }
}
