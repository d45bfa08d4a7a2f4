//! Surface presentation: winsorize an outlier-laden set of implied
//! values, smooth onto a regular grid with a Gaussian kernel, export the
//! grid with its JSON sidecar, and read it back.

use mmnoise::surfaces::{
    default_bandwidth, export_grid, import_grid, linspace, smooth_surface, winsorize, SurfacePoint,
};

fn main() -> mmnoise::Result<()> {
    // Implied values over (expiry, moneyness) with one wild outlier.
    let mut raw = Vec::new();
    let mut values = Vec::new();
    for (i, &t) in [7.0f64, 14.0, 21.0, 42.0].iter().enumerate() {
        for (j, &m) in [0.96f64, 0.98, 1.0, 1.02, 1.04].iter().enumerate() {
            let smile = 0.004 + 0.002 * (m - 1.0).powi(2) * 100.0 + 0.0001 * (i as f64);
            let v = if i == 2 && j == 2 { 0.5 } else { smile };
            raw.push((t, m));
            values.push(v);
        }
    }

    let clipped = winsorize(&values, 0.95)?;
    let outliers = values
        .iter()
        .zip(&clipped)
        .filter(|(a, b)| a != b)
        .count();
    println!("winsorized {outliers} of {} values", values.len());

    let points: Vec<SurfacePoint> = raw
        .iter()
        .zip(&clipped)
        .map(|(&(t, m), &value)| SurfacePoint { t, m, value })
        .collect();
    let t_axis = linspace(7.0, 42.0, 8);
    let m_axis = linspace(0.96, 1.04, 9);
    let grid = smooth_surface(
        &points,
        &t_axis,
        &m_axis,
        default_bandwidth(42.0 - 7.0),
        default_bandwidth(1.04 - 0.96),
    )?;

    let dir = std::env::temp_dir().join("mmnoise_surface_example");
    std::fs::create_dir_all(&dir).map_err(|e| mmnoise::Error::io(&dir, e))?;
    let csv = dir.join("grid.csv");
    export_grid(&grid, &csv)?;
    let back = import_grid(&csv)?;
    println!(
        "exported {} x {} grid to {}, round trip equal: {}",
        grid.t_axis.len(),
        grid.m_axis.len(),
        csv.display(),
        back == grid
    );

    println!("\nsmoothed values along moneyness at expiry {}", grid.t_axis[0]);
    for (j, m) in grid.m_axis.iter().enumerate() {
        println!("  m {m:.3}  value {:.6}", grid.get(0, j).unwrap());
    }
    Ok(())
}
