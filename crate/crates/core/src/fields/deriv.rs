//! Numerical Wirtinger derivatives on disk grids.
//!
//! Polar mode combines an exact spectral angle derivative with a
//! finite-difference radial stencil into
//! `d/dz = e^{-i theta} (d_r - (i/r) d_theta) / 2`; Cartesian mode uses
//! one-dimensional stencils along lattice rows and columns, one-sided where
//! the annulus mask cuts a row short.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::{DiskGrid, GridField, GridKind};
use super::numerics::{fornberg_weights, stencil_window};
use super::FieldError;

/// Default radial stencil order (five-point windows).
pub const DEFAULT_RADIAL_ORDER: usize = 4;

/// Forward FFT of every ring of every component; returns ring-major spectra.
pub(crate) fn ring_spectra(field: &GridField) -> Result<Vec<Vec<Complex64>>, FieldError> {
    let (n_r, n_theta) = field.grid.polar_dims().ok_or(FieldError::PolarOnly)?;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n_theta);
    let mut spectra = Vec::with_capacity(n_r * field.m);
    for i_r in 0..n_r {
        for c in 0..field.m {
            let mut buf: Vec<Complex64> = (0..n_theta)
                .map(|j| field.get(i_r * n_theta + j, c))
                .collect();
            fft.process(&mut buf);
            spectra.push(buf);
        }
    }
    Ok(spectra)
}

pub(crate) fn spectra_to_field(
    grid: std::sync::Arc<DiskGrid>,
    m: usize,
    spectra: &[Vec<Complex64>],
) -> GridField {
    let (n_r, n_theta) = grid.polar_dims().expect("polar grid");
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n_theta);
    let mut out = GridField::zeros(grid.clone(), m);
    let scale = 1.0 / n_theta as f64;
    for i_r in 0..n_r {
        for c in 0..m {
            let mut buf = spectra[i_r * m + c].clone();
            ifft.process(&mut buf);
            for (j, v) in buf.into_iter().enumerate() {
                out.set(i_r * n_theta + j, c, v * scale);
            }
        }
    }
    out
}

/// Signed angular wavenumber for FFT bin `q` of length `n`; the Nyquist bin
/// is treated as non-oscillating for differentiation.
#[inline]
pub(crate) fn signed_wavenumber(q: usize, n: usize) -> i64 {
    if q <= n / 2 - 1 {
        q as i64
    } else if q == n / 2 {
        0
    } else {
        q as i64 - n as i64
    }
}

/// Spectral angle derivative, per ring.
fn theta_derivative(field: &GridField) -> Result<GridField, FieldError> {
    let (_, n_theta) = field.grid.polar_dims().ok_or(FieldError::PolarOnly)?;
    let mut spectra = ring_spectra(field)?;
    for buf in &mut spectra {
        for (q, v) in buf.iter_mut().enumerate() {
            let m = signed_wavenumber(q, n_theta) as f64;
            *v *= Complex64::new(0.0, m);
        }
    }
    Ok(spectra_to_field(field.grid.clone(), field.m, &spectra))
}

/// Radial derivative along each ray with Fornberg stencils of the given
/// order on the actual node radii.
fn radial_derivative(field: &GridField, order: usize) -> Result<GridField, FieldError> {
    let (n_r, n_theta) = field.grid.polar_dims().ok_or(FieldError::PolarOnly)?;
    let radii = field.grid.radii();
    let len = (order + 1).min(n_r);
    // Same stencil set for every ray.
    let stencils: Vec<(usize, Vec<f64>)> = (0..n_r)
        .map(|i| {
            let start = stencil_window(i, len, n_r);
            let w = fornberg_weights(radii[i], &radii[start..start + len], 1);
            (start, w[1].clone())
        })
        .collect();
    let mut out = GridField::zeros(field.grid.clone(), field.m);
    for j in 0..n_theta {
        for c in 0..field.m {
            for i in 0..n_r {
                let (start, w) = &stencils[i];
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, &wt) in w.iter().enumerate() {
                    acc += field.get((start + t) * n_theta + j, c) * wt;
                }
                out.set(i * n_theta + j, c, acc);
            }
        }
    }
    Ok(out)
}

pub fn dz_grid(field: &GridField) -> Result<GridField, FieldError> {
    dz_grid_with(field, DEFAULT_RADIAL_ORDER)
}

pub fn dzbar_grid(field: &GridField) -> Result<GridField, FieldError> {
    dzbar_grid_with(field, DEFAULT_RADIAL_ORDER)
}

pub fn dz_grid_with(field: &GridField, radial_order: usize) -> Result<GridField, FieldError> {
    wirtinger(field, radial_order, false)
}

pub fn dzbar_grid_with(field: &GridField, radial_order: usize) -> Result<GridField, FieldError> {
    wirtinger(field, radial_order, true)
}

fn wirtinger(field: &GridField, radial_order: usize, bar: bool) -> Result<GridField, FieldError> {
    match &field.grid.kind {
        GridKind::Polar { n_r, n_theta, .. } => {
            if *n_r < 16 || *n_theta < 16 {
                return Err(FieldError::GridTooCoarse(format!(
                    "wirtinger derivatives need at least 16 nodes per direction, got {n_r}x{n_theta}"
                )));
            }
            let dr = radial_derivative(field, radial_order)?;
            let dth = theta_derivative(field)?;
            let (n_r, n_theta) = (*n_r, *n_theta);
            let radii = field.grid.radii();
            let mut out = GridField::zeros(field.grid.clone(), field.m);
            for i in 0..n_r {
                for j in 0..n_theta {
                    let idx = i * n_theta + j;
                    let theta = field.grid.theta(j);
                    let phase = if bar {
                        Complex64::from_polar(1.0, theta)
                    } else {
                        Complex64::from_polar(1.0, -theta)
                    };
                    let i_over_r = Complex64::new(0.0, 1.0 / radii[i]);
                    for c in 0..field.m {
                        let radial = dr.get(idx, c);
                        let angular = dth.get(idx, c);
                        let v = if bar {
                            (radial + i_over_r * angular) * phase * 0.5
                        } else {
                            (radial - i_over_r * angular) * phase * 0.5
                        };
                        out.set(idx, c, v);
                    }
                }
            }
            Ok(out)
        }
        GridKind::Cartesian { n, .. } => {
            if *n < 16 {
                return Err(FieldError::GridTooCoarse(format!(
                    "cartesian grid needs n >= 16, got {n}"
                )));
            }
            let dx = cartesian_derivative(field, radial_order, true)?;
            let dy = cartesian_derivative(field, radial_order, false)?;
            let half_i = Complex64::new(0.0, 0.5);
            let out = if bar {
                dx.zip(&dy, |a, b| a * 0.5 + half_i * b)
            } else {
                dx.zip(&dy, |a, b| a * 0.5 - half_i * b)
            };
            Ok(out)
        }
    }
}

/// d/dx (or d/dy) along masked lattice runs; stencil order degrades
/// gracefully on runs shorter than the requested window.
fn cartesian_derivative(
    field: &GridField,
    order: usize,
    along_x: bool,
) -> Result<GridField, FieldError> {
    let (n, row_runs, col_runs, index, step) = match &field.grid.kind {
        GridKind::Cartesian {
            n,
            row_runs,
            col_runs,
            index,
            step,
            ..
        } => (*n, row_runs, col_runs, index, *step),
        _ => return Err(FieldError::PolarOnly),
    };
    let runs = if along_x { row_runs } else { col_runs };
    let mut out = GridField::zeros(field.grid.clone(), field.m);
    // Uniform-step stencils; weights depend only on window length and
    // relative position, cache by (len, pos).
    let mut cache: std::collections::BTreeMap<(usize, usize), Vec<f64>> = Default::default();
    for (line, line_runs) in runs.iter().enumerate() {
        for &(_, lat_start, len_run) in line_runs {
            let win = (order + 1).min(len_run);
            if win < 2 {
                continue; // single-node run: leave derivative at zero
            }
            for t in 0..len_run {
                let start = stencil_window(t, win, len_run);
                let pos = t - start;
                let w = cache.entry((win, pos)).or_insert_with(|| {
                    let nodes: Vec<f64> = (0..win).map(|u| u as f64 * step).collect();
                    fornberg_weights(pos as f64 * step, &nodes, 1)[1].clone()
                });
                let node_at = |u: usize| -> usize {
                    let lat = lat_start + start + u;
                    if along_x {
                        index[line * n + lat]
                    } else {
                        index[lat * n + line]
                    }
                };
                let this = node_at(t - start);
                for c in 0..field.m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (u, &wt) in w.iter().enumerate() {
                        acc += field.get(node_at(u), c) * wt;
                    }
                    out.set(this, c, acc);
                }
            }
        }
    }
    Ok(out)
}

/// Discrete Laplacian on a polar grid: exact harmonics in the angle, radial
/// part with Fornberg stencils of the given order applied to
/// `u'' + u'/r - m^2 u / r^2` per angular mode.
pub fn laplacian(field: &GridField, radial_order: usize) -> Result<GridField, FieldError> {
    let (n_r, n_theta) = field.grid.polar_dims().ok_or(FieldError::PolarOnly)?;
    let radii = field.grid.radii();
    let spectra = ring_spectra(field)?;
    let len = (radial_order + 1).min(n_r);
    let stencils: Vec<(usize, Vec<f64>, Vec<f64>)> = (0..n_r)
        .map(|i| {
            let start = stencil_window(i, len, n_r);
            let w = fornberg_weights(radii[i], &radii[start..start + len], 2);
            (start, w[1].clone(), w[2].clone())
        })
        .collect();
    let mut out_spectra = vec![vec![Complex64::new(0.0, 0.0); n_theta]; n_r * field.m];
    for q in 0..n_theta {
        let m = signed_wavenumber(q, n_theta) as f64;
        for c in 0..field.m {
            for i in 0..n_r {
                let (start, w1, w2) = &stencils[i];
                let mut d1 = Complex64::new(0.0, 0.0);
                let mut d2 = Complex64::new(0.0, 0.0);
                for t in 0..w1.len() {
                    let v = spectra[(start + t) * field.m + c][q];
                    d1 += v * w1[t];
                    d2 += v * w2[t];
                }
                let r = radii[i];
                let u = spectra[i * field.m + c][q];
                out_spectra[i * field.m + c][q] = d2 + d1 / r - u * (m * m) / (r * r);
            }
        }
    }
    Ok(spectra_to_field(field.grid.clone(), field.m, &out_spectra))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::RadialSpacing;

    fn polar_grid(n: usize) -> std::sync::Arc<DiskGrid> {
        DiskGrid::polar(1.0, n, n, RadialSpacing::Uniform).unwrap()
    }

    #[test]
    fn dz_of_cubic_matches_analytic() {
        let grid = polar_grid(128);
        let f = GridField::scalar_from_fn(grid.clone(), |z| z * z * z).unwrap();
        let d = dz_grid(&f).unwrap();
        let mut worst = 0.0f64;
        for idx in 0..grid.node_count() {
            let z = grid.node_z(idx);
            let exact = 3.0 * z * z;
            let rel = (d.get(idx, 0) - exact).norm() / exact.norm().max(1e-30);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-8, "max rel error {worst:.3e}");
    }

    #[test]
    fn dz_of_constant_is_zero() {
        let grid = polar_grid(32);
        let f = GridField::scalar_from_fn(grid, |_| Complex64::new(2.5, -1.0)).unwrap();
        let d = dz_grid(&f).unwrap();
        assert!(d.max_abs() < 1e-13);
    }

    #[test]
    fn dzbar_of_zbar_squared() {
        let grid = polar_grid(128);
        let f = GridField::scalar_from_fn(grid.clone(), |z| z.conj() * z.conj()).unwrap();
        let d = dzbar_grid(&f).unwrap();
        let mut worst = 0.0f64;
        for idx in 0..grid.node_count() {
            let z = grid.node_z(idx);
            let exact = 2.0 * z.conj();
            worst = worst.max((d.get(idx, 0) - exact).norm() / exact.norm().max(1e-30));
        }
        assert!(worst < 1e-8, "max rel error {worst:.3e}");
    }

    #[test]
    fn mixed_derivatives_commute_on_smooth_samples() {
        let grid = polar_grid(96);
        let f = GridField::scalar_from_fn(grid.clone(), |z| {
            let (x, y) = (z.re, z.im);
            Complex64::new((2.0 * x).sin() * y, x * y * y)
        })
        .unwrap();
        let ab = dzbar_grid(&dz_grid(&f).unwrap()).unwrap();
        let ba = dz_grid(&dzbar_grid(&f).unwrap()).unwrap();
        // Compare away from the inner cutoff where 1/r amplifies noise.
        let gap = ab.sub(&ba).max_abs_annulus(0.2, 0.95);
        assert!(gap < 2e-5, "commutator {gap:.3e}");
    }

    #[test]
    fn coarse_grid_rejected() {
        let grid = DiskGrid::polar(1.0, 8, 8, RadialSpacing::Uniform).unwrap();
        let f = GridField::scalar_from_fn(grid, |z| z).unwrap();
        assert!(matches!(dz_grid(&f), Err(FieldError::GridTooCoarse(_))));
    }

    #[test]
    fn cartesian_dz_cubic_interior() {
        let grid = DiskGrid::cartesian(1.0, 64).unwrap();
        let f = GridField::scalar_from_fn(grid.clone(), |z| z * z * z).unwrap();
        let d = dz_grid(&f).unwrap();
        let mut worst = 0.0f64;
        for idx in 0..grid.node_count() {
            let z = grid.node_z(idx);
            if z.norm() > 0.6 || z.norm() < 0.15 {
                continue; // interior nodes with full stencils
            }
            let exact = 3.0 * z * z;
            worst = worst.max((d.get(idx, 0) - exact).norm());
        }
        assert!(worst < 1e-9, "max abs error {worst:.3e}");
    }

    #[test]
    fn laplacian_of_harmonic_vanishes() {
        let grid = polar_grid(64);
        // Re z^3 is harmonic.
        let f = GridField::scalar_from_fn(grid, |z| {
            Complex64::new((z * z * z).re, 0.0)
        })
        .unwrap();
        let lap = laplacian(&f, 4).unwrap();
        assert!(lap.max_abs() < 1e-9, "laplacian {:.3e}", lap.max_abs());
    }

    #[test]
    fn laplacian_of_r_squared() {
        let grid = polar_grid(64);
        let f = GridField::scalar_from_fn(grid, |z| Complex64::new(z.norm_sqr(), 0.0)).unwrap();
        let lap = laplacian(&f, 4).unwrap();
        for idx in 0..lap.grid.node_count() {
            assert!((lap.get(idx, 0) - Complex64::new(4.0, 0.0)).norm() < 1e-9);
        }
    }
}
