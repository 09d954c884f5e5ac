//! Thin wrappers around rustfft for the row-major real field layout.
//!
//! Fields are stored as `data[iy * nx + ix]`. The 2-D transform factors into
//! nx-point FFTs along each row followed by ny-point FFTs down each column.
//! Coefficient normalization is `1/(nx*ny)` on the forward transform, so
//! `coeffs[0]` is the plain average of the field and Parseval reads
//! `mean(u^2) = sum |c_pq|^2`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

struct PlannerCache {
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
    planner: FftPlanner<f64>,
}

fn cache() -> &'static Mutex<PlannerCache> {
    static CACHE: OnceLock<Mutex<PlannerCache>> = OnceLock::new();
    CACHE.get_or_init(|| {
        Mutex::new(PlannerCache {
            forward: HashMap::new(),
            inverse: HashMap::new(),
            planner: FftPlanner::new(),
        })
    })
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut c = cache().lock().expect("fft planner cache poisoned");
    let c = &mut *c;
    let map = if inverse { &mut c.inverse } else { &mut c.forward };
    map.entry(n)
        .or_insert_with(|| {
            if inverse {
                c.planner.plan_fft_inverse(n)
            } else {
                c.planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place unnormalized forward FFT of each length-`nx` row of `buf`.
fn fft_rows(buf: &mut [Complex64], nx: usize, inverse: bool) {
    let fft = plan(nx, inverse);
    for row in buf.chunks_exact_mut(nx) {
        fft.process(row);
    }
}

/// In-place unnormalized forward FFT of each length-`ny` column of `buf`.
fn fft_cols(buf: &mut [Complex64], nx: usize, ny: usize, inverse: bool) {
    let fft = plan(ny, inverse);
    let mut col = vec![Complex64::default(); ny];
    for ix in 0..nx {
        for iy in 0..ny {
            col[iy] = buf[iy * nx + ix];
        }
        fft.process(&mut col);
        for iy in 0..ny {
            buf[iy * nx + ix] = col[iy];
        }
    }
}

/// Forward 2-D transform of a real field; coefficients normalized by 1/(nx*ny).
pub fn forward(data: &[f64], nx: usize, ny: usize) -> Vec<Complex64> {
    debug_assert_eq!(data.len(), nx * ny);
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_rows(&mut buf, nx, false);
    if ny > 1 {
        fft_cols(&mut buf, nx, ny, false);
    }
    let norm = 1.0 / (nx * ny) as f64;
    for c in &mut buf {
        *c *= norm;
    }
    buf
}

/// Inverse 2-D transform back to a real field (imaginary parts discarded).
pub fn inverse(coeffs: &[Complex64], nx: usize, ny: usize) -> Vec<f64> {
    debug_assert_eq!(coeffs.len(), nx * ny);
    let mut buf = coeffs.to_vec();
    if ny > 1 {
        fft_cols(&mut buf, nx, ny, true);
    }
    fft_rows(&mut buf, nx, true);
    buf.into_iter().map(|c| c.re).collect()
}

/// Forward transform of a 1-D real profile, normalized by 1/n.
pub fn forward_1d(data: &[f64]) -> Vec<Complex64> {
    let n = data.len();
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n, false).process(&mut buf);
    let norm = 1.0 / n as f64;
    for c in &mut buf {
        *c *= norm;
    }
    buf
}

/// Inverse transform of 1-D coefficients back to a real profile.
pub fn inverse_1d(coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    plan(buf.len(), true).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}
