//! Real scalar fields on the periodic box and 1-D profiles on its x axis.
//!
//! A `Field` stores samples row-major (`values[iy * nx + ix]`). Spectral
//! coefficients are normalized so `c[0]` is the field average and Parseval
//! reads `integrate(u^2) = area * sum |c_pq|^2`.
//!
//! Two conventions matter everywhere downstream:
//!
//! * **Zero-mode policy.** The inverse x-derivative and the weighted norm
//!   below are only defined on fields whose x-mean vanishes on every y-line
//!   (coefficients `c(0,q) = 0`). Operations that need this reject inputs
//!   whose x-mean exceeds `1e-10` of the field scale and forcibly zero the
//!   residual coefficients below that tolerance.
//! * **Weighted norm.** `z1_norm` is the discrete version of
//!   `||(1 + |xi| + |k/xi|) u_hat||_{L^2}`: per-mode weight
//!   `w = 1 + |xi_p| + |k_q / xi_p|`, with the `(0,0)` mode assigned weight 1.
//!
//! Odd-order derivatives zero the Nyquist mode (its sign is ambiguous on a
//! real grid), so differentiation stays a real, antisymmetric operation.

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read as IoRead, Write as IoWrite};

/// Relative tolerance below which stray x-mean content is forcibly zeroed,
/// and above which mean-sensitive operations reject their input.
pub const MEAN_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile1D {
    pub lx: f64,
    pub values: Vec<f64>,
}

/// i^order, the phase factor of an order-th spectral derivative.
fn i_pow(order: u32) -> Complex64 {
    match order % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl Field {
    pub fn zeros(grid: Grid) -> Field {
        Field {
            grid,
            values: vec![0.0; grid.nx * grid.ny],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Field {
        let mut values = Vec::with_capacity(grid.nx * grid.ny);
        for iy in 0..grid.ny {
            let y = grid.y(iy);
            for ix in 0..grid.nx {
                values.push(f(grid.x(ix), y));
            }
        }
        Field { grid, values }
    }

    /// Broadcast an x profile across every y-line.
    pub fn from_profile(grid: Grid, p: &Profile1D) -> Field {
        assert_eq!(
            p.values.len(),
            grid.nx,
            "profile length {} does not match grid nx {}",
            p.values.len(),
            grid.nx
        );
        let mut values = Vec::with_capacity(grid.nx * grid.ny);
        for _ in 0..grid.ny {
            values.extend_from_slice(&p.values);
        }
        Field { grid, values }
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Normalized spectral coefficients, `c[q * nx + p]`.
    pub fn spectrum(&self) -> Vec<Complex64> {
        fft::forward(&self.values, self.grid.nx, self.grid.ny)
    }

    /// Real field from normalized coefficients (imaginary residue discarded).
    pub fn from_spectrum(grid: Grid, coeffs: &[Complex64]) -> Field {
        Field {
            grid,
            values: fft::inverse(coeffs, grid.nx, grid.ny),
        }
    }

    fn same_grid(&self, other: &Field) {
        assert_eq!(
            self.grid, other.grid,
            "fields live on different grids: {:?} vs {:?}",
            self.grid, other.grid
        );
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Periodic trapezoid quadrature: lx * 2pi * mean.
    pub fn integrate(&self) -> f64 {
        self.mean() * self.grid.area()
    }

    /// integrate(self * other) without allocating the product.
    pub fn inner(&self, other: &Field) -> f64 {
        self.same_grid(other);
        let s: f64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b)
            .sum();
        s / self.values.len() as f64 * self.grid.area()
    }

    pub fn l2_norm_squared(&self) -> f64 {
        self.inner(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// self += c * other.
    pub fn add_scaled(&mut self, c: f64, other: &Field) {
        self.same_grid(other);
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += c * b;
        }
    }

    pub fn mul_pointwise(&self, other: &Field) -> Field {
        self.same_grid(other);
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// x-average on each y-line; length ny.
    pub fn x_mean_profile(&self) -> Vec<f64> {
        let nx = self.grid.nx;
        (0..self.grid.ny)
            .map(|iy| self.values[iy * nx..(iy + 1) * nx].iter().sum::<f64>() / nx as f64)
            .collect()
    }

    /// Subtract the x-average from each y-line, making every c(0,q) vanish.
    pub fn project_zero_x_mean(&self) -> Field {
        let nx = self.grid.nx;
        let means = self.x_mean_profile();
        let mut values = self.values.clone();
        for iy in 0..self.grid.ny {
            let m = means[iy];
            for v in &mut values[iy * nx..(iy + 1) * nx] {
                *v -= m;
            }
        }
        Field {
            grid: self.grid,
            values,
        }
    }

    /// (worst |x-mean| over y-lines, field rms scale).
    fn mean_violation(&self) -> (f64, f64) {
        let worst = self
            .x_mean_profile()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let rms = (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64)
            .sqrt();
        (worst, rms)
    }

    /// Spectral multiplication by (i xi)^order; Nyquist zeroed for odd orders.
    pub fn deriv_x(&self, order: u32) -> Field {
        let mut c = self.spectrum();
        let g = self.grid;
        let phase = i_pow(order);
        for q in 0..g.ny {
            for p in 0..g.nx {
                let idx = q * g.nx + p;
                if order % 2 == 1 && g.is_nyquist_x(p) {
                    c[idx] = Complex64::default();
                } else {
                    c[idx] *= phase * g.xi(p).powi(order as i32);
                }
            }
        }
        Field::from_spectrum(g, &c)
    }

    /// Spectral multiplication by (i k)^order; y-Nyquist zeroed for odd orders.
    pub fn deriv_y(&self, order: u32) -> Field {
        let mut c = self.spectrum();
        let g = self.grid;
        let phase = i_pow(order);
        for q in 0..g.ny {
            let factor = if order % 2 == 1 && g.is_nyquist_y(q) {
                Complex64::default()
            } else {
                phase * g.ky(q).powi(order as i32)
            };
            for p in 0..g.nx {
                c[q * g.nx + p] *= factor;
            }
        }
        Field::from_spectrum(g, &c)
    }

    /// Spectral division by (i xi)^order on nonzero x-modes.
    ///
    /// Rejects inputs whose x-mean exceeds [`MEAN_ZERO_TOL`] of the field rms;
    /// residual zero-mode content below tolerance is forcibly zeroed.
    pub fn antideriv_x(&self, order: u32) -> Result<Field> {
        let (worst, scale) = self.mean_violation();
        if worst > MEAN_ZERO_TOL * scale {
            return Err(Error::MeanZeroViolation {
                max_coeff: worst,
                scale,
            });
        }
        let mut c = self.spectrum();
        let g = self.grid;
        let inv_phase = i_pow(order).conj();
        for q in 0..g.ny {
            for p in 0..g.nx {
                let idx = q * g.nx + p;
                if p == 0 || (order % 2 == 1 && g.is_nyquist_x(p)) {
                    c[idx] = Complex64::default();
                } else {
                    c[idx] *= inv_phase * g.xi(p).powi(-(order as i32));
                }
            }
        }
        Ok(Field::from_spectrum(g, &c))
    }

    /// u(x - x0, y - y0) via spectral phase shifts (exact rotation when the
    /// offsets are grid multiples).
    pub fn translate(&self, x0: f64, y0: f64) -> Field {
        let mut c = self.spectrum();
        let g = self.grid;
        for q in 0..g.ny {
            let py = Complex64::from_polar(1.0, -g.ky(q) * y0);
            for p in 0..g.nx {
                let px = Complex64::from_polar(1.0, -g.xi(p) * x0);
                c[q * g.nx + p] *= px * py;
            }
        }
        Field::from_spectrum(g, &c)
    }

    fn z1_from_spectrum(&self, strict: bool) -> Result<f64> {
        let c = self.spectrum();
        let g = self.grid;
        let scale = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut sum = 0.0;
        for q in 0..g.ny {
            for p in 0..g.nx {
                let m = c[q * g.nx + p].norm_sqr();
                let w = if p == 0 {
                    if strict && q != 0 && m.sqrt() > MEAN_ZERO_TOL * scale {
                        return Err(Error::MeanZeroViolation {
                            max_coeff: m.sqrt(),
                            scale,
                        });
                    }
                    1.0
                } else {
                    let xi = g.xi(p).abs();
                    1.0 + xi + g.ky(q).abs() / xi
                };
                sum += w * w * m;
            }
        }
        Ok((sum * g.area()).sqrt())
    }

    /// Discrete weighted norm sqrt(area * sum w^2 |c_pq|^2) with
    /// w = 1 + |xi| + |k/xi|. Errors if any c(0, q != 0) exceeds tolerance,
    /// since the weight is undefined there in the continuum.
    pub fn z1_norm(&self) -> Result<f64> {
        self.z1_from_spectrum(true)
    }

    /// Same weighted sum but with weight 1 assigned to the whole xi = 0
    /// column instead of rejecting it. Used to compare mass-carrying
    /// profiles whose difference keeps a constant x-mean.
    pub fn z1_norm_extended(&self) -> f64 {
        self.z1_from_spectrum(false)
            .expect("extended norm never rejects")
    }

    /// Spectral zero-pad (or truncate) onto an (nx2, ny2) grid of the same
    /// physical box. Exact for band-limited fields without Nyquist content.
    pub fn resample(&self, nx2: usize, ny2: usize) -> Field {
        let g = self.grid;
        let c = self.spectrum();
        let g2 = Grid {
            nx: nx2,
            lx: g.lx,
            ny: ny2,
        };
        let mut c2 = vec![Complex64::default(); nx2 * ny2];
        let signed = |idx: usize, n: usize| -> isize {
            if idx <= n / 2 - 1 {
                idx as isize
            } else {
                idx as isize - n as isize
            }
        };
        for q in 0..g.ny {
            let sq = signed(q, g.ny);
            if sq < -(ny2 as isize) / 2 || sq >= ny2 as isize / 2 {
                continue;
            }
            let q2 = if sq >= 0 { sq as usize } else { (sq + ny2 as isize) as usize };
            for p in 0..g.nx {
                let sp = signed(p, g.nx);
                if sp < -(nx2 as isize) / 2 || sp >= nx2 as isize / 2 {
                    continue;
                }
                let p2 = if sp >= 0 { sp as usize } else { (sp + nx2 as isize) as usize };
                c2[q2 * nx2 + p2] = c[q * g.nx + p];
            }
        }
        Field::from_spectrum(g2, &c2)
    }

    /// CSV dump, header "x,y,value", y-outer row-major order.
    pub fn dump_csv<W: IoWrite>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "x,y,value")?;
        for iy in 0..self.grid.ny {
            let y = self.grid.y(iy);
            for ix in 0..self.grid.nx {
                writeln!(w, "{},{},{}", self.grid.x(ix), y, self.at(ix, iy))?;
            }
        }
        Ok(())
    }

    /// Binary dump: little-endian u64 nx, f64 lx, u64 ny, then nx*ny f64
    /// values in the in-memory row-major order.
    pub fn dump_binary<W: IoWrite>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.grid.nx as u64).to_le_bytes())?;
        w.write_all(&self.grid.lx.to_le_bytes())?;
        w.write_all(&(self.grid.ny as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load_binary<R: IoRead>(r: &mut R) -> Result<Field> {
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u64buf)
            .map_err(|e| Error::MalformedDump(format!("missing nx header: {e}")))?;
        let nx = u64::from_le_bytes(u64buf) as usize;
        r.read_exact(&mut u64buf)
            .map_err(|e| Error::MalformedDump(format!("missing lx header: {e}")))?;
        let lx = f64::from_le_bytes(u64buf);
        r.read_exact(&mut u64buf)
            .map_err(|e| Error::MalformedDump(format!("missing ny header: {e}")))?;
        let ny = u64::from_le_bytes(u64buf) as usize;
        if nx == 0 || ny == 0 || nx.saturating_mul(ny) > 1 << 28 {
            return Err(Error::MalformedDump(format!(
                "implausible sizes nx={nx}, ny={ny}"
            )));
        }
        if !(lx > 0.0) || !lx.is_finite() {
            return Err(Error::MalformedDump(format!("invalid box length {lx}")));
        }
        let grid = crate::grid::make_grid(nx, lx, ny)
            .map_err(|e| Error::MalformedDump(e.to_string()))?;
        let mut values = vec![0.0f64; nx * ny];
        for v in &mut values {
            r.read_exact(&mut u64buf)
                .map_err(|e| Error::MalformedDump(format!("truncated value block: {e}")))?;
            *v = f64::from_le_bytes(u64buf);
        }
        Ok(Field { grid, values })
    }
}

impl std::ops::Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.same_grid(rhs);
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(rhs.values.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.same_grid(rhs);
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(rhs.values.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Profile1D {
    pub fn zeros(nx: usize, lx: f64) -> Profile1D {
        Profile1D {
            lx,
            values: vec![0.0; nx],
        }
    }

    pub fn from_fn(nx: usize, lx: f64, f: impl Fn(f64) -> f64) -> Profile1D {
        let dx = lx / nx as f64;
        Profile1D {
            lx,
            values: (0..nx).map(|i| f(-0.5 * lx + dx * i as f64)).collect(),
        }
    }

    pub fn nx(&self) -> usize {
        self.values.len()
    }

    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.lx + self.lx / self.nx() as f64 * i as f64
    }

    fn xi(&self, p: usize) -> f64 {
        let n = self.nx();
        let signed = if p <= n / 2 - 1 {
            p as isize
        } else {
            p as isize - n as isize
        };
        2.0 * std::f64::consts::PI * signed as f64 / self.lx
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.nx() as f64
    }

    /// Periodic trapezoid quadrature over the x interval: lx * mean.
    pub fn integrate_x(&self) -> f64 {
        self.mean() * self.lx
    }

    pub fn inner(&self, other: &Profile1D) -> f64 {
        assert_eq!(
            self.nx(),
            other.nx(),
            "profiles have different lengths: {} vs {}",
            self.nx(),
            other.nx()
        );
        let s: f64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b)
            .sum();
        s / self.nx() as f64 * self.lx
    }

    pub fn l2_norm_squared(&self) -> f64 {
        self.inner(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Profile1D {
        Profile1D {
            lx: self.lx,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn deriv(&self, order: u32) -> Profile1D {
        let n = self.nx();
        let mut c = fft::forward_1d(&self.values);
        let phase = i_pow(order);
        for (p, z) in c.iter_mut().enumerate() {
            if order % 2 == 1 && p == n / 2 {
                *z = Complex64::default();
            } else {
                *z *= phase * self.xi(p).powi(order as i32);
            }
        }
        Profile1D {
            lx: self.lx,
            values: fft::inverse_1d(&c),
        }
    }

    pub fn antideriv(&self, order: u32) -> Result<Profile1D> {
        let mean = self.mean().abs();
        let rms = (self.values.iter().map(|v| v * v).sum::<f64>() / self.nx() as f64).sqrt();
        if mean > MEAN_ZERO_TOL * rms {
            return Err(Error::MeanZeroViolation {
                max_coeff: mean,
                scale: rms,
            });
        }
        let n = self.nx();
        let mut c = fft::forward_1d(&self.values);
        let inv_phase = i_pow(order).conj();
        for (p, z) in c.iter_mut().enumerate() {
            if p == 0 || (order % 2 == 1 && p == n / 2) {
                *z = Complex64::default();
            } else {
                *z *= inv_phase * self.xi(p).powi(-(order as i32));
            }
        }
        Ok(Profile1D {
            lx: self.lx,
            values: fft::inverse_1d(&c),
        })
    }
}

impl std::ops::Add for &Profile1D {
    type Output = Profile1D;
    fn add(self, rhs: &Profile1D) -> Profile1D {
        Profile1D {
            lx: self.lx,
            values: self
                .values
                .iter()
                .zip(rhs.values.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Sub for &Profile1D {
    type Output = Profile1D;
    fn sub(self, rhs: &Profile1D) -> Profile1D {
        Profile1D {
            lx: self.lx,
            values: self
                .values
                .iter()
                .zip(rhs.values.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn pseudo_random_field(grid: Grid, seed: u64) -> Field {
        let mut s = seed;
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut f = Field::zeros(grid);
        for v in &mut f.values {
            *v = next();
        }
        f
    }

    #[test]
    fn deriv_x_differentiates_single_mode_exactly() {
        let g = make_grid(64, 10.0, 8).unwrap();
        let k = 2.0 * PI / g.lx;
        let f = Field::from_fn(g, |x, _| (k * x).sin());
        let d = f.deriv_x(1);
        let expect = Field::from_fn(g, |x, _| k * (k * x).cos());
        let err = (&d - &expect).max_abs();
        assert!(err < 1e-12, "single-mode x derivative error {err}");
    }

    #[test]
    fn deriv_of_constant_vanishes() {
        let g = make_grid(32, 7.0, 8).unwrap();
        let f = Field::from_fn(g, |_, _| 3.25);
        for order in 1..4 {
            assert!(
                f.deriv_x(order).max_abs() < 1e-12,
                "constant should have zero order-{order} derivative"
            );
        }
    }

    #[test]
    fn sech_squared_second_derivative_matches_closed_form() {
        let b = 3.0f64.powf(-0.25);
        let p = Profile1D::from_fn(1024, 80.0, |x| (b * x).cosh().powi(-2));
        let d2 = p.deriv(2);
        let expect = Profile1D::from_fn(1024, 80.0, |x| {
            let s2 = (b * x).cosh().powi(-2);
            b * b * (4.0 * s2 - 6.0 * s2 * s2)
        });
        let err = (&d2 - &expect).max_abs();
        assert!(err < 1e-8, "sech^2 second derivative error {err}");
    }

    #[test]
    fn antideriv_inverts_deriv_on_mean_zero_fields() {
        let g = make_grid(64, 12.0, 16).unwrap();
        let f = pseudo_random_field(g, 42).project_zero_x_mean();
        let round = f.deriv_x(1).antideriv_x(1).unwrap();
        // deriv_x zeroes the Nyquist column, so compare against the
        // Nyquist-free part of f.
        let mut c = f.spectrum();
        for q in 0..g.ny {
            c[q * g.nx + g.nx / 2] = num_complex::Complex64::default();
        }
        let f_clean = Field::from_spectrum(g, &c);
        let err = (&round - &f_clean).max_abs();
        assert!(err < 1e-12, "deriv then antideriv round trip error {err}");
    }

    #[test]
    fn antideriv_integrates_single_mode() {
        let g = make_grid(32, 5.0, 8).unwrap();
        let k = 2.0 * PI / g.lx;
        let f = Field::from_fn(g, |x, _| (k * x).cos());
        let a = f.antideriv_x(1).unwrap();
        let expect = Field::from_fn(g, |x, _| (k * x).sin() / k);
        let err = (&a - &expect).max_abs();
        assert!(err < 1e-12, "cos antiderivative error {err}");
    }

    #[test]
    fn antideriv_rejects_fields_with_mean() {
        let g = make_grid(32, 5.0, 8).unwrap();
        let f = Field::from_fn(g, |x, _| 0.1 + (2.0 * PI / g.lx * x).cos());
        let err = f.antideriv_x(1);
        assert!(
            matches!(err, Err(Error::MeanZeroViolation { .. })),
            "x-mean 0.1 must be rejected, got {err:?}"
        );
    }

    #[test]
    fn z1_norm_matches_hand_parseval_for_cos_x() {
        let g = make_grid(32, 2.0 * PI, 8).unwrap();
        let f = Field::from_fn(g, |x, _| x.cos());
        let n = f.z1_norm().unwrap();
        // Modes (±1, 0) carry |c|^2 = 1/4 and weight 2 each:
        // norm^2 = area * 2 * 4 * 1/4 = 8 pi^2.
        let expect = (8.0 * PI * PI).sqrt();
        assert!(
            (n - expect).abs() < 1e-12 * expect,
            "z1 norm of cos x: {n} expected {expect}"
        );
    }

    #[test]
    fn z1_norm_matches_hand_parseval_for_mixed_mode() {
        let g = make_grid(32, 2.0 * PI, 8).unwrap();
        let f = Field::from_fn(g, |x, y| y.sin() * x.cos());
        let n = f.z1_norm().unwrap();
        // Four modes (±1, ±1), weight 1+1+1 = 3: norm^2 = 9 ||f||^2 = 9 pi^2.
        let expect = 3.0 * PI;
        assert!(
            (n - expect).abs() < 1e-12 * expect,
            "z1 norm of sin y cos x: {n} expected {expect}"
        );
        let l2 = f.l2_norm_squared().sqrt();
        assert!(n >= l2, "weighted norm must dominate the plain norm");
    }

    #[test]
    fn z1_norm_rejects_y_dependent_mean_but_extended_accepts() {
        let g = make_grid(32, 2.0 * PI, 8).unwrap();
        let f = Field::from_fn(g, |_, y| y.cos());
        assert!(
            f.z1_norm().is_err(),
            "c(0, 1) content must fail the strict norm"
        );
        let ext = f.z1_norm_extended();
        // Weight 1 on the xi = 0 column: norm^2 = area * 1/2.
        let expect = (0.5 * g.area()).sqrt();
        assert!(
            (ext - expect).abs() < 1e-12 * expect,
            "extended norm {ext} expected {expect}"
        );
    }

    #[test]
    fn integrate_reproduces_area_and_decaying_profiles() {
        let g = make_grid(16, 80.0, 8).unwrap();
        let one = Field::from_fn(g, |_, _| 1.0);
        assert!(
            (one.integrate() - 160.0 * PI).abs() < 1e-9,
            "area quadrature mismatch: {}",
            one.integrate()
        );
        let b = 3.0f64.powf(-0.25);
        let p = Profile1D::from_fn(1024, 80.0, |x| (b * x).cosh().powi(-2));
        let expect = 2.0 * 3.0f64.powf(0.25);
        assert!(
            (p.integrate_x() - expect).abs() < 1e-10,
            "sech^2 integral {} expected {expect}",
            p.integrate_x()
        );
        let odd = Profile1D::from_fn(256, 40.0, |x| x * (-x * x).exp());
        assert!(
            odd.integrate_x().abs() < 1e-12,
            "odd profile must integrate to zero"
        );
    }

    #[test]
    fn parseval_links_quadrature_and_spectrum() {
        let g = make_grid(64, 23.0, 16).unwrap();
        let f = pseudo_random_field(g, 7);
        let phys = f.l2_norm_squared();
        let spec: f64 = f.spectrum().iter().map(|z| z.norm_sqr()).sum::<f64>() * g.area();
        assert!(
            (phys - spec).abs() < 1e-12 * phys,
            "Parseval mismatch: {phys} vs {spec}"
        );
    }

    #[test]
    fn translate_by_grid_step_is_exact_rotation() {
        let g = make_grid(32, 11.0, 8).unwrap();
        let f = pseudo_random_field(g, 3);
        let t = f.translate(g.dx(), g.dy());
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let src = f.at((ix + g.nx - 1) % g.nx, (iy + g.ny - 1) % g.ny);
                let got = t.at(ix, iy);
                assert!(
                    (src - got).abs() < 1e-12,
                    "grid-step translation should rotate indices: {src} vs {got}"
                );
            }
        }
    }

    #[test]
    fn resample_preserves_band_limited_content_and_cubic_means() {
        let g = make_grid(16, 2.0 * PI, 8).unwrap();
        let f = Field::from_fn(g, |x, _| 1.0 + x.cos());
        let fine = f.resample(24, 12);
        let expect = Field::from_fn(fine.grid, |x, _| 1.0 + x.cos());
        assert!(
            (&fine - &expect).max_abs() < 1e-12,
            "upsampling must reproduce the band-limited field"
        );
        // mean((1 + cos x)^3) = 1 + 3/2 = 2.5, exact on the padded grid.
        let cubed: f64 =
            fine.values.iter().map(|v| v * v * v).sum::<f64>() / fine.values.len() as f64;
        assert!(
            (cubed - 2.5).abs() < 1e-12,
            "cubic mean on padded grid: {cubed}"
        );
        let back = fine.resample(16, 8);
        assert!(
            (&back - &f).max_abs() < 1e-12,
            "round-trip resample must restore the field"
        );
    }

    #[test]
    fn binary_dump_round_trips_exactly() {
        let g = make_grid(16, 7.5, 8).unwrap();
        let f = pseudo_random_field(g, 99);
        let mut buf = Vec::new();
        f.dump_binary(&mut buf).unwrap();
        assert_eq!(
            buf.len(),
            24 + 8 * g.nx * g.ny,
            "dump must be header plus nx*ny values"
        );
        let back = Field::load_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, f, "binary round trip must be bit-exact");
    }

    #[test]
    fn csv_dump_has_header_and_y_outer_order() {
        let g = make_grid(8, 8.0, 8).unwrap();
        let f = Field::from_fn(g, |x, y| x + 100.0 * y);
        let mut buf = Vec::new();
        f.dump_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,value"), "missing CSV header");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "-4", "first row should start at x = -lx/2");
        assert_eq!(first[1], "0", "first row should start at y = 0");
        // Second line advances x (inner loop), not y.
        let second: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(second[1], "0", "x must vary fastest (y-outer order)");
    }

    #[test]
    fn truncated_binary_dump_is_rejected() {
        let g = make_grid(8, 8.0, 8).unwrap();
        let f = Field::zeros(g);
        let mut buf = Vec::new();
        f.dump_binary(&mut buf).unwrap();
        buf.truncate(buf.len() - 4);
        let err = Field::load_binary(&mut buf.as_slice());
        assert!(
            matches!(err, Err(Error::MalformedDump(_))),
            "truncated dump must be rejected, got {err:?}"
        );
    }
}
