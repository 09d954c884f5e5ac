//! Uniform tensor grid on the periodic box [-lx/2, lx/2) x [0, 2pi).
//!
//! The x direction discretizes a line interval long enough that exponentially
//! decaying profiles are periodic to machine precision; the y direction is the
//! genuine 2pi-periodic circle, so the y wavenumbers are integers. Fourier
//! modes use the standard FFT index layout: p = 0, 1, ..., nx/2-1, -nx/2, ...,
//! -1 with xi_p = 2*pi*p/lx. The Nyquist index nx/2 carries the negative
//! frequency; odd-order x-derivatives zero it because its sign is not
//! representable on a real grid.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub lx: f64,
    pub ny: usize,
}

/// Construct a grid, validating the even-size and positive-length contracts.
pub fn make_grid(nx: usize, lx: f64, ny: usize) -> Result<Grid> {
    if nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0 {
        return Err(Error::GridSize { nx, ny });
    }
    if !(lx > 0.0) || !lx.is_finite() {
        return Err(Error::BoxLength(lx));
    }
    Ok(Grid { nx, lx, ny })
}

impl Grid {
    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.ny as f64
    }

    /// Node x_i = -lx/2 + i*dx.
    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.lx + self.dx() * i as f64
    }

    /// Node y_j = 2*pi*j/ny.
    pub fn y(&self, j: usize) -> f64 {
        self.dy() * j as f64
    }

    /// Area of the periodic box, lx * 2pi.
    pub fn area(&self) -> f64 {
        self.lx * 2.0 * std::f64::consts::PI
    }

    /// Signed x wavenumber for FFT index p (Nyquist mapped to -nx/2).
    pub fn xi(&self, p: usize) -> f64 {
        let signed = if p <= self.nx / 2 - 1 {
            p as isize
        } else {
            p as isize - self.nx as isize
        };
        2.0 * std::f64::consts::PI * signed as f64 / self.lx
    }

    /// Signed integer y wavenumber for FFT index q.
    pub fn ky(&self, q: usize) -> f64 {
        let signed = if q <= self.ny / 2 - 1 {
            q as isize
        } else {
            q as isize - self.ny as isize
        };
        signed as f64
    }

    pub fn is_nyquist_x(&self, p: usize) -> bool {
        p == self.nx / 2
    }

    pub fn is_nyquist_y(&self, q: usize) -> bool {
        q == self.ny / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_sizes() {
        assert!(make_grid(8, 10.0, 7).is_err(), "odd ny must be rejected");
        assert!(make_grid(7, 10.0, 8).is_err(), "odd nx must be rejected");
        assert!(make_grid(4, 10.0, 8).is_err(), "nx below 8 must be rejected");
        assert!(make_grid(8, -1.0, 8).is_err(), "negative lx must be rejected");
        assert!(make_grid(8, 10.0, 8).is_ok());
    }

    #[test]
    fn wavenumbers_follow_fft_layout() {
        let g = make_grid(8, 2.0 * std::f64::consts::PI, 8).unwrap();
        // lx = 2pi makes xi_p = p exactly.
        let expect = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (p, e) in expect.iter().enumerate() {
            assert!(
                (g.xi(p) - e).abs() < 1e-15,
                "xi({p}) = {} expected {e}",
                g.xi(p)
            );
            assert!((g.ky(p) - e).abs() < 1e-15);
        }
        assert!(g.is_nyquist_x(4));
    }

    #[test]
    fn nodes_span_the_box() {
        let g = make_grid(16, 80.0, 8).unwrap();
        assert_eq!(g.x(0), -40.0);
        assert!((g.x(8) - 0.0).abs() < 1e-14, "center node at x=0");
        assert!((g.y(0) - 0.0).abs() < 1e-15);
        let last = g.y(7);
        assert!(last < 2.0 * std::f64::consts::PI, "right endpoint excluded");
    }
}
