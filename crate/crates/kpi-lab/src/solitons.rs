//! Closed-form soliton profiles and their parameter maps.
//!
//! The line soliton of speed c > 0 is
//!
//! ```text
//! Q_c(x) = 3c sech^2(sqrt(c) x / 2),
//! ```
//!
//! a y-independent stationary state for every c. At the critical speed
//! `c0 = 4/sqrt(3)` a genuinely two-dimensional branch appears: for
//! amplitude 0 <= a < 1 the modulated soliton
//!
//! ```text
//! Z(a)(x, y) = 12 (1-a^2) (1 - beta f g) / (sqrt(3) (f - beta g)^2),
//! f = cosh(sqrt(1-a^2) x / 3^{1/4}),  g = cos y,  beta = a sqrt(2-a^2),
//! ```
//!
//! travels at speed `c(a) = (4 - 2a^2 + a^4) / (sqrt(3) (1-a^2))`, with
//! `Z(0) = Q_{c0}` and `c(0) = c0`, `c''(0) = 4/sqrt(3)`. The full family is
//! generated from Z(a) by scaling and rotation,
//!
//! ```text
//! Z(a_vec, gamma)(x, y) = gamma Z(|a_vec|)(sqrt(gamma) x, y + theta(a_vec)),
//! ```
//!
//! with `(cos theta, sin theta) = a_vec / |a_vec|`; scaling sends mass to
//! `gamma^{3/2} mass`.
//!
//! The tangent direction of the branch at a = 0 is `v_*(x) cos y` with
//!
//! ```text
//! dx^{-1} v_*(x) = 12 sqrt(2) sinh(x/3^{1/4}) / (3^{1/4} cosh^2(x/3^{1/4})),
//! ```
//!
//! and the x-line zero modes of the linearization at Q_{c0} are generated by
//!
//! ```text
//! g_mu(x) = e^{3^{-1/4} mu x} (mu^3 + 2 mu - 3 mu^2 tanh(3^{-1/4} x))
//! ```
//!
//! at mu in {1, +-sqrt(3)} plus a degenerate mu -> 1 limit. g_1 = 3 sech
//! decays; the others grow exponentially, so their derivatives are computed
//! exactly through [`ExpTanhPoly`] rather than spectrally.

use crate::error::{Error, Result};
use crate::field::{Field, Profile1D};
use crate::grid::Grid;
use serde::{Deserialize, Serialize};

/// Critical line-soliton speed c0 = 4/sqrt(3) where the modulated branch
/// bifurcates.
pub fn critical_speed() -> f64 {
    4.0 / 3.0f64.sqrt()
}

/// Inverse length scale 3^{-1/4} of the critical soliton.
pub fn inv_scale() -> f64 {
    3.0f64.powf(-0.25)
}

/// Traveling speed c(a) = (4 - 2a^2 + a^4) / (sqrt(3) (1 - a^2)).
pub fn speed(a: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::ParamRange {
            name: "a",
            value: a,
            range: "[0, 1)",
        });
    }
    let a2 = a * a;
    Ok((4.0 - 2.0 * a2 + a2 * a2) / (3.0f64.sqrt() * (1.0 - a2)))
}

/// c''(0) = 4/sqrt(3), the convexity of the speed map at the bifurcation.
pub fn speed_second_derivative_at_zero() -> f64 {
    4.0 / 3.0f64.sqrt()
}

/// c'(a) by the quotient rule on the closed form.
pub fn speed_derivative(a: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::ParamRange {
            name: "a",
            value: a,
            range: "[0, 1)",
        });
    }
    let a2 = a * a;
    let numerator = (-4.0 * a + 4.0 * a * a2) * (1.0 - a2) + 2.0 * a * (4.0 - 2.0 * a2 + a2 * a2);
    Ok(numerator / (3.0f64.sqrt() * (1.0 - a2) * (1.0 - a2)))
}

/// Q_c sampled on the x axis.
pub fn line_soliton_profile(c: f64, nx: usize, lx: f64) -> Result<Profile1D> {
    if !(c > 0.0) {
        return Err(Error::ParamRange {
            name: "c",
            value: c,
            range: "(0, inf)",
        });
    }
    let half_sqrt_c = 0.5 * c.sqrt();
    Ok(Profile1D::from_fn(nx, lx, move |x| {
        3.0 * c * (half_sqrt_c * x).cosh().powi(-2)
    }))
}

/// Q_c broadcast to a y-constant field.
pub fn line_soliton(c: f64, grid: Grid) -> Result<Field> {
    let p = line_soliton_profile(c, grid.nx, grid.lx)?;
    Ok(Field::from_profile(grid, &p))
}

fn zaitsev_point(a: f64, x: f64, y: f64) -> f64 {
    let a2 = a * a;
    let beta = a * (2.0 - a2).sqrt();
    let alpha = (1.0 - a2).sqrt() * inv_scale();
    let f = (alpha * x).cosh();
    let g = y.cos();
    12.0 * (1.0 - a2) * (1.0 - beta * f * g) / (3.0f64.sqrt() * (f - beta * g).powi(2))
}

/// The modulated soliton Z(a) sampled on the grid.
pub fn zaitsev(a: f64, grid: Grid) -> Result<Field> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::ParamRange {
            name: "a",
            value: a,
            range: "[0, 1)",
        });
    }
    Ok(Field::from_fn(grid, |x, y| zaitsev_point(a, x, y)))
}

/// Scaling/rotation/translation coordinates of the soliton family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    /// Modulation vector (a1, a2); |a_vec| < 1.
    pub a_vec: (f64, f64),
    /// Scale gamma > 0.
    pub gamma: f64,
    /// x translation of the profile peak.
    pub rho: f64,
}

impl SolitonParams {
    pub fn new(a_vec: (f64, f64), gamma: f64, rho: f64) -> Result<SolitonParams> {
        let p = SolitonParams { a_vec, gamma, rho };
        let a = p.a_norm();
        if !(0.0..1.0).contains(&a) || !a.is_finite() {
            return Err(Error::ParamRange {
                name: "|a_vec|",
                value: a,
                range: "[0, 1)",
            });
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::ParamRange {
                name: "gamma",
                value: gamma,
                range: "(0, inf)",
            });
        }
        if !rho.is_finite() {
            return Err(Error::ParamRange {
                name: "rho",
                value: rho,
                range: "finite",
            });
        }
        Ok(p)
    }

    pub fn a_norm(&self) -> f64 {
        self.a_vec.0.hypot(self.a_vec.1)
    }

    /// Rotation angle with (cos, sin) = a_vec/|a_vec|; 0 at the origin,
    /// where the parameterization's angle is removable.
    pub fn theta(&self) -> f64 {
        if self.a_norm() == 0.0 {
            0.0
        } else {
            self.a_vec.1.atan2(self.a_vec.0)
        }
    }
}

/// gamma Z(|a_vec|)(sqrt(gamma) (x - rho), y + theta(a_vec)).
pub fn scaled_zaitsev(p: &SolitonParams, grid: Grid) -> Result<Field> {
    let checked = SolitonParams::new(p.a_vec, p.gamma, p.rho)?;
    let a = checked.a_norm();
    let theta = checked.theta();
    let sqrt_gamma = checked.gamma.sqrt();
    let gamma = checked.gamma;
    let rho = checked.rho;
    Ok(Field::from_fn(grid, move |x, y| {
        gamma * zaitsev_point(a, sqrt_gamma * (x - rho), y + theta)
    }))
}

/// Closed form of dx^{-1} v_*: 12 sqrt(2) 3^{-1/4} sinh(bx)/cosh^2(bx).
pub fn vstar_antideriv(grid: Grid) -> Profile1D {
    let b = inv_scale();
    let amp = 12.0 * 2.0f64.sqrt() * b;
    Profile1D::from_fn(grid.nx, grid.lx, move |x| {
        let c = (b * x).cosh();
        amp * (b * x).sinh() / (c * c)
    })
}

/// The tangent profile v_*, the spectral x-derivative of [`vstar_antideriv`];
/// `v_*(x) cos y` is the a-derivative of the modulated family at a = 0.
pub fn vstar(grid: Grid) -> Profile1D {
    vstar_antideriv(grid).deriv(1)
}

/// Zero-mode generator g_mu sampled on the x axis. Errors when e^{mu b x}
/// would overflow on the box.
pub fn g_mu(mu: f64, grid: Grid) -> Result<Profile1D> {
    if !mu.is_finite() || mu.abs() * 0.5 * grid.lx * inv_scale() > 700.0 {
        return Err(Error::ParamRange {
            name: "mu",
            value: mu,
            range: "exp-representable on this box",
        });
    }
    let f = ExpTanhPoly::g_mu(mu);
    Ok(Profile1D::from_fn(grid.nx, grid.lx, move |x| f.eval(x)))
}

/// Functions e^{b mu x} P(tanh(b x)) with b = 3^{-1/4}, closed under exact
/// differentiation. The g_mu with |mu| > 1 grow exponentially, so residual
/// checks on windows need their derivatives in closed form rather than
/// spectrally.
#[derive(Debug, Clone)]
pub struct ExpTanhPoly {
    mu: f64,
    /// Coefficients of P in ascending powers of t = tanh(b x).
    coeffs: Vec<f64>,
}

impl ExpTanhPoly {
    /// g_mu(x) = e^{b mu x} (mu^3 + 2 mu - 3 mu^2 t).
    pub fn g_mu(mu: f64) -> ExpTanhPoly {
        ExpTanhPoly {
            mu,
            coeffs: vec![mu.powi(3) + 2.0 * mu, -3.0 * mu * mu],
        }
    }

    /// d/dx [e^{b mu x} P(t)] = b e^{b mu x} (mu P + (1 - t^2) P').
    pub fn deriv(&self) -> ExpTanhPoly {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            out[k] += self.mu * c;
            if k >= 1 {
                out[k - 1] += k as f64 * c;
                out[k + 1] -= k as f64 * c;
            }
        }
        while out.len() > 1 && out.last() == Some(&0.0) {
            out.pop();
        }
        let b = inv_scale();
        ExpTanhPoly {
            mu: self.mu,
            coeffs: out.into_iter().map(|c| b * c).collect(),
        }
    }

    /// Evaluate stably. Naive Horner in t = tanh(z) cancels catastrophically
    /// when P(±1) = 0 while e^{mu z} amplifies the rounding (as for the
    /// decaying g_1), so the polynomial is re-expanded around the approached
    /// endpoint in s = 1 -+ t, with s computed as a sigmoid.
    pub fn eval(&self, x: f64) -> f64 {
        let z = inv_scale() * x;
        // Taylor-shift coefficients to the endpoint t0 = sign(z): exact small
        // arithmetic, so P's zeros at the endpoint cancel in coefficient
        // space instead of at run time.
        let t0 = if z >= 0.0 { 1.0 } else { -1.0 };
        let mut d = self.coeffs.clone();
        let n = d.len();
        for k in 0..n {
            for j in (k..n.saturating_sub(1)).rev() {
                let carry = t0 * d[j + 1];
                d[j] += carry;
            }
        }
        // t - t0 = -t0 * s with s = 1 - t0*t = 2/(e^{2|z|} + 1) >= 0.
        let s = 2.0 / ((2.0 * z.abs()).exp() + 1.0);
        let mut p = 0.0;
        for (k, &dk) in d.iter().enumerate().rev() {
            let signed = if k % 2 == 1 { -t0 * dk } else { dk };
            p = p * s + signed;
        }
        (self.mu * z).exp() * p
    }
}

/// x-derivative of order `1 + extra_derivs` of the degenerate zero-mode
/// companion lim_{mu->1} (g_mu + g_{-mu}) / (mu - 1), realized by central
/// mu-differencing (h = 1e-4) of exact x-derivatives. `extra_derivs = 0`
/// gives the kernel element itself.
pub fn degenerate_kernel_profile(extra_derivs: u32, grid: Grid) -> Profile1D {
    let h = 1e-4;
    let branch = |mu: f64| -> ExpTanhPoly {
        let mut f = ExpTanhPoly::g_mu(mu);
        for _ in 0..=extra_derivs {
            f = f.deriv();
        }
        f
    };
    let (pp, pm) = (branch(1.0 + h), branch(-(1.0 + h)));
    let (mp, mm) = (branch(1.0 - h), branch(-(1.0 - h)));
    Profile1D::from_fn(grid.nx, grid.lx, move |x| {
        (pp.eval(x) + pm.eval(x) - mp.eval(x) - mm.eval(x)) / (2.0 * h)
    })
}

/// Mass-matching scale gamma_l(a) = (mass(Z(l)) / mass(Z(a)))^{2/3}: the
/// gamma for which Z((a,0), gamma) carries the same mass as Z(l).
pub fn gamma_l(l: f64, a: f64, grid: Grid) -> Result<f64> {
    let ml = zaitsev(l, grid)?.l2_norm_squared();
    let ma = zaitsev(a, grid)?.l2_norm_squared();
    Ok((ml / ma).powf(2.0 / 3.0))
}
