//! Dense spectral matrices for the linearized operators, one transverse
//! mode at a time.
//!
//! Expanding a perturbation of the line soliton in transverse Fourier
//! modes w_n(x) e^{iny} decouples the Hessian of the action into the
//! one-dimensional operators
//!
//!     L_n = -dx^2 - n^2 dx^{-2} + c - Q_c        (n >= 1, zero-mean data),
//!     L_0 = -dx^2 + c - Q_c,
//!
//! together with the fourth-order form that clears the antiderivatives
//! from the n = 1 mode,
//!
//!     -dx L_1 dx = dx^4 + 1 - c dx^2 + dx (Q_c dx .),
//!
//! whose decaying kernel is spanned by dx g_1 while dx g_{+sqrt(3)} and
//! dx g_{-sqrt(3)} solve the same equation with exponential growth.
//!
//! Every operator is assembled in the orthonormal trigonometric basis
//! { sqrt(2/lx) cos(xi_p x), sqrt(2/lx) sin(xi_p x) : 1 <= p <= nx/2 - 1 },
//! plus the constant mode sqrt(1/lx) when n = 0. Derivative symbols are
//! exactly diagonal there, and the potential couples modes through the
//! Fourier coefficients of Q_c alone: a product of two basis functions is
//! a sum-and-difference frequency pair, so the whole potential block comes
//! from one long transform of Q_c instead of O(nx^3) quadrature, and the
//! matrix is symmetric by construction. The Nyquist column is truncated.
//!
//! Discretizing R on a periodic box keeps every discrete eigenvalue below
//! the essential-spectrum edge (c for L_0, n^2/xi^2-limited for L_n, 1 for
//! the fourth-order form) spectrally convergent in nx at fixed lx; the
//! clusters at and above the edge approximate the box continuum and are
//! resolution-stable only in the same box.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{Profile1D, MEAN_ZERO_TOL};
use crate::grid::make_grid;
use crate::solitons::{critical_speed, g_mu, inv_scale, line_soliton_profile, vstar, ExpTanhPoly};

/// Which differential form the matrix discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorForm {
    /// L_n = -dx^2 - n^2 dx^{-2} + c - Q_c.
    SecondOrder,
    /// -dx L_1 dx = dx^4 + 1 - c dx^2 + dx (Q_c dx .).
    FourthOrder,
}

/// A linearized operator discretized as a dense symmetric matrix on the
/// trigonometric basis described by `basis`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    /// Transverse mode number (only n^2 enters the symbol).
    pub n: u32,
    /// Speed in the potential term c - Q_c.
    pub c: f64,
    /// Matrix dimension.
    pub size: usize,
    /// Symmetric entries, basis-ordered: [constant,] cos_1, sin_1, cos_2, ...
    pub entries: DMatrix<f64>,
    /// Description of the discrete subspace the matrix acts on.
    pub basis: String,
    form: OperatorForm,
    has_constant: bool,
    nx: usize,
    lx: f64,
}

/// Fourier coefficients of the potential, qc[k] = (1/lx) integral of
/// Q_c(x) exp(-i xi_k x) dx for k = 0..nx-1, sampled alias-free on a
/// doubled grid (products of basis modes reach frequency index nx - 2).
fn potential_coefficients(c: f64, nx: usize, lx: f64) -> Result<Vec<f64>> {
    let fine = line_soliton_profile(c, 2 * nx, lx)?;
    let coeffs = fft::forward_1d(&fine.values);
    Ok(coeffs[..nx].iter().map(|z| z.re).collect())
}

fn validate_speed(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::ParamRange {
            name: "c",
            value: c,
            range: "(0, inf)",
        });
    }
    Ok(())
}

/// L_n at speed c on nx points over [-lx/2, lx/2). For n >= 1 the basis
/// omits the constant, so dx^{-2} is invertible on it.
pub fn build_l(n: u32, c: f64, nx: usize, lx: f64) -> Result<OperatorMatrix> {
    validate_speed(c)?;
    let grid = make_grid(nx, lx, 8)?;
    let (nx, lx) = (grid.nx, grid.lx);
    let qc = potential_coefficients(c, nx, lx)?;
    let modes = nx / 2 - 1;
    let has_constant = n == 0;
    let offset = usize::from(has_constant);
    let size = 2 * modes + offset;
    let mut entries = DMatrix::zeros(size, size);
    let xi = |p: usize| 2.0 * std::f64::consts::PI * p as f64 / lx;
    if has_constant {
        entries[(0, 0)] = c - qc[0];
        for q in 1..=modes {
            let coupling = -std::f64::consts::SQRT_2 * qc[q];
            entries[(0, offset + 2 * (q - 1))] = coupling;
            entries[(offset + 2 * (q - 1), 0)] = coupling;
        }
    }
    for p in 1..=modes {
        let (ic, is) = (offset + 2 * (p - 1), offset + 2 * (p - 1) + 1);
        let kinetic = xi(p) * xi(p) + f64::from(n * n) / (xi(p) * xi(p));
        entries[(ic, ic)] += kinetic + c;
        entries[(is, is)] += kinetic + c;
        for q in p..=modes {
            let (jc, js) = (offset + 2 * (q - 1), offset + 2 * (q - 1) + 1);
            let (diff, sum) = (qc[q - p], qc[p + q]);
            entries[(ic, jc)] -= diff + sum;
            entries[(is, js)] -= diff - sum;
            if q > p {
                entries[(jc, ic)] = entries[(ic, jc)];
                entries[(js, is)] = entries[(is, js)];
            }
        }
    }
    Ok(OperatorMatrix {
        n,
        c,
        size,
        entries,
        basis: format!(
            "orthonormal Fourier modes 1..={modes} on nx={nx}, lx={lx}{}",
            if has_constant {
                " plus the constant"
            } else {
                ", zero-mean (no constant)"
            }
        ),
        form: OperatorForm::SecondOrder,
        has_constant,
        nx,
        lx,
    })
}

/// The fourth-order form -dx L_1 dx at speed c, on the zero-mean basis.
pub fn build_fourth_order(c: f64, nx: usize, lx: f64) -> Result<OperatorMatrix> {
    validate_speed(c)?;
    let grid = make_grid(nx, lx, 8)?;
    let (nx, lx) = (grid.nx, grid.lx);
    let qc = potential_coefficients(c, nx, lx)?;
    let modes = nx / 2 - 1;
    let size = 2 * modes;
    let mut entries = DMatrix::zeros(size, size);
    let xi = |p: usize| 2.0 * std::f64::consts::PI * p as f64 / lx;
    for p in 1..=modes {
        let (ic, is) = (2 * (p - 1), 2 * (p - 1) + 1);
        let x2 = xi(p) * xi(p);
        let kinetic = x2 * x2 + 1.0 + c * x2;
        entries[(ic, ic)] += kinetic;
        entries[(is, is)] += kinetic;
        // dx (Q dx .) pairs derivatives of both basis functions, flipping
        // the role of the sum-frequency term relative to L_n.
        for q in p..=modes {
            let (jc, js) = (2 * (q - 1), 2 * (q - 1) + 1);
            let scale = xi(p) * xi(q);
            let (diff, sum) = (qc[q - p], qc[p + q]);
            entries[(ic, jc)] -= scale * (diff - sum);
            entries[(is, js)] -= scale * (diff + sum);
            if q > p {
                entries[(jc, ic)] = entries[(ic, jc)];
                entries[(js, is)] = entries[(is, js)];
            }
        }
    }
    Ok(OperatorMatrix {
        n: 1,
        c,
        size,
        entries,
        basis: format!(
            "orthonormal Fourier modes 1..={modes} on nx={nx}, lx={lx}, zero-mean (no constant)"
        ),
        form: OperatorForm::FourthOrder,
        has_constant: false,
        nx,
        lx,
    })
}

impl OperatorMatrix {
    /// Basis coefficients of a profile; the Nyquist mode is truncated and,
    /// on zero-mean bases, a non-vanishing mean is rejected.
    fn project(&self, u: &Profile1D) -> Result<DVector<f64>> {
        if u.nx() != self.nx || u.lx != self.lx {
            return Err(Error::GridMismatch(self.nx, self.lx, 1, u.nx(), u.lx, 1));
        }
        let coeffs = fft::forward_1d(&u.values);
        let scale = coeffs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if !self.has_constant && coeffs[0].norm() > MEAN_ZERO_TOL * scale {
            return Err(Error::MeanZeroViolation {
                max_coeff: coeffs[0].norm(),
                scale,
            });
        }
        let modes = self.nx / 2 - 1;
        let offset = usize::from(self.has_constant);
        let mut alpha = DVector::zeros(self.size);
        if self.has_constant {
            alpha[0] = coeffs[0].re * self.lx.sqrt();
        }
        let amp = (2.0 * self.lx).sqrt();
        for p in 1..=modes {
            alpha[offset + 2 * (p - 1)] = amp * coeffs[p].re;
            alpha[offset + 2 * (p - 1) + 1] = -amp * coeffs[p].im;
        }
        Ok(alpha)
    }

    /// Profile with the given basis coefficients; inverse of [`project`]
    /// on the basis band.
    fn synthesize(&self, alpha: &DVector<f64>) -> Profile1D {
        let modes = self.nx / 2 - 1;
        let offset = usize::from(self.has_constant);
        let mut coeffs = vec![Complex64::default(); self.nx];
        if self.has_constant {
            coeffs[0] = Complex64::new(alpha[0] / self.lx.sqrt(), 0.0);
        }
        let amp = (2.0 * self.lx).sqrt();
        for p in 1..=modes {
            let z = Complex64::new(
                alpha[offset + 2 * (p - 1)] / amp,
                -alpha[offset + 2 * (p - 1) + 1] / amp,
            );
            coeffs[p] = z;
            coeffs[self.nx - p] = z.conj();
        }
        Profile1D {
            lx: self.lx,
            values: fft::inverse_1d(&coeffs),
        }
    }

    /// Apply the discretized operator to a profile on the same grid.
    pub fn apply(&self, u: &Profile1D) -> Result<Profile1D> {
        let alpha = self.project(u)?;
        Ok(self.synthesize(&(&self.entries * alpha)))
    }

    /// Squared per-mode weight (1 + |xi| + n/|xi|)^2 for each basis
    /// vector; the constant mode carries weight 1.
    fn weight_squared(&self) -> DVector<f64> {
        let modes = self.nx / 2 - 1;
        let offset = usize::from(self.has_constant);
        let mut w = DVector::from_element(self.size, 1.0);
        for p in 1..=modes {
            let xi = 2.0 * std::f64::consts::PI * p as f64 / self.lx;
            let weight = 1.0 + xi + f64::from(self.n) / xi;
            w[offset + 2 * (p - 1)] = weight * weight;
            w[offset + 2 * (p - 1) + 1] = weight * weight;
        }
        w
    }

    /// Closed-form kernel direction for the operator, when one exists:
    /// dx Q_c for L_0, the branch tangent v_* for L_1 at the critical
    /// speed, dx g_1 for the fourth-order form at the critical speed.
    fn known_kernel(&self) -> Option<Profile1D> {
        let at_critical = (self.c - critical_speed()).abs() < 1e-9;
        let grid = make_grid(self.nx, self.lx, 8).ok()?;
        match self.form {
            OperatorForm::SecondOrder if self.n == 0 => {
                Some(line_soliton_profile(self.c, self.nx, self.lx).ok()?.deriv(1))
            }
            OperatorForm::SecondOrder if self.n == 1 && at_critical => Some(vstar(grid)),
            OperatorForm::FourthOrder if at_critical => Some(g_mu(1.0, grid).ok()?.deriv(1)),
            _ => None,
        }
    }
}

/// The `count` smallest eigenpairs of an operator matrix, with sign
/// counting and kernel identification. Eigenvectors are synthesized on
/// the x grid with unit box L^2 norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Smallest `count` eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Matching eigenvectors as grid profiles.
    pub eigenvectors: Vec<Profile1D>,
    /// Eigenvalues below -1e-8 * max|entry|, counted over the whole
    /// spectrum.
    pub negative_count: usize,
    /// (eigenvalue, |normalized overlap| with the known kernel direction)
    /// for every eigenvalue within 1e-4 of zero; overlap 0 when no
    /// closed-form kernel exists for this operator.
    pub near_zero: Vec<(f64, f64)>,
}

/// Near-zero band for kernel identification.
const NEAR_ZERO_BAND: f64 = 1e-4;

pub fn spectrum(m: &OperatorMatrix, count: usize) -> Result<SpectrumReport> {
    if count < 1 || count > m.size {
        return Err(Error::ParamRange {
            name: "count",
            value: count as f64,
            range: "1..=size",
        });
    }
    let eig = nalgebra::SymmetricEigen::try_new(m.entries.clone(), f64::EPSILON, 100 * m.size)
        .ok_or(Error::Eigensolver { size: m.size })?;
    let mut order: Vec<usize> = (0..m.size).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let threshold = 1e-8 * m.entries.amax();
    let negative_count = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] < -threshold)
        .count();

    let kernel = m.known_kernel();
    let mut near_zero = Vec::new();
    for &i in &order {
        let lambda = eig.eigenvalues[i];
        if lambda.abs() < NEAR_ZERO_BAND {
            let overlap = kernel.as_ref().map_or(0.0, |k| {
                let e = m.synthesize(&eig.eigenvectors.column(i).into_owned());
                e.inner(k).abs() / (e.l2_norm_squared() * k.l2_norm_squared()).sqrt()
            });
            near_zero.push((lambda, overlap));
        }
    }

    let kept = &order[..count];
    Ok(SpectrumReport {
        eigenvalues: kept.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors: kept
            .iter()
            .map(|&i| m.synthesize(&eig.eigenvectors.column(i).into_owned()))
            .collect(),
        negative_count,
        near_zero,
    })
}

/// Minimum of <L w, w> / ||w||^2 in the per-mode weighted norm, over the
/// L^2-orthogonal complement of the constraints.
///
/// Substituting v = W^(1/2) w turns the quotient into a plain Rayleigh
/// quotient of W^(-1/2) L W^(-1/2) with transformed constraints; those
/// are orthonormalized and folded in through a penalty shift, so one
/// symmetric eigensolve returns the constrained minimum.
pub fn coercivity_constant(m: &OperatorMatrix, constraints: &[Profile1D]) -> Result<f64> {
    let w = m.weight_squared();
    let mut b = m.entries.clone();
    for i in 0..m.size {
        for j in 0..m.size {
            b[(i, j)] /= (w[i] * w[j]).sqrt();
        }
    }
    // Orthonormal basis of the transformed constraint span.
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(constraints.len());
    for (index, profile) in constraints.iter().enumerate() {
        let gamma = m.project(profile)?;
        let mut g = gamma.component_div(&w.map(f64::sqrt));
        let original = g.norm();
        for u in &basis {
            let overlap = u.dot(&g);
            g -= u * overlap;
        }
        if g.norm() <= 1e-10 * original || original == 0.0 {
            return Err(Error::DegenerateConstraints { index });
        }
        basis.push(g.normalize());
    }
    // Project the quadratic form onto the complement and push the
    // constraint directions above everything with a penalty shift.
    let sigma = b.norm() + 1.0;
    for u in &basis {
        let bu = &b * u;
        let ubu = u.dot(&bu);
        b -= &bu * u.transpose();
        b -= u * bu.transpose();
        b += u * u.transpose() * (ubu + sigma);
    }
    // Symmetrize away the rounding skew of the rank-one updates.
    b = (&b + b.transpose()) * 0.5;
    Ok(b
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// One row of the stability scan: the unconstrained smallest eigenvalue
/// of L_1(c) on zero-mean data.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpeedScanRow {
    pub c: f64,
    pub smallest_eigenvalue: f64,
}

/// Smallest eigenvalue of L_1(c) across speeds: positive below the
/// critical speed, a kernel at it, negative above.
pub fn coercivity_vs_speed(c_values: &[f64], nx: usize, lx: f64) -> Result<Vec<SpeedScanRow>> {
    let mut rows = Vec::with_capacity(c_values.len());
    for &c in c_values {
        if !(c > 0.0 && c < 4.0) {
            return Err(Error::ParamRange {
                name: "c",
                value: c,
                range: "(0, 4)",
            });
        }
        let m = build_l(1, c, nx, lx)?;
        let smallest = m
            .entries
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        rows.push(SpeedScanRow {
            c,
            smallest_eigenvalue: smallest,
        });
    }
    Ok(rows)
}

/// Pointwise relative residual of the fourth-order form at the critical
/// speed on the kernel generator dx g_mu, over the window |x| <=
/// half_width. The growing generators (|mu| > 1) rule out any global
/// spectral route, so every derivative is evaluated in closed form.
pub fn kernel_window_residual(mu: f64, half_width: f64) -> Result<f64> {
    if !mu.is_finite() || mu.abs() > 20.0 {
        return Err(Error::ParamRange {
            name: "mu",
            value: mu,
            range: "[-20, 20]",
        });
    }
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::ParamRange {
            name: "half_width",
            value: half_width,
            range: "(0, inf)",
        });
    }
    let c = critical_speed();
    let b = inv_scale();
    let g1 = ExpTanhPoly::g_mu(mu).deriv();
    let g2 = g1.deriv();
    let g3 = g2.deriv();
    let g5 = g3.deriv().deriv();
    let amplitude = 4.0 * 3.0f64.sqrt();
    let samples = 401;
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for i in 0..samples {
        let x = -half_width + 2.0 * half_width * i as f64 / (samples - 1) as f64;
        let sech = 1.0 / (b * x).cosh();
        let q = amplitude * sech * sech;
        let qp = -2.0 * b * q * (b * x).tanh();
        let terms = [
            g5.eval(x),
            g1.eval(x),
            -c * g3.eval(x),
            qp * g2.eval(x),
            q * g3.eval(x),
        ];
        let residual = terms.iter().sum::<f64>().abs();
        let magnitude = terms.iter().map(|t| t.abs()).sum::<f64>();
        worst = worst.max(residual);
        scale = scale.max(magnitude);
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LX: f64 = 80.0;

    #[test]
    fn assembled_matrices_are_exactly_symmetric() {
        for m in [
            build_l(0, critical_speed(), 128, LX).unwrap(),
            build_l(1, critical_speed(), 128, LX).unwrap(),
            build_fourth_order(critical_speed(), 128, LX).unwrap(),
        ] {
            let skew = (&m.entries - m.entries.transpose()).amax();
            assert_eq!(skew, 0.0, "construction must be symmetric bit for bit");
        }
    }

    #[test]
    fn spectrum_of_shifted_identity_is_flat() {
        let mut m = build_l(1, 2.0, 64, LX).unwrap();
        m.entries = DMatrix::identity(m.size, m.size) * 2.0;
        let report = spectrum(&m, m.size).unwrap();
        for lambda in &report.eigenvalues {
            assert!(
                (lambda - 2.0).abs() < 1e-12,
                "identity-like operator must have flat spectrum, got {lambda}"
            );
        }
        assert_eq!(report.negative_count, 0, "no negative directions");
    }

    #[test]
    fn apply_matches_direct_spectral_action() {
        let nx = 512;
        let c = critical_speed();
        let m = build_l(1, c, nx, LX).unwrap();
        let grid = make_grid(nx, LX, 8).unwrap();
        let u = vstar(grid);
        let q = line_soliton_profile(c, nx, LX).unwrap();
        // The matrix is the compression P L_1 P onto the zero-mean
        // subspace, so the collocation reference discards the mean of Q u
        // as well.
        let mut direct_values: Vec<f64> = {
            let uxx = u.deriv(2);
            let anti = u.antideriv(2).unwrap();
            (0..nx)
                .map(|i| -uxx.values[i] - anti.values[i] + (c - q.values[i]) * u.values[i])
                .collect()
        };
        let mean = direct_values.iter().sum::<f64>() / nx as f64;
        for v in &mut direct_values {
            *v -= mean;
        }
        let direct = Profile1D {
            lx: LX,
            values: direct_values,
        };
        let via_matrix = m.apply(&u).unwrap();
        let diff = (0..nx)
            .map(|i| (via_matrix.values[i] - direct.values[i]).abs())
            .fold(0.0f64, f64::max);
        assert!(
            diff < 1e-8,
            "Galerkin and collocation actions disagree by {diff}"
        );
        // v_* spans the kernel of L_1 at the critical speed.
        assert!(
            via_matrix.max_abs() < 1e-6,
            "L_1 must annihilate the branch tangent, residual {}",
            via_matrix.max_abs()
        );
    }

    #[test]
    fn translation_mode_sits_in_the_l0_spectrum() {
        let c = critical_speed();
        let m = build_l(0, c, 512, LX).unwrap();
        let report = spectrum(&m, 3).unwrap();
        assert_eq!(report.negative_count, 1, "L_0 has exactly one negative direction");
        let ground = report.eigenvalues[0];
        let expected = -5.0 / 3.0f64.sqrt();
        assert!(
            (ground - expected).abs() < 1e-8,
            "L_0 ground state {ground} vs closed form -5/sqrt(3) = {expected}"
        );
        let (zero, overlap) = report.near_zero[0];
        assert!(zero.abs() < 1e-8, "translation eigenvalue off zero: {zero}");
        assert!(
            overlap > 0.999,
            "zero mode must align with dx Q, overlap {overlap}"
        );
        let third = report.eigenvalues[2];
        let expected_third = 3.0f64.sqrt();
        assert!(
            (third - expected_third).abs() < 1e-8,
            "first excited discrete level {third} vs sqrt(3) = {expected_third}"
        );
    }

    #[test]
    fn higher_transverse_modes_are_strictly_positive() {
        let c = critical_speed();
        for (n, floor) in [(2, 2.0), (3, 4.0)] {
            let m = build_l(n, c, 512, LX).unwrap();
            let smallest = m
                .entries
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            assert!(
                smallest > floor,
                "L_{n} smallest eigenvalue {smallest} should clear {floor}"
            );
        }
    }

    #[test]
    fn fourth_order_form_has_simple_kernel_and_clean_edge() {
        let m = build_fourth_order(critical_speed(), 512, LX).unwrap();
        let report = spectrum(&m, 3).unwrap();
        assert_eq!(report.negative_count, 0, "no negative directions");
        assert!(
            report.eigenvalues[0].abs() < 1e-4,
            "kernel eigenvalue {} outside the near-zero band",
            report.eigenvalues[0]
        );
        assert_eq!(report.near_zero.len(), 1, "the near-zero eigenvalue is simple");
        assert!(
            report.near_zero[0].1 > 0.999,
            "kernel vector must align with dx g_1, overlap {}",
            report.near_zero[0].1
        );
        assert!(
            report.eigenvalues[1] >= 0.95,
            "next cluster {} should sit at the essential edge 1",
            report.eigenvalues[1]
        );
    }

    #[test]
    fn discrete_eigenvalues_are_resolution_stable() {
        let c = critical_speed();
        let five_smallest = |m: &OperatorMatrix| -> Vec<f64> {
            let mut ev: Vec<f64> = m.entries.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            ev.truncate(5);
            ev
        };
        let pairs = [
            (build_l(0, c, 512, LX).unwrap(), build_l(0, c, 1024, LX).unwrap()),
            (build_l(1, c, 512, LX).unwrap(), build_l(1, c, 1024, LX).unwrap()),
            (
                build_fourth_order(c, 512, LX).unwrap(),
                build_fourth_order(c, 1024, LX).unwrap(),
            ),
        ];
        for (coarse, fine) in &pairs {
            let (a, b) = (five_smallest(coarse), five_smallest(fine));
            for (x, y) in a.iter().zip(&b) {
                assert!(
                    (x - y).abs() < 1e-6,
                    "eigenvalue drifted across resolutions: {x} vs {y}"
                );
            }
        }
    }

    #[test]
    fn fourth_order_annihilates_the_decaying_kernel_globally() {
        let nx = 512;
        let m = build_fourth_order(critical_speed(), nx, LX).unwrap();
        let grid = make_grid(nx, LX, 8).unwrap();
        let kernel = g_mu(1.0, grid).unwrap().deriv(1);
        let residual = m.apply(&kernel).unwrap().max_abs();
        assert!(
            residual < 1e-6,
            "dx g_1 should be annihilated globally, residual {residual}"
        );
    }

    #[test]
    fn growing_kernel_generators_solve_on_a_window() {
        for mu in [3.0f64.sqrt(), -(3.0f64.sqrt())] {
            let rel = kernel_window_residual(mu, 5.0).unwrap();
            assert!(
                rel < 1e-4,
                "dx g_mu residual for mu = {mu} too large: {rel}"
            );
        }
        let decaying = kernel_window_residual(1.0, 5.0).unwrap();
        assert!(
            decaying < 1e-10,
            "closed-form kernel residual should be rounding-level, got {decaying}"
        );
        assert!(
            matches!(
                kernel_window_residual(f64::NAN, 5.0),
                Err(Error::ParamRange { name: "mu", .. })
            ),
            "non-finite mu must be rejected"
        );
    }

    #[test]
    fn constrained_l0_coercivity_is_positive_and_resolution_stable() {
        let c = critical_speed();
        let constants: Vec<f64> = [512usize, 1024]
            .iter()
            .map(|&nx| {
                let m = build_l(0, c, nx, LX).unwrap();
                let q = line_soliton_profile(c, nx, LX).unwrap();
                coercivity_constant(&m, &[q.clone(), q.deriv(1)]).unwrap()
            })
            .collect();
        assert!(
            constants[0] > 0.0,
            "constrained L_0 must be coercive, got {}",
            constants[0]
        );
        let drift = (constants[0] - constants[1]).abs() / constants[1];
        assert!(
            drift < 0.05,
            "coercivity constant unstable across resolutions: {constants:?}"
        );
    }

    #[test]
    fn tangent_constraint_restores_l1_coercivity() {
        let nx = 512;
        let c = critical_speed();
        let m = build_l(1, c, nx, LX).unwrap();
        let grid = make_grid(nx, LX, 8).unwrap();
        let unconstrained = coercivity_constant(&m, &[]).unwrap();
        assert!(
            unconstrained.abs() < 1e-6,
            "kernel direction should pin the unconstrained minimum at zero, got {unconstrained}"
        );
        let constrained = coercivity_constant(&m, &[vstar(grid)]).unwrap();
        assert!(
            constrained > 0.0,
            "orthogonality to v_* must restore coercivity, got {constrained}"
        );
    }

    #[test]
    fn dependent_constraints_are_rejected() {
        let c = critical_speed();
        let m = build_l(0, c, 128, LX).unwrap();
        let q = line_soliton_profile(c, 128, LX).unwrap();
        let result = coercivity_constant(&m, &[q.clone(), q.scaled(2.0)]);
        assert!(
            matches!(result, Err(Error::DegenerateConstraints { index: 1 })),
            "a rescaled copy is linearly dependent, got {result:?}"
        );
    }

    #[test]
    fn speed_scan_crosses_zero_at_the_critical_speed() {
        let rows = coercivity_vs_speed(&[1.5, critical_speed(), 3.0], 512, LX).unwrap();
        assert!(
            rows[0].smallest_eigenvalue > 0.0,
            "subcritical speed should be coercive, got {}",
            rows[0].smallest_eigenvalue
        );
        assert!(
            rows[1].smallest_eigenvalue.abs() < 1e-4,
            "critical speed should be degenerate, got {}",
            rows[1].smallest_eigenvalue
        );
        assert!(
            rows[2].smallest_eigenvalue < 0.0,
            "supercritical speed should lose coercivity, got {}",
            rows[2].smallest_eigenvalue
        );
        assert!(
            matches!(
                coercivity_vs_speed(&[4.5], 128, LX),
                Err(Error::ParamRange { name: "c", .. })
            ),
            "speeds outside (0, 4) must be rejected"
        );
    }

    #[test]
    fn projection_round_trips_band_limited_profiles() {
        let nx = 128;
        let m = build_l(0, 1.0, nx, LX).unwrap();
        let u = Profile1D::from_fn(nx, LX, |x| {
            0.3 + (2.0 * std::f64::consts::PI * x / LX).cos()
                - 2.0 * (2.0 * std::f64::consts::PI * 5.0 * x / LX).sin()
        });
        let round = m.synthesize(&m.project(&u).unwrap());
        let diff = (0..nx)
            .map(|i| (round.values[i] - u.values[i]).abs())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-12, "band-limited round trip drifted by {diff}");
        // Mean content is rejected on zero-mean bases.
        let m1 = build_l(1, 1.0, nx, LX).unwrap();
        assert!(
            matches!(m1.apply(&u), Err(Error::MeanZeroViolation { .. })),
            "a profile with mean must not enter a zero-mean basis"
        );
    }
}
