//! The quantitative verification suite.
//!
//! Every headline claim of the library is pinned here as a named check
//! with a predicted value, a measured value, and a tolerance, grouped
//! into suites that can run independently. The suites are the single
//! source of truth shared by the `verify` subcommand and the acceptance
//! test target; nothing else hard-codes expected numbers.
//!
//! Check semantics. A [`CheckResult`] always carries four numbers plus a
//! verdict; the constructors fix how the verdict is derived:
//!
//! * two-sided: pass iff |measured - predicted| <= tolerance,
//! * residual: predicted = 0 and pass iff |measured| <= tolerance,
//! * one-sided: predicted holds the bound, tolerance = 0, and pass iff
//!   measured lies strictly on the required side.
//!
//! Every check is deterministic: grids, step sizes, seeds, and sample
//! windows are pinned in this module, and the seeded noise comes from a
//! counter-based generator, so a rerun reproduces each measured value bit
//! for bit on one build.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{reverse_time_check, run, stability_experiment, EvolutionConfig};
use crate::expansions::{
    beta_fourth_derivative_check, default_quadratic_samples, default_sixth_order_samples,
    fit_action_quadratic, fit_action_sixth_order, fit_gamma_quartic, mass_derivative_at_zero,
    ratio_to_f64, sech_moment_exact, sech_moment_quadrature, second_mass_derivative_identity,
};
use crate::functionals::stationary_residual;
use crate::grid::make_grid;
use crate::linop::{
    build_fourth_order, build_l, coercivity_vs_speed, kernel_window_residual, spectrum,
};
use crate::modulation::{
    decompose, equal_mass_sample, lyapunov_inequality_check, scale_gap_check,
};
use crate::solitons::{
    critical_speed, g_mu, line_soliton, scaled_zaitsev, speed, vstar_antideriv, zaitsev,
    SolitonParams,
};

/// One named measurement against its predicted value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub predicted: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    /// Two-sided: |measured - predicted| <= tolerance.
    fn within(name: impl Into<String>, predicted: f64, measured: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            predicted,
            measured,
            tolerance,
            pass: measured.is_finite() && (measured - predicted).abs() <= tolerance,
        }
    }

    /// Residual form: |measured| <= tolerance.
    fn residual(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self::within(name, 0.0, measured, tolerance)
    }

    /// One-sided floor: measured > floor.
    fn above(name: impl Into<String>, measured: f64, floor: f64) -> Self {
        CheckResult {
            name: name.into(),
            predicted: floor,
            measured,
            tolerance: 0.0,
            pass: measured.is_finite() && measured > floor,
        }
    }

    /// One-sided ceiling: measured < ceiling.
    fn below(name: impl Into<String>, measured: f64, ceiling: f64) -> Self {
        CheckResult {
            name: name.into(),
            predicted: ceiling,
            measured,
            tolerance: 0.0,
            pass: measured.is_finite() && measured < ceiling,
        }
    }
}

/// A named, independently runnable group of checks.
pub struct SuiteSpec {
    pub name: &'static str,
    pub summary: &'static str,
    pub run: fn() -> Result<Vec<CheckResult>>,
}

/// All suites in report order.
pub fn suites() -> &'static [SuiteSpec] {
    &[
        SuiteSpec {
            name: "closed-form",
            summary: "Z(0) coincides with the critical-speed line soliton",
            run: check_closed_form,
        },
        SuiteSpec {
            name: "stationary",
            summary: "branch members satisfy the stationary equation",
            run: check_stationary,
        },
        SuiteSpec {
            name: "mass-derivatives",
            summary: "branch-mass derivatives at the line soliton",
            run: check_mass_derivatives,
        },
        SuiteSpec {
            name: "moments",
            summary: "exact sech moments against quadrature",
            run: check_moments,
        },
        SuiteSpec {
            name: "gamma-quartic",
            summary: "mass-matching scale opens quartically",
            run: check_gamma_quartic,
        },
        SuiteSpec {
            name: "action-sixth",
            summary: "critical action gap opens at sixth order",
            run: check_action_sixth,
        },
        SuiteSpec {
            name: "action-quadratic",
            summary: "action gap over interior base points is quadratic",
            run: check_action_quadratic,
        },
        SuiteSpec {
            name: "spectra",
            summary: "linearized operator inertia and kernels",
            run: check_spectra,
        },
        SuiteSpec {
            name: "kernels",
            summary: "closed-form kernel elements and identities",
            run: check_kernels,
        },
        SuiteSpec {
            name: "modulation",
            summary: "planted-parameter decomposition round trips",
            run: check_modulation,
        },
        SuiteSpec {
            name: "mass-gap",
            summary: "mass-matched scale gap is nonnegative and quadratic",
            run: check_mass_gap,
        },
        SuiteSpec {
            name: "lyapunov",
            summary: "sampled Lyapunov quotients are positive",
            run: check_lyapunov,
        },
        SuiteSpec {
            name: "evolution",
            summary: "conservation, soliton speed, and reversibility",
            run: check_evolution,
        },
        SuiteSpec {
            name: "stability",
            summary: "orbital excursions scale with the perturbation",
            run: check_stability,
        },
        SuiteSpec {
            name: "dichotomy",
            summary: "sign change of the second-mode ground state across the branch",
            run: check_dichotomy,
        },
    ]
}

/// Run one suite by name; `all` concatenates every suite in order.
pub fn run_suite(name: &str) -> Result<Vec<CheckResult>> {
    if name == "all" {
        let mut out = Vec::new();
        for s in suites() {
            out.extend((s.run)()?);
        }
        return Ok(out);
    }
    let spec = suites()
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Config(format!("unknown suite {name:?}; see `verify --list`")))?;
    (spec.run)()
}

/// max|Z(0) - Q_{c0}| on the reference box.
fn check_closed_form() -> Result<Vec<CheckResult>> {
    let g = make_grid(1024, 80.0, 8)?;
    let mut diff = zaitsev(0.0, g)?;
    diff.add_scaled(-1.0, &line_soliton(critical_speed(), g)?);
    Ok(vec![CheckResult::residual(
        "z_at_zero_matches_line_soliton",
        diff.max_abs(),
        1e-12,
    )])
}

/// Stationary-equation residual along the branch. The y-resolution grows
/// with a because the transverse spectrum decays like beta(a)^|q|.
fn check_stationary() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (a, ny) in [(0.0, 16), (0.1, 32), (0.3, 64), (0.5, 192)] {
        let g = make_grid(1024, 80.0, ny)?;
        let r = stationary_residual(&zaitsev(a, g)?, speed(a)?)?;
        out.push(CheckResult::residual(
            format!("stationary_residual_a_{a:.2}"),
            r.max_abs(),
            1e-8,
        ));
    }
    Ok(out)
}

/// The closed-form fourth branch-mass derivative at a = 0.
fn fourth_mass_derivative() -> f64 {
    128.0 * 3.0f64.powf(2.25) * PI
}

/// Finite-difference branch-mass derivatives against the closed forms:
/// orders 1..3 vanish, order 4 matches the assembled constant, and the
/// two symbolic routes to that constant agree to rounding.
fn check_mass_derivatives() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for order in 1..=3u32 {
        let est = mass_derivative_at_zero(order, 0.05)?;
        out.push(CheckResult::residual(
            format!("mass_derivative_order_{order}"),
            est.value,
            1e-6,
        ));
    }
    let fourth = mass_derivative_at_zero(4, 0.05)?;
    let predicted = fourth_mass_derivative();
    out.push(CheckResult::within(
        "mass_fourth_derivative_fd",
        predicted,
        fourth.value,
        1e-3 * predicted,
    ));
    out.push(CheckResult::within(
        "mass_fourth_derivative_beta_route",
        predicted,
        beta_fourth_derivative_check(),
        1e-10 * predicted,
    ));
    let (exact, quadrature) = second_mass_derivative_identity();
    out.push(CheckResult::residual(
        "second_derivative_moment_combination",
        ratio_to_f64(exact),
        0.0,
    ));
    out.push(CheckResult::residual(
        "second_derivative_moment_quadrature",
        quadrature,
        1e-12,
    ));
    Ok(out)
}

/// Rational sech moments against quadrature and the closed-form list.
fn check_moments() -> Result<Vec<CheckResult>> {
    let closed = [2.0, 4.0 / 3.0, 16.0 / 15.0, 32.0 / 35.0];
    let mut out = Vec::new();
    for k in 1..=4u32 {
        let exact = ratio_to_f64(sech_moment_exact(k));
        out.push(CheckResult::within(
            format!("sech_moment_{k}_closed_form"),
            closed[(k - 1) as usize],
            exact,
            0.0,
        ));
        out.push(CheckResult::within(
            format!("sech_moment_{k}_quadrature"),
            exact,
            sech_moment_quadrature(k),
            1e-12,
        ));
    }
    Ok(out)
}

/// Quartic opening of the mass-matching scale at the origin.
fn check_gamma_quartic() -> Result<Vec<CheckResult>> {
    let fit = fit_gamma_quartic(&default_sixth_order_samples())?;
    Ok(vec![CheckResult::within(
        "gamma_quartic_coefficient",
        fit.predicted_coefficient,
        fit.fitted_coefficient,
        0.02 * fit.predicted_coefficient.abs(),
    )])
}

/// Sixth-order opening of the critical action gap.
fn check_action_sixth() -> Result<Vec<CheckResult>> {
    let fit = fit_action_sixth_order(&default_sixth_order_samples())?;
    Ok(vec![CheckResult::within(
        "action_sixth_order_coefficient",
        fit.predicted_coefficient,
        fit.fitted_coefficient,
        0.02 * fit.predicted_coefficient.abs(),
    )])
}

/// Quadratic opening of the action gap over interior base points.
fn check_action_quadratic() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let fit = fit_action_quadratic(0.1, &default_quadratic_samples(0.1))?;
    out.push(CheckResult::within(
        "action_quadratic_coefficient_l_0.10",
        fit.predicted_coefficient,
        fit.fitted_coefficient,
        0.10 * fit.predicted_coefficient.abs(),
    ));
    for l in [0.05, 0.1, 0.2] {
        let fit = fit_action_quadratic(l, &default_quadratic_samples(l))?;
        out.push(CheckResult::above(
            format!("action_quadratic_positive_l_{l:.2}"),
            fit.fitted_coefficient,
            0.0,
        ));
    }
    Ok(out)
}

/// Inertia and kernel structure of the linearized operators, plus
/// eigenvalue stability across resolutions.
fn check_spectra() -> Result<Vec<CheckResult>> {
    let c0 = critical_speed();
    let (nx, lx) = (1024, 80.0);
    let mut out = Vec::new();

    let s0 = spectrum(&build_l(0, c0, nx, lx)?, 6)?;
    out.push(CheckResult::within(
        "l0_negative_count",
        1.0,
        s0.negative_count as f64,
        0.0,
    ));
    let overlap0 = s0
        .near_zero
        .iter()
        .map(|(_, o)| *o)
        .fold(0.0f64, f64::max);
    out.push(CheckResult::above("l0_kernel_overlap", overlap0, 0.999));

    let s4 = spectrum(&build_fourth_order(c0, nx, lx)?, 8)?;
    out.push(CheckResult::within(
        "fourth_order_negative_count",
        0.0,
        s4.negative_count as f64,
        0.0,
    ));
    out.push(CheckResult::within(
        "fourth_order_near_zero_count",
        1.0,
        s4.near_zero.len() as f64,
        0.0,
    ));
    let overlap4 = s4
        .near_zero
        .iter()
        .map(|(_, o)| *o)
        .fold(0.0f64, f64::max);
    out.push(CheckResult::above(
        "fourth_order_kernel_overlap",
        overlap4,
        0.999,
    ));
    let next_cluster = s4
        .eigenvalues
        .iter()
        .copied()
        .find(|l| l.abs() >= 1e-4)
        .unwrap_or(f64::NAN);
    out.push(CheckResult::above(
        "fourth_order_next_cluster",
        next_cluster,
        0.95,
    ));

    for n in [2u32, 3u32] {
        let s = spectrum(&build_l(n, c0, nx, lx)?, 1)?;
        out.push(CheckResult::above(
            format!("l{n}_smallest_eigenvalue"),
            s.eigenvalues[0],
            0.0,
        ));
    }

    // Resolution stability: the five smallest eigenvalues of each
    // operator move by less than 1e-6 from nx = 512 to nx = 1024.
    let mut worst: f64 = 0.0;
    for n in [0u32, 2, 3] {
        let coarse = spectrum(&build_l(n, c0, 512, lx)?, 5)?;
        let fine = spectrum(&build_l(n, c0, 1024, lx)?, 5)?;
        for (a, b) in coarse.eigenvalues.iter().zip(&fine.eigenvalues) {
            worst = worst.max((a - b).abs());
        }
    }
    let coarse = spectrum(&build_fourth_order(c0, 512, lx)?, 5)?;
    let fine = spectrum(&build_fourth_order(c0, 1024, lx)?, 5)?;
    for (a, b) in coarse.eigenvalues.iter().zip(&fine.eigenvalues) {
        worst = worst.max((a - b).abs());
    }
    out.push(CheckResult::residual(
        "eigenvalue_resolution_stability",
        worst,
        1e-6,
    ));
    Ok(out)
}

/// Closed-form kernel elements: the degenerate fourth-order kernel, the
/// exponentially windowed generators at mu = ±sqrt(3), and the
/// antiderivative identity tying the kernel to the scaling direction.
fn check_kernels() -> Result<Vec<CheckResult>> {
    let g = make_grid(1024, 80.0, 8)?;
    let mut out = Vec::new();

    let m = build_fourth_order(critical_speed(), g.nx, g.lx)?;
    let kernel = g_mu(1.0, g)?.deriv(1);
    out.push(CheckResult::residual(
        "fourth_order_kernel_residual",
        m.apply(&kernel)?.max_abs(),
        1e-6,
    ));

    let mu = 3.0f64.sqrt();
    out.push(CheckResult::residual(
        "kernel_window_residual_mu_plus",
        kernel_window_residual(mu, 5.0)?,
        1e-4,
    ));
    out.push(CheckResult::residual(
        "kernel_window_residual_mu_minus",
        kernel_window_residual(-mu, 5.0)?,
        1e-4,
    ));

    let anti = vstar_antideriv(g);
    let scale = 1.0 / (4.0 * 2.0f64.sqrt());
    let worst = kernel
        .values
        .iter()
        .zip(&anti.values)
        .map(|(k, a)| (k + scale * a).abs())
        .fold(0.0f64, f64::max);
    out.push(CheckResult::residual(
        "kernel_antiderivative_identity",
        worst,
        1e-10,
    ));
    Ok(out)
}

/// Planted-parameter round trip and the Newton contraction order.
fn check_modulation() -> Result<Vec<CheckResult>> {
    let g = make_grid(512, 80.0, 16)?;
    let planted = SolitonParams::new((0.08, -0.06), 1.05, 2.0)?;
    let u = scaled_zaitsev(&planted, g)?;
    let guess = SolitonParams::new((0.1, 0.0), 1.0, 1.6)?;
    let state = decompose(&u, &guess)?;

    let err = (state.params.a_vec.0 - planted.a_vec.0)
        .abs()
        .max((state.params.a_vec.1 - planted.a_vec.1).abs())
        .max((state.params.gamma - planted.gamma).abs())
        .max((state.params.rho - planted.rho).abs());
    let mut out = vec![CheckResult::residual(
        "modulation_roundtrip_parameter_error",
        err,
        1e-8,
    )];

    // Quadratic convergence: some Newton step must contract the residual
    // at second order, w_{k+1} <= 10 w_k^2.
    let w = &state.residual_history;
    let best = w
        .windows(2)
        .map(|p| p[1] / (p[0] * p[0]).max(1e-300))
        .fold(f64::INFINITY, f64::min);
    out.push(CheckResult::below(
        "newton_quadratic_contraction",
        best,
        10.0,
    ));
    Ok(out)
}

/// Scale-gap sign and ratio stability on seeded equal-mass samples.
fn check_mass_gap() -> Result<Vec<CheckResult>> {
    let g = make_grid(512, 80.0, 16)?;
    let l = 0.1;
    let guess = SolitonParams::new((l, 0.0), 1.0, 0.0)?;

    let gaps: Result<Vec<f64>> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let u = equal_mass_sample(l, 5e-3, seed, g)?;
            Ok(scale_gap_check(&u, l, &guess)?.gap)
        })
        .collect();
    let min_gap = gaps?.into_iter().fold(f64::INFINITY, f64::min);
    let mut out = vec![CheckResult::above(
        "mass_gap_min_over_seeds",
        min_gap,
        -1e-10,
    )];

    let mut ratios = Vec::new();
    for delta in [1e-2, 5e-3, 2.5e-3] {
        let u = equal_mass_sample(l, delta, 1, g)?;
        ratios.push(scale_gap_check(&u, l, &guess)?.ratio);
    }
    let spread = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        / ratios.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(CheckResult::within("mass_gap_ratio_spread", 1.0, spread, 1.0));
    Ok(out)
}

/// Positivity of the Lyapunov quotient across base points, seeds, and
/// perturbation sizes.
fn check_lyapunov() -> Result<Vec<CheckResult>> {
    let g = make_grid(512, 80.0, 16)?;
    let deltas = [2.5e-3, 5e-3, 1e-2];
    let mut out = Vec::new();
    for l in [0.0, 0.05, 0.1] {
        let guess = SolitonParams::new((l, 0.0), 1.0, 0.0)?;
        let ratios: Result<Vec<f64>> = (0..50u64)
            .into_par_iter()
            .map(|seed| {
                let delta = deltas[(seed % 3) as usize];
                let u = equal_mass_sample(l, delta, seed, g)?;
                Ok(lyapunov_inequality_check(&u, l, &guess)?.ratio)
            })
            .collect();
        let min_ratio = ratios?.into_iter().fold(f64::INFINITY, f64::min);
        out.push(CheckResult::above(
            format!("lyapunov_min_ratio_l_{l:.2}"),
            min_ratio,
            0.0,
        ));
    }
    Ok(out)
}

/// Conservation, traveling speed, and reversibility of the integrator.
/// The step size is set by the measured ~dt^5 mass-drift scaling: 1.6e-3
/// keeps ten units of time under the 1e-8 relative budget with margin.
fn check_evolution() -> Result<Vec<CheckResult>> {
    let g = make_grid(1024, 80.0, 32)?;
    let a = 0.1;
    let z = zaitsev(a, g)?;
    let cfg = EvolutionConfig {
        dt: 0.0016,
        t_end: 10.0,
        observer_stride: 125,
        ..EvolutionConfig::default()
    };
    let (report, _) = run(&z, &cfg, a)?;

    let m0 = report.mass_series[0];
    let mass_drift = report
        .mass_series
        .iter()
        .map(|m| ((m - m0) / m0).abs())
        .fold(0.0f64, f64::max);
    let e0 = report.energy_series[0];
    let energy_drift = report
        .energy_series
        .iter()
        .map(|e| ((e - e0) / e0).abs())
        .fold(0.0f64, f64::max);
    let c = speed(a)?;

    let reverse = reverse_time_check(&z, &cfg)?;
    Ok(vec![
        CheckResult::residual("evolution_mass_drift", mass_drift, 1e-8),
        CheckResult::residual("evolution_energy_drift", energy_drift, 1e-6),
        CheckResult::within("evolution_speed", c, report.speed_estimate, 1e-3 * c),
        CheckResult::residual("evolution_reverse_defect", reverse, 1e-6),
    ])
}

/// Orbital excursion ratios over a (a, delta) sweep at T = 20, with the
/// delta-halving growth bound and the unperturbed floor.
fn check_stability() -> Result<Vec<CheckResult>> {
    let g = make_grid(512, 80.0, 32)?;
    let configs: Vec<(f64, f64)> = [0.0, 0.1]
        .iter()
        .flat_map(|&a| [5e-4, 1e-3].iter().map(move |&d| (a, d)))
        .collect();
    let reports: Result<Vec<_>> = configs
        .par_iter()
        .map(|&(a, d)| stability_experiment(a, d, 20.0, 7, g, 0.0025))
        .collect();
    let mut out = Vec::new();
    for rep in reports? {
        out.push(CheckResult::below(
            format!("stability_excursion_ratio_a_{:.2}_delta_{:.0e}", rep.a, rep.delta),
            rep.ratio,
            20.0,
        ));
        out.push(CheckResult::within(
            format!("stability_halving_growth_a_{:.2}_delta_{:.0e}", rep.a, rep.delta),
            1.0,
            rep.halved_ratio / rep.ratio,
            1.0,
        ));
    }
    // Unperturbed orbit: the residual excursion is pure integrator error;
    // dt = 1e-3 keeps the ~dt^4 orbit drift under 1e-6 over T = 20.
    let exact = stability_experiment(0.0, 0.0, 20.0, 7, g, 1e-3)?;
    out.push(CheckResult::residual(
        "stability_unperturbed_floor",
        exact.trajectory.max_dist,
        1e-6,
    ));
    Ok(out)
}

/// Sign of the second-mode ground state across the branch of speeds.
fn check_dichotomy() -> Result<Vec<CheckResult>> {
    let rows = coercivity_vs_speed(&[1.5, critical_speed(), 3.0], 1024, 80.0)?;
    Ok(vec![
        CheckResult::above(
            "dichotomy_smallest_at_c_1.50",
            rows[0].smallest_eigenvalue,
            0.0,
        ),
        CheckResult::residual(
            "dichotomy_smallest_at_critical",
            rows[1].smallest_eigenvalue,
            1e-4,
        ),
        CheckResult::below(
            "dichotomy_smallest_at_c_3.00",
            rows[2].smallest_eigenvalue,
            0.0,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_are_unique_and_resolvable() {
        let mut names: Vec<&str> = suites().iter().map(|s| s.name).collect();
        let count = names.len();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), count, "suite names must be unique");
        assert!(
            matches!(run_suite("definitely-not-a-suite"), Err(Error::Config(_))),
            "unknown suites must be rejected with a config error"
        );
    }

    #[test]
    fn fast_suites_pass_end_to_end() {
        for name in ["closed-form", "moments"] {
            let results = run_suite(name).unwrap();
            assert!(!results.is_empty(), "suite {name} must produce checks");
            for c in &results {
                assert!(
                    c.pass,
                    "check {} failed: predicted {}, measured {}, tolerance {}",
                    c.name, c.predicted, c.measured, c.tolerance
                );
            }
        }
    }

    #[test]
    fn verdict_constructors_encode_their_sidedness() {
        assert!(CheckResult::within("w", 1.0, 1.05, 0.1).pass);
        assert!(!CheckResult::within("w", 1.0, 1.2, 0.1).pass);
        assert!(CheckResult::residual("r", -1e-9, 1e-8).pass);
        assert!(!CheckResult::residual("r", f64::NAN, 1e-8).pass);
        assert!(CheckResult::above("a", 0.5, 0.0).pass);
        assert!(!CheckResult::above("a", 0.0, 0.0).pass);
        assert!(CheckResult::below("b", -0.5, 0.0).pass);
        assert!(!CheckResult::below("b", 0.0, 0.0).pass);
    }
}
