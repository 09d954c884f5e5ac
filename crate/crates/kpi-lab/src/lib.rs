//! Spectral laboratory for line solitons of the KP-I equation on R x T.
//!
//! The equation under study, written for u(t, x, y) with x on a (large
//! periodic) line and y on the 2pi circle, is
//!
//! ```text
//! (u_t + u_xxx + u u_x)_x - u_yy = 0.
//! ```
//!
//! Traveling waves u(x - ct, y) solving the stationary equation
//!
//! ```text
//! -u_xx + dx^{-2} u_yy + c u - u^2/2 = 0
//! ```
//!
//! include the y-independent line soliton `Q_c = 3c sech^2(sqrt(c) x / 2)`
//! and, above the critical speed `c0 = 4/sqrt(3)`, a genuinely
//! two-dimensional family of periodically modulated solitons. This crate
//! provides the discrete tools to build those profiles, evaluate the
//! conserved functionals and their expansions, probe the linearized
//! operators, decompose nearby fields into modulation coordinates, and run
//! the time evolution, all on a Fourier pseudospectral grid.
//!
//! # Module map
//!
//! * [`grid`], [`fft`], [`field`]: grids, transforms, derivatives and
//!   antiderivatives, quadrature, the weighted `Z^1` norm, dump formats.
//! * [`solitons`]: closed-form profiles (line soliton, modulated family,
//!   kernel elements) and their speed/scaling relations.
//! * [`functionals`]: mass, energy, action, stationary residual, and the
//!   translation-minimized distance.
//! * [`expansions`]: quantitative expansions (mass derivatives along the
//!   family, quartic/sixth-order coefficients, scaling fits) with Richardson
//!   differentiation and exact rational bookkeeping.
//! * [`linop`]: dense spectral matrices for the linearized operators, their
//!   spectra, and constrained coercivity estimates.
//! * [`modulation`]: orthogonality residuals and the Newton decomposition
//!   u = translate(Z(a, gamma)) + eta.
//! * [`evolve`]: integrating-factor RK4 time stepping with conservation
//!   tracking and perturbation experiments.
//! * [`checks`]: the named verification suites shared by the `verify`
//!   subcommand and the acceptance tests.
//! * [`cli`]: subcommand parsing and dispatch, flat key=value config files,
//!   JSON reports, field dumps.
//!
//! # Examples directory
//!
//! Each major capability has a runnable example:
//!
//! * `soliton_gallery`: builds the soliton family, prints peak values,
//!   speeds, masses, and dumps profiles to CSV.
//! * `expansion_suite`: mass-expansion derivatives and the quartic and
//!   sixth-order coefficient measurements.
//! * `operator_spectra`: eigenvalues of the linearized operators and the
//!   constrained coercivity scan.
//! * `modulation_roundtrip`: decomposes a perturbed soliton and verifies
//!   the recovered coordinates.
//! * `soliton_evolution`: propagates a modulated soliton and reports speed
//!   and conservation diagnostics.
//! * `stability_sweep`: seeds random perturbations at several amplitudes
//!   and tabulates worst-case drift ratios.

pub mod checks;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod expansions;
pub mod fft;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod linop;
pub mod modulation;
pub mod solitons;

pub use error::{Error, Result};
pub use field::{Field, Profile1D};
pub use grid::{make_grid, Grid};
