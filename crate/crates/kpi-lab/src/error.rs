//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid sizes must be even and at least 8, got nx={nx}, ny={ny}")]
    GridSize { nx: usize, ny: usize },

    #[error("box length must be positive, got lx={0}")]
    BoxLength(f64),

    #[error("parameter {name}={value} outside valid range {range}")]
    ParamRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error(
        "field violates the zero-x-mean precondition: max |u-hat(0,q)| = {max_coeff:.3e} \
         relative to field scale {scale:.3e}"
    )]
    MeanZeroViolation { max_coeff: f64, scale: f64 },

    #[error("grids do not match: ({0}, {1}, {2}) vs ({3}, {4}, {5})")]
    GridMismatch(usize, f64, usize, usize, f64, usize),

    #[error("matrix is not numerically symmetric: max asymmetry {0:.3e} exceeds 1e-12 of scale")]
    Asymmetry(f64),

    #[error("constraint {index} is linearly dependent on the earlier constraints")]
    DegenerateConstraints { index: usize },
    #[error("field mass {got} does not match the required reference mass {expected}")]
    MassMismatch { expected: f64, got: f64 },
    #[error("dt {dt} violates the advective bound dt * max|u| * xi_cut = {cfl} > 1")]
    CflViolation { dt: f64, cfl: f64 },

    #[error("dense symmetric eigensolver failed to converge on a {size} x {size} matrix")]
    Eigensolver { size: usize },

    #[error(
        "finite-difference step {step} is unstable for order {order}: \
         Richardson corrections grow instead of shrinking"
    )]
    UnstableStep { order: u32, step: f64 },

    #[error("fit needs at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("Newton iteration failed to converge after {iterations} steps; last residual {last_residual:.3e}")]
    NewtonDiverged {
        iterations: usize,
        last_residual: f64,
    },

    #[error("solution blew up at t={t:.6}: max |u| = {max_abs:.3e} exceeds {threshold:.3e}")]
    BlowUp { t: f64, max_abs: f64, threshold: f64 },

    #[error("solution lost finiteness at t={t:.6} (NaN or infinity detected)")]
    NotFinite { t: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("binary field dump is malformed: {0}")]
    MalformedDump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
