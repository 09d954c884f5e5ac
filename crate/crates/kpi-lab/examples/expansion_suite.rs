//! Small-parameter structure of the branch: mass derivatives at the
//! origin, the exact sech moments they reduce to, and the measured
//! openings of the mass-matching scale and the action gap.
//!
//! Three quantities organize the stability analysis. The branch mass
//! M(Z(a)) is stationary to third order at a = 0 and opens quartically
//! with the closed-form coefficient 128 * 3^{9/4} * pi. The
//! mass-matching scale gamma_0(a) therefore opens quartically with
//! coefficient -1/4, and the action gap at the critical point opens at
//! sixth order. Away from the origin the gap is an honest quadratic.
//! Run with `cargo run --example expansion_suite`.

use kpi_lab::error::Result;
use kpi_lab::expansions::{
    beta_fourth_derivative_check, default_quadratic_samples, default_sixth_order_samples,
    fit_action_quadratic, fit_action_sixth_order, fit_gamma_quartic, mass_derivative_at_zero,
    sech_moment, sech_moment_quadrature,
};

fn main() -> Result<()> {
    println!("sech moments m_k = integral sech^{{2k}}:");
    println!("{:>3} {:>20} {:>20}", "k", "closed form", "quadrature");
    for k in 1..=4 {
        println!(
            "{k:>3} {:>20.15} {:>20.15}",
            sech_moment(k),
            sech_moment_quadrature(k)
        );
    }

    println!("\nbranch-mass derivatives at a = 0 (central differences, Richardson):");
    println!("{:>6} {:>18} {:>12}", "order", "value", "est. error");
    for order in 1..=4 {
        let est = mass_derivative_at_zero(order, 0.05)?;
        println!(
            "{order:>6} {:>18.8} {:>12.2e}",
            est.value, est.richardson_error
        );
    }
    println!(
        "closed-form fourth derivative  = {:.8}  (128 * 3^(9/4) * pi)",
        beta_fourth_derivative_check()
    );

    let gamma = fit_gamma_quartic(&default_sixth_order_samples())?;
    println!("\nmass-matching scale gamma_0(a) - 1 ~ k a^4:");
    println!(
        "  fitted k = {:.8}, predicted {:.8}, deviation {:.2e}",
        gamma.fitted_coefficient, gamma.predicted_coefficient, gamma.relative_deviation
    );

    let sixth = fit_action_sixth_order(&default_sixth_order_samples())?;
    println!("\ncritical action gap ~ k a^6:");
    println!(
        "  fitted k = {:.6}, predicted {:.6}, deviation {:.2e}",
        sixth.fitted_coefficient, sixth.predicted_coefficient, sixth.relative_deviation
    );

    println!("\naction gap over interior base points ~ K(l) (a - l)^2:");
    println!("{:>6} {:>14} {:>14} {:>12}", "l", "fitted K", "predicted K", "deviation");
    for l in [0.05, 0.1, 0.2] {
        let fit = fit_action_quadratic(l, &default_quadratic_samples(l))?;
        println!(
            "{l:>6.2} {:>14.8} {:>14.8} {:>12.2e}",
            fit.fitted_coefficient, fit.predicted_coefficient, fit.relative_deviation
        );
    }

    Ok(())
}
