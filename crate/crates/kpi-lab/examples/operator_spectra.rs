//! Spectra of the linearized operators around the line soliton: the
//! transverse-mode family L_n and the fourth-order form -dx L_1 dx.
//!
//! The mode-0 operator L_0 keeps the classical one-negative-direction
//! picture with kernel dx Q. At the critical speed the mode-1 operator
//! L_1 loses coercivity: its fourth-order conjugate -dx L_1 dx is
//! nonnegative with a simple kernel spanned by dx g_1, and the scan
//! across speeds shows the smallest L_1 eigenvalue crossing zero there.
//! Higher modes stay safely positive.
//! Run with `cargo run --example operator_spectra` (dense eigensolves,
//! a few seconds).

use kpi_lab::error::Result;
use kpi_lab::linop::{build_fourth_order, build_l, coercivity_vs_speed, spectrum};
use kpi_lab::solitons::critical_speed;

fn main() -> Result<()> {
    let (nx, lx) = (512, 80.0);
    let c0 = critical_speed();

    for n in [0u32, 2, 3] {
        let report = spectrum(&build_l(n, c0, nx, lx)?, 5)?;
        println!(
            "L_{n} at c0: negatives = {}, smallest eigenvalues = {:?}",
            report.negative_count,
            report
                .eigenvalues
                .iter()
                .map(|l| (l * 1e6).round() / 1e6)
                .collect::<Vec<_>>()
        );
        for (eigenvalue, overlap) in &report.near_zero {
            println!("       near-zero {eigenvalue:+.3e} with kernel overlap {overlap:.6}");
        }
    }

    let fourth = spectrum(&build_fourth_order(c0, nx, lx)?, 6)?;
    println!(
        "\n-dx L_1 dx at c0: negatives = {}, smallest eigenvalues = {:?}",
        fourth.negative_count,
        fourth
            .eigenvalues
            .iter()
            .map(|l| (l * 1e6).round() / 1e6)
            .collect::<Vec<_>>()
    );
    for (eigenvalue, overlap) in &fourth.near_zero {
        println!("       near-zero {eigenvalue:+.3e} with dx g_1 overlap {overlap:.6}");
    }

    println!("\nsmallest L_1 eigenvalue across speeds (sign change at c0):");
    println!("{:>10} {:>16}", "c", "min eigenvalue");
    for row in coercivity_vs_speed(&[1.0, 1.5, 2.0, c0, 2.5, 3.0], nx, lx)? {
        println!("{:>10.6} {:>16.3e}", row.c, row.smallest_eigenvalue);
    }

    Ok(())
}
