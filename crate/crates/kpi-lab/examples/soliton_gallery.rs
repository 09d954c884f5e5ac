//! Tour of the soliton family: the line soliton Q_c, the transversal
//! branch Z(a) it sits inside, and the scaled members Z(a, gamma).
//!
//! The branch bifurcates from the critical speed c0 = 4/sqrt(3): Z(0)
//! coincides with Q_{c0} exactly, and as a grows the member picks up a
//! y-modulation with speed c(a) = (4 - 2a^2 + a^4) / (sqrt(3)(1 - a^2)).
//! Mass scales along the gamma direction as gamma^{3/2}, which is what
//! the modulation module later exploits to match masses across the
//! family. Run with `cargo run --example soliton_gallery`.

use kpi_lab::error::Result;
use kpi_lab::functionals::{action, mass};
use kpi_lab::grid::make_grid;
use kpi_lab::solitons::{
    critical_speed, line_soliton, scaled_zaitsev, speed, zaitsev, SolitonParams,
};

fn main() -> Result<()> {
    let g = make_grid(1024, 80.0, 32)?;
    let c0 = critical_speed();

    println!("critical speed c0 = 4/sqrt(3) = {c0:.12}");
    let q = line_soliton(c0, g)?;
    let mut z0 = zaitsev(0.0, g)?;
    z0.add_scaled(-1.0, &q);
    println!(
        "max |Z(0) - Q_c0| = {:.3e}  (the branch starts at the line soliton)\n",
        z0.max_abs()
    );

    println!("branch members on a {}x{} grid, lx = {}:", g.nx, g.ny, g.lx);
    println!("{:>5} {:>16} {:>16} {:>16} {:>16}", "a", "speed c(a)", "mass", "energy", "peak");
    for a in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5] {
        let z = zaitsev(a, g)?;
        let c = speed(a)?;
        let report = action(&z, c)?;
        println!(
            "{a:>5.2} {c:>16.10} {:>16.10} {:>16.10} {:>16.10}",
            report.mass,
            report.energy,
            z.max_abs()
        );
    }

    // The scale direction: mass(Z(a, gamma)) = gamma^{3/2} mass(Z(a)).
    println!("\nmass along the scale direction at a = 0.2:");
    let base = mass(&zaitsev(0.2, g)?);
    println!("{:>8} {:>16} {:>16}", "gamma", "mass", "gamma^1.5 * base");
    for gamma in [0.9, 1.0, 1.1, 1.25] {
        let member = scaled_zaitsev(&SolitonParams::new((0.2, 0.0), gamma, 0.0)?, g)?;
        println!(
            "{gamma:>8.2} {:>16.10} {:>16.10}",
            mass(&member),
            gamma.powf(1.5) * base
        );
    }

    Ok(())
}
