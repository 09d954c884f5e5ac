//! Time integration of the evolution equation and the orbital-stability
//! experiment.
//!
//! The dynamics, written for the x-antiderivative-compatible form,
//!
//!     u_t = -u_xxx - u u_x + dx^{-1} u_yy,
//!
//! rotate each Fourier mode e^{i(xi x + k y)} with the purely imaginary
//! symbol i omega, omega = xi^3 + k^2/xi. The stepper factors that exact
//! rotation out (integrating factor) and applies classical RK4 to the
//! remaining nonlinearity -dx(u^2)/2, evaluated pseudospectrally with the
//! 2/3 dealiasing rule; the state is kept truncated to the retained band,
//! so squaring is alias-free.
//!
//! The xi = 0 column is frozen at zero for all time: dx^{-1} is undefined
//! there, the nonlinear term never feeds it, and initial data are
//! projected. Removing the x-mean m of the initial datum is a Galilean
//! boost, so a soliton of speed c travels at c - m in the evolution frame;
//! the reported speed estimate adds the stored offset back.
//!
//! Step-size guard: with the exact linear rotation, the remaining
//! stability constraint is advective. The run refuses configurations with
//! dt * max|u0| * xi_cut > 1, where xi_cut is the largest retained
//! frequency after dealiasing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::Field;
use crate::functionals::{energy, mass, orbit_distance};
use crate::grid::Grid;
use crate::modulation::{decompose, seeded_bump, ModulationState};
use crate::solitons::{zaitsev, SolitonParams};

/// Step size, horizon, and observation plumbing for one trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// Time step; must be positive and below the advective bound.
    pub dt: f64,
    /// Integration horizon.
    pub t_end: f64,
    /// Apply the 2/3 truncation rule (on by default; turning it off is
    /// only sensible for short accuracy probes).
    pub dealias: bool,
    /// Observers sample every this many steps (and always at the end).
    pub observer_stride: usize,
    /// When set, observers also run the modulation decomposition with
    /// this family parameter as the initial |a| hint.
    pub track_modulation: Option<f64>,
}

impl Default for EvolutionConfig {
    fn default() -> EvolutionConfig {
        EvolutionConfig {
            dt: 0.01,
            t_end: 10.0,
            dealias: true,
            observer_stride: 20,
            track_modulation: None,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::ParamRange {
                name: "dt",
                value: self.dt,
                range: "(0, inf)",
            });
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::ParamRange {
                name: "t_end",
                value: self.t_end,
                range: "(0, inf)",
            });
        }
        if self.observer_stride == 0 {
            return Err(Error::ParamRange {
                name: "observer_stride",
                value: 0.0,
                range: "1..",
            });
        }
        Ok(())
    }
}

/// One modulation observation along a trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModulationSummary {
    pub t: f64,
    pub gamma: f64,
    pub rho: f64,
    pub a_vec: (f64, f64),
    pub eta_z1: f64,
    pub newton_iterations: usize,
}

impl ModulationSummary {
    fn from_state(t: f64, s: &ModulationState) -> ModulationSummary {
        ModulationSummary {
            t,
            gamma: s.params.gamma,
            rho: s.params.rho,
            a_vec: s.params.a_vec,
            eta_z1: s.eta.z1_norm_extended(),
            newton_iterations: s.newton_iterations,
        }
    }
}

/// Observables of one trajectory; all series share one clock.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub times: Vec<f64>,
    pub mass_series: Vec<f64>,
    pub energy_series: Vec<f64>,
    /// Shift-minimized weighted distance to the projected reference
    /// orbit Z(l).
    pub dist_series: Vec<f64>,
    /// Mass fraction in the outer tenth of the box; the run is physically
    /// meaningful only while this stays small (radiation re-enters).
    pub tail_series: Vec<f64>,
    pub modulation_series: Vec<ModulationSummary>,
    pub max_dist: f64,
    /// x-mean removed by the initial projection; the Galilean frame
    /// offset between observed and family speeds.
    pub mean_offset: f64,
    /// Least-squares slope of the tracked peak plus the frame offset;
    /// zero when fewer than two observations exist.
    pub speed_estimate: f64,
    /// Advective step-size ratio dt * max|u0| * xi_cut at startup.
    pub cfl: f64,
}

/// Integrating-factor RK4 stepper with precomputed phase tables on one
/// grid. The spectral state lives in the caller; the stepper owns only
/// scratch space.
pub struct Stepper {
    grid: Grid,
    dt: f64,
    /// e^{i omega dt/2} per mode.
    half_phase: Vec<Complex64>,
    /// e^{i omega dt} per mode.
    full_phase: Vec<Complex64>,
    /// -i xi / 2 per mode, zeroed outside the retained band.
    dx_half: Vec<Complex64>,
    /// Retained-band mask after the 2/3 rule (always drops xi = 0 and
    /// the Nyquist lines).
    mask: Vec<f64>,
    scratch: Vec<f64>,
}

impl Stepper {
    /// Tables for one (grid, dt, dealias) combination; dt may be negative
    /// for reverse-time runs.
    pub fn new(grid: Grid, dt: f64, dealias: bool) -> Stepper {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut half_phase = vec![Complex64::default(); nx * ny];
        let mut full_phase = vec![Complex64::default(); nx * ny];
        let mut dx_half = vec![Complex64::default(); nx * ny];
        let mut mask = vec![0.0; nx * ny];
        let (px_cut, py_cut) = band_limits(grid, dealias);
        for q in 0..ny {
            let ky = grid.ky(q);
            let iy = q.min(ny - q);
            for p in 0..nx {
                let i = q * nx + p;
                let xi = grid.xi(p);
                let ix = p.min(nx - p);
                let keep = ix <= px_cut && iy <= py_cut && p != nx / 2 && q != ny / 2;
                if !keep {
                    continue;
                }
                mask[i] = 1.0;
                if p == 0 {
                    // The xi = 0 column carries no dynamics (omega is set
                    // to zero, the nonlinearity never feeds it), but it
                    // stays in the band so products of unprojected fields
                    // keep their mean interactions.
                    half_phase[i] = Complex64::new(1.0, 0.0);
                    full_phase[i] = Complex64::new(1.0, 0.0);
                } else {
                    let omega = xi * xi * xi + ky * ky / xi;
                    half_phase[i] = Complex64::from_polar(1.0, 0.5 * omega * dt);
                    full_phase[i] = Complex64::from_polar(1.0, omega * dt);
                    dx_half[i] = Complex64::new(0.0, -0.5 * xi);
                }
            }
        }
        Stepper {
            grid,
            dt,
            half_phase,
            full_phase,
            dx_half,
            mask,
            scratch: vec![0.0; nx * ny],
        }
    }

    /// Truncate a spectrum onto the retained band in place.
    pub fn truncate(&self, c: &mut [Complex64]) {
        for (z, m) in c.iter_mut().zip(&self.mask) {
            if *m == 0.0 {
                *z = Complex64::default();
            }
        }
    }

    /// N(u_hat) = -(i xi / 2) (u^2)^, truncated to the retained band.
    fn nonlinear(&mut self, c: &[Complex64]) -> Vec<Complex64> {
        let g = self.grid;
        let physical = fft::inverse(c, g.nx, g.ny);
        for (s, v) in self.scratch.iter_mut().zip(&physical) {
            *s = v * v;
        }
        let mut sq = fft::forward(&self.scratch, g.nx, g.ny);
        for (z, d) in sq.iter_mut().zip(&self.dx_half) {
            *z *= *d;
        }
        sq
    }

    /// One integrating-factor RK4 step of the spectral state.
    pub fn step(&mut self, c: &mut Vec<Complex64>) {
        let dt = self.dt;
        let a = self.nonlinear(c);

        let mut stage: Vec<Complex64> = (0..c.len())
            .map(|i| (c[i] + 0.5 * dt * a[i]) * self.half_phase[i])
            .collect();
        let b = self.nonlinear(&stage);

        for i in 0..c.len() {
            stage[i] = c[i] * self.half_phase[i] + 0.5 * dt * b[i];
        }
        let d3 = self.nonlinear(&stage);

        for i in 0..c.len() {
            stage[i] = c[i] * self.full_phase[i] + dt * d3[i] * self.half_phase[i];
        }
        let d4 = self.nonlinear(&stage);

        for i in 0..c.len() {
            c[i] = self.full_phase[i] * (c[i] + dt / 6.0 * a[i])
                + dt / 6.0 * (2.0 * self.half_phase[i] * (b[i] + d3[i]) + d4[i]);
        }
    }
}

/// Largest retained (ix, iy) index pair under the truncation rule.
fn band_limits(grid: Grid, dealias: bool) -> (usize, usize) {
    if dealias {
        (grid.nx / 3, grid.ny / 3)
    } else {
        (grid.nx / 2 - 1, grid.ny / 2 - 1)
    }
}

/// Largest retained |xi| under the truncation rule; the advective scale
/// of the step-size bound.
pub fn cutoff_frequency(grid: Grid, dealias: bool) -> f64 {
    let (px, _) = band_limits(grid, dealias);
    2.0 * std::f64::consts::PI * px as f64 / grid.lx
}

/// Right-hand side -u_xxx - u u_x + dx^{-1} u_yy evaluated spectrally.
/// This is the diagnostic form: derivatives act on the full spectrum and
/// the product is taken pointwise, so the result measures the continuum
/// identity rather than the truncated system the stepper integrates.
/// Requires the x-mean of u to be constant in y (else the antiderivative
/// of u_yy is undefined).
pub fn rhs(u: &Field) -> Result<Field> {
    let nonlocal = u.deriv_y(2).antideriv_x(1)?;
    let mut out = u.mul_pointwise(&u.deriv_x(1)).scaled(-1.0);
    out.add_scaled(-1.0, &u.deriv_x(3));
    out.add_scaled(1.0, &nonlocal);
    Ok(out)
}

/// Peak x-position by quadratic interpolation around the grid argmax.
fn peak_position(u: &Field) -> f64 {
    let g = u.grid;
    let (mut best, mut bi) = (f64::NEG_INFINITY, 0);
    for (i, v) in u.values.iter().enumerate() {
        if *v > best {
            best = *v;
            bi = i;
        }
    }
    let (iy, ix) = (bi / g.nx, bi % g.nx);
    let at = |j: isize| u.at(((ix as isize + j).rem_euclid(g.nx as isize)) as usize, iy);
    let (fm, f0, fp) = (at(-1), at(0), at(1));
    let denom = fm - 2.0 * f0 + fp;
    let offset = if denom.abs() > 1e-300 {
        (0.5 * (fm - fp) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    -0.5 * g.lx + (ix as f64 + offset) * g.dx()
}

/// Least-squares slope of positions against times, unwrapping the
/// periodic jumps first.
fn fitted_speed(times: &[f64], peaks: &[f64], lx: f64) -> f64 {
    if times.len() < 2 {
        return 0.0;
    }
    let mut unwrapped = Vec::with_capacity(peaks.len());
    let mut offset = 0.0;
    for (i, &p) in peaks.iter().enumerate() {
        if i > 0 {
            let prev: f64 = unwrapped[i - 1];
            let mut candidate = p + offset;
            while candidate - prev > 0.5 * lx {
                candidate -= lx;
                offset -= lx;
            }
            while candidate - prev < -0.5 * lx {
                candidate += lx;
                offset += lx;
            }
            unwrapped.push(candidate);
        } else {
            unwrapped.push(p);
        }
    }
    let n = times.len() as f64;
    let (mt, mp) = (
        times.iter().sum::<f64>() / n,
        unwrapped.iter().sum::<f64>() / n,
    );
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, p) in times.iter().zip(&unwrapped) {
        num += (t - mt) * (p - mp);
        den += (t - mt) * (t - mt);
    }
    num / den
}

/// Mass fraction within the outer tenth of the box (five percent on each
/// side), the validity monitor for re-entering radiation.
fn tail_fraction(u: &Field) -> f64 {
    let g = u.grid;
    let edge = 0.45 * g.lx;
    let (mut tail, mut total) = (0.0, 0.0);
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let x = -0.5 * g.lx + ix as f64 * g.dx();
            let v = u.at(ix, iy);
            total += v * v;
            if x.abs() > edge {
                tail += v * v;
            }
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// Evolve u0 under the config, observing conservation, the distance to
/// the projected orbit of Z(l), and (optionally) the modulation
/// coordinates. Returns the report and the final field.
pub fn run(u0: &Field, cfg: &EvolutionConfig, l: f64) -> Result<(TrajectoryReport, Field)> {
    run_observed(u0, cfg, l, |_, _, _| Ok(()))
}

/// Same as [`run`], additionally invoking `snapshot(index, t, u)` at
/// every observation with the mean-restored field, so callers can dump
/// intermediate states without re-running the trajectory.
pub fn run_observed(
    u0: &Field,
    cfg: &EvolutionConfig,
    l: f64,
    mut snapshot: impl FnMut(usize, f64, &Field) -> Result<()>,
) -> Result<(TrajectoryReport, Field)> {
    cfg.validate()?;
    let g = u0.grid;
    let reference = zaitsev(l, g)?.project_zero_x_mean();

    if !u0.is_finite() {
        return Err(Error::NotFinite { t: 0.0 });
    }
    let mean_offset = u0.mean();
    let projected = u0.project_zero_x_mean();
    let initial_max = projected.max_abs();
    let cfl = cfg.dt * initial_max * cutoff_frequency(g, cfg.dealias);
    if cfl > 1.0 {
        return Err(Error::CflViolation { dt: cfg.dt, cfl });
    }

    let mut stepper = Stepper::new(g, cfg.dt, cfg.dealias);
    let mut c = projected.spectrum();
    stepper.truncate(&mut c);

    let total_steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    let mut report = TrajectoryReport {
        times: Vec::new(),
        mass_series: Vec::new(),
        energy_series: Vec::new(),
        dist_series: Vec::new(),
        tail_series: Vec::new(),
        modulation_series: Vec::new(),
        max_dist: 0.0,
        mean_offset,
        speed_estimate: 0.0,
        cfl,
    };
    let mut peaks = Vec::new();
    let mut guess = SolitonParams::new((l, 0.0), 1.0, 0.0)?;
    let ones = Field::from_fn(g, |_, _| 1.0);

    let observe = |c: &[Complex64],
                       t: f64,
                       report: &mut TrajectoryReport,
                       peaks: &mut Vec<f64>,
                       guess: &mut SolitonParams,
                       snap: &mut dyn FnMut(usize, f64, &Field) -> Result<()>|
     -> Result<()> {
        let u = Field::from_spectrum(g, c);
        if !u.is_finite() {
            return Err(Error::NotFinite { t });
        }
        let max_abs = u.max_abs();
        if max_abs > 100.0 * initial_max.max(1e-300) {
            return Err(Error::BlowUp {
                t,
                max_abs,
                threshold: 100.0 * initial_max,
            });
        }
        report.times.push(t);
        report.mass_series.push(mass(&u));
        report.energy_series.push(energy(&u)?.total());
        report.dist_series.push(orbit_distance(&u, &reference).dist);
        // Radiation is measured on the mean-restored field: the projected
        // state carries a constant pedestal -mean that would otherwise
        // register as tail mass.
        let mut physical = u.clone();
        physical.add_scaled(mean_offset, &ones);
        report.tail_series.push(tail_fraction(&physical));
        peaks.push(peak_position(&u));
        if let Some(hint) = cfg.track_modulation {
            // The family lives in the unprojected frame; follow the orbit
            // by reusing the last fit with rho advanced to the tracked
            // peak.
            let mut warm = *guess;
            warm.rho = peaks.last().copied().unwrap_or(0.0);
            let state = decompose(&physical, &warm).or_else(|_| {
                decompose(&physical, &SolitonParams::new((hint, 0.0), 1.0, warm.rho)?)
            })?;
            *guess = state.params;
            report
                .modulation_series
                .push(ModulationSummary::from_state(t, &state));
        }
        snap(report.times.len() - 1, t, &physical)?;
        Ok(())
    };

    observe(&c, 0.0, &mut report, &mut peaks, &mut guess, &mut snapshot)?;
    for n in 1..=total_steps {
        stepper.step(&mut c);
        if n % cfg.observer_stride == 0 || n == total_steps {
            observe(
                &c,
                n as f64 * cfg.dt,
                &mut report,
                &mut peaks,
                &mut guess,
                &mut snapshot,
            )?;
        }
    }

    report.max_dist = report.dist_series.iter().copied().fold(0.0, f64::max);
    report.speed_estimate = fitted_speed(&report.times, &peaks, g.lx) + mean_offset;
    Ok((report, Field::from_spectrum(g, &c)))
}

/// Evolve to t_end and back; returns the relative sup-norm defect
/// against the (projected, truncated) initial state. The scheme is
/// symmetric up to truncation, so the defect isolates accumulated
/// floating-point drift.
pub fn reverse_time_check(u0: &Field, cfg: &EvolutionConfig) -> Result<f64> {
    cfg.validate()?;
    let g = u0.grid;
    if !u0.is_finite() {
        return Err(Error::NotFinite { t: 0.0 });
    }
    let projected = u0.project_zero_x_mean();
    let initial_max = projected.max_abs();
    let cfl = cfg.dt * initial_max * cutoff_frequency(g, cfg.dealias);
    if cfl > 1.0 {
        return Err(Error::CflViolation { dt: cfg.dt, cfl });
    }
    let mut forward = Stepper::new(g, cfg.dt, cfg.dealias);
    let mut backward = Stepper::new(g, -cfg.dt, cfg.dealias);
    let mut c = projected.spectrum();
    forward.truncate(&mut c);
    let reference = c.clone();
    let total_steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    for _ in 0..total_steps {
        forward.step(&mut c);
    }
    let turn = Field::from_spectrum(g, &c);
    if !turn.is_finite() {
        return Err(Error::NotFinite { t: cfg.t_end });
    }
    for _ in 0..total_steps {
        backward.step(&mut c);
    }
    let defect = c
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(defect / initial_max.max(1e-300))
}

/// One orbital-stability probe and its delta-halving control.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub a: f64,
    pub delta: f64,
    pub seed: u64,
    /// max_dist / delta for the probe at delta.
    pub ratio: f64,
    /// max_dist / delta for the control at delta / 2.
    pub halved_ratio: f64,
    /// Full trajectory of the probe run.
    pub trajectory: TrajectoryReport,
}

/// Perturb Z(a) by a seeded transversal bump of size delta, evolve to
/// t_end, and repeat at delta/2: orbital stability predicts the
/// normalized excursion max_dist/delta not to grow under halving.
pub fn stability_experiment(
    a: f64,
    delta: f64,
    t_end: f64,
    seed: u64,
    grid: Grid,
    dt: f64,
) -> Result<StabilityReport> {
    if !(0.0..=0.3).contains(&a) {
        return Err(Error::ParamRange {
            name: "a",
            value: a,
            range: "[0, 0.3]",
        });
    }
    if !(1e-4..=1e-2).contains(&delta) && delta != 0.0 {
        return Err(Error::ParamRange {
            name: "delta",
            value: delta,
            range: "{0} or [1e-4, 1e-2]",
        });
    }
    let cfg = EvolutionConfig {
        dt,
        t_end,
        ..EvolutionConfig::default()
    };
    let probe = |d: f64| -> Result<TrajectoryReport> {
        let z = zaitsev(a, grid)?;
        let mut u0 = z.clone();
        if d > 0.0 {
            let bump = seeded_bump(grid, seed, 10, 3);
            u0.add_scaled(d, &bump);
            let scale = (mass(&z) / mass(&u0)).sqrt();
            u0 = u0.scaled(scale);
        }
        Ok(run(&u0, &cfg, a)?.0)
    };
    let trajectory = probe(delta)?;
    let (ratio, halved_ratio) = if delta > 0.0 {
        let halved = probe(0.5 * delta)?;
        (
            trajectory.max_dist / delta,
            halved.max_dist / (0.5 * delta),
        )
    } else {
        (0.0, 0.0)
    };
    Ok(StabilityReport {
        a,
        delta,
        seed,
        ratio,
        halved_ratio,
        trajectory,
    })
}
