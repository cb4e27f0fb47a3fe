//! Detailed-scale solver: donor-cell continuity plus the shared hydro steppers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{integrate, FluidState, Grid1D};
use crate::hydro::{
    cfl_dt, check_alpha, max_sound_speed, step_momentum, step_order_parameter, total_energy, EnergyLedger,
    EnergyReport, Params,
};
use crate::pressure::PressureLaw;

/// Courant numbers above `1 + COURANT_SLACK` are rejected.
const COURANT_SLACK: f64 = 1e-12;

/// How the time step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    /// CFL-limited step, capped by `dt_max`.
    Adaptive,
    /// Constant step (shortened only to land on output times).
    Fixed(f64),
}

/// Exponents of the improved pressure estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorExponents {
    pub gamma_tilde: f64,
    pub theta: f64,
    pub delta: f64,
}

impl MonitorExponents {
    pub fn from_gamma(gamma: f64) -> Self {
        let gamma_tilde = gamma.max(2.0);
        let theta = ((2.0 * gamma_tilde - 3.0) / 3.0).min(1.0);
        let delta = (gamma_tilde + theta) / gamma_tilde;
        Self {
            gamma_tilde,
            theta,
            delta,
        }
    }
}

/// Norm monitors accumulated along a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormMonitors {
    pub gamma_tilde: f64,
    pub theta: f64,
    pub delta: f64,
    /// `sup_t ||rho||_{L^gamma_tilde}`.
    pub rho_linf_lgt: f64,
    /// `||rho||_{L^(gamma_tilde + theta)}` over space-time.
    pub rho_l_gt_theta: f64,
    /// `||Peff||_{L^delta}` over space-time (averaged pressure for the effective model).
    pub peff_l_delta: f64,
    pub e0: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct MonitorAccumulator {
    exps: MonitorExponents,
    sup_lgt: f64,
    int_rho: f64,
    int_peff: f64,
    e0: f64,
}

impl MonitorAccumulator {
    pub(crate) fn new(gamma: f64, grid: &Grid1D, rho0: &[f64], e0: f64) -> Self {
        let exps = MonitorExponents::from_gamma(gamma);
        let mut acc = Self {
            exps,
            sup_lgt: 0.0,
            int_rho: 0.0,
            int_peff: 0.0,
            e0,
        };
        acc.observe_sup(grid, rho0);
        acc
    }

    fn observe_sup(&mut self, grid: &Grid1D, rho: &[f64]) {
        let g = self.exps.gamma_tilde;
        let s: f64 = rho.iter().map(|r| r.abs().powf(g)).sum::<f64>() * grid.dx();
        self.sup_lgt = self.sup_lgt.max(s.powf(1.0 / g));
    }

    pub(crate) fn step(&mut self, grid: &Grid1D, rho: &[f64], pressure: &[f64], dt: f64) {
        self.observe_sup(grid, rho);
        let e = self.exps;
        let dx = grid.dx();
        self.int_rho += dt * dx * rho.iter().map(|r| r.abs().powf(e.gamma_tilde + e.theta)).sum::<f64>();
        self.int_peff += dt * dx * pressure.iter().map(|p| p.abs().powf(e.delta)).sum::<f64>();
    }

    pub(crate) fn finish(&self) -> NormMonitors {
        let e = self.exps;
        NormMonitors {
            gamma_tilde: e.gamma_tilde,
            theta: e.theta,
            delta: e.delta,
            rho_linf_lgt: self.sup_lgt,
            rho_l_gt_theta: self.int_rho.powf(1.0 / (e.gamma_tilde + e.theta)),
            peff_l_delta: self.int_peff.powf(1.0 / e.delta),
            e0: self.e0,
        }
    }
}

/// Stored detailed trajectory.
#[derive(Debug, Clone)]
pub struct PnskTrajectory {
    pub grid: Grid1D,
    /// Snapshots at the requested output times, initial state first.
    pub snapshots: Vec<FluidState>,
    /// Energy ledger, one row per step (initial row first).
    pub energy: Vec<EnergyReport>,
    /// `(t, int rho)` per step.
    pub mass: Vec<(f64, f64)>,
    /// `(t, int c)` per step.
    pub c_mean: Vec<(f64, f64)>,
    /// Smallest density seen over the run.
    pub min_rho: f64,
    pub monitors: NormMonitors,
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max_used: f64,
}

impl PnskTrajectory {
    /// Largest `|m(t) - m(0)| / m(0)`, checked after every step.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.mass[0].1;
        self.mass.iter().fold(0.0f64, |m, &(_, v)| m.max((v - m0).abs())) / m0.abs().max(f64::MIN_POSITIVE)
    }

    pub fn final_state(&self) -> &FluidState {
        self.snapshots.last().expect("trajectory holds the initial state")
    }
}

/// Donor-cell update of the density; rejects steps whose outflow Courant
/// number exceeds one.
pub fn step_continuity(grid: &Grid1D, state: &FluidState, dt: f64) -> Result<Vec<f64>> {
    grid.check_centers(&state.rho, "rho")?;
    grid.check_faces(&state.u, "u")?;
    let n = grid.n_cells();
    let dx = grid.dx();
    let u = &state.u;
    for i in 0..n {
        let out = (u[i + 1].max(0.0) + (-u[i]).max(0.0)) * dt / dx;
        if out > 1.0 + COURANT_SLACK {
            return Err(Error::Cfl { courant: out, cell: i });
        }
    }
    let flux = crate::hydro::mass_flux(grid, &state.rho, u);
    let r = dt / dx;
    Ok((0..n).map(|i| state.rho[i] - r * (flux[i + 1] - flux[i])).collect())
}

/// One full step: continuity, momentum with `Peff(rho_new)`, order parameter.
pub fn step_pnsk(grid: &Grid1D, state: &FluidState, law: &PressureLaw, params: &Params, dt: f64) -> Result<FluidState> {
    let rho = step_continuity(grid, state, dt)?;
    let pressure: Vec<f64> = rho.iter().map(|&r| law.peff(r.max(0.0))).collect();
    let u = step_momentum(grid, state, &rho, &pressure, params, dt)?;
    let c = step_order_parameter(grid, &rho, &state.c, params, dt)?;
    Ok(FluidState::new(state.t + dt, rho, u, c))
}

/// `m_rho + (m_c0 - m_rho) exp(-(alpha/beta) t)`.
pub fn c_mean_reference(m_c0: f64, m_rho: f64, params: &Params, t: f64) -> f64 {
    m_rho + (m_c0 - m_rho) * (-(params.alpha / params.beta) * t).exp()
}

pub(crate) fn check_output_times(t0: f64, output_times: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(output_times.len());
    let mut last = t0;
    for &t in output_times {
        if !t.is_finite() {
            return Err(Error::Validation("output times must be finite".into()));
        }
        if t < t0 {
            return Err(Error::Validation(format!(
                "output time {t} precedes the initial time {t0}"
            )));
        }
        if t == t0 && out.is_empty() {
            continue;
        }
        if t <= last {
            return Err(Error::Validation("output times must be strictly increasing".into()));
        }
        out.push(t);
        last = t;
    }
    Ok(out)
}

/// Length of the next step towards `target`, landing on it exactly.
pub(crate) fn clip_step(t: f64, target: f64, dt: f64) -> (f64, bool) {
    let remaining = target - t;
    if dt >= remaining * (1.0 - 1e-9) {
        (remaining, true)
    } else {
        (dt, false)
    }
}

/// Integrate from `init` through every output time with adaptive steps.
pub fn run_pnsk(
    grid: &Grid1D,
    init: &FluidState,
    law: &PressureLaw,
    params: &Params,
    output_times: &[f64],
) -> Result<PnskTrajectory> {
    run_pnsk_with(grid, init, law, params, output_times, StepControl::Adaptive)
}

pub fn run_pnsk_with(
    grid: &Grid1D,
    init: &FluidState,
    law: &PressureLaw,
    params: &Params,
    output_times: &[f64],
    control: StepControl,
) -> Result<PnskTrajectory> {
    init.validate(grid)?;
    params.validate()?;
    check_alpha(law, params)?;
    if let StepControl::Fixed(dt) = control {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Validation(format!("fixed time step must be positive, got {dt}")));
        }
    }
    let targets = check_output_times(init.t, output_times)?;
    let parts0 = total_energy(grid, init, law, params);
    let mut ledger = EnergyLedger::new(init.t, parts0);
    let mut monitors = MonitorAccumulator::new(law.gamma(), grid, &init.rho, parts0.total());
    let mut mass = vec![(init.t, integrate(grid, &init.rho))];
    let mut c_mean = vec![(init.t, integrate(grid, &init.c))];
    let mut snapshots = vec![init.clone()];
    let mut state = init.clone();
    let mut steps = 0usize;
    let mut dt_min = f64::INFINITY;
    let mut dt_max_used: f64 = 0.0;
    let mut min_rho = init.rho.iter().cloned().fold(f64::INFINITY, f64::min);

    for &target in &targets {
        loop {
            let dt_wanted = match control {
                StepControl::Adaptive => cfl_dt(grid, &state.u, max_sound_speed(law, &state.rho), params),
                StepControl::Fixed(dt) => dt,
            };
            let (dt, last) = clip_step(state.t, target, dt_wanted);
            let next = match step_pnsk(grid, &state, law, params, dt) {
                Ok(s) => s,
                Err(Error::NonFinite(what)) => {
                    return Err(Error::BlowUp {
                        t: state.t,
                        reason: format!("non-finite {what}"),
                        snapshot: Box::new(state),
                    })
                }
                Err(e) => return Err(e),
            };
            let mut next = next;
            if last {
                next.t = target;
            }
            if !next.is_finite() {
                return Err(Error::BlowUp {
                    t: state.t,
                    reason: "non-finite field after step".into(),
                    snapshot: Box::new(state),
                });
            }
            let parts = total_energy(grid, &next, law, params);
            ledger.push(grid, params, &state.c, &next.u, &next.c, parts, next.t, dt);
            let pressure: Vec<f64> = next.rho.iter().map(|&r| law.peff(r.max(0.0))).collect();
            monitors.step(grid, &next.rho, &pressure, dt);
            mass.push((next.t, integrate(grid, &next.rho)));
            c_mean.push((next.t, integrate(grid, &next.c)));
            min_rho = next.rho.iter().cloned().fold(min_rho, f64::min);
            steps += 1;
            dt_min = dt_min.min(dt);
            dt_max_used = dt_max_used.max(dt);
            state = next;
            if last {
                break;
            }
        }
        snapshots.push(state.clone());
    }

    Ok(PnskTrajectory {
        grid: *grid,
        snapshots,
        energy: ledger.into_records(),
        mass,
        c_mean,
        min_rho,
        monitors: monitors.finish(),
        steps,
        dt_min: if steps == 0 { 0.0 } else { dt_min },
        dt_max_used,
    })
}
