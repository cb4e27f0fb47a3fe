//! Momentum and order-parameter steppers shared by the detailed and the
//! effective solver, plus the energy functional and its budget.
//!
//! One time step is split as continuity (done by the caller) -> momentum ->
//! order parameter. Viscosity and the order-parameter diffusion are treated
//! implicitly, pressure and the `alpha rho grad c` coupling explicitly, so
//! every linear solve is tridiagonal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{div_face_to_center, FluidState, Grid1D};
use crate::pressure::PressureLaw;
use crate::tridiag::solve_tridiagonal;

/// Face densities below this value are treated as vacuum.
pub const VACUUM_FLOOR: f64 = 1e-12;

/// Physical coefficients and numerical controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub renorm_tol: f64,
    /// Relative merge distance (fraction of a cell measure's support width).
    pub merge_eps: f64,
    pub max_atoms: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            mu: 0.3,
            lambda: 0.4,
            kappa: 1e-3,
            alpha: 1.0,
            beta: 0.1,
            cfl: 0.5,
            dt_max: 1e-3,
            t_end: 0.5,
            renorm_tol: 1e-4,
            merge_eps: 1e-6,
            max_atoms: 64,
        }
    }
}

impl Params {
    /// `lambda + 2 mu`, the coefficient of `d_xx u` in one dimension.
    pub fn viscosity(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu", self.mu),
            ("lambda", self.lambda),
            ("kappa", self.kappa),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("physics.{name} must be positive")));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Validation("numerics.cfl must lie in (0, 1]".into()));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::Validation("numerics.dt_max must be positive".into()));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Validation("numerics.t_end must be non-negative".into()));
        }
        if self.max_atoms < 1 {
            return Err(Error::Validation("numerics.max_atoms must be at least 1".into()));
        }
        if !(self.merge_eps >= 0.0) {
            return Err(Error::Validation("numerics.merge_eps must be non-negative".into()));
        }
        if !(self.renorm_tol > 0.0) {
            return Err(Error::Validation("numerics.renorm_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Rejects a law whose effective-pressure shift uses a different `alpha`
/// than the coupling term.
pub fn check_alpha(law: &PressureLaw, params: &Params) -> Result<()> {
    let (a, b) = (law.alpha(), params.alpha);
    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
        return Err(Error::Validation(format!(
            "pressure law alpha ({a}) must equal physics.alpha ({b})"
        )));
    }
    Ok(())
}

/// Donor-cell mass flux `rho_upwind * u` at faces; zero on the walls.
pub fn mass_flux(grid: &Grid1D, rho: &[f64], u: &[f64]) -> Vec<f64> {
    let n = grid.n_cells();
    let mut flux = vec![0.0; n + 1];
    for f in 1..n {
        let v = u[f];
        flux[f] = if v >= 0.0 { rho[f - 1] * v } else { rho[f] * v };
    }
    flux
}

fn face_average(rho: &[f64], f: usize) -> f64 {
    0.5 * (rho[f - 1] + rho[f])
}

/// Hyperbolic time-step bound `min(dt_max, cfl dx / (max|u| + sound_speed))`.
pub fn cfl_dt(grid: &Grid1D, u: &[f64], sound_speed: f64, params: &Params) -> f64 {
    let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let speed = umax + sound_speed;
    if speed > 0.0 {
        params.dt_max.min(params.cfl * grid.dx() / speed)
    } else {
        params.dt_max
    }
}

/// Largest `sqrt(max(Peff'(rho), 0))` over the field.
pub fn max_sound_speed(law: &PressureLaw, rho: &[f64]) -> f64 {
    rho.iter().fold(0.0f64, |m, &r| m.max(law.dpeff(r).max(0.0).sqrt()))
}

/// Advance face velocities by one step.
///
/// `prev` holds the start-of-step density, velocity and order parameter;
/// `rho_new` is the density after the continuity substep and `pressure` the
/// centered pressure (`Peff(rho_new)` for the detailed model, the averaged
/// pressure for the effective one). Face momenta are advected with upwind
/// fluxes built from the same donor-cell mass fluxes as the continuity step.
pub fn step_momentum(
    grid: &Grid1D,
    prev: &FluidState,
    rho_new: &[f64],
    pressure: &[f64],
    params: &Params,
    dt: f64,
) -> Result<Vec<f64>> {
    grid.check_centers(rho_new, "rho_new")?;
    grid.check_centers(pressure, "pressure")?;
    grid.check_faces(&prev.u, "u")?;
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if rho_new
        .iter()
        .chain(pressure)
        .chain(&prev.u)
        .chain(&prev.c)
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("momentum inputs"));
    }
    let n = grid.n_cells();
    let dx = grid.dx();
    let u = &prev.u;
    let flux = mass_flux(grid, &prev.rho, u);

    // Momentum flux through cell centers (the dual-cell interfaces).
    let momentum_flux: Vec<f64> = (0..n)
        .map(|i| {
            let g = 0.5 * (flux[i] + flux[i + 1]);
            let upwind = if g >= 0.0 { u[i] } else { u[i + 1] };
            g * upwind
        })
        .collect();

    let nu = params.viscosity();
    let k = nu / (dx * dx);
    let m = n - 1;
    let mut lower = vec![-k; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![-k; m];
    let mut rhs = vec![0.0; m];
    for f in 1..n {
        let rho_old_f = face_average(&prev.rho, f);
        let rho_new_f = face_average(rho_new, f);
        let old_momentum = if rho_old_f < VACUUM_FLOOR {
            0.0
        } else {
            rho_old_f * u[f]
        };
        let advection = (momentum_flux[f] - momentum_flux[f - 1]) / dx;
        let force = -(pressure[f] - pressure[f - 1]) / dx + params.alpha * rho_new_f * (prev.c[f] - prev.c[f - 1]) / dx;
        let mut predicted = old_momentum - dt * advection + dt * force;
        let mass = if rho_new_f < VACUUM_FLOOR {
            predicted = 0.0;
            VACUUM_FLOOR
        } else {
            rho_new_f
        };
        let row = f - 1;
        diag[row] = mass / dt + 2.0 * k;
        rhs[row] = predicted / dt;
    }
    lower[0] = 0.0;
    upper[m - 1] = 0.0;
    let interior = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    let mut u_new = vec![0.0; n + 1];
    u_new[1..n].copy_from_slice(&interior);
    if u_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("velocity"));
    }
    Ok(u_new)
}

/// Backward-Euler step of `beta c_t - kappa c_xx + alpha (c - rho) = 0` with
/// zero-flux walls.
pub fn step_order_parameter(grid: &Grid1D, rho: &[f64], c_old: &[f64], params: &Params, dt: f64) -> Result<Vec<f64>> {
    grid.check_centers(rho, "rho")?;
    grid.check_centers(c_old, "c")?;
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if rho.iter().chain(c_old).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("order-parameter inputs"));
    }
    let n = grid.n_cells();
    let k = params.kappa / (grid.dx() * grid.dx());
    let base = params.beta / dt + params.alpha;
    let mut lower = vec![-k; n];
    let mut upper = vec![-k; n];
    let mut diag = vec![base + 2.0 * k; n];
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    diag[0] = base + k;
    diag[n - 1] = base + k;
    // Solve for the deviation from the scalar update of the first cell, so a
    // spatially uniform input yields an exactly uniform output.
    let (c_ref, rho_ref) = (c_old[0], rho[0]);
    let reference = (params.beta / dt * c_ref + params.alpha * rho_ref) / base;
    let rhs: Vec<f64> = (0..n)
        .map(|i| params.beta / dt * (c_old[i] - c_ref) + params.alpha * (rho[i] - rho_ref))
        .collect();
    let deviation = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    Ok(deviation.into_iter().map(|d| reference + d).collect())
}

/// Instantaneous energy split into its four contributions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub potential: f64,
    pub coupling: f64,
    pub gradient: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential + self.coupling + self.gradient
    }
}

/// Energy of a state whose potential-energy density per cell is given.
pub fn energy_parts(
    grid: &Grid1D,
    rho: &[f64],
    u: &[f64],
    c: &[f64],
    potential_density: &[f64],
    params: &Params,
) -> EnergyParts {
    let n = grid.n_cells();
    let dx = grid.dx();
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    let mut coupling = 0.0;
    for i in 0..n {
        let u2 = 0.5 * (u[i] * u[i] + u[i + 1] * u[i + 1]);
        kinetic += 0.5 * rho[i] * u2;
        potential += potential_density[i];
        let d = rho[i] - c[i];
        coupling += 0.5 * params.alpha * d * d;
    }
    let mut gradient = 0.0;
    for f in 1..n {
        let g = (c[f] - c[f - 1]) / dx;
        gradient += 0.5 * params.kappa * g * g;
    }
    EnergyParts {
        kinetic: kinetic * dx,
        potential: potential * dx,
        coupling: coupling * dx,
        gradient: gradient * dx,
    }
}

/// `E = int (rho u^2 / 2 + W(rho) + alpha/2 (rho - c)^2 + kappa/2 c_x^2) dx`.
pub fn total_energy(grid: &Grid1D, state: &FluidState, law: &PressureLaw, params: &Params) -> EnergyParts {
    let w: Vec<f64> = state.rho.iter().map(|&r| law.w(r)).collect();
    energy_parts(grid, &state.rho, &state.u, &state.c, &w, params)
}

/// One row of the energy ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub e: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub coupling: f64,
    pub gradient: f64,
    pub dissipation_visc: f64,
    pub dissipation_c: f64,
    pub e0: f64,
    /// `E(t) + accumulated dissipation - E0`.
    pub defect: f64,
}

/// Running energy budget.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    e0: f64,
    dissipation_visc: f64,
    dissipation_c: f64,
    records: Vec<EnergyReport>,
}

impl EnergyLedger {
    pub fn new(t0: f64, parts0: EnergyParts) -> Self {
        let e0 = parts0.total();
        Self {
            e0,
            dissipation_visc: 0.0,
            dissipation_c: 0.0,
            records: vec![EnergyReport {
                t: t0,
                e: e0,
                kinetic: parts0.kinetic,
                potential: parts0.potential,
                coupling: parts0.coupling,
                gradient: parts0.gradient,
                dissipation_visc: 0.0,
                dissipation_c: 0.0,
                e0,
                defect: 0.0,
            }],
        }
    }

    /// Accumulate the dissipation of one step ending in `(u_new, c_new)`.
    pub fn push(
        &mut self,
        grid: &Grid1D,
        params: &Params,
        c_old: &[f64],
        u_new: &[f64],
        c_new: &[f64],
        parts: EnergyParts,
        t: f64,
        dt: f64,
    ) {
        let dx = grid.dx();
        let div = div_face_to_center(grid, u_new);
        let visc: f64 = div.iter().map(|d| d * d).sum::<f64>() * dx * params.viscosity();
        let ct: f64 = c_new
            .iter()
            .zip(c_old)
            .map(|(a, b)| {
                let r = (a - b) / dt;
                r * r
            })
            .sum::<f64>()
            * dx
            * params.beta;
        self.dissipation_visc += dt * visc;
        self.dissipation_c += dt * ct;
        let e = parts.total();
        self.records.push(EnergyReport {
            t,
            e,
            kinetic: parts.kinetic,
            potential: parts.potential,
            coupling: parts.coupling,
            gradient: parts.gradient,
            dissipation_visc: self.dissipation_visc,
            dissipation_c: self.dissipation_c,
            e0: self.e0,
            defect: e + self.dissipation_visc + self.dissipation_c - self.e0,
        });
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn records(&self) -> &[EnergyReport] {
        &self.records
    }

    pub fn into_records(self) -> Vec<EnergyReport> {
        self.records
    }

    pub fn max_abs_defect(&self) -> f64 {
        max_abs_defect(&self.records)
    }
}

pub fn max_abs_defect(records: &[EnergyReport]) -> f64 {
    records.iter().fold(0.0f64, |m, r| m.max(r.defect.abs()))
}

/// Energy ledger of a stored trajectory (consecutive states are steps).
pub fn energy_budget(
    grid: &Grid1D,
    states: &[FluidState],
    law: &PressureLaw,
    params: &Params,
) -> Result<Vec<EnergyReport>> {
    if states.len() < 2 {
        return Err(Error::Domain("energy budget needs at least two states".into()));
    }
    let mut ledger = EnergyLedger::new(states[0].t, total_energy(grid, &states[0], law, params));
    for pair in states.windows(2) {
        let dt = pair[1].t - pair[0].t;
        if !(dt > 0.0) {
            return Err(Error::Domain("trajectory times must increase".into()));
        }
        let parts = total_energy(grid, &pair[1], law, params);
        ledger.push(grid, params, &pair[0].c, &pair[1].u, &pair[1].c, parts, pair[1].t, dt);
    }
    Ok(ledger.into_records())
}
