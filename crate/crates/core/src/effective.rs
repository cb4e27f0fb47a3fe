//! Effective (homogenized) solver: donor-cell transport and characteristic
//! reaction of a per-cell atomic measure, coupled to the shared hydro
//! steppers through `rho = <nu, xi>` and `Pbar = <nu, Peff>`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{div_face_to_center, integrate, l2_norm, FluidState, Grid1D};
use crate::hydro::{
    cfl_dt, check_alpha, energy_parts, mass_flux, step_momentum, step_order_parameter, EnergyLedger, EnergyParts,
    EnergyReport, Params,
};
use crate::measure::{compress_in_place, Atom, AtomicMeasure, MeasureField};
use crate::pnsk::{check_output_times, clip_step, MonitorAccumulator, NormMonitors, StepControl};
use crate::pressure::PressureLaw;

const COURANT_SLACK: f64 = 1e-12;

/// Measure field plus hydrodynamic fields and the cached closures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveState {
    pub t: f64,
    pub nu: MeasureField,
    pub u: Vec<f64>,
    pub c: Vec<f64>,
    /// `<nu, xi>` per cell.
    pub rho: Vec<f64>,
    /// `<nu, Peff>` per cell.
    pub pbar: Vec<f64>,
}

impl EffectiveState {
    pub fn new(grid: &Grid1D, t: f64, nu: MeasureField, u: Vec<f64>, c: Vec<f64>, law: &PressureLaw) -> Result<Self> {
        if nu.n_cells() != grid.n_cells() {
            return Err(Error::GridMismatch("measure field and grid differ in size".into()));
        }
        let rho = nu.rho();
        let pbar = nu.pbar(law);
        let s = Self { t, nu, u, c, rho, pbar };
        s.fluid_view().validate(grid)?;
        Ok(s)
    }

    /// `delta_{rho(x)}` initial measure for a detailed state.
    pub fn from_fluid(grid: &Grid1D, state: &FluidState, law: &PressureLaw) -> Result<Self> {
        let nu = MeasureField::dirac(grid, &state.rho)?;
        Self::new(grid, state.t, nu, state.u.clone(), state.c.clone(), law)
    }

    /// Hydrodynamic fields with the cached density.
    pub fn fluid_view(&self) -> FluidState {
        FluidState::new(self.t, self.rho.clone(), self.u.clone(), self.c.clone())
    }

    fn refresh(&mut self, law: &PressureLaw) {
        self.rho = self.nu.rho();
        self.pbar = self.nu.pbar(law);
    }
}

/// Donor-cell transport of measure mass: a `|u_f| dt / dx` fraction of every
/// atom in the upwind cell crosses face `f` with its position unchanged.
/// Atoms with bitwise-equal positions are merged in the receiving cell.
pub fn advect_measure(grid: &Grid1D, nu: &MeasureField, u: &[f64], dt: f64) -> Result<MeasureField> {
    grid.check_faces(u, "u")?;
    let n = grid.n_cells();
    if nu.n_cells() != n {
        return Err(Error::GridMismatch("measure field and grid differ in size".into()));
    }
    let r = dt / grid.dx();
    let mut out_frac = vec![0.0; n];
    for i in 0..n {
        let out = (u[i + 1].max(0.0) + (-u[i]).max(0.0)) * r;
        if out > 1.0 + COURANT_SLACK {
            return Err(Error::Cfl { courant: out, cell: i });
        }
        out_frac[i] = out;
    }
    let cells = nu.cells();
    let new_cells: Vec<AtomicMeasure> = (0..n)
        .map(|i| {
            let mut atoms: Vec<Atom> = Vec::new();
            let keep = 1.0 - out_frac[i];
            if keep > 0.0 {
                atoms.extend(cells[i].atoms().iter().map(|a| Atom::new(a.weight * keep, a.xi)));
            }
            if i > 0 && u[i] > 0.0 {
                let f = u[i] * r;
                atoms.extend(cells[i - 1].atoms().iter().map(|a| Atom::new(a.weight * f, a.xi)));
            }
            if i + 1 < n && u[i + 1] < 0.0 {
                let f = -u[i + 1] * r;
                atoms.extend(cells[i + 1].atoms().iter().map(|a| Atom::new(a.weight * f, a.xi)));
            }
            AtomicMeasure::from_atoms_unchecked(merge_identical(atoms))
        })
        .collect();
    MeasureField::new(grid, new_cells)
}

fn merge_identical(mut atoms: Vec<Atom>) -> Vec<Atom> {
    if atoms.len() < 2 {
        return atoms;
    }
    atoms.sort_by(|a, b| a.xi.total_cmp(&b.xi));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if last.xi == a.xi => last.weight += a.weight,
            _ => out.push(a),
        }
    }
    out
}

/// Bookkeeping of one reaction substep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReactStats {
    /// `sum w - 1` before renormalization.
    pub defect: f64,
    /// Atoms whose position overshot below zero and were clamped.
    pub clamped: usize,
}

fn drift_rates(atoms: &[Atom], law: &PressureLaw, viscosity: f64, divu: f64, out: &mut Vec<f64>) {
    out.clear();
    let s: f64 = atoms.iter().map(|a| a.weight).sum();
    let pbar = if atoms.len() == 1 {
        law.peff(atoms[0].xi)
    } else {
        atoms.iter().map(|a| a.weight * law.peff(a.xi)).sum::<f64>() / s
    };
    out.extend(atoms.iter().map(|a| (pbar - law.peff(a.xi)) / viscosity - divu));
}

/// One Heun step of `xi' = (Q(xi) - div u) xi`, `w' = -(Q(xi) - div u) w`,
/// followed by renormalization. `Q` is evaluated explicitly at each stage
/// from the stage measure, so a single atom has `Q = 0` exactly.
pub fn react_measure(
    m: &AtomicMeasure,
    divu: f64,
    law: &PressureLaw,
    params: &Params,
    dt: f64,
) -> Result<(AtomicMeasure, ReactStats)> {
    let mut out = m.clone();
    let stats = react_in_place(&mut out, divu, law, params.viscosity(), dt);
    if out.atoms().iter().any(|a| !(a.weight.is_finite() && a.xi.is_finite())) {
        return Err(Error::NonFinite("measure"));
    }
    Ok((out, stats))
}

fn react_in_place(m: &mut AtomicMeasure, divu: f64, law: &PressureLaw, viscosity: f64, dt: f64) -> ReactStats {
    let atoms = m.atoms_mut();
    let mut k1 = Vec::with_capacity(atoms.len());
    drift_rates(atoms, law, viscosity, divu, &mut k1);
    let stage: Vec<Atom> = atoms
        .iter()
        .zip(&k1)
        .map(|(a, &g)| Atom::new(a.weight * (1.0 - dt * g), a.xi * (1.0 + dt * g)))
        .collect();
    let mut k2 = Vec::with_capacity(atoms.len());
    drift_rates(&stage, law, viscosity, divu, &mut k2);
    let mut clamped = 0;
    for ((a, s), (&g1, &g2)) in atoms.iter_mut().zip(&stage).zip(k1.iter().zip(&k2)) {
        let xi = a.xi + 0.5 * dt * (g1 * a.xi + g2 * s.xi);
        let w = a.weight - 0.5 * dt * (g1 * a.weight + g2 * s.weight);
        if xi < 0.0 {
            clamped += 1;
            a.xi = 0.0;
        } else {
            a.xi = xi;
        }
        a.weight = w.max(0.0);
    }
    atoms.retain(|a| a.weight > 0.0);
    let defect = m.renormalize();
    ReactStats { defect, clamped }
}

/// Per-step diagnostics of the effective solver.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    /// Largest `|sum w - 1|` over cells before renormalization.
    pub max_defect: f64,
    pub clamped: usize,
    /// Cells whose defect exceeded `renorm_tol`.
    pub renorm_violations: usize,
    /// L2 norm of `(rho_new - rho_old)/dt + div(rho_up u)`.
    pub continuity_residual: f64,
}

/// Absolute merge distance: `merge_eps` times the support width of the field.
fn merge_distance(nu: &MeasureField, params: &Params) -> f64 {
    if params.merge_eps == 0.0 {
        return 0.0;
    }
    let (lo, hi) = nu
        .cells()
        .iter()
        .map(|m| m.support())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (l, h)| {
            (a.min(l), b.max(h))
        });
    params.merge_eps * (hi - lo).max(0.0)
}

/// Advect, react, compress, then advance velocity with `Pbar` and the order
/// parameter with `rho = <nu, xi>`.
pub fn step_effective(
    grid: &Grid1D,
    state: &EffectiveState,
    law: &PressureLaw,
    params: &Params,
    dt: f64,
) -> Result<(EffectiveState, StepStats)> {
    let mut nu = advect_measure(grid, &state.nu, &state.u, dt)?;
    let divu = div_face_to_center(grid, &state.u);
    let viscosity = params.viscosity();
    let eps = merge_distance(&nu, params);
    let max_atoms = params.max_atoms;
    let stats: Vec<ReactStats> = nu
        .cells_mut()
        .par_iter_mut()
        .zip(divu.par_iter())
        .map(|(m, &d)| {
            let s = react_in_place(m, d, law, viscosity, dt);
            compress_in_place(m, eps, max_atoms);
            s
        })
        .collect();
    let mut step = StepStats::default();
    for s in &stats {
        step.max_defect = step.max_defect.max(s.defect.abs());
        step.clamped += s.clamped;
        if s.defect.abs() > params.renorm_tol {
            step.renorm_violations += 1;
        }
    }
    let rho = nu.rho();
    let pbar = nu.pbar(law);
    if rho.iter().chain(&pbar).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("measure moments"));
    }
    let prev = state.fluid_view();
    let u = step_momentum(grid, &prev, &rho, &pbar, params, dt)?;
    let c = step_order_parameter(grid, &rho, &state.c, params, dt)?;

    let flux = mass_flux(grid, &state.rho, &state.u);
    let residual: Vec<f64> = (0..grid.n_cells())
        .map(|i| (rho[i] - state.rho[i]) / dt + (flux[i + 1] - flux[i]) / grid.dx())
        .collect();
    step.continuity_residual = l2_norm(grid, &residual);

    Ok((
        EffectiveState {
            t: state.t + dt,
            nu,
            u,
            c,
            rho,
            pbar,
        },
        step,
    ))
}

/// Time-step bound: hyperbolic CFL with the largest atom sound speed and the
/// stiffness of the characteristic system.
pub fn effective_dt(grid: &Grid1D, state: &EffectiveState, law: &PressureLaw, params: &Params) -> f64 {
    let divu = div_face_to_center(grid, &state.u);
    let nu = params.viscosity();
    let mut sound: f64 = 0.0;
    let mut rate: f64 = 0.0;
    for (m, (&d, &p)) in state.nu.cells().iter().zip(divu.iter().zip(&state.pbar)) {
        for a in m.atoms() {
            sound = sound.max(law.dpeff(a.xi).max(0.0).sqrt());
            let q = (p - law.peff(a.xi)) / nu;
            rate = rate.max((q - d).abs() + law.dpeff(a.xi).abs() * a.xi / nu);
        }
    }
    let dt = cfl_dt(grid, &state.u, sound, params);
    if rate > 0.0 {
        dt.min(params.cfl / rate)
    } else {
        dt
    }
}

fn potential_density(nu: &MeasureField, law: &PressureLaw) -> Vec<f64> {
    nu.moments(|x| law.w(x))
}

/// Energy of an effective state, with `<nu, W>` as potential energy density.
pub fn effective_energy(grid: &Grid1D, state: &EffectiveState, law: &PressureLaw, params: &Params) -> EnergyParts {
    let w = potential_density(&state.nu, law);
    energy_parts(grid, &state.rho, &state.u, &state.c, &w, params)
}

/// Stored effective trajectory.
#[derive(Debug, Clone)]
pub struct EffectiveTrajectory {
    pub grid: Grid1D,
    pub snapshots: Vec<EffectiveState>,
    pub energy: Vec<EnergyReport>,
    /// `(t, int rho)` per step.
    pub mass: Vec<(f64, f64)>,
    /// `(t, max |sum w - 1|)` per step, before renormalization.
    pub normalization_defect: Vec<(f64, f64)>,
    /// `(t, ||(rho_new - rho_old)/dt + div(rho_up u)||)` per step.
    pub continuity_residual: Vec<(f64, f64)>,
    pub renorm_violations: usize,
    pub clamp_events: usize,
    pub max_atoms_seen: usize,
    pub min_xi: f64,
    pub monitors: NormMonitors,
    pub steps: usize,
}

impl EffectiveTrajectory {
    pub fn final_state(&self) -> &EffectiveState {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    pub fn fluid_snapshots(&self) -> Vec<FluidState> {
        self.snapshots.iter().map(|s| s.fluid_view()).collect()
    }
}

pub fn run_effective(
    grid: &Grid1D,
    init: &EffectiveState,
    law: &PressureLaw,
    params: &Params,
    output_times: &[f64],
) -> Result<EffectiveTrajectory> {
    run_effective_with(grid, init, law, params, output_times, StepControl::Adaptive)
}

pub fn run_effective_with(
    grid: &Grid1D,
    init: &EffectiveState,
    law: &PressureLaw,
    params: &Params,
    output_times: &[f64],
    control: StepControl,
) -> Result<EffectiveTrajectory> {
    params.validate()?;
    check_alpha(law, params)?;
    init.fluid_view().validate(grid)?;
    if init.nu.n_cells() != grid.n_cells() {
        return Err(Error::GridMismatch("measure field and grid differ in size".into()));
    }
    if let StepControl::Fixed(dt) = control {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Validation(format!("fixed time step must be positive, got {dt}")));
        }
    }
    let targets = check_output_times(init.t, output_times)?;
    let mut state = init.clone();
    state.refresh(law);
    let parts0 = effective_energy(grid, &state, law, params);
    let mut ledger = EnergyLedger::new(state.t, parts0);
    let mut monitors = MonitorAccumulator::new(law.gamma(), grid, &state.rho, parts0.total());
    let mut mass = vec![(state.t, integrate(grid, &state.rho))];
    let mut normalization_defect = Vec::new();
    let mut continuity_residual = Vec::new();
    let mut renorm_violations = 0;
    let mut clamp_events = 0;
    let mut max_atoms_seen = state.nu.max_atoms();
    let mut min_xi = state.nu.min_xi();
    let mut snapshots = vec![state.clone()];
    let mut steps = 0;

    for &target in &targets {
        loop {
            let dt_wanted = match control {
                StepControl::Adaptive => effective_dt(grid, &state, law, params),
                StepControl::Fixed(dt) => dt,
            };
            let (dt, last) = clip_step(state.t, target, dt_wanted);
            let (mut next, stats) = match step_effective(grid, &state, law, params, dt) {
                Ok(r) => r,
                Err(Error::NonFinite(what)) => {
                    return Err(Error::BlowUp {
                        t: state.t,
                        reason: format!("non-finite {what}"),
                        snapshot: Box::new(state.fluid_view()),
                    })
                }
                Err(e) => return Err(e),
            };
            if last {
                next.t = target;
            }
            if !next.fluid_view().is_finite() {
                return Err(Error::BlowUp {
                    t: state.t,
                    reason: "non-finite field after step".into(),
                    snapshot: Box::new(state.fluid_view()),
                });
            }
            let parts = effective_energy(grid, &next, law, params);
            ledger.push(grid, params, &state.c, &next.u, &next.c, parts, next.t, dt);
            monitors.step(grid, &next.rho, &next.pbar, dt);
            mass.push((next.t, integrate(grid, &next.rho)));
            normalization_defect.push((next.t, stats.max_defect));
            continuity_residual.push((next.t, stats.continuity_residual));
            renorm_violations += stats.renorm_violations;
            clamp_events += stats.clamped;
            max_atoms_seen = max_atoms_seen.max(next.nu.max_atoms());
            min_xi = min_xi.min(next.nu.min_xi());
            steps += 1;
            state = next;
            if last {
                break;
            }
        }
        snapshots.push(state.clone());
    }

    Ok(EffectiveTrajectory {
        grid: *grid,
        snapshots,
        energy: ledger.into_records(),
        mass,
        normalization_defect,
        continuity_residual,
        renorm_violations,
        clamp_events,
        max_atoms_seen,
        min_xi,
        monitors: monitors.finish(),
        steps,
    })
}
