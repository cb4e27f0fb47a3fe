//! CSV and JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::effective::{EffectiveState, EffectiveTrajectory};
use crate::error::Result;
use crate::grid::{face_to_center, FluidState, Grid1D};
use crate::hydro::EnergyReport;
use crate::measure::cdf;
use crate::pnsk::{NormMonitors, PnskTrajectory};

pub const SCHEMA_VERSION: u32 = 1;

pub fn fields_csv(grid: &Grid1D, state: &FluidState) -> String {
    let mut s = String::from("t,x,rho,u_center,c\n");
    let uc = face_to_center(&state.u);
    for (i, x) in grid.centers().iter().enumerate() {
        let _ = writeln!(s, "{},{},{},{},{}", state.t, x, state.rho[i], uc[i], state.c[i]);
    }
    s
}

pub fn measure_csv(grid: &Grid1D, state: &EffectiveState) -> String {
    let mut s = String::from("t,x_cell,atom,weight,xi\n");
    for (x, m) in grid.centers().iter().zip(state.nu.cells()) {
        for (k, a) in m.atoms().iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{},{}", state.t, x, k, a.weight, a.xi);
        }
    }
    s
}

/// CDF samples on `xi_grid` for every cell.
pub fn cdf_csv(grid: &Grid1D, state: &EffectiveState, xi_grid: &[f64]) -> Result<String> {
    let mut s = String::from("t,x_cell,xi,f\n");
    for (x, m) in grid.centers().iter().zip(state.nu.cells()) {
        let c = cdf(m, xi_grid)?;
        for (xi, f) in c.xi.iter().zip(&c.f) {
            let _ = writeln!(s, "{},{},{},{}", state.t, x, xi, f);
        }
    }
    Ok(s)
}

pub fn energy_csv(records: &[EnergyReport]) -> String {
    let mut s = String::from("t,E,kinetic,potential,coupling,gradient,diss_visc,diss_c,defect\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.t, r.e, r.kinetic, r.potential, r.coupling, r.gradient, r.dissipation_visc, r.dissipation_c, r.defect
        );
    }
    s
}

pub fn monitors_csv(rows: &[(String, NormMonitors)]) -> String {
    let mut s = String::from("label,gamma_tilde,theta,delta,rho_linf_lgt,rho_l_gt_theta,peff_l_delta,e0\n");
    for (label, m) in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            label, m.gamma_tilde, m.theta, m.delta, m.rho_linf_lgt, m.rho_l_gt_theta, m.peff_l_delta, m.e0
        );
    }
    s
}

/// Summary of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub model: String,
    pub n_cells: usize,
    pub steps: usize,
    pub t_final: f64,
    pub snapshot_times: Vec<f64>,
    pub max_mass_drift: f64,
    pub min_rho: f64,
    pub max_energy_defect: f64,
    pub monitors: NormMonitors,
    /// Effective runs only.
    pub max_normalization_defect: Option<f64>,
    pub renorm_violations: Option<usize>,
    pub clamp_events: Option<usize>,
    pub max_atoms_seen: Option<usize>,
}

fn max_drift(mass: &[(f64, f64)]) -> f64 {
    let m0 = mass[0].1;
    mass.iter().fold(0.0f64, |m, &(_, v)| m.max((v - m0).abs())) / m0.abs().max(f64::MIN_POSITIVE)
}

impl RunReport {
    pub fn detailed(traj: &PnskTrajectory) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model: "pnsk".into(),
            n_cells: traj.grid.n_cells(),
            steps: traj.steps,
            t_final: traj.final_state().t,
            snapshot_times: traj.snapshots.iter().map(|s| s.t).collect(),
            max_mass_drift: traj.max_mass_drift(),
            min_rho: traj.min_rho,
            max_energy_defect: crate::hydro::max_abs_defect(&traj.energy),
            monitors: traj.monitors,
            max_normalization_defect: None,
            renorm_violations: None,
            clamp_events: None,
            max_atoms_seen: None,
        }
    }

    pub fn effective(traj: &EffectiveTrajectory) -> Self {
        let min_rho = traj
            .snapshots
            .iter()
            .flat_map(|s| s.rho.iter().copied())
            .fold(f64::INFINITY, f64::min);
        Self {
            schema_version: SCHEMA_VERSION,
            model: "effective".into(),
            n_cells: traj.grid.n_cells(),
            steps: traj.steps,
            t_final: traj.final_state().t,
            snapshot_times: traj.snapshots.iter().map(|s| s.t).collect(),
            max_mass_drift: max_drift(&traj.mass),
            min_rho,
            max_energy_defect: crate::hydro::max_abs_defect(&traj.energy),
            monitors: traj.monitors,
            max_normalization_defect: Some(traj.normalization_defect.iter().fold(0.0f64, |m, &(_, d)| m.max(d))),
            renorm_violations: Some(traj.renorm_violations),
            clamp_events: Some(traj.clamp_events),
            max_atoms_seen: Some(traj.max_atoms_seen),
        }
    }
}

/// Write the snapshot, ledger and summary files of a detailed run.
pub fn write_detailed(dir: &Path, traj: &PnskTrajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, s) in traj.snapshots.iter().enumerate() {
        fs::write(dir.join(format!("fields_{k:04}.csv")), fields_csv(&traj.grid, s))?;
    }
    fs::write(dir.join("energy.csv"), energy_csv(&traj.energy))?;
    fs::write(
        dir.join("monitors.csv"),
        monitors_csv(&[("pnsk".into(), traj.monitors)]),
    )?;
    fs::write(
        dir.join("run.json"),
        serde_json::to_string_pretty(&RunReport::detailed(traj))?,
    )?;
    Ok(())
}

/// Write the snapshot, measure, CDF, ledger and summary files of an effective run.
pub fn write_effective(dir: &Path, traj: &EffectiveTrajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (lo, hi) = traj
        .snapshots
        .iter()
        .flat_map(|s| s.nu.cells().iter().map(|m| m.support()))
        .fold((f64::INFINITY, 0.0f64), |(a, b), (l, h)| (a.min(l), b.max(h)));
    let lo = lo.min(hi).max(0.0);
    let xi_grid: Vec<f64> = (0..=64)
        .map(|k| lo * 0.9 + (hi * 1.1 - lo * 0.9) * k as f64 / 64.0)
        .collect();
    for (k, s) in traj.snapshots.iter().enumerate() {
        fs::write(
            dir.join(format!("fields_{k:04}.csv")),
            fields_csv(&traj.grid, &s.fluid_view()),
        )?;
        fs::write(dir.join(format!("measure_{k:04}.csv")), measure_csv(&traj.grid, s))?;
        fs::write(dir.join(format!("cdf_{k:04}.csv")), cdf_csv(&traj.grid, s, &xi_grid)?)?;
    }
    fs::write(dir.join("energy.csv"), energy_csv(&traj.energy))?;
    fs::write(
        dir.join("monitors.csv"),
        monitors_csv(&[("effective".into(), traj.monitors)]),
    )?;
    fs::write(
        dir.join("run.json"),
        serde_json::to_string_pretty(&RunReport::effective(traj))?,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_headers_and_rows() {
        let g = Grid1D::new(4, 1.0).unwrap();
        let s = FluidState::rest(&g, 1.0);
        let text = fields_csv(&g, &s);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,rho,u_center,c");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "0,0.125,1,0,1");
    }
}
