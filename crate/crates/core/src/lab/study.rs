//! Convergence study: detailed runs over an n-ladder against one effective run.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effective::{run_effective, EffectiveState, EffectiveTrajectory};
use crate::error::Result;
use crate::grid::{FluidState, Grid1D};
use crate::hydro::Params;
use crate::pnsk::{run_pnsk, MonitorExponents, NormMonitors, PnskTrajectory};
use crate::pressure::PressureLaw;

use super::config::{Observable, RunConfig};
use super::metrics::{bounded_observable, evf_gap, weak_distance_series};
use super::report::{monitors_csv, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Weak distance per observable name.
    pub distances: BTreeMap<String, f64>,
    pub evf_gap: Option<f64>,
    pub monitors: Option<NormMonitors>,
    pub steps: usize,
    pub max_mass_drift: Option<f64>,
    pub min_rho: Option<f64>,
    pub error: Option<String>,
    /// Wall-clock seconds; kept out of the JSON so reports are reproducible.
    #[serde(skip)]
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSummary {
    pub steps: usize,
    pub max_atoms_seen: usize,
    pub renorm_violations: usize,
    pub clamp_events: usize,
    pub max_normalization_defect: f64,
    pub monitors: NormMonitors,
    #[serde(skip)]
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub seed: u64,
    pub n_cells: usize,
    pub window_h: f64,
    pub gamma_tilde: f64,
    pub theta: f64,
    pub delta: f64,
    pub observables: Vec<String>,
    pub snapshot_times: Vec<f64>,
    pub effective: Option<EffectiveSummary>,
    pub effective_error: Option<String>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Distances for one observable in ladder order (`None` for failed rows).
    pub fn series(&self, observable: &str) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.distances.get(observable).copied()).collect()
    }

    pub fn evf_series(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.evf_gap).collect()
    }

    pub fn total_runtime_s(&self) -> f64 {
        self.rows.iter().map(|r| r.runtime_s).sum::<f64>() + self.effective.as_ref().map_or(0.0, |e| e.runtime_s)
    }

    /// `n,runtime_s` table of wall-clock times.
    pub fn timing_csv(&self) -> String {
        let mut s = String::from("label,runtime_s\n");
        if let Some(e) = &self.effective {
            s.push_str(&format!("effective,{}\n", e.runtime_s));
        }
        for r in &self.rows {
            s.push_str(&format!("n={},{}\n", r.n, r.runtime_s));
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        let mut rows: Vec<(String, NormMonitors)> = Vec::new();
        if let Some(e) = &self.effective {
            rows.push(("effective".into(), e.monitors));
        }
        for r in &self.rows {
            if let Some(m) = r.monitors {
                rows.push((format!("n={}", r.n), m));
            }
        }
        fs::write(dir.join("monitors.csv"), monitors_csv(&rows))?;
        fs::write(dir.join("timing.csv"), self.timing_csv())?;
        Ok(())
    }
}

fn observable_fields(
    obs: Observable,
    law: &PressureLaw,
    detailed: &[FluidState],
    effective: &[EffectiveState],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let a = detailed
        .iter()
        .map(|s| match obs {
            Observable::Xi => s.rho.clone(),
            Observable::Peff => s.rho.iter().map(|&r| law.peff(r)).collect(),
            Observable::Bounded => s.rho.iter().map(|&r| bounded_observable(r)).collect(),
        })
        .collect();
    let b = effective
        .iter()
        .map(|s| match obs {
            Observable::Xi => s.rho.clone(),
            Observable::Peff => s.pbar.clone(),
            Observable::Bounded => s.nu.moments(bounded_observable),
        })
        .collect();
    (a, b)
}

fn compare(
    grid: &Grid1D,
    cfg: &RunConfig,
    law: &PressureLaw,
    params: &Params,
    traj: &PnskTrajectory,
    eff: &EffectiveTrajectory,
) -> Result<(BTreeMap<String, f64>, f64)> {
    let h = cfg.window_h();
    let mut distances = BTreeMap::new();
    for &obs in &cfg.study.observables {
        let (a, b) = observable_fields(obs, law, &traj.snapshots, &eff.snapshots);
        distances.insert(obs.name().to_string(), weak_distance_series(grid, &a, &b, h)?);
    }
    let gap = evf_gap(
        grid,
        &traj.snapshots,
        &eff.snapshots,
        law,
        params,
        bounded_observable,
        h,
    )?;
    Ok((distances, gap))
}

/// `(n, outcome, seconds)` for one ladder entry.
type LadderRun = (usize, Result<PnskTrajectory>, f64);

/// Run the detailed model for every ladder entry (concurrently) and the
/// effective model once, then tabulate weak distances and flux gaps.
pub fn run_convergence(cfg: &RunConfig, seed: u64) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let law = cfg.law()?;
    let params = cfg.params();
    let times = cfg.output_times();
    let exps = MonitorExponents::from_gamma(law.gamma());

    let (eff_result, detailed): (Result<(EffectiveTrajectory, f64)>, Vec<LadderRun>) = rayon::join(
        || {
            let start = Instant::now();
            let init = cfg.effective_initial(&grid, &law)?;
            let traj = run_effective(&grid, &init, &law, &params, &times)?;
            Ok((traj, start.elapsed().as_secs_f64()))
        },
        || {
            cfg.study
                .n_ladder
                .par_iter()
                .map(|&n| {
                    let start = Instant::now();
                    let run = cfg
                        .detailed_initial(&grid, n)
                        .and_then(|init| run_pnsk(&grid, &init, &law, &params, &times));
                    (n, run, start.elapsed().as_secs_f64())
                })
                .collect()
        },
    );

    let (effective, effective_error, eff_traj) = match eff_result {
        Ok((traj, secs)) => {
            let summary = EffectiveSummary {
                steps: traj.steps,
                max_atoms_seen: traj.max_atoms_seen,
                renorm_violations: traj.renorm_violations,
                clamp_events: traj.clamp_events,
                max_normalization_defect: traj.normalization_defect.iter().fold(0.0f64, |m, &(_, d)| m.max(d)),
                monitors: traj.monitors,
                runtime_s: secs,
            };
            (Some(summary), None, Some(traj))
        }
        Err(e) => (None, Some(e.to_string()), None),
    };

    let rows = detailed
        .into_iter()
        .map(|(n, run, secs)| {
            let mut row = ConvergenceRow {
                n,
                distances: BTreeMap::new(),
                evf_gap: None,
                monitors: None,
                steps: 0,
                max_mass_drift: None,
                min_rho: None,
                error: None,
                runtime_s: secs,
            };
            match run {
                Ok(traj) => {
                    row.monitors = Some(traj.monitors);
                    row.steps = traj.steps;
                    row.max_mass_drift = Some(traj.max_mass_drift());
                    row.min_rho = Some(traj.min_rho);
                    if let Some(eff) = &eff_traj {
                        match compare(&grid, cfg, &law, &params, &traj, eff) {
                            Ok((d, g)) => {
                                row.distances = d;
                                row.evf_gap = Some(g);
                            }
                            Err(e) => row.error = Some(e.to_string()),
                        }
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();

    Ok(ConvergenceReport {
        schema_version: SCHEMA_VERSION,
        seed,
        n_cells: grid.n_cells(),
        window_h: cfg.window_h(),
        gamma_tilde: exps.gamma_tilde,
        theta: exps.theta,
        delta: exps.delta,
        observables: cfg.study.observables.iter().map(|o| o.name().to_string()).collect(),
        snapshot_times: eff_traj
            .as_ref()
            .map_or_else(Vec::new, |t| t.snapshots.iter().map(|s| s.t).collect()),
        effective,
        effective_error,
        rows,
    })
}

/// `true` when the series drops by at least `factor` from first to last
/// entry and has at most one increase, of at most `slack` relative.
pub fn decreasing_trend(values: &[f64], factor: f64, slack: f64) -> bool {
    if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let mut increases = 0;
    for w in values.windows(2) {
        if w[1] > w[0] {
            increases += 1;
            if w[1] > w[0] * (1.0 + slack) {
                return false;
            }
        }
    }
    increases <= 1 && values[0] >= factor * values[values.len() - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_rule() {
        assert!(decreasing_trend(&[1.0, 0.6, 0.4, 0.3], 2.0, 0.1));
        assert!(decreasing_trend(&[1.0, 0.5, 0.52, 0.3], 2.0, 0.1));
        assert!(!decreasing_trend(&[1.0, 0.5, 0.6, 0.3], 2.0, 0.1));
        assert!(!decreasing_trend(&[1.0, 0.5, 0.52, 0.4, 0.41], 2.0, 0.1));
        assert!(!decreasing_trend(&[1.0, 0.8, 0.6], 2.0, 0.1));
    }

    #[test]
    fn single_rung_smoke() {
        let cfg = RunConfig::from_json(
            r#"{"domain": {"n_cells": 64}, "numerics": {"t_end": 0.02, "n_outputs": 2}, "study": {"n_ladder": [1]}}"#,
        )
        .unwrap();
        let report = run_convergence(&cfg, 7).unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        assert!(row.error.is_none(), "{:?}", row.error);
        assert!(row.distances.values().all(|v| v.is_finite()));
        assert!(row.evf_gap.unwrap().is_finite());
        assert_eq!(report.gamma_tilde, 3.0);
    }

    #[test]
    fn monitor_labels_for_gamma_1_4() {
        let cfg = RunConfig::from_json(
            r#"{"domain": {"n_cells": 32}, "pressure": {"kind": "isentropic", "coefficients": [1.0], "gamma": 1.4},
                "numerics": {"t_end": 0.01, "n_outputs": 1}, "study": {"n_ladder": [2]}}"#,
        )
        .unwrap();
        let report = run_convergence(&cfg, 0).unwrap();
        assert_eq!(report.gamma_tilde, 2.0);
        assert!((report.theta - 1.0 / 3.0).abs() < 1e-15);
        assert!((report.delta - 7.0 / 6.0).abs() < 1e-15);
    }
}
