//! JSON run configuration with defaults and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::effective::EffectiveState;
use crate::error::{Error, Result};
use crate::grid::{FluidState, Grid1D};
use crate::hydro::Params;
use crate::measure::MeasureField;
use crate::pressure::{PressureLaw, REF_VDW_ALPHA, REF_VDW_CENTER, REF_VDW_OFFSET, REF_VDW_SCALE};

use super::oscillation::{gen_oscillating_density, limit_measure, OscillationSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub length: f64,
    pub n_cells: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            n_cells: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            mu: 0.3,
            lambda: 0.4,
            kappa: 1e-3,
            alpha: REF_VDW_ALPHA,
            beta: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawKind {
    Isentropic,
    VdwCubic,
    Tabulated,
}

/// Law block. Coefficients: `[coef]` for isentropic laws, `[scale, center,
/// offset]` for the cubic, and flattened `(r, P)` pairs for tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PressureConfig {
    pub kind: LawKind,
    pub coefficients: Vec<f64>,
    pub gamma: Option<f64>,
    pub p_inf: Option<f64>,
    /// Must agree with `physics.alpha` when given.
    pub alpha: Option<f64>,
}

impl Default for PressureConfig {
    fn default() -> Self {
        Self {
            kind: LawKind::VdwCubic,
            coefficients: vec![REF_VDW_SCALE, REF_VDW_CENTER, REF_VDW_OFFSET],
            gamma: None,
            p_inf: None,
            alpha: None,
        }
    }
}

/// `u0(x) = amplitude sin(mode pi x / L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VelocityInit {
    pub amplitude: f64,
    pub mode: u32,
}

impl Default for VelocityInit {
    fn default() -> Self {
        Self {
            amplitude: 0.02,
            mode: 1,
        }
    }
}

/// `c0(x) = mean + amplitude cos(mode pi x / L)`; the mean defaults to the
/// mean initial density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrderInit {
    pub mean: Option<f64>,
    pub amplitude: f64,
    pub mode: u32,
}

impl Default for OrderInit {
    fn default() -> Self {
        Self {
            mean: None,
            amplitude: 0.5,
            mode: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureInit {
    /// Two-atom weak-* limit of the oscillating densities.
    Limit,
    /// `delta_{rho0(x)}` from the configured oscillating density.
    Dirac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub oscillation: OscillationSpec,
    pub u0: VelocityInit,
    pub c0: OrderInit,
    pub measure: MeasureInit,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            oscillation: OscillationSpec::default(),
            u0: VelocityInit::default(),
            c0: OrderInit::default(),
            measure: MeasureInit::Limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub cfl: f64,
    pub dt_max: f64,
    pub t_end: f64,
    /// Explicit output times; when absent, `n_outputs` equally spaced times
    /// in `(0, t_end]`.
    pub output_times: Option<Vec<f64>>,
    pub n_outputs: usize,
    pub max_atoms: usize,
    pub merge_eps: f64,
    pub renorm_tol: f64,
    /// Mollifier window; defaults to `L / 16`.
    pub window_h: Option<f64>,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            dt_max: 1e-3,
            t_end: 0.5,
            output_times: None,
            n_outputs: 10,
            max_atoms: 64,
            merge_eps: 1e-6,
            renorm_tol: 1e-4,
            window_h: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Xi,
    Peff,
    Bounded,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Xi => "xi",
            Observable::Peff => "peff",
            Observable::Bounded => "bounded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub n_ladder: Vec<usize>,
    pub observables: Vec<Observable>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n_ladder: vec![4, 8, 16, 32],
            observables: vec![Observable::Xi, Observable::Peff, Observable::Bounded],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub physics: PhysicsConfig,
    pub pressure: PressureConfig,
    pub initial: InitialConfig,
    pub numerics: NumericsConfig,
    pub study: StudyConfig,
}

fn positive(v: f64, key: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{key} must be positive")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        positive(self.domain.length, "domain.length")?;
        if self.domain.n_cells < 4 {
            return Err(Error::Validation("domain.n_cells must be at least 4".into()));
        }
        let ph = &self.physics;
        positive(ph.mu, "physics.mu")?;
        positive(ph.lambda, "physics.lambda")?;
        positive(ph.kappa, "physics.kappa")?;
        positive(ph.alpha, "physics.alpha")?;
        positive(ph.beta, "physics.beta")?;
        if let Some(a) = self.pressure.alpha {
            if a != ph.alpha {
                return Err(Error::Validation(format!(
                    "pressure.alpha ({a}) must equal physics.alpha ({})",
                    ph.alpha
                )));
            }
        }
        self.law()?;
        self.initial.oscillation.validate()?;
        let nu = &self.numerics;
        if !(nu.cfl > 0.0 && nu.cfl <= 1.0) {
            return Err(Error::Validation("numerics.cfl must lie in (0, 1]".into()));
        }
        positive(nu.dt_max, "numerics.dt_max")?;
        if !(nu.t_end >= 0.0 && nu.t_end.is_finite()) {
            return Err(Error::Validation("numerics.t_end must be non-negative".into()));
        }
        if nu.max_atoms < 1 {
            return Err(Error::Validation("numerics.max_atoms must be at least 1".into()));
        }
        if !(nu.merge_eps >= 0.0) {
            return Err(Error::Validation("numerics.merge_eps must be non-negative".into()));
        }
        positive(nu.renorm_tol, "numerics.renorm_tol")?;
        if let Some(h) = nu.window_h {
            if !(h >= self.domain.length / self.domain.n_cells as f64) {
                return Err(Error::Validation("numerics.window_h must be at least one cell".into()));
            }
        }
        if let Some(times) = &nu.output_times {
            if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|&t| !(t >= 0.0)) {
                return Err(Error::Validation(
                    "numerics.output_times must be non-negative and strictly increasing".into(),
                ));
            }
        } else if nu.n_outputs < 1 && nu.t_end > 0.0 {
            return Err(Error::Validation("numerics.n_outputs must be at least 1".into()));
        }
        if self.study.n_ladder.is_empty() {
            return Err(Error::Validation("study.n_ladder must not be empty".into()));
        }
        for &n in &self.study.n_ladder {
            if n < 1 || 2 * n > self.domain.n_cells {
                return Err(Error::Validation(format!(
                    "study.n_ladder entry {n} needs 1 <= n <= n_cells/2 = {} (oscillating density generator)",
                    self.domain.n_cells / 2
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.domain.n_cells, self.domain.length)
    }

    pub fn params(&self) -> Params {
        let ph = &self.physics;
        let nu = &self.numerics;
        Params {
            mu: ph.mu,
            lambda: ph.lambda,
            kappa: ph.kappa,
            alpha: ph.alpha,
            beta: ph.beta,
            cfl: nu.cfl,
            dt_max: nu.dt_max,
            t_end: nu.t_end,
            renorm_tol: nu.renorm_tol,
            merge_eps: nu.merge_eps,
            max_atoms: nu.max_atoms,
        }
    }

    pub fn law(&self) -> Result<PressureLaw> {
        let p = &self.pressure;
        let alpha = self.physics.alpha;
        let k = &p.coefficients;
        let law = match p.kind {
            LawKind::Isentropic => {
                let coef = match k.as_slice() {
                    [] => 1.0,
                    [c] => *c,
                    _ => {
                        return Err(Error::Validation(
                            "pressure.coefficients takes [coef] for isentropic laws".into(),
                        ))
                    }
                };
                let gamma = p
                    .gamma
                    .ok_or_else(|| Error::Validation("pressure.gamma is required for isentropic laws".into()))?;
                PressureLaw::isentropic(coef, gamma, alpha).map_err(to_validation)?
            }
            LawKind::VdwCubic => {
                let (s, c, o) = match k.as_slice() {
                    [] => (REF_VDW_SCALE, REF_VDW_CENTER, REF_VDW_OFFSET),
                    [s, c, o] => (*s, *c, *o),
                    _ => {
                        return Err(Error::Validation(
                            "pressure.coefficients takes [scale, center, offset] for vdw-cubic laws".into(),
                        ))
                    }
                };
                if p.gamma.is_some_and(|g| g != 3.0) {
                    return Err(Error::Validation("pressure.gamma of a vdw-cubic law is 3".into()));
                }
                PressureLaw::vdw_cubic(s, c, o, alpha).map_err(to_validation)?
            }
            LawKind::Tabulated => {
                if k.len() < 4 || !k.len().is_multiple_of(2) {
                    return Err(Error::Validation(
                        "pressure.coefficients takes flattened (r, P) pairs for tabulated laws".into(),
                    ));
                }
                let gamma = p
                    .gamma
                    .ok_or_else(|| Error::Validation("pressure.gamma is required for tabulated laws".into()))?;
                let r = k.iter().step_by(2).copied().collect();
                let v = k.iter().skip(1).step_by(2).copied().collect();
                PressureLaw::tabulated(r, v, gamma, alpha).map_err(to_validation)?
            }
        };
        match p.p_inf {
            Some(pi) => law.with_p_inf(pi).map_err(to_validation),
            None => Ok(law),
        }
    }

    pub fn window_h(&self) -> f64 {
        self.numerics.window_h.unwrap_or(self.domain.length / 16.0)
    }

    pub fn output_times(&self) -> Vec<f64> {
        let nu = &self.numerics;
        match &nu.output_times {
            Some(t) => t.clone(),
            None if nu.t_end == 0.0 => Vec::new(),
            None => (1..=nu.n_outputs)
                .map(|k| nu.t_end * k as f64 / nu.n_outputs as f64)
                .collect(),
        }
    }

    /// n-independent initial velocity.
    pub fn initial_velocity(&self, grid: &Grid1D) -> Vec<f64> {
        let n = grid.n_cells();
        let l = grid.length();
        let v = &self.initial.u0;
        let mut u: Vec<f64> = grid
            .faces()
            .iter()
            .map(|x| v.amplitude * (v.mode as f64 * std::f64::consts::PI * x / l).sin())
            .collect();
        u[0] = 0.0;
        u[n] = 0.0;
        u
    }

    /// n-independent initial order parameter.
    pub fn initial_order_parameter(&self, grid: &Grid1D) -> Vec<f64> {
        let l = grid.length();
        let c = &self.initial.c0;
        let mean = c.mean.unwrap_or_else(|| self.initial.oscillation.mean_density());
        grid.centers()
            .iter()
            .map(|x| mean + c.amplitude * (c.mode as f64 * std::f64::consts::PI * x / l).cos())
            .collect()
    }

    /// Detailed initial state with `n` macro-blocks.
    pub fn detailed_initial(&self, grid: &Grid1D, n_interfaces: usize) -> Result<FluidState> {
        let spec = OscillationSpec {
            n_interfaces,
            ..self.initial.oscillation.clone()
        };
        let rho = gen_oscillating_density(grid, &spec)?;
        Ok(FluidState::new(
            0.0,
            rho,
            self.initial_velocity(grid),
            self.initial_order_parameter(grid),
        ))
    }

    /// Effective initial state from the configured measure choice.
    pub fn effective_initial(&self, grid: &Grid1D, law: &PressureLaw) -> Result<EffectiveState> {
        let osc = &self.initial.oscillation;
        let nu = match self.initial.measure {
            MeasureInit::Limit => MeasureField::uniform(grid, &limit_measure(osc.theta, osc.r_vap, osc.r_liq)?),
            MeasureInit::Dirac => MeasureField::dirac(grid, &gen_oscillating_density(grid, osc)?)?,
        };
        EffectiveState::new(
            grid,
            0.0,
            nu,
            self.initial_velocity(grid),
            self.initial_order_parameter(grid),
            law,
        )
    }
}

fn to_validation(e: Error) -> Error {
    match e {
        Error::Validation(m) => Error::Validation(m),
        other => Error::Validation(format!("pressure: {other}")),
    }
}
