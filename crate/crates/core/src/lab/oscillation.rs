//! Oscillating initial densities and their weak-* limit measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::measure::{Atom, AtomicMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Blocks,
    /// `tanh` ramps of the given width across every interface.
    Smoothed {
        width: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillationSpec {
    pub n_interfaces: usize,
    pub r_vap: f64,
    pub r_liq: f64,
    /// Liquid volume fraction.
    pub theta: f64,
    pub profile: Profile,
}

impl Default for OscillationSpec {
    fn default() -> Self {
        Self {
            n_interfaces: 4,
            r_vap: 1.0,
            r_liq: 5.0,
            theta: 0.5,
            profile: Profile::Blocks,
        }
    }
}

impl OscillationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_interfaces < 1 {
            return Err(Error::Validation(
                "initial.oscillation.n_interfaces must be at least 1".into(),
            ));
        }
        if !(self.r_vap > 0.0 && self.r_vap.is_finite()) {
            return Err(Error::Validation("initial.oscillation.r_vap must be positive".into()));
        }
        if !(self.r_liq > self.r_vap && self.r_liq.is_finite()) {
            return Err(Error::Validation("initial.oscillation.r_liq must exceed r_vap".into()));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Validation("initial.oscillation.theta must lie in (0, 1)".into()));
        }
        if let Profile::Smoothed { width } = self.profile {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::Validation(
                    "initial.oscillation.profile.width must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// `theta r_liq + (1 - theta) r_vap`.
    pub fn mean_density(&self) -> f64 {
        self.theta * self.r_liq + (1.0 - self.theta) * self.r_vap
    }
}

/// Signed distance to the nearest phase boundary, positive inside liquid.
fn liquid_distance(x: f64, block: f64, theta: f64, n: usize) -> f64 {
    let k = ((x / block).floor() as usize).min(n - 1);
    let start = k as f64 * block;
    let split = start + theta * block;
    let end = start + block;
    if x < split {
        let d_right = split - x;
        let d_left = if k == 0 { f64::INFINITY } else { x - start };
        d_right.min(d_left)
    } else {
        let d_left = x - split;
        let d_right = if k + 1 == n { f64::INFINITY } else { end - x };
        -d_left.min(d_right)
    }
}

/// Liquid sub-block of fraction `theta` followed by vapor in each of
/// `n_interfaces` equal macro-blocks, sampled at cell centers.
pub fn gen_oscillating_density(grid: &Grid1D, spec: &OscillationSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.n_interfaces;
    if 2 * n > grid.n_cells() {
        return Err(Error::Resolution(format!(
            "{n} macro-blocks need at least {} cells, grid has {}",
            2 * n,
            grid.n_cells()
        )));
    }
    let block = grid.length() / n as f64;
    let jump = spec.r_liq - spec.r_vap;
    Ok(grid
        .centers()
        .iter()
        .map(|&x| {
            let d = liquid_distance(x, block, spec.theta, n);
            let chi = match spec.profile {
                Profile::Blocks => {
                    if d > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Profile::Smoothed { width } => 0.5 * (1.0 + (d / width).tanh()),
            };
            spec.r_vap + jump * chi
        })
        .collect())
}

/// `(1 - theta) delta_{r_vap} + theta delta_{r_liq}`; a zero weight drops its atom.
pub fn limit_measure(theta: f64, r_vap: f64, r_liq: f64) -> Result<AtomicMeasure> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Domain(format!("liquid fraction {theta} outside [0, 1]")));
    }
    AtomicMeasure::new(vec![Atom::new(1.0 - theta, r_vap), Atom::new(theta, r_liq)])
}
