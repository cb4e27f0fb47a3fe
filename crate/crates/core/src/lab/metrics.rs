//! Weak-* probes: mollified L2 distances and the effective-viscous-flux gap.

use crate::effective::EffectiveState;
use crate::error::{Error, Result};
use crate::grid::{div_face_to_center, l2_norm, mollify, FluidState, Grid1D};
use crate::hydro::Params;
use crate::pressure::PressureLaw;

/// Default bounded observable `b(z) = z / (1 + z)`.
pub fn bounded_observable(z: f64) -> f64 {
    z / (1.0 + z)
}

/// `|| mollify(a - b, window_h) ||_{L2}`.
pub fn weak_distance(grid: &Grid1D, a: &[f64], b: &[f64], window_h: f64) -> Result<f64> {
    if a.len() != grid.n_cells() || b.len() != grid.n_cells() {
        return Err(Error::GridMismatch(format!(
            "fields of length {} and {} on a {}-cell grid",
            a.len(),
            b.len(),
            grid.n_cells()
        )));
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(l2_norm(grid, &mollify(grid, &diff, window_h)?))
}

/// Root mean square of [`weak_distance`] over paired snapshots.
pub fn weak_distance_series(grid: &Grid1D, a: &[Vec<f64>], b: &[Vec<f64>], window_h: f64) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::GridMismatch(format!(
            "{} snapshots against {}",
            a.len(),
            b.len()
        )));
    }
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = weak_distance(grid, x, y, window_h)?;
        sum += d * d;
    }
    Ok((sum / a.len() as f64).sqrt())
}

/// `(Peff(rho) - (lambda + 2 mu) d_x u) b(rho)` at cell centers.
pub fn evf_detailed<B: Fn(f64) -> f64>(
    grid: &Grid1D,
    state: &FluidState,
    law: &PressureLaw,
    params: &Params,
    b: B,
) -> Vec<f64> {
    let div = div_face_to_center(grid, &state.u);
    let nu = params.viscosity();
    state
        .rho
        .iter()
        .zip(&div)
        .map(|(&r, &d)| (law.peff(r) - nu * d) * b(r))
        .collect()
}

/// `(Pbar - (lambda + 2 mu) d_x u) <nu, b>` at cell centers.
pub fn evf_effective<B: Fn(f64) -> f64>(grid: &Grid1D, state: &EffectiveState, params: &Params, b: B) -> Vec<f64> {
    let div = div_face_to_center(grid, &state.u);
    let nu = params.viscosity();
    let bbar = state.nu.moments(&b);
    state
        .pbar
        .iter()
        .zip(&div)
        .zip(&bbar)
        .map(|((&p, &d), &bb)| (p - nu * d) * bb)
        .collect()
}

/// Root mean square over snapshots with `t > t0` of the weak distance
/// between the detailed and the effective viscous-flux products.
pub fn evf_gap<B: Fn(f64) -> f64 + Copy>(
    grid: &Grid1D,
    detailed: &[FluidState],
    effective: &[EffectiveState],
    law: &PressureLaw,
    params: &Params,
    b: B,
    window_h: f64,
) -> Result<f64> {
    if detailed.len() != effective.len() || detailed.is_empty() {
        return Err(Error::GridMismatch(format!(
            "{} detailed snapshots against {} effective ones",
            detailed.len(),
            effective.len()
        )));
    }
    let t0 = detailed[0].t;
    let mut a = Vec::new();
    let mut e = Vec::new();
    for (d, f) in detailed.iter().zip(effective) {
        if (d.t - f.t).abs() > 1e-12 * (1.0 + d.t.abs()) {
            return Err(Error::GridMismatch(format!(
                "snapshot times {} and {} differ",
                d.t, f.t
            )));
        }
        if d.t > t0 {
            a.push(evf_detailed(grid, d, law, params, b));
            e.push(evf_effective(grid, f, params, b));
        }
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    weak_distance_series(grid, &a, &e, window_h)
}
