//! Atomic probability measures per cell, their CDF view, moments, the
//! oscillation drift `Q`, the Stieltjes operator `M[f]`, and compression.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::hydro::Params;
use crate::pressure::PressureLaw;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub xi: f64,
}

impl Atom {
    pub fn new(weight: f64, xi: f64) -> Self {
        Self { weight, xi }
    }
}

/// Finite convex combination of Dirac masses on `[0, inf)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    /// Validates weights and positions; zero-weight atoms are dropped. The
    /// weights are taken as given (call [`renormalize`](Self::renormalize)
    /// to force a unit total).
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if !(a.weight.is_finite() && a.weight >= 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "weight {} is not a non-negative number",
                    a.weight
                )));
            }
            if !(a.xi.is_finite() && a.xi >= 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "atom position {} lies outside [0, inf)",
                    a.xi
                )));
            }
        }
        let atoms: Vec<Atom> = atoms.into_iter().filter(|a| a.weight > 0.0).collect();
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("measure has no mass".into()));
        }
        Ok(Self { atoms })
    }

    pub fn dirac(xi: f64) -> Result<Self> {
        Self::new(vec![Atom::new(1.0, xi)])
    }

    pub(crate) fn from_atoms_unchecked(atoms: Vec<Atom>) -> Self {
        Self { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut Vec<Atom> {
        &mut self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Sum of weights in index order.
    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Scale weights to a unit total and return the defect `sum w - 1`
    /// observed beforehand. The last atom absorbs the rounding residue so the
    /// index-order sum is exactly one.
    pub fn renormalize(&mut self) -> f64 {
        let s = self.total_weight();
        let defect = s - 1.0;
        if self.atoms.is_empty() || !(s > 0.0) {
            return defect;
        }
        for a in self.atoms.iter_mut() {
            a.weight /= s;
        }
        let n = self.atoms.len();
        let mut others = 0.0;
        for a in &self.atoms[..n - 1] {
            others += a.weight;
        }
        let last = 1.0 - others;
        if last > 0.0 {
            self.atoms[n - 1].weight = last;
        }
        defect
    }

    /// `sum w_i g(xi_i)`.
    pub fn moment<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.atoms.iter().map(|a| a.weight * g(a.xi)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(|x| x)
    }

    /// Smallest and largest atom position.
    pub fn support(&self) -> (f64, f64) {
        self.atoms
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
                (lo.min(a.xi), hi.max(a.xi))
            })
    }

    fn sort(&mut self) {
        self.atoms.sort_by(|a, b| a.xi.total_cmp(&b.xi));
    }
}

pub fn moment<G: Fn(f64) -> f64>(m: &AtomicMeasure, g: G) -> f64 {
    m.moment(g)
}

/// Averaged pressure `<nu, Peff>`.
pub fn pbar(m: &AtomicMeasure, law: &PressureLaw) -> f64 {
    m.moment(|x| law.peff(x))
}

/// `Q(xi) = (Pbar - Peff(xi)) / (lambda + 2 mu)`.
pub fn q_drift(m: &AtomicMeasure, law: &PressureLaw, params: &Params, xi: f64) -> f64 {
    (pbar(m, law) - law.peff(xi)) / params.viscosity()
}

/// Lebesgue–Stieltjes integral of `Q` over the closed interval `[0, xi]`.
pub fn stieltjes_m(m: &AtomicMeasure, law: &PressureLaw, params: &Params, xi: f64) -> f64 {
    let p = pbar(m, law);
    let nu = params.viscosity();
    m.atoms()
        .iter()
        .filter(|a| a.xi <= xi)
        .map(|a| a.weight * (p - law.peff(a.xi)) / nu)
        .sum()
}

/// Sampled cumulative distribution function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CDFGrid {
    pub xi: Vec<f64>,
    pub f: Vec<f64>,
}

impl CDFGrid {
    pub fn is_monotone(&self) -> bool {
        self.f.windows(2).all(|w| w[0] <= w[1])
    }
}

/// `f_k = sum_{xi_i <= xi_k} w_i`.
pub fn cdf(m: &AtomicMeasure, xi_grid: &[f64]) -> Result<CDFGrid> {
    if xi_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("CDF knots must be strictly increasing".into()));
    }
    let mut sorted = m.clone();
    sorted.sort();
    let atoms = sorted.atoms();
    let mut f = Vec::with_capacity(xi_grid.len());
    let mut k = 0;
    let mut acc = 0.0;
    for &x in xi_grid {
        while k < atoms.len() && atoms[k].xi <= x {
            acc += atoms[k].weight;
            k += 1;
        }
        f.push(acc);
    }
    Ok(CDFGrid {
        xi: xi_grid.to_vec(),
        f,
    })
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Five-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    h * GAUSS5.iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>()
}

/// `|<m, b> + int b'(xi) f(xi) dxi|` for `b` vanishing at `xi_max`, with the
/// integral evaluated by composite Gauss–Legendre on `n_sub` panels of
/// `[0, xi_max]`, each split at the atoms so `f` is constant on every piece.
pub fn ibp_defect<B, DB>(m: &AtomicMeasure, b: B, db: DB, xi_max: f64, n_sub: usize) -> Result<f64>
where
    B: Fn(f64) -> f64,
    DB: Fn(f64) -> f64,
{
    if !(xi_max > 0.0) || n_sub == 0 {
        return Err(Error::Domain("integration range must be non-empty".into()));
    }
    let mut sorted = m.clone();
    sorted.sort();
    let mut breaks: Vec<f64> = (0..=n_sub).map(|k| xi_max * k as f64 / n_sub as f64).collect();
    breaks.extend(sorted.atoms().iter().map(|a| a.xi).filter(|&x| x > 0.0 && x < xi_max));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut integral = 0.0;
    let mut k = 0;
    let mut acc = 0.0;
    let atoms = sorted.atoms();
    for w in breaks.windows(2) {
        while k < atoms.len() && atoms[k].xi <= w[0] {
            acc += atoms[k].weight;
            k += 1;
        }
        integral += acc * gauss5(&db, w[0], w[1]);
    }
    Ok((m.moment(&b) + integral).abs())
}

/// Sort, merge atoms closer than `merge_eps`, then merge the least
/// disturbing neighbour pairs until at most `max_atoms` remain. Every merge
/// preserves weight and first moment; the result is renormalized.
pub fn compress(m: &AtomicMeasure, merge_eps: f64, max_atoms: usize) -> Result<AtomicMeasure> {
    if max_atoms < 1 {
        return Err(Error::Domain("max_atoms must be at least 1".into()));
    }
    let mut out = m.clone();
    compress_in_place(&mut out, merge_eps, max_atoms);
    Ok(out)
}

fn merge(a: Atom, b: Atom) -> Atom {
    let w = a.weight + b.weight;
    let xi = if a.xi == b.xi {
        a.xi
    } else {
        (a.weight * a.xi + b.weight * b.xi) / w
    };
    Atom::new(w, xi)
}

pub(crate) fn compress_in_place(m: &mut AtomicMeasure, merge_eps: f64, max_atoms: usize) {
    if m.atoms.len() <= 1 {
        m.renormalize();
        return;
    }
    m.sort();
    let mut merged: Vec<Atom> = Vec::with_capacity(m.atoms.len());
    for &a in &m.atoms {
        match merged.last_mut() {
            Some(last) if a.xi - last.xi <= merge_eps => *last = merge(*last, a),
            _ => merged.push(a),
        }
    }
    if merged.len() > max_atoms {
        merged = merge_to_count(merged, max_atoms);
    }
    m.atoms = merged;
    m.renormalize();
}

fn merge_cost(a: Atom, b: Atom) -> f64 {
    let d = b.xi - a.xi;
    a.weight * b.weight / (a.weight + b.weight) * d * d
}

#[derive(PartialEq)]
struct Candidate {
    cost: f64,
    left: usize,
    stamp: (u32, u32),
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Reversed so the max-heap pops the cheapest (then leftmost) pair first.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.cost.total_cmp(&self.cost).then(other.left.cmp(&self.left))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy neighbour merging of sorted atoms: repeatedly join the adjacent
/// pair with the smallest second-moment loss `w_i w_j / (w_i + w_j) dxi^2`.
fn merge_to_count(atoms: Vec<Atom>, target: usize) -> Vec<Atom> {
    use std::collections::BinaryHeap;
    let n = atoms.len();
    let mut atoms = atoms;
    let mut alive = vec![true; n];
    let mut next: Vec<usize> = (1..=n).collect();
    let mut prev: Vec<usize> = (0..n).map(|i| i.wrapping_sub(1)).collect();
    let mut version = vec![0u32; n];
    let mut heap = BinaryHeap::with_capacity(n);
    for i in 0..n - 1 {
        heap.push(Candidate {
            cost: merge_cost(atoms[i], atoms[i + 1]),
            left: i,
            stamp: (0, 0),
        });
    }
    let mut count = n;
    while count > target {
        let Some(c) = heap.pop() else { break };
        let i = c.left;
        if !alive[i] || next[i] >= n {
            continue;
        }
        let j = next[i];
        if c.stamp != (version[i], version[j]) {
            continue;
        }
        atoms[i] = merge(atoms[i], atoms[j]);
        alive[j] = false;
        version[i] += 1;
        next[i] = next[j];
        if next[i] < n {
            prev[next[i]] = i;
            let k = next[i];
            heap.push(Candidate {
                cost: merge_cost(atoms[i], atoms[k]),
                left: i,
                stamp: (version[i], version[k]),
            });
        }
        let p = prev[i];
        if p < n {
            heap.push(Candidate {
                cost: merge_cost(atoms[p], atoms[i]),
                left: p,
                stamp: (version[p], version[i]),
            });
        }
        count -= 1;
    }
    atoms
        .into_iter()
        .zip(alive)
        .filter(|(_, a)| *a)
        .map(|(a, _)| a)
        .collect()
}

/// One atomic measure per grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureField {
    cells: Vec<AtomicMeasure>,
}

impl MeasureField {
    pub fn new(grid: &Grid1D, cells: Vec<AtomicMeasure>) -> Result<Self> {
        if cells.len() != grid.n_cells() {
            return Err(Error::SizeMismatch {
                what: "measure field",
                expected: grid.n_cells(),
                got: cells.len(),
            });
        }
        Ok(Self { cells })
    }

    /// The same measure in every cell.
    pub fn uniform(grid: &Grid1D, m: &AtomicMeasure) -> Self {
        Self {
            cells: vec![m.clone(); grid.n_cells()],
        }
    }

    /// `delta_{rho_i}` in cell `i`.
    pub fn dirac(grid: &Grid1D, rho: &[f64]) -> Result<Self> {
        let cells = rho
            .iter()
            .map(|&r| AtomicMeasure::dirac(r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, cells)
    }

    pub fn cells(&self) -> &[AtomicMeasure] {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [AtomicMeasure] {
        &mut self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Per-cell `<nu, g>`.
    pub fn moments<G: Fn(f64) -> f64>(&self, g: G) -> Vec<f64> {
        self.cells.iter().map(|m| m.moment(&g)).collect()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.moments(|x| x)
    }

    pub fn pbar(&self, law: &PressureLaw) -> Vec<f64> {
        self.moments(|x| law.peff(x))
    }

    pub fn max_atoms(&self) -> usize {
        self.cells.iter().map(|m| m.len()).max().unwrap_or(0)
    }

    pub fn min_atoms(&self) -> usize {
        self.cells.iter().map(|m| m.len()).min().unwrap_or(0)
    }

    /// Smallest atom position over the field.
    pub fn min_xi(&self) -> f64 {
        self.cells.iter().map(|m| m.support().0).fold(f64::INFINITY, f64::min)
    }

    /// `sum_i (sum w)_i dx`.
    pub fn total_weight(&self, grid: &Grid1D) -> f64 {
        self.cells.iter().map(|m| m.total_weight()).sum::<f64>() * grid.dx()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square_law() -> PressureLaw {
        // Peff(xi) = xi^2 for the hand-computed examples.
        PressureLaw::cubic_unchecked(0.0, 0.0, 0.0, 2.0)
    }

    fn unit_visc() -> Params {
        Params {
            mu: 0.25,
            lambda: 0.5,
            ..Params::default()
        }
    }

    fn m(pairs: &[(f64, f64)]) -> AtomicMeasure {
        AtomicMeasure::new(pairs.iter().map(|&(w, x)| Atom::new(w, x)).collect()).unwrap()
    }

    #[test]
    fn moment_examples() {
        assert!((m(&[(0.3, 1.0), (0.7, 2.0)]).mean() - 1.7).abs() < 1e-15);
        assert_eq!(m(&[(0.3, 1.0), (0.7, 2.0)]).moment(|_| 1.0), 1.0);
        let law = square_law();
        assert_eq!(pbar(&m(&[(0.5, 1.0), (0.5, 3.0)]), &law), 5.0);
    }

    #[test]
    fn q_drift_examples() {
        let law = square_law();
        let p = unit_visc();
        assert_eq!(p.viscosity(), 1.0);
        let single = AtomicMeasure::dirac(2.3).unwrap();
        assert_eq!(q_drift(&single, &law, &p, 2.3), 0.0);
        let two = m(&[(0.5, 1.0), (0.5, 3.0)]);
        assert_eq!(q_drift(&two, &law, &p, 1.0), 4.0);
        assert_eq!(q_drift(&two, &law, &p, 3.0), -4.0);
        assert_eq!(two.moment(|x| q_drift(&two, &law, &p, x)), 0.0);
    }

    #[test]
    fn cdf_examples() {
        let c = cdf(&m(&[(0.3, 1.0), (0.7, 2.0)]), &[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(c.f, vec![0.0, 0.3, 1.0]);
        let c = cdf(&AtomicMeasure::dirac(0.0).unwrap(), &[0.0]).unwrap();
        assert_eq!(c.f, vec![1.0]);
        let c = cdf(&m(&[(1.0, 5.0)]), &[0.0, 1.0, 4.9]).unwrap();
        assert!(c.f.iter().all(|&v| v == 0.0));
        assert!(cdf(&m(&[(1.0, 5.0)]), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn stieltjes_examples() {
        let law = square_law();
        let p = unit_visc();
        let two = m(&[(0.5, 1.0), (0.5, 3.0)]);
        assert_eq!(stieltjes_m(&two, &law, &p, 2.0), 2.0);
        assert_eq!(stieltjes_m(&two, &law, &p, 3.0), 0.0);
        assert_eq!(stieltjes_m(&two, &law, &p, 100.0), 0.0);
        assert_eq!(stieltjes_m(&two, &law, &p, 0.5), 0.0);
        // Closed interval: the atom at 1 is included at xi = 1.
        assert_eq!(stieltjes_m(&two, &law, &p, 1.0), 2.0);
    }

    #[test]
    fn compress_examples() {
        let c = compress(&m(&[(0.5, 1.0), (0.5, 1.0)]), 0.0, 64).unwrap();
        assert_eq!(c.atoms(), &[Atom::new(1.0, 1.0)]);
        let c = compress(&m(&[(0.5, 1.0), (0.5, 1.0 + 1e-9)]), 1e-6, 64).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.atoms()[0].xi - (1.0 + 5e-10)).abs() < 1e-15);
        assert!(compress(&c, 0.0, 0).is_err());
        let many = m(&[(0.1, 0.0), (0.2, 1.0), (0.3, 1.1), (0.4, 5.0)]);
        let c = compress(&many, 0.0, 3).unwrap();
        assert_eq!(c.len(), 3);
        assert!((c.atoms()[1].xi - (0.2 + 0.33) / 0.5).abs() < 1e-14);
        assert!((c.mean() - many.mean()).abs() < 1e-14);
    }

    #[test]
    fn renormalize_sums_to_one_exactly() {
        let mut a = m(&[(0.1, 1.0), (0.2, 2.0), (0.3, 4.0), (0.45, 5.0)]);
        let d = a.renormalize();
        assert!((d - 0.05).abs() < 1e-15);
        assert_eq!(a.total_weight(), 1.0);
    }

    #[test]
    fn invalid_measures() {
        assert!(AtomicMeasure::new(vec![]).is_err());
        assert!(AtomicMeasure::new(vec![Atom::new(1.0, -0.1)]).is_err());
        assert!(AtomicMeasure::new(vec![Atom::new(-1.0, 0.1)]).is_err());
        assert!(AtomicMeasure::new(vec![Atom::new(0.0, 0.1)]).is_err());
        assert_eq!(m(&[(0.0, 1.0), (1.0, 2.0)]).len(), 1);
    }

    fn arb_measure() -> impl Strategy<Value = AtomicMeasure> {
        proptest::collection::vec((0.01f64..1.0, 0.0f64..8.0), 1..12).prop_map(|v| {
            let mut a = AtomicMeasure::new(v.into_iter().map(|(w, x)| Atom::new(w, x)).collect()).unwrap();
            a.renormalize();
            a
        })
    }

    proptest! {
        #[test]
        fn drift_has_zero_mean(a in arb_measure()) {
            let law = PressureLaw::reference_vdw(crate::pressure::REF_VDW_ALPHA).unwrap();
            let p = Params::default();
            let scale = pbar(&a, &law).abs() / p.viscosity() + 1.0;
            let total = a.moment(|x| q_drift(&a, &law, &p, x));
            prop_assert!(total.abs() <= 1e-14 * scale);
            prop_assert_eq!(stieltjes_m(&a, &law, &p, f64::INFINITY), total);
        }

        #[test]
        fn cdf_monotone_ends_at_one(a in arb_measure()) {
            let grid: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
            let c = cdf(&a, &grid).unwrap();
            prop_assert!(c.is_monotone());
            prop_assert!((c.f[199] - 1.0).abs() < 1e-15);
        }

        #[test]
        fn moment_is_linear(a in arb_measure(), s in -3.0f64..3.0, t in -3.0f64..3.0) {
            let lhs = a.moment(|x| s * x * x + t * x.sin());
            let rhs = s * a.moment(|x| x * x) + t * a.moment(f64::sin);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn integration_by_parts(a in arb_measure()) {
            let b = |x: f64| if x < 9.0 { (81.0 - x * x).powi(2) / 6561.0 } else { 0.0 };
            let db = |x: f64| if x < 9.0 { -4.0 * x * (81.0 - x * x) / 6561.0 } else { 0.0 };
            prop_assert!(ibp_defect(&a, b, db, 9.0, 64).unwrap() < 1e-12);
        }

        #[test]
        fn compression_preserves_first_moment(a in arb_measure(), max in 1usize..6) {
            let c = compress(&a, 1e-3, max).unwrap();
            prop_assert!(c.len() <= max);
            prop_assert_eq!(c.total_weight(), 1.0);
            prop_assert!((c.mean() - a.mean()).abs() <= 1e-13 * (1.0 + a.mean()));
        }
    }
}
