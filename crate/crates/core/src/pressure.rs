//! Pressure laws, the pressure potential and the artificial pressure.
//!
//! A [`PressureLaw`] bundles an admissible pressure function `P` with its
//! growth exponent, asymptotic coefficient and the coupling coefficient
//! `alpha` that defines the artificial pressure `Peff(r) = P(r) + alpha/2 r^2`.
//! The pressure potential `W(r) = r * int_1^r P(z)/z^2 dz` satisfies
//! `P = W' r - W` and is evaluated in closed form where one exists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scale, center and offset of the cubic Van-der-Waals example law.
pub const REF_VDW_SCALE: f64 = 3.234;
pub const REF_VDW_CENTER: f64 = 0.55;
pub const REF_VDW_OFFSET: f64 = 0.468;
/// Coupling coefficient for which the shift adds `0.25 x^2` in scaled units.
pub const REF_VDW_ALPHA: f64 = 0.5 / (REF_VDW_SCALE * REF_VDW_SCALE);

/// Absolute tolerance of the adaptive quadrature for `W`.
pub const POTENTIAL_QUAD_TOL: f64 = 1e-10;

/// Which quantity [`PressureLaw::eval`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    P,
    DP,
    Peff,
    DPeff,
}

/// Monotone piecewise cubic Hermite interpolant (Fritsch-Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::SizeMismatch {
                what: "spline values",
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.len() < 2 {
            return Err(Error::UnsupportedLaw("table needs at least two knots".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::UnsupportedLaw("table knots must be strictly increasing".into()));
        }
        let n = x.len();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
        let mut m = vec![0.0; n];
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
        for k in 1..n - 1 {
            m[k] = if delta[k - 1] * delta[k] <= 0.0 {
                0.0
            } else {
                (delta[k - 1] + delta[k]) / 2.0
            };
        }
        for k in 0..n - 1 {
            if delta[k] == 0.0 {
                m[k] = 0.0;
                m[k + 1] = 0.0;
                continue;
            }
            let a = m[k] / delta[k];
            let b = m[k + 1] / delta[k];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                m[k] = tau * a * delta[k];
                m[k + 1] = tau * b * delta[k];
            }
        }
        Ok(Self { x, y, m })
    }

    fn segment(&self, r: f64) -> usize {
        match self.x.partition_point(|&xk| xk <= r) {
            0 => 0,
            k => (k - 1).min(self.x.len() - 2),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        let k = self.segment(r);
        let h = self.x[k + 1] - self.x[k];
        let t = (r - self.x[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[k] + h10 * h * self.m[k] + h01 * self.y[k + 1] + h11 * h * self.m[k + 1]
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let k = self.segment(r);
        let h = self.x[k + 1] - self.x[k];
        let t = (r - self.x[k]) / h;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        (d00 * self.y[k] + d01 * self.y[k + 1]) / h + d10 * self.m[k] + d11 * self.m[k + 1]
    }

    pub fn last_knot(&self) -> (f64, f64) {
        (*self.x.last().unwrap(), *self.y.last().unwrap())
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PressureKind {
    /// `P(r) = coef * r^gamma`.
    Isentropic { coef: f64 },
    /// `P(r) = a1 r + a2 r^2 + a3 r^3`.
    Cubic { a1: f64, a2: f64, a3: f64 },
    /// Monotone cubic spline through `(r_k, P_k)` with `r_0 = 0`, `P_0 = 0`,
    /// continued by `P_M (r / r_M)^gamma` beyond the last knot.
    Tabulated(MonotoneCubic),
}

/// An admissible pressure law together with the coupling coefficient `alpha`.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureLaw {
    kind: PressureKind,
    gamma: f64,
    p_inf: f64,
    alpha: f64,
}

/// Density interval on which `P' < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinodalInfo {
    pub r1: f64,
    pub r2: f64,
    pub exists: bool,
}

impl SpinodalInfo {
    fn none() -> Self {
        Self {
            r1: f64::NAN,
            r2: f64::NAN,
            exists: false,
        }
    }
}

impl PressureLaw {
    /// Isentropic law `coef * r^gamma`; `p_inf = coef * gamma`.
    pub fn isentropic(coef: f64, gamma: f64, alpha: f64) -> Result<Self> {
        let law = Self {
            kind: PressureKind::Isentropic { coef },
            gamma,
            p_inf: coef * gamma,
            alpha,
        };
        law.validate()?;
        Ok(law)
    }

    /// Cubic Van-der-Waals law `P(r) = Phat(r/scale) - Phat(0)` with
    /// `Phat(x) = (x - center)^3 - (x - center)^2 + offset`.
    ///
    /// Subtracting `Phat(0)` enforces `P(0) = 0`; the offset cancels.
    pub fn vdw_cubic(scale: f64, center: f64, offset: f64, alpha: f64) -> Result<Self> {
        let _ = offset;
        if !(scale > 0.0) {
            return Err(Error::UnsupportedLaw("cubic scale must be positive".into()));
        }
        let c = center;
        let a3 = 1.0 / scale.powi(3);
        let a2 = -(3.0 * c + 1.0) / scale.powi(2);
        let a1 = (3.0 * c * c + 2.0 * c) / scale;
        let law = Self {
            kind: PressureKind::Cubic { a1, a2, a3 },
            gamma: 3.0,
            p_inf: 3.0 * a3,
            alpha,
        };
        law.validate()?;
        Ok(law)
    }

    /// The Van-der-Waals example with the given coupling coefficient.
    pub fn reference_vdw(alpha: f64) -> Result<Self> {
        Self::vdw_cubic(REF_VDW_SCALE, REF_VDW_CENTER, REF_VDW_OFFSET, alpha)
    }

    /// General cubic `a1 r + a2 r^2 + a3 r^3`, not validated for positivity.
    pub fn cubic_unchecked(a1: f64, a2: f64, a3: f64, alpha: f64) -> Self {
        Self {
            kind: PressureKind::Cubic { a1, a2, a3 },
            gamma: 3.0,
            p_inf: 3.0 * a3,
            alpha,
        }
    }

    pub fn tabulated(r: Vec<f64>, p: Vec<f64>, gamma: f64, alpha: f64) -> Result<Self> {
        if r.first() != Some(&0.0) {
            return Err(Error::UnsupportedLaw("table must start at r = 0".into()));
        }
        let spline = MonotoneCubic::new(r, p)?;
        let (r_m, p_m) = spline.last_knot();
        let p_inf = gamma * p_m / r_m.powf(gamma);
        let law = Self {
            kind: PressureKind::Tabulated(spline),
            gamma,
            p_inf,
            alpha,
        };
        law.validate()?;
        Ok(law)
    }

    /// Override the declared asymptotic coefficient (checked by [`validate`](Self::validate)).
    pub fn with_p_inf(mut self, p_inf: f64) -> Result<Self> {
        self.p_inf = p_inf;
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> &PressureKind {
        &self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `max(2, gamma)`.
    pub fn gamma_tilde(&self) -> f64 {
        self.gamma.max(2.0)
    }

    pub fn p_inf(&self) -> f64 {
        self.p_inf
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Checks admissibility on sample grids: `P(0) = 0`, `P >= 0`, and
    /// `P'(r) / r^(gamma-1)` within 5% of `p_inf` at `r = 1e3, 1e4`.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(Error::UnsupportedLaw(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::UnsupportedLaw(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.p_inf > 0.0) {
            return Err(Error::UnsupportedLaw(format!(
                "p_inf must be positive, got {}",
                self.p_inf
            )));
        }
        if self.p(0.0) != 0.0 {
            return Err(Error::UnsupportedLaw(format!("P(0) = {} is not zero", self.p(0.0))));
        }
        for k in 0..=2000 {
            let r = 50.0 * k as f64 / 2000.0;
            let p = self.p(r);
            if !(p >= 0.0) {
                return Err(Error::UnsupportedLaw(format!("P({r}) = {p} is negative")));
            }
        }
        for r in [1e3, 1e4] {
            let ratio = self.dp(r) / r.powf(self.gamma - 1.0);
            if ((ratio - self.p_inf) / self.p_inf).abs() > 0.05 {
                return Err(Error::UnsupportedLaw(format!(
                    "P'(r)/r^(gamma-1) = {ratio} at r = {r} is not within 5% of p_inf = {}",
                    self.p_inf
                )));
            }
        }
        Ok(())
    }

    /// Checked evaluation of `P`, `P'`, `Peff` or `Peff'`.
    pub fn eval(&self, r: f64, which: Quantity) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("density must be non-negative, got {r}")));
        }
        Ok(match which {
            Quantity::P => self.p(r),
            Quantity::DP => self.dp(r),
            Quantity::Peff => self.peff(r),
            Quantity::DPeff => self.dpeff(r),
        })
    }

    #[inline]
    pub fn p(&self, r: f64) -> f64 {
        match &self.kind {
            PressureKind::Isentropic { coef } => coef * r.powf(self.gamma),
            PressureKind::Cubic { a1, a2, a3 } => r * (a1 + r * (a2 + r * a3)),
            PressureKind::Tabulated(s) => {
                let (r_m, p_m) = s.last_knot();
                if r <= r_m {
                    s.value(r)
                } else {
                    p_m * (r / r_m).powf(self.gamma)
                }
            }
        }
    }

    #[inline]
    pub fn dp(&self, r: f64) -> f64 {
        match &self.kind {
            PressureKind::Isentropic { coef } => {
                if r == 0.0 {
                    0.0
                } else {
                    coef * self.gamma * r.powf(self.gamma - 1.0)
                }
            }
            PressureKind::Cubic { a1, a2, a3 } => a1 + r * (2.0 * a2 + 3.0 * a3 * r),
            PressureKind::Tabulated(s) => {
                let (r_m, p_m) = s.last_knot();
                if r <= r_m {
                    s.derivative(r)
                } else {
                    self.gamma * p_m / r_m * (r / r_m).powf(self.gamma - 1.0)
                }
            }
        }
    }

    #[inline]
    pub fn peff(&self, r: f64) -> f64 {
        self.p(r) + 0.5 * self.alpha * r * r
    }

    #[inline]
    pub fn dpeff(&self, r: f64) -> f64 {
        self.dp(r) + self.alpha * r
    }

    /// Pressure potential `W(r) = r int_1^r P(z)/z^2 dz`.
    pub fn potential(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("density must be non-negative, got {r}")));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            PressureKind::Isentropic { coef } => {
                let g = self.gamma;
                Ok(coef * r * (r.powf(g - 1.0) - 1.0) / (g - 1.0))
            }
            PressureKind::Cubic { a1, a2, a3 } => Ok(r * (a3 * (r * r - 1.0) / 2.0 + a2 * (r - 1.0) + a1 * r.ln())),
            PressureKind::Tabulated(spline) => {
                // Substituting z = e^s removes the 1/z^2 singularity at z -> 0.
                let f = |s: f64| {
                    let z = s.exp();
                    self.p(z) / z
                };
                let (lo, hi) = if r < 1.0 { (r, 1.0) } else { (1.0, r) };
                // Splitting at the knots keeps the integrand smooth on every
                // piece, so the result varies smoothly with r.
                let mut breaks = vec![lo];
                breaks.extend(spline.knots().0.iter().copied().filter(|&k| k > lo && k < hi));
                breaks.push(hi);
                let tol = POTENTIAL_QUAD_TOL / breaks.len() as f64;
                let mut integral = 0.0;
                for w in breaks.windows(2) {
                    integral += adaptive_simpson(&f, w[0].ln(), w[1].ln(), tol)?;
                }
                Ok(if r < 1.0 { -r * integral } else { r * integral })
            }
        }
    }

    /// `W` for densities already known to be non-negative.
    pub fn w(&self, r: f64) -> f64 {
        self.potential(r.max(0.0)).unwrap_or(f64::NAN)
    }

    /// Sign changes of `P'` on `[0, r_scan]`, refined by bisection.
    pub fn spinodal(&self) -> Result<SpinodalInfo> {
        let mut r_scan = 50.0;
        let mut info = self.spinodal_on(r_scan)?;
        if info.exists && 10.0 * info.r2 > r_scan {
            r_scan = 10.0 * info.r2;
            info = self.spinodal_on(r_scan)?;
        }
        Ok(info)
    }

    fn spinodal_on(&self, r_scan: f64) -> Result<SpinodalInfo> {
        const N: usize = 200_000;
        let mut roots = Vec::new();
        let h = r_scan / N as f64;
        let mut prev_r = 0.0;
        let mut prev = self.dp(0.0);
        for k in 1..=N {
            let r = k as f64 * h;
            let d = self.dp(r);
            if (prev < 0.0) != (d < 0.0) {
                roots.push(self.bisect_dp(prev_r, r));
            }
            prev_r = r;
            prev = d;
        }
        match roots.len() {
            0 => Ok(SpinodalInfo::none()),
            2 => Ok(SpinodalInfo {
                r1: roots[0],
                r2: roots[1],
                exists: true,
            }),
            k => Err(Error::UnsupportedLaw(format!(
                "P' changes sign {k} times on [0, {r_scan}]"
            ))),
        }
    }

    fn bisect_dp(&self, mut a: f64, mut b: f64) -> f64 {
        let neg_a = self.dp(a) < 0.0;
        while b - a > 1e-10 * b.abs().max(f64::MIN_POSITIVE) {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (self.dp(m) < 0.0) == neg_a {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Smallest coupling coefficient making `Peff` non-decreasing:
    /// `sup_{r>0} (-P'(r)/r)`, clamped below at zero.
    pub fn monotonization_alpha(&self) -> f64 {
        let r_scan = match self.spinodal() {
            Ok(info) if info.exists => (10.0 * info.r2).max(50.0),
            _ => 50.0,
        };
        let g = |r: f64| -self.dp(r) / r;
        const N: usize = 100_000;
        let h = r_scan / N as f64;
        let (mut best_k, mut best) = (1, f64::NEG_INFINITY);
        for k in 1..=N {
            let v = g(k as f64 * h);
            if v > best {
                best = v;
                best_k = k;
            }
        }
        let lo = (best_k as f64 - 1.0).max(0.5) * h;
        let hi = (best_k as f64 + 1.0) * h;
        let refined = golden_section_max(&g, lo, hi, 1e-13);
        best.max(g(refined)).max(0.0)
    }
}

fn golden_section_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Quadrature { a, b, residual: delta });
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature {
            a,
            b,
            residual: delta.abs(),
        });
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_vdw() -> PressureLaw {
        PressureLaw::reference_vdw(REF_VDW_ALPHA).unwrap()
    }

    #[test]
    fn isentropic_peff_example() {
        let law = PressureLaw::isentropic(1.0, 2.0, 2.0).unwrap();
        assert_eq!(law.eval(1.0, Quantity::Peff).unwrap(), 2.0);
        assert_eq!(law.eval(0.0, Quantity::P).unwrap(), 0.0);
        assert_eq!(law.eval(0.0, Quantity::Peff).unwrap(), 0.0);
    }

    #[test]
    fn negative_density_is_domain_error() {
        let law = reference_vdw();
        assert!(matches!(law.eval(-1e-3, Quantity::P), Err(Error::Domain(_))));
        assert!(matches!(law.potential(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn reference_vdw_zero_pressure_at_vacuum_and_flat_at_r1() {
        let law = reference_vdw();
        assert_eq!(law.p(0.0), 0.0);
        assert_eq!(law.peff(0.0), 0.0);
        assert!(law.dp(1.7787).abs() < 1e-4);
    }

    #[test]
    fn reference_vdw_matches_cubic_up_to_vacuum_shift() {
        let law = reference_vdw();
        let phat = |x: f64| (x - 0.55f64).powi(3) - (x - 0.55f64).powi(2) + 0.468;
        for r in [0.3, 1.0, 2.5, 4.0, 5.5] {
            let expected = phat(r / 3.234) - phat(0.0);
            assert!((law.p(r) - expected).abs() < 1e-14, "r = {r}");
        }
    }

    #[test]
    fn isentropic_potential_closed_form() {
        let law = PressureLaw::isentropic(1.0, 2.0, 1.0).unwrap();
        assert!((law.potential(2.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(law.potential(1.0).unwrap(), 0.0);
        assert_eq!(reference_vdw().potential(1.0).unwrap(), 0.0);
    }

    #[test]
    fn potential_growth_bound_monitor() {
        // r^gamma <= c1 + c2 W(r), constants fitted on a sample grid.
        for law in [reference_vdw(), PressureLaw::isentropic(1.0, 1.4, 1.0).unwrap()] {
            let g = law.gamma();
            let samples: Vec<f64> = (1..200).map(|k| k as f64 * 0.25).collect();
            let c2 = samples
                .iter()
                .filter(|&&r| r > 2.0)
                .map(|&r| r.powf(g) / law.w(r).max(1e-12))
                .fold(0.0, f64::max);
            let c1 = samples.iter().map(|&r| r.powf(g) - c2 * law.w(r)).fold(0.0, f64::max);
            let r: f64 = 1.3;
            assert!(r.powf(g) <= c1 + c2 * law.w(r) + 1e-12);
        }
    }

    #[test]
    fn reference_vdw_spinodal() {
        let info = reference_vdw().spinodal().unwrap();
        assert!(info.exists);
        assert!((info.r1 - 1.7787).abs() < 1e-3, "{info:?}");
        assert!((info.r2 - 3.9347).abs() < 1e-3, "{info:?}");
        let law = reference_vdw();
        assert!(law.dp(info.r1).abs() < 1e-8);
        assert!(law.dp(info.r2).abs() < 1e-8);
        for k in 1..100 {
            let r = info.r1 + (info.r2 - info.r1) * k as f64 / 100.0;
            assert!(law.dp(r) < 0.0);
        }
    }

    #[test]
    fn monotone_laws_have_no_spinodal() {
        let iso = PressureLaw::isentropic(1.0, 1.4, 1.0).unwrap();
        assert!(!iso.spinodal().unwrap().exists);
        // Shifting the cubic upward in P' removes the decreasing interval.
        let s = REF_VDW_SCALE;
        let c = REF_VDW_CENTER;
        let a3 = 1.0 / s.powi(3);
        let a2 = -(3.0 * c + 1.0) / s.powi(2);
        let a1 = (3.0 * c * c + 2.0 * c) / s + 0.2;
        let perturbed = PressureLaw::cubic_unchecked(a1, a2, a3, 0.05);
        assert!((0..1000).all(|k| perturbed.dp(k as f64 * 0.05) >= 0.0));
        assert!(!perturbed.spinodal().unwrap().exists);
    }

    #[test]
    fn too_many_sign_changes_rejected() {
        // Quartic-like derivative oscillation through a table.
        let r: Vec<f64> = (0..=8).map(|k| k as f64).collect();
        let p = vec![0.0, 2.0, 1.0, 3.0, 2.0, 4.0, 3.0, 5.0, 6.0];
        let law = PressureLaw::tabulated(r, p, 2.0, 1.0).unwrap();
        assert!(matches!(law.spinodal(), Err(Error::UnsupportedLaw(_))));
    }

    #[test]
    fn monotonization_alpha_reference_vdw_against_stationarity_oracle() {
        // Stationary point of -Phat'(x)/x solves 3u^2 + 3.3u - 1.1 = 0, u = x - 0.55.
        let u = (-3.3 + (3.3f64 * 3.3 + 4.0 * 3.0 * 1.1).sqrt()) / 6.0;
        let x = u + 0.55;
        let oracle = -(3.0 * u * u - 2.0 * u) / (x * REF_VDW_SCALE * REF_VDW_SCALE);
        let alpha_star = reference_vdw().monotonization_alpha();
        assert!((alpha_star - oracle).abs() < 1e-10, "{alpha_star} vs {oracle}");
        assert!((alpha_star - 0.0375).abs() < 1e-4);
        let iso = PressureLaw::isentropic(1.0, 2.0, 1.0).unwrap();
        assert_eq!(iso.monotonization_alpha(), 0.0);
    }

    #[test]
    fn reference_vdw_with_shift_alpha_is_monotone() {
        assert!((REF_VDW_ALPHA - 0.0478).abs() < 1e-4);
        let law = reference_vdw();
        for k in 0..=100_000 {
            let r = k as f64 * 5e-4;
            assert!(law.dpeff(r) >= 0.0, "r = {r}");
        }
    }

    #[test]
    fn tabulated_reproduces_isentropic_samples() {
        let iso = PressureLaw::isentropic(1.0, 2.0, 1.0).unwrap();
        let r: Vec<f64> = (0..=400).map(|k| k as f64 * 0.025).collect();
        let p: Vec<f64> = r.iter().map(|&x| iso.p(x)).collect();
        let tab = PressureLaw::tabulated(r, p, 2.0, 1.0).unwrap();
        for x in [0.1, 0.77, 3.3, 9.9, 20.0] {
            assert!((tab.p(x) - iso.p(x)).abs() < 1e-3 * (1.0 + iso.p(x)), "x = {x}");
        }
        for x in [0.5, 2.0, 7.0] {
            let w = tab.potential(x).unwrap();
            assert!((w - iso.potential(x).unwrap()).abs() < 1e-3, "x = {x}");
        }
    }

    #[test]
    fn tabulated_potential_identity_to_quadrature_tolerance() {
        let law = reference_vdw();
        let r: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let p: Vec<f64> = r.iter().map(|&x| law.p(x)).collect();
        let tab = PressureLaw::tabulated(r, p, 3.0, REF_VDW_ALPHA).unwrap();
        for x in [0.2, 1.0, 2.7, 4.4, 8.0] {
            let h = 1e-3;
            let dw = (tab.potential(x + h).unwrap() - tab.potential(x - h).unwrap()) / (2.0 * h);
            let lhs = tab.p(x);
            let rhs = dw * x - tab.potential(x).unwrap();
            assert!((lhs - rhs).abs() < 1e-5 * (1.0 + lhs.abs()), "x = {x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn admissibility_checks() {
        assert!(PressureLaw::isentropic(1.0, 1.0, 1.0).is_err());
        assert!(PressureLaw::isentropic(1.0, 2.0, 0.0).is_err());
        let iso = PressureLaw::isentropic(1.0, 2.0, 1.0).unwrap();
        assert!(iso.clone().with_p_inf(1.0).is_err());
        assert!(iso.with_p_inf(2.05).is_ok());
        // Law with P(0) != 0.
        let table = PressureLaw::tabulated(vec![0.0, 1.0], vec![0.5, 1.0], 2.0, 1.0);
        assert!(table.is_err());
    }

    #[test]
    fn simpson_integrates_polynomials() {
        let v = adaptive_simpson(&|x: f64| x * x * x - x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }
}
