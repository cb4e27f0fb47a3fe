//! Discrete weak-form residuals of stored trajectories.
//!
//! Each residual is the `tau`-form integral identity
//! `[int q phi dx]_{t_0}^{t_N} - int int (flux terms) dx dt`
//! assembled with the midpoint rule in space and the trapezoidal rule over
//! the stored snapshots in time. It vanishes for an exact weak solution.

use serde::{Deserialize, Serialize};

use crate::effective::EffectiveState;
use crate::error::{Error, Result};
use crate::grid::{div_face_to_center, face_to_center, grad_at_centers, FluidState, Grid1D};
use crate::hydro::Params;
use crate::measure::{gauss5, Atom};
use crate::pressure::PressureLaw;

/// `(1 - s^2)^4` on `|s| < 1`.
fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        let q = 1.0 - s * s;
        q * q * q * q
    } else {
        0.0
    }
}

fn bump_prime(s: f64) -> f64 {
    if s.abs() < 1.0 {
        let q = 1.0 - s * s;
        -8.0 * s * q * q * q
    } else {
        0.0
    }
}

/// `phi(t, x) = (1 + a t) bump((x - x0) / width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub x0: f64,
    pub width: f64,
    pub a: f64,
}

impl TestFunction {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        (1.0 + self.a * t) * bump((x - self.x0) / self.width)
    }

    pub fn dt(&self, _t: f64, x: f64) -> f64 {
        self.a * bump((x - self.x0) / self.width)
    }

    pub fn dx(&self, t: f64, x: f64) -> f64 {
        (1.0 + self.a * t) * bump_prime((x - self.x0) / self.width) / self.width
    }

    /// Three fixed test functions supported strictly inside `[0, length]`.
    pub fn standard_set(length: f64) -> [TestFunction; 3] {
        [
            TestFunction {
                x0: 0.5 * length,
                width: 0.3 * length,
                a: 1.0,
            },
            TestFunction {
                x0: 0.35 * length,
                width: 0.2 * length,
                a: -0.5,
            },
            TestFunction {
                x0: 0.65 * length,
                width: 0.25 * length,
                a: 2.0,
            },
        ]
    }
}

/// Observable in the renormalized continuity equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Renorm {
    /// `b(z) = z^2 / 2`.
    Square,
    /// `b(z) = z / (1 + z)`.
    Bounded,
}

impl Renorm {
    fn b(self, z: f64) -> f64 {
        match self {
            Renorm::Square => 0.5 * z * z,
            Renorm::Bounded => z / (1.0 + z),
        }
    }

    fn db(self, z: f64) -> f64 {
        match self {
            Renorm::Square => z,
            Renorm::Bounded => 1.0 / ((1.0 + z) * (1.0 + z)),
        }
    }
}

/// `xi`-dependence of the kinetic test function `psi = phi(t, x) g(xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiWeight {
    /// `g(xi) = xi`; the kinetic identity then reduces to continuity.
    Identity,
    /// `g(xi) = xi / (1 + xi)`.
    Bounded,
    /// `g(xi) = bump((xi - center) / width)`.
    Bump { center: f64, width: f64 },
}

impl XiWeight {
    fn g(self, xi: f64) -> f64 {
        match self {
            XiWeight::Identity => xi,
            XiWeight::Bounded => xi / (1.0 + xi),
            XiWeight::Bump { center, width } => bump((xi - center) / width),
        }
    }

    fn dg(self, xi: f64) -> f64 {
        match self {
            XiWeight::Identity => 1.0,
            XiWeight::Bounded => 1.0 / ((1.0 + xi) * (1.0 + xi)),
            XiWeight::Bump { center, width } => bump_prime((xi - center) / width) / width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Continuity,
    Momentum,
    Parabolic,
    Renormalized(Renorm),
    Kinetic(XiWeight),
    /// CDF form with a `xi`-bump test function.
    Cdf {
        center: f64,
        width: f64,
    },
}

impl Equation {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "continuity" => Equation::Continuity,
            "momentum" => Equation::Momentum,
            "parabolic" => Equation::Parabolic,
            "renormalized" => Equation::Renormalized(Renorm::Square),
            "renormalized-bounded" => Equation::Renormalized(Renorm::Bounded),
            "kinetic" => Equation::Kinetic(XiWeight::Identity),
            "kinetic-bounded" => Equation::Kinetic(XiWeight::Bounded),
            "cdf" => Equation::Cdf {
                center: 3.0,
                width: 2.5,
            },
            other => {
                return Err(Error::Validation(format!(
                    "unknown equation '{other}' (expected continuity, momentum, parabolic, renormalized, \
                     renormalized-bounded, kinetic, kinetic-bounded or cdf)"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Equation::Continuity => "continuity",
            Equation::Momentum => "momentum",
            Equation::Parabolic => "parabolic",
            Equation::Renormalized(Renorm::Square) => "renormalized",
            Equation::Renormalized(Renorm::Bounded) => "renormalized-bounded",
            Equation::Kinetic(XiWeight::Identity) => "kinetic",
            Equation::Kinetic(XiWeight::Bounded) => "kinetic-bounded",
            Equation::Kinetic(XiWeight::Bump { .. }) => "kinetic-bump",
            Equation::Cdf { .. } => "cdf",
        }
    }
}

/// Stored trajectory handed to [`weak_residual`].
#[derive(Debug, Clone, Copy)]
pub enum TrajectoryView<'a> {
    Detailed(&'a [FluidState]),
    Effective(&'a [EffectiveState]),
}

/// One snapshot reduced to what the residuals need.
struct Frame<'a> {
    t: f64,
    rho: &'a [f64],
    u: &'a [f64],
    c: &'a [f64],
    /// Pressure entering the momentum balance.
    pressure: Vec<f64>,
    /// Atoms per cell; a Dirac mass at `rho` for detailed states.
    atoms: Vec<Vec<Atom>>,
}

fn frames<'a>(view: TrajectoryView<'a>, law: &PressureLaw, need_atoms: bool) -> Vec<Frame<'a>> {
    match view {
        TrajectoryView::Detailed(states) => states
            .iter()
            .map(|s| Frame {
                t: s.t,
                rho: &s.rho,
                u: &s.u,
                c: &s.c,
                pressure: s.rho.iter().map(|&r| law.peff(r)).collect(),
                atoms: if need_atoms {
                    s.rho.iter().map(|&r| vec![Atom::new(1.0, r)]).collect()
                } else {
                    Vec::new()
                },
            })
            .collect(),
        TrajectoryView::Effective(states) => states
            .iter()
            .map(|s| Frame {
                t: s.t,
                rho: &s.rho,
                u: &s.u,
                c: &s.c,
                pressure: s.pbar.clone(),
                atoms: if need_atoms {
                    s.nu.cells().iter().map(|m| m.atoms().to_vec()).collect()
                } else {
                    Vec::new()
                },
            })
            .collect(),
    }
}

/// Space integrals of one snapshot: the density paired with `phi` and the
/// flux terms to be integrated in time.
fn assemble(
    grid: &Grid1D,
    fr: &Frame,
    law: &PressureLaw,
    params: &Params,
    eq: Equation,
    phi: &TestFunction,
) -> (f64, f64) {
    let t = fr.t;
    let xs = grid.centers();
    let dx = grid.dx();
    let uc = face_to_center(fr.u);
    let div = div_face_to_center(grid, fr.u);
    let nu = params.viscosity();
    let faces = grid.faces();
    let phix: Vec<f64> = (0..xs.len())
        .map(|i| (phi.value(t, faces[i + 1]) - phi.value(t, faces[i])) / dx)
        .collect();
    let mut density = 0.0;
    let mut flux = 0.0;
    match eq {
        Equation::Continuity => {
            for i in 0..xs.len() {
                let x = xs[i];
                density += fr.rho[i] * phi.value(t, x);
                flux += fr.rho[i] * phi.dt(t, x) + fr.rho[i] * uc[i] * phix[i];
            }
        }
        Equation::Momentum => {
            let cx = grad_at_centers(grid, fr.c);
            for i in 0..xs.len() {
                let x = xs[i];
                let m = fr.rho[i] * uc[i];
                density += m * phi.value(t, x);
                flux += m * phi.dt(t, x) + (m * uc[i] + fr.pressure[i]) * phix[i] - nu * div[i] * phix[i]
                    + params.alpha * fr.rho[i] * cx[i] * phi.value(t, x);
            }
        }
        Equation::Parabolic => {
            let cx = grad_at_centers(grid, fr.c);
            for i in 0..xs.len() {
                let x = xs[i];
                density += params.beta * fr.c[i] * phi.value(t, x);
                flux += params.beta * fr.c[i] * phi.dt(t, x)
                    - params.kappa * cx[i] * phix[i]
                    - params.alpha * (fr.c[i] - fr.rho[i]) * phi.value(t, x);
            }
        }
        Equation::Renormalized(r) => {
            for i in 0..xs.len() {
                let x = xs[i];
                let z = fr.rho[i];
                let b = r.b(z);
                density += b * phi.value(t, x);
                flux += b * phi.dt(t, x) + b * uc[i] * phix[i] - (r.db(z) * z - b) * div[i] * phi.value(t, x);
            }
        }
        Equation::Kinetic(g) => {
            for i in 0..xs.len() {
                let x = xs[i];
                let atoms = &fr.atoms[i];
                let s: f64 = atoms.iter().map(|a| a.weight).sum();
                let pbar = if atoms.len() == 1 {
                    law.peff(atoms[0].xi)
                } else {
                    atoms.iter().map(|a| a.weight * law.peff(a.xi)).sum::<f64>() / s
                };
                let (p, pt, px) = (phi.value(t, x), phi.dt(t, x), phix[i]);
                for a in atoms {
                    let q = (pbar - law.peff(a.xi)) / nu;
                    let psi = p * g.g(a.xi);
                    let xi_dpsi = a.xi * (p * g.dg(a.xi));
                    density += a.weight * psi;
                    flux += a.weight * (pt * g.g(a.xi) + uc[i] * px * g.g(a.xi) + (q - div[i]) * (xi_dpsi - psi));
                }
            }
        }
        Equation::Cdf { center, width } => {
            let lo = (center - width).max(0.0);
            let hi = center + width;
            let g = XiWeight::Bump { center, width };
            for i in 0..xs.len() {
                let x = xs[i];
                let mut atoms = fr.atoms[i].clone();
                atoms.sort_by(|a, b| a.xi.total_cmp(&b.xi));
                let s: f64 = atoms.iter().map(|a| a.weight).sum();
                let pbar = atoms.iter().map(|a| a.weight * law.peff(a.xi)).sum::<f64>() / s;
                let (p, pt, px) = (phi.value(t, x), phi.dt(t, x), phix[i]);
                // f and M[f] are constant between consecutive atoms.
                let mut breaks = vec![lo];
                breaks.extend(atoms.iter().map(|a| a.xi).filter(|&v| v > lo && v < hi));
                breaks.push(hi);
                let mut k = 0;
                let mut f = 0.0;
                let mut m = 0.0;
                for w in breaks.windows(2) {
                    while k < atoms.len() && atoms[k].xi <= w[0] {
                        f += atoms[k].weight;
                        m += atoms[k].weight * (pbar - law.peff(atoms[k].xi)) / nu;
                        k += 1;
                    }
                    if f == 0.0 && m == 0.0 {
                        continue;
                    }
                    let int_g = gauss5(|v| g.g(v), w[0], w[1]);
                    let int_xi_dg = gauss5(|v| v * g.dg(v), w[0], w[1]);
                    density += f * p * int_g;
                    flux += f * (pt + uc[i] * px) * int_g - (f * div[i] - m) * p * int_xi_dg;
                }
            }
        }
    }
    (density * dx, flux * dx)
}

/// Absolute defect of the chosen integral identity along the trajectory.
pub fn weak_residual(
    grid: &Grid1D,
    view: TrajectoryView,
    law: &PressureLaw,
    params: &Params,
    eq: Equation,
    phi: &TestFunction,
) -> Result<f64> {
    match (view, eq) {
        (TrajectoryView::Detailed(_), Equation::Cdf { .. }) => {
            return Err(Error::Unsupported(
                "the CDF residual needs an effective trajectory".into(),
            ))
        }
        (TrajectoryView::Effective(_), Equation::Renormalized(_)) => {
            return Err(Error::Unsupported(
                "renormalized continuity is a detailed-model identity; use the kinetic residual".into(),
            ))
        }
        _ => {}
    }
    let need_atoms = matches!(eq, Equation::Kinetic(_) | Equation::Cdf { .. });
    let fr = frames(view, law, need_atoms);
    if fr.len() < 2 {
        return Err(Error::Domain("weak residuals need at least two snapshots".into()));
    }
    for f in &fr {
        grid.check_centers(f.rho, "rho")?;
        grid.check_faces(f.u, "u")?;
    }
    let parts: Vec<(f64, f64)> = fr.iter().map(|f| assemble(grid, f, law, params, eq, phi)).collect();
    let mut time_integral = 0.0;
    for k in 1..fr.len() {
        let h = fr[k].t - fr[k - 1].t;
        if !(h > 0.0) {
            return Err(Error::Domain("snapshot times must increase".into()));
        }
        time_integral += 0.5 * h * (parts[k].1 + parts[k - 1].1);
    }
    let boundary = parts[fr.len() - 1].0 - parts[0].0;
    Ok((boundary - time_integral).abs())
}
