//! Driving energies `E(x,t)`: smooth landscapes with analytic derivatives,
//! declared regularity constants, and the wiggly (lattice-scale) variant.
//!
//! A landscape is valid when `E >= 0`, `|grad E| <= R` and `grad E` is
//! `L`-Lipschitz in time on its domain; [`validate`] audits these on a grid.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::{Error, Result};

type EnergyFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Closed rectangle `[x_min, x_max] x [0, t_max]` on which a landscape is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub t_max: f64,
}

impl Domain {
    pub fn contains(&self, x: f64, t: f64) -> bool {
        x >= self.x_min && x <= self.x_max && t >= -1e-12 && t <= self.t_max + 1e-12
    }
}

/// Smooth driving energy with analytic spatial gradient and time derivative.
///
/// Evaluations are pure; landscapes are immutable after construction and can
/// be shared across threads. The constants `R` (gradient bound), `L`
/// (time-Lipschitz constant of the gradient) and `L_x` (space-Lipschitz
/// constant of the gradient) are declared by the constructor and audited by
/// [`validate`], not inferred at call time.
#[derive(Clone)]
pub struct EnergyLandscape {
    value: EnergyFn,
    gradient: EnergyFn,
    time_derivative: EnergyFn,
    /// `R`: uniform bound on `|grad E|` over the domain.
    pub grad_bound: f64,
    /// `L`: Lipschitz constant of `t -> grad E(x,t)`.
    pub grad_time_lipschitz: f64,
    /// `L_x`: Lipschitz constant of `x -> grad E(x,t)` (used by SDE stability bounds).
    pub grad_space_lipschitz: f64,
    pub domain: Domain,
}

impl std::fmt::Debug for EnergyLandscape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnergyLandscape")
            .field("grad_bound", &self.grad_bound)
            .field("grad_time_lipschitz", &self.grad_time_lipschitz)
            .field("grad_space_lipschitz", &self.grad_space_lipschitz)
            .field("domain", &self.domain)
            .finish()
    }
}

impl EnergyLandscape {
    pub fn new(
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        time_derivative: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad_bound: f64,
        grad_time_lipschitz: f64,
        grad_space_lipschitz: f64,
        domain: Domain,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            time_derivative: Arc::new(time_derivative),
            grad_bound,
            grad_time_lipschitz,
            grad_space_lipschitz,
            domain,
        }
    }

    /// `E(x,t)`.
    pub fn value(&self, x: f64, t: f64) -> f64 {
        (self.value)(x, t)
    }

    /// `grad E(x,t)` (derivative with respect to `x`).
    pub fn gradient(&self, x: f64, t: f64) -> f64 {
        (self.gradient)(x, t)
    }

    /// `dE/dt (x,t)`.
    pub fn time_derivative(&self, x: f64, t: f64) -> f64 {
        (self.time_derivative)(x, t)
    }

    pub fn check_domain(&self, x: f64, t: f64) -> Result<()> {
        if self.domain.contains(x, t) {
            Ok(())
        } else {
            Err(Error::DomainExit { x, t })
        }
    }
}

fn get(params: &BTreeMap<String, f64>, key: &'static str, default: Option<f64>, id: &str) -> Result<f64> {
    match (params.get(key), default) {
        (Some(v), _) => Ok(*v),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(Error::LandscapeParam(key, id.to_string())),
    }
}

fn domain_from(params: &BTreeMap<String, f64>, x_min: f64, x_max: f64, t_max: f64, id: &str) -> Result<Domain> {
    let d = Domain {
        x_min: get(params, "x_min", Some(x_min), id)?,
        x_max: get(params, "x_max", Some(x_max), id)?,
        t_max: get(params, "t_max", Some(t_max), id)?,
    };
    if !(d.x_min < d.x_max) || !(d.t_max > 0.0) || !d.x_min.is_finite() || !d.x_max.is_finite() {
        return Err(Error::LandscapeParam("x_min/x_max/t_max", id.to_string()));
    }
    Ok(d)
}

/// Construct one of the built-in landscapes.
///
/// * `linear_tilt`: `E(x,t) = g x + c`, constant gradient `g`; the offset `c`
///   keeps `E >= 0` on the domain.
/// * `quadratic_loading`: `E(x,t) = (x - l(t))^2 / 2` with affine loading
///   `l(t) = ell0 + ell1 t`.
/// * `double_well_loading`: `E(x,t) = (x^2-1)^2/4 - (tilt0 + tilt1 t) x + c`,
///   a quartic double well under a time-linear tilt.
/// * `custom`: quartic polynomial `sum c_i x^i` plus a time-linear tilt
///   `-(tilt0 + tilt1 t) x`.
///
/// Domains default to `[-2, 2] x [0, 1]` (`[-5, 5]` for `linear_tilt`) and can
/// be overridden through `x_min`, `x_max`, `t_max`.
pub fn make_builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<EnergyLandscape> {
    match name {
        "linear_tilt" => {
            let g = get(params, "g", None, name)?;
            let domain = domain_from(params, -5.0, 5.0, 1.0, name)?;
            let c = (-(g * domain.x_min).min(g * domain.x_max)).max(0.0);
            Ok(EnergyLandscape::new(
                move |x, _| g * x + c,
                move |_, _| g,
                |_, _| 0.0,
                g.abs(),
                0.0,
                0.0,
                domain,
            ))
        }
        "quadratic_loading" => {
            let ell0 = get(params, "ell0", Some(0.0), name)?;
            let ell1 = get(params, "ell1", Some(1.0), name)?;
            let domain = domain_from(params, -2.0, 2.0, 1.0, name)?;
            let ell = move |t: f64| ell0 + ell1 * t;
            // grad = x - l(t) is affine in (x,t): extrema sit on the corners.
            let r = [
                (domain.x_min, 0.0),
                (domain.x_min, domain.t_max),
                (domain.x_max, 0.0),
                (domain.x_max, domain.t_max),
            ]
            .iter()
            .map(|&(x, t)| (x - ell(t)).abs())
            .fold(0.0, f64::max);
            Ok(EnergyLandscape::new(
                move |x, t| 0.5 * (x - ell(t)) * (x - ell(t)),
                move |x, t| x - ell(t),
                move |x, t| -ell1 * (x - ell(t)),
                r,
                ell1.abs(),
                1.0,
                domain,
            ))
        }
        "double_well_loading" => {
            let mut p = params.clone();
            p.insert("c0".into(), 0.25);
            p.insert("c1".into(), 0.0);
            p.insert("c2".into(), -0.5);
            p.insert("c3".into(), 0.0);
            p.insert("c4".into(), 0.25);
            p.entry("tilt0".into()).or_insert(0.0);
            p.entry("tilt1".into()).or_insert(0.0);
            build_polynomial(&p, name)
        }
        "custom" => build_polynomial(params, name),
        other => Err(Error::UnknownLandscape(other.to_string())),
    }
}

/// Quartic-plus-tilt landscape shared by `double_well_loading` and `custom`.
fn build_polynomial(params: &BTreeMap<String, f64>, id: &str) -> Result<EnergyLandscape> {
    let c: [f64; 5] = [
        get(params, "c0", Some(0.0), id)?,
        get(params, "c1", Some(0.0), id)?,
        get(params, "c2", Some(0.0), id)?,
        get(params, "c3", Some(0.0), id)?,
        get(params, "c4", Some(0.0), id)?,
    ];
    let tilt0 = get(params, "tilt0", Some(0.0), id)?;
    let tilt1 = get(params, "tilt1", Some(0.0), id)?;
    let domain = domain_from(params, -2.0, 2.0, 1.0, id)?;

    let poly = move |x: f64| c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * c[4])));
    let dpoly = move |x: f64| c[1] + x * (2.0 * c[2] + x * (3.0 * c[3] + x * 4.0 * c[4]));
    let ddpoly = move |x: f64| 2.0 * c[2] + x * (6.0 * c[3] + x * 12.0 * c[4]);
    let tilt = move |t: f64| tilt0 + tilt1 * t;

    // Scan the domain for the energy offset, the gradient bound and the
    // spatial Lipschitz constant; the tilt is linear in t so only the time
    // endpoints matter.
    let m = 20_000;
    let mut e_min = f64::INFINITY;
    let mut r = 0.0f64;
    let mut lx = 0.0f64;
    for i in 0..=m {
        let x = domain.x_min + (domain.x_max - domain.x_min) * i as f64 / m as f64;
        for t in [0.0, domain.t_max] {
            e_min = e_min.min(poly(x) - tilt(t) * x);
            r = r.max((dpoly(x) - tilt(t)).abs());
        }
        lx = lx.max(ddpoly(x).abs());
    }
    let offset = (-e_min).max(0.0);
    // Small safety margin: R is declared from a finite scan.
    let r = r * (1.0 + 1e-9) + 1e-12;

    Ok(EnergyLandscape::new(
        move |x, t| poly(x) - tilt(t) * x + offset,
        move |x, t| dpoly(x) - tilt(t),
        move |x, _| -tilt1 * x,
        r,
        tilt1.abs(),
        lx,
        domain,
    ))
}

/// Rectangular sample grid used by [`validate`].
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
}

impl SampleGrid {
    /// Uniform `nx x nt` grid covering the whole domain.
    pub fn uniform(domain: &Domain, nx: usize, nt: usize) -> Self {
        let xs = (0..nx)
            .map(|i| domain.x_min + (domain.x_max - domain.x_min) * i as f64 / (nx - 1).max(1) as f64)
            .collect();
        let ts = (0..nt)
            .map(|j| domain.t_max * j as f64 / (nt - 1).max(1) as f64)
            .collect();
        Self { xs, ts }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Worst-case sampled value of the audited quantity.
    pub worst: f64,
    pub worst_at: (f64, f64),
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub checks: Vec<InvariantCheck>,
    pub pass: bool,
}

/// Audit the three landscape invariants on a sample grid: `|grad E| <= R`,
/// time-Lipschitz continuity of the gradient, and `E >= 0`.
pub fn validate(landscape: &EnergyLandscape, grid: &SampleGrid) -> Result<ValidationReport> {
    if grid.xs.is_empty() || grid.ts.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &x in &grid.xs {
        for &t in &grid.ts {
            landscape.check_domain(x, t)?;
        }
    }

    let mut worst_grad = (0.0f64, (grid.xs[0], grid.ts[0]));
    let mut worst_lip = (0.0f64, (grid.xs[0], grid.ts[0]));
    let mut worst_val = (f64::INFINITY, (grid.xs[0], grid.ts[0]));
    for &x in &grid.xs {
        for (j, &t) in grid.ts.iter().enumerate() {
            let g = landscape.gradient(x, t).abs();
            if g > worst_grad.0 {
                worst_grad = (g, (x, t));
            }
            let v = landscape.value(x, t);
            if v < worst_val.0 {
                worst_val = (v, (x, t));
            }
            for &s in &grid.ts[j + 1..] {
                let dt = (t - s).abs();
                if dt > 0.0 {
                    let ratio = (landscape.gradient(x, t) - landscape.gradient(x, s)).abs() / dt;
                    if ratio > worst_lip.0 {
                        worst_lip = (ratio, (x, t));
                    }
                }
            }
        }
    }

    let slack = 1e-9;
    let checks = vec![
        InvariantCheck {
            name: "grad_bound",
            pass: worst_grad.0 <= landscape.grad_bound + slack,
            worst: worst_grad.0,
            worst_at: worst_grad.1,
        },
        InvariantCheck {
            name: "grad_time_lipschitz",
            pass: worst_lip.0 <= landscape.grad_time_lipschitz + slack,
            worst: worst_lip.0,
            worst_at: worst_lip.1,
        },
        InvariantCheck {
            name: "nonnegative_energy",
            pass: worst_val.0 >= -slack,
            worst: worst_val.0,
            worst_at: worst_val.1,
        },
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport { checks, pass })
}

/// Wiggly landscape `E(x,t) + e(n x)/n` with a 2-periodic wiggle `e`.
///
/// The default wiggle is `e(y) = (de/2)(1 + cos(pi y))`, so the barriers sit
/// at even `y` and the wells at odd `y`, with amplitude `de = max e - min e`.
#[derive(Clone, Debug)]
pub struct WigglyLandscape {
    pub base: EnergyLandscape,
    pub lattice_scale: u64,
    pub wiggle_amplitude: f64,
    /// Kramers prefactor `a` in the escape-rate law `a exp[beta(-de +/- grad E)]`.
    pub kramers_prefactor: f64,
}

impl WigglyLandscape {
    pub fn new(base: EnergyLandscape, lattice_scale: u64, wiggle_amplitude: f64, kramers_prefactor: f64) -> Self {
        Self {
            base,
            lattice_scale,
            wiggle_amplitude,
            kramers_prefactor,
        }
    }

    /// `e(y)`, period 2.
    pub fn wiggle(&self, y: f64) -> f64 {
        0.5 * self.wiggle_amplitude * (1.0 + (std::f64::consts::PI * y).cos())
    }

    /// `e'(y)`.
    pub fn wiggle_deriv(&self, y: f64) -> f64 {
        -0.5 * self.wiggle_amplitude * std::f64::consts::PI * (std::f64::consts::PI * y).sin()
    }

    /// Composite energy `E(x,t) + e(n x)/n`.
    pub fn composite_energy(&self, x: f64, t: f64) -> f64 {
        let n = self.lattice_scale as f64;
        self.base.value(x, t) + self.wiggle(n * x) / n
    }

    /// Composite gradient `grad E(x,t) + e'(n x)`.
    pub fn composite_gradient(&self, x: f64, t: f64) -> f64 {
        let n = self.lattice_scale as f64;
        self.base.gradient(x, t) + self.wiggle_deriv(n * x)
    }

    /// Bound on `|e'|`, used for Langevin step-size control.
    pub fn max_wiggle_slope(&self) -> f64 {
        0.5 * self.wiggle_amplitude * std::f64::consts::PI
    }

    /// Position of the wiggle minimum with well index `k` (wells at `y = 1 + 2k`).
    pub fn well_center(&self, k: i64) -> f64 {
        (1 + 2 * k) as f64 / self.lattice_scale as f64
    }

    /// Index of the well whose center is nearest to `x`.
    pub fn nearest_well(&self, x: f64) -> i64 {
        ((self.lattice_scale as f64 * x - 1.0) / 2.0).round() as i64
    }
}
