//! Action functionals evaluated on sampled and BV curves: the scaled and
//! rescaled large-deviation actions, the quadratic action, the
//! rate-independent balance functional with its energy-weighted jump cost,
//! and the generalized energy-identity residual.
//!
//! All absolutely continuous integrals use per-interval two-point Gauss
//! quadrature with the chord velocity `(x_{i+1} - x_i)/dt`: at every
//! quadrature node the integrand is then a genuine Fenchel-Young expression,
//! so nonnegativity holds pointwise, and the in-interval evaluation error
//! stays high-order even for steep (large-beta) dissipation pairs.

// Functional names follow the usual J notation for action functionals.
#![allow(non_snake_case)]

use crate::dissipation::DissipationFamily;
use crate::energy::EnergyLandscape;

/// Two-point Gauss-Legendre nodes as fractions of the interval.
const GAUSS2_OFFSETS: [f64; 2] = [0.211324865405187, 0.788675134594813];
use crate::flows::{BVCurve, SampledCurve};
use crate::Result;

/// Decomposition of an action value. `total` is always the exact sum of the
/// nonzero parts.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ActionReport {
    pub total: f64,
    /// Integral of `psi(x')` (zero for the rate-independent functional,
    /// where the 1-homogeneous term is reported as `part_var`).
    pub part_psi: f64,
    /// Integral of `psi*(grad E)`.
    pub part_psi_star: f64,
    /// Work term: integral of `x' grad E`, or for the rate-independent
    /// functional the telescoped form `E(x(T),T) - E(x(0),0) - int dE/dt`.
    pub part_work: f64,
    /// Energy-weighted jump cost.
    pub part_jump: f64,
    /// `A * (variation of the AC part)`.
    pub part_var: f64,
    pub quadrature_step: f64,
    /// Set when the rate-independent admissibility constraint failed;
    /// `total` is then `+infinity`.
    pub violation_at: Option<f64>,
}

impl ActionReport {
    fn from_parts(psi: f64, psi_star: f64, work: f64, jump: f64, var: f64, dt: f64) -> Self {
        ActionReport {
            total: psi + psi_star + work + jump + var,
            part_psi: psi,
            part_psi_star: psi_star,
            part_work: work,
            part_jump: jump,
            part_var: var,
            quadrature_step: dt,
            violation_at: None,
        }
    }
}

/// Rescaled action `J_beta = int (psi(x') + psi*(grad E) + x' grad E) dt`
/// for the cosh pair at `(alpha, beta)`.
pub fn action_J_beta(
    curve: &SampledCurve,
    landscape: &EnergyLandscape,
    alpha: f64,
    beta: f64,
) -> Result<ActionReport> {
    action_J_beta_family(curve, landscape, &DissipationFamily::cosh(alpha, beta))
}

/// `int (psi(x') + psi*(grad E) + x' grad E) dt` for an arbitrary pair.
///
/// Taking the family directly keeps deep exponential scalings usable:
/// `alpha = exp(-beta A)` underflows to zero as a plain `f64` long before
/// the pair itself degenerates.
pub fn action_J_beta_family(
    curve: &SampledCurve,
    landscape: &EnergyLandscape,
    fam: &DissipationFamily,
) -> Result<ActionReport> {
    let dt = curve.dt;
    let (mut s_psi, mut s_star, mut s_work) = (0.0, 0.0, 0.0);
    for i in 0..curve.values.len() - 1 {
        let v = (curve.values[i + 1] - curve.values[i]) / dt;
        s_psi += fam.psi(v);
        for offset in GAUSS2_OFFSETS {
            let tm = (i as f64 + offset) * dt;
            let xm = curve.values[i] + offset * dt * v;
            landscape.check_domain(xm, tm)?;
            let g = landscape.gradient(xm, tm);
            s_star += 0.5 * fam.psi_star(g);
            s_work += 0.5 * v * g;
        }
    }
    Ok(ActionReport::from_parts(
        s_psi * dt,
        s_star * dt,
        s_work * dt,
        0.0,
        0.0,
        dt,
    ))
}

/// Large-deviation action `J_{alpha,beta} = beta J_beta`.
pub fn action_J_alpha_beta(
    curve: &SampledCurve,
    landscape: &EnergyLandscape,
    alpha: f64,
    beta: f64,
) -> Result<ActionReport> {
    let r = action_J_beta(curve, landscape, alpha, beta)?;
    Ok(ActionReport::from_parts(
        beta * r.part_psi,
        beta * r.part_psi_star,
        beta * r.part_work,
        0.0,
        0.0,
        r.quadrature_step,
    ))
}

/// Quadratic action `int (x'^2/(4 omega) + omega (grad E)^2 + x' grad E) dt`.
pub fn action_J_Q(
    curve: &SampledCurve,
    landscape: &EnergyLandscape,
    omega: f64,
) -> Result<ActionReport> {
    let dt = curve.dt;
    let (mut s_psi, mut s_star, mut s_work) = (0.0, 0.0, 0.0);
    for i in 0..curve.values.len() - 1 {
        let v = (curve.values[i + 1] - curve.values[i]) / dt;
        s_psi += v * v / (4.0 * omega);
        for offset in GAUSS2_OFFSETS {
            let tm = (i as f64 + offset) * dt;
            let xm = curve.values[i] + offset * dt * v;
            landscape.check_domain(xm, tm)?;
            let g = landscape.gradient(xm, tm);
            s_star += 0.5 * omega * g * g;
            s_work += 0.5 * v * g;
        }
    }
    Ok(ActionReport::from_parts(
        s_psi * dt,
        s_star * dt,
        s_work * dt,
        0.0,
        0.0,
        dt,
    ))
}

/// Left-hand side of the generalized energy identity
/// `int (psi(x') + psi*(-grad E)) dt + E(x(T),T) - E(x(0),0) - int dE/dt dt`.
///
/// Nonnegative up to O(dt^2) for any curve; ~0 exactly on generalized
/// gradient-flow solutions of the given family.
pub fn energy_identity_residual(
    curve: &SampledCurve,
    landscape: &EnergyLandscape,
    family: &DissipationFamily,
) -> Result<f64> {
    let dt = curve.dt;
    let mut sum = 0.0;
    for i in 0..curve.values.len() - 1 {
        let v = (curve.values[i + 1] - curve.values[i]) / dt;
        sum += family.psi(v) * dt;
        for offset in GAUSS2_OFFSETS {
            let tm = (i as f64 + offset) * dt;
            let xm = curve.values[i] + offset * dt * v;
            landscape.check_domain(xm, tm)?;
            let g = landscape.gradient(xm, tm);
            sum += 0.5 * (family.psi_star(-g) - landscape.time_derivative(xm, tm)) * dt;
        }
    }
    let t_end = curve.horizon();
    sum += landscape.value(*curve.values.last().unwrap(), t_end)
        - landscape.value(curve.values[0], 0.0);
    Ok(sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JumpCostMode {
    /// Integrate `|grad E| v A` over the monotone segment (adaptive Gauss).
    ClosedForm,
    /// Shortest path on a position grid (Dijkstra over all grid paths).
    BruteForce,
}

/// 4-point Gauss-Legendre on `[a, b]`.
fn gauss4(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 2] = [0.339981043584856, 0.861136311594053];
    const W: [f64; 2] = [0.652145154862546, 0.347854845137454];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for k in 0..2 {
        s += W[k] * (f(c - h * X[k]) + f(c + h * X[k]));
    }
    s * h
}

fn adaptive_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = gauss4(f, a, m);
    let right = gauss4(f, m, b);
    // the first few levels always subdivide: error cancellation between the
    // halves (e.g. around symmetric kinks of |grad E| v A) can otherwise
    // fake convergence on a coarse interval
    let forced = depth > 19;
    if depth == 0 || (!forced && (left + right - whole).abs() <= tol) {
        left + right
    } else {
        adaptive_gauss(f, a, m, left, 0.5 * tol, depth - 1)
            + adaptive_gauss(f, m, b, right, 0.5 * tol, depth - 1)
    }
}

/// Energy-weighted jump cost `Delta(x0, x1)` at frozen time `t`:
/// the infimum over transition paths of `int (|grad E| v A) |theta'|`.
///
/// In one dimension the weight is a nonnegative function of position only,
/// so the monotone segment is optimal; the brute-force mode checks this by
/// shortest-path search on a 1000-interval grid.
pub fn jump_cost_delta(
    x0: f64,
    x1: f64,
    t: f64,
    landscape: &EnergyLandscape,
    a: f64,
    mode: JumpCostMode,
) -> Result<f64> {
    landscape.check_domain(x0, t)?;
    landscape.check_domain(x1, t)?;
    if x0 == x1 {
        return Ok(0.0);
    }
    let weight = move |u: f64| landscape.gradient(u, t).abs().max(a);
    let (lo, hi) = (x0.min(x1), x0.max(x1));
    match mode {
        JumpCostMode::ClosedForm => {
            let whole = gauss4(&weight, lo, hi);
            Ok(adaptive_gauss(&weight, lo, hi, whole, 1e-11 * (1.0 + whole.abs()), 24))
        }
        JumpCostMode::BruteForce => {
            // Dijkstra over the grid path graph: positive edge weights, so
            // this is the true minimum over all (also non-monotone) grid paths.
            let m = 1000usize;
            let dx = (hi - lo) / m as f64;
            let edge: Vec<f64> = (0..m)
                .map(|i| gauss4(&weight, lo + i as f64 * dx, lo + (i + 1) as f64 * dx))
                .collect();
            let mut dist = vec![f64::INFINITY; m + 1];
            let start = if x0 < x1 { 0 } else { m };
            let goal = m - start;
            dist[start] = 0.0;
            let mut heap = std::collections::BinaryHeap::new();
            heap.push((std::cmp::Reverse(ordered(0.0)), start));
            while let Some((std::cmp::Reverse(d), i)) = heap.pop() {
                let d = d.0;
                if d > dist[i] {
                    continue;
                }
                if i == goal {
                    break;
                }
                if i > 0 && d + edge[i - 1] < dist[i - 1] {
                    dist[i - 1] = d + edge[i - 1];
                    heap.push((std::cmp::Reverse(ordered(dist[i - 1])), i - 1));
                }
                if i < m && d + edge[i] < dist[i + 1] {
                    dist[i + 1] = d + edge[i];
                    heap.push((std::cmp::Reverse(ordered(dist[i + 1])), i + 1));
                }
            }
            Ok(dist[goal])
        }
    }
}

fn ordered(x: f64) -> OrderedF64 {
    OrderedF64(x)
}

#[derive(PartialEq, PartialOrd)]
struct OrderedF64(f64);
impl Eq for OrderedF64 {}
impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.partial_cmp(&other.0).unwrap()
    }
}

/// Rate-independent balance functional on a BV curve:
/// `A Var_AC + Jmp_E + E(x(T),T) - E(x(0),0) - int dE/dt dt`,
/// with the constraint `|grad E| <= A` on the AC part (violation returns the
/// `+infinity` sentinel and the offending time). The Cantor part of sampled
/// curves is identically zero and contributes nothing.
pub fn action_J_RI(curve: &BVCurve, landscape: &EnergyLandscape, a: f64) -> Result<ActionReport> {
    let n = curve.times.len();
    let t_end = curve.horizon();
    // slack absorbs O(dt_load^2) chord deviation of solver output on slip arcs
    let allowed = a * (1.0 + 1e-6) + 1e-6;

    let mut part_var = 0.0;
    let mut dtdt_integral = 0.0;
    let mut max_dt = 0.0f64;
    for i in 1..n {
        let (t0, t1) = (curve.times[i - 1], curve.times[i]);
        let dt = t1 - t0;
        max_dt = max_dt.max(dt);
        let (x0, x1) = (curve.values[i - 1], curve.value_left(i));
        let xm = 0.5 * (x0 + x1);
        let tm = 0.5 * (t0 + t1);
        landscape.check_domain(xm, tm)?;
        if dt > 0.0 {
            let g = landscape.gradient(xm, tm);
            if g.abs() > allowed {
                return Ok(ActionReport {
                    total: f64::INFINITY,
                    part_psi: 0.0,
                    part_psi_star: f64::INFINITY,
                    part_work: 0.0,
                    part_jump: 0.0,
                    part_var: 0.0,
                    quadrature_step: max_dt,
                    violation_at: Some(tm),
                });
            }
            dtdt_integral += landscape.time_derivative(xm, tm) * dt;
        }
        part_var += a * (x1 - x0).abs();
    }

    let mut part_jump = 0.0;
    for j in &curve.jumps {
        part_jump += jump_cost_delta(j.x_left, j.x_plateau, j.time, landscape, a, JumpCostMode::ClosedForm)?;
        part_jump += jump_cost_delta(j.x_plateau, j.x_right, j.time, landscape, a, JumpCostMode::ClosedForm)?;
    }

    let part_work = landscape.value(*curve.values.last().unwrap(), t_end)
        - landscape.value(curve.values[0], curve.times[0])
        - dtdt_integral;

    Ok(ActionReport::from_parts(
        0.0,
        0.0,
        part_work,
        part_jump,
        part_var,
        max_dt,
    ))
}

/// `(total variation, AC part, jump part)` of a BV curve.
pub fn variation(curve: &BVCurve) -> (f64, f64, f64) {
    let (ac, jmp) = curve.variation_parts();
    (ac + jmp, ac, jmp)
}
