//! Deterministic solvers: the sinh gradient flow `x' = -2 a sinh(b grad E)`,
//! the quadratic flow `x' = -2 w grad E`, a vanishing-viscosity flow used as
//! an oracle, and the rate-independent stick-slip evolution with jumps.
//!
//! The ODE solvers share one adaptive implicit-midpoint integrator (Newton
//! inner solve, step-doubling error estimate with local extrapolation); the
//! sinh flow is severely stiff for large `b` (right-hand-side slope of order
//! `2 a b^2 cosh(b R)`), which rules out explicit methods.

use crate::energy::EnergyLandscape;
use crate::{Error, Result};

/// Curve sampled on the uniform grid `t_k = k dt`.
#[derive(Clone, Debug)]
pub struct SampledCurve {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl SampledCurve {
    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.dt)
    }

    /// Linear interpolation; clamps outside `[0, horizon]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let s = (t / self.dt).clamp(0.0, (self.values.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn sup_distance(&self, other: &SampledCurve) -> f64 {
        self.times()
            .zip(self.values.iter())
            .map(|(t, &x)| (x - other.value_at(t)).abs())
            .fold(0.0, f64::max)
    }
}

struct DensePoint {
    t: f64,
    x: f64,
    v: f64,
}

/// One implicit-midpoint step by damped Newton; `None` on non-convergence.
fn implicit_step(f: &dyn Fn(f64, f64) -> f64, t: f64, x: f64, dt: f64) -> Option<f64> {
    let tm = t + 0.5 * dt;
    let mut x1 = x;
    for _ in 0..60 {
        let mid = 0.5 * (x + x1);
        let g = x1 - x - dt * f(tm, mid);
        let h = 1e-7 * (1.0 + mid.abs());
        let dfdx = (f(tm, mid + h) - f(tm, mid - h)) / (2.0 * h);
        let gp = 1.0 - 0.5 * dt * dfdx;
        if !gp.is_finite() || gp.abs() < 1e-12 {
            return None;
        }
        let delta = g / gp;
        x1 -= delta;
        if !x1.is_finite() {
            return None;
        }
        if delta.abs() <= 1e-13 * (1.0 + x1.abs()) {
            return Some(x1);
        }
    }
    None
}

/// Adaptive integration of `x' = f(t,x)` with local error at most
/// `tol` per unit time, by implicit midpoint with step doubling.
fn integrate_adaptive(
    f: &dyn Fn(f64, f64) -> f64,
    x0: f64,
    t_end: f64,
    tol: f64,
) -> Result<Vec<DensePoint>> {
    let mut nodes = vec![DensePoint { t: 0.0, x: x0, v: f(0.0, x0) }];
    let mut t = 0.0;
    let mut x = x0;

    // start cautiously relative to the local slope of f
    let h = 1e-6 * (1.0 + x0.abs());
    let slope = ((f(0.0, x0 + h) - f(0.0, x0 - h)) / (2.0 * h)).abs();
    let mut dt = (t_end / 64.0).min(0.5 / (1.0 + slope)).max(t_end * 1e-12);

    while t < t_end * (1.0 - 1e-14) {
        dt = dt.min(t_end - t);
        if dt < t_end * 1e-13 {
            return Err(Error::NonConvergent { t, x });
        }
        let attempt = (|| {
            let full = implicit_step(f, t, x, dt)?;
            let h1 = implicit_step(f, t, x, 0.5 * dt)?;
            let h2 = implicit_step(f, t + 0.5 * dt, h1, 0.5 * dt)?;
            Some((full, h2))
        })();
        match attempt {
            Some((full, h2)) => {
                let err = (full - h2).abs() / 3.0;
                // the roundoff floor keeps very stiff transits (where the
                // per-unit-time budget tol*dt drops below machine precision)
                // from shrinking dt indefinitely
                let floor = 4.0 * f64::EPSILON * (1.0 + x.abs());
                if err <= tol * dt + floor {
                    x = h2 + (h2 - full) / 3.0;
                    t += dt;
                    nodes.push(DensePoint { t, x, v: f(t, x) });
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * (tol * dt / err).powf(1.0 / 3.0)).clamp(0.2, 5.0)
                    };
                    dt *= factor;
                } else {
                    dt *= (0.9 * (tol * dt / err).powf(1.0 / 3.0)).clamp(0.1, 0.9);
                }
            }
            None => dt *= 0.25,
        }
    }
    Ok(nodes)
}

/// Resample dense integrator output onto a uniform grid by cubic Hermite
/// interpolation (positions and velocities at the accepted nodes).
fn to_uniform(nodes: &[DensePoint], t_end: f64) -> SampledCurve {
    let k = (nodes.len() * 4).clamp(2048, 1 << 20);
    let dt = t_end / k as f64;
    let mut values = Vec::with_capacity(k + 1);
    let mut seg = 0usize;
    for i in 0..=k {
        let t = i as f64 * dt;
        while seg + 2 < nodes.len() && nodes[seg + 1].t < t {
            seg += 1;
        }
        let (a, b) = (&nodes[seg], &nodes[seg + 1]);
        let w = b.t - a.t;
        let s = ((t - a.t) / w).clamp(0.0, 1.0);
        let (s2, s3) = (s * s, s * s * s);
        let val = (2.0 * s3 - 3.0 * s2 + 1.0) * a.x
            + (s3 - 2.0 * s2 + s) * w * a.v
            + (-2.0 * s3 + 3.0 * s2) * b.x
            + (s3 - s2) * w * b.v;
        values.push(val);
    }
    SampledCurve { dt, values }
}

fn check_curve_domain(landscape: &EnergyLandscape, curve: &SampledCurve) -> Result<()> {
    for (t, &x) in curve.times().zip(curve.values.iter()) {
        landscape.check_domain(x, t)?;
    }
    Ok(())
}

/// Stable evaluation of `-2 a sinh(b g)` that survives `a = exp(-b A)`
/// underflowing while `a e^{b|g|}` stays finite.
fn sinh_rate(ln_alpha: f64, beta: f64, g: f64) -> f64 {
    if g == 0.0 {
        return 0.0;
    }
    let t = beta * g.abs();
    let ln_mag = if t < 30.0 {
        let s = 2.0 * t.sinh();
        if s == 0.0 {
            return 0.0;
        }
        ln_alpha + s.ln()
    } else {
        ln_alpha + t + (-(-2.0 * t).exp()).ln_1p()
    };
    -g.signum() * ln_mag.exp()
}

/// Solve `x' = -2 alpha sinh(beta grad E(x,t))` on `[0, T]`.
pub fn solve_generalized_flow(
    landscape: &EnergyLandscape,
    alpha: f64,
    beta: f64,
    x0: f64,
    t_end: f64,
    tol: f64,
) -> Result<SampledCurve> {
    landscape.check_domain(x0, 0.0)?;
    let ln_alpha = alpha.ln();
    let f = move |t: f64, x: f64| sinh_rate(ln_alpha, beta, landscape.gradient(x, t));
    let nodes = integrate_adaptive(&f, x0, t_end, tol)?;
    let curve = to_uniform(&nodes, t_end);
    check_curve_domain(landscape, &curve)?;
    Ok(curve)
}

/// Solve the quadratic flow `x' = -2 omega grad E(x,t)`.
pub fn solve_quadratic_flow(
    landscape: &EnergyLandscape,
    omega: f64,
    x0: f64,
    t_end: f64,
    tol: f64,
) -> Result<SampledCurve> {
    landscape.check_domain(x0, 0.0)?;
    let f = move |t: f64, x: f64| -2.0 * omega * landscape.gradient(x, t);
    let nodes = integrate_adaptive(&f, x0, t_end, tol)?;
    let curve = to_uniform(&nodes, t_end);
    check_curve_domain(landscape, &curve)?;
    Ok(curve)
}

/// Solve the vanishing-viscosity flow `x' = -2 beta (|g| - A)_+ sign(g)`,
/// `g = grad E(x,t)`. Used as an oracle for the rate-independent solver.
pub fn solve_vanishing_viscosity_flow(
    landscape: &EnergyLandscape,
    beta: f64,
    a: f64,
    x0: f64,
    t_end: f64,
    tol: f64,
) -> Result<SampledCurve> {
    landscape.check_domain(x0, 0.0)?;
    let f = move |t: f64, x: f64| {
        let g = landscape.gradient(x, t);
        -2.0 * beta * (g.abs() - a).max(0.0) * g.signum()
    };
    let nodes = integrate_adaptive(&f, x0, t_end, tol)?;
    let curve = to_uniform(&nodes, t_end);
    check_curve_domain(landscape, &curve)?;
    Ok(curve)
}

/// A jump of the BV evolution: at `time`, the state moves
/// `x_left -> x_plateau -> x_right` instantaneously. Single-transition jumps
/// have `x_plateau = x_left`.
#[derive(Clone, Debug)]
pub struct JumpRecord {
    pub time: f64,
    pub x_left: f64,
    pub x_plateau: f64,
    pub x_right: f64,
    /// Index into the grid where this jump's time was inserted;
    /// `values[grid_index]` is the right limit `x_right`.
    pub grid_index: usize,
}

/// BV curve on a strictly increasing (not necessarily uniform) grid.
///
/// `values[i]` is the right limit at `times[i]`; the left limit differs only
/// at jump indices and is recorded in the jump list.
#[derive(Clone, Debug)]
pub struct BVCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub jumps: Vec<JumpRecord>,
    pub total_variation: f64,
}

impl BVCurve {
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn jump_at(&self, grid_index: usize) -> Option<&JumpRecord> {
        self.jumps.iter().find(|j| j.grid_index == grid_index)
    }

    /// Left limit at grid index `i`.
    pub fn value_left(&self, i: usize) -> f64 {
        self.jump_at(i).map(|j| j.x_left).unwrap_or(self.values[i])
    }

    /// `(variation of the AC part, variation carried by jumps)`.
    pub fn variation_parts(&self) -> (f64, f64) {
        let mut ac = 0.0;
        for i in 1..self.times.len() {
            ac += (self.value_left(i) - self.values[i - 1]).abs();
        }
        let jmp: f64 = self
            .jumps
            .iter()
            .map(|j| (j.x_left - j.x_plateau).abs() + (j.x_plateau - j.x_right).abs())
            .sum();
        (ac, jmp)
    }

    /// Wrap an absolutely continuous sampled curve (no jumps).
    pub fn from_sampled(curve: &SampledCurve) -> Self {
        let times: Vec<f64> = curve.times().collect();
        let values = curve.values.clone();
        let tv = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        BVCurve {
            times,
            values,
            jumps: Vec::new(),
            total_variation: tv,
        }
    }
}

/// Constrained sliding: from `x` at time `t` with `|grad E| > A`, march in
/// the descent direction to the nearest stable root of `|grad E(.,t)| = A`.
/// Returns `None` when the constraint branch has terminated (instability).
fn slide(landscape: &EnergyLandscape, x: f64, t: f64, a: f64) -> Option<f64> {
    let w = landscape.gradient(x, t);
    let s_w = w.signum();
    let d = -s_w;
    let span = landscape.domain.x_max - landscape.domain.x_min;
    let h = 1e-7 * span;
    let max_step = 0.05 * span;

    let mut xp = x;
    let mut phi = s_w * w - a; // > 0 at entry
    for _ in 0..400 {
        let dgdx = (landscape.gradient(xp + h, t) - landscape.gradient(xp - h, t)) / (2.0 * h);
        let dphi = s_w * dgdx * d; // change of phi per unit march
        if dphi >= -1e-12 {
            return None; // phi not decreasing: no stable continuation
        }
        let step = (1.2 * phi / (-dphi)).min(max_step);
        let xn = xp + d * step;
        if xn < landscape.domain.x_min || xn > landscape.domain.x_max {
            return None;
        }
        let phin = s_w * landscape.gradient(xn, t) - a;
        if phin <= 0.0 {
            // bracketed: bisect to the root
            let (mut lo, mut hi) = (xp, xn);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if s_w * landscape.gradient(mid, t) - a > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        xp = xn;
        phi = phin;
    }
    None
}

/// Stick if `|grad E| <= A`, otherwise slide. `None` = no continuation.
fn advance(landscape: &EnergyLandscape, x: f64, t: f64, a: f64) -> Option<f64> {
    if landscape.gradient(x, t).abs() <= a {
        Some(x)
    } else {
        slide(landscape, x, t, a)
    }
}

/// Jump transient: unit-speed steepest descent at frozen time from the
/// detachment point until `|grad E| <= A` again. The march must first leave
/// the `|grad E| <= A` neighbourhood of the detachment point (armed flag)
/// before a landing is accepted.
fn transit(landscape: &EnergyLandscape, x_start: f64, t: f64, a: f64) -> Result<f64> {
    let s_w = landscape.gradient(x_start, t).signum();
    let d = -s_w;
    let span = landscape.domain.x_max - landscape.domain.x_min;
    let delta = span / 2e5;
    let mut xp = x_start;
    let mut armed = false;
    for _ in 0..400_000 {
        let xn = xp + d * delta;
        if xn < landscape.domain.x_min || xn > landscape.domain.x_max {
            return Err(Error::RunawayJump);
        }
        let m = s_w * landscape.gradient(xn, t);
        if m > a * (1.0 + 1e-9) + 1e-12 {
            armed = true;
        }
        if armed && m <= a {
            // refine the landing by bisection on |grad E| - A
            let (mut lo, mut hi) = (xp, xn);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if s_w * landscape.gradient(mid, t) > a {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        xp = xn;
    }
    Err(Error::RunawayJump)
}

/// Rate-independent stick-slip evolution with activation threshold `A`.
///
/// Load-steps at resolution `dt_load`; sticks while `|grad E| <= A`, slides
/// constrained to `|grad E| = A`, and resolves instabilities as jumps: the
/// detachment time is located by bisection within the load step, the jump is
/// integrated as a frozen-time unit-speed descent, and its time is inserted
/// into the output grid.
pub fn solve_rate_independent(
    landscape: &EnergyLandscape,
    a: f64,
    x0: f64,
    t_end: f64,
    dt_load: f64,
) -> Result<BVCurve> {
    landscape.check_domain(x0, 0.0)?;
    let g0 = landscape.gradient(x0, 0.0);
    if g0.abs() > a {
        return Err(Error::OutsideStableSet { grad: g0, threshold: a });
    }

    let steps = (t_end / dt_load).round().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let mut times = vec![0.0];
    let mut values = vec![x0];
    let mut jumps: Vec<JumpRecord> = Vec::new();
    let mut x = x0;

    for k in 1..=steps {
        let t = k as f64 * dt;
        let mut guard = 0;
        loop {
            match advance(landscape, x, t, a) {
                Some(xn) => {
                    x = xn;
                    times.push(t);
                    values.push(x);
                    break;
                }
                None => {
                    guard += 1;
                    if guard > 8 {
                        return Err(Error::RunawayJump);
                    }
                    // locate the detachment time within (t_prev, t]
                    let t_lo = *times.last().unwrap();
                    let (mut lo, mut hi) = (t_lo, t);
                    let mut x_left = x;
                    for _ in 0..50 {
                        let mid = 0.5 * (lo + hi);
                        match advance(landscape, x, mid, a) {
                            Some(xm) => {
                                lo = mid;
                                x_left = xm;
                            }
                            None => hi = mid,
                        }
                    }
                    let eps = 1e-9 * dt;
                    let t_star = hi.clamp(t_lo + eps, t - eps);
                    let x_right = transit(landscape, x_left, t_star, a)?;
                    times.push(t_star);
                    values.push(x_right);
                    jumps.push(JumpRecord {
                        time: t_star,
                        x_left,
                        x_plateau: x_left,
                        x_right,
                        grid_index: times.len() - 1,
                    });
                    x = x_right;
                }
            }
        }
    }

    let mut curve = BVCurve {
        times,
        values,
        jumps,
        total_variation: 0.0,
    };
    let (ac, jmp) = curve.variation_parts();
    curve.total_variation = ac + jmp;
    Ok(curve)
}
