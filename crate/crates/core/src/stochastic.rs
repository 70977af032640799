//! Stochastic simulators: the lattice jump process (exact, via thinning),
//! Euler-Maruyama for the diffusive limit, overdamped Langevin on the wiggly
//! landscape, escape-rate estimation, and seeded parallel ensembles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{EnergyLandscape, WigglyLandscape};
use crate::flows::SampledCurve;
use crate::{Error, Result};

/// Trajectory of the lattice jump process on `(1/n)Z`.
///
/// Positions are reconstructed from the signed event list:
/// `x(t) = start + (sum of directions up to t)/n`.
#[derive(Clone, Debug)]
pub struct JumpPath {
    pub lattice_scale: u64,
    pub start: f64,
    /// Time-ordered `(jump_time, direction)` with direction in `{+1, -1}`.
    pub events: Vec<(f64, i8)>,
    pub horizon: f64,
    /// True when the trajectory left the landscape domain and was truncated.
    pub exited: bool,
}

impl JumpPath {
    pub fn position_after(&self, k: usize) -> f64 {
        let net: i64 = self.events[..k].iter().map(|&(_, d)| d as i64).sum();
        self.start + net as f64 / self.lattice_scale as f64
    }

    /// Right-continuous position at time `t`.
    pub fn position_at(&self, t: f64) -> f64 {
        let k = self.events.partition_point(|&(s, _)| s <= t);
        self.position_after(k)
    }

    pub fn final_position(&self) -> f64 {
        self.position_after(self.events.len())
    }

    /// Piecewise-constant sampling on an arbitrary increasing time grid.
    pub fn sample_at(&self, times: impl Iterator<Item = f64>) -> Vec<f64> {
        times.map(|t| self.position_at(t)).collect()
    }
}

/// Path on a uniform time grid `t_k = k dt`.
#[derive(Clone, Debug)]
pub struct SamplePath {
    pub dt: f64,
    pub values: Vec<f64>,
    pub exited: bool,
}

impl SamplePath {
    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    /// Linear interpolation; clamps outside `[0, horizon]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let s = (t / self.dt).clamp(0.0, (self.values.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn to_curve(&self) -> SampledCurve {
        SampledCurve {
            dt: self.dt,
            values: self.values.clone(),
        }
    }
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln() / rate
}

/// Standard normal via Box-Muller (one uniform pair per draw, second value
/// discarded, keeping the consumption pattern deterministic).
fn normal_sample(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Exact trajectory of the inhomogeneous chain with jump rates
/// `n alpha exp(-/+ beta grad E(x,t))` by thinning against the homogeneous
/// dominating rate `2 n alpha exp(beta R)`.
///
/// On domain exit the path is truncated at the offending event and flagged.
pub fn simulate_jump_process(
    landscape: &EnergyLandscape,
    n: u64,
    alpha: f64,
    beta: f64,
    x0: f64,
    t_end: f64,
    seed: u64,
) -> Result<JumpPath> {
    let nf = n as f64;
    if (x0 * nf - (x0 * nf).round()).abs() > 1e-9 {
        return Err(Error::OffLattice(x0, n));
    }
    landscape.check_domain(x0, 0.0)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = 2.0 * nf * alpha * (beta * landscape.grad_bound).exp();
    let mut path = JumpPath {
        lattice_scale: n,
        start: x0,
        events: Vec::new(),
        horizon: t_end,
        exited: false,
    };
    let mut x = x0;
    let mut t = 0.0;
    loop {
        t += exp_sample(&mut rng, lambda);
        if t > t_end {
            break;
        }
        let g = landscape.gradient(x, t);
        let r_plus = nf * alpha * (-beta * g).exp();
        let r_minus = nf * alpha * (beta * g).exp();
        let u: f64 = rng.gen::<f64>() * lambda;
        let dir = if u < r_plus {
            1i8
        } else if u < r_plus + r_minus {
            -1i8
        } else {
            continue; // thinned candidate
        };
        x += dir as f64 / nf;
        path.events.push((t, dir));
        if !landscape.domain.contains(x, t) {
            path.exited = true;
            path.horizon = t;
            break;
        }
    }
    Ok(path)
}

/// Euler-Maruyama for `dY = -2 omega grad E(Y,t) dt + sqrt(2 omega h) dW`.
///
/// Requires `dt < 1/(2 omega L_x)` with `L_x` the landscape's spatial
/// Lipschitz bound of `grad E`. On domain exit the position is clamped to the
/// boundary for the remaining steps and the path flagged.
pub fn simulate_sde(
    landscape: &EnergyLandscape,
    omega: f64,
    h: f64,
    x0: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<SamplePath> {
    let l_x = landscape.grad_space_lipschitz;
    if l_x > 0.0 {
        let bound = 1.0 / (2.0 * omega * l_x);
        if dt >= bound {
            return Err(Error::UnstableStep { dt, bound });
        }
    }
    landscape.check_domain(x0, 0.0)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (t_end / dt).round().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let noise_scale = (2.0 * omega * h * dt).sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut x = x0;
    let mut exited = false;
    values.push(x);
    for k in 0..steps {
        let t = k as f64 * dt;
        if !exited {
            x += -2.0 * omega * landscape.gradient(x, t) * dt + noise_scale * normal_sample(&mut rng);
            if !landscape.domain.contains(x, t + dt) {
                x = x.clamp(landscape.domain.x_min, landscape.domain.x_max);
                exited = true;
            }
        }
        values.push(x);
    }
    Ok(SamplePath { dt, values, exited })
}

/// Heuristic stability bound for the Langevin step on the wiggly landscape:
/// the wiggle gradient has slope O(n), so `dt` must satisfy
/// `dt <= 0.1 / (n max|e'|)^2`.
pub fn langevin_dt_bound(wiggly: &WigglyLandscape) -> f64 {
    let scale = (wiggly.lattice_scale as f64 * wiggly.max_wiggle_slope()).max(1.0);
    0.1 / (scale * scale)
}

/// Euler-Maruyama for the overdamped Langevin particle in the composite
/// energy `E + e(n x)/n`: `dZ = -(grad E + e'(nZ)) dt + sqrt(2/(beta n)) dW`.
///
/// `beta = f64::INFINITY` gives the zero-noise descent flow.
pub fn simulate_langevin_wiggly(
    wiggly: &WigglyLandscape,
    beta: f64,
    x0: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<SamplePath> {
    let bound = langevin_dt_bound(wiggly);
    if dt > bound * (1.0 + 1e-9) {
        return Err(Error::UnstableStep { dt, bound });
    }
    wiggly.base.check_domain(x0, 0.0)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (t_end / dt).round().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let noise_scale = if beta.is_finite() {
        (2.0 * dt / (beta * wiggly.lattice_scale as f64)).sqrt()
    } else {
        0.0
    };
    let mut values = Vec::with_capacity(steps + 1);
    let mut x = x0;
    let mut exited = false;
    values.push(x);
    let domain = wiggly.base.domain;
    for k in 0..steps {
        let t = k as f64 * dt;
        if !exited {
            x += -wiggly.composite_gradient(x, t) * dt + noise_scale * normal_sample(&mut rng);
            if !domain.contains(x, t + dt) {
                x = x.clamp(domain.x_min, domain.x_max);
                exited = true;
            }
        }
        values.push(x);
    }
    Ok(SamplePath { dt, values, exited })
}

/// Directional escape rates from a wiggly-landscape path.
///
/// The path is classified into well-residence segments (well = lattice cell
/// of the wiggle); a transition to a new well is only accepted once the path
/// comes within 0.8 cell half-widths of the new center (0.2-cell hysteresis
/// band against recrossing miscounts). Rates are directional transition
/// counts per unit total time.
pub fn estimate_escape_rates(path: &SamplePath, wiggly: &WigglyLandscape) -> Result<(f64, f64)> {
    let n = wiggly.lattice_scale as f64;
    let mut current = wiggly.nearest_well(path.values[0]);
    let mut left = 0usize;
    let mut right = 0usize;
    for &x in &path.values[1..] {
        let k = wiggly.nearest_well(x);
        if k != current {
            let y_center = (1 + 2 * k) as f64;
            if (n * x - y_center).abs() < 0.8 {
                if k > current {
                    right += (k - current) as usize;
                } else {
                    left += (current - k) as usize;
                }
                current = k;
            }
        }
    }
    let total = left + right;
    if total < 20 {
        return Err(Error::TooFewTransitions(total, 20));
    }
    let duration = path.horizon();
    Ok((left as f64 / duration, right as f64 / duration))
}

/// One replica-able simulation description for [`run_ensemble`].
#[derive(Clone, Debug)]
pub enum SimulationSpec {
    Jump {
        landscape: EnergyLandscape,
        n: u64,
        alpha: f64,
        beta: f64,
        x0: f64,
        t_end: f64,
    },
    Sde {
        landscape: EnergyLandscape,
        omega: f64,
        h: f64,
        x0: f64,
        t_end: f64,
        dt: f64,
    },
    Langevin {
        wiggly: WigglyLandscape,
        beta: f64,
        x0: f64,
        t_end: f64,
        dt: f64,
    },
}

impl SimulationSpec {
    /// Run one replica and sample it on the reference grid.
    fn run_sampled(&self, times: &[f64], seed: u64) -> Result<(Vec<f64>, bool)> {
        match self {
            SimulationSpec::Jump {
                landscape,
                n,
                alpha,
                beta,
                x0,
                t_end,
            } => {
                let p = simulate_jump_process(landscape, *n, *alpha, *beta, *x0, *t_end, seed)?;
                Ok((p.sample_at(times.iter().copied()), p.exited))
            }
            SimulationSpec::Sde {
                landscape,
                omega,
                h,
                x0,
                t_end,
                dt,
            } => {
                let p = simulate_sde(landscape, *omega, *h, *x0, *t_end, *dt, seed)?;
                Ok((times.iter().map(|&t| p.value_at(t)).collect(), p.exited))
            }
            SimulationSpec::Langevin {
                wiggly,
                beta,
                x0,
                t_end,
                dt,
            } => {
                let p = simulate_langevin_wiggly(wiggly, *beta, *x0, *t_end, *dt, seed)?;
                Ok((times.iter().map(|&t| p.value_at(t)).collect(), p.exited))
            }
        }
    }
}

/// Pointwise statistics of an ensemble against a reference curve.
#[derive(Clone, Debug)]
pub struct EnsembleStats {
    pub replica_count: usize,
    pub mean_path: SamplePath,
    /// Per-grid-time population variance.
    pub variance_path: Vec<f64>,
    /// Sup-norm distance to the reference, one entry per successful replica.
    pub sup_distance_samples: Vec<f64>,
    /// Replicas whose sup-distance exceeds the tube radius.
    pub tube_exit_count: usize,
    /// Replicas that errored or left the domain; excluded from the statistics.
    pub flagged: usize,
}

/// Run `replicas` independent copies of `spec` (replica `r` uses `seed ^ r`),
/// sampled on the grid of `reference`, in parallel.
///
/// Per-replica failures are counted in `flagged`, never abort the ensemble.
pub fn run_ensemble(
    spec: &SimulationSpec,
    replicas: usize,
    reference: &SampledCurve,
    tube_radius: f64,
    seed: u64,
) -> Result<EnsembleStats> {
    if replicas < 2 {
        return Err(Error::TooFewReplicas);
    }
    let times: Vec<f64> = reference.times().collect();

    let results: Vec<Option<(Vec<f64>, bool)>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| spec.run_sampled(&times, seed ^ r).ok())
        .collect();

    let mut flagged = 0usize;
    let mut kept: Vec<&Vec<f64>> = Vec::new();
    for r in &results {
        match r {
            Some((vals, exited)) => {
                if *exited {
                    flagged += 1;
                } else {
                    kept.push(vals);
                }
            }
            None => flagged += 1,
        }
    }
    if kept.len() < 2 {
        return Err(Error::TooFewReplicas);
    }

    let k = times.len();
    let m = kept.len() as f64;
    let mut mean = vec![0.0; k];
    for vals in &kept {
        for (mi, v) in mean.iter_mut().zip(vals.iter()) {
            *mi += v;
        }
    }
    for mi in &mut mean {
        *mi /= m;
    }
    let mut variance = vec![0.0; k];
    for vals in &kept {
        for ((vi, v), mi) in variance.iter_mut().zip(vals.iter()).zip(mean.iter()) {
            *vi += (v - mi) * (v - mi);
        }
    }
    for vi in &mut variance {
        *vi /= m;
    }

    let sup_distance_samples: Vec<f64> = kept
        .iter()
        .map(|vals| {
            vals.iter()
                .zip(reference.values.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        })
        .collect();
    let tube_exit_count = sup_distance_samples.iter().filter(|&&d| d > tube_radius).count();

    Ok(EnsembleStats {
        replica_count: replicas,
        mean_path: SamplePath {
            dt: reference.dt,
            values: mean,
            exited: false,
        },
        variance_path: variance,
        sup_distance_samples,
        tube_exit_count,
        flagged,
    })
}
