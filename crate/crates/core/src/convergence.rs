//! Convergence experiments: arc-length-type reparametrization of BV curves,
//! recovery sequences for the rate-independent limit, and the experiment
//! harness connecting simulators, solvers and functionals (quadratic and
//! rate-independent Mosco trends, law of large numbers, diffusive bridge,
//! and large-deviation tube estimates).

use crate::dissipation::DissipationFamily;
use crate::energy::EnergyLandscape;
use crate::flows::{solve_generalized_flow, solve_quadratic_flow, BVCurve, SampledCurve};
use crate::functionals::{action_J_beta_family, action_J_alpha_beta, action_J_Q};
use crate::stochastic::{run_ensemble, SimulationSpec};
use crate::{Error, Result};

/// BV curve rewritten over an arc-length-like parameter `s` on `[0, S]`,
/// `s(t) = t + A (AC variation on [0,t]) + (jump cost spent in [0,t])`.
///
/// Jumps expand into `s`-intervals traversed at unit weighted speed
/// (`|dx/ds| = 1/(|grad E| v A)`) with `t` frozen; everywhere else `t(s)` is
/// strictly increasing.
#[derive(Clone, Debug)]
pub struct ParametrizedCurve {
    pub s_grid: Vec<f64>,
    pub t_of_s: Vec<f64>,
    pub x_of_s: Vec<f64>,
    pub s_total: f64,
    /// `(s_start, s_end, frozen_time)` for each expanded jump.
    pub jump_spans: Vec<(f64, f64, f64)>,
}

impl ParametrizedCurve {
    pub fn horizon(&self) -> f64 {
        *self.t_of_s.last().unwrap()
    }

    /// Variation of `x_of_s` over `[0, S]`.
    pub fn variation(&self) -> f64 {
        self.x_of_s.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    fn on_jump(&self, s_mid: f64) -> bool {
        self.jump_spans
            .iter()
            .any(|&(s0, s1, _)| s_mid >= s0 && s_mid <= s1)
    }

    /// Integral of the parametrized dissipation density: `A |dx|` where
    /// `t` advances, `(|grad E| v A)|dx|` on jump spans.
    pub fn l_integral(&self, landscape: &EnergyLandscape, a: f64) -> f64 {
        let mut sum = 0.0;
        for i in 1..self.s_grid.len() {
            let dx = (self.x_of_s[i] - self.x_of_s[i - 1]).abs();
            if dx == 0.0 {
                continue;
            }
            if self.on_jump(0.5 * (self.s_grid[i] + self.s_grid[i - 1])) {
                let xm = 0.5 * (self.x_of_s[i] + self.x_of_s[i - 1]);
                let tm = 0.5 * (self.t_of_s[i] + self.t_of_s[i - 1]);
                sum += landscape.gradient(xm, tm).abs().max(a) * dx;
            } else {
                sum += a * dx;
            }
        }
        sum
    }
}

const JUMP_SUBSTEPS: usize = 2048;

/// Rescale a BV curve to the `[0, S]` parametrization.
///
/// Requires the curve to be admissible for the rate-independent functional
/// (`|grad E| <= A` on the AC part).
pub fn reparametrize(
    curve: &BVCurve,
    landscape: &EnergyLandscape,
    a: f64,
) -> Result<ParametrizedCurve> {
    let allowed = a * (1.0 + 1e-6) + 1e-6;
    let mut s_grid = vec![0.0];
    let mut t_of_s = vec![curve.times[0]];
    let mut x_of_s = vec![curve.values[0]];
    let mut jump_spans = Vec::new();
    let mut s = 0.0;

    for i in 1..curve.times.len() {
        let (t0, t1) = (curve.times[i - 1], curve.times[i]);
        let (x0, x1) = (curve.values[i - 1], curve.value_left(i));
        if t1 > t0 {
            let g = landscape.gradient(0.5 * (x0 + x1), 0.5 * (t0 + t1));
            if g.abs() > allowed {
                return Err(Error::InadmissibleCurve { grad: g, t: 0.5 * (t0 + t1) });
            }
        }
        s += (t1 - t0) + a * (x1 - x0).abs();
        s_grid.push(s);
        t_of_s.push(t1);
        x_of_s.push(x1);

        if let Some(j) = curve.jump_at(i) {
            let s_start = s;
            for (from, to) in [(j.x_left, j.x_plateau), (j.x_plateau, j.x_right)] {
                if from == to {
                    continue;
                }
                let dx = (to - from) / JUMP_SUBSTEPS as f64;
                for k in 0..JUMP_SUBSTEPS {
                    let xa = from + k as f64 * dx;
                    let xb = xa + dx;
                    let w = landscape.gradient(0.5 * (xa + xb), j.time).abs().max(a);
                    s += w * dx.abs();
                    s_grid.push(s);
                    t_of_s.push(j.time);
                    x_of_s.push(xb);
                }
            }
            jump_spans.push((s_start, s, j.time));
        }
    }

    Ok(ParametrizedCurve {
        s_total: s,
        s_grid,
        t_of_s,
        x_of_s,
        jump_spans,
    })
}

/// A recovery-sequence member together with its construction diagnostics.
#[derive(Clone, Debug)]
pub struct Recovery {
    pub curve: SampledCurve,
    /// Total reparametrized time `T_beta` (`>= T`, tends to `T` as `beta` grows).
    pub t_beta_end: f64,
    /// Per-segment time dilation factors `lambda^i = dT^i_beta / dT^i`.
    pub lambdas: Vec<f64>,
}

/// Build the recovery-sequence curve at `beta`: slow time down where it
/// stalls, `t_beta'(s) = t'(s) v eps(x'(s), grad E)` with
/// `eps(v, w) = |v| / dpsi*_beta(|w| v (A + delta_beta))`, then map each
/// inter-jump segment affinely back onto its original time interval, so the
/// output agrees with the limit curve at all jump times.
///
/// The output grid is refined until the fastest jump traversal spans ~50
/// samples.
pub fn build_recovery_sequence(
    pc: &ParametrizedCurve,
    landscape: &EnergyLandscape,
    family: &DissipationFamily,
    beta: f64,
) -> Result<Recovery> {
    let fam = family.at_beta(beta);
    let a = fam.threshold;
    let delta = fam.delta();

    // t_beta at the s-nodes
    let m = pc.s_grid.len();
    let mut t_beta = vec![0.0; m];
    for i in 1..m {
        let ds = pc.s_grid[i] - pc.s_grid[i - 1];
        if ds == 0.0 {
            t_beta[i] = t_beta[i - 1];
            continue;
        }
        let tdot = (pc.t_of_s[i] - pc.t_of_s[i - 1]) / ds;
        let xdot = (pc.x_of_s[i] - pc.x_of_s[i - 1]).abs() / ds;
        let xm = 0.5 * (pc.x_of_s[i] + pc.x_of_s[i - 1]);
        let tm = 0.5 * (pc.t_of_s[i] + pc.t_of_s[i - 1]);
        let g = landscape.gradient(xm, tm);
        let eps = xdot / fam.dpsi_star(g.abs().max(a + delta));
        let tdot_beta = tdot.max(eps);
        if tdot_beta <= 0.0 {
            return Err(Error::DegeneratePlateau);
        }
        t_beta[i] = t_beta[i - 1] + tdot_beta * ds;
    }
    let t_beta_end = t_beta[m - 1];

    // segment boundaries: curve start, each jump-span start, curve end
    let t0 = pc.t_of_s[0];
    let t_end = pc.horizon();
    let mut seg_s = vec![0.0];
    let mut seg_t = vec![t0];
    for &(s0, _, tj) in &pc.jump_spans {
        if tj > *seg_t.last().unwrap() {
            seg_s.push(s0);
            seg_t.push(tj);
        }
    }
    seg_s.push(pc.s_total);
    seg_t.push(t_end);

    let s_at = |s_target: f64| -> usize {
        pc.s_grid.partition_point(|&s| s < s_target).min(m - 1)
    };
    let t_beta_at = |s_target: f64| -> f64 {
        let i = s_at(s_target).max(1);
        let (s0, s1) = (pc.s_grid[i - 1], pc.s_grid[i]);
        if s1 == s0 {
            return t_beta[i];
        }
        let f = ((s_target - s0) / (s1 - s0)).clamp(0.0, 1.0);
        t_beta[i - 1] * (1.0 - f) + t_beta[i] * f
    };

    let n_seg = seg_t.len() - 1;
    let mut lambdas = Vec::with_capacity(n_seg);
    for i in 0..n_seg {
        let d_t = seg_t[i + 1] - seg_t[i];
        let d_tb = t_beta_at(seg_s[i + 1]) - t_beta_at(seg_s[i]);
        lambdas.push(if d_t > 0.0 { d_tb / d_t } else { 1.0 });
    }

    // output resolution: resolve the fastest jump traversal
    let min_jump_width = pc
        .jump_spans
        .iter()
        .zip(0..)
        .map(|(&(s0, s1, _), _)| (t_beta_at(s1) - t_beta_at(s0)).abs())
        .fold(f64::INFINITY, f64::min);
    let k = if min_jump_width.is_finite() && min_jump_width > 0.0 {
        ((50.0 * (t_end - t0) / min_jump_width).ceil() as usize).clamp(4096, 1 << 21)
    } else {
        4096
    };

    let dt = (t_end - t0) / k as f64;
    let mut values = Vec::with_capacity(k + 1);
    let mut seg = 0usize;
    for i in 0..=k {
        let t = t0 + i as f64 * dt;
        while seg + 1 < n_seg && t >= seg_t[seg + 1] {
            seg += 1;
        }
        // target value of t_beta inside this segment
        let tb = t_beta_at(seg_s[seg]) + lambdas[seg] * (t - seg_t[seg]);
        // invert t_beta -> s within the segment (t_beta strictly increasing)
        let (lo_i, hi_i) = (s_at(seg_s[seg]), s_at(seg_s[seg + 1]).max(1));
        let j = (t_beta[lo_i..=hi_i].partition_point(|&v| v < tb) + lo_i)
            .clamp(lo_i + 1, hi_i.max(lo_i + 1));
        let (tb0, tb1) = (t_beta[j - 1], t_beta[j]);
        let f = if tb1 > tb0 { ((tb - tb0) / (tb1 - tb0)).clamp(0.0, 1.0) } else { 1.0 };
        values.push(pc.x_of_s[j - 1] * (1.0 - f) + pc.x_of_s[j] * f);
    }

    Ok(Recovery {
        curve: SampledCurve { dt, values },
        t_beta_end,
        lambdas,
    })
}

/// One experiment table: a parameter column and named value columns.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ConvergenceTable {
    pub parameter_name: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct TableRow {
    pub parameter: f64,
    pub values: Vec<f64>,
    pub flag: Option<String>,
}

impl ConvergenceTable {
    pub fn column(&self, name: &str) -> Vec<f64> {
        let idx = self.columns.iter().position(|c| c == name).expect("no such column");
        self.rows.iter().map(|r| r.values[idx]).collect()
    }
}

/// Pointwise convergence of the rescaled action to the quadratic action
/// along `beta -> 0` with `alpha = omega / beta`, on a fixed test curve.
pub fn mosco_quadratic_experiment(
    landscape: &EnergyLandscape,
    curve: &SampledCurve,
    omega: f64,
    beta_list: &[f64],
) -> Result<ConvergenceTable> {
    let j_q = action_J_Q(curve, landscape, omega)?.total;
    let mut rows = Vec::new();
    for &beta in beta_list {
        let fam = DissipationFamily::cosh(omega / beta, beta);
        let j_b = action_J_beta_family(curve, landscape, &fam)?.total;
        rows.push(TableRow {
            parameter: beta,
            values: vec![j_b, j_q, (j_b - j_q).abs(), (j_b - j_q).abs() / j_q.abs().max(1e-300)],
            flag: None,
        });
    }
    Ok(ConvergenceTable {
        parameter_name: "beta".into(),
        columns: vec!["J_beta".into(), "J_Q".into(), "gap".into(), "gap_rel".into()],
        rows,
    })
}

/// Recovery-sequence convergence of the rescaled action to the
/// rate-independent functional along increasing `beta` with
/// `alpha = exp(-beta A)`.
pub fn mosco_ri_experiment(
    landscape: &EnergyLandscape,
    bv_curve: &BVCurve,
    a: f64,
    beta_list: &[f64],
) -> Result<ConvergenceTable> {
    let j_ri = crate::functionals::action_J_RI(bv_curve, landscape, a)?.total;
    let pc = reparametrize(bv_curve, landscape, a)?;
    let template = DissipationFamily::cosh_with_threshold(a, beta_list[0]);
    let mut rows = Vec::new();
    for &beta in beta_list {
        let fam = template.at_beta(beta);
        let rec = build_recovery_sequence(&pc, landscape, &template, beta)?;
        let j_b = action_J_beta_family(&rec.curve, landscape, &fam)?.total;
        rows.push(TableRow {
            parameter: beta,
            values: vec![j_b, j_ri, j_b - j_ri, rec.t_beta_end],
            flag: None,
        });
    }
    Ok(ConvergenceTable {
        parameter_name: "beta".into(),
        columns: vec!["J_beta_recovery".into(), "J_RI".into(), "gap".into(), "T_beta".into()],
        rows,
    })
}

/// Law of large numbers: median sup-distance of the jump-process ensemble to
/// the deterministic sinh-flow solution, along increasing `n`.
pub fn lln_experiment(
    landscape: &EnergyLandscape,
    n_list: &[u64],
    alpha: f64,
    beta: f64,
    x0: f64,
    t_end: f64,
    replicas: usize,
    seed: u64,
) -> Result<ConvergenceTable> {
    let reference = solve_generalized_flow(landscape, alpha, beta, x0, t_end, 1e-10)?;
    let mut rows = Vec::new();
    for &n in n_list {
        let x0_lat = (x0 * n as f64).round() / n as f64;
        let spec = SimulationSpec::Jump {
            landscape: landscape.clone(),
            n,
            alpha,
            beta,
            x0: x0_lat,
            t_end,
        };
        let stats = run_ensemble(&spec, replicas, &reference, f64::INFINITY, seed)?;
        let mut d = stats.sup_distance_samples.clone();
        d.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let median = d[d.len() / 2];
        rows.push(TableRow {
            parameter: n as f64,
            values: vec![median],
            flag: (stats.flagged > 0).then(|| format!("{} replicas flagged", stats.flagged)),
        });
    }
    Ok(ConvergenceTable {
        parameter_name: "n".into(),
        columns: vec!["median_sup_distance".into()],
        rows,
    })
}

/// Diffusive bridge: with `beta_n = n^{-delta}` and `alpha_n = omega/beta_n`
/// the jump process tracks the quadratic flow (`delta` in `(0,1)`: variance
/// vanishes); at `delta = 1` (`beta_n = 1/(n h)`) its endpoint law matches
/// the SDE with noise level `h`.
#[allow(clippy::too_many_arguments)]
pub fn bridge_experiment(
    landscape: &EnergyLandscape,
    n_list: &[u64],
    delta: f64,
    omega: f64,
    h_target: f64,
    x0: f64,
    t_end: f64,
    replicas: usize,
    seed: u64,
) -> Result<ConvergenceTable> {
    let reference = solve_quadratic_flow(landscape, omega, x0, t_end, 1e-10)?;
    let mut rows = Vec::new();
    for &n in n_list {
        let beta_n = if delta >= 1.0 {
            1.0 / (n as f64 * h_target)
        } else {
            (n as f64).powf(-delta)
        };
        let alpha_n = omega / beta_n;
        let x0_lat = (x0 * n as f64).round() / n as f64;
        let spec = SimulationSpec::Jump {
            landscape: landscape.clone(),
            n,
            alpha: alpha_n,
            beta: beta_n,
            x0: x0_lat,
            t_end,
        };
        let stats = run_ensemble(&spec, replicas, &reference, f64::INFINITY, seed)?;
        let k = stats.mean_path.values.len() - 1;
        let mean_gap = (stats.mean_path.values[k] - reference.values.last().unwrap()).abs();
        let var_end = stats.variance_path[k];
        let mut values = vec![mean_gap, var_end];
        if delta >= 1.0 {
            // companion SDE ensemble at the same noise level
            let sde_spec = SimulationSpec::Sde {
                landscape: landscape.clone(),
                omega,
                h: h_target,
                x0,
                t_end,
                dt: 0.4 / (2.0 * omega * landscape.grad_space_lipschitz.max(1.0)),
            };
            let sde_stats = run_ensemble(&sde_spec, replicas, &reference, f64::INFINITY, seed ^ 0x5DEECE66D)?;
            values.push(*sde_stats.mean_path.values.last().unwrap());
            values.push(*sde_stats.variance_path.last().unwrap());
        } else {
            values.push(f64::NAN);
            values.push(f64::NAN);
        }
        rows.push(TableRow {
            parameter: n as f64,
            values,
            flag: (stats.flagged > 0).then(|| format!("{} replicas flagged", stats.flagged)),
        });
    }
    Ok(ConvergenceTable {
        parameter_name: "n".into(),
        columns: vec![
            "mean_gap_to_quadratic_flow".into(),
            "endpoint_variance".into(),
            "sde_endpoint_mean".into(),
            "sde_endpoint_variance".into(),
        ],
        rows,
    })
}

/// Large-deviation tube estimate: fraction of replicas staying in the
/// sup-norm tube around a (non-solution) reference, versus the action of the
/// tube center and edges.
#[allow(clippy::too_many_arguments)]
pub fn ldp_tube_experiment(
    landscape: &EnergyLandscape,
    n_list: &[u64],
    alpha: f64,
    beta: f64,
    reference: &SampledCurve,
    tube_radius: f64,
    replicas: usize,
    seed: u64,
) -> Result<ConvergenceTable> {
    // desk-scale lower bound for inf J over the tube: center and edge curves
    let mut action_bound = f64::INFINITY;
    for shift in [0.0, tube_radius, -tube_radius] {
        let shifted = SampledCurve {
            dt: reference.dt,
            values: reference.values.iter().map(|x| x + shift).collect(),
        };
        if let Ok(r) = action_J_alpha_beta(&shifted, landscape, alpha, beta) {
            action_bound = action_bound.min(r.total);
        }
    }

    let t_end = reference.horizon();
    let mut rows = Vec::new();
    for &n in n_list {
        let x0_lat = (reference.values[0] * n as f64).round() / n as f64;
        let spec = SimulationSpec::Jump {
            landscape: landscape.clone(),
            n,
            alpha,
            beta,
            x0: x0_lat,
            t_end,
        };
        let stats = run_ensemble(&spec, replicas, reference, tube_radius, seed)?;
        let total = stats.sup_distance_samples.len();
        let stays = total - stats.tube_exit_count;
        let (p_hat, rate, flag) = if stays == 0 {
            (0.0, f64::NAN, Some("zero tube-stay events".to_string()))
        } else {
            let p = stays as f64 / total as f64;
            let flag = (stays < 5).then(|| format!("low statistics: {stays} tube stays"));
            (p, -p.ln() / n as f64, flag)
        };
        rows.push(TableRow {
            parameter: n as f64,
            values: vec![p_hat, rate, action_bound],
            flag,
        });
    }
    Ok(ConvergenceTable {
        parameter_name: "n".into(),
        columns: vec!["p_hat".into(), "rate_estimate".into(), "action_bound".into()],
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::make_builtin;
    use crate::flows::solve_rate_independent;
    use std::collections::BTreeMap;

    fn builtin(name: &str, pairs: &[(&str, f64)]) -> EnergyLandscape {
        let params: BTreeMap<String, f64> =
            pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        make_builtin(name, &params).unwrap()
    }

    fn play_scenario() -> (EnergyLandscape, BVCurve) {
        let l = builtin("quadratic_loading", &[("t_max", 2.0), ("x_max", 3.0)]);
        let c = solve_rate_independent(&l, 1.0, 0.0, 2.0, 2.0 / 1024.0).unwrap();
        (l, c)
    }

    fn jump_scenario() -> (EnergyLandscape, BVCurve, f64) {
        let l = builtin("double_well_loading", &[("tilt1", 1.0)]);
        let c = solve_rate_independent(&l, 0.1, -1.0, 1.0, 1.0 / 1024.0).unwrap();
        (l, c, 0.1)
    }

    #[test]
    fn reparametrize_smooth_curve() {
        let (l, c) = play_scenario();
        let a = 1.0;
        let pc = reparametrize(&c, &l, a).unwrap();
        let var = c.total_variation;
        assert!((pc.s_total - (2.0 + a * var)).abs() < 1e-9, "S = {}", pc.s_total);
        // t strictly increasing (no jumps)
        for w in pc.t_of_s.windows(2) {
            assert!(w[1] > w[0]);
        }
        // round trip: x(t(s)) matches the original grid values
        for (i, &t) in c.times.iter().enumerate() {
            let j = pc.t_of_s.partition_point(|&u| u < t).min(pc.t_of_s.len() - 1);
            assert!((pc.x_of_s[j] - c.values[i]).abs() < 1e-8, "t={t}");
        }
        // parametrized dissipation integral equals A Var
        let li = pc.l_integral(&l, a);
        assert!((li - a * var).abs() < 1e-6, "{li} vs {}", a * var);
    }

    #[test]
    fn reparametrize_pure_jump_in_flat_region() {
        // |grad E| <= A on the jump segment: the jump expands to length A * height
        let l = builtin("linear_tilt", &[("g", 0.3)]);
        let a = 1.0;
        let c = BVCurve {
            times: vec![0.0, 0.5, 1.0],
            values: vec![0.0, 1.0, 1.0],
            jumps: vec![crate::flows::JumpRecord {
                time: 0.5,
                x_left: 0.0,
                x_plateau: 0.0,
                x_right: 1.0,
                grid_index: 1,
            }],
            total_variation: 1.0,
        };
        let pc = reparametrize(&c, &l, a).unwrap();
        let (s0, s1, tj) = pc.jump_spans[0];
        assert!((s1 - s0 - a).abs() < 1e-9);
        assert_eq!(tj, 0.5);
        assert!((pc.s_total - (1.0 + a)).abs() < 1e-9);
        assert!((pc.variation() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reparametrize_rejects_inadmissible() {
        let l = builtin("linear_tilt", &[("g", 2.0)]);
        let c = BVCurve {
            times: vec![0.0, 1.0],
            values: vec![0.0, 0.0],
            jumps: vec![],
            total_variation: 0.0,
        };
        assert!(matches!(
            reparametrize(&c, &l, 1.0),
            Err(Error::InadmissibleCurve { .. })
        ));
    }

    #[test]
    fn recovery_close_to_original_for_large_beta() {
        let (l, c) = play_scenario();
        let a = 1.0;
        let pc = reparametrize(&c, &l, a).unwrap();
        let fam = DissipationFamily::cosh_with_threshold(a, 100.0);
        let mut prev_gap = f64::INFINITY;
        let mut prev_lambda_gap = f64::INFINITY;
        for beta in [10.0, 100.0, 1000.0] {
            let rec = build_recovery_sequence(&pc, &l, &fam, beta).unwrap();
            // sup distance to the limit curve
            let sup = rec
                .curve
                .times()
                .zip(rec.curve.values.iter())
                .map(|(t, &x)| {
                    let i = c.times.partition_point(|&u| u <= t).min(c.times.len() - 1);
                    (x - c.values[i.saturating_sub(1)]).abs().min((x - c.values[i]).abs())
                })
                .fold(0.0f64, f64::max);
            assert!(sup < prev_gap + 1e-12, "beta={beta}: sup {sup}");
            prev_gap = sup;
            // lambda -> 1
            let lambda_gap = rec
                .lambdas
                .iter()
                .map(|l| (l - 1.0).abs())
                .fold(0.0f64, f64::max);
            assert!(lambda_gap <= prev_lambda_gap + 1e-12);
            assert!(rec.t_beta_end >= 2.0 - 1e-9);
            prev_lambda_gap = lambda_gap;
        }
        assert!(prev_gap < 0.05, "final sup {prev_gap}");
        assert!(prev_lambda_gap < 0.05, "final lambda gap {prev_lambda_gap}");
    }

    #[test]
    fn recovery_preserves_variation_and_anchors() {
        let (l, c, a) = jump_scenario();
        let pc = reparametrize(&c, &l, a).unwrap();
        let fam = DissipationFamily::cosh_with_threshold(a, 100.0);
        let rec = build_recovery_sequence(&pc, &l, &fam, 100.0).unwrap();
        let var_rec: f64 = rec.curve.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        assert!(
            (var_rec - c.total_variation).abs() < 1e-4 * (1.0 + c.total_variation),
            "{var_rec} vs {}",
            c.total_variation
        );
        // anchored at the jump time: the curve passes through the left limit
        let j = &c.jumps[0];
        let v = rec.curve.value_at(j.time);
        assert!((v - j.x_left).abs() < 1e-2, "{v} vs {}", j.x_left);
        // endpoints exact
        assert!((rec.curve.values[0] - c.values[0]).abs() < 1e-12);
        assert!(
            (rec.curve.values.last().unwrap() - c.values.last().unwrap()).abs() < 1e-9
        );
    }

    #[test]
    fn mosco_quadratic_gap_decreases() {
        let l = builtin("linear_tilt", &[("g", 0.5)]);
        let k = 256;
        let curve = SampledCurve {
            dt: 1.0 / k as f64,
            values: (0..=k).map(|i| 0.4 * i as f64 / k as f64).collect(),
        };
        let table = mosco_quadratic_experiment(&l, &curve, 1.0, &[1.0, 0.1, 0.01]).unwrap();
        let gaps = table.column("gap");
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        let j_q = table.column("J_Q")[0];
        assert!(gaps[2] <= 0.01 * j_q, "final gap {} vs J_Q {}", gaps[2], j_q);
    }

    #[test]
    fn mosco_quadratic_on_solution_vanishes() {
        let l = builtin("quadratic_loading", &[]);
        let sol = solve_quadratic_flow(&l, 1.0, 0.0, 1.0, 1e-10).unwrap();
        let table = mosco_quadratic_experiment(&l, &sol, 1.0, &[1.0, 0.1]).unwrap();
        // the quadratic solution is not the sinh-flow solution, so J_beta is
        // small but nonzero, decaying at the O(beta^2) Taylor rate
        let j = table.column("J_beta");
        assert!(j[0] < 1e-3, "{j:?}");
        assert!(j[1] < 0.05 * j[0] && j[1] < 1e-6, "{j:?}");
    }

    #[test]
    fn psi_star_taylor_slope() {
        // (2a/b)(cosh(b g) - 1) - w g^2 = O(b^2) with a = w/b
        let (omega, g) = (1.0, 0.7);
        let mut pts = Vec::new();
        for &beta in &[0.4, 0.2, 0.1, 0.05] {
            let fam = DissipationFamily::cosh(omega / beta, beta);
            let gap = (fam.psi_star(g) - omega * g * g).abs();
            pts.push(((beta as f64).ln(), gap.ln()));
        }
        // least-squares slope in log-log
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let (sxx, sxy): (f64, f64) = pts
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + p.0 * p.0, b + p.0 * p.1));
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn mosco_ri_gap_shrinks() {
        let (l, c) = play_scenario();
        let table = mosco_ri_experiment(&l, &c, 1.0, &[100.0, 1000.0]).unwrap();
        // slow sliding makes psi_beta(v) undershoot A|v| by O(|v| ln|v| / beta),
        // so the gap approaches zero from below at rate ~ 1/beta
        let gaps = table.column("gap");
        assert!(gaps[1].abs() < gaps[0].abs(), "{gaps:?}");
        assert!(gaps[1].abs() < 1e-3, "{gaps:?}");
        assert!(gaps.iter().all(|&g| g > -0.05), "{gaps:?}");
    }

    #[test]
    fn lln_smoke() {
        let l = builtin("linear_tilt", &[("g", 0.3), ("x_min", -30.0), ("x_max", 30.0)]);
        let table = lln_experiment(&l, &[100, 400], 1.0, 1.0, 0.0, 1.0, 40, 7).unwrap();
        let d = table.column("median_sup_distance");
        assert!(d[1] < d[0], "{d:?}");
    }

    #[test]
    fn bridge_smoke_delta_half() {
        let l = builtin("quadratic_loading", &[]);
        let table =
            bridge_experiment(&l, &[64, 256], 0.5, 1.0, 0.0, 0.0, 1.0, 30, 3).unwrap();
        let v = table.column("endpoint_variance");
        assert!(v[1] < v[0], "{v:?}");
    }

    #[test]
    fn ldp_tube_trivial_scenario() {
        // reference = solution, huge radius: everything stays, rate ~ 0
        let l = builtin("quadratic_loading", &[]);
        let sol = solve_generalized_flow(&l, 1.0, 1.0, 0.0, 1.0, 1e-8).unwrap();
        let table = ldp_tube_experiment(&l, &[30], 1.0, 1.0, &sol, 1.5, 40, 5).unwrap();
        let p = table.column("p_hat");
        assert!(p[0] > 0.99, "{p:?}");
        assert!(table.column("rate_estimate")[0].abs() < 0.01);
    }
}
