//! Dissipation pairs `(psi, psi*)`, their derivatives, a numeric Legendre
//! transform, the jump-process Hamiltonian/Lagrangian, and checkers for the
//! structural conditions behind the rate-independent limit.
//!
//! Four families are provided:
//!
//! * `cosh`: `psi*(w) = (2a/b)(cosh(b w) - 1)` with `psi` its dual
//!   (the large-deviation pair of the lattice jump process),
//! * `vanishing_viscosity`: `psi*(w) = b (|w| - A)_+^2`,
//! * `quadratic_limit`: `psi(v) = v^2/(4 omega)`, `psi*(w) = omega w^2`,
//! * `rate_independent`: `psi(v) = A |v|`, `psi*` the indicator of `[-A, A]`.
//!
//! Infinite dual values are represented by `f64::INFINITY` (a sentinel, never
//! the result of overflow); cosh-family evaluations go through log-space for
//! large `b w`, so `alpha = exp(-b A)` is usable up to `b A` of order 10^3
//! where `alpha` itself underflows.

use crate::energy::EnergyLandscape;
use crate::{Error, Result};

/// Sentinel for `psi* = +infinity` outside the rate-independent stable set.
pub const INFINITE_COST: f64 = f64::INFINITY;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyTag {
    Cosh,
    VanishingViscosity,
    QuadraticLimit,
    RateIndependent,
}

/// A `(psi, psi*)` pair with its parameters.
///
/// `ln_alpha` is stored instead of `alpha` so that the scaling
/// `alpha = exp(-beta A)` stays meaningful when `alpha` underflows.
#[derive(Clone, Copy, Debug)]
pub struct DissipationFamily {
    pub tag: FamilyTag,
    pub ln_alpha: f64,
    pub beta: f64,
    pub omega: f64,
    /// Activation threshold `A`.
    pub threshold: f64,
}

impl DissipationFamily {
    /// cosh family with free `alpha`; the implied threshold is `-ln(alpha)/beta`.
    pub fn cosh(alpha: f64, beta: f64) -> Self {
        Self {
            tag: FamilyTag::Cosh,
            ln_alpha: alpha.ln(),
            beta,
            omega: alpha * beta,
            threshold: (-alpha.ln() / beta).max(0.0),
        }
    }

    /// cosh family in the rate-independent scaling `alpha = exp(-beta A)`.
    pub fn cosh_with_threshold(a: f64, beta: f64) -> Self {
        Self {
            tag: FamilyTag::Cosh,
            ln_alpha: -beta * a,
            beta,
            omega: (-beta * a).exp() * beta,
            threshold: a,
        }
    }

    /// `psi*(w) = beta (|w| - A)_+^2`.
    pub fn vanishing_viscosity(beta: f64, a: f64) -> Self {
        Self {
            tag: FamilyTag::VanishingViscosity,
            ln_alpha: f64::NEG_INFINITY,
            beta,
            omega: 0.0,
            threshold: a,
        }
    }

    /// Quadratic pair with product scale `omega`.
    pub fn quadratic_limit(omega: f64) -> Self {
        Self {
            tag: FamilyTag::QuadraticLimit,
            ln_alpha: f64::NEG_INFINITY,
            beta: f64::NAN,
            omega,
            threshold: 0.0,
        }
    }

    /// 1-homogeneous pair `psi(v) = A|v|`.
    pub fn rate_independent(a: f64) -> Self {
        Self {
            tag: FamilyTag::RateIndependent,
            ln_alpha: f64::NEG_INFINITY,
            beta: f64::INFINITY,
            omega: 0.0,
            threshold: a,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.ln_alpha.exp()
    }

    /// Rebuild the family at a new `beta` along its canonical sequence:
    /// cosh keeps `alpha = exp(-beta A)`, vanishing viscosity keeps `A`,
    /// quadratic keeps `omega` (and therefore cannot localize).
    pub fn at_beta(&self, beta: f64) -> Self {
        match self.tag {
            FamilyTag::Cosh => Self::cosh_with_threshold(self.threshold, beta),
            FamilyTag::VanishingViscosity => Self::vanishing_viscosity(beta, self.threshold),
            FamilyTag::QuadraticLimit => *self,
            FamilyTag::RateIndependent => *self,
        }
    }

    /// Canonical `delta_beta` sequence used by the localization conditions.
    pub fn delta(&self) -> f64 {
        match self.tag {
            FamilyTag::Cosh => self.beta.ln().max(1e-6) / self.beta,
            FamilyTag::VanishingViscosity => self.beta.powf(-1.0 / 3.0),
            FamilyTag::QuadraticLimit => 1.0 / self.beta.max(1.0),
            FamilyTag::RateIndependent => 0.0,
        }
    }

    /// `K_beta = 1 / dpsi*(A + delta_beta)`.
    pub fn k_beta(&self) -> f64 {
        let d = self.dpsi_star(self.threshold + self.delta());
        if d == 0.0 {
            f64::INFINITY
        } else {
            1.0 / d
        }
    }

    /// Dissipation potential `psi(v)`.
    pub fn psi(&self, v: f64) -> f64 {
        match self.tag {
            FamilyTag::Cosh => {
                if v == 0.0 {
                    return 0.0;
                }
                let av = v.abs();
                // asinh(x) with x = |v|/(2 alpha): log form asinh(x) ~ ln(2x)
                // once the argument is huge
                let ln_ratio = av.ln() - std::f64::consts::LN_2 - self.ln_alpha;
                let a_term = if ln_ratio > 30.0 {
                    ln_ratio + std::f64::consts::LN_2
                } else {
                    (av / (2.0 * self.alpha())).asinh()
                };
                let alpha = self.alpha();
                let s = (v * v + 4.0 * alpha * alpha).sqrt();
                // sqrt(v^2 + 4a^2) - 2a = v^2 / (sqrt(v^2+4a^2) + 2a), cancellation-free
                (av * a_term - v * v / (s + 2.0 * alpha)) / self.beta
            }
            FamilyTag::VanishingViscosity => self.threshold * v.abs() + v * v / (4.0 * self.beta),
            FamilyTag::QuadraticLimit => v * v / (4.0 * self.omega),
            FamilyTag::RateIndependent => self.threshold * v.abs(),
        }
    }

    /// `dpsi/dv`. For the rate-independent family this is the subgradient
    /// selection `A sign(v)`.
    pub fn dpsi(&self, v: f64) -> f64 {
        match self.tag {
            FamilyTag::Cosh => {
                if v == 0.0 {
                    return 0.0;
                }
                // asinh(x) ~ ln(2x) for huge x, as in psi
                let ln_ratio = v.abs().ln() - std::f64::consts::LN_2 - self.ln_alpha;
                let a_term = if ln_ratio > 30.0 {
                    ln_ratio + std::f64::consts::LN_2
                } else {
                    (v.abs() / (2.0 * self.alpha())).asinh()
                };
                v.signum() * a_term / self.beta
            }
            FamilyTag::VanishingViscosity => self.threshold * v.signum() + v / (2.0 * self.beta),
            FamilyTag::QuadraticLimit => v / (2.0 * self.omega),
            FamilyTag::RateIndependent => self.threshold * v.signum(),
        }
    }

    /// Dual potential `psi*(w)`.
    pub fn psi_star(&self, w: f64) -> f64 {
        match self.tag {
            FamilyTag::Cosh => {
                let t = self.beta * w.abs();
                if t < 30.0 {
                    let s = (0.5 * t).sinh();
                    4.0 * self.alpha() / self.beta * s * s
                } else {
                    // (2a/b)(cosh t - 1) = exp(ln a - ln b + t + 2 ln(1 - e^-t))
                    (self.ln_alpha - self.beta.ln() + t + 2.0 * (-t).exp().neg_ln1p()).exp()
                }
            }
            FamilyTag::VanishingViscosity => {
                let e = (w.abs() - self.threshold).max(0.0);
                self.beta * e * e
            }
            FamilyTag::QuadraticLimit => self.omega * w * w,
            FamilyTag::RateIndependent => {
                if w.abs() <= self.threshold {
                    0.0
                } else {
                    INFINITE_COST
                }
            }
        }
    }

    /// `dpsi*/dw`.
    pub fn dpsi_star(&self, w: f64) -> f64 {
        match self.tag {
            FamilyTag::Cosh => {
                if w == 0.0 {
                    return 0.0;
                }
                let t = self.beta * w.abs();
                // 2 a sinh(t) in log space
                let ln_2sinh = if t < 1e-3 {
                    (2.0 * t).ln() + (t * t / 6.0).ln_1p()
                } else if t < 30.0 {
                    (2.0 * t.sinh()).ln()
                } else {
                    t + (-2.0 * t).exp().neg_ln1p()
                };
                w.signum() * (self.ln_alpha + ln_2sinh).exp()
            }
            FamilyTag::VanishingViscosity => {
                2.0 * self.beta * (w.abs() - self.threshold).max(0.0) * w.signum()
            }
            FamilyTag::QuadraticLimit => 2.0 * self.omega * w,
            FamilyTag::RateIndependent => {
                if w.abs() <= self.threshold {
                    0.0
                } else {
                    INFINITE_COST * w.signum()
                }
            }
        }
    }
}

trait NegLn1p {
    fn neg_ln1p(self) -> f64;
}

impl NegLn1p for f64 {
    /// `ln(1 - x)` for small positive x.
    fn neg_ln1p(self) -> f64 {
        (-self).ln_1p()
    }
}

/// Numeric Legendre transform `sup_w { v w - f(w) }` over `[lo, hi]` by
/// golden-section search on the concave map `w -> v w - f(w)`.
///
/// The maximizer must be interior: if the objective is still increasing at
/// `hi` (or decreasing at `lo`) the bound is too narrow and
/// [`Error::WidenBound`] is returned.
pub fn legendre(f: impl Fn(f64) -> f64, v: f64, search_bound: (f64, f64)) -> Result<f64> {
    let (lo, hi) = search_bound;
    let g = |w: f64| v * w - f(w);
    let h = (hi - lo) * 1e-9;
    if g(lo + h) < g(lo) || g(hi - h) < g(hi) {
        return Err(Error::WidenBound);
    }

    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-12 * (1.0 + a.abs().max(b.abs())) {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    Ok(g(0.5 * (a + b)))
}

/// Jump-process Hamiltonian `H(x,p) = r+(e^p - 1) + r-(e^-p - 1)` with
/// `r± = alpha exp(-/+ beta grad E(x,t))`.
pub fn hamiltonian(
    x: f64,
    p: f64,
    t: f64,
    landscape: &EnergyLandscape,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    landscape.check_domain(x, t)?;
    let g = landscape.gradient(x, t);
    let r_plus = alpha * (-beta * g).exp();
    let r_minus = alpha * (beta * g).exp();
    Ok(r_plus * p.exp_m1() + r_minus * (-p).exp_m1())
}

/// Legendre transform of the Hamiltonian in `p`:
/// `L(x,v) = v log((v + sqrt(v^2 + 4 r+ r-)) / (2 r+)) - sqrt(v^2 + 4 r+ r-) + r+ + r-`.
///
/// Equals `beta (psi(v) + psi*(grad E) + v grad E)` for the cosh pair.
pub fn lagrangian(
    x: f64,
    v: f64,
    t: f64,
    landscape: &EnergyLandscape,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    landscape.check_domain(x, t)?;
    let g = landscape.gradient(x, t);
    let r_plus = alpha * (-beta * g).exp();
    let r_minus = alpha * (beta * g).exp();
    let s = (v * v + 4.0 * r_plus * r_minus).sqrt();
    let log_term = if v == 0.0 && r_plus == 0.0 {
        0.0
    } else {
        ((v + s) / (2.0 * r_plus)).ln()
    };
    Ok(v * log_term - s + r_plus + r_minus)
}

/// Per-`beta` diagnostics for the localization conditions.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConditionRow {
    pub beta: f64,
    pub delta: f64,
    pub k_beta: f64,
    /// `sup_{|w|<=R} dpsi*(w + M K) / dpsi*(w v (A+delta)) * K` (condition C, middle bullet).
    pub sup_c: f64,
    /// `dpsi*(A + M K) * K` (condition C, last bullet).
    pub edge_c: f64,
    /// Largest sampled `eta_beta(w, 2)` over `|w| <= R` (condition D).
    pub eta_sample: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConditionReport {
    pub rows: Vec<ConditionRow>,
    pub k_vanishes: bool,
    pub sup_c_decreasing: bool,
    pub edge_c_decreasing: bool,
    pub eta_bounded: bool,
    pub verdict: bool,
}

/// Evaluate the localization conditions C and D along an increasing
/// `beta` sequence, rebuilding the family at each `beta` via [`DissipationFamily::at_beta`].
///
/// The verdict requires `K_beta`, the condition-C supremum and the edge
/// quantity to decrease along the sequence, and the condition-D `eta` samples
/// to stay bounded.
pub fn check_conditions(
    family: &DissipationFamily,
    beta_sequence: &[f64],
    m: f64,
    r: f64,
) -> Result<ConditionReport> {
    if beta_sequence.windows(2).any(|p| p[1] <= p[0]) || beta_sequence.is_empty() {
        return Err(Error::NonIncreasingBetas);
    }

    let w_grid: Vec<f64> = (0..512).map(|i| -r + 2.0 * r * i as f64 / 511.0).collect();
    let mut rows = Vec::new();
    for &beta in beta_sequence {
        let fam = family.at_beta(beta);
        let a = fam.threshold;
        let delta = fam.delta();
        let k = fam.k_beta();

        let mut sup_c = 0.0f64;
        let mut eta_sample = 0.0f64;
        for &w in &w_grid {
            let denom = fam.dpsi_star(w.abs().max(a + delta));
            if denom > 0.0 {
                sup_c = sup_c.max(fam.dpsi_star(w.abs() + m * k) / denom * k);
            }
            if let Some(eta) = solve_eta(&fam, w, 2.0) {
                eta_sample = eta_sample.max(eta);
            } else {
                eta_sample = f64::INFINITY;
            }
        }
        let edge_c = fam.dpsi_star(a + m * k) * k;
        rows.push(ConditionRow {
            beta,
            delta,
            k_beta: k,
            sup_c,
            edge_c,
            eta_sample,
        });
    }

    // strict decrease along the sequence: rules out families where the
    // quantity merely stagnates (e.g. the quadratic limit, where K is constant)
    let decreasing = |f: fn(&ConditionRow) -> f64| {
        rows.windows(2).all(|p| f(&p[1]) < f(&p[0]))
    };
    let k_vanishes = decreasing(|r| r.k_beta) && rows.last().unwrap().k_beta.is_finite();
    let sup_c_decreasing = decreasing(|r| r.sup_c);
    let edge_c_decreasing = decreasing(|r| r.edge_c);
    let eta_bounded = rows.iter().all(|r| r.eta_sample.is_finite());
    let verdict = k_vanishes && sup_c_decreasing && edge_c_decreasing && eta_bounded;
    Ok(ConditionReport {
        rows,
        k_vanishes,
        sup_c_decreasing,
        edge_c_decreasing,
        eta_bounded,
        verdict,
    })
}

/// Solve `dpsi*(w + eta) = factor * dpsi*(w)` for `eta >= 0` by bisection.
/// Returns `Some(0)` when `dpsi*(w) = 0`, `None` when no finite root exists.
fn solve_eta(family: &DissipationFamily, w: f64, factor: f64) -> Option<f64> {
    let base = family.dpsi_star(w.abs());
    if base == 0.0 {
        return Some(0.0);
    }
    let target = factor * base;
    let h = |eta: f64| family.dpsi_star(w.abs() + eta) - target;
    let mut hi = 1.0;
    let mut tries = 0;
    while h(hi) < 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return None;
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
