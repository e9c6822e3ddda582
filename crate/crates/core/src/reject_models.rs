//! Optimal selective rules of the reject-option models and their theoretical
//! performance on a [`SyntheticSetup`].
//!
//! All three models (cost-based, bounded TPR-FPR, bounded precision-recall)
//! share one optimal form: accept iff `s(x) = r(x) + μ·g(x) <= λ`, with a
//! boundary acceptance probability on `s(x) = λ`. They differ only in how
//! `μ` and `λ` are fixed.

use serde::{Deserialize, Serialize};

use crate::quadrature::{Quadrature, RegionIntegrator};
use crate::synth_world::SyntheticSetup;
use crate::{Error, Result};

/// Accept iff `r + μ·g <= λ`. `μ = +inf` ranks by `g` alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectiveRule {
    pub mu: f64,
    pub lambda: f64,
    /// Acceptance probability on the boundary `s = λ`.
    pub boundary_accept: f64,
}

impl SelectiveRule {
    pub fn new(mu: f64, lambda: f64) -> Self {
        Self {
            mu,
            lambda,
            boundary_accept: 1.0,
        }
    }

    pub fn g_only(lambda: f64) -> Self {
        Self::new(f64::INFINITY, lambda)
    }

    pub fn accept_all() -> Self {
        Self::new(0.0, f64::INFINITY)
    }

    pub fn accept_none() -> Self {
        Self {
            mu: 0.0,
            lambda: f64::NEG_INFINITY,
            boundary_accept: 0.0,
        }
    }

    pub fn score(&self, r: f64, g: f64) -> f64 {
        mixed_score(self.mu, r, g)
    }

    /// Acceptance probability for a sample with score `s`.
    pub fn acceptance(&self, s: f64) -> f64 {
        if s < self.lambda {
            1.0
        } else if s == self.lambda {
            self.boundary_accept
        } else {
            0.0
        }
    }
}

/// `r + μ·g`, with `μ = +inf` meaning `g` and `μ = 0` meaning `r` even when
/// `g` is infinite.
pub fn mixed_score(mu: f64, r: f64, g: f64) -> f64 {
    if mu == f64::INFINITY {
        g
    } else if mu == 0.0 {
        r
    } else {
        r + mu * g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalReport {
    /// Expected extended loss of the cost-based model.
    pub risk: f64,
    pub tpr: f64,
    pub fpr: f64,
    /// `None` when nothing is accepted.
    pub precision: Option<f64>,
    /// `None` when `tpr = 0`.
    pub selective_risk: Option<f64>,
}

impl TheoreticalReport {
    pub fn selective_risk(&self) -> Result<f64> {
        self.selective_risk.ok_or(Error::UndefinedSelectiveRisk)
    }
}

/// `κ = (1-π)φ / (πρ + (1-π)φ)`; `None` at `0/0`.
pub fn precision(pi: f64, tpr: f64, fpr: f64) -> Option<f64> {
    let id = (1.0 - pi) * tpr;
    let den = id + pi * fpr;
    (den > 0.0).then(|| id / den)
}

/// `(ε2 - ε3)·π/(1-π)`, the weight of `g` in the cost-based score.
pub fn cost_mixing(setup: &SyntheticSetup) -> f64 {
    let c = setup.costs;
    (c.eps2 - c.eps3) * setup.pi / (1.0 - setup.pi)
}

/// `s_C(x) = r_B(x) + (ε2-ε3)·π/(1-π)·g(x)`.
pub fn cost_score(setup: &SyntheticSetup, x: f64) -> f64 {
    let (r, g) = setup.scores(x);
    mixed_score(cost_mixing(setup), r, g)
}

/// Bayes classifier plus `accept iff s_C(x) <= ε1`; the boundary choice is
/// free for this model and fixed to accept.
pub fn cost_optimal_rule(setup: &SyntheticSetup) -> SelectiveRule {
    SelectiveRule::new(cost_mixing(setup), setup.costs.eps1)
}

/// Acceptance-region integrals of `(p_I, p_O, p_I·r_B)` for one mixing
/// coefficient, reusable across thresholds.
pub struct RuleProfile<'a> {
    setup: &'a SyntheticSetup,
    #[allow(clippy::type_complexity)]
    region: RegionIntegrator<'a, Box<dyn Fn(f64) -> f64 + 'a>, Box<dyn Fn(f64) -> [f64; 3] + 'a>, 3>,
}

impl<'a> RuleProfile<'a> {
    pub fn new(setup: &'a SyntheticSetup, quad: &'a Quadrature, mu: f64) -> Self {
        let score: Box<dyn Fn(f64) -> f64 + 'a> = Box::new(move |x| {
            let (r, g) = setup.scores(x);
            mixed_score(mu, r, g)
        });
        let integrand: Box<dyn Fn(f64) -> [f64; 3] + 'a> =
            Box::new(move |x| [setup.pdf_id(x), setup.pdf_ood(x), setup.risk_density(x)]);
        Self {
            setup,
            region: RegionIntegrator::new(quad, score, integrand),
        }
    }

    pub fn report(&self, lambda: f64, boundary_accept: f64) -> TheoreticalReport {
        let [tpr, fpr, loss] = self.region.accepted(lambda, boundary_accept);
        let tpr = tpr.clamp(0.0, 1.0);
        let fpr = fpr.clamp(0.0, 1.0);
        let pi = self.setup.pi;
        let c = self.setup.costs;
        // E[ℓ̄] regrouped: OOD part π(ε3 + (ε2-ε3)ρ), ID part (1-π)(∫p_I r c + ε1(1-φ)).
        let risk = pi * (c.eps3 + (c.eps2 - c.eps3) * fpr) + (1.0 - pi) * (loss + c.eps1 * (1.0 - tpr));
        TheoreticalReport {
            risk,
            tpr,
            fpr,
            precision: precision(pi, tpr, fpr),
            selective_risk: (tpr > 0.0).then(|| loss / tpr),
        }
    }

    /// Threshold bracket: the score range on the quadrature grid widened by
    /// 10% on each side.
    pub fn bracket(&self) -> (f64, f64) {
        let (lo, hi) = self.region.score_range();
        let margin = 0.1 * (hi - lo).max(f64::MIN_POSITIVE);
        (lo - margin, hi + margin)
    }
}

pub fn theoretical_report(setup: &SyntheticSetup, rule: &SelectiveRule) -> TheoreticalReport {
    let quad = Quadrature::default();
    let profile = RuleProfile::new(setup, &quad, rule.mu);
    profile.report(rule.lambda, rule.boundary_accept)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Tpr(f64),
    Fpr(f64),
}

const INVERT_TOL: f64 = 1e-6;
const INVERT_ITERS: usize = 200;

/// Smallest `λ` whose rule `(μ, λ)` reaches the target TPR or FPR.
pub fn invert_threshold(setup: &SyntheticSetup, mu: f64, target: Target) -> Result<f64> {
    let quad = Quadrature::default();
    let profile = RuleProfile::new(setup, &quad, mu);
    let (value, pick): (f64, fn(&TheoreticalReport) -> f64) = match target {
        Target::Tpr(v) => (v, |r| r.tpr),
        Target::Fpr(v) => (v, |r| r.fpr),
    };
    let eval = |lambda: f64| pick(&profile.report(lambda, 1.0));
    let (mut lo, mut hi) = profile.bracket();
    let (f_lo, f_hi) = (eval(lo), eval(hi));
    let unattainable = || Error::Unattainable {
        target: value,
        min: f_lo,
        max: f_hi,
    };
    if !(value > 0.0) || value > f_hi + INVERT_TOL {
        return Err(unattainable());
    }
    if value >= f_hi - INVERT_TOL {
        return Ok(hi);
    }
    for _ in 0..INVERT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid) >= value {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if (eval(hi) - value).abs() > INVERT_TOL {
        return Err(unattainable());
    }
    Ok(hi)
}
