//! Empirical estimators and constrained post-hoc tuning on validation scores.
//!
//! A single-score family is `{ s(x) <= λ : λ ∈ ℝ }`. Sorting the samples once
//! by score enumerates every attainable `(R^S_n, φ_n, ρ_n, κ_n)` in one sweep.
//! A double-score family `{ s_r·cos α + s_g·sin α <= λ }` is searched on an
//! equidistant grid of angles, one sweep per angle.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::reject_models::{mixed_score, precision, SelectiveRule};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub score_r: f64,
    pub score_g: Option<f64>,
    pub is_ood: bool,
    /// Prediction loss `ℓ(y, h(x))`; zero for OOD rows.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDataset {
    samples: Vec<ScoredSample>,
    /// OOD prior used for precision; the empirical OOD fraction when unset.
    pub pi_override: Option<f64>,
    n_id: usize,
    n_ood: usize,
    has_g: bool,
}

impl ScoredDataset {
    pub fn new(samples: Vec<ScoredSample>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidDataset(m));
        if samples.is_empty() {
            return bad("empty dataset".into());
        }
        let has_g = samples[0].score_g.is_some();
        for (i, s) in samples.iter().enumerate() {
            if s.score_g.is_some() != has_g {
                return bad(format!("sample {i}: score_g must be present on all samples or none"));
            }
            if s.score_r.is_nan() || s.score_g.is_some_and(f64::is_nan) {
                return bad(format!("sample {i}: NaN score"));
            }
            if !(s.loss >= 0.0) || !s.loss.is_finite() {
                return bad(format!("sample {i}: loss must be finite and nonnegative"));
            }
            if s.is_ood && s.loss != 0.0 {
                return bad(format!("sample {i}: OOD sample with nonzero loss"));
            }
        }
        let n_ood = samples.iter().filter(|s| s.is_ood).count();
        let n_id = samples.len() - n_ood;
        if n_id == 0 {
            return bad("no ID samples".into());
        }
        Ok(Self {
            samples,
            pi_override: None,
            n_id,
            n_ood,
            has_g,
        })
    }

    pub fn with_pi(mut self, pi: f64) -> Self {
        self.pi_override = Some(pi);
        self
    }

    pub fn samples(&self) -> &[ScoredSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_id(&self) -> usize {
        self.n_id
    }

    pub fn num_ood(&self) -> usize {
        self.n_ood
    }

    pub fn has_score_g(&self) -> bool {
        self.has_g
    }

    pub fn pi(&self) -> f64 {
        self.pi_override
            .unwrap_or(self.n_ood as f64 / self.samples.len() as f64)
    }
}

/// Which scalar score a single-score family thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSelector {
    /// `s_r` alone.
    R,
    /// `s_g` alone.
    G,
    /// `s_r + μ·s_g`.
    Mixed(f64),
    /// `s_r·cos α + s_g·sin α`.
    Angle(f64),
}

/// `(cos α, sin α)` with exact values on the axes, so α = 0 and α = π/2
/// reproduce the pure scores bit for bit.
pub fn angle_coefficients(alpha: f64) -> (f64, f64) {
    if alpha == 0.0 {
        (1.0, 0.0)
    } else if alpha == FRAC_PI_2 {
        (0.0, 1.0)
    } else {
        (alpha.cos(), alpha.sin())
    }
}

/// `d` equidistant angles on `[0, π)`.
pub fn alpha_grid(d: usize) -> Vec<f64> {
    (0..d)
        .map(|k| {
            if 2 * k == d {
                FRAC_PI_2
            } else {
                PI * k as f64 / d as f64
            }
        })
        .collect()
}

impl ScoreSelector {
    pub fn needs_g(&self) -> bool {
        !matches!(self, ScoreSelector::R)
    }

    pub fn score(&self, s: &ScoredSample) -> f64 {
        let g = || s.score_g.expect("score_g checked by caller");
        match *self {
            ScoreSelector::R => s.score_r,
            ScoreSelector::G => g(),
            ScoreSelector::Mixed(mu) => mixed_score(mu, s.score_r, g()),
            ScoreSelector::Angle(alpha) => {
                let (c, si) = angle_coefficients(alpha);
                let mut v = 0.0;
                if c != 0.0 {
                    v += c * s.score_r;
                }
                if si != 0.0 {
                    v += si * g();
                }
                v
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ScoreSelector::R => "score_r".into(),
            ScoreSelector::G => "score_g".into(),
            ScoreSelector::Mixed(mu) => format!("score_r+{mu}*score_g"),
            ScoreSelector::Angle(alpha) => format!("angle({alpha})"),
        }
    }
}

/// Accept iff `selector(x) <= lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub selector: ScoreSelector,
    pub lambda: f64,
}

impl ThresholdRule {
    pub fn accepts(&self, s: &ScoredSample) -> bool {
        self.selector.score(s) <= self.lambda
    }

    /// The same rule written as `r + μ·g <= λ`, when the direction allows it
    /// (angles with `cos α > 0`, or the pure axes).
    pub fn to_selective_rule(&self) -> Option<SelectiveRule> {
        match self.selector {
            ScoreSelector::R => Some(SelectiveRule::new(0.0, self.lambda)),
            ScoreSelector::G => Some(SelectiveRule::g_only(self.lambda)),
            ScoreSelector::Mixed(mu) => Some(SelectiveRule::new(mu, self.lambda)),
            ScoreSelector::Angle(alpha) => {
                let (c, s) = angle_coefficients(alpha);
                if c == 0.0 {
                    Some(SelectiveRule::g_only(self.lambda))
                } else if c > 0.0 {
                    Some(SelectiveRule::new(s / c, self.lambda / c))
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub rule: ThresholdRule,
    pub tpr: f64,
    pub fpr: f64,
    pub precision: Option<f64>,
    /// `None` iff `accepted_id = 0`.
    pub selective_risk: Option<f64>,
    pub accepted_id: usize,
    pub accepted_ood: usize,
}

impl OperatingPoint {
    fn from_counts(
        rule: ThresholdRule,
        accepted_id: usize,
        accepted_ood: usize,
        loss_sum: f64,
        n_id: usize,
        n_ood: usize,
        pi: f64,
    ) -> Self {
        let tpr = accepted_id as f64 / n_id as f64;
        let fpr = if n_ood == 0 {
            0.0
        } else {
            accepted_ood as f64 / n_ood as f64
        };
        Self {
            rule,
            tpr,
            fpr,
            precision: precision(pi, tpr, fpr),
            selective_risk: (accepted_id > 0).then(|| loss_sum / accepted_id as f64),
            accepted_id,
            accepted_ood,
        }
    }

    pub fn selective_risk(&self) -> Result<f64> {
        self.selective_risk.ok_or(Error::UndefinedSelectiveRisk)
    }
}

/// Evaluates one rule by direct enumeration of the samples.
pub fn empirical_point(dataset: &ScoredDataset, rule: ThresholdRule) -> OperatingPoint {
    check_selector(dataset, rule.selector);
    let (mut acc_id, mut acc_ood, mut loss) = (0, 0, 0.0);
    for s in dataset.samples() {
        if rule.accepts(s) {
            if s.is_ood {
                acc_ood += 1;
            } else {
                acc_id += 1;
                loss += s.loss;
            }
        }
    }
    OperatingPoint::from_counts(
        rule,
        acc_id,
        acc_ood,
        loss,
        dataset.num_id(),
        dataset.num_ood(),
        dataset.pi(),
    )
}

fn check_selector(dataset: &ScoredDataset, selector: ScoreSelector) {
    assert!(
        !selector.needs_g() || dataset.has_score_g(),
        "selector {selector:?} needs score_g, which the dataset lacks"
    );
}

/// Every attainable operating point of `selector(x) <= λ`, in increasing `λ`.
///
/// The first point accepts nothing (`λ = -inf`); each further point admits
/// one group of tied scores and carries that score as its `λ`. The output has
/// `#distinct scores + 1` entries.
pub fn sweep_single_score(dataset: &ScoredDataset, selector: ScoreSelector) -> Vec<OperatingPoint> {
    sweep_with_pi(dataset, selector, dataset.pi())
}

fn sweep_with_pi(dataset: &ScoredDataset, selector: ScoreSelector, pi: f64) -> Vec<OperatingPoint> {
    check_selector(dataset, selector);
    let mut order: Vec<(f64, u32)> = dataset
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| (selector.score(s), i as u32))
        .collect();
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let (n_id, n_ood) = (dataset.num_id(), dataset.num_ood());
    let point = |lambda, a_id, a_ood, loss| {
        OperatingPoint::from_counts(ThresholdRule { selector, lambda }, a_id, a_ood, loss, n_id, n_ood, pi)
    };
    let mut out = Vec::with_capacity(order.len() + 1);
    out.push(point(f64::NEG_INFINITY, 0, 0, 0.0));
    let (mut a_id, mut a_ood, mut loss) = (0, 0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let value = order[i].0;
        while i < order.len() && order[i].0 == value {
            let s = &dataset.samples()[order[i].1 as usize];
            if s.is_ood {
                a_ood += 1;
            } else {
                a_id += 1;
                loss += s.loss;
            }
            i += 1;
        }
        out.push(point(value, a_id, a_ood, loss));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuningMode {
    TprFpr,
    PrecRecall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningTargets {
    pub phi_min: f64,
    pub rho_max: Option<f64>,
    pub kappa_min: Option<f64>,
}

impl TuningTargets {
    pub fn tpr_fpr(phi_min: f64, rho_max: f64) -> Self {
        Self {
            phi_min,
            rho_max: Some(rho_max),
            kappa_min: None,
        }
    }

    pub fn prec_recall(phi_min: f64, kappa_min: f64) -> Self {
        Self {
            phi_min,
            rho_max: None,
            kappa_min: Some(kappa_min),
        }
    }

    pub fn mode(&self) -> Result<TuningMode> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.phi_min) {
            return Err(Error::Config(format!("phi_min = {} outside [0, 1]", self.phi_min)));
        }
        match (self.rho_max, self.kappa_min) {
            (Some(r), None) if unit(r) => Ok(TuningMode::TprFpr),
            (None, Some(k)) if unit(k) => Ok(TuningMode::PrecRecall),
            (Some(_), None) | (None, Some(_)) => Err(Error::Config("target outside [0, 1]".into())),
            _ => Err(Error::Config("set exactly one of rho_max and kappa_min".into())),
        }
    }

    fn secondary_ok(&self, p: &OperatingPoint) -> bool {
        match (self.rho_max, self.kappa_min) {
            (Some(r), _) => p.fpr <= r,
            (None, Some(k)) => p.precision.is_some_and(|v| v >= k),
            (None, None) => true,
        }
    }

    pub fn is_feasible(&self, p: &OperatingPoint) -> bool {
        p.accepted_id > 0 && p.tpr >= self.phi_min && self.secondary_ok(p)
    }
}

/// Diagnostics for an infeasible tuning problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    /// Largest TPR among points meeting the FPR or precision bound.
    pub max_tpr: f64,
    /// Among points with TPR >= phi_min: the smallest FPR (TPR-FPR mode) or
    /// the largest precision (precision-recall mode).
    pub best_secondary: Option<f64>,
}

impl std::fmt::Display for Frontier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "max attainable TPR under the bound {:.4}", self.max_tpr)?;
        match self.best_secondary {
            Some(v) => write!(f, ", best secondary metric at phi_min {v:.4}"),
            None => write!(f, ", phi_min never reached"),
        }
    }
}

/// `a` beats `b`: lower risk, then higher TPR, then lower λ.
fn better(a: &OperatingPoint, b: &OperatingPoint) -> bool {
    let (ra, rb) = (a.selective_risk.unwrap_or(f64::INFINITY), b.selective_risk.unwrap_or(f64::INFINITY));
    match ra.total_cmp(&rb) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => match a.tpr.total_cmp(&b.tpr) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => a.rule.lambda < b.rule.lambda,
        },
    }
}

/// Running best feasible point plus frontier diagnostics.
#[derive(Debug, Clone)]
struct Search {
    targets: TuningTargets,
    best: Option<OperatingPoint>,
    max_tpr: f64,
    best_secondary: Option<f64>,
}

impl Search {
    fn new(targets: TuningTargets) -> Self {
        Self {
            targets,
            best: None,
            max_tpr: 0.0,
            best_secondary: None,
        }
    }

    fn offer(&mut self, p: &OperatingPoint) {
        if self.targets.secondary_ok(p) {
            self.max_tpr = self.max_tpr.max(p.tpr);
        }
        if p.tpr >= self.targets.phi_min {
            let v = match self.targets.rho_max {
                Some(_) => Some(p.fpr),
                None => p.precision,
            };
            if let Some(v) = v {
                self.best_secondary = Some(match (self.best_secondary, self.targets.rho_max) {
                    (None, _) => v,
                    (Some(b), Some(_)) => b.min(v),
                    (Some(b), None) => b.max(v),
                });
            }
        }
        if self.targets.is_feasible(p) && self.best.as_ref().is_none_or(|b| better(p, b)) {
            self.best = Some(*p);
        }
    }

    /// Merge keeping `self` on exact ties, so the reduction order decides.
    fn merge(mut self, other: Search) -> Search {
        self.max_tpr = self.max_tpr.max(other.max_tpr);
        self.best_secondary = match (self.best_secondary, other.best_secondary) {
            (Some(a), Some(b)) => Some(if self.targets.rho_max.is_some() { a.min(b) } else { a.max(b) }),
            (a, b) => a.or(b),
        };
        if let Some(p) = other.best {
            if self.best.as_ref().is_none_or(|b| better(&p, b)) {
                self.best = Some(p);
            }
        }
        self
    }

    fn finish(self) -> Result<OperatingPoint> {
        self.best.ok_or(Error::Infeasible(Frontier {
            max_tpr: self.max_tpr,
            best_secondary: self.best_secondary,
        }))
    }
}

fn tune(dataset: &ScoredDataset, selectors: &[ScoreSelector], targets: TuningTargets, pi: f64) -> Result<OperatingPoint> {
    let mut search = Search::new(targets);
    for &sel in selectors {
        for p in sweep_with_pi(dataset, sel, pi) {
            search.offer(&p);
        }
    }
    search.finish()
}

/// Minimal selective risk subject to `φ_n >= φ_min` and `ρ_n <= ρ_max`, over
/// the union of the given single-score families.
pub fn tune_tpr_fpr(dataset: &ScoredDataset, selectors: &[ScoreSelector], targets: TuningTargets) -> Result<OperatingPoint> {
    if targets.mode()? != TuningMode::TprFpr {
        return Err(Error::Config("TPR-FPR tuning needs phi_min and rho_max".into()));
    }
    tune(dataset, selectors, targets, dataset.pi())
}

/// Minimal selective risk subject to `φ_n >= φ_min` and `κ_n >= κ_min`, with
/// precision computed at OOD prior `pi`.
pub fn tune_prec_recall(
    dataset: &ScoredDataset,
    selectors: &[ScoreSelector],
    targets: TuningTargets,
    pi: f64,
) -> Result<OperatingPoint> {
    if targets.mode()? != TuningMode::PrecRecall {
        return Err(Error::Config("precision-recall tuning needs phi_min and kappa_min".into()));
    }
    check_pi(pi)?;
    tune(dataset, selectors, targets, pi)
}

fn check_pi(pi: f64) -> Result<()> {
    if (0.0..1.0).contains(&pi) {
        Ok(())
    } else {
        Err(Error::Config(format!("pi = {pi} must lie in [0, 1)")))
    }
}

/// Runs one sweep per angle and maps it through `f`, returning results in
/// angle order regardless of how the work is scheduled.
pub fn map_angles<T, F>(dataset: &ScoredDataset, alphas: &[f64], pi: f64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(f64, &[OperatingPoint]) -> T + Sync,
{
    alphas
        .par_iter()
        .map(|&alpha| f(alpha, &sweep_with_pi(dataset, ScoreSelector::Angle(alpha), pi)))
        .collect()
}

/// Best rule of the double-score family over `d` angles on `[0, π)`.
pub fn double_score_grid(dataset: &ScoredDataset, targets: TuningTargets, d: usize) -> Result<OperatingPoint> {
    if d < 2 {
        return Err(Error::Config(format!("angular grid needs d >= 2, got {d}")));
    }
    double_score_search(dataset, targets, &alpha_grid(d), dataset.pi())
}

/// As [`double_score_grid`], over an explicit set of angles and with an
/// explicit prior for precision.
pub fn double_score_search(
    dataset: &ScoredDataset,
    targets: TuningTargets,
    alphas: &[f64],
    pi: f64,
) -> Result<OperatingPoint> {
    targets.mode()?;
    check_pi(pi)?;
    if !dataset.has_score_g() {
        return Err(Error::InvalidDataset("double-score tuning needs score_g".into()));
    }
    if alphas.is_empty() {
        return Err(Error::Config("no angles to search".into()));
    }
    let partial = map_angles(dataset, alphas, pi, |_, points| {
        let mut s = Search::new(targets);
        for p in points {
            s.offer(p);
        }
        s
    });
    partial
        .into_iter()
        .reduce(Search::merge)
        .expect("at least one angle")
        .finish()
}
