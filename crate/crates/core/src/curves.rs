//! ROC, precision-recall, risk-coverage-at-FPR and CCR-FPR curves.
//!
//! Single-score curves are the sweep points themselves. A double-score family
//! has no single threshold to vary, so its curves are envelopes on a unit grid:
//! for each grid value of the constrained quantity, the best attainable value
//! of the other over all angles and thresholds.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::posthoc::{alpha_grid, map_angles, sweep_single_score, OperatingPoint, ScoreSelector, ScoredDataset};
use crate::{Error, Result};

/// Grid size of double-score curves.
pub const GRID_POINTS: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Roc,
    Pr,
    RcAtFpr,
    CcrFpr,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Roc => "roc",
            CurveKind::Pr => "pr",
            CurveKind::RcAtFpr => "rc_at_fpr",
            CurveKind::CcrFpr => "ccr_fpr",
        }
    }

    fn axes(self) -> (&'static str, &'static str) {
        match self {
            CurveKind::Roc => ("FPR", "TPR"),
            CurveKind::Pr => ("recall (TPR)", "precision"),
            CurveKind::RcAtFpr => ("coverage (TPR)", "selective risk"),
            CurveKind::CcrFpr => ("FPR", "CCR"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Single(ScoreSelector),
    /// `s_r·cos α + s_g·sin α <= λ` over `d` angles.
    Double { d: usize },
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::Single(sel) => sel.label(),
            Family::Double { d } => format!("double(d={d})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub family: String,
    /// Fixed constraint, e.g. `("rho_max", 0.2)`.
    pub constraint: Option<(String, f64)>,
    /// Largest attainable coverage under the constraint (risk-coverage only).
    pub phi_max: Option<f64>,
}

/// Points are ordered along the curve; `x` is nondecreasing. Single-score ROC
/// and CCR curves contain vertical runs (equal `x`), which add no area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub kind: CurveKind,
    pub points: Vec<(f64, f64)>,
    pub meta: CurveMeta,
}

impl CurveSeries {
    fn new(kind: CurveKind, family: &Family, points: Vec<(f64, f64)>) -> Self {
        Self {
            kind,
            points,
            meta: CurveMeta {
                family: family.label(),
                constraint: None,
                phi_max: None,
            },
        }
    }

    /// Trapezoidal area under the polyline.
    pub fn area(&self) -> f64 {
        polyline_area(&self.points)
    }

    /// `x,y` rows behind a `#` comment line naming the kind and constraints.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut head = format!("# kind={} family={}", self.kind.name(), self.meta.family);
        if let Some((name, v)) = &self.meta.constraint {
            let _ = write!(head, " {name}={v}");
        }
        if let Some(v) = self.meta.phi_max {
            let _ = write!(head, " phi_max={v}");
        }
        writeln!(w, "{head}")?;
        writeln!(w, "x,y")?;
        for (x, y) in &self.points {
            writeln!(w, "{x},{y}")?;
        }
        Ok(())
    }

    pub fn axis_labels(&self) -> (&'static str, &'static str) {
        self.kind.axes()
    }
}

fn expect_kind(series: &CurveSeries, kind: CurveKind) {
    assert_eq!(series.kind, kind, "expected a {} curve", kind.name());
}

pub fn auroc(series: &CurveSeries) -> f64 {
    expect_kind(series, CurveKind::Roc);
    series.area()
}

pub fn aupr(series: &CurveSeries) -> f64 {
    expect_kind(series, CurveKind::Pr);
    series.area()
}

/// Area under the CCR-FPR curve.
pub fn oscr_area(series: &CurveSeries) -> f64 {
    expect_kind(series, CurveKind::CcrFpr);
    series.area()
}

fn needs_g(dataset: &ScoredDataset, family: &Family) -> Result<()> {
    let g = match family {
        Family::Single(sel) => sel.needs_g(),
        Family::Double { .. } => true,
    };
    if g && !dataset.has_score_g() {
        return Err(Error::InvalidDataset(format!("{} needs score_g", family.label())));
    }
    Ok(())
}

pub fn roc_curve(dataset: &ScoredDataset, family: &Family) -> Result<CurveSeries> {
    needs_g(dataset, family)?;
    Ok(match family {
        Family::Single(sel) => CurveSeries::new(CurveKind::Roc, family, roc_points(&sweep_single_score(dataset, *sel))),
        Family::Double { d } => double_curves(dataset, *d, dataset.pi(), 1.0).roc,
    })
}

/// Precision-recall curve at OOD prior `pi`; points with zero recall are
/// skipped because precision is `0/0` there.
pub fn pr_curve(dataset: &ScoredDataset, family: &Family, pi: f64) -> Result<CurveSeries> {
    needs_g(dataset, family)?;
    Ok(match family {
        Family::Single(sel) => {
            let sweep = sweep_single_score(&dataset.clone().with_pi(pi), *sel);
            CurveSeries::new(CurveKind::Pr, family, pr_points(&sweep))
        }
        Family::Double { d } => double_curves(dataset, *d, pi, 1.0).pr,
    })
}

/// Selective risk against coverage among rules with `ρ_n <= rho_max`. The
/// largest feasible coverage is reported in `meta.phi_max`; the curve is
/// empty when nothing is feasible.
pub fn rc_at_fpr(dataset: &ScoredDataset, family: &Family, rho_max: f64) -> Result<CurveSeries> {
    needs_g(dataset, family)?;
    if !(0.0..=1.0).contains(&rho_max) {
        return Err(Error::Config(format!("rho_max = {rho_max} outside [0, 1]")));
    }
    Ok(match family {
        Family::Single(sel) => {
            let sweep = sweep_single_score(dataset, *sel);
            let mut series = CurveSeries::new(CurveKind::RcAtFpr, family, risk_coverage_points(&sweep, rho_max));
            series.meta.constraint = Some(("rho_max".into(), rho_max));
            series.meta.phi_max = series.points.last().map(|p| p.0);
            series
        }
        Family::Double { d } => double_curves(dataset, *d, dataset.pi(), rho_max).rc,
    })
}

/// `(φ_n, R^S_n)` of sweep points with `ρ_n <= rho_max`; one point per
/// distinct coverage (steps that only add OOD samples leave both unchanged).
fn risk_coverage_points(sweep: &[OperatingPoint], rho_max: f64) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for p in sweep.iter().filter(|p| p.fpr <= rho_max) {
        if let Some(r) = p.selective_risk {
            if pts.last().is_none_or(|q| q.0 != p.tpr) {
                pts.push((p.tpr, r));
            }
        }
    }
    pts
}

/// CCR against FPR, with `CCR = 1 - R^S_n` on accepted ID samples (the
/// correct-classification rate under 0/1 loss). Starts at `(0, 0)`.
pub fn ccr_fpr_curve(dataset: &ScoredDataset, family: &Family) -> Result<CurveSeries> {
    needs_g(dataset, family)?;
    Ok(match family {
        Family::Single(sel) => {
            CurveSeries::new(CurveKind::CcrFpr, family, ccr_points(&sweep_single_score(dataset, *sel)))
        }
        Family::Double { d } => double_curves(dataset, *d, dataset.pi(), 1.0).ccr,
    })
}

fn roc_points(sweep: &[OperatingPoint]) -> Vec<(f64, f64)> {
    sweep.iter().map(|p| (p.fpr, p.tpr)).collect()
}

fn pr_points(sweep: &[OperatingPoint]) -> Vec<(f64, f64)> {
    sweep
        .iter()
        .filter(|p| p.tpr > 0.0)
        .filter_map(|p| p.precision.map(|k| (p.tpr, k)))
        .collect()
}

fn ccr_points(sweep: &[OperatingPoint]) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(sweep.iter().filter_map(|p| p.selective_risk.map(|r| (p.fpr, 1.0 - r))));
    pts
}

fn polyline_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
        .sum()
}

/// Best single-direction curve areas within the double-score family, each
/// with the angle attaining it (first on ties).
///
/// The envelope of CCR over all rules is 1 at every FPR (accepting one
/// correctly classified ID sample suffices), so the family's summary areas
/// are taken per direction instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyAreas {
    pub auroc: (f64, f64),
    pub aupr: (f64, f64),
    pub oscr: (f64, f64),
}

pub fn double_family_areas(dataset: &ScoredDataset, d: usize, pi: f64) -> Result<FamilyAreas> {
    needs_g(dataset, &Family::Double { d })?;
    let per_angle = map_angles(dataset, &alpha_grid(d), pi, |alpha, sweep| {
        [
            (polyline_area(&roc_points(sweep)), alpha),
            (polyline_area(&pr_points(sweep)), alpha),
            (polyline_area(&ccr_points(sweep)), alpha),
        ]
    });
    let best = |k: usize| {
        per_angle
            .iter()
            .map(|a| a[k])
            .fold((f64::NEG_INFINITY, 0.0), |b, a| if a.0 > b.0 { a } else { b })
    };
    Ok(FamilyAreas {
        auroc: best(0),
        aupr: best(1),
        oscr: best(2),
    })
}

/// OSCR of a single score.
pub fn oscr(dataset: &ScoredDataset, selector: ScoreSelector) -> Result<f64> {
    Ok(oscr_area(&ccr_fpr_curve(dataset, &Family::Single(selector))?))
}

/// `j / (m - 1)` for `j = 0..m`.
pub fn unit_grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| grid_value(j, m)).collect()
}

fn grid_value(j: usize, m: usize) -> f64 {
    j as f64 / (m - 1) as f64
}

/// Smallest `j` with `grid(j) >= v`, for `v` in `[0, 1]`.
fn first_at_or_above(v: f64, m: usize) -> usize {
    let mut j = ((v * (m - 1) as f64).ceil() as usize).min(m - 1);
    while j > 0 && grid_value(j - 1, m) >= v {
        j -= 1;
    }
    while j < m - 1 && grid_value(j, m) < v {
        j += 1;
    }
    j
}

/// Largest `j` with `grid(j) <= v`, for `v` in `[0, 1]`.
fn last_at_or_below(v: f64, m: usize) -> usize {
    let mut j = ((v * (m - 1) as f64).floor() as usize).min(m - 1);
    while j < m - 1 && grid_value(j + 1, m) <= v {
        j += 1;
    }
    while j > 0 && grid_value(j, m) > v {
        j -= 1;
    }
    j
}

/// Best-per-grid-cell accumulators for the four envelope curves.
#[derive(Debug, Clone)]
struct Envelopes {
    m: usize,
    rc_rho_max: f64,
    /// Max TPR, bucketed at the first grid FPR bound the point satisfies.
    roc: Vec<f64>,
    /// Max precision, bucketed at the last grid TPR bound the point satisfies.
    pr: Vec<f64>,
    /// Max CCR, bucketed like `roc`.
    ccr: Vec<f64>,
    /// Min selective risk, bucketed like `pr`, only for `ρ_n <= rc_rho_max`.
    rc: Vec<f64>,
    phi_max: Option<f64>,
}

impl Envelopes {
    fn new(m: usize, rc_rho_max: f64) -> Self {
        Self {
            m,
            rc_rho_max,
            roc: vec![0.0; m],
            pr: vec![f64::NEG_INFINITY; m],
            ccr: vec![0.0; m],
            rc: vec![f64::INFINITY; m],
            phi_max: None,
        }
    }

    fn offer(&mut self, p: &OperatingPoint) {
        let lo = first_at_or_above(p.fpr, self.m);
        self.roc[lo] = self.roc[lo].max(p.tpr);
        if let Some(risk) = p.selective_risk {
            self.ccr[lo] = self.ccr[lo].max(1.0 - risk);
            let hi = last_at_or_below(p.tpr, self.m);
            if let Some(k) = p.precision {
                self.pr[hi] = self.pr[hi].max(k);
            }
            if p.fpr <= self.rc_rho_max {
                self.rc[hi] = self.rc[hi].min(risk);
                self.phi_max = Some(self.phi_max.map_or(p.tpr, |v: f64| v.max(p.tpr)));
            }
        }
    }

    fn merge(mut self, other: Envelopes) -> Envelopes {
        for j in 0..self.m {
            self.roc[j] = self.roc[j].max(other.roc[j]);
            self.pr[j] = self.pr[j].max(other.pr[j]);
            self.ccr[j] = self.ccr[j].max(other.ccr[j]);
            self.rc[j] = self.rc[j].min(other.rc[j]);
        }
        self.phi_max = match (self.phi_max, other.phi_max) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self
    }

    fn finish(mut self, family: &Family) -> EnvelopeCurves {
        let m = self.m;
        for j in 1..m {
            self.roc[j] = self.roc[j].max(self.roc[j - 1]);
            self.ccr[j] = self.ccr[j].max(self.ccr[j - 1]);
        }
        for j in (0..m - 1).rev() {
            self.pr[j] = self.pr[j].max(self.pr[j + 1]);
            self.rc[j] = self.rc[j].min(self.rc[j + 1]);
        }
        let grid = unit_grid(m);
        let along = |ys: &[f64]| -> Vec<(f64, f64)> {
            grid.iter().zip(ys).filter(|(_, y)| y.is_finite()).map(|(&x, &y)| (x, y)).collect()
        };
        let mut rc = CurveSeries::new(CurveKind::RcAtFpr, family, along(&self.rc));
        rc.meta.constraint = Some(("rho_max".into(), self.rc_rho_max));
        rc.meta.phi_max = self.phi_max;
        EnvelopeCurves {
            roc: CurveSeries::new(CurveKind::Roc, family, along(&self.roc)),
            pr: CurveSeries::new(CurveKind::Pr, family, along(&self.pr)),
            ccr: CurveSeries::new(CurveKind::CcrFpr, family, along(&self.ccr)),
            rc,
        }
    }
}

/// Curves on the unit grid: ROC (`x` = FPR bound, `y` = max TPR), PR (`x` =
/// TPR bound, `y` = max precision), CCR-FPR (`x` = FPR bound, `y` = max CCR)
/// and risk-coverage (`x` = TPR bound, `y` = min selective risk under the FPR
/// cap).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCurves {
    pub roc: CurveSeries,
    pub pr: CurveSeries,
    pub ccr: CurveSeries,
    pub rc: CurveSeries,
}

/// Envelope curves of any family on a `GRID_POINTS` grid. For the double
/// family this is one sweep per angle; precision uses prior `pi`.
pub fn envelope_curves(dataset: &ScoredDataset, family: &Family, pi: f64, rc_rho_max: f64) -> Result<EnvelopeCurves> {
    needs_g(dataset, family)?;
    Ok(match family {
        Family::Single(sel) => {
            let mut env = Envelopes::new(GRID_POINTS, rc_rho_max);
            for p in &sweep_single_score(&dataset.clone().with_pi(pi), *sel) {
                env.offer(p);
            }
            env.finish(family)
        }
        Family::Double { d } => double_curves(dataset, *d, pi, rc_rho_max),
    })
}

fn double_curves(dataset: &ScoredDataset, d: usize, pi: f64, rc_rho_max: f64) -> EnvelopeCurves {
    let family = Family::Double { d };
    map_angles(dataset, &alpha_grid(d), pi, |_, points| {
        let mut env = Envelopes::new(GRID_POINTS, rc_rho_max);
        for p in points {
            env.offer(p);
        }
        env
    })
    .into_iter()
    .reduce(Envelopes::merge)
    .unwrap_or_else(|| Envelopes::new(GRID_POINTS, rc_rho_max))
    .finish(&family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posthoc::ScoredSample;
    use approx::assert_abs_diff_eq;

    fn row(score: f64, is_ood: bool, loss: f64) -> ScoredSample {
        ScoredSample {
            score_r: score,
            score_g: None,
            is_ood,
            loss,
        }
    }

    fn four() -> ScoredDataset {
        ScoredDataset::new(vec![
            row(0.1, false, 0.0),
            row(0.2, true, 0.0),
            row(0.3, false, 1.0),
            row(0.4, true, 0.0),
        ])
        .unwrap()
    }

    const R: Family = Family::Single(ScoreSelector::R);

    #[test]
    fn roc_four_points() {
        let roc = roc_curve(&four(), &R).unwrap();
        assert_eq!(roc.points, vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]);
        assert_abs_diff_eq!(auroc(&roc), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn perfect_and_constant_scores() {
        let perfect = ScoredDataset::new(vec![row(0.0, false, 0.0), row(0.1, false, 0.0), row(1.0, true, 0.0)]).unwrap();
        let roc = roc_curve(&perfect, &R).unwrap();
        assert!(roc.points.contains(&(0.0, 1.0)));
        assert_eq!(auroc(&roc), 1.0);
        assert_eq!(oscr(&perfect, ScoreSelector::R).unwrap(), 1.0);

        let flat = ScoredDataset::new(vec![row(0.5, false, 0.0), row(0.5, true, 0.0)]).unwrap();
        assert_eq!(roc_curve(&flat, &R).unwrap().points, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn pr_without_ood_prior_is_one() {
        let pr = pr_curve(&four(), &R, 0.0).unwrap();
        assert!(pr.points.iter().all(|p| p.1 == 1.0));
        assert_eq!(aupr(&pr), 0.5);
        assert_eq!(pr.points.first().unwrap().0, 0.5);
    }

    #[test]
    fn rc_four_points() {
        let rc = rc_at_fpr(&four(), &R, 0.0).unwrap();
        assert_eq!(rc.points, vec![(0.5, 0.0)]);
        assert_eq!(rc.meta.phi_max, Some(0.5));
        let rc = rc_at_fpr(&four(), &R, 1.0).unwrap();
        assert_eq!(rc.points, vec![(0.5, 0.0), (1.0, 0.5)]);
        assert!(rc_at_fpr(&four(), &R, 1.5).is_err());
    }

    #[test]
    fn ccr_four_points() {
        let c = ccr_fpr_curve(&four(), &R).unwrap();
        assert_eq!(c.points, vec![(0.0, 0.0), (0.0, 1.0), (0.5, 1.0), (0.5, 0.5), (1.0, 0.5)]);
    }

    #[test]
    fn grid_buckets() {
        let m = 201;
        assert_eq!(first_at_or_above(0.0, m), 0);
        assert_eq!(first_at_or_above(0.2, m), 40);
        assert_eq!(first_at_or_above(0.2000001, m), 41);
        assert_eq!(last_at_or_below(0.2, m), 40);
        assert_eq!(last_at_or_below(0.1999999, m), 39);
        assert_eq!(last_at_or_below(1.0, m), 200);
        for j in 0..m {
            let v = grid_value(j, m);
            assert_eq!(first_at_or_above(v, m), j);
            assert_eq!(last_at_or_below(v, m), j);
        }
    }

    #[test]
    fn single_envelope_matches_sweep_maxima() {
        let env = envelope_curves(&four(), &R, 0.5, 1.0).unwrap();
        // TPR 0.5 is reachable at FPR 0, full TPR needs FPR 0.5.
        let at = |x: f64| env.roc.points.iter().find(|p| p.0 == x).unwrap().1;
        assert_eq!(at(0.0), 0.5);
        assert_eq!(at(0.495), 0.5);
        assert_eq!(at(0.5), 1.0);
    }

    #[test]
    fn csv_header_names_constraints() {
        let rc = rc_at_fpr(&four(), &R, 0.25).unwrap();
        let mut out = Vec::new();
        rc.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("# kind=rc_at_fpr family=score_r rho_max=0.25 phi_max=0.5\nx,y\n"), "{text}");
    }
}
