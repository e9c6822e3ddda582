//! Batch commands behind the `ood-reject` binary: `synth`, `tune`, `curves`
//! and `lp`. Each command takes a [`RunConfig`], writes its files and returns
//! an [`Outcome`] that maps onto the exit-code contract (0 success, 1 usage or
//! IO error, 2 infeasible or unable).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curves::{self, CurveSeries, EnvelopeCurves, Family};
use crate::finite_lp::{self, LpInstance, LpStatus};
use crate::posthoc::{
    alpha_grid, angle_coefficients, double_score_search, tune_prec_recall, tune_tpr_fpr, OperatingPoint,
    ScoreSelector, ScoredDataset, TuningMode, TuningTargets,
};
use crate::scorefile;
use crate::svg;
use crate::synth_world::SyntheticSetup;
use crate::{Error, Result};

pub const SCHEMA: u32 = 1;
pub const DEFAULT_N: usize = 200_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_D: usize = 360;
pub const DEFAULT_PHI_MIN: f64 = 0.7;
pub const DEFAULT_RHO_MAX: f64 = 0.2;
pub const DEFAULT_KAPPA_MIN: f64 = 0.9;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNABLE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Synth,
    Tune,
    Curves,
    Lp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub setup_path: Option<PathBuf>,
    /// Score file for `tune`/`curves`, item file for `lp`.
    pub scores_path: Option<PathBuf>,
    pub mode: TuningMode,
    pub phi_min: Option<f64>,
    pub rho_max: Option<f64>,
    pub kappa_min: Option<f64>,
    pub pi: Option<f64>,
    pub n: usize,
    pub seed: u64,
    pub d: usize,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            setup_path: None,
            scores_path: None,
            mode: TuningMode::TprFpr,
            phi_min: None,
            rho_max: None,
            kappa_min: None,
            pi: None,
            n: DEFAULT_N,
            seed: DEFAULT_SEED,
            d: DEFAULT_D,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: &str| Err(Error::Config(m.into()));
        if self.d < 2 {
            return cfg("--d must be at least 2");
        }
        if let Some(pi) = self.pi {
            if !(0.0..1.0).contains(&pi) {
                return cfg("--pi must lie in [0, 1)");
            }
        }
        for (name, v) in [
            ("--phi-min", self.phi_min),
            ("--rho-max", self.rho_max),
            ("--kappa-min", self.kappa_min),
        ] {
            if v.is_some_and(|v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        match self.command {
            Command::Synth => {
                if self.scores_path.is_some() {
                    return cfg("synth generates its own scores; drop --scores");
                }
            }
            Command::Tune | Command::Curves | Command::Lp => {
                if self.scores_path.is_none() {
                    let what = if self.command == Command::Lp {
                        "an item CSV (p_id,p_ood,risk_mass)"
                    } else {
                        "a score file"
                    };
                    return Err(Error::Config(format!("--scores <path> is required: {what}")));
                }
            }
        }
        if matches!(self.command, Command::Tune | Command::Lp) {
            self.targets()?;
        }
        Ok(())
    }

    /// Targets for `tune` and `lp`: `--phi-min` plus the bound of `--mode`.
    pub fn targets(&self) -> Result<TuningTargets> {
        let phi = self
            .phi_min
            .ok_or_else(|| Error::Config("--phi-min is required".into()))?;
        let t = match self.mode {
            TuningMode::TprFpr => {
                if self.kappa_min.is_some() {
                    return Err(Error::Config("--kappa-min needs --mode prec-recall".into()));
                }
                let rho = self
                    .rho_max
                    .ok_or_else(|| Error::Config("--mode tpr-fpr needs --rho-max".into()))?;
                TuningTargets::tpr_fpr(phi, rho)
            }
            TuningMode::PrecRecall => {
                if self.rho_max.is_some() {
                    return Err(Error::Config("--rho-max needs --mode tpr-fpr".into()));
                }
                let kappa = self
                    .kappa_min
                    .ok_or_else(|| Error::Config("--mode prec-recall needs --kappa-min".into()))?;
                TuningTargets::prec_recall(phi, kappa)
            }
        };
        t.mode()?;
        Ok(t)
    }

    fn out_dir(&self) -> Option<&Path> {
        self.output_dir.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Unable,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => EXIT_OK,
            Outcome::Unable => EXIT_UNABLE,
        }
    }
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) => o.exit_code(),
        Err(Error::Infeasible(_)) => EXIT_UNABLE,
        Err(_) => EXIT_USAGE,
    }
}

/// A report cell: a finite number or an explicit marker such as `"unable"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Value(f64),
    Text(String),
}

impl Cell {
    fn num(v: f64) -> Self {
        if v.is_finite() {
            Cell::Value(v)
        } else {
            Cell::Text(format!("{v}"))
        }
    }

    fn opt(v: Option<f64>, missing: &str) -> Self {
        v.map_or_else(|| Cell::Text(missing.into()), Cell::num)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    fn show(&self, digits: usize) -> String {
        match self {
            Cell::Value(v) => format!("{v:.digits$}"),
            Cell::Text(t) => t.clone(),
        }
    }
}

/// Winning rule of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSummary {
    pub score: String,
    /// Direction on `[0, π)` for double-score rules.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Mixing coefficient of `s_r + μ·s_g`; `"inf"` when only `s_g` counts.
    pub mu: Cell,
    pub lambda: Cell,
}

impl RuleSummary {
    fn of(p: &OperatingPoint) -> Self {
        let alpha = match p.rule.selector {
            ScoreSelector::Angle(a) => Some(a),
            _ => None,
        };
        let mu = match p.rule.selector {
            ScoreSelector::R => Cell::Value(0.0),
            ScoreSelector::G => Cell::Text("inf".into()),
            ScoreSelector::Mixed(mu) => Cell::num(mu),
            ScoreSelector::Angle(a) => {
                let (c, s) = angle_coefficients(a);
                if c == 0.0 {
                    Cell::Text("inf".into())
                } else if c > 0.0 {
                    Cell::num(s / c)
                } else {
                    Cell::Text(format!("n/a (cos {c:.4} < 0)"))
                }
            }
        };
        Self {
            score: p.rule.selector.label(),
            alpha,
            mu,
            lambda: Cell::num(p.rule.lambda),
        }
    }

    fn show(&self) -> String {
        let mut s = String::new();
        if let Some(a) = self.alpha {
            let _ = write!(s, "alpha={a:.4} ");
        }
        let _ = write!(s, "mu={} lambda={}", self.mu.show(4), self.lambda.show(6));
        s
    }
}

/// Result of one tuning problem for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub selective_risk: Cell,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tpr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fpr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleSummary>,
    /// Frontier diagnostics when unable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
}

impl TuneResult {
    fn from(result: Result<OperatingPoint>) -> Result<Self> {
        match result {
            Ok(p) => Ok(Self {
                selective_risk: Cell::opt(p.selective_risk, "undefined"),
                tpr: Some(p.tpr),
                fpr: Some(p.fpr),
                precision: p.precision,
                rule: Some(RuleSummary::of(&p)),
                diagnostics: None,
            }),
            Err(Error::Infeasible(f)) => Ok(Self {
                selective_risk: Cell::Text("unable".into()),
                tpr: None,
                fpr: None,
                precision: None,
                rule: None,
                diagnostics: Some(f.to_string()),
            }),
            Err(e) => Err(e),
        }
    }

    pub fn is_unable(&self) -> bool {
        self.rule.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tpr_fpr: Option<TuneResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prec_recall: Option<TuneResult>,
    pub auroc: Cell,
    pub aupr: Cell,
    pub oscr: Cell,
}

impl MethodRow {
    pub fn result(&self, mode: TuningMode) -> Option<&TuneResult> {
        match mode {
            TuningMode::TprFpr => self.tpr_fpr.as_ref(),
            TuningMode::PrecRecall => self.prec_recall.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub n: usize,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetsSummary {
    pub mode: TuningMode,
    pub phi_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_min: Option<f64>,
}

impl From<TuningTargets> for TargetsSummary {
    fn from(t: TuningTargets) -> Self {
        Self {
            mode: t.mode().unwrap_or(TuningMode::TprFpr),
            phi_min: t.phi_min,
            rho_max: t.rho_max,
            kappa_min: t.kappa_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub command: Command,
    pub provenance: Provenance,
    /// OOD prior used for precision.
    pub pi: f64,
    pub d: usize,
    pub targets: Vec<TargetsSummary>,
    pub rows: Vec<MethodRow>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Methods with a defined selective risk under `mode`, best first, and the
    /// unable ones.
    pub fn ranking(&self, mode: TuningMode) -> (Vec<&str>, Vec<&str>) {
        let mut ranked: Vec<(&str, f64)> = Vec::new();
        let mut unable = Vec::new();
        for row in &self.rows {
            match row.result(mode).and_then(|r| r.selective_risk.value()) {
                Some(v) => ranked.push((&row.method, v)),
                None => unable.push(row.method.as_str()),
            }
        }
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
        (ranked.into_iter().map(|(m, _)| m).collect(), unable)
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "ood-reject {:?} report (schema {}), n = {}, seed = {}, pi = {}, d = {}",
            self.command,
            self.schema,
            self.provenance.n,
            self.provenance.seed.map_or("-".into(), |s| s.to_string()),
            self.pi,
            self.d
        );
        let _ = writeln!(out, "config hash {}", self.provenance.config_hash);
        let headers: Vec<String> = self.targets.iter().map(target_header).collect();
        let mut table: Vec<Vec<String>> = Vec::new();
        let mut head = vec!["method".to_string(), "family".to_string()];
        head.extend(headers.iter().map(|h| format!("R^S @ {h}")));
        head.extend(["AUROC", "AUPR", "OSCR"].map(String::from));
        table.push(head);
        for row in &self.rows {
            let mut line = vec![row.method.clone(), row.family.clone()];
            for t in &self.targets {
                line.push(row.result(t.mode).map_or("-".into(), |r| r.selective_risk.show(4)));
            }
            line.extend([row.auroc.show(3), row.aupr.show(3), row.oscr.show(3)]);
            table.push(line);
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|k| table.iter().map(|l| l[k].chars().count()).max().unwrap_or(0))
            .collect();
        for line in &table {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        for (t, h) in self.targets.iter().zip(&headers) {
            let _ = writeln!(out, "\n{h}:");
            for row in &self.rows {
                if let Some(r) = row.result(t.mode) {
                    let detail = match (&r.rule, &r.diagnostics) {
                        (Some(rule), _) => format!(
                            "TPR={:.4} FPR={:.4} {}",
                            r.tpr.unwrap_or(f64::NAN),
                            r.fpr.unwrap_or(f64::NAN),
                            rule.show()
                        ),
                        (None, Some(d)) => format!("unable: {d}"),
                        (None, None) => "unable".into(),
                    };
                    let _ = writeln!(out, "  {:<8} {detail}", row.method);
                }
            }
            let (ranked, unable) = self.ranking(t.mode);
            let _ = write!(out, "  ranking by selective risk: {}", ranked.join(" < "));
            if !unable.is_empty() {
                let _ = write!(out, "; unable: {}", unable.join(", "));
            }
            out.push('\n');
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

fn target_header(t: &TargetsSummary) -> String {
    match t.mode {
        TuningMode::TprFpr => format!("TPR {} / FPR {}", t.phi_min, t.rho_max.unwrap_or(f64::NAN)),
        TuningMode::PrecRecall => format!("Prec {} / Recall {}", t.kappa_min.unwrap_or(f64::NAN), t.phi_min),
    }
}

fn config_hash(config: &RunConfig, extra: &[&[u8]]) -> String {
    let mut keyed = config.clone();
    keyed.output_dir = None;
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&keyed).expect("config serializes"));
    for e in extra {
        h.update((e.len() as u64).to_le_bytes());
        h.update(e);
    }
    hex::encode(h.finalize())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// One method of a report: a single score or the double-score family.
#[derive(Debug, Clone, Copy)]
struct Method {
    name: &'static str,
    family: Family,
}

/// Tunes `method` under each target set and computes its curve areas.
fn evaluate(dataset: &ScoredDataset, method: Method, targets: &[TuningTargets], pi: f64) -> Result<MethodRow> {
    let alphas = match method.family {
        Family::Double { d } => alpha_grid(d),
        Family::Single(_) => Vec::new(),
    };
    let (mut tpr_fpr, mut prec_recall) = (None, None);
    for &t in targets {
        let mode = t.mode()?;
        let result = match (method.family, mode) {
            (Family::Single(sel), TuningMode::TprFpr) => tune_tpr_fpr(dataset, &[sel], t),
            (Family::Single(sel), TuningMode::PrecRecall) => tune_prec_recall(dataset, &[sel], t, pi),
            (Family::Double { .. }, _) => double_score_search(dataset, t, &alphas, pi),
        };
        let slot = match mode {
            TuningMode::TprFpr => &mut tpr_fpr,
            TuningMode::PrecRecall => &mut prec_recall,
        };
        *slot = Some(TuneResult::from(result)?);
    }
    let has_ood = dataset.num_ood() > 0;
    let (auroc, aupr, oscr) = match method.family {
        Family::Single(sel) => {
            let auroc = curves::auroc(&curves::roc_curve(dataset, &method.family)?);
            let aupr = curves::aupr(&curves::pr_curve(dataset, &method.family, pi)?);
            (auroc, aupr, curves::oscr(dataset, sel)?)
        }
        Family::Double { d } => {
            let a = curves::double_family_areas(dataset, d, pi)?;
            (a.auroc.0, a.aupr.0, a.oscr.0)
        }
    };
    let undefined_without_ood = |v: f64| {
        if has_ood {
            Cell::num(v)
        } else {
            Cell::Text("undefined".into())
        }
    };
    Ok(MethodRow {
        method: method.name.into(),
        family: method.family.label(),
        tpr_fpr,
        prec_recall,
        auroc: undefined_without_ood(auroc),
        aupr: Cell::num(aupr),
        oscr: undefined_without_ood(oscr),
    })
}

/// Samples the synthetic world, scores it with `(r_B, g)` and evaluates
/// methods A (g only), B (`r + 0.2 g`), C (r only) and D (double score)
/// under both tuning problems. Writes `report.json`, `report.txt` and
/// `scores.csv` when an output directory is set.
pub fn cmd_synth(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let (setup, setup_bytes) = match &config.setup_path {
        Some(p) => (SyntheticSetup::load(p)?, read_bytes(p)?),
        None => {
            let s = SyntheticSetup::default_world();
            let json = s.to_json().into_bytes();
            (s, json)
        }
    };
    if config.n == 0 {
        return Err(Error::InvalidDataset("empty dataset: --n must be positive".into()));
    }
    let pi = config.pi.unwrap_or(setup.pi);
    let samples = setup.sample(config.n, config.seed);
    let dataset = setup.score_samples(&samples)?.with_pi(pi);
    if dataset.num_id() == 0 {
        return Err(Error::InvalidDataset("sample contains no ID points; increase --n".into()));
    }

    let phi = config.phi_min.unwrap_or(DEFAULT_PHI_MIN);
    let targets = [
        TuningTargets::tpr_fpr(phi, config.rho_max.unwrap_or(DEFAULT_RHO_MAX)),
        TuningTargets::prec_recall(phi, config.kappa_min.unwrap_or(DEFAULT_KAPPA_MIN)),
    ];
    for t in &targets {
        t.mode()?;
    }
    let methods = [
        Method {
            name: "A(inf)",
            family: Family::Single(ScoreSelector::G),
        },
        Method {
            name: "B(0.2)",
            family: Family::Single(ScoreSelector::Mixed(0.2)),
        },
        Method {
            name: "C(0)",
            family: Family::Single(ScoreSelector::R),
        },
        Method {
            name: "D(R)",
            family: Family::Double { d: config.d },
        },
    ];
    let rows = methods
        .iter()
        .map(|&m| evaluate(&dataset, m, &targets, pi))
        .collect::<Result<Vec<_>>>()?;
    let mut notes = Vec::new();
    if dataset.num_ood() == 0 {
        notes.push("sample has no OOD rows: precision is 1 and AUROC/OSCR are undefined".into());
    }
    let report = Report {
        schema: SCHEMA,
        command: Command::Synth,
        provenance: Provenance {
            seed: Some(config.seed),
            n: config.n,
            config_hash: config_hash(config, &[&setup_bytes]),
        },
        pi,
        d: config.d,
        targets: targets.iter().map(|&t| t.into()).collect(),
        rows,
        notes,
    };
    if let Some(dir) = config.out_dir() {
        ensure_dir(dir)?;
        write_report(dir, &report)?;
        scorefile::save_scores(&dir.join("scores.csv"), &dataset)?;
    }
    Ok(report)
}

fn write_report(dir: &Path, report: &Report) -> Result<()> {
    write_file(&dir.join("report.json"), report.to_json().as_bytes())?;
    write_file(&dir.join("report.txt"), report.to_text().as_bytes())
}

fn load_dataset(config: &RunConfig) -> Result<(ScoredDataset, Vec<u8>)> {
    let path = config.scores_path.as_deref().expect("validated");
    let bytes = read_bytes(path)?;
    let dataset = scorefile::read_scores(bytes.as_slice(), path)?;
    Ok((dataset, bytes))
}

fn file_methods(dataset: &ScoredDataset, d: usize) -> Vec<Method> {
    let mut methods = vec![Method {
        name: "score_r",
        family: Family::Single(ScoreSelector::R),
    }];
    if dataset.has_score_g() {
        methods.push(Method {
            name: "score_g",
            family: Family::Single(ScoreSelector::G),
        });
        methods.push(Method {
            name: "double",
            family: Family::Double { d },
        });
    }
    methods
}

/// Tunes `score_r`, `score_g` and the double-score family on a score file.
/// Returns [`Outcome::Unable`] only when no family meets the targets.
pub fn cmd_tune(config: &RunConfig) -> Result<(Report, Outcome)> {
    config.validate()?;
    let targets = config.targets()?;
    let (dataset, bytes) = load_dataset(config)?;
    let pi = config.pi.unwrap_or_else(|| dataset.pi());
    let dataset = dataset.with_pi(pi);
    let rows = file_methods(&dataset, config.d)
        .into_iter()
        .map(|m| evaluate(&dataset, m, &[targets], pi))
        .collect::<Result<Vec<_>>>()?;
    let mut notes = Vec::new();
    if !dataset.has_score_g() {
        notes.push("score file has no score_g column: score_g and double-score sections omitted".into());
    }
    if dataset.num_ood() == 0 {
        notes.push("score file has no OOD rows: FPR is 0 and AUROC/OSCR are undefined".into());
    }
    let all_unable = rows
        .iter()
        .all(|r| [&r.tpr_fpr, &r.prec_recall].into_iter().flatten().all(TuneResult::is_unable));
    let report = Report {
        schema: SCHEMA,
        command: Command::Tune,
        provenance: Provenance {
            seed: None,
            n: dataset.len(),
            config_hash: config_hash(config, &[&bytes]),
        },
        pi,
        d: config.d,
        targets: vec![targets.into()],
        rows,
        notes,
    };
    if let Some(dir) = config.out_dir() {
        ensure_dir(dir)?;
        write_report(dir, &report)?;
    }
    Ok((report, if all_unable { Outcome::Unable } else { Outcome::Success }))
}

/// Files written by `curves`, in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveOutput {
    pub series: Vec<CurveSeries>,
    pub files: Vec<PathBuf>,
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

/// ROC, PR, risk-coverage at `--rho-max` (default 0.2) and CCR-FPR curves for
/// each family in the score file, as CSV plus one SVG per curve kind.
pub fn cmd_curves(config: &RunConfig) -> Result<CurveOutput> {
    config.validate()?;
    let (dataset, _) = load_dataset(config)?;
    if dataset.num_ood() == 0 {
        return Err(Error::InvalidDataset(
            "score file has no OOD rows (is_ood=1): ROC and CCR-FPR curves need FPR, refusing to emit curves".into(),
        ));
    }
    let pi = config.pi.unwrap_or_else(|| dataset.pi());
    let rho_max = config.rho_max.unwrap_or(DEFAULT_RHO_MAX);
    let dir = config
        .out_dir()
        .ok_or_else(|| Error::Config("curves needs --out <dir>".into()))?;
    ensure_dir(dir)?;

    let mut by_kind: [Vec<CurveSeries>; 4] = Default::default();
    for m in file_methods(&dataset, config.d) {
        let set = match m.family {
            Family::Single(_) => EnvelopeCurves {
                roc: curves::roc_curve(&dataset, &m.family)?,
                pr: curves::pr_curve(&dataset, &m.family, pi)?,
                rc: curves::rc_at_fpr(&dataset, &m.family, rho_max)?,
                ccr: curves::ccr_fpr_curve(&dataset, &m.family)?,
            },
            Family::Double { .. } => curves::envelope_curves(&dataset, &m.family, pi, rho_max)?,
        };
        for (k, s) in [set.roc, set.pr, set.rc, set.ccr].into_iter().enumerate() {
            by_kind[k].push(s);
        }
    }

    let mut files = Vec::new();
    let mut all = Vec::new();
    for group in by_kind {
        let kind = group[0].kind.name();
        for s in &group {
            let path = dir.join(format!("{kind}_{}.csv", slug(&s.meta.family)));
            let mut buf = Vec::new();
            s.write_csv(&mut buf).map_err(|e| Error::io(&path, e))?;
            write_file(&path, &buf)?;
            files.push(path);
        }
        let path = dir.join(format!("{kind}.svg"));
        let refs: Vec<&CurveSeries> = group.iter().collect();
        write_file(&path, svg::line_chart(kind, &refs).as_bytes())?;
        files.push(path);
        all.extend(group);
    }
    Ok(CurveOutput { series: all, files })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpReport {
    pub schema: u32,
    pub status: LpStatus,
    pub phi_min: f64,
    pub rho_max: f64,
    pub objective: Cell,
    pub lambda: Cell,
    pub mu: Cell,
    pub structure: String,
}

/// Solves the finite bounded TPR-FPR program for an item CSV. In
/// precision-recall mode the precision floor is turned into the equivalent
/// FPR cap at `--pi`. Writes `acceptance.csv`, `structure.txt` and
/// `lp.json`.
pub fn cmd_lp(config: &RunConfig) -> Result<(LpReport, Outcome)> {
    config.validate()?;
    let targets = config.targets()?;
    let path = config.scores_path.as_deref().expect("validated");
    let items = LpInstance::load_items(path)?;
    let rho_max = match targets.mode()? {
        TuningMode::TprFpr => targets.rho_max.expect("tpr-fpr"),
        TuningMode::PrecRecall => {
            let pi = config
                .pi
                .ok_or_else(|| Error::Config("--mode prec-recall with lp needs --pi".into()))?;
            if pi == 0.0 {
                1.0
            } else {
                finite_lp::fpr_cap_for_precision(pi, targets.kappa_min.expect("prec-recall"), targets.phi_min)
            }
        }
    };
    let instance = LpInstance::new(items, targets.phi_min, rho_max)?;
    let solution = finite_lp::solve(&instance)?;
    let (structure, outcome) = match solution.status {
        LpStatus::Optimal => (verify_text(&instance, &solution)?, Outcome::Success),
        LpStatus::Infeasible => ("infeasible: no acceptance vector meets both constraints".to_string(), Outcome::Unable),
    };
    let report = LpReport {
        schema: SCHEMA,
        status: solution.status,
        phi_min: instance.phi_min,
        rho_max,
        objective: Cell::opt(Some(solution.objective).filter(|v| v.is_finite()), "undefined"),
        lambda: Cell::opt(Some(solution.lambda).filter(|v| v.is_finite()), "undefined"),
        mu: Cell::opt(Some(solution.mu).filter(|v| v.is_finite()), "undefined"),
        structure,
    };
    if let Some(dir) = config.out_dir() {
        ensure_dir(dir)?;
        if solution.status == LpStatus::Optimal {
            let p = dir.join("acceptance.csv");
            let mut buf = Vec::new();
            solution.write_csv(&mut buf).map_err(|e| Error::io(&p, e))?;
            write_file(&p, &buf)?;
        }
        write_file(&dir.join("structure.txt"), format!("{}\n", report.structure).as_bytes())?;
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        write_file(&dir.join("lp.json"), json.as_bytes())?;
    }
    Ok((report, outcome))
}

fn verify_text(instance: &LpInstance, solution: &finite_lp::LpSolution) -> Result<String> {
    match finite_lp::verify_band_structure(instance, solution) {
        Ok(rep) => Ok(rep.to_string()),
        Err(Error::StructureViolation { indices, message }) => {
            Ok(format!("violation at items {indices:?}: {message}"))
        }
        Err(e) => Err(e),
    }
}

/// Runs a command and prints its human-readable summary to stdout.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    match config.command {
        Command::Synth => {
            let report = cmd_synth(config)?;
            print!("{}", report.to_text());
            Ok(Outcome::Success)
        }
        Command::Tune => {
            let (report, outcome) = cmd_tune(config)?;
            print!("{}", report.to_text());
            Ok(outcome)
        }
        Command::Curves => {
            let out = cmd_curves(config)?;
            for s in &out.series {
                let mut line = format!("{:<10} {:<16} {} points", s.kind.name(), s.meta.family, s.points.len());
                if let Some(v) = s.meta.phi_max {
                    let _ = write!(line, ", phi_max {v:.4}");
                }
                println!("{line}");
            }
            println!("wrote {} files", out.files.len());
            Ok(Outcome::Success)
        }
        Command::Lp => {
            let (report, outcome) = cmd_lp(config)?;
            println!("status: {:?}", report.status);
            println!("objective (selective risk): {}", report.objective.show(9));
            println!("lambda = {}, mu = {}", report.lambda.show(9), report.mu.show(9));
            println!("structure: {}", report.structure);
            Ok(outcome)
        }
    }
}
