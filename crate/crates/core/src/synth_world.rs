//! The known 1-D world: a Gaussian mixture of ID classes and a Gaussian OOD
//! density, with its Bayes classifier, conditional risk and likelihood ratio.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::posthoc::{ScoredDataset, ScoredSample};
use crate::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// One weighted normal component. `variance` is always a variance here; the
/// file-level `param` flag is resolved on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

impl GaussComponent {
    pub fn new(weight: f64, mean: f64, variance: f64) -> Self {
        Self {
            weight,
            mean,
            variance,
        }
    }

    /// `weight · N(x; mean, variance)`.
    pub fn density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        self.weight * (-0.5 * d * d / self.variance).exp() / (2.0 * PI * self.variance).sqrt()
    }
}

/// How the second Gaussian parameter in a setup file is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaussParam {
    #[default]
    Variance,
    Stddev,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    /// Loss for rejecting an ID sample.
    pub eps1: f64,
    /// Loss for predicting on an OOD sample.
    pub eps2: f64,
    /// Loss for rejecting an OOD sample.
    pub eps3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSetup {
    /// Component `k` is the joint density `p_I(x, y = k + 1)`.
    pub id_components: Vec<GaussComponent>,
    pub ood: GaussComponent,
    pub pi: f64,
    pub costs: Costs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    /// ID class in `1..=K`.
    Id(usize),
    Ood,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: f64,
    pub label: Label,
}

#[derive(Serialize, Deserialize)]
struct SetupFile {
    id_components: Vec<GaussComponent>,
    ood: OodFile,
    pi: f64,
    costs: Costs,
    #[serde(default)]
    param: GaussParam,
}

#[derive(Serialize, Deserialize)]
struct OodFile {
    mean: f64,
    variance: f64,
}

impl SyntheticSetup {
    pub fn new(
        id_components: Vec<GaussComponent>,
        ood: GaussComponent,
        pi: f64,
        costs: Costs,
    ) -> Result<Self> {
        let setup = Self {
            id_components,
            ood: GaussComponent { weight: 1.0, ..ood },
            pi,
            costs,
        };
        setup.validate()?;
        Ok(setup)
    }

    /// The default world: three unit-variance ID classes at -1, 1, 3 with
    /// weights 0.3, 0.3, 0.4, OOD `N(2, 0.2)` and prior 0.25.
    pub fn default_world() -> Self {
        Self::from_json(include_str!("../data/setup_default.json"))
            .expect("bundled setup is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SetupFile = serde_json::from_str(text)?;
        let to_var = |p: f64| match file.param {
            GaussParam::Variance => p,
            GaussParam::Stddev => p * p,
        };
        let ids = file
            .id_components
            .iter()
            .map(|c| GaussComponent::new(c.weight, c.mean, to_var(c.variance)))
            .collect();
        let ood = GaussComponent::new(1.0, file.ood.mean, to_var(file.ood.variance));
        Self::new(ids, ood, file.pi, file.costs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = SetupFile {
            id_components: self.id_components.clone(),
            ood: OodFile {
                mean: self.ood.mean,
                variance: self.ood.variance,
            },
            pi: self.pi,
            costs: self.costs,
            param: GaussParam::Variance,
        };
        serde_json::to_string_pretty(&file).expect("setup serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSetup(m));
        if self.id_components.is_empty() {
            return bad("no ID components".into());
        }
        for (k, c) in self.id_components.iter().chain([&self.ood]).enumerate() {
            if !(c.weight >= 0.0) || !c.mean.is_finite() || !(c.variance > 0.0) {
                return bad(format!("component {k} has invalid parameters {c:?}"));
            }
        }
        let total: f64 = self.id_components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return bad(format!("ID weights sum to {total}, expected 1"));
        }
        if !(0.0..1.0).contains(&self.pi) {
            return bad(format!("pi = {} must lie in [0, 1)", self.pi));
        }
        let Costs { eps1, eps2, eps3 } = self.costs;
        if !(eps1 >= 0.0 && eps2 >= 0.0 && eps3 >= 0.0) {
            return bad("costs must be nonnegative".into());
        }
        if !(eps2 > eps3) {
            return bad(format!("need eps2 > eps3, got {eps2} <= {eps3}"));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.id_components.len()
    }

    pub fn pdf_id(&self, x: f64) -> f64 {
        self.id_components.iter().map(|c| c.density(x)).sum()
    }

    pub fn pdf_ood(&self, x: f64) -> f64 {
        self.ood.density(x)
    }

    /// Label maximizing `p_I(x, y)`; the first one on ties.
    fn best_component(&self, x: f64) -> (usize, f64, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        let mut total = 0.0;
        for (k, c) in self.id_components.iter().enumerate() {
            let d = c.density(x);
            total += d;
            if d > best.1 {
                best = (k, d);
            }
        }
        (best.0 + 1, best.1, total)
    }

    /// Posterior mode under 0/1 loss, ties to the smallest label.
    pub fn bayes_classifier(&self, x: f64) -> Result<usize> {
        let (label, _, total) = self.best_component(x);
        if total > 0.0 {
            Ok(label)
        } else {
            Err(Error::ZeroDensity(x))
        }
    }

    /// `r_B(x) = 1 - max_y p_I(y | x)`.
    pub fn conditional_risk(&self, x: f64) -> Result<f64> {
        let (_, best, total) = self.best_component(x);
        if total > 0.0 {
            Ok((1.0 - best / total).max(0.0))
        } else {
            Err(Error::ZeroDensity(x))
        }
    }

    /// `p_I(x) · r_B(x)`, the density of Bayes misclassification mass at `x`.
    pub fn risk_density(&self, x: f64) -> f64 {
        let (_, best, total) = self.best_component(x);
        (total - best).max(0.0)
    }

    /// `g(x) = p_O(x) / p_I(x)`, `+inf` where `p_I(x) = 0`.
    pub fn likelihood_ratio(&self, x: f64) -> f64 {
        let id = self.pdf_id(x);
        if id > 0.0 {
            self.pdf_ood(x) / id
        } else {
            f64::INFINITY
        }
    }

    /// `(r_B(x), g(x))` in one pass. Where `p_I(x) = 0` the risk is reported
    /// as 0, since no ID mass lives there.
    pub fn scores(&self, x: f64) -> (f64, f64) {
        let (_, best, total) = self.best_component(x);
        if total > 0.0 {
            ((1.0 - best / total).max(0.0), self.pdf_ood(x) / total)
        } else {
            (0.0, f64::INFINITY)
        }
    }

    fn draw(&self, seed: u64, index: u64) -> LabeledSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let is_ood = rng.random::<f64>() < self.pi;
        let pick: f64 = rng.random();
        let z: f64 = rng.sample(StandardNormal);
        if is_ood {
            return LabeledSample {
                x: self.ood.mean + z * self.ood.variance.sqrt(),
                label: Label::Ood,
            };
        }
        let mut acc = 0.0;
        let mut chosen = self.id_components.len() - 1;
        for (k, c) in self.id_components.iter().enumerate() {
            acc += c.weight;
            if pick < acc {
                chosen = k;
                break;
            }
        }
        let c = &self.id_components[chosen];
        LabeledSample {
            x: c.mean + z * c.variance.sqrt(),
            label: Label::Id(chosen + 1),
        }
    }

    /// Draws `n` samples. Sample `i` uses its own ChaCha8 stream `i` under
    /// `seed`, so output is identical however the work is partitioned.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<LabeledSample> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| self.draw(seed, i))
            .collect()
    }

    /// Scores samples with `score_r = r_B(x)`, `score_g = g(x)` and the 0/1
    /// loss of the Bayes classifier.
    pub fn score_samples(&self, samples: &[LabeledSample]) -> Result<ScoredDataset> {
        let rows = samples
            .par_iter()
            .map(|s| {
                let risk = self.conditional_risk(s.x)?;
                let loss = match s.label {
                    Label::Ood => 0.0,
                    Label::Id(y) => f64::from(u8::from(self.bayes_classifier(s.x)? != y)),
                };
                Ok(ScoredSample {
                    score_r: risk,
                    score_g: Some(self.likelihood_ratio(s.x)),
                    is_ood: s.label == Label::Ood,
                    loss,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ScoredDataset::new(rows)
    }
}
