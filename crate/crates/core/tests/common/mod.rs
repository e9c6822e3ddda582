//! Independent oracles and random instance generators shared by the
//! integration tests and the acceptance suite.
#![allow(dead_code)]

use ood_reject::finite_lp::LpItem;
use ood_reject::posthoc::{OperatingPoint, ScoreSelector, ScoredDataset, ScoredSample, ThresholdRule};
use ood_reject::simplex::{self, LinearProgram, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct DatasetShape {
    pub max_n: usize,
    /// Draw scores from a handful of values so ties are common.
    pub ties: bool,
    pub with_g: bool,
    /// Losses in `{k/64}`, so any summation order is exact.
    pub dyadic: bool,
}

pub fn random_dataset(rng: &mut ChaCha8Rng, shape: DatasetShape) -> ScoredDataset {
    loop {
        let n = rng.random_range(1..=shape.max_n);
        let ood_rate = [0.0, 0.2, 0.5, 0.8][rng.random_range(0..4)];
        let score = |rng: &mut ChaCha8Rng| {
            if shape.ties {
                rng.random_range(0..6) as f64 / 4.0
            } else {
                rng.random::<f64>() * 10.0 - 5.0
            }
        };
        let samples: Vec<ScoredSample> = (0..n)
            .map(|_| {
                let is_ood = rng.random::<f64>() < ood_rate;
                let loss = if is_ood {
                    0.0
                } else if shape.dyadic {
                    rng.random_range(0..=64) as f64 / 64.0
                } else {
                    rng.random::<f64>()
                };
                ScoredSample {
                    score_r: score(rng),
                    score_g: shape.with_g.then(|| score(rng)),
                    is_ood,
                    loss,
                }
            })
            .collect();
        if let Ok(d) = ScoredDataset::new(samples) {
            return d;
        }
    }
}

/// `κ` with its own formula, `None` at `0/0`.
pub fn precision(pi: f64, tpr: f64, fpr: f64) -> Option<f64> {
    let a = (1.0 - pi) * tpr;
    let b = pi * fpr;
    if a + b > 0.0 {
        Some(a / (a + b))
    } else {
        None
    }
}

/// Every distinct threshold, evaluated by a full pass over the samples.
pub fn brute_force_sweep(dataset: &ScoredDataset, selector: ScoreSelector) -> Vec<OperatingPoint> {
    let mut values: Vec<f64> = dataset.samples().iter().map(|s| selector.score(s)).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut lambdas = vec![f64::NEG_INFINITY];
    lambdas.extend(values);
    let pi = dataset.pi();
    lambdas
        .into_iter()
        .map(|lambda| {
            let (mut a_id, mut a_ood, mut loss) = (0usize, 0usize, 0.0);
            for s in dataset.samples() {
                if selector.score(s) <= lambda {
                    if s.is_ood {
                        a_ood += 1;
                    } else {
                        a_id += 1;
                        loss += s.loss;
                    }
                }
            }
            let tpr = a_id as f64 / dataset.num_id() as f64;
            let fpr = if dataset.num_ood() == 0 {
                0.0
            } else {
                a_ood as f64 / dataset.num_ood() as f64
            };
            OperatingPoint {
                rule: ThresholdRule { selector, lambda },
                tpr,
                fpr,
                precision: precision(pi, tpr, fpr),
                selective_risk: (a_id > 0).then(|| loss / a_id as f64),
                accepted_id: a_id,
                accepted_ood: a_ood,
            }
        })
        .collect()
}

/// Mann-Whitney form of the ROC area for "accept iff score <= λ":
/// `P(s_ID < s_OOD) + P(s_ID = s_OOD)/2`.
pub fn rank_sum_auroc(dataset: &ScoredDataset, selector: ScoreSelector) -> f64 {
    let id: Vec<f64> = dataset.samples().iter().filter(|s| !s.is_ood).map(|s| selector.score(s)).collect();
    let ood: Vec<f64> = dataset.samples().iter().filter(|s| s.is_ood).map(|s| selector.score(s)).collect();
    let mut twice = 0u64;
    for a in &id {
        for b in &ood {
            twice += match a.total_cmp(b) {
                std::cmp::Ordering::Less => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Greater => 0,
            };
        }
    }
    twice as f64 / (2 * id.len() * ood.len()) as f64
}

pub fn random_lp_items(rng: &mut ChaCha8Rng, max_items: usize) -> Vec<LpItem> {
    let n = rng.random_range(1..=max_items);
    loop {
        let items: Vec<LpItem> = (0..n)
            .map(|_| {
                let p_id = if rng.random::<f64>() < 0.15 { 0.0 } else { rng.random::<f64>() };
                let p_ood = if rng.random::<f64>() < 0.15 { 0.0 } else { rng.random::<f64>() };
                LpItem {
                    p_id,
                    p_ood,
                    risk_mass: p_id * rng.random::<f64>(),
                }
            })
            .collect();
        if items.iter().map(|i| i.p_id).sum::<f64>() > 0.0 {
            return items;
        }
    }
}

/// Items scaled as the solver does: ID and OOD masses to unit totals, risk
/// with the ID masses.
pub fn normalize(items: &[LpItem]) -> Vec<LpItem> {
    let id: f64 = items.iter().map(|i| i.p_id).sum();
    let ood: f64 = items.iter().map(|i| i.p_ood).sum();
    let ood = if ood > 0.0 { ood } else { 1.0 };
    items
        .iter()
        .map(|i| LpItem {
            p_id: i.p_id / id,
            p_ood: i.p_ood / ood,
            risk_mass: i.risk_mass / id,
        })
        .collect()
}

/// Optimal selective risk of the equality-TPR program by enumerating every
/// basic solution: two basic columns among `c` and the FPR slack, every
/// other `c_j` at 0 or 1. `None` when no basic solution is feasible.
pub fn bfs_optimum(items: &[LpItem], phi_min: f64, rho_max: f64) -> Option<f64> {
    let items = normalize(items);
    let n = items.len();
    const TOL: f64 = 1e-10;
    // Column n is the slack: (0, 1).
    let col = |j: usize| -> (f64, f64) {
        if j == n {
            (0.0, 1.0)
        } else {
            (items[j].p_id, items[j].p_ood)
        }
    };
    let mut best: Option<f64> = None;
    for a in 0..=n {
        for b in a + 1..=n {
            let (a1, a2) = col(a);
            let (b1, b2) = col(b);
            let det = a1 * b2 - b1 * a2;
            if det.abs() < 1e-14 {
                continue;
            }
            let others: Vec<usize> = (0..n).filter(|&j| j != a && j != b).collect();
            for mask in 0u32..(1 << others.len()) {
                let mut c = vec![0.0; n];
                for (k, &j) in others.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        c[j] = 1.0;
                    }
                }
                let r1 = phi_min - (0..n).map(|j| items[j].p_id * c[j]).sum::<f64>();
                let r2 = rho_max - (0..n).map(|j| items[j].p_ood * c[j]).sum::<f64>();
                let xa = (r1 * b2 - b1 * r2) / det;
                let xb = (a1 * r2 - r1 * a2) / det;
                let ok = |j: usize, v: f64| {
                    if j == n {
                        v >= -TOL
                    } else {
                        (-TOL..=1.0 + TOL).contains(&v)
                    }
                };
                if !(ok(a, xa) && ok(b, xb)) {
                    continue;
                }
                if a < n {
                    c[a] = xa;
                }
                if b < n {
                    c[b] = xb;
                }
                let obj = (0..n).map(|j| items[j].risk_mass * c[j]).sum::<f64>() / phi_min;
                if best.is_none_or(|v| obj < v) {
                    best = Some(obj);
                }
            }
        }
    }
    best
}

/// Minimal selective risk with TPR only bounded below, as a linear-fractional
/// program linearized by the Charnes-Cooper substitution `z = t·c`,
/// `t = 1/Σ p_I c`.
pub fn charnes_cooper_optimum(items: &[LpItem], phi_min: f64, rho_max: f64) -> Option<f64> {
    let items = normalize(items);
    let n = items.len();
    // Columns: z_0..z_{n-1}, t, s_fpr, s_box_0..s_box_{n-1}, s_t.
    let cols = 2 * n + 3;
    let (t, s_fpr, s_t) = (n, n + 1, 2 * n + 2);
    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = items[j].risk_mass;
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    // Σ p_I z = 1
    let mut r = vec![0.0; cols];
    for j in 0..n {
        r[j] = items[j].p_id;
    }
    rows.push(r);
    rhs.push(1.0);
    // Σ p_O z - ρ t + s = 0
    let mut r = vec![0.0; cols];
    for j in 0..n {
        r[j] = items[j].p_ood;
    }
    r[t] = -rho_max;
    r[s_fpr] = 1.0;
    rows.push(r);
    rhs.push(0.0);
    // z_j - t + s_j = 0
    for j in 0..n {
        let mut r = vec![0.0; cols];
        r[j] = 1.0;
        r[t] = -1.0;
        r[n + 2 + j] = 1.0;
        rows.push(r);
        rhs.push(0.0);
    }
    // t + s = 1/φ_min
    let mut r = vec![0.0; cols];
    r[t] = 1.0;
    r[s_t] = 1.0;
    rows.push(r);
    rhs.push(1.0 / phi_min);
    let sol = simplex::solve(&LinearProgram {
        cost,
        rows,
        rhs,
        upper: vec![f64::INFINITY; cols],
    });
    (sol.status == Status::Optimal).then_some(sol.objective)
}
