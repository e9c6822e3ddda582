//! Bounded TPR-FPR model on a finite input space, as a linear program.
//!
//! With acceptance probabilities `c ∈ [0,1]^X`:
//!
//! ```text
//! min  Σ R(x) c(x) / φ_min
//! s.t. Σ p_I(x) c(x)  = φ_min
//!      Σ p_O(x) c(x) <= ρ_max
//! ```
//!
//! The TPR constraint is an equality because an optimal rule never accepts
//! more ID mass than required. Two structural rows mean a vertex solution has
//! at most two fractional `c(x)`, and the row duals `(λ, -μ)` recover the
//! threshold rule `R(x)/p_I(x) + μ·p_O(x)/p_I(x) <= λ`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::simplex::{self, LinearProgram};
use crate::{Error, Result};

/// Values within this of 0 or 1 count as integral.
pub const INTEGRAL_TOL: f64 = 1e-9;
const STRUCTURE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpItem {
    pub p_id: f64,
    pub p_ood: f64,
    /// `Σ_y p(x, y) ℓ(y, h(x))`.
    pub risk_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    pub items: Vec<LpItem>,
    /// Target TPR on the ID-conditional scale.
    pub phi_min: f64,
    pub rho_max: f64,
}

impl LpInstance {
    pub fn new(items: Vec<LpItem>, phi_min: f64, rho_max: f64) -> Result<Self> {
        let inst = Self {
            items,
            phi_min,
            rho_max,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        if self.items.is_empty() {
            return bad("no items".into());
        }
        for (i, it) in self.items.iter().enumerate() {
            let ok = |v: f64| v >= 0.0 && v.is_finite();
            if !(ok(it.p_id) && ok(it.p_ood) && ok(it.risk_mass)) {
                return bad(format!("item {i}: masses must be finite and nonnegative"));
            }
        }
        if !(self.items.iter().map(|i| i.p_id).sum::<f64>() > 0.0) {
            return bad("total ID mass is zero".into());
        }
        if !(self.phi_min > 0.0 && self.phi_min <= 1.0) {
            return bad(format!("phi_min = {} outside (0, 1]", self.phi_min));
        }
        if !(self.rho_max >= 0.0) {
            return bad(format!("rho_max = {} is negative", self.rho_max));
        }
        Ok(())
    }

    /// ID masses (and risk masses with them) scaled to total 1; OOD masses
    /// scaled to total 1 when positive.
    pub fn normalized_items(&self) -> Vec<LpItem> {
        let id: f64 = self.items.iter().map(|i| i.p_id).sum();
        let ood: f64 = self.items.iter().map(|i| i.p_ood).sum();
        let ood = if ood > 0.0 { ood } else { 1.0 };
        self.items
            .iter()
            .map(|i| LpItem {
                p_id: i.p_id / id,
                p_ood: i.p_ood / ood,
                risk_mass: i.risk_mass / id,
            })
            .collect()
    }

    /// Reads `p_id,p_ood,risk_mass` rows.
    pub fn read_items<R: Read>(reader: R, origin: &Path) -> Result<Vec<LpItem>> {
        let mut csv = csv::ReaderBuilder::new().from_reader(reader);
        let parse_err = |line: u64, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let header = csv.headers().map_err(|e| parse_err(1, e.to_string()))?;
        let names: Vec<&str> = header.iter().map(str::trim).collect();
        if names != ["p_id", "p_ood", "risk_mass"] {
            return Err(parse_err(1, format!("expected header p_id,p_ood,risk_mass, found {}", names.join(","))));
        }
        let mut items = Vec::new();
        for rec in csv.records() {
            let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let v: Vec<f64> = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(line, e.to_string()))?;
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(parse_err(line, "masses must be finite and nonnegative".into()));
            }
            items.push(LpItem {
                p_id: v[0],
                p_ood: v[1],
                risk_mass: v[2],
            });
        }
        Ok(items)
    }

    pub fn load_items(path: &Path) -> Result<Vec<LpItem>> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_items(std::io::BufReader::new(file), path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub acceptance: Vec<f64>,
    /// Selective risk `Σ R c / φ_min` on the normalized scale.
    pub objective: f64,
    /// Dual of the TPR equality: the threshold `λ`.
    pub lambda: f64,
    /// Negated dual of the FPR row: the mixing coefficient `μ >= 0`.
    pub mu: f64,
}

impl LpSolution {
    pub fn fractional(&self) -> Vec<usize> {
        self.acceptance
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > INTEGRAL_TOL && c < 1.0 - INTEGRAL_TOL)
            .map(|(i, _)| i)
            .collect()
    }

    /// `index,acceptance` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,acceptance")?;
        for (i, c) in self.acceptance.iter().enumerate() {
            writeln!(w, "{i},{c}")?;
        }
        Ok(())
    }
}

pub fn solve(instance: &LpInstance) -> Result<LpSolution> {
    instance.validate()?;
    let items = instance.normalized_items();
    let n = items.len();
    // Columns: c_0..c_{n-1}, FPR slack.
    let mut cost: Vec<f64> = items.iter().map(|i| i.risk_mass).collect();
    cost.push(0.0);
    let mut tpr_row: Vec<f64> = items.iter().map(|i| i.p_id).collect();
    tpr_row.push(0.0);
    let mut fpr_row: Vec<f64> = items.iter().map(|i| i.p_ood).collect();
    fpr_row.push(1.0);
    let mut upper = vec![1.0; n];
    upper.push(f64::INFINITY);
    let lp = LinearProgram {
        cost,
        rows: vec![tpr_row, fpr_row],
        rhs: vec![instance.phi_min, instance.rho_max],
        upper,
    };
    let sol = simplex::solve(&lp);
    Ok(match sol.status {
        simplex::Status::Optimal => {
            let acceptance: Vec<f64> = sol.x[..n]
                .iter()
                .map(|&c| {
                    if c < INTEGRAL_TOL {
                        0.0
                    } else if c > 1.0 - INTEGRAL_TOL {
                        1.0
                    } else {
                        c
                    }
                })
                .collect();
            LpSolution {
                status: LpStatus::Optimal,
                acceptance,
                objective: sol.objective / instance.phi_min,
                // `+ 0.0` turns a -0 dual into 0.
                lambda: sol.duals[0] + 0.0,
                mu: -sol.duals[1] + 0.0,
            }
        }
        // Bounded variables and a finite objective rule out unboundedness.
        simplex::Status::Infeasible | simplex::Status::Unbounded => LpSolution {
            status: LpStatus::Infeasible,
            acceptance: vec![0.0; n],
            objective: f64::NAN,
            lambda: f64::NAN,
            mu: f64::NAN,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub lambda: f64,
    pub mu: f64,
    pub fractional: Vec<usize>,
    /// Distinct likelihood ratios `p_O/p_I` among fractional items.
    pub fractional_ratio_values: usize,
}

impl std::fmt::Display for BandReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "consistent, fractional <= {} (items {:?}), lambda = {}, mu = {}",
            self.fractional.len(),
            self.fractional,
            self.lambda,
            self.mu
        )
    }
}

/// Checks that an optimal solution is the threshold rule on
/// `R/p_I + μ·p_O/p_I` with randomization only on the boundary, using the
/// duals of the final basis.
pub fn verify_band_structure(instance: &LpInstance, solution: &LpSolution) -> Result<BandReport> {
    if solution.status != LpStatus::Optimal {
        return Err(Error::InvalidInstance("structure check needs an optimal solution".into()));
    }
    let items = instance.normalized_items();
    let (lambda, mu) = (solution.lambda, solution.mu);
    let violation = |indices: Vec<usize>, message: String| Err(Error::StructureViolation { indices, message });
    if mu < -STRUCTURE_TOL {
        return violation(vec![], format!("negative FPR multiplier mu = {mu}"));
    }
    let mut bad = Vec::new();
    for (i, (it, &c)) in items.iter().zip(&solution.acceptance).enumerate() {
        // Reduced cost; divided by p_I it is score - λ.
        let reduced = it.risk_mass + mu * it.p_ood - lambda * it.p_id;
        let gap = if it.p_id > 0.0 { reduced / it.p_id } else { reduced };
        let ok = if gap < -STRUCTURE_TOL {
            c == 1.0
        } else if gap > STRUCTURE_TOL {
            c == 0.0
        } else {
            true
        };
        if !ok {
            bad.push(i);
        }
    }
    if !bad.is_empty() {
        return violation(bad, "acceptance disagrees with the threshold rule".into());
    }
    let fpr: f64 = items.iter().zip(&solution.acceptance).map(|(i, c)| i.p_ood * c).sum();
    if mu > STRUCTURE_TOL && (fpr - instance.rho_max).abs() > STRUCTURE_TOL {
        return violation(vec![], format!("mu = {mu} > 0 but the FPR bound is slack ({fpr} < {})", instance.rho_max));
    }
    let fractional = solution.fractional();
    let mut ratios: Vec<f64> = fractional
        .iter()
        .map(|&i| {
            let it = &items[i];
            if it.p_id > 0.0 {
                it.p_ood / it.p_id
            } else {
                f64::INFINITY
            }
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup_by(|a, b| (*a - *b).abs() <= STRUCTURE_TOL * (1.0 + b.abs()));
    if ratios.len() > 2 {
        return violation(fractional, "fractional items span more than two likelihood ratios".into());
    }
    Ok(BandReport {
        lambda,
        mu,
        fractional_ratio_values: ratios.len(),
        fractional,
    })
}

/// FPR cap equivalent to a precision floor at TPR `phi_min` and OOD prior
/// `pi`: `ρ_max = (1-π)(1-κ_min) / (π κ_min) · φ_min`.
pub fn fpr_cap_for_precision(pi: f64, kappa_min: f64, phi_min: f64) -> f64 {
    (1.0 - pi) * (1.0 - kappa_min) / (pi * kappa_min) * phi_min
}
