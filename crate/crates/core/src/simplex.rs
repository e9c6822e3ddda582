//! Dense two-phase bounded-variable simplex with Bland's rule.
//!
//! Solves `min c·x  s.t.  A x = b,  0 <= x <= u` (`u` may be infinite). Meant
//! for the handful of rows the finite reject-option LPs need; everything is
//! kept in one dense tableau.

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;
const FEAS_EPS: f64 = 1e-9;
const MAX_ITERS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals `y` with reduced costs `c_j - y·A_j`.
    pub duals: Vec<f64>,
    /// Basic variable per row; indices `>= n` are artificials.
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Lower,
    Upper,
    Basic,
}

struct Tableau {
    n: usize,
    m: usize,
    /// Sign-adjusted original columns (structurals then artificials).
    a0: Vec<Vec<f64>>,
    /// `B^{-1} a0`.
    t: Vec<Vec<f64>>,
    xb: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<Bound>,
    upper: Vec<f64>,
    sign: Vec<f64>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.cost.len();
        let m = lp.rows.len();
        let sign: Vec<f64> = lp.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let a0: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut row: Vec<f64> = lp.rows[i].iter().map(|v| sign[i] * v).collect();
                row.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
                row
            })
            .collect();
        let mut upper = lp.upper.clone();
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut state = vec![Bound::Lower; n + m];
        for s in &mut state[n..] {
            *s = Bound::Basic;
        }
        Self {
            n,
            m,
            t: a0.clone(),
            a0,
            xb: lp.rhs.iter().zip(&sign).map(|(b, s)| b * s).collect(),
            basis: (n..n + m).collect(),
            state,
            upper,
            sign,
        }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|k| (0..self.m).map(|i| cost[self.basis[i]] * self.t[i][self.n + k]).sum())
            .collect()
    }

    fn reduced_cost(&self, cost: &[f64], y: &[f64], j: usize) -> f64 {
        cost[j] - (0..self.m).map(|k| y[k] * self.a0[k][j]).sum::<f64>()
    }

    fn run(&mut self, cost: &[f64], allowed: impl Fn(usize) -> bool) -> Outcome {
        for _ in 0..MAX_ITERS {
            let y = self.duals(cost);
            let entering = (0..self.n + self.m).find(|&j| {
                if !allowed(j) {
                    return false;
                }
                match self.state[j] {
                    Bound::Basic => false,
                    Bound::Lower => self.upper[j] > 0.0 && self.reduced_cost(cost, &y, j) < -COST_EPS,
                    Bound::Upper => self.reduced_cost(cost, &y, j) > COST_EPS,
                }
            });
            let Some(j) = entering else {
                return Outcome::Optimal;
            };
            let dir = if self.state[j] == Bound::Lower { 1.0 } else { -1.0 };

            // (step, leaving row or None for a bound flip, tie-break index)
            let mut best: (f64, Option<usize>, usize) = (self.upper[j], None, j);
            for i in 0..self.m {
                let delta = -dir * self.t[i][j];
                let b = self.basis[i];
                let limit = if delta < -PIVOT_EPS {
                    self.xb[i].max(0.0) / -delta
                } else if delta > PIVOT_EPS && self.upper[b].is_finite() {
                    (self.upper[b] - self.xb[i]).max(0.0) / delta
                } else {
                    continue;
                };
                if limit < best.0 || (limit == best.0 && b < best.2) {
                    best = (limit, Some(i), b);
                }
            }
            let (theta, leave, _) = best;
            if theta.is_infinite() {
                return Outcome::Unbounded;
            }
            for i in 0..self.m {
                self.xb[i] -= dir * theta * self.t[i][j];
            }
            match leave {
                None => {
                    self.state[j] = if dir > 0.0 { Bound::Upper } else { Bound::Lower };
                }
                Some(r) => {
                    let b = self.basis[r];
                    let at_upper = self.upper[b].is_finite() && -dir * self.t[r][j] > 0.0;
                    self.state[b] = if at_upper { Bound::Upper } else { Bound::Lower };
                    self.xb[r] = if dir > 0.0 { theta } else { self.upper[j] - theta };
                    self.state[j] = Bound::Basic;
                    self.basis[r] = j;
                    self.pivot(r, j);
                }
            }
        }
        panic!("simplex exceeded {MAX_ITERS} iterations");
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j];
        for v in &mut self.t[r] {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i][j];
            if f != 0.0 {
                for (v, pv) in self.t[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.t[i][j] = 0.0;
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.n + self.m)
            .map(|j| match self.state[j] {
                Bound::Upper => self.upper[j],
                _ => 0.0,
            })
            .collect();
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.xb[i];
        }
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(0.0, self.upper[j]);
        }
        x
    }
}

pub fn solve(lp: &LinearProgram) -> Solution {
    let n = lp.cost.len();
    let m = lp.rows.len();
    assert!(lp.upper.len() == n && lp.rhs.len() == m && lp.rows.iter().all(|r| r.len() == n));
    let mut tab = Tableau::new(lp);

    let phase1: Vec<f64> = (0..n + m).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    tab.run(&phase1, |_| true);
    let infeasibility: f64 = tab.values()[n..].iter().sum();
    let scale = 1.0 + lp.rhs.iter().map(|b| b.abs()).fold(0.0, f64::max);
    if infeasibility > FEAS_EPS * scale {
        return Solution {
            status: Status::Infeasible,
            x: vec![0.0; n],
            objective: f64::NAN,
            duals: vec![0.0; m],
            basis: tab.basis.clone(),
        };
    }

    // Artificials are pinned to zero; basic ones leave on the first pivot that
    // would move them.
    for j in n..n + m {
        tab.upper[j] = 0.0;
    }
    let mut phase2 = lp.cost.clone();
    phase2.extend(std::iter::repeat_n(0.0, m));
    let outcome = tab.run(&phase2, |j| j < n);
    let x: Vec<f64> = tab.values()[..n].to_vec();
    let y = tab.duals(&phase2);
    Solution {
        status: match outcome {
            Outcome::Optimal => Status::Optimal,
            Outcome::Unbounded => Status::Unbounded,
        },
        objective: lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum(),
        x,
        duals: y.iter().zip(&tab.sign).map(|(v, s)| v * s).collect(),
        basis: tab.basis.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_bounded_lp() {
        // min -x - 2y  s.t.  x + y + s = 1.5, 0 <= x, y <= 1
        let lp = LinearProgram {
            cost: vec![-1.0, -2.0, 0.0],
            rows: vec![vec![1.0, 1.0, 1.0]],
            rhs: vec![1.5],
            upper: vec![1.0, 1.0, f64::INFINITY],
        };
        let s = solve(&lp);
        assert_eq!(s.status, Status::Optimal);
        assert_abs_diff_eq!(s.objective, -2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.duals[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let lp = LinearProgram {
            cost: vec![1.0, 1.0],
            rows: vec![vec![1.0, 1.0]],
            rhs: vec![3.0],
            upper: vec![1.0, 1.0],
        };
        assert_eq!(solve(&lp).status, Status::Infeasible);
    }

    #[test]
    fn negative_rhs_and_equalities() {
        // min x + y  s.t.  -x + y = -0.5,  x + y = 1
        let lp = LinearProgram {
            cost: vec![1.0, 1.0],
            rows: vec![vec![-1.0, 1.0], vec![1.0, 1.0]],
            rhs: vec![-0.5, 1.0],
            upper: vec![1.0, 1.0],
        };
        let s = solve(&lp);
        assert_eq!(s.status, Status::Optimal);
        assert_abs_diff_eq!(s.x[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn detects_unbounded() {
        let lp = LinearProgram {
            cost: vec![-1.0, 0.0],
            rows: vec![vec![1.0, -1.0]],
            rhs: vec![0.0],
            upper: vec![f64::INFINITY, f64::INFINITY],
        };
        assert_eq!(solve(&lp).status, Status::Unbounded);
    }
}
