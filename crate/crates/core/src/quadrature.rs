//! Composite Gauss-Legendre quadrature, including integrals restricted to an
//! acceptance region `{x : s(x) <= λ}`.

/// Points per panel.
pub const ORDER: usize = 8;

#[derive(Debug, Clone)]
pub struct Quadrature {
    lo: f64,
    hi: f64,
    panels: usize,
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

impl Default for Quadrature {
    /// `[-12, 14]` with 4096 panels.
    fn default() -> Self {
        Self::new(-12.0, 14.0, 4096)
    }
}

impl Quadrature {
    pub fn new(lo: f64, hi: f64, panels: usize) -> Self {
        assert!(lo < hi && panels > 0);
        let (nodes, weights) = gauss_legendre();
        Self {
            lo,
            hi,
            panels,
            nodes,
            weights,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn panel(&self, k: usize) -> (f64, f64) {
        let h = (self.hi - self.lo) / self.panels as f64;
        let a = self.lo + h * k as f64;
        let b = if k + 1 == self.panels { self.hi } else { a + h };
        (a, b)
    }

    fn on_segment<const N: usize>(&self, a: f64, b: f64, f: &impl Fn(f64) -> [f64; N]) -> [f64; N] {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = [0.0; N];
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * t);
            for (s, vi) in acc.iter_mut().zip(v) {
                *s += w * vi;
            }
        }
        acc.map(|s| s * half)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let f = |x| [f(x)];
        (0..self.panels)
            .map(|k| {
                let (a, b) = self.panel(k);
                self.on_segment(a, b, &f)[0]
            })
            .sum()
    }

    /// Every quadrature node, in increasing order.
    pub fn abscissae(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.panels).flat_map(move |k| {
            let (a, b) = self.panel(k);
            self.nodes.iter().map(move |t| 0.5 * (a + b) + 0.5 * (b - a) * t)
        })
    }
}

/// Nodes and weights of the `ORDER`-point rule on `[-1, 1]`, by Newton
/// iteration on the Legendre polynomial.
fn gauss_legendre() -> ([f64; ORDER], [f64; ORDER]) {
    let n = ORDER;
    let mut nodes = [0.0; ORDER];
    let mut weights = [0.0; ORDER];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            deriv = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / deriv;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * deriv * deriv);
    }
    (nodes, weights)
}

const ROOT_ITERS: usize = 64;

/// Integrals of a vector integrand over `{x : s(x) <= λ}` for many `λ`.
///
/// Score samples are taken once per panel (endpoints plus nodes). For a given
/// `λ`, panels whose samples all sit on one side are served from cached
/// full-panel sums; mixed panels are split at the crossings, found by
/// bisection, so the result is continuous in `λ`.
pub struct RegionIntegrator<'q, S, F, const N: usize> {
    quad: &'q Quadrature,
    score: S,
    integrand: F,
    /// `ORDER + 2` sample points and scores per panel.
    samples: Vec<(f64, f64)>,
    panel_sums: Vec<[f64; N]>,
}

impl<'q, S, F, const N: usize> RegionIntegrator<'q, S, F, N>
where
    S: Fn(f64) -> f64,
    F: Fn(f64) -> [f64; N],
{
    pub fn new(quad: &'q Quadrature, score: S, integrand: F) -> Self {
        let mut samples = Vec::with_capacity(quad.panels * (ORDER + 2));
        let mut panel_sums = Vec::with_capacity(quad.panels);
        for k in 0..quad.panels {
            let (a, b) = quad.panel(k);
            samples.push((a, score(a)));
            for t in &quad.nodes {
                let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
                samples.push((x, score(x)));
            }
            samples.push((b, score(b)));
            panel_sums.push(quad.on_segment(a, b, &integrand));
        }
        Self {
            quad,
            score,
            integrand,
            samples,
            panel_sums,
        }
    }

    /// Smallest and largest finite score seen on the sample grid.
    pub fn score_range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .map(|&(_, s)| s)
            .filter(|s| s.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
    }

    /// `∫ f(x) c(x) dx` with `c = 1` where `s < λ`, `boundary_accept` where
    /// `s = λ` and `0` elsewhere.
    pub fn accepted(&self, lambda: f64, boundary_accept: f64) -> [f64; N] {
        let mut total = [0.0; N];
        let stride = ORDER + 2;
        let mut add = |v: [f64; N], weight: f64| {
            for (t, vi) in total.iter_mut().zip(v) {
                *t += weight * vi;
            }
        };
        for (k, pts) in self.samples.chunks_exact(stride).enumerate() {
            let first = pts[0].1 <= lambda;
            if pts.iter().all(|&(_, s)| (s <= lambda) == first) {
                let all_equal = pts.iter().all(|&(_, s)| s == lambda);
                if all_equal {
                    add(self.panel_sums[k], boundary_accept);
                } else if first {
                    // A panel can be accepted yet touch λ on a measure-zero set;
                    // the cached sum is exact for that case.
                    add(self.panel_sums[k], 1.0);
                }
                continue;
            }
            let mut cuts = vec![pts[0].0];
            for w in pts.windows(2) {
                let (x0, s0) = w[0];
                let (x1, s1) = w[1];
                if (s0 <= lambda) != (s1 <= lambda) {
                    cuts.push(self.crossing(x0, x1, s0 <= lambda, lambda));
                }
            }
            cuts.push(pts[stride - 1].0);
            for seg in cuts.windows(2) {
                let (a, b) = (seg[0], seg[1]);
                if b <= a {
                    continue;
                }
                let s_mid = (self.score)(0.5 * (a + b));
                let weight = if s_mid < lambda {
                    1.0
                } else if s_mid == lambda {
                    boundary_accept
                } else {
                    0.0
                };
                if weight > 0.0 {
                    add(self.quad.on_segment(a, b, &self.integrand), weight);
                }
            }
        }
        total
    }

    fn crossing(&self, mut a: f64, mut b: f64, accepted_at_a: bool, lambda: f64) -> f64 {
        for _ in 0..ROOT_ITERS {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if ((self.score)(m) <= lambda) == accepted_at_a {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}
