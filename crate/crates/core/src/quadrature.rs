//! Gauss-Legendre quadrature on finite intervals.
//!
//! Nodes are found by Newton iteration on `P_n` starting from the
//! Tricomi approximation; weights follow from `P_n'` at the nodes.

use std::f64::consts::PI;

/// A Gauss-Legendre rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = if n == 0 {
        0.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p, d)
}

/// Composite rule: `[a, b]` is split into equal panels, each integrated with `rule`.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    rule: GaussLegendre,
    max_panel_width: f64,
}

impl CompositeRule {
    pub fn new(nodes_per_panel: usize, max_panel_width: f64) -> Self {
        Self {
            rule: GaussLegendre::new(nodes_per_panel),
            max_panel_width,
        }
    }

    pub fn panels(&self, a: f64, b: f64) -> usize {
        (((b - a).abs() / self.max_panel_width).ceil() as usize).max(1)
    }

    /// All `(x, w)` pairs of the composite rule on `[a, b]`.
    pub fn points(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let m = self.panels(a, b);
        let h = (b - a) / m as f64;
        let mut out = Vec::with_capacity(m * self.rule.len());
        for j in 0..m {
            let lo = a + j as f64 * h;
            out.extend(self.rule.mapped(lo, lo + h));
        }
        out
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.points(a, b).into_iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// The angular rule used by every sector and full-sphere integral:
/// 64 nodes per panel, panels no wider than pi/8.
pub fn angular_rule() -> CompositeRule {
    CompositeRule::new(64, PI / 8.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(10);
        // degree 19 is exact for 10 nodes
        let v = rule.integrate(-1.0, 1.0, |x| x.powi(18));
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
        let v = rule.integrate(0.0, 2.0, |x| x.powi(3));
        assert!((v - 4.0).abs() < 1e-13);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 7, 64, 128] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.mapped(0.0, PI).map(|(_, w)| w).sum();
            assert!((s - PI).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn composite_trig_integral() {
        let rule = angular_rule();
        let v = rule.integrate(0.0, PI, |t| (31.0 * t).sin().powi(2) * t.sin());
        // int_0^pi sin^2(31 t) sin t dt = 2 - 2/(1 - 4*31^2) * ... computed via identity
        let m = 62.0_f64;
        let exact = 1.0 - 0.5 * (2.0 / (1.0 - m * m));
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }
}
