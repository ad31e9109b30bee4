//! Composite Gauss–Legendre quadrature with optional geometric grading
//! toward singular endpoints.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Clone, Debug)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Panel layout for [`Quadrature::composite`].
#[derive(Clone, Copy, Debug)]
pub struct PanelSpec {
    pub panels: usize,
    pub points_per_panel: usize,
    pub grade_lo: bool,
    pub grade_hi: bool,
    /// Number of geometric sub-panels at a graded endpoint.
    pub grading_levels: usize,
}

impl Default for PanelSpec {
    fn default() -> Self {
        Self {
            panels: 48,
            points_per_panel: 20,
            grade_lo: false,
            grade_hi: false,
            grading_levels: 12,
        }
    }
}

const GRADING_RATIO: f64 = 0.25;

impl Quadrature {
    pub fn composite(lo: f64, hi: f64, spec: PanelSpec) -> Self {
        assert!(lo < hi && spec.panels >= 1);
        let width = (hi - lo) / spec.panels as f64;
        let mut breaks: Vec<f64> = Vec::new();
        if spec.grade_lo {
            breaks.push(lo);
            for k in (1..=spec.grading_levels).rev() {
                breaks.push(lo + width * GRADING_RATIO.powi(k as i32));
            }
        }
        for i in 0..=spec.panels {
            let b = if i == spec.panels {
                hi
            } else {
                lo + width * i as f64
            };
            if breaks.last().is_none_or(|&last| b > last) {
                breaks.push(b);
            }
        }
        if spec.grade_hi {
            let last = breaks.pop().expect("at least one panel");
            let start = *breaks.last().expect("at least one panel");
            for k in 1..=spec.grading_levels {
                let b = hi - width * GRADING_RATIO.powi(k as i32);
                if b > start {
                    breaks.push(b);
                }
            }
            breaks.push(last);
        }
        let (x0, w0) = gauss_legendre(spec.points_per_panel);
        let mut nodes = Vec::with_capacity(breaks.len() * x0.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in x0.iter().zip(&w0) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Integrates pre-sampled values aligned with `self.nodes`.
    pub fn integrate_samples(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}
