//! Quadrature helpers: composite Gauss-Legendre on `[0, 1]`, Simpson weights and
//! running (cumulative) antiderivatives on uniform grids.

const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Composite 4-point Gauss-Legendre rule on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule {
    panels: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn composite(panels: usize) -> Self {
        assert!(panels > 0, "a composite rule needs at least one panel");
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(4 * panels);
        let mut weights = Vec::with_capacity(4 * panels);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
                nodes.push(mid + 0.5 * h * x);
                weights.push(0.5 * h * w);
            }
        }
        Self {
            panels,
            nodes,
            weights,
        }
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// `∫ f·g` over `[0, 1]` from samples at the nodes.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }
}

/// Running integral `F_j = ∫_{x_0}^{x_j} f` on a uniform grid of spacing `h`.
///
/// Even nodes follow composite Simpson; the first odd node uses the four-point
/// rule `h/24·(9f₀ + 19f₁ − 5f₂ + f₃)` and odd nodes continue with Simpson from
/// there, so every node is exact for cubics.
pub fn cumulative_simpson(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (f[0] + f[1]);
        return out;
    }
    out[1] = if n >= 4 {
        h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
    } else {
        h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2])
    };
    for j in 2..n {
        out[j] = out[j - 2] + h / 3.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j]);
    }
    out
}

/// Antiderivative with base point at the centre node of a symmetric uniform grid
/// (odd number of samples). Both halves are integrated outward from the centre, so
/// an even integrand yields an exactly odd antiderivative.
pub fn centred_antiderivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n % 2 == 1, "centred antiderivative needs an odd number of samples");
    let c = n / 2;
    let right = cumulative_simpson(&f[c..], h);
    let left_rev: Vec<f64> = f[..=c].iter().rev().copied().collect();
    let left = cumulative_simpson(&left_rev, h);
    let mut out = vec![0.0; n];
    for (k, v) in left.iter().enumerate() {
        out[c - k] = -v;
    }
    out[c..].copy_from_slice(&right);
    out
}

/// Composite Simpson weights for `n` uniformly spaced samples with spacing `h`.
/// An odd number of intervals closes with Simpson's 3/8 rule on the last three.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2);
    let mut w = vec![0.0; n];
    let intervals = n - 1;
    if intervals == 1 {
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
        return w;
    }
    let simpson_intervals = if intervals % 2 == 0 {
        intervals
    } else {
        intervals - 3
    };
    for k in (0..simpson_intervals).step_by(2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if simpson_intervals < intervals {
        let s = simpson_intervals;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    w
}

/// Cubic Hermite interpolant of `(x_j, f_j, f'_j)` on a uniform grid of `[x0, x1]`.
///
/// Points in the right half of the table are located from `x1`, so a table with
/// mirrored nodes and even data evaluates exactly evenly.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteTable {
    x0: f64,
    x1: f64,
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    pub fn new(x0: f64, x1: f64, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert_eq!(values.len(), slopes.len());
        assert!(values.len() >= 2 && x1 > x0);
        let h = (x1 - x0) / (values.len() - 1) as f64;
        Self {
            x0,
            x1,
            h,
            values,
            slopes,
        }
    }

    /// Value and first derivative at `x` (clamped onto the table range).
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.values.len();
        let last = (n - 1) as f64;
        let from_left = x - self.x0;
        let from_right = self.x1 - x;
        if from_left <= from_right {
            let s = (from_left / self.h).clamp(0.0, last);
            let k = (s.floor() as usize).min(n - 2);
            let (f0, f1) = (self.values[k], self.values[k + 1]);
            let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
            self.segment(s - k as f64, f0, f1, d0, d1)
        } else {
            let s = (from_right / self.h).clamp(0.0, last);
            let k = (s.floor() as usize).min(n - 2);
            let (f0, f1) = (self.values[n - 1 - k], self.values[n - 2 - k]);
            let (d0, d1) = (-self.slopes[n - 1 - k], -self.slopes[n - 2 - k]);
            let (v, d) = self.segment(s - k as f64, f0, f1, d0, d1);
            (v, -d)
        }
    }

    fn segment(&self, t: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> (f64, f64) {
        let (d0, d1) = (d0 * self.h, d1 * self.h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let value = h00 * f0 + h10 * d0 + h01 * f1 + h11 * d1;
        let dh00 = 6.0 * t2 - 6.0 * t;
        let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
        let dh01 = -6.0 * t2 + 6.0 * t;
        let dh11 = 3.0 * t2 - 2.0 * t;
        let deriv = (dh00 * f0 + dh10 * d0 + dh01 * f1 + dh11 * d1) / self.h;
        (value, deriv)
    }
}
