//! Gauss-Legendre quadrature and the collocation machinery used by the
//! Picard iteration: besides plain nodes and weights we need the "partial"
//! integrals ∫₀^{s_m} p(s) ds of the degree q-1 interpolant through the
//! nodes, which turns iterated Duhamel integrals into a dense q×q matrix
//! applied per mode.

/// Nodes and weights of the q-point Gauss-Legendre rule on [-1, 1].
/// Newton iteration on P_q with the standard three-term recurrence; accurate
/// to machine precision for the modest q used here.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..(q + 1) / 2 {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(q, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(q, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[q - 1 - i] = -x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
        let (_, d) = legendre_and_derivative(q, 0.0);
        weights[q / 2] = 2.0 / (d * d);
    }
    // Cosine guesses start near +1, so the loop above fills the upper half;
    // sort ascending for downstream code that assumes ordered nodes.
    let mut idx: Vec<usize> = (0..q).collect();
    idx.sort_by(|&a, &b| nodes[a].partial_cmp(&nodes[b]).unwrap());
    let nodes_sorted: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
    let weights_sorted: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
    (nodes_sorted, weights_sorted)
}

fn legendre_and_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=q {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Collocation rule on [0, t]: Gauss-Legendre nodes s_1 < … < s_q plus the
/// matrix S with S[m][i] = ∫₀^{s_m} L_i(s) ds, where L_i is the Lagrange
/// basis of the nodes.  Given samples f(s_i) of a smooth integrand, the
/// vector S·f approximates all partial integrals ∫₀^{s_m} f at spectral
/// accuracy.  The matrix rows are exact: each L_i has degree q-1, so an
/// auxiliary Gauss rule with ⌈q/2⌉+1 points integrates it without error.
#[derive(Clone, Debug)]
pub struct CollocationRule {
    pub t: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub partial: Vec<Vec<f64>>,
    /// Row of ∫₀^t L_i = plain Gauss weights, kept separate for the endpoint.
    pub full: Vec<f64>,
}

impl CollocationRule {
    pub fn new(q: usize, t: f64) -> CollocationRule {
        assert!(q >= 2, "collocation needs at least two nodes");
        assert!(t > 0.0 && t.is_finite());
        let (xs, ws) = gauss_legendre(q);
        // Everything is computed on the reference interval [-1, 1] and scaled
        // by t/2 at the end; Lagrange bases are affine-invariant.
        let bary = barycentric_weights(&xs);
        let aux = q / 2 + 2;
        let (axs, aws) = gauss_legendre(aux);
        let mut partial = vec![vec![0.0; q]; q];
        for (m, &xm) in xs.iter().enumerate() {
            // ∫_{-1}^{x_m} L_i via the aux rule mapped onto [-1, x_m].
            let half = (xm + 1.0) / 2.0;
            for (&ax, &aw) in axs.iter().zip(&aws) {
                let x = -1.0 + half * (ax + 1.0);
                let l = lagrange_all(&xs, &bary, x);
                for i in 0..q {
                    partial[m][i] += aw * half * l[i];
                }
            }
            for v in &mut partial[m] {
                *v *= t / 2.0;
            }
        }
        let nodes = xs.iter().map(|x| t * (x + 1.0) / 2.0).collect();
        let weights: Vec<f64> = ws.iter().map(|w| w * t / 2.0).collect();
        let full = weights.clone();
        CollocationRule { t, nodes, weights, partial, full }
    }
}

fn barycentric_weights(xs: &[f64]) -> Vec<f64> {
    let q = xs.len();
    let mut w = vec![1.0; q];
    for i in 0..q {
        for j in 0..q {
            if i != j {
                w[i] /= xs[i] - xs[j];
            }
        }
    }
    w
}

/// Values L_i(x) for all i at one point x (direct product form; q is small).
fn lagrange_all(xs: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    let q = xs.len();
    let mut prod = 1.0;
    for &xi in xs {
        prod *= x - xi;
    }
    let mut out = vec![0.0; q];
    for i in 0..q {
        let diff = x - xs[i];
        if diff.abs() < 1e-300 {
            // x coincides with a node: L_i = δ.
            for o in out.iter_mut() {
                *o = 0.0;
            }
            out[i] = 1.0;
            return out;
        }
        out[i] = prod * bary[i] / diff;
    }
    out
}
