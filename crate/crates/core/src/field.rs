//! Randomization of the Fourier data: i.i.d. standard complex Gaussians
//! g_n = (X + iY)/√2 with X, Y ~ N(0,1), so E|g_n|² = 1 and |g_n|² ~ Exp(1).
//!
//! Reproducibility contract: the Gaussian attached to lattice site n inside
//! sample `sample_index` depends only on (root_seed, sample_index, n), never
//! on enumeration order, box radius, or thread count.  Each site gets its own
//! counter-derived ChaCha8 substream, so parallel fills, resampled boxes of a
//! different radius, and re-runs with more workers all reproduce the same
//! draws bit for bit.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{
    coefficient, weighted_norm, DecayProfile, FourierState, TruncationBox, MAX_NU,
};
use crate::stats::CompensatedSum;

/// Root seed plus the index of the Monte Carlo repetition it labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub root_seed: u64,
    pub sample_index: u64,
}

impl SeedSpec {
    pub fn new(root_seed: u64, sample_index: u64) -> SeedSpec {
        SeedSpec { root_seed, sample_index }
    }

    /// Independent substream for one lattice site.  SplitMix64-style mixing
    /// of (root_seed, sample_index, coordinates) expands into a 256-bit
    /// ChaCha8 key; distinct inputs give unrelated streams under the usual
    /// PRF assumption on ChaCha.
    pub fn substream(&self, coords: &[i64]) -> ChaCha8Rng {
        let mut h = self.root_seed ^ 0x6a09_e667_f3bc_c909;
        h = mix(h, self.sample_index);
        h = mix(h, coords.len() as u64);
        for &c in coords {
            h = mix(h, c as u64);
        }
        let mut key = [0u8; 32];
        let mut state = h;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }

    /// g_n for a single site.
    pub fn gaussian(&self, coords: &[i64]) -> Complex64 {
        let mut rng = self.substream(coords);
        let x: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// One uniform angle in [0, 2π) per sample, keyed like a site draw but at
    /// a sentinel coordinate no tractable box can reach (a box touching it
    /// would hold > 2_000_000^ν sites), so it never collides with a field
    /// site.  The argument of an isotropic complex Gaussian is exactly
    /// uniform, so this inherits the substream contract for free.
    pub fn uniform_phase(&self, nu: usize) -> f64 {
        let coords = [1_000_003i64; MAX_NU];
        polar_decompose(self.gaussian(&coords[..nu])).1
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix(h: u64, w: u64) -> u64 {
    splitmix(h ^ w.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// One realization of the Gaussian weights over a box, flat lexicographic
/// order as everywhere else.
#[derive(Clone, Debug)]
pub struct GaussianField {
    pub bx: TruncationBox,
    pub draws: Vec<Complex64>,
    pub seed: SeedSpec,
}

/// Draws g_n for every site of the box.  Parallel over sites; the output is
/// an indexed map, so the result is identical for any worker count.
pub fn sample_field(seed: SeedSpec, bx: TruncationBox) -> GaussianField {
    let card = bx.cardinality();
    let draws: Vec<Complex64> = (0..card)
        .into_par_iter()
        .map(|flat| {
            let mut coords = [0i64; MAX_NU];
            let coords = &mut coords[..bx.nu()];
            bx.coords_of(flat, coords);
            seed.gaussian(coords)
        })
        .collect();
    GaussianField { bx, draws, seed }
}

/// (r, θ) with g = r e^{iθ}, r ≥ 0, θ ∈ [0, 2π); θ = 0 at the origin.
pub fn polar_decompose(g: Complex64) -> (f64, f64) {
    let r = g.norm();
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let mut theta = g.im.atan2(g.re);
    if theta < 0.0 {
        theta += 2.0 * std::f64::consts::PI;
    }
    theta += 0.0; // folds atan2's -0.0 into +0.0
    if theta >= 2.0 * std::f64::consts::PI {
        theta = 0.0; // tiny negative angles round up to exactly 2π
    }
    (r, theta)
}

/// Exceptional-set verdict at level δ for one field realization.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExceptionalReport {
    /// Some |g_n| exceeded δ^{-1/2} ⟨⟨n⟩⟩_κ inside the box.
    pub triggered: bool,
    /// Σ_{n ∉ Λ_N} exp(-δ^{-1} ⟨⟨n⟩⟩_κ²): probability that an unseen site
    /// outside the box would have triggered.  The box restriction is
    /// harmless exactly when this is negligible.
    pub neglected_tail_bound: f64,
    pub delta: f64,
}

/// Tests membership of the sample in the exceptional set
/// Ω_δ = ∪_n {|g_n| > δ^{-1/2} ⟨⟨n⟩⟩_κ}, restricted to the box the field was
/// sampled on, and quantifies what the restriction ignores.
pub fn exceptional_indicator(
    field: &GaussianField,
    profile: &DecayProfile,
    delta: f64,
) -> Result<ExceptionalReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(crate::error::Error::Domain(format!(
            "delta must lie in (0,1], got {delta}"
        )));
    }
    let bx = field.bx;
    let inv_sqrt_delta = delta.powf(-0.5);
    // ⟨⟨n⟩⟩_κ = Π (1+|n_i|)^{+κ_i} is the growing weight, hence the negated
    // exponents in the product form.
    let grow: Vec<f64> = profile.kappa().iter().map(|k| -k).collect();
    let mut coords = [0i64; MAX_NU];
    let coords = &mut coords[..bx.nu()];
    let mut triggered = false;
    for (flat, g) in field.draws.iter().enumerate() {
        bx.coords_of(flat, coords);
        let threshold = inv_sqrt_delta * weighted_norm(coords, &grow);
        if g.norm() > threshold {
            triggered = true;
            break;
        }
    }
    Ok(ExceptionalReport {
        triggered,
        neglected_tail_bound: exceptional_tail_bound(profile, bx.radius(), delta),
        delta,
    })
}

/// Σ over the box complement of exp(-δ^{-1} ⟨⟨n⟩⟩_κ²), bounded shell by
/// shell through the smallest growth exponent.  P(|g| > u) = exp(-u²) for a
/// standard complex Gaussian, so this dominates the neglected probability.
fn exceptional_tail_bound(profile: &DecayProfile, radius: i64, delta: f64) -> f64 {
    let nu = profile.dim() as i32;
    let kappa_min = profile.kappa().iter().fold(f64::INFINITY, |m, &k| m.min(k));
    let mut acc = CompensatedSum::default();
    for m in (radius + 1)..(radius + 4000) {
        let shell = (2 * m + 1).pow(nu as u32) as f64 - (2 * m - 1).pow(nu as u32) as f64;
        let weight_sq = (1.0 + m as f64).powf(2.0 * kappa_min);
        let term = shell * (-weight_sq / delta).exp();
        acc.add(term);
        if term < 1e-300 && m > radius + 4 {
            break;
        }
    }
    acc.value()
}

/// Random truncated profile at time zero: amplitudes c(n) g_n with the
/// deterministic decay c(n) = a₀ ⟨⟨n⟩⟩_{-ρ}.
pub fn make_initial_state(
    field: &GaussianField,
    profile: &DecayProfile,
    epsilon: f64,
) -> Result<FourierState> {
    let bx = field.bx;
    let mut coords = [0i64; MAX_NU];
    let coords = &mut coords[..bx.nu()];
    let mut amps = Vec::with_capacity(bx.cardinality());
    for (flat, &g) in field.draws.iter().enumerate() {
        bx.coords_of(flat, coords);
        amps.push(g * coefficient(profile, coords));
    }
    FourierState::new(bx, amps, 0.0, epsilon)
}
