//! Frequency lattice for spatially quasi-periodic profiles.
//!
//! A profile on ℝ^d is written as a Fourier series over the lattice ℤ^ν,
//! ν ≥ d, through a block-diagonal frequency matrix Ω: coordinate block j of
//! the multi-index n pairs with the frequency vector ω_j ∈ ℝ^{ν_j}.  The
//! dispersion relation of the linear Schrödinger flow restricted to this
//! lattice is
//!
//!   Q(n) = Σ_j ⟨n_j, ω_j⟩²,
//!
//! and mode amplitudes decay like the anisotropic weight
//!
//!   ⟨⟨n⟩⟩_{-e} = Π_i (1 + |n_i|)^{-e_i}.
//!
//! Everything downstream (sampling, spectral solver, tail estimates) works on
//! the finite box Λ_N = {n : |n_i| ≤ N} in lexicographic order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

/// Largest supported lattice dimension; boxes are enumerated with fixed-size
/// coordinate buffers of this length.
pub const MAX_NU: usize = 8;

/// Exhaustive small-integer search bound for the rational-independence check.
const INDEPENDENCE_SEARCH_BOUND: i64 = 8;
/// Any |⟨n_j, ω_j⟩| at or below this, for n_j ≠ 0 in the search box, rejects
/// the frequency vector as (numerically) rationally dependent.
const INDEPENDENCE_TOL: f64 = 1e-9;

/// Dense multi-index n ∈ ℤ^ν.  Block structure is imposed externally by the
/// [`FrequencyMatrix`] that consumes it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<i64>);

impl MultiIndex {
    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

/// Block-diagonal frequency matrix: one frequency vector ω_j per spatial
/// dimension, block j acting on ν_j consecutive lattice coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrequencyMatrix {
    blocks: Vec<Vec<f64>>,
}

impl FrequencyMatrix {
    /// Validates shape and rational independence of every block.  The
    /// independence test is necessarily finite: it requires
    /// |⟨n_j, ω_j⟩| > 1e-9 for all 0 < |n_j|_∞ ≤ 8, which is what the rest of
    /// the toolkit relies on (no exact resonances among low modes).
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Domain("frequency matrix needs at least one block".into()));
        }
        let nu: usize = blocks.iter().map(|b| b.len()).sum();
        if nu == 0 || nu > MAX_NU {
            return Err(Error::Domain(format!(
                "total lattice dimension must be in 1..={MAX_NU}, got {nu}"
            )));
        }
        for (j, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::Domain(format!("frequency block {j} is empty")));
            }
            if block.iter().any(|w| !w.is_finite()) {
                return Err(Error::Domain(format!("frequency block {j} has non-finite entries")));
            }
            check_rational_independence(j, block)?;
        }
        Ok(FrequencyMatrix { blocks })
    }

    /// Number of spatial dimensions d.
    pub fn spatial_dim(&self) -> usize {
        self.blocks.len()
    }

    /// Total lattice dimension ν = Σ_j ν_j.
    pub fn lattice_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    /// Dispersion Q(n) = Σ_j ⟨n_j, ω_j⟩².  Even in n and nonnegative.
    pub fn dispersion(&self, coords: &[i64]) -> f64 {
        assert_eq!(coords.len(), self.lattice_dim(), "index dimension mismatch");
        let mut q = 0.0;
        let mut offset = 0;
        for block in &self.blocks {
            let mut dot = 0.0;
            for (w, &c) in block.iter().zip(&coords[offset..offset + block.len()]) {
                dot += w * c as f64;
            }
            q += dot * dot;
            offset += block.len();
        }
        q
    }
}

fn check_rational_independence(block_idx: usize, omega: &[f64]) -> Result<()> {
    let dim = omega.len();
    if dim == 1 {
        if omega[0].abs() <= INDEPENDENCE_TOL {
            return Err(Error::Domain(format!(
                "frequency block {block_idx} is numerically zero"
            )));
        }
        return Ok(());
    }
    // Odometer over {-B..B}^dim, skipping the origin.
    let b = INDEPENDENCE_SEARCH_BOUND;
    let mut n = vec![-b; dim];
    loop {
        if n.iter().any(|&c| c != 0) {
            let dot: f64 = omega.iter().zip(&n).map(|(w, &c)| w * c as f64).sum();
            if dot.abs() <= INDEPENDENCE_TOL {
                return Err(Error::Domain(format!(
                    "frequency block {block_idx} fails rational independence at n = {n:?}"
                )));
            }
        }
        let mut axis = dim;
        loop {
            if axis == 0 {
                return Ok(());
            }
            axis -= 1;
            if n[axis] < b {
                n[axis] += 1;
                break;
            }
            n[axis] = -b;
        }
    }
}

/// Product weight ⟨⟨n⟩⟩_{-e} = Π_i (1 + |n_i|)^{-e_i}.
pub fn weighted_norm(coords: &[i64], exponents: &[f64]) -> f64 {
    assert_eq!(coords.len(), exponents.len(), "exponent dimension mismatch");
    let mut w = 1.0;
    for (&c, &e) in coords.iter().zip(exponents) {
        w *= (1.0 + c.unsigned_abs() as f64).powf(-e);
    }
    w
}

/// Per-coordinate decay data for the random initial profile.  Mode n carries
/// the deterministic amplitude c(n) = a₀ ⟨⟨n⟩⟩_{-ρ} (realized with equality,
/// not just as an upper bound) and the exceptional-set machinery gives back
/// κ of the decay, so every ρ_i - κ_i matters downstream.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayProfile {
    rho: Vec<f64>,
    kappa: Vec<f64>,
    amplitude: f64,
}

impl DecayProfile {
    pub fn new(rho: Vec<f64>, kappa: Vec<f64>, amplitude: f64) -> Result<Self> {
        if rho.is_empty() || rho.len() != kappa.len() {
            return Err(Error::Domain(
                "decay exponents rho and kappa must be non-empty and of equal length".into(),
            ));
        }
        if rho.iter().any(|r| !r.is_finite() || *r <= 0.5) {
            return Err(Error::Domain(
                "each rho_i must exceed 1/2 so that sum of squared amplitudes converges".into(),
            ));
        }
        if kappa.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(Error::Domain("each kappa_i must be nonnegative".into()));
        }
        if !amplitude.is_finite() || amplitude <= 0.0 {
            return Err(Error::Domain("amplitude must be positive".into()));
        }
        Ok(DecayProfile { rho, kappa, amplitude })
    }

    pub fn dim(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn rho_minus_kappa(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.kappa).map(|(r, k)| r - k).collect()
    }

    pub fn min_rho_minus_kappa(&self) -> f64 {
        self.rho
            .iter()
            .zip(&self.kappa)
            .map(|(r, k)| r - k)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Deterministic mode amplitude c(n) = a₀ ⟨⟨n⟩⟩_{-ρ}.
pub fn coefficient(profile: &DecayProfile, coords: &[i64]) -> f64 {
    profile.amplitude * weighted_norm(coords, profile.rho())
}

/// Spectral truncation radius N(ε) = max(1, ⌊ε^{μ - 1/ν}⌋).
///
/// The exponent is negative for admissible μ, so N grows as ε shrinks; μ
/// trades box size (cost) against the remainder exponent of the tail outside
/// the box.
pub fn truncation_parameter(epsilon: f64, mu: f64, nu: usize) -> Result<i64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    if nu == 0 {
        return Err(Error::Domain("lattice dimension must be positive".into()));
    }
    let inv_nu = 1.0 / nu as f64;
    if !(mu > 0.0 && mu < inv_nu) {
        return Err(Error::Domain(format!(
            "mu must lie in (0, 1/nu) = (0, {inv_nu}), got {mu}"
        )));
    }
    let raw = epsilon.powf(mu - inv_nu);
    if !raw.is_finite() {
        return Err(Error::Numerics("truncation parameter overflowed".into()));
    }
    Ok((raw.floor() as i64).max(1))
}

/// One-sided sum Σ_{m≥1} (1+m)^{-s} for s > 1.
///
/// Head is summed directly until the integral remainder bound
/// (1+M)^{1-s}/(s-1) drops below `tail_tol` (or M hits a cap for s near 1),
/// then an Euler-Maclaurin tail estimate is added, which leaves a residual
/// far below the quoted bound.
pub fn one_sided_power_sum(s: f64, tail_tol: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::Domain(format!("power sum needs s > 1, got {s}")));
    }
    const HARD_CAP: u64 = 2_000_000;
    let mut head = CompensatedSum::default();
    let mut m = 0u64;
    loop {
        m += 1;
        head.add((1.0 + m as f64).powf(-s));
        let remainder_bound = (1.0 + m as f64).powf(1.0 - s) / (s - 1.0);
        if (remainder_bound <= tail_tol && m >= 64) || m >= HARD_CAP {
            break;
        }
    }
    // Euler-Maclaurin tail for f(x) = (1+x)^{-s} starting at a = m + 1:
    // Σ_{k≥a} f(k) ≈ ∫_a^∞ f + f(a)/2 - f'(a)/12.
    let a = 1.0 + (m + 1) as f64;
    let tail = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s) - (s / 12.0) * a.powf(-s - 1.0);
    Ok(head.value() + tail)
}

/// Full-lattice 1-D sum Σ_{m∈ℤ} (1+|m|)^{-s} = 2 ζ(s) - 1.
pub fn symmetric_power_sum(s: f64, tail_tol: f64) -> Result<f64> {
    Ok(1.0 + 2.0 * one_sided_power_sum(s, tail_tol)?)
}

const SUM_TAIL_TOL: f64 = 1e-12;

/// Total squared amplitude over the whole lattice,
/// Σ_n |c(n)|² = a₀² Π_i Σ_{m∈ℤ} (1+|m|)^{-2ρ_i}.
///
/// This is the variance parameter 2σ² of the linear field and the
/// denominator of the large-deviations rate.
pub fn sum_sq_coefficients(profile: &DecayProfile) -> Result<f64> {
    let mut prod = profile.amplitude * profile.amplitude;
    for &r in profile.rho() {
        prod *= symmetric_power_sum(2.0 * r, SUM_TAIL_TOL)?;
    }
    Ok(prod)
}

/// Σ_n |c(n)|, finite iff every ρ_i > 1.
pub fn sum_abs_coefficients(profile: &DecayProfile) -> Result<f64> {
    let mut prod = profile.amplitude;
    for &r in profile.rho() {
        prod *= symmetric_power_sum(r, SUM_TAIL_TOL)?;
    }
    Ok(prod)
}

/// Σ_{n ∈ Λ_N} |c(n)|^p for p ∈ {1, 2} via the exact product of box-restricted
/// 1-D sums.
pub fn box_coefficient_sum(profile: &DecayProfile, radius: i64, squared: bool) -> f64 {
    let p = if squared { 2.0 } else { 1.0 };
    let mut prod = profile.amplitude.powf(p);
    for &r in profile.rho() {
        let s = p * r;
        let mut one_d = CompensatedSum::default();
        one_d.add(1.0);
        for m in 1..=radius {
            one_d.add(2.0 * (1.0 + m as f64).powf(-s));
        }
        prod *= one_d.value();
    }
    prod
}

/// Σ_{n ∉ Λ_N} |c(n)| as an exact difference of products of 1-D sums.
pub fn tail_abs_coefficients(profile: &DecayProfile, radius: i64) -> Result<f64> {
    let full = sum_abs_coefficients(profile)?;
    Ok((full - box_coefficient_sum(profile, radius, false)).max(0.0))
}

/// Cube Λ_N = {n ∈ ℤ^ν : |n_i| ≤ N}, enumerated lexicographically with the
/// first coordinate slowest.  All flat storage in the crate follows this
/// order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationBox {
    nu: usize,
    radius: i64,
}

impl TruncationBox {
    pub fn new(nu: usize, radius: i64) -> Result<Self> {
        if nu == 0 || nu > MAX_NU {
            return Err(Error::Domain(format!("box dimension must be in 1..={MAX_NU}, got {nu}")));
        }
        if radius < 0 {
            return Err(Error::Domain(format!("box radius must be nonnegative, got {radius}")));
        }
        let side = 2 * radius as u128 + 1;
        let cells = side.checked_pow(nu as u32).filter(|&c| c <= usize::MAX as u128);
        if cells.is_none() {
            return Err(Error::Domain(format!("box (2*{radius}+1)^{nu} does not fit in memory")));
        }
        Ok(TruncationBox { nu, radius })
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn side(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    /// |Λ_N| = (2N+1)^ν.
    pub fn cardinality(&self) -> usize {
        self.side().pow(self.nu as u32)
    }

    pub fn contains(&self, coords: &[i64]) -> bool {
        coords.len() == self.nu && coords.iter().all(|c| c.abs() <= self.radius)
    }

    /// Writes the coordinates of the `flat`-th index (lexicographic order)
    /// into `out`.
    pub fn coords_of(&self, flat: usize, out: &mut [i64]) {
        debug_assert!(flat < self.cardinality());
        debug_assert_eq!(out.len(), self.nu);
        let side = self.side();
        let mut rem = flat;
        for axis in (0..self.nu).rev() {
            out[axis] = (rem % side) as i64 - self.radius;
            rem /= side;
        }
    }

    /// Flat position of `coords`, or None if outside the box.
    pub fn flat_of(&self, coords: &[i64]) -> Option<usize> {
        if !self.contains(coords) {
            return None;
        }
        let side = self.side();
        let mut flat = 0usize;
        for &c in coords {
            flat = flat * side + (c + self.radius) as usize;
        }
        Some(flat)
    }

    pub fn iter(&self) -> BoxIter {
        BoxIter { bx: *self, next: 0, total: self.cardinality() }
    }

    /// Q(n) for every index in flat order.
    pub fn dispersion_table(&self, omega: &FrequencyMatrix) -> Vec<f64> {
        let mut buf = vec![0i64; self.nu];
        (0..self.cardinality())
            .map(|flat| {
                self.coords_of(flat, &mut buf);
                omega.dispersion(&buf)
            })
            .collect()
    }

    /// c(n) for every index in flat order.
    pub fn coefficient_table(&self, profile: &DecayProfile) -> Vec<f64> {
        let mut buf = vec![0i64; self.nu];
        (0..self.cardinality())
            .map(|flat| {
                self.coords_of(flat, &mut buf);
                coefficient(profile, &buf)
            })
            .collect()
    }
}

pub struct BoxIter {
    bx: TruncationBox,
    next: usize,
    total: usize,
}

impl Iterator for BoxIter {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        if self.next >= self.total {
            return None;
        }
        let mut coords = vec![0i64; self.bx.nu()];
        self.bx.coords_of(self.next, &mut coords);
        self.next += 1;
        Some(MultiIndex(coords))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.total - self.next;
        (left, Some(left))
    }
}

/// Truncated Fourier coefficient vector of a field at a fixed time, stored in
/// the lexicographic flat order of its box.
#[derive(Clone, Debug)]
pub struct FourierState {
    pub bx: TruncationBox,
    pub amps: Vec<Complex64>,
    pub time: f64,
    pub epsilon: f64,
}

impl FourierState {
    pub fn new(bx: TruncationBox, amps: Vec<Complex64>, time: f64, epsilon: f64) -> Result<Self> {
        if amps.len() != bx.cardinality() {
            return Err(Error::Domain(format!(
                "amplitude vector has {} entries, box holds {}",
                amps.len(),
                bx.cardinality()
            )));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Domain(format!("epsilon must lie in (0,1), got {epsilon}")));
        }
        if !time.is_finite() || amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Numerics("non-finite state".into()));
        }
        Ok(FourierState { bx, amps, time, epsilon })
    }

    /// Σ_n |c(n)|², the conserved mass of the cubic flow.
    pub fn mass(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for a in &self.amps {
            acc.add(a.norm_sqr());
        }
        acc.value()
    }

    /// Σ_n |c(n)|, a rigorous upper bound for the sup of the field.
    pub fn l1_norm(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for a in &self.amps {
            acc.add(a.norm());
        }
        acc.value()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}
