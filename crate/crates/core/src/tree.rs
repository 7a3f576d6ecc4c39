//! Ternary interaction trees for the Picard expansion of the cubic flow.
//!
//! A branch of depth k is either the trivial symbol `Leaf`, the single cubic
//! application `Cubic` (only legal at depth 1), or a `Node` with three
//! children of depth k-1.  The level sets Γ^(k) satisfy
//!
//!   Γ^(1) = {Leaf, Cubic},   Γ^(k) = {Leaf} ∪ (Γ^(k-1))³,
//!
//! so |Γ^(1)| = 2, |Γ^(2)| = 9, |Γ^(3)| = 730 and |Γ^(4)| = 730³ + 1, which
//! is why enumeration is streaming and full materialization stops at k = 3.
//!
//! Three statistics drive all estimates: the homogeneity order σ (half
//! integers), the cubic count ℓ, and the combinatorial denominator 𝔇 from
//! the nested time integrals.  The majorant series M_k(z) = Σ_γ z^ℓ/𝔇 obeys
//! M_k = 1 + ∫₀^z M_{k-1}(w)³ dw and is dominated by the fixed point
//! (1-2z)^{-1/2}; evaluating at z = 4/27 gives the constant behind the
//! nonlinear time horizon T_ε.

use num_bigint::BigUint;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::DecayProfile;
use crate::stats::CompensatedSum;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Leaf,
    Cubic,
    Node(Box<[Branch; 3]>),
}

impl Branch {
    pub fn node(a: Branch, b: Branch, c: Branch) -> Branch {
        Branch::Node(Box::new([a, b, c]))
    }

    /// Depth-validity: `Cubic` lives only at depth 1, `Node` children must be
    /// valid one level down, `Leaf` is valid anywhere.
    pub fn valid_at(&self, k: usize) -> bool {
        match self {
            Branch::Leaf => k >= 1,
            Branch::Cubic => k == 1,
            Branch::Node(children) => k >= 2 && children.iter().all(|c| c.valid_at(k - 1)),
        }
    }
}

/// Homogeneity order: σ(Leaf) = 1/2, σ(Cubic) = 3/2, Node sums its children.
pub fn sigma(branch: &Branch) -> f64 {
    match branch {
        Branch::Leaf => 0.5,
        Branch::Cubic => 1.5,
        Branch::Node(children) => children.iter().map(sigma).sum(),
    }
}

/// Number of cubic applications: ℓ(Leaf) = 0, ℓ(Cubic) = 1, a Node adds one
/// on top of its children.
pub fn ell(branch: &Branch) -> u64 {
    match branch {
        Branch::Leaf => 0,
        Branch::Cubic => 1,
        Branch::Node(children) => 1 + children.iter().map(ell).sum::<u64>(),
    }
}

/// Dimension of the monomial space attached to a branch, via its own
/// recursion (Leaf ↦ 1, Cubic ↦ 3, Node sums) so that the identity
/// dim = 2σ is a real cross-check and not a restatement.
pub fn dimension(branch: &Branch) -> u64 {
    match branch {
        Branch::Leaf => 1,
        Branch::Cubic => 3,
        Branch::Node(children) => children.iter().map(dimension).sum(),
    }
}

/// Iterated-integral denominator: 𝔇(Leaf) = 𝔇(Cubic) = 1 and
/// 𝔇(Node) = ℓ(Node) · Π 𝔇(children).  Grows combinatorially, hence exact
/// big-integer arithmetic.
pub fn denom(branch: &Branch) -> BigUint {
    match branch {
        Branch::Leaf | Branch::Cubic => BigUint::from(1u32),
        Branch::Node(children) => {
            let mut d = BigUint::from(ell(branch));
            for c in children.iter() {
                d *= denom(c);
            }
            d
        }
    }
}

/// |Γ^(k)| from the recursion 2, then n ↦ n³ + 1.
pub fn branch_count(k: usize) -> Result<BigUint> {
    if k == 0 {
        return Err(Error::Domain("branch depth starts at 1".into()));
    }
    let mut count = BigUint::from(2u32);
    for _ in 1..k {
        count = &count * &count * &count + 1u32;
    }
    Ok(count)
}

/// Streaming enumeration of Γ^(k) in a fixed order (Leaf first, then the
/// lexicographic triple product).  Memory is O(3^k) iterator state, never the
/// |Γ^(k)| items themselves.
pub fn enumerate_branches(k: usize) -> Result<BranchIter> {
    if k == 0 {
        return Err(Error::Domain("branch depth starts at 1".into()));
    }
    Ok(BranchIter { k, stage: Stage::EmitLeaf })
}

pub struct BranchIter {
    k: usize,
    stage: Stage,
}

enum Stage {
    EmitLeaf,
    EmitCubic,
    Product(Box<[(BranchIter, Branch); 3]>),
    Done,
}

impl Iterator for BranchIter {
    type Item = Branch;

    fn next(&mut self) -> Option<Branch> {
        match &mut self.stage {
            Stage::EmitLeaf => {
                self.stage = if self.k == 1 {
                    Stage::EmitCubic
                } else {
                    let slot = || {
                        let mut it = enumerate_branches(self.k - 1).expect("k >= 2");
                        let first = it.next().expect("Γ is never empty");
                        (it, first)
                    };
                    Stage::Product(Box::new([slot(), slot(), slot()]))
                };
                Some(Branch::Leaf)
            }
            Stage::EmitCubic => {
                self.stage = Stage::Done;
                Some(Branch::Cubic)
            }
            Stage::Product(slots) => {
                let item = Branch::node(slots[0].1.clone(), slots[1].1.clone(), slots[2].1.clone());
                // Odometer advance, last child fastest.
                let mut pos = 3;
                loop {
                    if pos == 0 {
                        self.stage = Stage::Done;
                        break;
                    }
                    pos -= 1;
                    if let Some(b) = slots[pos].0.next() {
                        slots[pos].1 = b;
                        break;
                    }
                    let mut it = enumerate_branches(self.k - 1).expect("k >= 2");
                    slots[pos].1 = it.next().expect("Γ is never empty");
                    slots[pos].0 = it;
                }
                Some(item)
            }
            Stage::Done => None,
        }
    }
}

/// Exhaustive materialization, restricted to k ≤ 3 where it is affordable.
pub fn collect_branches(k: usize) -> Result<Vec<Branch>> {
    if k > 3 {
        return Err(Error::Domain(format!(
            "refusing to materialize Γ^({k}); |Γ^(4)| is already 730³ + 1"
        )));
    }
    Ok(enumerate_branches(k)?.collect())
}

/// Random valid branch of depth exactly within Γ^(k): at every interior level
/// pick Leaf with probability 1/2, otherwise recurse into a Node.  Not the
/// uniform measure on Γ^(k); used only to spot-check structural identities at
/// depths where enumeration is impossible.
pub fn random_branch<R: Rng>(k: usize, rng: &mut R) -> Branch {
    assert!(k >= 1);
    if k == 1 {
        return if rng.gen::<bool>() { Branch::Cubic } else { Branch::Leaf };
    }
    if rng.gen::<bool>() {
        Branch::Leaf
    } else {
        Branch::node(
            random_branch(k - 1, rng),
            random_branch(k - 1, rng),
            random_branch(k - 1, rng),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MajorantMode {
    /// Direct sum z^ℓ/𝔇 over an actual enumeration (k ≤ 3).
    Exhaustive,
    /// Polynomial recursion M_k = 1 + ∫₀^z M_{k-1}³, reachable for every k.
    Functional,
}

/// Coefficient cap for the functional recursion.  All polynomial
/// coefficients are nonnegative and dominated by those of (1-2z)^{-1/2}, so
/// the discarded tail at z ≤ 0.2 is below Σ_{m≥cap} (2z)^m < 10^{-200}.
const MAJORANT_COEFF_CAP: usize = 512;
/// Functional evaluations are only accepted on [0, 0.2] where that truncation
/// argument applies; the toolkit itself never needs z above 4/27 ≈ 0.1481.
const MAJORANT_Z_MAX: f64 = 0.2;

fn poly_mul_capped(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = (a.len() + b.len() - 1).min(MAJORANT_COEFF_CAP);
    let mut out = vec![0.0; len];
    for (i, &ai) in a.iter().enumerate() {
        if i >= len || ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            if i + j >= len {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_integrate(a: &[f64]) -> Vec<f64> {
    let len = (a.len() + 1).min(MAJORANT_COEFF_CAP);
    let mut out = vec![0.0; len];
    for (m, &c) in a.iter().enumerate() {
        if m + 1 < len {
            out[m + 1] = c / (m + 1) as f64;
        }
    }
    out
}

fn poly_eval(a: &[f64], z: f64) -> f64 {
    let mut acc = 0.0;
    for &c in a.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Coefficients of M_k in the monomial basis (index = power of z).
pub fn majorant_polynomial(k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Domain("branch depth starts at 1".into()));
    }
    let mut m = vec![1.0, 1.0]; // M_1 = 1 + z
    for _ in 2..=k {
        let sq = poly_mul_capped(&m, &m);
        let cube = poly_mul_capped(&sq, &m);
        let mut next = poly_integrate(&cube);
        next[0] = 1.0;
        m = next;
    }
    Ok(m)
}

/// M_k(z) = Σ_{γ ∈ Γ^(k)} z^ℓ(γ)/𝔇(γ).
pub fn majorant_series(k: usize, z: f64, mode: MajorantMode) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("majorant argument must be finite and >= 0, got {z}")));
    }
    match mode {
        MajorantMode::Exhaustive => {
            let mut acc = CompensatedSum::default();
            let mut count = 0usize;
            for branch in enumerate_branches(k)? {
                if count >= 1_000_000 {
                    return Err(Error::Domain(format!(
                        "exhaustive majorant at k = {k} exceeds the enumeration budget"
                    )));
                }
                count += 1;
                let d: f64 = denom(&branch)
                    .to_string()
                    .parse()
                    .expect("BigUint decimal always parses");
                acc.add(z.powi(ell(&branch) as i32) / d);
            }
            Ok(acc.value())
        }
        MajorantMode::Functional => {
            if z > MAJORANT_Z_MAX {
                return Err(Error::Domain(format!(
                    "functional majorant is truncation-safe only for z <= {MAJORANT_Z_MAX}, got {z}"
                )));
            }
            Ok(poly_eval(&majorant_polynomial(k)?, z))
        }
    }
}

/// Fixed point of M = 1 + ∫ M³: the closed form (1-2z)^{-1/2} dominating
/// every M_k on [0, 1/2).
pub fn majorant_fixed_point_bound(z: f64) -> Result<f64> {
    if !(z >= 0.0 && z < 0.5) {
        return Err(Error::Domain(format!("fixed-point bound needs z in [0, 1/2), got {z}")));
    }
    Ok((1.0 - 2.0 * z).powf(-0.5))
}

/// The argument at which the majorant is pinned when converting the Picard
/// bound into a time horizon.
pub const HORIZON_Z: f64 = 4.0 / 27.0;

#[derive(Clone, Debug, Serialize)]
pub struct HorizonReport {
    /// 𝔟(s) = s/(s-1), the elementary majorant of ζ(s) used per coordinate.
    pub b: f64,
    /// 𝔅 = 1 + 2𝔟(s) with s = min_i (ρ_i - κ_i)/2, bounding each 1-D mode sum.
    pub big_b: f64,
    /// T_ε = (4/27) 𝔅^{-2ν} ε^{-(1+η)}.
    pub t_eps: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub nu: usize,
}

/// ζ majorant 𝔟(s) = s/(s-1) ≥ ζ(s) for s > 1.
pub fn zeta_majorant(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::Domain(format!("zeta majorant needs s > 1, got {s}")));
    }
    Ok(s / (s - 1.0))
}

/// Guaranteed convergence horizon of the Picard expansion for data sampled
/// outside the exceptional set at level δ = ε^{1-η}.
///
/// Requires min_i (ρ_i - κ_i) > 2 so that s = min/2 > 1 and the per-mode sums
/// converge; fails with a domain error otherwise.
pub fn horizon(profile: &DecayProfile, epsilon: f64, eta: f64, nu: usize) -> Result<HorizonReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta must lie in [0,1), got {eta}")));
    }
    if profile.dim() != nu {
        return Err(Error::Domain(format!(
            "profile has {} coordinates, lattice dimension is {nu}",
            profile.dim()
        )));
    }
    let s = profile.min_rho_minus_kappa() / 2.0;
    if !(s > 1.0) {
        return Err(Error::Domain(format!(
            "horizon needs min(rho - kappa) > 2, got {}",
            profile.min_rho_minus_kappa()
        )));
    }
    let b = zeta_majorant(s)?;
    let big_b = 1.0 + 2.0 * b;
    let t_eps = HORIZON_Z * big_b.powi(-2 * nu as i32) * epsilon.powf(-(1.0 + eta));
    Ok(HorizonReport { b, big_b, t_eps, epsilon, eta, nu })
}
