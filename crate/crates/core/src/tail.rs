//! Monte Carlo estimation of the rogue-wave probability
//! P(sup_y |u(t,y)| > z₀ ε^{-1/2}), for the free and the cubic flow, and
//! assembly of ε·log P curves against the large-deviations rate.
//!
//! Direct sampling dies once the expected hit count drops below a few dozen,
//! which happens almost immediately on the ε grid of interest, so the module
//! also carries a tilted estimator: fields are drawn from a mean-shifted
//! Gaussian that puts the event on the typical path, the shift is rotated by
//! one uniform random phase per sample (the event is a modulus exceedance, so
//! the tilt only needs to land on the right circle, and the phase mixture
//! keeps the density ratio bounded by e^{|m|²} instead of growing like
//! e^{+3|m|²} on the far side of the circle), and every sample is reweighted
//! by the exact mixture density ratio.  All randomness is keyed by
//! (root seed, sample index, lattice coordinates), so results are
//! bit-identical for any thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SeedSpec;
use crate::lattice::{
    coefficient, tail_abs_coefficients, truncation_parameter, DecayProfile, FourierState,
    FrequencyMatrix, TruncationBox, MAX_NU,
};
use crate::linear::{evolve_linear, pointwise_tail_exact, rate_function, upper_bound_eps_log};
use crate::solver::{default_dt, rel_l2_difference, rk4_trajectory, SolverConfig};
use crate::spectral::{dealias_grid_size, SpectralGrid};
use crate::stats::{ln_i0, wilson_interval, CompensatedSum, Z_99};
use crate::tree::horizon;

/// Below this many expected hits the Wilson interval of direct sampling is
/// too wide to say anything; curves switch to the tilted estimator.
pub const HIT_FLOOR: f64 = 50.0;

/// Tilted estimates with a smaller effective sample size are flagged
/// unreliable.
pub const ESS_FLOOR: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Evolution {
    Linear,
    Nonlinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Tilted,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Tilted => "tilted",
        })
    }
}

/// What "wave height" means for the event: the modulus at one torus point, or
/// the maximum of the modulus over a uniform torus grid.
#[derive(Clone, Debug, Serialize)]
pub enum Observable {
    /// max over {2πk/G}^ν of |Σ_n c(n) e^{i⟨n,y⟩}|.
    GridSup { grid_per_dim: usize },
    /// |Σ_n c(n) e^{i⟨n,y⟩}| at a fixed y (radians, length ν).
    Point { y: Vec<f64> },
}

/// Default sup grid: alias-free for the box but never cruder than 33 points
/// per axis, so small boxes still see the peaks between lattice nodes.
pub fn default_sup_grid(radius: i64) -> usize {
    dealias_grid_size(radius).max(33)
}

/// One tail-estimation problem: the random model, the event, and the flow.
#[derive(Clone, Debug)]
pub struct TailRun<'a> {
    pub profile: &'a DecayProfile,
    pub omega: &'a FrequencyMatrix,
    pub bx: TruncationBox,
    pub epsilon: f64,
    pub z0: f64,
    /// Event time; the field is evolved from 0 to t before observation.
    pub t: f64,
    pub evolution: Evolution,
    pub observable: Observable,
    pub root_seed: u64,
    pub solver: SolverConfig,
}

impl<'a> TailRun<'a> {
    /// Height threshold z₀ ε^{-1/2}.
    pub fn threshold(&self) -> f64 {
        self.z0 / self.epsilon.sqrt()
    }
}

/// Mean shift for importance sampling.  The sampler adds e^{iΦ}·shift[flat]
/// to the standard Gaussian draw at that box index, with one uniform phase Φ
/// per sample; see `tilted_tail` for the matching density ratio.
#[derive(Clone, Debug)]
pub struct TiltSpec {
    pub theta: f64,
    pub t_target: f64,
    pub shift: Vec<Complex64>,
}

impl TiltSpec {
    /// Null tilt: θ = 0, weights identically 1.
    pub fn null(bx: TruncationBox) -> TiltSpec {
        TiltSpec { theta: 0.0, t_target: 0.0, shift: vec![Complex64::default(); bx.cardinality()] }
    }

    /// Phase-aligned tilt m_n = θ · conj(c(n) e^{-i t Q(n)} e^{i⟨n,y⟩}) / Σ_Λ |c|²,
    /// so the shifted linear field at time t and point y has mean exactly
    /// θ e^{iΦ} under the sampler's per-sample rotation.  With θ = z₀ ε^{-1/2}
    /// the mean sits on the event circle |u| = z₀ ε^{-1/2}, the rate-optimal
    /// change of measure for the exceedance; the rotation costs nothing
    /// because the event only constrains the modulus.
    pub fn aligned(
        profile: &DecayProfile,
        bx: TruncationBox,
        omega: &FrequencyMatrix,
        t: f64,
        theta: f64,
        y: Option<&[f64]>,
    ) -> Result<TiltSpec> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(Error::Domain(format!("tilt magnitude must be >= 0, got {theta}")));
        }
        if let Some(point) = y {
            if point.len() != bx.nu() {
                return Err(Error::Domain("reference point dimension mismatch".into()));
            }
        }
        let coeffs = bx.coefficient_table(profile);
        let q = bx.dispersion_table(omega);
        let mut sum_sq_box = CompensatedSum::default();
        for c in &coeffs {
            sum_sq_box.add(c * c);
        }
        let norm = sum_sq_box.value();
        let mut coords = [0i64; MAX_NU];
        let coords = &mut coords[..bx.nu()];
        let shift: Vec<Complex64> = (0..bx.cardinality())
            .map(|flat| {
                bx.coords_of(flat, coords);
                let mut phase = -q[flat] * t;
                if let Some(point) = y {
                    for (c, p) in coords.iter().zip(point) {
                        phase += *c as f64 * p;
                    }
                }
                theta * coeffs[flat] / norm * Complex64::from_polar(1.0, phase).conj()
            })
            .collect();
        Ok(TiltSpec { theta, t_target: t, shift })
    }
}

/// Tail probability estimate with its uncertainty and provenance.
#[derive(Clone, Debug, Serialize)]
pub struct TailEstimate {
    pub epsilon: f64,
    pub z0: f64,
    pub p_hat: f64,
    /// Two-sided 99% interval: Wilson for direct counts, normal-theory on the
    /// weighted mean for tilted runs (clamped at 0).
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_samples: u64,
    pub n_hits: u64,
    /// ε·ln(p_hat); absent when no hit was seen.
    pub eps_log_p: Option<f64>,
    pub method: Method,
    /// (Σw)²/Σw² over the hitting samples; absent for direct runs.
    pub ess: Option<f64>,
    /// Set when ess < ESS_FLOOR: the weighted estimate is untrustworthy.
    pub low_ess_warning: bool,
}

struct Outcome {
    value: f64,
    log_w: f64,
}

/// Tilt shift with its precomputed squared norm Σ|m_n|².
struct ShiftData<'a> {
    m: &'a [Complex64],
    m_norm_sq: f64,
}

fn observable_grid(run: &TailRun) -> Result<Option<usize>> {
    match &run.observable {
        Observable::GridSup { grid_per_dim } => {
            let needed = run.bx.side();
            if *grid_per_dim < needed {
                return Err(Error::Domain(format!(
                    "sup grid of {grid_per_dim} points aliases a box of radius {} (need >= {needed})",
                    run.bx.radius()
                )));
            }
            Ok(Some(*grid_per_dim))
        }
        Observable::Point { y } => {
            if y.len() != run.bx.nu() {
                return Err(Error::Domain("observation point dimension mismatch".into()));
            }
            Ok(None)
        }
    }
}

/// Evolves one realization and evaluates the observable.  `shift` is the
/// importance-sampling mean; the sample is drawn as g' = g + e^{iΦ} m with
/// one uniform phase Φ per sample, so the proposal density is the circular
/// mixture π^{-|Λ|} e^{-|g'|²} e^{-|m|²} I₀(2|Σ_n conj(m_n) g'_n|) and the
/// returned log weight (nominal over proposal) is
/// |m|² - ln I₀(2|Σ_n conj(m_n) g'_n|), bounded above by |m|².
#[allow(clippy::too_many_arguments)]
fn one_sample(
    run: &TailRun,
    coeffs: &[f64],
    point_phases: Option<&[Complex64]>,
    shift: Option<&ShiftData>,
    nonlinear_dt: Option<f64>,
    grid: &mut Option<SpectralGrid>,
    grid_size: usize,
    sample_index: u64,
) -> Result<Outcome> {
    let bx = run.bx;
    let seed = SeedSpec::new(run.root_seed, sample_index);
    let mut coords = [0i64; MAX_NU];
    let coords = &mut coords[..bx.nu()];
    let rot = shift
        .map(|_| Complex64::from_polar(1.0, seed.uniform_phase(bx.nu())))
        .unwrap_or(Complex64::ONE);
    // S = Σ_n conj(m_n) g'_n;  |S| is all the weight needs.
    let mut s_re = CompensatedSum::default();
    let mut s_im = CompensatedSum::default();
    let mut amps = Vec::with_capacity(bx.cardinality());
    for flat in 0..bx.cardinality() {
        bx.coords_of(flat, coords);
        let g = seed.gaussian(coords);
        let g = match shift {
            Some(data) => {
                let shifted = g + rot * data.m[flat];
                let s = data.m[flat].conj() * shifted;
                s_re.add(s.re);
                s_im.add(s.im);
                shifted
            }
            None => g,
        };
        amps.push(g * coeffs[flat]);
    }
    let state = FourierState::new(bx, amps, 0.0, run.epsilon)?;
    let evolved = match run.evolution {
        Evolution::Linear => evolve_linear(&state, run.omega, run.t)?,
        Evolution::Nonlinear => {
            if run.t == 0.0 {
                state
            } else {
                let dt = nonlinear_dt.expect("nonlinear runs calibrate dt up front");
                let solver_grid = run.solver.grid_size(bx.radius())?;
                rk4_trajectory(&state, run.omega, solver_grid, run.t, dt, 1)?
                    .states
                    .pop()
                    .expect("trajectory has a terminal state")
            }
        }
    };
    let value = match &run.observable {
        Observable::GridSup { .. } => {
            let g = grid.get_or_insert_with(|| SpectralGrid::new(bx.nu(), grid_size));
            let field = g.synthesize(&bx, &evolved.amps);
            field.iter().fold(0.0f64, |m, v| m.max(v.norm()))
        }
        Observable::Point { .. } => {
            let phases = point_phases.expect("point observable has a phase table");
            let mut re = CompensatedSum::default();
            let mut im = CompensatedSum::default();
            for (a, p) in evolved.amps.iter().zip(phases) {
                let v = a * p;
                re.add(v.re);
                im.add(v.im);
            }
            Complex64::new(re.value(), im.value()).norm()
        }
    };
    let log_w = match shift {
        Some(data) => {
            let s_abs = Complex64::new(s_re.value(), s_im.value()).norm();
            data.m_norm_sq - ln_i0(2.0 * s_abs)
        }
        None => 0.0,
    };
    if !value.is_finite() || !log_w.is_finite() {
        return Err(Error::Numerics(format!("sample {sample_index} produced a non-finite value")));
    }
    Ok(Outcome { value, log_w })
}

/// Calibrates a fixed step for per-sample nonlinear runs: halve until the
/// terminal state of the pilot sample settles to 1e-8, then reuse that step
/// for the whole ensemble.
fn calibrate_nonlinear_dt(
    run: &TailRun,
    coeffs: &[f64],
    shift: Option<&[Complex64]>,
) -> Result<f64> {
    let bx = run.bx;
    let seed = SeedSpec::new(run.root_seed, 0);
    let rot = shift
        .map(|_| Complex64::from_polar(1.0, seed.uniform_phase(bx.nu())))
        .unwrap_or(Complex64::ONE);
    let mut coords = [0i64; MAX_NU];
    let coords = &mut coords[..bx.nu()];
    let mut amps = Vec::with_capacity(bx.cardinality());
    for flat in 0..bx.cardinality() {
        bx.coords_of(flat, coords);
        let mut g = seed.gaussian(coords);
        if let Some(m) = shift {
            g += rot * m[flat];
        }
        amps.push(g * coeffs[flat]);
    }
    let state = FourierState::new(bx, amps, 0.0, run.epsilon)?;
    let grid_size = run.solver.grid_size(bx.radius())?;
    let mut dt = run.solver.dt.unwrap_or_else(|| default_dt(&state, run.omega));
    let mut last = rk4_trajectory(&state, run.omega, grid_size, run.t, dt, 1)?;
    for _ in 0..12 {
        let finer = rk4_trajectory(&state, run.omega, grid_size, run.t, dt / 2.0, 1)?;
        let diff = rel_l2_difference(
            &last.states.last().unwrap().amps,
            &finer.states.last().unwrap().amps,
        );
        last = finer;
        dt /= 2.0;
        if diff < 1e-8 {
            return Ok(dt);
        }
    }
    Err(Error::Numerics("nonlinear step calibration did not converge".into()))
}

fn sweep(run: &TailRun, n_samples: u64, tilt: Option<&TiltSpec>) -> Result<Vec<Outcome>> {
    if n_samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    if !(run.epsilon > 0.0 && run.epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0,1), got {}", run.epsilon)));
    }
    if run.z0 < 0.0 || run.t < 0.0 {
        return Err(Error::Domain("z0 and t must be nonnegative".into()));
    }
    let grid_size = observable_grid(run)?.unwrap_or(0);
    let shift = tilt.map(|t| {
        debug_assert_eq!(t.shift.len(), run.bx.cardinality());
        let mut norm_sq = CompensatedSum::default();
        for m in &t.shift {
            norm_sq.add(m.norm_sqr());
        }
        ShiftData { m: t.shift.as_slice(), m_norm_sq: norm_sq.value() }
    });
    let coeffs = run.bx.coefficient_table(run.profile);
    let point_phases: Option<Vec<Complex64>> = match &run.observable {
        Observable::Point { y } => {
            let mut coords = [0i64; MAX_NU];
            let coords = &mut coords[..run.bx.nu()];
            Some(
                (0..run.bx.cardinality())
                    .map(|flat| {
                        run.bx.coords_of(flat, coords);
                        let phase: f64 =
                            coords.iter().zip(y).map(|(&c, &p)| c as f64 * p).sum();
                        Complex64::from_polar(1.0, phase)
                    })
                    .collect(),
            )
        }
        Observable::GridSup { .. } => None,
    };
    let nonlinear_dt = match run.evolution {
        Evolution::Nonlinear if run.t > 0.0 => {
            Some(calibrate_nonlinear_dt(run, &coeffs, shift.as_ref().map(|s| s.m))?)
        }
        _ => None,
    };
    (0..n_samples)
        .into_par_iter()
        .map_init(
            || None::<SpectralGrid>,
            |grid, i| {
                one_sample(
                    run,
                    &coeffs,
                    point_phases.as_deref(),
                    shift.as_ref(),
                    nonlinear_dt,
                    grid,
                    grid_size,
                    i,
                )
            },
        )
        .collect()
}

/// Plain Monte Carlo: Bernoulli frequency of the exceedance with a 99%
/// Wilson interval.  Deterministic in (root seed, sample count).
pub fn direct_tail(run: &TailRun, n_samples: u64) -> Result<TailEstimate> {
    let outcomes = sweep(run, n_samples, None)?;
    let threshold = run.threshold();
    let n_hits = outcomes.iter().filter(|o| o.value > threshold).count() as u64;
    let p_hat = n_hits as f64 / n_samples as f64;
    let (ci_lo, ci_hi) = wilson_interval(n_hits, n_samples, Z_99);
    Ok(TailEstimate {
        epsilon: run.epsilon,
        z0: run.z0,
        p_hat,
        ci_lo,
        ci_hi,
        n_samples,
        n_hits,
        eps_log_p: (n_hits > 0).then(|| run.epsilon * p_hat.ln()),
        method: Method::Direct,
        ess: None,
        low_ess_warning: false,
    })
}

/// Importance-sampled estimate: draws g' = g + e^{iΦ} m with one uniform
/// phase Φ per sample, weights each sample by the exact density ratio of the
/// nominal Gaussian to that circular mixture,
/// w = e^{|m|²} / I₀(2|Σ_n conj(m_n) g'_n|), and averages the weighted hit
/// indicators.  Unbiased for the same probability as `direct_tail`.
///
/// The rotation is what makes the modulus event tractable: a fixed shift
/// covers only one side of the circle |u| = z₀ ε^{-1/2}, and hits on the far
/// side carry density ratios up to e^{+3|m|²}, so the fixed-shift estimator
/// is biased low at any feasible sample size.  Under the mixture the weight
/// never exceeds e^{|m|²} (I₀ ≥ 1), the variance is finite, and the normal
/// band below is honest.
pub fn tilted_tail(run: &TailRun, n_samples: u64, tilt: &TiltSpec) -> Result<TailEstimate> {
    if tilt.shift.len() != run.bx.cardinality() {
        return Err(Error::Domain("tilt shift length does not match the box".into()));
    }
    let outcomes = sweep(run, n_samples, Some(tilt))?;
    let threshold = run.threshold();
    let mut sum_hit = CompensatedSum::default();
    let mut sum_hit_sq = CompensatedSum::default();
    let mut n_hits = 0u64;
    for o in &outcomes {
        if o.value > threshold {
            let w = o.log_w.exp();
            n_hits += 1;
            sum_hit.add(w);
            sum_hit_sq.add(w * w);
        }
    }
    let n = n_samples as f64;
    let p_hat = sum_hit.value() / n;
    // Sample variance of the weighted indicator w·1{hit}.
    let variance = if n_samples > 1 {
        ((sum_hit_sq.value() - n * p_hat * p_hat) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let se = (variance / n).sqrt();
    // ESS over the estimator's actual summands w·1{hit}: the all-sample Kish
    // ratio collapses like e^{-|m|²} at any useful tilt even when the hit
    // average itself is rock steady, so it would flag every healthy run.
    let ess = if sum_hit_sq.value() > 0.0 {
        sum_hit.value() * sum_hit.value() / sum_hit_sq.value()
    } else {
        0.0
    };
    Ok(TailEstimate {
        epsilon: run.epsilon,
        z0: run.z0,
        p_hat,
        ci_lo: (p_hat - Z_99 * se).max(0.0),
        ci_hi: p_hat + Z_99 * se,
        n_samples,
        n_hits,
        eps_log_p: (p_hat > 0.0).then(|| run.epsilon * p_hat.ln()),
        method: Method::Tilted,
        ess: Some(ess),
        low_ess_warning: ess < ESS_FLOOR,
    })
}

/// Expected direct-sampling hit count, using the exact pointwise tail as a
/// proxy for the event probability.  Drives the direct/tilted switch.
pub fn expected_direct_hits(
    n_samples: u64,
    z0: f64,
    epsilon: f64,
    sum_sq: f64,
) -> Result<f64> {
    if z0 == 0.0 {
        return Ok(n_samples as f64);
    }
    Ok(n_samples as f64 * pointwise_tail_exact(z0, epsilon, sum_sq)?)
}

/// Empirical remainder constant: the 99.9th percentile of
/// ε^{1/2-η/2}·𝓡_N over pilot samples, where 𝓡_N = Σ_{n∉Λ_N} |c(n)||g_n| is
/// evaluated over the annulus Λ_{N'}∖Λ_N (N' = 2N+8) plus a deterministic
/// cap 5·Σ_{n∉Λ_{N'}}|c(n)| for everything farther out.  The pilot reuses
/// the run's coordinate-keyed substreams, so each pilot value is the actual
/// remainder of the corresponding main-run field.
pub fn remainder_constant_pilot(
    profile: &DecayProfile,
    epsilon: f64,
    eta: f64,
    mu: f64,
    n_pilot: u64,
    root_seed: u64,
) -> Result<f64> {
    if n_pilot == 0 {
        return Err(Error::Domain("pilot needs at least one sample".into()));
    }
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta must lie in [0,1), got {eta}")));
    }
    let nu = profile.dim();
    let inner = truncation_parameter(epsilon, mu, nu)?;
    let outer = 2 * inner + 8;
    let outer_bx = TruncationBox::new(nu, outer)?;
    let inner_bx = TruncationBox::new(nu, inner)?;
    let cap = 5.0 * tail_abs_coefficients(profile, outer)?;
    let scale = epsilon.powf(0.5 - eta / 2.0);
    let mut values: Vec<f64> = (0..n_pilot)
        .into_par_iter()
        .map(|i| {
            let seed = SeedSpec::new(root_seed, i);
            let mut coords = [0i64; MAX_NU];
            let coords = &mut coords[..nu];
            let mut acc = CompensatedSum::default();
            for flat in 0..outer_bx.cardinality() {
                outer_bx.coords_of(flat, coords);
                if inner_bx.contains(coords) {
                    continue;
                }
                acc.add(coefficient(profile, coords) * seed.gaussian(coords).norm());
            }
            scale * (acc.value() + cap)
        })
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite pilot values"));
    let idx = ((0.999 * n_pilot as f64).ceil() as usize).clamp(1, n_pilot as usize) - 1;
    Ok(values[idx])
}

/// Inputs for an ε·log P curve.
#[derive(Clone, Debug)]
pub struct CurveSpec<'a> {
    pub profile: &'a DecayProfile,
    pub omega: &'a FrequencyMatrix,
    pub z0: f64,
    pub eta: f64,
    pub mu: f64,
    /// Event time as a fraction of the contraction horizon T_ε.  None means
    /// t = 0 (only meaningful for the linear flow, whose law is
    /// time-invariant anyway).
    pub t_fraction: Option<f64>,
    pub evolution: Evolution,
    pub n_samples: u64,
    pub root_seed: u64,
    /// Remainder constant for the upper bound; None runs the pilot and takes
    /// the largest value over the ε grid.
    pub c_rem: Option<f64>,
    pub n_pilot: u64,
    pub solver: SolverConfig,
    /// Sup grid override; None uses `default_sup_grid` per ε.
    pub grid_per_dim: Option<usize>,
    /// Forces one estimator instead of the expected-hit-count switch.
    pub force_method: Option<Method>,
    /// Tilt magnitude override; None uses z₀ ε^{-1/2}.
    pub theta: Option<f64>,
}

/// One curve row, flattened to the CSV schema.
#[derive(Clone, Debug, Serialize)]
pub struct CurveRow {
    pub epsilon: f64,
    pub method: Method,
    pub n_samples: u64,
    pub n_hits: u64,
    pub ess: f64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// NaN when the estimator saw no hits.
    pub eps_log_p: f64,
    pub rate: f64,
    pub upper_bound: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurveDiagnostics {
    /// |ε log p̂ + rate| shrank from the first to the last resolvable ε.
    pub gap_shrinks: bool,
    /// Gap at the smallest ε divided by the gap at the largest.
    pub final_gap_ratio: f64,
    pub c_rem: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LdpCurve {
    pub rows: Vec<CurveRow>,
    pub diagnostics: CurveDiagnostics,
}

/// Runs the estimator across a decreasing ε grid and assembles the rows
/// {ε, ε·log p̂, band, rate, upper bound}.  The method switches from direct
/// to tilted sampling when the expected hit count falls under `HIT_FLOOR`.
pub fn ldp_curve(spec: &CurveSpec, eps_list: &[f64]) -> Result<LdpCurve> {
    if eps_list.is_empty() {
        return Err(Error::Domain("empty epsilon grid".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("epsilon grid must be strictly decreasing".into()));
    }
    let nu = spec.profile.dim();
    if nu != spec.omega.lattice_dim() {
        return Err(Error::Domain("profile and frequency dimensions differ".into()));
    }
    let rate = rate_function(spec.z0, spec.profile)?;
    let c_rem = match spec.c_rem {
        Some(c) => c,
        None => {
            let mut worst = 0.0f64;
            for &eps in eps_list {
                worst = worst.max(remainder_constant_pilot(
                    spec.profile,
                    eps,
                    spec.eta,
                    spec.mu,
                    spec.n_pilot,
                    spec.root_seed,
                )?);
            }
            worst
        }
    };
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let n = truncation_parameter(eps, spec.mu, nu)?;
        let bx = TruncationBox::new(nu, n)?;
        let t = match spec.t_fraction {
            None => 0.0,
            Some(f) => f * horizon(spec.profile, eps, spec.eta, nu)?.t_eps,
        };
        if matches!(spec.evolution, Evolution::Nonlinear) && spec.t_fraction.is_none() {
            return Err(Error::Domain(
                "nonlinear curves need t_fraction to place the event inside the horizon".into(),
            ));
        }
        let run = TailRun {
            profile: spec.profile,
            omega: spec.omega,
            bx,
            epsilon: eps,
            z0: spec.z0,
            t,
            evolution: spec.evolution,
            observable: Observable::GridSup {
                grid_per_dim: spec.grid_per_dim.unwrap_or_else(|| default_sup_grid(n)),
            },
            root_seed: spec.root_seed,
            solver: spec.solver.clone(),
        };
        let method = match spec.force_method {
            Some(m) => m,
            None => {
                let expected =
                    expected_direct_hits(spec.n_samples, spec.z0, eps, rate.sigma2_times2)?;
                if expected >= HIT_FLOOR {
                    Method::Direct
                } else {
                    Method::Tilted
                }
            }
        };
        let est = match method {
            Method::Direct => direct_tail(&run, spec.n_samples)?,
            Method::Tilted => {
                let theta = spec.theta.unwrap_or(spec.z0 / eps.sqrt());
                let tilt = TiltSpec::aligned(spec.profile, bx, spec.omega, t, theta, None)?;
                tilted_tail(&run, spec.n_samples, &tilt)?
            }
        };
        let upper_bound = upper_bound_eps_log(spec.z0, eps, spec.profile, c_rem, spec.eta, spec.mu)?;
        rows.push(CurveRow {
            epsilon: eps,
            method: est.method,
            n_samples: est.n_samples,
            n_hits: est.n_hits,
            ess: est.ess.unwrap_or(est.n_samples as f64),
            p_hat: est.p_hat,
            ci_lo: est.ci_lo,
            ci_hi: est.ci_hi,
            eps_log_p: est.eps_log_p.unwrap_or(f64::NAN),
            rate: rate.rate,
            upper_bound,
        });
    }
    let gaps: Vec<f64> = rows
        .iter()
        .filter(|r| r.eps_log_p.is_finite())
        .map(|r| (r.eps_log_p + r.rate).abs())
        .collect();
    let diagnostics = CurveDiagnostics {
        gap_shrinks: gaps.len() >= 2 && gaps.last().unwrap() < gaps.first().unwrap(),
        final_gap_ratio: if gaps.len() >= 2 {
            gaps.last().unwrap() / gaps.first().unwrap()
        } else {
            f64::NAN
        },
        c_rem,
    };
    Ok(LdpCurve { rows, diagnostics })
}
