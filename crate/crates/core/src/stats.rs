//! Small statistical helpers shared by the Monte Carlo drivers: compensated
//! summation (so reductions do not depend on worker count), Wilson score
//! intervals, the Kolmogorov-Smirnov statistic, and closed-form chi-squared
//! tails for even degrees of freedom.

/// Neumaier variant of Kahan summation.  Summing a slice front to back with
/// this accumulator is the canonical reduction order used everywhere in the
/// crate; parallel code collects per-sample values into an indexed buffer and
/// reduces sequentially, which keeps artifacts bitwise reproducible for any
/// thread count.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_total(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Sample mean and unbiased variance in one pass over an indexed buffer.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 2, "need at least two values");
    let mean = compensated_total(values) / n as f64;
    let mut acc = CompensatedSum::default();
    for &v in values {
        let d = v - mean;
        acc.add(d * d);
    }
    (mean, acc.value() / (n - 1) as f64)
}

/// Two-sided 99% normal quantile used for every confidence interval emitted
/// by the toolkit.
pub const Z_99: f64 = 2.5758293035489004;

/// Wilson score interval for a binomial proportion, two-sided at the level
/// implied by `z`.  Behaves sensibly at 0 or n hits, unlike the Wald interval.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    assert!(n > 0);
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One-sample Kolmogorov-Smirnov statistic against a CDF given as a closure.
/// `samples` need not be sorted.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Survival function of the Kolmogorov distribution,
/// Q(x) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² x²).
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let term = (-2.0 * (k as f64) * (k as f64) * x * x).exp();
        if term < 1e-300 {
            break;
        }
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic KS critical value: the D above which the test rejects at
/// significance `alpha` with sample size `n`.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0);
    // Invert kolmogorov_sf by bisection; sf is strictly decreasing on (0, ∞).
    let (mut lo, mut hi) = (1e-8, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / (n as f64).sqrt()
}

/// Survival function of a chi-squared variable with an even number 2m of
/// degrees of freedom: P(X > x) = e^{-x/2} Σ_{i<m} (x/2)^i / i!.
/// Exact (up to rounding), no special functions needed.
pub fn chi_squared_even_sf(half_dof: u64, x: f64) -> f64 {
    assert!(half_dof >= 1);
    if x <= 0.0 {
        return 1.0;
    }
    let h = x / 2.0;
    // Running term (x/2)^i / i! in log space is unnecessary at desk scale;
    // f64 holds (x/2)^i/i! comfortably for the x we ever pass in.
    let mut term = 1.0;
    let mut acc = CompensatedSum::default();
    acc.add(1.0);
    for i in 1..half_dof {
        term *= h / i as f64;
        acc.add(term);
    }
    ((-h).exp() * acc.value()).clamp(0.0, 1.0)
}

/// ln I₀(x) for x ≥ 0, the log of the modified Bessel function of order
/// zero.  This is the normalizer of a uniformly phase-randomized Gaussian
/// mean shift: averaging the shifted density over the rotation e^{iφ}m gives
/// p(g)·e^{-|m|²}·I₀(2|⟨m,g⟩|), so importance weights need ln I₀ at
/// arguments up to a few hundred, far past where I₀ itself overflows.
pub fn ln_i0(x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "ln_i0 needs a finite x >= 0, got {x}");
    if x <= 20.0 {
        // Power series I₀(x) = Σ (x²/4)^k / (k!)²; at x = 20 the largest
        // term is ~e^x/√(2πx) ≈ 4e7, comfortably inside f64 range.
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut acc = CompensatedSum::default();
        acc.add(1.0);
        for k in 1..200 {
            term *= q / ((k * k) as f64);
            acc.add(term);
            if term < 1e-18 * acc.value() {
                break;
            }
        }
        acc.value().ln()
    } else {
        // Asymptotic series I₀(x) ~ e^x/√(2πx) · Σ_k a_k with
        // a_k = ∏_{j≤k} (2j-1)²/(8xj); truncated where the terms stop
        // shrinking, error below 1e-14 for x > 20.
        let mut term = 1.0;
        let mut acc = CompensatedSum::default();
        acc.add(1.0);
        for k in 1..30u32 {
            let j = f64::from(k);
            let next = term * (2.0 * j - 1.0) * (2.0 * j - 1.0) / (8.0 * x * j);
            if next >= term {
                break;
            }
            term = next;
            acc.add(term);
            if term < 1e-18 {
                break;
            }
        }
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + acc.value().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let vals = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_total(&vals), 2.0);
    }

    #[test]
    fn wilson_interval_brackets_the_proportion() {
        let (lo, hi) = wilson_interval(50, 1000, Z_99);
        assert!(lo < 0.05 && 0.05 < hi);
        assert!(lo > 0.0 && hi < 1.0);
        let (lo0, _) = wilson_interval(0, 1000, Z_99);
        assert_eq!(lo0, 0.0);
    }

    #[test]
    fn kolmogorov_critical_matches_tabulated_value() {
        // Classic large-sample constant at the 1% level is 1.6276/sqrt(n).
        let d = ks_critical(0.01, 100);
        assert!((d * 10.0 - 1.6276).abs() < 1e-3, "got {d}");
    }

    #[test]
    fn ks_statistic_on_exact_uniform_grid_is_small() {
        // Midpoints i/n - 1/(2n) of [0,1] give D = 1/(2n) against U(0,1).
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn chi_squared_closed_form_matches_statrs() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        for (half_dof, x) in [(1u64, 0.7), (3, 12.0), (13, 30.0), (25, 40.0)] {
            let mine = chi_squared_even_sf(half_dof, x);
            let reference = 1.0 - ChiSquared::new(2.0 * half_dof as f64).unwrap().cdf(x);
            assert!(
                (mine - reference).abs() < 1e-12,
                "dof {} x {}: {} vs {}",
                2 * half_dof,
                x,
                mine,
                reference
            );
        }
    }

    #[test]
    fn chi_squared_six_dof_at_twelve() {
        // 2m = 6, x = 12: e^{-6} (1 + 6 + 18) = 25 e^{-6}.
        let v = chi_squared_even_sf(3, 12.0);
        assert!((v - 25.0 * (-6.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.06196880441665896).abs() < 1e-15);
    }

    #[test]
    fn log_bessel_matches_reference_values() {
        // 20-digit reference values; both the series and the asymptotic
        // branch must sit within a few ulps, including across the split.
        let table: [(f64, f64); 17] = [
            (0.0, 0.0),
            (1e-8, 2.5e-17),
            (0.1, 0.0024984392338762436585),
            (0.5, 0.061549719185481303941),
            (1.0, 0.23591435850717864869),
            (2.0, 0.82399354148295628293),
            (5.0, 3.3046817758225334338),
            (8.0, 6.0581042554278139454),
            (12.0, 9.8495024991028438432),
            (19.999, 17.588635758378342826),
            (20.0, 17.589610428244274291),
            (20.001, 17.590585099394081413),
            (25.0, 22.476728004999243759),
            (50.0, 47.127575501871804584),
            (100.0, 96.779732689942583717),
            (400.0, 396.08564208488757675),
            (10_000.0, 9994.475903781432301),
        ];
        for (x, want) in table {
            let got = ln_i0(x);
            let tol = 1e-13 * want.abs().max(1.0);
            assert!((got - want).abs() < tol, "ln_i0({x}) = {got}, want {want}");
        }
    }
}
