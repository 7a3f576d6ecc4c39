//! Thread-count independence: every artifact and estimate must be
//! byte-identical whether the work runs on one worker or many, because
//! sampling is keyed by (seed, sample, site) and reductions are indexed
//! collects followed by sequential sums.

use std::fs;
use std::path::Path;

use qpnls_core::config::RunConfig;
use qpnls_core::experiments::{run_dist_check, run_linear_ldp};
use qpnls_core::lattice::{DecayProfile, FrequencyMatrix, TruncationBox};
use qpnls_core::solver::SolverConfig;
use qpnls_core::tail::{tilted_tail, Evolution, Observable, TailRun, TiltSpec};

fn in_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(job)
}

fn file_bytes(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn distribution_check_artifacts_are_thread_count_invariant() {
    let config = RunConfig::from_json_str(
        r#"{"sampling": {"n_samples": 4000, "root_seed": 7}}"#,
    )
    .unwrap()
    .resolve()
    .unwrap();
    let dir1 = tempfile::tempdir().unwrap();
    let dir4 = tempfile::tempdir().unwrap();
    let r1 = in_pool(1, || run_dist_check(&config, dir1.path()).unwrap());
    let r4 = in_pool(4, || run_dist_check(&config, dir4.path()).unwrap());
    assert_eq!(r1, r4);
    for name in ["samples.csv", "report.json"] {
        assert_eq!(
            file_bytes(dir1.path(), name),
            file_bytes(dir4.path(), name),
            "{name} differs between 1 and 4 worker threads"
        );
    }
}

#[test]
fn curve_artifacts_are_thread_count_invariant() {
    let config = RunConfig::from_json_str(
        r#"{
          "regime": {"eps_list": [0.4, 0.2], "z0": 0.6},
          "sampling": {"n_samples": 3000, "root_seed": 11}
        }"#,
    )
    .unwrap()
    .resolve()
    .unwrap();
    let dir1 = tempfile::tempdir().unwrap();
    let dir4 = tempfile::tempdir().unwrap();
    let r1 = in_pool(1, || run_linear_ldp(&config, dir1.path()).unwrap());
    let r4 = in_pool(4, || run_linear_ldp(&config, dir4.path()).unwrap());
    assert_eq!(r1, r4);
    for name in ["curve.csv", "report.json"] {
        assert_eq!(
            file_bytes(dir1.path(), name),
            file_bytes(dir4.path(), name),
            "{name} differs between 1 and 4 worker threads"
        );
    }
}

/// The weighted estimator sums per-sample weights with a compensated
/// accumulator in index order, so even its f64 internals cannot depend on the
/// parallel schedule.
#[test]
fn tilted_estimate_bits_are_thread_count_invariant() {
    let profile = DecayProfile::new(vec![3.0], vec![1.0], 1.0).unwrap();
    let omega = FrequencyMatrix::new(vec![vec![1.0]]).unwrap();
    let bx = TruncationBox::new(1, 4).unwrap();
    let run = TailRun {
        profile: &profile,
        omega: &omega,
        bx,
        epsilon: 0.1,
        z0: 1.0,
        t: 0.0,
        evolution: Evolution::Linear,
        observable: Observable::Point { y: vec![0.0] },
        root_seed: 13,
        solver: SolverConfig::default(),
    };
    let tilt = TiltSpec::aligned(&profile, bx, &omega, 0.0, 3.0, None).unwrap();
    let a = in_pool(1, || tilted_tail(&run, 20_000, &tilt).unwrap());
    let b = in_pool(3, || tilted_tail(&run, 20_000, &tilt).unwrap());
    assert_eq!(a.p_hat.to_bits(), b.p_hat.to_bits());
    assert_eq!(a.ci_lo.to_bits(), b.ci_lo.to_bits());
    assert_eq!(a.ci_hi.to_bits(), b.ci_hi.to_bits());
    assert_eq!(a.n_hits, b.n_hits);
    assert_eq!(a.ess.unwrap().to_bits(), b.ess.unwrap().to_bits());
}
