//! Monte Carlo limsup-measure estimates are stable under more samples.

use udmetric::limsup::{measure_estimate, ApproxProfile, PsiFunction, Window};
use udmetric::rng::derive_seed;
use udmetric::sequences::gen_kronecker;

#[test]
fn quadrupling_samples_stays_within_three_ci_widths() {
    let seq = gen_kronecker(&[(5f64.sqrt() - 1.0) / 2.0], 5000).unwrap();
    let psi = ApproxProfile::repeated(PsiFunction::Power { c: 0.3, tau: 1.0 }, 1).unwrap();
    let win = Window::new(100, 5000).unwrap();
    for rep in 0..20u64 {
        let seed = derive_seed(77, rep);
        let small = measure_estimate(&seq, &psi, &win, 2000, seed).unwrap();
        let large = measure_estimate(&seq, &psi, &win, 8000, derive_seed(seed, 1)).unwrap();
        assert!(
            (small.fraction - large.fraction).abs() < 3.0 * (small.ci95 + large.ci95),
            "repeat {rep}: {small:?} vs {large:?}"
        );
    }
}

#[test]
fn convergent_profile_tail_window_is_small() {
    let seq = gen_kronecker(&[(5f64.sqrt() - 1.0) / 2.0], 20_000).unwrap();
    let psi = ApproxProfile::repeated(PsiFunction::Power { c: 1.0, tau: 1.5 }, 1).unwrap();
    let e = measure_estimate(&seq, &psi, &Window::new(10_000, 20_000).unwrap(), 10_000, 1).unwrap();
    assert!(e.fraction <= 0.05, "{e:?}");
}
