//! Exact discrepancy searches against direct brute-force enumeration.

use proptest::prelude::*;
use udmetric::discrepancy::{extreme_discrepancy_exact, star_discrepancy_exact};
use udmetric::sequences::{gen_iid_uniform, PointList};

fn count(pts: &[Vec<f64>], keep: impl Fn(&[f64]) -> bool) -> f64 {
    pts.iter().filter(|p| keep(p)).count() as f64
}

fn rows(seq: &PointList, n: usize) -> Vec<Vec<f64>> {
    seq.iter().take(n).map(|p| p.to_vec()).collect()
}

/// Critical values per axis: point coordinates plus the cube boundary.
fn critical(pts: &[Vec<f64>], axis: usize, with: f64) -> Vec<f64> {
    let mut v: Vec<f64> = pts.iter().map(|p| p[axis]).collect();
    v.push(with);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![vec![]], |acc, vals| {
        acc.iter()
            .flat_map(|prefix| {
                vals.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

fn brute_star(pts: &[Vec<f64>]) -> f64 {
    let n = pts.len() as f64;
    let dim = pts[0].len();
    let axes: Vec<Vec<f64>> = (0..dim).map(|a| critical(pts, a, 1.0)).collect();
    let mut best = 0.0f64;
    for t in cartesian(&axes) {
        let vol: f64 = t.iter().product();
        let closed = count(pts, |p| p.iter().zip(&t).all(|(x, t)| x <= t));
        let open = count(pts, |p| p.iter().zip(&t).all(|(x, t)| x < t));
        best = best.max(closed / n - vol).max(vol - open / n);
    }
    best
}

fn brute_extreme(pts: &[Vec<f64>]) -> f64 {
    let n = pts.len() as f64;
    let dim = pts[0].len();
    let lows: Vec<Vec<f64>> = (0..dim).map(|a| critical(pts, a, 0.0)).collect();
    let highs: Vec<Vec<f64>> = (0..dim).map(|a| critical(pts, a, 1.0)).collect();
    let mut best = 0.0f64;
    for a in cartesian(&lows) {
        for b in cartesian(&highs) {
            if a.iter().zip(&b).any(|(a, b)| a > b) {
                continue;
            }
            let vol: f64 = a.iter().zip(&b).map(|(a, b)| b - a).product();
            let closed = count(pts, |p| {
                p.iter().zip(a.iter().zip(&b)).all(|(x, (a, b))| a <= x && x <= b)
            });
            best = best.max(closed / n - vol);
            if a.iter().zip(&b).all(|(a, b)| a < b) {
                let open = count(pts, |p| {
                    p.iter().zip(a.iter().zip(&b)).all(|(x, (a, b))| a < x && x < b)
                });
                best = best.max(vol - open / n);
            }
        }
    }
    best
}

/// Points on a coarse lattice so that coordinates repeat.
fn lattice(seed: u64, dim: usize, n: usize, levels: f64) -> PointList {
    let raw = gen_iid_uniform(seed, dim, n).unwrap();
    let coords = raw
        .coords()
        .iter()
        .map(|c| (c * levels).floor() / levels)
        .collect();
    PointList::new(dim, coords).unwrap()
}

#[test]
fn star_1d_closed_form_matches_brute_force_on_200_sequences() {
    for seed in 0..200u64 {
        let n = 1 + (seed as usize * 7) % 64;
        let s = gen_iid_uniform(seed, 1, n).unwrap();
        let got = star_discrepancy_exact(&s, n).unwrap().star.unwrap();
        let want = brute_star(&rows(&s, n));
        assert!((got - want).abs() <= 1e-12, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn hand_computed_cases() {
    let s = PointList::from_1d(vec![0.0, 0.5]).unwrap();
    assert_eq!(brute_star(&rows(&s, 2)), 0.5);
    let s = PointList::from_1d(vec![0.25, 0.75]).unwrap();
    assert_eq!(brute_extreme(&rows(&s, 2)), 0.5);
    let s = PointList::from_1d(vec![0.5]).unwrap();
    assert_eq!(brute_extreme(&rows(&s, 1)), 1.0);
}

#[test]
fn star_2d_dense_grid_lower_bound() {
    const G: usize = 256;
    for seed in 0..10u64 {
        let n = 8 + (seed as usize * 3) % 25;
        let s = gen_iid_uniform(seed, 2, n).unwrap();
        let exact = star_discrepancy_exact(&s, n).unwrap().star.unwrap();
        let pts = rows(&s, n);
        let mut grid = 0.0f64;
        for i in 1..=G {
            for k in 1..=G {
                let t = [i as f64 / G as f64, k as f64 / G as f64];
                let c = count(&pts, |p| p[0] < t[0] && p[1] < t[1]);
                grid = grid.max((c / n as f64 - t[0] * t[1]).abs());
            }
        }
        assert!(exact >= grid - 1e-12, "seed {seed}: {exact} < grid {grid}");
        assert!(
            exact <= grid + 2.0 / G as f64,
            "seed {seed}: {exact} vs grid {grid}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn star_matches_brute_force(seed in any::<u64>(), dim in 1usize..4, n in 1usize..12, ties in any::<bool>()) {
        let s = if ties { lattice(seed, dim, n, 6.0) } else { gen_iid_uniform(seed, dim, n).unwrap() };
        let got = star_discrepancy_exact(&s, n).unwrap().star.unwrap();
        let want = brute_star(&rows(&s, n));
        prop_assert!((got - want).abs() <= 1e-12, "{} vs {}", got, want);
    }

    #[test]
    fn extreme_matches_brute_force(seed in any::<u64>(), dim in 1usize..3, n in 1usize..8, ties in any::<bool>()) {
        let s = if ties { lattice(seed, dim, n, 5.0) } else { gen_iid_uniform(seed, dim, n).unwrap() };
        let r = extreme_discrepancy_exact(&s, n).unwrap();
        let want = brute_extreme(&rows(&s, n));
        prop_assert!((r.extreme.unwrap() - want).abs() <= 1e-12, "{:?} vs {}", r.extreme, want);
        prop_assert!((r.witness_deviation(&s) - want).abs() <= 1e-12);
    }
}
