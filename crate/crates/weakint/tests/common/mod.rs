//! Shared helpers for the integration suites: seeded random lookup-table
//! statistics and an independent brute-force seminorm oracle that skips
//! none of the optimizations the library uses.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use weakint::diffops::{delete, replace};
use weakint::statlib::make_table_statistic;
use weakint::{FiniteAlphabet, Point, Statistic};

/// A lookup-table statistic with values in [0, 1], plus the index alphabet.
pub fn random_table_statistic(
    seed: u64,
    alphabet_size: usize,
    n: usize,
) -> (Statistic<usize>, Vec<usize>) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let table: Vec<f64> = (0..alphabet_size.pow(n as u32))
        .map(|_| rng.random::<f64>())
        .collect();
    let stat = make_table_statistic(alphabet_size, n, table).expect("valid table");
    (stat, (0..alphabet_size).collect())
}

/// Random probability vector with all entries at least `floor`.
pub fn random_probs(seed: u64, len: usize, floor: f64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..len).map(|_| floor + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Weighted index alphabet `{0, ..., k-1}` with seeded random weights.
pub fn random_index_alphabet(seed: u64, alphabet_size: usize) -> FiniteAlphabet<usize> {
    let probs = random_probs(seed, alphabet_size, 0.1);
    FiniteAlphabet::weighted((0..alphabet_size).collect(), probs).expect("valid alphabet")
}

/// Visit every assignment of `slots` alphabet indices (odometer order).
pub fn for_each_point(alphabet_len: usize, slots: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; slots];
    loop {
        visit(&idx);
        let mut pos = slots;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < alphabet_len {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Brute-force seminorms: enumerates every base point (no skipped
/// coordinates), every coordinate pair and every substitution, evaluating
/// the statistic through `replace` only. Returns `(M, J)`.
pub fn naive_seminorms<X: Point>(f: &Statistic<X>, points: &[X]) -> (f64, f64) {
    let n = f.arity();
    let mut m_best = 0.0_f64;
    let mut dd_best = 0.0_f64;
    for_each_point(points.len(), n, |assignment| {
        let x: Vec<X> = assignment.iter().map(|&i| points[i].clone()).collect();
        for k in 0..n {
            for y in points {
                for yp in points {
                    let plus = f.eval(&replace(&x, k, y).unwrap());
                    let minus = f.eval(&replace(&x, k, yp).unwrap());
                    m_best = m_best.max((plus - minus).abs());
                    for l in 0..n {
                        if l == k {
                            continue;
                        }
                        for z in points {
                            for zp in points {
                                let pp = f.eval(&replace(&replace(&x, k, y).unwrap(), l, z).unwrap());
                                let pm =
                                    f.eval(&replace(&replace(&x, k, y).unwrap(), l, zp).unwrap());
                                let mp =
                                    f.eval(&replace(&replace(&x, k, yp).unwrap(), l, z).unwrap());
                                let mm =
                                    f.eval(&replace(&replace(&x, k, yp).unwrap(), l, zp).unwrap());
                                dd_best = dd_best.max((pp - pm - mp + mm).abs());
                            }
                        }
                    }
                }
            }
        }
    });
    (m_best, n as f64 * dd_best)
}

/// Literal transcription of the estimator's defining double sum, built
/// entirely from `replace`/`delete` with fresh vectors.
pub fn naive_variance_estimator<X: Point>(f: &Statistic<X>, x: &[X]) -> f64 {
    let n = f.arity();
    assert_eq!(x.len(), n + 1);
    let mut total = 0.0;
    for j in 0..=n {
        for i in 0..=n {
            if i == j {
                continue;
            }
            let a = f.eval(&delete(x, j).unwrap());
            let b = f.eval(&delete(&replace(x, i, &x[j]).unwrap(), j).unwrap());
            total += (a - b) * (a - b);
        }
    }
    total / (2.0 * (n as f64 + 1.0))
}
