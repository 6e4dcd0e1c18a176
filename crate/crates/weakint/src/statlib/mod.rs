//! Ready-made statistic families with their declared weak-interaction
//! parameters:
//!
//! | family            | `(a, b)`                            |
//! |-------------------|-------------------------------------|
//! | sample mean       | `(1, 0)`                            |
//! | V-statistic       | `(2m, 4m(m-1))`                     |
//! | U-statistic       | `(2m, 4m^2)`                        |
//! | Lipschitz L-stat  | `(|F|_inf, |F|_Lip)`                |
//! | Gibbs free energy | `(beta, 2 beta^2)`                  |
//! | Gibbs KL          | `(4b^2 + 2b, 12 b^3 + 6 b^2)`       |
//!
//! The `l2`-regularization error functional is exposed with probed
//! seminorms only.

mod gibbs;
mod l2reg;
mod registry;

pub use gibbs::{gibbs_measure, gibbs_true_measure, make_free_energy, make_gibbs_kl, GibbsModel};
pub use l2reg::{logistic_loss, make_l2_reg_delta, ConvexLoss};
pub use registry::{resolve, RegistryContext, ResolvedStatistic};

use std::sync::Arc;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::diffops::{for_each_assignment, Statistic, WeakInteractionParams};
use crate::error::{Error, Result};

/// Fixed seed for the construction-time probing of kernels and L-weights.
const PROBE_SEED: u64 = 0x5745_411B;
const PROBE_TRIALS: usize = 1024;

/// A kernel `kappa: [0,1]^m -> [-1, 1]` for U- and V-statistics.
///
/// The range constraint is spot-checked at construction by random probing.
type KernelFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type WeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Kernel {
    order: usize,
    symmetric: bool,
    eval: KernelFn,
}

impl Kernel {
    pub fn new(
        order: usize,
        symmetric: bool,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("kernel order must be >= 1"));
        }
        let eval: KernelFn = Arc::new(eval);
        let mut rng = ChaCha12Rng::seed_from_u64(PROBE_SEED);
        let mut args = vec![0.0; order];
        for _ in 0..PROBE_TRIALS {
            for a in args.iter_mut() {
                *a = rng.random();
            }
            let v = eval(&args);
            if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                return Err(Error::invalid(format!(
                    "kernel value {v} at a probed point leaves [-1, 1]"
                )));
            }
        }
        Ok(Self {
            order,
            symmetric,
            eval,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        debug_assert_eq!(args.len(), self.order);
        (self.eval)(args)
    }
}

/// `kappa(u_1, ..., u_m) = prod u_i`: symmetric, within `[0,1]` on `[0,1]^m`.
pub fn kernel_product(order: usize) -> Result<Kernel> {
    Kernel::new(order, true, |u: &[f64]| u.iter().product())
}

/// `kappa(u, v) = (u - v)^2 / 2`: the sample-variance kernel.
pub fn kernel_half_squared_distance() -> Result<Kernel> {
    Kernel::new(2, true, |u: &[f64]| 0.5 * (u[0] - u[1]) * (u[0] - u[1]))
}

/// The sample mean on `[0,1]^n`; `(1, 0)`-weak interactions with exact
/// seminorms `M = 1/n`, `J = 0`.
pub fn make_mean(n: usize) -> Result<Statistic<f64>> {
    if n == 0 {
        return Err(Error::invalid("mean requires n >= 1"));
    }
    let nf = n as f64;
    // eight-lane sum: fixed association for determinism, pipelined adds
    let sum = |x: &[f64]| -> f64 {
        let mut acc = [0.0_f64; 8];
        let mut chunks = x.chunks_exact(8);
        for c in &mut chunks {
            for (a, v) in acc.iter_mut().zip(c) {
                *a += v;
            }
        }
        let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3]))
            + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
        for &v in chunks.remainder() {
            s += v;
        }
        s
    };
    Ok(
        Statistic::new("mean", n, move |x: &[f64]| sum(x) / nf)?
            .with_params(WeakInteractionParams::new(1.0, 0.0)?),
    )
}

/// V-statistic `V(x) = n^{-m} sum over all multi-indices j of
/// kappa(x_{j_1}, ..., x_{j_m})`, including repeated indices;
/// `(2m, 4m(m-1))`-weak interactions.
pub fn make_v_statistic(kernel: &Kernel, n: usize) -> Result<Statistic<f64>> {
    let m = kernel.order();
    let k = kernel.clone();
    make_v_statistic_indexed(
        m,
        n,
        move |_multi_index: &[usize], points: &[f64]| k.eval(points),
    )
}

/// V-statistic with a per-multi-index kernel provider; the provider receives
/// the multi-index and the selected point tuple and must stay within
/// `[-1, 1]`.
pub fn make_v_statistic_indexed(
    order: usize,
    n: usize,
    provider: impl Fn(&[usize], &[f64]) -> f64 + Send + Sync + 'static,
) -> Result<Statistic<f64>> {
    if order == 0 || order >= n {
        return Err(Error::invalid(format!(
            "V-statistic requires 1 <= m < n, got m = {order}, n = {n}"
        )));
    }
    let m = order;
    let norm = (n as f64).powi(m as i32);
    let params = WeakInteractionParams::new(2.0 * m as f64, 4.0 * m as f64 * (m as f64 - 1.0))?;
    Ok(Statistic::new("vstat", n, move |x: &[f64]| {
        let mut sum = crate::numeric::CompensatedSum::default();
        let mut points = vec![0.0; m];
        for_each_assignment(n, m, |multi_index| {
            for (slot, &j) in multi_index.iter().enumerate() {
                points[slot] = x[j];
            }
            sum.add(provider(multi_index, &points));
        });
        sum.value() / norm
    })?
    .with_params(params))
}

/// U-statistic `U(x) = C(n, m)^{-1} sum over j_1 < ... < j_m of
/// kappa(x_{j_1}, ..., x_{j_m})`; `(2m, 4m^2)`-weak interactions.
///
/// For a symmetric kernel and iid inputs, `E[U] = E[kappa(X_1, ..., X_m)]`.
pub fn make_u_statistic(kernel: &Kernel, n: usize) -> Result<Statistic<f64>> {
    let m = kernel.order();
    if m == 0 || m >= n {
        return Err(Error::invalid(format!(
            "U-statistic requires 1 <= m < n, got m = {m}, n = {n}"
        )));
    }
    let k = kernel.clone();
    let count = binomial(n, m) as f64;
    let params = WeakInteractionParams::new(2.0 * m as f64, 4.0 * (m * m) as f64)?;
    Ok(Statistic::new("ustat", n, move |x: &[f64]| {
        let mut sum = crate::numeric::CompensatedSum::default();
        let mut points = vec![0.0; m];
        for combo in (0..n).combinations(m) {
            for (slot, &j) in combo.iter().enumerate() {
                points[slot] = x[j];
            }
            sum.add(k.eval(&points));
        }
        sum.value() / count
    })?
    .with_params(params))
}

fn binomial(n: usize, m: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..m {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// A weight function `F: [0,1] -> R` for L-statistics, with its supremum
/// norm and Lipschitz constant. Both norms are spot-checked by random
/// probing at construction.
#[derive(Clone)]
pub struct LWeight {
    func: WeightFn,
    sup_norm: f64,
    lip_const: f64,
}

impl LWeight {
    pub fn new(
        func: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sup_norm: f64,
        lip_const: f64,
    ) -> Result<Self> {
        if sup_norm.is_nan() || sup_norm < 0.0 || lip_const.is_nan() || lip_const < 0.0 {
            return Err(Error::invalid("L-weight norms must be nonnegative"));
        }
        let func: WeightFn = Arc::new(func);
        let mut rng = ChaCha12Rng::seed_from_u64(PROBE_SEED ^ 0xF00D);
        for _ in 0..PROBE_TRIALS {
            let s: f64 = rng.random();
            let t: f64 = rng.random();
            let fs = func(s);
            let ft = func(t);
            if !fs.is_finite() || fs.abs() > sup_norm + 1e-9 {
                return Err(Error::invalid(format!(
                    "L-weight value {fs} at {s} exceeds declared sup norm {sup_norm}"
                )));
            }
            if (fs - ft).abs() > lip_const * (s - t).abs() + 1e-9 {
                return Err(Error::invalid(format!(
                    "L-weight violates declared Lipschitz constant {lip_const} between {s} and {t}"
                )));
            }
        }
        Ok(Self {
            func,
            sup_norm,
            lip_const,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.func)(t)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn lip_const(&self) -> f64 {
        self.lip_const
    }

    /// Largest probed difference quotient `|F(s)-F(t)| / |s-t|` over random
    /// pairs at least `1e-2` apart (a lower bound on the true constant).
    pub fn probe_lipschitz(&self, trials: usize, seed: u64) -> f64 {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut best = 0.0_f64;
        let mut done = 0;
        while done < trials {
            let s: f64 = rng.random();
            let t: f64 = rng.random();
            if (s - t).abs() < 1e-2 {
                continue;
            }
            done += 1;
            best = best.max(((self.func)(s) - (self.func)(t)).abs() / (s - t).abs());
        }
        best
    }
}

/// L-statistic `f(x) = (1/n) sum_i F(i/n) x_(i)` over the ascending order
/// statistic; `(|F|_inf, |F|_Lip)`-weak interactions.
pub fn make_l_statistic(weight: &LWeight, n: usize) -> Result<Statistic<f64>> {
    if n < 2 {
        return Err(Error::invalid("L-statistic requires n >= 2"));
    }
    let coeffs: Vec<f64> = (1..=n)
        .map(|i| weight.eval(i as f64 / n as f64) / n as f64)
        .collect();
    let params = WeakInteractionParams::new(weight.sup_norm(), weight.lip_const())?;
    Ok(Statistic::new("lstat", n, move |x: &[f64]| {
        let mut sorted = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut sum = crate::numeric::CompensatedSum::default();
        for (c, v) in coeffs.iter().zip(sorted.iter()) {
            sum.add(c * v);
        }
        sum.value()
    })?
    .with_params(params))
}

/// The smoothed-median weight: 0 on `[0, zeta]`, rising linearly to
/// `1/(1/2 - zeta)` at `t = 1/2`, mirrored on the right half, 0 on
/// `[1 - zeta, 1]`. Lipschitz constant `(1/2 - zeta)^{-2}`.
pub fn smoothed_median_weight(zeta: f64) -> Result<LWeight> {
    if !(zeta > 0.0 && zeta < 0.5) {
        return Err(Error::invalid(format!(
            "smoothed median requires zeta in (0, 1/2), got {zeta}"
        )));
    }
    let denom = (0.5 - zeta) * (0.5 - zeta);
    let func = move |t: f64| -> f64 {
        if t <= zeta || t >= 1.0 - zeta {
            0.0
        } else if t <= 0.5 {
            (t - zeta) / denom
        } else {
            (1.0 - t - zeta) / denom
        }
    };
    LWeight::new(func, 1.0 / (0.5 - zeta), 1.0 / denom)
}

/// Smoothed median as an L-statistic with the weight above; declared
/// parameters `((1/2 - zeta)^{-1}, (1/2 - zeta)^{-2})`.
pub fn make_smoothed_median(zeta: f64, n: usize) -> Result<Statistic<f64>> {
    let weight = smoothed_median_weight(zeta)?;
    let stat = make_l_statistic(&weight, n)?;
    Ok(Statistic::new("smoothed_median", n, move |x: &[f64]| stat.eval(x))?
        .with_params(WeakInteractionParams::new(
            1.0 / (0.5 - zeta),
            1.0 / ((0.5 - zeta) * (0.5 - zeta)),
        )?))
}

/// Lookup-table statistic over the index alphabet `{0, ..., k-1}`:
/// `f(x) = table[sum_i x_i k^i]`. Useful as an arbitrary bounded function
/// for enumeration-based verification.
pub fn make_table_statistic(
    alphabet_size: usize,
    n: usize,
    table: Vec<f64>,
) -> Result<Statistic<usize>> {
    if alphabet_size == 0 || n == 0 {
        return Err(Error::invalid("table statistic needs k >= 1 and n >= 1"));
    }
    let expected = alphabet_size
        .checked_pow(n as u32)
        .ok_or_else(|| Error::invalid("table size overflows"))?;
    if table.len() != expected {
        return Err(Error::invalid(format!(
            "table length {} does not match k^n = {expected}",
            table.len()
        )));
    }
    if table.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("table entries must be finite"));
    }
    let k = alphabet_size;
    Statistic::new("table", n, move |x: &[usize]| {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &xi in x {
            assert!(xi < k, "table statistic point {xi} outside alphabet 0..{k}");
            idx += xi * stride;
            stride *= k;
        }
        table[idx]
    })
}
