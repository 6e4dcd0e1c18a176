//! Small deterministic summation helpers.
//!
//! All reductions in this crate run in a fixed canonical order so that
//! results do not depend on thread count; Neumaier compensation keeps the
//! accumulated rounding error near one ulp.

/// SplitMix64 finalizer; used to derive seeds and deterministic tables.
pub(crate) fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Map a 64-bit hash to `[0, 1)` using the top 53 bits.
pub(crate) fn hash_to_unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Neumaier-compensated sum over `values` in slice order.
pub(crate) fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Streaming variant of [`compensated_sum`].
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean of a nonempty slice.
pub(crate) fn mean(values: &[f64]) -> f64 {
    compensated_sum(values) / values.len() as f64
}

/// Population variance (divisor `len`) of a nonempty slice.
pub(crate) fn population_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    let mut acc = CompensatedSum::default();
    for &v in values {
        let d = v - m;
        acc.add(d * d);
    }
    (acc.value() / values.len() as f64).max(0.0)
}

/// Unbiased sample variance (divisor `len - 1`); 0 for slices of length < 2.
pub(crate) fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let mut acc = CompensatedSum::default();
    for &v in values {
        let d = v - m;
        acc.add(d * d);
    }
    (acc.value() / (values.len() - 1) as f64).max(0.0)
}
