//! Small numeric helpers used by the long summations in this crate.

/// Compensated (Kahan) accumulator.
///
/// The O(n) sums in [`crate::exact1n`] mix terms of very different
/// magnitudes and, for the relative-completions expectation, of both signs;
/// plain accumulation loses digits long before `n = 10^8`.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    err: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.err;
        let t = self.sum + y;
        self.err = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Relative closeness with an absolute floor for values near zero.
pub fn rel_close(a: f64, b: f64, rel_tol: f64, abs_floor: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= rel_tol * scale + abs_floor
}

/// Strictly positive and finite; rejects NaN and infinities in one check.
pub fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}
