//! Per-ball scalar formulas shared by the fast operators and the oracle. Both
//! feed them identical member sequences, so their outputs agree bit for bit.

/// `|B|^{alpha/Q - 1} * integral`, where `acc` is the raw node sum.
#[inline]
pub(crate) fn scaled(acc: f64, count: usize, vol: f64, exponent: f64) -> f64 {
    let measure = count as f64 * vol;
    acc * vol * measure.powf(exponent)
}

/// Mean oscillation from the node values of one ball, in ascending order.
/// Values are shifted by the first one before averaging, so a constant
/// field gives exactly zero.
pub(crate) fn oscillation<I>(mut values: I, count: usize) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let n = count as f64;
    let Some(base) = values.clone().next() else {
        return 0.0;
    };
    let mut sum = 0.0;
    for v in values.clone() {
        sum += v - base;
    }
    let mean = sum / n;
    let mut dev = 0.0;
    for v in values.by_ref() {
        dev += ((v - base) - mean).abs();
    }
    dev / n
}

#[inline]
pub(crate) fn exponent(alpha: f64, q: f64) -> f64 {
    alpha / q - 1.0
}
