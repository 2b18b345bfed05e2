//! Deterministic reductions.
//!
//! Monte-Carlo statistics must not depend on how trials were scheduled across
//! threads. Per-trial values are therefore stored in a buffer indexed by trial
//! number and reduced with a fixed-shape pairwise tree, which is both
//! order-deterministic and has O(log n) error growth.

/// Pairwise (cascade) summation over a slice. Empty input sums to zero.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 32;
    if xs.len() <= BASE {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise mean; zero for an empty slice.
pub fn pairwise_mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    pairwise_sum(xs) / xs.len() as f64
}
