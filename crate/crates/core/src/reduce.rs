//! Order-fixed reductions so sums do not depend on the thread count.

/// Cells per work unit in every parallel sweep.
pub(crate) const CHUNK: usize = 2048;

/// Pairwise sum in a fixed tree order.
pub(crate) fn tree_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => {
            let mid = n / 2;
            tree_sum(&v[..mid]) + tree_sum(&v[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|x| x as f64).collect();
        assert_eq!(tree_sum(&v), 500_500.0);
        assert_eq!(tree_sum(&[]), 0.0);
    }
}
