//! Fixtures shared by the criterion benches.

use anova_fourier::{Complex64, GroupedIndexSet, SearchSet, TermFamily};

/// Full-grid set on all terms up to order `n.len()` in `d` dimensions.
pub fn grid_set(d: usize, n: &[u64]) -> GroupedIndexSet {
    let family = TermFamily::up_to_order(d, n.len()).expect("valid order");
    SearchSet::FullGrid { n: n.to_vec() }.build(&family).expect("valid grid")
}

/// Deterministic, slowly decaying coefficients.
pub fn coefficients(len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|i| {
            let t = i as f64;
            Complex64::new((0.37 * t).sin(), (0.11 * t).cos()) / (1.0 + t).sqrt()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures() {
        let set = grid_set(4, &[8, 4]);
        assert_eq!(set.len(), 1 + 4 * 7 + 6 * 9);
        assert_eq!(coefficients(set.len()).len(), set.len());
    }
}
