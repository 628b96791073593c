//! Small numeric helpers shared across modules.

/// Compensated (Neumaier) summation. Keeps absolute error at a few ulp of
/// the result regardless of the number of terms, which the 1e-12 mass and
/// energy contracts rely on for large N.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// Euclidean norm of a slice.
pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    neumaier_sum(v.iter().map(|x| x * x)).max(0.0).sqrt()
}

/// Merge two sorted slices, returning the merged values together with the
/// index each element of `a` and `b` landed at.
pub(crate) fn merge_sorted(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>, Vec<usize>) {
    let mut merged = Vec::with_capacity(a.len() + b.len());
    let mut ia = Vec::with_capacity(a.len());
    let mut ib = Vec::with_capacity(b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x <= y,
            (Some(_), None) => true,
            _ => false,
        };
        if take_a {
            ia.push(merged.len());
            merged.push(a[i]);
            i += 1;
        } else {
            ib.push(merged.len());
            merged.push(b[j]);
            j += 1;
        }
    }
    (merged, ia, ib)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_handles_many_small_terms() {
        let n = 1 << 20;
        let s = neumaier_sum((0..n).map(|_| 1.0 / n as f64));
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn merge_keeps_indices() {
        let a = [0.0, 2.0, 4.0];
        let b = [1.0, 2.0, 5.0];
        let (m, ia, ib) = merge_sorted(&a, &b);
        assert_eq!(m, vec![0.0, 1.0, 2.0, 2.0, 4.0, 5.0]);
        for (k, &idx) in ia.iter().enumerate() {
            assert_eq!(m[idx], a[k]);
        }
        for (k, &idx) in ib.iter().enumerate() {
            assert_eq!(m[idx], b[k]);
        }
    }
}
