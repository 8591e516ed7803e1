//! Sample Kendall's tau in O(n log n) (Knight's algorithm).

use crate::error::{Error, Result};

/// Kendall's tau-a: `(concordant - discordant) / (n choose 2)`; tied pairs
/// count as neither.
pub fn empirical_tau(samples: &[(f64, f64)]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid(format!("empirical tau needs at least 2 samples, got {n}")));
    }
    if samples.iter().any(|(x, y)| x.is_nan() || y.is_nan()) {
        return Err(Error::invalid("empirical tau: samples contain NaN"));
    }
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    // Pairs tied in x, and pairs tied in both coordinates.
    let mut tied_x = 0u64;
    let mut tied_xy = 0u64;
    let mut run_x = 1u64;
    let mut run_xy = 1u64;
    for i in 1..n {
        if pts[i].0 == pts[i - 1].0 {
            run_x += 1;
            if pts[i].1 == pts[i - 1].1 {
                run_xy += 1;
            } else {
                tied_xy += run_xy * (run_xy - 1) / 2;
                run_xy = 1;
            }
        } else {
            tied_x += run_x * (run_x - 1) / 2;
            tied_xy += run_xy * (run_xy - 1) / 2;
            run_x = 1;
            run_xy = 1;
        }
    }
    tied_x += run_x * (run_x - 1) / 2;
    tied_xy += run_xy * (run_xy - 1) / 2;

    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut tied_y = 0u64;
    let mut run_y = 1u64;
    for i in 1..n {
        if ys[i] == ys[i - 1] {
            run_y += 1;
        } else {
            tied_y += run_y * (run_y - 1) / 2;
            run_y = 1;
        }
    }
    tied_y += run_y * (run_y - 1) / 2;

    // concordant - discordant
    let s = n0 as i128 - tied_x as i128 - tied_y as i128 + tied_xy as i128 - 2 * swaps as i128;
    Ok(s as f64 / n0 as f64)
}

/// Stable merge sort returning the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = v.split_at_mut(mid);
    let (bl, br) = buf.split_at_mut(mid);
    let mut swaps = merge_count(left, bl) + merge_count(right, br);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if right[j] < left[i] {
            buf[k] = right[j];
            swaps += (left.len() - i) as u64;
            j += 1;
        } else {
            buf[k] = left[i];
            i += 1;
        }
        k += 1;
    }
    while i < left.len() {
        buf[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        buf[k] = right[j];
        j += 1;
        k += 1;
    }
    v.copy_from_slice(&buf[..n]);
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(s: &[(f64, f64)]) -> f64 {
        let n = s.len();
        let mut acc = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                let p = (s[i].0 - s[j].0) * (s[i].1 - s[j].1);
                acc += if p > 0.0 { 1 } else if p < 0.0 { -1 } else { 0 };
            }
        }
        acc as f64 / (n * (n - 1) / 2) as f64
    }

    #[test]
    fn perfect_orderings() {
        assert_eq!(empirical_tau(&[(0.0, 0.0), (1.0, 1.0)]).unwrap(), 1.0);
        assert_eq!(empirical_tau(&[(0.0, 1.0), (1.0, 0.0)]).unwrap(), -1.0);
        assert!(empirical_tau(&[(0.5, 0.5)]).is_err());
    }

    #[test]
    fn all_ties_give_zero() {
        let s = vec![(1.0, 2.0); 5];
        assert_eq!(empirical_tau(&s).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn agrees_with_pairwise_count(pts in proptest::collection::vec((0u8..6, 0u8..6), 2..60)) {
            let s: Vec<(f64, f64)> = pts.iter().map(|&(a, b)| (a as f64, b as f64)).collect();
            let fast = empirical_tau(&s).unwrap();
            prop_assert!((fast - brute(&s)).abs() < 1e-12);
        }
    }
}
