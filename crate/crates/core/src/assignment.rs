//! Rectangular linear assignment (shortest augmenting paths with potentials).

use crate::scalar::Scalar;

/// Minimum-cost assignment of every row to a distinct column.
///
/// `cost` is `rows × cols` with `rows <= cols`; entries may be `+∞` to forbid
/// a pairing. Returns `col_of[row]`, or `None` when no finite assignment
/// exists.
pub fn min_cost_assignment<T: Scalar>(cost: &[Vec<T>]) -> Option<Vec<usize>> {
    let n = cost.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let m = cost[0].len();
    assert!(cost.iter().all(|r| r.len() == m), "ragged cost matrix");
    if n > m {
        return None;
    }
    // 1-based potentials as in the classical formulation; column 0 is virtual.
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = usize::MAX;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let c = cost[i0 - 1][j - 1];
                if c.is_finite() {
                    let cur = c - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta || j1 == usize::MAX {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return None;
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![usize::MAX; n];
    for j in 1..=m {
        if row_of[j] != 0 {
            col_of[row_of[j] - 1] = j - 1;
        }
    }
    Some(col_of)
}

/// Maximum-weight assignment; forbidden pairs are `-∞`.
pub fn max_weight_assignment<T: Scalar>(weight: &[Vec<T>]) -> Option<Vec<usize>> {
    let neg: Vec<Vec<T>> = weight.iter().map(|r| r.iter().map(|&w| -w).collect()).collect();
    min_cost_assignment(&neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(c: &[Vec<f64>], a: &[usize]) -> f64 {
        a.iter().enumerate().map(|(i, &j)| c[i][j]).sum()
    }

    fn brute(c: &[Vec<f64>]) -> Option<f64> {
        fn rec(c: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
            if i == c.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..used.len() {
                if !used[j] && c[i][j].is_finite() {
                    used[j] = true;
                    best = best.min(c[i][j] + rec(c, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        let v = rec(c, 0, &mut vec![false; c[0].len()]);
        v.is_finite().then_some(v)
    }

    #[test]
    fn small_square() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = min_cost_assignment(&c).unwrap();
        assert_eq!(total(&c, &a), 5.0);
        let w = max_weight_assignment(&c).unwrap();
        assert_eq!(total(&c, &w), 11.0);
    }

    #[test]
    fn forbidden_pairs() {
        let inf = f64::INFINITY;
        let c = vec![vec![inf, 1.0], vec![inf, 2.0]];
        assert_eq!(min_cost_assignment(&c), None);
        let c = vec![vec![inf, 1.0], vec![3.0, 2.0]];
        assert_eq!(min_cost_assignment(&c), Some(vec![1, 0]));
        assert_eq!(min_cost_assignment(&[vec![1.0f32], vec![2.0]]), None);
    }

    proptest! {
        #[test]
        fn matches_brute_force(rows in 1usize..5, extra in 0usize..3, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let c: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..rows + extra)
                    .map(|_| if r.gen_bool(0.15) { f64::INFINITY } else { r.gen_range(0..20) as f64 })
                    .collect())
                .collect();
            let got = min_cost_assignment(&c);
            match brute(&c) {
                None => prop_assert!(got.is_none()),
                Some(best) => {
                    let a = got.unwrap();
                    let mut seen = a.clone();
                    seen.sort();
                    seen.dedup();
                    prop_assert_eq!(seen.len(), rows);
                    prop_assert_eq!(total(&c, &a), best);
                }
            }
        }
    }
}
