//! Exact optimum by enumeration of basic feasible solutions.

use super::{GeneralFormLp, LpError};
use crate::scalar::Scalar;

/// Enumeration budget: the number of column subsets the oracle will try.
pub const ORACLE_MAX_BASES: u128 = 2_000_000;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Optimal { objective: f64, z: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl OracleOutcome {
    pub fn objective(&self) -> Option<f64> {
        match self {
            OracleOutcome::Optimal { objective, .. } => Some(*objective),
            _ => None,
        }
    }
}

/// `A x = b, x ≥ 0` with `A` dense row-major.
struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
}

/// Row-reduces `[A | b]`, dropping dependent rows. `None` if inconsistent.
fn independent_rows(a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &bi)| r.iter().copied().chain(std::iter::once(bi)).collect())
        .collect();
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(1.0f64, |s, v| s.max(v.abs()));
    let tol = EPS * scale;
    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..m).max_by(|&i, &j| rows[i][col].abs().total_cmp(&rows[j][col].abs()))
        else {
            break;
        };
        if rows[p][col].abs() <= tol {
            continue;
        }
        rows.swap(rank, p);
        for i in 0..m {
            if i != rank {
                let f = rows[i][col] / rows[rank][col];
                if f != 0.0 {
                    for k in col..=n {
                        rows[i][k] -= f * rows[rank][k];
                    }
                }
            }
        }
        rank += 1;
    }
    if rows[rank..].iter().any(|r| r[n].abs() > tol) {
        return None;
    }
    rows.truncate(rank);
    let b = rows.iter().map(|r| r[n]).collect();
    let a = rows.into_iter().map(|mut r| {
        r.pop();
        r
    });
    Some((a.collect(), b))
}

/// Solves the square system `B x = b` (columns `cols` of `a`); `None` if singular.
fn solve_basis(a: &[Vec<f64>], b: &[f64], cols: &[usize]) -> Option<Vec<f64>> {
    let m = cols.len();
    let mut mat: Vec<Vec<f64>> = (0..m)
        .map(|i| cols.iter().map(|&c| a[i][c]).chain(std::iter::once(b[i])).collect())
        .collect();
    for col in 0..m {
        let p = (col..m).max_by(|&i, &j| mat[i][col].abs().total_cmp(&mat[j][col].abs()))?;
        if mat[p][col].abs() < 1e-10 {
            return None;
        }
        mat.swap(col, p);
        for i in 0..m {
            if i != col {
                let f = mat[i][col] / mat[col][col];
                if f != 0.0 {
                    for k in col..=m {
                        mat[i][k] -= f * mat[col][k];
                    }
                }
            }
        }
    }
    Some((0..m).map(|i| mat[i][m] / mat[i][i]).collect())
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Best basic feasible solution of `min cᵀx, A x = b, x ≥ 0`.
/// `Ok(None)` when no basic feasible solution exists.
fn best_vertex(sf: &StandardForm) -> Result<Option<(f64, Vec<f64>)>, LpError> {
    let n = sf.c.len();
    let Some((a, b)) = independent_rows(&sf.a, &sf.b) else {
        return Ok(None);
    };
    let m = a.len();
    if m == 0 {
        return Ok(Some((0.0, vec![0.0; n])));
    }
    let count = binomial(n, m);
    if count > ORACLE_MAX_BASES {
        return Err(LpError::TooLarge(count));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_subset(n, m, |cols| {
        let Some(xb) = solve_basis(&a, &b, cols) else {
            return;
        };
        let scale = xb.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        if xb.iter().any(|&v| v < -1e-9 * scale) {
            return;
        }
        let mut x = vec![0.0; n];
        for (&c, &v) in cols.iter().zip(&xb) {
            x[c] = v.max(0.0);
        }
        let obj: f64 = sf.c.iter().zip(&x).map(|(c, v)| c * v).sum();
        if best.as_ref().is_none_or(|(bo, _)| obj < *bo) {
            best = Some((obj, x));
        }
    });
    Ok(best)
}

/// Exact optimum of the primal, or a certificate of infeasibility or
/// unboundedness. Intended for small test instances.
pub fn vertex_oracle<T: Scalar>(lp: &GeneralFormLp<T>) -> Result<OracleOutcome, LpError> {
    let n1 = lp.n_nonneg();
    let n2 = lp.n_free();
    let m1 = lp.n_ineq();
    let m2 = lp.n_eq();
    let width = n1 + 2 * n2 + m1;
    let mut a = vec![vec![0.0; width]; m1 + m2];
    let expand = |row: &mut Vec<f64>, entries: &mut dyn Iterator<Item = (usize, T)>| {
        for (c, v) in entries {
            let v = v.as_f64();
            if c < n1 {
                row[c] += v;
            } else {
                row[c] += v;
                row[c + n2] -= v;
            }
        }
    };
    for (i, row) in a.iter_mut().take(m1).enumerate() {
        expand(row, &mut lp.ineq().row(i));
        row[n1 + 2 * n2 + i] = -1.0;
    }
    for (i, row) in a.iter_mut().skip(m1).enumerate() {
        expand(row, &mut lp.eq().row(i));
    }
    let b: Vec<f64> = lp.rhs_ineq().iter().chain(lp.rhs_eq()).map(|v| v.as_f64()).collect();
    let d: Vec<f64> = lp.cost().iter().map(|v| v.as_f64()).collect();
    let mut c = vec![0.0; width];
    c[..n1 + n2].copy_from_slice(&d);
    for j in 0..n2 {
        c[n1 + n2 + j] = -d[n1 + j];
    }

    let primal = StandardForm { a: a.clone(), b, c: c.clone() };
    let Some((objective, x)) = best_vertex(&primal)? else {
        return Ok(OracleOutcome::Infeasible);
    };

    // recession directions: A r = 0, Σ r = 1, r ≥ 0
    let mut ray_a = a;
    ray_a.push(vec![1.0; width]);
    let mut ray_b = vec![0.0; m1 + m2];
    ray_b.push(1.0);
    let rays = StandardForm { a: ray_a, b: ray_b, c };
    if let Some((slope, _)) = best_vertex(&rays)? {
        if slope < -1e-9 {
            return Ok(OracleOutcome::Unbounded);
        }
    }

    let z = (0..n1 + n2)
        .map(|j| if j < n1 { x[j] } else { x[j] - x[j + n2] })
        .collect();
    Ok(OracleOutcome::Optimal { objective, z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neurolp::LpBuilder;

    #[test]
    fn subsets_enumerated() {
        let mut all = Vec::new();
        for_each_subset(4, 2, |s| all.push(s.to_vec()));
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
        assert_eq!(binomial(20, 8), 125_970);
    }

    #[test]
    fn min_x_at_least_one() {
        let mut b = LpBuilder::<f64>::new(1, 0);
        b.set_cost(0, 1.0);
        b.add_ge([(0, 1.0)], 1.0);
        assert_eq!(vertex_oracle(&b.build()).unwrap().objective(), Some(1.0));
    }

    #[test]
    fn duplicated_rows_do_not_change_optimum() {
        // min x + y  s.t. x + 2y = 4 (twice), x - y ≥ -1
        let mut b = LpBuilder::<f64>::new(2, 0);
        b.set_cost(0, 1.0).set_cost(1, 1.0);
        b.add_eq([(0, 1.0), (1, 2.0)], 4.0);
        b.add_ge([(0, 1.0), (1, -1.0)], -1.0);
        let single = vertex_oracle(&b.clone().build()).unwrap();
        b.add_eq([(0, 1.0), (1, 2.0)], 4.0);
        let dup = vertex_oracle(&b.build()).unwrap();
        // x = 4 - 2y and x ≥ y - 1 give y ≤ 5/3; objective 4 - y
        assert!((single.objective().unwrap() - 7.0 / 3.0).abs() < 1e-12);
        assert!((dup.objective().unwrap() - 7.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut b = LpBuilder::<f64>::new(1, 0);
        b.add_ge([(0, 1.0)], 2.0);
        b.add_ge([(0, -1.0)], -1.0);
        assert_eq!(vertex_oracle(&b.build()).unwrap(), OracleOutcome::Infeasible);

        let mut b = LpBuilder::<f64>::new(1, 1);
        b.set_cost(1, 1.0);
        b.add_ge([(0, 1.0), (1, 1.0)], 0.0);
        assert_eq!(vertex_oracle(&b.build()).unwrap(), OracleOutcome::Unbounded);

        let mut b = LpBuilder::<f64>::new(0, 1);
        b.add_eq([(0, 1.0)], 1.0);
        b.add_eq([(0, 1.0)], 2.0);
        assert_eq!(vertex_oracle(&b.build()).unwrap(), OracleOutcome::Infeasible);
    }

    #[test]
    fn free_variables_recovered() {
        // min y s.t. y ≥ -3, y free
        let mut b = LpBuilder::<f64>::new(0, 1);
        b.set_cost(0, 1.0);
        b.add_ge([(0, 1.0)], -3.0);
        match vertex_oracle(&b.build()).unwrap() {
            OracleOutcome::Optimal { objective, z } => {
                assert_eq!(objective, -3.0);
                assert_eq!(z, vec![-3.0]);
            }
            other => panic!("{other:?}"),
        }
    }
}
