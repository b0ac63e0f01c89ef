use super::GeneralFormLp;
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// Diagonal row and column scales from Ruiz equilibration.
///
/// The scaled problem has `M̂ = R M C`, `d̂ = C d`, `r̂ = R r`; its solutions
/// map back through `z = C ẑ` and `ξ = R ξ̂`. Positive scales keep every sign
/// constraint and inequality direction intact.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling<T> {
    pub col: Vec<T>,
    pub row: Vec<T>,
}

impl<T: Scalar> Scaling<T> {
    pub fn identity(lp: &GeneralFormLp<T>) -> Self {
        Scaling {
            col: vec![T::one(); lp.n_vars()],
            row: vec![T::one(); lp.n_ineq() + lp.n_eq()],
        }
    }

    /// Original state to scaled state.
    pub fn to_scaled(&self, u: &[T]) -> Vec<T> {
        let n = self.col.len();
        u.iter()
            .enumerate()
            .map(|(i, &v)| if i < n { v / self.col[i] } else { v / self.row[i - n] })
            .collect()
    }

    pub fn to_original(&self, u: &[T]) -> Vec<T> {
        let n = self.col.len();
        u.iter()
            .enumerate()
            .map(|(i, &v)| if i < n { v * self.col[i] } else { v * self.row[i - n] })
            .collect()
    }
}

fn scale_matrix<T: Scalar>(m: &CsrMatrix<T>, row: &[T], col: &[T]) -> CsrMatrix<T> {
    let mut trip = Vec::with_capacity(m.nnz());
    for r in 0..m.rows() {
        for (c, v) in m.row(r) {
            trip.push((r, c, row[r] * v * col[c]));
        }
    }
    CsrMatrix::from_triplets(m.rows(), m.cols(), trip)
}

/// Ruiz equilibration: alternately divides each row and column by the square
/// root of its largest magnitude, driving all of them towards one.
pub fn equilibrate<T: Scalar>(lp: &GeneralFormLp<T>, iterations: usize) -> (GeneralFormLp<T>, Scaling<T>) {
    let n = lp.n_vars();
    let m1 = lp.n_ineq();
    let mut s = Scaling::identity(lp);
    for _ in 0..iterations {
        let mut row_max = vec![T::zero(); s.row.len()];
        let mut col_max = vec![T::zero(); n];
        for (off, m) in [(0, lp.ineq()), (m1, lp.eq())] {
            for r in 0..m.rows() {
                for (c, v) in m.row(r) {
                    let a = (v * s.row[off + r] * s.col[c]).abs();
                    row_max[off + r] = row_max[off + r].max(a);
                    col_max[c] = col_max[c].max(a);
                }
            }
        }
        for (f, mx) in s.row.iter_mut().zip(&row_max) {
            if *mx > T::zero() {
                *f /= mx.sqrt();
            }
        }
        for (f, mx) in s.col.iter_mut().zip(&col_max) {
            if *mx > T::zero() {
                *f /= mx.sqrt();
            }
        }
    }
    let (r1, r2) = s.row.split_at(m1);
    let cost = lp.cost().iter().zip(&s.col).map(|(&c, &f)| c * f).collect();
    let rhs_ineq = lp.rhs_ineq().iter().zip(r1).map(|(&v, &f)| v * f).collect();
    let rhs_eq = lp.rhs_eq().iter().zip(r2).map(|(&v, &f)| v * f).collect();
    let scaled = GeneralFormLp::new(
        lp.n_nonneg(),
        lp.n_free(),
        cost,
        scale_matrix(lp.ineq(), r1, &s.col),
        rhs_ineq,
        scale_matrix(lp.eq(), r2, &s.col),
        rhs_eq,
    )
    .expect("scaling preserves dimensions");
    (scaled, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neurolp::LpBuilder;

    #[test]
    fn round_trip_and_kkt_invariance() {
        let mut b = LpBuilder::<f64>::new(2, 1);
        b.set_cost(0, 3.0).set_cost(1, 0.01).set_cost(2, -2.0);
        b.add_ge([(0, 100.0), (1, 0.02)], 4.0);
        b.add_eq([(1, 0.5), (2, 8.0)], 1.0);
        let lp = b.build();
        let (scaled, s) = equilibrate(&lp, 10);
        let u: Vec<f64> = vec![0.3, 1.2, -0.7, 0.4, 2.0];
        let back = s.to_original(&s.to_scaled(&u));
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        // Objective values agree between the two spaces.
        let su = s.to_scaled(&u);
        assert!((lp.objective(&u) - scaled.objective(&su)).abs() < 1e-12);
        assert!((lp.dual_objective(&u[3..]) - scaled.dual_objective(&su[3..])).abs() < 1e-12);
        for r in 0..scaled.ineq().rows() {
            let mx = scaled.ineq().row(r).map(|(_, v)| v.abs()).fold(0.0, f64::max);
            assert!((mx - 1.0).abs() < 1e-2, "row max {mx}");
        }
    }
}
