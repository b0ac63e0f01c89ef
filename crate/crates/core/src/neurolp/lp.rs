use super::LpError;
use crate::scalar::{dot, Scalar};
use crate::sparse::CsrMatrix;

/// `min dᵀz s.t. M1 z ≥ r1, M2 z = r2, z1 ≥ 0` with `z = (z1, z2)`.
///
/// `M1 = (M11, M12)` and `M2 = (M21, M22)` are stored row-wise over the full
/// variable vector; the nonnegative block `z1` occupies the leading columns.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralFormLp<T> {
    n_nonneg: usize,
    n_free: usize,
    ineq: CsrMatrix<T>,
    eq: CsrMatrix<T>,
    cost: Vec<T>,
    rhs_ineq: Vec<T>,
    rhs_eq: Vec<T>,
}

impl<T: Scalar> GeneralFormLp<T> {
    pub fn new(
        n_nonneg: usize,
        n_free: usize,
        cost: Vec<T>,
        ineq: CsrMatrix<T>,
        rhs_ineq: Vec<T>,
        eq: CsrMatrix<T>,
        rhs_eq: Vec<T>,
    ) -> Result<Self, LpError> {
        let n = n_nonneg + n_free;
        if cost.len() != n {
            return Err(LpError::Dimension(format!("cost has {} entries, expected {n}", cost.len())));
        }
        if ineq.cols() != n || eq.cols() != n {
            return Err(LpError::Dimension("constraint blocks must span all variables".into()));
        }
        if ineq.rows() != rhs_ineq.len() || eq.rows() != rhs_eq.len() {
            return Err(LpError::Dimension("right-hand side length mismatch".into()));
        }
        Ok(GeneralFormLp { n_nonneg, n_free, ineq, eq, cost, rhs_ineq, rhs_eq })
    }

    /// Number of primal variables `|z|`.
    pub fn n_vars(&self) -> usize {
        self.n_nonneg + self.n_free
    }

    pub fn n_nonneg(&self) -> usize {
        self.n_nonneg
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Inequality rows (`|r1|`, `|ξ1|`).
    pub fn n_ineq(&self) -> usize {
        self.ineq.rows()
    }

    /// Equality rows (`|r2|`, `|ξ2|`).
    pub fn n_eq(&self) -> usize {
        self.eq.rows()
    }

    /// Length of the state vector `u = (z, ξ)`.
    pub fn state_len(&self) -> usize {
        self.n_vars() + self.n_ineq() + self.n_eq()
    }

    pub fn ineq(&self) -> &CsrMatrix<T> {
        &self.ineq
    }

    pub fn eq(&self) -> &CsrMatrix<T> {
        &self.eq
    }

    pub fn cost(&self) -> &[T] {
        &self.cost
    }

    pub fn rhs_ineq(&self) -> &[T] {
        &self.rhs_ineq
    }

    pub fn rhs_eq(&self) -> &[T] {
        &self.rhs_eq
    }

    pub fn objective(&self, z: &[T]) -> T {
        dot(&self.cost, &z[..self.n_vars()])
    }

    /// `rᵀξ`
    pub fn dual_objective(&self, xi: &[T]) -> T {
        let m1 = self.n_ineq();
        dot(&self.rhs_ineq, &xi[..m1]) + dot(&self.rhs_eq, &xi[m1..])
    }

    /// Dense copies of the four blocks `(M11, M12, M21, M22)`.
    pub fn dense_blocks(&self) -> [Vec<Vec<T>>; 4] {
        let split = |m: &CsrMatrix<T>| {
            let d = m.to_dense();
            let left = d.iter().map(|r| r[..self.n_nonneg].to_vec()).collect();
            let right = d.iter().map(|r| r[self.n_nonneg..].to_vec()).collect();
            (left, right)
        };
        let (m11, m12) = split(&self.ineq);
        let (m21, m22) = split(&self.eq);
        [m11, m12, m21, m22]
    }

    pub fn cast<U: Scalar>(&self) -> GeneralFormLp<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::of(x.as_f64())).collect();
        GeneralFormLp {
            n_nonneg: self.n_nonneg,
            n_free: self.n_free,
            ineq: self.ineq.cast(),
            eq: self.eq.cast(),
            cost: conv(&self.cost),
            rhs_ineq: conv(&self.rhs_ineq),
            rhs_eq: conv(&self.rhs_eq),
        }
    }
}

/// Row-by-row construction of a [`GeneralFormLp`].
#[derive(Debug, Clone)]
pub struct LpBuilder<T> {
    n_nonneg: usize,
    n_free: usize,
    cost: Vec<T>,
    ineq: Vec<(usize, usize, T)>,
    rhs_ineq: Vec<T>,
    eq: Vec<(usize, usize, T)>,
    rhs_eq: Vec<T>,
}

impl<T: Scalar> LpBuilder<T> {
    pub fn new(n_nonneg: usize, n_free: usize) -> Self {
        LpBuilder {
            n_nonneg,
            n_free,
            cost: vec![T::zero(); n_nonneg + n_free],
            ineq: Vec::new(),
            rhs_ineq: Vec::new(),
            eq: Vec::new(),
            rhs_eq: Vec::new(),
        }
    }

    pub fn set_cost(&mut self, var: usize, c: T) -> &mut Self {
        self.cost[var] = c;
        self
    }

    /// `Σ coef·z ≥ rhs`
    pub fn add_ge(&mut self, terms: impl IntoIterator<Item = (usize, T)>, rhs: T) -> usize {
        let row = self.rhs_ineq.len();
        self.ineq.extend(terms.into_iter().map(|(c, v)| (row, c, v)));
        self.rhs_ineq.push(rhs);
        row
    }

    /// `Σ coef·z ≤ rhs`, stored negated.
    pub fn add_le(&mut self, terms: impl IntoIterator<Item = (usize, T)>, rhs: T) -> usize {
        self.add_ge(terms.into_iter().map(|(c, v)| (c, -v)), -rhs)
    }

    pub fn add_eq(&mut self, terms: impl IntoIterator<Item = (usize, T)>, rhs: T) -> usize {
        let row = self.rhs_eq.len();
        self.eq.extend(terms.into_iter().map(|(c, v)| (row, c, v)));
        self.rhs_eq.push(rhs);
        row
    }

    pub fn n_ineq(&self) -> usize {
        self.rhs_ineq.len()
    }

    pub fn n_eq(&self) -> usize {
        self.rhs_eq.len()
    }

    pub fn build(self) -> GeneralFormLp<T> {
        let n = self.n_nonneg + self.n_free;
        let ineq = CsrMatrix::from_triplets(self.rhs_ineq.len(), n, self.ineq);
        let eq = CsrMatrix::from_triplets(self.rhs_eq.len(), n, self.eq);
        GeneralFormLp::new(self.n_nonneg, self.n_free, self.cost, ineq, self.rhs_ineq, eq, self.rhs_eq)
            .expect("builder keeps dimensions consistent")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_negates_le_rows() {
        let mut b = LpBuilder::<f64>::new(2, 1);
        b.set_cost(0, 1.0);
        b.add_le([(0, 1.0), (2, 2.0)], 3.0);
        b.add_eq([(1, 1.0)], 4.0);
        let lp = b.build();
        assert_eq!(lp.ineq().get(0, 2), -2.0);
        assert_eq!(lp.rhs_ineq(), &[-3.0]);
        assert_eq!(lp.state_len(), 5);
        let [m11, m12, m21, m22] = lp.dense_blocks();
        assert_eq!(m11, vec![vec![-1.0, 0.0]]);
        assert_eq!(m12, vec![vec![-2.0]]);
        assert_eq!(m21, vec![vec![0.0, 1.0]]);
        assert_eq!(m22, vec![vec![0.0]]);
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let m = CsrMatrix::<f64>::zeros(1, 2);
        let e = CsrMatrix::<f64>::zeros(0, 2);
        assert!(GeneralFormLp::new(2, 0, vec![1.0], m.clone(), vec![0.0], e.clone(), vec![]).is_err());
        assert!(GeneralFormLp::new(2, 0, vec![1.0, 1.0], m, vec![], e, vec![]).is_err());
    }
}
