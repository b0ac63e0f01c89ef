use std::fmt;

use super::{GeneralFormLp, LpError};
use crate::scalar::{inf_norm, neg_part, Scalar};

/// Per-condition violations (infinity norms) of a primal–dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktBreakdown<T> {
    pub primal_sign: T,
    pub primal_ineq: T,
    pub primal_eq: T,
    pub dual_sign: T,
    pub dual_ineq: T,
    pub dual_eq: T,
    pub gap: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KktTerm {
    PrimalSign,
    PrimalIneq,
    PrimalEq,
    DualSign,
    DualIneq,
    DualEq,
    Gap,
}

impl fmt::Display for KktTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KktTerm::PrimalSign => "primal sign",
            KktTerm::PrimalIneq => "primal inequality",
            KktTerm::PrimalEq => "primal equality",
            KktTerm::DualSign => "dual sign",
            KktTerm::DualIneq => "dual inequality",
            KktTerm::DualEq => "dual equality",
            KktTerm::Gap => "duality gap",
        };
        f.write_str(s)
    }
}

impl<T: Scalar> KktBreakdown<T> {
    fn terms(&self) -> [(KktTerm, T); 7] {
        [
            (KktTerm::PrimalSign, self.primal_sign),
            (KktTerm::PrimalIneq, self.primal_ineq),
            (KktTerm::PrimalEq, self.primal_eq),
            (KktTerm::DualSign, self.dual_sign),
            (KktTerm::DualIneq, self.dual_ineq),
            (KktTerm::DualEq, self.dual_eq),
            (KktTerm::Gap, self.gap),
        ]
    }

    pub fn max(&self) -> T {
        self.terms().iter().fold(T::zero(), |m, &(_, v)| if v > m || v.is_nan() { v } else { m })
    }

    /// The largest violation.
    pub fn dominant(&self) -> KktTerm {
        let mut best = (KktTerm::Gap, T::neg_infinity());
        for (t, v) in self.terms() {
            if v > best.1 {
                best = (t, v);
            }
        }
        best.0
    }

    pub fn primal_infeasibility(&self) -> T {
        self.primal_sign.max(self.primal_ineq).max(self.primal_eq)
    }

    pub fn dual_infeasibility(&self) -> T {
        self.dual_sign.max(self.dual_ineq).max(self.dual_eq)
    }
}

/// Scratch buffers for repeated energy/gradient evaluation.
pub(crate) struct Evaluator<'a, T> {
    lp: &'a GeneralFormLp<T>,
    primal_ineq: Vec<T>,
    primal_eq: Vec<T>,
    dual_lhs: Vec<T>,
    scratch: Vec<T>,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    pub(crate) fn new(lp: &'a GeneralFormLp<T>) -> Self {
        Evaluator {
            lp,
            primal_ineq: vec![T::zero(); lp.n_ineq()],
            primal_eq: vec![T::zero(); lp.n_eq()],
            dual_lhs: vec![T::zero(); lp.n_vars()],
            scratch: vec![T::zero(); lp.n_vars()],
        }
    }

    /// Energy and KKT breakdown at `u`; fills `grad` with `∇E(u)` when given.
    pub(crate) fn eval(&mut self, u: &[T], grad: Option<&mut [T]>) -> (T, KktBreakdown<T>) {
        let lp = self.lp;
        let n = lp.n_vars();
        let n1 = lp.n_nonneg();
        let m1 = lp.n_ineq();
        let two = T::of(2.0);
        let half = T::of(0.5);
        let (z, xi) = u.split_at(n);
        let (xi1, xi2) = xi.split_at(m1);
        let d = lp.cost();

        // primal residuals: a = M1 z - r1, e = M2 z - r2
        lp.ineq().mul_vec_into(z, &mut self.primal_ineq);
        for (a, r) in self.primal_ineq.iter_mut().zip(lp.rhs_ineq()) {
            *a -= *r;
        }
        lp.eq().mul_vec_into(z, &mut self.primal_eq);
        for (e, r) in self.primal_eq.iter_mut().zip(lp.rhs_eq()) {
            *e -= *r;
        }
        // dual residuals: w = M1ᵀξ1 + M2ᵀξ2; s1 = d1 - w1, s2 = w2 - d2
        self.dual_lhs.iter_mut().for_each(|w| *w = T::zero());
        lp.ineq().tr_mul_vec_acc(xi1, &mut self.dual_lhs);
        lp.eq().tr_mul_vec_acc(xi2, &mut self.dual_lhs);
        for (j, w) in self.dual_lhs.iter_mut().enumerate() {
            *w = if j < n1 { d[j] - *w } else { *w - d[j] };
        }
        let slack = &self.dual_lhs;

        let gap = lp.objective(z) - lp.dual_objective(xi);
        let sq = |v: T| v * v;
        let energy = half * gap * gap
            + z[..n1].iter().map(|&v| sq(neg_part(v))).sum::<T>()
            + xi1.iter().map(|&v| sq(neg_part(v))).sum::<T>()
            + half * self.primal_eq.iter().map(|&v| v * v).sum::<T>()
            + half * slack[n1..].iter().map(|&v| v * v).sum::<T>()
            + self.primal_ineq.iter().map(|&v| sq(neg_part(v))).sum::<T>()
            + slack[..n1].iter().map(|&v| sq(neg_part(v))).sum::<T>();

        let kkt = KktBreakdown {
            primal_sign: inf_norm(z[..n1].iter().map(|&v| neg_part(v))),
            primal_ineq: inf_norm(self.primal_ineq.iter().map(|&v| neg_part(v))),
            primal_eq: inf_norm(self.primal_eq.iter().copied()),
            dual_sign: inf_norm(xi1.iter().map(|&v| neg_part(v))),
            dual_ineq: inf_norm(slack[..n1].iter().map(|&v| neg_part(v))),
            dual_eq: inf_norm(slack[n1..].iter().copied()),
            gap: gap.abs(),
        };

        if let Some(g) = grad {
            debug_assert_eq!(g.len(), u.len());
            let (gz, gxi) = g.split_at_mut(n);
            let (gxi1, gxi2) = gxi.split_at_mut(m1);
            // z block: gap·d + 2 neg(z1) + M2ᵀe + M1ᵀ(2 neg(a))
            for j in 0..n {
                gz[j] = gap * d[j] + if j < n1 { two * neg_part(z[j]) } else { T::zero() };
            }
            lp.eq().tr_mul_vec_acc(&self.primal_eq, gz);
            for a in self.primal_ineq.iter_mut() {
                *a = two * neg_part(*a);
            }
            lp.ineq().tr_mul_vec_acc(&self.primal_ineq, gz);
            // ξ block through p = (-2 neg(s1), s2)
            for (j, p) in self.scratch.iter_mut().enumerate() {
                *p = if j < n1 { -two * neg_part(slack[j]) } else { slack[j] };
            }
            lp.ineq().mul_vec_into(&self.scratch, gxi1);
            for ((g, &r), &x) in gxi1.iter_mut().zip(lp.rhs_ineq()).zip(xi1) {
                *g += two * neg_part(x) - gap * r;
            }
            lp.eq().mul_vec_into(&self.scratch, gxi2);
            for (g, &r) in gxi2.iter_mut().zip(lp.rhs_eq()) {
                *g -= gap * r;
            }
        }
        (energy, kkt)
    }
}

fn check_len<T: Scalar>(lp: &GeneralFormLp<T>, u: &[T]) -> Result<(), LpError> {
    if u.len() != lp.state_len() {
        return Err(LpError::Dimension(format!(
            "state has {} entries, expected {}",
            u.len(),
            lp.state_len()
        )));
    }
    Ok(())
}

/// Energy `E(u) ≥ 0`, zero exactly at primal–dual optimal pairs.
pub fn energy<T: Scalar>(lp: &GeneralFormLp<T>, u: &[T]) -> Result<T, LpError> {
    check_len(lp, u)?;
    Ok(Evaluator::new(lp).eval(u, None).0)
}

/// `∇E(u)`, evaluated with sparse products only. Kinks use `sign(0) = 0`.
pub fn energy_gradient<T: Scalar>(lp: &GeneralFormLp<T>, u: &[T]) -> Result<Vec<T>, LpError> {
    check_len(lp, u)?;
    let mut g = vec![T::zero(); u.len()];
    Evaluator::new(lp).eval(u, Some(&mut g));
    Ok(g)
}

pub fn kkt_breakdown<T: Scalar>(lp: &GeneralFormLp<T>, u: &[T]) -> Result<KktBreakdown<T>, LpError> {
    check_len(lp, u)?;
    Ok(Evaluator::new(lp).eval(u, None).1)
}

/// Largest KKT violation (infinity norm over all conditions and the gap).
pub fn kkt_residual<T: Scalar>(lp: &GeneralFormLp<T>, u: &[T]) -> Result<T, LpError> {
    Ok(kkt_breakdown(lp, u)?.max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neurolp::LpBuilder;

    /// min x s.t. x ≥ 1, x ≥ 0
    fn tiny() -> GeneralFormLp<f64> {
        let mut b = LpBuilder::new(1, 0);
        b.set_cost(0, 1.0);
        b.add_ge([(0, 1.0)], 1.0);
        b.build()
    }

    #[test]
    fn optimal_pair_has_zero_energy_and_gradient() {
        let lp = tiny();
        let u = [1.0, 1.0];
        assert_eq!(energy(&lp, &u).unwrap(), 0.0);
        assert_eq!(energy_gradient(&lp, &u).unwrap(), vec![0.0, 0.0]);
        assert_eq!(kkt_residual(&lp, &u).unwrap(), 0.0);
    }

    #[test]
    fn infeasible_point_reports_dominant_term() {
        let lp = tiny();
        let k = kkt_breakdown(&lp, &[-2.0, 1.0]).unwrap();
        assert_eq!(k.primal_sign, 2.0);
        assert_eq!(k.primal_ineq, 3.0);
        assert_eq!(k.gap, 3.0);
        assert_eq!(k.dominant(), KktTerm::PrimalIneq);
        assert!(k.max() > 0.0);
    }

    #[test]
    fn hand_computed_two_variable_residual() {
        // min x + 2y  s.t.  x + y ≥ 2,  x - y = 0,  x ≥ 0, y free
        let mut b = LpBuilder::new(1, 1);
        b.set_cost(0, 1.0).set_cost(1, 2.0);
        b.add_ge([(0, 1.0), (1, 1.0)], 2.0);
        b.add_eq([(0, 1.0), (1, -1.0)], 0.0);
        let lp = b.build();
        // z = (0.5, 1), ξ = (1, 0.5)
        // a = 1.5 - 2 = -0.5 ; e = -0.5
        // w = (1 + 0.5, 1 - 0.5) = (1.5, 0.5); s1 = 1 - 1.5 = -0.5 ; s2 = 0.5 - 2 = -1.5
        // gap = 2.5 - 2 = 0.5
        let k = kkt_breakdown(&lp, &[0.5, 1.0, 1.0, 0.5]).unwrap();
        assert_eq!(k.primal_ineq, 0.5);
        assert_eq!(k.primal_eq, 0.5);
        assert_eq!(k.dual_ineq, 0.5);
        assert_eq!(k.dual_eq, 1.5);
        assert_eq!(k.gap, 0.5);
        assert_eq!(k.max(), 1.5);
        // E = ½·0.25 + ½·0.25 + ½·2.25 + 0.25 + 0.25
        let e: f64 = energy(&lp, &[0.5, 1.0, 1.0, 0.5]).unwrap();
        assert!((e - 1.875).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(energy(&tiny(), &[1.0]).is_err());
        assert!(energy_gradient(&tiny(), &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn cost_scaling_rescales_gap_term() {
        // with all other terms inactive, ∇_z E = gap·d; doubling d doubles gap and d
        let lp = tiny();
        let mut b = LpBuilder::new(1, 0);
        b.set_cost(0, 2.0);
        b.add_ge([(0, 1.0)], 1.0);
        let lp2 = b.build();
        let u = [3.0, 0.5];
        let g1 = energy_gradient(&lp, &u).unwrap();
        let g2 = energy_gradient(&lp2, &u).unwrap();
        // lp:  gap = 3 - 0.5 = 2.5; dual slack 1 - 0.5 ≥ 0
        assert_eq!(g1, vec![2.5 * 1.0, -2.5 * 1.0]);
        // lp2: gap = 6 - 0.5 = 5.5
        assert_eq!(g2, vec![5.5 * 2.0, -5.5 * 1.0]);
    }
}
