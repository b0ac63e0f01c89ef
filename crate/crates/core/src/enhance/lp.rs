//! Linear relaxation of the plan-selection problem.

use std::ops::Range;

use super::plan::{padded_cpu, padded_demand};
use crate::netmodel::VirtualNetwork;
use crate::neurolp::{GeneralFormLp, LpBuilder};
use crate::scalar::Scalar;

/// Positions of each variable block in the stacked vector `(C^e, B^e, Y, X)`.
///
/// With `N = n + 1` slots: `C^e` has `N` entries, `B^e` holds `N²` ordered
/// pairs, `Y` holds `y^k_{l i m j} = x^k_{li} x^k_{mj}` for each scenario,
/// and `X` holds the `N × N` plan matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnhancementLayout {
    pub n: usize,
}

impl EnhancementLayout {
    pub fn slots(&self) -> usize {
        self.n + 1
    }

    pub fn c(&self, j: usize) -> usize {
        j
    }

    pub fn b(&self, i: usize, j: usize) -> usize {
        let s = self.slots();
        s + i * s + j
    }

    fn y_base(&self) -> usize {
        let s = self.slots();
        s + s * s
    }

    pub fn y(&self, k: usize, l: usize, i: usize, m: usize, j: usize) -> usize {
        let s = self.slots();
        self.y_base() + k * s.pow(4) + ((l * s + i) * s + m) * s + j
    }

    fn x_base(&self) -> usize {
        self.y_base() + self.n * self.slots().pow(4)
    }

    pub fn x(&self, k: usize, i: usize, j: usize) -> usize {
        let s = self.slots();
        self.x_base() + (k * s + i) * s + j
    }

    pub fn n_vars(&self) -> usize {
        self.x_base() + self.n * self.slots().pow(2)
    }

    /// The relaxed 0/1 block (`Y` and `X`).
    pub fn binaries(&self) -> Range<usize> {
        self.y_base()..self.n_vars()
    }
}

/// Builds the relaxation. Every variable is nonnegative.
///
/// Inequalities: CPU and bandwidth envelope rows per scenario, scenario-0
/// coverage, and the coupling rows `x_li + x_mj − 2y_limj ≥ 0`. Equalities:
/// `Σ y^k = N²`, unit row and column sums of each `X^k`, and the backup pin
/// `x^k_{n,k} = 1`.
pub fn build_enhancement_lp<T: Scalar>(vn: &VirtualNetwork, alpha: f64) -> (GeneralFormLp<T>, EnhancementLayout) {
    let n = vn.node_count();
    let lay = EnhancementLayout { n };
    let s = lay.slots();
    let c0 = padded_cpu(vn);
    let b0 = padded_demand(vn);
    let mut b = LpBuilder::<T>::new(lay.n_vars(), 0);
    let one = T::one();
    for j in 0..s {
        b.set_cost(lay.c(j), one);
        for i in 0..s {
            if i != j {
                b.set_cost(lay.b(i, j), T::of(alpha / 2.0));
            }
        }
    }
    for k in 0..n {
        for j in 0..s {
            let mut row = vec![(lay.c(j), one)];
            row.extend((0..s).filter(|&i| c0[i] != 0.0).map(|i| (lay.x(k, i, j), T::of(-c0[i]))));
            b.add_ge(row, T::zero());
        }
        for i in 0..s {
            for j in 0..s {
                if i == j {
                    continue;
                }
                let mut row = vec![(lay.b(i, j), one)];
                for l in 0..s {
                    for m in 0..s {
                        if b0[l][m] != 0.0 {
                            row.push((lay.y(k, l, i, m, j), T::of(-b0[l][m])));
                        }
                    }
                }
                b.add_ge(row, T::zero());
            }
        }
    }
    for j in 0..s {
        if c0[j] != 0.0 {
            b.add_ge([(lay.c(j), one)], T::of(c0[j]));
        }
        for i in 0..s {
            if b0[i][j] != 0.0 {
                b.add_ge([(lay.b(i, j), one)], T::of(b0[i][j]));
            }
        }
    }
    let two = T::of(2.0);
    for k in 0..n {
        for l in 0..s {
            for i in 0..s {
                for m in 0..s {
                    for j in 0..s {
                        let y = lay.y(k, l, i, m, j);
                        let (xa, xb) = (lay.x(k, l, i), lay.x(k, m, j));
                        if xa == xb {
                            b.add_ge([(xa, two), (y, -two)], T::zero());
                        } else {
                            b.add_ge([(xa, one), (xb, one), (y, -two)], T::zero());
                        }
                    }
                }
            }
        }
    }
    let ss = T::of((s * s) as f64);
    for k in 0..n {
        let all: Vec<(usize, T)> = (0..s.pow(4)).map(|o| (lay.y(k, 0, 0, 0, 0) + o, one)).collect();
        b.add_eq(all, ss);
        for i in 0..s {
            b.add_eq((0..s).map(|j| (lay.x(k, i, j), one)), one);
        }
        for j in 0..s {
            b.add_eq((0..s).map(|i| (lay.x(k, i, j), one)), one);
        }
        b.add_eq([(lay.x(k, n, k), one)], one);
    }
    (b.build(), lay)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_counts() {
        let vn = VirtualNetwork::new(vec![7.0], vec![vec![0.0]]).unwrap();
        let (lp, lay) = build_enhancement_lp::<f64>(&vn, 1.0);
        assert_eq!(lp.n_vars(), 26);
        assert_eq!(lay.n_vars(), 26);
        assert_eq!(lp.n_free(), 0);
        assert_eq!(lay.binaries(), 6..26);
        // 2 CPU + 2 bandwidth envelope rows, 1 coverage row, 16 coupling rows.
        assert_eq!(lp.n_ineq(), 2 + 2 + 1 + 16);
        // Σy, 2 row sums, 2 column sums, pin.
        assert_eq!(lp.n_eq(), 6);
    }

    #[test]
    fn layout_is_a_bijection() {
        let lay = EnhancementLayout { n: 2 };
        let s = 3;
        let mut seen = vec![false; lay.n_vars()];
        let mut mark = |i: usize| {
            assert!(!seen[i]);
            seen[i] = true;
        };
        (0..s).for_each(|j| mark(lay.c(j)));
        for i in 0..s {
            for j in 0..s {
                mark(lay.b(i, j));
            }
        }
        for k in 0..2 {
            for l in 0..s {
                for i in 0..s {
                    for m in 0..s {
                        for j in 0..s {
                            mark(lay.y(k, l, i, m, j));
                        }
                    }
                }
            }
            for i in 0..s {
                for j in 0..s {
                    mark(lay.x(k, i, j));
                }
            }
        }
        assert!(seen.iter().all(|&v| v));
    }
}
