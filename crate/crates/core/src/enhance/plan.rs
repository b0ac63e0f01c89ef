//! Recovery plans and the resource envelope they induce.
//!
//! Slots `0..n` host the original virtual nodes and slot `n` is the backup.
//! A plan for the failure of slot `k` is a permutation `perm` of `0..=n` with
//! `perm[n] == k`: the content of slot `i` moves to slot `perm[i]`, so the
//! backup's empty load lands on the failed slot.

use crate::netmodel::VirtualNetwork;

/// Checks that `perm` is a permutation of `0..=n` pinned at `perm[n] == k`.
pub fn plan_is_valid(perm: &[usize], n: usize, k: usize) -> bool {
    if perm.len() != n + 1 || perm[n] != k {
        return false;
    }
    let mut seen = vec![false; n + 1];
    for &j in perm {
        if j > n || seen[j] {
            return false;
        }
        seen[j] = true;
    }
    true
}

/// The swap plan for slot `k`: exchange slot `k` with the backup.
pub fn swap_plan(n: usize, k: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..=n).collect();
    p.swap(k, n);
    p
}

/// CPU per slot in the initial allocation, with the empty backup slot.
pub fn padded_cpu(vn: &VirtualNetwork) -> Vec<f64> {
    let mut c = vn.cpu().to_vec();
    c.push(0.0);
    c
}

/// Bandwidth between slots in the initial allocation.
pub fn padded_demand(vn: &VirtualNetwork) -> Vec<Vec<f64>> {
    let n = vn.node_count();
    let mut b = vec![vec![0.0; n + 1]; n + 1];
    for (i, row) in vn.demand_matrix().iter().enumerate() {
        b[i][..n].copy_from_slice(row);
    }
    b
}

/// `C^k = C^0 X^k`.
pub fn scenario_cpu(c0: &[f64], perm: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; c0.len()];
    for (i, &j) in perm.iter().enumerate() {
        c[j] = c0[i];
    }
    c
}

/// `B^k = (X^k)ᵀ B^0 X^k`.
pub fn scenario_bandwidth(b0: &[Vec<f64>], perm: &[usize]) -> Vec<Vec<f64>> {
    let m = b0.len();
    let mut b = vec![vec![0.0; m]; m];
    for l in 0..m {
        for mm in 0..m {
            b[perm[l]][perm[mm]] = b0[l][mm];
        }
    }
    b
}

/// `A^k = A^0 X^k`: which original node (if any) each slot hosts.
pub fn scenario_allocation(n: usize, perm: &[usize]) -> Vec<Option<usize>> {
    let mut a = vec![None; n + 1];
    for (i, &j) in perm.iter().enumerate() {
        if i < n {
            a[j] = Some(i);
        }
    }
    a
}

/// Elementwise maxima over scenario 0 and every plan.
pub fn envelope(c0: &[f64], b0: &[Vec<f64>], plans: &[Vec<usize>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut c = c0.to_vec();
    let mut b = b0.to_vec();
    for p in plans {
        for (i, &j) in p.iter().enumerate() {
            c[j] = c[j].max(c0[i]);
        }
        for l in 0..p.len() {
            for m in 0..p.len() {
                let (i, j) = (p[l], p[m]);
                b[i][j] = b[i][j].max(b0[l][m]);
            }
        }
    }
    (c, b)
}

/// `Σ c_e + α Σ_{i<j} b_e`.
pub fn envelope_objective(c_e: &[f64], b_e: &[Vec<f64>], alpha: f64) -> f64 {
    let cpu: f64 = c_e.iter().sum();
    let mut bw = 0.0;
    for i in 0..b_e.len() {
        for j in i + 1..b_e.len() {
            bw += b_e[i][j];
        }
    }
    cpu + alpha * bw
}

/// Objective of the envelope induced by `plans`.
pub fn plans_objective(c0: &[f64], b0: &[Vec<f64>], plans: &[Vec<usize>], alpha: f64) -> f64 {
    let (c, b) = envelope(c0, b0, plans);
    envelope_objective(&c, &b, alpha)
}

/// First-improvement pairwise swap search on the exact envelope objective.
/// Swapping the targets of two non-backup slots keeps each plan valid.
pub fn improve_plans(c0: &[f64], b0: &[Vec<f64>], plans: &mut [Vec<usize>], alpha: f64) -> f64 {
    let n = c0.len() - 1;
    let mut best = plans_objective(c0, b0, plans, alpha);
    let eps = 1e-9 * best.abs().max(1.0);
    loop {
        let mut improved = false;
        for k in 0..plans.len() {
            for a in 0..n {
                for b in a + 1..n {
                    plans[k].swap(a, b);
                    let v = plans_objective(c0, b0, plans, alpha);
                    if v < best - eps {
                        best = v;
                        improved = true;
                    } else {
                        plans[k].swap(a, b);
                    }
                }
            }
        }
        if !improved {
            return best;
        }
    }
}

/// Swap search that also escapes plateaus: every swap that leaves the
/// objective unchanged is tried as a kick, followed by a fresh descent, and
/// kept only if the descent ends strictly lower. Costs about `n²·|plans|`
/// descents per improvement, so it is meant for final plans.
pub fn deepen_plans(c0: &[f64], b0: &[Vec<f64>], plans: &mut [Vec<usize>], alpha: f64) -> f64 {
    let n = c0.len() - 1;
    let mut best = improve_plans(c0, b0, plans, alpha);
    let eps = 1e-9 * best.abs().max(1.0);
    'restart: loop {
        for k in 0..plans.len() {
            for a in 0..n {
                for b in a + 1..n {
                    let mut trial = plans.to_vec();
                    trial[k].swap(a, b);
                    if plans_objective(c0, b0, &trial, alpha) > best + eps {
                        continue;
                    }
                    let v = improve_plans(c0, b0, &mut trial, alpha);
                    if v < best - eps {
                        plans.clone_from_slice(&trial);
                        best = v;
                        continue 'restart;
                    }
                }
            }
        }
        return best;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kick_escapes_the_path_plateau() {
        // Path 0-1-2, c = 10, b = 5: swap plans sit on a plateau at 65.
        let c0 = vec![10.0, 10.0, 10.0, 0.0];
        let mut b0 = vec![vec![0.0; 4]; 4];
        for (i, j) in [(0, 1), (1, 2)] {
            b0[i][j] = 5.0;
            b0[j][i] = 5.0;
        }
        let mut plans: Vec<Vec<usize>> = (0..3).map(|k| swap_plan(3, k)).collect();
        assert_eq!(improve_plans(&c0, &b0, &mut plans.clone(), 1.0), 65.0);
        assert_eq!(deepen_plans(&c0, &b0, &mut plans, 1.0), 60.0);
        assert!(plans.iter().enumerate().all(|(k, p)| plan_is_valid(p, 3, k)));
        assert_eq!(plans_objective(&c0, &b0, &plans, 1.0), 60.0);
    }

    #[test]
    fn plan_validation() {
        assert!(plan_is_valid(&[2, 1, 0], 2, 0));
        assert!(!plan_is_valid(&[2, 1, 0], 2, 1));
        assert!(!plan_is_valid(&[0, 0, 1], 2, 1));
        assert!(!plan_is_valid(&[0, 1], 2, 1));
        assert_eq!(swap_plan(3, 1), vec![0, 3, 2, 1]);
        assert!(plan_is_valid(&swap_plan(3, 1), 3, 1));
    }

    #[test]
    fn swap_recovery_algebra() {
        let c0 = vec![1.0, 2.0, 3.0, 0.0];
        let p = swap_plan(3, 1);
        assert_eq!(scenario_cpu(&c0, &p), vec![1.0, 0.0, 3.0, 2.0]);
        assert_eq!(scenario_allocation(3, &p), vec![Some(0), None, Some(2), Some(1)]);
        let mut b0 = vec![vec![0.0; 4]; 4];
        b0[0][1] = 5.0;
        b0[1][0] = 5.0;
        let b = scenario_bandwidth(&b0, &p);
        assert_eq!(b[0][3], 5.0);
        assert_eq!(b[3][0], 5.0);
        assert_eq!(b[0][1], 0.0);
    }
}
