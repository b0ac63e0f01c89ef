//! Exact plan search by branch and bound over scenarios.

use super::plan::{
    envelope_objective, improve_plans, padded_cpu, padded_demand, scenario_bandwidth, scenario_cpu, swap_plan,
};
use super::{EnhanceError, EnhancedVn, PlanSource};
use crate::netmodel::VirtualNetwork;

/// Largest network the exhaustive search accepts.
pub const BRUTE_FORCE_MAX_NODES: usize = 5;

/// Recovery loads of one candidate plan.
struct Candidate {
    perm: Vec<usize>,
    cpu: Vec<f64>,
    bw: Vec<Vec<f64>>,
}

struct Search<'a> {
    alpha: f64,
    cands: &'a [Vec<Candidate>],
    best: f64,
    best_choice: Vec<usize>,
    choice: Vec<usize>,
}

type Envelope = (Vec<f64>, Vec<Vec<f64>>);

fn merged(env: &Envelope, c: &Candidate) -> Envelope {
    let cpu = env.0.iter().zip(&c.cpu).map(|(a, b)| a.max(*b)).collect();
    let bw = env
        .1
        .iter()
        .zip(&c.bw)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| a.max(*b)).collect())
        .collect();
    (cpu, bw)
}

fn dominated(env: &Envelope, c: &Candidate) -> bool {
    env.0.iter().zip(&c.cpu).all(|(a, b)| b <= a)
        && env.1.iter().zip(&c.bw).all(|(ra, rb)| ra.iter().zip(rb).all(|(a, b)| b <= a))
}

impl Search<'_> {
    fn value(&self, env: &Envelope) -> f64 {
        envelope_objective(&env.0, &env.1, self.alpha)
    }

    fn run(&mut self, k: usize, env: &Envelope) {
        let n = self.cands.len();
        if k == n {
            let v = self.value(env);
            if v < self.best {
                self.best = v;
                self.best_choice = self.choice.clone();
            }
            return;
        }
        // A plan already covered by the envelope is optimal for this scenario.
        if let Some(i) = self.cands[k].iter().position(|c| dominated(env, c)) {
            self.choice[k] = i;
            self.run(k + 1, env);
            return;
        }
        // Every remaining scenario must add at least its cheapest increment.
        let mut bound = self.value(env);
        let mut here = Vec::new();
        for kk in k..n {
            let mut cheapest = f64::INFINITY;
            for (i, c) in self.cands[kk].iter().enumerate() {
                let v = self.value(&merged(env, c));
                cheapest = cheapest.min(v);
                if kk == k {
                    here.push((v, i));
                }
            }
            bound = bound.max(cheapest);
        }
        if bound >= self.best {
            return;
        }
        here.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (v, i) in here {
            if v >= self.best {
                break;
            }
            self.choice[k] = i;
            let next = merged(env, &self.cands[k][i]);
            self.run(k + 1, &next);
        }
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Globally optimal plans among all pinned permutation tuples, covering the
/// initial allocation as well. Refuses networks above
/// [`BRUTE_FORCE_MAX_NODES`] nodes.
pub fn brute_force_enhance(vn: &VirtualNetwork, alpha: f64) -> Result<EnhancedVn, EnhanceError> {
    let n = vn.node_count();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(EnhanceError::TooLarge { n, limit: BRUTE_FORCE_MAX_NODES });
    }
    let c0 = padded_cpu(vn);
    let b0 = padded_demand(vn);
    let cands: Vec<Vec<Candidate>> = (0..n)
        .map(|k| {
            let targets: Vec<usize> = (0..=n).filter(|&j| j != k).collect();
            let mut list: Vec<Candidate> = Vec::new();
            for p in permutations(&targets) {
                let mut perm = p;
                perm.push(k);
                let cpu = scenario_cpu(&c0, &perm);
                let bw = scenario_bandwidth(&b0, &perm);
                // Plans with identical loads are interchangeable.
                if !list.iter().any(|c: &Candidate| c.cpu == cpu && c.bw == bw) {
                    list.push(Candidate { perm, cpu, bw });
                }
            }
            list
        })
        .collect();
    // Seed the incumbent with polished swap plans.
    let mut seed: Vec<Vec<usize>> = (0..n).map(|k| swap_plan(n, k)).collect();
    let seed_value = improve_plans(&c0, &b0, &mut seed, alpha);
    let mut search = Search {
        alpha,
        cands: &cands,
        best: seed_value,
        best_choice: Vec::new(),
        choice: vec![0; n],
    };
    search.run(0, &(c0.clone(), b0.clone()));
    let plans = if search.best_choice.is_empty() {
        seed
    } else {
        search.best_choice.iter().enumerate().map(|(k, &i)| cands[k][i].perm.clone()).collect()
    };
    Ok(EnhancedVn::from_plans(vn, alpha, plans, PlanSource::BruteForce))
}

#[cfg(test)]
mod tests {
    use super::super::tests::{k3, path_vn};
    use super::super::{fip_enhance, verify_restorability};
    use super::*;

    #[test]
    fn frozen_examples() {
        let p = brute_force_enhance(&path_vn(), 1.0).unwrap();
        assert_eq!(p.objective(), 60.0);
        // The optimum closes the path into a 4-cycle.
        let cycle: Vec<(usize, usize)> = p.links().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(cycle.len(), 4);
        assert!(p.links().all(|(_, _, b)| b == 5.0));
        assert_eq!(brute_force_enhance(&k3(), 1.0).unwrap().objective(), 70.0);
        let one = VirtualNetwork::new(vec![6.0], vec![vec![0.0]]).unwrap();
        let b = brute_force_enhance(&one, 1.0).unwrap();
        assert_eq!(b.objective(), 12.0);
        assert_eq!(b.plans, vec![vec![1, 0]]);
    }

    #[test]
    fn refuses_large_networks() {
        let vn = VirtualNetwork::new(vec![1.0; 6], vec![vec![0.0; 6]; 6]).unwrap();
        assert_eq!(brute_force_enhance(&vn, 1.0), Err(EnhanceError::TooLarge { n: 6, limit: 5 }));
    }

    #[test]
    fn never_above_fip_and_always_valid() {
        use crate::netmodel::{generate_vn_request, VnParams};
        for seed in 0..30 {
            let params = VnParams { size_low: 1, size_high: 4, ..Default::default() };
            let vn = generate_vn_request(&params, seed).unwrap();
            let b = brute_force_enhance(&vn, 1.0).unwrap();
            assert!(verify_restorability(&b).is_ok());
            assert!(b.objective() <= fip_enhance(&vn, 1.0).objective());
        }
    }
}
