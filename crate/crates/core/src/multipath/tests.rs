use super::*;
use crate::enhance::{fip_enhance, PlanSource};
use crate::netmodel::{SubstrateLink, SubstrateNode, VirtualNetwork};
use crate::neurolp::solve_lp;

fn graph(n: usize, edges: &[(usize, usize)], cpu: f64, bw: f64) -> SubstrateNetwork {
    let nodes = (0..n).map(|i| SubstrateNode { cpu, x: i as f64, y: 0.0 }).collect();
    let links = edges.iter().map(|&(a, b)| SubstrateLink { a, b, bandwidth: bw }).collect();
    SubstrateNetwork::new(nodes, links).unwrap()
}

/// Two slots joined by one link of demand 4.
fn two_slots() -> EnhancedVn {
    let base = VirtualNetwork::new(vec![1.0], vec![vec![0.0]]).unwrap();
    EnhancedVn {
        base,
        alpha: 1.0,
        c_e: vec![1.0, 1.0],
        b_e: vec![vec![0.0, 4.0], vec![4.0, 0.0]],
        plans: vec![vec![1, 0]],
        source: PlanSource::Fip,
        fallback: false,
    }
}

/// Wheel: rim 1..=6 around hub 0.
fn wheel(bw: f64) -> SubstrateNetwork {
    let mut e: Vec<(usize, usize)> = (1..=6).map(|i| (i, i % 6 + 1)).collect();
    e.extend((1..=6).map(|i| (0, i)));
    graph(7, &e, 100.0, bw)
}

#[test]
fn per_path_rounds_up() {
    assert_eq!(per_path_units(10_000_000, 3), 5_000_000);
    assert_eq!(per_path_units(7, 3), 4);
    assert_eq!(per_path_units(7, 2), 7);
}

#[test]
fn config_is_checked() {
    let bad = EmbeddingConfig { eta: 1, ..Default::default() };
    assert!(matches!(bad.validate(), Err(EmbedError::Config(_))));
    assert!(EmbeddingConfig::default().validate().is_ok());
}

#[test]
fn relaxation_matches_exhaustive_search() {
    // A path 0-1-2 plus a detour 0-3-4-2 and a chord 1-4.
    let g = graph(5, &[(0, 1), (1, 2), (0, 3), (3, 4), (4, 2), (1, 4)], 10.0, 10.0);
    let enh = two_slots();
    let cfg = EmbeddingConfig { eta: 2, ..Default::default() };
    let cands = vec![vec![0, 1, 2], vec![0, 1, 2]];
    let p = EmbeddingProblem::with_candidates(&enh, &g, &cfg, cands).unwrap();
    let mut best = f64::INFINITY;
    for a in 0..3 {
        for b in 0..3 {
            if a != b {
                let (bad, cost) = p.evaluate(&[a, b]);
                if bad == 0 {
                    best = best.min(cost);
                }
            }
        }
    }
    assert!(best.is_finite());
    let sol = solve_lp(&p.lp, &SolverConfig::default(), None).unwrap();
    assert!(sol.report.converged);
    assert!((p.lp.objective(&sol.z) - best).abs() < 1e-3, "{} vs {best}", p.lp.objective(&sol.z));
    let (map, cost) = p.round_assignment(&sol.z).unwrap();
    assert_eq!(cost, best);
    assert_ne!(map[0], map[1]);
}

#[test]
fn pipeline_reserves_and_survives() {
    let mut g = wheel(100.0);
    let mut ledger = AllocationLedger::new();
    let vn = VirtualNetwork::from_links(vec![10.0, 10.0, 10.0], &[(0, 1, 6.0), (1, 2, 6.0)]).unwrap().with_id(7);
    let enh = fip_enhance(&vn, 1.0);
    let cfg = EmbeddingConfig { eta: 3, ..Default::default() };
    let solver = SolverConfig { max_steps: 2000, ..Default::default() };
    let cnd = CndConfig { swarm_size: 3, outer_rounds: 3, ..Default::default() };
    let out = embed_vn(&mut g, &mut ledger, &enh, &cfg, &solver, &cnd).unwrap();
    let emb = &out.embedding;
    assert_eq!(emb.node_map.len(), enh.slots());
    let mut seen = emb.node_map.clone();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), enh.slots());
    assert_eq!(emb.routes.len(), enh.links().count());
    for r in &emb.routes {
        assert_eq!(r.paths.len(), 3);
        assert_eq!(r.per_path_units, per_path_units(r.demand_units, 3));
    }
    assert!((emb.cost() - out.objective).abs() < 1e-9);
    for l in 0..g.link_count() {
        assert!(emb.survives_link_failure(l));
    }
    assert!(ledger.conserves(&g));
    assert_eq!(ledger.get(7), Some(&emb.ledger_entry()));
    ledger.release(&mut g, 7);
    assert_eq!(g.used_cpu_units(), 0);
    assert_eq!(g.used_bw_units(), 0);
}

#[test]
fn single_path_loss_is_not_survivable() {
    let emb = Embedding {
        vn_id: 1,
        eta: 2,
        node_map: vec![0, 1],
        cpu_units: vec![1, 1],
        routes: vec![Route { a: 0, b: 1, demand_units: 10, per_path_units: 6, paths: vec![vec![0], vec![1, 2]] }],
    };
    assert!(!emb.survives_link_failure(0));
    assert!(!emb.survives_link_failure(2));
    assert!(emb.survives_link_failure(3));
}

#[test]
fn allocation_is_all_or_nothing() {
    // Enough bandwidth for one route of demand 4 at η = 2, not for two.
    let mut g = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], 10.0, 5.0);
    let mut ledger = AllocationLedger::new();
    let enh = two_slots();
    let table = build_path_table(&g, &[(0, 2)], 2, 0);
    let emb = allocate_embedding(&mut g, &mut ledger, &enh, &[0, 2], 2, &table).unwrap();
    assert_eq!(emb.routes[0].paths.len(), 2);
    let before = (g.used_cpu_units(), g.used_bw_units());
    let mut again = enh.clone();
    again.base = again.base.with_id(9);
    let err = allocate_embedding(&mut g, &mut ledger, &again, &[1, 3], 2, &PathTable::default()).unwrap_err();
    assert!(err.is_rejection());
    assert_eq!((g.used_cpu_units(), g.used_bw_units()), before);
    assert_eq!(ledger.len(), 1);
}

#[test]
fn starved_substrate_rejects() {
    let mut g = wheel(100.0);
    let mut ledger = AllocationLedger::new();
    let vn = VirtualNetwork::from_links(vec![500.0, 1.0], &[(0, 1, 1.0)]).unwrap();
    let enh = fip_enhance(&vn, 1.0);
    let err = embed_vn(&mut g, &mut ledger, &enh, &EmbeddingConfig::default(), &SolverConfig::default(), &CndConfig::default())
        .unwrap_err();
    assert!(matches!(err, EmbedError::NoCandidates { .. }));
    assert!(err.is_rejection());
    assert!(ledger.is_empty());
}
