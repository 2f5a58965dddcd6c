use dgff::green::green_matrix;
use dgff::harness::config::ExperimentConfig;
use dgff::harness::seeds::replica_rng;
use dgff::lattice::{LatticeDomain, Region};
use dgff::network::{
    cut_decompose, duality_check, effective_resistance, path_decompose, random_grid, reduce_parallel, reduce_series,
    subnetwork_reduce, Network,
};
use dgff::rwre::{build_kernel, commute_time, exit_times, exit_times_lu};
use dgff::sampler::{Field, FieldSampler};
use proptest::prelude::*;
use std::sync::Arc;

fn grid(seed: u64, w: usize, h: usize, chords: usize) -> Network {
    random_grid(w, h, chords, &mut replica_rng(seed, 0)).unwrap()
}

fn r_eff(net: &Network, u: usize, v: usize) -> f64 {
    effective_resistance(net, &[u], &[v]).unwrap().0
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rayleigh_monotonicity(seed in any::<u64>(), w in 2usize..6, h in 2usize..6, e in 0usize..64, f in 1.0f64..10.0) {
        let net = grid(seed, w, h, 2);
        let e = e % net.edge_count();
        let (u, v) = (0, net.vertex_count() - 1);
        let raised = net.with_conductance(e, net.edge(e).c * f).unwrap();
        prop_assert!(r_eff(&raised, u, v) <= r_eff(&net, u, v) * (1.0 + 1e-12));
    }

    #[test]
    fn shorting_lowers_resistance(seed in any::<u64>(), w in 2usize..6, h in 2usize..6, a in 1usize..64, b in 1usize..64) {
        let net = grid(seed, w, h, 1);
        let n = net.vertex_count();
        let (a, b) = (1 + a % (n - 2).max(1), 1 + b % (n - 2).max(1));
        prop_assume!(a != b && a < n - 1 && b < n - 1);
        let (short, map) = net.shorted(&[a, b]).unwrap();
        prop_assert!(r_eff(&short, map[0], map[n - 1]) <= r_eff(&net, 0, n - 1) * (1.0 + 1e-12));
    }

    #[test]
    fn resistance_is_a_metric(seed in any::<u64>(), w in 2usize..5, h in 2usize..5, x in 0usize..25, y in 0usize..25, z in 0usize..25) {
        let net = grid(seed, w, h, 2);
        let n = net.vertex_count();
        let (x, y, z) = (x % n, y % n, z % n);
        prop_assume!(x != y && y != z && x != z);
        let (rxy, ryx) = (r_eff(&net, x, y), r_eff(&net, y, x));
        prop_assert!(rel(rxy, ryx) < 1e-10);
        prop_assert!(rxy <= r_eff(&net, x, z) + r_eff(&net, z, y) + 1e-12);
    }

    #[test]
    fn flow_and_potential_routes_agree(seed in any::<u64>(), w in 2usize..6, h in 2usize..6, chords in 0usize..4) {
        let net = grid(seed, w, h, chords);
        let d = duality_check(&net, 0, net.vertex_count() - 1).unwrap();
        prop_assert!(d.residual < 1e-10);
    }

    #[test]
    fn series_and_parallel_preserve_resistance(c in prop::collection::vec(0.1f64..10.0, 4)) {
        let net = Network::new(4, vec![(0, 1, c[0]), (1, 2, c[1]), (2, 3, c[2]), (2, 3, c[3])]).unwrap();
        let r = r_eff(&net, 0, 3);
        let s = reduce_series(&net, 1).unwrap();
        let (u, v) = (s.image(0).unwrap(), s.image(3).unwrap());
        prop_assert!(rel(r_eff(&s.network, u, v), r) < 1e-12);
        let p = reduce_parallel(&net, 2, 3).unwrap();
        prop_assert!(rel(r_eff(&p.network, 0, 3), r) < 1e-12);
        let exact = 1.0 / c[0] + 1.0 / c[1] + 1.0 / (c[2] + c[3]);
        prop_assert!(rel(r, exact) < 1e-12);
    }

    #[test]
    fn schur_complement_preserves_resistance(seed in any::<u64>(), w in 2usize..6, h in 2usize..6, k in 0usize..8) {
        let net = grid(seed, w, h, 2);
        let n = net.vertex_count();
        let keep: Vec<usize> = (0..n).filter(|&x| x == 0 || x == n - 1 || (x + k) % 3 == 0).collect();
        let red = subnetwork_reduce(&net, &keep).unwrap();
        let (u, v) = (red.image(0).unwrap(), red.image(n - 1).unwrap());
        prop_assert!(rel(r_eff(&red.network, u, v), r_eff(&net, 0, n - 1)) < 1e-10);
    }

    #[test]
    fn decompositions_reconstruct_resistance(seed in any::<u64>(), w in 2usize..6, h in 2usize..6) {
        let net = grid(seed, w, h, 1);
        let (u, v) = (0, net.vertex_count() - 1);
        let (r, sol) = effective_resistance(&net, &[u], &[v]).unwrap();
        let paths = path_decompose(&net, &sol, u, v).unwrap();
        prop_assert!(rel(paths.reconstruct(), r) < 1e-8);
        prop_assert!(paths.budget_violation(&net) < 1e-10);
        let cuts = cut_decompose(&net, &sol, u, v).unwrap();
        prop_assert!(rel(cuts.reconstruct(), 1.0 / r) < 1e-8);
        prop_assert!(cuts.budget_violation(&net) < 1e-10);
    }

    #[test]
    fn kernel_is_reversible(seed in any::<u64>(), n in 2usize..8, beta in 0.0f64..1.5) {
        let d = Arc::new(LatticeDomain::make_box(n + 1).unwrap());
        let field = FieldSampler::new(d).unwrap().sample(&mut replica_rng(seed, 0));
        let k = build_kernel(&field, beta).unwrap();
        prop_assert!(k.row_sum_residual() < 1e-12);
        prop_assert!(k.detailed_balance_residual() < 1e-12);
    }

    #[test]
    fn exit_time_routes_agree(seed in any::<u64>(), n in 3usize..8, beta in 0.0f64..1.0) {
        let d = Arc::new(LatticeDomain::make_box(n + 1).unwrap());
        let vals: Vec<f64> = {
            use rand::Rng;
            let mut rng = replica_rng(seed, 1);
            (0..d.len()).map(|_| rng.gen_range(-2.0..2.0)).collect()
        };
        let k = build_kernel(&Field::new(d.clone(), vals).unwrap(), beta).unwrap();
        let region: Vec<usize> = (0..k.len()).filter(|&i| i % 4 != 0).collect();
        let a = exit_times(&k, &region).unwrap();
        let b = exit_times_lu(&k, &region).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(rel(*x, *y) < 1e-9);
        }
        let (lhs, rhs) = commute_time(&k, 0, k.len() - 1).unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-9);
    }

    #[test]
    fn green_is_symmetric_and_positive(n in 2usize..12) {
        let d = Arc::new(LatticeDomain::make_box(n).unwrap());
        let g = green_matrix(&d).unwrap();
        prop_assert!(g.asymmetry() < 1e-12);
        prop_assert!(g.poisson_residual() < 1e-11);
        for i in 0..g.len() {
            for j in 0..g.len() {
                prop_assert!(g.get(i, j) > 0.0);
                prop_assert!(g.get(i, j) <= g.get(i, i) + 1e-12);
            }
        }
    }

    #[test]
    fn green_is_monotone_in_the_domain(n in 3usize..10) {
        let small = Arc::new(LatticeDomain::make_box(n).unwrap());
        let large = Arc::new(LatticeDomain::make_box(n + 2).unwrap());
        let (gs, gl) = (green_matrix(&small).unwrap(), green_matrix(&large).unwrap());
        for &u in small.vertices() {
            prop_assert!(gs.entry(u, u) <= gl.entry(u, u) + 1e-12);
        }
    }

    #[test]
    fn config_text_roundtrips(reps in 1usize..10_000, seed in any::<u64>(), sizes in prop::collection::vec(2usize..512, 1..5), lambda in 0.0f64..1.0) {
        let mut c = ExperimentConfig { experiment: "max-stats".into(), reps, seed, sizes, lambda, ..Default::default() };
        c.beta = lambda / 2.0;
        prop_assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }
}

#[test]
fn discretized_square_is_the_box() {
    for n in 2..=64 {
        assert_eq!(
            LatticeDomain::discretize(&Region::unit_square(), n).unwrap().vertices(),
            LatticeDomain::make_box(n).unwrap().vertices()
        );
    }
}
