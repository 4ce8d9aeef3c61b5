use mrfdens_core::graph::{
    clique_size_formula, max_clique_size, maximal_cliques, BoundKind, Family, MrfGraph, DEFAULT_CLIQUE_CEILING,
};
use mrfdens_core::hcfactor::{DensityOracle, HcFactorization};
use mrfdens_core::histfactor::{
    expected_surrogate_loss, round_to_cover, HistogramFactor, ProductHistogram,
    DEFAULT_REFINEMENT_BUDGET as BUDGET,
};
use mrfdens_core::math::pearson;
use mrfdens_core::neuralnet::{CliqueNetModel, ReluNet};
use mrfdens_core::scheffe::{scheffe_select, CandidateSet};
use mrfdens_core::SampleMatrix;
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = MrfGraph> {
    (2usize..=8).prop_flat_map(|d| {
        let pairs: Vec<(usize, usize)> = (1..=d).flat_map(|u| ((u + 1)..=d).map(move |v| (u, v))).collect();
        proptest::collection::vec(any::<bool>(), pairs.len()).prop_map(move |keep| {
            let edges: Vec<(usize, usize)> = pairs.iter().zip(&keep).filter(|(_, k)| **k).map(|(e, _)| *e).collect();
            MrfGraph::from_edges(d, &edges).unwrap()
        })
    })
}

/// Maximal cliques by checking every vertex subset.
fn brute_force_maximal(g: &MrfGraph) -> Vec<Vec<usize>> {
    let d = g.vertex_count();
    let cliques: Vec<Vec<usize>> = (1u32..(1 << d))
        .map(|m| (1..=d).filter(|v| m >> (v - 1) & 1 == 1).collect::<Vec<_>>())
        .filter(|s| g.is_clique(s))
        .collect();
    let mut out: Vec<Vec<usize>> = cliques
        .iter()
        .filter(|s| !cliques.iter().any(|t| t.len() > s.len() && s.iter().all(|v| t.contains(v))))
        .cloned()
        .collect();
    out.sort();
    out
}

/// Factor tuple on random cliques of `{1..d}` with weights in `[0, cap]`.
fn factors_strategy(d: usize, b: usize, m: usize, cap: f64) -> impl Strategy<Value = Vec<HistogramFactor>> {
    let subsets: Vec<Vec<usize>> = (1u32..(1 << d))
        .map(|mask| (1..=d).filter(|v| mask >> (v - 1) & 1 == 1).collect())
        .collect();
    proptest::collection::vec(
        (0..subsets.len()).prop_flat_map(move |i| {
            let vars = subsets[i].clone();
            let cells = b.pow(vars.len() as u32);
            proptest::collection::vec(0.0..=cap, cells)
                .prop_map(move |w| HistogramFactor::new(d, vars.clone(), b, cap, w).unwrap())
        }),
        m,
    )
}

fn tuple_pair() -> impl Strategy<Value = (Vec<HistogramFactor>, Vec<HistogramFactor>, f64)> {
    (1usize..=3, 1usize..=4, 1usize..=4, 1.0f64..3.0).prop_flat_map(|(d, b, m, cap)| {
        let f = factors_strategy(d, b, m, cap);
        f.prop_flat_map(move |fs| {
            // g shares f's clique structure
            let shapes: Vec<Vec<usize>> = fs.iter().map(|x| x.vars().to_vec()).collect();
            let gs = shapes
                .into_iter()
                .map(|vars| {
                    let cells = b.pow(vars.len() as u32);
                    proptest::collection::vec(0.0..=cap, cells)
                        .prop_map(move |w| HistogramFactor::new(d, vars.clone(), b, cap, w).unwrap())
                })
                .collect::<Vec<_>>();
            (Just(fs), gs, Just(cap))
        })
    })
}

fn single(f: &HistogramFactor) -> ProductHistogram {
    ProductHistogram::single(f.clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn power_is_monotone(g in graph_strategy(), t in 1usize..3) {
        let a = g.power(t).unwrap();
        let b = g.power(t + 1).unwrap();
        for (u, v) in a.edges() {
            prop_assert!(b.has_edge(u, v));
        }
        for (u, v) in g.edges() {
            prop_assert!(a.has_edge(u, v));
        }
    }

    #[test]
    fn cliques_match_brute_force(g in graph_strategy()) {
        let cs = maximal_cliques(&g, DEFAULT_CLIQUE_CEILING).unwrap();
        prop_assert_eq!(cs.cliques.clone(), brute_force_maximal(&g));
        for c in cs.iter() {
            prop_assert!(g.is_clique(c));
        }
    }

    #[test]
    fn clique_formula_agrees_with_search(
        fam in 0usize..3,
        rows in 2usize..=6,
        cols in 2usize..=6,
        t in 1usize..=4,
    ) {
        let (family, dims) = match fam {
            0 => (Family::Path, vec![rows * cols.min(5)]),
            1 => (Family::Grid, vec![rows, cols]),
            _ => (Family::GridDiag, vec![rows, cols]),
        };
        prop_assume!(family == Family::Path || t < rows.min(cols));
        let g = MrfGraph::structured_power(family, &dims, t).unwrap();
        prop_assume!(g.vertex_count() <= 30);
        let found = max_clique_size(&g, DEFAULT_CLIQUE_CEILING).unwrap();
        let bound = clique_size_formula(family, t, &dims).unwrap();
        match bound.kind {
            BoundKind::Exact => prop_assert_eq!(found, bound.value),
            BoundKind::UpperBound => prop_assert!(found <= bound.value),
        }
    }

    #[test]
    fn product_difference_bounds((fs, gs, cap) in tuple_pair()) {
        let d = fs[0].dim();
        let b = fs[0].resolution();
        let m = fs.len() as i32;
        let pf = ProductHistogram::new(d, b, fs.clone()).unwrap();
        let pg = ProductHistogram::new(d, b, gs.clone()).unwrap();
        let lhs_l1 = pf.l1_distance(&pg, BUDGET).unwrap();
        let lhs_sup = pf.sup_distance(&pg, BUDGET).unwrap();
        let mut sum_l1 = 0.0;
        let mut sum_sup = 0.0;
        for (f, g) in fs.iter().zip(&gs) {
            sum_l1 += single(f).l1_distance(&single(g), BUDGET).unwrap();
            sum_sup += single(f).sup_distance(&single(g), BUDGET).unwrap();
        }
        let k = cap.powi(m - 1);
        prop_assert!(lhs_l1 <= k * sum_l1 * (1.0 + 1e-12) + 1e-15);
        prop_assert!(lhs_sup <= k * sum_sup * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn loss_identity((fs, gs, _cap) in tuple_pair()) {
        let d = fs[0].dim();
        let b = fs[0].resolution();
        let f = ProductHistogram::new(d, b, fs).unwrap();
        let p = ProductHistogram::new(d, b, gs).unwrap().normalize(BUDGET).unwrap();
        let lhs = expected_surrogate_loss(&f, &p, BUDGET).unwrap() + p.l2_norm_sq(BUDGET).unwrap();
        let rhs = f.l2_distance_sq(&p, BUDGET).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn normalize_is_idempotent((fs, _gs, _cap) in tuple_pair()) {
        let d = fs[0].dim();
        let b = fs[0].resolution();
        let h = ProductHistogram::new(d, b, fs).unwrap();
        let once = h.normalize(BUDGET).unwrap();
        let twice = once.normalize(BUDGET).unwrap();
        prop_assert!((once.mass(BUDGET).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(once.sup_distance(&twice, BUDGET).unwrap() < 1e-12 * (1.0 + once.sup_distance(&ProductHistogram::uniform(d, b).unwrap(), BUDGET).unwrap()));
    }

    #[test]
    fn rounding_lands_within_eps(
        w in proptest::collection::vec(0.0f64..=2.0, 9),
        k in 0usize..3,
    ) {
        let eps = [1.0, 0.5, 0.25][k];
        let f = HistogramFactor::new(2, vec![1, 2], 3, 2.0, w).unwrap();
        let r = round_to_cover(&f, eps).unwrap();
        prop_assert!(single(&f).l1_distance(&single(&r), BUDGET).unwrap() < eps);
    }

    #[test]
    fn pearson_is_affine_invariant(
        xs in proptest::collection::vec(0.0f64..1.0, 3..40),
        a in 0.1f64..10.0,
        c in -5.0f64..5.0,
    ) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * x + (i % 3) as f64 * 0.1).collect();
        let scaled: Vec<f64> = xs.iter().map(|x| a * x + c).collect();
        prop_assert!((pearson(&xs, &ys) - pearson(&scaled, &ys)).abs() < 1e-9);
    }

    #[test]
    fn scheffe_is_deterministic_and_permutation_covariant(
        ws in proptest::collection::vec(proptest::collection::vec(0.05f64..2.0, 4), 2..6),
        xs in proptest::collection::vec(0.0f64..=1.0, 2..60),
        rot in 0usize..6,
    ) {
        let members: Vec<ProductHistogram> = ws
            .iter()
            .map(|w| single(&HistogramFactor::new(1, vec![1], 4, 2.0, w.clone()).unwrap()).normalize(BUDGET).unwrap())
            .collect();
        let s = SampleMatrix::new(1, xs).unwrap();
        let c = CandidateSet::new(members.clone()).unwrap();
        let a = scheffe_select(&c, &s).unwrap();
        prop_assert_eq!(&a, &scheffe_select(&c, &s).unwrap());
        let m = members.len();
        let r = rot % m;
        let mut rotated = members.clone();
        rotated.rotate_left(r);
        let b = scheffe_select(&CandidateSet::new(rotated).unwrap(), &s).unwrap();
        let min = a.deltas.iter().copied().fold(f64::INFINITY, f64::min);
        // the rotated winner maps back to a candidate attaining the minimum
        let back = (b.winner + r) % m;
        prop_assert_eq!(a.deltas[back], min);
    }

    #[test]
    fn net_ignores_coordinates_outside_cliques(
        p in proptest::collection::vec(-1.0f64..=1.0, 3 * 4 + 4 + 4),
        x in proptest::collection::vec(0.0f64..=1.0, 4),
        z in 0.0f64..=1.0,
    ) {
        // one clique {1, 3} in d = 4; coordinates 2 and 4 are free
        let mut net = ReluNet::zeros(vec![2, 4, 1]).unwrap();
        let k = net.param_count();
        net.params_mut().copy_from_slice(&p[..k]);
        let m = CliqueNetModel::new(4, vec![vec![1, 3]], vec![net], 5.0).unwrap();
        let mut y = x.clone();
        y[1] = z;
        y[3] = 1.0 - z;
        prop_assert_eq!(m.forward(&x).to_bits(), m.forward(&y).to_bits());
    }

    #[test]
    fn hc_potentials_are_local(
        a in -0.9f64..0.9,
        x in proptest::collection::vec(0.0f64..=1.0, 3),
        z in 0.0f64..=1.0,
    ) {
        let oracle = DensityOracle::new(3, move |v: &[f64]| {
            (1.0 + a * (std::f64::consts::PI * (v[0] - v[1])).cos())
                * (1.0 + a * (std::f64::consts::PI * (v[1] - v[2])).cos())
        });
        let g = MrfGraph::path(3).unwrap();
        let cs = maximal_cliques(&g, DEFAULT_CLIQUE_CEILING).unwrap();
        let hc = HcFactorization::new(&oracle, &cs).unwrap();
        let mut y = x.clone();
        y[2] = z;
        prop_assert_eq!(hc.potential(0, &x).unwrap().to_bits(), hc.potential(0, &y).unwrap().to_bits());
        let r = hc.reconstruct(&x).unwrap();
        let p = oracle.query(&x).unwrap();
        prop_assert!((r - p).abs() <= 1e-12 * p);
    }
}
