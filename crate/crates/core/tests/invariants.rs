use proptest::prelude::*;

use rcm_core::cluster::percolation_clusters;
use rcm_core::env::{site_conductance, ConductanceField, TruncatedView};
use rcm_core::lattice::{Boundary, Edge, LatticeRegion, Site};
use rcm_core::solver::{effective_conductance, green, GreenOptions, HeatKernelOptions, Uniformizer};
use rcm_core::walk::{simulate_vsrw, Unbounded};
use rcm_core::{Conductances, RngStream, TailLaw};

fn site3() -> impl Strategy<Value = Site> {
    prop::array::uniform3(-1000i32..1000).prop_map(|c| Site::new(&c))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn survival_is_exact(d in 2usize..6, u in 1.0f64..1e9) {
        let law = TailLaw::cauchy(d).unwrap();
        let exact = 1.0 / (2.0 * d as f64 * u);
        prop_assert!((law.survival(u) - exact).abs() <= 1e-15 * exact);
        prop_assert!(law.cdf(u) <= 1.0 && law.cdf_left(u) <= law.cdf(u));
    }

    #[test]
    fn quantile_round_trip(u in 1.0f64..500.0) {
        let law = TailLaw::cauchy(3).unwrap();
        let q = law.quantile(law.cdf(u));
        prop_assert!((q - u).abs() <= 1e-12 * u);
    }

    #[test]
    fn samples_at_least_one(v in 1e-300f64..=1.0, d in 2usize..5) {
        let law = TailLaw::cauchy(d).unwrap();
        prop_assert!(law.sample_from_uniform(v) >= 1.0);
    }

    #[test]
    fn field_is_pure_symmetric(seed in any::<u64>(), x in site3(), dir in 0usize..6) {
        let f = ConductanceField::lazy(TailLaw::cauchy(3).unwrap(), seed);
        let y = x.neighbor(dir);
        let a = f.sample_edge(&x, &y).unwrap();
        let b = f.sample_edge(&y, &x).unwrap();
        let again = ConductanceField::lazy(TailLaw::cauchy(3).unwrap(), seed).sample_edge(&x, &y).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
        prop_assert_eq!(a.to_bits(), again.to_bits());
        prop_assert!(a >= 1.0);
    }

    #[test]
    fn truncation_monotone(seed in any::<u64>(), x in site3(), a1 in 0.01f64..10.0, a2 in 0.01f64..10.0) {
        let f = ConductanceField::lazy(TailLaw::cauchy(3).unwrap(), seed);
        let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        let t_lo = TruncatedView::new(&f, lo, 4.0).unwrap();
        let t_hi = TruncatedView::new(&f, hi, 4.0).unwrap();
        for dir in 0..6 {
            let e = Edge::from_dir(&x, dir);
            let m = f.conductance(&e);
            prop_assert!(t_lo.conductance(&e) <= t_hi.conductance(&e));
            prop_assert!(t_hi.conductance(&e) <= m);
            let c = t_lo.conductance(&e);
            prop_assert!(c == 0.0 || (1.0..=t_lo.cutoff()).contains(&c));
        }
        prop_assert!(site_conductance(&t_lo, &x) <= 6.0 * t_lo.cutoff());
    }

    #[test]
    fn region_index_is_bijective(d in 2usize..5, h in 1u32..4, cx in -5i32..5) {
        let mut c = vec![0; d];
        c[0] = cx;
        let r = LatticeRegion::new(Site::new(&c), h, Boundary::Free).unwrap();
        for i in 0..r.len() {
            let s = r.site(i);
            prop_assert_eq!(r.index(&s), Some(i));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trajectories_are_valid(seed in any::<u64>(), walker in any::<u64>(), horizon in 0.1f64..30.0) {
        let m = Unbounded(ConductanceField::lazy(TailLaw::cauchy(3).unwrap(), seed));
        let traj = simulate_vsrw(&m, Site::origin(3), horizon, &mut RngStream::new(seed, walker)).unwrap();
        prop_assert!(traj.is_valid());
        prop_assert_eq!(traj.clock_value(0.0).unwrap(), 0.0);
        let mut last = 0.0;
        for k in 1..=20 {
            let s = traj.clock_value(horizon * (k as f64 / 20.0)).unwrap();
            prop_assert!(s > last);
            last = s;
        }
        // A(S(t)) = t inside holding intervals
        let e = traj.epochs();
        for w in e.windows(2).take(50) {
            let t = 0.5 * (w[0] + w[1]);
            let back = traj.inverse_clock(traj.clock_value(t).unwrap()).unwrap();
            prop_assert!((back - t).abs() <= 1e-9 * (1.0 + t));
        }
    }

    #[test]
    fn kernel_mass_symmetry_semigroup(seed in any::<u64>()) {
        let env = ConductanceField::lazy(TailLaw::cauchy(2).unwrap(), seed);
        let view = TruncatedView::new(&env, 1.0, 5.0).unwrap();
        let region = LatticeRegion::cube(2, 5, Boundary::Free).unwrap();
        let u = Uniformizer::new(&view, region).unwrap();
        let opts = HeatKernelOptions { tol: 1e-10, max_work: 1e12 };
        let x = Site::new(&[-2, 1]);
        let y = Site::new(&[3, 0]);
        let px = u.kernel(&x, &[0.5, 1.0, 1.5], &opts).unwrap();
        let py = u.kernel(&y, &[1.5], &opts).unwrap();
        for k in 0..3 {
            prop_assert!((px.mass(k) - 1.0).abs() <= 2.0 * opts.tol);
            prop_assert!(px.values(k).iter().all(|&v| v >= 0.0));
        }
        prop_assert!((px.value(2, &y) - py.value(0, &x)).abs() <= 2.0 * opts.tol);
        let composed = u.propagate(px.values(0), 1.0, &opts).unwrap();
        let defect: f64 = composed.iter().zip(px.values(2)).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!(defect <= 4.0 * opts.tol);
    }

    #[test]
    fn green_ceff_duality(seed in any::<u64>(), cx in -2i32..=2) {
        let env = ConductanceField::lazy(TailLaw::cauchy(3).unwrap(), seed);
        let region = LatticeRegion::cube(3, 4, Boundary::Dirichlet).unwrap();
        let x = Site::new(&[cx, 0, -1]);
        let g = green(&env, &x, region, &GreenOptions { tol: 1e-12, ..Default::default() }).unwrap();
        let c = effective_conductance(&env, &region, &[x], &[], 1e-12).unwrap();
        prop_assert!((c.conductance * g.value(&x) - 1.0).abs() <= 1e-7);
        prop_assert!((c.conductance - c.flux).abs() <= 1e-7 * c.conductance);
        prop_assert!(g.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn cluster_labels_are_canonical(seed in any::<u64>()) {
        let law = TailLaw::cauchy(3).unwrap();
        let env = ConductanceField::lazy(law, seed);
        let region = LatticeRegion::cube(3, 4, Boundary::Free).unwrap();
        let a_p = 2.0;
        let map = percolation_clusters(&env, &region, a_p, env.open_probability(a_p)).unwrap();
        for i in 0..region.len() {
            let l = map.label(&region.site(i)).unwrap();
            prop_assert!(l <= i);
            prop_assert_eq!(map.label(&region.site(l)), Some(l));
        }
        // open bonds join equal labels
        for e in region.edges() {
            if env.conductance(&e) > a_p {
                prop_assert_eq!(map.label(e.lo()), map.label(&e.hi()));
            }
        }
    }
}
