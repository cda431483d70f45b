use rcm_core::env::{ConductanceField, FnField};
use rcm_core::lattice::{ball, Boundary, Edge, LatticeRegion, Site};
use rcm_core::solver::{
    effective_conductance, gamma_n, gamma_n_site, green, heat_kernel, lattice_power_sum, mc_heat_kernel, GreenOptions,
    HeatKernelOptions, SiteBall,
};
use rcm_core::walk::Unbounded;
use rcm_core::TailLaw;

/// `I_k(x)` by its power series.
fn bessel_i(k: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = half.powi(k as i32) / (1..=k).map(|j| j as f64).product::<f64>();
    let mut sum = term;
    for m in 1..200 {
        term *= half * half / (m as f64 * (m + k) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Unit-conductance VSRW in `Z^d` factorises into rate-2 walks on `Z`.
fn product_kernel(t: f64, y: &[i32]) -> f64 {
    y.iter().map(|&c| (-2.0 * t).exp() * bessel_i(c.unsigned_abs(), 2.0 * t)).product()
}

#[test]
fn homogeneous_kernel_matches_bessel_product() {
    let env = ConductanceField::homogeneous(2, 1.0).unwrap();
    let region = LatticeRegion::cube(2, 20, Boundary::Free).unwrap();
    let opts = HeatKernelOptions::with_tol(1e-12);
    let kf = heat_kernel(&env, &Site::origin(2), &[0.25, 1.0, 3.0], region, &opts).unwrap();
    for (k, &t) in [0.25, 1.0, 3.0].iter().enumerate() {
        for y in [[0, 0], [1, 0], [2, -1], [3, 3], [0, 5]] {
            let exact = product_kernel(t, &y);
            assert!((kf.value(k, &Site::new(&y)) - exact).abs() < 1e-10, "t={t} y={y:?}");
        }
    }
    assert!((product_kernel(1.0, &[0, 0]) - 0.0951773851).abs() < 1e-9);
}

#[test]
fn monte_carlo_ball_average_agrees_with_kernel() {
    let env = ConductanceField::homogeneous(2, 1.0).unwrap();
    let region = LatticeRegion::cube(2, 25, Boundary::Free).unwrap();
    let kf = heat_kernel(&env, &Site::origin(2), &[4.0], region, &HeatKernelOptions::default()).unwrap();
    let centres = [[0, 0], [2, 1], [-3, 0], [1, -4]];
    let balls: Vec<SiteBall> = centres.iter().map(|c| SiteBall::new(Site::new(c), 2.0, None).unwrap()).collect();
    let est = mc_heat_kernel(&Unbounded(&env), &Site::origin(2), 4.0, 100_000, 7, &balls).unwrap();
    for (b, e) in balls.iter().zip(&est) {
        let exact: f64 = b.sites().iter().map(|s| kf.value(0, s)).sum::<f64>() / b.len() as f64;
        assert!((e.estimate - exact).abs() < 3.0 * e.std_err, "{:?}: {} vs {}", b.center(), e.estimate, exact);
    }
}

#[test]
fn parallel_and_series_networks() {
    // two parallel paths of two bonds each between (0,0) and (2,0)
    let cond = |e: &Edge| -> f64 {
        let (x, y) = (e.lo().coord(0), e.lo().coord(1));
        match (e.axis(), x, y) {
            (0, 0, 0) => 1.0,
            (0, 1, 0) => 3.0,
            (1, 0, 0) => 2.0,
            (0, 0, 1) => 2.0,
            (0, 1, 1) => 2.0,
            (1, 2, 0) => 4.0,
            _ => 0.0,
        }
    };
    let env = FnField::new(2, cond);
    let region = LatticeRegion::cube(2, 3, Boundary::Free).unwrap();
    let r = effective_conductance(&env, &region, &[Site::new(&[0, 0])], &[Site::new(&[2, 0])], 1e-13).unwrap();
    let series = |a: f64, b: f64| a * b / (a + b);
    // bottom: 1 then 3; top: 2, 2, 2, 4 in series
    let exact = series(1.0, 3.0) + 1.0 / (1.0 / 2.0 + 1.0 / 2.0 + 1.0 / 2.0 + 1.0 / 4.0);
    assert!((r.conductance - exact).abs() < 1e-11);
    assert!((r.flux - exact).abs() < 1e-11);
}

#[test]
fn green_decays_like_inverse_distance() {
    let env = ConductanceField::homogeneous(3, 1.0).unwrap();
    let region = LatticeRegion::cube(3, 30, Boundary::Dirichlet).unwrap();
    let g = green(&env, &Site::origin(3), region, &GreenOptions::default()).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for s in ball(&Site::origin(3), 15.0) {
        let r = s.norm();
        if r >= 2.0 {
            let v = g.value(&s) * r;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    assert!(hi / lo <= 2.0, "{lo} {hi}");
    // the continuum constant for unit edge rates is 1 / (4 pi)
    assert!(hi > 1.0 / (4.0 * std::f64::consts::PI) * 0.5);
}

#[test]
fn gamma_bounded_below_by_inverse_green() {
    let env = ConductanceField::lazy(TailLaw::cauchy(3).unwrap(), 1234);
    let x = Site::origin(3);
    let e = Edge::from_dir(&x, 0);
    let b = 5.0;
    let ge = gamma_n(&env, &e, b, None, 1e-11).unwrap();
    let gx = gamma_n_site(&env, &x, b + 1.0, None, 1e-11).unwrap();
    let region = LatticeRegion::new(x, 12, Boundary::Dirichlet).unwrap();
    let g = green(&env, &x, region, &GreenOptions::default()).unwrap();
    assert!(ge >= gx && gx >= 1.0 / g.value(&x), "{ge} {gx} {}", 1.0 / g.value(&x));
}

#[test]
fn power_sum_growth_rates() {
    let ratio3: Vec<f64> = [16u32, 32, 64].iter().map(|&n| lattice_power_sum(3, 1.0, n, -1.0).unwrap() / (n * n) as f64).collect();
    let spread3 = ratio3.iter().cloned().fold(0.0, f64::max) / ratio3.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread3 <= 1.1 / 0.9, "{ratio3:?}");
    // continuum value: int_{|x| <= 1} |x|^{-1} dx = 2 pi
    assert!((ratio3[2] - 2.0 * std::f64::consts::PI).abs() < 0.05 * 2.0 * std::f64::consts::PI);

    let ratio4: Vec<f64> = [16u32, 32, 64].iter().map(|&n| lattice_power_sum(4, 1.0, n, -4.0).unwrap() / (n as f64).ln()).collect();
    let mean4 = ratio4.iter().sum::<f64>() / 3.0;
    assert!(ratio4.iter().all(|r| (r - mean4).abs() <= 0.15 * mean4), "{ratio4:?}");
}
