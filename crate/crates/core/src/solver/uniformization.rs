//! Heat kernels `p_t(x0, .)` on a box by uniformization:
//! `p_t = sum_k Poisson(Lambda t; k) P^k delta_{x0}` with
//! `P = I + L / Lambda` and `Lambda = max_x mu_x`.

use alloc::vec;
use alloc::vec::Vec;

use super::operator::BoxOperator;
use crate::env::Conductances;
use crate::error::{Error, Result};
use crate::lattice::{LatticeRegion, Site};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatKernelOptions {
    /// Truncation tolerance in total variation, in `(0, 1e-6]`.
    pub tol: f64,
    /// Cap on `terms * sites * (2d + 1)`.
    pub max_work: f64,
}

impl Default for HeatKernelOptions {
    fn default() -> Self {
        HeatKernelOptions { tol: 1e-10, max_work: 5e10 }
    }
}

impl HeatKernelOptions {
    pub fn with_tol(tol: f64) -> Self {
        HeatKernelOptions { tol, ..Self::default() }
    }
}

/// `p_t(x0, y)` for every `y` in a box and every requested `t`, or the
/// occupation densities `int_0^t p_s(x0, y) ds` when built by
/// [`integrated_kernel`].
#[derive(Clone, Debug, PartialEq)]
pub struct KernelField {
    source: Site,
    times: Vec<f64>,
    region: LatticeRegion,
    values: Vec<Vec<f64>>,
    tol: f64,
    rate: f64,
    terms: usize,
    integrated: bool,
}

impl KernelField {
    pub fn source(&self) -> &Site {
        &self.source
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn region(&self) -> &LatticeRegion {
        &self.region
    }

    /// Bound on the neglected Poisson mass (or occupation time).
    pub fn tol_achieved(&self) -> f64 {
        self.tol
    }

    /// The uniformization rate `Lambda`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Number of powers of `P` summed.
    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn is_integrated(&self) -> bool {
        self.integrated
    }

    /// Values at the `k`-th time, in region index order.
    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// `p_t(x0, y)` at the `k`-th time; zero outside the box.
    pub fn value(&self, k: usize, y: &Site) -> f64 {
        self.region.index(y).map_or(0.0, |i| self.values[k][i])
    }

    pub fn mass(&self, k: usize) -> f64 {
        self.values[k].iter().sum()
    }
}

/// Poisson weights `w_k` for `k <= K` and a bound on what is left out.
fn poisson_pmf(lambda: f64, tol: f64, integrated: bool) -> (Vec<f64>, f64) {
    if lambda == 0.0 {
        return (vec![1.0], 0.0);
    }
    let ln_l = libm::log(lambda);
    let mut pmf = Vec::with_capacity((lambda + 10.0 * libm::sqrt(lambda) + 20.0) as usize);
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let lp = -lambda + kf * ln_l - libm::lgamma(kf + 1.0);
        pmf.push(libm::exp(lp));
        if kf + 2.0 > lambda {
            // tail beyond k is dominated by a geometric series with ratio r
            let next = libm::exp(lp + ln_l - libm::log(kf + 1.0));
            let r = lambda / (kf + 2.0);
            let bound = if integrated { next / ((1.0 - r) * (1.0 - r) * lambda) } else { next / (1.0 - r) };
            if r < 1.0 && bound < tol {
                return (pmf, bound);
            }
        }
        k += 1;
    }
}

/// Integrated weights `int_0^T Poisson(Lambda s; k) ds = P(N_{Lambda T} > k) / Lambda`.
fn integrated_weights(pmf: &[f64], lambda: f64) -> Vec<f64> {
    let mut w = vec![0.0; pmf.len()];
    let mut tail = 0.0;
    for k in (0..pmf.len()).rev() {
        w[k] = tail;
        tail += pmf[k];
    }
    // the head sum is more accurate where the tail is close to one
    let mut head = 0.0;
    for k in 0..pmf.len() {
        head += pmf[k];
        if head < 0.5 {
            w[k] = 1.0 - head;
        }
    }
    w.iter_mut().for_each(|v| *v /= lambda);
    w
}

/// A box operator together with its uniformization rate.
#[derive(Clone, Debug)]
pub struct Uniformizer {
    op: BoxOperator,
    lambda: f64,
}

impl Uniformizer {
    pub fn new<C: Conductances + ?Sized>(env: &C, region: LatticeRegion) -> Result<Self> {
        let op = BoxOperator::new(env, region)?;
        let lambda = op.max_rate();
        if !lambda.is_finite() {
            return Err(Error::invalid("env", "site conductance is not finite on the box"));
        }
        Ok(Uniformizer { op, lambda })
    }

    pub fn operator(&self) -> &BoxOperator {
        &self.op
    }

    pub fn rate(&self) -> f64 {
        self.lambda
    }

    fn check(&self, times: &[f64], opts: &HeatKernelOptions) -> Result<()> {
        if !(opts.tol > 0.0 && opts.tol <= 1e-6) {
            return Err(Error::invalid("tol", "must lie in (0, 1e-6]"));
        }
        if times.is_empty() {
            return Err(Error::Empty("times"));
        }
        if times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::invalid("times", "must be positive and finite"));
        }
        let t_max = times.iter().copied().fold(0.0, f64::max);
        let lt = self.lambda * t_max;
        let work = (lt + 10.0 * libm::sqrt(lt) + 20.0) * self.op.len() as f64 * (2 * self.op.region().dim() + 1) as f64;
        if work > opts.max_work {
            return Err(Error::BudgetExceeded {
                required: work,
                budget: opts.max_work,
                hint: "use a truncated view, a smaller box, or the Monte Carlo estimator",
            });
        }
        Ok(())
    }

    /// `sum_k w_j(k) P^k init` for each time `t_j`; returns the fields, the
    /// truncation bound and the number of terms.
    fn evolve(&self, init: &[f64], times: &[f64], opts: &HeatKernelOptions, integrated: bool) -> Result<(Vec<Vec<f64>>, f64, usize)> {
        self.check(times, opts)?;
        if init.len() != self.op.len() {
            return Err(Error::invalid("init", "length differs from the box"));
        }
        let mass: f64 = init.iter().map(|v| v.abs()).sum();
        if self.lambda == 0.0 {
            let out = times
                .iter()
                .map(|&t| init.iter().map(|v| if integrated { v * t } else { *v }).collect())
                .collect();
            return Ok((out, 0.0, 1));
        }
        let mut weights = Vec::with_capacity(times.len());
        let mut tol = 0.0f64;
        let mut terms = 0;
        for &t in times {
            let (pmf, bound) = poisson_pmf(self.lambda * t, opts.tol, integrated);
            let w = if integrated { integrated_weights(&pmf, self.lambda) } else { pmf };
            // integrated bound is on occupation time, relative to t
            tol = tol.max(if integrated { bound * t } else { bound } * mass);
            terms = terms.max(w.len());
            weights.push(w);
        }
        let n = self.op.len();
        let mut out = vec![vec![0.0; n]; times.len()];
        let mut v = init.to_vec();
        let mut next = vec![0.0; n];
        let inv = 1.0 / self.lambda;
        for k in 0..terms {
            for (o, w) in out.iter_mut().zip(&weights) {
                if let Some(&wk) = w.get(k) {
                    if wk > 0.0 {
                        o.iter_mut().zip(&v).for_each(|(a, b)| *a += wk * b);
                    }
                }
            }
            if k + 1 < terms {
                self.op.uniform_step(&v, &mut next, inv);
                core::mem::swap(&mut v, &mut next);
            }
        }
        Ok((out, tol, terms))
    }

    fn source_vector(&self, x0: &Site) -> Result<Vec<f64>> {
        let i = self.op.region().index(x0).ok_or(Error::OutsideRegion)?;
        let mut v = vec![0.0; self.op.len()];
        v[i] = 1.0;
        Ok(v)
    }

    pub fn kernel(&self, x0: &Site, times: &[f64], opts: &HeatKernelOptions) -> Result<KernelField> {
        let init = self.source_vector(x0)?;
        let (values, tol, terms) = self.evolve(&init, times, opts, false)?;
        Ok(self.field(*x0, times, values, tol, terms, false))
    }

    /// Occupation densities `int_0^T p_s(x0, .) ds` for each `T` in `horizons`.
    pub fn integrated(&self, x0: &Site, horizons: &[f64], opts: &HeatKernelOptions) -> Result<KernelField> {
        let init = self.source_vector(x0)?;
        let (values, tol, terms) = self.evolve(&init, horizons, opts, true)?;
        Ok(self.field(*x0, horizons, values, tol, terms, true))
    }

    /// `sum_z init(z) p_t(z, .)`.
    pub fn propagate(&self, init: &[f64], t: f64, opts: &HeatKernelOptions) -> Result<Vec<f64>> {
        Ok(self.evolve(init, &[t], opts, false)?.0.pop().unwrap())
    }

    fn field(&self, source: Site, times: &[f64], values: Vec<Vec<f64>>, tol: f64, terms: usize, integrated: bool) -> KernelField {
        KernelField {
            source,
            times: times.to_vec(),
            region: *self.op.region(),
            values,
            tol,
            rate: self.lambda,
            terms,
            integrated,
        }
    }
}

/// `p_t(x0, .)` on `region` for each `t` in `times`.
pub fn heat_kernel<C: Conductances + ?Sized>(
    env: &C,
    x0: &Site,
    times: &[f64],
    region: LatticeRegion,
    opts: &HeatKernelOptions,
) -> Result<KernelField> {
    Uniformizer::new(env, region)?.kernel(x0, times, opts)
}

/// `int_0^T p_s(x0, .) ds` on `region` for each `T` in `horizons`.
pub fn integrated_kernel<C: Conductances + ?Sized>(
    env: &C,
    x0: &Site,
    horizons: &[f64],
    region: LatticeRegion,
    opts: &HeatKernelOptions,
) -> Result<KernelField> {
    Uniformizer::new(env, region)?.integrated(x0, horizons, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ConductanceField;
    use crate::lattice::Boundary;
    use crate::law::TailLaw;

    #[test]
    fn pmf_sums_to_one() {
        for &l in &[0.3, 5.0, 200.0, 5000.0] {
            let (p, bound) = poisson_pmf(l, 1e-12, false);
            let s: f64 = p.iter().sum();
            assert!((s - 1.0).abs() < 1e-11, "{l}: {s}");
            assert!(bound < 1e-12);
            let w = integrated_weights(&p, 2.0);
            // sum_k P(N > k) = E N
            let total: f64 = w.iter().sum::<f64>() * 2.0;
            assert!((total - l).abs() < 1e-9 * (1.0 + l), "{total} vs {l}");
        }
    }

    #[test]
    fn tiny_time_is_a_point_mass() {
        let env = ConductanceField::homogeneous(2, 1.0).unwrap();
        let region = LatticeRegion::cube(2, 3, Boundary::Free).unwrap();
        let kf = heat_kernel(&env, &Site::origin(2), &[1e-13], region, &HeatKernelOptions::default()).unwrap();
        assert!((kf.value(0, &Site::origin(2)) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn two_site_chain_closed_form() {
        // a single bond of conductance m inside a 1x2 free window behaves as
        // a two-state chain: p_t(0,0) = (1 + exp(-2 m t)) / 2
        let m = 3.0;
        let env = crate::env::FnField::new(2, move |e: &crate::lattice::Edge| {
            if *e.lo() == Site::origin(2) && e.axis() == 0 {
                m
            } else {
                0.0
            }
        });
        let region = LatticeRegion::cube(2, 1, Boundary::Free).unwrap();
        let t = 0.7;
        let kf = heat_kernel(&env, &Site::origin(2), &[t], region, &HeatKernelOptions::with_tol(1e-13)).unwrap();
        let exact = 0.5 * (1.0 + libm::exp(-2.0 * m * t));
        assert!((kf.value(0, &Site::origin(2)) - exact).abs() < 1e-12);
        let occ = integrated_kernel(&env, &Site::origin(2), &[t], region, &HeatKernelOptions::with_tol(1e-13)).unwrap();
        let exact_occ = 0.5 * t + (1.0 - libm::exp(-2.0 * m * t)) / (4.0 * m);
        assert!((occ.value(0, &Site::origin(2)) - exact_occ).abs() < 1e-12);
    }

    #[test]
    fn mass_and_positivity_random_field() {
        let env = ConductanceField::lazy(TailLaw::cauchy(2).unwrap(), 17);
        let region = LatticeRegion::cube(2, 6, Boundary::Free).unwrap();
        let u = Uniformizer::new(&env, region).unwrap();
        let opts = HeatKernelOptions { tol: 1e-10, max_work: 1e12 };
        let kf = u.kernel(&Site::origin(2), &[0.5, 2.0], &opts).unwrap();
        for k in 0..2 {
            assert!((kf.mass(k) - 1.0).abs() <= 2.0 * opts.tol);
            assert!(kf.values(k).iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn budget_is_enforced() {
        let env = ConductanceField::homogeneous(3, 1e6).unwrap();
        let region = LatticeRegion::cube(3, 10, Boundary::Free).unwrap();
        let r = heat_kernel(&env, &Site::origin(3), &[100.0], region, &HeatKernelOptions::default());
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }
}
