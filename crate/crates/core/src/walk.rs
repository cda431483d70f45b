//! Exact continuous-time simulation of the variable speed walk `Y`, its
//! clock `S_t = int_0^t mu_{Y_s} ds`, and the constant speed walk
//! `X_t = Y_{A_t}` with `A = S^{-1}`.
//!
//! There is no time discretisation: the walk holds an `Exp(mu_x)` time at
//! `x` and then steps to `y ~ x` with probability `mu_xy / mu_x`. The clock
//! increment over one holding interval is `mu_x * Exp(mu_x) ~ Exp(1)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::Conductances;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, LatticeRegion, Site, MAX_DIM};
use crate::rng::RngStream;

/// What a walker sees of its environment: jump rates out of each site.
pub trait Medium {
    fn dim(&self) -> usize;

    /// Rates to the `2d` neighbours of `x` in direction order; returns the
    /// total rate `mu_x` (only the first `2d` slots are written).
    fn rates(&self, x: &Site, out: &mut [f64; 2 * MAX_DIM]) -> f64;

    /// Whether `x` is absorbing (outside a Dirichlet window).
    #[inline]
    fn absorbing(&self, _x: &Site) -> bool {
        false
    }

    /// Precomputed rates on a window, if any. Must agree with `rates` on the
    /// window, and no window site may be absorbing.
    #[inline]
    fn table(&self) -> Option<&RateTable> {
        None
    }
}

/// Flat rate table over a cube: site `lo + sum_i o_i e_i` sits in slot
/// `sum_i o_i side^i`.
#[derive(Clone, Debug)]
pub struct RateTable {
    rates: Vec<f64>,
    totals: Vec<f64>,
    lo: [i32; MAX_DIM],
    side: u32,
    strides: [usize; MAX_DIM],
}

impl RateTable {
    #[inline(always)]
    fn slot(&self, x: &Site) -> Option<usize> {
        let mut idx = 0usize;
        for (a, &c) in x.coords().iter().enumerate() {
            let off = c.wrapping_sub(self.lo[a]) as u32;
            if off >= self.side {
                return None;
            }
            idx += off as usize * self.strides[a];
        }
        Some(idx)
    }

    /// Slot of the neighbour of `x` (in `slot`) in direction `dir`.
    #[inline(always)]
    fn step(&self, x: &Site, slot: usize, dir: usize) -> Option<usize> {
        let a = dir >> 1;
        let off = x.coord(a).wrapping_sub(self.lo[a]) as u32;
        if dir & 1 == 0 {
            (off + 1 < self.side).then(|| slot + self.strides[a])
        } else {
            (off > 0).then(|| slot - self.strides[a])
        }
    }
}

impl<M: Medium + ?Sized> Medium for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    #[inline]
    fn rates(&self, x: &Site, out: &mut [f64; 2 * MAX_DIM]) -> f64 {
        (**self).rates(x, out)
    }
    #[inline]
    fn absorbing(&self, x: &Site) -> bool {
        (**self).absorbing(x)
    }
    #[inline]
    fn table(&self) -> Option<&RateTable> {
        (**self).table()
    }
}

/// The whole lattice, conductances evaluated on demand.
#[derive(Clone, Debug)]
pub struct Unbounded<C>(pub C);

impl<C: Conductances> Medium for Unbounded<C> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    fn rates(&self, x: &Site, out: &mut [f64; 2 * MAX_DIM]) -> f64 {
        self.0.incident(x, &mut out[..])
    }
}

/// A finite window with precomputed rates. With a free boundary the bonds
/// leaving the window are removed (the generator restricted to the box);
/// with a Dirichlet boundary they are kept and the outside absorbs.
#[derive(Clone, Debug)]
pub struct Boxed {
    region: LatticeRegion,
    table: RateTable,
}

impl Boxed {
    pub fn new<C: Conductances + ?Sized>(env: &C, region: LatticeRegion) -> Result<Self> {
        let d = region.dim();
        if env.dim() != d {
            return Err(Error::invalid("region", "dimension differs from the environment"));
        }
        let mut rates = vec![0.0; region.len() * 2 * d];
        let mut totals = vec![0.0; region.len()];
        let mut buf = [0.0; 2 * MAX_DIM];
        for (i, x) in region.sites().enumerate() {
            env.incident(&x, &mut buf);
            let mut total = 0.0;
            for dir in 0..2 * d {
                let keep = region.boundary() == Boundary::Dirichlet || region.contains(&x.neighbor(dir));
                let r = if keep { buf[dir] } else { 0.0 };
                rates[i * 2 * d + dir] = r;
                total += r;
            }
            totals[i] = total;
        }
        let mut lo = [0i32; MAX_DIM];
        for (l, c) in lo.iter_mut().zip(region.center().coords()) {
            *l = c - region.half_side() as i32;
        }
        let side = region.side();
        let mut strides = [0usize; MAX_DIM];
        let mut s = 1usize;
        for st in strides.iter_mut().take(d) {
            *st = s;
            s *= side;
        }
        Ok(Boxed { region, table: RateTable { rates, totals, lo, side: side as u32, strides } })
    }

    pub fn region(&self) -> &LatticeRegion {
        &self.region
    }

    /// `mu_x` as seen by the walk, for `x` in the window.
    pub fn total_rate(&self, x: &Site) -> Option<f64> {
        self.region.index(x).map(|i| self.table.totals[i])
    }

    pub fn max_rate(&self) -> f64 {
        self.table.totals.iter().copied().fold(0.0, f64::max)
    }
}

impl Medium for Boxed {
    fn dim(&self) -> usize {
        self.region.dim()
    }

    #[inline]
    fn rates(&self, x: &Site, out: &mut [f64; 2 * MAX_DIM]) -> f64 {
        let k = 2 * self.region.dim();
        match self.region.index(x) {
            Some(i) => {
                out[..k].copy_from_slice(&self.table.rates[i * k..(i + 1) * k]);
                self.table.totals[i]
            }
            None => {
                out[..k].iter_mut().for_each(|r| *r = 0.0);
                0.0
            }
        }
    }

    #[inline]
    fn absorbing(&self, x: &Site) -> bool {
        self.region.boundary() == Boundary::Dirichlet && !self.region.contains(x)
    }

    #[inline]
    fn table(&self) -> Option<&RateTable> {
        Some(&self.table)
    }
}

/// Rates of an unbounded environment, precomputed on a window. Sites outside
/// the window are evaluated on demand, so the walk is the same as with
/// [`Unbounded`].
#[derive(Clone, Debug)]
pub struct Cached<C> {
    table: Boxed,
    env: C,
}

impl<C: Conductances> Cached<C> {
    pub fn new(env: C, window: LatticeRegion) -> Result<Self> {
        // a Dirichlet window keeps every bond of its sites
        let window = LatticeRegion::new(*window.center(), window.half_side(), Boundary::Dirichlet)?;
        let table = Boxed::new(&env, window)?;
        Ok(Cached { table, env })
    }

    pub fn window(&self) -> &LatticeRegion {
        self.table.region()
    }
}

impl<C: Conductances> Medium for Cached<C> {
    fn dim(&self) -> usize {
        self.env.dim()
    }

    #[inline]
    fn rates(&self, x: &Site, out: &mut [f64; 2 * MAX_DIM]) -> f64 {
        match self.table.region.index(x) {
            Some(_) => self.table.rates(x, out),
            None => self.env.incident(x, &mut out[..]),
        }
    }

    #[inline]
    fn table(&self) -> Option<&RateTable> {
        Some(&self.table.table)
    }
}

/// How far to run a walker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    /// Until real time reaches the value.
    Time(f64),
    /// Until the clock `S` reaches the value.
    Clock(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Reached,
    /// Stepped into an absorbing site.
    Absorbed,
    /// Sitting at a site with no open bonds; the clock cannot advance.
    Stuck,
}

/// A variable speed walker positioned at a site at some time.
pub struct Walker<'m, M: Medium + ?Sized> {
    medium: &'m M,
    site: Site,
    time: f64,
    clock: f64,
    jumps: u64,
    total: f64,
    rates: [f64; 2 * MAX_DIM],
    absorbed: bool,
    table: Option<&'m RateTable>,
    // slot of `site` in `table`, or NO_SLOT
    slot: usize,
}

const NO_SLOT: usize = usize::MAX;

impl<'m, M: Medium + ?Sized> Walker<'m, M> {
    pub fn new(medium: &'m M, start: Site) -> Result<Self> {
        if start.dim() != medium.dim() {
            return Err(Error::invalid("start", "dimension differs from the medium"));
        }
        if medium.absorbing(&start) {
            return Err(Error::OutsideRegion);
        }
        let mut rates = [0.0; 2 * MAX_DIM];
        let total = medium.rates(&start, &mut rates);
        let table = medium.table();
        let slot = table.and_then(|t| t.slot(&start)).unwrap_or(NO_SLOT);
        Ok(Walker { medium, site: start, time: 0.0, clock: 0.0, jumps: 0, total, rates, absorbed: false, table, slot })
    }

    pub fn site(&self) -> &Site {
        &self.site
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn jumps(&self) -> u64 {
        self.jumps
    }

    pub fn is_absorbed(&self) -> bool {
        self.absorbed
    }

    /// Current site's total rate `mu_x`.
    pub fn rate(&self) -> f64 {
        self.total
    }

    #[inline(always)]
    fn choose_direction(rates: &[f64], total: f64, rng: &mut RngStream) -> usize {
        let k = rates.len();
        let mut u = rng.uniform() * total;
        for (dir, &r) in rates[..k - 1].iter().enumerate() {
            if u < r {
                return dir;
            }
            u -= r;
        }
        // rounding can leave u marginally above the last rate
        (0..k).rev().find(|&dir| rates[dir] > 0.0).unwrap()
    }

    #[inline(always)]
    fn jump(&mut self, rng: &mut RngStream) {
        let k = 2 * self.site.dim();
        match self.table {
            Some(t) if self.slot != NO_SLOT => {
                let dir = Self::choose_direction(&t.rates[self.slot * k..(self.slot + 1) * k], self.total, rng);
                let next = t.step(&self.site, self.slot, dir);
                self.site = self.site.neighbor(dir);
                self.jumps += 1;
                match next {
                    Some(i) => {
                        self.slot = i;
                        self.total = t.totals[i];
                    }
                    None => self.leave_table(),
                }
            }
            _ => {
                let dir = Self::choose_direction(&self.rates[..k], self.total, rng);
                self.site = self.site.neighbor(dir);
                self.jumps += 1;
                self.slot = self.table.and_then(|t| t.slot(&self.site)).unwrap_or(NO_SLOT);
                match self.table {
                    Some(t) if self.slot != NO_SLOT => self.total = t.totals[self.slot],
                    _ => self.leave_table(),
                }
            }
        }
    }

    // the site is outside any table: ask the medium
    #[cold]
    fn leave_table(&mut self) {
        self.slot = NO_SLOT;
        if self.medium.absorbing(&self.site) {
            self.absorbed = true;
            self.total = 0.0;
        } else {
            self.total = self.medium.rates(&self.site, &mut self.rates);
        }
    }

    /// Run until `stop`, calling `on_hold(site, rate, t0, t1)` for every
    /// holding interval `[t0, t1)` (the last one truncated at the stop).
    /// Holding times are memoryless, so a walker may be run again from where
    /// it stopped.
    #[inline]
    pub fn run<F: FnMut(&Site, f64, f64, f64)>(&mut self, rng: &mut RngStream, stop: Stop, mut on_hold: F) -> Outcome {
        loop {
            if self.absorbed {
                return Outcome::Absorbed;
            }
            if self.total <= 0.0 {
                return match stop {
                    Stop::Time(h) => {
                        if h > self.time {
                            on_hold(&self.site, 0.0, self.time, h);
                            self.time = h;
                        }
                        Outcome::Reached
                    }
                    Stop::Clock(c) if c <= self.clock => Outcome::Reached,
                    Stop::Clock(_) => Outcome::Stuck,
                };
            }
            let e = rng.exp1();
            let hold = e / self.total;
            match stop {
                Stop::Time(h) if self.time + hold >= h => {
                    if h > self.time {
                        on_hold(&self.site, self.total, self.time, h);
                        self.clock += self.total * (h - self.time);
                        self.time = h;
                    }
                    return Outcome::Reached;
                }
                Stop::Clock(c) if self.clock + e >= c => {
                    if c > self.clock {
                        let t1 = self.time + (c - self.clock) / self.total;
                        on_hold(&self.site, self.total, self.time, t1);
                        self.time = t1;
                        self.clock = c;
                    }
                    return Outcome::Reached;
                }
                _ => {}
            }
            on_hold(&self.site, self.total, self.time, self.time + hold);
            self.time += hold;
            self.clock += e;
            self.jump(rng);
        }
    }

    /// Run until `stop` and report whether it was reached.
    pub fn advance(&mut self, rng: &mut RngStream, stop: Stop) -> Outcome {
        self.run(rng, stop, |_, _, _, _| {})
    }
}

/// A recorded VSRW path: the site held from each epoch on.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkTrajectory {
    sites: Vec<Site>,
    epochs: Vec<f64>,
    rates: Vec<f64>,
    clocks: Vec<f64>,
    horizon: f64,
    exited: bool,
}

impl WalkTrajectory {
    pub fn start(&self) -> &Site {
        &self.sites[0]
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Whether the walk was absorbed at a Dirichlet boundary.
    pub fn exited(&self) -> bool {
        self.exited
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(site, epoch)` pairs; the first is `(start, 0)`.
    pub fn jumps(&self) -> impl Iterator<Item = (&Site, f64)> {
        self.sites.iter().zip(self.epochs.iter().copied())
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn epochs(&self) -> &[f64] {
        &self.epochs
    }

    /// Total rate of the site held from each epoch.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Index of the holding interval containing time `t`.
    fn interval_at(&self, t: f64) -> usize {
        self.epochs.partition_point(|&e| e <= t).saturating_sub(1)
    }

    /// `Y_t`.
    pub fn position(&self, t: f64) -> Result<Site> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::HorizonExceeded { requested: t, available: self.horizon });
        }
        Ok(self.sites[self.interval_at(t)])
    }

    /// `S_t`, the clock at real time `t`.
    pub fn clock_value(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::HorizonExceeded { requested: t, available: self.horizon });
        }
        let k = self.interval_at(t);
        Ok(self.clocks[k] + self.rates[k] * (t - self.epochs[k]))
    }

    /// `S` at the horizon.
    pub fn total_clock(&self) -> f64 {
        let k = self.sites.len() - 1;
        self.clocks[k] + self.rates[k] * (self.horizon - self.epochs[k])
    }

    /// `A_s`, the right-continuous inverse of the clock.
    pub fn inverse_clock(&self, s: f64) -> Result<f64> {
        let total = self.total_clock();
        if !(0.0..=total * (1.0 + 8.0 * f64::EPSILON)).contains(&s) {
            return Err(Error::HorizonExceeded { requested: s, available: total });
        }
        let k = self.clocks.partition_point(|&c| c <= s) - 1;
        if self.rates[k] == 0.0 {
            return Ok(self.epochs[k]);
        }
        Ok(self.epochs[k] + (s - self.clocks[k]) / self.rates[k])
    }

    /// `X_s = Y_{A_s}`. Ties at interval boundaries resolve to the later
    /// interval.
    pub fn csrw_position(&self, s: f64) -> Result<Site> {
        let total = self.total_clock();
        if !(0.0..=total * (1.0 + 8.0 * f64::EPSILON)).contains(&s) {
            return Err(Error::HorizonExceeded { requested: s, available: total });
        }
        let k = self.clocks.partition_point(|&c| c <= s) - 1;
        Ok(self.sites[k])
    }

    /// `tau(center, R) = inf{t : |Y_t - center| > R}` (Euclidean), or `None`
    /// if the walk stays within distance `R` up to the horizon.
    pub fn exit_time(&self, center: &Site, radius: f64) -> Option<f64> {
        let r2 = radius * radius;
        self.jumps().find(|(s, _)| s.dist2(center) as f64 > r2).map(|(_, t)| t)
    }

    /// Nearest-neighbour moves and strictly increasing epochs.
    pub fn is_valid(&self) -> bool {
        self.sites.windows(2).all(|w| w[0].is_neighbor(&w[1]))
            && self.epochs.windows(2).all(|w| w[0] < w[1])
            && self.epochs.last().is_some_and(|&e| e <= self.horizon)
    }
}

/// Simulate the VSRW from `start` up to real time `horizon`.
pub fn simulate_vsrw<M: Medium + ?Sized>(
    medium: &M,
    start: Site,
    horizon: f64,
    rng: &mut RngStream,
) -> Result<WalkTrajectory> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    let mut w = Walker::new(medium, start)?;
    let mut sites = vec![start];
    let mut epochs = vec![0.0];
    let mut rates = vec![w.rate()];
    let mut clocks = vec![0.0];
    let mut last_end = 0.0;
    let mut last_clock = 0.0;
    let outcome = w.run(rng, Stop::Time(horizon), |site, rate, t0, t1| {
        if t0 > 0.0 {
            sites.push(*site);
            epochs.push(t0);
            rates.push(rate);
            clocks.push(last_clock);
        }
        last_clock += rate * (t1 - t0);
        last_end = t1;
    });
    let exited = outcome == Outcome::Absorbed;
    if exited {
        // record the absorbing site at the exit epoch
        sites.push(*w.site());
        epochs.push(last_end);
        rates.push(0.0);
        clocks.push(last_clock);
    }
    let traj = WalkTrajectory { sites, epochs, rates, clocks, horizon, exited };
    debug_assert!(traj.is_valid(), "invalid trajectory");
    Ok(traj)
}

/// `S^(n)_t = S_{n^2 t} / (n^2 ln n)` on a grid of `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockSeries {
    pub n: u32,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
}

fn check_scale(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("n", "scale must be at least 2"));
    }
    Ok(n as f64)
}

/// One VSRW run up to `n^2 max(t_grid)`, sampled on the grid.
pub fn rescaled_clock_series<M: Medium + ?Sized>(
    medium: &M,
    start: Site,
    n: u32,
    t_grid: &[f64],
    rng: &mut RngStream,
) -> Result<ClockSeries> {
    let nf = check_scale(n)?;
    if t_grid.iter().any(|&t| !(t >= 0.0)) || t_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("t_grid", "times must be nonnegative and nondecreasing"));
    }
    let norm = nf * nf * libm::log(nf);
    let mut w = Walker::new(medium, start)?;
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        w.advance(rng, Stop::Time(nf * nf * t));
        values.push(w.clock() / norm);
    }
    Ok(ClockSeries { n, t_grid: t_grid.to_vec(), values })
}

/// `X^(n)_t = X_{n^2 ln(n) t} / n` as a displacement from `start`.
pub fn rescaled_csrw_marginal<M: Medium + ?Sized>(
    medium: &M,
    start: Site,
    n: u32,
    t: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let nf = check_scale(n)?;
    if !(t >= 0.0) {
        return Err(Error::invalid("t", "must be nonnegative"));
    }
    let mut w = Walker::new(medium, start)?;
    let target = nf * nf * libm::log(nf) * t;
    if target > 0.0 {
        let mut pos = start;
        // X_s is the site held while the clock passes s
        w.run(rng, Stop::Clock(target), |site, _, _, _| pos = *site);
        return Ok(displacement(&pos, &start, nf));
    }
    Ok(vec![0.0; start.dim()])
}

/// `Y^(n)_t = Y_{n^2 t} / n` as a displacement from `start`.
pub fn rescaled_vsrw_marginal<M: Medium + ?Sized>(
    medium: &M,
    start: Site,
    n: u32,
    t: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let nf = check_scale(n)?;
    let mut w = Walker::new(medium, start)?;
    w.advance(rng, Stop::Time(nf * nf * t));
    Ok(displacement(w.site(), &start, nf))
}

fn displacement(x: &Site, start: &Site, n: f64) -> Vec<f64> {
    x.coords().iter().zip(start.coords()).map(|(&a, &b)| (a - b) as f64 / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ConductanceField, FnField};
    use crate::law::TailLaw;
    use crate::stats::Moments;

    fn homogeneous3() -> Unbounded<ConductanceField> {
        Unbounded(ConductanceField::homogeneous(3, 1.0).unwrap())
    }

    #[test]
    fn holding_times_homogeneous() {
        // one long path; dropping the final straddling interval biases the
        // mean only at order 1 / (number of holds)
        let m = homogeneous3();
        let traj = simulate_vsrw(&m, Site::origin(3), 2e5, &mut RngStream::new(2, 0)).unwrap();
        let holds: Moments = traj.epochs().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(holds.count() > 1_000_000);
        assert!((holds.mean() - 1.0 / 6.0).abs() < 4.0 * holds.std_err(), "{}", holds.mean());
    }

    #[test]
    fn jump_counts_homogeneous() {
        let m = homogeneous3();
        let horizon = 5.0;
        let counts: Moments = (0..20_000)
            .map(|w| (simulate_vsrw(&m, Site::origin(3), horizon, &mut RngStream::new(3, w)).unwrap().len() - 1) as f64)
            .collect();
        assert!((counts.mean() - 6.0 * horizon).abs() < 4.0 * counts.std_err());
    }

    #[test]
    fn clock_is_linear_on_homogeneous_field() {
        let m = homogeneous3();
        let mut rng = RngStream::new(3, 0);
        let traj = simulate_vsrw(&m, Site::origin(3), 10.0, &mut rng).unwrap();
        for &t in &[0.0, 0.3, 2.5, 9.99, 10.0] {
            assert!((traj.clock_value(t).unwrap() - 6.0 * t).abs() < 1e-12);
        }
        assert!(traj.clock_value(10.5).is_err());
        // X_s = Y_{s/6}
        for &s in &[0.0, 1.0, 17.3, 59.0] {
            assert_eq!(traj.csrw_position(s).unwrap(), traj.position(s / 6.0).unwrap());
        }
        assert_eq!(traj.csrw_position(0.0).unwrap(), Site::origin(3));
    }

    #[test]
    fn single_interval_clock() {
        // isolated pair of sites joined by conductance m
        let m = 7.5;
        let f = FnField::new(2, move |e: &crate::lattice::Edge| {
            if *e.lo() == Site::origin(2) && e.axis() == 0 {
                m
            } else {
                0.0
            }
        });
        let medium = Unbounded(f);
        let mut rng = RngStream::new(4, 0);
        let traj = simulate_vsrw(&medium, Site::origin(2), 50.0, &mut rng).unwrap();
        let h = traj.epochs()[1];
        assert!((traj.clock_value(h).unwrap() - m * h).abs() < 1e-12);
    }

    #[test]
    fn clock_additivity_and_inverse() {
        let law = TailLaw::cauchy(3).unwrap();
        let m = Unbounded(ConductanceField::lazy(law, 8));
        let mut rng = RngStream::new(5, 0);
        let traj = simulate_vsrw(&m, Site::origin(3), 40.0, &mut rng).unwrap();
        let (t1, t2) = (13.1, 21.7);
        // S_{t1+t2} = S_{t1} + int_{t1}^{t1+t2} mu_{Y_s} ds
        let mut tail = 0.0;
        let e = traj.epochs();
        for k in 0..traj.len() {
            let a = e[k].max(t1);
            let b = if k + 1 < traj.len() { e[k + 1] } else { traj.horizon() }.min(t1 + t2);
            if b > a {
                tail += traj.rates()[k] * (b - a);
            }
        }
        let lhs = traj.clock_value(t1 + t2).unwrap();
        assert!((lhs - traj.clock_value(t1).unwrap() - tail).abs() < 1e-9 * lhs);
        // A(S(t)) = t inside holding intervals
        for k in 0..traj.len().min(200) {
            let t = if k + 1 < traj.len() { 0.5 * (e[k] + e[k + 1]) } else { continue };
            let s = traj.clock_value(t).unwrap();
            assert!((traj.inverse_clock(s).unwrap() - t).abs() < 1e-9 * (1.0 + t));
            assert_eq!(traj.csrw_position(s).unwrap(), traj.sites()[k]);
        }
    }

    #[test]
    fn replay_reproduces_trajectory() {
        let law = TailLaw::cauchy(3).unwrap();
        let m = Unbounded(ConductanceField::lazy(law, 8));
        let a = simulate_vsrw(&m, Site::origin(3), 30.0, &mut RngStream::new(9, 4)).unwrap();
        let b = simulate_vsrw(&m, Site::origin(3), 30.0, &mut RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
        assert!(a.is_valid());
    }

    #[test]
    fn exit_time_cases() {
        let m = homogeneous3();
        let mut rng = RngStream::new(6, 0);
        let traj = simulate_vsrw(&m, Site::origin(3), 5.0, &mut rng).unwrap();
        assert_eq!(traj.exit_time(&Site::origin(3), 0.0), Some(traj.epochs()[1]));
        // horizon before the first jump
        let mut found = false;
        for w in 0..200 {
            let t = simulate_vsrw(&m, Site::origin(3), 0.01, &mut RngStream::new(6, w)).unwrap();
            if t.len() == 1 {
                assert_eq!(t.exit_time(&Site::origin(3), 0.0), None);
                found = true;
                break;
            }
        }
        assert!(found);
        // mean first-exit time for R = 0 is 1/6
        let mut mm = Moments::new();
        for w in 0..20_000 {
            let t = simulate_vsrw(&m, Site::origin(3), 50.0, &mut RngStream::new(7, w)).unwrap();
            mm.push(t.exit_time(&Site::origin(3), 0.0).unwrap());
        }
        assert!((mm.mean() - 1.0 / 6.0).abs() < 4.0 * mm.std_err());
    }

    #[test]
    fn transition_frequencies_homogeneous() {
        let m = homogeneous3();
        let traj = simulate_vsrw(&m, Site::origin(3), 50_000.0, &mut RngStream::new(11, 0)).unwrap();
        let mut counts = [0u64; 6];
        for w in traj.sites().windows(2) {
            counts[(0..6).find(|&d| w[0].neighbor(d) == w[1]).unwrap()] += 1;
        }
        let n = (traj.len() - 1) as f64;
        let p = 1.0 / 6.0;
        let se = (p * (1.0 - p) / n).sqrt();
        for c in counts {
            assert!((c as f64 / n - p).abs() < 4.0 * se, "{counts:?}");
        }
    }

    #[test]
    fn dirichlet_box_flags_exit() {
        let f = ConductanceField::homogeneous(2, 1.0).unwrap();
        let region = LatticeRegion::cube(2, 2, Boundary::Dirichlet).unwrap();
        let m = Boxed::new(&f, region).unwrap();
        let traj = simulate_vsrw(&m, Site::origin(2), 1e6, &mut RngStream::new(12, 0)).unwrap();
        assert!(traj.exited());
        assert!(!region.contains(traj.sites().last().unwrap()));
        // free boundary never exits
        let m = Boxed::new(&f, region.with_boundary(Boundary::Free)).unwrap();
        let traj = simulate_vsrw(&m, Site::origin(2), 100.0, &mut RngStream::new(12, 0)).unwrap();
        assert!(!traj.exited());
        assert!(traj.sites().iter().all(|s| region.contains(s)));
    }

    #[test]
    fn rescaled_clock_constant_field() {
        let c = 2.5;
        let m = Unbounded(ConductanceField::homogeneous(3, c).unwrap());
        let grid = [0.0, 0.25, 0.5, 1.0];
        let series = rescaled_clock_series(&m, Site::origin(3), 8, &grid, &mut RngStream::new(1, 1)).unwrap();
        for (t, v) in grid.iter().zip(&series.values) {
            // mu_x = 2 d c
            let expect = 6.0 * c * t / libm::log(8.0);
            assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        }
        assert!(rescaled_clock_series(&m, Site::origin(3), 1, &grid, &mut RngStream::new(1, 1)).is_err());
    }

    #[test]
    fn csrw_marginal_at_zero_is_origin() {
        let m = homogeneous3();
        let x = rescaled_csrw_marginal(&m, Site::origin(3), 8, 0.0, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(x, vec![0.0; 3]);
    }

    #[test]
    fn csrw_holds_have_unit_mean() {
        let law = TailLaw::cauchy(3).unwrap();
        let m = Unbounded(ConductanceField::lazy(law, 21));
        let traj = simulate_vsrw(&m, Site::origin(3), 2e4, &mut RngStream::new(13, 0)).unwrap();
        // clock increments between jumps are the CSRW holding times
        let mut holds = Moments::new();
        for k in 0..traj.len() - 1 {
            let dt = traj.epochs()[k + 1] - traj.epochs()[k];
            holds.push(traj.rates()[k] * dt);
        }
        assert!(holds.count() > 100_000);
        assert!((holds.mean() - 1.0).abs() < 4.0 * holds.std_err());
    }
}
