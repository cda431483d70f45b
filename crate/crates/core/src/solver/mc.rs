//! Monte Carlo heat kernel estimates averaged over lattice balls.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::lattice::{LatticeRegion, Site};
use crate::rng::RngStream;
use crate::walk::{Medium, Stop, Walker};

/// Minimum number of walkers for [`mc_heat_kernel`].
pub const MIN_WALKERS: u64 = 10_000;

/// The lattice ball `B(center, r)`, optionally clipped to a region.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteBall {
    center: Site,
    radius: f64,
    clip: Option<LatticeRegion>,
    count: usize,
}

impl SiteBall {
    pub fn new(center: Site, radius: f64, clip: Option<&LatticeRegion>) -> Result<Self> {
        let count = crate::lattice::ball(&center, radius)
            .iter()
            .filter(|s| clip.is_none_or(|c| c.contains(s)))
            .count();
        if count == 0 {
            return Err(Error::Empty("ball"));
        }
        Ok(SiteBall { center, radius, clip: clip.copied(), count })
    }

    pub fn center(&self) -> &Site {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of lattice sites in the ball.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, y: &Site) -> bool {
        y.dist2(&self.center) as f64 <= self.radius * self.radius && self.clip.as_ref().is_none_or(|c| c.contains(y))
    }

    pub fn sites(&self) -> Vec<Site> {
        crate::lattice::ball(&self.center, self.radius)
            .into_iter()
            .filter(|s| self.clip.as_ref().is_none_or(|c| c.contains(s)))
            .collect()
    }
}

/// `(hits / walkers) / |ball|` with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallEstimate {
    pub estimate: f64,
    pub std_err: f64,
    pub hits: u64,
    pub walkers: u64,
    pub sites: usize,
}

impl BallEstimate {
    pub fn from_hits(hits: u64, walkers: u64, sites: usize) -> Self {
        let p = hits as f64 / walkers as f64;
        let se = libm::sqrt(p * (1.0 - p) / walkers as f64);
        BallEstimate { estimate: p / sites as f64, std_err: se / sites as f64, hits, walkers, sites }
    }
}

/// Run walkers `walkers` (stream indices) from `x0` to time `t` and count,
/// per ball, how many end inside it.
pub fn mc_ball_hits<M: Medium + ?Sized>(
    medium: &M,
    x0: &Site,
    t: f64,
    walkers: Range<u64>,
    seed: u64,
    balls: &[SiteBall],
) -> Result<Vec<u64>> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", "must be nonnegative"));
    }
    let mut hits = alloc::vec![0u64; balls.len()];
    for w in walkers {
        let mut rng = RngStream::for_walker(seed, w);
        let mut walker = Walker::new(medium, *x0)?;
        walker.advance(&mut rng, Stop::Time(t));
        let y = walker.site();
        for (h, b) in hits.iter_mut().zip(balls) {
            if b.contains(y) {
                *h += 1;
            }
        }
    }
    Ok(hits)
}

/// Ball-averaged estimates of `p_t(x0, .)`.
pub fn mc_heat_kernel<M: Medium + ?Sized>(
    medium: &M,
    x0: &Site,
    t: f64,
    walkers: u64,
    seed: u64,
    balls: &[SiteBall],
) -> Result<Vec<BallEstimate>> {
    if walkers < MIN_WALKERS {
        return Err(Error::invalid("walkers", "need at least 10^4"));
    }
    let hits = mc_ball_hits(medium, x0, t, 0..walkers, seed, balls)?;
    Ok(hits.iter().zip(balls).map(|(&h, b)| BallEstimate::from_hits(h, walkers, b.len())).collect())
}
