//! Random conductance model with Cauchy-tailed conductances.
//!
//! This crate is the pure algorithmic layer: the conductance law and the
//! environments built from it, exact continuous-time simulation of the
//! variable- and constant-speed walks, and the deterministic solvers (heat
//! kernels by uniformization, Green's functions and effective conductances by
//! preconditioned conjugate gradients). It is `no_std` and only needs `alloc`;
//! IO, parallel drivers and the command line live in `rcm-lab`.
//!
//! Randomness is counter based throughout. An environment is a pure function
//! of `(seed, edge)` and a walker draws from a stream keyed by
//! `(seed, walker index)`, so every quantity is reproducible bit-for-bit
//! independently of how work is scheduled.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cluster;
pub mod env;
pub mod error;
pub mod lattice;
pub mod law;
pub mod quad;
pub mod rng;
pub mod solver;
pub mod special;
pub mod stats;
pub mod walk;

pub use cluster::{percolation_clusters, ClusterMap, ClusterStats};
pub use env::{Conductances, ConductanceField, TruncatedView};
pub use error::{Error, Result};
pub use lattice::{Boundary, Edge, LatticeRegion, Site, MAX_DIM};
pub use law::TailLaw;
pub use rng::RngStream;
pub use walk::{Boxed, Cached, Medium, Unbounded, WalkTrajectory, Walker};
