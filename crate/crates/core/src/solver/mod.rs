//! Deterministic kernels: heat kernels by uniformization, Green's functions
//! and effective conductances by preconditioned conjugate gradients, and the
//! Gaussian and lattice-sum comparison objects.

pub mod ceff;
pub mod cg;
pub mod gaussian;
pub mod green;
pub mod interp;
pub mod limits;
pub mod mc;
pub mod operator;
pub mod power_sum;
pub mod uniformization;

pub use ceff::{effective_conductance, gamma_n, gamma_n_site, CeffResult};
pub use cg::{pcg, CgReport};
pub use gaussian::{gaussian_density, GaussianDensity};
pub use green::{green, richardson, GreenField, GreenOptions};
pub use interp::kernel_interpolate;
pub use limits::{a1_integral, second_moment_bound};
pub use mc::{mc_ball_hits, mc_heat_kernel, BallEstimate, SiteBall};
pub use operator::BoxOperator;
pub use power_sum::lattice_power_sum;
pub use uniformization::{heat_kernel, integrated_kernel, HeatKernelOptions, KernelField, Uniformizer};
