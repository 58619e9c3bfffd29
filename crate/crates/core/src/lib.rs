//! Fractional diffusion and fractional quantum toolkit on periodic 1-D
//! grids.
//!
//! The chain runs from the anomalous diffusion equation
//! `∂^η s/∂t^η + γ(-Δ)^{μ/2} s = 0` through the fractional Schrodinger
//! equation to the fractional momentum/energy relationships
//! `p = ĥ_μ k^{μ/2}` and `E = ĥ_η ν^η`, cross-validated by Lévy flight
//! and fractional Brownian motion sampling, and rounded out by a
//! power-law attenuation fitter.

pub mod diffusion;
pub mod export;
pub mod fitting;
pub mod fracops;
mod linfit;
pub mod quantum;
pub mod statmech;
pub mod stochastic;

pub use fracops::{ComplexField, FractionalOrders, GridSpec};
