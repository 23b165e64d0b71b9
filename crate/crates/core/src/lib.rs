//! Grid-based numerics for entropic transport driven by a diffusion
//! semigroup: heat and Ornstein-Uhlenbeck kernels, the Schrödinger system,
//! entropic interpolations with their dynamic cost, and numerical checks of
//! the inequalities that connect them.
//!
//! Everything is generic over the [`Scalar`] type (`f32` or `f64`); the
//! aliases at the crate root fix `f64`, which the default tolerances assume.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod grid;
pub mod interpolation;
pub mod io;
pub mod measures;
pub mod numeric;
pub mod scalar;
pub mod schroedinger;
pub mod semigroup;

pub use error::{Error, Result};
pub use grid::Grid;
pub use measures::{GridMeasure, MeasureSpec, MixtureComponent, ReferenceMeasure, VelocityField};
pub use scalar::Scalar;
pub use semigroup::{Generator, GeneratorKind, KernelMatrix};

pub type Grid64 = Grid<f64>;
pub type GridMeasure64 = GridMeasure<f64>;
pub type MeasureSpec64 = MeasureSpec<f64>;
pub type ReferenceMeasure64 = ReferenceMeasure<f64>;
pub type VelocityField64 = VelocityField<f64>;
pub type Generator64 = Generator<f64>;
pub type KernelMatrix64 = KernelMatrix<f64>;
pub type Potentials64 = schroedinger::SchroedingerPotentials<f64>;
pub type MeasureCurve64 = interpolation::MeasureCurve<f64>;

pub type Grid32 = Grid<f32>;
pub type GridMeasure32 = GridMeasure<f32>;
pub type Generator32 = Generator<f32>;
