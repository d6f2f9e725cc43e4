//! Half-weighted Bohr-Sommerfeld cycles on integer symplectic surfaces.

pub mod complex;
pub mod cycles;
pub mod error;
pub mod field;
pub mod moduli;
pub mod prequantum;
pub mod quad;
pub mod real;
pub mod runner;
pub mod spectral;
pub mod surface;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use surface::{ChartId, SurfaceModel, SurfacePoint, SymplecticSurface, Vec3};
