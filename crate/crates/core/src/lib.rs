//! Flux integrals across portions of hypersurfaces and numerical checks of
//! the inequalities that bound them.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod lowdisc;
pub mod measures;
pub mod quadrature;
pub mod runner;
pub mod scalar;
pub mod svg;
pub mod vector;

pub use error::{FluxError, Result};
pub use scalar::Real;
pub use vector::VecN;

pub type Vec2 = VecN<f64, 2>;
pub type Vec3 = VecN<f64, 3>;
pub type Vec2f = VecN<f32, 2>;
pub type Vec3f = VecN<f32, 3>;
pub type Domain2 = geometry::ImplicitDomain<f64, 2>;
pub type Domain3 = geometry::ImplicitDomain<f64, 3>;
pub type Domain2f = geometry::ImplicitDomain<f32, 2>;
pub type Domain3f = geometry::ImplicitDomain<f32, 3>;
pub type Field2 = fields::VectorField<f64, 2>;
pub type Field3 = fields::VectorField<f64, 3>;
pub type Field2f = fields::VectorField<f32, 2>;
pub type Field3f = fields::VectorField<f32, 3>;
pub type Mesh2 = geometry::SurfaceMesh<f64, 2>;
pub type Mesh3 = geometry::SurfaceMesh<f64, 3>;
pub type Mesh2f = geometry::SurfaceMesh<f32, 2>;
pub type Mesh3f = geometry::SurfaceMesh<f32, 3>;
pub type Path2 = dynamics::Trajectory<f64>;
pub type Path2f = dynamics::Trajectory<f32>;
