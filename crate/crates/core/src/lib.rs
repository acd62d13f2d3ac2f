//! Infinitesimal flexibility of polyhedra in Euclidean, hyperbolic and de Sitter geometry,
//! and of the hyperbolic cone-manifolds glued from them.

pub mod conemanifold;
pub mod deaverage;
pub mod error;
pub mod generators;
pub mod hyperideal;
pub mod io;
pub mod geom;
pub mod polyhedron;
pub mod rigidity;

pub use error::{Error, Result};
pub use geom::{Ambient, Model, ModelPoint, Plane, Vec3, Vec4};
pub use polyhedron::{Coloring, Edge, Polyhedron};
pub use rigidity::{FlexField, FlexReport};
