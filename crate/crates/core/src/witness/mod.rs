//! Concrete cover generators and the simplex lower-bound certificate.

pub mod cube;
pub mod hyperbolic;
pub mod lower_bound;
pub mod ray;
pub mod sperner;
pub mod star;
pub mod tree;

pub use cube::cube_cover;
pub use hyperbolic::{hyperbolic_params, radial_projection, sphere_cover_lift, SphereAtlas};
pub use lower_bound::{simplex_lower_bound_check, LowerBoundCertificate};
pub use ray::ray_cell_cover;
pub use sperner::{sperner_find, Labeling, SimplexGrid};
pub use star::{star_cover, SimplicialComplex};
pub use tree::tree_cover;
