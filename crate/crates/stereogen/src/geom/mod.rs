//! Geometry core: vectors, rigid transforms, the pinhole camera model,
//! triangle meshes, and ray intersection acceleration.

pub mod bvh;
pub mod camera;
pub mod mesh;
pub mod vec;

pub use bvh::{Aabb, Bvh, Hit, HitData, Ray, SceneTri, RAY_EPSILON};
pub use camera::{PinholeIntrinsics, StereoRig, StereoView};
pub use mesh::TriangleMesh;
pub use vec::{vec3, Mat3, RigidTransform, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum GeomError {
    #[error("empty geometry")]
    EmptyGeometry,
    #[error("invalid mesh: {0}")]
    InvalidMesh(&'static str),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
    #[error("baseline must be positive, got {0}")]
    InvalidBaseline(f64),
    #[error("rotation is not orthonormal")]
    NotOrthonormal,
}
