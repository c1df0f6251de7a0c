//! Quantify how novel 3D-printable designs are, analyze their remix
//! (inheritance) network, and lay a whole corpus out as a 2D similarity
//! landscape with popularity as elevation.
//!
//! The pipeline, end to end:
//!
//! 1. [`mesh`] parses STL files (binary and ASCII) into indexed triangle
//!    meshes and splits them into connected components.
//! 2. [`voxel`] rasterizes a mesh into a normalized cubic occupancy grid.
//! 3. [`harmonics`] + [`descriptor`] turn that grid into a rotation-invariant
//!    fingerprint: per-radius spherical-harmonic band energies.
//! 4. [`similarity`] compares fingerprints and scores each design's novelty
//!    against strictly earlier designs.
//! 5. [`graph`] builds the design inheritance DAG from parent links and
//!    computes remix analytics, including a rank test of whether remixes
//!    attract more interest than from-scratch designs.
//! 6. [`landscape`] embeds the corpus distance matrix in 2D with classical
//!    multidimensional scaling (optionally SMACOF-refined) and attaches
//!    popularity as the z axis.
//! 7. [`corpus`], [`cache`], and [`fetch`] handle manifests, content-addressed
//!    descriptor caching, and remote mesh retrieval for batch runs.
//!
//! ```
//! use remixscape::descriptor::{describe, ComponentMode, DescriptorConfig};
//! use remixscape::shapes;
//! use remixscape::similarity::distance;
//!
//! let config = DescriptorConfig::default();
//! let sphere = shapes::icosphere(10.0, 2);
//! let cube = shapes::cuboid(16.0, 16.0, 16.0);
//!
//! let a = describe(&sphere, &config, ComponentMode::Joint).unwrap();
//! let b = describe(&cube, &config, ComponentMode::Joint).unwrap();
//! let d = distance(&a, &b).unwrap();
//! assert!(d > 0.0);
//! ```

pub mod cache;
pub mod corpus;
pub mod descriptor;
pub mod fetch;
pub mod graph;
pub mod harmonics;
pub mod landscape;
pub mod mesh;
pub mod shapes;
pub mod similarity;
pub mod stats;
pub mod voxel;

pub use cache::DescriptorCache;
pub use corpus::{Corpus, PipelineConfig};
pub use descriptor::{describe, ComponentMode, DescriptorConfig, DesignDescriptor, ShapeDescriptor};
pub use graph::{DesignRecord, InheritanceGraph};
pub use landscape::Embedding2D;
pub use mesh::{StlFormat, TriangleMesh};
pub use similarity::{DistanceMatrix, NoveltyScore};
pub use voxel::VoxelGrid;
