//! Rotation-invariant shape descriptors.
//!
//! A descriptor is an `R x L` matrix: the mesh is voxelized into a normalized
//! grid, the grid is sampled on `R` concentric spheres, and each sphere's
//! restriction is decomposed into spherical-harmonic band energies for
//! degrees `l < L`. Band energies are invariant under rotation, and the grid
//! normalization removes translation and uniform scale, so two meshes that
//! differ only by placement produce near-identical descriptors.
//!
//! Designs with several disconnected parts get both a `joint` descriptor
//! (everything voxelized together, relative placement preserved) and one
//! descriptor per connected component (each normalized independently);
//! [`ComponentMode`] picks which side is used for comparisons.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::harmonics::{HarmonicsError, SphericalAnalyzer};
use crate::mesh::{connected_components, MeshError, TriangleMesh};
use crate::voxel::{voxelize, VoxelError, VoxelGrid};

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error(transparent)]
    Voxel(#[from] VoxelError),
    #[error(transparent)]
    Harmonics(#[from] HarmonicsError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("{radii} radii do not fit a grid of resolution {resolution}")]
    RadiiExceedGrid { radii: u32, resolution: u32 },
}

/// How multi-part designs participate in comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentMode {
    /// Compare whole-design descriptors; relative part placement matters.
    Joint,
    /// Compare per-part descriptors via greedy pairing; placement-blind.
    ComponentMatched,
}

impl ComponentMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ComponentMode::Joint => "joint",
            ComponentMode::ComponentMatched => "component-matched",
        }
    }
}

impl std::str::FromStr for ComponentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "joint" => Ok(ComponentMode::Joint),
            "component-matched" => Ok(ComponentMode::ComponentMatched),
            other => Err(format!(
                "unknown mode `{other}` (expected `joint` or `component-matched`)"
            )),
        }
    }
}

/// Descriptor pipeline parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorConfig {
    /// Voxel grid resolution `N` (even, at least 16).
    pub resolution: u32,
    /// Number of sampling spheres `R`; radius `i` is `i * (N/2) / R` voxels.
    pub radii: u32,
    /// Number of spherical-harmonic bands `L` kept per radius.
    pub bands: u32,
    /// Band limit `B` of the analysis; at most `B` bands can be kept.
    pub bandwidth: u32,
    /// Vertex weld tolerance (mm) for component splitting.
    pub weld_tolerance: f64,
    /// Quadrature density multiplier: coefficients are estimated on a
    /// `2QB x 2QB` equiangular grid. The occupancy shell is one voxel thick
    /// and nowhere near band-limited, so evaluating the band-`l < L`
    /// integrals on the minimal `2B x 2B` grid aliases badly and breaks
    /// rotation invariance; oversampling fixes the estimate without changing
    /// what is estimated.
    pub quadrature_oversample: u32,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            resolution: 64,
            radii: 32,
            bands: 16,
            bandwidth: 16,
            weld_tolerance: 0.0,
            quadrature_oversample: 4,
        }
    }
}

impl DescriptorConfig {
    /// Token identifying every parameter that affects descriptor values.
    /// Descriptors are comparable only when their tokens match.
    pub fn params_hash(&self, mode: ComponentMode) -> ParamsHash {
        let canonical = format!(
            "shape-descriptor-v1;n={};r={};l={};b={};weld={:?};q={};mode={}",
            self.resolution,
            self.radii,
            self.bands,
            self.bandwidth,
            self.weld_tolerance,
            self.quadrature_oversample,
            mode.as_str(),
        );
        let digest = Sha256::digest(canonical.as_bytes());
        ParamsHash(digest.into())
    }
}

/// Opaque descriptor-compatibility token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamsHash(pub [u8; 32]);

impl ParamsHash {
    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 64 {
            return None;
        }
        let mut out = [0u8; 32];
        for (i, chunk) in s.as_bytes().chunks(2).enumerate() {
            let hex = std::str::from_utf8(chunk).ok()?;
            out[i] = u8::from_str_radix(hex, 16).ok()?;
        }
        Some(Self(out))
    }
}

impl std::fmt::Display for ParamsHash {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Per-radius spherical-harmonic band energies: the comparable fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDescriptor {
    radii_count: u32,
    bands_count: u32,
    /// Row-major `radii_count x bands_count`, all non-negative and finite.
    energies: Vec<f64>,
    params_hash: ParamsHash,
}

impl ShapeDescriptor {
    pub fn from_energies(
        radii_count: u32,
        bands_count: u32,
        energies: Vec<f64>,
        params_hash: ParamsHash,
    ) -> Self {
        assert_eq!(energies.len(), (radii_count * bands_count) as usize);
        debug_assert!(energies.iter().all(|e| e.is_finite() && *e >= 0.0));
        Self {
            radii_count,
            bands_count,
            energies,
            params_hash,
        }
    }

    pub fn radii_count(&self) -> u32 {
        self.radii_count
    }

    pub fn bands_count(&self) -> u32 {
        self.bands_count
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, radius_index: u32, band: u32) -> f64 {
        self.energies[(radius_index * self.bands_count + band) as usize]
    }

    pub fn params_hash(&self) -> &ParamsHash {
        &self.params_hash
    }

    /// Euclidean norm of the flattened energy matrix.
    pub fn norm(&self) -> f64 {
        self.energies.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// Euclidean distance between flattened energy matrices.
    pub fn euclidean_distance(&self, other: &ShapeDescriptor) -> f64 {
        debug_assert_eq!(self.energies.len(), other.energies.len());
        self.energies
            .iter()
            .zip(&other.energies)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Symmetric relative deviation `2 ||a - b|| / (||a|| + ||b||)`;
    /// zero when both descriptors are empty.
    pub fn relative_deviation(&self, other: &ShapeDescriptor) -> f64 {
        let scale = self.norm() + other.norm();
        if scale == 0.0 {
            0.0
        } else {
            2.0 * self.euclidean_distance(other) / scale
        }
    }
}

/// Spherical-harmonic decomposition of a normalized occupancy grid.
///
/// For radius index `i` in `1..=R` the grid is sampled by trilinear
/// interpolation on the analyzer's equiangular grid at radius
/// `i * (N/2) / R` voxels from the grid center, and the per-degree energies
/// for `l < L` become row `i - 1` of the descriptor.
pub fn spherical_decompose(
    grid: &VoxelGrid,
    config: &DescriptorConfig,
    mode: ComponentMode,
) -> Result<ShapeDescriptor, DescriptorError> {
    if config.radii > grid.resolution() / 2 {
        return Err(DescriptorError::RadiiExceedGrid {
            radii: config.radii,
            resolution: grid.resolution(),
        });
    }
    if config.bands > config.bandwidth {
        return Err(HarmonicsError::BandwidthExceeded {
            bands: config.bands,
            bandwidth: config.bandwidth,
        }
        .into());
    }
    let analyzer = SphericalAnalyzer::new(config.bandwidth * config.quadrature_oversample.max(1));
    let directions = analyzer.directions();
    let center = grid.center();
    let step = grid.resolution() as f64 / 2.0 / config.radii as f64;

    let mut energies = Vec::with_capacity((config.radii * config.bands) as usize);
    let mut samples = vec![0.0; analyzer.sample_count()];
    for i in 1..=config.radii {
        let radius = i as f64 * step;
        for (slot, dir) in samples.iter_mut().zip(&directions) {
            *slot = shell_sample(grid, center, dir, radius);
        }
        let bands = analyzer.band_energies(&samples, config.bands)?;
        energies.extend(bands);
    }
    Ok(ShapeDescriptor::from_energies(
        config.radii,
        config.bands,
        energies,
        config.params_hash(mode),
    ))
}

/// Radial taps averaged into each spherical sample. Rotations only touch the
/// angular coordinates, so this radial window commutes with them; it damps
/// the sensitivity of a one-voxel-thick shell to sub-voxel radial jitter.
const RADIAL_TAPS: [(f64, f64); 3] = [(-0.5, 0.25), (0.0, 0.5), (0.5, 0.25)];

/// The exact scalar the decomposition analyzes at one direction and
/// radius: the radial-tap average of trilinear grid samples. Exposed so
/// independent quadrature oracles can integrate the same function.
pub fn shell_sample(
    grid: &VoxelGrid,
    center: nalgebra::Point3<f64>,
    dir: &nalgebra::Vector3<f64>,
    radius: f64,
) -> f64 {
    let mut acc = 0.0;
    for (offset, weight) in RADIAL_TAPS {
        let r = radius + offset;
        if r > 0.0 {
            acc += weight * grid.sample(center + dir * r);
        }
    }
    acc
}

/// A design's descriptors: the whole mesh plus each connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignDescriptor {
    joint: ShapeDescriptor,
    /// Ordered by descending component size; never empty.
    per_component: Vec<ShapeDescriptor>,
    mode: ComponentMode,
}

impl DesignDescriptor {
    pub fn from_parts(
        joint: ShapeDescriptor,
        per_component: Vec<ShapeDescriptor>,
        mode: ComponentMode,
    ) -> Self {
        assert!(!per_component.is_empty());
        Self {
            joint,
            per_component,
            mode,
        }
    }

    pub fn joint(&self) -> &ShapeDescriptor {
        &self.joint
    }

    pub fn per_component(&self) -> &[ShapeDescriptor] {
        &self.per_component
    }

    pub fn mode(&self) -> ComponentMode {
        self.mode
    }

    pub fn params_hash(&self) -> &ParamsHash {
        self.joint.params_hash()
    }
}

/// Computes the full descriptor set for a mesh.
///
/// The joint descriptor voxelizes all components together (relative
/// placement preserved); per-component descriptors voxelize and normalize
/// each connected component independently. All descriptors produced under
/// one `(config, mode)` pair carry the same `params_hash`.
pub fn describe(
    mesh: &TriangleMesh,
    config: &DescriptorConfig,
    mode: ComponentMode,
) -> Result<DesignDescriptor, DescriptorError> {
    describe_traced(mesh, config, mode).map(|(descriptor, _)| descriptor)
}

/// Per-grid diagnostics gathered while describing a mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DescribeTrace {
    /// Clipped occupancy fraction of each grid: joint first, then one per
    /// component.
    pub clipped_fractions: Vec<f64>,
}

impl DescribeTrace {
    pub fn max_clipped_fraction(&self) -> f64 {
        self.clipped_fractions.iter().copied().fold(0.0, f64::max)
    }
}

/// [`describe`] plus normalization diagnostics, for callers that surface
/// clipping warnings.
pub fn describe_traced(
    mesh: &TriangleMesh,
    config: &DescriptorConfig,
    mode: ComponentMode,
) -> Result<(DesignDescriptor, DescribeTrace), DescriptorError> {
    let mut trace = DescribeTrace::default();
    let joint_grid = voxelize(mesh, config.resolution)?;
    trace
        .clipped_fractions
        .push(joint_grid.normalization().clipped_fraction);
    let joint = spherical_decompose(&joint_grid, config, mode)?;

    let components = connected_components(mesh, config.weld_tolerance)?;
    let mut per_component = Vec::with_capacity(components.len());
    for component in &components {
        let grid = voxelize(&component.mesh, config.resolution)?;
        trace
            .clipped_fractions
            .push(grid.normalization().clipped_fraction);
        per_component.push(spherical_decompose(&grid, config, mode)?);
    }
    Ok((
        DesignDescriptor::from_parts(joint, per_component, mode),
        trace,
    ))
}

/// Clipped-surface warning threshold: above this fraction the grid likely
/// lost thin protrusions.
pub const CLIPPED_FRACTION_WARN: f64 = 0.05;
