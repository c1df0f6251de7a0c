//! Triangle meshes parsed from STL files, plus connected-component splitting.
//!
//! Meshes are indexed triangle soups: a vertex table and a list of index
//! triples. Coordinates are millimeters stored as `f64`. Parsing deduplicates
//! vertices by exact coordinate equality and drops zero-area triangles (those
//! with repeated vertex indices after deduplication), so a parsed mesh always
//! satisfies the [`TriangleMesh`] invariants.

mod stl;

use std::collections::HashMap;

use nalgebra::Point3;
use thiserror::Error;

pub use stl::{detect_format, parse_stl, write_stl};

/// The two STL encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StlFormat {
    Binary,
    Ascii,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("input is neither ASCII nor binary STL")]
    UnrecognizedFormat,
    #[error("binary STL truncated: expected {expected} bytes, found {actual}")]
    TruncatedFile { expected: usize, actual: usize },
    #[error("ASCII STL syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("mesh has no triangles after cleaning")]
    EmptyMesh,
    #[error("triangle {triangle} references vertex {index}, but only {vertex_count} vertices exist")]
    IndexOutOfRange {
        triangle: usize,
        index: u32,
        vertex_count: usize,
    },
    #[error("triangle {triangle} repeats a vertex index")]
    RepeatedIndex { triangle: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFiniteCoordinate { vertex: usize },
    #[error("weld tolerance must be finite and non-negative, got {0}")]
    BadWeldTolerance(f64),
}

/// An indexed triangle mesh.
///
/// Invariants (enforced by [`TriangleMesh::new`] and by the STL parser):
/// every triangle index is in range, no triangle repeats a vertex index, and
/// all coordinates are finite.
///
/// Equality compares geometry only (vertices and triangles); the source
/// format and the degenerate-triangle counter are provenance, not shape.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[u32; 3]>,
    source_format: StlFormat,
    degenerate_dropped: u32,
}

impl PartialEq for TriangleMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.triangles == other.triangles
    }
}

impl TriangleMesh {
    /// Builds a mesh from raw parts, validating the type invariants.
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        for (vi, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(MeshError::NonFiniteCoordinate { vertex: vi });
            }
        }
        for (ti, tri) in triangles.iter().enumerate() {
            for &idx in tri {
                if idx as usize >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: ti,
                        index: idx,
                        vertex_count: vertices.len(),
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedIndex { triangle: ti });
            }
        }
        Ok(Self {
            vertices,
            triangles,
            source_format: StlFormat::Binary,
            degenerate_dropped: 0,
        })
    }

    pub(crate) fn from_parts(
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[u32; 3]>,
        source_format: StlFormat,
        degenerate_dropped: u32,
    ) -> Self {
        Self {
            vertices,
            triangles,
            source_format,
            degenerate_dropped,
        }
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn source_format(&self) -> StlFormat {
        self.source_format
    }

    /// Number of zero-area triangles dropped while parsing.
    pub fn degenerate_dropped(&self) -> u32 {
        self.degenerate_dropped
    }

    /// Corner points of triangle `i`.
    pub fn triangle_points(&self, i: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[i];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Axis-aligned bounding box as (min, max). `None` for a vertexless mesh.
    pub fn bounding_box(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = *self.vertices.first()?;
        let mut min = first;
        let mut max = first;
        for v in &self.vertices[1..] {
            for axis in 0..3 {
                min[axis] = min[axis].min(v[axis]);
                max[axis] = max[axis].max(v[axis]);
            }
        }
        Some((min, max))
    }

    /// Returns a copy with every vertex passed through `f`. Connectivity is
    /// untouched, so the result is valid as long as `f` keeps coordinates
    /// finite.
    pub fn map_vertices(&self, f: impl Fn(Point3<f64>) -> Point3<f64>) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            triangles: self.triangles.clone(),
            source_format: self.source_format,
            degenerate_dropped: self.degenerate_dropped,
        }
    }

    /// Concatenates two meshes into one (disjoint union, no welding).
    pub fn merged(&self, other: &TriangleMesh) -> TriangleMesh {
        let offset = self.vertices.len() as u32;
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(
            other
                .triangles
                .iter()
                .map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]),
        );
        TriangleMesh {
            vertices,
            triangles,
            source_format: self.source_format,
            degenerate_dropped: self.degenerate_dropped + other.degenerate_dropped,
        }
    }
}

/// One connected piece of a mesh.
///
/// Components partition the parent mesh's triangles; `component_index` is the
/// position in the ordering returned by [`connected_components`] (descending
/// triangle count, ties by lowest original triangle index).
#[derive(Debug, Clone, PartialEq)]
pub struct MeshComponent {
    pub mesh: TriangleMesh,
    pub component_index: usize,
}

/// Key for exact-equality vertex welding. Normalizes -0.0 to 0.0 so that the
/// two float zeros weld together.
pub(crate) fn exact_key(p: &Point3<f64>) -> [u64; 3] {
    let norm = |x: f64| if x == 0.0 { 0.0f64 } else { x }.to_bits();
    [norm(p.x), norm(p.y), norm(p.z)]
}

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Splits a mesh into connected components.
///
/// Vertices within `weld_tolerance` (Euclidean distance) are merged before
/// adjacency is computed; with the default tolerance of zero, only exactly
/// coincident vertices weld. Two triangles are adjacent when they share a
/// welded vertex. Components are ordered by descending triangle count, ties
/// broken by the lowest original triangle index they contain.
pub fn connected_components(
    mesh: &TriangleMesh,
    weld_tolerance: f64,
) -> Result<Vec<MeshComponent>, MeshError> {
    if !weld_tolerance.is_finite() || weld_tolerance < 0.0 {
        return Err(MeshError::BadWeldTolerance(weld_tolerance));
    }
    let nv = mesh.vertices.len();
    let mut sets = DisjointSet::new(nv);

    if weld_tolerance == 0.0 {
        let mut seen: HashMap<[u64; 3], usize> = HashMap::with_capacity(nv);
        for (i, v) in mesh.vertices.iter().enumerate() {
            match seen.entry(exact_key(v)) {
                std::collections::hash_map::Entry::Occupied(e) => sets.union(*e.get(), i),
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(i);
                }
            }
        }
    } else {
        // Bucket vertices on a grid of cell size `weld_tolerance` and union
        // pairs within tolerance across the 27 neighboring cells. The union
        // closes the "within tolerance" relation transitively.
        let cell = |x: f64| (x / weld_tolerance).floor() as i64;
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, v) in mesh.vertices.iter().enumerate() {
            buckets
                .entry([cell(v.x), cell(v.y), cell(v.z)])
                .or_default()
                .push(i);
        }
        let tol2 = weld_tolerance * weld_tolerance;
        for (i, v) in mesh.vertices.iter().enumerate() {
            let base = [cell(v.x), cell(v.y), cell(v.z)];
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let key = [base[0] + dx, base[1] + dy, base[2] + dz];
                        if let Some(candidates) = buckets.get(&key) {
                            for &j in candidates {
                                if j > i && (mesh.vertices[j] - v).norm_squared() <= tol2 {
                                    sets.union(i, j);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Triangles connect their own vertices.
    for tri in &mesh.triangles {
        sets.union(tri[0] as usize, tri[1] as usize);
        sets.union(tri[1] as usize, tri[2] as usize);
    }

    // Group triangles by the welded root of their first vertex.
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let root = sets.find(tri[0] as usize);
        groups.entry(root).or_default().push(ti);
    }

    let mut ordered: Vec<Vec<usize>> = groups.into_values().collect();
    ordered.sort_by_key(|tris| (std::cmp::Reverse(tris.len()), tris[0]));

    let components = ordered
        .into_iter()
        .enumerate()
        .map(|(component_index, tri_indices)| {
            let mut remap: HashMap<u32, u32> = HashMap::new();
            let mut vertices = Vec::new();
            let mut triangles = Vec::with_capacity(tri_indices.len());
            for &ti in &tri_indices {
                let tri = mesh.triangles[ti];
                let mut mapped = [0u32; 3];
                for (slot, &old) in mapped.iter_mut().zip(tri.iter()) {
                    let next = vertices.len() as u32;
                    *slot = *remap.entry(old).or_insert_with(|| {
                        vertices.push(mesh.vertices[old as usize]);
                        next
                    });
                }
                triangles.push(mapped);
            }
            MeshComponent {
                mesh: TriangleMesh::from_parts(vertices, triangles, mesh.source_format, 0),
                component_index,
            }
        })
        .collect();

    Ok(components)
}
