//! Synthetic test meshes: spheres, boxes, cylinders, tori.
//!
//! All generators share vertices between adjacent triangles, so each shape is
//! a single connected component, and all are centered at the origin.

use std::collections::HashMap;

use nalgebra::{Point3, Rotation3, Vector3};

use crate::mesh::TriangleMesh;

fn mesh_from(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> TriangleMesh {
    TriangleMesh::new(vertices, triangles).expect("generator produced an invalid mesh")
}

/// Regular tetrahedron with circumscribing-cube half-extent `scale`.
pub fn tetrahedron(scale: f64) -> TriangleMesh {
    let s = scale;
    let vertices = vec![
        Point3::new(s, s, s),
        Point3::new(s, -s, -s),
        Point3::new(-s, s, -s),
        Point3::new(-s, -s, s),
    ];
    let triangles = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    mesh_from(vertices, triangles)
}

/// Axis-aligned box with the given full extents, centered at the origin.
pub fn cuboid(dx: f64, dy: f64, dz: f64) -> TriangleMesh {
    let (hx, hy, hz) = (dx / 2.0, dy / 2.0, dz / 2.0);
    let mut vertices = Vec::with_capacity(8);
    for &z in &[-hz, hz] {
        for &y in &[-hy, hy] {
            for &x in &[-hx, hx] {
                vertices.push(Point3::new(x, y, z));
            }
        }
    }
    // Two triangles per face; winding is irrelevant for occupancy.
    let quads: [[u32; 4]; 6] = [
        [0, 1, 3, 2], // bottom
        [4, 6, 7, 5], // top
        [0, 4, 5, 1], // front
        [2, 3, 7, 6], // back
        [0, 2, 6, 4], // left
        [1, 5, 7, 3], // right
    ];
    let mut triangles = Vec::with_capacity(12);
    for q in quads {
        triangles.push([q[0], q[1], q[2]]);
        triangles.push([q[0], q[2], q[3]]);
    }
    mesh_from(vertices, triangles)
}

/// Icosphere: an icosahedron subdivided `subdivisions` times and projected
/// onto the sphere of the given radius.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let mut vertices: Vec<Point3<f64>> = raw
        .iter()
        .map(|&(x, y, z)| {
            let v = Vector3::new(x, y, z).normalize() * radius;
            Point3::from(v)
        })
        .collect();
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for tri in &triangles {
            let mut mids = [0u32; 3];
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mids[i] = *midpoint.entry(key).or_insert_with(|| {
                    let m = (vertices[a as usize].coords + vertices[b as usize].coords) / 2.0;
                    let idx = vertices.len() as u32;
                    vertices.push(Point3::from(m.normalize() * radius));
                    idx
                });
            }
            next.push([tri[0], mids[0], mids[2]]);
            next.push([tri[1], mids[1], mids[0]]);
            next.push([tri[2], mids[2], mids[1]]);
            next.push([mids[0], mids[1], mids[2]]);
        }
        triangles = next;
    }
    mesh_from(vertices, triangles)
}

/// Closed cylinder along the z axis.
pub fn cylinder(radius: f64, height: f64, segments: u32) -> TriangleMesh {
    assert!(segments >= 3);
    let h = height / 2.0;
    let mut vertices = Vec::new();
    for &z in &[-h, h] {
        for s in 0..segments {
            let angle = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            vertices.push(Point3::new(radius * angle.cos(), radius * angle.sin(), z));
        }
    }
    let bottom_center = vertices.len() as u32;
    vertices.push(Point3::new(0.0, 0.0, -h));
    let top_center = vertices.len() as u32;
    vertices.push(Point3::new(0.0, 0.0, h));

    let mut triangles = Vec::new();
    for s in 0..segments {
        let s1 = (s + 1) % segments;
        let (b0, b1) = (s, s1);
        let (t0, t1) = (segments + s, segments + s1);
        triangles.push([b0, b1, t0]);
        triangles.push([b1, t1, t0]);
        triangles.push([b1, b0, bottom_center]);
        triangles.push([t0, t1, top_center]);
    }
    mesh_from(vertices, triangles)
}

/// Torus around the z axis with the given major and minor radii.
pub fn torus(major: f64, minor: f64, major_segments: u32, minor_segments: u32) -> TriangleMesh {
    assert!(major_segments >= 3 && minor_segments >= 3);
    let mut vertices = Vec::with_capacity((major_segments * minor_segments) as usize);
    for u in 0..major_segments {
        let theta = 2.0 * std::f64::consts::PI * u as f64 / major_segments as f64;
        for v in 0..minor_segments {
            let phi = 2.0 * std::f64::consts::PI * v as f64 / minor_segments as f64;
            let ring = major + minor * phi.cos();
            vertices.push(Point3::new(
                ring * theta.cos(),
                ring * theta.sin(),
                minor * phi.sin(),
            ));
        }
    }
    let mut triangles = Vec::new();
    let idx = |u: u32, v: u32| (u % major_segments) * minor_segments + (v % minor_segments);
    for u in 0..major_segments {
        for v in 0..minor_segments {
            let a = idx(u, v);
            let b = idx(u + 1, v);
            let c = idx(u + 1, v + 1);
            let d = idx(u, v + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    mesh_from(vertices, triangles)
}

/// Two icospheres of the given radius with centers `separation` apart along
/// x: the standard multi-component test shape.
pub fn two_spheres(radius: f64, separation: f64, subdivisions: u32) -> TriangleMesh {
    let a = icosphere(radius, subdivisions);
    let half = separation / 2.0;
    let left = a.map_vertices(|p| Point3::new(p.x - half, p.y, p.z));
    let right = a.map_vertices(|p| Point3::new(p.x + half, p.y, p.z));
    left.merged(&right)
}

/// Applies a rotation about the origin to every vertex.
pub fn rotated(mesh: &TriangleMesh, rotation: &Rotation3<f64>) -> TriangleMesh {
    mesh.map_vertices(|p| rotation * p)
}

/// Translates every vertex by `offset`.
pub fn translated(mesh: &TriangleMesh, offset: Vector3<f64>) -> TriangleMesh {
    mesh.map_vertices(|p| p + offset)
}

/// Scales every vertex about the origin.
pub fn scaled(mesh: &TriangleMesh, factor: f64) -> TriangleMesh {
    mesh.map_vertices(|p| Point3::from(p.coords * factor))
}
