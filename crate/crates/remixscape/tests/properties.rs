//! Property tests for the format and metric invariants.

use proptest::prelude::*;

use remixscape::descriptor::{ComponentMode, DescriptorConfig, DesignDescriptor, ShapeDescriptor};
use remixscape::mesh::{parse_stl, write_stl, StlFormat};
use remixscape::similarity::distance;

/// Strategy: raw binary STL bytes for up to 12 facets with f32-exact
/// coordinates, so both encodings round-trip losslessly.
fn stl_bytes() -> impl Strategy<Value = Vec<u8>> {
    let corner = || (-100i32..100, -100i32..100, -100i32..100);
    let facet = (corner(), corner(), corner());
    proptest::collection::vec(facet, 1..12).prop_map(|facets| {
        let mut bytes = vec![0u8; 80];
        bytes.extend_from_slice(&(facets.len() as u32).to_le_bytes());
        for (a, b, c) in facets {
            for _ in 0..3 {
                bytes.extend_from_slice(&0f32.to_le_bytes());
            }
            for (x, y, z) in [a, b, c] {
                // Quarter-integer grid: exactly representable in f32.
                bytes.extend_from_slice(&(x as f32 / 4.0).to_le_bytes());
                bytes.extend_from_slice(&(y as f32 / 4.0).to_le_bytes());
                bytes.extend_from_slice(&(z as f32 / 4.0).to_le_bytes());
            }
            bytes.extend_from_slice(&0u16.to_le_bytes());
        }
        bytes
    })
}

fn descriptor_config() -> DescriptorConfig {
    DescriptorConfig {
        resolution: 16,
        radii: 4,
        bands: 4,
        bandwidth: 4,
        weld_tolerance: 0.0,
        quadrature_oversample: 2,
    }
}

fn joint(energies: Vec<f64>) -> DesignDescriptor {
    let shape = ShapeDescriptor::from_energies(
        4,
        4,
        energies,
        descriptor_config().params_hash(ComponentMode::Joint),
    );
    DesignDescriptor::from_parts(shape.clone(), vec![shape], ComponentMode::Joint)
}

fn matched(components: Vec<Vec<f64>>) -> DesignDescriptor {
    let hash = descriptor_config().params_hash(ComponentMode::ComponentMatched);
    let shapes: Vec<ShapeDescriptor> = components
        .into_iter()
        .map(|e| ShapeDescriptor::from_energies(4, 4, e, hash))
        .collect();
    DesignDescriptor::from_parts(shapes[0].clone(), shapes, ComponentMode::ComponentMatched)
}

fn energies() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..50.0f64, 16)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// parse(write(m)) == m for every cleaned mesh, in both encodings.
    #[test]
    fn stl_round_trip(bytes in stl_bytes()) {
        let Ok(mesh) = parse_stl(&bytes) else {
            // All-degenerate draws clean down to an empty mesh; fine.
            return Ok(());
        };
        for format in [StlFormat::Binary, StlFormat::Ascii] {
            let rewritten = write_stl(&mesh, format);
            let reparsed = parse_stl(&rewritten).unwrap();
            prop_assert_eq!(&reparsed, &mesh);
        }
    }

    /// Parsing the same bytes twice gives the same mesh.
    #[test]
    fn parsing_is_deterministic(bytes in stl_bytes()) {
        let a = parse_stl(&bytes);
        let b = parse_stl(&bytes);
        match (a, b) {
            (Ok(ma), Ok(mb)) => prop_assert_eq!(ma, mb),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "divergent outcomes: {:?}", other.0.is_ok()),
        }
    }

    /// Joint-mode distance is a metric on the samples we draw.
    #[test]
    fn joint_distance_metric_properties(
        a in energies(),
        b in energies(),
        c in energies(),
    ) {
        let (da, db, dc) = (joint(a), joint(b), joint(c));
        let ab = distance(&da, &db).unwrap();
        let ba = distance(&db, &da).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(distance(&da, &da).unwrap(), 0.0);
        let bc = distance(&db, &dc).unwrap();
        let ac = distance(&da, &dc).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    /// Component-matched distance stays symmetric and zero on identity for
    /// arbitrary component counts.
    #[test]
    fn matched_distance_symmetry(
        left in proptest::collection::vec(energies(), 1..4),
        right in proptest::collection::vec(energies(), 1..4),
    ) {
        let dl = matched(left);
        let dr = matched(right);
        prop_assert_eq!(distance(&dl, &dr).unwrap(), distance(&dr, &dl).unwrap());
        prop_assert_eq!(distance(&dl, &dl).unwrap(), 0.0);
        prop_assert!(distance(&dl, &dr).unwrap() >= 0.0);
    }
}
