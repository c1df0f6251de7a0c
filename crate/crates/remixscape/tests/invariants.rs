//! Cross-module invariants that need the real mesh-to-novelty pipeline.

use std::path::Path;

use remixscape::cache::ContentHash;
use remixscape::corpus::{Corpus, PipelineConfig};
use remixscape::descriptor::{describe, ComponentMode, DescriptorConfig};
use remixscape::graph::{hours_after_epoch, DesignRecord};
use remixscape::mesh::TriangleMesh;
use remixscape::shapes;
use remixscape::similarity::novelty_all;

fn corpus_of(meshes: &[(&str, TriangleMesh)], config: &DescriptorConfig) -> Corpus {
    let records: Vec<DesignRecord> = meshes
        .iter()
        .enumerate()
        .map(|(i, (id, _))| DesignRecord {
            id: id.to_string(),
            timestamp: hours_after_epoch(i as i64),
            parents: vec![],
            popularity: 0,
            mesh_ref: String::new(),
        })
        .collect();
    let mut corpus = Corpus::from_records(records, Path::new(".")).unwrap();
    let mut pipeline = PipelineConfig::default();
    pipeline.descriptor = config.clone();
    corpus.set_config(pipeline);
    for (i, (id, mesh)) in meshes.iter().enumerate() {
        let descriptor = describe(mesh, config, ComponentMode::Joint).unwrap();
        let hash = ContentHash::of(format!("synthetic-{i}").as_bytes());
        corpus.attach_descriptor(id, hash, descriptor);
    }
    corpus
}

/// Scaling every mesh in the corpus by one common factor must leave the
/// novelty *ranking* unchanged: the descriptors are scale-normalized, so
/// only rasterization jitter distinguishes the two runs, and the test
/// shapes are far enough apart that jitter cannot reorder them.
#[test]
fn common_scale_factor_preserves_novelty_ranks() {
    let config = DescriptorConfig {
        resolution: 32,
        radii: 16,
        bands: 8,
        bandwidth: 8,
        weld_tolerance: 0.0,
        quadrature_oversample: 4,
    };
    let base: Vec<(&str, TriangleMesh)> = vec![
        ("sphere", shapes::icosphere(8.0, 2)),
        ("cube", shapes::cuboid(10.0, 10.0, 10.0)),
        ("slab", shapes::cuboid(20.0, 12.0, 2.0)),
        ("cylinder", shapes::cylinder(3.0, 18.0, 32)),
        ("torus", shapes::torus(7.0, 1.5, 32, 16)),
        ("pair", shapes::two_spheres(4.0, 20.0, 2)),
    ];

    let rank_order = |corpus: &Corpus| -> Vec<String> {
        let scores = novelty_all(corpus).unwrap();
        let mut scored: Vec<(f64, String)> = scores
            .iter()
            .filter_map(|s| s.value().map(|v| (v, s.design_id.clone())))
            .collect();
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        scored.into_iter().map(|(_, id)| id).collect()
    };

    let plain = corpus_of(&base, &config);
    let ranks_plain = rank_order(&plain);

    for factor in [1.7, 2.0, 0.5] {
        let scaled: Vec<(&str, TriangleMesh)> = base
            .iter()
            .map(|(id, mesh)| (*id, shapes::scaled(mesh, factor)))
            .collect();
        let corpus = corpus_of(&scaled, &config);
        assert_eq!(
            rank_order(&corpus),
            ranks_plain,
            "novelty ranking changed under common scale x{factor}"
        );
    }
}
