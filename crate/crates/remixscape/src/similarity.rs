//! Descriptor distances and the novelty metric.
//!
//! Novelty of a design is its distance to the closest design with a strictly
//! earlier timestamp: a remix of something recent scores low, a shape unlike
//! anything before it scores high. The earliest design has no predecessor
//! and gets an explicit marker instead of a number.
//!
//! In joint mode the distance is plain Euclidean over the flattened energy
//! matrices (a true metric). Component-matched mode pairs components
//! greedily by ascending descriptor distance and averages the matched
//! distances, adding each unmatched component's norm as a penalty; it is
//! symmetric and zero on identical sets but may violate the triangle
//! inequality, so metric-dependent consumers should stick to joint mode.

use thiserror::Error;

use crate::corpus::Corpus;
use crate::descriptor::{ComponentMode, DesignDescriptor, ParamsHash};

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("descriptors were computed under different parameters")]
    IncompatibleDescriptors,
    #[error("unknown design `{0}`")]
    UnknownDesign(String),
    #[error("no descriptor for design(s): {}", .0.join(", "))]
    MissingDescriptor(Vec<String>),
}

/// Distance between two design descriptors under their shared mode.
pub fn distance(a: &DesignDescriptor, b: &DesignDescriptor) -> Result<f64, SimilarityError> {
    if a.params_hash() != b.params_hash() {
        return Err(SimilarityError::IncompatibleDescriptors);
    }
    Ok(match a.mode() {
        ComponentMode::Joint => a.joint().euclidean_distance(b.joint()),
        ComponentMode::ComponentMatched => component_matched_distance(a, b),
    })
}

/// Greedy component pairing: all cross pairs sorted by ascending distance
/// (ties by the unordered index pair, which keeps the result symmetric),
/// matched first-come-first-served; unmatched components contribute their
/// descriptor norm.
fn component_matched_distance(a: &DesignDescriptor, b: &DesignDescriptor) -> f64 {
    let left = a.per_component();
    let right = b.per_component();
    let mut pairs = Vec::with_capacity(left.len() * right.len());
    for (i, ca) in left.iter().enumerate() {
        for (j, cb) in right.iter().enumerate() {
            pairs.push((ca.euclidean_distance(cb), i.min(j), i.max(j), i, j));
        }
    }
    pairs.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap()
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut used_left = vec![false; left.len()];
    let mut used_right = vec![false; right.len()];
    let mut matched_sum = 0.0;
    let mut matched_count = 0usize;
    for &(d, _, _, i, j) in &pairs {
        if used_left[i] || used_right[j] {
            continue;
        }
        used_left[i] = true;
        used_right[j] = true;
        matched_sum += d;
        matched_count += 1;
    }
    let mut result = if matched_count > 0 {
        matched_sum / matched_count as f64
    } else {
        0.0
    };
    for (i, used) in used_left.iter().enumerate() {
        if !used {
            result += left[i].norm();
        }
    }
    for (j, used) in used_right.iter().enumerate() {
        if !used {
            result += right[j].norm();
        }
    }
    result
}

/// The closest strictly earlier design, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestPredecessor {
    pub id: String,
    pub distance: f64,
}

/// A design's novelty: distance to its nearest predecessor, or the explicit
/// no-predecessor marker (`nearest: None`).
#[derive(Debug, Clone, PartialEq)]
pub struct NoveltyScore {
    pub design_id: String,
    pub nearest: Option<NearestPredecessor>,
    pub computed_under: ParamsHash,
}

impl NoveltyScore {
    pub fn value(&self) -> Option<f64> {
        self.nearest.as_ref().map(|n| n.distance)
    }

    pub fn nearest_id(&self) -> Option<&str> {
        self.nearest.as_ref().map(|n| n.id.as_str())
    }
}

fn descriptor_or_missing<'a>(
    corpus: &'a Corpus,
    id: &str,
) -> Result<&'a DesignDescriptor, SimilarityError> {
    corpus
        .record(id)
        .ok_or_else(|| SimilarityError::UnknownDesign(id.to_string()))?;
    corpus
        .descriptor(id)
        .ok_or_else(|| SimilarityError::MissingDescriptor(vec![id.to_string()]))
}

/// Novelty of one design: the minimum distance over designs with a strictly
/// earlier timestamp. Same-timestamp designs are mutually invisible, and
/// earlier designs without descriptors are skipped. Distance ties pick the
/// earlier timestamp, then the lexicographically smaller id.
pub fn novelty(corpus: &Corpus, design_id: &str) -> Result<NoveltyScore, SimilarityError> {
    let target = corpus
        .record(design_id)
        .ok_or_else(|| SimilarityError::UnknownDesign(design_id.to_string()))?;
    let descriptor = descriptor_or_missing(corpus, design_id)?;

    let mut best: Option<(f64, chrono::DateTime<chrono::Utc>, &str)> = None;
    for other in corpus.records() {
        if other.timestamp >= target.timestamp || other.id == design_id {
            continue;
        }
        let Some(other_descriptor) = corpus.descriptor(&other.id) else {
            continue;
        };
        let d = distance(descriptor, other_descriptor)?;
        let candidate = (d, other.timestamp, other.id.as_str());
        let better = match &best {
            None => true,
            Some((bd, bt, bid)) => {
                d < *bd || (d == *bd && (other.timestamp, other.id.as_str()) < (*bt, *bid))
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(NoveltyScore {
        design_id: design_id.to_string(),
        nearest: best.map(|(distance, _, id)| NearestPredecessor {
            id: id.to_string(),
            distance,
        }),
        computed_under: corpus.config().params_hash(),
    })
}

/// Novelty of every described design, in manifest order.
pub fn novelty_all(corpus: &Corpus) -> Result<Vec<NoveltyScore>, SimilarityError> {
    corpus
        .records()
        .iter()
        .filter(|r| corpus.descriptor(&r.id).is_some())
        .map(|r| novelty(corpus, &r.id))
        .collect()
}

/// Which designs qualify as neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalFilter {
    /// Only designs with a strictly earlier timestamp.
    PredecessorsOnly,
    /// Every other design.
    All,
}

/// The `k` nearest neighbors of a design, ascending by distance with ties
/// broken by (timestamp, id).
pub fn k_nearest(
    corpus: &Corpus,
    design_id: &str,
    k: usize,
    filter: TemporalFilter,
) -> Result<Vec<(String, f64)>, SimilarityError> {
    let target = corpus
        .record(design_id)
        .ok_or_else(|| SimilarityError::UnknownDesign(design_id.to_string()))?;
    let descriptor = descriptor_or_missing(corpus, design_id)?;

    let mut candidates = Vec::new();
    for other in corpus.records() {
        if other.id == design_id {
            continue;
        }
        if filter == TemporalFilter::PredecessorsOnly && other.timestamp >= target.timestamp {
            continue;
        }
        let Some(other_descriptor) = corpus.descriptor(&other.id) else {
            continue;
        };
        let d = distance(descriptor, other_descriptor)?;
        candidates.push((d, other.timestamp, other.id.clone()));
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    Ok(candidates
        .into_iter()
        .take(k)
        .map(|(d, _, id)| (id, d))
        .collect())
}

/// Pairwise distances over the corpus (or a subset), always in manifest
/// order. Designs without descriptors make the call fail, listing every
/// offending id.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    /// Row-major `n x n`, symmetric, zero diagonal.
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    /// CSV export: first row and column carry the ids.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for id in &self.ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(id);
            for j in 0..self.ids.len() {
                out.push(',');
                out.push_str(&format!("{}", self.value(i, j)));
            }
            out.push('\n');
        }
        out
    }

    /// Builds a matrix from a symmetric closure; used by tests and the
    /// landscape module.
    pub fn from_fn(
        ids: Vec<String>,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> DistanceMatrix {
        let n = ids.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        DistanceMatrix { ids, values }
    }
}

/// Distance matrix over the described designs of the corpus, or a subset.
/// Ordering is always the manifest order regardless of the subset order.
pub fn distance_matrix(
    corpus: &Corpus,
    subset: Option<&[String]>,
) -> Result<DistanceMatrix, SimilarityError> {
    let selected: Vec<&str> = match subset {
        None => corpus.records().iter().map(|r| r.id.as_str()).collect(),
        Some(ids) => {
            let mut wanted = std::collections::HashSet::new();
            for id in ids {
                if corpus.record(id).is_none() {
                    return Err(SimilarityError::UnknownDesign(id.clone()));
                }
                wanted.insert(id.as_str());
            }
            corpus
                .records()
                .iter()
                .map(|r| r.id.as_str())
                .filter(|id| wanted.contains(id))
                .collect()
        }
    };

    let mut missing = Vec::new();
    let mut descriptors = Vec::with_capacity(selected.len());
    for id in &selected {
        match corpus.descriptor(id) {
            Some(d) => descriptors.push(d),
            None => missing.push(id.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(SimilarityError::MissingDescriptor(missing));
    }

    let mut error = None;
    let matrix = DistanceMatrix::from_fn(
        selected.iter().map(|s| s.to_string()).collect(),
        |i, j| match distance(descriptors[i], descriptors[j]) {
            Ok(d) => d,
            Err(e) => {
                error = Some(e);
                f64::NAN
            }
        },
    );
    match error {
        Some(e) => Err(e),
        None => Ok(matrix),
    }
}

/// Novelty report CSV: `id,timestamp,novelty,nearest_id`, `NA` and an empty
/// nearest for designs without predecessors.
pub fn novelty_report_csv(corpus: &Corpus, scores: &[NoveltyScore]) -> String {
    let mut out = String::from("id,timestamp,novelty,nearest_id\n");
    for score in scores {
        let timestamp = corpus
            .record(&score.design_id)
            .map(|r| r.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
            .unwrap_or_default();
        match &score.nearest {
            Some(nearest) => {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    score.design_id, timestamp, nearest.distance, nearest.id
                ));
            }
            None => {
                out.push_str(&format!("{},{},NA,\n", score.design_id, timestamp));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{DescriptorConfig, ShapeDescriptor};
    use crate::graph::hours_after_epoch;
    use crate::graph::DesignRecord;
    use rand::{Rng, SeedableRng};

    fn config() -> DescriptorConfig {
        DescriptorConfig {
            resolution: 16,
            radii: 4,
            bands: 2,
            bandwidth: 2,
            weld_tolerance: 0.0,
            quadrature_oversample: 2,
        }
    }

    fn shape(energies: Vec<f64>, mode: ComponentMode) -> ShapeDescriptor {
        ShapeDescriptor::from_energies(4, 2, energies, config().params_hash(mode))
    }

    fn joint_descriptor(energies: Vec<f64>) -> DesignDescriptor {
        let s = shape(energies, ComponentMode::Joint);
        DesignDescriptor::from_parts(s.clone(), vec![s], ComponentMode::Joint)
    }

    fn multi_descriptor(components: Vec<Vec<f64>>) -> DesignDescriptor {
        let shapes: Vec<ShapeDescriptor> = components
            .into_iter()
            .map(|e| shape(e, ComponentMode::ComponentMatched))
            .collect();
        DesignDescriptor::from_parts(
            shapes[0].clone(),
            shapes,
            ComponentMode::ComponentMatched,
        )
    }

    fn random_energies(rng: &mut impl Rng) -> Vec<f64> {
        (0..8).map(|_| rng.gen_range(0.0..10.0)).collect()
    }

    #[test]
    fn distance_to_self_is_zero_in_both_modes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let d = joint_descriptor(random_energies(&mut rng));
        assert_eq!(distance(&d, &d).unwrap(), 0.0);
        let m = multi_descriptor(vec![random_energies(&mut rng), random_energies(&mut rng)]);
        assert_eq!(distance(&m, &m).unwrap(), 0.0);
    }

    #[test]
    fn incompatible_hashes_are_rejected() {
        let a = joint_descriptor(vec![1.0; 8]);
        let s = shape(vec![1.0; 8], ComponentMode::ComponentMatched);
        let b = DesignDescriptor::from_parts(s.clone(), vec![s], ComponentMode::ComponentMatched);
        assert!(matches!(
            distance(&a, &b),
            Err(SimilarityError::IncompatibleDescriptors)
        ));
    }

    #[test]
    fn distance_is_symmetric_in_both_modes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let a = joint_descriptor(random_energies(&mut rng));
            let b = joint_descriptor(random_energies(&mut rng));
            assert_eq!(distance(&a, &b).unwrap(), distance(&b, &a).unwrap());

            let na = rng.gen_range(1..4);
            let nb = rng.gen_range(1..4);
            let ma = multi_descriptor((0..na).map(|_| random_energies(&mut rng)).collect());
            let mb = multi_descriptor((0..nb).map(|_| random_energies(&mut rng)).collect());
            assert_eq!(distance(&ma, &mb).unwrap(), distance(&mb, &ma).unwrap());
        }
    }

    #[test]
    fn joint_mode_satisfies_the_triangle_inequality() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..1000 {
            let a = joint_descriptor(random_energies(&mut rng));
            let b = joint_descriptor(random_energies(&mut rng));
            let c = joint_descriptor(random_energies(&mut rng));
            let ab = distance(&a, &b).unwrap();
            let bc = distance(&b, &c).unwrap();
            let ac = distance(&a, &c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn unmatched_components_pay_their_norm() {
        // One component on each side matches perfectly; the second on the
        // left is unmatched and contributes its norm.
        let a = multi_descriptor(vec![vec![1.0; 8], vec![2.0; 8]]);
        let b = multi_descriptor(vec![vec![1.0; 8]]);
        let expected = (4.0f64 * 8.0).sqrt(); // norm of the all-2 matrix
        assert!((distance(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    fn corpus_with(
        descriptors: Vec<(&str, i64, Vec<f64>)>,
    ) -> Corpus {
        let records: Vec<DesignRecord> = descriptors
            .iter()
            .map(|(id, hour, _)| DesignRecord {
                id: id.to_string(),
                timestamp: hours_after_epoch(*hour),
                parents: Vec::new(),
                popularity: 0,
                mesh_ref: String::new(),
            })
            .collect();
        let mut corpus = Corpus::from_records(records, std::path::Path::new(".")).unwrap();
        for (i, (id, _, energies)) in descriptors.into_iter().enumerate() {
            let hash = crate::cache::ContentHash::of(format!("mesh-{i}").as_bytes());
            corpus.attach_descriptor(id, hash, joint_descriptor(energies));
        }
        corpus
    }

    #[test]
    fn earliest_design_has_no_predecessor() {
        let corpus = corpus_with(vec![
            ("first", 0, vec![1.0; 8]),
            ("second", 1, vec![2.0; 8]),
        ]);
        let score = novelty(&corpus, "first").unwrap();
        assert!(score.nearest.is_none());
        let score = novelty(&corpus, "second").unwrap();
        assert_eq!(score.nearest_id(), Some("first"));
    }

    #[test]
    fn duplicate_descriptor_scores_zero() {
        let corpus = corpus_with(vec![
            ("original", 0, vec![3.0; 8]),
            ("copy", 5, vec![3.0; 8]),
        ]);
        let score = novelty(&corpus, "copy").unwrap();
        assert_eq!(score.value(), Some(0.0));
        assert_eq!(score.nearest_id(), Some("original"));
    }

    #[test]
    fn same_timestamp_designs_are_mutually_invisible() {
        let corpus = corpus_with(vec![
            ("a", 0, vec![1.0; 8]),
            ("b", 0, vec![1.0; 8]),
        ]);
        assert!(novelty(&corpus, "a").unwrap().nearest.is_none());
        assert!(novelty(&corpus, "b").unwrap().nearest.is_none());
    }

    #[test]
    fn novelty_matches_exhaustive_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let n = rng.gen_range(10..=30);
            let specs: Vec<(String, i64, Vec<f64>)> = (0..n)
                .map(|i| (format!("d{i:02}"), i as i64, random_energies(&mut rng)))
                .collect();
            let refs: Vec<(&str, i64, Vec<f64>)> = specs
                .iter()
                .map(|(id, h, e)| (id.as_str(), *h, e.clone()))
                .collect();
            let corpus = corpus_with(refs);
            for (id, hour, _) in &specs {
                let score = novelty(&corpus, id).unwrap();
                // Oracle: brute-force minimum over all earlier designs.
                let mut best: Option<(f64, &str)> = None;
                for (other_id, other_hour, _) in &specs {
                    if other_hour >= hour {
                        continue;
                    }
                    let d = distance(
                        corpus.descriptor(id).unwrap(),
                        corpus.descriptor(other_id).unwrap(),
                    )
                    .unwrap();
                    let replace = match best {
                        None => true,
                        Some((bd, _)) => d < bd,
                    };
                    if replace {
                        best = Some((d, other_id));
                    }
                }
                match (score.nearest, best) {
                    (None, None) => {}
                    (Some(got), Some((bd, bid))) => {
                        assert_eq!(got.distance, bd, "{id}");
                        assert_eq!(got.id, bid, "{id}");
                    }
                    other => panic!("{id}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn k_nearest_is_consistent_with_novelty_and_full_sort() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(53);
        let n = 30;
        let specs: Vec<(String, i64, Vec<f64>)> = (0..n)
            .map(|i| (format!("d{i:02}"), i as i64, random_energies(&mut rng)))
            .collect();
        let refs: Vec<(&str, i64, Vec<f64>)> = specs
            .iter()
            .map(|(id, h, e)| (id.as_str(), *h, e.clone()))
            .collect();
        let corpus = corpus_with(refs);

        // k=1 over predecessors agrees with novelty().
        for (id, _, _) in &specs[1..] {
            let nearest = k_nearest(&corpus, id, 1, TemporalFilter::PredecessorsOnly).unwrap();
            let score = novelty(&corpus, id).unwrap();
            assert_eq!(nearest[0].0, score.nearest.as_ref().unwrap().id);
            assert_eq!(nearest[0].1, score.nearest.as_ref().unwrap().distance);
        }

        // k >= corpus size with All ranks everything, matching a full sort.
        let all = k_nearest(&corpus, "d15", 100, TemporalFilter::All).unwrap();
        assert_eq!(all.len(), n - 1);
        let mut expected: Vec<(f64, String)> = specs
            .iter()
            .filter(|(id, _, _)| id != "d15")
            .map(|(id, _, _)| {
                (
                    distance(
                        corpus.descriptor("d15").unwrap(),
                        corpus.descriptor(id).unwrap(),
                    )
                    .unwrap(),
                    id.clone(),
                )
            })
            .collect();
        expected.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (got, want) in all.iter().zip(&expected) {
            assert_eq!(got.1, want.0);
        }
    }

    #[test]
    fn distance_matrix_matches_recomputation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        let specs: Vec<(String, i64, Vec<f64>)> = (0..20)
            .map(|i| (format!("d{i:02}"), i as i64, random_energies(&mut rng)))
            .collect();
        let refs: Vec<(&str, i64, Vec<f64>)> = specs
            .iter()
            .map(|(id, h, e)| (id.as_str(), *h, e.clone()))
            .collect();
        let corpus = corpus_with(refs);
        let matrix = distance_matrix(&corpus, None).unwrap();
        assert_eq!(matrix.len(), 20);
        for i in 0..20 {
            assert_eq!(matrix.value(i, i), 0.0);
            for j in 0..20 {
                assert_eq!(matrix.value(i, j), matrix.value(j, i));
                let expected = distance(
                    corpus.descriptor(matrix.ids()[i].as_str()).unwrap(),
                    corpus.descriptor(matrix.ids()[j].as_str()).unwrap(),
                )
                .unwrap();
                assert_eq!(matrix.value(i, j), expected);
            }
        }
    }

    #[test]
    fn subset_matrix_keeps_manifest_order() {
        let corpus = corpus_with(vec![
            ("a", 0, vec![1.0; 8]),
            ("b", 1, vec![2.0; 8]),
            ("c", 2, vec![3.0; 8]),
        ]);
        let subset = vec!["c".to_string(), "a".to_string()];
        let matrix = distance_matrix(&corpus, Some(&subset)).unwrap();
        assert_eq!(matrix.ids(), &["a".to_string(), "c".to_string()]);

        let single = distance_matrix(&corpus, Some(&["b".to_string()])).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.value(0, 0), 0.0);
    }

    #[test]
    fn missing_descriptors_are_listed() {
        let mut corpus = corpus_with(vec![("a", 0, vec![1.0; 8])]);
        let extra = DesignRecord {
            id: "ghost".into(),
            timestamp: hours_after_epoch(1),
            parents: vec![],
            popularity: 0,
            mesh_ref: String::new(),
        };
        // Rebuild with an undescribed record appended.
        let mut records = corpus.records().to_vec();
        records.push(extra);
        corpus = Corpus::from_records(records, std::path::Path::new(".")).unwrap();
        let hash = crate::cache::ContentHash::of(b"mesh-0");
        corpus.attach_descriptor("a", hash, joint_descriptor(vec![1.0; 8]));
        match distance_matrix(&corpus, None).unwrap_err() {
            SimilarityError::MissingDescriptor(ids) => assert_eq!(ids, vec!["ghost".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn matrix_csv_has_ids_on_both_axes() {
        let corpus = corpus_with(vec![
            ("a", 0, vec![1.0; 8]),
            ("b", 1, vec![2.0; 8]),
        ]);
        let matrix = distance_matrix(&corpus, None).unwrap();
        let csv = matrix.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "id,a,b");
        assert!(lines[1].starts_with("a,0,"));
        assert!(lines[2].starts_with("b,"));
        assert!(lines[2].ends_with(",0"));
    }

    #[test]
    fn later_additions_never_change_existing_novelty() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(67);
        let mut specs: Vec<(String, i64, Vec<f64>)> = (0..12)
            .map(|i| (format!("d{i:02}"), i as i64, random_energies(&mut rng)))
            .collect();
        let refs: Vec<(&str, i64, Vec<f64>)> = specs
            .iter()
            .map(|(id, h, e)| (id.as_str(), *h, e.clone()))
            .collect();
        let corpus = corpus_with(refs);
        let before: Vec<_> = specs
            .iter()
            .map(|(id, _, _)| novelty(&corpus, id).unwrap())
            .collect();

        // Append a later design and recompute everything.
        specs.push(("d99".to_string(), 99, random_energies(&mut rng)));
        let refs: Vec<(&str, i64, Vec<f64>)> = specs
            .iter()
            .map(|(id, h, e)| (id.as_str(), *h, e.clone()))
            .collect();
        let extended = corpus_with(refs);
        for score in &before {
            let after = novelty(&extended, &score.design_id).unwrap();
            assert_eq!(&after, score);
        }
    }

    #[test]
    fn novelty_csv_uses_na_for_no_predecessor() {
        let corpus = corpus_with(vec![
            ("first", 0, vec![1.0; 8]),
            ("second", 1, vec![4.0; 8]),
        ]);
        let scores = novelty_all(&corpus).unwrap();
        let csv = novelty_report_csv(&corpus, &scores);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "id,timestamp,novelty,nearest_id");
        assert!(lines[1].starts_with("first,"));
        assert!(lines[1].ends_with(",NA,"));
        assert!(lines[2].starts_with("second,"));
        assert!(lines[2].ends_with(",first"));
    }
}
