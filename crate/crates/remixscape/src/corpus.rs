//! Corpus ingestion and batch descriptor computation.
//!
//! A corpus is described by a JSON-Lines manifest, one design per row:
//!
//! ```text
//! {"id":"bolt","file":"meshes/bolt.stl","timestamp":"2020-04-01T12:00:00Z","parents":[],"popularity":12}
//! ```
//!
//! `file` may be a local path (resolved relative to the manifest) or an
//! http(s) URL handled by [`crate::fetch`]. Loading is all-or-nothing: the
//! first malformed row aborts with its line number. Descriptor computation
//! is content-addressed and parallel; identical mesh bytes are computed
//! once no matter how many ids reference them, and results are independent
//! of the worker count.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::Deserialize;
use thiserror::Error;

use crate::cache::{CacheError, ContentHash, DescriptorCache};
use crate::descriptor::{
    describe_traced, ComponentMode, DescriptorConfig, DesignDescriptor, ParamsHash,
    CLIPPED_FRACTION_WARN,
};
use crate::graph::DesignRecord;
use crate::mesh::parse_stl;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("manifest line {line}: {message}")]
    ManifestSyntax { line: usize, message: String },
    #[error("manifest line {line}: invalid timestamp `{value}`")]
    BadTimestamp { line: usize, value: String },
    #[error("manifest line {line}: {message}")]
    BadValue { line: usize, message: String },
    #[error("manifest line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("unknown design `{0}`")]
    UnknownDesign(String),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("config file: {0}")]
    BadConfig(String),
}

/// Popularity-to-elevation transform for the landscape z axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZTransform {
    Raw,
    Log1p,
}

impl ZTransform {
    pub fn apply(&self, popularity: u64) -> f64 {
        match self {
            ZTransform::Raw => popularity as f64,
            ZTransform::Log1p => (popularity as f64).ln_1p(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ZTransform::Raw => "raw",
            ZTransform::Log1p => "log1p",
        }
    }
}

impl std::str::FromStr for ZTransform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(ZTransform::Raw),
            "log1p" => Ok(ZTransform::Log1p),
            other => Err(format!("unknown z_transform `{other}` (expected `raw` or `log1p`)")),
        }
    }
}

/// Full pipeline configuration: descriptor parameters plus the comparison
/// mode and landscape elevation transform.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub descriptor: DescriptorConfig,
    pub mode: ComponentMode,
    pub z_transform: ZTransform,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            descriptor: DescriptorConfig::default(),
            mode: ComponentMode::Joint,
            z_transform: ZTransform::Log1p,
        }
    }
}

#[derive(Deserialize)]
struct RawConfig {
    resolution: Option<u32>,
    radii: Option<u32>,
    bands: Option<u32>,
    bandwidth: Option<u32>,
    weld_tolerance: Option<f64>,
    quadrature_oversample: Option<u32>,
    mode: Option<String>,
    z_transform: Option<String>,
}

impl PipelineConfig {
    /// Reads a JSON config file; absent keys keep their defaults.
    pub fn from_json_file(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path)?;
        let raw: RawConfig =
            serde_json::from_str(&text).map_err(|e| CorpusError::BadConfig(e.to_string()))?;
        let mut config = PipelineConfig::default();
        if let Some(v) = raw.resolution {
            config.descriptor.resolution = v;
        }
        if let Some(v) = raw.radii {
            config.descriptor.radii = v;
        }
        if let Some(v) = raw.bands {
            config.descriptor.bands = v;
        }
        if let Some(v) = raw.bandwidth {
            config.descriptor.bandwidth = v;
        }
        if let Some(v) = raw.weld_tolerance {
            config.descriptor.weld_tolerance = v;
        }
        if let Some(v) = raw.quadrature_oversample {
            config.descriptor.quadrature_oversample = v;
        }
        if let Some(v) = raw.mode {
            config.mode = v.parse().map_err(CorpusError::BadConfig)?;
        }
        if let Some(v) = raw.z_transform {
            config.z_transform = v.parse().map_err(CorpusError::BadConfig)?;
        }
        Ok(config)
    }

    pub fn params_hash(&self) -> ParamsHash {
        self.descriptor.params_hash(self.mode)
    }
}

/// An ordered design corpus with optional descriptors.
#[derive(Debug, Clone)]
pub struct Corpus {
    records: Vec<DesignRecord>,
    id_index: HashMap<String, usize>,
    /// Where each design's mesh bytes live locally; URL entries get one
    /// after fetching.
    local_paths: HashMap<String, PathBuf>,
    /// Mesh content hash per design id, filled by descriptor computation.
    content_hashes: HashMap<String, ContentHash>,
    /// Descriptor per content hash (ids sharing bytes share descriptors).
    descriptors: BTreeMap<ContentHash, DesignDescriptor>,
    config: PipelineConfig,
    manifest_dir: PathBuf,
}

/// One design that could not be processed, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignFailure {
    pub id: String,
    pub error: String,
}

/// A non-fatal per-design note, e.g. heavy clipping during normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignWarning {
    pub id: String,
    pub message: String,
}

/// What a descriptor batch produced besides the descriptors themselves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchOutcome {
    /// Designs that failed, each exactly once, sorted by id.
    pub failures: Vec<DesignFailure>,
    /// Non-fatal warnings, sorted by id.
    pub warnings: Vec<DesignWarning>,
}

impl Corpus {
    /// Loads a JSON-Lines manifest. Any malformed row aborts with its line
    /// number; nothing is returned on error.
    pub fn load_manifest(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path)?;
        let manifest_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let mut records = Vec::new();
        let mut id_index = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(line).map_err(|e| CorpusError::ManifestSyntax {
                    line: line_no,
                    message: e.to_string(),
                })?;
            let record = parse_row(&value, line_no)?;
            if id_index.insert(record.id.clone(), records.len()).is_some() {
                return Err(CorpusError::DuplicateId {
                    line: line_no,
                    id: record.id,
                });
            }
            records.push(record);
        }
        let mut corpus = Self {
            records,
            id_index,
            local_paths: HashMap::new(),
            content_hashes: HashMap::new(),
            descriptors: BTreeMap::new(),
            config: PipelineConfig::default(),
            manifest_dir,
        };
        corpus.resolve_local_paths();
        Ok(corpus)
    }

    /// Builds a corpus directly from records; paths are taken relative to
    /// `base_dir`.
    pub fn from_records(records: Vec<DesignRecord>, base_dir: &Path) -> Result<Self, CorpusError> {
        let mut id_index = HashMap::new();
        for (i, record) in records.iter().enumerate() {
            if id_index.insert(record.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    line: i + 1,
                    id: record.id.clone(),
                });
            }
        }
        let mut corpus = Self {
            records,
            id_index,
            local_paths: HashMap::new(),
            content_hashes: HashMap::new(),
            descriptors: BTreeMap::new(),
            config: PipelineConfig::default(),
            manifest_dir: base_dir.to_path_buf(),
        };
        corpus.resolve_local_paths();
        Ok(corpus)
    }

    fn resolve_local_paths(&mut self) {
        for record in &self.records {
            if is_url(&record.mesh_ref) || record.mesh_ref.is_empty() {
                continue;
            }
            let path = PathBuf::from(&record.mesh_ref);
            let resolved = if path.is_absolute() {
                path
            } else {
                self.manifest_dir.join(path)
            };
            self.local_paths.insert(record.id.clone(), resolved);
        }
    }

    pub fn set_config(&mut self, config: PipelineConfig) {
        self.config = config;
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[DesignRecord] {
        &self.records
    }

    pub fn record(&self, id: &str) -> Option<&DesignRecord> {
        self.id_index.get(id).map(|&i| &self.records[i])
    }

    pub fn manifest_dir(&self) -> &Path {
        &self.manifest_dir
    }

    pub fn local_path(&self, id: &str) -> Option<&Path> {
        self.local_paths.get(id).map(PathBuf::as_path)
    }

    pub fn set_local_path(&mut self, id: &str, path: PathBuf) {
        self.local_paths.insert(id.to_string(), path);
    }

    /// The descriptor for a design, if computed.
    pub fn descriptor(&self, id: &str) -> Option<&DesignDescriptor> {
        let hash = self.content_hashes.get(id)?;
        self.descriptors.get(hash)
    }

    pub fn content_hash(&self, id: &str) -> Option<&ContentHash> {
        self.content_hashes.get(id)
    }

    /// Attaches a precomputed descriptor (mainly for tests and synthetic
    /// corpora).
    pub fn attach_descriptor(&mut self, id: &str, hash: ContentHash, descriptor: DesignDescriptor) {
        self.content_hashes.insert(id.to_string(), hash);
        self.descriptors.insert(hash, descriptor);
    }

    /// Ids of designs that have descriptors, in manifest order.
    pub fn described_ids(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter(|r| self.descriptor(&r.id).is_some())
            .map(|r| r.id.as_str())
            .collect()
    }
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

fn parse_row(value: &serde_json::Value, line: usize) -> Result<DesignRecord, CorpusError> {
    let obj = value.as_object().ok_or_else(|| CorpusError::ManifestSyntax {
        line,
        message: "row is not a JSON object".into(),
    })?;
    let field = |name: &str| {
        obj.get(name).ok_or_else(|| CorpusError::ManifestSyntax {
            line,
            message: format!("missing field `{name}`"),
        })
    };
    let string_field = |name: &str| -> Result<String, CorpusError> {
        field(name)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| CorpusError::BadValue {
                line,
                message: format!("field `{name}` must be a string"),
            })
    };

    let id = string_field("id")?;
    if id.is_empty() {
        return Err(CorpusError::BadValue {
            line,
            message: "field `id` must be non-empty".into(),
        });
    }
    let file = string_field("file")?;
    let timestamp_raw = string_field("timestamp")?;
    let timestamp: DateTime<Utc> = DateTime::parse_from_rfc3339(&timestamp_raw)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|_| CorpusError::BadTimestamp {
            line,
            value: timestamp_raw.clone(),
        })?;

    let parents_value = field("parents")?;
    let parents_array = parents_value
        .as_array()
        .ok_or_else(|| CorpusError::BadValue {
            line,
            message: "field `parents` must be an array of strings".into(),
        })?;
    let mut parents = Vec::with_capacity(parents_array.len());
    for p in parents_array {
        let parent = p
            .as_str()
            .ok_or_else(|| CorpusError::BadValue {
                line,
                message: "field `parents` must contain only strings".into(),
            })?
            .to_string();
        if parent == id {
            return Err(CorpusError::BadValue {
                line,
                message: format!("design `{id}` lists itself as a parent"),
            });
        }
        if parents.contains(&parent) {
            return Err(CorpusError::BadValue {
                line,
                message: format!("duplicate parent `{parent}`"),
            });
        }
        parents.push(parent);
    }

    let popularity_value = field("popularity")?;
    let popularity = popularity_value
        .as_u64()
        .ok_or_else(|| CorpusError::BadValue {
            line,
            message: format!("field `popularity` must be a non-negative integer, got {popularity_value}"),
        })?;

    Ok(DesignRecord {
        id,
        timestamp,
        parents,
        popularity,
        mesh_ref: file,
    })
}

/// Computes descriptors for every design with a local mesh, consulting and
/// filling the cache. Failures are per-design and do not stop the batch;
/// each failed id appears exactly once in the returned report. The cache
/// file is compacted (canonically ordered) at the end of the batch.
pub fn compute_descriptors(
    corpus: &mut Corpus,
    cache: &mut DescriptorCache,
    parallelism: usize,
) -> Result<BatchOutcome, CorpusError> {
    let config = corpus.config.clone();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();

    // Read and hash every mesh first; group ids by content hash.
    let mut bytes_by_hash: BTreeMap<ContentHash, Vec<u8>> = BTreeMap::new();
    let mut ids_by_hash: BTreeMap<ContentHash, Vec<String>> = BTreeMap::new();
    for record in &corpus.records {
        let id = record.id.clone();
        let Some(path) = corpus.local_paths.get(&id) else {
            failures.push(DesignFailure {
                id,
                error: format!("mesh `{}` is not available locally (run fetch first)", record.mesh_ref),
            });
            continue;
        };
        match std::fs::read(path) {
            Ok(bytes) => {
                let hash = ContentHash::of(&bytes);
                corpus.content_hashes.insert(id.clone(), hash);
                bytes_by_hash.entry(hash).or_insert(bytes);
                ids_by_hash.entry(hash).or_default().push(id);
            }
            Err(e) => failures.push(DesignFailure {
                id,
                error: format!("cannot read `{}`: {e}", path.display()),
            }),
        }
    }

    // Partition into cache hits and misses.
    let mut missing: Vec<(ContentHash, Vec<u8>)> = Vec::new();
    for (hash, bytes) in bytes_by_hash {
        if let Some(descriptor) = cache.get(&hash) {
            corpus.descriptors.insert(hash, descriptor);
        } else {
            missing.push((hash, bytes));
        }
    }

    // Compute misses in parallel; the cache writer is serialized.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("failed to build worker pool");
    let cache_mutex = Mutex::new(cache);
    type Computed = (ContentHash, Result<(DesignDescriptor, f64), String>);
    let results: Vec<Computed> = pool.install(|| {
        use rayon::prelude::*;
        missing
            .par_iter()
            .map(|(hash, bytes)| {
                let outcome = parse_stl(bytes)
                    .map_err(|e| e.to_string())
                    .and_then(|mesh| {
                        describe_traced(&mesh, &config.descriptor, config.mode)
                            .map(|(d, trace)| (d, trace.max_clipped_fraction()))
                            .map_err(|e| e.to_string())
                    });
                if let Ok((descriptor, _)) = &outcome {
                    let mut guard = cache_mutex.lock().unwrap();
                    if let Err(e) = guard.insert(*hash, descriptor) {
                        return (*hash, Err(format!("cache write failed: {e}")));
                    }
                }
                (*hash, outcome)
            })
            .collect()
    });

    for (hash, outcome) in results {
        match outcome {
            Ok((descriptor, clipped)) => {
                if clipped > CLIPPED_FRACTION_WARN {
                    for id in ids_by_hash.get(&hash).into_iter().flatten() {
                        warnings.push(DesignWarning {
                            id: id.clone(),
                            message: format!(
                                "{:.1}% of the surface was clipped during normalization;                                  thin protrusions may be missing from the descriptor",
                                clipped * 100.0
                            ),
                        });
                    }
                }
                corpus.descriptors.insert(hash, descriptor);
            }
            Err(error) => {
                for id in ids_by_hash.get(&hash).into_iter().flatten() {
                    failures.push(DesignFailure {
                        id: id.clone(),
                        error: error.clone(),
                    });
                }
            }
        }
    }

    let cache = cache_mutex.into_inner().unwrap();
    cache.compact()?;
    failures.sort_by(|a, b| a.id.cmp(&b.id));
    warnings.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(BatchOutcome { failures, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{write_stl, StlFormat};
    use crate::shapes;

    fn write_manifest(dir: &Path, rows: &[&str]) -> PathBuf {
        let path = dir.join("manifest.jsonl");
        std::fs::write(&path, rows.join("\n")).unwrap();
        path
    }

    #[test]
    fn empty_manifest_is_an_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(dir.path(), &[]);
        let corpus = Corpus::load_manifest(&path).unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn single_row_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(
            dir.path(),
            &[r#"{"id":"a","file":"a.stl","timestamp":"2020-01-01T00:00:00Z","parents":[],"popularity":3}"#],
        );
        let corpus = Corpus::load_manifest(&path).unwrap();
        assert_eq!(corpus.len(), 1);
        let record = corpus.record("a").unwrap();
        assert_eq!(record.popularity, 3);
        assert_eq!(corpus.local_path("a").unwrap(), dir.path().join("a.stl"));
    }

    #[test]
    fn negative_popularity_is_a_bad_value_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(
            dir.path(),
            &[
                r#"{"id":"a","file":"a.stl","timestamp":"2020-01-01T00:00:00Z","parents":[],"popularity":3}"#,
                r#"{"id":"b","file":"b.stl","timestamp":"2020-01-02T00:00:00Z","parents":[],"popularity":-1}"#,
            ],
        );
        match Corpus::load_manifest(&path).unwrap_err() {
            CorpusError::BadValue { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_timestamp_and_syntax_carry_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(
            dir.path(),
            &[r#"{"id":"a","file":"a.stl","timestamp":"yesterday","parents":[],"popularity":0}"#],
        );
        assert!(matches!(
            Corpus::load_manifest(&path),
            Err(CorpusError::BadTimestamp { line: 1, .. })
        ));

        let path = write_manifest(dir.path(), &["not json"]);
        assert!(matches!(
            Corpus::load_manifest(&path),
            Err(CorpusError::ManifestSyntax { line: 1, .. })
        ));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let row = r#"{"id":"a","file":"a.stl","timestamp":"2020-01-01T00:00:00Z","parents":[],"popularity":0}"#;
        let path = write_manifest(dir.path(), &[row, row]);
        assert!(matches!(
            Corpus::load_manifest(&path),
            Err(CorpusError::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn config_file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            r#"{"resolution":32,"radii":16,"bands":8,"bandwidth":8,"mode":"component-matched","weld_tolerance":0.5,"z_transform":"raw"}"#,
        )
        .unwrap();
        let config = PipelineConfig::from_json_file(&path).unwrap();
        assert_eq!(config.descriptor.resolution, 32);
        assert_eq!(config.mode, ComponentMode::ComponentMatched);
        assert_eq!(config.z_transform, ZTransform::Raw);
        assert_eq!(config.descriptor.weld_tolerance, 0.5);
    }

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            descriptor: DescriptorConfig {
                resolution: 16,
                radii: 8,
                bands: 4,
                bandwidth: 4,
                weld_tolerance: 0.0,
                quadrature_oversample: 2,
            },
            mode: ComponentMode::Joint,
            z_transform: ZTransform::Log1p,
        }
    }

    fn stage_corpus(dir: &Path) -> (PathBuf, PathBuf) {
        let tet = write_stl(&shapes::tetrahedron(4.0), StlFormat::Binary);
        let cube = write_stl(&shapes::cuboid(3.0, 3.0, 3.0), StlFormat::Binary);
        std::fs::write(dir.join("tet.stl"), &tet).unwrap();
        std::fs::write(dir.join("cube.stl"), &cube).unwrap();
        // `dup` shares bytes with tet.stl under a different name.
        std::fs::write(dir.join("dup.stl"), &tet).unwrap();
        let manifest = write_manifest(
            dir,
            &[
                r#"{"id":"tet","file":"tet.stl","timestamp":"2020-01-01T00:00:00Z","parents":[],"popularity":1}"#,
                r#"{"id":"cube","file":"cube.stl","timestamp":"2020-01-02T00:00:00Z","parents":["tet"],"popularity":5}"#,
                r#"{"id":"dup","file":"dup.stl","timestamp":"2020-01-03T00:00:00Z","parents":[],"popularity":2}"#,
            ],
        );
        (manifest, dir.join("cache.bin"))
    }

    #[test]
    fn descriptors_are_content_addressed_and_cached() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, cache_path) = stage_corpus(dir.path());
        let config = small_config();

        let mut corpus = Corpus::load_manifest(&manifest).unwrap();
        corpus.set_config(config.clone());
        let (mut cache, _) =
            DescriptorCache::open(&cache_path, &config.descriptor, config.mode).unwrap();
        let outcome = compute_descriptors(&mut corpus, &mut cache, 2).unwrap();
        assert!(outcome.failures.is_empty());
        // Three designs, two distinct meshes.
        assert_eq!(cache.len(), 2);
        assert_eq!(
            corpus.content_hash("tet").unwrap(),
            corpus.content_hash("dup").unwrap()
        );
        assert!(corpus.descriptor("tet").is_some());
        assert!(corpus.descriptor("cube").is_some());

        // Second run over unchanged corpus: all hits, nothing recomputed,
        // and the compacted file is byte-stable.
        let before = std::fs::read(&cache_path).unwrap();
        let mut corpus2 = Corpus::load_manifest(&manifest).unwrap();
        corpus2.set_config(config.clone());
        let (mut cache2, report) =
            DescriptorCache::open(&cache_path, &config.descriptor, config.mode).unwrap();
        assert_eq!(report.entries, 2);
        let outcome = compute_descriptors(&mut corpus2, &mut cache2, 1).unwrap();
        assert!(outcome.failures.is_empty());
        let after = std::fs::read(&cache_path).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn worker_count_does_not_change_the_cache_file() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let config = small_config();
        let mut files = Vec::new();
        for (dir, workers) in [(&dir1, 1usize), (&dir2, 8)] {
            let (manifest, cache_path) = stage_corpus(dir.path());
            let mut corpus = Corpus::load_manifest(&manifest).unwrap();
            corpus.set_config(config.clone());
            let (mut cache, _) =
                DescriptorCache::open(&cache_path, &config.descriptor, config.mode).unwrap();
            compute_descriptors(&mut corpus, &mut cache, workers).unwrap();
            files.push(std::fs::read(&cache_path).unwrap());
        }
        assert_eq!(files[0], files[1]);
    }

    #[test]
    fn heavy_clipping_is_surfaced_as_a_warning() {
        // A dense ball with one very long thin spike: the ball dominates
        // the mean radius, so the spike reaches far beyond N/2 and clips.
        let dir = tempfile::tempdir().unwrap();
        let ball = crate::shapes::icosphere(5.0, 2);
        let spike = crate::shapes::cuboid(0.4, 0.4, 220.0);
        let spike = crate::shapes::translated(&spike, nalgebra::Vector3::new(0.0, 0.0, 110.0));
        let mesh = ball.merged(&spike);
        std::fs::write(
            dir.path().join("spiky.stl"),
            write_stl(&mesh, StlFormat::Binary),
        )
        .unwrap();
        let manifest = write_manifest(
            dir.path(),
            &[r#"{"id":"spiky","file":"spiky.stl","timestamp":"2020-01-01T00:00:00Z","parents":[],"popularity":0}"#],
        );
        let config = small_config();
        let mut corpus = Corpus::load_manifest(&manifest).unwrap();
        corpus.set_config(config.clone());
        let (mut cache, _) = DescriptorCache::open(
            &dir.path().join("cache.bin"),
            &config.descriptor,
            config.mode,
        )
        .unwrap();
        let outcome = compute_descriptors(&mut corpus, &mut cache, 1).unwrap();
        assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
        assert_eq!(outcome.warnings.len(), 1);
        assert_eq!(outcome.warnings[0].id, "spiky");
        assert!(outcome.warnings[0].message.contains("clipped"));
    }

    #[test]
    fn per_design_failures_are_isolated_and_reported_once() {
        let dir = tempfile::tempdir().unwrap();
        let tet = write_stl(&shapes::tetrahedron(4.0), StlFormat::Binary);
        std::fs::write(dir.path().join("tet.stl"), &tet).unwrap();
        std::fs::write(dir.path().join("broken.stl"), b"not an stl at all").unwrap();
        let manifest = write_manifest(
            dir.path(),
            &[
                r#"{"id":"ok","file":"tet.stl","timestamp":"2020-01-01T00:00:00Z","parents":[],"popularity":1}"#,
                r#"{"id":"broken","file":"broken.stl","timestamp":"2020-01-02T00:00:00Z","parents":[],"popularity":1}"#,
                r#"{"id":"missing","file":"nowhere.stl","timestamp":"2020-01-03T00:00:00Z","parents":[],"popularity":1}"#,
            ],
        );
        let config = small_config();
        let mut corpus = Corpus::load_manifest(&manifest).unwrap();
        corpus.set_config(config.clone());
        let (mut cache, _) = DescriptorCache::open(
            &dir.path().join("cache.bin"),
            &config.descriptor,
            config.mode,
        )
        .unwrap();
        let outcome = compute_descriptors(&mut corpus, &mut cache, 4).unwrap();
        let failed_ids: Vec<&str> = outcome.failures.iter().map(|f| f.id.as_str()).collect();
        assert_eq!(failed_ids, vec!["broken", "missing"]);
        assert!(corpus.descriptor("ok").is_some());
        assert!(corpus.descriptor("broken").is_none());
        assert_eq!(corpus.described_ids(), vec!["ok"]);
    }
}
