//! Content-addressed descriptor cache.
//!
//! Descriptors are keyed by the SHA-256 of the raw mesh bytes, so renaming a
//! design or re-listing the same file under two ids never recomputes or
//! duplicates work. The on-disk format is versioned and append-only while a
//! batch runs; a clean batch end rewrites the file with records sorted by
//! content hash (via a temp file and rename), which gives identical bytes
//! for identical corpora regardless of worker count.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "RXDC" | version u32 | params_hash 32 bytes | radii u32 | bands u32
//! then per record:
//!   content_hash 32 bytes | mode u8 | descriptor_count u32 |
//!   descriptor_count x (radii x bands) f64 energies
//! ```
//!
//! The first descriptor of a record is the joint descriptor, the rest are
//! per-component in descending component-size order. A truncated trailing
//! record (crash mid-append) is dropped on load and reported, never treated
//! as corruption of the records before it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::descriptor::{
    ComponentMode, DescriptorConfig, DesignDescriptor, ParamsHash, ShapeDescriptor,
};

const MAGIC: &[u8; 4] = b"RXDC";
const FORMAT_VERSION: u32 = 1;

/// SHA-256 of a mesh file's raw bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentHash(pub [u8; 32]);

impl ContentHash {
    pub fn of(bytes: &[u8]) -> Self {
        Self(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a descriptor cache file (bad magic)")]
    BadMagic,
    #[error("unsupported cache format version {0}")]
    UnsupportedVersion(u32),
    #[error("cache was built under different parameters (expected {expected}, found {found})")]
    IncompatibleParams { expected: String, found: String },
    #[error("cache geometry mismatch: file has {file_radii}x{file_bands}, config wants {radii}x{bands}")]
    GeometryMismatch {
        file_radii: u32,
        file_bands: u32,
        radii: u32,
        bands: u32,
    },
}

#[derive(Debug, Clone)]
struct CachedEntry {
    mode: ComponentMode,
    /// Flattened energy matrices; `[0]` is the joint descriptor.
    descriptors: Vec<Vec<f64>>,
}

/// What loading an existing cache file found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub entries: usize,
    /// Bytes of a partial trailing record dropped during load.
    pub truncated_bytes: usize,
}

pub struct DescriptorCache {
    path: PathBuf,
    params_hash: ParamsHash,
    radii: u32,
    bands: u32,
    entries: BTreeMap<ContentHash, CachedEntry>,
}

impl DescriptorCache {
    /// Opens (or creates) the cache at `path` for the given configuration.
    /// An existing file must carry the same `params_hash`; pick another path
    /// to work under different parameters.
    pub fn open(
        path: &Path,
        config: &DescriptorConfig,
        mode: ComponentMode,
    ) -> Result<(Self, LoadReport), CacheError> {
        let params_hash = config.params_hash(mode);
        let mut cache = Self {
            path: path.to_path_buf(),
            params_hash,
            radii: config.radii,
            bands: config.bands,
            entries: BTreeMap::new(),
        };
        if path.exists() {
            let report = cache.load()?;
            Ok((cache, report))
        } else {
            cache.write_header_only()?;
            Ok((cache, LoadReport::default()))
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn params_hash(&self) -> &ParamsHash {
        &self.params_hash
    }

    pub fn contains(&self, hash: &ContentHash) -> bool {
        self.entries.contains_key(hash)
    }

    /// Reconstructs the stored descriptor set for a mesh, if cached.
    pub fn get(&self, hash: &ContentHash) -> Option<DesignDescriptor> {
        let entry = self.entries.get(hash)?;
        let make = |energies: &Vec<f64>| {
            ShapeDescriptor::from_energies(self.radii, self.bands, energies.clone(), self.params_hash)
        };
        let joint = make(&entry.descriptors[0]);
        let per_component = entry.descriptors[1..].iter().map(make).collect();
        Some(DesignDescriptor::from_parts(joint, per_component, entry.mode))
    }

    /// Stores a descriptor set, appending it to the cache file immediately.
    pub fn insert(
        &mut self,
        hash: ContentHash,
        descriptor: &DesignDescriptor,
    ) -> Result<(), CacheError> {
        if self.entries.contains_key(&hash) {
            return Ok(());
        }
        let mut descriptors = Vec::with_capacity(1 + descriptor.per_component().len());
        descriptors.push(descriptor.joint().energies().to_vec());
        for component in descriptor.per_component() {
            descriptors.push(component.energies().to_vec());
        }
        let entry = CachedEntry {
            mode: descriptor.mode(),
            descriptors,
        };
        let mut file = OpenOptions::new().append(true).open(&self.path)?;
        file.write_all(&Self::encode_record(&hash, &entry))?;
        file.flush()?;
        self.entries.insert(hash, entry);
        Ok(())
    }

    /// Rewrites the file with records in content-hash order, atomically.
    /// Run after a successful batch so equal corpora produce equal bytes.
    pub fn compact(&self) -> Result<(), CacheError> {
        let tmp = self.path.with_extension("tmp");
        {
            let mut file = File::create(&tmp)?;
            file.write_all(&self.header_bytes())?;
            for (hash, entry) in &self.entries {
                file.write_all(&Self::encode_record(hash, entry))?;
            }
            file.flush()?;
        }
        std::fs::rename(&tmp, &self.path)?;
        Ok(())
    }

    /// Debug-friendly JSON view of the full cache content, hashes sorted.
    pub fn export_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|(hash, entry)| {
                serde_json::json!({
                    "content_hash": hash.to_hex(),
                    "mode": match entry.mode {
                        ComponentMode::Joint => "joint",
                        ComponentMode::ComponentMatched => "component-matched",
                    },
                    "joint": entry.descriptors[0],
                    "components": entry.descriptors[1..],
                })
            })
            .collect();
        serde_json::json!({
            "params_hash": self.params_hash.to_hex(),
            "radii": self.radii,
            "bands": self.bands,
            "entries": entries,
        })
    }

    fn header_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 + 32 + 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.params_hash.0);
        out.extend_from_slice(&self.radii.to_le_bytes());
        out.extend_from_slice(&self.bands.to_le_bytes());
        out
    }

    fn encode_record(hash: &ContentHash, entry: &CachedEntry) -> Vec<u8> {
        let matrix = entry.descriptors[0].len();
        let mut out = Vec::with_capacity(32 + 1 + 4 + entry.descriptors.len() * matrix * 8);
        out.extend_from_slice(&hash.0);
        out.push(match entry.mode {
            ComponentMode::Joint => 0,
            ComponentMode::ComponentMatched => 1,
        });
        out.extend_from_slice(&(entry.descriptors.len() as u32).to_le_bytes());
        for descriptor in &entry.descriptors {
            for &value in descriptor {
                out.extend_from_slice(&value.to_le_bytes());
            }
        }
        out
    }

    fn write_header_only(&self) -> Result<(), CacheError> {
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut file = File::create(&self.path)?;
        file.write_all(&self.header_bytes())?;
        file.flush()?;
        Ok(())
    }

    fn load(&mut self) -> Result<LoadReport, CacheError> {
        let mut bytes = Vec::new();
        File::open(&self.path)?.read_to_end(&mut bytes)?;
        let header_len = 4 + 4 + 32 + 4 + 4;
        if bytes.len() < header_len || &bytes[..4] != MAGIC {
            return Err(CacheError::BadMagic);
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(CacheError::UnsupportedVersion(version));
        }
        let mut found_hash = [0u8; 32];
        found_hash.copy_from_slice(&bytes[8..40]);
        if found_hash != self.params_hash.0 {
            return Err(CacheError::IncompatibleParams {
                expected: self.params_hash.to_hex(),
                found: ParamsHash(found_hash).to_hex(),
            });
        }
        let file_radii = u32::from_le_bytes(bytes[40..44].try_into().unwrap());
        let file_bands = u32::from_le_bytes(bytes[44..48].try_into().unwrap());
        if file_radii != self.radii || file_bands != self.bands {
            return Err(CacheError::GeometryMismatch {
                file_radii,
                file_bands,
                radii: self.radii,
                bands: self.bands,
            });
        }

        let matrix = (self.radii * self.bands) as usize;
        let mut offset = header_len;
        let mut entries = 0usize;
        loop {
            let remaining = bytes.len() - offset;
            if remaining == 0 {
                break;
            }
            if remaining < 32 + 1 + 4 {
                break; // partial trailing record
            }
            let mut hash = [0u8; 32];
            hash.copy_from_slice(&bytes[offset..offset + 32]);
            let mode = match bytes[offset + 32] {
                0 => ComponentMode::Joint,
                _ => ComponentMode::ComponentMatched,
            };
            let count =
                u32::from_le_bytes(bytes[offset + 33..offset + 37].try_into().unwrap()) as usize;
            let body = count * matrix * 8;
            if bytes.len() - (offset + 37) < body {
                break; // partial trailing record
            }
            let mut descriptors = Vec::with_capacity(count);
            let mut cursor = offset + 37;
            for _ in 0..count {
                let mut energies = Vec::with_capacity(matrix);
                for _ in 0..matrix {
                    energies.push(f64::from_le_bytes(
                        bytes[cursor..cursor + 8].try_into().unwrap(),
                    ));
                    cursor += 8;
                }
                descriptors.push(energies);
            }
            self.entries
                .insert(ContentHash(hash), CachedEntry { mode, descriptors });
            entries += 1;
            offset = cursor;
        }
        Ok(LoadReport {
            entries,
            truncated_bytes: bytes.len() - offset,
        })
    }
}
