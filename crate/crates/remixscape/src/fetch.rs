//! Remote mesh retrieval for corpora whose manifest rows point at http(s)
//! URLs.
//!
//! Every distinct URL is downloaded at most once into the cache directory,
//! keyed by the SHA-256 of the URL itself, so re-runs and manifests that
//! list one file under many ids reuse the bytes on disk without touching
//! the network. Downloads run on a bounded worker pool; a failing URL marks
//! the designs that reference it and never aborts the batch.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Corpus;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One design whose mesh could not be fetched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchFailure {
    pub id: String,
    pub url: String,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FetchReport {
    /// URLs actually transferred in this run.
    pub downloaded: usize,
    /// URLs served from the cache directory without network activity.
    pub reused: usize,
    /// Designs that already pointed at local files.
    pub local: usize,
    pub failures: Vec<FetchFailure>,
}

/// Largest accepted mesh body; anything bigger fails that design.
const MAX_BODY_BYTES: u64 = 256 * 1024 * 1024;

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

fn cached_path(cache_dir: &Path, url: &str) -> PathBuf {
    let digest = Sha256::digest(url.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    cache_dir.join(format!("{hex}.stl"))
}

fn download(agent: &ureq::Agent, url: &str, target: &Path) -> Result<(), String> {
    let response = agent.get(url).call().map_err(|e| e.to_string())?;
    let mut body = Vec::new();
    response
        .into_reader()
        .take(MAX_BODY_BYTES)
        .read_to_end(&mut body)
        .map_err(|e| e.to_string())?;
    let tmp = target.with_extension("part");
    std::fs::write(&tmp, &body).map_err(|e| e.to_string())?;
    std::fs::rename(&tmp, target).map_err(|e| e.to_string())?;
    Ok(())
}

/// Makes every design's mesh available locally, downloading URL entries
/// into `cache_dir` with at most `concurrency_limit` transfers in flight.
pub fn fetch_meshes(
    corpus: &mut Corpus,
    cache_dir: &Path,
    concurrency_limit: usize,
) -> Result<FetchReport, FetchError> {
    // Group remote designs by URL; local ones are already resolved.
    let mut ids_by_url: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut local = 0usize;
    for record in corpus.records() {
        if is_url(&record.mesh_ref) {
            ids_by_url
                .entry(record.mesh_ref.clone())
                .or_default()
                .push(record.id.clone());
        } else {
            local += 1;
        }
    }
    if ids_by_url.is_empty() {
        return Ok(FetchReport {
            local,
            ..FetchReport::default()
        });
    }

    std::fs::create_dir_all(cache_dir)?;
    let mut reused = 0usize;
    let mut queue: Vec<(String, PathBuf)> = Vec::new();
    let mut targets: BTreeMap<String, PathBuf> = BTreeMap::new();
    for url in ids_by_url.keys() {
        let target = cached_path(cache_dir, url);
        targets.insert(url.clone(), target.clone());
        if target.exists() {
            reused += 1;
        } else {
            queue.push((url.clone(), target));
        }
    }

    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_secs(60))
        .build();
    let work = Mutex::new(queue);
    let outcomes: Mutex<BTreeMap<String, Result<(), String>>> = Mutex::new(BTreeMap::new());
    let workers = concurrency_limit.max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let next = work.lock().unwrap().pop();
                let Some((url, target)) = next else { break };
                let result = download(&agent, &url, &target);
                outcomes.lock().unwrap().insert(url, result);
            });
        }
    });
    let outcomes = outcomes.into_inner().unwrap();
    let downloaded = outcomes.values().filter(|r| r.is_ok()).count();

    let mut failures = Vec::new();
    for (url, ids) in &ids_by_url {
        match outcomes.get(url) {
            None | Some(Ok(())) => {
                let target = targets[url].clone();
                for id in ids {
                    corpus.set_local_path(id, target.clone());
                }
            }
            Some(Err(cause)) => {
                for id in ids {
                    failures.push(FetchFailure {
                        id: id.clone(),
                        url: url.clone(),
                        cause: cause.clone(),
                    });
                }
            }
        }
    }
    failures.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(FetchReport {
        downloaded,
        reused,
        local,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{hours_after_epoch, DesignRecord};
    use crate::mesh::{write_stl, StlFormat};
    use crate::shapes;
    use std::io::Write;
    use std::net::TcpListener;

    /// Minimal HTTP/1.1 stub: serves `/mesh.stl` with STL bytes, 404
    /// elsewhere. Returns the bound address and a handle that stops after
    /// `max_requests` connections.
    fn stub_server(mesh_bytes: Vec<u8>, max_requests: usize) -> (String, std::thread::JoinHandle<usize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = format!("http://{}", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut served = 0usize;
            for _ in 0..max_requests {
                let Ok((mut stream, _)) = listener.accept() else { break };
                let mut buf = [0u8; 2048];
                let mut request = Vec::new();
                loop {
                    let n = stream.read(&mut buf).unwrap_or(0);
                    if n == 0 {
                        break;
                    }
                    request.extend_from_slice(&buf[..n]);
                    if request.windows(4).any(|w| w == b"\r\n\r\n") {
                        break;
                    }
                }
                let line = String::from_utf8_lossy(&request);
                let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
                if path == "/mesh.stl" {
                    let header = format!(
                        "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                        mesh_bytes.len()
                    );
                    let _ = stream.write_all(header.as_bytes());
                    let _ = stream.write_all(&mesh_bytes);
                    served += 1;
                } else {
                    let _ = stream.write_all(
                        b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n",
                    );
                }
            }
            served
        });
        (addr, handle)
    }

    fn remote_record(id: &str, url: &str, hour: i64) -> DesignRecord {
        DesignRecord {
            id: id.into(),
            timestamp: hours_after_epoch(hour),
            parents: vec![],
            popularity: 0,
            mesh_ref: url.into(),
        }
    }

    #[test]
    fn all_local_manifest_does_no_network_and_no_cache_writes() {
        let dir = tempfile::tempdir().unwrap();
        let record = DesignRecord {
            id: "a".into(),
            timestamp: hours_after_epoch(0),
            parents: vec![],
            popularity: 0,
            mesh_ref: "a.stl".into(),
        };
        let mut corpus = Corpus::from_records(vec![record], dir.path()).unwrap();
        let cache_dir = dir.path().join("never-created");
        let report = fetch_meshes(&mut corpus, &cache_dir, 4).unwrap();
        assert_eq!(report.local, 1);
        assert_eq!(report.downloaded, 0);
        assert!(!cache_dir.exists());
    }

    #[test]
    fn shared_urls_download_once_and_failures_are_per_design() {
        let mesh = write_stl(&shapes::tetrahedron(2.0), StlFormat::Binary);
        // 3 connections expected: mesh.stl once (shared), missing.stl once,
        // plus slack for the 404 probe.
        let (base, handle) = stub_server(mesh.clone(), 3);
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            remote_record("shared-1", &format!("{base}/mesh.stl"), 0),
            remote_record("shared-2", &format!("{base}/mesh.stl"), 1),
            remote_record("broken", &format!("{base}/missing.stl"), 2),
        ];
        let mut corpus = Corpus::from_records(records, dir.path()).unwrap();
        let cache_dir = dir.path().join("meshes");
        let report = fetch_meshes(&mut corpus, &cache_dir, 2).unwrap();

        assert_eq!(report.downloaded, 1);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].id, "broken");
        assert!(report.failures[0].url.ends_with("/missing.stl"));

        // Both sharing designs point at the same cached file.
        let p1 = corpus.local_path("shared-1").unwrap().to_path_buf();
        let p2 = corpus.local_path("shared-2").unwrap().to_path_buf();
        assert_eq!(p1, p2);
        assert_eq!(std::fs::read(&p1).unwrap(), mesh);
        assert!(corpus.local_path("broken").is_none());
        drop(handle);
    }

    #[test]
    fn cached_files_are_reused_without_network() {
        let mesh = write_stl(&shapes::tetrahedron(2.0), StlFormat::Binary);
        let dir = tempfile::tempdir().unwrap();
        let cache_dir = dir.path().join("meshes");
        std::fs::create_dir_all(&cache_dir).unwrap();
        // Pre-seed the cache under the URL-derived name; the server would
        // refuse every request (0 allowed), proving no network touch.
        let url = "http://127.0.0.1:9/mesh.stl"; // port 9: nothing listens
        std::fs::write(cached_path(&cache_dir, url), &mesh).unwrap();

        let records = vec![remote_record("a", url, 0)];
        let mut corpus = Corpus::from_records(records, dir.path()).unwrap();
        let report = fetch_meshes(&mut corpus, &cache_dir, 2).unwrap();
        assert_eq!(report.reused, 1);
        assert_eq!(report.downloaded, 0);
        assert!(report.failures.is_empty());
        assert!(corpus.local_path("a").is_some());
    }
}
