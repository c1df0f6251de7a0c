//! Command-line pipeline driver: manifest in, reports and tables out.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use remixscape::cache::DescriptorCache;
use remixscape::corpus::{compute_descriptors, BatchOutcome, Corpus, DesignFailure, PipelineConfig};
use remixscape::fetch::fetch_meshes;
use remixscape::graph::{build_graph, CyclePolicy};
use remixscape::landscape::{
    classical_mds, emit_landscape, landscape_csv, smacof_refine, SMACOF_DEFAULT_MAX_ITER,
    SMACOF_DEFAULT_REL_TOL,
};
use remixscape::similarity::{
    distance_matrix, k_nearest, novelty_all, novelty_report_csv, TemporalFilter,
};

#[derive(Parser)]
#[command(
    name = "remixscape",
    version,
    about = "Shape-descriptor novelty, remix networks, and design landscapes for STL corpora",
    disable_help_subcommand = true
)]
struct Cli {
    /// JSON config file (descriptor parameters, mode, z_transform).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Descriptor cache file (default: <manifest>.cache).
    #[arg(long, global = true, value_name = "PATH")]
    cache: Option<PathBuf>,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a manifest and report corpus counts.
    Ingest { manifest: PathBuf },
    /// Download remote meshes into a local cache directory.
    Fetch {
        manifest: PathBuf,
        /// Directory for downloaded meshes.
        #[arg(long, value_name = "DIR", default_value = "mesh-cache")]
        cache_dir: PathBuf,
        /// Maximum transfers in flight.
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
    },
    /// Compute (and cache) shape descriptors for every design.
    Describe {
        manifest: PathBuf,
        /// Worker threads for descriptor computation.
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// Also export the cache content as JSON for debugging.
        #[arg(long, value_name = "PATH")]
        export_json: Option<PathBuf>,
    },
    /// Novelty of each design against strictly earlier designs (CSV).
    Novelty {
        manifest: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
    },
    /// Nearest neighbors of one design (CSV).
    Neighbors {
        manifest: PathBuf,
        id: String,
        /// How many neighbors to list.
        #[arg(short)]
        k: usize,
        /// `predecessors-only` or `all`.
        #[arg(long, default_value = "predecessors-only")]
        temporal_filter: String,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
    },
    /// Inheritance graph summary (JSON), optionally with an edge list CSV.
    Graph {
        manifest: PathBuf,
        /// Write the edge list CSV here.
        #[arg(long, value_name = "PATH")]
        edges: Option<PathBuf>,
        /// `error` (refuse cyclic input) or `break` (drop cycle edges).
        #[arg(long, default_value = "error")]
        cycle_policy: String,
    },
    /// Corpus statistics.
    Stat {
        #[command(subcommand)]
        which: StatCommand,
    },
    /// 2D MDS landscape with popularity elevation (CSV + JSON sidecar).
    Landscape {
        manifest: PathBuf,
        /// Refine the classical solution with SMACOF stress majorization.
        #[arg(long)]
        smacof: bool,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
    },
}

#[derive(Subcommand)]
enum StatCommand {
    /// Mann-Whitney test: are remixes more popular than originals?
    RemixInterest { manifest: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems exit 1; `--help`/`--version` exit 0.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(RunStatus::Clean) => ExitCode::SUCCESS,
        Ok(RunStatus::DataErrors) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

enum RunStatus {
    Clean,
    DataErrors,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    match &cli.config {
        Some(path) => PipelineConfig::from_json_file(path)
            .with_context(|| format!("reading config `{}`", path.display())),
        None => Ok(PipelineConfig::default()),
    }
}

fn load_corpus(manifest: &Path, config: PipelineConfig) -> Result<Corpus> {
    let mut corpus = Corpus::load_manifest(manifest)
        .with_context(|| format!("loading manifest `{}`", manifest.display()))?;
    corpus.set_config(config);
    Ok(corpus)
}

fn cache_path(cli: &Cli, manifest: &Path) -> PathBuf {
    cli.cache
        .clone()
        .unwrap_or_else(|| manifest.with_extension("cache"))
}

fn write_output(cli: &Cli, content: &str) -> Result<()> {
    match &cli.output {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing `{}`", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn progress(cli: &Cli, message: &str) {
    if !cli.quiet {
        eprintln!("{message}");
    }
}

fn report_failures(failures: &[DesignFailure]) {
    for failure in failures {
        eprintln!("design `{}` failed: {}", failure.id, failure.error);
    }
}

/// Loads the cache and computes any missing descriptors.
fn ensure_descriptors(
    cli: &Cli,
    corpus: &mut Corpus,
    manifest: &Path,
    parallelism: usize,
) -> Result<(Vec<DesignFailure>, DescriptorCache)> {
    let path = cache_path(cli, manifest);
    let config = corpus.config().clone();
    let (mut cache, report) = DescriptorCache::open(&path, &config.descriptor, config.mode)
        .with_context(|| format!("opening descriptor cache `{}`", path.display()))?;
    if report.truncated_bytes > 0 {
        progress(
            cli,
            &format!(
                "cache `{}`: dropped {} bytes of a partial trailing record",
                path.display(),
                report.truncated_bytes
            ),
        );
    }
    let before = cache.len();
    let BatchOutcome { failures, warnings } = compute_descriptors(corpus, &mut cache, parallelism)?;
    for warning in &warnings {
        eprintln!("design `{}`: {}", warning.id, warning.message);
    }
    progress(
        cli,
        &format!(
            "descriptors: {} cached, {} computed, {} failed",
            before,
            cache.len() - before,
            failures.len()
        ),
    );
    Ok((failures, cache))
}

fn parse_cycle_policy(s: &str) -> Result<CyclePolicy> {
    match s {
        "error" => Ok(CyclePolicy::Error),
        "break" => Ok(CyclePolicy::Break),
        other => bail!("unknown cycle policy `{other}` (expected `error` or `break`)"),
    }
}

fn run(cli: &Cli) -> Result<RunStatus> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Ingest { manifest } => {
            let corpus = load_corpus(manifest, config)?;
            let parent_links: usize = corpus.records().iter().map(|r| r.parents.len()).sum();
            let remote = corpus
                .records()
                .iter()
                .filter(|r| r.mesh_ref.starts_with("http://") || r.mesh_ref.starts_with("https://"))
                .count();
            let report = serde_json::json!({
                "designs": corpus.len(),
                "parent_links": parent_links,
                "remote_meshes": remote,
                "local_meshes": corpus.len() - remote,
            });
            write_output(cli, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(RunStatus::Clean)
        }
        Command::Fetch {
            manifest,
            cache_dir,
            concurrency,
        } => {
            let mut corpus = load_corpus(manifest, config)?;
            let report = fetch_meshes(&mut corpus, cache_dir, *concurrency)?;
            progress(
                cli,
                &format!(
                    "fetched {} URLs, reused {}, {} local meshes",
                    report.downloaded, report.reused, report.local
                ),
            );
            let json = serde_json::json!({
                "downloaded": report.downloaded,
                "reused": report.reused,
                "local": report.local,
                "failures": report.failures.iter().map(|f| {
                    serde_json::json!({"id": f.id, "url": f.url, "cause": f.cause})
                }).collect::<Vec<_>>(),
            });
            write_output(cli, &format!("{}\n", serde_json::to_string_pretty(&json)?))?;
            if report.failures.is_empty() {
                Ok(RunStatus::Clean)
            } else {
                for f in &report.failures {
                    eprintln!("design `{}` failed: {} ({})", f.id, f.cause, f.url);
                }
                Ok(RunStatus::DataErrors)
            }
        }
        Command::Describe {
            manifest,
            parallelism,
            export_json,
        } => {
            let mut corpus = load_corpus(manifest, config)?;
            let (failures, cache) = ensure_descriptors(cli, &mut corpus, manifest, *parallelism)?;
            if let Some(path) = export_json {
                std::fs::write(path, format!("{:#}\n", cache.export_json()))
                    .with_context(|| format!("writing `{}`", path.display()))?;
            }
            let json = serde_json::json!({
                "designs": corpus.len(),
                "described": corpus.described_ids().len(),
                "cache_entries": cache.len(),
                "params_hash": cache.params_hash().to_hex(),
                "failures": failures.iter().map(|f| {
                    serde_json::json!({"id": f.id, "error": f.error})
                }).collect::<Vec<_>>(),
            });
            write_output(cli, &format!("{}\n", serde_json::to_string_pretty(&json)?))?;
            if failures.is_empty() {
                Ok(RunStatus::Clean)
            } else {
                report_failures(&failures);
                Ok(RunStatus::DataErrors)
            }
        }
        Command::Novelty {
            manifest,
            parallelism,
        } => {
            let mut corpus = load_corpus(manifest, config)?;
            let (failures, _) = ensure_descriptors(cli, &mut corpus, manifest, *parallelism)?;
            let scores = novelty_all(&corpus)?;
            write_output(cli, &novelty_report_csv(&corpus, &scores))?;
            if failures.is_empty() {
                Ok(RunStatus::Clean)
            } else {
                report_failures(&failures);
                Ok(RunStatus::DataErrors)
            }
        }
        Command::Neighbors {
            manifest,
            id,
            k,
            temporal_filter,
            parallelism,
        } => {
            let filter = match temporal_filter.as_str() {
                "predecessors-only" => TemporalFilter::PredecessorsOnly,
                "all" => TemporalFilter::All,
                other => bail!("unknown temporal filter `{other}`"),
            };
            if *k == 0 {
                bail!("-k must be at least 1");
            }
            let mut corpus = load_corpus(manifest, config)?;
            let (failures, _) = ensure_descriptors(cli, &mut corpus, manifest, *parallelism)?;
            let neighbors = k_nearest(&corpus, id, *k, filter)?;
            let mut out = String::from("id,distance\n");
            for (other, d) in &neighbors {
                out.push_str(&format!("{other},{d}\n"));
            }
            write_output(cli, &out)?;
            if failures.is_empty() {
                Ok(RunStatus::Clean)
            } else {
                report_failures(&failures);
                Ok(RunStatus::DataErrors)
            }
        }
        Command::Graph {
            manifest,
            edges,
            cycle_policy,
        } => {
            let policy = parse_cycle_policy(cycle_policy)?;
            let corpus = load_corpus(manifest, config)?;
            let graph = build_graph(corpus.records().to_vec(), policy)?;
            for (child, parent) in graph.removed_edges() {
                progress(cli, &format!("cycle broken: removed edge {child} -> {parent}"));
            }
            for (child, parent) in graph.time_violations() {
                progress(cli, &format!("edge {child} -> {parent}: child is older than parent"));
            }
            if let Some(path) = edges {
                std::fs::write(path, graph.edge_list_csv())
                    .with_context(|| format!("writing `{}`", path.display()))?;
            }
            let summary = graph.summary();
            write_output(cli, &format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
            Ok(RunStatus::Clean)
        }
        Command::Stat { which } => match which {
            StatCommand::RemixInterest { manifest } => {
                let corpus = load_corpus(manifest, config)?;
                let graph = build_graph(corpus.records().to_vec(), CyclePolicy::Error)?;
                let stat = graph.remix_interest_stat()?;
                write_output(cli, &format!("{}\n", serde_json::to_string_pretty(&stat)?))?;
                Ok(RunStatus::Clean)
            }
        },
        Command::Landscape {
            manifest,
            smacof,
            parallelism,
        } => {
            let output = cli
                .output
                .as_ref()
                .ok_or_else(|| anyhow!("landscape requires --output (it also writes a .meta.json sidecar)"))?
                .clone();
            let mut corpus = load_corpus(manifest, config)?;
            let (failures, _) = ensure_descriptors(cli, &mut corpus, manifest, *parallelism)?;
            let described: Vec<String> = corpus
                .described_ids()
                .into_iter()
                .map(str::to_string)
                .collect();
            let matrix = distance_matrix(&corpus, Some(&described))?;
            let mut embedding = classical_mds(&matrix)?;
            if *smacof {
                embedding = smacof_refine(
                    &matrix,
                    &embedding,
                    SMACOF_DEFAULT_MAX_ITER,
                    SMACOF_DEFAULT_REL_TOL,
                )?;
            }
            let rows = emit_landscape(&embedding, &corpus, corpus.config().z_transform)?;
            std::fs::write(&output, landscape_csv(&rows))
                .with_context(|| format!("writing `{}`", output.display()))?;
            let sidecar = output.with_extension(format!(
                "{}meta.json",
                output
                    .extension()
                    .map(|e| format!("{}.", e.to_string_lossy()))
                    .unwrap_or_default()
            ));
            std::fs::write(&sidecar, format!("{:#}\n", embedding.metadata_json()))
                .with_context(|| format!("writing `{}`", sidecar.display()))?;
            progress(
                cli,
                &format!(
                    "landscape: {} points, stress {:.6}",
                    embedding.len(),
                    embedding.stress()
                ),
            );
            if failures.is_empty() {
                Ok(RunStatus::Clean)
            } else {
                report_failures(&failures);
                Ok(RunStatus::DataErrors)
            }
        }
    }
}
