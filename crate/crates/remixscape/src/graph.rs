//! The design inheritance network: who remixed whom.
//!
//! Records carry parent links; edges run from a remix (child) to each design
//! it derives from (parent). Parents missing from the record set become
//! dangling references rather than edges, and the validated graph is always
//! acyclic: a cycle either aborts the build or is broken edge by edge,
//! depending on policy.

use std::collections::{HashMap, HashSet};

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::stats::{mann_whitney_one_sided, PValueMethod, StatsError};

/// One design's metadata, as ingested from a corpus manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRecord {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub parents: Vec<String>,
    pub popularity: u64,
    /// Path or URL of the design's mesh file.
    pub mesh_ref: String,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("duplicate design id `{0}`")]
    DuplicateId(String),
    #[error("design `{0}` lists itself as a parent")]
    SelfParent(String),
    #[error("design `{child}` lists parent `{parent}` twice")]
    DuplicateParent { child: String, parent: String },
    #[error("inheritance cycle detected: {}", cycle.join(" -> "))]
    CycleDetected { cycle: Vec<String> },
    #[error("unknown design `{0}`")]
    UnknownDesign(String),
    #[error("cannot compare remixes with originals: {0}")]
    DegenerateGroups(#[from] StatsError),
}

/// What to do when parent links form a cycle (corrupt data).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CyclePolicy {
    /// Refuse the input, reporting one full cycle.
    Error,
    /// Open every cycle by removing the edge whose child has the earliest
    /// timestamp (ties by id), logging each removal.
    Break,
}

/// Validated, acyclic inheritance graph.
#[derive(Debug, Clone)]
pub struct InheritanceGraph {
    records: Vec<DesignRecord>,
    id_index: HashMap<String, usize>,
    /// `parent_edges[child]` lists parent node indices (in-graph only).
    parent_edges: Vec<Vec<usize>>,
    /// `child_edges[parent]` lists child node indices.
    child_edges: Vec<Vec<usize>>,
    /// `(child id, missing parent id)` pairs whose parent is absent.
    dangling: Vec<(String, String)>,
    /// Edges removed under [`CyclePolicy::Break`], as `(child, parent)`.
    removed_edges: Vec<(String, String)>,
    /// Edges whose child is older than its parent (kept, but reported).
    time_violations: Vec<(String, String)>,
}

/// Builds the inheritance graph from design records.
pub fn build_graph(
    records: Vec<DesignRecord>,
    cycle_policy: CyclePolicy,
) -> Result<InheritanceGraph, GraphError> {
    let mut id_index = HashMap::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        if id_index.insert(record.id.clone(), i).is_some() {
            return Err(GraphError::DuplicateId(record.id.clone()));
        }
    }
    let mut parent_edges: Vec<Vec<usize>> = vec![Vec::new(); records.len()];
    let mut dangling = Vec::new();
    let mut time_violations = Vec::new();
    for (child, record) in records.iter().enumerate() {
        let mut seen = HashSet::new();
        for parent_id in &record.parents {
            if parent_id == &record.id {
                return Err(GraphError::SelfParent(record.id.clone()));
            }
            if !seen.insert(parent_id) {
                return Err(GraphError::DuplicateParent {
                    child: record.id.clone(),
                    parent: parent_id.clone(),
                });
            }
            match id_index.get(parent_id) {
                Some(&parent) => {
                    parent_edges[child].push(parent);
                    if record.timestamp < records[parent].timestamp {
                        time_violations.push((record.id.clone(), parent_id.clone()));
                    }
                }
                None => dangling.push((record.id.clone(), parent_id.clone())),
            }
        }
    }

    let mut removed_edges = Vec::new();
    loop {
        match find_cycle(&parent_edges) {
            None => break,
            Some(cycle_nodes) => match cycle_policy {
                CyclePolicy::Error => {
                    let mut cycle: Vec<String> =
                        cycle_nodes.iter().map(|&i| records[i].id.clone()).collect();
                    // Close the loop for readability.
                    cycle.push(records[cycle_nodes[0]].id.clone());
                    return Err(GraphError::CycleDetected { cycle });
                }
                CyclePolicy::Break => {
                    // Cycle edges are child -> parent consecutive pairs; drop
                    // the one whose child is earliest.
                    let chosen = cycle_nodes
                        .iter()
                        .enumerate()
                        .min_by_key(|&(_, &node)| (records[node].timestamp, &records[node].id))
                        .map(|(pos, _)| pos)
                        .unwrap();
                    let child = cycle_nodes[chosen];
                    let parent = cycle_nodes[(chosen + 1) % cycle_nodes.len()];
                    parent_edges[child].retain(|&p| p != parent);
                    removed_edges.push((records[child].id.clone(), records[parent].id.clone()));
                }
            },
        }
    }

    let mut child_edges: Vec<Vec<usize>> = vec![Vec::new(); records.len()];
    for (child, parents) in parent_edges.iter().enumerate() {
        for &parent in parents {
            child_edges[parent].push(child);
        }
    }
    Ok(InheritanceGraph {
        records,
        id_index,
        parent_edges,
        child_edges,
        dangling,
        removed_edges,
        time_violations,
    })
}

/// Iterative three-color DFS; returns the node sequence of one directed
/// cycle (`v0 -> v1 -> ... -> v0` along child-to-parent edges) if any.
fn find_cycle(parent_edges: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let n = parent_edges.len();
    let mut color = vec![Color::White; n];
    let mut stack_path: Vec<usize> = Vec::new();

    for start in 0..n {
        if color[start] != Color::White {
            continue;
        }
        // Each frame is (node, next edge index to explore).
        let mut frames: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = Color::Gray;
        stack_path.push(start);
        while let Some(&mut (node, ref mut edge)) = frames.last_mut() {
            if *edge < parent_edges[node].len() {
                let next = parent_edges[node][*edge];
                *edge += 1;
                match color[next] {
                    Color::White => {
                        color[next] = Color::Gray;
                        stack_path.push(next);
                        frames.push((next, 0));
                    }
                    Color::Gray => {
                        let from = stack_path.iter().position(|&v| v == next).unwrap();
                        return Some(stack_path[from..].to_vec());
                    }
                    Color::Black => {}
                }
            } else {
                color[node] = Color::Black;
                stack_path.pop();
                frames.pop();
            }
        }
    }
    None
}

/// Summary counters, serialized with exactly these field names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphSummary {
    pub node_count: usize,
    pub edge_count: usize,
    pub root_count: usize,
    pub max_depth: usize,
    pub dangling_count: usize,
    pub component_count: usize,
}

/// Remix-versus-original popularity comparison, serialized with exactly
/// these field names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemixInterestStat {
    pub n_remix: usize,
    pub n_original: usize,
    #[serde(rename = "U")]
    pub u: f64,
    pub p_one_sided: f64,
    pub rank_biserial: f64,
    #[serde(skip)]
    pub method: PValueMethod,
}

impl InheritanceGraph {
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

    pub fn dangling(&self) -> &[(String, String)] {
        &self.dangling
    }

    pub fn removed_edges(&self) -> &[(String, String)] {
        &self.removed_edges
    }

    pub fn time_violations(&self) -> &[(String, String)] {
        &self.time_violations
    }

    fn index_of(&self, id: &str) -> Result<usize, GraphError> {
        self.id_index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownDesign(id.to_string()))
    }

    /// Length of the longest path from `id` to any root, following
    /// child-to-parent edges. Roots (no in-graph parents) have depth 0.
    pub fn remix_depth(&self, id: &str) -> Result<usize, GraphError> {
        let target = self.index_of(id)?;
        Ok(self.all_depths()[target])
    }

    /// Longest-path depth for every node, computed by dynamic programming
    /// over a topological order.
    pub fn all_depths(&self) -> Vec<usize> {
        let n = self.records.len();
        let order = self.topological_order();
        let mut depth = vec![0usize; n];
        for &node in &order {
            for &parent in &self.parent_edges[node] {
                depth[node] = depth[node].max(depth[parent] + 1);
            }
        }
        depth
    }

    /// Nodes ordered parents-before-children; the graph is acyclic by
    /// construction.
    fn topological_order(&self) -> Vec<usize> {
        let n = self.records.len();
        let mut remaining: Vec<usize> = self.parent_edges.iter().map(Vec::len).collect();
        let mut ready: Vec<usize> = (0..n).filter(|&i| remaining[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(node) = ready.pop() {
            order.push(node);
            for &child in &self.child_edges[node] {
                remaining[child] -= 1;
                if remaining[child] == 0 {
                    ready.push(child);
                }
            }
        }
        debug_assert_eq!(order.len(), n, "graph contained a cycle");
        order
    }

    /// Number of distinct designs that transitively remix `id` (excluding
    /// `id` itself).
    pub fn descendant_count(&self, id: &str) -> Result<usize, GraphError> {
        let start = self.index_of(id)?;
        let mut seen = vec![false; self.records.len()];
        seen[start] = true;
        let mut stack = vec![start];
        let mut count = 0usize;
        while let Some(node) = stack.pop() {
            for &child in &self.child_edges[node] {
                if !seen[child] {
                    seen[child] = true;
                    count += 1;
                    stack.push(child);
                }
            }
        }
        Ok(count)
    }

    /// Mann-Whitney comparison of popularity between remixes (designs whose
    /// record lists at least one parent, dangling or not) and originals,
    /// one-sided alternative "remixes are more popular".
    pub fn remix_interest_stat(&self) -> Result<RemixInterestStat, GraphError> {
        let mut remix = Vec::new();
        let mut original = Vec::new();
        for record in &self.records {
            let popularity = record.popularity as f64;
            if record.parents.is_empty() {
                original.push(popularity);
            } else {
                remix.push(popularity);
            }
        }
        let result = mann_whitney_one_sided(&remix, &original)?;
        Ok(RemixInterestStat {
            n_remix: remix.len(),
            n_original: original.len(),
            u: result.u,
            p_one_sided: result.p_one_sided,
            rank_biserial: result.rank_biserial,
            method: result.method,
        })
    }

    /// Connected components of the undirected projection (isolated nodes
    /// count as components of their own).
    fn undirected_component_count(&self) -> usize {
        let n = self.records.len();
        let mut seen = vec![false; n];
        let mut components = 0usize;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(node) = stack.pop() {
                for &next in self.parent_edges[node].iter().chain(&self.child_edges[node]) {
                    if !seen[next] {
                        seen[next] = true;
                        stack.push(next);
                    }
                }
            }
        }
        components
    }

    pub fn summary(&self) -> GraphSummary {
        let edge_count = self.parent_edges.iter().map(Vec::len).sum();
        let root_count = self.parent_edges.iter().filter(|p| p.is_empty()).count();
        let max_depth = self.all_depths().into_iter().max().unwrap_or(0);
        GraphSummary {
            node_count: self.records.len(),
            edge_count,
            root_count: if self.records.is_empty() { 0 } else { root_count },
            max_depth,
            dangling_count: self.dangling.len(),
            component_count: self.undirected_component_count(),
        }
    }

    /// Edge list as CSV with header `child_id,parent_id`, in record order.
    pub fn edge_list_csv(&self) -> String {
        let mut out = String::from("child_id,parent_id\n");
        for (child, parents) in self.parent_edges.iter().enumerate() {
            for &parent in parents {
                out.push_str(&self.records[child].id);
                out.push(',');
                out.push_str(&self.records[parent].id);
                out.push('\n');
            }
        }
        out
    }
}

/// Builds a record without mesh data; tests and examples use this.
pub fn record(
    id: &str,
    timestamp: DateTime<Utc>,
    parents: &[&str],
    popularity: u64,
) -> DesignRecord {
    DesignRecord {
        id: id.to_string(),
        timestamp,
        parents: parents.iter().map(|p| p.to_string()).collect(),
        popularity,
        mesh_ref: String::new(),
    }
}

/// Deterministic timestamp helper: `hours` hours after a fixed epoch.
pub fn hours_after_epoch(hours: i64) -> DateTime<Utc> {
    DateTime::<Utc>::from_timestamp(1_600_000_000 + hours * 3600, 0).unwrap()
}
