//! The design landscape: a 2D embedding of the corpus distance matrix with
//! popularity as elevation.
//!
//! Classical (Torgerson) multidimensional scaling double-centers the squared
//! distances and embeds with the top two eigenpairs; it reproduces the input
//! exactly when the distances are realizable in the plane. For distance
//! matrices that are not Euclidean (component-matched mode can produce
//! them), SMACOF stress majorization refines the classical start; its
//! stress never increases from one iterate to the next.
//!
//! Outputs follow a fixed convention so runs are byte-comparable: axes are
//! ordered by descending eigenvalue, and each axis is flipped so its
//! largest-magnitude coordinate is positive.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, ZTransform};
use crate::similarity::DistanceMatrix;

#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error("distance matrix must hold at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("matrix is not a distance matrix: {0}")]
    NotSymmetric(String),
    #[error("projection degenerate: eigenvalue {index} is negative ({value:.3e})")]
    ProjectionDegenerate { index: usize, value: f64 },
    #[error("embedding holds {embedding} points but the matrix holds {matrix}")]
    DimensionMismatch { embedding: usize, matrix: usize },
    #[error("unknown design `{0}`")]
    UnknownDesign(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MdsMethod {
    #[serde(rename = "classical")]
    Classical,
    #[serde(rename = "classical+smacof")]
    ClassicalSmacof,
}

/// A 2D embedding of named points.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding2D {
    ids: Vec<String>,
    points: Vec<[f64; 2]>,
    /// Normalized Kruskal stress-1 against the source distances.
    stress: f64,
    method: MdsMethod,
    /// The two eigenvalues kept by the classical solve.
    eigenvalues: [f64; 2],
}

impl Embedding2D {
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn stress(&self) -> f64 {
        self.stress
    }

    pub fn method(&self) -> MdsMethod {
        self.method
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Distance between two embedded points.
    pub fn embedded_distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.points[i], self.points[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    /// Metadata sidecar: stress, method, eigenvalues kept.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "stress": self.stress,
            "eigenvalues": self.eigenvalues,
            "points": self.ids.len(),
        })
    }
}

fn validate(dm: &DistanceMatrix) -> Result<(), LandscapeError> {
    let n = dm.len();
    if n < 3 {
        return Err(LandscapeError::TooFewPoints(n));
    }
    for i in 0..n {
        if dm.value(i, i) != 0.0 {
            return Err(LandscapeError::NotSymmetric(format!(
                "diagonal entry ({i},{i}) is {}",
                dm.value(i, i)
            )));
        }
        for j in (i + 1)..n {
            let (a, b) = (dm.value(i, j), dm.value(j, i));
            if (a - b).abs() > 1e-12 {
                return Err(LandscapeError::NotSymmetric(format!(
                    "entries ({i},{j})={a} and ({j},{i})={b} disagree"
                )));
            }
            if a < 0.0 || !a.is_finite() {
                return Err(LandscapeError::NotSymmetric(format!(
                    "entry ({i},{j})={a} is not a distance"
                )));
            }
        }
    }
    Ok(())
}

/// Kruskal stress-1: `sqrt(sum (dhat - d)^2 / sum d^2)` over unordered
/// pairs, where `d` are the input distances and `dhat` the embedded ones.
fn stress1(points: &[[f64; 2]], dm: &DistanceMatrix) -> f64 {
    let n = dm.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dm.value(i, j);
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            let dhat = (dx * dx + dy * dy).sqrt();
            num += (dhat - d) * (dhat - d);
            den += d * d;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Re-centers the points and applies the sign convention: per axis, the
/// largest-magnitude coordinate (first on ties) ends up positive.
fn canonicalize(points: &mut [[f64; 2]]) {
    let n = points.len() as f64;
    for axis in 0..2 {
        let mean: f64 = points.iter().map(|p| p[axis]).sum::<f64>() / n;
        for p in points.iter_mut() {
            p[axis] -= mean;
        }
        let mut extreme = 0usize;
        for (i, p) in points.iter().enumerate() {
            if p[axis].abs() > points[extreme][axis].abs() {
                extreme = i;
            }
        }
        if points[extreme][axis] < 0.0 {
            for p in points.iter_mut() {
                p[axis] = -p[axis];
            }
        }
    }
}

/// Classical (Torgerson) MDS to two dimensions.
///
/// Fails with [`LandscapeError::ProjectionDegenerate`] when either of the
/// two leading eigenvalues of the double-centered matrix is negative, which
/// means no two-dimensional Euclidean configuration fits even approximately.
pub fn classical_mds(dm: &DistanceMatrix) -> Result<Embedding2D, LandscapeError> {
    validate(dm)?;
    let n = dm.len();

    // B = -1/2 J D^2 J via row/column/grand means of D^2.
    let mut d2 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = dm.value(i, j);
            d2[(i, j)] = d * d;
        }
    }
    let row_means: Vec<f64> = (0..n).map(|i| d2.row(i).sum() / n as f64).collect();
    let grand = d2.sum() / (n * n) as f64;
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = -0.5 * (d2[(i, j)] - row_means[i] - row_means[j] + grand);
        }
    }

    let eigen = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| {
        eigen.eigenvalues[c]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&c))
    });
    let top = [order[0], order[1]];
    let eigenvalues = [eigen.eigenvalues[top[0]], eigen.eigenvalues[top[1]]];
    for (index, &value) in eigenvalues.iter().enumerate() {
        if value < 0.0 {
            return Err(LandscapeError::ProjectionDegenerate { index, value });
        }
    }

    let mut points = vec![[0.0; 2]; n];
    for (axis, &column) in top.iter().enumerate() {
        let scale = eigenvalues[axis].max(0.0).sqrt();
        for i in 0..n {
            points[i][axis] = eigen.eigenvectors[(i, column)] * scale;
        }
    }
    canonicalize(&mut points);
    let stress = stress1(&points, dm);
    Ok(Embedding2D {
        ids: dm.ids().to_vec(),
        points,
        stress,
        method: MdsMethod::Classical,
        eigenvalues,
    })
}

/// SMACOF refinement by stress majorization (Guttman transform), plus the
/// full stress trace for monotonicity checks.
pub fn smacof_refine_traced(
    dm: &DistanceMatrix,
    init: &Embedding2D,
    max_iter: usize,
    rel_tol: f64,
) -> Result<(Embedding2D, Vec<f64>), LandscapeError> {
    validate(dm)?;
    let n = dm.len();
    if init.len() != n {
        return Err(LandscapeError::DimensionMismatch {
            embedding: init.len(),
            matrix: n,
        });
    }

    let raw_stress = |points: &[[f64; 2]]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dm.value(i, j);
                let dx = points[i][0] - points[j][0];
                let dy = points[i][1] - points[j][1];
                let dhat = (dx * dx + dy * dy).sqrt();
                acc += (dhat - d) * (dhat - d);
            }
        }
        acc
    };

    let mut sum_d2 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum_d2 += dm.value(i, j) * dm.value(i, j);
        }
    }
    // Below this raw stress the configuration is an exact embedding up to
    // floating-point noise (stress-1 under 1e-12); iterating further only
    // chases rounding error.
    let floor = 1e-24 * sum_d2;

    let mut points = init.points().to_vec();
    let mut sigma = raw_stress(&points);
    let mut trace = vec![stress1(&points, dm)];
    for _ in 0..max_iter {
        if sigma <= floor {
            break;
        }
        // Guttman transform: X' = (1/n) B(X) X.
        let mut next = vec![[0.0; 2]; n];
        for i in 0..n {
            let mut row_sum = 0.0;
            let mut acc = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let dx = points[i][0] - points[j][0];
                let dy = points[i][1] - points[j][1];
                let dist = (dx * dx + dy * dy).sqrt();
                let b_ij = if dist > 0.0 { -dm.value(i, j) / dist } else { 0.0 };
                row_sum -= b_ij;
                acc[0] += b_ij * points[j][0];
                acc[1] += b_ij * points[j][1];
            }
            next[i][0] = (row_sum * points[i][0] + acc[0]) / n as f64;
            next[i][1] = (row_sum * points[i][1] + acc[1]) / n as f64;
        }
        let next_sigma = raw_stress(&next);
        points = next;
        trace.push(stress1(&points, dm));
        let drop = sigma - next_sigma;
        let done = drop < rel_tol * sigma;
        sigma = next_sigma;
        if done {
            break;
        }
    }

    canonicalize(&mut points);
    let stress = stress1(&points, dm);
    Ok((
        Embedding2D {
            ids: dm.ids().to_vec(),
            points,
            stress,
            method: MdsMethod::ClassicalSmacof,
            eigenvalues: init.eigenvalues,
        },
        trace,
    ))
}

/// SMACOF refinement with the default trace dropped.
pub fn smacof_refine(
    dm: &DistanceMatrix,
    init: &Embedding2D,
    max_iter: usize,
    rel_tol: f64,
) -> Result<Embedding2D, LandscapeError> {
    smacof_refine_traced(dm, init, max_iter, rel_tol).map(|(e, _)| e)
}

pub const SMACOF_DEFAULT_MAX_ITER: usize = 300;
pub const SMACOF_DEFAULT_REL_TOL: f64 = 1e-9;

/// One landscape row: a point with its popularity elevation.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeRow {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Attaches the popularity elevation to each embedded point, in embedding
/// (manifest) order.
pub fn emit_landscape(
    embedding: &Embedding2D,
    corpus: &Corpus,
    z_transform: ZTransform,
) -> Result<Vec<LandscapeRow>, LandscapeError> {
    let mut rows = Vec::with_capacity(embedding.len());
    for (id, point) in embedding.ids().iter().zip(embedding.points()) {
        let record = corpus
            .record(id)
            .ok_or_else(|| LandscapeError::UnknownDesign(id.clone()))?;
        rows.push(LandscapeRow {
            id: id.clone(),
            x: point[0],
            y: point[1],
            z: z_transform.apply(record.popularity),
        });
    }
    Ok(rows)
}

/// Landscape CSV with header `id,x,y,z`.
pub fn landscape_csv(rows: &[LandscapeRow]) -> String {
    let mut out = String::from("id,x,y,z\n");
    for row in rows {
        out.push_str(&format!("{},{},{},{}\n", row.id, row.x, row.y, row.z));
    }
    out
}
