//! STL reading and writing.
//!
//! Binary layout: 80-byte header (ignored), little-endian `u32` triangle
//! count, then 50-byte records (12 LE `f32`s: normal plus three vertices,
//! followed by a 2-byte attribute, ignored). ASCII grammar:
//!
//! ```text
//! solid [name]
//!   facet normal nx ny nz
//!     outer loop
//!       vertex x y z   (three times)
//!     endloop
//!   endfacet           (zero or more facets)
//! endsolid [name]
//! ```

use std::collections::HashMap;

use nalgebra::Point3;

use super::{exact_key, MeshError, StlFormat, TriangleMesh};

const HEADER_LEN: usize = 80;
const RECORD_LEN: usize = 50;

/// Decides which STL encoding a byte buffer holds.
///
/// ASCII wins iff the content starts (after whitespace) with `solid` and the
/// whole buffer parses under the ASCII grammar. Otherwise the buffer is
/// binary iff its length equals `84 + 50 * n` for the declared triangle
/// count `n`. Files that satisfy neither check are rejected, never guessed.
pub fn detect_format(bytes: &[u8]) -> Result<StlFormat, MeshError> {
    if looks_ascii(bytes) && parse_ascii_facets(bytes).is_ok() {
        return Ok(StlFormat::Ascii);
    }
    if binary_length_consistent(bytes) {
        return Ok(StlFormat::Binary);
    }
    Err(MeshError::UnrecognizedFormat)
}

fn looks_ascii(bytes: &[u8]) -> bool {
    let trimmed = skip_leading_whitespace(bytes);
    trimmed.starts_with(b"solid")
}

fn skip_leading_whitespace(bytes: &[u8]) -> &[u8] {
    let start = bytes
        .iter()
        .position(|b| !b.is_ascii_whitespace())
        .unwrap_or(bytes.len());
    &bytes[start..]
}

fn binary_length_consistent(bytes: &[u8]) -> bool {
    if bytes.len() < HEADER_LEN + 4 {
        return false;
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap());
    declared_binary_len(count) == Some(bytes.len())
}

fn declared_binary_len(count: u32) -> Option<usize> {
    (count as usize)
        .checked_mul(RECORD_LEN)
        .and_then(|body| body.checked_add(HEADER_LEN + 4))
}

/// Parses either STL encoding into a cleaned mesh.
///
/// Vertices are deduplicated by exact coordinate equality and zero-area
/// triangles (repeated vertex index after deduplication) are dropped; the
/// drop count is kept on the mesh. Triangle order is otherwise preserved.
pub fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh, MeshError> {
    if looks_ascii(bytes) {
        match parse_ascii_facets(bytes) {
            Ok(facets) => return build_mesh(facets, StlFormat::Ascii),
            // A `solid` prefix on a binary file is legal; fall through when
            // the length checks out, otherwise the grammar error is the
            // most useful diagnosis.
            Err(syntax) => {
                if binary_length_consistent(bytes) {
                    return build_mesh(parse_binary_facets(bytes)?, StlFormat::Binary);
                }
                return Err(syntax);
            }
        }
    }
    if bytes.len() >= HEADER_LEN + 4 {
        return build_mesh(parse_binary_facets(bytes)?, StlFormat::Binary);
    }
    Err(MeshError::UnrecognizedFormat)
}

type Facet = [Point3<f64>; 3];

fn build_mesh(facets: Vec<Facet>, format: StlFormat) -> Result<TriangleMesh, MeshError> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut index_of: HashMap<[u64; 3], u32> = HashMap::new();
    let mut triangles: Vec<[u32; 3]> = Vec::with_capacity(facets.len());
    let mut dropped = 0u32;

    for facet in facets {
        let mut tri = [0u32; 3];
        for (slot, corner) in tri.iter_mut().zip(facet.iter()) {
            let next = vertices.len() as u32;
            *slot = *index_of.entry(exact_key(corner)).or_insert_with(|| {
                vertices.push(*corner);
                next
            });
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            dropped += 1;
            continue;
        }
        triangles.push(tri);
    }

    if triangles.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    Ok(TriangleMesh::from_parts(
        vertices, triangles, format, dropped,
    ))
}

fn parse_binary_facets(bytes: &[u8]) -> Result<Vec<Facet>, MeshError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(MeshError::TruncatedFile {
            expected: HEADER_LEN + 4,
            actual: bytes.len(),
        });
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap());
    let expected = declared_binary_len(count).ok_or(MeshError::TruncatedFile {
        expected: usize::MAX,
        actual: bytes.len(),
    })?;
    if bytes.len() != expected {
        return Err(MeshError::TruncatedFile {
            expected,
            actual: bytes.len(),
        });
    }

    let mut facets = Vec::with_capacity(count as usize);
    let mut offset = HEADER_LEN + 4;
    for _ in 0..count {
        let record = &bytes[offset..offset + RECORD_LEN];
        let f = |i: usize| {
            f32::from_le_bytes(record[i * 4..i * 4 + 4].try_into().unwrap()) as f64
        };
        // Floats 0..2 are the stored normal; it is recomputable, so skip it.
        let corner = |i: usize| {
            let base = 3 + i * 3;
            Point3::new(f(base), f(base + 1), f(base + 2))
        };
        let facet = [corner(0), corner(1), corner(2)];
        for p in &facet {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(MeshError::NonFiniteCoordinate {
                    vertex: facets.len() * 3,
                });
            }
        }
        facets.push(facet);
        offset += RECORD_LEN;
    }
    Ok(facets)
}

struct AsciiCursor<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line_no: usize,
}

impl<'a> AsciiCursor<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
            line_no: 0,
        }
    }

    /// Next non-blank line, tokenized on whitespace.
    fn next_tokens(&mut self) -> Option<Vec<&'a str>> {
        loop {
            let (idx, line) = self.lines.next()?;
            self.line_no = idx + 1;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some(tokens);
            }
        }
    }

    fn err(&self, message: impl Into<String>) -> MeshError {
        MeshError::Syntax {
            line: self.line_no,
            message: message.into(),
        }
    }
}

fn parse_ascii_facets(bytes: &[u8]) -> Result<Vec<Facet>, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::Syntax {
        line: 0,
        message: format!("not valid UTF-8: {e}"),
    })?;
    let mut cursor = AsciiCursor::new(text);

    let opening = cursor
        .next_tokens()
        .ok_or_else(|| cursor.err("empty file"))?;
    if opening[0] != "solid" {
        return Err(cursor.err("expected `solid`"));
    }

    let mut facets = Vec::new();
    loop {
        let tokens = cursor
            .next_tokens()
            .ok_or_else(|| cursor.err("missing `endsolid`"))?;
        match tokens[0] {
            "endsolid" => break,
            "facet" => {
                if tokens.len() != 5 || tokens[1] != "normal" {
                    return Err(cursor.err("expected `facet normal nx ny nz`"));
                }
                // The stated normal is ignored but must still be numeric.
                for t in &tokens[2..5] {
                    parse_float(t).map_err(|m| cursor.err(m))?;
                }
                let loop_line = cursor
                    .next_tokens()
                    .ok_or_else(|| cursor.err("missing `outer loop`"))?;
                if loop_line != ["outer", "loop"] {
                    return Err(cursor.err("expected `outer loop`"));
                }
                let mut corners = [Point3::origin(); 3];
                for corner in &mut corners {
                    let v = cursor
                        .next_tokens()
                        .ok_or_else(|| cursor.err("missing `vertex`"))?;
                    if v.len() != 4 || v[0] != "vertex" {
                        return Err(cursor.err("expected `vertex x y z`"));
                    }
                    let x = parse_float(v[1]).map_err(|m| cursor.err(m))?;
                    let y = parse_float(v[2]).map_err(|m| cursor.err(m))?;
                    let z = parse_float(v[3]).map_err(|m| cursor.err(m))?;
                    *corner = Point3::new(x, y, z);
                }
                let end_loop = cursor
                    .next_tokens()
                    .ok_or_else(|| cursor.err("missing `endloop`"))?;
                if end_loop != ["endloop"] {
                    return Err(cursor.err("expected `endloop`"));
                }
                let end_facet = cursor
                    .next_tokens()
                    .ok_or_else(|| cursor.err("missing `endfacet`"))?;
                if end_facet != ["endfacet"] {
                    return Err(cursor.err("expected `endfacet`"));
                }
                facets.push(corners);
            }
            other => {
                return Err(cursor.err(format!("unexpected token `{other}`")));
            }
        }
    }

    if let Some(trailing) = cursor.next_tokens() {
        return Err(cursor.err(format!("content after `endsolid`: `{}`", trailing[0])));
    }
    Ok(facets)
}

fn parse_float(token: &str) -> Result<f64, String> {
    let value: f64 = token
        .parse()
        .map_err(|_| format!("`{token}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{token}` is not finite"));
    }
    Ok(value)
}

/// Serializes a mesh to the requested STL encoding.
///
/// Binary output is exactly `84 + 50 * n` bytes and stores coordinates as
/// `f32`; ASCII output prints the shortest decimal form that round-trips
/// `f64` exactly. Stored normals are recomputed from the triangle winding.
pub fn write_stl(mesh: &TriangleMesh, format: StlFormat) -> Vec<u8> {
    match format {
        StlFormat::Binary => write_binary(mesh),
        StlFormat::Ascii => write_ascii(mesh).into_bytes(),
    }
}

fn facet_normal(points: &[Point3<f64>; 3]) -> [f64; 3] {
    let n = (points[1] - points[0]).cross(&(points[2] - points[0]));
    let len = n.norm();
    if len > 0.0 {
        [n.x / len, n.y / len, n.z / len]
    } else {
        [0.0, 0.0, 0.0]
    }
}

fn write_binary(mesh: &TriangleMesh) -> Vec<u8> {
    let count = mesh.triangle_count() as u32;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + RECORD_LEN * count as usize);
    let mut header = [0u8; HEADER_LEN];
    let tag = b"binary stl";
    header[..tag.len()].copy_from_slice(tag);
    out.extend_from_slice(&header);
    out.extend_from_slice(&count.to_le_bytes());
    for i in 0..mesh.triangle_count() {
        let points = mesh.triangle_points(i);
        let normal = facet_normal(&points);
        for x in normal {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
        for p in &points {
            out.extend_from_slice(&(p.x as f32).to_le_bytes());
            out.extend_from_slice(&(p.y as f32).to_le_bytes());
            out.extend_from_slice(&(p.z as f32).to_le_bytes());
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

fn write_ascii(mesh: &TriangleMesh) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    out.push_str("solid mesh\n");
    for i in 0..mesh.triangle_count() {
        let points = mesh.triangle_points(i);
        let [nx, ny, nz] = facet_normal(&points);
        writeln!(out, "  facet normal {nx} {ny} {nz}").unwrap();
        out.push_str("    outer loop\n");
        for p in &points {
            writeln!(out, "      vertex {} {} {}", p.x, p.y, p.z).unwrap();
        }
        out.push_str("    endloop\n");
        out.push_str("  endfacet\n");
    }
    out.push_str("endsolid mesh\n");
    out
}
