//! Minimal Wavefront OBJ reader: vertex positions and faces only.

use crate::geometry::{Triangle, TriangleMesh, Vec3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {kind}")]
pub struct ObjError {
    pub line: usize,
    pub kind: ObjErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjErrorKind {
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("vertex needs three coordinates")]
    ShortVertex,
    #[error("vertex coordinate is not finite")]
    NonFiniteVertex,
    #[error("face needs at least three indices, got {0}")]
    ShortFace(usize),
    #[error("face index {index} out of range for {vertex_count} vertices")]
    IndexOutOfRange { index: i64, vertex_count: usize },
    #[error("too many vertices")]
    TooManyVertices,
}

/// Parses `v` and `f` statements; everything else is ignored.
///
/// Faces are fanned around their first vertex, so a quad `i j k l` becomes
/// `(i, j, k)` and `(i, k, l)`. Negative indices count back from the last
/// vertex defined so far. Triangles with a repeated vertex are dropped.
pub fn parse_obj(text: &str) -> Result<TriangleMesh, ObjError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut face = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |kind| ObjError { line, kind };
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = tokens.next().ok_or(err(ObjErrorKind::ShortVertex))?;
                    *slot = tok
                        .parse::<f64>()
                        .map_err(|_| err(ObjErrorKind::BadNumber(tok.to_string())))?;
                }
                let v = Vec3::new(c[0], c[1], c[2]);
                if !v.is_finite() {
                    return Err(err(ObjErrorKind::NonFiniteVertex));
                }
                if vertices.len() >= u32::MAX as usize {
                    return Err(err(ObjErrorKind::TooManyVertices));
                }
                vertices.push(v);
            }
            Some("f") => {
                face.clear();
                for tok in tokens {
                    let index_text = tok.split('/').next().unwrap_or("");
                    let index: i64 = index_text
                        .parse()
                        .map_err(|_| err(ObjErrorKind::BadNumber(tok.to_string())))?;
                    let n = vertices.len() as i64;
                    let resolved = if index < 0 { n + index } else { index - 1 };
                    if index == 0 || !(0..n).contains(&resolved) {
                        return Err(err(ObjErrorKind::IndexOutOfRange {
                            index,
                            vertex_count: vertices.len(),
                        }));
                    }
                    face.push(resolved as u32);
                }
                if face.len() < 3 {
                    return Err(err(ObjErrorKind::ShortFace(face.len())));
                }
                for k in 1..face.len() - 1 {
                    let (a, b, c) = (face[0], face[k], face[k + 1]);
                    if a != b && b != c && a != c {
                        triangles.push(Triangle::new(a, b, c));
                    }
                }
            }
            _ => {}
        }
    }
    Ok(TriangleMesh::new(vertices, triangles))
}
