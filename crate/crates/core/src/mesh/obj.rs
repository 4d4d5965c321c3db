use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::{ControlMesh, Vec3};
use crate::error::{Error, Result};

/// Read a triangle mesh from Wavefront OBJ text.
///
/// Only `v` and `f` records are interpreted; texture and normal indices in
/// face records (`f 1/2/3 ...`) are ignored. Negative (relative) indices
/// are supported. Faces with more than three vertices are rejected.
pub fn read_obj<R: Read>(reader: R) -> Result<ControlMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let parse_err = |msg: String| Error::Parse { line: lineno, msg };
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut p = [0.0; 3];
                for x in p.iter_mut() {
                    let t = tok.next().ok_or_else(|| parse_err("vertex needs 3 coordinates".into()))?;
                    *x = t.parse().map_err(|_| parse_err(format!("bad coordinate `{t}`")))?;
                }
                vertices.push(Vec3::new(p[0], p[1], p[2]));
            }
            Some("f") => {
                let idx: Vec<&str> = tok.collect();
                if idx.len() != 3 {
                    return Err(parse_err(format!(
                        "face has {} vertices; only triangles are supported",
                        idx.len()
                    )));
                }
                let mut t = [0usize; 3];
                for (k, s) in idx.iter().enumerate() {
                    let head = s.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| parse_err(format!("bad index `{s}`")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(parse_err("index 0 is invalid in OBJ".into()));
                    };
                    if resolved < 0 {
                        return Err(parse_err(format!("index {i} out of range")));
                    }
                    t[k] = resolved as usize;
                }
                faces.push(t);
            }
            _ => {}
        }
    }
    ControlMesh::new(vertices, faces)
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<ControlMesh> {
    read_obj(fs::File::open(path)?)
}

/// OBJ text with round-trip precision.
pub fn write_obj(mesh: &ControlMesh) -> String {
    let mut s = String::with_capacity(mesh.num_vertices() * 80 + mesh.num_faces() * 24);
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn save_obj(mesh: &ControlMesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_obj(mesh))?;
    Ok(())
}
