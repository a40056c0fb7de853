//! Minimal Wavefront OBJ reader/writer for closed triangle meshes.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Mesh, MeshError, Result, Vec3};

pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = fs::read_to_string(path)?;
    parse_obj(&text)
}

/// Parses `v` and triangular `f` records. Texture/normal references in face
/// tokens (`1/2/3`) are ignored; negative indices are resolved relative to
/// the vertices read so far.
pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Parse { line, message: format!("bad vertex coordinate: {e}") })?;
                if coords.len() < 3 || coords.len() > 4 {
                    return Err(MeshError::Parse {
                        line,
                        message: format!("vertex record needs 3 coordinates, found {}", coords.len()),
                    });
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(MeshError::NonTriangle { line, count: refs.len() });
                }
                let mut face = [0usize; 3];
                for (slot, r) in refs.iter().enumerate() {
                    let idx = r.split('/').next().unwrap_or("");
                    let i: i64 = idx
                        .parse()
                        .map_err(|_| MeshError::Parse { line, message: format!("bad face index '{r}'") })?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        -1
                    };
                    if resolved < 0 {
                        return Err(MeshError::Parse { line, message: format!("face index '{r}' out of range") });
                    }
                    face[slot] = resolved as usize;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    Mesh::new(vertices, faces)
}

/// Writes `v` lines then `f` lines. Floats use Rust's shortest round-trip
/// formatting, so reading the file back reproduces positions exactly.
pub fn write_obj<W: Write>(mesh: &Mesh, mut w: W) -> std::io::Result<()> {
    for p in mesh.vertices() {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn save_obj(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write_obj(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::{icosphere, tetrahedron};

    const TET: &str = "# tetra\nv 1 1 1\nv 1 -1 -1\nv -1 1 -1\nv -1 -1 1\nvt 0 0\nvn 0 0 1\n\
                       f 1 2 3\nf 1/1/1 3/1/1 4/1/1\nf 1 4 2\nf -3 -1 -2\n";

    #[test]
    fn parses_tetrahedron_with_extras() {
        let m = parse_obj(TET).unwrap();
        assert_eq!((m.num_vertices(), m.num_faces(), m.num_edges()), (4, 4, 6));
        assert_eq!(m.faces()[3], [1, 3, 2]);
    }

    #[test]
    fn quad_face_names_line() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        match parse_obj(text) {
            Err(MeshError::NonTriangle { line: 5, count: 4 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let msg = parse_obj(text).unwrap_err().to_string();
        assert!(msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn open_surface_rejected_naming_edge() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3\nf 2 4 3\n";
        let err = parse_obj(text).unwrap_err();
        assert!(matches!(err, MeshError::BoundaryEdge { .. }));
        assert!(err.to_string().contains("boundary edge ("));
    }

    #[test]
    fn malformed_vertex() {
        assert!(matches!(parse_obj("v 1 x 2\n"), Err(MeshError::Parse { line: 1, .. })));
    }

    #[test]
    fn round_trip_is_exact() {
        let m = icosphere(2).map_positions(|p| p * 0.1 + Vec3::new(1e-7, 3.3, -0.2));
        let mut buf = Vec::new();
        write_obj(&m, &mut buf).unwrap();
        let back = parse_obj(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.faces(), m.faces());
    }

    #[test]
    fn writes_v_then_f_lines() {
        let mut buf = Vec::new();
        write_obj(&tetrahedron(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert!(lines[..4].iter().all(|l| l.starts_with("v ")));
        assert!(lines[4..].iter().all(|l| l.starts_with("f ")));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn empty_path_is_io_error() {
        assert!(matches!(save_obj(&tetrahedron(), ""), Err(MeshError::Io(_))));
    }
}
