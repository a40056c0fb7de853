//! `.nsm` map files.
//!
//! ```text
//! NSM 1
//! fine <sha256> <V> <F>
//! coarse <sha256> <V> <F>
//! vertex_ids <n> <id>...
//! face_ids <n> <id>...
//! records <R>
//! record <j> <k> <i>
//! position <x> <y> <z>
//! removed <f> <f>
//! relabeled <n> <f>...
//! pre <vertices> <interior> <triangles>
//! v <id> <u> <v>          (one line per chart vertex)
//! t <face> <a> <b> <c>    (one line per chart triangle)
//! post ...                (same layout)
//! end
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! gives bit-identical records. The meshes themselves are not stored; the
//! hashes tie a file to the meshes it must be loaded with.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::chart::{ChartStage, ChartTriangle, UVChart, Uv};
use super::collapse::CollapseRecord;
use super::map::BijectiveMap;
use super::SelfParamError;
use crate::mesh::{write_obj, Mesh, Vec3};

/// SHA-256 of the mesh's OBJ serialization, hex encoded.
pub fn mesh_hash(mesh: &Mesh) -> String {
    let mut buf = Vec::new();
    write_obj(mesh, &mut buf).expect("writing to memory cannot fail");
    hex::encode(Sha256::digest(&buf))
}

fn write_chart(out: &mut String, tag: &str, c: &UVChart) {
    let _ = writeln!(out, "{tag} {} {} {}", c.vertices.len(), c.interior, c.triangles.len());
    for (v, uv) in c.vertices.iter().zip(&c.uv) {
        let _ = writeln!(out, "v {v} {} {}", uv.x, uv.y);
    }
    for t in &c.triangles {
        let [a, b, cc] = t.corners;
        let _ = writeln!(out, "t {} {a} {b} {cc}", t.face);
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_map<W: Write>(map: &BijectiveMap, mut w: W) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str("NSM 1\n");
    for (tag, m) in [("fine", map.fine()), ("coarse", map.coarse())] {
        let _ = writeln!(out, "{tag} {} {} {}", mesh_hash(m), m.num_vertices(), m.num_faces());
    }
    let ids = map.coarse_vertex_ids();
    let _ = writeln!(out, "vertex_ids {} {}", ids.len(), join(ids));
    let ids = map.coarse_face_ids();
    let _ = writeln!(out, "face_ids {} {}", ids.len(), join(ids));
    let _ = writeln!(out, "records {}", map.records().len());
    for r in map.records() {
        let _ = writeln!(out, "record {} {} {}", r.edge.0, r.edge.1, r.survivor);
        let _ = writeln!(out, "position {} {} {}", r.position.x, r.position.y, r.position.z);
        let _ = writeln!(out, "removed {} {}", r.removed_faces[0], r.removed_faces[1]);
        let _ = writeln!(out, "relabeled {} {}", r.relabeled_faces.len(), join(&r.relabeled_faces));
        write_chart(&mut out, "pre", &r.pre);
        write_chart(&mut out, "post", &r.post);
    }
    out.push_str("end\n");
    w.write_all(out.as_bytes())
}

pub fn save_map(map: &BijectiveMap, path: impl AsRef<Path>) -> Result<(), SelfParamError> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_map(map, &mut w)?;
    w.flush()?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, message: impl Into<String>) -> SelfParamError {
        SelfParamError::Format { line: self.line, message: message.into() }
    }

    /// Next non-empty line, split into tokens, with its leading tag checked.
    fn expect(&mut self, tag: &str) -> Result<Vec<String>, SelfParamError> {
        loop {
            self.line += 1;
            let Some(l) = self.inner.next() else {
                return Err(self.err(format!("unexpected end of file, expected '{tag}'")));
            };
            let l = l?;
            let mut toks = l.split_whitespace();
            let Some(first) = toks.next() else { continue };
            if first != tag {
                return Err(self.err(format!("expected '{tag}', found '{first}'")));
            }
            return Ok(toks.map(str::to_owned).collect());
        }
    }

    fn parse<T: FromStr>(&self, tok: Option<&String>) -> Result<T, SelfParamError> {
        let tok = tok.ok_or_else(|| self.err("missing field"))?;
        tok.parse().map_err(|_| self.err(format!("cannot parse '{tok}'")))
    }

    fn fields<T: FromStr>(&self, toks: &[String], n: usize) -> Result<Vec<T>, SelfParamError> {
        if toks.len() != n {
            return Err(self.err(format!("expected {n} fields, found {}", toks.len())));
        }
        toks.iter().map(|t| self.parse(Some(t))).collect()
    }

    /// `<n> <x>...` list.
    fn list(&mut self, tag: &str) -> Result<Vec<usize>, SelfParamError> {
        let toks = self.expect(tag)?;
        let n: usize = self.parse(toks.first())?;
        self.fields(&toks[1..], n)
    }

    fn chart(&mut self, tag: &str, stage: ChartStage) -> Result<UVChart, SelfParamError> {
        let toks = self.expect(tag)?;
        let head: Vec<usize> = self.fields(&toks, 3)?;
        let (nv, interior, nt) = (head[0], head[1], head[2]);
        let mut vertices = Vec::with_capacity(nv);
        let mut uv = Vec::with_capacity(nv);
        for _ in 0..nv {
            let toks = self.expect("v")?;
            if toks.len() != 3 {
                return Err(self.err("chart vertex needs an id and two coordinates"));
            }
            vertices.push(self.parse(toks.first())?);
            uv.push(Uv::new(self.parse(toks.get(1))?, self.parse(toks.get(2))?));
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let toks = self.expect("t")?;
            let f: Vec<usize> = self.fields(&toks, 4)?;
            if f[1..].iter().any(|&c| c >= nv) {
                return Err(self.err("chart triangle corner out of range"));
            }
            triangles.push(ChartTriangle { face: f[0], corners: [f[1], f[2], f[3]] });
        }
        Ok(UVChart { stage, vertices, uv, triangles, interior })
    }
}

/// Reads a map file written for the meshes `fine` and `coarse`.
pub fn read_map<R: Read>(r: R, fine: &Mesh, coarse: &Mesh) -> Result<BijectiveMap, SelfParamError> {
    let mut lines = Lines { inner: BufReader::new(r).lines(), line: 0 };
    let header = lines.expect("NSM")?;
    if header.len() != 1 || header[0] != "1" {
        return Err(lines.err("unsupported map version"));
    }
    for (tag, m) in [("fine", fine), ("coarse", coarse)] {
        let toks = lines.expect(tag)?;
        if toks.len() != 3 {
            return Err(lines.err("mesh line needs a hash and two counts"));
        }
        if toks[0] != mesh_hash(m) {
            return Err(SelfParamError::HashMismatch(tag));
        }
    }
    let vertex_ids = lines.list("vertex_ids")?;
    let face_ids = lines.list("face_ids")?;
    if vertex_ids.len() != coarse.num_vertices() || face_ids.len() != coarse.num_faces() {
        return Err(lines.err("id tables do not match the coarse mesh"));
    }
    let toks = lines.expect("records")?;
    let n: usize = lines.fields::<usize>(&toks, 1)?[0];
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let toks = lines.expect("record")?;
        let e: Vec<usize> = lines.fields(&toks, 3)?;
        let toks = lines.expect("position")?;
        let p: Vec<f64> = lines.fields(&toks, 3)?;
        let toks = lines.expect("removed")?;
        let removed: Vec<usize> = lines.fields(&toks, 2)?;
        let relabeled_faces = lines.list("relabeled")?;
        let pre = lines.chart("pre", ChartStage::PreCollapse)?;
        let post = lines.chart("post", ChartStage::PostCollapse)?;
        let bad_vertex = e.iter().any(|&v| v >= fine.num_vertices());
        let bad_face = removed.iter().chain(&relabeled_faces).any(|&f| f >= fine.num_faces());
        if bad_vertex || bad_face {
            return Err(lines.err("record index out of range"));
        }
        records.push(CollapseRecord {
            edge: (e[0], e[1]),
            survivor: e[2],
            position: Vec3::new(p[0], p[1], p[2]),
            pre,
            post,
            removed_faces: [removed[0], removed[1]],
            relabeled_faces,
        });
    }
    lines.expect("end")?;
    for r in &records {
        for c in [&r.pre, &r.post] {
            if c.vertices.iter().any(|&v| v >= fine.num_vertices()) || c.triangles.iter().any(|t| t.face >= fine.num_faces()) {
                return Err(SelfParamError::Format { line: lines.line, message: "chart references a missing element".into() });
            }
        }
    }
    Ok(BijectiveMap::new(fine.clone(), coarse.clone(), vertex_ids, face_ids, records))
}

pub fn load_map(path: impl AsRef<Path>, fine: &Mesh, coarse: &Mesh) -> Result<BijectiveMap, SelfParamError> {
    read_map(std::fs::File::open(path)?, fine, coarse)
}
