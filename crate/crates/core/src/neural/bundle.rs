//! Network parameters and the `NSD 1` checkpoint format.
//!
//! ```text
//! NSD 1
//! levels <L>
//! normalization <scale> <tx> <ty> <tz>
//! module I <in> <hidden> <out>
//! module V <in> <hidden> <out>
//! module E <in> <hidden> <out>
//! matrix I.W1 <rows> <cols>
//! <one row per line>
//! matrix I.b1 <rows> 1
//! ...
//! end
//! ```
//!
//! Values are written in shortest round-trip decimal form, so a checkpoint
//! reads back bit-identical and equal bundles serialize to equal bytes.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::MlpParams;
use super::{NeuralError, INIT_INPUT_DIM, STEP_INPUT_DIM};
use crate::mesh::{Similarity, Vec3};

const MODULE_NAMES: [&str; 3] = ["I", "V", "E"];

/// Parameters of the initialization (`I`), vertex (`V`) and edge (`E`)
/// modules, shared across every level.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkBundle {
    pub init: MlpParams,
    pub vertex: MlpParams,
    pub edge: MlpParams,
    /// Number of levels the bundle was trained for.
    pub levels: usize,
    /// Maps input meshes into the coordinates the bundle was trained in.
    pub normalization: Similarity,
}

impl NetworkBundle {
    pub fn zeros() -> Self {
        Self {
            init: MlpParams::zeros(INIT_INPUT_DIM),
            vertex: MlpParams::zeros(STEP_INPUT_DIM),
            edge: MlpParams::zeros(STEP_INPUT_DIM),
            levels: 2,
            normalization: Similarity::identity(),
        }
    }

    /// Glorot-initialized bundle, deterministic in `seed`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = MlpParams::glorot(INIT_INPUT_DIM, &mut rng);
        let vertex = MlpParams::glorot(STEP_INPUT_DIM, &mut rng);
        let edge = MlpParams::glorot(STEP_INPUT_DIM, &mut rng);
        Self { init, vertex, edge, levels: 2, normalization: Similarity::identity() }
    }

    pub fn modules(&self) -> [&MlpParams; 3] {
        [&self.init, &self.vertex, &self.edge]
    }

    pub fn modules_mut(&mut self) -> [&mut MlpParams; 3] {
        [&mut self.init, &mut self.vertex, &mut self.edge]
    }

    /// Same shapes, all zero; used for gradients and optimizer moments.
    pub fn zeros_like(&self) -> Self {
        Self {
            init: self.init.zeros_like(),
            vertex: self.vertex.zeros_like(),
            edge: self.edge.zeros_like(),
            levels: self.levels,
            normalization: self.normalization,
        }
    }

    pub fn num_params(&self) -> usize {
        self.modules().iter().map(|m| m.num_params()).sum()
    }

    /// All parameter storage in a fixed order.
    pub fn slices(&self) -> Vec<&[f64]> {
        self.modules().into_iter().flat_map(|m| m.slices()).collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.modules_mut().into_iter().flat_map(|m| m.slices_mut()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.modules().iter().all(|m| m.is_finite())
    }

    pub fn accumulate(&mut self, other: &Self) {
        for (a, b) in self.modules_mut().into_iter().zip(other.modules()) {
            a.accumulate(b);
        }
    }
}

fn write_matrix(out: &mut String, name: &str, rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) {
    let _ = writeln!(out, "matrix {name} {rows} {cols}");
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| at(r, c).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

pub fn write_checkpoint<W: Write>(bundle: &NetworkBundle, mut w: W) -> std::io::Result<()> {
    let mut out = String::from("NSD 1\n");
    let _ = writeln!(out, "levels {}", bundle.levels);
    let s = &bundle.normalization;
    let _ = writeln!(out, "normalization {} {} {} {}", s.scale, s.translation.x, s.translation.y, s.translation.z);
    for (name, m) in MODULE_NAMES.iter().zip(bundle.modules()) {
        let (i, h, o) = m.dims();
        let _ = writeln!(out, "module {name} {i} {h} {o}");
    }
    for (name, m) in MODULE_NAMES.iter().zip(bundle.modules()) {
        for l in 0..3 {
            let w = &m.w[l];
            write_matrix(&mut out, &format!("{name}.W{}", l + 1), w.nrows(), w.ncols(), |r, c| w[(r, c)]);
            let b = &m.b[l];
            write_matrix(&mut out, &format!("{name}.b{}", l + 1), b.len(), 1, |r, _| b[r]);
        }
    }
    out.push_str("end\n");
    w.write_all(out.as_bytes())
}

pub fn save_checkpoint(bundle: &NetworkBundle, path: impl AsRef<Path>) -> Result<(), NeuralError> {
    let mut buf = Vec::new();
    write_checkpoint(bundle, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

struct Reader<R> {
    lines: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Reader<R> {
    fn err(&self, message: impl Into<String>) -> NeuralError {
        NeuralError::Checkpoint { line: self.line, message: message.into() }
    }

    fn next_tokens(&mut self) -> Result<Vec<String>, NeuralError> {
        loop {
            self.line += 1;
            let Some(l) = self.lines.next() else {
                return Err(self.err("unexpected end of file"));
            };
            let l = l?;
            let toks: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
            if !toks.is_empty() {
                return Ok(toks);
            }
        }
    }

    fn tagged(&mut self, tag: &str, n: usize) -> Result<Vec<String>, NeuralError> {
        let toks = self.next_tokens()?;
        if toks[0] != tag {
            return Err(self.err(format!("expected '{tag}', found '{}'", toks[0])));
        }
        if toks.len() != n + 1 {
            return Err(self.err(format!("'{tag}' takes {n} fields")));
        }
        Ok(toks[1..].to_vec())
    }

    fn num<T: std::str::FromStr>(&self, tok: &str) -> Result<T, NeuralError> {
        tok.parse().map_err(|_| self.err(format!("cannot parse '{tok}'")))
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>, NeuralError> {
        let head = self.tagged("matrix", 3)?;
        if head[0] != name || self.num::<usize>(&head[1])? != rows || self.num::<usize>(&head[2])? != cols {
            return Err(self.err(format!("expected matrix {name} {rows} {cols}")));
        }
        let mut m = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            let toks = self.next_tokens()?;
            if toks.len() != cols {
                return Err(self.err(format!("row of {name} has {} values, expected {cols}", toks.len())));
            }
            for (c, t) in toks.iter().enumerate() {
                let v: f64 = self.num(t)?;
                if !v.is_finite() {
                    return Err(self.err(format!("non-finite entry in {name}")));
                }
                m[(r, c)] = v;
            }
        }
        Ok(m)
    }
}

pub fn read_checkpoint<R: Read>(r: R) -> Result<NetworkBundle, NeuralError> {
    let mut rd = Reader { lines: BufReader::new(r).lines(), line: 0 };
    let v = rd.tagged("NSD", 1)?;
    if v[0] != "1" {
        return Err(rd.err(format!("unsupported checkpoint version {}", v[0])));
    }
    let levels = rd.tagged("levels", 1)?;
    let levels = rd.num(&levels[0])?;
    let n = rd.tagged("normalization", 4)?;
    let n: Vec<f64> = n.iter().map(|t| rd.num(t)).collect::<Result<_, _>>()?;
    let normalization = Similarity { scale: n[0], translation: Vec3::new(n[1], n[2], n[3]) };
    if !(normalization.scale > 0.0) {
        return Err(rd.err("normalization scale must be positive"));
    }
    let mut dims = Vec::new();
    for (name, expected_in) in MODULE_NAMES.iter().zip([INIT_INPUT_DIM, STEP_INPUT_DIM, STEP_INPUT_DIM]) {
        let t = rd.tagged("module", 4)?;
        let d: Vec<usize> = t[1..].iter().map(|x| rd.num(x)).collect::<Result<_, _>>()?;
        if t[0] != *name || d != [expected_in, super::HIDDEN_DIM, super::FEATURE_DIM] {
            return Err(rd.err(format!(
                "module {name} must be {expected_in} {} {}",
                super::HIDDEN_DIM,
                super::FEATURE_DIM
            )));
        }
        dims.push((d[0], d[1], d[2]));
    }
    let mut modules = Vec::new();
    for (name, &(i, h, o)) in MODULE_NAMES.iter().zip(&dims) {
        let shapes = [(h, i), (h, h), (o, h)];
        let mut p = MlpParams::zeros(i);
        for (l, &(rows, cols)) in shapes.iter().enumerate() {
            p.w[l] = rd.matrix(&format!("{name}.W{}", l + 1), rows, cols)?;
            let b = rd.matrix(&format!("{name}.b{}", l + 1), rows, 1)?;
            p.b[l] = DVector::from_column_slice(b.as_slice());
        }
        modules.push(p);
    }
    rd.tagged("end", 0)?;
    let edge = modules.pop().unwrap();
    let vertex = modules.pop().unwrap();
    let init = modules.pop().unwrap();
    Ok(NetworkBundle { init, vertex, edge, levels, normalization })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<NetworkBundle, NeuralError> {
    read_checkpoint(std::fs::File::open(path)?)
}
