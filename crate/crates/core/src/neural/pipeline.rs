//! Forward and backward passes of the full subdivision pipeline.
//!
//! Per level: the vertex module runs on every outgoing half-flap of every
//! vertex and the pooled output displaces the vertex; then the edge module
//! runs on both half-flaps of every edge and the pooled output displaces
//! the edge midpoint. Flaps are processed in batches, one matrix column per
//! half-edge. Pooling always sums in a fixed order (a vertex's flaps sorted
//! by destination; an edge's `a → b` flap before `b → a` for `a < b`).
//!
//! Local frames are constants of the computation graph: the backward pass
//! differentiates through features, edge vectors and displacements but not
//! through frame construction. [`FrameSet`] lets a forward pass reuse the
//! frames of an earlier one, which is how that graph is finite-differenced.

use nalgebra::{DMatrix, Matrix3};

use super::bundle::NetworkBundle;
use super::frame::frame_from_points;
use super::mlp::{MlpParams, MlpTape};
use super::{NeuralError, FEATURE_DIM};
use crate::mesh::{midpoint_topology_subdivide, Mesh, Vec3};

/// Connectivity of one level, flattened for batched flap evaluation.
#[derive(Debug, Clone)]
pub struct LevelTopology {
    pub mesh: Mesh,
    /// Per half-edge: source, destination, left opposite, right opposite.
    flaps: Vec<[usize; 4]>,
    /// Outgoing half-edges of each vertex sorted by destination (CSR).
    out_offsets: Vec<usize>,
    out_halfedges: Vec<usize>,
    /// Per sorted edge `[a, b]`: the half-edges `a → b` and `b → a`.
    edge_halfedges: Vec<[usize; 2]>,
}

impl LevelTopology {
    pub fn new(mesh: &Mesh) -> Self {
        let flaps = (0..mesh.num_halfedges())
            .map(|h| [mesh.source(h), mesh.dest(h), mesh.opposite(h), mesh.opposite(mesh.twin(h))])
            .collect();
        let mut out_offsets = vec![0];
        let mut out_halfedges = Vec::with_capacity(mesh.num_halfedges());
        for v in 0..mesh.num_vertices() {
            let mut out = mesh.outgoing(v);
            out.sort_by_key(|&h| mesh.dest(h));
            out_halfedges.extend(out);
            out_offsets.push(out_halfedges.len());
        }
        let edge_halfedges = mesh
            .edges()
            .iter()
            .map(|&[a, b]| {
                let h = mesh.find_halfedge(a, b).expect("edge has a half-edge");
                [h, mesh.twin(h)]
            })
            .collect();
        Self { mesh: mesh.clone(), flaps, out_offsets, out_halfedges, edge_halfedges }
    }

    pub fn num_vertices(&self) -> usize {
        self.out_offsets.len() - 1
    }

    pub fn num_halfedges(&self) -> usize {
        self.flaps.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_halfedges.len()
    }

    fn outgoing(&self, v: usize) -> &[usize] {
        &self.out_halfedges[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    fn frames(&self, pos: &[Vec3]) -> Result<Vec<Matrix3<f64>>, NeuralError> {
        self.flaps
            .iter()
            .enumerate()
            .map(|(h, f)| frame_from_points(&pos[f[0]], &pos[f[1]], &pos[f[2]], &pos[f[3]], h))
            .collect()
    }

    /// Uniform-weight differential coordinates, as a `3 × V` matrix.
    fn differential_coordinates(&self, pos: &[Vec3]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(3, self.num_vertices());
        for v in 0..self.num_vertices() {
            let ring = self.outgoing(v);
            let mut mean = Vec3::zeros();
            for &h in ring {
                mean += pos[self.flaps[h][1]];
            }
            let d = pos[v] - mean / ring.len() as f64;
            out.column_mut(v).copy_from(&d);
        }
        out
    }

    /// Network input for every half-flap: three edge vectors from the source
    /// then the features of source, destination and the two opposite
    /// vertices, all with their 3-vector parts in the flap frame.
    fn build_input(&self, pos: &[Vec3], feat: &DMatrix<f64>, frames: &[Matrix3<f64>], scale: f64) -> DMatrix<f64> {
        let d = feat.nrows();
        let rows = 9 + 4 * d;
        let mut x = DMatrix::zeros(rows, self.flaps.len());
        let fs = feat.as_slice();
        for (h, (flap, r)) in self.flaps.iter().zip(frames).enumerate() {
            let col = &mut x.as_mut_slice()[h * rows..(h + 1) * rows];
            let s = pos[flap[0]];
            for (k, &u) in flap[1..].iter().enumerate() {
                let e = r * ((pos[u] - s) * scale);
                col[3 * k..3 * k + 3].copy_from_slice(e.as_slice());
            }
            for (q, &u) in flap.iter().enumerate() {
                let src = &fs[u * d..(u + 1) * d];
                let off = 9 + q * d;
                let g = r * Vec3::new(src[0], src[1], src[2]);
                col[off..off + 3].copy_from_slice(g.as_slice());
                col[off + 3..off + d].copy_from_slice(&src[3..]);
            }
        }
        x
    }

    /// Reverse of [`Self::build_input`]: accumulates position and feature
    /// gradients from the input gradient `dx`.
    fn scatter_input_grad(
        &self,
        dx: &DMatrix<f64>,
        frames: &[Matrix3<f64>],
        scale: f64,
        dp: &mut [Vec3],
        df: &mut DMatrix<f64>,
    ) {
        let d = df.nrows();
        let rows = dx.nrows();
        for (h, (flap, r)) in self.flaps.iter().zip(frames).enumerate() {
            let col = &dx.as_slice()[h * rows..(h + 1) * rows];
            let rt = r.transpose();
            for k in 0..3 {
                let g = rt * Vec3::new(col[3 * k], col[3 * k + 1], col[3 * k + 2]) * scale;
                dp[flap[k + 1]] += g;
                dp[flap[0]] -= g;
            }
            let dfs = df.as_mut_slice();
            for (q, &u) in flap.iter().enumerate() {
                let off = 9 + q * d;
                let g = rt * Vec3::new(col[off], col[off + 1], col[off + 2]);
                let dst = &mut dfs[u * d..(u + 1) * d];
                for i in 0..3 {
                    dst[i] += g[i];
                }
                for i in 3..d {
                    dst[i] += col[off + i];
                }
            }
        }
    }

    /// Mean of the flap outputs over each vertex's outgoing half-flaps.
    fn pool_vertices(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(g.nrows(), self.num_vertices());
        for v in 0..self.num_vertices() {
            let flaps = self.outgoing(v);
            let mut col = out.column_mut(v);
            for &h in flaps {
                col += g.column(h);
            }
            col /= flaps.len() as f64;
        }
        out
    }

    fn unpool_vertices(&self, df: &DMatrix<f64>) -> DMatrix<f64> {
        let mut dg = DMatrix::zeros(df.nrows(), self.num_halfedges());
        for v in 0..self.num_vertices() {
            let flaps = self.outgoing(v);
            let share = df.column(v) / flaps.len() as f64;
            for &h in flaps {
                dg.column_mut(h).copy_from(&share);
            }
        }
        dg
    }

    fn pool_edges(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(g.nrows(), self.num_edges());
        for (e, &[h1, h2]) in self.edge_halfedges.iter().enumerate() {
            out.column_mut(e).copy_from(&((g.column(h1) + g.column(h2)) * 0.5));
        }
        out
    }
}

/// Rotates the leading 3-vector of every output column back to global
/// coordinates.
fn to_global(mut y: DMatrix<f64>, frames: &[Matrix3<f64>]) -> DMatrix<f64> {
    for (h, r) in frames.iter().enumerate() {
        let local = Vec3::new(y[(0, h)], y[(1, h)], y[(2, h)]);
        let g = r.transpose() * local;
        y.view_mut((0, h), (3, 1)).copy_from(&g);
    }
    y
}

fn to_local_grad(mut dg: DMatrix<f64>, frames: &[Matrix3<f64>]) -> DMatrix<f64> {
    for (h, r) in frames.iter().enumerate() {
        let g = r * Vec3::new(dg[(0, h)], dg[(1, h)], dg[(2, h)]);
        dg.view_mut((0, h), (3, 1)).copy_from(&g);
    }
    dg
}

/// `p + d`, leaving `p` bit-identical where `d` is zero.
fn displace(p: Vec3, d: Vec3) -> Vec3 {
    p.zip_map(&d, |a, b| if b == 0.0 { a } else { a + b })
}

fn leading(f: &DMatrix<f64>, c: usize) -> Vec3 {
    Vec3::new(f[(0, c)], f[(1, c)], f[(2, c)])
}

/// Level connectivities `0..=levels`, level 0 being the input.
#[derive(Debug, Clone)]
pub struct Topology {
    pub levels: Vec<LevelTopology>,
}

impl Topology {
    pub fn new(coarse: &Mesh, levels: usize) -> Self {
        let mut meshes = vec![coarse.clone()];
        for _ in 0..levels {
            let next = midpoint_topology_subdivide(meshes.last().unwrap()).0;
            meshes.push(next);
        }
        Self { levels: meshes.iter().map(LevelTopology::new).collect() }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Frames of every step of a forward pass, in evaluation order.
#[derive(Debug, Clone)]
pub struct FrameSet(pub Vec<Vec<Matrix3<f64>>>);

#[derive(Debug, Clone)]
struct StepTape {
    frames: Vec<Matrix3<f64>>,
    mlp: MlpTape,
}

/// Result of a forward pass with everything the backward pass needs.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Positions of levels `0..=L`.
    pub positions: Vec<Vec<Vec3>>,
    /// `32 × V` features of levels `0..=L`.
    pub features: Vec<DMatrix<f64>>,
    scale: f64,
    tapes: Vec<StepTape>,
}

impl Forward {
    /// Whether every module evaluation has the same ReLU pattern as in
    /// `other`, i.e. both passes lie on the same linear piece.
    pub fn same_activation_pattern(&self, other: &Forward) -> bool {
        self.tapes.len() == other.tapes.len()
            && self.tapes.iter().zip(&other.tapes).all(|(a, b)| a.mlp.same_activation_pattern(&b.mlp))
    }

    pub fn frames(&self) -> FrameSet {
        FrameSet(self.tapes.iter().map(|t| t.frames.clone()).collect())
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

struct Stepper<'a> {
    frozen: Option<&'a FrameSet>,
    tapes: Vec<StepTape>,
}

impl Stepper<'_> {
    /// Runs one module on every half-flap of `topo`; returns global-frame outputs.
    fn run(
        &mut self,
        params: &MlpParams,
        topo: &LevelTopology,
        pos: &[Vec3],
        feat: &DMatrix<f64>,
        scale: f64,
    ) -> Result<DMatrix<f64>, NeuralError> {
        let frames = match self.frozen {
            Some(f) => f.0[self.tapes.len()].clone(),
            None => topo.frames(pos)?,
        };
        let x = topo.build_input(pos, feat, &frames, scale);
        let mlp = params.forward(x);
        let g = to_global(mlp.y.clone(), &frames);
        self.tapes.push(StepTape { frames, mlp });
        Ok(g)
    }
}

/// Full forward pass on `topo` starting from `p0`. Geometric network inputs
/// are multiplied by `scale` and displacements divided by it, which runs the
/// networks in the coordinates the bundle was trained in.
pub fn forward(
    bundle: &NetworkBundle,
    topo: &Topology,
    p0: &[Vec3],
    scale: f64,
    frozen: Option<&FrameSet>,
) -> Result<Forward, NeuralError> {
    let mut st = Stepper { frozen, tapes: Vec::new() };
    let t0 = &topo.levels[0];
    let diff = t0.differential_coordinates(p0) * scale;
    let g = st.run(&bundle.init, t0, p0, &diff, scale)?;
    let mut features = vec![t0.pool_vertices(&g)];
    let mut positions = vec![p0.to_vec()];

    for lt in &topo.levels[..topo.num_levels()] {
        let (p, f) = (positions.last().unwrap(), features.last().unwrap());
        let g = st.run(&bundle.vertex, lt, p, f, scale)?;
        let fv = lt.pool_vertices(&g);
        let pv: Vec<Vec3> = (0..lt.num_vertices()).map(|v| displace(p[v], leading(&fv, v) / scale)).collect();

        let g = st.run(&bundle.edge, lt, &pv, &fv, scale)?;
        let fe = lt.pool_edges(&g);
        let mut next_p = pv.clone();
        for (e, &[a, b]) in lt.mesh.edges().iter().enumerate() {
            next_p.push(displace((pv[a] + pv[b]) * 0.5, leading(&fe, e) / scale));
        }
        let mut next_f = DMatrix::zeros(FEATURE_DIM, lt.num_vertices() + lt.num_edges());
        next_f.columns_mut(0, lt.num_vertices()).copy_from(&fv);
        next_f.columns_mut(lt.num_vertices(), lt.num_edges()).copy_from(&fe);
        if next_p.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(NeuralError::NonFinite);
        }
        positions.push(next_p);
        features.push(next_f);
    }
    Ok(Forward { positions, features, scale, tapes: st.tapes })
}

/// Parameter gradients for upstream position gradients `d_levels[l]` of
/// level `l + 1` (levels without a loss term may pass zeros).
pub fn backward(bundle: &NetworkBundle, topo: &Topology, fwd: &Forward, d_levels: &[Vec<Vec3>]) -> NetworkBundle {
    let levels = topo.num_levels();
    assert_eq!(d_levels.len(), levels, "one gradient array per output level");
    let scale = fwd.scale;
    let mut grads = bundle.zeros_like();
    let mut dp = d_levels[levels - 1].clone();
    let mut df = DMatrix::zeros(FEATURE_DIM, dp.len());

    for l in (0..levels).rev() {
        let lt = &topo.levels[l];
        let nv = lt.num_vertices();
        let mut dpv = dp[..nv].to_vec();
        let mut dfv = df.columns(0, nv).into_owned();

        // edge step
        let mut dg = DMatrix::zeros(FEATURE_DIM, lt.num_halfedges());
        for (e, (&[a, b], &[h1, h2])) in lt.mesh.edges().iter().zip(&lt.edge_halfedges).enumerate() {
            let dpe = dp[nv + e];
            let mut dfe = df.column(nv + e).into_owned();
            for i in 0..3 {
                dfe[i] += dpe[i] / scale;
            }
            dpv[a] += dpe * 0.5;
            dpv[b] += dpe * 0.5;
            let half = dfe * 0.5;
            dg.column_mut(h1).copy_from(&half);
            dg.column_mut(h2).copy_from(&half);
        }
        let tape = &fwd.tapes[2 + 2 * l];
        let dy = to_local_grad(dg, &tape.frames);
        let dx = bundle.edge.backward(&tape.mlp, &dy, &mut grads.edge, true).unwrap();
        lt.scatter_input_grad(&dx, &tape.frames, scale, &mut dpv, &mut dfv);

        // vertex step
        for v in 0..nv {
            for i in 0..3 {
                dfv[(i, v)] += dpv[v][i] / scale;
            }
        }
        let mut dp_prev = dpv;
        let mut df_prev = DMatrix::zeros(FEATURE_DIM, nv);
        let tape = &fwd.tapes[1 + 2 * l];
        let dy = to_local_grad(lt.unpool_vertices(&dfv), &tape.frames);
        let dx = bundle.vertex.backward(&tape.mlp, &dy, &mut grads.vertex, true).unwrap();
        lt.scatter_input_grad(&dx, &tape.frames, scale, &mut dp_prev, &mut df_prev);

        if l > 0 {
            for (p, d) in dp_prev.iter_mut().zip(&d_levels[l - 1]) {
                *p += d;
            }
        }
        dp = dp_prev;
        df = df_prev;
    }

    let tape = &fwd.tapes[0];
    let dy = to_local_grad(topo.levels[0].unpool_vertices(&df), &tape.frames);
    bundle.init.backward(&tape.mlp, &dy, &mut grads.init, false);
    grads
}

/// Subdivides `mesh` `levels` times and returns every level (index 0 is the
/// first refinement). Inputs are scaled into the bundle's training
/// coordinates.
pub fn neural_subdivide(mesh: &Mesh, bundle: &NetworkBundle, levels: usize) -> Result<Vec<Mesh>, NeuralError> {
    neural_subdivide_scaled(mesh, bundle, levels, bundle.normalization.scale)
}

pub fn neural_subdivide_scaled(
    mesh: &Mesh,
    bundle: &NetworkBundle,
    levels: usize,
    scale: f64,
) -> Result<Vec<Mesh>, NeuralError> {
    let topo = Topology::new(mesh, levels);
    let fwd = forward(bundle, &topo, mesh.vertices(), scale, None)?;
    Ok(topo.levels[1..].iter().zip(&fwd.positions[1..]).map(|(t, p)| t.mesh.with_vertices(p.clone())).collect())
}

/// Initialization module alone: the `32 × V` starting features.
pub fn init_features(mesh: &Mesh, params: &MlpParams, scale: f64) -> Result<DMatrix<f64>, NeuralError> {
    let topo = LevelTopology::new(mesh);
    let mut st = Stepper { frozen: None, tapes: Vec::new() };
    let diff = topo.differential_coordinates(mesh.vertices()) * scale;
    Ok(topo.pool_vertices(&st.run(params, &topo, mesh.vertices(), &diff, scale)?))
}

/// Vertex module alone: new even positions and features.
pub fn step_vertex(
    mesh: &Mesh,
    features: &DMatrix<f64>,
    params: &MlpParams,
    scale: f64,
) -> Result<(Vec<Vec3>, DMatrix<f64>), NeuralError> {
    let topo = LevelTopology::new(mesh);
    let mut st = Stepper { frozen: None, tapes: Vec::new() };
    let f = topo.pool_vertices(&st.run(params, &topo, mesh.vertices(), features, scale)?);
    let p = (0..mesh.num_vertices()).map(|v| displace(mesh.position(v), leading(&f, v) / scale)).collect();
    Ok((p, f))
}

/// Edge module alone: one odd position and feature per sorted edge.
pub fn step_edge(
    mesh: &Mesh,
    features: &DMatrix<f64>,
    params: &MlpParams,
    scale: f64,
) -> Result<(Vec<Vec3>, DMatrix<f64>), NeuralError> {
    let topo = LevelTopology::new(mesh);
    let mut st = Stepper { frozen: None, tapes: Vec::new() };
    let f = topo.pool_edges(&st.run(params, &topo, mesh.vertices(), features, scale)?);
    let p = mesh
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &[a, b])| displace((mesh.position(a) + mesh.position(b)) * 0.5, leading(&f, e) / scale))
        .collect();
    Ok((p, f))
}
