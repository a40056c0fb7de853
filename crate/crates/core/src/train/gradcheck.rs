//! Full-pipeline gradient check.
//!
//! The network is piecewise linear in each parameter, so a central
//! difference is only a derivative estimate when `θ ± h` stay on the same
//! ReLU piece. For every parameter the difference is taken at [`FD_STEP`];
//! when either side switches some ReLU, the estimate at that step measures
//! the kink rather than the slope, and the parameter is re-checked at
//! the largest of [`KINK_STEPS`] whose interval keeps the activation pattern.
//! The raw `FD_STEP` error over every parameter is reported alongside.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::loss_l2_levels;
use super::TrainError;
use crate::mesh::shapes::icosahedron;
use crate::mesh::{Mesh, Vec3};
use crate::neural::pipeline::{backward, forward, FrameSet, Forward};
use crate::neural::{NetworkBundle, Topology};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Fallback steps for parameters whose `FD_STEP` interval crosses a kink.
pub const KINK_STEPS: [f64; 7] = [5e-6, 2e-6, 1e-6, 5e-7, 2e-7, 1e-7, 1e-8];
/// Gradients smaller than this are compared absolutely rather than relatively.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub seed: u64,
    pub num_params: usize,
    /// Worst relative error, with kink-crossing parameters re-checked.
    pub max_rel_error: f64,
    /// Worst relative error at `FD_STEP` over every parameter, kinks included.
    pub raw_max_rel_error: f64,
    /// Parameters whose `FD_STEP` interval switched some ReLU.
    pub kink_params: usize,
    /// Kink-crossing parameters for which no fallback step avoided the kink;
    /// their `FD_STEP` error is kept in `max_rel_error`.
    pub unresolved_kinks: usize,
    /// Index into the flat parameter order (I, V, E; W₁, b₁, W₂, b₂, W₃, b₃).
    pub worst_param: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub max_abs_grad: f64,
    pub loss: f64,
}

fn rel(an: f64, fd: f64) -> f64 {
    (an - fd).abs() / an.abs().max(fd.abs()).max(REL_FLOOR)
}

struct Problem {
    mesh: Mesh,
    topo: Topology,
    targets: Vec<Vec<Vec3>>,
    frames: FrameSet,
    base: Forward,
}

impl Problem {
    fn eval(&self, b: &NetworkBundle) -> Result<(f64, bool), TrainError> {
        let f = forward(b, &self.topo, self.mesh.vertices(), 1.0, Some(&self.frames))?;
        let same = f.same_activation_pattern(&self.base);
        Ok((loss_l2_levels(&f.positions[1..], &self.targets)?.0, same))
    }

    /// Central difference of parameter `(s, i)` at step `h`, and whether both
    /// sides kept the base activation pattern.
    fn central(&self, work: &mut NetworkBundle, s: usize, i: usize, h: f64) -> Result<(f64, bool), TrainError> {
        let orig = work.slices()[s][i];
        work.slices_mut()[s][i] = orig + h;
        let (lp, sp) = self.eval(work)?;
        work.slices_mut()[s][i] = orig - h;
        let (lm, sm) = self.eval(work)?;
        work.slices_mut()[s][i] = orig;
        Ok(((lp - lm) / (2.0 * h), sp && sm))
    }
}

/// Compares the analytic gradient of the full two-level loss on a noisy
/// icosahedron with central differences for every parameter. Frames are
/// frozen at the unperturbed pass, matching the graph the analytic
/// gradient differentiates. With `zero` the bundle is all zeros.
pub fn grad_check(seed: u64, zero: bool) -> Result<GradCheckReport, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ico = icosahedron();
    let noisy: Vec<Vec3> = ico
        .vertices()
        .iter()
        .map(|p| p + Vec3::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)))
        .collect();
    let mesh = ico.with_vertices(noisy);
    let bundle = if zero {
        NetworkBundle::zeros()
    } else {
        let mut b = NetworkBundle::random(rng.gen());
        for s in b.slices_mut() {
            for x in s.iter_mut() {
                *x += rng.gen_range(-0.05..0.05);
            }
        }
        b
    };
    let topo = Topology::new(&mesh, 2);
    let targets: Vec<Vec<Vec3>> = topo.levels[1..]
        .iter()
        .map(|t| {
            (0..t.num_vertices())
                .map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();

    let base = forward(&bundle, &topo, mesh.vertices(), 1.0, None)?;
    let (loss, dl) = loss_l2_levels(&base.positions[1..], &targets)?;
    let grads = backward(&bundle, &topo, &base, &dl);
    if !grads.is_finite() {
        return Err(TrainError::NonFiniteGradient);
    }
    let frames = base.frames();
    let problem = Problem { mesh, topo, targets, frames, base };

    let analytic: Vec<f64> = grads.slices().concat();
    let sizes: Vec<usize> = bundle.slices().iter().map(|s| s.len()).collect();
    let mut work = bundle.clone();
    let mut r = GradCheckReport {
        seed,
        num_params: 0,
        max_rel_error: 0.0,
        raw_max_rel_error: 0.0,
        kink_params: 0,
        unresolved_kinks: 0,
        worst_param: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        max_abs_grad: 0.0,
        loss,
    };
    let mut flat = 0;
    for (s, &len) in sizes.iter().enumerate() {
        for i in 0..len {
            let an = analytic[flat];
            let (mut fd, smooth) = problem.central(&mut work, s, i, FD_STEP)?;
            r.raw_max_rel_error = r.raw_max_rel_error.max(rel(an, fd));
            if !smooth {
                r.kink_params += 1;
                let mut resolved = false;
                for h in KINK_STEPS {
                    let (f, ok) = problem.central(&mut work, s, i, h)?;
                    if ok {
                        fd = f;
                        resolved = true;
                        break;
                    }
                }
                if !resolved {
                    r.unresolved_kinks += 1;
                }
            }
            let err = rel(an, fd);
            if err > r.max_rel_error {
                r.max_rel_error = err;
                r.worst_param = flat;
                r.worst_analytic = an;
                r.worst_numeric = fd;
            }
            r.max_abs_grad = r.max_abs_grad.max(an.abs());
            flat += 1;
        }
    }
    r.num_params = flat;
    Ok(r)
}
