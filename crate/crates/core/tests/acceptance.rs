//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output;
//! exits non-zero when any criterion fails.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use neusub::classic::{loop_subdivide, subdivide, Scheme};
use neusub::eval::{compare_schemes, mean_vertex_error, DEFAULT_SAMPLES};
use neusub::mesh::shapes::{bumpy_sphere, cube, ellipsoid, icosahedron, icosphere, octahedron, tetrahedron, torus};
use neusub::mesh::{save_obj, BarycentricPoint, Mesh, Similarity, Vec3};
use neusub::neural::{neural_subdivide, save_checkpoint, NetworkBundle};
use neusub::selfparam::{decimate, record_round_trip_error, BijectiveMap, DecimationPolicy};
use neusub::train::{generate_dataset, train, DatasetConfig, TargetKind, TrainConfig};

const NS: &str = env!("CARGO_BIN_EXE_ns");

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ns(args: &[&str]) -> std::process::Output {
    Command::new(NS).args(args).env("RUST_LOG", "off").output().expect("run ns")
}

fn within(t: Duration, limit_s: u64) -> bool {
    t.as_secs_f64() < limit_s as f64
}

fn random_rigid(rng: &mut ChaCha8Rng) -> (Rotation3<f64>, Vec3) {
    let axis = Unit::new_normalize(Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let r = Rotation3::from_axis_angle(&axis, rng.gen_range(-3.14..3.14));
    let t = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    (r, t)
}

// 1 ---------------------------------------------------------------------

fn rigid_invariance() -> Outcome {
    let meshes = [bumpy_sphere(2, 0.1), torus(16, 10, 1.0, 0.4), ellipsoid(2, 1.0, 0.6, 0.4)];
    let mut bundle = NetworkBundle::random(7);
    bundle.normalization = Similarity { scale: 0.8, translation: Vec3::new(0.1, 0.0, -0.2) };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for m in &meshes {
        let base = neural_subdivide(m, &bundle, 2).expect("subdivide").pop().unwrap();
        let diag = base.bounding_box_diagonal();
        for _ in 0..20 {
            let (r, t) = random_rigid(&mut rng);
            let moved = neural_subdivide(&m.map_positions(|p| r * p + t), &bundle, 2).expect("subdivide").pop().unwrap();
            for (a, b) in base.vertices().iter().zip(moved.vertices()) {
                worst = worst.max((r * a + t - b).norm() / diag);
            }
        }
    }
    ok(worst < 1e-6, format!("3 meshes x 20 motions, max deviation {worst:.2e} of bbox diagonal (limit 1e-6)"))
}

// 2 ---------------------------------------------------------------------

fn gradient_oracle() -> Outcome {
    let out = ns(&["gradcheck", "--seed", "0"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let err: Option<f64> = text
        .lines()
        .find_map(|l| l.strip_prefix("max relative error"))
        .and_then(|v| v.trim().parse().ok());
    let raw = text.lines().find(|l| l.starts_with("raw error")).unwrap_or("").to_string();
    match err {
        Some(e) => ok(out.status.success() && e < 1e-4, format!("max relative error {e:.2e} (limit 1e-4); {raw}")),
        None => ok(false, format!("no report; exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))),
    }
}

// 3 ---------------------------------------------------------------------

fn normal(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    (b - a).cross(&(c - a)).normalize()
}

fn quality(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let area = 0.5 * (b - a).cross(&(c - a)).norm();
    4.0 * 3f64.sqrt() * area / ((b - a).norm_squared() + (c - b).norm_squared() + (a - c).norm_squared())
}

fn lift(p: &nalgebra::Vector2<f64>) -> Vec3 {
    Vec3::new(p.x, p.y, 0.0)
}

fn signed_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).z
}

/// Replays the records on plain face lists and re-derives every collapse
/// criterion. Returns the first violation.
fn replay_collapse_invariants(map: &BijectiveMap) -> Result<usize, String> {
    let fine = map.fine();
    let mut pos = fine.vertices().to_vec();
    let mut faces: Vec<Option<[usize; 3]>> = fine.faces().iter().map(|f| Some(*f)).collect();
    let mut incident: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); pos.len()];
    for (f, face) in fine.faces().iter().enumerate() {
        for &v in face {
            incident[v].insert(f);
        }
    }
    let ring = |incident: &Vec<BTreeSet<usize>>, faces: &Vec<Option<[usize; 3]>>, v: usize| -> BTreeSet<usize> {
        incident[v].iter().flat_map(|&f| faces[f].unwrap()).filter(|&u| u != v).collect()
    };
    for (r, rec) in map.records().iter().enumerate() {
        let fail = |m: String| Err(format!("record {r}: {m}"));
        let (j, k) = rec.edge;
        let s = rec.survivor;
        let o = if s == j { k } else { j };
        // (4) link condition on a closed surface: exactly two shared neighbours
        let (rj, rk) = (ring(&incident, &faces, j), ring(&incident, &faces, k));
        let shared = rj.intersection(&rk).count();
        if shared != 2 {
            return fail(format!("link condition: {shared} shared neighbours"));
        }
        let nb: BTreeSet<usize> = incident[j].union(&incident[k]).copied().collect();
        let removed: Vec<usize> =
            nb.iter().copied().filter(|&f| faces[f].unwrap().contains(&j) && faces[f].unwrap().contains(&k)).collect();
        let mut stored = rec.removed_faces.to_vec();
        stored.sort();
        if removed != stored {
            return fail(format!("removed faces {removed:?} != {stored:?}"));
        }
        let survivors: Vec<usize> = nb.iter().copied().filter(|f| !removed.contains(f)).collect();
        let mut after = Vec::new();
        for &f in &survivors {
            let old = faces[f].unwrap();
            let new = old.map(|v| if v == o { s } else { v });
            let at = |v: usize| if v == s { rec.position } else { pos[v] };
            let n0 = normal(&pos[old[0]], &pos[old[1]], &pos[old[2]]);
            let n1 = normal(&at(new[0]), &at(new[1]), &at(new[2]));
            // (1) normal stability
            if !(n0.dot(&n1) > 0.2) {
                return fail(format!("face {f}: normal dot {}", n0.dot(&n1)));
            }
            // (5) 3D quality
            let q = quality(&at(new[0]), &at(new[1]), &at(new[2]));
            if !(q > 0.2) {
                return fail(format!("face {f}: 3D quality {q}"));
            }
            after.push((f, new));
        }
        let relabeled: BTreeSet<usize> = survivors.iter().copied().filter(|&f| faces[f].unwrap().contains(&o)).collect();
        if relabeled != rec.relabeled_faces.iter().copied().collect() {
            return fail("relabeled faces differ".into());
        }
        // (2) orientation and (3) angle sums in both charts
        for (name, chart) in [("pre", &rec.pre), ("post", &rec.post)] {
            for (t, tri) in chart.triangles.iter().enumerate() {
                let [a, b, c] = tri.corners.map(|x| lift(&chart.uv[x]));
                if !(signed_area(&a, &b, &c) > 0.0) {
                    return fail(format!("{name} chart triangle {t} not positively oriented"));
                }
            }
            for v in 0..chart.interior {
                let mut sum = 0.0;
                for tri in chart.triangles.iter().filter(|t| t.corners.contains(&v)) {
                    let c = tri.corners.iter().position(|&x| x == v).unwrap();
                    let p = chart.uv[v];
                    let e1 = (chart.uv[tri.corners[(c + 1) % 3]] - p).normalize();
                    let e2 = (chart.uv[tri.corners[(c + 2) % 3]] - p).normalize();
                    sum += e1.dot(&e2).clamp(-1.0, 1.0).acos();
                }
                if (sum - std::f64::consts::TAU).abs() > 1e-6 {
                    return fail(format!("{name} chart interior vertex {v}: angle sum {sum}"));
                }
            }
        }
        // post chart covers exactly the surviving faces with the new corners
        if rec.post.triangles.len() != after.len() {
            return fail("post chart triangle count".into());
        }
        for (f, new) in &after {
            let Some(t) = rec.post.triangles.iter().find(|t| t.face == *f) else {
                return fail(format!("face {f} missing from post chart"));
            };
            if t.corners.map(|c| rec.post.vertices[c]) != *new {
                return fail(format!("face {f}: post chart corners differ"));
            }
            // (5) UV quality
            let [a, b, c] = t.corners.map(|x| lift(&rec.post.uv[x]));
            let q = quality(&a, &b, &c);
            if !(q > 0.2) {
                return fail(format!("face {f}: UV quality {q}"));
            }
        }
        // boundary shared bit-for-bit
        for (li, &g) in rec.post.vertices.iter().enumerate().skip(rec.post.interior) {
            let Some(pi) = rec.pre.vertices.iter().position(|&x| x == g) else {
                return fail(format!("boundary vertex {g} missing from pre chart"));
            };
            if rec.pre.uv[pi] != rec.post.uv[li] {
                return fail(format!("boundary vertex {g} moved between charts"));
            }
        }
        // apply
        for &f in &removed {
            for v in faces[f].unwrap() {
                incident[v].remove(&f);
            }
            faces[f] = None;
        }
        for (f, new) in after {
            if faces[f].unwrap().contains(&o) {
                incident[s].insert(f);
            }
            faces[f] = Some(new);
        }
        incident[o].clear();
        pos[s] = rec.position;
    }
    let coarse = map.coarse();
    let (vids, fids) = (map.coarse_vertex_ids(), map.coarse_face_ids());
    if faces.iter().flatten().count() != coarse.num_faces() {
        return Err("replayed face count differs from the coarse mesh".into());
    }
    for (f, face) in coarse.faces().iter().enumerate() {
        if faces[fids[f]] != Some(face.map(|v| vids[v])) {
            return Err(format!("coarse face {f} differs from replay"));
        }
    }
    for v in 0..coarse.num_vertices() {
        if coarse.position(v) != pos[vids[v]] {
            return Err(format!("coarse vertex {v} position differs from replay"));
        }
    }
    Ok(map.records().len())
}

/// Point `i` of the R2 low-discrepancy sequence, folded into the triangle.
fn r2_sample(i: usize) -> [f64; 3] {
    let (a1, a2) = (0.754_877_666_246_692_7, 0.569_840_290_998_053_2);
    let (mut a, mut b) = ((0.5 + a1 * i as f64).fract(), (0.5 + a2 * i as f64).fract());
    if a + b > 1.0 {
        (a, b) = (1.0 - a, 1.0 - b);
    }
    [1.0 - a - b, a, b]
}

fn bijective_map_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noisy = icosphere(4).map_positions(|p| p * (1.0 + 0.03 * ((7.0 * p.x).sin() + (5.0 * p.y * p.z).cos())));
    let meshes: Vec<(&str, Mesh)> = vec![
        ("bumpy sphere", bumpy_sphere(3, 0.12)),
        ("torus", torus(48, 24, 1.0, 0.35)),
        ("ellipsoid", ellipsoid(4, 1.0, 0.7, 0.45)),
        ("wavy sphere", noisy),
        ("thin torus", torus(80, 40, 1.0, 0.2)),
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, m) in &meshes {
        let target = m.num_vertices() / 5;
        let d = match decimate(m, target, DecimationPolicy::QslimGreedy, 0) {
            Ok(d) => d,
            Err(e) => return ok(false, format!("{name}: decimation failed: {e}")),
        };
        let map = &d.map;
        // (a) per-record round trips
        let mut worst_rt: f64 = 0.0;
        for rec in map.records() {
            for t in 0..rec.post.triangles.len() {
                for _ in 0..3 {
                    let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
                    if a + b > 1.0 {
                        (a, b) = (1.0 - a, 1.0 - b);
                    }
                    worst_rt = worst_rt.max(record_round_trip_error(rec, t, &[1.0 - a - b, a, b]));
                }
                worst_rt = worst_rt.max(record_round_trip_error(rec, t, &[1.0 / 3.0; 3]));
            }
        }
        // (b) 50 samples per coarse triangle reach every fine face
        let mut hit = HashSet::new();
        let mut failures = 0;
        for f in 0..d.coarse.num_faces() {
            for i in 0..50 {
                match map.map_point(&BarycentricPoint::new(f, r2_sample(i))) {
                    Ok((q, _)) => {
                        hit.insert(q.face);
                    }
                    Err(_) => failures += 1,
                }
            }
        }
        // (c) collapse criteria, re-derived independently
        let replay = replay_collapse_invariants(map);
        let good = worst_rt < 1e-8 && hit.len() == m.num_faces() && failures == 0 && replay.is_ok();
        pass &= good;
        notes.push(format!(
            "{name} {}->{}: rt {worst_rt:.1e}, faces hit by 50 R2 samples/coarse face {}/{}, {}",
            m.num_vertices(),
            d.coarse.num_vertices(),
            hit.len(),
            m.num_faces(),
            match &replay {
                Ok(n) => format!("{n} collapses valid"),
                Err(e) => e.clone(),
            }
        ));
    }
    ok(pass, notes.join("; "))
}

// 4 ---------------------------------------------------------------------

fn learn_loop() -> Outcome {
    let src = bumpy_sphere(4, 0.1);
    let cfg = DatasetConfig { count: 50, min_v: 150, max_v: 300, levels: 2, seed: 21, targets: TargetKind::Loop };
    let ds = match generate_dataset(&src, &cfg) {
        Ok(d) => d,
        Err(e) => return ok(false, format!("dataset: {e}")),
    };
    let out = match train(&ds, &TrainConfig { epochs: 300, seed: 1, ..Default::default() }) {
        Ok(o) => o,
        Err(e) => return ok(false, format!("training: {e}")),
    };
    let mut errors = Vec::new();
    for k in 0..10u64 {
        let target = 150 + 15 * k as usize;
        let d = decimate(&src, target, DecimationPolicy::Random100, 9000 + k).expect("held-out decimation");
        let n = neural_subdivide(&d.coarse, &out.bundle, 2).expect("subdivide").pop().unwrap();
        let l = loop_subdivide(&d.coarse, 2);
        errors.push(mean_vertex_error(n.vertices(), l.vertices()) / l.bounding_box_diagonal() * 100.0);
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let max = errors.iter().cloned().fold(0.0, f64::max);
    ok(
        mean <= 1.0,
        format!(
            "50 pairs x 300 epochs, loss {:.2e} -> {:.2e}; held-out mean error {mean:.3}% (max {max:.3}%) of bbox diagonal (limit 1.0%)",
            out.history[0],
            out.history.last().unwrap()
        ),
    )
}

// 5 ---------------------------------------------------------------------

fn table_ordering() -> Outcome {
    let src = bumpy_sphere(4, 0.1);
    let cfg = DatasetConfig { count: 50, min_v: 300, max_v: 450, levels: 2, seed: 11, targets: TargetKind::Map };
    let ds = match generate_dataset(&src, &cfg) {
        Ok(d) => d,
        Err(e) => return ok(false, format!("dataset: {e}")),
    };
    let out = match train(&ds, &TrainConfig { epochs: 200, seed: 1, ..Default::default() }) {
        Ok(o) => o,
        Err(e) => return ok(false, format!("training: {e}")),
    };
    let mut wins = 0;
    let mut cases = Vec::new();
    for k in 0..10u64 {
        let target = 350 + 10 * k as usize;
        let d = decimate(&src, target, DecimationPolicy::Random100, 7000 + k).expect("held-out decimation");
        let rows = compare_schemes(&d.coarse, &src, Some(&out.bundle), 2, DEFAULT_SAMPLES, k).expect("compare");
        let (l, n) = (rows[0].report.scaled(), rows[2].report.scaled());
        if n.0 < l.0 && n.1 < l.1 {
            wins += 1;
        }
        cases.push(format!("H {:.2}/{:.2} M {:.2}/{:.2}", n.0, l.0, n.1, l.1));
    }
    ok(
        wins >= 8,
        format!("50 pairs x 200 epochs; neural beats Loop on both metrics in {wins}/10 (need 8); neural/loop per case: {}", cases.join(", ")),
    )
}

// 6 ---------------------------------------------------------------------

fn zero_network(dir: &Path) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (scale, tag) in [(1.0, "a"), (0.37, "b")] {
        let mut b = NetworkBundle::zeros();
        b.normalization = Similarity { scale, translation: Vec3::new(0.3, -0.1, 2.0) };
        let ck = dir.join(format!("zero_{tag}.nsd"));
        save_checkpoint(&b, &ck).unwrap();
        for (name, m) in [("bumpy", bumpy_sphere(2, 0.1)), ("torus", torus(12, 8, 1.0, 0.3))] {
            let input = dir.join(format!("{name}.obj"));
            save_obj(&m, &input).unwrap();
            for levels in ["1", "3"] {
                let (n, c) = (dir.join("neural.obj"), dir.join("midpoint.obj"));
                let o1 = ns(&["subdivide", "--input", input.to_str().unwrap(), "--checkpoint", ck.to_str().unwrap(), "--levels", levels, "--output", n.to_str().unwrap()]);
                let o2 = ns(&["subdivide-classic", "--scheme", "midpoint", "--levels", levels, "--input", input.to_str().unwrap(), "--output", c.to_str().unwrap()]);
                let same = o1.status.success() && o2.status.success() && std::fs::read(&n).unwrap() == std::fs::read(&c).unwrap();
                pass &= same;
                if !same {
                    notes.push(format!("{name} L{levels} scale {scale} differs"));
                }
            }
        }
    }
    ok(pass, if notes.is_empty() { "byte-identical OBJ output for 2 meshes, levels 1 and 3, two normalizations".into() } else { notes.join("; ") })
}

// 7 ---------------------------------------------------------------------

fn topology_conservation() -> Outcome {
    let meshes = [
        tetrahedron(),
        cube(),
        octahedron(),
        icosahedron(),
        icosphere(1),
        icosphere(2),
        torus(12, 8, 1.0, 0.3),
        torus(16, 10, 1.0, 0.4),
        bumpy_sphere(1, 0.2),
        ellipsoid(1, 1.0, 0.5, 0.3),
    ];
    let bundle = NetworkBundle::random(3);
    for (i, m) in meshes.iter().enumerate() {
        let levels = neural_subdivide(m, &bundle, 3).expect("subdivide");
        let mut prev = m.clone();
        for (l, out) in levels.iter().enumerate() {
            let expect = (prev.num_vertices() + prev.num_edges(), 4 * prev.num_faces());
            if (out.num_vertices(), out.num_faces()) != expect || out.euler_characteristic() != m.euler_characteristic() {
                return ok(false, format!("mesh {i} level {}: V {} F {} chi {}", l + 1, out.num_vertices(), out.num_faces(), out.euler_characteristic()));
            }
            for scheme in [Scheme::Loop, Scheme::Butterfly, Scheme::Midpoint] {
                let c = subdivide(m, scheme, l + 1);
                if c.faces() != out.faces() {
                    return ok(false, format!("mesh {i} level {}: {scheme} connectivity differs", l + 1));
                }
            }
            prev = out.clone();
        }
    }
    ok(true, "10 meshes x levels 1-3: V+E vertices, 4F faces, Euler characteristic kept (neural and classic)")
}

// 8 ---------------------------------------------------------------------

fn files_under(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn determinism(dir: &Path) -> Outcome {
    let src = dir.join("det_src.obj");
    save_obj(&bumpy_sphere(3, 0.1), &src).unwrap();
    let mut ckpts = Vec::new();
    for run in ["r1", "r2"] {
        let data = dir.join(format!("data_{run}"));
        let ck = dir.join(format!("ck_{run}.nsd"));
        let g = ns(&["gen-data", "--input", src.to_str().unwrap(), "--count", "6", "--min-v", "100", "--max-v", "160", "--seed", "42", "--out-dir", data.to_str().unwrap()]);
        let t = ns(&["train", "--data", data.to_str().unwrap(), "--epochs", "8", "--seed", "5", "--checkpoint", ck.to_str().unwrap()]);
        if !g.status.success() || !t.status.success() {
            return ok(false, format!("{run}: gen-data exit {:?}, train exit {:?}", g.status.code(), t.status.code()));
        }
        ckpts.push(ck);
    }
    let (a, b) = (dir.join("data_r1"), dir.join("data_r2"));
    let fa = files_under(&a);
    let fb = files_under(&b);
    let same_names =
        fa.iter().map(|p| p.strip_prefix(&a).unwrap().to_path_buf()).collect::<Vec<_>>() == fb.iter().map(|p| p.strip_prefix(&b).unwrap().to_path_buf()).collect::<Vec<_>>();
    let same_data = same_names && fa.iter().zip(&fb).all(|(x, y)| std::fs::read(x).unwrap() == std::fs::read(y).unwrap());
    let same_ck = std::fs::read(&ckpts[0]).unwrap() == std::fs::read(&ckpts[1]).unwrap();
    ok(same_data && same_ck, format!("{} dataset files identical: {same_data}; checkpoints identical: {same_ck}", fa.len()))
}

fn main() {
    let dir = tempfile::tempdir().expect("tempdir");
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(u32, &str, u64, Check)> = vec![
        (7, "topology conservation", 60, Box::new(topology_conservation)),
        (6, "zero-network reduction", 60, Box::new(|| zero_network(dir.path()))),
        (1, "rigid invariance", 60, Box::new(rigid_invariance)),
        (2, "gradient oracle", 120, Box::new(gradient_oracle)),
        (3, "bijective map suite", 300, Box::new(bijective_map_suite)),
        (8, "determinism", 7200, Box::new(|| determinism(dir.path()))),
        (4, "learn Loop", 1800, Box::new(learn_loop)),
        (5, "Loop ordering", 7200, Box::new(table_ordering)),
    ];
    let mut failed = 0;
    for (n, name, limit, check) in criteria {
        let t = Instant::now();
        let o = check();
        let el = t.elapsed();
        let pass = o.pass && within(el, limit);
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n} ({name}): {} [{:.1}s, limit {limit}s] {}",
            if pass { "PASS" } else { "FAIL" },
            el.as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
