//! Training pairs and their on-disk layout.
//!
//! ```text
//! <dir>/manifest.txt
//! <dir>/pair_0000/coarse.obj
//! <dir>/pair_0000/targets_L1.txt      one "x y z" line per level-1 vertex
//! <dir>/pair_0000/targets_L2.txt
//! <dir>/pair_0000/preimages_L1.txt    one "face a b c" line (map targets only)
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TrainError;
use crate::classic::loop_subdivide;
use crate::mesh::{load_obj, midpoint_topology_subdivide, normalize_unit_box, save_obj, BarycentricPoint, Mesh, Similarity, Vec3};
use crate::selfparam::{decimate, mesh_hash, BijectiveMap, DecimationPolicy};

/// Attempts per pair before generation gives up.
pub const PAIR_ATTEMPTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Images of the subdivided coarse mesh on the source through the map.
    Map,
    /// Classic Loop subdivision of the coarse mesh.
    Loop,
}

impl FromStr for TargetKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "map" => Ok(Self::Map),
            "loop" => Ok(Self::Loop),
            other => Err(format!("unknown target kind '{other}' (expected map or loop)")),
        }
    }
}

impl std::fmt::Display for TargetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Map => "map",
            Self::Loop => "loop",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub count: usize,
    pub min_v: usize,
    pub max_v: usize,
    pub levels: usize,
    pub seed: u64,
    pub targets: TargetKind,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { count: 200, min_v: 150, max_v: 300, levels: 2, seed: 0, targets: TargetKind::Map }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub coarse: Mesh,
    /// Target positions of levels `1..=L`, one per vertex of the midpoint
    /// connectivity of that level.
    pub targets: Vec<Vec<Vec3>>,
    /// Points on the source whose positions are the targets (map targets only).
    pub preimages: Vec<Vec<BarycentricPoint>>,
    /// Decimation seed of this pair.
    pub seed: u64,
    pub reached_target: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub source_hash: String,
    /// Maps the source into the coordinates the pairs live in.
    pub normalization: Similarity,
    pub pairs: Vec<TrainingPair>,
}

/// Per-level points on the coarse mesh for every vertex of the midpoint
/// refinements `1..=levels`.
fn coarse_points(coarse: &Mesh, levels: usize) -> Vec<Vec<BarycentricPoint>> {
    // corner barycentrics of every current face within its coarse face
    let mut face_corners: Vec<(usize, [[f64; 3]; 3])> =
        (0..coarse.num_faces()).map(|f| (f, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])).collect();
    let mut mesh = coarse.clone();
    let mut out: Vec<Vec<BarycentricPoint>> = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (fine, parents) = midpoint_topology_subdivide(&mesh);
        let nv = mesh.num_vertices();
        let lift = |p: &BarycentricPoint| {
            let (cf, corners) = &face_corners[p.face];
            let mut c = [0.0; 3];
            for (k, w) in p.coords.iter().enumerate() {
                for i in 0..3 {
                    c[i] += w * corners[k][i];
                }
            }
            BarycentricPoint { face: *cf, coords: c }
        };
        let points: Vec<BarycentricPoint> = (0..fine.num_vertices())
            .map(|v| match out.last() {
                Some(prev) if v < nv => prev[v],
                _ => lift(&parents[v]),
            })
            .collect();
        let mut next = Vec::with_capacity(4 * face_corners.len());
        for (cf, [a, b, c]) in &face_corners {
            let mid = |x: &[f64; 3], y: &[f64; 3]| [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1]), 0.5 * (x[2] + y[2])];
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            next.push((*cf, [*a, ab, ca]));
            next.push((*cf, [ab, *b, bc]));
            next.push((*cf, [ca, bc, *c]));
            next.push((*cf, [ab, bc, ca]));
        }
        face_corners = next;
        out.push(points);
        mesh = fine;
    }
    out
}

fn map_targets(
    map: &BijectiveMap,
    levels: usize,
) -> Result<(Vec<Vec<Vec3>>, Vec<Vec<BarycentricPoint>>), TrainError> {
    let mut targets = Vec::with_capacity(levels);
    let mut pre = Vec::with_capacity(levels);
    for pts in coarse_points(map.coarse(), levels) {
        let mut t = Vec::with_capacity(pts.len());
        let mut b = Vec::with_capacity(pts.len());
        for p in &pts {
            let (q, pos) = map.map_point(p)?;
            t.push(pos);
            b.push(q);
        }
        targets.push(t);
        pre.push(b);
    }
    Ok((targets, pre))
}

fn loop_targets(coarse: &Mesh, levels: usize) -> Vec<Vec<Vec3>> {
    let mut m = coarse.clone();
    (0..levels)
        .map(|_| {
            m = loop_subdivide(&m, 1);
            m.vertices().to_vec()
        })
        .collect()
}

/// Random decimations of `source` (normalized to the unit box first) with
/// per-level targets. Deterministic in the source and `config`.
pub fn generate_dataset(source: &Mesh, config: &DatasetConfig) -> Result<Dataset, TrainError> {
    if config.min_v < 4 || config.min_v > config.max_v {
        return Err(TrainError::Config(format!("invalid vertex range [{}, {}]", config.min_v, config.max_v)));
    }
    if config.levels == 0 {
        return Err(TrainError::Config("levels must be at least 1".into()));
    }
    if config.max_v > source.num_vertices() {
        warn!("max_v {} exceeds the source's {} vertices", config.max_v, source.num_vertices());
    }
    let (normalized, normalization) = normalize_unit_box(source)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pairs = Vec::with_capacity(config.count);
    for i in 0..config.count {
        let mut attempt = 0;
        let pair = loop {
            if attempt == PAIR_ATTEMPTS {
                return Err(TrainError::PairRetries { attempts: PAIR_ATTEMPTS });
            }
            attempt += 1;
            let seed: u64 = rng.gen();
            let target = rng.gen_range(config.min_v..=config.max_v);
            let d = decimate(&normalized, target, DecimationPolicy::Random100, seed)?;
            if !d.reached_target {
                warn!("pair {i}: decimation stopped at {} vertices (target {target})", d.coarse.num_vertices());
            }
            let built = match config.targets {
                TargetKind::Map => map_targets(&d.map, config.levels),
                TargetKind::Loop => Ok((loop_targets(&d.coarse, config.levels), Vec::new())),
            };
            match built {
                Ok((targets, preimages)) => {
                    break TrainingPair { coarse: d.coarse, targets, preimages, seed, reached_target: d.reached_target };
                }
                Err(e) => warn!("pair {i}: dropped ({e}); regenerating"),
            }
        };
        debug!("pair {i}: {} coarse vertices", pair.coarse.num_vertices());
        pairs.push(pair);
    }
    Ok(Dataset { config: config.clone(), source_hash: mesh_hash(source), normalization, pairs })
}

fn write_points(path: &Path, pts: &[Vec3]) -> std::io::Result<()> {
    let mut s = String::with_capacity(pts.len() * 48);
    for p in pts {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    std::fs::write(path, s)
}

fn write_preimages(path: &Path, pts: &[BarycentricPoint]) -> std::io::Result<()> {
    let mut s = String::with_capacity(pts.len() * 56);
    for p in pts {
        let _ = writeln!(s, "{} {} {} {}", p.face, p.coords[0], p.coords[1], p.coords[2]);
    }
    std::fs::write(path, s)
}

pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<(), TrainError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let c = &dataset.config;
    let n = &dataset.normalization;
    let mut m = String::from("neusub-dataset 1\n");
    let _ = writeln!(m, "seed {}", c.seed);
    let _ = writeln!(m, "source_sha256 {}", dataset.source_hash);
    let _ = writeln!(m, "count {}", c.count);
    let _ = writeln!(m, "min_v {}", c.min_v);
    let _ = writeln!(m, "max_v {}", c.max_v);
    let _ = writeln!(m, "levels {}", c.levels);
    let _ = writeln!(m, "targets {}", c.targets);
    let _ = writeln!(m, "decimation random100");
    let _ = writeln!(m, "normalization {} {} {} {}", n.scale, n.translation.x, n.translation.y, n.translation.z);
    for (i, p) in dataset.pairs.iter().enumerate() {
        let _ = writeln!(m, "pair {i:04} seed {} vertices {} reached_target {}", p.seed, p.coarse.num_vertices(), p.reached_target);
        let pd = dir.join(format!("pair_{i:04}"));
        std::fs::create_dir_all(&pd)?;
        save_obj(&p.coarse, pd.join("coarse.obj"))?;
        for (l, t) in p.targets.iter().enumerate() {
            write_points(&pd.join(format!("targets_L{}.txt", l + 1)), t)?;
        }
        for (l, b) in p.preimages.iter().enumerate() {
            write_preimages(&pd.join(format!("preimages_L{}.txt", l + 1)), b)?;
        }
    }
    std::fs::write(dir.join("manifest.txt"), m)?;
    Ok(())
}

fn bad(path: &Path, message: impl Into<String>) -> TrainError {
    TrainError::Dataset { path: path.display().to_string(), message: message.into() }
}

fn read_floats<const N: usize>(path: &Path) -> Result<Vec<[f64; N]>, TrainError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(path, format!("line {}: cannot parse '{t}'", i + 1))))
                .collect::<Result<_, _>>()?;
            v.try_into().map_err(|_| bad(path, format!("line {}: expected {N} values", i + 1)))
        })
        .collect()
}

pub fn read_dataset(dir: impl AsRef<Path>) -> Result<Dataset, TrainError> {
    let dir = dir.as_ref();
    let mpath = dir.join("manifest.txt");
    let text = std::fs::read_to_string(&mpath)?;
    let mut lines = text.lines();
    if lines.next() != Some("neusub-dataset 1") {
        return Err(bad(&mpath, "not a dataset manifest"));
    }
    let mut config = DatasetConfig::default();
    let mut source_hash = String::new();
    let mut normalization = Similarity::identity();
    let mut pair_meta = Vec::new();
    for (i, line) in lines.enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = || bad(&mpath, format!("line {}: malformed '{line}'", i + 2));
        let num = |t: Option<&&str>| -> Result<u64, TrainError> { t.and_then(|t| t.parse().ok()).ok_or_else(err) };
        match toks.first().copied() {
            Some("seed") => config.seed = num(toks.get(1))?,
            Some("source_sha256") => source_hash = toks.get(1).ok_or_else(err)?.to_string(),
            Some("count") => config.count = num(toks.get(1))? as usize,
            Some("min_v") => config.min_v = num(toks.get(1))? as usize,
            Some("max_v") => config.max_v = num(toks.get(1))? as usize,
            Some("levels") => config.levels = num(toks.get(1))? as usize,
            Some("targets") => config.targets = toks.get(1).ok_or_else(err)?.parse().map_err(|_| err())?,
            Some("normalization") => {
                let v: Vec<f64> = toks[1..].iter().map(|t| t.parse().map_err(|_| err())).collect::<Result<_, _>>()?;
                if v.len() != 4 {
                    return Err(err());
                }
                normalization = Similarity { scale: v[0], translation: Vec3::new(v[1], v[2], v[3]) };
            }
            Some("pair") => {
                let seed = num(toks.get(3))?;
                let reached = toks.get(7).map(|t| *t == "true").ok_or_else(err)?;
                pair_meta.push((seed, reached));
            }
            Some("decimation") | None => {}
            Some(_) => return Err(err()),
        }
    }
    if pair_meta.len() != config.count {
        return Err(bad(&mpath, format!("{} pairs listed, count says {}", pair_meta.len(), config.count)));
    }
    let mut pairs = Vec::with_capacity(pair_meta.len());
    for (i, (seed, reached_target)) in pair_meta.into_iter().enumerate() {
        let pd = dir.join(format!("pair_{i:04}"));
        let coarse = load_obj(pd.join("coarse.obj"))?;
        let mut targets = Vec::with_capacity(config.levels);
        let mut preimages = Vec::new();
        let mut expected = coarse.num_vertices() + coarse.num_edges();
        let (mut edges, mut faces) = (coarse.num_edges(), coarse.num_faces());
        for l in 1..=config.levels {
            let tpath = pd.join(format!("targets_L{l}.txt"));
            let t: Vec<Vec3> = read_floats::<3>(&tpath)?.into_iter().map(Vec3::from).collect();
            if t.len() != expected {
                return Err(bad(&tpath, format!("{} targets, expected {expected}", t.len())));
            }
            targets.push(t);
            let ppath = pd.join(format!("preimages_L{l}.txt"));
            if ppath.exists() {
                let b = read_floats::<4>(&ppath)?
                    .into_iter()
                    .map(|v| BarycentricPoint { face: v[0] as usize, coords: [v[1], v[2], v[3]] })
                    .collect();
                preimages.push(b);
            }
            // V' = V + E, E' = 2E + 3F, F' = 4F
            edges = 2 * edges + 3 * faces;
            faces *= 4;
            expected += edges;
        }
        pairs.push(TrainingPair { coarse, targets, preimages, seed, reached_target });
    }
    Ok(Dataset { config, source_hash, normalization, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::bumpy_sphere;

    fn small_config(targets: TargetKind) -> DatasetConfig {
        DatasetConfig { count: 3, min_v: 60, max_v: 90, levels: 2, seed: 17, targets }
    }

    #[test]
    fn pairs_have_level_sized_targets_on_the_source() {
        let src = bumpy_sphere(3, 0.1);
        let ds = generate_dataset(&src, &small_config(TargetKind::Map)).unwrap();
        let (normalized, _) = normalize_unit_box(&src).unwrap();
        assert_eq!(ds.pairs.len(), 3);
        for p in &ds.pairs {
            let n = p.coarse.num_vertices();
            assert!((60..=90).contains(&n));
            let l1 = n + p.coarse.num_edges();
            assert_eq!(p.targets[0].len(), l1);
            let (f1, e1) = (4 * p.coarse.num_faces(), 2 * p.coarse.num_edges() + 3 * p.coarse.num_faces());
            assert_eq!(p.targets[1].len(), l1 + e1);
            assert_eq!(f1, 4 * p.coarse.num_faces());
            for (t, b) in p.targets.iter().flatten().zip(p.preimages.iter().flatten()) {
                assert!((b.position(&normalized) - t).norm() < 1e-10);
            }
            // even vertices keep their targets across levels
            assert_eq!(&p.targets[1][..l1], &p.targets[0][..]);
        }
    }

    #[test]
    fn one_level_gives_v_plus_e_targets() {
        let src = bumpy_sphere(2, 0.1);
        let cfg = DatasetConfig { count: 1, min_v: 50, max_v: 50, levels: 1, seed: 1, targets: TargetKind::Loop };
        let ds = generate_dataset(&src, &cfg).unwrap();
        let p = &ds.pairs[0];
        assert_eq!(p.targets.len(), 1);
        assert_eq!(p.targets[0].len(), p.coarse.num_vertices() + p.coarse.num_edges());
        assert!(p.preimages.is_empty());
    }

    #[test]
    fn same_seed_same_bytes() {
        let src = bumpy_sphere(3, 0.1);
        let cfg = small_config(TargetKind::Map);
        let a = generate_dataset(&src, &cfg).unwrap();
        let b = generate_dataset(&src, &cfg).unwrap();
        assert_eq!(a, b);
        let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_dataset(&a, da.path()).unwrap();
        write_dataset(&b, db.path()).unwrap();
        for entry in walk(da.path()) {
            let rel = entry.strip_prefix(da.path()).unwrap();
            assert_eq!(std::fs::read(&entry).unwrap(), std::fs::read(db.path().join(rel)).unwrap(), "{rel:?}");
        }
        let back = read_dataset(da.path()).unwrap();
        assert_eq!(back, a);
    }

    fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
        let mut out = Vec::new();
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                out.extend(walk(&p));
            } else {
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn rejects_bad_ranges() {
        let src = bumpy_sphere(1, 0.1);
        let mut cfg = small_config(TargetKind::Map);
        cfg.min_v = 100;
        cfg.max_v = 50;
        assert!(matches!(generate_dataset(&src, &cfg), Err(TrainError::Config(_))));
    }
}
