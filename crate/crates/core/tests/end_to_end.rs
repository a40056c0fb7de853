use neusub::classic::{subdivide, Scheme};
use neusub::mesh::shapes::bumpy_sphere;
use neusub::mesh::normalize_unit_box;
use neusub::neural::{load_checkpoint, neural_subdivide, save_checkpoint};
use neusub::selfparam::{decimate, DecimationPolicy};
use neusub::train::{generate_dataset, read_dataset, train, write_dataset, DatasetConfig, TargetKind, TrainConfig};

#[test]
fn dataset_to_checkpoint_to_subdivision() {
    let src = bumpy_sphere(3, 0.1);
    let cfg = DatasetConfig { count: 3, min_v: 80, max_v: 120, levels: 2, seed: 8, targets: TargetKind::Map };
    let ds = generate_dataset(&src, &cfg).unwrap();

    // map targets lie on the normalized source
    let (normalized, sim) = normalize_unit_box(&src).unwrap();
    assert_eq!(sim, ds.normalization);
    for pair in &ds.pairs {
        for (t, b) in pair.targets.iter().flatten().zip(pair.preimages.iter().flatten()) {
            assert!(b.is_valid());
            assert!((b.position(&normalized) - t).norm() < 1e-10);
        }
    }

    let dir = tempfile::tempdir().unwrap();
    write_dataset(&ds, dir.path()).unwrap();
    let back = read_dataset(dir.path()).unwrap();
    assert_eq!(back, ds);

    let out = train(&back, &TrainConfig { epochs: 5, seed: 2, ..Default::default() }).unwrap();
    assert_eq!(out.history.len(), 5);
    assert!(out.history.iter().all(|l| l.is_finite()));
    let ck = dir.path().join("b.nsd");
    save_checkpoint(&out.bundle, &ck).unwrap();
    let bundle = load_checkpoint(&ck).unwrap();
    assert_eq!(bundle, out.bundle);
    assert_eq!(bundle.levels, 2);

    // inference on a raw-space held-out decimation
    let d = decimate(&src, 100, DecimationPolicy::Random100, 77).unwrap();
    let levels = neural_subdivide(&d.coarse, &bundle, 2).unwrap();
    assert_eq!(levels.len(), 2);
    let mid = subdivide(&d.coarse, Scheme::Midpoint, 2);
    assert_eq!(levels[1].faces(), mid.faces());
    // the result stays near the source surface scale
    let ratio = levels[1].bounding_box_diagonal() / src.bounding_box_diagonal();
    assert!((0.8..1.2).contains(&ratio), "{ratio}");
}

#[test]
fn loop_targets_match_classic_loop() {
    let src = bumpy_sphere(2, 0.1);
    let cfg = DatasetConfig { count: 2, min_v: 50, max_v: 70, levels: 2, seed: 1, targets: TargetKind::Loop };
    let ds = generate_dataset(&src, &cfg).unwrap();
    for p in &ds.pairs {
        assert_eq!(p.targets[1], subdivide(&p.coarse, Scheme::Loop, 2).vertices());
        assert_eq!(p.targets[0], subdivide(&p.coarse, Scheme::Loop, 1).vertices());
    }
}
