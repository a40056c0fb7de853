use std::path::PathBuf;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::dataset::Dataset;
use super::loss::loss_l2_levels;
use super::TrainError;
use crate::neural::pipeline::{backward, forward};
use crate::neural::{save_checkpoint, NetworkBundle, Topology};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Seeds both the initialization and the per-epoch shuffles.
    pub seed: u64,
    /// Write the current bundle to `checkpoint` every this many epochs.
    pub checkpoint_every: Option<usize>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 700, lr: AdamState::DEFAULT_LR, seed: 0, checkpoint_every: None, checkpoint: None }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bundle: NetworkBundle,
    /// Mean loss over the pairs of each epoch, evaluated before each update.
    pub history: Vec<f64>,
}

/// Bundle initialized for `dataset`: seeded weights, the dataset's level
/// count and normalization.
pub fn initial_bundle(dataset: &Dataset, seed: u64) -> NetworkBundle {
    let mut b = NetworkBundle::random(seed);
    b.levels = dataset.config.levels;
    b.normalization = dataset.normalization;
    b
}

/// Per-pair ADAM training over `dataset`.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_from(dataset, initial_bundle(dataset, config.seed), config)
}

pub fn train_from(dataset: &Dataset, mut bundle: NetworkBundle, config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    if dataset.pairs.is_empty() {
        return Err(TrainError::Config("dataset has no pairs".into()));
    }
    let topologies: Vec<Topology> = dataset.pairs.iter().map(|p| Topology::new(&p.coarse, p.targets.len())).collect();
    let mut adam = AdamState::new(&bundle, config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed);
    let mut order: Vec<usize> = (0..dataset.pairs.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut last_good = bundle.clone();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let pair = &dataset.pairs[i];
            let topo = &topologies[i];
            let fwd = match forward(&bundle, topo, pair.coarse.vertices(), 1.0, None) {
                Ok(f) => f,
                Err(_) => return Err(TrainError::NonFiniteLoss { epoch, last_good: Box::new(last_good) }),
            };
            let (loss, dl) = loss_l2_levels(&fwd.positions[1..], &pair.targets)?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, last_good: Box::new(last_good) });
            }
            total += loss;
            let grads = backward(&bundle, topo, &fwd, &dl);
            adam.step(&mut bundle, &grads)?;
        }
        let mean = total / order.len() as f64;
        history.push(mean);
        last_good = bundle.clone();
        info!("epoch {epoch}: loss {mean:.6e}");
        if let (Some(every), Some(path)) = (config.checkpoint_every, &config.checkpoint) {
            if every > 0 && (epoch + 1) % every == 0 {
                save_checkpoint(&bundle, path)?;
            }
        }
    }
    Ok(TrainOutcome { bundle, history })
}
