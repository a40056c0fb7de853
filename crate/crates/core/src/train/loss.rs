use super::TrainError;
use crate::mesh::Vec3;

/// Mean over levels of the mean squared per-vertex distance, with its
/// gradient with respect to every predicted position.
pub fn loss_l2_levels(predicted: &[Vec<Vec3>], targets: &[Vec<Vec3>]) -> Result<(f64, Vec<Vec<Vec3>>), TrainError> {
    if predicted.len() != targets.len() || predicted.is_empty() {
        return Err(TrainError::Shape(format!("{} predicted levels vs {} target levels", predicted.len(), targets.len())));
    }
    let levels = predicted.len() as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(predicted.len());
    for (l, (p, t)) in predicted.iter().zip(targets).enumerate() {
        if p.len() != t.len() {
            return Err(TrainError::Shape(format!("level {}: {} predictions vs {} targets", l + 1, p.len(), t.len())));
        }
        let n = p.len() as f64;
        let mut sum = 0.0;
        let mut g = Vec::with_capacity(p.len());
        for (x, y) in p.iter().zip(t) {
            let d = x - y;
            sum += d.norm_squared();
            g.push(d * (2.0 / (n * levels)));
        }
        loss += sum / n;
        grads.push(g);
    }
    Ok((loss / levels, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_predictions_have_zero_loss() {
        let t = vec![vec![Vec3::new(1.0, 2.0, 3.0); 5], vec![Vec3::zeros(); 9]];
        let (l, g) = loss_l2_levels(&t, &t).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().flatten().all(|v| *v == Vec3::zeros()));
    }

    #[test]
    fn single_offset_vertex() {
        let n = 40;
        let t = vec![vec![Vec3::zeros(); n]];
        let mut p = t.clone();
        p[0][7].x = 0.3;
        let (l, _) = loss_l2_levels(&p, &t).unwrap();
        assert!((l - 0.09 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut rv = |n: usize| (0..n).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen())).collect::<Vec<_>>();
        let p = vec![rv(6), rv(11)];
        let t = vec![rv(6), rv(11)];
        let (_, g) = loss_l2_levels(&p, &t).unwrap();
        let h = 1e-6;
        for l in 0..2 {
            for v in 0..p[l].len() {
                for i in 0..3 {
                    let mut a = p.clone();
                    a[l][v][i] += h;
                    let mut b = p.clone();
                    b[l][v][i] -= h;
                    let fd = (loss_l2_levels(&a, &t).unwrap().0 - loss_l2_levels(&b, &t).unwrap().0) / (2.0 * h);
                    assert!((fd - g[l][v][i]).abs() <= 1e-6 * fd.abs().max(1e-3));
                }
            }
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let t = vec![vec![Vec3::zeros(); 3]];
        assert!(loss_l2_levels(&[vec![Vec3::zeros(); 2]], &t).is_err());
        assert!(loss_l2_levels(&[], &[]).is_err());
    }
}
