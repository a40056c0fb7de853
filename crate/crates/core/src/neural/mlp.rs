use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{NeuralError, HIDDEN_DIM};

/// `in → 32 → 32 → 32` perceptron with ReLU hidden layers and a linear
/// output layer. Also used as the container for its own gradients and
/// optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub w: [DMatrix<f64>; 3],
    pub b: [DVector<f64>; 3],
}

/// Intermediate values of a batched forward pass; samples are columns.
#[derive(Debug, Clone)]
pub struct MlpTape {
    pub x: DMatrix<f64>,
    z1: DMatrix<f64>,
    a1: DMatrix<f64>,
    z2: DMatrix<f64>,
    a2: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl MlpTape {
    /// Whether both hidden layers have the same ReLU on/off pattern as `other`.
    pub fn same_activation_pattern(&self, other: &MlpTape) -> bool {
        let same = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| (*x > 0.0) == (*y > 0.0))
        };
        same(&self.z1, &other.z1) && same(&self.z2, &other.z2)
    }
}

fn relu(z: &DMatrix<f64>) -> DMatrix<f64> {
    z.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Gradient through ReLU; the subgradient at exactly 0 is 0.
fn relu_back(dz: &mut DMatrix<f64>, z: &DMatrix<f64>) {
    for (d, &v) in dz.iter_mut().zip(z.iter()) {
        if !(v > 0.0) {
            *d = 0.0;
        }
    }
}

fn affine(w: &DMatrix<f64>, b: &DVector<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = w * x;
    for mut col in z.column_iter_mut() {
        col += b;
    }
    z
}

impl MlpParams {
    pub fn zeros(input: usize) -> Self {
        Self::zeros_with(input, HIDDEN_DIM, HIDDEN_DIM)
    }

    fn zeros_with(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            w: [DMatrix::zeros(hidden, input), DMatrix::zeros(hidden, hidden), DMatrix::zeros(output, hidden)],
            b: [DVector::zeros(hidden), DVector::zeros(hidden), DVector::zeros(output)],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng>(input: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input);
        for w in &mut p.w {
            let limit = (6.0 / (w.nrows() + w.ncols()) as f64).sqrt();
            // row-major draw order, so the stream does not depend on storage
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    w[(r, c)] = rng.gen_range(-limit..=limit);
                }
            }
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w[2].nrows()
    }

    /// `(in, hidden, out)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.input_dim(), self.w[0].nrows(), self.output_dim())
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w: self.w.clone().map(|w| DMatrix::zeros(w.nrows(), w.ncols())),
            b: self.b.clone().map(|b| DVector::zeros(b.len())),
        }
    }

    pub fn num_params(&self) -> usize {
        self.w.iter().map(|w| w.len()).sum::<usize>() + self.b.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Parameter storage as six slices: W₁, b₁, W₂, b₂, W₃, b₃.
    pub fn slices(&self) -> [&[f64]; 6] {
        [
            self.w[0].as_slice(),
            self.b[0].as_slice(),
            self.w[1].as_slice(),
            self.b[1].as_slice(),
            self.w[2].as_slice(),
            self.b[2].as_slice(),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 6] {
        let [w0, w1, w2] = &mut self.w;
        let [b0, b1, b2] = &mut self.b;
        [w0.as_mut_slice(), b0.as_mut_slice(), w1.as_mut_slice(), b1.as_mut_slice(), w2.as_mut_slice(), b2.as_mut_slice()]
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// `self += other`.
    pub fn accumulate(&mut self, other: &Self) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Batched forward pass over the columns of `x`.
    pub fn forward(&self, x: DMatrix<f64>) -> MlpTape {
        debug_assert_eq!(x.nrows(), self.input_dim());
        let z1 = affine(&self.w[0], &self.b[0], &x);
        let a1 = relu(&z1);
        let z2 = affine(&self.w[1], &self.b[1], &a1);
        let a2 = relu(&z2);
        let y = affine(&self.w[2], &self.b[2], &a2);
        MlpTape { x, z1, a1, z2, a2, y }
    }

    /// Adds parameter gradients for upstream gradient `dy` into `grads` and
    /// returns the gradient with respect to the input when requested.
    pub fn backward(&self, tape: &MlpTape, dy: &DMatrix<f64>, grads: &mut Self, want_dx: bool) -> Option<DMatrix<f64>> {
        grads.w[2].gemm(1.0, dy, &tape.a2.transpose(), 1.0);
        grads.b[2] += dy.column_sum();
        let mut dz2 = self.w[2].transpose() * dy;
        relu_back(&mut dz2, &tape.z2);
        grads.w[1].gemm(1.0, &dz2, &tape.a1.transpose(), 1.0);
        grads.b[1] += dz2.column_sum();
        let mut dz1 = self.w[1].transpose() * &dz2;
        relu_back(&mut dz1, &tape.z1);
        grads.w[0].gemm(1.0, &dz1, &tape.x.transpose(), 1.0);
        grads.b[0] += dz1.column_sum();
        want_dx.then(|| self.w[0].transpose() * dz1)
    }

    /// Single-sample forward pass.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.check_input(x)?;
        Ok(self.forward(DMatrix::from_column_slice(x.len(), 1, x)).y.as_slice().to_vec())
    }

    /// Single-sample forward and backward pass: returns the output, the
    /// parameter gradients and the input gradient for upstream `dy`.
    pub fn apply_with_grad(&self, x: &[f64], dy: &[f64]) -> Result<(Vec<f64>, Self, Vec<f64>), NeuralError> {
        self.check_input(x)?;
        if dy.len() != self.output_dim() {
            return Err(NeuralError::Dimension { expected: self.output_dim(), found: dy.len() });
        }
        let tape = self.forward(DMatrix::from_column_slice(x.len(), 1, x));
        let mut grads = self.zeros_like();
        let dx = self.backward(&tape, &DMatrix::from_column_slice(dy.len(), 1, dy), &mut grads, true).unwrap();
        Ok((tape.y.as_slice().to_vec(), grads, dx.as_slice().to_vec()))
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NeuralError> {
        if x.len() != self.input_dim() {
            return Err(NeuralError::Dimension { expected: self.input_dim(), found: x.len() });
        }
        Ok(())
    }
}
