use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ReservoirError, ReservoirGenome, Result};
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipWeights {
    pub from: usize,
    pub to: usize,
    /// `layer_sizes[to] x layer_sizes[from]`
    pub matrix: Matrix,
}

/// Fixed random weights of a stacked reservoir.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirWeights {
    /// `layer_sizes[0] x n_inputs`
    pub input_matrix: Matrix,
    /// One square matrix per layer.
    pub recurrent: Vec<Matrix>,
    /// `inter_layer[l]` feeds layer `l + 1` from layer `l`.
    pub inter_layer: Vec<Matrix>,
    pub skips: Vec<SkipWeights>,
    pub biases: Vec<Vec<f64>>,
}

impl ReservoirWeights {
    pub fn n_inputs(&self) -> usize {
        self.input_matrix.cols()
    }

    /// Non-zero connections across every matrix (biases excluded).
    pub fn connection_count(&self) -> usize {
        self.input_matrix.count_nonzero()
            + self.recurrent.iter().map(Matrix::count_nonzero).sum::<usize>()
            + self.inter_layer.iter().map(Matrix::count_nonzero).sum::<usize>()
            + self.skips.iter().map(|s| s.matrix.count_nonzero()).sum::<usize>()
    }

    /// Checks every matrix shape against the genome.
    pub fn check_shapes(&self, genome: &ReservoirGenome) -> Result<()> {
        let sizes = &genome.layer_sizes;
        let mismatch = |what: &str| Err(ReservoirError::InvalidWeights(what.to_string()));
        if self.input_matrix.rows() != sizes[0] {
            return mismatch("input matrix rows");
        }
        if self.recurrent.len() != sizes.len()
            || self.recurrent.iter().zip(sizes).any(|(m, &n)| m.rows() != n || m.cols() != n)
        {
            return mismatch("recurrent matrices");
        }
        if self.inter_layer.len() + 1 != sizes.len()
            || self.inter_layer.iter().enumerate().any(|(l, m)| m.rows() != sizes[l + 1] || m.cols() != sizes[l])
        {
            return mismatch("inter-layer matrices");
        }
        if self.biases.len() != sizes.len() || self.biases.iter().zip(sizes).any(|(b, &n)| b.len() != n) {
            return mismatch("biases");
        }
        let expected: Vec<(usize, usize)> = genome.inter_layer_skips.iter().copied().collect();
        let got: Vec<(usize, usize)> = self.skips.iter().map(|s| (s.from, s.to)).collect();
        if expected != got
            || self.skips.iter().any(|s| s.matrix.rows() != sizes[s.to] || s.matrix.cols() != sizes[s.from])
        {
            return mismatch("skip matrices");
        }
        Ok(())
    }
}

fn uniform_matrix(rows: usize, cols: usize, r: &mut Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| r.random_range(-1.0..=1.0)).collect();
    Matrix::from_row_major(rows, cols, data).expect("shape")
}

/// Sparse square matrix with `max(1, round(density * n^2))` uniform entries.
fn sparse_square(n: usize, density: f64, r: &mut Rng) -> Matrix {
    let total = n * n;
    let nnz = ((density * total as f64).round() as usize).clamp(1, total);
    let mut m = Matrix::zeros(n, n);
    for pos in sample(r, total, nnz) {
        m.data_mut()[pos] = r.random_range(-1.0..=1.0);
    }
    m
}

// Nilpotent masks (e.g. strictly triangular patterns) have no eigenvalue to
// rescale.
fn is_degenerate(radius: f64, m: &Matrix) -> bool {
    !(radius > 1e-10 * m.max_abs().max(f64::MIN_POSITIVE))
}

/// Unscaled draws shared by random and shared-weight instantiation.
struct Draw {
    input: Matrix,
    recurrent: Vec<(Matrix, f64)>,
    inter: Vec<Matrix>,
    skips: Vec<SkipWeights>,
    biases: Vec<Vec<f64>>,
}

fn draw(genome: &ReservoirGenome, n_inputs: usize) -> Result<Draw> {
    genome.validate()?;
    let s = genome.seed;
    let sizes = &genome.layer_sizes;
    let input = uniform_matrix(sizes[0], n_inputs, &mut rng(derive_seed(s, "w-in", &[])));
    let mut recurrent = Vec::with_capacity(sizes.len());
    for (l, &n) in sizes.iter().enumerate() {
        // one resample, then give up
        let mut found = None;
        for attempt in 0..2u64 {
            let m = sparse_square(n, genome.density, &mut rng(derive_seed(s, "w-rec", &[l as u64, attempt])));
            let radius = m.spectral_radius();
            if !is_degenerate(radius, &m) {
                found = Some((m, radius));
                break;
            }
        }
        recurrent.push(found.ok_or(ReservoirError::ZeroSpectralRadius { layer: l })?);
    }
    let inter = (1..sizes.len())
        .map(|l| uniform_matrix(sizes[l], sizes[l - 1], &mut rng(derive_seed(s, "w-inter", &[l as u64]))))
        .collect();
    let skips = genome
        .inter_layer_skips
        .iter()
        .map(|&(from, to)| SkipWeights {
            from,
            to,
            matrix: uniform_matrix(sizes[to], sizes[from], &mut rng(derive_seed(s, "w-skip", &[from as u64, to as u64]))),
        })
        .collect();
    let biases = sizes
        .iter()
        .enumerate()
        .map(|(l, &n)| {
            let mut r = rng(derive_seed(s, "bias", &[l as u64]));
            (0..n).map(|_| r.random_range(-1.0..=1.0)).collect()
        })
        .collect();
    Ok(Draw { input, recurrent, inter, skips, biases })
}

/// Draws all weights uniformly on `[-1, 1]` from `genome.seed`, sparsifies
/// each recurrent matrix to `genome.density` and rescales it so that its
/// spectral radius equals `genome.spectral_radius`. The input matrix is
/// multiplied by `genome.input_scale`.
pub fn instantiate(genome: &ReservoirGenome, n_inputs: usize) -> Result<ReservoirWeights> {
    let d = draw(genome, n_inputs)?;
    let mut input_matrix = d.input;
    input_matrix.scale(genome.input_scale);
    let recurrent = d
        .recurrent
        .into_iter()
        .map(|(mut m, radius)| {
            m.scale(genome.spectral_radius / radius);
            m
        })
        .collect();
    Ok(ReservoirWeights { input_matrix, recurrent, inter_layer: d.inter, skips: d.skips, biases: d.biases })
}

/// Weight-agnostic instantiation: the same seeded sparsity and sign pattern
/// as [`instantiate`], with every non-zero entry replaced by `±shared`.
///
/// Recurrent matrices keep the echo-state scaling: the sign mask is rescaled
/// to `genome.spectral_radius` and multiplied by the sign of `shared`.
pub fn instantiate_shared(genome: &ReservoirGenome, n_inputs: usize, shared: f64) -> Result<ReservoirWeights> {
    if shared == 0.0 || !shared.is_finite() {
        return Err(ReservoirError::InvalidGenome(format!("shared weight {shared} must be finite and non-zero")));
    }
    let d = draw(genome, n_inputs)?;
    let to_shared = |mut m: Matrix, value: f64| {
        m.data_mut().iter_mut().filter(|x| **x != 0.0).for_each(|x| *x = value * x.signum());
        m
    };
    let mut recurrent = Vec::with_capacity(d.recurrent.len());
    for (l, (m, _)) in d.recurrent.into_iter().enumerate() {
        let mut mask = to_shared(m, 1.0);
        let radius = mask.spectral_radius();
        if is_degenerate(radius, &mask) {
            return Err(ReservoirError::ZeroSpectralRadius { layer: l });
        }
        mask.scale(shared.signum() * genome.spectral_radius / radius);
        recurrent.push(mask);
    }
    Ok(ReservoirWeights {
        input_matrix: to_shared(d.input, shared),
        recurrent,
        inter_layer: d.inter.into_iter().map(|m| to_shared(m, shared)).collect(),
        skips: d.skips.into_iter().map(|s| SkipWeights { matrix: to_shared(s.matrix, shared), ..s }).collect(),
        biases: d.biases.into_iter().map(|b| b.into_iter().map(|v| shared * v.signum()).collect()).collect(),
    })
}
