//! Exact GP posterior for function values and first derivatives.
//!
//! The prior mean is zero. Callers that work with raw responses go through
//! [`Standardizer`], which centres and scales targets before fitting and maps
//! a [`PosteriorSlice`] back to response units afterwards.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::kernel::{self, gram, rbf, KernelParams, SampleSet};
use crate::{DacdError, Point, Result};

/// A fitted GP: training data, factorization of `C = K + σ_n² I (+ jitter)`
/// and the solve `C⁻¹y`.
#[derive(Clone, Debug)]
pub struct GpState {
    data: SampleSet,
    params: KernelParams,
    chol: DMatrix<f64>,
    chol_inv: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GpState {
    pub fn fit(data: &SampleSet, params: KernelParams) -> Result<Self> {
        params.validate()?;
        if data.is_empty() {
            return Err(DacdError::InvalidInput(
                "cannot fit a GP to zero samples".into(),
            ));
        }
        let k = gram(data.inputs(), &params);
        let fac = kernel::factorize(&k, &params)?;
        let y = DVector::from_column_slice(data.targets());
        let alpha = fac.chol.solve(&y);
        let chol = fac.chol.l();
        let n = chol.nrows();
        let chol_inv = chol
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(DacdError::Factorization { jitter: fac.jitter })?;
        Ok(Self {
            data: data.clone(),
            params,
            chol,
            chol_inv,
            alpha,
            jitter: fac.jitter,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn data(&self) -> &SampleSet {
        &self.data
    }

    /// Lower-triangular Cholesky factor of `C`.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Absolute diagonal jitter used by the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `C` as factorized, i.e. including noise and jitter.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mut c = gram(self.data.inputs(), &self.params);
        let add = self.params.noise_std.powi(2) + self.jitter;
        for i in 0..c.nrows() {
            c[(i, i)] += add;
        }
        c
    }

    fn cross_cov(&self, grid: &[Point]) -> DMatrix<f64> {
        let xs = self.data.inputs();
        DMatrix::from_fn(xs.len(), grid.len(), |i, g| {
            rbf(&xs[i], &grid[g], &self.params)
        })
    }

    /// Column-wise `prior - ‖L⁻¹ w‖²`, clamped at zero.
    fn reduced_variance(&self, w: &DMatrix<f64>, prior: f64) -> Vec<f64> {
        let v = &self.chol_inv * w;
        v.column_iter()
            .map(|c| {
                let var = prior - c.norm_squared();
                if var < -1e-10 * prior.max(1.0) {
                    log::warn!("posterior variance {var:e} below tolerance; clamping");
                }
                var.clamp(0.0, prior)
            })
            .collect()
    }

    /// Posterior mean and variance of `f` at each grid point.
    pub fn predict(&self, grid: &[Point]) -> (Vec<f64>, Vec<f64>) {
        let ks = self.cross_cov(grid);
        let mean = (ks.transpose() * &self.alpha).as_slice().to_vec();
        let var = self.reduced_variance(&ks, self.params.signal_variance());
        (mean, var)
    }

    /// Posterior mean and marginal variance of each partial derivative
    /// `∂f/∂x_p` at each grid point. Outputs are flattened row-major
    /// (`grid.len() × dim`).
    pub fn predict_derivative(&self, grid: &[Point]) -> (Vec<f64>, Vec<f64>) {
        let ks = self.cross_cov(grid);
        self.derivative_from_cross(grid, &ks)
    }

    fn derivative_from_cross(&self, grid: &[Point], ks: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
        let dim = self.data.dim();
        let xs = self.data.inputs();
        let l2 = self.params.lengthscale.powi(2);
        let prior = self.params.signal_variance() / l2;
        let g = grid.len();
        let mut dmean = vec![0.0; g * dim];
        let mut dvar = vec![0.0; g * dim];
        for p in 0..dim {
            // ∂k(x_i, x*)/∂x*_p
            let w = DMatrix::from_fn(xs.len(), g, |i, j| {
                (xs[i][p] - grid[j][p]) / l2 * ks[(i, j)]
            });
            let m = w.transpose() * &self.alpha;
            let v = self.reduced_variance(&w, prior);
            for j in 0..g {
                dmean[j * dim + p] = m[j];
                dvar[j * dim + p] = v[j];
            }
        }
        (dmean, dvar)
    }

    /// Value and derivative posterior on `grid` in one pass.
    pub fn posterior_slice(&self, grid: &[Point]) -> PosteriorSlice {
        let ks = self.cross_cov(grid);
        let mean = (ks.transpose() * &self.alpha).as_slice().to_vec();
        let var = self.reduced_variance(&ks, self.params.signal_variance());
        let (dmean, dvar) = self.derivative_from_cross(grid, &ks);
        PosteriorSlice {
            grid: grid.to_vec(),
            dim: self.data.dim(),
            mean,
            var,
            dmean,
            dvar,
        }
    }
}

/// Value and derivative posterior evaluated on a dense grid.
///
/// `dmean` / `dvar` hold `dim` entries per grid point; `dvar` is the diagonal
/// of the gradient covariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSlice {
    pub grid: Vec<Point>,
    pub dim: usize,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub dmean: Vec<f64>,
    pub dvar: Vec<f64>,
}

impl PosteriorSlice {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn dmean_at(&self, i: usize) -> &[f64] {
        &self.dmean[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dvar_at(&self, i: usize) -> &[f64] {
        &self.dvar[i * self.dim..(i + 1) * self.dim]
    }
}

/// Affine target transform `z = (y - mean) / scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub scale: f64,
}

impl Standardizer {
    pub fn identity() -> Self {
        Self {
            mean: 0.0,
            scale: 1.0,
        }
    }

    /// Mean and population standard deviation of the targets; a degenerate
    /// spread falls back to a unit scale.
    pub fn from_data(data: &SampleSet) -> Self {
        let std = data.target_std();
        Self {
            mean: data.target_mean(),
            scale: if std > 1e-12 { std } else { 1.0 },
        }
    }

    pub fn apply(&self, data: &SampleSet) -> SampleSet {
        data.map_targets(|y| (y - self.mean) / self.scale)
    }

    pub fn restore(&self, mut slice: PosteriorSlice) -> PosteriorSlice {
        let s = self.scale;
        let s2 = s * s;
        slice.mean.iter_mut().for_each(|m| *m = *m * s + self.mean);
        slice.var.iter_mut().for_each(|v| *v *= s2);
        slice.dmean.iter_mut().for_each(|d| *d *= s);
        slice.dvar.iter_mut().for_each(|v| *v *= s2);
        slice
    }
}
