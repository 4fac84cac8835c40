//! Squared-exponential (RBF) kernel, its derivatives, and marginal-likelihood
//! hyperparameter fitting.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::optim::{self, LbfgsOptions};
use crate::{DacdError, Point, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Relative jitter ladder: 1e-8·s², 1e-7·s², ..., 1e-2·s².
const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-2;

/// Hyperparameters of the RBF kernel plus the observation noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Output scale `s`; the prior variance is `s²`.
    pub output_scale: f64,
    pub lengthscale: f64,
    /// Standard deviation of i.i.d. Gaussian observation noise.
    pub noise_std: f64,
}

impl KernelParams {
    pub fn new(output_scale: f64, lengthscale: f64, noise_std: f64) -> Result<Self> {
        let p = Self {
            output_scale,
            lengthscale,
            noise_std,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.output_scale.is_finite()
            && self.output_scale > 0.0
            && self.lengthscale.is_finite()
            && self.lengthscale > 0.0
            && self.noise_std.is_finite()
            && self.noise_std >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(DacdError::InvalidInput(format!(
                "kernel parameters must satisfy s > 0, l > 0, noise >= 0; got {self:?}"
            )))
        }
    }

    /// `(ln s, ln ℓ, ln σ_n)`; a zero noise maps to `-inf`.
    pub fn to_log(&self) -> [f64; 3] {
        [
            self.output_scale.ln(),
            self.lengthscale.ln(),
            self.noise_std.ln(),
        ]
    }

    pub fn from_log(log: [f64; 3]) -> Self {
        Self {
            output_scale: log[0].exp(),
            lengthscale: log[1].exp(),
            noise_std: log[2].exp(),
        }
    }

    pub fn signal_variance(&self) -> f64 {
        self.output_scale * self.output_scale
    }

    /// Multiplies the response-unit parameters (`s`, `σ_n`) by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            output_scale: self.output_scale * factor,
            lengthscale: self.lengthscale,
            noise_std: self.noise_std * factor,
        }
    }
}

/// Labelled observations `(x_i, y_i)` with pairwise-distinct inputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    inputs: Vec<Point>,
    targets: Vec<f64>,
}

impl SampleSet {
    pub fn new(inputs: Vec<Point>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(DacdError::InvalidInput(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let mut set = Self::default();
        for (x, y) in inputs.into_iter().zip(targets) {
            set.push(x, y)?;
        }
        Ok(set)
    }

    /// Appends an observation; rejects a duplicate input or a dimension
    /// mismatch.
    pub fn push(&mut self, x: Point, y: f64) -> Result<()> {
        if x.is_empty() || x.iter().any(|v| !v.is_finite()) || !y.is_finite() {
            return Err(DacdError::InvalidInput(format!(
                "non-finite or empty observation ({x:?}, {y})"
            )));
        }
        if let Some(first) = self.inputs.first() {
            if first.len() != x.len() {
                return Err(DacdError::InvalidInput(format!(
                    "dimension mismatch: expected {}, got {}",
                    first.len(),
                    x.len()
                )));
            }
        }
        if self.inputs.iter().any(|p| p == &x) {
            return Err(DacdError::InvalidInput(format!("duplicate input {x:?}")));
        }
        self.inputs.push(x);
        self.targets.push(y);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<(Point, f64)> {
        let x = self.inputs.pop()?;
        let y = self.targets.pop()?;
        Some((x, y))
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn inputs(&self) -> &[Point] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Same inputs with targets replaced by `f(y)`.
    pub fn map_targets(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            inputs: self.inputs.clone(),
            targets: self.targets.iter().map(|&y| f(y)).collect(),
        }
    }

    pub fn target_mean(&self) -> f64 {
        if self.targets.is_empty() {
            return 0.0;
        }
        self.targets.iter().sum::<f64>() / self.targets.len() as f64
    }

    /// Population standard deviation of the targets.
    pub fn target_std(&self) -> f64 {
        if self.targets.is_empty() {
            return 0.0;
        }
        let m = self.target_mean();
        let var =
            self.targets.iter().map(|y| (y - m).powi(2)).sum::<f64>() / self.targets.len() as f64;
        var.sqrt()
    }

    /// Largest per-coordinate extent of the inputs.
    pub fn domain_length(&self) -> f64 {
        (0..self.dim())
            .map(|d| {
                let (lo, hi) = self
                    .inputs
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                        (lo.min(x[d]), hi.max(x[d]))
                    });
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `s² exp(-‖x - x'‖² / 2ℓ²)`.
#[inline]
pub fn rbf(x: &[f64], x2: &[f64], p: &KernelParams) -> f64 {
    let l2 = p.lengthscale * p.lengthscale;
    p.signal_variance() * (-0.5 * sq_dist(x, x2) / l2).exp()
}

/// Gradient of [`rbf`] with respect to its second argument:
/// component `p` is `(x_p - x'_p)/ℓ² · k(x, x')`.
pub fn rbf_grad(x: &[f64], x2: &[f64], p: &KernelParams) -> Vec<f64> {
    let k = rbf(x, x2, p);
    let l2 = p.lengthscale * p.lengthscale;
    x.iter().zip(x2).map(|(a, b)| (a - b) / l2 * k).collect()
}

/// Mixed second derivative `∂²k / ∂x_i ∂x'_j`:
/// `(ℓ²δ_ij - (x_i - x'_i)(x_j - x'_j)) / ℓ⁴ · k(x, x')`.
pub fn rbf_hess_mixed(x: &[f64], x2: &[f64], p: &KernelParams) -> DMatrix<f64> {
    let k = rbf(x, x2, p);
    let l2 = p.lengthscale * p.lengthscale;
    let d = x.len();
    DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { l2 } else { 0.0 };
        (delta - (x[i] - x2[i]) * (x[j] - x2[j])) / (l2 * l2) * k
    })
}

/// Noise-free Gram matrix `K_ij = k(x_i, x_j)`.
pub fn gram(inputs: &[Point], p: &KernelParams) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = p.signal_variance();
        for j in 0..i {
            let v = rbf(&inputs[i], &inputs[j], p);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky factor of `C = K + σ_n² I + jitter·I` under the jitter ladder.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub chol: Cholesky<f64, Dyn>,
    /// Absolute jitter added to the diagonal (on top of `σ_n²`).
    pub jitter: f64,
    /// Jitter relative to `s²`.
    pub jitter_rel: f64,
}

/// Factorizes `K + σ_n² I`, adding `1e-8·s²` to the diagonal and escalating
/// by ×10 up to `1e-2·s²` on failure.
pub fn factorize(k: &DMatrix<f64>, p: &KernelParams) -> Result<Factorization> {
    let s2 = p.signal_variance();
    let noise = p.noise_std * p.noise_std;
    let mut rel = JITTER_START;
    loop {
        let mut c = k.clone();
        let jitter = rel * s2;
        for i in 0..c.nrows() {
            c[(i, i)] += noise + jitter;
        }
        if let Some(chol) = Cholesky::new(c) {
            return Ok(Factorization {
                chol,
                jitter,
                jitter_rel: rel,
            });
        }
        if rel >= JITTER_MAX * (1.0 - 1e-9) {
            return Err(DacdError::Factorization { jitter });
        }
        rel *= 10.0;
    }
}

/// Negative log marginal likelihood of a zero-mean GP and its gradient with
/// respect to `(ln s, ln ℓ, ln σ_n)`.
pub fn nlml(p: &KernelParams, data: &SampleSet) -> Result<(f64, [f64; 3])> {
    p.validate()?;
    if data.is_empty() {
        return Err(DacdError::InvalidInput(
            "nlml needs at least one sample".into(),
        ));
    }
    let n = data.len();
    let k = gram(data.inputs(), p);
    let fac = factorize(&k, p)?;
    let y = DVector::from_column_slice(data.targets());
    let alpha = fac.chol.solve(&y);

    let l = fac.chol.l_dirty();
    let log_det_half: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
    let value = 0.5 * y.dot(&alpha) + log_det_half + 0.5 * n as f64 * LN_2PI;

    // dL/dθ = ½ tr((C⁻¹ - ααᵀ) ∂C/∂θ)
    let mut w = fac.chol.inverse();
    w.ger(-1.0, &alpha, &alpha, 1.0);

    let l2 = p.lengthscale * p.lengthscale;
    let mut g_s = 0.0;
    let mut g_l = 0.0;
    let mut trace_w = 0.0;
    for i in 0..n {
        trace_w += w[(i, i)];
        for j in 0..n {
            let kij = k[(i, j)];
            g_s += w[(i, j)] * 2.0 * kij;
            if i != j {
                let r2 = sq_dist(&data.inputs()[i], &data.inputs()[j]);
                g_l += w[(i, j)] * kij * r2 / l2;
            }
        }
    }
    // jitter scales with s²
    g_s += trace_w * 2.0 * fac.jitter;
    let g_n = trace_w * 2.0 * p.noise_std * p.noise_std;
    Ok((value, [0.5 * g_s, 0.5 * g_l, 0.5 * g_n]))
}

/// Box constraints in log space, derived from the data scale.
#[derive(Clone, Copy, Debug)]
pub struct LogBounds {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl LogBounds {
    /// `s ∈ [1e-3, 1e3]·σ_y`, `ℓ ∈ [1e-3, 10]·L`, `σ_n ∈ [1e-4, 1]·σ_y`.
    pub fn for_data(data: &SampleSet) -> Self {
        let (sy, len) = data_scales(data);
        Self {
            lower: [(1e-3 * sy).ln(), (1e-3 * len).ln(), (1e-4 * sy).ln()],
            upper: [(1e3 * sy).ln(), (10.0 * len).ln(), sy.ln()],
        }
    }

    pub fn clamp(&self, log: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| log[i].clamp(self.lower[i], self.upper[i]))
    }

    // θ = lo + (hi - lo)·sigmoid(u)
    fn unbounded(&self, log: [f64; 3]) -> [f64; 3] {
        let mut u = [0.0; 3];
        for i in 0..3 {
            let frac = ((log[i] - self.lower[i]) / (self.upper[i] - self.lower[i]))
                .clamp(1e-6, 1.0 - 1e-6);
            u[i] = (frac / (1.0 - frac)).ln();
        }
        u
    }

    fn bounded(&self, u: &[f64]) -> ([f64; 3], [f64; 3]) {
        let mut log = [0.0; 3];
        let mut jac = [0.0; 3];
        for i in 0..3 {
            let sig = 1.0 / (1.0 + (-u[i]).exp());
            let width = self.upper[i] - self.lower[i];
            log[i] = self.lower[i] + width * sig;
            jac[i] = width * sig * (1.0 - sig);
        }
        (log, jac)
    }
}

fn data_scales(data: &SampleSet) -> (f64, f64) {
    let sy = data.target_std();
    let sy = if sy > 1e-12 { sy } else { 1.0 };
    let len = data.domain_length();
    let len = if len > 0.0 { len } else { 1.0 };
    (sy, len)
}

/// First start is always `(σ_y, 0.1·L, 0.1·σ_y)`.
pub fn default_start(data: &SampleSet) -> KernelParams {
    let (sy, len) = data_scales(data);
    KernelParams {
        output_scale: sy,
        lengthscale: 0.1 * len,
        noise_std: 0.1 * sy,
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Fresh starts: the default start plus `restarts - 1` random ones.
    pub restarts: usize,
    pub seed: u64,
    /// Extra start evaluated before the fresh ones (e.g. the previous optimum).
    pub warm_start: Option<KernelParams>,
    pub lbfgs: LbfgsOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 3,
            seed: 0,
            warm_start: None,
            lbfgs: LbfgsOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HyperFit {
    pub params: KernelParams,
    pub nlml: f64,
    pub failed_starts: usize,
}

/// Multi-start quasi-Newton minimization of [`nlml`] in bounded log space.
pub fn fit_hyperparams(data: &SampleSet, opts: &FitOptions) -> Result<HyperFit> {
    if data.len() < 2 {
        return Err(DacdError::InvalidInput(
            "hyperparameter fitting needs at least two samples".into(),
        ));
    }
    if opts.restarts == 0 {
        return Err(DacdError::InvalidInput("restarts must be >= 1".into()));
    }
    let bounds = LogBounds::for_data(data);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut starts: Vec<[f64; 3]> = Vec::with_capacity(opts.restarts + 1);
    if let Some(w) = opts.warm_start {
        let mut log = w.to_log();
        if !log[2].is_finite() {
            log[2] = bounds.lower[2];
        }
        starts.push(bounds.clamp(log));
    }
    starts.push(bounds.clamp(default_start(data).to_log()));
    for _ in 1..opts.restarts {
        let mut log = [0.0; 3];
        for (i, v) in log.iter_mut().enumerate() {
            *v = rng.random_range(bounds.lower[i]..bounds.upper[i]);
        }
        starts.push(log);
    }

    let objective = |u: &[f64]| -> Option<(f64, Vec<f64>)> {
        let (log, jac) = bounds.bounded(u);
        let (v, g) = nlml(&KernelParams::from_log(log), data).ok()?;
        Some((v, (0..3).map(|i| g[i] * jac[i]).collect()))
    };

    let mut best: Option<(f64, [f64; 3])> = None;
    let mut failed = 0;
    let consider = |value: f64, log: [f64; 3], best: &mut Option<(f64, [f64; 3])>| {
        if value.is_finite() && best.is_none_or(|(b, _)| value < b) {
            *best = Some((value, log));
        }
    };

    for start in &starts {
        let Ok((v0, _)) = nlml(&KernelParams::from_log(*start), data) else {
            failed += 1;
            continue;
        };
        consider(v0, *start, &mut best);
        let u0 = bounds.unbounded(*start);
        match optim::minimize(objective, &u0, &opts.lbfgs) {
            Some(m) => {
                let (log, _) = bounds.bounded(&m.x);
                consider(m.value, log, &mut best);
            }
            None => failed += 1,
        }
    }

    match best {
        Some((value, log)) => Ok(HyperFit {
            params: KernelParams::from_log(log),
            nlml: value,
            failed_starts: failed,
        }),
        None => Err(DacdError::AllRestartsFailed {
            restarts: starts.len(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: f64, l: f64, n: f64) -> KernelParams {
        KernelParams::new(s, l, n).unwrap()
    }

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn rbf_at_zero_distance_is_signal_variance() {
        assert_eq!(rbf(&[0.3, -1.0], &[0.3, -1.0], &p(2.0, 1.0, 0.0)), 4.0);
    }

    #[test]
    fn rbf_at_root_two_lengthscales() {
        let l = 0.7;
        let v = rbf(&[0.0], &[l * 2f64.sqrt()], &p(1.0, l, 0.0));
        assert!((v - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn grad_examples() {
        let params = p(1.0, 1.0, 0.0);
        assert_eq!(rbf_grad(&[0.4, 2.0], &[0.4, 2.0], &params), vec![0.0, 0.0]);

        let g = rbf_grad(&[1.0], &[0.0], &params)[0];
        assert!((g - (-0.5f64).exp()).abs() < 1e-15);
        let oracle = fd(|t| rbf(&[1.0], &[t], &params), 0.0, 1e-6);
        assert!((g - oracle).abs() < 1e-8);

        let g2 = rbf_grad(&[1.0], &[0.0], &p(2.0, 1.0, 0.0))[0];
        assert!((g2 - 4.0 * g).abs() < 1e-14);
    }

    #[test]
    fn hess_examples() {
        let h = rbf_hess_mixed(&[0.5, 0.1], &[0.5, 0.1], &p(1.5, 0.8, 0.0));
        let expect = 1.5 * 1.5 / (0.8 * 0.8);
        assert!((h[(0, 0)] - expect).abs() < 1e-12);
        assert!((h[(1, 1)] - expect).abs() < 1e-12);
        assert_eq!(h[(0, 1)], 0.0);

        let params = p(1.0, 1.0, 0.0);
        assert!(rbf_hess_mixed(&[1.0], &[0.0], &params)[(0, 0)].abs() < 1e-15);
        let v = rbf_hess_mixed(&[2.0], &[0.0], &params)[(0, 0)];
        assert!((v - (-3.0 * (-2f64).exp())).abs() < 1e-12);
        assert!((v + 0.406006).abs() < 1e-6);

        // mixed second difference oracle
        let e = 1e-4;
        let k = |a: f64, b: f64| rbf(&[a], &[b], &params);
        let oracle =
            (k(2.0 + e, e) - k(2.0 + e, -e) - k(2.0 - e, e) + k(2.0 - e, -e)) / (4.0 * e * e);
        assert!((v - oracle).abs() < 1e-6);
    }

    #[test]
    fn log_roundtrip() {
        let q = p(0.37, 12.5, 1e-3);
        let back = KernelParams::from_log(q.to_log());
        assert!((back.output_scale / q.output_scale - 1.0).abs() < 1e-15);
        assert!((back.lengthscale / q.lengthscale - 1.0).abs() < 1e-15);
        assert!((back.noise_std / q.noise_std - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(KernelParams::new(0.0, 1.0, 0.1).is_err());
        assert!(KernelParams::new(1.0, -1.0, 0.1).is_err());
        assert!(KernelParams::new(1.0, 1.0, -0.1).is_err());
        assert!(KernelParams::new(1.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn sample_set_rejects_duplicates_and_mismatch() {
        let mut s = SampleSet::default();
        s.push(vec![0.0], 1.0).unwrap();
        assert!(s.push(vec![0.0], 2.0).is_err());
        assert!(s.push(vec![0.0, 1.0], 2.0).is_err());
        assert!(SampleSet::new(vec![vec![1.0]], vec![]).is_err());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn nlml_single_zero_target() {
        for &(s, n) in &[(1.0, 0.1), (2.5, 0.0), (0.3, 1.2)] {
            let data = SampleSet::new(vec![vec![0.7]], vec![0.0]).unwrap();
            let params = p(s, 0.4, n);
            let (v, _) = nlml(&params, &data).unwrap();
            // the 1e-8·s² jitter enters the determinant
            let c = s * s * (1.0 + 1e-8) + n * n;
            assert!((v - 0.5 * (2.0 * std::f64::consts::PI * c).ln()).abs() < 1e-12);
            let exact = 0.5 * (2.0 * std::f64::consts::PI * (s * s + n * n)).ln();
            assert!((v - exact).abs() < 1e-7);
        }
    }

    #[test]
    fn nlml_translation_invariant() {
        let xs: Vec<Point> = (0..7)
            .map(|i| vec![i as f64 * 0.31, (i * i) as f64 * 0.05])
            .collect();
        let ys: Vec<f64> = (0..7).map(|i| (i as f64).sin()).collect();
        let a = SampleSet::new(xs.clone(), ys.clone()).unwrap();
        let b = SampleSet::new(
            xs.iter().map(|x| vec![x[0] + 5.0, x[1] - 3.0]).collect(),
            ys,
        )
        .unwrap();
        let params = p(1.3, 0.6, 0.05);
        let (va, _) = nlml(&params, &a).unwrap();
        let (vb, _) = nlml(&params, &b).unwrap();
        assert!((va - vb).abs() < 1e-10);
    }

    #[test]
    fn factorize_fails_beyond_max_jitter() {
        // a matrix with a strongly negative eigenvalue
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = factorize(&k, &p(1.0, 1.0, 0.0)).unwrap_err();
        assert!(matches!(err, DacdError::Factorization { .. }));
    }

    #[test]
    fn fit_from_optimum_does_not_worsen() {
        let xs: Vec<Point> = (0..15).map(|i| vec![i as f64 / 14.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x[0]).sin()).collect();
        let data = SampleSet::new(xs, ys).unwrap();
        let first = fit_hyperparams(&data, &FitOptions::default()).unwrap();
        let again = fit_hyperparams(
            &data,
            &FitOptions {
                restarts: 1,
                warm_start: Some(first.params),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(again.nlml <= first.nlml + 1e-12);
    }

    #[test]
    fn fit_is_deterministic() {
        let xs: Vec<Point> = (0..12).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x[0] * 0.4).cos() + 0.1 * x[0]).collect();
        let data = SampleSet::new(xs, ys).unwrap();
        let opts = FitOptions {
            restarts: 4,
            seed: 99,
            ..Default::default()
        };
        let a = fit_hyperparams(&data, &opts).unwrap();
        let b = fit_hyperparams(&data, &opts).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.nlml.to_bits(), b.nlml.to_bits());
    }

    #[test]
    fn fit_result_is_no_worse_than_any_start() {
        let xs: Vec<Point> = (0..10).map(|i| vec![i as f64 * 0.1]).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| if x[0] < 0.45 { 0.0 } else { 1.0 })
            .collect();
        let data = SampleSet::new(xs, ys).unwrap();
        let fit = fit_hyperparams(&data, &FitOptions::default()).unwrap();
        let (v0, _) = nlml(&default_start(&data), &data).unwrap();
        assert!(fit.nlml <= v0);
    }

    #[test]
    fn fit_needs_two_samples() {
        let data = SampleSet::new(vec![vec![0.0]], vec![1.0]).unwrap();
        assert!(fit_hyperparams(&data, &FitOptions::default()).is_err());
    }
}
