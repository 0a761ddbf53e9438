use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Box-constrained CMA-ES minimizer with an ask/tell interface.
#[derive(Debug, Clone)]
pub struct Cmaes {
    dim: usize,
    lambda: usize,
    mu: usize,
    weights: Vec<f64>,
    mueff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    pc: DVector<f64>,
    ps: DVector<f64>,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    generation: usize,
    evaluations: usize,
}

/// Default population size `4 + ⌊3 ln n⌋`.
pub fn default_population(dim: usize) -> usize {
    4 + (3.0 * (dim as f64).ln()).floor() as usize
}

impl Cmaes {
    /// Unbounded search.
    pub fn new(mean: Vec<f64>, sigma: f64, lambda: usize) -> Self {
        let n = mean.len();
        Self::with_bounds(mean, sigma, lambda, vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
    }

    pub fn with_bounds(mean: Vec<f64>, sigma: f64, lambda: usize, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = mean.len();
        assert!(n > 0, "CMA-ES needs at least one dimension");
        assert!(sigma > 0.0, "initial step size must be positive");
        assert!(lambda >= 2, "population must hold at least two candidates");
        assert!(lower.len() == n && upper.len() == n && lower.iter().zip(&upper).all(|(l, u)| l <= u));
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (0..mu).map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - ((i + 1) as f64).ln()).collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            dim: n,
            lambda,
            mu,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
            lower,
            upper,
            mean: DVector::from_vec(mean),
            sigma,
            cov: DMatrix::identity(n, n),
            pc: DVector::zeros(n),
            ps: DVector::zeros(n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            generation: 0,
            evaluations: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn population(&self) -> usize {
        self.lambda
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Override the step size, e.g. to study the σ → 0 limit.
    pub fn set_sigma(&mut self, sigma: f64) {
        assert!(sigma > 0.0);
        self.sigma = sigma;
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.cov.clone()).eigenvalues.min()
    }

    fn clip(&self, mut x: DVector<f64>) -> DVector<f64> {
        for i in 0..self.dim {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
        x
    }

    /// λ samples of `N(mean, σ²C)`, clipped into the box.
    pub fn ask<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        (0..self.lambda)
            .map(|_| {
                let z = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                let y = &self.basis * z.component_mul(&self.scales);
                self.clip(&self.mean + y * self.sigma).as_slice().to_vec()
            })
            .collect()
    }

    /// Update from the latest ask batch; lower objectives are better.
    pub fn tell(&mut self, candidates: &[Vec<f64>], objectives: &[f64]) -> Result<()> {
        if candidates.len() != objectives.len() || candidates.len() != self.lambda {
            return Err(Error::BatchMismatch { candidates: candidates.len(), objectives: objectives.len() });
        }
        if let Some(c) = candidates.iter().find(|c| c.len() != self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, got: c.len() });
        }
        if objectives.iter().any(|f| !f.is_finite()) {
            return Err(Error::Config("CMA-ES objectives must be finite".into()));
        }
        self.generation += 1;
        self.evaluations += candidates.len();

        // Flat fitness carries no ranking information: widen the search and
        // keep the mean where it is.
        if objectives.iter().all(|f| *f == objectives[0]) {
            self.sigma *= (0.2 + self.cs / self.damps).exp();
            return Ok(());
        }

        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|&a, &b| objectives[a].total_cmp(&objectives[b]).then(a.cmp(&b)));
        let n = self.dim as f64;
        let old_mean = self.mean.clone();
        let steps: Vec<DVector<f64>> = order[..self.mu]
            .iter()
            .map(|&k| (DVector::from_column_slice(&candidates[k]) - &old_mean) / self.sigma)
            .collect();
        let y_w = steps.iter().zip(&self.weights).fold(DVector::zeros(self.dim), |acc, (y, w)| acc + y * *w);
        self.mean = &old_mean + &y_w * self.sigma;

        // C^{-1/2} y_w via the cached eigendecomposition.
        let inv_sqrt = &self.basis * DMatrix::from_diagonal(&self.scales.map(|d| 1.0 / d)) * self.basis.transpose();
        self.ps = &self.ps * (1.0 - self.cs) + (&inv_sqrt * &y_w) * (self.cs * (2.0 - self.cs) * self.mueff).sqrt();
        let gen = self.generation as f64;
        let ps_norm = self.ps.norm();
        let hsig = ps_norm / (1.0 - (1.0 - self.cs).powf(2.0 * gen)).sqrt() / self.chi_n < 1.4 + 2.0 / (n + 1.0);
        let hs = if hsig { 1.0 } else { 0.0 };
        self.pc = &self.pc * (1.0 - self.cc) + &y_w * (hs * (self.cc * (2.0 - self.cc) * self.mueff).sqrt());

        let rank_one = &self.pc * self.pc.transpose();
        let rank_mu = steps
            .iter()
            .zip(&self.weights)
            .fold(DMatrix::zeros(self.dim, self.dim), |acc, (y, w)| acc + (y * y.transpose()) * *w);
        let correction = (1.0 - hs) * self.cc * (2.0 - self.cc);
        self.cov = &self.cov * (1.0 - self.c1 - self.cmu + self.c1 * correction)
            + rank_one * self.c1
            + rank_mu * self.cmu;

        self.sigma *= ((self.cs / self.damps) * (ps_norm / self.chi_n - 1.0)).exp();
        self.refresh_eigen();
        Ok(())
    }

    /// Symmetrize C, recompute its eigensystem and floor tiny or negative
    /// eigenvalues so C stays positive definite.
    fn refresh_eigen(&mut self) {
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let max = eig.eigenvalues.max().max(f64::MIN_POSITIVE);
        let floor = max * 1e-14;
        let vals = eig.eigenvalues.map(|v| if v.is_finite() && v > floor { v } else { floor });
        self.basis = eig.eigenvectors;
        self.scales = vals.map(f64::sqrt);
        self.cov = &self.basis * DMatrix::from_diagonal(&vals) * self.basis.transpose();
        self.cov = (&self.cov + self.cov.transpose()) * 0.5;
    }
}
