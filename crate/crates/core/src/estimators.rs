//! Power estimators operating on recovered moments `d̄`.
//!
//! The grid estimators discretize the ordered region
//! `{P_max ≥ P_1 ≥ … ≥ P_M ≥ 0}` with `G` nodes per axis (spacing
//! `P_max/(G−1)`, ties allowed) and weight every node by
//! `exp(−½ w(P)ᵀ C⁻¹ w(P))`, `w(P) = d̄ − d(P)`.

use faer::{Mat, Side};

use crate::freeprob::recover_block_moments;
use crate::seed;
use crate::sim::ReceivedBlock;
use crate::spectral::{accumulate, gram_eigenvalues, MomentVector};
use crate::theory::{
    d_to_power_sums, newton_girard_roots, noise_covariance, theoretical_d, CovarianceMethod,
    NoiseCovariance,
};
use crate::{Error, Result};

/// Prior density on the ordered region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prior {
    /// Uniform over `{P_max ≥ P_1 ≥ … ≥ P_M ≥ 0}`.
    #[default]
    UniformSimplex,
    /// `P_1` uniform on `[0, P_max]`, then `P_{k+1}` uniform on `[0, P_k]`,
    /// i.e. density `∝ Π_{i<M} 1/P_i`.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mmse,
    Ml,
    Zf,
    Classical,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Mmse => "mmse",
            Method::Ml => "ml",
            Method::Zf => "zf",
            Method::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub p_max: f64,
    /// Nodes per axis.
    pub grid_points: usize,
    /// Number of moments `K` compared against theory.
    pub moments: usize,
    pub prior: Prior,
}

impl EstimatorConfig {
    pub fn new(p_max: f64, grid_points: usize, moments: usize) -> Self {
        EstimatorConfig { p_max, grid_points, moments, prior: Prior::UniformSimplex }
    }

    /// Default resolution for `stations` powers: the grid has
    /// about `G^M / M!` nodes.
    pub fn default_grid_points(stations: usize) -> usize {
        if stations <= 3 {
            64
        } else {
            24
        }
    }

    pub fn validate(&self, stations: usize) -> Result<()> {
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("p_max must be > 0, got {}", self.p_max)));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidConfig("grid_points must be at least 2".into()));
        }
        if self.moments < stations {
            return Err(Error::InvalidConfig(format!(
                "need at least M = {stations} moments, got {}",
                self.moments
            )));
        }
        Ok(())
    }
}

/// Estimated powers, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerEstimate {
    pub powers: Vec<f64>,
    pub method: Method,
    /// `wᵀC⁻¹w` at the estimate (grid methods).
    pub residual: Option<f64>,
    pub grid_resolution: Option<usize>,
    /// Every unnormalized posterior weight would underflow in double
    /// precision; the mean is taken from log-space weights.
    pub degenerate: bool,
    /// The primary method failed and a fallback produced the estimate.
    pub fallback: bool,
}

/// `C⁻¹`, regularized by `C + 10⁻⁸·diag(C)` when the condition number is
/// above 10¹².
pub fn precision_matrix(cov: &NoiseCovariance) -> Result<Mat<f64>> {
    const MAX_CONDITION: f64 = 1e12;
    const RIDGE: f64 = 1e-8;
    let k = cov.order();
    let decompose = |m: &Mat<f64>| {
        m.self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Linalg(format!("covariance eigendecomposition failed: {e:?}")))
    };
    let mut matrix = cov.matrix.clone();
    let mut evd = decompose(&matrix)?;
    let spectrum = |evd: &faer::linalg::solvers::SelfAdjointEigen<f64>| -> Vec<f64> {
        evd.S().column_vector().iter().copied().collect()
    };
    let mut lambda = spectrum(&evd);
    let max = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0 && max.is_finite()) {
        return Err(Error::Linalg("covariance has no positive eigenvalue".into()));
    }
    if lambda[0] <= 0.0 || max / lambda[0] > MAX_CONDITION {
        for i in 0..k {
            matrix[(i, i)] += RIDGE * cov.matrix[(i, i)].abs();
        }
        evd = decompose(&matrix)?;
        lambda = spectrum(&evd);
    }
    let max = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = max / MAX_CONDITION;
    let u = evd.U();
    Ok(Mat::from_fn(k, k, |i, j| {
        (0..k).map(|r| u[(i, r)] * u[(j, r)] / lambda[r].max(floor)).sum()
    }))
}

fn quadratic_form(q: &Mat<f64>, w: &[f64]) -> f64 {
    let k = w.len();
    let mut acc = 0.0;
    for i in 0..k {
        let row: f64 = (0..k).map(|j| q[(i, j)] * w[j]).sum();
        acc += w[i] * row;
    }
    acc
}

/// Discretized ordered power region with theoretical moments precomputed
/// at every node.
#[derive(Debug, Clone)]
pub struct PowerGrid {
    stations: usize,
    config: EstimatorConfig,
    nodes: Vec<f64>,
    theory: Vec<f64>,
    log_prior: Vec<f64>,
}

impl PowerGrid {
    pub fn new(stations: usize, config: &EstimatorConfig) -> Result<Self> {
        if stations == 0 {
            return Err(Error::InvalidConfig("need at least one station".into()));
        }
        config.validate(stations)?;
        let g = config.grid_points;
        let step = config.p_max / (g - 1) as f64;
        let mut nodes = Vec::new();
        let mut idx = vec![0usize; stations];
        fn rec(idx: &mut Vec<usize>, pos: usize, upper: usize, out: &mut Vec<usize>) {
            if pos == idx.len() {
                out.extend_from_slice(idx);
                return;
            }
            for i in 0..=upper {
                idx[pos] = i;
                rec(idx, pos + 1, i, out);
            }
        }
        let mut flat = Vec::new();
        rec(&mut idx, 0, g - 1, &mut flat);
        nodes.extend(flat.iter().map(|&i| i as f64 * step));
        let count = nodes.len() / stations;
        let mut theory = Vec::with_capacity(count * config.moments);
        let mut log_prior = Vec::with_capacity(count);
        for node in nodes.chunks(stations) {
            theory.extend(theoretical_d(node, config.moments).values);
            log_prior.push(match config.prior {
                Prior::UniformSimplex => 0.0,
                Prior::Sequential => node[..stations - 1]
                    .iter()
                    .map(|p| -p.max(0.5 * step).ln())
                    .sum(),
            });
        }
        Ok(PowerGrid { stations, config: config.clone(), nodes, theory, log_prior })
    }

    pub fn len(&self) -> usize {
        self.log_prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_prior.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.config.p_max / (self.config.grid_points - 1) as f64
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.stations..(i + 1) * self.stations]
    }

    fn check_inputs(&self, d_obs: &MomentVector, cov: &NoiseCovariance) -> Result<usize> {
        let k = self.config.moments;
        if d_obs.order() < k || cov.order() < k {
            return Err(Error::Shape(format!(
                "estimator uses {k} moments; got {} moments and a {}×{} covariance",
                d_obs.order(),
                cov.order(),
                cov.order()
            )));
        }
        if d_obs.values.iter().take(k).any(|v| !v.is_finite()) {
            return Err(Error::NumericInput("observed moments must be finite".into()));
        }
        Ok(k)
    }

    /// `wᵀC⁻¹w` at every node.
    fn residuals(&self, d_obs: &MomentVector, cov: &NoiseCovariance) -> Result<(Vec<f64>, Mat<f64>)> {
        let k = self.check_inputs(d_obs, cov)?;
        let q = precision_matrix(&cov.truncated(k))?;
        let obs = &d_obs.values[..k];
        let mut w = vec![0.0; k];
        let res = self
            .theory
            .chunks(k)
            .map(|t| {
                for i in 0..k {
                    w[i] = obs[i] - t[i];
                }
                quadratic_form(&q, &w)
            })
            .collect();
        Ok((res, q))
    }

    fn residual_at(&self, q: &Mat<f64>, d_obs: &MomentVector, powers: &[f64]) -> f64 {
        let k = self.config.moments;
        let t = theoretical_d(powers, k);
        let w: Vec<f64> = (0..k).map(|i| d_obs.values[i] - t.values[i]).collect();
        quadratic_form(q, &w)
    }

    fn argmin(res: &[f64]) -> Option<usize> {
        res.iter()
            .enumerate()
            .filter(|(_, r)| r.is_finite())
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }

    /// Grid maximum-likelihood estimate: node minimizing `wᵀC⁻¹w`.
    pub fn ml(&self, d_obs: &MomentVector, cov: &NoiseCovariance) -> Result<PowerEstimate> {
        let (res, _) = self.residuals(d_obs, cov)?;
        let best = Self::argmin(&res)
            .ok_or_else(|| Error::NumericInput("no finite residual on the grid".into()))?;
        Ok(PowerEstimate {
            powers: self.node(best).to_vec(),
            method: Method::Ml,
            residual: Some(res[best]),
            grid_resolution: Some(self.config.grid_points),
            degenerate: false,
            fallback: false,
        })
    }

    /// Grid posterior mean.
    pub fn mmse(&self, d_obs: &MomentVector, cov: &NoiseCovariance) -> Result<PowerEstimate> {
        let (res, q) = self.residuals(d_obs, cov)?;
        let log_w: Vec<f64> = res.iter().zip(&self.log_prior).map(|(r, p)| p - 0.5 * r).collect();
        let top = log_w.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            let mut est = self.ml(d_obs, cov)?;
            est.degenerate = true;
            est.fallback = true;
            return Ok(est);
        }
        // exp(top) is the largest raw weight.
        let degenerate = top.exp() == 0.0;
        let mut total = 0.0;
        let mut mean = vec![0.0; self.stations];
        for (i, lw) in log_w.iter().enumerate() {
            if !lw.is_finite() {
                continue;
            }
            let w = (lw - top).exp();
            total += w;
            for (m, p) in mean.iter_mut().zip(self.node(i)) {
                *m += w * p;
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
        mean.sort_by(|a, b| b.total_cmp(a));
        let residual = self.residual_at(&q, d_obs, &mean);
        Ok(PowerEstimate {
            powers: mean,
            method: Method::Mmse,
            residual: Some(residual),
            grid_resolution: Some(self.config.grid_points),
            degenerate,
            fallback: false,
        })
    }
}

/// Posterior-mean power estimate on a freshly built grid.
pub fn mmse_estimate(
    d_obs: &MomentVector,
    cov: &NoiseCovariance,
    stations: usize,
    config: &EstimatorConfig,
) -> Result<PowerEstimate> {
    PowerGrid::new(stations, config)?.mmse(d_obs, cov)
}

/// Grid maximum-likelihood estimate on a freshly built grid.
pub fn ml_estimate(
    d_obs: &MomentVector,
    cov: &NoiseCovariance,
    stations: usize,
    config: &EstimatorConfig,
) -> Result<PowerEstimate> {
    PowerGrid::new(stations, config)?.ml(d_obs, cov)
}

/// Zero-forcing: solve `d_p(P) = d̄_p`, `p = 1..M`, through power sums and
/// Newton-Girard.
pub fn zf_estimate(d_obs: &MomentVector, stations: usize) -> Result<PowerEstimate> {
    let sums = d_to_power_sums(d_obs, stations)?;
    let powers = newton_girard_roots(&sums)?;
    Ok(PowerEstimate {
        powers,
        method: Method::Zf,
        residual: None,
        grid_resolution: None,
        degenerate: false,
        fallback: false,
    })
}

/// Large-`L` baseline: the moments of `(1/L) Y Yᴴ − σ² I` are taken as the
/// moments of `H P Hᴴ` and inverted by zero-forcing. When the roots are not
/// admissible, falls back to grid ML with per-moment relative weighting
/// (`C = diag(m_k²)`) and flags the estimate.
pub fn classical_estimate(
    block: &ReceivedBlock,
    sigma2: f64,
    stations: usize,
    fallback: &EstimatorConfig,
) -> Result<PowerEstimate> {
    let eig = gram_eigenvalues(&block.y)?;
    let shifted: Vec<f64> = eig.iter().map(|l| l - sigma2).collect();
    let m = MomentVector::from_eigenvalues(&shifted, stations, 0.0);
    match zf_estimate(&m, stations) {
        Ok(est) => Ok(PowerEstimate { method: Method::Classical, ..est }),
        Err(Error::NotIdentifiable(_)) => {
            let cfg = EstimatorConfig { moments: stations, ..fallback.clone() };
            let weights = m.values.iter().map(|v| if *v != 0.0 { v * v } else { 1.0 });
            let mut cov = NoiseCovariance::scaled_identity(stations, 1.0);
            for (i, w) in weights.enumerate() {
                cov.matrix[(i, i)] = w;
            }
            let est = PowerGrid::new(stations, &cfg)?.ml(&m, &cov)?;
            Ok(PowerEstimate { method: Method::Classical, fallback: true, ..est })
        }
        Err(e) => Err(e),
    }
}

/// Iterative MMSE with covariance refinement over a sequence of blocks.
///
/// Step 1 uses the covariance at the hypothesis `P_1 = … = P_M = P_max/2`.
/// Step `s` accumulates the recovered moments of the first `s` blocks and
/// recomputes the covariance at the previous estimate for `s·N` effective
/// subcarriers. Returns one estimate per step.
pub fn iterative_mmse(
    blocks: &[ReceivedBlock],
    stations: usize,
    config: &EstimatorConfig,
    steps: usize,
    covariance: CovarianceMethod,
) -> Result<Vec<PowerEstimate>> {
    if steps == 0 {
        return Err(Error::InvalidConfig("iterative MMSE needs at least one step".into()));
    }
    if blocks.len() < steps {
        return Err(Error::Shape(format!("{steps} steps need {steps} blocks, got {}", blocks.len())));
    }
    let grid = PowerGrid::new(stations, config)?;
    let template = &blocks[0].scenario;
    let covariance_at = |step: usize, powers: &[f64]| -> Result<NoiseCovariance> {
        let method = match covariance {
            CovarianceMethod::MonteCarlo { trials, seed: s } => {
                CovarianceMethod::MonteCarlo { trials, seed: seed::derive(s, step as u64) }
            }
            other => other,
        };
        Ok(noise_covariance(template, powers, config.moments, method)?.accumulated(step))
    };
    let mut recovered: Vec<MomentVector> = Vec::with_capacity(steps);
    let mut hypothesis = vec![config.p_max / 2.0; stations];
    let mut trajectory = Vec::with_capacity(steps);
    for (s, block) in blocks.iter().take(steps).enumerate() {
        let step = s + 1;
        recovered.push(recover_block_moments(block, config.moments)?);
        let d_bar = accumulate(&recovered)?;
        let cov = covariance_at(step, &hypothesis)?;
        let est = grid.mmse(&d_bar, &cov)?;
        hypothesis = est.powers.clone();
        trajectory.push(est);
    }
    Ok(trajectory)
}
