//! Empirical eigenvalue moments of the received Gram matrix.

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, Par, Side};

use crate::{Error, Result};

/// Normalized-trace moments `(m_1, …, m_K)` of a Hermitian matrix or of a
/// limit distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub values: Vec<f64>,
    /// Aspect ratio `N/L` the moments were measured at; `0` for moments of a
    /// deconvolved or limiting distribution.
    pub ratio: f64,
    /// Number of subcarriers that contributed (summed over accumulations).
    pub n_eff: usize,
}

impl MomentVector {
    pub fn new(values: Vec<f64>) -> Self {
        MomentVector { values, ratio: 0.0, n_eff: 0 }
    }

    /// Number of moments `K`.
    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// Moment of order `p` (1-based).
    pub fn get(&self, p: usize) -> f64 {
        self.values[p - 1]
    }

    /// First `order` moments.
    pub fn truncated(&self, order: usize) -> MomentVector {
        MomentVector { values: self.values[..order.min(self.order())].to_vec(), ..self.clone() }
    }

    /// Moments `(a, a², …, a^K)` of a point mass at `a`.
    pub fn dirac(a: f64, order: usize) -> Self {
        MomentVector::new((1..=order as i32).map(|p| a.powi(p)).collect())
    }

    /// Moments of the empirical distribution of `eigenvalues`.
    pub fn from_eigenvalues(eigenvalues: &[f64], order: usize, ratio: f64) -> Self {
        let n = eigenvalues.len();
        let mut values = vec![0.0; order];
        for &lambda in eigenvalues {
            let mut pow = 1.0;
            for v in values.iter_mut() {
                pow *= lambda;
                *v += pow;
            }
        }
        values.iter_mut().for_each(|v| *v /= n as f64);
        MomentVector { values, ratio, n_eff: n }
    }
}

/// `(1/L) Y Yᴴ` for an `N × L` block.
pub fn gram(y: &Mat<c64>) -> Mat<c64> {
    let n = y.nrows();
    let mut g = Mat::<c64>::zeros(n, n);
    matmul(
        g.as_mut(),
        Accum::Replace,
        y.as_ref(),
        y.adjoint(),
        c64::new(1.0 / y.ncols() as f64, 0.0),
        Par::Seq,
    );
    g
}

/// Eigenvalues of `(1/L) Y Yᴴ`, ascending.
pub fn gram_eigenvalues(y: &Mat<c64>) -> Result<Vec<f64>> {
    if !(0..y.ncols()).all(|l| (0..y.nrows()).all(|j| y[(j, l)].is_finite())) {
        return Err(Error::NumericInput("received block contains NaN or infinity".into()));
    }
    gram(y)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Linalg(format!("Hermitian eigendecomposition failed: {e:?}")))
}

/// `m_k = (1/N) Σ_i λ_i^k` over the eigenvalues of `(1/L) Y Yᴴ`.
pub fn empirical_moments(y: &Mat<c64>, order: usize) -> Result<MomentVector> {
    if order == 0 {
        return Err(Error::Shape("moment order must be at least 1".into()));
    }
    let eig = gram_eigenvalues(y)?;
    Ok(MomentVector::from_eigenvalues(&eig, order, y.nrows() as f64 / y.ncols() as f64))
}

/// Entrywise mean of moment vectors sharing `K` and aspect ratio; the
/// effective subcarrier counts add up.
pub fn accumulate(vectors: &[MomentVector]) -> Result<MomentVector> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::Shape("cannot accumulate an empty set of moment vectors".into()))?;
    let order = first.order();
    let mut values = vec![0.0; order];
    let mut n_eff = 0;
    for v in vectors {
        if v.order() != order {
            return Err(Error::Shape(format!("moment orders {} and {}", order, v.order())));
        }
        if v.ratio != first.ratio {
            return Err(Error::Shape(format!("aspect ratios {} and {}", first.ratio, v.ratio)));
        }
        values.iter_mut().zip(&v.values).for_each(|(a, b)| *a += b);
        n_eff += v.n_eff;
    }
    values.iter_mut().for_each(|a| *a /= vectors.len() as f64);
    Ok(MomentVector { values, ratio: first.ratio, n_eff })
}
