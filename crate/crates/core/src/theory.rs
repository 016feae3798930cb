//! Theoretical moments of `H P Hᴴ` for i.i.d. Rayleigh frequency responses,
//! symmetric-polynomial conversions, and the covariance of the moment noise.
//!
//! With unit-power complex Gaussian `h`, `|h|²` is a unit exponential, so the
//! carrier-wise diagonal `Σ_k P_k |h_k|²` has moments `d_p = p!·h_p(P)` with
//! `h_p` the complete homogeneous symmetric polynomial. The explicit
//! multinomial form implemented in [`theoretical_d`] collapses to this
//! through `Σ_k C(2k,k)·C(2n−2k,n−k) = 4ⁿ`.

use faer::{Mat, Side};

use crate::freeprob::recover_hph_moments;
use crate::seed;
use crate::sim::{synthesize, NetworkScenario};
use crate::spectral::{empirical_moments, MomentVector};
use crate::{Error, Result};

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `E|h|^{2p}` for unit-power circular complex Gaussian `h`, expanded from
/// the real and imaginary part moments `E[(h^ℜ)^{2i}] = (2i)!/(4^i i!)`.
/// Equals `p!`.
pub fn gaussian_abs_moment(p: u32) -> f64 {
    let p = p as usize;
    let sum: f64 = (0..=p)
        .map(|i| {
            binomial(p, i) * factorial(2 * i) * factorial(2 * (p - i)) / (factorial(i) * factorial(p - i))
        })
        .sum();
    sum / 4f64.powi(p as i32)
}

/// `Σ_{k=0}^{n} (2k)!(2[n−k])! / ((k!)² ([n−k]!)²)`, exactly.
fn central_binomial_convolution(n: usize) -> u128 {
    let central = |k: usize| -> u128 {
        // C(2k, k) built incrementally: C(2k,k) = C(2k−2,k−1)·(2k)(2k−1)/k².
        (1..=k as u128).fold(1u128, |c, j| c * (2 * j) * (2 * j - 1) / (j * j))
    };
    (0..=n).map(|k| central(k) * central(n - k)).sum()
}

/// Calls `f` with every composition `(k_1, …, k_M)` of `total`.
fn for_each_composition(parts: usize, total: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(buf: &mut Vec<usize>, parts: usize, left: usize, f: &mut impl FnMut(&[usize])) {
        if buf.len() + 1 == parts {
            buf.push(left);
            f(buf);
            buf.pop();
            return;
        }
        for k in 0..=left {
            buf.push(k);
            rec(buf, parts, left - k, f);
            buf.pop();
        }
    }
    if parts == 0 {
        return;
    }
    let mut buf = Vec::with_capacity(parts);
    rec(&mut buf, parts, total, f);
}

/// Theoretical moments of `H P Hᴴ`:
///
/// ```text
/// d_p = p!/4^p · Σ_{k_1+…+k_M = p} Π_i { Σ_{k=0}^{k_i} (2k)!(2[k_i−k])! / ((k!)²([k_i−k]!)²) } · P_i^{k_i}
/// ```
pub fn theoretical_d(powers: &[f64], order: usize) -> MomentVector {
    let inner: Vec<f64> = (0..=order).map(|n| central_binomial_convolution(n) as f64).collect();
    let values = (1..=order)
        .map(|p| {
            let mut sum = 0.0;
            for_each_composition(powers.len(), p, &mut |ks| {
                sum += ks
                    .iter()
                    .zip(powers)
                    .map(|(&k, &pw)| inner[k] * pw.powi(k as i32))
                    .product::<f64>();
            });
            factorial(p) / 4f64.powi(p as i32) * sum
        })
        .collect();
    MomentVector::new(values)
}

/// [`theoretical_d`] in exact integer arithmetic for integer powers; `None`
/// on overflow.
pub fn theoretical_d_exact(powers: &[u64], order: usize) -> Option<Vec<u128>> {
    let inner: Vec<u128> = (0..=order).map(central_binomial_convolution).collect();
    let mut out = Vec::with_capacity(order);
    for p in 1..=order {
        let mut sum: Option<u128> = Some(0);
        for_each_composition(powers.len(), p, &mut |ks| {
            let term = ks.iter().zip(powers).try_fold(1u128, |acc, (&k, &pw)| {
                acc.checked_mul(inner[k])?.checked_mul((pw as u128).checked_pow(k as u32)?)
            });
            sum = match (sum, term) {
                (Some(s), Some(t)) => s.checked_add(t),
                _ => None,
            };
        });
        let fact: u128 = (1..=p as u128).product();
        let quarter = 4u128.checked_pow(p as u32)?;
        let s = sum?;
        if s % quarter != 0 {
            return None;
        }
        out.push((s / quarter).checked_mul(fact)?);
    }
    Some(out)
}

/// Complete homogeneous symmetric polynomials `h_1 … h_order` of `powers`.
pub fn complete_homogeneous(powers: &[f64], order: usize) -> Vec<f64> {
    // h_p(x_1..x_j) = h_p(x_1..x_{j−1}) + x_j · h_{p−1}(x_1..x_j)
    let mut h = vec![0.0; order + 1];
    h[0] = 1.0;
    for &x in powers {
        for p in 1..=order {
            h[p] += x * h[p - 1];
        }
    }
    h[1..].to_vec()
}

/// Power sums `S_k = Σ_i P_i^k`, `k = 1..=M`, from `d_p = p!·h_p(P)` via
/// Newton's identity `p·h_p = Σ_{i=1}^{p} S_i·h_{p−i}`.
pub fn d_to_power_sums(d: &MomentVector, stations: usize) -> Result<Vec<f64>> {
    if d.order() < stations {
        return Err(Error::Shape(format!(
            "need at least {stations} moments, got {}",
            d.order()
        )));
    }
    let mut h = vec![1.0];
    h.extend((1..=stations).map(|p| d.get(p) / factorial(p)));
    let mut sums: Vec<f64> = Vec::with_capacity(stations);
    for p in 1..=stations {
        let lower: f64 = (1..p).map(|i| sums[i - 1] * h[p - i]).sum();
        sums.push(p as f64 * h[p] - lower);
    }
    Ok(sums)
}

/// Relative tolerance on imaginary parts and negative real parts of roots.
pub const ROOT_TOLERANCE: f64 = 1e-6;

/// Elementary symmetric polynomials from power sums (Newton-Girard):
/// `e_k = (1/k) Σ_{i=1}^{k} (−1)^{i−1} e_{k−i} S_i`.
pub fn power_sums_to_elementary(sums: &[f64]) -> Vec<f64> {
    let mut e = vec![1.0];
    for k in 1..=sums.len() {
        let acc: f64 = (1..=k)
            .map(|i| {
                let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                sign * e[k - i] * sums[i - 1]
            })
            .sum();
        e.push(acc / k as f64);
    }
    e
}

/// Recovers `M` nonnegative values from their first `M` power sums, sorted
/// descending. Fails when the roots of the monic polynomial with the
/// Newton-Girard coefficients are complex or significantly negative.
pub fn newton_girard_roots(sums: &[f64]) -> Result<Vec<f64>> {
    let m = sums.len();
    if m == 0 {
        return Err(Error::Shape("need at least one power sum".into()));
    }
    if sums.iter().any(|s| !s.is_finite()) {
        return Err(Error::NumericInput("power sums must be finite".into()));
    }
    let e = power_sums_to_elementary(sums);
    // x^M − e_1 x^{M−1} + e_2 x^{M−2} − …; companion matrix with the
    // coefficients of x^{M−1} … x^0 in its first row.
    let coeff = |k: usize| if k % 2 == 1 { e[k] } else { -e[k] };
    let companion = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == 0 {
            coeff(j + 1)
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let roots = companion
        .eigenvalues()
        .map_err(|e| Error::Linalg(format!("companion eigenvalues failed: {e:?}")))?;
    let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(m);
    for r in &roots {
        if r.im.abs() > ROOT_TOLERANCE * scale {
            return Err(Error::NotIdentifiable(format!("complex root {:.6}{:+.6}i", r.re, r.im)));
        }
        if r.re < -ROOT_TOLERANCE * scale {
            return Err(Error::NotIdentifiable(format!("negative root {:.6}", r.re)));
        }
        out.push(r.re.max(0.0));
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// How the moment-noise covariance is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceMethod {
    /// Sample covariance of `d̄ − d_theory` over full synthesize → moments →
    /// deconvolution runs at the hypothesized powers.
    MonteCarlo { trials: usize, seed: u64 },
    /// Closed form of the finite-`N` channel-sampling covariance.
    Analytic,
}

impl CovarianceMethod {
    pub fn label(&self) -> &'static str {
        match self {
            CovarianceMethod::MonteCarlo { .. } => "monte-carlo",
            CovarianceMethod::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceOrigin {
    MonteCarlo,
    Analytic,
}

/// Covariance `C = E[w wᵀ]` of the recovered-moment noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovariance {
    pub matrix: Mat<f64>,
    pub n_eff: usize,
    pub origin: CovarianceOrigin,
}

impl NoiseCovariance {
    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    /// `scale · I`.
    pub fn scaled_identity(order: usize, scale: f64) -> Self {
        NoiseCovariance {
            matrix: Mat::from_fn(order, order, |i, j| if i == j { scale } else { 0.0 }),
            n_eff: 0,
            origin: CovarianceOrigin::Analytic,
        }
    }

    /// Covariance of the mean of `factor` independent accumulations:
    /// `C / factor` with `factor·n_eff` subcarriers.
    pub fn accumulated(&self, factor: usize) -> Self {
        let f = factor.max(1) as f64;
        NoiseCovariance {
            matrix: Mat::from_fn(self.order(), self.order(), |i, j| self.matrix[(i, j)] / f),
            n_eff: self.n_eff * factor.max(1),
            origin: self.origin,
        }
    }

    /// Leading `order × order` block.
    pub fn truncated(&self, order: usize) -> Self {
        let k = order.min(self.order());
        NoiseCovariance {
            matrix: Mat::from_fn(k, k, |i, j| self.matrix[(i, j)]),
            ..self.clone()
        }
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Linalg(format!("covariance eigenvalues failed: {e:?}")))
    }
}

/// `((a+b)!·h_{a+b} − a!h_a·b!h_b)/N`: covariance of `d̄_a, d̄_b` when the
/// `N` carriers are independent.
pub fn sampling_covariance_closed_form(powers: &[f64], subcarriers: usize, order: usize) -> Mat<f64> {
    let h = complete_homogeneous(powers, 2 * order);
    let raw = |p: usize| factorial(p) * h[p - 1];
    Mat::from_fn(order, order, |i, j| {
        let (a, b) = (i + 1, j + 1);
        (raw(a + b) - raw(a) * raw(b)) / subcarriers as f64
    })
}

/// Expanded form of the channel-sampling covariance: pairs of multinomial
/// expansions of `(Σ P_i|h_i|²)^a` and `(Σ P_i|h_i|²)^b`, on distinct
/// carriers (weight `(N−1)/N`) and on the same carrier (weight `1/N`, where
/// the exponents of a station merge), minus `d_a d_b`.
fn sampling_covariance_expanded(powers: &[f64], subcarriers: usize, order: usize) -> Mat<f64> {
    let n = subcarriers as f64;
    let d = theoretical_d(powers, order);
    let mh: Vec<f64> = (0..=2 * order as u32).map(gaussian_abs_moment).collect();
    let mut c = Mat::<f64>::zeros(order, order);
    for a in 1..=order {
        for b in 1..=order {
            let mut acc = 0.0;
            for_each_composition(powers.len(), a, &mut |ka| {
                for_each_composition(powers.len(), b, &mut |kb| {
                    let mut distinct = 1.0;
                    let mut same = 1.0;
                    for (i, &p) in powers.iter().enumerate() {
                        let (x, y) = (ka[i], kb[i]);
                        let fx = factorial(x);
                        let fy = factorial(y);
                        distinct *= p.powi(x as i32) * mh[x] / fx * p.powi(y as i32) * mh[y] / fy;
                        same *= p.powi((x + y) as i32) * mh[x + y] / (fx * fy);
                    }
                    let mult = factorial(a) * factorial(b);
                    acc += mult * ((n - 1.0) / n * distinct + same / n);
                });
            });
            c[(a - 1, b - 1)] = acc - d.get(a) * d.get(b);
        }
    }
    c
}

/// Covariance of the recovered moments `d̄_1..d̄_K` at hypothesized powers,
/// for the dimensions, noise and channel model of `template`.
pub fn noise_covariance(
    template: &NetworkScenario,
    powers: &[f64],
    order: usize,
    method: CovarianceMethod,
) -> Result<NoiseCovariance> {
    let subcarriers = template.subcarriers;
    match method {
        CovarianceMethod::Analytic => Ok(NoiseCovariance {
            matrix: sampling_covariance_expanded(powers, subcarriers, order),
            n_eff: subcarriers,
            origin: CovarianceOrigin::Analytic,
        }),
        CovarianceMethod::MonteCarlo { trials, seed: master } => {
            if trials < 2 {
                return Err(Error::InvalidConfig(format!(
                    "monte-carlo covariance needs at least 2 trials, got {trials}"
                )));
            }
            let mut hypothesis = template.with_powers(powers);
            hypothesis.powers.sort_by(|a, b| b.total_cmp(a));
            hypothesis.validate()?;
            let theory = theoretical_d(&hypothesis.powers, order);
            let mut samples = Vec::with_capacity(trials);
            for t in 0..trials {
                let block = synthesize(&hypothesis, seed::derive(master, t as u64))?;
                let m = empirical_moments(&block.y, order)?;
                let d = recover_hph_moments(
                    &m,
                    subcarriers,
                    hypothesis.symbols,
                    hypothesis.stations,
                    hypothesis.sigma2,
                )?;
                let w: Vec<f64> = d.values.iter().zip(&theory.values).map(|(a, b)| a - b).collect();
                samples.push(w);
            }
            Ok(NoiseCovariance {
                matrix: sample_covariance(&samples, order),
                n_eff: subcarriers,
                origin: CovarianceOrigin::MonteCarlo,
            })
        }
    }
}

fn sample_covariance(samples: &[Vec<f64>], order: usize) -> Mat<f64> {
    let count = samples.len() as f64;
    let mean: Vec<f64> = (0..order)
        .map(|k| samples.iter().map(|s| s[k]).sum::<f64>() / count)
        .collect();
    Mat::from_fn(order, order, |i, j| {
        samples
            .iter()
            .map(|s| (s[i] - mean[i]) * (s[j] - mean[j]))
            .sum::<f64>()
            / (count - 1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// h_p by direct enumeration of all monomials of degree p.
    fn brute_h(powers: &[f64], p: usize) -> f64 {
        let mut total = 0.0;
        for_each_composition(powers.len(), p, &mut |ks| {
            total += ks.iter().zip(powers).map(|(&k, &x)| x.powi(k as i32)).product::<f64>();
        });
        total
    }

    #[test]
    fn gaussian_abs_moments_are_factorials() {
        assert_eq!(gaussian_abs_moment(0), 1.0);
        assert!((gaussian_abs_moment(1) - 1.0).abs() < 1e-15);
        assert!((gaussian_abs_moment(2) - 2.0).abs() < 1e-14);
        assert!((gaussian_abs_moment(3) - 6.0).abs() < 1e-13);
        for p in 0..=10 {
            let want = factorial(p as usize);
            assert!((gaussian_abs_moment(p) - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn central_binomial_collapse() {
        for n in 0..20 {
            assert_eq!(central_binomial_convolution(n), 4u128.pow(n as u32));
        }
    }

    #[test]
    fn reference_moments() {
        let d = theoretical_d(&[4.0, 2.0, 1.0], 3);
        assert_eq!(d.values, vec![7.0, 70.0, 930.0]);
        assert_eq!(theoretical_d_exact(&[4, 2, 1], 3).unwrap(), vec![7, 70, 930]);
        let unit = theoretical_d(&[1.0], 6);
        for p in 1..=6 {
            assert!((unit.get(p) - factorial(p)).abs() < 1e-9);
        }
        assert!(theoretical_d(&[0.0, 0.0], 4).values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn exact_identity_with_integer_powers() {
        for p in [vec![4u64, 2, 1], vec![7, 7], vec![1, 2, 3, 4, 5], vec![0, 3]] {
            let d = theoretical_d_exact(&p, 6).unwrap();
            let pf: Vec<f64> = p.iter().map(|&x| x as f64).collect();
            for k in 1..=6 {
                let h = brute_h(&pf, k).round() as u128;
                let fact: u128 = (1..=k as u128).product();
                assert_eq!(d[k - 1], fact * h);
            }
        }
    }

    #[test]
    fn power_sums_of_reference() {
        let s = d_to_power_sums(&MomentVector::new(vec![7.0, 70.0, 930.0]), 3).unwrap();
        assert_eq!(s, vec![7.0, 21.0, 73.0]);
        let s1 = d_to_power_sums(&MomentVector::new(vec![2.5]), 1).unwrap();
        assert_eq!(s1, vec![2.5]);
        assert!(d_to_power_sums(&MomentVector::new(vec![2.5]), 2).is_err());
    }

    #[test]
    fn roots_of_reference() {
        let r = newton_girard_roots(&[7.0, 21.0, 73.0]).unwrap();
        for (a, b) in r.iter().zip([4.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-10);
        }
        let double = newton_girard_roots(&[2.0, 2.0]).unwrap();
        assert!(double.iter().all(|v| (v - 1.0).abs() < 1e-6), "{double:?}");
        assert!(matches!(newton_girard_roots(&[0.0, 2.0]), Err(Error::NotIdentifiable(_))));
        // x² − 2x + 2: roots 1 ± i.
        assert!(matches!(newton_girard_roots(&[2.0, 0.0]), Err(Error::NotIdentifiable(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn moment_identity(powers in prop::collection::vec(0.0f64..10.0, 1..=5)) {
            let d = theoretical_d(&powers, 6);
            for p in 1..=6 {
                let want = factorial(p) * brute_h(&powers, p);
                prop_assert!((d.get(p) - want).abs() <= 1e-12 * want.max(1e-300));
            }
        }

        #[test]
        fn homogeneity(powers in prop::collection::vec(0.0f64..5.0, 1..=4), alpha in 0.1f64..4.0) {
            let scaled: Vec<f64> = powers.iter().map(|p| p * alpha).collect();
            let a = theoretical_d(&powers, 5);
            let b = theoretical_d(&scaled, 5);
            for p in 1..=5 {
                let want = alpha.powi(p as i32) * a.get(p);
                prop_assert!((b.get(p) - want).abs() <= 1e-12 * want.max(1e-300));
            }
        }

        #[test]
        fn power_sums_round_trip(powers in prop::collection::vec(0.1f64..10.0, 1..=5)) {
            let m = powers.len();
            let s = d_to_power_sums(&theoretical_d(&powers, m), m).unwrap();
            for k in 1..=m {
                let want: f64 = powers.iter().map(|p| p.powi(k as i32)).sum();
                prop_assert!((s[k - 1] - want).abs() <= 1e-9 * want);
            }
        }

        #[test]
        fn roots_round_trip(seed in prop::collection::vec(0.0f64..1.0, 1..=5)) {
            // Distinct positive values with a minimum spacing.
            let mut powers: Vec<f64> = seed.iter().enumerate().map(|(i, u)| 0.5 + i as f64 + 0.5 * u).collect();
            powers.reverse();
            let m = powers.len();
            let s = d_to_power_sums(&theoretical_d(&powers, m), m).unwrap();
            let r = newton_girard_roots(&s).unwrap();
            for (a, b) in r.iter().zip(&powers) {
                prop_assert!((a - b).abs() <= 1e-8 * b.max(1.0), "{r:?} vs {powers:?}");
            }
        }
    }

    #[test]
    fn expanded_covariance_matches_closed_form() {
        for (powers, n) in [(vec![4.0, 2.0, 1.0], 512usize), (vec![1.0], 64), (vec![3.0, 0.5], 100)] {
            let a = sampling_covariance_expanded(&powers, n, 4);
            let b = sampling_covariance_closed_form(&powers, n, 4);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((a[(i, j)] - b[(i, j)]).abs() <= 1e-9 * b[(i, j)].abs().max(1e-12));
                }
            }
        }
    }

    #[test]
    fn analytic_covariance_orders_of_magnitude() {
        let s = NetworkScenario::new(512, 1024, vec![4.0, 2.0, 1.0], 0.01);
        let c = noise_covariance(&s, &s.powers, 3, CovarianceMethod::Analytic).unwrap();
        assert!((c.matrix[(0, 0)] - 21.0 / 512.0).abs() < 1e-12);
        assert!(c.matrix[(2, 2)] / c.matrix[(0, 0)] > 1e3);
        assert!(c.eigenvalues().unwrap()[0] > 0.0);
    }

    #[test]
    fn monte_carlo_covariance_basic_properties() {
        let s = NetworkScenario::new(64, 128, vec![4.0, 2.0, 1.0], 0.01).with_seed(3);
        let method = CovarianceMethod::MonteCarlo { trials: 60, seed: 5 };
        let c = noise_covariance(&s, &s.powers, 3, method).unwrap();
        assert_eq!(c.n_eff, 64);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c.matrix[(i, j)], c.matrix[(j, i)]);
            }
        }
        let eig = c.eigenvalues().unwrap();
        assert!(eig[0] >= -1e-10 * eig[2]);
        let acc = c.accumulated(4);
        assert_eq!(acc.n_eff, 256);
        assert!((acc.matrix[(1, 2)] - c.matrix[(1, 2)] / 4.0).abs() < 1e-15 * c.matrix[(1, 2)].abs());
        // The pipeline noise at least contains the channel-sampling noise.
        let analytic = noise_covariance(&s, &s.powers, 3, CovarianceMethod::Analytic).unwrap();
        assert!(c.matrix[(0, 0)] > 0.5 * analytic.matrix[(0, 0)]);
        assert!(matches!(
            noise_covariance(&s, &s.powers, 3, CovarianceMethod::MonteCarlo { trials: 1, seed: 0 }),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn zero_power_noiseless_covariance_vanishes() {
        let s = NetworkScenario::new(32, 64, vec![0.0, 0.0], 0.0);
        let c = noise_covariance(&s, &[0.0, 0.0], 3, CovarianceMethod::MonteCarlo { trials: 5, seed: 1 })
            .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(c.matrix[(i, j)].abs() < 1e-12);
            }
        }
    }
}
