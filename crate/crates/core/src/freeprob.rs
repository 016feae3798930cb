//! Free-probability moment calculus.
//!
//! Moments and free cumulants are linked by the non-crossing recursion
//!
//! ```text
//! m_n = Σ_{s=1}^{n} κ_s · Σ_{i_1+…+i_s = n−s} m_{i_1} ⋯ m_{i_s},   m_0 = 1,
//! ```
//!
//! i.e. `κ_s` multiplies the coefficient of `t^{n−s}` in `M(t)^s` with
//! `M(t) = Σ_{i≥0} m_i t^i`. Additive free (de)convolution adds (subtracts)
//! free cumulants. Multiplicative (de)convolution with the Marchenko-Pastur
//! law of ratio `c` maps `c·m` through the cumulant→moment (moment→cumulant)
//! transform and divides by `c`.

use crate::sim::ReceivedBlock;
use crate::spectral::{empirical_moments, MomentVector};
use crate::{Error, Result, MAX_MOMENTS};

/// Free cumulants `(κ_1, …, κ_K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantVector {
    pub values: Vec<f64>,
}

/// Coefficients `[t^j] M(t)^s` for `s = 0..=order`, `j = 0..=order`, from the
/// moments `m[0..order]` (the implicit `m_0 = 1` is prepended).
fn series_powers(moments: &[f64], order: usize) -> Vec<Vec<f64>> {
    let mut base = vec![0.0; order + 1];
    base[0] = 1.0;
    for (j, m) in moments.iter().take(order).enumerate() {
        base[j + 1] = *m;
    }
    let mut powers = Vec::with_capacity(order + 1);
    let mut current = vec![0.0; order + 1];
    current[0] = 1.0;
    powers.push(current.clone());
    for _ in 0..order {
        let mut next = vec![0.0; order + 1];
        for (i, a) in current.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in base.iter().enumerate().take(order + 1 - i) {
                next[i + j] += a * b;
            }
        }
        powers.push(next.clone());
        current = next;
    }
    powers
}

/// Moment→free-cumulant transform.
pub fn moments_to_free_cumulants(m: &MomentVector) -> CumulantVector {
    let order = m.order();
    let powers = series_powers(&m.values, order);
    let mut kappa = vec![0.0; order];
    for n in 1..=order {
        let lower: f64 = (1..n).map(|s| kappa[s - 1] * powers[s][n - s]).sum();
        kappa[n - 1] = m.values[n - 1] - lower;
    }
    CumulantVector { values: kappa }
}

/// Free-cumulant→moment transform.
pub fn free_cumulants_to_moments(k: &CumulantVector) -> MomentVector {
    let order = k.values.len();
    let mut m: Vec<f64> = Vec::with_capacity(order);
    for n in 1..=order {
        // [t^{n−s}] M(t)^s only involves m_1..m_{n−1} when s ≥ 1.
        let powers = series_powers(&m, n);
        let lower: f64 = (1..n).map(|s| k.values[s - 1] * powers[s][n - s]).sum();
        m.push(k.values[n - 1] + lower);
    }
    MomentVector::new(m)
}

/// Marchenko-Pastur law `μ_{η_c}`: limit spectrum of `(1/L) A Aᴴ` for an
/// `N × L` unit-variance i.i.d. matrix with `N/L → c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchenkoPastur {
    ratio: f64,
}

impl MarchenkoPastur {
    pub fn new(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::InvalidConfig(format!("Marchenko-Pastur ratio must be > 0, got {ratio}")));
        }
        Ok(MarchenkoPastur { ratio })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Edges `((1−√c)², (1+√c)²)` of the continuous part.
    pub fn support(&self) -> (f64, f64) {
        let s = self.ratio.sqrt();
        ((1.0 - s).powi(2), (1.0 + s).powi(2))
    }

    /// Mass of the atom at zero, `(1 − 1/c)⁺`.
    pub fn atom(&self) -> f64 {
        (1.0 - 1.0 / self.ratio).max(0.0)
    }

    /// Density of the continuous part at `x > 0`.
    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (a, b) = self.support();
        let v = (x - a).max(0.0) * (b - x).max(0.0);
        v.sqrt() / (2.0 * std::f64::consts::PI * self.ratio * x)
    }

    /// First `order` moments, as Narayana polynomials
    /// `m_k = Σ_{j<k} (1/k) C(k,j) C(k,j+1) c^j`.
    pub fn moments(&self, order: usize) -> MomentVector {
        let values = (1..=order)
            .map(|k| {
                (0..k)
                    .map(|j| {
                        binomial(k, j) * binomial(k, j + 1) / k as f64 * self.ratio.powi(j as i32)
                    })
                    .sum()
            })
            .collect();
        MomentVector::new(values)
    }
}

/// Moments `m_1..m_order` of the Marchenko-Pastur law of ratio `c`.
pub fn mp_moments(ratio: f64, order: usize) -> Result<MomentVector> {
    Ok(MarchenkoPastur::new(ratio)?.moments(order))
}

/// Continuous density at `x` and the atom mass at zero.
pub fn mp_density(ratio: f64, x: f64) -> Result<(f64, f64)> {
    let law = MarchenkoPastur::new(ratio)?;
    Ok((law.density(x), law.atom()))
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn scaled(m: &[f64], factor: f64) -> Vec<f64> {
    m.iter().map(|v| v * factor).collect()
}

/// `μ ⊠ μ_{η_c}`: `(1/c)·𝓜(c·m)`.
pub fn mult_conv_mp(m: &MomentVector, ratio: f64) -> MomentVector {
    let out = free_cumulants_to_moments(&CumulantVector { values: scaled(&m.values, ratio) });
    MomentVector { values: scaled(&out.values, 1.0 / ratio), ..m.clone() }
}

/// Undoes [`mult_conv_mp`]: `(1/c)·𝓒(c·m)`.
pub fn mult_deconv_mp(m: &MomentVector, ratio: f64) -> MomentVector {
    let input = MomentVector::new(scaled(&m.values, ratio));
    let out = moments_to_free_cumulants(&input);
    MomentVector { values: scaled(&out.values, 1.0 / ratio), ..m.clone() }
}

fn check_same_order(a: &MomentVector, b: &MomentVector) -> Result<()> {
    if a.order() != b.order() {
        return Err(Error::Shape(format!("moment orders {} and {}", a.order(), b.order())));
    }
    Ok(())
}

/// Additive free convolution `μ_a ⊞ μ_b`.
pub fn add_conv(a: &MomentVector, b: &MomentVector) -> Result<MomentVector> {
    check_same_order(a, b)?;
    let ka = moments_to_free_cumulants(a);
    let kb = moments_to_free_cumulants(b);
    let sum = ka.values.iter().zip(&kb.values).map(|(x, y)| x + y).collect();
    let out = free_cumulants_to_moments(&CumulantVector { values: sum });
    Ok(MomentVector { values: out.values, ..a.clone() })
}

/// Additive free deconvolution `μ_c ⊟ μ_b`.
pub fn add_deconv(c: &MomentVector, b: &MomentVector) -> Result<MomentVector> {
    check_same_order(c, b)?;
    let kc = moments_to_free_cumulants(c);
    let kb = moments_to_free_cumulants(b);
    let diff = kc.values.iter().zip(&kb.values).map(|(x, y)| x - y).collect();
    let out = free_cumulants_to_moments(&CumulantVector { values: diff });
    Ok(MomentVector { values: out.values, ..c.clone() })
}

/// Removes the noise from the moments of `(1/L) Y Yᴴ`:
/// `((μ ⊠⁻¹ μ_{η_c}) ⊟ δ_{σ²}) ⊠ μ_{η_c}` with `c = N/L`.
pub fn deconvolve_noise(m_y: &MomentVector, ratio: f64, sigma2: f64) -> Result<MomentVector> {
    let signal_plus_noise = mult_deconv_mp(m_y, ratio);
    let noise = MomentVector::dirac(sigma2, m_y.order());
    let signal = add_deconv(&signal_plus_noise, &noise)?;
    Ok(mult_conv_mp(&signal, ratio))
}

/// Recovers the moments `d_k` of `H P Hᴴ` from the moments of `(1/L) Y Yᴴ`.
///
/// 1. noise removal at `c = N/L` ([`deconvolve_noise`]);
/// 2. division by `M`: the `MN × MN` matrix `(1/L) P^{1/2}HᴴH P^{1/2}ΘΘᴴ`
///    shares the nonzero spectrum of the `N × N` one, padded with zeros;
/// 3. Marchenko-Pastur deconvolution at `c' = MN/L`;
/// 4. multiplication by `M` (same rank padding between `P^{1/2}HᴴHP^{1/2}`
///    and `HPHᴴ`).
pub fn recover_hph_moments(
    m_y: &MomentVector,
    subcarriers: usize,
    symbols: usize,
    stations: usize,
    sigma2: f64,
) -> Result<MomentVector> {
    if sigma2.is_nan() || sigma2 < 0.0 {
        return Err(Error::InvalidConfig(format!("sigma2 must be nonnegative, got {sigma2}")));
    }
    if m_y.order() == 0 || m_y.order() > MAX_MOMENTS {
        return Err(Error::Shape(format!("moment order must be in 1..={MAX_MOMENTS}, got {}", m_y.order())));
    }
    if subcarriers == 0 || symbols == 0 || stations == 0 {
        return Err(Error::InvalidConfig("N, L and M must be positive".into()));
    }
    if m_y.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericInput("input moments must be finite".into()));
    }
    let ratio = subcarriers as f64 / symbols as f64;
    let stations_f = stations as f64;
    let m1 = deconvolve_noise(m_y, ratio, sigma2)?;
    let m2 = MomentVector::new(scaled(&m1.values, 1.0 / stations_f));
    let m3 = mult_deconv_mp(&m2, stations_f * ratio);
    if m3.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericInput("recovered moments are not finite".into()));
    }
    Ok(MomentVector { values: scaled(&m3.values, stations_f), ratio: 0.0, n_eff: m_y.n_eff })
}

/// Empirical moments of one received block pushed through
/// [`recover_hph_moments`] with the block's own dimensions and noise level.
pub fn recover_block_moments(block: &ReceivedBlock, order: usize) -> Result<MomentVector> {
    let s = &block.scenario;
    let m = empirical_moments(&block.y, order)?;
    recover_hph_moments(&m, s.subcarriers, s.symbols, s.stations, s.sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{self, NetworkScenario};
    use crate::spectral::gram_eigenvalues;
    use faer::{c64, Mat};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mv(values: &[f64]) -> MomentVector {
        MomentVector::new(values.to_vec())
    }

    fn assert_close(a: &[f64], b: &[f64], rel: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= rel * y.abs().max(1e-300) + 1e-300, "{a:?} vs {b:?}");
        }
    }

    /// Moments of a positive random measure: a few atoms with random weights.
    /// Moments of a random discrete law on `[0.5, 2]`. Round trips through
    /// the cumulant domain lose relative precision roughly in proportion to
    /// the spread of the support raised to the order, so generators must keep
    /// the moment scales comparable.
    fn random_moments(rng: &mut ChaCha8Rng, order: usize) -> MomentVector {
        let atoms = rng.gen_range(1..5);
        let points: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.5..2.0)).collect();
        let weights: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let vals = (1..=order as i32)
            .map(|p| points.iter().zip(&weights).map(|(x, w)| w * x.powi(p)).sum::<f64>() / total)
            .collect();
        MomentVector::new(vals)
    }

    #[test]
    fn dirac_has_single_cumulant() {
        let a = 1.7;
        let k = moments_to_free_cumulants(&MomentVector::dirac(a, 6));
        assert!((k.values[0] - a).abs() < 1e-12);
        assert!(k.values[1..].iter().all(|v| v.abs() < 1e-10));
        let back = free_cumulants_to_moments(&CumulantVector { values: vec![a, 0.0, 0.0, 0.0] });
        assert_close(&back.values, &MomentVector::dirac(a, 4).values, 1e-14);
    }

    #[test]
    fn zero_cumulants_give_zero_moments() {
        let m = free_cumulants_to_moments(&CumulantVector { values: vec![0.0; 5] });
        assert!(m.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mp_cumulants_are_powers_of_ratio() {
        for c in [0.25, 0.5, 1.0, 2.0] {
            let order = 8;
            let m = MarchenkoPastur::new(c).unwrap().moments(order);
            let k = moments_to_free_cumulants(&m);
            let want: Vec<f64> = (0..order as i32).map(|j| c.powi(j)).collect();
            assert_close(&k.values, &want, 1e-11);
            let back = free_cumulants_to_moments(&CumulantVector { values: want });
            assert_close(&back.values, &m.values, 1e-12);
        }
    }

    #[test]
    fn mp_low_moments() {
        let c: f64 = 0.3;
        let m = MarchenkoPastur::new(c).unwrap().moments(3);
        assert_close(&m.values, &[1.0, 1.0 + c, 1.0 + 3.0 * c + c * c], 1e-14);
        let tiny = MarchenkoPastur::new(1e-9).unwrap().moments(6);
        assert!(tiny.values.iter().all(|v| (v - 1.0).abs() < 1e-7));
    }

    #[test]
    fn mp_density_support_and_atom() {
        let mp = MarchenkoPastur::new(0.5).unwrap();
        let (a, b) = mp.support();
        assert!((a - (1.0 - 0.5f64.sqrt()).powi(2)).abs() < 1e-15);
        assert!((b - (1.0 + 0.5f64.sqrt()).powi(2)).abs() < 1e-15);
        assert_eq!(mp.density(a * 0.5), 0.0);
        assert_eq!(mp.density(b * 1.01), 0.0);
        assert!(mp.density(1.0) > 0.0);
        assert_eq!(mp.atom(), 0.0);
        assert!((MarchenkoPastur::new(2.0).unwrap().atom() - 0.5).abs() < 1e-15);
        assert!(MarchenkoPastur::new(0.0).is_err());
    }

    /// ∫ xʲ·density over the support, via x = mid + half·cos θ so the
    /// square-root edges become a smooth periodic integrand.
    fn mp_quadrature(c: f64, power: i32) -> f64 {
        let (a, b) = MarchenkoPastur::new(c).unwrap().support();
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        let n = 4000;
        let h = std::f64::consts::PI / n as f64;
        (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * h;
                let x = mid + half * t.cos();
                mp_density(c, x).unwrap().0 * x.powi(power) * half * t.sin() * h
            })
            .sum()
    }

    #[test]
    fn mp_density_integrates_to_its_moments() {
        for c in [0.25, 0.5, 1.0, 2.0] {
            let (_, atom) = mp_density(c, 1.0).unwrap();
            assert!((mp_quadrature(c, 0) + atom - 1.0).abs() < 1e-6, "mass at c = {c}");
            let m = mp_moments(c, 3).unwrap();
            for k in 1..=3 {
                let q = mp_quadrature(c, k as i32);
                assert!((q - m.values[k - 1]).abs() < 1e-6 * m.values[k - 1], "m{k} at c = {c}: {q}");
            }
        }
        assert_eq!(mp_density(0.5, 5.0).unwrap().0, 0.0);
        assert!(mp_moments(-1.0, 3).is_err());
    }

    #[test]
    fn conv_of_unit_dirac_is_mp() {
        for c in [0.1, 0.5, 2.0] {
            let out = mult_conv_mp(&MomentVector::dirac(1.0, 7), c);
            assert_close(&out.values, &MarchenkoPastur::new(c).unwrap().moments(7).values, 1e-12);
        }
    }

    #[test]
    fn add_deconv_of_diracs() {
        let m = mv(&[1.0, 3.0, 11.0]);
        let zero = MomentVector::dirac(0.0, 3);
        assert_close(&add_deconv(&m, &zero).unwrap().values, &m.values, 1e-14);
        let shifted = add_deconv(&MomentVector::dirac(5.0, 4), &MomentVector::dirac(2.0, 4)).unwrap();
        assert_close(&shifted.values, &MomentVector::dirac(3.0, 4).values, 1e-12);
        assert!(matches!(add_deconv(&m, &MomentVector::dirac(1.0, 2)), Err(Error::Shape(_))));
    }

    /// Subtracting the full transformed cumulant vector of δ_{σ²} equals
    /// subtracting σ² from κ₁ alone.
    #[test]
    fn dirac_deconvolution_only_touches_first_cumulant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_moments(&mut rng, 6);
        let full = add_deconv(&m, &MomentVector::dirac(0.3, 6)).unwrap();
        let mut k = moments_to_free_cumulants(&m);
        k.values[0] -= 0.3;
        assert_close(&full.values, &free_cumulants_to_moments(&k).values, 1e-11);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn transforms_are_inverse(seed in 0u64..10_000, order in 1usize..=10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_moments(&mut rng, order);
            let k = moments_to_free_cumulants(&m);
            let back = free_cumulants_to_moments(&k);
            for (x, y) in back.values.iter().zip(&m.values) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs());
            }
            let k2 = CumulantVector { values: (0..order).map(|_| rng.gen_range(-1.0..1.0)).collect() };
            let again = moments_to_free_cumulants(&free_cumulants_to_moments(&k2));
            for (x, y) in again.values.iter().zip(&k2.values) {
                prop_assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0));
            }
        }

        #[test]
        fn conv_pairs_are_inverse(seed in 0u64..10_000, order in 1usize..=8, c in 0.05f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_moments(&mut rng, order);
            let rt = mult_deconv_mp(&mult_conv_mp(&m, c), c);
            for (x, y) in rt.values.iter().zip(&m.values) {
                prop_assert!((x - y).abs() <= 1e-10 * y.abs());
            }
            let rt = mult_conv_mp(&mult_deconv_mp(&m, c), c);
            for (x, y) in rt.values.iter().zip(&m.values) {
                prop_assert!((x - y).abs() <= 1e-10 * y.abs());
            }
            let b = random_moments(&mut rng, order);
            let rt = add_conv(&add_deconv(&m, &b).unwrap(), &b).unwrap();
            for (x, y) in rt.values.iter().zip(&m.values) {
                prop_assert!((x - y).abs() <= 1e-10 * y.abs());
            }
            // The reverse order cancels the larger cumulants of the sum.
            let rt = add_deconv(&add_conv(&m, &b).unwrap(), &b).unwrap();
            for (x, y) in rt.values.iter().zip(&m.values) {
                prop_assert!((x - y).abs() <= 1e-8 * y.abs());
            }
        }
    }

    /// Round-trip precision degrades like `c^{K−1}` (the transform amplifies
    /// rounding error); at the largest ratios still ≤ 10⁻⁸ for `K = 8`.
    #[test]
    fn conv_pairs_at_large_ratio() {
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_moments(&mut rng, 8);
            for c in [3.0, 4.0] {
                let rt = mult_conv_mp(&mult_deconv_mp(&m, c), c);
                assert_close(&rt.values, &m.values, 1e-8);
            }
        }
    }

    fn complex_gaussian(rng: &mut ChaCha8Rng) -> c64 {
        let re: f64 = rng.sample(rand_distr::StandardNormal);
        let im: f64 = rng.sample(rand_distr::StandardNormal);
        c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    #[test]
    fn mult_conv_matches_wishart_with_covariance() {
        // (1/L) D^{1/2} Θ Θᴴ D^{1/2} with a two-level diagonal D.
        let (n, l) = (512, 1024);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let d: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 3.0 } else { 0.5 }).collect();
        let y = Mat::from_fn(n, l, |i, _| complex_gaussian(&mut rng) * d[i].sqrt());
        let emp = empirical_moments(&y, 3).unwrap();
        let d_moments = MomentVector::new(
            (1..=3).map(|p| d.iter().map(|x| x.powi(p)).sum::<f64>() / n as f64).collect(),
        );
        let pred = mult_conv_mp(&d_moments, n as f64 / l as f64);
        assert!((emp.values[2] - pred.values[2]).abs() / pred.values[2] < 0.02, "{emp:?} vs {pred:?}");
    }

    #[test]
    fn add_conv_matches_sum_of_free_wisharts() {
        // Two independent Wisharts with unitarily invariant distributions are
        // asymptotically free.
        let n = 512;
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let mut wishart = |l: usize, scale: f64| {
            let x = Mat::from_fn(n, l, |_, _| complex_gaussian(&mut rng) * scale.sqrt());
            crate::spectral::gram(&x)
        };
        let a = wishart(1024, 1.0);
        let b = wishart(256, 2.0);
        let sum = &a + &b;
        let eig = sum.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        let emp = MomentVector::from_eigenvalues(&eig, 3, 0.0);
        let ma = MarchenkoPastur::new(0.5).unwrap().moments(3);
        let mb = mult_conv_mp(&MomentVector::dirac(2.0, 3), 2.0);
        let pred = add_conv(&ma, &mb).unwrap();
        assert!((emp.values[2] - pred.values[2]).abs() / pred.values[2] < 0.02, "{emp:?} vs {pred:?}");
    }

    #[test]
    fn noiseless_single_cell_reduces_to_one_deconvolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_moments(&mut rng, 5);
        let m = MomentVector { ratio: 0.5, n_eff: 64, ..m };
        let d = recover_hph_moments(&m, 64, 128, 1, 0.0).unwrap();
        let direct = mult_deconv_mp(&m, 0.5);
        assert_close(&d.values, &direct.values, 1e-10);
        let noise_removed = deconvolve_noise(&m, 0.5, 0.0).unwrap();
        assert_close(&noise_removed.values, &m.values, 1e-10);
    }

    #[test]
    fn pipeline_preserves_first_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let m = random_moments(&mut rng, 4);
            let sigma2 = rng.gen_range(0.0..0.05);
            let d = recover_hph_moments(&m, 100, 300, 3, sigma2).unwrap();
            assert!((d.values[0] - (m.values[0] - sigma2)).abs() < 1e-12);
        }
    }

    #[test]
    fn pipeline_rejects_bad_input() {
        let m = mv(&[1.0, 2.0]);
        assert!(matches!(recover_hph_moments(&m, 8, 8, 2, -1.0), Err(Error::InvalidConfig(_))));
        let big = MomentVector::new(vec![1.0; 13]);
        assert!(matches!(recover_hph_moments(&big, 8, 8, 2, 0.0), Err(Error::Shape(_))));
        let inf = mv(&[1.0, f64::INFINITY]);
        assert!(matches!(recover_hph_moments(&inf, 8, 8, 2, 0.0), Err(Error::NumericInput(_))));
    }

    /// Nonzero spectra of AB and BA coincide; normalized traces over the
    /// larger space are the smaller-space ones divided by the size ratio.
    #[test]
    fn rank_padding_relation() {
        let (n, m, l) = (6usize, 3usize, 10usize);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = NetworkScenario::new(n, l, vec![3.0, 1.5, 0.5], 0.0).with_seed(4);
        let ch = sim::gen_channels(&s, 1).unwrap();
        let theta = Mat::from_fn(m * n, l, |_, _| complex_gaussian(&mut rng));
        // H P^{1/2}: N × MN.
        let hp = Mat::from_fn(n, m * n, |j, col| {
            let k = col / n;
            if col % n == j {
                ch.h[(k, j)] * s.powers[k].sqrt()
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let small = &hp * &theta;
        let small_moments = empirical_moments(&small, 4).unwrap();
        // (1/L) P^{1/2}HᴴH P^{1/2} ΘΘᴴ on the MN space, via its symmetric
        // form T^{1/2}ΘΘᴴT^{1/2} ~ eigenvalues of (1/L) Θᴴ HP ᴴ HP Θ padded.
        let t = hp.adjoint() * &hp;
        let big = &t * (&theta * theta.adjoint()) * faer::Scale(c64::new(1.0 / l as f64, 0.0));
        let mut pow = Mat::<c64>::identity(m * n, m * n);
        for p in 0..4 {
            pow = &pow * &big;
            let tr: f64 = (0..m * n).map(|i| pow[(i, i)].re).sum::<f64>() / (m * n) as f64;
            let want = small_moments.values[p] / m as f64;
            assert!((tr - want).abs() < 1e-10 * want, "p = {}: {tr} vs {want}", p + 1);
        }
        // Nonzero eigenvalues agree.
        let mut big_eig = (theta.adjoint() * &t * &theta * faer::Scale(c64::new(1.0 / l as f64, 0.0)))
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .unwrap();
        let small_eig = gram_eigenvalues(&small).unwrap();
        big_eig.retain(|v| *v > 1e-9);
        assert_eq!(big_eig.len(), small_eig.len());
        for (a, b) in big_eig.iter().zip(&small_eig) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0));
        }
    }
}
