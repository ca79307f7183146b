//! μ-biased Fourier analysis on `{±1}^k`.
//!
//! Under `(π_μ)^k` the functions `∏_{i∈S} φ_μ(y_i)` with
//! `φ_μ(x) = (x − μ)/σ`, `σ = √(1 − μ²)`, form an orthonormal basis. The
//! transform here runs as a per-coordinate butterfly, so a spectrum costs
//! `k·2^k` operations.

use serde::{Deserialize, Serialize};

use crate::bits::{self, Kernel};
use crate::boolfn::{BooleanFunction, Distribution, TruthTable};
use crate::error::{Error, Result};
use crate::tol;

/// Largest arity accepted by the transforms.
pub const MAX_SPECTRUM_ARITY: usize = 20;

/// Largest arity for the direct `4^k` summation.
pub const MAX_DIRECT_ARITY: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasedSpectrum {
    pub k: usize,
    pub mu: f64,
    pub sigma: f64,
    /// Coefficient of the subset with bitmask `S` at index `S`.
    pub coeffs: Vec<f64>,
}

/// Rejects `|μ| ≥ 1 − 1e−9`.
pub fn check_mu(mu: f64) -> Result<()> {
    if !(mu.abs() < 1.0 - tol::MU_MARGIN) {
        return Err(Error::param(
            "mu",
            format!("{mu} is outside the open interval (-1,1)"),
        ));
    }
    Ok(())
}

/// `φ_μ(x)` for real `x`.
#[inline]
pub fn phi(mu: f64, x: f64) -> f64 {
    (x - mu) / (1.0 - mu * mu).sqrt()
}

fn forward_kernel(mu: f64) -> Kernel {
    let (pm, pp) = ((1.0 - mu) / 2.0, (1.0 + mu) / 2.0);
    [[pm, pp], [pm * phi(mu, -1.0), pp * phi(mu, 1.0)]]
}

fn inverse_kernel(mu: f64) -> Kernel {
    [[1.0, phi(mu, -1.0)], [1.0, phi(mu, 1.0)]]
}

fn check_arity(k: usize) -> Result<()> {
    if k > MAX_SPECTRUM_ARITY {
        return Err(Error::Capacity {
            arity: k,
            max: MAX_SPECTRUM_ARITY,
        });
    }
    Ok(())
}

/// Spectrum of an arbitrary real table (e.g. expected outputs of a
/// randomized function).
pub fn spectrum_of_values(values: &[f64], mu: f64) -> Result<BiasedSpectrum> {
    check_mu(mu)?;
    if !values.len().is_power_of_two() {
        return Err(Error::param("values", "length is not a power of two"));
    }
    let k = values.len().trailing_zeros() as usize;
    check_arity(k)?;
    let mut coeffs = values.to_vec();
    bits::tensor_apply(&mut coeffs, &vec![forward_kernel(mu); k]);
    Ok(BiasedSpectrum {
        k,
        mu,
        sigma: (1.0 - mu * mu).sqrt(),
        coeffs,
    })
}

pub fn biased_spectrum<G: BooleanFunction + ?Sized>(g: &G, mu: f64) -> Result<BiasedSpectrum> {
    let values: Vec<f64> = (0..1usize << g.arity()).map(|x| g.expected(x)).collect();
    spectrum_of_values(&values, mu)
}

/// Evaluates each coefficient from its defining expectation.
pub fn direct_spectrum(g: &TruthTable, mu: f64) -> Result<BiasedSpectrum> {
    check_mu(mu)?;
    let k = g.arity();
    if k > MAX_DIRECT_ARITY {
        return Err(Error::SearchTooLarge {
            what: format!("direct transform at k={k} (limit {MAX_DIRECT_ARITY})"),
        });
    }
    let p_plus = (1.0 + mu) / 2.0;
    let weight = |y: usize| -> f64 {
        (0..k)
            .map(|i| if y >> i & 1 == 1 { p_plus } else { 1.0 - p_plus })
            .product()
    };
    let coeffs = (0..1usize << k)
        .map(|s| {
            (0..1usize << k)
                .map(|y| {
                    let chi: f64 = bits::coords_of(s)
                        .into_iter()
                        .map(|i| phi(mu, bits::sign_at(y, i)))
                        .product();
                    weight(y) * g.expected(y) * chi
                })
                .sum()
        })
        .collect();
    Ok(BiasedSpectrum {
        k,
        mu,
        sigma: (1.0 - mu * mu).sqrt(),
        coeffs,
    })
}

impl BiasedSpectrum {
    /// `Σ_S ĝ(S)²`.
    pub fn parseval(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Reconstructs the table `g(y) = Σ_S ĝ(S) ∏_{i∈S} φ_μ(y_i)`.
    pub fn inverse(&self) -> Vec<f64> {
        let mut v = self.coeffs.clone();
        bits::tensor_apply(&mut v, &vec![inverse_kernel(self.mu); self.k]);
        v
    }

    /// Squared coefficients, the weights of every stability formula.
    pub fn squares(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c * c).collect()
    }

    /// `E_{y∼π_ν}[g(y)] = Σ_S ĝ(S) ∏_{i∈S} φ_μ(ν_i)`.
    pub fn mean_under_product(&self, nu: &[f64]) -> Result<f64> {
        if nu.len() != self.k {
            return Err(Error::ArityMismatch {
                expected: self.k,
                got: nu.len(),
            });
        }
        if let Some(i) = nu.iter().position(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::param(
                "nu",
                format!("nu_{} = {} is outside [-1,1]", i + 1, nu[i]),
            ));
        }
        let weights: Vec<[f64; 2]> = nu.iter().map(|&v| [1.0, phi(self.mu, v)]).collect();
        Ok(bits::tensor_contract(&self.coeffs, &weights))
    }

    /// The distribution on subsets (as bitmasks) with mass `ĝ(S)²`.
    pub fn spectral_sample(&self) -> Result<Distribution> {
        let total = self.parseval();
        if (total - 1.0).abs() > tol::ALGEBRAIC {
            return Err(Error::NotBoolean { sum: total });
        }
        Distribution::from_unnormalized(self.k, self.squares())
    }
}

pub fn mean_under_product(spec: &BiasedSpectrum, nu: &[f64]) -> Result<f64> {
    spec.mean_under_product(nu)
}

pub fn spectral_sample(spec: &BiasedSpectrum) -> Result<Distribution> {
    spec.spectral_sample()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{make_named, NamedFn, ProductDist};
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn xor_and_spectra() {
        let xor = biased_spectrum(&make_named(NamedFn::Xor, 2).unwrap(), 0.0).unwrap();
        for (s, c) in xor.coeffs.iter().enumerate() {
            assert!(close(*c, if s == 3 { 1.0 } else { 0.0 }));
        }
        let and = biased_spectrum(&make_named(NamedFn::And, 2).unwrap(), 0.0).unwrap();
        let want = [-0.5, 0.5, 0.5, 0.5];
        for (c, w) in and.coeffs.iter().zip(want) {
            assert!(close(*c, w));
        }
    }

    #[test]
    fn means_under_product() {
        let and = biased_spectrum(&make_named(NamedFn::And, 2).unwrap(), 0.0).unwrap();
        assert!(close(and.mean_under_product(&[0.5, 0.5]).unwrap(), 0.125));
        let xor = biased_spectrum(&make_named(NamedFn::Xor, 2).unwrap(), 0.0).unwrap();
        assert!(close(xor.mean_under_product(&[1.0, 1.0]).unwrap(), 1.0));
        let maj = biased_spectrum(&make_named(NamedFn::Maj, 5).unwrap(), 0.3).unwrap();
        assert!(close(maj.mean_under_product(&[0.3; 5]).unwrap(), maj.coeffs[0]));
        assert!(matches!(
            maj.mean_under_product(&[0.0; 4]),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn spectral_samples() {
        let xor = biased_spectrum(&make_named(NamedFn::Xor, 4).unwrap(), 0.0).unwrap();
        assert!(close(xor.spectral_sample().unwrap().weight(0b1111), 1.0));
        let and = biased_spectrum(&make_named(NamedFn::And, 2).unwrap(), 0.0).unwrap();
        let s = and.spectral_sample().unwrap();
        for x in 0..4 {
            assert!(close(s.weight(x), 0.25));
        }
        let dict = biased_spectrum(&make_named(NamedFn::Dict(1), 3).unwrap(), 0.0).unwrap();
        assert!(close(dict.spectral_sample().unwrap().weight(0b001), 1.0));
        let half = spectrum_of_values(&[0.5; 4], 0.0).unwrap();
        assert!(matches!(half.spectral_sample(), Err(Error::NotBoolean { .. })));
    }

    #[test]
    fn mu_must_be_interior() {
        let g = make_named(NamedFn::Maj, 3).unwrap();
        assert!(matches!(biased_spectrum(&g, 1.0), Err(Error::InvalidParameter { .. })));
        assert!(matches!(biased_spectrum(&g, -1.0 + 1e-10), Err(Error::InvalidParameter { .. })));
        assert!(biased_spectrum(&g, 0.999).is_ok());
    }

    fn arb_table(max_k: usize) -> impl Strategy<Value = TruthTable> {
        (1usize..=max_k).prop_flat_map(|k| {
            proptest::collection::vec(any::<bool>(), 1 << k).prop_map(move |v| {
                TruthTable::new(k, v.into_iter().map(|b| if b { 1 } else { -1 }).collect())
                    .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn butterfly_matches_direct(g in arb_table(6), mu in -0.9f64..0.9) {
            let fast = biased_spectrum(&g, mu).unwrap();
            let slow = direct_spectrum(&g, mu).unwrap();
            for (a, b) in fast.coeffs.iter().zip(&slow.coeffs) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn parseval_and_roundtrip(g in arb_table(12), mu in -0.9f64..0.9) {
            let s = biased_spectrum(&g, mu).unwrap();
            prop_assert!((s.parseval() - 1.0).abs() < 1e-9);
            for (x, v) in s.inverse().iter().enumerate() {
                prop_assert!((v - g.get(x) as f64).abs() < 1e-9);
            }
        }

        #[test]
        fn plancherel(
            (g, h) in (1usize..=7).prop_flat_map(|k| {
                let t = proptest::collection::vec(any::<bool>(), 1 << k);
                (t.clone(), t).prop_map(move |(a, b)| {
                    let mk = |v: Vec<bool>| TruthTable::new(k, v.into_iter().map(|b| if b { 1 } else { -1 }).collect()).unwrap();
                    (mk(a), mk(b))
                })
            }),
            mu in -0.9f64..0.9,
        ) {
            let k = g.arity();
            let dist = ProductDist::new(vec![mu; k]).unwrap().to_distribution().unwrap();
            let inner: f64 = (0..1usize << k)
                .map(|x| dist.weight(x) * (g.get(x) * h.get(x)) as f64)
                .sum();
            let (sg, sh) = (biased_spectrum(&g, mu).unwrap(), biased_spectrum(&h, mu).unwrap());
            let spectral: f64 = sg.coeffs.iter().zip(&sh.coeffs).map(|(a, b)| a * b).sum();
            prop_assert!((inner - spectral).abs() < 1e-9);
        }

        #[test]
        fn mean_matches_enumeration(
            g in arb_table(10),
            mu in -0.9f64..0.9,
            seed_nu in proptest::collection::vec(-1.0f64..=1.0, 10),
        ) {
            let k = g.arity();
            let nu = &seed_nu[..k];
            let dist = ProductDist::new(nu.to_vec()).unwrap().to_distribution().unwrap();
            let direct: f64 = (0..1usize << k).map(|x| dist.weight(x) * g.get(x) as f64).sum();
            let spec = biased_spectrum(&g, mu).unwrap();
            prop_assert!((spec.mean_under_product(nu).unwrap() - direct).abs() < 1e-9);
        }
    }
}
