//! Noise stability: multivariate, unbalanced and `(δ,ε)` variants.
//!
//! Everything exact goes through the squared μ-biased spectrum:
//! `Stab_{μ,ρ}(g) = Σ_S ĝ(S)² ∏_{i∈S} ρ_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{self, Kernel};
use crate::boolfn::{sign, BooleanFunction, TruthTable};
use crate::error::{Error, Result};
use crate::fourier::{self, BiasedSpectrum};
use crate::tol;

/// Largest arity for the `(δ,ε)` placement search.
pub const MAX_PLACEMENT_ARITY: usize = 20;

/// Samples drawn from one RNG stream in [`stab_sampled`].
pub const SAMPLE_BLOCK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationVector {
    rho: Vec<f64>,
}

impl CorrelationVector {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if let Some(i) = rho.iter().position(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::param(
                format!("rho_{}", i + 1),
                format!("{} is outside [0,1]", rho[i]),
            ));
        }
        Ok(Self { rho })
    }

    pub fn constant(k: usize, rho: f64) -> Result<Self> {
        Self::new(vec![rho; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn arithmetic_mean(&self) -> f64 {
        self.rho.iter().sum::<f64>() / self.rho.len() as f64
    }

    pub fn geometric_mean(&self) -> f64 {
        self.rho
            .iter()
            .product::<f64>()
            .powf(1.0 / self.rho.len() as f64)
    }
}

/// Stay probabilities: `a` for coordinates at `−1`, `b` for those at `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnbalParams {
    pub a: f64,
    pub b: f64,
}

impl UnbalParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("{v} is outside [0,1]")));
            }
        }
        Ok(Self { a, b })
    }

    /// Joint law of `(x_i, y_i)` when `x_i ∼ π_μ`.
    pub fn coupling(&self, mu: f64) -> Coupling {
        let (pm, pp) = ((1.0 - mu) / 2.0, (1.0 + mu) / 2.0);
        Coupling {
            joint: [
                [pm * self.a, pm * (1.0 - self.a)],
                [pp * (1.0 - self.b), pp * self.b],
            ],
        }
    }
}

/// A joint distribution of one pair `(x_i, y_i) ∈ {±1}²`;
/// `joint[x][y]` with bit 1 meaning `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub joint: [[f64; 2]; 2],
}

impl Coupling {
    pub fn mean_x(&self) -> f64 {
        let j = &self.joint;
        (j[1][0] + j[1][1]) - (j[0][0] + j[0][1])
    }

    pub fn mean_y(&self) -> f64 {
        let j = &self.joint;
        (j[0][1] + j[1][1]) - (j[0][0] + j[1][0])
    }

    /// `E[x_i y_i]`.
    pub fn correlation(&self) -> f64 {
        let j = &self.joint;
        (j[0][0] + j[1][1]) - (j[0][1] + j[1][0])
    }

    pub fn prob_y(&self, y_bit: usize) -> f64 {
        self.joint[0][y_bit] + self.joint[1][y_bit]
    }
}

/// `J(y) = Σ_x g(x) ∏_i P_i(x_i, y_i)`, i.e. `Pr[y]·E[g(x) | y]`.
pub fn coupled_table(g_values: &[f64], couplings: &[Coupling]) -> Vec<f64> {
    let kernels: Vec<Kernel> = couplings
        .iter()
        .map(|c| {
            let j = c.joint;
            [[j[0][0], j[1][0]], [j[0][1], j[1][1]]]
        })
        .collect();
    let mut out = g_values.to_vec();
    bits::tensor_apply(&mut out, &kernels);
    out
}

fn check_rho_len(k: usize, rho: &CorrelationVector) -> Result<()> {
    if rho.len() != k {
        return Err(Error::ArityMismatch {
            expected: k,
            got: rho.len(),
        });
    }
    Ok(())
}

pub fn stab_from_spectrum(spec: &BiasedSpectrum, rho: &[f64]) -> f64 {
    let weights: Vec<[f64; 2]> = rho.iter().map(|&r| [1.0, r]).collect();
    bits::tensor_contract(&spec.squares(), &weights)
}

/// `Stab` at a scalar correlation, from squared coefficients.
fn univariate(squares: &[f64], k: usize, rho: f64) -> f64 {
    bits::tensor_contract(squares, &vec![[1.0, rho]; k])
}

pub fn stab_fourier<G: BooleanFunction + ?Sized>(
    g: &G,
    mu: f64,
    rho: &CorrelationVector,
) -> Result<f64> {
    check_rho_len(g.arity(), rho)?;
    let spec = fourier::biased_spectrum(g, mu)?;
    Ok(stab_from_spectrum(&spec, rho.as_slice()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    /// `|mean − target| ≤ max(z·stderr, 1e−9)`.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= (z * self.stderr).max(tol::ALGEBRAIC)
    }
}

/// Monte-Carlo estimate of `E[g(y)g(z)]`: `y ∼ (π_μ)^k`, and each `z_i`
/// copies `y_i` with probability `ρ_i`, else is redrawn from `π_μ`.
///
/// Sample block `b` is drawn from stream `b` of a ChaCha8 generator keyed
/// by `seed`, so the result does not depend on the thread count.
pub fn stab_sampled(
    g: &TruthTable,
    mu: f64,
    rho: &CorrelationVector,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let k = g.arity();
    check_rho_len(k, rho)?;
    fourier::check_mu(mu)?;
    if samples == 0 {
        return Err(Error::param("samples", "must be at least 1"));
    }
    let p_plus = (1.0 + mu) / 2.0;
    let rho = rho.as_slice();
    let blocks = samples.div_ceil(SAMPLE_BLOCK);
    let partial: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = SAMPLE_BLOCK.min(samples - b * SAMPLE_BLOCK);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..count {
                let (mut y, mut z) = (0usize, 0usize);
                for (i, &r) in rho.iter().enumerate() {
                    let yi = rng.gen::<f64>() < p_plus;
                    let zi = if rng.gen::<f64>() < r {
                        yi
                    } else {
                        rng.gen::<f64>() < p_plus
                    };
                    y |= (yi as usize) << i;
                    z |= (zi as usize) << i;
                }
                let v = (g.get(y) * g.get(z)) as f64;
                sum += v;
                sum_sq += v * v;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(Estimate {
        mean,
        stderr: (var / n).sqrt(),
        samples,
    })
}

/// `∏_i (ρ_i + (1 − ρ_i) μ²)`.
pub fn stab_xor_closed(mu: f64, rho: &CorrelationVector) -> f64 {
    rho.as_slice()
        .iter()
        .map(|&r| r + (1.0 - r) * mu * mu)
        .product()
}

/// `E[g(x)h(y)]` with `x ∼ (π_μ)^k` and `y` obtained from `x` by keeping
/// each `−1` with probability `a` and each `+1` with probability `b`.
pub fn unbal_stab(g: &TruthTable, h: &TruthTable, mu: f64, params: UnbalParams) -> Result<f64> {
    if g.arity() != h.arity() {
        return Err(Error::ArityMismatch {
            expected: g.arity(),
            got: h.arity(),
        });
    }
    fourier::check_mu(mu)?;
    let couplings = vec![params.coupling(mu); g.arity()];
    let joint = coupled_table(&g.as_f64(), &couplings);
    Ok(joint
        .iter()
        .enumerate()
        .map(|(y, j)| j * h.get(y) as f64)
        .sum())
}

/// The sign-of-conditional-mean response to a coupled input and the
/// stability it is guaranteed to beat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub h: TruthTable,
    /// `E[g(x) h(y)]`.
    pub advantage: f64,
    pub alpha: CorrelationVector,
    /// `Stab_{μ,α}(g)`.
    pub stab_alpha: f64,
    pub mu: f64,
}

/// `h(y) = sign(E[g(x) | y])` for independent coordinate pairs sharing the
/// mean `μ = E[x_i]`, together with
/// `α_i = max(0, (E[x_i y_i]² − μ²)/(1 − μ²))`.
pub fn best_response<G: BooleanFunction + ?Sized>(
    g: &G,
    couplings: &[Coupling],
) -> Result<BestResponse> {
    let k = g.arity();
    if couplings.len() != k {
        return Err(Error::ArityMismatch {
            expected: k,
            got: couplings.len(),
        });
    }
    let mu = couplings.first().map_or(0.0, Coupling::mean_x);
    if let Some(i) = couplings
        .iter()
        .position(|c| (c.mean_x() - mu).abs() > tol::ALGEBRAIC)
    {
        return Err(Error::param(
            "couplings",
            format!("coordinate {} has mean {} but coordinate 1 has {mu}", i + 1, couplings[i].mean_x()),
        ));
    }
    let values: Vec<f64> = (0..1usize << k).map(|x| g.expected(x)).collect();
    let joint = coupled_table(&values, couplings);
    let h = TruthTable::new(k, joint.iter().map(|&j| sign(j)).collect())?;
    let advantage = joint.iter().map(|j| j.abs()).sum();
    let alpha = CorrelationVector::new(
        couplings
            .iter()
            .map(|c| normalized_correlation(c.correlation().powi(2), mu))
            .collect(),
    )?;
    let spec = fourier::spectrum_of_values(&values, mu)?;
    let stab_alpha = stab_from_spectrum(&spec, alpha.as_slice());
    Ok(BestResponse {
        h,
        advantage,
        alpha,
        stab_alpha,
        mu,
    })
}

/// `max(0, (t − μ²)/(1 − μ²))`, capped at 1.
pub fn normalized_correlation(t: f64, mu: f64) -> f64 {
    let mu2 = mu * mu;
    ((t - mu2) / (1.0 - mu2)).clamp(0.0, 1.0)
}

pub fn unbal_best_h(g: &TruthTable, mu: f64, params: UnbalParams) -> Result<BestResponse> {
    fourier::check_mu(mu)?;
    best_response(g, &vec![params.coupling(mu); g.arity()])
}

/// Number of noised coordinates, `⌈δk⌉`.
pub fn noised_count(delta: f64, k: usize) -> usize {
    ((delta * k as f64) - tol::ALGEBRAIC).ceil().max(0.0) as usize
}

fn check_delta_eps(delta: f64, eps: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", format!("{delta} is outside (0,1]")));
    }
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::param("eps", format!("{eps} is outside [0,1/2)")));
    }
    Ok(())
}

/// Largest stability over correlation vectors with `⌈δk⌉` coordinates at
/// `1 − 2ε` and the rest at 1; ties go to the smallest noised bitmask.
pub fn delta_eps_stab(
    g: &TruthTable,
    delta: f64,
    eps: f64,
    mu: f64,
) -> Result<(f64, CorrelationVector)> {
    check_delta_eps(delta, eps)?;
    let k = g.arity();
    if k > MAX_PLACEMENT_ARITY {
        return Err(Error::SearchTooLarge {
            what: format!("noise placement over k={k} coordinates (limit {MAX_PLACEMENT_ARITY})"),
        });
    }
    let m = noised_count(delta, k);
    let c = 1.0 - 2.0 * eps;
    let spec = fourier::biased_spectrum(g, mu)?;
    let witness_of = |mask: usize| {
        CorrelationVector::new(
            (0..k)
                .map(|i| if mask >> i & 1 == 1 { c } else { 1.0 })
                .collect(),
        )
    };
    if g.is_symmetric() {
        let mask = (1usize << m) - 1;
        let w = witness_of(mask)?;
        return Ok((stab_from_spectrum(&spec, w.as_slice()), w));
    }
    let mut table = spec.squares();
    bits::tensor_apply(&mut table, &vec![[[1.0, 1.0], [1.0, c]]; k]);
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (mask, &v) in table.iter().enumerate() {
        if mask.count_ones() as usize == m && v > best.0 + tol::TIE {
            best = (v, mask);
        }
    }
    Ok((best.0, witness_of(best.1)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub gm_lower: f64,
    pub exact: f64,
    pub am_upper: f64,
}

fn sandwich_values(g: &TruthTable, mu: f64, rho: &CorrelationVector) -> Result<(Vec<f64>, f64)> {
    check_rho_len(g.arity(), rho)?;
    let spec = fourier::biased_spectrum(g, mu)?;
    let exact = stab_from_spectrum(&spec, rho.as_slice());
    Ok((spec.squares(), exact))
}

/// `Stab` at the geometric mean, at `ρ`, and at the arithmetic mean, for a
/// symmetric `g`; fails if the three are out of order.
pub fn am_gm_sandwich(g: &TruthTable, mu: f64, rho: &CorrelationVector) -> Result<Sandwich> {
    g.require_symmetric()?;
    let (squares, exact) = sandwich_values(g, mu, rho)?;
    let k = g.arity();
    let out = Sandwich {
        gm_lower: univariate(&squares, k, rho.geometric_mean()),
        exact,
        am_upper: univariate(&squares, k, rho.arithmetic_mean()),
    };
    if out.gm_lower > out.exact + tol::ALGEBRAIC || out.exact > out.am_upper + tol::ALGEBRAIC {
        return Err(Error::BoundViolated(format!(
            "AM/GM sandwich out of order: {} ≤ {} ≤ {}",
            out.gm_lower, out.exact, out.am_upper
        )));
    }
    Ok(out)
}

/// Caller's promise that `g` is transitive; not checked.
#[derive(Debug, Clone, Copy)]
pub struct TransitivityAsserted;

/// The geometric-mean lower bound alone, which needs only transitivity.
/// Returns `(gm_lower, exact)`.
pub fn gm_lower_transitive(
    g: &TruthTable,
    mu: f64,
    rho: &CorrelationVector,
    _assertion: TransitivityAsserted,
) -> Result<(f64, f64)> {
    let (squares, exact) = sandwich_values(g, mu, rho)?;
    let lower = univariate(&squares, g.arity(), rho.geometric_mean());
    if lower > exact + tol::ALGEBRAIC {
        return Err(Error::BoundViolated(format!(
            "geometric-mean bound {lower} exceeds {exact}"
        )));
    }
    Ok((lower, exact))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoStar {
    /// The `(δ,ε)` stability being matched.
    pub value: f64,
    pub rho_star: f64,
    pub lo: f64,
    pub hi: f64,
    pub delta_prime: f64,
}

/// Solves `Stab_{μ,ρ*}(g) = (δ,ε)-stability` for a symmetric `g` and checks
/// `1 − 2δ'ε − 4ε² ≤ ρ* ≤ 1 − 2δ'ε` with `δ' = ⌈kδ⌉/k`.
pub fn rho_star_bracket(g: &TruthTable, delta: f64, eps: f64, mu: f64) -> Result<RhoStar> {
    g.require_symmetric()?;
    let (value, _) = delta_eps_stab(g, delta, eps, mu)?;
    let k = g.arity();
    let squares = fourier::biased_spectrum(g, mu)?.squares();
    let at = |r: f64| univariate(&squares, k, r);
    if at(1.0) - at(0.0) <= tol::NORMALIZATION {
        return Err(Error::ConstantStability);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        if hi - lo <= 1e-10 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if at(mid) < value {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho_star = 0.5 * (lo + hi);
    let delta_prime = noised_count(delta, k) as f64 / k as f64;
    let out = RhoStar {
        value,
        rho_star,
        lo: 1.0 - 2.0 * delta_prime * eps - 4.0 * eps * eps,
        hi: 1.0 - 2.0 * delta_prime * eps,
        delta_prime,
    };
    if rho_star < out.lo - tol::ALGEBRAIC || rho_star > out.hi + tol::ALGEBRAIC {
        return Err(Error::BoundViolated(format!(
            "rho* = {rho_star} outside [{}, {}]",
            out.lo, out.hi
        )));
    }
    Ok(out)
}

/// `q_c(x) = (1 − x)^c − 1 + cx + (1 − c)x²`.
pub fn q_c(c: f64, x: f64) -> f64 {
    (1.0 - x).powf(c) - 1.0 + c * x + (1.0 - c) * x * x
}
