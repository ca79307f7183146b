//! Exact junta approximation under an explicit distribution.
//!
//! For a coordinate set `S`, the inputs split into `2^{|S|}` cells by their
//! restriction to `S`. The best `S`-junta takes the sign of the conditional
//! mean on each cell, and its advantage is `Σ_cells |Σ_{x∈cell} D(x)E[q(x)]|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::boolfn::{sign, BooleanFunction, Distribution, TruthTable};
use crate::error::{Error, Result};
use crate::tol;

/// Largest arity accepted by [`optimal_junta`].
pub const MAX_SEARCH_ARITY: usize = 20;
/// Largest number of candidate sets [`optimal_junta`] will score.
pub const MAX_CANDIDATES: u64 = 1_000_000;
/// Largest arity accepted by [`advantage_curve`], which scores every subset.
pub const MAX_CURVE_ARITY: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JuntaApprox {
    /// Bitmask of relevant coordinates.
    pub coords: usize,
    /// Output on each restriction to `coords`, indexed by the compressed bits.
    pub table: Vec<i8>,
    pub advantage: f64,
}

impl JuntaApprox {
    #[inline]
    pub fn eval(&self, x: usize) -> i8 {
        self.table[bits::compress(x, self.coords)]
    }

    pub fn size(&self) -> usize {
        self.coords.count_ones() as usize
    }

    pub fn error(&self) -> f64 {
        error_of(self.advantage)
    }

    /// Expands to a full table on `n` inputs.
    pub fn to_table(&self, n: usize) -> Result<TruthTable> {
        TruthTable::new(n, (0..1usize << n).map(|x| self.eval(x)).collect())
    }
}

/// `(1 − advantage)/2`.
#[inline]
pub fn error_of(advantage: f64) -> f64 {
    (1.0 - advantage) / 2.0
}

fn check_shape<Q: BooleanFunction + ?Sized>(q: &Q, dist: &Distribution, mask: usize) -> Result<()> {
    if q.arity() != dist.arity() {
        return Err(Error::ArityMismatch {
            expected: dist.arity(),
            got: q.arity(),
        });
    }
    if mask >> q.arity() != 0 {
        return Err(Error::param(
            "S",
            format!("coordinate set {mask:#b} exceeds arity {}", q.arity()),
        ));
    }
    Ok(())
}

/// Per-cell `Σ_{x∈cell} D(x)·E[q(x)]`.
fn cell_sums<Q: BooleanFunction + ?Sized>(q: &Q, dist: &Distribution, mask: usize) -> Vec<f64> {
    let mut sum = vec![0.0; 1usize << mask.count_ones()];
    for (x, &w) in dist.weights().iter().enumerate() {
        if w != 0.0 {
            sum[bits::compress(x, mask)] += w * q.expected(x);
        }
    }
    sum
}

/// `E_D[q(y) | y_S = x_S]`.
pub fn conditional_mean<Q: BooleanFunction + ?Sized>(
    q: &Q,
    dist: &Distribution,
    mask: usize,
    x: usize,
) -> Result<f64> {
    check_shape(q, dist, mask)?;
    let (mut w, mut s) = (0.0, 0.0);
    for (y, &wy) in dist.weights().iter().enumerate() {
        if (y ^ x) & mask == 0 {
            w += wy;
            s += wy * q.expected(y);
        }
    }
    if w <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    Ok(s / w)
}

pub fn advantage_of_set<Q: BooleanFunction + ?Sized>(q: &Q, dist: &Distribution, mask: usize) -> Result<f64> {
    check_shape(q, dist, mask)?;
    Ok(cell_sums(q, dist, mask).iter().map(|s| s.abs()).sum())
}

/// Sign of the conditional mean on every cell, `+1` on ties and on cells
/// of probability zero.
pub fn best_junta_on_set<Q: BooleanFunction + ?Sized>(
    q: &Q,
    dist: &Distribution,
    mask: usize,
) -> Result<JuntaApprox> {
    check_shape(q, dist, mask)?;
    let sums = cell_sums(q, dist, mask);
    Ok(JuntaApprox {
        coords: mask,
        table: sums.iter().map(|&s| sign(s)).collect(),
        advantage: sums.iter().map(|s| s.abs()).sum(),
    })
}

/// `E_D[q·h]` for an arbitrary `±1` table `h`.
pub fn advantage_against<Q: BooleanFunction + ?Sized>(
    q: &Q,
    dist: &Distribution,
    h: &TruthTable,
) -> Result<f64> {
    check_shape(q, dist, 0)?;
    if h.arity() != q.arity() {
        return Err(Error::ArityMismatch {
            expected: q.arity(),
            got: h.arity(),
        });
    }
    Ok(dist
        .weights()
        .iter()
        .enumerate()
        .map(|(x, &w)| w * q.expected(x) * h.get(x) as f64)
        .sum())
}

fn masks_up_to(n: usize, r: usize) -> Vec<usize> {
    (0..1usize << n)
        .filter(|m| m.count_ones() as usize <= r)
        .collect()
}

/// Advantage of each set in `masks`, scored in parallel.
fn score_sets<Q: BooleanFunction + Sync + ?Sized>(
    q: &Q,
    dist: &Distribution,
    masks: &[usize],
) -> Vec<f64> {
    masks
        .par_iter()
        .map(|&m| cell_sums(q, dist, m).iter().map(|s| s.abs()).sum())
        .collect()
}

/// The best junta on at most `r` coordinates; ties go to the smallest
/// bitmask.
pub fn optimal_junta<Q: BooleanFunction + Sync + ?Sized>(
    q: &Q,
    dist: &Distribution,
    r: usize,
) -> Result<JuntaApprox> {
    check_shape(q, dist, 0)?;
    let n = q.arity();
    let r = r.min(n);
    if n > MAX_SEARCH_ARITY {
        return Err(Error::SearchTooLarge {
            what: format!("junta search over n={n} (limit {MAX_SEARCH_ARITY})"),
        });
    }
    let candidates: u64 = (0..=r).map(|j| bits::binomial(n, j)).fold(0, u64::saturating_add);
    if candidates > MAX_CANDIDATES {
        return Err(Error::SearchTooLarge {
            what: format!("{candidates} candidate sets for n={n}, r={r} (limit {MAX_CANDIDATES})"),
        });
    }
    let masks = masks_up_to(n, r);
    let scores = score_sets(q, dist, &masks);
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] + tol::TIE {
            best = i;
        }
    }
    best_junta_on_set(q, dist, masks[best])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageCurve {
    /// `Adv_D(f, r)` for `r = 0..=n`.
    pub advantages: Vec<f64>,
    /// A maximizing set for each budget.
    pub coords: Vec<usize>,
}

impl AdvantageCurve {
    pub fn arity(&self) -> usize {
        self.advantages.len() - 1
    }

    /// Budgets past `n` saturate.
    pub fn advantage(&self, r: usize) -> f64 {
        self.advantages[r.min(self.arity())]
    }

    pub fn error(&self, r: usize) -> f64 {
        error_of(self.advantage(r))
    }

    pub fn errors(&self) -> Vec<f64> {
        self.advantages.iter().map(|&a| error_of(a)).collect()
    }
}

/// Scores every subset once and keeps the running best per budget.
pub fn advantage_curve<Q: BooleanFunction + Sync + ?Sized>(
    q: &Q,
    dist: &Distribution,
) -> Result<AdvantageCurve> {
    check_shape(q, dist, 0)?;
    let n = q.arity();
    if n > MAX_CURVE_ARITY {
        return Err(Error::SearchTooLarge {
            what: format!("advantage curve over n={n} (limit {MAX_CURVE_ARITY})"),
        });
    }
    let masks: Vec<usize> = (0..1usize << n).collect();
    let scores = score_sets(q, dist, &masks);
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(n + 1);
    for r in 0..=n {
        let mut b = (f64::NEG_INFINITY, 0);
        for (m, &s) in scores.iter().enumerate() {
            if m.count_ones() as usize <= r && s > b.0 + tol::TIE {
                b = (s, m);
            }
        }
        best.push(b);
    }
    Ok(AdvantageCurve {
        advantages: best.iter().map(|b| b.0).collect(),
        coords: best.iter().map(|b| b.1).collect(),
    })
}

/// Smallest `r` with `error_D(f, r) ≤ ε`.
pub fn junta_complexity(curve: &AdvantageCurve, eps: f64) -> usize {
    (0..=curve.arity())
        .find(|&r| curve.error(r) <= eps + tol::TIE)
        .unwrap_or(curve.arity())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{make_named, NamedFn, ProbFunction};
    use proptest::prelude::*;

    fn named(n: NamedFn, k: usize) -> TruthTable {
        make_named(n, k).unwrap()
    }

    fn uni(n: usize) -> Distribution {
        Distribution::uniform(n).unwrap()
    }

    #[test]
    fn conditional_means() {
        let maj = named(NamedFn::Maj, 3);
        assert_eq!(conditional_mean(&maj, &uni(3), 0b111, 0b101).unwrap(), 1.0);
        let xor = named(NamedFn::Xor, 4);
        for x in 0..16 {
            assert_eq!(conditional_mean(&xor, &uni(4), 0b0111, x).unwrap(), 0.0);
        }
        let point = Distribution::new(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            conditional_mean(&named(NamedFn::And, 2), &point, 0b01, 0b01),
            Err(Error::ZeroProbability)
        );
    }

    #[test]
    fn set_advantages() {
        let maj = named(NamedFn::Maj, 3);
        assert!((advantage_of_set(&maj, &uni(3), 0b001).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(advantage_of_set(&maj, &uni(3), 0b111).unwrap(), 1.0);
        for s in 0..0b1111 {
            if s != 0b1111 {
                let xor = named(NamedFn::Xor, 4);
                assert_eq!(advantage_of_set(&xor, &uni(4), s).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn best_juntas() {
        let maj = named(NamedFn::Maj, 3);
        let j = best_junta_on_set(&maj, &uni(3), 0b011).unwrap();
        assert_eq!(j.table, vec![-1, 1, 1, 1]);
        let and = named(NamedFn::And, 3);
        let c = best_junta_on_set(&and, &uni(3), 0).unwrap();
        assert_eq!(c.table, vec![-1]);
        assert!((c.advantage - 0.75).abs() < 1e-15);
        let p = ProbFunction::constant(3, 0.75).unwrap();
        assert_eq!(best_junta_on_set(&p, &uni(3), 0b011).unwrap().table, vec![1; 4]);
    }

    #[test]
    fn optimal_and_curves() {
        let maj = named(NamedFn::Maj, 3);
        let j = optimal_junta(&maj, &uni(3), 1).unwrap();
        assert_eq!(j.coords, 0b001);
        assert!((j.advantage - 0.5).abs() < 1e-15);
        let curve = advantage_curve(&maj, &uni(3)).unwrap();
        assert_eq!(junta_complexity(&curve, 0.25), 1);
        assert_eq!(junta_complexity(&curve, 0.5), 0);
        for n in 1..=6 {
            let xor = named(NamedFn::Xor, n);
            let c = advantage_curve(&xor, &uni(n)).unwrap();
            for r in 0..n {
                assert_eq!(c.error(r), 0.5);
            }
            assert_eq!(c.error(n), 0.0);
            assert_eq!(junta_complexity(&c, 0.49), n);
            assert_eq!(optimal_junta(&xor, &uni(n), n).unwrap().advantage, 1.0);
        }
        assert!(matches!(
            optimal_junta(&named(NamedFn::Xor, 21), &uni(21), 2),
            Err(Error::SearchTooLarge { .. })
        ));
    }

    fn arb_instance(max_n: usize) -> impl Strategy<Value = (ProbFunction, Distribution)> {
        (1usize..=max_n).prop_flat_map(|n| {
            (
                proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0], 1 << n),
                proptest::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], 1 << n),
            )
                .prop_filter("mass", |(_, w)| w.iter().sum::<f64>() > 0.0)
                .prop_map(move |(p, w)| {
                    (
                        ProbFunction::new(n, p).unwrap(),
                        Distribution::from_unnormalized(n, w).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn curve_monotone_and_beats_constants((q, d) in arb_instance(6)) {
            let c = advantage_curve(&q, &d).unwrap();
            let mu = crate::boolfn::mean(&q, &d).unwrap();
            for r in 0..c.arity() {
                prop_assert!(c.advantages[r + 1] >= c.advantages[r] - 1e-15);
            }
            for s in 0..1usize << q.arity() {
                prop_assert!(advantage_of_set(&q, &d, s).unwrap() >= mu.abs() - 1e-12);
            }
            for r in 0..=c.arity() {
                let j = optimal_junta(&q, &d, r).unwrap();
                prop_assert!((j.advantage - c.advantages[r]).abs() < 1e-12);
                prop_assert_eq!(j.coords, c.coords[r]);
                let recomputed = advantage_against(&q, &d, &j.to_table(q.arity()).unwrap()).unwrap();
                prop_assert!((recomputed - j.advantage).abs() < 1e-9);
                prop_assert!((1.0 - 2.0 * j.error() - j.advantage).abs() < 1e-15);
            }
        }

        #[test]
        fn sign_rule_is_optimal((q, d) in arb_instance(4), s in 0usize..16) {
            let n = q.arity();
            let mask = s & ((1 << n) - 1);
            if mask.count_ones() <= 2 {
                let best = advantage_of_set(&q, &d, mask).unwrap();
                let cells = 1usize << mask.count_ones();
                for pattern in 0..1usize << cells {
                    let h = TruthTable::from_fn(n, |x| pattern >> bits::compress(x, mask) & 1 == 1).unwrap();
                    prop_assert!(advantage_against(&q, &d, &h).unwrap() <= best + 1e-12);
                }
            }
        }
    }
}
