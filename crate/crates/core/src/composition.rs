//! Composed functions `g∘f` and their junta approximation.
//!
//! Block `i` of a composed input occupies bits `[i·n, (i+1)·n)`. Under
//! `D^k` the blocks are independent, so every composed-space expectation
//! here is assembled from per-block joint laws of `(f, f̃)` and a `k·2^k`
//! tensor pass over `g`; the `2^{nk}` table is only built for the
//! exhaustive cross-checks.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::boolfn::{mean, sign, BooleanFunction, Distribution, ProbFunction, TruthTable};
use crate::error::{Error, Result};
use crate::fourier;
use crate::junta::{self, AdvantageCurve};
use crate::stability::{self, normalized_correlation, Coupling, CorrelationVector};
use crate::tol;

/// Largest `n·k` for which the composed table is materialized.
pub const MAX_MATERIALIZED: usize = 14;

#[derive(Debug)]
pub struct ComposedInstance {
    g: TruthTable,
    f: ProbFunction,
    dist: Distribution,
    mu: f64,
    curve: OnceLock<AdvantageCurve>,
}

impl ComposedInstance {
    pub fn new(g: TruthTable, f: ProbFunction, dist: Distribution) -> Result<Self> {
        let mu = mean(&f, &dist)?;
        Ok(Self {
            g,
            f,
            dist,
            mu,
            curve: OnceLock::new(),
        })
    }

    pub fn g(&self) -> &TruthTable {
        &self.g
    }

    pub fn f(&self) -> &ProbFunction {
        &self.f
    }

    pub fn dist(&self) -> &Distribution {
        &self.dist
    }

    /// `E_D[f]`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn k(&self) -> usize {
        self.g.arity()
    }

    pub fn n(&self) -> usize {
        self.f.arity()
    }

    /// True when `f` is a.s. constant under `D`, where the biased basis
    /// does not exist.
    pub fn degenerate(&self) -> bool {
        self.mu.abs() >= 1.0 - tol::MU_MARGIN
    }

    pub fn curve(&self) -> Result<&AdvantageCurve> {
        if let Some(c) = self.curve.get() {
            return Ok(c);
        }
        let c = junta::advantage_curve(&self.f, &self.dist)?;
        Ok(self.curve.get_or_init(|| c))
    }

    /// `Pr[(g∘f)(x) = +1]` for the concatenated input `x`.
    pub fn eval(&self, x: usize) -> f64 {
        let (n, k) = (self.n(), self.k());
        let block = (1usize << n) - 1;
        let p: Vec<f64> = (0..k).map(|i| self.f.prob_plus((x >> (i * n)) & block)).collect();
        (0..1usize << k)
            .filter(|&s| self.g.get(s) > 0)
            .map(|s| {
                (0..k)
                    .map(|i| if s >> i & 1 == 1 { p[i] } else { 1.0 - p[i] })
                    .product::<f64>()
            })
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// [`Self::eval`] on explicit blocks.
    pub fn compose_eval(&self, blocks: &[usize]) -> Result<f64> {
        if blocks.len() != self.k() {
            return Err(Error::ArityMismatch {
                expected: self.k(),
                got: blocks.len(),
            });
        }
        if let Some(i) = blocks.iter().position(|&b| b >> self.n() != 0) {
            return Err(Error::param(
                "x",
                format!("block {} does not fit in {} bits", i + 1, self.n()),
            ));
        }
        let x = blocks
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | b << (i * self.n()));
        Ok(self.eval(x))
    }

    /// The full table of `g∘f` and `D^k`, for `nk ≤ 14`.
    pub fn materialize(&self) -> Result<(ProbFunction, Distribution)> {
        let total = self.n() * self.k();
        if total > MAX_MATERIALIZED {
            return Err(Error::SearchTooLarge {
                what: format!("composed table on n·k = {total} bits (limit {MAX_MATERIALIZED})"),
            });
        }
        let p = (0..1usize << total).map(|x| self.eval(x)).collect();
        Ok((ProbFunction::new(total, p)?, self.dist.power(self.k())?))
    }

    /// Joint law of `(f(x), q(x))` for `x ∼ D`, `f`'s randomness included.
    pub fn block_coupling(&self, q: &TruthTable) -> Result<Coupling> {
        if q.arity() != self.n() {
            return Err(Error::ArityMismatch {
                expected: self.n(),
                got: q.arity(),
            });
        }
        let mut joint = [[0.0; 2]; 2];
        for (x, &w) in self.dist.weights().iter().enumerate() {
            let p = self.f.prob_plus(x);
            let t = (q.get(x) > 0) as usize;
            joint[1][t] += w * p;
            joint[0][t] += w * (1.0 - p);
        }
        Ok(Coupling { joint })
    }

    /// `Stab_{μ,ρ}(g)`, equal to 1 when `f` is a.s. constant.
    pub fn stab(&self, rho: &CorrelationVector) -> Result<f64> {
        if self.degenerate() {
            return Ok(1.0);
        }
        stability::stab_fourier(&self.g, self.mu, rho)
    }

    /// The optimal junta of `f` at each budget `0..=n`, as full tables.
    pub fn optimal_approximators(&self) -> Result<Vec<TruthTable>> {
        let curve = self.curve()?;
        curve
            .coords
            .iter()
            .map(|&m| junta::best_junta_on_set(&self.f, &self.dist, m)?.to_table(self.n()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BudgetPartition {
    pub parts: Vec<usize>,
}

impl BudgetPartition {
    pub fn new(parts: Vec<usize>) -> Self {
        Self { parts }
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Every way to write `total` as `k` parts in `0..=cap`, in
    /// lexicographic order.
    pub fn enumerate(k: usize, total: usize, cap: usize) -> Vec<BudgetPartition> {
        fn rec(k: usize, left: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<BudgetPartition>) {
            if cur.len() == k {
                if left == 0 {
                    out.push(BudgetPartition::new(cur.clone()));
                }
                return;
            }
            let slots = k - cur.len() - 1;
            for r in 0..=cap.min(left) {
                if left - r <= slots * cap {
                    cur.push(r);
                    rec(k, left - r, cap, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        if total <= k * cap {
            rec(k, total, cap, &mut Vec::with_capacity(k), &mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub alpha: CorrelationVector,
    pub beta: CorrelationVector,
}

/// `α_i` from the squared and `β_i` from the linear optimal advantage at
/// budget `r_i`; both are 1 when `f` is a.s. constant.
pub fn correlations_from_curve(curve: &AdvantageCurve, mu: f64, partition: &BudgetPartition) -> Result<CorrelationReport> {
    let degenerate = mu.abs() >= 1.0 - tol::MU_MARGIN;
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    for &r in &partition.parts {
        let a = curve.advantage(r);
        if degenerate {
            alpha.push(1.0);
            beta.push(1.0);
        } else {
            alpha.push(normalized_correlation(a * a, mu));
            beta.push(normalized_correlation(a, mu));
        }
    }
    Ok(CorrelationReport {
        alpha: CorrelationVector::new(alpha)?,
        beta: CorrelationVector::new(beta)?,
    })
}

fn check_partition(inst: &ComposedInstance, partition: &BudgetPartition) -> Result<()> {
    if partition.parts.len() != inst.k() {
        return Err(Error::ArityMismatch {
            expected: inst.k(),
            got: partition.parts.len(),
        });
    }
    Ok(())
}

pub fn correlations(inst: &ComposedInstance, partition: &BudgetPartition) -> Result<CorrelationReport> {
    check_partition(inst, partition)?;
    correlations_from_curve(inst.curve()?, inst.mu(), partition)
}

fn couplings_for(inst: &ComposedInstance, approximators: &[TruthTable]) -> Result<Vec<Coupling>> {
    if approximators.len() != inst.k() {
        return Err(Error::ArityMismatch {
            expected: inst.k(),
            got: approximators.len(),
        });
    }
    approximators.iter().map(|q| inst.block_coupling(q)).collect()
}

/// `E_{D^k}[(g∘f)(x) · h(q_1(x^(1)), …, q_k(x^(k)))]`.
pub fn composed_form_advantage(
    inst: &ComposedInstance,
    approximators: &[TruthTable],
    h: &TruthTable,
) -> Result<f64> {
    if h.arity() != inst.k() {
        return Err(Error::ArityMismatch {
            expected: inst.k(),
            got: h.arity(),
        });
    }
    let joint = stability::coupled_table(&inst.g().as_f64(), &couplings_for(inst, approximators)?);
    Ok(joint.iter().enumerate().map(|(y, j)| j * h.get(y) as f64).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalH {
    pub h: TruthTable,
    /// Rows `y` no input reaches; they are set to `+1`.
    pub unreachable: Vec<usize>,
    /// Advantage of `h(q_1, …, q_k)` against `g∘f`.
    pub advantage: f64,
}

/// `h(y) = sign(E[(g∘f)(x) | q_i(x^(i)) = y_i for all i])`.
pub fn canonical_h_for(inst: &ComposedInstance, approximators: &[TruthTable]) -> Result<CanonicalH> {
    let couplings = couplings_for(inst, approximators)?;
    let joint = stability::coupled_table(&inst.g().as_f64(), &couplings);
    let k = inst.k();
    let unreachable = (0..1usize << k)
        .filter(|&y| (0..k).any(|i| couplings[i].prob_y(y >> i & 1) <= 0.0))
        .collect();
    Ok(CanonicalH {
        h: TruthTable::new(k, joint.iter().map(|&j| sign(j)).collect())?,
        unreachable,
        advantage: joint.iter().map(|j| j.abs()).sum(),
    })
}

/// [`canonical_h_for`] with the optimal junta of `f` at each budget.
pub fn canonical_h(inst: &ComposedInstance, partition: &BudgetPartition) -> Result<CanonicalH> {
    check_partition(inst, partition)?;
    let approx = inst.optimal_approximators()?;
    let chosen: Vec<TruthTable> = partition
        .parts
        .iter()
        .map(|&r| approx[r.min(inst.n())].clone())
        .collect();
    canonical_h_for(inst, &chosen)
}

/// Advantage of the canonical composed form at `partition`; fails if it
/// falls below `Stab_{μ,α}(g)`.
pub fn canonical_advantage(inst: &ComposedInstance, partition: &BudgetPartition) -> Result<f64> {
    let adv = canonical_h(inst, partition)?.advantage;
    let lower = inst.stab(&correlations(inst, partition)?.alpha)?;
    if adv < lower - tol::ALGEBRAIC {
        return Err(Error::BoundViolated(format!(
            "canonical advantage {adv} below Stab_alpha {lower} at {:?}",
            partition.parts
        )));
    }
    Ok(adv)
}

/// `√Stab_{μ,β}(g)`.
pub fn opt_upper_bound(inst: &ComposedInstance, partition: &BudgetPartition) -> Result<f64> {
    Ok(inst.stab(&correlations(inst, partition)?.beta)?.sqrt())
}

fn capped_budget(inst: &ComposedInstance, budget: usize) -> usize {
    budget.min(inst.n() * inst.k())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPartition {
    pub partition: BudgetPartition,
    /// `Stab_{μ,β}(g)` at the partition.
    pub value: f64,
    /// Other partitions attaining the same value.
    pub ties: usize,
}

/// Maximizes `Stab_{μ,β}(g)` over partitions of `min(R, nk)`; ties go to
/// the lexicographically smallest partition.
pub fn best_partition(inst: &ComposedInstance, budget: usize) -> Result<BestPartition> {
    let curve = inst.curve()?;
    let mut best: Option<BestPartition> = None;
    for p in BudgetPartition::enumerate(inst.k(), capped_budget(inst, budget), inst.n()) {
        let beta = correlations_from_curve(curve, inst.mu(), &p)?.beta;
        let v = inst.stab(&beta)?;
        match &mut best {
            Some(b) if v > b.value + tol::TIE => {
                *b = BestPartition { partition: p, value: v, ties: 0 }
            }
            Some(b) if (v - b.value).abs() <= tol::TIE => b.ties += 1,
            Some(_) => {}
            None => best = Some(BestPartition { partition: p, value: v, ties: 0 }),
        }
    }
    best.ok_or_else(|| Error::param("budget", "no partition fits"))
}

/// The canonical composed form with the largest advantage over all
/// partitions of `min(R, nk)`; ties go to the lexicographically smallest.
pub fn best_canonical(inst: &ComposedInstance, budget: usize) -> Result<(BudgetPartition, f64)> {
    let approx = inst.optimal_approximators()?;
    let couplings: Vec<Coupling> = approx
        .iter()
        .map(|q| inst.block_coupling(q))
        .collect::<Result<_>>()?;
    let g = inst.g().as_f64();
    let mut best: Option<(BudgetPartition, f64)> = None;
    for p in BudgetPartition::enumerate(inst.k(), capped_budget(inst, budget), inst.n()) {
        let cs: Vec<Coupling> = p.parts.iter().map(|&r| couplings[r]).collect();
        let adv: f64 = stability::coupled_table(&g, &cs).iter().map(|j| j.abs()).sum();
        if best.as_ref().map_or(true, |b| adv > b.1 + tol::TIE) {
            best = Some((p, adv));
        }
    }
    best.ok_or_else(|| Error::param("budget", "no partition fits"))
}

/// Best advantage of any junta on at most `R` of the `nk` composed
/// coordinates, by exhaustive search on the materialized table.
pub fn exhaustive_optimum(inst: &ComposedInstance, budget: usize) -> Result<f64> {
    let (table, dist) = inst.materialize()?;
    Ok(junta::optimal_junta(&table, &dist, budget)?.advantage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub budget: usize,
    pub mu: f64,
    pub partition: BudgetPartition,
    pub alpha: CorrelationVector,
    pub beta: CorrelationVector,
    pub stab_alpha: f64,
    pub stab_beta: f64,
    pub canonical_partition: BudgetPartition,
    pub canonical_adv: f64,
    pub opt_adv: f64,
    pub ties: usize,
    pub bounds_ok: bool,
}

/// `Stab_β² ≤ best canonical ≤ exhaustive optimum ≤ √Stab_β` with `β` at
/// the stability-maximizing partition.
pub fn sandwich_check(inst: &ComposedInstance, budget: usize) -> Result<SandwichReport> {
    let best = best_partition(inst, budget)?;
    let corr = correlations(inst, &best.partition)?;
    let stab_alpha = inst.stab(&corr.alpha)?;
    let (canonical_partition, canonical_adv) = best_canonical(inst, budget)?;
    let opt_adv = exhaustive_optimum(inst, budget)?;
    let t = tol::ALGEBRAIC;
    let bounds_ok = best.value * best.value - t <= canonical_adv
        && canonical_adv <= opt_adv + t
        && opt_adv <= best.value.sqrt() + t;
    Ok(SandwichReport {
        budget,
        mu: inst.mu(),
        partition: best.partition,
        alpha: corr.alpha,
        beta: corr.beta,
        stab_alpha,
        stab_beta: best.value,
        canonical_partition,
        canonical_adv,
        opt_adv,
        ties: best.ties,
        bounds_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Error4Report {
    pub budget: usize,
    pub partition: BudgetPartition,
    pub canonical_error: f64,
    pub opt_error: f64,
    pub holds: bool,
}

/// Error of the best canonical composed form against four times the
/// optimal `R`-junta error.
pub fn error4_check(inst: &ComposedInstance, budget: usize) -> Result<Error4Report> {
    let (partition, adv) = best_canonical(inst, budget)?;
    let opt_error = junta::error_of(exhaustive_optimum(inst, budget)?);
    let canonical_error = junta::error_of(adv);
    Ok(Error4Report {
        budget,
        partition,
        canonical_error,
        opt_error,
        holds: canonical_error <= 4.0 * opt_error + tol::ALGEBRAIC,
    })
}

/// `(1 − ∏α_i, 2(1 − ∏β_i))`, defined when `1 − α_i ≤ 2(1 − β_i)` for all
/// `i`.
pub fn prod_iq(alpha: &[f64], beta: &[f64]) -> Result<(f64, f64)> {
    if alpha.len() != beta.len() {
        return Err(Error::ArityMismatch {
            expected: alpha.len(),
            got: beta.len(),
        });
    }
    for (i, (&a, &b)) in alpha.iter().zip(beta).enumerate() {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return Err(Error::param(format!("pair {}", i + 1), "entries must lie in [0,1]"));
        }
        if 1.0 - a > 2.0 * (1.0 - b) + tol::ALGEBRAIC {
            return Err(Error::param(
                format!("pair {}", i + 1),
                format!("1 - {a} exceeds 2(1 - {b})"),
            ));
        }
    }
    Ok((
        1.0 - alpha.iter().product::<f64>(),
        2.0 * (1.0 - beta.iter().product::<f64>()),
    ))
}

/// `min over r_1 + … + r_k = R of (1 − √∏ Adv_D(f, r_i))/2`.
pub fn xor_error_bound(curve: &AdvantageCurve, budget: usize, k: usize) -> f64 {
    let n = curve.arity();
    BudgetPartition::enumerate(k, budget.min(n * k), n)
        .iter()
        .map(|p| {
            let prod: f64 = p.parts.iter().map(|&r| curve.advantage(r)).product();
            (1.0 - prod.max(0.0).sqrt()) / 2.0
        })
        .fold(f64::INFINITY, f64::min)
}

/// Checks the biased basis exists for this instance.
pub fn require_nondegenerate(inst: &ComposedInstance) -> Result<()> {
    fourier::check_mu(inst.mu())
}
