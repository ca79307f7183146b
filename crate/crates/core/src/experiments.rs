//! Scripted counterexamples and the sandwich experiment.
//!
//! Every experiment returns an [`ExperimentReport`] whose assertions refer to
//! named quantities, so a stored report can be rechecked without rerunning
//! anything.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::boolfn::{make_named, BooleanFunction, Distribution, NamedFn, ProbFunction, TruthTable};
use crate::composition::{self, composed_form_advantage, BudgetPartition, ComposedInstance};
use crate::error::{Error, Result};
use crate::junta;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
}

impl Relation {
    /// `lhs ∘ rhs` with slack `tol` in the lenient direction.
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Relation::Eq => (lhs - rhs).abs() <= tol,
            Relation::Le => lhs <= rhs + tol,
            Relation::Ge => lhs + tol >= rhs,
            Relation::Lt => lhs + tol < rhs,
            Relation::Gt => lhs > rhs + tol,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "==",
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Operand {
    Quantity(String),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    /// Name of a quantity.
    pub lhs: String,
    pub relation: Relation,
    pub rhs: Operand,
    pub tol: f64,
    pub observed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: BTreeMap<String, String>,
    pub quantities: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.quantities.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.quantities.get(key).copied()
    }

    fn resolve(&self, op: &Operand) -> Option<f64> {
        match op {
            Operand::Quantity(q) => self.get(q),
            Operand::Value(v) => Some(*v),
        }
    }

    fn evaluate(&self, lhs: &str, relation: Relation, rhs: &Operand, tol: f64) -> (f64, bool) {
        match (self.get(lhs), self.resolve(rhs)) {
            (Some(l), Some(r)) => (l, relation.holds(l, r, tol)),
            _ => (f64::NAN, false),
        }
    }

    /// Records an assertion over quantities already set.
    pub fn check(&mut self, name: &str, lhs: &str, relation: Relation, rhs: Operand, tol: f64) {
        let (observed, pass) = self.evaluate(lhs, relation, &rhs, tol);
        self.assertions.push(Assertion {
            name: name.to_string(),
            lhs: lhs.to_string(),
            relation,
            rhs,
            tol,
            observed,
            pass,
        });
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    /// True when every stored verdict matches a fresh evaluation.
    pub fn recheck(&self) -> bool {
        self.assertions.iter().all(|a| {
            let (observed, pass) = self.evaluate(&a.lhs, a.relation, &a.rhs, a.tol);
            pass == a.pass && observed.to_bits() == a.observed.to_bits()
        })
    }
}

fn q(name: &str) -> Operand {
    Operand::Quantity(name.to_string())
}

fn partition_string(p: &BudgetPartition) -> String {
    let parts: Vec<String> = p.parts.iter().map(|r| r.to_string()).collect();
    format!("({})", parts.join(","))
}

/// `g = Maj_k`, `f = XOR_n` under the uniform distribution, budget
/// `R = (n−1)k`.
pub fn counterexample_majority_parity(k: usize, n: usize) -> Result<ExperimentReport> {
    if k % 2 == 0 {
        return Err(Error::param("k", format!("{k} is not odd")));
    }
    if n < k {
        return Err(Error::param("n", format!("need n ≥ k, got n = {n}, k = {k}")));
    }
    if n > junta::MAX_CURVE_ARITY {
        return Err(Error::Capacity {
            arity: n,
            max: junta::MAX_CURVE_ARITY,
        });
    }
    let budget = (n - 1) * k;
    let g = make_named(NamedFn::Maj, k)?;
    let f = make_named(NamedFn::Xor, n)?;
    let inst = ComposedInstance::new(g.clone(), f.to_prob(), Distribution::uniform(n)?)?;
    let approx = inst.optimal_approximators()?;

    let equal = vec![approx[n - 1].clone(); k];
    let equal_split = junta::error_of(composed_form_advantage(&inst, &equal, &g)?);

    // full budget on the first k−1 blocks, majority vote over them
    let mut blocks = vec![f.clone(); k - 1];
    blocks.push(approx[0].clone());
    let h = if k == 1 {
        TruthTable::constant(1, 1)?
    } else {
        let maj = make_named(NamedFn::Maj, k - 1)?;
        TruthTable::from_fn(k, |y| maj.get(y & ((1 << (k - 1)) - 1)) > 0)?
    };
    let maj_xor = junta::error_of(composed_form_advantage(&inst, &blocks, &h)?);
    let (best, best_adv) = composition::best_canonical(&inst, budget)?;

    let mut report = ExperimentReport::new("majority-parity");
    report.param("k", k);
    report.param("n", n);
    report.param("budget", budget);
    report.param("best_canonical_partition", partition_string(&best));
    report.set("equal_split_error", equal_split);
    report.set("maj_xor_error", maj_xor);
    report.set("maj_xor_bound", 2.0 / (k as f64).sqrt());
    report.set("best_canonical_error", junta::error_of(best_adv));
    report.check("equal split is a coin flip", "equal_split_error", Relation::Eq, Operand::Value(0.5), 0.0);
    report.check("dropping a block helps", "maj_xor_error", Relation::Le, q("maj_xor_bound"), 0.0);
    report.check(
        "best canonical at most the dropped-block strategy",
        "best_canonical_error",
        Relation::Le,
        q("maj_xor_error"),
        tol::ALGEBRAIC,
    );
    Ok(report)
}

/// How the function for [`counterexample_random_and`] is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AndSampler {
    /// Independent values with `Pr[f = +1] = 5/8`, redrawn until the
    /// properties hold or the cap is reached.
    Iid { retries: usize },
    /// `f = −1` exactly where two random parities on more than `n/2`
    /// coordinates (and their sum) take prescribed values.
    Parity,
    /// The iid sampler, then the parity one if the cap is hit.
    IidThenParity { retries: usize },
}

pub const IID_RETRIES: usize = 32;

/// Smallest conditional mean of `f` over subcubes fixing at most `n/2`
/// coordinates, uniform inputs.
pub fn min_conditional_mean(f: &TruthTable) -> f64 {
    let n = f.arity();
    let sizes: Vec<usize> = (0..1usize << n)
        .filter(|m| m.count_ones() as usize <= n / 2)
        .collect();
    sizes
        .par_iter()
        .map(|&mask| {
            let mut sums = vec![0i64; 1 << mask.count_ones()];
            for x in 0..1usize << n {
                sums[bits::compress(x, mask)] += f.get(x) as i64;
            }
            let cell = (1u64 << (n - mask.count_ones() as usize)) as f64;
            sums.iter().map(|&s| s as f64 / cell).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

fn table_mean(f: &TruthTable) -> f64 {
    f.values().iter().map(|&v| v as f64).sum::<f64>() / f.values().len() as f64
}

fn properties_hold(f: &TruthTable) -> bool {
    table_mean(f) <= 0.5 && min_conditional_mean(f) > 0.0
}

fn sample_iid(n: usize, rng: &mut ChaCha8Rng) -> Result<TruthTable> {
    let bits: Vec<bool> = (0..1usize << n).map(|_| rng.gen_bool(0.625)).collect();
    TruthTable::from_fn(n, |x| bits[x])
}

fn sample_parity(n: usize, rng: &mut ChaCha8Rng) -> Result<TruthTable> {
    let need = n / 2 + 1;
    let big = |m: usize| m.count_ones() as usize >= need;
    let (a, b) = loop {
        let a = rng.gen_range(1..1usize << n);
        let b = rng.gen_range(1..1usize << n);
        if big(a) && big(b) && big(a ^ b) {
            break (a, b);
        }
    };
    let (sa, sb) = (rng.gen_range(0..2u32), rng.gen_range(0..2u32));
    // parity of the −1 coordinates inside each support
    let full = (1usize << n) - 1;
    TruthTable::from_fn(n, |x| {
        let pa = ((!x & full) & a).count_ones() % 2;
        let pb = ((!x & full) & b).count_ones() % 2;
        !(pa == sa && pb == sb)
    })
}

/// `g = AND_k` against `f` with `E[f] ≤ 1/2` whose every small-set
/// restriction has positive mean, uniform `D`.
pub fn counterexample_random_and(n: usize, k: usize, seed: u64) -> Result<ExperimentReport> {
    counterexample_random_and_with(n, k, seed, AndSampler::IidThenParity { retries: IID_RETRIES })
}

pub fn counterexample_random_and_with(n: usize, k: usize, seed: u64, sampler: AndSampler) -> Result<ExperimentReport> {
    if !(10..=16).contains(&n) {
        return Err(Error::param("n", format!("{n} is outside 10..=16")));
    }
    if k == 0 || k > 20 {
        return Err(Error::param("k", format!("{k} is outside 1..=20")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0;
    let (f, used) = match sampler {
        AndSampler::Parity => (sample_parity(n, &mut rng)?, "parity"),
        AndSampler::Iid { retries } | AndSampler::IidThenParity { retries } => {
            let mut found = None;
            while attempts < retries {
                attempts += 1;
                let f = sample_iid(n, &mut rng)?;
                if properties_hold(&f) {
                    found = Some(f);
                    break;
                }
            }
            match (found, sampler) {
                (Some(f), _) => (f, "iid"),
                (None, AndSampler::IidThenParity { .. }) => (sample_parity(n, &mut rng)?, "parity"),
                (None, _) => {
                    return Err(Error::RetryCap {
                        attempts,
                        reason: format!("no iid draw on {n} bits had all small restrictions positive"),
                    })
                }
            }
        }
    };

    let dist = Distribution::uniform(n)?;
    let mean_f = table_mean(&f);
    let min_cond = min_conditional_mean(&f);
    let half = n / 2;
    let approx = junta::optimal_junta(&f, &dist, half)?;
    let constant = (0..=half)
        .map(|r| junta::optimal_junta(&f, &dist, r))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .chain(std::iter::once(&approx))
        .all(|a| a.table.iter().all(|&v| v == 1));

    let g = make_named(NamedFn::And, k)?;
    let inst = ComposedInstance::new(g.clone(), f.to_prob(), dist)?;
    let plus = TruthTable::constant(n, 1)?;
    let adv = composed_form_advantage(&inst, &vec![plus; k], &g)?;
    let pr_plus = (1.0 + table_mean_composed(&inst)?) / 2.0;
    let q_plus = (1.0 + mean_f) / 2.0;

    let mut report = ExperimentReport::new("random-and");
    report.param("n", n);
    report.param("k", k);
    report.param("seed", seed);
    report.param("sampler", used);
    report.set("iid_attempts", attempts as f64);
    report.set("mean_f", mean_f);
    report.set("min_conditional_mean", min_cond);
    report.set("approximators_constant", if constant { 1.0 } else { 0.0 });
    report.set("q", q_plus);
    report.set("q_pow_k", q_plus.powi(k as i32));
    report.set("pr_composed_plus", pr_plus);
    report.set("composed_error", junta::error_of(adv));
    report.set("one_minus_q_pow_k", 1.0 - q_plus.powi(k as i32));
    report.check("mean at most 1/2", "mean_f", Relation::Le, Operand::Value(0.5), 0.0);
    report.check("small restrictions positive", "min_conditional_mean", Relation::Gt, Operand::Value(0.0), 0.0);
    report.check("every small approximator is +1", "approximators_constant", Relation::Eq, Operand::Value(1.0), 0.0);
    report.check("composed +1 rate is q^k", "pr_composed_plus", Relation::Eq, q("q_pow_k"), tol::ALGEBRAIC);
    report.check("composed error is 1 - q^k", "composed_error", Relation::Eq, q("one_minus_q_pow_k"), tol::ALGEBRAIC);
    if used == "parity" {
        report.notes.push(format!(
            "iid sampling stopped after {attempts} draws; f built from two parities instead"
        ));
    }
    Ok(report)
}

fn table_mean_composed(inst: &ComposedInstance) -> Result<f64> {
    let c = inst.block_coupling(&TruthTable::constant(inst.n(), 1)?)?;
    let t = crate::stability::coupled_table(&inst.g().as_f64(), &vec![c; inst.k()]);
    Ok(t.iter().sum())
}

/// `AND_k` of independent bits that are `+1` with probability `q`, against
/// the all-`+1` approximator: error `1 − q^k`.
pub fn counterexample_and_ideal(k: usize, q_plus: f64) -> Result<ExperimentReport> {
    let f = ProbFunction::constant(1, q_plus)?;
    let g = make_named(NamedFn::And, k)?;
    let inst = ComposedInstance::new(g.clone(), f, Distribution::uniform(1)?)?;
    let plus = TruthTable::constant(1, 1)?;
    let error = junta::error_of(composed_form_advantage(&inst, &vec![plus; k], &g)?);
    let mut report = ExperimentReport::new("and-ideal");
    report.param("k", k);
    report.param("q", q_plus);
    report.set("composed_error", error);
    report.set("one_minus_q_pow_k", 1.0 - q_plus.powi(k as i32));
    report.check("error is 1 - q^k", "composed_error", Relation::Eq, q("one_minus_q_pow_k"), 0.0);
    Ok(report)
}

/// `Pr[f = +1]` on two bits for the non-composed counterexample, indexed
/// with bit `i` set meaning `x_{i+1} = +1`.
pub const NONCOMPOSED_P: [f64; 4] = [0.6, 0.75, 0.75, 1.0];

/// The rule `+1 iff p_1 p_2 ≥ 1/2`.
pub fn noncomposed_rule(p1: f64, p2: f64) -> i8 {
    if p1 * p2 >= 0.5 {
        1
    } else {
        -1
    }
}

/// `AND_2∘f` with `f` randomized by [`NONCOMPOSED_P`], budget 4: the best
/// composed form `h(q_1, q_2)` loses to the best 4-junta.
pub fn counterexample_noncomposed() -> Result<ExperimentReport> {
    let f = ProbFunction::new(2, NONCOMPOSED_P.to_vec())?;
    let g = make_named(NamedFn::And, 2)?;
    let inst = ComposedInstance::new(g, f, Distribution::uniform(2)?)?;
    let (table, dist) = inst.materialize()?;
    let opt = junta::error_of(junta::optimal_junta(&table, &dist, 4)?.advantage);
    let rule = TruthTable::from_fn(4, |x| noncomposed_rule(NONCOMPOSED_P[x & 3], NONCOMPOSED_P[x >> 2]) > 0)?;
    let rule_error = junta::error_of(junta::advantage_against(&table, &dist, &rule)?);

    let tables: Vec<TruthTable> = (0..16usize)
        .map(|t| TruthTable::from_fn(2, |x| t >> x & 1 == 1))
        .collect::<Result<_>>()?;
    // which pairs of p-levels each q sends to the same value
    let merges = |t: usize| -> [bool; 3] {
        let same = |a: usize, b: usize| (t >> a & 1) == (t >> b & 1);
        [
            same(1, 3) || same(2, 3),
            same(0, 1) || same(0, 2),
            same(0, 3),
        ]
    };
    let hs: Vec<TruthTable> = tables.clone();
    let mut best = f64::INFINITY;
    let mut case_count = [0usize; 3];
    let mut case_best = [f64::INFINITY; 3];
    let mut unclassified = 0usize;
    for q1 in 0..16 {
        for q2 in 0..16 {
            let m1 = merges(q1);
            let m2 = merges(q2);
            for h in &hs {
                let err = junta::error_of(composed_form_advantage(
                    &inst,
                    &[tables[q1].clone(), tables[q2].clone()],
                    h,
                )?);
                best = best.min(err);
                let mut hit = false;
                for c in 0..3 {
                    if m1[c] || m2[c] {
                        hit = true;
                        case_count[c] += 1;
                        case_best[c] = case_best[c].min(err);
                    }
                }
                if !hit {
                    unclassified += 1;
                }
            }
        }
    }

    let mut report = ExperimentReport::new("noncomposed");
    report.param("k", 2);
    report.param("n", 2);
    report.param("budget", 4);
    report.param("g", "and");
    report.set("optimal_error", opt);
    report.set("rule_error", rule_error);
    report.set("composed_error", best);
    report.set("gap", best - opt);
    report.set("candidates", 4096.0);
    report.set("unclassified", unclassified as f64);
    for (c, label) in ["case_3/4_1", "case_3/5_3/4", "case_3/5_1"].iter().enumerate() {
        report.set(&format!("{label}_count"), case_count[c] as f64);
        report.set(&format!("{label}_min_error"), case_best[c]);
    }
    report.check("rule is optimal", "rule_error", Relation::Eq, q("optimal_error"), tol::ALGEBRAIC);
    report.check("composed forms lose", "gap", Relation::Gt, Operand::Value(0.0), tol::ALGEBRAIC);
    report.check("every candidate merges two levels", "unclassified", Relation::Eq, Operand::Value(0.0), 0.0);
    for label in ["case_3/4_1", "case_3/5_3/4", "case_3/5_1"] {
        report.check(&format!("{label} witnessed"), &format!("{label}_count"), Relation::Gt, Operand::Value(0.0), 0.0);
        report.check(
            &format!("{label} loses"),
            &format!("{label}_min_error"),
            Relation::Gt,
            q("optimal_error"),
            tol::ALGEBRAIC,
        );
    }
    Ok(report)
}

/// A random `g` on `k` bits, `f` on `n` bits and full-support `D`.
pub fn random_instance(n: usize, k: usize, seed: u64) -> Result<ComposedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gb: Vec<bool> = (0..1usize << k).map(|_| rng.gen()).collect();
    let fb: Vec<bool> = (0..1usize << n).map(|_| rng.gen()).collect();
    let w: Vec<f64> = (0..1usize << n).map(|_| rng.gen_range(0.05..1.0)).collect();
    ComposedInstance::new(
        TruthTable::from_fn(k, |y| gb[y])?,
        TruthTable::from_fn(n, |x| fb[x])?.to_prob(),
        Distribution::from_unnormalized(n, w)?,
    )
}

/// Checks the composition sandwich and the factor-4 error bound on one
/// instance.
pub fn sandwich_experiment(inst: &ComposedInstance, budget: usize) -> Result<ExperimentReport> {
    let s = composition::sandwich_check(inst, budget)?;
    let e4 = composition::error4_check(inst, budget)?;
    let mut report = ExperimentReport::new("sandwich");
    report.param("n", inst.n());
    report.param("k", inst.k());
    report.param("budget", budget);
    report.param("partition", partition_string(&s.partition));
    report.param("canonical_partition", partition_string(&s.canonical_partition));
    report.set("mu", s.mu);
    report.set("stab_alpha", s.stab_alpha);
    report.set("stab_beta", s.stab_beta);
    report.set("stab_beta_squared", s.stab_beta * s.stab_beta);
    report.set("sqrt_stab_beta", s.stab_beta.sqrt());
    report.set("canonical_adv", s.canonical_adv);
    report.set("opt_adv", s.opt_adv);
    report.set("canonical_error", e4.canonical_error);
    report.set("four_opt_error", 4.0 * e4.opt_error);
    report.set("ties", s.ties as f64);
    let t = tol::ALGEBRAIC;
    report.check("lower bound", "stab_beta_squared", Relation::Le, q("canonical_adv"), t);
    report.check("canonical is a junta", "canonical_adv", Relation::Le, q("opt_adv"), t);
    report.check("upper bound", "opt_adv", Relation::Le, q("sqrt_stab_beta"), t);
    report.check("factor four", "canonical_error", Relation::Le, q("four_opt_error"), t);
    Ok(report)
}

/// [`sandwich_experiment`] on seeded random instances at every budget
/// `0..=nk`, in parallel, in seed order.
pub fn sandwich_sweep(n: usize, k: usize, seeds: std::ops::Range<u64>) -> Result<Vec<ExperimentReport>> {
    let seeds: Vec<u64> = seeds.collect();
    let nested = seeds
        .par_iter()
        .map(|&seed| {
            let inst = random_instance(n, k, seed)?;
            (0..=n * k)
                .map(|r| {
                    let mut rep = sandwich_experiment(&inst, r)?;
                    rep.param("seed", seed);
                    Ok(rep)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().collect())
}
