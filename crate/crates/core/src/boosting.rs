//! Tester boosting through composition, and the SetCover reduction.
//!
//! Testers never touch the function directly. A harness owns an
//! [`Oracle`], feeds the tester the answer to its previous [`Request`] and
//! counts every call, so query accounting cannot be bypassed. Boosting a
//! tester means running it against a [`ComposedOracle`], which answers each
//! query on `g∘f` with `k` queries to `f`.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boolfn::{make_named, BooleanFunction, Distribution, NamedFn, ProbFunction, TruthTable};
use crate::error::{Error, Result};
use crate::junta;
use crate::tol;

/// `(1 − (1 − 2ε_small)^{(1−λ)k/2}) / 2`.
pub fn eps_large(eps_small: f64, k: usize, lambda: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&eps_small) {
        return Err(Error::param("eps_small", format!("{eps_small} is outside [0,1/2]")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::param("lambda", format!("{lambda} is outside (0,1)")));
    }
    let exponent = (1.0 - lambda) * k as f64 / 2.0;
    Ok((1.0 - (1.0 - 2.0 * eps_small).powf(exponent)) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TesterParams {
    pub eps_yes: f64,
    pub eps_no: f64,
    pub r: usize,
    pub r_prime: usize,
}

impl TesterParams {
    pub fn new(eps_yes: f64, eps_no: f64, r: usize, r_prime: usize) -> Result<Self> {
        if !(0.0 <= eps_yes && eps_yes <= eps_no) {
            return Err(Error::param(
                "eps_yes",
                format!("need 0 ≤ eps_yes ≤ eps_no, got {eps_yes} and {eps_no}"),
            ));
        }
        if r > r_prime {
            return Err(Error::param("r", format!("need r ≤ r', got {r} > {r_prime}")));
        }
        Ok(Self { eps_yes, eps_no, r, r_prime })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Request {
    Query(usize),
    Sample,
    Verdict(Verdict),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    Start,
    Value(i8),
    Labeled { x: usize, label: i8 },
}

/// A tester driven one request at a time.
pub trait Tester {
    /// Arity of the function under test.
    fn arity(&self) -> usize;
    fn query_budget(&self) -> usize;
    fn sample_budget(&self) -> usize;
    /// Receives the answer to the previous request and issues the next.
    fn step(&mut self, response: Response) -> Result<Request>;
}

pub trait Oracle {
    fn arity(&self) -> usize;
    fn query(&mut self, x: usize) -> i8;
    /// A draw `x ∼ D` together with `f(x)`.
    fn sample(&mut self) -> (usize, i8);
    fn query_count(&self) -> usize;
    fn sample_count(&self) -> usize;
}

/// Query and sample access to a (possibly randomized) `f` under `D`.
pub struct FunctionOracle {
    f: ProbFunction,
    sampler: WeightedIndex<f64>,
    rng: ChaCha8Rng,
    queries: usize,
    samples: usize,
}

impl FunctionOracle {
    pub fn new(f: ProbFunction, dist: &Distribution, seed: u64) -> Result<Self> {
        if f.arity() != dist.arity() {
            return Err(Error::ArityMismatch {
                expected: dist.arity(),
                got: f.arity(),
            });
        }
        let sampler = WeightedIndex::new(dist.weights().iter().copied())
            .map_err(|e| Error::param("dist", e.to_string()))?;
        Ok(Self {
            f,
            sampler,
            rng: ChaCha8Rng::seed_from_u64(seed),
            queries: 0,
            samples: 0,
        })
    }

    fn draw(&mut self, x: usize) -> i8 {
        let p = self.f.prob_plus(x);
        if p >= 1.0 || (p > 0.0 && self.rng.gen::<f64>() < p) {
            1
        } else {
            -1
        }
    }
}

impl Oracle for FunctionOracle {
    fn arity(&self) -> usize {
        self.f.arity()
    }

    fn query(&mut self, x: usize) -> i8 {
        self.queries += 1;
        self.draw(x)
    }

    fn sample(&mut self) -> (usize, i8) {
        self.samples += 1;
        let x = self.sampler.sample(&mut self.rng);
        (x, self.draw(x))
    }

    fn query_count(&self) -> usize {
        self.queries
    }

    fn sample_count(&self) -> usize {
        self.samples
    }
}

/// Access to `g∘f` on `k` blocks of `n` bits built from access to `f`.
pub struct ComposedOracle<'a> {
    inner: &'a mut dyn Oracle,
    g: TruthTable,
    queries: usize,
    samples: usize,
}

impl<'a> ComposedOracle<'a> {
    pub fn new(inner: &'a mut dyn Oracle, g: TruthTable) -> Result<Self> {
        let total = inner.arity() * g.arity();
        if total > usize::BITS as usize - 1 {
            return Err(Error::Capacity {
                arity: total,
                max: usize::BITS as usize - 1,
            });
        }
        Ok(Self { inner, g, queries: 0, samples: 0 })
    }

    pub fn inner_queries(&self) -> usize {
        self.inner.query_count()
    }

    pub fn inner_samples(&self) -> usize {
        self.inner.sample_count()
    }
}

impl Oracle for ComposedOracle<'_> {
    fn arity(&self) -> usize {
        self.inner.arity() * self.g.arity()
    }

    fn query(&mut self, x: usize) -> i8 {
        self.queries += 1;
        let n = self.inner.arity();
        let mask = (1usize << n) - 1;
        let mut y = 0;
        for i in 0..self.g.arity() {
            if self.inner.query((x >> (i * n)) & mask) > 0 {
                y |= 1 << i;
            }
        }
        self.g.get(y)
    }

    fn sample(&mut self) -> (usize, i8) {
        self.samples += 1;
        let n = self.inner.arity();
        let (mut x, mut y) = (0, 0);
        for i in 0..self.g.arity() {
            let (xi, label) = self.inner.sample();
            x |= xi << (i * n);
            if label > 0 {
                y |= 1 << i;
            }
        }
        (x, self.g.get(y))
    }

    fn query_count(&self) -> usize {
        self.queries
    }

    fn sample_count(&self) -> usize {
        self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub verdict: Verdict,
    /// Calls made by the tester itself.
    pub queries: usize,
    pub samples: usize,
    /// Calls that reached the underlying function.
    pub inner_queries: usize,
    pub inner_samples: usize,
}

/// Runs `tester` to completion against `oracle`, enforcing its budgets.
pub fn run_tester(tester: &mut dyn Tester, oracle: &mut dyn Oracle) -> Result<RunOutcome> {
    if tester.arity() != oracle.arity() {
        return Err(Error::ArityMismatch {
            expected: oracle.arity(),
            got: tester.arity(),
        });
    }
    let (mut queries, mut samples) = (0usize, 0usize);
    let mut response = Response::Start;
    loop {
        match tester.step(response)? {
            Request::Query(x) => {
                queries += 1;
                if queries > tester.query_budget() {
                    return Err(Error::Protocol(format!(
                        "tester exceeded its budget of {} queries",
                        tester.query_budget()
                    )));
                }
                if x >> oracle.arity() != 0 {
                    return Err(Error::Protocol(format!("query {x} outside the domain")));
                }
                response = Response::Value(oracle.query(x));
            }
            Request::Sample => {
                samples += 1;
                if samples > tester.sample_budget() {
                    return Err(Error::Protocol(format!(
                        "tester exceeded its budget of {} samples",
                        tester.sample_budget()
                    )));
                }
                let (x, label) = oracle.sample();
                response = Response::Labeled { x, label };
            }
            Request::Verdict(verdict) => {
                return Ok(RunOutcome {
                    verdict,
                    queries,
                    samples,
                    inner_queries: queries,
                    inner_samples: samples,
                })
            }
        }
    }
}

/// A weak tester lifted to `f` by composing with `g`.
pub struct Boosted<T> {
    pub weak: T,
    pub g: TruthTable,
}

/// Wraps `weak`, a tester for functions on `k·n` bits, into a tester for
/// `f` on `n` bits that simulates `g∘f`.
pub fn boost<T: Tester>(weak: T, g: TruthTable, inner_arity: usize) -> Result<Boosted<T>> {
    if weak.arity() != inner_arity * g.arity() {
        return Err(Error::ArityMismatch {
            expected: inner_arity * g.arity(),
            got: weak.arity(),
        });
    }
    Ok(Boosted { weak, g })
}

/// The usual combiner, `XOR_k`.
pub fn boost_xor<T: Tester>(weak: T, k: usize, inner_arity: usize) -> Result<Boosted<T>> {
    boost(weak, make_named(NamedFn::Xor, k)?, inner_arity)
}

impl<T: Tester> Boosted<T> {
    pub fn run(&mut self, oracle: &mut dyn Oracle) -> Result<RunOutcome> {
        let before = (oracle.query_count(), oracle.sample_count());
        let mut composed = ComposedOracle::new(oracle, self.g.clone())?;
        let outcome = run_tester(&mut self.weak, &mut composed)?;
        let inner_queries = composed.inner_queries() - before.0;
        let inner_samples = composed.inner_samples() - before.1;
        let k = self.g.arity();
        if inner_queries != k * outcome.queries || inner_samples != k * outcome.samples {
            return Err(Error::Protocol(format!(
                "accounting mismatch: {} inner queries for {} composed",
                inner_queries, outcome.queries
            )));
        }
        Ok(RunOutcome {
            inner_queries,
            inner_samples,
            ..outcome
        })
    }
}

/// Reads the whole table by queries and decides exactly, using `D`
/// supplied up front: Yes iff the best `r`-junta has error at most
/// `ε_yes`.
pub struct BruteForceTester {
    params: TesterParams,
    dist: Distribution,
    samples: usize,
    table: Vec<i8>,
    drawn: usize,
}

pub fn brute_force_tester(params: TesterParams, dist: Distribution, samples: usize) -> Result<BruteForceTester> {
    let n = dist.arity();
    if n > junta::MAX_SEARCH_ARITY {
        return Err(Error::Capacity {
            arity: n,
            max: junta::MAX_SEARCH_ARITY,
        });
    }
    Ok(BruteForceTester {
        params,
        dist,
        samples,
        table: Vec::with_capacity(1 << n),
        drawn: 0,
    })
}

impl BruteForceTester {
    fn decide(&self) -> Result<Verdict> {
        let f = TruthTable::new(self.dist.arity(), self.table.clone())?;
        let best = junta::optimal_junta(&f, &self.dist, self.params.r)?;
        Ok(if best.error() <= self.params.eps_yes + tol::NORMALIZATION {
            Verdict::Yes
        } else {
            Verdict::No
        })
    }
}

impl Tester for BruteForceTester {
    fn arity(&self) -> usize {
        self.dist.arity()
    }

    fn query_budget(&self) -> usize {
        1 << self.dist.arity()
    }

    fn sample_budget(&self) -> usize {
        self.samples
    }

    fn step(&mut self, response: Response) -> Result<Request> {
        match response {
            Response::Start => {}
            Response::Value(v) => self.table.push(v),
            Response::Labeled { .. } => self.drawn += 1,
        }
        if self.drawn < self.samples {
            return Ok(Request::Sample);
        }
        if self.table.len() < self.query_budget() {
            return Ok(Request::Query(self.table.len()));
        }
        Ok(Request::Verdict(self.decide()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerantPlan {
    pub k: usize,
    /// `⌈1/(4ε)⌉` was lowered to keep `kε ≤ 1/4`.
    pub k_adjusted: bool,
    pub k_eps: f64,
    /// Thresholds handed to the weak tester on `XOR_k∘f`.
    pub composed: TesterParams,
    /// Thresholds the boosted tester achieves on `f`.
    pub outer: TesterParams,
    pub r_prime_real: f64,
    /// `ε_large` at `ε_small = 5ε/(1−λ)`; at least 1/3 when the No case
    /// transfers.
    pub no_case_eps_large: f64,
}

/// Parameters for boosting a `(1/4, 1/3)` tester into an
/// `(ε, 5ε/(1−λ))` tester for `r` versus `r/λ` juntas.
pub fn tolerant_boost_params(eps: f64, lambda: f64, r: usize) -> Result<TolerantPlan> {
    if !(eps > 0.0 && eps <= 1.0 / 16.0) {
        return Err(Error::param("eps", format!("{eps} is outside (0,1/16]")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::param("lambda", format!("{lambda} is outside (0,1)")));
    }
    let ideal = 1.0 / (4.0 * eps);
    let mut k = (ideal - tol::ALGEBRAIC).ceil() as usize;
    let mut k_adjusted = false;
    if k as f64 * eps > 0.25 + tol::NORMALIZATION {
        k = (ideal + tol::ALGEBRAIC).floor() as usize;
        k_adjusted = true;
    }
    let r_prime_real = r as f64 / lambda;
    let r_prime = (r_prime_real - tol::ALGEBRAIC).ceil() as usize;
    let eps_no = 5.0 * eps / (1.0 - lambda);
    let no_case_eps_large = if eps_no <= 0.5 {
        eps_large(eps_no, k, lambda)?
    } else {
        0.5
    };
    Ok(TolerantPlan {
        k,
        k_adjusted,
        k_eps: k as f64 * eps,
        composed: TesterParams::new(0.25, 1.0 / 3.0, k * r, k * r)?,
        outer: TesterParams::new(eps, eps_no, r, r_prime)?,
        r_prime_real,
        no_case_eps_large,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroErrorPlan {
    /// Regime of the weak tester on `XOR_k∘f`.
    pub weak: TesterParams,
    /// Regime achieved on `f`.
    pub strong: TesterParams,
    pub r_prime_real: f64,
}

/// A `(0, ε_large, kr, kr')` tester on `XOR_k∘f` yields a
/// `(0, ε_small, r, r'/λ)` tester on `f`.
pub fn zero_error_boost_params(eps_small: f64, k: usize, lambda: f64, r: usize, r_prime: usize) -> Result<ZeroErrorPlan> {
    let large = eps_large(eps_small, k, lambda)?;
    let r_prime_real = r_prime as f64 / lambda;
    Ok(ZeroErrorPlan {
        weak: TesterParams::new(0.0, large, k * r, k * r_prime)?,
        strong: TesterParams::new(0.0, eps_small, r, (r_prime_real - tol::ALGEBRAIC).ceil() as usize)?,
        r_prime_real,
    })
}

/// Sets over the universe `{1, …, m}`, stored 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCoverInstance {
    pub m: usize,
    pub sets: Vec<Vec<usize>>,
}

/// Largest number of sets the reduction and solver accept.
pub const MAX_SETS: usize = 20;

impl SetCoverInstance {
    pub fn new(m: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("m", "universe must be nonempty"));
        }
        for (i, s) in sets.iter().enumerate() {
            if let Some(&e) = s.iter().find(|&&e| e == 0 || e > m) {
                return Err(Error::param(
                    format!("set {}", i + 1),
                    format!("element {e} is outside 1..={m}"),
                ));
            }
        }
        Ok(Self { m, sets })
    }

    pub fn n(&self) -> usize {
        self.sets.len()
    }

    fn member_masks(&self) -> Vec<u64> {
        self.sets
            .iter()
            .map(|s| s.iter().fold(0u64, |acc, &e| acc | 1 << (e - 1)))
            .collect()
    }

    /// Whether the sets selected by `choice` (bitmask over sets) cover
    /// the universe.
    pub fn covers(&self, choice: usize) -> bool {
        let full = if self.m >= 64 { u64::MAX } else { (1u64 << self.m) - 1 };
        let masks = self.member_masks();
        let union = (0..self.n())
            .filter(|&i| choice >> i & 1 == 1)
            .fold(0u64, |acc, i| acc | masks[i]);
        union & full == full
    }
}

impl fmt::Display for SetCoverInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.m, self.n())?;
        for s in &self.sets {
            let line: Vec<String> = s.iter().map(|e| e.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for SetCoverInstance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            reason: "missing `m n` header".into(),
        })?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: 1,
                reason: format!("expected `m n`, found `{header}`"),
            })?;
        let [m, n] = nums[..] else {
            return Err(Error::Parse {
                line: 1,
                reason: format!("expected `m n`, found `{header}`"),
            });
        };
        let mut sets = Vec::with_capacity(n);
        for (idx, text) in lines {
            let line = idx + 1;
            if sets.len() == n {
                if !text.trim().is_empty() {
                    return Err(Error::Parse {
                        line,
                        reason: format!("more than {n} sets"),
                    });
                }
                continue;
            }
            let mut set = Vec::new();
            for tok in text.split_whitespace() {
                let e: usize = tok.parse().map_err(|_| Error::Parse {
                    line,
                    reason: format!("`{tok}` is not a positive integer"),
                })?;
                if e == 0 || e > m {
                    return Err(Error::Parse {
                        line,
                        reason: format!("element {e} is outside 1..={m}"),
                    });
                }
                set.push(e);
            }
            sets.push(set);
        }
        if sets.len() != n {
            return Err(Error::Parse {
                line: s.lines().count() + 1,
                reason: format!("expected {n} sets, found {}", sets.len()),
            });
        }
        SetCoverInstance::new(m, sets)
    }
}

/// `f = OR_n` and `D` uniform over the membership vectors `u^(1..m)` and
/// the all-`−1` point, where `u^(j)_i = +1` iff `j ∈ S_i`. Coinciding
/// points share their weight.
///
/// The sets together must cover the universe: an element in no set maps onto
/// the all-`−1` point and would not separate the cases.
pub fn setcover_reduce(inst: &SetCoverInstance) -> Result<(TruthTable, Distribution)> {
    let n = inst.n();
    if n == 0 || n > MAX_SETS {
        return Err(Error::Capacity { arity: n, max: MAX_SETS });
    }
    if !inst.covers((1 << n) - 1) {
        return Err(Error::param("sets", "the union of all sets is not the whole universe"));
    }
    let masks = inst.member_masks();
    let mut weights = vec![0.0; 1 << n];
    let share = 1.0 / (inst.m + 1) as f64;
    for j in 0..inst.m {
        let u = (0..n).filter(|&i| masks[i] >> j & 1 == 1).fold(0usize, |acc, i| acc | 1 << i);
        weights[u] += share;
    }
    weights[0] += share;
    Ok((make_named(NamedFn::Or, n)?, Distribution::new(n, weights)?))
}

/// A smallest cover as a bitmask over sets (smallest mask among ties), or
/// `None` if the sets do not cover the universe.
pub fn min_set_cover(inst: &SetCoverInstance) -> Result<Option<usize>> {
    let n = inst.n();
    if n > MAX_SETS {
        return Err(Error::SearchTooLarge {
            what: format!("set cover over {n} sets (limit {MAX_SETS})"),
        });
    }
    for size in 0..=n {
        if let Some(c) = (0..1usize << n).find(|&c| c.count_ones() as usize == size && inst.covers(c)) {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// `OR` of the coordinates in `cover`.
pub fn cover_junta(n: usize, cover: usize) -> Result<TruthTable> {
    TruthTable::from_fn(n, |x| x & cover != 0)
}
