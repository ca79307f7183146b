//! Dense Boolean functions and distributions over `{±1}^n`.
//!
//! A [`TruthTable`] stores a deterministic `±1` function, a [`ProbFunction`]
//! a randomized one given by `p(x) = Pr[f(x) = +1]`. Both implement
//! [`BooleanFunction`], which exposes the expected output `2p(x) - 1`; every
//! exact computation downstream only needs that.
//!
//! Text formats (one header line `n=<arity>` followed by the body):
//!
//! - truth table: one line of `2^n` characters from `{+,-}` in index order;
//! - distribution: `2^n` whitespace-separated weights;
//! - randomized function: `2^n` whitespace-separated probabilities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};
use crate::tol;

/// Largest arity stored as a dense table.
pub const MAX_ARITY: usize = 28;

/// Rounds to `{±1}` with `sign(0) = +1`.
#[inline]
pub fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

fn check_arity(n: usize) -> Result<()> {
    if n > MAX_ARITY {
        return Err(Error::Capacity {
            arity: n,
            max: MAX_ARITY,
        });
    }
    Ok(())
}

/// Anything with a well-defined expected `±1` output at each input.
pub trait BooleanFunction {
    fn arity(&self) -> usize;

    /// `E[f(x)]` over the function's internal randomness, in `[-1, 1]`.
    fn expected(&self, x: usize) -> f64;

    fn prob_plus(&self, x: usize) -> f64 {
        (1.0 + self.expected(x)) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruthTable {
    n: usize,
    values: Vec<i8>,
}

impl TruthTable {
    pub fn new(n: usize, values: Vec<i8>) -> Result<Self> {
        check_arity(n)?;
        if values.len() != 1 << n {
            return Err(Error::param(
                "values",
                format!("expected {} entries, got {}", 1usize << n, values.len()),
            ));
        }
        if let Some(pos) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::param(
                "values",
                format!("entry {pos} is {}, not ±1", values[pos]),
            ));
        }
        Ok(Self { n, values })
    }

    /// Builds a table from a predicate: `true` maps to `+1`.
    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Result<Self> {
        check_arity(n)?;
        let values = (0..1usize << n).map(|x| if f(x) { 1 } else { -1 }).collect();
        Ok(Self { n, values })
    }

    pub fn constant(n: usize, value: i8) -> Result<Self> {
        Self::from_fn(n, |_| value > 0)
    }

    #[inline]
    pub fn get(&self, x: usize) -> i8 {
        self.values[x]
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    pub fn to_prob(&self) -> ProbFunction {
        ProbFunction {
            n: self.n,
            p: self
                .values
                .iter()
                .map(|&v| if v > 0 { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    /// Checks invariance under every adjacent transposition, which generate
    /// the symmetric group. Returns the first offending pair (0-based).
    pub fn symmetry_violation(&self) -> Option<(usize, usize)> {
        for i in 0..self.n.saturating_sub(1) {
            let (a, b) = (1usize << i, 1usize << (i + 1));
            for x in 0..self.values.len() {
                let swapped = if ((x & a) != 0) != ((x & b) != 0) {
                    x ^ a ^ b
                } else {
                    x
                };
                if self.values[x] != self.values[swapped] {
                    return Some((i, i + 1));
                }
            }
        }
        None
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry_violation().is_none()
    }

    pub fn require_symmetric(&self) -> Result<()> {
        match self.symmetry_violation() {
            Some((i, j)) => Err(Error::NotSymmetric { i, j }),
            None => Ok(()),
        }
    }
}

impl BooleanFunction for TruthTable {
    fn arity(&self) -> usize {
        self.n
    }
    #[inline]
    fn expected(&self, x: usize) -> f64 {
        self.values[x] as f64
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={}", self.n)?;
        let body: String = self
            .values
            .iter()
            .map(|&v| if v > 0 { '+' } else { '-' })
            .collect();
        writeln!(f, "{body}")
    }
}

impl FromStr for TruthTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, body) = parse_header(s)?;
        let mut values = Vec::with_capacity(1 << n);
        for (line_no, line) in body {
            for c in line.chars().filter(|c| !c.is_whitespace()) {
                match c {
                    '+' => values.push(1),
                    '-' => values.push(-1),
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            reason: format!("unexpected character `{other}`"),
                        })
                    }
                }
            }
        }
        expect_len(values.len(), n, s)?;
        TruthTable::new(n, values)
    }
}

/// A randomized Boolean function: `p[x] = Pr[f(x) = +1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbFunction {
    n: usize,
    p: Vec<f64>,
}

impl ProbFunction {
    pub fn new(n: usize, p: Vec<f64>) -> Result<Self> {
        check_arity(n)?;
        if p.len() != 1 << n {
            return Err(Error::param(
                "p",
                format!("expected {} entries, got {}", 1usize << n, p.len()),
            ));
        }
        if let Some(pos) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param(
                "p",
                format!("entry {pos} is {}, outside [0,1]", p[pos]),
            ));
        }
        Ok(Self { n, p })
    }

    pub fn constant(n: usize, q: f64) -> Result<Self> {
        Self::new(n, vec![q; 1 << n])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// True when every entry is 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        self.p.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

impl From<&TruthTable> for ProbFunction {
    fn from(t: &TruthTable) -> Self {
        t.to_prob()
    }
}

impl BooleanFunction for ProbFunction {
    fn arity(&self) -> usize {
        self.n
    }
    #[inline]
    fn expected(&self, x: usize) -> f64 {
        2.0 * self.p[x] - 1.0
    }
    #[inline]
    fn prob_plus(&self, x: usize) -> f64 {
        self.p[x]
    }
}

impl fmt::Display for ProbFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "{}", join_reals(&self.p))
    }
}

impl FromStr for ProbFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, body) = parse_header(s)?;
        let p = parse_reals(body)?;
        expect_len(p.len(), n, s)?;
        ProbFunction::new(n, p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    n: usize,
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(n: usize, weights: Vec<f64>) -> Result<Self> {
        check_arity(n)?;
        if weights.len() != 1 << n {
            return Err(Error::param(
                "weights",
                format!("expected {} entries, got {}", 1usize << n, weights.len()),
            ));
        }
        if let Some(pos) = weights.iter().position(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::param(
                "weights",
                format!("entry {pos} is {}, not a nonnegative real", weights[pos]),
            ));
        }
        let total: f64 = weights.iter().sum();
        // summation error grows with the table length
        let slack = tol::NORMALIZATION + weights.len() as f64 * f64::EPSILON;
        if (total - 1.0).abs() > slack {
            return Err(Error::param(
                "weights",
                format!("weights sum to {total}, not 1"),
            ));
        }
        Ok(Self { n, weights })
    }

    /// Normalises arbitrary nonnegative weights.
    pub fn from_unnormalized(n: usize, raw: Vec<f64>) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("weights", "total weight is zero"));
        }
        Self::new(n, raw.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        check_arity(n)?;
        Ok(Self {
            n,
            weights: vec![1.0 / (1u64 << n) as f64; 1 << n],
        })
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The product distribution `D^k` on `k` concatenated blocks; block `i`
    /// occupies bits `[i·n, (i+1)·n)`.
    pub fn power(&self, k: usize) -> Result<Self> {
        let total = self.n * k;
        check_arity(total)?;
        let block = (1usize << self.n) - 1;
        let weights = (0..1usize << total)
            .map(|x| {
                (0..k)
                    .map(|i| self.weights[(x >> (i * self.n)) & block])
                    .product()
            })
            .collect();
        Ok(Self { n: total, weights })
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "{}", join_reals(&self.weights))
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, body) = parse_header(s)?;
        let w = parse_reals(body)?;
        expect_len(w.len(), n, s)?;
        Distribution::new(n, w)
    }
}

/// A product distribution on `{±1}^n` given by its mean vector `ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDist {
    nu: Vec<f64>,
}

impl ProductDist {
    pub fn new(nu: Vec<f64>) -> Result<Self> {
        if let Some(i) = nu.iter().position(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::param(
                "nu",
                format!("nu_{} = {} is outside [-1,1]", i + 1, nu[i]),
            ));
        }
        Ok(Self { nu })
    }

    pub fn uniform(n: usize) -> Self {
        Self { nu: vec![0.0; n] }
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn arity(&self) -> usize {
        self.nu.len()
    }

    /// `∏_i (1 + x_i ν_i) / 2`.
    pub fn weight(&self, x: usize) -> f64 {
        self.nu
            .iter()
            .enumerate()
            .map(|(i, &v)| (1.0 + bits::sign_at(x, i) * v) / 2.0)
            .product()
    }

    pub fn to_distribution(&self) -> Result<Distribution> {
        let n = self.arity();
        check_arity(n)?;
        let mut weights = vec![1.0];
        for &v in &self.nu {
            let (lo, hi) = ((1.0 - v) / 2.0, (1.0 + v) / 2.0);
            let mut next = Vec::with_capacity(weights.len() * 2);
            next.extend(weights.iter().map(|w| w * lo));
            next.extend(weights.iter().map(|w| w * hi));
            weights = next;
        }
        Ok(Distribution { n, weights })
    }
}

pub fn uniform_dist(n: usize) -> Result<ProductDist> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    Ok(ProductDist::uniform(n))
}

/// The named functions used throughout the crate. `Dict` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedFn {
    Xor,
    Maj,
    And,
    Or,
    Dict(usize),
    /// `+1` iff `Σ x_i ≥ t`.
    Thresh(f64),
}

impl FromStr for NamedFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (head, arg) = match lower.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (lower.as_str(), None),
        };
        let bad = || Error::UnknownName(s.to_string());
        match (head, arg) {
            ("xor", None) => Ok(NamedFn::Xor),
            ("maj", None) => Ok(NamedFn::Maj),
            ("and", None) => Ok(NamedFn::And),
            ("or", None) => Ok(NamedFn::Or),
            ("dict", Some(a)) => a.parse().map(NamedFn::Dict).map_err(|_| bad()),
            ("thresh", Some(a)) => a.parse().map(NamedFn::Thresh).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for NamedFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedFn::Xor => write!(f, "xor"),
            NamedFn::Maj => write!(f, "maj"),
            NamedFn::And => write!(f, "and"),
            NamedFn::Or => write!(f, "or"),
            NamedFn::Dict(i) => write!(f, "dict:{i}"),
            NamedFn::Thresh(t) => write!(f, "thresh:{t}"),
        }
    }
}

pub fn make_named(name: NamedFn, arity: usize) -> Result<TruthTable> {
    if arity == 0 {
        return Err(Error::param("arity", "must be at least 1"));
    }
    check_arity(arity)?;
    let all = (1usize << arity) - 1;
    // Σ x_i = 2·popcount − n
    let sum = |x: usize| 2 * x.count_ones() as i64 - arity as i64;
    match name {
        NamedFn::Xor => TruthTable::from_fn(arity, |x| (arity - x.count_ones() as usize) % 2 == 0),
        NamedFn::Maj => TruthTable::from_fn(arity, |x| sum(x) >= 0),
        NamedFn::And => TruthTable::from_fn(arity, |x| x == all),
        NamedFn::Or => TruthTable::from_fn(arity, |x| x != 0),
        NamedFn::Dict(i) => {
            if i == 0 || i > arity {
                return Err(Error::param(
                    "dict",
                    format!("coordinate {i} is outside 1..={arity}"),
                ));
            }
            TruthTable::from_fn(arity, |x| x & (1 << (i - 1)) != 0)
        }
        NamedFn::Thresh(t) => TruthTable::from_fn(arity, |x| sum(x) as f64 >= t),
    }
}

/// `E_{x∼D}[f(x)]`.
pub fn mean<F: BooleanFunction + ?Sized>(f: &F, dist: &Distribution) -> Result<f64> {
    if f.arity() != dist.arity() {
        return Err(Error::ArityMismatch {
            expected: dist.arity(),
            got: f.arity(),
        });
    }
    Ok(dist
        .weights()
        .iter()
        .enumerate()
        .map(|(x, &w)| w * f.expected(x))
        .sum())
}

type Body<'a> = Vec<(usize, &'a str)>;

fn parse_header(s: &str) -> Result<(usize, Body<'_>)> {
    let mut lines = s
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        reason: "missing `n=<arity>` header".into(),
    })?;
    let n = header
        .strip_prefix("n=")
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or_else(|| Error::Parse {
            line,
            reason: format!("expected `n=<arity>`, found `{header}`"),
        })?;
    if n > MAX_ARITY {
        return Err(Error::Capacity {
            arity: n,
            max: MAX_ARITY,
        });
    }
    Ok((n, lines.collect()))
}

fn parse_reals(body: Body<'_>) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (line, text) in body {
        for tok in text.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line,
                reason: format!("`{tok}` is not a number"),
            })?;
            out.push(v);
        }
    }
    Ok(out)
}

fn expect_len(got: usize, n: usize, s: &str) -> Result<()> {
    if got != 1 << n {
        return Err(Error::Parse {
            line: s.lines().count().max(1),
            reason: format!("expected {} entries for n={n}, found {got}", 1usize << n),
        });
    }
    Ok(())
}

fn join_reals(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(name: NamedFn, n: usize) -> TruthTable {
        make_named(name, n).unwrap()
    }

    #[test]
    fn xor_and_tables() {
        assert_eq!(table(NamedFn::Xor, 2).values(), &[1, -1, -1, 1]);
        assert_eq!(table(NamedFn::And, 2).values(), &[-1, -1, -1, 1]);
        assert_eq!(table(NamedFn::Or, 2).values(), &[-1, 1, 1, 1]);
    }

    #[test]
    fn majority_and_ties() {
        // (+1, -1, +1) is index 0b101
        assert_eq!(table(NamedFn::Maj, 3).get(0b101), 1);
        // even arity ties go to +1
        let maj2 = table(NamedFn::Maj, 2);
        assert_eq!(maj2.values(), &[-1, 1, 1, 1]);
        assert_eq!(table(NamedFn::Thresh(0.0), 4), table(NamedFn::Maj, 4));
        // thresh 0.06 at k=12 needs Σ x ≥ 0.06, i.e. Σ ≥ 2 on even sums
        let t = table(NamedFn::Thresh(0.06), 12);
        assert_eq!(t.get(0b0000_0011_1111), -1); // Σ = 0
        assert_eq!(t.get(0b0000_0111_1111), 1); // Σ = 2
    }

    #[test]
    fn dictator_and_errors() {
        let d = table(NamedFn::Dict(2), 3);
        assert_eq!(d.get(0b010), 1);
        assert_eq!(d.get(0b101), -1);
        assert!(matches!(
            make_named(NamedFn::Dict(4), 3),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            make_named(NamedFn::Xor, 29),
            Err(Error::Capacity { arity: 29, .. })
        ));
        assert!(matches!("foo".parse::<NamedFn>(), Err(Error::UnknownName(_))));
        assert_eq!("dict:3".parse::<NamedFn>().unwrap(), NamedFn::Dict(3));
        assert_eq!("THRESH:0.5".parse::<NamedFn>().unwrap(), NamedFn::Thresh(0.5));
    }

    #[test]
    fn uniform_weights_and_means() {
        let u = uniform_dist(2).unwrap();
        assert_eq!(u.nu(), &[0.0, 0.0]);
        let u3 = uniform_dist(3).unwrap();
        for x in 0..8 {
            assert_eq!(u3.weight(x), 0.125);
        }
        let d2 = Distribution::uniform(2).unwrap();
        assert_eq!(mean(&table(NamedFn::Xor, 2), &d2).unwrap(), 0.0);
        assert_eq!(mean(&table(NamedFn::And, 2), &d2).unwrap(), -0.5);
        let p = ProbFunction::new(2, vec![0.6, 0.75, 0.75, 1.0]).unwrap();
        assert!((mean(&p, &d2).unwrap() - 11.0 / 20.0).abs() < 1e-15);
        assert!(matches!(
            mean(&table(NamedFn::Xor, 3), &d2),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn xor_is_balanced_up_to_ten() {
        for n in 1..=10 {
            let d = Distribution::uniform(n).unwrap();
            assert_eq!(mean(&table(NamedFn::Xor, n), &d).unwrap(), 0.0);
        }
    }

    #[test]
    fn symmetry_detection() {
        assert!(table(NamedFn::Maj, 5).is_symmetric());
        assert!(table(NamedFn::Xor, 4).is_symmetric());
        assert_eq!(
            table(NamedFn::Dict(1), 3).symmetry_violation(),
            Some((0, 1))
        );
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = "n=2\n+-x+\n".parse::<TruthTable>().unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 2,
                reason: "unexpected character `x`".into()
            }
        );
        assert!(matches!(
            "k=2\n++++".parse::<TruthTable>(),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            "n=2\n0.5 0.5 abc 0".parse::<Distribution>(),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            "n=1\n0.5 0.6".parse::<Distribution>(),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn distribution_power_is_product() {
        let d = Distribution::new(1, vec![0.25, 0.75]).unwrap();
        let d2 = d.power(2).unwrap();
        assert_eq!(d2.weights(), &[0.0625, 0.1875, 0.1875, 0.5625]);
    }

    fn arb_table() -> impl Strategy<Value = TruthTable> {
        (1usize..=6).prop_flat_map(|n| {
            proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 1 << n)
                .prop_map(move |v| TruthTable::new(n, v).unwrap())
        })
    }

    fn arb_dist() -> impl Strategy<Value = Distribution> {
        (1usize..=5).prop_flat_map(|n| {
            proptest::collection::vec(0.0f64..1.0, 1 << n)
                .prop_filter("nonzero", |w| w.iter().sum::<f64>() > 0.0)
                .prop_map(move |w| Distribution::from_unnormalized(n, w).unwrap())
        })
    }

    proptest! {
        #[test]
        fn text_roundtrip(t in arb_table(), d in arb_dist()) {
            prop_assert_eq!(t.to_string().parse::<TruthTable>().unwrap(), t);
            prop_assert_eq!(d.to_string().parse::<Distribution>().unwrap(), d);
        }

        #[test]
        fn product_weights_normalised(nu in proptest::collection::vec(-1.0f64..=1.0, 1..=10)) {
            let p = ProductDist::new(nu).unwrap();
            let d = p.to_distribution().unwrap();
            prop_assert!(d.weights().iter().all(|&w| w >= 0.0));
            prop_assert!((d.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for x in 0..d.weights().len() {
                prop_assert!((d.weight(x) - p.weight(x)).abs() < 1e-15);
            }
        }
    }
}
