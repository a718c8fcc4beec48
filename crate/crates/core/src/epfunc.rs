//! Quasi-affine eventually periodic maps ω → ω.
//!
//! Beyond a threshold `N`, on each residue class `r` modulo the period `p`
//! the map is `n ↦ (a·n + b) / d` with `a ≥ 0`, `d ≥ 1`, where the division
//! is exact on the whole class. Below `N` values come from a prefix table.
//! Denominators are what make left inverses (halving, for instance)
//! representable; maps built from naturals and residue cases have `d = 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::limits::{check_period, check_threshold, lcm};
use crate::periodic::PeriodicSet;

/// `n ↦ (slope·n + intercept) / denom`, stored in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Piece {
    pub slope: u64,
    pub intercept: i64,
    pub denom: u64,
}

impl Piece {
    pub fn new(slope: u64, intercept: i64, denom: u64) -> Result<Piece> {
        Piece::reduce(slope as i128, intercept as i128, denom as i128)
    }

    pub fn constant(c: u64) -> Piece {
        Piece {
            slope: 0,
            intercept: c as i64,
            denom: 1,
        }
    }

    fn reduce(slope: i128, intercept: i128, denom: i128) -> Result<Piece> {
        if denom <= 0 || slope < 0 {
            return Err(Error::malformed("piece needs slope >= 0 and denominator >= 1"));
        }
        let g = slope.gcd(&intercept).gcd(&denom);
        let (slope, intercept, denom) = (slope / g, intercept / g, denom / g);
        Ok(Piece {
            slope: u64::try_from(slope).map_err(|_| Error::ValueOverflow("piece slope"))?,
            intercept: i64::try_from(intercept).map_err(|_| Error::ValueOverflow("piece intercept"))?,
            denom: u64::try_from(denom).map_err(|_| Error::ValueOverflow("piece denominator"))?,
        })
    }

    /// Numerator `slope·n + intercept` before division.
    fn numerator(&self, n: u64) -> i128 {
        self.slope as i128 * n as i128 + self.intercept as i128
    }

    fn value(&self, n: u64) -> Result<u64> {
        let num = self.numerator(n);
        let d = self.denom as i128;
        if num < 0 || num % d != 0 {
            return Err(Error::malformed(format!("piece {self:?} is not a natural at {n}")));
        }
        u64::try_from(num / d).map_err(|_| Error::ValueOverflow("function value"))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EPFunction {
    threshold: u64,
    period: u64,
    pieces: Vec<Piece>,
    prefix: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Less,
    LessEq,
    Equal,
}

impl Relation {
    fn holds(self, x: u64, y: u64) -> bool {
        match self {
            Relation::Less => x < y,
            Relation::LessEq => x <= y,
            Relation::Equal => x == y,
        }
    }
}

/// First `n >= start` with `n ≡ r (mod m)`.
fn first_in_class(start: u64, r: u64, m: u64) -> u64 {
    start + (r % m + m - start % m) % m
}

impl EPFunction {
    pub fn new(threshold: u64, period: u64, pieces: Vec<Piece>, prefix: Vec<u64>) -> Result<Self> {
        if period == 0 || pieces.len() as u64 != period {
            return Err(Error::malformed(format!(
                "need one piece per residue class: period {period}, {} pieces",
                pieces.len()
            )));
        }
        if prefix.len() as u64 != threshold {
            return Err(Error::malformed(format!(
                "prefix has length {} but threshold is {threshold}",
                prefix.len()
            )));
        }
        check_period(period as u128)?;
        check_threshold(threshold as u128)?;
        let f = EPFunction {
            threshold,
            period,
            pieces,
            prefix,
        };
        f.validate()?;
        Ok(f.canonicalize())
    }

    fn build(
        threshold: u64,
        period: u64,
        prefix: impl Fn(u64) -> Result<u64>,
        piece: impl Fn(u64) -> Result<Piece>,
    ) -> Result<Self> {
        let period = check_period(period as u128)?;
        let threshold = check_threshold(threshold as u128)?;
        let prefix = (0..threshold).map(prefix).collect::<Result<Vec<_>>>()?;
        let pieces = (0..period).map(piece).collect::<Result<Vec<_>>>()?;
        Self::new(threshold, period, pieces, prefix)
    }

    /// Every class must produce naturals: exact division and a non-negative
    /// first value (slopes are non-negative, so values only grow).
    fn validate(&self) -> Result<()> {
        for (r, piece) in self.pieces.iter().enumerate() {
            let n0 = first_in_class(self.threshold, r as u64, self.period);
            piece.value(n0)?;
            if !(piece.slope as u128 * self.period as u128).is_multiple_of(piece.denom as u128) {
                return Err(Error::malformed(format!(
                    "piece {piece:?} is not integral along class {r} mod {}",
                    self.period
                )));
            }
        }
        Ok(())
    }

    fn canonicalize(mut self) -> Self {
        let p = self.period as usize;
        let min_period = (1..=p)
            .find(|&d| p.is_multiple_of(d) && (d..p).all(|i| self.pieces[i] == self.pieces[i % d]))
            .unwrap_or(p);
        self.pieces.truncate(min_period);
        self.period = min_period as u64;
        while let Some(&last) = self.prefix.last() {
            let n = self.prefix.len() as u64 - 1;
            let piece = self.pieces[(n % self.period) as usize];
            if piece.value(n).ok() != Some(last) {
                break;
            }
            self.prefix.pop();
        }
        self.threshold = self.prefix.len() as u64;
        self
    }

    pub fn affine(slope: u64, intercept: i64) -> Result<Self> {
        Self::new(0, 1, vec![Piece::new(slope, intercept, 1)?], vec![])
    }

    pub fn identity() -> Self {
        Self::affine(1, 0).expect("identity is valid")
    }

    pub fn constant(c: u64) -> Self {
        Self::new(0, 1, vec![Piece::constant(c)], vec![]).expect("constants are valid")
    }

    pub fn successor() -> Self {
        Self::affine(1, 1).expect("successor is valid")
    }

    pub fn double() -> Self {
        Self::affine(2, 0).expect("doubling is valid")
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    /// The affine rule used on residue class `r` beyond the threshold.
    pub fn piece(&self, r: u64) -> Piece {
        self.pieces[(r % self.period) as usize]
    }

    fn max_denom(&self) -> u64 {
        self.pieces.iter().fold(1, |acc, p| acc.lcm(&p.denom))
    }

    pub fn try_eval(&self, n: u64) -> Result<u64> {
        if n < self.threshold {
            Ok(self.prefix[n as usize])
        } else {
            self.piece(n).value(n)
        }
    }

    /// Panics if the value does not fit in a `u64`.
    pub fn eval(&self, n: u64) -> u64 {
        self.try_eval(n).expect("function value overflow")
    }

    /// True if the map is constant on residue class `r` beyond the threshold.
    pub fn is_flat_on(&self, r: u64) -> bool {
        self.piece(r).slope == 0
    }

    /// `self ∘ inner`, i.e. `n ↦ self(inner(n))`.
    pub fn compose(&self, inner: &EPFunction) -> Result<Self> {
        let outer = self;
        let stride = (outer.period as u128 * inner.max_denom() as u128).min(u64::MAX as u128) as u64;
        let period = lcm(inner.period, check_period(stride as u128)?)?;
        let mut threshold = inner.threshold as i128;
        for piece in &inner.pieces {
            if piece.slope > 0 {
                let need = outer.threshold as i128 * piece.denom as i128 - piece.intercept as i128;
                threshold = threshold.max(Integer::div_ceil(&need, &(piece.slope as i128)));
            }
        }
        let threshold = check_threshold(threshold.max(0) as u128)?;
        Self::build(
            threshold,
            period,
            |n| outer.try_eval(inner.try_eval(n)?),
            |r| {
                let g = inner.piece(r);
                if g.slope == 0 {
                    return Ok(Piece::constant(outer.try_eval(g.intercept as u64)?));
                }
                let n = first_in_class(threshold, r, period);
                let f = outer.piece(inner.try_eval(n)?);
                Piece::reduce(
                    f.slope as i128 * g.slope as i128,
                    f.slope as i128 * g.intercept as i128 + f.intercept as i128 * g.denom as i128,
                    f.denom as i128 * g.denom as i128,
                )
            },
        )
    }

    /// `{n : self(n) rel other(n)}`.
    pub fn compare_set(&self, rel: Relation, other: &EPFunction) -> Result<PeriodicSet> {
        let period = lcm(self.period, other.period)?;
        let mut threshold = self.threshold.max(other.threshold) as i128;
        for r in 0..period {
            let (p, q) = (self.piece(r), other.piece(r));
            let c = p.slope as i128 * q.denom as i128 - q.slope as i128 * p.denom as i128;
            let e = p.intercept as i128 * q.denom as i128 - q.intercept as i128 * p.denom as i128;
            // sign of c·n + e is constant from here on
            let stable = match c.signum() {
                0 => 0,
                1 if e <= 0 => (-e) / c + 1,
                -1 if e >= 0 => e / (-c) + 1,
                _ => 0,
            };
            threshold = threshold.max(stable);
        }
        let threshold = check_threshold(threshold as u128)?;
        let at = |n: u64| -> bool { rel.holds(self.eval(n), other.eval(n)) };
        PeriodicSet::build(threshold, period, at, |r| at(first_in_class(threshold, r, period)))
    }

    /// `{n : self(n) ∈ set}`.
    pub fn preimage(&self, set: &PeriodicSet) -> Result<PeriodicSet> {
        let stride = check_period(set.period() as u128 * self.max_denom() as u128)?;
        let period = lcm(self.period, stride)?;
        let mut threshold = self.threshold as i128;
        for piece in &self.pieces {
            if piece.slope > 0 {
                let need = set.threshold() as i128 * piece.denom as i128 - piece.intercept as i128;
                threshold = threshold.max(Integer::div_ceil(&need, &(piece.slope as i128)));
            }
        }
        let threshold = check_threshold(threshold.max(0) as u128)?;
        let at = |n: u64| set.member(self.eval(n));
        PeriodicSet::build(threshold, period, at, |r| at(first_in_class(threshold, r, period)))
    }

    /// Decides injectivity exactly. Each class beyond the threshold maps onto
    /// an arithmetic progression; two progressions meet iff their starts agree
    /// modulo the gcd of their steps.
    pub fn check_injective(&self) -> Result<()> {
        let progressions = self.progressions()?;
        let mut seen: BTreeMap<u64, u64> = BTreeMap::new();
        for (n, &v) in self.prefix.iter().enumerate() {
            if let Some(m) = seen.insert(v, n as u64) {
                return Err(Error::NotInjective(format!("f({m}) = f({n}) = {v}")));
            }
        }
        for (r, &(start, step)) in progressions.iter().enumerate() {
            if let Some((&v, &n)) = seen.iter().find(|(&v, _)| v >= start && (v - start) % step == 0) {
                return Err(Error::NotInjective(format!(
                    "prefix value f({n}) = {v} is also taken on class {r}"
                )));
            }
            for (r2, &(start2, step2)) in progressions.iter().enumerate().skip(r + 1) {
                let g = step.gcd(&step2);
                if start % g == start2 % g {
                    return Err(Error::NotInjective(format!(
                        "classes {r} and {r2} mod {} have overlapping images",
                        self.period
                    )));
                }
            }
        }
        Ok(())
    }

    /// `(first value, step)` of the image of each class beyond the threshold.
    fn progressions(&self) -> Result<Vec<(u64, u64)>> {
        (0..self.period)
            .map(|r| {
                let piece = self.piece(r);
                if piece.slope == 0 {
                    return Err(Error::NotInjective(format!(
                        "constant {} on residue class {r} mod {}",
                        piece.intercept, self.period
                    )));
                }
                let n0 = first_in_class(self.threshold, r, self.period);
                let step = piece.slope as u128 * self.period as u128 / piece.denom as u128;
                let step = u64::try_from(step).map_err(|_| Error::ValueOverflow("image step"))?;
                Ok((piece.value(n0)?, step))
            })
            .collect()
    }

    /// A map `g` with `g(f(n)) = n` for every `n`; off the image `g` is 0.
    pub fn left_inverse(&self) -> Result<Self> {
        self.check_injective()?;
        let progressions = self.progressions()?;
        let not_representable = |e: Error| match e {
            Error::PeriodOverflow { .. } | Error::ThresholdOverflow { .. } => {
                Error::NotRepresentable(format!("left inverse of {self}: {e}"))
            }
            other => other,
        };
        let period = progressions
            .iter()
            .try_fold(1u64, |acc, &(_, step)| lcm(acc, step))
            .map_err(not_representable)?;
        let threshold = progressions
            .iter()
            .map(|&(start, _)| start)
            .chain(self.prefix.iter().map(|&v| v + 1))
            .max()
            .unwrap_or(0);
        let threshold = check_threshold(threshold as u128).map_err(not_representable)?;
        let class_of = |m: u64| {
            progressions
                .iter()
                .position(|&(start, step)| m >= start && (m - start).is_multiple_of(step))
        };
        let inverse_piece = |r: usize| {
            let p = self.piece(r as u64);
            Piece::reduce(p.denom as i128, -(p.intercept as i128), p.slope as i128)
        };
        Self::build(
            threshold,
            period,
            |m| {
                if let Some(n) = self.prefix.iter().position(|&v| v == m) {
                    return Ok(n as u64);
                }
                match class_of(m) {
                    Some(r) => inverse_piece(r)?.value(m),
                    None => Ok(0),
                }
            },
            |q| match class_of(first_in_class(threshold, q, period)) {
                Some(r) => inverse_piece(r),
                None => Ok(Piece::constant(0)),
            },
        )
    }

    /// Pointwise sum.
    pub fn add(&self, other: &EPFunction) -> Result<Self> {
        let period = lcm(self.period, other.period)?;
        Self::build(
            self.threshold.max(other.threshold),
            period,
            |n| {
                self.try_eval(n)?
                    .checked_add(other.try_eval(n)?)
                    .ok_or(Error::ValueOverflow("sum"))
            },
            |r| {
                let (p, q) = (self.piece(r), other.piece(r));
                Piece::reduce(
                    p.slope as i128 * q.denom as i128 + q.slope as i128 * p.denom as i128,
                    p.intercept as i128 * q.denom as i128 + q.intercept as i128 * p.denom as i128,
                    p.denom as i128 * q.denom as i128,
                )
            },
        )
    }

    pub fn scale(&self, c: u64) -> Result<Self> {
        Self::build(
            self.threshold,
            self.period,
            |n| self.try_eval(n)?.checked_mul(c).ok_or(Error::ValueOverflow("scale")),
            |r| {
                let p = self.piece(r);
                Piece::reduce(
                    p.slope as i128 * c as i128,
                    p.intercept as i128 * c as i128,
                    p.denom as i128,
                )
            },
        )
    }

    /// `n ↦ branches[n mod modulus](n)`.
    pub fn select(modulus: u64, branches: &[EPFunction]) -> Result<Self> {
        if modulus == 0 || branches.len() as u64 != modulus {
            return Err(Error::malformed("one branch per residue is required"));
        }
        let period = branches.iter().try_fold(modulus, |acc, b| lcm(acc, b.period))?;
        let threshold = branches.iter().map(|b| b.threshold).max().unwrap_or(0);
        let branch = |n: u64| &branches[(n % modulus) as usize];
        Self::build(threshold, period, |n| branch(n).try_eval(n), |r| Ok(branch(r).piece(r)))
    }

    /// Overrides finitely many values.
    pub fn patch(&self, overrides: &BTreeMap<u64, u64>) -> Result<Self> {
        let threshold = overrides
            .keys()
            .next_back()
            .map_or(self.threshold, |&k| self.threshold.max(k + 1));
        Self::build(
            threshold,
            self.period,
            |n| match overrides.get(&n) {
                Some(&v) => Ok(v),
                None => self.try_eval(n),
            },
            |r| Ok(self.piece(r)),
        )
    }
}

impl fmt::Display for EPFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pieces: Vec<String> = self
            .pieces
            .iter()
            .map(|p| match p.denom {
                1 => format!("({},{})", p.slope, p.intercept),
                d => format!("({},{},{})", p.slope, p.intercept, d),
            })
            .collect();
        let prefix: Vec<String> = self.prefix.iter().map(|v| v.to_string()).collect();
        write!(
            f,
            "{}:{}:[{}]:{}",
            self.threshold,
            self.period,
            pieces.join(","),
            prefix.join(",")
        )
    }
}

impl fmt::Debug for EPFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EPFunction({self})")
    }
}

impl FromStr for EPFunction {
    type Err = Error;

    /// Parses `N:p:[(a0,b0),(a1,b1,d1),...]:v0,v1,...`. Whitespace is
    /// ignored; error positions count characters after it is dropped.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |position: usize, message: &str| Error::SyntaxError { position, message: message.into() };
        let num = |t: &str, at: usize| t.parse::<u64>().map_err(|_| bad(at, "expected a natural number"));
        let open = s.find('[').ok_or_else(|| bad(0, "expected '[' opening the pieces"))?;
        let close = s.rfind(']').ok_or_else(|| bad(s.len(), "unclosed '['"))?;
        let head: Vec<&str> = s[..open].split(':').collect();
        let [n, p, ""] = head[..] else {
            return Err(bad(0, "expected N:p: before the pieces"));
        };
        let (threshold, period) = (num(n, 0)?, num(p, n.len() + 1)?);
        let tail = s[close + 1..]
            .strip_prefix(':')
            .ok_or_else(|| bad(close + 1, "expected ':' before the prefix"))?;
        let mut prefix = Vec::new();
        let mut at = close + 2;
        for t in tail.split(',') {
            if !t.is_empty() {
                prefix.push(num(t, at)?);
            }
            at += t.len() + 1;
        }
        let mut pieces = Vec::new();
        let mut at = open + 1;
        for chunk in s[open + 1..close].split(')') {
            let here = at;
            at += chunk.len() + 1;
            if chunk.is_empty() {
                continue;
            }
            let inner = chunk
                .trim_start_matches(',')
                .strip_prefix('(')
                .ok_or_else(|| bad(here, "expected '(' opening a piece"))?;
            let nums: Vec<i64> = inner
                .split(',')
                .map(|t| t.parse::<i64>().map_err(|_| bad(here, "expected an integer")))
                .collect::<Result<_>>()?;
            let piece = match nums[..] {
                [a, b] if a >= 0 => Piece::new(a as u64, b, 1)?,
                [a, b, d] if a >= 0 && d >= 1 => Piece::new(a as u64, b, d as u64)?,
                _ => return Err(bad(here, "a piece is (a,b) or (a,b,d) with a >= 0 and d >= 1")),
            };
            pieces.push(piece);
        }
        EPFunction::new(threshold, period, pieces, prefix)
    }
}

#[derive(Serialize, Deserialize)]
struct RawFunction {
    threshold: u64,
    period: u64,
    pieces: Vec<RawPiece>,
    prefix: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawPiece {
    slope: u64,
    intercept: i64,
    #[serde(default = "one")]
    denom: u64,
}

fn one() -> u64 {
    1
}

impl Serialize for EPFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawFunction {
            threshold: self.threshold,
            period: self.period,
            pieces: self
                .pieces
                .iter()
                .map(|p| RawPiece {
                    slope: p.slope,
                    intercept: p.intercept,
                    denom: p.denom,
                })
                .collect(),
            prefix: self.prefix.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EPFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawFunction::deserialize(deserializer)?;
        let pieces = raw
            .pieces
            .into_iter()
            .map(|p| Piece::new(p.slope, p.intercept, p.denom))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        EPFunction::new(raw.threshold, raw.period, pieces, raw.prefix).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn func(s: &str) -> EPFunction {
        s.parse().unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(EPFunction::identity().eval(17), 17);
        assert_eq!(EPFunction::double().eval(5), 10);
        assert_eq!(EPFunction::constant(3).eval(999), 3);
        assert_eq!(func("2:1:[(1,0)]:7,8").eval(1), 8);
    }

    #[test]
    fn dsl_round_trip() {
        assert_eq!(EPFunction::double().to_string(), "0:1:[(2,0)]:");
        let f = func("2:2:[(1,0,2),(0,0)]:5,1");
        assert_eq!(f.to_string().parse::<EPFunction>().unwrap(), f);
        assert!("0:1:[(1,-1)]:".parse::<EPFunction>().is_err());
        assert!("0:2:[(1,0)]:".parse::<EPFunction>().is_err());
        assert!("0:1:[(1,0,2)]:".parse::<EPFunction>().is_err());
    }

    #[test]
    fn canonical_period_and_threshold() {
        let f = func("3:2:[(1,0),(1,0)]:0,1,2");
        assert_eq!(f, EPFunction::identity());
    }

    #[test]
    fn compose_examples() {
        let f = func("1:3:[(2,1),(0,4),(1,0)]:9");
        assert_eq!(f.compose(&EPFunction::identity()).unwrap(), f);
        assert_eq!(
            EPFunction::double().compose(&EPFunction::double()).unwrap(),
            EPFunction::affine(4, 0).unwrap()
        );
        let h = EPFunction::successor().compose(&EPFunction::double()).unwrap();
        for n in 0..10_000 {
            assert_eq!(h.eval(n), 2 * n + 1);
        }
        assert_eq!(h, EPFunction::affine(2, 1).unwrap());
    }

    #[test]
    fn compare_set_examples() {
        let f = func("2:3:[(1,2),(0,1),(3,0)]:4,4");
        assert_eq!(f.compare_set(Relation::Equal, &f).unwrap(), PeriodicSet::omega());
        let less = EPFunction::constant(5)
            .compare_set(Relation::Less, &EPFunction::identity())
            .unwrap();
        for n in 0..10_000 {
            assert_eq!(less.member(n), n > 5);
        }
        let le = EPFunction::successor()
            .compare_set(Relation::LessEq, &EPFunction::double())
            .unwrap();
        for n in 0..10_000 {
            assert_eq!(le.member(n), n < 2 * n);
        }
        assert_eq!(le, PeriodicSet::from_start(1).unwrap());
    }

    #[test]
    fn preimage_examples() {
        let a: PeriodicSet = "2:3:{1}:10".parse().unwrap();
        assert_eq!(EPFunction::identity().preimage(&a).unwrap(), a);
        let fours = PeriodicSet::multiples(4).unwrap();
        let pre = EPFunction::double().preimage(&fours).unwrap();
        for n in 0..10_000 {
            assert_eq!(pre.member(n), (2 * n) % 4 == 0);
        }
        assert_eq!(pre, PeriodicSet::multiples(2).unwrap());
        assert_eq!(EPFunction::constant(3).preimage(&a).unwrap(), PeriodicSet::empty());
        let b: PeriodicSet = "4:1:{}:0001".parse().unwrap();
        assert_eq!(EPFunction::constant(3).preimage(&b).unwrap(), PeriodicSet::omega());
    }

    #[test]
    fn left_inverse_examples() {
        assert_eq!(EPFunction::identity().left_inverse().unwrap(), EPFunction::identity());

        let half = EPFunction::double().left_inverse().unwrap();
        for n in 0..10_000 {
            assert_eq!(half.eval(EPFunction::double().eval(n)), n);
            assert_eq!(half.eval(2 * n + 1), 0);
        }
        assert_eq!(half.to_string(), "0:2:[(1,0,2),(0,0)]:");

        let plus3 = EPFunction::affine(1, 3).unwrap();
        let minus3 = plus3.left_inverse().unwrap();
        for n in 0..10_000 {
            assert_eq!(minus3.eval(plus3.eval(n)), n);
        }
        assert_eq!(minus3.to_string(), "3:1:[(1,-3)]:0,0,0");
    }

    #[test]
    fn compare_set_with_touching_start() {
        let (c, f) = (EPFunction::constant(3), EPFunction::affine(1, 3).unwrap());
        assert_eq!(c.compare_set(Relation::Less, &f).unwrap(), PeriodicSet::from_start(1).unwrap());
        assert_eq!(f.compare_set(Relation::Equal, &c).unwrap(), PeriodicSet::finite([0]).unwrap());
    }

    #[test]
    fn injectivity_is_decided_exactly() {
        assert!(matches!(EPFunction::constant(1).left_inverse(), Err(Error::NotInjective(_))));
        // evens ↦ n, odds ↦ n + 1: class images collide
        let clash = func("0:2:[(1,0),(1,1)]:");
        assert!(matches!(clash.check_injective(), Err(Error::NotInjective(_))));
        // prefix value 4 reappears as f(2)
        let prefix_clash = func("1:1:[(2,0)]:4");
        assert!(matches!(prefix_clash.check_injective(), Err(Error::NotInjective(_))));
        // evens ↦ 2n, odds ↦ 2n + 1 has disjoint images
        assert!(func("0:2:[(2,0),(2,1)]:").check_injective().is_ok());
    }

    #[test]
    fn left_inverse_needs_period_within_cap() {
        let limits = crate::limits::Limits {
            period_cap: 50,
            ..Default::default()
        };
        let f = EPFunction::affine(60, 0).unwrap();
        limits.scoped(|| {
            assert!(matches!(f.left_inverse(), Err(Error::NotRepresentable(_))));
        });
    }

    pub(crate) fn arb_function() -> impl proptest::strategy::Strategy<Value = EPFunction> {
        use proptest::prelude::*;
        (1u64..5, 0usize..4)
            .prop_flat_map(|(p, n)| {
                (
                    Just(p),
                    proptest::collection::vec((0u64..4, 0i64..6), p as usize),
                    proptest::collection::vec(0u64..20, n),
                )
            })
            .prop_map(|(p, pieces, prefix)| {
                let pieces = pieces.into_iter().map(|(a, b)| Piece::new(a, b, 1).unwrap()).collect();
                EPFunction::new(prefix.len() as u64, p, pieces, prefix).unwrap()
            })
    }

    fn arb_set() -> impl proptest::strategy::Strategy<Value = PeriodicSet> {
        use proptest::prelude::*;
        (1u64..7, proptest::collection::vec(any::<bool>(), 6), proptest::collection::vec(any::<bool>(), 0..4))
            .prop_map(|(p, res, prefix)| {
                let residues: Vec<u64> = (0..p).filter(|&r| res[r as usize]).collect();
                PeriodicSet::new(prefix.len() as u64, p, residues, prefix).unwrap()
            })
    }

    proptest::proptest! {
        #[test]
        fn composition_is_pointwise_and_associative(f in arb_function(), g in arb_function(), h in arb_function()) {
            let fg = f.compose(&g).unwrap();
            for n in 0..1000 {
                proptest::prop_assert_eq!(fg.eval(n), f.eval(g.eval(n)));
            }
            proptest::prop_assert_eq!(fg.compose(&h).unwrap(), f.compose(&g.compose(&h).unwrap()).unwrap());
        }

        #[test]
        fn compare_sets_are_pointwise(f in arb_function(), g in arb_function()) {
            for rel in [Relation::Less, Relation::LessEq, Relation::Equal] {
                let set = f.compare_set(rel, &g).unwrap();
                for n in 0..2000 {
                    proptest::prop_assert_eq!(set.member(n), rel.holds(f.eval(n), g.eval(n)));
                }
            }
            let eq = f.compare_set(Relation::Equal, &g).unwrap();
            proptest::prop_assert_eq!(eq == PeriodicSet::omega(), f == g);
        }

        #[test]
        fn preimage_is_a_boolean_homomorphism(f in arb_function(), a in arb_set(), b in arb_set()) {
            let pa = f.preimage(&a).unwrap();
            for n in 0..2000 {
                proptest::prop_assert_eq!(pa.member(n), a.member(f.eval(n)));
            }
            proptest::prop_assert_eq!(
                f.preimage(&a.intersection(&b).unwrap()).unwrap(),
                pa.intersection(&f.preimage(&b).unwrap()).unwrap()
            );
            proptest::prop_assert_eq!(f.preimage(&a.complement()).unwrap(), pa.complement());
        }

        #[test]
        fn left_inverse_undoes_injective_maps(a in 1u64..6, b in 0i64..9, p in 1u64..4, n0 in 0u64..3) {
            // n ↦ a·p·n + b + r + n0 on class r is injective and stays above the prefix
            let pieces = (0..p).map(|r| Piece::new(a * p, b + r as i64 + n0 as i64, 1).unwrap()).collect();
            let prefix: Vec<u64> = (0..n0).collect();
            let f = EPFunction::new(n0, p, pieces, prefix).unwrap();
            let g = f.left_inverse().unwrap();
            for n in 0..1000 {
                proptest::prop_assert_eq!(g.eval(f.eval(n)), n);
            }
        }
    }
}
