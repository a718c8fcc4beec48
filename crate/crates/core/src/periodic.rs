//! Eventually periodic subsets of ω.
//!
//! A set is stored as a finite prefix followed by a periodic rule: `n` is a
//! member iff `n < threshold && prefix[n]`, or `n >= threshold` and
//! `residues[n % period]`. The rule uses the absolute residue of `n`, so a
//! set's eventual part is a union of residue classes modulo its period.
//!
//! Values are always canonical (minimal period, then minimal threshold), so
//! two sets are extensionally equal iff they are `==`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::limits::{check_period, check_threshold, lcm};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PeriodicSet {
    threshold: u64,
    period: u64,
    residues: Vec<bool>,
    prefix: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetOp {
    Union,
    Intersection,
    Difference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetClass {
    Finite,
    Cofinite,
    Bilateral,
}

impl PeriodicSet {
    /// Builds and canonicalizes a set from its four components.
    pub fn new(
        threshold: u64,
        period: u64,
        residues: impl IntoIterator<Item = u64>,
        prefix: Vec<bool>,
    ) -> Result<Self> {
        if period == 0 {
            return Err(Error::malformed("period must be at least 1"));
        }
        check_period(period as u128)?;
        if prefix.len() as u64 != threshold {
            return Err(Error::malformed(format!(
                "prefix has length {} but threshold is {threshold}",
                prefix.len()
            )));
        }
        let mut bits = vec![false; period as usize];
        for r in residues {
            if r >= period {
                return Err(Error::malformed(format!("residue {r} not below period {period}")));
            }
            bits[r as usize] = true;
        }
        Ok(Self::canonicalize_parts(period, bits, prefix))
    }

    /// Builds a set from a membership rule for the prefix and for each residue
    /// class of the eventual part.
    pub(crate) fn build(
        threshold: u64,
        period: u64,
        prefix: impl Fn(u64) -> bool,
        residue: impl Fn(u64) -> bool,
    ) -> Result<Self> {
        let period = check_period(period as u128)?;
        let threshold = check_threshold(threshold as u128)?;
        let prefix = (0..threshold).map(prefix).collect();
        let residues = (0..period).map(residue).collect();
        Ok(Self::canonicalize_parts(period, residues, prefix))
    }

    fn canonicalize_parts(period: u64, residues: Vec<bool>, mut prefix: Vec<bool>) -> Self {
        let p = period as usize;
        let min_period = divisors(period)
            .into_iter()
            .find(|&d| {
                let d = d as usize;
                (d..p).all(|i| residues[i] == residues[i % d])
            })
            .unwrap_or(period);
        let residues: Vec<bool> = residues[..min_period as usize].to_vec();
        while let Some(&last) = prefix.last() {
            let n = prefix.len() as u64 - 1;
            if last != residues[(n % min_period) as usize] {
                break;
            }
            prefix.pop();
        }
        PeriodicSet {
            threshold: prefix.len() as u64,
            period: min_period,
            residues,
            prefix,
        }
    }

    pub fn omega() -> Self {
        PeriodicSet {
            threshold: 0,
            period: 1,
            residues: vec![true],
            prefix: vec![],
        }
    }

    pub fn empty() -> Self {
        PeriodicSet {
            threshold: 0,
            period: 1,
            residues: vec![false],
            prefix: vec![],
        }
    }

    /// `{n : n ≡ residue (mod modulus)}`.
    pub fn residue_class(modulus: u64, residue: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::malformed("modulus must be at least 1"));
        }
        Self::new(0, modulus, [residue % modulus], vec![])
    }

    pub fn multiples(k: u64) -> Result<Self> {
        Self::residue_class(k, 0)
    }

    pub fn finite(members: impl IntoIterator<Item = u64>) -> Result<Self> {
        let members: Vec<u64> = members.into_iter().collect();
        let threshold = members.iter().max().map_or(0, |m| m + 1);
        check_threshold(threshold as u128)?;
        let mut prefix = vec![false; threshold as usize];
        for m in members {
            prefix[m as usize] = true;
        }
        Self::new(threshold, 1, [], prefix)
    }

    /// `{n : n >= start}`.
    pub fn from_start(start: u64) -> Result<Self> {
        check_threshold(start as u128)?;
        Self::new(start, 1, [0], vec![false; start as usize])
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn prefix(&self) -> &[bool] {
        &self.prefix
    }

    pub fn residues(&self) -> impl Iterator<Item = u64> + '_ {
        self.residues
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(r, _)| r as u64)
    }

    /// Membership of the eventual rule for residue class `r` (taken mod period).
    pub fn eventual(&self, r: u64) -> bool {
        self.residues[(r % self.period) as usize]
    }

    pub fn member(&self, n: u64) -> bool {
        if n < self.threshold {
            self.prefix[n as usize]
        } else {
            self.eventual(n)
        }
    }

    pub fn complement(&self) -> Self {
        PeriodicSet {
            threshold: self.threshold,
            period: self.period,
            residues: self.residues.iter().map(|b| !b).collect(),
            prefix: self.prefix.iter().map(|b| !b).collect(),
        }
    }

    pub fn combine(&self, op: SetOp, other: &PeriodicSet) -> Result<Self> {
        let f = |a: bool, b: bool| match op {
            SetOp::Union => a || b,
            SetOp::Intersection => a && b,
            SetOp::Difference => a && !b,
        };
        let period = lcm(self.period, other.period)?;
        let threshold = self.threshold.max(other.threshold);
        Self::build(
            threshold,
            period,
            |n| f(self.member(n), other.member(n)),
            |r| f(self.eventual(r), other.eventual(r)),
        )
    }

    pub fn union(&self, other: &PeriodicSet) -> Result<Self> {
        self.combine(SetOp::Union, other)
    }

    pub fn intersection(&self, other: &PeriodicSet) -> Result<Self> {
        self.combine(SetOp::Intersection, other)
    }

    pub fn difference(&self, other: &PeriodicSet) -> Result<Self> {
        self.combine(SetOp::Difference, other)
    }

    pub fn classify(&self) -> SetClass {
        if self.residues.iter().all(|b| !b) {
            SetClass::Finite
        } else if self.residues.iter().all(|&b| b) {
            SetClass::Cofinite
        } else {
            SetClass::Bilateral
        }
    }

    pub fn is_subset(&self, other: &PeriodicSet) -> Result<bool> {
        Ok(self.difference(other)? == PeriodicSet::empty())
    }
}

fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

impl fmt::Display for PeriodicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let residues: Vec<String> = self.residues().map(|r| r.to_string()).collect();
        let prefix: String = self.prefix.iter().map(|&b| if b { '1' } else { '0' }).collect();
        write!(f, "{}:{}:{{{}}}:{}", self.threshold, self.period, residues.join(","), prefix)
    }
}

impl fmt::Debug for PeriodicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PeriodicSet({self})")
    }
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::SyntaxError { position, message: message.into() }
}

fn parse_bits(bits: &str, at: usize) -> Result<Vec<bool>> {
    bits.chars()
        .enumerate()
        .map(|(i, c)| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(syntax(at + i, format!("bad prefix bit {c:?}"))),
        })
        .collect()
}

fn parse_num(t: &str, at: usize) -> Result<u64> {
    t.parse::<u64>().map_err(|_| syntax(at, format!("bad number {t:?}")))
}

impl FromStr for PeriodicSet {
    type Err = Error;

    /// Parses `N:p:{r1,r2,...}:prefixbits`. Whitespace is ignored; error
    /// positions count characters after it is dropped.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let colon = |from: usize, what: &str| {
            s[from..]
                .find(':')
                .map(|i| from + i)
                .ok_or_else(|| syntax(s.len(), format!("expected ':' after {what}")))
        };
        let c1 = colon(0, "threshold")?;
        let c2 = colon(c1 + 1, "period")?;
        let threshold = parse_num(&s[..c1], 0)?;
        let period = parse_num(&s[c1 + 1..c2], c1 + 1)?;
        let open = c2 + 1;
        if !s[open..].starts_with('{') {
            return Err(syntax(open, "expected '{' opening the residues"));
        }
        let close = s[open..]
            .find('}')
            .map(|i| open + i)
            .ok_or_else(|| syntax(s.len(), "unclosed '{'"))?;
        let mut residues = Vec::new();
        let mut at = open + 1;
        for t in s[open + 1..close].split(',') {
            if !t.is_empty() {
                residues.push(parse_num(t, at)?);
            }
            at += t.len() + 1;
        }
        if !s[close + 1..].starts_with(':') {
            return Err(syntax(close + 1, "expected ':' before the prefix"));
        }
        let bits = parse_bits(&s[close + 2..], close + 2)?;
        PeriodicSet::new(threshold, period, residues, bits)
    }
}

#[derive(Serialize, Deserialize)]
struct RawSet {
    threshold: u64,
    period: u64,
    residues: Vec<u64>,
    prefix: String,
}

impl Serialize for PeriodicSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawSet {
            threshold: self.threshold,
            period: self.period,
            residues: self.residues().collect(),
            prefix: self.prefix.iter().map(|&b| if b { '1' } else { '0' }).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PeriodicSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSet::deserialize(deserializer)?;
        let prefix = parse_bits(&raw.prefix, 0).map_err(serde::de::Error::custom)?;
        PeriodicSet::new(raw.threshold, raw.period, raw.residues, prefix).map_err(serde::de::Error::custom)
    }
}
