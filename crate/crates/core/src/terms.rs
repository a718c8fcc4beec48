//! Linear terms denoting elements of iterated ultrapowers of `(ω, ≤)` over a
//! profinite ultrafilter, with an exact order decision procedure.
//!
//! Level `k` is the index of the `k`-th ultrapower, counted from the inside:
//! a rank-`k` term is a function of `(n_1, …, n_k)` taken modulo `u` first in
//! `n_k`, then in `n_{k−1}`, and so on. Typical environments therefore have
//! `n_1 ≫ n_2 ≫ … ≫ n_k`, and `v2 < v1` at rank 2.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{check_period, check_threshold, lcm};
use crate::periodic::PeriodicSet;
use crate::ultrafilter::{ProfinitePoint, RepUltrafilter};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymbolicTerm {
    Const(u64),
    Var(u32),
    Sum(Box<SymbolicTerm>, Box<SymbolicTerm>),
    Scale(u64, Box<SymbolicTerm>),
    /// Branch `n_level mod modulus`.
    ResidueCase {
        modulus: u64,
        level: u32,
        branches: Vec<SymbolicTerm>,
    },
    /// `overrides[n_level]` when listed, `default` otherwise.
    Patch {
        level: u32,
        overrides: BTreeMap<u64, SymbolicTerm>,
        default: Box<SymbolicTerm>,
    },
}

use SymbolicTerm::*;

impl SymbolicTerm {
    pub fn var(level: u32) -> Self {
        Var(level)
    }

    pub fn sum(a: SymbolicTerm, b: SymbolicTerm) -> Self {
        Sum(Box::new(a), Box::new(b))
    }

    pub fn scale(k: u64, t: SymbolicTerm) -> Self {
        Scale(k, Box::new(t))
    }

    pub fn case(modulus: u64, level: u32, branches: Vec<SymbolicTerm>) -> Result<Self> {
        let t = ResidueCase {
            modulus,
            level,
            branches,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn patch(level: u32, overrides: BTreeMap<u64, SymbolicTerm>, default: SymbolicTerm) -> Result<Self> {
        let t = Patch {
            level,
            overrides,
            default: Box::new(default),
        };
        t.validate()?;
        Ok(t)
    }

    /// Checks the structural invariants: levels at least 1 and one branch per residue.
    pub fn validate(&self) -> Result<()> {
        match self {
            Const(_) => Ok(()),
            Var(0) => Err(Error::malformed("variable level 0")),
            Var(_) => Ok(()),
            Sum(a, b) => a.validate().and(b.validate()),
            Scale(_, t) => t.validate(),
            ResidueCase {
                modulus,
                level,
                branches,
            } => {
                if *level == 0 || *modulus == 0 || branches.len() as u64 != *modulus {
                    return Err(Error::malformed(format!(
                        "case needs level ≥ 1 and exactly {modulus} branches"
                    )));
                }
                branches.iter().try_for_each(SymbolicTerm::validate)
            }
            Patch {
                level,
                overrides,
                default,
            } => {
                if *level == 0 {
                    return Err(Error::malformed("patch at level 0"));
                }
                overrides.values().try_for_each(SymbolicTerm::validate)?;
                default.validate()
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: SymbolicTerm =
            serde_json::from_str(text).map_err(|e| Error::malformed(format!("term JSON: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    fn children(&self) -> Vec<&SymbolicTerm> {
        match self {
            Const(_) | Var(_) => vec![],
            Sum(a, b) => vec![a, b],
            Scale(_, t) => vec![t],
            ResidueCase { branches, .. } => branches.iter().collect(),
            Patch {
                overrides, default, ..
            } => overrides.values().chain(std::iter::once(&**default)).collect(),
        }
    }
}

/// Highest level occurring in `t`, including case and patch selectors.
pub fn term_rank(t: &SymbolicTerm) -> u32 {
    let own = match t {
        Var(l) => *l,
        ResidueCase { level, .. } | Patch { level, .. } => *level,
        _ => 0,
    };
    t.children().into_iter().map(term_rank).fold(own, u32::max)
}

/// Every level occurring in `t`.
pub fn term_levels(t: &SymbolicTerm) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    fn go(t: &SymbolicTerm, out: &mut BTreeSet<u32>) {
        match t {
            Var(l) | ResidueCase { level: l, .. } | Patch { level: l, .. } => {
                out.insert(*l);
            }
            _ => {}
        }
        t.children().into_iter().for_each(|c| go(c, out));
    }
    go(t, &mut out);
    out
}

/// Ground value with `v_l ↦ env[l − 1]`.
pub fn term_eval(t: &SymbolicTerm, env: &[u64]) -> Result<u64> {
    let at = |l: u32| {
        (l as usize)
            .checked_sub(1)
            .and_then(|i| env.get(i))
            .copied()
            .ok_or(Error::MissingLevel(l))
    };
    let overflow = Error::ValueOverflow("term value");
    match t {
        Const(c) => Ok(*c),
        Var(l) => at(*l),
        Sum(a, b) => term_eval(a, env)?.checked_add(term_eval(b, env)?).ok_or(overflow),
        Scale(k, x) => k.checked_mul(term_eval(x, env)?).ok_or(overflow),
        ResidueCase {
            modulus,
            level,
            branches,
        } => term_eval(&branches[(at(*level)? % modulus) as usize], env),
        Patch {
            level,
            overrides,
            default,
        } => term_eval(overrides.get(&at(*level)?).unwrap_or(default), env),
    }
}

/// Substitutes `v_k := n` and resolves every case and patch at level `k`.
pub fn term_slice(t: &SymbolicTerm, k: u32, n: u64) -> SymbolicTerm {
    match t {
        Const(_) => t.clone(),
        Var(l) if *l == k => Const(n),
        Var(_) => t.clone(),
        Sum(a, b) => SymbolicTerm::sum(term_slice(a, k, n), term_slice(b, k, n)),
        Scale(c, x) => SymbolicTerm::scale(*c, term_slice(x, k, n)),
        ResidueCase {
            modulus,
            level,
            branches,
        } if *level == k => term_slice(&branches[(n % modulus) as usize], k, n),
        ResidueCase {
            modulus,
            level,
            branches,
        } => ResidueCase {
            modulus: *modulus,
            level: *level,
            branches: branches.iter().map(|b| term_slice(b, k, n)).collect(),
        },
        Patch {
            level,
            overrides,
            default,
        } if *level == k => term_slice(overrides.get(&n).unwrap_or(default), k, n),
        Patch {
            level,
            overrides,
            default,
        } => Patch {
            level: *level,
            overrides: overrides.iter().map(|(&m, o)| (m, term_slice(o, k, n))).collect(),
            default: Box::new(term_slice(default, k, n)),
        },
    }
}

#[derive(Default)]
struct Linear {
    constant: u64,
    vars: BTreeMap<u32, u64>,
    rest: BTreeMap<SymbolicTerm, u64>,
}

fn add_into(slot: &mut u64, x: u64) -> Result<()> {
    *slot = slot.checked_add(x).ok_or(Error::ValueOverflow("normal form"))?;
    Ok(())
}

fn collect(t: &SymbolicTerm, factor: u64, lin: &mut Linear) -> Result<()> {
    if factor == 0 {
        return Ok(());
    }
    let overflow = || Error::ValueOverflow("normal form");
    match t {
        Const(c) => add_into(&mut lin.constant, c.checked_mul(factor).ok_or_else(overflow)?),
        Var(l) => add_into(lin.vars.entry(*l).or_default(), factor),
        Sum(a, b) => {
            collect(a, factor, lin)?;
            collect(b, factor, lin)
        }
        Scale(k, x) => collect(x, k.checked_mul(factor).ok_or_else(overflow)?, lin),
        ResidueCase {
            modulus,
            level,
            branches,
        } => {
            let branches = branches.iter().map(normalize).collect::<Result<Vec<_>>>()?;
            let period = (1..=*modulus)
                .find(|&d| modulus % d == 0 && (0..*modulus as usize).all(|i| branches[i] == branches[i % d as usize]))
                .unwrap_or(*modulus);
            if period == 1 {
                return collect(&branches[0], factor, lin);
            }
            let key = ResidueCase {
                modulus: period,
                level: *level,
                branches: branches[..period as usize].to_vec(),
            };
            add_into(lin.rest.entry(key).or_default(), factor)
        }
        Patch {
            level,
            overrides,
            default,
        } => {
            let default = normalize(default)?;
            let mut kept = BTreeMap::new();
            for (&m, o) in overrides {
                let o = normalize(o)?;
                if o != default {
                    kept.insert(m, o);
                }
            }
            if kept.is_empty() {
                return collect(&default, factor, lin);
            }
            let key = Patch {
                level: *level,
                overrides: kept,
                default: Box::new(default),
            };
            add_into(lin.rest.entry(key).or_default(), factor)
        }
    }
}

/// Sum-of-scaled-variables normal form: variables by ascending level, then
/// cases and patches (with normalized children), then the constant.
pub fn normalize(t: &SymbolicTerm) -> Result<SymbolicTerm> {
    let mut lin = Linear::default();
    collect(t, 1, &mut lin)?;
    let scaled = |c: u64, x: SymbolicTerm| if c == 1 { x } else { SymbolicTerm::scale(c, x) };
    let mut parts: Vec<SymbolicTerm> = lin
        .vars
        .into_iter()
        .map(|(l, c)| scaled(c, Var(l)))
        .chain(lin.rest.into_iter().map(|(x, c)| scaled(c, x)))
        .collect();
    if lin.constant > 0 || parts.is_empty() {
        parts.push(Const(lin.constant));
    }
    let mut parts = parts.into_iter();
    let first = parts.next().expect("at least one part");
    Ok(parts.fold(first, SymbolicTerm::sum))
}

/// Affine form `[b, c_1, …, c_k]` of `t` once every case is resolved by
/// `branch(level, modulus)` and every patch falls back to its default.
fn affine(t: &SymbolicTerm, k: u32, branch: &dyn Fn(u32, u64) -> Result<u64>) -> Result<Vec<i128>> {
    let mut out = vec![0i128; k as usize + 1];
    fn go(
        t: &SymbolicTerm,
        factor: i128,
        out: &mut [i128],
        branch: &dyn Fn(u32, u64) -> Result<u64>,
    ) -> Result<()> {
        let overflow = || Error::ValueOverflow("affine form");
        match t {
            Const(c) => out[0] = out[0].checked_add(factor * *c as i128).ok_or_else(overflow)?,
            Var(l) => {
                let max = out.len() as u32 - 1;
                let slot = out.get_mut(*l as usize).ok_or(Error::RankTooHigh { rank: *l, max })?;
                *slot = slot.checked_add(factor).ok_or_else(overflow)?
            }
            Sum(a, b) => {
                go(a, factor, out, branch)?;
                go(b, factor, out, branch)?
            }
            Scale(c, x) => go(x, factor.checked_mul(*c as i128).ok_or_else(overflow)?, out, branch)?,
            ResidueCase {
                modulus,
                level,
                branches,
            } => go(&branches[branch(*level, *modulus)? as usize], factor, out, branch)?,
            Patch { default, .. } => go(default, factor, out, branch)?,
        }
        Ok(())
    }
    go(t, 1, &mut out, branch)?;
    Ok(out)
}

/// Order of `t − s` given its affine form `[b, c_1, …, c_k]` on an
/// environment with `n_1 ≫ … ≫ n_k ≫ 1`.
fn lex_verdict(diff: &[i128]) -> Ordering {
    diff[1..]
        .iter()
        .chain(std::iter::once(&diff[0]))
        .map(|c| c.cmp(&0))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn profinite_point(u: &RepUltrafilter) -> Result<&ProfinitePoint> {
    match u {
        RepUltrafilter::Profinite(pt) => Ok(pt),
        other => Err(Error::Unsupported(format!(
            "term comparison needs a profinite ultrafilter, got {other}"
        ))),
    }
}

fn diff(a: &[i128], b: &[i128]) -> Vec<i128> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn check_rank(t: &SymbolicTerm, k: u32) -> Result<()> {
    let rank = term_rank(t);
    if rank > k {
        return Err(Error::RankTooHigh { rank, max: k });
    }
    Ok(())
}

/// Order of `t` and `s` on a `u`-typical environment, read directly off the
/// coefficient vectors. Independent of [`term_compare`]; used to audit it.
pub fn typical_verdict(t: &SymbolicTerm, s: &SymbolicTerm, u: &RepUltrafilter, k: u32) -> Result<Ordering> {
    let pt = profinite_point(u)?;
    check_rank(t, k)?;
    check_rank(s, k)?;
    let branch = |_: u32, p: u64| pt.residue(p);
    Ok(lex_verdict(&diff(&affine(t, k, &branch)?, &affine(s, k, &branch)?)))
}

/// The sets `{n : slice(t,k,n) ⋚ slice(s,k,n)}` for the three verdicts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictSets {
    pub less: PeriodicSet,
    pub equal: PeriodicSet,
    pub greater: PeriodicSet,
}

impl VerdictSets {
    pub fn get(&self, verdict: Ordering) -> &PeriodicSet {
        match verdict {
            Ordering::Less => &self.less,
            Ordering::Equal => &self.equal,
            Ordering::Greater => &self.greater,
        }
    }

    /// True iff the three sets are pairwise disjoint and cover ω.
    pub fn is_partition(&self) -> Result<bool> {
        let sets = [&self.less, &self.equal, &self.greater];
        let cover = self.less.union(&self.equal)?.union(&self.greater)?;
        let disjoint = (0..3).all(|i| {
            (i + 1..3).all(|j| sets[i].intersection(sets[j]).is_ok_and(|x| x == PeriodicSet::empty()))
        });
        Ok(disjoint && cover == PeriodicSet::omega())
    }
}

fn classes_at(t: &SymbolicTerm, k: u32, modulus: &mut u64, keys: &mut u64) -> Result<()> {
    match t {
        ResidueCase {
            modulus: p, level, ..
        } if *level == k => *modulus = lcm(*modulus, *p)?,
        Patch { level, overrides, .. } if *level == k => {
            if let Some(&last) = overrides.keys().next_back() {
                *keys = (*keys).max(last + 1);
            }
        }
        _ => {}
    }
    t.children().into_iter().try_for_each(|c| classes_at(c, k, modulus, keys))
}

/// Computes the verdict sets of `t` against `s` at the outermost level `k`.
///
/// On each residue class modulo the lcm of the level-`k` case moduli and
/// beyond every level-`k` patch key, the sliced pair is a fixed affine
/// comparison in `n`, so its verdict is eventually constant; the finitely
/// many earlier values are decided by recursion at level `k − 1`.
pub fn verdict_sets(t: &SymbolicTerm, s: &SymbolicTerm, u: &RepUltrafilter, k: u32) -> Result<VerdictSets> {
    let pt = profinite_point(u)?;
    check_rank(t, k)?;
    check_rank(s, k)?;
    let verdict_set = |by: &dyn Fn(Ordering) -> bool| -> Result<VerdictSets> {
        let only = |o| if by(o) { PeriodicSet::omega() } else { PeriodicSet::empty() };
        Ok(VerdictSets {
            less: only(Ordering::Less),
            equal: only(Ordering::Equal),
            greater: only(Ordering::Greater),
        })
    };
    if k == 0 {
        let v = term_eval(t, &[])?.cmp(&term_eval(s, &[])?);
        return verdict_set(&|o| o == v);
    }
    let (mut period, mut keys) = (1u64, 0u64);
    classes_at(t, k, &mut period, &mut keys)?;
    classes_at(s, k, &mut period, &mut keys)?;
    let mut eventual = Vec::with_capacity(period as usize);
    let mut threshold = keys as i128;
    for r in 0..period {
        let branch = |level: u32, p: u64| if level == k { Ok(r % p) } else { pt.residue(p) };
        let d = diff(&affine(t, k, &branch)?, &affine(s, k, &branch)?);
        let inner = &d[1..k as usize];
        let (slope, intercept) = (d[k as usize], d[0]);
        if inner.iter().all(|&c| c == 0) && slope != 0 {
            // sign of slope·n + intercept settles once n > −intercept/slope
            let crossing = num_integer::Integer::div_floor(&-intercept, &slope) + 1;
            threshold = threshold.max(crossing);
        }
        eventual.push(lex_verdict_inner(inner, slope, intercept));
    }
    let threshold = check_threshold(threshold.max(0) as u128)?;
    let prefix = (0..threshold)
        .map(|n| term_compare(&term_slice(t, k, n), &term_slice(s, k, n), u, k - 1))
        .collect::<Result<Vec<Ordering>>>()?;
    let set_of = |o: Ordering| {
        PeriodicSet::build(
            threshold,
            check_period(period as u128)?,
            |n| prefix[n as usize] == o,
            |r| eventual[r as usize] == o,
        )
    };
    Ok(VerdictSets {
        less: set_of(Ordering::Less)?,
        equal: set_of(Ordering::Equal)?,
        greater: set_of(Ordering::Greater)?,
    })
}

/// Verdict for large `n` of the sliced pair whose lower-level coefficients
/// are `inner` and whose constant term is `slope·n + intercept`.
fn lex_verdict_inner(inner: &[i128], slope: i128, intercept: i128) -> Ordering {
    inner
        .iter()
        .map(|c| c.cmp(&0))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| if slope != 0 { slope.cmp(&0) } else { intercept.cmp(&0) })
}

/// Compares `t` and `s` as elements of the `k`-fold ultrapower of `(ω, ≤)`
/// over a profinite `u`.
pub fn term_compare(t: &SymbolicTerm, s: &SymbolicTerm, u: &RepUltrafilter, k: u32) -> Result<Ordering> {
    check_rank(t, k)?;
    check_rank(s, k)?;
    if t == s || normalize(t)? == normalize(s)? {
        profinite_point(u)?;
        return Ok(Ordering::Equal);
    }
    let sets = verdict_sets(t, s, u, k)?;
    debug_assert!(sets.is_partition()?, "verdict sets of {t} and {s} do not partition ω");
    let mut found = None;
    for o in [Ordering::Less, Ordering::Equal, Ordering::Greater] {
        if u.member(sets.get(o))? {
            assert!(found.is_none(), "two verdict sets of {t} and {s} belong to {u}");
            found = Some(o);
        }
    }
    Ok(found.unwrap_or_else(|| panic!("no verdict set of {t} and {s} belongs to {u}")))
}

/// A strictly monotone re-indexing of levels: listed levels map as given,
/// any other level `l` maps to `l + shift`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Substitution {
    shift: u32,
    remap: BTreeMap<u32, u32>,
}

impl Substitution {
    pub fn identity() -> Self {
        Substitution::shift(0)
    }

    pub fn shift(by: u32) -> Self {
        Substitution {
            shift: by,
            remap: BTreeMap::new(),
        }
    }

    pub fn new(shift: u32, remap: BTreeMap<u32, u32>) -> Result<Self> {
        let sub = Substitution { shift, remap };
        let top = sub.remap.keys().next_back().copied().unwrap_or(0) + 1;
        if sub.remap.contains_key(&0) || sub.remap.values().any(|&v| v == 0) {
            return Err(Error::malformed("levels start at 1"));
        }
        if (1..top).any(|l| sub.level(l) >= sub.level(l + 1)) {
            return Err(Error::malformed(format!("level map {:?} is not strictly increasing", sub.remap)));
        }
        Ok(sub)
    }

    /// Sends level `i + 1` to `levels[i]`; levels past the end keep the last offset.
    pub fn from_levels(levels: &[u32]) -> Result<Self> {
        let remap: BTreeMap<u32, u32> = levels.iter().enumerate().map(|(i, &l)| (i as u32 + 1, l)).collect();
        let shift = levels.last().map_or(0, |&l| l.saturating_sub(levels.len() as u32));
        Substitution::new(shift, remap)
    }

    pub fn level(&self, l: u32) -> u32 {
        self.remap.get(&l).copied().unwrap_or(l + self.shift)
    }
}

/// Re-indexes every level of `t` through `sub`.
pub fn term_apply(sub: &Substitution, t: &SymbolicTerm) -> SymbolicTerm {
    map_levels(t, &|l| sub.level(l))
}

pub(crate) fn map_levels(t: &SymbolicTerm, f: &dyn Fn(u32) -> u32) -> SymbolicTerm {
    match t {
        Const(_) => t.clone(),
        Var(l) => Var(f(*l)),
        Sum(a, b) => SymbolicTerm::sum(map_levels(a, f), map_levels(b, f)),
        Scale(c, x) => SymbolicTerm::scale(*c, map_levels(x, f)),
        ResidueCase {
            modulus,
            level,
            branches,
        } => ResidueCase {
            modulus: *modulus,
            level: f(*level),
            branches: branches.iter().map(|b| map_levels(b, f)).collect(),
        },
        Patch {
            level,
            overrides,
            default,
        } => Patch {
            level: f(*level),
            overrides: overrides.iter().map(|(&m, o)| (m, map_levels(o, f))).collect(),
            default: Box::new(map_levels(default, f)),
        },
    }
}

/// The diagonal embedding of rank `k` into rank `k + 1`: the same syntax.
pub fn embed_diagonal(t: &SymbolicTerm, k: u32) -> Result<SymbolicTerm> {
    check_rank(t, k)?;
    Ok(t.clone())
}

/// The lifted embedding of rank `k` into rank `k + 1`: every level moves up by one.
pub fn embed_skew(t: &SymbolicTerm, k: u32) -> Result<SymbolicTerm> {
    if k == 0 {
        return Err(Error::malformed("the skew embedding starts at rank 1"));
    }
    check_rank(t, k)?;
    Ok(term_apply(&Substitution::shift(1), t))
}

impl fmt::Display for SymbolicTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(c) => write!(f, "{c}"),
            Var(l) => write!(f, "v{l}"),
            Sum(a, b) => match **b {
                Sum(..) => write!(f, "{a} + ({b})"),
                _ => write!(f, "{a} + {b}"),
            },
            Scale(c, x) => match **x {
                Sum(..) => write!(f, "{c}*({x})"),
                _ => write!(f, "{c}*{x}"),
            },
            ResidueCase {
                modulus,
                level,
                branches,
            } => {
                let bs: Vec<String> = branches.iter().map(ToString::to_string).collect();
                write!(f, "case({modulus}; {} @ v{level})", bs.join(" | "))
            }
            Patch {
                level,
                overrides,
                default,
            } => {
                let os: Vec<String> = overrides.iter().map(|(m, o)| format!("{m}->{o}")).collect();
                write!(f, "patch(v{level}; {}; {default})", os.join(", "))
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::SyntaxError {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        let hit = self.src[self.pos..].starts_with(token);
        if hit {
            self.pos += token.len();
        }
        hit
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            self.error(format!("expected {token:?}"))
        }
    }

    fn number(&mut self) -> Result<u64> {
        self.skip_ws();
        let digits = self.src[self.pos..].bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            return self.error("expected a number");
        }
        let n = self.src[self.pos..self.pos + digits].parse().or_else(|_| self.error("number too large"))?;
        self.pos += digits;
        Ok(n)
    }

    fn level(&mut self) -> Result<u32> {
        self.expect("v")?;
        let start = self.pos;
        let l = self.number()?;
        if l == 0 || l > u32::MAX as u64 {
            self.pos = start;
            return self.error("levels start at 1");
        }
        Ok(l as u32)
    }

    fn sum(&mut self) -> Result<SymbolicTerm> {
        let mut t = self.product()?;
        while self.eat("+") {
            t = SymbolicTerm::sum(t, self.product()?);
        }
        Ok(t)
    }

    fn product(&mut self) -> Result<SymbolicTerm> {
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            let n = self.number()?;
            if self.eat("*") {
                return Ok(SymbolicTerm::scale(n, self.product()?));
            }
            return Ok(Const(n));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<SymbolicTerm> {
        if self.eat("(") {
            let t = self.sum()?;
            self.expect(")")?;
            return Ok(t);
        }
        if self.eat("case(") {
            let modulus = self.number()?;
            self.expect(";")?;
            let mut branches = vec![self.sum()?];
            while self.eat("|") {
                branches.push(self.sum()?);
            }
            self.expect("@")?;
            let level = self.level()?;
            self.expect(")")?;
            if modulus == 0 || branches.len() as u64 != modulus {
                return self.error(format!("case({modulus}; …) needs {modulus} branches, got {}", branches.len()));
            }
            return Ok(ResidueCase {
                modulus,
                level,
                branches,
            });
        }
        if self.eat("patch(") {
            let level = self.level()?;
            self.expect(";")?;
            let mut overrides = BTreeMap::new();
            if !self.eat(";") {
                loop {
                    let at = self.pos;
                    let m = self.number()?;
                    self.expect("->")?;
                    if overrides.insert(m, self.sum()?).is_some() {
                        self.pos = at;
                        return self.error(format!("duplicate patch key {m}"));
                    }
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")?;
            }
            let default = Box::new(self.sum()?);
            self.expect(")")?;
            return Ok(Patch {
                level,
                overrides,
                default,
            });
        }
        if self.peek() == Some('v') {
            return Ok(Var(self.level()?));
        }
        self.error("expected a term")
    }
}

impl FromStr for SymbolicTerm {
    type Err = Error;

    /// Parses `5`, `v1`, `v1 + 2*v2`, `case(2; v1 | 0 @ v1)`, `patch(v1; 0->7; v1)`.
    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let t = p.sum()?;
        p.skip_ws();
        if p.pos != s.len() {
            return p.error("unexpected trailing input");
        }
        Ok(t)
    }
}

/// Random term of rank at most `rank` with small constants.
pub fn random_term(rng: &mut impl Rng, rank: u32, depth: u32) -> SymbolicTerm {
    let leaf = |rng: &mut dyn rand::RngCore| {
        if rank > 0 && rng.gen_bool(0.6) {
            Var(rng.gen_range(1..=rank))
        } else {
            Const(rng.gen_range(0..6))
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..7) {
        0 | 1 => leaf(rng),
        2 | 3 => SymbolicTerm::sum(random_term(rng, rank, depth - 1), random_term(rng, rank, depth - 1)),
        4 => SymbolicTerm::scale(rng.gen_range(0..4), random_term(rng, rank, depth - 1)),
        5 if rank > 0 => {
            let p = rng.gen_range(1..4);
            ResidueCase {
                modulus: p,
                level: rng.gen_range(1..=rank),
                branches: (0..p).map(|_| random_term(rng, rank, depth - 1)).collect(),
            }
        }
        6 if rank > 0 => Patch {
            level: rng.gen_range(1..=rank),
            overrides: (0..rng.gen_range(1..3))
                .map(|_| (rng.gen_range(0..6), random_term(rng, rank, depth - 1)))
                .collect(),
            default: Box::new(random_term(rng, rank, depth - 1)),
        },
        _ => leaf(rng),
    }
}
