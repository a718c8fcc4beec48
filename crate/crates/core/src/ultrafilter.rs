//! Ultrafilters on the algebra of eventually periodic sets.
//!
//! Three kinds are representable:
//!
//! * principal ultrafilters `{A : i ∈ A}`;
//! * profinite points: a coherent choice of residue `r_m` for every modulus
//!   `m`, giving the non-principal ultrafilter of sets whose eventual part
//!   contains the class `r_p` of their own period `p`;
//! * pushforwards of a profinite point along a quasi-affine map.
//!
//! Membership of a non-principal ultrafilter ignores prefixes, so every
//! cofinite set is a member and every finite set is not.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::epfunc::EPFunction;
use crate::error::{Error, Result};
use crate::limits::{check_period, lcm};
use crate::periodic::{PeriodicSet, SetClass};

/// A coherent system of residues, given by an integer or by a finite table.
///
/// A table is completed to all moduli by its least non-negative solution
/// modulo the lcm of the listed moduli; unlisted moduli take the residue of
/// that solution, which keeps the completion coherent.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ProfinitePoint {
    digits: Digits,
    anchor: Option<u128>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Digits {
    Integer(u64),
    Table(BTreeMap<u64, u64>),
}

impl ProfinitePoint {
    pub fn integer(x: u64) -> Self {
        ProfinitePoint {
            digits: Digits::Integer(x),
            anchor: Some(x as u128),
        }
    }

    /// A point given by residues at finitely many moduli. The table is not
    /// required to be coherent here; see [`ProfinitePoint::is_coherent`].
    pub fn table(table: BTreeMap<u64, u64>) -> Result<Self> {
        if table.contains_key(&0) {
            return Err(Error::malformed("modulus 0 in residue table"));
        }
        let anchor = crt(&table);
        Ok(ProfinitePoint {
            digits: Digits::Table(table),
            anchor,
        })
    }

    /// True iff `r_m ≡ r_k (mod k)` for all listed `k | m`.
    pub fn is_coherent(&self) -> bool {
        match &self.digits {
            Digits::Integer(_) => true,
            Digits::Table(t) => t.iter().all(|(&k, &rk)| {
                t.iter()
                    .filter(|(&m, _)| m % k == 0)
                    .all(|(_, &rm)| rm % k == rk % k)
            }),
        }
    }

    /// The residue chosen at modulus `m`.
    pub fn residue(&self, m: u64) -> Result<u64> {
        let anchor = self.anchor.ok_or_else(|| {
            Error::malformed(format!("residue table {self} has no common solution"))
        })?;
        Ok((anchor % m as u128) as u64)
    }
}

/// Least non-negative solution of the table's congruences, if one exists.
fn crt(table: &BTreeMap<u64, u64>) -> Option<u128> {
    let (mut x, mut modulus) = (0i128, 1i128);
    for (&m, &r) in table {
        let (m, r) = (m as i128, (r % m) as i128);
        let g = modulus.gcd(&m);
        if (r - x).rem_euclid(g) != 0 {
            return None;
        }
        let step = modulus / g;
        let target = (r - x) / g;
        let inv = mod_inverse(step.rem_euclid(m / g), m / g)?;
        let t = (target.rem_euclid(m / g) * inv).rem_euclid(m / g);
        x += modulus * t;
        modulus = modulus.checked_mul(m / g)?;
        x = x.rem_euclid(modulus);
    }
    Some(x as u128)
}

fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    if m == 1 {
        return Some(0);
    }
    let e = a.extended_gcd(&m);
    (e.gcd == 1).then(|| e.x.rem_euclid(m))
}

impl fmt::Display for ProfinitePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.digits {
            Digits::Integer(x) => write!(f, "{x}"),
            Digits::Table(t) => {
                let entries: Vec<String> = t.iter().map(|(m, r)| format!("{m}->{r}")).collect();
                write!(f, "{{{}}}", entries.join(","))
            }
        }
    }
}

impl fmt::Debug for ProfinitePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProfinitePoint({self})")
    }
}

impl FromStr for ProfinitePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
            let mut table = BTreeMap::new();
            for entry in inner.split(',').map(str::trim).filter(|e| !e.is_empty()) {
                let (m, r) = entry
                    .split_once("->")
                    .ok_or_else(|| Error::malformed(format!("expected m->r, got {entry:?}")))?;
                let num = |t: &str| {
                    t.trim()
                        .parse::<u64>()
                        .map_err(|_| Error::malformed(format!("bad number in {entry:?}")))
                };
                table.insert(num(m)?, num(r)?);
            }
            return ProfinitePoint::table(table);
        }
        s.parse::<u64>()
            .map(ProfinitePoint::integer)
            .map_err(|_| Error::malformed(format!("bad profinite point {s:?}")))
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum RepUltrafilter {
    Principal(u64),
    Profinite(ProfinitePoint),
    /// Pushforward of a profinite point along a map that is not eventually
    /// constant on the point's class.
    Mapped { base: ProfinitePoint, map: EPFunction },
}

/// Result of comparing two ultrafilters on a bounded family of sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Agreement {
    EqualUpTo(u64),
    DistinguishedBy(PeriodicSet),
}

impl RepUltrafilter {
    pub fn profinite(point: ProfinitePoint) -> Result<Self> {
        if !point.is_coherent() || point.anchor.is_none() {
            return Err(Error::malformed(format!("residue table {point} is not coherent")));
        }
        Ok(RepUltrafilter::Profinite(point))
    }

    pub fn profinite_integer(x: u64) -> Self {
        RepUltrafilter::Profinite(ProfinitePoint::integer(x))
    }

    pub fn is_principal(&self) -> bool {
        matches!(self, RepUltrafilter::Principal(_))
    }

    /// Builds the pushforward of `base` along `map`, collapsing to a principal
    /// ultrafilter when `map` is constant on the point's class and to the
    /// point itself when `map` is the identity.
    fn mapped(base: ProfinitePoint, map: EPFunction) -> Result<Self> {
        if map == EPFunction::identity() {
            return Ok(RepUltrafilter::Profinite(base));
        }
        let piece = map.piece(base.residue(map.period())?);
        if piece.slope == 0 {
            return Ok(RepUltrafilter::Principal(piece.intercept as u64));
        }
        Ok(RepUltrafilter::Mapped { base, map })
    }

    pub fn member(&self, set: &PeriodicSet) -> Result<bool> {
        match self {
            RepUltrafilter::Principal(i) => Ok(set.member(*i)),
            RepUltrafilter::Profinite(pt) => Ok(set.eventual(pt.residue(set.period())?)),
            RepUltrafilter::Mapped { base, map } => Ok(set.member(typical_image(base, map, set)?)),
        }
    }

    /// Membership through the preimage: `f~(u) ∋ A` iff `u ∋ f⁻¹(A)`.
    /// Slower than [`RepUltrafilter::member`]; kept as an independent route.
    pub fn member_via_preimage(&self, set: &PeriodicSet) -> Result<bool> {
        match self {
            RepUltrafilter::Mapped { base, map } => {
                RepUltrafilter::Profinite(base.clone()).member(&map.preimage(set)?)
            }
            other => other.member(set),
        }
    }

    pub fn pushforward(&self, f: &EPFunction) -> Result<Self> {
        match self {
            RepUltrafilter::Principal(i) => Ok(RepUltrafilter::Principal(f.try_eval(*i)?)),
            RepUltrafilter::Profinite(pt) => Self::mapped(pt.clone(), f.clone()),
            RepUltrafilter::Mapped { base, map } => Self::mapped(base.clone(), f.compose(map)?),
        }
    }

    /// The residue `r` such that `{n : n ≡ r (mod m)}` belongs to `self`.
    pub fn typical_residue(&self, m: u64) -> Result<u64> {
        match self {
            RepUltrafilter::Principal(i) => Ok(i % m),
            RepUltrafilter::Profinite(pt) => pt.residue(m),
            RepUltrafilter::Mapped { base, map } => {
                let class = PeriodicSet::residue_class(m, 0)?;
                Ok(typical_image(base, map, &class)? % m)
            }
        }
    }

    /// Compares membership on every residue class of modulus at most `bound`,
    /// on the cofinite sets `ω∖{i}` for `i ≤ bound`, then on a fixed
    /// pseudo-random sample. Agreement is evidence of equality, not proof.
    pub fn equal_bounded(&self, other: &RepUltrafilter, bound: u64) -> Result<Agreement> {
        for m in 1..=bound {
            let (a, b) = (self.typical_residue(m)?, other.typical_residue(m)?);
            if a != b {
                return Ok(Agreement::DistinguishedBy(PeriodicSet::residue_class(m, a.min(b))?));
            }
        }
        for i in 0..=bound {
            let set = PeriodicSet::finite([i])?.complement();
            if self.member(&set)? != other.member(&set)? {
                return Ok(Agreement::DistinguishedBy(set));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_u64 ^ bound);
        for _ in 0..64 {
            let set = random_set(&mut rng, bound.clamp(1, 60), 8)?;
            if self.member(&set)? != other.member(&set)? {
                return Ok(Agreement::DistinguishedBy(set));
            }
        }
        Ok(Agreement::EqualUpTo(bound))
    }

    pub fn check_axioms(&self, sample: &[PeriodicSet]) -> Result<AxiomReport> {
        let mut report = AxiomReport {
            ultrafilter: self.to_string(),
            members: Vec::new(),
            violations: Vec::new(),
            checks: 0,
        };
        let violation = |report: &mut AxiomReport, law: &str, detail: String| {
            report.violations.push(AxiomViolation {
                law: law.to_string(),
                detail,
            })
        };
        let extended: Vec<PeriodicSet> = [PeriodicSet::omega(), PeriodicSet::empty()]
            .into_iter()
            .chain(sample.iter().cloned())
            .collect();
        let memberships: Vec<bool> = extended.iter().map(|a| self.member(a)).collect::<Result<_>>()?;
        for (a, &in_u) in extended.iter().zip(&memberships).skip(2) {
            report.members.push((a.to_string(), in_u));
        }
        report.checks += 2;
        if !memberships[0] {
            violation(&mut report, "top", "ω is not a member".into());
        }
        if memberships[1] {
            violation(&mut report, "bottom", "∅ is a member".into());
        }
        for (a, &in_u) in extended.iter().zip(&memberships) {
            report.checks += 1;
            if in_u == self.member(&a.complement())? {
                violation(&mut report, "dichotomy", format!("{a} and its complement"));
            }
            if !self.is_principal() && a.classify() == SetClass::Cofinite {
                report.checks += 1;
                if !in_u {
                    violation(&mut report, "non-principal", format!("cofinite {a} is not a member"));
                }
            }
        }
        for (i, a) in extended.iter().enumerate() {
            for (j, b) in extended.iter().enumerate().skip(i + 1) {
                report.checks += 2;
                let meet = self.member(&a.intersection(b)?)?;
                if memberships[i] && memberships[j] && !meet {
                    violation(&mut report, "intersection", format!("{a} ∩ {b}"));
                }
                let join = self.member(&a.union(b)?)?;
                if (memberships[i] || memberships[j]) && !join {
                    violation(&mut report, "superset", format!("{a} ∪ {b}"));
                }
                for (x, y, in_x, in_y) in [(a, b, memberships[i], memberships[j]), (b, a, memberships[j], memberships[i])] {
                    if in_x && !in_y && x.is_subset(y)? {
                        violation(&mut report, "superset", format!("{x} ⊆ {y}"));
                    }
                }
            }
        }
        Ok(report)
    }
}

/// For `n` in the point's class and large enough, `map(n)` lies beyond the
/// threshold of `set` and its residue modulo the set's period is fixed, so
/// one sample value decides membership of the pushforward.
fn typical_image(base: &ProfinitePoint, map: &EPFunction, set: &PeriodicSet) -> Result<u64> {
    let piece = map.piece(base.residue(map.period())?);
    if piece.slope == 0 {
        return Ok(piece.intercept as u64);
    }
    let stride = check_period(set.period() as u128 * piece.denom as u128)?;
    let period = lcm(map.period(), stride)?;
    let r = base.residue(period)?;
    let need = set.threshold() as i128 * piece.denom as i128 - piece.intercept as i128;
    let start = (map.threshold() as i128).max(Integer::div_ceil(&need, &(piece.slope as i128))).max(0) as u64;
    let n = start + (r + period - start % period) % period;
    map.try_eval(n)
}

/// A random set with period in `1..=max_period` and a prefix of length below `max_prefix`.
pub fn random_set(rng: &mut impl Rng, max_period: u64, max_prefix: u64) -> Result<PeriodicSet> {
    let period = rng.gen_range(1..=max_period);
    let residues: Vec<u64> = (0..period).filter(|_| rng.gen_bool(0.5)).collect();
    let len = rng.gen_range(0..max_prefix);
    let prefix = (0..len).map(|_| rng.gen_bool(0.5)).collect();
    PeriodicSet::new(len, period, residues, prefix)
}

/// Every set with threshold 0 and period at most `max_period`, each once.
pub fn canonical_sets(max_period: u64) -> Result<Vec<PeriodicSet>> {
    let mut out = BTreeSet::new();
    for p in 1..=max_period {
        for mask in 0..1u64 << p {
            let residues: Vec<u64> = (0..p).filter(|r| mask >> r & 1 == 1).collect();
            out.insert(PeriodicSet::new(0, p, residues, vec![])?);
        }
    }
    Ok(out.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomSuiteReport {
    pub ultrafilter: String,
    pub dichotomy_sets: usize,
    pub closure_sets: usize,
    pub checks: u64,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomSuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Dichotomy over every canonical set of period ≤ `max_period` plus
/// `random` prefixed sets, membership of their cofinite members, and the
/// pairwise laws of [`RepUltrafilter::check_axioms`] on `closure` of them.
pub fn axiom_suite(u: &RepUltrafilter, max_period: u64, random: usize, closure: usize, seed: u64) -> Result<AxiomSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sets = canonical_sets(max_period)?;
    for _ in 0..random {
        sets.push(random_set(&mut rng, 12, 10)?);
    }
    let mut report = AxiomSuiteReport {
        ultrafilter: u.to_string(),
        dichotomy_sets: sets.len(),
        closure_sets: closure,
        checks: 0,
        violations: vec![],
    };
    for a in &sets {
        report.checks += 1;
        let in_u = u.member(a)?;
        if in_u == u.member(&a.complement())? {
            report.violations.push(AxiomViolation {
                law: "dichotomy".into(),
                detail: format!("{a} and its complement"),
            });
        }
        if !u.is_principal() && a.classify() == SetClass::Cofinite && !in_u {
            report.violations.push(AxiomViolation {
                law: "non-principal".into(),
                detail: format!("cofinite {a} is not a member"),
            });
        }
    }
    let mut sample: Vec<PeriodicSet> = (0..closure / 2).map(|_| sets[rng.gen_range(0..sets.len())].clone()).collect();
    while sample.len() < closure {
        sample.push(random_set(&mut rng, 12, 10)?);
    }
    let pairwise = u.check_axioms(&sample)?;
    report.checks += pairwise.checks;
    report.violations.extend(pairwise.violations);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomViolation {
    pub law: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub ultrafilter: String,
    pub members: Vec<(String, bool)>,
    pub violations: Vec<AxiomViolation>,
    pub checks: u64,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for RepUltrafilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepUltrafilter::Principal(i) => write!(f, "principal:{i}"),
            RepUltrafilter::Profinite(pt) => write!(f, "profinite:{pt}"),
            RepUltrafilter::Mapped { base, map } => write!(f, "mapped:(profinite:{base}; {map})"),
        }
    }
}

impl fmt::Debug for RepUltrafilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RepUltrafilter({self})")
    }
}

impl FromStr for RepUltrafilter {
    type Err = Error;

    /// Parses `principal:7`, `profinite:0`, `profinite:{2->1,6->5}` and
    /// `mapped:(<ultrafilter>; <map>)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("principal:") {
            return rest
                .trim()
                .parse()
                .map(RepUltrafilter::Principal)
                .map_err(|_| Error::malformed(format!("bad principal point in {s:?}")));
        }
        if let Some(rest) = s.strip_prefix("profinite:") {
            return RepUltrafilter::profinite(rest.parse()?);
        }
        if let Some(rest) = s.strip_prefix("mapped:") {
            let inner = rest
                .trim()
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| Error::malformed(format!("expected mapped:(u; f), got {s:?}")))?;
            let (base, map) = inner
                .rsplit_once(';')
                .ok_or_else(|| Error::malformed(format!("expected mapped:(u; f), got {s:?}")))?;
            let base: RepUltrafilter = base.parse()?;
            return base.pushforward(&map.parse()?);
        }
        Err(Error::malformed(format!("unknown ultrafilter {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn axiom_suite_on_pushforwards() {
        use super::*;
        assert_eq!(canonical_sets(3).unwrap().len(), 2 + 2 + 6);
        let u = RepUltrafilter::profinite_integer(0);
        for f in [EPFunction::identity(), EPFunction::double(), EPFunction::successor()] {
            let v = u.pushforward(&f).unwrap();
            let r = axiom_suite(&v, 8, 50, 20, 1).unwrap();
            assert!(r.passed(), "{:?}", r.violations);
        }
        assert!(axiom_suite(&RepUltrafilter::Principal(4), 6, 10, 10, 2).unwrap().passed());
    }

    use super::*;

    fn uf(s: &str) -> RepUltrafilter {
        s.parse().unwrap()
    }

    #[test]
    fn membership_examples() {
        let u0 = RepUltrafilter::profinite_integer(0);
        for k in 1..50 {
            assert!(u0.member(&PeriodicSet::multiples(k).unwrap()).unwrap());
        }
        assert!(!u0.member(&PeriodicSet::finite([0, 1, 2, 3]).unwrap()).unwrap());
        let evens = PeriodicSet::multiples(2).unwrap();
        assert!(RepUltrafilter::Principal(4).member(&evens).unwrap());
    }

    #[test]
    fn pushforward_examples() {
        let u0 = RepUltrafilter::profinite_integer(0);
        assert_eq!(u0.pushforward(&EPFunction::identity()).unwrap(), u0);
        assert_eq!(u0.pushforward(&EPFunction::constant(3)).unwrap(), RepUltrafilter::Principal(3));
        let doubled = u0.pushforward(&EPFunction::double()).unwrap();
        let fours = PeriodicSet::multiples(4).unwrap();
        assert!(doubled.member(&fours).unwrap());
        assert!(doubled.member_via_preimage(&fours).unwrap());
        assert_eq!(EPFunction::double().preimage(&fours).unwrap(), PeriodicSet::multiples(2).unwrap());
    }

    #[test]
    fn flat_class_collapses_to_principal() {
        // constant 7 on evens, identity on odds; profinite:0 sits in the evens
        let f: EPFunction = "0:2:[(0,7),(1,0)]:".parse().unwrap();
        assert_eq!(
            RepUltrafilter::profinite_integer(0).pushforward(&f).unwrap(),
            RepUltrafilter::Principal(7)
        );
        assert!(matches!(
            RepUltrafilter::profinite_integer(1).pushforward(&f).unwrap(),
            RepUltrafilter::Mapped { .. }
        ));
    }

    #[test]
    fn axiom_examples() {
        let u0 = RepUltrafilter::profinite_integer(0);
        let evens = PeriodicSet::multiples(2).unwrap();
        let odds = evens.complement();
        let report = u0.check_axioms(&[evens.clone(), odds.clone()]).unwrap();
        assert!(report.passed());
        assert_eq!(report.members, vec![(evens.to_string(), true), (odds.to_string(), false)]);
        let report = RepUltrafilter::Principal(2).check_axioms(std::slice::from_ref(&evens)).unwrap();
        assert!(report.passed());
        assert_eq!(report.members, vec![(evens.to_string(), true)]);
        let report = u0.check_axioms(&[PeriodicSet::omega(), PeriodicSet::empty()]).unwrap();
        assert!(report.passed());
        assert_eq!(
            report.members,
            vec![("0:1:{0}:".to_string(), true), ("0:1:{}:".to_string(), false)]
        );
    }

    #[test]
    fn bounded_equality_examples() {
        let u0 = RepUltrafilter::profinite_integer(0);
        assert_eq!(u0.equal_bounded(&u0, 100).unwrap(), Agreement::EqualUpTo(100));
        assert_eq!(
            u0.equal_bounded(&RepUltrafilter::profinite_integer(1), 2).unwrap(),
            Agreement::DistinguishedBy(PeriodicSet::multiples(2).unwrap())
        );
        assert_eq!(
            u0.equal_bounded(&RepUltrafilter::Principal(0), 2).unwrap(),
            Agreement::DistinguishedBy(PeriodicSet::finite([0]).unwrap().complement())
        );
    }

    #[test]
    fn coherence_examples() {
        let t = |s: &str| s.parse::<ProfinitePoint>().unwrap();
        assert!(t("{2->1,4->3}").is_coherent());
        assert!(!t("{2->1,4->2}").is_coherent());
        assert!(ProfinitePoint::integer(7).is_coherent());
        assert!("profinite:{2->1,4->2}".parse::<RepUltrafilter>().is_err());
        // coherent by divisibility, but 4 and 6 disagree modulo 2
        assert!("profinite:{4->1,6->0}".parse::<RepUltrafilter>().is_err());
    }

    #[test]
    fn tables_complete_coherently() {
        let pt: ProfinitePoint = "{2->1,6->5,5->3}".parse().unwrap();
        for m in 1..=60 {
            for k in 1..=m {
                if m % k == 0 {
                    assert_eq!(pt.residue(m).unwrap() % k, pt.residue(k).unwrap());
                }
            }
        }
        assert_eq!(pt.residue(6).unwrap(), 5);
        assert_eq!(pt.residue(5).unwrap(), 3);
    }

    #[test]
    fn text_forms() {
        for s in [
            "principal:7",
            "profinite:0",
            "profinite:{2->1,6->5}",
            "mapped:(profinite:0; 0:1:[(2,0)]:)",
        ] {
            assert_eq!(uf(s).to_string(), s);
        }
        assert_eq!(
            uf("mapped:(mapped:(profinite:0; 0:1:[(2,0)]:); 0:1:[(1,1)]:)"),
            uf("mapped:(profinite:0; 0:1:[(2,1)]:)")
        );
        assert!("nonsense:1".parse::<RepUltrafilter>().is_err());
    }

    fn arb_uf() -> impl proptest::strategy::Strategy<Value = RepUltrafilter> {
        use proptest::prelude::*;
        (0u64..30, 1u64..4, 0i64..5, 1u64..3).prop_map(|(x, a, b, p)| {
            let pieces = (0..p)
                .map(|r| crate::epfunc::Piece::new(a * p, b + r as i64, 1).unwrap())
                .collect();
            let f = EPFunction::new(0, p, pieces, vec![]).unwrap();
            RepUltrafilter::profinite_integer(x).pushforward(&f).unwrap()
        })
    }

    proptest::proptest! {
        #[test]
        fn dichotomy_and_filter_laws(u in arb_uf(), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sample: Vec<PeriodicSet> = (0..6).map(|_| random_set(&mut rng, 12, 6).unwrap()).collect();
            let report = u.check_axioms(&sample).unwrap();
            proptest::prop_assert!(report.passed(), "{:?}", report.violations);
            for a in &sample {
                proptest::prop_assert_eq!(u.member(a).unwrap(), u.member_via_preimage(a).unwrap());
            }
        }

        #[test]
        fn pushforward_is_functorial(x in 0u64..20, a in 1u64..4, b in 0i64..4, c in 1u64..3, d in 0i64..4) {
            let u = RepUltrafilter::profinite_integer(x);
            let f = EPFunction::affine(a, b).unwrap();
            let g: EPFunction = format!("0:2:[({c},{d}),({},{d})]:", c + 1).parse().unwrap();
            let stepwise = u.pushforward(&g).unwrap().pushforward(&f).unwrap();
            let composed = u.pushforward(&f.compose(&g).unwrap()).unwrap();
            proptest::prop_assert_eq!(stepwise.equal_bounded(&composed, 64).unwrap(), Agreement::EqualUpTo(64));
        }
    }
}
