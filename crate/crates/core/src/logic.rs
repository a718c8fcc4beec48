//! Finite first-order structures, formulas, ultrapowers over finite index sets
//! and the Łoś comparison between quotient and index-set evaluation.
//!
//! Tuples index tables in big-endian mixed radix, so table order is the
//! lexicographic order of tuples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TUPLE_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub relations: BTreeMap<String, usize>,
    pub functions: BTreeMap<String, usize>,
    pub constants: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct RelationTable {
    arity: usize,
    holds: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct FunctionTable {
    arity: usize,
    values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    size: usize,
    relations: BTreeMap<String, RelationTable>,
    functions: BTreeMap<String, FunctionTable>,
    constants: BTreeMap<String, usize>,
}

fn table_len(size: usize, arity: usize) -> Result<usize> {
    u32::try_from(arity)
        .ok()
        .and_then(|a| size.checked_pow(a))
        .filter(|&n| n <= TUPLE_CAP)
        .ok_or(Error::ValueOverflow("table size"))
}

fn tuple_index(size: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &x| acc * size + x)
}

/// Decodes a table index back into a tuple.
pub fn index_tuple(size: usize, arity: usize, mut index: usize) -> Vec<usize> {
    let mut tuple = vec![0; arity];
    for slot in tuple.iter_mut().rev() {
        *slot = index % size;
        index /= size;
    }
    tuple
}

fn check_name(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok = matches!(name, "<" | "<=")
        || (chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
            && !is_variable(name)
            && !matches!(name, "forall" | "exists"));
    if ok {
        Ok(())
    } else {
        Err(Error::malformed(format!("bad symbol name {name:?}")))
    }
}

impl FiniteStructure {
    /// A structure with no symbols.
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::malformed("empty universe"));
        }
        Ok(FiniteStructure {
            size,
            relations: BTreeMap::new(),
            functions: BTreeMap::new(),
            constants: BTreeMap::new(),
        })
    }

    /// Adds a relation given by its full truth table.
    pub fn with_relation(mut self, name: &str, arity: usize, holds: Vec<bool>) -> Result<Self> {
        check_name(name)?;
        if arity == 0 || holds.len() != table_len(self.size, arity)? {
            return Err(Error::ArityMismatch(format!("relation {name}")));
        }
        self.relations.insert(name.to_string(), RelationTable { arity, holds });
        Ok(self)
    }

    pub fn with_relation_fn(self, name: &str, arity: usize, f: impl Fn(&[usize]) -> bool) -> Result<Self> {
        let n = table_len(self.size, arity)?;
        let holds = (0..n).map(|i| f(&index_tuple(self.size, arity, i))).collect();
        self.with_relation(name, arity, holds)
    }

    pub fn with_function(mut self, name: &str, arity: usize, values: Vec<usize>) -> Result<Self> {
        check_name(name)?;
        if arity == 0 || values.len() != table_len(self.size, arity)? {
            return Err(Error::ArityMismatch(format!("function {name}")));
        }
        if values.iter().any(|&v| v >= self.size) {
            return Err(Error::malformed(format!("function {name} leaves the universe")));
        }
        self.functions.insert(name.to_string(), FunctionTable { arity, values });
        Ok(self)
    }

    pub fn with_constant(mut self, name: &str, value: usize) -> Result<Self> {
        check_name(name)?;
        if value >= self.size {
            return Err(Error::malformed(format!("constant {name} leaves the universe")));
        }
        self.constants.insert(name.to_string(), value);
        Ok(self)
    }

    /// The finite linear order `0 ≤ 1 ≤ … ≤ n−1` with relations `<=` and `<`.
    pub fn linear_order(size: usize) -> Result<Self> {
        FiniteStructure::new(size)?
            .with_relation_fn("<=", 2, |t| t[0] <= t[1])?
            .with_relation_fn("<", 2, |t| t[0] < t[1])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn signature(&self) -> Signature {
        Signature {
            relations: self.relations.iter().map(|(k, r)| (k.clone(), r.arity)).collect(),
            functions: self.functions.iter().map(|(k, f)| (k.clone(), f.arity)).collect(),
            constants: self.constants.keys().cloned().collect(),
        }
    }

    pub fn relation(&self, name: &str, tuple: &[usize]) -> Option<bool> {
        let r = self.relations.get(name)?;
        (r.arity == tuple.len()).then(|| r.holds[tuple_index(self.size, tuple)])
    }

    pub fn function(&self, name: &str, tuple: &[usize]) -> Option<usize> {
        let f = self.functions.get(name)?;
        (f.arity == tuple.len()).then(|| f.values[tuple_index(self.size, tuple)])
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.constants.get(name).copied()
    }

    /// True iff `map` (indexed by elements of `self`) preserves every
    /// relation, function and constant into `target`.
    pub fn is_homomorphism(&self, target: &FiniteStructure, map: &[usize]) -> bool {
        if map.len() != self.size || self.signature() != target.signature() {
            return false;
        }
        let image = |t: &[usize]| t.iter().map(|&x| map[x]).collect::<Vec<_>>();
        let relations_ok = self.relations.iter().all(|(name, r)| {
            (0..r.holds.len()).all(|i| {
                let t = index_tuple(self.size, r.arity, i);
                !r.holds[i] || target.relation(name, &image(&t)) == Some(true)
            })
        });
        let functions_ok = self.functions.iter().all(|(name, f)| {
            (0..f.values.len()).all(|i| {
                let t = index_tuple(self.size, f.arity, i);
                target.function(name, &image(&t)) == Some(map[f.values[i]])
            })
        });
        let constants_ok = self
            .constants
            .iter()
            .all(|(name, &c)| target.constant(name) == Some(map[c]));
        relations_ok && functions_ok && constants_ok
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(StructureJson::from(self)).expect("structure serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: StructureJson =
            serde_json::from_str(text).map_err(|e| Error::malformed(format!("structure JSON: {e}")))?;
        raw.try_into()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RelationJson {
    arity: usize,
    tuples: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FunctionJson {
    arity: usize,
    values: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StructureJson {
    size: usize,
    #[serde(default)]
    relations: BTreeMap<String, RelationJson>,
    #[serde(default)]
    functions: BTreeMap<String, FunctionJson>,
    #[serde(default)]
    constants: BTreeMap<String, usize>,
}

impl From<&FiniteStructure> for StructureJson {
    fn from(m: &FiniteStructure) -> Self {
        StructureJson {
            size: m.size,
            relations: m
                .relations
                .iter()
                .map(|(k, r)| {
                    let tuples = (0..r.holds.len())
                        .filter(|&i| r.holds[i])
                        .map(|i| index_tuple(m.size, r.arity, i))
                        .collect();
                    (k.clone(), RelationJson { arity: r.arity, tuples })
                })
                .collect(),
            functions: m
                .functions
                .iter()
                .map(|(k, f)| {
                    (k.clone(), FunctionJson {
                        arity: f.arity,
                        values: f.values.clone(),
                    })
                })
                .collect(),
            constants: m.constants.clone(),
        }
    }
}

impl TryFrom<StructureJson> for FiniteStructure {
    type Error = Error;

    fn try_from(raw: StructureJson) -> Result<Self> {
        let mut m = FiniteStructure::new(raw.size)?;
        for (name, r) in raw.relations {
            let mut holds = vec![false; table_len(raw.size, r.arity)?];
            for t in &r.tuples {
                if t.len() != r.arity || t.iter().any(|&x| x >= raw.size) {
                    return Err(Error::ArityMismatch(format!("tuple {t:?} of relation {name}")));
                }
                holds[tuple_index(raw.size, t)] = true;
            }
            m = m.with_relation(&name, r.arity, holds)?;
        }
        for (name, f) in raw.functions {
            m = m.with_function(&name, f.arity, f.values)?;
        }
        for (name, c) in raw.constants {
            m = m.with_constant(&name, c)?;
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(usize),
    Const(String),
    App(String, Vec<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Rel(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(usize, Box<Formula>),
    Forall(usize, Box<Formula>),
}

fn is_variable(s: &str) -> bool {
    s.len() > 1 && s.starts_with('x') && s[1..].bytes().all(|b| b.is_ascii_digit())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "x{v}"),
            Term::Const(c) => write!(f, "{c}"),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Rel(name, args) if matches!(name.as_str(), "<" | "<=") && args.len() == 2 => {
                write!(f, "{} {name} {}", args[0], args[1])
            }
            Formula::Rel(name, args) => write!(f, "{}", Term::App(name.clone(), args.clone())),
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Not(p) => write!(f, "!({p})"),
            Formula::And(p, q) => write!(f, "({p} & {q})"),
            Formula::Or(p, q) => write!(f, "({p} | {q})"),
            Formula::Implies(p, q) => write!(f, "({p} -> {q})"),
            Formula::Exists(v, p) => write!(f, "(exists x{v}. {p})"),
            Formula::Forall(v, p) => write!(f, "(forall x{v}. {p})"),
        }
    }
}

impl Formula {
    pub fn free_vars(&self) -> BTreeSet<usize> {
        fn term_vars(t: &Term, out: &mut BTreeSet<usize>) {
            match t {
                Term::Var(v) => {
                    out.insert(*v);
                }
                Term::Const(_) => {}
                Term::App(_, args) => args.iter().for_each(|a| term_vars(a, out)),
            }
        }
        let mut out = BTreeSet::new();
        match self {
            Formula::Rel(_, args) => args.iter().for_each(|a| term_vars(a, &mut out)),
            Formula::Eq(a, b) => {
                term_vars(a, &mut out);
                term_vars(b, &mut out);
            }
            Formula::Not(p) => out = p.free_vars(),
            Formula::And(p, q) | Formula::Or(p, q) | Formula::Implies(p, q) => {
                out = p.free_vars();
                out.extend(q.free_vars());
            }
            Formula::Exists(v, p) | Formula::Forall(v, p) => {
                out = p.free_vars();
                out.remove(v);
            }
        }
        out
    }

    /// Nesting depth of quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Rel(..) | Formula::Eq(..) => 0,
            Formula::Not(p) => p.quantifier_depth(),
            Formula::And(p, q) | Formula::Or(p, q) | Formula::Implies(p, q) => {
                p.quantifier_depth().max(q.quantifier_depth())
            }
            Formula::Exists(_, p) | Formula::Forall(_, p) => 1 + p.quantifier_depth(),
        }
    }

    /// Checks every symbol against the structure's signature.
    pub fn check_signature(&self, m: &FiniteStructure) -> Result<()> {
        fn term_ok(t: &Term, m: &FiniteStructure) -> Result<()> {
            match t {
                Term::Var(_) => Ok(()),
                Term::Const(c) => m
                    .constant(c)
                    .map(|_| ())
                    .ok_or_else(|| Error::ArityMismatch(format!("unknown constant {c}"))),
                Term::App(name, args) => match m.functions.get(name) {
                    Some(f) if f.arity == args.len() => args.iter().try_for_each(|a| term_ok(a, m)),
                    Some(f) => Err(Error::ArityMismatch(format!(
                        "{name} takes {} arguments, got {}",
                        f.arity,
                        args.len()
                    ))),
                    None => Err(Error::ArityMismatch(format!("unknown function {name}"))),
                },
            }
        }
        match self {
            Formula::Rel(name, args) => match m.relations.get(name) {
                Some(r) if r.arity == args.len() => args.iter().try_for_each(|a| term_ok(a, m)),
                Some(r) => Err(Error::ArityMismatch(format!(
                    "{name} takes {} arguments, got {}",
                    r.arity,
                    args.len()
                ))),
                None => Err(Error::ArityMismatch(format!("unknown relation {name}"))),
            },
            Formula::Eq(a, b) => term_ok(a, m).and(term_ok(b, m)),
            Formula::Not(p) => p.check_signature(m),
            Formula::And(p, q) | Formula::Or(p, q) | Formula::Implies(p, q) => {
                p.check_signature(m).and(q.check_signature(m))
            }
            Formula::Exists(_, p) | Formula::Forall(_, p) => p.check_signature(m),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
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

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            self.error(format!("expected {token:?}"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .char_indices()
            .find(|&(i, c)| !(c.is_ascii_alphanumeric() || c == '_') || (i == 0 && c.is_ascii_digit()))
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return self.error("expected identifier");
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn variable(&mut self) -> Result<usize> {
        let start = self.pos;
        let name = self.ident()?;
        if !is_variable(&name) {
            self.pos = start;
            return self.error(format!("expected variable, got {name:?}"));
        }
        name[1..].parse().or_else(|_| self.error("variable index too large"))
    }

    fn formula(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if self.eat("->") {
            let rhs = self.formula()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.conjunction()?;
        while self.eat("|") {
            lhs = Formula::Or(Box::new(lhs), Box::new(self.conjunction()?));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while self.eat("&") {
            lhs = Formula::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        self.skip_ws();
        if self.eat("!") {
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        for (word, forall) in [("forall", true), ("exists", false)] {
            let rest = &self.src[self.pos..];
            if rest.starts_with(word) && !rest[word.len()..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
                self.pos += word.len();
                let v = self.variable()?;
                self.expect(".")?;
                let body = Box::new(self.formula()?);
                return Ok(if forall { Formula::Forall(v, body) } else { Formula::Exists(v, body) });
            }
        }
        if self.eat("(") {
            let inner = self.formula()?;
            self.expect(")")?;
            return Ok(inner);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula> {
        let start = self.pos;
        let lhs = self.term()?;
        for op in ["<=", "<", "="] {
            if self.eat(op) {
                let rhs = self.term()?;
                return Ok(match op {
                    "=" => Formula::Eq(lhs, rhs),
                    _ => Formula::Rel(op.to_string(), vec![lhs, rhs]),
                });
            }
        }
        match lhs {
            Term::App(name, args) => Ok(Formula::Rel(name, args)),
            _ => {
                self.pos = start;
                self.error("expected an atomic formula")
            }
        }
    }

    fn term(&mut self) -> Result<Term> {
        let name = self.ident()?;
        if is_variable(&name) {
            return name[1..]
                .parse()
                .map(Term::Var)
                .or_else(|_| self.error("variable index too large"));
        }
        if matches!(name.as_str(), "forall" | "exists") {
            return self.error(format!("unexpected keyword {name}"));
        }
        if !self.eat("(") {
            return Ok(Term::Const(name));
        }
        let mut args = vec![self.term()?];
        while self.eat(",") {
            args.push(self.term()?);
        }
        self.expect(")")?;
        Ok(Term::App(name, args))
    }
}

/// Parses a formula. Precedence from loosest: `->` (right associative),
/// `|`, `&`, `!`; a quantifier body extends as far right as possible.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser { src: text, pos: 0 };
    let phi = p.formula()?;
    p.skip_ws();
    if p.pos != text.len() {
        return p.error("unexpected trailing input");
    }
    Ok(phi)
}

impl std::str::FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_formula(s)
    }
}

fn eval_term(m: &FiniteStructure, t: &Term, asg: &[Option<usize>]) -> Result<usize> {
    match t {
        Term::Var(v) => asg.get(*v).copied().flatten().ok_or(Error::UnboundVariable(*v)),
        Term::Const(c) => m
            .constant(c)
            .ok_or_else(|| Error::ArityMismatch(format!("unknown constant {c}"))),
        Term::App(name, args) => {
            let vals = args.iter().map(|a| eval_term(m, a, asg)).collect::<Result<Vec<_>>>()?;
            m.function(name, &vals)
                .ok_or_else(|| Error::ArityMismatch(format!("bad application of {name}")))
        }
    }
}

fn eval_in(m: &FiniteStructure, phi: &Formula, asg: &mut Vec<Option<usize>>) -> Result<bool> {
    Ok(match phi {
        Formula::Rel(name, args) => {
            let vals = args.iter().map(|a| eval_term(m, a, asg)).collect::<Result<Vec<_>>>()?;
            m.relation(name, &vals)
                .ok_or_else(|| Error::ArityMismatch(format!("bad application of {name}")))?
        }
        Formula::Eq(a, b) => eval_term(m, a, asg)? == eval_term(m, b, asg)?,
        Formula::Not(p) => !eval_in(m, p, asg)?,
        Formula::And(p, q) => eval_in(m, p, asg)? && eval_in(m, q, asg)?,
        Formula::Or(p, q) => eval_in(m, p, asg)? || eval_in(m, q, asg)?,
        Formula::Implies(p, q) => !eval_in(m, p, asg)? || eval_in(m, q, asg)?,
        Formula::Exists(v, p) | Formula::Forall(v, p) => {
            let want = matches!(phi, Formula::Exists(..));
            if asg.len() <= *v {
                asg.resize(v + 1, None);
            }
            let saved = asg[*v];
            let mut result = !want;
            for x in 0..m.size {
                asg[*v] = Some(x);
                if eval_in(m, p, asg)? == want {
                    result = want;
                    break;
                }
            }
            asg[*v] = saved;
            result
        }
    })
}

/// Truth of `phi` in `m` with `xi ↦ asg[i]`.
pub fn eval_formula(m: &FiniteStructure, phi: &Formula, asg: &[usize]) -> Result<bool> {
    let mut slots: Vec<Option<usize>> = asg.iter().copied().map(Some).collect();
    eval_in(m, phi, &mut slots)
}

/// The principal ultrafilter at `point` on the index set `{0, …, size−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FinitePrincipal {
    pub size: usize,
    pub point: usize,
}

impl FinitePrincipal {
    pub fn new(size: usize, point: usize) -> Result<Self> {
        if point >= size {
            return Err(Error::malformed(format!("point {point} outside index set of size {size}")));
        }
        Ok(FinitePrincipal { size, point })
    }

    pub fn member(&self, set: &[bool]) -> bool {
        set[self.point]
    }
}

/// `M^I / a` with classes numbered by first appearance in lexicographic
/// order of functions `I → M`.
#[derive(Debug, Clone)]
pub struct Ultrapower {
    pub structure: FiniteStructure,
    /// Lexicographically least representative of each class.
    pub representatives: Vec<Vec<usize>>,
    /// The isomorphism onto the base structure, `g ↦ g(i)`.
    pub collapse: Vec<usize>,
    class_of: Vec<usize>,
    base_size: usize,
    ultrafilter: FinitePrincipal,
}

impl Ultrapower {
    pub fn class_of(&self, g: &[usize]) -> usize {
        self.class_of[tuple_index(self.base_size, g)]
    }

    pub fn ultrafilter(&self) -> FinitePrincipal {
        self.ultrafilter
    }

    pub fn base_size(&self) -> usize {
        self.base_size
    }
}

pub fn finite_ultrapower(m: &FiniteStructure, a: FinitePrincipal) -> Result<Ultrapower> {
    let n = m.size;
    let total = table_len(n, a.size)?;
    let mut class_of = vec![usize::MAX; total];
    let mut representatives: Vec<Vec<usize>> = Vec::new();
    for idx in 0..total {
        if class_of[idx] != usize::MAX {
            continue;
        }
        let g = index_tuple(n, a.size, idx);
        let c = representatives.len();
        for (jdx, slot) in class_of.iter_mut().enumerate().skip(idx) {
            if *slot == usize::MAX {
                let h = index_tuple(n, a.size, jdx);
                let agree: Vec<bool> = (0..a.size).map(|i| g[i] == h[i]).collect();
                if a.member(&agree) {
                    *slot = c;
                }
            }
        }
        representatives.push(g);
    }
    let size = representatives.len();
    let lookup = |g: &[usize]| class_of[tuple_index(n, g)];
    let coords = |classes: &[usize], i: usize| classes.iter().map(|&c| representatives[c][i]).collect::<Vec<_>>();
    let mut structure = FiniteStructure::new(size)?;
    for (name, r) in &m.relations {
        structure = structure.with_relation_fn(name, r.arity, |classes| {
            let on: Vec<bool> = (0..a.size)
                .map(|i| m.relation(name, &coords(classes, i)) == Some(true))
                .collect();
            a.member(&on)
        })?;
    }
    for (name, f) in &m.functions {
        let len = table_len(size, f.arity)?;
        let values = (0..len)
            .map(|k| {
                let classes = index_tuple(size, f.arity, k);
                let g: Vec<usize> = (0..a.size)
                    .map(|i| m.function(name, &coords(&classes, i)).expect("arity checked"))
                    .collect();
                lookup(&g)
            })
            .collect();
        structure = structure.with_function(name, f.arity, values)?;
    }
    for (name, &c) in &m.constants {
        structure = structure.with_constant(name, lookup(&vec![c; a.size]))?;
    }
    let collapse = representatives.iter().map(|g| g[a.point]).collect();
    Ok(Ultrapower {
        structure,
        representatives,
        collapse,
        class_of,
        base_size: n,
        ultrafilter: a,
    })
}

/// Compares quotient evaluation of `phi` at the classes of `gs` with
/// membership of `{i : M ⊨ phi(gs(i))}` in `a`.
pub fn los_check(
    m: &FiniteStructure,
    power: &Ultrapower,
    phi: &Formula,
    gs: &[Vec<usize>],
) -> Result<bool> {
    let a = power.ultrafilter;
    if let Some(&v) = phi.free_vars().iter().find(|&&v| v >= gs.len()) {
        return Err(Error::ArityMismatch(format!("no function supplied for x{v}")));
    }
    if gs.iter().any(|g| g.len() != a.size || g.iter().any(|&x| x >= m.size)) {
        return Err(Error::ArityMismatch(format!("functions must map {} indices into M", a.size)));
    }
    phi.check_signature(m)?;
    let classes: Vec<usize> = gs.iter().map(|g| power.class_of(g)).collect();
    let quotient = eval_formula(&power.structure, phi, &classes)?;
    let index_set = (0..a.size)
        .map(|i| {
            let point: Vec<usize> = gs.iter().map(|g| g[i]).collect();
            eval_formula(m, phi, &point)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(quotient == a.member(&index_set))
}

/// The lift `g_a ↦ (e∘g)_a` of `e: A → B`, as a map between class indices.
pub fn lift_map(e: &[usize], source: &Ultrapower, target: &Ultrapower) -> Vec<usize> {
    source
        .representatives
        .iter()
        .map(|g| target.class_of(&g.iter().map(|&x| e[x]).collect::<Vec<_>>()))
        .collect()
}

/// True iff the lift of `e` does not depend on representatives.
pub fn lift_is_well_defined(e: &[usize], source: &Ultrapower, target: &Ultrapower) -> bool {
    let lifted = lift_map(e, source, target);
    let total = source.class_of.len();
    (0..total).all(|idx| {
        let g = index_tuple(source.base_size, source.ultrafilter.size, idx);
        let eg: Vec<usize> = g.iter().map(|&x| e[x]).collect();
        target.class_of(&eg) == lifted[source.class_of[idx]]
    })
}

pub fn compose_maps(outer: &[usize], inner: &[usize]) -> Vec<usize> {
    inner.iter().map(|&x| outer[x]).collect()
}

pub fn is_injective(map: &[usize]) -> bool {
    map.iter().collect::<BTreeSet<_>>().len() == map.len()
}

pub fn is_surjective(map: &[usize], codomain: usize) -> bool {
    map.iter().collect::<BTreeSet<_>>().len() == codomain
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LawFailure {
    pub law: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LiftLawReport {
    pub checks: u64,
    pub failures: Vec<LawFailure>,
}

impl LiftLawReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Structures with one binary relation `R` on a universe of `size` elements.
pub fn binary_relation_structures(size: usize) -> Result<Vec<FiniteStructure>> {
    let cells = size * size;
    (0..1usize << cells)
        .map(|bits| {
            let holds = (0..cells).map(|i| bits >> i & 1 == 1).collect();
            FiniteStructure::new(size)?.with_relation("R", 2, holds)
        })
        .collect()
}

fn all_maps(from: usize, to: usize) -> Vec<Vec<usize>> {
    (0..to.pow(from as u32)).map(|i| index_tuple(to, from, i)).collect()
}

/// Audits the lift laws: identity, composition, well-definedness, and
/// preservation of injectivity, surjectivity and homomorphisms. Maps are
/// enumerated exhaustively between universes of size at most `max_size`;
/// `pairs` random composable pairs are drawn on top.
pub fn lift_law_audit(max_size: usize, max_index: usize, pairs: usize, seed: u64) -> Result<LiftLawReport> {
    let mut report = LiftLawReport {
        checks: 0,
        failures: Vec::new(),
    };
    let fail = |report: &mut LiftLawReport, law: &str, detail: String| {
        report.failures.push(LawFailure {
            law: law.into(),
            detail,
        })
    };
    for index_size in 1..=max_index {
        for point in 0..index_size {
            let a = FinitePrincipal::new(index_size, point)?;
            let powers: Vec<Ultrapower> = (1..=max_size)
                .map(|n| finite_ultrapower(&FiniteStructure::new(n)?, a))
                .collect::<Result<_>>()?;
            let power = |n: usize| &powers[n - 1];
            for na in 1..=max_size {
                let id: Vec<usize> = (0..na).collect();
                report.checks += 1;
                if lift_map(&id, power(na), power(na)) != (0..power(na).structure.size()).collect::<Vec<_>>() {
                    fail(&mut report, "identity", format!("|A|={na}, I={index_size}, point {point}"));
                }
                for nb in 1..=max_size {
                    for e in all_maps(na, nb) {
                        report.checks += 3;
                        let lifted = lift_map(&e, power(na), power(nb));
                        if !lift_is_well_defined(&e, power(na), power(nb)) {
                            fail(&mut report, "well-defined", format!("e={e:?}, I={index_size}"));
                        }
                        if is_injective(&e) != is_injective(&lifted) {
                            fail(&mut report, "injective", format!("e={e:?}, I={index_size}"));
                        }
                        if is_surjective(&e, nb) != is_surjective(&lifted, power(nb).structure.size()) {
                            fail(&mut report, "surjective", format!("e={e:?}, I={index_size}"));
                        }
                    }
                }
            }
            // homomorphisms between binary-relation structures of size 2
            let structures = binary_relation_structures(2.min(max_size))?;
            let lifted_structures: Vec<Ultrapower> =
                structures.iter().map(|m| finite_ultrapower(m, a)).collect::<Result<_>>()?;
            for (m, pm) in structures.iter().zip(&lifted_structures) {
                for (n, pn) in structures.iter().zip(&lifted_structures) {
                    for e in all_maps(m.size(), n.size()) {
                        report.checks += 1;
                        let lifted = lift_map(&e, pm, pn);
                        if m.is_homomorphism(n, &e) != pm.structure.is_homomorphism(&pn.structure, &lifted) {
                            fail(&mut report, "homomorphism", format!("e={e:?}, I={index_size}"));
                        }
                    }
                }
            }
            // composition on random pairs
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index_size * 31 + point) as u64);
            for _ in 0..pairs {
                let sizes: Vec<usize> = (0..3).map(|_| rng.gen_range(1..=max_size)).collect();
                let e0: Vec<usize> = (0..sizes[0]).map(|_| rng.gen_range(0..sizes[1])).collect();
                let e1: Vec<usize> = (0..sizes[1]).map(|_| rng.gen_range(0..sizes[2])).collect();
                report.checks += 1;
                let stepwise = compose_maps(
                    &lift_map(&e1, power(sizes[1]), power(sizes[2])),
                    &lift_map(&e0, power(sizes[0]), power(sizes[1])),
                );
                let direct = lift_map(&compose_maps(&e1, &e0), power(sizes[0]), power(sizes[2]));
                if stepwise != direct {
                    fail(&mut report, "composition", format!("e0={e0:?}, e1={e1:?}, I={index_size}"));
                }
            }
        }
    }
    Ok(report)
}

/// A random formula over one binary relation `R` and variables `x0`, `x1`.
pub fn random_formula(rng: &mut impl Rng, quantifiers: usize, connectives: usize) -> Formula {
    let var = |rng: &mut dyn rand::RngCore| Term::Var(rng.gen_range(0..2));
    if quantifiers == 0 && connectives == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.7) {
            Formula::Rel("R".into(), vec![var(rng), var(rng)])
        } else {
            Formula::Eq(var(rng), var(rng))
        };
    }
    let choice = rng.gen_range(0..6);
    if quantifiers > 0 && (choice < 2 || connectives == 0) {
        let body = Box::new(random_formula(rng, quantifiers - 1, connectives));
        let v = rng.gen_range(0..2);
        return if choice == 0 { Formula::Exists(v, body) } else { Formula::Forall(v, body) };
    }
    if connectives == 0 {
        return Formula::Eq(var(rng), var(rng));
    }
    let rest = connectives - 1;
    match choice % 4 {
        0 => Formula::Not(Box::new(random_formula(rng, quantifiers, rest))),
        k => {
            let split = rng.gen_range(0..=rest);
            let p = Box::new(random_formula(rng, quantifiers, split));
            let q = Box::new(random_formula(rng, quantifiers, rest - split));
            match k {
                1 => Formula::And(p, q),
                2 => Formula::Or(p, q),
                _ => Formula::Implies(p, q),
            }
        }
    }
}

/// Hand-picked formulas covering every clause shape.
pub const SWEEP_FORMULAS: &[&str] = &[
    "x0 = x0",
    "x0 = x1",
    "R(x0,x1)",
    "!R(x0,x0)",
    "R(x0,x1) & R(x1,x0)",
    "R(x0,x1) | x0 = x1",
    "R(x0,x1) -> R(x1,x0)",
    "exists x1. R(x0,x1)",
    "forall x1. R(x0,x1)",
    "forall x0. exists x1. R(x0,x1)",
    "exists x0. forall x1. R(x0,x1) | x0 = x1",
    "forall x0. forall x1. R(x0,x1) -> R(x1,x0)",
    "exists x1. (R(x0,x1) & !x0 = x1)",
    "forall x1. (R(x1,x0) -> exists x0. R(x0,x1))",
];

#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub exhaustive_size: usize,
    pub sampled_size: usize,
    pub sampled_structures: usize,
    pub max_index: usize,
    pub random_formulas: usize,
    pub max_assignments: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            exhaustive_size: 2,
            sampled_size: 3,
            sampled_structures: 200,
            max_index: 3,
            random_formulas: 40,
            max_assignments: 64,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LosFailure {
    pub structure: serde_json::Value,
    pub index: FinitePrincipal,
    pub formula: String,
    pub assignment: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub checks: u64,
    pub structures: usize,
    pub formulas: usize,
    pub failures: Vec<LosFailure>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn sweep_formulas(config: &SweepConfig) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut formulas: Vec<Formula> = SWEEP_FORMULAS
        .iter()
        .map(|s| parse_formula(s).expect("built-in formula parses"))
        .collect();
    for _ in 0..config.random_formulas {
        formulas.push(random_formula(&mut rng, 2, 3));
    }
    formulas
}

/// Runs the Łoś comparison over small structures with one binary relation,
/// every principal ultrafilter on index sets of size up to `max_index`,
/// a fixed formula list and assignments of `x0`, `x1` to functions `I → M`.
pub fn los_sweep(config: &SweepConfig) -> Result<SweepReport> {
    let mut structures = Vec::new();
    for n in 1..=config.exhaustive_size {
        structures.extend(binary_relation_structures(n)?);
    }
    if config.sampled_structures > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
        let n = config.sampled_size;
        for _ in 0..config.sampled_structures {
            let holds = (0..n * n).map(|_| rng.gen_bool(0.5)).collect();
            structures.push(FiniteStructure::new(n)?.with_relation("R", 2, holds)?);
        }
    }
    let formulas = sweep_formulas(config);
    let results: Vec<(u64, Vec<LosFailure>)> = structures
        .par_iter()
        .enumerate()
        .map(|(k, m)| -> Result<(u64, Vec<LosFailure>)> {
            let mut checks = 0;
            let mut failures = Vec::new();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (k as u64).wrapping_mul(0x9e37_79b9));
            for index_size in 1..=config.max_index {
                let functions = all_maps(index_size, m.size());
                let pairs = functions.len() * functions.len();
                let assignments: Vec<(usize, usize)> = if pairs <= config.max_assignments {
                    (0..pairs).map(|p| (p / functions.len(), p % functions.len())).collect()
                } else {
                    (0..config.max_assignments)
                        .map(|_| (rng.gen_range(0..functions.len()), rng.gen_range(0..functions.len())))
                        .collect()
                };
                for point in 0..index_size {
                    let a = FinitePrincipal::new(index_size, point)?;
                    let power = finite_ultrapower(m, a)?;
                    for phi in &formulas {
                        for &(g0, g1) in &assignments {
                            let gs = [functions[g0].clone(), functions[g1].clone()];
                            checks += 1;
                            if !los_check(m, &power, phi, &gs)? {
                                failures.push(LosFailure {
                                    structure: m.to_json(),
                                    index: a,
                                    formula: phi.to_string(),
                                    assignment: gs.to_vec(),
                                });
                            }
                        }
                    }
                }
            }
            Ok((checks, failures))
        })
        .collect::<Result<_>>()?;
    let mut report = SweepReport {
        checks: 0,
        structures: structures.len(),
        formulas: formulas.len(),
        failures: Vec::new(),
    };
    for (checks, failures) in results {
        report.checks += checks;
        report.failures.extend(failures);
    }
    Ok(report)
}
