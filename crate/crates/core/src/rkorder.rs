//! Rudin–Keisler comparisons between representable ultrafilters, and export
//! of the linear order of `∏_u (ω, ≤)` on finite samples of terms.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::epfunc::{EPFunction, Piece};
use crate::error::{Error, Result};
use crate::terms::{term_compare, term_eval, term_rank, SymbolicTerm};
use crate::ultrafilter::{Agreement, RepUltrafilter};

pub const DEFAULT_BOUND: u64 = 720;

/// The map `n ↦ t(n)` of a term of rank at most 1.
pub fn term_to_map(t: &SymbolicTerm) -> Result<EPFunction> {
    let rank = term_rank(t);
    if rank > 1 {
        return Err(Error::RankTooHigh { rank, max: 1 });
    }
    t.validate()?;
    match t {
        SymbolicTerm::Const(c) => Ok(EPFunction::constant(*c)),
        SymbolicTerm::Var(_) => Ok(EPFunction::identity()),
        SymbolicTerm::Sum(a, b) => term_to_map(a)?.add(&term_to_map(b)?),
        SymbolicTerm::Scale(k, a) => term_to_map(a)?.scale(*k),
        SymbolicTerm::ResidueCase { modulus, branches, .. } => {
            let maps = branches.iter().map(term_to_map).collect::<Result<Vec<_>>>()?;
            EPFunction::select(*modulus, &maps)
        }
        SymbolicTerm::Patch { overrides, default, .. } => {
            let values = overrides
                .iter()
                .map(|(&n, v)| Ok((n, term_eval(v, &[n])?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            term_to_map(default)?.patch(&values)
        }
    }
}

/// Whether `f_*(v)` and `u` agree on the bounded test family.
pub fn rk_le_check(u: &RepUltrafilter, v: &RepUltrafilter, f: &EPFunction, bound: u64) -> Result<bool> {
    Ok(matches!(v.pushforward(f)?.equal_bounded(u, bound)?, Agreement::EqualUpTo(_)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RKVerdict {
    Equivalent,
    /// `g_*(f_*(u)) = u` failed at the bound.
    BackwardFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RKWitness {
    pub forward: String,
    pub backward: String,
    pub base: String,
    pub image: String,
    pub bound: u64,
    pub verdict: RKVerdict,
}

/// Certifies `f_*(u) ≈_RK u` for an injective `f` using its left inverse.
pub fn rk_equiv_injective(f: &EPFunction, u: &RepUltrafilter, bound: u64) -> Result<RKWitness> {
    let g = f.left_inverse()?;
    let v = u.pushforward(f)?;
    let forward = rk_le_check(&v, u, f, bound)?;
    let backward = rk_le_check(u, &v, &g, bound)?;
    debug_assert!(forward);
    Ok(RKWitness {
        forward: f.to_string(),
        backward: g.to_string(),
        base: u.to_string(),
        image: v.to_string(),
        bound,
        verdict: if forward && backward { RKVerdict::Equivalent } else { RKVerdict::BackwardFailed },
    })
}

/// A random injective map with period ≤ 4 and slopes in `1..=3`.
pub fn random_injective(rng: &mut impl Rng) -> EPFunction {
    loop {
        let period = rng.gen_range(1..=4u64);
        let pieces = (0..period)
            .map(|_| Piece::new(rng.gen_range(1..=3), rng.gen_range(0..8), 1).expect("valid piece"))
            .collect();
        let prefix: Vec<u64> = (0..rng.gen_range(0..3)).map(|_| rng.gen_range(0..30)).collect();
        let Ok(f) = EPFunction::new(prefix.len() as u64, period, pieces, prefix) else {
            continue;
        };
        if f.check_injective().is_ok() {
            return f;
        }
    }
}

/// A random map with period ≤ 3, slopes in `0..=2`.
pub fn random_map(rng: &mut impl Rng) -> EPFunction {
    let period = rng.gen_range(1..=3u64);
    let pieces = (0..period)
        .map(|_| Piece::new(rng.gen_range(0..=2), rng.gen_range(0..6), 1).expect("valid piece"))
        .collect();
    EPFunction::new(0, period, pieces, vec![]).expect("valid map")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

/// Groups of `u`-equal terms in increasing order.
pub fn order_groups(terms: &[SymbolicTerm], u: &RepUltrafilter, k: u32) -> Result<Vec<Vec<SymbolicTerm>>> {
    let mut groups: Vec<Vec<SymbolicTerm>> = Vec::new();
    for t in terms {
        let (mut lo, mut hi) = (0, groups.len());
        let mut found = None;
        while lo < hi {
            let mid = (lo + hi) / 2;
            match term_compare(t, &groups[mid][0], u, k)? {
                Ordering::Less => hi = mid,
                Ordering::Greater => lo = mid + 1,
                Ordering::Equal => {
                    found = Some(mid);
                    break;
                }
            }
        }
        match found {
            Some(i) if !groups[i].contains(t) => groups[i].push(t.clone()),
            Some(_) => {}
            None => groups.insert(lo, vec![t.clone()]),
        }
    }
    Ok(groups)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// The sampled chain as a DOT digraph or a JSON list of groups.
pub fn order_export(terms: &[SymbolicTerm], u: &RepUltrafilter, k: u32, format: ExportFormat) -> Result<String> {
    let groups = order_groups(terms, u, k)?;
    let labels: Vec<Vec<String>> = groups.iter().map(|g| g.iter().map(ToString::to_string).collect()).collect();
    Ok(match format {
        ExportFormat::Json => serde_json::to_string_pretty(&json!(labels)).expect("serializable"),
        ExportFormat::Dot => {
            let mut out = format!("digraph order {{\n  rankdir=LR;\n  label=\"{}\";\n", escape(&u.to_string()));
            for (i, g) in labels.iter().enumerate() {
                out.push_str(&format!("  n{i} [label=\"{}\"];\n", escape(&g.join(" = "))));
            }
            for i in 1..labels.len() {
                out.push_str(&format!("  n{} -> n{i};\n", i - 1));
            }
            out.push_str("}\n");
            out
        }
    })
}

/// Structural check of an exported document: the groups form one chain
/// visiting every node once, with no cycles. Returns the number of nodes.
pub fn check_export(document: &str, format: ExportFormat) -> Result<usize> {
    match format {
        ExportFormat::Json => {
            let groups: Value = serde_json::from_str(document).map_err(|e| Error::malformed(e.to_string()))?;
            let groups = groups.as_array().ok_or_else(|| Error::malformed("expected a list of groups"))?;
            if groups.iter().any(|g| g.as_array().is_none_or(Vec::is_empty)) {
                return Err(Error::malformed("empty or malformed group"));
            }
            Ok(groups.len())
        }
        ExportFormat::Dot => {
            let mut nodes = 0usize;
            let mut next: BTreeMap<usize, usize> = BTreeMap::new();
            let mut indegree: BTreeMap<usize, usize> = BTreeMap::new();
            let node = |s: &str| -> Result<usize> {
                s.trim()
                    .trim_start_matches('n')
                    .parse()
                    .map_err(|_| Error::malformed(format!("bad node {s}")))
            };
            for line in document.lines().map(str::trim) {
                if line.starts_with('n') && line.contains("[label=") {
                    nodes += 1;
                } else if let Some((a, b)) = line.trim_end_matches(';').split_once("->") {
                    let (a, b) = (node(a)?, node(b)?);
                    if next.insert(a, b).is_some() {
                        return Err(Error::malformed(format!("node n{a} has two successors")));
                    }
                    *indegree.entry(b).or_default() += 1;
                }
            }
            if indegree.values().any(|&d| d > 1) {
                return Err(Error::malformed("node with two predecessors"));
            }
            let starts: Vec<usize> = (0..nodes).filter(|i| !indegree.contains_key(i)).collect();
            if nodes > 0 && starts.len() != 1 {
                return Err(Error::malformed("not a single chain"));
            }
            let mut seen = 0;
            let mut cur = starts.first().copied();
            while let Some(c) = cur {
                seen += 1;
                if seen > nodes {
                    return Err(Error::malformed("cycle"));
                }
                cur = next.get(&c).copied();
            }
            if seen != nodes {
                return Err(Error::malformed("chain misses nodes"));
            }
            Ok(nodes)
        }
    }
}
