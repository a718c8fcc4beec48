//! Transfinite direct systems of iterated ultrapowers and their audits.
//!
//! Two carriers are supported. On the symbolic carrier `(ω, ≤)` with a
//! profinite ultrafilter, elements are [`StagedTerm`]s: a linear term whose
//! levels are named by [`Label`]s of the stage. On a finite carrier with a
//! principal index ultrafilter every stage is an explicit finite structure.
//!
//! Labels at a stage `α`:
//!
//! * finite `k`: `Succ(1) < … < Succ(k)`, with `Succ(k)` the outermost level;
//! * `μ + j` with `μ` a limit: `Depth(μ, d)` for every `d` (larger `d` is
//!   further inside), below `Succ(μ+1) < … < Succ(μ+j)`.
//!
//! Embeddings act on labels only; the term body is never rewritten.

use std::cell::RefCell;
use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::logic::{finite_ultrapower, index_tuple, FinitePrincipal, FiniteStructure, Ultrapower};
use crate::ordinal::SmallOrdinal;
use crate::periodic::PeriodicSet;
use crate::terms::{
    embed_diagonal, map_levels, normalize, random_term, term_compare, term_levels, term_rank, verdict_sets,
    SymbolicTerm, Substitution,
};
use crate::ultrafilter::RepUltrafilter;

pub const DEFAULT_STAGE_CAP: SmallOrdinal = SmallOrdinal::new(2, 8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    /// The outermost level created at a successor stage.
    Succ(SmallOrdinal),
    /// A level of the direct limit at `limit`, `depth` steps below the outermost one.
    Depth { limit: SmallOrdinal, depth: u64 },
}

impl Label {
    fn key(&self) -> (SmallOrdinal, u8, Reverse<u64>) {
        match *self {
            Label::Succ(s) => (s, 1, Reverse(0)),
            Label::Depth { limit, depth } => (limit, 0, Reverse(depth)),
        }
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Succ(s) => write!(f, "S({s})"),
            Label::Depth { limit, depth } => write!(f, "D({limit},{depth})"),
        }
    }
}

/// An element of a stage of the symbolic system: level `i` of `term` is
/// the label `frame[i − 1]`. Frames are strictly increasing and list only
/// the levels the term uses.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StagedTerm {
    stage: SmallOrdinal,
    frame: Vec<Label>,
    term: SymbolicTerm,
}

impl StagedTerm {
    pub fn new(stage: SmallOrdinal, frame: Vec<Label>, term: SymbolicTerm) -> Result<Self> {
        term.validate()?;
        if frame.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::malformed("frame labels must be strictly increasing"));
        }
        let rank = term_rank(&term);
        if rank as usize > frame.len() {
            return Err(Error::RankTooHigh {
                rank,
                max: frame.len() as u32,
            });
        }
        let term = normalize(&term)?;
        let used: Vec<u32> = term_levels(&term).into_iter().collect();
        let position: BTreeMap<u32, u32> = used.iter().enumerate().map(|(i, &l)| (l, i as u32 + 1)).collect();
        Ok(StagedTerm {
            stage,
            frame: used.iter().map(|&l| frame[l as usize - 1]).collect(),
            term: map_levels(&term, &|l| position[&l]),
        })
    }

    pub fn constant(stage: SmallOrdinal, value: u64) -> Self {
        StagedTerm {
            stage,
            frame: vec![],
            term: SymbolicTerm::Const(value),
        }
    }

    /// A term at finite stage `k`, level `l` read as `Succ(l)`.
    pub fn finite(k: u64, term: SymbolicTerm) -> Result<Self> {
        let frame = (1..=k).map(|l| Label::Succ(SmallOrdinal::finite(l))).collect();
        StagedTerm::new(SmallOrdinal::finite(k), frame, term)
    }

    pub fn stage(&self) -> SmallOrdinal {
        self.stage
    }

    pub fn frame(&self) -> &[Label] {
        &self.frame
    }

    pub fn term(&self) -> &SymbolicTerm {
        &self.term
    }

    /// The term over levels `1..=k` at a finite stage `k`.
    pub fn finite_term(&self) -> Option<SymbolicTerm> {
        let mut levels = Vec::new();
        for l in &self.frame {
            match l {
                Label::Succ(s) => levels.push(s.as_finite()? as u32),
                Label::Depth { .. } => return None,
            }
        }
        self.stage.as_finite()?;
        Some(map_levels(&self.term, &|l| levels[l as usize - 1]))
    }

    fn with_stage(&self, stage: SmallOrdinal, frame: Vec<Label>) -> Self {
        StagedTerm {
            stage,
            frame,
            term: self.term.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "stage": self.stage.to_string(),
            "frame": self.frame.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "term": self.term.to_string(),
        })
    }
}

impl fmt::Display for StagedTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = self.finite_term() {
            return write!(f, "{t} @ {}", self.stage);
        }
        let labels: Vec<String> = self.frame.iter().map(ToString::to_string).collect();
        write!(f, "{} @ {} [{}]", self.term, self.stage, labels.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Successor embeddings are lifts of earlier embeddings.
    Skew,
    /// Every successor embedding is the diagonal one.
    Diagonal,
}

/// The direct system over `(ω, ≤)` and a profinite ultrafilter, up to `alpha`.
#[derive(Debug, Clone)]
pub struct OmegaSystem {
    u: RepUltrafilter,
    alpha: SmallOrdinal,
    variant: Variant,
}

fn check_cap(alpha: SmallOrdinal, cap: SmallOrdinal) -> Result<()> {
    if alpha > cap {
        return Err(Error::StageCapExceeded { stage: alpha, cap });
    }
    Ok(())
}

impl OmegaSystem {
    pub fn new(u: RepUltrafilter, alpha: SmallOrdinal, cap: SmallOrdinal, variant: Variant) -> Result<Self> {
        if !matches!(u, RepUltrafilter::Profinite(_)) {
            return Err(Error::Unsupported(format!("the symbolic carrier needs a profinite ultrafilter, got {u}")));
        }
        check_cap(alpha, cap)?;
        Ok(OmegaSystem { u, alpha, variant })
    }

    pub fn skew(u: RepUltrafilter, alpha: SmallOrdinal) -> Result<Self> {
        OmegaSystem::new(u, alpha, DEFAULT_STAGE_CAP, Variant::Skew)
    }

    pub fn ultrafilter(&self) -> &RepUltrafilter {
        &self.u
    }

    pub fn alpha(&self) -> SmallOrdinal {
        self.alpha
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn label_valid(&self, stage: SmallOrdinal, label: Label) -> bool {
        match (self.variant, label) {
            (Variant::Diagonal, Label::Succ(s)) => s.is_successor() && s <= stage,
            (Variant::Diagonal, Label::Depth { .. }) => false,
            (Variant::Skew, Label::Succ(s)) => {
                s.limit_part() == stage.limit_part() && s.finite_part >= 1 && s.finite_part <= stage.finite_part
            }
            (Variant::Skew, Label::Depth { limit, .. }) => limit.is_limit() && limit == stage.limit_part(),
        }
    }

    fn check_stage(&self, stage: SmallOrdinal) -> Result<()> {
        check_cap(stage, self.alpha)
    }

    pub fn validate(&self, x: &StagedTerm) -> Result<()> {
        self.check_stage(x.stage)?;
        if let Some(l) = x.frame.iter().find(|&&l| !self.label_valid(x.stage, l)) {
            return Err(Error::malformed(format!("label {l} does not exist at stage {}", x.stage)));
        }
        Ok(())
    }

    /// Number of levels between `label` and the outermost level of `stage`.
    fn dist_top(stage: SmallOrdinal, label: Label) -> u64 {
        let j = stage.finite_part;
        match label {
            Label::Succ(s) => j - s.finite_part,
            Label::Depth { depth, .. } => j + depth,
        }
    }

    /// Where `e_{from,to}` sends a level of stage `from`.
    pub fn label_map(&self, from: SmallOrdinal, to: SmallOrdinal, label: Label) -> Label {
        if self.variant == Variant::Diagonal || from == to {
            return label;
        }
        if to.is_limit() {
            return Label::Depth {
                limit: to,
                depth: Self::dist_top(from, label),
            };
        }
        let to_pred = to.pred().expect("successor");
        match from.pred() {
            Some(_) if label == Label::Succ(from) => Label::Succ(to),
            Some(from_pred) => self.label_map(from_pred, to_pred, label),
            None => {
                let Label::Depth { depth, .. } = label else {
                    unreachable!("limit stages only carry depth labels")
                };
                self.label_map(SmallOrdinal::finite(depth + 1), to, Label::Succ(SmallOrdinal::ONE))
            }
        }
    }

    /// The level of stage `sigma` that `e_{sigma,λ}` sends to `label`, where
    /// `label` lives at a limit `λ > sigma`.
    fn pull(&self, sigma: SmallOrdinal, label: Label) -> Option<Label> {
        let pulled = match (self.variant, label) {
            (Variant::Diagonal, Label::Succ(s)) => (s <= sigma).then_some(label)?,
            (Variant::Skew, Label::Depth { depth, .. }) => {
                let (mu, j) = (sigma.limit_part(), sigma.finite_part);
                if depth < j {
                    Label::Succ(mu.plus(j - depth))
                } else if mu.is_limit() {
                    Label::Depth {
                        limit: mu,
                        depth: depth - j,
                    }
                } else {
                    return None;
                }
            }
            _ => return None,
        };
        self.label_valid(sigma, pulled).then_some(pulled)
    }

    /// Pulls a payload at a stage `λ` back to stage `sigma < λ`, if possible.
    pub fn pull_back(&self, sigma: SmallOrdinal, x: &StagedTerm) -> Option<StagedTerm> {
        if sigma >= x.stage {
            return None;
        }
        let frame = x.frame.iter().map(|&l| self.pull(sigma, l)).collect::<Option<Vec<_>>>()?;
        let back = x.with_stage(sigma, frame);
        let again: Vec<Label> = back.frame.iter().map(|&l| self.label_map(sigma, x.stage, l)).collect();
        (again == x.frame).then_some(back)
    }

    /// The least successor stage `δ + 1 < λ` holding a representative of the
    /// thread of `x` at the limit `λ`, and that representative.
    pub fn representative(&self, x: &StagedTerm) -> Result<StagedTerm> {
        let lambda = x.stage;
        if !lambda.is_limit() {
            return Err(Error::NotALimit(lambda));
        }
        let least = match self.variant {
            Variant::Skew => x
                .frame
                .iter()
                .map(|l| match l {
                    Label::Depth { depth, .. } => depth + 1,
                    Label::Succ(_) => 1,
                })
                .max()
                .map_or(SmallOrdinal::ONE, SmallOrdinal::finite),
            Variant::Diagonal => x
                .frame
                .iter()
                .map(|l| match l {
                    Label::Succ(s) => *s,
                    Label::Depth { .. } => SmallOrdinal::ONE,
                })
                .max()
                .unwrap_or(SmallOrdinal::ONE),
        };
        self.pull_back(least, x).ok_or(Error::NoRepresentative(lambda))
    }

    /// `e_{beta,gamma}(x)`.
    pub fn embed(&self, beta: SmallOrdinal, gamma: SmallOrdinal, x: &StagedTerm) -> Result<StagedTerm> {
        if x.stage != beta {
            return Err(Error::malformed(format!("{x} is not at stage {beta}")));
        }
        if gamma < beta {
            return Err(Error::malformed(format!("no embedding from {beta} down to {gamma}")));
        }
        self.validate(x)?;
        self.check_stage(gamma)?;
        if beta == gamma {
            return Ok(x.clone());
        }
        if self.variant == Variant::Diagonal {
            return Ok(x.with_stage(gamma, x.frame.clone()));
        }
        if gamma.is_limit() {
            let frame = x.frame.iter().map(|&l| self.label_map(beta, gamma, l)).collect();
            return Ok(x.with_stage(gamma, frame));
        }
        if beta.is_zero() {
            let at_one = StagedTerm {
                stage: SmallOrdinal::ONE,
                frame: vec![],
                term: embed_diagonal(&x.term, 0)?,
            };
            return self.embed(SmallOrdinal::ONE, gamma, &at_one);
        }
        if let Some(delta) = beta.pred() {
            let beta_pred = gamma.pred().expect("successor");
            let frame = x
                .frame
                .iter()
                .map(|&l| if l == Label::Succ(beta) { Label::Succ(gamma) } else { self.label_map(delta, beta_pred, l) })
                .collect();
            return Ok(x.with_stage(gamma, frame));
        }
        let h = self.representative(x)?;
        self.embed(h.stage, gamma, &h)
    }

    /// Order of two payloads at the same stage.
    pub fn compare(&self, a: &StagedTerm, b: &StagedTerm) -> Result<Ordering> {
        if a.stage != b.stage {
            return Err(Error::malformed(format!("{a} and {b} live at different stages")));
        }
        if a == b {
            return Ok(Ordering::Equal);
        }
        let merged: Vec<Label> = a.frame.iter().chain(&b.frame).copied().collect::<BTreeSet<_>>().into_iter().collect();
        let reindex = |x: &StagedTerm| -> Result<SymbolicTerm> {
            let levels: Vec<u32> = x
                .frame
                .iter()
                .map(|l| merged.binary_search(l).expect("merged") as u32 + 1)
                .collect();
            Ok(crate::terms::term_apply(&Substitution::from_levels(&levels)?, &x.term))
        };
        term_compare(&reindex(a)?, &reindex(b)?, &self.u, merged.len() as u32)
    }

    pub fn equal(&self, a: &StagedTerm, b: &StagedTerm) -> Result<bool> {
        Ok(self.compare(a, b)? == Ordering::Equal)
    }

    /// A finite window of the labels of `stage`, for sampling.
    pub fn label_window(&self, stage: SmallOrdinal, depth: u64) -> Vec<Label> {
        let mut out = Vec::new();
        match self.variant {
            Variant::Skew => {
                if stage.limit_part().is_limit() {
                    out.extend((0..depth).rev().map(|d| Label::Depth {
                        limit: stage.limit_part(),
                        depth: d,
                    }));
                }
                out.extend((1..=stage.finite_part).map(|i| Label::Succ(stage.limit_part().plus(i))));
            }
            Variant::Diagonal => {
                for a in 0..=stage.omega_coeff {
                    let base = SmallOrdinal::new(a, 0);
                    out.extend((1..=depth).map(|i| base.plus(i)).filter(|&s| s <= stage).map(Label::Succ));
                }
            }
        }
        out
    }

    /// A random payload at `stage` over at most `max_rank` labels.
    pub fn random_payload(&self, rng: &mut impl Rng, stage: SmallOrdinal, max_rank: usize) -> Result<StagedTerm> {
        let window = self.label_window(stage, 6);
        let rank = rng.gen_range(0..=max_rank.min(window.len()));
        let mut chosen: BTreeSet<Label> = BTreeSet::new();
        while chosen.len() < rank {
            chosen.insert(window[rng.gen_range(0..window.len())]);
        }
        StagedTerm::new(stage, chosen.into_iter().collect(), random_term(rng, rank as u32, 2))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherenceFailure {
    pub triple: [String; 3],
    pub payload: Value,
    pub via_middle: Value,
    pub direct: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherenceReport {
    pub checks: u64,
    pub triples: usize,
    pub failures: Vec<CoherenceFailure>,
}

impl CoherenceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `e_{γδ}(e_{βγ}(x)) = e_{βδ}(x)` modulo `u` for every sample at
/// stage `β` and every triple `(β, γ, δ)`.
pub fn check_coherence(
    system: &OmegaSystem,
    sample: &[StagedTerm],
    triples: &[(SmallOrdinal, SmallOrdinal, SmallOrdinal)],
) -> Result<CoherenceReport> {
    let mut report = CoherenceReport {
        checks: 0,
        triples: triples.len(),
        failures: vec![],
    };
    for &(beta, gamma, delta) in triples {
        if !(beta <= gamma && gamma <= delta) {
            return Err(Error::malformed(format!("triple ({beta}, {gamma}, {delta}) is not increasing")));
        }
        for x in sample.iter().filter(|x| x.stage == beta) {
            report.checks += 1;
            let via = system.embed(gamma, delta, &system.embed(beta, gamma, x)?)?;
            let direct = system.embed(beta, delta, x)?;
            if !system.equal(&via, &direct)? {
                report.failures.push(CoherenceFailure {
                    triple: [beta.to_string(), gamma.to_string(), delta.to_string()],
                    payload: x.to_json(),
                    via_middle: via.to_json(),
                    direct: direct.to_json(),
                });
            }
        }
    }
    Ok(report)
}

/// Stages used by the default audits, up to `alpha`.
pub fn audit_stages(alpha: SmallOrdinal) -> Vec<SmallOrdinal> {
    let o = SmallOrdinal::new;
    [o(0, 0), o(0, 1), o(0, 2), o(0, 3), o(0, 5), o(1, 0), o(1, 1), o(1, 2), o(1, 3), o(2, 0), o(2, 1), o(2, 2)]
        .into_iter()
        .filter(|&s| s <= alpha)
        .collect()
}

/// Every strictly increasing triple of [`audit_stages`].
pub fn audit_triples(alpha: SmallOrdinal) -> Vec<(SmallOrdinal, SmallOrdinal, SmallOrdinal)> {
    let stages = audit_stages(alpha);
    let mut out = Vec::new();
    for (i, &b) in stages.iter().enumerate() {
        for (j, &g) in stages.iter().enumerate().skip(i + 1) {
            for &d in &stages[j + 1..] {
                out.push((b, g, d));
            }
        }
    }
    out
}

/// `per_stage` random payloads at each stage in `stages`.
pub fn sample_payloads(
    system: &OmegaSystem,
    stages: &[SmallOrdinal],
    per_stage: usize,
    seed: u64,
) -> Result<Vec<StagedTerm>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &stage in stages {
        for _ in 0..per_stage {
            out.push(system.random_payload(&mut rng, stage, 3)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct WelldefReport {
    pub thread: Value,
    pub alpha: String,
    pub choices: Vec<Value>,
    pub images: Vec<Value>,
    /// `(i, j, verdict)` for every pair of images.
    pub pairwise: Vec<(usize, usize, String)>,
}

impl WelldefReport {
    pub fn passed(&self) -> bool {
        self.pairwise.iter().all(|(_, _, v)| v == "Equal")
    }
}

/// Checks that the image of a thread at the limit `γ` under `e_{γ,γ+1}`
/// does not depend on the chosen representative `h ∈ stage δ + 1`.
pub fn check_welldef_limit(
    system: &OmegaSystem,
    thread: &StagedTerm,
    alpha: SmallOrdinal,
    choices: &[(SmallOrdinal, StagedTerm)],
) -> Result<WelldefReport> {
    let gamma = thread.stage;
    if !gamma.is_limit() {
        return Err(Error::NotALimit(gamma));
    }
    if alpha != gamma.succ() {
        return Err(Error::malformed(format!("expected α = {}, got {alpha}", gamma.succ())));
    }
    let mut images = Vec::new();
    for (delta, h) in choices {
        let stage = delta.succ();
        if h.stage != stage || stage >= gamma {
            return Err(Error::InvalidRepresentative(format!("{h} is not at stage {stage} below {gamma}")));
        }
        system
            .validate(h)
            .map_err(|e| Error::InvalidRepresentative(format!("{h}: {e}")))?;
        if !system.equal(&system.embed(stage, gamma, h)?, thread)? {
            return Err(Error::InvalidRepresentative(format!("{h} does not belong to the thread of {thread}")));
        }
        images.push(system.embed(stage, alpha, h)?);
    }
    let mut pairwise = Vec::new();
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            pairwise.push((i, j, format!("{:?}", system.compare(&images[i], &images[j])?)));
        }
    }
    Ok(WelldefReport {
        thread: thread.to_json(),
        alpha: alpha.to_string(),
        choices: choices
            .iter()
            .map(|(d, h)| json!({"delta": d.to_string(), "representative": h.to_json()}))
            .collect(),
        images: images.iter().map(StagedTerm::to_json).collect(),
        pairwise,
    })
}

/// Representatives of a thread at a limit: the least one, its images at
/// later successor stages (finite, then `ω + j` when below the limit), and
/// a copy patched at a new outermost level, which agrees with it modulo `u`.
pub fn welldef_choices(system: &OmegaSystem, thread: &StagedTerm, count: usize) -> Result<Vec<(SmallOrdinal, StagedTerm)>> {
    let least = system.representative(thread)?;
    let mut stages = vec![least.stage];
    for j in 1..count as u64 + 1 {
        stages.push(least.stage.plus(j));
        let transfinite = SmallOrdinal::new(1, j);
        if transfinite < thread.stage && transfinite.is_successor() && thread.stage > SmallOrdinal::OMEGA {
            stages.push(transfinite);
        }
    }
    let mut out = Vec::new();
    for (i, stage) in stages.into_iter().enumerate() {
        let h = system.embed(least.stage, stage, &least)?;
        let delta = stage.pred().expect("successor stage");
        if i == 0 {
            let mut frame = h.frame.clone();
            if frame.last() != Some(&Label::Succ(stage)) {
                frame.push(Label::Succ(stage));
            }
            let patched = SymbolicTerm::patch(
                frame.len() as u32,
                [(0, SymbolicTerm::Const(7))].into(),
                h.term.clone(),
            )?;
            out.push((delta, h.clone()));
            out.push((delta, StagedTerm::new(stage, frame, patched)?));
        } else {
            out.push((delta, h));
        }
        if out.len() >= count {
            break;
        }
    }
    out.truncate(count.max(1));
    Ok(out)
}

/// The direct limit of the symbolic system at a limit stage.
#[derive(Debug, Clone)]
pub struct DirectLimit<'a> {
    system: &'a OmegaSystem,
    lambda: SmallOrdinal,
}

pub fn direct_limit(system: &OmegaSystem, lambda: SmallOrdinal) -> Result<DirectLimit<'_>> {
    if !lambda.is_limit() {
        return Err(Error::NotALimit(lambda));
    }
    system.check_stage(lambda)?;
    Ok(DirectLimit { system, lambda })
}

impl DirectLimit<'_> {
    pub fn lambda(&self) -> SmallOrdinal {
        self.lambda
    }

    /// The thread of `x`, normalized to its representative at the least stage.
    pub fn thread(&self, x: &StagedTerm) -> Result<StagedTerm> {
        if x.stage > self.lambda {
            return Err(Error::malformed(format!("{x} lies above {}", self.lambda)));
        }
        let at_limit = self.system.embed(x.stage, self.lambda, x)?;
        if at_limit.frame.is_empty() {
            return Ok(at_limit.with_stage(SmallOrdinal::ZERO, vec![]));
        }
        self.system.representative(&at_limit)
    }

    pub fn threads_equal(&self, a: &StagedTerm, b: &StagedTerm) -> Result<bool> {
        let (a, b) = (self.thread(a)?, self.thread(b)?);
        let common = a.stage.max(b.stage).max(SmallOrdinal::ONE);
        let lift = |x: &StagedTerm| self.system.embed(x.stage, common, x);
        self.system.equal(&lift(&a)?, &lift(&b)?)
    }
}

/// Stages of a finite structure under a principal index ultrafilter.
/// Elements are indices into each stage's universe; at limit stages they are
/// the stage-0 elements they come from.
#[derive(Debug)]
pub struct FiniteSystem {
    base: FiniteStructure,
    index: FinitePrincipal,
    alpha: SmallOrdinal,
    powers: RefCell<BTreeMap<SmallOrdinal, Rc<Ultrapower>>>,
    embeddings: RefCell<BTreeMap<(SmallOrdinal, SmallOrdinal, usize), usize>>,
}

impl FiniteSystem {
    pub fn new(base: FiniteStructure, index: FinitePrincipal, alpha: SmallOrdinal, cap: SmallOrdinal) -> Result<Self> {
        check_cap(alpha, cap)?;
        Ok(FiniteSystem {
            base,
            index,
            alpha,
            powers: RefCell::new(BTreeMap::new()),
            embeddings: RefCell::new(BTreeMap::new()),
        })
    }

    pub fn base(&self) -> &FiniteStructure {
        &self.base
    }

    pub fn alpha(&self) -> SmallOrdinal {
        self.alpha
    }

    /// The ultrapower whose quotient is the successor stage `stage`.
    pub fn power(&self, stage: SmallOrdinal) -> Result<Rc<Ultrapower>> {
        let pred = stage.pred().ok_or_else(|| Error::malformed(format!("{stage} is not a successor")))?;
        check_cap(stage, self.alpha)?;
        if let Some(p) = self.powers.borrow().get(&stage) {
            return Ok(p.clone());
        }
        let p = Rc::new(finite_ultrapower(&self.structure(pred)?, self.index)?);
        self.powers.borrow_mut().insert(stage, p.clone());
        Ok(p)
    }

    pub fn structure(&self, stage: SmallOrdinal) -> Result<FiniteStructure> {
        check_cap(stage, self.alpha)?;
        if stage.is_successor() {
            Ok(self.power(stage)?.structure.clone())
        } else {
            Ok(self.base.clone())
        }
    }

    pub fn size(&self, stage: SmallOrdinal) -> Result<usize> {
        if stage.is_successor() {
            Ok(self.power(stage)?.structure.size())
        } else {
            Ok(self.base.size())
        }
    }

    pub fn embed(&self, beta: SmallOrdinal, gamma: SmallOrdinal, x: usize) -> Result<usize> {
        if gamma < beta {
            return Err(Error::malformed(format!("no embedding from {beta} down to {gamma}")));
        }
        check_cap(gamma, self.alpha)?;
        if x >= self.size(beta)? {
            return Err(Error::malformed(format!("element {x} outside stage {beta}")));
        }
        if beta == gamma {
            return Ok(x);
        }
        if let Some(&y) = self.embeddings.borrow().get(&(beta, gamma, x)) {
            return Ok(y);
        }
        let y = self.embed_uncached(beta, gamma, x)?;
        self.embeddings.borrow_mut().insert((beta, gamma, x), y);
        Ok(y)
    }

    fn embed_uncached(&self, beta: SmallOrdinal, gamma: SmallOrdinal, x: usize) -> Result<usize> {
        if gamma.is_limit() {
            if !beta.is_successor() {
                return Ok(x);
            }
            return (0..self.base.size())
                .find(|&m| self.embed(SmallOrdinal::ZERO, beta, m).ok() == Some(x))
                .ok_or(Error::NoRepresentative(gamma));
        }
        if beta.is_zero() {
            let at_one = self.power(SmallOrdinal::ONE)?.class_of(&vec![x; self.index.size]);
            return self.embed(SmallOrdinal::ONE, gamma, at_one);
        }
        if let Some(delta) = beta.pred() {
            let gamma_pred = gamma.pred().expect("successor");
            let rep = self.power(beta)?.representatives[x].clone();
            let image = rep
                .iter()
                .map(|&y| self.embed(delta, gamma_pred, y))
                .collect::<Result<Vec<_>>>()?;
            return Ok(self.power(gamma)?.class_of(&image));
        }
        // limit source: the thread's element at stage 1 represents it
        let h = self.embed(SmallOrdinal::ZERO, SmallOrdinal::ONE, x)?;
        self.embed(SmallOrdinal::ONE, gamma, h)
    }

    /// The isomorphism of a stage onto the base structure.
    pub fn collapse(&self, stage: SmallOrdinal, x: usize) -> Result<usize> {
        match stage.pred() {
            Some(pred) => {
                let rep = &self.power(stage)?.representatives[x];
                self.collapse(pred, rep[self.index.point])
            }
            None => Ok(x),
        }
    }
}

/// The first place where `map` fails to be an isomorphism, if any.
fn iso_mismatch(from: &FiniteStructure, to: &FiniteStructure, map: &[usize]) -> Option<String> {
    if map.len() != from.size() || from.size() != to.size() {
        return Some(format!("map has {} values for sizes {} and {}", map.len(), from.size(), to.size()));
    }
    let mut seen = vec![None; to.size()];
    for (x, &y) in map.iter().enumerate() {
        if y >= to.size() {
            return Some(format!("{x} ↦ {y} is out of range"));
        }
        if let Some(z) = seen[y].replace(x) {
            return Some(format!("{z} and {x} both map to {y}"));
        }
    }
    let signature = from.signature();
    if signature != to.signature() {
        return Some("signatures differ".into());
    }
    let n = from.size();
    let image = |t: &[usize]| t.iter().map(|&x| map[x]).collect::<Vec<_>>();
    for (name, &arity) in &signature.relations {
        for i in 0..n.pow(arity as u32) {
            let t = index_tuple(n, arity, i);
            if from.relation(name, &t) != to.relation(name, &image(&t)) {
                return Some(format!("{name}{t:?} vs {name}{:?}", image(&t)));
            }
        }
    }
    for (name, &arity) in &signature.functions {
        for i in 0..n.pow(arity as u32) {
            let t = index_tuple(n, arity, i);
            let value = from.function(name, &t).map(|v| map[v]);
            if value != to.function(name, &image(&t)) {
                return Some(format!("{name}{t:?}"));
            }
        }
    }
    for name in &signature.constants {
        if from.constant(name).map(|c| map[c]) != to.constant(name) {
            return Some(format!("constant {name}"));
        }
    }
    None
}

fn is_isomorphism(from: &FiniteStructure, to: &FiniteStructure, map: &[usize]) -> bool {
    iso_mismatch(from, to, map).is_none()
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseReport {
    pub stages: Vec<String>,
    pub checks: u64,
    pub failures: Vec<String>,
}

impl CollapseReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Verifies that every listed stage is isomorphic to the base via the
/// collapse (all elements, all atomic facts) and that every embedding
/// between listed stages is the identity once both ends are collapsed.
pub fn finite_collapse_audit(system: &FiniteSystem, stages: &[SmallOrdinal]) -> Result<CollapseReport> {
    let mut report = CollapseReport {
        stages: stages.iter().map(ToString::to_string).collect(),
        checks: 0,
        failures: vec![],
    };
    let collapses: Vec<Vec<usize>> = stages
        .iter()
        .map(|&s| (0..system.size(s)?).map(|x| system.collapse(s, x)).collect())
        .collect::<Result<_>>()?;
    for (&s, phi) in stages.iter().zip(&collapses) {
        report.checks += 1;
        if !is_isomorphism(&system.structure(s)?, &system.base, phi) {
            report.failures.push(format!("collapse of stage {s} is not an isomorphism"));
        }
    }
    for (i, &b) in stages.iter().enumerate() {
        for (j, &g) in stages.iter().enumerate().skip(i + 1) {
            for x in 0..system.size(b)? {
                report.checks += 1;
                let y = system.embed(b, g, x)?;
                if collapses[j][y] != collapses[i][x] {
                    report.failures.push(format!("e({b},{g}) moves {x}"));
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct Remark1Report {
    pub carrier: String,
    pub status: String,
    pub g: String,
    pub lifted_image: String,
    pub diagonal_image: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equality_set: Option<String>,
}

impl Remark1Report {
    pub fn separated(&self) -> bool {
        self.status == "separated"
    }
}

/// Compares `e_{12} = d^u` with the diagonal of stage 1 at `g = v1`.
pub fn remark1_witness(u: &RepUltrafilter) -> Result<Remark1Report> {
    let system = OmegaSystem::skew(u.clone(), SmallOrdinal::finite(2))?;
    let g = StagedTerm::finite(1, SymbolicTerm::Var(1))?;
    let lifted = system.embed(SmallOrdinal::ONE, SmallOrdinal::finite(2), &g)?;
    let lifted = lifted.finite_term().expect("finite stage");
    let diagonal = embed_diagonal(&SymbolicTerm::Var(1), 1)?;
    let verdict = term_compare(&lifted, &diagonal, u, 2)?;
    let equal = verdict_sets(&lifted, &diagonal, u, 2)?.equal;
    let separated = verdict != Ordering::Equal && equal == PeriodicSet::empty();
    Ok(Remark1Report {
        carrier: format!("omega({u})"),
        status: if separated { "separated" } else { "not_separated" }.into(),
        g: "v1".into(),
        lifted_image: lifted.to_string(),
        diagonal_image: diagonal.to_string(),
        verdict: Some(format!("{verdict:?}")),
        equality_set: Some(equal.to_string()),
    })
}

/// The same comparison on a finite carrier, where the principal ultrafilter
/// makes the lifted diagonal coincide with the diagonal.
pub fn remark1_finite(base: &FiniteStructure, index: FinitePrincipal) -> Result<Remark1Report> {
    let system = FiniteSystem::new(base.clone(), index, SmallOrdinal::finite(2), DEFAULT_STAGE_CAP)?;
    let (one, two) = (SmallOrdinal::ONE, SmallOrdinal::finite(2));
    let stage2 = system.power(two)?;
    let mut witness = None;
    for g in 0..system.size(one)? {
        let lifted = system.embed(one, two, g)?;
        let diagonal = stage2.class_of(&vec![g; index.size]);
        if lifted != diagonal {
            witness = Some((g, lifted, diagonal));
            break;
        }
    }
    let (g, lifted, diagonal) = witness.unwrap_or((0, system.embed(one, two, 0)?, stage2.class_of(&vec![0; index.size])));
    Ok(Remark1Report {
        carrier: format!("finite(size {}, principal {} of {})", base.size(), index.point, index.size),
        status: if witness.is_some() { "separated" } else { "not_separated" }.into(),
        g: g.to_string(),
        lifted_image: lifted.to_string(),
        diagonal_image: diagonal.to_string(),
        verdict: None,
        equality_set: None,
    })
}

/// A chain `M_0 ⊆ M_1 ⊆ … ⊆ M_k` of finite structures with isomorphisms
/// `ι_β : ∏_a M_β → M_{β+1}`, indexed by ultrapower class.
#[derive(Debug, Clone)]
pub struct FiniteChain {
    pub index: FinitePrincipal,
    pub models: Vec<FiniteStructure>,
    pub inclusions: Vec<Vec<usize>>,
    pub isos: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct FiniteChainJson {
    index_size: usize,
    point: usize,
    models: Vec<Value>,
    inclusions: Vec<Vec<usize>>,
    isos: Vec<Vec<usize>>,
}

impl FiniteChain {
    /// The chain of stages `0..=length` of the finite system, with identity isomorphisms.
    pub fn standard(base: &FiniteStructure, index: FinitePrincipal, length: u64) -> Result<Self> {
        let system = FiniteSystem::new(base.clone(), index, SmallOrdinal::finite(length), SmallOrdinal::finite(length))?;
        let stage = SmallOrdinal::finite;
        let models = (0..=length).map(|b| system.structure(stage(b))).collect::<Result<Vec<_>>>()?;
        let inclusions = (0..length)
            .map(|b| (0..models[b as usize].size()).map(|x| system.embed(stage(b), stage(b + 1), x)).collect())
            .collect::<Result<Vec<_>>>()?;
        let isos = (1..=length).map(|b| (0..models[b as usize].size()).collect()).collect();
        Ok(FiniteChain {
            index,
            models,
            inclusions,
            isos,
        })
    }

    /// Swaps the values of `ι_beta` at classes `i` and `j`.
    pub fn perturb_iso(&mut self, beta: usize, i: usize, j: usize) {
        self.isos[beta].swap(i, j);
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(FiniteChainJson {
            index_size: self.index.size,
            point: self.index.point,
            models: self.models.iter().map(FiniteStructure::to_json).collect(),
            inclusions: self.inclusions.clone(),
            isos: self.isos.clone(),
        })
        .expect("chain serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: FiniteChainJson =
            serde_json::from_str(text).map_err(|e| Error::malformed(format!("chain JSON: {e}")))?;
        Ok(FiniteChain {
            index: FinitePrincipal::new(raw.index_size, raw.point)?,
            models: raw
                .models
                .iter()
                .map(|m| FiniteStructure::from_json(&m.to_string()))
                .collect::<Result<_>>()?,
            inclusions: raw.inclusions,
            isos: raw.isos,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub carrier: String,
    pub length: usize,
    pub checks: u64,
    /// The constructed `φ_β : (M_0)_{a,β} → M_β`.
    pub isomorphisms: Vec<Value>,
}

fn violation(diagram: impl Into<String>, witness: impl fmt::Display) -> Error {
    Error::DiagramViolation {
        diagram: diagram.into(),
        witness: witness.to_string(),
    }
}

/// Exhaustive check of the triangle `ι_0 ∘ d = incl_0` and the squares
/// `ι_{β+1} ∘ lift(incl_β) = incl_{β+1} ∘ ι_β`, then construction of
/// `φ_{β+1} = ι_β ∘ lift(φ_β)`, each verified to be an isomorphism.
pub fn verify_finite_chain(chain: &FiniteChain) -> Result<ChainReport> {
    let k = chain.models.len().saturating_sub(1);
    if chain.models.is_empty() || chain.inclusions.len() != k || chain.isos.len() != k {
        return Err(Error::malformed(format!(
            "chain of {} models needs {k} inclusions and {k} isomorphisms",
            chain.models.len()
        )));
    }
    let a = chain.index;
    let powers: Vec<Ultrapower> = chain.models[..k].iter().map(|m| finite_ultrapower(m, a)).collect::<Result<_>>()?;
    let mut checks = 0u64;
    for b in 0..k {
        let (src, dst) = (&chain.models[b], &chain.models[b + 1]);
        let incl = &chain.inclusions[b];
        checks += 2;
        let injective = incl.iter().collect::<BTreeSet<_>>().len() == incl.len();
        if incl.len() != src.size() || incl.iter().any(|&y| y >= dst.size()) || !injective || !src.is_homomorphism(dst, incl) {
            return Err(violation(format!("inclusion {b}"), format!("{incl:?} is not an embedding")));
        }
        if let Some(w) = iso_mismatch(&powers[b].structure, dst, &chain.isos[b]) {
            return Err(violation(format!("iso {b}"), w));
        }
    }
    for m in 0..chain.models.first().map_or(0, FiniteStructure::size) {
        if k == 0 {
            break;
        }
        checks += 1;
        let d = powers[0].class_of(&vec![m; a.size]);
        if chain.isos[0][d] != chain.inclusions[0][m] {
            return Err(violation("triangle", format!("element {m}")));
        }
    }
    for b in 0..k.saturating_sub(1) {
        for c in 0..powers[b].structure.size() {
            checks += 1;
            let lifted: Vec<usize> = powers[b].representatives[c].iter().map(|&y| chain.inclusions[b][y]).collect();
            let left = chain.isos[b + 1][powers[b + 1].class_of(&lifted)];
            let right = chain.inclusions[b + 1][chain.isos[b][c]];
            if left != right {
                return Err(violation(format!("square {b}"), format!("class {c} {:?}", powers[b].representatives[c])));
            }
        }
    }
    let mut stages = vec![chain.models[0].clone()];
    let mut phis: Vec<Vec<usize>> = vec![(0..chain.models[0].size()).collect()];
    for b in 0..k {
        let power = finite_ultrapower(&stages[b], a)?;
        let phi: Vec<usize> = power
            .representatives
            .iter()
            .map(|g| {
                let image: Vec<usize> = g.iter().map(|&y| phis[b][y]).collect();
                chain.isos[b][powers[b].class_of(&image)]
            })
            .collect();
        checks += 1;
        if let Some(w) = iso_mismatch(&power.structure, &chain.models[b + 1], &phi) {
            return Err(violation(format!("phi {}", b + 1), w));
        }
        stages.push(power.structure);
        phis.push(phi);
    }
    Ok(ChainReport {
        carrier: "finite".into(),
        length: k,
        checks,
        isomorphisms: phis.into_iter().map(|p| json!(p)).collect(),
    })
}

/// An isomorphism `∏_u M_β → M_{β+1}` of the symbolic self-chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainIso {
    Identity,
    /// Identity except that the constants `a` and `b` trade places.
    Swap(u64, u64),
}

impl ChainIso {
    fn apply(&self, system: &OmegaSystem, x: &StagedTerm) -> Result<StagedTerm> {
        let ChainIso::Swap(a, b) = *self else {
            return Ok(x.clone());
        };
        for (from, to) in [(a, b), (b, a)] {
            if system.equal(x, &StagedTerm::constant(x.stage, from))? {
                return Ok(StagedTerm::constant(x.stage, to));
            }
        }
        Ok(x.clone())
    }

    fn points(&self) -> Vec<u64> {
        match *self {
            ChainIso::Identity => vec![],
            ChainIso::Swap(a, b) => vec![a, b],
        }
    }
}

/// The chain of finite stages `0..=k` of a symbolic system, `M_{β+1}` being
/// literally `∏_u M_β` and the inclusions the system's embeddings.
#[derive(Debug, Clone)]
pub struct OmegaChain {
    pub system: OmegaSystem,
    pub isos: Vec<ChainIso>,
}

impl OmegaChain {
    pub fn self_chain(u: RepUltrafilter, length: u64) -> Result<Self> {
        Ok(OmegaChain {
            system: OmegaSystem::skew(u, SmallOrdinal::finite(length + 1))?,
            isos: vec![ChainIso::Identity; length as usize],
        })
    }

    pub fn perturb(&mut self, beta: usize, a: u64, b: u64) {
        self.isos[beta] = ChainIso::Swap(a, b);
    }
}

/// Sample-based check of the chain diagrams on the symbolic carrier:
/// constants `0..10`, the variables and their sums at ranks up to 2,
/// `random` random payloads per stage and every perturbed point.
pub fn verify_omega_chain(chain: &OmegaChain, random: usize, seed: u64) -> Result<ChainReport> {
    let system = &chain.system;
    let k = chain.isos.len();
    let stage = |b: usize| SmallOrdinal::finite(b as u64);
    let mut constants: BTreeSet<u64> = (0..10).collect();
    constants.extend(chain.isos.iter().flat_map(ChainIso::points));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<Vec<StagedTerm>> = Vec::new();
    for b in 0..=k + 1 {
        let mut s: Vec<StagedTerm> = constants.iter().map(|&c| StagedTerm::constant(stage(b), c)).collect();
        for t in ["v1", "v2", "v1 + v2", "2*v1 + 1"] {
            let t: SymbolicTerm = t.parse()?;
            if term_rank(&t) as usize <= b {
                s.push(StagedTerm::finite(b as u64, t)?);
            }
        }
        for _ in 0..random {
            s.push(system.random_payload(&mut rng, stage(b), 2)?);
        }
        samples.push(s);
    }
    let mut checks = 0u64;
    if k > 0 {
        for &m in &constants {
            checks += 1;
            let d = StagedTerm {
                stage: stage(1),
                frame: vec![],
                term: embed_diagonal(&SymbolicTerm::Const(m), 0)?,
            };
            let left = chain.isos[0].apply(system, &d)?;
            let right = system.embed(stage(0), stage(1), &StagedTerm::constant(stage(0), m))?;
            if !system.equal(&left, &right)? {
                return Err(violation("triangle", m));
            }
        }
    }
    for b in 0..k.saturating_sub(1) {
        for x in &samples[b + 1] {
            checks += 1;
            // lift of incl_β on ∏_u M_β = M_{β+1}
            let lifted = system.embed(stage(b + 1), stage(b + 2), x)?;
            let left = chain.isos[b + 1].apply(system, &lifted)?;
            let right = system.embed(stage(b + 1), stage(b + 2), &chain.isos[b].apply(system, x)?)?;
            if !system.equal(&left, &right)? {
                return Err(violation(format!("square {b}"), x));
            }
        }
    }
    // φ_{β+1} = ι_β ∘ lift(φ_β); lifts of identities are identities
    let mut isomorphisms = vec![json!("identity")];
    for b in 0..k {
        if chain.isos[b] != ChainIso::Identity {
            return Err(Error::Unsupported(format!("lift of a perturbed isomorphism at {b}")));
        }
        let s = &samples[b + 1];
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                checks += 1;
                let (x, y) = (&s[i], &s[j]);
                let (px, py) = (chain.isos[b].apply(system, x)?, chain.isos[b].apply(system, y)?);
                if system.compare(&px, &py)? != system.compare(x, y)? {
                    return Err(violation(format!("phi {}", b + 1), format!("{x} vs {y}")));
                }
            }
        }
        isomorphisms.push(json!("identity"));
    }
    Ok(ChainReport {
        carrier: format!("omega({})", system.ultrafilter()),
        length: k,
        checks,
        isomorphisms,
    })
}

#[derive(Debug, Clone)]
pub enum Carrier {
    Finite { structure: FiniteStructure, index: FinitePrincipal },
    Omega { u: RepUltrafilter },
}

#[derive(Debug)]
pub enum DirectSystem {
    Omega(OmegaSystem),
    Finite(FiniteSystem),
}

pub fn build_skew_system(carrier: Carrier, alpha: SmallOrdinal) -> Result<DirectSystem> {
    build_skew_system_with_cap(carrier, alpha, DEFAULT_STAGE_CAP)
}

pub fn build_skew_system_with_cap(carrier: Carrier, alpha: SmallOrdinal, cap: SmallOrdinal) -> Result<DirectSystem> {
    match carrier {
        Carrier::Omega { u } => Ok(DirectSystem::Omega(OmegaSystem::new(u, alpha, cap, Variant::Skew)?)),
        Carrier::Finite { structure, index } => Ok(DirectSystem::Finite(FiniteSystem::new(structure, index, alpha, cap)?)),
    }
}

impl DirectSystem {
    pub fn alpha(&self) -> SmallOrdinal {
        match self {
            DirectSystem::Omega(s) => s.alpha(),
            DirectSystem::Finite(s) => s.alpha(),
        }
    }

    /// A description of the system: its stages on the audit grid and the
    /// images of a few elements under the embeddings into the top stage.
    pub fn summary(&self) -> Result<Value> {
        let alpha = self.alpha();
        let mut stages = audit_stages(alpha);
        if !stages.contains(&alpha) {
            stages.push(alpha);
        }
        match self {
            DirectSystem::Omega(system) => {
                let mut images = Vec::new();
                for &s in &stages {
                    let x = if s.is_zero() {
                        StagedTerm::constant(s, 2)
                    } else if s.is_limit() {
                        system.embed(SmallOrdinal::ONE, s, &StagedTerm::finite(1, SymbolicTerm::Var(1))?)?
                    } else {
                        StagedTerm::new(s, vec![Label::Succ(s)], SymbolicTerm::Var(1))?
                    };
                    images.push(json!({
                        "from": x.to_json(),
                        "image": system.embed(s, alpha, &x)?.to_json(),
                    }));
                }
                Ok(json!({
                    "carrier": format!("omega({})", system.ultrafilter()),
                    "alpha": alpha.to_string(),
                    "stages": stages.iter().map(|s| json!({
                        "stage": s.to_string(),
                        "labels": system.label_window(*s, 3).iter().map(ToString::to_string).collect::<Vec<_>>(),
                    })).collect::<Vec<_>>(),
                    "embeddings_into_alpha": images,
                }))
            }
            DirectSystem::Finite(system) => {
                let report = finite_collapse_audit(system, &stages)?;
                let stage_json = stages
                    .iter()
                    .map(|&s| {
                        let size = system.size(s)?;
                        let collapse = (0..size).map(|x| system.collapse(s, x)).collect::<Result<Vec<_>>>()?;
                        let into_alpha = (0..size).map(|x| system.embed(s, alpha, x)).collect::<Result<Vec<_>>>()?;
                        Ok(json!({"stage": s.to_string(), "size": size, "collapse": collapse, "embedding_into_alpha": into_alpha}))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(json!({
                    "carrier": "finite",
                    "alpha": alpha.to_string(),
                    "stages": stage_json,
                    "collapse_failures": report.failures,
                }))
            }
        }
    }
}

/// Index maps `I → M` for the finite carrier, in lexicographic order.
pub fn index_functions(size: usize, index: FinitePrincipal) -> Vec<Vec<usize>> {
    (0..size.pow(index.size as u32)).map(|i| index_tuple(size, index.size, i)).collect()
}
