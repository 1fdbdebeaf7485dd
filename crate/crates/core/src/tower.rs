//! Iterated universal extensions `G₀ ↞ G₁ ↞ G₂ ↞ ⋯` with
//! `G_{n} = G_{n−1}^{A,C_{p_n}}`.
//!
//! Only `G₀` and `G₁` are ever enumerated. Elements of any level are kept
//! element-locally: a level-`n` element is a level-`(n−1)` element together
//! with a sparse cocycle on the positive edges of `Γ(G_{n−1})`, with the same
//! law as [`crate::extension::CpExtension`].

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constellations::{dissolves_all, sample_constellations, DissolveReport, Mode};
use crate::error::{Error, Result};
use crate::extension::{CpExtension, ExtElement, DEFAULT_HOM_BUDGET};
use crate::groups::{builtin, ElemId, FinGroup, DEFAULT_ENUM_BUDGET};
use crate::rational::ProductOracle;
use crate::stallings::CoreGraph;
use crate::words::{Letter, Word};

pub const DEFAULT_MAX_LEVEL: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TowerElement {
    Base(ElemId),
    Ext {
        below: Box<TowerElement>,
        /// `(tail of the edge at level n−1, letter) → residue`, zeros omitted.
        cocycle: BTreeMap<(TowerElement, u16), u32>,
    },
}

impl TowerElement {
    pub fn level(&self) -> usize {
        match self {
            TowerElement::Base(_) => 0,
            TowerElement::Ext { below, .. } => below.level() + 1,
        }
    }

    /// Cocycle support at each level, bottom first (level 0 has none).
    pub fn supports(&self) -> Vec<usize> {
        match self {
            TowerElement::Base(_) => vec![0],
            TowerElement::Ext { below, cocycle } => {
                let mut s = below.supports();
                s.push(cocycle.len());
                s
            }
        }
    }

    /// Length-prefixed recursive serialization; keys come out sorted, so
    /// equal elements have equal encodings.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            TowerElement::Base(g) => {
                out.push(0);
                out.extend(g.to_le_bytes());
            }
            TowerElement::Ext { below, cocycle } => {
                out.push(1);
                let inner = below.encode();
                out.extend((inner.len() as u32).to_le_bytes());
                out.extend(inner);
                out.extend((cocycle.len() as u32).to_le_bytes());
                for ((x, a), v) in cocycle {
                    let key = x.encode();
                    out.extend((key.len() as u32).to_le_bytes());
                    out.extend(key);
                    out.extend(a.to_le_bytes());
                    out.extend(v.to_le_bytes());
                }
            }
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let (x, rest) = Self::decode_prefix(bytes)?;
        if !rest.is_empty() {
            return Err(Error::Input("trailing bytes after tower element".into()));
        }
        Ok(x)
    }

    fn decode_prefix(bytes: &[u8]) -> Result<(Self, &[u8])> {
        fn take<'a>(b: &'a [u8], n: usize) -> Result<(&'a [u8], &'a [u8])> {
            if b.len() < n {
                return Err(Error::Input("truncated tower element".into()));
            }
            Ok(b.split_at(n))
        }
        fn u32_of(b: &[u8]) -> Result<(u32, &[u8])> {
            let (h, t) = take(b, 4)?;
            Ok((u32::from_le_bytes(h.try_into().expect("4 bytes")), t))
        }
        let (tag, rest) = take(bytes, 1)?;
        match tag[0] {
            0 => {
                let (g, rest) = u32_of(rest)?;
                Ok((TowerElement::Base(g), rest))
            }
            1 => {
                let (n, rest) = u32_of(rest)?;
                let (inner, mut rest) = take(rest, n as usize)?;
                let below = Box::new(Self::decode(inner)?);
                let count;
                (count, rest) = u32_of(rest)?;
                let mut cocycle = BTreeMap::new();
                for _ in 0..count {
                    let (n, r) = u32_of(rest)?;
                    let (key, r) = take(r, n as usize)?;
                    let (a, r) = take(r, 2)?;
                    let (v, r) = u32_of(r)?;
                    if v == 0 {
                        return Err(Error::Input("zero residue in tower element".into()));
                    }
                    cocycle.insert((Self::decode(key)?, u16::from_le_bytes([a[0], a[1]])), v);
                    rest = r;
                }
                Ok((TowerElement::Ext { below, cocycle }, rest))
            }
            t => Err(Error::Input(format!("unknown tower element tag {t}"))),
        }
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.encode())
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        Self::decode(&hex::decode(s).map_err(|e| Error::Input(format!("bad hex: {e}")))?)
    }

    /// The level-1 element corresponding to an [`ExtElement`].
    pub fn from_ext(x: &ExtElement) -> Self {
        TowerElement::Ext {
            below: Box::new(TowerElement::Base(x.base)),
            cocycle: x.cocycle.iter().map(|(e, &v)| ((TowerElement::Base(e.src), e.label), v)).collect(),
        }
    }
}

impl Serialize for TowerElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for TowerElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        TowerElement::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Flat configuration, as read from a config file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerConfig {
    /// Builtin group name.
    pub base: String,
    pub primes: Vec<u32>,
    #[serde(default = "default_max_level")]
    pub max_level: usize,
    #[serde(default = "default_budget_enum")]
    pub budget_enum: u64,
    #[serde(default = "default_budget_homs")]
    pub budget_homs: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default)]
    pub seed: u64,
    /// Negative control: `G_{n+1} = G_n` in campaigns.
    #[serde(default)]
    pub identity: bool,
}

impl TowerConfig {
    /// A config with every optional key at its default.
    pub fn new(base: impl Into<String>, primes: Vec<u32>) -> Self {
        TowerConfig {
            base: base.into(),
            primes,
            max_level: default_max_level(),
            budget_enum: default_budget_enum(),
            budget_homs: default_budget_homs(),
            samples: default_samples(),
            max_len: default_max_len(),
            seed: 0,
            identity: false,
        }
    }
}

fn default_max_level() -> usize {
    DEFAULT_MAX_LEVEL
}
fn default_budget_enum() -> u64 {
    DEFAULT_ENUM_BUDGET
}
fn default_budget_homs() -> u64 {
    DEFAULT_HOM_BUDGET
}
fn default_samples() -> usize {
    10_000
}
fn default_max_len() -> usize {
    12
}

#[derive(Clone, Debug)]
pub struct TowerSpec {
    pub base: FinGroup,
    pub primes: Vec<u32>,
    pub max_level: usize,
    pub budget_enum: u64,
    pub budget_homs: u64,
    pub samples: usize,
    pub max_len: usize,
    pub seed: u64,
    pub identity: bool,
    separated: bool,
}

impl TowerSpec {
    pub fn new(base: FinGroup, primes: Vec<u32>) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::Input("a tower needs at least one prime".into()));
        }
        if let Some(&p) = primes.iter().find(|&&p| p < 2 || (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0)) {
            return Err(Error::Input(format!("{p} is not prime")));
        }
        let separated = base.is_separated();
        Ok(TowerSpec {
            base,
            primes,
            max_level: DEFAULT_MAX_LEVEL,
            budget_enum: DEFAULT_ENUM_BUDGET,
            budget_homs: DEFAULT_HOM_BUDGET,
            samples: default_samples(),
            max_len: default_max_len(),
            seed: 0,
            identity: false,
            separated,
        })
    }

    pub fn from_config(c: &TowerConfig) -> Result<Self> {
        let base = builtin::by_name(&c.base).ok_or_else(|| Error::Input(format!("unknown group {:?}", c.base)))?;
        Self::from_config_with_base(c, base)
    }

    /// As [`Self::from_config`], with the base group supplied directly.
    pub fn from_config_with_base(c: &TowerConfig, base: FinGroup) -> Result<Self> {
        let mut s = Self::new(base.with_budget(c.budget_enum), c.primes.clone())?;
        s.max_level = c.max_level;
        s.budget_enum = c.budget_enum;
        s.budget_homs = c.budget_homs;
        s.samples = c.samples;
        s.max_len = c.max_len;
        s.seed = c.seed;
        s.identity = c.identity;
        Ok(s)
    }

    /// Generators nontrivial and pairwise distinct.
    pub fn is_separated(&self) -> bool {
        self.separated
    }

    /// Highest usable level: one prime per level, capped by `max_level`.
    pub fn top_level(&self) -> usize {
        self.max_level.min(self.primes.len())
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n > self.top_level() {
            return Err(Error::LevelOutOfRange { level: n, max: self.top_level() });
        }
        Ok(())
    }

    fn prime(&self, n: usize) -> u32 {
        self.primes[n - 1]
    }

    pub fn identity_element(&self, n: usize) -> Result<TowerElement> {
        self.check_level(n)?;
        Ok(self.identity_unchecked(n))
    }

    fn identity_unchecked(&self, n: usize) -> TowerElement {
        if n == 0 {
            TowerElement::Base(self.base.identity())
        } else {
            TowerElement::Ext { below: Box::new(self.identity_unchecked(n - 1)), cocycle: BTreeMap::new() }
        }
    }

    fn add(&self, n: usize, c: &mut BTreeMap<(TowerElement, u16), u32>, key: (TowerElement, u16), delta: u32) {
        let p = self.prime(n);
        let v = (c.get(&key).copied().unwrap_or(0) + delta) % p;
        if v == 0 {
            c.remove(&key);
        } else {
            c.insert(key, v);
        }
    }

    /// `x·l`.
    pub fn step(&self, x: &TowerElement, l: Letter) -> Result<TowerElement> {
        if l.base as usize >= self.base.rank() {
            return Err(Error::UnknownLetter(format!("letter index {}", l.base)));
        }
        self.check_level(x.level())?;
        self.step_unchecked(x, l)
    }

    fn step_unchecked(&self, x: &TowerElement, l: Letter) -> Result<TowerElement> {
        match x {
            TowerElement::Base(g) => Ok(TowerElement::Base(self.base.step(*g, l)?)),
            TowerElement::Ext { below, cocycle } => {
                let n = x.level();
                let next = self.step_unchecked(below, l)?;
                let mut c = cocycle.clone();
                if l.inverse {
                    self.add(n, &mut c, (next.clone(), l.base), self.prime(n) - 1);
                } else {
                    self.add(n, &mut c, ((**below).clone(), l.base), 1);
                }
                Ok(TowerElement::Ext { below: Box::new(next), cocycle: c })
            }
        }
    }

    /// `[w]_{G_n}`.
    pub fn evaluate(&self, n: usize, w: &Word) -> Result<TowerElement> {
        let mut x = self.identity_element(n)?;
        for &l in w.letters() {
            x = self.step(&x, l)?;
        }
        Ok(x)
    }

    fn same_level(&self, x: &TowerElement, y: &TowerElement) -> Result<usize> {
        let n = x.level();
        if y.level() != n {
            return Err(Error::Precondition(format!("levels differ: {n} and {}", y.level())));
        }
        self.check_level(n)?;
        Ok(n)
    }

    pub fn mul(&self, x: &TowerElement, y: &TowerElement) -> Result<TowerElement> {
        self.same_level(x, y)?;
        self.mul_unchecked(x, y)
    }

    fn mul_unchecked(&self, x: &TowerElement, y: &TowerElement) -> Result<TowerElement> {
        match (x, y) {
            (TowerElement::Base(a), TowerElement::Base(b)) => Ok(TowerElement::Base(self.base.mul(*a, *b)?)),
            (TowerElement::Ext { below: bx, cocycle: cx }, TowerElement::Ext { below: by, cocycle: cy }) => {
                let n = x.level();
                let mut c = cx.clone();
                for ((t, a), &v) in cy {
                    self.add(n, &mut c, (self.mul_unchecked(bx, t)?, *a), v);
                }
                Ok(TowerElement::Ext { below: Box::new(self.mul_unchecked(bx, by)?), cocycle: c })
            }
            _ => unreachable!("levels checked"),
        }
    }

    pub fn inverse(&self, x: &TowerElement) -> Result<TowerElement> {
        self.check_level(x.level())?;
        self.inverse_unchecked(x)
    }

    fn inverse_unchecked(&self, x: &TowerElement) -> Result<TowerElement> {
        match x {
            TowerElement::Base(g) => Ok(TowerElement::Base(self.base.inverse(*g)?)),
            TowerElement::Ext { below, cocycle } => {
                let p = self.prime(x.level());
                let inv = self.inverse_unchecked(below)?;
                let c = cocycle
                    .iter()
                    .map(|((t, a), &v)| Ok(((self.mul_unchecked(&inv, t)?, *a), p - v)))
                    .collect::<Result<_>>()?;
                Ok(TowerElement::Ext { below: Box::new(inv), cocycle: c })
            }
        }
    }

    /// `φ_n : G_n → G_{n−1}`.
    pub fn project(&self, x: &TowerElement) -> Result<TowerElement> {
        match x {
            TowerElement::Base(_) => Err(Error::LevelOutOfRange { level: 0, max: self.top_level() }),
            TowerElement::Ext { below, .. } => Ok((**below).clone()),
        }
    }

    /// Group equality; exact because the encoding is canonical.
    pub fn equal(&self, x: &TowerElement, y: &TowerElement) -> Result<bool> {
        self.same_level(x, y)?;
        Ok(x == y)
    }

    /// `G_n` as an enumerated group; only levels 0 and 1.
    pub fn level_group(&self, n: usize) -> Result<FinGroup> {
        match n {
            0 => Ok(self.base.clone()),
            1 => {
                self.check_level(1)?;
                CpExtension::new(self.base.clone(), self.prime(1))?.enumerate(self.budget_enum)
            }
            _ => Err(Error::Precondition(format!("level {n} is never enumerated"))),
        }
    }
}

pub fn tower_evaluate(spec: &TowerSpec, n: usize, w: &Word) -> Result<TowerElement> {
    spec.evaluate(n, w)
}

pub fn tower_equal(spec: &TowerSpec, x: &TowerElement, y: &TowerElement) -> Result<bool> {
    spec.equal(x, y)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFailure {
    pub u: String,
    pub v: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum LevelOutcome {
    /// `G_{n+1}` enumerable: full dissolution check.
    Dissolve(DissolveReport),
    /// `G_{n+1}` not enumerable: for sampled constellations of `G_n`, the
    /// generating word pair is checked element-locally in `G_{n+1}`. This is
    /// evidence, not a proof of dissolution.
    PairSample { samples: usize, constellations: usize, separated: usize, failures: Vec<PairFailure> },
    BudgetExceeded { message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub outcome: LevelOutcome,
}

impl LevelReport {
    pub fn passed(&self) -> bool {
        match &self.outcome {
            LevelOutcome::Dissolve(r) => r.all_dissolved(),
            LevelOutcome::PairSample { constellations, separated, .. } => constellations == separated,
            LevelOutcome::BudgetExceeded { .. } => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub base: String,
    pub primes: Vec<u32>,
    pub identity: bool,
    pub seed: u64,
    pub levels: Vec<LevelReport>,
    pub passed: bool,
    pub budget_exceeded: bool,
}

const MAX_LISTED_PAIRS: usize = 20;

/// For each level `n < k`, asks whether `G_{n+1}` dissolves the
/// constellations of `G_n`.
pub fn treelike_campaign(spec: &TowerSpec, k: usize, mode: &Mode) -> Result<CampaignReport> {
    if !spec.identity && k > spec.top_level() {
        return Err(Error::LevelOutOfRange { level: k, max: spec.top_level() });
    }
    let mut levels = Vec::new();
    for n in 0..k {
        let outcome = match campaign_level(spec, n, mode) {
            Ok(o) => o,
            Err(e) if e.is_budget() => LevelOutcome::BudgetExceeded { message: e.to_string() },
            Err(e) => return Err(e),
        };
        levels.push(LevelReport { level: n, outcome });
    }
    let budget_exceeded = levels.iter().any(|l| matches!(l.outcome, LevelOutcome::BudgetExceeded { .. }));
    Ok(CampaignReport {
        base: spec.base.name().to_string(),
        primes: spec.primes.clone(),
        identity: spec.identity,
        seed: spec.seed,
        passed: levels.iter().all(LevelReport::passed),
        budget_exceeded,
        levels,
    })
}

fn campaign_level(spec: &TowerSpec, n: usize, mode: &Mode) -> Result<LevelOutcome> {
    let g = if spec.identity { spec.base.clone() } else { spec.level_group(n)? };
    if spec.identity || n == 0 {
        let h = if spec.identity { g.clone() } else { spec.level_group(n + 1)? };
        return Ok(LevelOutcome::Dissolve(dissolves_all(&h, &g, mode)?));
    }
    let Mode::Sampled { samples, max_len, seed } = *mode else {
        return Err(Error::BudgetExceeded {
            what: format!("G_{} for an exhaustive level-{n} campaign (use sampled mode)", n + 1),
            budget: spec.budget_enum,
        });
    };
    let sampled = sample_constellations(&g, samples, max_len, seed)?;
    let checks = sampled
        .par_iter()
        .map(|s| Ok(spec.evaluate(n + 1, &s.u)? != spec.evaluate(n + 1, &s.v)?))
        .collect::<Result<Vec<bool>>>()?;
    let alphabet = spec.base.alphabet();
    let failures: Vec<PairFailure> = sampled
        .iter()
        .zip(&checks)
        .filter(|(_, &ok)| !ok)
        .take(MAX_LISTED_PAIRS)
        .map(|(s, _)| PairFailure { u: alphabet.format_word(&s.u), v: alphabet.format_word(&s.v) })
        .collect();
    Ok(LevelOutcome::PairSample {
        samples,
        constellations: sampled.len(),
        separated: checks.iter().filter(|&&ok| ok).count(),
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RzLevel {
    pub level: usize,
    pub group_order: usize,
    pub image_orders: Vec<usize>,
    pub product_size: usize,
    pub separated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RzStatus {
    Member,
    Separated,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RzReport {
    pub word: String,
    pub member: bool,
    pub factorization: Option<Vec<String>>,
    pub levels: Vec<RzLevel>,
    pub separated_at: Option<usize>,
    pub status: RzStatus,
    /// Last level examined, or why the search stopped early.
    pub stopped_at_level: Option<usize>,
    pub note: Option<String>,
}

/// Subgroup of `g` generated by `gens`, by closure.
fn subgroup_closure(g: &FinGroup, gens: &[ElemId]) -> Result<BTreeSet<ElemId>> {
    let mut seen = BTreeSet::from([g.identity()]);
    let mut stack = vec![g.identity()];
    while let Some(x) = stack.pop() {
        for &s in gens {
            let y = g.mul(x, s)?;
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    Ok(seen)
}

/// Ground truth for `w ∈ H₁⋯H_k`, then, if `w` is outside, a search for the
/// first enumerable level where the image of `w` leaves `Ĥ₁⋯Ĥ_k`.
pub fn rz_experiment(spec: &TowerSpec, cores: &[CoreGraph], w: &Word) -> Result<RzReport> {
    let alphabet = spec.base.alphabet();
    let fact = ProductOracle::new(cores)?.member(w)?;
    let mut report = RzReport {
        word: alphabet.format_word(w),
        member: fact.is_some(),
        factorization: fact.map(|f| f.factors.iter().map(|h| alphabet.format_word(h)).collect()),
        levels: Vec::new(),
        separated_at: None,
        status: RzStatus::Inconclusive,
        stopped_at_level: None,
        note: None,
    };
    if report.member {
        report.status = RzStatus::Member;
        return Ok(report);
    }
    let bases: Vec<Vec<Word>> = cores.iter().map(CoreGraph::basis).collect();
    for n in 0..=spec.top_level().min(1) {
        let g = match spec.level_group(n) {
            Ok(g) => g,
            Err(e) if e.is_budget() => {
                report.note = Some(format!("level {n}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let images = bases
            .iter()
            .map(|b| subgroup_closure(&g, &b.iter().map(|h| g.evaluate(h)).collect::<Result<Vec<_>>>()?))
            .collect::<Result<Vec<_>>>()?;
        let mut product = BTreeSet::from([g.identity()]);
        for img in &images {
            let mut next = BTreeSet::new();
            for &x in &product {
                for &y in img {
                    next.insert(g.mul(x, y)?);
                }
            }
            product = next;
        }
        let separated = !product.contains(&g.evaluate(w)?);
        report.levels.push(RzLevel {
            level: n,
            group_order: g.order()?,
            image_orders: images.iter().map(BTreeSet::len).collect(),
            product_size: product.len(),
            separated,
        });
        report.stopped_at_level = Some(n);
        if separated {
            report.separated_at = Some(n);
            report.status = RzStatus::Separated;
            break;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellations::random_reduced_word;
    use crate::words::Alphabet;
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    fn w(s: &str) -> Word {
        Alphabet::standard(2).parse_word(s).unwrap()
    }

    fn klein_tower(primes: Vec<u32>) -> TowerSpec {
        TowerSpec::new(builtin::klein(), primes).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let t = klein_tower(vec![2, 2]);
        assert_eq!(t.evaluate(0, &w("a b")).unwrap(), TowerElement::Base(builtin::klein().evaluate(&w("a b")).unwrap()));
        let (x, y) = (t.evaluate(1, &w("a b")).unwrap(), t.evaluate(1, &w("b a")).unwrap());
        assert!(!t.equal(&x, &y).unwrap());
        assert_eq!(t.project(&x).unwrap(), t.project(&y).unwrap());
        let comm = t.evaluate(2, &w("a b a^-1 b^-1")).unwrap();
        assert_ne!(comm, t.identity_element(2).unwrap());
        assert!(comm.supports().iter().all(|&s| s <= 4));
        let long = w("a b a^-1 a b^-1 b b");
        assert!(t.equal(&t.evaluate(2, &long).unwrap(), &t.evaluate(2, &long.reduce()).unwrap()).unwrap());
        assert!(matches!(t.evaluate(3, &w("a")), Err(Error::LevelOutOfRange { .. })));
        assert!(t.equal(&x, &t.evaluate(2, &w("a")).unwrap()).is_err());
        assert!(TowerSpec::new(builtin::klein(), vec![]).is_err());
        assert!(TowerSpec::new(builtin::klein(), vec![6]).is_err());
    }

    #[test]
    fn encoding_round_trips() {
        let t = klein_tower(vec![2, 3]);
        let mut rng = SmallRng::seed_from_u64(5);
        for _ in 0..50 {
            let len = rng.gen_range(0..10);
            let x = t.evaluate(2, &random_reduced_word(&mut rng, 2, len)).unwrap();
            assert_eq!(TowerElement::decode(&x.encode()).unwrap(), x);
            let json = serde_json::to_string(&x).unwrap();
            assert_eq!(serde_json::from_str::<TowerElement>(&json).unwrap(), x);
        }
        assert!(TowerElement::decode(&[1, 0]).is_err());
    }

    #[test]
    fn level_one_matches_extension() {
        let t = TowerSpec::new(builtin::s3(), vec![3]).unwrap();
        let ext = CpExtension::new(builtin::s3(), 3).unwrap();
        let mut rng = SmallRng::seed_from_u64(8);
        for _ in 0..500 {
            let len = rng.gen_range(0..14);
            let u = random_reduced_word(&mut rng, 2, len);
            assert_eq!(t.evaluate(1, &u).unwrap(), TowerElement::from_ext(&ext.evaluate(&u).unwrap()));
        }
    }

    #[test]
    fn level_two_group_laws() {
        let t = TowerSpec::new(builtin::cyclic(3), vec![2, 3]).unwrap();
        let mut rng = SmallRng::seed_from_u64(13);
        let word = |rng: &mut SmallRng| {
            let len = rng.gen_range(0..10);
            random_reduced_word(rng, 2, len)
        };
        for _ in 0..100 {
            let (u, v, x) = (word(&mut rng), word(&mut rng), word(&mut rng));
            let (a, b, c) = (t.evaluate(2, &u).unwrap(), t.evaluate(2, &v).unwrap(), t.evaluate(2, &x).unwrap());
            let left = t.mul(&t.mul(&a, &b).unwrap(), &c).unwrap();
            let right = t.mul(&a, &t.mul(&b, &c).unwrap()).unwrap();
            assert_eq!(left, right);
            assert_eq!(t.evaluate(2, &u.concat(&v)).unwrap(), t.mul(&a, &b).unwrap());
            assert_eq!(t.mul(&a, &t.evaluate(2, &u.invert()).unwrap()).unwrap(), t.identity_element(2).unwrap());
            assert_eq!(t.inverse(&a).unwrap(), t.evaluate(2, &u.invert()).unwrap());
            assert_eq!(t.project(&a).unwrap(), t.evaluate(1, &u).unwrap());
            assert!(a.supports().iter().all(|&s| s <= u.len()));
        }
    }

    #[test]
    fn level_one_order() {
        let t = klein_tower(vec![2]);
        assert_eq!(t.level_group(1).unwrap().order().unwrap(), 128);
        assert!(t.level_group(2).is_err());
    }

    #[test]
    fn campaigns() {
        let r = treelike_campaign(&klein_tower(vec![2]), 1, &Mode::exhaustive()).unwrap();
        assert!(r.passed, "{r:?}");
        let r = treelike_campaign(&TowerSpec::new(builtin::cyclic(3), vec![2]).unwrap(), 1, &Mode::exhaustive()).unwrap();
        assert!(r.passed);
        let mut id = klein_tower(vec![2]);
        id.identity = true;
        let r = treelike_campaign(&id, 1, &Mode::exhaustive()).unwrap();
        assert!(!r.passed);
        let LevelOutcome::Dissolve(d) = &r.levels[0].outcome else { panic!() };
        assert!(d.counterexamples > 0);
        // Level 1 needs G_2, which is only reachable element-locally.
        let r = treelike_campaign(&klein_tower(vec![2, 2]), 2, &Mode::exhaustive()).unwrap();
        assert!(r.budget_exceeded && !r.passed);
        let sampled = Mode::Sampled { samples: 300, max_len: 10, seed: 2 };
        let r = treelike_campaign(&klein_tower(vec![2, 2]), 2, &sampled).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(matches!(r.levels[1].outcome, LevelOutcome::PairSample { constellations, .. } if constellations > 0));
    }

    #[test]
    fn rz_examples() {
        let a2 = Alphabet::standard(2);
        let ha = CoreGraph::of_subgroup(&a2, &[w("a")]).unwrap();
        let hb = CoreGraph::of_subgroup(&a2, &[w("b")]).unwrap();
        let t = klein_tower(vec![2]);
        let r = rz_experiment(&t, &[ha.clone(), hb.clone()], &w("a b")).unwrap();
        assert_eq!(r.status, RzStatus::Member);
        let r = rz_experiment(&t, &[ha.clone(), ha.clone()], &w("a a a")).unwrap();
        assert_eq!(r.status, RzStatus::Member);
        let r = rz_experiment(&t, &[ha, hb], &w("b a")).unwrap();
        assert!(!r.member);
        assert_eq!(r.separated_at, Some(1));
        assert!(!r.levels[0].separated && r.levels[0].product_size == 4);
        assert_eq!(r.levels[1].product_size, 16);
    }
}
