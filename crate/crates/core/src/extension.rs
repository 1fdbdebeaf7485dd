//! The `A`-universal `S`-extension `G^{A,S} = F/R(S)` of a finite group `G`.
//!
//! For `S = C_p` the group is modelled concretely: an element is a pair
//! `(g, c)` with `g ∈ G` and `c` a finitely supported function from the
//! positive edges of `Γ(G)` to `Z/p`, multiplied by
//! `(g₁, c₁)(g₂, c₂) = (g₁g₂, c₁ + g₁·c₂)` where `(g₁·c)(g₁x, a) = c(x, a)`.
//! A word evaluates to its endpoint together with its signed edge
//! traversal counts mod `p`. For a closed path the counts are determined by
//! the counts on the non-tree edges of any spanning tree, and those are the
//! exponent sums over the corresponding free basis of `R`; so the model is
//! `F/R^p[R,R]`, which is `G^{A,C_p}`.
//!
//! For a general simple `S` no normal form is kept. Equality of `[u]` and
//! `[v]` is decided by rewriting `uv⁻¹` over the free basis of `R` and testing
//! every homomorphism `R → S`, which is what `R(S)` is cut out by.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cayley::{borders, path_span, CayleyEdge};
use crate::constellations::Constellation;
use crate::error::{Error, Result};
use crate::groups::{ElemId, FinGroup};
use crate::rewriting::{exponent_sums, nielsen_basis, reduce_sequence, rewrite, spanning_tree_avoiding, SpanningTree};
use crate::words::{Letter, Word};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExtElement {
    pub base: ElemId,
    /// Nonzero residues mod `p`, keyed by positive edge.
    pub cocycle: BTreeMap<CayleyEdge, u32>,
}

/// `G^{A,C_p}` for an enumerable `G` and prime `p`.
#[derive(Clone, Debug)]
pub struct CpExtension {
    base: FinGroup,
    p: u32,
}

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

fn add_mod(map: &mut BTreeMap<CayleyEdge, u32>, e: CayleyEdge, delta: u32, p: u32) {
    let v = (map.get(&e).copied().unwrap_or(0) + delta) % p;
    if v == 0 {
        map.remove(&e);
    } else {
        map.insert(e, v);
    }
}

impl CpExtension {
    pub fn new(base: FinGroup, p: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Input(format!("{p} is not prime")));
        }
        base.table()?;
        Ok(CpExtension { base, p })
    }

    pub fn base(&self) -> &FinGroup {
        &self.base
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    pub fn identity(&self) -> ExtElement {
        ExtElement { base: self.base.identity(), cocycle: BTreeMap::new() }
    }

    /// `x·l`: walk one step in `Γ(G)`, recording the traversal.
    pub fn step(&self, x: &ExtElement, l: Letter) -> Result<ExtElement> {
        let next = self.base.step(x.base, l)?;
        let mut cocycle = x.cocycle.clone();
        if l.inverse {
            add_mod(&mut cocycle, CayleyEdge::new(next, l.base), self.p - 1, self.p);
        } else {
            add_mod(&mut cocycle, CayleyEdge::new(x.base, l.base), 1, self.p);
        }
        Ok(ExtElement { base: next, cocycle })
    }

    /// The image of the generator `l`.
    pub fn letter(&self, l: Letter) -> Result<ExtElement> {
        self.step(&self.identity(), l)
    }

    /// `[w]` in `G^{A,C_p}`.
    pub fn evaluate(&self, w: &Word) -> Result<ExtElement> {
        let mut x = self.identity();
        for &l in w.letters() {
            x = self.step(&x, l)?;
        }
        Ok(x)
    }

    /// `g·c`: left translation of a cocycle.
    fn translate(&self, g: ElemId, c: &BTreeMap<CayleyEdge, u32>) -> Result<BTreeMap<CayleyEdge, u32>> {
        c.iter().map(|(e, &v)| Ok((CayleyEdge::new(self.base.mul(g, e.src)?, e.label), v))).collect()
    }

    pub fn mul(&self, x: &ExtElement, y: &ExtElement) -> Result<ExtElement> {
        let mut cocycle = x.cocycle.clone();
        for (e, v) in self.translate(x.base, &y.cocycle)? {
            add_mod(&mut cocycle, e, v, self.p);
        }
        Ok(ExtElement { base: self.base.mul(x.base, y.base)?, cocycle })
    }

    pub fn inverse(&self, x: &ExtElement) -> Result<ExtElement> {
        let ginv = self.base.inverse(x.base)?;
        let cocycle = self
            .translate(ginv, &x.cocycle)?
            .into_iter()
            .map(|(e, v)| (e, (self.p - v) % self.p))
            .collect();
        Ok(ExtElement { base: ginv, cocycle })
    }

    /// The projection `(g, c) ↦ g`.
    pub fn project(&self, x: &ExtElement) -> ElemId {
        x.base
    }

    /// `|G| · p^r` with `r = |G|(|A| − 1) + 1`.
    pub fn predicted_order(&self) -> Result<BigUint> {
        Ok(ext_order(self.base.order()?, self.base.rank(), self.p))
    }

    /// Enumerates the subgroup generated by the letter images as a
    /// [`FinGroup`] (right-regular permutation form).
    pub fn enumerate(&self, budget: u64) -> Result<FinGroup> {
        let name = format!("{}^(A,C{})", self.base.name(), self.p);
        FinGroup::from_closure(
            name,
            self.base.alphabet().clone(),
            self.identity(),
            |x, l| self.step(x, l).expect("letters of the base alphabet"),
            budget,
        )
    }

    /// Enumerates the closure and returns the element list in id order too.
    pub fn enumerate_elements(&self, budget: u64) -> Result<Vec<ExtElement>> {
        let (keys, _) = crate::groups::enumerate_closure(
            self.base.rank(),
            self.identity(),
            |x, l| self.step(x, l).expect("letters of the base alphabet"),
            budget,
            "extension",
        )?;
        Ok(keys)
    }
}

/// `|G^{A,C_p}| = |G| · p^{|G|(|A|−1)+1}`.
pub fn ext_order(group_order: usize, rank: usize, p: u32) -> BigUint {
    let r = group_order * (rank.max(1) - 1) + 1;
    BigUint::from(group_order) * BigUint::from(p).pow(r as u32)
}

/// Equality oracle mode for a general simple `S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SMode {
    /// Test every homomorphism; needs `|S|^k ≤ budget` for the `k` basis
    /// elements that occur.
    Exact { budget: u64 },
    /// Random assignments; only distinctness can be certified.
    Witness { samples: usize, seed: u64 },
}

pub const DEFAULT_HOM_BUDGET: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SVerdict {
    Equal,
    /// Already distinct in `G`.
    DistinctInBase,
    /// An assignment of basis elements (index, element of `S`) under which
    /// `uv⁻¹` evaluates to a nonidentity element.
    Distinct { assignment: Vec<(usize, ElemId)> },
    ProbablyEqual { samples: usize },
}

impl SVerdict {
    pub fn is_distinct(&self) -> bool {
        matches!(self, SVerdict::DistinctInBase | SVerdict::Distinct { .. })
    }
}

fn check_simple(s: &FinGroup) -> Result<()> {
    if !s.is_simple()? {
        return Err(Error::Precondition(format!("{} is not a simple group", s.name())));
    }
    Ok(())
}

/// Decides `[u] = [v]` in `G^{A,S}`.
pub fn s_equal(g: &FinGroup, s: &FinGroup, u: &Word, v: &Word, mode: SMode) -> Result<SVerdict> {
    check_simple(s)?;
    if g.evaluate(u)? != g.evaluate(v)? {
        return Ok(SVerdict::DistinctInBase);
    }
    let tree = SpanningTree::bfs(g, &[])?;
    let basis = nielsen_basis(g, &tree)?;
    let seq = reduce_sequence(&rewrite(g, &tree, &basis, &u.concat(&v.invert()))?);
    if seq.is_empty() {
        return Ok(SVerdict::Equal);
    }
    let support: Vec<usize> = seq.iter().map(|&(i, _)| i).collect::<BTreeSet<_>>().into_iter().collect();
    let slot: BTreeMap<usize, usize> = support.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let n_s = s.order()? as u64;
    // Inverses precomputed; the word is evaluated left to right.
    let inv: Vec<ElemId> = (0..n_s as ElemId).map(|x| s.inverse(x)).collect::<Result<_>>()?;
    let eval = |assign: &[ElemId]| -> Result<ElemId> {
        let mut acc = s.identity();
        for &(i, e) in &seq {
            let x = assign[slot[&i]];
            acc = s.mul(acc, if e < 0 { inv[x as usize] } else { x })?;
        }
        Ok(acc)
    };
    let describe = |assign: &[ElemId]| support.iter().copied().zip(assign.iter().copied()).collect();
    match mode {
        SMode::Exact { budget } => {
            let k = support.len() as u32;
            let total = n_s.checked_pow(k).filter(|&t| t <= budget).ok_or_else(|| Error::BudgetExceeded {
                what: format!("homomorphisms from a rank-{k} free group to {}", s.name()),
                budget,
            })?;
            let decode = |mut idx: u64| -> Vec<ElemId> {
                (0..k)
                    .map(|_| {
                        let x = (idx % n_s) as ElemId;
                        idx /= n_s;
                        x
                    })
                    .collect()
            };
            let hit = (0..total)
                .into_par_iter()
                .find_first(|&idx| eval(&decode(idx)).map(|x| x != s.identity()).unwrap_or(true));
            Ok(match hit {
                Some(idx) => {
                    let a = decode(idx);
                    eval(&a)?;
                    SVerdict::Distinct { assignment: describe(&a) }
                }
                None => SVerdict::Equal,
            })
        }
        SMode::Witness { samples, seed } => {
            let mut rng = SmallRng::seed_from_u64(seed);
            for _ in 0..samples {
                let a: Vec<ElemId> = (0..support.len()).map(|_| rng.gen_range(0..n_s as ElemId)).collect();
                if eval(&a)? != s.identity() {
                    return Ok(SVerdict::Distinct { assignment: describe(&a) });
                }
            }
            Ok(SVerdict::ProbablyEqual { samples })
        }
    }
}

/// Is `a^m b^n` the identity of the two-generator free object of the
/// formation generated by `S`? The free object embeds in `S^{S×S}` with `a`,
/// `b` the two coordinate projections, so this checks `x^m y^n = 1` for all
/// `x, y ∈ S`.
pub fn free_object_pair_check(s: &FinGroup, m: i64, n: i64) -> Result<bool> {
    check_simple(s)?;
    let size = s.order()? as ElemId;
    let xm: Vec<ElemId> = (0..size).map(|x| s.pow(x, m)).collect::<Result<_>>()?;
    let yn: Vec<ElemId> = (0..size).map(|y| s.pow(y, n)).collect::<Result<_>>()?;
    for &a in &xm {
        for &b in &yn {
            if s.mul(a, b)? != s.identity() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Witness that `G^{A,S}` separates `u` from `v` for a constellation with
/// `u` running in `X` and `v` in `T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub e: CayleyEdge,
    pub f: CayleyEdge,
    /// `û(e) mod o`.
    pub u_exp: i64,
    /// `v̂(f) mod o`.
    pub v_exp: i64,
    pub o: u64,
    pub z: BTreeSet<ElemId>,
    pub d: BTreeSet<CayleyEdge>,
    pub c: BTreeSet<CayleyEdge>,
    pub d_prime: BTreeSet<CayleyEdge>,
    pub c_prime: BTreeSet<CayleyEdge>,
    /// `Σ_D û − Σ_C û`, always 1.
    pub flow_x: i64,
    /// `Σ_{D'} v̂ − Σ_{C'} v̂`, always 1.
    pub flow_t: i64,
    pub tree: BTreeSet<CayleyEdge>,
    /// Exponent sums of `ẽ` and `f̃` in the rewriting of `uv⁻¹`.
    pub rewrite_e_exp: i64,
    pub rewrite_f_exp: i64,
}

/// Builds the dissolving certificate for `(X, g, T)` and the pair `u, v`.
pub fn dissolving_certificate(
    g: &FinGroup,
    c: &Constellation,
    u: &Word,
    v: &Word,
    s: &FinGroup,
) -> Result<Certificate> {
    if !g.is_separated() {
        return Err(Error::Precondition("generators must be nontrivial and pairwise distinct".into()));
    }
    check_simple(s)?;
    if c.x.reads(g, 0, u)? != Some(c.g) {
        return Err(Error::Precondition("u does not label a path 1 → g inside X".into()));
    }
    if c.t.reads(g, 0, v)? != Some(c.g) {
        return Err(Error::Precondition("v does not label a path 1 → g inside T".into()));
    }
    let z = c.inner_component(g)?;
    if z.contains(&c.g) {
        return Err(Error::Precondition("not a constellation".into()));
    }
    let (d, cc) = borders(g, &c.x, &z)?;
    let (d_prime, c_prime) = borders(g, &c.t, &z)?;
    let u_hat = path_span(g, 0, u)?.counts;
    let v_hat = path_span(g, 0, v)?.counts;
    let flow_x = u_hat.flow_through(&d, &cc);
    let flow_t = v_hat.flow_through(&d_prime, &c_prime);
    if flow_x != 1 || flow_t != 1 {
        return Err(Error::TheoremViolation(format!("border flows are {flow_x} and {flow_t}, expected 1")));
    }
    let o = s.exponent()?;
    let oi = o as i64;
    let pick = |edges: BTreeSet<CayleyEdge>, counts: &crate::cayley::TraversalCount| {
        edges.into_iter().find(|&e| counts.get(e).rem_euclid(oi) != 0)
    };
    let e = pick(d.union(&cc).copied().collect(), &u_hat)
        .ok_or_else(|| Error::TheoremViolation("no border edge of X with count prime to o".into()))?;
    let f = pick(d_prime.union(&c_prime).copied().collect(), &v_hat)
        .ok_or_else(|| Error::TheoremViolation("no border edge of T with count prime to o".into()))?;
    if e == f {
        return Err(Error::TheoremViolation("the borders of X and T share an edge".into()));
    }
    let tree = spanning_tree_avoiding(g, e, f)?;
    let basis = nielsen_basis(g, &tree)?;
    let seq = rewrite(g, &tree, &basis, &u.concat(&v.invert()))?;
    let sums = exponent_sums(&seq, basis.len());
    let rewrite_e_exp = sums[basis.index_of(e).expect("e is not a tree edge")];
    let rewrite_f_exp = sums[basis.index_of(f).expect("f is not a tree edge")];
    if rewrite_e_exp != u_hat.get(e) || rewrite_f_exp != -v_hat.get(f) {
        return Err(Error::TheoremViolation("rewritten exponent sums differ from traversal counts".into()));
    }
    Ok(Certificate {
        e,
        f,
        u_exp: u_hat.get(e).rem_euclid(oi),
        v_exp: v_hat.get(f).rem_euclid(oi),
        o,
        z,
        d,
        c: cc,
        d_prime,
        c_prime,
        flow_x,
        flow_t,
        tree: tree.edges,
        rewrite_e_exp,
        rewrite_f_exp,
    })
}
