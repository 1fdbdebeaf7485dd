//! Constellations `(X, g, T)` in `Γ(G)` and their dissolution by groups
//! mapping onto `G`.
//!
//! `H ↠ G` dissolves `(X, g, T)` when `[u]_H ≠ [v]_H` for every `u` labelling
//! a path `1 → g` inside `X` and every `v` labelling such a path inside `T`.
//! The quantifier over word pairs is decided by lifting: a path from 1 in
//! `Γ(G)` lifts uniquely to a path from 1 in `Γ(H)`, so the values `[u]_H`
//! are exactly the vertices over `g` in the component of 1 of the preimage
//! of `X`. Hence `H` dissolves the constellation iff those fibers for `X`
//! and for `T` are disjoint, and every common vertex yields a counterexample
//! pair read off the two lifted BFS trees.

use std::collections::{BTreeSet, VecDeque};

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cayley::{cayley_graph, path_span, CayleyEdge, CayleySubgraph};
use crate::error::{Error, Result};
use crate::groups::{canonical_morphism, ElemId, FinGroup};
use crate::words::{Letter, Word};

/// Default cap on positive edges for exhaustive enumeration.
pub const DEFAULT_EDGE_BUDGET: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Constellation {
    pub g: ElemId,
    pub x: CayleySubgraph,
    pub t: CayleySubgraph,
}

/// Checks the three defining conditions: `X` and `T` connected, `1` and `g`
/// in both, and distinct `X∩T`-components for `1` and `g`.
pub fn is_constellation(group: &FinGroup, x: &CayleySubgraph, g: ElemId, t: &CayleySubgraph) -> Result<bool> {
    let one = group.identity();
    if g == one {
        return Ok(false);
    }
    for s in [x, t] {
        if !s.contains_vertex(one) || !s.contains_vertex(g) || !s.is_connected(group)? {
            return Ok(false);
        }
    }
    Ok(!x.intersection(t).component_of(group, one)?.contains(&g))
}

impl Constellation {
    pub fn new(group: &FinGroup, x: CayleySubgraph, g: ElemId, t: CayleySubgraph) -> Result<Self> {
        if !is_constellation(group, &x, g, &t)? {
            return Err(Error::Precondition("not a constellation".into()));
        }
        Ok(Constellation { g, x, t })
    }

    /// The component of 1 in `X ∩ T`.
    pub fn inner_component(&self, group: &FinGroup) -> Result<BTreeSet<ElemId>> {
        self.x.intersection(&self.t).component_of(group, group.identity())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    Exhaustive { edge_budget: usize },
    Sampled { samples: usize, max_len: usize, seed: u64 },
}

impl Mode {
    pub fn exhaustive() -> Self {
        Mode::Exhaustive { edge_budget: DEFAULT_EDGE_BUDGET }
    }
}

/// A sampled constellation together with the word pair that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledConstellation {
    pub constellation: Constellation,
    pub u: Word,
    pub v: Word,
}

/// Random reduced word drawn by a non-backtracking walk.
pub fn random_reduced_word<R: Rng>(rng: &mut R, rank: usize, len: usize) -> Word {
    let mut w = Word::empty();
    while w.len() < len {
        let l = Letter { base: rng.gen_range(0..rank as u16), inverse: rng.gen() };
        if w.letters().last() != Some(&l.inv()) {
            w.push(l);
        }
    }
    w
}

/// Draws `samples` pairs `(u, v)` of reduced words with `[u]_G = [v]_G ≠ 1`
/// and keeps those whose path spans form a constellation. `v` is a random
/// reduced word completed by a shortest path to `[u]_G`.
pub fn sample_constellations(group: &FinGroup, samples: usize, max_len: usize, seed: u64) -> Result<Vec<SampledConstellation>> {
    let mut rng = SmallRng::seed_from_u64(seed);
    let mut out = Vec::new();
    let max_len = max_len.max(1);
    for _ in 0..samples {
        let len = rng.gen_range(1..=max_len);
        let u = random_reduced_word(&mut rng, group.rank(), len);
        let g = group.evaluate(&u)?;
        if g == group.identity() {
            continue;
        }
        let len = rng.gen_range(0..=max_len);
        let r = random_reduced_word(&mut rng, group.rank(), len);
        let rg = group.evaluate(&r)?;
        let bridge = group.witness(group.mul(group.inverse(rg)?, g)?)?.clone();
        let v = r.mul(&bridge);
        let x = path_span(group, 0, &u)?.span;
        let t = path_span(group, 0, &v)?.span;
        if is_constellation(group, &x, g, &t)? {
            out.push(SampledConstellation { constellation: Constellation { g, x, t }, u, v });
        }
    }
    Ok(out)
}

/// Edge-subset bookkeeping for exhaustive enumeration over bitmasks.
struct MaskSpace {
    edges: Vec<CayleyEdge>,
    ends: Vec<(u32, u32)>,
    /// Vertices reachable from 1 using only the masked edges.
    comp_of_one: Vec<u64>,
    vertex_mask: Vec<u64>,
    /// Masks whose spanned subgraph is connected and contains 1.
    connected: Vec<u32>,
}

impl MaskSpace {
    fn new(group: &FinGroup, edge_budget: usize) -> Result<Self> {
        let edges: Vec<CayleyEdge> = cayley_graph(group)?.edges.into_iter().collect();
        let n = group.order()?;
        if edges.len() > edge_budget || edges.len() > 24 || n > 64 {
            return Err(Error::BudgetExceeded {
                what: format!("exhaustive constellations of Γ({}) with {} positive edges", group.name(), edges.len()),
                budget: edge_budget as u64,
            });
        }
        let ends: Vec<(u32, u32)> = edges.iter().map(|e| Ok((e.src, e.dst(group)?))).collect::<Result<_>>()?;
        let m = edges.len();
        let total = 1usize << m;
        let mut comp_of_one = vec![0u64; total];
        let mut vertex_mask = vec![0u64; total];
        for mask in 0..total {
            let mut vm = 0u64;
            for (i, &(s, d)) in ends.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    vm |= 1 << s | 1 << d;
                }
            }
            vertex_mask[mask] = vm;
            let mut comp = 1u64;
            loop {
                let before = comp;
                for (i, &(s, d)) in ends.iter().enumerate() {
                    if mask >> i & 1 == 1 && (comp >> s & 1 == 1 || comp >> d & 1 == 1) {
                        comp |= 1 << s | 1 << d;
                    }
                }
                if comp == before {
                    break;
                }
            }
            comp_of_one[mask] = comp;
        }
        let connected = (1..total as u32)
            .filter(|&mk| comp_of_one[mk as usize] == vertex_mask[mk as usize] && vertex_mask[mk as usize] & 1 == 1)
            .collect();
        Ok(MaskSpace { edges, ends, comp_of_one, vertex_mask, connected })
    }

    fn subgraph(&self, mask: u32) -> CayleySubgraph {
        let mut s = CayleySubgraph::from_vertices([0]);
        for (i, e) in self.edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.edges.insert(*e);
                s.vertices.insert(self.ends[i].0);
                s.vertices.insert(self.ends[i].1);
            }
        }
        s
    }

    /// `(g, X mask, T mask)` for every constellation, in canonical order.
    fn for_each(&self, n: usize, mut f: impl FnMut(ElemId, u32, u32)) {
        for g in 1..n as u32 {
            let through: Vec<u32> =
                self.connected.iter().copied().filter(|&mk| self.vertex_mask[mk as usize] >> g & 1 == 1).collect();
            for &xm in &through {
                for &tm in &through {
                    if self.comp_of_one[(xm & tm) as usize] >> g & 1 == 0 {
                        f(g, xm, tm);
                    }
                }
            }
        }
    }
}

/// Enumerates constellations. Exhaustive mode lists every pair of connected
/// edge subsets through 1 and `g` for each `g ≠ 1`; sampled mode returns the
/// distinct constellations found by [`sample_constellations`].
pub fn enumerate_constellations(group: &FinGroup, mode: &Mode) -> Result<Vec<Constellation>> {
    match *mode {
        Mode::Exhaustive { edge_budget } => {
            let space = MaskSpace::new(group, edge_budget)?;
            let mut out = Vec::new();
            space.for_each(group.order()?, |g, xm, tm| {
                out.push(Constellation { g, x: space.subgraph(xm), t: space.subgraph(tm) });
            });
            Ok(out)
        }
        Mode::Sampled { samples, max_len, seed } => {
            let found: BTreeSet<Constellation> = sample_constellations(group, samples, max_len, seed)?
                .into_iter()
                .map(|s| s.constellation)
                .collect();
            Ok(found.into_iter().collect())
        }
    }
}

/// Number of constellations in exhaustive mode, without materializing them.
pub fn count_constellations(group: &FinGroup, edge_budget: usize) -> Result<u64> {
    let space = MaskSpace::new(group, edge_budget)?;
    let mut count = 0u64;
    space.for_each(group.order()?, |_, _, _| count += 1);
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    DissolvedCertified,
    Counterexample { u: Word, v: Word },
    Inconclusive { reason: String },
}

/// Component of 1 in the preimage of a subgraph of `Γ(G)` inside `Γ(H)`,
/// with BFS labels from 1.
struct Lift {
    labels: Vec<Option<Word>>,
}

fn lift(h: &FinGroup, phi: &[ElemId], sub_edges: &dyn Fn(CayleyEdge) -> bool) -> Result<Lift> {
    let th = h.table()?;
    let mut labels: Vec<Option<Word>> = vec![None; th.order()];
    labels[0] = Some(Word::empty());
    let mut queue = VecDeque::from([0 as ElemId]);
    while let Some(x) = queue.pop_front() {
        for col in 0..2 * h.rank() {
            let l = Letter::from_column(col);
            let y = th.step(x, l);
            if labels[y as usize].is_some() {
                continue;
            }
            let below = if l.inverse { CayleyEdge::new(phi[y as usize], l.base) } else { CayleyEdge::new(phi[x as usize], l.base) };
            if sub_edges(below) {
                let mut w = labels[x as usize].clone().expect("visited");
                w.push(l);
                labels[y as usize] = Some(w);
                queue.push_back(y);
            }
        }
    }
    Ok(Lift { labels })
}

/// Decides whether `H` dissolves `c`, given the canonical morphism `φ`.
fn dissolves_with(h: &FinGroup, phi: &[ElemId], c: &Constellation, max_witness_len: usize) -> Result<Verdict> {
    let lx = lift(h, phi, &|e| c.x.contains_edge(e))?;
    let lt = lift(h, phi, &|e| c.t.contains_edge(e))?;
    let common = (0..phi.len())
        .find(|&y| phi[y] == c.g && lx.labels[y].is_some() && lt.labels[y].is_some());
    Ok(match common {
        None => Verdict::DissolvedCertified,
        Some(y) => {
            let u = lx.labels[y].clone().expect("checked");
            let v = lt.labels[y].clone().expect("checked");
            if u.len() > max_witness_len || v.len() > max_witness_len {
                Verdict::Inconclusive {
                    reason: format!("not dissolved, but witness words exceed length bound {max_witness_len}"),
                }
            } else {
                Verdict::Counterexample { u, v }
            }
        }
    })
}

/// Does `H` dissolve the constellation `c` of `G`? `max_witness_len` bounds
/// only the length of extracted counterexample words.
pub fn dissolves(h: &FinGroup, g: &FinGroup, c: &Constellation, max_witness_len: usize) -> Result<Verdict> {
    let phi = canonical_morphism(h, g)?.ok_or(Error::MissingMorphism)?;
    dissolves_with(h, &phi, c, max_witness_len)
}

/// Re-verifies a counterexample from scratch: `u` reads `1 → g` in `X`, `v`
/// reads `1 → g` in `T`, and `[u]_H = [v]_H`.
pub fn verify_counterexample(h: &FinGroup, g: &FinGroup, c: &Constellation, u: &Word, v: &Word) -> Result<bool> {
    Ok(c.x.reads(g, 0, u)? == Some(c.g)
        && c.t.reads(g, 0, v)? == Some(c.g)
        && h.evaluate(u)? == h.evaluate(v)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub constellation: Constellation,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DissolveReport {
    pub h: String,
    pub g: String,
    pub mode: Mode,
    pub constellations: u64,
    pub dissolved: u64,
    pub counterexamples: u64,
    pub inconclusive: u64,
    /// Up to [`MAX_LISTED_FAILURES`] failures, in canonical order.
    pub failures: Vec<Failure>,
}

pub const MAX_LISTED_FAILURES: usize = 20;

impl DissolveReport {
    pub fn all_dissolved(&self) -> bool {
        self.dissolved == self.constellations
    }

    /// Exhaustive and every constellation dissolved.
    pub fn is_complete_proof(&self) -> bool {
        matches!(self.mode, Mode::Exhaustive { .. }) && self.all_dissolved()
    }
}

/// Runs [`dissolves`] over all constellations of `G` in the given mode.
pub fn dissolves_all(h: &FinGroup, g: &FinGroup, mode: &Mode) -> Result<DissolveReport> {
    let phi = canonical_morphism(h, g)?.ok_or(Error::MissingMorphism)?;
    let mut report = DissolveReport {
        h: h.name().to_string(),
        g: g.name().to_string(),
        mode: mode.clone(),
        constellations: 0,
        dissolved: 0,
        counterexamples: 0,
        inconclusive: 0,
        failures: Vec::new(),
    };
    match *mode {
        Mode::Exhaustive { edge_budget } => exhaustive_dissolve(h, g, &phi, edge_budget, &mut report)?,
        Mode::Sampled { .. } => {
            let cs = enumerate_constellations(g, mode)?;
            let verdicts = cs
                .par_iter()
                .map(|c| dissolves_with(h, &phi, c, usize::MAX))
                .collect::<Result<Vec<_>>>()?;
            for (c, v) in cs.into_iter().zip(verdicts) {
                report.record(c, v);
            }
        }
    }
    Ok(report)
}

impl DissolveReport {
    fn record(&mut self, c: Constellation, v: Verdict) {
        self.constellations += 1;
        match v {
            Verdict::DissolvedCertified => {
                self.dissolved += 1;
                return;
            }
            Verdict::Counterexample { .. } => self.counterexamples += 1,
            Verdict::Inconclusive { .. } => self.inconclusive += 1,
        }
        if self.failures.len() < MAX_LISTED_FAILURES {
            self.failures.push(Failure { constellation: c, verdict: v });
        }
    }
}

/// Exhaustive mode over bitmasks: one lift per connected edge subset, then a
/// fiber intersection per constellation.
fn exhaustive_dissolve(h: &FinGroup, g: &FinGroup, phi: &[ElemId], edge_budget: usize, report: &mut DissolveReport) -> Result<()> {
    let space = MaskSpace::new(g, edge_budget)?;
    let n_h = phi.len();
    let words = n_h.div_ceil(64);
    // Lifted component of 1 for every connected mask, as a bitset over H.
    let lifts: Vec<(u32, Vec<u64>)> = space
        .connected
        .par_iter()
        .map(|&mk| {
            let l = lift(h, phi, &|e| {
                space.edges.binary_search(&e).is_ok_and(|i| mk >> i & 1 == 1)
            })?;
            let mut bits = vec![0u64; words];
            for (y, lab) in l.labels.iter().enumerate() {
                if lab.is_some() {
                    bits[y / 64] |= 1 << (y % 64);
                }
            }
            Ok((mk, bits))
        })
        .collect::<Result<_>>()?;
    let index: std::collections::HashMap<u32, usize> = lifts.iter().enumerate().map(|(i, (mk, _))| (*mk, i)).collect();
    let n_g = g.order()?;
    let mut fiber = vec![vec![0u64; words]; n_g];
    for (y, &x) in phi.iter().enumerate() {
        fiber[x as usize][y / 64] |= 1 << (y % 64);
    }
    let mut bad: Vec<(ElemId, u32, u32)> = Vec::new();
    let mut total = 0u64;
    space.for_each(n_g, |gg, xm, tm| {
        total += 1;
        let (bx, bt, bf) = (&lifts[index[&xm]].1, &lifts[index[&tm]].1, &fiber[gg as usize]);
        if (0..words).any(|i| bx[i] & bt[i] & bf[i] != 0) {
            bad.push((gg, xm, tm));
        }
    });
    report.constellations = total - bad.len() as u64;
    report.dissolved = report.constellations;
    for (gg, xm, tm) in bad {
        let c = Constellation { g: gg, x: space.subgraph(xm), t: space.subgraph(tm) };
        let v = dissolves_with(h, phi, &c, usize::MAX)?;
        report.record(c, v);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{builtin, subdirect};
    use crate::words::Alphabet;

    fn w(s: &str) -> Word {
        Alphabet::standard(2).parse_word(s).unwrap()
    }

    fn ab_ba(g: &FinGroup) -> Constellation {
        let x = path_span(g, 0, &w("a b")).unwrap().span;
        let t = path_span(g, 0, &w("b a")).unwrap().span;
        Constellation::new(g, x, g.evaluate(&w("a b")).unwrap(), t).unwrap()
    }

    #[test]
    fn predicate_examples() {
        let g = builtin::klein();
        let c = ab_ba(&g);
        assert!(is_constellation(&g, &c.x, c.g, &c.t).unwrap());
        assert!(!is_constellation(&g, &c.x, c.g, &c.x).unwrap());
        assert!(!is_constellation(&g, &c.x, 0, &c.t).unwrap());
        // X must contain g
        let a = path_span(&g, 0, &w("a")).unwrap().span;
        assert!(!is_constellation(&g, &a, c.g, &c.t).unwrap());
    }

    #[test]
    fn exhaustive_enumeration_of_klein() {
        let g = builtin::klein();
        let all = enumerate_constellations(&g, &Mode::exhaustive()).unwrap();
        assert!(!all.is_empty());
        assert!(all.contains(&ab_ba(&g)));
        assert_eq!(count_constellations(&g, 16).unwrap(), all.len() as u64);
        // Every enumerated triple satisfies the predicate; cross-check the
        // bitmask pipeline against the set-based predicate on all of them.
        for c in &all {
            assert!(is_constellation(&g, &c.x, c.g, &c.t).unwrap());
        }
        // Brute force over all pairs with the set-based predicate.
        let space = MaskSpace::new(&g, 16).unwrap();
        let mut brute = 0;
        for gg in 1..4 {
            for xm in 0..256u32 {
                let x = space.subgraph(xm);
                if !x.is_connected(&g).unwrap() || !x.contains_vertex(gg) {
                    continue;
                }
                for tm in 0..256u32 {
                    let t = space.subgraph(tm);
                    if is_constellation(&g, &x, gg, &t).unwrap() {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(brute, all.len());
    }

    #[test]
    fn trivial_group_has_none() {
        let g = builtin::trivial(2);
        assert!(enumerate_constellations(&g, &Mode::exhaustive()).unwrap().is_empty());
        assert!(enumerate_constellations(&g, &Mode::Sampled { samples: 100, max_len: 5, seed: 1 }).unwrap().is_empty());
    }

    #[test]
    fn sampled_c3_finds_one() {
        let g = builtin::cyclic(3);
        let found = enumerate_constellations(&g, &Mode::Sampled { samples: 10_000, max_len: 6, seed: 3 }).unwrap();
        assert!(!found.is_empty());
    }

    #[test]
    fn exhaustive_budget() {
        let err = enumerate_constellations(&builtin::s4(), &Mode::exhaustive()).unwrap_err();
        assert!(err.is_budget());
    }

    #[test]
    fn self_dissolution_fails_with_sound_counterexample() {
        let g = builtin::klein();
        let c = ab_ba(&g);
        match dissolves(&g, &g, &c, 32).unwrap() {
            Verdict::Counterexample { u, v } => assert!(verify_counterexample(&g, &g, &c, &u, &v).unwrap()),
            other => panic!("expected a counterexample, got {other:?}"),
        }
        let report = dissolves_all(&g, &g, &Mode::exhaustive()).unwrap();
        assert!(report.counterexamples > 0);
        assert!(!report.all_dissolved());
        for f in &report.failures {
            if let Verdict::Counterexample { u, v } = &f.verdict {
                assert!(verify_counterexample(&g, &g, &f.constellation, u, v).unwrap());
            }
        }
    }

    #[test]
    fn missing_morphism_is_an_error() {
        let g = builtin::klein();
        let c = ab_ba(&g);
        assert!(matches!(dissolves(&builtin::cyclic(4), &g, &c, 8), Err(Error::MissingMorphism)));
    }

    #[test]
    fn sampled_and_exhaustive_reports_agree_on_failures() {
        let g = builtin::klein();
        let sampled = dissolves_all(&g, &g, &Mode::Sampled { samples: 2000, max_len: 6, seed: 9 }).unwrap();
        assert!(sampled.constellations > 0);
        assert!(sampled.counterexamples > 0);
    }

    #[test]
    fn subdirect_dissolves_what_a_factor_dissolves() {
        let g = builtin::klein();
        let d4 = builtin::d4();
        let sd = subdirect(&[d4.clone(), g.clone()]).unwrap();
        let mut dissolved_by_d4 = 0;
        for c in enumerate_constellations(&g, &Mode::exhaustive()).unwrap() {
            if dissolves(&d4, &g, &c, 64).unwrap() == Verdict::DissolvedCertified {
                dissolved_by_d4 += 1;
                assert_eq!(dissolves(&sd, &g, &c, 64).unwrap(), Verdict::DissolvedCertified);
            }
        }
        assert!(dissolved_by_d4 > 0);
    }
}
