//! Cayley graphs `Γ(G)` and their subgraphs.
//!
//! A positive edge is a pair `(g, a)` running from `g` to `g·a`. Subgraphs
//! store positive edges only; the inverse edges are implied.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{ElemId, FinGroup};
use crate::stallings::LabeledGraph;
use crate::words::{Letter, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CayleyEdge {
    pub src: ElemId,
    pub label: u16,
}

impl CayleyEdge {
    pub const fn new(src: ElemId, label: u16) -> Self {
        CayleyEdge { src, label }
    }

    pub fn dst(self, g: &FinGroup) -> Result<ElemId> {
        g.step(self.src, Letter::pos(self.label))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CayleySubgraph {
    pub vertices: BTreeSet<ElemId>,
    pub edges: BTreeSet<CayleyEdge>,
}

/// Signed traversal counts of a path: `+1` per forward, `-1` per backward
/// traversal. Zero entries are dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraversalCount {
    counts: BTreeMap<CayleyEdge, i64>,
}

impl TraversalCount {
    pub fn get(&self, e: CayleyEdge) -> i64 {
        self.counts.get(&e).copied().unwrap_or(0)
    }

    pub fn add(&mut self, e: CayleyEdge, delta: i64) {
        let v = self.counts.entry(e).or_insert(0);
        *v += delta;
        if *v == 0 {
            self.counts.remove(&e);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (CayleyEdge, i64)> + '_ {
        self.counts.iter().map(|(&e, &c)| (e, c))
    }

    pub fn support(&self) -> usize {
        self.counts.len()
    }

    /// `Σ_{e∈D} π(e) − Σ_{e∈C} π(e)`.
    pub fn flow_through(&self, d: &BTreeSet<CayleyEdge>, c: &BTreeSet<CayleyEdge>) -> i64 {
        d.iter().map(|&e| self.get(e)).sum::<i64>() - c.iter().map(|&e| self.get(e)).sum::<i64>()
    }
}

#[derive(Clone, Debug)]
pub struct PathSpan {
    pub span: CayleySubgraph,
    pub end: ElemId,
    pub counts: TraversalCount,
}

impl CayleySubgraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_vertices(vertices: impl IntoIterator<Item = ElemId>) -> Self {
        CayleySubgraph { vertices: vertices.into_iter().collect(), edges: BTreeSet::new() }
    }

    /// Adds `e` together with both of its endpoints.
    pub fn add_edge(&mut self, g: &FinGroup, e: CayleyEdge) -> Result<()> {
        self.vertices.insert(e.src);
        self.vertices.insert(e.dst(g)?);
        self.edges.insert(e);
        Ok(())
    }

    pub fn contains_vertex(&self, v: ElemId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn contains_edge(&self, e: CayleyEdge) -> bool {
        self.edges.contains(&e)
    }

    /// Checks that every edge has both endpoints among the vertices.
    pub fn is_well_formed(&self, g: &FinGroup) -> Result<bool> {
        for &e in &self.edges {
            if !self.vertices.contains(&e.src) || !self.vertices.contains(&e.dst(g)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn intersection(&self, other: &CayleySubgraph) -> CayleySubgraph {
        CayleySubgraph {
            vertices: self.vertices.intersection(&other.vertices).copied().collect(),
            edges: self.edges.intersection(&other.edges).copied().collect(),
        }
    }

    pub fn union(&self, other: &CayleySubgraph) -> CayleySubgraph {
        CayleySubgraph {
            vertices: self.vertices.union(&other.vertices).copied().collect(),
            edges: self.edges.union(&other.edges).copied().collect(),
        }
    }

    pub fn is_subgraph_of(&self, other: &CayleySubgraph) -> bool {
        self.vertices.is_subset(&other.vertices) && self.edges.is_subset(&other.edges)
    }

    /// Undirected connected components over the included edges, each sorted,
    /// listed by least element.
    pub fn components(&self, g: &FinGroup) -> Result<Vec<BTreeSet<ElemId>>> {
        let adj = self.undirected_adjacency(g)?;
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &v in &self.vertices {
            if seen.contains(&v) {
                continue;
            }
            let comp = flood(&adj, v);
            seen.extend(comp.iter().copied());
            out.push(comp);
        }
        Ok(out)
    }

    /// The vertex set of the component containing `v` (empty if `v` is absent).
    pub fn component_of(&self, g: &FinGroup, v: ElemId) -> Result<BTreeSet<ElemId>> {
        if !self.vertices.contains(&v) {
            return Ok(BTreeSet::new());
        }
        Ok(flood(&self.undirected_adjacency(g)?, v))
    }

    pub fn is_connected(&self, g: &FinGroup) -> Result<bool> {
        Ok(self.components(g)?.len() <= 1)
    }

    fn undirected_adjacency(&self, g: &FinGroup) -> Result<BTreeMap<ElemId, Vec<ElemId>>> {
        let mut adj: BTreeMap<ElemId, Vec<ElemId>> = self.vertices.iter().map(|&v| (v, Vec::new())).collect();
        for &e in &self.edges {
            let d = e.dst(g)?;
            adj.entry(e.src).or_default().push(d);
            adj.entry(d).or_default().push(e.src);
        }
        Ok(adj)
    }

    /// Left translation by `x`: `(h, a) ↦ (x·h, a)`.
    pub fn translate(&self, g: &FinGroup, x: ElemId) -> Result<CayleySubgraph> {
        Ok(CayleySubgraph {
            vertices: self.vertices.iter().map(|&v| g.mul(x, v)).collect::<Result<_>>()?,
            edges: self
                .edges
                .iter()
                .map(|e| Ok(CayleyEdge::new(g.mul(x, e.src)?, e.label)))
                .collect::<Result<_>>()?,
        })
    }

    /// The endpoint of the path labelled `w` from `start` if it runs inside
    /// this subgraph.
    pub fn reads(&self, g: &FinGroup, start: ElemId, w: &Word) -> Result<Option<ElemId>> {
        if !self.vertices.contains(&start) {
            return Ok(None);
        }
        let mut v = start;
        for &l in w.letters() {
            let next = g.step(v, l)?;
            let e = if l.inverse { CayleyEdge::new(next, l.base) } else { CayleyEdge::new(v, l.base) };
            if !self.edges.contains(&e) {
                return Ok(None);
            }
            v = next;
        }
        Ok(Some(v))
    }

    /// Graphviz rendering with optional highlighted vertex class `z` and edge
    /// classes `d`, `c`.
    pub fn to_dot(
        &self,
        g: &FinGroup,
        name: &str,
        z: Option<&BTreeSet<ElemId>>,
        d: Option<&BTreeSet<CayleyEdge>>,
        c: Option<&BTreeSet<CayleyEdge>>,
    ) -> Result<String> {
        let mut s = String::new();
        let _ = writeln!(s, "digraph \"{name}\" {{");
        for &v in &self.vertices {
            let label = g.alphabet().format_word(g.witness(v)?);
            let label = if label.is_empty() { "1".to_string() } else { label };
            let fill = if z.is_some_and(|z| z.contains(&v)) { ", style=filled, fillcolor=lightblue" } else { "" };
            let _ = writeln!(s, "  {v} [label=\"{label}\"{fill}];");
        }
        for &e in &self.edges {
            let color = if d.is_some_and(|d| d.contains(&e)) {
                ", color=red"
            } else if c.is_some_and(|c| c.contains(&e)) {
                ", color=blue"
            } else {
                ""
            };
            let _ = writeln!(s, "  {} -> {} [label=\"{}\"{color}];", e.src, e.dst(g)?, g.alphabet().name(e.label));
        }
        s.push_str("}\n");
        Ok(s)
    }
}

fn flood(adj: &BTreeMap<ElemId, Vec<ElemId>>, start: ElemId) -> BTreeSet<ElemId> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &u in adj.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            if seen.insert(u) {
                queue.push_back(u);
            }
        }
    }
    seen
}

/// All of `Γ(G)`: `|G|` vertices and `|G|·|A|` positive edges.
pub fn cayley_graph(g: &FinGroup) -> Result<CayleySubgraph> {
    let n = g.order()? as ElemId;
    Ok(CayleySubgraph {
        vertices: (0..n).collect(),
        edges: (0..n).flat_map(|v| (0..g.rank() as u16).map(move |a| CayleyEdge::new(v, a))).collect(),
    })
}

/// The subgraph spanned by the path labelled `w` from `start`, its endpoint,
/// and its signed traversal counts.
pub fn path_span(g: &FinGroup, start: ElemId, w: &Word) -> Result<PathSpan> {
    let mut span = CayleySubgraph::from_vertices([start]);
    let mut counts = TraversalCount::default();
    let mut v = start;
    for &l in w.letters() {
        let next = g.step(v, l)?;
        let e = if l.inverse { CayleyEdge::new(next, l.base) } else { CayleyEdge::new(v, l.base) };
        span.vertices.insert(next);
        span.edges.insert(e);
        counts.add(e, l.sign());
        v = next;
    }
    Ok(PathSpan { span, end: v, counts })
}

/// `𝒜^G`: projection to `Γ(G)` of the part of `𝒜 × Γ(G)` reachable from
/// `(b, 1)`.
pub fn covering_subgraph(a: &LabeledGraph, g: &FinGroup) -> Result<CayleySubgraph> {
    let b = a.basepoint().ok_or_else(|| Error::Precondition("graph needs a basepoint".into()))?;
    if !a.is_folded() {
        return Err(Error::NotFolded);
    }
    if a.alphabet().len() != g.rank() {
        return Err(Error::AlphabetMismatch { expected: g.rank(), found: a.alphabet().len() });
    }
    let mut out_edges: BTreeMap<(u32, usize), u32> = BTreeMap::new();
    for e in a.edges() {
        out_edges.insert((e.src, Letter::pos(e.label).column()), e.dst);
        out_edges.insert((e.dst, Letter::neg(e.label).column()), e.src);
    }
    let mut sub = CayleySubgraph::from_vertices([g.identity()]);
    let mut seen = BTreeSet::from([(b, g.identity())]);
    let mut queue = VecDeque::from([(b, g.identity())]);
    while let Some((v, x)) = queue.pop_front() {
        for col in 0..2 * g.rank() {
            let Some(&u) = out_edges.get(&(v, col)) else { continue };
            let l = Letter::from_column(col);
            let y = g.step(x, l)?;
            let e = if l.inverse { CayleyEdge::new(y, l.base) } else { CayleyEdge::new(x, l.base) };
            sub.edges.insert(e);
            sub.vertices.insert(y);
            if seen.insert((u, y)) {
                queue.push_back((u, y));
            }
        }
    }
    Ok(sub)
}

/// Product-graph states over `b`: the elements `x` with `(b, x)` reachable
/// from `(b, 1)`. These are the images `[h]_G` of `h ∈ L(𝒜, b)`.
pub fn covering_fiber_over_basepoint(a: &LabeledGraph, g: &FinGroup) -> Result<BTreeSet<ElemId>> {
    let b = a.basepoint().ok_or_else(|| Error::Precondition("graph needs a basepoint".into()))?;
    let mut out_edges: BTreeMap<(u32, usize), u32> = BTreeMap::new();
    for e in a.edges() {
        out_edges.insert((e.src, Letter::pos(e.label).column()), e.dst);
        out_edges.insert((e.dst, Letter::neg(e.label).column()), e.src);
    }
    let mut seen = BTreeSet::from([(b, g.identity())]);
    let mut queue = VecDeque::from([(b, g.identity())]);
    while let Some((v, x)) = queue.pop_front() {
        for col in 0..2 * g.rank() {
            if let Some(&u) = out_edges.get(&(v, col)) {
                let y = g.step(x, Letter::from_column(col))?;
                if seen.insert((u, y)) {
                    queue.push_back((u, y));
                }
            }
        }
    }
    Ok(seen.into_iter().filter(|&(v, _)| v == b).map(|(_, x)| x).collect())
}

/// `D` = positive edges of `x` from `z` to outside `z`; `C` = positive edges
/// of `x` from outside `z` into `z`.
pub fn borders(
    g: &FinGroup,
    x: &CayleySubgraph,
    z: &BTreeSet<ElemId>,
) -> Result<(BTreeSet<CayleyEdge>, BTreeSet<CayleyEdge>)> {
    if !z.is_subset(&x.vertices) {
        return Err(Error::Precondition("Z must be a subset of the vertices of X".into()));
    }
    let mut d = BTreeSet::new();
    let mut c = BTreeSet::new();
    for &e in &x.edges {
        let (s, t) = (z.contains(&e.src), z.contains(&e.dst(g)?));
        if s && !t {
            d.insert(e);
        } else if !s && t {
            c.insert(e);
        }
    }
    Ok((d, c))
}

/// Is `Γ(G) ∖ {e^{±1}, f^{±1}}` connected? Requires the separation
/// assumption and `e ≠ f`.
pub fn connected_without_two_edges(g: &FinGroup, e: CayleyEdge, f: CayleyEdge) -> Result<bool> {
    if !g.is_separated() {
        return Err(Error::Precondition("generators must be nontrivial and pairwise distinct".into()));
    }
    if e == f {
        return Err(Error::Precondition("the two removed edges must differ".into()));
    }
    connected_avoiding(g, &[e, f])
}

pub(crate) fn connected_avoiding(g: &FinGroup, removed: &[CayleyEdge]) -> Result<bool> {
    let t = g.table()?;
    let n = t.order();
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut count = 1;
    let mut queue = VecDeque::from([0 as ElemId]);
    while let Some(v) = queue.pop_front() {
        for col in 0..2 * g.rank() {
            let l = Letter::from_column(col);
            let u = t.step(v, l);
            let e = if l.inverse { CayleyEdge::new(u, l.base) } else { CayleyEdge::new(v, l.base) };
            if removed.contains(&e) || seen[u as usize] {
                continue;
            }
            seen[u as usize] = true;
            count += 1;
            queue.push_back(u);
        }
    }
    Ok(count == n)
}

/// Checks every unordered pair of distinct positive edges; returns the number
/// of pairs and the pairs whose removal disconnects `Γ(G)`.
pub fn two_edge_connectivity_report(g: &FinGroup) -> Result<(usize, Vec<(CayleyEdge, CayleyEdge)>)> {
    let edges: Vec<CayleyEdge> = cayley_graph(g)?.edges.into_iter().collect();
    let pairs: Vec<(CayleyEdge, CayleyEdge)> = edges
        .iter()
        .enumerate()
        .flat_map(|(i, &e)| edges[i + 1..].iter().map(move |&f| (e, f)))
        .collect();
    let failures: Vec<(CayleyEdge, CayleyEdge)> = pairs
        .par_iter()
        .filter_map(|&(e, f)| match connected_without_two_edges(g, e, f) {
            Ok(true) => None,
            _ => Some((e, f)),
        })
        .collect();
    Ok((pairs.len(), failures))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::builtin;
    use crate::stallings::CoreGraph;
    use crate::words::Alphabet;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        Alphabet::standard(2).parse_word(s).unwrap()
    }

    fn ev(g: &FinGroup, s: &str) -> ElemId {
        g.evaluate(&w(s)).unwrap()
    }

    #[test]
    fn cayley_graph_examples() {
        let k = cayley_graph(&builtin::klein()).unwrap();
        assert_eq!((k.vertices.len(), k.edges.len()), (4, 8));
        let t = cayley_graph(&builtin::trivial(2)).unwrap();
        assert_eq!((t.vertices.len(), t.edges.len()), (1, 2));
        let c3 = cayley_graph(&builtin::cyclic(3)).unwrap();
        assert_eq!((c3.vertices.len(), c3.edges.len()), (3, 6));
    }

    #[test]
    fn path_span_examples() {
        let g = builtin::klein();
        let a = ev(&g, "a");
        let p = path_span(&g, 0, &w("a a^-1")).unwrap();
        assert_eq!(p.span.vertices, BTreeSet::from([0, a]));
        assert_eq!(p.counts.get(CayleyEdge::new(0, 0)), 0);
        assert_eq!(p.end, 0);

        let p = path_span(&g, 0, &w("a b")).unwrap();
        assert_eq!(p.span.edges, BTreeSet::from([CayleyEdge::new(0, 0), CayleyEdge::new(a, 1)]));
        assert_eq!(p.end, ev(&g, "a b"));
        assert_eq!(p.counts.get(CayleyEdge::new(0, 0)), 1);
        assert_eq!(p.counts.get(CayleyEdge::new(a, 1)), 1);

        let p = path_span(&g, 0, &w("a a a")).unwrap();
        assert_eq!(p.span.edges, BTreeSet::from([CayleyEdge::new(0, 0), CayleyEdge::new(a, 0)]));
        assert_eq!(p.counts.get(CayleyEdge::new(0, 0)), 2);
        assert_eq!(p.counts.get(CayleyEdge::new(a, 0)), 1);
    }

    #[test]
    fn covering_subgraph_examples() {
        let g = builtin::klein();
        let full = crate::stallings::schreier(&g, &[]).unwrap();
        assert_eq!(covering_subgraph(&full, &g).unwrap(), cayley_graph(&g).unwrap());

        // Product BFS by hand: the b-loop at the second core vertex moves the
        // group coordinate from [a] to [ab], so all four elements appear.
        let core = CoreGraph::of_subgroup(&Alphabet::standard(2), &[w("a a"), w("a b a^-1")]).unwrap();
        let cov = covering_subgraph(core.graph(), &g).unwrap();
        let (a, b, ab) = (ev(&g, "a"), ev(&g, "b"), ev(&g, "a b"));
        assert_eq!(cov.vertices, BTreeSet::from([0, a, b, ab]));
        assert_eq!(
            cov.edges,
            BTreeSet::from([
                CayleyEdge::new(0, 0),
                CayleyEdge::new(a, 0),
                CayleyEdge::new(a, 1),
                CayleyEdge::new(ab, 1),
                CayleyEdge::new(b, 0),
                CayleyEdge::new(ab, 0),
            ])
        );
        assert!(cov.is_connected(&g).unwrap());
        assert_eq!(covering_fiber_over_basepoint(core.graph(), &g).unwrap(), BTreeSet::from([0, b]));

        let loop_a = CoreGraph::of_subgroup(&Alphabet::standard(2), &[w("a")]).unwrap();
        let cov = covering_subgraph(loop_a.graph(), &g).unwrap();
        assert_eq!(cov.vertices, BTreeSet::from([0, a]));
        assert_eq!(cov.edges, BTreeSet::from([CayleyEdge::new(0, 0), CayleyEdge::new(a, 0)]));
    }

    #[test]
    fn covering_contains_generator_images() {
        let alpha = Alphabet::standard(2);
        for g in [builtin::klein(), builtin::s3(), builtin::d4(), builtin::a5()] {
            for gens in [vec![w("a a"), w("a b a^-1")], vec![w("a b a"), w("b b")], vec![w("a b^-1")]] {
                let core = CoreGraph::of_subgroup(&alpha, &gens).unwrap();
                let fiber = covering_fiber_over_basepoint(core.graph(), &g).unwrap();
                for h in &gens {
                    assert!(fiber.contains(&g.evaluate(h).unwrap()));
                }
            }
        }
    }

    #[test]
    fn components_examples() {
        let g = builtin::klein();
        assert_eq!(cayley_graph(&g).unwrap().components(&g).unwrap().len(), 1);
        let ab = ev(&g, "a b");
        let two = CayleySubgraph::from_vertices([0, ab]);
        assert_eq!(two.components(&g).unwrap(), vec![BTreeSet::from([0]), BTreeSet::from([ab])]);
        let x = path_span(&g, 0, &w("a b")).unwrap().span;
        let t = path_span(&g, 0, &w("b a")).unwrap().span;
        assert_eq!(x.intersection(&t).components(&g).unwrap(), vec![BTreeSet::from([0]), BTreeSet::from([ab])]);
    }

    #[test]
    fn borders_examples() {
        let g = builtin::klein();
        let x = path_span(&g, 0, &w("a b")).unwrap().span;
        let (d, c) = borders(&g, &x, &BTreeSet::from([0])).unwrap();
        assert_eq!(d, BTreeSet::from([CayleyEdge::new(0, 0)]));
        assert!(c.is_empty());

        let full = cayley_graph(&g).unwrap();
        let (d, c) = borders(&g, &full, &full.vertices.clone()).unwrap();
        assert!(d.is_empty() && c.is_empty());

        let a = ev(&g, "a");
        let cyc = path_span(&g, 0, &w("a a")).unwrap().span;
        let (d, c) = borders(&g, &cyc, &BTreeSet::from([0])).unwrap();
        assert_eq!(d, BTreeSet::from([CayleyEdge::new(0, 0)]));
        assert_eq!(c, BTreeSet::from([CayleyEdge::new(a, 0)]));
        assert!(borders(&g, &cyc, &BTreeSet::from([ev(&g, "b")])).is_err());
    }

    #[test]
    fn two_edge_removal_examples() {
        let (pairs, fails) = two_edge_connectivity_report(&builtin::klein()).unwrap();
        assert_eq!(pairs, 28);
        assert!(fails.is_empty());
        let (pairs, fails) = two_edge_connectivity_report(&builtin::s3()).unwrap();
        assert_eq!(pairs, 66);
        assert!(fails.is_empty());
        let e = CayleyEdge::new(0, 0);
        assert!(connected_without_two_edges(&builtin::klein(), e, e).is_err());
        assert!(connected_without_two_edges(&builtin::cyclic(2), e, CayleyEdge::new(0, 1)).is_err());
    }

    #[test]
    fn translation_and_reading() {
        let g = builtin::s3();
        let x = path_span(&g, 0, &w("a b b")).unwrap().span;
        let shift = ev(&g, "b");
        let moved = x.translate(&g, shift).unwrap();
        assert_eq!(moved, path_span(&g, shift, &w("a b b")).unwrap().span);
        assert_eq!(x.reads(&g, 0, &w("a b b")).unwrap(), Some(ev(&g, "a b b")));
        assert_eq!(x.reads(&g, 0, &w("b")).unwrap(), None);
        let dot = x.to_dot(&g, "X", Some(&BTreeSet::from([0])), None, None).unwrap();
        assert!(dot.contains("fillcolor"));
    }

    proptest! {
        /// Every path from 1 to a vertex outside Z crosses the border of Z
        /// once more forwards than backwards.
        #[test]
        fn border_flow_identity(word in crate::words::tests::arb_word(2, 24), zbits in any::<u64>(), gi in 0usize..4) {
            let g = [builtin::klein(), builtin::s3(), builtin::d4(), builtin::cyclic(5)][gi].clone();
            let p = path_span(&g, 0, &word).unwrap();
            prop_assume!(p.end != 0);
            let z: BTreeSet<ElemId> = p.span.vertices.iter().copied()
                .filter(|&v| v == 0 || (v != p.end && zbits >> (v % 64) & 1 == 1))
                .collect();
            let (d, c) = borders(&g, &p.span, &z).unwrap();
            prop_assert_eq!(p.counts.flow_through(&d, &c), 1);
        }
    }
}
