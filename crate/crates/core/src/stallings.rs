//! `A`-labelled graphs: Stallings folding, core graphs, Schreier graphs and
//! completions.
//!
//! Only positive edges are stored. Each positive edge `(src, a, dst)` stands
//! for the pair `e, e⁻¹`, so reading `a⁻¹` at `dst` leads back to `src`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{ElemId, FinGroup};
use crate::words::{Alphabet, Letter, Word};

pub type Vertex = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub src: Vertex,
    pub label: u16,
    pub dst: Vertex,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    alphabet: Alphabet,
    vertices: BTreeSet<Vertex>,
    edges: BTreeSet<Edge>,
    basepoint: Option<Vertex>,
}

impl LabeledGraph {
    pub fn new(alphabet: Alphabet) -> Self {
        LabeledGraph { alphabet, vertices: BTreeSet::new(), edges: BTreeSet::new(), basepoint: None }
    }

    pub fn from_parts(
        alphabet: Alphabet,
        vertices: impl IntoIterator<Item = Vertex>,
        edges: impl IntoIterator<Item = Edge>,
        basepoint: Option<Vertex>,
    ) -> Result<Self> {
        let mut g = LabeledGraph::new(alphabet);
        g.vertices.extend(vertices);
        for e in edges {
            g.add_edge(e)?;
        }
        if let Some(b) = basepoint {
            if !g.vertices.contains(&b) {
                return Err(Error::Input(format!("basepoint {b} is not a vertex")));
            }
        }
        g.basepoint = basepoint;
        Ok(g)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn vertices(&self) -> &BTreeSet<Vertex> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn basepoint(&self) -> Option<Vertex> {
        self.basepoint
    }

    pub fn set_basepoint(&mut self, b: Vertex) {
        self.vertices.insert(b);
        self.basepoint = Some(b);
    }

    pub fn add_vertex(&mut self, v: Vertex) {
        self.vertices.insert(v);
    }

    pub fn add_edge(&mut self, e: Edge) -> Result<()> {
        if e.label as usize >= self.alphabet.len() {
            return Err(Error::UnknownLetter(format!("label index {}", e.label)));
        }
        self.vertices.insert(e.src);
        self.vertices.insert(e.dst);
        self.edges.insert(e);
        Ok(())
    }

    fn fresh_vertex(&self) -> Vertex {
        self.vertices.iter().next_back().map_or(0, |v| v + 1)
    }

    /// Number of edge ends at `v` over `Ã` (a loop counts twice).
    pub fn degree(&self, v: Vertex) -> usize {
        self.edges.iter().map(|e| (e.src == v) as usize + (e.dst == v) as usize).sum()
    }

    /// `(vertex, column) → neighbours` over both orientations.
    fn adjacency(&self) -> HashMap<(Vertex, usize), Vec<Vertex>> {
        let mut adj: HashMap<(Vertex, usize), Vec<Vertex>> = HashMap::new();
        for e in &self.edges {
            adj.entry((e.src, Letter::pos(e.label).column())).or_default().push(e.dst);
            adj.entry((e.dst, Letter::neg(e.label).column())).or_default().push(e.src);
        }
        adj
    }

    /// At most one edge per vertex, letter and direction.
    pub fn is_folded(&self) -> bool {
        self.adjacency().values().all(|v| v.len() <= 1)
    }

    /// Folded, and every vertex has degree `2|A|`.
    pub fn is_complete(&self) -> bool {
        self.is_folded() && self.vertices.iter().all(|&v| self.degree(v) == 2 * self.alphabet.len())
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.vertices.iter().next() else {
            return true;
        };
        self.reachable_from(start).len() == self.vertices.len()
    }

    fn reachable_from(&self, start: Vertex) -> BTreeSet<Vertex> {
        let adj = self.adjacency();
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for col in 0..2 * self.alphabet.len() {
                for &u in adj.get(&(v, col)).map(Vec::as_slice).unwrap_or(&[]) {
                    if seen.insert(u) {
                        queue.push_back(u);
                    }
                }
            }
        }
        seen
    }

    /// Follows `w` from `start` in a folded graph; `None` if some edge is missing.
    pub fn read(&self, start: Vertex, w: &Word) -> Option<Vertex> {
        let adj = self.adjacency();
        let mut v = start;
        for l in w.letters() {
            v = *adj.get(&(v, l.column()))?.first()?;
        }
        Some(v)
    }

    /// One closed path per generator at a fresh basepoint `0`.
    pub fn bouquet(alphabet: Alphabet, generators: &[Word]) -> Result<Self> {
        let mut g = LabeledGraph::new(alphabet);
        g.set_basepoint(0);
        let mut next = 1;
        for w in generators {
            let w = w.reduce();
            if w.is_empty() {
                return Err(Error::Input("generator reduces to the empty word".into()));
            }
            let n = w.len();
            let mut prev = 0;
            for (i, l) in w.letters().iter().enumerate() {
                let target = if i + 1 == n {
                    0
                } else {
                    next += 1;
                    next - 1
                };
                let e = if l.inverse {
                    Edge { src: target, label: l.base, dst: prev }
                } else {
                    Edge { src: prev, label: l.base, dst: target }
                };
                g.add_edge(e)?;
                prev = target;
            }
        }
        Ok(g)
    }

    /// Stallings folding: identifies edges sharing a start (or an end) and a
    /// label until none remain. Each class is represented by its least id.
    pub fn fold(&self) -> LabeledGraph {
        let ids: Vec<Vertex> = self.vertices.iter().copied().collect();
        let pos: HashMap<Vertex, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut parent: Vec<usize> = (0..ids.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let edges: Vec<(usize, u16, usize)> =
            self.edges.iter().map(|e| (pos[&e.src], e.label, pos[&e.dst])).collect();
        loop {
            let mut merged = false;
            let mut out: HashMap<(usize, u16), usize> = HashMap::new();
            let mut inc: HashMap<(usize, u16), usize> = HashMap::new();
            for &(s, a, d) in &edges {
                let (s, d) = (find(&mut parent, s), find(&mut parent, d));
                for (map, key, other) in [(&mut out, (s, a), d), (&mut inc, (d, a), s)] {
                    match map.get(&key) {
                        Some(&o) => {
                            let (x, y) = (find(&mut parent, o), find(&mut parent, other));
                            if x != y {
                                let (lo, hi) = if x < y { (x, y) } else { (y, x) };
                                parent[hi] = lo;
                                merged = true;
                            }
                        }
                        None => {
                            map.insert(key, other);
                        }
                    }
                }
            }
            if !merged {
                break;
            }
        }
        let mut rep = |v: Vertex| ids[find(&mut parent, pos[&v])];
        let mut out = LabeledGraph::new(self.alphabet.clone());
        for &v in &self.vertices {
            let r = rep(v);
            out.vertices.insert(r);
        }
        for e in &self.edges {
            out.edges.insert(Edge { src: rep(e.src), label: e.label, dst: rep(e.dst) });
        }
        out.basepoint = self.basepoint.map(rep);
        out
    }

    /// Removes non-basepoint vertices of degree at most one until none remain.
    pub fn trim(&self) -> LabeledGraph {
        let mut g = self.clone();
        loop {
            let spurs: Vec<Vertex> = g
                .vertices
                .iter()
                .copied()
                .filter(|&v| Some(v) != g.basepoint && g.degree(v) <= 1)
                .collect();
            if spurs.is_empty() {
                return g;
            }
            for v in spurs {
                g.vertices.remove(&v);
                g.edges.retain(|e| e.src != v && e.dst != v);
            }
        }
    }

    /// Relabels vertices by BFS from the basepoint (letters in column order).
    /// Two folded connected basepointed graphs are isomorphic iff their
    /// canonical forms are equal.
    pub fn canonical_form(&self) -> LabeledGraph {
        let Some(b) = self.basepoint else {
            return self.clone();
        };
        let adj = self.adjacency();
        let mut order: HashMap<Vertex, Vertex> = HashMap::from([(b, 0)]);
        let mut queue = VecDeque::from([b]);
        while let Some(v) = queue.pop_front() {
            for col in 0..2 * self.alphabet.len() {
                let mut nbrs = adj.get(&(v, col)).cloned().unwrap_or_default();
                nbrs.sort_unstable();
                for u in nbrs {
                    if !order.contains_key(&u) {
                        order.insert(u, order.len() as Vertex);
                        queue.push_back(u);
                    }
                }
            }
        }
        let mut next = order.len() as Vertex;
        for &v in &self.vertices {
            order.entry(v).or_insert_with(|| {
                next += 1;
                next - 1
            });
        }
        LabeledGraph {
            alphabet: self.alphabet.clone(),
            vertices: self.vertices.iter().map(|v| order[v]).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge { src: order[&e.src], label: e.label, dst: order[&e.dst] })
                .collect(),
            basepoint: Some(0),
        }
    }

    /// Is `self` a labelled subgraph of `other` (same vertex ids)?
    pub fn is_subgraph_of(&self, other: &LabeledGraph) -> bool {
        self.vertices.is_subset(&other.vertices) && self.edges.is_subset(&other.edges)
    }

    /// Completes a folded graph by pairing, for every letter, the vertices
    /// lacking an outgoing edge with those lacking an incoming one, both in
    /// increasing id order. For folded finite graphs the two lists have the
    /// same length, so no vertex is added.
    pub fn complete_arbitrary(&self) -> Result<LabeledGraph> {
        if !self.is_folded() {
            return Err(Error::NotFolded);
        }
        let mut g = self.clone();
        if g.vertices.is_empty() {
            g.vertices.insert(0);
        }
        for a in 0..self.alphabet.len() as u16 {
            let has_out: BTreeSet<Vertex> = g.edges.iter().filter(|e| e.label == a).map(|e| e.src).collect();
            let has_in: BTreeSet<Vertex> = g.edges.iter().filter(|e| e.label == a).map(|e| e.dst).collect();
            let mut missing_out: Vec<Vertex> = g.vertices.iter().copied().filter(|v| !has_out.contains(v)).collect();
            let mut missing_in: Vec<Vertex> = g.vertices.iter().copied().filter(|v| !has_in.contains(v)).collect();
            if missing_out.len() != missing_in.len() {
                // Unreachable for folded input; one auxiliary vertex absorbs a surplus of one.
                let extra = g.fresh_vertex();
                g.vertices.insert(extra);
                if missing_out.len() + 1 == missing_in.len() {
                    missing_out.push(extra);
                } else if missing_in.len() + 1 == missing_out.len() {
                    missing_in.push(extra);
                } else {
                    return Err(Error::NotFolded);
                }
            }
            for (&s, &d) in missing_out.iter().zip(&missing_in) {
                g.edges.insert(Edge { src: s, label: a, dst: d });
            }
        }
        debug_assert!(g.is_complete());
        Ok(g)
    }

    /// The permutation group generated by the letter actions of a complete
    /// graph, on the vertices in increasing id order.
    pub fn transition_group(&self) -> Result<FinGroup> {
        if !self.is_complete() {
            return Err(Error::NotComplete);
        }
        let ids: Vec<Vertex> = self.vertices.iter().copied().collect();
        let pos: HashMap<Vertex, u32> = ids.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
        let mut gens = vec![vec![0u32; ids.len()]; self.alphabet.len()];
        for e in &self.edges {
            gens[e.label as usize][pos[&e.src] as usize] = pos[&e.dst];
        }
        FinGroup::new("transition group", self.alphabet.clone(), ids.len(), gens)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            alphabet: Some(self.alphabet.names().to_vec()),
            vertices: self.vertices.iter().copied().collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson { src: e.src, label: self.alphabet.name(e.label).to_string(), dst: e.dst })
                .collect(),
            basepoint: self.basepoint,
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let alphabet = match &json.alphabet {
            Some(names) => Alphabet::new(names.clone())?,
            None => {
                // Single-letter labels a, b, c, …
                let mut size = 2;
                for e in &json.edges {
                    let mut chars = e.label.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c @ 'a'..='z'), None) => size = size.max(c as usize - 'a' as usize + 1),
                        _ => {
                            return Err(Error::Input(format!(
                                "edge label {:?} needs an explicit \"alphabet\" field",
                                e.label
                            )))
                        }
                    }
                }
                Alphabet::standard(size)
            }
        };
        let mut edges = Vec::with_capacity(json.edges.len());
        for (i, e) in json.edges.iter().enumerate() {
            let label = alphabet
                .index_of(&e.label)
                .ok_or_else(|| Error::Input(format!("edges[{i}].label: unknown letter {:?}", e.label)))?;
            edges.push(Edge { src: e.src, label, dst: e.dst });
        }
        Self::from_parts(alphabet, json.vertices.iter().copied(), edges, json.basepoint)
    }

    /// Graphviz rendering; positive edges only, the basepoint drawn doubled.
    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph \"{name}\" {{");
        let _ = writeln!(s, "  rankdir=LR;");
        for &v in &self.vertices {
            let shape = if Some(v) == self.basepoint { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  {v} [shape={shape}];");
        }
        for e in &self.edges {
            let _ = writeln!(s, "  {} -> {} [label=\"{}\"];", e.src, e.dst, self.alphabet.name(e.label));
        }
        s.push_str("}\n");
        s
    }
}

/// JSON graph format: `{vertices:[ids], edges:[{src,label,dst}], basepoint}`,
/// with an optional `alphabet` listing the symbol names in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<String>>,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<EdgeJson>,
    #[serde(default)]
    pub basepoint: Option<Vertex>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub src: Vertex,
    pub label: String,
    pub dst: Vertex,
}

/// The core graph of a finitely generated subgroup: folded, connected, with
/// a basepoint, and no vertex other than the basepoint of degree one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreGraph {
    graph: LabeledGraph,
}

impl CoreGraph {
    /// Core of a folded connected basepointed graph.
    pub fn from_folded(g: &LabeledGraph) -> Result<Self> {
        if g.basepoint.is_none() {
            return Err(Error::Precondition("core graph needs a basepoint".into()));
        }
        if !g.is_folded() {
            return Err(Error::NotFolded);
        }
        Ok(CoreGraph { graph: g.trim() })
    }

    /// `core(fold(bouquet(generators)))`. An empty generator list gives the
    /// trivial subgroup (a single vertex).
    pub fn of_subgroup(alphabet: &Alphabet, generators: &[Word]) -> Result<Self> {
        if generators.is_empty() {
            let mut g = LabeledGraph::new(alphabet.clone());
            g.set_basepoint(0);
            return Ok(CoreGraph { graph: g });
        }
        Self::from_folded(&LabeledGraph::bouquet(alphabet.clone(), generators)?.fold())
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.graph
    }

    pub fn into_graph(self) -> LabeledGraph {
        self.graph
    }

    pub fn basepoint(&self) -> Vertex {
        self.graph.basepoint.expect("core graphs carry a basepoint")
    }

    /// Does `w` (reduced) label a closed path at the basepoint?
    pub fn member(&self, w: &Word) -> bool {
        let w = w.reduce();
        self.graph.read(self.basepoint(), &w) == Some(self.basepoint())
    }

    pub fn complete_arbitrary(&self) -> Result<LabeledGraph> {
        self.graph.complete_arbitrary()
    }

    /// Reduced words labelling closed paths at the basepoint, up to `max_len`.
    pub fn elements_up_to(&self, max_len: usize) -> Vec<Word> {
        let g = &self.graph;
        let adj = g.adjacency();
        let b = self.basepoint();
        let mut out = Vec::new();
        let mut stack: Vec<(Vertex, Word)> = vec![(b, Word::empty())];
        while let Some((v, w)) = stack.pop() {
            if v == b {
                out.push(w.clone());
            }
            if w.len() == max_len {
                continue;
            }
            for col in 0..2 * g.alphabet.len() {
                let l = Letter::from_column(col);
                if w.letters().last() == Some(&l.inv()) {
                    continue;
                }
                if let Some(&u) = adj.get(&(v, col)).and_then(|n| n.first()) {
                    let mut w2 = w.clone();
                    w2.push(l);
                    stack.push((u, w2));
                }
            }
        }
        out
    }

    /// Free basis read off a BFS spanning tree: one reduced word
    /// `path(src)·a·path(dst)⁻¹` per non-tree edge.
    pub fn basis(&self) -> Vec<Word> {
        let g = &self.graph;
        let b = self.basepoint();
        let mut path: BTreeMap<Vertex, Word> = BTreeMap::from([(b, Word::empty())]);
        let mut tree = BTreeSet::new();
        let mut queue = VecDeque::from([b]);
        while let Some(v) = queue.pop_front() {
            for e in &g.edges {
                let (next, l) = if e.src == v {
                    (e.dst, Letter::pos(e.label))
                } else if e.dst == v {
                    (e.src, Letter::neg(e.label))
                } else {
                    continue;
                };
                if !path.contains_key(&next) {
                    let mut w = path[&v].clone();
                    w.push(l);
                    path.insert(next, w);
                    tree.insert(*e);
                    queue.push_back(next);
                }
            }
        }
        g.edges
            .iter()
            .filter(|e| !tree.contains(*e))
            .map(|e| {
                let mut w = path[&e.src].clone();
                w.push(Letter::pos(e.label));
                w.concat(&path[&e.dst].invert()).reduce()
            })
            .collect()
    }

    /// Rank of the subgroup: `|E| − |V| + 1`.
    pub fn rank(&self) -> usize {
        self.graph.edges.len() + 1 - self.graph.vertices.len()
    }
}

/// The Schreier graph of `H = ⟨h_gens⟩` in `G`: vertices are the right cosets
/// `Hg`, with `a`-edges `Hg → Hga`, basepoint `H`. Vertex ids are assigned in
/// order of the least element id of each coset, so `H` is vertex 0.
pub fn schreier(g: &FinGroup, h_gens: &[Word]) -> Result<LabeledGraph> {
    let n = g.order()?;
    let gens = h_gens.iter().map(|w| g.evaluate(w)).collect::<Result<Vec<_>>>()?;
    // H by closure under right multiplication by its generators.
    let mut in_h = vec![false; n];
    in_h[0] = true;
    let mut h_elems = vec![0 as ElemId];
    let mut i = 0;
    while i < h_elems.len() {
        let x = h_elems[i];
        for &s in &gens {
            let y = g.mul(x, s)?;
            if !in_h[y as usize] {
                in_h[y as usize] = true;
                h_elems.push(y);
            }
        }
        i += 1;
    }
    let mut coset_of: Vec<Option<Vertex>> = vec![None; n];
    let mut count = 0;
    for x in 0..n as ElemId {
        if coset_of[x as usize].is_none() {
            for &h in &h_elems {
                let y = g.mul(h, x)?;
                coset_of[y as usize] = Some(count);
            }
            count += 1;
        }
    }
    let coset = |x: ElemId| coset_of[x as usize].expect("every element lies in a coset");
    let mut graph = LabeledGraph::new(g.alphabet().clone());
    graph.vertices.extend(0..count);
    let t = g.table()?;
    for x in 0..n as ElemId {
        for a in 0..g.rank() as u16 {
            graph.edges.insert(Edge { src: coset(x), label: a, dst: coset(t.step(x, Letter::pos(a))) });
        }
    }
    graph.basepoint = Some(0);
    Ok(graph)
}

/// Groups edges by label for display.
pub fn edges_by_label(g: &LabeledGraph) -> BTreeMap<String, Vec<(Vertex, Vertex)>> {
    let mut m: BTreeMap<String, Vec<(Vertex, Vertex)>> = BTreeMap::new();
    for e in g.edges() {
        m.entry(g.alphabet().name(e.label).to_string()).or_default().push((e.src, e.dst));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::builtin;
    use crate::groups::canonical_morphism;
    use proptest::prelude::*;
    use rand::rngs::SmallRng;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    fn ab() -> Alphabet {
        Alphabet::standard(2)
    }

    fn w(s: &str) -> Word {
        ab().parse_word(s).unwrap()
    }

    fn e(src: Vertex, label: u16, dst: Vertex) -> Edge {
        Edge { src, label, dst }
    }

    fn h_core() -> CoreGraph {
        CoreGraph::of_subgroup(&ab(), &[w("a a"), w("a b a^-1")]).unwrap()
    }

    #[test]
    fn bouquet_examples() {
        let g = LabeledGraph::bouquet(ab(), &[w("a")]).unwrap();
        assert_eq!(g.edges().iter().copied().collect::<Vec<_>>(), vec![e(0, 0, 0)]);
        let g = LabeledGraph::bouquet(ab(), &[w("a a"), w("a b a^-1")]).unwrap();
        assert_eq!(g.vertices().len(), 4);
        assert_eq!(g.edges().len(), 5);
        assert_eq!(g.degree(0), 4);
        let g = LabeledGraph::bouquet(ab(), &[w("b")]).unwrap();
        assert_eq!(g.edges().iter().copied().collect::<Vec<_>>(), vec![e(0, 1, 0)]);
        assert!(LabeledGraph::bouquet(ab(), &[w("a a^-1")]).is_err());
    }

    #[test]
    fn fold_examples() {
        let folded = LabeledGraph::bouquet(ab(), &[w("a a"), w("a b a^-1")]).unwrap().fold();
        let expected =
            LabeledGraph::from_parts(ab(), [0, 1], [e(0, 0, 1), e(1, 0, 0), e(1, 1, 1)], Some(0)).unwrap();
        assert_eq!(folded.canonical_form(), expected.canonical_form());
        assert!(folded.is_folded());
        assert_eq!(folded.fold(), folded);
        let twice = LabeledGraph::bouquet(ab(), &[w("a"), w("a")]).unwrap().fold();
        assert_eq!(twice.edges().len(), 1);
        assert_eq!(twice.vertices().len(), 1);
    }

    #[test]
    fn core_examples() {
        let g = LabeledGraph::bouquet(ab(), &[w("a b a^-1")]).unwrap().fold();
        let c = CoreGraph::from_folded(&g).unwrap();
        assert_eq!(c.graph(), &g);
        let spur = LabeledGraph::from_parts(ab(), [0, 1, 2], [e(0, 0, 0), e(0, 1, 1), e(1, 0, 2)], Some(0)).unwrap();
        let c = CoreGraph::from_folded(&spur).unwrap();
        assert_eq!(c.graph().vertices().len(), 1);
        assert_eq!(CoreGraph::from_folded(c.graph()).unwrap(), c);
    }

    #[test]
    fn basis_regenerates_the_core() {
        for gens in [vec![w("a a"), w("a b a^-1")], vec![w("a b"), w("b a"), w("a a")], vec![w("b")]] {
            let c = CoreGraph::of_subgroup(&ab(), &gens).unwrap();
            let basis = c.basis();
            assert_eq!(basis.len(), c.rank());
            assert!(basis.iter().all(|h| c.member(h)));
            let again = CoreGraph::of_subgroup(&ab(), &basis).unwrap();
            assert_eq!(again.graph().canonical_form(), c.graph().canonical_form());
        }
        assert!(CoreGraph::of_subgroup(&ab(), &[]).unwrap().basis().is_empty());
    }

    /// Brute force: all reduced products of at most `k` generators or inverses.
    fn products_up_to(gens: &[Word], k: usize) -> Vec<Word> {
        let mut pool: Vec<Word> = gens.iter().flat_map(|g| [g.clone(), g.invert()]).collect();
        pool.push(Word::empty());
        let mut level = vec![Word::empty()];
        let mut all = level.clone();
        for _ in 0..k {
            level = level.iter().flat_map(|x| pool.iter().map(move |y| x.mul(y))).collect();
            all.extend(level.iter().cloned());
        }
        all.sort();
        all.dedup();
        all
    }

    #[test]
    fn member_examples() {
        let c = h_core();
        assert!(c.member(&w("a a")));
        assert!(!c.member(&w("b")));
        assert!(!products_up_to(&[w("a a"), w("a b a^-1")], 4).contains(&w("b")));
        assert!(c.member(&w("a b b a^-1")));
        assert!(c.member(&w("a^-1 a")));
    }

    #[test]
    fn schreier_examples() {
        let k = builtin::klein();
        let trivial = schreier(&k, &[]).unwrap();
        assert_eq!(trivial.vertices().len(), 4);
        assert_eq!(trivial.edges().len(), 8);
        assert!(trivial.is_complete());
        let whole = schreier(&k, &[w("a"), w("b")]).unwrap();
        assert_eq!(whole.vertices().len(), 1);
        assert_eq!(whole.edges().len(), 2);
        let s3 = schreier(&builtin::s3(), &[w("a")]).unwrap();
        assert_eq!(s3.vertices().len(), 3);
        assert!(s3.is_complete());
    }

    #[test]
    fn completion_examples() {
        let cayley = schreier(&builtin::klein(), &[]).unwrap();
        assert_eq!(cayley.complete_arbitrary().unwrap(), cayley);
        let c = h_core();
        let done = c.complete_arbitrary().unwrap();
        let b = c.basepoint();
        let mut expected = c.graph().clone();
        expected.add_edge(e(b, 1, b)).unwrap();
        assert_eq!(done, expected);
        let loop_a = CoreGraph::of_subgroup(&ab(), &[w("a")]).unwrap();
        let done = loop_a.complete_arbitrary().unwrap();
        assert_eq!(done.edges().len(), 2);
        assert!(done.edges().contains(&e(0, 1, 0)));
    }

    #[test]
    fn transition_group_examples() {
        let t = schreier(&builtin::klein(), &[]).unwrap().transition_group().unwrap();
        assert_eq!(t.order().unwrap(), 4);
        let one = schreier(&builtin::klein(), &[w("a"), w("b")]).unwrap().transition_group().unwrap();
        assert_eq!(one.order().unwrap(), 1);
        let t = h_core().complete_arbitrary().unwrap().transition_group().unwrap();
        assert_eq!(t.order().unwrap(), 2);
        assert!(matches!(h_core().graph().transition_group(), Err(Error::NotComplete)));
    }

    #[test]
    fn schreier_transition_group_is_a_quotient() {
        for g in [builtin::klein(), builtin::s3(), builtin::d4(), builtin::s4(), builtin::a5()] {
            for h in [vec![], vec![w("a")], vec![w("b")], vec![w("a b")], vec![w("a b a b^-1")]] {
                let t = schreier(&g, &h).unwrap().transition_group().unwrap();
                assert!(canonical_morphism(&g, &t).unwrap().is_some(), "{} / {:?}", g.name(), h);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let g = h_core().into_graph();
        let text = serde_json::to_string(&g.to_json()).unwrap();
        let back = LabeledGraph::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, g);
        let bare: GraphJson =
            serde_json::from_str(r#"{"vertices":[0],"edges":[{"src":0,"label":"c","dst":0}],"basepoint":0}"#).unwrap();
        assert_eq!(LabeledGraph::from_json(&bare).unwrap().alphabet().len(), 3);
        let bad: GraphJson =
            serde_json::from_str(r#"{"alphabet":["a"],"vertices":[0],"edges":[{"src":0,"label":"q","dst":0}]}"#).unwrap();
        let err = LabeledGraph::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("edges[0].label"), "{err}");
    }

    #[test]
    fn dot_lists_positive_edges() {
        let dot = h_core().graph().to_dot("H");
        assert_eq!(dot.matches("->").count(), 3);
        assert!(dot.contains("doublecircle"));
    }

    fn random_gens(rng: &mut SmallRng) -> Vec<Word> {
        let n = rng.gen_range(1..=3);
        (0..n)
            .map(|_| loop {
                let len = rng.gen_range(1..=5);
                let x: Word = (0..len).map(|_| Letter { base: rng.gen_range(0..2), inverse: rng.gen() }).collect();
                let x = x.reduce();
                if !x.is_empty() {
                    break x;
                }
            })
            .collect()
    }

    #[test]
    fn folding_is_confluent() {
        let mut rng = SmallRng::seed_from_u64(7);
        for _ in 0..200 {
            let gens = random_gens(&mut rng);
            let g = LabeledGraph::bouquet(ab(), &gens).unwrap();
            if g.vertices().len() > 12 {
                continue;
            }
            let reference = g.fold().canonical_form();
            for _ in 0..3 {
                let mut perm: Vec<Vertex> = (0..g.vertices().len() as Vertex).collect();
                perm.shuffle(&mut rng);
                let relabelled = LabeledGraph::from_parts(
                    ab(),
                    g.vertices().iter().map(|&v| perm[v as usize]),
                    g.edges().iter().map(|x| e(perm[x.src as usize], x.label, perm[x.dst as usize])),
                    g.basepoint().map(|b| perm[b as usize]),
                )
                .unwrap();
                assert_eq!(relabelled.fold().canonical_form(), reference);
            }
        }
    }

    proptest! {
        #[test]
        fn products_of_generators_are_members(seed in any::<u64>(), picks in prop::collection::vec((0usize..3, any::<bool>()), 0..8)) {
            let mut rng = SmallRng::seed_from_u64(seed);
            let gens = random_gens(&mut rng);
            let core = CoreGraph::of_subgroup(&ab(), &gens).unwrap();
            let mut x = Word::empty();
            for (i, inv) in picks {
                let g = &gens[i % gens.len()];
                x = x.concat(&if inv { g.invert() } else { g.clone() });
                if x.len() > 20 { break; }
            }
            prop_assert!(core.member(&x.reduce()));
        }

        #[test]
        fn non_members_are_not_short_products(seed in any::<u64>(), x in crate::words::tests::arb_word(2, 8)) {
            let mut rng = SmallRng::seed_from_u64(seed);
            let gens = random_gens(&mut rng);
            let core = CoreGraph::of_subgroup(&ab(), &gens).unwrap();
            let x = x.reduce();
            if !core.member(&x) {
                prop_assert!(!products_up_to(&gens, 4).contains(&x));
            }
        }

        #[test]
        fn completion_contains_input(seed in any::<u64>()) {
            let mut rng = SmallRng::seed_from_u64(seed);
            let core = CoreGraph::of_subgroup(&ab(), &random_gens(&mut rng)).unwrap();
            let done = core.complete_arbitrary().unwrap();
            prop_assert!(done.is_complete());
            prop_assert!(core.graph().is_subgraph_of(&done));
            prop_assert_eq!(done.vertices().len(), core.graph().vertices().len());
        }
    }
}
