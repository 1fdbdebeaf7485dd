//! Spanning trees of `Γ(G)`, the free basis of `R = ker(F ↠ G)` given by the
//! non-tree edges, and rewriting of closed-path labels over that basis.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cayley::{cayley_graph, connected_without_two_edges, CayleyEdge};
use crate::error::{Error, Result};
use crate::groups::{ElemId, FinGroup};
use crate::words::{Letter, Word};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanningTree {
    pub edges: BTreeSet<CayleyEdge>,
    /// Label of the tree path from the identity to each element.
    paths: Vec<Word>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisWord {
    pub edge: CayleyEdge,
    pub word: Word,
}

impl SpanningTree {
    /// BFS tree rooted at the identity in `Γ(G)` with the `excluded` edges
    /// removed; letters are tried in column order.
    pub fn bfs(g: &FinGroup, excluded: &[CayleyEdge]) -> Result<Self> {
        let t = g.table()?;
        let n = t.order();
        let mut paths: Vec<Option<Word>> = vec![None; n];
        paths[0] = Some(Word::empty());
        let mut edges = BTreeSet::new();
        let mut queue = VecDeque::from([0 as ElemId]);
        while let Some(v) = queue.pop_front() {
            for col in 0..2 * g.rank() {
                let l = Letter::from_column(col);
                let u = t.step(v, l);
                let e = if l.inverse { CayleyEdge::new(u, l.base) } else { CayleyEdge::new(v, l.base) };
                if paths[u as usize].is_some() || excluded.contains(&e) {
                    continue;
                }
                let mut p = paths[v as usize].clone().expect("visited");
                p.push(l);
                paths[u as usize] = Some(p);
                edges.insert(e);
                queue.push_back(u);
            }
        }
        let paths = paths
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Precondition("removing the excluded edges disconnects Γ(G)".into()))?;
        Ok(SpanningTree { edges, paths })
    }

    /// A uniformly shuffled Kruskal tree.
    pub fn random<R: Rng>(g: &FinGroup, rng: &mut R) -> Result<Self> {
        let mut all: Vec<CayleyEdge> = cayley_graph(g)?.edges.into_iter().collect();
        all.shuffle(rng);
        let n = g.order()?;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut edges = BTreeSet::new();
        for e in all {
            let (s, d) = (find(&mut parent, e.src as usize), find(&mut parent, e.dst(g)? as usize));
            if s != d {
                parent[s] = d;
                edges.insert(e);
            }
        }
        Self::from_edges(g, edges)
    }

    /// Builds the tree paths for a given edge set; rejects non-trees.
    pub fn from_edges(g: &FinGroup, edges: BTreeSet<CayleyEdge>) -> Result<Self> {
        let t = g.table()?;
        let n = t.order();
        if edges.len() + 1 != n {
            return Err(Error::Precondition(format!("a spanning tree of Γ(G) has {} edges", n - 1)));
        }
        let mut paths: Vec<Option<Word>> = vec![None; n];
        paths[0] = Some(Word::empty());
        let mut queue = VecDeque::from([0 as ElemId]);
        while let Some(v) = queue.pop_front() {
            for col in 0..2 * g.rank() {
                let l = Letter::from_column(col);
                let u = t.step(v, l);
                let e = if l.inverse { CayleyEdge::new(u, l.base) } else { CayleyEdge::new(v, l.base) };
                if paths[u as usize].is_some() || !edges.contains(&e) {
                    continue;
                }
                let mut p = paths[v as usize].clone().expect("visited");
                p.push(l);
                paths[u as usize] = Some(p);
                queue.push_back(u);
            }
        }
        let paths = paths
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Precondition("edge set does not span Γ(G)".into()))?;
        Ok(SpanningTree { edges, paths })
    }

    pub fn contains(&self, e: CayleyEdge) -> bool {
        self.edges.contains(&e)
    }

    pub fn path_to(&self, v: ElemId) -> &Word {
        &self.paths[v as usize]
    }
}

/// BFS tree of `Γ(G) ∖ {e^{±1}, f^{±1}}`. The removal must leave the graph
/// connected, which holds for every pair under the separation assumption.
pub fn spanning_tree_avoiding(g: &FinGroup, e: CayleyEdge, f: CayleyEdge) -> Result<SpanningTree> {
    if !connected_without_two_edges(g, e, f)? {
        return Err(Error::TheoremViolation(format!(
            "Γ({}) minus edges {e:?}, {f:?} is disconnected",
            g.name()
        )));
    }
    SpanningTree::bfs(g, &[e, f])
}

/// One basis word per positive non-tree edge `h`: tree path to `ι h`, then
/// `h`, then the tree path back from `τ h`.
#[derive(Clone, Debug)]
pub struct NielsenBasis {
    pub words: Vec<BasisWord>,
    index: BTreeMap<CayleyEdge, usize>,
}

impl NielsenBasis {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, e: CayleyEdge) -> Option<usize> {
        self.index.get(&e).copied()
    }
}

pub fn nielsen_basis(g: &FinGroup, tree: &SpanningTree) -> Result<NielsenBasis> {
    let mut words = Vec::new();
    for e in cayley_graph(g)?.edges {
        if tree.contains(e) {
            continue;
        }
        let word = tree
            .path_to(e.src)
            .concat(&Word::from(vec![Letter::pos(e.label)]))
            .concat(&tree.path_to(e.dst(g)?).invert())
            .reduce();
        words.push(BasisWord { edge: e, word });
    }
    let index = words.iter().enumerate().map(|(i, b)| (b.edge, i)).collect();
    Ok(NielsenBasis { words, index })
}

/// A letter of the rewritten word: basis element index and exponent `±1`.
pub type BasisLetter = (usize, i8);

/// Rewrites the label of a closed path at 1 edge by edge: tree edges vanish,
/// a non-tree edge `h` becomes `h̃^{±1}`.
pub fn rewrite(g: &FinGroup, tree: &SpanningTree, basis: &NielsenBasis, w: &Word) -> Result<Vec<BasisLetter>> {
    let mut v = g.identity();
    let mut out = Vec::new();
    for &l in w.letters() {
        let u = g.step(v, l)?;
        let e = if l.inverse { CayleyEdge::new(u, l.base) } else { CayleyEdge::new(v, l.base) };
        if !tree.contains(e) {
            let i = basis.index_of(e).expect("non-tree edges are basis edges");
            out.push((i, if l.inverse { -1 } else { 1 }));
        }
        v = u;
    }
    if v != g.identity() {
        return Err(Error::NotClosed);
    }
    Ok(out)
}

/// Exponent sum of each basis element in a rewritten word.
pub fn exponent_sums(seq: &[BasisLetter], rank: usize) -> Vec<i64> {
    let mut sums = vec![0; rank];
    for &(i, s) in seq {
        sums[i] += s as i64;
    }
    sums
}

/// Free reduction in the basis letters.
pub fn reduce_sequence(seq: &[BasisLetter]) -> Vec<BasisLetter> {
    let mut out: Vec<BasisLetter> = Vec::with_capacity(seq.len());
    for &(i, s) in seq {
        if out.last() == Some(&(i, -s)) {
            out.pop();
        } else {
            out.push((i, s));
        }
    }
    out
}

/// Substitutes the basis words back in and reduces.
pub fn expand(basis: &NielsenBasis, seq: &[BasisLetter]) -> Word {
    let mut out = Word::empty();
    for &(i, s) in seq {
        let b = &basis.words[i].word;
        let piece = if s < 0 { b.invert() } else { b.clone() };
        out = out.mul(&piece);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::path_span;
    use crate::groups::builtin;
    use crate::words::Alphabet;
    use rand::rngs::SmallRng;
    use rand::SeedableRng;

    fn w(s: &str) -> Word {
        Alphabet::standard(2).parse_word(s).unwrap()
    }

    #[test]
    fn tree_avoiding_examples() {
        let g = builtin::klein();
        let (e, f) = (CayleyEdge::new(0, 0), CayleyEdge::new(0, 1));
        let t = spanning_tree_avoiding(&g, e, f).unwrap();
        assert_eq!(t.edges.len(), 3);
        assert!(!t.contains(e) && !t.contains(f));

        let c3 = builtin::cyclic(3);
        let (e, f) = (CayleyEdge::new(0, 0), CayleyEdge::new(1, 1));
        let t = spanning_tree_avoiding(&c3, e, f).unwrap();
        assert_eq!(t.edges.len(), 2);
        assert!(!t.contains(e) && !t.contains(f));

        assert!(spanning_tree_avoiding(&g, e, e).is_err());
    }

    #[test]
    fn basis_sizes() {
        for (g, r) in [(builtin::klein(), 5), (builtin::cyclic(3), 4), (builtin::trivial(2), 2)] {
            let t = SpanningTree::bfs(&g, &[]).unwrap();
            let b = nielsen_basis(&g, &t).unwrap();
            assert_eq!(b.len(), r);
            let n = g.order().unwrap();
            assert_eq!(b.len(), n * (g.rank() - 1) + 1);
            for bw in &b.words {
                assert_eq!(g.evaluate(&bw.word).unwrap(), 0);
                assert!(bw.word.is_reduced());
            }
        }
    }

    #[test]
    fn rewrite_examples() {
        let g = builtin::klein();
        let t = SpanningTree::bfs(&g, &[]).unwrap();
        let b = nielsen_basis(&g, &t).unwrap();
        // a tree edge there and back
        let e = *t.edges.iter().next().unwrap();
        let round = Word::from(vec![Letter::pos(e.label), Letter::neg(e.label)]);
        let round = t.path_to(e.src).concat(&round).concat(&t.path_to(e.src).invert());
        assert!(rewrite(&g, &t, &b, &round).unwrap().is_empty());
        for (i, bw) in b.words.iter().enumerate() {
            assert_eq!(rewrite(&g, &t, &b, &bw.word).unwrap(), vec![(i, 1)]);
        }
        let x = w("a b a b");
        let seq = rewrite(&g, &t, &b, &x).unwrap();
        let sums = exponent_sums(&seq, b.len());
        let counts = path_span(&g, 0, &x).unwrap().counts;
        for (i, bw) in b.words.iter().enumerate() {
            assert_eq!(sums[i], counts.get(bw.edge));
        }
        assert!(matches!(rewrite(&g, &t, &b, &w("a")), Err(Error::NotClosed)));
    }

    #[test]
    fn reconstruction_and_traversal_agreement() {
        let mut rng = SmallRng::seed_from_u64(11);
        for g in [builtin::klein(), builtin::s3(), builtin::d4(), builtin::cyclic(5)] {
            for _ in 0..20 {
                let t = SpanningTree::random(&g, &mut rng).unwrap();
                let b = nielsen_basis(&g, &t).unwrap();
                assert_eq!(b.len(), g.order().unwrap() + 1);
                for _ in 0..10 {
                    let len = rng.gen_range(0..16);
                    let x: Word = (0..len).map(|_| Letter { base: rng.gen_range(0..2), inverse: rng.gen() }).collect();
                    // close the path with the witness of the inverse endpoint
                    let end = g.evaluate(&x).unwrap();
                    let x = x.concat(&g.witness(end).unwrap().invert());
                    let seq = rewrite(&g, &t, &b, &x).unwrap();
                    assert_eq!(expand(&b, &seq), x.reduce());
                    assert_eq!(expand(&b, &reduce_sequence(&seq)), x.reduce());
                    let counts = path_span(&g, 0, &x).unwrap().counts;
                    let sums = exponent_sums(&seq, b.len());
                    for (i, bw) in b.words.iter().enumerate() {
                        assert_eq!(sums[i], counts.get(bw.edge));
                    }
                }
            }
        }
    }

    #[test]
    fn tree_edge_counts_follow_from_cycle_space() {
        // For a closed path, the net flow at each vertex vanishes, so counts
        // on tree edges are determined by the counts on non-tree edges.
        let g = builtin::s3();
        let t = SpanningTree::bfs(&g, &[]).unwrap();
        let x = w("a b a b^-1 a^-1 b b a b a");
        let end = g.evaluate(&x).unwrap();
        let x = x.concat(&g.witness(end).unwrap().invert());
        let counts = path_span(&g, 0, &x).unwrap().counts;
        // Reconstruct: same non-tree counts, reduced path in the tree.
        let b = nielsen_basis(&g, &t).unwrap();
        let seq = rewrite(&g, &t, &b, &x).unwrap();
        let rebuilt = path_span(&g, 0, &expand(&b, &seq)).unwrap().counts;
        for e in cayley_graph(&g).unwrap().edges {
            assert_eq!(counts.get(e), rebuilt.get(e));
        }
    }

    #[test]
    fn from_edges_rejects_non_trees() {
        let g = builtin::klein();
        let all = cayley_graph(&g).unwrap().edges;
        assert!(SpanningTree::from_edges(&g, all).is_err());
        let three: BTreeSet<_> = [CayleyEdge::new(0, 0), CayleyEdge::new(1, 0), CayleyEdge::new(0, 1)].into();
        assert!(SpanningTree::from_edges(&g, three).is_err());
    }
}
