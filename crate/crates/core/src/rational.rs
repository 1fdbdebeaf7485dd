//! Membership `w ∈ H₁⋯H_k` in the free group.
//!
//! The core graphs are chained into one automaton whose language is the set
//! of (unreduced) words `h₁⋯h_k`. Saturation adds an ε-transition `q → s`
//! whenever `q →x r ⇝ε r' →x⁻¹ s`; afterwards a reduced word lies in the
//! product iff the automaton accepts it. Every ε-transition remembers how
//! it was derived, so an accepting run expands back into a path of the
//! original automaton, which splits at the links into the factors.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stallings::CoreGraph;
use crate::words::{Alphabet, Letter, Word};

type State = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
enum EpsOrigin {
    /// Link from the basepoint of one factor to the next.
    Link,
    /// `q →x r`, ε-path `r ⇝ r'`, `r' →x⁻¹ s`.
    Cancel { x: Letter, path: Vec<(State, State)> },
}

/// One step of a path in the unsaturated automaton.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Item {
    Letter(Letter),
    Link,
}

#[derive(Clone, Debug)]
pub struct WordAutomaton {
    alphabet: Alphabet,
    states: usize,
    /// `out[q]`: outgoing `(letter, target)`.
    out: Vec<Vec<(Letter, State)>>,
    initial: State,
    finals: State,
    eps: BTreeMap<(State, State), EpsOrigin>,
    eps_out: Vec<Vec<State>>,
    saturated: bool,
}

/// Chains the cores: each factor's basepoint is linked by ε to the next
/// factor's basepoint; initial is the first basepoint, final the last.
pub fn product_automaton(cores: &[CoreGraph]) -> Result<WordAutomaton> {
    let first = cores.first().ok_or_else(|| Error::Input("a product needs at least one factor".into()))?;
    let alphabet = first.graph().alphabet().clone();
    let mut out: Vec<Vec<(Letter, State)>> = Vec::new();
    let mut bases = Vec::new();
    for core in cores {
        if core.graph().alphabet() != &alphabet {
            return Err(Error::AlphabetMismatch { expected: alphabet.len(), found: core.graph().alphabet().len() });
        }
        let offset = out.len() as State;
        let local: BTreeMap<u32, State> =
            core.graph().vertices().iter().enumerate().map(|(i, &v)| (v, offset + i as State)).collect();
        out.resize(out.len() + local.len(), Vec::new());
        for e in core.graph().edges() {
            let (s, t) = (local[&e.src], local[&e.dst]);
            out[s as usize].push((Letter::pos(e.label), t));
            out[t as usize].push((Letter::neg(e.label), s));
        }
        bases.push(local[&core.basepoint()]);
    }
    let states = out.len();
    let mut a = WordAutomaton {
        alphabet,
        states,
        out,
        initial: bases[0],
        finals: *bases.last().expect("nonempty"),
        eps: BTreeMap::new(),
        eps_out: vec![Vec::new(); states],
        saturated: false,
    };
    for pair in bases.windows(2) {
        a.add_eps(pair[0], pair[1], EpsOrigin::Link);
    }
    Ok(a)
}

impl WordAutomaton {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn epsilon_count(&self) -> usize {
        self.eps.len()
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    fn add_eps(&mut self, q: State, s: State, origin: EpsOrigin) -> bool {
        if q == s || self.eps.contains_key(&(q, s)) {
            return false;
        }
        self.eps.insert((q, s), origin);
        self.eps_out[q as usize].push(s);
        true
    }

    /// ε-closure of `q` with BFS parents (`parent[s] = Some(p)` via the
    /// direct ε-edge `p → s`).
    fn closure(&self, q: State) -> Vec<Option<State>> {
        let mut parent = vec![None; self.states];
        parent[q as usize] = Some(q);
        let mut queue = VecDeque::from([q]);
        while let Some(x) = queue.pop_front() {
            for &y in &self.eps_out[x as usize] {
                if parent[y as usize].is_none() {
                    parent[y as usize] = Some(x);
                    queue.push_back(y);
                }
            }
        }
        parent
    }

    fn eps_path(parent: &[Option<State>], from: State, to: State) -> Vec<(State, State)> {
        let mut path = Vec::new();
        let mut y = to;
        while y != from {
            let p = parent[y as usize].expect("reachable");
            path.push((p, y));
            y = p;
        }
        path.reverse();
        path
    }

    /// Adds cancellation ε-edges until nothing changes. Returns the number
    /// of rounds.
    pub fn saturate(&mut self) -> usize {
        let mut rounds = 0;
        loop {
            rounds += 1;
            let closures: Vec<Vec<Option<State>>> = (0..self.states as State).map(|q| self.closure(q)).collect();
            let mut added = Vec::new();
            for q in 0..self.states as State {
                for &(x, r) in &self.out[q as usize] {
                    for (r_end, par) in closures[r as usize].iter().enumerate() {
                        if par.is_none() {
                            continue;
                        }
                        for &(y, s) in &self.out[r_end] {
                            if y == x.inv() && q != s && !self.eps.contains_key(&(q, s)) {
                                let path = Self::eps_path(&closures[r as usize], r, r_end as State);
                                added.push((q, s, EpsOrigin::Cancel { x, path }));
                            }
                        }
                    }
                }
            }
            let mut changed = false;
            for (q, s, o) in added {
                changed |= self.add_eps(q, s, o);
            }
            if !changed {
                self.saturated = true;
                return rounds;
            }
        }
    }

    /// Runs `w` letter by letter with ε-closure between letters; returns
    /// the accepting run as a sequence of ε-edges and letter steps.
    fn run(&self, w: &Word) -> Option<Vec<Step>> {
        // layers[j][s] = how s was reached after j letters.
        let mut layers: Vec<Vec<Option<Reach>>> = Vec::with_capacity(w.len() + 1);
        let mut seed = vec![None; self.states];
        seed[self.initial as usize] = Some(Reach::Start);
        layers.push(self.close_layer(seed));
        for &l in w.letters() {
            let prev = layers.last().expect("nonempty");
            let mut seed = vec![None; self.states];
            for (q, r) in prev.iter().enumerate() {
                if r.is_none() {
                    continue;
                }
                for &(x, s) in &self.out[q] {
                    if x == l && seed[s as usize].is_none() {
                        seed[s as usize] = Some(Reach::Letter(q as State, l));
                    }
                }
            }
            layers.push(self.close_layer(seed));
        }
        layers.last()?[self.finals as usize]?;
        let mut steps = Vec::new();
        let mut state = self.finals;
        for j in (0..layers.len()).rev() {
            loop {
                match layers[j][state as usize].expect("on the run") {
                    Reach::Start => break,
                    Reach::Eps(p) => {
                        steps.push(Step::Eps(p, state));
                        state = p;
                    }
                    Reach::Letter(p, l) => {
                        steps.push(Step::Letter(l));
                        state = p;
                        break;
                    }
                }
            }
        }
        steps.reverse();
        Some(steps)
    }

    fn close_layer(&self, mut layer: Vec<Option<Reach>>) -> Vec<Option<Reach>> {
        let mut queue: VecDeque<State> = (0..self.states as State).filter(|&s| layer[s as usize].is_some()).collect();
        while let Some(x) = queue.pop_front() {
            for &y in &self.eps_out[x as usize] {
                if layer[y as usize].is_none() {
                    layer[y as usize] = Some(Reach::Eps(x));
                    queue.push_back(y);
                }
            }
        }
        layer
    }

    /// Reduced-word acceptance; saturates first if needed.
    pub fn accepts(&mut self, w: &Word) -> bool {
        if !self.saturated {
            self.saturate();
        }
        self.run(&w.reduce()).is_some()
    }

    fn expand_eps(&self, q: State, s: State, out: &mut Vec<Item>) {
        match &self.eps[&(q, s)] {
            EpsOrigin::Link => out.push(Item::Link),
            EpsOrigin::Cancel { x, path } => {
                out.push(Item::Letter(*x));
                for &(a, b) in path {
                    self.expand_eps(a, b, out);
                }
                out.push(Item::Letter(x.inv()));
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Reach {
    Start,
    Eps(State),
    Letter(State, Letter),
}

#[derive(Clone, Copy, Debug)]
enum Step {
    Eps(State, State),
    Letter(Letter),
}

/// `h₁, …, h_k` with `hᵢ ∈ Hᵢ` (reduced) and `reduce(h₁⋯h_k) = w`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub factors: Vec<Word>,
}

/// A saturated product automaton kept for repeated queries.
#[derive(Clone, Debug)]
pub struct ProductOracle {
    cores: Vec<CoreGraph>,
    automaton: WordAutomaton,
}

impl ProductOracle {
    pub fn new(cores: &[CoreGraph]) -> Result<Self> {
        let mut automaton = product_automaton(cores)?;
        automaton.saturate();
        Ok(ProductOracle { cores: cores.to_vec(), automaton })
    }

    pub fn automaton(&self) -> &WordAutomaton {
        &self.automaton
    }

    /// Decides `w ∈ H₁⋯H_k`; on success returns a verified factorization.
    pub fn member(&self, w: &Word) -> Result<Option<Factorization>> {
        let a = &self.automaton;
        let Some(steps) = a.run(&w.reduce()) else {
            return Ok(None);
        };
        let mut items = Vec::new();
        for s in steps {
            match s {
                Step::Eps(p, q) => a.expand_eps(p, q, &mut items),
                Step::Letter(l) => items.push(Item::Letter(l)),
            }
        }
        let mut factors = vec![Word::empty(); self.cores.len()];
        let mut i = 0;
        for item in items {
            match item {
                Item::Link => i += 1,
                Item::Letter(l) => factors[i].push_reduced(l),
            }
        }
        let f = Factorization { factors };
        if !verify_factorization(&self.cores, w, &f) {
            return Err(Error::TheoremViolation("extracted factorization does not verify".into()));
        }
        Ok(Some(f))
    }
}

/// Decides `w ∈ H₁⋯H_k`; on success returns a factorization.
pub fn member_product(cores: &[CoreGraph], w: &Word) -> Result<Option<Factorization>> {
    ProductOracle::new(cores)?.member(w)
}

/// Checks `hᵢ ∈ Hᵢ` and `reduce(h₁⋯h_k) = reduce(w)`.
pub fn verify_factorization(cores: &[CoreGraph], w: &Word, f: &Factorization) -> bool {
    f.factors.len() == cores.len()
        && cores.iter().zip(&f.factors).all(|(c, h)| c.member(h))
        && f.factors.iter().fold(Word::empty(), |acc, h| acc.mul(h)) == w.reduce()
}

/// Bounded brute force: all reduced `h₁⋯h_k` of length ≤ `max_len` with
/// every `hᵢ ∈ Hᵢ` of length ≤ `factor_bound`.
///
/// Every reduced word of length ≤ `max_len` is tested on its own. The first
/// `k − 2` factors are enumerated; the last two are decided exactly: in the
/// free group `y = h·h'` iff `y = a·b` with `h = a·c`, `h' = c⁻¹·b`, so it is
/// enough to try each split `a·b` of `y` against the length of the shortest
/// common path `c` back to both basepoints.
pub fn bounded_products(cores: &[CoreGraph], factor_bound: usize, max_len: usize) -> BTreeSet<Word> {
    use rayon::prelude::*;
    let Some(first) = cores.first() else {
        return BTreeSet::new();
    };
    // `w ∈ H₁⋯H_k` iff `w⁻¹ ∈ H_k⋯H₁`: enumerate from the smaller end.
    let reversed = cores.len() > 2
        && cores[cores.len() - 1].elements_up_to(factor_bound).len() < first.elements_up_to(factor_bound).len();
    let order: Vec<CoreGraph> =
        if reversed { cores.iter().rev().cloned().collect() } else { cores.to_vec() };
    let checker = BoundedChecker::new(&order, factor_bound);
    let mut words = vec![Word::empty()];
    let mut frontier = vec![Word::empty()];
    let letters = 2 * first.graph().alphabet().len();
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for col in 0..letters {
                let l = Letter::from_column(col);
                if w.letters().last() != Some(&l.inv()) {
                    let mut w2 = w.clone();
                    w2.push(l);
                    next.push(w2);
                }
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
    }
    words
        .into_par_iter()
        .filter(|w| if reversed { checker.contains(&w.invert()) } else { checker.contains(w) })
        .collect()
}

/// Dense transition table of a core graph.
struct Table {
    base: usize,
    /// `next[v * cols + col]`.
    next: Vec<Option<usize>>,
    cols: usize,
}

impl Table {
    fn new(c: &CoreGraph) -> Self {
        let g = c.graph();
        let index: BTreeMap<u32, usize> = g.vertices().iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let cols = 2 * g.alphabet().len();
        let mut next = vec![None; index.len() * cols];
        for e in g.edges() {
            let (s, d) = (index[&e.src], index[&e.dst]);
            next[s * cols + Letter::pos(e.label).column()] = Some(d);
            next[d * cols + Letter::neg(e.label).column()] = Some(s);
        }
        Table { base: index[&c.basepoint()], next, cols }
    }

    fn len(&self) -> usize {
        self.next.len() / self.cols.max(1)
    }

    #[inline]
    fn step(&self, v: usize, l: Letter) -> Option<usize> {
        self.next[v * self.cols + l.column()]
    }
}

struct BoundedChecker {
    bound: usize,
    /// Elements of length ≤ bound of all but the last two factors.
    prefix_elems: Vec<Vec<Word>>,
    last: Vec<Table>,
    /// Shortest common path from `(u, v)` to the pair of basepoints of the
    /// last two factors (`usize::MAX` if none).
    dist: Vec<usize>,
}

impl BoundedChecker {
    fn new(cores: &[CoreGraph], bound: usize) -> Self {
        let k = cores.len();
        let split = k.saturating_sub(2);
        let prefix_elems = cores[..split].iter().map(|c| c.elements_up_to(bound)).collect();
        let last: Vec<Table> = cores[split..].iter().map(Table::new).collect();
        let mut dist = Vec::new();
        if let [a, b] = &last[..] {
            // Inverse edges make the product graph symmetric, so a BFS from
            // the basepoints gives distances to them.
            dist = vec![usize::MAX; a.len() * b.len()];
            let start = a.base * b.len() + b.base;
            dist[start] = 0;
            let mut queue = VecDeque::from([(a.base, b.base)]);
            while let Some((u, v)) = queue.pop_front() {
                let d = dist[u * b.len() + v];
                for col in 0..a.cols {
                    let l = Letter::from_column(col);
                    if let (Some(u2), Some(v2)) = (a.step(u, l), b.step(v, l)) {
                        let slot = &mut dist[u2 * b.len() + v2];
                        if *slot == usize::MAX {
                            *slot = d + 1;
                            queue.push_back((u2, v2));
                        }
                    }
                }
            }
        }
        BoundedChecker { bound, prefix_elems, last, dist }
    }

    fn contains(&self, w: &Word) -> bool {
        self.check(0, w)
    }

    fn check(&self, j: usize, y: &Word) -> bool {
        if j < self.prefix_elems.len() {
            let remaining = self.prefix_elems.len() - j - 1 + self.last.len();
            return self.prefix_elems[j].iter().any(|h| {
                let rest = h.invert().mul(y);
                rest.len() <= self.bound * remaining && self.check(j + 1, &rest)
            });
        }
        match &self.last[..] {
            [t] => y.len() <= self.bound && read(t, y.letters().iter().copied()) == Some(t.base),
            [a, b] => self.pair(a, b, y),
            _ => y.is_empty(),
        }
    }

    fn pair(&self, a: &Table, b: &Table, y: &Word) -> bool {
        let ls = y.letters();
        let n = ls.len();
        if n > 2 * self.bound {
            return false;
        }
        // fwd[i]: basepoint of `a` read along y[..i]; bwd[i]: basepoint of
        // `b` read along (y[i..])⁻¹.
        let mut fwd = vec![None; n + 1];
        fwd[0] = Some(a.base);
        for i in 0..n {
            fwd[i + 1] = fwd[i].and_then(|v| a.step(v, ls[i]));
        }
        let mut bwd = vec![None; n + 1];
        bwd[n] = Some(b.base);
        for i in (0..n).rev() {
            bwd[i] = bwd[i + 1].and_then(|v| b.step(v, ls[i].inv()));
        }
        (0..=n).any(|i| {
            let longest = i.max(n - i);
            match (fwd[i], bwd[i]) {
                (Some(u), Some(v)) if longest <= self.bound => {
                    let d = self.dist[u * b.len() + v];
                    d != usize::MAX && d <= self.bound - longest
                }
                _ => false,
            }
        })
    }
}

fn read(t: &Table, letters: impl Iterator<Item = Letter>) -> Option<usize> {
    let mut v = t.base;
    for l in letters {
        v = t.step(v, l)?;
    }
    Some(v)
}
