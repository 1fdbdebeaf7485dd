//! Finite `A`-generated groups.
//!
//! A [`FinGroup`] is given by one permutation per base letter. Its elements
//! are enumerated lazily, once, into a [`CayleyTable`]: element ids in BFS
//! order from the identity (id 0), right multiplication by every letter of
//! `Ã`, and a shortest witness word per element. Groups whose elements are
//! not permutations (extensions, subdirect products) are built directly
//! from a table via [`FinGroup::from_closure`]; their generators then act on
//! the element ids by right multiplication, which is faithful.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::hash::Hash;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::words::{Alphabet, Letter, Word};

pub type ElemId = u32;

/// Default cap on the number of elements a group may enumerate.
pub const DEFAULT_ENUM_BUDGET: u64 = 1_000_000;

/// Right multiplication table of an enumerated group.
#[derive(Clone, Debug)]
pub struct CayleyTable {
    columns: usize,
    next: Vec<ElemId>,
    witness: Vec<Word>,
}

impl CayleyTable {
    pub fn order(&self) -> usize {
        self.witness.len()
    }

    #[inline]
    pub fn step(&self, g: ElemId, l: Letter) -> ElemId {
        self.next[g as usize * self.columns + l.column()]
    }

    pub fn witness(&self, g: ElemId) -> &Word {
        &self.witness[g as usize]
    }
}

/// Breadth-first closure of `identity` under `step`, one column per letter of
/// `Ã`. Returns the enumerated keys (index = element id) and the table.
pub fn enumerate_closure<K, F>(
    alphabet_len: usize,
    identity: K,
    mut step: F,
    budget: u64,
    what: &str,
) -> Result<(Vec<K>, CayleyTable)>
where
    K: Clone + Eq + Hash,
    F: FnMut(&K, Letter) -> K,
{
    let columns = 2 * alphabet_len;
    let mut index: HashMap<K, ElemId> = HashMap::new();
    let mut keys = vec![identity.clone()];
    let mut witness = vec![Word::empty()];
    let mut next: Vec<ElemId> = Vec::new();
    index.insert(identity, 0);
    let mut cursor = 0usize;
    while cursor < keys.len() {
        let current = keys[cursor].clone();
        for col in 0..columns {
            let l = Letter::from_column(col);
            let k = step(&current, l);
            let id = match index.get(&k) {
                Some(&id) => id,
                None => {
                    let id = keys.len() as ElemId;
                    if keys.len() as u64 >= budget {
                        return Err(Error::BudgetExceeded { what: what.to_string(), budget });
                    }
                    let mut wit = witness[cursor].clone();
                    wit.push(l);
                    witness.push(wit);
                    index.insert(k.clone(), id);
                    keys.push(k);
                    id
                }
            };
            next.push(id);
        }
        cursor += 1;
    }
    Ok((keys, CayleyTable { columns, next, witness }))
}

/// Permutation given by its image list, acting on the right.
pub type Perm = Vec<u32>;

fn compose(first: &[u32], then: &[u32]) -> Perm {
    first.iter().map(|&i| then[i as usize]).collect()
}

fn invert_perm(p: &[u32]) -> Perm {
    let mut out = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        out[j as usize] = i as u32;
    }
    out
}

fn is_bijection(p: &[u32], degree: usize) -> bool {
    if p.len() != degree {
        return false;
    }
    let mut seen = vec![false; degree];
    for &j in p {
        match seen.get_mut(j as usize) {
            Some(s) if !*s => *s = true,
            _ => return false,
        }
    }
    true
}

/// JSON input format: `{"degree": n, "gens": {"a": [...], "b": [...]}}`.
/// Symbols are ordered by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupJson {
    pub degree: usize,
    pub gens: BTreeMap<String, Vec<u32>>,
}

#[derive(Debug, Clone)]
pub struct FinGroup {
    name: String,
    alphabet: Alphabet,
    degree: usize,
    gens: Vec<Perm>,
    budget: u64,
    table: OnceLock<Arc<CayleyTable>>,
    products: OnceLock<Arc<Vec<ElemId>>>,
}

/// Full multiplication tables are cached only up to this order.
const PRODUCT_TABLE_LIMIT: usize = 1024;

impl FinGroup {
    pub fn new(name: impl Into<String>, alphabet: Alphabet, degree: usize, gens: Vec<Perm>) -> Result<Self> {
        if gens.len() != alphabet.len() {
            return Err(Error::AlphabetMismatch { expected: alphabet.len(), found: gens.len() });
        }
        if degree == 0 {
            return Err(Error::Input("permutation degree must be positive".into()));
        }
        for (i, g) in gens.iter().enumerate() {
            if !is_bijection(g, degree) {
                return Err(Error::Input(format!(
                    "generator {} is not a permutation of 0..{degree}",
                    alphabet.name(i as u16)
                )));
            }
        }
        Ok(FinGroup {
            name: name.into(),
            alphabet,
            degree,
            gens,
            budget: DEFAULT_ENUM_BUDGET,
            table: OnceLock::new(),
            products: OnceLock::new(),
        })
    }

    /// A group whose elements are the keys of a closure; the generators
    /// become the right-regular permutations of the element ids.
    pub fn from_closure<K, F>(name: impl Into<String>, alphabet: Alphabet, identity: K, step: F, budget: u64) -> Result<Self>
    where
        K: Clone + Eq + Hash,
        F: FnMut(&K, Letter) -> K,
    {
        let name = name.into();
        let (_, table) = enumerate_closure(alphabet.len(), identity, step, budget, &name)?;
        Ok(Self::from_table(name, alphabet, table))
    }

    pub fn from_table(name: impl Into<String>, alphabet: Alphabet, table: CayleyTable) -> Self {
        let n = table.order();
        let gens = (0..alphabet.len() as u16)
            .map(|b| (0..n as ElemId).map(|g| table.step(g, Letter::pos(b))).collect())
            .collect();
        let cell = OnceLock::new();
        let _ = cell.set(Arc::new(table));
        FinGroup {
            name: name.into(),
            alphabet,
            degree: n,
            gens,
            budget: DEFAULT_ENUM_BUDGET,
            table: cell,
            products: OnceLock::new(),
        }
    }

    pub fn from_json(json: &GroupJson, name: impl Into<String>) -> Result<Self> {
        let alphabet = Alphabet::new(json.gens.keys().cloned())?;
        Self::new(name, alphabet, json.degree, json.gens.values().cloned().collect())
    }

    pub fn to_json(&self) -> GroupJson {
        GroupJson {
            degree: self.degree,
            gens: self
                .alphabet
                .names()
                .iter()
                .cloned()
                .zip(self.gens.iter().cloned())
                .collect(),
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rank(&self) -> usize {
        self.alphabet.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Perm] {
        &self.gens
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Enumerates the group on first use; later calls return the frozen table.
    pub fn table(&self) -> Result<&CayleyTable> {
        if let Some(t) = self.table.get() {
            return Ok(t);
        }
        let identity: Perm = (0..self.degree as u32).collect();
        let inverses: Vec<Perm> = self.gens.iter().map(|g| invert_perm(g)).collect();
        let (_, table) = enumerate_closure(
            self.rank(),
            identity,
            |p, l| {
                let g = if l.inverse { &inverses[l.base as usize] } else { &self.gens[l.base as usize] };
                compose(p, g)
            },
            self.budget,
            &self.name,
        )?;
        Ok(self.table.get_or_init(|| Arc::new(table)))
    }

    pub fn order(&self) -> Result<usize> {
        Ok(self.table()?.order())
    }

    pub const fn identity(&self) -> ElemId {
        0
    }

    fn check_letter(&self, l: Letter) -> Result<()> {
        if (l.base as usize) < self.rank() {
            Ok(())
        } else {
            Err(Error::UnknownLetter(format!("letter index {}", l.base)))
        }
    }

    /// `g·l`.
    pub fn step(&self, g: ElemId, l: Letter) -> Result<ElemId> {
        self.check_letter(l)?;
        Ok(self.table()?.step(g, l))
    }

    /// The endpoint of the path labelled `w` starting at `start` in `Γ(G)`.
    pub fn walk(&self, start: ElemId, w: &Word) -> Result<ElemId> {
        let t = self.table()?;
        let mut g = start;
        for &l in w.letters() {
            self.check_letter(l)?;
            g = t.step(g, l);
        }
        Ok(g)
    }

    /// `[w]_G`.
    pub fn evaluate(&self, w: &Word) -> Result<ElemId> {
        self.walk(self.identity(), w)
    }

    pub fn witness(&self, g: ElemId) -> Result<&Word> {
        Ok(self.table()?.witness(g))
    }

    pub fn mul(&self, x: ElemId, y: ElemId) -> Result<ElemId> {
        let t = self.table()?;
        if t.order() <= PRODUCT_TABLE_LIMIT {
            let n = t.order();
            let prod = self.products.get_or_init(|| {
                let mut v = Vec::with_capacity(n * n);
                for a in 0..n as ElemId {
                    for b in 0..n as ElemId {
                        v.push(t.witness(b).letters().iter().fold(a, |g, &l| t.step(g, l)));
                    }
                }
                Arc::new(v)
            });
            return Ok(prod[x as usize * n + y as usize]);
        }
        Ok(t.witness(y).letters().iter().fold(x, |g, &l| t.step(g, l)))
    }

    pub fn inverse(&self, x: ElemId) -> Result<ElemId> {
        let t = self.table()?;
        Ok(t.witness(x).invert().letters().iter().fold(0, |g, &l| t.step(g, l)))
    }

    pub fn element_order(&self, x: ElemId) -> Result<u64> {
        let mut y = x;
        let mut k = 1u64;
        while y != self.identity() {
            y = self.mul(y, x)?;
            k += 1;
        }
        Ok(k)
    }

    /// Least common multiple of the element orders.
    pub fn exponent(&self) -> Result<u64> {
        let n = self.order()? as ElemId;
        let mut e = 1u64;
        for x in 0..n {
            let o = self.element_order(x)?;
            e = lcm(e, o);
        }
        Ok(e)
    }

    /// `x^m` for any integer `m`.
    pub fn pow(&self, x: ElemId, m: i64) -> Result<ElemId> {
        let ord = self.element_order(x)? as i64;
        let k = m.rem_euclid(ord);
        let mut y = self.identity();
        for _ in 0..k {
            y = self.mul(y, x)?;
        }
        Ok(y)
    }

    /// Nontrivial with no normal subgroups besides `1` and itself: the normal
    /// closure of every nonidentity element is the whole group.
    pub fn is_simple(&self) -> Result<bool> {
        let n = self.order()?;
        if n == 1 {
            return Ok(false);
        }
        let inv: Vec<ElemId> = (0..n as ElemId).map(|x| self.inverse(x)).collect::<Result<_>>()?;
        for x in 1..n as ElemId {
            let mut conj: Vec<ElemId> =
                (0..n as ElemId).map(|g| self.mul(self.mul(inv[g as usize], x)?, g)).collect::<Result<_>>()?;
            conj.sort_unstable();
            conj.dedup();
            let mut inside = vec![false; n];
            inside[0] = true;
            let mut elems = vec![0];
            let mut i = 0;
            while i < elems.len() {
                let y = elems[i];
                for &c in &conj {
                    let z = self.mul(y, c)?;
                    if !inside[z as usize] {
                        inside[z as usize] = true;
                        elems.push(z);
                    }
                }
                i += 1;
            }
            if elems.len() < n {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The separation assumption: generators are nontrivial and pairwise distinct.
    pub fn is_separated(&self) -> bool {
        let id: Perm = (0..self.degree as u32).collect();
        self.gens.iter().enumerate().all(|(i, g)| *g != id && self.gens[..i].iter().all(|h| h != g))
    }

    /// The image of `a ↦ a` on the whole table of `self`, if it extends to a
    /// homomorphism onto `target`.
    pub fn canonical_morphism(&self, target: &FinGroup) -> Result<Option<Vec<ElemId>>> {
        canonical_morphism(self, target)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// The morphism `H ↠ G` extending `a ↦ a`, as a table indexed by element ids
/// of `H`, or `None` when no such morphism exists. Built by BFS over `Γ(H)`
/// and checked on every edge: `φ(h·x) = φ(h)·x`.
pub fn canonical_morphism(h: &FinGroup, g: &FinGroup) -> Result<Option<Vec<ElemId>>> {
    if h.rank() != g.rank() {
        return Err(Error::AlphabetMismatch { expected: h.rank(), found: g.rank() });
    }
    let th = h.table()?;
    let tg = g.table()?;
    let mut phi: Vec<Option<ElemId>> = vec![None; th.order()];
    phi[0] = Some(0);
    let mut queue = VecDeque::from([0 as ElemId]);
    while let Some(x) = queue.pop_front() {
        let fx = phi[x as usize].expect("queued elements are mapped");
        for col in 0..2 * h.rank() {
            let l = Letter::from_column(col);
            let y = th.step(x, l);
            let fy = tg.step(fx, l);
            match phi[y as usize] {
                Some(existing) if existing != fy => return Ok(None),
                Some(_) => {}
                None => {
                    phi[y as usize] = Some(fy);
                    queue.push_back(y);
                }
            }
        }
    }
    Ok(Some(phi.into_iter().map(|x| x.expect("Γ(H) is connected")).collect()))
}

/// The `A`-generated subgroup of the direct product generated by the
/// diagonal generator tuples. Acts on the disjoint union of the domains.
pub fn subdirect(groups: &[FinGroup]) -> Result<FinGroup> {
    let first = groups.first().ok_or_else(|| Error::Input("subdirect product of no groups".into()))?;
    let alphabet = first.alphabet().clone();
    for g in groups {
        if g.rank() != alphabet.len() {
            return Err(Error::AlphabetMismatch { expected: alphabet.len(), found: g.rank() });
        }
    }
    let tables = groups.iter().map(|g| g.table()).collect::<Result<Vec<_>>>()?;
    let budget = groups.iter().map(|g| g.budget()).min().unwrap_or(DEFAULT_ENUM_BUDGET);
    let name = format!("subdirect({})", groups.iter().map(|g| g.name()).collect::<Vec<_>>().join(", "));
    let (_, table) = enumerate_closure(
        alphabet.len(),
        vec![0 as ElemId; groups.len()],
        |tuple, l| tuple.iter().zip(&tables).map(|(&x, t)| t.step(x, l)).collect(),
        budget,
        &name,
    )?;
    // Permutation form: disjoint union of the factor domains.
    let degree = groups.iter().map(|g| g.degree()).sum();
    let mut gens = vec![Vec::with_capacity(degree); alphabet.len()];
    let mut offset = 0u32;
    for g in groups {
        for (b, p) in g.generators().iter().enumerate() {
            gens[b].extend(p.iter().map(|&i| i + offset));
        }
        offset += g.degree() as u32;
    }
    let cell = OnceLock::new();
    let _ = cell.set(Arc::new(table));
    Ok(FinGroup {
        name,
        alphabet,
        degree,
        gens,
        budget,
        table: cell,
        products: OnceLock::new(),
    })
}

/// Builtin groups over the alphabet `{a, b}`.
pub mod builtin {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::standard(2)
    }

    fn cycle(n: usize) -> Perm {
        (0..n as u32).map(|i| (i + 1) % n as u32).collect()
    }

    /// `C_n` with `a ↦ g`, `b ↦ g⁻¹` for a generator `g`.
    pub fn cyclic(n: usize) -> FinGroup {
        let g = cycle(n);
        let ginv = invert_perm(&g);
        FinGroup::new(format!("C{n}"), ab(), n, vec![g, ginv]).expect("valid permutations")
    }

    /// `C₂ × C₂` with `a ↦ (0 1)`, `b ↦ (2 3)`.
    pub fn klein() -> FinGroup {
        FinGroup::new("C2xC2", ab(), 4, vec![vec![1, 0, 2, 3], vec![0, 1, 3, 2]]).expect("valid permutations")
    }

    /// `S₃` with `a ↦ (0 1)`, `b ↦ (0 1 2)`.
    pub fn s3() -> FinGroup {
        FinGroup::new("S3", ab(), 3, vec![vec![1, 0, 2], vec![1, 2, 0]]).expect("valid permutations")
    }

    /// `S₄` with `a ↦ (0 1)`, `b ↦ (0 1 2 3)`.
    pub fn s4() -> FinGroup {
        FinGroup::new("S4", ab(), 4, vec![vec![1, 0, 2, 3], vec![1, 2, 3, 0]]).expect("valid permutations")
    }

    /// Symmetries of a square with vertices 0..3 in cyclic order: `a` the
    /// diagonal reflection `(1 3)`, `b` the edge reflection `(0 1)(2 3)`.
    pub fn d4() -> FinGroup {
        FinGroup::new("D4", ab(), 4, vec![vec![0, 3, 2, 1], vec![1, 0, 3, 2]]).expect("valid permutations")
    }

    /// `A₅` with `a ↦ (0 1)(2 3)`, `b ↦ (0 2 4)`.
    pub fn a5() -> FinGroup {
        FinGroup::new("A5", ab(), 5, vec![vec![1, 0, 3, 2, 4], vec![2, 1, 4, 3, 0]]).expect("valid permutations")
    }

    /// The trivial group on `rank` generators.
    pub fn trivial(rank: usize) -> FinGroup {
        FinGroup::new("1", Alphabet::standard(rank), 1, vec![vec![0]; rank]).expect("valid permutations")
    }

    /// Resolves names such as `C3`, `C2xC2`, `S3`, `S4`, `D4`, `A5`, `1`.
    pub fn by_name(name: &str) -> Option<FinGroup> {
        let norm = name.trim().replace(['×', '*'], "x");
        match norm.as_str() {
            "C2xC2" | "V4" | "Klein" => Some(klein()),
            "S3" => Some(s3()),
            "S4" => Some(s4()),
            "D4" => Some(d4()),
            "A5" => Some(a5()),
            "1" | "trivial" => Some(trivial(2)),
            s => s
                .strip_prefix('C')
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .map(cyclic),
        }
    }

    pub const NAMES: &[&str] = &["C<n>", "C2xC2", "S3", "S4", "D4", "A5", "1"];
}
