//! Finite relational signatures and structures, homomorphisms, Gaifman graphs,
//! the equality expansion and enumeration up to isomorphism.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{guard, Error, Result, Violation};

/// Index of an element in a structure's universe.
pub type Elem = usize;

/// Name of the binary symbol added by [`i_expand`].
pub const EQUALITY: &str = "I";

/// Largest arity accepted by the text format.
pub const MAX_ARITY: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

/// A finite relational signature, kept sorted by symbol name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    symbols: Vec<Symbol>,
}

impl Signature {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut out: Vec<Symbol> = Vec::new();
        for (name, arity) in symbols {
            let name = name.into();
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(Error::InvalidSignature(format!("bad symbol name `{name}`")));
            }
            if arity == 0 {
                return Err(Error::InvalidSignature(format!("symbol `{name}` has arity 0")));
            }
            if out.iter().any(|s| s.name == name) {
                return Err(Error::InvalidSignature(format!("symbol `{name}` declared twice")));
            }
            out.push(Symbol { name, arity });
        }
        out.sort();
        Ok(Signature { symbols: out })
    }

    /// Parses a compact `E/2 P/1` listing.
    pub fn parse(text: &str) -> Result<Self> {
        let mut syms = Vec::new();
        for tok in text.split_whitespace() {
            let (name, arity) = tok
                .rsplit_once('/')
                .ok_or_else(|| Error::InvalidSignature(format!("expected NAME/ARITY, got `{tok}`")))?;
            let arity: usize = arity
                .parse()
                .map_err(|_| Error::InvalidSignature(format!("bad arity in `{tok}`")))?;
            syms.push((name.to_string(), arity));
        }
        Signature::new(syms)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn name(&self, rel: usize) -> &str {
        &self.symbols[rel].name
    }

    pub fn arity(&self, rel: usize) -> usize {
        self.symbols[rel].arity
    }

    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }

    /// True iff every arity is 1 or 2.
    pub fn is_modal(&self) -> bool {
        self.symbols.iter().all(|s| s.arity <= 2)
    }

    pub fn has_equality(&self) -> bool {
        self.index_of(EQUALITY).is_some()
    }

    pub fn unary(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&r| self.arity(r) == 1)
    }

    pub fn binary(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&r| self.arity(r) == 2)
    }

    pub fn with_symbol(&self, name: &str, arity: usize) -> Result<Self> {
        let mut syms: Vec<(String, usize)> =
            self.symbols.iter().map(|s| (s.name.clone(), s.arity)).collect();
        syms.push((name.to_string(), arity));
        Signature::new(syms)
    }

    pub fn without_symbol(&self, name: &str) -> Self {
        Signature { symbols: self.symbols.iter().filter(|s| s.name != name).cloned().collect() }
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.symbols.iter().map(|s| format!("{}/{}", s.name, s.arity)).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// A structure with string tuples, as it arrives from a parser. Nothing is checked.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawStructure {
    pub signature: Signature,
    pub universe: Vec<String>,
    pub interp: BTreeMap<String, Vec<Vec<String>>>,
}

/// Lists every broken invariant of `raw`; empty iff it describes a valid structure.
pub fn validate(raw: &RawStructure) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for e in &raw.universe {
        if !seen.insert(e.as_str()) {
            out.push(Violation::DuplicateElement(e.clone()));
        }
    }
    for (sym, tuples) in &raw.interp {
        let Some(rel) = raw.signature.index_of(sym) else {
            out.push(Violation::UnknownSymbol(sym.clone()));
            continue;
        };
        let arity = raw.signature.arity(rel);
        for t in tuples {
            if t.len() != arity {
                out.push(Violation::ArityMismatch { symbol: sym.clone(), expected: arity, tuple: t.clone() });
            }
            for e in t {
                if !seen.contains(e.as_str()) {
                    out.push(Violation::UnknownElement {
                        symbol: sym.clone(),
                        tuple: t.clone(),
                        element: e.clone(),
                    });
                }
            }
        }
    }
    out
}

/// A finite structure. Elements are indices into the universe list, whose order
/// is the canonical iteration order everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    signature: Signature,
    elements: Vec<String>,
    relations: Vec<BTreeSet<Vec<Elem>>>,
    lookup: HashMap<String, Elem>,
}

impl Structure {
    pub fn empty(signature: Signature) -> Self {
        let relations = vec![BTreeSet::new(); signature.len()];
        Structure { signature, elements: Vec::new(), relations, lookup: HashMap::new() }
    }

    pub fn new<S: Into<String>>(signature: Signature, elements: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut s = Structure::empty(signature);
        for e in elements {
            s.add_element(e)?;
        }
        Ok(s)
    }

    pub fn add_element(&mut self, name: impl Into<String>) -> Result<Elem> {
        let name = name.into();
        if self.lookup.contains_key(&name) {
            return Err(Error::InvalidStructure(vec![Violation::DuplicateElement(name)]));
        }
        let idx = self.elements.len();
        self.lookup.insert(name.clone(), idx);
        self.elements.push(name);
        Ok(idx)
    }

    /// Adds a tuple; returns false if it was already present.
    pub fn insert(&mut self, rel: usize, tuple: Vec<Elem>) -> Result<bool> {
        if rel >= self.signature.len() {
            return Err(Error::Invalid(format!("relation index {rel} out of range")));
        }
        let arity = self.signature.arity(rel);
        if tuple.len() != arity {
            return Err(Error::InvalidStructure(vec![Violation::ArityMismatch {
                symbol: self.signature.name(rel).to_string(),
                expected: arity,
                tuple: tuple.iter().map(|e| e.to_string()).collect(),
            }]));
        }
        if let Some(&bad) = tuple.iter().find(|&&e| e >= self.elements.len()) {
            return Err(Error::ElementOutOfRange { index: bad, size: self.elements.len() });
        }
        Ok(self.relations[rel].insert(tuple))
    }

    pub fn insert_named(&mut self, symbol: &str, names: &[&str]) -> Result<bool> {
        let rel = self
            .signature
            .index_of(symbol)
            .ok_or_else(|| Error::InvalidStructure(vec![Violation::UnknownSymbol(symbol.to_string())]))?;
        let mut tuple = Vec::with_capacity(names.len());
        for n in names {
            let e = self.element(n).ok_or_else(|| {
                Error::InvalidStructure(vec![Violation::UnknownElement {
                    symbol: symbol.to_string(),
                    tuple: names.iter().map(|s| s.to_string()).collect(),
                    element: n.to_string(),
                }])
            })?;
            tuple.push(e);
        }
        self.insert(rel, tuple)
    }

    pub fn from_raw(raw: &RawStructure) -> Result<Self> {
        let violations = validate(raw);
        if !violations.is_empty() {
            return Err(Error::InvalidStructure(violations));
        }
        let mut s = Structure::new(raw.signature.clone(), raw.universe.iter().cloned())?;
        for (sym, tuples) in &raw.interp {
            for t in tuples {
                let names: Vec<&str> = t.iter().map(String::as_str).collect();
                s.insert_named(sym, &names)?;
            }
        }
        Ok(s)
    }

    pub fn to_raw(&self) -> RawStructure {
        let mut interp = BTreeMap::new();
        for (r, tuples) in self.relations.iter().enumerate() {
            let named: Vec<Vec<String>> = tuples
                .iter()
                .map(|t| t.iter().map(|&e| self.elements[e].clone()).collect())
                .collect();
            interp.insert(self.signature.name(r).to_string(), named);
        }
        RawStructure { signature: self.signature.clone(), universe: self.elements.clone(), interp }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn element_name(&self, e: Elem) -> &str {
        &self.elements[e]
    }

    pub fn element(&self, name: &str) -> Option<Elem> {
        self.lookup.get(name).copied()
    }

    pub fn relation(&self, rel: usize) -> &BTreeSet<Vec<Elem>> {
        &self.relations[rel]
    }

    pub fn relation_named(&self, name: &str) -> Option<&BTreeSet<Vec<Elem>>> {
        self.signature.index_of(name).map(|r| &self.relations[r])
    }

    pub fn holds(&self, rel: usize, tuple: &[Elem]) -> bool {
        self.relations[rel].contains(tuple)
    }

    pub fn tuple_count(&self) -> usize {
        self.relations.iter().map(BTreeSet::len).sum()
    }

    /// Iterates `(relation index, tuple)` over all interpreted tuples.
    pub fn tuples(&self) -> impl Iterator<Item = (usize, &Vec<Elem>)> + '_ {
        self.relations.iter().enumerate().flat_map(|(r, ts)| ts.iter().map(move |t| (r, t)))
    }

    /// The induced substructure on `elems`, listed in the given order.
    pub fn induced(&self, elems: &[Elem]) -> Structure {
        let mut pos = vec![usize::MAX; self.size()];
        let mut out = Structure::empty(self.signature.clone());
        for (i, &e) in elems.iter().enumerate() {
            pos[e] = i;
            out.add_element(self.elements[e].clone()).expect("distinct elements");
        }
        for (r, t) in self.tuples() {
            if t.iter().all(|&e| pos[e] != usize::MAX) {
                out.relations[r].insert(t.iter().map(|&e| pos[e]).collect());
            }
        }
        out
    }

    /// Same structure with every element renamed by `rename`.
    pub fn relabel(&self, mut rename: impl FnMut(Elem, &str) -> String) -> Result<Structure> {
        let mut out = Structure::empty(self.signature.clone());
        for (i, e) in self.elements.iter().enumerate() {
            out.add_element(rename(i, e))?;
        }
        out.relations = self.relations.clone();
        Ok(out)
    }

    /// The reduct (or expansion by empty relations) to `signature`.
    pub fn with_signature(&self, signature: &Signature) -> Structure {
        let mut out = Structure::empty(signature.clone());
        out.elements = self.elements.clone();
        out.lookup = self.lookup.clone();
        for (r, sym) in signature.symbols().iter().enumerate() {
            if let Some(src) = self.signature.index_of(&sym.name) {
                if self.signature.arity(src) == sym.arity {
                    out.relations[r] = self.relations[src].clone();
                }
            }
        }
        out
    }
}

/// A structure over a modal signature with a distinguished element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointedStructure {
    pub structure: Structure,
    pub point: Elem,
}

impl PointedStructure {
    pub fn new(structure: Structure, point: Elem) -> Result<Self> {
        if !structure.signature().is_modal() {
            return Err(Error::NotModal);
        }
        if point >= structure.size() {
            return Err(Error::ElementOutOfRange { index: point, size: structure.size() });
        }
        Ok(PointedStructure { structure, point })
    }
}

/// Undirected graph on element indices; edges stored with the smaller end first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaifmanGraph {
    pub vertices: usize,
    pub edges: BTreeSet<(Elem, Elem)>,
}

impl GaifmanGraph {
    pub fn adjacent(&self, a: Elem, b: Elem) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbours(&self) -> Vec<Vec<Elem>> {
        let mut adj = vec![Vec::new(); self.vertices];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Neighbourhoods as bitmasks; requires at most 64 vertices.
    pub fn masks(&self) -> Result<Vec<u64>> {
        if self.vertices > 64 {
            return Err(guard("vertices<=64", format!("{} vertices", self.vertices)));
        }
        let mut m = vec![0u64; self.vertices];
        for &(a, b) in &self.edges {
            m[a] |= 1 << b;
            m[b] |= 1 << a;
        }
        Ok(m)
    }
}

pub fn gaifman(a: &Structure) -> GaifmanGraph {
    let mut edges = BTreeSet::new();
    for (_, t) in a.tuples() {
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                if t[i] != t[j] {
                    edges.insert((t[i].min(t[j]), t[i].max(t[j])));
                }
            }
        }
    }
    GaifmanGraph { vertices: a.size(), edges }
}

/// Connected components of a vertex set given as a bitmask over `adj`.
pub fn components(adj: &[u64], set: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut rest = set;
    while rest != 0 {
        let start = rest.trailing_zeros() as usize;
        let mut comp = 1u64 << start;
        let mut frontier = comp;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let new = adj[v] & set & !comp;
            comp |= new;
            frontier |= new;
        }
        rest &= !comp;
        out.push(comp);
    }
    out
}

fn check_map(dom: &Structure, cod: &Structure, map: &[Elem]) -> Result<()> {
    if dom.signature() != cod.signature() {
        return Err(Error::SignatureMismatch);
    }
    if map.len() != dom.size() {
        return Err(Error::NotTotal { expected: dom.size(), found: map.len() });
    }
    if let Some(&bad) = map.iter().find(|&&b| b >= cod.size()) {
        return Err(Error::ElementOutOfRange { index: bad, size: cod.size() });
    }
    Ok(())
}

/// True iff `map` sends every related tuple of `dom` to a related tuple of `cod`.
pub fn is_homomorphism(dom: &Structure, cod: &Structure, map: &[Elem]) -> Result<bool> {
    check_map(dom, cod, map)?;
    let mut image = Vec::new();
    for (r, t) in dom.tuples() {
        image.clear();
        image.extend(t.iter().map(|&e| map[e]));
        if !cod.holds(r, &image) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff `map` is an injective homomorphism that also reflects every relation.
pub fn is_embedding(dom: &Structure, cod: &Structure, map: &[Elem]) -> Result<bool> {
    if !is_homomorphism(dom, cod, map)? {
        return Ok(false);
    }
    let mut inverse = vec![usize::MAX; cod.size()];
    for (a, &b) in map.iter().enumerate() {
        if inverse[b] != usize::MAX {
            return Ok(false);
        }
        inverse[b] = a;
    }
    for (r, t) in cod.tuples() {
        if t.iter().all(|&b| inverse[b] != usize::MAX) {
            let pre: Vec<Elem> = t.iter().map(|&b| inverse[b]).collect();
            if !dom.holds(r, &pre) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Composition `g ∘ h` of two maps given as tables.
pub fn compose(h: &[Elem], g: &[Elem]) -> Vec<Elem> {
    h.iter().map(|&x| g[x]).collect()
}

#[derive(Clone)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn full(n: usize) -> Self {
        let mut w = vec![u64::MAX; n.div_ceil(64)];
        if !n.is_multiple_of(64) {
            if let Some(last) = w.last_mut() {
                *last = (1u64 << (n % 64)) - 1;
            }
        }
        BitSet(w)
    }
    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn remove(&mut self, i: usize) {
        self.0[i / 64] &= !(1u64 << (i % 64));
    }
    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
}

/// One relational constraint of a hom search, split by where it gets checked.
struct Constraint {
    rel: usize,
    tuple: Vec<Elem>,
    /// Largest variable: its domain is filtered once every other variable is set.
    last: Elem,
}

/// Backtracking homomorphism search with forward checking. Variables are the
/// domain elements in universe order; values are tried in universe order, so
/// solutions come out lexicographically sorted.
pub(crate) struct HomSearch<'a> {
    cod: &'a Structure,
    n: usize,
    /// Constraints whose second-largest distinct variable is the key.
    trigger: Vec<Vec<Constraint>>,
    initial: Vec<BitSet>,
    injective: bool,
}

impl<'a> HomSearch<'a> {
    pub(crate) fn new(dom: &Structure, cod: &'a Structure, injective: bool) -> Result<Self> {
        if dom.signature() != cod.signature() {
            return Err(Error::SignatureMismatch);
        }
        let n = dom.size();
        let m = cod.size();
        let mut initial = vec![BitSet::full(m); n];
        let mut trigger: Vec<Vec<Constraint>> = (0..n).map(|_| Vec::new()).collect();
        for (r, t) in dom.tuples() {
            let mut vars: Vec<Elem> = t.clone();
            vars.sort_unstable();
            vars.dedup();
            let last = *vars.last().expect("arity >= 1");
            if vars.len() == 1 {
                // Unary-style constraint: restrict the domain once.
                let dom_v = &mut initial[last];
                for b in 0..m {
                    let image = vec![b; t.len()];
                    if !cod.holds(r, &image) {
                        dom_v.remove(b);
                    }
                }
            } else {
                let second = vars[vars.len() - 2];
                trigger[second].push(Constraint { rel: r, tuple: t.clone(), last });
            }
        }
        Ok(HomSearch { cod, n, trigger, initial, injective })
    }

    /// Calls `visit` on each solution until it returns false.
    pub(crate) fn run(&self, visit: &mut dyn FnMut(&[Elem]) -> bool) {
        if self.initial.iter().any(BitSet::is_empty) && self.n > 0 {
            return;
        }
        let mut domains = self.initial.clone();
        let mut assignment = vec![0; self.n];
        let mut used = vec![false; self.cod.size()];
        self.step(0, &mut domains, &mut assignment, &mut used, visit);
    }

    fn step(
        &self,
        var: usize,
        domains: &mut Vec<BitSet>,
        assignment: &mut Vec<Elem>,
        used: &mut Vec<bool>,
        visit: &mut dyn FnMut(&[Elem]) -> bool,
    ) -> bool {
        if var == self.n {
            return visit(assignment);
        }
        let m = self.cod.size();
        let mut image = Vec::new();
        for b in 0..m {
            if !domains[var].contains(b) || (self.injective && used[b]) {
                continue;
            }
            assignment[var] = b;
            let mut saved: Vec<(usize, BitSet)> = Vec::new();
            let mut wiped = false;
            for c in &self.trigger[var] {
                if !saved.iter().any(|(v, _)| *v == c.last) {
                    saved.push((c.last, domains[c.last].clone()));
                }
                let target = &mut domains[c.last];
                for w in 0..m {
                    if !target.contains(w) {
                        continue;
                    }
                    image.clear();
                    image.extend(c.tuple.iter().map(|&x| if x == c.last { w } else { assignment[x] }));
                    if !self.cod.holds(c.rel, &image) {
                        target.remove(w);
                    }
                }
                if target.is_empty() {
                    wiped = true;
                    break;
                }
            }
            if !wiped {
                used[b] = true;
                let go_on = self.step(var + 1, domains, assignment, used, visit);
                used[b] = false;
                if !go_on {
                    for (v, d) in saved {
                        domains[v] = d;
                    }
                    return false;
                }
            }
            for (v, d) in saved {
                domains[v] = d;
            }
        }
        true
    }
}

/// All homomorphisms `c → a` (at most `limit`), lexicographic in universe order.
pub fn find_homs(c: &Structure, a: &Structure, limit: Option<usize>) -> Result<Vec<Vec<Elem>>> {
    let search = HomSearch::new(c, a, false)?;
    let mut out = Vec::new();
    if limit == Some(0) {
        return Ok(out);
    }
    search.run(&mut |h| {
        out.push(h.to_vec());
        limit.is_none_or(|l| out.len() < l)
    });
    Ok(out)
}

/// Number of homomorphisms `c → a`, without size guards.
pub fn count_homs_unguarded(c: &Structure, a: &Structure) -> Result<u64> {
    let search = HomSearch::new(c, a, false)?;
    let mut count = 0u64;
    search.run(&mut |_| {
        count += 1;
        true
    });
    Ok(count)
}

/// An isomorphism `a → b`, if one exists.
pub fn iso_check(a: &Structure, b: &Structure) -> Result<Option<Vec<Elem>>> {
    if a.signature() != b.signature() {
        return Err(Error::SignatureMismatch);
    }
    if a.size() != b.size() {
        return Ok(None);
    }
    for r in 0..a.signature().len() {
        if a.relation(r).len() != b.relation(r).len() {
            return Ok(None);
        }
    }
    let search = HomSearch::new(a, b, true)?;
    let mut found = None;
    search.run(&mut |h| {
        found = Some(h.to_vec());
        false
    });
    Ok(found)
}

/// Expansion by the diagonal relation `I`.
pub fn i_expand(a: &Structure) -> Result<Structure> {
    if a.signature().has_equality() {
        return Err(Error::ReservedEquality);
    }
    let sig = a.signature().with_symbol(EQUALITY, 2)?;
    let mut out = a.with_signature(&sig);
    let eq = sig.index_of(EQUALITY).expect("just added");
    for e in 0..a.size() {
        out.insert(eq, vec![e, e])?;
    }
    Ok(out)
}

/// Quotient by the equivalence relation generated by `I`, as a structure over
/// the signature without `I`. Classes are ordered by their least member.
pub fn i_quotient(a: &Structure) -> Result<Structure> {
    let eq = a.signature().index_of(EQUALITY).ok_or(Error::MissingEquality)?;
    if a.signature().arity(eq) != 2 {
        return Err(Error::MissingEquality);
    }
    let n = a.size();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for t in a.relation(eq) {
        let (x, y) = (find(&mut parent, t[0]), find(&mut parent, t[1]));
        if x != y {
            parent[x.max(y)] = x.min(y);
        }
    }
    let mut class_of = vec![0; n];
    let mut members: Vec<Vec<Elem>> = Vec::new();
    let mut root_class: HashMap<usize, usize> = HashMap::new();
    for (x, class) in class_of.iter_mut().enumerate() {
        let r = find(&mut parent, x);
        let next = members.len();
        let c = *root_class.entry(r).or_insert(next);
        if c == members.len() {
            members.push(Vec::new());
        }
        members[c].push(x);
        *class = c;
    }
    let sig = a.signature().without_symbol(EQUALITY);
    let names = members.iter().map(|ms| {
        if ms.len() == 1 {
            a.element_name(ms[0]).to_string()
        } else {
            let parts: Vec<&str> = ms.iter().map(|&m| a.element_name(m)).collect();
            format!("{{{}}}", parts.join(","))
        }
    });
    let mut out = Structure::new(sig.clone(), names.collect::<Vec<_>>())?;
    for (r, sym) in sig.symbols().iter().enumerate() {
        let src = a.signature().index_of(&sym.name).expect("reduct symbol");
        for t in a.relation(src) {
            out.insert(r, t.iter().map(|&x| class_of[x]).collect())?;
        }
    }
    Ok(out)
}

/// Default element names: `a`..`z`, then `v26`, `v27`, ...
pub fn element_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| if i < 26 { ((b'a' + i as u8) as char).to_string() } else { format!("v{i}") })
        .collect()
}

pub fn disjoint_union(a: &Structure, b: &Structure) -> Result<Structure> {
    if a.signature() != b.signature() {
        return Err(Error::SignatureMismatch);
    }
    let names = a
        .elements()
        .iter()
        .map(|e| format!("0:{e}"))
        .chain(b.elements().iter().map(|e| format!("1:{e}")));
    let mut out = Structure::new(a.signature().clone(), names.collect::<Vec<_>>())?;
    let shift = a.size();
    for (r, t) in a.tuples() {
        out.insert(r, t.clone())?;
    }
    for (r, t) in b.tuples() {
        out.insert(r, t.iter().map(|&e| e + shift).collect())?;
    }
    Ok(out)
}

/// Categorical product: pairs, related iff related in both components.
pub fn product(a: &Structure, b: &Structure) -> Result<Structure> {
    if a.signature() != b.signature() {
        return Err(Error::SignatureMismatch);
    }
    let m = b.size();
    let mut names = Vec::with_capacity(a.size() * m);
    for x in a.elements() {
        for y in b.elements() {
            names.push(format!("({x},{y})"));
        }
    }
    let mut out = Structure::new(a.signature().clone(), names)?;
    for r in 0..a.signature().len() {
        for ta in a.relation(r) {
            for tb in b.relation(r) {
                out.insert(r, ta.iter().zip(tb).map(|(&x, &y)| x * m + y).collect())?;
            }
        }
    }
    Ok(out)
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// Sorted linear codes of the tuples of each relation after renaming by `perm`.
fn encoding(a: &Structure, perm: &[usize]) -> Vec<Vec<u64>> {
    let n = a.size() as u64;
    (0..a.signature().len())
        .map(|r| {
            let mut codes: Vec<u64> = a
                .relation(r)
                .iter()
                .map(|t| t.iter().fold(0u64, |acc, &e| acc * n + perm[e] as u64))
                .collect();
            codes.sort_unstable();
            codes
        })
        .collect()
}

/// Canonical representative of the isomorphism class of `a`: the relabelling
/// whose tuple encoding is least over all permutations of the universe.
pub fn canonical_form(a: &Structure) -> Result<Structure> {
    if a.size() > 8 {
        return Err(guard("canonical-form size<=8", format!("{} elements", a.size())));
    }
    let mut best: Option<(Vec<Vec<u64>>, Vec<usize>)> = None;
    for perm in permutations(a.size()) {
        let enc = encoding(a, &perm);
        if best.as_ref().is_none_or(|(b, _)| enc < *b) {
            best = Some((enc, perm));
        }
    }
    let (_, perm) = best.expect("at least the identity permutation");
    let names = element_names(a.size());
    let mut out = Structure::new(a.signature().clone(), names)?;
    for (r, t) in a.tuples() {
        out.insert(r, t.iter().map(|&e| perm[e]).collect())?;
    }
    Ok(out)
}

/// Compact one-line text for a structure, e.g. `3|E:01,12|P:0` (elements are
/// universe positions). Applied to canonical forms it names isomorphism classes.
pub fn descriptor(a: &Structure) -> String {
    let mut out = a.size().to_string();
    for (r, sym) in a.signature().symbols().iter().enumerate() {
        let tuples: Vec<String> = a
            .relation(r)
            .iter()
            .map(|t| t.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("."))
            .collect();
        out.push_str(&format!("|{}:{}", sym.name, tuples.join(",")));
    }
    out
}

/// Largest number of labelled tuple slots per size that enumeration will scan.
const ENUMERATION_BITS: u32 = 22;

/// Bit layout of labelled structures of a fixed size: every possible tuple of
/// every relation gets one bit.
struct Layout {
    n: usize,
    slots: Vec<(usize, Vec<Elem>)>,
}

impl Layout {
    fn new(sig: &Signature, n: usize) -> Self {
        let mut slots = Vec::new();
        for r in 0..sig.len() {
            let arity = sig.arity(r);
            let total = n.pow(arity as u32);
            for code in 0..total {
                let mut t = vec![0; arity];
                let mut c = code;
                for i in (0..arity).rev() {
                    t[i] = c % n;
                    c /= n;
                }
                slots.push((r, t));
            }
        }
        Layout { n, slots }
    }

    fn slot_index(&self) -> HashMap<(usize, Vec<Elem>), usize> {
        self.slots.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect()
    }

    /// For each permutation, where each bit moves.
    fn bit_maps(&self) -> Vec<Vec<usize>> {
        let index = self.slot_index();
        permutations(self.n)
            .into_iter()
            .skip(1)
            .map(|perm| {
                self.slots
                    .iter()
                    .map(|(r, t)| index[&(*r, t.iter().map(|&e| perm[e]).collect::<Vec<_>>())])
                    .collect()
            })
            .collect()
    }
}

fn permute_mask(mask: u64, map: &[usize]) -> u64 {
    let mut out = 0u64;
    let mut m = mask;
    while m != 0 {
        let b = m.trailing_zeros() as usize;
        m &= m - 1;
        out |= 1 << map[b];
    }
    out
}

/// Keeps the masks that are least in their orbit, in increasing order.
fn canonical_masks(bits: usize, maps: &[Vec<usize>], admissible: impl Fn(u64) -> bool) -> Vec<u64> {
    let mut out = Vec::new();
    for mask in 0..(1u64 << bits) {
        if admissible(mask) && maps.iter().all(|m| permute_mask(mask, m) >= mask) {
            out.push(mask);
        }
    }
    out
}

/// One representative per isomorphism class of structures with 1..=max_size
/// elements, by size and then by encoding.
pub fn enumerate_structures(sig: &Signature, max_size: usize) -> Result<Vec<Structure>> {
    let mut out = Vec::new();
    for n in 1..=max_size {
        let layout = Layout::new(sig, n);
        let bits = layout.slots.len();
        if bits as u32 > ENUMERATION_BITS {
            return Err(guard(
                "enumeration size",
                format!("{bits} labelled tuple slots at size {n} (limit {ENUMERATION_BITS})"),
            ));
        }
        let maps = layout.bit_maps();
        for mask in canonical_masks(bits, &maps, |_| true) {
            let mut s = Structure::new(sig.clone(), element_names(n))?;
            for (i, (r, t)) in layout.slots.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    s.insert(*r, t.clone())?;
                }
            }
            out.push(s);
        }
    }
    Ok(out)
}

/// Signature `{E/2}` used for graphs.
pub fn graph_signature() -> Signature {
    Signature::new([("E", 2)]).expect("static signature")
}

/// One representative per isomorphism class of simple undirected graphs
/// (symmetric, loop-free `E`) with 1..=max_size vertices.
pub fn enumerate_graphs(max_size: usize) -> Result<Vec<Structure>> {
    if max_size > 7 {
        return Err(guard("graph enumeration size<=7", format!("{max_size} vertices")));
    }
    let mut out = Vec::new();
    for n in 1..=max_size {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let index: HashMap<(usize, usize), usize> = pairs.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let maps: Vec<Vec<usize>> = permutations(n)
            .into_iter()
            .skip(1)
            .map(|perm| {
                pairs
                    .iter()
                    .map(|&(i, j)| index[&(perm[i].min(perm[j]), perm[i].max(perm[j]))])
                    .collect()
            })
            .collect();
        for mask in canonical_masks(pairs.len(), &maps, |_| true) {
            let edges: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
            out.push(catalog::graph(n, &edges));
        }
    }
    Ok(out)
}

/// Small named structures used throughout tests and examples.
pub mod catalog {
    use super::*;

    /// Undirected graph: `E` holds in both directions for each listed edge.
    pub fn graph(n: usize, edges: &[(usize, usize)]) -> Structure {
        let mut s = Structure::new(graph_signature(), element_names(n)).expect("fresh names");
        for &(a, b) in edges {
            s.insert(0, vec![a, b]).expect("in range");
            s.insert(0, vec![b, a]).expect("in range");
        }
        s
    }

    pub fn digraph(n: usize, edges: &[(usize, usize)]) -> Structure {
        let mut s = Structure::new(graph_signature(), element_names(n)).expect("fresh names");
        for &(a, b) in edges {
            s.insert(0, vec![a, b]).expect("in range");
        }
        s
    }

    pub fn edgeless(n: usize) -> Structure {
        graph(n, &[])
    }

    pub fn complete(n: usize) -> Structure {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        graph(n, &edges)
    }

    pub fn cycle(n: usize) -> Structure {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        graph(n, &edges)
    }

    /// Undirected path on `n` vertices.
    pub fn path(n: usize) -> Structure {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        graph(n, &edges)
    }

    /// Directed path with `len` edges (and `len + 1` vertices).
    pub fn directed_path(len: usize) -> Structure {
        let edges: Vec<_> = (0..len).map(|i| (i, i + 1)).collect();
        digraph(len + 1, &edges)
    }

    /// A single element with a loop.
    pub fn loop_point() -> Structure {
        digraph(1, &[(0, 0)])
    }
}
