//! Forest covers, pebble forest covers and synchronization trees as coalgebras;
//! tree-depth and tree-width as coalgebra numbers; path posets, pathwise
//! embeddings and open maps.
//!
//! Depths are chain cardinalities: a root has depth 1, so a cover of `K_n`
//! has height `n`.

use std::collections::HashMap;

use serde::Serialize;

use crate::comonads::{self, ComonadStructure, Flavour, Move, Play};
use crate::error::{guard, Error, Result};
use crate::structures::{components, gaifman, is_embedding, is_homomorphism, permutations, Elem, PointedStructure, Structure};

/// Largest carrier for which path posets are built.
pub const PATH_POSET_CAP: usize = 10_000;

/// A forest given by parent pointers; `None` marks a root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForestOrder {
    parent: Vec<Option<Elem>>,
}

impl ForestOrder {
    pub fn new(parent: Vec<Option<Elem>>) -> Self {
        ForestOrder { parent }
    }

    pub fn roots(n: usize) -> Self {
        ForestOrder { parent: vec![None; n] }
    }

    /// A single chain listing `elems` from the root down.
    pub fn chain(n: usize, elems: &[Elem]) -> Self {
        let mut parent = vec![None; n];
        for w in elems.windows(2) {
            parent[w[1]] = Some(w[0]);
        }
        ForestOrder { parent }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, x: Elem) -> Option<Elem> {
        self.parent[x]
    }

    pub fn parents(&self) -> &[Option<Elem>] {
        &self.parent
    }

    fn check_range(&self, n: usize) -> Result<()> {
        if self.parent.len() != n {
            return Err(Error::NotTotal { expected: n, found: self.parent.len() });
        }
        if let Some(bad) = self.parent.iter().flatten().find(|&&p| p >= n) {
            return Err(Error::ElementOutOfRange { index: *bad, size: n });
        }
        Ok(())
    }

    /// True iff every element reaches a root.
    pub fn is_acyclic(&self) -> bool {
        let n = self.parent.len();
        (0..n).all(|x| {
            let mut cur = x;
            for _ in 0..=n {
                match self.parent.get(cur).copied().flatten() {
                    None => return true,
                    Some(p) => cur = p,
                }
            }
            false
        })
    }

    /// The down-set of `x` listed from its root; assumes acyclicity.
    pub fn down_set(&self, x: Elem) -> Vec<Elem> {
        let mut c = vec![x];
        let mut cur = x;
        while let Some(p) = self.parent[cur] {
            c.push(p);
            cur = p;
        }
        c.reverse();
        c
    }

    pub fn depth(&self, x: Elem) -> usize {
        let mut d = 1;
        let mut cur = x;
        while let Some(p) = self.parent[cur] {
            d += 1;
            cur = p;
        }
        d
    }

    /// Maximal chain cardinality; 0 for the empty forest.
    pub fn height(&self) -> usize {
        (0..self.len()).map(|x| self.depth(x)).max().unwrap_or(0)
    }

    /// `a ≤ b`: `a` lies on the down-set of `b`.
    pub fn leq(&self, a: Elem, b: Elem) -> bool {
        let mut cur = Some(b);
        while let Some(c) = cur {
            if c == a {
                return true;
            }
            cur = self.parent[c];
        }
        false
    }

    pub fn comparable(&self, a: Elem, b: Elem) -> bool {
        self.leq(a, b) || self.leq(b, a)
    }

    pub fn children(&self) -> Vec<Vec<Elem>> {
        let mut ch = vec![Vec::new(); self.len()];
        for (x, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                ch[*p].push(x);
            }
        }
        ch
    }
}

/// A forest order together with a pebbling function into `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PebbleForestCover {
    pub order: ForestOrder,
    pub pebbles: Vec<usize>,
}

/// Acyclicity plus condition (E): Gaifman-adjacent elements are comparable.
pub fn check_forest_cover(a: &Structure, order: &ForestOrder) -> Result<bool> {
    order.check_range(a.size())?;
    if !order.is_acyclic() {
        return Ok(false);
    }
    Ok(gaifman(a).edges.iter().all(|&(x, y)| order.comparable(x, y)))
}

/// Conditions (E) and (P): if `a < b` are adjacent then the pebble of `a`
/// is not reused on the chain strictly above `a` up to and including `b`.
pub fn check_pebble_forest_cover(a: &Structure, order: &ForestOrder, pebbles: &[usize], n: usize) -> Result<bool> {
    if pebbles.len() != a.size() {
        return Err(Error::NotTotal { expected: a.size(), found: pebbles.len() });
    }
    if let Some(&bad) = pebbles.iter().find(|&&p| p == 0 || p > n) {
        return Err(Error::Invalid(format!("pebble {bad} outside 1..={n}")));
    }
    if !check_forest_cover(a, order)? {
        return Ok(false);
    }
    for &(x, y) in &gaifman(a).edges {
        let (low, high) = if order.leq(x, y) { (x, y) } else { (y, x) };
        let mut cur = high;
        while cur != low {
            if pebbles[cur] == pebbles[low] {
                return Ok(false);
            }
            cur = order.parent(cur).expect("low is an ancestor");
        }
    }
    Ok(true)
}

/// The tree order of a synchronization tree rooted at the point, if the pointed
/// structure is one: every state is reached from the point by exactly one
/// path, and each covering pair carries exactly one binary relation.
pub fn modal_tree_order(p: &PointedStructure) -> Option<ForestOrder> {
    let a = &p.structure;
    let n = a.size();
    let mut incoming: Vec<Vec<(usize, Elem)>> = vec![Vec::new(); n];
    for r in a.signature().binary() {
        for t in a.relation(r) {
            incoming[t[1]].push((r, t[0]));
        }
    }
    if !incoming[p.point].is_empty() {
        return None;
    }
    let mut parent = vec![None; n];
    for (x, inc) in incoming.iter().enumerate() {
        if x == p.point {
            continue;
        }
        if inc.len() != 1 {
            return None;
        }
        parent[x] = Some(inc[0].1);
    }
    let order = ForestOrder::new(parent);
    // Every state must hang below the point (no unreachable cycles).
    if !order.is_acyclic() || (0..n).any(|x| order.down_set(x)[0] != p.point) {
        return None;
    }
    Some(order)
}

fn tree_guard(a: &Structure, limit: usize) -> Result<Vec<u64>> {
    if a.size() > limit {
        return Err(guard("structure size", format!("{} elements (limit {limit})", a.size())));
    }
    gaifman(a).masks()
}

/// Tree-depth with a witnessing forest cover of that height.
pub fn tree_depth(a: &Structure) -> Result<(usize, ForestOrder)> {
    let adj = tree_guard(a, 24)?;
    let n = a.size();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut memo: HashMap<u64, (usize, usize)> = HashMap::new();
    let depth = components(&adj, all).into_iter().map(|c| td_connected(&adj, c, &mut memo)).max().unwrap_or(0);
    let mut parent = vec![None; n];
    for c in components(&adj, all) {
        td_witness(&adj, c, None, &mut memo, &mut parent);
    }
    let order = ForestOrder::new(parent);
    if order.height() != depth || !check_forest_cover(a, &order)? {
        return Err(Error::Internal("tree-depth witness failed its check".into()));
    }
    Ok((depth, order))
}

/// `td` of a connected vertex set and the root achieving it.
fn td_connected(adj: &[u64], set: u64, memo: &mut HashMap<u64, (usize, usize)>) -> usize {
    if set.count_ones() == 1 {
        return 1;
    }
    if let Some(&(d, _)) = memo.get(&set) {
        return d;
    }
    let mut best = (usize::MAX, 0);
    let mut rest = set;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let mut d = 0;
        for c in components(adj, set & !(1 << v)) {
            d = d.max(td_connected(adj, c, memo));
            if 1 + d >= best.0 {
                break;
            }
        }
        if 1 + d < best.0 {
            best = (1 + d, v);
        }
    }
    memo.insert(set, best);
    best.0
}

fn td_witness(adj: &[u64], set: u64, above: Option<Elem>, memo: &mut HashMap<u64, (usize, usize)>, parent: &mut [Option<Elem>]) {
    let root = if set.count_ones() == 1 {
        set.trailing_zeros() as usize
    } else {
        td_connected(adj, set, memo);
        memo[&set].1
    };
    parent[root] = above;
    for c in components(adj, set & !(1 << root)) {
        td_witness(adj, c, Some(root), memo, parent);
    }
}

/// Minimum height over every forest order on the universe that passes
/// [`check_forest_cover`]; exhaustive, for cross-checking [`tree_depth`].
pub fn tree_depth_exhaustive(a: &Structure) -> Result<usize> {
    let n = a.size();
    if n > 6 {
        return Err(guard("exhaustive tree-depth size<=6", format!("{n} elements")));
    }
    let mut best = if n == 0 { 0 } else { usize::MAX };
    let total = (n + 1).pow(n as u32);
    let mut parent = vec![None; n];
    for code in 0..total {
        let mut c = code;
        for p in parent.iter_mut() {
            let v = c % (n + 1);
            c /= n + 1;
            *p = if v == n { None } else { Some(v) };
        }
        if parent.iter().enumerate().any(|(x, p)| *p == Some(x)) {
            continue;
        }
        let order = ForestOrder::new(parent.clone());
        if check_forest_cover(a, &order)? {
            best = best.min(order.height());
        }
    }
    Ok(best)
}

/// Tree-width as the least `n` admitting an `n`-pebble forest cover, minus one,
/// with the witnessing cover.
pub fn tree_width(a: &Structure) -> Result<(usize, PebbleForestCover)> {
    let adj = tree_guard(a, 24)?;
    let n = a.size();
    if n == 0 {
        return Ok((0, PebbleForestCover { order: ForestOrder::roots(0), pebbles: Vec::new() }));
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    for pebbles in 1..=n {
        let mut search = PebbleSearch { adj: &adj, pebbles, memo: HashMap::new() };
        if components(&adj, all).into_iter().all(|c| search.feasible(c, 0)) {
            let mut parent = vec![None; n];
            let mut labels = vec![0; n];
            for c in components(&adj, all) {
                search.witness(c, &[], None, &mut parent, &mut labels);
            }
            let order = ForestOrder::new(parent);
            if !check_pebble_forest_cover(a, &order, &labels, pebbles)? {
                return Err(Error::Internal("pebble cover witness failed its check".into()));
            }
            return Ok((pebbles - 1, PebbleForestCover { order, pebbles: labels }));
        }
    }
    unreachable!("n pebbles always suffice for n elements")
}

/// Builds pebble forest covers top-down. A state is a connected set `set` of
/// elements still to place below the current branch, and the placed elements
/// `live` adjacent to it, which must keep their pebbles. Placing `v` needs a
/// pebble not held by `live`; its subtrees are the components of `set - v`.
struct PebbleSearch<'a> {
    adj: &'a [u64],
    pebbles: usize,
    memo: HashMap<(u64, u64), Option<usize>>,
}

impl PebbleSearch<'_> {
    fn neighbourhood(&self, set: u64) -> u64 {
        let mut nb = 0;
        let mut rest = set;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            nb |= self.adj[v];
        }
        nb
    }

    fn choice(&mut self, set: u64, live: u64) -> Option<usize> {
        if let Some(&c) = self.memo.get(&(set, live)) {
            return c;
        }
        let mut found = None;
        if (live.count_ones() as usize) < self.pebbles {
            let mut rest = set;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let placed = live | (1 << v);
                let ok = components(self.adj, set & !(1 << v))
                    .into_iter()
                    .all(|d| self.feasible(d, placed & self.neighbourhood(d)));
                if ok {
                    found = Some(v);
                    break;
                }
            }
        }
        self.memo.insert((set, live), found);
        found
    }

    fn feasible(&mut self, set: u64, live: u64) -> bool {
        self.choice(set, live).is_some()
    }

    fn witness(&mut self, set: u64, live: &[(Elem, usize)], above: Option<Elem>, parent: &mut [Option<Elem>], labels: &mut [usize]) {
        let live_mask = live.iter().fold(0u64, |m, &(e, _)| m | 1 << e);
        let v = self.choice(set, live_mask).expect("feasible state");
        let pebble = (1..=self.pebbles).find(|p| live.iter().all(|&(_, q)| q != *p)).expect("a free pebble");
        parent[v] = above;
        labels[v] = pebble;
        let mut placed: Vec<(Elem, usize)> = live.to_vec();
        placed.push((v, pebble));
        for d in components(self.adj, set & !(1 << v)) {
            let nb = self.neighbourhood(d);
            let sub: Vec<(Elem, usize)> = placed.iter().copied().filter(|&(e, _)| nb >> e & 1 == 1).collect();
            self.witness(d, &sub, Some(v), parent, labels);
        }
    }
}

/// Tree-width of the Gaifman graph as the least, over all elimination
/// orderings, of the largest neighbourhood met during elimination.
pub fn tree_width_oracle(a: &Structure) -> Result<usize> {
    let n = a.size();
    if n > 8 {
        return Err(guard("tree-width oracle size<=8", format!("{n} elements")));
    }
    let base = gaifman(a).masks()?;
    let mut best = usize::MAX;
    for order in permutations(n) {
        let mut adj = base.clone();
        let mut gone = 0u64;
        let mut width = 0;
        for &v in &order {
            let nb = adj[v] & !gone;
            width = width.max(nb.count_ones() as usize);
            if width >= best {
                break;
            }
            let mut rest = nb;
            while rest != 0 {
                let u = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                adj[u] |= nb & !(1 << u);
            }
            gone |= 1 << v;
        }
        best = best.min(width);
    }
    Ok(if n == 0 { 0 } else { best })
}

/// Which comonad a forest-ordered structure is a coalgebra for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CoalgebraKind {
    Ef,
    Pebble,
    Modal,
}

/// A structure with a forest order (and pebbling function for the pebble
/// kind); the concrete form of a coalgebra.
#[derive(Clone, Debug)]
pub struct ForestCoalgebra {
    pub kind: CoalgebraKind,
    pub structure: Structure,
    pub order: ForestOrder,
    pub pebbles: Option<Vec<usize>>,
}

impl ForestCoalgebra {
    /// The cofree coalgebra: carrier ordered by prefixes.
    pub fn from_comonad(cs: &ComonadStructure) -> Self {
        let kind = match cs.flavour() {
            Flavour::Ef { .. } => CoalgebraKind::Ef,
            Flavour::Pebble { .. } => CoalgebraKind::Pebble,
            Flavour::Modal { .. } => CoalgebraKind::Modal,
        };
        let pebbles = (kind == CoalgebraKind::Pebble).then(|| (0..cs.len()).map(|s| cs.pebble(s).expect("pebble play")).collect());
        ForestCoalgebra { kind, structure: cs.carrier().clone(), order: ForestOrder::new(cs.parents().to_vec()), pebbles }
    }

    pub fn from_cover(a: &Structure, order: ForestOrder) -> Result<Self> {
        if !check_forest_cover(a, &order)? {
            return Err(Error::Invalid("not a forest cover".into()));
        }
        Ok(ForestCoalgebra { kind: CoalgebraKind::Ef, structure: a.clone(), order, pebbles: None })
    }

    pub fn from_pebble_cover(a: &Structure, cover: &PebbleForestCover, n: usize) -> Result<Self> {
        if !check_pebble_forest_cover(a, &cover.order, &cover.pebbles, n)? {
            return Err(Error::Invalid("not a pebble forest cover".into()));
        }
        Ok(ForestCoalgebra {
            kind: CoalgebraKind::Pebble,
            structure: a.clone(),
            order: cover.order.clone(),
            pebbles: Some(cover.pebbles.clone()),
        })
    }

    pub fn from_tree(p: &PointedStructure) -> Result<Self> {
        let order = modal_tree_order(p).ok_or_else(|| Error::Invalid("not a synchronization tree".into()))?;
        Ok(ForestCoalgebra { kind: CoalgebraKind::Modal, structure: p.structure.clone(), order, pebbles: None })
    }

    fn path_object(&self, chain: &[Elem]) -> (Structure, Option<Vec<usize>>) {
        let s = self.structure.induced(chain);
        let p = self.pebbles.as_ref().map(|ps| chain.iter().map(|&x| ps[x]).collect());
        (s, p)
    }
}

/// Where each element goes under the coalgebra map, plus the law checks.
#[derive(Clone, Debug, Serialize)]
pub struct CoalgebraReport {
    pub plays: Vec<String>,
    pub homomorphism: bool,
    pub counit_law: bool,
    pub comultiplication_law: bool,
}

impl CoalgebraReport {
    pub fn passed(&self) -> bool {
        self.homomorphism && self.counit_law && self.comultiplication_law
    }
}

/// The coalgebra `α: A → G(A)` of a cover: each element goes to the play
/// listing its down-set, labelled by pebbles or relations as the flavour needs.
pub fn cover_to_coalgebra(x: &ForestCoalgebra, point: Option<Elem>, flavour: Flavour) -> Result<(Vec<usize>, CoalgebraReport)> {
    let a = &x.structure;
    let (limit, kind) = match flavour {
        Flavour::Ef { k } => (k, CoalgebraKind::Ef),
        Flavour::Pebble { k, .. } => (k, CoalgebraKind::Pebble),
        Flavour::Modal { k } => (k + 1, CoalgebraKind::Modal),
    };
    if kind != x.kind {
        return Err(Error::Invalid("cover kind does not match the comonad".into()));
    }
    let height = x.order.height();
    if height > limit {
        return Err(Error::Invalid(format!("chain of cardinality {height} exceeds the resource bound")));
    }
    if let Flavour::Pebble { n, .. } = flavour {
        let ps = x.pebbles.as_ref().ok_or_else(|| Error::Invalid("missing pebbles".into()))?;
        if !check_pebble_forest_cover(a, &x.order, ps, n)? {
            return Err(Error::Invalid("not a pebble forest cover".into()));
        }
    } else if kind == CoalgebraKind::Ef && !check_forest_cover(a, &x.order)? {
        return Err(Error::Invalid("not a forest cover".into()));
    }
    let cs = comonads::build(a, point, flavour, comonads::DEFAULT_CARRIER_CAP)?;
    let mut alpha = Vec::with_capacity(a.size());
    let mut plays = Vec::with_capacity(a.size());
    for e in 0..a.size() {
        let chain = x.order.down_set(e);
        let mut play: Play = Vec::with_capacity(chain.len());
        for (i, &c) in chain.iter().enumerate() {
            let label = match kind {
                CoalgebraKind::Ef => None,
                CoalgebraKind::Pebble => Some(x.pebbles.as_ref().expect("checked")[c]),
                CoalgebraKind::Modal if i == 0 => None,
                CoalgebraKind::Modal => {
                    let prev = chain[i - 1];
                    let labels: Vec<usize> = a.signature().binary().filter(|&r| a.holds(r, &[prev, c])).collect();
                    labels.first().copied()
                }
            };
            play.push(Move { label, elem: c });
        }
        let s = cs.index_of(&play).ok_or_else(|| Error::Invalid(format!("no play for element {}", a.element_name(e))))?;
        plays.push(cs.play_text(s));
        alpha.push(s);
    }
    let homomorphism = is_homomorphism(a, cs.carrier(), &alpha)?;
    let counit_law = (0..a.size()).all(|e| cs.last(alpha[e]) == e);
    // δ(α(x)) lists the prefixes of α(x); G(α)(α(x)) applies α to each move.
    let comultiplication_law = (0..a.size()).all(|e| {
        let prefixes = comonads::comultiply(&cs, alpha[e]);
        let mapped: Vec<usize> = cs.play(alpha[e]).iter().map(|m| alpha[m.elem]).collect();
        prefixes == mapped
    });
    Ok((alpha, CoalgebraReport { plays, homomorphism, counit_law, comultiplication_law }))
}

/// Nodes of a path poset: the branches' prefixes, ordered by extension.
#[derive(Clone, Debug)]
pub struct PathPoset {
    pub coalgebra: ForestCoalgebra,
    /// For each node, the chain of coalgebra elements it lists (root first).
    pub chains: Vec<Vec<Elem>>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Node of each coalgebra element.
    pub node_of: Vec<usize>,
}

impl PathPoset {
    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    /// The path object at a node: induced chain substructure and its pebbles.
    pub fn path_object(&self, node: usize) -> (Structure, Option<Vec<usize>>) {
        self.coalgebra.path_object(&self.chains[node])
    }
}

/// The poset of paths of a forest-ordered structure. EF and pebble
/// coalgebras get a formal root (the empty path); a synchronization tree is
/// rooted at its point already.
pub fn path_poset(x: &ForestCoalgebra) -> Result<PathPoset> {
    let n = x.structure.size();
    if n > PATH_POSET_CAP {
        return Err(guard("path poset cap", format!("{n} elements (limit {PATH_POSET_CAP})")));
    }
    let formal = x.kind != CoalgebraKind::Modal;
    let offset = usize::from(formal);
    let mut chains = Vec::with_capacity(n + offset);
    let mut parent = Vec::with_capacity(n + offset);
    if formal {
        chains.push(Vec::new());
        parent.push(None);
    }
    for e in 0..n {
        chains.push(x.order.down_set(e));
        parent.push(match x.order.parent(e) {
            Some(p) => Some(p + offset),
            None if formal => Some(0),
            None => None,
        });
    }
    let mut children = vec![Vec::new(); chains.len()];
    for (v, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(v);
        }
    }
    let node_of = (0..n).map(|e| e + offset).collect();
    Ok(PathPoset { coalgebra: x.clone(), chains, parent, children, node_of })
}

fn check_morphism(x: &ForestCoalgebra, y: &ForestCoalgebra, f: &[Elem]) -> Result<()> {
    if x.kind != y.kind {
        return Err(Error::NotMorphism("different coalgebra kinds".into()));
    }
    if !is_homomorphism(&x.structure, &y.structure, f)? {
        return Err(Error::NotMorphism("not a homomorphism".into()));
    }
    for e in 0..x.structure.size() {
        if let Some(p) = x.order.parent(e) {
            if !y.order.leq(f[p], f[e]) {
                return Err(Error::NotMorphism("not monotone".into()));
            }
        }
    }
    if let (Some(px), Some(py)) = (&x.pebbles, &y.pebbles) {
        if (0..f.len()).any(|e| px[e] != py[f[e]]) {
            return Err(Error::NotMorphism("pebbles not preserved".into()));
        }
    }
    Ok(())
}

/// Compares two chains as path objects along the height bijection.
fn chains_embed(x: &ForestCoalgebra, cx: &[Elem], y: &ForestCoalgebra, cy: &[Elem]) -> bool {
    if cx.len() != cy.len() {
        return false;
    }
    let (sx, px) = x.path_object(cx);
    let (sy, py) = y.path_object(cy);
    let id: Vec<Elem> = (0..cx.len()).collect();
    px == py && is_embedding(&sx, &sy, &id).unwrap_or(false)
}

/// True iff `f` restricted to every branch of `x` is an embedding.
pub fn is_pathwise_embedding(x: &ForestCoalgebra, y: &ForestCoalgebra, f: &[Elem]) -> Result<bool> {
    check_morphism(x, y, f)?;
    let children = x.order.children();
    for leaf in (0..x.structure.size()).filter(|&e| children[e].is_empty()) {
        let chain = x.order.down_set(leaf);
        let image: Vec<Elem> = chain.iter().map(|&e| f[e]).collect();
        let mut sorted = image.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != image.len() {
            return Ok(false);
        }
        let sx = x.structure.induced(&chain);
        let sy = y.structure.induced(&image);
        let id: Vec<Elem> = (0..chain.len()).collect();
        if !is_embedding(&sx, &sy, &id)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff every square of path embeddings over `f` has a diagonal filler:
/// whenever a path of `y` extends the image of a path of `x`, that extension
/// lifts to a path of `x` lying over it.
pub fn is_open(x: &ForestCoalgebra, y: &ForestCoalgebra, f: &[Elem]) -> Result<bool> {
    check_morphism(x, y, f)?;
    let px = path_poset(x)?;
    let py = path_poset(y)?;
    let x_desc = descendants(&px);
    let y_desc = descendants(&py);
    for (node, cx) in px.chains.iter().enumerate() {
        // Candidate extensions: paths of y strictly below the image of cx.
        let start = if cx.is_empty() {
            py.parent.iter().position(Option::is_none).expect("a root")
        } else {
            py.node_of[f[*cx.last().expect("nonempty")]]
        };
        let image: Vec<Elem> = cx.iter().map(|&e| f[e]).collect();
        for &m in &y_desc[start] {
            let cy = &py.chains[m];
            if cy.len() <= cx.len() || cy[..cx.len()] != image[..] || !chains_embed(x, cx, y, &cy[..cx.len()]) {
                continue;
            }
            let lifted = x_desc[node].iter().any(|&n2| {
                let c2 = &px.chains[n2];
                c2.len() == cy.len() && c2.iter().zip(cy).all(|(&a, &b)| f[a] == b) && chains_embed(x, c2, y, cy)
            });
            if !lifted {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn descendants(p: &PathPoset) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); p.len()];
    for v in 0..p.len() {
        let mut cur = Some(v);
        while let Some(c) = cur {
            out[c].push(v);
            cur = p.parent[c];
        }
    }
    out
}

/// p-morphism between pointed structures: point-preserving homomorphism that
/// reflects unary predicates and satisfies the back condition.
pub fn is_p_morphism(a: &PointedStructure, b: &PointedStructure, f: &[Elem]) -> Result<bool> {
    let (sa, sb) = (&a.structure, &b.structure);
    if !is_homomorphism(sa, sb, f)? || f[a.point] != b.point {
        return Ok(false);
    }
    let sig = sa.signature();
    for x in 0..sa.size() {
        for r in sig.unary() {
            if sb.holds(r, &[f[x]]) && !sa.holds(r, &[x]) {
                return Ok(false);
            }
        }
        for r in sig.binary() {
            for t in sb.relation(r).iter().filter(|t| t[0] == f[x]) {
                if !sa.relation(r).iter().any(|u| u[0] == x && f[u[1]] == t[1]) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
