//! Explicit Ehrenfeucht–Fraïssé, pebbling and modal comonads on finite
//! structures, in Kleisli form.
//!
//! A [`ComonadStructure`] holds the interned plays over a base structure, the
//! prefix forest, and the carrier structure on the plays. Kleisli arrows are
//! plain tables indexed by play handles.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{guard, Error, Result};
use crate::structures::{find_homs, is_homomorphism, Elem, PointedStructure, Structure};

/// Default bound on the number of plays in a built carrier.
pub const DEFAULT_CARRIER_CAP: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavour {
    /// Plays of length at most `k`.
    Ef { k: usize },
    /// Pebble-indexed plays with `n` pebbles, length at most `k`.
    Pebble { n: usize, k: usize },
    /// Relation-labelled paths from the point with at most `k` steps.
    Modal { k: usize },
}

/// One move of a play. `label` is the pebble index (1-based) for pebble plays,
/// the binary relation index for modal steps, and `None` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub label: Option<usize>,
    pub elem: Elem,
}

pub type Play = Vec<Move>;

/// A built comonad value `G(A)`.
#[derive(Clone, Debug)]
pub struct ComonadStructure {
    flavour: Flavour,
    base: Structure,
    point: Option<Elem>,
    plays: Vec<Play>,
    index: HashMap<Play, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    carrier: Structure,
}

fn carrier_size(branching: usize, levels: usize, first: usize, cap: usize) -> Result<usize> {
    // first * (1 + b + b^2 + ... + b^(levels-1)), checked against the cap.
    let mut total: usize = 0;
    let mut layer = first;
    for i in 0..levels {
        if i > 0 {
            layer = layer.saturating_mul(branching);
        }
        total = total.saturating_add(layer);
        if total > cap {
            return Err(guard("carrier cap", format!("more than {cap} plays")));
        }
        if layer == 0 {
            break;
        }
    }
    Ok(total)
}

impl ComonadStructure {
    pub fn flavour(&self) -> Flavour {
        self.flavour
    }

    pub fn base(&self) -> &Structure {
        &self.base
    }

    pub fn point(&self) -> Option<Elem> {
        self.point
    }

    pub fn carrier(&self) -> &Structure {
        &self.carrier
    }

    pub fn len(&self) -> usize {
        self.plays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plays.is_empty()
    }

    pub fn play(&self, s: usize) -> &Play {
        &self.plays[s]
    }

    pub fn plays(&self) -> &[Play] {
        &self.plays
    }

    pub fn index_of(&self, play: &[Move]) -> Option<usize> {
        self.index.get(play).copied()
    }

    /// Immediate prefix of a play; `None` for roots.
    pub fn parent(&self, s: usize) -> Option<usize> {
        self.parent[s]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, s: usize) -> &[usize] {
        &self.children[s]
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&s| self.parent[s].is_none())
    }

    /// The plays from the root down to `s`, inclusive.
    pub fn chain(&self, s: usize) -> Vec<usize> {
        let mut c = vec![s];
        let mut cur = s;
        while let Some(p) = self.parent[cur] {
            c.push(p);
            cur = p;
        }
        c.reverse();
        c
    }

    /// Last element of a play.
    pub fn last(&self, s: usize) -> Elem {
        self.plays[s].last().expect("plays are nonempty").elem
    }

    pub fn play_text(&self, s: usize) -> String {
        play_text(&self.base, self.flavour, &self.plays[s])
    }

    /// Pebble of the last move (pebble flavour only).
    pub fn pebble(&self, s: usize) -> Option<usize> {
        match self.flavour {
            Flavour::Pebble { .. } => self.plays[s].last().and_then(|m| m.label),
            _ => None,
        }
    }

    fn intern(&mut self, play: Play, parent: Option<usize>) {
        let id = self.plays.len();
        self.index.insert(play.clone(), id);
        self.plays.push(play);
        self.parent.push(parent);
        self.children.push(Vec::new());
        if let Some(p) = parent {
            self.children[p].push(id);
        }
    }

    fn finish_carrier(&mut self) -> Result<()> {
        let names: Vec<String> = (0..self.len()).map(|s| self.play_text(s)).collect();
        self.carrier = Structure::new(self.base.signature().clone(), names)?;
        Ok(())
    }
}

/// Bracketed text of a play: `[a,b]`, `[(1,a),(2,b)]` or `[a,(R,b)]`.
pub fn play_text(base: &Structure, flavour: Flavour, play: &[Move]) -> String {
    let parts: Vec<String> = play
        .iter()
        .map(|m| {
            let e = base.element_name(m.elem);
            match (flavour, m.label) {
                (Flavour::Pebble { .. }, Some(p)) => format!("({p},{e})"),
                (Flavour::Modal { .. }, Some(r)) => format!("({},{e})", base.signature().name(r)),
                _ => e.to_string(),
            }
        })
        .collect();
    format!("[{}]", parts.join(","))
}

fn grow(cs: &mut ComonadStructure, levels: usize, moves: &[Move]) {
    let mut frontier: Vec<usize> = Vec::new();
    for &m in moves {
        let id = cs.plays.len();
        cs.intern(vec![m], None);
        frontier.push(id);
    }
    for _ in 1..levels {
        let mut next = Vec::new();
        for &s in &frontier {
            for &m in moves {
                let mut p = cs.plays[s].clone();
                p.push(m);
                let id = cs.plays.len();
                cs.intern(p, Some(s));
                next.push(id);
            }
        }
        frontier = next;
    }
}

/// Adds every carrier tuple whose deepest play is `s`: tuples of prefixes of
/// `s` that mention `s`, pass `admissible`, and whose last elements are related.
fn add_chain_tuples(cs: &mut ComonadStructure, s: usize, admissible: &dyn Fn(&[usize]) -> bool) -> Result<()> {
    let chain = cs.chain(s);
    let len = chain.len();
    let lasts: Vec<Elem> = chain.iter().map(|&p| cs.last(p)).collect();
    for r in 0..cs.base.signature().len() {
        let arity = cs.base.signature().arity(r);
        let total = len.pow(arity as u32);
        let mut positions = vec![0; arity];
        let mut image = vec![0; arity];
        for code in 0..total {
            let mut c = code;
            for i in (0..arity).rev() {
                positions[i] = c % len;
                c /= len;
            }
            if !positions.contains(&(len - 1)) {
                continue;
            }
            for i in 0..arity {
                image[i] = lasts[positions[i]];
            }
            if cs.base.holds(r, &image) && admissible(&positions) {
                cs.carrier.insert(r, positions.iter().map(|&p| chain[p]).collect())?;
            }
        }
    }
    Ok(())
}

pub fn ek_build(a: &Structure, k: usize) -> Result<ComonadStructure> {
    ek_build_capped(a, k, DEFAULT_CARRIER_CAP)
}

/// `E_k(A)`: nonempty sequences of length at most `k`; a tuple is related iff
/// its plays are pairwise prefix-comparable and their last elements are related.
pub fn ek_build_capped(a: &Structure, k: usize, cap: usize) -> Result<ComonadStructure> {
    if k == 0 {
        return Err(Error::Invalid("the EF comonad needs k >= 1".into()));
    }
    carrier_size(a.size(), k, a.size(), cap)?;
    let mut cs = empty_comonad(a.clone(), None, Flavour::Ef { k });
    let moves: Vec<Move> = (0..a.size()).map(|e| Move { label: None, elem: e }).collect();
    grow(&mut cs, k, &moves);
    cs.finish_carrier()?;
    for s in 0..cs.len() {
        add_chain_tuples(&mut cs, s, &|_| true)?;
    }
    Ok(cs)
}

pub fn pnk_build(a: &Structure, n: usize, k: usize) -> Result<ComonadStructure> {
    pnk_build_capped(a, n, k, DEFAULT_CARRIER_CAP)
}

/// `P_{n,k}(A)`: as [`ek_build`] over pebble-indexed moves, with the extra
/// requirement that whenever one play of a tuple is a prefix of another, the
/// pebble of its last move is not reused in the remaining moves.
pub fn pnk_build_capped(a: &Structure, n: usize, k: usize, cap: usize) -> Result<ComonadStructure> {
    if n == 0 || k == 0 {
        return Err(Error::Invalid("the pebbling comonad needs n >= 1 and k >= 1".into()));
    }
    let width = n.checked_mul(a.size()).ok_or_else(|| guard("carrier cap", "overflow"))?;
    carrier_size(width, k, width, cap)?;
    let mut cs = empty_comonad(a.clone(), None, Flavour::Pebble { n, k });
    let moves: Vec<Move> =
        (1..=n).flat_map(|p| (0..a.size()).map(move |e| Move { label: Some(p), elem: e })).collect();
    grow(&mut cs, k, &moves);
    cs.finish_carrier()?;
    for s in 0..cs.len() {
        let play = cs.plays[s].clone();
        // active[i][j]: the pebble of move i does not reappear in moves i+1..=j.
        let len = play.len();
        let mut active = vec![vec![true; len]; len];
        for i in 0..len {
            for j in i + 1..len {
                active[i][j] = active[i][j - 1] && play[j].label != play[i].label;
            }
        }
        add_chain_tuples(&mut cs, s, &|pos: &[usize]| {
            pos.iter().all(|&i| pos.iter().all(|&j| i >= j || active[i][j]))
        })?;
    }
    Ok(cs)
}

pub fn mk_build(p: &PointedStructure, k: usize) -> Result<ComonadStructure> {
    mk_build_capped(p, k, DEFAULT_CARRIER_CAP)
}

/// `M_k(A,a)`: relation-labelled paths from the point with at most `k` steps.
/// Unary symbols hold on a path iff they hold at its end; a binary symbol
/// relates a path to its one-step extensions along that symbol.
pub fn mk_build_capped(p: &PointedStructure, k: usize, cap: usize) -> Result<ComonadStructure> {
    let a = &p.structure;
    let sig = a.signature();
    if !sig.is_modal() {
        return Err(Error::NotModal);
    }
    let steps: Vec<(usize, Elem, Elem)> =
        sig.binary().flat_map(|r| a.relation(r).iter().map(move |t| (r, t[0], t[1]))).collect();
    let mut cs = empty_comonad(a.clone(), Some(p.point), Flavour::Modal { k });
    cs.intern(vec![Move { label: None, elem: p.point }], None);
    let mut frontier = vec![0];
    for _ in 0..k {
        let mut next = Vec::new();
        for &s in &frontier {
            let from = cs.last(s);
            for &(r, x, y) in &steps {
                if x == from {
                    if cs.len() >= cap {
                        return Err(guard("carrier cap", format!("more than {cap} plays")));
                    }
                    let mut path = cs.plays[s].clone();
                    path.push(Move { label: Some(r), elem: y });
                    let id = cs.len();
                    cs.intern(path, Some(s));
                    next.push(id);
                }
            }
        }
        frontier = next;
    }
    cs.finish_carrier()?;
    for s in 0..cs.len() {
        let e = cs.last(s);
        for r in sig.unary() {
            if a.holds(r, &[e]) {
                cs.carrier.insert(r, vec![s])?;
            }
        }
        if let (Some(par), Some(r)) = (cs.parent[s], cs.plays[s].last().and_then(|m| m.label)) {
            cs.carrier.insert(r, vec![par, s])?;
        }
    }
    Ok(cs)
}

fn empty_comonad(base: Structure, point: Option<Elem>, flavour: Flavour) -> ComonadStructure {
    let carrier = Structure::empty(base.signature().clone());
    ComonadStructure {
        flavour,
        base,
        point,
        plays: Vec::new(),
        index: HashMap::new(),
        parent: Vec::new(),
        children: Vec::new(),
        carrier,
    }
}

/// The counit: each play goes to its last element.
pub fn counit(cs: &ComonadStructure) -> Vec<Elem> {
    (0..cs.len()).map(|s| cs.last(s)).collect()
}

/// True iff `f` is a Kleisli arrow from `cs` into `target` (a homomorphism of
/// the carrier, which for the modal flavour must also send the root to `target_point`).
pub fn is_kleisli_arrow(cs: &ComonadStructure, target: &Structure, f: &[Elem], target_point: Option<Elem>) -> Result<bool> {
    if !is_homomorphism(&cs.carrier, target, f)? {
        return Ok(false);
    }
    if let (Flavour::Modal { .. }, Some(b)) = (cs.flavour, target_point) {
        if !cs.is_empty() && f[0] != b {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Coextension `f*`: the play `[m_1..m_l]` goes to the play whose i-th move
/// keeps the label of `m_i` and carries `f` of the i-th prefix.
pub fn coextend(dom: &ComonadStructure, f: &[Elem], cod: &ComonadStructure) -> Result<Vec<usize>> {
    if dom.flavour != cod.flavour {
        return Err(Error::Invalid("coextension across different comonads".into()));
    }
    if !is_kleisli_arrow(dom, &cod.base, f, cod.point)? {
        return Err(Error::NotHomomorphism);
    }
    coextend_unchecked(dom, f, cod)
}

/// Coextension without the homomorphism check; fails only if an image play
/// is missing from `cod`.
pub fn coextend_unchecked(dom: &ComonadStructure, f: &[Elem], cod: &ComonadStructure) -> Result<Vec<usize>> {
    let mut out: Vec<usize> = Vec::with_capacity(dom.len());
    let mut buf: Play = Vec::new();
    for s in 0..dom.len() {
        buf.clear();
        if let Some(p) = dom.parent[s] {
            buf.extend_from_slice(&cod.plays[out[p]]);
        }
        let last = dom.plays[s].last().expect("nonempty");
        buf.push(Move { label: last.label, elem: f[s] });
        let img = cod.index_of(&buf).ok_or(Error::NotHomomorphism)?;
        out.push(img);
    }
    Ok(out)
}

/// Kleisli composite `g ∘ f*` of `f: G(A) → B` and `g: G(B) → C`.
pub fn kleisli_compose(dom: &ComonadStructure, f: &[Elem], mid: &ComonadStructure, g: &[Elem]) -> Result<Vec<Elem>> {
    if g.len() != mid.len() {
        return Err(Error::NotTotal { expected: mid.len(), found: g.len() });
    }
    let lifted = coextend(dom, f, mid)?;
    Ok(lifted.iter().map(|&s| g[s]).collect())
}

/// True iff `s ⊑ t` with equal last elements forces `f(s) = f(t)`. For pebble
/// plays the prefix's last pebble must also stay in place along the suffix.
pub fn is_i_morphism(cs: &ComonadStructure, f: &[Elem]) -> Result<bool> {
    if matches!(cs.flavour, Flavour::Modal { .. }) {
        return Err(Error::Unsupported("I-morphisms are defined for the EF and pebbling comonads".into()));
    }
    if f.len() != cs.len() {
        return Err(Error::NotTotal { expected: cs.len(), found: f.len() });
    }
    for t in 0..cs.len() {
        let play = &cs.plays[t];
        let chain = cs.chain(t);
        for (i, &s) in chain.iter().enumerate().take(chain.len() - 1) {
            if play[i].elem != play[play.len() - 1].elem {
                continue;
            }
            if play[i].label.is_some() && play[i + 1..].iter().any(|m| m.label == play[i].label) {
                continue;
            }
            if f[s] != f[t] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Exhaustive search for a Kleisli arrow `G(A) → B`. Carrier tuples live on
/// single branches, so each subtree is solved independently given the values
/// on its branch. With `i_morphism`, the I-morphism condition is imposed too.
pub fn find_kleisli_arrow(cs: &ComonadStructure, b: &Structure, target_point: Option<Elem>, i_morphism: bool) -> Result<Option<Vec<Elem>>> {
    if cs.base.signature() != b.signature() {
        return Err(Error::SignatureMismatch);
    }
    if i_morphism && matches!(cs.flavour, Flavour::Modal { .. }) {
        return Err(Error::Unsupported("I-morphisms are defined for the EF and pebbling comonads".into()));
    }
    let mut deepest: Vec<Vec<(usize, &Vec<usize>)>> = vec![Vec::new(); cs.len()];
    for (r, t) in cs.carrier.tuples() {
        let d = *t.iter().max_by_key(|&&s| cs.plays[s].len()).expect("arity >= 1");
        deepest[d].push((r, t));
    }
    // Ancestors whose value an I-morphism must repeat.
    let mut tied: Vec<Vec<usize>> = vec![Vec::new(); cs.len()];
    if i_morphism {
        for (t, ties) in tied.iter_mut().enumerate() {
            let play = &cs.plays[t];
            let chain = cs.chain(t);
            for i in 0..chain.len() - 1 {
                let stays = play[i].label.is_none() || play[i + 1..].iter().all(|m| m.label != play[i].label);
                if play[i].elem == play[play.len() - 1].elem && stays {
                    ties.push(chain[i]);
                }
            }
        }
    }
    let mut table = vec![usize::MAX; cs.len()];
    let search = KleisliSearch { cs, b, deepest: &deepest, tied: &tied, target_point };
    for root in cs.roots().collect::<Vec<_>>() {
        if !search.solve(root, &mut table) {
            return Ok(None);
        }
    }
    Ok(Some(table))
}

struct KleisliSearch<'a> {
    cs: &'a ComonadStructure,
    b: &'a Structure,
    deepest: &'a [Vec<(usize, &'a Vec<usize>)>],
    tied: &'a [Vec<usize>],
    target_point: Option<Elem>,
}

impl KleisliSearch<'_> {
    fn solve(&self, s: usize, table: &mut Vec<Elem>) -> bool {
        let candidates: Vec<Elem> = match (self.cs.parent[s], self.cs.flavour, self.target_point) {
            (None, Flavour::Modal { .. }, Some(b)) => vec![b],
            _ => (0..self.b.size()).collect(),
        };
        let mut image = Vec::new();
        'values: for v in candidates {
            if self.tied[s].iter().any(|&u| table[u] != v) {
                continue;
            }
            table[s] = v;
            for (r, t) in &self.deepest[s] {
                image.clear();
                image.extend(t.iter().map(|&x| table[x]));
                if !self.b.holds(*r, &image) {
                    continue 'values;
                }
            }
            if self.cs.children[s].iter().all(|&c| self.solve(c, table)) {
                return true;
            }
        }
        table[s] = usize::MAX;
        false
    }
}

/// Searches for a Kleisli isomorphism: arrows `f: G(A) → B`, `g: G(B) → A`
/// with `g ∘ f* = ε_A` and `f ∘ g* = ε_B`. Enumerates every arrow on both
/// sides, so it is guarded to at most `max_arrows` arrows each.
pub fn find_kleisli_isomorphism(
    ga: &ComonadStructure,
    gb: &ComonadStructure,
    max_arrows: usize,
) -> Result<Option<(Vec<Elem>, Vec<Elem>)>> {
    if ga.flavour != gb.flavour {
        return Err(Error::Invalid("Kleisli isomorphism across different comonads".into()));
    }
    let fs = find_homs(&ga.carrier, &gb.base, Some(max_arrows + 1))?;
    let gs = find_homs(&gb.carrier, &ga.base, Some(max_arrows + 1))?;
    if fs.len() > max_arrows || gs.len() > max_arrows {
        return Err(guard("kleisli isomorphism search", format!("more than {max_arrows} arrows")));
    }
    let ea = counit(ga);
    let eb = counit(gb);
    let lifted_f: Vec<Vec<usize>> = fs.iter().map(|f| coextend_unchecked(ga, f, gb)).collect::<Result<_>>()?;
    let lifted_g: Vec<Vec<usize>> = gs.iter().map(|g| coextend_unchecked(gb, g, ga)).collect::<Result<_>>()?;
    for (f, ff) in fs.iter().zip(&lifted_f) {
        for (g, gg) in gs.iter().zip(&lifted_g) {
            let back = ff.iter().map(|&s| g[s]).eq(ea.iter().copied());
            let forth = gg.iter().map(|&s| f[s]).eq(eb.iter().copied());
            if back && forth {
                return Ok(Some((f.clone(), g.clone())));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Law {
    /// `ε* = id`
    CounitCoextension,
    /// `ε ∘ f* = f`
    CounitAfterCoextension,
    /// `(g ∘ f*)* = g* ∘ f*`
    CoextensionComposition,
}

#[derive(Clone, Debug, Serialize)]
pub struct LawViolation {
    pub law: Law,
    pub arrow: Vec<Elem>,
    pub second_arrow: Option<Vec<Elem>>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LawReport {
    pub arrows_checked: usize,
    pub violations: Vec<LawViolation>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A coextension implementation; the real one is [`coextend_unchecked`].
pub type Coextension<'a> = &'a dyn Fn(&ComonadStructure, &[Elem], &ComonadStructure) -> Result<Vec<usize>>;

/// Builds the comonad for `flavour` over `a` (pointed at `point` for the modal flavour).
pub fn build(a: &Structure, point: Option<Elem>, flavour: Flavour, cap: usize) -> Result<ComonadStructure> {
    match flavour {
        Flavour::Ef { k } => ek_build_capped(a, k, cap),
        Flavour::Pebble { n, k } => pnk_build_capped(a, n, k, cap),
        Flavour::Modal { k } => {
            let p = PointedStructure::new(a.clone(), point.ok_or(Error::NotPointed)?)?;
            mk_build_capped(&p, k, cap)
        }
    }
}

/// Checks the three Kleisli-form laws on `samples` random arrows `G(A) → A`.
pub fn check_comonad_laws(a: &Structure, point: Option<Elem>, flavour: Flavour, samples: usize, seed: u64) -> Result<LawReport> {
    let cs = build(a, point, flavour, DEFAULT_CARRIER_CAP)?;
    check_laws_with(&cs, samples, seed, &coextend_unchecked)
}

/// As [`check_comonad_laws`] on a built comonad, with a pluggable coextension.
pub fn check_laws_with(cs: &ComonadStructure, samples: usize, seed: u64, coext: Coextension) -> Result<LawReport> {
    let mut report = LawReport::default();
    let eps = counit(cs);
    let identity: Vec<usize> = (0..cs.len()).collect();
    if coext(cs, &eps, cs).ok().as_deref() != Some(&identity[..]) {
        report.violations.push(LawViolation { law: Law::CounitCoextension, arrow: eps.clone(), second_arrow: None });
    }
    let arrows = sample_arrows(cs, samples, seed)?;
    report.arrows_checked = arrows.len();
    let lifted: Vec<Option<Vec<usize>>> = arrows.iter().map(|f| coext(cs, f, cs).ok()).collect();
    for (f, ff) in arrows.iter().zip(&lifted) {
        let ok = ff.as_ref().is_some_and(|ff| ff.iter().map(|&s| eps[s]).eq(f.iter().copied()));
        if !ok {
            report.violations.push(LawViolation { law: Law::CounitAfterCoextension, arrow: f.clone(), second_arrow: None });
        }
    }
    for (i, f) in arrows.iter().enumerate() {
        let g = &arrows[(i + 1) % arrows.len()];
        let ok = match (&lifted[i], &lifted[(i + 1) % arrows.len()]) {
            (Some(ff), Some(gg)) => {
                let composite: Vec<Elem> = ff.iter().map(|&s| g[s]).collect();
                coext(cs, &composite, cs).ok().is_some_and(|lhs| lhs.iter().copied().eq(ff.iter().map(|&s| gg[s])))
            }
            _ => false,
        };
        if !ok {
            report.violations.push(LawViolation {
                law: Law::CoextensionComposition,
                arrow: f.clone(),
                second_arrow: Some(g.clone()),
            });
        }
    }
    Ok(report)
}

/// Random Kleisli arrows `G(A) → A`: homomorphisms of `A` composed with the
/// counit, then single-play redefinitions kept only when the result is still
/// a Kleisli arrow.
pub fn sample_arrows(cs: &ComonadStructure, samples: usize, seed: u64) -> Result<Vec<Vec<Elem>>> {
    if cs.is_empty() || samples == 0 {
        return Ok(Vec::new());
    }
    let a = &cs.base;
    let mut seeds = find_homs(a, a, Some(64))?;
    if let Some(p) = cs.point {
        seeds.retain(|h| h[p] == p);
    }
    let eps = counit(cs);
    let seeds: Vec<Vec<Elem>> = seeds.iter().map(|h| eps.iter().map(|&e| h[e]).collect()).collect();
    let mut incident: Vec<Vec<(usize, &Vec<usize>)>> = vec![Vec::new(); cs.len()];
    for (r, t) in cs.carrier.tuples() {
        let mut members = t.clone();
        members.sort_unstable();
        members.dedup();
        for m in members {
            incident[m].push((r, t));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    let mut image = Vec::new();
    for i in 0..samples {
        let mut f = seeds[i % seeds.len()].clone();
        let edits = rng.gen_range(0..=4);
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < edits && attempts < 50 {
            attempts += 1;
            let s = rng.gen_range(0..cs.len());
            if cs.point.is_some() && cs.parent[s].is_none() {
                continue;
            }
            let v = rng.gen_range(0..a.size());
            let old = f[s];
            f[s] = v;
            let ok = incident[s].iter().all(|(r, t)| {
                image.clear();
                image.extend(t.iter().map(|&x| f[x]));
                a.holds(*r, &image)
            });
            if ok {
                accepted += 1;
            } else {
                f[s] = old;
            }
        }
        out.push(f);
    }
    Ok(out)
}

/// Comultiplication at the level of one play: the list of its prefixes.
pub fn comultiply(cs: &ComonadStructure, s: usize) -> Vec<usize> {
    cs.chain(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::catalog::*;
    use crate::structures::{enumerate_structures, Signature};

    fn play(cs: &ComonadStructure, text: &str) -> usize {
        (0..cs.len()).find(|&s| cs.play_text(s) == text).unwrap_or_else(|| panic!("no play {text}"))
    }

    #[test]
    fn ek_sizes_and_loop_example() {
        assert_eq!(ek_build(&edgeless(2), 2).unwrap().len(), 6);
        let cs = ek_build(&loop_point(), 2).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs.carrier().relation(0).len(), 4);
        assert!(ek_build(&Structure::empty(crate::structures::graph_signature()), 3).unwrap().is_empty());
    }

    #[test]
    fn ek_relation_brute_force() {
        // Independent check of the two defining conditions on every pair of plays.
        let a = digraph(2, &[(0, 1), (1, 1)]);
        let cs = ek_build(&a, 3).unwrap();
        for s in 0..cs.len() {
            for t in 0..cs.len() {
                let (ps, pt) = (cs.play(s), cs.play(t));
                let comparable = ps.starts_with(pt) || pt.starts_with(ps);
                let expected = comparable && a.holds(0, &[cs.last(s), cs.last(t)]);
                assert_eq!(cs.carrier().holds(0, &[s, t]), expected);
            }
        }
    }

    #[test]
    fn pnk_active_pebble_examples() {
        assert_eq!(pnk_build(&edgeless(1), 1, 2).unwrap().len(), 2);
        let a = digraph(2, &[(0, 1)]);
        let cs = pnk_build(&a, 2, 2).unwrap();
        let s1 = play(&cs, "[(1,a)]");
        let reused = play(&cs, "[(1,a),(1,b)]");
        let fresh = play(&cs, "[(1,a),(2,b)]");
        assert!(!cs.carrier().holds(0, &[s1, reused]));
        assert!(cs.carrier().holds(0, &[s1, fresh]));
        assert_eq!(cs.len(), 4 + 16);
    }

    #[test]
    fn mk_examples() {
        let sig = Signature::parse("E/2 P/1").unwrap();
        let mut s = Structure::new(sig.clone(), ["a"]).unwrap();
        s.insert_named("P", &["a"]).unwrap();
        let p = PointedStructure::new(s.clone(), 0).unwrap();
        let m0 = mk_build(&p, 0).unwrap();
        assert_eq!(m0.len(), 1);
        assert!(m0.carrier().relation_named("P").unwrap().contains(&vec![0]));
        s.insert_named("E", &["a", "a"]).unwrap();
        let chain = mk_build(&PointedStructure::new(s, 0).unwrap(), 3).unwrap();
        assert_eq!(chain.len(), 4);
        assert_eq!(chain.carrier().relation_named("E").unwrap().len(), 3);
        let sink = PointedStructure::new(Structure::new(sig, ["a", "b"]).unwrap(), 0).unwrap();
        for k in 0..4 {
            assert_eq!(mk_build(&sink, k).unwrap().len(), 1);
        }
    }

    #[test]
    fn counit_examples() {
        let a = edgeless(2);
        let cs = ek_build(&a, 2).unwrap();
        let eps = counit(&cs);
        assert_eq!(eps[play(&cs, "[a,b]")], 1);
        assert!(is_homomorphism(cs.carrier(), &a, &eps).unwrap());
        let pc = pnk_build(&a, 2, 2).unwrap();
        assert_eq!(counit(&pc)[play(&pc, "[(1,a),(2,b)]")], 1);
    }

    #[test]
    fn coextension_examples() {
        let a = digraph(2, &[(0, 1), (1, 1), (0, 0)]);
        let cs = ek_build(&a, 2).unwrap();
        let eps = counit(&cs);
        let lifted = coextend(&cs, &eps, &cs).unwrap();
        assert_eq!(lifted, (0..cs.len()).collect::<Vec<_>>());
        // Constant map to the looped element b is a homomorphism.
        let constant = vec![1; cs.len()];
        let lifted = coextend(&cs, &constant, &cs).unwrap();
        assert_eq!(cs.play_text(lifted[play(&cs, "[a,b]")]), "[b,b]");
        // A non-homomorphism is rejected.
        let mut bad = eps.clone();
        bad[play(&cs, "[a]")] = 1;
        bad[play(&cs, "[b]")] = 0;
        assert!(coextend(&cs, &bad, &cs).is_err());
    }

    #[test]
    fn kleisli_identity_laws() {
        let a = cycle(3);
        let cs = ek_build(&a, 2).unwrap();
        let eps = counit(&cs);
        for f in sample_arrows(&cs, 10, 7).unwrap() {
            assert_eq!(kleisli_compose(&cs, &f, &cs, &eps).unwrap(), f);
            assert_eq!(kleisli_compose(&cs, &eps, &cs, &f).unwrap(), f);
        }
    }

    #[test]
    fn kleisli_associativity_on_size_two() {
        let a = digraph(2, &[(0, 1), (1, 0), (1, 1)]);
        let cs = ek_build(&a, 2).unwrap();
        let arrows = sample_arrows(&cs, 6, 3).unwrap();
        for f in &arrows {
            for g in &arrows {
                for h in &arrows {
                    let left = kleisli_compose(&cs, &kleisli_compose(&cs, f, &cs, g).unwrap(), &cs, h).unwrap();
                    let right = kleisli_compose(&cs, f, &cs, &kleisli_compose(&cs, g, &cs, h).unwrap()).unwrap();
                    assert_eq!(left, right);
                }
            }
        }
    }

    #[test]
    fn laws_hold_and_empty_is_vacuous() {
        let a = cycle(3);
        for flavour in [Flavour::Ef { k: 3 }, Flavour::Pebble { n: 2, k: 2 }] {
            assert!(check_comonad_laws(&a, None, flavour, 20, 1).unwrap().passed());
        }
        let sig = Signature::parse("E/2 P/1").unwrap();
        let mut m = Structure::new(sig, ["a", "b"]).unwrap();
        m.insert_named("E", &["a", "b"]).unwrap();
        m.insert_named("E", &["b", "a"]).unwrap();
        m.insert_named("P", &["b"]).unwrap();
        assert!(check_comonad_laws(&m, Some(0), Flavour::Modal { k: 3 }, 20, 1).unwrap().passed());
        let empty = Structure::empty(crate::structures::graph_signature());
        assert!(check_comonad_laws(&empty, None, Flavour::Ef { k: 2 }, 20, 1).unwrap().passed());
    }

    #[test]
    fn corrupted_coextension_is_caught() {
        let cs = ek_build(&cycle(3), 2).unwrap();
        let shifted = |d: &ComonadStructure, f: &[Elem], c: &ComonadStructure| -> Result<Vec<usize>> {
            let mut out = coextend_unchecked(d, f, c)?;
            out.rotate_left(1);
            Ok(out)
        };
        assert!(!check_laws_with(&cs, 5, 0, &shifted).unwrap().passed());
    }

    #[test]
    fn i_morphism_examples() {
        let a = edgeless(3);
        let cs = ek_build(&a, 3).unwrap();
        let eps = counit(&cs);
        assert!(is_i_morphism(&cs, &eps).unwrap());
        let mut f = eps.clone();
        f[play(&cs, "[a,c,a]")] = 1;
        assert!(!is_i_morphism(&cs, &f).unwrap());
        // In the pebbling comonad a moved pebble releases the tie.
        let pc = pnk_build(&edgeless(2), 2, 2).unwrap();
        let mut g = counit(&pc);
        g[play(&pc, "[(1,a),(1,a)]")] = 1;
        assert!(is_i_morphism(&pc, &g).unwrap());
        let mut h = counit(&pc);
        h[play(&pc, "[(1,a),(2,a)]")] = 1;
        assert!(!is_i_morphism(&pc, &h).unwrap());
    }

    #[test]
    fn coextension_preserves_i_morphisms_on_size_two() {
        let corpus = enumerate_structures(&crate::structures::graph_signature(), 2).unwrap();
        for a in &corpus {
            let cs = ek_build(a, 2).unwrap();
            for f in sample_arrows(&cs, 8, 11).unwrap() {
                if !is_i_morphism(&cs, &f).unwrap() {
                    continue;
                }
                let lifted = coextend(&cs, &f, &cs).unwrap();
                let g = counit(&cs);
                let back: Vec<Elem> = lifted.iter().map(|&s| g[s]).collect();
                assert!(is_i_morphism(&cs, &back).unwrap());
            }
        }
    }

    #[test]
    fn functoriality_on_plays() {
        let a = path(3);
        let b = complete(2);
        let h = [0, 1, 0];
        let ea = ek_build(&a, 3).unwrap();
        let eb = ek_build(&b, 3).unwrap();
        let f: Vec<Elem> = counit(&ea).iter().map(|&e| h[e]).collect();
        let lifted = coextend(&ea, &f, &eb).unwrap();
        for s in 0..ea.len() {
            let mapped: Play = ea.play(s).iter().map(|m| Move { label: None, elem: h[m.elem] }).collect();
            assert_eq!(eb.index_of(&mapped), Some(lifted[s]));
        }
        assert!(is_homomorphism(ea.carrier(), eb.carrier(), &lifted).unwrap());
    }

    #[test]
    fn kleisli_search_finds_verified_arrows() {
        let k3 = complete(3);
        let k2 = complete(2);
        let cs = ek_build(&i_expanded(&k3), 2).unwrap();
        let f = find_kleisli_arrow(&cs, &i_expanded(&k2), None, true).unwrap().expect("two rounds are survivable");
        assert!(is_homomorphism(cs.carrier(), &i_expanded(&k2), &f).unwrap());
        assert!(is_i_morphism(&cs, &f).unwrap());
        let cs3 = ek_build(&i_expanded(&k3), 3).unwrap();
        assert!(find_kleisli_arrow(&cs3, &i_expanded(&k2), None, true).unwrap().is_none());
    }

    #[test]
    fn kleisli_isomorphism_search() {
        let a = i_expanded(&edgeless(2));
        let b = i_expanded(&edgeless(2));
        let ga = ek_build(&a, 2).unwrap();
        let gb = ek_build(&b, 2).unwrap();
        assert!(find_kleisli_isomorphism(&ga, &gb, 10_000).unwrap().is_some());
        let c = i_expanded(&complete(2));
        let gc = ek_build(&c, 1).unwrap();
        let ga1 = ek_build(&a, 1).unwrap();
        // One round cannot see edges, but it does count elements.
        assert!(find_kleisli_isomorphism(&ga1, &gc, 10_000).unwrap().is_some());
        let gc2 = ek_build(&c, 2).unwrap();
        assert!(find_kleisli_isomorphism(&ga, &gc2, 10_000).unwrap().is_none());
    }

    fn i_expanded(a: &Structure) -> Structure {
        crate::structures::i_expand(a).unwrap()
    }
}
