//! Distinguishing sentences by semantic closure over a finite corpus.
//!
//! A point is a corpus structure together with an assignment (or a state).
//! Points are grouped into layers by which variables they assign. Each layer
//! carries generators: literals, plus quantified formulas whose body pins down
//! a class (or an up-set) of points in the next layer. Two points agree on
//! every formula of the fragment exactly when they agree on every generator,
//! so a distinguisher, if one exists, can be taken to be a single generator.
//! Formulas are only materialized for the generators actually reported, with
//! bodies chosen greedily as short conjunctions.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::{FragmentSpec, LogicFamily, ModalFormula, Polarity, Sentence, Var};
use crate::error::{guard, Error, Result};
use crate::logic::Formula;
use crate::structures::{enumerate_structures, Elem, Signature, Structure};

/// Largest number of points a single layer may hold.
const POINT_CAP: usize = 2_000_000;
/// Rounds allowed before a variable-bounded search gives up.
const ROUND_CAP: usize = 256;
/// Generators allowed per layer in a variable-bounded search.
const GENERATOR_CAP: usize = 20_000;
/// Structures up to this size make up the pinned enumeration corpus.
pub const PINNED_CORPUS_SIZE: usize = 3;

/// Outcome of [`find_distinguisher`].
#[derive(Clone, Debug)]
pub struct Search {
    /// A sentence true in the first structure and false in the second.
    pub distinguisher: Option<Sentence>,
    /// Quantifier rank, modal depth, or round at which it appeared.
    pub rank: Option<usize>,
    /// Whether absence of a distinguisher proves there is none.
    pub conclusive: bool,
    pub rounds: usize,
}

/// Sentences of a fragment, one per truth vector over the corpus.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub sentences: Vec<Sentence>,
    pub truncated: bool,
    pub corpus_points: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Full,
    Counting,
    Preorder { universal: bool },
}

#[derive(Clone, Debug)]
enum Binder {
    Var(Var),
    Rel(String),
}

#[derive(Clone, Copy, Debug)]
enum Quant {
    AtLeast(usize),
    ForallOr,
}

#[derive(Clone, Debug)]
enum Recipe {
    Literal(Sentence),
    Quant { quant: Quant, binder: Binder, target: usize, reps: Vec<usize>, known: usize },
}

struct Generator {
    recipe: Recipe,
    truth: Vec<bool>,
}

type Point = (usize, Vec<Option<Elem>>);

#[derive(Default)]
struct Layer {
    points: Vec<Point>,
    lookup: HashMap<Point, usize>,
    gens: Vec<Generator>,
    seen: HashSet<Vec<bool>>,
    profiles: Vec<Vec<u64>>,
}

impl Layer {
    fn new(points: Vec<Point>) -> Self {
        let lookup = points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Layer { points, lookup, ..Layer::default() }
    }

    fn push(&mut self, recipe: Recipe, truth: Vec<bool>) -> bool {
        if self.seen.insert(truth.clone()) {
            self.gens.push(Generator { recipe, truth });
            true
        } else {
            false
        }
    }

    fn refresh(&mut self) {
        let words = self.gens.len().div_ceil(64);
        self.profiles = vec![vec![0; words]; self.points.len()];
        for (g, gen) in self.gens.iter().enumerate() {
            for (p, &t) in gen.truth.iter().enumerate() {
                if t {
                    self.profiles[p][g / 64] |= 1 << (g % 64);
                }
            }
        }
    }

    fn leq(&self, p: usize, q: usize) -> bool {
        self.profiles[p].iter().zip(&self.profiles[q]).all(|(x, y)| x & !y == 0)
    }

    /// Class index of every point, and one representative per class.
    fn classes(&self) -> (Vec<usize>, Vec<usize>) {
        let mut index: HashMap<&[u64], usize> = HashMap::new();
        let mut reps = Vec::new();
        let class_of = self
            .profiles
            .iter()
            .enumerate()
            .map(|(p, prof)| {
                *index.entry(prof).or_insert_with(|| {
                    reps.push(p);
                    reps.len() - 1
                })
            })
            .collect();
        (class_of, reps)
    }
}

enum Node {
    Lit(Sentence),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Quant(Quant, Binder, Box<Node>),
}

fn to_formula(node: Node) -> Formula {
    match node {
        Node::Lit(Sentence::First(f)) => f,
        Node::Lit(Sentence::Modal(_)) => unreachable!("modal literal in a first-order formula"),
        Node::Not(n) => Formula::not(to_formula(*n)),
        Node::And(ns) => flatten(ns.into_iter().map(to_formula).collect(), Formula::True, Formula::And),
        Node::Or(ns) => flatten(ns.into_iter().map(to_formula).collect(), Formula::False, Formula::Or),
        Node::Quant(q, Binder::Var(v), body) => {
            let body = to_formula(*body);
            match q {
                Quant::AtLeast(1) => Formula::exists(v, body),
                Quant::AtLeast(c) => Formula::CountGe(c, v, Box::new(body)),
                Quant::ForallOr => Formula::forall(v, body),
            }
        }
        Node::Quant(_, Binder::Rel(_), _) => unreachable!("modal binder in a first-order formula"),
    }
}

fn to_modal(node: Node) -> ModalFormula {
    match node {
        Node::Lit(Sentence::Modal(f)) => f,
        Node::Lit(Sentence::First(_)) => unreachable!("first-order literal in a modal formula"),
        Node::Not(n) => ModalFormula::not(to_modal(*n)),
        Node::And(ns) => flatten(ns.into_iter().map(to_modal).collect(), ModalFormula::True, ModalFormula::And),
        Node::Or(ns) => flatten(ns.into_iter().map(to_modal).collect(), ModalFormula::False, ModalFormula::Or),
        Node::Quant(q, Binder::Rel(r), body) => {
            let body = Box::new(to_modal(*body));
            match q {
                Quant::AtLeast(1) => ModalFormula::Dia(r, body),
                Quant::AtLeast(c) => ModalFormula::DiaGe(c, r, body),
                Quant::ForallOr => ModalFormula::Box(r, body),
            }
        }
        Node::Quant(_, Binder::Var(_), _) => unreachable!("variable binder in a modal formula"),
    }
}

fn flatten<F>(mut items: Vec<F>, empty: F, join: impl FnOnce(Vec<F>) -> F) -> F {
    match items.len() {
        0 => empty,
        1 => items.pop().expect("one item"),
        _ => join(items),
    }
}

struct Engine<'a> {
    corpus: &'a [&'a Structure],
    sig: Signature,
    mode: Mode,
    negated_literals: bool,
    equality: bool,
    layers: Vec<Layer>,
}

impl<'a> Engine<'a> {
    fn new(corpus: &'a [&'a Structure], fragment: &FragmentSpec) -> Result<Self> {
        let sig = corpus.first().map(|a| a.signature().clone()).ok_or_else(|| Error::Invalid("empty corpus".into()))?;
        if corpus.iter().any(|a| a.signature() != &sig) {
            return Err(Error::SignatureMismatch);
        }
        let mode = match (fragment.counting, fragment.polarity) {
            (true, _) => Mode::Counting,
            (false, Polarity::Full) => Mode::Full,
            (false, Polarity::Positive) => Mode::Preorder { universal: true },
            (false, _) => Mode::Preorder { universal: false },
        };
        Ok(Engine {
            corpus,
            sig,
            mode,
            negated_literals: fragment.polarity == Polarity::Existential,
            equality: fragment.equality,
            layers: Vec::new(),
        })
    }

    /// Points assigning exactly the variables flagged in `assigned`.
    fn fo_points(&self, assigned: &[bool]) -> Result<Vec<Point>> {
        let mut total = 0usize;
        for a in self.corpus {
            let count = assigned.iter().filter(|&&f| f).try_fold(1usize, |acc, _| acc.checked_mul(a.size()));
            total = count.and_then(|c| total.checked_add(c)).unwrap_or(usize::MAX);
        }
        if total > POINT_CAP {
            return Err(guard("oracle points", format!("{total} assignments in one layer (limit {POINT_CAP})")));
        }
        let mut points = Vec::with_capacity(total);
        for (s, a) in self.corpus.iter().enumerate() {
            let slots: Vec<usize> = (0..assigned.len()).filter(|&i| assigned[i]).collect();
            let mut vals = vec![None; assigned.len()];
            let mut counter = vec![0; slots.len()];
            if a.size() == 0 && !slots.is_empty() {
                continue;
            }
            loop {
                for (&slot, &e) in slots.iter().zip(&counter) {
                    vals[slot] = Some(e);
                }
                points.push((s, vals.clone()));
                let mut i = 0;
                while i < counter.len() {
                    counter[i] += 1;
                    if counter[i] < a.size() {
                        break;
                    }
                    counter[i] = 0;
                    i += 1;
                }
                if i == counter.len() {
                    break;
                }
            }
        }
        Ok(points)
    }

    fn modal_points(&self) -> Vec<Point> {
        self.corpus.iter().enumerate().flat_map(|(s, a)| (0..a.size()).map(move |e| (s, vec![Some(e)]))).collect()
    }

    fn push_literal(&mut self, layer: usize, lit: Sentence, truth: Vec<bool>) {
        if self.negated_literals {
            let negated = match &lit {
                Sentence::First(f) => Sentence::First(Formula::not(f.clone())),
                Sentence::Modal(f) => Sentence::Modal(ModalFormula::not(f.clone())),
            };
            self.layers[layer].push(Recipe::Literal(negated), truth.iter().map(|t| !t).collect());
        }
        self.layers[layer].push(Recipe::Literal(lit), truth);
    }

    fn fo_literals(&mut self, layer: usize) {
        let Some((_, first)) = self.layers[layer].points.first() else { return };
        let vars: Vec<usize> = (0..first.len()).filter(|&i| first[i].is_some()).collect();
        let mut literals = Vec::new();
        for r in 0..self.sig.len() {
            let arity = self.sig.arity(r);
            if vars.is_empty() {
                continue;
            }
            let total = vars.len().pow(arity as u32);
            for code in 0..total {
                let mut c = code;
                let slots: Vec<usize> = (0..arity)
                    .map(|_| {
                        let v = vars[c % vars.len()];
                        c /= vars.len();
                        v
                    })
                    .collect();
                let truth = self.layers[layer]
                    .points
                    .iter()
                    .map(|(s, vals)| {
                        let t: Vec<Elem> = slots.iter().map(|&i| vals[i].expect("assigned")).collect();
                        self.corpus[*s].holds(r, &t)
                    })
                    .collect();
                let args: Vec<Var> = slots.iter().map(|&i| i as Var + 1).collect();
                literals.push((Formula::Atom(self.sig.name(r).to_string(), args), truth));
            }
        }
        if self.equality {
            for (x, &i) in vars.iter().enumerate() {
                for &j in &vars[x + 1..] {
                    let truth = self.layers[layer].points.iter().map(|(_, vals)| vals[i] == vals[j]).collect();
                    literals.push((Formula::Eq(i as Var + 1, j as Var + 1), truth));
                }
            }
        }
        for (f, truth) in literals {
            self.push_literal(layer, Sentence::First(f), truth);
        }
    }

    fn modal_literals(&mut self, layer: usize) {
        let unary: Vec<usize> = self.sig.unary().collect();
        for r in unary {
            let truth = self.layers[layer].points.iter().map(|(s, v)| self.corpus[*s].holds(r, &[v[0].expect("state")])).collect();
            self.push_literal(layer, Sentence::Modal(ModalFormula::prop(self.sig.name(r))), truth);
        }
    }

    /// Quantified generators for `ext`-successors in layer `target`.
    fn quantify(&self, target: usize, ext: &[Vec<usize>], binder: &Binder) -> Vec<(Recipe, Vec<bool>)> {
        let t = &self.layers[target];
        let (class_of, reps) = t.classes();
        let make = |quant, reps| Recipe::Quant { quant, binder: binder.clone(), target, reps, known: t.gens.len() };
        let mut out = Vec::new();
        match self.mode {
            Mode::Full => {
                for (c, &rep) in reps.iter().enumerate() {
                    let truth = ext.iter().map(|e| e.iter().any(|&q| class_of[q] == c)).collect();
                    out.push((make(Quant::AtLeast(1), vec![rep]), truth));
                }
            }
            Mode::Counting => {
                for (c, &rep) in reps.iter().enumerate() {
                    let counts: Vec<usize> = ext.iter().map(|e| e.iter().filter(|&&q| class_of[q] == c).count()).collect();
                    let most = counts.iter().copied().max().unwrap_or(0);
                    for at_least in 1..=most {
                        let truth = counts.iter().map(|&n| n >= at_least).collect();
                        out.push((make(Quant::AtLeast(at_least), vec![rep]), truth));
                    }
                }
            }
            Mode::Preorder { universal } => {
                let up: Vec<Vec<bool>> = reps.iter().map(|&r| (0..t.points.len()).map(|q| t.leq(r, q)).collect()).collect();
                for (c, &rep) in reps.iter().enumerate() {
                    let truth = ext.iter().map(|e| e.iter().any(|&q| up[c][q])).collect();
                    out.push((make(Quant::AtLeast(1), vec![rep]), truth));
                }
                if universal {
                    let mut done = HashSet::new();
                    for e in ext {
                        let set: BTreeSet<usize> = e.iter().map(|&q| class_of[q]).collect();
                        if !done.insert(set.clone()) {
                            continue;
                        }
                        let truth = ext.iter().map(|f| f.iter().all(|&q| set.iter().any(|&c| up[c][q]))).collect();
                        out.push((make(Quant::ForallOr, set.iter().map(|&c| reps[c]).collect()), truth));
                    }
                }
            }
        }
        out
    }

    /// Successors of each point of `source` in `target` when the variable in
    /// slot `slot` is (re)assigned.
    fn fo_ext(&self, source: usize, target: usize, slot: usize) -> Vec<Vec<usize>> {
        let t = &self.layers[target];
        self.layers[source]
            .points
            .iter()
            .map(|(s, vals)| {
                let mut v = vals.clone();
                if v.len() <= slot {
                    v.resize(slot + 1, None);
                }
                (0..self.corpus[*s].size())
                    .map(|e| {
                        v[slot] = Some(e);
                        t.lookup[&(*s, v.clone())]
                    })
                    .collect()
            })
            .collect()
    }

    fn modal_ext(&self, rel: usize) -> Vec<Vec<usize>> {
        let any = &self.layers[0];
        any.points
            .iter()
            .map(|(s, v)| {
                let from = v[0].expect("state");
                self.corpus[*s]
                    .relation(rel)
                    .iter()
                    .filter(|t| t[0] == from)
                    .map(|t| any.lookup[&(*s, vec![Some(t[1])])])
                    .collect()
            })
            .collect()
    }

    /// Layers `0..=k`; layer `m` assigns `x1..xm`, the root is layer 0.
    fn build_rank(&mut self, k: usize) -> Result<()> {
        self.layers = (0..=k).map(|m| self.fo_points(&vec![true; m]).map(Layer::new)).collect::<Result<_>>()?;
        for m in (0..=k).rev() {
            self.fo_literals(m);
            if m < k {
                let ext = self.fo_ext(m, m + 1, m);
                for (recipe, truth) in self.quantify(m + 1, &ext, &Binder::Var(m as Var + 1)) {
                    self.layers[m].push(recipe, truth);
                }
            }
            self.layers[m].refresh();
        }
        Ok(())
    }

    /// Layers `0..=k` over the same states; layer `j` has depth `j`, the root is layer `k`.
    fn build_modal(&mut self, k: usize) {
        let points = self.modal_points();
        self.layers = (0..=k).map(|_| Layer::new(points.clone())).collect();
        let binary: Vec<usize> = self.sig.binary().collect();
        let exts: Vec<(Binder, Vec<Vec<usize>>)> =
            binary.iter().map(|&r| (Binder::Rel(self.sig.name(r).to_string()), self.modal_ext(r))).collect();
        for j in 0..=k {
            self.modal_literals(j);
            if j > 0 {
                for (binder, ext) in &exts {
                    for (recipe, truth) in self.quantify(j - 1, ext, binder) {
                        self.layers[j].push(recipe, truth);
                    }
                }
            }
            self.layers[j].refresh();
        }
    }

    /// One layer per set of assigned variables among `x1..xn`; the root is layer 0.
    /// Returns the extension maps, reused by every round.
    fn start_vars(&mut self, n: usize) -> Result<Vec<Vec<(usize, Vec<Vec<usize>>)>>> {
        self.layers = (0..1usize << n)
            .map(|mask| self.fo_points(&(0..n).map(|i| mask >> i & 1 == 1).collect::<Vec<_>>()).map(Layer::new))
            .collect::<Result<_>>()?;
        for mask in 0..self.layers.len() {
            self.fo_literals(mask);
            self.layers[mask].refresh();
        }
        Ok((0..1usize << n).map(|mask| (0..n).map(|i| (i, self.fo_ext(mask, mask | 1 << i, i))).collect()).collect())
    }

    /// One round of quantification across all layers; false once nothing new appears.
    fn vars_round(&mut self, exts: &[Vec<(usize, Vec<Vec<usize>>)>]) -> bool {
        let mut additions = Vec::new();
        for (mask, per_var) in exts.iter().enumerate() {
            for (i, ext) in per_var {
                for (recipe, truth) in self.quantify(mask | 1 << i, ext, &Binder::Var(*i as Var + 1)) {
                    additions.push((mask, recipe, truth));
                }
            }
        }
        let mut changed = false;
        for (mask, recipe, truth) in additions {
            changed |= self.layers[mask].push(recipe, truth);
        }
        for layer in &mut self.layers {
            layer.refresh();
        }
        changed
    }

    /// A conjunction true exactly on the class of `rep` (or on its up-set),
    /// as seen by the first `known` generators of the layer.
    fn chi(&self, layer: usize, rep: usize, known: usize) -> Result<Node> {
        let gens = &self.layers[layer].gens[..known];
        let points = self.layers[layer].points.len();
        let preorder = matches!(self.mode, Mode::Preorder { .. });
        let mut remaining: Vec<usize> = (0..points)
            .filter(|&q| gens.iter().any(|g| if preorder { g.truth[rep] && !g.truth[q] } else { g.truth[rep] != g.truth[q] }))
            .collect();
        let mut chosen = Vec::new();
        while !remaining.is_empty() {
            let mut best: Option<(usize, bool, usize)> = None;
            for (g, gen) in gens.iter().enumerate() {
                let positive = gen.truth[rep];
                if preorder && !positive {
                    continue;
                }
                let excluded = remaining.iter().filter(|&&q| gen.truth[q] != positive).count();
                if excluded > best.map_or(0, |b| b.2) {
                    best = Some((g, positive, excluded));
                }
            }
            let (g, positive, _) = best.ok_or_else(|| Error::Internal("class has no defining conjunction".into()))?;
            remaining.retain(|&q| gens[g].truth[q] == positive);
            let node = self.materialize(layer, g)?;
            chosen.push(if positive { node } else { Node::Not(Box::new(node)) });
        }
        Ok(Node::And(chosen))
    }

    fn materialize(&self, layer: usize, g: usize) -> Result<Node> {
        match &self.layers[layer].gens[g].recipe {
            Recipe::Literal(s) => Ok(Node::Lit(s.clone())),
            Recipe::Quant { quant, binder, target, reps, known } => {
                let body = match quant {
                    Quant::AtLeast(_) => self.chi(*target, reps[0], *known)?,
                    Quant::ForallOr => Node::Or(reps.iter().map(|&r| self.chi(*target, r, *known)).collect::<Result<_>>()?),
                };
                Ok(Node::Quant(*quant, binder.clone(), Box::new(body)))
            }
        }
    }

    /// The shortest generator (or negated generator) true at `pa` and false at `pb`.
    fn distinguish(&self, layer: usize, pa: usize, pb: usize, modal: bool) -> Result<Option<Sentence>> {
        let l = &self.layers[layer];
        let mut best: Option<Sentence> = None;
        let mut tried = 0;
        for (g, gen) in l.gens.iter().enumerate() {
            let (ta, tb) = (gen.truth[pa], gen.truth[pb]);
            let negate = match (ta, tb) {
                (true, false) => false,
                (false, true) if !matches!(self.mode, Mode::Preorder { .. }) => true,
                _ => continue,
            };
            let mut node = self.materialize(layer, g)?;
            if negate {
                node = Node::Not(Box::new(node));
            }
            let s = if modal { Sentence::Modal(to_modal(node)) } else { Sentence::First(to_formula(node)) };
            if best.as_ref().is_none_or(|b| s.to_string().len() < b.to_string().len()) {
                best = Some(s);
            }
            tried += 1;
            if tried == 32 {
                break;
            }
        }
        Ok(best)
    }

    fn sentences(&self, layer: usize, modal: bool, budget: usize) -> Result<(Vec<Sentence>, bool)> {
        let gens = &self.layers[layer].gens;
        let mut out = Vec::new();
        for g in 0..gens.len().min(budget) {
            let node = self.materialize(layer, g)?;
            out.push(if modal { Sentence::Modal(to_modal(node)) } else { Sentence::First(to_formula(node)) });
        }
        Ok((out, gens.len() > budget))
    }
}

fn confirm(s: Sentence, a: &Structure, b: &Structure, points: Option<(Elem, Elem)>) -> Result<Sentence> {
    let (pa, pb) = points.map_or((None, None), |(x, y)| (Some(x), Some(y)));
    if !s.holds(a, pa)? || s.holds(b, pb)? {
        return Err(Error::Internal(format!("oracle sentence {s} does not distinguish")));
    }
    Ok(s)
}

/// Searches for a sentence of the fragment true in `a` and false in `b`,
/// at the least rank (or round) where one exists. Modal fragments evaluate at
/// `points`. The corpus is the two inputs with all their assignments.
pub fn find_distinguisher(a: &Structure, b: &Structure, points: Option<(Elem, Elem)>, fragment: &FragmentSpec) -> Result<Search> {
    fragment.validate()?;
    let corpus = [a, b];
    let mut engine = Engine::new(&corpus, fragment)?;
    match fragment.family {
        LogicFamily::Rank { k } => {
            for rank in 0..=k {
                engine.build_rank(rank)?;
                if let Some(s) = engine.distinguish(0, 0, 1, false)? {
                    let s = confirm(s, a, b, None)?;
                    return Ok(Search { distinguisher: Some(s), rank: Some(rank), conclusive: true, rounds: rank });
                }
            }
            Ok(Search { distinguisher: None, rank: None, conclusive: true, rounds: k })
        }
        LogicFamily::Modal { k } => {
            let (pa, pb) = points.ok_or(Error::NotPointed)?;
            if !a.signature().is_modal() {
                return Err(Error::NotModal);
            }
            for (p, s) in [(pa, a), (pb, b)] {
                if p >= s.size() {
                    return Err(Error::ElementOutOfRange { index: p, size: s.size() });
                }
            }
            for depth in 0..=k {
                engine.build_modal(depth);
                let root = &engine.layers[depth];
                let (ia, ib) = (root.lookup[&(0, vec![Some(pa)])], root.lookup[&(1, vec![Some(pb)])]);
                if let Some(s) = engine.distinguish(depth, ia, ib, true)? {
                    let s = confirm(s, a, b, points)?;
                    return Ok(Search { distinguisher: Some(s), rank: Some(depth), conclusive: true, rounds: depth });
                }
            }
            Ok(Search { distinguisher: None, rank: None, conclusive: true, rounds: k })
        }
        LogicFamily::Vars { n } => {
            let exts = engine.start_vars(n)?;
            let mut rounds = 0;
            loop {
                if let Some(s) = engine.distinguish(0, 0, 1, false)? {
                    let s = confirm(s, a, b, None)?;
                    return Ok(Search { distinguisher: Some(s), rank: Some(rounds), conclusive: true, rounds });
                }
                if rounds == ROUND_CAP || engine.layers.iter().any(|l| l.gens.len() > GENERATOR_CAP) {
                    return Err(Error::Truncated(format!("no distinguisher after {rounds} rounds and no fixpoint")));
                }
                if !engine.vars_round(&exts) {
                    return Ok(Search { distinguisher: None, rank: None, conclusive: true, rounds });
                }
                rounds += 1;
            }
        }
    }
}

/// Up to `budget` sentences of the fragment, pairwise inequivalent over the
/// pinned corpus (every structure of size at most [`PINNED_CORPUS_SIZE`],
/// plus `extra`). Their Boolean combinations realize every class the
/// fragment can define on the corpus.
pub fn enumerate_sentences(fragment: &FragmentSpec, sig: &Signature, budget: usize, extra: &[Structure]) -> Result<Enumeration> {
    fragment.validate()?;
    let mut owned = vec![Structure::empty(sig.clone())];
    owned.extend(enumerate_structures(sig, PINNED_CORPUS_SIZE)?);
    owned.extend(extra.iter().cloned());
    let corpus: Vec<&Structure> = owned.iter().collect();
    let mut engine = Engine::new(&corpus, fragment)?;
    let (root, modal) = match fragment.family {
        LogicFamily::Rank { k } => {
            engine.build_rank(k)?;
            (0, false)
        }
        LogicFamily::Modal { k } => {
            if !sig.is_modal() {
                return Err(Error::NotModal);
            }
            engine.build_modal(k);
            (k, true)
        }
        LogicFamily::Vars { n } => {
            let exts = engine.start_vars(n)?;
            let mut rounds = 0;
            while engine.vars_round(&exts) {
                rounds += 1;
                if rounds == ROUND_CAP || engine.layers.iter().any(|l| l.gens.len() > GENERATOR_CAP) {
                    let (sentences, _) = engine.sentences(0, false, budget)?;
                    let corpus_points = engine.layers[0].points.len();
                    return Ok(Enumeration { sentences, truncated: true, corpus_points });
                }
            }
            (0, false)
        }
    };
    let (sentences, truncated) = engine.sentences(root, modal, budget)?;
    Ok(Enumeration { sentences, truncated, corpus_points: engine.layers[root].points.len() })
}
