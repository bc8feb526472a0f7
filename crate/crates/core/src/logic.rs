//! First-order and modal formulas: evaluation, syntactic metrics, the standard
//! translation, rank-k types, a concrete s-expression syntax, and an oracle
//! that searches for distinguishing sentences.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{self, Family, GameResult, GameSpec, Variant};
use crate::structures::{Elem, Signature, Structure};

mod oracle;
mod syntax;

pub use oracle::{enumerate_sentences, find_distinguisher, Enumeration, Search};
pub use syntax::{parse_formula, parse_modal};

/// Variable index: `x1`, `x2`, …
pub type Var = u32;

pub type Assignment = BTreeMap<Var, Elem>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String, Vec<Var>),
    Eq(Var, Var),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
    /// At least `count` witnesses.
    CountGe(usize, Var, Box<Formula>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ModalFormula {
    True,
    False,
    Prop(String),
    Not(Box<ModalFormula>),
    And(Vec<ModalFormula>),
    Or(Vec<ModalFormula>),
    Box(String, Box<ModalFormula>),
    Dia(String, Box<ModalFormula>),
    /// At least `count` successors.
    DiaGe(usize, String, Box<ModalFormula>),
}

impl Formula {
    pub fn atom(rel: &str, args: &[Var]) -> Self {
        Formula::Atom(rel.to_string(), args.to_vec())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn exists(v: Var, f: Formula) -> Self {
        Formula::Exists(v, Box::new(f))
    }

    pub fn forall(v: Var, f: Formula) -> Self {
        Formula::Forall(v, Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    fn max_var(&self) -> Var {
        match self {
            Formula::True | Formula::False => 0,
            Formula::Atom(_, args) => args.iter().copied().max().unwrap_or(0),
            Formula::Eq(x, y) => (*x).max(*y),
            Formula::Not(f) => f.max_var(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::max_var).max().unwrap_or(0),
            Formula::Implies(a, b) => a.max_var().max(b.max_var()),
            Formula::Exists(v, f) | Formula::Forall(v, f) | Formula::CountGe(_, v, f) => (*v).max(f.max_var()),
        }
    }
}

impl ModalFormula {
    pub fn prop(p: &str) -> Self {
        ModalFormula::Prop(p.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: ModalFormula) -> Self {
        ModalFormula::Not(Box::new(f))
    }

    pub fn dia(rel: &str, f: ModalFormula) -> Self {
        ModalFormula::Dia(rel.to_string(), Box::new(f))
    }

    pub fn boxed(rel: &str, f: ModalFormula) -> Self {
        ModalFormula::Box(rel.to_string(), Box::new(f))
    }
}

fn relation(a: &Structure, name: &str, arity: usize) -> Result<usize> {
    let r = a.signature().index_of(name).ok_or_else(|| Error::InvalidSignature(format!("unknown relation symbol `{name}`")))?;
    if a.signature().arity(r) != arity {
        return Err(Error::Invalid(format!("`{name}` has arity {}, used with {arity} arguments", a.signature().arity(r))));
    }
    Ok(r)
}

/// Satisfaction of `phi` in `a` under `assignment`.
pub fn eval(a: &Structure, assignment: &Assignment, phi: &Formula) -> Result<bool> {
    let top = phi.max_var().max(assignment.keys().copied().max().unwrap_or(0));
    let mut vals = vec![None; top as usize + 1];
    for (&v, &e) in assignment {
        if e >= a.size() {
            return Err(Error::ElementOutOfRange { index: e, size: a.size() });
        }
        vals[v as usize] = Some(e);
    }
    eval_in(a, &mut vals, phi)
}

fn eval_in(a: &Structure, vals: &mut [Option<Elem>], phi: &Formula) -> Result<bool> {
    let get = |vals: &[Option<Elem>], v: Var| vals[v as usize].ok_or(Error::UnassignedVariable(v));
    Ok(match phi {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(name, args) => {
            let r = relation(a, name, args.len())?;
            let tuple = args.iter().map(|&v| get(vals, v)).collect::<Result<Vec<_>>>()?;
            a.holds(r, &tuple)
        }
        Formula::Eq(x, y) => get(vals, *x)? == get(vals, *y)?,
        Formula::Not(f) => !eval_in(a, vals, f)?,
        Formula::And(fs) => {
            for f in fs {
                if !eval_in(a, vals, f)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(fs) => {
            for f in fs {
                if eval_in(a, vals, f)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(x, y) => !eval_in(a, vals, x)? || eval_in(a, vals, y)?,
        Formula::Exists(v, f) => count_witnesses(a, vals, *v, f, 1)? >= 1,
        Formula::CountGe(c, v, f) => count_witnesses(a, vals, *v, f, *c)? >= *c,
        Formula::Forall(v, f) => {
            let saved = vals[*v as usize];
            let mut all = true;
            for e in 0..a.size() {
                vals[*v as usize] = Some(e);
                if !eval_in(a, vals, f)? {
                    all = false;
                    break;
                }
            }
            vals[*v as usize] = saved;
            all
        }
    })
}

/// Witnesses for `v` in `f`, counting no further than `enough`.
fn count_witnesses(a: &Structure, vals: &mut [Option<Elem>], v: Var, f: &Formula, enough: usize) -> Result<usize> {
    let saved = vals[v as usize];
    let mut count = 0;
    for e in 0..a.size() {
        vals[v as usize] = Some(e);
        if eval_in(a, vals, f)? {
            count += 1;
            if count >= enough {
                break;
            }
        }
    }
    vals[v as usize] = saved;
    Ok(count)
}

/// Satisfaction of a modal formula at `state`.
pub fn eval_modal(a: &Structure, state: Elem, phi: &ModalFormula) -> Result<bool> {
    if state >= a.size() {
        return Err(Error::ElementOutOfRange { index: state, size: a.size() });
    }
    let succ = |name: &str| -> Result<Vec<Elem>> {
        let r = relation(a, name, 2)?;
        Ok(a.relation(r).iter().filter(|t| t[0] == state).map(|t| t[1]).collect())
    };
    Ok(match phi {
        ModalFormula::True => true,
        ModalFormula::False => false,
        ModalFormula::Prop(p) => a.holds(relation(a, p, 1)?, &[state]),
        ModalFormula::Not(f) => !eval_modal(a, state, f)?,
        ModalFormula::And(fs) => {
            for f in fs {
                if !eval_modal(a, state, f)? {
                    return Ok(false);
                }
            }
            true
        }
        ModalFormula::Or(fs) => {
            for f in fs {
                if eval_modal(a, state, f)? {
                    return Ok(true);
                }
            }
            false
        }
        ModalFormula::Box(r, f) => {
            for t in succ(r)? {
                if !eval_modal(a, t, f)? {
                    return Ok(false);
                }
            }
            true
        }
        ModalFormula::Dia(r, f) => {
            for t in succ(r)? {
                if eval_modal(a, t, f)? {
                    return Ok(true);
                }
            }
            false
        }
        ModalFormula::DiaGe(c, r, f) => {
            let mut n = 0;
            for t in succ(r)? {
                n += usize::from(eval_modal(a, t, f)?);
            }
            n >= *c
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub quantifier_rank: usize,
    pub variable_count: usize,
    pub free_variables: BTreeSet<Var>,
    pub positive: bool,
    pub existential: bool,
    pub existential_positive: bool,
    pub uses_equality: bool,
    pub uses_counting: bool,
}

impl Metrics {
    pub fn fits(&self, polarity: Polarity) -> bool {
        match polarity {
            Polarity::Full => true,
            Polarity::Existential => self.existential,
            Polarity::Positive => self.positive,
            Polarity::ExistentialPositive => self.existential_positive,
        }
    }
}

/// Negation normal form: negations pushed onto atoms, implications expanded.
/// A negated counting quantifier has no dual and keeps its negation.
pub fn nnf(phi: &Formula) -> Formula {
    push(phi, false)
}

fn push(phi: &Formula, negate: bool) -> Formula {
    use Formula::*;
    match (phi, negate) {
        (True, false) | (False, true) => True,
        (False, false) | (True, true) => False,
        (Atom(..) | Eq(..), false) => phi.clone(),
        (Atom(..) | Eq(..), true) => Formula::not(phi.clone()),
        (Not(f), n) => push(f, !n),
        (And(fs), false) | (Or(fs), true) => And(fs.iter().map(|f| push(f, negate)).collect()),
        (Or(fs), false) | (And(fs), true) => Or(fs.iter().map(|f| push(f, negate)).collect()),
        (Implies(a, b), false) => Or(vec![push(a, true), push(b, false)]),
        (Implies(a, b), true) => And(vec![push(a, false), push(b, true)]),
        (Exists(v, f), false) | (Forall(v, f), true) => Formula::exists(*v, push(f, negate)),
        (Forall(v, f), false) | (Exists(v, f), true) => Formula::forall(*v, push(f, negate)),
        (CountGe(c, v, f), false) => CountGe(*c, *v, Box::new(push(f, false))),
        (CountGe(c, v, f), true) => Formula::not(CountGe(*c, *v, Box::new(push(f, false)))),
    }
}

pub fn metrics(phi: &Formula) -> Metrics {
    fn walk(phi: &Formula, bound: &mut Vec<Var>, free: &mut BTreeSet<Var>, all: &mut BTreeSet<Var>, eq: &mut bool, counting: &mut bool) -> usize {
        let mut note = |v: Var, bound: &Vec<Var>| {
            all.insert(v);
            if !bound.contains(&v) {
                free.insert(v);
            }
        };
        match phi {
            Formula::True | Formula::False => 0,
            Formula::Atom(_, args) => {
                args.iter().for_each(|&v| note(v, bound));
                0
            }
            Formula::Eq(x, y) => {
                *eq = true;
                note(*x, bound);
                note(*y, bound);
                0
            }
            Formula::Not(f) => walk(f, bound, free, all, eq, counting),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(|f| walk(f, bound, free, all, eq, counting)).max().unwrap_or(0),
            Formula::Implies(a, b) => walk(a, bound, free, all, eq, counting).max(walk(b, bound, free, all, eq, counting)),
            Formula::Exists(v, f) | Formula::Forall(v, f) | Formula::CountGe(_, v, f) => {
                if matches!(phi, Formula::CountGe(..)) {
                    *counting = true;
                }
                all.insert(*v);
                bound.push(*v);
                let r = walk(f, bound, free, all, eq, counting);
                bound.pop();
                r + 1
            }
        }
    }
    fn scan(phi: &Formula, negation: &mut bool, universal: &mut bool, deep_negation: &mut bool) {
        match phi {
            Formula::Not(f) => {
                *negation = true;
                if !matches!(**f, Formula::Atom(..) | Formula::Eq(..)) {
                    *deep_negation = true;
                }
                scan(f, negation, universal, deep_negation);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| scan(f, negation, universal, deep_negation)),
            Formula::Forall(_, f) => {
                *universal = true;
                scan(f, negation, universal, deep_negation);
            }
            Formula::Exists(_, f) | Formula::CountGe(_, _, f) => scan(f, negation, universal, deep_negation),
            _ => {}
        }
    }
    let (mut free, mut all, mut eq, mut counting) = (BTreeSet::new(), BTreeSet::new(), false, false);
    let rank = walk(phi, &mut Vec::new(), &mut free, &mut all, &mut eq, &mut counting);
    let (mut negation, mut universal, mut deep) = (false, false, false);
    scan(&nnf(phi), &mut negation, &mut universal, &mut deep);
    Metrics {
        quantifier_rank: rank,
        variable_count: all.len(),
        free_variables: free,
        positive: !negation,
        existential: !universal && !deep,
        existential_positive: !negation && !universal,
        uses_equality: eq,
        uses_counting: counting,
    }
}

pub fn modal_depth(phi: &ModalFormula) -> usize {
    match phi {
        ModalFormula::True | ModalFormula::False | ModalFormula::Prop(_) => 0,
        ModalFormula::Not(f) => modal_depth(f),
        ModalFormula::And(fs) | ModalFormula::Or(fs) => fs.iter().map(modal_depth).max().unwrap_or(0),
        ModalFormula::Box(_, f) | ModalFormula::Dia(_, f) | ModalFormula::DiaGe(_, _, f) => 1 + modal_depth(f),
    }
}

/// First-order translation in the free variable `x1`; nesting depth `d` binds `x{d+1}`.
pub fn standard_translation(phi: &ModalFormula) -> Formula {
    fn st(phi: &ModalFormula, v: Var) -> Formula {
        let step = |r: &str, f: &ModalFormula| (Formula::atom(r, &[v, v + 1]), st(f, v + 1));
        match phi {
            ModalFormula::True => Formula::True,
            ModalFormula::False => Formula::False,
            ModalFormula::Prop(p) => Formula::atom(p, &[v]),
            ModalFormula::Not(f) => Formula::not(st(f, v)),
            ModalFormula::And(fs) => Formula::And(fs.iter().map(|f| st(f, v)).collect()),
            ModalFormula::Or(fs) => Formula::Or(fs.iter().map(|f| st(f, v)).collect()),
            ModalFormula::Dia(r, f) => {
                let (edge, body) = step(r, f);
                Formula::exists(v + 1, Formula::And(vec![edge, body]))
            }
            ModalFormula::Box(r, f) => {
                let (edge, body) = step(r, f);
                Formula::forall(v + 1, Formula::implies(edge, body))
            }
            ModalFormula::DiaGe(c, r, f) => {
                let (edge, body) = step(r, f);
                Formula::CountGe(*c, v + 1, Box::new(Formula::And(vec![edge, body])))
            }
        }
    }
    st(phi, 1)
}

/// Hereditarily finite invariant of a tuple: its atomic diagram and, one level
/// down, the set of types of its one-element extensions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RankType {
    pub atomic: Vec<bool>,
    pub extensions: BTreeSet<RankType>,
}

fn atomic_diagram(a: &Structure, tuple: &[Elem], equality: bool) -> Vec<bool> {
    let sig = a.signature();
    let mut bits = Vec::new();
    for r in 0..sig.len() {
        let m = sig.arity(r);
        let total = tuple.len().pow(m as u32);
        let mut t = vec![0; m];
        for code in 0..total {
            let mut c = code;
            for slot in t.iter_mut() {
                *slot = tuple[c % tuple.len()];
                c /= tuple.len();
            }
            bits.push(a.holds(r, &t));
        }
    }
    if equality {
        for i in 0..tuple.len() {
            for j in i + 1..tuple.len() {
                bits.push(tuple[i] == tuple[j]);
            }
        }
    }
    bits
}

pub fn rank_type(a: &Structure, tuple: &[Elem], k: usize, equality: bool) -> RankType {
    let extensions = if k == 0 {
        BTreeSet::new()
    } else {
        let mut ext = tuple.to_vec();
        ext.push(0);
        (0..a.size())
            .map(|e| {
                *ext.last_mut().expect("nonempty") = e;
                rank_type(a, &ext, k - 1, equality)
            })
            .collect()
    };
    RankType { atomic: atomic_diagram(a, tuple, equality), extensions }
}

/// Modal analogue of [`RankType`]: propositions at a state and, per binary
/// relation, the set of successor types.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModalType {
    pub props: Vec<bool>,
    pub successors: Vec<BTreeSet<ModalType>>,
}

pub fn modal_type(a: &Structure, state: Elem, k: usize) -> ModalType {
    let sig = a.signature();
    let props = sig.unary().map(|r| a.holds(r, &[state])).collect();
    let successors = if k == 0 {
        Vec::new()
    } else {
        sig.binary()
            .map(|r| a.relation(r).iter().filter(|t| t[0] == state).map(|t| modal_type(a, t[1], k - 1)).collect())
            .collect()
    };
    ModalType { props, successors }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LogicFamily {
    Rank { k: usize },
    Vars { n: usize },
    Modal { k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Full,
    Existential,
    Positive,
    ExistentialPositive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FragmentSpec {
    pub family: LogicFamily,
    pub polarity: Polarity,
    pub counting: bool,
    pub equality: bool,
}

impl FragmentSpec {
    pub fn new(family: LogicFamily, polarity: Polarity, counting: bool, equality: bool) -> Self {
        FragmentSpec { family, polarity, counting, equality }
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.family, LogicFamily::Modal { .. }) && self.equality {
            return Err(Error::Unsupported("equality in modal fragments".into()));
        }
        if self.counting && self.polarity != Polarity::Full {
            return Err(Error::Unsupported("counting quantifiers with a restricted polarity".into()));
        }
        if matches!(self.family, LogicFamily::Vars { n: 0 }) {
            return Err(Error::Invalid("a variable-bounded fragment needs at least one variable".into()));
        }
        Ok(())
    }

    /// The game characterizing this fragment.
    pub fn game(&self) -> GameSpec {
        let variant = match (self.counting, self.polarity) {
            (true, _) => Variant::Bijective,
            (_, Polarity::Full) => Variant::Full,
            (_, Polarity::Existential) => Variant::Existential,
            (_, Polarity::Positive) => Variant::Positive,
            (_, Polarity::ExistentialPositive) => Variant::ExistentialPositive,
        };
        let family = match self.family {
            LogicFamily::Rank { k } => Family::Ef { k },
            LogicFamily::Vars { n } => Family::Pebble { n },
            LogicFamily::Modal { k } => Family::Bisim { k },
        };
        GameSpec::new(family, variant, self.equality)
    }
}

/// A sentence of either logic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sentence {
    First(Formula),
    Modal(ModalFormula),
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sentence::First(phi) => phi.fmt(f),
            Sentence::Modal(phi) => phi.fmt(f),
        }
    }
}

impl Sentence {
    /// Truth in a structure, at `point` for modal sentences.
    pub fn holds(&self, a: &Structure, point: Option<Elem>) -> Result<bool> {
        match self {
            Sentence::First(phi) => eval(a, &Assignment::new(), phi),
            Sentence::Modal(phi) => eval_modal(a, point.ok_or(Error::NotPointed)?, phi),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Equivalence {
    /// Whether `A` and `B` agree on the fragment; for the one-sided
    /// polarities, whether every sentence true in `A` holds in `B`.
    pub equivalent: bool,
    pub game: GameResult,
    #[serde(serialize_with = "display_opt")]
    pub certificate: Option<Sentence>,
}

fn display_opt<S: serde::Serializer>(s: &Option<Sentence>, ser: S) -> std::result::Result<S::Ok, S::Error> {
    match s {
        Some(x) => ser.serialize_some(&x.to_string()),
        None => ser.serialize_none(),
    }
}

/// Decides the fragment through its game; on failure optionally asks the
/// oracle for a distinguishing sentence.
pub fn equiv(
    a: &Structure,
    b: &Structure,
    points: Option<(Elem, Elem)>,
    fragment: &FragmentSpec,
    witness: bool,
    certificate: bool,
) -> Result<Equivalence> {
    fragment.validate()?;
    let spec = fragment.game();
    let mut game = match (fragment.family, points) {
        (LogicFamily::Modal { .. }, Some((pa, pb))) => {
            let ma = crate::structures::PointedStructure::new(a.clone(), pa)?;
            let mb = crate::structures::PointedStructure::new(b.clone(), pb)?;
            games::solve_pointed(&ma, &mb, &spec, witness)?
        }
        (LogicFamily::Modal { .. }, None) => return Err(Error::NotPointed),
        _ => games::solve(a, b, &spec, witness)?,
    };
    let equivalent = game.duplicator_wins();
    let mut cert = None;
    if !equivalent && certificate {
        match find_distinguisher(a, b, points, fragment) {
            Ok(search) => cert = search.distinguisher,
            Err(Error::Truncated(_)) => {}
            Err(e) => return Err(e),
        }
    }
    game.certificate = cert.as_ref().map(ToString::to_string);
    Ok(Equivalence { equivalent, game, certificate: cert })
}

/// A random modal formula of depth at most `depth` over the signature.
pub fn random_modal_formula<R: Rng>(sig: &Signature, depth: usize, graded: bool, rng: &mut R) -> ModalFormula {
    let props: Vec<&str> = sig.unary().map(|r| sig.name(r)).collect();
    let rels: Vec<&str> = sig.binary().map(|r| sig.name(r)).collect();
    let leaf = |rng: &mut R| match rng.gen_range(0..4) {
        0 if !props.is_empty() => ModalFormula::prop(props[rng.gen_range(0..props.len())]),
        1 => ModalFormula::True,
        2 => ModalFormula::False,
        _ if !props.is_empty() => ModalFormula::not(ModalFormula::prop(props[rng.gen_range(0..props.len())])),
        _ => ModalFormula::True,
    };
    if depth == 0 || rels.is_empty() || rng.gen_bool(0.25) {
        if rng.gen_bool(0.3) {
            return ModalFormula::And(vec![leaf(rng), leaf(rng)]);
        }
        return leaf(rng);
    }
    let r = rels[rng.gen_range(0..rels.len())];
    let sub = |rng: &mut R| random_modal_formula(sig, depth - 1, graded, rng);
    match rng.gen_range(0..6) {
        0 => ModalFormula::dia(r, sub(rng)),
        1 => ModalFormula::boxed(r, sub(rng)),
        2 => ModalFormula::not(sub(rng)),
        3 => ModalFormula::And(vec![sub(rng), sub(rng)]),
        4 if graded => ModalFormula::DiaGe(rng.gen_range(1..=3), r.to_string(), Box::new(sub(rng))),
        _ => ModalFormula::Or(vec![sub(rng), sub(rng)]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::solve;
    use crate::structures::catalog::*;
    use crate::structures::{enumerate_structures, graph_signature, iso_check};

    /// A directed walk of length `len` from `from` to `to`, reusing three variables.
    fn walk(len: usize, from: Var, to: Var) -> Formula {
        if len == 1 {
            return Formula::atom("E", &[from, to]);
        }
        let spare = 6 - from - to;
        Formula::exists(spare, Formula::And(vec![Formula::atom("E", &[from, spare]), walk(len - 1, spare, to)]))
    }

    fn path_sentence(len: usize) -> Formula {
        Formula::exists(1, Formula::exists(2, walk(len, 1, 2)))
    }

    #[test]
    fn eval_examples() {
        let distinct = Formula::exists(1, Formula::exists(2, Formula::not(Formula::Eq(1, 2))));
        for n in 0..4 {
            assert_eq!(eval(&edgeless(n), &Assignment::new(), &distinct).unwrap(), n >= 2);
        }
        let sig = Signature::parse("P/1").unwrap();
        let mut one = Structure::new(sig, ["a", "b"]).unwrap();
        one.insert_named("P", &["a"]).unwrap();
        let two_p = Formula::CountGe(2, 1, Box::new(Formula::atom("P", &[1])));
        assert!(!eval(&one, &Assignment::new(), &two_p).unwrap());
        let free = Formula::atom("P", &[1]);
        assert!(matches!(eval(&one, &Assignment::new(), &free), Err(Error::UnassignedVariable(1))));
        assert!(eval(&one, &Assignment::from([(1, 0)]), &free).unwrap());
    }

    #[test]
    fn path_sentences_on_directed_paths() {
        for len in 2..=3 {
            let phi = path_sentence(len);
            assert!(eval(&directed_path(len), &Assignment::new(), &phi).unwrap());
            assert!(!eval(&directed_path(len - 1), &Assignment::new(), &phi).unwrap());
            let m = metrics(&phi);
            assert_eq!(m.variable_count, 3);
            assert!(m.existential_positive);
        }
    }

    #[test]
    fn metric_examples() {
        let atom = Formula::atom("R", &[1, 2]);
        assert_eq!(metrics(&atom).quantifier_rank, 0);
        let phi = Formula::forall(
            2,
            Formula::exists(
                3,
                Formula::And(vec![Formula::atom("R", &[1, 3]), Formula::implies(Formula::atom("R", &[1, 2]), Formula::atom("R", &[3, 2]))]),
            ),
        );
        let m = metrics(&phi);
        assert_eq!(m.quantifier_rank, 2);
        assert_eq!(m.free_variables, BTreeSet::from([1]));
        assert!(!m.positive && !m.existential);
        let neg_atom = Formula::exists(1, Formula::not(Formula::atom("R", &[1, 1])));
        let m = metrics(&neg_atom);
        assert!(m.existential && !m.positive && !m.existential_positive);
        let counting = Formula::CountGe(2, 1, Box::new(Formula::True));
        assert_eq!(metrics(&counting).quantifier_rank, 1);
        assert!(metrics(&counting).uses_counting);
        // ¬∀ is existential after normalization.
        let not_forall = Formula::not(Formula::forall(1, Formula::atom("R", &[1, 1])));
        assert!(metrics(&not_forall).existential);
    }

    #[test]
    fn standard_translation_examples() {
        assert_eq!(standard_translation(&ModalFormula::prop("p")), Formula::atom("p", &[1]));
        let dia = ModalFormula::dia("alpha", ModalFormula::prop("p"));
        assert_eq!(
            standard_translation(&dia),
            Formula::exists(2, Formula::And(vec![Formula::atom("alpha", &[1, 2]), Formula::atom("p", &[2])]))
        );
        let nested = ModalFormula::boxed("alpha", ModalFormula::dia("beta", ModalFormula::prop("p")));
        assert_eq!(modal_depth(&nested), 2);
        assert_eq!(metrics(&standard_translation(&nested)).quantifier_rank, 2);
    }

    #[test]
    fn standard_translation_preserves_truth() {
        use rand::SeedableRng;
        let sig = Signature::parse("E/2 P/1").unwrap();
        let corpus = enumerate_structures(&sig, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let phi = random_modal_formula(&sig, 3, true, &mut rng);
            let st = standard_translation(&phi);
            for a in &corpus {
                for s in 0..a.size() {
                    assert_eq!(eval_modal(a, s, &phi).unwrap(), eval(a, &Assignment::from([(1, s)]), &st).unwrap(), "{phi}");
                }
            }
        }
    }

    #[test]
    fn rank_types_match_ef_games() {
        let corpus = enumerate_structures(&graph_signature(), 2).unwrap();
        for a in &corpus {
            for b in &corpus {
                for k in 0..=3 {
                    for equality in [true, false] {
                        let same = rank_type(a, &[], k, equality) == rank_type(b, &[], k, equality);
                        let spec = GameSpec::new(Family::Ef { k }, Variant::Full, equality);
                        assert_eq!(same, solve(a, b, &spec, false).unwrap().duplicator_wins());
                    }
                }
            }
        }
    }

    #[test]
    fn isomorphic_structures_share_types() {
        let a = digraph(3, &[(0, 1), (1, 2)]);
        let b = digraph(3, &[(2, 0), (0, 1)]);
        assert!(iso_check(&a, &b).unwrap().is_some());
        for k in 0..=3 {
            assert_eq!(rank_type(&a, &[], k, true), rank_type(&b, &[], k, true));
        }
    }

    #[test]
    fn counting_with_positive_polarity_is_rejected() {
        let f = FragmentSpec::new(LogicFamily::Rank { k: 1 }, Polarity::Positive, true, true);
        assert!(matches!(equiv(&edgeless(1), &edgeless(1), None, &f, false, false), Err(Error::Unsupported(_))));
        let m = FragmentSpec::new(LogicFamily::Modal { k: 1 }, Polarity::Full, false, true);
        assert!(m.validate().is_err());
    }

    #[test]
    fn equiv_dispatches_and_certifies() {
        let f = FragmentSpec::new(LogicFamily::Rank { k: 3 }, Polarity::Full, false, true);
        let r = equiv(&edgeless(2), &edgeless(3), None, &f, false, true).unwrap();
        assert!(!r.equivalent);
        let phi = r.certificate.unwrap();
        assert!(phi.holds(&edgeless(2), None).unwrap() != phi.holds(&edgeless(3), None).unwrap());
        let f2 = FragmentSpec::new(LogicFamily::Rank { k: 2 }, Polarity::Full, false, true);
        let r = equiv(&edgeless(2), &edgeless(3), None, &f2, true, true).unwrap();
        assert!(r.equivalent && r.game.strategy.is_some() && r.certificate.is_none());
    }
}
