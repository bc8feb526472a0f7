//! Model-comparison games between two structures.
//!
//! Every family reduces to a graph of canonical positions: the set of matched
//! pairs for Ehrenfeucht–Fraïssé games, the sorted pebble placement for pebble
//! games and the current pair of states for bisimulation games. `W_0` is the
//! set of positions satisfying the winning condition and `W_{j+1}` keeps those
//! from which Duplicator answers every Spoiler challenge inside `W_j`.
//! Round-bounded games read off `W_k`; the unbounded pebble game iterates to
//! the greatest fixpoint and reports the round at which it stabilized.
//!
//! Strategies are emitted over labelled positions (move histories or pebble
//! placements) and can be replayed independently of the solver.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::coalgebras::{CoalgebraKind, ForestCoalgebra, ForestOrder, PathPoset};
use crate::comonads::{self, ComonadStructure, Flavour};
use crate::error::{guard, Error, Result};
use crate::structures::{i_expand, is_embedding, is_homomorphism, Elem, PointedStructure, Structure};

/// Largest number of canonical positions a solver will explore.
pub const POSITION_CAP: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Ef { k: usize },
    Pebble { n: usize },
    PebbleRounds { n: usize, k: usize },
    Bisim { k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    Existential,
    Positive,
    ExistentialPositive,
    Bijective,
}

impl Variant {
    /// Spoiler may play in either structure.
    pub fn two_sided(self) -> bool {
        matches!(self, Variant::Full | Variant::Positive | Variant::Bijective)
    }

    /// Winning positions must be partial isomorphisms, not just partial homomorphisms.
    pub fn reflects(self) -> bool {
        matches!(self, Variant::Full | Variant::Existential | Variant::Bijective)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameSpec {
    pub family: Family,
    pub variant: Variant,
    pub equality: bool,
}

impl GameSpec {
    pub fn new(family: Family, variant: Variant, equality: bool) -> Self {
        GameSpec { family, variant, equality }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    Spoiler,
    Duplicator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// A Spoiler move. `label` is the pebble (1-based) or the relation followed;
/// `elem` is absent in bijective games, where Duplicator commits to a
/// bijection before Spoiler picks the element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpoilerMove {
    pub side: Side,
    pub elem: Option<Elem>,
    pub label: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicatorMove {
    Element(Elem),
    Bijection(Vec<(Elem, Elem)>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    /// Pairs chosen so far in an Ehrenfeucht–Fraïssé game.
    Sequence(Vec<(Elem, Elem)>),
    /// Pebble moves so far in a round-bounded pebble game.
    History(Vec<(usize, Elem, Elem)>),
    /// Current placement of each pebble in the unbounded pebble game.
    Placement(Vec<Option<(Elem, Elem)>>),
    /// Current states in a bisimulation game.
    States { a: Elem, b: Elem, depth: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub position: Position,
    pub spoiler: SpoilerMove,
    pub response: DuplicatorMove,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub spec: GameSpec,
    pub entries: Vec<StrategyEntry>,
}

impl Strategy {
    pub fn table(&self) -> HashMap<(&Position, &SpoilerMove), &DuplicatorMove> {
        self.entries.iter().map(|e| ((&e.position, &e.spoiler), &e.response)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GameResult {
    pub winner: Player,
    pub strategy: Option<Strategy>,
    pub positions_explored: usize,
    /// First round `j` with `W_j = W_{j+1}` (unbounded pebble game only).
    pub stabilized_at: Option<usize>,
    pub certificate: Option<String>,
}

impl GameResult {
    pub fn duplicator_wins(&self) -> bool {
        self.winner == Player::Duplicator
    }
}

type Key = Vec<Option<(Elem, Elem)>>;

struct Rules<'a> {
    a: &'a Structure,
    b: &'a Structure,
    family: Family,
    variant: Variant,
    points: Option<(Elem, Elem)>,
}

/// Advances an index tuple in base `base`; false after the last one.
fn next_tuple(idx: &mut [usize], base: usize) -> bool {
    for d in idx.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn successors(s: &Structure, rel: usize, x: Elem) -> Vec<Elem> {
    s.relation(rel).iter().filter(|t| t[0] == x).map(|t| t[1]).collect()
}

fn placement_of(n: usize, history: &[(usize, Elem, Elem)]) -> Vec<Option<(Elem, Elem)>> {
    let mut slots = vec![None; n];
    for &(p, a, b) in history {
        slots[p - 1] = Some((a, b));
    }
    slots
}

impl Rules<'_> {
    fn modal(&self) -> bool {
        matches!(self.family, Family::Bisim { .. })
    }

    fn pebbles(&self) -> usize {
        match self.family {
            Family::Pebble { n } | Family::PebbleRounds { n, .. } => n,
            _ => 0,
        }
    }

    /// Whether adding `new` to the consistent pairs `placed` keeps the winning
    /// condition: every index tuple through `new` is preserved (and reflected
    /// for the isomorphism variants). Bisimulation compares unary predicates only.
    fn fits(&self, placed: &[(Elem, Elem)], new: (Elem, Elem)) -> bool {
        let reflects = self.variant.reflects();
        let agree = |x: bool, y: bool| if reflects { x == y } else { !x || y };
        let sig = self.a.signature();
        if self.modal() {
            return sig.unary().all(|r| agree(self.a.holds(r, &[new.0]), self.b.holds(r, &[new.1])));
        }
        let mut pairs = placed.to_vec();
        pairs.push(new);
        let last = pairs.len() - 1;
        let (mut ta, mut tb) = (Vec::new(), Vec::new());
        for r in 0..sig.len() {
            let mut idx = vec![0; sig.arity(r)];
            loop {
                if idx.contains(&last) {
                    ta.clear();
                    tb.clear();
                    for &i in &idx {
                        ta.push(pairs[i].0);
                        tb.push(pairs[i].1);
                    }
                    if !agree(self.a.holds(r, &ta), self.b.holds(r, &tb)) {
                        return false;
                    }
                }
                if !next_tuple(&mut idx, pairs.len()) {
                    break;
                }
            }
        }
        true
    }

    fn limit(&self) -> Option<usize> {
        match self.family {
            Family::Ef { k } | Family::PebbleRounds { k, .. } | Family::Bisim { k } => Some(k),
            Family::Pebble { .. } => None,
        }
    }

    fn all(s: &Structure) -> Vec<Elem> {
        (0..s.size()).collect()
    }

    // Canonical positions.

    fn root_key(&self) -> Option<Key> {
        match self.family {
            Family::Ef { .. } => Some(Vec::new()),
            Family::Pebble { n } | Family::PebbleRounds { n, .. } => Some(vec![None; n]),
            Family::Bisim { .. } => {
                let p = self.points.expect("pointed inputs");
                self.fits(&[], p).then(|| vec![Some(p)])
            }
        }
    }

    /// Spoiler's preliminary choice at a canonical position: the pebble slot
    /// to lift, the relation to follow, or nothing.
    fn contexts(&self, key: &Key) -> Vec<usize> {
        match self.family {
            Family::Ef { .. } => vec![0],
            Family::Pebble { .. } | Family::PebbleRounds { .. } => {
                (0..key.len()).filter(|&i| i == 0 || key[i] != key[i - 1]).collect()
            }
            Family::Bisim { .. } => self.a.signature().binary().collect(),
        }
    }

    fn frame(&self, key: &Key, ctx: usize) -> (Vec<(Elem, Elem)>, Vec<Elem>, Vec<Elem>) {
        match self.family {
            Family::Ef { .. } => (key.iter().flatten().copied().collect(), Self::all(self.a), Self::all(self.b)),
            Family::Pebble { .. } | Family::PebbleRounds { .. } => {
                let placed = key.iter().enumerate().filter(|&(i, _)| i != ctx).filter_map(|(_, s)| *s).collect();
                (placed, Self::all(self.a), Self::all(self.b))
            }
            Family::Bisim { .. } => {
                let (x, y) = key[0].expect("states");
                (Vec::new(), successors(self.a, ctx, x), successors(self.b, ctx, y))
            }
        }
    }

    fn advance(&self, key: &Key, ctx: usize, pair: (Elem, Elem)) -> Key {
        match self.family {
            Family::Ef { .. } => {
                let mut k = key.clone();
                k.push(Some(pair));
                k.sort_unstable();
                k.dedup();
                k
            }
            Family::Pebble { .. } | Family::PebbleRounds { .. } => {
                let mut k = key.clone();
                k[ctx] = Some(pair);
                k.sort_unstable();
                k
            }
            Family::Bisim { .. } => vec![Some(pair)],
        }
    }

    // Labelled positions.

    fn root_position(&self) -> Position {
        match self.family {
            Family::Ef { .. } => Position::Sequence(Vec::new()),
            Family::PebbleRounds { .. } => Position::History(Vec::new()),
            Family::Pebble { n } => Position::Placement(vec![None; n]),
            Family::Bisim { .. } => {
                let (a, b) = self.points.expect("pointed inputs");
                Position::States { a, b, depth: 0 }
            }
        }
    }

    fn key_of(&self, pos: &Position) -> Key {
        let mut k: Key = match pos {
            Position::Sequence(s) => s.iter().copied().map(Some).collect(),
            Position::History(h) => placement_of(self.pebbles(), h),
            Position::Placement(p) => p.clone(),
            Position::States { a, b, .. } => return vec![Some((*a, *b))],
        };
        k.sort_unstable();
        if matches!(pos, Position::Sequence(_)) {
            k.dedup();
        }
        k
    }

    fn rounds_left(&self, pos: &Position) -> Option<usize> {
        let played = match pos {
            Position::Sequence(s) => s.len(),
            Position::History(h) => h.len(),
            Position::Placement(_) => return None,
            Position::States { depth, .. } => *depth,
        };
        self.limit().map(|k| k.saturating_sub(played))
    }

    fn labels(&self) -> Vec<Option<usize>> {
        match self.family {
            Family::Ef { .. } => vec![None],
            Family::Pebble { n } | Family::PebbleRounds { n, .. } => (1..=n).map(Some).collect(),
            Family::Bisim { .. } => self.a.signature().binary().map(Some).collect(),
        }
    }

    fn labelled_frame(&self, pos: &Position, label: Option<usize>) -> (Vec<(Elem, Elem)>, Vec<Elem>, Vec<Elem>) {
        let others = |slots: Vec<Option<(Elem, Elem)>>| -> Vec<(Elem, Elem)> {
            let p = label.expect("pebble label");
            slots.iter().enumerate().filter(|&(i, _)| i + 1 != p).filter_map(|(_, s)| *s).collect()
        };
        match pos {
            Position::Sequence(s) => (s.clone(), Self::all(self.a), Self::all(self.b)),
            Position::History(h) => (others(placement_of(self.pebbles(), h)), Self::all(self.a), Self::all(self.b)),
            Position::Placement(p) => (others(p.clone()), Self::all(self.a), Self::all(self.b)),
            Position::States { a, b, .. } => {
                let r = label.expect("relation label");
                (Vec::new(), successors(self.a, r, *a), successors(self.b, r, *b))
            }
        }
    }

    fn labelled_advance(&self, pos: &Position, label: Option<usize>, (x, y): (Elem, Elem)) -> Position {
        match pos {
            Position::Sequence(s) => {
                let mut s = s.clone();
                s.push((x, y));
                Position::Sequence(s)
            }
            Position::History(h) => {
                let mut h = h.clone();
                h.push((label.expect("pebble label"), x, y));
                Position::History(h)
            }
            Position::Placement(p) => {
                let mut p = p.clone();
                p[label.expect("pebble label") - 1] = Some((x, y));
                Position::Placement(p)
            }
            Position::States { depth, .. } => Position::States { a: x, b: y, depth: depth + 1 },
        }
    }

    fn spoiler_moves(&self, pos: &Position) -> Vec<SpoilerMove> {
        if self.rounds_left(pos) == Some(0) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for label in self.labels() {
            if self.variant == Variant::Bijective {
                out.push(SpoilerMove { side: Side::A, elem: None, label });
                continue;
            }
            let (_, rows, cols) = self.labelled_frame(pos, label);
            out.extend(rows.iter().map(|&x| SpoilerMove { side: Side::A, elem: Some(x), label }));
            if self.variant.two_sided() {
                out.extend(cols.iter().map(|&y| SpoilerMove { side: Side::B, elem: Some(y), label }));
            }
        }
        out
    }
}

enum Challenge {
    /// Duplicator must answer with one of these positions.
    Choose(Vec<usize>),
    /// Duplicator must give a bijection rows → cols whose every cell is answered.
    Match { rows: usize, cols: usize, cells: Vec<Option<usize>> },
}

#[derive(Default)]
struct Graph {
    index: HashMap<Key, usize>,
    keys: Vec<Key>,
    depth: Vec<usize>,
    challenges: Vec<Option<Vec<Challenge>>>,
    layers: Vec<Vec<bool>>,
    stabilized: Option<usize>,
}

impl Graph {
    fn intern(&mut self, key: Key, depth: usize) -> usize {
        if let Some(&v) = self.index.get(&key) {
            return v;
        }
        let v = self.keys.len();
        self.index.insert(key.clone(), v);
        self.keys.push(key);
        self.depth.push(depth);
        self.challenges.push(None);
        v
    }

    fn win(&self, key: &Key, rounds: Option<usize>) -> bool {
        let v = *self.index.get(key).expect("explored position");
        let last = self.layers.len() - 1;
        self.layers[rounds.map_or(last, |r| r.min(last))][v]
    }
}

fn explore(rules: &Rules) -> Result<Option<Graph>> {
    let Some(root) = rules.root_key() else { return Ok(None) };
    let limit = rules.limit();
    let bijective = rules.variant == Variant::Bijective;
    let mut g = Graph::default();
    g.intern(root, 0);
    let mut head = 0;
    while head < g.keys.len() {
        let d = g.depth[head];
        if limit.is_none_or(|k| d < k) {
            let key = g.keys[head].clone();
            let mut chs = Vec::new();
            for ctx in rules.contexts(&key) {
                let (placed, rows, cols) = rules.frame(&key, ctx);
                let cell = |x: Elem, y: Elem, g: &mut Graph| {
                    rules.fits(&placed, (x, y)).then(|| g.intern(rules.advance(&key, ctx, (x, y)), d + 1))
                };
                if bijective {
                    let mut cells = Vec::with_capacity(rows.len() * cols.len());
                    for &x in &rows {
                        for &y in &cols {
                            cells.push(cell(x, y, &mut g));
                        }
                    }
                    chs.push(Challenge::Match { rows: rows.len(), cols: cols.len(), cells });
                    continue;
                }
                for &x in &rows {
                    chs.push(Challenge::Choose(cols.iter().filter_map(|&y| cell(x, y, &mut g)).collect()));
                }
                if rules.variant.two_sided() {
                    for &y in &cols {
                        chs.push(Challenge::Choose(rows.iter().filter_map(|&x| cell(x, y, &mut g)).collect()));
                    }
                }
            }
            g.challenges[head] = Some(chs);
        }
        head += 1;
        if g.keys.len() > POSITION_CAP {
            return Err(guard("position cap", format!("more than {POSITION_CAP} positions")));
        }
    }
    Ok(Some(g))
}

fn survives(ch: &Challenge, win: &[bool]) -> bool {
    match ch {
        Challenge::Choose(opts) => opts.iter().any(|&t| win[t]),
        Challenge::Match { rows, cols, cells } => {
            rows == cols && has_perfect_matching(*rows, *cols, &|r, c| cells[r * cols + c].is_some_and(|t| win[t]))
        }
    }
}

fn iterate(g: &mut Graph, limit: Option<usize>) {
    let n = g.keys.len();
    g.layers = vec![vec![true; n]];
    loop {
        if limit.is_some_and(|k| g.layers.len() > k) {
            break;
        }
        let prev = g.layers.last().expect("layer");
        let next: Vec<bool> = (0..n)
            .map(|v| prev[v] && g.challenges[v].as_ref().is_none_or(|chs| chs.iter().all(|c| survives(c, prev))))
            .collect();
        if limit.is_none() && next == *prev {
            g.stabilized = Some(g.layers.len() - 1);
            break;
        }
        g.layers.push(next);
    }
}

fn augment(r: usize, cols: usize, allowed: &dyn Fn(usize, usize) -> bool, owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for c in 0..cols {
        if allowed(r, c) && !seen[c] {
            seen[c] = true;
            if owner[c].is_none_or(|o| augment(o, cols, allowed, owner, seen)) {
                owner[c] = Some(r);
                return true;
            }
        }
    }
    false
}

fn has_perfect_matching(rows: usize, cols: usize, allowed: &dyn Fn(usize, usize) -> bool) -> bool {
    if rows != cols {
        return false;
    }
    let mut owner = vec![None; cols];
    (0..rows).all(|r| augment(r, cols, allowed, &mut owner, &mut vec![false; cols]))
}

/// The lexicographically least perfect matching, as the column of each row.
fn least_perfect_matching(rows: usize, cols: usize, allowed: &dyn Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    if !has_perfect_matching(rows, cols, allowed) {
        return None;
    }
    let mut fixed: Vec<usize> = Vec::with_capacity(rows);
    for r in 0..rows {
        let choice = (0..cols).find(|&c| {
            if !allowed(r, c) || fixed.contains(&c) {
                return false;
            }
            let rest = |r2: usize, c2: usize| {
                if r2 <= r {
                    c2 == if r2 == r { c } else { fixed[r2] }
                } else {
                    c2 != c && !fixed.contains(&c2) && allowed(r2, c2)
                }
            };
            has_perfect_matching(rows, cols, &rest)
        })?;
        fixed.push(choice);
    }
    Some(fixed)
}

fn extract(rules: &Rules, g: &Graph) -> Vec<StrategyEntry> {
    let mut entries = Vec::new();
    let root = rules.root_position();
    let mut seen: HashSet<Position> = HashSet::from([root.clone()]);
    let mut stack = vec![root];
    while let Some(pos) = stack.pop() {
        let next_rounds = rules.rounds_left(&pos).map(|r| r.saturating_sub(1));
        for m in rules.spoiler_moves(&pos) {
            let (placed, rows, cols) = rules.labelled_frame(&pos, m.label);
            let ok = |x: Elem, y: Elem| {
                rules.fits(&placed, (x, y)) && g.win(&rules.key_of(&rules.labelled_advance(&pos, m.label, (x, y))), next_rounds)
            };
            let (response, answers) = match m.elem {
                None => {
                    let cols_of = least_perfect_matching(rows.len(), cols.len(), &|i, j| ok(rows[i], cols[j]))
                        .expect("winning position admits a bijection");
                    let pairs: Vec<(Elem, Elem)> = cols_of.iter().enumerate().map(|(i, &j)| (rows[i], cols[j])).collect();
                    (DuplicatorMove::Bijection(pairs.clone()), pairs)
                }
                Some(x) if m.side == Side::A => {
                    let y = *cols.iter().find(|&&y| ok(x, y)).expect("winning position has a response");
                    (DuplicatorMove::Element(y), vec![(x, y)])
                }
                Some(y) => {
                    let x = *rows.iter().find(|&&x| ok(x, y)).expect("winning position has a response");
                    (DuplicatorMove::Element(x), vec![(x, y)])
                }
            };
            for pair in answers {
                let next = rules.labelled_advance(&pos, m.label, pair);
                if seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
            entries.push(StrategyEntry { position: pos.clone(), spoiler: m, response });
        }
    }
    entries
}

fn prepare(a: &Structure, b: &Structure, spec: &GameSpec) -> Result<(Structure, Structure)> {
    if a.signature() != b.signature() {
        return Err(Error::SignatureMismatch);
    }
    match spec.family {
        Family::Bisim { .. } => {
            if spec.equality {
                return Err(Error::Unsupported("equality in bisimulation games".into()));
            }
            if !a.signature().is_modal() {
                return Err(Error::NotModal);
            }
        }
        Family::Pebble { n } | Family::PebbleRounds { n, .. } if n == 0 => {
            return Err(Error::Invalid("pebble games need at least one pebble".into()));
        }
        _ => {}
    }
    if spec.equality {
        Ok((i_expand(a)?, i_expand(b)?))
    } else {
        Ok((a.clone(), b.clone()))
    }
}

fn run(a: &Structure, b: &Structure, points: Option<(Elem, Elem)>, spec: &GameSpec, with_strategy: bool) -> Result<GameResult> {
    let (ea, eb) = prepare(a, b, spec)?;
    let rules = Rules { a: &ea, b: &eb, family: spec.family, variant: spec.variant, points };
    let Some(mut g) = explore(&rules)? else {
        return Ok(GameResult { winner: Player::Spoiler, strategy: None, positions_explored: 0, stabilized_at: None, certificate: None });
    };
    iterate(&mut g, rules.limit());
    let root = g.keys[0].clone();
    let wins = g.win(&root, rules.limit());
    let strategy = (wins && with_strategy).then(|| Strategy { spec: *spec, entries: extract(&rules, &g) });
    Ok(GameResult {
        winner: if wins { Player::Duplicator } else { Player::Spoiler },
        strategy,
        positions_explored: g.keys.len(),
        stabilized_at: g.stabilized,
        certificate: None,
    })
}

/// Solves a game between plain structures; bisimulation games need [`solve_pointed`].
pub fn solve(a: &Structure, b: &Structure, spec: &GameSpec, with_strategy: bool) -> Result<GameResult> {
    if matches!(spec.family, Family::Bisim { .. }) {
        return Err(Error::NotPointed);
    }
    run(a, b, None, spec, with_strategy)
}

pub fn solve_pointed(a: &PointedStructure, b: &PointedStructure, spec: &GameSpec, with_strategy: bool) -> Result<GameResult> {
    run(&a.structure, &b.structure, Some((a.point, b.point)), spec, with_strategy)
}

pub fn solve_existential(a: &Structure, b: &Structure, family: Family, equality: bool) -> Result<GameResult> {
    solve(a, b, &GameSpec::new(family, Variant::Existential, equality), false)
}

pub fn solve_ep(a: &Structure, b: &Structure, family: Family, equality: bool) -> Result<GameResult> {
    solve(a, b, &GameSpec::new(family, Variant::ExistentialPositive, equality), false)
}

pub fn solve_positive(a: &Structure, b: &Structure, family: Family, equality: bool) -> Result<GameResult> {
    solve(a, b, &GameSpec::new(family, Variant::Positive, equality), false)
}

pub fn solve_bijective(a: &Structure, b: &Structure, family: Family, equality: bool) -> Result<GameResult> {
    solve(a, b, &GameSpec::new(family, Variant::Bijective, equality), false)
}

/// Replays `strategy` against every Spoiler move sequence, checking that each
/// response is legal and keeps the winning condition.
pub fn verify_strategy(a: &Structure, b: &Structure, points: Option<(Elem, Elem)>, strategy: &Strategy) -> Result<bool> {
    let spec = strategy.spec;
    if matches!(spec.family, Family::Bisim { .. }) && points.is_none() {
        return Err(Error::NotPointed);
    }
    let (ea, eb) = prepare(a, b, &spec)?;
    let rules = Rules { a: &ea, b: &eb, family: spec.family, variant: spec.variant, points };
    if rules.root_key().is_none() {
        return Ok(false);
    }
    let table = strategy.table();
    let root = rules.root_position();
    let mut seen: HashSet<Position> = HashSet::from([root.clone()]);
    let mut stack = vec![root];
    while let Some(pos) = stack.pop() {
        for m in rules.spoiler_moves(&pos) {
            let Some(&response) = table.get(&(&pos, &m)) else { return Ok(false) };
            let (placed, rows, cols) = rules.labelled_frame(&pos, m.label);
            let pairs = match (response, m.elem, m.side) {
                (DuplicatorMove::Element(y), Some(x), Side::A) if cols.contains(y) => vec![(x, *y)],
                (DuplicatorMove::Element(x), Some(y), Side::B) if rows.contains(x) => vec![(*x, y)],
                (DuplicatorMove::Bijection(pairs), None, _) => {
                    let firsts: BTreeSet<Elem> = pairs.iter().map(|p| p.0).collect();
                    let seconds: BTreeSet<Elem> = pairs.iter().map(|p| p.1).collect();
                    let bijective = pairs.len() == rows.len()
                        && rows.len() == cols.len()
                        && firsts == rows.iter().copied().collect()
                        && seconds == cols.iter().copied().collect();
                    if !bijective {
                        return Ok(false);
                    }
                    pairs.clone()
                }
                _ => return Ok(false),
            };
            for pair in pairs {
                if !rules.fits(&placed, pair) {
                    return Ok(false);
                }
                let next = rules.labelled_advance(&pos, m.label, pair);
                if seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
    }
    Ok(true)
}

fn kleisli_flavour(spec: &GameSpec) -> Result<Flavour> {
    if !matches!(spec.variant, Variant::ExistentialPositive | Variant::Existential) {
        return Err(Error::Unsupported("Kleisli arrows correspond to one-sided strategies".into()));
    }
    match spec.family {
        Family::Ef { k } if k >= 1 => Ok(Flavour::Ef { k }),
        Family::PebbleRounds { n, k } if k >= 1 => Ok(Flavour::Pebble { n, k }),
        _ => Err(Error::Unsupported("Kleisli arrows exist for round-bounded EF and pebble games with k >= 1".into())),
    }
}

/// The position reached by playing the prefixes of `s` with Duplicator's
/// answers `f`, and the Spoiler move that extends it to `s`.
fn position_before(cs: &ComonadStructure, s: usize, f: &[Elem]) -> (Position, SpoilerMove) {
    let chain = cs.chain(s);
    let prefix = &chain[..chain.len() - 1];
    let last = cs.play(s).last().expect("nonempty play");
    let pos = match cs.flavour() {
        Flavour::Pebble { .. } => {
            Position::History(prefix.iter().map(|&t| (cs.pebble(t).expect("pebble"), cs.last(t), f[t])).collect())
        }
        _ => Position::Sequence(prefix.iter().map(|&t| (cs.last(t), f[t])).collect()),
    };
    (pos, SpoilerMove { side: Side::A, elem: Some(last.elem), label: last.label })
}

/// Reads a Kleisli arrow `G(A) → B` off a Duplicator strategy for the
/// one-sided game; with equality the arrow is an I-morphism.
pub fn strategy_to_kleisli(a: &Structure, b: &Structure, strategy: &Strategy) -> Result<(ComonadStructure, Vec<Elem>)> {
    let flavour = kleisli_flavour(&strategy.spec)?;
    let cs = comonads::build(a, None, flavour, comonads::DEFAULT_CARRIER_CAP)?;
    let table = strategy.table();
    let mut f = vec![0; cs.len()];
    // Plays are interned breadth-first, so prefixes are filled in before extensions.
    for s in 0..cs.len() {
        let (pos, m) = position_before(&cs, s, &f);
        match table.get(&(&pos, &m)) {
            Some(DuplicatorMove::Element(y)) => f[s] = *y,
            _ => return Err(Error::Invalid(format!("strategy has no answer at play {}", cs.play_text(s)))),
        }
    }
    if !comonads::is_kleisli_arrow(&cs, b, &f, None)? {
        return Err(Error::Invalid("strategy does not give a homomorphism".into()));
    }
    if strategy.spec.equality && !comonads::is_i_morphism(&cs, &f)? {
        return Err(Error::Invalid("strategy does not give an I-morphism".into()));
    }
    Ok((cs, f))
}

/// The Duplicator strategy answering each Spoiler prefix `s` with `f(s)`.
pub fn kleisli_to_strategy(cs: &ComonadStructure, f: &[Elem], b: &Structure, spec: GameSpec) -> Result<Strategy> {
    let flavour = kleisli_flavour(&spec)?;
    if flavour != cs.flavour() {
        return Err(Error::Invalid("comonad does not match the game".into()));
    }
    if !comonads::is_kleisli_arrow(cs, b, f, None)? {
        return Err(Error::NotHomomorphism);
    }
    if spec.equality && !comonads::is_i_morphism(cs, f)? {
        return Err(Error::Invalid("not an I-morphism".into()));
    }
    let entries = (0..cs.len())
        .map(|s| {
            let (position, spoiler) = position_before(cs, s, f);
            StrategyEntry { position, spoiler, response: DuplicatorMove::Element(f[s]) }
        })
        .collect();
    Ok(Strategy { spec, entries })
}

fn path_match(x: &PathPoset, m: usize, y: &PathPoset, n: usize, reflects: bool) -> bool {
    if x.chains[m].len() != y.chains[n].len() {
        return false;
    }
    let (sx, px) = x.path_object(m);
    let (sy, py) = y.path_object(n);
    let id: Vec<Elem> = (0..sx.size()).collect();
    let ok = if reflects { is_embedding(&sx, &sy, &id) } else { is_homomorphism(&sx, &sy, &id) };
    px == py && ok.unwrap_or(false)
}

fn root_of(p: &PathPoset) -> usize {
    p.parent.iter().position(Option::is_none).expect("a root")
}

struct Arboreal<'a> {
    x: &'a PathPoset,
    y: &'a PathPoset,
    variant: Variant,
    memo: HashMap<(usize, usize), bool>,
}

impl Arboreal<'_> {
    fn win(&mut self, m: usize, n: usize) -> bool {
        if let Some(&w) = self.memo.get(&(m, n)) {
            return w;
        }
        let (x, y) = (self.x, self.y);
        let w = path_match(x, m, y, n, self.variant.reflects())
            && x.children[m].iter().all(|&m2| y.children[n].iter().any(|&n2| self.win(m2, n2)))
            && (!self.variant.two_sided() || y.children[n].iter().all(|&n2| x.children[m].iter().any(|&m2| self.win(m2, n2))));
        self.memo.insert((m, n), w);
        w
    }
}

fn arboreal_check(x: &PathPoset, y: &PathPoset, variant: Variant) -> Result<()> {
    if variant == Variant::Bijective {
        return Err(Error::Unsupported("bijective arboreal games".into()));
    }
    if x.coalgebra.structure.signature() != y.coalgebra.structure.signature() {
        return Err(Error::SignatureMismatch);
    }
    if x.coalgebra.kind != y.coalgebra.kind {
        return Err(Error::Invalid("path posets of different kinds".into()));
    }
    Ok(())
}

/// The game on two path posets: positions are pairs of equal-length paths,
/// Spoiler extends one path by a covering step, Duplicator extends the other,
/// and the paths must stay isomorphic (or homomorphic, for the positive variants).
pub fn arboreal_game(x: &PathPoset, y: &PathPoset, variant: Variant) -> Result<GameResult> {
    arboreal_check(x, y, variant)?;
    let mut game = Arboreal { x, y, variant, memo: HashMap::new() };
    let wins = game.win(root_of(x), root_of(y));
    Ok(GameResult {
        winner: if wins { Player::Duplicator } else { Player::Spoiler },
        strategy: None,
        positions_explored: game.memo.len(),
        stabilized_at: None,
        certificate: None,
    })
}

/// A span of coalgebra morphisms `X ← R → Y`, as maps on carriers.
#[derive(Clone, Debug)]
pub struct Span {
    pub apex: ForestCoalgebra,
    pub left: Vec<Elem>,
    pub right: Vec<Elem>,
}

/// The span whose apex is the tree of Duplicator-winning positions of the
/// full arboreal game, when Duplicator wins; its legs are the projections.
pub fn bisimulation_span(x: &PathPoset, y: &PathPoset) -> Result<Option<Span>> {
    arboreal_check(x, y, Variant::Full)?;
    let mut game = Arboreal { x, y, variant: Variant::Full, memo: HashMap::new() };
    let root = (root_of(x), root_of(y));
    if !game.win(root.0, root.1) {
        return Ok(None);
    }
    let formal = x.coalgebra.kind != CoalgebraKind::Modal;
    let offset = usize::from(formal);
    // Winning positions reachable from the root, parents before children.
    let mut nodes = vec![root];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut head = 0;
    while head < nodes.len() {
        let (m, n) = nodes[head];
        for &m2 in &x.children[m] {
            for &n2 in &y.children[n] {
                if game.win(m2, n2) {
                    nodes.push((m2, n2));
                    parent.push(Some(head));
                }
            }
        }
        head += 1;
    }
    // With a formal root the root pair is not an element of the apex.
    let skip = usize::from(formal);
    let xs = &x.coalgebra.structure;
    let ys = &y.coalgebra.structure;
    let left: Vec<Elem> = nodes[skip..].iter().map(|&(m, _)| m - offset).collect();
    let right: Vec<Elem> = nodes[skip..].iter().map(|&(_, n)| n - offset).collect();
    let names = (0..left.len()).map(|i| format!("{}|{}", xs.element_name(left[i]), ys.element_name(right[i])));
    let mut apex = Structure::new(xs.signature().clone(), names)?;
    let order_parent: Vec<Option<Elem>> =
        parent[skip..].iter().map(|p| p.and_then(|p| if p < skip { None } else { Some(p - skip) })).collect();
    let order = ForestOrder::new(order_parent);
    let sig = xs.signature().clone();
    let children = order.children();
    for leaf in (0..left.len()).filter(|&e| children[e].is_empty()) {
        let chain = order.down_set(leaf);
        for r in 0..sig.len() {
            let mut idx = vec![0; sig.arity(r)];
            loop {
                let image: Vec<Elem> = idx.iter().map(|&i| left[chain[i]]).collect();
                if xs.holds(r, &image) {
                    apex.insert(r, idx.iter().map(|&i| chain[i]).collect())?;
                }
                if !next_tuple(&mut idx, chain.len()) {
                    break;
                }
            }
        }
    }
    let pebbles = x.coalgebra.pebbles.as_ref().map(|ps| left.iter().map(|&e| ps[e]).collect());
    let apex = ForestCoalgebra { kind: x.coalgebra.kind, structure: apex, order, pebbles };
    Ok(Some(Span { apex, left, right }))
}
