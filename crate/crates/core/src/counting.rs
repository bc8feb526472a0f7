//! Homomorphism counts, hom-vectors over tree-shaped classes, and sweeps
//! comparing hom-indistinguishability with counting games.

use serde::{Deserialize, Serialize};

use crate::coalgebras::{tree_depth, tree_width};
use crate::error::{guard, Error, Result};
use crate::games::{solve, Family, GameSpec, Variant};
use crate::structures::{count_homs_unguarded, descriptor, enumerate_structures, i_quotient, iso_check, Signature, Structure};

/// Largest source structure [`hom_count`] accepts.
pub const SOURCE_CAP: usize = 6;
/// Largest target structure [`hom_count`] accepts.
pub const TARGET_CAP: usize = 8;

/// Number of homomorphisms `c → a`.
pub fn hom_count(c: &Structure, a: &Structure) -> Result<u64> {
    if c.size() > SOURCE_CAP {
        return Err(guard("hom-count source size<=6", format!("{} elements", c.size())));
    }
    if a.size() > TARGET_CAP {
        return Err(guard("hom-count target size<=8", format!("{} elements", a.size())));
    }
    count_homs_unguarded(c, a)
}

/// Largest size [`enumerate_class`] scans.
pub const CLASS_SIZE_CAP: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum HomClass {
    All,
    /// Tree-depth at most `k`.
    DepthAtMost { k: usize },
    /// Tree-width below `n`, i.e. covered by `n` pebbles.
    WidthBelow { n: usize },
}

impl HomClass {
    pub fn contains(&self, c: &Structure) -> Result<bool> {
        Ok(match *self {
            HomClass::All => true,
            HomClass::DepthAtMost { k } => tree_depth(c)?.0 <= k,
            HomClass::WidthBelow { n } => c.size() == 0 || tree_width(c)?.0 < n,
        })
    }
}

/// Members of `class` among `candidates`.
pub fn class_members(candidates: impl IntoIterator<Item = Structure>, class: HomClass) -> Result<Vec<Structure>> {
    let mut out = Vec::new();
    for c in candidates {
        if class.contains(&c)? {
            out.push(c);
        }
    }
    Ok(out)
}

/// Nonempty members of `class` up to isomorphism with at most `max_size`
/// elements, in enumeration order.
pub fn enumerate_class(sig: &Signature, class: HomClass, max_size: usize) -> Result<Vec<Structure>> {
    if max_size > CLASS_SIZE_CAP {
        return Err(guard("class enumeration size<=4", format!("max size {max_size}")));
    }
    class_members(enumerate_structures(sig, max_size)?, class)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomEntry {
    pub structure: String,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomVector {
    pub class: HomClass,
    pub max_size: usize,
    pub entries: Vec<HomEntry>,
}

/// Hom counts into `a` from every member of `class` up to `max_size`.
pub fn hom_vector(a: &Structure, class: HomClass, max_size: usize) -> Result<HomVector> {
    let sources = enumerate_class(a.signature(), class, max_size)?;
    let entries = sources.iter().map(|c| Ok(HomEntry { structure: descriptor(c), count: hom_count(c, a)? })).collect::<Result<_>>()?;
    Ok(HomVector { class, max_size, entries })
}

#[derive(Clone, Debug, Serialize)]
pub struct Separator {
    pub structure: String,
    #[serde(skip)]
    pub source: Structure,
    pub count_a: u64,
    pub count_b: u64,
}

/// The first of `sources` with different hom counts into `a` and `b`.
pub fn separate(a: &Structure, b: &Structure, sources: &[Structure]) -> Result<Option<Separator>> {
    if a.signature() != b.signature() {
        return Err(Error::SignatureMismatch);
    }
    for c in sources {
        let (count_a, count_b) = (hom_count(c, a)?, hom_count(c, b)?);
        if count_a != count_b {
            return Ok(Some(Separator { structure: descriptor(c), source: c.clone(), count_a, count_b }));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct LovaszReport {
    pub class: HomClass,
    pub max_size: usize,
    pub sources_tested: usize,
    pub isomorphic: bool,
    /// First differing source; absent when the vectors agree.
    pub separator: Option<Separator>,
}

impl LovaszReport {
    pub fn agree(&self) -> bool {
        self.separator.is_none()
    }
}

/// Scans the hom vectors of `a` and `b` over `class` up to `max_size`.
pub fn lovasz_compare(a: &Structure, b: &Structure, class: HomClass, max_size: usize) -> Result<LovaszReport> {
    if a.signature() != b.signature() {
        return Err(Error::SignatureMismatch);
    }
    let sources = enumerate_class(a.signature(), class, max_size)?;
    let separator = separate(a, b, &sources)?;
    Ok(LovaszReport { class, max_size, sources_tested: sources.len(), isomorphic: iso_check(a, b)?.is_some(), separator })
}

/// [`lovasz_compare`] over all structures of size at most `max(|a|, |b|)`,
/// which suffices to separate non-isomorphic structures.
pub fn lovasz_separation(a: &Structure, b: &Structure) -> Result<LovaszReport> {
    lovasz_compare(a, b, HomClass::All, a.size().max(b.size()))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct HomSweep {
    pub pairs: usize,
    pub equivalent_pairs: usize,
    /// Pairs the game calls equivalent but some source separates.
    pub unsound: Vec<(String, String)>,
    /// Pairs the game separates but no source within reach does (only
    /// collected when the converse is requested).
    pub unseparated: Vec<(String, String)>,
}

/// For every pair in `corpus`, compares the game verdict with hom counts from
/// `sources`. Equivalence should imply equal counts; the converse is only
/// expected when `sources` exhausts the relevant class, so it is checked
/// (and merely reported) on request.
pub fn hom_sweep(corpus: &[Structure], game: &GameSpec, sources: &[Structure], converse: bool) -> Result<HomSweep> {
    let mut report = HomSweep::default();
    for (i, a) in corpus.iter().enumerate() {
        for b in &corpus[i + 1..] {
            report.pairs += 1;
            let equivalent = solve(a, b, game, false)?.duplicator_wins();
            let names = || (descriptor(a), descriptor(b));
            if equivalent {
                report.equivalent_pairs += 1;
                if separate(a, b, sources)?.is_some() {
                    report.unsound.push(names());
                }
            } else if converse && separate(a, b, sources)?.is_none() {
                report.unseparated.push(names());
            }
        }
    }
    Ok(report)
}

/// Counting rank-`k` equivalence against hom counts from tree-depth ≤ `k` sources.
pub fn depth_sweep(corpus: &[Structure], k: usize, sources: &[Structure], converse: bool) -> Result<HomSweep> {
    let class = class_members(sources.iter().cloned(), HomClass::DepthAtMost { k })?;
    hom_sweep(corpus, &GameSpec::new(Family::Ef { k }, Variant::Bijective, true), &class, converse)
}

/// Counting `k+1`-variable equivalence against hom counts from tree-width ≤ `k` sources.
pub fn width_sweep(corpus: &[Structure], k: usize, sources: &[Structure], converse: bool) -> Result<HomSweep> {
    let class = class_members(sources.iter().cloned(), HomClass::WidthBelow { n: k + 1 })?;
    hom_sweep(corpus, &GameSpec::new(Family::Pebble { n: k + 1 }, Variant::Bijective, true), &class, converse)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct QuotientReport {
    pub checked: usize,
    /// Descriptors of structures whose quotient has larger tree-depth.
    pub violations: Vec<String>,
}

/// Checks that quotienting by `I` never increases tree-depth, for each
/// structure of the corpus whose signature carries `I`.
pub fn h_treedepth_check(corpus: &[Structure]) -> Result<QuotientReport> {
    let mut report = QuotientReport::default();
    for x in corpus {
        if !x.signature().has_equality() {
            return Err(Error::MissingEquality);
        }
        report.checked += 1;
        if tree_depth(&i_quotient(x)?)?.0 > tree_depth(x)?.0 {
            report.violations.push(descriptor(x));
        }
    }
    Ok(report)
}
