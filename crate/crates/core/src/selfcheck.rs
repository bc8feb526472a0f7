//! Cross-module agreement sweeps. Each check pairs two independent
//! computations of the same relation and records every disagreement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coalgebras::{path_poset, tree_depth, tree_depth_exhaustive, tree_width, tree_width_oracle, ForestCoalgebra};
use crate::comonads::{
    build, check_comonad_laws, check_laws_with, coextend_unchecked, ek_build, find_kleisli_arrow, ComonadStructure, Flavour,
    DEFAULT_CARRIER_CAP,
};
use crate::counting::{hom_count, lovasz_separation};
use crate::error::Result;
use crate::format::StructureFile;
use crate::games::{arboreal_game, solve, solve_pointed, Family, GameSpec, Variant};
use crate::logic::{find_distinguisher, rank_type, FragmentSpec, LogicFamily, Polarity};
use crate::structures::{
    components, count_homs_unguarded, descriptor, disjoint_union, enumerate_graphs, enumerate_structures, gaifman, graph_signature,
    i_expand, product, PointedStructure, Signature, Structure,
};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Check { name, cases: 0, failures: Vec::new() }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfCheck {
    pub size: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SelfCheck {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MutationReport {
    pub mutants: usize,
    pub caught: usize,
}

/// Runs the law checker against `mutants` corrupted coextensions of `cs`.
/// Each mutant alters one image play of the true coextension.
pub fn mutation_harness(cs: &ComonadStructure, mutants: usize, seed: u64) -> Result<MutationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MutationReport { mutants: 0, caught: 0 };
    if cs.len() < 2 {
        return Ok(report);
    }
    for _ in 0..mutants {
        let kind = rng.gen_range(0..3);
        let victim = rng.gen_range(0..cs.len());
        let shift = rng.gen_range(1..cs.len());
        let corrupt = move |dom: &ComonadStructure, f: &[usize], cod: &ComonadStructure| -> Result<Vec<usize>> {
            let mut out = coextend_unchecked(dom, f, cod)?;
            let s = victim % out.len();
            out[s] = match kind {
                // Some other play.
                0 => (out[s] + shift) % cod.len(),
                // The parent's image, or the next play for a root.
                1 => dom.parents()[s].map_or((out[s] + 1) % cod.len(), |p| out[p]),
                // Swap with the next play whose image differs.
                _ => match (1..out.len()).map(|d| (s + d) % out.len()).find(|&t| out[t] != out[s]) {
                    Some(t) => {
                        let image = out[t];
                        out[t] = out[s];
                        image
                    }
                    None => (out[s] + 1) % cod.len(),
                },
            };
            Ok(out)
        };
        report.mutants += 1;
        if !check_laws_with(cs, 4, seed, &corrupt)?.passed() {
            report.caught += 1;
        }
    }
    Ok(report)
}

fn laws(size: usize, seed: u64) -> Result<Vec<Check>> {
    let mut laws = Check::new("comonad laws");
    let sig = Signature::parse("E/2 P/1")?;
    let corpus = enumerate_structures(&sig, size.min(2))?;
    for a in &corpus {
        let mut flavours = vec![Flavour::Ef { k: 1 }, Flavour::Ef { k: 2 }, Flavour::Pebble { n: 2, k: 2 }];
        flavours.extend((1..=2).map(|k| Flavour::Modal { k }));
        for flavour in flavours {
            let point = matches!(flavour, Flavour::Modal { .. }).then_some(0);
            let r = check_comonad_laws(a, point, flavour, 20, seed)?;
            laws.record(r.passed(), || format!("{flavour:?} on {}", descriptor(a)));
        }
    }
    let mut mutants = Check::new("law mutants caught");
    for (i, a) in [crate::structures::catalog::path(2), crate::structures::catalog::cycle(3)].iter().enumerate() {
        let cs = build(a, None, Flavour::Ef { k: 2 }, DEFAULT_CARRIER_CAP)?;
        let r = mutation_harness(&cs, 25, seed.wrapping_add(i as u64))?;
        mutants.record(r.caught == r.mutants, || format!("{} of {} mutants caught", r.caught, r.mutants));
    }
    Ok(vec![laws, mutants])
}

fn ef_agreement(size: usize) -> Result<Check> {
    let mut check = Check::new("games, oracle and rank types");
    let corpus = enumerate_structures(&graph_signature(), size)?;
    for (i, a) in corpus.iter().enumerate() {
        for b in &corpus[i..] {
            for k in 1..=2 {
                for equality in [true, false] {
                    let f = FragmentSpec::new(LogicFamily::Rank { k }, Polarity::Full, false, equality);
                    let game = solve(a, b, &f.game(), false)?.duplicator_wins();
                    let oracle = find_distinguisher(a, b, None, &f)?.distinguisher.is_none();
                    let types = rank_type(a, &[], k, equality) == rank_type(b, &[], k, equality);
                    check.record(game == oracle && oracle == types, || {
                        format!("k={k} eq={equality} {} vs {}: game {game}, oracle {oracle}, types {types}", descriptor(a), descriptor(b))
                    });
                }
            }
        }
    }
    Ok(check)
}

fn polarity_agreement(size: usize) -> Result<Check> {
    let mut check = Check::new("restricted polarities against their games");
    let corpus = enumerate_structures(&graph_signature(), size.min(2))?;
    for a in &corpus {
        for b in &corpus {
            for k in 1..=2 {
                for polarity in [Polarity::Existential, Polarity::Positive, Polarity::ExistentialPositive] {
                    let f = FragmentSpec::new(LogicFamily::Rank { k }, polarity, false, true);
                    let game = solve(a, b, &f.game(), false)?.duplicator_wins();
                    let oracle = find_distinguisher(a, b, None, &f)?.distinguisher.is_none();
                    check.record(game == oracle, || format!("{polarity:?} k={k} {} vs {}", descriptor(a), descriptor(b)));
                }
            }
        }
    }
    Ok(check)
}

fn kleisli_agreement(size: usize) -> Result<Check> {
    let mut check = Check::new("ep games against Kleisli arrows");
    let corpus = enumerate_structures(&graph_signature(), size.min(2))?;
    for a in &corpus {
        for b in &corpus {
            for k in 1..=2 {
                let game = solve(a, b, &GameSpec::new(Family::Ef { k }, Variant::ExistentialPositive, true), false)?;
                let arrow = find_kleisli_arrow(&ek_build(a, k)?, b, None, true)?;
                check.record(game.duplicator_wins() == arrow.is_some(), || format!("k={k} {} to {}", descriptor(a), descriptor(b)));
            }
        }
    }
    Ok(check)
}

fn tree_parameters(size: usize) -> Result<Vec<Check>> {
    let mut depth = Check::new("tree-depth against exhaustive search");
    let mut width = Check::new("tree-width against elimination orderings");
    for g in enumerate_graphs((size + 1).min(5))? {
        let td = tree_depth(&g)?.0;
        let exhaustive = if g.size() <= 6 { tree_depth_exhaustive(&g)? } else { td };
        depth.record(td == exhaustive, || format!("{}: {td} vs {exhaustive}", descriptor(&g)));
        let tw = tree_width(&g)?.0;
        let oracle = tree_width_oracle(&g)?;
        width.record(tw == oracle, || format!("{}: {tw} vs {oracle}", descriptor(&g)));
    }
    Ok(vec![depth, width])
}

fn arboreal(size: usize) -> Result<Check> {
    let mut check = Check::new("arboreal game against EF");
    let corpus = enumerate_structures(&graph_signature(), size.min(2))?;
    let poset = |a: &Structure, k| -> Result<_> { path_poset(&ForestCoalgebra::from_comonad(&ek_build(&i_expand(a)?, k)?)) };
    for a in &corpus {
        for b in &corpus {
            let k = 2;
            let tree = arboreal_game(&poset(a, k)?, &poset(b, k)?, Variant::Full)?;
            let ef = solve(a, b, &GameSpec::new(Family::Ef { k }, Variant::Full, true), false)?;
            check.record(tree.winner == ef.winner, || format!("{} vs {}", descriptor(a), descriptor(b)));
        }
    }
    Ok(check)
}

fn modal(size: usize) -> Result<Check> {
    let mut check = Check::new("bisimulation games against the modal oracle");
    let sig = Signature::parse("E/2 P/1")?;
    let corpus = enumerate_structures(&sig, size.min(2))?;
    for a in &corpus {
        for b in &corpus {
            for k in 0..=2 {
                let f = FragmentSpec::new(LogicFamily::Modal { k }, Polarity::Full, false, false);
                let (pa, pb) = (PointedStructure::new(a.clone(), 0)?, PointedStructure::new(b.clone(), 0)?);
                let game = solve_pointed(&pa, &pb, &f.game(), false)?.duplicator_wins();
                let oracle = find_distinguisher(a, b, Some((0, 0)), &f)?.distinguisher.is_none();
                check.record(game == oracle, || format!("k={k} {} vs {}", descriptor(a), descriptor(b)));
            }
        }
    }
    Ok(check)
}

fn counting(size: usize) -> Result<Vec<Check>> {
    let mut lovasz = Check::new("hom counts separate non-isomorphic pairs");
    let corpus = enumerate_structures(&graph_signature(), size.min(3))?;
    for (i, a) in corpus.iter().enumerate() {
        for b in &corpus[i..] {
            let r = lovasz_separation(a, b)?;
            lovasz.record(r.isomorphic == r.agree(), || format!("{} vs {}", descriptor(a), descriptor(b)));
        }
    }
    let mut identities = Check::new("hom count identities");
    let graphs = enumerate_graphs(size.min(3))?;
    for c in &graphs {
        let connected = components(&gaifman(c).masks()?, (1u64 << c.size()) - 1).len() <= 1;
        for a in graphs.iter().step_by(2) {
            for b in graphs.iter().step_by(3) {
                let product_ok = count_homs_unguarded(c, &product(a, b)?)? == hom_count(c, a)? * hom_count(c, b)?;
                let source_sum_ok = hom_count(&disjoint_union(c, a)?, b)? == hom_count(c, b)? * hom_count(a, b)?;
                let target_sum_ok = !connected || hom_count(c, &disjoint_union(a, b)?)? == hom_count(c, a)? + hom_count(c, b)?;
                identities.record(product_ok && source_sum_ok && target_sum_ok, || {
                    format!("{} with {} and {}", descriptor(c), descriptor(a), descriptor(b))
                });
            }
        }
    }
    Ok(vec![lovasz, identities])
}

fn formats(size: usize, seed: u64) -> Result<Check> {
    let mut check = Check::new("structure file round trip");
    let sig = Signature::parse("E/2 P/1")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, a) in enumerate_structures(&sig, size.min(2))?.into_iter().enumerate() {
        let point = (a.size() > 0 && rng.gen_bool(0.5)).then(|| rng.gen_range(0..a.size()));
        let file = StructureFile::single(&format!("S{i}"), a, point);
        let text = file.to_string();
        let ok = StructureFile::parse(&text).map(|back| back == file && back.to_string() == text).unwrap_or(false);
        check.record(ok, || text.clone());
    }
    Ok(check)
}

/// All sweeps over structures with at most `size` elements (individual
/// sweeps cap the size further where the search would explode).
pub fn selfcheck(size: usize, seed: u64) -> Result<SelfCheck> {
    let mut checks = laws(size, seed)?;
    checks.push(ef_agreement(size)?);
    checks.push(polarity_agreement(size)?);
    checks.push(kleisli_agreement(size)?);
    checks.extend(tree_parameters(size)?);
    checks.push(arboreal(size)?);
    checks.push(modal(size)?);
    checks.extend(counting(size)?);
    checks.push(formats(size, seed)?);
    Ok(SelfCheck { size, seed, checks })
}
