use std::fs;
use std::path::Path;

use gckit::coalgebras::{check_forest_cover, check_pebble_forest_cover, tree_depth, tree_width};
use gckit::comonads::{build, Flavour, DEFAULT_CARRIER_CAP};
use gckit::counting::{hom_count, hom_vector, lovasz_compare, lovasz_separation, HomClass};
use gckit::format::{CoverListing, StructureFile};
use gckit::games::{verify_strategy, Strategy};
use gckit::logic::{equiv, find_distinguisher, parse_formula, parse_modal, FragmentSpec, LogicFamily, Polarity, Sentence};
use gckit::selfcheck::selfcheck;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::input::{load, points, read_file, Input};
use crate::{ComonadArg, Command, Failure, FragmentArgs, OracleArg, ParameterArg, VariantArg, VerifyArg};

#[derive(Debug, Serialize)]
pub struct Stats {
    pub positions_explored: usize,
    pub elapsed_ms: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct Envelope {
    pub command: String,
    pub inputs: Map<String, Value>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
    pub stats: Stats,
}

pub struct Outcome {
    pub envelope: Envelope,
    /// A negative answer; turns into exit status 1 under `--strict`.
    pub negative: bool,
    /// A failed self-check; always exit status 1.
    pub failed: bool,
}

impl Envelope {
    fn new(command: &str, inputs: Map<String, Value>, result: Value) -> Self {
        Envelope { command: command.into(), inputs, result, witness: None, certificate: None, stats: Stats { positions_explored: 0, elapsed_ms: None } }
    }

    fn answer(self, negative: bool) -> Outcome {
        Outcome { envelope: self, negative, failed: false }
    }
}

fn to_value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn inputs(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn bound(word: &str, text: &str) -> Result<usize, Failure> {
    text.parse().map_err(|_| Failure::Input(format!("`{word}` expects a non-negative integer, got `{text}`")))
}

fn fragment(args: &FragmentArgs) -> Result<FragmentSpec, Failure> {
    let [name, value] = &args.family[..] else { unreachable!("clap enforces two values") };
    let n = bound(name, value)?;
    let family = match name.as_str() {
        "rank" => LogicFamily::Rank { k: n },
        "vars" => LogicFamily::Vars { n },
        "modal" => LogicFamily::Modal { k: n },
        other => return Err(Failure::Input(format!("unknown family `{other}` (expected rank, vars or modal)"))),
    };
    let polarity = match args.variant {
        VariantArg::Full => Polarity::Full,
        VariantArg::Exists => Polarity::Existential,
        VariantArg::Pos => Polarity::Positive,
        VariantArg::Ep => Polarity::ExistentialPositive,
    };
    let equality = !args.no_equality && !matches!(family, LogicFamily::Modal { .. });
    let spec = FragmentSpec::new(family, polarity, args.counting, equality);
    spec.validate()?;
    Ok(spec)
}

fn class(words: &[String]) -> Result<HomClass, Failure> {
    match words {
        [all] if all == "all" => Ok(HomClass::All),
        [name, value] if name == "td" => Ok(HomClass::DepthAtMost { k: bound(name, value)? }),
        [name, value] if name == "tw" => Ok(HomClass::WidthBelow { n: bound(name, value)? }),
        _ => Err(Failure::Input(format!("unknown class `{}` (expected all, td K or tw N)", words.join(" ")))),
    }
}

fn fragment_inputs(spec: &FragmentSpec, a: &Input, b: &Input) -> Map<String, Value> {
    inputs(&[("A", json!(a.spec)), ("B", json!(b.spec)), ("fragment", to_value(spec))])
}

/// Modal fragments are evaluated at the points named in the files.
fn fragment_points(spec: &FragmentSpec, a: &Input, b: &Input) -> Result<Option<(usize, usize)>, Failure> {
    match spec.family {
        LogicFamily::Modal { .. } => points(a, b).map(Some),
        _ => Ok(None),
    }
}

fn carrier_cap() -> Result<usize, Failure> {
    match std::env::var("GCKIT_CARRIER_CAP") {
        Ok(text) => text.trim().parse().map_err(|_| Failure::Input(format!("GCKIT_CARRIER_CAP must be a positive integer, got `{text}`"))),
        Err(_) => Ok(DEFAULT_CARRIER_CAP),
    }
}

/// A witness file holds either the witness itself or a whole envelope.
fn read_witness(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(match value {
        Value::Object(mut map) if map.contains_key("command") => map.remove("witness").unwrap_or(Value::Null),
        other => other,
    })
}

fn witness_as<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    serde_json::from_value(read_witness(path)?).map_err(|e| Failure::Input(format!("{}: not a {what}: {e}", path.display())))
}

pub fn run(command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::Equiv { fragment: args, witness, certificate, a, b } => {
            let spec = fragment(args)?;
            let (a, b) = (load(a)?, load(b)?);
            let pts = fragment_points(&spec, &a, &b)?;
            let answer = equiv(&a.entry.structure, &b.entry.structure, pts, &spec, *witness, *certificate)?;
            let verdict = if answer.equivalent { "equivalent" } else { "not equivalent" };
            let result = json!({
                "verdict": verdict,
                "equivalent": answer.equivalent,
                "winner": answer.game.winner,
                "game": spec.game(),
                "stabilized_at": answer.game.stabilized_at,
            });
            let mut env = Envelope::new("equiv", fragment_inputs(&spec, &a, &b), result);
            env.witness = answer.game.strategy.as_ref().map(to_value);
            env.certificate = answer.certificate.as_ref().map(ToString::to_string);
            env.stats.positions_explored = answer.game.positions_explored;
            Ok(env.answer(!answer.equivalent))
        }
        Command::Param { parameter, witness, a } => {
            let a = load(a)?;
            let s = &a.entry.structure;
            let (name, value, listing) = match parameter {
                ParameterArg::TreeDepth => {
                    let (depth, order) = tree_depth(s)?;
                    ("tree-depth", depth, CoverListing::new(s, &order, None))
                }
                ParameterArg::TreeWidth => {
                    let (width, cover) = tree_width(s)?;
                    ("tree-width", width, CoverListing::new(s, &cover.order, Some(&cover.pebbles)))
                }
            };
            let mut env = Envelope::new("param", inputs(&[("A", json!(a.spec)), ("parameter", json!(name))]), json!({ "value": value }));
            if *witness {
                env.witness = Some(to_value(&listing));
            }
            Ok(env.answer(false))
        }
        Command::Comonad { flavour } => {
            let (flavour, label, spec, output) = match flavour {
                ComonadArg::Ef { k, a, output } => (Flavour::Ef { k: *k }, format!("ef{k}"), a, output),
                ComonadArg::Pebble { n, k, a, output } => (Flavour::Pebble { n: *n, k: *k }, format!("pebble{n}x{k}"), a, output),
                ComonadArg::Modal { k, a, output } => (Flavour::Modal { k: *k }, format!("modal{k}"), a, output),
            };
            let a = load(spec)?;
            let point = match flavour {
                Flavour::Modal { .. } => Some(a.entry.point.ok_or_else(|| Failure::Input(format!("{}: the modal comonad needs a `point` line", a.spec)))?),
                _ => None,
            };
            let cs = build(&a.entry.structure, point, flavour, carrier_cap()?)?;
            let carrier_point = point.and_then(|_| cs.roots().next());
            let file = StructureFile::single(&format!("{label}_{}", a.entry.name), cs.carrier().clone(), carrier_point);
            let text = file.to_string();
            let mut result = json!({ "flavour": flavour, "elements": cs.len() });
            match output {
                Some(path) => {
                    fs::write(path, &text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                    result["output"] = json!(path.display().to_string());
                }
                None => result["carrier"] = json!(text),
            }
            Ok(Envelope::new("comonad", inputs(&[("A", json!(a.spec))]), result).answer(false))
        }
        Command::HomCount { c, a } => {
            let (c, a) = (load(c)?, load(a)?);
            let count = hom_count(&c.entry.structure, &a.entry.structure)?;
            Ok(Envelope::new("hom-count", inputs(&[("C", json!(c.spec)), ("A", json!(a.spec))]), json!({ "count": count })).answer(false))
        }
        Command::HomVector { class: words, max_size, a } => {
            let class = class(words)?;
            let a = load(a)?;
            let vector = hom_vector(&a.entry.structure, class, *max_size)?;
            Ok(Envelope::new("hom-vector", inputs(&[("A", json!(a.spec)), ("class", to_value(&class)), ("max_size", json!(max_size))]), to_value(&vector))
                .answer(false))
        }
        Command::LovaszCompare { class: words, max_size, a, b } => {
            let class = class(words)?;
            let (a, b) = (load(a)?, load(b)?);
            let (sa, sb) = (&a.entry.structure, &b.entry.structure);
            let report = match (class, max_size) {
                (HomClass::All, None) => lovasz_separation(sa, sb)?,
                (_, Some(m)) => lovasz_compare(sa, sb, class, *m)?,
                (_, None) => return Err(Failure::Input("`--max-size` is required for a restricted class".into())),
            };
            let mut result = to_value(&report);
            result["agree"] = json!(report.agree());
            let env = Envelope::new("lovasz-compare", inputs(&[("A", json!(a.spec)), ("B", json!(b.spec)), ("class", to_value(&class))]), result);
            Ok(env.answer(!report.agree()))
        }
        Command::Oracle { query: OracleArg::Distinguish { fragment: args, a, b } } => {
            let spec = fragment(args)?;
            let (a, b) = (load(a)?, load(b)?);
            let pts = fragment_points(&spec, &a, &b)?;
            let search = find_distinguisher(&a.entry.structure, &b.entry.structure, pts, &spec)?;
            let result = json!({
                "distinguished": search.distinguisher.is_some(),
                "rank": search.rank,
                "conclusive": search.conclusive,
                "rounds": search.rounds,
            });
            let mut env = Envelope::new("oracle distinguish", fragment_inputs(&spec, &a, &b), result);
            env.certificate = search.distinguisher.as_ref().map(ToString::to_string);
            Ok(env.answer(search.distinguisher.is_some()))
        }
        Command::Selfcheck { size, seed } => {
            let report = selfcheck(*size, *seed)?;
            let mut result = to_value(&report);
            result["passed"] = json!(report.passed());
            let env = Envelope::new("selfcheck", inputs(&[("size", json!(size)), ("seed", json!(seed))]), result);
            Ok(Outcome { envelope: env, negative: !report.passed(), failed: !report.passed() })
        }
        Command::Fmt { file } => {
            let parsed = read_file(file)?;
            let names: Vec<&str> = parsed.structures.iter().map(|s| s.name.as_str()).collect();
            let result = json!({ "structures": names, "text": parsed.to_string() });
            Ok(Envelope::new("fmt", inputs(&[("file", json!(file))]), result).answer(false))
        }
        Command::Verify { what } => verify(what),
    }
}

fn verify(what: &VerifyArg) -> Result<Outcome, Failure> {
    match what {
        VerifyArg::Strategy { witness, a, b } => {
            let strategy: Strategy = witness_as(witness, "strategy")?;
            let (a, b) = (load(a)?, load(b)?);
            let pts = match strategy.spec.family {
                gckit::games::Family::Bisim { .. } => Some(points(&a, &b)?),
                _ => None,
            };
            let valid = verify_strategy(&a.entry.structure, &b.entry.structure, pts, &strategy)?;
            let ins = inputs(&[("witness", json!(witness.display().to_string())), ("A", json!(a.spec)), ("B", json!(b.spec))]);
            let result = json!({ "valid": valid, "game": strategy.spec, "entries": strategy.entries.len() });
            Ok(Envelope::new("verify strategy", ins, result).answer(!valid))
        }
        VerifyArg::Cover { witness, a } => {
            let listing: CoverListing = witness_as(witness, "cover listing")?;
            let a = load(a)?;
            let s = &a.entry.structure;
            let (order, pebbles) = listing.resolve(s)?;
            let height = order.height();
            let result = match pebbles {
                Some(pebbles) => {
                    let n = pebbles.iter().copied().max().unwrap_or(0);
                    let valid = check_pebble_forest_cover(s, &order, &pebbles, n)?;
                    json!({ "valid": valid, "kind": "pebble", "pebbles": n, "width": n.saturating_sub(1), "height": height })
                }
                None => json!({ "valid": check_forest_cover(s, &order)?, "kind": "forest", "depth": height }),
            };
            let valid = result["valid"] == json!(true);
            let ins = inputs(&[("witness", json!(witness.display().to_string())), ("A", json!(a.spec))]);
            Ok(Envelope::new("verify cover", ins, result).answer(!valid))
        }
        VerifyArg::Sentence { sentence, modal, a, b } => {
            let parsed = if *modal { Sentence::Modal(parse_modal(sentence)?) } else { Sentence::First(parse_formula(sentence)?) };
            let (a, b) = (load(a)?, load(b)?);
            let in_a = parsed.holds(&a.entry.structure, a.entry.point)?;
            let in_b = parsed.holds(&b.entry.structure, b.entry.point)?;
            let valid = in_a && !in_b;
            let ins = inputs(&[("sentence", json!(sentence)), ("A", json!(a.spec)), ("B", json!(b.spec))]);
            let result = json!({ "valid": valid, "holds_in_a": in_a, "holds_in_b": in_b });
            Ok(Envelope::new("verify sentence", ins, result).answer(!valid))
        }
    }
}
