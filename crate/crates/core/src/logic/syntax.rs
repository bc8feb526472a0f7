//! S-expression syntax shared by the parser and the `Display` impls.
//!
//! ```text
//! (exists x1 (and (R x1 x2) (not (= x1 x2))))
//! (exists>= 2 x1 (P x1))
//! (dia alpha (box alpha p))
//! (dia>= 2 alpha p)
//! ```

use std::fmt;

use super::{Formula, ModalFormula, Var};
use crate::error::{Error, Result};

fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, head: &str, items: &[T]) -> fmt::Result {
    write!(f, "({head}")?;
    for item in items {
        write!(f, " {item}")?;
    }
    write!(f, ")")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(r, args) => {
                write!(f, "({r}")?;
                for v in args {
                    write!(f, " x{v}")?;
                }
                write!(f, ")")
            }
            Formula::Eq(x, y) => write!(f, "(= x{x} x{y})"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(gs) => join(f, "and", gs),
            Formula::Or(gs) => join(f, "or", gs),
            Formula::Implies(a, b) => write!(f, "(implies {a} {b})"),
            Formula::Exists(v, g) => write!(f, "(exists x{v} {g})"),
            Formula::Forall(v, g) => write!(f, "(forall x{v} {g})"),
            Formula::CountGe(c, v, g) => write!(f, "(exists>= {c} x{v} {g})"),
        }
    }
}

impl fmt::Display for ModalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModalFormula::True => write!(f, "true"),
            ModalFormula::False => write!(f, "false"),
            ModalFormula::Prop(p) => write!(f, "{p}"),
            ModalFormula::Not(g) => write!(f, "(not {g})"),
            ModalFormula::And(gs) => join(f, "and", gs),
            ModalFormula::Or(gs) => join(f, "or", gs),
            ModalFormula::Box(r, g) => write!(f, "(box {r} {g})"),
            ModalFormula::Dia(r, g) => write!(f, "(dia {r} {g})"),
            ModalFormula::DiaGe(c, r, g) => write!(f, "(dia>= {c} {r} {g})"),
        }
    }
}

#[derive(Debug)]
enum Sexp {
    Word(String),
    List(Vec<Sexp>),
}

const KEYWORDS: [&str; 14] =
    ["true", "false", "not", "and", "or", "implies", "exists", "forall", "exists>=", "=", "box", "dia", "dia>=", "x"];

fn syntax(msg: impl Into<String>) -> Error {
    Error::Invalid(format!("formula syntax: {}", msg.into()))
}

fn read(text: &str) -> Result<Sexp> {
    let spaced = text.replace('(', " ( ").replace(')', " ) ");
    let tokens: Vec<&str> = spaced.split_whitespace().collect();
    let mut at = 0;
    let expr = read_one(&tokens, &mut at)?;
    if let Some(extra) = tokens.get(at) {
        return Err(syntax(format!("unexpected `{extra}` after the formula")));
    }
    Ok(expr)
}

fn read_one(tokens: &[&str], at: &mut usize) -> Result<Sexp> {
    let token = *tokens.get(*at).ok_or_else(|| syntax("unexpected end of input"))?;
    *at += 1;
    match token {
        ")" => Err(syntax("unbalanced `)`")),
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*at) {
                    None => return Err(syntax("missing `)`")),
                    Some(&")") => {
                        *at += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(read_one(tokens, at)?),
                }
            }
        }
        word => Ok(Sexp::Word(word.to_string())),
    }
}

fn variable(s: &Sexp) -> Result<Var> {
    match s {
        Sexp::Word(w) => w
            .strip_prefix('x')
            .and_then(|d| d.parse::<Var>().ok())
            .filter(|&v| v >= 1)
            .ok_or_else(|| syntax(format!("expected a variable x1, x2, …, found `{w}`"))),
        Sexp::List(_) => Err(syntax("expected a variable, found a list")),
    }
}

fn count(s: &Sexp) -> Result<usize> {
    match s {
        Sexp::Word(w) => w.parse().ok().filter(|&c| c >= 1).ok_or_else(|| syntax(format!("expected a positive count, found `{w}`"))),
        Sexp::List(_) => Err(syntax("expected a count, found a list")),
    }
}

fn symbol(s: &Sexp) -> Result<String> {
    match s {
        Sexp::Word(w) if !KEYWORDS.contains(&w.as_str()) && variable(s).is_err() => Ok(w.clone()),
        Sexp::Word(w) => Err(syntax(format!("`{w}` is reserved"))),
        Sexp::List(_) => Err(syntax("expected a symbol, found a list")),
    }
}

fn arity(head: &str, items: &[Sexp], n: usize) -> Result<()> {
    if items.len() != n {
        return Err(syntax(format!("`{head}` takes {n} arguments, found {}", items.len())));
    }
    Ok(())
}

pub fn parse_formula(text: &str) -> Result<Formula> {
    first_order(&read(text)?)
}

fn first_order(s: &Sexp) -> Result<Formula> {
    let items = match s {
        Sexp::Word(w) if w == "true" => return Ok(Formula::True),
        Sexp::Word(w) if w == "false" => return Ok(Formula::False),
        Sexp::Word(w) => return Err(syntax(format!("unexpected `{w}`"))),
        Sexp::List(items) => items,
    };
    let (head, rest) = match items.split_first() {
        Some((Sexp::Word(h), rest)) => (h.as_str(), rest),
        _ => return Err(syntax("a list must start with an operator or relation symbol")),
    };
    let sub = |i: usize| first_order(&rest[i]).map(Box::new);
    Ok(match head {
        "not" => {
            arity(head, rest, 1)?;
            Formula::Not(sub(0)?)
        }
        "and" => Formula::And(rest.iter().map(first_order).collect::<Result<_>>()?),
        "or" => Formula::Or(rest.iter().map(first_order).collect::<Result<_>>()?),
        "implies" => {
            arity(head, rest, 2)?;
            Formula::Implies(sub(0)?, sub(1)?)
        }
        "=" => {
            arity(head, rest, 2)?;
            Formula::Eq(variable(&rest[0])?, variable(&rest[1])?)
        }
        "exists" | "forall" => {
            arity(head, rest, 2)?;
            let v = variable(&rest[0])?;
            if head == "exists" {
                Formula::Exists(v, sub(1)?)
            } else {
                Formula::Forall(v, sub(1)?)
            }
        }
        "exists>=" => {
            arity(head, rest, 3)?;
            Formula::CountGe(count(&rest[0])?, variable(&rest[1])?, sub(2)?)
        }
        _ => {
            let name = symbol(&items[0])?;
            if rest.is_empty() {
                return Err(syntax(format!("relation `{name}` needs arguments")));
            }
            Formula::Atom(name, rest.iter().map(variable).collect::<Result<_>>()?)
        }
    })
}

pub fn parse_modal(text: &str) -> Result<ModalFormula> {
    modal(&read(text)?)
}

fn modal(s: &Sexp) -> Result<ModalFormula> {
    let items = match s {
        Sexp::Word(w) if w == "true" => return Ok(ModalFormula::True),
        Sexp::Word(w) if w == "false" => return Ok(ModalFormula::False),
        Sexp::Word(_) => return Ok(ModalFormula::Prop(symbol(s)?)),
        Sexp::List(items) => items,
    };
    let (head, rest) = match items.split_first() {
        Some((Sexp::Word(h), rest)) => (h.as_str(), rest),
        _ => return Err(syntax("a list must start with an operator")),
    };
    let sub = |i: usize| modal(&rest[i]).map(Box::new);
    Ok(match head {
        "not" => {
            arity(head, rest, 1)?;
            ModalFormula::Not(sub(0)?)
        }
        "and" => ModalFormula::And(rest.iter().map(modal).collect::<Result<_>>()?),
        "or" => ModalFormula::Or(rest.iter().map(modal).collect::<Result<_>>()?),
        "box" | "dia" => {
            arity(head, rest, 2)?;
            let r = symbol(&rest[0])?;
            if head == "box" {
                ModalFormula::Box(r, sub(1)?)
            } else {
                ModalFormula::Dia(r, sub(1)?)
            }
        }
        "dia>=" => {
            arity(head, rest, 3)?;
            ModalFormula::DiaGe(count(&rest[0])?, symbol(&rest[1])?, sub(2)?)
        }
        other => return Err(syntax(format!("unknown modal operator `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_examples() {
        let phi = parse_formula("(exists x1 (and (R x1 x2) (not (= x1 x2))))").unwrap();
        assert_eq!(
            phi,
            Formula::exists(1, Formula::And(vec![Formula::atom("R", &[1, 2]), Formula::not(Formula::Eq(1, 2))]))
        );
        assert_eq!(parse_modal("(dia alpha (box alpha p))").unwrap(), ModalFormula::dia("alpha", ModalFormula::boxed("alpha", ModalFormula::prop("p"))));
        assert_eq!(parse_modal("(dia>= 2 alpha p)").unwrap().to_string(), "(dia>= 2 alpha p)");
        assert_eq!(parse_formula("(and)").unwrap(), Formula::And(vec![]));
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["", "(", ")", "(exists y (R y))", "(R)", "(not a b)", "(exists>= 0 x1 true)", "true true", "(P x0)", "x1"] {
            assert!(parse_formula(bad).is_err(), "{bad:?}");
        }
        for bad in ["(dia p)", "(box and p)", "(frob p)", "x1"] {
            assert!(parse_modal(bad).is_err(), "{bad:?}");
        }
    }

    fn formula() -> impl Strategy<Value = Formula> {
        let var = 1u32..5;
        let leaf = prop_oneof![
            Just(Formula::True),
            Just(Formula::False),
            (prop::sample::select(vec!["E", "R"]), var.clone(), var.clone()).prop_map(|(n, x, y)| Formula::atom(n, &[x, y])),
            var.clone().prop_map(|x| Formula::atom("P", &[x])),
            (var.clone(), var.clone()).prop_map(|(x, y)| Formula::Eq(x, y)),
        ];
        leaf.prop_recursive(4, 32, 3, move |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::And),
                prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::Or),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                (1u32..5, inner.clone()).prop_map(|(v, f)| Formula::exists(v, f)),
                (1u32..5, inner.clone()).prop_map(|(v, f)| Formula::forall(v, f)),
                (1usize..4, 1u32..5, inner).prop_map(|(c, v, f)| Formula::CountGe(c, v, Box::new(f))),
            ]
        })
    }

    fn modal_formula() -> impl Strategy<Value = ModalFormula> {
        let leaf = prop_oneof![
            Just(ModalFormula::True),
            Just(ModalFormula::False),
            prop::sample::select(vec!["p", "q"]).prop_map(ModalFormula::prop),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            let rel = prop::sample::select(vec!["alpha", "beta"]);
            prop_oneof![
                inner.clone().prop_map(ModalFormula::not),
                prop::collection::vec(inner.clone(), 0..3).prop_map(ModalFormula::And),
                prop::collection::vec(inner.clone(), 0..3).prop_map(ModalFormula::Or),
                (rel.clone(), inner.clone()).prop_map(|(r, f)| ModalFormula::dia(r, f)),
                (rel.clone(), inner.clone()).prop_map(|(r, f)| ModalFormula::boxed(r, f)),
                (1usize..4, rel, inner).prop_map(|(c, r, f)| ModalFormula::DiaGe(c, r.to_string(), Box::new(f))),
            ]
        })
    }

    proptest! {
        #[test]
        fn first_order_round_trip(phi in formula()) {
            prop_assert_eq!(parse_formula(&phi.to_string()).unwrap(), phi);
        }

        #[test]
        fn modal_round_trip(phi in modal_formula()) {
            prop_assert_eq!(parse_modal(&phi.to_string()).unwrap(), phi);
        }

        #[test]
        fn nnf_preserves_truth_and_rank(phi in formula()) {
            use crate::structures::{enumerate_structures, Signature};
            use super::super::{eval, metrics, nnf, Assignment};
            let sig = Signature::parse("E/2 R/2 P/1").unwrap();
            let normal = nnf(&phi);
            prop_assert_eq!(metrics(&normal).quantifier_rank, metrics(&phi).quantifier_rank);
            let corpus = enumerate_structures(&sig, 2).unwrap();
            let full: Assignment = (1..5).map(|v| (v, 0)).collect();
            for a in corpus.iter().filter(|a| a.size() > 0).step_by(7) {
                prop_assert_eq!(eval(a, &full, &phi).unwrap(), eval(a, &full, &normal).unwrap());
            }
        }
    }
}
