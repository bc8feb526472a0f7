//! Plain-text structure files and name-keyed listings of forest covers.
//!
//! ```text
//! # two small digraphs
//! signature E/2 P/1
//!
//! structure A
//! elems a b
//! rel E a b
//! rel P a
//! point a
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coalgebras::ForestOrder;
use crate::error::{Error, Result};
use crate::structures::{Elem, PointedStructure, Signature, Structure};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedStructure {
    pub name: String,
    pub structure: Structure,
    pub point: Option<Elem>,
}

impl NamedStructure {
    pub fn pointed(&self) -> Result<PointedStructure> {
        PointedStructure::new(self.structure.clone(), self.point.ok_or(Error::NotPointed)?)
    }
}

/// A signature and the structures declared over it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureFile {
    pub signature: Signature,
    pub structures: Vec<NamedStructure>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

impl StructureFile {
    pub fn single(name: &str, structure: Structure, point: Option<Elem>) -> Self {
        StructureFile {
            signature: structure.signature().clone(),
            structures: vec![NamedStructure { name: name.to_string(), structure, point }],
        }
    }

    pub fn get(&self, name: &str) -> Option<&NamedStructure> {
        self.structures.iter().find(|s| s.name == name)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut signature: Option<Signature> = None;
        let mut structures: Vec<NamedStructure> = Vec::new();
        let mut names = HashSet::new();
        // Whether the current block has listed its elements yet.
        let mut elems_seen = false;
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            let mut words = content.split_whitespace();
            let Some(keyword) = words.next() else { continue };
            let args: Vec<&str> = words.collect();
            match keyword {
                "signature" => {
                    if signature.is_some() {
                        return Err(parse_error(line, "second `signature` line"));
                    }
                    signature = Some(Signature::parse(&args.join(" ")).map_err(|e| parse_error(line, e.to_string()))?);
                }
                "structure" => {
                    let sig = signature.as_ref().ok_or_else(|| parse_error(line, "`structure` before `signature`"))?;
                    let [name] = args[..] else {
                        return Err(parse_error(line, "`structure` takes exactly one name"));
                    };
                    if !names.insert(name.to_string()) {
                        return Err(parse_error(line, format!("structure `{name}` declared twice")));
                    }
                    structures.push(NamedStructure { name: name.to_string(), structure: Structure::empty(sig.clone()), point: None });
                    elems_seen = false;
                }
                "elems" | "rel" | "point" => {
                    let current = structures.last_mut().ok_or_else(|| parse_error(line, format!("`{keyword}` outside a structure block")))?;
                    match keyword {
                        "elems" => {
                            if elems_seen {
                                return Err(parse_error(line, "second `elems` line in one structure"));
                            }
                            elems_seen = true;
                            for name in &args {
                                if current.structure.element(name).is_some() {
                                    return Err(parse_error(line, format!("duplicate element `{name}`")));
                                }
                                current.structure.add_element(*name).map_err(|e| parse_error(line, e.to_string()))?;
                            }
                        }
                        "rel" => {
                            if !elems_seen {
                                return Err(parse_error(line, "`rel` before `elems`"));
                            }
                            let (symbol, tuple) = args.split_first().ok_or_else(|| parse_error(line, "`rel` needs a symbol"))?;
                            current.structure.insert_named(symbol, tuple).map_err(|e| parse_error(line, e.to_string()))?;
                        }
                        _ => {
                            if current.point.is_some() {
                                return Err(parse_error(line, "second `point` line in one structure"));
                            }
                            let [name] = args[..] else {
                                return Err(parse_error(line, "`point` takes exactly one element"));
                            };
                            let e = current.structure.element(name).ok_or_else(|| parse_error(line, format!("unknown element `{name}`")))?;
                            if !current.structure.signature().is_modal() {
                                return Err(parse_error(line, Error::NotModal.to_string()));
                            }
                            current.point = Some(e);
                        }
                    }
                }
                other => return Err(parse_error(line, format!("unknown keyword `{other}`"))),
            }
        }
        let signature = signature.ok_or_else(|| parse_error(1, "missing `signature` line"))?;
        if structures.is_empty() {
            return Err(parse_error(text.lines().count().max(1), "no `structure` block"));
        }
        Ok(StructureFile { signature, structures })
    }
}

impl fmt::Display for StructureFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "signature {}", self.signature)?;
        for entry in &self.structures {
            let a = &entry.structure;
            writeln!(f)?;
            writeln!(f, "structure {}", entry.name)?;
            write!(f, "elems")?;
            for e in a.elements() {
                write!(f, " {e}")?;
            }
            writeln!(f)?;
            for (r, tuple) in a.tuples() {
                write!(f, "rel {}", a.signature().name(r))?;
                for &e in tuple {
                    write!(f, " {}", a.element_name(e))?;
                }
                writeln!(f)?;
            }
            if let Some(p) = entry.point {
                writeln!(f, "point {}", a.element_name(p))?;
            }
        }
        Ok(())
    }
}

/// A forest order, with optional pebble labels, keyed by element names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverListing {
    pub parent: BTreeMap<String, Option<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pebbles: Option<BTreeMap<String, usize>>,
}

impl CoverListing {
    pub fn new(a: &Structure, order: &ForestOrder, pebbles: Option<&[usize]>) -> Self {
        let parent = (0..a.size())
            .map(|x| (a.element_name(x).to_string(), order.parent(x).map(|p| a.element_name(p).to_string())))
            .collect();
        let pebbles = pebbles.map(|p| (0..a.size()).map(|x| (a.element_name(x).to_string(), p[x])).collect());
        CoverListing { parent, pebbles }
    }

    /// Resolves names against `a`; every element must be listed.
    pub fn resolve(&self, a: &Structure) -> Result<(ForestOrder, Option<Vec<usize>>)> {
        let lookup = |name: &str| a.element(name).ok_or_else(|| Error::Invalid(format!("cover mentions unknown element `{name}`")));
        if self.parent.len() != a.size() {
            return Err(Error::NotTotal { expected: a.size(), found: self.parent.len() });
        }
        let mut parent = vec![None; a.size()];
        for (child, p) in &self.parent {
            parent[lookup(child)?] = p.as_deref().map(lookup).transpose()?;
        }
        let pebbles = match &self.pebbles {
            None => None,
            Some(map) => {
                if map.len() != a.size() {
                    return Err(Error::NotTotal { expected: a.size(), found: map.len() });
                }
                let mut out = vec![0; a.size()];
                for (name, &p) in map {
                    out[lookup(name)?] = p;
                }
                Some(out)
            }
        };
        Ok((ForestOrder::new(parent), pebbles))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalgebras::{check_forest_cover, tree_depth};
    use crate::structures::catalog::*;
    use crate::structures::enumerate_structures;

    #[test]
    fn parses_a_digraph() {
        let f = StructureFile::parse("signature E/2\nstructure A\nelems a b\nrel E a b\n").unwrap();
        let a = &f.structures[0].structure;
        assert_eq!(a.size(), 2);
        assert!(a.holds(0, &[0, 1]));
        assert_eq!(f.to_string(), "signature E/2\n\nstructure A\nelems a b\nrel E a b\n");
    }

    #[test]
    fn diagnostics_name_the_line() {
        let cases = [
            ("signature E/2\nstructure A\nelems a a\n", 3),
            ("signature E/2\nstructure A\nelems a b\nrel E a c\n", 4),
            ("signature E/3\nstructure A\nelems a\npoint a\n", 4),
            ("signature E/2\n\nstructure A\nrel E a b\n", 4),
            ("structure A\n", 1),
            ("signature E/2\nstructure A\nelems a\nfrobnicate\n", 4),
        ];
        for (text, line) in cases {
            match StructureFile::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn comments_points_and_several_blocks() {
        let text = "# header\nsignature E/2 P/1 # graphs with a colour\nstructure A\nelems a b\nrel E a b\nrel P b\npoint a\n\nstructure B\nelems\n";
        let f = StructureFile::parse(text).unwrap();
        assert_eq!(f.structures.len(), 2);
        assert_eq!(f.get("A").unwrap().point, Some(0));
        assert_eq!(f.get("B").unwrap().structure.size(), 0);
        assert_eq!(StructureFile::parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn round_trip_over_enumerated_structures() {
        let sig = Signature::parse("E/2 P/1").unwrap();
        for (i, a) in enumerate_structures(&sig, 2).unwrap().into_iter().enumerate() {
            let f = StructureFile::single(&format!("S{i}"), a, Some(0));
            let printed = f.to_string();
            let back = StructureFile::parse(&printed).unwrap();
            assert_eq!(back, f);
            assert_eq!(back.to_string(), printed);
        }
    }

    #[test]
    fn cover_listing_round_trip() {
        let a = path(4);
        let (_, order) = tree_depth(&a).unwrap();
        let listing = CoverListing::new(&a, &order, None);
        let (back, pebbles) = listing.resolve(&a).unwrap();
        assert_eq!(back, order);
        assert!(pebbles.is_none() && check_forest_cover(&a, &back).unwrap());
        let mut broken = listing.clone();
        broken.parent.remove("a");
        assert!(broken.resolve(&a).is_err());
    }
}
