//! Loading `path[:name]` arguments.

use std::fs;

use gckit::format::{NamedStructure, StructureFile};
use gckit::Error;

use crate::Failure;

/// A structure argument together with the text it was named by.
pub struct Input {
    pub spec: String,
    pub entry: NamedStructure,
}

fn split_spec(spec: &str) -> (&str, Option<&str>) {
    match spec.rsplit_once(':') {
        Some((path, name)) if !path.is_empty() && !name.is_empty() && !name.contains('/') => (path, Some(name)),
        _ => (spec, None),
    }
}

pub fn read_file(path: &str) -> Result<StructureFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{path}: {e}")))?;
    StructureFile::parse(&text).map_err(|e| Failure::Input(format!("{path}: {e}")))
}

/// Loads `path` or `path:name`; a bare path must hold exactly one structure.
pub fn load(spec: &str) -> Result<Input, Failure> {
    let (path, name) = split_spec(spec);
    // A path that itself contains a colon still loads when no such name exists.
    let (file, name) = match (name, fs::metadata(spec).is_ok()) {
        (Some(_), true) => (read_file(spec)?, None),
        _ => (read_file(path)?, name),
    };
    let entry = match name {
        Some(name) => file.get(name).cloned().ok_or_else(|| Failure::Input(format!("{path}: no structure named `{name}`")))?,
        None => match &file.structures[..] {
            [only] => only.clone(),
            many => {
                let names: Vec<&str> = many.iter().map(|s| s.name.as_str()).collect();
                return Err(Failure::Input(format!("{path} holds several structures ({}); pick one with {path}:NAME", names.join(", "))));
            }
        },
    };
    Ok(Input { spec: spec.to_string(), entry })
}

/// Both points, when the command needs pointed structures.
pub fn points(a: &Input, b: &Input) -> Result<(usize, usize), Failure> {
    let point = |i: &Input| i.entry.point.ok_or_else(|| Failure::Input(format!("{}: {} (add a `point` line)", i.spec, Error::NotPointed)));
    Ok((point(a)?, point(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_names_off_paths() {
        assert_eq!(split_spec("a.gcs"), ("a.gcs", None));
        assert_eq!(split_spec("a.gcs:B"), ("a.gcs", Some("B")));
        assert_eq!(split_spec("dir:x/a.gcs"), ("dir:x/a.gcs", None));
        assert_eq!(split_spec("a.gcs:"), ("a.gcs:", None));
    }
}
