use thiserror::Error;

/// A single broken invariant found by [`crate::structures::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateElement(String),
    UnknownSymbol(String),
    ArityMismatch { symbol: String, expected: usize, tuple: Vec<String> },
    UnknownElement { symbol: String, tuple: Vec<String>, element: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DuplicateElement(e) => write!(f, "duplicate element `{e}`"),
            Violation::UnknownSymbol(s) => write!(f, "symbol `{s}` is not in the signature"),
            Violation::ArityMismatch { symbol, expected, tuple } => write!(
                f,
                "tuple ({}) under `{symbol}` has length {}, expected {expected}",
                tuple.join(","),
                tuple.len()
            ),
            Violation::UnknownElement { symbol, tuple, element } => write!(
                f,
                "tuple ({}) under `{symbol}` mentions unknown element `{element}`",
                tuple.join(",")
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid structure: {}", join(.0))]
    InvalidStructure(Vec<Violation>),
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("signature mismatch")]
    SignatureMismatch,
    #[error("map has {found} entries but the domain has {expected} elements")]
    NotTotal { expected: usize, found: usize },
    #[error("element index {index} out of range for a universe of size {size}")]
    ElementOutOfRange { index: usize, size: usize },
    #[error("the symbol `I` is reserved for the equality expansion")]
    ReservedEquality,
    #[error("the signature has no equality symbol `I`")]
    MissingEquality,
    #[error("signature is not modal (arities must be 1 or 2)")]
    NotModal,
    #[error("a pointed structure is required")]
    NotPointed,
    #[error("resource guard `{guard}` exceeded: {detail}")]
    Guard { guard: &'static str, detail: String },
    #[error("not a homomorphism")]
    NotHomomorphism,
    #[error("not a valid coalgebra morphism: {0}")]
    NotMorphism(String),
    #[error("{0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unassigned free variable x{0}")]
    UnassignedVariable(u32),
    #[error("oracle budget exhausted: {0}")]
    Truncated(String),
    #[error("internal check failed: {0}")]
    Internal(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn guard(guard: &'static str, detail: impl Into<String>) -> Error {
    Error::Guard { guard, detail: detail.into() }
}
