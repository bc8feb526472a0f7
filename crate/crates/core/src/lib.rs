//! Game comonads over finite relational structures.

pub mod error;
pub mod format;
pub mod games;
pub mod logic;
pub mod selfcheck;
pub mod coalgebras;
pub mod comonads;
pub mod counting;
pub mod structures;

pub use error::{Error, Result};
