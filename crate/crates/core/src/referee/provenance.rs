//! The strategy's own account of what each output row converges to.

use std::fmt;
use std::str::FromStr;

use crate::tables::FiniteFun;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    /// Copy of (Bob's view of) A-row `i`.
    Mirror(u64),
    /// The total constant function `m`.
    Constant(u64),
    /// A committed odd function; the row receives no further writes.
    Odd(FiniteFun),
    /// Member `idx` of class ℬ.
    Beta(u64),
    /// A copy of an odd A-row, released for good.
    Released(FiniteFun),
    /// No claim (for example an invalidated row).
    Pending,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowProvenance {
    pub table: usize,
    pub row: u64,
    pub kind: Provenance,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Mirror(i) => write!(f, "mirror {i}"),
            Provenance::Constant(m) => write!(f, "const {m}"),
            Provenance::Odd(g) => write!(f, "odd {g}"),
            Provenance::Beta(idx) => write!(f, "beta {idx}"),
            Provenance::Released(g) => write!(f, "released {g}"),
            Provenance::Pending => write!(f, "pending"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(' ').unwrap_or((s, ""));
        let num = || rest.parse::<u64>().map_err(|_| format!("bad provenance `{s}`"));
        let fun = || rest.parse::<FiniteFun>().map_err(|e| e.to_string());
        match kind {
            "mirror" => num().map(Provenance::Mirror),
            "const" => num().map(Provenance::Constant),
            "odd" => fun().map(Provenance::Odd),
            "beta" => num().map(Provenance::Beta),
            "released" => fun().map(Provenance::Released),
            "pending" if rest.is_empty() => Ok(Provenance::Pending),
            _ => Err(format!("bad provenance `{s}`")),
        }
    }
}
