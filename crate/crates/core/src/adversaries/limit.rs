//! Declared limits: the intended infinite-stage content of a row.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::tables::FiniteFun;

use super::AdversaryError;

/// A total function `c ↦ base[c mod p] + step·⌊c/p⌋`, kept in canonical
/// (minimal period) form so that structural equality is extensional equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    base: Vec<u64>,
    step: u64,
}

impl Pattern {
    pub fn new(base: Vec<u64>, step: u64) -> Result<Self, AdversaryError> {
        if base.is_empty() {
            return Err(AdversaryError::Parse("pattern needs at least one value".into()));
        }
        Ok(Self::canonical(base, step))
    }

    pub fn constant(m: u64) -> Self {
        Pattern {
            base: vec![m],
            step: 0,
        }
    }

    pub fn identity() -> Self {
        Pattern {
            base: vec![0],
            step: 1,
        }
    }

    fn canonical(base: Vec<u64>, step: u64) -> Self {
        let p = base.len();
        let raw = Pattern {
            base: base.clone(),
            step,
        };
        for q in (1..p).filter(|q| p.is_multiple_of(*q)) {
            let cand_base: Vec<u64> = (0..q as u64).map(|c| raw.value(c)).collect();
            let cand_step = match raw.value(q as u64).checked_sub(raw.value(0)) {
                Some(s) => s,
                None => continue,
            };
            let cand = Pattern {
                base: cand_base,
                step: cand_step,
            };
            if (0..=2 * p as u64).all(|c| cand.value(c) == raw.value(c)) {
                return cand;
            }
        }
        raw
    }

    pub fn value(&self, col: u64) -> u64 {
        let p = self.base.len() as u64;
        self.base[(col % p) as usize] + self.step * (col / p)
    }

    pub fn period(&self) -> u64 {
        self.base.len() as u64
    }

    pub fn as_constant(&self) -> Option<u64> {
        (self.base.len() == 1 && self.step == 0).then(|| self.base[0])
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.base.iter().map(u64::to_string).collect();
        f.write_str(&vals.join(","))?;
        if self.step != 0 {
            write!(f, "+{}", self.step)?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AdversaryError::Parse(format!("bad pattern `{s}`"));
        let (vals, step) = match s.split_once('+') {
            Some((v, st)) => (v, st.trim().parse::<u64>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let base = vals
            .split(',')
            .map(|v| v.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        Pattern::new(base, step)
    }
}

/// What a row converges to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LimitDecl {
    Finite(FiniteFun),
    Total(Pattern),
    Undeclared,
}

impl LimitDecl {
    pub fn constant(m: u64) -> Self {
        LimitDecl::Total(Pattern::constant(m))
    }

    pub fn empty() -> Self {
        LimitDecl::Finite(FiniteFun::new())
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, LimitDecl::Undeclared)
    }

    pub fn is_total(&self) -> bool {
        matches!(self, LimitDecl::Total(_))
    }

    pub fn as_constant(&self) -> Option<u64> {
        match self {
            LimitDecl::Total(p) => p.as_constant(),
            _ => None,
        }
    }

    pub fn value_at(&self, col: u64) -> Option<u64> {
        match self {
            LimitDecl::Finite(g) => g.get(col),
            LimitDecl::Total(p) => Some(p.value(col)),
            LimitDecl::Undeclared => None,
        }
    }

    /// Least column where two known limits differ; `None` when they are equal
    /// or either side is undeclared.
    pub fn first_difference(&self, other: &LimitDecl) -> Option<u64> {
        use LimitDecl::*;
        match (self, other) {
            (Undeclared, _) | (_, Undeclared) => None,
            (Finite(a), Finite(b)) => {
                let bound = a.max_key().max(b.max_key())?;
                (0..=bound).find(|&c| a.get(c) != b.get(c))
            }
            (Finite(g), Total(p)) | (Total(p), Finite(g)) => {
                let bound = g.max_key().map_or(0, |m| m + 1);
                (0..=bound).find(|&c| g.get(c) != Some(p.value(c)))
            }
            (Total(p), Total(q)) => {
                let l = lcm(p.period(), q.period());
                (0..=l).find(|&c| p.value(c) != q.value(c))
            }
        }
    }

    /// Is every concrete cell consistent with this limit?
    /// Returns the first offending column.
    pub fn first_inconsistent_cell(&self, cells: &BTreeMap<u64, u64>) -> Option<u64> {
        match self {
            LimitDecl::Undeclared => None,
            _ => cells
                .iter()
                .find(|(&c, &v)| self.value_at(c) != Some(v))
                .map(|(&c, _)| c),
        }
    }

    /// Does the concrete row equal the limit exactly (finite limits only)?
    pub fn is_reached_by(&self, cells: Option<&BTreeMap<u64, u64>>) -> bool {
        match self {
            LimitDecl::Finite(g) => match cells {
                Some(row) => row == g.as_map(),
                None => g.is_empty(),
            },
            _ => false,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

impl fmt::Display for LimitDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitDecl::Finite(g) if g.is_empty() => write!(f, "finite"),
            LimitDecl::Finite(g) => write!(f, "finite {g}"),
            LimitDecl::Total(p) => match p.as_constant() {
                Some(m) => write!(f, "const {m}"),
                None => write!(f, "pattern {p}"),
            },
            LimitDecl::Undeclared => write!(f, "undeclared"),
        }
    }
}

impl FromStr for LimitDecl {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (kind, rest) = s.split_once(' ').unwrap_or((s, ""));
        let rest = rest.trim();
        match kind {
            "finite" => rest
                .parse::<FiniteFun>()
                .map(LimitDecl::Finite)
                .map_err(|e| AdversaryError::Parse(e.to_string())),
            "const" => rest
                .parse::<u64>()
                .map(LimitDecl::constant)
                .map_err(|_| AdversaryError::Parse(format!("bad constant `{rest}`"))),
            "pattern" => rest.parse::<Pattern>().map(LimitDecl::Total),
            "undeclared" => Ok(LimitDecl::Undeclared),
            other => Err(AdversaryError::Parse(format!("unknown limit kind `{other}`"))),
        }
    }
}
