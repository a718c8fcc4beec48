//! Ordinals below ω², written `ω·a + b`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ordinal `ω·omega_coeff + finite_part`.
///
/// Field order gives the derived `Ord` the lexicographic comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SmallOrdinal {
    pub omega_coeff: u64,
    pub finite_part: u64,
}

impl SmallOrdinal {
    pub const ZERO: SmallOrdinal = SmallOrdinal::new(0, 0);
    pub const ONE: SmallOrdinal = SmallOrdinal::new(0, 1);
    pub const OMEGA: SmallOrdinal = SmallOrdinal::new(1, 0);

    pub const fn new(omega_coeff: u64, finite_part: u64) -> Self {
        SmallOrdinal {
            omega_coeff,
            finite_part,
        }
    }

    pub const fn finite(n: u64) -> Self {
        SmallOrdinal::new(0, n)
    }

    pub fn compare(&self, other: &SmallOrdinal) -> Ordering {
        self.cmp(other)
    }

    pub fn succ(self) -> SmallOrdinal {
        SmallOrdinal::new(self.omega_coeff, self.finite_part + 1)
    }

    pub fn is_limit(self) -> bool {
        self.finite_part == 0 && self.omega_coeff > 0
    }

    pub fn is_successor(self) -> bool {
        self.finite_part > 0
    }

    pub fn is_zero(self) -> bool {
        self == SmallOrdinal::ZERO
    }

    pub fn is_finite(self) -> bool {
        self.omega_coeff == 0
    }

    /// The predecessor of a successor ordinal.
    pub fn pred(self) -> Option<SmallOrdinal> {
        self.is_successor()
            .then(|| SmallOrdinal::new(self.omega_coeff, self.finite_part - 1))
    }

    /// The largest limit ordinal not above `self` (zero for finite ordinals).
    pub fn limit_part(self) -> SmallOrdinal {
        SmallOrdinal::new(self.omega_coeff, 0)
    }

    /// `n`-th term of the standard fundamental sequence `ω·(a−1) + n` of a limit.
    pub fn fund_seq(self, n: u64) -> Result<SmallOrdinal> {
        if !self.is_limit() {
            return Err(Error::NotALimit(self));
        }
        Ok(SmallOrdinal::new(self.omega_coeff - 1, n))
    }

    pub fn plus(self, n: u64) -> SmallOrdinal {
        SmallOrdinal::new(self.omega_coeff, self.finite_part + n)
    }

    /// Value as a natural number, for finite ordinals.
    pub fn as_finite(self) -> Option<u64> {
        self.is_finite().then_some(self.finite_part)
    }
}

impl From<u64> for SmallOrdinal {
    fn from(n: u64) -> Self {
        SmallOrdinal::finite(n)
    }
}

impl fmt::Display for SmallOrdinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w*{}+{}", self.omega_coeff, self.finite_part)
    }
}

impl FromStr for SmallOrdinal {
    type Err = Error;

    /// Accepts the canonical `w*B+C` and the shorthands `C`, `w`, `w+C`, `w*B`.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        // byte offset of a suffix of `s`
        let at = |t: &str| s.len() - t.len();
        let bad = |t: &str| Error::SyntaxError {
            position: at(t),
            message: format!("bad ordinal {s:?}, expected w*B+C"),
        };
        let num = |t: &str| t.parse::<u64>().map_err(|_| bad(t));
        if s.is_empty() {
            return Err(bad(&s));
        }
        let Some(rest) = s.strip_prefix('w').or_else(|| s.strip_prefix('ω')) else {
            return Ok(SmallOrdinal::finite(num(&s)?));
        };
        let (coeff, rest) = match rest.strip_prefix('*') {
            Some(r) => {
                let end = r.find('+').unwrap_or(r.len());
                (num(&r[..end]).map_err(|_| bad(r))?, &r[end..])
            }
            None => (1, rest),
        };
        let finite = match rest {
            "" => 0,
            r => num(r.strip_prefix('+').ok_or_else(|| bad(r))?)?,
        };
        Ok(SmallOrdinal::new(coeff, finite))
    }
}
