use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Q;

/// An interval in (0, ∞) with independent endpoint openness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lower: Q,
    upper: Q,
    lower_open: bool,
    upper_open: bool,
}

impl Interval {
    pub fn new(lower: Q, upper: Q, lower_open: bool, upper_open: bool) -> Result<Self> {
        if lower <= Q::zero() {
            return Err(Error::InvalidInterval("lower endpoint must be positive".into()));
        }
        if lower > upper || (lower == upper && (lower_open || upper_open)) {
            return Err(Error::InvalidInterval("empty interval".into()));
        }
        Ok(Interval { lower, upper, lower_open, upper_open })
    }

    pub fn open(lower: Q, upper: Q) -> Result<Self> {
        Self::new(lower, upper, true, true)
    }

    pub fn closed(lower: Q, upper: Q) -> Result<Self> {
        Self::new(lower, upper, false, false)
    }

    /// (1/r, r) for r > 1.
    pub fn symmetric(r: Q) -> Result<Self> {
        if r <= Q::one() {
            return Err(Error::InvalidInterval("symmetric radius must exceed 1".into()));
        }
        Self::open(r.recip(), r)
    }

    /// The default lacunarity neighbourhood (1/2, 2).
    pub fn default_neighbourhood() -> Self {
        Self::symmetric(Q::from_integer(2.into())).expect("valid")
    }

    pub fn lower(&self) -> &Q {
        &self.lower
    }

    pub fn upper(&self) -> &Q {
        &self.upper
    }

    pub fn is_compact(&self) -> bool {
        !self.lower_open && !self.upper_open
    }

    pub fn contains(&self, v: &Q) -> bool {
        let above = if self.lower_open { *v > self.lower } else { *v >= self.lower };
        let below = if self.upper_open { *v < self.upper } else { *v <= self.upper };
        above && below
    }

    pub fn contains_one(&self) -> bool {
        self.contains(&Q::one())
    }

    /// True when 1/U = U.
    pub fn is_symmetric(&self) -> bool {
        self.lower == self.upper.recip() && self.lower_open == self.upper_open
    }
}
