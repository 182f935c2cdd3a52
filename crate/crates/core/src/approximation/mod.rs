//! The greedy maximal-family engine and the three approximation routines.
//!
//! Each routine returns the set it could not handle, together with a lacunary
//! partition of that set, instead of discarding it.

mod balance;
mod density;
mod family;
mod flatten;

pub use balance::{balance, Balance};
pub use density::{density_approximation, DensityApproximation};
pub use family::{
    balance_witness, class_midpoints, maximal_family, nu_integral, CustomTest, Family, FamilySpec, FamilyStatus,
    Member, Predicate, DEFAULT_BUDGET, DEFAULT_CAP,
};
pub use flatten::{flatten, Flatten};

use crate::error::Result;
use crate::lacunarity::lacunary_partition;
use crate::model::{Instance, Interval, PointId};

/// A set set aside by an approximation routine, with its lacunary pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leftover {
    pub points: Vec<PointId>,
    pub pieces: Vec<Vec<PointId>>,
}

impl Leftover {
    pub(crate) fn witness(inst: &Instance, points: Vec<PointId>) -> Result<Self> {
        if points.is_empty() {
            return Ok(Leftover { points, pieces: Vec::new() });
        }
        let (sub, back) = inst.restrict(&points)?;
        let pieces = lacunary_partition(&sub, &Interval::default_neighbourhood())
            .into_iter()
            .map(|p| p.into_iter().map(|x| back[x]).collect())
            .collect();
        Ok(Leftover { points, pieces })
    }
}

/// Union of the classes meeting `set`.
pub(crate) fn class_saturation(inst: &Instance, set: &[bool]) -> Vec<bool> {
    let mut hit = vec![false; inst.num_classes()];
    for (x, &s) in set.iter().enumerate() {
        if s {
            hit[inst.class_of(x)] = true;
        }
    }
    (0..inst.len()).map(|x| hit[inst.class_of(x)]).collect()
}

pub(crate) fn indices(mask: &[bool]) -> Vec<PointId> {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}
