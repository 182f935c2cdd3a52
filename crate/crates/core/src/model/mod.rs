//! Point spaces, equivalence partitions, cocycles in potential form, quotients and towers.

mod instance;
mod interval;
mod subrelation;
mod tower;

pub use instance::{
    build_instance, coboundary_check, cocycle_from_edges, point_names, Anchor, Cocycle, Generator, Instance,
    InstanceSpec, Mode, PointId, Skeleton,
};
pub use interval::Interval;
pub use subrelation::{quotient_by, FiniteSubrelation, Quotient};
pub use tower::{check_tiers, Algebra, Link, SetFamily, Tower, TowerParts};

/// Either a single finite instance or a tower of levels.
#[derive(Clone, Copy, Debug)]
pub enum Domain<'a> {
    Instance(&'a Instance),
    Tower(&'a Tower),
}

/// Owned counterpart of [`Domain`].
#[derive(Clone, Debug)]
pub enum Structure {
    Instance(Instance),
    Tower(Tower),
}

impl Structure {
    pub fn domain(&self) -> Domain<'_> {
        match self {
            Structure::Instance(i) => Domain::Instance(i),
            Structure::Tower(t) => Domain::Tower(t),
        }
    }

    pub fn into_tower(self) -> Option<Tower> {
        match self {
            Structure::Tower(t) => Some(t),
            Structure::Instance(_) => None,
        }
    }

    pub fn into_instance(self) -> Option<Instance> {
        match self {
            Structure::Instance(i) => Some(i),
            Structure::Tower(_) => None,
        }
    }

    /// The instance itself, or the top level of a tower.
    pub fn top(&self) -> &Instance {
        match self {
            Structure::Instance(i) => i,
            Structure::Tower(t) => t.top(),
        }
    }
}
