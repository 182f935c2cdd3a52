//! Compressions in plain, over-F and quotient modes: verification, the layered
//! injection on transversal tiers, and lifts between modes.
//!
//! A finite level cannot host a genuine compression, so certificates over tower
//! levels may mark units whose image lies beyond the truncation. Such escapes are
//! admissible only in classes with declared divergence, and the report flags the
//! result as conditional on that declaration.

mod injection;
mod lift;
mod verify;

pub use injection::{layer_boundaries, rank_tiers, strictly_increasing_injection, Injection};
pub use lift::{lift_compression, LiftDirection};
pub use verify::{
    mass_balance, verify_compression, verify_on_tower, verify_tower_compression, CompressionReport, EscapePolicy,
    MassBalance, TowerCompressionReport, Violation,
};

pub(crate) use verify::link_conflicts;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FiniteSubrelation, Instance, PointId};
use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompressionMode {
    #[serde(rename = "plain")]
    Plain,
    #[serde(rename = "over-F")]
    OverF,
    #[serde(rename = "quotient")]
    Quotient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    Injective,
    FiniteToOne(usize),
}

impl Bound {
    pub fn limit(self) -> usize {
        match self {
            Bound::Injective => 1,
            Bound::FiniteToOne(n) => n,
        }
    }

    pub fn from_count(n: usize) -> Self {
        if n <= 1 {
            Bound::Injective
        } else {
            Bound::FiniteToOne(n)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressionCertificate {
    pub mode: CompressionMode,
    pub subrelation: FiniteSubrelation,
    /// Image per point (plain, over-F) or per block (quotient); `None` escapes the truncation.
    pub map: Vec<Option<usize>>,
    pub bound: Bound,
    pub strict_set: Vec<PointId>,
    /// Class indices the certificate speaks about; other classes must be fixed.
    pub scope: Option<Vec<usize>>,
}

impl CompressionCertificate {
    /// Assembles a certificate, computing its strict set.
    pub fn new(
        inst: &Instance,
        mode: CompressionMode,
        subrelation: FiniteSubrelation,
        map: Vec<Option<usize>>,
        bound: Bound,
        scope: Option<Vec<usize>>,
    ) -> Result<Self> {
        let mut cert = CompressionCertificate { mode, subrelation, map, bound, strict_set: Vec::new(), scope };
        cert.check_shape(inst)?;
        cert.strict_set = cert.computed_strict_set(inst);
        Ok(cert)
    }

    /// Plain-mode certificate with identity F.
    pub fn plain(inst: &Instance, map: Vec<Option<PointId>>) -> Result<Self> {
        let counts = preimage_counts(map.len(), &map);
        let bound = Bound::from_count(counts.into_iter().max().unwrap_or(0));
        Self::new(inst, CompressionMode::Plain, FiniteSubrelation::identity(inst.len()), map, bound, None)
    }

    pub fn num_units(&self) -> usize {
        match self.mode {
            CompressionMode::Quotient => self.subrelation.len(),
            _ => self.subrelation.num_points(),
        }
    }

    pub fn unit_points(&self, u: usize) -> Vec<PointId> {
        match self.mode {
            CompressionMode::Quotient => self.subrelation.block(u).to_vec(),
            _ => vec![u],
        }
    }

    pub fn escapes(&self) -> Vec<usize> {
        self.map.iter().enumerate().filter(|(_, m)| m.is_none()).map(|(u, _)| u).collect()
    }

    pub(crate) fn check_shape(&self, inst: &Instance) -> Result<()> {
        if self.subrelation.num_points() != inst.len() {
            return Err(Error::Malformed("certificate subrelation does not match the instance".into()));
        }
        self.subrelation.check_against(inst)?;
        let units = self.num_units();
        if self.map.len() != units {
            return Err(Error::Malformed(format!("map has {} entries, expected {units}", self.map.len())));
        }
        if self.map.iter().flatten().any(|&t| t >= units) {
            return Err(Error::Malformed("map has a dangling target".into()));
        }
        if let Some(scope) = &self.scope {
            if scope.iter().any(|&c| c >= inst.num_classes()) {
                return Err(Error::Malformed("scope names an unknown class".into()));
            }
        }
        if self.strict_set.iter().any(|&x| x >= inst.len()) {
            return Err(Error::Malformed("strict set has a dangling point".into()));
        }
        Ok(())
    }

    /// Fibre ρ-size per target unit: per point in plain mode, per F-block otherwise.
    pub fn fibres(&self, inst: &Instance) -> Vec<Q> {
        match self.mode {
            CompressionMode::Plain => {
                let mut top = vec![Q::zero(); inst.len()];
                for (x, m) in self.map.iter().enumerate() {
                    if let Some(y) = m {
                        top[*y] += inst.potential(x);
                    }
                }
                top.into_iter().enumerate().map(|(y, t)| t / inst.potential(y)).collect()
            }
            CompressionMode::OverF | CompressionMode::Quotient => {
                let f = &self.subrelation;
                let mut top = vec![Q::zero(); f.len()];
                for (u, m) in self.map.iter().enumerate() {
                    if let Some(t) = m {
                        let (target_block, source_mass) = match self.mode {
                            CompressionMode::OverF => (f.block_of(*t), inst.potential(u).clone()),
                            _ => (*t, inst.mass(f.block(u))),
                        };
                        top[target_block] += source_mass;
                    }
                }
                top.into_iter().enumerate().map(|(b, t)| t / inst.mass(f.block(b))).collect()
            }
        }
    }

    /// Points of the fibre units (points or blocks) where the fibre bound is strict.
    pub fn computed_strict_set(&self, inst: &Instance) -> Vec<PointId> {
        let fib = self.fibres(inst);
        let one = Q::one();
        let mut out: Vec<PointId> = match self.mode {
            CompressionMode::Plain => (0..inst.len()).filter(|&y| fib[y] < one).collect(),
            _ => self
                .subrelation
                .blocks()
                .iter()
                .enumerate()
                .filter(|(b, _)| fib[*b] < one)
                .flat_map(|(_, pts)| pts.iter().copied())
                .collect(),
        };
        out.sort_unstable();
        out
    }

    /// The set of points the image of point `x` lands in, or `None` if it escapes.
    pub fn resolve(&self, x: PointId) -> Option<Vec<PointId>> {
        let f = &self.subrelation;
        match self.mode {
            CompressionMode::Plain => self.map[x].map(|y| vec![y]),
            CompressionMode::OverF => self.map[x].map(|y| f.block(f.block_of(y)).to_vec()),
            CompressionMode::Quotient => self.map[f.block_of(x)].map(|b| f.block(b).to_vec()),
        }
    }
}

/// Number of units mapped onto each unit.
pub(crate) fn preimage_counts(units: usize, map: &[Option<usize>]) -> Vec<usize> {
    let mut counts = vec![0; units];
    for t in map.iter().flatten() {
        counts[*t] += 1;
    }
    counts
}

/// The certificates of a compression across tower levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerCompression {
    pub levels: Vec<(usize, CompressionCertificate)>,
}
