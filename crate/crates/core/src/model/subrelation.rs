use num_traits::Zero;

use super::instance::{Cocycle, Instance, PointId, Skeleton};
use crate::error::{Error, Result};
use crate::rational::Q;

/// A partition of the points into finite blocks, each inside one class.
///
/// Blocks are ordered by their minimum point and stored sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteSubrelation {
    block_of: Vec<usize>,
    blocks: Vec<Vec<PointId>>,
}

impl FiniteSubrelation {
    /// The equality relation: every point its own block.
    pub fn identity(n: usize) -> Self {
        FiniteSubrelation { block_of: (0..n).collect(), blocks: (0..n).map(|x| vec![x]).collect() }
    }

    /// F = E on a finite instance.
    pub fn whole_classes(inst: &Instance) -> Self {
        Self::from_blocks(inst, inst.classes().to_vec()).expect("classes form a valid subrelation")
    }

    /// Builds from disjoint blocks; uncovered points become singletons.
    pub fn from_blocks(inst: &Instance, blocks: Vec<Vec<PointId>>) -> Result<Self> {
        let n = inst.len();
        let mut owner = vec![usize::MAX; n];
        let mut out: Vec<Vec<PointId>> = Vec::with_capacity(blocks.len());
        for mut b in blocks {
            if b.is_empty() {
                continue;
            }
            b.sort_unstable();
            for &x in &b {
                if x >= n {
                    return Err(Error::InvalidSubrelation(format!("point {x} out of range")));
                }
                if owner[x] != usize::MAX {
                    return Err(Error::InvalidSubrelation(format!("point `{}` lies in two blocks", inst.name(x))));
                }
                if !inst.same_class(x, b[0]) {
                    return Err(Error::InvalidSubrelation(format!(
                        "block containing `{}` and `{}` is not inside one class",
                        inst.name(b[0]),
                        inst.name(x)
                    )));
                }
                owner[x] = out.len();
            }
            out.push(b);
        }
        for (x, o) in owner.iter().enumerate() {
            if *o == usize::MAX {
                out.push(vec![x]);
            }
        }
        out.sort_by_key(|b| b[0]);
        let mut block_of = vec![0; n];
        for (i, b) in out.iter().enumerate() {
            for &x in b {
                block_of[x] = i;
            }
        }
        Ok(FiniteSubrelation { block_of, blocks: out })
    }

    /// Builds from an arbitrary block label per point.
    pub fn from_labels(inst: &Instance, labels: &[usize]) -> Result<Self> {
        if labels.len() != inst.len() {
            return Err(Error::InvalidSubrelation("label count differs from point count".into()));
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<PointId>> = Default::default();
        for (x, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(x);
        }
        Self::from_blocks(inst, groups.into_values().collect())
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn num_points(&self) -> usize {
        self.block_of.len()
    }

    pub fn blocks(&self) -> &[Vec<PointId>] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &[PointId] {
        &self.blocks[b]
    }

    pub fn block_of(&self, x: PointId) -> usize {
        self.block_of[x]
    }

    /// Block labels indexed by point.
    pub fn labels(&self) -> &[usize] {
        &self.block_of
    }

    pub fn is_identity(&self) -> bool {
        self.blocks.len() == self.block_of.len()
    }

    /// True iff every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &FiniteSubrelation) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|&x| coarser.block_of(x) == coarser.block_of(b[0])))
    }

    /// Union of the blocks meeting `set`.
    pub fn saturate(&self, set: &[PointId]) -> Vec<PointId> {
        let mut hit = vec![false; self.blocks.len()];
        for &x in set {
            hit[self.block_of[x]] = true;
        }
        let mut out: Vec<PointId> =
            hit.iter().enumerate().filter(|(_, h)| **h).flat_map(|(b, _)| self.blocks[b].iter().copied()).collect();
        out.sort_unstable();
        out
    }

    pub fn check_against(&self, inst: &Instance) -> Result<()> {
        if self.block_of.len() != inst.len() {
            return Err(Error::InvalidSubrelation("subrelation and instance differ in size".into()));
        }
        for b in &self.blocks {
            if b.iter().any(|&x| !inst.same_class(x, b[0])) {
                return Err(Error::InvalidSubrelation(format!(
                    "block of `{}` is not inside one class",
                    inst.name(b[0])
                )));
            }
        }
        Ok(())
    }
}

/// The quotient X/F with the cocycle ρ/F. Quotient point `i` is block `i` of F,
/// named after its minimum member.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub instance: Instance,
    pub subrelation: FiniteSubrelation,
}

impl Quotient {
    pub fn point_of(&self, x: PointId) -> PointId {
        self.subrelation.block_of(x)
    }
}

pub fn quotient_by(inst: &Instance, f: &FiniteSubrelation) -> Result<Quotient> {
    f.check_against(inst)?;
    let names: Vec<String> = f.blocks().iter().map(|b| inst.name(b[0]).to_string()).collect();
    let mut classes: Vec<(String, Vec<String>)> =
        (0..inst.num_classes()).map(|c| (inst.class_name(c).to_string(), Vec::new())).collect();
    let mut raw = Vec::with_capacity(f.len());
    for (i, b) in f.blocks().iter().enumerate() {
        classes[inst.class_of(b[0])].1.push(names[i].clone());
        let m: Q = inst.mass(b);
        debug_assert!(!m.is_zero());
        raw.push(m);
    }
    let skel = Skeleton::new(names, classes)?;
    let cocycle = Cocycle::from_potentials(&skel, raw)?;
    let instance = Instance::new(skel, cocycle, Vec::new(), inst.mode())?;
    Ok(Quotient { instance, subrelation: f.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::instance::Anchor;
    use crate::rational::{q, qi};

    fn constant4() -> Instance {
        Instance::single_class(vec![qi(1); 4]).unwrap()
    }

    #[test]
    fn quotient_constant_is_cardinality_ratio() {
        let inst = constant4();
        let f = FiniteSubrelation::from_blocks(&inst, vec![vec![1, 2, 3]]).unwrap();
        let qt = quotient_by(&inst, &f).unwrap();
        assert_eq!(qt.instance.rho(qt.point_of(0), qt.point_of(1)).unwrap(), q(1, 3));
        let f = FiniteSubrelation::from_blocks(&inst, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let qt = quotient_by(&inst, &f).unwrap();
        assert_eq!(qt.instance.rho(qt.point_of(0), qt.point_of(2)).unwrap(), qi(1));
    }

    #[test]
    fn quotient_weighted() {
        let inst = Instance::single_class(vec![qi(1), q(1, 2), q(1, 3), q(1, 6)]).unwrap();
        let f = FiniteSubrelation::from_blocks(&inst, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let qt = quotient_by(&inst, &f).unwrap();
        let by_sum = (qi(1) + q(1, 2)) / (q(1, 3) + q(1, 6));
        assert_eq!(qt.instance.rho(0, 1).unwrap(), by_sum);
        assert_eq!(by_sum, qi(3));
        assert_eq!(qt.instance.rho(0, 1).unwrap(), inst.rho_size(&[0, 1], Anchor::Set(&[2, 3])).unwrap());
        assert_eq!(qt.instance.names(), &["a", "c"]);
    }

    #[test]
    fn blocks_must_stay_inside_classes() {
        let inst = Instance::from_parts(
            vec!["a".into(), "b".into()],
            vec!["C".into(), "D".into()],
            vec![qi(1), qi(1)],
            vec![],
            crate::model::Mode::Exact,
        )
        .unwrap();
        assert!(FiniteSubrelation::from_blocks(&inst, vec![vec![0, 1]]).is_err());
        assert!(FiniteSubrelation::from_blocks(&inst, vec![vec![0], vec![0]]).is_err());
    }

    #[test]
    fn saturation_and_refinement() {
        let inst = constant4();
        let f = FiniteSubrelation::from_blocks(&inst, vec![vec![0, 1]]).unwrap();
        let g = FiniteSubrelation::whole_classes(&inst);
        assert!(f.refines(&g));
        assert!(!g.refines(&f));
        assert_eq!(f.saturate(&[1, 3]), vec![0, 1, 3]);
        assert_eq!(f.len(), 3);
    }
}
