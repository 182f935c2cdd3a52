use num_traits::One;

use super::{class_saturation, indices, maximal_family, FamilySpec, Leftover, Predicate};
use crate::error::{Error, Result};
use crate::model::{FiniteSubrelation, Instance, PointId};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityApproximation {
    pub family: Vec<Vec<PointId>>,
    /// Class-invariant set on which the conclusion holds.
    pub b: Vec<PointId>,
    pub c: Vec<PointId>,
    /// Blocks are the family members inside C; all other points are singletons.
    pub f: FiniteSubrelation,
    pub leftover: Leftover,
}

/// Finds B, C ⊆ B and F on C with r < |A ∩ [x]_F|^ρ_{[x]_F \ A} < 1 on C, and
/// A ∩ [x]_E ⊆ C or [x]_E \ A ⊆ C for x ∈ B.
pub fn density_approximation(inst: &Instance, a: &[PointId], r: &Q) -> Result<DensityApproximation> {
    let mut in_a = vec![false; inst.len()];
    for &x in a {
        if x >= inst.len() {
            return Err(Error::UnknownPoint(x.to_string()));
        }
        in_a[x] = true;
    }
    let spec = FamilySpec::new(Predicate::Density { a: in_a.clone(), r: r.clone() });
    let family = maximal_family(inst, &spec)?.certified()?;
    let covered = family.covered(inst.len());
    let d: Vec<bool> = (0..inst.len()).map(|x| in_a[x] && !covered[x]).collect();
    let d_prime: Vec<bool> = (0..inst.len()).map(|x| !in_a[x] && !covered[x]).collect();
    let (sd, sdp) = (class_saturation(inst, &d), class_saturation(inst, &d_prime));
    let out: Vec<bool> = (0..inst.len()).map(|x| sd[x] && sdp[x]).collect();
    let b: Vec<PointId> = (0..inst.len()).filter(|&x| !out[x]).collect();
    let c: Vec<PointId> = b.iter().copied().filter(|&x| covered[x]).collect();
    let blocks: Vec<Vec<PointId>> = family.sets().into_iter().filter(|s| !out[s[0]]).collect();
    let f = FiniteSubrelation::from_blocks(inst, blocks)?;
    let result =
        DensityApproximation { family: family.sets(), b, c, f, leftover: Leftover::witness(inst, indices(&out))? };
    check(inst, &in_a, r, &result)?;
    Ok(result)
}

fn check(inst: &Instance, in_a: &[bool], r: &Q, res: &DensityApproximation) -> Result<()> {
    let mut in_c = vec![false; inst.len()];
    for &x in &res.c {
        in_c[x] = true;
    }
    for &x in &res.c {
        let block = res.f.block(res.f.block_of(x));
        let (inside, outside): (Vec<PointId>, Vec<PointId>) = block.iter().partition(|&&y| in_a[y]);
        if outside.is_empty() || block.iter().any(|&y| !in_c[y]) {
            return Err(Error::Postcondition(format!("block of `{}` is malformed", inst.name(x))));
        }
        let ratio = inst.mass(&inside) / inst.mass(&outside);
        if !(ratio > *r && ratio < Q::one()) {
            return Err(Error::Postcondition(format!("density ratio fails at `{}`", inst.name(x))));
        }
    }
    for &x in &res.b {
        let class = inst.class(inst.class_of(x));
        let a_side = class.iter().all(|&y| !in_a[y] || in_c[y]);
        let other_side = class.iter().all(|&y| in_a[y] || in_c[y]);
        if !(a_side || other_side) {
            return Err(Error::Postcondition(format!("class of `{}` is split outside C", inst.name(x))));
        }
    }
    Ok(())
}
