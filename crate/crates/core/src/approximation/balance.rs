use num_traits::Zero;

use super::{indices, maximal_family, FamilySpec, Leftover, Predicate};
use crate::error::{Error, Result};
use crate::model::{FiniteSubrelation, Instance, PointId};
use crate::rational::{fmt_q, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Balance {
    pub b: Vec<PointId>,
    pub c: Vec<PointId>,
    /// Family members in B; trivial-part points are singletons.
    pub f: FiniteSubrelation,
    pub leftover: Leftover,
    /// f⁻¹(0) ∪ g⁻¹(0) within B, handled pointwise.
    pub trivial: Vec<PointId>,
    /// (block, T) pairs chosen by the search.
    pub witnesses: Vec<(Vec<PointId>, Vec<PointId>)>,
}

/// Finds B, C ⊆ B and F with ∫_C f dν_{[x]_F} ≤ ∫_{B\C} g dν_{[x]_F} ≤ r ∫_C f dν_{[x]_F}.
///
/// Points where f or g vanishes form singleton blocks, with C containing the
/// zeros of f there. On the positive part the maximal family runs over (S, T)
/// pairs, and classes with an uncovered positive point are set aside whole.
pub fn balance(inst: &Instance, f: &[Q], g: &[Q], r: &Q) -> Result<Balance> {
    if f.len() != inst.len() || g.len() != inst.len() {
        return Err(Error::InvalidParameter("function length differs from point count".into()));
    }
    if f.iter().chain(g).any(|v| *v < Q::zero()) {
        return Err(Error::InvalidParameter("f and g must be nonnegative".into()));
    }
    let trivial_mask: Vec<bool> = (0..inst.len()).map(|x| f[x].is_zero() || g[x].is_zero()).collect();
    let positive: Vec<bool> = trivial_mask.iter().map(|t| !t).collect();
    let mut spec = FamilySpec::new(Predicate::Balance { f: f.to_vec(), g: g.to_vec(), r: r.clone() });
    spec.allowed = Some(positive.clone());
    let family = maximal_family(inst, &spec)?.certified()?;
    let covered = family.covered(inst.len());

    let mut class_open = vec![false; inst.num_classes()];
    for x in 0..inst.len() {
        if positive[x] && !covered[x] {
            class_open[inst.class_of(x)] = true;
        }
    }
    let out: Vec<bool> = (0..inst.len()).map(|x| class_open[inst.class_of(x)]).collect();
    let b: Vec<PointId> = (0..inst.len()).filter(|&x| !out[x]).collect();
    let mut c: Vec<PointId> = (0..inst.len()).filter(|&x| !out[x] && trivial_mask[x] && f[x].is_zero()).collect();
    let mut blocks = Vec::new();
    let mut witnesses = Vec::new();
    for m in &family.members {
        if out[m.points[0]] {
            continue;
        }
        let t = m.witness.clone().expect("balance members carry T");
        c.extend(t.iter().copied());
        blocks.push(m.points.clone());
        witnesses.push((m.points.clone(), t));
    }
    c.sort_unstable();
    let fsub = FiniteSubrelation::from_blocks(inst, blocks)?;
    let res = Balance {
        b,
        c,
        f: fsub,
        leftover: Leftover::witness(inst, indices(&out))?,
        trivial: (0..inst.len()).filter(|&x| trivial_mask[x] && !out[x]).collect(),
        witnesses,
    };
    check(inst, f, g, r, &res)?;
    Ok(res)
}

fn check(inst: &Instance, f: &[Q], g: &[Q], r: &Q, res: &Balance) -> Result<()> {
    let mut in_c = vec![false; inst.len()];
    for &x in &res.c {
        in_c[x] = true;
    }
    for &x in &res.b {
        let blk = res.f.block(res.f.block_of(x));
        let (mut lhs, mut mid, mut total) = (Q::zero(), Q::zero(), Q::zero());
        for &y in blk {
            total += inst.potential(y);
            if in_c[y] {
                lhs += &f[y] * inst.potential(y);
            } else {
                mid += &g[y] * inst.potential(y);
            }
        }
        let (lhs, mid) = (lhs / &total, mid / &total);
        let rhs = r * &lhs;
        if !(lhs <= mid && mid <= rhs) {
            return Err(Error::Postcondition(format!(
                "balance fails at `{}`: {} <= {} <= {}",
                inst.name(x),
                fmt_q(&lhs),
                fmt_q(&mid),
                fmt_q(&rhs)
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn five_constant_points() {
        let inst = Instance::single_class(vec![qi(1); 5]).unwrap();
        let ones = vec![qi(1); 5];
        let res = balance(&inst, &ones, &ones, &qi(2)).unwrap();
        assert_eq!(res.f.blocks(), &[vec![0, 1, 2, 3, 4]]);
        assert_eq!(res.c, vec![0, 1]);
        let blk = &res.f.blocks()[0];
        let nu = |s: &[PointId]| inst.mass(s) / inst.mass(blk);
        assert_eq!(nu(&[0, 1]), q(2, 5));
        assert_eq!(nu(&[2, 3, 4]), q(3, 5));
        assert_eq!(qi(2) * nu(&[0, 1]), q(4, 5));
    }

    #[test]
    fn zero_functions_are_trivial() {
        let inst = Instance::single_class(vec![qi(1); 3]).unwrap();
        let res = balance(&inst, &vec![qi(0); 3], &vec![qi(1); 3], &qi(2)).unwrap();
        assert_eq!(res.trivial, vec![0, 1, 2]);
        assert_eq!(res.b, vec![0, 1, 2]);
        let res = balance(&inst, &vec![qi(1); 3], &vec![qi(0); 3], &qi(2)).unwrap();
        assert!(res.c.is_empty());
        assert_eq!(res.b, vec![0, 1, 2]);
    }
}
