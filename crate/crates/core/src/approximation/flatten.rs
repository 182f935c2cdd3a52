use num_traits::{One, Zero};

use super::{class_midpoints, indices, maximal_family, nu_integral, FamilySpec, Leftover, Predicate};
use crate::error::{Error, Result};
use crate::model::{quotient_by, FiniteSubrelation, Instance, PointId};
use crate::rational::{fmt_q, min_max, q, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flatten {
    /// Class-invariant set on which F flattens f.
    pub b: Vec<PointId>,
    /// Blocks inside B; points outside B are singletons.
    pub f: FiniteSubrelation,
    pub leftover: Leftover,
    /// Number of single-step rounds composed.
    pub rounds: usize,
    /// Largest within-class spread of block averages over B.
    pub spread: Q,
}

/// Within-class oscillation sup f − inf f.
pub fn oscillation(inst: &Instance, f: &[Q]) -> Q {
    inst.classes()
        .iter()
        .map(|m| {
            let (lo, hi) = min_max(m.iter().map(|&x| &f[x])).expect("non-empty");
            hi - lo
        })
        .max()
        .unwrap_or_else(Q::zero)
}

/// Coarsens f so that block averages ∫f dν^ρ_{[x]_F} vary by less than δε within
/// each class of B.
///
/// For δ > 2/3 one greedy round suffices. Otherwise rounds with δ' = 3/4 are
/// composed over successive quotients until (3/4)^k ≤ δ.
pub fn flatten(inst: &Instance, f: &[Q], delta: &Q, eps: &Q) -> Result<Flatten> {
    if f.len() != inst.len() {
        return Err(Error::InvalidParameter("function length differs from point count".into()));
    }
    if f.iter().any(|v| *v < Q::zero()) {
        return Err(Error::InvalidParameter("f must be nonnegative".into()));
    }
    if *delta <= Q::zero() || *delta >= Q::one() {
        return Err(Error::InvalidParameter("delta must lie in (0, 1)".into()));
    }
    let osc = oscillation(inst, f);
    if osc >= *eps {
        return Err(Error::OscillationTooLarge { osc: fmt_q(&osc), eps: fmt_q(eps) });
    }
    let (step, rounds) = if *delta > q(2, 3) {
        (delta.clone(), 1)
    } else {
        let step = q(3, 4);
        let mut k = 1;
        let mut power = step.clone();
        while power > *delta {
            power *= &step;
            k += 1;
        }
        (step, k)
    };

    // Current working instance, each of whose points stands for a composite block.
    let mut cur = inst.clone();
    let mut members: Vec<Vec<PointId>> = (0..inst.len()).map(|x| vec![x]).collect();
    let mut values: Vec<Q> = f.to_vec();
    let mut band = eps.clone();
    let mut out = vec![false; inst.len()];
    for _ in 0..rounds {
        let (keep, blocks) = one_round(&cur, &values, &step, &band)?;
        for (p, k) in keep.iter().enumerate() {
            if !k {
                for &x in &members[p] {
                    out[x] = true;
                }
            }
        }
        let kept = indices(&keep);
        if kept.is_empty() {
            break;
        }
        let fcur = FiniteSubrelation::from_blocks(&cur, blocks)?;
        let (sub, back) = cur.restrict(&kept)?;
        let mut relabel = vec![usize::MAX; cur.len()];
        for (i, &p) in back.iter().enumerate() {
            relabel[p] = i;
        }
        let sub_blocks: Vec<Vec<PointId>> =
            fcur.blocks().iter().filter(|b| keep[b[0]]).map(|b| b.iter().map(|&p| relabel[p]).collect()).collect();
        let fsub = FiniteSubrelation::from_blocks(&sub, sub_blocks)?;
        let quotient = quotient_by(&sub, &fsub)?;
        let mut next_members = Vec::with_capacity(fsub.len());
        let mut next_values = Vec::with_capacity(fsub.len());
        for blk in fsub.blocks() {
            next_members.push(blk.iter().flat_map(|&i| members[back[i]].iter().copied()).collect::<Vec<_>>());
            let orig: Vec<PointId> = blk.iter().map(|&i| back[i]).collect();
            next_values.push(nu_integral(&cur, &values, &orig));
        }
        cur = quotient.instance;
        members = next_members;
        values = next_values;
        band = &band * &step;
    }

    let blocks: Vec<Vec<PointId>> = members.into_iter().filter(|m| !out[m[0]]).collect();
    let fsub = FiniteSubrelation::from_blocks(inst, blocks)?;
    let b: Vec<PointId> = (0..inst.len()).filter(|&x| !out[x]).collect();
    let spread = block_spread(inst, f, &fsub, &b);
    if spread >= delta * eps {
        return Err(Error::Postcondition(format!(
            "block averages spread {} is not below delta*eps {}",
            fmt_q(&spread),
            fmt_q(&(delta * eps))
        )));
    }
    Ok(Flatten { b, f: fsub, leftover: Leftover::witness(inst, indices(&out))?, rounds, spread })
}

/// Largest within-class difference of block averages over the classes in `b`.
pub fn block_spread(inst: &Instance, f: &[Q], fsub: &FiniteSubrelation, b: &[PointId]) -> Q {
    let mut in_b = vec![false; inst.len()];
    for &x in b {
        in_b[x] = true;
    }
    let avgs: Vec<Q> = fsub.blocks().iter().map(|blk| nu_integral(inst, f, blk)).collect();
    inst.classes()
        .iter()
        .filter(|m| in_b[m[0]])
        .map(|m| {
            let (lo, hi) = min_max(m.iter().map(|&x| &avgs[fsub.block_of(x)])).expect("non-empty");
            hi - lo
        })
        .max()
        .unwrap_or_else(Q::zero)
}

/// One round with δ > 2/3: returns the kept points and the chosen blocks.
fn one_round(inst: &Instance, f: &[Q], delta: &Q, eps: &Q) -> Result<(Vec<bool>, Vec<Vec<PointId>>)> {
    let spec = FamilySpec::new(Predicate::Flatten { f: f.to_vec(), delta: delta.clone(), eps: eps.clone() });
    let family = maximal_family(inst, &spec)?.certified()?;
    let covered = family.covered(inst.len());
    let mid = class_midpoints(inst, f);
    let mut below = vec![false; inst.num_classes()];
    let mut above = vec![false; inst.num_classes()];
    for x in 0..inst.len() {
        if covered[x] {
            continue;
        }
        let c = inst.class_of(x);
        if f[x] < mid[c] {
            below[c] = true;
        } else if f[x] > mid[c] {
            above[c] = true;
        }
    }
    let keep: Vec<bool> = (0..inst.len()).map(|x| !(below[inst.class_of(x)] && above[inst.class_of(x)])).collect();
    let blocks = family.sets().into_iter().filter(|s| keep[s[0]]).collect();
    Ok((keep, blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    fn c4() -> Instance {
        Instance::single_class(vec![qi(1); 4]).unwrap()
    }

    #[test]
    fn worked_example() {
        let f = vec![qi(1), qi(1), qi(0), qi(0)];
        let res = flatten(&c4(), &f, &q(3, 4), &q(101, 100)).unwrap();
        assert_eq!(res.f.blocks(), &[vec![0, 2], vec![1, 3]]);
        assert_eq!(res.b, vec![0, 1, 2, 3]);
        assert_eq!(res.spread, qi(0));
    }

    #[test]
    fn constant_function() {
        let res = flatten(&c4(), &vec![qi(2); 4], &q(9, 10), &qi(1)).unwrap();
        assert_eq!(res.spread, qi(0));
    }

    #[test]
    fn oscillation_guard() {
        let f = vec![qi(2), qi(0), qi(0), qi(0)];
        assert!(matches!(flatten(&c4(), &f, &q(3, 4), &qi(2)), Err(Error::OscillationTooLarge { .. })));
    }

    #[test]
    fn small_delta_composes_rounds() {
        let inst = Instance::single_class(vec![qi(1), q(1, 2), q(1, 3), q(1, 4), q(1, 5), q(1, 6)]).unwrap();
        let f = vec![qi(0), qi(1), q(1, 2), qi(1), qi(0), q(1, 3)];
        let res = flatten(&inst, &f, &q(1, 2), &q(11, 10)).unwrap();
        assert_eq!(res.rounds, 3);
        if !res.b.is_empty() {
            assert!(res.spread < q(11, 20));
        }
    }
}
