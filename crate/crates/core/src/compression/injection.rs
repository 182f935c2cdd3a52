use std::collections::BTreeMap;

use num_traits::Zero;

use super::{Bound, CompressionCertificate, CompressionMode};
use crate::error::{Error, Result};
use crate::model::{check_tiers, Domain, FiniteSubrelation, Instance, PointId};
use crate::rational::Q;

/// Output of [`strictly_increasing_injection`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Injection {
    /// Tower level the certificate lives on; `None` for a bare instance.
    pub level: Option<usize>,
    /// Per class, the complete layer boundaries n_0 = 0, n_1 = 1, n_2, ...
    pub boundaries: Vec<Vec<usize>>,
    pub certificate: CompressionCertificate,
}

/// Layer boundaries for one class given its mass per tier.
///
/// n_0 = 0, n_1 = 1, and n_{i+2} is the least n whose layer [n_{i+1}, n) has
/// strictly more mass than the previous layer. Only layers that close within
/// the available tiers are returned.
pub fn layer_boundaries(mass_by_tier: &BTreeMap<usize, Q>) -> Vec<usize> {
    let Some(&max_tier) = mass_by_tier.keys().next_back() else { return vec![0] };
    let mass = |n: usize| mass_by_tier.get(&n).cloned().unwrap_or_else(Q::zero);
    let mut b = vec![0, 1];
    let mut prev = mass(0);
    loop {
        let start = *b.last().expect("non-empty");
        let mut cur = Q::zero();
        let mut n = start;
        let mut closed = false;
        while n <= max_tier {
            cur += mass(n);
            n += 1;
            if cur > prev {
                closed = true;
                break;
            }
        }
        if !closed {
            return b;
        }
        b.push(n);
        prev = cur;
    }
}

/// Tiers given by rank within each class in id order.
pub fn rank_tiers(inst: &Instance) -> Vec<usize> {
    let mut tiers = vec![0; inst.len()];
    for members in inst.classes() {
        for (i, &x) in members.iter().enumerate() {
            tiers[x] = i;
        }
    }
    tiers
}

/// Builds the layered quotient certificate: layer i maps onto layer i+1, each
/// layer strictly lighter than the next. The last complete layer and any partial
/// remainder escape the truncation.
pub fn strictly_increasing_injection(domain: Domain<'_>, tiers: Option<&[usize]>) -> Result<Injection> {
    let (inst, level, tiers): (&Instance, Option<usize>, Vec<usize>) = match domain {
        Domain::Instance(inst) => (inst, None, tiers.map(|t| t.to_vec()).unwrap_or_else(|| rank_tiers(inst))),
        Domain::Tower(t) => {
            let n = t.top_index();
            let tiers = match tiers {
                Some(v) => v.to_vec(),
                None => t
                    .transversal(n)
                    .ok_or_else(|| Error::InvalidParameter("tower has no transversal partition".into()))?
                    .to_vec(),
            };
            let div = t.divergent_classes(n);
            if let Some(c) = div.iter().position(|d| !d) {
                return Err(Error::NotCertifiedAperiodic(format!(
                    "class `{}` has no divergence declaration",
                    t.top().class_name(c)
                )));
            }
            (t.top(), Some(n), tiers)
        }
    };
    check_tiers(inst, &tiers)?;

    let mut blocks: Vec<Vec<PointId>> = Vec::new();
    let mut next_of: Vec<Option<usize>> = Vec::new();
    let mut boundaries = Vec::with_capacity(inst.num_classes());
    for (c, members) in inst.classes().iter().enumerate() {
        let mut mass: BTreeMap<usize, Q> = BTreeMap::new();
        for &x in members {
            mass.insert(tiers[x], inst.potential(x).clone());
        }
        if !mass.contains_key(&0) {
            return Err(Error::InvalidParameter(format!("class `{}` has no tier-0 point", inst.class_name(c))));
        }
        let b = layer_boundaries(&mass);
        if b.len() < 3 {
            return Err(Error::NotCertifiedAperiodic(format!(
                "class `{}`: truncation exhausted before a heavier layer",
                inst.class_name(c)
            )));
        }
        let layers = b.len() - 1;
        let first = blocks.len();
        for i in 0..layers {
            let layer: Vec<PointId> =
                members.iter().copied().filter(|&x| tiers[x] >= b[i] && tiers[x] < b[i + 1]).collect();
            blocks.push(layer);
            next_of.push(if i + 1 < layers { Some(first + i + 1) } else { None });
        }
        let rest: Vec<PointId> = members.iter().copied().filter(|&x| tiers[x] >= b[layers]).collect();
        if !rest.is_empty() {
            blocks.push(rest);
            next_of.push(None);
        }
        boundaries.push(b);
    }

    let f = FiniteSubrelation::from_blocks(inst, blocks.clone())?;
    let mut map = vec![None; f.len()];
    for (i, blk) in blocks.iter().enumerate() {
        let src = f.block_of(blk[0]);
        map[src] = next_of[i].map(|j| f.block_of(blocks[j][0]));
    }
    let certificate = CompressionCertificate::new(inst, CompressionMode::Quotient, f, map, Bound::Injective, None)?;
    Ok(Injection { level, boundaries, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn harmonic(levels: usize) -> BTreeMap<usize, Q> {
        (0..levels).map(|n| (n, q(1, n as i64 + 1))).collect()
    }

    #[test]
    fn harmonic_boundaries() {
        assert_eq!(layer_boundaries(&harmonic(4)), vec![0, 1, 4]);
        assert_eq!(layer_boundaries(&harmonic(10)), vec![0, 1, 4]);
        assert_eq!(layer_boundaries(&harmonic(13)), vec![0, 1, 4, 13]);
        assert_eq!(layer_boundaries(&harmonic(2)), vec![0, 1]);
    }

    #[test]
    fn constant_boundaries() {
        let m: BTreeMap<usize, Q> = (0..10).map(|n| (n, qi(1))).collect();
        assert_eq!(layer_boundaries(&m), vec![0, 1, 3, 6, 10]);
    }

    #[test]
    fn bare_instance_injection_escapes() {
        let inst = Instance::single_class(vec![qi(1); 6]).unwrap();
        let inj = strictly_increasing_injection(Domain::Instance(&inst), None).unwrap();
        assert_eq!(inj.boundaries, vec![vec![0, 1, 3, 6]]);
        assert_eq!(inj.certificate.escapes().len(), 1);
        let short = Instance::single_class(vec![qi(1), q(1, 2)]).unwrap();
        assert!(matches!(
            strictly_increasing_injection(Domain::Instance(&short), None),
            Err(Error::NotCertifiedAperiodic(_))
        ));
    }
}
