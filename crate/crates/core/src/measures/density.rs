use num_traits::Zero;

use super::{verify_invariance, WeightedMeasure};
use crate::error::{Error, Result};
use crate::model::{FiniteSubrelation, Instance, PointId};
use crate::rational::{fmt_q, Q};

/// A finite subrelation F with |B ∩ [x]_F|^ρ_{[x]_F} ≥ ε everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityWitness {
    pub eps: Q,
    pub f: FiniteSubrelation,
    /// Smallest block density per class, for the σ-positive decomposition.
    pub per_class: Vec<Q>,
}

impl DensityWitness {
    /// Recomputes block densities and checks the bound.
    pub fn check(&self, inst: &Instance, b: &[PointId]) -> Result<()> {
        let dens = block_densities(inst, &self.f, &mask(inst.len(), b));
        if let Some(d) = dens.iter().find(|d| **d < self.eps) {
            return Err(Error::Precondition(format!("block density {} is below {}", fmt_q(d), fmt_q(&self.eps))));
        }
        Ok(())
    }
}

fn mask(n: usize, set: &[PointId]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &x in set {
        m[x] = true;
    }
    m
}

fn block_densities(inst: &Instance, f: &FiniteSubrelation, in_b: &[bool]) -> Vec<Q> {
    f.blocks()
        .iter()
        .map(|blk| {
            let inside: Vec<PointId> = blk.iter().copied().filter(|&x| in_b[x]).collect();
            inst.mass(&inside) / inst.mass(blk)
        })
        .collect()
}

/// Grows one block around each point of B; every other point joins the block of
/// its class whose density stays highest, ties to the lowest block.
///
/// Returns `None` when B misses a class or the densities fall below `eps`.
pub fn density_witness(inst: &Instance, b: &[PointId], eps: Option<&Q>) -> Result<Option<DensityWitness>> {
    if let Some(x) = b.iter().find(|&&x| x >= inst.len()) {
        return Err(Error::UnknownPoint(x.to_string()));
    }
    let in_b = mask(inst.len(), b);
    let mut blocks: Vec<Vec<PointId>> = Vec::new();
    let mut per_class = Vec::with_capacity(inst.num_classes());
    for members in inst.classes() {
        let seeds: Vec<PointId> = members.iter().copied().filter(|&x| in_b[x]).collect();
        if seeds.is_empty() {
            return Ok(None);
        }
        let first = blocks.len();
        let mut inside: Vec<Q> = Vec::with_capacity(seeds.len());
        let mut total: Vec<Q> = Vec::with_capacity(seeds.len());
        for &s in &seeds {
            blocks.push(vec![s]);
            inside.push(inst.potential(s).clone());
            total.push(inst.potential(s).clone());
        }
        for &x in members.iter().filter(|&&x| !in_b[x]) {
            let w = inst.potential(x);
            let mut best = 0;
            let mut best_val: Option<Q> = None;
            for i in 0..seeds.len() {
                let v = &inside[i] / (&total[i] + w);
                if best_val.as_ref().is_none_or(|bv| v > *bv) {
                    best = i;
                    best_val = Some(v);
                }
            }
            blocks[first + best].push(x);
            total[best] += w;
        }
        let min = (0..seeds.len()).map(|i| &inside[i] / &total[i]).min().expect("non-empty");
        per_class.push(min);
    }
    let f = FiniteSubrelation::from_blocks(inst, blocks)?;
    let found = per_class.iter().min().cloned().unwrap_or_else(Q::zero);
    if let Some(e) = eps {
        if found < *e {
            return Ok(None);
        }
    }
    Ok(Some(DensityWitness { eps: found, f, per_class }))
}

/// μ̄(A) = ∫ |A ∩ [x]_F|^ρ_{B ∩ [x]_F} dμ(x), pointwise
/// μ̄({y}) = w(y)·μ(B ∩ [y]_F) / |B ∩ [y]_F|^ρ.
pub fn extend_from_dense(
    inst: &Instance,
    mu: &WeightedMeasure,
    b: &[PointId],
    witness: &DensityWitness,
) -> Result<WeightedMeasure> {
    if mu.len() != inst.len() {
        return Err(Error::Malformed("measure length differs from point count".into()));
    }
    let in_b = mask(inst.len(), b);
    if let Some(x) = (0..inst.len()).find(|&x| !in_b[x] && !mu.weights[x].is_zero()) {
        return Err(Error::Precondition(format!("measure charges `{}` outside B", inst.name(x))));
    }
    let mut pairs = Vec::new();
    for members in inst.classes() {
        let inside: Vec<PointId> = members.iter().copied().filter(|&x| in_b[x]).collect();
        pairs.extend(inside.windows(2).map(|w| (w[0], w[1])));
    }
    let inv = verify_invariance(inst, mu, Some(&pairs))?;
    if !inv.valid {
        return Err(Error::Precondition("measure is not invariant on E restricted to B".into()));
    }
    witness.f.check_against(inst)?;
    witness.check(inst, b)?;

    let f = &witness.f;
    let mut weights = vec![Q::zero(); inst.len()];
    for blk in f.blocks() {
        let inside: Vec<PointId> = blk.iter().copied().filter(|&x| in_b[x]).collect();
        let (m, w) = (mu.of(&inside), inst.mass(&inside));
        for &y in blk {
            weights[y] = inst.potential(y) * &m / &w;
        }
    }
    let ext = WeightedMeasure { weights };

    if let Some(&x) = b.iter().find(|&&x| ext.weights[x] != mu.weights[x]) {
        return Err(Error::Postcondition(format!("extension differs from the input at `{}`", inst.name(x))));
    }
    let bound = mu.of(b) / &witness.eps;
    if ext.mass() > bound {
        return Err(Error::Postcondition(format!(
            "extension mass {} exceeds mu(B)/eps = {}",
            fmt_q(&ext.mass()),
            fmt_q(&bound)
        )));
    }
    if !verify_invariance(inst, &ext, None)?.valid {
        return Err(Error::Postcondition("extension is not invariant".into()));
    }
    Ok(ext)
}
