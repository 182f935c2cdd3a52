use num_traits::Zero;

use super::limit::AdditivityDefect;
use crate::compression::{
    link_conflicts, verify_tower_compression, Bound, CompressionCertificate, CompressionMode, TowerCompression,
    TowerCompressionReport,
};
use crate::error::{Error, Result};
use crate::model::{FiniteSubrelation, Instance, PointId, Tower};
use crate::rational::{fmt_q, pow2, Q};

/// What a defect-to-compression conversion is asked to exploit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DefectEvidence {
    /// ν(⋃) − 2 Σ_{k<prefix} ν(U_k) ≥ margin on every block of each cited level.
    Additivity { family: String, prefix: usize, levels: Vec<usize>, margin: Q },
    /// ν(γ[U ∩ [x]_F]) − ν(γ[U] ∩ [x]_F) > margin on some F-block of `level`.
    Rotation { generator: String, set: String, level: usize, margin: Q },
}

impl From<&AdditivityDefect> for DefectEvidence {
    fn from(d: &AdditivityDefect) -> Self {
        DefectEvidence::Additivity {
            family: d.family.clone(),
            prefix: d.prefix,
            levels: d.levels.clone(),
            margin: d.margin.clone(),
        }
    }
}

/// Per-step bookkeeping: 0 ≤ ν(A_k) − ν(U_k) ≤ δ_k with δ_k = δ·2^{-(k+1)}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepBound {
    pub level: usize,
    pub member: usize,
    /// Largest ν(A_k) − ν(U_k) over blocks where A_k was completed.
    pub excess: Q,
    pub allowed: Q,
    /// Blocks where U_k could not be matched and escapes instead.
    pub unmatched_blocks: usize,
}

impl StepBound {
    pub fn within(&self) -> bool {
        self.excess >= Q::zero() && self.excess <= self.allowed
    }
}

#[derive(Clone, Debug)]
pub struct DefectCompression {
    pub compression: TowerCompression,
    pub bounds: Vec<StepBound>,
    pub report: TowerCompressionReport,
}

/// Turns certified limit evidence into an over-F finite-to-one compression on
/// the tower levels, verified before it is returned.
pub fn defect_to_compression(t: &Tower, evidence: &DefectEvidence) -> Result<DefectCompression> {
    let (compression, bounds) = match evidence {
        DefectEvidence::Additivity { family, prefix, levels, margin } => {
            additivity(t, family, *prefix, levels, margin)?
        }
        DefectEvidence::Rotation { generator, set, level, margin } => {
            (rotation(t, generator, set, *level, margin)?, vec![])
        }
    };
    let report = verify_tower_compression(t, &compression)?;
    if !report.valid {
        let mut reasons: Vec<String> = report.consistency.iter().map(|v| v.to_string()).collect();
        for (n, r) in &report.levels {
            reasons.extend(r.violations.iter().map(|v| format!("level {n}: {v}")));
        }
        return Err(Error::Postcondition(format!("constructed compression fails: {}", reasons.join("; "))));
    }
    Ok(DefectCompression { compression, bounds, report })
}

fn member_indicators(t: &Tower, n: usize, members: &[String]) -> Vec<Option<usize>> {
    let mut of = vec![None; t.level(n).len()];
    for (k, m) in members.iter().enumerate() {
        if let Some(set) = t.algebra(n).get(m) {
            for &x in set {
                of[x] = Some(k);
            }
        }
    }
    of
}

fn additivity(
    t: &Tower,
    fam: &str,
    prefix: usize,
    levels: &[usize],
    margin: &Q,
) -> Result<(TowerCompression, Vec<StepBound>)> {
    let family = t.families().get(fam).ok_or_else(|| Error::NoCertifiedDefect(format!("unknown family `{fam}`")))?;
    let members = &family.members;
    if *margin <= Q::zero() {
        return Err(Error::NoCertifiedDefect(format!("margin {} is not positive", fmt_q(margin))));
    }
    if prefix == 0 || prefix > members.len() {
        return Err(Error::NoCertifiedDefect(format!("prefix {prefix} out of range")));
    }
    if levels.is_empty() {
        return Err(Error::NoCertifiedDefect("no levels cited".into()));
    }
    for &n in levels {
        if n >= t.num_levels() || !t.algebra(n).contains_key(&members[0]) {
            return Err(Error::NoCertifiedDefect(format!("level {n} does not carry the family")));
        }
        let inst = t.level(n);
        let f = t.subrelation(n);
        let of = member_indicators(t, n, members);
        let in_union: Vec<bool> = match &family.union {
            Some(u) => {
                let mut m = vec![false; inst.len()];
                for &x in t.algebra(n).get(u).map(|v| v.as_slice()).unwrap_or(&[]) {
                    m[x] = true;
                }
                m
            }
            None => vec![true; inst.len()],
        };
        for blk in f.blocks() {
            let total = inst.mass(blk);
            let uni: Vec<PointId> = blk.iter().copied().filter(|&x| in_union[x]).collect();
            let pre: Vec<PointId> = blk.iter().copied().filter(|&x| of[x].is_some_and(|k| k < prefix)).collect();
            let value = (inst.mass(&uni) - inst.mass(&pre) * Q::from_integer(2.into())) / &total;
            if value < *margin {
                return Err(Error::NoCertifiedDefect(format!(
                    "level {n}, block of `{}`: margin {} below {}",
                    inst.name(blk[0]),
                    fmt_q(&value),
                    fmt_q(margin)
                )));
            }
        }
    }

    let first =
        (0..t.num_levels()).find(|&n| t.algebra(n).contains_key(&members[0])).expect("cited level carries the family");
    let top = t.top_index();
    let mut certs: Vec<(usize, CompressionCertificate)> = Vec::new();
    let mut bounds = Vec::new();
    for n in (first..=top).rev() {
        let (map, blocks, mut b) = additivity_level(t, n, members, margin);
        let inst = t.level(n);
        let fprime = FiniteSubrelation::from_blocks(inst, blocks)?;
        let mut cert = assemble(inst, fprime.clone(), map.clone())?;
        if let Some((_, above)) = certs.last() {
            let conflicts = link_conflicts(t, n, &cert, above);
            if !conflicts.is_empty() {
                let mut map = map;
                for (x, _) in conflicts {
                    map[x] = None;
                }
                cert = assemble(inst, fprime, map)?;
            }
        }
        bounds.append(&mut b);
        certs.push((n, cert));
    }
    certs.reverse();
    bounds.sort_by_key(|b| (b.level, b.member));
    Ok((TowerCompression { levels: certs }, bounds))
}

fn assemble(inst: &Instance, f: FiniteSubrelation, map: Vec<Option<usize>>) -> Result<CompressionCertificate> {
    let mut counts = vec![0usize; inst.len()];
    for y in map.iter().flatten() {
        counts[*y] += 1;
    }
    let bound = Bound::from_count(counts.into_iter().max().unwrap_or(0));
    CompressionCertificate::new(inst, CompressionMode::OverF, f, map, bound, None)
}

/// Greedy A_k per F_n-block, in ascending ids over ⋃_{j>k} U_j minus earlier A's.
fn additivity_level(
    t: &Tower,
    n: usize,
    members: &[String],
    margin: &Q,
) -> (Vec<Option<usize>>, Vec<Vec<PointId>>, Vec<StepBound>) {
    let inst = t.level(n);
    let f = t.subrelation(n);
    let of = member_indicators(t, n, members);
    let mut map: Vec<Option<usize>> = (0..inst.len()).map(Some).collect();
    let mut used = vec![false; inst.len()];
    let mut blocks = Vec::new();
    let mut bounds = Vec::new();
    for (k, m) in members.iter().enumerate() {
        if !t.algebra(n).contains_key(m) {
            continue;
        }
        let mut excess: Option<Q> = None;
        let mut unmatched = 0;
        for blk in f.blocks() {
            let source: Vec<PointId> = blk.iter().copied().filter(|&x| of[x] == Some(k)).collect();
            if source.is_empty() {
                continue;
            }
            let need = inst.mass(&source);
            let mut acc = Q::zero();
            let mut a = Vec::new();
            for &y in blk {
                if acc >= need {
                    break;
                }
                if !used[y] && of[y].is_some_and(|j| j > k) {
                    acc += inst.potential(y);
                    a.push(y);
                }
            }
            if acc < need {
                unmatched += 1;
                for &x in &source {
                    map[x] = None;
                }
                continue;
            }
            let e = (&acc - &need) / inst.mass(blk);
            if excess.as_ref().is_none_or(|v| e > *v) {
                excess = Some(e);
            }
            for &y in &a {
                used[y] = true;
            }
            for (i, &x) in source.iter().enumerate() {
                map[x] = Some(a[i % a.len()]);
            }
            blocks.push(a);
        }
        bounds.push(StepBound {
            level: n,
            member: k,
            excess: excess.unwrap_or_else(Q::zero),
            allowed: margin * pow2(-(k as i64 + 1)),
            unmatched_blocks: unmatched,
        });
    }
    (map, blocks, bounds)
}

fn rotation(t: &Tower, generator: &str, set: &str, level: usize, margin: &Q) -> Result<TowerCompression> {
    if level >= t.num_levels() {
        return Err(Error::NoCertifiedDefect(format!("level {level} does not exist")));
    }
    if *margin <= Q::zero() {
        return Err(Error::NoCertifiedDefect(format!("margin {} is not positive", fmt_q(margin))));
    }
    let inst = t.level(level);
    let g = inst
        .generator(generator)
        .ok_or_else(|| Error::NoCertifiedDefect(format!("unknown generator `{generator}`")))?;
    let u = t.algebra(level).get(set).ok_or_else(|| Error::NoCertifiedDefect(format!("unknown set `{set}`")))?;
    let image = &inst.generators()[g].image;
    let f = t.subrelation(level);
    let mut in_gu = vec![false; inst.len()];
    for &x in u {
        in_gu[image[x]] = true;
    }
    let mut chosen: Vec<Option<Vec<PointId>>> = vec![None; f.len()];
    for (b, blk) in f.blocks().iter().enumerate() {
        let s: Vec<PointId> = blk.iter().copied().filter(|&x| in_gu[x]).collect();
        let mut target: Vec<PointId> = u.iter().copied().filter(|&x| f.block_of(x) == b).map(|x| image[x]).collect();
        target.sort_unstable();
        let disc = (inst.mass(&target) - inst.mass(&s)) / inst.mass(blk);
        if disc > *margin {
            chosen[b] = Some(target);
        }
    }
    if chosen.iter().all(|c| c.is_none()) {
        return Err(Error::NoCertifiedDefect(format!("no block of level {level} has discrepancy above the margin")));
    }
    let mut scope: Vec<usize> = f
        .blocks()
        .iter()
        .enumerate()
        .filter(|(b, _)| chosen[*b].is_some())
        .map(|(_, blk)| inst.class_of(blk[0]))
        .collect();
    scope.sort_unstable();
    scope.dedup();
    let mut map: Vec<Option<usize>> = (0..inst.len()).map(Some).collect();
    for (b, blk) in f.blocks().iter().enumerate() {
        if scope.binary_search(&inst.class_of(blk[0])).is_err() {
            continue;
        }
        let s: Vec<PointId> = blk.iter().copied().filter(|&x| in_gu[x]).collect();
        match &chosen[b] {
            Some(target) if !target.is_empty() => {
                for (i, &x) in s.iter().enumerate() {
                    map[x] = Some(target[i % target.len()]);
                }
            }
            _ => {
                for &x in &s {
                    map[x] = None;
                }
            }
        }
    }
    let blocks: Vec<Vec<PointId>> = chosen.into_iter().flatten().filter(|v| !v.is_empty()).collect();
    let fprime = FiniteSubrelation::from_blocks(inst, blocks)?;
    let mut cert = assemble(inst, fprime, map)?;
    cert.scope = Some(scope);
    Ok(TowerCompression { levels: vec![(level, cert)] })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::compression::verify_on_tower;
    use crate::model::{Algebra, Link, Mode, TowerParts};
    use crate::rational::qi;

    /// One class of four points cut into two F-blocks, with a generator moving
    /// U = {a} across blocks.
    fn rotating_tower(divergent: bool) -> Tower {
        let names: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let lvl = Instance::from_parts(
            names,
            vec!["C".into(); 4],
            vec![qi(1), qi(1), qi(2), qi(2)],
            vec![("g".into(), vec![2, 1, 0, 3])],
            Mode::Exact,
        )
        .unwrap();
        let f = FiniteSubrelation::from_blocks(&lvl, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let mut alg = Algebra::new();
        alg.insert("U".into(), vec![0]);
        let mut div = BTreeMap::new();
        if divergent {
            div.insert("C".into(), vec![qi(1)]);
        }
        Tower::new(TowerParts {
            levels: vec![lvl],
            links: Vec::<Link>::new(),
            subrelations: vec![f],
            algebras: vec![alg],
            divergence: div,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn rotation_mode_builds_a_conditional_certificate() {
        let t = rotating_tower(true);
        let ev = DefectEvidence::Rotation {
            generator: "g".into(),
            set: "U".into(),
            level: 0,
            margin: Q::new(1.into(), 10.into()),
        };
        let out = defect_to_compression(&t, &ev).unwrap();
        let (_, cert) = &out.compression.levels[0];
        let r = verify_on_tower(&t, 0, cert).unwrap();
        assert!(r.valid && r.conditional);
        assert_eq!(cert.subrelation.block(cert.subrelation.block_of(2)), &[2]);
    }

    #[test]
    fn rotation_mode_needs_divergence_for_escapes() {
        let t = rotating_tower(false);
        let ev = DefectEvidence::Rotation {
            generator: "g".into(),
            set: "U".into(),
            level: 0,
            margin: Q::new(1.into(), 10.into()),
        };
        assert!(matches!(defect_to_compression(&t, &ev), Err(Error::Postcondition(_))));
    }

    #[test]
    fn zero_margin_is_not_a_defect() {
        let t = rotating_tower(true);
        let ev = DefectEvidence::Rotation { generator: "g".into(), set: "U".into(), level: 0, margin: Q::zero() };
        assert!(matches!(defect_to_compression(&t, &ev), Err(Error::NoCertifiedDefect(_))));
    }
}
