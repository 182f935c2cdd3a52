use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::instance::{Instance, PointId};
use super::subrelation::FiniteSubrelation;
use crate::error::{Error, Result};
use crate::rational::Q;

/// How level n relates to level n+1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Link {
    /// Surjection from level-(n+1) points onto level-n points.
    Projection(Vec<PointId>),
    /// Injection of level-n points into level n+1.
    Inclusion(Vec<PointId>),
}

pub type Algebra = BTreeMap<String, Vec<PointId>>;

/// Unvalidated tower contents; see [`Tower::new`].
#[derive(Clone, Debug, Default)]
pub struct TowerParts {
    pub levels: Vec<Instance>,
    pub links: Vec<Link>,
    pub subrelations: Vec<FiniteSubrelation>,
    pub algebras: Vec<Algebra>,
    /// Class name to lower-bound schedule L(n), one sample per level.
    pub divergence: BTreeMap<String, Vec<Q>>,
    /// Per level, a tier n(x) per point; tiers are distinct within each class.
    pub transversals: Option<Vec<Vec<usize>>>,
    /// Class names whose lacunary orders are declared to have order type Z.
    pub z_like: BTreeSet<String>,
    /// Named sequences of pairwise disjoint algebra sets.
    pub families: BTreeMap<String, SetFamily>,
}

/// Pairwise disjoint algebra sets U_0, U_1, ... and the algebra set standing for
/// their union in the limit; `None` means the whole level.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SetFamily {
    pub members: Vec<String>,
    pub union: Option<String>,
}

/// An increasing sequence of finite levels with subrelations, algebras and declarations.
#[derive(Clone, Debug)]
pub struct Tower {
    parts: TowerParts,
}

impl Tower {
    pub fn new(mut parts: TowerParts) -> Result<Self> {
        let n = parts.levels.len();
        if n == 0 {
            return Err(Error::InvalidTower("a tower needs at least one level".into()));
        }
        if parts.links.len() + 1 != n {
            return Err(Error::InvalidTower(format!("{} levels need {} links", n, n - 1)));
        }
        if parts.subrelations.is_empty() {
            parts.subrelations = parts.levels.iter().map(FiniteSubrelation::whole_classes).collect();
        }
        if parts.subrelations.len() != n {
            return Err(Error::InvalidTower("one subrelation per level required".into()));
        }
        if parts.algebras.is_empty() {
            parts.algebras = vec![Algebra::new(); n];
        }
        if parts.algebras.len() != n {
            return Err(Error::InvalidTower("one algebra per level required".into()));
        }
        let t = Tower { parts };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let p = &self.parts;
        for (lvl, f) in p.subrelations.iter().enumerate() {
            f.check_against(&p.levels[lvl]).map_err(|e| Error::InvalidTower(format!("level {lvl}: {e}")))?;
        }
        for (lvl, alg) in p.algebras.iter().enumerate() {
            for (name, set) in alg {
                if set.iter().any(|&x| x >= p.levels[lvl].len()) {
                    return Err(Error::InvalidTower(format!("level {lvl}: set `{name}` out of range")));
                }
            }
        }
        for n in 0..p.links.len() {
            self.validate_link(n)?;
        }
        self.validate_divergence()?;
        self.validate_transversals()?;
        for c in &p.z_like {
            if self.top().skeleton().class_by_name(c).is_none() {
                return Err(Error::InvalidTower(format!("Z-like declaration for unknown class `{c}`")));
            }
        }
        for (fam, family) in &p.families {
            let members = &family.members;
            for (lvl, alg) in p.algebras.iter().enumerate() {
                let mut seen = vec![false; p.levels[lvl].len()];
                for m in members.iter().filter_map(|m| alg.get(m)) {
                    for &x in m {
                        if seen[x] {
                            return Err(Error::InvalidTower(format!("family `{fam}` is not disjoint at level {lvl}")));
                        }
                        seen[x] = true;
                    }
                }
            }
            if members.iter().chain(&family.union).any(|m| !self.algebra(n_top(p)).contains_key(m)) {
                return Err(Error::InvalidTower(format!("family `{fam}` names a set absent at the top level")));
            }
            if let Some(u) = &family.union {
                for (lvl, alg) in p.algebras.iter().enumerate() {
                    let Some(uset) = alg.get(u) else { continue };
                    let mut inside = vec![false; p.levels[lvl].len()];
                    for &x in uset {
                        inside[x] = true;
                    }
                    if members.iter().filter_map(|m| alg.get(m)).flatten().any(|&x| !inside[x]) {
                        return Err(Error::InvalidTower(format!("family `{fam}` leaves its union set at level {lvl}")));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_link(&self, n: usize) -> Result<()> {
        let p = &self.parts;
        let (lo, hi) = (&p.levels[n], &p.levels[n + 1]);
        let err = |m: String| Error::InvalidTower(format!("link {n}->{}: {m}", n + 1));
        for c in 0..lo.num_classes() {
            if hi.skeleton().class_by_name(lo.class_name(c)).is_none() {
                return Err(err(format!("class `{}` disappears", lo.class_name(c))));
            }
        }
        match &p.links[n] {
            Link::Projection(pi) => {
                if pi.len() != hi.len() {
                    return Err(err("projection length differs from level size".into()));
                }
                if lo.num_classes() != hi.num_classes() {
                    return Err(err("projection must preserve the class count".into()));
                }
                let mut fibre_mass = vec![Q::zero(); lo.len()];
                for (x, &px) in pi.iter().enumerate() {
                    if px >= lo.len() {
                        return Err(err("projection target out of range".into()));
                    }
                    if lo.class_name(lo.class_of(px)) != hi.class_name(hi.class_of(x)) {
                        return Err(err(format!("`{}` changes class", hi.name(x))));
                    }
                    fibre_mass[px] += hi.potential(x);
                }
                for c in 0..lo.num_classes() {
                    let members = lo.class(c);
                    let k = &fibre_mass[members[0]] / lo.potential(members[0]);
                    for &y in members {
                        if fibre_mass[y].is_zero() {
                            return Err(err(format!("projection misses `{}`", lo.name(y))));
                        }
                        if &fibre_mass[y] / lo.potential(y) != k {
                            return Err(err(format!("potentials not refinement-consistent at `{}`", lo.name(y))));
                        }
                    }
                }
                let (flo, fhi) = (&p.subrelations[n], &p.subrelations[n + 1]);
                let mut target = vec![usize::MAX; flo.len()];
                for x in 0..hi.len() {
                    let slot = &mut target[flo.block_of(pi[x])];
                    if *slot == usize::MAX {
                        *slot = fhi.block_of(x);
                    } else if *slot != fhi.block_of(x) {
                        return Err(err("subrelations are not increasing".into()));
                    }
                }
                for (name, set) in &p.algebras[n] {
                    let up = hi_set(&p.algebras[n + 1], name).ok_or_else(|| err(format!("set `{name}` dropped")))?;
                    let mut pulled: Vec<PointId> = (0..hi.len()).filter(|&x| set.contains(&pi[x])).collect();
                    pulled.sort_unstable();
                    if sorted(up) != pulled {
                        return Err(err(format!("set `{name}` not pulled back consistently")));
                    }
                }
            }
            Link::Inclusion(iota) => {
                if iota.len() != lo.len() {
                    return Err(err("inclusion length differs from level size".into()));
                }
                let mut hit = vec![false; hi.len()];
                for (x, &ix) in iota.iter().enumerate() {
                    if ix >= hi.len() || hit[ix] {
                        return Err(err("inclusion is not injective".into()));
                    }
                    hit[ix] = true;
                    if lo.class_name(lo.class_of(x)) != hi.class_name(hi.class_of(ix)) {
                        return Err(err(format!("`{}` changes class", lo.name(x))));
                    }
                }
                for members in lo.classes() {
                    let k = hi.potential(iota[members[0]]) / lo.potential(members[0]);
                    if members.iter().any(|&x| hi.potential(iota[x]) / lo.potential(x) != k) {
                        return Err(err("inclusion does not preserve the cocycle".into()));
                    }
                }
                let (flo, fhi) = (&p.subrelations[n], &p.subrelations[n + 1]);
                for b in flo.blocks() {
                    if b.iter().any(|&x| fhi.block_of(iota[x]) != fhi.block_of(iota[b[0]])) {
                        return Err(err("subrelations are not increasing".into()));
                    }
                }
                for (name, set) in &p.algebras[n] {
                    let up = hi_set(&p.algebras[n + 1], name).ok_or_else(|| err(format!("set `{name}` dropped")))?;
                    let mut restricted: Vec<PointId> = (0..lo.len()).filter(|&x| up.contains(&iota[x])).collect();
                    restricted.sort_unstable();
                    if sorted(set) != restricted {
                        return Err(err(format!("set `{name}` not restricted consistently")));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_divergence(&self) -> Result<()> {
        let p = &self.parts;
        for (class, schedule) in &p.divergence {
            if schedule.len() != p.levels.len() {
                return Err(Error::InvalidTower(format!(
                    "divergence schedule for `{class}` needs one sample per level"
                )));
            }
            if schedule.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidTower(format!("divergence schedule for `{class}` is not monotone")));
            }
            if p.levels.len() > 1 && schedule.first() == schedule.last() {
                return Err(Error::InvalidTower(format!("divergence schedule for `{class}` does not grow")));
            }
            for (lvl, inst) in p.levels.iter().enumerate() {
                let c = inst
                    .skeleton()
                    .class_by_name(class)
                    .ok_or_else(|| Error::InvalidTower(format!("divergence for unknown class `{class}`")))?;
                if inst.class_mass(c) < schedule[lvl] {
                    return Err(Error::InvalidTower(format!(
                        "class `{class}` has rho-size below its divergence bound at level {lvl}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn validate_transversals(&self) -> Result<()> {
        let p = &self.parts;
        let Some(tiers) = &p.transversals else { return Ok(()) };
        if tiers.len() != p.levels.len() {
            return Err(Error::InvalidTower("one transversal partition per level required".into()));
        }
        for (lvl, t) in tiers.iter().enumerate() {
            check_tiers(&p.levels[lvl], t).map_err(|e| Error::InvalidTower(format!("level {lvl}: {e}")))?;
        }
        for (n, link) in p.links.iter().enumerate() {
            if let Link::Inclusion(iota) = link {
                if iota.iter().enumerate().any(|(x, &ix)| tiers[n][x] != tiers[n + 1][ix]) {
                    return Err(Error::InvalidTower(format!("tiers change along link {n}")));
                }
            }
        }
        Ok(())
    }

    pub fn num_levels(&self) -> usize {
        self.parts.levels.len()
    }

    pub fn levels(&self) -> &[Instance] {
        &self.parts.levels
    }

    pub fn level(&self, n: usize) -> &Instance {
        &self.parts.levels[n]
    }

    pub fn top_index(&self) -> usize {
        self.parts.levels.len() - 1
    }

    pub fn top(&self) -> &Instance {
        self.parts.levels.last().expect("non-empty")
    }

    pub fn links(&self) -> &[Link] {
        &self.parts.links
    }

    pub fn link(&self, n: usize) -> &Link {
        &self.parts.links[n]
    }

    pub fn subrelation(&self, n: usize) -> &FiniteSubrelation {
        &self.parts.subrelations[n]
    }

    pub fn algebra(&self, n: usize) -> &Algebra {
        &self.parts.algebras[n]
    }

    pub fn divergence(&self) -> &BTreeMap<String, Vec<Q>> {
        &self.parts.divergence
    }

    pub fn transversal(&self, n: usize) -> Option<&[usize]> {
        self.parts.transversals.as_ref().map(|t| t[n].as_slice())
    }

    pub fn z_like(&self) -> &BTreeSet<String> {
        &self.parts.z_like
    }

    pub fn families(&self) -> &BTreeMap<String, SetFamily> {
        &self.parts.families
    }

    pub fn parts(&self) -> &TowerParts {
        &self.parts
    }

    /// Per class index of level `n`, whether divergence is declared for it.
    pub fn divergent_classes(&self, n: usize) -> Vec<bool> {
        let inst = self.level(n);
        (0..inst.num_classes()).map(|c| self.parts.divergence.contains_key(inst.class_name(c))).collect()
    }

    /// The set at level n+1 representing `set` at level n.
    pub fn lift_set(&self, n: usize, set: &[PointId]) -> Vec<PointId> {
        let mut out = match &self.parts.links[n] {
            Link::Projection(pi) => {
                let mut mark = vec![false; self.level(n).len()];
                for &x in set {
                    mark[x] = true;
                }
                (0..pi.len()).filter(|&y| mark[pi[y]]).collect()
            }
            Link::Inclusion(iota) => set.iter().map(|&x| iota[x]).collect::<Vec<_>>(),
        };
        out.sort_unstable();
        out
    }

    /// The level-n point that level-(n+1) point `y` refines, if any.
    pub fn project(&self, n: usize, y: PointId) -> Option<PointId> {
        match &self.parts.links[n] {
            Link::Projection(pi) => Some(pi[y]),
            Link::Inclusion(iota) => iota.iter().position(|&v| v == y),
        }
    }

    /// Inverse of an inclusion link, indexed by level-(n+1) point.
    pub fn inclusion_inverse(&self, n: usize) -> Option<Vec<Option<PointId>>> {
        match &self.parts.links[n] {
            Link::Inclusion(iota) => {
                let mut inv = vec![None; self.level(n + 1).len()];
                for (x, &y) in iota.iter().enumerate() {
                    inv[y] = Some(x);
                }
                Some(inv)
            }
            Link::Projection(_) => None,
        }
    }

    /// Descendants of level-n point `x` at level `m ≥ n`.
    pub fn descendants(&self, n: usize, m: usize, x: PointId) -> Vec<PointId> {
        let mut set = vec![x];
        for k in n..m {
            set = self.lift_set(k, &set);
        }
        set
    }

    /// Pushes a weight vector at level n+1 down to level n: fibre sums for
    /// projections, restriction for inclusions.
    pub fn push_down(&self, n: usize, weights: &[Q]) -> Vec<Q> {
        match &self.parts.links[n] {
            Link::Projection(pi) => {
                let mut out = vec![Q::zero(); self.level(n).len()];
                for (y, w) in weights.iter().enumerate() {
                    out[pi[y]] += w;
                }
                out
            }
            Link::Inclusion(iota) => iota.iter().map(|&y| weights[y].clone()).collect(),
        }
    }
}

fn n_top(p: &TowerParts) -> usize {
    p.levels.len() - 1
}

fn hi_set<'a>(alg: &'a Algebra, name: &str) -> Option<&'a Vec<PointId>> {
    alg.get(name)
}

fn sorted(v: &[PointId]) -> Vec<PointId> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Checks that tiers form a partition into partial transversals.
pub fn check_tiers(inst: &Instance, tiers: &[usize]) -> Result<()> {
    if tiers.len() != inst.len() {
        return Err(Error::InvalidParameter("tier count differs from point count".into()));
    }
    for members in inst.classes() {
        let mut seen = BTreeSet::new();
        for &x in members {
            if !seen.insert(tiers[x]) {
                return Err(Error::InvalidParameter(format!(
                    "tier {} meets class of `{}` twice",
                    tiers[x],
                    inst.name(members[0])
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::instance::Mode;
    use crate::rational::{q, qi};

    fn level(names: &[&str], ws: Vec<Q>) -> Instance {
        Instance::from_parts(
            names.iter().map(|s| s.to_string()).collect(),
            vec!["C".to_string(); names.len()],
            ws,
            vec![],
            Mode::Exact,
        )
        .unwrap()
    }

    #[test]
    fn projection_consistency() {
        let l0 = level(&["0", "1"], vec![qi(2), qi(1)]);
        let l1 = level(&["00", "01", "10", "11"], vec![qi(4), qi(2), qi(2), qi(1)]);
        let parts = TowerParts {
            levels: vec![l0.clone(), l1.clone()],
            links: vec![Link::Projection(vec![0, 0, 1, 1])],
            ..Default::default()
        };
        let t = Tower::new(parts).unwrap();
        assert_eq!(t.lift_set(0, &[1]), vec![2, 3]);
        assert_eq!(t.push_down(0, &[qi(1), qi(2), qi(3), qi(4)]), vec![qi(3), qi(7)]);
        let bad = TowerParts {
            levels: vec![l0, level(&["00", "01", "10", "11"], vec![qi(1), qi(1), qi(1), qi(1)])],
            links: vec![Link::Projection(vec![0, 0, 1, 1])],
            ..Default::default()
        };
        assert!(Tower::new(bad).is_err());
    }

    #[test]
    fn inclusion_and_divergence() {
        let l0 = level(&["a", "b"], vec![qi(1), q(1, 2)]);
        let l1 = level(&["a", "b", "c"], vec![qi(1), q(1, 2), q(1, 3)]);
        let mut div = BTreeMap::new();
        div.insert("C".to_string(), vec![q(3, 2), q(11, 6)]);
        let parts = TowerParts {
            levels: vec![l0.clone(), l1.clone()],
            links: vec![Link::Inclusion(vec![0, 1])],
            divergence: div.clone(),
            ..Default::default()
        };
        let t = Tower::new(parts).unwrap();
        assert_eq!(t.project(0, 2), None);
        assert_eq!(t.divergent_classes(1), vec![true]);
        div.insert("C".to_string(), vec![qi(2), qi(2)]);
        let parts = TowerParts {
            levels: vec![l0, l1],
            links: vec![Link::Inclusion(vec![0, 1])],
            divergence: div,
            ..Default::default()
        };
        assert!(Tower::new(parts).is_err());
    }
}
