use std::collections::HashMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{close, Q};

pub type PointId = usize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Float,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(Error::Malformed(format!("unknown mode `{other}`"))),
        }
    }
}

/// Points and the equivalence partition, without a cocycle.
///
/// Point ids are indices into the lexicographically sorted names. Classes are
/// ordered by their minimum point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    names: Vec<String>,
    index: HashMap<String, PointId>,
    class_of: Vec<usize>,
    classes: Vec<Vec<PointId>>,
    class_names: Vec<String>,
}

impl Skeleton {
    pub fn new(points: Vec<String>, classes: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut names = points;
        names.sort();
        for w in names.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicatePoint(w[0].clone()));
            }
        }
        let index: HashMap<String, PointId> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut class_of = vec![usize::MAX; names.len()];
        let mut raw: Vec<(String, Vec<PointId>)> = Vec::new();
        let mut seen_labels = std::collections::HashSet::new();
        for (label, members) in classes {
            if !seen_labels.insert(label.clone()) {
                return Err(Error::Malformed(format!("duplicate class id `{label}`")));
            }
            let mut ids = Vec::with_capacity(members.len());
            for m in members {
                let id = *index.get(&m).ok_or_else(|| Error::UnknownPoint(m.clone()))?;
                if class_of[id] != usize::MAX {
                    return Err(Error::MultiplyAssigned(m));
                }
                class_of[id] = 0;
                ids.push(id);
            }
            if ids.is_empty() {
                continue;
            }
            ids.sort_unstable();
            raw.push((label, ids));
        }
        if let Some(i) = class_of.iter().position(|&c| c == usize::MAX) {
            return Err(Error::Unassigned(names[i].clone()));
        }
        raw.sort_by_key(|(_, ids)| ids[0]);
        let mut classes = Vec::with_capacity(raw.len());
        let mut class_names = Vec::with_capacity(raw.len());
        for (c, (label, ids)) in raw.into_iter().enumerate() {
            for &x in &ids {
                class_of[x] = c;
            }
            classes.push(ids);
            class_names.push(label);
        }
        Ok(Skeleton { names, index, class_of, classes, class_names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, x: PointId) -> &str {
        &self.names[x]
    }

    pub fn id(&self, name: &str) -> Result<PointId> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownPoint(name.to_string()))
    }

    pub fn class_of(&self, x: PointId) -> usize {
        self.class_of[x]
    }

    pub fn classes(&self) -> &[Vec<PointId>] {
        &self.classes
    }

    pub fn class(&self, c: usize) -> &[PointId] {
        &self.classes[c]
    }

    pub fn class_name(&self, c: usize) -> &str {
        &self.class_names[c]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_by_name(&self, label: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == label)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn same_class(&self, x: PointId, y: PointId) -> bool {
        self.class_of[x] == self.class_of[y]
    }

    fn check_same(&self, x: PointId, y: PointId) -> Result<()> {
        if self.same_class(x, y) {
            Ok(())
        } else {
            Err(Error::DifferentClasses(self.names[x].clone(), self.names[y].clone()))
        }
    }
}

/// A cocycle in potential form: ρ(x, y) = w(x) / w(y), with w = 1 at each class basepoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cocycle {
    basepoints: Vec<PointId>,
    potential: Vec<Q>,
}

impl Cocycle {
    /// Normalizes raw positive potentials so each class minimum has potential 1.
    pub fn from_potentials(skel: &Skeleton, raw: Vec<Q>) -> Result<Self> {
        if raw.len() != skel.len() {
            return Err(Error::Malformed(format!("expected {} potentials, got {}", skel.len(), raw.len())));
        }
        for (x, w) in raw.iter().enumerate() {
            if *w <= Q::zero() {
                return Err(Error::NonPositivePotential(skel.name(x).to_string()));
            }
        }
        let basepoints: Vec<PointId> = skel.classes().iter().map(|c| c[0]).collect();
        let mut potential = raw;
        for (c, members) in skel.classes().iter().enumerate() {
            let base = potential[basepoints[c]].clone();
            if !base.is_one() {
                for &x in members {
                    potential[x] = &potential[x] / &base;
                }
            }
        }
        Ok(Cocycle { basepoints, potential })
    }

    pub fn potential(&self, x: PointId) -> &Q {
        &self.potential[x]
    }

    pub fn potentials(&self) -> &[Q] {
        &self.potential
    }

    pub fn basepoint(&self, class: usize) -> PointId {
        self.basepoints[class]
    }

    /// ρ(x, y) without a class check.
    pub fn ratio(&self, x: PointId, y: PointId) -> Q {
        &self.potential[x] / &self.potential[y]
    }
}

/// Converts a redundant edge presentation into potential form.
///
/// Every class must be connected by the supplied edges. Exact mode demands
/// exact agreement on every edge; float mode allows relative error 1e-9.
pub fn cocycle_from_edges(skel: &Skeleton, edges: &[(PointId, PointId, Q)], mode: Mode) -> Result<Cocycle> {
    let n = skel.len();
    let mut adj: Vec<Vec<(PointId, Q)>> = vec![Vec::new(); n];
    for (x, y, r) in edges {
        if *x >= n || *y >= n {
            return Err(Error::Malformed("edge endpoint out of range".into()));
        }
        skel.check_same(*x, *y)?;
        if *r <= Q::zero() {
            return Err(Error::NonPositivePotential(format!("{}->{}", skel.name(*x), skel.name(*y))));
        }
        adj[*x].push((*y, r.recip()));
        adj[*y].push((*x, r.clone()));
    }
    let mut w: Vec<Option<Q>> = vec![None; n];
    for (c, members) in skel.classes().iter().enumerate() {
        let base = members[0];
        w[base] = Some(Q::one());
        let mut stack = vec![base];
        while let Some(u) = stack.pop() {
            let wu = w[u].clone().expect("visited");
            for (v, r) in &adj[u] {
                // adj[u] holds (v, ρ(v, u)), so w(v) = ρ(v, u) * w(u).
                let wv = r * &wu;
                match &w[*v] {
                    None => {
                        w[*v] = Some(wv);
                        stack.push(*v);
                    }
                    Some(existing) => {
                        let ok = match mode {
                            Mode::Exact => *existing == wv,
                            Mode::Float => close(existing, &wv, 1e-9),
                        };
                        if !ok {
                            return Err(Error::CycleInconsistency(skel.name(u).to_string(), skel.name(*v).to_string()));
                        }
                    }
                }
            }
        }
        if members.iter().any(|&x| w[x].is_none()) {
            return Err(Error::Disconnected(skel.class_name(c).to_string()));
        }
    }
    let raw = w.into_iter().map(|v| v.expect("connected")).collect();
    Cocycle::from_potentials(skel, raw)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub image: Vec<PointId>,
}

#[derive(Clone, Copy, Debug)]
pub enum Anchor<'a> {
    Point(PointId),
    Set(&'a [PointId]),
}

/// A finite point space with an equivalence partition and a cocycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    skeleton: Skeleton,
    cocycle: Cocycle,
    generators: Vec<Generator>,
    mode: Mode,
}

/// Name-keyed input for [`build_instance`].
#[derive(Clone, Debug, Default)]
pub struct InstanceSpec {
    pub points: Vec<String>,
    pub classes: Vec<(String, Vec<String>)>,
    pub potentials: Vec<(String, Q)>,
    pub generators: Vec<(String, Vec<(String, String)>)>,
    pub mode: Mode,
}

pub fn build_instance(spec: InstanceSpec) -> Result<Instance> {
    let skel = Skeleton::new(spec.points, spec.classes)?;
    let mut raw: Vec<Option<Q>> = vec![None; skel.len()];
    for (name, w) in spec.potentials {
        let id = skel.id(&name)?;
        if raw[id].is_some() {
            return Err(Error::Malformed(format!("potential for `{name}` given twice")));
        }
        raw[id] = Some(w);
    }
    let raw = raw
        .into_iter()
        .enumerate()
        .map(|(i, w)| w.ok_or_else(|| Error::Malformed(format!("missing potential for `{}`", skel.name(i)))))
        .collect::<Result<Vec<_>>>()?;
    let cocycle = Cocycle::from_potentials(&skel, raw)?;
    let mut gens = Vec::with_capacity(spec.generators.len());
    for (name, pairs) in spec.generators {
        let mut image: Vec<Option<PointId>> = vec![None; skel.len()];
        for (from, to) in pairs {
            let (a, b) = (skel.id(&from)?, skel.id(&to)?);
            image[a] = Some(b);
        }
        let image = image.into_iter().enumerate().map(|(i, v)| v.unwrap_or(i)).collect();
        gens.push(Generator { name, image });
    }
    Instance::new(skel, cocycle, gens, spec.mode)
}

/// Default point names: `a`..`z` for up to 26 points, otherwise zero-padded `p000`.
pub fn point_names(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    } else {
        let width = (n - 1).to_string().len();
        (0..n).map(|i| format!("p{i:0width$}")).collect()
    }
}

impl Instance {
    pub fn new(skeleton: Skeleton, cocycle: Cocycle, generators: Vec<Generator>, mode: Mode) -> Result<Self> {
        if cocycle.potentials().len() != skeleton.len() {
            return Err(Error::Malformed("cocycle does not match point set".into()));
        }
        for g in &generators {
            if g.image.len() != skeleton.len() {
                return Err(Error::NotPermutation(g.name.clone()));
            }
            let mut hit = vec![false; skeleton.len()];
            for (x, &y) in g.image.iter().enumerate() {
                if y >= skeleton.len() || hit[y] {
                    return Err(Error::NotPermutation(g.name.clone()));
                }
                hit[y] = true;
                if !skeleton.same_class(x, y) {
                    return Err(Error::GeneratorCrossesClasses {
                        name: g.name.clone(),
                        from: skeleton.name(x).to_string(),
                        to: skeleton.name(y).to_string(),
                    });
                }
            }
        }
        Ok(Instance { skeleton, cocycle, generators, mode })
    }

    /// Builds from parallel vectors in arbitrary order; generator images index
    /// into that same order.
    pub fn from_parts(
        names: Vec<String>,
        class_labels: Vec<String>,
        potentials: Vec<Q>,
        generators: Vec<(String, Vec<usize>)>,
        mode: Mode,
    ) -> Result<Self> {
        let n = names.len();
        if class_labels.len() != n || potentials.len() != n {
            return Err(Error::Malformed("parallel vectors differ in length".into()));
        }
        let mut classes: Vec<(String, Vec<String>)> = Vec::new();
        let mut pos: HashMap<&str, usize> = HashMap::new();
        for (name, label) in names.iter().zip(&class_labels) {
            let i = *pos.entry(label.as_str()).or_insert_with(|| {
                classes.push((label.clone(), Vec::new()));
                classes.len() - 1
            });
            classes[i].1.push(name.clone());
        }
        let spec = InstanceSpec {
            points: names.clone(),
            classes,
            potentials: names.iter().cloned().zip(potentials).collect(),
            generators: generators
                .into_iter()
                .map(|(g, img)| {
                    let pairs = img.iter().enumerate().map(|(i, &j)| (names[i].clone(), names[j].clone())).collect();
                    (g, pairs)
                })
                .collect(),
            mode,
        };
        build_instance(spec)
    }

    /// One class on points `a`, `b`, ... with the given potentials.
    pub fn single_class(potentials: Vec<Q>) -> Result<Self> {
        let names = point_names(potentials.len());
        let labels = vec!["C".to_string(); names.len()];
        Instance::from_parts(names, labels, potentials, Vec::new(), Mode::Exact)
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.skeleton.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skeleton.is_empty()
    }

    pub fn name(&self, x: PointId) -> &str {
        self.skeleton.name(x)
    }

    pub fn names(&self) -> &[String] {
        self.skeleton.names()
    }

    pub fn id(&self, name: &str) -> Result<PointId> {
        self.skeleton.id(name)
    }

    pub fn ids(&self, names: &[&str]) -> Result<Vec<PointId>> {
        names.iter().map(|n| self.id(n)).collect()
    }

    pub fn class_of(&self, x: PointId) -> usize {
        self.skeleton.class_of(x)
    }

    pub fn classes(&self) -> &[Vec<PointId>] {
        self.skeleton.classes()
    }

    pub fn class(&self, c: usize) -> &[PointId] {
        self.skeleton.class(c)
    }

    pub fn num_classes(&self) -> usize {
        self.skeleton.num_classes()
    }

    pub fn class_name(&self, c: usize) -> &str {
        self.skeleton.class_name(c)
    }

    pub fn same_class(&self, x: PointId, y: PointId) -> bool {
        self.skeleton.same_class(x, y)
    }

    pub fn potential(&self, x: PointId) -> &Q {
        self.cocycle.potential(x)
    }

    pub fn potentials(&self) -> &[Q] {
        self.cocycle.potentials()
    }

    pub fn rho(&self, x: PointId, y: PointId) -> Result<Q> {
        self.skeleton.check_same(x, y)?;
        Ok(self.cocycle.ratio(x, y))
    }

    /// ρ(x, y) for points already known to be equivalent.
    pub fn ratio(&self, x: PointId, y: PointId) -> Q {
        self.cocycle.ratio(x, y)
    }

    /// Σ w over a set.
    pub fn mass(&self, ys: &[PointId]) -> Q {
        ys.iter().fold(Q::zero(), |acc, &y| acc + self.potential(y))
    }

    pub fn class_mass(&self, c: usize) -> Q {
        self.mass(self.class(c))
    }

    /// |Y|^ρ anchored at a point or, relatively, at a non-empty set.
    pub fn rho_size(&self, ys: &[PointId], anchor: Anchor<'_>) -> Result<Q> {
        let z = match anchor {
            Anchor::Point(z) => z,
            Anchor::Set(zs) => *zs.first().ok_or(Error::EmptyAnchor)?,
        };
        for &y in ys {
            self.skeleton.check_same(y, z)?;
        }
        let top = self.mass(ys);
        match anchor {
            Anchor::Point(z) => Ok(top / self.potential(z)),
            Anchor::Set(zs) => {
                for &w in zs {
                    self.skeleton.check_same(w, z)?;
                }
                Ok(top / self.mass(zs))
            }
        }
    }

    /// ρ_γ(x) = ρ(γ·x, x) for generator `g`.
    pub fn rho_gamma(&self, g: usize, x: PointId) -> Q {
        self.ratio(self.generators[g].image[x], x)
    }

    pub fn generator(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    /// The sub-instance on `keep`, which must be a union of classes for the
    /// result to carry the same relation. Generators are dropped. Returns the
    /// sub-instance and, per new point, its id here.
    pub fn restrict(&self, keep: &[PointId]) -> Result<(Instance, Vec<PointId>)> {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let names = keep.iter().map(|&x| self.name(x).to_string()).collect();
        let labels = keep.iter().map(|&x| self.class_name(self.class_of(x)).to_string()).collect();
        let ws = keep.iter().map(|&x| self.potential(x).clone()).collect();
        let sub = Instance::from_parts(names, labels, ws, Vec::new(), self.mode)?;
        Ok((sub, keep))
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }
}

/// True iff f(x)/f(y) = ρ(x, y) on every within-class pair.
pub fn coboundary_check(inst: &Instance, f: &[Q]) -> Result<bool> {
    if f.len() != inst.len() {
        return Err(Error::Malformed("function length differs from point count".into()));
    }
    if let Some(x) = f.iter().position(|v| *v <= Q::zero()) {
        return Err(Error::NonPositiveFunction(inst.name(x).to_string()));
    }
    Ok(inst.classes().iter().all(|members| {
        let b = members[0];
        let c = &f[b] / inst.potential(b);
        members.iter().all(|&x| &f[x] / inst.potential(x) == c)
    }))
}
