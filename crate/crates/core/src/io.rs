//! Canonical JSON files for instances, towers and certificates.
//!
//! Points are written by name in sorted order and every map is a `BTreeMap`, so
//! writing the same value twice gives the same bytes.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::compression::{Bound, CompressionCertificate, CompressionMode, TowerCompression};
use crate::error::{Error, Result};
use crate::measures::{DichotomyCertificate, MeasureCertificate, Payload, WeightedMeasure};
use crate::model::{
    build_instance, Algebra, Domain, FiniteSubrelation, Instance, InstanceSpec, Link, Mode, PointId, SetFamily,
    Structure, Tower, TowerParts,
};
use crate::rational::{fmt_q, from_f64, parse_q, to_f64, Q};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum IntDoc {
    Small(i64),
    Big(String),
}

impl IntDoc {
    fn of(v: &BigInt) -> Self {
        v.to_i64().map(IntDoc::Small).unwrap_or_else(|| IntDoc::Big(v.to_string()))
    }

    fn value(&self) -> Result<BigInt> {
        match self {
            IntDoc::Small(v) => Ok(BigInt::from(*v)),
            IntDoc::Big(s) => s.parse().map_err(|_| Error::Malformed(format!("not an integer: `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum PotentialDoc {
    Exact { num: IntDoc, den: IntDoc },
    Decimal(f64),
    Text(String),
}

impl PotentialDoc {
    fn of(v: &Q, mode: Mode) -> Self {
        match mode {
            Mode::Exact => PotentialDoc::Exact { num: IntDoc::of(v.numer()), den: IntDoc::of(v.denom()) },
            Mode::Float => PotentialDoc::Decimal(to_f64(v)),
        }
    }

    fn value(&self) -> Result<Q> {
        match self {
            PotentialDoc::Exact { num, den } => {
                let d = den.value()?;
                if d == BigInt::from(0) {
                    return Err(Error::Malformed("zero denominator".into()));
                }
                Ok(Q::new(num.value()?, d))
            }
            PotentialDoc::Decimal(x) => from_f64(*x),
            PotentialDoc::Text(s) => parse_q(s),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct LevelDoc {
    points: Vec<String>,
    classes: BTreeMap<String, Vec<String>>,
    potentials: BTreeMap<String, PotentialDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    generators: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LinkKind {
    Projection,
    Inclusion,
}

/// `projection` maps level n+1 onto level n; `inclusion` maps level n into level n+1.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct LinkDoc {
    kind: LinkKind,
    map: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FamilyDoc {
    members: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    union: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TowerDoc {
    /// Levels below the top, lowest first; the top level is the file's own instance.
    levels: Vec<LevelDoc>,
    refinement: Vec<LinkDoc>,
    /// Per level, a block id per point in sorted point order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    subrelations: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    algebras: Vec<BTreeMap<String, Vec<String>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    divergence: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transversals: Option<Vec<BTreeMap<String, usize>>>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    z_like: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    families: BTreeMap<String, FamilyDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    mode: Mode,
    points: Vec<String>,
    classes: BTreeMap<String, Vec<String>>,
    potentials: BTreeMap<String, PotentialDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    generators: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tower: Option<TowerDoc>,
}

fn level_doc(inst: &Instance) -> LevelDoc {
    let names = inst.names();
    let classes = (0..inst.num_classes())
        .map(|c| (inst.class_name(c).to_string(), inst.class(c).iter().map(|&x| names[x].clone()).collect()))
        .collect();
    let potentials =
        (0..inst.len()).map(|x| (names[x].clone(), PotentialDoc::of(inst.potential(x), inst.mode()))).collect();
    let generators = inst
        .generators()
        .iter()
        .map(|g| {
            let pairs = g
                .image
                .iter()
                .enumerate()
                .filter(|(x, y)| x != *y)
                .map(|(x, &y)| (names[x].clone(), names[y].clone()))
                .collect();
            (g.name.clone(), pairs)
        })
        .collect();
    LevelDoc { points: names.to_vec(), classes, potentials, generators }
}

fn level_from(doc: LevelDoc, mode: Mode) -> Result<Instance> {
    let potentials = doc.potentials.iter().map(|(k, v)| Ok((k.clone(), v.value()?))).collect::<Result<_>>()?;
    build_instance(InstanceSpec {
        points: doc.points,
        classes: doc.classes.into_iter().collect(),
        potentials,
        generators: doc.generators.into_iter().map(|(g, m)| (g, m.into_iter().collect())).collect(),
        mode,
    })
}

fn names_of(inst: &Instance, set: &[PointId]) -> Vec<String> {
    set.iter().map(|&x| inst.name(x).to_string()).collect()
}

fn ids_of(inst: &Instance, names: &[String]) -> Result<Vec<PointId>> {
    let mut ids = names.iter().map(|n| inst.id(n)).collect::<Result<Vec<_>>>()?;
    ids.sort_unstable();
    Ok(ids)
}

fn tower_doc(t: &Tower) -> TowerDoc {
    let p = t.parts();
    let top = t.top_index();
    let levels = p.levels[..top].iter().map(level_doc).collect();
    let refinement = p
        .links
        .iter()
        .enumerate()
        .map(|(n, link)| {
            let (lo, hi) = (t.level(n), t.level(n + 1));
            match link {
                Link::Projection(m) => LinkDoc {
                    kind: LinkKind::Projection,
                    map: m.iter().enumerate().map(|(y, &x)| (hi.name(y).to_string(), lo.name(x).to_string())).collect(),
                },
                Link::Inclusion(m) => LinkDoc {
                    kind: LinkKind::Inclusion,
                    map: m.iter().enumerate().map(|(x, &y)| (lo.name(x).to_string(), hi.name(y).to_string())).collect(),
                },
            }
        })
        .collect();
    let all_whole = (0..t.num_levels()).all(|n| *t.subrelation(n) == FiniteSubrelation::whole_classes(t.level(n)));
    let subrelations =
        if all_whole { Vec::new() } else { p.subrelations.iter().map(|f| f.labels().to_vec()).collect() };
    let algebras = if p.algebras.iter().all(|a| a.is_empty()) {
        Vec::new()
    } else {
        p.algebras
            .iter()
            .enumerate()
            .map(|(n, a)| a.iter().map(|(k, set)| (k.clone(), names_of(t.level(n), set))).collect())
            .collect()
    };
    let divergence = p.divergence.iter().map(|(k, v)| (k.clone(), v.iter().map(fmt_q).collect())).collect();
    let transversals = p.transversals.as_ref().map(|all| {
        all.iter()
            .enumerate()
            .map(|(n, tiers)| tiers.iter().enumerate().map(|(x, &k)| (t.level(n).name(x).to_string(), k)).collect())
            .collect()
    });
    let families = p
        .families
        .iter()
        .map(|(k, f)| (k.clone(), FamilyDoc { members: f.members.clone(), union: f.union.clone() }))
        .collect();
    TowerDoc {
        levels,
        refinement,
        subrelations,
        algebras,
        divergence,
        transversals,
        z_like: p.z_like.clone(),
        families,
    }
}

fn tower_from(doc: TowerDoc, top: Instance, mode: Mode) -> Result<Tower> {
    let mut levels = doc.levels.into_iter().map(|l| level_from(l, mode)).collect::<Result<Vec<_>>>()?;
    levels.push(top);
    if doc.refinement.len() + 1 != levels.len() {
        return Err(Error::Malformed(format!("{} levels need {} refinement maps", levels.len(), levels.len() - 1)));
    }
    let mut links = Vec::with_capacity(doc.refinement.len());
    for (n, l) in doc.refinement.iter().enumerate() {
        let (lo, hi) = (&levels[n], &levels[n + 1]);
        let (src, dst) = match l.kind {
            LinkKind::Projection => (hi, lo),
            LinkKind::Inclusion => (lo, hi),
        };
        let mut map = vec![usize::MAX; src.len()];
        for (a, b) in &l.map {
            map[src.id(a)?] = dst.id(b)?;
        }
        if let Some(x) = map.iter().position(|&v| v == usize::MAX) {
            return Err(Error::Malformed(format!("refinement {n} leaves `{}` unmapped", src.name(x))));
        }
        links.push(match l.kind {
            LinkKind::Projection => Link::Projection(map),
            LinkKind::Inclusion => Link::Inclusion(map),
        });
    }
    let subrelations = doc
        .subrelations
        .iter()
        .zip(&levels)
        .map(|(labels, inst)| FiniteSubrelation::from_labels(inst, labels))
        .collect::<Result<Vec<_>>>()?;
    let algebras = doc
        .algebras
        .iter()
        .zip(&levels)
        .map(|(a, inst)| a.iter().map(|(k, set)| Ok((k.clone(), ids_of(inst, set)?))).collect::<Result<Algebra>>())
        .collect::<Result<Vec<_>>>()?;
    let divergence = doc
        .divergence
        .iter()
        .map(|(k, v)| Ok((k.clone(), v.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?)))
        .collect::<Result<_>>()?;
    let transversals = match doc.transversals {
        None => None,
        Some(all) => Some(
            all.iter()
                .zip(&levels)
                .map(|(m, inst)| {
                    let mut tiers = vec![None; inst.len()];
                    for (name, &k) in m {
                        tiers[inst.id(name)?] = Some(k);
                    }
                    tiers
                        .into_iter()
                        .enumerate()
                        .map(|(x, k)| k.ok_or_else(|| Error::Malformed(format!("no tier for `{}`", inst.name(x)))))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let families =
        doc.families.into_iter().map(|(k, f)| (k, SetFamily { members: f.members, union: f.union })).collect();
    Tower::new(TowerParts {
        levels,
        links,
        subrelations,
        algebras,
        divergence,
        transversals,
        z_like: doc.z_like,
        families,
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn instance_to_json(inst: &Instance) -> Result<String> {
    let top = level_doc(inst);
    to_json(&InstanceFile {
        version: FORMAT_VERSION,
        mode: inst.mode(),
        points: top.points,
        classes: top.classes,
        potentials: top.potentials,
        generators: top.generators,
        tower: None,
    })
}

pub fn tower_to_json(t: &Tower) -> Result<String> {
    let top = level_doc(t.top());
    to_json(&InstanceFile {
        version: FORMAT_VERSION,
        mode: t.top().mode(),
        points: top.points,
        classes: top.classes,
        potentials: top.potentials,
        generators: top.generators,
        tower: Some(tower_doc(t)),
    })
}

pub fn structure_to_json(s: &Structure) -> Result<String> {
    match s {
        Structure::Instance(i) => instance_to_json(i),
        Structure::Tower(t) => tower_to_json(t),
    }
}

/// Parses an instance or tower file; `mode` overrides the file's own mode.
pub fn structure_from_json(text: &str, mode: Option<Mode>) -> Result<Structure> {
    let f: InstanceFile = serde_json::from_str(text)?;
    if f.version != FORMAT_VERSION {
        return Err(Error::Malformed(format!("unsupported version {}", f.version)));
    }
    let mode = mode.unwrap_or(f.mode);
    let top = level_from(
        LevelDoc { points: f.points, classes: f.classes, potentials: f.potentials, generators: f.generators },
        mode,
    )?;
    match f.tower {
        None => Ok(Structure::Instance(top)),
        Some(doc) => Ok(Structure::Tower(tower_from(doc, top, mode)?)),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct LimitDoc {
    value: String,
    bound: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MeasureLevelDoc {
    level: usize,
    weights: BTreeMap<String, String>,
}

/// Quotient-mode maps are keyed by the least point of each block.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct CompressionLevelDoc {
    level: usize,
    mode: CompressionMode,
    map: BTreeMap<String, Option<String>>,
    #[serde(rename = "F")]
    f: Vec<Vec<String>>,
    bound: usize,
    strict_set: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scope: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum CertificateBody {
    Measure { levels: Vec<MeasureLevelDoc>, limits: BTreeMap<String, LimitDoc> },
    Compression { levels: Vec<CompressionLevelDoc> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CertificateFile {
    version: u32,
    route: String,
    #[serde(flatten)]
    body: CertificateBody,
}

fn level_instance<'a>(domain: Domain<'a>, n: usize) -> Result<&'a Instance> {
    match domain {
        Domain::Instance(i) if n == 0 => Ok(i),
        Domain::Tower(t) if n < t.num_levels() => Ok(t.level(n)),
        _ => Err(Error::Malformed(format!("certificate cites missing level {n}"))),
    }
}

fn compression_doc(inst: &Instance, n: usize, c: &CompressionCertificate) -> CompressionLevelDoc {
    let f = &c.subrelation;
    let unit_name = |u: usize| match c.mode {
        CompressionMode::Quotient => inst.name(f.block(u)[0]).to_string(),
        _ => inst.name(u).to_string(),
    };
    CompressionLevelDoc {
        level: n,
        mode: c.mode,
        map: c.map.iter().enumerate().map(|(u, v)| (unit_name(u), v.map(unit_name))).collect(),
        f: f.blocks().iter().map(|b| names_of(inst, b)).collect(),
        bound: c.bound.limit(),
        strict_set: names_of(inst, &c.strict_set),
        scope: c.scope.as_ref().map(|s| s.iter().map(|&k| inst.class_name(k).to_string()).collect()),
    }
}

fn compression_from(inst: &Instance, d: &CompressionLevelDoc) -> Result<CompressionCertificate> {
    let blocks = d.f.iter().map(|b| ids_of(inst, b)).collect::<Result<Vec<_>>>()?;
    let f = FiniteSubrelation::from_blocks(inst, blocks)?;
    let unit = |name: &str| -> Result<usize> {
        let x = inst.id(name)?;
        match d.mode {
            CompressionMode::Quotient => {
                let b = f.block_of(x);
                if f.block(b)[0] != x {
                    return Err(Error::Malformed(format!("`{name}` is not the least point of its block")));
                }
                Ok(b)
            }
            _ => Ok(x),
        }
    };
    let units = match d.mode {
        CompressionMode::Quotient => f.len(),
        _ => inst.len(),
    };
    let mut map = vec![None; units];
    let mut seen = vec![false; units];
    for (k, v) in &d.map {
        let u = unit(k)?;
        seen[u] = true;
        map[u] = v.as_deref().map(unit).transpose()?;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Malformed(format!("level {}: map is not total", d.level)));
    }
    let scope = match &d.scope {
        None => None,
        Some(names) => Some(
            names
                .iter()
                .map(|c| {
                    (0..inst.num_classes())
                        .find(|&k| inst.class_name(k) == c)
                        .ok_or_else(|| Error::Malformed(format!("unknown class `{c}`")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    // The strict set is kept as written so that verification can compare it.
    Ok(CompressionCertificate {
        mode: d.mode,
        subrelation: f,
        map,
        bound: Bound::from_count(d.bound),
        strict_set: ids_of(inst, &d.strict_set)?,
        scope,
    })
}

pub fn certificate_to_json(domain: Domain<'_>, cert: &DichotomyCertificate) -> Result<String> {
    let body = match &cert.payload {
        Payload::Measure(m) => {
            let levels = m
                .levels
                .iter()
                .map(|(n, mu)| {
                    let inst = level_instance(domain, *n)?;
                    let weights =
                        mu.weights.iter().enumerate().map(|(x, w)| (inst.name(x).to_string(), fmt_q(w))).collect();
                    Ok(MeasureLevelDoc { level: *n, weights })
                })
                .collect::<Result<Vec<_>>>()?;
            let limits =
                m.limits.iter().map(|(k, (v, b))| (k.clone(), LimitDoc { value: fmt_q(v), bound: fmt_q(b) })).collect();
            CertificateBody::Measure { levels, limits }
        }
        Payload::Compression(tc) => CertificateBody::Compression {
            levels: tc
                .levels
                .iter()
                .map(|(n, c)| Ok(compression_doc(level_instance(domain, *n)?, *n, c)))
                .collect::<Result<Vec<_>>>()?,
        },
    };
    to_json(&CertificateFile { version: FORMAT_VERSION, route: cert.route.clone(), body })
}

pub fn certificate_from_json(domain: Domain<'_>, text: &str) -> Result<DichotomyCertificate> {
    let f: CertificateFile = serde_json::from_str(text)?;
    if f.version != FORMAT_VERSION {
        return Err(Error::Malformed(format!("unsupported version {}", f.version)));
    }
    let payload = match f.body {
        CertificateBody::Measure { levels, limits } => {
            let levels = levels
                .iter()
                .map(|d| {
                    let inst = level_instance(domain, d.level)?;
                    let mut w = vec![None; inst.len()];
                    for (k, v) in &d.weights {
                        w[inst.id(k)?] = Some(parse_q(v)?);
                    }
                    let w = w
                        .into_iter()
                        .enumerate()
                        .map(|(x, v)| v.ok_or_else(|| Error::Malformed(format!("no weight for `{}`", inst.name(x)))))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((d.level, WeightedMeasure { weights: w }))
                })
                .collect::<Result<Vec<_>>>()?;
            let limits = limits
                .into_iter()
                .map(|(k, l)| Ok((k, (parse_q(&l.value)?, parse_q(&l.bound)?))))
                .collect::<Result<_>>()?;
            Payload::Measure(MeasureCertificate { levels, limits })
        }
        CertificateBody::Compression { levels } => Payload::Compression(TowerCompression {
            levels: levels
                .iter()
                .map(|d| Ok((d.level, compression_from(level_instance(domain, d.level)?, d)?)))
                .collect::<Result<Vec<_>>>()?,
        }),
    };
    Ok(DichotomyCertificate { route: f.route, payload })
}

pub fn read_structure(path: &std::path::Path, mode: Option<Mode>) -> Result<Structure> {
    structure_from_json(&std::fs::read_to_string(path)?, mode)
}
