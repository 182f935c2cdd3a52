use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;

use super::{preimage_counts, CompressionCertificate, CompressionMode, TowerCompression};
use crate::error::{Error, Result};
use crate::model::{Instance, Link, PointId, Tower};
use crate::rational::{fmt_q, Q};

/// Whether units may map beyond the truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EscapePolicy {
    Forbid,
    /// Per class index: escapes allowed.
    Classes(Vec<bool>),
}

impl EscapePolicy {
    fn allows(&self, class: usize) -> bool {
        match self {
            EscapePolicy::Forbid => false,
            EscapePolicy::Classes(v) => v.get(class).copied().unwrap_or(false),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    OutsideE { unit: String, image: String },
    FibreTooLarge { unit: String, size: String },
    NotComplete { class: String },
    BoundExceeded { unit: String, count: usize },
    EscapeForbidden { unit: String },
    StrictSetMismatch,
    ScopeMoved { unit: String },
    Inconsistent { level: usize, detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutsideE { unit, image } => write!(f, "`{unit}` maps to `{image}` outside its class"),
            Violation::FibreTooLarge { unit, size } => write!(f, "fibre over `{unit}` has rho-size {size} > 1"),
            Violation::NotComplete { class } => write!(f, "strict set misses class `{class}`"),
            Violation::BoundExceeded { unit, count } => write!(f, "`{unit}` has {count} preimages, over the bound"),
            Violation::EscapeForbidden { unit } => write!(f, "`{unit}` escapes in a class without declared divergence"),
            Violation::StrictSetMismatch => write!(f, "declared strict set differs from the computed one"),
            Violation::ScopeMoved { unit } => write!(f, "`{unit}` moves outside the certificate scope"),
            Violation::Inconsistent { level, detail } => write!(f, "levels {level} and {}: {detail}", level + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressionReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub strict_set: Vec<PointId>,
    /// Units whose image lies beyond the truncation.
    pub escapes: Vec<usize>,
    /// True when validity rests on escapes licensed by divergence declarations.
    pub conditional: bool,
    pub max_preimages: usize,
}

fn unit_name(inst: &Instance, cert: &CompressionCertificate, u: usize) -> String {
    match cert.mode {
        CompressionMode::Quotient => inst.name(cert.subrelation.block(u)[0]).to_string(),
        _ => inst.name(u).to_string(),
    }
}

pub fn verify_compression(
    inst: &Instance,
    cert: &CompressionCertificate,
    policy: &EscapePolicy,
) -> Result<CompressionReport> {
    cert.check_shape(inst)?;
    let mut violations = Vec::new();
    let class_of_unit = |u: usize| inst.class_of(cert.unit_points(u)[0]);
    let in_scope = |c: usize| cert.scope.as_ref().is_none_or(|s| s.contains(&c));
    let units = cert.num_units();

    for (u, m) in cert.map.iter().enumerate() {
        let c = class_of_unit(u);
        match m {
            Some(t) => {
                if class_of_unit(*t) != c {
                    violations
                        .push(Violation::OutsideE { unit: unit_name(inst, cert, u), image: unit_name(inst, cert, *t) });
                } else if !in_scope(c) && *t != u {
                    violations.push(Violation::ScopeMoved { unit: unit_name(inst, cert, u) });
                }
            }
            None => {
                if !in_scope(c) {
                    violations.push(Violation::ScopeMoved { unit: unit_name(inst, cert, u) });
                } else if !policy.allows(c) {
                    violations.push(Violation::EscapeForbidden { unit: unit_name(inst, cert, u) });
                }
            }
        }
    }

    let fib = cert.fibres(inst);
    let one = Q::one();
    let fibre_units: Vec<PointId> = match cert.mode {
        CompressionMode::Plain => (0..inst.len()).collect(),
        _ => cert.subrelation.blocks().iter().map(|b| b[0]).collect(),
    };
    for (i, size) in fib.iter().enumerate() {
        if *size > one {
            violations
                .push(Violation::FibreTooLarge { unit: inst.name(fibre_units[i]).to_string(), size: fmt_q(size) });
        }
    }

    let counts = preimage_counts(units, &cert.map);
    let max_preimages = counts.iter().copied().max().unwrap_or(0);
    for (u, &k) in counts.iter().enumerate() {
        if k > cert.bound.limit() {
            violations.push(Violation::BoundExceeded { unit: unit_name(inst, cert, u), count: k });
        }
    }

    let strict_set = cert.computed_strict_set(inst);
    let mut has_strict = vec![false; inst.num_classes()];
    for &x in &strict_set {
        has_strict[inst.class_of(x)] = true;
    }
    for c in 0..inst.num_classes() {
        if in_scope(c) && !has_strict[c] {
            violations.push(Violation::NotComplete { class: inst.class_name(c).to_string() });
        }
    }
    if let Some(s) = cert.scope.as_ref() {
        if s.is_empty() {
            violations.push(Violation::NotComplete { class: "<empty scope>".into() });
        }
    }
    let mut declared = cert.strict_set.clone();
    declared.sort_unstable();
    if declared != strict_set {
        violations.push(Violation::StrictSetMismatch);
    }

    let escapes = cert.escapes();
    let valid = violations.is_empty();
    Ok(CompressionReport {
        valid,
        conditional: valid && !escapes.is_empty(),
        violations,
        strict_set,
        escapes,
        max_preimages,
    })
}

/// Verifies a certificate for tower level `n`, licensing escapes by the tower's
/// divergence declarations.
pub fn verify_on_tower(t: &Tower, n: usize, cert: &CompressionCertificate) -> Result<CompressionReport> {
    if n >= t.num_levels() {
        return Err(Error::Malformed(format!("level {n} does not exist")));
    }
    verify_compression(t.level(n), cert, &EscapePolicy::Classes(t.divergent_classes(n)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerCompressionReport {
    pub valid: bool,
    pub levels: Vec<(usize, CompressionReport)>,
    pub consistency: Vec<Violation>,
}

/// Verifies every certified level and the agreement of consecutive certified levels.
///
/// Along a projection, the image of each point must project into the image of
/// its projection; along an inclusion, the image of each included point must
/// contain the included image. A point resolved at one level must stay resolved
/// at the next.
pub fn verify_tower_compression(t: &Tower, tc: &TowerCompression) -> Result<TowerCompressionReport> {
    if tc.levels.is_empty() {
        return Err(Error::Malformed("compression certifies no level".into()));
    }
    if tc.levels.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::Malformed("certified levels must be strictly ascending".into()));
    }
    let mut reports = Vec::new();
    for (n, cert) in &tc.levels {
        reports.push((*n, verify_on_tower(t, *n, cert)?));
    }
    let mut consistency = Vec::new();
    for w in tc.levels.windows(2) {
        let ((n, lo), (m, hi)) = (&w[0], &w[1]);
        if *m != n + 1 {
            continue;
        }
        check_link(t, *n, lo, hi, &mut consistency);
    }
    let valid = consistency.is_empty() && reports.iter().all(|(_, r)| r.valid);
    Ok(TowerCompressionReport { valid, levels: reports, consistency })
}

fn check_link(t: &Tower, n: usize, lo: &CompressionCertificate, hi: &CompressionCertificate, out: &mut Vec<Violation>) {
    for (_, detail) in link_conflicts(t, n, lo, hi) {
        out.push(Violation::Inconsistent { level: n, detail });
    }
}

/// Level-n points whose resolved image is not carried to level n+1, with a description.
pub(crate) fn link_conflicts(
    t: &Tower,
    n: usize,
    lo: &CompressionCertificate,
    hi: &CompressionCertificate,
) -> Vec<(PointId, String)> {
    let (lo_inst, hi_inst) = (t.level(n), t.level(n + 1));
    let mut out = Vec::new();
    match t.link(n) {
        Link::Projection(pi) => {
            for x in 0..hi_inst.len() {
                let Some(below) = lo.resolve(pi[x]) else { continue };
                match hi.resolve(x) {
                    None => out.push((
                        pi[x],
                        format!("`{}` escapes although `{}` is resolved", hi_inst.name(x), lo_inst.name(pi[x])),
                    )),
                    Some(above) => {
                        if above.iter().any(|y| below.binary_search(&pi[*y]).is_err()) {
                            out.push((
                                pi[x],
                                format!("image of `{}` does not project into the image below", hi_inst.name(x)),
                            ));
                        }
                    }
                }
            }
        }
        Link::Inclusion(iota) => {
            for x in 0..lo_inst.len() {
                let Some(below) = lo.resolve(x) else { continue };
                match hi.resolve(iota[x]) {
                    None => out.push((x, format!("`{}` escapes although it is resolved below", lo_inst.name(x)))),
                    Some(above) => {
                        if below.iter().any(|y| above.binary_search(&iota[*y]).is_err()) {
                            out.push((x, format!("image of `{}` is not carried upward", lo_inst.name(x))));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Mass bookkeeping of a certificate against a measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MassBalance {
    pub total: Q,
    /// Σ over fibre units b of μ(b)·|φ⁻¹(b)|^ρ_b.
    pub retained: Q,
    /// μ of the escaping units.
    pub escaped: Q,
    /// total − retained: the mass the strict fibres give up.
    pub deficit: Q,
}

/// For a ρ-invariant μ the identity `retained + escaped == total` holds exactly,
/// so a total map with a strict fibre of positive mass must overload another fibre.
pub fn mass_balance(inst: &Instance, mu: &[Q], cert: &CompressionCertificate) -> Result<MassBalance> {
    cert.check_shape(inst)?;
    if mu.len() != inst.len() {
        return Err(Error::Malformed("measure length differs from point count".into()));
    }
    let fib = cert.fibres(inst);
    let total: Q = mu.iter().fold(Q::zero(), |a, v| a + v);
    let retained = match cert.mode {
        CompressionMode::Plain => (0..inst.len()).fold(Q::zero(), |a, y| a + &mu[y] * &fib[y]),
        _ => cert.subrelation.blocks().iter().enumerate().fold(Q::zero(), |a, (b, pts)| {
            let m = pts.iter().fold(Q::zero(), |s, &x| s + &mu[x]);
            a + m * &fib[b]
        }),
    };
    let escaped = cert.escapes().into_iter().flat_map(|u| cert.unit_points(u)).fold(Q::zero(), |a, x| a + &mu[x]);
    let deficit = &total - &retained;
    Ok(MassBalance { total, retained, escaped, deficit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compression::Bound;
    use crate::model::FiniteSubrelation;
    use crate::rational::{q, qi};

    fn constant3() -> Instance {
        Instance::single_class(vec![qi(1); 3]).unwrap()
    }

    #[test]
    fn identity_is_not_a_compression() {
        let inst = Instance::single_class(vec![qi(1), q(1, 2), q(1, 3)]).unwrap();
        let cert = CompressionCertificate::plain(&inst, (0..3).map(Some).collect()).unwrap();
        let r = verify_compression(&inst, &cert, &EscapePolicy::Forbid).unwrap();
        assert!(!r.valid);
        assert!(r.strict_set.is_empty());
        assert!(r.violations.contains(&Violation::NotComplete { class: "C".into() }));
    }

    #[test]
    fn constant_map_overloads() {
        let inst = constant3();
        let cert = CompressionCertificate::plain(&inst, vec![Some(0); 3]).unwrap();
        let r = verify_compression(&inst, &cert, &EscapePolicy::Forbid).unwrap();
        assert!(r.violations.contains(&Violation::FibreTooLarge { unit: "a".into(), size: "3".into() }));
    }

    #[test]
    fn escapes_need_a_licence() {
        let inst = constant3();
        let cert = CompressionCertificate::plain(&inst, vec![Some(1), Some(2), None]).unwrap();
        let r = verify_compression(&inst, &cert, &EscapePolicy::Forbid).unwrap();
        assert!(!r.valid);
        let r = verify_compression(&inst, &cert, &EscapePolicy::Classes(vec![true])).unwrap();
        assert!(r.valid && r.conditional);
        assert_eq!(r.strict_set, vec![0]);
    }

    #[test]
    fn tampered_strict_set_is_reported() {
        let inst = constant3();
        let mut cert = CompressionCertificate::plain(&inst, vec![Some(1), Some(2), None]).unwrap();
        cert.strict_set = vec![0, 1];
        let r = verify_compression(&inst, &cert, &EscapePolicy::Classes(vec![true])).unwrap();
        assert_eq!(r.violations, vec![Violation::StrictSetMismatch]);
    }

    #[test]
    fn dangling_map_is_malformed() {
        let inst = constant3();
        let cert = CompressionCertificate {
            mode: CompressionMode::Plain,
            subrelation: FiniteSubrelation::identity(3),
            map: vec![Some(7), None, None],
            bound: Bound::Injective,
            strict_set: vec![],
            scope: None,
        };
        assert!(verify_compression(&inst, &cert, &EscapePolicy::Forbid).is_err());
    }

    #[test]
    fn mass_identity_for_invariant_measure() {
        let inst = Instance::single_class(vec![qi(1), q(1, 2), q(1, 3)]).unwrap();
        let mu = vec![q(6, 11), q(3, 11), q(2, 11)];
        let cert = CompressionCertificate::plain(&inst, vec![Some(1), Some(1), None]).unwrap();
        let mb = mass_balance(&inst, &mu, &cert).unwrap();
        assert_eq!(&mb.retained + &mb.escaped, mb.total);
    }
}
