use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::limit::{tower_limit, LimitStatus, Schedule};
use super::{
    class_measure, defect_to_compression, describe_pair, mixed_class_measure, verify_invariance, DefectEvidence,
    WeightedMeasure,
};
use crate::compression::{
    mass_balance, strictly_increasing_injection, verify_compression, verify_tower_compression, CompressionCertificate,
    EscapePolicy, TowerCompression,
};
use crate::error::{Error, Result};
use crate::model::{Domain, Instance, Link, Tower};
use crate::rational::{abs, fmt_q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Measure,
    Compression,
}

/// Per-level probability measures and limit values on the top algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureCertificate {
    pub levels: Vec<(usize, WeightedMeasure)>,
    /// Set name to (declared limit value, error bound).
    pub limits: BTreeMap<String, (Q, Q)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Measure(MeasureCertificate),
    Compression(TowerCompression),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DichotomyCertificate {
    /// Which construction produced the payload.
    pub route: String,
    pub payload: Payload,
}

impl DichotomyCertificate {
    pub fn kind(&self) -> CertificateKind {
        match self.payload {
            Payload::Measure(_) => CertificateKind::Measure,
            Payload::Compression(_) => CertificateKind::Compression,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    /// Convex weights over the classes of a finite instance or of the top level.
    pub class_weights: Option<Vec<Q>>,
    pub schedule: Schedule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub valid: bool,
    /// True when validity rests on divergence declarations.
    pub conditional: bool,
    pub messages: Vec<String>,
}

fn top_measure(inst: &Instance, opts: &SolveOptions) -> Result<WeightedMeasure> {
    match &opts.class_weights {
        Some(l) => mixed_class_measure(inst, l),
        None => class_measure(inst, 0),
    }
}

/// Returns exactly one certificate kind, verified, or an explicit inconclusive status.
///
/// Towers are tried in order: a certified additivity defect, an injection on
/// transversal tiers under divergence declarations, then level-consistent limits.
pub fn dichotomy_solve(domain: Domain<'_>, opts: &SolveOptions) -> Result<DichotomyCertificate> {
    let cert = match domain {
        Domain::Instance(inst) => DichotomyCertificate {
            route: "class-measure".into(),
            payload: Payload::Measure(MeasureCertificate {
                levels: vec![(0, top_measure(inst, opts)?)],
                limits: BTreeMap::new(),
            }),
        },
        Domain::Tower(t) => solve_tower(t, opts)?,
    };
    let report = verify_certificate(domain, &cert)?;
    if !report.valid {
        return Err(Error::Postcondition(format!("solver output fails its verifier: {}", report.messages.join("; "))));
    }
    Ok(cert)
}

fn solve_tower(t: &Tower, opts: &SolveOptions) -> Result<DichotomyCertificate> {
    let mut reasons = Vec::new();
    let has_algebras = (0..t.num_levels()).any(|n| !t.algebra(n).is_empty());
    let limit = if has_algebras { Some(tower_limit(t, &opts.schedule)?) } else { None };

    if let Some(defect) = limit.as_ref().and_then(|l| l.certified_defect()) {
        match defect_to_compression(t, &DefectEvidence::from(defect)) {
            Ok(out) => {
                return Ok(DichotomyCertificate {
                    route: "additivity-defect".into(),
                    payload: Payload::Compression(out.compression),
                })
            }
            Err(e) => reasons.push(format!("defect conversion: {e}")),
        }
    } else if !t.families().is_empty() {
        reasons.push("no family shows a certified additivity defect".into());
    }

    let top = t.top_index();
    let all_divergent = t.divergent_classes(top).iter().all(|&d| d);
    if all_divergent && t.transversal(top).is_some() {
        match strictly_increasing_injection(Domain::Tower(t), None) {
            Ok(inj) => {
                let tc = TowerCompression { levels: vec![(top, inj.certificate)] };
                if verify_tower_compression(t, &tc)?.valid {
                    return Ok(DichotomyCertificate { route: "injection".into(), payload: Payload::Compression(tc) });
                }
                reasons.push("injection certificate failed verification".into());
            }
            Err(e) => reasons.push(format!("injection: {e}")),
        }
    } else {
        reasons.push("no divergence declarations with transversal tiers".into());
    }

    match &limit {
        None => reasons.push("tower has no algebras to take limits on".into()),
        Some(l) if !l.all_declared() => {
            if l.limits.values().all(|s| s.value().is_none()) {
                reasons.push("no algebra set is sampled at two levels".into());
            }
            for (name, s) in &l.limits {
                if let LimitStatus::Inconclusive(why) = s {
                    reasons.push(format!("limit of `{name}`: {why}"));
                }
            }
        }
        Some(l) => {
            let mut levels = vec![(top, top_measure(t.top(), opts)?)];
            for n in (0..top).rev() {
                let above = &levels.last().expect("non-empty").1;
                levels.push((n, WeightedMeasure { weights: t.push_down(n, &above.weights) }));
            }
            levels.reverse();
            if let Some((n, _)) = levels.iter().find(|(_, m)| !m.is_probability()) {
                reasons.push(format!("invariant measure loses mass on the way down to level {n}"));
            } else {
                let limits = l
                    .limits
                    .iter()
                    .filter_map(|(k, s)| match s {
                        LimitStatus::Declared { value, bound, .. } => Some((k.clone(), (value.clone(), bound.clone()))),
                        _ => None,
                    })
                    .collect();
                return Ok(DichotomyCertificate {
                    route: "tower-limit".into(),
                    payload: Payload::Measure(MeasureCertificate { levels, limits }),
                });
            }
        }
    }
    Err(Error::Inconclusive(reasons))
}

/// Re-verifies a certificate from scratch.
pub fn verify_certificate(domain: Domain<'_>, cert: &DichotomyCertificate) -> Result<VerificationReport> {
    let mut messages = Vec::new();
    let mut conditional = false;
    match (&cert.payload, domain) {
        (Payload::Measure(m), Domain::Instance(inst)) => {
            if m.levels.len() != 1 || m.levels[0].0 != 0 {
                return Err(Error::Malformed("a finite instance takes exactly one level-0 measure".into()));
            }
            check_probability(inst, &m.levels[0].1, 0, &mut messages)?;
        }
        (Payload::Measure(m), Domain::Tower(t)) => {
            let expected: Vec<usize> = (0..t.num_levels()).collect();
            if m.levels.iter().map(|(n, _)| *n).collect::<Vec<_>>() != expected {
                return Err(Error::Malformed("a tower measure needs one measure per level, in order".into()));
            }
            for (n, mu) in &m.levels {
                check_probability(t.level(*n), mu, *n, &mut messages)?;
            }
            for n in 0..t.top_index() {
                if t.push_down(n, &m.levels[n + 1].1.weights) != m.levels[n].1.weights {
                    messages.push(format!("levels {n} and {} are not consistent", n + 1));
                }
            }
            let top = t.top_index();
            let mu = &m.levels[top].1;
            for (name, (value, bound)) in &m.limits {
                let set = t
                    .algebra(top)
                    .get(name)
                    .ok_or_else(|| Error::Malformed(format!("limit for unknown set `{name}`")))?;
                let got = mu.of(set);
                if abs(&(&got - value)) > *bound {
                    messages.push(format!(
                        "limit of `{name}` is {} but the top level gives {} beyond bound {}",
                        fmt_q(value),
                        fmt_q(&got),
                        fmt_q(bound)
                    ));
                }
            }
        }
        (Payload::Compression(tc), Domain::Tower(t)) => {
            let r = verify_tower_compression(t, tc)?;
            messages.extend(r.consistency.iter().map(|v| v.to_string()));
            for (n, lr) in &r.levels {
                messages.extend(lr.violations.iter().map(|v| format!("level {n}: {v}")));
                conditional |= lr.conditional;
            }
        }
        (Payload::Compression(tc), Domain::Instance(inst)) => {
            if tc.levels.len() != 1 || tc.levels[0].0 != 0 {
                return Err(Error::Malformed("a finite instance takes exactly one level-0 compression".into()));
            }
            let r = verify_compression(inst, &tc.levels[0].1, &EscapePolicy::Forbid)?;
            messages.extend(r.violations.iter().map(|v| v.to_string()));
        }
    }
    Ok(VerificationReport { valid: messages.is_empty(), conditional: conditional && messages.is_empty(), messages })
}

fn check_probability(inst: &Instance, mu: &WeightedMeasure, n: usize, messages: &mut Vec<String>) -> Result<()> {
    if mu.len() != inst.len() {
        return Err(Error::Malformed(format!("level {n}: measure length differs from point count")));
    }
    if mu.weights.iter().any(|w| *w < Q::zero()) {
        messages.push(format!("level {n}: negative weight"));
    }
    if !mu.is_probability() {
        messages.push(format!("level {n}: mass {} is not 1", fmt_q(&mu.mass())));
    }
    let inv = verify_invariance(inst, mu, None)?;
    messages.extend(inv.violations.iter().take(3).map(|&p| format!("level {n}: {}", describe_pair(inst, mu, p))));
    Ok(())
}

/// Uses an invariant probability μ to show a candidate cannot be a compression.
///
/// For invariant μ, μ(X) = Σ_b μ(b)·|φ⁻¹(b)|^ρ_b + μ(escaping units) exactly.
/// A total map with fibres ≤ 1 therefore has strict fibres of μ-mass zero, so
/// the class carrying μ has no strict fibre. Returns the reason when refuted,
/// `None` when escapes leave the identity undecided.
pub fn refute_compression(
    inst: &Instance,
    mu: &WeightedMeasure,
    cert: &CompressionCertificate,
) -> Result<Option<String>> {
    if !verify_invariance(inst, mu, None)?.valid {
        return Err(Error::Precondition("refutation needs an invariant measure".into()));
    }
    let bal = mass_balance(inst, &mu.weights, cert)?;
    if &bal.retained + &bal.escaped != bal.total {
        return Err(Error::Postcondition("mass identity fails for an invariant measure".into()));
    }
    let fib = cert.fibres(inst);
    let one = Q::one();
    if let Some(v) = fib.iter().find(|v| **v > one) {
        return Ok(Some(format!("a fibre has rho-size {} > 1", fmt_q(v))));
    }
    if !cert.escapes().is_empty() {
        return Ok(None);
    }
    debug_assert!(bal.deficit.is_zero());
    let strict = cert.computed_strict_set(inst);
    let strict_mass = strict.iter().fold(Q::zero(), |a, &x| a + &mu.weights[x]);
    if !strict_mass.is_zero() {
        return Err(Error::Postcondition("strict fibres carry mass although the deficit is zero".into()));
    }
    let c = (0..inst.num_classes())
        .find(|&c| inst.class(c).iter().any(|&x| !mu.weights[x].is_zero()))
        .ok_or_else(|| Error::Precondition("measure is null".into()))?;
    Ok(Some(format!("deficit is 0, so strict fibres are mu-null and class `{}` has none", inst.class_name(c))))
}

/// Shows that no level-consistent invariant probability survives next to a
/// tower compression.
///
/// At each certified level, every extreme invariant probability must send mass
/// through escaping units, while the invariant probabilities of the adjacent
/// upper level restrict to mass below 1. Returns the reason when refuted.
pub fn refute_level_measures(t: &Tower, tc: &TowerCompression) -> Result<Option<String>> {
    for (n, cert) in &tc.levels {
        let n = *n;
        let inst = t.level(n);
        let scope: Vec<usize> = cert.scope.clone().unwrap_or_else(|| (0..inst.num_classes()).collect());
        let mut leaks = true;
        for &c in &scope {
            let mu = class_measure(inst, c)?;
            let bal = mass_balance(inst, &mu.weights, cert)?;
            if &bal.retained + &bal.escaped != bal.total {
                return Err(Error::Postcondition(format!("mass identity fails at level {n}")));
            }
            if bal.escaped.is_zero() {
                leaks = false;
            }
        }
        let link = if n < t.top_index() {
            Some(n)
        } else if n > 0 {
            Some(n - 1)
        } else {
            None
        };
        let Some(k) = link else { continue };
        if !matches!(t.link(k), Link::Inclusion(_)) {
            continue;
        }
        let upper = t.level(k + 1);
        let all_short = (0..upper.num_classes()).all(|c| {
            let mu = class_measure(upper, c).expect("class exists");
            t.push_down(k, &mu.weights).iter().fold(Q::zero(), |a, w| a + w) < Q::one()
        });
        if leaks && all_short {
            return Ok(Some(format!(
                "level {n}: invariant probabilities charge escaping units, and those of level {} restrict to mass below 1",
                k + 1
            )));
        }
    }
    Ok(None)
}
