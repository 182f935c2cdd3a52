//! ρ-invariant measures: construction and verification, cohomologous transfer,
//! extension from dense sets, tower limits, conversion of limit defects into
//! compressions, and the dichotomy solver.

mod defect;
mod density;
mod dichotomy;
mod limit;

pub use defect::{defect_to_compression, DefectCompression, DefectEvidence, StepBound};
pub use density::{density_witness, extend_from_dense, DensityWitness};
pub use dichotomy::{
    dichotomy_solve, refute_compression, refute_level_measures, verify_certificate, CertificateKind,
    DichotomyCertificate, MeasureCertificate, Payload, SolveOptions, VerificationReport,
};
pub use limit::{
    level_values, tower_limit, AdditivityDefect, ConditionStatus, LevelReport, LimitStatus, Schedule, SetValues,
    TowerLimit,
};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, PointId};
use crate::rational::{fmt_q, Q};

/// Exact nonnegative weight per point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedMeasure {
    #[serde(with = "crate::rational::serde_q_vec")]
    pub weights: Vec<Q>,
}

impl WeightedMeasure {
    pub fn new(weights: Vec<Q>) -> Result<Self> {
        if weights.iter().any(|w| *w < Q::zero()) {
            return Err(Error::InvalidParameter("measure weights must be nonnegative".into()));
        }
        Ok(WeightedMeasure { weights })
    }

    pub fn zero(n: usize) -> Self {
        WeightedMeasure { weights: vec![Q::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, x: PointId) -> &Q {
        &self.weights[x]
    }

    pub fn mass(&self) -> Q {
        self.weights.iter().fold(Q::zero(), |a, w| a + w)
    }

    pub fn of(&self, set: &[PointId]) -> Q {
        set.iter().fold(Q::zero(), |a, &x| a + &self.weights[x])
    }

    pub fn is_probability(&self) -> bool {
        self.mass().is_one()
    }

    pub fn scaled(&self, c: &Q) -> Self {
        WeightedMeasure { weights: self.weights.iter().map(|w| w * c).collect() }
    }

    pub fn normalized(&self) -> Result<Self> {
        let m = self.mass();
        if m.is_zero() {
            return Err(Error::InvalidParameter("cannot normalise a null measure".into()));
        }
        Ok(self.scaled(&(Q::one() / m)))
    }
}

/// μ({y}) = w(y) / Σ_C w on class `c`, zero elsewhere.
pub fn class_measure(inst: &Instance, c: usize) -> Result<WeightedMeasure> {
    if c >= inst.num_classes() {
        return Err(Error::InvalidParameter(format!("class index {c} out of range")));
    }
    let total = inst.class_mass(c);
    let mut weights = vec![Q::zero(); inst.len()];
    for &y in inst.class(c) {
        weights[y] = inst.potential(y) / &total;
    }
    Ok(WeightedMeasure { weights })
}

/// Convex combination Σ_c λ_c · class_measure(c).
pub fn mixed_class_measure(inst: &Instance, lambda: &[Q]) -> Result<WeightedMeasure> {
    if lambda.len() != inst.num_classes() {
        return Err(Error::InvalidParameter("one class weight per class required".into()));
    }
    if lambda.iter().any(|l| *l < Q::zero()) || !lambda.iter().fold(Q::zero(), |a, l| a + l).is_one() {
        return Err(Error::InvalidParameter("class weights must be nonnegative and sum to 1".into()));
    }
    let mut weights = vec![Q::zero(); inst.len()];
    for (c, l) in lambda.iter().enumerate() {
        let total = inst.class_mass(c);
        for &y in inst.class(c) {
            weights[y] = l * inst.potential(y) / &total;
        }
    }
    Ok(WeightedMeasure { weights })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvarianceReport {
    pub valid: bool,
    /// Pairs (x, y) with μ({y}) ≠ ρ(y, x)·μ({x}).
    pub violations: Vec<(PointId, PointId)>,
}

/// Pointwise criterion μ({y}) = ρ(y, x)·μ({x}).
///
/// With no scope every class is compared against its basepoint; otherwise only
/// the listed pairs are checked.
pub fn verify_invariance(
    inst: &Instance,
    mu: &WeightedMeasure,
    scope: Option<&[(PointId, PointId)]>,
) -> Result<InvarianceReport> {
    if mu.len() != inst.len() {
        return Err(Error::Malformed("measure length differs from point count".into()));
    }
    let holds = |x: PointId, y: PointId| &mu.weights[y] * inst.potential(x) == &mu.weights[x] * inst.potential(y);
    let mut violations = Vec::new();
    match scope {
        None => {
            for members in inst.classes() {
                let z = members[0];
                violations.extend(members[1..].iter().filter(|&&y| !holds(z, y)).map(|&y| (z, y)));
            }
        }
        Some(pairs) => {
            for &(x, y) in pairs {
                if x >= inst.len() || y >= inst.len() || !inst.same_class(x, y) {
                    return Err(Error::DifferentClasses(x.to_string(), y.to_string()));
                }
                if !holds(x, y) {
                    violations.push((x, y));
                }
            }
        }
    }
    Ok(InvarianceReport { valid: violations.is_empty(), violations })
}

/// Both sides of μ(φ⁻¹(B)) = ∫_B |φ⁻¹(x)|^ρ_x dμ(x) for a class-preserving map φ.
pub fn fiber_identity(inst: &Instance, mu: &WeightedMeasure, phi: &[PointId], b: &[PointId]) -> Result<(Q, Q)> {
    if phi.len() != inst.len() || mu.len() != inst.len() {
        return Err(Error::Malformed("map or measure length differs from point count".into()));
    }
    for (x, &y) in phi.iter().enumerate() {
        if y >= inst.len() || !inst.same_class(x, y) {
            return Err(Error::DifferentClasses(inst.name(x).to_string(), y.to_string()));
        }
    }
    let mut in_b = vec![false; inst.len()];
    for &x in b {
        in_b[x] = true;
    }
    let lhs = (0..inst.len())
        .filter(|&x| in_b[phi[x]] && !mu.weights[x].is_zero())
        .fold(Q::zero(), |a, x| a + &mu.weights[x]);
    let mut fib = vec![Q::zero(); inst.len()];
    for (x, &y) in phi.iter().enumerate() {
        if in_b[y] && !mu.weights[y].is_zero() {
            fib[y] += inst.potential(x);
        }
    }
    let rhs = (0..inst.len())
        .filter(|&y| !fib[y].is_zero())
        .fold(Q::zero(), |a, y| a + &fib[y] / inst.potential(y) * &mu.weights[y]);
    Ok((lhs, rhs))
}

/// ν({x}) = f(x)·μ({x}), after checking f(x)/f(y) = σ(x,y)/ρ(x,y) within classes.
pub fn push_cohomologous(inst: &Instance, mu: &WeightedMeasure, f: &[Q], target: &Instance) -> Result<WeightedMeasure> {
    if f.len() != inst.len() || mu.len() != inst.len() {
        return Err(Error::Malformed("function or measure length differs from point count".into()));
    }
    if target.skeleton() != inst.skeleton() {
        return Err(Error::InvalidParameter("target cocycle lives on a different relation".into()));
    }
    if f.iter().any(|v| *v <= Q::zero()) {
        let x = f.iter().position(|v| *v <= Q::zero()).expect("exists");
        return Err(Error::NonPositiveFunction(inst.name(x).to_string()));
    }
    for members in inst.classes() {
        let key = |x: PointId| &f[x] * inst.potential(x) / target.potential(x);
        let k = key(members[0]);
        if let Some(&y) = members.iter().find(|&&y| key(y) != k) {
            return Err(Error::WitnessMismatch(inst.name(y).to_string(), inst.name(members[0]).to_string()));
        }
    }
    Ok(WeightedMeasure { weights: mu.weights.iter().zip(f).map(|(m, v)| m * v).collect() })
}

pub(crate) fn describe_pair(inst: &Instance, mu: &WeightedMeasure, (x, y): (PointId, PointId)) -> String {
    format!(
        "mu({}) = {} but rho({}, {})·mu({}) = {}",
        inst.name(y),
        fmt_q(&mu.weights[y]),
        inst.name(y),
        inst.name(x),
        inst.name(x),
        fmt_q(&(inst.ratio(y, x) * &mu.weights[x]))
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mode;
    use crate::rational::{q, qi};

    fn abc() -> Instance {
        Instance::single_class(vec![qi(1), q(1, 2), q(1, 3)]).unwrap()
    }

    #[test]
    fn class_measure_normalises_potentials() {
        let inst = abc();
        let mu = class_measure(&inst, 0).unwrap();
        assert_eq!(mu.weights, vec![q(6, 11), q(3, 11), q(2, 11)]);
        assert!(mu.is_probability());
        assert!(verify_invariance(&inst, &mu, None).unwrap().valid);
    }

    #[test]
    fn uniform_measure_fails_on_varying_cocycle() {
        let inst = abc();
        let mu = WeightedMeasure::new(vec![q(1, 3); 3]).unwrap();
        let r = verify_invariance(&inst, &mu, None).unwrap();
        assert!(!r.valid);
        assert_eq!(r.violations, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn off_class_mass_is_zero() {
        let inst = Instance::from_parts(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["P".into(), "P".into(), "Q".into()],
            vec![qi(1), qi(1), qi(1)],
            vec![],
            Mode::Exact,
        )
        .unwrap();
        let mu = class_measure(&inst, 0).unwrap();
        assert_eq!(mu.weights, vec![q(1, 2), q(1, 2), qi(0)]);
        assert!(class_measure(&inst, 2).is_err());
    }

    #[test]
    fn restricted_scope_rejects_pairs_outside_e() {
        let inst = Instance::from_parts(
            vec!["a".into(), "b".into()],
            vec!["P".into(), "Q".into()],
            vec![qi(1), qi(1)],
            vec![],
            Mode::Exact,
        )
        .unwrap();
        let mu = WeightedMeasure::zero(2);
        assert!(verify_invariance(&inst, &mu, Some(&[(0, 1)])).is_err());
    }

    #[test]
    fn fiber_identity_on_collapse() {
        let inst = abc();
        let mu = class_measure(&inst, 0).unwrap();
        let (l, r) = fiber_identity(&inst, &mu, &[0, 0, 1], &[0]).unwrap();
        assert_eq!(l, r);
        assert_eq!(l, q(9, 11));
    }

    #[test]
    fn cohomologous_transfer() {
        let flat = Instance::single_class(vec![qi(1); 3]).unwrap();
        let target = abc();
        let mu = WeightedMeasure::new(vec![q(1, 3); 3]).unwrap();
        let nu = push_cohomologous(&flat, &mu, target.potentials(), &target).unwrap();
        assert!(verify_invariance(&target, &nu, None).unwrap().valid);
        assert_eq!(nu.normalized().unwrap(), class_measure(&target, 0).unwrap());
        let c = push_cohomologous(&flat, &mu, &vec![qi(3); 3], &flat).unwrap();
        assert_eq!(c.weights, vec![qi(1); 3]);
        assert!(push_cohomologous(&flat, &mu, &[qi(1), qi(2), qi(1)], &flat).is_err());
    }
}
