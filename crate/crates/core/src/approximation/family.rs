use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{Instance, PointId};
use crate::rational::Q;

pub type CustomTest = Arc<dyn Fn(&Instance, &[PointId]) -> bool + Send + Sync>;

/// The ratio test a candidate set must pass.
#[derive(Clone)]
pub enum Predicate {
    /// r < |A ∩ S|^ρ_{S \ A} < 1.
    Density {
        a: Vec<bool>,
        r: Q,
    },
    /// ε(δ − 1/2) > |∫f dν_S − ā|, ā the midpoint of f on the class.
    Flatten {
        f: Vec<Q>,
        delta: Q,
        eps: Q,
    },
    /// 1 < ∫_{S\T} g dν_S / ∫_T f dν_S < r for some T ⊆ S; T is recorded.
    Balance {
        f: Vec<Q>,
        g: Vec<Q>,
        r: Q,
    },
    Custom(CustomTest),
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Density { r, .. } => write!(f, "Density(r={r})"),
            Predicate::Flatten { delta, eps, .. } => write!(f, "Flatten(delta={delta}, eps={eps})"),
            Predicate::Balance { r, .. } => write!(f, "Balance(r={r})"),
            Predicate::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FamilySpec {
    pub predicate: Predicate,
    /// Largest candidate size searched.
    pub cap: usize,
    /// Candidates are drawn only from these points when given.
    pub allowed: Option<Vec<bool>>,
    /// Largest number of candidate evaluations per class.
    pub budget: usize,
}

pub const DEFAULT_CAP: usize = 8;
pub const DEFAULT_BUDGET: usize = 2_000_000;

impl FamilySpec {
    pub fn new(predicate: Predicate) -> Self {
        FamilySpec { predicate, cap: DEFAULT_CAP, allowed: None, budget: DEFAULT_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Member {
    pub points: Vec<PointId>,
    /// The subset T found by the balance predicate.
    pub witness: Option<Vec<PointId>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilyStatus {
    Maximal,
    /// Maximality could not be certified in this class.
    CapExceeded {
        class: String,
        uncovered: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    pub members: Vec<Member>,
    pub status: FamilyStatus,
}

impl Family {
    pub fn sets(&self) -> Vec<Vec<PointId>> {
        self.members.iter().map(|m| m.points.clone()).collect()
    }

    pub fn covered(&self, n: usize) -> Vec<bool> {
        let mut out = vec![false; n];
        for m in &self.members {
            for &x in &m.points {
                out[x] = true;
            }
        }
        out
    }

    /// Errors unless the family is certified maximal.
    pub fn certified(self) -> Result<Self> {
        match &self.status {
            FamilyStatus::Maximal => Ok(self),
            FamilyStatus::CapExceeded { class, uncovered } => Err(Error::CapExceeded(format!(
                "class `{class}` keeps {uncovered} uncovered points beyond the candidate cap"
            ))),
        }
    }
}

/// ∫ f dν^ρ_S = Σ_S f·w / Σ_S w.
pub fn nu_integral(inst: &Instance, f: &[Q], s: &[PointId]) -> Q {
    let (mut top, mut bottom) = (Q::zero(), Q::zero());
    for &x in s {
        top += &f[x] * inst.potential(x);
        bottom += inst.potential(x);
    }
    top / bottom
}

/// Midpoint of min and max of f on each class.
pub fn class_midpoints(inst: &Instance, f: &[Q]) -> Vec<Q> {
    inst.classes()
        .iter()
        .map(|m| {
            let (lo, hi) = crate::rational::min_max(m.iter().map(|&x| &f[x])).expect("non-empty");
            (lo + hi) / Q::from_integer(2.into())
        })
        .collect()
}

struct Evaluator<'a> {
    inst: &'a Instance,
    pred: &'a Predicate,
    midpoints: Vec<Q>,
    band: Q,
}

impl<'a> Evaluator<'a> {
    fn new(inst: &'a Instance, pred: &'a Predicate) -> Self {
        let (midpoints, band) = match pred {
            Predicate::Flatten { f, delta, eps } => {
                (class_midpoints(inst, f), eps * (delta - Q::new(1.into(), 2.into())))
            }
            _ => (Vec::new(), Q::zero()),
        };
        Evaluator { inst, pred, midpoints, band }
    }

    /// `None` if the candidate fails; `Some(witness)` otherwise.
    fn test(&self, s: &[PointId]) -> Option<Option<Vec<PointId>>> {
        let inst = self.inst;
        match self.pred {
            Predicate::Density { a, r } => {
                let inside: Vec<PointId> = s.iter().copied().filter(|&x| a[x]).collect();
                let outside: Vec<PointId> = s.iter().copied().filter(|&x| !a[x]).collect();
                if outside.is_empty() {
                    return None;
                }
                let ratio = inst.mass(&inside) / inst.mass(&outside);
                (ratio > *r && ratio < Q::one()).then_some(None)
            }
            Predicate::Flatten { f, .. } => {
                let avg = &self.midpoints[inst.class_of(s[0])];
                let dev = (nu_integral(inst, f, s) - avg).abs();
                (dev < self.band).then_some(None)
            }
            Predicate::Balance { f, g, r } => balance_witness(inst, f, g, r, s).map(Some),
            Predicate::Custom(test) => test(inst, s).then_some(None),
        }
    }
}

/// The first T ⊆ S in (size, lexicographic) order with
/// 1 < Σ_{S\T} g·w / Σ_T f·w < r.
pub fn balance_witness(inst: &Instance, f: &[Q], g: &[Q], r: &Q, s: &[PointId]) -> Option<Vec<PointId>> {
    let one = Q::one();
    for k in 1..=s.len() {
        let mut found = None;
        for_each_combination(s.len(), k, &mut |idx| {
            let mut in_t = vec![false; s.len()];
            for &i in idx {
                in_t[i] = true;
            }
            let (mut num, mut den) = (Q::zero(), Q::zero());
            for (i, &x) in s.iter().enumerate() {
                if in_t[i] {
                    den += &f[x] * inst.potential(x);
                } else {
                    num += &g[x] * inst.potential(x);
                }
            }
            if den.is_zero() {
                return true;
            }
            let ratio = num / den;
            if ratio > one && ratio < *r {
                found = Some(idx.iter().map(|&i| s[i]).collect());
                return false;
            }
            true
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Calls `visit` on each k-subset of 0..n in lexicographic order until it returns false.
pub(crate) fn for_each_combination(n: usize, k: usize, visit: &mut dyn FnMut(&[usize]) -> bool) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !visit(&idx) {
            return;
        }
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Greedy maximal family of disjoint predicate-true sets inside classes.
///
/// Candidates run over classes in order, then by size, then lexicographically;
/// a candidate is kept iff it is disjoint from those already kept.
pub fn maximal_family(inst: &Instance, spec: &FamilySpec) -> Result<Family> {
    if spec.cap == 0 {
        return Err(Error::InvalidParameter("candidate cap must be at least 1".into()));
    }
    validate(inst, &spec.predicate)?;
    let eval = Evaluator::new(inst, &spec.predicate);
    let mut members = Vec::new();
    let mut status = FamilyStatus::Maximal;
    for (c, class) in inst.classes().iter().enumerate() {
        let mut uncovered: Vec<PointId> =
            class.iter().copied().filter(|&x| spec.allowed.as_ref().is_none_or(|a| a[x])).collect();
        let mut spent = 0usize;
        let mut exhausted = false;
        for k in 1..=spec.cap.min(uncovered.len()) {
            let pool = uncovered.clone();
            let mut taken = vec![false; pool.len()];
            for_each_combination(pool.len(), k, &mut |idx| {
                if idx.iter().any(|&i| taken[i]) {
                    return true;
                }
                spent += 1;
                if spent > spec.budget {
                    exhausted = true;
                    return false;
                }
                let s: Vec<PointId> = idx.iter().map(|&i| pool[i]).collect();
                if let Some(witness) = eval.test(&s) {
                    for &i in idx {
                        taken[i] = true;
                    }
                    members.push(Member { points: s, witness });
                }
                true
            });
            uncovered = pool.iter().enumerate().filter(|(i, _)| !taken[*i]).map(|(_, &x)| x).collect();
            if exhausted || k >= uncovered.len() {
                break;
            }
        }
        if (exhausted || uncovered.len() > spec.cap) && status == FamilyStatus::Maximal {
            status = FamilyStatus::CapExceeded { class: inst.class_name(c).to_string(), uncovered: uncovered.len() };
        }
    }
    Ok(Family { members, status })
}

fn validate(inst: &Instance, pred: &Predicate) -> Result<()> {
    let n = inst.len();
    let len_ok = |v: usize| {
        if v == n {
            Ok(())
        } else {
            Err(Error::InvalidParameter("function length differs from point count".into()))
        }
    };
    match pred {
        Predicate::Density { a, r } => {
            len_ok(a.len())?;
            if *r <= Q::zero() || *r >= Q::one() {
                return Err(Error::InvalidParameter("density ratio must lie in (0, 1)".into()));
            }
        }
        Predicate::Flatten { f, delta, eps } => {
            len_ok(f.len())?;
            if *delta <= Q::zero() || *eps <= Q::zero() {
                return Err(Error::InvalidParameter("delta and epsilon must be positive".into()));
            }
        }
        Predicate::Balance { f, g, r } => {
            len_ok(f.len())?;
            len_ok(g.len())?;
            if *r <= Q::one() {
                return Err(Error::InvalidParameter("balance ratio must exceed 1".into()));
            }
        }
        Predicate::Custom(_) => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn c4() -> Instance {
        Instance::single_class(vec![qi(1); 4]).unwrap()
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, &mut |c| {
            seen.push(c.to_vec());
            true
        });
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut count = 0;
        for_each_combination(3, 3, &mut |_| {
            count += 1;
            true
        });
        assert_eq!(count, 1);
    }

    #[test]
    fn always_false_gives_empty() {
        let spec = FamilySpec::new(Predicate::Custom(Arc::new(|_, _| false)));
        let fam = maximal_family(&c4(), &spec).unwrap();
        assert!(fam.members.is_empty());
        assert_eq!(fam.status, FamilyStatus::Maximal);
    }

    #[test]
    fn density_trace() {
        let spec = FamilySpec::new(Predicate::Density { a: vec![true, true, false, false], r: q(2, 5) });
        let fam = maximal_family(&c4(), &spec).unwrap();
        assert_eq!(fam.sets(), vec![vec![0, 2, 3]]);
    }

    #[test]
    fn pairs_by_size() {
        let spec = FamilySpec::new(Predicate::Custom(Arc::new(|_, s| s.len() == 2)));
        let fam = maximal_family(&c4(), &spec).unwrap();
        assert_eq!(fam.sets(), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn cap_is_reported() {
        let inst = Instance::single_class(vec![qi(1); 5]).unwrap();
        let mut spec = FamilySpec::new(Predicate::Custom(Arc::new(|_, s| s.len() == 5)));
        spec.cap = 3;
        let fam = maximal_family(&inst, &spec).unwrap();
        assert!(matches!(fam.status, FamilyStatus::CapExceeded { .. }));
        assert!(fam.certified().is_err());
    }

    #[test]
    fn balance_witness_order() {
        let inst = Instance::single_class(vec![qi(1); 5]).unwrap();
        let ones = vec![qi(1); 5];
        assert_eq!(balance_witness(&inst, &ones, &ones, &qi(2), &[0, 1, 2, 3, 4]), Some(vec![0, 1]));
        assert_eq!(balance_witness(&inst, &ones, &ones, &qi(2), &[0, 1, 2]), None);
    }
}
