use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{PointId, Tower};
use crate::rational::{fmt_q, Q};

/// Summable tolerance sequence ε_n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// ε_n = first · ratio^n with 0 < ratio < 1.
    Geometric { first: Q, ratio: Q },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Geometric { first: Q::one(), ratio: Q::new(1.into(), 2.into()) }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            Schedule::Geometric { first, ratio } => {
                if *first <= Q::zero() {
                    return Err(Error::InvalidParameter("schedule must be positive".into()));
                }
                if *ratio <= Q::zero() || *ratio >= Q::one() {
                    return Err(Error::InvalidParameter("schedule is not summable: ratio must lie in (0, 1)".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eps(&self, n: usize) -> Q {
        match self {
            Schedule::Geometric { first, ratio } => first * pow(ratio, n),
        }
    }

    /// Σ_{m ≥ k} ε_m.
    pub fn tail(&self, k: usize) -> Q {
        match self {
            Schedule::Geometric { first, ratio } => first * pow(ratio, k) / (Q::one() - ratio),
        }
    }
}

fn pow(r: &Q, n: usize) -> Q {
    (0..n).fold(Q::one(), |a, _| a * r)
}

/// ν^ρ_{[x]_{F_n}}(U) for each F_n-block, with extremes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetValues {
    pub per_block: Vec<Q>,
    pub min: Q,
    pub max: Q,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConditionStatus {
    Holds,
    Fails(String),
    Skipped(String),
    /// The top level has no successor to compare with.
    NotApplicable,
}

impl ConditionStatus {
    pub fn holds(&self) -> bool {
        matches!(self, ConditionStatus::Holds)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelReport {
    pub level: usize,
    pub eps: Q,
    pub values: BTreeMap<String, SetValues>,
    /// Within each class, ν_{[x]_{F_{n+1}}}(A) varies by at most ε_n for A ∈ 𝒰_n.
    pub condition1: ConditionStatus,
    /// Dominated pairs in 𝒰_n admit C ∈ 𝒰_{n+1} with 0 ≤ ν(B \ C) − ν(A) ≤ ε_n.
    pub condition2: ConditionStatus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LimitStatus {
    /// Tail oscillation from `from_level` is within the remaining schedule mass `bound`.
    Declared {
        value: Q,
        bound: Q,
        from_level: usize,
    },
    /// Sampled at the top level only; carries no evidence either way.
    TopOnly,
    Inconclusive(String),
}

impl LimitStatus {
    pub fn value(&self) -> Option<&Q> {
        match self {
            LimitStatus::Declared { value, .. } => Some(value),
            LimitStatus::TopOnly | LimitStatus::Inconclusive(_) => None,
        }
    }
}

/// Finite-level evidence that Σ_k μ(U_k) < μ(⋃_k U_k).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditivityDefect {
    pub family: String,
    /// Levels at which the first member is present.
    pub levels: Vec<usize>,
    /// Per level, the largest block value of each member present.
    pub member_values: Vec<Vec<Q>>,
    /// Per level, the smallest block value of the union set.
    pub union_values: Vec<Q>,
    /// Per level, Σ of the member values on the basepoint block of class 0.
    pub member_sums: Vec<Q>,
    /// Largest K with ν(⋃) − 2 Σ_{k<K} ν(U_k) > 0 on every block of every cited level.
    pub prefix: usize,
    /// The smallest such value for `prefix`.
    pub margin: Q,
    /// Member values non-increasing and union values non-decreasing along the levels.
    pub trend: bool,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerLimit {
    pub schedule: Schedule,
    pub levels: Vec<LevelReport>,
    pub limits: BTreeMap<String, LimitStatus>,
    pub defects: Vec<AdditivityDefect>,
}

impl TowerLimit {
    pub fn certified_defect(&self) -> Option<&AdditivityDefect> {
        self.defects.iter().find(|d| d.certified)
    }

    pub fn all_declared(&self) -> bool {
        self.limits.values().any(|l| l.value().is_some())
            && self.limits.values().all(|l| !matches!(l, LimitStatus::Inconclusive(_)))
    }
}

fn indicator(n: usize, set: &[PointId]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &x in set {
        m[x] = true;
    }
    m
}

fn block_values(t: &Tower, n: usize, ind: &[bool]) -> Vec<Q> {
    let inst = t.level(n);
    t.subrelation(n)
        .blocks()
        .iter()
        .map(|blk| {
            let inside: Vec<PointId> = blk.iter().copied().filter(|&x| ind[x]).collect();
            inst.mass(&inside) / inst.mass(blk)
        })
        .collect()
}

fn summarize(per_block: Vec<Q>) -> SetValues {
    let min = per_block.iter().min().cloned().unwrap_or_else(Q::zero);
    let max = per_block.iter().max().cloned().unwrap_or_else(Q::zero);
    SetValues { per_block, min, max }
}

/// ν^ρ_{[x]_{F_n}}(U) for every U in 𝒰_n.
pub fn level_values(t: &Tower, n: usize) -> BTreeMap<String, SetValues> {
    let len = t.level(n).len();
    t.algebra(n).iter().map(|(name, set)| (name.clone(), summarize(block_values(t, n, &indicator(len, set))))).collect()
}

const CONDITION2_MAX_SETS: usize = 12;

fn condition1(t: &Tower, n: usize, eps: &Q, upper: &BTreeMap<String, SetValues>) -> ConditionStatus {
    let inst = t.level(n + 1);
    let f = t.subrelation(n + 1);
    for name in t.algebra(n).keys() {
        let vals = &upper[name].per_block;
        for members in inst.classes() {
            let mut lo: Option<&Q> = None;
            let mut hi: Option<&Q> = None;
            for &x in members {
                let v = &vals[f.block_of(x)];
                if lo.is_none_or(|l| v < l) {
                    lo = Some(v);
                }
                if hi.is_none_or(|h| v > h) {
                    hi = Some(v);
                }
            }
            let spread = hi.expect("non-empty") - lo.expect("non-empty");
            if spread > *eps {
                return ConditionStatus::Fails(format!(
                    "`{name}` varies by {} in class `{}`",
                    fmt_q(&spread),
                    inst.class_name(inst.class_of(members[0]))
                ));
            }
        }
    }
    ConditionStatus::Holds
}

fn condition2(t: &Tower, n: usize, eps: &Q, lower: &BTreeMap<String, SetValues>) -> ConditionStatus {
    let alg = t.algebra(n);
    if alg.len() > CONDITION2_MAX_SETS {
        return ConditionStatus::Skipped(format!("more than {CONDITION2_MAX_SETS} algebra sets"));
    }
    let up = t.algebra(n + 1);
    let len = t.level(n + 1).len();
    let lifted: BTreeMap<&String, Vec<bool>> = alg.keys().map(|k| (k, indicator(len, &up[k]))).collect();
    let mut cs: Vec<Vec<bool>> = vec![vec![false; len]];
    cs.extend(up.values().map(|s| indicator(len, s)));
    for a in alg.keys() {
        for b in alg.keys() {
            let (va, vb) = (&lower[a].per_block, &lower[b].per_block);
            if va.iter().zip(vb).any(|(x, y)| x > y) {
                continue;
            }
            let nu_a = block_values(t, n + 1, &lifted[a]);
            let found = cs.iter().any(|c| {
                let diff: Vec<bool> = lifted[b].iter().zip(c).map(|(&x, &y)| x && !y).collect();
                block_values(t, n + 1, &diff).iter().zip(&nu_a).all(|(bc, a)| {
                    let d = bc - a;
                    d >= Q::zero() && d <= *eps
                })
            });
            if !found {
                return ConditionStatus::Fails(format!("no C for the pair (`{a}`, `{b}`)"));
            }
        }
    }
    ConditionStatus::Holds
}

/// Exact level values of ν^ρ_{[x]_{F_n}} on 𝒰_n, conditions (1) and (2), limit
/// declarations and additivity-defect reports for the tower's families.
pub fn tower_limit(t: &Tower, schedule: &Schedule) -> Result<TowerLimit> {
    schedule.validate()?;
    if (0..t.num_levels()).all(|n| t.algebra(n).is_empty()) {
        return Err(Error::InvalidParameter("tower has no algebras".into()));
    }
    let values: Vec<BTreeMap<String, SetValues>> = (0..t.num_levels()).map(|n| level_values(t, n)).collect();
    let mut levels = Vec::with_capacity(t.num_levels());
    for n in 0..t.num_levels() {
        let eps = schedule.eps(n);
        let (c1, c2) = if n + 1 < t.num_levels() {
            (condition1(t, n, &eps, &values[n + 1]), condition2(t, n, &eps, &values[n]))
        } else {
            (ConditionStatus::NotApplicable, ConditionStatus::NotApplicable)
        };
        levels.push(LevelReport { level: n, eps, values: values[n].clone(), condition1: c1, condition2: c2 });
    }

    let top = t.top_index();
    let mut limits = BTreeMap::new();
    for name in t.algebra(top).keys() {
        limits.insert(name.clone(), declare(&values, name, top, schedule));
    }
    let defects = t.families().keys().map(|fam| additivity(t, fam, &values)).collect();
    Ok(TowerLimit { schedule: schedule.clone(), levels, limits, defects })
}

fn declare(values: &[BTreeMap<String, SetValues>], name: &str, top: usize, schedule: &Schedule) -> LimitStatus {
    let first = (0..=top).find(|&n| values[n].contains_key(name)).expect("present at top");
    if first == top {
        return LimitStatus::TopOnly;
    }
    for k in first..top {
        let lo = (k..=top).map(|n| &values[n][name].min).min().expect("non-empty");
        let hi = (k..=top).map(|n| &values[n][name].max).max().expect("non-empty");
        let bound = schedule.tail(k);
        if hi - lo <= bound {
            let v = &values[top][name];
            let value = (&v.min + &v.max) / Q::from_integer(2.into());
            return LimitStatus::Declared { value, bound, from_level: k };
        }
    }
    LimitStatus::Inconclusive("tail oscillation exceeds the remaining schedule mass".into())
}

fn additivity(t: &Tower, fam: &str, values: &[BTreeMap<String, SetValues>]) -> AdditivityDefect {
    let family = &t.families()[fam];
    let members = &family.members;
    let levels: Vec<usize> =
        (0..t.num_levels()).filter(|&n| members.first().is_some_and(|m| t.algebra(n).contains_key(m))).collect();
    let mut member_values = Vec::new();
    let mut union_values = Vec::new();
    let mut member_sums = Vec::new();
    // Per level: per block, union value and member values.
    let mut grids: Vec<(Vec<Q>, Vec<Vec<Q>>)> = Vec::new();
    for &n in &levels {
        let blocks = t.subrelation(n).len();
        let union = match &family.union {
            Some(u) => values[n].get(u).map(|v| v.per_block.clone()).unwrap_or_else(|| vec![Q::zero(); blocks]),
            None => vec![Q::one(); blocks],
        };
        let per_member: Vec<Vec<Q>> = members
            .iter()
            .map(|m| values[n].get(m).map(|v| v.per_block.clone()).unwrap_or_else(|| vec![Q::zero(); blocks]))
            .collect();
        member_values.push(members.iter().filter_map(|m| values[n].get(m).map(|v| v.max.clone())).collect::<Vec<_>>());
        union_values.push(union.iter().min().cloned().unwrap_or_else(Q::zero));
        let b0 = t.subrelation(n).block_of(t.level(n).class(0)[0]);
        member_sums.push(per_member.iter().fold(Q::zero(), |a, v| a + &v[b0]));
        grids.push((union, per_member));
    }

    let margin_for = |k: usize| -> Option<Q> {
        grids
            .iter()
            .flat_map(|(union, per_member)| {
                (0..union.len()).map(move |b| {
                    let s = per_member[..k].iter().fold(Q::zero(), |a, v| a + &v[b]);
                    &union[b] - s * Q::from_integer(2.into())
                })
            })
            .min()
    };
    let mut prefix = 0;
    let mut margin = Q::zero();
    for k in (1..=members.len()).rev() {
        if let Some(m) = margin_for(k) {
            if m > Q::zero() {
                prefix = k;
                margin = m;
                break;
            }
        }
    }
    let trend = prefix > 0
        && (0..prefix).all(|k| {
            let seq: Vec<&Q> = levels.iter().filter_map(|&n| values[n].get(&members[k]).map(|v| &v.max)).collect();
            seq.windows(2).all(|w| w[1] <= w[0]) && seq.len() >= 2
        })
        && union_values.windows(2).all(|w| w[1] >= w[0]);
    let certified = prefix > 0 && trend && levels.len() >= 2;
    AdditivityDefect {
        family: fam.to_string(),
        levels,
        member_values,
        union_values,
        member_sums,
        prefix,
        margin,
        trend,
        certified,
    }
}
