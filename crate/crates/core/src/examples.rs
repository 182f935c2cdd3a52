//! Deterministic generators: the harmonic counterexample tower, the nested
//! involution coboundary tower, dyadic odometers and seeded random instances.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Algebra, Instance, Link, Mode, PointId, SetFamily, Structure, Tower, TowerParts};
use crate::rational::{pow2, q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleKind {
    SmoothTransversal,
    CounterexampleSmooth,
    CounterexampleCoboundary,
    Odometer,
}

impl fmt::Display for ExampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExampleKind::SmoothTransversal => "smooth-transversal",
            ExampleKind::CounterexampleSmooth => "counterexample-smooth",
            ExampleKind::CounterexampleCoboundary => "counterexample-coboundary",
            ExampleKind::Odometer => "odometer",
        })
    }
}

impl FromStr for ExampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth-transversal" => Ok(ExampleKind::SmoothTransversal),
            "counterexample-smooth" => Ok(ExampleKind::CounterexampleSmooth),
            "counterexample-coboundary" => Ok(ExampleKind::CounterexampleCoboundary),
            "odometer" => Ok(ExampleKind::Odometer),
            other => Err(Error::InvalidParameter(format!("unknown example kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExampleSpec {
    pub kind: ExampleKind,
    /// Tower levels; for random instances, the largest class size.
    pub levels: usize,
    pub classes: usize,
    /// Bernoulli parameter of the odometer; constant cocycle when absent.
    pub p: Option<Q>,
    pub seed: u64,
}

impl ExampleSpec {
    pub fn new(kind: ExampleKind, levels: usize) -> Self {
        ExampleSpec { kind, levels, classes: 1, p: None, seed: 0 }
    }
}

pub fn generate(spec: &ExampleSpec) -> Result<Structure> {
    if spec.levels == 0 || spec.classes == 0 {
        return Err(Error::InvalidParameter("levels and classes must be positive".into()));
    }
    match spec.kind {
        ExampleKind::SmoothTransversal => {
            smooth_transversal(spec.classes, spec.levels, spec.seed).map(Structure::Instance)
        }
        ExampleKind::CounterexampleSmooth => counterexample_smooth(spec.classes, spec.levels).map(Structure::Tower),
        ExampleKind::CounterexampleCoboundary => counterexample_coboundary(spec.levels).map(Structure::Tower),
        ExampleKind::Odometer => odometer(spec.levels, spec.p.as_ref()).map(Structure::Tower),
    }
}

/// r_n = 1/(n+1).
pub fn harmonic_r(n: usize) -> Q {
    q(1, n as i64 + 1)
}

/// Level ℓ holds points n = 0..=ℓ of every class with potential r_n; levels
/// include into each other, tiers are n, divergence follows the partial sums.
pub fn counterexample_smooth(classes: usize, levels: usize) -> Result<Tower> {
    let mut insts = Vec::with_capacity(levels);
    let mut tiers = Vec::with_capacity(levels);
    for l in 0..levels {
        let mut names = Vec::new();
        let mut labels = Vec::new();
        let mut ws = Vec::new();
        let mut t = Vec::new();
        for c in 0..classes {
            for n in 0..=l {
                names.push(format!("c{c:02}n{n:02}"));
                labels.push(format!("c{c:02}"));
                ws.push(harmonic_r(n));
                t.push(n);
            }
        }
        insts.push(Instance::from_parts(names, labels, ws, vec![], Mode::Exact)?);
        tiers.push(t);
    }
    let links = (0..levels - 1).map(|l| Link::Inclusion(inclusion_by_name(&insts[l], &insts[l + 1]))).collect();
    let mut partial = Vec::with_capacity(levels);
    let mut h = Q::from_integer(0.into());
    for l in 0..levels {
        h += harmonic_r(l);
        partial.push(h.clone());
    }
    let divergence = (0..classes).map(|c| (format!("c{c:02}"), partial.clone())).collect();
    Tower::new(TowerParts { levels: insts, links, divergence, transversals: Some(tiers), ..Default::default() })
}

fn inclusion_by_name(lo: &Instance, hi: &Instance) -> Vec<PointId> {
    (0..lo.len()).map(|x| hi.id(lo.name(x)).expect("names persist upward")).collect()
}

fn binary_strings(m: usize) -> Vec<String> {
    (0..1usize << m).map(|v| format!("{v:0m$b}")).collect()
}

/// n(s): one plus the position of the first 0, or m+1 for the all-ones string.
pub fn coboundary_tier(s: &str) -> usize {
    s.find('0').map(|i| i + 1).unwrap_or(s.len() + 1)
}

/// ι_n flips coordinate n−1 on strings starting with 1^{n−1}.
pub fn involution(s: &str, n: usize) -> String {
    let b = s.as_bytes();
    if n == 0 || n > b.len() || b[..n - 1].iter().any(|&c| c != b'1') {
        return s.to_string();
    }
    let mut out = b.to_vec();
    out[n - 1] = if out[n - 1] == b'0' { b'1' } else { b'0' };
    String::from_utf8(out).expect("ascii")
}

/// Levels m = 1..=levels on binary strings of length m with f = 2^{n(s)}, the
/// cylinders B_k = [1^{k−1}0], the involutions ι_1..ι_m and inclusion s ↦ s0.
pub fn counterexample_coboundary(levels: usize) -> Result<Tower> {
    let mut insts = Vec::with_capacity(levels);
    let mut algebras = Vec::with_capacity(levels);
    let mut schedule = Vec::with_capacity(levels);
    for m in 1..=levels {
        let names = binary_strings(m);
        let ws: Vec<Q> = names.iter().map(|s| pow2(coboundary_tier(s) as i64)).collect();
        let index: BTreeMap<&str, PointId> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let gens = (1..=m)
            .map(|n| {
                let image = names.iter().map(|s| index[involution(s, n).as_str()]).collect();
                (format!("iota{n}"), image)
            })
            .collect();
        let inst = Instance::from_parts(names.clone(), vec!["X".into(); names.len()], ws, gens, Mode::Exact)?;
        let mut alg = Algebra::new();
        for k in 1..=m {
            let set = (0..names.len()).filter(|&x| coboundary_tier(&names[x]) == k).collect();
            alg.insert(format!("B{k}"), set);
        }
        schedule.push(inst.class_mass(0));
        algebras.push(alg);
        insts.push(inst);
    }
    let links = (0..levels - 1)
        .map(|l| {
            let (lo, hi) = (&insts[l], &insts[l + 1]);
            Link::Inclusion((0..lo.len()).map(|x| hi.id(&format!("{}0", lo.name(x))).expect("exists")).collect())
        })
        .collect();
    let mut families = BTreeMap::new();
    families
        .insert("B".to_string(), SetFamily { members: (1..=levels).map(|k| format!("B{k}")).collect(), union: None });
    let mut divergence = BTreeMap::new();
    divergence.insert("X".to_string(), schedule);
    Tower::new(TowerParts { levels: insts, links, algebras, divergence, families, ..Default::default() })
}

/// Dyadic odometer levels m = 1..=levels with w(s) = Π (p/(1−p))^{s_i}, the
/// prefix projection and coordinate cylinders `x{i}={b}`.
pub fn odometer(levels: usize, p: Option<&Q>) -> Result<Tower> {
    let ratio = match p {
        None => Q::one(),
        Some(p) => {
            if *p <= Q::from_integer(0.into()) || *p >= Q::one() {
                return Err(Error::InvalidParameter("Bernoulli parameter must lie in (0, 1)".into()));
            }
            p / (Q::one() - p)
        }
    };
    let mut insts = Vec::with_capacity(levels);
    let mut algebras = Vec::with_capacity(levels);
    for m in 1..=levels {
        let names = binary_strings(m);
        let ws: Vec<Q> = names
            .iter()
            .map(|s| (0..s.bytes().filter(|&c| c == b'1').count()).fold(Q::one(), |a, _| a * &ratio))
            .collect();
        let mut alg = Algebra::new();
        for i in 0..m {
            for b in ['0', '1'] {
                let set = (0..names.len()).filter(|&x| names[x].as_bytes()[i] as char == b).collect();
                alg.insert(format!("x{i}={b}"), set);
            }
        }
        insts.push(Instance::from_parts(names.clone(), vec!["X".into(); names.len()], ws, vec![], Mode::Exact)?);
        algebras.push(alg);
    }
    let links = (1..levels).map(|m| Link::Projection((0..1usize << (m + 1)).map(|y| y >> 1).collect())).collect();
    Tower::new(TowerParts { levels: insts, links, algebras, ..Default::default() })
}

/// Random classes of 1..=max_size points with potentials a/b, a, b ∈ 1..=9, and
/// one generator cycling each class.
pub fn smooth_transversal(classes: usize, max_size: usize, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: Vec<usize> = (0..classes).map(|_| rng.gen_range(1..=max_size)).collect();
    let total: usize = sizes.iter().sum();
    let names = crate::model::point_names(total);
    let mut labels = Vec::with_capacity(total);
    let mut ws = Vec::with_capacity(total);
    let mut image = Vec::with_capacity(total);
    let mut start = 0;
    for (c, &k) in sizes.iter().enumerate() {
        for i in 0..k {
            labels.push(format!("C{c}"));
            ws.push(q(rng.gen_range(1..=9), rng.gen_range(1..=9)));
            image.push(start + (i + 1) % k);
        }
        start += k;
    }
    Instance::from_parts(names, labels, ws, vec![("g".into(), image)], Mode::Exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::coboundary_check;

    #[test]
    fn harmonic_potentials() {
        let t = counterexample_smooth(1, 4).unwrap();
        assert_eq!(t.top().potentials(), &[q(1, 1), q(1, 2), q(1, 3), q(1, 4)]);
        assert_eq!(t.top().name(3), "c00n03");
        assert_eq!(t.divergence()["c00"][3], q(25, 12));
    }

    #[test]
    fn coboundary_weights_at_level_three() {
        let t = counterexample_coboundary(3).unwrap();
        let top = t.top();
        let w = |s: &str| top.potential(top.id(s).unwrap()).clone() * Q::from_integer(2.into());
        assert_eq!(w("000"), Q::from_integer(2.into()));
        assert_eq!(w("100"), Q::from_integer(4.into()));
        assert_eq!(w("110"), Q::from_integer(8.into()));
        assert_eq!(w("111"), Q::from_integer(16.into()));
        let f: Vec<Q> = top.names().iter().map(|s| pow2(coboundary_tier(s) as i64)).collect();
        assert!(coboundary_check(top, &f).unwrap());
    }

    #[test]
    fn involutions_are_involutive() {
        for s in binary_strings(4) {
            for n in 1..=4 {
                assert_eq!(involution(&involution(&s, n), n), s);
            }
        }
    }

    #[test]
    fn constant_odometer_level_two() {
        let t = odometer(2, None).unwrap();
        assert_eq!(t.top().names(), &["00", "01", "10", "11"]);
        assert!(t.top().potentials().iter().all(|w| w.is_one()));
        assert_eq!(t.top().num_classes(), 1);
    }

    #[test]
    fn random_instances_are_reproducible() {
        let a = smooth_transversal(5, 6, 7).unwrap();
        let b = smooth_transversal(5, 6, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_classes(), 5);
    }
}
