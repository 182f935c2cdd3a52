//! Brute-force reference computations.
//!
//! Everything here reads raw potentials and class lists and enumerates
//! directly, sharing no code with the library operations it is compared against.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use crate::model::{Instance, PointId};
use crate::rational::Q;

fn weights(inst: &Instance) -> Vec<Q> {
    (0..inst.len()).map(|x| inst.potential(x).clone()).collect()
}

/// |Y|^ρ_z = Σ_y w(y)/w(z).
pub fn rho_size(inst: &Instance, ys: &[PointId], z: PointId) -> Q {
    let w = weights(inst);
    ys.iter().fold(Q::zero(), |a, &y| a + &w[y] / &w[z])
}

/// (ρ/F)(S, T) = Σ_S w / Σ_T w.
pub fn quotient_ratio(inst: &Instance, s: &[PointId], t: &[PointId]) -> Q {
    let w = weights(inst);
    let sum = |b: &[PointId]| b.iter().fold(Q::zero(), |a, &y| a + &w[y]);
    sum(s) / sum(t)
}

/// Undirected edges {x, y}, x < y, of equivalent points with w(x)/w(y) inside
/// (lo, hi) or its closure per the flags.
pub fn lacunarity_edges(inst: &Instance, lo: &Q, hi: &Q, lo_open: bool, hi_open: bool) -> BTreeSet<(PointId, PointId)> {
    let w = weights(inst);
    let inside = |v: &Q| {
        let above = if lo_open { v > lo } else { v >= lo };
        let below = if hi_open { v < hi } else { v <= hi };
        above && below
    };
    let mut out = BTreeSet::new();
    for x in 0..w.len() {
        for y in 0..w.len() {
            if x != y && inst.class_of(x) == inst.class_of(y) && inside(&(&w[x] / &w[y])) {
                out.insert((x.min(y), x.max(y)));
            }
        }
    }
    out
}

/// First-fit colouring in ascending order.
pub fn greedy_colors(n: usize, edges: &BTreeSet<(PointId, PointId)>) -> Vec<usize> {
    let mut colors: Vec<usize> = Vec::with_capacity(n);
    for x in 0..n {
        let mut c = 0;
        while edges.iter().any(|&(a, b)| (a == x && b < x && colors[b] == c) || (b == x && a < x && colors[a] == c)) {
            c += 1;
        }
        colors.push(c);
    }
    colors
}

/// Boundaries 0, 1, ... where each layer has strictly more mass than the last.
pub fn layer_boundaries(tier_masses: &[Q]) -> Vec<usize> {
    let mut out = vec![0];
    if tier_masses.is_empty() {
        return out;
    }
    out.push(1);
    let mut prev = tier_masses[0].clone();
    let mut acc = Q::zero();
    for (n, m) in tier_masses.iter().enumerate().skip(1) {
        acc += m;
        if acc > prev {
            out.push(n + 1);
            prev = std::mem::replace(&mut acc, Q::zero());
        }
    }
    out
}

/// Every class-preserving map whose fibres all have ρ-size at most 1, for one class.
pub fn small_fibre_maps(inst: &Instance, class: usize) -> Vec<Vec<PointId>> {
    let w = weights(inst);
    let members = inst.class(class).to_vec();
    let k = members.len();
    let mut out = Vec::new();
    let mut choice = vec![0usize; k];
    loop {
        let mut fibre = vec![Q::zero(); k];
        for (i, &c) in choice.iter().enumerate() {
            fibre[c] += &w[members[i]];
        }
        if (0..k).all(|j| fibre[j] <= w[members[j]]) {
            out.push(choice.iter().map(|&c| members[c]).collect());
        }
        let mut i = 0;
        loop {
            if i == k {
                return out;
            }
            choice[i] += 1;
            if choice[i] < k {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Whether some map of the class has every fibre ρ-size ≤ 1 and one fibre < 1.
pub fn has_compression(inst: &Instance, class: usize) -> bool {
    let w = weights(inst);
    let members = inst.class(class);
    small_fibre_maps(inst, class).iter().any(|phi| {
        members.iter().any(|&y| {
            let fibre = (0..members.len()).filter(|&i| phi[i] == y).fold(Q::zero(), |a, i| a + &w[members[i]]);
            fibre < w[y]
        })
    })
}

/// w normalised on one class, zero elsewhere.
pub fn class_measure(inst: &Instance, class: usize) -> Vec<Q> {
    let w = weights(inst);
    let total = inst.class(class).iter().fold(Q::zero(), |a, &x| a + &w[x]);
    (0..w.len()).map(|x| if inst.class_of(x) == class { &w[x] / &total } else { Q::zero() }).collect()
}

/// μ(y)·w(x) = μ(x)·w(y) on every equivalent pair.
pub fn invariant_on_all_pairs(inst: &Instance, mu: &[Q]) -> bool {
    let w = weights(inst);
    inst.classes().iter().all(|m| m.iter().all(|&x| m.iter().all(|&y| &mu[y] * &w[x] == &mu[x] * &w[y])))
}

/// (μ(φ⁻¹(B)), Σ_{y∈B} μ(y)·|φ⁻¹(y)|^ρ_y).
pub fn fiber_identity(inst: &Instance, mu: &[Q], phi: &[PointId], b: &[PointId]) -> (Q, Q) {
    let w = weights(inst);
    let in_b: BTreeSet<PointId> = b.iter().copied().collect();
    let lhs =
        (0..phi.len()).filter(|x| in_b.contains(&phi[*x]) && !mu[*x].is_zero()).fold(Q::zero(), |a, x| a + &mu[x]);
    let rhs = (0..phi.len())
        .filter(|x| in_b.contains(&phi[*x]) && !mu[phi[*x]].is_zero())
        .fold(Q::zero(), |a, x| a + &mu[phi[x]] * &w[x] / &w[phi[x]]);
    (lhs, rhs)
}

/// Σ_U w / Σ_{class} w for a set inside one class.
pub fn relative_mass(inst: &Instance, set: &[PointId], class: usize) -> Q {
    let w = weights(inst);
    let total = inst.class(class).iter().fold(Q::zero(), |a, &x| a + &w[x]);
    set.iter().fold(Q::zero(), |a, &x| a + &w[x]) / total
}

/// Product-measure mass of length-m words with `pred`, weight p per 1 and 1−p per 0.
pub fn bernoulli_mass(m: usize, p: &Q, pred: impl Fn(&[bool]) -> bool) -> Q {
    let mut total = Q::zero();
    for v in 0..(1u64 << m) {
        let bits: Vec<bool> = (0..m).map(|i| (v >> (m - 1 - i)) & 1 == 1).collect();
        if pred(&bits) {
            total += bits.iter().fold(Q::one(), |a, &b| if b { a * p } else { a * (Q::one() - p) });
        }
    }
    total
}

fn first_zero_weight(v: u64, m: usize) -> Q {
    let ones = (0..m).take_while(|i| (v >> (m - 1 - i)) & 1 == 1).count();
    Q::from_integer((1u64 << (ones + 1)).into())
}

/// ν_m(B_k) on the coboundary tower, by summing 2^{n(x)} over all words.
pub fn coboundary_value(m: usize, k: usize) -> Q {
    let (mut inside, mut total) = (Q::zero(), Q::zero());
    for v in 0..(1u64 << m) {
        let w = first_zero_weight(v, m);
        let ones = (0..m).take_while(|i| (v >> (m - 1 - i)) & 1 == 1).count();
        if ones + 1 == k {
            inside += &w;
        }
        total += w;
    }
    inside / total
}

/// Checks ρ(ι_{n+1}x, x) + ρ(ι_{n+1}ι_{n+2}x, x) = 1 on B_{n+2} at level m by bit
/// manipulation; returns the number of points checked, or the failing word.
pub fn transport_identity(m: usize) -> Result<usize, u64> {
    let flip = |v: u64, n: usize| -> u64 {
        let prefix = (0..n - 1).all(|i| (v >> (m - 1 - i)) & 1 == 1);
        if n <= m && prefix {
            v ^ (1 << (m - n))
        } else {
            v
        }
    };
    let mut checked = 0;
    for n in 0..m.saturating_sub(1) {
        for v in 0..(1u64 << m) {
            let ones = (0..m).take_while(|i| (v >> (m - 1 - i)) & 1 == 1).count();
            if ones + 1 != n + 2 {
                continue;
            }
            let wx = first_zero_weight(v, m);
            let a = first_zero_weight(flip(v, n + 1), m) / &wx;
            let b = first_zero_weight(flip(flip(v, n + 2), n + 1), m) / &wx;
            if a + b != Q::one() {
                return Err(v);
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// All subsets of `pool` with 1..=cap elements, in size then lexicographic order.
pub fn subsets(pool: &[PointId], cap: usize) -> Vec<Vec<PointId>> {
    let mut out = Vec::new();
    for size in 1..=cap.min(pool.len()) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.iter().map(|&i| pool[i]).collect());
            let mut i = size;
            while i > 0 && idx[i - 1] == pool.len() - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

/// A subset of uncovered points of one class that satisfies `pred`, if any.
pub fn augmenting_candidate(
    inst: &Instance,
    covered: &[bool],
    cap: usize,
    pred: impl Fn(&[PointId]) -> bool,
) -> Option<Vec<PointId>> {
    for members in inst.classes() {
        let pool: Vec<PointId> = members.iter().copied().filter(|&x| !covered[x]).collect();
        if let Some(s) = subsets(&pool, cap).into_iter().find(|s| pred(s)) {
            return Some(s);
        }
    }
    None
}

/// min over blocks of Σ_{B∩b} w / Σ_b w.
pub fn block_density(inst: &Instance, blocks: &[Vec<PointId>], b: &[PointId]) -> Q {
    let w = weights(inst);
    let in_b: BTreeSet<PointId> = b.iter().copied().collect();
    blocks
        .iter()
        .map(|blk| {
            let inside = blk.iter().filter(|x| in_b.contains(x)).fold(Q::zero(), |a, &x| a + &w[x]);
            inside / blk.iter().fold(Q::zero(), |a, &x| a + &w[x])
        })
        .min()
        .unwrap_or_else(Q::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn spec_values() {
        let inst = Instance::single_class(vec![qi(1), q(1, 2), q(1, 3)]).unwrap();
        assert_eq!(rho_size(&inst, &[0, 1, 2], 1), q(11, 3));
        assert_eq!(class_measure(&inst, 0), vec![q(6, 11), q(3, 11), q(2, 11)]);
        let h: Vec<Q> = (1..=4).map(|n| q(1, n)).collect();
        assert_eq!(layer_boundaries(&h), vec![0, 1, 4]);
        assert_eq!(layer_boundaries(&vec![qi(1); 10]), vec![0, 1, 3, 6, 10]);
        assert_eq!(coboundary_value(3, 1), q(8, 40));
        assert_eq!(bernoulli_mass(4, &q(1, 3), |b| b[0]), q(1, 3));
        assert_eq!(transport_identity(5), Ok(15));
        assert_eq!(subsets(&[0, 1, 2], 2).len(), 6);
    }

    #[test]
    fn chain_edges_and_colors() {
        let inst = Instance::single_class(vec![qi(1), q(1, 2), q(1, 4)]).unwrap();
        assert!(lacunarity_edges(&inst, &q(2, 3), &q(3, 2), true, true).is_empty());
        let e = lacunarity_edges(&inst, &q(1, 3), &qi(3), true, true);
        assert_eq!(e.into_iter().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        let all: BTreeSet<_> = [(0, 1), (0, 2), (1, 2)].into_iter().collect();
        assert_eq!(greedy_colors(3, &all), vec![0, 1, 2]);
    }

    #[test]
    fn identity_is_the_only_small_fibre_map_on_harmonic_class() {
        let inst = Instance::single_class((1..=4).map(|n| q(1, n)).collect()).unwrap();
        assert_eq!(small_fibre_maps(&inst, 0), vec![vec![0, 1, 2, 3]]);
        assert!(!has_compression(&inst, 0));
    }
}
