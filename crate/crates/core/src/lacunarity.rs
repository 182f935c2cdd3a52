//! Lacunarity graphs, greedy colorings, complete independent sets and lacunary orders.

use num_traits::One;

use crate::error::{Error, Result};
use crate::model::{Domain, Instance, Interval, Link, PointId};
use crate::rational::Q;

/// G^ρ_U: arcs (x, y) between distinct equivalent points with ρ(x, y) ∈ U.
#[derive(Clone, Debug)]
pub struct LacunarityGraph {
    interval: Interval,
    arcs: Vec<(PointId, PointId)>,
    adjacent: Vec<Vec<PointId>>,
}

impl LacunarityGraph {
    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    /// Arcs in lexicographic order.
    pub fn arcs(&self) -> &[(PointId, PointId)] {
        &self.arcs
    }

    /// Undirected edges {x, y} with x < y.
    pub fn edges(&self) -> Vec<(PointId, PointId)> {
        let mut out: Vec<(PointId, PointId)> =
            self.arcs.iter().map(|&(x, y)| if x < y { (x, y) } else { (y, x) }).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn neighbours(&self, x: PointId) -> &[PointId] {
        &self.adjacent[x]
    }

    pub fn num_points(&self) -> usize {
        self.adjacent.len()
    }

    pub fn is_independent(&self, set: &[PointId]) -> bool {
        let mut mark = vec![false; self.adjacent.len()];
        for &x in set {
            mark[x] = true;
        }
        set.iter().all(|&x| self.adjacent[x].iter().all(|&y| !mark[y]))
    }
}

pub fn lacunarity_graph(inst: &Instance, u: &Interval) -> LacunarityGraph {
    let mut arcs = Vec::new();
    let mut adjacent = vec![Vec::new(); inst.len()];
    for members in inst.classes() {
        for &x in members {
            for &y in members {
                if x != y && u.contains(&inst.ratio(x, y)) {
                    arcs.push((x, y));
                    adjacent[x].push(y);
                    adjacent[y].push(x);
                }
            }
        }
    }
    arcs.sort_unstable();
    for a in &mut adjacent {
        a.sort_unstable();
        a.dedup();
    }
    LacunarityGraph { interval: u.clone(), arcs, adjacent }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    colors: Vec<usize>,
}

impl Coloring {
    pub fn new(colors: Vec<usize>) -> Self {
        Coloring { colors }
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn color(&self, x: PointId) -> usize {
        self.colors[x]
    }

    pub fn num_colors(&self) -> usize {
        self.colors.iter().max().map_or(0, |m| m + 1)
    }

    /// Colour classes A_0, A_1, ...; empty classes are kept so indices match colours.
    pub fn color_classes(&self) -> Vec<Vec<PointId>> {
        let mut out = vec![Vec::new(); self.num_colors()];
        for (x, &c) in self.colors.iter().enumerate() {
            out[c].push(x);
        }
        out
    }

    pub fn is_valid(&self, g: &LacunarityGraph) -> bool {
        g.arcs.iter().all(|&(x, y)| self.colors[x] != self.colors[y])
    }
}

/// Greedy colouring in ascending id order: each point takes the least colour
/// absent among its already-coloured neighbours.
pub fn greedy_coloring(g: &LacunarityGraph) -> Coloring {
    let n = g.num_points();
    let mut colors = vec![usize::MAX; n];
    for x in 0..n {
        let used: Vec<usize> = g.adjacent[x].iter().filter(|&&y| y < x).map(|&y| colors[y]).collect();
        colors[x] = (0..).find(|c| !used.contains(c)).expect("unbounded");
    }
    Coloring { colors }
}

/// Which way [`complete_independent`] converts.
pub enum Direction<'a> {
    FromColoring(&'a Coloring),
    ToColoring(&'a [PointId]),
}

pub enum CompleteIndependent {
    Set(Vec<PointId>),
    Coloring(Coloring),
}

pub fn complete_independent(inst: &Instance, g: &LacunarityGraph, input: Direction<'_>) -> Result<CompleteIndependent> {
    match input {
        Direction::FromColoring(c) => Ok(CompleteIndependent::Set(independent_from_coloring(inst, g, c)?)),
        Direction::ToColoring(b) => Ok(CompleteIndependent::Coloring(coloring_from_independent(inst, g, b)?)),
    }
}

/// B = ⋃_n (A_n \ ⋃_{m<n} [A_m]_E) for the colour classes A_n.
pub fn independent_from_coloring(inst: &Instance, g: &LacunarityGraph, c: &Coloring) -> Result<Vec<PointId>> {
    if !c.is_valid(g) {
        return Err(Error::InvalidParameter("coloring is not proper".into()));
    }
    let mut class_taken = vec![false; inst.num_classes()];
    let mut out = Vec::new();
    for a in c.color_classes() {
        let fresh: Vec<PointId> = a.into_iter().filter(|&x| !class_taken[inst.class_of(x)]).collect();
        for &x in &fresh {
            class_taken[inst.class_of(x)] = true;
        }
        out.extend(fresh);
    }
    out.sort_unstable();
    Ok(out)
}

/// Colours each point by its rank within its class, ordered by ρ(y, b) and id,
/// where b is the least point of B in the class.
pub fn coloring_from_independent(inst: &Instance, g: &LacunarityGraph, b: &[PointId]) -> Result<Coloring> {
    let mut anchor: Vec<Option<PointId>> = vec![None; inst.num_classes()];
    let mut sorted_b = b.to_vec();
    sorted_b.sort_unstable();
    for &x in &sorted_b {
        let c = inst.class_of(x);
        if anchor[c].is_none() {
            anchor[c] = Some(x);
        }
    }
    if let Some(c) = anchor.iter().position(|a| a.is_none()) {
        return Err(Error::NotComplete(inst.class_name(c).to_string()));
    }
    for &x in &sorted_b {
        if let Some(&y) = g.neighbours(x).iter().find(|y| sorted_b.binary_search(y).is_ok()) {
            return Err(Error::NotIndependent(inst.name(x).to_string(), inst.name(y).to_string()));
        }
    }
    let mut colors = vec![0; inst.len()];
    for (c, members) in inst.classes().iter().enumerate() {
        let z = anchor[c].expect("complete");
        let mut order: Vec<(Q, PointId)> = members.iter().map(|&y| (inst.ratio(y, z), y)).collect();
        order.sort();
        for (rank, (_, y)) in order.into_iter().enumerate() {
            colors[y] = rank;
        }
    }
    Ok(Coloring { colors })
}

/// A finite colouring of G^ρ_K for compact K, built from a colouring of G^ρ_U
/// and a ladder of translates of V = (1/s, s) with s² ≤ r.
pub fn compact_interval_coloring(inst: &Instance, u: &Interval, k: &Interval) -> Result<Coloring> {
    if !k.is_compact() {
        return Err(Error::InvalidInterval("K must be closed and bounded".into()));
    }
    if !u.contains_one() {
        return Err(Error::InvalidInterval("U must contain 1".into()));
    }
    let r = std::cmp::min(u.upper().clone(), u.lower().recip());
    if r <= Q::one() {
        return Err(Error::InvalidInterval("U must be a neighbourhood of 1".into()));
    }
    let two = Q::from_integer(2.into());
    let s = &two * &r / (Q::one() + &r);
    let spread = k.upper() / k.lower();
    let mut ladder = vec![k.lower().clone()];
    let mut reach = s.clone();
    while reach <= spread {
        ladder.push(ladder.last().expect("non-empty") * &s);
        reach *= &s;
    }
    let translates = ladder.len();
    let base = greedy_coloring(&lacunarity_graph(inst, u));
    let gk = lacunarity_graph(inst, k);
    let width = 2 * translates + 1;
    let mut inner = vec![usize::MAX; inst.len()];
    for x in 0..inst.len() {
        let used: Vec<usize> =
            gk.neighbours(x).iter().filter(|&&y| y < x && base.color(y) == base.color(x)).map(|&y| inner[y]).collect();
        inner[x] = (0..).find(|c| !used.contains(c)).expect("unbounded");
        debug_assert!(inner[x] < width);
    }
    let product: Vec<usize> = (0..inst.len()).map(|x| base.color(x) * width + inner[x]).collect();
    // Greedy pass in product-colour order: never more colours than the product uses.
    let mut order: Vec<PointId> = (0..inst.len()).collect();
    order.sort_by_key(|&x| (product[x], x));
    let mut colors = vec![usize::MAX; inst.len()];
    for x in order {
        let used: Vec<usize> = gk.neighbours(x).iter().map(|&y| colors[y]).filter(|&c| c != usize::MAX).collect();
        colors[x] = (0..).find(|c| !used.contains(c)).expect("unbounded");
    }
    Ok(Coloring { colors })
}

/// Colour classes of the greedy colouring of G^ρ_U.
pub fn lacunary_partition(inst: &Instance, u: &Interval) -> Vec<Vec<PointId>> {
    greedy_coloring(&lacunarity_graph(inst, u)).color_classes().into_iter().filter(|c| !c.is_empty()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderSplit {
    /// The level the split refers to; `None` for a bare instance.
    pub level: Option<usize>,
    /// Points in classes declared Z-like.
    pub in_z: Vec<PointId>,
    /// ⪯-successor of each point of `in_z`, as a point of the next level.
    pub successor: Vec<(PointId, PointId)>,
    pub leftover: Vec<PointId>,
    pub pieces: Vec<Vec<PointId>>,
}

fn check_ties(inst: &Instance, pieces: &[Vec<PointId>]) -> Result<()> {
    for piece in pieces {
        for (i, &x) in piece.iter().enumerate() {
            for &y in &piece[i + 1..] {
                if inst.same_class(x, y) && inst.potential(x) == inst.potential(y) {
                    return Err(Error::NotLacunary(inst.name(x).to_string(), inst.name(y).to_string()));
                }
            }
        }
    }
    Ok(())
}

/// Splits off the part whose lacunary orders are declared Z-like.
///
/// On a bare instance nothing is Z-like. On a tower the partition is computed at
/// the top level, the split refers to the level below it, and every point of a
/// declared class must have a successor at the top level.
pub fn lacunary_order_split(domain: Domain<'_>, u: &Interval) -> Result<OrderSplit> {
    match domain {
        Domain::Instance(inst) => {
            let pieces = lacunary_partition(inst, u);
            check_ties(inst, &pieces)?;
            Ok(OrderSplit { level: None, in_z: vec![], successor: vec![], leftover: (0..inst.len()).collect(), pieces })
        }
        Domain::Tower(t) => {
            let top = t.top();
            let top_pieces = lacunary_partition(top, u);
            check_ties(top, &top_pieces)?;
            if t.num_levels() < 2 {
                return Err(Error::InvalidTower("Z-likeness needs two levels".into()));
            }
            let n = t.top_index() - 1;
            let Link::Inclusion(iota) = t.link(n) else {
                return Err(Error::InvalidTower("Z-likeness is validated along an inclusion link".into()));
            };
            let lo = t.level(n);
            let mut piece_of = vec![0; top.len()];
            for (i, p) in top_pieces.iter().enumerate() {
                for &y in p {
                    piece_of[y] = i;
                }
            }
            let inv = t.inclusion_inverse(n).expect("inclusion");
            let pieces: Vec<Vec<PointId>> = top_pieces
                .iter()
                .map(|p| p.iter().filter_map(|&y| inv[y]).collect::<Vec<_>>())
                .filter(|p: &Vec<PointId>| !p.is_empty())
                .collect();
            let mut in_z = Vec::new();
            let mut successor = Vec::new();
            let mut leftover = Vec::new();
            for x in 0..lo.len() {
                if !t.z_like().contains(lo.class_name(lo.class_of(x))) {
                    leftover.push(x);
                    continue;
                }
                let ix = iota[x];
                let next = top_pieces[piece_of[ix]]
                    .iter()
                    .filter(|&&y| top.same_class(y, ix) && top.potential(y) > top.potential(ix))
                    .min_by(|&&a, &&b| top.potential(a).cmp(top.potential(b)));
                match next {
                    Some(&y) => {
                        in_z.push(x);
                        successor.push((x, y));
                    }
                    None => {
                        return Err(Error::InvalidTower(format!(
                            "Z-like declaration fails: `{}` has no successor at the next level",
                            lo.name(x)
                        )))
                    }
                }
            }
            Ok(OrderSplit { level: Some(n), in_z, successor, leftover, pieces })
        }
    }
}
