//! Branch-and-bound and greedy solvers for weighted set cover and
//! maximum-weight independent set over bit-set incidence structures.
//!
//! These are the certified optimizers behind the partition functions and the
//! measure functionals. Instances are desk scale; determinism matters more
//! than asymptotics. All reported objectives are accumulated with
//! [`stable_sum`] so that relabeled inputs reproduce byte-identical values.

use crate::bitset::BitSet;

/// Deterministic FP summation: ascending value order, so any permutation of
/// an equal multiset of weights yields the identical float.
pub fn stable_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Keeps one representative per distinct coverage set: the one with the
/// smallest weight, ties by ascending index. Returns indices into the input.
pub fn dedupe_rows(rows: &[BitSet], weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i].is_empty()).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if !kept.iter().any(|&k| rows[k] == rows[i]) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Greedy weighted set cover: repeatedly the atom minimizing weight per newly
/// covered element (ties by ascending index). Returns `None` when the pool
/// cannot cover all `m` elements.
///
/// Lazy evaluation: gains only shrink as coverage grows, so stale heap keys
/// are lower bounds and pop-recompute-compare reproduces the eager greedy
/// selection, ties included.
pub fn cover_greedy(rows: &[BitSet], weights: &[f64], m: usize) -> Option<(Vec<usize>, f64)> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Key(f64, usize);
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
        }
    }

    let mut uncovered = BitSet::full(m);
    let mut heap: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    for (i, row) in rows.iter().enumerate() {
        let gain = row.count();
        if gain > 0 {
            heap.push(Reverse(Key(weights[i] / gain as f64, i)));
        }
    }
    let mut chosen: Vec<usize> = Vec::new();
    while !uncovered.is_empty() {
        let Reverse(Key(_, idx)) = heap.pop()?;
        let gain = rows[idx].intersection_count(&uncovered);
        if gain == 0 {
            continue;
        }
        let ratio = weights[idx] / gain as f64;
        let accept = match heap.peek() {
            None => true,
            Some(Reverse(top)) => Key(ratio, idx) <= *top,
        };
        if accept {
            uncovered.subtract(&rows[idx]);
            chosen.push(idx);
        } else {
            heap.push(Reverse(Key(ratio, idx)));
        }
    }
    let total = stable_sum(chosen.iter().map(|&i| weights[i]));
    Some((chosen, total))
}

/// Exact minimum-weight cover of a laminar pool (rows pairwise nested or
/// disjoint) by tree dynamic programming: a node is either bought outright or
/// replaced by its children, and it must be bought when some of its elements
/// lie in no child. Returns indices into the (deduped) row list.
fn cover_laminar(rows: &[&BitSet], weights: &[f64], m: usize) -> Option<(Vec<usize>, f64)> {
    let k = rows.len();
    // Sort by descending coverage so parents precede children.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| rows[b].count().cmp(&rows[a].count()).then(a.cmp(&b)));

    // Tightest strict superset among earlier atoms.
    let mut parent = vec![usize::MAX; k];
    for (pos, &j) in order.iter().enumerate() {
        let mut best: Option<usize> = None;
        for &i in order[..pos].iter() {
            if rows[j].is_subset_of(rows[i]) && rows[i].count() > rows[j].count() {
                let better = match best {
                    None => true,
                    Some(b) => rows[i].count() < rows[b].count(),
                };
                if better {
                    best = Some(i);
                }
            }
        }
        if let Some(b) = best {
            parent[j] = b;
        }
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); k];
    for j in 0..k {
        if parent[j] != usize::MAX {
            children[parent[j]].push(j);
        }
    }

    // Feasibility: every element must lie in some root.
    let mut root_union = BitSet::new(m);
    for j in 0..k {
        if parent[j] == usize::MAX {
            root_union.union_with(rows[j]);
        }
    }
    if root_union.count() < m {
        return None;
    }

    // Bottom-up: children come later in `order`.
    let mut opt = vec![0.0f64; k];
    let mut buy = vec![true; k];
    for &j in order.iter().rev() {
        let mut child_union = BitSet::new(m);
        let mut child_sum = 0.0;
        for &c in &children[j] {
            child_union.union_with(rows[c]);
            child_sum += opt[c];
        }
        let forced = !rows[j].is_subset_of(&child_union);
        if forced || weights[j] <= child_sum {
            opt[j] = weights[j];
            buy[j] = true;
        } else {
            opt[j] = child_sum;
            buy[j] = false;
        }
    }

    let mut chosen = Vec::new();
    let mut stack: Vec<usize> = (0..k).filter(|&j| parent[j] == usize::MAX).collect();
    while let Some(j) = stack.pop() {
        if buy[j] {
            chosen.push(j);
        } else {
            stack.extend(children[j].iter().copied());
        }
    }
    chosen.sort_unstable();
    let value = stable_sum(chosen.iter().map(|&i| weights[i]));
    Some((chosen, value))
}

fn is_laminar(rows: &[&BitSet]) -> bool {
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            if rows[i].intersects(rows[j])
                && !rows[i].is_subset_of(rows[j])
                && !rows[j].is_subset_of(rows[i])
            {
                return false;
            }
        }
    }
    true
}

/// Exact minimum-weight set cover. Laminar pools (the nested Bowen-ball
/// families of symbolic systems) solve by tree DP; general pools go through
/// branch and bound on the uncovered element with the fewest covering atoms,
/// with an admissible bound distributing each atom weight over its span.
pub fn cover_exact(rows: &[BitSet], weights: &[f64], m: usize) -> Option<(Vec<usize>, f64)> {
    let keep = dedupe_rows(rows, weights);
    let rows_d: Vec<&BitSet> = keep.iter().map(|&i| &rows[i]).collect();
    let weights_d: Vec<f64> = keep.iter().map(|&i| weights[i]).collect();

    if is_laminar(&rows_d) {
        let (chosen_d, value) = cover_laminar(&rows_d, &weights_d, m)?;
        let mut chosen: Vec<usize> = chosen_d.iter().map(|&i| keep[i]).collect();
        chosen.sort_unstable();
        return Some((chosen, value));
    }

    let seed = cover_greedy(rows, weights, m)?;
    let mut best_value = seed.1;
    let mut best_set: Vec<usize> = seed.0;

    // covering[e] = atoms (dedup'd indices) containing element e, cheap first.
    let mut covering: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, row) in rows_d.iter().enumerate() {
        for e in row.iter() {
            covering[e].push(i);
        }
    }
    for list in covering.iter_mut() {
        list.sort_by(|&a, &b| weights_d[a].total_cmp(&weights_d[b]).then(a.cmp(&b)));
    }

    fn lower_bound(rows: &[&BitSet], weights: &[f64], covering: &[Vec<usize>], u: &BitSet) -> f64 {
        let mut lb = 0.0;
        for e in u.iter() {
            let mut cheapest = f64::INFINITY;
            for &a in &covering[e] {
                let span = rows[a].intersection_count(u) as f64;
                let share = weights[a] / span;
                if share < cheapest {
                    cheapest = share;
                }
            }
            lb += cheapest;
        }
        lb
    }

    struct Ctx<'a> {
        rows: &'a [&'a BitSet],
        weights: &'a [f64],
        covering: &'a [Vec<usize>],
        best_value: f64,
        best_set: Vec<usize>,
    }

    fn recurse(ctx: &mut Ctx, uncovered: &BitSet, partial: &mut Vec<usize>, acc: f64) {
        if uncovered.is_empty() {
            let value = stable_sum(partial.iter().map(|&i| ctx.weights[i]));
            if value < ctx.best_value {
                ctx.best_value = value;
                ctx.best_set = partial.clone();
            }
            return;
        }
        // The relative tie window keeps FP reorderings of an equal-value
        // incumbent from defeating the prune and exploding the search.
        let lb = lower_bound(ctx.rows, ctx.weights, ctx.covering, uncovered);
        if acc + lb >= ctx.best_value * (1.0 - 1e-12) {
            return;
        }
        // First-fail: the element with the fewest covering atoms.
        let mut pivot = usize::MAX;
        let mut fewest = usize::MAX;
        for e in uncovered.iter() {
            let c = ctx.covering[e].len();
            if c < fewest {
                fewest = c;
                pivot = e;
            }
        }
        if pivot == usize::MAX || fewest == 0 {
            return; // uncoverable branch
        }
        let options = ctx.covering[pivot].clone();
        for a in options {
            let mut rest = uncovered.clone();
            rest.subtract(ctx.rows[a]);
            partial.push(a);
            recurse(ctx, &rest, partial, acc + ctx.weights[a]);
            partial.pop();
        }
    }

    let mut ctx = Ctx {
        rows: &rows_d,
        weights: &weights_d,
        covering: &covering,
        best_value,
        best_set: Vec::new(),
    };
    // The greedy value seeds the bound; branch and bound records only strict
    // improvements, so the greedy set is kept when it is already optimal.
    ctx.best_value = best_value;
    recurse(&mut ctx, &BitSet::full(m), &mut Vec::new(), 0.0);
    if !ctx.best_set.is_empty() || m == 0 {
        best_value = ctx.best_value;
        best_set = ctx.best_set.iter().map(|&i| keep[i]).collect();
        best_set.sort_unstable();
    }
    Some((best_set, best_value))
}

/// Greedy maximal independent set: descending weight, ties ascending index;
/// insert whenever compatible with everything chosen.
pub fn mis_greedy(adj: &[BitSet], weights: &[f64]) -> (Vec<usize>, f64) {
    let n = adj.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut chosen_mask = BitSet::new(n);
    let mut chosen = Vec::new();
    for v in order {
        if !adj[v].intersects(&chosen_mask) {
            chosen_mask.insert(v);
            chosen.push(v);
        }
    }
    chosen.sort_unstable();
    let total = stable_sum(chosen.iter().map(|&i| weights[i]));
    (chosen, total)
}

/// Exact maximum-weight independent set by branch and bound.
///
/// The bound comes from a static greedy clique partition: an independent set
/// takes at most one vertex per clique, so summing per-clique maxima over the
/// alive vertices is admissible. On the disjoint-clique graphs produced by
/// symbolic systems the partition is exact and the search prunes to a single
/// descent.
pub fn mis_exact(adj: &[BitSet], weights: &[f64]) -> (Vec<usize>, f64) {
    let n = adj.len();
    let (greedy_set, greedy_value) = mis_greedy(adj, weights);

    // Static clique partition: repeatedly grow a clique from the lowest
    // unassigned vertex.
    let mut clique_of = vec![usize::MAX; n];
    let mut clique_count = 0usize;
    {
        let mut unassigned = BitSet::full(n);
        while let Some(v) = unassigned.first() {
            let id = clique_count;
            clique_count += 1;
            clique_of[v] = id;
            unassigned.remove(v);
            let mut common = adj[v].clone();
            common.intersect_with(&unassigned);
            while let Some(u) = common.first() {
                clique_of[u] = id;
                unassigned.remove(u);
                common.remove(u);
                common.intersect_with(&adj[u]);
            }
        }
    }

    struct Ctx<'a> {
        adj: &'a [BitSet],
        weights: &'a [f64],
        clique_of: &'a [usize],
        clique_count: usize,
        best_value: f64,
        best_set: Vec<usize>,
    }

    fn bound(ctx: &Ctx, alive: &BitSet) -> f64 {
        let mut per_clique = vec![f64::NEG_INFINITY; ctx.clique_count];
        let mut total = 0.0;
        for v in alive.iter() {
            let c = ctx.clique_of[v];
            let w = ctx.weights[v];
            if w > per_clique[c] {
                if per_clique[c] == f64::NEG_INFINITY {
                    total += w;
                } else {
                    total += w - per_clique[c];
                }
                per_clique[c] = w;
            }
        }
        total
    }

    fn recurse(ctx: &mut Ctx, alive: &BitSet, partial: &mut Vec<usize>, acc: f64) {
        if alive.is_empty() {
            let value = stable_sum(partial.iter().map(|&i| ctx.weights[i]));
            if value > ctx.best_value {
                ctx.best_value = value;
                ctx.best_set = partial.clone();
            }
            return;
        }
        // Tie window against FP reorderings, as in the cover search.
        if acc + bound(ctx, alive) <= ctx.best_value * (1.0 + 1e-12) {
            return;
        }
        // Branch on the heaviest alive vertex.
        let mut pivot = usize::MAX;
        let mut heaviest = f64::NEG_INFINITY;
        for v in alive.iter() {
            if ctx.weights[v] > heaviest {
                heaviest = ctx.weights[v];
                pivot = v;
            }
        }
        // Include.
        let mut rest = alive.clone();
        rest.remove(pivot);
        rest.subtract(&ctx.adj[pivot]);
        partial.push(pivot);
        recurse(ctx, &rest, partial, acc + ctx.weights[pivot]);
        partial.pop();
        // Exclude.
        let mut rest = alive.clone();
        rest.remove(pivot);
        recurse(ctx, &rest, partial, acc);
    }

    let mut ctx = Ctx {
        adj,
        weights,
        clique_of: &clique_of,
        clique_count,
        best_value: greedy_value,
        best_set: greedy_set,
    };
    recurse(&mut ctx, &BitSet::full(n), &mut Vec::new(), 0.0);
    let mut set = ctx.best_set;
    set.sort_unstable();
    let value = stable_sum(set.iter().map(|&i| weights[i]));
    (set, value)
}

/// Exact fractional (rational-weight) set cover with weights `k/q`, `k` in
/// `0..=q`: minimize `sum (k_i/q) w_i` subject to per-element demand `q`.
/// Equivalent to integer multi-cover; branch on the most deficient element.
pub fn fractional_cover_exact(
    rows: &[BitSet],
    weights: &[f64],
    m: usize,
    q: u32,
) -> Option<(Vec<(usize, u32)>, f64)> {
    // Feasibility: the unit cover must exist.
    let mut union = BitSet::new(m);
    for r in rows {
        union.union_with(r);
    }
    if union.count() < m {
        return None;
    }

    let unit_costs: Vec<f64> = weights.iter().map(|w| w / q as f64).collect();

    struct Ctx<'a> {
        rows: &'a [BitSet],
        unit_costs: &'a [f64],
        q: u32,
        best_value: f64,
        best_picks: Vec<u32>,
    }

    fn lower_bound(ctx: &Ctx, deficit: &[u32]) -> f64 {
        let mut lb = 0.0;
        for (e, &d) in deficit.iter().enumerate() {
            if d == 0 {
                continue;
            }
            let mut cheapest = f64::INFINITY;
            for (i, row) in ctx.rows.iter().enumerate() {
                if row.contains(e) {
                    // One unit of atom i serves every deficient element it
                    // touches; distribute its cost over them.
                    let span: u32 = deficit
                        .iter()
                        .enumerate()
                        .filter(|&(f, &df)| df > 0 && row.contains(f))
                        .map(|_| 1u32)
                        .sum();
                    let share = ctx.unit_costs[i] / span as f64;
                    if share < cheapest {
                        cheapest = share;
                    }
                }
            }
            lb += cheapest * d as f64;
        }
        lb
    }

    fn recurse(ctx: &mut Ctx, deficit: &mut Vec<u32>, picks: &mut Vec<u32>, acc: f64) {
        let Some(pivot) = deficit
            .iter()
            .enumerate()
            .filter(|&(_, &d)| d > 0)
            .max_by_key(|&(e, &d)| (d, usize::MAX - e))
            .map(|(e, _)| e)
        else {
            if acc < ctx.best_value {
                ctx.best_value = acc;
                ctx.best_picks = picks.clone();
            }
            return;
        };
        if acc + lower_bound(ctx, deficit) >= ctx.best_value * (1.0 - 1e-12) {
            return;
        }
        for i in 0..ctx.rows.len() {
            if !ctx.rows[i].contains(pivot) || picks[i] >= ctx.q {
                continue;
            }
            picks[i] += 1;
            let mut touched = Vec::new();
            for e in ctx.rows[i].iter() {
                if deficit[e] > 0 {
                    deficit[e] -= 1;
                    touched.push(e);
                }
            }
            recurse(ctx, deficit, picks, acc + ctx.unit_costs[i]);
            for e in touched {
                deficit[e] += 1;
            }
            picks[i] -= 1;
        }
    }

    let mut ctx = Ctx {
        rows,
        unit_costs: &unit_costs,
        q,
        best_value: f64::INFINITY,
        best_picks: vec![0; rows.len()],
    };
    // Unit cover as an upper bound seed.
    if let Some((chosen, value)) = cover_greedy(rows, weights, m) {
        ctx.best_value = value;
        let mut picks = vec![0u32; rows.len()];
        for i in chosen {
            picks[i] = q;
        }
        ctx.best_picks = picks;
    }
    let mut deficit = vec![q; m];
    recurse(&mut ctx, &mut deficit, &mut vec![0; rows.len()], 0.0);
    let picks: Vec<(usize, u32)> = ctx
        .best_picks
        .iter()
        .enumerate()
        .filter(|&(_, &k)| k > 0)
        .map(|(i, &k)| (i, k))
        .collect();
    let value = stable_sum(picks.iter().map(|&(i, k)| unit_costs[i] * k as f64));
    Some((picks, value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_from(m: usize, sets: &[&[usize]]) -> Vec<BitSet> {
        sets.iter().map(|s| BitSet::from_indices(m, s.iter().copied())).collect()
    }

    #[test]
    fn exact_cover_beats_or_matches_greedy_on_enumerable_instances() {
        // Enumeration oracle over all subsets of atoms.
        let m = 6;
        let rows = rows_from(
            m,
            &[&[0, 1, 2][..], &[2, 3][..], &[3, 4, 5][..], &[0, 5][..], &[1, 4][..]],
        );
        let weights = [3.0, 1.0, 2.5, 1.5, 1.2];
        let (_, exact) = cover_exact(&rows, &weights, m).unwrap();
        let (_, greedy) = cover_greedy(&rows, &weights, m).unwrap();
        assert!(greedy >= exact - 1e-12);

        let mut best = f64::INFINITY;
        for mask in 0u32..32 {
            let mut u = BitSet::new(m);
            let mut w = 0.0;
            for (i, row) in rows.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    u.union_with(row);
                    w += weights[i];
                }
            }
            if u.count() == m {
                best = best.min(w);
            }
        }
        assert!((exact - best).abs() < 1e-12);
    }

    #[test]
    fn exact_mis_matches_enumeration() {
        let n = 7;
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 0), (1, 4)];
        let mut adj = vec![BitSet::new(n); n];
        for &(a, b) in &edges {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        let weights = [2.0, 1.0, 3.0, 1.5, 2.5, 1.1, 0.9];
        let (_, exact) = mis_exact(&adj, &weights);
        let (_, greedy) = mis_greedy(&adj, &weights);
        assert!(greedy <= exact + 1e-12);

        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            let ok = edges.iter().all(|&(a, b)| mask & (1 << a) == 0 || mask & (1 << b) == 0);
            if ok {
                let w: f64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| weights[i]).sum();
                best = best.max(w);
            }
        }
        assert!((exact - best).abs() < 1e-12);
    }

    #[test]
    fn fractional_cover_no_worse_than_unit_cover() {
        let m = 4;
        let rows = rows_from(m, &[&[0, 1][..], &[1, 2][..], &[2, 3][..], &[3, 0][..]]);
        let weights = [1.0, 1.0, 1.0, 1.0];
        let (_, unit) = cover_exact(&rows, &weights, m).unwrap();
        let (_, frac) = fractional_cover_exact(&rows, &weights, m, 4).unwrap();
        assert!(frac <= unit + 1e-12);
    }

    #[test]
    fn stable_sum_is_order_independent() {
        let a = stable_sum([0.1, 0.7, 1e-9, 3.4]);
        let b = stable_sum([3.4, 0.1, 1e-9, 0.7]);
        assert_eq!(a, b);
    }
}
