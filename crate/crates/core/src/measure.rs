//! Dimension-type pressures: the Bowen outer-measure functional, packing
//! content and modified packing measure, the weighted-cover functional, the
//! open-cover (string) functional, and the jump-point solvers that turn them
//! into pressure estimates.
//!
//! Finite-scale conventions: covers use closed Bowen balls (equivalent per
//! the defining remark, and it is the closed variant that makes uniform-depth
//! spanning sets valid covers); the jump threshold is the crossing of value
//! 1, the standard finite-scale surrogate; `P_inf` proxies evaluate at the
//! deepest feasible depth.

use std::collections::BTreeMap;

use crate::bitset::BitSet;
use crate::error::Error;
use crate::metric::greedy_epsilon_net;
use crate::nds::{BowenKernel, Nds};
use crate::potential::{birkhoff_sums_all, Potential};
use crate::pressure::{capacity_pressure, enumerate_cylinders, CapacityKind, Cell, PressureEstimate, Schedule, CYLINDER_CAP};
use crate::solver;
use crate::span_sep::SolveMode;

/// Parameters of one measure-functional evaluation.
#[derive(Clone, Debug)]
pub struct MeasureValueRequest {
    pub s: f64,
    /// Minimum atom depth `N`.
    pub min_depth: usize,
    pub epsilon: f64,
    pub z: Vec<usize>,
    pub mode: SolveMode,
    /// Cap on atom depths (`<=` horizon).
    pub max_depth: usize,
}

impl MeasureValueRequest {
    fn validate(&self, nds: &Nds) -> Result<(), Error> {
        if self.min_depth == 0 || self.min_depth > self.max_depth || self.max_depth > nds.horizon()
        {
            return Err(Error::InfeasibleSchedule(format!(
                "need 1 <= N ({}) <= max_depth ({}) <= horizon ({})",
                self.min_depth,
                self.max_depth,
                nds.horizon()
            )));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::InfeasibleSchedule("epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Bisection tolerance of the jump-point solver.
pub const JUMP_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug)]
pub struct JumpPointResult {
    pub s_star: f64,
    pub bracket: (f64, f64),
    pub values_at_bracket: (f64, f64),
    pub iterations: usize,
}

struct CoverAtoms {
    /// Coverage of the target positions per atom.
    rows: Vec<BitSet>,
    /// `(depth, S_n f(center))` per atom; weights are `exp(-n s + S)`.
    depth_and_sum: Vec<(usize, f64)>,
}

fn build_cover_atoms(
    nds: &Nds,
    f: &Potential,
    req: &MeasureValueRequest,
) -> Result<CoverAtoms, Error> {
    let count0 = nds.stage(0).point_count();
    // Covers may center anywhere in X_0; keep the full pool at desk scale,
    // otherwise net centers plus the target set.
    let centers: Vec<usize> = if count0 <= 4096 {
        (0..count0).collect()
    } else {
        let all: Vec<usize> = (0..count0).collect();
        let mut c = greedy_epsilon_net(nds.stage(0), &all, req.epsilon);
        c.extend_from_slice(&req.z);
        c.sort_unstable();
        c.dedup();
        c
    };
    let mut rows = Vec::new();
    let mut depth_and_sum = Vec::new();
    for n in req.min_depth..=req.max_depth {
        let kernel = BowenKernel::new(nds, 0, n)?;
        let sums = birkhoff_sums_all(nds, f, 0, n)?;
        for &c in &centers {
            let mut row = BitSet::new(req.z.len());
            for (zi, &p) in req.z.iter().enumerate() {
                if kernel.within(c, p, req.epsilon, true) {
                    row.insert(zi);
                }
            }
            if !row.is_empty() {
                rows.push(row);
                depth_and_sum.push((n, sums[c]));
            }
        }
    }
    Ok(CoverAtoms { rows, depth_and_sum })
}

fn atom_weights(depth_and_sum: &[(usize, f64)], s: f64) -> Vec<f64> {
    depth_and_sum
        .iter()
        .map(|&(n, sum)| (-(n as f64) * s + sum).exp())
        .collect()
}

fn solve_cover_value(atoms: &CoverAtoms, s: f64, m: usize, exact: bool) -> Result<f64, Error> {
    let weights = atom_weights(&atoms.depth_and_sum, s);
    if exact {
        return solver::cover_exact(&atoms.rows, &weights, m)
            .map(|(_, v)| v)
            .ok_or(Error::NotCoverable);
    }
    // Greedy proxy: best of the mixed-pool greedy and every uniform-depth
    // greedy. Uniform-depth covers are what the spanning comparison needs,
    // and their selection is independent of s, which keeps the value
    // monotone in s.
    let mut best = solver::cover_greedy(&atoms.rows, &weights, m)
        .map(|(_, v)| v)
        .ok_or(Error::NotCoverable)?;
    let depths: std::collections::BTreeSet<usize> =
        atoms.depth_and_sum.iter().map(|&(n, _)| n).collect();
    for n in depths {
        let idx: Vec<usize> = (0..atoms.rows.len())
            .filter(|&i| atoms.depth_and_sum[i].0 == n)
            .collect();
        let rows: Vec<BitSet> = idx.iter().map(|&i| atoms.rows[i].clone()).collect();
        let w: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
        if let Some((_, v)) = solver::cover_greedy(&rows, &w, m) {
            best = best.min(v);
        }
    }
    Ok(best)
}

/// Bowen outer-measure value: infimum proxy of
/// `sum exp(-n_i s + S_{n_i} f(x_i))` over covers of `Z` by closed Bowen
/// balls with depths in `[N, max_depth]`. Exact branch-and-bound within
/// budget, greedy beyond. Non-increasing in `s`.
pub fn bowen_measure_value(nds: &Nds, f: &Potential, req: &MeasureValueRequest) -> Result<f64, Error> {
    req.validate(nds)?;
    if req.z.is_empty() {
        return Ok(0.0);
    }
    let exact = match req.mode.kind {
        crate::span_sep::SolveKind::Exact => {
            if req.z.len() > req.mode.exact_budget {
                return Err(Error::BudgetExceeded {
                    ground: req.z.len(),
                    budget: req.mode.exact_budget,
                });
            }
            true
        }
        crate::span_sep::SolveKind::Greedy => false,
    };
    let atoms = build_cover_atoms(nds, f, req)?;
    solve_cover_value(&atoms, req.s, req.z.len(), exact)
}

struct PackingAtoms {
    /// Full-space member sets, for disjointness.
    members: Vec<BitSet>,
    depth_and_sum: Vec<(usize, f64)>,
}

fn build_packing_atoms(
    nds: &Nds,
    f: &Potential,
    z: &[usize],
    epsilon: f64,
    min_depth: usize,
    max_depth: usize,
) -> Result<PackingAtoms, Error> {
    let count0 = nds.stage(0).point_count();
    let mut members = Vec::new();
    let mut depth_and_sum = Vec::new();
    for n in min_depth..=max_depth {
        let kernel = BowenKernel::new(nds, 0, n)?;
        let sums = birkhoff_sums_all(nds, f, 0, n)?;
        for &c in z {
            let mut row = BitSet::new(count0);
            for p in 0..count0 {
                if kernel.within(c, p, epsilon, true) {
                    row.insert(p);
                }
            }
            members.push(row);
            depth_and_sum.push((n, sums[c]));
        }
    }
    Ok(PackingAtoms { members, depth_and_sum })
}

fn solve_packing_value(atoms: &PackingAtoms, s: f64, exact: bool) -> f64 {
    let weights = atom_weights(&atoms.depth_and_sum, s);
    if exact {
        let n = atoms.members.len();
        let mut adj = vec![BitSet::new(n); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if atoms.members[i].intersects(&atoms.members[j]) {
                    adj[i].insert(j);
                    adj[j].insert(i);
                }
            }
        }
        let (chosen, value) = solver::mis_exact(&adj, &weights);
        debug_assert!(pairwise_disjoint(&atoms.members, &chosen));
        return value;
    }
    // Greedy by descending weight, disjointness against the running union.
    let mut order: Vec<usize> = (0..atoms.members.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let dim = atoms.members.first().map(|m| m.len()).unwrap_or(0);
    let mut union = BitSet::new(dim);
    let mut chosen = Vec::new();
    for i in order {
        if !atoms.members[i].intersects(&union) {
            union.union_with(&atoms.members[i]);
            chosen.push(i);
        }
    }
    debug_assert!(pairwise_disjoint(&atoms.members, &chosen));
    solver::stable_sum(chosen.iter().map(|&i| weights[i]))
}

fn pairwise_disjoint(members: &[BitSet], chosen: &[usize]) -> bool {
    for (a, &i) in chosen.iter().enumerate() {
        for &j in &chosen[a + 1..] {
            if members[i].intersects(&members[j]) {
                return false;
            }
        }
    }
    true
}

/// Packing-content value: supremum proxy of
/// `sum exp(-n_i s + S_{n_i} f(x_i))` over packings of `Z` by pairwise
/// disjoint closed Bowen balls centered in `Z`, depths in `[N, max_depth]`.
pub fn packing_content_value(
    nds: &Nds,
    f: &Potential,
    req: &MeasureValueRequest,
) -> Result<f64, Error> {
    req.validate(nds)?;
    if req.z.is_empty() {
        return Ok(0.0);
    }
    let exact = match req.mode.kind {
        crate::span_sep::SolveKind::Exact => {
            if req.z.len() > req.mode.exact_budget {
                return Err(Error::BudgetExceeded {
                    ground: req.z.len(),
                    budget: req.mode.exact_budget,
                });
            }
            true
        }
        crate::span_sep::SolveKind::Greedy => false,
    };
    let atoms = build_packing_atoms(nds, f, &req.z, req.epsilon, req.min_depth, req.max_depth)?;
    Ok(solve_packing_value(&atoms, req.s, exact))
}

/// `P_inf` proxy: packing content at the deepest feasible uniform depth.
pub fn packing_inf_value(
    nds: &Nds,
    f: &Potential,
    z: &[usize],
    s: f64,
    epsilon: f64,
    max_depth: usize,
    mode: SolveMode,
) -> Result<f64, Error> {
    let req = MeasureValueRequest {
        s,
        min_depth: max_depth,
        epsilon,
        z: z.to_vec(),
        mode,
        max_depth,
    };
    packing_content_value(nds, f, &req)
}

/// Per-partition prepared atom pools so the jump-point bisection can
/// re-evaluate the modified packing value without rebuilding ball members.
struct PreparedModifiedPacking {
    partitions: Vec<Vec<PackingAtoms>>,
    exact: bool,
}

impl PreparedModifiedPacking {
    fn prepare(
        nds: &Nds,
        f: &Potential,
        epsilon: f64,
        z: &[usize],
        partition_pool: &[Vec<Vec<usize>>],
        max_depth: usize,
        mode: SolveMode,
    ) -> Result<Self, Error> {
        let exact = resolve_exact(mode, z.len())?;
        let mut partitions = Vec::new();
        let pool: Vec<Vec<Vec<usize>>> = if partition_pool.is_empty() {
            vec![vec![z.to_vec()]]
        } else {
            partition_pool.to_vec()
        };
        for partition in &pool {
            let mut parts = Vec::new();
            for part in partition {
                parts.push(build_packing_atoms(nds, f, part, epsilon, max_depth, max_depth)?);
            }
            partitions.push(parts);
        }
        Ok(PreparedModifiedPacking { partitions, exact })
    }

    fn value(&self, s: f64) -> f64 {
        let mut best = f64::INFINITY;
        for parts in &self.partitions {
            let total: f64 = parts.iter().map(|a| solve_packing_value(a, s, self.exact)).sum();
            best = best.min(total);
        }
        best
    }
}

fn resolve_exact(mode: SolveMode, ground: usize) -> Result<bool, Error> {
    match mode.kind {
        crate::span_sep::SolveKind::Exact => {
            if ground > mode.exact_budget {
                Err(Error::BudgetExceeded { ground, budget: mode.exact_budget })
            } else {
                Ok(true)
            }
        }
        crate::span_sep::SolveKind::Greedy => Ok(false),
    }
}

/// Modified packing value: the minimum over the pooled partitions of the sum
/// of per-part `P_inf` proxies. An upper bound on the true infimum over all
/// countable decompositions; flagged as such wherever it is reported.
pub fn modified_packing_value(
    nds: &Nds,
    f: &Potential,
    s: f64,
    epsilon: f64,
    z: &[usize],
    partition_pool: &[Vec<Vec<usize>>],
    max_depth: usize,
    mode: SolveMode,
) -> Result<f64, Error> {
    if z.is_empty() {
        return Ok(0.0);
    }
    let prepared =
        PreparedModifiedPacking::prepare(nds, f, epsilon, z, partition_pool, max_depth, mode)?;
    Ok(prepared.value(s))
}

/// The partition pool used by the modified packing measure: the trivial
/// partition, nearest-net-center cells at every scheduled scale, and the
/// far-component split when `Z` falls apart at twice the largest scale.
pub fn partition_pool(nds: &Nds, z: &[usize], scales: &[f64]) -> Vec<Vec<Vec<usize>>> {
    let mut pool: Vec<Vec<Vec<usize>>> = vec![vec![z.to_vec()]];
    let space = nds.stage(0);
    for &scale in scales {
        let net = greedy_epsilon_net(space, z, scale);
        if net.len() <= 1 {
            continue;
        }
        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); net.len()];
        for &p in z {
            let mut best = 0usize;
            for (i, &c) in net.iter().enumerate() {
                if space.dist(p, c) < space.dist(p, net[best]) {
                    best = i;
                }
            }
            cells[best].push(p);
        }
        cells.retain(|c| !c.is_empty());
        if cells.len() > 1 && !pool.contains(&cells) {
            pool.push(cells);
        }
    }
    if let Some(scale) = scales.first() {
        if let Some(split) = far_component_partition(nds, z, 2.0 * scale) {
            if !pool.contains(&split) {
                pool.push(split);
            }
        }
    }
    pool
}

/// Connected components of the `<= gap` graph on `z` under the stage-0
/// metric; `None` when `z` is a single component.
pub fn far_component_partition(nds: &Nds, z: &[usize], gap: f64) -> Option<Vec<Vec<usize>>> {
    let space = nds.stage(0);
    let mut comp: Vec<usize> = (0..z.len()).collect();
    fn find(comp: &mut Vec<usize>, i: usize) -> usize {
        if comp[i] != i {
            let root = find(comp, comp[i]);
            comp[i] = root;
        }
        comp[i]
    }
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            if space.dist(z[i], z[j]) <= gap {
                let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                if a != b {
                    comp[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..z.len() {
        let root = find(&mut comp, i);
        groups.entry(root).or_default().push(z[i]);
    }
    if groups.len() <= 1 {
        None
    } else {
        Some(groups.into_values().collect())
    }
}

/// Weighted-cover value: infimum proxy of `sum c_i exp(-n_i s + S f)` over
/// quarter-integer weighted covers (`c_i` in `{1/4 .. 4/4}`). Unit weights
/// reproduce plain covers, so the value never exceeds the Bowen measure.
pub fn weighted_cover_value(
    nds: &Nds,
    f: &Potential,
    req: &MeasureValueRequest,
) -> Result<f64, Error> {
    req.validate(nds)?;
    if req.z.is_empty() {
        return Ok(0.0);
    }
    let atoms = build_cover_atoms(nds, f, req)?;
    let weights = atom_weights(&atoms.depth_and_sum, req.s);
    match req.mode.kind {
        crate::span_sep::SolveKind::Exact => {
            if req.z.len() > req.mode.exact_budget {
                return Err(Error::BudgetExceeded {
                    ground: req.z.len(),
                    budget: req.mode.exact_budget,
                });
            }
            solver::fractional_cover_exact(&atoms.rows, &weights, req.z.len(), 4)
                .map(|(_, v)| v)
                .ok_or(Error::NotCoverable)
        }
        // Greedy fallback: the unit-weight cover value, a feasible upper bound.
        crate::span_sep::SolveKind::Greedy => {
            solve_cover_value(&atoms, req.s, req.z.len(), false)
        }
    }
}

/// String-cover value: infimum proxy of
/// `sum exp(-len(U) s + sup_{X_0[U]} S_len f)` over families of ball-cover
/// string cylinders covering `Z` with lengths in `[N, max_depth]`.
pub fn bpp_cover_value(
    nds: &Nds,
    f: &Potential,
    s: f64,
    min_len: usize,
    cover_radius: f64,
    z: &[usize],
    max_len: usize,
    mode: SolveMode,
) -> Result<f64, Error> {
    if z.is_empty() {
        return Ok(0.0);
    }
    if min_len == 0 || min_len > max_len || max_len > nds.horizon() {
        return Err(Error::InfeasibleSchedule("bad string length range".into()));
    }
    let mut rows: Vec<BitSet> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for len in min_len..=max_len {
        let cylinders = enumerate_cylinders(nds, cover_radius, len, CYLINDER_CAP)?;
        let sums = birkhoff_sums_all(nds, f, 0, len)?;
        for cyl in &cylinders {
            let mut row = BitSet::new(z.len());
            for (zi, &p) in z.iter().enumerate() {
                if cyl.members.contains(p) {
                    row.insert(zi);
                }
            }
            if row.is_empty() {
                continue;
            }
            let sup = cyl.members.iter().map(|x| sums[x]).fold(f64::NEG_INFINITY, f64::max);
            rows.push(row);
            weights.push((-(len as f64) * s + sup).exp());
        }
    }
    let exact = mode.is_exact();
    if exact && z.len() > mode.exact_budget {
        return Err(Error::BudgetExceeded { ground: z.len(), budget: mode.exact_budget });
    }
    let solved = if exact {
        solver::cover_exact(&rows, &weights, z.len())
    } else {
        solver::cover_greedy(&rows, &weights, z.len())
    };
    solved.map(|(_, v)| v).ok_or(Error::NotCoverable)
}

/// Bisection to the crossing of value 1 of a non-increasing function of `s`.
/// The bracket auto-expands geometrically; constant-zero functions give the
/// `-inf` sentinel, functions stuck above 1 give `+inf`.
pub fn jump_point(
    value_fn: &dyn Fn(f64) -> Result<f64, Error>,
    hint: (f64, f64),
) -> Result<JumpPointResult, Error> {
    let (mut lo, mut hi) = hint;
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let mut iterations = 0usize;

    // Expand downward until value(lo) > 1.
    let mut step = (hi - lo).max(1.0);
    let mut v_lo = value_fn(lo)?;
    while v_lo <= 1.0 {
        if v_lo == 0.0 && lo < -1e6 {
            return Ok(JumpPointResult {
                s_star: f64::NEG_INFINITY,
                bracket: (f64::NEG_INFINITY, f64::NEG_INFINITY),
                values_at_bracket: (v_lo, v_lo),
                iterations,
            });
        }
        hi = hi.min(lo);
        lo -= step;
        step *= 2.0;
        iterations += 1;
        if iterations > 80 {
            return Ok(JumpPointResult {
                s_star: f64::NEG_INFINITY,
                bracket: (f64::NEG_INFINITY, f64::NEG_INFINITY),
                values_at_bracket: (v_lo, v_lo),
                iterations,
            });
        }
        v_lo = value_fn(lo)?;
    }
    // Expand upward until value(hi) <= 1.
    step = (hi - lo).max(1.0);
    let mut v_hi = value_fn(hi)?;
    while v_hi > 1.0 {
        lo = lo.max(hi);
        v_lo = v_hi;
        hi += step;
        step *= 2.0;
        iterations += 1;
        if iterations > 160 || !v_hi.is_finite() {
            return Ok(JumpPointResult {
                s_star: f64::INFINITY,
                bracket: (f64::INFINITY, f64::INFINITY),
                values_at_bracket: (v_hi, v_hi),
                iterations,
            });
        }
        v_hi = value_fn(hi)?;
    }

    // Monotonicity spot check over the bracket.
    let mut prev = f64::INFINITY;
    for i in 0..5 {
        let s = lo + (hi - lo) * i as f64 / 4.0;
        let v = value_fn(s)?;
        if v > prev * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::NonMonotoneValue(s));
        }
        prev = v;
    }

    while hi - lo > JUMP_TOL {
        let mid = 0.5 * (lo + hi);
        let v = value_fn(mid)?;
        iterations += 1;
        if v > 1.0 {
            lo = mid;
            v_lo = v;
        } else {
            hi = mid;
            v_hi = v;
        }
    }
    Ok(JumpPointResult {
        s_star: 0.5 * (lo + hi),
        bracket: (lo, hi),
        values_at_bracket: (v_lo, v_hi),
        iterations,
    })
}

fn jump_cells_to_estimate(
    results: &[(f64, JumpPointResult)],
    n_for_cells: usize,
    certified: bool,
) -> PressureEstimate {
    let cells: Vec<Cell> = results
        .iter()
        .map(|&(eps, r)| Cell { n: n_for_cells, eps, value: r.s_star, certified })
        .collect();
    let last = results.last().expect("at least one radius").1;
    // The jump value increases as eps shrinks; allow bisection slack.
    let mut monotone = true;
    for w in results.windows(2) {
        if w[1].1.s_star < w[0].1.s_star - 2.0 * JUMP_TOL {
            monotone = false;
        }
    }
    let certified_cells = cells.iter().filter(|c| c.certified).count();
    PressureEstimate {
        value_lower_proxy: last.bracket.0,
        value_upper_proxy: last.bracket.1,
        value: last.s_star,
        per_cell: cells,
        epsilon_monotone_ok: monotone,
        certified_cells,
        diagnostics: BTreeMap::new(),
    }
}

/// Bowen pressure `P^B`: the jump point of the Bowen measure value per
/// scheduled radius, with atom depths spanning the tail window
/// (`N` = first tail depth, cap = `n_max`). The headline value sits at the
/// smallest radius; the proxies are its bisection bracket ends.
pub fn bowen_pressure(
    nds: &Nds,
    f: &Potential,
    z: &[usize],
    schedule: &Schedule,
) -> Result<PressureEstimate, Error> {
    schedule.validate(nds)?;
    f.validate_for(nds)?;
    let min_depth = schedule.tail()[0];
    let max_depth = schedule.n_max();
    if z.is_empty() {
        return Ok(jump_cells_to_estimate(
            &schedule
                .eps_list
                .iter()
                .map(|&e| {
                    (
                        e,
                        JumpPointResult {
                            s_star: f64::NEG_INFINITY,
                            bracket: (f64::NEG_INFINITY, f64::NEG_INFINITY),
                            values_at_bracket: (0.0, 0.0),
                            iterations: 0,
                        },
                    )
                })
                .collect::<Vec<_>>(),
            max_depth,
            true,
        ));
    }
    let exact = resolve_exact(schedule.mode, z.len())?;
    let mut results = Vec::new();
    for &eps in &schedule.eps_list {
        let req = MeasureValueRequest {
            s: 0.0,
            min_depth,
            epsilon: eps,
            z: z.to_vec(),
            mode: schedule.mode,
            max_depth,
        };
        req.validate(nds)?;
        let atoms = build_cover_atoms(nds, f, &req)?;
        let jump = jump_point(&|s| solve_cover_value(&atoms, s, z.len(), exact), (0.0, 1.0))?;
        results.push((eps, jump));
    }
    let certified = schedule.mode.is_exact();
    Ok(jump_cells_to_estimate(&results, max_depth, certified))
}

/// Packing pressure `P^P`: the jump point of the modified packing value per
/// scheduled radius. Also reports the inf-sup characterization (minimum over
/// pooled decompositions of the maximal per-part upper separated estimate)
/// as the `inf_sup_alternative` diagnostic.
pub fn packing_pressure(
    nds: &Nds,
    f: &Potential,
    z: &[usize],
    schedule: &Schedule,
) -> Result<PressureEstimate, Error> {
    schedule.validate(nds)?;
    f.validate_for(nds)?;
    let max_depth = schedule.n_max();
    let pool = partition_pool(nds, z, &schedule.eps_list);
    let mut results = Vec::new();
    for &eps in &schedule.eps_list {
        let jump = if z.is_empty() {
            JumpPointResult {
                s_star: f64::NEG_INFINITY,
                bracket: (f64::NEG_INFINITY, f64::NEG_INFINITY),
                values_at_bracket: (0.0, 0.0),
                iterations: 0,
            }
        } else {
            let prepared = PreparedModifiedPacking::prepare(
                nds,
                f,
                eps,
                z,
                &pool,
                max_depth,
                schedule.mode,
            )?;
            jump_point(&|s| Ok(prepared.value(s)), (0.0, 1.0))?
        };
        results.push((eps, jump));
    }
    let certified = schedule.mode.is_exact();
    let mut estimate = jump_cells_to_estimate(&results, max_depth, certified);

    // Inf-sup alternative over the trivial partition and far-component
    // splits: min over decompositions of the max per-part sep-upper estimate.
    let mut alt_pool: Vec<Vec<Vec<usize>>> = vec![vec![z.to_vec()]];
    if let Some(split) = far_component_partition(nds, z, 2.0 * schedule.eps_list[0]) {
        alt_pool.push(split);
    }
    let mut alternative = f64::INFINITY;
    for partition in &alt_pool {
        let mut worst = f64::NEG_INFINITY;
        for part in partition {
            let est = capacity_pressure(nds, f, part, CapacityKind::SepUpper, schedule)?;
            worst = worst.max(est.value_upper_proxy);
        }
        alternative = alternative.min(worst);
    }
    estimate.diagnostics.insert("inf_sup_alternative".to_string(), alternative);
    Ok(estimate)
}
