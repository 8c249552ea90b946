//! Staged nonautonomous systems: stage-map compositions, Bowen metrics and
//! balls, and the system transformations (power, product, restriction,
//! conjugacy image, bounded-metric transform).

use std::sync::{Arc, Mutex};

use crate::error::Error;
use crate::metric::MetricSpace;

/// A finite-horizon nonautonomous system: stage spaces `X_0 .. X_H` and stage
/// maps `T_k : X_k -> X_{k+1}` for `k < H`, given as index arrays.
///
/// Immutable after construction. The trajectory memo is interior-mutable with
/// a first-computation-wins contract; all readers see identical rows.
pub struct Nds {
    label: String,
    stages: Vec<Arc<MetricSpace>>,
    maps: Vec<Arc<Vec<u32>>>,
    // traj[k][j] = the map T_k^j as an index array over X_k (row 0 = identity).
    traj: Mutex<Vec<Vec<Arc<Vec<u32>>>>>,
}

impl std::fmt::Debug for Nds {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Nds")
            .field("label", &self.label)
            .field("horizon", &self.horizon())
            .field(
                "stage_sizes",
                &self.stages.iter().map(|s| s.point_count()).collect::<Vec<_>>(),
            )
            .finish()
    }
}

impl Nds {
    /// `stages.len()` must be `maps.len() + 1`; `maps[k]` sends `X_k` into
    /// `X_{k+1}`. Stage maps need not be injective or surjective.
    pub fn new(
        label: impl Into<String>,
        stages: Vec<Arc<MetricSpace>>,
        maps: Vec<Arc<Vec<u32>>>,
    ) -> Result<Self, Error> {
        if stages.is_empty() || stages.len() != maps.len() + 1 {
            return Err(Error::Config(format!(
                "need maps.len()+1 stages, got {} stages and {} maps",
                stages.len(),
                maps.len()
            )));
        }
        for (k, map) in maps.iter().enumerate() {
            if map.len() != stages[k].point_count() {
                return Err(Error::Config(format!(
                    "map at level {k} has {} entries for {} points",
                    map.len(),
                    stages[k].point_count()
                )));
            }
            let next = stages[k + 1].point_count();
            if let Some((i, _)) = map.iter().enumerate().find(|(_, &v)| v as usize >= next) {
                return Err(Error::Config(format!(
                    "map at level {k} sends point {i} outside X_{}",
                    k + 1
                )));
            }
        }
        let levels = stages.len();
        Ok(Nds {
            label: label.into(),
            stages,
            maps,
            traj: Mutex::new(vec![Vec::new(); levels]),
        })
    }

    /// Identity maps at every stage over one shared space.
    pub fn identity(label: impl Into<String>, space: Arc<MetricSpace>, horizon: usize) -> Self {
        let id: Arc<Vec<u32>> = Arc::new((0..space.point_count() as u32).collect());
        let stages = vec![space; horizon + 1];
        let maps = vec![id; horizon];
        Nds::new(label, stages, maps).expect("identity system is well formed")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Largest level reachable by composed maps; spaces exist for `0..=horizon`.
    pub fn horizon(&self) -> usize {
        self.maps.len()
    }

    pub fn stage(&self, k: usize) -> &Arc<MetricSpace> {
        &self.stages[k]
    }

    pub fn stage_map(&self, k: usize) -> &Arc<Vec<u32>> {
        &self.maps[k]
    }

    /// The composed map `T_k^j : X_k -> X_{k+j}` (`j = 0` is the identity).
    pub fn compose(&self, k: usize, j: usize) -> Result<Arc<Vec<u32>>, Error> {
        if k + j > self.horizon() {
            return Err(Error::HorizonExceeded { level: k, depth: j, horizon: self.horizon() });
        }
        let mut memo = self.traj.lock().unwrap();
        let rows = &mut memo[k];
        if rows.is_empty() {
            rows.push(Arc::new((0..self.stages[k].point_count() as u32).collect()));
        }
        while rows.len() <= j {
            let depth = rows.len();
            let prev = rows[depth - 1].clone();
            let step = &self.maps[k + depth - 1];
            let next: Vec<u32> = prev.iter().map(|&p| step[p as usize]).collect();
            rows.push(Arc::new(next));
        }
        Ok(rows[j].clone())
    }

    /// Trajectory rows `T_k^0 .. T_k^{n-1}` for a depth-`n` Bowen computation.
    pub fn traj_rows(&self, k: usize, n: usize) -> Result<Vec<Arc<Vec<u32>>>, Error> {
        if n == 0 {
            return Ok(Vec::new());
        }
        self.check_depth(k, n)?;
        (0..n).map(|j| self.compose(k, j)).collect()
    }

    fn check_depth(&self, k: usize, n: usize) -> Result<(), Error> {
        if n == 0 || k + n > self.horizon() + 1 {
            return Err(Error::HorizonExceeded { level: k, depth: n, horizon: self.horizon() });
        }
        Ok(())
    }

    /// `d_{k,n}(x, y) = max_{0<=j<n} d_{k+j}(T_k^j x, T_k^j y)`.
    pub fn bowen_distance(&self, k: usize, n: usize, x: usize, y: usize) -> Result<f64, Error> {
        let kernel = BowenKernel::new(self, k, n)?;
        Ok(kernel.distance(x, y))
    }

    /// Members of a Bowen ball, ascending point order.
    pub fn bowen_ball_members(&self, atom: &BowenAtom) -> Result<Vec<usize>, Error> {
        atom.validate(self)?;
        let kernel = BowenKernel::new(self, atom.level, atom.depth)?;
        let count = self.stages[atom.level].point_count();
        let mut members = Vec::new();
        for y in 0..count {
            if kernel.within(atom.center, y, atom.radius, atom.closed) {
                members.push(y);
            }
        }
        Ok(members)
    }

    /// The same ball as the intersection of stage-ball preimages; preimages
    /// are taken by scanning the forward index arrays.
    pub fn bowen_ball_members_via_preimages(&self, atom: &BowenAtom) -> Result<Vec<usize>, Error> {
        atom.validate(self)?;
        let rows = self.traj_rows(atom.level, atom.depth)?;
        let count = self.stages[atom.level].point_count();
        let mut alive: Vec<bool> = vec![true; count];
        for (j, row) in rows.iter().enumerate() {
            let space = &self.stages[atom.level + j];
            let cj = row[atom.center] as usize;
            for (y, flag) in alive.iter_mut().enumerate() {
                if *flag {
                    let d = space.dist(cj, row[y] as usize);
                    let inside = if atom.closed { d <= atom.radius } else { d < atom.radius };
                    if !inside {
                        *flag = false;
                    }
                }
            }
        }
        Ok(alive
            .iter()
            .enumerate()
            .filter_map(|(y, &f)| f.then_some(y))
            .collect())
    }

    /// The m-th power system: stage `k` is `X_{km}` with map `T_{km}^m`.
    pub fn power_system(&self, m: usize) -> Result<Nds, Error> {
        if m == 0 {
            return Err(Error::Config("power exponent must be >= 1".into()));
        }
        if m > self.horizon() {
            return Err(Error::HorizonExceeded { level: 0, depth: m, horizon: self.horizon() });
        }
        let new_h = self.horizon() / m;
        let stages: Vec<Arc<MetricSpace>> =
            (0..=new_h).map(|k| self.stages[k * m].clone()).collect();
        let maps: Vec<Arc<Vec<u32>>> =
            (0..new_h).map(|k| self.compose(k * m, m)).collect::<Result<_, _>>()?;
        Nds::new(format!("{}^[{m}]", self.label), stages, maps)
    }

    /// Restriction to the forward orbit of a non-empty `K` at level 0.
    pub fn restrict_to_compact(&self, k_set: &[usize]) -> Result<Nds, Error> {
        if k_set.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut level_points: Vec<Vec<usize>> = Vec::with_capacity(self.stages.len());
        let mut current: Vec<usize> = k_set.to_vec();
        current.sort_unstable();
        current.dedup();
        if let Some(&max) = current.last() {
            if max >= self.stages[0].point_count() {
                return Err(Error::IndexOutOfRange { index: max, len: self.stages[0].point_count() });
            }
        }
        level_points.push(current.clone());
        for map in &self.maps {
            let mut next: Vec<usize> = current.iter().map(|&p| map[p] as usize).collect();
            next.sort_unstable();
            next.dedup();
            level_points.push(next.clone());
            current = next;
        }

        let mut stages = Vec::with_capacity(level_points.len());
        for (k, pts) in level_points.iter().enumerate() {
            let parent = self.stages[k].clone();
            let pts = pts.clone();
            stages.push(Arc::new(MetricSpace::from_fn(pts.len(), move |i, j| {
                parent.dist(pts[i], pts[j])
            })));
        }
        let mut maps = Vec::with_capacity(self.maps.len());
        for (k, map) in self.maps.iter().enumerate() {
            let next_pts = &level_points[k + 1];
            let restricted: Vec<u32> = level_points[k]
                .iter()
                .map(|&p| {
                    let img = map[p] as usize;
                    next_pts.binary_search(&img).expect("image point present") as u32
                })
                .collect();
            maps.push(Arc::new(restricted));
        }
        Nds::new(format!("{}|K", self.label), stages, maps)
    }

    /// Image system under per-level relabelings `pi`. With `new_metrics`
    /// absent the metric is transported, making `pi` an isometric relabeling.
    ///
    /// The commutation identity of the induced maps is re-verified pointwise;
    /// a broken (non-bijective) `pi` surfaces as a failure witness.
    pub fn apply_conjugacy(
        &self,
        pi: &[Vec<u32>],
        new_metrics: Option<Vec<Arc<MetricSpace>>>,
    ) -> Result<Nds, Error> {
        if pi.len() != self.stages.len() {
            return Err(Error::LevelMismatch(format!(
                "{} relabelings for {} levels",
                pi.len(),
                self.stages.len()
            )));
        }
        // First-wins inverses; duplicates leave holes that the commutation
        // check below reports with a witness.
        let mut inverses: Vec<Vec<u32>> = Vec::with_capacity(pi.len());
        for (k, p) in pi.iter().enumerate() {
            let count = self.stages[k].point_count();
            if p.len() != count {
                return Err(Error::LevelMismatch(format!(
                    "relabeling at level {k} has {} entries for {count} points",
                    p.len()
                )));
            }
            let mut inv = vec![u32::MAX; count];
            for (i, &v) in p.iter().enumerate() {
                if (v as usize) >= count {
                    return Err(Error::IndexOutOfRange { index: v as usize, len: count });
                }
                if inv[v as usize] == u32::MAX {
                    inv[v as usize] = i as u32;
                }
            }
            inverses.push(inv);
        }

        let mut maps: Vec<Arc<Vec<u32>>> = Vec::with_capacity(self.maps.len());
        for (k, map) in self.maps.iter().enumerate() {
            let inv = &inverses[k];
            let count = self.stages[k].point_count();
            let induced: Vec<u32> = (0..count)
                .map(|y| {
                    let x = inv[y];
                    if x == u32::MAX {
                        u32::MAX
                    } else {
                        pi[k + 1][map[x as usize] as usize]
                    }
                })
                .collect();
            // R_k(pi_k(x)) must equal pi_{k+1}(T_k(x)) for every x.
            for x in 0..count {
                let lhs = induced[pi[k][x] as usize];
                let rhs = pi[k + 1][map[x] as usize];
                if lhs != rhs {
                    return Err(Error::CommutationFailure { level: k, point: x });
                }
            }
            maps.push(Arc::new(induced));
        }

        let stages: Vec<Arc<MetricSpace>> = match new_metrics {
            Some(ms) => {
                if ms.len() != self.stages.len() {
                    return Err(Error::LevelMismatch("new_metrics level count".into()));
                }
                ms
            }
            None => self
                .stages
                .iter()
                .zip(&inverses)
                .map(|(space, inv)| {
                    let space = space.clone();
                    let inv = inv.clone();
                    Arc::new(MetricSpace::from_fn(space.point_count(), move |a, b| {
                        space.dist(inv[a] as usize, inv[b] as usize)
                    }))
                })
                .collect(),
        };
        Nds::new(format!("{}~", self.label), stages, maps)
    }

    /// Replaces every stage metric `d` by `d/(1+d)`. Bowen distances transform
    /// through the same monotone map, so `(n, e/(1+e))` data of the result
    /// matches `(n, e)` data of the source exactly.
    pub fn bounded_metric_transform(&self) -> Nds {
        let stages: Vec<Arc<MetricSpace>> = self
            .stages
            .iter()
            .map(|space| {
                let space = space.clone();
                Arc::new(MetricSpace::from_fn(space.point_count(), move |a, b| {
                    let d = space.dist(a, b);
                    d / (1.0 + d)
                }))
            })
            .collect();
        Nds::new(format!("{}/b", self.label), stages, self.maps.clone())
            .expect("transform preserves shape")
    }
}

/// Maps a radius through the `d/(1+d)` transform.
pub fn bounded_metric_epsilon(eps: f64) -> f64 {
    eps / (1.0 + eps)
}

/// Descriptor of one Bowen ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BowenAtom {
    pub level: usize,
    pub depth: usize,
    pub center: usize,
    pub radius: f64,
    pub closed: bool,
}

impl BowenAtom {
    pub fn validate(&self, nds: &Nds) -> Result<(), Error> {
        if self.depth == 0 || self.level + self.depth > nds.horizon() + 1 {
            return Err(Error::HorizonExceeded {
                level: self.level,
                depth: self.depth,
                horizon: nds.horizon(),
            });
        }
        let count = nds.stage(self.level).point_count();
        if self.center >= count {
            return Err(Error::IndexOutOfRange { index: self.center, len: count });
        }
        if !(self.radius > 0.0) {
            return Err(Error::Config("Bowen atom radius must be positive".into()));
        }
        Ok(())
    }
}

/// Precomputed trajectory rows for fast repeated Bowen-distance evaluation
/// at one `(level, depth)` pair.
pub struct BowenKernel {
    spaces: Vec<Arc<MetricSpace>>,
    rows: Vec<Arc<Vec<u32>>>,
}

impl BowenKernel {
    pub fn new(nds: &Nds, level: usize, depth: usize) -> Result<Self, Error> {
        nds.check_depth(level, depth)?;
        let rows = nds.traj_rows(level, depth)?;
        let spaces = (0..depth).map(|j| nds.stage(level + j).clone()).collect();
        Ok(BowenKernel { spaces, rows })
    }

    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn distance(&self, x: usize, y: usize) -> f64 {
        let mut best = 0.0f64;
        for (row, space) in self.rows.iter().zip(&self.spaces) {
            let d = space.dist(row[x] as usize, row[y] as usize);
            if d > best {
                best = d;
            }
        }
        best
    }

    /// `d(x, y) <= eps` (closed) or `< eps` (open), with early exit.
    #[inline]
    pub fn within(&self, x: usize, y: usize, eps: f64, closed: bool) -> bool {
        for (row, space) in self.rows.iter().zip(&self.spaces) {
            let d = space.dist(row[x] as usize, row[y] as usize);
            let outside = if closed { d > eps } else { d >= eps };
            if outside {
                return false;
            }
        }
        true
    }

    /// Strict separation predicate `d(x, y) > eps`, with early exit.
    #[inline]
    pub fn separated(&self, x: usize, y: usize, eps: f64) -> bool {
        for (row, space) in self.rows.iter().zip(&self.spaces) {
            if space.dist(row[x] as usize, row[y] as usize) > eps {
                return true;
            }
        }
        false
    }
}

/// Direct product with the max metric; points are indexed `i * |Y_k| + j`.
pub fn product_system(a: &Nds, b: &Nds) -> Result<Nds, Error> {
    let horizon = a.horizon().min(b.horizon());
    let mut stages = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        let sa = a.stage(k).clone();
        let sb = b.stage(k).clone();
        let nb = sb.point_count();
        let count = sa.point_count() * nb;
        stages.push(Arc::new(MetricSpace::from_fn(count, move |p, q| {
            let (pa, pb) = (p / nb, p % nb);
            let (qa, qb) = (q / nb, q % nb);
            sa.dist(pa, qa).max(sb.dist(pb, qb))
        })));
    }
    let mut maps = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let ma = a.stage_map(k).clone();
        let mb = b.stage_map(k).clone();
        let nb = b.stage(k).point_count();
        let nb_next = b.stage(k + 1).point_count();
        let count = a.stage(k).point_count() * nb;
        let map: Vec<u32> = (0..count)
            .map(|p| {
                let (pa, pb) = (p / nb, p % nb);
                ma[pa] * nb_next as u32 + mb[pb]
            })
            .collect();
        maps.push(Arc::new(map));
    }
    Nds::new(format!("{}x{}", a.label(), b.label()), stages, maps)
}
