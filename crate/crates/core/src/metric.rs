//! Finite metric spaces: validation, balls, greedy ε-nets and the 5r covering lemma.

use std::fmt;
use std::sync::Arc;

use crate::error::Error;

/// Absolute tolerance for the metric axioms. Dyadic word metrics are exact in
/// binary floating point, so symbolic spaces validate with zero slack.
pub const TAU_METRIC: f64 = 1e-9;

/// Point count above which distances are kept as a closed form instead of a
/// dense table. Pairwise kernels dominate runtime, so tables win below this.
pub const TABLE_LIMIT: usize = 4096;

enum DistKind {
    Table(Vec<f64>),
    Formula(Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>),
}

/// A finite point set `0..point_count` with an explicit metric.
///
/// Immutable after construction; cheap to share behind `Arc`.
pub struct MetricSpace {
    point_count: usize,
    dist: DistKind,
    diameter: f64,
}

impl fmt::Debug for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricSpace")
            .field("point_count", &self.point_count)
            .field("diameter", &self.diameter)
            .field(
                "dist",
                &match self.dist {
                    DistKind::Table(_) => "table",
                    DistKind::Formula(_) => "formula",
                },
            )
            .finish()
    }
}

impl MetricSpace {
    /// Builds a space from an explicit distance function. The function is
    /// materialized into a dense table when `point_count <= TABLE_LIMIT`.
    pub fn from_fn(
        point_count: usize,
        f: impl Fn(usize, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(point_count > 0, "a metric space needs at least one point");
        if point_count <= TABLE_LIMIT {
            let mut table = vec![0.0; point_count * point_count];
            let mut diameter = 0.0f64;
            for i in 0..point_count {
                for j in 0..point_count {
                    let d = f(i, j);
                    table[i * point_count + j] = d;
                    diameter = diameter.max(d);
                }
            }
            MetricSpace {
                point_count,
                dist: DistKind::Table(table),
                diameter,
            }
        } else {
            let mut diameter = 0.0f64;
            // Diameter by row scan; exact, one pass.
            for i in 0..point_count {
                for j in (i + 1)..point_count {
                    diameter = diameter.max(f(i, j));
                }
            }
            MetricSpace {
                point_count,
                dist: DistKind::Formula(Arc::new(f)),
                diameter,
            }
        }
    }

    /// Builds a space from a dense row-major distance table.
    pub fn from_table(point_count: usize, table: Vec<f64>) -> Self {
        assert_eq!(table.len(), point_count * point_count);
        let diameter = table.iter().cloned().fold(0.0f64, f64::max);
        MetricSpace {
            point_count,
            dist: DistKind::Table(table),
            diameter,
        }
    }

    /// The discrete metric: every pair of distinct points at distance 1.
    pub fn discrete(point_count: usize) -> Self {
        MetricSpace::from_fn(point_count, |i, j| if i == j { 0.0 } else { 1.0 })
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.point_count && j < self.point_count);
        match &self.dist {
            DistKind::Table(t) => t[i * self.point_count + j],
            DistKind::Formula(f) => f(i, j),
        }
    }
}

/// One violated metric axiom together with a witness.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricViolation {
    /// `dist(i, i)` is not 0.
    NonzeroSelfDistance { point: usize, value: f64 },
    /// `dist(i, j) != dist(j, i)`.
    Asymmetry { i: usize, j: usize, forward: f64, backward: f64 },
    /// `dist(i, j) <= 0` for distinct points.
    IndistinctPoints { i: usize, j: usize, value: f64 },
    /// `dist(i, j) > dist(i, k) + dist(k, j)` beyond tolerance.
    TriangleInequality { i: usize, k: usize, j: usize, excess: f64 },
    /// Cached diameter does not match the table maximum.
    DiameterMismatch { cached: f64, actual: f64 },
}

/// Checks all metric axioms within `TAU_METRIC`. Violations are data, not
/// faults: the report is empty iff the space is a metric space.
///
/// The triangle scan is cubic in the point count; intended for desk-scale
/// spaces.
pub fn validate_metric(space: &MetricSpace) -> Vec<MetricViolation> {
    let n = space.point_count;
    let mut report = Vec::new();
    let mut actual_diam = 0.0f64;
    for i in 0..n {
        let dii = space.dist(i, i);
        if dii.abs() > TAU_METRIC {
            report.push(MetricViolation::NonzeroSelfDistance { point: i, value: dii });
        }
        for j in 0..n {
            let dij = space.dist(i, j);
            actual_diam = actual_diam.max(dij);
            if j > i {
                let dji = space.dist(j, i);
                if (dij - dji).abs() > TAU_METRIC {
                    report.push(MetricViolation::Asymmetry { i, j, forward: dij, backward: dji });
                }
                if dij <= TAU_METRIC {
                    report.push(MetricViolation::IndistinctPoints { i, j, value: dij });
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dij = space.dist(i, j);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let detour = space.dist(i, k) + space.dist(k, j);
                if dij > detour + TAU_METRIC {
                    report.push(MetricViolation::TriangleInequality {
                        i,
                        k,
                        j,
                        excess: dij - detour,
                    });
                }
            }
        }
    }
    if (space.diameter - actual_diam).abs() > TAU_METRIC {
        report.push(MetricViolation::DiameterMismatch {
            cached: space.diameter,
            actual: actual_diam,
        });
    }
    report
}

/// Points within `radius` of `center`: strict `<` for open balls, `<=` for
/// closed ones. Ascending index order.
pub fn ball_members(
    space: &MetricSpace,
    center: usize,
    radius: f64,
    closed: bool,
) -> Result<Vec<usize>, Error> {
    if center >= space.point_count {
        return Err(Error::IndexOutOfRange {
            index: center,
            len: space.point_count,
        });
    }
    let mut members = Vec::new();
    for j in 0..space.point_count {
        let d = space.dist(center, j);
        let inside = if closed { d <= radius } else { d < radius };
        if inside {
            members.push(j);
        }
    }
    Ok(members)
}

/// One ball of a [`BallFamily`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub closed: bool,
}

/// A list of balls in one host space, with optional cached member sets.
#[derive(Clone, Debug, Default)]
pub struct BallFamily {
    pub atoms: Vec<Ball>,
}

impl BallFamily {
    pub fn new(atoms: Vec<Ball>) -> Self {
        BallFamily { atoms }
    }
}

/// Greedy 5r covering lemma: returns indices (into `family.atoms`) of a
/// pairwise-disjoint subfamily whose 5x-inflated balls cover the union of the
/// input family. Selection order: descending radius, ties by ascending center
/// index; exact duplicate balls are considered once.
pub fn five_r_disjoint_subfamily(
    space: &MetricSpace,
    family: &BallFamily,
) -> Result<Vec<usize>, Error> {
    let mut order: Vec<usize> = (0..family.atoms.len()).collect();
    order.sort_by(|&a, &b| {
        let ba = &family.atoms[a];
        let bb = &family.atoms[b];
        bb.radius
            .total_cmp(&ba.radius)
            .then(ba.center.cmp(&bb.center))
            .then(ba.closed.cmp(&bb.closed))
            .then(a.cmp(&b))
    });

    let mut members: Vec<Option<Vec<usize>>> = vec![None; family.atoms.len()];
    let mut chosen: Vec<usize> = Vec::new();
    let mut seen: Vec<Ball> = Vec::new();
    for idx in order {
        let ball = family.atoms[idx];
        if seen
            .iter()
            .any(|b| b.center == ball.center && b.radius == ball.radius && b.closed == ball.closed)
        {
            continue;
        }
        seen.push(ball);
        let m = ball_members(space, ball.center, ball.radius, ball.closed)?;
        let disjoint = chosen.iter().all(|&c| {
            let cm = members[c].as_ref().unwrap();
            !overlaps(cm, &m)
        });
        if disjoint {
            members[idx] = Some(m);
            chosen.push(idx);
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

fn overlaps(a: &[usize], b: &[usize]) -> bool {
    // Both sorted ascending.
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Greedy ε-net over `subset`: every subset point ends within `epsilon`
/// (closed) of a net point, and net points are pairwise more than `epsilon`
/// apart. Lowest index wins ties. Empty subset gives an empty net.
pub fn greedy_epsilon_net(space: &MetricSpace, subset: &[usize], epsilon: f64) -> Vec<usize> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let mut net: Vec<usize> = Vec::new();
    for &p in subset {
        debug_assert!(p < space.point_count);
        if net.iter().all(|&q| space.dist(p, q) > epsilon) {
            net.push(p);
        }
    }
    net
}
