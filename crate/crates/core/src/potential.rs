//! Potential sequences, Birkhoff-type sums, norms, and induced potentials for
//! power, product and conjugated systems.

use crate::error::Error;
use crate::nds::Nds;

/// Per-level real values over the stage point sets.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    values: Vec<Vec<f64>>,
    label: String,
}

impl Potential {
    pub fn new(label: impl Into<String>, values: Vec<Vec<f64>>) -> Result<Self, Error> {
        for (k, level) in values.iter().enumerate() {
            if let Some(v) = level.iter().find(|v| !v.is_finite()) {
                return Err(Error::Config(format!("non-finite potential value {v} at level {k}")));
            }
        }
        Ok(Potential { values: values.clone(), label: label.into() })
    }

    /// Checks the per-level lengths against the stage point counts.
    pub fn validate_for(&self, nds: &Nds) -> Result<(), Error> {
        if self.values.len() < nds.horizon() + 1 {
            return Err(Error::LevelMismatch(format!(
                "potential '{}' provides {} levels, system needs {}",
                self.label,
                self.values.len(),
                nds.horizon() + 1
            )));
        }
        for k in 0..=nds.horizon() {
            if self.values[k].len() != nds.stage(k).point_count() {
                return Err(Error::LevelMismatch(format!(
                    "potential '{}' level {k}: {} values for {} points",
                    self.label,
                    self.values[k].len(),
                    nds.stage(k).point_count()
                )));
            }
        }
        Ok(())
    }

    /// The constant sequence `a * 1`.
    pub fn constant(nds: &Nds, a: f64) -> Self {
        let values = (0..=nds.horizon())
            .map(|k| vec![a; nds.stage(k).point_count()])
            .collect();
        Potential { values, label: format!("const{a}") }
    }

    pub fn zero(nds: &Nds) -> Self {
        Potential::constant(nds, 0.0).relabel("zero")
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn levels(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn value(&self, level: usize, point: usize) -> f64 {
        self.values[level][point]
    }

    pub fn level_values(&self, level: usize) -> &[f64] {
        &self.values[level]
    }

    /// Entrywise absolute value `|f|`.
    pub fn abs(&self) -> Potential {
        Potential {
            values: self.values.iter().map(|l| l.iter().map(|v| v.abs()).collect()).collect(),
            label: format!("|{}|", self.label),
        }
    }

    pub fn scale(&self, c: f64) -> Potential {
        Potential {
            values: self.values.iter().map(|l| l.iter().map(|v| c * v).collect()).collect(),
            label: format!("{c}*{}", self.label),
        }
    }

    pub fn add_constant(&self, a: f64) -> Potential {
        Potential {
            values: self.values.iter().map(|l| l.iter().map(|v| v + a).collect()).collect(),
            label: format!("{}+{a}", self.label),
        }
    }

    /// Pointwise `f - g` on the shared levels.
    pub fn sub(&self, other: &Potential) -> Potential {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Potential { values, label: format!("{}-{}", self.label, other.label) }
    }

    /// The partial order `f <= g` pointwise over the shared levels.
    pub fn le(&self, other: &Potential) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x <= y))
    }
}

/// `S_{k,n} f (x) = sum_{j<n} f_{k+j}(T_k^j x)`; `n = 0` returns 0.
pub fn birkhoff_sum(nds: &Nds, f: &Potential, k: usize, n: usize, x: usize) -> Result<f64, Error> {
    if n == 0 {
        return Ok(0.0);
    }
    let rows = nds.traj_rows(k, n)?;
    let mut sum = 0.0;
    for (j, row) in rows.iter().enumerate() {
        sum += f.value(k + j, row[x] as usize);
    }
    Ok(sum)
}

/// Birkhoff sums of every point of `X_k` at once, one pass over the rows.
pub fn birkhoff_sums_all(nds: &Nds, f: &Potential, k: usize, n: usize) -> Result<Vec<f64>, Error> {
    let count = nds.stage(k).point_count();
    if n == 0 {
        return Ok(vec![0.0; count]);
    }
    let rows = nds.traj_rows(k, n)?;
    let mut sums = vec![0.0; count];
    for (j, row) in rows.iter().enumerate() {
        let level = f.level_values(k + j);
        for (x, s) in sums.iter_mut().enumerate() {
            *s += level[row[x] as usize];
        }
    }
    Ok(sums)
}

/// `sup_k max_x |f_k(x)|` over the provided levels.
pub fn sup_norm(f: &Potential) -> f64 {
    let mut best = 0.0f64;
    for level in 0..f.levels() {
        for &v in f.level_values(level) {
            best = best.max(v.abs());
        }
    }
    best
}

/// The induced potential `f^[m]` on the m-th power system:
/// level-k value at x is `S_{km,m} f (x)`.
pub fn power_potential(nds: &Nds, f: &Potential, m: usize) -> Result<Potential, Error> {
    if m == 0 {
        return Err(Error::Config("power exponent must be >= 1".into()));
    }
    let new_h = nds.horizon() / m;
    let mut values = Vec::with_capacity(new_h + 1);
    for k in 0..=new_h {
        let count = nds.stage(k * m).point_count();
        if k * m + m <= nds.horizon() + 1 {
            values.push(birkhoff_sums_all(nds, f, k * m, m)?);
        } else {
            // Top level of the power system: no further maps are consumed,
            // truncate the window to what the horizon provides.
            let avail = nds.horizon() + 1 - k * m;
            values.push(birkhoff_sums_all(nds, f, k * m, avail)?);
        }
        debug_assert_eq!(values.last().unwrap().len(), count);
    }
    Potential::new(format!("{}^[{m}]", f.label()), values)
}

/// `f (+) g` on the product system: `(f (+) g)_k(x, y) = f_k(x) + g_k(y)`.
pub fn product_potential(
    a: &Nds,
    b: &Nds,
    f: &Potential,
    g: &Potential,
) -> Result<Potential, Error> {
    let horizon = a.horizon().min(b.horizon());
    let mut values = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        let nb = b.stage(k).point_count();
        let na = a.stage(k).point_count();
        let mut level = Vec::with_capacity(na * nb);
        for i in 0..na {
            for j in 0..nb {
                level.push(f.value(k, i) + g.value(k, j));
            }
        }
        values.push(level);
    }
    Potential::new(format!("{}(+){}", f.label(), g.label()), values)
}

/// Pullback along per-level relabelings: `(pi* g)_k = g_k o pi_k`.
pub fn pullback(pi: &[Vec<u32>], g: &Potential) -> Result<Potential, Error> {
    if pi.len() < g.levels() {
        return Err(Error::LevelMismatch(format!(
            "{} relabeling levels for {} potential levels",
            pi.len(),
            g.levels()
        )));
    }
    let mut values = Vec::with_capacity(g.levels());
    for k in 0..g.levels() {
        if pi[k].len() != g.level_values(k).len() {
            return Err(Error::LevelMismatch(format!("pullback level {k} size mismatch")));
        }
        let level: Vec<f64> =
            (0..pi[k].len()).map(|x| g.value(k, pi[k][x] as usize)).collect();
        values.push(level);
    }
    Potential::new(format!("pi*{}", g.label()), values)
}

/// Table of `(delta, omega(delta))` pairs; `omega` is non-decreasing.
#[derive(Clone, Debug)]
pub struct EquicontinuityTable {
    pub pairs: Vec<(f64, f64)>,
    /// `omega` at the smallest positive stage distance: a 0+ diagnostic.
    pub omega_zero_plus: f64,
}

/// Exact modulus by exhaustive pair scan per level, sup over levels.
/// `omega(delta) = sup |f_k(x) - f_k(y)|` over pairs at stage distance `< delta`.
pub fn equicontinuity_modulus(
    nds: &Nds,
    f: &Potential,
    delta_grid: &[f64],
) -> Result<EquicontinuityTable, Error> {
    for w in delta_grid.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Config("delta grid must be ascending".into()));
        }
    }
    if delta_grid.iter().any(|&d| d <= 0.0) {
        return Err(Error::Config("delta grid must be positive".into()));
    }
    let mut pairs: Vec<(f64, f64)> = delta_grid.iter().map(|&d| (d, 0.0)).collect();
    let mut min_pos_dist = f64::INFINITY;
    let mut omega_zero_plus = 0.0f64;
    for k in 0..=nds.horizon() {
        let space = nds.stage(k);
        let level = f.level_values(k);
        for x in 0..space.point_count() {
            for y in (x + 1)..space.point_count() {
                let d = space.dist(x, y);
                let gap = (level[x] - level[y]).abs();
                for (delta, omega) in pairs.iter_mut() {
                    if d < *delta && gap > *omega {
                        *omega = gap;
                    }
                }
                if d > 0.0 {
                    if d < min_pos_dist {
                        min_pos_dist = d;
                        omega_zero_plus = gap;
                    } else if d == min_pos_dist {
                        omega_zero_plus = omega_zero_plus.max(gap);
                    }
                }
            }
        }
    }
    Ok(EquicontinuityTable { pairs, omega_zero_plus })
}

/// Sup of `|f_k(x) - f_k(y)|` over pairs at stage distance `<= delta`,
/// maximized over levels: the constant used by the spanning/separated
/// sandwich, where spanning pairs sit at distance `<= delta`.
pub fn modulus_le(nds: &Nds, f: &Potential, delta: f64) -> f64 {
    let mut omega = 0.0f64;
    for k in 0..=nds.horizon() {
        let space = nds.stage(k);
        let level = f.level_values(k);
        for x in 0..space.point_count() {
            for y in (x + 1)..space.point_count() {
                if space.dist(x, y) <= delta {
                    omega = omega.max((level[x] - level[y]).abs());
                }
            }
        }
    }
    omega
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    fn shift2(l: usize) -> Nds {
        zoo::make_symbolic(&[2], l).unwrap().0
    }

    /// Number of ones among the first `n` symbols of the `l`-symbol word `w`.
    fn ones_in_prefix(w: usize, n: usize, l: usize) -> u32 {
        ((w >> (l - n)) as u64).count_ones()
    }

    #[test]
    fn birkhoff_basics() {
        let nds = shift2(6);
        let f = zoo::first_symbol_potential(&nds, 1.0);
        assert_eq!(birkhoff_sum(&nds, &f, 0, 0, 3).unwrap(), 0.0);
        assert_eq!(birkhoff_sum(&nds, &f, 0, 1, 3).unwrap(), f.value(0, 3));

        let c = Potential::constant(&nds, -1.5);
        for n in 1..=6 {
            assert_eq!(birkhoff_sum(&nds, &c, 0, n, 7).unwrap(), -1.5 * n as f64);
        }

        // First-symbol weight counts ones along the prefix.
        for w in [0usize, 0b101010, 0b111111, 0b000111] {
            for n in 1..=6 {
                assert_eq!(
                    birkhoff_sum(&nds, &f, 0, n, w).unwrap(),
                    ones_in_prefix(w, n, 6) as f64
                );
            }
        }
    }

    #[test]
    fn birkhoff_additivity_and_norm_bound() {
        let nds = shift2(8);
        // Dyadic coefficient keeps the Birkhoff sums exact in floating point,
        // so the additivity identity can be asserted with equality.
        let f = zoo::first_symbol_potential(&nds, 0.5);
        let g = Potential::constant(&nds, 0.3);
        let mut state = 5u64;
        for _ in 0..50 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = (state >> 33) as usize % 256;
            let n = 1 + (state >> 20) as usize % 5;
            let m = 1 + (state >> 10) as usize % 3;
            if n + m > 8 {
                continue;
            }
            // S_{0,n+m} f = S_{0,n} f + S_{n,m} f (T^n x), exactly.
            let whole = birkhoff_sum(&nds, &f, 0, n + m, x).unwrap();
            let head = birkhoff_sum(&nds, &f, 0, n, x).unwrap();
            let tx = nds.compose(0, n).unwrap()[x] as usize;
            let tail = birkhoff_sum(&nds, &f, n, m, tx).unwrap();
            assert_eq!(whole, head + tail);

            // |S_n f - S_n g| <= n * ||f - g||.
            let sf = birkhoff_sum(&nds, &f, 0, n, x).unwrap();
            let sg = birkhoff_sum(&nds, &g, 0, n, x).unwrap();
            assert!((sf - sg).abs() <= n as f64 * sup_norm(&f.sub(&g)) + 1e-12);
        }
    }

    #[test]
    fn order_implies_birkhoff_order() {
        let nds = shift2(5);
        let f = zoo::first_symbol_potential(&nds, 0.5);
        let g = f.add_constant(0.25);
        assert!(f.le(&g));
        for x in 0..32 {
            for n in 1..=5 {
                assert!(
                    birkhoff_sum(&nds, &f, 0, n, x).unwrap()
                        <= birkhoff_sum(&nds, &g, 0, n, x).unwrap()
                );
            }
        }
    }

    #[test]
    fn sup_norm_cases() {
        let nds = shift2(4);
        assert_eq!(sup_norm(&Potential::zero(&nds)), 0.0);
        assert_eq!(sup_norm(&Potential::constant(&nds, -2.0)), 2.0);

        let mut values: Vec<Vec<f64>> = Vec::new();
        let mut state = 11u64;
        let mut expected = 0.0f64;
        for k in 0..=nds.horizon() {
            let mut level = Vec::new();
            for _ in 0..nds.stage(k).point_count() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0;
                expected = expected.max(v.abs());
                level.push(v);
            }
            values.push(level);
        }
        let f = Potential::new("rand", values).unwrap();
        assert_eq!(sup_norm(&f), expected);
    }

    #[test]
    fn power_potential_identity() {
        let nds = shift2(8);
        let f = zoo::first_symbol_potential(&nds, 1.0);
        for m in [1usize, 2, 4] {
            let power = nds.power_system(m).unwrap();
            let fm = power_potential(&nds, &f, m).unwrap();
            fm.validate_for(&power).unwrap();
            let mut state = 3u64;
            for _ in 0..50 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let x = (state >> 33) as usize % 256;
                let n = 1 + (state >> 11) as usize % power.horizon();
                // S_n^{power} f^[m] = S_{nm} f, two independent evaluations.
                let lhs = birkhoff_sum(&power, &fm, 0, n, x).unwrap();
                let rhs = birkhoff_sum(&nds, &f, 0, n * m, x).unwrap();
                assert_eq!(lhs, rhs, "m={m} n={n} x={x}");
            }
        }
        let c = Potential::constant(&nds, 0.5);
        let cm = power_potential(&nds, &c, 3).unwrap();
        for x in 0..cm.level_values(0).len() {
            assert_eq!(cm.value(0, x), 1.5);
        }
        let f1 = power_potential(&nds, &f, 1).unwrap();
        for k in 0..=nds.horizon() {
            assert_eq!(f1.level_values(k), f.level_values(k));
        }
    }

    #[test]
    fn product_potential_factorizes() {
        let a = shift2(4);
        let b = zoo::make_symbolic(&[3], 4).unwrap().0;
        let f = zoo::first_symbol_potential(&a, 1.0);
        let g = zoo::first_symbol_potential(&b, -0.5);
        let prod = crate::nds::product_system(&a, &b).unwrap();
        let fg = product_potential(&a, &b, &f, &g).unwrap();
        fg.validate_for(&prod).unwrap();
        let nb = b.stage(0).point_count();
        let mut state = 9u64;
        for _ in 0..50 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = (state >> 33) as usize % a.stage(0).point_count();
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let y = (state >> 33) as usize % nb;
            let n = 1 + (state >> 7) as usize % 4;
            let lhs = birkhoff_sum(&prod, &fg, 0, n, x * nb + y).unwrap();
            let rhs =
                birkhoff_sum(&a, &f, 0, n, x).unwrap() + birkhoff_sum(&b, &g, 0, n, y).unwrap();
            assert_eq!(lhs, rhs);
        }

        let zero = Potential::zero(&b);
        let lifted = product_potential(&a, &b, &f, &zero).unwrap();
        for x in 0..a.stage(0).point_count() {
            for y in 0..nb {
                assert_eq!(lifted.value(0, x * nb + y), f.value(0, x));
            }
        }
    }

    #[test]
    fn pullback_is_permutation_of_values() {
        let nds = shift2(4);
        let g = zoo::first_symbol_potential(&nds, 1.0);
        let levels = nds.horizon() + 1;
        let id_pi: Vec<Vec<u32>> = (0..levels)
            .map(|k| (0..nds.stage(k).point_count() as u32).collect())
            .collect();
        assert_eq!(pullback(&id_pi, &g).unwrap().level_values(0), g.level_values(0));

        let rev_pi: Vec<Vec<u32>> = (0..levels)
            .map(|k| {
                let c = nds.stage(k).point_count() as u32;
                (0..c).map(|i| c - 1 - i).collect()
            })
            .collect();
        let pulled = pullback(&rev_pi, &g).unwrap();
        for k in 0..levels {
            let mut a: Vec<f64> = g.level_values(k).to_vec();
            let mut b: Vec<f64> = pulled.level_values(k).to_vec();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }

        let c = Potential::constant(&nds, 2.5);
        let pulled_c = pullback(&rev_pi, &c).unwrap();
        for k in 0..levels {
            assert!(pulled_c.level_values(k).iter().all(|&v| v == 2.5));
        }
    }

    #[test]
    fn equicontinuity_tables() {
        let nds = shift2(6);
        let c = Potential::constant(&nds, 3.0);
        let table = equicontinuity_modulus(&nds, &c, &[0.1, 0.5, 1.0]).unwrap();
        assert!(table.pairs.iter().all(|&(_, w)| w == 0.0));

        // Discrete stage: no pairs below delta < 1.
        let disc = Nds::identity(
            "d",
            std::sync::Arc::new(crate::metric::MetricSpace::discrete(4)),
            2,
        );
        let f = Potential::new("v", vec![vec![0.0, 1.0, 2.0, 3.0]; 3]).unwrap();
        let table = equicontinuity_modulus(&disc, &f, &[0.5, 0.99]).unwrap();
        assert!(table.pairs.iter().all(|&(_, w)| w == 0.0));

        // First-symbol weight: pairs at distance < 1/2... share symbols up to
        // position 1, hence omega = 0 below 1/2 and jumps to |c| at 1.
        let f = zoo::first_symbol_potential(&nds, 1.0);
        let table = equicontinuity_modulus(&nds, &f, &[0.25, 0.5, 1.0, 1.5]).unwrap();
        // Brute-scan oracle.
        let mut expected = vec![0.0f64; 4];
        for k in 0..=nds.horizon() {
            let space = nds.stage(k);
            for x in 0..space.point_count() {
                for y in (x + 1)..space.point_count() {
                    let d = space.dist(x, y);
                    let gap = (f.value(k, x) - f.value(k, y)).abs();
                    for (i, &delta) in [0.25, 0.5, 1.0, 1.5].iter().enumerate() {
                        if d < delta {
                            expected[i] = expected[i].max(gap);
                        }
                    }
                }
            }
        }
        for (i, &(_, w)) in table.pairs.iter().enumerate() {
            assert_eq!(w, expected[i]);
        }
        assert_eq!(table.pairs[0].1, 0.0);
        assert_eq!(table.pairs[1].1, 0.0);
        // Monotone in delta.
        for w in table.pairs.windows(2) {
            assert!(w[0].1 <= w[1].1);
        }
        assert_eq!(modulus_le(&nds, &f, 0.25), 0.0);
        assert_eq!(modulus_le(&nds, &f, 1.0), 1.0);
    }
}
