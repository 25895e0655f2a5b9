use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drift past the simplex that is clamped rather than rejected.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Regular grid on `[a, c] x [0,1)^(d-1)`. Axis 1 includes both endpoints;
/// torus axis `k` has nodes `j / M_k`. Nodes are numbered row-major with axis
/// 1 slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub interval: (f64, f64),
    pub axis_points: usize,
    pub torus_points: Vec<usize>,
}

impl Grid {
    pub fn new(interval: (f64, f64), axis_points: usize, torus_points: Vec<usize>) -> Result<Self> {
        if !(interval.0 < interval.1) || !interval.0.is_finite() || !interval.1.is_finite() {
            return Err(Error::GridMismatch(format!("bad interval {interval:?}")));
        }
        if axis_points < 3 {
            return Err(Error::GridMismatch("axis 1 needs at least 3 points".into()));
        }
        if torus_points.contains(&0) {
            return Err(Error::GridMismatch(
                "torus axes need at least 1 point".into(),
            ));
        }
        Ok(Grid {
            interval,
            axis_points,
            torus_points,
        })
    }

    /// `[-1, 1]` in `d = 1` with `cells + 1` points.
    pub fn line(cells: usize) -> Result<Self> {
        Grid::new((-1.0, 1.0), cells + 1, Vec::new())
    }

    pub fn dim(&self) -> usize {
        1 + self.torus_points.len()
    }

    /// Nodes per axis-1 slice.
    pub fn slice_len(&self) -> usize {
        self.torus_points.iter().product()
    }

    pub fn node_count(&self) -> usize {
        self.axis_points * self.slice_len()
    }

    /// Spacing along axis 1.
    pub fn h(&self) -> f64 {
        (self.interval.1 - self.interval.0) / (self.axis_points - 1) as f64
    }

    pub fn torus_h(&self, k: usize) -> f64 {
        1.0 / self.torus_points[k] as f64
    }

    pub fn volume(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    /// Axis-1 index and transverse (slice) index of a node.
    #[inline]
    pub fn split(&self, node: usize) -> (usize, usize) {
        let s = self.slice_len();
        (node / s, node % s)
    }

    pub fn axis_coord(&self, a: usize) -> f64 {
        if a + 1 == self.axis_points {
            self.interval.1
        } else {
            self.interval.0 + a as f64 * self.h()
        }
    }

    /// Transverse coordinates of slice index `t`.
    pub fn transverse(&self, t: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.torus_points.len()];
        let mut rem = t;
        for k in (0..self.torus_points.len()).rev() {
            let m = self.torus_points[k];
            out[k] = (rem % m) as f64 / m as f64;
            rem /= m;
        }
        out
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        let (a, t) = self.split(node);
        let mut c = Vec::with_capacity(self.dim());
        c.push(self.axis_coord(a));
        c.extend(self.transverse(t));
        c
    }

    /// Stride of torus axis `k` within a slice.
    pub fn torus_stride(&self, k: usize) -> usize {
        self.torus_points[k + 1..].iter().product()
    }

    /// Quadrature weight per node: trapezoid along axis 1, uniform on the torus.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.h();
        let slice_w = 1.0 / self.slice_len() as f64;
        (0..self.node_count())
            .map(|node| {
                let (a, _) = self.split(node);
                let w1 = if a == 0 || a + 1 == self.axis_points {
                    0.5 * h
                } else {
                    h
                };
                w1 * slice_w
            })
            .collect()
    }
}

/// Maps `(rho1, rho2, rho3)` to `(rho1, T, R) = (rho1, rho1 + rho3, 1 - rho2 - rho3)`.
#[inline]
pub fn transform(rho: [f64; 3]) -> [f64; 3] {
    [rho[0], rho[0] + rho[2], 1.0 - rho[1] - rho[2]]
}

/// Inverse of [`transform`].
#[inline]
pub fn untransform(q: [f64; 3]) -> [f64; 3] {
    let [r1, t, r] = q;
    [r1, 1.0 - r - t + r1, t - r1]
}

/// Largest violation of the simplex constraints (zero inside).
pub fn simplex_violation(rho: [f64; 3]) -> f64 {
    let mut v: f64 = 0.0;
    for &c in &rho {
        v = v.max(-c).max(c - 1.0);
    }
    v.max(rho[0] + rho[1] + rho[2] - 1.0)
}

/// Projects a point within [`SIMPLEX_TOL`] of the simplex onto it; rejects
/// anything further away.
pub fn clamp_to_simplex(rho: [f64; 3]) -> Result<[f64; 3]> {
    if rho.iter().any(|c| !c.is_finite()) || simplex_violation(rho) > SIMPLEX_TOL {
        return Err(Error::OutOfSimplex(rho));
    }
    let mut out = rho.map(|c| c.clamp(0.0, 1.0));
    let s = out[0] + out[1] + out[2];
    if s > 1.0 {
        out = out.map(|c| c / s);
    }
    Ok(out)
}

/// Densities `(rho1, rho2, rho3)` at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub grid: Grid,
    pub values: Vec<[f64; 3]>,
}

impl Profile {
    pub fn new(grid: Grid, values: Vec<[f64; 3]>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        for (node, v) in values.iter().enumerate() {
            if simplex_violation(*v) > SIMPLEX_TOL || v.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidProfile(format!(
                    "node {node} value {v:?} outside the simplex"
                )));
            }
        }
        Ok(Profile { grid, values })
    }

    pub fn constant(grid: &Grid, rho: [f64; 3]) -> Result<Self> {
        Profile::new(grid.clone(), vec![rho; grid.node_count()])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> [f64; 3]) -> Result<Self> {
        let values = (0..grid.node_count()).map(|n| f(&grid.coords(n))).collect();
        Profile::new(grid.clone(), values)
    }

    /// Builds a profile from transformed values `(rho1, T, R)`.
    pub fn from_transformed(grid: &Grid, f: impl Fn(&[f64]) -> [f64; 3]) -> Result<Self> {
        Profile::from_fn(grid, |u| untransform(f(u)))
    }

    pub fn transformed(&self) -> Vec<[f64; 3]> {
        self.values.iter().map(|&v| transform(v)).collect()
    }

    fn same_grid(&self, other: &Profile) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Max over nodes and components of `|self - other|`.
    pub fn linf_distance(&self, other: &Profile) -> Result<f64> {
        self.same_grid(other)?;
        Ok(max_abs_diff(&self.values, &other.values))
    }

    /// Same in the transformed coordinates.
    pub fn linf_distance_transformed(&self, other: &Profile) -> Result<f64> {
        self.same_grid(other)?;
        Ok(max_abs_diff(&self.transformed(), &other.transformed()))
    }

    /// `sum_i int |self_i - other_i|` by the grid quadrature.
    pub fn l1_distance(&self, other: &Profile) -> Result<f64> {
        self.same_grid(other)?;
        let w = self.grid.weights();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(&w)
            .map(|((a, b), w)| w * (0..3).map(|k| (a[k] - b[k]).abs()).sum::<f64>())
            .sum())
    }

    /// `sum_i int rho_i G_i` by the grid quadrature.
    pub fn pair(&self, g: &dyn Fn(&[f64]) -> [f64; 3]) -> f64 {
        let w = self.grid.weights();
        (0..self.grid.node_count())
            .map(|n| {
                let gv = g(&self.grid.coords(n));
                let v = self.values[n];
                w[n] * (v[0] * gv[0] + v[1] * gv[1] + v[2] * gv[2])
            })
            .sum()
    }

    /// Linear interpolation along axis 1 at `x`, nearest slice on the torus.
    pub fn sample(&self, u: &[f64]) -> [f64; 3] {
        let g = &self.grid;
        let s = ((u[0] - g.interval.0) / g.h()).clamp(0.0, (g.axis_points - 1) as f64);
        let a = (s.floor() as usize).min(g.axis_points - 2);
        let frac = s - a as f64;
        let mut t = 0;
        for (k, &m) in g.torus_points.iter().enumerate() {
            let j = ((u[1 + k].rem_euclid(1.0) * m as f64).round() as usize) % m;
            t = t * m + j;
        }
        let lo = self.values[a * g.slice_len() + t];
        let hi = self.values[(a + 1) * g.slice_len() + t];
        [0, 1, 2].map(|k| lo[k] + frac * (hi[k] - lo[k]))
    }

    /// CSV with header `x1..xd, rho1, rho2, rho3`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header: Vec<String> = (1..=self.grid.dim()).map(|k| format!("x{k}")).collect();
        header.extend(["rho1", "rho2", "rho3"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for (n, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.grid.coords(n).iter().map(|c| c.to_string()).collect();
            row.extend(v.iter().map(|c| c.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a file written by [`Profile::write_csv`]; the grid is recovered
    /// from the distinct coordinate values.
    pub fn read_csv(path: &Path) -> Result<Profile> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let cols = r.headers().map_err(csv_err)?.len();
        if cols < 4 {
            return Err(Error::InvalidProfile(format!(
                "{}: expected at least 4 columns",
                path.display()
            )));
        }
        let dim = cols - 3;
        let mut coords: Vec<Vec<f64>> = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let nums: Vec<f64> = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidProfile(format!("{}: {e}", path.display())))?;
            coords.push(nums[..dim].to_vec());
            values.push([nums[dim], nums[dim + 1], nums[dim + 2]]);
        }
        let distinct = |k: usize| {
            let mut v: Vec<f64> = coords.iter().map(|c| c[k]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let axis = distinct(0);
        if axis.len() < 3 {
            return Err(Error::InvalidProfile(format!(
                "{}: too few axis points",
                path.display()
            )));
        }
        let torus: Vec<usize> = (1..dim).map(|k| distinct(k).len()).collect();
        let grid = Grid::new((axis[0], axis[axis.len() - 1]), axis.len(), torus)?;
        for (n, c) in coords.iter().enumerate() {
            let expect = grid.coords(n);
            if c.iter()
                .zip(&expect)
                .any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs()))
            {
                return Err(Error::GridMismatch(format!(
                    "{}: row {n} has coordinates {c:?}, expected {expect:?}",
                    path.display()
                )));
            }
        }
        Profile::new(grid, values)
    }
}

pub(crate) fn max_abs_diff(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| (0..3).map(move |k| (x[k] - y[k]).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_geometry() {
        let g = Grid::new((0.0, 1.0), 101, vec![]).unwrap();
        assert!((g.h() - 0.01).abs() < 1e-15);
        assert_eq!(g.axis_coord(100), 1.0);
        let w: f64 = g.weights().iter().sum();
        assert!((w - 1.0).abs() < 1e-12);

        let g2 = Grid::new((-1.0, 1.0), 5, vec![4]).unwrap();
        assert_eq!(g2.node_count(), 20);
        assert_eq!(g2.coords(6), vec![-0.5, 0.5]);
        let w: f64 = g2.weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-12);
        assert!(Grid::new((1.0, 0.0), 5, vec![]).is_err());
    }

    #[test]
    fn transform_examples() {
        assert_eq!(untransform([0.0, 0.0, 0.0]), [0.0, 1.0, 0.0]);
        assert_eq!(untransform([1.0, 1.0, 1.0]), [1.0, 0.0, 0.0]);
        assert_eq!(transform([0.0, 0.5, 0.0]), [0.0, 0.0, 0.5]);
    }

    #[test]
    fn clamping() {
        assert_eq!(
            clamp_to_simplex([-1e-12, 0.5, 0.5]).unwrap(),
            [0.0, 0.5, 0.5]
        );
        assert!(clamp_to_simplex([-1e-6, 0.5, 0.2]).is_err());
        assert!(clamp_to_simplex([0.5, 0.5, 0.1]).is_err());
        assert!(clamp_to_simplex([f64::NAN, 0.0, 0.0]).is_err());
        let c = clamp_to_simplex([0.5, 0.5, 5e-10]).unwrap();
        assert!(c.iter().sum::<f64>() <= 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new((-1.0, 1.0), 7, vec![3]).unwrap();
        let p = Profile::from_fn(&g, |u| [0.1 + 0.05 * u[0], 0.2 * u[1], 1.0 / 3.0]).unwrap();
        let path = dir.path().join("p.csv");
        p.write_csv(&path).unwrap();
        let head = std::fs::read_to_string(&path).unwrap();
        assert!(head.starts_with("x1,x2,rho1,rho2,rho3\n"));
        assert_eq!(Profile::read_csv(&path).unwrap(), p);
    }

    #[test]
    fn sampling_interpolates() {
        let g = Grid::line(4).unwrap();
        let p = Profile::from_fn(&g, |u| [0.25 + 0.25 * u[0], 0.1, 0.0]).unwrap();
        let v = p.sample(&[0.25]);
        assert!((v[0] - 0.3125).abs() < 1e-15);
        assert_eq!(p.sample(&[1.0])[0], 0.5);
    }

    fn simplex_point() -> impl Strategy<Value = [f64; 3]> {
        (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b, c, d)| {
            let s = a + b + c + d + 1e-12;
            [a / s, b / s, c / s]
        })
    }

    proptest! {
        #[test]
        fn round_trip(rho in simplex_point()) {
            let back = untransform(transform(rho));
            for k in 0..3 {
                prop_assert!((back[k] - rho[k]).abs() < 1e-14);
            }
            let q = transform(rho);
            // rho1 <= T <= 1 and rho1 <= R <= 1
            prop_assert!(q[0] <= q[1] + 1e-15 && q[1] <= 1.0 + 1e-15);
            prop_assert!(q[0] <= q[2] + 1e-15 && q[2] <= 1.0 + 1e-15);
        }
    }
}
