//! Closed-form Laplacian eigenfunctions on `[-1,1] x [0,1)^(d-1)` for the
//! Neumann-Neumann, Dirichlet-Neumann and Dirichlet-Dirichlet axis problems.
//!
//! Every member is a product of an axis-1 factor and `sqrt(2) sin(k pi x)`
//! per torus direction, normalised in `L^2`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    /// Zero axis derivative at both faces.
    NeumannNeumann,
    /// Zero value on the left face, zero derivative on the right face.
    DirichletNeumann,
    /// Zero value on both faces.
    DirichletDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigenFamily {
    pub kind: FamilyKind,
    pub dim: usize,
}

fn axis_frequency(kind: FamilyKind, k: usize) -> f64 {
    match kind {
        FamilyKind::NeumannNeumann => k as f64 * FRAC_PI_2,
        FamilyKind::DirichletNeumann => FRAC_PI_4 + k as f64 * FRAC_PI_2,
        FamilyKind::DirichletDirichlet => k as f64 * PI,
    }
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Axis-1 factor and its derivative.
fn axis_factor(kind: FamilyKind, k: usize, x: f64) -> (f64, f64) {
    let w = axis_frequency(kind, k);
    match kind {
        FamilyKind::NeumannNeumann if k == 0 => (FRAC_1_SQRT_2, 0.0),
        FamilyKind::NeumannNeumann => {
            let a = w * (x + 1.0);
            (a.cos(), -w * a.sin())
        }
        FamilyKind::DirichletNeumann => {
            let s = sign(k);
            let a = w * x;
            (
                FRAC_1_SQRT_2 * (s * a.cos() + a.sin()),
                FRAC_1_SQRT_2 * w * (-s * a.sin() + a.cos()),
            )
        }
        FamilyKind::DirichletDirichlet => {
            let a = w * x;
            (a.sin(), w * a.cos())
        }
    }
}

impl EigenFamily {
    pub fn new(kind: FamilyKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        Ok(EigenFamily { kind, dim })
    }

    /// Smallest allowed axis-1 index.
    pub fn first_axis_index(&self) -> usize {
        match self.kind {
            FamilyKind::DirichletDirichlet => 1,
            _ => 0,
        }
    }

    pub fn validate_index(&self, k: &[usize]) -> Result<()> {
        if k.len() != self.dim || k[0] < self.first_axis_index() || k[1..].iter().any(|&ki| ki == 0)
        {
            return Err(Error::InvalidIndex(k.to_vec()));
        }
        Ok(())
    }

    fn torus_factor(k: &[usize], x: &[f64]) -> f64 {
        k[1..]
            .iter()
            .zip(&x[1..])
            .map(|(&ki, &xi)| SQRT_2 * (ki as f64 * PI * xi).sin())
            .product()
    }

    pub fn eval(&self, k: &[usize], x: &[f64]) -> Result<f64> {
        self.validate_index(k)?;
        Ok(axis_factor(self.kind, k[0], x[0]).0 * Self::torus_factor(k, x))
    }

    /// Derivative along axis 1.
    pub fn axis_derivative(&self, k: &[usize], x: &[f64]) -> Result<f64> {
        self.validate_index(k)?;
        Ok(axis_factor(self.kind, k[0], x[0]).1 * Self::torus_factor(k, x))
    }

    /// `lambda` with `-Lap phi_k = lambda phi_k`.
    pub fn eigenvalue(&self, k: &[usize]) -> Result<f64> {
        self.validate_index(k)?;
        let w = axis_frequency(self.kind, k[0]);
        Ok(w * w
            + k[1..]
                .iter()
                .map(|&ki| (ki as f64 * PI).powi(2))
                .sum::<f64>())
    }

    /// The first `count` indices in order of eigenvalue, ties broken
    /// lexicographically.
    pub fn indices(&self, count: usize) -> Vec<Vec<usize>> {
        let first = self.first_axis_index();
        // Enough room in each direction: eigenvalues grow quadratically.
        let span = count + 1;
        let mut all: Vec<(f64, Vec<usize>)> = Vec::new();
        let mut k = vec![0usize; self.dim];
        let lo: Vec<usize> = (0..self.dim)
            .map(|i| if i == 0 { first } else { 1 })
            .collect();
        k.copy_from_slice(&lo);
        loop {
            all.push((self.eigenvalue(&k).expect("valid index"), k.clone()));
            let mut i = self.dim;
            loop {
                if i == 0 {
                    all.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
                    return all.into_iter().take(count).map(|(_, k)| k).collect();
                }
                i -= 1;
                k[i] += 1;
                if k[i] < lo[i] + span {
                    break;
                }
                k[i] = lo[i];
            }
        }
    }
}

/// `V_k(x)` of the Neumann-Neumann family.
pub fn eval_v(k: &[usize], x: &[f64]) -> Result<f64> {
    EigenFamily::new(FamilyKind::NeumannNeumann, k.len())?.eval(k, x)
}

pub fn alpha(k: &[usize]) -> Result<f64> {
    EigenFamily::new(FamilyKind::NeumannNeumann, k.len())?.eigenvalue(k)
}

/// `W_k(x)` of the Dirichlet-Neumann family.
pub fn eval_w(k: &[usize], x: &[f64]) -> Result<f64> {
    EigenFamily::new(FamilyKind::DirichletNeumann, k.len())?.eval(k, x)
}

pub fn gamma(k: &[usize]) -> Result<f64> {
    EigenFamily::new(FamilyKind::DirichletNeumann, k.len())?.eigenvalue(k)
}

/// `U_k(x)` of the Dirichlet-Dirichlet family.
pub fn eval_u(k: &[usize], x: &[f64]) -> Result<f64> {
    EigenFamily::new(FamilyKind::DirichletDirichlet, k.len())?.eval(k, x)
}

pub fn delta(k: &[usize]) -> Result<f64> {
    EigenFamily::new(FamilyKind::DirichletDirichlet, k.len())?.eigenvalue(k)
}

/// `cos(k1 pi x1 / 2 + pi / 2)` times the torus factors: the phase-shifted
/// Neumann form. It satisfies the Neumann condition only for odd `k1`, where
/// it equals [`eval_v`] up to sign.
pub fn shifted_cosine_v(k: &[usize], x: &[f64]) -> Result<f64> {
    if k.is_empty() || k[1..].iter().any(|&ki| ki == 0) {
        return Err(Error::InvalidIndex(k.to_vec()));
    }
    Ok((k[0] as f64 * PI * x[0] / 2.0 + FRAC_PI_2).cos() * EigenFamily::torus_factor(k, x))
}

/// Which smallest Dirichlet eigenvalue to feed the second condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Delta1Choice {
    /// `d pi^2`, the bottom of the sine family.
    #[default]
    SineFamily,
    /// `pi^2 / 4 + (d - 1) pi^2`, the true bottom along axis 1 (`cos(pi x / 2)`).
    HalfMode,
}

pub fn delta1(d: usize, choice: Delta1Choice) -> f64 {
    match choice {
        Delta1Choice::SineFamily => d as f64 * PI * PI,
        Delta1Choice::HalfMode => PI * PI / 4.0 + (d as f64 - 1.0) * PI * PI,
    }
}

/// Composite Simpson nodes and weights on `[a, b]` with at least `points` nodes.
fn simpson(a: f64, b: f64, points: usize) -> Vec<(f64, f64)> {
    let mut n = points.max(3) - 1;
    if n % 2 == 1 {
        n += 1;
    }
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (a + i as f64 * h, w * h / 3.0)
        })
        .collect()
}

/// `L^2` inner product of two members, by Simpson quadrature with
/// `resolution` points per axis (the integrand is a product over axes).
pub fn inner_product(
    fa: &EigenFamily,
    ka: &[usize],
    fb: &EigenFamily,
    kb: &[usize],
    resolution: usize,
) -> Result<f64> {
    fa.validate_index(ka)?;
    fb.validate_index(kb)?;
    if fa.dim != fb.dim {
        return Err(Error::InvalidIndex(kb.to_vec()));
    }
    let axis: f64 = simpson(-1.0, 1.0, resolution)
        .iter()
        .map(|&(x, w)| w * axis_factor(fa.kind, ka[0], x).0 * axis_factor(fb.kind, kb[0], x).0)
        .sum();
    let torus_nodes = simpson(0.0, 1.0, resolution);
    let mut total = axis;
    for i in 1..fa.dim {
        let f: f64 = torus_nodes
            .iter()
            .map(|&(x, w)| 2.0 * w * (ka[i] as f64 * PI * x).sin() * (kb[i] as f64 * PI * x).sin())
            .sum();
        total *= f;
    }
    Ok(total)
}

/// Gram matrix of the first `n` members (in eigenvalue order).
pub fn gram_matrix(family: &EigenFamily, n: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
    let idx = family.indices(n);
    idx.iter()
        .map(|a| {
            idx.iter()
                .map(|b| inner_product(family, a, family, b, resolution))
                .collect()
        })
        .collect()
}

/// `max |G - I|` over all entries.
pub fn gram_defect(g: &[Vec<f64>]) -> f64 {
    let mut m: f64 = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m = m.max((v - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    m
}

/// `max |Lap_h phi + lambda phi|` over interior nodes of a grid with spacing
/// `h` in every direction.
pub fn fd_residual(family: &EigenFamily, k: &[usize], h: f64) -> Result<f64> {
    let lambda = family.eigenvalue(k)?;
    let m1 = (2.0 / h).round() as usize;
    let mt = (1.0 / h).round() as usize;
    let slice = mt.pow(family.dim as u32 - 1);
    let mut worst: f64 = 0.0;
    let mut x = vec![0.0; family.dim];
    let mut probe = x.clone();
    for a in 1..m1 {
        x[0] = -1.0 + a as f64 * h;
        for t in 0..slice {
            let mut rem = t;
            for i in (1..family.dim).rev() {
                x[i] = (rem % mt) as f64 * h;
                rem /= mt;
            }
            let centre = family.eval(k, &x)?;
            let mut lap = 0.0;
            for i in 0..family.dim {
                probe.copy_from_slice(&x);
                probe[i] = x[i] + h;
                let up = family.eval(k, &probe)?;
                probe[i] = x[i] - h;
                let down = family.eval(k, &probe)?;
                lap += (up + down - 2.0 * centre) / (h * h);
            }
            worst = worst.max((lap + lambda * centre).abs());
        }
    }
    Ok(worst)
}

/// `log2(residual(h) / residual(h / 2))`.
pub fn observed_order(family: &EigenFamily, k: &[usize], h: f64) -> Result<f64> {
    Ok((fd_residual(family, k, h)? / fd_residual(family, k, h / 2.0)?).log2())
}
