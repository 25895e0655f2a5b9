//! Product reference measures, empirical measures and block averages.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{indicator, Configuration, Lattice, State};
use crate::pde::{Grid, Profile};

/// Largest lattice (in sites) that the exhaustive routines will enumerate.
pub const EXHAUSTIVE_SITE_CAP: usize = 8;

type ProfileFn = dyn Fn(&[f64]) -> [f64; 3] + Send + Sync;

/// A density profile `u -> (a1, a2, a3)` on the closed cylinder.
#[derive(Clone)]
pub struct DensityProfile(Arc<ProfileFn>);

impl fmt::Debug for DensityProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DensityProfile(..)")
    }
}

impl DensityProfile {
    pub fn constant(a: [f64; 3]) -> Self {
        DensityProfile(Arc::new(move |_| a))
    }

    pub fn from_fn(f: impl Fn(&[f64]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        DensityProfile(Arc::new(f))
    }

    pub fn eval(&self, u: &[f64]) -> [f64; 3] {
        (self.0)(u)
    }

    /// `(a0, a1, a2, a3)` at `u`.
    pub fn eval4(&self, u: &[f64]) -> [f64; 4] {
        let a = self.eval(u);
        [1.0 - a[0] - a[1] - a[2], a[0], a[1], a[2]]
    }

    /// Per-site `(a0..a3)`, rejecting values outside the open simplex.
    pub fn on_lattice(&self, lat: &Lattice) -> Result<Vec<[f64; 4]>> {
        (0..lat.site_count())
            .map(|x| {
                let a = self.eval4(&lat.position(x));
                if a.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
                    Err(Error::InvalidProfile(format!(
                        "profile {a:?} at site {x} is not in the open simplex"
                    )))
                } else {
                    Ok(a)
                }
            })
            .collect()
    }
}

fn check_exhaustive(lat: &Lattice) -> Result<usize> {
    let sites = lat.site_count();
    if sites > EXHAUSTIVE_SITE_CAP {
        return Err(Error::TooLarge {
            states: if sites < 32 {
                1 << (2 * sites)
            } else {
                usize::MAX
            },
            cap: 1 << (2 * EXHAUSTIVE_SITE_CAP),
        });
    }
    Ok(sites)
}

/// Weight of `cfg` under the product measure with marginals `alpha`, written
/// in exponential-family form `Z^-1 exp(sum_x sum_i log(a_i / a_0) eta_i(x))`
/// with `Z = prod_x 1 / a_0(x/N)`.
pub fn nu_weight(cfg: &Configuration, alpha: &DensityProfile, lat: &Lattice) -> Result<f64> {
    let a = alpha.on_lattice(lat)?;
    Ok(nu_weight_with(cfg, &a))
}

fn nu_weight_with(cfg: &Configuration, a: &[[f64; 4]]) -> f64 {
    let mut energy = 0.0;
    let mut log_z = 0.0;
    for (x, ax) in a.iter().enumerate() {
        log_z -= ax[0].ln();
        for i in 1..4u8 {
            energy += (ax[i as usize] / ax[0]).ln() * indicator(cfg.get(x), i);
        }
    }
    (energy - log_z).exp()
}

/// Weights of all `4^sites` configurations, indexed by configuration code.
pub fn nu_vector(alpha: &DensityProfile, lat: &Lattice) -> Result<Vec<f64>> {
    let sites = check_exhaustive(lat)?;
    let a = alpha.on_lattice(lat)?;
    Ok((0..1usize << (2 * sites))
        .map(|code| nu_weight_with(&Configuration::from_code(code, sites), &a))
        .collect())
}

/// `max_{i,x} |E_nu[eta_i(x)] - a_i(x/N)|` by exhaustive summation.
pub fn marginal_check(alpha: &DensityProfile, lat: &Lattice) -> Result<f64> {
    let sites = check_exhaustive(lat)?;
    let a = alpha.on_lattice(lat)?;
    let weights = nu_vector(alpha, lat)?;
    let mut mean = vec![[0.0f64; 4]; sites];
    for (code, w) in weights.iter().enumerate() {
        for (x, m) in mean.iter_mut().enumerate() {
            m[(code >> (2 * x)) & 3] += w;
        }
    }
    let mut err: f64 = 0.0;
    for x in 0..sites {
        for i in 1..4 {
            err = err.max((mean[x][i] - a[x][i]).abs());
        }
    }
    Ok(err)
}

/// Both sides of the two change-of-variable identities for the product measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeOfVariable {
    /// `E[eta_i(x) eta_j(y) f(swap_xy)]` and `E[eta_j(x) eta_i(y) (R + 1) f]`.
    pub swap: (f64, f64),
    /// `E[eta_i(x) b_j f]` and `E[eta_j(x) b_i f(sigma_{i,x})]`.
    pub flip: (f64, f64),
    /// `R_{i,j}^{x,y}` computed from `v = log a`.
    pub r: f64,
}

/// Evaluates both sides of the swap and flip change-of-variable identities by
/// exhaustive summation. `f` is indexed by configuration code and `b_x` holds
/// `(b0, b1, b2, b3)` at site `x`; the flip identity balances only when
/// `b_x` is proportional to the profile at `x`.
#[allow(clippy::too_many_arguments)]
pub fn change_of_variable_identities(
    alpha: &DensityProfile,
    lat: &Lattice,
    f: &[f64],
    x: usize,
    y: usize,
    i: State,
    j: State,
    b_x: [f64; 4],
) -> Result<ChangeOfVariable> {
    if i == j {
        return Err(Error::SameStates { i, j });
    }
    if i > 3 || j > 3 {
        return Err(Error::InvalidState(i.max(j)));
    }
    let sites = check_exhaustive(lat)?;
    if x >= sites || y >= sites {
        return Err(Error::IndexOutOfRange(x.max(y)));
    }
    if f.len() != 1 << (2 * sites) {
        return Err(Error::InvalidConfig(format!(
            "test function has {} entries, expected {}",
            f.len(),
            1usize << (2 * sites)
        )));
    }
    let a = alpha.on_lattice(lat)?;
    let v = |s: usize, k: State| a[s][k as usize].ln();
    let r = ((v(y, j) - v(x, j)) - (v(y, i) - v(x, i))).exp() - 1.0;

    let weights = nu_vector(alpha, lat)?;
    let (mut swap_l, mut swap_r, mut flip_l, mut flip_r) = (0.0, 0.0, 0.0, 0.0);
    for (code, &w) in weights.iter().enumerate() {
        let cfg = Configuration::from_code(code, sites);
        let (sx, sy) = (cfg.get(x), cfg.get(y));
        if sx == i && sy == j {
            let mut swapped = cfg.clone();
            swapped.swap(x, y);
            swap_l += w * f[swapped.code()];
        }
        if sx == j && sy == i {
            swap_r += w * (r + 1.0) * f[code];
        }
        if sx == i {
            flip_l += w * b_x[j as usize] * f[code];
        }
        if sx == j {
            let mut flipped = cfg.clone();
            flipped.set(x, i);
            flip_r += w * b_x[i as usize] * f[flipped.code()];
        }
    }
    Ok(ChangeOfVariable {
        swap: (swap_l, swap_r),
        flip: (flip_l, flip_r),
        r,
    })
}

/// `<pi^N, G> = sum_i N^-d sum_x eta_i(x) G_i(x/N)`.
pub fn empirical_pair(cfg: &Configuration, lat: &Lattice, g: &dyn Fn(&[f64]) -> [f64; 3]) -> f64 {
    let scale = (lat.n() as f64).powi(lat.dim() as i32);
    let mut total = 0.0;
    for x in 0..lat.site_count() {
        let s = cfg.get(x);
        if s != 0 {
            total += g(&lat.position(x))[s as usize - 1];
        }
    }
    total / scale
}

/// Same pairing for a field of per-site densities `(m1, m2, m3)`.
pub fn density_pair(values: &[[f64; 3]], lat: &Lattice, g: &dyn Fn(&[f64]) -> [f64; 3]) -> f64 {
    let scale = (lat.n() as f64).powi(lat.dim() as i32);
    values
        .iter()
        .enumerate()
        .map(|(x, m)| {
            let gx = g(&lat.position(x));
            m[0] * gx[0] + m[1] * gx[1] + m[2] * gx[2]
        })
        .sum::<f64>()
        / scale
}

/// Sites of the sup-norm box of radius `ell` around `x`, truncated at the open
/// ends of axis 1 and wrapping in the torus directions.
pub fn box_sites(lat: &Lattice, x: usize, ell: usize) -> Vec<usize> {
    let n = lat.n() as i64;
    let c = lat.coords(x).expect("site in lattice");
    let l = ell as i64;
    let mut axes: Vec<Vec<i64>> = Vec::with_capacity(c.len());
    axes.push(((c[0] - l).max(-n)..=(c[0] + l).min(n)).collect());
    for &ck in &c[1..] {
        if 2 * l + 1 >= n {
            axes.push((0..n).collect());
        } else {
            axes.push((-l..=l).map(|o| (ck + o).rem_euclid(n)).collect());
        }
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; axes.len()];
    let mut coord = vec![0i64; axes.len()];
    loop {
        for (k, a) in axes.iter().enumerate() {
            coord[k] = a[idx[k]];
        }
        out.push(lat.index(&coord).expect("box site in lattice"));
        let mut k = axes.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Mean of per-site values over the box of radius `ell` around `x`.
pub fn block_mean(lat: &Lattice, values: &[[f64; 3]], x: usize, ell: usize) -> [f64; 3] {
    let sites = box_sites(lat, x, ell);
    let mut acc = [0.0; 3];
    for &y in &sites {
        for k in 0..3 {
            acc[k] += values[y][k];
        }
    }
    acc.map(|v| v / sites.len() as f64)
}

/// `(eta_1^ell, eta_2^ell, eta_3^ell)(x)`.
pub fn block_average(cfg: &Configuration, lat: &Lattice, x: usize, ell: usize) -> [f64; 3] {
    let sites = box_sites(lat, x, ell);
    let mut acc = [0.0; 3];
    for &y in &sites {
        let s = cfg.get(y);
        if s != 0 {
            acc[s as usize - 1] += 1.0;
        }
    }
    acc.map(|v| v / sites.len() as f64)
}

/// Block means of per-site values sampled at the nodes of a PDE grid on
/// `[-1, 1]`: each node reads the box around its nearest lattice site.
pub fn coarse_grain(
    lat: &Lattice,
    values: &[[f64; 3]],
    grid: &Grid,
    ell: usize,
) -> Result<Profile> {
    if grid.interval != (-1.0, 1.0) || grid.dim() != lat.dim() {
        return Err(Error::GridMismatch(format!(
            "coarse-graining needs a grid on [-1, 1] of dimension {}",
            lat.dim()
        )));
    }
    let n = lat.n() as i64;
    let nf = lat.n() as f64;
    let out = (0..grid.node_count())
        .map(|node| {
            let u = grid.coords(node);
            let mut x = Vec::with_capacity(u.len());
            x.push(((u[0] * nf).round() as i64).clamp(-n, n));
            x.extend(
                u[1..]
                    .iter()
                    .map(|&c| ((c * nf).round() as i64).rem_euclid(n)),
            );
            let site = lat.index(&x).expect("rounded site in lattice");
            block_mean(lat, values, site, ell)
        })
        .collect();
    Profile::new(grid.clone(), out)
}

/// Indicator field `(eta_1, eta_2, eta_3)` of a configuration.
pub fn indicator_field(cfg: &Configuration) -> Vec<[f64; 3]> {
    cfg.states()
        .iter()
        .map(|&s| [indicator(s, 1), indicator(s, 2), indicator(s, 3)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_site_weights() {
        // A one-site "lattice" is not constructible, so use site weights directly.
        let a = [[0.25; 4]];
        for s in 0..4 {
            let c = Configuration::from_states(vec![s]).unwrap();
            assert!((nu_weight_with(&c, &a) - 0.25).abs() < 1e-15);
        }
        let a = [[0.1, 0.2, 0.3, 0.4]];
        for (s, expect) in [(0, 0.1), (1, 0.2), (2, 0.3), (3, 0.4)] {
            let c = Configuration::from_states(vec![s]).unwrap();
            assert!((nu_weight_with(&c, &a) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let lat = Lattice::new(1, 1).unwrap();
        let alpha = DensityProfile::from_fn(|u| [0.2 + 0.1 * u[0], 0.3 - 0.05 * u[0], 0.15]);
        let total: f64 = nu_vector(&alpha, &lat).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weight_is_product_of_site_marginals() {
        let lat = Lattice::new(1, 1).unwrap();
        let alpha = DensityProfile::from_fn(|u| [0.2 + 0.1 * u[0], 0.3, 0.1 + 0.05 * u[0]]);
        let a = alpha.on_lattice(&lat).unwrap();
        for code in 0..64 {
            let cfg = Configuration::from_code(code, 3);
            let product: f64 = (0..3).map(|x| a[x][cfg.get(x) as usize]).product();
            assert!((nu_weight(&cfg, &alpha, &lat).unwrap() - product).abs() < 1e-15);
        }
    }

    #[test]
    fn marginals() {
        let lat = Lattice::new(1, 1).unwrap();
        let c = DensityProfile::constant([0.2, 0.3, 0.1]);
        assert!(marginal_check(&c, &lat).unwrap() < 1e-12);
        let lin = DensityProfile::from_fn(|u| [0.2 + 0.1 * u[0], 0.3, 0.1]);
        assert!(marginal_check(&lin, &lat).unwrap() < 1e-12);
        let edge = DensityProfile::from_fn(|u| [0.01, 0.97 - 0.005 * (1.0 + u[0]), 0.01]);
        assert!(marginal_check(&edge, &lat).unwrap() < 1e-10);
        let bad = DensityProfile::constant([0.5, 0.5, 0.1]);
        assert!(marginal_check(&bad, &lat).is_err());
        assert!(marginal_check(&c, &Lattice::new(4, 1).unwrap()).is_err());
    }

    #[test]
    fn constant_profile_has_zero_r() {
        let lat = Lattice::new(1, 1).unwrap();
        let alpha = DensityProfile::constant([0.2, 0.3, 0.1]);
        let f: Vec<f64> = (0..64).map(|c| (c as f64 * 0.37).sin()).collect();
        let out = change_of_variable_identities(&alpha, &lat, &f, 0, 1, 1, 2, [0.4, 0.2, 0.3, 0.1])
            .unwrap();
        assert_eq!(out.r, 0.0);
        assert!((out.swap.0 - out.swap.1).abs() < 1e-15);
        assert!(change_of_variable_identities(&alpha, &lat, &f, 0, 1, 2, 2, [0.25; 4]).is_err());
    }

    #[test]
    fn flip_identity_needs_matching_reservoir() {
        let lat = Lattice::new(1, 1).unwrap();
        let alpha = DensityProfile::from_fn(|u| [0.2 + 0.05 * u[0], 0.3, 0.1]);
        let a = alpha.on_lattice(&lat).unwrap();
        let ones = vec![1.0; 64];
        let good = change_of_variable_identities(&alpha, &lat, &ones, 0, 2, 1, 3, a[0]).unwrap();
        assert!((good.flip.0 - good.flip.1).abs() < 1e-12);
        let bad =
            change_of_variable_identities(&alpha, &lat, &ones, 0, 2, 1, 3, [0.1, 0.2, 0.3, 0.4])
                .unwrap();
        assert!((bad.flip.0 - bad.flip.1).abs() > 1e-3);
    }

    #[test]
    fn empirical_pair_examples() {
        let lat = Lattice::new(2, 1).unwrap();
        let g = |_: &[f64]| [1.0, 1.0, 1.0];
        assert_eq!(
            empirical_pair(&Configuration::uniform(&lat, 0), &lat, &g),
            0.0
        );
        let g1 = |_: &[f64]| [1.0, 0.0, 0.0];
        assert_eq!(
            empirical_pair(&Configuration::uniform(&lat, 1), &lat, &g1),
            2.5
        );
        // Alternating 1,2,1,2,1 with G1 = G2 = 1: five occupied sites over N = 2.
        let cfg = Configuration::from_states(vec![1, 2, 1, 2, 1]).unwrap();
        let g12 = |_: &[f64]| [1.0, 1.0, 0.0];
        assert_eq!(empirical_pair(&cfg, &lat, &g12), 2.5);
        let g2 = |_: &[f64]| [0.0, 1.0, 0.0];
        assert_eq!(empirical_pair(&cfg, &lat, &g2), 1.0);
    }

    #[test]
    fn block_average_examples() {
        let lat = Lattice::new(4, 1).unwrap();
        let cfg = Configuration::from_states(vec![1, 2, 3, 0, 1, 1, 2, 3, 0]).unwrap();
        for x in 0..9 {
            let s = cfg.get(x);
            let expect = [indicator(s, 1), indicator(s, 2), indicator(s, 3)];
            assert_eq!(block_average(&cfg, &lat, x, 0), expect);
        }
        let twos = Configuration::uniform(&lat, 2);
        for ell in 0..6 {
            assert_eq!(block_average(&twos, &lat, 3, ell), [0.0, 1.0, 0.0]);
        }
        for ell in 0..4 {
            assert_eq!(box_sites(&lat, 0, ell).len(), ell + 1);
        }
        let lat2 = Lattice::new(5, 2).unwrap();
        let x = lat2.index(&[-5, 0]).unwrap();
        // (ell + 1)(2 ell + 1)^(d - 1) on the left face
        assert_eq!(box_sites(&lat2, x, 1).len(), 2 * 3);
        assert_eq!(box_sites(&lat2, x, 2).len(), 3 * 5);
    }

    #[test]
    fn coarse_grained_uniform_config() {
        let lat = Lattice::new(10, 1).unwrap();
        let cfg = Configuration::uniform(&lat, 3);
        let grid = Grid::line(8).unwrap();
        let p = coarse_grain(&lat, &indicator_field(&cfg), &grid, 2).unwrap();
        assert!(p.values.iter().all(|v| *v == [0.0, 0.0, 1.0]));
        let other = Grid::new((0.0, 1.0), 5, vec![]).unwrap();
        assert!(coarse_grain(&lat, &indicator_field(&cfg), &other, 0).is_err());
    }

    proptest! {
        #[test]
        fn pairing_is_linear_and_monotone(
            states in prop::collection::vec(0u8..4, 7),
            c in -2.0f64..2.0,
        ) {
            let lat = Lattice::new(3, 1).unwrap();
            let cfg = Configuration::from_states(states).unwrap();
            let g = |u: &[f64]| [u[0], 1.0 - u[0] * u[0], 0.5];
            let gc = move |u: &[f64]| { let v = g(u); [v[0] + c, v[1] + c, v[2] + c] };
            let mass = empirical_pair(&cfg, &lat, &|_| [1.0, 1.0, 1.0]);
            let lhs = empirical_pair(&cfg, &lat, &gc);
            prop_assert!((lhs - empirical_pair(&cfg, &lat, &g) - c * mass).abs() < 1e-12);

            // Turning an empty site wild cannot lower a pairing with G >= 0.
            let pos = |u: &[f64]| [1.0 + u[0], 0.3, 0.2];
            let mut more = cfg.clone();
            if let Some(x) = (0..7).find(|&x| cfg.get(x) == 0) {
                more.set(x, 1);
            }
            prop_assert!(empirical_pair(&more, &lat, &pos) >= empirical_pair(&cfg, &lat, &pos));
        }

        #[test]
        fn block_values_in_simplex(
            states in prop::collection::vec(0u8..4, 15),
            x in 0usize..15,
            ell in 0usize..5,
        ) {
            let lat = Lattice::new(2, 2).unwrap();
            let cfg = Configuration::from_states(states[..10].to_vec()).unwrap();
            let v = block_average(&cfg, &lat, x % 10, ell);
            prop_assert!(v.iter().all(|&c| (0.0..=1.0).contains(&c)));
            prop_assert!(v.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
    }
}
