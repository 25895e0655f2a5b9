use super::grid::Profile;
use super::reaction::{reaction, Reaction};
use super::solver::{FaceCondition, PdeProblem};
use crate::error::{Error, Result};
use crate::lattice::Face;

const FD_STEP: f64 = 1e-4;

fn fd_laplacian(g: &dyn Fn(&[f64]) -> [f64; 3], u: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    let centre = g(u);
    let mut v = u.to_vec();
    for k in 0..u.len() {
        v[k] = u[k] + FD_STEP;
        let up = g(&v);
        v[k] = u[k] - FD_STEP;
        let down = g(&v);
        v[k] = u[k];
        for c in 0..3 {
            out[c] += (up[c] + down[c] - 2.0 * centre[c]) / (FD_STEP * FD_STEP);
        }
    }
    out
}

fn fd_axis_derivative(g: &dyn Fn(&[f64]) -> [f64; 3], u: &[f64]) -> [f64; 3] {
    let mut v = u.to_vec();
    v[0] = u[0] + FD_STEP;
    let up = g(&v);
    v[0] = u[0] - FD_STEP;
    let down = g(&v);
    [0, 1, 2].map(|c| (up[c] - down[c]) / (2.0 * FD_STEP))
}

/// Weak-form residual of a stationary profile against a smooth test triple `g`:
///
/// `D <rho, Lap G> + <F(rho), G> + sum_faces int (G . D d_n rho - D rho . d_n G)`
///
/// with `D d_n rho = b - rho` on Robin faces and `0` on Neumann faces, `n`
/// the outward normal. `g` must vanish on Dirichlet faces, where `rho = b`.
/// Derivatives of `g` are taken by central differences, so `g` has to be
/// defined slightly beyond the domain.
pub fn weak_residual(
    problem: &PdeProblem,
    rho: &Profile,
    g: &dyn Fn(&[f64]) -> [f64; 3],
) -> Result<f64> {
    if rho.grid != problem.grid {
        return Err(Error::GridMismatch(format!(
            "{:?} vs {:?}",
            rho.grid, problem.grid
        )));
    }
    let grid = &problem.grid;
    let d = problem.diffusion();
    let w = grid.weights();
    let mut bulk = 0.0;
    for (node, &v) in rho.values.iter().enumerate() {
        let u = grid.coords(node);
        let gv = g(&u);
        let lap = fd_laplacian(g, &u);
        let f = match problem.reaction {
            Reaction::Model => reaction(v, &problem.params, problem.dim())?,
            Reaction::Zero => [0.0; 3],
        };
        bulk += w[node]
            * (0..3)
                .map(|c| d * v[c] * lap[c] + f[c] * gv[c])
                .sum::<f64>();
    }

    let slice = grid.slice_len();
    let mut faces = 0.0;
    for face in [Face::Left, Face::Right] {
        let (a, normal) = match face {
            Face::Left => (0, -1.0),
            Face::Right => (grid.axis_points - 1, 1.0),
        };
        for t in 0..slice {
            let node = a * slice + t;
            let u = grid.coords(node);
            let v = rho.values[node];
            let gv = g(&u);
            let dn_g = fd_axis_derivative(g, &u).map(|c| normal * c);
            let flux = match problem.regime.face(face) {
                FaceCondition::Neumann => [0.0; 3],
                FaceCondition::Robin => {
                    let b = problem.face_value(face, t);
                    let s = if face == Face::Left && !problem.mirrored_left_robin {
                        -1.0
                    } else {
                        1.0
                    };
                    [0, 1, 2].map(|c| s * (b[c] - v[c]))
                }
                FaceCondition::Dirichlet => {
                    if gv.iter().any(|c| c.abs() > 1e-8) {
                        return Err(Error::InvalidConfig(
                            "test function must vanish on Dirichlet faces".into(),
                        ));
                    }
                    [0.0; 3]
                }
            };
            faces += (0..3)
                .map(|c| gv[c] * flux[c] - d * v[c] * dn_g[c])
                .sum::<f64>()
                / slice as f64;
        }
    }
    Ok(bulk + faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{BoundaryData, ModelParams};
    use crate::pde::grid::Grid;
    use crate::pde::solver::regime_from_theta;
    use crate::pde::stationary::stationary_solve;

    #[test]
    fn converged_profile_has_small_residual() {
        let p = ModelParams::new(1.0, 0.75, 0.25, 1.0, 0.5, 1.0).unwrap();
        let b = BoundaryData::faces([0.3, 0.2, 0.1], [0.1, 0.4, 0.05]);
        let grid = Grid::line(80).unwrap();
        let pr = PdeProblem::new(grid, p, regime_from_theta(0.5, 1.0).unwrap(), b).unwrap();
        let st = stationary_solve(&pr, 1e-9, 2000.0).unwrap();
        assert!(st.converged);
        // Vanishes at x = -1 only.
        let g = |u: &[f64]| {
            let s = 1.0 + u[0];
            [s, s * s, (u[0] * 1.3).sin() + 1.3f64.sin()]
        };
        let res = weak_residual(&pr, &st.profile, &g).unwrap();
        assert!(res.abs() < 1e-3, "residual {res}");
        let off = Profile::constant(&pr.grid, [0.2, 0.2, 0.2]).unwrap();
        assert!(weak_residual(&pr, &off, &g).unwrap().abs() > 1e-2);
        let nonzero = |_: &[f64]| [1.0, 0.0, 0.0];
        assert!(weak_residual(&pr, &st.profile, &nonzero).is_err());
    }
}
