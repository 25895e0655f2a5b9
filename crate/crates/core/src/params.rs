use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Face;

/// Rates of the particle system and the boundary slowdown exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Stirring rate `D` per adjacent pair (before the `N^2` speed-up).
    pub diffusion: f64,
    /// Birth rate from a wild site (state 1).
    pub lambda1: f64,
    /// Birth rate from a mixed site (state 3); must be below `lambda1`.
    pub lambda2: f64,
    /// Sterile release rate `r`.
    pub release: f64,
    pub theta_left: f64,
    pub theta_right: f64,
    /// Multiplies every exchange clock. `1.0` means one clock of rate `D`
    /// per unordered adjacent pair.
    #[serde(default = "one")]
    pub exchange_multiplier: f64,
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(
        diffusion: f64,
        lambda1: f64,
        lambda2: f64,
        release: f64,
        theta_left: f64,
        theta_right: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            diffusion,
            lambda1,
            lambda2,
            release,
            theta_left,
            theta_right,
            exchange_multiplier: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("D", self.diffusion),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("r", self.release),
            ("exchange multiplier", self.exchange_multiplier),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.lambda2 >= self.lambda1 {
            return Err(Error::InvalidParams(format!(
                "lambda2 ({}) must be below lambda1 ({})",
                self.lambda2, self.lambda1
            )));
        }
        for (name, v) in [("theta_l", self.theta_left), ("theta_r", self.theta_right)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_theta(mut self, theta_left: f64, theta_right: f64) -> Self {
        self.theta_left = theta_left;
        self.theta_right = theta_right;
        self
    }

    pub fn theta(&self, face: Face) -> f64 {
        match face {
            Face::Left => self.theta_left,
            Face::Right => self.theta_right,
        }
    }

    /// Macroscopic diffusion coefficient seen by the hydrodynamic equation.
    pub fn effective_diffusion(&self) -> f64 {
        self.diffusion * self.exchange_multiplier
    }

    /// Extinction state `(0, r/(r+1), 0)`.
    pub fn extinction_state(&self) -> [f64; 3] {
        [0.0, self.release / (self.release + 1.0), 0.0]
    }
}

type FieldFn = dyn Fn(Face, &[f64]) -> [f64; 3] + Send + Sync;

/// Reservoir densities `(b1, b2, b3)` on the two faces; `b0 = 1 - b1 - b2 - b3`.
#[derive(Clone)]
pub enum BoundaryData {
    Constant {
        left: [f64; 3],
        right: [f64; 3],
    },
    /// Closed form in the face and the transverse macroscopic coordinates.
    Field(Arc<FieldFn>),
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Constant { left, right } => f
                .debug_struct("Constant")
                .field("left", left)
                .field("right", right)
                .finish(),
            BoundaryData::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl BoundaryData {
    pub fn constant(b: [f64; 3]) -> Self {
        BoundaryData::Constant { left: b, right: b }
    }

    pub fn faces(left: [f64; 3], right: [f64; 3]) -> Self {
        BoundaryData::Constant { left, right }
    }

    pub fn from_fn(f: impl Fn(Face, &[f64]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        BoundaryData::Field(Arc::new(f))
    }

    pub fn eval(&self, face: Face, transverse: &[f64]) -> [f64; 3] {
        match self {
            BoundaryData::Constant { left, right } => match face {
                Face::Left => *left,
                Face::Right => *right,
            },
            BoundaryData::Field(f) => f(face, transverse),
        }
    }

    /// `(b0, b1, b2, b3)`.
    pub fn eval4(&self, face: Face, transverse: &[f64]) -> [f64; 4] {
        let b = self.eval(face, transverse);
        [1.0 - b[0] - b[1] - b[2], b[0], b[1], b[2]]
    }

    /// Checks that a value lies in the closed simplex.
    pub fn check_value(b: [f64; 3]) -> Result<()> {
        let sum: f64 = b.iter().sum();
        if b.iter().any(|v| !(0.0..=1.0).contains(v)) || sum > 1.0 {
            return Err(Error::InvalidParams(format!(
                "boundary value {b:?} outside the simplex"
            )));
        }
        Ok(())
    }

    /// Validates the data at the given transverse sample points of both faces.
    pub fn validate_at(&self, transverse_points: &[Vec<f64>]) -> Result<()> {
        for face in [Face::Left, Face::Right] {
            for u in transverse_points {
                Self::check_value(self.eval(face, u))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(1.0, 0.75, 0.25, 1.0, 0.5, 1.0).is_ok());
        assert!(ModelParams::new(1.0, 0.25, 0.75, 1.0, 0.5, 1.0).is_err());
        assert!(ModelParams::new(0.0, 0.75, 0.25, 1.0, 0.5, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.75, 0.25, 0.0, 0.5, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.75, 0.25, 1.0, -0.1, 1.0).is_err());
    }

    #[test]
    fn boundary_b0() {
        let b = BoundaryData::faces([0.1, 0.2, 0.3], [0.3, 0.2, 0.25]);
        let l = b.eval4(Face::Left, &[]);
        assert!((l[0] - 0.4).abs() < 1e-15);
        let r = b.eval4(Face::Right, &[]);
        assert!((r[0] - 0.25).abs() < 1e-15);
        assert!(BoundaryData::check_value([0.5, 0.4, 0.2]).is_err());
        assert!(BoundaryData::check_value([0.0, 0.5, 0.0]).is_ok());
    }
}
