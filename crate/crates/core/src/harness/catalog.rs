use std::f64::consts::FRAC_PI_2;

/// A named closed-form test triple `(G1, G2, G3)`; all entries depend on the
/// axis-1 coordinate only and are bounded on the closed domain.
#[derive(Clone, Copy)]
pub struct TestFunction {
    pub name: &'static str,
    pub eval: fn(&[f64]) -> [f64; 3],
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TestFunction({})", self.name)
    }
}

fn bump(x: f64) -> f64 {
    let s = 2.0 * x;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

const CATALOG: [TestFunction; 8] = [
    TestFunction {
        name: "one",
        eval: |_| [1.0, 1.0, 1.0],
    },
    TestFunction {
        name: "wild",
        eval: |_| [1.0, 0.0, 0.0],
    },
    TestFunction {
        name: "sterile",
        eval: |_| [0.0, 1.0, 0.0],
    },
    TestFunction {
        name: "mixed",
        eval: |_| [0.0, 0.0, 1.0],
    },
    TestFunction {
        name: "linear",
        eval: |u| [u[0], -u[0], 0.5 * u[0]],
    },
    TestFunction {
        name: "quadratic",
        eval: |u| [u[0] * u[0], 1.0 - u[0] * u[0], u[0] * u[0]],
    },
    TestFunction {
        name: "bump",
        eval: |u| {
            let b = bump(u[0]);
            [b, 0.5 * b, 0.25 * b]
        },
    },
    TestFunction {
        name: "cosine",
        eval: |u| {
            // Lowest non-constant Neumann mode on [-1, 1].
            let v = (FRAC_PI_2 * (u[0] + 1.0)).cos();
            [v, 0.5 * v, -v]
        },
    },
];

impl TestFunction {
    pub fn catalog() -> &'static [TestFunction] {
        &CATALOG
    }

    pub fn by_name(name: &str) -> Option<TestFunction> {
        CATALOG.iter().find(|t| t.name == name).copied()
    }

    pub fn eval(&self, u: &[f64]) -> [f64; 3] {
        (self.eval)(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_bounded() {
        assert_eq!(TestFunction::catalog().len(), 8);
        for t in TestFunction::catalog() {
            for i in 0..=200 {
                let x = -1.0 + i as f64 * 0.01;
                assert!(t.eval(&[x]).iter().all(|v| v.is_finite() && v.abs() <= 1.0));
            }
        }
        assert_eq!(
            TestFunction::by_name("bump").unwrap().eval(&[0.6]),
            [0.0; 3]
        );
        assert_eq!(TestFunction::by_name("bump").unwrap().eval(&[0.0])[0], 1.0);
        assert!(TestFunction::by_name("nope").is_none());
    }
}
