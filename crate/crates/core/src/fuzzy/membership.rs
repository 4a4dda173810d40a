use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::FuzzyError;

/// Piecewise-linear membership function.
///
/// Coincident breakpoints give shoulders: `Triangular { a: 0, b: 0, c: 0.5 }`
/// is 1 at 0 and falls to 0 at 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MembershipDef", into = "MembershipDef")]
pub enum MembershipFunction {
    Triangular { a: f64, b: f64, c: f64 },
    Trapezoidal { a: f64, b: f64, c: f64, d: f64 },
}

impl MembershipFunction {
    pub fn triangular(a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        check_breakpoints(&[a, b, c])?;
        Ok(Self::Triangular { a, b, c })
    }

    pub fn trapezoidal(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        check_breakpoints(&[a, b, c, d])?;
        Ok(Self::Trapezoidal { a, b, c, d })
    }

    /// Membership degree of `x`, in `[0, 1]`.
    pub fn degree(&self, x: f64) -> f64 {
        let (a, b, c, d) = match *self {
            Self::Triangular { a, b, c } => (a, b, b, c),
            Self::Trapezoidal { a, b, c, d } => (a, b, c, d),
        };
        if !(a..=d).contains(&x) {
            0.0
        } else if x < b {
            (x - a) / (b - a)
        } else if x <= c {
            1.0
        } else {
            (d - x) / (d - c)
        }
    }

    /// Closed support `[first, last]` breakpoint.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Triangular { a, c, .. } => (a, c),
            Self::Trapezoidal { a, d, .. } => (a, d),
        }
    }
}

fn check_breakpoints(p: &[f64]) -> Result<(), FuzzyError> {
    if p.iter().all(|v| v.is_finite()) && p.windows(2).all(|w| w[0] <= w[1]) {
        Ok(())
    } else {
        Err(FuzzyError::InvalidMembership(p.to_vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Shape {
    Triangular,
    Trapezoidal,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MembershipDef {
    shape: Shape,
    params: Vec<f64>,
}

impl TryFrom<MembershipDef> for MembershipFunction {
    type Error = FuzzyError;

    fn try_from(def: MembershipDef) -> Result<Self, Self::Error> {
        match (def.shape, def.params.as_slice()) {
            (Shape::Triangular, &[a, b, c]) => Self::triangular(a, b, c),
            (Shape::Trapezoidal, &[a, b, c, d]) => Self::trapezoidal(a, b, c, d),
            (Shape::Triangular, p) => Err(FuzzyError::ParamCount {
                expected: 3,
                found: p.len(),
            }),
            (Shape::Trapezoidal, p) => Err(FuzzyError::ParamCount {
                expected: 4,
                found: p.len(),
            }),
        }
    }
}

impl From<MembershipFunction> for MembershipDef {
    fn from(mf: MembershipFunction) -> Self {
        match mf {
            MembershipFunction::Triangular { a, b, c } => Self {
                shape: Shape::Triangular,
                params: vec![a, b, c],
            },
            MembershipFunction::Trapezoidal { a, b, c, d } => Self {
                shape: Shape::Trapezoidal,
                params: vec![a, b, c, d],
            },
        }
    }
}
