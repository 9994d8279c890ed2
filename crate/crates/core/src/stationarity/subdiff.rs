use nalgebra::DVector;

/// Which generalized derivative of `phi = min(f1, f2)` to describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubdiffKind {
    /// Limiting subdifferential of `phi`.
    Partial,
    /// Clarke subdifferential of `phi`.
    Clarke,
    /// Subdifferential of `-phi` (limiting and Clarke coincide).
    PartialOfNegative,
}

/// A finite description of a subdifferential of a min-function.
#[derive(Debug, Clone, PartialEq)]
pub enum SubdiffDescription {
    Singleton(DVector<f64>),
    /// Exactly two points, not their hull.
    Pair(DVector<f64>, DVector<f64>),
    /// The closed segment between two endpoints.
    Segment(DVector<f64>, DVector<f64>),
}

impl SubdiffDescription {
    pub fn points(&self) -> Vec<&DVector<f64>> {
        match self {
            Self::Singleton(a) => vec![a],
            Self::Pair(a, b) | Self::Segment(a, b) => vec![a, b],
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Self::Pair(..))
    }

    /// Membership up to `tol` in the Euclidean norm.
    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        match self {
            Self::Singleton(a) => (v - a).norm() <= tol,
            Self::Pair(a, b) => (v - a).norm() <= tol || (v - b).norm() <= tol,
            Self::Segment(a, b) => {
                let d = b - a;
                let dd = d.norm_squared();
                let t = if dd == 0.0 {
                    0.0
                } else {
                    ((v - a).dot(&d) / dd).clamp(0.0, 1.0)
                };
                (v - (a + d * t)).norm() <= tol
            }
        }
    }
}

/// Subdifferential of `min(f1, f2)` (or its negative) at a point where
/// `f_i` takes value `val_i` with gradient `grad_i`.
pub fn min_subdifferential(
    grad1: &DVector<f64>,
    grad2: &DVector<f64>,
    val1: f64,
    val2: f64,
    which: SubdiffKind,
) -> SubdiffDescription {
    let sign = match which {
        SubdiffKind::PartialOfNegative => -1.0,
        _ => 1.0,
    };
    let g1 = grad1 * sign;
    let g2 = grad2 * sign;
    if val1 < val2 {
        return SubdiffDescription::Singleton(g1);
    }
    if val1 > val2 {
        return SubdiffDescription::Singleton(g2);
    }
    if g1 == g2 {
        return SubdiffDescription::Singleton(g1);
    }
    match which {
        SubdiffKind::Partial => SubdiffDescription::Pair(g1, g2),
        SubdiffKind::Clarke | SubdiffKind::PartialOfNegative => SubdiffDescription::Segment(g1, g2),
    }
}
