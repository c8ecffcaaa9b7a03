use super::Matrix;
use crate::error::{Error, Result};

/// Cardinal B-spline of the given degree supported on `[0, degree + 1]`.
fn cardinal(degree: usize, u: f64) -> f64 {
    if degree == 0 {
        return if (0.0..1.0).contains(&u) { 1.0 } else { 0.0 };
    }
    let d = degree as f64;
    (u * cardinal(degree - 1, u) + (d + 1.0 - u) * cardinal(degree - 1, u - 1.0)) / d
}

/// B-spline basis evaluated at horizons `0..=h_bar`.
///
/// Knots are uniformly spaced over `[0, h_bar]` with `h_bar - 1` segments, so
/// there are `h_bar + degree - 1` basis functions. In knot-index units the
/// left-most inner knot of the cubic basis functions runs from -2 to
/// `h_bar - 1`, and every horizon lies inside the span where the basis is a
/// partition of unity.
pub fn bspline_basis(h_bar: usize, degree: usize) -> Result<Matrix> {
    if degree == 0 {
        return Err(Error::InvalidInput("spline degree must be positive".into()));
    }
    if h_bar < degree {
        return Err(Error::InvalidInput(format!(
            "h_bar = {h_bar} is too small for degree-{degree} splines"
        )));
    }
    let k = h_bar + degree - 1;
    Ok(Matrix::from_fn(h_bar + 1, k, |h, j| {
        let u = (h * (h_bar - 1)) as f64 / h_bar as f64;
        cardinal(degree, u - (j as f64 - degree as f64))
    }))
}
