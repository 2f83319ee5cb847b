//! Small least-squares fits used by the locking analysis.

use crate::error::{Error, Result};

/// Fit of `y = slope·x` (no intercept).
#[derive(Debug, Clone, PartialEq)]
pub struct OriginFit {
    pub slope: f64,
    /// Coefficient of determination against the mean of `y` (centred).
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

/// Fit of `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

fn check(x: &[f64], y: &[f64], needed: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DegenerateFit(format!("{} x values but {} y values", x.len(), y.len())));
    }
    if x.len() < needed {
        return Err(Error::InsufficientPoints { needed, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

fn centred_r_squared(y: &[f64], residuals: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

pub fn fit_through_origin(x: &[f64], y: &[f64]) -> Result<OriginFit> {
    check(x, y, 1)?;
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all x values are zero".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let slope = sxy / sxx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - slope * a).collect();
    let r_squared = centred_r_squared(y, &residuals);
    Ok(OriginFit { slope, r_squared, residuals })
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    check(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("x values are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    Ok(LineFit { intercept, slope, r_squared: centred_r_squared(y, &residuals) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_origin_line() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v| 0.014 * v).collect();
        let f = fit_through_origin(&x, &y).unwrap();
        assert!((f.slope - 0.014).abs() < 1e-15);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn origin_fit_matches_normal_equation() {
        let x = [1.0, 2.0, 3.0];
        let y = [1.1, 1.9, 3.2];
        // slope = Σxy/Σx² = (1.1 + 3.8 + 9.6)/14
        let f = fit_through_origin(&x, &y).unwrap();
        assert!((f.slope - 14.5 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn line_fit_recovers_intercept() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [2.0, 5.0, 8.0, 11.0];
        let f = fit_line(&x, &y).unwrap();
        assert!((f.intercept - 2.0).abs() < 1e-12 && (f.slope - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_line(&[1.0], &[1.0]), Err(Error::InsufficientPoints { .. })));
        assert!(matches!(fit_line(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_through_origin(&[0.0, 0.0], &[1.0, 2.0]), Err(Error::DegenerateFit(_))));
    }
}
