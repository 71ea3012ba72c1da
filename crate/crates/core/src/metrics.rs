//! Regression scores.

use crate::error::{Error, Result};

/// Coefficient of determination `1 - SS_res / SS_tot`. Negative for models
/// worse than predicting the mean.
pub fn r2_score(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    if y.len() < 2 {
        return Err(Error::invalid("y", "at least 2 observations are required"));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantTarget);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Root mean squared error.
pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    if y.is_empty() {
        return Err(Error::Empty("y"));
    }
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (b - a) * (b - a)).sum();
    Ok(libm::sqrt(sse / y.len() as f64))
}

fn check_lengths(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: yhat.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r2_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r2_score(&y, &y).unwrap(), 1.0);
        assert_eq!(r2_score(&y, &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(r2_score(&y, &[1.0, 2.0, 2.0]).unwrap(), 0.5);
        assert!(r2_score(&y, &[3.0, 2.0, 1.0]).unwrap() < 0.0);
        assert_eq!(r2_score(&[4.0, 4.0], &[4.0, 4.0]), Err(Error::ConstantTarget));
        assert!(r2_score(&y, &[1.0]).is_err());
        assert!(r2_score(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[0.0], &[3.0]).unwrap(), 3.0);
        assert!(rmse(&[0.0], &[3.0, 1.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }
}
