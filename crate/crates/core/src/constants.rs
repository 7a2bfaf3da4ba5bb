//! The autoconvolution constant `c` and the Sidon constant `sigma` are tied by `sigma = sqrt(2/c)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledConstants {
    pub c_value: f64,
    pub sigma_value: f64,
}

fn positive(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::Domain(format!("{what} must be positive and finite, got {x}")))
    }
}

pub fn sigma_from_c(c: f64) -> Result<f64> {
    Ok((2.0 / positive(c, "c")?).sqrt())
}

pub fn c_from_sigma(sigma: f64) -> Result<f64> {
    let s = positive(sigma, "sigma")?;
    Ok(2.0 / (s * s))
}

impl ScaledConstants {
    pub fn from_c(c: f64) -> Result<Self> {
        Ok(ScaledConstants {
            c_value: c,
            sigma_value: sigma_from_c(c)?,
        })
    }

    pub fn from_sigma(sigma: f64) -> Result<Self> {
        Ok(ScaledConstants {
            c_value: c_from_sigma(sigma)?,
            sigma_value: sigma,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_bracket() {
        assert!((sigma_from_c(1.2748).unwrap() - 1.2525).abs() < 1e-3);
        assert!((sigma_from_c(1.5098).unwrap() - 1.1510).abs() < 1e-3);
        assert_eq!(sigma_from_c(2.0).unwrap(), 1.0);
        assert!((c_from_sigma(1.1509).unwrap() - 1.5100).abs() < 2e-3);
    }

    #[test]
    fn conversions_are_inverse() {
        for c in [0.5, 1.0, 1.2748, 1.5, 3.0] {
            let back = c_from_sigma(sigma_from_c(c).unwrap()).unwrap();
            assert!((back - c).abs() <= 1e-14 * c);
        }
    }

    #[test]
    fn nonpositive_inputs_are_rejected() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(sigma_from_c(bad), Err(Error::Domain(_))));
            assert!(matches!(c_from_sigma(bad), Err(Error::Domain(_))));
        }
    }
}
