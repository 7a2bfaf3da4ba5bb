//! Points of the simplex `A_n`: 2n nonnegative coefficients `a_{-n}, ..., a_{n-1}`.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative tolerance accepted on the total mass of a float profile flagged as normalized.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Coefficients of a step function on `(-1/4, 1/4)` split into `2n` equal intervals.
///
/// `coeffs[idx]` holds `a_{idx - n}`. A profile is `normalized` when its
/// coefficients sum to `4n`, i.e. the induced step function has unit integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientProfile<T = f64> {
    n: usize,
    coeffs: Vec<T>,
    normalized: bool,
}

pub type RationalProfile = CoefficientProfile<BigRational>;

fn check_shape<T: Scalar>(n: usize, raw: &[T]) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if raw.len() != 2 * n {
        return Err(Error::Shape {
            expected: 2 * n,
            got: raw.len(),
        });
    }
    if let Some(pos) = raw.iter().position(|x| x.is_negative_value()) {
        return Err(Error::Domain(format!(
            "coefficient a_{} = {:?} is negative",
            pos as i64 - n as i64,
            raw[pos]
        )));
    }
    Ok(())
}

/// Builds a member of `A_n`.
///
/// With `normalize` the coefficients are rescaled to sum to `4n`; otherwise
/// their sum must already be `4n` (exactly for rationals, within
/// [`MASS_TOLERANCE`] relative for floats).
pub fn make_profile<T: Scalar>(n: usize, raw: Vec<T>, normalize: bool) -> Result<CoefficientProfile<T>> {
    check_shape(n, &raw)?;
    if raw.iter().any(|x| x.to_f64().is_some_and(|f| !f.is_finite())) {
        return Err(Error::Domain("coefficients must be finite".into()));
    }
    let target = T::from_count(4 * n);
    let total = raw.iter().cloned().fold(T::zero(), |acc, x| acc + x);
    let coeffs = if normalize {
        if total.is_zero() {
            return Err(Error::Degenerate("total mass is zero, cannot normalize".into()));
        }
        let scale = target / total;
        raw.into_iter().map(|x| x * scale.clone()).collect()
    } else {
        if !total.close_rel(&target, MASS_TOLERANCE) {
            return Err(Error::Domain(format!(
                "coefficients sum to {:?}, expected {}",
                total,
                4 * n
            )));
        }
        raw
    };
    Ok(CoefficientProfile {
        n,
        coeffs,
        normalized: true,
    })
}

impl<T: Scalar> CoefficientProfile<T> {
    /// A nonnegative coefficient vector with no mass constraint.
    ///
    /// The objective is defined for these too (it is 2-homogeneous), but
    /// [`step_sup`](crate::objective::step_sup) and any bound on `a_n` require a normalized profile.
    pub fn unnormalized(n: usize, raw: Vec<T>) -> Result<Self> {
        check_shape(n, &raw)?;
        Ok(CoefficientProfile {
            n,
            coeffs: raw,
            normalized: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `a_i` for `i` in `-n..n`.
    pub fn get(&self, i: i64) -> &T {
        &self.coeffs[(i + self.n as i64) as usize]
    }

    pub fn total(&self) -> T {
        self.coeffs.iter().cloned().fold(T::zero(), |acc, x| acc + x)
    }

    /// Maps `a_i` to `a_{-1-i}`, mirroring the step function about the origin.
    pub fn reflect(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        CoefficientProfile {
            n: self.n,
            coeffs,
            normalized: self.normalized,
        }
    }

    /// Multiplies every coefficient by `lambda >= 0`; the result is unnormalized unless `lambda == 1`.
    pub fn scaled(&self, lambda: T) -> Result<Self> {
        if lambda.is_negative_value() {
            return Err(Error::Domain("scale factor must be nonnegative".into()));
        }
        let one = lambda.is_one();
        Ok(CoefficientProfile {
            n: self.n,
            coeffs: self.coeffs.iter().map(|x| x.clone() * lambda.clone()).collect(),
            normalized: self.normalized && one,
        })
    }
}

impl CoefficientProfile<f64> {
    /// True when `a_i` and `a_{-1-i}` agree to `tol` absolutely.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.coeffs
            .iter()
            .zip(self.coeffs.iter().rev())
            .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Exact rational copy of a float profile. Normalization is re-checked exactly.
    pub fn to_rational(&self) -> RationalProfile {
        let coeffs: Vec<BigRational> = self
            .coeffs
            .iter()
            .map(|&x| BigRational::from_float(x).expect("finite coefficient"))
            .collect();
        let target = BigRational::from_count(4 * self.n);
        let total = coeffs.iter().cloned().fold(BigRational::from_count(0), |a, b| a + b);
        CoefficientProfile {
            n: self.n,
            normalized: total == target,
            coeffs,
        }
    }
}

impl RationalProfile {
    pub fn to_f64(&self) -> CoefficientProfile<f64> {
        CoefficientProfile {
            n: self.n,
            coeffs: self.coeffs.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect(),
            normalized: self.normalized,
        }
    }
}

/// Euclidean projection of `v` onto `{x >= 0, sum x = 4n}`.
///
/// Sort-and-threshold method: the projection is `max(v - theta, 0)` for the
/// unique `theta` that restores the mass.
pub fn project_to_simplex(n: usize, v: &[f64]) -> Result<CoefficientProfile<f64>> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if v.len() != 2 * n {
        return Err(Error::Shape {
            expected: 2 * n,
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("projection input must be finite".into()));
    }
    let mass = (4 * n) as f64;
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - mass) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut coeffs: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // one rescale absorbs the rounding left in the sum
    let total: f64 = coeffs.iter().sum();
    if total > 0.0 && total != mass {
        let s = mass / total;
        coeffs.iter_mut().for_each(|x| *x *= s);
    }
    Ok(CoefficientProfile {
        n,
        coeffs,
        normalized: true,
    })
}
