use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which index set of windows the max ranges over.
///
/// `Theorem`: `2 <= ell <= 2n`, `-n <= k <= n - ell`.
/// `Proof`: `2 <= ell <= 4n`, `-2n <= k <= 2n - ell`; a strict superset that
/// contains the all-pairs window `(-2n, 4n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeMode {
    Theorem,
    #[default]
    Proof,
}

impl fmt::Display for RangeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RangeMode::Theorem => "theorem",
            RangeMode::Proof => "proof",
        })
    }
}

impl FromStr for RangeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem" => Ok(RangeMode::Theorem),
            "proof" => Ok(RangeMode::Proof),
            other => Err(Error::Domain(format!("unknown range mode {other:?}"))),
        }
    }
}

/// The band `k <= i + j <= k + ell - 2`, i.e. the interval `(k/4n, (k+ell)/4n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindowIndex {
    pub k: i64,
    pub ell: i64,
}

impl WindowIndex {
    pub const fn new(k: i64, ell: i64) -> Self {
        WindowIndex { k, ell }
    }

    pub fn is_valid(&self, n: usize, mode: RangeMode) -> bool {
        let n = n as i64;
        match mode {
            RangeMode::Theorem => self.ell >= 2 && self.ell <= 2 * n && self.k >= -n && self.k <= n - self.ell,
            RangeMode::Proof => self.ell >= 2 && self.ell <= 4 * n && self.k >= -2 * n && self.k <= 2 * n - self.ell,
        }
    }

    pub fn check(&self, n: usize, mode: RangeMode) -> Result<()> {
        if self.is_valid(n, mode) {
            Ok(())
        } else {
            Err(Error::Range {
                k: self.k,
                ell: self.ell,
                n,
            })
        }
    }

    /// Image under `a_i -> a_{-1-i}`: the band `[k, k+ell-2]` maps to `[-k-ell, -k-2]`.
    pub fn reflected(&self) -> Self {
        WindowIndex {
            k: -self.k - self.ell,
            ell: self.ell,
        }
    }

    /// Last anti-diagonal `i + j` covered by the band.
    pub fn band_end(&self) -> i64 {
        self.k + self.ell - 2
    }
}

impl fmt::Display for WindowIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(k={}, ell={})", self.k, self.ell)
    }
}

/// All windows of the given mode, ordered by `ell` then `k`.
pub fn window_set(n: usize, mode: RangeMode) -> Vec<WindowIndex> {
    let n = n as i64;
    let (max_ell, k_lo, k_hi_base) = match mode {
        RangeMode::Theorem => (2 * n, -n, n),
        RangeMode::Proof => (4 * n, -2 * n, 2 * n),
    };
    let mut out = Vec::new();
    for ell in 2..=max_ell {
        for k in k_lo..=(k_hi_base - ell) {
            out.push(WindowIndex { k, ell });
        }
    }
    out
}
