//! The mass-quantum lattice on `A_n`.
//!
//! A mesh with `m` quanta places `counts_i` quanta on coefficient `i`, giving
//! the profile `a_i = 4n * counts_i / m`. Lattice points are the weak
//! compositions of `m` into `2n` parts and are enumerated in lexicographic
//! order. Chunks fix a short prefix of leading counts so that independent
//! sub-enumerations can run in parallel and be checkpointed.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::{BigRational, Ratio};
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{CoefficientProfile, RationalProfile};
use crate::window::{window_set, RangeMode, WindowIndex};

/// Largest supported number of quanta. Keeps `m^2` and the certificate
/// numerators comfortably inside `i128`.
pub const MAX_QUANTA: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeshSpec {
    pub n: usize,
    pub m: u64,
}

impl MeshSpec {
    pub fn new(n: usize, m: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        if n > 64 {
            return Err(Error::Domain(format!("n = {n} is too large for lattice enumeration")));
        }
        if m == 0 || m > MAX_QUANTA {
            return Err(Error::Domain(format!("m must be in 1..={MAX_QUANTA}, got {m}")));
        }
        Ok(MeshSpec { n, m })
    }

    pub fn parts(&self) -> usize {
        2 * self.n
    }

    /// Coordinate step `h = 4n/m`.
    pub fn h(&self) -> Ratio<i128> {
        Ratio::new(4 * self.n as i128, self.m as i128)
    }

    pub fn h_f64(&self) -> f64 {
        4.0 * self.n as f64 / self.m as f64
    }

    pub fn point_count(&self) -> BigUint {
        composition_count(self.m, self.parts())
    }

    /// Length of the chunk prefix: two leading counts, or one when `n = 1`.
    pub fn chunk_prefix_len(&self) -> usize {
        2.min(self.parts() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub counts: Vec<u64>,
}

impl LatticePoint {
    pub fn new(mesh: &MeshSpec, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != mesh.parts() {
            return Err(Error::Shape {
                expected: mesh.parts(),
                got: counts.len(),
            });
        }
        let total: u64 = counts.iter().sum();
        if total != mesh.m {
            return Err(Error::Domain(format!("counts sum to {total}, expected m = {}", mesh.m)));
        }
        Ok(LatticePoint { counts })
    }

    pub fn to_profile(&self, mesh: &MeshSpec) -> CoefficientProfile<f64> {
        let scale = 4.0 * mesh.n as f64 / mesh.m as f64;
        let raw = self.counts.iter().map(|&c| c as f64 * scale).collect();
        crate::profile::make_profile(mesh.n, raw, true).expect("lattice points have positive mass")
    }

    /// Exactly normalized rational profile `a_i = 4n counts_i / m`.
    pub fn to_rational_profile(&self, mesh: &MeshSpec) -> RationalProfile {
        let h = BigRational::new((4 * mesh.n).into(), mesh.m.into());
        let raw = self
            .counts
            .iter()
            .map(|&c| BigRational::from_integer(c.into()) * h.clone())
            .collect();
        crate::profile::make_profile(mesh.n, raw, false).expect("lattice profile is normalized")
    }
}

/// Number of weak compositions of `m` into `parts` parts: `C(m + parts - 1, parts - 1)`.
pub fn composition_count(m: u64, parts: usize) -> BigUint {
    assert!(parts >= 1, "at least one part");
    let k = (parts - 1) as u64;
    let mut acc = BigUint::one();
    // C(m+k, k) = prod_{i=1..k} (m + i) / i, exact at every step
    for i in 1..=k {
        acc = acc * BigUint::from(m + i) / BigUint::from(i);
    }
    acc
}

/// Advances `c[fixed..]` to the next weak composition (same total) in lexicographic order.
fn next_composition(c: &mut [u64], fixed: usize) -> bool {
    let d = c.len();
    if d - fixed < 2 {
        return false;
    }
    let pivot = if c[d - 1] > 0 {
        d - 2
    } else {
        match (fixed..d - 1).rev().find(|&j| c[j] > 0) {
            Some(j) if j > fixed => j - 1,
            _ => return false,
        }
    };
    let tail: u64 = c[pivot + 1..].iter().sum();
    c[pivot] += 1;
    c[pivot + 1..].iter_mut().for_each(|x| *x = 0);
    c[d - 1] = tail - 1;
    true
}

/// A sub-enumeration selected by fixing the leading counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChunkCursor {
    pub prefix: Vec<u64>,
}

impl ChunkCursor {
    /// First chunk of the mesh in lexicographic order.
    pub fn first(mesh: &MeshSpec) -> Self {
        ChunkCursor {
            prefix: vec![0; mesh.chunk_prefix_len()],
        }
    }

    /// The chunk following this one, or `None` after the last.
    pub fn successor(&self, mesh: &MeshSpec) -> Option<Self> {
        let used: u64 = self.prefix.iter().sum();
        let mut buf = self.prefix.clone();
        buf.push(mesh.m - used);
        if next_composition(&mut buf, 0) {
            buf.pop();
            Some(ChunkCursor { prefix: buf })
        } else {
            None
        }
    }

    pub fn validate(&self, mesh: &MeshSpec) -> Result<()> {
        if self.prefix.len() != mesh.chunk_prefix_len() {
            return Err(Error::Cursor(format!(
                "prefix has {} counts, mesh uses {}",
                self.prefix.len(),
                mesh.chunk_prefix_len()
            )));
        }
        let used = self.prefix.iter().try_fold(0u64, |acc, &c| acc.checked_add(c));
        match used {
            Some(u) if u <= mesh.m => Ok(()),
            _ => Err(Error::Cursor(format!("prefix {self} exceeds m = {}", mesh.m))),
        }
    }

    /// Every chunk of the mesh, in order.
    pub fn all(mesh: &MeshSpec) -> impl Iterator<Item = ChunkCursor> + '_ {
        std::iter::successors(Some(ChunkCursor::first(mesh)), move |c| c.successor(mesh))
    }
}

impl fmt::Display for ChunkCursor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.prefix.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ChunkCursor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let prefix = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::Cursor(format!("bad count {t:?} in cursor {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChunkCursor { prefix })
    }
}

/// Streaming lexicographic enumeration of lattice points.
///
/// [`Compositions::advance`] reuses one buffer; the `Iterator` impl clones it
/// into owned [`LatticePoint`]s.
#[derive(Debug, Clone)]
pub struct Compositions {
    counts: Vec<u64>,
    fixed: usize,
    started: bool,
    done: bool,
}

impl Compositions {
    pub fn advance(&mut self) -> Option<&[u64]> {
        if self.done {
            return None;
        }
        if self.started {
            if !next_composition(&mut self.counts, self.fixed) {
                self.done = true;
                return None;
            }
        } else {
            self.started = true;
        }
        Some(&self.counts)
    }
}

impl Iterator for Compositions {
    type Item = LatticePoint;

    fn next(&mut self) -> Option<LatticePoint> {
        self.advance().map(|c| LatticePoint { counts: c.to_vec() })
    }
}

pub fn enumerate_compositions(mesh: &MeshSpec, chunk: Option<&ChunkCursor>) -> Result<Compositions> {
    let d = mesh.parts();
    let mut counts = vec![0; d];
    let fixed = match chunk {
        None => 0,
        Some(c) => {
            c.validate(mesh)?;
            counts[..c.prefix.len()].copy_from_slice(&c.prefix);
            c.prefix.len()
        }
    };
    let used: u64 = counts[..fixed].iter().sum();
    counts[d - 1] = mesh.m - used;
    Ok(Compositions {
        counts,
        fixed,
        started: false,
        done: false,
    })
}

/// Exact l1 covering radius `2n * h = 8n^2 / m`: rounding every coordinate
/// to the lattice and repairing the sum moves each of the `2n` coordinates by at most `h`.
pub fn covering_radius_exact(mesh: &MeshSpec) -> Ratio<i128> {
    Ratio::new(8 * (mesh.n as i128).pow(2), mesh.m as i128)
}

pub fn covering_radius_l1(mesh: &MeshSpec) -> f64 {
    crate::exact::ceil_f64(&covering_radius_exact(mesh))
}

/// Nearest-style lattice point used to check the covering radius: floor every
/// scaled coordinate, then hand the leftover quanta to the largest remainders.
pub fn round_to_lattice(mesh: &MeshSpec, p: &CoefficientProfile<f64>) -> LatticePoint {
    let scale = mesh.m as f64 / (4 * mesh.n) as f64;
    let scaled: Vec<f64> = p.coeffs().iter().map(|&a| a * scale).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|x| x.floor().max(0.0) as u64).collect();
    let mut used: u64 = counts.iter().sum();
    while used > mesh.m {
        let i = (0..counts.len()).filter(|&i| counts[i] > 0).max_by(|&a, &b| {
            (counts[a] as f64 - scaled[a]).total_cmp(&(counts[b] as f64 - scaled[b]))
        });
        counts[i.expect("positive count exists")] -= 1;
        used -= 1;
    }
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - counts[a] as f64;
        let rb = scaled[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take((mesh.m - used) as usize) {
        counts[i] += 1;
    }
    LatticePoint { counts }
}

/// Integer window sum `N = sum_{k <= i+j <= k+ell-2} c_i c_j`; the window value is `4n N / (ell m^2)`.
pub fn exact_window_numerator(point: &LatticePoint, w: WindowIndex) -> Result<u128> {
    let n = point.counts.len() / 2;
    w.check(n, RangeMode::Proof)?;
    let c = &point.counts;
    let mut acc: u128 = 0;
    for (i, &ci) in c.iter().enumerate() {
        for (j, &cj) in c.iter().enumerate() {
            let m = i as i64 + j as i64 - 2 * n as i64;
            if m >= w.k && m <= w.band_end() {
                acc += ci as u128 * cj as u128;
            }
        }
    }
    Ok(acc)
}

/// Evaluates every window of a mode on integer count vectors.
///
/// Windows are stored as offsets into the integer self-convolution so one
/// O(n^2) pass plus prefix sums gives all window numerators.
#[derive(Debug, Clone)]
pub struct IntegerWindows {
    pub n: usize,
    pub windows: Vec<WindowIndex>,
    spans: Vec<(usize, usize)>,
    conv: Vec<u64>,
    prefix: Vec<u64>,
}

impl IntegerWindows {
    pub fn new(n: usize, mode: RangeMode) -> Self {
        let windows = window_set(n, mode);
        let off = 2 * n as i64;
        let spans = windows
            .iter()
            .map(|w| ((w.k + off) as usize, (w.band_end() + off + 1) as usize))
            .collect();
        IntegerWindows {
            n,
            windows,
            spans,
            conv: vec![0; 4 * n - 1],
            prefix: vec![0; 4 * n],
        }
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Writes `N_w(counts)` for every window into `out`. Requires `m <= 2^32`.
    pub fn numerators(&mut self, counts: &[u64], out: &mut [u64]) {
        debug_assert_eq!(counts.len(), 2 * self.n);
        self.conv.iter_mut().for_each(|x| *x = 0);
        for (i, &ci) in counts.iter().enumerate() {
            if ci == 0 {
                continue;
            }
            for (j, &cj) in counts.iter().enumerate() {
                self.conv[i + j] += ci * cj;
            }
        }
        let mut acc = 0;
        for (slot, v) in self.prefix[1..].iter_mut().zip(&self.conv) {
            acc += v;
            *slot = acc;
        }
        for (o, &(a, b)) in out.iter_mut().zip(&self.spans) {
            *o = self.prefix[b] - self.prefix[a];
        }
    }
}
