//! The window objective `F_n(a) = max_w (1/(4n ell)) sum_{k <= i+j <= k+ell-2} a_i a_j`.
//!
//! Every window sum is a contiguous run of the self-convolution
//! `s_m = sum_{i+j=m} a_i a_j`, so one O(n^2) convolution plus prefix sums
//! evaluates all O(n^2) windows in O(1) each.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::CoefficientProfile;
use crate::scalar::{max_of, Scalar};
use crate::window::{window_set, RangeMode, WindowIndex};

/// Relative tolerance under which two window values count as tied for the max.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// `s_m` for `m = -2n ..= 2n-2`, stored at offset `m + 2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoconvolutionSequence<T = f64> {
    n: usize,
    s: Vec<T>,
    prefix: Vec<T>,
}

impl<T: Scalar> AutoconvolutionSequence<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.s
    }

    /// `s_m`; zero outside `[-2n, 2n-2]`.
    pub fn at(&self, m: i64) -> T {
        let idx = m + 2 * self.n as i64;
        if idx < 0 || idx as usize >= self.s.len() {
            T::zero()
        } else {
            self.s[idx as usize].clone()
        }
    }

    pub fn total(&self) -> T {
        self.prefix.last().cloned().unwrap_or_else(T::zero)
    }

    /// `sum_{m=lo}^{hi} s_m` for `-2n <= lo`, `hi <= 2n-2`.
    fn band_sum(&self, lo: i64, hi: i64) -> T {
        let off = 2 * self.n as i64;
        let a = (lo + off) as usize;
        let b = (hi + off + 1) as usize;
        self.prefix[b].clone() - self.prefix[a].clone()
    }
}

pub fn autoconvolve<T: Scalar>(p: &CoefficientProfile<T>) -> AutoconvolutionSequence<T> {
    let a = p.coeffs();
    let len = a.len();
    let mut s = vec![T::zero(); 2 * len - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, aj) in a.iter().enumerate() {
            s[i + j] = s[i + j].clone() + ai.clone() * aj.clone();
        }
    }
    let mut prefix = Vec::with_capacity(s.len() + 1);
    prefix.push(T::zero());
    for v in &s {
        let next = prefix.last().unwrap().clone() + v.clone();
        prefix.push(next);
    }
    AutoconvolutionSequence { n: p.n(), s, prefix }
}

fn window_value_unchecked<T: Scalar>(s: &AutoconvolutionSequence<T>, w: WindowIndex) -> T {
    let denom = T::from_count(4 * s.n * w.ell as usize);
    s.band_sum(w.k, w.band_end()) / denom
}

/// `(1/(4n ell)) sum_{m=k}^{k+ell-2} s_m`. Accepts any window of the proof range.
pub fn window_value<T: Scalar>(s: &AutoconvolutionSequence<T>, w: WindowIndex) -> Result<T> {
    w.check(s.n, RangeMode::Proof)?;
    Ok(window_value_unchecked(s, w))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation<T = f64> {
    pub value: T,
    /// Every window whose value ties the max within [`TIE_TOLERANCE`].
    pub argmax: Vec<WindowIndex>,
    pub range_mode: RangeMode,
}

pub fn objective<T: Scalar>(p: &CoefficientProfile<T>, mode: RangeMode) -> Evaluation<T> {
    let s = autoconvolve(p);
    evaluate_sequence(&s, mode)
}

pub fn evaluate_sequence<T: Scalar>(s: &AutoconvolutionSequence<T>, mode: RangeMode) -> Evaluation<T> {
    let windows = window_set(s.n, mode);
    let values: Vec<T> = windows.iter().map(|&w| window_value_unchecked(s, w)).collect();
    let value = max_of(values.iter().cloned()).expect("window set is never empty");
    let argmax = windows
        .iter()
        .zip(&values)
        .filter(|(_, v)| v.close_rel(&value, TIE_TOLERANCE))
        .map(|(w, _)| *w)
        .collect();
    Evaluation {
        value,
        argmax,
        range_mode: mode,
    }
}

/// Same contract as [`objective`], computed as literal pair loops per window. O(n^4); a test oracle.
pub fn objective_bruteforce<T: Scalar>(p: &CoefficientProfile<T>, mode: RangeMode) -> T {
    let n = p.n() as i64;
    let mut best: Option<T> = None;
    for w in window_set(p.n(), mode) {
        let mut acc = T::zero();
        for i in -n..n {
            for j in -n..n {
                let m = i + j;
                if m >= w.k && m <= w.k + w.ell - 2 {
                    acc = acc + p.get(i).clone() * p.get(j).clone();
                }
            }
        }
        let v = acc / T::from_count((4 * n * w.ell) as usize);
        best = Some(match best {
            Some(b) if b >= v => b,
            _ => v,
        });
    }
    best.expect("window set is never empty")
}

/// `sup_x (f * f)(x)` for the step function `f = sum_j a_j 1_{I_j}` of a normalized profile.
///
/// `f * f` is piecewise linear with nodes at `x = (m+1)/(4n)` carrying the
/// values `s_m/(4n)`, so the sup is the largest node value.
pub fn step_sup<T: Scalar>(p: &CoefficientProfile<T>) -> Result<T> {
    if !p.is_normalized() {
        return Err(Error::Domain("step_sup requires a normalized profile".into()));
    }
    let s = autoconvolve(p);
    let peak = max_of(s.values().iter().cloned()).expect("nonempty");
    Ok(peak / T::from_count(4 * p.n()))
}

/// One node of the piecewise-linear autoconvolution of a step function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepNode {
    pub x: f64,
    pub value: f64,
}

/// Nodes of `f * f` from `x = -1/2` to `x = 1/2`, including the zero endpoints.
pub fn step_nodes(p: &CoefficientProfile<f64>) -> Result<Vec<StepNode>> {
    if !p.is_normalized() {
        return Err(Error::Domain("step function requires a normalized profile".into()));
    }
    let n = p.n() as i64;
    let width = 4.0 * n as f64;
    let s = autoconvolve(p);
    let mut nodes = vec![StepNode { x: -0.5, value: 0.0 }];
    for m in -2 * n..=2 * n - 2 {
        nodes.push(StepNode {
            x: (m + 1) as f64 / width,
            value: s.at(m) / width,
        });
    }
    nodes.push(StepNode { x: 0.5, value: 0.0 });
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::make_profile;
    use num_rational::BigRational;

    fn prof(n: usize, a: &[f64]) -> CoefficientProfile {
        make_profile(n, a.to_vec(), false).unwrap()
    }

    #[test]
    fn autoconvolution_by_hand() {
        assert_eq!(autoconvolve(&prof(1, &[2.0, 2.0])).values(), &[4.0, 8.0, 4.0]);
        assert_eq!(autoconvolve(&prof(1, &[0.0, 4.0])).values(), &[0.0, 0.0, 16.0]);
    }

    #[test]
    fn autoconvolution_against_pair_loop() {
        let p = prof(2, &[2.0, 2.0, 2.0, 2.0]);
        let mut brute = vec![0.0; 7];
        for i in 0..4 {
            for j in 0..4 {
                brute[i + j] += p.coeffs()[i] * p.coeffs()[j];
            }
        }
        assert_eq!(brute, vec![4.0, 8.0, 12.0, 16.0, 12.0, 8.0, 4.0]);
        assert_eq!(autoconvolve(&p).values(), brute.as_slice());
        assert_eq!(autoconvolve(&p).at(-4), 4.0);
        assert_eq!(autoconvolve(&p).at(2), 4.0);
    }

    #[test]
    fn window_values() {
        let s = autoconvolve(&prof(1, &[2.0, 2.0]));
        assert_eq!(window_value(&s, WindowIndex::new(-1, 2)).unwrap(), 1.0);
        let s = autoconvolve(&prof(2, &[2.0, 2.0, 2.0, 2.0]));
        assert_eq!(window_value(&s, WindowIndex::new(-2, 4)).unwrap(), 1.25);
        let s = autoconvolve(&prof(1, &[0.0, 4.0]));
        assert_eq!(window_value(&s, WindowIndex::new(0, 2)).unwrap(), 2.0);
    }

    #[test]
    fn out_of_range_window_is_rejected() {
        let s = autoconvolve(&prof(1, &[2.0, 2.0]));
        assert!(matches!(window_value(&s, WindowIndex::new(-3, 2)), Err(Error::Range { .. })));
        assert!(matches!(window_value(&s, WindowIndex::new(0, 5)), Err(Error::Range { .. })));
        assert!(matches!(window_value(&s, WindowIndex::new(0, 1)), Err(Error::Range { .. })));
    }

    #[test]
    fn objective_n1_flat_profile() {
        let p = prof(1, &[2.0, 2.0]);
        let s = autoconvolve(&p);
        let vals: Vec<f64> = window_set(1, RangeMode::Proof)
            .into_iter()
            .map(|w| window_value(&s, w).unwrap())
            .collect();
        assert_eq!(vals, vec![0.5, 1.0, 0.5, 1.0, 1.0, 1.0]);
        let e = objective(&p, RangeMode::Proof);
        assert_eq!(e.value, 1.0);
        assert!(e.argmax.contains(&WindowIndex::new(-2, 4)));
        assert_eq!(e.argmax.len(), 4);
    }

    #[test]
    fn objective_n1_single_atom_depends_on_mode() {
        let p = prof(1, &[0.0, 4.0]);
        assert_eq!(objective(&p, RangeMode::Theorem).value, 0.0);
        assert_eq!(objective(&p, RangeMode::Proof).value, 2.0);
    }

    #[test]
    fn objective_n2_flat_profile() {
        let p = prof(2, &[2.0; 4]);
        let e = objective(&p, RangeMode::Proof);
        assert_eq!(e.value, 1.25);
        assert_eq!(e.argmax, vec![WindowIndex::new(-2, 4)]);
        assert_eq!(objective_bruteforce(&p, RangeMode::Proof), 1.25);
        assert_eq!(objective_bruteforce(&prof(1, &[2.0, 2.0]), RangeMode::Proof), 1.0);
    }

    #[test]
    fn step_sup_examples() {
        assert_eq!(step_sup(&prof(1, &[2.0, 2.0])).unwrap(), 2.0);
        assert_eq!(step_sup(&prof(1, &[0.0, 4.0])).unwrap(), 4.0);
        let raw = CoefficientProfile::unnormalized(1, vec![1.0, 1.0]).unwrap();
        assert!(matches!(step_sup(&raw), Err(Error::Domain(_))));
    }

    #[test]
    fn step_nodes_trace_the_tent() {
        let nodes = step_nodes(&prof(1, &[2.0, 2.0])).unwrap();
        let xs: Vec<f64> = nodes.iter().map(|n| n.x).collect();
        let vs: Vec<f64> = nodes.iter().map(|n| n.value).collect();
        assert_eq!(xs, vec![-0.5, -0.25, 0.0, 0.25, 0.5]);
        assert_eq!(vs, vec![0.0, 1.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn rational_objective_is_exact() {
        let r = |x: i64| BigRational::from_integer(x.into());
        let p = make_profile(2, vec![r(1), r(3), r(0), r(4)], false).unwrap();
        let e = objective(&p, RangeMode::Proof);
        assert_eq!(e.value, objective_bruteforce(&p, RangeMode::Proof));
        let s = autoconvolve(&p);
        assert_eq!(s.total(), r(64));
    }
}
