//! Second-order cell bounds over the Freudenthal triangulation of the lattice.
//!
//! In cumulative coordinates `y_p = c_0 + ... + c_{p-1}` the lattice simplex
//! becomes `0 <= y_1 <= ... <= y_{2n-1} <= m`, which is tiled exactly by the
//! unit Kuhn simplices of the integer grid. A simplex is a base lattice point
//! `c` plus a permutation `pi` of the `2n-1` moves
//! `delta_p = e_p - e_{p+1}`; its vertices are `c`, `c + delta_{pi(1)}`, ...
//! The cell of a lattice point is the union of the simplices based at it.
//!
//! On a simplex with vertices `v_r` and barycentric weights `lambda`, any
//! quadratic `Q(x) = x^T M x` satisfies
//! `Q(x) = sum_r lambda_r Q(v_r) - sum_{r<s} lambda_r lambda_s D_rs` with
//! `D_rs = (v_r - v_s)^T M (v_r - v_s)`, and `sum_{r<s} lambda_r lambda_s <= (2n-1)/(4n)`.
//! Mixing windows with weights `mu` therefore gives the exact lower bound
//! `min_r sum_w mu_w Q_w(v_r) - (2n-1)/(4n) * max(0, max_{r<s} sum_w mu_w D^w_rs)`
//! for the objective on the whole simplex. All quantities are integers
//! after scaling, so the bound is an exact rational.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;

use super::game::maximin_weights;
use crate::lattice::IntegerWindows;
use crate::window::{RangeMode, WindowIndex};

/// Largest `n` for which the cell method enumerates all `(2n-1)!` simplex orders.
pub const MAX_CELL_N: usize = 4;

/// Resolution of the quantized window weights.
const WEIGHT_SCALE: f64 = (1u64 << 20) as f64;

/// `num / den` with `den > 0`; the true value is this times `1/m^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Frac {
    pub num: i128,
    pub den: i128,
}

impl Frac {
    pub fn cmp(&self, other: &Frac) -> Ordering {
        match (self.num.checked_mul(other.den), other.num.checked_mul(self.den)) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => (BigInt::from(self.num) * BigInt::from(other.den))
                .cmp(&(BigInt::from(other.num) * BigInt::from(self.den))),
        }
    }

    fn max(self, other: Frac) -> Frac {
        if other.cmp(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }
}

pub(crate) struct CellGeometry {
    pub n: usize,
    dim: usize,
    windows: usize,
    ells: Vec<i128>,
    lcm_over_ell: Vec<i128>,
    lcm: i128,
    /// Per permutation: the chain of corner masks `r = 0..=dim`.
    chains: Vec<Vec<u32>>,
    /// Per permutation: distinct edge masks `chain[s] ^ chain[r]`, `r < s`.
    pair_masks: Vec<Vec<u32>>,
    /// `E_w(S) = u_S^T B_w u_S` at `[mask * windows + w]`.
    edge_energy: Vec<i64>,
    /// `max(0, max over the permutation's edges of E_w)` at `[perm * windows + w]`.
    edge_energy_pos: Vec<i64>,
    /// Per permutation: largest l1 length of an edge, in quanta.
    edge_l1: Vec<i64>,
    /// Corner displacement `u_S` for every mask.
    moves: Vec<Vec<i64>>,
}

fn permutations(dim: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(dim), &mut vec![false; dim], &mut out);
    out
}

impl CellGeometry {
    pub fn new(n: usize, mode: RangeMode) -> Self {
        assert!((1..=MAX_CELL_N).contains(&n));
        let parts = 2 * n;
        let dim = parts - 1;
        let iw = IntegerWindows::new(n, mode);
        let windows: Vec<WindowIndex> = iw.windows.clone();
        let wn = windows.len();
        let ells: Vec<i128> = windows.iter().map(|w| w.ell as i128).collect();
        let lcm = ells.iter().fold(1i128, |acc, &l| acc.lcm(&l));
        let lcm_over_ell = ells.iter().map(|&l| lcm / l).collect();

        let n_masks = 1usize << dim;
        let moves: Vec<Vec<i64>> = (0..n_masks)
            .map(|mask| {
                (0..parts)
                    .map(|q| {
                        let plus = q < dim && mask >> q & 1 == 1;
                        let minus = q >= 1 && mask >> (q - 1) & 1 == 1;
                        plus as i64 - minus as i64
                    })
                    .collect()
            })
            .collect();

        let off = 2 * n as i64;
        let mut edge_energy = vec![0i64; n_masks * wn];
        let mut conv = vec![0i64; 2 * parts - 1];
        for (mask, u) in moves.iter().enumerate() {
            conv.iter_mut().for_each(|x| *x = 0);
            for (i, &ui) in u.iter().enumerate() {
                for (j, &uj) in u.iter().enumerate() {
                    conv[i + j] += ui * uj;
                }
            }
            for (w, win) in windows.iter().enumerate() {
                let lo = (win.k + off) as usize;
                let hi = (win.band_end() + off) as usize;
                edge_energy[mask * wn + w] = conv[lo..=hi].iter().sum();
            }
        }

        let perms = permutations(dim);
        let mut chains = Vec::with_capacity(perms.len());
        let mut pair_masks = Vec::with_capacity(perms.len());
        let mut edge_energy_pos = vec![0i64; perms.len() * wn];
        let mut edge_l1 = Vec::with_capacity(perms.len());
        for (pi, perm) in perms.iter().enumerate() {
            let mut chain = vec![0u32; dim + 1];
            for r in 1..=dim {
                chain[r] = chain[r - 1] | 1 << perm[r - 1];
            }
            let mut pairs: Vec<u32> = Vec::new();
            for r in 0..=dim {
                for s in r + 1..=dim {
                    let e = chain[s] ^ chain[r];
                    if !pairs.contains(&e) {
                        pairs.push(e);
                    }
                }
            }
            for w in 0..wn {
                let worst = pairs.iter().map(|&e| edge_energy[e as usize * wn + w]).max().unwrap_or(0);
                edge_energy_pos[pi * wn + w] = worst.max(0);
            }
            edge_l1.push(
                pairs
                    .iter()
                    .map(|&e| moves[e as usize].iter().map(|x| x.abs()).sum::<i64>())
                    .max()
                    .unwrap_or(0),
            );
            chains.push(chain);
            pair_masks.push(pairs);
        }

        CellGeometry {
            n,
            dim,
            windows: wn,
            ells,
            lcm_over_ell,
            lcm,
            chains,
            pair_masks,
            edge_energy,
            edge_energy_pos,
            edge_l1,
            moves,
        }
    }

    #[cfg(test)]
    pub fn simplex_orders(&self) -> usize {
        self.chains.len()
    }

    #[cfg(test)]
    pub fn vertices(&self, base: &[u64], order: usize) -> Option<Vec<Vec<u64>>> {
        self.chains[order]
            .iter()
            .map(|&mask| corner(base, &self.moves[mask as usize]))
            .collect()
    }
}

#[cfg(test)]
fn corner(base: &[u64], u: &[i64]) -> Option<Vec<u64>> {
    base.iter()
        .zip(u)
        .map(|(&c, &d)| {
            let v = c as i64 + d;
            (v >= 0).then_some(v as u64)
        })
        .collect()
}

/// Per-thread buffers for evaluating cells.
pub(crate) struct CellScratch {
    iw: IntegerWindows,
    valid: Vec<bool>,
    numer: Vec<u64>,
    /// Best window of each corner as `(N, ell)`.
    best: Vec<(u64, i128)>,
    counts: Vec<u64>,
    payoff: Vec<f64>,
}

impl CellScratch {
    pub fn new(geom: &CellGeometry, mode: RangeMode) -> Self {
        let corners = 1usize << geom.dim;
        CellScratch {
            iw: IntegerWindows::new(geom.n, mode),
            valid: vec![false; corners],
            numer: vec![0; corners * geom.windows],
            best: vec![(0, 1); corners],
            counts: vec![0; 2 * geom.n],
            payoff: vec![0.0; (geom.dim + 1) * geom.windows],
        }
    }
}

/// Exact objective data of the base point plus the weakest simplex bound of its cell.
pub(crate) struct CellOutcome {
    /// The base point's objective is `4n * base_n / (base_ell * m^2)`.
    pub base_n: u64,
    pub base_ell: i128,
    /// Lowest simplex bound in the cell, if any simplex survived pruning.
    pub bound: Option<Frac>,
}

/// Window with the largest `N / ell`; ties keep the earlier window.
pub(crate) fn best_window(numer: &[u64], ells: &[i128]) -> (u64, i128) {
    let mut best = (numer[0], ells[0]);
    for (&nw, &l) in numer.iter().zip(ells).skip(1) {
        if (nw as i128) * best.1 > (best.0 as i128) * l {
            best = (nw, l);
        }
    }
    best
}

/// Evaluates the cell based at `base`.
///
/// Simplices whose cheap bound already exceeds `prune` cannot lower the
/// running minimum and skip the weight optimization; `prune` is lowered as
/// better (smaller) bounds are found.
pub(crate) fn evaluate_cell(
    geom: &CellGeometry,
    scratch: &mut CellScratch,
    base: &[u64],
    m: u64,
    prune: &mut Option<Frac>,
) -> CellOutcome {
    let wn = geom.windows;
    let four_n = 4 * geom.n as i128;
    let curv = 2 * geom.n as i128 - 1;

    for mask in 0..scratch.valid.len() {
        let u = &geom.moves[mask];
        let mut ok = true;
        for ((slot, &c), &d) in scratch.counts.iter_mut().zip(base).zip(u) {
            let v = c as i64 + d;
            if v < 0 {
                ok = false;
                break;
            }
            *slot = v as u64;
        }
        scratch.valid[mask] = ok;
        if ok {
            let out = &mut scratch.numer[mask * wn..(mask + 1) * wn];
            scratch.iw.numerators(&scratch.counts, out);
            scratch.best[mask] = best_window(out, &geom.ells);
        }
    }
    let (base_n, base_ell) = scratch.best[0];
    let mut cell_min: Option<Frac> = None;

    for (order, chain) in geom.chains.iter().enumerate() {
        if !chain.iter().all(|&mask| scratch.valid[mask as usize]) {
            continue;
        }
        let epos = &geom.edge_energy_pos[order * wn..(order + 1) * wn];

        // best single window
        let mut cheap: Option<Frac> = None;
        for (w, &e) in epos.iter().enumerate() {
            let min_n = chain.iter().map(|&mask| scratch.numer[mask as usize * wn + w]).min().unwrap();
            let f = Frac {
                num: four_n * min_n as i128 - curv * e as i128,
                den: geom.ells[w],
            };
            cheap = Some(match cheap {
                None => f,
                Some(c) => c.max(f),
            });
        }
        // first-order fallback: F is 1-Lipschitz in l1 on A_n
        let reach = geom.edge_l1[order] as i128 * m as i128;
        for &mask in chain {
            let (nb, lb) = scratch.best[mask as usize];
            let f = Frac {
                num: four_n * (nb as i128 - reach * lb),
                den: lb,
            };
            cheap = Some(cheap.unwrap().max(f));
        }
        let mut value = cheap.unwrap();

        let skip = matches!(prune, Some(p) if value.cmp(p) == Ordering::Greater);
        if !skip {
            if let Some(mixed) = mixed_bound(geom, scratch, chain, epos, order) {
                value = value.max(mixed);
            }
            if prune.is_none_or(|p| value.cmp(&p) == Ordering::Less) {
                *prune = Some(value);
            }
            if cell_min.is_none_or(|c| value.cmp(&c) == Ordering::Less) {
                cell_min = Some(value);
            }
        }
    }

    CellOutcome {
        base_n,
        base_ell,
        bound: cell_min,
    }
}

/// Exact bound for window weights chosen by the matrix game on vertex values.
fn mixed_bound(
    geom: &CellGeometry,
    scratch: &mut CellScratch,
    chain: &[u32],
    epos: &[i64],
    order: usize,
) -> Option<Frac> {
    let wn = geom.windows;
    let four_n = 4 * geom.n as i128;
    let curv = 2 * geom.n as i128 - 1;
    let rows = chain.len();
    for (r, &mask) in chain.iter().enumerate() {
        for (w, &e) in epos.iter().enumerate() {
            let nv = scratch.numer[mask as usize * wn + w] as i128;
            scratch.payoff[r * wn + w] = (four_n * nv - curv * e as i128) as f64 / geom.ells[w] as f64;
        }
    }
    let mu = maximin_weights(&scratch.payoff[..rows * wn], rows, wn)?;
    let support: Vec<(usize, i128)> = mu
        .iter()
        .enumerate()
        .map(|(w, &x)| (w, (x * WEIGHT_SCALE).round() as i128))
        .filter(|&(_, q)| q > 0)
        .collect();
    let total: i128 = support.iter().map(|&(_, q)| q).sum();
    if total == 0 {
        return None;
    }
    let vertex_min = chain
        .iter()
        .map(|&mask| {
            support
                .iter()
                .map(|&(w, q)| q * geom.lcm_over_ell[w] * four_n * scratch.numer[mask as usize * wn + w] as i128)
                .sum::<i128>()
        })
        .min()
        .unwrap();
    let dip = geom.pair_masks[order]
        .iter()
        .map(|&e| {
            support
                .iter()
                .map(|&(w, q)| q * geom.lcm_over_ell[w] * geom.edge_energy[e as usize * wn + w] as i128)
                .sum::<i128>()
        })
        .max()
        .unwrap_or(0)
        .max(0);
    Some(Frac {
        num: vertex_min - curv * dip,
        den: total * geom.lcm,
    })
}
