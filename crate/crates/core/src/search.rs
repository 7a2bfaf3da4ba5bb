//! Upper bounds on `a_n` from seeded multistart descent.
//!
//! Each restart draws a uniform point of `A_n` and runs a monotone projected
//! descent on the max of the window quadratics. Restart `i` uses stream `i`
//! of a ChaCha generator keyed by the seed, so results do not depend on how
//! restarts are scheduled across threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{autoconvolve, objective, objective_bruteforce, step_sup};
use crate::profile::{make_profile, project_to_simplex, CoefficientProfile};
use crate::window::{window_set, RangeMode, WindowIndex};

pub const SEARCH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n: usize,
    pub range_mode: RangeMode,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub initial_step: f64,
    /// Factor applied to the step after a rejected move.
    pub step_decay: f64,
    pub min_step: f64,
    /// Restrict every restart to reflection-symmetric profiles.
    pub symmetric: bool,
    /// Relative threshold for a window to count as active.
    pub active_eps: f64,
    /// Worker threads; does not affect results.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl SearchConfig {
    pub fn new(n: usize) -> Self {
        SearchConfig {
            n,
            range_mode: RangeMode::Proof,
            seed: 0,
            restarts: 1000,
            max_iters: 10_000,
            initial_step: 0.5,
            step_decay: 0.5,
            min_step: 1e-9,
            symmetric: false,
            active_eps: 1e-6,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Domain("restarts must be at least 1".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::Domain("initial step must be positive".into()));
        }
        if !(self.step_decay > 0.0 && self.step_decay < 1.0) {
            return Err(Error::Domain("step decay must lie in (0, 1)".into()));
        }
        if self.min_step.is_nan() || self.min_step <= 0.0 || self.min_step > self.initial_step {
            return Err(Error::Domain("min step must be positive and at most the initial step".into()));
        }
        if self.active_eps.is_nan() || self.active_eps < 0.0 {
            return Err(Error::Domain("active threshold must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A uniform draw from `A_n`: normalized standard exponentials (Dirichlet(1, ..., 1)).
pub fn random_profile<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CoefficientProfile {
    loop {
        let raw: Vec<f64> = (0..2 * n).map(|_| rng.sample(Exp1)).collect();
        if let Ok(p) = make_profile(n, raw, true) {
            return p;
        }
    }
}

/// The generator for restart `index` under `seed`.
pub fn restart_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Window values plus the averaged gradient of the near-maximal ones.
struct Descent {
    n: usize,
    windows: Vec<WindowIndex>,
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl Descent {
    fn new(n: usize, mode: RangeMode) -> Self {
        let windows = window_set(n, mode);
        let w = windows.len();
        Descent {
            n,
            windows,
            values: vec![0.0; w],
            prefix: vec![0.0; 2 * n + 1],
        }
    }

    fn value(&mut self, a: &[f64]) -> f64 {
        let p = CoefficientProfile::unnormalized(self.n, a.to_vec()).expect("iterates are nonnegative");
        let s = autoconvolve(&p);
        let four_n = 4.0 * self.n as f64;
        let mut best = f64::NEG_INFINITY;
        for (v, w) in self.values.iter_mut().zip(&self.windows) {
            let sum: f64 = (w.k..=w.band_end()).map(|m| s.at(m)).sum();
            *v = sum / (four_n * w.ell as f64);
            best = best.max(*v);
        }
        best
    }

    /// Averaged gradient of windows within `eps` (relative) of `top`; `value` must have run on `a`.
    fn active_gradient(&mut self, a: &[f64], top: f64, eps: f64) -> Vec<f64> {
        let n = self.n as i64;
        let len = a.len();
        self.prefix[0] = 0.0;
        for (i, x) in a.iter().enumerate() {
            self.prefix[i + 1] = self.prefix[i] + x;
        }
        let mut g = vec![0.0; len];
        let mut count = 0usize;
        let cut = top - eps * top.abs();
        for (w, &v) in self.windows.iter().zip(&self.values) {
            if v < cut {
                continue;
            }
            count += 1;
            let scale = 2.0 / (4.0 * n as f64 * w.ell as f64);
            for (q, gq) in g.iter_mut().enumerate() {
                let i = q as i64 - n;
                // partner indices j with k <= i + j <= k + ell - 2, clipped to -n..n
                let lo = (w.k - i).max(-n);
                let hi = (w.band_end() - i).min(n - 1);
                if lo <= hi {
                    let band = self.prefix[(hi + n + 1) as usize] - self.prefix[(lo + n) as usize];
                    *gq += scale * band;
                }
            }
        }
        if count > 0 {
            g.iter_mut().for_each(|x| *x /= count as f64);
        }
        g
    }
}

/// Outcome of one descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub initial_value: f64,
    pub final_value: f64,
    pub iterations: usize,
    pub accepted_steps: usize,
}

fn symmetrize(v: &mut [f64]) {
    let len = v.len();
    for i in 0..len / 2 {
        let avg = 0.5 * (v[i] + v[len - 1 - i]);
        v[i] = avg;
        v[len - 1 - i] = avg;
    }
}

fn descend(p: &CoefficientProfile, cfg: &SearchConfig, symmetric: bool) -> (CoefficientProfile, RestartSummary) {
    let n = p.n();
    let mut d = Descent::new(n, cfg.range_mode);
    let mut a = p.coeffs().to_vec();
    let mut f = d.value(&a);
    let initial = f;
    let mut step = cfg.initial_step;
    let mut iters = 0;
    let mut accepted = 0;
    while iters < cfg.max_iters && step >= cfg.min_step {
        iters += 1;
        let mut g = d.active_gradient(&a, f, cfg.active_eps);
        if symmetric {
            symmetrize(&mut g);
        }
        let trial: Vec<f64> = a.iter().zip(&g).map(|(x, gx)| x - step * gx).collect();
        let mut cand = project_to_simplex(n, &trial).expect("finite trial point").into_coeffs();
        if symmetric {
            symmetrize(&mut cand);
        }
        let fc = d.value(&cand);
        if fc < f {
            a = cand;
            f = fc;
            accepted += 1;
        } else {
            step *= cfg.step_decay;
            // restore window values of the current iterate
            d.value(&a);
        }
    }
    let out = make_profile(n, a, false).expect("projection keeps the mass");
    (
        out,
        RestartSummary {
            restart: 0,
            initial_value: initial,
            final_value: f,
            iterations: iters,
            accepted_steps: accepted,
        },
    )
}

/// Monotone projected descent with the averaged gradient of the `eps`-active windows.
///
/// A move is kept only if it lowers the objective; otherwise the step is
/// multiplied by `step_decay`. Stops below `min_step` or at `max_iters`.
pub fn local_descent(p: &CoefficientProfile, cfg: &SearchConfig) -> Result<CoefficientProfile> {
    if !p.is_normalized() {
        return Err(Error::Domain("local descent starts from a normalized profile".into()));
    }
    Ok(descend(p, cfg, cfg.symmetric).0)
}

/// Averages `p` with its reflection, then descends inside the symmetric subspace.
pub fn polish_symmetric(p: &CoefficientProfile, cfg: &SearchConfig) -> Result<CoefficientProfile> {
    if !p.is_normalized() {
        return Err(Error::Domain("symmetric polish starts from a normalized profile".into()));
    }
    Ok(descend(&symmetrized(p), cfg, true).0)
}

/// `(p + reflect(p)) / 2`.
pub fn symmetrized(p: &CoefficientProfile) -> CoefficientProfile {
    let mut v = p.coeffs().to_vec();
    symmetrize(&mut v);
    make_profile(p.n(), v, true).expect("symmetrization keeps the mass")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub schema_version: u32,
    pub n: usize,
    pub range_mode: RangeMode,
    pub seed: u64,
    pub restarts: usize,
    pub symmetric: bool,
    /// Objective of `best_profile`, an upper bound on `a_n`.
    pub best_value: f64,
    pub best_profile: Vec<f64>,
    pub best_restart: usize,
    /// `sup f*f` of the best profile's step function, an upper bound on `c`.
    pub step_sup: f64,
    pub best_is_symmetric: bool,
    pub per_restart_best: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectories: Vec<RestartSummary>,
}

impl SearchResult {
    pub fn best(&self) -> Result<CoefficientProfile> {
        make_profile(self.n, self.best_profile.clone(), false)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn trajectories_csv(&self) -> String {
        let mut out = String::from("restart,initial_value,final_value,iterations,accepted_steps\n");
        for t in &self.trajectories {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{},{}\n",
                t.restart, t.initial_value, t.final_value, t.iterations, t.accepted_steps
            ));
        }
        out
    }
}

fn run_restart(cfg: &SearchConfig, index: usize) -> (CoefficientProfile, RestartSummary) {
    let mut rng = restart_rng(cfg.seed, index as u64);
    let start = random_profile(cfg.n, &mut rng);
    let start = if cfg.symmetric { symmetrized(&start) } else { start };
    let (p, mut summary) = descend(&start, cfg, cfg.symmetric);
    summary.restart = index;
    (p, summary)
}

/// Best of `restarts` independent descents. Ties go to the lower restart index.
pub fn multistart(cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<(CoefficientProfile, RestartSummary)> =
        pool.install(|| (0..cfg.restarts).into_par_iter().map(|i| run_restart(cfg, i)).collect());

    let (best_idx, _) = runs
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |(bi, bv), (i, (_, s))| {
            if s.final_value < bv {
                (i, s.final_value)
            } else {
                (bi, bv)
            }
        });
    let best = runs[best_idx].0.clone();
    let eval = objective(&best, cfg.range_mode).value;
    let brute = objective_bruteforce(&best, cfg.range_mode);
    if (eval - brute).abs() > 1e-12 * eval.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "objective {eval} disagrees with pairwise evaluation {brute}"
        )));
    }
    if cfg.range_mode == RangeMode::Proof && eval < 1.0 - 1e-12 {
        return Err(Error::Domain(format!("best value {eval} violates the floor of 1")));
    }
    Ok(SearchResult {
        schema_version: SEARCH_SCHEMA_VERSION,
        n: cfg.n,
        range_mode: cfg.range_mode,
        seed: cfg.seed,
        restarts: cfg.restarts,
        symmetric: cfg.symmetric,
        best_value: eval,
        best_is_symmetric: best.is_symmetric(1e-9),
        step_sup: step_sup(&best)?,
        best_profile: best.into_coeffs(),
        best_restart: best_idx,
        per_restart_best: runs.iter().map(|(_, s)| s.final_value).collect(),
        trajectories: runs.into_iter().map(|(_, s)| s).collect(),
    })
}
