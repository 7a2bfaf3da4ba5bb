//! Certified lower bounds on `a_n`.
//!
//! Both methods enumerate every lattice point of a mesh and take the exact
//! minimum of the objective over them. `global-lipschitz` then subtracts the
//! Lipschitz constant times the covering radius. `cell-quadratic` instead
//! bounds the objective from below on each simplex of a triangulation whose
//! vertices are lattice points (see [`cells`]), which loses only `O(h^2)`.
//!
//! Work is split into lexicographic chunks of the lattice. Chunks run in
//! parallel and their partial results are merged with an exact, associative
//! minimum whose ties go to the lexicographically smallest point, so the
//! certificate does not depend on the thread count or on checkpoint/resume
//! boundaries.

mod cells;
mod game;

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ceil_f64, floor_f64, ExactRational};
use crate::lattice::{covering_radius_exact, enumerate_compositions, ChunkCursor, IntegerWindows, MeshSpec};
use crate::window::RangeMode;

pub use cells::MAX_CELL_N;
use cells::{best_window, evaluate_cell, CellGeometry, CellScratch, Frac};
pub use game::maximin_weights;

pub const CERTIFICATE_SCHEMA_VERSION: u32 = 1;
pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// Chunks merged between checkpoint writes.
pub const DEFAULT_BATCH_CHUNKS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GlobalLipschitz,
    CellQuadratic,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::GlobalLipschitz => "global-lipschitz",
            Method::CellQuadratic => "cell-quadratic",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global-lipschitz" => Ok(Method::GlobalLipschitz),
            "cell-quadratic" => Ok(Method::CellQuadratic),
            other => Err(Error::Domain(format!("unknown certification method {other:?}"))),
        }
    }
}

/// l1-Lipschitz constant of the objective on `A_n`.
///
/// `dQ_w/da_q = (2/(4n ell)) * sum of at most ell-1 coefficients <= 2/ell <= 1`.
pub fn lipschitz_constant(_n: usize) -> f64 {
    1.0
}

/// A proof that `a_n >= certified_bound` for the given range mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub n: usize,
    pub m: u64,
    pub range_mode: RangeMode,
    pub method: Method,
    /// Exact minimum of the objective over the lattice.
    pub lattice_min: ExactRational,
    /// Upper bound on how far the objective can dip below `lattice_min` off the lattice (rounded up).
    pub error_term: f64,
    /// Largest `f64` not above `certified_bound_exact`.
    pub certified_bound: f64,
    pub certified_bound_exact: ExactRational,
    /// Lattice point attaining `lattice_min` (lexicographically first).
    pub argmin_counts: Vec<u64>,
    /// Base point of the cell with the weakest bound (cell method only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weakest_cell: Option<Vec<u64>>,
    pub points_evaluated: u64,
    /// Wall time; absent unless the caller records it, so certificate files stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_s: Option<f64>,
}

impl Certificate {
    pub fn mesh(&self) -> Result<MeshSpec> {
        MeshSpec::new(self.n, self.m)
    }

    pub fn certified_ratio(&self) -> Option<Ratio<i128>> {
        self.certified_bound_exact.to_ratio()
    }

    pub fn lattice_min_ratio(&self) -> Option<Ratio<i128>> {
        self.lattice_min.to_ratio()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Lexicographically-first minimizer carried through the reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Best {
    pub value: ExactRational,
    pub counts: Vec<u64>,
}

impl Best {
    fn ratio(&self) -> Ratio<i128> {
        self.value.to_ratio().expect("stored values have nonzero denominators")
    }

    fn better_than(&self, other: &Best) -> bool {
        match self.ratio().cmp(&other.ratio()) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.counts < other.counts,
        }
    }
}

fn merge_best(slot: &mut Option<Best>, cand: Option<Best>) {
    if let Some(c) = cand {
        if slot.as_ref().is_none_or(|s| c.better_than(s)) {
            *slot = Some(c);
        }
    }
}

/// Running result of a (possibly partial) enumeration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReductionState {
    pub lattice_min: Option<Best>,
    pub cell_bound: Option<Best>,
    pub points_evaluated: u64,
}

impl ReductionState {
    fn merge(&mut self, other: ReductionState) {
        merge_best(&mut self.lattice_min, other.lattice_min);
        merge_best(&mut self.cell_bound, other.cell_bound);
        self.points_evaluated += other.points_evaluated;
    }
}

/// Resumable progress of a certification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub producer_version: String,
    pub n: usize,
    pub m: u64,
    pub range_mode: RangeMode,
    pub method: Method,
    /// Encoded prefix of the next chunk to process; `None` once every chunk is done.
    pub next_chunk: Option<String>,
    pub chunks_done: u64,
    pub state: ReductionState,
    /// Present once the run has completed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        write_atomic(path, s.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("unreadable checkpoint {}: {e}", path.display())))
    }

    pub fn job(&self) -> Result<CertifyJob> {
        let mesh = MeshSpec::new(self.n, self.m).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(CertifyJob {
            mesh,
            mode: self.range_mode,
            method: self.method,
        })
    }

    fn validate_for(&self, job: &CertifyJob) -> Result<Option<ChunkCursor>> {
        if self.schema_version != CHECKPOINT_SCHEMA_VERSION || self.producer_version != env!("CARGO_PKG_VERSION") {
            return Err(Error::Checkpoint(format!(
                "checkpoint written by version {} (schema {}), this is {} (schema {})",
                self.producer_version,
                self.schema_version,
                env!("CARGO_PKG_VERSION"),
                CHECKPOINT_SCHEMA_VERSION
            )));
        }
        if self.n != job.mesh.n || self.m != job.mesh.m || self.range_mode != job.mode || self.method != job.method {
            return Err(Error::Checkpoint(format!(
                "checkpoint is for n={} m={} {} {}, requested n={} m={} {} {}",
                self.n, self.m, self.range_mode, self.method, job.mesh.n, job.mesh.m, job.mode, job.method
            )));
        }
        match &self.next_chunk {
            None => Ok(None),
            Some(text) => {
                let cursor: ChunkCursor = text.parse().map_err(|e: Error| Error::Checkpoint(e.to_string()))?;
                cursor.validate(&job.mesh).map_err(|e| Error::Checkpoint(e.to_string()))?;
                Ok(Some(cursor))
            }
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp: PathBuf = path.to_path_buf();
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    tmp.set_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertifyJob {
    pub mesh: MeshSpec,
    pub mode: RangeMode,
    pub method: Method,
}

impl CertifyJob {
    pub fn new(mesh: MeshSpec, mode: RangeMode, method: Method) -> Result<Self> {
        if method == Method::CellQuadratic && mesh.n > MAX_CELL_N {
            return Err(Error::Domain(format!(
                "cell-quadratic certification supports n <= {MAX_CELL_N}, got n = {}",
                mesh.n
            )));
        }
        Ok(CertifyJob { mesh, mode, method })
    }

    fn fresh_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            producer_version: env!("CARGO_PKG_VERSION").to_string(),
            n: self.mesh.n,
            m: self.mesh.m,
            range_mode: self.mode,
            method: self.method,
            next_chunk: Some(ChunkCursor::first(&self.mesh).to_string()),
            chunks_done: 0,
            state: ReductionState::default(),
            certificate: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Written after every batch, and once more with the final certificate.
    pub checkpoint_path: Option<PathBuf>,
    /// Stop (with a checkpoint) after this many chunks in this invocation.
    pub stop_after_chunks: Option<u64>,
    /// Chunks per batch; zero means [`DEFAULT_BATCH_CHUNKS`].
    pub batch_chunks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertifyOutcome {
    Complete(Certificate),
    Interrupted(Box<Checkpoint>),
}

impl CertifyOutcome {
    pub fn certificate(self) -> Option<Certificate> {
        match self {
            CertifyOutcome::Complete(c) => Some(c),
            CertifyOutcome::Interrupted(_) => None,
        }
    }
}

struct Worker {
    job: CertifyJob,
    windows: IntegerWindows,
    numer: Vec<u64>,
    cells: Option<(std::sync::Arc<CellGeometry>, CellScratch)>,
}

impl Worker {
    fn new(job: CertifyJob, geom: Option<&std::sync::Arc<CellGeometry>>) -> Self {
        let windows = IntegerWindows::new(job.mesh.n, job.mode);
        let numer = vec![0; windows.len()];
        let ells: Vec<i128> = windows.windows.iter().map(|w| w.ell as i128).collect();
        debug_assert!(!ells.is_empty());
        Worker {
            job,
            windows,
            numer,
            cells: geom.map(|g| (g.clone(), CellScratch::new(g, job.mode))),
        }
    }

    fn run_chunk(&mut self, chunk: &ChunkCursor, prune_seed: Option<Frac>) -> Result<ReductionState> {
        let mesh = self.job.mesh;
        let four_n = 4 * mesh.n as i128;
        let m2 = (mesh.m as i128) * (mesh.m as i128);
        let ells: Vec<i128> = self.windows.windows.iter().map(|w| w.ell as i128).collect();
        let mut points = 0u64;
        let mut lat: Option<((u64, i128), Vec<u64>)> = None;
        let mut cell: Option<(Frac, Vec<u64>)> = None;
        let mut prune = prune_seed;

        let mut it = enumerate_compositions(&mesh, Some(chunk))?;
        while let Some(counts) = it.advance() {
            points += 1;
            let (nb, lb, bound) = match &mut self.cells {
                Some((geom, scratch)) => {
                    let out = evaluate_cell(geom, scratch, counts, mesh.m, &mut prune);
                    (out.base_n, out.base_ell, out.bound)
                }
                None => {
                    self.windows.numerators(counts, &mut self.numer);
                    let (nb, lb) = best_window(&self.numer, &ells);
                    (nb, lb, None)
                }
            };
            // lexicographic enumeration: strict improvement keeps the first minimizer
            if lat.as_ref().is_none_or(|((n0, l0), _)| (nb as i128) * l0 < (*n0 as i128) * lb) {
                lat = Some(((nb, lb), counts.to_vec()));
            }
            if let Some(b) = bound {
                if cell.as_ref().is_none_or(|(c, _)| b.cmp(c) == Ordering::Less) {
                    cell = Some((b, counts.to_vec()));
                }
            }
        }

        Ok(ReductionState {
            lattice_min: lat.map(|((nb, lb), counts)| Best {
                value: Ratio::new(four_n * nb as i128, lb * m2).into(),
                counts,
            }),
            cell_bound: cell.map(|(f, counts)| Best {
                value: frac_to_ratio(f, m2).into(),
                counts,
            }),
            points_evaluated: points,
        })
    }
}

fn frac_to_ratio(f: Frac, m2: i128) -> Ratio<i128> {
    // reduce num/den first so den * m^2 stays small
    let r = Ratio::new(f.num, f.den);
    Ratio::new(*r.numer(), r.denom().checked_mul(m2).expect("cell bound denominator fits in i128"))
}

/// Pruning seed from a stored bound. The seed must be a bound actually
/// attained by some simplex, so on overflow there is no seed at all.
fn ratio_to_frac(r: Ratio<i128>, m2: i128) -> Option<Frac> {
    r.numer().checked_mul(m2).map(|num| Frac { num, den: *r.denom() })
}

fn finish(job: &CertifyJob, state: &ReductionState) -> Result<Certificate> {
    let mesh = job.mesh;
    let lat = state
        .lattice_min
        .as_ref()
        .ok_or_else(|| Error::Checkpoint("run finished without evaluating any lattice point".into()))?;
    let lattice_min = lat.ratio();
    let (certified, weakest) = match job.method {
        Method::GlobalLipschitz => {
            let radius = covering_radius_exact(&mesh);
            let lip = Ratio::from_integer(lipschitz_constant(mesh.n) as i128);
            (lattice_min - lip * radius, None)
        }
        Method::CellQuadratic => {
            let cell = state
                .cell_bound
                .as_ref()
                .ok_or_else(|| Error::Checkpoint("cell run finished without any cell bound".into()))?;
            // the cell bound never exceeds the lattice minimum in exact arithmetic
            (cell.ratio().min(lattice_min), Some(cell.counts.clone()))
        }
    };
    let error = lattice_min - certified;
    Ok(Certificate {
        schema_version: CERTIFICATE_SCHEMA_VERSION,
        n: mesh.n,
        m: mesh.m,
        range_mode: job.mode,
        method: job.method,
        lattice_min: lattice_min.into(),
        error_term: ceil_f64(&error),
        certified_bound: floor_f64(&certified),
        certified_bound_exact: certified.into(),
        argmin_counts: lat.counts.clone(),
        weakest_cell: weakest,
        points_evaluated: state.points_evaluated,
        elapsed_s: None,
    })
}

/// Runs (or continues) a certification.
///
/// Returns `Interrupted` with a checkpoint when `stop_after_chunks` ends the
/// invocation early; no partial certificate is ever produced.
pub fn run(job: CertifyJob, opts: &RunOptions, start: Option<Checkpoint>) -> Result<CertifyOutcome> {
    let mut ckpt = match start {
        Some(c) => {
            c.validate_for(&job)?;
            if let Some(cert) = &c.certificate {
                return Ok(CertifyOutcome::Complete(cert.clone()));
            }
            c
        }
        None => job.fresh_checkpoint(),
    };
    let mut cursor = ckpt.validate_for(&job)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    let geom = (job.method == Method::CellQuadratic)
        .then(|| std::sync::Arc::new(CellGeometry::new(job.mesh.n, job.mode)));
    let batch = if opts.batch_chunks == 0 { DEFAULT_BATCH_CHUNKS } else { opts.batch_chunks };
    let m2 = (job.mesh.m as i128).pow(2);
    let mut budget = opts.stop_after_chunks;

    while let Some(first) = cursor.take() {
        let mut take = batch as u64;
        if let Some(b) = budget {
            if b == 0 {
                cursor = Some(first);
                break;
            }
            take = take.min(b);
        }
        let mut chunks = vec![first];
        while (chunks.len() as u64) < take {
            match chunks.last().unwrap().successor(&job.mesh) {
                Some(next) => chunks.push(next),
                None => break,
            }
        }
        cursor = chunks.last().unwrap().successor(&job.mesh);

        let seed = ckpt.state.cell_bound.as_ref().and_then(|b| ratio_to_frac(b.ratio(), m2));
        let parts: Vec<Result<ReductionState>> = pool.install(|| {
            chunks
                .par_iter()
                .map_init(|| Worker::new(job, geom.as_ref()), |w, c| w.run_chunk(c, seed))
                .collect()
        });
        for part in parts {
            ckpt.state.merge(part?);
        }
        ckpt.chunks_done += chunks.len() as u64;
        ckpt.next_chunk = cursor.as_ref().map(|c| c.to_string());
        if let Some(b) = budget.as_mut() {
            *b -= chunks.len() as u64;
        }
        if let Some(path) = &opts.checkpoint_path {
            ckpt.save(path)?;
        }
    }

    if cursor.is_some() {
        return Ok(CertifyOutcome::Interrupted(Box::new(ckpt)));
    }
    let cert = finish(&job, &ckpt.state)?;
    ckpt.certificate = Some(cert.clone());
    if let Some(path) = &opts.checkpoint_path {
        ckpt.save(path)?;
    }
    Ok(CertifyOutcome::Complete(cert))
}

/// Finishes an interrupted run. A completed checkpoint returns its stored certificate.
pub fn resume(checkpoint: Checkpoint, opts: &RunOptions) -> Result<Certificate> {
    let job = checkpoint.job()?;
    let opts = RunOptions {
        stop_after_chunks: None,
        ..opts.clone()
    };
    match run(job, &opts, Some(checkpoint))? {
        CertifyOutcome::Complete(c) => Ok(c),
        CertifyOutcome::Interrupted(_) => unreachable!("no chunk budget on resume"),
    }
}

fn run_to_completion(mesh: MeshSpec, mode: RangeMode, method: Method) -> Result<Certificate> {
    let job = CertifyJob::new(mesh, mode, method)?;
    Ok(run(job, &RunOptions::default(), None)?
        .certificate()
        .expect("unbounded run completes"))
}

/// Lattice minimum minus `L * covering radius`.
pub fn certify_global(mesh: MeshSpec, mode: RangeMode) -> Result<Certificate> {
    run_to_completion(mesh, mode, Method::GlobalLipschitz)
}

/// Minimum over the triangulation's simplices of the second-order simplex bound.
pub fn certify_cells(mesh: MeshSpec, mode: RangeMode) -> Result<Certificate> {
    run_to_completion(mesh, mode, Method::CellQuadratic)
}

/// `sqrt(2 / bound)`, the Sidon-constant bound implied by a positive certified bound on `c`.
pub fn implied_sigma_upper(cert: &Certificate) -> Option<f64> {
    let b = cert.certified_ratio()?;
    if b <= Ratio::from_integer(0) {
        return None;
    }
    // round sigma up: use a lower bound on c
    let c = floor_f64(&b);
    (c > 0.0).then(|| (2.0 / c).sqrt().next_up())
}

/// `lattice_min` as a float, for display.
pub fn lattice_min_f64(cert: &Certificate) -> f64 {
    cert.lattice_min_ratio().and_then(|r| r.to_f64()).unwrap_or(f64::NAN)
}
