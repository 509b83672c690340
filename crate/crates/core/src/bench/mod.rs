//! Per-phase timing and operation counts for the three schemes.
//!
//! Every configuration runs `trials` independent packets through
//! transform, entry encryption, cloud processing and client decryption.
//! Times are medians over trials; operation counts come from the first
//! trial and are exact.

mod workload;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::crypto::{BgnPublicKey, BgnSecretKey, FhePublicKey, FheSecretKey, PrpKey};
use crate::ops::OpCounts;
use crate::schemes::peks::{PeksClientKeys, PeksPublicKeys};
use crate::schemes::{bgn, fhe, peks, SchemeError, SchemeId};

pub use workload::{Workload, EQUALITY_WIDTH, RANGE_WIDTH};

/// Environment variable naming the default backend.
pub const BACKEND_ENV: &str = "PNFV_BACKEND";
pub const MAX_FIELDS: usize = 30;
pub const MAX_POLICIES: usize = 30;
pub const MIN_TRIALS: usize = 3;

/// Milliseconds reported for the original prototype at 5 fields and 10
/// policies. Printed for context only.
pub const PUBLISHED_MS: &[(SchemeId, Phase, f64)] = &[
    (SchemeId::Bgn, Phase::EntryEncrypt, 62.0),
    (SchemeId::Bgn, Phase::CloudProcess, 1027.0),
    (SchemeId::Bgn, Phase::ClientDecrypt, 118.0),
    (SchemeId::Peks, Phase::EntryEncrypt, 77.0),
    (SchemeId::Peks, Phase::CloudProcess, 157.0),
    (SchemeId::Peks, Phase::ClientDecrypt, 16.0),
];
pub const PUBLISHED_SHAPE: (usize, usize) = (5, 10);

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    /// Groups represented by exponents; fast, not secure.
    #[default]
    Exponent,
    /// A pairing-friendly curve. Not built in.
    Pairing,
}

impl Backend {
    /// Reads [`BACKEND_ENV`], falling back to the exponent backend.
    pub fn from_env() -> Result<Self, BenchError> {
        match std::env::var(BACKEND_ENV) {
            Ok(v) if !v.is_empty() => v.parse(),
            _ => Ok(Self::default()),
        }
    }
}

impl FromStr for Backend {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "exponent" => Ok(Backend::Exponent),
            "pairing" => Ok(Backend::Pairing),
            _ => Err(BenchError::InvalidConfig(format!("unknown backend `{s}`"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Exponent => "exponent",
            Backend::Pairing => "pairing",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Transform,
    EntryEncrypt,
    CloudProcess,
    ClientDecrypt,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::Transform,
        Phase::EntryEncrypt,
        Phase::CloudProcess,
        Phase::ClientDecrypt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Transform => "transform",
            Phase::EntryEncrypt => "entry_encrypt",
            Phase::CloudProcess => "cloud_process",
            Phase::ClientDecrypt => "client_decrypt",
        }
    }

    /// Phases paid per packet.
    pub fn is_per_packet(self) -> bool {
        self != Phase::Transform
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub scheme: SchemeId,
    pub n_fields: usize,
    pub n_policies: usize,
    pub trials: usize,
    pub backend: Backend,
    pub seed: u64,
    /// Fraction of packets that match some policy.
    pub match_rate: f64,
    /// Range instead of equality policies, on 16-bit fields.
    pub ranges: bool,
    /// Run trials on all cores.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeId::Bgn,
            n_fields: 5,
            n_policies: 10,
            trials: 5,
            backend: Backend::Exponent,
            seed: 0,
            match_rate: 0.0,
            ranges: false,
            parallel: false,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidConfig(m));
        if !(1..=MAX_FIELDS).contains(&self.n_fields) {
            return bad(format!(
                "fields must be in 1..={MAX_FIELDS}, got {}",
                self.n_fields
            ));
        }
        if !(1..=MAX_POLICIES).contains(&self.n_policies) {
            return bad(format!(
                "policies must be in 1..={MAX_POLICIES}, got {}",
                self.n_policies
            ));
        }
        if self.trials < MIN_TRIALS {
            return bad(format!(
                "at least {MIN_TRIALS} trials are needed, got {}",
                self.trials
            ));
        }
        if !(0.0..=1.0).contains(&self.match_rate) {
            return bad(format!("match rate must be in [0, 1], got {}", self.match_rate));
        }
        if self.backend == Backend::Pairing {
            return Err(BenchError::Unsupported(
                "no pairing-friendly curve backend is built in",
            ));
        }
        match (self.scheme, self.ranges) {
            (SchemeId::Peks, true) => Err(BenchError::Unsupported("peks supports equality policies only")),
            (SchemeId::State, _) => Err(BenchError::Unsupported(
                "the state table is not a benchmark scheme",
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub scheme: SchemeId,
    pub n_fields: usize,
    pub n_policies: usize,
    pub phase: Phase,
    pub median_ms: f64,
    pub ops: OpCounts,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scheme: &'a str,
    n_fields: usize,
    n_policies: usize,
    phase: &'a str,
    median_ms: f64,
    encryptions: u64,
    decryptions: u64,
    tests: u64,
    pairings: u64,
    dlogs: u64,
}

/// Header row first, one line per row.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CsvRow {
            scheme: r.scheme.name(),
            n_fields: r.n_fields,
            n_policies: r.n_policies,
            phase: r.phase.name(),
            median_ms: r.median_ms,
            encryptions: r.ops.encryptions,
            decryptions: r.ops.decryptions,
            tests: r.ops.tests,
            pairings: r.ops.pairings,
            dlogs: r.ops.dlogs,
        })?;
    }
    if rows.is_empty() {
        w.write_record([
            "scheme",
            "n_fields",
            "n_policies",
            "phase",
            "median_ms",
            "encryptions",
            "decryptions",
            "tests",
            "pairings",
            "dlogs",
        ])?;
    }
    w.flush()?;
    Ok(())
}

enum Keys {
    Bgn(BgnPublicKey, BgnSecretKey),
    Peks(PeksPublicKeys, PeksClientKeys, PrpKey),
    Fhe(FhePublicKey, FheSecretKey),
}

type TrialResult = [(Duration, OpCounts); 4];

/// Phases faster than this are repeated and averaged.
pub const MIN_SAMPLE: Duration = Duration::from_micros(500);

/// Runs `f` once with the real counters, then repeats it with scratch
/// counters until [`MIN_SAMPLE`] has elapsed. Returns the first output and
/// the mean duration per run.
fn measure<T>(counts: &mut OpCounts, mut f: impl FnMut(&mut OpCounts) -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f(counts);
    let mut elapsed = start.elapsed();
    let mut runs = 1u32;
    while elapsed < MIN_SAMPLE {
        let mut scratch = OpCounts::default();
        let s = Instant::now();
        std::hint::black_box(f(&mut scratch));
        elapsed += s.elapsed();
        runs += 1;
    }
    (out, elapsed / runs)
}

fn phase_rng(seed: u64, t: usize, phase: Phase) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((t as u64 + 1) << 2) | phase as u64);
    rng
}

fn trial(keys: &Keys, w: &Workload, cfg: &BenchConfig, t: usize) -> Result<TrialResult, BenchError> {
    let x = w.packet(&mut phase_rng(cfg.seed, t, Phase::Transform), cfg.match_rate);
    let r0 = phase_rng(cfg.seed ^ 1, t, Phase::Transform);
    let r1 = phase_rng(cfg.seed ^ 1, t, Phase::EntryEncrypt);
    let mut c = [OpCounts::default(); 4];
    let [c0, c1, c2, c3] = &mut c;
    let d = match keys {
        Keys::Bgn(pk, sk) => {
            let (f, d0) = measure(c0, |c| bgn::transform(pk, &w.nf, &w.layout, &mut r0.clone(), c));
            let f = f?;
            let (ex, d1) = measure(c1, |c| {
                bgn::encrypt_packet(pk, &x, f.has_range(), &mut r1.clone(), c)
            });
            let ex = ex?;
            let (r, d2) = measure(c2, |c| bgn::process(pk, &f, &ex, c));
            let r = r?;
            let (y, d3) = measure(c3, |c| bgn::decrypt_result(sk, &w.nf, &w.layout, &r, c));
            y?;
            [d0, d1, d2, d3]
        }
        Keys::Peks(pks, keys, prp) => {
            let (f, d0) = measure(c0, |c| {
                peks::transform(keys, &w.nf, &w.layout, &mut r0.clone(), c)
            });
            let f = f?;
            let (e, d1) = measure(c1, |c| {
                peks::entry_process(pks, prp, t as u64, &x, &mut r1.clone(), c)
            });
            let e = e?;
            let (r, d2) = measure(c2, |c| peks::cloud_process(pks, &f, e.clone(), c));
            let r = r?;
            let (y, d3) = measure(c3, |c| peks::decrypt(keys, &w.layout, &r, c));
            y?;
            [d0, d1, d2, d3]
        }
        Keys::Fhe(pk, sk) => {
            let (f, d0) = measure(c0, |c| fhe::transform(pk, &w.nf, &w.layout, &mut r0.clone(), c));
            let f = f?;
            let (ex, d1) = measure(c1, |c| fhe::encrypt_packet(pk, &x, &mut r1.clone(), c));
            let (r, d2) = measure(c2, |c| fhe::process(pk, &f, &ex, c));
            let r = r?;
            let (y, d3) = measure(c3, |c| fhe::decrypt(sk, &w.layout, &r, c));
            y?;
            [d0, d1, d2, d3]
        }
    };
    Ok([(d[0], c[0]), (d[1], c[1]), (d[2], c[2]), (d[3], c[3])])
}

/// Median in milliseconds.
fn median_ms(mut ds: Vec<Duration>) -> f64 {
    ds.sort();
    let n = ds.len();
    let nanos = if n % 2 == 1 {
        ds[n / 2].as_nanos() as f64
    } else {
        (ds[n / 2 - 1].as_nanos() + ds[n / 2].as_nanos()) as f64 / 2.0
    };
    nanos / 1e6
}

fn run_trials(keys: &Keys, w: &Workload, cfg: &BenchConfig) -> Result<Vec<TrialResult>, BenchError> {
    if !cfg.parallel {
        return (0..cfg.trials).map(|t| trial(keys, w, cfg, t)).collect();
    }
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(cfg.trials);
    let mut slots: Vec<Option<Result<TrialResult, BenchError>>> = (0..cfg.trials).map(|_| None).collect();
    std::thread::scope(|s| {
        for (k, chunk) in slots.chunks_mut(cfg.trials.div_ceil(workers)).enumerate() {
            let base = k * cfg.trials.div_ceil(workers);
            s.spawn(move || {
                for (off, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(trial(keys, w, cfg, base + off));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every slot filled")).collect()
}

/// One row per phase for a single configuration.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRow>, BenchError> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let w = Workload::generate(&mut rng, cfg.n_fields, cfg.n_policies, cfg.ranges);
    let keys = match cfg.scheme {
        SchemeId::Bgn => {
            let (pk, sk) = bgn::keygen(bgn::DEFAULT_PRIME_BITS, &mut rng).map_err(SchemeError::from)?;
            sk.precompute();
            Keys::Bgn(pk, sk)
        }
        SchemeId::Peks => {
            let (pks, keys) = peks::keygen(&mut rng);
            Keys::Peks(pks, keys, PrpKey::generate(&mut rng))
        }
        _ => {
            let (pk, sk) = fhe::keygen(&mut rng);
            Keys::Fhe(pk, sk)
        }
    };
    let results = run_trials(&keys, &w, cfg)?;
    Ok(Phase::ALL
        .iter()
        .enumerate()
        .map(|(k, &phase)| BenchRow {
            scheme: cfg.scheme,
            n_fields: cfg.n_fields,
            n_policies: cfg.n_policies,
            phase,
            median_ms: median_ms(results.iter().map(|r| r[k].0).collect()),
            ops: results[0][k].1,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Fields,
    Policies,
}

impl FromStr for Axis {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "fields" => Ok(Axis::Fields),
            "policies" => Ok(Axis::Policies),
            _ => Err(BenchError::InvalidConfig(format!("unknown axis `{s}`"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Fields => "fields",
            Axis::Policies => "policies",
        })
    }
}

impl Axis {
    fn of(self, r: &BenchRow) -> usize {
        match self {
            Axis::Fields => r.n_fields,
            Axis::Policies => r.n_policies,
        }
    }
}

/// Varies one axis over `values` with the other held at `fixed`.
pub fn sweep(
    base: &BenchConfig,
    axis: Axis,
    fixed: usize,
    values: &[usize],
) -> Result<Vec<BenchRow>, BenchError> {
    if values.is_empty() {
        return Err(BenchError::InvalidConfig("empty sweep range".into()));
    }
    let mut rows = Vec::with_capacity(4 * values.len());
    for &v in values {
        let (n_fields, n_policies) = match axis {
            Axis::Fields => (v, fixed),
            Axis::Policies => (fixed, v),
        };
        rows.extend(run_benchmark(&BenchConfig {
            n_fields,
            n_policies,
            ..base.clone()
        })?);
    }
    Ok(rows)
}

/// How one phase of one scheme behaves along a sweep axis.
#[derive(Clone, Debug)]
pub struct Trend {
    pub scheme: SchemeId,
    pub phase: Phase,
    pub axis: Axis,
    pub points: Vec<(usize, f64)>,
    pub encryptions: Vec<(usize, u64)>,
}

impl Trend {
    pub fn strictly_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 > w[0].1)
    }

    /// `max / min` of the medians; infinite when some median is 0.
    pub fn spread(&self) -> f64 {
        let max = self.points.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        let min = self.points.iter().map(|p| p.1).fold(f64::MAX, f64::min);
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }

    pub fn encryptions_affine(&self) -> bool {
        is_affine(&self.encryptions)
    }
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} over {}:", self.scheme, self.phase, self.axis)?;
        for (x, ms) in &self.points {
            write!(f, " {x}={ms:.4}ms")?;
        }
        let shape = if self.strictly_increasing() {
            "increasing"
        } else {
            "not increasing"
        };
        write!(
            f,
            " | {shape}, max/min {:.2}, encryptions {}",
            self.spread(),
            if self.encryptions_affine() {
                "affine"
            } else {
                "not affine"
            }
        )
    }
}

/// Exact check that integer points lie on one line.
pub fn is_affine(points: &[(usize, u64)]) -> bool {
    let [(x0, y0), (x1, y1), ..] = points else {
        return true;
    };
    let (dx, dy) = (*x1 as i128 - *x0 as i128, *y1 as i128 - *y0 as i128);
    points
        .iter()
        .all(|&(x, y)| (y as i128 - *y0 as i128) * dx == (x as i128 - *x0 as i128) * dy)
}

/// Groups sweep rows into one trend per scheme and phase.
pub fn trends(rows: &[BenchRow], axis: Axis) -> Vec<Trend> {
    let mut out: Vec<Trend> = Vec::new();
    for r in rows {
        let t = match out
            .iter_mut()
            .find(|t| t.scheme == r.scheme && t.phase == r.phase)
        {
            Some(t) => t,
            None => {
                out.push(Trend {
                    scheme: r.scheme,
                    phase: r.phase,
                    axis,
                    points: Vec::new(),
                    encryptions: Vec::new(),
                });
                out.last_mut().expect("just pushed")
            }
        };
        t.points.push((axis.of(r), r.median_ms));
        t.encryptions.push((axis.of(r), r.ops.encryptions));
    }
    for t in &mut out {
        t.points.sort_by_key(|p| p.0);
        t.encryptions.sort_by_key(|p| p.0);
    }
    out
}

/// Sum of the per-packet phases.
pub fn aggregate_ms(rows: &[BenchRow]) -> f64 {
    rows.iter()
        .filter(|r| r.phase.is_per_packet())
        .map(|r| r.median_ms)
        .sum()
}
