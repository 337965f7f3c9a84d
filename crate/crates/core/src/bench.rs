//! Experiment orchestration: coherence sweeps, Gram histograms, and
//! compressed-sensing recovery curves, with content-addressed seeding,
//! aggregation, and table emission.
//!
//! Reproducibility contract: every random draw is seeded by a stable hash of
//! (master seed, method tag, point content, sparsity, repeat, trial), so
//! re-running a config yields byte-identical raw tables, and editing one
//! cell of a scheme never perturbs the others. Wall-clock timings are kept
//! on the in-memory records only; emitted tables contain no volatile
//! fields.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    duarte_projection, elad_projection, random_projection, xu_projection, EladParams, XuParams,
};
use crate::dmcm::{dmcm_design, ContinuationSchedule};
use crate::dmcmp::{dmcmp_continuation, AmSchedule, Dictionary};
use crate::error::{Error, Result};
use crate::matrix::{
    gram_abs_histogram, mutual_coherence, normalize_columns, welch_bound, DenseMatrix,
    UnitColumnMatrix,
};
use crate::recovery::{assess_recovery, gen_sparse_signal, omp};

/// Matrix-design methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "dmcm")]
    Dmcm,
    #[serde(rename = "dmcm-p")]
    DmcmP,
    #[serde(rename = "elad")]
    Elad,
    #[serde(rename = "xu")]
    Xu,
    #[serde(rename = "duarte")]
    Duarte,
    #[serde(rename = "random")]
    Random,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Dmcm => "dmcm",
            Method::DmcmP => "dmcm-p",
            Method::Elad => "elad",
            Method::Xu => "xu",
            Method::Duarte => "duarte",
            Method::Random => "random",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "dmcm" => Ok(Method::Dmcm),
            "dmcm-p" => Ok(Method::DmcmP),
            "elad" => Ok(Method::Elad),
            "xu" => Ok(Method::Xu),
            "duarte" => Ok(Method::Duarte),
            "random" => Ok(Method::Random),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }

    pub const ALL: [Method; 6] = [
        Method::Dmcm,
        Method::DmcmP,
        Method::Elad,
        Method::Xu,
        Method::Duarte,
        Method::Random,
    ];
}

/// One (m, n, d) problem size. `d` is absent for runs that design the
/// target matrix directly; Gram-shaping baselines then use the identity
/// dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemePoint {
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub d: Option<usize>,
}

/// Full experiment description; every field has a default and can be
/// overridden from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scheme: Vec<SchemePoint>,
    pub methods: Vec<Method>,
    pub repeats: usize,
    pub trials_per_point: usize,
    pub sparsity_levels: Vec<usize>,
    pub success_threshold: f64,
    pub master_seed: u64,
    pub dmcm: ContinuationSchedule,
    pub dmcmp: AmSchedule,
    pub elad: EladParams,
    pub xu: XuParams,
    pub histogram_bins: Option<Vec<f64>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scheme: Vec::new(),
            methods: Vec::new(),
            repeats: 10,
            trials_per_point: 200,
            sparsity_levels: vec![2],
            success_threshold: 1e-4,
            master_seed: 0,
            dmcm: ContinuationSchedule::default(),
            dmcmp: AmSchedule::default(),
            elad: EladParams::default(),
            xu: XuParams::default(),
            histogram_bins: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scheme.is_empty() {
            return Err(Error::Config("scheme must list at least one point".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must list at least one method".into()));
        }
        let mut seen = self.methods.to_vec();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::Config("methods contains duplicates".into()));
        }
        if self.repeats == 0 || self.trials_per_point == 0 {
            return Err(Error::Config("repeats and trials must be >= 1".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::Config(format!(
                "success threshold must be positive, got {}",
                self.success_threshold
            )));
        }
        for p in &self.scheme {
            if p.m == 0 || p.n < 2 || p.m > p.n {
                return Err(Error::Config(format!(
                    "scheme point needs 1 <= m <= n and n >= 2, got m = {}, n = {}",
                    p.m, p.n
                )));
            }
            if let Some(d) = p.d {
                if d < p.m || d >= p.n {
                    return Err(Error::Config(format!(
                        "scheme point needs m <= d < n, got m = {}, d = {d}, n = {}",
                        p.m, p.n
                    )));
                }
            }
        }
        if let Some(edges) = &self.histogram_bins {
            if edges.len() < 2
                || edges.windows(2).any(|w| w[0] >= w[1])
                || edges[0] > 0.0
                || edges[edges.len() - 1] < 1.0
            {
                return Err(Error::Config(
                    "histogram_bins must be strictly increasing and cover [0, 1]".into(),
                ));
            }
        }
        self.dmcm.validate()?;
        self.dmcmp.validate()?;
        self.elad.validate()?;
        self.xu.validate()?;
        Ok(())
    }
}

/// One benchmark outcome. `wall_secs` is diagnostic only and never emitted,
/// so repeated runs of the same config serialize identically.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub d: Option<usize>,
    pub sparsity: Option<usize>,
    pub seed: u64,
    pub coherence: f64,
    pub welch: f64,
    pub recon_error: Option<f64>,
    pub success: Option<bool>,
    pub wall_secs: f64,
}

/// Histogram of |Gram| off-diagonal magnitudes accumulated over repeats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRecord {
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub d: Option<usize>,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Output of a coherence sweep: per-run records plus any requested Gram
/// histograms (which need the designed matrices, not just their scalars).
#[derive(Debug, Clone)]
pub struct CoherenceRun {
    pub trials: Vec<TrialRecord>,
    pub histograms: Vec<HistogramRecord>,
}

fn fnv1a_u64(data: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in data {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Stable per-cell seed: FNV-1a over the master seed, a stream label
/// (method tag or "dict"), the point content, the sparsity level, and the
/// repeat/trial indices. Hashing point content rather than its position
/// keeps unrelated cells' streams fixed when a scheme is edited.
pub fn derive_seed(
    master: u64,
    label: &str,
    m: usize,
    n: usize,
    d: Option<usize>,
    sparsity: Option<usize>,
    repeat: usize,
    trial: usize,
) -> u64 {
    let mut bytes = Vec::with_capacity(label.len() + 64);
    bytes.extend_from_slice(&master.to_le_bytes());
    bytes.extend_from_slice(label.as_bytes());
    bytes.push(0xff);
    for value in [
        m as u64,
        n as u64,
        d.map_or(u64::MAX, |v| v as u64),
        sparsity.map_or(u64::MAX, |v| v as u64),
        repeat as u64,
        trial as u64,
    ] {
        bytes.extend_from_slice(&value.to_le_bytes());
    }
    fnv1a_u64(&bytes)
}

fn annotate(e: Error, method: Method, point: SchemePoint, repeat: usize) -> Error {
    Error::Bench {
        method: method.tag().to_string(),
        m: point.m,
        n: point.n,
        d: point.d,
        repeat,
        source: Box::new(e),
    }
}

fn shared_dictionary(cfg: &ExperimentConfig, point: SchemePoint, repeat: usize) -> Result<Dictionary> {
    let d = point.d.expect("caller checked d");
    let seed = derive_seed(cfg.master_seed, "dict", point.m, point.n, point.d, None, repeat, 0);
    Dictionary::random_gaussian(d, point.n, seed)
}

/// Designs a projection for one cell. `dict` is the shared per-repeat
/// dictionary; methods that run directly on the target matrix (no
/// projection) are rejected here.
fn build_projection(
    method: Method,
    dict: &Dictionary,
    m: usize,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<DenseMatrix> {
    match method {
        Method::Dmcm => Err(Error::Config(
            "dmcm designs the target matrix directly and yields no projection".into(),
        )),
        Method::DmcmP => {
            let (_, p, _) = dmcmp_continuation(dict, m, &cfg.dmcmp, seed)?;
            Ok(p)
        }
        Method::Elad => elad_projection(dict, m, &cfg.elad, seed),
        Method::Xu => xu_projection(dict, m, &cfg.xu, seed),
        Method::Duarte => duarte_projection(dict, m),
        Method::Random => random_projection(m, dict.dim(), seed),
    }
}

fn effective_dictionary(p: &DenseMatrix, dict: &Dictionary) -> Result<UnitColumnMatrix> {
    normalize_columns(&DenseMatrix::from_dmatrix(
        p.as_dmatrix() * dict.as_dmatrix(),
    )?)
}

/// Runs the coherence sweep: for every (point, repeat, method) the designed
/// matrix's mutual coherence lands in one record. Methods with a dictionary
/// requirement receive the shared per-repeat Gaussian dictionary; points
/// without `d` use a seeded random rotation, which leaves every
/// rotation-covariant method's statistics identical to an identity
/// dictionary while keeping the whitening baseline's eigenbasis generic.
pub fn run_coherence_experiment(cfg: &ExperimentConfig) -> Result<CoherenceRun> {
    cfg.validate()?;
    let mut trials = Vec::new();
    let mut histograms = Vec::new();
    for &point in &cfg.scheme {
        let welch = welch_bound(point.m, point.n)?;
        let mut hist_acc: BTreeMap<Method, Vec<u64>> = BTreeMap::new();
        for repeat in 0..cfg.repeats {
            let needs_dict = cfg.methods.iter().any(|&m| m != Method::Dmcm);
            let dict = if needs_dict {
                let dict_seed = derive_seed(
                    cfg.master_seed,
                    "dict",
                    point.m,
                    point.n,
                    point.d,
                    None,
                    repeat,
                    0,
                );
                Some(match point.d {
                    Some(d) => Dictionary::random_gaussian(d, point.n, dict_seed)?,
                    None => Dictionary::random_rotation(point.n, dict_seed)?,
                })
            } else {
                None
            };
            for &method in &cfg.methods {
                let seed = derive_seed(
                    cfg.master_seed,
                    method.tag(),
                    point.m,
                    point.n,
                    point.d,
                    None,
                    repeat,
                    0,
                );
                let started = Instant::now();
                let effective = match method {
                    Method::Dmcm => dmcm_design(point.m, point.n, &cfg.dmcm, seed)
                        .map(|(m, _)| m)
                        .map_err(|e| annotate(e, method, point, repeat))?,
                    _ => {
                        let active_dict = dict.as_ref().expect("dictionary built above");
                        if method == Method::DmcmP && point.d.is_none() {
                            return Err(annotate(
                                Error::Config("dmcm-p needs a point with d set".into()),
                                method,
                                point,
                                repeat,
                            ));
                        }
                        let p = build_projection(method, active_dict, point.m, cfg, seed)
                            .map_err(|e| annotate(e, method, point, repeat))?;
                        effective_dictionary(&p, active_dict)
                            .map_err(|e| annotate(e, method, point, repeat))?
                    }
                };
                let coherence = mutual_coherence(&effective)
                    .map_err(|e| annotate(e, method, point, repeat))?;
                let wall_secs = started.elapsed().as_secs_f64();
                assert!(
                    coherence >= welch - 1e-12,
                    "coherence {coherence} below the Welch bound {welch}"
                );
                trials.push(TrialRecord {
                    method,
                    m: point.m,
                    n: point.n,
                    d: point.d,
                    sparsity: None,
                    seed,
                    coherence,
                    welch,
                    recon_error: None,
                    success: None,
                    wall_secs,
                });
                if let Some(edges) = &cfg.histogram_bins {
                    let counts = gram_abs_histogram(&effective, edges)
                        .map_err(|e| annotate(e, method, point, repeat))?;
                    let acc = hist_acc
                        .entry(method)
                        .or_insert_with(|| vec![0u64; counts.len()]);
                    for (a, c) in acc.iter_mut().zip(&counts) {
                        *a += c;
                    }
                }
            }
        }
        if let Some(edges) = &cfg.histogram_bins {
            for (method, counts) in hist_acc {
                histograms.push(HistogramRecord {
                    method,
                    m: point.m,
                    n: point.n,
                    d: point.d,
                    edges: edges.clone(),
                    counts,
                });
            }
        }
    }
    Ok(CoherenceRun { trials, histograms })
}

/// Runs the compressed-sensing sweep: per (point, repeat, method) one
/// projection is designed, then each (sparsity, trial) draws a sparse code,
/// measures it through P D, recovers with greedy pursuit on the normalized
/// effective dictionary (undoing the normalization on the coefficients),
/// and scores the signal-space reconstruction error.
pub fn run_cs_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    if cfg.sparsity_levels.is_empty() {
        return Err(Error::Config("sparsity_levels must be nonempty".into()));
    }
    let mut records = Vec::new();
    for &point in &cfg.scheme {
        if point.d.is_none() {
            return Err(Error::Config(format!(
                "cs experiments need d at every point; missing for m = {}, n = {}",
                point.m, point.n
            )));
        }
        let welch = welch_bound(point.m, point.n)?;
        for &t in &cfg.sparsity_levels {
            if t > point.m.min(point.n) {
                return Err(Error::Config(format!(
                    "sparsity {t} exceeds min(m, n) at m = {}, n = {}",
                    point.m, point.n
                )));
            }
        }
        for repeat in 0..cfg.repeats {
            let dict = shared_dictionary(cfg, point, repeat)?;
            for &method in &cfg.methods {
                let p_seed = derive_seed(
                    cfg.master_seed,
                    method.tag(),
                    point.m,
                    point.n,
                    point.d,
                    None,
                    repeat,
                    0,
                );
                let p = build_projection(method, &dict, point.m, cfg, p_seed)
                    .map_err(|e| annotate(e, method, point, repeat))?;
                let pd = p.as_dmatrix() * dict.as_dmatrix();
                let effective =
                    normalize_columns(&DenseMatrix::from_dmatrix(pd.clone())?)
                        .map_err(|e| annotate(e, method, point, repeat))?;
                let col_norms: Vec<f64> =
                    (0..pd.ncols()).map(|i| pd.column(i).norm()).collect();
                let coherence = mutual_coherence(&effective)
                    .map_err(|e| annotate(e, method, point, repeat))?;
                assert!(
                    coherence >= welch - 1e-12,
                    "coherence {coherence} below the Welch bound {welch}"
                );
                for &t in &cfg.sparsity_levels {
                    for trial in 0..cfg.trials_per_point {
                        let trial_seed = derive_seed(
                            cfg.master_seed,
                            method.tag(),
                            point.m,
                            point.n,
                            point.d,
                            Some(t),
                            repeat,
                            trial + 1,
                        );
                        let started = Instant::now();
                        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
                        let alpha = gen_sparse_signal(point.n, t, &mut rng)
                            .map_err(|e| annotate(e, method, point, repeat))?;
                        let y_vec = &pd * DVector::from_vec(alpha.to_dense());
                        let y: Vec<f64> = y_vec.iter().copied().collect();
                        let recovered = omp(&effective, &y, t)
                            .map_err(|e| annotate(e, method, point, repeat))?;
                        let alpha_hat: Vec<f64> = recovered
                            .coefficients
                            .iter()
                            .zip(&col_norms)
                            .map(|(c, norm)| c / norm)
                            .collect();
                        let assessment = assess_recovery(
                            &dict,
                            &alpha,
                            &alpha_hat,
                            cfg.success_threshold,
                        )
                        .map_err(|e| annotate(e, method, point, repeat))?;
                        records.push(TrialRecord {
                            method,
                            m: point.m,
                            n: point.n,
                            d: point.d,
                            sparsity: Some(t),
                            seed: trial_seed,
                            coherence,
                            welch,
                            recon_error: Some(assessment.reconstruction_error),
                            success: Some(assessment.success),
                            wall_secs: started.elapsed().as_secs_f64(),
                        });
                    }
                }
            }
        }
    }
    Ok(records)
}

/// Emission schema for one trial; excludes wall-clock time so tables are
/// reproducible byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub method: String,
    pub m: u64,
    pub n: u64,
    pub d: Option<u64>,
    pub sparsity: Option<u64>,
    pub seed: u64,
    pub coherence: f64,
    pub welch_bound: f64,
    pub recon_error: Option<f64>,
    pub success: Option<bool>,
}

impl TrialRecord {
    pub fn to_raw_row(&self) -> RawRow {
        RawRow {
            method: self.method.tag().to_string(),
            m: self.m as u64,
            n: self.n as u64,
            d: self.d.map(|v| v as u64),
            sparsity: self.sparsity.map(|v| v as u64),
            seed: self.seed,
            coherence: self.coherence,
            welch_bound: self.welch,
            recon_error: self.recon_error,
            success: self.success,
        }
    }
}

/// Per-(method, point, sparsity) aggregate. Means cover every trial,
/// including failures; `failure_rate` reports the thresholded share.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub method: String,
    pub m: u64,
    pub n: u64,
    pub d: Option<u64>,
    pub sparsity: Option<u64>,
    pub count: u64,
    pub mean_coherence: f64,
    pub std_coherence: f64,
    pub mean_error: Option<f64>,
    pub std_error: Option<f64>,
    pub failure_rate: Option<f64>,
    pub welch_bound: f64,
}

fn sorted_mean_std(mut values: Vec<f64>) -> (f64, f64) {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    sq.sort_by(|a, b| a.total_cmp(b));
    let var = sq.iter().sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups records by (method, m, n, d, sparsity) and reduces each group.
/// Values are sorted before summation, so the result is invariant under any
/// permutation of the input records.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    type Key = (String, u64, u64, Option<u64>, Option<u64>);
    let mut groups: BTreeMap<Key, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        let key = (
            r.method.tag().to_string(),
            r.m as u64,
            r.n as u64,
            r.d.map(|v| v as u64),
            r.sparsity.map(|v| v as u64),
        );
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, m, n, d, sparsity), rs)| {
            let (mean_coherence, std_coherence) =
                sorted_mean_std(rs.iter().map(|r| r.coherence).collect());
            let errors: Vec<f64> = rs.iter().filter_map(|r| r.recon_error).collect();
            let (mean_error, std_error) = if errors.is_empty() {
                (None, None)
            } else {
                let (mean, std) = sorted_mean_std(errors);
                (Some(mean), Some(std))
            };
            let judged: Vec<bool> = rs.iter().filter_map(|r| r.success).collect();
            let failure_rate = if judged.is_empty() {
                None
            } else {
                Some(judged.iter().filter(|s| !**s).count() as f64 / judged.len() as f64)
            };
            AggregateRow {
                method,
                m,
                n,
                d,
                sparsity,
                count: rs.len() as u64,
                mean_coherence,
                std_coherence,
                mean_error,
                std_error,
                failure_rate,
                welch_bound: rs[0].welch,
            }
        })
        .collect()
}

fn fmt_opt_u64(v: Option<u64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn fmt_opt_bool(v: Option<bool>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub const RAW_CSV_HEADER: &str =
    "method,m,n,d,sparsity,seed,coherence,welch_bound,recon_error,success";

pub const AGGREGATE_CSV_HEADER: &str = "method,m,n,d,sparsity,count,mean_coherence,\
std_coherence,mean_error,std_error,failure_rate,welch_bound";

pub fn render_raw_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(RAW_CSV_HEADER);
    out.push('\n');
    for r in records {
        let row = r.to_raw_row();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.method,
            row.m,
            row.n,
            fmt_opt_u64(row.d),
            fmt_opt_u64(row.sparsity),
            row.seed,
            row.coherence,
            row.welch_bound,
            fmt_opt_f64(row.recon_error),
            fmt_opt_bool(row.success),
        ));
    }
    out
}

fn parse_opt<T: std::str::FromStr>(field: &str, name: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<T>()
        .map(Some)
        .map_err(|e| Error::Parse(format!("bad {name} {field:?}: {e}")))
}

fn parse_req<T: std::str::FromStr>(field: &str, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    field
        .parse::<T>()
        .map_err(|e| Error::Parse(format!("bad {name} {field:?}: {e}")))
}

/// Parses a table produced by [`render_raw_csv`] back into rows.
pub fn parse_raw_csv(text: &str) -> Result<Vec<RawRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RAW_CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "unexpected raw table header: {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::Parse(format!(
                "expected 10 fields, got {} in {line:?}",
                fields.len()
            )));
        }
        rows.push(RawRow {
            method: fields[0].to_string(),
            m: parse_req(fields[1], "m")?,
            n: parse_req(fields[2], "n")?,
            d: parse_opt(fields[3], "d")?,
            sparsity: parse_opt(fields[4], "sparsity")?,
            seed: parse_req(fields[5], "seed")?,
            coherence: parse_req(fields[6], "coherence")?,
            welch_bound: parse_req(fields[7], "welch_bound")?,
            recon_error: parse_opt(fields[8], "recon_error")?,
            success: parse_opt(fields[9], "success")?,
        });
    }
    Ok(rows)
}

pub fn render_aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.method,
            r.m,
            r.n,
            fmt_opt_u64(r.d),
            fmt_opt_u64(r.sparsity),
            r.count,
            r.mean_coherence,
            r.std_coherence,
            fmt_opt_f64(r.mean_error),
            fmt_opt_f64(r.std_error),
            fmt_opt_f64(r.failure_rate),
            r.welch_bound,
        ));
    }
    out
}

/// Whitespace-separated variant of the aggregate table for direct gnuplot
/// consumption; empty optionals render as "nan".
pub fn render_aggregate_dat(rows: &[AggregateRow]) -> String {
    let mut out = String::from(
        "# method m n d sparsity count mean_coherence std_coherence \
mean_error std_error failure_rate welch_bound\n",
    );
    let dash = |v: Option<f64>| v.map_or("nan".to_string(), |x| x.to_string());
    for r in rows {
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {} {} {} {} {}\n",
            r.method,
            r.m,
            r.n,
            r.d.map_or("nan".into(), |x: u64| x.to_string()),
            r.sparsity.map_or("nan".into(), |x: u64| x.to_string()),
            r.count,
            r.mean_coherence,
            r.std_coherence,
            dash(r.mean_error),
            dash(r.std_error),
            dash(r.failure_rate),
            r.welch_bound,
        ));
    }
    out
}

pub fn render_histogram_csv(h: &HistogramRecord) -> String {
    let mut out = String::from("bin_lower,bin_upper,count\n");
    for (k, c) in h.counts.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", h.edges[k], h.edges[k + 1], c));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the raw per-trial table and the aggregated per-point table (plus
/// gnuplot and histogram side tables) under `out_dir`, returning the paths
/// written. Column orders are fixed: see [`RAW_CSV_HEADER`] and
/// [`AGGREGATE_CSV_HEADER`].
pub fn emit_results(
    records: &[TrialRecord],
    histograms: &[HistogramRecord],
    format: OutputFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::Config("no records to emit".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let aggregates = aggregate(records);
    let mut written = Vec::new();
    match format {
        OutputFormat::Csv => {
            write_file(out_dir, "raw.csv", &render_raw_csv(records), &mut written)?;
            write_file(
                out_dir,
                "aggregate.csv",
                &render_aggregate_csv(&aggregates),
                &mut written,
            )?;
            write_file(
                out_dir,
                "aggregate.dat",
                &render_aggregate_dat(&aggregates),
                &mut written,
            )?;
            for h in histograms {
                let name = format!("hist_{}_m{}_n{}.csv", h.method.tag(), h.m, h.n);
                write_file(out_dir, &name, &render_histogram_csv(h), &mut written)?;
            }
        }
        OutputFormat::Json => {
            let raw: Vec<RawRow> = records.iter().map(TrialRecord::to_raw_row).collect();
            let raw_json = serde_json::to_string_pretty(&raw)
                .map_err(|e| Error::Parse(e.to_string()))?;
            write_file(out_dir, "raw.json", &raw_json, &mut written)?;
            let agg_json = serde_json::to_string_pretty(&aggregates)
                .map_err(|e| Error::Parse(e.to_string()))?;
            write_file(out_dir, "aggregate.json", &agg_json, &mut written)?;
            if !histograms.is_empty() {
                let hist_json = serde_json::to_string_pretty(histograms)
                    .map_err(|e| Error::Parse(e.to_string()))?;
                write_file(out_dir, "histograms.json", &hist_json, &mut written)?;
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_schedules(cfg: &mut ExperimentConfig) {
        cfg.dmcm.outer_iters = 3;
        cfg.dmcm.inner_iters = 3;
        cfg.dmcmp.outer_iters = 3;
        cfg.dmcmp.inner_iters = 3;
        cfg.elad.iters = 3;
        cfg.xu.iters = 3;
    }

    fn coherence_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            scheme: vec![SchemePoint {
                m: 4,
                n: 12,
                d: None,
            }],
            methods: vec![Method::Random],
            repeats: 10,
            master_seed: 7,
            ..ExperimentConfig::default()
        };
        tiny_schedules(&mut cfg);
        cfg
    }

    fn cs_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            scheme: vec![SchemePoint {
                m: 5,
                n: 16,
                d: Some(8),
            }],
            methods: vec![Method::Duarte, Method::Random],
            repeats: 2,
            trials_per_point: 4,
            sparsity_levels: vec![1, 2],
            master_seed: 3,
            ..ExperimentConfig::default()
        };
        tiny_schedules(&mut cfg);
        cfg
    }

    #[test]
    fn coherence_bookkeeping_one_point_ten_repeats() {
        let run = run_coherence_experiment(&coherence_config()).unwrap();
        assert_eq!(run.trials.len(), 10);
        assert!(run
            .trials
            .iter()
            .all(|r| r.m == 4 && r.n == 12 && r.d.is_none()));
        assert!(run.histograms.is_empty());
    }

    #[test]
    fn every_record_respects_welch_floor() {
        let run = run_coherence_experiment(&coherence_config()).unwrap();
        for r in &run.trials {
            assert!(r.coherence >= r.welch - 1e-12);
        }
    }

    #[test]
    fn coherence_run_covers_all_methods_with_dictionary() {
        let mut cfg = coherence_config();
        cfg.scheme = vec![SchemePoint {
            m: 3,
            n: 10,
            d: Some(5),
        }];
        cfg.methods = vec![
            Method::Dmcm,
            Method::DmcmP,
            Method::Elad,
            Method::Xu,
            Method::Duarte,
            Method::Random,
        ];
        cfg.repeats = 2;
        let run = run_coherence_experiment(&cfg).unwrap();
        assert_eq!(run.trials.len(), 12);
    }

    #[test]
    fn histograms_total_all_pairs_over_repeats() {
        let mut cfg = coherence_config();
        cfg.histogram_bins = Some(vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let run = run_coherence_experiment(&cfg).unwrap();
        assert_eq!(run.histograms.len(), 1);
        let h = &run.histograms[0];
        let pairs_per_run = 12 * 11 / 2;
        assert_eq!(h.counts.iter().sum::<u64>(), (pairs_per_run * 10) as u64);
    }

    #[test]
    fn cs_records_have_expected_count_and_fields() {
        let records = run_cs_experiment(&cs_config()).unwrap();
        // 1 point x 2 repeats x 2 methods x 2 sparsities x 4 trials.
        assert_eq!(records.len(), 32);
        for r in &records {
            assert!(r.recon_error.is_some());
            assert!(r.success.is_some());
            assert!(r.coherence >= r.welch - 1e-12);
        }
    }

    #[test]
    fn cs_rejects_dmcm_and_missing_dimension() {
        let mut cfg = cs_config();
        cfg.methods = vec![Method::Dmcm];
        assert!(matches!(run_cs_experiment(&cfg), Err(Error::Bench { .. })));

        let mut cfg = cs_config();
        cfg.scheme[0].d = None;
        assert!(matches!(run_cs_experiment(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn zero_sparsity_trials_always_succeed() {
        let mut cfg = cs_config();
        cfg.sparsity_levels = vec![0];
        cfg.methods = vec![Method::Random];
        let records = run_cs_experiment(&cfg).unwrap();
        for r in &records {
            assert_eq!(r.recon_error, Some(0.0));
            assert_eq!(r.success, Some(true));
        }
    }

    #[test]
    fn trial_streams_are_prefix_stable_in_trial_count() {
        let short = run_cs_experiment(&cs_config()).unwrap();
        let mut cfg = cs_config();
        cfg.trials_per_point = 7;
        let long = run_cs_experiment(&cfg).unwrap();
        // Group by everything except the trial index and compare prefixes.
        let key = |r: &TrialRecord| (r.method, r.m, r.n, r.d, r.sparsity);
        let mut short_by_cell: BTreeMap<_, Vec<&TrialRecord>> = BTreeMap::new();
        for r in &short {
            short_by_cell.entry(key(r)).or_default().push(r);
        }
        let mut long_by_cell: BTreeMap<_, Vec<&TrialRecord>> = BTreeMap::new();
        for r in &long {
            long_by_cell.entry(key(r)).or_default().push(r);
        }
        for (cell, short_rs) in short_by_cell {
            let long_rs = &long_by_cell[&cell];
            // Repeats interleave, so compare seed multisets per cell prefix.
            let mut short_seeds: Vec<u64> = short_rs.iter().map(|r| r.seed).collect();
            short_seeds.sort_unstable();
            short_seeds.dedup();
            let long_seeds: std::collections::BTreeSet<u64> =
                long_rs.iter().map(|r| r.seed).collect();
            for s in short_seeds {
                assert!(long_seeds.contains(&s));
            }
        }
    }

    #[test]
    fn adding_a_scheme_point_leaves_existing_records_unchanged() {
        let base = run_cs_experiment(&cs_config()).unwrap();
        let mut cfg = cs_config();
        cfg.scheme.insert(
            0,
            SchemePoint {
                m: 4,
                n: 14,
                d: Some(7),
            },
        );
        let extended = run_cs_experiment(&cfg).unwrap();
        let old_points: Vec<&TrialRecord> =
            extended.iter().filter(|r| r.m == 5 && r.n == 16).collect();
        assert_eq!(old_points.len(), base.len());
        for (a, b) in base.iter().zip(old_points) {
            assert_eq!(a.to_raw_row(), b.to_raw_row());
        }
    }

    #[test]
    fn raw_csv_round_trip() {
        let records = run_cs_experiment(&cs_config()).unwrap();
        let text = render_raw_csv(&records);
        let parsed = parse_raw_csv(&text).unwrap();
        let expected: Vec<RawRow> = records.iter().map(TrialRecord::to_raw_row).collect();
        assert_eq!(parsed, expected);
    }

    #[test]
    fn aggregate_mean_matches_independent_summation() {
        let records = run_coherence_experiment(&coherence_config()).unwrap().trials;
        let rows = aggregate(&records);
        assert_eq!(rows.len(), 1);
        let mean: f64 =
            records.iter().map(|r| r.coherence).sum::<f64>() / records.len() as f64;
        assert!((rows[0].mean_coherence - mean).abs() < 1e-12);
        assert_eq!(rows[0].count, 10);
    }

    #[test]
    fn aggregates_are_permutation_invariant() {
        let mut records = run_cs_experiment(&cs_config()).unwrap();
        let forward = aggregate(&records);
        records.reverse();
        let backward = aggregate(&records);
        assert_eq!(forward, backward);
    }

    #[test]
    fn identical_configs_render_identical_tables() {
        let a = run_cs_experiment(&cs_config()).unwrap();
        let b = run_cs_experiment(&cs_config()).unwrap();
        assert_eq!(render_raw_csv(&a), render_raw_csv(&b));
        assert_eq!(
            render_aggregate_csv(&aggregate(&a)),
            render_aggregate_csv(&aggregate(&b))
        );
    }

    #[test]
    fn toml_round_trip_with_defaults() {
        let text = r#"
            master_seed = 42
            repeats = 3
            methods = ["dmcm", "random"]

            [[scheme]]
            m = 6
            n = 60

            [dmcm]
            outer_iters = 10
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.master_seed, 42);
        assert_eq!(cfg.repeats, 3);
        assert_eq!(cfg.methods, vec![Method::Dmcm, Method::Random]);
        assert_eq!(cfg.dmcm.outer_iters, 10);
        // Untouched defaults survive.
        assert_eq!(cfg.dmcm.inner_iters, 15);
        assert_eq!(cfg.trials_per_point, 200);
        assert_eq!(cfg.elad, EladParams::default());
    }

    #[test]
    fn config_validation_rejects_bad_points() {
        let mut cfg = cs_config();
        cfg.scheme[0].d = Some(20);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));

        let mut cfg = cs_config();
        cfg.scheme[0].m = 20;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));

        let mut cfg = cs_config();
        cfg.methods = vec![Method::Random, Method::Random];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn emit_writes_expected_files() {
        let records = run_cs_experiment(&cs_config()).unwrap();
        let dir = std::env::temp_dir().join(format!("lowcoh_emit_test_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let written = emit_results(&records, &[], OutputFormat::Csv, &dir).unwrap();
        assert!(written.iter().any(|p| p.ends_with("raw.csv")));
        assert!(written.iter().any(|p| p.ends_with("aggregate.csv")));
        let json = emit_results(&records, &[], OutputFormat::Json, &dir).unwrap();
        assert!(json.iter().any(|p| p.ends_with("raw.json")));
        let text = std::fs::read_to_string(dir.join("raw.csv")).unwrap();
        assert_eq!(parse_raw_csv(&text).unwrap().len(), records.len());
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn seed_derivation_distinguishes_all_components() {
        let base = derive_seed(1, "dmcm", 6, 60, None, None, 0, 0);
        assert_ne!(base, derive_seed(2, "dmcm", 6, 60, None, None, 0, 0));
        assert_ne!(base, derive_seed(1, "random", 6, 60, None, None, 0, 0));
        assert_ne!(base, derive_seed(1, "dmcm", 8, 60, None, None, 0, 0));
        assert_ne!(base, derive_seed(1, "dmcm", 6, 60, Some(30), None, 0, 0));
        assert_ne!(base, derive_seed(1, "dmcm", 6, 60, None, Some(2), 0, 0));
        assert_ne!(base, derive_seed(1, "dmcm", 6, 60, None, None, 1, 0));
        assert_ne!(base, derive_seed(1, "dmcm", 6, 60, None, None, 0, 1));
    }
}
