//! LETOR-style SVMLight ranking files: parsing, normalization and conversion
//! to contextual bandit instances.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use cascade_bandits_core::{BanditInstance, FeatureMatrix, InstanceKind, PriorSpec};
use flate2::read::MultiGzDecoder;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::instance_io::write_instance;

pub const STATS_FILE_NAME: &str = "stats.json";

/// Features whose standard deviation after min-max scaling falls below this
/// are dropped.
pub const MIN_FEATURE_STD: f64 = 1e-6;

pub const MAX_RELEVANCE: u8 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct LetorDoc {
    pub relevance: u8,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LetorQuery {
    pub query_id: u64,
    pub docs: Vec<LetorDoc>,
}

impl LetorQuery {
    pub fn dim(&self) -> usize {
        self.docs.first().map_or(0, |d| d.features.len())
    }

    /// Document count per relevance grade `0..=4`.
    pub fn relevance_histogram(&self) -> [usize; 5] {
        let mut h = [0; 5];
        for d in &self.docs {
            h[d.relevance as usize] += 1;
        }
        h
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Reject a qid that reappears after a different qid.
    pub strict: bool,
    /// Stop once this many distinct queries have been read.
    pub limit: Option<usize>,
}

/// Parses a (possibly gzip-compressed) SVMLight ranking file.
pub fn parse_svmlight(path: &Path, opts: ParseOptions) -> Result<Vec<LetorQuery>> {
    let mut file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut magic = [0u8; 2];
    let n = read_prefix(&mut file, &mut magic).map_err(|e| HarnessError::io(path, e))?;
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    if n == 2 && magic == [0x1f, 0x8b] {
        parse_svmlight_reader(BufReader::new(MultiGzDecoder::new(file)), path, opts)
    } else {
        parse_svmlight_reader(BufReader::new(file), path, opts)
    }
}

fn read_prefix(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

/// Parses SVMLight ranking lines from `reader`; `source` labels errors.
///
/// Lines are grouped by qid in order of first appearance. Feature indices are
/// 1-based; absent indices are 0 and every vector is padded to the largest
/// index in the input.
pub fn parse_svmlight_reader<R: BufRead>(reader: R, source: &Path, opts: ParseOptions) -> Result<Vec<LetorQuery>> {
    let mut queries: Vec<LetorQuery> = Vec::new();
    let mut index_of: HashMap<u64, usize> = HashMap::new();
    let mut max_index = 0usize;
    let mut last_qid: Option<u64> = None;
    let err = |line: usize, msg: String| HarnessError::Parse {
        path: source.to_path_buf(),
        line,
        msg,
    };
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| HarnessError::io(source, e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let rel_tok = tokens.next().expect("nonempty line");
        let relevance = parse_relevance(rel_tok).ok_or_else(|| err(lineno, format!("bad relevance '{rel_tok}'")))?;
        let qid_tok = tokens
            .next()
            .ok_or_else(|| err(lineno, "missing qid".into()))?;
        let qid = qid_tok
            .strip_prefix("qid:")
            .and_then(|q| q.parse::<u64>().ok())
            .ok_or_else(|| err(lineno, format!("expected qid:<id>, got '{qid_tok}'")))?;
        let mut sparse: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, format!("expected index:value, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| err(lineno, format!("bad feature index '{idx}'")))?;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(lineno, format!("bad feature value '{val}'")))?;
            sparse.push((idx, val));
        }
        let dim = sparse.iter().map(|&(k, _)| k).max().unwrap_or(0);
        max_index = max_index.max(dim);
        let mut features = vec![0.0; dim];
        for (k, v) in sparse {
            features[k - 1] = v;
        }

        let slot = match index_of.get(&qid) {
            Some(&slot) => {
                if opts.strict && last_qid != Some(qid) {
                    return Err(err(lineno, format!("qid {qid} reappears after other queries")));
                }
                slot
            }
            None => {
                if opts.limit.is_some_and(|n| queries.len() >= n) {
                    break;
                }
                index_of.insert(qid, queries.len());
                queries.push(LetorQuery {
                    query_id: qid,
                    docs: Vec::new(),
                });
                queries.len() - 1
            }
        };
        last_qid = Some(qid);
        queries[slot].docs.push(LetorDoc { relevance, features });
    }
    for q in &mut queries {
        for d in &mut q.docs {
            d.features.resize(max_index, 0.0);
        }
    }
    Ok(queries)
}

fn parse_relevance(tok: &str) -> Option<u8> {
    let v: u8 = tok.parse().ok().or_else(|| {
        let f: f64 = tok.parse().ok()?;
        (f == f.trunc() && (0.0..=255.0).contains(&f)).then_some(f as u8)
    })?;
    (v <= MAX_RELEVANCE).then_some(v)
}

/// Writes dense SVMLight lines (all indices, shortest round-trip floats).
pub fn write_svmlight<W: Write>(queries: &[LetorQuery], mut w: W) -> io::Result<()> {
    for q in queries {
        for d in &q.docs {
            write!(w, "{} qid:{}", d.relevance, q.query_id)?;
            for (k, v) in d.features.iter().enumerate() {
                write!(w, " {}:{}", k + 1, v)?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Statistics of the fitting split, reusable on other splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub means: Vec<f64>,
    /// Raw standard deviations; divide by `max - min` for the scaled value.
    pub stds: Vec<f64>,
    /// Surviving original column indices (0-based), in order.
    pub kept_features: Vec<usize>,
    /// Global divisor applied after min-max scaling so the largest document
    /// norm on the fitting split is exactly 1.
    pub norm_scale: f64,
}

impl NormalizationStats {
    pub fn fit(queries: &[LetorQuery]) -> Result<Self> {
        let dim = queries.first().map_or(0, LetorQuery::dim);
        let docs = queries.iter().flat_map(|q| q.docs.iter());
        let mut n = 0usize;
        let mut mins = vec![f64::INFINITY; dim];
        let mut maxs = vec![f64::NEG_INFINITY; dim];
        let mut means = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        for d in docs {
            if d.features.len() != dim {
                return Err(HarnessError::Runtime("documents differ in dimension".into()));
            }
            n += 1;
            for (j, &x) in d.features.iter().enumerate() {
                mins[j] = mins[j].min(x);
                maxs[j] = maxs[j].max(x);
                // Welford
                let delta = x - means[j];
                means[j] += delta / n as f64;
                m2[j] += delta * (x - means[j]);
            }
        }
        if n == 0 {
            return Err(HarnessError::Runtime("no documents to normalize".into()));
        }
        let stds: Vec<f64> = m2.iter().map(|s| (s / n as f64).sqrt()).collect();
        let kept_features: Vec<usize> = (0..dim)
            .filter(|&j| {
                let range = maxs[j] - mins[j];
                range > 0.0 && stds[j] / range >= MIN_FEATURE_STD
            })
            .collect();
        if kept_features.is_empty() {
            return Err(HarnessError::Runtime(
                "every feature is constant after normalization".into(),
            ));
        }
        let mut stats = Self {
            mins,
            maxs,
            means,
            stds,
            kept_features,
            norm_scale: 1.0,
        };
        let max_norm = queries
            .iter()
            .flat_map(|q| q.docs.iter())
            .map(|d| l2(&stats.scale_features(&d.features)))
            .fold(0.0, f64::max);
        if max_norm == 0.0 {
            return Err(HarnessError::Runtime("every document is zero after normalization".into()));
        }
        stats.norm_scale = max_norm;
        Ok(stats)
    }

    /// Standard deviation of original column `j` after min-max scaling.
    pub fn scaled_std(&self, j: usize) -> f64 {
        let range = self.maxs[j] - self.mins[j];
        if range > 0.0 {
            self.stds[j] / range
        } else {
            0.0
        }
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    fn scale_features(&self, x: &[f64]) -> Vec<f64> {
        self.kept_features
            .iter()
            .map(|&j| ((x[j] - self.mins[j]) / (self.maxs[j] - self.mins[j])).clamp(0.0, 1.0))
            .collect()
    }

    /// Min-max scale, keep surviving columns, divide by the global scale and
    /// clip the norm at 1 (only needed for splits other than the fitting one).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.scale_features(x);
        z.iter_mut().for_each(|v| *v /= self.norm_scale);
        let n = l2(&z);
        if n > 1.0 {
            z.iter_mut().for_each(|v| *v /= n);
        }
        z
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| HarnessError::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Normalizes `queries` with `stats`, or with statistics fitted on `queries`
/// when none are given. Returns the transformed queries and the statistics.
pub fn normalize_and_filter(
    queries: &[LetorQuery],
    stats: Option<&NormalizationStats>,
) -> Result<(Vec<LetorQuery>, NormalizationStats)> {
    if queries.is_empty() {
        return Err(HarnessError::Runtime("no queries to normalize".into()));
    }
    let stats = match stats {
        Some(s) => {
            let dim = queries[0].dim();
            if s.dim() != dim {
                return Err(HarnessError::Runtime(format!(
                    "stats cover {} features but the data has {dim}",
                    s.dim()
                )));
            }
            s.clone()
        }
        None => NormalizationStats::fit(queries)?,
    };
    let out = queries
        .iter()
        .map(|q| LetorQuery {
            query_id: q.query_id,
            docs: q
                .docs
                .iter()
                .map(|d| LetorDoc {
                    relevance: d.relevance,
                    features: stats.apply(&d.features),
                })
                .collect(),
        })
        .collect();
    Ok((out, stats))
}

/// Logistic-kind instance with attraction `γ·rel/4` per document. Returns
/// `None` (with a warning) for queries with fewer than `K` documents.
pub fn query_to_instance(query: &LetorQuery, list_len: usize, gamma: f64) -> Result<Option<BanditInstance>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(HarnessError::Config(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if query.docs.len() < list_len {
        warn!(
            "skipping query {}: {} documents < K = {list_len}",
            query.query_id,
            query.docs.len()
        );
        return Ok(None);
    }
    let means: Vec<f64> = query
        .docs
        .iter()
        .map(|d| gamma * d.relevance as f64 / MAX_RELEVANCE as f64)
        .collect();
    let features = FeatureMatrix::from_rows(query.docs.iter().map(|d| d.features.clone()).collect())?;
    let prior = PriorSpec::matched_to_means(&means)?;
    Ok(Some(BanditInstance::contextual(
        InstanceKind::Logistic,
        features,
        means,
        None,
        list_len,
        Some(prior),
    )?))
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub gamma: f64,
    pub list_len: usize,
    pub limit: Option<usize>,
    pub strict: bool,
    /// Statistics from another split; fitted on the input when absent.
    pub stats: Option<PathBuf>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            gamma: 0.8,
            list_len: 10,
            limit: None,
            strict: false,
            stats: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub queries: usize,
    pub documents: usize,
    pub instances_written: usize,
    pub skipped_queries: usize,
    pub kept_features: usize,
    pub dropped_features: usize,
}

/// Parses, normalizes and writes one instance file per query plus the
/// statistics sidecar into `output_dir`.
pub fn ingest(input: &Path, output_dir: &Path, opts: &IngestOptions) -> Result<IngestReport> {
    let queries = parse_svmlight(
        input,
        ParseOptions {
            strict: opts.strict,
            limit: opts.limit,
        },
    )?;
    let given = opts.stats.as_deref().map(NormalizationStats::read_json).transpose()?;
    let (normalized, stats) = normalize_and_filter(&queries, given.as_ref())?;
    std::fs::create_dir_all(output_dir).map_err(|e| HarnessError::io(output_dir, e))?;
    stats.write_json(&output_dir.join(STATS_FILE_NAME))?;
    let mut written = 0;
    let mut skipped = 0;
    for q in &normalized {
        match query_to_instance(q, opts.list_len, opts.gamma)? {
            Some(inst) => {
                write_instance(&output_dir.join(format!("query_{:010}.json", q.query_id)), &inst)?;
                written += 1;
            }
            None => skipped += 1,
        }
    }
    let report = IngestReport {
        queries: queries.len(),
        documents: queries.iter().map(|q| q.docs.len()).sum(),
        instances_written: written,
        skipped_queries: skipped,
        kept_features: stats.kept_features.len(),
        dropped_features: stats.dim() - stats.kept_features.len(),
    };
    info!("{report:?}");
    Ok(report)
}
