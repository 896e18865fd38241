//! Writes the packaged Web30K-format sample used by the ingestion tests.
//!
//! The documents are synthetic. Their shape follows the public feature list:
//! five text streams with 25 statistics each, then eleven document-level
//! signals. A few stream statistics never fire and stay constant, many columns
//! are driven by shared latent factors, and the grades are skewed towards 0.
//!
//! ```text
//! cargo run -p cascade-bandits --example make_web30k_sample -- [OUT] [SEED]
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use flate2::write::GzEncoder;
use flate2::Compression;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};

const NUM_QUERIES: usize = 200;
const NUM_FEATURES: usize = 136;
const STREAMS: usize = 5;
const STATS_PER_STREAM: usize = 25;
const DOCS_PER_QUERY: std::ops::RangeInclusive<usize> = 10..=40;

/// 0-based columns that are zero for every document (a stream that is absent).
const CONSTANT_COLUMNS: [usize; 6] = [26, 31, 36, 41, 46, 51];

/// Thresholds on the grade score; the marginal is roughly 52/31/13/3/1 percent.
const GRADE_CUTS: [f64; 4] = [0.056, 1.067, 1.958, 2.601];

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data/web30k_sample.txt.gz")));
    let seed: u64 = args.next().map_or(30_136, |s| s.parse().expect("seed must be an integer"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Column loadings on (relevance, popularity, length) plus own noise.
    let loadings: Vec<[f64; 4]> = (0..NUM_FEATURES)
        .map(|_| {
            [
                rng.random_range(0.0..1.0),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(0.2..1.0),
            ]
        })
        .collect();
    let doc_len = LogNormal::new(6.0, 0.8).unwrap();

    let file = File::create(&out)?;
    let mut w = BufWriter::new(GzEncoder::new(file, Compression::best()));
    let mut qid = 0u64;
    for _ in 0..NUM_QUERIES {
        qid += rng.random_range(1..=30);
        let query_terms = rng.random_range(1..=5) as f64;
        let query_shift = 0.4 * normal(&mut rng);
        let idf: Vec<f64> = (0..STREAMS).map(|_| rng.random_range(1.0..12.0)).collect();
        let n_docs = rng.random_range(DOCS_PER_QUERY);
        for _ in 0..n_docs {
            let rel = query_shift + normal(&mut rng);
            let pop = normal(&mut rng);
            let len_factor = normal(&mut rng);
            let score = 0.9 * rel + 0.5 * normal(&mut rng);
            let grade = GRADE_CUTS.iter().filter(|&&c| score >= c).count();

            let mut x = vec![0.0; NUM_FEATURES];
            for (j, v) in x.iter_mut().enumerate() {
                if CONSTANT_COLUMNS.contains(&j) {
                    continue;
                }
                let [a, b, c, e] = loadings[j];
                let z = a * rel + b * pop + c * len_factor + e * normal(&mut rng);
                *v = if j < STREAMS * STATS_PER_STREAM {
                    let stream = j % STREAMS;
                    match j / STREAMS {
                        // covered query terms and their ratio
                        0 => (query_terms * sigmoid(z)).round(),
                        1 => (sigmoid(z) * 4.0).round() / 4.0,
                        // stream length
                        2 => (doc_len.sample(&mut rng) * (0.5 + stream as f64)).round(),
                        // idf is a property of the query
                        3 => idf[stream],
                        // term-frequency style counts
                        4..=8 => (z.exp() * 2.0).floor(),
                        // normalized tf ratios in [0, 1]
                        9..=13 => sigmoid(z - 1.0),
                        // tf-idf and the retrieval scores
                        _ => (idf[stream] * (z + 1.5)).max(0.0),
                    }
                } else {
                    match j - STREAMS * STATS_PER_STREAM {
                        0 => (10.0 * sigmoid(z)).round(),
                        1 => (doc_len.sample(&mut rng) / 10.0).round(),
                        2 | 3 => (z.exp() * 30.0).round(),
                        4 => (z.exp() * 1e3).round(),
                        _ => sigmoid(z) * 100.0,
                    }
                };
            }

            write!(w, "{grade} qid:{qid}")?;
            for (j, v) in x.iter().enumerate() {
                if *v != 0.0 {
                    write!(w, " {}:{}", j + 1, round_sig(*v))?;
                }
            }
            writeln!(w)?;
        }
    }
    w.into_inner().map_err(|e| e.into_error())?.finish()?;
    println!("wrote {NUM_QUERIES} queries to {}", out.display());
    Ok(())
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Four significant digits, printed without trailing zeros.
fn round_sig(v: f64) -> f64 {
    let text = format!("{v:.3e}");
    text.parse().unwrap()
}
