use std::io::Write;
use std::path::Path;

use cascade_bandits::core::{best_action, expected_cascade_reward};
use cascade_bandits::instance_io::read_instances;
use cascade_bandits::letor::{
    ingest, normalize_and_filter, parse_svmlight, parse_svmlight_reader, query_to_instance, write_svmlight,
    IngestOptions, LetorDoc, LetorQuery, NormalizationStats, ParseOptions, MIN_FEATURE_STD, STATS_FILE_NAME,
};
use flate2::write::GzEncoder;
use flate2::Compression;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn parse_text(text: &str) -> Vec<LetorQuery> {
    parse_svmlight_reader(text.as_bytes(), Path::new("<mem>"), ParseOptions::default()).unwrap()
}

/// `n` queries of 3 to 12 documents; column 2 is constant and about a third
/// of the entries are zero.
fn synthetic_queries(n: usize, dim: usize, seed: u64) -> Vec<LetorQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut qid = 0;
    (0..n)
        .map(|_| {
            qid += rng.random_range(1..5u64);
            let docs = (0..rng.random_range(3..=12))
                .map(|_| LetorDoc {
                    relevance: rng.random_range(0..=4),
                    features: (0..dim)
                        .map(|j| match j {
                            2 => 1.5,
                            _ if rng.random_bool(0.3) => 0.0,
                            _ => rng.random_range(-5.0..50.0),
                        })
                        .collect(),
                })
                .collect();
            LetorQuery { query_id: qid, docs }
        })
        .collect()
}

fn histogram(queries: &[LetorQuery]) -> [usize; 5] {
    let mut h = [0; 5];
    for q in queries {
        for (a, b) in h.iter_mut().zip(q.relevance_histogram()) {
            *a += b;
        }
    }
    h
}

#[test]
fn write_then_parse_is_identity_on_100_queries() {
    let queries = synthetic_queries(100, 8, 1);
    let mut buf = Vec::new();
    write_svmlight(&queries, &mut buf).unwrap();
    let back = parse_text(std::str::from_utf8(&buf).unwrap());
    assert_eq!(back, queries);
}

#[test]
fn gzip_input_matches_plain_input() {
    let dir = tempfile::tempdir().unwrap();
    let queries = synthetic_queries(20, 5, 2);
    let mut plain = Vec::new();
    write_svmlight(&queries, &mut plain).unwrap();
    std::fs::write(dir.path().join("a.txt"), &plain).unwrap();
    let mut gz = GzEncoder::new(std::fs::File::create(dir.path().join("a.txt.gz")).unwrap(), Compression::fast());
    gz.write_all(&plain).unwrap();
    gz.finish().unwrap();
    let a = parse_svmlight(&dir.path().join("a.txt"), ParseOptions::default()).unwrap();
    let b = parse_svmlight(&dir.path().join("a.txt.gz"), ParseOptions::default()).unwrap();
    assert_eq!(a, b);
    let limited = parse_svmlight(&dir.path().join("a.txt.gz"), ParseOptions { strict: false, limit: Some(7) }).unwrap();
    assert_eq!(limited[..], a[..7]);
}

#[test]
fn normalization_examples() {
    let queries = synthetic_queries(30, 6, 3);
    let (out, stats) = normalize_and_filter(&queries, None).unwrap();
    assert_eq!(stats.kept_features, vec![0, 1, 3, 4, 5]);
    assert!(stats.scaled_std(2) < MIN_FEATURE_STD);
    let norms: Vec<f64> = out
        .iter()
        .flat_map(|q| q.docs.iter())
        .map(|d| {
            assert!(d.features.iter().all(|v| v.is_finite() && *v >= 0.0));
            d.features.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();
    let max = norms.iter().copied().fold(0.0, f64::max);
    assert!((max - 1.0).abs() < 1e-12, "{max}");

    // {0, 10} maps to {0, 1} before the global rescale
    let two = parse_text("1 qid:1 1:0 2:4\n0 qid:1 1:10 2:4\n");
    let (out, _) = normalize_and_filter(&two, None).unwrap();
    assert_eq!(out[0].docs[0].features, vec![0.0]);
    assert_eq!(out[0].docs[1].features, vec![1.0]);
    assert!(normalize_and_filter(&[], None).is_err());
}

#[test]
fn reapplying_the_same_statistics_is_idempotent() {
    let queries = synthetic_queries(40, 6, 4);
    let (out, stats) = normalize_and_filter(&queries, None).unwrap();
    let (again, same) = normalize_and_filter(&queries, Some(&stats)).unwrap();
    assert_eq!(again, out);
    assert_eq!(same, stats);

    // statistics survive the sidecar file and apply to another split
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(STATS_FILE_NAME);
    stats.write_json(&path).unwrap();
    let loaded = NormalizationStats::read_json(&path).unwrap();
    assert_eq!(loaded, stats);
    let test_split = synthetic_queries(10, 6, 5);
    let (applied, _) = normalize_and_filter(&test_split, Some(&loaded)).unwrap();
    for d in applied.iter().flat_map(|q| q.docs.iter()) {
        assert!(d.features.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12);
    }
    let wrong_dim = synthetic_queries(3, 4, 6);
    assert!(normalize_and_filter(&wrong_dim, Some(&loaded)).is_err());
}

#[test]
fn relevance_mapping_and_clamped_prior() {
    let q = LetorQuery {
        query_id: 9,
        docs: (0..=4)
            .map(|r| LetorDoc {
                relevance: r,
                features: vec![0.1 * f64::from(r), 0.2],
            })
            .collect(),
    };
    let inst = query_to_instance(&q, 2, 0.8).unwrap().unwrap();
    let means = inst.attraction_means();
    for (r, &m) in means.iter().enumerate() {
        assert!((m - 0.8 * r as f64 / 4.0).abs() < 1e-15);
    }
    assert_eq!(means[4], 0.8);
    let prior = inst.prior().unwrap();
    assert!((prior.alphas()[0] - 10.0 * 0.01 / 0.99).abs() < 1e-12);
    assert_eq!(prior.betas()[0], 10.0);
    assert!((prior.mean(4) - 0.8).abs() < 1e-12);
    assert!(query_to_instance(&q, 6, 0.8).unwrap().is_none());
    assert!(query_to_instance(&q, 2, 0.0).is_err());
    assert!(query_to_instance(&q, 2, 1.5).is_err());
}

#[test]
fn relevance_optimal_list_matches_enumeration() {
    let rels = [0u8, 3, 1, 4, 2, 0];
    let q = LetorQuery {
        query_id: 1,
        docs: rels.iter().map(|&r| LetorDoc { relevance: r, features: vec![0.5, 0.5] }).collect(),
    };
    let inst = query_to_instance(&q, 3, 0.8).unwrap().unwrap();
    let means = inst.attraction_means();
    let mut best = 0.0f64;
    for a in 0..6 {
        for b in 0..6 {
            for c in 0..6 {
                if a != b && b != c && a != c {
                    best = best.max(expected_cascade_reward(&[means[a], means[b], means[c]]).unwrap());
                }
            }
        }
    }
    let top = best_action(means, 3).unwrap();
    assert_eq!(top.items(), &[3, 1, 4]);
    let got = expected_cascade_reward(&top.items().iter().map(|&i| means[i]).collect::<Vec<_>>()).unwrap();
    assert!((got - best).abs() < 1e-15);
    // 1 − (0.2)(0.4)(0.6)
    assert!((best - 0.952).abs() < 1e-12);
}

#[test]
fn ingest_preserves_documents_and_grades() {
    let dir = tempfile::tempdir().unwrap();
    let queries = synthetic_queries(25, 7, 7);
    let input = dir.path().join("train.txt");
    let mut buf = Vec::new();
    write_svmlight(&queries, &mut buf).unwrap();
    std::fs::write(&input, buf).unwrap();
    let out = dir.path().join("out");
    let opts = IngestOptions {
        list_len: 3,
        ..IngestOptions::default()
    };
    let report = ingest(&input, &out, &opts).unwrap();
    assert_eq!(report.queries, 25);
    assert_eq!(report.documents, queries.iter().map(|q| q.docs.len()).sum::<usize>());
    assert_eq!((report.kept_features, report.dropped_features), (6, 1));
    assert_eq!(report.instances_written + report.skipped_queries, 25);
    assert_eq!(report.skipped_queries, 0);

    let instances = read_instances(&out, None).unwrap();
    assert_eq!(instances.len(), 25);
    let mut h = [0usize; 5];
    for inst in &instances {
        assert_eq!(inst.dim(), 6);
        assert!(inst.features().unwrap().max_row_norm() <= 1.0 + 1e-12);
        for &m in inst.attraction_means() {
            h[(m / 0.8 * 4.0).round() as usize] += 1;
        }
    }
    assert_eq!(h, histogram(&queries));
    assert!(out.join(STATS_FILE_NAME).is_file());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parsing_ignores_comments_and_spacing(
        seed in any::<u64>(),
        pad in prop::sample::select(vec![" ", "  ", "\t", " \t "]),
        comment in "[a-z =0-9]{0,12}",
    ) {
        let queries = synthetic_queries(3, 4, seed);
        let mut buf = Vec::new();
        write_svmlight(&queries, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let noisy: String = text
            .lines()
            .map(|l| format!("{pad}{}{pad}#{comment}\n\n", l.replace(' ', pad)))
            .collect();
        prop_assert_eq!(parse_text(&noisy), queries);
    }

    #[test]
    fn pipeline_keeps_counts_and_grades(seed in any::<u64>()) {
        let queries = synthetic_queries(8, 5, seed);
        let (out, _) = normalize_and_filter(&queries, None).unwrap();
        prop_assert_eq!(histogram(&out), histogram(&queries));
        for (a, b) in out.iter().zip(&queries) {
            prop_assert_eq!(a.query_id, b.query_id);
            prop_assert_eq!(a.docs.len(), b.docs.len());
        }
    }
}
