use cascade_bandits::output::{ResultRow, SweepRow, CSV_HEADER};
use cascade_bandits::{ResultTable, SweepTable};
use proptest::prelude::*;

fn row(algorithm: &str, round: u64, mean: f64, stderr: f64, n_reps: usize) -> ResultRow {
    ResultRow {
        algorithm: algorithm.into(),
        round,
        mean_cum_regret: mean,
        stderr,
        n_reps,
    }
}

fn sample_table() -> ResultTable {
    ResultTable {
        rows: vec![
            row("gts", 100, 3.5, 0.25, 4),
            row("gts", 200, 5.125, 0.5, 4),
            row("ts-beta", 100, 1.0 / 3.0, 0.1, 4),
            row("ts-beta", 200, 0.7, 0.125, 4),
        ],
        ..Default::default()
    }
}

#[test]
fn csv_header_is_exact() {
    assert_eq!(CSV_HEADER, "algorithm,round,mean_cum_regret,stderr,n_reps");
    let csv = sample_table().to_csv();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn csv_rejects_bad_input() {
    assert!(ResultTable::from_csv("round,algorithm\n").is_err());
    assert!(ResultTable::from_csv(&format!("{CSV_HEADER}\ngts,1,2\n")).is_err());
    assert!(ResultTable::from_csv(&format!("{CSV_HEADER}\ngts,x,2,0,1\n")).is_err());
}

#[test]
fn csv_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/out.csv");
    let table = sample_table();
    table.write_csv(&path).unwrap();
    assert_eq!(ResultTable::read_csv(&path).unwrap().rows, table.rows);
}

#[test]
fn plot_data_has_one_block_per_algorithm() {
    let text = sample_table().to_plot_data();
    let blocks: Vec<&str> = text.split("\n\n\n").collect();
    assert_eq!(blocks.len(), 2);
    assert!(blocks[0].starts_with("# algorithm: gts"));
    let data: Vec<Vec<f64>> = blocks[1]
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(data, vec![vec![100.0, 1.0 / 3.0, 0.1], vec![200.0, 0.7, 0.125]]);
}

#[test]
fn svg_is_well_formed() {
    let svg = sample_table().to_svg();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let lines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
    assert_eq!(lines, 2);

    // names that need escaping and an empty table
    let odd = ResultTable {
        rows: vec![row("a<&>\"b", 1, 0.0, 0.0, 1)],
        ..Default::default()
    };
    roxmltree::Document::parse(&odd.to_svg()).unwrap();
    roxmltree::Document::parse(&ResultTable::default().to_svg()).unwrap();

    let sweep = SweepTable {
        rows: (0..=8)
            .step_by(2)
            .flat_map(|c| {
                ["gts", "ts-beta"].map(|a| SweepRow {
                    c,
                    algorithm: a.into(),
                    final_mean_cum_regret: f64::from(c) * 2.0,
                    stderr: 0.5,
                    n_reps: 10,
                })
            })
            .collect(),
        ..Default::default()
    };
    roxmltree::Document::parse(&sweep.to_svg()).unwrap();
    let csv = sweep.to_csv();
    assert_eq!(csv.lines().next(), Some("c,algorithm,final_mean_cum_regret,stderr,n_reps"));
    assert_eq!(csv.lines().count(), 11);
}

fn table_strategy() -> impl Strategy<Value = ResultTable> {
    let name = prop::sample::select(vec!["gts", "lints", "glmts", "cascade-klucb"]);
    prop::collection::vec((name, 1u64..100_000, any::<f64>(), 0.0f64..1e6, 1usize..500), 0..40).prop_map(|rows| {
        ResultTable {
            rows: rows
                .into_iter()
                .map(|(a, r, m, s, n)| row(a, r, if m.is_finite() { m } else { 0.0 }, s, n))
                .collect(),
            ..Default::default()
        }
    })
}

proptest! {
    #[test]
    fn csv_round_trips_exactly(table in table_strategy()) {
        let back = ResultTable::from_csv(&table.to_csv()).unwrap();
        prop_assert_eq!(back.rows.len(), table.rows.len());
        for (a, b) in back.rows.iter().zip(&table.rows) {
            prop_assert_eq!(&a.algorithm, &b.algorithm);
            prop_assert_eq!(a.round, b.round);
            prop_assert_eq!(a.mean_cum_regret.to_bits(), b.mean_cum_regret.to_bits());
            prop_assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
            prop_assert_eq!(a.n_reps, b.n_reps);
        }
    }

    #[test]
    fn svg_parses_for_any_table(table in table_strategy()) {
        prop_assert!(roxmltree::Document::parse(&table.to_svg()).is_ok());
    }
}
