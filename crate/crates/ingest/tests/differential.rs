//! Engine vs. row-scan oracle on random tables and queries, through the
//! full CSV import path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdrill_core::{Engine, ExecOptions, ShardOptions};
use pdrill_ingest::csv_import::{read_csv, write_csv};
use pdrill_ingest::oracle::{oracle_sql, rows_match, OracleTable};
use pdrill_ingest::synth::{random_query, random_schema, random_table};
use pdrill_ingest::{build_shards, ImportConfig};

fn declared() -> Vec<(String, pdrill_core::ValueKind)> {
    random_schema()
        .fields
        .iter()
        .map(|f| (f.name.clone(), f.kind))
        .collect()
}

#[test]
fn engine_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1ff);
    let fields = ["s1", "s2", "n1", "d", "ts", "f"];
    let mut failures = Vec::new();
    let (mut errors, mut nonempty) = (0, 0);
    for case in 0..300 {
        let t = random_table(&mut rng, 600);
        let mut csv = Vec::new();
        write_csv(&t, &mut csv).unwrap();
        let parsed = read_csv(csv.as_slice(), "t", &declared()).unwrap();
        let nfields = rng.gen_range(0..=3);
        let cfg = ImportConfig {
            table: "t".into(),
            partition_fields: fields.iter().take(nfields).map(|s| s.to_string()).collect(),
            max_chunk_rows: rng.gen_range(1..200),
            shard_rows: rng.gen_range(50..700),
            seed: case,
            shard: ShardOptions {
                trie_strings: rng.gen_bool(0.5),
                parallel: true,
            },
            ..Default::default()
        };
        let engine = Engine::new(ExecOptions::default());
        engine.add_table("t", build_shards(&parsed, &cfg).unwrap()).unwrap();
        let oracle = OracleTable::from_table(&read_csv(csv.as_slice(), "t", &declared()).unwrap());
        for _ in 0..3 {
            let sql = random_query(&mut rng, &t);
            let want = oracle_sql(&oracle, &sql);
            let got = engine.query(&sql);
            match (&got, &want) {
                (Ok(g), Ok(w)) if rows_match(&g.rows, &w.rows, 1e-9) => nonempty += usize::from(!g.rows.is_empty()),
                (Err(_), Err(_)) => errors += 1,
                _ => failures.push(format!(
                    "case {case}: {sql}\n  engine: {:?}\n  oracle: {:?}",
                    got.map(|r| r.rows),
                    want.map(|r| r.rows)
                )),
            }
        }
    }
    // the generator should mostly produce valid, selective queries
    assert!(errors < 30, "{errors} queries were rejected by both");
    assert!(nonempty > 600, "only {nonempty} non-empty results");
    assert!(
        failures.is_empty(),
        "{} mismatches:\n{}",
        failures.len(),
        failures[..failures.len().min(8)].join("\n")
    );
}
