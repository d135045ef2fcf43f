use proptest::prelude::*;

use pdrill_core::cache::CacheConfig;
use pdrill_core::partition::{build_shard, reorder_rows, PartitionSpec};
use pdrill_core::store::{decode_shard, encode_shard};
use pdrill_core::{Engine, ExecOptions, Field, Schema, ShardOptions, Table, Value, ValueKind};

const QUERIES: [&str; 5] = [
    "SELECT a, COUNT(*), SUM(n), MIN(b), MAX(n) FROM t GROUP BY a",
    "SELECT b, AVG(n) FROM t WHERE a IN ('x', 'z') GROUP BY b ORDER BY b DESC",
    "SELECT a, b, COUNT(*) AS c FROM t WHERE n > 3 GROUP BY a, b ORDER BY c DESC, a LIMIT 4",
    "SELECT COUNT(*), SUM(n) FROM t WHERE a NOT IN ('y') AND b <> 'q2'",
    "SELECT n, COUNT(b) FROM t WHERE b IS NOT NULL GROUP BY n",
];

fn table(rows: &[(u8, Option<u8>, i64)]) -> Table {
    let schema = Schema::new(
        "t",
        vec![
            Field::new("a", ValueKind::Str, false),
            Field::new("b", ValueKind::Str, true),
            Field::new("n", ValueKind::I64, false),
        ],
    )
    .unwrap();
    let rows = rows
        .iter()
        .map(|&(a, b, n)| {
            vec![
                Value::from(["x", "y", "z", "w"][a as usize % 4]),
                b.map_or(Value::Null, |b| Value::Str(format!("q{}", b % 5))),
                Value::I64(n),
            ]
        })
        .collect();
    Table::from_rows(schema, rows).unwrap()
}

fn answers(t: &Table, spec: Option<&PartitionSpec>, cached: bool) -> Vec<Vec<Vec<Value>>> {
    let mut e = Engine::new(ExecOptions::default());
    if cached {
        e = e.with_element_cache(CacheConfig::two_q(64));
    }
    e.add_table("t", vec![build_shard(0, t, spec, ShardOptions::default()).unwrap()])
        .unwrap();
    // twice, so the second pass can come from caches
    (0..2)
        .flat_map(|_| QUERIES.iter().map(|q| e.query(q).unwrap().rows))
        .collect()
}

fn rows_strategy() -> impl Strategy<Value = Vec<(u8, Option<u8>, i64)>> {
    prop::collection::vec((0u8..4, prop::option::of(0u8..5), -5i64..10), 1..120)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn results_ignore_chunking_and_row_order(rows in rows_strategy(), threshold in 1usize..40) {
        let t = table(&rows);
        let base = answers(&t, None, false);
        for fields in [vec!["a"], vec!["a", "b"], vec!["n", "a"]] {
            let spec = PartitionSpec::new(fields, threshold);
            prop_assert_eq!(&answers(&t, Some(&spec), false), &base);
            prop_assert_eq!(&answers(&t, Some(&spec), true), &base);
        }
        let reversed = t.permuted(&(0..t.num_rows()).rev().collect::<Vec<_>>());
        prop_assert_eq!(&answers(&reversed, Some(&PartitionSpec::new(["b"], 2)), false), &base);
    }

    #[test]
    fn shards_roundtrip_and_keep_rows_aligned(rows in rows_strategy(), threshold in 1usize..40, trie in any::<bool>()) {
        let t = table(&rows);
        let spec = PartitionSpec::new(["a", "n"], threshold);
        let opts = ShardOptions { trie_strings: trie, parallel: false };
        let shard = build_shard(3, &t, Some(&spec), opts).unwrap();
        let bytes = encode_shard(&shard).unwrap();
        let back = decode_shard(&bytes).unwrap();
        prop_assert_eq!(encode_shard(&back).unwrap(), bytes);
        let expect = t.permuted(&reorder_rows(&t, &spec).unwrap());
        prop_assert_eq!(back.to_table().unwrap().columns, expect.columns);
        prop_assert!(shard.chunk_rows().iter().all(|&n| n > 0));
        prop_assert_eq!(shard.chunk_rows().iter().map(|&n| n as usize).sum::<usize>(), t.num_rows());
    }
}
