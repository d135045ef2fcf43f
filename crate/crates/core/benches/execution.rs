//! Parallel vs sequential execution of the same group-by queries.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdrill_core::partition::{build_shard, PartitionSpec};
use pdrill_core::{Engine, ExecOptions, Field, Schema, ShardOptions, Table, Value, ValueKind};

fn table(rows: usize) -> Table {
    let schema = Schema::new(
        "data",
        vec![
            Field::new("country", ValueKind::Str, false),
            Field::new("name", ValueKind::Str, false),
            Field::new("latency", ValueKind::I64, false),
        ],
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data = (0..rows)
        .map(|_| {
            let c = rng.gen_range(0..40u32);
            vec![
                Value::from(format!("c{c:02}")),
                Value::from(format!("host-{c:02}-{}", rng.gen_range(0..500u32))),
                Value::I64(rng.gen_range(0..10_000)),
            ]
        })
        .collect();
    Table::from_rows(schema, data).unwrap()
}

fn engine(t: &Table, parallel: bool) -> Engine {
    let spec = PartitionSpec::new(["country", "name"], 10_000);
    let shard = build_shard(0, t, Some(&spec), ShardOptions::default()).unwrap();
    let e = Engine::new(ExecOptions {
        parallel,
        use_result_cache: false,
        ..Default::default()
    });
    e.add_table("data", vec![shard]).unwrap();
    e
}

fn bench(c: &mut Criterion) {
    let t = table(400_000);
    let queries = [
        (
            "full_scan",
            "SELECT name, COUNT(*) AS n, SUM(latency) FROM data GROUP BY name ORDER BY n DESC LIMIT 10",
        ),
        (
            "restricted",
            "SELECT name, AVG(latency) FROM data WHERE country IN ('c01', 'c07') GROUP BY name",
        ),
    ];
    let mut g = c.benchmark_group("execution");
    g.sample_size(10);
    for parallel in [false, true] {
        let e = engine(&t, parallel);
        let mode = if parallel { "rayon" } else { "sequential" };
        for (name, sql) in queries {
            g.bench_with_input(BenchmarkId::new(name, mode), sql, |b, sql| {
                b.iter(|| e.query(sql).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
