use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use frac_kansa::bench::{BenchmarkCase, CaseId};
use frac_kansa::geometry::NodeMode;
use frac_kansa::operator::RbfBasis;
use frac_kansa::par::Execution;
use frac_kansa::solver::assemble;

fn assembly(c: &mut Criterion) {
    let cases = [
        ("example2_rect", BenchmarkCase::new(CaseId::Example2Rect)),
        (
            "app_continuous_200",
            BenchmarkCase {
                nodes: NodeMode::DiskRings { ring_step: 0.1, total: 200 },
                ..BenchmarkCase::new(CaseId::AppContinuous)
            },
        ),
    ];
    let mut group = c.benchmark_group("assembly");
    group.sample_size(10);
    for (label, case) in cases {
        let domain = case.domain();
        let nodes = case.generate_nodes().unwrap();
        let basis = RbfBasis::new(nodes.all(), case.shape_c).unwrap();
        let problem = case.problem().unwrap();
        let rules = problem.rule_book(case.quad_points).unwrap();
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, label), &exec, |b, &exec| {
                b.iter(|| assemble(&problem, &domain, &nodes, &basis, &rules, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, assembly);
criterion_main!(benches);
