use criterion::{black_box, criterion_group, criterion_main, Criterion};
use polycycle::analysis::{analyze, polycycle_return};
use polycycle::calculus::compose_pair;
use polycycle::cyclicity::assess;
use polycycle::flow::ReturnMap;
use polycycle::{DulacExpansion, Model, Tolerances};
use polycycle_bench::{game, GAME_MODEL};

fn pipeline(c: &mut Criterion) {
    let model = game();
    let mu = model.defaults.clone();
    let tol = Tolerances::default();

    c.bench_function("parse game model", |b| b.iter(|| Model::parse(black_box(GAME_MODEL)).unwrap()));
    c.bench_function("analyze game", |b| b.iter(|| analyze(&model, black_box(&mu), &tol).unwrap()));
    let mut slow = c.benchmark_group("slow");
    slow.sample_size(10);
    slow.bench_function("assess game", |b| b.iter(|| assess(&model, black_box(&mu), &tol).unwrap()));
    let map = polycycle_return(&model, &mu, &tol).unwrap();
    slow.bench_function("numeric return at 1e-3", |b| b.iter(|| map.eval(black_box(1e-3)).unwrap()));
    slow.finish();

    let d1 = DulacExpansion::from_saddle(0.7, 1.3, Some(0.4), Some(-0.2));
    let d2 = DulacExpansion::from_saddle(1.6, 0.8, Some(-0.3), Some(0.5));
    c.bench_function("compose pair", |b| b.iter(|| compose_pair(black_box(&d1), black_box(&d2))));
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
