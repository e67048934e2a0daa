use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use swaptest_bench::{desk_model, scans};
use swaptest_core::explain::{occlusion_map, swap_map};
use swaptest_core::model::{backward, forward, Mode};
use swaptest_core::phantom::generate_scans;
use swaptest_core::volume::copy_patch;
use swaptest_core::{Covariates, ExplainConfig, PhantomConfig};

fn network(c: &mut Criterion) {
    let model = desk_model();
    let scan = &scans(1)[0];
    let input = model.encode_volume(&scan.volume).unwrap();
    let cov = model.encode_covariates(Covariates::from(scan));
    let plan = model.plan().clone();
    c.bench_function("forward_desk_alexnet3d", |b| {
        b.iter(|| forward(&plan, model.params(), &input, &cov, Mode::Eval, 0).unwrap().logits)
    });
    c.bench_function("forward_backward_desk_alexnet3d", |b| {
        let mut grad = vec![0.0f32; plan.param_count];
        b.iter(|| {
            let cache = forward(&plan, model.params(), &input, &cov, Mode::Train, 3).unwrap();
            backward(&plan, model.params(), &cache, 1, &mut grad).unwrap();
        })
    });
}

fn heatmaps(c: &mut Criterion) {
    let model = desk_model();
    let pool = scans(3);
    let input = &pool[5];
    let refs: Vec<_> = pool[..3].iter().collect();
    let cfg = ExplainConfig::default();
    let mut group = c.benchmark_group("heatmap_32");
    group.sample_size(10);
    group.bench_function("occlusion", |b| {
        b.iter(|| occlusion_map(&model, &input.volume, input.into(), &cfg).unwrap())
    });
    group.bench_function("swap_3_references", |b| {
        b.iter(|| swap_map(&model, &input.volume, input.into(), &refs, &cfg).unwrap())
    });
    group.finish();
}

fn data(c: &mut Criterion) {
    let pool = scans(1);
    c.bench_function("copy_patch_8", |b| {
        b.iter(|| copy_patch(&pool[0].volume, &pool[1].volume, [8, 8, 8], 8).unwrap())
    });
    let cfg = PhantomConfig { subjects_per_class: 2, visits: [1, 1], ..PhantomConfig::default() };
    c.bench_function("phantom_4_subjects", |b| {
        b.iter_batched(|| cfg.clone(), |cfg| generate_scans(&cfg).unwrap(), BatchSize::SmallInput)
    });
}

criterion_group!(benches, network, heatmaps, data);
criterion_main!(benches);
