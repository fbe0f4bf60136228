use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use nbrecon_bench::{check_inputs, code, ensemble, frame, rng};
use nbrecon_core::code::{check_count, peg_construct, realize_degree_sequences};
use nbrecon_core::decoder::check_to_var;
use nbrecon_core::design::Mcde;
use nbrecon_core::{ChannelModel, Decoder, DecoderConfig, GfTable};

fn check_node(c: &mut Criterion) {
    let mut g = c.benchmark_group("check_to_var");
    for (q, degree) in [(8, 8), (8, 16), (64, 8), (256, 4)] {
        let gf = GfTable::new(q).unwrap();
        let (msgs, weights) = check_inputs(q, degree, 1);
        g.bench_with_input(BenchmarkId::new(format!("q{q}"), degree), &degree, |b, _| {
            b.iter(|| check_to_var(black_box(&msgs), &weights, 3, 5, &gf, 30.0).unwrap())
        });
    }
    g.finish();
}

fn decode_frame(c: &mut Criterion) {
    let built = code("r050", 8, 3000, 7);
    let mut g = c.benchmark_group("decode_n3000_r050");
    g.sample_size(20);
    for qber in [0.15, 0.18] {
        let f = frame(&built.code, qber, 3);
        let mut dec = Decoder::new(&built.code, DecoderConfig::default()).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(qber), &qber, |b, _| {
            b.iter(|| dec.decode(&f.syndrome, black_box(&f.y), &f.channel).unwrap())
        });
    }
    g.finish();
}

fn mcde_step(c: &mut Criterion) {
    let dist = ensemble("r050");
    let channel = ChannelModel::new(8, 0.22).unwrap();
    let mut g = c.benchmark_group("mcde_step");
    g.sample_size(20);
    g.bench_function("r050_pool20000", |b| {
        let mut state = Mcde::new(&dist, &channel, 20_000, 30.0, 1).unwrap();
        b.iter(|| state.step().unwrap())
    });
    g.finish();
}

fn peg(c: &mut Criterion) {
    let dist = ensemble("r050");
    let mut g = c.benchmark_group("peg");
    g.sample_size(10);
    for n in [1000, 3000] {
        let m = check_count(n, dist.design_rate()).unwrap();
        let seqs = realize_degree_sequences(&dist, n, m, &mut rng(2)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| peg_construct(&seqs.var, &seqs.chk, &mut rng(3)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, check_node, decode_frame, mcde_step, peg);
criterion_main!(benches);
