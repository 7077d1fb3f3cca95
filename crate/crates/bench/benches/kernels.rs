use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use waveunet::datapipe::resample_48k_to_16k;
use waveunet::metrics::{llr, ssnr, wss, FrameConfig};
use waveunet::model::{forward, forward_on_graph, register_params};
use waveunet::ndgrad::kernels::conv1d_forward;
use waveunet::{Graph, ModelParams, Tensor, WaveUNetConfig};
use waveunet_bench::{clip, pair, signal};

fn conv1d(c: &mut Criterion) {
    let mut group = c.benchmark_group("conv1d");
    let length = 4096;
    for (in_ch, out_ch, width) in [(1, 24, 15), (24, 48, 15), (48, 24, 5)] {
        let input = signal(in_ch * length, 1.0, 1);
        let kernel = signal(out_ch * in_ch * width, 0.1, 2);
        let bias = vec![0.0; out_ch];
        group.throughput(Throughput::Elements((in_ch * out_ch * width * length) as u64));
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{in_ch}x{out_ch}x{width}")),
            &input,
            |b, input| b.iter(|| conv1d_forward(black_box(input), in_ch, length, &kernel, &bias, out_ch, width)),
        );
    }
    group.finish();
}

fn network(c: &mut Criterion) {
    let mut group = c.benchmark_group("wave_u_net");
    group.sample_size(10);
    for layers in [4, 8] {
        let cfg = WaveUNetConfig::default().with_layers(layers);
        let params = ModelParams::init(cfg, 0).unwrap();
        let n = cfg.valid_length(16384);
        let x = Tensor::new(vec![1, n], signal(n, 0.5, 3)).unwrap();
        group.bench_function(BenchmarkId::new("forward", layers), |b| {
            b.iter(|| forward(&params, black_box(&x)).unwrap())
        });
        let target = Tensor::zeros(vec![2, n]);
        group.bench_function(BenchmarkId::new("forward_backward", layers), |b| {
            b.iter(|| {
                let mut g = Graph::new();
                let vars = register_params(&mut g, &params, true);
                let input = g.constant(x.clone());
                let out = forward_on_graph(&mut g, &cfg, &vars, input).unwrap();
                let t = g.constant(target.clone());
                let loss = g.mse_loss(out, t).unwrap();
                g.backward(loss).unwrap();
            })
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("metrics");
    let (clean, test) = pair(16000, 4);
    let cfg = FrameConfig::default();
    group.throughput(Throughput::Elements(clean.len() as u64));
    group.bench_function("ssnr", |b| b.iter(|| ssnr(&clean, black_box(&test), &cfg).unwrap()));
    group.bench_function("llr", |b| b.iter(|| llr(&clean, black_box(&test), &cfg).unwrap()));
    group.bench_function("wss", |b| b.iter(|| wss(&clean, black_box(&test), &cfg).unwrap()));
    group.finish();
}

fn resample(c: &mut Criterion) {
    let input = clip(48000, 48000, 5);
    let mut group = c.benchmark_group("resample");
    group.throughput(Throughput::Elements(input.len() as u64));
    group.bench_function("48k_to_16k_1s", |b| {
        b.iter(|| resample_48k_to_16k(black_box(&input)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, conv1d, network, metrics, resample);
criterion_main!(benches);
