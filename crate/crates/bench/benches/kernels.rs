use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dyncoord::dyncomm::{leiden_partition, multislice_modularity};
use dyncoord::multiplex::assemble_multiplex;
use dyncoord::pipeline::{self, PipelineConfig};
use dyncoord::simnet::{build_similarity_layer, build_user_vectors, disparity_backbone};
use dyncoord::synth::{self, ScenarioConfig};
use dyncoord::{ResolutionConfig, WindowedCorpus};

fn corpus(users: usize) -> WindowedCorpus {
    let plan = synth::plan(&ScenarioConfig { n_users: users, ..ScenarioConfig::default() }).unwrap();
    let (events, _) = synth::generate(&plan).unwrap();
    let cfg = PipelineConfig { top_fraction: 1.0, ..PipelineConfig::default() };
    pipeline::prepare(events, &cfg).unwrap()
}

fn layers(c: &mut Criterion) {
    let corpus = corpus(1000);
    let w = corpus.n_windows() / 2;
    let vectors = build_user_vectors(corpus.events_in(w));
    let raw = build_similarity_layer(&vectors, w);

    c.bench_function("tfidf_vectors/1000", |b| b.iter(|| build_user_vectors(corpus.events_in(w))));
    c.bench_function("cosine_layer/1000", |b| b.iter(|| build_similarity_layer(&vectors, w)));
    c.bench_function("backbone/1000", |b| b.iter(|| disparity_backbone(&raw, 0.05).unwrap()));
    c.bench_function("all_layers/1000", |b| b.iter(|| pipeline::build_layers(&corpus, 0.05).unwrap()));
}

fn detection(c: &mut Criterion) {
    let corpus = corpus(1000);
    let layers = pipeline::build_layers(&corpus, 0.05).unwrap();
    let net = assemble_multiplex(layers.clone(), 1.0).unwrap();
    let config = ResolutionConfig::default();
    let part = leiden_partition(&net, &config).unwrap();

    let mut g = c.benchmark_group("detection");
    g.sample_size(10);
    g.bench_function("assemble/1000", |b| {
        b.iter_batched(|| layers.clone(), |l| assemble_multiplex(l, 1.0).unwrap(), BatchSize::LargeInput)
    });
    g.bench_function("leiden/1000", |b| b.iter(|| leiden_partition(&net, &config).unwrap()));
    g.bench_function("modularity/1000", |b| b.iter(|| multislice_modularity(&net, &part, 1.0).unwrap()));
    g.finish();
}

criterion_group!(benches, layers, detection);
criterion_main!(benches);
