use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use trafficproof::{derive_keypair, recover_public_key, sign_proof, KdfConfig, RecoveryCache};
use trafficproof_bench::secret;

fn bench(c: &mut Criterion) {
    let s = secret(1);
    c.bench_function("derive_keypair", |b| b.iter(|| derive_keypair(black_box(&s), KdfConfig::PLAIN)));
    c.bench_function("sign_proof", |b| b.iter(|| sign_proof(black_box(&s), b"\x00\x00\x00\x2a", KdfConfig::PLAIN)));
    let proof = sign_proof(&s, b"\x00\x00\x00\x2a", KdfConfig::PLAIN).unwrap();
    c.bench_function("recover_public_key", |b| b.iter(|| recover_public_key(black_box(&proof))));
    c.bench_function("recover_cached_hit", |b| {
        b.iter_batched(
            || {
                let cache = RecoveryCache::new();
                cache.recover(&proof).unwrap();
                cache
            },
            |cache| cache.recover(black_box(&proof)),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench);
criterion_main!(benches);
