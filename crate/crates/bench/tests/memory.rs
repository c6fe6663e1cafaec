//! Peak heap scaling of generation plus one root bound evaluation.

use tear_bench::alloc::{peak_bytes, reset_peak, PeakAlloc};
use tear_bench::{generate_synthetic, SyntheticConfig};
use tear_core::{AngleBox, FirstStageLoss, ScalarStage};

#[global_allocator]
static ALLOC: PeakAlloc = PeakAlloc;

fn peak_for(n: usize) -> usize {
    reset_peak();
    let before = peak_bytes();
    let cfg = SyntheticConfig {
        n,
        outlier_ratio: 0.99,
        seed: 4,
        ..Default::default()
    };
    let (pairs, _) = generate_synthetic(&cfg).unwrap();
    let stage = ScalarStage::new(&pairs, FirstStageLoss::Tear).unwrap();
    let bx = AngleBox::sphere();
    stage.lower(&bx).unwrap();
    stage.upper(&bx).unwrap();
    peak_bytes() - before
}

#[test]
fn peak_memory_grows_linearly() {
    let small = peak_for(100_000);
    let large = peak_for(1_000_000);
    assert!(small > 0);
    assert!(large <= 20 * small, "{large} > 20 × {small}");
    assert!(large >= 5 * small, "{large} vs {small}");
}
