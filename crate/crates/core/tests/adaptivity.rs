//! Under abrupt level shifts the learned weights must track the ground-truth
//! p-values more closely than the frozen equal-weight scorer.

use acas_core::synthetic::gen_jump_shift;
use acas_core::{EngineConfig, HorizonEngine, WeightInit};

fn mean_gap(config: &EngineConfig, seeds: std::ops::Range<u64>) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for seed in seeds {
        let trace = gen_jump_shift(6000, seed);
        let mut engine = HorizonEngine::new(config).unwrap();
        for (s, truth) in trace.scores().into_iter().zip(&trace.truth_pvalues) {
            total += (engine.step(s).unwrap().pvalue.value() - truth).abs();
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn adaptive_beats_frozen_on_jump_shift() {
    let adaptive = EngineConfig {
        horizons: 1,
        batch: 99,
        ..EngineConfig::default()
    };
    let mut frozen = EngineConfig {
        init: WeightInit::Ones,
        ..adaptive.clone()
    };
    frozen.adam.learning_rate = 0.0;

    let a = mean_gap(&adaptive, 0..15);
    let f = mean_gap(&frozen, 0..15);
    assert!(a < f, "adaptive {a} vs frozen {f}");
}
