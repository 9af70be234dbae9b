#![allow(dead_code)]

use bond_core::{ArmSummary, HistoricalSource, OutcomeKind, RadiusProvenance, RadiusSpec, TrialLayout};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn arm(rng: &mut ChaCha8Rng, kind: OutcomeKind) -> ArmSummary {
    let n = rng.random_range(2..400);
    match kind {
        OutcomeKind::Binary => ArmSummary::binary(n, rng.random_range(0..=n)).unwrap(),
        OutcomeKind::Continuous => {
            ArmSummary::new(n, rng.random_range(-2.0..2.0), Some(rng.random_range(0.05..3.0))).unwrap()
        }
    }
}

/// Random layout; each historical cell is present with probability 0.7.
pub fn layout(rng: &mut ChaCha8Rng, kind: OutcomeKind, arms: usize, sources: usize) -> TrialLayout {
    let current = (0..arms).map(|_| arm(rng, kind)).collect();
    let historical = (0..sources)
        .map(|k| {
            let cells = (0..arms).map(|_| rng.random_bool(0.7).then(|| arm(rng, kind))).collect();
            HistoricalSource::new(format!("h{k}"), cells)
        })
        .collect();
    TrialLayout::new(kind, current, historical)
}

pub fn radii(rng: &mut ChaCha8Rng, layout: &TrialLayout, max: f64) -> RadiusSpec {
    let cells = layout
        .historical
        .iter()
        .map(|s| s.arms.iter().map(|c| c.map(|_| if max > 0.0 { rng.random_range(0.0..max) } else { 0.0 })).collect())
        .collect();
    RadiusSpec::new(cells, RadiusProvenance::Fixed).unwrap()
}

pub fn kind(rng: &mut ChaCha8Rng) -> OutcomeKind {
    if rng.random_bool(0.5) {
        OutcomeKind::Binary
    } else {
        OutcomeKind::Continuous
    }
}
