#![allow(dead_code)]

use pqharm_core::variation::VariationField;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Nodes used by first-variation checks; narrow bumps need more.
pub const VARIATION_NODES: usize = 1024;

/// Bump with halfwidth in [0.3, 0.45]·|I|, centred so that its support
/// stays inside the open interval, pointing in a Gaussian direction.
pub fn random_bump(rng: &mut ChaCha8Rng, domain: (f64, f64), dim: usize) -> VariationField {
    let (a, b) = domain;
    let len = b - a;
    let hw = rng.random_range(0.3..0.45) * len;
    let pad = 0.02 * len;
    let centre = rng.random_range(a + hw + pad..b - hw - pad);
    let dir = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    VariationField::bump(centre, hw, dir).unwrap()
}
