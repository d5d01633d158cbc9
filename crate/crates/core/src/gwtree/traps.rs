use rand::Rng;
use serde::{Deserialize, Serialize};

use super::arena::NODE_CAP;
use super::law::OffspringLaw;
use super::GwError;
use crate::randkit::{SeedTree, Stream};
use crate::replicas::run_replicas;

/// One generation of a Galton-Watson process started from `z` individuals.
fn next_generation(law: &OffspringLaw, z: u64, rng: &mut Stream) -> u64 {
    (0..z).map(|_| law.sample(rng) as u64).sum()
}

/// Counts of trees with height `>= n` for `n = 0..=max_n`, by growing
/// `trees` independent trees generation by generation.
pub fn trap_height_direct(law: &OffspringLaw, trees: usize, max_n: u32, seed: &SeedTree) -> Result<Vec<u64>, GwError> {
    if law.is_supercritical() {
        return Err(GwError::Argument("trap law must not be supercritical"));
    }
    const CHUNKS: usize = 64;
    let per_chunk = trees.div_ceil(CHUNKS);
    let partial = run_replicas(seed, CHUNKS, |c, s| {
        let mut rng = s.stream();
        let mut counts = vec![0u64; max_n as usize + 1];
        let todo = per_chunk.min(trees.saturating_sub(c * per_chunk));
        for _ in 0..todo {
            let mut z = 1u64;
            let mut total = 1u64;
            for slot in counts.iter_mut() {
                if z == 0 {
                    break;
                }
                *slot += 1;
                z = next_generation(law, z, &mut rng);
                total += z;
                if total > NODE_CAP as u64 {
                    return Err(GwError::NodeCap(NODE_CAP));
                }
            }
        }
        Ok(counts)
    });
    let mut counts = vec![0u64; max_n as usize + 1];
    for part in partial {
        for (a, b) in counts.iter_mut().zip(part?) {
            *a += b;
        }
    }
    Ok(counts)
}

/// `P[H >= n]` and the ratio `P[H >= n+1] / P[H >= n]` with its binomial
/// standard error from the level's population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapTailPoint {
    pub n: u32,
    pub prob: f64,
    pub ratio: f64,
    pub ratio_se: f64,
}

/// Fixed-effort splitting on the generation-size chain: each level holds
/// `per_level` trees conditioned to reach that depth, so every ratio is
/// estimated from `per_level` trials however small the tail is.
pub fn trap_height_tail(
    law: &OffspringLaw,
    max_n: u32,
    per_level: usize,
    seed: &SeedTree,
) -> Result<Vec<TrapTailPoint>, GwError> {
    if law.is_supercritical() {
        return Err(GwError::Argument("trap law must not be supercritical"));
    }
    if per_level == 0 {
        return Err(GwError::Argument("per_level must be positive"));
    }
    let mut population = vec![1u64; per_level];
    let mut prob = 1.0;
    let mut out = Vec::with_capacity(max_n as usize + 1);
    for n in 0..=max_n {
        let mut rng = seed.child(n as u64).stream();
        let survivors: Vec<u64> = population
            .iter()
            .map(|&z| next_generation(law, z, &mut rng))
            .filter(|&z| z > 0)
            .collect();
        let ratio = survivors.len() as f64 / per_level as f64;
        let ratio_se = (ratio * (1.0 - ratio) / per_level as f64).sqrt();
        out.push(TrapTailPoint { n, prob, ratio, ratio_se });
        if survivors.is_empty() {
            break;
        }
        prob *= ratio;
        population = (0..per_level).map(|_| survivors[rng.random_range(0..survivors.len())]).collect();
    }
    Ok(out)
}
