use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const MAX_EXACT_PLAYERS: usize = 12;

/// A cooperative game over `players()` items; `value(keep)` is the payoff
/// when exactly the items with `keep[i] == true` are present.
pub trait CoalitionGame: Sync {
    fn players(&self) -> usize;

    fn value(&self, keep: &[bool]) -> Result<f64>;
}

fn bits(mask: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// Exact Shapley values by enumerating all `2^n` coalitions.
pub fn shapley_exact<G: CoalitionGame>(game: &G) -> Result<Vec<f64>> {
    let n = game.players();
    if n > MAX_EXACT_PLAYERS {
        return Err(Error::Config(format!(
            "{n} items exceed the exact limit of {MAX_EXACT_PLAYERS}; use sampled mode"
        )));
    }
    let values: Vec<f64> = (0..1usize << n)
        .into_par_iter()
        .map(|m| game.value(&bits(m, n)))
        .collect::<Result<_>>()?;
    // weight[s] = s! (n − s − 1)! / n!
    let mut weight = vec![0.0; n.max(1)];
    for (s, w) in weight.iter_mut().enumerate().take(n) {
        *w = (0..s).map(|k| (k + 1) as f64).product::<f64>() * (0..n - s - 1).map(|k| (k + 1) as f64).product::<f64>()
            / (0..n).map(|k| (k + 1) as f64).product::<f64>();
    }
    let mut phi = vec![0.0; n];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        for m in 0..1usize << n {
            if m & bit == 0 {
                *p += weight[m.count_ones() as usize] * (values[m | bit] - values[m]);
            }
        }
    }
    Ok(phi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledShapley {
    pub values: Vec<f64>,
    /// Standard error of each mean; `None` with a single permutation.
    pub std_errors: Vec<Option<f64>>,
}

/// Monte-Carlo permutation estimate: the mean marginal contribution of each
/// item over `n_perms` random orderings. Permutation `p` draws from ChaCha
/// stream `p`, and results are reduced in permutation order.
pub fn shapley_sampled<G: CoalitionGame>(game: &G, n_perms: usize, seed: u64) -> Result<SampledShapley> {
    if n_perms == 0 {
        return Err(Error::Config("n_perms must be at least 1".into()));
    }
    let n = game.players();
    let marginals: Vec<Vec<f64>> = (0..n_perms)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut keep = vec![false; n];
            let mut prev = game.value(&keep)?;
            let mut out = vec![0.0; n];
            for i in order {
                keep[i] = true;
                let next = game.value(&keep)?;
                out[i] = next - prev;
                prev = next;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let k = n_perms as f64;
    let mut values = vec![0.0; n];
    for m in &marginals {
        values.iter_mut().zip(m).for_each(|(v, x)| *v += x);
    }
    values.iter_mut().for_each(|v| *v /= k);
    let std_errors = (0..n)
        .map(|i| {
            (n_perms > 1).then(|| {
                let var = marginals.iter().map(|m| (m[i] - values[i]).powi(2)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            })
        })
        .collect();
    Ok(SampledShapley { values, std_errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Additive(Vec<f64>);

    impl CoalitionGame for Additive {
        fn players(&self) -> usize {
            self.0.len()
        }

        fn value(&self, keep: &[bool]) -> Result<f64> {
            Ok(keep.iter().zip(&self.0).filter(|(k, _)| **k).map(|(_, v)| v).sum())
        }
    }

    #[test]
    fn additive_game_is_recovered() {
        let g = Additive(vec![0.5, -1.25, 2.0, 0.0]);
        let phi = shapley_exact(&g).unwrap();
        for (p, v) in phi.iter().zip(&g.0) {
            assert!((p - v).abs() < 1e-12);
        }
        let s = shapley_sampled(&g, 50, 1).unwrap();
        for (p, v) in s.values.iter().zip(&g.0) {
            assert!((p - v).abs() < 1e-12);
        }
    }

    #[test]
    fn too_many_players_for_exact() {
        assert!(shapley_exact(&Additive(vec![1.0; 13])).is_err());
    }

    #[test]
    fn sampled_is_seeded() {
        struct Product;
        impl CoalitionGame for Product {
            fn players(&self) -> usize {
                5
            }
            fn value(&self, keep: &[bool]) -> Result<f64> {
                Ok(keep
                    .iter()
                    .enumerate()
                    .filter(|(_, k)| **k)
                    .map(|(i, _)| 1.0 + i as f64)
                    .product())
            }
        }
        assert_eq!(
            shapley_sampled(&Product, 40, 9).unwrap(),
            shapley_sampled(&Product, 40, 9).unwrap()
        );
    }
}
