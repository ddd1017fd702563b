//! Seeded random polynomials for identity corpora.

use rand::Rng;

use super::{int, Poly};

#[derive(Clone, Copy, Debug)]
pub struct RandomPolyConfig {
    pub max_degree: u32,
    pub max_terms: usize,
    pub coeff_bound: i64,
}

impl Default for RandomPolyConfig {
    fn default() -> Self {
        RandomPolyConfig {
            max_degree: 3,
            max_terms: 5,
            coeff_bound: 3,
        }
    }
}

/// Random polynomial in `nvars` variables with nonzero integer coefficients
/// in `[-coeff_bound, coeff_bound]`. Only variables with `allowed[i]` set may
/// appear.
pub fn random_poly_masked<R: Rng + ?Sized>(
    rng: &mut R,
    allowed: &[bool],
    cfg: RandomPolyConfig,
) -> Poly {
    let nvars = allowed.len();
    let vars: Vec<usize> = (0..nvars).filter(|&i| allowed[i]).collect();
    let nterms = rng.random_range(1..=cfg.max_terms.max(1));
    let mut p = Poly::zero(nvars);
    for _ in 0..nterms {
        let deg = rng.random_range(0..=cfg.max_degree);
        let mut exps = vec![0u32; nvars];
        if !vars.is_empty() {
            for _ in 0..deg {
                exps[vars[rng.random_range(0..vars.len())]] += 1;
            }
        }
        let mut c = 0;
        while c == 0 {
            c = rng.random_range(-cfg.coeff_bound..=cfg.coeff_bound);
        }
        p = p + Poly::monomial(exps, int(c));
    }
    p
}

pub fn random_poly<R: Rng + ?Sized>(rng: &mut R, nvars: usize, cfg: RandomPolyConfig) -> Poly {
    random_poly_masked(rng, &vec![true; nvars], cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_mask_and_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = RandomPolyConfig::default();
        for _ in 0..200 {
            let p = random_poly_masked(&mut rng, &[true, false, true], cfg);
            assert!(!p.depends_on(1));
            assert!(p.degree() <= 3);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = random_poly(&mut ChaCha8Rng::seed_from_u64(1), 4, RandomPolyConfig::default());
        let b = random_poly(&mut ChaCha8Rng::seed_from_u64(1), 4, RandomPolyConfig::default());
        assert_eq!(a, b);
    }
}
