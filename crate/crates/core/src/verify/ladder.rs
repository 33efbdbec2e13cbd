use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regimes::kappa;

fn exact(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::InvalidParams(format!("{v} is not finite")))
}

/// The ladder `s_0..=s_I` in exact rational arithmetic; every input is taken
/// as the exact value of its binary representation.
pub fn ladder_oracle_exact(s0: f64, p: f64, m: f64, n: usize, levels: usize) -> Result<Vec<BigRational>> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("ladder needs n >= 3, got {n}")));
    }
    let (s0q, pq, mq) = (exact(s0)?, exact(p)?, exact(m)?);
    let nq = BigRational::from_integer(BigInt::from(n));
    let two = BigRational::from_integer(BigInt::from(2));
    let k = &s0q + &two + &nq * (&pq - &mq) / &two;
    if k <= BigRational::zero() {
        return Err(Error::KappaNonPositive(kappa(s0, p, m, n)));
    }
    let step = &two / &nq;
    let mut s = Vec::with_capacity(levels + 1);
    s.push(s0q);
    for i in 0..levels {
        let si = &s[i];
        let next = &pq + si + (si + &two) * &step - &mq;
        s.push(next);
    }
    Ok(s)
}

/// [`ladder_oracle_exact`] rounded to the nearest doubles.
pub fn ladder_oracle(s0: f64, p: f64, m: f64, n: usize, levels: usize) -> Result<Vec<f64>> {
    Ok(ladder_oracle_exact(s0, p, m, n, levels)?
        .iter()
        .map(|v| v.to_f64().unwrap_or(f64::NAN))
        .collect())
}

/// `beta^i` exactly, for the oracle's limit checks.
pub(crate) fn beta_pow(n: usize, i: usize) -> BigRational {
    let beta = BigRational::one() + BigRational::new(BigInt::from(2), BigInt::from(n));
    (0..i).fold(BigRational::one(), |acc, _| acc * &beta)
}

/// `|a - b| / max(|b|, 1)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderTuple {
    pub s0: f64,
    pub p: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub n: usize,
}

/// Random `(s0, p, M, n)` with `n in {3, 4, 5}`, `M >= max(2, p)` and `kappa in [0.5, 5]`.
pub fn random_admissible_tuples(count: usize, seed: u64) -> Vec<LadderTuple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(3..=5usize);
            let p: f64 = rng.random_range(1.2..4.0);
            let m = p.max(2.0) + rng.random_range(0.0..2.0);
            let k = rng.random_range(0.5..5.0);
            let s0 = k - 2.0 - n as f64 * (p - m) / 2.0;
            LadderTuple { s0, p, m, n }
        })
        .collect()
}
