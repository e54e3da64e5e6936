//! Stochastic domination `μ ⪯ ν` in the coordinatewise order.
//!
//! For at most 16 configurations every up-set is enumerated, which is exact
//! (monotone functions into [0,1] are mixtures of up-set indicators). Larger
//! spaces use principal up-sets, single-site thresholds and magnetization
//! thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{decode_word, for_each_word};
use crate::measure::ExactMeasure;

pub const EXHAUSTIVE_STATES: usize = 16;

const PRINCIPAL_CAP: usize = 1 << 12;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum TestFamily {
    AllUpSets,
    Thresholds,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct DominationReport {
    /// `max μ(f) - ν(f)` over tested monotone `f`; ≤ 0 means no violation.
    pub worst: f64,
    pub family: TestFamily,
    pub tested: usize,
}

fn leq(a: &[u8], b: &[u8]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

pub fn stochastic_domination_check(mu: &ExactMeasure, nu: &ExactMeasure) -> Result<DominationReport> {
    if mu.region() != nu.region() {
        return Err(Error::WindowMismatch);
    }
    if mu.alphabet() != nu.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let q = mu.alphabet().len();
    let n = mu.region().len();
    let states = mu.probs().len();
    let diff: Vec<f64> = mu.probs().iter().zip(nu.probs()).map(|(a, b)| a - b).collect();
    if states <= EXHAUSTIVE_STATES {
        let words: Vec<Vec<u8>> = (0..states)
            .map(|i| {
                let mut w = vec![0u8; n];
                decode_word(i, q, &mut w);
                w
            })
            .collect();
        let mut worst = f64::NEG_INFINITY;
        let mut tested = 0;
        for mask in 0u32..(1 << states) {
            let up = (0..states).all(|i| mask >> i & 1 == 0 || (0..states).all(|j| !leq(&words[i], &words[j]) || mask >> j & 1 == 1));
            if up {
                tested += 1;
                let v: f64 = (0..states).filter(|i| mask >> i & 1 == 1).map(|i| diff[i]).sum();
                worst = worst.max(v);
            }
        }
        return Ok(DominationReport { worst, family: TestFamily::AllUpSets, tested });
    }
    let mut worst = 0.0f64;
    let mut tested = 0;
    for x in 0..n {
        for a in 1..q {
            let mut v = 0.0;
            for_each_word(q, n, |i, w| {
                if w[x] as usize >= a {
                    v += diff[i];
                }
            });
            worst = worst.max(v);
            tested += 1;
        }
    }
    let total = n * (q - 1);
    for k in 1..=total {
        let mut v = 0.0;
        for_each_word(q, n, |i, w| {
            if w.iter().map(|s| *s as usize).sum::<usize>() >= k {
                v += diff[i];
            }
        });
        worst = worst.max(v);
        tested += 1;
    }
    if states <= PRINCIPAL_CAP {
        let mut words = vec![vec![0u8; n]; states];
        for (i, w) in words.iter_mut().enumerate() {
            decode_word(i, q, w);
        }
        for base in &words {
            let v: f64 = words.iter().zip(&diff).filter(|(w, _)| leq(base, w)).map(|(_, d)| d).sum();
            worst = worst.max(v);
            tested += 1;
        }
    }
    Ok(DominationReport { worst, family: TestFamily::Thresholds, tested })
}
