//! One-dimensional nearest-neighbour measures through a positive transfer
//! matrix `T(a,b) = sqrt(w(a)) K(a,b) sqrt(w(b))`, with `w = e^{-Φ_x}` and
//! `K = e^{-Φ_{x,x+1}}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{for_each_word, state_count, Region, Site, SpinAlphabet, Window};
use crate::measure::ExactMeasure;
use crate::potential::{BoundaryCondition, Potential, ENUMERATION_CAP};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edges {
    /// Translation-invariant bulk measure.
    Stationary,
    /// Finite chain on `[lo, hi]` with free ends.
    Free { lo: i32, hi: i32 },
    /// Finite chain on `[lo, hi]` with fixed spins at `lo - 1` and `hi + 1`.
    Fixed { lo: i32, hi: i32, left: u8, right: u8 },
}

#[derive(Clone, Debug)]
pub struct TransferChain {
    alphabet: Arc<SpinAlphabet>,
    q: usize,
    t: Vec<f64>,
    edges: Edges,
    lambda: f64,
    phi_l: Vec<f64>,
    phi_r: Vec<f64>,
    start: Vec<f64>,
    end: Vec<f64>,
    log_z: f64,
}

impl TransferChain {
    pub fn from_potential(phi: &Potential, edges: Edges) -> Result<TransferChain> {
        let (single, pair) = phi.nearest_neighbour_1d()?;
        TransferChain::from_energies(phi.alphabet().clone(), &single, &pair, edges)
    }

    /// Single-site energies `f` and pair energies `g` (row-major `q×q`).
    pub fn from_energies(alphabet: Arc<SpinAlphabet>, single: &[f64], pair: &[f64], edges: Edges) -> Result<TransferChain> {
        let q = alphabet.len();
        if single.len() != q || pair.len() != q * q {
            return Err(Error::InvalidMeasure("transfer energies have wrong shape".into()));
        }
        let t = transfer_matrix(single, pair)?;
        let (lambda, phi_l, phi_r) = perron(&t, q);
        let sw: Vec<f64> = single.iter().map(|f| (-0.5 * f).exp()).collect();
        let (start, end) = match edges {
            Edges::Stationary => (phi_l.clone(), phi_r.clone()),
            Edges::Free { lo, hi } => {
                check_extent(lo, hi)?;
                (sw.clone(), sw.clone())
            }
            Edges::Fixed { lo, hi, left, right } => {
                check_extent(lo, hi)?;
                alphabet.check(left)?;
                alphabet.check(right)?;
                let l = (0..q).map(|a| (-pair[left as usize * q + a]).exp() * sw[a]).collect();
                let r = (0..q).map(|b| sw[b] * (-pair[b * q + right as usize]).exp()).collect();
                (l, r)
            }
        };
        let mut chain = TransferChain { alphabet, q, t, edges, lambda, phi_l, phi_r, start, end, log_z: 0.0 };
        if let Some((lo, hi)) = chain.extent() {
            chain.log_z = chain.walk(&BTreeMap::new(), lo, hi)?;
        }
        Ok(chain)
    }

    pub fn alphabet(&self) -> &Arc<SpinAlphabet> {
        &self.alphabet
    }

    pub fn edges(&self) -> Edges {
        self.edges
    }

    pub fn matrix(&self) -> &[f64] {
        &self.t
    }

    pub fn perron_value(&self) -> f64 {
        self.lambda
    }

    pub fn extent(&self) -> Option<(i32, i32)> {
        match self.edges {
            Edges::Stationary => None,
            Edges::Free { lo, hi } | Edges::Fixed { lo, hi, .. } => Some((lo, hi)),
        }
    }

    /// Log of the finite-chain partition function; the pressure `log λ` times
    /// the length plus edge terms.
    pub fn log_partition_value(&self) -> Option<f64> {
        self.extent().map(|_| self.log_z)
    }

    /// Stationary single-site law and transition matrix `P(a,b)`.
    pub fn markov(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.edges != Edges::Stationary {
            return None;
        }
        let q = self.q;
        let norm: f64 = (0..q).map(|a| self.phi_l[a] * self.phi_r[a]).sum();
        let pi = (0..q).map(|a| self.phi_l[a] * self.phi_r[a] / norm).collect();
        let mut p = vec![0.0; q * q];
        for a in 0..q {
            for b in 0..q {
                p[a * q + b] = self.t[a * q + b] * self.phi_r[b] / (self.lambda * self.phi_r[a]);
            }
        }
        Some((pi, p))
    }

    /// Log-probability that the chain takes the given values at the given
    /// sites (any finite set, gaps allowed).
    pub fn log_cylinder_prob(&self, constraints: &[(i32, u8)]) -> Result<f64> {
        let mut map = BTreeMap::new();
        for (x, v) in constraints {
            self.alphabet.check(*v)?;
            if let Some(prev) = map.insert(*x, *v) {
                if prev != *v {
                    return Ok(f64::NEG_INFINITY);
                }
            }
        }
        let (Some((&a, _)), Some((&b, _))) = (map.first_key_value(), map.last_key_value()) else {
            return Ok(0.0);
        };
        match self.extent() {
            Some((lo, hi)) => {
                if a < lo || b > hi {
                    return Err(Error::SiteOutsideWindow(Site::at(&[if a < lo { a } else { b }])));
                }
                Ok(self.walk(&map, lo, hi)? - self.log_z)
            }
            None => {
                let norm: f64 = (0..self.q).map(|s| self.phi_l[s] * self.phi_r[s]).sum();
                Ok(self.walk(&map, a, b)? - (b - a) as f64 * self.lambda.ln() - norm.ln())
            }
        }
    }

    pub fn cylinder_prob(&self, constraints: &[(i32, u8)]) -> Result<f64> {
        Ok(self.log_cylinder_prob(constraints)?.exp())
    }

    /// Log of `start · Π (diag(1_c) T) · end` from `from` to `to`.
    fn walk(&self, constraints: &BTreeMap<i32, u8>, from: i32, to: i32) -> Result<f64> {
        let q = self.q;
        let mut v = self.start.clone();
        let mut scale = 0.0;
        let mut next = vec![0.0; q];
        for x in from..=to {
            if x > from {
                for b in 0..q {
                    next[b] = (0..q).map(|a| v[a] * self.t[a * q + b]).sum();
                }
                std::mem::swap(&mut v, &mut next);
            }
            if let Some(c) = constraints.get(&x) {
                for (a, val) in v.iter_mut().enumerate() {
                    if a != *c as usize {
                        *val = 0.0;
                    }
                }
            }
            let m = v.iter().cloned().fold(0.0, f64::max);
            if m == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            v.iter_mut().for_each(|x| *x /= m);
            scale += m.ln();
        }
        let dot: f64 = v.iter().zip(&self.end).map(|(a, b)| a * b).sum();
        Ok(scale + dot.ln())
    }

    /// Exact marginal on any finite region of Z.
    pub fn marginal(&self, region: &Region) -> Result<ExactMeasure> {
        if region.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: region.dim() });
        }
        let n = region.len();
        state_count(self.q, n, ENUMERATION_CAP)?;
        let sites: Vec<i32> = region.sites().iter().map(|s| s.coord(0)).collect();
        let contiguous = region.as_window().is_some();
        let mut probs = vec![0.0; self.q.pow(n as u32)];
        if contiguous && n > 0 {
            let (log_s, log_e, norm) = self.edge_vectors(sites[0], sites[n - 1])?;
            let log_t: Vec<f64> = self.t.iter().map(|x| x.ln()).collect();
            for_each_word(self.q, n, |i, w| {
                let mut lp = log_s[w[0] as usize] + log_e[w[n - 1] as usize] - norm;
                for k in 1..n {
                    lp += log_t[w[k - 1] as usize * self.q + w[k] as usize];
                }
                probs[i] = lp.exp();
            });
        } else {
            let mut err = None;
            for_each_word(self.q, n, |i, w| {
                let c: Vec<(i32, u8)> = sites.iter().copied().zip(w.iter().copied()).collect();
                match self.cylinder_prob(&c) {
                    Ok(p) => probs[i] = p,
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        ExactMeasure::new(region.clone(), self.alphabet.clone(), probs)
    }

    /// Log start/end vectors at `a`/`b` and the log normalizer such that
    /// `P(c) = s(c_a) Π T(c_k, c_{k+1}) e(c_b) / exp(norm)`.
    fn edge_vectors(&self, a: i32, b: i32) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let q = self.q;
        match self.extent() {
            None => {
                let norm: f64 = (0..q).map(|s| self.phi_l[s] * self.phi_r[s]).sum();
                let ls = self.phi_l.iter().map(|x| x.ln()).collect();
                let le = self.phi_r.iter().map(|x| x.ln()).collect();
                Ok((ls, le, (b - a) as f64 * self.lambda.ln() + norm.ln()))
            }
            Some((lo, hi)) => {
                if a < lo || b > hi {
                    return Err(Error::SiteOutsideWindow(Site::at(&[if a < lo { a } else { b }])));
                }
                let (f, sf) = propagate(&self.start, &self.t, q, (a - lo) as usize, false);
                let (g, sg) = propagate(&self.end, &self.t, q, (hi - b) as usize, true);
                let ls = f.iter().map(|x| x.ln()).collect();
                let le = g.iter().map(|x| x.ln()).collect();
                Ok((ls, le, self.log_z - sf - sg))
            }
        }
    }

    /// Exact marginal as a table over an interval window.
    pub fn window_marginal(&self, w: &Window) -> Result<ExactMeasure> {
        self.marginal(&Region::from(w))
    }

    /// `log Z` of a 1D nearest-neighbour system on an interval.
    pub fn log_partition(single: &[f64], pair: &[f64], w: &Window, bc: &BoundaryCondition) -> Result<f64> {
        let q = single.len();
        let lo = w.lo().coord(0);
        let hi = w.hi().coord(0);
        let alphabet = Arc::new(SpinAlphabet::new((0..q).map(|i| i as f64).collect(), 0)?);
        match bc {
            BoundaryCondition::Free => Ok(TransferChain::from_energies(alphabet, single, pair, Edges::Free { lo, hi })?.log_z),
            BoundaryCondition::Fixed(c) => {
                let left = c.try_get(&Site::at(&[lo - 1]))?;
                let right = c.try_get(&Site::at(&[hi + 1]))?;
                Ok(TransferChain::from_energies(alphabet, single, pair, Edges::Fixed { lo, hi, left, right })?.log_z)
            }
            BoundaryCondition::Periodic => {
                let t = transfer_matrix(single, pair)?;
                let (m, s) = matrix_power(&t, q, w.len());
                let tr: f64 = (0..q).map(|a| m[a * q + a]).sum();
                Ok(s + tr.ln())
            }
        }
    }
}

fn check_extent(lo: i32, hi: i32) -> Result<()> {
    if lo > hi {
        return Err(Error::InvalidWindow(format!("chain extent [{lo}, {hi}] is empty")));
    }
    Ok(())
}

fn transfer_matrix(single: &[f64], pair: &[f64]) -> Result<Vec<f64>> {
    let q = single.len();
    let mut t = vec![0.0; q * q];
    for a in 0..q {
        for b in 0..q {
            let v = (-0.5 * single[a] - pair[a * q + b] - 0.5 * single[b]).exp();
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveTransfer);
            }
            t[a * q + b] = v;
        }
    }
    Ok(t)
}

/// `v T^k` (or `T^k v` when `column`), rescaled; returns the vector and log scale.
fn propagate(v: &[f64], t: &[f64], q: usize, k: usize, column: bool) -> (Vec<f64>, f64) {
    let mut v = v.to_vec();
    let mut scale = 0.0;
    let mut next = vec![0.0; q];
    for _ in 0..k {
        for b in 0..q {
            next[b] = (0..q).map(|a| if column { t[b * q + a] * v[a] } else { v[a] * t[a * q + b] }).sum();
        }
        std::mem::swap(&mut v, &mut next);
        let m = v.iter().cloned().fold(0.0, f64::max);
        v.iter_mut().for_each(|x| *x /= m);
        scale += m.ln();
    }
    (v, scale)
}

fn matmul(a: &[f64], b: &[f64], q: usize) -> Vec<f64> {
    let mut c = vec![0.0; q * q];
    for i in 0..q {
        for k in 0..q {
            let aik = a[i * q + k];
            for j in 0..q {
                c[i * q + j] += aik * b[k * q + j];
            }
        }
    }
    c
}

fn rescale(m: &mut [f64]) -> f64 {
    let s = m.iter().cloned().fold(0.0, f64::max);
    m.iter_mut().for_each(|x| *x /= s);
    s.ln()
}

/// `T^n` as (matrix, log scale).
fn matrix_power(t: &[f64], q: usize, mut n: usize) -> (Vec<f64>, f64) {
    let mut result: Vec<f64> = (0..q * q).map(|i| if i / q == i % q { 1.0 } else { 0.0 }).collect();
    let mut rs = 0.0;
    let mut base = t.to_vec();
    let mut bs = rescale(&mut base);
    while n > 0 {
        if n & 1 == 1 {
            result = matmul(&result, &base, q);
            rs += bs + rescale(&mut result);
        }
        n >>= 1;
        if n > 0 {
            base = matmul(&base, &base, q);
            bs = 2.0 * bs + rescale(&mut base);
        }
    }
    (result, rs)
}

/// Perron value with left and right eigenvectors, by repeated squaring
/// followed by power-iteration polish.
fn perron(t: &[f64], q: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let mut m = t.to_vec();
    rescale(&mut m);
    for _ in 0..64 {
        m = matmul(&m, &m, q);
        rescale(&mut m);
    }
    let col = (0..q).max_by(|a, b| m[a * q + a].total_cmp(&m[b * q + b])).unwrap_or(0);
    let mut r: Vec<f64> = (0..q).map(|i| m[i * q + col]).collect();
    let mut l: Vec<f64> = (0..q).map(|j| m[col * q + j]).collect();
    let mut lambda = 0.0;
    for _ in 0..50 {
        let tr: Vec<f64> = (0..q).map(|i| (0..q).map(|j| t[i * q + j] * r[j]).sum()).collect();
        let lt: Vec<f64> = (0..q).map(|j| (0..q).map(|i| l[i] * t[i * q + j]).sum()).collect();
        lambda = tr.iter().sum::<f64>() / r.iter().sum::<f64>();
        let nr = tr.iter().cloned().fold(0.0, f64::max);
        let nl = lt.iter().cloned().fold(0.0, f64::max);
        r = tr.iter().map(|x| x / nr).collect();
        l = lt.iter().map(|x| x / nl).collect();
    }
    (lambda, l, r)
}
