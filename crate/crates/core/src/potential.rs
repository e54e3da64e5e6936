//! Finite-range interaction families, Hamiltonians and partition functions.
//!
//! A potential is a list of terms, each a base shape `A ∋ 0` with a table
//! over `E^A`; the translate `A + x` carries the same table unless a quenched
//! override is stored for anchor `x`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{decode_word, state_count, Configuration, Region, Site, SpinAlphabet, Window};
use crate::measure::transfer::TransferChain;

/// Largest state space enumerated exactly.
pub const ENUMERATION_CAP: usize = 1 << 24;

const CHUNK: usize = 1 << 14;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum PotentialKind {
    TranslationInvariant,
    Quenched,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Term {
    sites: Vec<Site>,
    table: Vec<f64>,
    /// When set, every translate must carry an override (site-indexed table).
    #[serde(default)]
    site_indexed: bool,
}

impl Term {
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn diameter(&self) -> u32 {
        let mut d = 0;
        for a in &self.sites {
            for b in &self.sites {
                d = d.max(a.linf_dist(b));
            }
        }
        d
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(try_from = "PotentialRepr", into = "PotentialRepr")]
pub struct Potential {
    alphabet: Arc<SpinAlphabet>,
    dim: usize,
    terms: Vec<Term>,
    overrides: BTreeMap<(usize, Site), Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct OverrideRepr {
    shape: usize,
    anchor: Site,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PotentialRepr {
    kind: PotentialKind,
    range: u32,
    dimension: usize,
    alphabet: SpinAlphabet,
    shapes: Vec<Term>,
    #[serde(default)]
    overrides: Vec<OverrideRepr>,
}

impl TryFrom<PotentialRepr> for Potential {
    type Error = Error;
    fn try_from(r: PotentialRepr) -> Result<Potential> {
        let mut p = Potential::new(Arc::new(r.alphabet), r.dimension)?;
        for t in r.shapes {
            p.push_term(t)?;
        }
        for o in r.overrides {
            p.set_override(o.shape, o.anchor, o.table)?;
        }
        Ok(p)
    }
}

impl From<Potential> for PotentialRepr {
    fn from(p: Potential) -> PotentialRepr {
        PotentialRepr {
            kind: p.kind(),
            range: p.range(),
            dimension: p.dim,
            alphabet: (*p.alphabet).clone(),
            overrides: p.overrides.iter().map(|((shape, anchor), table)| OverrideRepr { shape: *shape, anchor: *anchor, table: table.clone() }).collect(),
            shapes: p.terms,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct UacReport {
    pub norm: f64,
    pub truncation_radius: u32,
}

impl Potential {
    pub fn new(alphabet: Arc<SpinAlphabet>, dim: usize) -> Result<Potential> {
        if dim == 0 || dim > crate::lattice::MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(Potential { alphabet, dim, terms: Vec::new(), overrides: BTreeMap::new() })
    }

    pub fn zero(alphabet: Arc<SpinAlphabet>, dim: usize) -> Potential {
        Potential::new(alphabet, dim).expect("dimension")
    }

    /// Nearest-neighbour Ising: `Φ_{x,x+e} = -β σ_x σ_{x+e}`, `Φ_x = -h σ_x`.
    pub fn ising(dim: usize, beta: f64, h: f64) -> Potential {
        let mut p = Potential::zero(SpinAlphabet::ising(), dim);
        for k in 0..dim {
            p.add_term(&[Site::origin(dim), Site::unit(dim, k)], |v| -beta * v[0] * v[1]).expect("bond");
        }
        if h != 0.0 {
            p.add_term(&[Site::origin(dim)], |v| -h * v[0]).expect("field");
        }
        p
    }

    /// Independent sites with single-site law `probs` (all positive).
    pub fn product(alphabet: Arc<SpinAlphabet>, dim: usize, probs: &[f64]) -> Result<Potential> {
        if probs.len() != alphabet.len() || probs.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::InvalidPotential("single-site law must be positive on every symbol".into()));
        }
        let table = probs.iter().map(|p| -p.ln()).collect();
        let mut pot = Potential::new(alphabet, dim)?;
        pot.add_table(&[Site::origin(dim)], table)?;
        Ok(pot)
    }

    /// Bernoulli(p) product on `{-1, +1}` with `P(+1) = p`.
    pub fn bernoulli(dim: usize, p: f64) -> Result<Potential> {
        Potential::product(SpinAlphabet::ising(), dim, &[1.0 - p, p])
    }

    pub fn alphabet(&self) -> &Arc<SpinAlphabet> {
        &self.alphabet
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn kind(&self) -> PotentialKind {
        if self.overrides.is_empty() && !self.terms.iter().any(|t| t.site_indexed) {
            PotentialKind::TranslationInvariant
        } else {
            PotentialKind::Quenched
        }
    }

    pub fn range(&self) -> u32 {
        self.terms.iter().map(Term::diameter).max().unwrap_or(0)
    }

    /// Adds a term whose value is computed from symbol indices, listed in
    /// the order of `sites`.
    pub fn add_term_symbols(&mut self, sites: &[Site], f: impl Fn(&[u8]) -> f64) -> Result<usize> {
        let q = self.alphabet.len();
        let n = sites.len();
        let states = state_count(q, n, ENUMERATION_CAP)?;
        let mut digits = vec![0u8; n];
        let table = (0..states)
            .map(|i| {
                decode_word(i, q, &mut digits);
                f(&digits)
            })
            .collect();
        self.add_table(sites, table)
    }

    /// Adds a term whose value is computed from spin values, listed in the
    /// order of `sites`.
    pub fn add_term(&mut self, sites: &[Site], f: impl Fn(&[f64]) -> f64) -> Result<usize> {
        let alphabet = self.alphabet.clone();
        self.add_term_symbols(sites, |d| {
            let v: Vec<f64> = d.iter().map(|s| alphabet.value(*s)).collect();
            f(&v)
        })
    }

    /// Adds a term from a row-major table indexed in the order of `sites`.
    pub fn add_table(&mut self, sites: &[Site], table: Vec<f64>) -> Result<usize> {
        let (sorted, table) = self.canonical(sites, table)?;
        self.push_term(Term { sites: sorted, table, site_indexed: false })
    }

    /// Adds a site-indexed term: every translate must be given by `set_override`.
    pub fn add_site_indexed(&mut self, sites: &[Site]) -> Result<usize> {
        let q = self.alphabet.len();
        let states = state_count(q, sites.len(), ENUMERATION_CAP)?;
        let (sorted, table) = self.canonical(sites, vec![0.0; states])?;
        self.push_term(Term { sites: sorted, table, site_indexed: true })
    }

    fn canonical(&self, sites: &[Site], table: Vec<f64>) -> Result<(Vec<Site>, Vec<f64>)> {
        let q = self.alphabet.len();
        let n = sites.len();
        if sites.iter().any(|s| s.dim() != self.dim) {
            return Err(Error::InvalidPotential("shape dimension differs from potential".into()));
        }
        if !sites.contains(&Site::origin(self.dim)) {
            return Err(Error::InvalidPotential("shape must contain the origin".into()));
        }
        if sites.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::InvalidPotential("repeated site in shape".into()));
        }
        if table.len() != state_count(q, n, ENUMERATION_CAP)? {
            return Err(Error::InvalidPotential(format!("table has {} entries, expected {}^{}", table.len(), q, n)));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| sites[*a].lex_cmp(&sites[*b]));
        let sorted: Vec<Site> = order.iter().map(|i| sites[*i]).collect();
        let mut digits = vec![0u8; n];
        let mut user = vec![0u8; n];
        let permuted = (0..table.len())
            .map(|i| {
                decode_word(i, q, &mut digits);
                for (pos, src) in order.iter().enumerate() {
                    user[*src] = digits[pos];
                }
                table[user.iter().fold(0, |acc, d| acc * q + *d as usize)]
            })
            .collect();
        Ok((sorted, permuted))
    }

    fn push_term(&mut self, t: Term) -> Result<usize> {
        let q = self.alphabet.len();
        if t.sites.iter().any(|s| s.dim() != self.dim) || !t.sites.contains(&Site::origin(self.dim)) {
            return Err(Error::InvalidPotential("shape must contain the origin".into()));
        }
        if t.sites.windows(2).any(|w| w[0].lex_cmp(&w[1]) != Ordering::Less) {
            return Err(Error::InvalidPotential("shape sites must be sorted lexicographically".into()));
        }
        if t.table.len() != state_count(q, t.sites.len(), ENUMERATION_CAP)? || t.table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("table size or values invalid".into()));
        }
        self.terms.push(t);
        Ok(self.terms.len() - 1)
    }

    /// Site-dependent table for the translate of term `term` anchored at `anchor`,
    /// indexed in the term's sorted site order.
    pub fn set_override(&mut self, term: usize, anchor: Site, table: Vec<f64>) -> Result<()> {
        let t = self.terms.get(term).ok_or_else(|| Error::InvalidPotential(format!("no term {term}")))?;
        if table.len() != t.table.len() || table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("override table size or values invalid".into()));
        }
        if anchor.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: anchor.dim() });
        }
        self.overrides.insert((term, anchor), table);
        Ok(())
    }

    fn table_for(&self, term: usize, anchor: &Site) -> Result<&[f64]> {
        match self.overrides.get(&(term, *anchor)) {
            Some(t) => Ok(t),
            None if self.terms[term].site_indexed => Err(Error::ExteriorUndefined(*anchor)),
            None => Ok(&self.terms[term].table),
        }
    }

    /// Sum of two potentials on the same alphabet.
    pub fn plus(&self, other: &Potential) -> Result<Potential> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut p = self.clone();
        let offset = p.terms.len();
        p.terms.extend(other.terms.iter().cloned());
        for ((t, a), table) in &other.overrides {
            p.overrides.insert((t + offset, *a), table.clone());
        }
        Ok(p)
    }

    pub fn uac_norm(&self) -> UacReport {
        let norm = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let base = if t.site_indexed { 0.0 } else { sup_abs(&t.table) };
                let over = self.overrides.iter().filter(|((j, _), _)| *j == i).map(|(_, tab)| sup_abs(tab)).fold(0.0, f64::max);
                t.sites.len() as f64 * base.max(over)
            })
            .sum();
        UacReport { norm, truncation_radius: self.range() }
    }

    /// Drops every term of diameter above `r`.
    pub fn truncate(&self, r: u32) -> Potential {
        let mut p = Potential::zero(self.alphabet.clone(), self.dim);
        let mut remap = BTreeMap::new();
        for (i, t) in self.terms.iter().enumerate() {
            if t.diameter() <= r {
                remap.insert(i, p.terms.len());
                p.terms.push(t.clone());
            }
        }
        for ((t, a), table) in &self.overrides {
            if let Some(j) = remap.get(t) {
                p.overrides.insert((*j, *a), table.clone());
            }
        }
        p
    }

    /// Single-site vector and nearest-neighbour matrix of a 1D translation
    /// invariant potential of range ≤ 1.
    pub fn nearest_neighbour_1d(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.dim != 1 || self.kind() != PotentialKind::TranslationInvariant || self.range() > 1 {
            return Err(Error::NoTransferStructure);
        }
        let q = self.alphabet.len();
        let mut single = vec![0.0; q];
        let mut pair = vec![0.0; q * q];
        for t in &self.terms {
            match t.sites.len() {
                1 => single.iter_mut().zip(&t.table).for_each(|(s, v)| *s += v),
                2 => pair.iter_mut().zip(&t.table).for_each(|(s, v)| *s += v),
                _ => return Err(Error::NoTransferStructure),
            }
        }
        Ok((single, pair))
    }
}

fn sup_abs(t: &[f64]) -> f64 {
    t.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Fixed(Configuration),
    Free,
    Periodic,
}

impl BoundaryCondition {
    /// All-plus fixed boundary.
    pub fn plus(alphabet: Arc<SpinAlphabet>, dim: usize) -> BoundaryCondition {
        BoundaryCondition::Fixed(Configuration::plus(alphabet, Window::cube(dim, 0)))
    }

    /// Constant fixed boundary with the given symbol.
    pub fn constant(alphabet: Arc<SpinAlphabet>, dim: usize, symbol: u8) -> BoundaryCondition {
        BoundaryCondition::Fixed(Configuration::constant(alphabet, Window::cube(dim, 0), symbol))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Slot {
    Inner(u32),
    Outer(u32),
}

#[derive(Clone, Debug)]
struct Clause {
    table: u32,
    slots: Vec<Slot>,
}

/// Hamiltonian of a volume compiled into table lookups. Outer slots hold
/// boundary values and may be refreshed in place.
#[derive(Clone, Debug)]
pub struct EnergyPlan {
    q: usize,
    region: Region,
    tables: Vec<Vec<f64>>,
    clauses: Vec<Clause>,
    outer_sites: Vec<Site>,
    outer_values: Vec<u8>,
}

impl EnergyPlan {
    /// Clauses are all translates `A + x` meeting the volume, in
    /// (anchor, term) lexicographic order.
    pub fn compile(phi: &Potential, region: &Region, bc: &BoundaryCondition) -> Result<EnergyPlan> {
        Ok(EnergyPlan::build(phi, region, region, bc)?.0)
    }

    /// Plan for the single site `x` of a larger volume `ambient`. Outer slots
    /// inside `ambient` are returned as `Some(index into ambient)` and start at
    /// symbol 0; the rest are fixed by the boundary condition.
    pub fn compile_local(phi: &Potential, ambient: &Region, x: Site, bc: &BoundaryCondition) -> Result<(EnergyPlan, Vec<Option<usize>>)> {
        if !ambient.contains(&x) {
            return Err(Error::SiteOutsideWindow(x));
        }
        EnergyPlan::build(phi, &Region::single(x), ambient, bc)
    }

    fn build(phi: &Potential, region: &Region, ambient: &Region, bc: &BoundaryCondition) -> Result<(EnergyPlan, Vec<Option<usize>>)> {
        if region.dim() != phi.dim {
            return Err(Error::DimensionMismatch { expected: phi.dim, got: region.dim() });
        }
        if let BoundaryCondition::Fixed(c) = bc {
            if c.alphabet() != phi.alphabet() {
                return Err(Error::AlphabetMismatch);
            }
            if c.dim() != phi.dim {
                return Err(Error::DimensionMismatch { expected: phi.dim, got: c.dim() });
            }
        }
        let periodic = match bc {
            BoundaryCondition::Periodic => Some(ambient.as_window().ok_or_else(|| Error::InvalidWindow("periodic boundary needs a box volume".into()))?),
            _ => None,
        };
        let wrap = |s: Site| match periodic {
            Some(w) => w.wrap(&s),
            None => s,
        };
        let mut anchors: BTreeSet<(Site, usize)> = BTreeSet::new();
        for (ti, t) in phi.terms.iter().enumerate() {
            for y in region.sites() {
                for a in &t.sites {
                    anchors.insert((wrap(y.sub(a)), ti));
                }
            }
        }
        let mut table_ids: BTreeMap<(usize, Option<Site>), u32> = BTreeMap::new();
        let mut tables = Vec::new();
        let mut clauses = Vec::new();
        let mut outer_index: BTreeMap<Site, u32> = BTreeMap::new();
        let mut outer_sites = Vec::new();
        let mut outer_values = Vec::new();
        let mut sources = Vec::new();
        let mut sorted: Vec<(Site, usize)> = anchors.into_iter().collect();
        sorted.sort_by(|a, b| a.0.lex_cmp(&b.0).then(a.1.cmp(&b.1)));
        'anchor: for (x, ti) in sorted {
            let term = &phi.terms[ti];
            let mut slots = Vec::with_capacity(term.sites.len());
            let mut pending = Vec::new();
            for a in &term.sites {
                let s = wrap(x.add(a));
                if let Some(i) = region.index_of(&s) {
                    slots.push(Slot::Inner(i as u32));
                    continue;
                }
                if let Some(i) = ambient.index_of(&s) {
                    pending.push((slots.len(), s, 0, Some(i)));
                } else {
                    match bc {
                        BoundaryCondition::Free | BoundaryCondition::Periodic => continue 'anchor,
                        BoundaryCondition::Fixed(c) => pending.push((slots.len(), s, c.try_get(&s)?, None)),
                    }
                }
                slots.push(Slot::Outer(u32::MAX));
            }
            for (pos, s, v, src) in pending {
                let k = *outer_index.entry(s).or_insert_with(|| {
                    outer_sites.push(s);
                    outer_values.push(v);
                    sources.push(src);
                    (outer_sites.len() - 1) as u32
                });
                slots[pos] = Slot::Outer(k);
            }
            let key = (ti, phi.overrides.contains_key(&(ti, x)).then_some(x));
            let table = phi.table_for(ti, &x)?;
            let id = *table_ids.entry(key).or_insert_with(|| {
                tables.push(table.to_vec());
                (tables.len() - 1) as u32
            });
            clauses.push(Clause { table: id, slots });
        }
        let plan = EnergyPlan { q: phi.alphabet.len(), region: region.clone(), tables, clauses, outer_sites, outer_values };
        Ok((plan, sources))
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn alphabet_size(&self) -> usize {
        self.q
    }

    pub fn outer_sites(&self) -> &[Site] {
        &self.outer_sites
    }

    pub fn outer_values(&self) -> &[u8] {
        &self.outer_values
    }

    pub fn set_outer_values(&mut self, values: &[u8]) {
        self.outer_values.copy_from_slice(values);
    }

    pub fn set_outer_value(&mut self, k: usize, v: u8) {
        self.outer_values[k] = v;
    }

    pub fn energy(&self, inner: &[u8]) -> f64 {
        let q = self.q;
        let mut e = 0.0;
        for c in &self.clauses {
            let mut idx = 0usize;
            for s in &c.slots {
                let v = match s {
                    Slot::Inner(i) => inner[*i as usize],
                    Slot::Outer(k) => self.outer_values[*k as usize],
                };
                idx = idx * q + v as usize;
            }
            e += self.tables[c.table as usize][idx];
        }
        e
    }

    /// Number of configurations of the volume, if enumerable.
    pub fn states(&self) -> Result<usize> {
        state_count(self.q, self.region.len(), ENUMERATION_CAP)
    }

    /// `-H` for every configuration of the volume, row-major.
    pub fn log_weights(&self) -> Result<Vec<f64>> {
        let n = self.states()?;
        let len = self.region.len();
        let mut out = vec![0.0; n];
        if n <= CHUNK {
            let mut digits = vec![0u8; len];
            for w in out.iter_mut() {
                *w = -self.energy(&digits);
                increment(&mut digits, self.q);
            }
            return Ok(out);
        }
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let mut digits = vec![0u8; len];
            decode_word(c * CHUNK, self.q, &mut digits);
            for w in chunk.iter_mut() {
                *w = -self.energy(&digits);
                increment(&mut digits, self.q);
            }
        });
        Ok(out)
    }

    /// Normalized Boltzmann probabilities for every configuration.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        let mut w = self.log_weights()?;
        normalize_log_weights(&mut w);
        Ok(w)
    }

    /// Same values as `probabilities`, written into a caller buffer; for
    /// small volumes only (at most one chunk of states).
    pub fn probabilities_into(&self, out: &mut [f64], digits: &mut [u8]) {
        debug_assert!(out.len() <= CHUNK);
        digits.iter_mut().for_each(|d| *d = 0);
        for w in out.iter_mut() {
            *w = -self.energy(digits);
            increment(digits, self.q);
        }
        normalize_log_weights(out);
    }

    /// `log Σ exp(-H)`, summed in fixed chunks merged in index order.
    pub fn log_partition(&self) -> Result<f64> {
        let n = self.states()?;
        let len = self.region.len();
        let chunks = n.div_ceil(CHUNK);
        let parts: Vec<(f64, f64)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut digits = vec![0u8; len];
                decode_word(c * CHUNK, self.q, &mut digits);
                let end = ((c + 1) * CHUNK).min(n);
                let mut m = f64::NEG_INFINITY;
                let mut s = 0.0;
                for _ in c * CHUNK..end {
                    let v = -self.energy(&digits);
                    accumulate(&mut m, &mut s, v);
                    increment(&mut digits, self.q);
                }
                (m, s)
            })
            .collect();
        let (m, s) = parts.into_iter().fold((f64::NEG_INFINITY, 0.0), |(m1, s1), (m2, s2)| merge(m1, s1, m2, s2));
        Ok(m + s.ln())
    }
}

fn increment(digits: &mut [u8], q: usize) {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if (digits[k] as usize) < q {
            return;
        }
        digits[k] = 0;
    }
}

fn accumulate(m: &mut f64, s: &mut f64, v: f64) {
    if v > *m {
        *s = *s * (*m - v).exp() + 1.0;
        *m = v;
    } else {
        *s += (v - *m).exp();
    }
}

fn merge(m1: f64, s1: f64, m2: f64, s2: f64) -> (f64, f64) {
    if m1 == f64::NEG_INFINITY {
        return (m2, s2);
    }
    if m2 == f64::NEG_INFINITY {
        return (m1, s1);
    }
    if m1 >= m2 {
        (m1, s1 + s2 * (m2 - m1).exp())
    } else {
        (m2, s2 + s1 * (m1 - m2).exp())
    }
}

/// In-place log-sum-exp normalization; returns `log Z`.
pub fn normalize_log_weights(w: &mut [f64]) -> f64 {
    let m = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for x in w.iter_mut() {
        *x = (*x - m).exp();
        z += *x;
    }
    for x in w.iter_mut() {
        *x /= z;
    }
    m + z.ln()
}

/// `H_Λ(σ|ω)`: every term meeting the volume, σ inside and ω outside.
pub fn hamiltonian(phi: &Potential, volume: &Region, sigma: &Configuration, omega: &Configuration) -> Result<f64> {
    hamiltonian_bc(phi, volume, sigma, &BoundaryCondition::Fixed(omega.clone()))
}

pub fn hamiltonian_bc(phi: &Potential, volume: &Region, sigma: &Configuration, bc: &BoundaryCondition) -> Result<f64> {
    let plan = EnergyPlan::compile(phi, volume, bc)?;
    let inner = sigma.read(volume.sites())?;
    Ok(plan.energy(&inner))
}

/// `log Z_Λ` by enumeration, or by transfer matrix for 1D nearest-neighbour
/// potentials on an interval too long to enumerate.
pub fn log_partition(phi: &Potential, volume: &Region, bc: &BoundaryCondition) -> Result<f64> {
    let plan = EnergyPlan::compile(phi, volume, bc)?;
    match plan.states() {
        Ok(_) => plan.log_partition(),
        Err(e) => {
            let w = volume.as_window().filter(|w| w.dim() == 1).ok_or(e.clone())?;
            let (single, pair) = phi.nearest_neighbour_1d().map_err(|_| e)?;
            TransferChain::log_partition(&single, &pair, &w, bc)
        }
    }
}

/// Sites of the volume within ℓ∞ distance `r` of its complement.
pub fn boundary_size(volume: &Region, r: u32) -> usize {
    if r == 0 {
        return 0;
    }
    if let Some(w) = volume.as_window() {
        return w
            .sites()
            .filter(|x| (0..w.dim()).any(|k| ((x.coord(k) - w.lo().coord(k)) as u32) < r || ((w.hi().coord(k) - x.coord(k)) as u32) < r))
            .count();
    }
    let ball: Vec<Site> = Window::cube(volume.dim(), r as usize).sites().collect();
    volume.sites().iter().filter(|x| ball.iter().any(|b| !volume.contains(&x.add(b)))).count()
}
