//! Sites, windows, alphabets and configurations on finite boxes of Z^d.
//!
//! A configuration is a finite table on a window together with an exterior
//! rule that answers queries for sites outside the window. Lexicographic
//! order compares coordinate 1 first.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;
pub const MAX_SITES: usize = 1 << 24;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    coords: [i32; MAX_DIM],
    dim: u8,
}

impl Site {
    pub fn new(coords: &[i32]) -> Result<Site> {
        let d = coords.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::UnsupportedDimension(d));
        }
        let mut c = [0; MAX_DIM];
        c[..d].copy_from_slice(coords);
        Ok(Site { coords: c, dim: d as u8 })
    }

    /// Panicking constructor for literals in tests and examples.
    pub fn at(coords: &[i32]) -> Site {
        Site::new(coords).expect("valid site")
    }

    pub fn origin(dim: usize) -> Site {
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Site { coords: [0; MAX_DIM], dim: dim as u8 }
    }

    /// Unit vector along axis `k` (0-based).
    pub fn unit(dim: usize, k: usize) -> Site {
        let mut s = Site::origin(dim);
        s.coords[k] = 1;
        s
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    pub fn coord(&self, k: usize) -> i32 {
        self.coords[k]
    }

    pub fn add(&self, other: &Site) -> Site {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = *self;
        for k in 0..self.dim() {
            s.coords[k] += other.coords[k];
        }
        s
    }

    pub fn sub(&self, other: &Site) -> Site {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = *self;
        for k in 0..self.dim() {
            s.coords[k] -= other.coords[k];
        }
        s
    }

    pub fn neg(&self) -> Site {
        let mut s = *self;
        for k in 0..self.dim() {
            s.coords[k] = -s.coords[k];
        }
        s
    }

    pub fn linf(&self) -> u32 {
        self.coords().iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn linf_dist(&self, other: &Site) -> u32 {
        self.sub(other).linf()
    }

    pub fn lex_cmp(&self, other: &Site) -> Ordering {
        self.coords().cmp(other.coords())
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl Serialize for Site {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Site, D::Error> {
        let v = Vec::<i32>::deserialize(d)?;
        Site::new(&v).map_err(serde::de::Error::custom)
    }
}

/// Lexicographic `x ≤ y`, coordinate 1 first.
pub fn lex_le(x: &Site, y: &Site) -> Result<bool> {
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    Ok(x.lex_cmp(y) != Ordering::Greater)
}

/// Finite box `[lo, hi]` in Z^d. Sites are indexed row-major with the last
/// coordinate fastest, which coincides with lexicographic order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr", into = "WindowRepr")]
pub struct Window {
    lo: Site,
    hi: Site,
}

#[derive(Serialize, Deserialize)]
struct WindowRepr {
    lo: Vec<i32>,
    hi: Vec<i32>,
}

impl TryFrom<WindowRepr> for Window {
    type Error = Error;
    fn try_from(r: WindowRepr) -> Result<Window> {
        Window::new(Site::new(&r.lo)?, Site::new(&r.hi)?)
    }
}

impl From<Window> for WindowRepr {
    fn from(w: Window) -> WindowRepr {
        WindowRepr { lo: w.lo.coords().to_vec(), hi: w.hi.coords().to_vec() }
    }
}

impl Window {
    pub fn new(lo: Site, hi: Site) -> Result<Window> {
        if lo.dim != hi.dim {
            return Err(Error::DimensionMismatch { expected: lo.dim(), got: hi.dim() });
        }
        let mut count: u128 = 1;
        for k in 0..lo.dim() {
            if lo.coords[k] > hi.coords[k] {
                return Err(Error::InvalidWindow(format!("lo {:?} exceeds hi {:?}", lo, hi)));
            }
            count *= (hi.coords[k] as i64 - lo.coords[k] as i64 + 1) as u128;
        }
        if count > MAX_SITES as u128 {
            return Err(Error::WindowTooLarge { sites: count.min(usize::MAX as u128) as usize, cap: MAX_SITES });
        }
        Ok(Window { lo, hi })
    }

    /// The centred cube `[-n, n]^d`.
    pub fn cube(dim: usize, n: usize) -> Window {
        let n = n as i32;
        let lo = Site::new(&vec![-n; dim]).expect("dimension");
        let hi = Site::new(&vec![n; dim]).expect("dimension");
        Window::new(lo, hi).expect("cube within cap")
    }

    /// One-dimensional interval `[a, b]`.
    pub fn interval(a: i32, b: i32) -> Result<Window> {
        Window::new(Site::new(&[a])?, Site::new(&[b])?)
    }

    /// Box with the given corner and side lengths.
    pub fn with_sides(lo: Site, sides: &[usize]) -> Result<Window> {
        if sides.len() != lo.dim() || sides.contains(&0) {
            return Err(Error::InvalidWindow("side lengths must be positive, one per axis".into()));
        }
        let hi: Vec<i32> = lo.coords().iter().zip(sides).map(|(l, s)| l + *s as i32 - 1).collect();
        Window::new(lo, Site::new(&hi)?)
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> Site {
        self.lo
    }

    pub fn hi(&self) -> Site {
        self.hi
    }

    pub fn side(&self, k: usize) -> usize {
        (self.hi.coords[k] - self.lo.coords[k] + 1) as usize
    }

    pub fn sides(&self) -> Vec<usize> {
        (0..self.dim()).map(|k| self.side(k)).collect()
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|k| self.side(k)).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: &Site) -> bool {
        x.dim == self.lo.dim
            && (0..self.dim()).all(|k| self.lo.coords[k] <= x.coords[k] && x.coords[k] <= self.hi.coords[k])
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    pub fn index_of(&self, x: &Site) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut idx = 0;
        for k in 0..self.dim() {
            idx = idx * self.side(k) + (x.coords[k] - self.lo.coords[k]) as usize;
        }
        Some(idx)
    }

    pub fn site_at(&self, mut idx: usize) -> Site {
        let mut s = self.lo;
        for k in (0..self.dim()).rev() {
            let side = self.side(k);
            s.coords[k] = self.lo.coords[k] + (idx % side) as i32;
            idx /= side;
        }
        s
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site_at(i))
    }

    pub fn translate(&self, x: &Site) -> Window {
        Window { lo: self.lo.add(x), hi: self.hi.add(x) }
    }

    /// Box grown by `r` in every direction.
    pub fn expand(&self, r: usize) -> Result<Window> {
        let r = Site::new(&vec![r as i32; self.dim()])?;
        Window::new(self.lo.sub(&r), self.hi.add(&r))
    }

    /// Periodic image of `x` inside the window.
    pub fn wrap(&self, x: &Site) -> Site {
        let mut s = *x;
        for k in 0..self.dim() {
            let side = self.side(k) as i32;
            s.coords[k] = self.lo.coords[k] + (x.coords[k] - self.lo.coords[k]).rem_euclid(side);
        }
        s
    }
}

/// Arbitrary finite site set, stored sorted lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Region {
    dim: usize,
    sites: Vec<Site>,
}

impl Region {
    pub fn new(dim: usize, sites: impl IntoIterator<Item = Site>) -> Result<Region> {
        let set: BTreeSet<Site> = sites.into_iter().collect();
        for s in &set {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: s.dim() });
            }
        }
        let mut sites: Vec<Site> = set.into_iter().collect();
        sites.sort_by(|a, b| a.lex_cmp(b));
        Ok(Region { dim, sites })
    }

    pub fn single(x: Site) -> Region {
        Region { dim: x.dim(), sites: vec![x] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn index_of(&self, x: &Site) -> Option<usize> {
        self.sites.binary_search_by(|s| s.lex_cmp(x)).ok()
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.index_of(x).is_some()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    pub fn union(&self, other: &Region) -> Region {
        Region::new(self.dim, self.sites.iter().chain(other.sites.iter()).copied()).expect("same dimension")
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region { dim: self.dim, sites: self.sites.iter().filter(|s| !other.contains(s)).copied().collect() }
    }

    pub fn translate(&self, x: &Site) -> Region {
        Region { dim: self.dim, sites: self.sites.iter().map(|s| s.add(x)).collect() }
    }

    /// Sites within ℓ∞ distance `r` of the region.
    pub fn thicken(&self, r: usize) -> Region {
        let ball = Window::cube(self.dim, r);
        Region::new(self.dim, self.sites.iter().flat_map(|s| ball.sites().map(move |b| s.add(&b)))).expect("same dimension")
    }

    /// The box this region fills exactly, if any.
    pub fn as_window(&self) -> Option<Window> {
        let first = *self.sites.first()?;
        let last = *self.sites.last()?;
        let mut lo = first;
        let mut hi = last;
        for s in &self.sites {
            for k in 0..self.dim {
                lo.coords[k] = lo.coords[k].min(s.coords[k]);
                hi.coords[k] = hi.coords[k].max(s.coords[k]);
            }
        }
        let w = Window::new(lo, hi).ok()?;
        (w.len() == self.len()).then_some(w)
    }

    /// Smallest box containing the region.
    pub fn bounding_window(&self) -> Option<Window> {
        let mut lo = *self.sites.first()?;
        let mut hi = lo;
        for s in &self.sites {
            for k in 0..self.dim {
                lo.coords[k] = lo.coords[k].min(s.coords[k]);
                hi.coords[k] = hi.coords[k].max(s.coords[k]);
            }
        }
        Window::new(lo, hi).ok()
    }
}

impl From<Window> for Region {
    fn from(w: Window) -> Region {
        Region { dim: w.dim(), sites: w.sites().collect() }
    }
}

impl From<&Window> for Region {
    fn from(w: &Window) -> Region {
        Region::from(*w)
    }
}

/// Ordered finite spin alphabet with a distinguished plus symbol.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(try_from = "AlphabetRepr", into = "AlphabetRepr")]
pub struct SpinAlphabet {
    values: Vec<f64>,
    plus: usize,
}

#[derive(Serialize, Deserialize)]
struct AlphabetRepr {
    symbols: Vec<f64>,
    plus: usize,
}

impl TryFrom<AlphabetRepr> for SpinAlphabet {
    type Error = Error;
    fn try_from(r: AlphabetRepr) -> Result<SpinAlphabet> {
        SpinAlphabet::new(r.symbols, r.plus)
    }
}

impl From<SpinAlphabet> for AlphabetRepr {
    fn from(a: SpinAlphabet) -> AlphabetRepr {
        AlphabetRepr { symbols: a.values, plus: a.plus }
    }
}

impl SpinAlphabet {
    /// Symbols must be strictly increasing; their order is the spin order.
    pub fn new(values: Vec<f64>, plus: usize) -> Result<SpinAlphabet> {
        if values.is_empty() {
            return Err(Error::InvalidAlphabet("empty alphabet".into()));
        }
        if values.len() > u8::MAX as usize {
            return Err(Error::InvalidAlphabet("more than 255 symbols".into()));
        }
        if plus >= values.len() {
            return Err(Error::InvalidAlphabet(format!("plus index {plus} out of range")));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidAlphabet("symbols must be distinct and increasing".into()));
        }
        Ok(SpinAlphabet { values, plus })
    }

    /// `{-1, +1}` with plus = +1.
    pub fn ising() -> Arc<SpinAlphabet> {
        Arc::new(SpinAlphabet { values: vec![-1.0, 1.0], plus: 1 })
    }

    /// `{0, 1}` with plus = 1.
    pub fn binary() -> Arc<SpinAlphabet> {
        Arc::new(SpinAlphabet { values: vec![0.0, 1.0], plus: 1 })
    }

    /// `{-1, 0, +1}` with plus = +1.
    pub fn ternary() -> Arc<SpinAlphabet> {
        Arc::new(SpinAlphabet { values: vec![-1.0, 0.0, 1.0], plus: 2 })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn plus(&self) -> u8 {
        self.plus as u8
    }

    pub fn value(&self, symbol: u8) -> f64 {
        self.values[symbol as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn symbol_of(&self, value: f64) -> Option<u8> {
        self.values.iter().position(|v| *v == value).map(|i| i as u8)
    }

    pub fn check(&self, symbol: u8) -> Result<()> {
        if (symbol as usize) < self.len() {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange { symbol: symbol as usize, size: self.len() })
        }
    }
}

/// Rule answering queries outside the window.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exterior {
    Constant(u8),
    Periodic,
    Undefined,
    /// Sites lexicographically ≤ `pivot` read `lower`, the rest read `upper`.
    Splice { pivot: Site, lower: Box<Configuration>, upper: Box<Configuration> },
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(try_from = "ConfigurationRepr", into = "ConfigurationRepr")]
pub struct Configuration {
    alphabet: Arc<SpinAlphabet>,
    window: Window,
    values: Vec<u8>,
    exterior: Exterior,
}

#[derive(Serialize, Deserialize)]
struct ConfigurationRepr {
    dimension: usize,
    lo: Vec<i32>,
    hi: Vec<i32>,
    alphabet: SpinAlphabet,
    values: Vec<u8>,
    exterior: Exterior,
}

impl TryFrom<ConfigurationRepr> for Configuration {
    type Error = Error;
    fn try_from(r: ConfigurationRepr) -> Result<Configuration> {
        if r.lo.len() != r.dimension {
            return Err(Error::DimensionMismatch { expected: r.dimension, got: r.lo.len() });
        }
        let w = Window::new(Site::new(&r.lo)?, Site::new(&r.hi)?)?;
        Configuration::from_values(Arc::new(r.alphabet), w, r.values, r.exterior)
    }
}

impl From<Configuration> for ConfigurationRepr {
    fn from(c: Configuration) -> ConfigurationRepr {
        ConfigurationRepr {
            dimension: c.window.dim(),
            lo: c.window.lo().coords().to_vec(),
            hi: c.window.hi().coords().to_vec(),
            alphabet: (*c.alphabet).clone(),
            values: c.values,
            exterior: c.exterior,
        }
    }
}

impl Configuration {
    pub fn from_values(alphabet: Arc<SpinAlphabet>, window: Window, values: Vec<u8>, exterior: Exterior) -> Result<Configuration> {
        if values.len() != window.len() {
            return Err(Error::InvalidConfig(format!("{} values for a window of {} sites", values.len(), window.len())));
        }
        for v in &values {
            alphabet.check(*v)?;
        }
        if let Exterior::Constant(c) = exterior {
            alphabet.check(c)?;
        }
        Ok(Configuration { alphabet, window, values, exterior })
    }

    /// Constant configuration, inside and out.
    pub fn constant(alphabet: Arc<SpinAlphabet>, window: Window, symbol: u8) -> Configuration {
        alphabet.check(symbol).expect("symbol in alphabet");
        Configuration { values: vec![symbol; window.len()], exterior: Exterior::Constant(symbol), alphabet, window }
    }

    pub fn plus(alphabet: Arc<SpinAlphabet>, window: Window) -> Configuration {
        let p = alphabet.plus();
        Configuration::constant(alphabet, window, p)
    }

    pub fn alphabet(&self) -> &Arc<SpinAlphabet> {
        &self.alphabet
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn exterior(&self) -> &Exterior {
        &self.exterior
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn with_exterior(mut self, exterior: Exterior) -> Configuration {
        self.exterior = exterior;
        self
    }

    /// Value at any site; `None` when the exterior rule leaves it open.
    pub fn get(&self, x: &Site) -> Option<u8> {
        if let Some(i) = self.window.index_of(x) {
            return Some(self.values[i]);
        }
        match &self.exterior {
            Exterior::Constant(c) => Some(*c),
            Exterior::Periodic => Some(self.values[self.window.index_of(&self.window.wrap(x))?]),
            Exterior::Undefined => None,
            Exterior::Splice { pivot, lower, upper } => {
                if x.lex_cmp(pivot) != Ordering::Greater {
                    lower.get(x)
                } else {
                    upper.get(x)
                }
            }
        }
    }

    pub fn try_get(&self, x: &Site) -> Result<u8> {
        self.get(x).ok_or(Error::ExteriorUndefined(*x))
    }

    pub fn set(&mut self, x: &Site, symbol: u8) -> Result<()> {
        self.alphabet.check(symbol)?;
        let i = self.window.index_of(x).ok_or(Error::SiteOutsideWindow(*x))?;
        self.values[i] = symbol;
        Ok(())
    }

    /// Values read at the given sites, in order.
    pub fn read(&self, sites: &[Site]) -> Result<Vec<u8>> {
        sites.iter().map(|s| self.try_get(s)).collect()
    }

    /// Copy with `sites` overwritten by `values`; sites must lie in the window.
    pub fn overwrite(&self, sites: &[Site], values: &[u8]) -> Result<Configuration> {
        let mut c = self.clone();
        for (s, v) in sites.iter().zip(values) {
            c.set(s, *v)?;
        }
        Ok(c)
    }

    /// Configuration on a larger (or any) window reading from `self`.
    pub fn rewindow(&self, window: Window) -> Result<Configuration> {
        let values = window.sites().map(|s| self.try_get(&s)).collect::<Result<Vec<_>>>()?;
        Ok(Configuration { alphabet: self.alphabet.clone(), window, values, exterior: self.exterior_for_rewindow() })
    }

    fn exterior_for_rewindow(&self) -> Exterior {
        match &self.exterior {
            Exterior::Periodic => Exterior::Splice {
                pivot: self.window.hi(),
                lower: Box::new(self.clone()),
                upper: Box::new(self.clone()),
            },
            e => e.clone(),
        }
    }

    /// True when both configurations agree on every site of `sites`.
    pub fn agrees_on(&self, other: &Configuration, sites: impl IntoIterator<Item = Site>) -> bool {
        sites.into_iter().all(|s| self.get(&s) == other.get(&s))
    }
}

fn same_ambient(a: &Configuration, b: &Configuration) -> Result<()> {
    if a.window != b.window {
        return Err(Error::WindowMismatch);
    }
    if a.alphabet != b.alphabet {
        return Err(Error::AlphabetMismatch);
    }
    Ok(())
}

/// `σ_Λ ω_{Λ^c}`.
pub fn concat(sigma: &Configuration, omega: &Configuration, volume: &Region) -> Result<Configuration> {
    same_ambient(sigma, omega)?;
    if !volume.sites().iter().all(|s| omega.window.contains(s)) {
        return Err(Error::RegionNotContained);
    }
    let mut out = omega.clone();
    for s in volume.sites() {
        let i = out.window.index_of(s).expect("contained");
        out.values[i] = sigma.values[i];
    }
    Ok(out)
}

/// `σ^ξ`: σ at sites ≤ 0, ξ at sites > 0, inside the window and beyond.
pub fn xi_splice(sigma: &Configuration, xi: &Configuration) -> Result<Configuration> {
    same_ambient(sigma, xi)?;
    let origin = Site::origin(sigma.dim());
    let values = sigma
        .window
        .sites()
        .zip(sigma.values.iter().zip(&xi.values))
        .map(|(s, (a, b))| if s.lex_cmp(&origin) != Ordering::Greater { *a } else { *b })
        .collect();
    Ok(Configuration {
        alphabet: sigma.alphabet.clone(),
        window: sigma.window,
        values,
        exterior: Exterior::Splice { pivot: origin, lower: Box::new(splice_source(sigma, &origin, true)), upper: Box::new(splice_source(xi, &origin, false)) },
    })
}

/// Unwraps an existing splice at the same pivot so repeated splicing does not nest.
fn splice_source(c: &Configuration, pivot: &Site, lower: bool) -> Configuration {
    match &c.exterior {
        Exterior::Splice { pivot: p, lower: l, upper: u } if p == pivot => {
            if lower {
                (**l).clone()
            } else {
                (**u).clone()
            }
        }
        _ => c.clone(),
    }
}

/// `σ^+`.
pub fn plus_splice(sigma: &Configuration) -> Configuration {
    let plus = Configuration::plus(sigma.alphabet.clone(), sigma.window);
    xi_splice(sigma, &plus).expect("same ambient")
}

/// `T_Λ^ω[x, σ, +]`: ω off Λ, σ at y ≤ x in Λ, plus at y > x in Λ.
pub fn telescope_config(volume: &Region, x: &Site, sigma: &Configuration, omega: &Configuration) -> Result<Configuration> {
    if !volume.contains(x) {
        return Err(Error::SiteOutsideWindow(*x));
    }
    same_ambient(sigma, omega)?;
    let mut out = omega.clone();
    let plus = sigma.alphabet.plus();
    for s in volume.sites() {
        let i = out.window.index_of(s).ok_or(Error::RegionNotContained)?;
        out.values[i] = if s.lex_cmp(x) != Ordering::Greater { sigma.values[i] } else { plus };
    }
    Ok(out)
}

/// `(τ_x σ)(y) = σ(x + y)`.
pub fn translate(sigma: &Configuration, x: &Site) -> Configuration {
    let shift = x.neg();
    let exterior = match &sigma.exterior {
        Exterior::Splice { pivot, lower, upper } => Exterior::Splice {
            pivot: pivot.add(&shift),
            lower: Box::new(translate(lower, x)),
            upper: Box::new(translate(upper, x)),
        },
        e => e.clone(),
    };
    Configuration { alphabet: sigma.alphabet.clone(), window: sigma.window.translate(&shift), values: sigma.values.clone(), exterior }
}

/// Number of configurations on `n` sites over `q` symbols, if at most `cap`.
pub fn state_count(q: usize, n: usize, cap: usize) -> Result<usize> {
    let states = (q as f64).powi(n as i32);
    if states > cap as f64 {
        return Err(Error::StateSpaceTooLarge { states, cap });
    }
    Ok(q.pow(n as u32))
}

/// Calls `f(index, digits)` for every word of length `n` over `q` symbols in
/// row-major order (first digit most significant).
pub fn for_each_word(q: usize, n: usize, mut f: impl FnMut(usize, &[u8])) {
    let mut digits = vec![0u8; n];
    let total = q.pow(n as u32);
    for idx in 0..total {
        f(idx, &digits);
        for k in (0..n).rev() {
            digits[k] += 1;
            if (digits[k] as usize) < q {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Digits of `idx` in base `q`, most significant first.
pub fn decode_word(mut idx: usize, q: usize, out: &mut [u8]) {
    for k in (0..out.len()).rev() {
        out[k] = (idx % q) as u8;
        idx /= q;
    }
}

pub fn encode_word(digits: &[u8], q: usize) -> usize {
    digits.iter().fold(0, |acc, d| acc * q + *d as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ising_cfg(window: Window, vals: &[i8]) -> Configuration {
        let a = SpinAlphabet::ising();
        let values = vals.iter().map(|v| if *v > 0 { 1 } else { 0 }).collect();
        Configuration::from_values(a, window, values, Exterior::Constant(1)).unwrap()
    }

    #[test]
    fn lex_examples() {
        let x = Site::at(&[0, -3]);
        assert!(lex_le(&x, &x).unwrap());
        assert!(lex_le(&x, &Site::at(&[1, 5])).unwrap());
        assert!(!lex_le(&Site::at(&[0, 2]), &Site::at(&[0, 1])).unwrap());
        assert!(matches!(lex_le(&Site::at(&[0]), &Site::at(&[0, 0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn lex_is_total_order_exhaustive() {
        for d in 1..=3 {
            let sites: Vec<Site> = Window::cube(d, 3).sites().collect();
            if d == 3 {
                // 343 sites; pairwise plus a transitivity sample over triples in row-major neighbours
                for a in &sites {
                    for b in &sites {
                        let ab = lex_le(a, b).unwrap();
                        let ba = lex_le(b, a).unwrap();
                        assert!(ab || ba);
                        if ab && ba {
                            assert_eq!(a, b);
                        }
                    }
                }
                continue;
            }
            for a in &sites {
                for b in &sites {
                    let ab = lex_le(a, b).unwrap();
                    assert!(ab || lex_le(b, a).unwrap());
                    if ab && lex_le(b, a).unwrap() {
                        assert_eq!(a, b);
                    }
                    for c in &sites {
                        if ab && lex_le(b, c).unwrap() {
                            assert!(lex_le(a, c).unwrap());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn window_indexing_is_lexicographic() {
        let w = Window::new(Site::at(&[-1, 2]), Site::at(&[1, 4])).unwrap();
        assert_eq!(w.len(), 9);
        let sites: Vec<Site> = w.sites().collect();
        for (i, s) in sites.iter().enumerate() {
            assert_eq!(w.index_of(s), Some(i));
        }
        assert!(sites.windows(2).all(|p| p[0].lex_cmp(&p[1]) == Ordering::Less));
        assert!(Window::new(Site::at(&[1]), Site::at(&[0])).is_err());
    }

    #[test]
    fn window_cap() {
        let r = Window::new(Site::at(&[0, 0]), Site::at(&[4096, 4096]));
        assert!(matches!(r, Err(Error::WindowTooLarge { .. })));
    }

    #[test]
    fn alphabet_validation() {
        assert!(SpinAlphabet::new(vec![], 0).is_err());
        assert!(SpinAlphabet::new(vec![-1.0, 1.0], 2).is_err());
        assert!(SpinAlphabet::new(vec![1.0, 1.0], 0).is_err());
        assert!(SpinAlphabet::new(vec![-1.0, 0.0, 1.0], 2).is_ok());
    }

    #[test]
    fn concat_examples() {
        let w = Window::interval(0, 2).unwrap();
        let minus = ising_cfg(w, &[-1, -1, -1]);
        let plus = ising_cfg(w, &[1, 1, 1]);
        let vol = Region::single(Site::at(&[1]));
        let c = concat(&minus, &plus, &vol).unwrap();
        assert_eq!(c.values(), &[1, 0, 1]);
        assert_eq!(concat(&minus, &minus, &vol).unwrap(), minus);
        let outside = Region::single(Site::at(&[5]));
        assert_eq!(concat(&minus, &plus, &outside), Err(Error::RegionNotContained));
    }

    #[test]
    fn plus_splice_examples() {
        let w = Window::interval(-2, 2).unwrap();
        let a = SpinAlphabet::ising();
        let minus = Configuration::constant(a.clone(), w, 0);
        let s = plus_splice(&minus);
        assert_eq!(s.values(), &[0, 0, 0, 1, 1]);
        assert_eq!(s.get(&Site::at(&[-7])), Some(0));
        assert_eq!(s.get(&Site::at(&[7])), Some(1));
        assert_eq!(plus_splice(&s), s);
        let plus = Configuration::plus(a, w);
        assert!(plus_splice(&plus).agrees_on(&plus, Window::interval(-6, 6).unwrap().sites()));
    }

    #[test]
    fn xi_splice_examples() {
        let w = Window::interval(-1, 1).unwrap();
        let sigma = ising_cfg(w, &[-1, 1, -1]);
        let xi = ising_cfg(w, &[1, -1, 1]);
        assert_eq!(xi_splice(&sigma, &xi).unwrap().values(), &[0, 1, 1]);
        let same = xi_splice(&sigma, &sigma).unwrap();
        assert!(same.agrees_on(&sigma, Window::interval(-5, 5).unwrap().sites()));
        let other = ising_cfg(Window::interval(0, 2).unwrap(), &[1, 1, 1]);
        assert_eq!(xi_splice(&sigma, &other), Err(Error::WindowMismatch));
    }

    #[test]
    fn plus_splice_equals_xi_splice_with_plus_exhaustive() {
        let a = SpinAlphabet::ising();
        for d in 1..=2 {
            let w = Window::cube(d, 1);
            let n = w.len();
            let probe = w.expand(2).unwrap();
            for_each_word(2, n, |_, digits| {
                let s = Configuration::from_values(a.clone(), w, digits.to_vec(), Exterior::Constant(0)).unwrap();
                let plus = Configuration::plus(a.clone(), w);
                let lhs = plus_splice(&s);
                let rhs = xi_splice(&s, &plus).unwrap();
                assert_eq!(lhs, rhs);
                assert!(lhs.agrees_on(&rhs, probe.sites()));
            });
        }
    }

    #[test]
    fn telescope_examples() {
        let w = Window::interval(-3, 3).unwrap();
        let a = SpinAlphabet::ising();
        let sigma = Configuration::constant(a.clone(), w, 0);
        let omega = Configuration::plus(a, w);
        let vol = Region::from(Window::interval(-1, 1).unwrap());
        let t = telescope_config(&vol, &Site::at(&[0]), &sigma, &omega).unwrap();
        assert_eq!(t.values(), &[1, 1, 0, 0, 1, 1, 1]);
        let tmax = telescope_config(&vol, &Site::at(&[1]), &sigma, &omega).unwrap();
        assert_eq!(tmax, concat(&sigma, &omega, &vol).unwrap());
        assert!(telescope_config(&vol, &Site::at(&[2]), &sigma, &omega).is_err());
    }

    #[test]
    fn telescope_consecutive_differ_at_one_site() {
        let a = SpinAlphabet::ising();
        for len in 1..=5usize {
            let w = Window::interval(-1, len as i32).unwrap();
            let vol = Region::from(Window::interval(0, len as i32 - 1).unwrap());
            for_each_word(2, w.len(), |_, sd| {
                let sigma = Configuration::from_values(a.clone(), w, sd.to_vec(), Exterior::Constant(0)).unwrap();
                let omega = Configuration::from_values(a.clone(), w, sd.iter().map(|v| 1 - v).collect(), Exterior::Constant(1)).unwrap();
                let ts: Vec<Configuration> = vol.sites().iter().map(|x| telescope_config(&vol, x, &sigma, &omega).unwrap()).collect();
                for (k, pair) in ts.windows(2).enumerate() {
                    let diff: Vec<usize> = (0..w.len()).filter(|i| pair[0].values()[*i] != pair[1].values()[*i]).collect();
                    let succ = w.index_of(&vol.sites()[k + 1]).unwrap();
                    assert!(diff.is_empty() || diff == vec![succ]);
                    assert!(diff.len() <= 1);
                }
                assert_eq!(ts.last().unwrap(), &concat(&sigma, &omega, &vol).unwrap());
            });
        }
    }

    #[test]
    fn translate_examples() {
        let w = Window::interval(0, 2).unwrap();
        let s = ising_cfg(w, &[1, -1, 1]);
        assert_eq!(translate(&s, &Site::at(&[0])), s);
        let t = translate(&s, &Site::at(&[1]));
        assert_eq!(t.window(), &Window::interval(-1, 1).unwrap());
        assert_eq!(t.values(), s.values());
        for y in -4..4 {
            assert_eq!(t.get(&Site::at(&[y])), s.get(&Site::at(&[y + 1])));
        }
        let c = Configuration::plus(SpinAlphabet::ising(), w);
        let tc = translate(&c, &Site::at(&[3]));
        assert!(tc.agrees_on(&c, Window::interval(-10, 10).unwrap().sites()));
        assert_eq!(translate(&t, &Site::at(&[-1])), s);
    }

    #[test]
    fn periodic_exterior_wraps() {
        let w = Window::interval(0, 2).unwrap();
        let s = ising_cfg(w, &[1, -1, -1]).with_exterior(Exterior::Periodic);
        assert_eq!(s.get(&Site::at(&[3])), Some(1));
        assert_eq!(s.get(&Site::at(&[-1])), Some(0));
        let u = ising_cfg(w, &[1, 1, 1]).with_exterior(Exterior::Undefined);
        assert_eq!(u.try_get(&Site::at(&[3])), Err(Error::ExteriorUndefined(Site::at(&[3]))));
    }

    #[test]
    fn json_roundtrip() {
        let w = Window::interval(-1, 1).unwrap();
        let s = plus_splice(&ising_cfg(w, &[-1, 1, -1]));
        let text = serde_json::to_string(&s).unwrap();
        let back: Configuration = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["dimension", "lo", "hi", "alphabet", "values", "exterior"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn word_enumeration_is_row_major() {
        let mut seen = Vec::new();
        for_each_word(3, 2, |i, d| {
            assert_eq!(encode_word(d, 3), i);
            let mut back = [0u8; 2];
            decode_word(i, 3, &mut back);
            assert_eq!(&back, d);
            seen.push(d.to_vec());
        });
        assert_eq!(seen.len(), 9);
        assert_eq!(seen[1], vec![0, 1]);
    }

    #[test]
    fn region_ops() {
        let r = Region::from(Window::cube(2, 1));
        assert_eq!(r.len(), 9);
        assert_eq!(r.as_window(), Some(Window::cube(2, 1)));
        let inner = Region::single(Site::origin(2));
        let ring = r.difference(&inner);
        assert_eq!(ring.len(), 8);
        assert!(ring.as_window().is_none());
        assert_eq!(inner.thicken(1), r);
    }
}
