//! Coupling chains: multi-scale (MQA) products over inflation layers,
//! last-layer two-letter chains, Aubry–André–Harper modulation and Gaussian
//! random couplings, plus the disorder statistics used to compare them.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::substitution::{format_symbols, inflate_symmetrized, InflationRule, LetterSequence, Symbol};

/// Golden ratio, the AAH modulation frequency.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Elementary couplings attached to the letters `o`, `a`, `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementaryCouplings {
    pub j_o: f64,
    pub j_a: f64,
    pub j_b: f64,
}

impl ElementaryCouplings {
    pub fn new(j_o: f64, j_a: f64, j_b: f64) -> Result<Self> {
        for (name, v) in [("j_o", j_o), ("j_a", j_a), ("j_b", j_b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidCouplings(format!("{name} = {v} must be positive")));
            }
        }
        Ok(ElementaryCouplings { j_o, j_a, j_b })
    }

    /// `j_o = j_a = 1`, `j_b = r`.
    pub fn from_ratio(r: f64) -> Result<Self> {
        ElementaryCouplings::new(1.0, 1.0, r)
    }

    pub fn ratio(&self) -> f64 {
        self.j_b / self.j_a
    }

    pub fn get(&self, s: Symbol) -> f64 {
        match s {
            Symbol::O => self.j_o,
            Symbol::A => self.j_a,
            Symbol::B => self.j_b,
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        ElementaryCouplings::new(c * self.j_o, c * self.j_a, c * self.j_b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKind {
    /// `2L` couplings of consecutive Majorana modes.
    Majorana,
    /// `L` nearest-neighbour bond couplings of a spin chain.
    Bond,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Provenance {
    Mqa { rule: String, seed: String, steps: usize, couplings: ElementaryCouplings },
    LastLayer { sequence: String, couplings: ElementaryCouplings },
    Aah { length: usize, amplitude: f64, index_origin: String },
    Random { sites: usize, mean: f64, variance: f64, seed: u64 },
    Expanded { from: Box<Provenance> },
    Reinterpreted { from: Box<Provenance>, kind: ChainKind },
    Custom { note: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingChain {
    pub values: Vec<f64>,
    pub kind: ChainKind,
    pub provenance: Provenance,
}

impl CouplingChain {
    pub fn new(values: Vec<f64>, kind: ChainKind, provenance: Provenance) -> Result<Self> {
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Positivity(format!("coupling {k} = {v}")));
        }
        Ok(CouplingChain { values, kind, provenance })
    }

    pub fn custom(values: Vec<f64>, kind: ChainKind) -> Result<Self> {
        CouplingChain::new(values, kind, Provenance::Custom { note: String::new() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Same couplings under another kind. An `L`-site XX chain is two copies
    /// of the Majorana chain with the same `L` couplings, so a Majorana chain
    /// of length `L` read as bonds describes an `L`-site XX chain.
    pub fn reinterpret(&self, kind: ChainKind) -> CouplingChain {
        if kind == self.kind {
            return self.clone();
        }
        CouplingChain {
            values: self.values.clone(),
            kind,
            provenance: Provenance::Reinterpreted { from: Box::new(self.provenance.clone()), kind },
        }
    }

    /// `index,value` with 1-based indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value\n");
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", k + 1, v).unwrap();
        }
        out
    }
}

fn normalize(values: &mut [f64]) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter_mut().for_each(|v| *v /= mean);
}

/// Log of the layer-by-layer coupling products of every final letter.
fn mqa_log_products(
    rule: &InflationRule,
    seed: &LetterSequence,
    n: usize,
    j: &ElementaryCouplings,
) -> Result<(Vec<f64>, LetterSequence)> {
    let ancestry = inflate_symmetrized(seed, rule, n)?;
    let mut logs: Vec<f64> = ancestry.layers[0].iter().map(|node| j.get(node.symbol).ln()).collect();
    for layer in &ancestry.layers[1..] {
        logs = layer
            .iter()
            .map(|node| {
                let parents = node.parents.as_slice();
                let inherited = parents.iter().map(|&p| logs[p]).sum::<f64>() / parents.len() as f64;
                j.get(node.symbol).ln() + inherited
            })
            .collect();
    }
    Ok((logs, ancestry.sequence()))
}

/// Unnormalized MQA products: for each final letter, the product of the
/// elementary couplings of its ancestors over all layers. A merged letter
/// inherits the geometric mean of its two parents' products.
pub fn mqa_products(
    rule: &InflationRule,
    seed: &LetterSequence,
    n: usize,
    j: &ElementaryCouplings,
) -> Result<Vec<f64>> {
    let (logs, _) = mqa_log_products(rule, seed, n, j)?;
    Ok(logs.into_iter().map(f64::exp).collect())
}

/// MQA bond couplings normalized to unit mean.
pub fn mqa_couplings(
    rule: &InflationRule,
    seed: &LetterSequence,
    n: usize,
    j: &ElementaryCouplings,
) -> Result<CouplingChain> {
    if n == 0 {
        return Err(Error::InvalidCouplings("MQA needs at least one inflation step".into()));
    }
    let (logs, _) = mqa_log_products(rule, seed, n, j)?;
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut values: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    normalize(&mut values);
    CouplingChain::new(
        values,
        ChainKind::Bond,
        Provenance::Mqa {
            rule: rule.name().to_string(),
            seed: format_symbols(&seed.letters),
            steps: n,
            couplings: *j,
        },
    )
}

/// Two-valued chain read off the final letters only, normalized to unit mean.
pub fn last_layer_couplings(sequence: &LetterSequence, j: &ElementaryCouplings) -> Result<CouplingChain> {
    if sequence.letters.contains(&Symbol::O) {
        return Err(Error::InvalidCouplings("no last-layer coupling for letter o".into()));
    }
    let mut values: Vec<f64> = sequence.letters.iter().map(|s| j.get(*s)).collect();
    normalize(&mut values);
    CouplingChain::new(
        values,
        ChainKind::Bond,
        Provenance::LastLayer { sequence: sequence.to_string(), couplings: *j },
    )
}

/// Majorana couplings from bonds: even links carry the bonds, each odd
/// (intra-site) link the average of its two neighbours, cyclically.
///
/// Index `m` of the output is the 0-based position of `J_{m+1}`, so
/// `out[2k+1] = bond[k]` and `out[2k] = (bond[k-1] + bond[k]) / 2`.
pub fn expand_to_majorana(bond: &CouplingChain) -> Result<CouplingChain> {
    let l = bond.len();
    if l < 2 {
        return Err(Error::Dimension(format!("need at least 2 bonds, got {l}")));
    }
    let mut values = Vec::with_capacity(2 * l);
    for k in 0..l {
        let prev = bond.values[(k + l - 1) % l];
        values.push(0.5 * (prev + bond.values[k]));
        values.push(bond.values[k]);
    }
    CouplingChain::new(
        values,
        ChainKind::Majorana,
        Provenance::Expanded { from: Box::new(bond.provenance.clone()) },
    )
}

/// Aubry–André–Harper chain of `length` couplings:
/// `J_{2k} = 1 + D cos(2π k φ)` for `k = 1..length/2`, and every odd coupling
/// equal to the mean of the even ones.
pub fn aah_couplings(length: usize, amplitude: f64) -> Result<CouplingChain> {
    if length < 2 || !length.is_multiple_of(2) {
        return Err(Error::Dimension(format!("AAH length must be even and >= 2, got {length}")));
    }
    if !(amplitude.abs() < 1.0) {
        return Err(Error::Positivity(format!("|D| = {} must be below 1", amplitude.abs())));
    }
    let half = length / 2;
    let even: Vec<f64> = (1..=half)
        .map(|k| 1.0 + amplitude * (2.0 * std::f64::consts::PI * k as f64 * GOLDEN_RATIO).cos())
        .collect();
    let odd = even.iter().sum::<f64>() / half as f64;
    let values = even.iter().flat_map(|&e| [odd, e]).collect();
    CouplingChain::new(
        values,
        ChainKind::Majorana,
        Provenance::Aah {
            length,
            amplitude,
            index_origin: "J_{2k} at 0-based position 2k-1, k = 1..length/2".into(),
        },
    )
}

/// Normally distributed bond couplings; non-positive draws are redrawn.
pub fn random_couplings(sites: usize, mean: f64, variance: f64, seed: u64) -> Result<CouplingChain> {
    if !(mean > 0.0) || !(variance >= 0.0) {
        return Err(Error::InvalidCouplings(format!("mean {mean}, variance {variance}")));
    }
    let normal = Normal::new(mean, variance.sqrt())
        .map_err(|e| Error::InvalidCouplings(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..sites)
        .map(|_| loop {
            let x = normal.sample(&mut rng);
            if x > 0.0 {
                break x;
            }
        })
        .collect();
    CouplingChain::new(values, ChainKind::Bond, Provenance::Random { sites, mean, variance, seed })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderStats {
    /// Population standard deviation.
    pub sigma: f64,
    /// Cyclic mean of `max(J_k, J_{k+1}) / min(J_k, J_{k+1})`.
    #[serde(rename = "R")]
    pub adjacent_ratio: f64,
    pub mean: f64,
}

pub fn disorder_stats(chain: &CouplingChain) -> DisorderStats {
    let v = &chain.values;
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sigma = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let adjacent_ratio = (0..v.len())
        .map(|k| {
            let (x, y) = (v[k], v[(k + 1) % v.len()]);
            x.max(y) / x.min(y)
        })
        .sum::<f64>()
        / n;
    DisorderStats { sigma, adjacent_ratio, mean }
}

/// Bisects `param` in `[lo, hi]` until the generated chain has standard
/// deviation `target`. Requires `sigma` to be monotone on the bracket.
pub fn match_sigma<F>(target: f64, lo: f64, hi: f64, generate: F) -> Result<(f64, CouplingChain)>
where
    F: Fn(f64) -> Result<CouplingChain>,
{
    let sigma_at = |p: f64| -> Result<(f64, CouplingChain)> {
        let chain = generate(p)?;
        Ok((disorder_stats(&chain).sigma - target, chain))
    };
    let (mut a, mut b) = (lo, hi);
    let (fa, _) = sigma_at(a)?;
    let (fb, _) = sigma_at(b)?;
    if fa * fb > 0.0 {
        return Err(Error::InvalidCouplings(format!(
            "target sigma {target} not bracketed by parameters [{lo}, {hi}]"
        )));
    }
    let rising = fb > fa;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let (fm, chain) = sigma_at(mid)?;
        if fm.abs() <= 1e-12 * target.max(1e-300) || (b - a).abs() < 1e-15 {
            return Ok((mid, chain));
        }
        if (fm < 0.0) == rising {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mid = 0.5 * (a + b);
    Ok((mid, generate(mid)?))
}
