//! Criticality diagnostics on entanglement profiles: Calabrese–Cardy fits,
//! parameter sweeps, plateau and reciprocal-symmetry checks, and the
//! strong-disorder singlet-pairing prediction.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{
    aah_couplings, disorder_stats, last_layer_couplings, mqa_couplings, random_couplings, ChainKind, CouplingChain,
    ElementaryCouplings,
};
use crate::error::{Error, Result};
use crate::gaussian::{self, ModelTag};
use crate::interacting::{self, Boundary, SolverOptions, XxzModel};
use crate::substitution::{inflate, InflationRule, LetterSequence};

/// Effective central charge of the Fibonacci aperiodic singlet phase.
pub fn c_fib() -> f64 {
    (3.0 - 3.0 / 5f64.sqrt()) * LN_2 / 2f64.asinh()
}

/// Chord coordinate `ln((L/π) sin(πℓ/L))`.
pub fn chord_log(sites: usize, l: f64) -> f64 {
    let n = sites as f64;
    ((n / PI) * (PI * l / n).sin()).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CCFit {
    pub c: f64,
    pub kappa: f64,
    /// RMS deviation of the data from the fitted line.
    pub residual: f64,
    pub c_stderr: f64,
    pub kappa_stderr: f64,
    pub range: (usize, usize),
    pub points: usize,
}

/// Ordinary least squares `y = slope·x + intercept` with standard errors.
fn linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64, f64, f64)> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-14 * (1.0 + mx * mx) * nf {
        return Err(Error::Fit("degenerate design: all x equal".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let s2 = rss / (nf - 2.0);
    let slope_se = (s2 / sxx).sqrt();
    let intercept_se = (s2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    Ok((slope, intercept, (rss / nf).sqrt(), slope_se, intercept_se))
}

/// Default window `[2, L/2]`.
pub fn default_fit_range(sites: usize) -> (usize, usize) {
    (2, sites / 2)
}

/// Fits `S(ℓ) = (c/3) x(ℓ) + κ` over `ℓ ∈ [lo, hi]` of a profile indexed by `ℓ = 0..=L`.
pub fn cc_fit(profile: &[f64], sites: usize, range: (usize, usize)) -> Result<CCFit> {
    let (lo, hi) = range;
    if lo < 1 || hi >= sites || lo > hi || profile.len() < hi + 1 {
        return Err(Error::Fit(format!("range [{lo}, {hi}] not within 1..{} of the profile", sites - 1)));
    }
    let pts: Vec<(usize, f64)> = (lo..=hi).map(|l| (l, profile[l])).collect();
    cc_fit_points(&pts, sites)
}

/// Fit over an arbitrary set of `(ℓ, S)` points.
pub fn cc_fit_points(points: &[(usize, f64)], sites: usize) -> Result<CCFit> {
    let xy: Vec<(f64, f64)> = points.iter().map(|&(l, s)| (chord_log(sites, l as f64), s)).collect();
    let (slope, kappa, residual, se, kse) = linear_fit(&xy)?;
    let lo = points.iter().map(|p| p.0).min().unwrap_or(0);
    let hi = points.iter().map(|p| p.0).max().unwrap_or(0);
    Ok(CCFit {
        c: 3.0 * slope,
        kappa,
        residual,
        c_stderr: 3.0 * se,
        kappa_stderr: kse,
        range: (lo, hi),
        points: points.len(),
    })
}

/// Running-maximum points of `S(ℓ)` for `ℓ ∈ [lo, hi]`: each kept `ℓ` has an
/// entropy strictly above every smaller `ℓ` in the range. Flat steps keep only
/// their first point.
pub fn upper_envelope(profile: &[f64], sites: usize, range: (usize, usize)) -> Vec<(usize, f64)> {
    let hi = range.1.min(sites / 2).min(profile.len().saturating_sub(1));
    let mut best = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for (l, &s) in profile.iter().enumerate().take(hi + 1).skip(range.0) {
        if s > best + 1e-9 {
            best = s;
            out.push((l, s));
        }
    }
    out
}

/// `cc_fit` restricted to the upper envelope of the profile.
pub fn cc_fit_envelope(profile: &[f64], sites: usize, range: (usize, usize)) -> Result<CCFit> {
    cc_fit_points(&upper_envelope(profile, sites, range), sites)
}

/// How a coupling chain is produced from one control parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    /// Elementary couplings `(1, 1, r)`; the parameter is `r`.
    Mqa { rule: String, seed: Option<String>, steps: usize, r: f64 },
    LastLayer { rule: String, seed: Option<String>, steps: usize, r: f64 },
    /// The parameter is the amplitude `D`.
    Aah { length: usize, amplitude: f64 },
    /// The parameter is the variance.
    Random { sites: usize, mean: f64, variance: f64, seed: u64 },
    Custom { values: Vec<f64> },
}

impl GeneratorSpec {
    fn rule_and_seed(rule: &str, seed: &Option<String>) -> Result<(InflationRule, LetterSequence)> {
        let rule = InflationRule::resolve(rule)?;
        let seed = match seed {
            Some(s) => s.parse()?,
            None => rule.default_seed(),
        };
        Ok((rule, seed))
    }

    pub fn build(&self) -> Result<CouplingChain> {
        match self {
            GeneratorSpec::Mqa { rule, seed, steps, r } => {
                let (rule, seed) = Self::rule_and_seed(rule, seed)?;
                mqa_couplings(&rule, &seed, *steps, &ElementaryCouplings::from_ratio(*r)?)
            }
            GeneratorSpec::LastLayer { rule, seed, steps, r } => {
                let (rule, seed) = Self::rule_and_seed(rule, seed)?;
                let seq = inflate(&seed, &rule, *steps)?;
                last_layer_couplings(&seq, &ElementaryCouplings::from_ratio(*r)?)
            }
            GeneratorSpec::Aah { length, amplitude } => aah_couplings(*length, *amplitude),
            GeneratorSpec::Random { sites, mean, variance, seed } => random_couplings(*sites, *mean, *variance, *seed),
            GeneratorSpec::Custom { values } => CouplingChain::custom(values.clone(), ChainKind::Bond),
        }
    }

    pub fn parameter(&self) -> Option<f64> {
        match self {
            GeneratorSpec::Mqa { r, .. } | GeneratorSpec::LastLayer { r, .. } => Some(*r),
            GeneratorSpec::Aah { amplitude, .. } => Some(*amplitude),
            GeneratorSpec::Random { variance, .. } => Some(*variance),
            GeneratorSpec::Custom { .. } => None,
        }
    }

    pub fn with_parameter(&self, p: f64) -> Result<Self> {
        let mut out = self.clone();
        match &mut out {
            GeneratorSpec::Mqa { r, .. } | GeneratorSpec::LastLayer { r, .. } => *r = p,
            GeneratorSpec::Aah { amplitude, .. } => *amplitude = p,
            GeneratorSpec::Random { variance, .. } => *variance = p,
            GeneratorSpec::Custom { .. } => {
                return Err(Error::Sweep("custom chains have no control parameter".into()));
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "kebab-case")]
pub enum SolverSpec {
    Gaussian {
        #[serde(default = "default_model")]
        model: ModelTag,
    },
    Interacting {
        anisotropy: f64,
        #[serde(default = "default_boundary")]
        boundary: Boundary,
        #[serde(default = "default_max_sites")]
        max_sites: usize,
    },
}

fn default_model() -> ModelTag {
    ModelTag::XxChain
}

fn default_boundary() -> Boundary {
    Boundary::Periodic
}

fn default_max_sites() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub generator: GeneratorSpec,
    pub solver: SolverSpec,
    pub grid: Vec<f64>,
    /// Defaults to `[2, L/2]`.
    #[serde(default)]
    pub fit_range: Option<(usize, usize)>,
    /// Defaults to `L/2`.
    #[serde(default)]
    pub reference_ell: Option<usize>,
    /// Keep full entropy profiles in the points.
    #[serde(default)]
    pub keep_profiles: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointFlags {
    pub degenerate: bool,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: f64,
    pub sites: usize,
    pub sigma: f64,
    #[serde(rename = "R")]
    pub adjacent_ratio: f64,
    pub fit: Option<CCFit>,
    pub reference_ell: usize,
    pub s_ref: Option<f64>,
    pub energy: Option<f64>,
    pub flags: PointFlags,
    pub profile: Option<Vec<f64>>,
}

impl SweepPoint {
    pub fn c(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.c)
    }
}

/// Ground state and full averaged entropy profile for one chain.
pub fn solve_profile(chain: &CouplingChain, solver: &SolverSpec) -> Result<(Vec<f64>, f64, bool)> {
    match solver {
        SolverSpec::Gaussian { model } => {
            let (gs, degenerate) = gaussian::chain_ground_state(chain, *model)?;
            let profile = gaussian::averaged_entropy_profile(&gs.covariance, *model)?;
            Ok((profile.values, gs.energy, degenerate))
        }
        SolverSpec::Interacting { anisotropy, boundary, max_sites } => {
            if chain.len() > *max_sites {
                return Err(Error::TooLarge(format!("{} sites exceeds cap {max_sites}", chain.len())));
            }
            let model = XxzModel::from_chain(&chain.reinterpret(ChainKind::Bond), *anisotropy, *boundary)?;
            let gs = interacting::ground_state(&model, &SolverOptions::default())?;
            let profile = interacting::averaged_entropy_profile(&gs)?;
            Ok((profile, gs.energy, gs.degenerate))
        }
    }
}

/// Builds, solves and fits one grid point; failures land in `flags.error`.
pub fn run_point(spec: &SweepSpec, param: f64) -> SweepPoint {
    let mut point = SweepPoint {
        param,
        sites: 0,
        sigma: f64::NAN,
        adjacent_ratio: f64::NAN,
        fit: None,
        reference_ell: 0,
        s_ref: None,
        energy: None,
        flags: PointFlags::default(),
        profile: None,
    };
    let chain = match spec.generator.with_parameter(param).and_then(|g| g.build()) {
        Ok(c) => c,
        Err(e) => {
            point.flags.error = Some(e.to_string());
            return point;
        }
    };
    let stats = disorder_stats(&chain);
    point.sites = chain.len();
    point.sigma = stats.sigma;
    point.adjacent_ratio = stats.adjacent_ratio;
    match solve_profile(&chain, &spec.solver) {
        Ok((profile, energy, degenerate)) => {
            let sites = profile.len() - 1;
            point.flags.converged = true;
            point.flags.degenerate = degenerate;
            point.energy = Some(energy);
            point.reference_ell = spec.reference_ell.unwrap_or(sites / 2).min(sites);
            point.s_ref = Some(profile[point.reference_ell]);
            match cc_fit(&profile, sites, spec.fit_range.unwrap_or(default_fit_range(sites))) {
                Ok(fit) => point.fit = Some(fit),
                Err(e) => point.flags.error = Some(e.to_string()),
            }
            if spec.keep_profiles {
                point.profile = Some(profile);
            }
        }
        Err(e) => point.flags.error = Some(e.to_string()),
    }
    point
}

/// Runs every grid point on a pool of `workers` threads; output order follows the grid.
pub fn sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepPoint>> {
    if spec.grid.is_empty() {
        return Err(Error::Sweep("empty parameter grid".into()));
    }
    spec.generator.with_parameter(spec.grid[0])?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Sweep(e.to_string()))?;
    Ok(pool.install(|| spec.grid.par_iter().map(|&p| run_point(spec, p)).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub lo_index: usize,
    pub hi_index: usize,
    pub lo_param: f64,
    pub hi_param: f64,
    pub c_uniform: f64,
    /// `σ(lo) + σ(hi)`: extent along the disorder axis, one side per edge.
    pub sigma_width: f64,
}

/// Maximal contiguous run around the uniform (σ = 0) point with
/// `|c − c_u| / c_u ≤ tolerance`. Points must be sorted by parameter.
pub fn plateau_width(points: &[SweepPoint], tolerance: f64) -> Result<Plateau> {
    let u = points
        .iter()
        .position(|p| p.sigma.abs() < 1e-12 && p.c().is_some())
        .ok_or_else(|| Error::Sweep("uniform point missing from grid".into()))?;
    let cu = points[u].c().unwrap();
    let inside = |p: &SweepPoint| p.c().is_some_and(|c| ((c - cu) / cu).abs() <= tolerance);
    let mut lo = u;
    while lo > 0 && inside(&points[lo - 1]) {
        lo -= 1;
    }
    let mut hi = u;
    while hi + 1 < points.len() && inside(&points[hi + 1]) {
        hi += 1;
    }
    Ok(Plateau {
        lo_index: lo,
        hi_index: hi,
        lo_param: points[lo].param,
        hi_param: points[hi].param,
        c_uniform: cu,
        sigma_width: points[lo].sigma + points[hi].sigma,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    /// `(r, 1/r, |S(r) − S(1/r)| / S(1))`.
    pub pairs: Vec<(f64, f64, f64)>,
    pub max_asymmetry: f64,
}

/// Compares `S_ref` at reciprocal parameters, relative to `S_ref` at `r = 1`.
pub fn reflection_check(points: &[SweepPoint]) -> Result<Reflection> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
    let s1 = points
        .iter()
        .find(|p| close(p.param, 1.0))
        .and_then(|p| p.s_ref)
        .ok_or_else(|| Error::Sweep("reflection check needs a point at r = 1".into()))?;
    let mut pairs = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if p.param > 1.0 + 1e-12 {
            continue;
        }
        if let Some(q) = points.iter().skip(if close(p.param, 1.0) { i } else { 0 }).find(|q| close(q.param * p.param, 1.0)) {
            if let (Some(a), Some(b)) = (p.s_ref, q.s_ref) {
                pairs.push((p.param, q.param, (a - b).abs() / s1));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Sweep("no reciprocal pairs in grid".into()));
    }
    let max_asymmetry = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(Reflection { pairs, max_asymmetry })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingletPairing {
    pub sites: usize,
    pub cyclic: bool,
    /// `(i, j, J)` with `i < j` and the effective bond that formed the singlet.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Smallest ratio of a decimated bond to its strongest neighbour.
    pub min_scale_ratio: f64,
    pub valid: bool,
}

/// Decimations with a weaker scale separation than this invalidate the prediction.
pub const SDRG_VALIDITY_RATIO: f64 = 10.0;

impl SingletPairing {
    /// Partner of every site.
    pub fn partners(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.sites];
        for &(i, j, _) in &self.pairs {
            out[i] = j;
            out[j] = i;
        }
        out
    }

    /// `ln 2` times the number of singlets with exactly one site in the
    /// (cyclic) interval `[start, start + len)`.
    pub fn interval_entropy(&self, start: usize, len: usize) -> f64 {
        let n = self.sites;
        let inside = |s: usize| (s + n - start % n) % n < len;
        self.pairs.iter().filter(|(i, j, _)| inside(*i) != inside(*j)).count() as f64 * LN_2
    }

    /// Site-averaged prediction for `ℓ = 0..=L`.
    pub fn predicted_profile(&self) -> Vec<f64> {
        let n = self.sites;
        (0..=n)
            .map(|l| {
                let starts = if self.cyclic { n } else { n - l + 1 };
                (0..starts).map(|j| self.interval_entropy(j, l)).sum::<f64>() / starts as f64
            })
            .collect()
    }
}

/// Strong-disorder decimation: repeatedly freeze the strongest bond into a
/// singlet and join its neighbours by `J_l J_r / J_s`. Ties go to the lowest
/// site index. A ring has one bond per site, an open chain one fewer.
pub fn sdrg_pairing(bonds: &[f64], cyclic: bool) -> Result<SingletPairing> {
    let sites = if cyclic { bonds.len() } else { bonds.len() + 1 };
    if sites < 2 || sites % 2 != 0 {
        return Err(Error::Dimension(format!("singlet pairing needs an even number of sites, got {sites}")));
    }
    if bonds.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(Error::Positivity("SDRG needs strictly positive bonds".into()));
    }
    // active[k] is a site; bond[k] joins active[k] and active[k + 1].
    let mut active: Vec<usize> = (0..sites).collect();
    let mut bond: Vec<f64> = bonds.to_vec();
    let mut pairs = Vec::new();
    let mut min_ratio = f64::INFINITY;
    while active.len() >= 2 {
        let n = active.len();
        let nb = bond.len();
        let mut k = 0;
        for i in 1..nb {
            if bond[i] > bond[k] || (bond[i] == bond[k] && active[i] < active[k]) {
                k = i;
            }
        }
        let js = bond[k];
        let (i, j) = (active[k], active[(k + 1) % n]);
        pairs.push((i.min(j), i.max(j), js));
        if n == 2 {
            break;
        }
        let left = if cyclic || k > 0 { Some((k + nb - 1) % nb) } else { None };
        let right = if cyclic || k + 1 < nb { Some((k + 1) % nb) } else { None };
        let neighbour = left.iter().chain(right.iter()).map(|&b| bond[b]).fold(0.0, f64::max);
        if neighbour > 0.0 {
            min_ratio = min_ratio.min(js / neighbour);
        }
        let joined = match (left, right) {
            (Some(l), Some(r)) => Some(bond[l] * bond[r] / js),
            _ => None,
        };
        // Remove sites active[k], active[k+1] and bonds left, k, right.
        let mut new_active = Vec::with_capacity(n - 2);
        let mut new_bond = Vec::with_capacity(nb.saturating_sub(2));
        if cyclic {
            // Rotate so the decimated pair sits at the end: sites k+2 .. k-1.
            for t in 0..n - 2 {
                new_active.push(active[(k + 2 + t) % n]);
            }
            for t in 0..n - 3 {
                new_bond.push(bond[(k + 2 + t) % nb]);
            }
            new_bond.push(joined.unwrap());
        } else {
            new_active.extend_from_slice(&active[..k]);
            new_active.extend_from_slice(&active[k + 2..]);
            if k > 0 {
                new_bond.extend_from_slice(&bond[..k - 1]);
            }
            if let Some(jn) = joined {
                new_bond.push(jn);
            }
            if k + 2 < nb {
                new_bond.extend_from_slice(&bond[k + 2..]);
            }
        }
        active = new_active;
        bond = new_bond;
    }
    pairs.sort_by_key(|p| p.0);
    Ok(SingletPairing { sites, cyclic, pairs, min_scale_ratio: min_ratio, valid: min_ratio >= SDRG_VALIDITY_RATIO })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(sites: usize, c: f64, kappa: f64) -> Vec<f64> {
        (0..=sites).map(|l| if l == 0 || l == sites { 0.0 } else { c / 3.0 * chord_log(sites, l as f64) + kappa }).collect()
    }

    #[test]
    fn c_fib_value() {
        assert!((c_fib() - 0.7962).abs() < 1e-3);
    }

    #[test]
    fn exact_fit_on_synthetic_profile() {
        let fit = cc_fit(&synthetic(58, 1.0, 0.5), 58, (2, 29)).unwrap();
        assert!((fit.c - 1.0).abs() < 1e-12);
        assert!((fit.kappa - 0.5).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.range, (2, 29));
    }

    #[test]
    fn fit_errors() {
        let p = synthetic(20, 1.0, 0.0);
        assert!(cc_fit(&p, 20, (2, 3)).is_err());
        assert!(cc_fit(&p, 20, (0, 10)).is_err());
        assert!(cc_fit_points(&[(5, 1.0), (5, 1.1), (5, 1.2)], 20).is_err());
        // ℓ and L − ℓ share the same chord coordinate.
        assert!(cc_fit_points(&[(5, 1.0), (15, 1.1), (5, 1.2)], 20).is_err());
    }

    #[test]
    fn envelope_keeps_running_maxima() {
        let p = synthetic(40, 1.0, 0.2);
        assert_eq!(upper_envelope(&p, 40, (2, 20)).len(), 19);
        let mut bumpy = p.clone();
        bumpy[7] -= 0.3;
        assert!(upper_envelope(&bumpy, 40, (2, 20)).iter().all(|(l, _)| *l != 7));
        let mut stepped = p.clone();
        stepped[9] = stepped[8];
        assert!(upper_envelope(&stepped, 40, (2, 20)).iter().all(|(l, _)| *l != 9));
        let fit = cc_fit_envelope(&bumpy, 40, (2, 20)).unwrap();
        assert!((fit.c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sdrg_strong_dimer() {
        let p = sdrg_pairing(&[10.0, 1.0, 10.0], false).unwrap();
        assert_eq!(p.pairs.iter().map(|x| (x.0, x.1)).collect::<Vec<_>>(), vec![(0, 1), (2, 3)]);
        assert!((p.interval_entropy(1, 2) - 2.0 * LN_2).abs() < 1e-15);
        assert_eq!(p.interval_entropy(0, 2), 0.0);
        assert!(p.valid);
    }

    #[test]
    fn sdrg_uniform_is_flagged() {
        let p = sdrg_pairing(&[1.0; 12], true).unwrap();
        assert_eq!(p.pairs.len(), 6);
        assert!(!p.valid);
        assert!(sdrg_pairing(&[1.0; 5], true).is_err());
    }

    #[test]
    fn sdrg_ring_effective_couplings() {
        // Strong bond 1–2; neighbours 0–1 (2) and 2–3 (3) join into 0–3 with 2·3/100.
        let p = sdrg_pairing(&[2.0, 100.0, 3.0, 0.01], true).unwrap();
        assert_eq!(p.pairs[0], (0, 3, 0.06));
        assert_eq!(p.pairs[1], (1, 2, 100.0));
    }

    #[test]
    fn plateau_examples() {
        let point = |param: f64, sigma: f64, c: f64| SweepPoint {
            param,
            sites: 10,
            sigma,
            adjacent_ratio: 1.0,
            fit: Some(CCFit { c, kappa: 0.0, residual: 0.0, c_stderr: 0.0, kappa_stderr: 0.0, range: (2, 5), points: 4 }),
            reference_ell: 5,
            s_ref: Some(c),
            energy: None,
            flags: PointFlags::default(),
            profile: None,
        };
        let flat: Vec<_> = [(0.5, 0.3), (1.0, 0.0), (2.0, 0.3)].iter().map(|&(p, s)| point(p, s, 1.0)).collect();
        let pl = plateau_width(&flat, 0.01).unwrap();
        assert_eq!((pl.lo_index, pl.hi_index), (0, 2));
        let decay: Vec<_> = [(1.0, 0.0, 1.0), (2.0, 0.1, 0.9), (3.0, 0.2, 0.7)].iter().map(|&(p, s, c)| point(p, s, c)).collect();
        assert_eq!(plateau_width(&decay, 1e-6).unwrap().hi_index, 0);
        assert_eq!(plateau_width(&decay, 0.15).unwrap().hi_index, 1);
        assert!(plateau_width(&decay[1..], 0.1).is_err());
        let refl = reflection_check(&[point(1.0, 0.0, 1.0)]).unwrap();
        assert_eq!(refl.max_asymmetry, 0.0);
        let refl = reflection_check(&[point(0.5, 0.2, 0.8), point(1.0, 0.0, 1.0), point(2.0, 0.2, 0.9)]).unwrap();
        assert!((refl.max_asymmetry - 0.1).abs() < 1e-12);
    }

    #[test]
    fn uniform_sweep_point() {
        let spec = SweepSpec {
            generator: GeneratorSpec::Mqa { rule: "3,7".into(), seed: Some("oo".into()), steps: 3, r: 1.0 },
            solver: SolverSpec::Gaussian { model: ModelTag::XxChain },
            grid: vec![1.0],
            fit_range: None,
            reference_ell: None,
            keep_profiles: false,
        };
        let pts = sweep(&spec, 1).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].sites, 58);
        assert!(pts[0].sigma < 1e-12);
        assert!((pts[0].adjacent_ratio - 1.0).abs() < 1e-12);
        assert!((pts[0].c().unwrap() - 1.0).abs() < 0.02);
        let empty = SweepSpec { grid: vec![], ..spec };
        assert!(sweep(&empty, 1).is_err());
    }

    #[test]
    fn failing_points_are_recorded() {
        let spec = SweepSpec {
            generator: GeneratorSpec::Aah { length: 20, amplitude: 0.0 },
            solver: SolverSpec::Gaussian { model: ModelTag::XxChain },
            grid: vec![0.3, 1.5],
            fit_range: None,
            reference_ell: None,
            keep_profiles: true,
        };
        let pts = sweep(&spec, 2).unwrap();
        assert!(pts[0].flags.error.is_none() && pts[0].profile.is_some());
        assert!(pts[1].flags.error.is_some());
    }

    proptest! {
        #[test]
        fn fit_recovers_planted_values(sites in 8usize..200, c in 0.05f64..3.0, kappa in -2.0f64..2.0,
                                       lo_frac in 0.0f64..0.5, span in 2usize..100) {
            let lo = 1 + ((sites / 2 - 1) as f64 * lo_frac) as usize;
            let hi = (lo + span).min(sites / 2);
            prop_assume!(hi >= lo + 2);
            let fit = cc_fit(&synthetic(sites, c, kappa), sites, (lo, hi)).unwrap();
            prop_assert!((fit.c - c).abs() < 1e-9 * (1.0 + c));
            prop_assert!((fit.kappa - kappa).abs() < 1e-9);
            prop_assert!(fit.residual < 1e-12);
        }

        #[test]
        fn shift_changes_only_kappa(shift in -1.0f64..1.0) {
            let base = synthetic(40, 0.8, 0.1);
            let mut noisy: Vec<f64> = base.iter().enumerate().map(|(l, s)| s + 0.01 * ((l * 7 % 5) as f64)).collect();
            let a = cc_fit(&noisy, 40, (2, 20)).unwrap();
            noisy.iter_mut().for_each(|s| *s += shift);
            let b = cc_fit(&noisy, 40, (2, 20)).unwrap();
            prop_assert!((a.c - b.c).abs() < 1e-10);
            prop_assert!((b.kappa - a.kappa - shift).abs() < 1e-10);
        }

        #[test]
        fn sdrg_open_matching_is_non_crossing(bonds in proptest::collection::vec(0.01f64..100.0, 1..40)) {
            let bonds = if bonds.len() % 2 == 0 { bonds[..bonds.len() - 1].to_vec() } else { bonds };
            let p = sdrg_pairing(&bonds, false).unwrap();
            let partners = p.partners();
            prop_assert!(partners.iter().all(|&q| q != usize::MAX));
            for &(a, b, _) in &p.pairs {
                for &(c, d, _) in &p.pairs {
                    prop_assert!(!(a < c && c < b && b < d));
                }
            }
        }

        #[test]
        fn plateau_monotone_in_tolerance(cs in proptest::collection::vec(0.5f64..1.5, 2..12), t1 in 0.0f64..0.5, dt in 0.0f64..0.5) {
            let n = cs.len();
            let pts: Vec<SweepPoint> = cs.iter().enumerate().map(|(i, &c)| SweepPoint {
                param: i as f64, sites: 10, sigma: if i == 0 { 0.0 } else { i as f64 }, adjacent_ratio: 1.0,
                fit: Some(CCFit { c, kappa: 0.0, residual: 0.0, c_stderr: 0.0, kappa_stderr: 0.0, range: (2, 5), points: 4 }),
                reference_ell: 5, s_ref: None, energy: None, flags: PointFlags::default(), profile: None,
            }).collect();
            let a = plateau_width(&pts, t1).unwrap();
            let b = plateau_width(&pts, t1 + dt).unwrap();
            prop_assert!(b.lo_index <= a.lo_index && b.hi_index >= a.hi_index && b.hi_index < n);
        }
    }
}
