use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qpchain::analysis::{
    cc_fit, cc_fit_envelope, default_fit_range, plateau_width, reflection_check, sweep, GeneratorSpec, Plateau,
    Reflection, SweepPoint, SweepSpec,
};
use qpchain::couplings::{disorder_stats, match_sigma};
use qpchain::substitution::{inflate, InflationRule, LetterSequence};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::output::{cell, config_hash, emit, hash_line, Usage};
use crate::{CouplingsArgs, FitArgs, Format, GeneratorKind, ScanArgs, SequenceArgs};

/// Saved sweep configuration. Its hash identifies every output of a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub sweep: SweepSpec,
    /// Relative tolerance for the plateau summary in the manifest.
    #[serde(default)]
    pub plateau_tolerance: Option<f64>,
}

pub fn sequence(a: SequenceArgs) -> Result<()> {
    let rule = InflationRule::resolve(&a.rule)?;
    let seed: LetterSequence = match &a.seed {
        Some(s) => s.parse()?,
        None => rule.default_seed(),
    };
    let word = inflate(&seed, &rule, a.steps)?;
    let hash = config_hash(&json!({
        "command": "sequence",
        "rule": rule.to_json(),
        "seed": seed.to_string(),
        "steps": a.steps,
    }));
    let mut text = hash_line(&hash);
    for c in word.to_string().chars() {
        text.push(c);
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)
}

fn generator(a: &CouplingsArgs) -> GeneratorSpec {
    match a.generator {
        GeneratorKind::Mqa => GeneratorSpec::Mqa { rule: a.rule.clone(), seed: a.seed.clone(), steps: a.steps, r: a.r },
        GeneratorKind::LastLayer => {
            GeneratorSpec::LastLayer { rule: a.rule.clone(), seed: a.seed.clone(), steps: a.steps, r: a.r }
        }
        GeneratorKind::Aah => GeneratorSpec::Aah { length: a.length, amplitude: a.amplitude },
        GeneratorKind::Random => {
            GeneratorSpec::Random { sites: a.sites, mean: a.mean, variance: a.variance, seed: a.rng_seed }
        }
    }
}

/// Search bracket for the control parameter when matching σ.
fn bracket(g: &GeneratorSpec, target: f64, above: bool) -> (f64, f64) {
    match g {
        GeneratorSpec::Mqa { .. } | GeneratorSpec::LastLayer { .. } if above => (1.0, 1e3),
        GeneratorSpec::Mqa { .. } | GeneratorSpec::LastLayer { .. } => (1e-3, 1.0),
        GeneratorSpec::Aah { .. } => (0.0, 0.999),
        _ => (0.0, 100.0 * target * target + 1.0),
    }
}

pub fn couplings(a: CouplingsArgs) -> Result<()> {
    let mut spec = generator(&a);
    let hash = config_hash(&json!({
        "command": "couplings",
        "generator": spec,
        "match_sigma": a.match_sigma,
        "above": a.above,
    }));
    let chain = match a.match_sigma {
        Some(target) => {
            if !(target >= 0.0 && target.is_finite()) {
                return Err(Usage(format!("--match-sigma must be a non-negative number, got {target}")).into());
            }
            let (lo, hi) = bracket(&spec, target, a.above);
            let base = spec.clone();
            let (p, chain) = match_sigma(target, lo, hi, |p| base.with_parameter(p)?.build())?;
            spec = spec.with_parameter(p)?;
            chain
        }
        None => spec.build()?,
    };
    let stats = disorder_stats(&chain);
    let text = match a.format {
        Format::Csv => {
            let mut t = hash_line(&hash);
            if let Some(p) = spec.parameter() {
                writeln!(t, "# param={p}")?;
            }
            writeln!(t, "# sigma={} R={}", stats.sigma, stats.adjacent_ratio)?;
            t + &chain.to_csv()
        }
        Format::Json => {
            let v = json!({
                "config_hash": hash,
                "generator": spec,
                "stats": stats,
                "chain": chain,
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
    };
    emit(a.out.as_deref(), &text)
}

fn flags(p: &SweepPoint) -> String {
    let mut f = Vec::new();
    if p.flags.degenerate {
        f.push("degenerate".to_string());
    }
    if !p.flags.converged {
        f.push("unconverged".to_string());
    }
    if let Some(e) = &p.flags.error {
        f.push(format!("error={}", e.replace([',', '\n'], ";")));
    }
    if f.is_empty() {
        "ok".into()
    } else {
        f.join("|")
    }
}

pub fn sweep_csv(hash: &str, points: &[SweepPoint]) -> String {
    let mut t = hash_line(hash);
    t.push_str("param,sigma,R,c,c_stderr,kappa,residual,S_ref,flags\n");
    for p in points {
        let fit = p.fit.as_ref();
        writeln!(
            t,
            "{},{},{},{},{},{},{},{},{}",
            p.param,
            p.sigma,
            p.adjacent_ratio,
            cell(fit.map(|f| f.c)),
            cell(fit.map(|f| f.c_stderr)),
            cell(fit.map(|f| f.kappa)),
            cell(fit.map(|f| f.residual)),
            cell(p.s_ref),
            flags(p)
        )
        .unwrap();
    }
    t
}

fn profile_csv(hash: &str, param: f64, profile: &[f64]) -> String {
    let mut t = hash_line(hash);
    writeln!(t, "# param={param}").unwrap();
    t.push_str("ell,S_avg\n");
    for (l, s) in profile.iter().enumerate() {
        writeln!(t, "{l},{s}").unwrap();
    }
    t
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    points: Vec<SweepPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    plateau: Option<Plateau>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reflection: Option<Reflection>,
}

fn manifest_path(a: &ScanArgs) -> Option<PathBuf> {
    a.manifest.clone().or_else(|| {
        a.out.as_ref().map(|o| {
            let mut s = o.with_extension("").into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    })
}

pub fn scan(a: ScanArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(qpchain::Error::Io)
        .with_context(|| format!("reading {}", a.config.display()))?;
    let config: RunConfig = serde_json::from_str(&text).map_err(qpchain::Error::Json)?;
    if config.sweep.grid.is_empty() {
        return Err(Usage("config has an empty parameter grid".into()).into());
    }
    if a.workers == 0 {
        return Err(Usage("--workers must be at least 1".into()).into());
    }
    let hash = config_hash(&config);
    let mut spec = config.sweep.clone();
    spec.keep_profiles |= a.profiles.is_some();
    let mut points = sweep(&spec, a.workers)?;

    if let Some(dir) = &a.profiles {
        std::fs::create_dir_all(dir).map_err(qpchain::Error::Io)?;
        for (i, p) in points.iter().enumerate() {
            if let Some(profile) = &p.profile {
                let path = dir.join(format!("point_{i:03}.csv"));
                emit(Some(&path), &profile_csv(&hash, p.param, profile))?;
            }
        }
    }
    if !config.sweep.keep_profiles {
        points.iter_mut().for_each(|p| p.profile = None);
    }
    emit(a.out.as_deref(), &sweep_csv(&hash, &points))?;

    if let Some(path) = manifest_path(&a) {
        let mut sorted = points.clone();
        sorted.sort_by(|x, y| x.param.total_cmp(&y.param));
        let manifest = Manifest {
            config_hash: &hash,
            version: env!("CARGO_PKG_VERSION"),
            config: &config,
            plateau: config.plateau_tolerance.and_then(|t| plateau_width(&sorted, t).ok()),
            reflection: reflection_check(&points).ok(),
            points,
        };
        emit(Some(&path), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    }
    Ok(())
}

/// Reads `ell,S` rows, skipping `#` comments and a header line.
fn read_profile(path: &Path) -> Result<Vec<(usize, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(qpchain::Error::Io)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (Some(l), Some(s)) = (fields.next(), fields.next()) else {
            return Err(qpchain::Error::Parse(format!("line {}: expected `ell,S`", n + 1)).into());
        };
        match (l.parse::<usize>(), s.parse::<f64>()) {
            (Ok(l), Ok(s)) => rows.push((l, s)),
            _ if rows.is_empty() => continue,
            _ => return Err(qpchain::Error::Parse(format!("line {}: `{line}`", n + 1)).into()),
        }
    }
    Ok(rows)
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    let parsed = text.split_once(':').and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
    parsed.ok_or_else(|| Usage(format!("--range expects `lo:hi`, got `{text}`")).into())
}

pub fn fit(a: FitArgs) -> Result<()> {
    let rows = read_profile(&a.profile)?;
    let sites = match a.sites {
        Some(l) => l,
        None => rows.iter().map(|r| r.0).max().unwrap_or(0),
    };
    let mut profile = vec![f64::NAN; sites + 1];
    for &(l, s) in &rows {
        if l > sites {
            return Err(qpchain::Error::Dimension(format!("ell = {l} exceeds L = {sites}")).into());
        }
        profile[l] = s;
    }
    let range = match &a.range {
        Some(r) => parse_range(r)?,
        None => default_fit_range(sites),
    };
    if range.1 > sites {
        return Err(qpchain::Error::Dimension(format!("range end {} exceeds L = {sites}", range.1)).into());
    }
    if profile[range.0..=range.1.max(range.0)].iter().any(|s| s.is_nan()) {
        return Err(qpchain::Error::Fit(format!("profile has gaps in [{}, {}]", range.0, range.1)).into());
    }
    let result = if a.envelope { cc_fit_envelope(&profile, sites, range) } else { cc_fit(&profile, sites, range) }?;
    let hash = config_hash(&json!({
        "command": "fit",
        "profile": rows,
        "sites": sites,
        "range": range,
        "envelope": a.envelope,
    }));
    let v = json!({ "config_hash": hash, "sites": sites, "envelope": a.envelope, "fit": result });
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&v)? + "\n"))
}

pub fn rules_list(as_json: bool) -> Result<()> {
    let rules = InflationRule::preset_names()
        .iter()
        .map(|n| InflationRule::preset(n))
        .collect::<qpchain::Result<Vec<_>>>()?;
    let text = if as_json {
        let files: Vec<serde_json::Value> =
            rules.iter().map(|r| serde_json::from_str(&r.to_json())).collect::<serde_json::Result<_>>()?;
        serde_json::to_string_pretty(&files)? + "\n"
    } else {
        let mut t = String::new();
        for (key, r) in InflationRule::preset_names().iter().zip(&rules) {
            let images: Vec<String> =
                r.alphabet().iter().map(|s| format!("{s}->{}", r.image(*s).map(qpchain::substitution::format_symbols).unwrap_or_default())).collect();
            writeln!(t, "{key}\t{}\tseed={}\t{}", images.join(" "), r.default_seed(), if r.has_symmetrized_form() { "symmetrized" } else { "plain" })?;
        }
        t
    };
    emit(None, &text)
}
