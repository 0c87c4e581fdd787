//! Letter sequences generated by inflation (substitution) rules.
//!
//! Boundary vertices of a hyperbolic `{p,q}` tiling cut off after `n` layers
//! form a cyclic word over `{o, a, b}` (two, three and four adjacent edges).
//! Adding a layer of tiles acts on that word as a substitution rule, so the
//! same machinery also covers generic quasiperiodic rules such as Fibonacci.
//!
//! Symmetrized rules split a letter into two half-tokens `√x` placed at the
//! boundaries of every image. On a ring, neighbouring halves merge back into
//! one full letter with two parents, which keeps the ancestry of each letter
//! compatible with the rotational symmetry of the tiling.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Symbol {
    #[serde(rename = "o")]
    O,
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
}

impl Symbol {
    pub const ALL: [Symbol; 3] = [Symbol::O, Symbol::A, Symbol::B];

    pub fn as_char(self) -> char {
        match self {
            Symbol::O => 'o',
            Symbol::A => 'a',
            Symbol::B => 'b',
        }
    }

    pub fn from_char(c: char) -> Option<Symbol> {
        match c {
            'o' => Some(Symbol::O),
            'a' => Some(Symbol::A),
            'b' => Some(Symbol::B),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A letter of a rule image; `half` marks a split token `√x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub symbol: Symbol,
    pub half: bool,
}

impl Letter {
    pub fn full(symbol: Symbol) -> Self {
        Letter { symbol, half: false }
    }

    pub fn half(symbol: Symbol) -> Self {
        Letter { symbol, half: true }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.half {
            write!(f, "√{}", self.symbol)
        } else {
            write!(f, "{}", self.symbol)
        }
    }
}

/// Parses a word such as `aab` or `√b a a √b`. Whitespace is ignored.
pub fn parse_word(text: &str) -> Result<Vec<Letter>> {
    let mut letters = Vec::new();
    let mut chars = text.chars().filter(|c| !c.is_whitespace());
    while let Some(c) = chars.next() {
        if c == '√' {
            let s = chars
                .next()
                .and_then(Symbol::from_char)
                .ok_or_else(|| Error::Parse(text.to_string()))?;
            letters.push(Letter::half(s));
        } else {
            let s = Symbol::from_char(c).ok_or_else(|| Error::Parse(text.to_string()))?;
            letters.push(Letter::full(s));
        }
    }
    Ok(letters)
}

/// Parses a word that must not contain half-tokens.
pub fn parse_symbols(text: &str) -> Result<Vec<Symbol>> {
    parse_word(text)?
        .into_iter()
        .map(|l| if l.half { Err(Error::Parse(text.to_string())) } else { Ok(l.symbol) })
        .collect()
}

pub fn format_symbols(symbols: &[Symbol]) -> String {
    symbols.iter().map(|s| s.as_char()).collect()
}

pub fn format_word(letters: &[Letter]) -> String {
    let parts: Vec<String> = letters.iter().map(|l| l.to_string()).collect();
    parts.join(" ")
}

/// A word over `{o, a, b}`, either a ring (`cyclic`) or an open word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LetterSequence {
    pub letters: Vec<Symbol>,
    pub cyclic: bool,
    /// Number of inflation steps applied to the original seed.
    pub step: usize,
}

impl LetterSequence {
    pub fn cyclic(letters: Vec<Symbol>) -> Self {
        LetterSequence { letters, cyclic: true, step: 0 }
    }

    pub fn open(letters: Vec<Symbol>) -> Self {
        LetterSequence { letters, cyclic: false, step: 0 }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Occurrences of `o`, `a`, `b`, in that order.
    pub fn counts(&self) -> [u64; 3] {
        let mut counts = [0u64; 3];
        for s in &self.letters {
            counts[s.index()] += 1;
        }
        counts
    }
}

impl FromStr for LetterSequence {
    type Err = Error;

    /// Parses a cyclic sequence.
    fn from_str(s: &str) -> Result<Self> {
        Ok(LetterSequence::cyclic(parse_symbols(s)?))
    }
}

impl fmt::Display for LetterSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_symbols(&self.letters))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InflationRule {
    name: String,
    rules: BTreeMap<Symbol, Vec<Symbol>>,
    symmetrized: Option<BTreeMap<Symbol, Vec<Letter>>>,
    default_seed: Vec<Symbol>,
}

impl InflationRule {
    /// Builds a rule and checks closure, plus the merge invariant of the
    /// symmetrized form when one is given.
    pub fn new(
        name: impl Into<String>,
        rules: BTreeMap<Symbol, Vec<Symbol>>,
        symmetrized: Option<BTreeMap<Symbol, Vec<Letter>>>,
        default_seed: Vec<Symbol>,
    ) -> Result<Self> {
        let rule = InflationRule { name: name.into(), rules, symmetrized, default_seed };
        rule.validate()?;
        Ok(rule)
    }

    fn validate(&self) -> Result<()> {
        if self.rules.is_empty() {
            return Err(Error::InvalidRule(format!("{}: no rules", self.name)));
        }
        for (x, image) in &self.rules {
            if image.is_empty() {
                return Err(Error::InvalidRule(format!("{}: empty image for {x}", self.name)));
            }
            for y in image {
                if !self.rules.contains_key(y) {
                    return Err(Error::Closure(*y));
                }
            }
        }
        for s in &self.default_seed {
            if !self.rules.contains_key(s) {
                return Err(Error::Closure(*s));
            }
        }
        if let Some(sym) = &self.symmetrized {
            if sym.keys().ne(self.rules.keys()) {
                return Err(Error::InvalidRule(format!(
                    "{}: symmetrized rules must cover the same letters",
                    self.name
                )));
            }
            let mut split: Option<Option<Symbol>> = None;
            for (x, image) in sym {
                let this = split_symbol(image).ok_or_else(|| {
                    Error::InvalidRule(format!(
                        "{}: half-tokens of {x} must sit at both word boundaries",
                        self.name
                    ))
                })?;
                match split {
                    None => split = Some(this),
                    Some(prev) if prev != this => {
                        return Err(Error::InvalidRule(format!(
                            "{}: all symmetrized images must split the same letter",
                            self.name
                        )))
                    }
                    _ => {}
                }
                // Interior letters followed by the merged boundary letter must
                // reproduce the plain image.
                let mut merged: Vec<Symbol> = match this {
                    Some(_) => image[1..image.len() - 1].iter().map(|l| l.symbol).collect(),
                    None => image.iter().map(|l| l.symbol).collect(),
                };
                if let Some(s) = this {
                    merged.push(s);
                }
                if merged != self.rules[x] {
                    return Err(Error::InvalidRule(format!(
                        "{}: symmetrized image of {x} does not merge back to {}",
                        self.name,
                        format_symbols(&self.rules[x])
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn image(&self, x: Symbol) -> Option<&[Symbol]> {
        self.rules.get(&x).map(Vec::as_slice)
    }

    pub fn symmetrized_image(&self, x: Symbol) -> Option<Vec<Letter>> {
        match &self.symmetrized {
            Some(sym) => sym.get(&x).cloned(),
            None => self.image(x).map(|w| w.iter().copied().map(Letter::full).collect()),
        }
    }

    pub fn has_symmetrized_form(&self) -> bool {
        self.symmetrized.is_some()
    }

    pub fn alphabet(&self) -> Vec<Symbol> {
        self.rules.keys().copied().collect()
    }

    pub fn default_seed(&self) -> LetterSequence {
        LetterSequence::cyclic(self.default_seed.clone())
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["3,7", "3,8", "4,5", "6,4", "fibonacci", "silver-mean"]
    }

    /// Built-in rules. `{p,q}` tilings accept `3,7` or `{3,7}`.
    pub fn preset(name: &str) -> Result<Self> {
        let key = name.trim().trim_start_matches('{').trim_end_matches('}').to_ascii_lowercase();
        let (label, plain, sym, seed): (&str, &[(&str, &str)], Option<&[(&str, &str)]>, &str) =
            match key.as_str() {
                "3,7" => (
                    "{3,7}",
                    &[("o", "aaab"), ("a", "aab"), ("b", "ab")],
                    Some(&[("o", "√b a a a √b"), ("a", "√b a a √b"), ("b", "√b a √b")]),
                    "ooo",
                ),
                "3,8" => (
                    "{3,8}",
                    &[("o", "aaaab"), ("a", "aaab"), ("b", "aab")],
                    Some(&[("o", "√b a a a a √b"), ("a", "√b a a a √b"), ("b", "√b a a √b")]),
                    "ooo",
                ),
                "4,5" => ("{4,5}", &[("a", "ababa"), ("b", "aba")], None, "aaaa"),
                "6,4" => ("{6,4}", &[("a", "aba"), ("b", "abaaaba")], None, "aaaaaa"),
                "fibonacci" | "fib" => ("fibonacci", &[("a", "ab"), ("b", "a")], None, "a"),
                "silver-mean" | "silver_mean" | "silver" => {
                    ("silver-mean", &[("a", "aba"), ("b", "a")], None, "a")
                }
                _ => return Err(Error::UnknownPreset(name.to_string())),
            };
        let rules = plain
            .iter()
            .map(|(k, v)| Ok((parse_symbols(k)?[0], parse_symbols(v)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let symmetrized = sym
            .map(|pairs| {
                pairs
                    .iter()
                    .map(|(k, v)| Ok((parse_symbols(k)?[0], parse_word(v)?)))
                    .collect::<Result<BTreeMap<_, _>>>()
            })
            .transpose()?;
        InflationRule::new(label, rules, symmetrized, parse_symbols(seed)?)
    }

    /// Resolves a preset name, or loads a JSON rule file if `spec` names one.
    pub fn resolve(spec: &str) -> Result<Self> {
        match InflationRule::preset(spec) {
            Ok(rule) => Ok(rule),
            Err(Error::UnknownPreset(_)) if Path::new(spec).is_file() => InflationRule::load(spec),
            Err(e) => Err(e),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        InflationRule::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: RuleFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RuleFile::from(self)).expect("rule serializes")
    }
}

/// Returns `Some(Some(s))` when the image is `√s … √s`, `Some(None)` when it
/// has no half-tokens, and `None` for any other placement of halves.
fn split_symbol(image: &[Letter]) -> Option<Option<Symbol>> {
    let halves = image.iter().filter(|l| l.half).count();
    match halves {
        0 => Some(None),
        2 if image.len() >= 2
            && image[0].half
            && image[image.len() - 1].half
            && image[0].symbol == image[image.len() - 1].symbol =>
        {
            Some(Some(image[0].symbol))
        }
        _ => None,
    }
}

/// JSON form: `{"name": .., "rules": {"a": "aab"}, "symmetrized_rules": {"a": "√b a a √b"}, "seed": "ooo"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RuleFile {
    pub name: String,
    pub rules: BTreeMap<String, String>,
    #[serde(default, alias = "symmetrized", skip_serializing_if = "Option::is_none")]
    pub symmetrized_rules: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
}

fn parse_key(k: &str) -> Result<Symbol> {
    match parse_symbols(k)?.as_slice() {
        [s] => Ok(*s),
        _ => Err(Error::Parse(k.to_string())),
    }
}

impl TryFrom<RuleFile> for InflationRule {
    type Error = Error;

    fn try_from(file: RuleFile) -> Result<Self> {
        let rules = file
            .rules
            .iter()
            .map(|(k, v)| Ok((parse_key(k)?, parse_symbols(v)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let symmetrized = file
            .symmetrized_rules
            .as_ref()
            .map(|m| {
                m.iter()
                    .map(|(k, v)| Ok((parse_key(k)?, parse_word(v)?)))
                    .collect::<Result<BTreeMap<_, _>>>()
            })
            .transpose()?;
        let seed = match &file.seed {
            Some(s) => parse_symbols(s)?,
            None => vec![*rules.keys().find(|s| **s != Symbol::O).unwrap_or(&Symbol::A)],
        };
        InflationRule::new(file.name, rules, symmetrized, seed)
    }
}

impl From<&InflationRule> for RuleFile {
    fn from(rule: &InflationRule) -> Self {
        RuleFile {
            name: rule.name.clone(),
            rules: rule
                .rules
                .iter()
                .map(|(k, v)| (k.to_string(), format_symbols(v)))
                .collect(),
            symmetrized_rules: rule.symmetrized.as_ref().map(|m| {
                m.iter().map(|(k, v)| (k.to_string(), format_word(v))).collect()
            }),
            seed: Some(format_symbols(&rule.default_seed)),
        }
    }
}

fn check_closure(seq: &LetterSequence, rule: &InflationRule) -> Result<()> {
    match seq.letters.iter().find(|s| rule.image(**s).is_none()) {
        Some(s) => Err(Error::Closure(*s)),
        None => Ok(()),
    }
}

/// Applies the rule `n` times.
pub fn inflate(seed: &LetterSequence, rule: &InflationRule, n: usize) -> Result<LetterSequence> {
    check_closure(seed, rule)?;
    let mut letters = seed.letters.clone();
    for _ in 0..n {
        letters = letters
            .iter()
            .flat_map(|s| rule.image(*s).expect("closure checked").iter().copied())
            .collect();
    }
    Ok(LetterSequence { letters, cyclic: seed.cyclic, step: seed.step + n })
}

/// Parent links of a letter in the layer below.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parents {
    Seed,
    One(usize),
    /// A merged letter: left and right parent, weighted equally.
    Two(usize, usize),
}

impl Parents {
    pub fn as_slice(&self) -> Vec<usize> {
        match *self {
            Parents::Seed => vec![],
            Parents::One(p) => vec![p],
            Parents::Two(p, q) => vec![p, q],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Node {
    pub symbol: Symbol,
    pub parents: Parents,
}

/// All layers of a symmetrized inflation, with parent links between them.
#[derive(Clone, Debug)]
pub struct Ancestry {
    /// `layers[0]` is the seed, `layers[n]` the final sequence.
    pub layers: Vec<Vec<Node>>,
    pub cyclic: bool,
}

impl Ancestry {
    pub fn steps(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn sequence(&self) -> LetterSequence {
        let last = self.layers.last().expect("at least the seed layer");
        LetterSequence {
            letters: last.iter().map(|n| n.symbol).collect(),
            cyclic: self.cyclic,
            step: self.steps(),
        }
    }

    /// Weighted ancestors of final letter `k`, one entry per layer from the
    /// final layer (index 0 of the result) down to the seed. Weights within a
    /// layer sum to one; a merged letter passes half its weight to each parent.
    pub fn ancestors(&self, k: usize) -> Vec<Vec<(usize, Symbol, f64)>> {
        let mut out = Vec::with_capacity(self.layers.len());
        let mut current: BTreeMap<usize, f64> = BTreeMap::from([(k, 1.0)]);
        for t in (0..self.layers.len()).rev() {
            let layer = &self.layers[t];
            out.push(current.iter().map(|(&i, &w)| (i, layer[i].symbol, w)).collect());
            let mut next = BTreeMap::new();
            for (&i, &w) in &current {
                let parents = layer[i].parents.as_slice();
                let share = w / parents.len().max(1) as f64;
                for p in parents {
                    *next.entry(p).or_insert(0.0) += share;
                }
            }
            current = next;
        }
        out
    }
}

/// One step of the symmetrized rule before merging: the concatenated images,
/// each token tagged with the index of the letter it came from.
pub fn symmetrized_tokens(seq: &[Symbol], rule: &InflationRule) -> Result<Vec<(Letter, usize)>> {
    let mut tokens = Vec::new();
    for (i, s) in seq.iter().enumerate() {
        let image = rule.symmetrized_image(*s).ok_or(Error::Closure(*s))?;
        tokens.extend(image.into_iter().map(|l| (l, i)));
    }
    Ok(tokens)
}

/// Merges adjacent half-token pairs into full letters. On a ring a leading
/// half pairs with the trailing half, and the merged letter is placed last.
pub fn merge_halves(tokens: &[(Letter, usize)], cyclic: bool) -> Result<Vec<Node>> {
    let m = tokens.len();
    let mut out = Vec::with_capacity(m);
    if m == 0 {
        return Ok(out);
    }
    let mismatch = |i: usize, j: usize| {
        Error::Symmetrization(format!(
            "adjacent half-tokens {} and {} do not match",
            tokens[i].0, tokens[j].0
        ))
    };
    let mut wrap = None;
    let (mut i, end) = if tokens[0].0.half {
        if !cyclic {
            return Err(Error::Symmetrization("open word starts with a half-token".into()));
        }
        if m < 2 || !tokens[m - 1].0.half {
            return Err(Error::Symmetrization("unpaired half-token on ring".into()));
        }
        if tokens[m - 1].0.symbol != tokens[0].0.symbol {
            return Err(mismatch(m - 1, 0));
        }
        wrap = Some(Node {
            symbol: tokens[0].0.symbol,
            parents: Parents::Two(tokens[m - 1].1, tokens[0].1),
        });
        (1, m - 1)
    } else {
        (0, m)
    };
    while i < end {
        let (letter, origin) = tokens[i];
        if !letter.half {
            out.push(Node { symbol: letter.symbol, parents: Parents::One(origin) });
            i += 1;
            continue;
        }
        if i + 1 >= end || !tokens[i + 1].0.half {
            return Err(Error::Symmetrization("odd number of adjacent half-tokens".into()));
        }
        if tokens[i + 1].0.symbol != letter.symbol {
            return Err(mismatch(i, i + 1));
        }
        out.push(Node { symbol: letter.symbol, parents: Parents::Two(origin, tokens[i + 1].1) });
        i += 2;
    }
    out.extend(wrap);
    Ok(out)
}

/// Symmetrized inflation with the full parent structure of every layer.
///
/// The merged letters land on the same positions as in [`inflate`], so the
/// final word equals the plain inflation with zero rotation.
pub fn inflate_symmetrized(
    seed: &LetterSequence,
    rule: &InflationRule,
    n: usize,
) -> Result<Ancestry> {
    check_closure(seed, rule)?;
    if rule.has_symmetrized_form() && !seed.cyclic && n > 0 {
        return Err(Error::Symmetrization("symmetrized inflation needs a cyclic seed".into()));
    }
    let mut layers = Vec::with_capacity(n + 1);
    layers.push(
        seed.letters
            .iter()
            .map(|&symbol| Node { symbol, parents: Parents::Seed })
            .collect::<Vec<_>>(),
    );
    for _ in 0..n {
        let prev: Vec<Symbol> = layers.last().unwrap().iter().map(|n: &Node| n.symbol).collect();
        let tokens = symmetrized_tokens(&prev, rule)?;
        layers.push(merge_halves(&tokens, seed.cyclic)?);
    }
    Ok(Ancestry { layers, cyclic: seed.cyclic })
}

/// Integer substitution matrix: `counts[y][x]` is the number of `y` in the
/// image of `x`, both indexed over `alphabet`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionMatrix {
    pub alphabet: Vec<Symbol>,
    pub counts: Vec<Vec<u128>>,
}

impl SubstitutionMatrix {
    pub fn identity(alphabet: Vec<Symbol>) -> Self {
        let n = alphabet.len();
        let counts = (0..n).map(|i| (0..n).map(|j| u128::from(i == j)).collect()).collect();
        SubstitutionMatrix { alphabet, counts }
    }

    pub fn dim(&self) -> usize {
        self.alphabet.len()
    }

    fn position(&self, s: Symbol) -> Option<usize> {
        self.alphabet.iter().position(|x| *x == s)
    }

    pub fn get(&self, y: Symbol, x: Symbol) -> u128 {
        match (self.position(y), self.position(x)) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    /// Sub-block over a subset of the alphabet, e.g. `{a, b}` once `o` is gone.
    pub fn restricted(&self, alphabet: &[Symbol]) -> SubstitutionMatrix {
        let counts =
            alphabet.iter().map(|&y| alphabet.iter().map(|&x| self.get(y, x)).collect()).collect();
        SubstitutionMatrix { alphabet: alphabet.to_vec(), counts }
    }

    pub fn mul(&self, other: &SubstitutionMatrix) -> Option<SubstitutionMatrix> {
        let n = self.dim();
        let mut counts = vec![vec![0u128; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0u128;
                for k in 0..n {
                    acc = acc.checked_add(self.counts[i][k].checked_mul(other.counts[k][j])?)?;
                }
                counts[i][j] = acc;
            }
        }
        Some(SubstitutionMatrix { alphabet: self.alphabet.clone(), counts })
    }

    /// `M^n` by repeated squaring; `None` on `u128` overflow.
    pub fn pow(&self, mut n: usize) -> Option<SubstitutionMatrix> {
        let mut result = SubstitutionMatrix::identity(self.alphabet.clone());
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base)?;
            }
        }
        Some(result)
    }

    pub fn apply(&self, v: &[u128]) -> Option<Vec<u128>> {
        self.counts
            .iter()
            .map(|row| {
                row.iter().zip(v).try_fold(0u128, |acc, (m, x)| acc.checked_add(m.checked_mul(*x)?))
            })
            .collect()
    }

    /// Normalized Perron–Frobenius eigenvector (asymptotic letter frequencies).
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.dim();
        let mut v = vec![1.0 / n as f64; n];
        for _ in 0..2000 {
            let mut w: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| self.counts[i][j] as f64 * v[j]).sum::<f64>() + v[i])
                .collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            v = w;
        }
        v
    }
}

pub fn substitution_matrix(rule: &InflationRule) -> SubstitutionMatrix {
    let alphabet = rule.alphabet();
    let counts = alphabet
        .iter()
        .map(|&y| {
            alphabet
                .iter()
                .map(|&x| rule.image(x).unwrap().iter().filter(|s| **s == y).count() as u128)
                .collect()
        })
        .collect();
    SubstitutionMatrix { alphabet, counts }
}

/// `|σⁿ(seed)|` from matrix powers, without building the sequence.
pub fn predict_length(seed: &LetterSequence, rule: &InflationRule, n: usize) -> Result<u128> {
    check_closure(seed, rule)?;
    let m = substitution_matrix(rule);
    let counts = seed.counts();
    let v: Vec<u128> = m.alphabet.iter().map(|s| u128::from(counts[s.index()])).collect();
    let overflow = || Error::TooLarge(format!("length of {n} inflation steps overflows u128"));
    let power = m.pow(n).ok_or_else(overflow)?;
    let image = power.apply(&v).ok_or_else(overflow)?;
    image.into_iter().try_fold(0u128, |acc, x| acc.checked_add(x)).ok_or_else(overflow)
}

/// True iff `needle` occurs contiguously in `haystack`, reading the haystack
/// as a ring when `cyclic` is set.
pub fn is_factor(needle: &[Symbol], haystack: &[Symbol], cyclic: bool) -> bool {
    if needle.is_empty() {
        return true;
    }
    if haystack.is_empty() {
        return false;
    }
    if !cyclic {
        return haystack.windows(needle.len()).any(|w| w == needle);
    }
    let h = haystack.len();
    (0..h).any(|start| needle.iter().enumerate().all(|(i, s)| haystack[(start + i) % h] == *s))
}
