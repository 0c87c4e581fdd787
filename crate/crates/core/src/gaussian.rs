//! Exact free-fermion solver in the Majorana picture.
//!
//! A quadratic Hamiltonian `H = (i/4) Σ A_mn γ_m γ_n` is fixed by the real
//! antisymmetric matrix `A`. Its ground state is the Gaussian state with
//! covariance `Γ_mn = (i/2) ⟨[γ_m, γ_n]⟩`, obtained from the real canonical
//! form of `A`. Canonical values of `Γ` restricted to a window lie in
//! `[-1, 1]` and give the window's entanglement entropy.
//!
//! Majorana modes are stored site-interleaved: site `j` owns modes `2j`
//! (`a_j = c_j + c_j†`) and `2j + 1` (`b_j = i(c_j† − c_j)`), so a spin
//! interval of `ℓ` sites is a contiguous window of `2ℓ` modes.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::couplings::{expand_to_majorana, ChainKind, CouplingChain};
use crate::error::{Error, Result};

/// Mode energies below this are treated as zero modes.
pub const ZERO_MODE_TOL: f64 = 1e-10;
/// Slack on canonical values before they are rejected as invalid.
pub const CANONICAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    /// `γ_{2L+1} ≡ −γ_1`.
    Antiperiodic,
    /// XX chain, even fermion parity: antiperiodic fermions.
    XxEven,
    /// XX chain, odd fermion parity: periodic fermions.
    XxOdd,
    Custom,
}

/// Fermion-parity sector `(−1)^N` of a Jordan–Wigner transformed ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParitySector {
    Even,
    Odd,
}

impl ParitySector {
    pub fn sign(self) -> i8 {
        match self {
            ParitySector::Even => 1,
            ParitySector::Odd => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTag {
    MajoranaChain,
    XxChain,
    Xxz,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AntisymmetricCoupling {
    matrix: DMatrix<f64>,
    pub boundary: BoundaryTag,
}

impl AntisymmetricCoupling {
    /// Stores `(M − Mᵀ)/2`, so the result is exactly antisymmetric.
    pub fn new(matrix: DMatrix<f64>, boundary: BoundaryTag) -> Result<Self> {
        if !matrix.is_square() || !matrix.nrows().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "coupling matrix must be square of even size, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCouplings("non-finite coupling matrix entry".into()));
        }
        let matrix = (&matrix - matrix.transpose()) * 0.5;
        Ok(AntisymmetricCoupling { matrix, boundary })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows()
    }

    /// True when no entry couples two `a` modes or two `b` modes.
    pub fn is_sublattice_bipartite(&self) -> bool {
        let n = self.modes();
        (0..n).all(|i| (0..n).all(|j| (i + j) % 2 == 1 || self.matrix[(i, j)] == 0.0))
    }

    /// `(i/4) Σ A_mn γ_m γ_n` evaluated in a state with covariance `Γ`.
    pub fn energy_of(&self, gamma: &CovarianceMatrix) -> f64 {
        -0.25 * (&self.matrix * gamma.matrix()).trace()
    }
}

/// `H = (i/2) Σ_k J_k γ_k γ_{k+1}` on `2L` modes with `γ_{2L+1} ≡ −γ_1`.
pub fn build_majorana_a(chain: &CouplingChain) -> Result<AntisymmetricCoupling> {
    let n = chain.len();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Dimension(format!("Majorana chain needs even length, got {n}")));
    }
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n - 1 {
        a[(k, k + 1)] = chain.values[k];
        a[(k + 1, k)] = -chain.values[k];
    }
    a[(n - 1, 0)] -= chain.values[n - 1];
    a[(0, n - 1)] += chain.values[n - 1];
    AntisymmetricCoupling::new(a, BoundaryTag::Antiperiodic)
}

/// Jordan–Wigner image of `Σ_k J_k (S^x_k S^x_{k+1} + S^y_k S^y_{k+1})` on a
/// ring, restricted to one fermion-parity sector.
///
/// Each bond is a hopping `(J_k/2)(c†_k c_{k+1} + h.c.)`; the wrap-around bond
/// picks up `−(−1)^N`, i.e. antiperiodic fermions for even parity.
pub fn build_xx_a(bond: &CouplingChain, sector: ParitySector) -> Result<AntisymmetricCoupling> {
    let l = bond.len();
    if l < 2 {
        return Err(Error::Dimension(format!("XX ring needs at least 2 sites, got {l}")));
    }
    let mut m = DMatrix::zeros(2 * l, 2 * l);
    for k in 0..l {
        let next = (k + 1) % l;
        let sign = if next == 0 && sector == ParitySector::Even { -1.0 } else { 1.0 };
        let t = sign * bond.values[k] / 2.0;
        let (ak, bk, an, bn) = (2 * k, 2 * k + 1, 2 * next, 2 * next + 1);
        m[(ak, bn)] += t;
        m[(bn, ak)] -= t;
        m[(bk, an)] -= t;
        m[(an, bk)] += t;
    }
    let boundary = match sector {
        ParitySector::Even => BoundaryTag::XxEven,
        ParitySector::Odd => BoundaryTag::XxOdd,
    };
    AntisymmetricCoupling::new(m, boundary)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    pub pure: bool,
    /// `Γ` restricted to rows `a_i`, columns `b_j`, when the same-sublattice
    /// blocks vanish.
    sublattice_block: Option<DMatrix<f64>>,
    block_symmetric: bool,
}

impl CovarianceMatrix {
    pub fn new(matrix: DMatrix<f64>, pure: bool) -> Self {
        let n = matrix.nrows() / 2;
        let same_sublattice_max = (0..2 * n)
            .flat_map(|i| (0..2 * n).filter(move |j| (i + j) % 2 == 0).map(move |j| (i, j)))
            .map(|(i, j)| matrix[(i, j)].abs())
            .fold(0.0, f64::max);
        let (sublattice_block, block_symmetric) = if same_sublattice_max < 1e-12 {
            let g = DMatrix::from_fn(n, n, |i, j| matrix[(2 * i, 2 * j + 1)]);
            let asym = (&g - g.transpose()).amax();
            (Some(g), asym < 1e-12)
        } else {
            (None, false)
        };
        CovarianceMatrix { matrix, pure, sublattice_block, block_symmetric }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sites(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// `‖Γ² + 1‖_max`, zero for a pure Gaussian state.
    pub fn purity_error(&self) -> f64 {
        let n = self.modes();
        (&self.matrix * &self.matrix + DMatrix::identity(n, n)).amax()
    }

    pub fn antisymmetry_error(&self) -> f64 {
        (&self.matrix + self.matrix.transpose()).amax()
    }
}

/// Real canonical form `A = Σ_k ε_k (w_k u_kᵀ − u_k w_kᵀ)` with `ε_k ≥ 0`
/// ascending and `{w_k, u_k}` orthonormal.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub energies: Vec<f64>,
    pub w: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
}

impl CanonicalForm {
    /// Orthogonal matrix with rows `w_1, u_1, w_2, u_2, …`.
    pub fn orthogonal(&self) -> DMatrix<f64> {
        let n = self.w.len();
        let mut o = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            o.set_row(2 * k, &self.w[k].transpose());
            o.set_row(2 * k + 1, &self.u[k].transpose());
        }
        o
    }

    fn sort(mut self) -> Self {
        let mut order: Vec<usize> = (0..self.energies.len()).collect();
        order.sort_by(|&i, &j| self.energies[i].total_cmp(&self.energies[j]));
        self.energies = order.iter().map(|&i| self.energies[i]).collect();
        self.w = order.iter().map(|&i| self.w[i].clone()).collect();
        self.u = order.iter().map(|&i| self.u[i].clone()).collect();
        self
    }
}

/// Canonical form of a real antisymmetric matrix.
///
/// Sublattice-bipartite matrices (all builders here produce those) reduce to
/// an SVD of the `a`–`b` block; anything else goes through the Hermitian
/// eigenproblem of `iA`. Zero modes get a deterministic real basis.
pub fn canonical_form(a: &AntisymmetricCoupling) -> Result<CanonicalForm> {
    if a.is_sublattice_bipartite() {
        Ok(canonical_form_bipartite(a.matrix()))
    } else {
        canonical_form_general(a.matrix())
    }
}

fn canonical_form_bipartite(m: &DMatrix<f64>) -> CanonicalForm {
    let n = m.nrows() / 2;
    let t = DMatrix::from_fn(n, n, |i, j| m[(2 * i, 2 * j + 1)]);
    let svd = SVD::new(t, true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut form = CanonicalForm { energies: vec![], w: vec![], u: vec![] };
    for k in 0..n {
        let mut wa = DVector::zeros(2 * n);
        let mut ub = DVector::zeros(2 * n);
        for i in 0..n {
            wa[2 * i] = u[(i, k)];
            ub[2 * i + 1] = v_t[(k, i)];
        }
        form.energies.push(svd.singular_values[k]);
        form.w.push(wa);
        form.u.push(ub);
    }
    form.sort()
}

pub(crate) fn canonical_form_general(m: &DMatrix<f64>) -> Result<CanonicalForm> {
    let dim = m.nrows();
    let h = DMatrix::from_fn(dim, dim, |i, j| Complex::new(0.0, m[(i, j)]));
    let eig = SymmetricEigen::new(h);
    let mut form = CanonicalForm { energies: vec![], w: vec![], u: vec![] };
    let mut zero: Vec<usize> = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() < ZERO_MODE_TOL {
            zero.push(k);
        } else if lambda > 0.0 {
            let v = eig.eigenvectors.column(k);
            let s = std::f64::consts::SQRT_2;
            form.energies.push(lambda);
            form.u.push(DVector::from_iterator(dim, v.iter().map(|z| s * z.re)));
            form.w.push(DVector::from_iterator(dim, v.iter().map(|z| s * z.im)));
        }
    }
    if !zero.len().is_multiple_of(2) {
        return Err(Error::Dimension(format!("odd number ({}) of zero modes", zero.len())));
    }
    if !zero.is_empty() {
        // Real basis of the null space from the (real) spectral projector.
        let mut p = DMatrix::<f64>::zeros(dim, dim);
        for &k in &zero {
            let v = eig.eigenvectors.column(k);
            for i in 0..dim {
                for j in 0..dim {
                    p[(i, j)] += (v[i] * v[j].conj()).re;
                }
            }
        }
        let pe = SymmetricEigen::new(p);
        let mut basis: Vec<(f64, DVector<f64>)> = pe
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0.5)
            .map(|(k, &x)| (x, pe.eigenvectors.column(k).into_owned()))
            .collect();
        basis.sort_by(|x, y| y.0.total_cmp(&x.0));
        if basis.len() != zero.len() {
            return Err(Error::Dimension("null-space basis has the wrong rank".into()));
        }
        for pair in basis.chunks(2) {
            form.energies.push(0.0);
            form.w.push(pair[0].1.clone());
            form.u.push(pair[1].1.clone());
        }
    }
    if form.energies.len() * 2 != dim {
        return Err(Error::Dimension("spectrum of iA is not symmetric".into()));
    }
    Ok(form.sort())
}

#[derive(Clone, Debug)]
pub struct GaussianGroundState {
    pub covariance: CovarianceMatrix,
    pub energy: f64,
    /// Single-particle energies `ε_k ≥ 0`, ascending.
    pub mode_energies: Vec<f64>,
    /// Fermion parity `⟨(−1)^N⟩` of the returned state.
    pub parity: i8,
    /// Set when some `ε_k < ZERO_MODE_TOL`; the state is then one
    /// deterministic choice among degenerate ground states.
    pub degenerate: bool,
    form: CanonicalForm,
    filled: Vec<bool>,
}

impl GaussianGroundState {
    fn from_form(form: CanonicalForm) -> Self {
        let filled = vec![true; form.energies.len()];
        let parity = if form.orthogonal().determinant() > 0.0 { 1 } else { -1 };
        let mut state = GaussianGroundState {
            covariance: CovarianceMatrix::new(DMatrix::zeros(0, 0), true),
            energy: 0.0,
            degenerate: form.energies.first().is_some_and(|e| *e < ZERO_MODE_TOL),
            mode_energies: form.energies.clone(),
            parity,
            form,
            filled,
        };
        state.rebuild();
        state
    }

    fn rebuild(&mut self) {
        let dim = 2 * self.form.energies.len();
        let mut g = DMatrix::zeros(dim, dim);
        let mut energy = 0.0;
        for k in 0..self.form.energies.len() {
            let s = if self.filled[k] { 1.0 } else { -1.0 };
            energy -= s * 0.5 * self.form.energies[k];
            g += (&self.form.u[k] * self.form.w[k].transpose() - &self.form.w[k] * self.form.u[k].transpose()) * s;
        }
        self.covariance = CovarianceMatrix::new(g, true);
        self.energy = energy;
    }

    /// Excites the lowest mode, flipping the fermion parity.
    pub fn flip_lowest_mode(&mut self) {
        if self.filled.is_empty() {
            return;
        }
        self.filled[0] = !self.filled[0];
        self.parity = -self.parity;
        self.rebuild();
    }

    pub fn canonical_form(&self) -> &CanonicalForm {
        &self.form
    }
}

/// Pure ground state of `H = (i/4) Σ A_mn γ_m γ_n`: every mode in its
/// negative-energy state, `E = −½ Σ ε_k`.
pub fn ground_covariance(a: &AntisymmetricCoupling) -> Result<GaussianGroundState> {
    Ok(GaussianGroundState::from_form(canonical_form(a)?))
}

#[derive(Clone, Debug)]
pub struct XxGroundState {
    pub state: GaussianGroundState,
    pub sector: ParitySector,
    /// Energies of the lowest parity-consistent state in the even and odd sector.
    pub sector_energies: [f64; 2],
    /// Zero modes or near-equal sector energies.
    pub degenerate: bool,
}

/// Ground state of the periodic XX ring: solve both parity sectors, keep in
/// each the lowest state whose parity matches the sector, return the lower.
pub fn xx_ground_state(bond: &CouplingChain) -> Result<XxGroundState> {
    let mut best: Option<(GaussianGroundState, ParitySector)> = None;
    let mut energies = [0.0; 2];
    for (i, sector) in [ParitySector::Even, ParitySector::Odd].into_iter().enumerate() {
        let mut state = ground_covariance(&build_xx_a(bond, sector)?)?;
        if state.parity != sector.sign() {
            state.flip_lowest_mode();
        }
        energies[i] = state.energy;
        if best.as_ref().is_none_or(|(b, _)| state.energy < b.energy) {
            best = Some((state, sector));
        }
    }
    let (state, sector) = best.unwrap();
    let degenerate = state.degenerate || (energies[0] - energies[1]).abs() < ZERO_MODE_TOL;
    Ok(XxGroundState { state, sector, sector_energies: energies, degenerate })
}

/// Ground state of a chain read as an XX ring (`XxChain`, values taken as
/// bonds) or as a Majorana chain (`MajoranaChain`, bond chains expanded with
/// averaged odd couplings first).
pub fn chain_ground_state(chain: &CouplingChain, model: ModelTag) -> Result<(GaussianGroundState, bool)> {
    match model {
        ModelTag::XxChain => {
            let xx = xx_ground_state(&chain.reinterpret(ChainKind::Bond))?;
            Ok((xx.state, xx.degenerate))
        }
        ModelTag::MajoranaChain => {
            let expanded;
            let chain = match chain.kind {
                ChainKind::Majorana => chain,
                ChainKind::Bond => {
                    expanded = expand_to_majorana(chain)?;
                    &expanded
                }
            };
            let state = ground_covariance(&build_majorana_a(chain)?)?;
            let degenerate = state.degenerate;
            Ok((state, degenerate))
        }
        ModelTag::Xxz => Err(Error::InvalidCouplings("XXZ is not a Gaussian model".into())),
    }
}

/// Binary entropy in nats, `0 ln 0 = 0`.
pub fn binary_entropy(nu: f64) -> f64 {
    let nu = nu.clamp(0.0, 1.0);
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    term(nu) + term(1.0 - nu)
}

fn mode_entropy(mu: f64) -> Result<f64> {
    if !(mu.abs() <= 1.0 + CANONICAL_TOL) {
        return Err(Error::NumericalValidity { value: mu });
    }
    Ok(binary_entropy((1.0 + mu.clamp(-1.0, 1.0)) / 2.0))
}

/// Contiguous cyclic window of Majorana modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

impl Window {
    /// Spin sites `j..j+ℓ` as modes `2j..2j+2ℓ`.
    pub fn sites(start: usize, len: usize) -> Self {
        Window { start: 2 * start, len: 2 * len }
    }
}

/// Von Neumann entropy (nats) of the modes in `window`.
pub fn subsystem_entropy(gamma: &CovarianceMatrix, window: Window) -> Result<f64> {
    let n = gamma.modes();
    if !window.len.is_multiple_of(2) || window.len > n {
        return Err(Error::Dimension(format!("window of {} modes in {n}", window.len)));
    }
    if window.len == 0 {
        return Ok(0.0);
    }
    let sites = n / 2;
    if let (Some(g), true) = (&gamma.sublattice_block, window.start.is_multiple_of(2)) {
        let (j, l) = (window.start / 2, window.len / 2);
        let ga = DMatrix::from_fn(l, l, |p, q| g[((j + p) % sites, (j + q) % sites)]);
        let mus: Vec<f64> = if gamma.block_symmetric {
            ga.symmetric_eigenvalues().iter().map(|x| x.abs()).collect()
        } else {
            ga.singular_values().iter().copied().collect()
        };
        return mus.into_iter().map(mode_entropy).sum();
    }
    let idx: Vec<usize> = (0..window.len).map(|p| (window.start + p) % n).collect();
    let ga = DMatrix::from_fn(window.len, window.len, |p, q| gamma.matrix[(idx[p], idx[q])]);
    let sq = -(&ga * &ga);
    let mut total = 0.0;
    for m in sq.symmetric_eigenvalues().iter() {
        if *m < -CANONICAL_TOL {
            return Err(Error::NumericalValidity { value: *m });
        }
        total += mode_entropy(m.max(0.0).sqrt())?;
    }
    // Each canonical value appears twice among the eigenvalues of −Γ_A².
    Ok(0.5 * total)
}

/// Site-averaged entanglement entropy `S_avg(ℓ)` for `ℓ = 0..=L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub sites: usize,
    pub values: Vec<f64>,
    pub model: ModelTag,
}

impl EntropyProfile {
    pub fn at(&self, l: usize) -> f64 {
        self.values[l]
    }

    /// `ell,S_avg` rows for `ℓ = 0..=L`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ell,S_avg\n");
        for (l, s) in self.values.iter().enumerate() {
            out.push_str(&format!("{l},{s}\n"));
        }
        out
    }
}

/// `S_avg(ℓ) = (1/L) Σ_j S_j(ℓ)` for one interval length.
pub fn averaged_entropy(gamma: &CovarianceMatrix, l: usize) -> Result<f64> {
    let sites = gamma.sites();
    if l == 0 || (l == sites && gamma.pure) {
        return Ok(0.0);
    }
    // For a pure state the complement carries the same entropy and is smaller.
    let l = if gamma.pure && 2 * l > sites { sites - l } else { l };
    let mut total = 0.0;
    for j in 0..sites {
        total += subsystem_entropy(gamma, Window::sites(j, l))?;
    }
    Ok(total / sites as f64)
}

pub fn averaged_entropy_profile(gamma: &CovarianceMatrix, model: ModelTag) -> Result<EntropyProfile> {
    let sites = gamma.sites();
    let mut values = vec![0.0; sites + 1];
    for l in 1..=sites {
        values[l] = if gamma.pure && 2 * l > sites { values[sites - l] } else { averaged_entropy(gamma, l)? };
    }
    Ok(EntropyProfile { sites, values, model })
}

/// Site-averaged `|Γ_{j, j+d}|` over Majorana distances `d = 0..=L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    pub values: Vec<f64>,
}

pub fn correlation_decay(gamma: &CovarianceMatrix) -> CorrelationProfile {
    let n = gamma.modes();
    let values = (0..=n / 2)
        .map(|d| (0..n).map(|j| gamma.matrix[(j, (j + d) % n)].abs()).sum::<f64>() / n as f64)
        .collect();
    CorrelationProfile { values }
}

#[cfg(test)]
pub(crate) mod fock {
    //! Brute-force many-body reference: Majorana operators as dense matrices
    //! on the `2^N` Fock space via Jordan–Wigner.

    use nalgebra::{Complex, DMatrix, SymmetricEigen};

    pub type CMat = DMatrix<Complex<f64>>;

    fn kron(a: &CMat, b: &CMat) -> CMat {
        a.kronecker(b)
    }

    fn pauli() -> [CMat; 4] {
        let c = |re: f64, im: f64| Complex::new(re, im);
        let z = c(0.0, 0.0);
        [
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), z, z, c(1.0, 0.0)]),
            DMatrix::from_row_slice(2, 2, &[z, c(1.0, 0.0), c(1.0, 0.0), z]),
            DMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), z, z, c(-1.0, 0.0)]),
        ]
    }

    /// Single-site operator `op` on site `j` of `n` with optional JW string.
    pub fn site_op(n: usize, j: usize, op: &CMat, string: bool) -> CMat {
        let [id, _, _, z] = pauli();
        let mut out = DMatrix::from_element(1, 1, Complex::new(1.0, 0.0));
        for s in 0..n {
            let f = if s == j { op } else if s < j && string { &z } else { &id };
            out = kron(&out, f);
        }
        out
    }

    /// `γ_{2j} = Z…Z X_j`, `γ_{2j+1} = Z…Z Y_j`.
    pub fn majoranas(n: usize) -> Vec<CMat> {
        let [_, x, y, _] = pauli();
        (0..n).flat_map(|j| [site_op(n, j, &x, true), site_op(n, j, &y, true)]).collect()
    }

    pub fn ground_state(h: &CMat) -> (f64, nalgebra::DVector<Complex<f64>>) {
        let eig = SymmetricEigen::new(h.clone());
        let k = eig.eigenvalues.imin();
        (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
    }

    pub fn spin_ops() -> [CMat; 4] {
        pauli()
    }
}

#[cfg(test)]
mod tests {
    use super::fock::*;
    use super::*;
    use crate::couplings::ChainKind;
    use nalgebra::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bonds(v: &[f64]) -> CouplingChain {
        CouplingChain::custom(v.to_vec(), ChainKind::Bond).unwrap()
    }

    fn random_bonds(l: usize, seed: u64) -> CouplingChain {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        bonds(&(0..l).map(|_| rng.random_range(0.2..2.0)).collect::<Vec<_>>())
    }

    /// `Σ J_k (SxSx + SySy)` on a periodic ring as a dense `2^L` matrix.
    fn xx_spin_hamiltonian(j: &[f64]) -> CMat {
        let l = j.len();
        let [_, x, y, _] = spin_ops();
        let dim = 1 << l;
        let mut h = CMat::zeros(dim, dim);
        for k in 0..l {
            let n = (k + 1) % l;
            for op in [&x, &y] {
                h += site_op(l, k, op, false) * site_op(l, n, op, false) * Complex::new(j[k] / 4.0, 0.0);
            }
        }
        h
    }

    /// Entropy of sites `0..ell` of a state on `l` qubits (site 0 most significant).
    fn dense_entropy(psi: &nalgebra::DVector<Complex<f64>>, l: usize, ell: usize) -> f64 {
        let da = 1 << ell;
        let db = 1 << (l - ell);
        let m = CMat::from_fn(da, db, |i, j| psi[i * db + j]);
        let rho = &m * m.adjoint();
        SymmetricEigen::new(rho).eigenvalues.iter().map(|p| if *p > 1e-14 { -p * p.ln() } else { 0.0 }).sum()
    }

    #[test]
    fn majorana_builder_structure() {
        let chain = CouplingChain::custom(vec![1.0; 4], ChainKind::Majorana).unwrap();
        let a = build_majorana_a(&chain).unwrap();
        let m = a.matrix();
        for k in 0..3 {
            assert_eq!(m[(k, k + 1)], 1.0);
            assert_eq!(m[(k + 1, k)], -1.0);
        }
        assert_eq!(m[(3, 0)], -1.0);
        assert_eq!(m[(0, 3)], 1.0);
        assert_eq!(m.iter().filter(|v| **v != 0.0).count(), 8);

        let chain = CouplingChain::custom(vec![0.3, 0.7, 1.1, 1.9], ChainKind::Majorana).unwrap();
        let m = build_majorana_a(&chain).unwrap().matrix().clone();
        assert_eq!((m[(0, 1)], m[(1, 2)], m[(2, 3)], m[(3, 0)]), (0.3, 0.7, 1.1, -1.9));
        assert!(build_majorana_a(&CouplingChain::custom(vec![1.0; 3], ChainKind::Majorana).unwrap()).is_err());
    }

    #[test]
    fn xx_builder_is_banded_and_antisymmetric() {
        let a = build_xx_a(&random_bonds(9, 1), ParitySector::Odd).unwrap();
        let m = a.matrix();
        assert_eq!((m + m.transpose()).amax(), 0.0);
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                let d = (i as i64 - j as i64).unsigned_abs() as usize;
                if m[(i, j)] != 0.0 {
                    assert!(d <= 3 || d >= n - 3, "entry ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn single_dimer() {
        let a = AntisymmetricCoupling::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.5, -1.5, 0.0]), BoundaryTag::Custom)
            .unwrap();
        let gs = ground_covariance(&a).unwrap();
        assert_eq!(gs.covariance.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        assert!((gs.energy + 0.75).abs() < 1e-15);
        assert_eq!(subsystem_entropy(&gs.covariance, Window { start: 0, len: 2 }).unwrap(), 0.0);
    }

    #[test]
    fn two_site_xx_spectrum() {
        // Both ring bonds join the same pair: total coupling 2J.
        let j = 0.8;
        let xx = xx_ground_state(&bonds(&[j, j])).unwrap();
        assert!((xx.state.energy + j).abs() < 1e-14);
        assert_eq!(xx.sector, ParitySector::Odd);
        assert!((xx.sector_energies[0] - 0.0).abs() < 1e-14);
        let spec = SymmetricEigen::new(xx_spin_hamiltonian(&[j, j])).eigenvalues;
        let mut e: Vec<f64> = spec.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        for (x, y) in e.iter().zip([-j, 0.0, 0.0, j]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn xx_matches_spin_ed() {
        for (l, seed) in [(3, 1), (4, 2), (5, 3), (6, 4), (7, 5), (8, 6)] {
            for chain in [bonds(&vec![1.0; l]), random_bonds(l, seed)] {
                let (e_ed, psi) = ground_state(&xx_spin_hamiltonian(&chain.values));
                let xx = xx_ground_state(&chain).unwrap();
                assert!((xx.state.energy - e_ed).abs() < 1e-10, "L={l}: {} vs {e_ed}", xx.state.energy);
                if !xx.degenerate {
                    for ell in 1..l {
                        let s_ed = dense_entropy(&psi, l, ell);
                        let s = subsystem_entropy(&xx.state.covariance, Window::sites(0, ell)).unwrap();
                        assert!((s - s_ed).abs() < 1e-8, "L={l} ell={ell}: {s} vs {s_ed}");
                    }
                }
            }
        }
    }

    #[test]
    fn covariance_matches_fock_diagonalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let chain = CouplingChain::custom((0..12).map(|_| rng.random_range(0.3..2.0)).collect(), ChainKind::Majorana)
            .unwrap();
        let gen = DMatrix::from_fn(12, 12, |_, _| rng.random_range(-1.0..1.0));
        let non_bipartite = AntisymmetricCoupling::new(gen, BoundaryTag::Custom).unwrap();
        for a in [build_majorana_a(&chain).unwrap(), non_bipartite] {
            let gamma = majoranas(6);
            let mut h = CMat::zeros(64, 64);
            for m in 0..12 {
                for n in 0..12 {
                    h += &gamma[m] * &gamma[n] * Complex::new(0.0, a.matrix()[(m, n)] / 4.0);
                }
            }
            let (e, psi) = ground_state(&h);
            let gs = ground_covariance(&a).unwrap();
            assert!((gs.energy - e).abs() < 1e-10);
            for m in 0..12 {
                for n in 0..12 {
                    if m == n {
                        continue;
                    }
                    let v = (psi.adjoint() * &gamma[m] * &gamma[n] * &psi)[(0, 0)] * Complex::new(0.0, 1.0);
                    assert!(v.im.abs() < 1e-10);
                    assert!((v.re - gs.covariance.matrix()[(m, n)]).abs() < 1e-9, "({m},{n})");
                }
            }
            // Parity from the canonical form against ⟨(−1)^N⟩.
            let parity = (0..6).fold(DMatrix::identity(64, 64), |acc: CMat, j| {
                acc * (&gamma[2 * j] * &gamma[2 * j + 1] * Complex::new(0.0, -1.0))
            });
            let p = (psi.adjoint() * parity * &psi)[(0, 0)].re;
            assert!((p - gs.parity as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn general_and_bipartite_routes_agree() {
        let a = build_xx_a(&random_bonds(10, 42), ParitySector::Even).unwrap();
        let fast = ground_covariance(&a).unwrap();
        let slow = GaussianGroundState::from_form(canonical_form_general(a.matrix()).unwrap());
        assert!((fast.energy - slow.energy).abs() < 1e-12);
        assert!((fast.covariance.matrix() - slow.covariance.matrix()).amax() < 1e-10);
        assert_eq!(fast.parity, slow.parity);
    }

    #[test]
    fn purity_and_energy_identity() {
        let bond = bonds(&vec![1.0; 58]);
        let gs = xx_ground_state(&bond).unwrap().state;
        assert!(gs.covariance.purity_error() < 1e-10);
        let a = build_majorana_a(&expand_to_majorana(&random_bonds(20, 5)).unwrap()).unwrap();
        let gs = ground_covariance(&a).unwrap();
        assert!(gs.covariance.purity_error() < 1e-10);
        assert!((a.energy_of(&gs.covariance) - gs.energy).abs() < 1e-10);
    }

    #[test]
    fn zero_modes_are_flagged_and_stay_pure() {
        // Two disconnected dimers plus two free modes.
        let mut m = DMatrix::zeros(6, 6);
        m[(0, 1)] = 1.0;
        m[(2, 3)] = 2.0;
        let a = AntisymmetricCoupling::new(m.clone(), BoundaryTag::Custom).unwrap();
        let gs = ground_covariance(&a).unwrap();
        assert!(gs.degenerate);
        assert!(gs.covariance.purity_error() < 1e-10);
        let again = ground_covariance(&a).unwrap();
        assert_eq!(gs.covariance.matrix(), again.covariance.matrix());
        m[(0, 2)] = 0.5; // breaks bipartiteness, exercises the general route
        let gs = ground_covariance(&AntisymmetricCoupling::new(m, BoundaryTag::Custom).unwrap()).unwrap();
        assert!(gs.degenerate && gs.covariance.purity_error() < 1e-10);
    }

    #[test]
    fn entropy_edge_cases() {
        let gs = xx_ground_state(&random_bonds(8, 3)).unwrap().state;
        let whole = subsystem_entropy(&gs.covariance, Window { start: 0, len: 16 }).unwrap();
        assert!(whole.abs() < 1e-9);
        let mixed = CovarianceMatrix::new(DMatrix::zeros(4, 4), false);
        let s = subsystem_entropy(&mixed, Window { start: 0, len: 2 }).unwrap();
        assert!((s - std::f64::consts::LN_2).abs() < 1e-15);
        let bad = CovarianceMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.5, -1.5, 0.0]), false);
        assert!(matches!(
            subsystem_entropy(&bad, Window { start: 0, len: 2 }),
            Err(Error::NumericalValidity { .. })
        ));
    }

    #[test]
    fn complement_and_unaligned_windows() {
        let gs = xx_ground_state(&random_bonds(12, 8)).unwrap().state;
        let g = &gs.covariance;
        for start in 0..24 {
            for len in (2..24).step_by(2) {
                let s = subsystem_entropy(g, Window { start, len }).unwrap();
                let c = subsystem_entropy(g, Window { start: (start + len) % 24, len: 24 - len }).unwrap();
                assert!((s - c).abs() < 1e-8);
            }
        }
        // Fast path against the generic −Γ_A² route.
        let generic = CovarianceMatrix { sublattice_block: None, ..g.clone() };
        for l in 1..12 {
            let w = Window::sites(5, l);
            assert!((subsystem_entropy(g, w).unwrap() - subsystem_entropy(&generic, w).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn profile_symmetry_and_uniform_average() {
        let gs = xx_ground_state(&bonds(&[1.0; 20])).unwrap().state;
        let p = averaged_entropy_profile(&gs.covariance, ModelTag::XxChain).unwrap();
        assert_eq!(p.values[0], 0.0);
        assert_eq!(p.values[20], 0.0);
        for l in 1..20 {
            let single = subsystem_entropy(&gs.covariance, Window::sites(7, l)).unwrap();
            assert!((p.values[l] - single).abs() < 1e-9);
        }
        let mixed = CovarianceMatrix { pure: false, ..gs.covariance.clone() };
        let full = averaged_entropy_profile(&mixed, ModelTag::XxChain).unwrap();
        for l in 0..=20 {
            assert!((full.values[l] - full.values[20 - l]).abs() < 1e-8);
        }
    }

    #[test]
    fn correlation_examples() {
        let mut m = DMatrix::zeros(8, 8);
        for k in 0..4 {
            m[(2 * k, 2 * k + 1)] = 1.0;
        }
        let gs = ground_covariance(&AntisymmetricCoupling::new(m, BoundaryTag::Custom).unwrap()).unwrap();
        let c = correlation_decay(&gs.covariance);
        assert_eq!(c.values[0], 0.0);
        assert!((c.values[1] - 0.5).abs() < 1e-15);
        assert!(c.values[2..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn uniform_correlations_decay_as_inverse_distance() {
        let l = 512;
        let gs = xx_ground_state(&bonds(&vec![1.0; l])).unwrap().state;
        let c = correlation_decay(&gs.covariance);
        // Bipartite: only odd Majorana distances carry weight.
        let pts: Vec<(f64, f64)> =
            (4..=l / 4).filter(|d| d % 2 == 1).map(|d| ((d as f64).ln(), c.values[d].ln())).collect();
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 1.0).abs() < 0.05, "slope {slope}");
    }
}
