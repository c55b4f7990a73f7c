//! Chain configurations and the single-excitation operator `A`.
//!
//! Sites are numbered `1..=N` from the left edge and basis state `k` has the
//! flipped spin on site `k`. Bond `i` couples sites `i` and `i + 1`.
//!
//! Two builders are provided. [`build_direct`] restricts `A` to the
//! one-flip sector term by term and is the reference for everything else.
//! [`build_parametrized`] produces the banded `A - Λ` pattern in the reduced
//! variable `λ`, which is what the transfer recursion in [`crate::charpoly`]
//! works with.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Bonds carrying the reduced coupling `J₁`. Indices are 1-based bond labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BarrierLayout {
    bonds: Vec<usize>,
}

impl BarrierLayout {
    pub fn homogeneous() -> Self {
        Self::default()
    }

    /// Builds a layout from explicit bond labels. Duplicates and bond `0` are
    /// rejected; the upper bound is checked against the chain in [`ChainSpec::new`].
    pub fn new<I: IntoIterator<Item = usize>>(bonds: I) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for b in bonds {
            if b == 0 {
                return Err(Error::InvalidLayout("bond labels start at 1".into()));
            }
            if !seen.insert(b) {
                return Err(Error::InvalidLayout(format!("duplicate bond {b}")));
            }
        }
        Ok(Self {
            bonds: seen.into_iter().collect(),
        })
    }

    /// Barriers at bonds `k·N/N_w` for `k = 1..N_w`.
    pub fn equal_wells(n_sites: usize, n_wells: usize) -> Result<Self> {
        if n_wells == 0 {
            return Err(Error::InvalidLayout(
                "number of wells must be positive".into(),
            ));
        }
        if !n_sites.is_multiple_of(n_wells) {
            return Err(Error::NotEqualWells(format!(
                "{n_sites} sites do not split into {n_wells} equal wells"
            )));
        }
        let size = n_sites / n_wells;
        Self::new((1..n_wells).map(|k| k * size))
    }

    pub fn bonds(&self) -> &[usize] {
        &self.bonds
    }

    pub fn n_barriers(&self) -> usize {
        self.bonds.len()
    }

    /// Every barrier splits one well in two, so adjacent barriers leave a
    /// single-site well between them.
    pub fn n_wells(&self) -> usize {
        self.bonds.len() + 1
    }

    pub fn is_barrier(&self, bond: usize) -> bool {
        self.bonds.binary_search(&bond).is_ok()
    }

    pub fn well_sizes(&self, n_sites: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.n_wells());
        let mut start = 0;
        for &b in &self.bonds {
            sizes.push(b - start);
            start = b;
        }
        sizes.push(n_sites - start);
        sizes
    }

    /// `Some(N_w)` when the barriers sit exactly at `k·N/N_w`.
    pub fn equal_well_count(&self, n_sites: usize) -> Option<usize> {
        let n_wells = self.n_wells();
        match Self::equal_wells(n_sites, n_wells) {
            Ok(expected) if expected == *self => Some(n_wells),
            _ => None,
        }
    }

    /// Invariant under site reversal (bond `i` maps to bond `N - i`).
    pub fn is_symmetric(&self, n_sites: usize) -> bool {
        self.bonds.iter().all(|&b| self.is_barrier(n_sites - b))
    }

    pub fn mirrored(&self, n_sites: usize) -> Self {
        Self::new(self.bonds.iter().map(|&b| n_sites - b)).expect("mirror of a valid layout")
    }
}

impl fmt::Display for BarrierLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bonds.is_empty() {
            return f.write_str("none");
        }
        let labels: Vec<String> = self.bonds.iter().map(|b| b.to_string()).collect();
        f.write_str(&labels.join(";"))
    }
}

/// A single-flip chain: `N` spins, anisotropy `Δ`, bulk coupling `J₀`,
/// barrier strength `β` (so `J₁ = J₀/(1+β)`) and energy offset `E₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    n_sites: usize,
    delta: f64,
    j0: f64,
    beta: f64,
    layout: BarrierLayout,
    e0: f64,
}

impl ChainSpec {
    /// `J₀ = 1` and `E₀ = 0`.
    pub fn new(n_sites: usize, delta: f64, beta: f64, layout: BarrierLayout) -> Result<Self> {
        Self::with_units(n_sites, delta, 1.0, beta, layout, 0.0)
    }

    pub fn homogeneous(n_sites: usize, delta: f64) -> Result<Self> {
        Self::new(n_sites, delta, 0.0, BarrierLayout::homogeneous())
    }

    pub fn equal_wells(n_sites: usize, n_wells: usize, delta: f64, beta: f64) -> Result<Self> {
        Self::new(
            n_sites,
            delta,
            beta,
            BarrierLayout::equal_wells(n_sites, n_wells)?,
        )
    }

    pub fn with_units(
        n_sites: usize,
        delta: f64,
        j0: f64,
        beta: f64,
        layout: BarrierLayout,
        e0: f64,
    ) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 sites, got {n_sites}"
            )));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "anisotropy must be finite and >= 0, got {delta}"
            )));
        }
        if !(j0.is_finite() && j0 > 0.0) {
            return Err(Error::InvalidSpec(format!("J0 must be positive, got {j0}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "beta must be finite and >= 0, got {beta}"
            )));
        }
        if !e0.is_finite() {
            return Err(Error::InvalidSpec(format!("E0 must be finite, got {e0}")));
        }
        if let Some(&last) = layout.bonds().last() {
            if last >= n_sites {
                return Err(Error::InvalidLayout(format!(
                    "bond {last} out of range 1..={}",
                    n_sites - 1
                )));
            }
        }
        Ok(Self {
            n_sites,
            delta,
            j0,
            beta,
            layout,
            e0,
        })
    }

    /// Alternative parametrization by the barrier coupling itself.
    pub fn with_barrier_coupling(
        n_sites: usize,
        delta: f64,
        j0: f64,
        j1: f64,
        layout: BarrierLayout,
    ) -> Result<Self> {
        if !(j1 > 0.0 && j1 <= j0) {
            return Err(Error::InvalidSpec(format!(
                "need 0 < J1 <= J0, got J1 = {j1}, J0 = {j0}"
            )));
        }
        Self::with_units(n_sites, delta, j0, j0 / j1 - 1.0, layout, 0.0)
    }

    pub fn with_e0(mut self, e0: f64) -> Result<Self> {
        if !e0.is_finite() {
            return Err(Error::InvalidSpec(format!("E0 must be finite, got {e0}")));
        }
        self.e0 = e0;
        Ok(self)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::with_units(
            self.n_sites,
            self.delta,
            self.j0,
            beta,
            self.layout.clone(),
            self.e0,
        )
    }

    pub fn with_layout(&self, layout: BarrierLayout) -> Result<Self> {
        Self::with_units(
            self.n_sites,
            self.delta,
            self.j0,
            self.beta,
            layout,
            self.e0,
        )
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn j0(&self) -> f64 {
        self.j0
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn e0(&self) -> f64 {
        self.e0
    }
    pub fn layout(&self) -> &BarrierLayout {
        &self.layout
    }

    pub fn j1(&self) -> f64 {
        self.j0 / (1.0 + self.beta)
    }

    /// `J₁/J₀ = 1/(1+β)`.
    pub fn coupling_ratio(&self) -> f64 {
        1.0 / (1.0 + self.beta)
    }

    /// `1/(1+1/β)` written so that `β = 0` is exact.
    pub fn barrier_fraction(&self) -> f64 {
        self.beta / (1.0 + self.beta)
    }

    /// Exchange coefficient of every bond, `J_1 … J_{N-1}`.
    pub fn bond_couplings(&self) -> Vec<f64> {
        (1..self.n_sites)
            .map(|b| {
                if self.layout.is_barrier(b) {
                    self.j1()
                } else {
                    self.j0
                }
            })
            .collect()
    }

    pub fn equal_well_count(&self) -> Option<usize> {
        self.layout.equal_well_count(self.n_sites)
    }

    /// The reversed chain: same couplings read right to left.
    pub fn mirrored(&self) -> Self {
        Self {
            layout: self.layout.mirrored(self.n_sites),
            ..self.clone()
        }
    }

    /// Parses the flat key-value chain document (`n_sites`, `delta`, `beta`,
    /// `j0`, `e0`, and either `barriers = [..]` or `equal_wells = k`).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: ChainDoc = toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        doc.into_spec()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainDoc {
    n_sites: usize,
    delta: f64,
    #[serde(default)]
    beta: f64,
    #[serde(default = "one")]
    j0: f64,
    #[serde(default)]
    e0: f64,
    barriers: Option<Vec<usize>>,
    equal_wells: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl ChainDoc {
    fn into_spec(self) -> Result<ChainSpec> {
        let layout = match (self.barriers, self.equal_wells) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidLayout(
                    "give either `barriers` or `equal_wells`, not both".into(),
                ))
            }
            (Some(b), None) => BarrierLayout::new(b)?,
            (None, Some(k)) => BarrierLayout::equal_wells(self.n_sites, k)?,
            (None, None) => BarrierLayout::homogeneous(),
        };
        ChainSpec::with_units(
            self.n_sites,
            self.delta,
            self.j0,
            self.beta,
            layout,
            self.e0,
        )
    }
}

/// Symmetric tridiagonal matrix `scale · T` with `T` stored as its diagonal and
/// one off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    pub scale: f64,
}

impl TridiagonalOperator {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>, scale: f64) -> Self {
        assert!(!diag.is_empty(), "empty operator");
        assert_eq!(offdiag.len() + 1, diag.len(), "off-diagonal length");
        Self {
            diag,
            offdiag,
            scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Row-major dense form including the scale.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.scale * self.diag[i];
        }
        for (i, &e) in self.offdiag.iter().enumerate() {
            m[i][i + 1] = self.scale * e;
            m[i + 1][i] = self.scale * e;
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.scale * self.diag.iter().sum::<f64>()
    }

    /// Gershgorin enclosure of the spectrum of the unscaled `T`.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.offdiag[i - 1].abs();
            }
            if i + 1 < n {
                r += self.offdiag[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Max absolute row sum of `scale · T`.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut r = self.diag[i].abs();
                if i > 0 {
                    r += self.offdiag[i - 1].abs();
                }
                if i + 1 < n {
                    r += self.offdiag[i].abs();
                }
                r
            })
            .fold(0.0, f64::max)
            * self.scale.abs()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.offdiag[i] * x[i + 1];
                }
                self.scale * y
            })
            .collect()
    }

    /// Determinant of the unscaled `T` by the continuant recurrence.
    pub fn unscaled_determinant(&self) -> f64 {
        let mut prev = 1.0;
        let mut cur = self.diag[0];
        for i in 1..self.dim() {
            let next = self.diag[i] * cur - self.offdiag[i - 1].powi(2) * prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    pub fn is_palindromic(&self) -> bool {
        self.diag.iter().eq(self.diag.iter().rev())
            && self.offdiag.iter().eq(self.offdiag.iter().rev())
    }
}

/// `A` restricted to the single-flip basis, in units of `J₀`.
///
/// A bond contributes `J_i` to the diagonal when it touches the flipped site
/// and `2ΔJ_i` when both of its spins are up; the hopping amplitude between
/// sites `k` and `k+1` is `-J_k`.
pub fn build_direct(spec: &ChainSpec) -> TridiagonalOperator {
    let couplings: Vec<f64> = spec
        .bond_couplings()
        .into_iter()
        .map(|j| j / spec.j0())
        .collect();
    let total: f64 = couplings.iter().sum();
    let n = spec.n_sites();
    let diag = (0..n)
        .map(|k| {
            let mut touching = 0.0;
            if k > 0 {
                touching += couplings[k - 1];
            }
            if k + 1 < n {
                touching += couplings[k];
            }
            touching + 2.0 * spec.delta() * (total - touching)
        })
        .collect();
    let offdiag = couplings.iter().map(|j| -j).collect();
    TridiagonalOperator::new(diag, offdiag, spec.j0())
}

/// Which count enters the constant term of the `λ ↔ Λ` map: the number of wells
/// as printed, or the number of barriers (`N_w - 1`) as the term-by-term
/// restriction of `A` gives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WellCountConvention {
    Wells,
    Barriers,
}

impl WellCountConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Wells => "wells",
            Self::Barriers => "barriers",
        }
    }

    fn count(self, n_wells: usize) -> f64 {
        match self {
            Self::Wells => n_wells as f64,
            Self::Barriers => (n_wells - 1) as f64,
        }
    }
}

impl fmt::Display for WellCountConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

static CONVENTION: OnceLock<WellCountConvention> = OnceLock::new();

/// The convention under which the parametrized builder reproduces
/// [`build_direct`]. Decided once per process on the reference chain
/// `N = 6, N_w = 2, Δ = 3, β = 1`.
pub fn resolved_convention() -> WellCountConvention {
    *CONVENTION.get_or_init(|| {
        let spec = ChainSpec::equal_wells(6, 2, 3.0, 1.0).expect("reference chain");
        let direct = crate::spectral::eigenvalues(&build_direct(&spec))
            .expect("reference spectrum");
        let residual = |conv| {
            let form = ParametrizedForm::with_convention(&spec, conv).expect("reference form");
            direct
                .iter()
                .map(|&big| {
                    let op = form.operator(form.lambda_from_eigenvalue(big));
                    let scale: f64 = op.diag.iter().map(|d| d.abs() + 2.0).product();
                    op.unscaled_determinant().abs() / scale
                })
                .fold(0.0, f64::max)
        };
        let wells = residual(WellCountConvention::Wells);
        let barriers = residual(WellCountConvention::Barriers);
        let chosen = if barriers <= wells {
            WellCountConvention::Barriers
        } else {
            WellCountConvention::Wells
        };
        log::debug!("well-count convention: wells residual {wells:e}, barriers residual {barriers:e}, using {chosen}");
        if wells.min(barriers) > 1e-10 {
            log::error!("neither well-count convention reproduces the direct spectrum");
        }
        chosen
    })
}

/// The banded form of `A - Λ` for an equal-well chain, parametrized by the
/// reduced variable `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametrizedForm {
    pub n_sites: usize,
    pub n_wells: usize,
    pub well_size: usize,
    /// Edge correction `2Δ - 1`.
    pub d1: f64,
    /// Barrier-adjacent correction `d₁/(1+1/β)`.
    pub d2: f64,
    /// `J₁/J₀`, the magnitude of the off-diagonal across a barrier.
    pub coupling_ratio: f64,
    /// Constant in `λ = -Λ/J₀ + shift`.
    pub shift: f64,
    pub j0: f64,
    pub convention: WellCountConvention,
}

impl ParametrizedForm {
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        Self::with_convention(spec, resolved_convention())
    }

    pub fn with_convention(spec: &ChainSpec, convention: WellCountConvention) -> Result<Self> {
        let n_sites = spec.n_sites();
        let n_wells = spec.equal_well_count().ok_or_else(|| {
            Error::NotEqualWells(format!(
                "barriers at [{}] in a chain of {n_sites}",
                spec.layout()
            ))
        })?;
        let well_size = n_sites / n_wells;
        if well_size < 2 {
            return Err(Error::NotEqualWells(format!(
                "wells of a single site ({n_sites} sites, {n_wells} wells)"
            )));
        }
        let delta = spec.delta();
        let d1 = 2.0 * delta - 1.0;
        let frac = spec.barrier_fraction();
        let shift = 2.0 + 2.0 * delta * (n_sites as f64 - convention.count(n_wells) * frac - 3.0);
        Ok(Self {
            n_sites,
            n_wells,
            well_size,
            d1,
            d2: d1 * frac,
            coupling_ratio: spec.coupling_ratio(),
            shift,
            j0: spec.j0(),
            convention,
        })
    }

    pub fn lambda_from_eigenvalue(&self, big_lambda: f64) -> f64 {
        -big_lambda / self.j0 + self.shift
    }

    pub fn eigenvalue_from_lambda(&self, lambda: f64) -> f64 {
        self.j0 * (self.shift - lambda)
    }

    /// Offsets added to `λ` on the diagonal: `d₁` at the chain ends, `d₂` on
    /// both sides of each barrier, zero in the bulk.
    pub fn diagonal_offsets(&self) -> Vec<f64> {
        let n = self.n_sites;
        let mut offsets = vec![0.0; n];
        offsets[0] = self.d1;
        offsets[n - 1] = self.d1;
        for k in 1..self.n_wells {
            let bond = k * self.well_size;
            offsets[bond - 1] += self.d2;
            offsets[bond] += self.d2;
        }
        offsets
    }

    pub fn offdiagonal(&self) -> Vec<f64> {
        (1..self.n_sites)
            .map(|b| {
                if b % self.well_size == 0 {
                    -self.coupling_ratio
                } else {
                    -1.0
                }
            })
            .collect()
    }

    /// `(A - Λ(λ))/J₀` with `scale = J₀`.
    pub fn operator(&self, lambda: f64) -> TridiagonalOperator {
        let diag = self
            .diagonal_offsets()
            .into_iter()
            .map(|d| lambda + d)
            .collect();
        TridiagonalOperator::new(diag, self.offdiagonal(), self.j0)
    }
}

/// The parametrized `A - Λ` matrix at reduced variable `lambda`.
pub fn build_parametrized(spec: &ChainSpec, lambda: f64) -> Result<TridiagonalOperator> {
    Ok(ParametrizedForm::new(spec)?.operator(lambda))
}
