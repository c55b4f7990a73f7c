//! Closed-form characteristic polynomial of `A - Λ` for equal-well chains.
//!
//! The banded matrix is peeled from its lower right corner. A run of `m`
//! Toeplitz rows `(-1, λ, -1)` stacked on a block `X` has determinant
//! `S_m(λ)·det X - S_{m-1}(λ)·det X'` with `S_m` the Chebyshev polynomial of
//! the second kind (`X'` is `X` without its first row and column). Carrying the
//! pair `(det B_k, det B'_k)` across one barrier plus one well is then a fixed
//! 2×2 linear map, so the whole determinant is a matrix power applied to the
//! first-well seed.
//!
//! `S_m` is always produced by its three-term recurrence. The trigonometric
//! form `sin((m+1)ψ)/sin ψ` with `λ = 2cos ψ` is never evaluated here.

use crate::chain::{ChainSpec, ParametrizedForm};
use crate::error::{Error, Result};

/// `S_m(λ)` for `m = 0..=max_order`, with negative orders by reflection
/// (`S_{-1} = 0`, `S_{-k} = -S_{k-2}`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChebKernel {
    lambda: f64,
    values: Vec<f64>,
}

impl ChebKernel {
    pub fn new(lambda: f64, max_order: usize) -> Self {
        let mut values = Vec::with_capacity(max_order + 1);
        let (mut prev, mut cur) = (0.0, 1.0);
        values.push(cur);
        for _ in 0..max_order {
            let next = lambda * cur - prev;
            prev = cur;
            cur = next;
            values.push(cur);
        }
        Self { lambda, values }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    /// `S_m(λ)`; panics if `m` exceeds the precomputed order.
    pub fn get(&self, m: i64) -> f64 {
        match m {
            m if m >= 0 => self.values[m as usize],
            -1 => 0.0,
            m => -self.values[(-m - 2) as usize],
        }
    }
}

/// `S_m(λ)` for a single order.
pub fn chebyshev_s(lambda: f64, m: i64) -> f64 {
    let order = if m >= 0 { m } else { (-m - 2).max(0) };
    ChebKernel::new(lambda, order as usize).get(m)
}

fn bordered_det(kernel: &ChebKernel, m: i64, det_x: f64, det_x_prime: f64) -> f64 {
    kernel.get(m) * det_x - kernel.get(m - 1) * det_x_prime
}

/// Determinant of `m` Toeplitz rows `(-1, λ, -1)` bordering a block `X` whose
/// determinant is `det_x` and whose first-row/column minor is `det_x_prime`.
pub fn det_y(lambda: f64, m: usize, det_x: f64, det_x_prime: f64) -> f64 {
    bordered_det(&ChebKernel::new(lambda, m), m as i64, det_x, det_x_prime)
}

/// Entries of the per-well propagation matrix `[[γ, δ], [γ', δ']]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionCoefficients {
    pub gamma: f64,
    pub delta: f64,
    pub gamma_prime: f64,
    pub delta_prime: f64,
}

impl RecursionCoefficients {
    pub fn new(form: &ParametrizedForm, kernel: &ChebKernel) -> Self {
        let n = form.well_size as i64;
        let a = kernel.lambda() + form.d2;
        let q = a * a - form.coupling_ratio * form.coupling_ratio;
        let s = |m: i64| kernel.get(m);
        Self {
            gamma: q * s(n - 2) - a * s(n - 3),
            delta: s(n - 3) - a * s(n - 2),
            gamma_prime: q * s(n - 3) - a * s(n - 4),
            delta_prime: s(n - 4) - a * s(n - 3),
        }
    }

    pub fn matrix(&self) -> Mat2 {
        Mat2([
            [self.gamma, self.delta],
            [self.gamma_prime, self.delta_prime],
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let (a, b) = (self.0, rhs.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    /// `self^p` by repeated multiplication.
    pub fn pow(&self, p: usize) -> Mat2 {
        (0..p).fold(Mat2::IDENTITY, |acc, _| acc.mul(self))
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }
}

/// `(det B_k, det B'_k)` after `k` wells have been absorbed from the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrixState {
    pub det_b: f64,
    pub det_b_prime: f64,
    pub k: usize,
}

impl TransferMatrixState {
    /// `B₀ = [[λ, -1], [-1, λ + d₁]]`, `B'₀ = [λ + d₁]`.
    pub fn seed(form: &ParametrizedForm, lambda: f64) -> Self {
        let edge = lambda + form.d1;
        Self {
            det_b: lambda * edge - 1.0,
            det_b_prime: edge,
            k: 0,
        }
    }

    /// The last well without its barrier-adjacent top site (`N/N_w - 1` rows),
    /// obtained from `B₀` by one bordering.
    pub fn first_well(form: &ParametrizedForm, kernel: &ChebKernel) -> Self {
        let seed = Self::seed(form, kernel.lambda());
        let m = form.well_size as i64 - 3;
        Self {
            det_b: bordered_det(kernel, m, seed.det_b, seed.det_b_prime),
            det_b_prime: bordered_det(kernel, m - 1, seed.det_b, seed.det_b_prime),
            k: 1,
        }
    }

    pub fn propagate(&self, transfer: &Mat2, wells: usize) -> Self {
        let [det_b, det_b_prime] = transfer.pow(wells).apply([self.det_b, self.det_b_prime]);
        Self {
            det_b,
            det_b_prime,
            k: self.k + wells,
        }
    }
}

/// `det((A - Λ)/J₀)` at reduced variable `lambda` for a prepared form.
pub fn char_poly_unscaled(form: &ParametrizedForm, lambda: f64) -> f64 {
    let kernel = ChebKernel::new(lambda, form.well_size);
    let first = TransferMatrixState::first_well(form, &kernel);
    let transfer = RecursionCoefficients::new(form, &kernel).matrix();
    let last = first.propagate(&transfer, form.n_wells - 1);
    (lambda + form.d1) * last.det_b - last.det_b_prime
}

/// `det(A - Λ(λ))` in units of `J₀^N`.
pub fn char_poly_eval(spec: &ChainSpec, lambda: f64) -> Result<f64> {
    let form = ParametrizedForm::new(spec)?;
    Ok(char_poly_unscaled(&form, lambda) * spec.j0().powi(spec.n_sites() as i32))
}

/// Number of roots `λᵢ > x`, from the signs of the trailing principal minors of
/// the banded matrix at `x`, accumulated bottom-up as pivot ratios so nothing
/// overflows.
pub fn roots_above(form: &ParametrizedForm, x: f64) -> usize {
    let op = form.operator(x);
    let n = op.dim();
    let pivmin = f64::MIN_POSITIVE;
    let mut count = 0;
    let mut ratio = 1.0;
    for i in (0..n).rev() {
        let coupling2 = if i + 1 < n {
            op.offdiag[i].powi(2)
        } else {
            0.0
        };
        ratio = op.diag[i] - if i + 1 < n { coupling2 / ratio } else { 0.0 };
        if ratio.abs() < pivmin {
            ratio = -pivmin;
        }
        if ratio < 0.0 {
            count += 1;
        }
    }
    count
}

/// Spectrum recovered from the roots of the closed-form polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSpectrum {
    /// Roots in the reduced variable, ascending.
    pub lambda_roots: Vec<f64>,
    /// Enclosing interval of each root.
    pub brackets: Vec<(f64, f64)>,
    /// Whether the bracket was closed on a sign change of the polynomial
    /// (`false` for roots inside an unresolvable cluster).
    pub sign_change: Vec<bool>,
    /// `Λᵢ`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `Ωᵢ = E₀ - Λᵢ`, aligned with `eigenvalues`.
    pub omegas: Vec<f64>,
}

const ROOT_BRACKET: f64 = 1e-12;

struct RootFinder<'a> {
    form: &'a ParametrizedForm,
    roots: Vec<(f64, (f64, f64), bool)>,
}

impl RootFinder<'_> {
    fn count(&self, x: f64) -> usize {
        roots_above(self.form, x)
    }

    fn cluster_width(a: f64, b: f64) -> f64 {
        8.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0)
    }

    /// Splits `(a, b]`, which holds `k` roots, until each root is alone.
    fn isolate(&mut self, a: f64, b: f64, k: usize, count_a: usize) {
        if k == 0 {
            return;
        }
        if k == 1 {
            self.refine(a, b);
            return;
        }
        let mid = 0.5 * (a + b);
        if b - a <= Self::cluster_width(a, b) || mid <= a || mid >= b {
            for _ in 0..k {
                self.roots.push((mid, (a, b), false));
            }
            return;
        }
        let count_mid = self.count(mid);
        let left = count_a.saturating_sub(count_mid).min(k);
        self.isolate(a, mid, left, count_a);
        self.isolate(mid, b, k - left, count_mid);
    }

    fn refine(&mut self, mut a: f64, mut b: f64) {
        let p = |x| char_poly_unscaled(self.form, x);
        let (mut pa, pb) = (p(a), p(b));
        let usable = pa.is_finite() && pb.is_finite() && pa != 0.0 && pb != 0.0;
        if usable && pa.signum() != pb.signum() {
            while b - a > ROOT_BRACKET * a.abs().max(b.abs()).max(1.0) {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                let pm = p(mid);
                if pm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if pm.signum() == pa.signum() {
                    a = mid;
                    pa = pm;
                } else {
                    b = mid;
                }
            }
            self.roots.push((0.5 * (a + b), (a, b), true));
            return;
        }
        // sign of the closed form is unreliable here; fall back to the count
        let mut count_a = self.count(a);
        while b - a > Self::cluster_width(a, b) {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let c = self.count(mid);
            if c < count_a {
                b = mid;
            } else {
                a = mid;
                count_a = c;
            }
        }
        self.roots.push((0.5 * (a + b), (a, b), false));
    }
}

/// All `N` eigenvalues from the roots of the closed-form polynomial.
///
/// A uniform grid of `20·N` cells spanning the Gershgorin enclosure locates
/// the roots by Sturm counts; isolated roots are then bisected on the sign of
/// the polynomial itself.
pub fn find_roots(spec: &ChainSpec) -> Result<RootSpectrum> {
    let form = ParametrizedForm::new(spec)?;
    let n = spec.n_sites();
    let (g_lo, g_hi) = form.operator(0.0).gershgorin();
    let lo = -g_hi - 1.0;
    let hi = -g_lo + 1.0;
    let cells = 20 * n;
    let grid: Vec<f64> = (0..=cells)
        .map(|i| lo + (hi - lo) * i as f64 / cells as f64)
        .collect();

    let mut finder = RootFinder {
        form: &form,
        roots: Vec::with_capacity(n),
    };
    let counts: Vec<usize> = grid.iter().map(|&x| finder.count(x)).collect();
    let total = counts[0] - counts[cells];
    if total != n {
        return Err(Error::RootCountMismatch {
            found: total,
            expected: n,
        });
    }
    for i in 0..cells {
        let k = counts[i] - counts[i + 1];
        finder.isolate(grid[i], grid[i + 1], k, counts[i]);
    }
    let mut roots = finder.roots;
    if roots.len() != n {
        return Err(Error::RootCountMismatch {
            found: roots.len(),
            expected: n,
        });
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));

    let lambda_roots: Vec<f64> = roots.iter().map(|r| r.0).collect();
    let mut eigenvalues: Vec<f64> = lambda_roots
        .iter()
        .map(|&l| form.eigenvalue_from_lambda(l))
        .collect();
    eigenvalues.reverse();
    Ok(RootSpectrum {
        omegas: eigenvalues.iter().map(|l| spec.e0() - l).collect(),
        eigenvalues,
        brackets: roots.iter().map(|r| r.1).collect(),
        sign_change: roots.iter().map(|r| r.2).collect(),
        lambda_roots,
    })
}
