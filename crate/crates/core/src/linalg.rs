//! Dense complex linear algebra: state vectors, Gram matrices, unitary
//! synthesis from matching Gram matrices, and bipartite diagnostics
//! (Schmidt decomposition, entropy of entanglement, partial transpose).

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Allowed deviation of a state norm from 1.
pub const NORM_TOL: f64 = 1e-12;
/// Allowed deviation from Hermiticity and unit diagonal for Gram matrices.
pub const GRAM_TOL: f64 = 1e-12;
/// Most negative eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues at or below this are clamped to zero when factoring.
pub const CLAMP_TOL: f64 = 1e-12;
/// Relative threshold below which singular values count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Maximum Gram deviation accepted by [`synthesize_unitary`].
pub const GRAM_MATCH_TOL: f64 = 1e-8;
/// Required unitarity of synthesized operators.
pub const UNITARY_TOL: f64 = 1e-10;
/// Schmidt coefficients at or below this do not contribute to the entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-12;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn max_abs_vec(v: &CVector) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermitian_error(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
/// Only the Hermitian part of `m` is used.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = hermitize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

pub(crate) fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let nb = b.len();
    CVector::from_fn(a.len() * nb, |i, _| a[i / nb] * b[i % nb])
}

/// A normalized vector in a finite-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    /// Builds a state from amplitudes that must already have unit norm.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        Self::from_vector(CVector::from_vec(amplitudes))
    }

    pub fn from_vector(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Explicitly normalizing constructor. Fails only on a zero vector.
    pub fn normalize(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| c(x, 0.0)).collect())
    }

    /// Computational basis state `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[k] = c(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_vector(self) -> CVector {
        self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        Self {
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
        }
    }

    /// `|self⟩⟨self|`.
    pub fn projector(&self) -> Operator {
        Operator(&self.amplitudes * self.amplitudes.adjoint())
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Dense complex matrix. Unitarity or Hermiticity is asserted by the
/// operations that need it, not by the type.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(CMatrix);

impl Operator {
    pub fn new(matrix: CMatrix) -> Self {
        Self(matrix)
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        Operator(self.0.kronecker(&other.0))
    }

    pub fn apply(&self, psi: &StateVector) -> Result<CVector> {
        check_dim(self.cols(), psi.dim())?;
        Ok(&self.0 * psi.amplitudes())
    }

    /// `max |Λ†Λ − I|`.
    pub fn unitarity_error(&self) -> f64 {
        if !self.0.is_square() {
            return f64::INFINITY;
        }
        let n = self.cols();
        max_abs(&(self.0.adjoint() * &self.0 - CMatrix::identity(n, n)))
    }

    /// `max |V†V − I|`; defined for any shape with `rows ≥ cols`.
    pub fn isometry_error(&self) -> f64 {
        if self.rows() < self.cols() {
            return f64::INFINITY;
        }
        let n = self.cols();
        max_abs(&(self.0.adjoint() * &self.0 - CMatrix::identity(n, n)))
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermitian_error(&self.0)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Sorted eigenvalues of the Hermitian part.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0)
    }

    /// `Re Tr(self · rho)`.
    pub fn expectation(&self, rho: &Operator) -> Result<f64> {
        check_dim(self.cols(), rho.rows())?;
        check_dim(self.rows(), rho.cols())?;
        let n = self.rows();
        let mut acc = c(0.0, 0.0);
        for i in 0..n {
            for k in 0..self.cols() {
                acc += self.0[(i, k)] * rho.0[(k, i)];
            }
        }
        Ok(acc.re)
    }
}

/// Checks that `rho` is a density operator on a space of dimension `dim`.
pub fn validate_density(rho: &Operator, dim: usize) -> Result<()> {
    if rho.rows() != dim || rho.cols() != dim {
        return Err(Error::InvalidDensity(format!(
            "expected {dim}x{dim}, found {}x{}",
            rho.rows(),
            rho.cols()
        )));
    }
    let herm = rho.hermiticity_error();
    if herm > PSD_TOL {
        return Err(Error::InvalidDensity(format!(
            "not Hermitian (deviation {herm:e})"
        )));
    }
    let tr = rho.trace();
    if (tr - c(1.0, 0.0)).norm() > PSD_TOL {
        return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
    }
    let min = rho.hermitian_eigenvalues()[0];
    if min < -PSD_TOL {
        return Err(Error::InvalidDensity(format!(
            "negative eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// Hermitian positive semidefinite matrix with unit diagonal: the overlap
/// table of a normalized state family.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: CMatrix,
}

impl GramMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows().max(1),
                found: entries.ncols(),
            });
        }
        let herm = hermitian_error(&entries);
        if herm > GRAM_TOL {
            return Err(Error::NotHermitian(herm));
        }
        for i in 0..entries.nrows() {
            let deviation = (entries[(i, i)] - c(1.0, 0.0)).norm();
            if deviation > GRAM_TOL {
                return Err(Error::NotUnitDiagonal {
                    index: i,
                    deviation,
                });
            }
        }
        let min = hermitian_eigenvalues(&entries)[0];
        if min < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite(min));
        }
        Ok(Self { entries })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: CMatrix::identity(n, n),
        }
    }

    pub fn all_ones(n: usize) -> Self {
        Self {
            entries: CMatrix::from_element(n, n, c(1.0, 0.0)),
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[(i, j)]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Entrywise maximum deviation from another matrix of the same size.
    pub fn max_deviation(&self, other: &GramMatrix) -> f64 {
        if self.n() != other.n() {
            return f64::INFINITY;
        }
        max_abs(&(&self.entries - &other.entries))
    }
}

/// `G_ij = ⟨ψ_i|ψ_j⟩`.
pub fn gram_of(states: &[StateVector]) -> Result<GramMatrix> {
    let first = states.first().ok_or(Error::EmptyFamily)?;
    for s in states {
        check_dim(first.dim(), s.dim())?;
    }
    let n = states.len();
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = states[i].amplitudes().dotc(states[j].amplitudes());
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    GramMatrix::new(g)
}

/// Entrywise (Schur) product of two Gram matrices.
pub fn hadamard(a: &GramMatrix, b: &GramMatrix) -> Result<GramMatrix> {
    check_dim(a.n(), b.n())?;
    GramMatrix::new(a.entries.component_mul(&b.entries))
}

/// Factors `G = C†C` with `C` the principal square root, returning the
/// columns of `C` as a state family whose Gram matrix is `G`.
pub fn factor_gram(gram: &GramMatrix) -> Result<Vec<StateVector>> {
    let (values, vectors) = hermitian_eigen(gram.entries());
    if values[0] < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite(values[0]));
    }
    let roots: Vec<f64> = values
        .iter()
        .map(|&l| if l <= CLAMP_TOL { 0.0 } else { l.sqrt() })
        .collect();
    let n = gram.n();
    let scaled = CMatrix::from_fn(n, n, |r, col| vectors[(r, col)] * roots[col]);
    let root = hermitize(&(scaled * vectors.adjoint()));
    (0..n)
        .map(|j| StateVector::normalize(root.column(j).into_owned()))
        .collect()
}

/// Gram-Schmidt with one re-orthogonalization pass, in the given order.
/// Vectors whose residual falls below `RANK_TOL` are dropped.
fn orthonormalize(vectors: &[&CVector]) -> Vec<CVector> {
    let mut frame: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut r = (*v).clone();
        for _ in 0..2 {
            for q in &frame {
                let proj = q.dotc(&r);
                r.axpy(-proj, q, c(1.0, 0.0));
            }
        }
        let norm = r.norm();
        if norm > RANK_TOL {
            frame.push(r.unscale(norm));
        }
    }
    frame
}

/// Index order chosen by largest-residual pivoting; only indices that add a
/// new direction (residual above `RANK_TOL`) are returned.
fn pivot_order(states: &[StateVector]) -> Vec<usize> {
    let mut residuals: Vec<CVector> = states.iter().map(|s| s.amplitudes().clone()).collect();
    let mut remaining: Vec<usize> = (0..states.len()).collect();
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let (pos, norm) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &i)| (pos, residuals[i].norm()))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if norm <= RANK_TOL {
            break;
        }
        let idx = remaining.remove(pos);
        let q = residuals[idx].unscale(norm);
        for &j in &remaining {
            for _ in 0..2 {
                let proj = q.dotc(&residuals[j]);
                residuals[j].axpy(-proj, &q, c(1.0, 0.0));
            }
        }
        order.push(idx);
    }
    order
}

/// Extends an orthonormal frame to a full basis of `C^dim`, drawing from the
/// standard basis by largest residual (lowest index on ties).
fn complete_basis(mut frame: Vec<CVector>, dim: usize) -> CMatrix {
    let mut residuals: Vec<CVector> = (0..dim)
        .map(|k| {
            let mut r = CVector::zeros(dim);
            r[k] = c(1.0, 0.0);
            for _ in 0..2 {
                for q in &frame {
                    let proj = q.dotc(&r);
                    r.axpy(-proj, q, c(1.0, 0.0));
                }
            }
            r
        })
        .collect();
    let mut used = vec![false; dim];
    while frame.len() < dim {
        let (best, _) = (0..dim)
            .filter(|&k| !used[k])
            .map(|k| (k, residuals[k].norm()))
            .fold((usize::MAX, -1.0), |b, cur| if cur.1 > b.1 { cur } else { b });
        used[best] = true;
        let mut q = residuals[best].clone();
        for f in &frame {
            let proj = f.dotc(&q);
            q.axpy(-proj, f, c(1.0, 0.0));
        }
        let q = q.unscale(q.norm());
        for k in 0..dim {
            if !used[k] {
                let proj = q.dotc(&residuals[k]);
                residuals[k].axpy(-proj, &q, c(1.0, 0.0));
            }
        }
        frame.push(q);
    }
    CMatrix::from_columns(&frame)
}

/// Builds a unitary `Λ` with `Λ from_i = to_i` for every `i`. Such a unitary
/// exists iff both families have the same Gram matrix.
///
/// Both families are orthonormalized in the same pivot order, the resulting
/// frames are mapped onto each other, and the orthogonal complements are
/// completed from the standard basis.
pub fn synthesize_unitary(from: &[StateVector], to: &[StateVector]) -> Result<Operator> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::EmptyFamily);
    }
    check_dim(from.len(), to.len())?;
    let dim = from[0].dim();
    check_dim(dim, to[0].dim())?;
    let g_from = gram_of(from)?;
    let g_to = gram_of(to)?;
    let mismatch = g_from.max_deviation(&g_to);
    if mismatch > GRAM_MATCH_TOL {
        return Err(Error::GramMismatch(mismatch));
    }

    let order = pivot_order(from);
    let pick = |family: &[StateVector]| -> Vec<CVector> {
        let vs: Vec<&CVector> = order.iter().map(|&i| family[i].amplitudes()).collect();
        orthonormalize(&vs)
    };
    let frame_from = pick(from);
    let frame_to = pick(to);
    if frame_from.len() != frame_to.len() {
        return Err(Error::Numerical(format!(
            "rank mismatch between families ({} vs {})",
            frame_from.len(),
            frame_to.len()
        )));
    }
    let basis_from = complete_basis(frame_from, dim);
    let basis_to = complete_basis(frame_to, dim);
    let lambda = Operator(&basis_to * basis_from.adjoint());

    let unitarity = lambda.unitarity_error();
    if unitarity > UNITARY_TOL {
        return Err(Error::Numerical(format!(
            "synthesized operator deviates from unitarity by {unitarity:e}"
        )));
    }
    for (f, t) in from.iter().zip(to) {
        let err = max_abs_vec(&(lambda.matrix() * f.amplitudes() - t.amplitudes()));
        if err > GRAM_MATCH_TOL {
            return Err(Error::Numerical(format!(
                "synthesized operator misses a target state by {err:e}"
            )));
        }
    }
    Ok(lambda)
}

/// Schmidt decomposition of a bipartite pure state across a `dim_a x dim_b` cut.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtData {
    /// Descending, non-negative.
    pub coefficients: Vec<f64>,
    pub left_vectors: Vec<CVector>,
    pub right_vectors: Vec<CVector>,
    pub rank: usize,
    pub cut: (usize, usize),
}

impl SchmidtData {
    pub fn largest(&self) -> f64 {
        self.coefficients[0]
    }

    /// `Σ λ_k |left_k⟩ ⊗ |right_k⟩`.
    pub fn reconstruct(&self) -> CVector {
        let (da, db) = self.cut;
        let mut out = CVector::zeros(da * db);
        for ((&l, a), b) in self
            .coefficients
            .iter()
            .zip(&self.left_vectors)
            .zip(&self.right_vectors)
        {
            out += kron_vec(a, b) * c(l, 0.0);
        }
        out
    }
}

/// Number of values above `RANK_TOL` times the largest.
pub(crate) fn relative_rank(values: &[f64]) -> usize {
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    values.iter().filter(|&&v| v > RANK_TOL * max).count()
}

pub fn schmidt_decompose(psi: &StateVector, dim_a: usize, dim_b: usize) -> Result<SchmidtData> {
    if dim_a == 0 || dim_b == 0 || dim_a * dim_b != psi.dim() {
        return Err(Error::BadCut {
            dim: psi.dim(),
            dim_a,
            dim_b,
        });
    }
    let amps = psi.amplitudes();
    let m = CMatrix::from_fn(dim_a, dim_b, |i, j| amps[i * dim_b + j]);
    let svd = SVD::new(m, true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let coefficients: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let left_vectors = order.iter().map(|&i| u.column(i).into_owned()).collect();
    let right_vectors = order
        .iter()
        .map(|&i| v_t.row(i).transpose().into_owned())
        .collect();
    let rank = relative_rank(&coefficients);
    Ok(SchmidtData {
        coefficients,
        left_vectors,
        right_vectors,
        rank,
        cut: (dim_a, dim_b),
    })
}

/// Entropy of entanglement in ebits.
pub fn entanglement_entropy(sd: &SchmidtData) -> f64 {
    sd.coefficients
        .iter()
        .filter(|&&l| l > ENTROPY_CUTOFF)
        .map(|&l| {
            let p = l * l;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Transpose on the second tensor factor.
pub fn partial_transpose(rho: &Operator, dim_a: usize, dim_b: usize) -> Result<Operator> {
    validate_density(rho, dim_a * dim_b)?;
    Ok(partial_transpose_unchecked(rho.matrix(), dim_a, dim_b))
}

pub(crate) fn partial_transpose_unchecked(rho: &CMatrix, dim_a: usize, dim_b: usize) -> Operator {
    let n = dim_a * dim_b;
    Operator(CMatrix::from_fn(n, n, |row, col| {
        let (ia, ib) = (row / dim_b, row % dim_b);
        let (ja, jb) = (col / dim_b, col % dim_b);
        rho[(ia * dim_b + jb, ja * dim_b + ib)]
    }))
}

/// `(‖ρ^{T_B}‖₁ − 1) / 2`.
pub fn negativity(rho: &Operator, dim_a: usize, dim_b: usize) -> Result<f64> {
    let pt = partial_transpose(rho, dim_a, dim_b)?;
    let trace_norm: f64 = pt.hermitian_eigenvalues().iter().map(|l| l.abs()).sum();
    Ok(((trace_norm - 1.0) / 2.0).max(0.0))
}

/// `|⟨ψ|φ⟩|²`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr().min(1.0))
}
