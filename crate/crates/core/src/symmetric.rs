//! Symmetric SU(K) coherent states `|U;N⟩ = (U|0⟩)^⊗N` in the Dicke
//! (occupation-number) basis, and the splitting isometry
//! `Λ|U;N⟩ = |U;N_X⟩ ⊗ |U;N_Y⟩`.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    c, entanglement_entropy, max_abs, negativity, schmidt_decompose, CMatrix, CVector, Operator,
    StateVector, C64,
};
use crate::random::{haar_unitary, substream};

pub const MAX_PARTICLES: usize = 12;
pub const MAX_LEVELS: usize = 6;
/// Input dimension limit for the mixed-state check.
pub const MAX_MIXED_DIM: usize = 50;

fn check_levels(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need K >= 2 levels, got {k}")));
    }
    if k > MAX_LEVELS {
        return Err(Error::SizeCap(format!("K = {k} exceeds {MAX_LEVELS}")));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `N! / Π n_j!` for `N = Σ n_j`.
pub(crate) fn multinomial(occupation: &[usize]) -> f64 {
    let n: usize = occupation.iter().sum();
    factorial(n) / occupation.iter().map(|&m| factorial(m)).product::<f64>()
}

/// `binom(N+K−1, K−1)`.
pub fn dicke_dim(k: usize, n: usize) -> Result<usize> {
    check_levels(k)?;
    if n > MAX_PARTICLES {
        return Err(Error::SizeCap(format!("N = {n} exceeds {MAX_PARTICLES}")));
    }
    Ok(binomial(n + k - 1, k - 1))
}

/// All compositions of `n` into `k` parts, ordered from `(n,0,…,0)` down to
/// `(0,…,0,n)` lexicographically.
pub fn compositions(k: usize, n: usize) -> Vec<Vec<usize>> {
    fn fill(prefix: &mut Vec<usize>, remaining: usize, parts_left: usize, out: &mut Vec<Vec<usize>>) {
        if parts_left == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            fill(prefix, remaining - first, parts_left - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(&mut Vec::with_capacity(k), n, k, &mut out);
    out
}

/// Occupation-number basis of `Sym^N(C^K)`.
#[derive(Debug, Clone)]
pub struct DickeBasis {
    k: usize,
    n: usize,
    occupations: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl DickeBasis {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        dicke_dim(k, n)?;
        let occupations = compositions(k, n);
        let lookup = occupations
            .iter()
            .enumerate()
            .map(|(i, o)| (o.clone(), i))
            .collect();
        Ok(Self {
            k,
            n,
            occupations,
            lookup,
        })
    }

    pub fn levels(&self) -> usize {
        self.k
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.occupations.len()
    }

    pub fn occupations(&self) -> &[Vec<usize>] {
        &self.occupations
    }

    pub fn index_of(&self, occupation: &[usize]) -> Option<usize> {
        self.lookup.get(occupation).copied()
    }
}

/// A single-particle unitary on `C^K`. Global phase is irrelevant to the
/// coherent states it labels, so any unitary is accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct SuUnitary {
    matrix: CMatrix,
}

pub const SU_UNITARY_TOL: f64 = 1e-12;

impl SuUnitary {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        check_levels(matrix.nrows())?;
        let k = matrix.nrows();
        let err = max_abs(&(matrix.adjoint() * &matrix - CMatrix::identity(k, k)));
        if err > SU_UNITARY_TOL {
            return Err(Error::InvalidParameter(format!(
                "matrix deviates from unitarity by {err:e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::new(CMatrix::identity(k, k))
    }

    pub fn levels(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `U|0⟩`.
    pub fn reference_column(&self) -> CVector {
        self.matrix.column(0).into_owned()
    }
}

/// Haar-random unitary on `C^K` drawn from `rng`.
pub fn haar_random_su<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<SuUnitary> {
    check_levels(k)?;
    SuUnitary::new(haar_unitary(k, rng))
}

/// Deterministic per seed.
pub fn haar_random_su_seeded(k: usize, seed: u64) -> Result<SuUnitary> {
    haar_random_su(k, &mut substream(seed, 0))
}

/// Unit vector on `Sym^N(C^K)` in the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricState {
    k: usize,
    n: usize,
    state: StateVector,
}

impl SymmetricState {
    pub fn new(k: usize, n: usize, state: StateVector) -> Result<Self> {
        let dim = dicke_dim(k, n)?;
        if state.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: state.dim(),
            });
        }
        Ok(Self { k, n, state })
    }

    pub fn levels(&self) -> usize {
        self.k
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn basis(&self) -> DickeBasis {
        DickeBasis::new(self.k, self.n).expect("validated on construction")
    }

    /// Normalized `Σ w_i |s_i⟩`.
    pub fn superposition(terms: &[(C64, &SymmetricState)]) -> Result<SymmetricState> {
        let (_, first) = terms.first().ok_or(Error::EmptyFamily)?;
        let (k, n) = (first.k, first.n);
        let mut v = CVector::zeros(first.state.dim());
        for (w, s) in terms {
            if s.k != k || s.n != n {
                return Err(Error::InvalidParameter(
                    "superposed states must share K and N".into(),
                ));
            }
            v += s.state.amplitudes() * *w;
        }
        Self::new(k, n, StateVector::normalize(v)?)
    }
}

/// `(U|0⟩)^⊗N`: amplitude `√(N!/Π n_j!) Π u_j^{n_j}` on occupation `n`.
pub fn coherent_state(u: &SuUnitary, n: usize) -> Result<SymmetricState> {
    let basis = DickeBasis::new(u.levels(), n)?;
    let col = u.reference_column();
    let amps = basis
        .occupations()
        .iter()
        .map(|occ| {
            let prod = occ
                .iter()
                .zip(col.iter())
                .fold(c(1.0, 0.0), |acc, (&m, z)| acc * z.powu(m as u32));
            prod * multinomial(occ).sqrt()
        })
        .collect();
    SymmetricState::new(u.levels(), n, StateVector::normalize(CVector::from_vec(amps))?)
}

/// `⟨U;N|V;N⟩ = ⟨0|U†V|0⟩^N`.
pub fn overlap(u: &SuUnitary, v: &SuUnitary, n: usize) -> Result<C64> {
    if u.levels() != v.levels() {
        return Err(Error::DimensionMismatch {
            expected: u.levels(),
            found: v.levels(),
        });
    }
    let single = u.reference_column().dotc(&v.reference_column());
    Ok(single.powu(n as u32))
}

/// Inner product computed in the Dicke basis.
pub fn dicke_inner(a: &SymmetricState, b: &SymmetricState) -> Result<C64> {
    if a.k != b.k || a.n != b.n {
        return Err(Error::InvalidParameter(
            "states live on different symmetric subspaces".into(),
        ));
    }
    a.state.inner(&b.state)
}

fn check_split(n: usize, n_x: usize, n_y: usize) -> Result<()> {
    if n_x == 0 || n_y == 0 || n_x + n_y != n {
        return Err(Error::InvalidParameter(format!(
            "invalid split ({n_x}, {n_y}) of N = {n}"
        )));
    }
    Ok(())
}

/// Inclusion `Sym^N(C^K) → Sym^{N_X}(C^K) ⊗ Sym^{N_Y}(C^K)`. Occupation `n`
/// maps to `Σ_{n_X + n_Y = n} √(M(n_X) M(n_Y) / M(n)) |n_X⟩|n_Y⟩` with `M`
/// the multinomial coefficient. Output index is `x · dim_Y + y`.
pub fn splitting_isometry(k: usize, n: usize, n_x: usize, n_y: usize) -> Result<Operator> {
    check_split(n, n_x, n_y)?;
    let full = DickeBasis::new(k, n)?;
    let bx = DickeBasis::new(k, n_x)?;
    let by = DickeBasis::new(k, n_y)?;
    let mut m = CMatrix::zeros(bx.dim() * by.dim(), full.dim());
    for (col, occ) in full.occupations().iter().enumerate() {
        let weight_full = multinomial(occ);
        for (x, occ_x) in bx.occupations().iter().enumerate() {
            if occ_x.iter().zip(occ).any(|(a, b)| a > b) {
                continue;
            }
            let occ_y: Vec<usize> = occ.iter().zip(occ_x).map(|(a, b)| a - b).collect();
            let y = by.index_of(&occ_y).expect("complementary occupation");
            let w = (multinomial(occ_x) * multinomial(&occ_y) / weight_full).sqrt();
            m[(x * by.dim() + y, col)] = c(w, 0.0);
        }
    }
    Ok(Operator::new(m))
}

/// `Λ_{N_X,N_Y}|ψ⟩` as a bipartite vector with cut `(dim_X, dim_Y)`.
pub fn apply_splitting(state: &SymmetricState, n_x: usize, n_y: usize) -> Result<(StateVector, (usize, usize))> {
    let lambda = splitting_isometry(state.k, state.n, n_x, n_y)?;
    let cut = (dicke_dim(state.k, n_x)?, dicke_dim(state.k, n_y)?);
    Ok((StateVector::normalize(lambda.apply(&state.state)?)?, cut))
}

/// Outcome of the mixed/pure faithfulness checks for the splitting isometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem3Report {
    pub samples: usize,
    pub max_mixture_negativity: f64,
    pub max_decomposition_error: f64,
    pub min_superposition_entropy: f64,
    pub min_superposition_negativity: f64,
    pub superpositions_rank_two: bool,
    pub max_classical_entropy: f64,
}

impl Theorem3Report {
    pub fn passed(&self) -> bool {
        self.max_mixture_negativity <= 1e-10
            && self.max_decomposition_error <= 1e-10
            && self.min_superposition_entropy > 1e-8
            && self.min_superposition_negativity > 1e-10
            && self.superpositions_rank_two
            && self.max_classical_entropy <= 1e-10
    }
}

/// (a) three-term mixtures of coherent projectors map to separable outputs
/// with an explicit product decomposition; (b) `(|I;N⟩ + |U;N⟩)/𝒩` maps to an
/// entangled output; (c) coherent inputs map to product outputs.
pub fn verify_theorem3_mixed(
    k: usize,
    n: usize,
    n_x: usize,
    n_y: usize,
    samples: usize,
    seed: u64,
) -> Result<Theorem3Report> {
    check_split(n, n_x, n_y)?;
    let dim = dicke_dim(k, n)?;
    if dim > MAX_MIXED_DIM {
        return Err(Error::SizeCap(format!(
            "input dimension {dim} exceeds {MAX_MIXED_DIM}"
        )));
    }
    let lambda = splitting_isometry(k, n, n_x, n_y)?;
    let (dx, dy) = (dicke_dim(k, n_x)?, dicke_dim(k, n_y)?);
    let identity = coherent_state(&SuUnitary::identity(k)?, n)?;
    let mut report = Theorem3Report {
        samples,
        max_mixture_negativity: 0.0,
        max_decomposition_error: 0.0,
        min_superposition_entropy: f64::INFINITY,
        min_superposition_negativity: f64::INFINITY,
        superpositions_rank_two: true,
        max_classical_entropy: 0.0,
    };
    let lm = lambda.matrix();
    for s in 0..samples {
        let mut rng = substream(seed, s as u64);
        let mut rho = CMatrix::zeros(dim, dim);
        let mut products = CMatrix::zeros(dx * dy, dx * dy);
        let weights: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let total: f64 = weights.iter().sum();
        for w in weights {
            let u = haar_random_su(k, &mut rng)?;
            let p = c(w / total, 0.0);
            rho += coherent_state(&u, n)?.state.projector().into_matrix() * p;
            let prod = coherent_state(&u, n_x)?.state.tensor(coherent_state(&u, n_y)?.state());
            products += prod.projector().into_matrix() * p;
        }
        let out = Operator::new(lm * rho * lm.adjoint());
        report.max_mixture_negativity = report.max_mixture_negativity.max(negativity(&out, dx, dy)?);
        report.max_decomposition_error = report
            .max_decomposition_error
            .max(max_abs(&(out.matrix() - products)));

        let u = haar_random_su(k, &mut rng)?;
        let coherent = coherent_state(&u, n)?;
        let (classical_out, _) = apply_splitting(&coherent, n_x, n_y)?;
        report.max_classical_entropy = report
            .max_classical_entropy
            .max(entanglement_entropy(&schmidt_decompose(&classical_out, dx, dy)?));

        let sup = SymmetricState::superposition(&[(c(1.0, 0.0), &identity), (c(1.0, 0.0), &coherent)])?;
        let (sup_out, _) = apply_splitting(&sup, n_x, n_y)?;
        let sd = schmidt_decompose(&sup_out, dx, dy)?;
        report.superpositions_rank_two &= sd.rank == 2;
        report.min_superposition_entropy = report.min_superposition_entropy.min(entanglement_entropy(&sd));
        report.min_superposition_negativity = report
            .min_superposition_negativity
            .min(negativity(&sup_out.projector(), dx, dy)?);
    }
    Ok(report)
}
