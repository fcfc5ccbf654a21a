//! Conversion of a finite, linearly independent classical set.
//!
//! The classical Gram matrix is split as `G = B(1/(1+ε)) ∘ M(ε)` with
//! `M(ε) = G ∘ B(1+ε)`. Factoring both pieces gives families `{d_i}` and
//! `{e_i}` with `⟨d_i ⊗ e_i|d_j ⊗ e_j⟩ = G_ij`, so a unitary sends every
//! `|c_i⟩ ⊗ |ref⟩` to the product `|d_i⟩ ⊗ |e_i⟩`. Superpositions of `r`
//! classical states come out with Schmidt rank `r`.

use nalgebra::LU;
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    c, factor_gram, gram_of, hadamard, hermitian_eigenvalues, max_abs, negativity, relative_rank,
    schmidt_decompose, synthesize_unitary, CMatrix, CVector, GramMatrix, Operator, StateVector,
};
use crate::random::{complex_gaussian, random_state, substream};

/// Minimum eigenvalue for a Gram matrix to count as positive definite.
pub const PD_TOL: f64 = 1e-10;
/// Largest ε probed by [`epsilon_max`] before reporting an unbounded range.
pub const EPSILON_CAP: f64 = 1e6;
/// Relative bracket width at which the ε bisection stops.
pub const BISECTION_REL_TOL: f64 = 1e-10;

/// `D` linearly independent pure states in dimension `D`.
#[derive(Debug, Clone)]
pub struct ClassicalSet {
    states: Vec<StateVector>,
    gram: GramMatrix,
}

impl ClassicalSet {
    pub fn new(states: Vec<StateVector>) -> Result<Self> {
        let d = states.len();
        if d == 0 {
            return Err(Error::EmptyFamily);
        }
        for s in &states {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.dim(),
                });
            }
        }
        let gram = gram_of(&states)?;
        let min = gram.min_eigenvalue();
        if min <= PD_TOL {
            return Err(Error::NotIndependent(min));
        }
        Ok(Self { states, gram })
    }

    /// Haar-random states, redrawn until independent.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        loop {
            let states = (0..d).map(|_| random_state(d, rng)).collect();
            if let Ok(cs) = Self::new(states) {
                return cs;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    /// Matrix whose columns are the classical states.
    fn columns(&self) -> CMatrix {
        let cols: Vec<CVector> = self.states.iter().map(|s| s.amplitudes().clone()).collect();
        CMatrix::from_columns(&cols)
    }
}

/// Unit diagonal with every off-diagonal entry equal to `lambda`.
pub fn djokovic_b(lambda: f64, d: usize) -> Result<GramMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "B(lambda) needs 0 <= lambda <= 1, got {lambda}"
        )));
    }
    GramMatrix::new(CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            c(1.0, 0.0)
        } else {
            c(lambda, 0.0)
        }
    }))
}

/// `M(ε) = G ∘ B(1+ε)`: classical overlaps scaled by `1+ε`.
pub fn scaled_overlaps(cs: &ClassicalSet, epsilon: f64) -> CMatrix {
    let g = cs.gram().entries();
    CMatrix::from_fn(g.nrows(), g.ncols(), |i, j| {
        if i == j {
            c(1.0, 0.0)
        } else {
            g[(i, j)] * (1.0 + epsilon)
        }
    })
}

fn scaled_min_eigenvalue(cs: &ClassicalSet, epsilon: f64) -> f64 {
    hermitian_eigenvalues(&scaled_overlaps(cs, epsilon))[0]
}

/// Supremum of ε for which `M(ε)` stays positive definite, or `+∞` if it
/// is still positive definite at [`EPSILON_CAP`].
pub fn epsilon_max(cs: &ClassicalSet) -> f64 {
    let feasible = |eps: f64| scaled_min_eigenvalue(cs, eps) > PD_TOL;
    if feasible(EPSILON_CAP) {
        return f64::INFINITY;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while feasible(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > BISECTION_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Interior default: half the supremum, or 1 when every ε is feasible.
pub fn default_epsilon(cs: &ClassicalSet) -> f64 {
    let max = epsilon_max(cs);
    if max.is_finite() {
        0.5 * max
    } else {
        1.0
    }
}

/// A feasible splitting of the classical Gram matrix.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    pub epsilon: f64,
    /// `B(1/(1+ε))`.
    pub gram_d: GramMatrix,
    /// `M(ε)`.
    pub gram_e: GramMatrix,
    pub d_states: Vec<StateVector>,
    pub e_states: Vec<StateVector>,
}

impl SplitSpec {
    /// `‖G − G_d ∘ G_e‖_max` against the given classical set.
    pub fn splitting_error(&self, cs: &ClassicalSet) -> f64 {
        max_abs(&(cs.gram().entries() - self.gram_d.entries().component_mul(self.gram_e.entries())))
    }
}

pub fn make_split(cs: &ClassicalSet, epsilon: f64) -> Result<SplitSpec> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    let d = cs.dim();
    let gram_e = GramMatrix::new(scaled_overlaps(cs, epsilon))
        .ok()
        .filter(|g| g.min_eigenvalue() > PD_TOL)
        .ok_or_else(|| Error::InfeasibleEpsilon {
            epsilon,
            max: epsilon_max(cs),
        })?;
    let gram_d = djokovic_b(1.0 / (1.0 + epsilon), d)?;
    if d > 1 && gram_d.min_eigenvalue() <= PD_TOL {
        return Err(Error::Numerical(format!(
            "B(1/(1+{epsilon})) is numerically singular"
        )));
    }
    let product = hadamard(&gram_d, &gram_e)?;
    let err = product.max_deviation(cs.gram());
    if err > PD_TOL {
        return Err(Error::Numerical(format!(
            "Gram splitting misses the classical Gram matrix by {err:e}"
        )));
    }
    let d_states = factor_gram(&gram_d)?;
    let e_states = factor_gram(&gram_e)?;
    Ok(SplitSpec {
        epsilon,
        gram_d,
        gram_e,
        d_states,
        e_states,
    })
}

/// Conversion unitary on `C^D ⊗ C^D` plus the ancilla reference state.
#[derive(Debug, Clone)]
pub struct Conversion {
    unitary: Operator,
    reference: StateVector,
    images: Vec<(StateVector, StateVector)>,
    epsilon: f64,
}

impl Conversion {
    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }

    pub fn reference(&self) -> &StateVector {
        &self.reference
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Input dimension `D`.
    pub fn dim(&self) -> usize {
        self.reference.dim()
    }

    /// `(D, D)`: the bipartite cut of the output space.
    pub fn output_cut(&self) -> (usize, usize) {
        (self.images[0].0.dim(), self.images[0].1.dim())
    }

    /// The product pair `(|d_i⟩, |e_i⟩)` that classical state `i` maps to.
    pub fn classical_image(&self, i: usize) -> &(StateVector, StateVector) {
        &self.images[i]
    }

    /// `|ψ⟩ ⊗ |ref⟩`.
    pub fn embed(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        Ok(psi.tensor(&self.reference))
    }

    /// `ρ ⊗ |ref⟩⟨ref|`.
    pub fn embed_density(&self, rho: &Operator) -> Result<Operator> {
        if rho.rows() != self.dim() || rho.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.rows(),
            });
        }
        Ok(rho.kron(&self.reference.projector()))
    }
}

pub fn build_conversion(
    cs: &ClassicalSet,
    split: &SplitSpec,
    reference: StateVector,
) -> Result<Conversion> {
    let d = cs.dim();
    for found in [reference.dim(), split.d_states.len(), split.e_states.len()] {
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    let inputs: Vec<StateVector> = cs.states().iter().map(|s| s.tensor(&reference)).collect();
    let outputs: Vec<StateVector> = split
        .d_states
        .iter()
        .zip(&split.e_states)
        .map(|(a, b)| a.tensor(b))
        .collect();
    let unitary = synthesize_unitary(&inputs, &outputs)?;
    let images = split
        .d_states
        .iter()
        .cloned()
        .zip(split.e_states.iter().cloned())
        .collect();
    Ok(Conversion {
        unitary,
        reference,
        images,
        epsilon: split.epsilon,
    })
}

/// Conversion at `epsilon` with the first classical state as reference.
pub fn conversion_for(cs: &ClassicalSet, epsilon: f64) -> Result<Conversion> {
    let split = make_split(cs, epsilon)?;
    build_conversion(cs, &split, cs.states()[0].clone())
}

/// Coefficients `x` with `|ψ⟩ = Σ x_i |c_i⟩`.
pub fn expansion_coefficients(psi: &StateVector, cs: &ClassicalSet) -> Result<CVector> {
    if psi.dim() != cs.dim() {
        return Err(Error::DimensionMismatch {
            expected: cs.dim(),
            found: psi.dim(),
        });
    }
    LU::new(cs.columns())
        .solve(psi.amplitudes())
        .ok_or_else(|| Error::Numerical("classical basis matrix is singular".into()))
}

/// Number of classical states needed to expand `psi`.
pub fn c_rank(psi: &StateVector, cs: &ClassicalSet) -> Result<usize> {
    let x = expansion_coefficients(psi, cs)?;
    let moduli: Vec<f64> = x.iter().map(|z| z.norm()).collect();
    Ok(relative_rank(&moduli))
}

/// `Λ (|ψ⟩ ⊗ |ref⟩)`.
pub fn convert_state(conv: &Conversion, psi: &StateVector) -> Result<StateVector> {
    let embedded = conv.embed(psi)?;
    StateVector::normalize(conv.unitary.apply(&embedded)?)
}

/// `Λ (ρ ⊗ |ref⟩⟨ref|) Λ†`.
pub fn convert_density(conv: &Conversion, rho: &Operator) -> Result<Operator> {
    let embedded = conv.embed_density(rho)?;
    let u = conv.unitary.matrix();
    Ok(Operator::new(u * embedded.matrix() * u.adjoint()))
}

/// Normalized random superposition of the classical states in `support`.
pub fn random_superposition<R: Rng + ?Sized>(
    cs: &ClassicalSet,
    support: &[usize],
    rng: &mut R,
) -> StateVector {
    loop {
        let mut v = CVector::zeros(cs.dim());
        for &i in support {
            v += cs.states()[i].amplitudes() * complex_gaussian(rng);
        }
        if let Ok(s) = StateVector::normalize(v) {
            return s;
        }
    }
}

/// Separability certificate for a converted mixture of classical states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureCertificate {
    pub negativity: f64,
    /// `max |Λ(ρ⊗ref)Λ† − Σ p_i |d_i e_i⟩⟨d_i e_i||`.
    pub decomposition_error: f64,
}

/// Converts `Σ p_i |c_i⟩⟨c_i|` and compares it with the explicit product
/// decomposition `Σ p_i |d_i⟩⟨d_i| ⊗ |e_i⟩⟨e_i|`.
pub fn mixture_certificate(cs: &ClassicalSet, conv: &Conversion, mixture: &[(usize, f64)]) -> Result<MixtureCertificate> {
    if mixture.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let d = cs.dim();
    let total: f64 = mixture.iter().map(|m| m.1).sum();
    let mut rho = CMatrix::zeros(d, d);
    let (da, db) = conv.output_cut();
    let mut products = CMatrix::zeros(da * db, da * db);
    for &(i, w) in mixture {
        if i >= d || w < 0.0 {
            return Err(Error::InvalidParameter(format!("bad mixture term ({i}, {w})")));
        }
        let p = c(w / total, 0.0);
        rho += cs.states()[i].projector().into_matrix() * p;
        let (di, ei) = conv.classical_image(i);
        products += di.tensor(ei).projector().into_matrix() * p;
    }
    let out = convert_density(conv, &Operator::new(rho))?;
    Ok(MixtureCertificate {
        negativity: negativity(&out, da, db)?,
        decomposition_error: max_abs(&(out.matrix() - products)),
    })
}

/// Outcome of a randomized Schmidt-rank = C-rank check.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Report {
    pub trials: usize,
    pub passes: usize,
    pub failures: usize,
    /// Smallest `λ_r / λ_1` over trials, with `r` the C-rank (must stay above
    /// the rank threshold).
    pub min_retained_ratio: f64,
    /// Largest `λ_{r+1} / λ_1` over trials (must stay at or below it).
    pub max_discarded_ratio: f64,
}

impl Theorem2Report {
    pub fn all_passed(&self) -> bool {
        self.failures == 0 && self.passes == self.trials
    }
}

pub fn verify_theorem2(cs: &ClassicalSet, conv: &Conversion, trials: usize, seed: u64) -> Theorem2Report {
    let d = cs.dim();
    let (da, db) = conv.output_cut();
    let mut report = Theorem2Report {
        trials,
        passes: 0,
        failures: 0,
        min_retained_ratio: f64::INFINITY,
        max_discarded_ratio: 0.0,
    };
    for trial in 0..trials {
        let mut rng = substream(seed, trial as u64);
        let size = rng.gen_range(1..=d);
        let support = sample(&mut rng, d, size).into_vec();
        let psi = random_superposition(cs, &support, &mut rng);
        let outcome = c_rank(&psi, cs).and_then(|r| {
            let out = convert_state(conv, &psi)?;
            Ok((r, schmidt_decompose(&out, da, db)?))
        });
        match outcome {
            Ok((r, sd)) if r == size && sd.rank == r => {
                let top = sd.largest();
                report.min_retained_ratio = report.min_retained_ratio.min(sd.coefficients[r - 1] / top);
                if r < sd.coefficients.len() {
                    report.max_discarded_ratio = report.max_discarded_ratio.max(sd.coefficients[r] / top);
                }
                report.passes += 1;
            }
            _ => report.failures += 1,
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{entanglement_entropy, negativity, StateVector, RANK_TOL};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn gcnot_set(theta: f64) -> ClassicalSet {
        let (a, b) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        ClassicalSet::new(vec![
            StateVector::from_real(&[a, b]).unwrap(),
            StateVector::from_real(&[a, -b]).unwrap(),
        ])
        .unwrap()
    }

    fn orthonormal_set(d: usize) -> ClassicalSet {
        ClassicalSet::new((0..d).map(|k| StateVector::basis(d, k)).collect()).unwrap()
    }

    #[test]
    fn classical_set_rejects_dependent_states() {
        let s = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let err = ClassicalSet::new(vec![s.clone(), s]).unwrap_err();
        assert!(matches!(err, Error::NotIndependent(m) if m.abs() < 1e-12));
    }

    #[test]
    fn djokovic_b_examples() {
        assert_eq!(djokovic_b(0.0, 3).unwrap(), GramMatrix::identity(3));
        let ones = djokovic_b(1.0, 3).unwrap();
        let eig = ones.eigenvalues();
        assert!(eig[0].abs() < 1e-12 && eig[1].abs() < 1e-12);
        assert!((eig[2] - 3.0).abs() < 1e-12);
        // Eigenvalues 1-λ (D-1 times) and 1+(D-1)λ.
        let eig = djokovic_b(0.5, 4).unwrap().eigenvalues();
        for (got, want) in eig.iter().zip([0.5, 0.5, 0.5, 2.5]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(djokovic_b(1.5, 2).is_err());
        assert!(djokovic_b(-0.1, 2).is_err());
    }

    #[test]
    fn epsilon_max_matches_two_state_condition() {
        for &theta in &[0.3, PI / 3.0, 1.2, 2.0, 2.9] {
            let expected = 1.0 / theta.cos().abs() - 1.0;
            let got = epsilon_max(&gcnot_set(theta));
            assert!((got - expected).abs() <= 1e-8 * expected.max(1.0), "{theta}: {got} vs {expected}");
        }
        assert!((epsilon_max(&gcnot_set(PI / 3.0)) - 1.0).abs() < 1e-8);
        assert_eq!(epsilon_max(&orthonormal_set(3)), f64::INFINITY);
    }

    #[test]
    fn epsilon_max_matches_smallest_gram_eigenvalue() {
        // M(ε) = (1+ε)G − εI, so the supremum is g/(1−g) for the smallest
        // Gram eigenvalue g.
        let mut rng = substream(21, 0);
        for d in 2..6 {
            let cs = ClassicalSet::random(d, &mut rng);
            let g = cs.gram().min_eigenvalue();
            let expected = g / (1.0 - g);
            let got = epsilon_max(&cs);
            assert!((got - expected).abs() <= 1e-8 * expected, "d={d}: {got} vs {expected}");
        }
    }

    #[test]
    fn split_examples() {
        let split = make_split(&gcnot_set(PI / 3.0), 0.5).unwrap();
        assert!((split.gram_e.get(0, 1).re - 0.75).abs() < 1e-12);
        assert!((split.gram_d.get(0, 1).re - 2.0 / 3.0).abs() < 1e-12);

        let cs = orthonormal_set(3);
        let split = make_split(&cs, 2.0).unwrap();
        assert_eq!(split.gram_e, GramMatrix::identity(3));
        assert!(split.gram_d.max_deviation(&djokovic_b(1.0 / 3.0, 3).unwrap()) < 1e-15);
    }

    #[test]
    fn split_near_boundary_is_valid_and_beyond_fails() {
        let cs = gcnot_set(2.0);
        let max = epsilon_max(&cs);
        let split = make_split(&cs, max - 1e-6).unwrap();
        let min = split.gram_e.min_eigenvalue();
        assert!(min > 0.0 && min < 1e-5);
        assert!(split.splitting_error(&cs) < 1e-10);
        assert!(matches!(
            make_split(&cs, max * (1.0 + 1e-6)),
            Err(Error::InfeasibleEpsilon { .. })
        ));
        assert!(make_split(&cs, 0.0).is_err());
    }

    #[test]
    fn conversion_maps_classical_states_to_products() {
        let cs = gcnot_set(PI / 2.0);
        let conv = conversion_for(&cs, 1.0).unwrap();
        assert!(conv.unitary().unitarity_error() < 1e-10);
        for (i, c_i) in cs.states().iter().enumerate() {
            let out = convert_state(&conv, c_i).unwrap();
            let (d, e) = conv.classical_image(i);
            assert!((out.amplitudes() - d.tensor(e).amplitudes()).norm() < 1e-8);
            assert_eq!(schmidt_decompose(&out, 2, 2).unwrap().rank, 1);
        }
    }

    #[test]
    fn large_epsilon_approaches_controlled_displacement() {
        let cs = orthonormal_set(2);
        let conv = conversion_for(&cs, 1e8).unwrap();
        let e0 = &conv.classical_image(0).1;
        let e1 = &conv.classical_image(1).1;
        assert!(e0.inner(e1).unwrap().norm() < 1e-12);
        let d0 = &conv.classical_image(0).0;
        let d1 = &conv.classical_image(1).0;
        assert!(d0.inner(d1).unwrap().norm() < 1e-7);
    }

    #[test]
    fn zero_input_through_orthogonal_gcnot_is_nearly_one_ebit() {
        let cs = gcnot_set(PI / 2.0);
        let conv = conversion_for(&cs, 1e6).unwrap();
        let out = convert_state(&conv, &StateVector::basis(2, 0)).unwrap();
        let e = entanglement_entropy(&schmidt_decompose(&out, 2, 2).unwrap());
        assert!((1.0 - e) < 1e-9);
    }

    #[test]
    fn c_rank_examples() {
        let mut rng = substream(22, 0);
        let cs = ClassicalSet::random(4, &mut rng);
        assert_eq!(c_rank(&cs.states()[2], &cs).unwrap(), 1);
        let gc = gcnot_set(1.0);
        assert_eq!(c_rank(&StateVector::basis(2, 0), &gc).unwrap(), 2);
        for r in 1..=4 {
            let support: Vec<usize> = (0..r).collect();
            let psi = random_superposition(&cs, &support, &mut rng);
            assert_eq!(c_rank(&psi, &cs).unwrap(), r);
        }
        assert!(c_rank(&StateVector::basis(3, 0), &cs).is_err());
    }

    #[test]
    fn classical_mixture_converts_to_separable_state() {
        let cs = gcnot_set(1.3);
        let conv = conversion_for(&cs, default_epsilon(&cs)).unwrap();
        let rho = Operator::new(
            cs.states()[0].projector().matrix() * c(0.3, 0.0)
                + cs.states()[1].projector().matrix() * c(0.7, 0.0),
        );
        let out = convert_density(&conv, &rho).unwrap();
        assert!(negativity(&out, 2, 2).unwrap() <= 1e-10);
    }

    #[test]
    fn verify_theorem2_small_instances() {
        let mut rng = substream(23, 0);
        let cs = ClassicalSet::random(4, &mut rng);
        let conv = conversion_for(&cs, default_epsilon(&cs)).unwrap();
        let report = verify_theorem2(&cs, &conv, 100, 99);
        assert!(report.all_passed(), "{report:?}");
        assert!(report.max_discarded_ratio <= RANK_TOL);
        assert!(report.min_retained_ratio > RANK_TOL);
    }

    #[test]
    fn custom_reference_state() {
        let mut rng = substream(24, 0);
        let cs = ClassicalSet::random(3, &mut rng);
        let split = make_split(&cs, default_epsilon(&cs)).unwrap();
        let reference = random_state(3, &mut rng);
        let conv = build_conversion(&cs, &split, reference).unwrap();
        let out = convert_state(&conv, &cs.states()[1]).unwrap();
        assert_eq!(schmidt_decompose(&out, 3, 3).unwrap().rank, 1);
        assert!(build_conversion(&cs, &split, StateVector::basis(2, 0)).is_err());
    }

    #[test]
    fn classical_mixtures_convert_to_separable_outputs() {
        let mut rng = substream(30, 0);
        let cs = ClassicalSet::random(4, &mut rng);
        let conv = conversion_for(&cs, default_epsilon(&cs)).unwrap();
        let cert = mixture_certificate(&cs, &conv, &[(0, 0.2), (1, 0.5), (3, 0.3)]).unwrap();
        assert!(cert.negativity <= 1e-10);
        assert!(cert.decomposition_error <= 1e-10);
        assert!(mixture_certificate(&cs, &conv, &[]).is_err());
        assert!(mixture_certificate(&cs, &conv, &[(4, 1.0)]).is_err());
    }
}
