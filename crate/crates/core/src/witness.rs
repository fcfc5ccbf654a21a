//! Turning entanglement witnesses on the output of a conversion into
//! non-classicality witnesses on its input: `W' = Λ†WΛ`, then compress onto
//! the reference state of the ancilla.

use crate::discrete::{convert_state, ClassicalSet, Conversion};
use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitize, schmidt_decompose, validate_density, CMatrix, Operator, StateVector, GRAM_TOL,
};
use crate::random::{random_state, substream};
use crate::symmetric::{coherent_state, haar_random_su};

/// Expectations below this count as detection.
pub const DETECTION_TOL: f64 = 1e-10;

/// Hermitian operator with a human-readable label.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    operator: Operator,
    label: String,
}

impl Witness {
    pub fn new(operator: Operator, label: impl Into<String>) -> Result<Self> {
        if operator.rows() != operator.cols() {
            return Err(Error::DimensionMismatch {
                expected: operator.rows(),
                found: operator.cols(),
            });
        }
        let err = operator.hermiticity_error();
        if err > GRAM_TOL {
            return Err(Error::NotHermitian(err));
        }
        Ok(Self {
            operator,
            label: label.into(),
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.operator.rows()
    }

    /// `⟨ψ|W|ψ⟩`.
    pub fn pure_expectation(&self, psi: &StateVector) -> Result<f64> {
        let w_psi = self.operator.apply(psi)?;
        Ok(psi.amplitudes().dotc(&w_psi).re)
    }
}

/// `W = λ₁² I − |φ⟩⟨φ|` with `λ₁` the largest Schmidt coefficient of `φ`.
/// Non-negative on product states since `|⟨a,b|φ⟩|² ≤ λ₁²`.
pub fn swap_style_witness(dim_a: usize, dim_b: usize, phi: &StateVector) -> Result<Witness> {
    let lambda = schmidt_decompose(phi, dim_a, dim_b)?.largest();
    let n = dim_a * dim_b;
    let m = CMatrix::identity(n, n) * c(lambda * lambda, 0.0) - phi.projector().into_matrix();
    Witness::new(Operator::new(hermitize(&m)), format!("projector witness, λ₁² = {}", lambda * lambda))
}

/// `Λ† W Λ`.
pub fn pull_back(w: &Witness, conv: &Conversion) -> Result<Operator> {
    let u = conv.unitary().matrix();
    if u.nrows() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            found: w.dim(),
        });
    }
    Ok(Operator::new(hermitize(&(u.adjoint() * w.operator.matrix() * u))))
}

/// `(1 ⊗ ⟨ref|) W' (1 ⊗ |ref⟩)` on the input factor.
pub fn restrict_to_reference(wp: &Operator, reference: &StateVector) -> Result<Witness> {
    let r = reference.dim();
    if wp.rows() != wp.cols() || !wp.rows().is_multiple_of(r) {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: wp.rows(),
        });
    }
    let d = wp.rows() / r;
    let refv = reference.amplitudes();
    let m = wp.matrix();
    let out = CMatrix::from_fn(d, d, |i, j| {
        let mut acc = c(0.0, 0.0);
        for a in 0..r {
            for b in 0..r {
                acc += refv[a].conj() * m[(i * r + a, j * r + b)] * refv[b];
            }
        }
        acc
    });
    Witness::new(Operator::new(hermitize(&out)), "non-classicality witness")
}

/// Pull back and restrict in one step.
pub fn nonclassicality_witness(w: &Witness, conv: &Conversion) -> Result<Witness> {
    let mut wt = restrict_to_reference(&pull_back(w, conv)?, conv.reference())?;
    wt.label = format!("pulled back: {}", w.label);
    Ok(wt)
}

/// `V† W V` for an isometry `V` with no ancilla (e.g. the symmetric
/// splitting map).
pub fn pull_back_isometry(w: &Witness, v: &Operator) -> Result<Witness> {
    if v.rows() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.rows(),
            found: w.dim(),
        });
    }
    let m = v.matrix().adjoint() * w.operator.matrix() * v.matrix();
    Witness::new(Operator::new(hermitize(&m)), format!("pulled back: {}", w.label))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub value: f64,
    pub detected: bool,
}

/// `Tr(W̃ρ)`; detection iff the value is below `−1e-10`.
pub fn detect(wt: &Witness, rho: &Operator) -> Result<Detection> {
    if rho.rows() != wt.dim() {
        return Err(Error::DimensionMismatch {
            expected: wt.dim(),
            found: rho.rows(),
        });
    }
    validate_density(rho, wt.dim())?;
    let value = wt.operator.expectation(rho)?;
    Ok(Detection {
        value,
        detected: value < -DETECTION_TOL,
    })
}

/// Minimum of `⟨a,b|W|a,b⟩` over random product states.
pub fn product_certificate(w: &Witness, dim_a: usize, dim_b: usize, samples: usize, seed: u64) -> Result<f64> {
    if dim_a * dim_b != w.dim() {
        return Err(Error::BadCut {
            dim: w.dim(),
            dim_a,
            dim_b,
        });
    }
    let mut min = f64::INFINITY;
    for s in 0..samples {
        let mut rng = substream(seed, s as u64);
        let a = random_state(dim_a, &mut rng);
        let b = random_state(dim_b, &mut rng);
        min = min.min(w.pure_expectation(&a.tensor(&b))?);
    }
    Ok(min)
}

/// Minimum expectation over the classical states of `cs`.
pub fn classical_certificate(wt: &Witness, cs: &ClassicalSet) -> Result<f64> {
    cs.states()
        .iter()
        .map(|s| wt.pure_expectation(s))
        .try_fold(f64::INFINITY, |m, v| Ok(m.min(v?)))
}

/// Minimum expectation over Haar-random coherent states `|U;N⟩`.
pub fn coherent_certificate(wt: &Witness, k: usize, n: usize, samples: usize, seed: u64) -> Result<f64> {
    let mut min = f64::INFINITY;
    for s in 0..samples {
        let u = haar_random_su(k, &mut substream(seed, s as u64))?;
        min = min.min(wt.pure_expectation(coherent_state(&u, n)?.state())?);
    }
    Ok(min)
}

/// Everything derived from one target state.
#[derive(Debug, Clone)]
pub struct WitnessPipeline {
    pub output_witness: Witness,
    pub input_witness: Witness,
    pub target_value: f64,
    pub classical_min: f64,
}

/// Builds `W` from the converted `target`, pulls it back, and evaluates it
/// on the target and the classical states.
pub fn witness_pipeline(cs: &ClassicalSet, conv: &Conversion, target: &StateVector) -> Result<WitnessPipeline> {
    let out = convert_state(conv, target)?;
    let (da, db) = conv.output_cut();
    let w = swap_style_witness(da, db, &out)?;
    let wt = nonclassicality_witness(&w, conv)?;
    Ok(WitnessPipeline {
        target_value: wt.pure_expectation(target)?,
        classical_min: classical_certificate(&wt, cs)?,
        output_witness: w,
        input_witness: wt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{conversion_for, convert_density, default_epsilon};
    use crate::gcnot::{gcnot_classical_pair, optimal_epsilon};
    use crate::linalg::CVector;
    use crate::random::haar_unitary;
    use crate::symmetric::{apply_splitting, splitting_isometry, SuUnitary, SymmetricState};
    use rand::Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn bell() -> StateVector {
        StateVector::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap()
    }

    fn random_density(d: usize, seed: u64) -> Operator {
        let mut rng = substream(seed, 0);
        let mut m = CMatrix::zeros(d, d);
        let mut total = 0.0;
        for _ in 0..3 {
            let p: f64 = rng.gen();
            total += p;
            m += random_state(d, &mut rng).projector().into_matrix() * c(p, 0.0);
        }
        Operator::new(m.unscale(total))
    }

    #[test]
    fn bell_witness() {
        let w = swap_style_witness(2, 2, &bell()).unwrap();
        let expected = CMatrix::identity(4, 4) * c(0.5, 0.0) - bell().projector().into_matrix();
        assert!((w.operator().matrix() - expected).norm() < 1e-15);
        assert!((w.pure_expectation(&bell()).unwrap() + 0.5).abs() < 1e-15);
        assert!(product_certificate(&w, 2, 2, 10_000, 1).unwrap() >= -1e-10);
        assert!(product_certificate(&w, 2, 3, 1, 1).is_err());
    }

    #[test]
    fn product_target_gives_psd_witness() {
        let phi = StateVector::from_real(&[0.6, 0.8]).unwrap().tensor(&StateVector::from_real(&[0.0, 1.0, 0.0]).unwrap());
        let w = swap_style_witness(2, 3, &phi).unwrap();
        assert!(w.operator().hermitian_eigenvalues()[0] >= -1e-12);
        assert!(!detect(&w, &phi.projector()).unwrap().detected);
    }

    #[test]
    fn pull_back_identity_and_spectrum() {
        let w = swap_style_witness(2, 2, &bell()).unwrap();
        let cs = ClassicalSet::random(2, &mut substream(70, 0));
        let conv = conversion_for(&cs, default_epsilon(&cs)).unwrap();
        let wp = pull_back(&w, &conv).unwrap();
        let mut a = w.operator().hermitian_eigenvalues();
        let mut b = wp.hermitian_eigenvalues();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let id = Operator::identity(4);
        let same = pull_back_isometry(&w, &id).unwrap();
        assert!((same.operator().matrix() - w.operator().matrix()).norm() < 1e-15);
    }

    #[test]
    fn chain_identity() {
        let mut rng = substream(71, 0);
        let cs = ClassicalSet::random(3, &mut rng);
        let conv = conversion_for(&cs, default_epsilon(&cs)).unwrap();
        let (da, db) = conv.output_cut();
        let phi = random_state(da * db, &mut rng);
        let w = swap_style_witness(da, db, &phi).unwrap();
        let wp = pull_back(&w, &conv).unwrap();
        let wt = restrict_to_reference(&wp, conv.reference()).unwrap();
        for s in 0..20 {
            let rho = random_density(3, 100 + s);
            let out = convert_density(&conv, &rho).unwrap();
            let lhs = detect(&wt, &rho).unwrap().value;
            let rhs = w.operator().expectation(&out).unwrap();
            let mid = wp.expectation(&conv.embed_density(&rho).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
            assert!((mid - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn gcnot_pipeline_detects_zero_state() {
        let zero = StateVector::basis(2, 0);
        let opt = optimal_epsilon(FRAC_PI_2, &zero).unwrap();
        let cs = gcnot_classical_pair(FRAC_PI_2).unwrap();
        let conv = conversion_for(&cs, opt.epsilon).unwrap();
        let p = witness_pipeline(&cs, &conv, &zero).unwrap();
        assert!(p.target_value < -0.01, "{}", p.target_value);
        assert!(p.classical_min >= -1e-10);
        assert!(detect(&p.input_witness, &zero.projector()).unwrap().detected);
        for s in cs.states() {
            assert!(!detect(&p.input_witness, &s.projector()).unwrap().detected);
        }
        // maximally mixed: value is reported, sign unconstrained
        let mixed = Operator::new(CMatrix::identity(2, 2).unscale(2.0));
        assert!(detect(&p.input_witness, &mixed).unwrap().value.is_finite());
    }

    #[test]
    fn random_classical_sets_are_never_detected() {
        let mut rng = substream(72, 0);
        for _ in 0..20 {
            let cs = ClassicalSet::random(3, &mut rng);
            let conv = conversion_for(&cs, default_epsilon(&cs)).unwrap();
            let (da, db) = conv.output_cut();
            let w = swap_style_witness(da, db, &random_state(da * db, &mut rng)).unwrap();
            let wt = nonclassicality_witness(&w, &conv).unwrap();
            assert!(classical_certificate(&wt, &cs).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn psd_compresses_to_psd() {
        let mut rng = substream(73, 0);
        let a = haar_unitary(6, &mut rng);
        let diag = CMatrix::from_diagonal(&CVector::from_fn(6, |i, _| c(i as f64 * 0.3, 0.0)));
        let wp = Operator::new(&a * diag * a.adjoint());
        let wt = restrict_to_reference(&wp, &random_state(3, &mut rng)).unwrap();
        assert!(wt.operator().hermitian_eigenvalues()[0] >= -1e-12);
        assert!(restrict_to_reference(&wp, &random_state(4, &mut rng)).is_err());
    }

    #[test]
    fn detect_checks_shape_and_density() {
        let w = swap_style_witness(2, 2, &bell()).unwrap();
        assert!(detect(&w, &Operator::identity(3)).is_err());
        assert!(detect(&w, &Operator::identity(4)).is_err());
        assert!(Witness::new(Operator::new(CMatrix::from_fn(2, 2, |i, j| c(i as f64, j as f64))), "x").is_err());
    }

    #[test]
    fn symmetric_witness_certified_on_coherent_states() {
        let mut rng = substream(74, 0);
        let id = coherent_state(&SuUnitary::identity(2).unwrap(), 3).unwrap();
        let cu = coherent_state(&haar_random_su(2, &mut rng).unwrap(), 3).unwrap();
        let sup = SymmetricState::superposition(&[(c(1.0, 0.0), &id), (c(1.0, 0.0), &cu)]).unwrap();
        let (out, (dx, dy)) = apply_splitting(&sup, 1, 2).unwrap();
        let w = swap_style_witness(dx, dy, &out).unwrap();
        let wt = pull_back_isometry(&w, &splitting_isometry(2, 3, 1, 2).unwrap()).unwrap();
        assert!(wt.pure_expectation(sup.state()).unwrap() < -1e-3);
        assert!(coherent_certificate(&wt, 2, 3, 10_000, 5).unwrap() >= -1e-10);
    }
}
