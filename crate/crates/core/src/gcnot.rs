//! Generalized CNOT on a qubit whose classical states are
//! `|c_{0/1}⟩ = cos(θ/2)|0⟩ ± sin(θ/2)|1⟩`.
//!
//! The conversion sends `|c_i⟩` to `|e_i⟩ ⊗ |f_i⟩` with
//! `⟨e_0|e_1⟩ = (1+ε) cos θ` and `⟨f_0|f_1⟩ = 1/(1+ε)`. Sweeps work in the
//! compactified parameter `μ = 1/(1+ε) ∈ (0, 1]`; feasibility is
//! `|cos θ| ≤ μ`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use crate::discrete::{c_rank, conversion_for, convert_state, ClassicalSet};
use crate::error::{Error, Result};
use crate::linalg::{c, entanglement_entropy, schmidt_decompose, StateVector, C64};

/// Smallest μ probed by the optimizer (ε ≈ 1e12).
pub const MU_FLOOR: f64 = 1e-12;
/// Entropy at or above which an output counts as maximally entangled.
pub const MAXIMAL_THRESHOLD: f64 = 1.0 - 1e-6;
/// Coarse scan resolution before golden-section refinement.
pub const SCAN_POINTS: usize = 512;
/// Golden-section bracket width in μ.
pub const GOLDEN_TOL: f64 = 1e-8;
/// Pure inputs sampled on the real great circle by the CNOT probe.
pub const PROBE_SAMPLES: usize = 1024;
/// μ used for the orthogonal (CNOT-limit) control.
pub const CNOT_LIMIT_MU: f64 = 1e-9;

const FEASIBILITY_SLACK: f64 = 1e-15;

/// `(θ, μ)` with `θ ∈ (0, π)` and `|cos θ| ≤ μ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcnotParams {
    theta: f64,
    mu: f64,
}

impl GcnotParams {
    pub fn new(theta: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        Self::from_mu(theta, 1.0 / (1.0 + epsilon))
    }

    pub fn from_mu(theta: f64, mu: f64) -> Result<Self> {
        check_theta(theta)?;
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::InvalidParameter(format!("mu must lie in (0, 1], got {mu}")));
        }
        if theta.cos().abs() > mu + FEASIBILITY_SLACK {
            return Err(Error::InvalidParameter(format!(
                "infeasible GCNOT parameters: (1+eps)|cos theta| = {} > 1",
                theta.cos().abs() / mu
            )));
        }
        Ok(Self { theta, mu })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.mu - 1.0
    }

    /// `⟨e_0|e_1⟩ = (1+ε) cos θ`.
    pub fn e_overlap(&self) -> f64 {
        (self.theta.cos() / self.mu).clamp(-1.0, 1.0)
    }

    /// `⟨f_0|f_1⟩ = 1/(1+ε)`.
    pub fn f_overlap(&self) -> f64 {
        self.mu
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < PI {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "theta must lie in (0, pi), got {theta}"
        )))
    }
}

/// Smallest feasible μ at `theta`.
pub fn mu_lower_bound(theta: f64) -> f64 {
    theta.cos().abs().max(MU_FLOOR)
}

pub fn gcnot_classical_pair(theta: f64) -> Result<ClassicalSet> {
    check_theta(theta)?;
    let (a, b) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    ClassicalSet::new(vec![
        StateVector::from_real(&[a, b])?,
        StateVector::from_real(&[a, -b])?,
    ])
}

/// Coefficients of `input` in the `{c_0, c_1}` expansion, using
/// `|0⟩ = (c_0 + c_1)/𝒩_0` and `|1⟩ = (c_0 − c_1)/𝒩_1` with
/// `𝒩_0 = 2cos(θ/2)`, `𝒩_1 = 2sin(θ/2)`.
pub fn classical_coefficients(theta: f64, input: &StateVector) -> Result<(C64, C64)> {
    if input.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: input.dim(),
        });
    }
    let n0 = 2.0 * (theta / 2.0).cos();
    let n1 = 2.0 * (theta / 2.0).sin();
    let a = input.amplitudes()[0] / n0;
    let b = input.amplitudes()[1] / n1;
    Ok((a + b, a - b))
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 1e-24 { -q * q.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Entropy of entanglement of `Λ_{θ,ε}(input ⊗ ref)` through the two-term
/// output `x_0 |e_0 f_0⟩ + x_1 |e_1 f_1⟩`.
///
/// With real unit vectors `e_1 = (a, √(1−a²))`, `f_1 = (μ, √(1−μ²))` the
/// coefficient matrix has `|det| = |x_0 x_1| √(1−a²) √(1−μ²)`, which fixes both
/// Schmidt weights.
pub fn output_entanglement(params: &GcnotParams, input: &StateVector) -> Result<f64> {
    let (x0, x1) = classical_coefficients(params.theta, input)?;
    let a = params.e_overlap();
    let mu = params.mu;
    let frob = x0.norm_sqr() + x1.norm_sqr() + 2.0 * (x0.conj() * x1).re * a * mu;
    let det_sq = x0.norm_sqr() * x1.norm_sqr() * (1.0 - a * a).max(0.0) * (1.0 - mu * mu).max(0.0);
    let q = (4.0 * det_sq / (frob * frob)).clamp(0.0, 1.0);
    let p_minor = q / (2.0 * (1.0 + (1.0 - q).sqrt()));
    Ok(binary_entropy(p_minor))
}

/// Same quantity computed by building the conversion unitary explicitly and
/// Schmidt-decomposing the converted state. Requires `ε > 0` strictly
/// inside the feasible region.
pub fn output_entanglement_via_conversion(params: &GcnotParams, input: &StateVector) -> Result<f64> {
    let cs = gcnot_classical_pair(params.theta)?;
    let conv = conversion_for(&cs, params.epsilon())?;
    let out = convert_state(&conv, input)?;
    let (da, db) = conv.output_cut();
    Ok(entanglement_entropy(&schmidt_decompose(&out, da, db)?))
}

/// `N` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    b
                } else {
                    a + (b - a) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub mu: f64,
    pub epsilon: f64,
    pub ebits: f64,
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximizes output entanglement over `μ`: a [`SCAN_POINTS`] scan of the
/// feasible interval, then golden-section refinement around the best cell.
pub fn optimal_epsilon(theta: f64, input: &StateVector) -> Result<Optimum> {
    check_theta(theta)?;
    classical_coefficients(theta, input)?;
    let lo = mu_lower_bound(theta);
    let eval = |mu: f64| {
        GcnotParams::from_mu(theta, mu.clamp(lo, 1.0))
            .and_then(|p| output_entanglement(&p, input))
            .unwrap_or(0.0)
    };
    let grid = linspace(lo, 1.0, SCAN_POINTS);
    let (best, best_val) = grid
        .iter()
        .map(|&mu| eval(mu))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (k, v)| if v > b.1 { (k, v) } else { b });
    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(grid.len() - 1)];
    let (mu_ref, val_ref) = golden_section_max(eval, left, right, GOLDEN_TOL);
    let (mu, ebits) = if val_ref >= best_val {
        (mu_ref, val_ref)
    } else {
        (grid[best], best_val)
    };
    Ok(Optimum {
        mu,
        epsilon: 1.0 / mu - 1.0,
        ebits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub mu: f64,
    pub epsilon: f64,
    pub ebits: f64,
}

/// Output-entanglement surface over a `(θ, μ)` grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Grid cells outside the feasible region, omitted from `rows`.
    pub skipped: Vec<(f64, f64)>,
}

pub const CSV_HEADER: &str = "theta,mu,epsilon,ebits";

impl SweepTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.theta, r.mu, r.epsilon, r.ebits)?;
        }
        Ok(())
    }

    /// Largest entropy per distinct θ, in grid order.
    pub fn row_maxima(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for r in &self.rows {
            match out.last_mut() {
                Some((t, m)) if *t == r.theta => *m = m.max(r.ebits),
                _ => out.push((r.theta, r.ebits)),
            }
        }
        out
    }
}

pub fn sweep_surface(theta_grid: &[f64], mu_grid: &[f64], input: &StateVector) -> Result<SweepTable> {
    let mut table = SweepTable::default();
    for &theta in theta_grid {
        check_theta(theta)?;
        for &mu in mu_grid {
            match GcnotParams::from_mu(theta, mu) {
                Ok(p) => table.rows.push(SweepRow {
                    theta,
                    mu,
                    epsilon: p.epsilon(),
                    ebits: output_entanglement(&p, input)?,
                }),
                Err(_) => table.skipped.push((theta, mu)),
            }
        }
    }
    Ok(table)
}

/// [`sweep_surface`] with each row's optimal `μ` merged into the grid, so
/// row maxima are the true maxima rather than the best grid cell.
pub fn sweep_with_optima(theta_grid: &[f64], mu_grid: &[f64], input: &StateVector) -> Result<SweepTable> {
    let mut table = SweepTable::default();
    for &theta in theta_grid {
        let mut mus = mu_grid.to_vec();
        mus.push(optimal_epsilon(theta, input)?.mu);
        mus.sort_by(f64::total_cmp);
        mus.dedup();
        let row = sweep_surface(&[theta], &mus, input)?;
        table.rows.extend(row.rows);
        table.skipped.extend(row.skipped);
    }
    Ok(table)
}

/// `cos(φ/2)|0⟩ + sin(φ/2)|1⟩`.
pub fn great_circle_state(phi: f64) -> StateVector {
    StateVector::from_real(&[(phi / 2.0).cos(), (phi / 2.0).sin()])
        .expect("real unit vector")
}

/// Angles `φ_k = 2πk/n` whose great-circle input reaches [`MAXIMAL_THRESHOLD`].
/// Each ray appears once for `φ ∈ [0, 2π)`.
pub fn maximal_inputs(params: &GcnotParams, samples: usize) -> Result<Vec<f64>> {
    let mut hits = Vec::new();
    for k in 0..samples {
        let phi = 2.0 * PI * k as f64 / samples as f64;
        if output_entanglement(params, &great_circle_state(phi))? >= MAXIMAL_THRESHOLD {
            hits.push(phi);
        }
    }
    Ok(hits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub theta: f64,
    pub mu: f64,
    pub epsilon: f64,
    /// Computational basis input the GCNOT was optimized for.
    pub optimized_input: usize,
    pub samples: usize,
    pub maximal_angles: Vec<f64>,
    pub entropy_zero: f64,
    pub entropy_one: f64,
}

impl ProbeReport {
    pub fn maximal_count(&self) -> usize {
        self.maximal_angles.len()
    }
}

fn probe_at(params: GcnotParams, optimized_input: usize) -> Result<ProbeReport> {
    Ok(ProbeReport {
        theta: params.theta,
        mu: params.mu,
        epsilon: params.epsilon(),
        optimized_input,
        samples: PROBE_SAMPLES,
        maximal_angles: maximal_inputs(&params, PROBE_SAMPLES)?,
        entropy_zero: output_entanglement(&params, &StateVector::basis(2, 0))?,
        entropy_one: output_entanglement(&params, &StateVector::basis(2, 1))?,
    })
}

/// Counts maximally entangling inputs of the optimal GCNOT at `theta`,
/// optimized for `|0⟩` when `θ > π/2` and for `|1⟩` when `θ < π/2`.
pub fn cnot_equivalence_probe(theta: f64) -> Result<ProbeReport> {
    check_theta(theta)?;
    if (theta - FRAC_PI_2).abs() < 1e-12 {
        return Err(Error::InvalidParameter(
            "probe is undefined at theta = pi/2".into(),
        ));
    }
    let optimized_input = usize::from(theta < FRAC_PI_2);
    let opt = optimal_epsilon(theta, &StateVector::basis(2, optimized_input))?;
    probe_at(GcnotParams::from_mu(theta, opt.mu)?, optimized_input)
}

/// The CNOT limit: orthogonal classical states and `ε → ∞`.
pub fn cnot_control_probe() -> Result<ProbeReport> {
    probe_at(GcnotParams::from_mu(FRAC_PI_2, CNOT_LIMIT_MU)?, 0)
}

/// C-rank of a qubit input against the GCNOT classical pair.
pub fn gcnot_c_rank(theta: f64, input: &StateVector) -> Result<usize> {
    c_rank(input, &gcnot_classical_pair(theta)?)
}

/// Optical coherent-state overlap `⟨α|β⟩ = exp(−½[|α|² + |β|² − 2α*β])`.
pub fn coherent_overlap(alpha: C64, beta: C64) -> C64 {
    let exponent = (c(alpha.norm_sqr() + beta.norm_sqr(), 0.0) - alpha.conj() * beta * 2.0) * -0.5;
    exponent.exp()
}

/// Beamsplitter weights `(x, y) = (|r|², |t|²)` equivalent to a GCNOT with
/// parameter `epsilon` on two coherent states with real overlap `overlap`:
/// `overlap^x = (1+ε)·overlap` and `overlap^y = 1/(1+ε)`.
pub fn beamsplitter_params(overlap: f64, epsilon: f64) -> Result<(f64, f64)> {
    if !(overlap > 0.0 && overlap < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "overlap must lie in (0, 1), got {overlap}"
        )));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    let y = -(1.0 + epsilon).ln() / overlap.ln();
    let x = 1.0 - y;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "(1+eps)^-1 = {} is below the overlap {overlap}",
            1.0 / (1.0 + epsilon)
        )));
    }
    Ok((x, y))
}
