//! Two-mode bosonic simulation of the splitting protocol: tunneling between
//! modes A and B, particle-number measurement of both modes, and
//! repeat-until-success post-selection.
//!
//! A state with `N` particles over `K` internal levels in each of two modes is
//! stored as one block per sector `(N_A, N_B)`; block `(i_A, i_B)` is the
//! amplitude of Dicke state `i_A` in mode A times Dicke state `i_B` in mode B.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, fidelity, CMatrix, CVector, StateVector, C64, NORM_TOL};
use crate::random::substream;
use crate::symmetric::{apply_splitting, dicke_dim, factorial, multinomial, DickeBasis, SymmetricState};

/// Sectors below this probability cannot be post-selected.
pub const MIN_SECTOR_PROBABILITY: f64 = 1e-15;

type FockKey = (Vec<usize>, Vec<usize>);

fn binom_f(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    k: usize,
    n: usize,
    /// Indexed by `N_A`; shape `dicke_dim(K, N_A) × dicke_dim(K, N − N_A)`.
    blocks: Vec<CMatrix>,
}

impl TwoModeState {
    pub fn new(k: usize, n: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                found: blocks.len(),
            });
        }
        for (n_a, b) in blocks.iter().enumerate() {
            let (ra, rb) = (dicke_dim(k, n_a)?, dicke_dim(k, n - n_a)?);
            if b.shape() != (ra, rb) {
                return Err(Error::DimensionMismatch {
                    expected: ra * rb,
                    found: b.len(),
                });
            }
        }
        let state = Self { k, n, blocks };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(state)
    }

    pub fn levels(&self) -> usize {
        self.k
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn block(&self, n_a: usize) -> Option<&CMatrix> {
        self.blocks.get(n_a)
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    fn zeros(k: usize, n: usize) -> Result<Self> {
        let blocks = (0..=n)
            .map(|n_a| Ok(CMatrix::zeros(dicke_dim(k, n_a)?, dicke_dim(k, n - n_a)?)))
            .collect::<Result<_>>()?;
        Ok(Self { k, n, blocks })
    }

    fn to_fock(&self) -> BTreeMap<FockKey, C64> {
        let mut map = BTreeMap::new();
        for (n_a, block) in self.blocks.iter().enumerate() {
            let ba = DickeBasis::new(self.k, n_a).expect("validated");
            let bb = DickeBasis::new(self.k, self.n - n_a).expect("validated");
            for (ia, oa) in ba.occupations().iter().enumerate() {
                for (ib, ob) in bb.occupations().iter().enumerate() {
                    let z = block[(ia, ib)];
                    if z != c(0.0, 0.0) {
                        map.insert((oa.clone(), ob.clone()), z);
                    }
                }
            }
        }
        map
    }

    fn from_fock(k: usize, n: usize, map: &BTreeMap<FockKey, C64>) -> Result<Self> {
        let mut out = Self::zeros(k, n)?;
        let bases: Vec<_> = (0..=n)
            .map(|m| DickeBasis::new(k, m))
            .collect::<Result<_>>()?;
        for ((oa, ob), z) in map {
            let n_a: usize = oa.iter().sum();
            let ia = bases[n_a].index_of(oa).expect("occupation in basis");
            let ib = bases[n - n_a].index_of(ob).expect("occupation in basis");
            out.blocks[n_a][(ia, ib)] += *z;
        }
        Ok(out)
    }
}

/// Places the input in mode A with mode B empty.
pub fn inject(input: &SymmetricState) -> TwoModeState {
    let (k, n) = (input.levels(), input.particles());
    let mut state = TwoModeState::zeros(k, n).expect("input already validated");
    state.blocks[n] = CMatrix::from_column_slice(input.state().dim(), 1, input.state().amplitudes().as_slice());
    state
}

/// Single-particle mode rotation `a_j† → r a_j† + t b_j†`,
/// `b_j† → t* a_j† − r* b_j†`, identical for every internal level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tunneling {
    r: C64,
    t: C64,
}

impl Tunneling {
    pub fn new(r: C64, t: C64) -> Result<Self> {
        let total = r.norm_sqr() + t.norm_sqr();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "|r|² + |t|² = {total}, expected 1"
            )));
        }
        Ok(Self { r, t })
    }

    /// Real `r`, `t = |t| e^{iφ}`.
    pub fn from_polar(r: f64, t_abs: f64, phi: f64) -> Result<Self> {
        Self::new(c(r, 0.0), C64::from_polar(t_abs, phi))
    }

    pub fn balanced() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { r: c(h, 0.0), t: c(h, 0.0) }
    }

    pub fn r(&self) -> C64 {
        self.r
    }

    pub fn t(&self) -> C64 {
        self.t
    }

    /// Expansion of `|p⟩_a|q⟩_b` for one internal level into `|k⟩_a|p+q−k⟩_b`.
    fn level_coefficients(&self, p: usize, q: usize) -> Vec<C64> {
        let m = p + q;
        let (r, t) = (self.r, self.t);
        let (tc, mrc) = (t.conj(), -r.conj());
        let mut out = vec![c(0.0, 0.0); m + 1];
        for i in 0..=p {
            let left = r.powu(i as u32) * t.powu((p - i) as u32) * binom_f(p, i);
            for l in 0..=q {
                let right = tc.powu(l as u32) * mrc.powu((q - l) as u32) * binom_f(q, l);
                out[i + l] += left * right;
            }
        }
        let denom = factorial(p) * factorial(q);
        for (k, z) in out.iter_mut().enumerate() {
            *z *= (factorial(k) * factorial(m - k) / denom).sqrt();
        }
        out
    }
}

/// Applies the collective mode rotation level by level in the Fock basis.
pub fn apply_tunneling(state: &TwoModeState, tunneling: &Tunneling) -> TwoModeState {
    let mut current = state.to_fock();
    for level in 0..state.k {
        let mut next: BTreeMap<FockKey, C64> = BTreeMap::new();
        for ((oa, ob), z) in &current {
            let coeffs = tunneling.level_coefficients(oa[level], ob[level]);
            let m = oa[level] + ob[level];
            for (k, w) in coeffs.into_iter().enumerate() {
                if w == c(0.0, 0.0) {
                    continue;
                }
                let (mut na, mut nb) = (oa.clone(), ob.clone());
                na[level] = k;
                nb[level] = m - k;
                *next.entry((na, nb)).or_insert(c(0.0, 0.0)) += z * w;
            }
        }
        current = next;
    }
    TwoModeState::from_fock(state.k, state.n, &current).expect("same particle content")
}

/// `(N_A, N_B, probability)` from `N_A = N` down to `N_A = 0`.
pub fn sector_probabilities(state: &TwoModeState) -> Vec<(usize, usize, f64)> {
    (0..=state.n)
        .rev()
        .map(|n_a| (n_a, state.n - n_a, state.blocks[n_a].norm_squared()))
        .collect()
}

/// `|C_{N_A,N_B}|² = binom(N, N_A) |r|^{2N_A} |t|^{2N_B}` for coherent input.
pub fn coherent_sector_probability(n_a: usize, n_b: usize, tunneling: &Tunneling) -> f64 {
    binom_f(n_a + n_b, n_a)
        * tunneling.r.norm_sqr().powi(n_a as i32)
        * tunneling.t.norm_sqr().powi(n_b as i32)
}

/// Post-selected outcome of a number measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOutcome {
    pub n_a: usize,
    pub n_b: usize,
    pub probability: f64,
    /// Normalized block as a bipartite vector, index `i_A · dim_B + i_B`.
    pub state: StateVector,
    pub cut: (usize, usize),
}

pub fn project_sector(state: &TwoModeState, n_a: usize, n_b: usize) -> Result<SectorOutcome> {
    if n_a + n_b != state.n {
        return Err(Error::InvalidParameter(format!(
            "sector ({n_a}, {n_b}) does not hold {} particles",
            state.n
        )));
    }
    let block = &state.blocks[n_a];
    let probability = block.norm_squared();
    if probability <= MIN_SECTOR_PROBABILITY {
        return Err(Error::ZeroProbabilitySector { n_a, n_b });
    }
    let flat = CVector::from_iterator(
        block.len(),
        (0..block.nrows()).flat_map(|i| (0..block.ncols()).map(move |j| block[(i, j)])),
    );
    Ok(SectorOutcome {
        n_a,
        n_b,
        probability,
        state: StateVector::normalize(flat)?,
        cut: block.shape(),
    })
}

/// Two-mode state left after observing sector `(n_a, ·)`.
fn collapse(state: &TwoModeState, n_a: usize) -> TwoModeState {
    let mut out = TwoModeState::zeros(state.k, state.n).expect("validated");
    let block = &state.blocks[n_a];
    out.blocks[n_a] = block.unscale(block.norm());
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub r: f64,
    pub t: f64,
    #[serde(default)]
    pub phi: f64,
    pub target: (usize, usize),
    pub max_rounds: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn balanced(target: (usize, usize), max_rounds: usize, seed: u64) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            r: h,
            t: h,
            phi: 0.0,
            target,
            max_rounds,
            seed,
        }
    }

    pub fn tunneling(&self) -> Result<Tunneling> {
        let t = Tunneling::from_polar(self.r, self.t, self.phi)?;
        let r_abs = self.r.abs();
        if r_abs <= NORM_TOL || r_abs >= 1.0 - NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "|r| = {r_abs} must lie strictly between 0 and 1"
            )));
        }
        Ok(t)
    }

    pub fn validate(&self, n: usize) -> Result<Tunneling> {
        let (n_x, n_y) = self.target;
        if n_x == 0 || n_y == 0 || n_x + n_y != n {
            return Err(Error::InvalidParameter(format!(
                "invalid target split {n_x}:{n_y} of N = {n}"
            )));
        }
        self.tunneling()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub outcome: (usize, usize),
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTrace {
    pub rounds: Vec<RoundRecord>,
    pub success: bool,
    pub final_state: TwoModeState,
    /// Fidelity of the post-selected state with `Λ|ψ_in⟩`; set on success.
    pub fidelity: Option<f64>,
}

impl ProtocolTrace {
    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }
}

fn sample_sector<R: Rng + ?Sized>(probs: &[(usize, usize, f64)], rng: &mut R) -> (usize, usize, f64) {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(a, b, p) in probs {
        acc += p;
        if u < acc && p > MIN_SECTOR_PROBABILITY {
            return (a, b, p);
        }
    }
    *probs
        .iter()
        .rev()
        .find(|s| s.2 > MIN_SECTOR_PROBABILITY)
        .expect("normalized state has a populated sector")
}

/// Runs the protocol with the generator seeded from `cfg.seed`.
pub fn run_protocol(input: &SymmetricState, cfg: &ProtocolConfig) -> Result<ProtocolTrace> {
    run_protocol_with_rng(input, cfg, &mut substream(cfg.seed, 0))
}

/// Tunnel, measure, stop on the target sector, otherwise tunnel the
/// post-measurement state again, up to `max_rounds` rounds.
pub fn run_protocol_with_rng<R: Rng + ?Sized>(
    input: &SymmetricState,
    cfg: &ProtocolConfig,
    rng: &mut R,
) -> Result<ProtocolTrace> {
    let tunneling = cfg.validate(input.particles())?;
    let mut state = inject(input);
    let mut rounds = Vec::new();
    for round in 1..=cfg.max_rounds {
        let tunneled = apply_tunneling(&state, &tunneling);
        let probs = sector_probabilities(&tunneled);
        let (n_a, n_b, p) = sample_sector(&probs, rng);
        rounds.push(RoundRecord {
            round,
            outcome: (n_a, n_b),
            probability: p,
        });
        state = collapse(&tunneled, n_a);
        if (n_a, n_b) == cfg.target {
            let outcome = project_sector(&state, n_a, n_b)?;
            let (expected, _) = apply_splitting(input, n_a, n_b)?;
            return Ok(ProtocolTrace {
                rounds,
                success: true,
                final_state: state,
                fidelity: Some(fidelity(&outcome.state, &expected)?),
            });
        }
    }
    Ok(ProtocolTrace {
        rounds,
        success: false,
        final_state: state,
        fidelity: None,
    })
}

/// Independent runs; run `i` uses stream `i` of `cfg.seed`.
pub fn run_batch(input: &SymmetricState, cfg: &ProtocolConfig, runs: usize) -> Result<Vec<ProtocolTrace>> {
    cfg.validate(input.particles())?;
    (0..runs)
        .map(|i| run_protocol_with_rng(input, cfg, &mut substream(cfg.seed, i as u64)))
        .collect()
}

/// Largest `(2K)^N` accepted by [`tensor_power_tunneling`].
pub const ORACLE_MAX_DIM: usize = 1 << 16;

/// Independent first-quantized route for cross-checking: embed the Fock
/// state into `(C^{2K})^⊗N`, rotate every particle, and read back sector
/// blocks. Single-particle index is `mode · K + level`.
pub fn tensor_power_tunneling(state: &TwoModeState, tunneling: &Tunneling) -> Result<TwoModeState> {
    let (k, n) = (state.k, state.n);
    let d = 2 * k;
    let total = (d as u64).pow(n as u32);
    if total > ORACLE_MAX_DIM as u64 {
        return Err(Error::SizeCap(format!("(2K)^N = {total} exceeds {ORACLE_MAX_DIM}")));
    }
    let total = total as usize;
    let counts_of = |word: usize| {
        let mut counts = vec![0usize; d];
        let mut w = word;
        for _ in 0..n {
            counts[w % d] += 1;
            w /= d;
        }
        counts
    };
    let split = |counts: &[usize]| (counts[..k].to_vec(), counts[k..].to_vec());
    let fock = state.to_fock();
    let mut v = CVector::zeros(total);
    for word in 0..total {
        let counts = counts_of(word);
        if let Some(z) = fock.get(&split(&counts)) {
            v[word] = z / multinomial(&counts).sqrt();
        }
    }
    let (r, t) = (tunneling.r, tunneling.t);
    let mut single = CMatrix::zeros(d, d);
    for j in 0..k {
        single[(j, j)] = r;
        single[(k + j, j)] = t;
        single[(j, k + j)] = t.conj();
        single[(k + j, k + j)] = -r.conj();
    }
    for particle in 0..n {
        let stride = d.pow(particle as u32);
        let mut next = CVector::zeros(total);
        for word in 0..total {
            let digit = (word / stride) % d;
            let base = word - digit * stride;
            for out in 0..d {
                next[base + out * stride] += single[(out, digit)] * v[word];
            }
        }
        v = next;
    }
    let mut map: BTreeMap<FockKey, C64> = BTreeMap::new();
    for word in 0..total {
        let counts = counts_of(word);
        let w = v[word] / multinomial(&counts).sqrt();
        *map.entry(split(&counts)).or_insert(c(0.0, 0.0)) += w;
    }
    TwoModeState::from_fock(k, n, &map)
}

/// Largest entry-wise difference between two states with equal `K`, `N`.
pub fn max_block_difference(a: &TwoModeState, b: &TwoModeState) -> Result<f64> {
    if a.k != b.k || a.n != b.n {
        return Err(Error::InvalidParameter("states have different K or N".into()));
    }
    Ok(a.blocks
        .iter()
        .zip(&b.blocks)
        .map(|(x, y)| (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_state;
    use crate::symmetric::{coherent_state, haar_random_su, SuUnitary};

    fn max_block_diff(a: &TwoModeState, b: &TwoModeState) -> f64 {
        max_block_difference(a, b).unwrap()
    }

    fn superposition(k: usize, n: usize, seed: u64) -> SymmetricState {
        let mut rng = substream(seed, 0);
        let a = coherent_state(&haar_random_su(k, &mut rng).unwrap(), n).unwrap();
        let b = coherent_state(&haar_random_su(k, &mut rng).unwrap(), n).unwrap();
        SymmetricState::superposition(&[(c(0.8, 0.0), &a), (c(0.0, 0.6), &b)]).unwrap()
    }

    #[test]
    fn injection_fills_sector_n_zero() {
        let u = haar_random_su(3, &mut substream(50, 0)).unwrap();
        let s = coherent_state(&u, 3).unwrap();
        let injected = inject(&s);
        let probs = sector_probabilities(&injected);
        assert_eq!(probs[0], (3, 0, probs[0].2));
        assert!((probs[0].2 - 1.0).abs() < 1e-12);
        assert!(probs[1..].iter().all(|p| p.2 == 0.0));
        let block = injected.block(3).unwrap();
        for (i, z) in s.state().amplitudes().iter().enumerate() {
            assert_eq!(block[(i, 0)], *z);
        }
        assert!(TwoModeState::new(3, 3, injected.blocks.clone()).is_ok());
    }

    #[test]
    fn identity_tunneling() {
        let s = superposition(2, 3, 51);
        let t = Tunneling::new(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let out = apply_tunneling(&inject(&s), &t);
        assert!(max_block_diff(&out, &inject(&s)) < 1e-15);
        assert!(Tunneling::new(c(0.9, 0.0), c(0.9, 0.0)).is_err());
    }

    #[test]
    fn balanced_two_particle_weights() {
        let u = haar_random_su(2, &mut substream(52, 0)).unwrap();
        let out = apply_tunneling(&inject(&coherent_state(&u, 2).unwrap()), &Tunneling::balanced());
        let probs: Vec<f64> = sector_probabilities(&out).iter().map(|p| p.2).collect();
        for (p, e) in probs.iter().zip([0.25, 0.5, 0.25]) {
            assert!((p - e).abs() < 1e-12);
        }
    }

    #[test]
    fn tunneling_preserves_norm_on_arbitrary_states() {
        let mut rng = substream(53, 0);
        for (k, n) in [(2, 4), (3, 3), (2, 6)] {
            let blocks = (0..=n)
                .map(|na| {
                    let (ra, rb) = (dicke_dim(k, na).unwrap(), dicke_dim(k, n - na).unwrap());
                    let v = random_state(ra * rb, &mut rng);
                    CMatrix::from_column_slice(ra, rb, v.amplitudes().as_slice()).unscale(((n + 1) as f64).sqrt())
                })
                .collect();
            let state = TwoModeState::new(k, n, blocks).unwrap();
            let t = Tunneling::from_polar(0.6, 0.8, 0.7).unwrap();
            let out = apply_tunneling(&state, &t);
            assert!((out.norm() - 1.0).abs() < 1e-12);
            let total: f64 = sector_probabilities(&out).iter().map(|p| p.2).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_sector_weights_match_binomial() {
        let mut rng = substream(54, 0);
        let t = Tunneling::from_polar(0.6, 0.8, 1.3).unwrap();
        for n in 1..=6 {
            let u = haar_random_su(2, &mut rng).unwrap();
            let out = apply_tunneling(&inject(&coherent_state(&u, n).unwrap()), &t);
            for (na, nb, p) in sector_probabilities(&out) {
                assert!((p - coherent_sector_probability(na, nb, &t)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn coherent_sectors_are_product_coherent() {
        let mut rng = substream(55, 0);
        let u = haar_random_su(3, &mut rng).unwrap();
        let out = apply_tunneling(&inject(&coherent_state(&u, 4).unwrap()), &Tunneling::balanced());
        for na in 1..4 {
            let o = project_sector(&out, na, 4 - na).unwrap();
            let expected = coherent_state(&u, na).unwrap().state().tensor(coherent_state(&u, 4 - na).unwrap().state());
            assert!(fidelity(&o.state, &expected).unwrap() >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn superposition_sector_matches_splitting_isometry() {
        let s = superposition(2, 3, 56);
        let out = apply_tunneling(&inject(&s), &Tunneling::from_polar(0.5, 0.75f64.sqrt(), 0.4).unwrap());
        let o = project_sector(&out, 1, 2).unwrap();
        let (expected, cut) = apply_splitting(&s, 1, 2).unwrap();
        assert_eq!(o.cut, cut);
        assert!(fidelity(&o.state, &expected).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn zero_sector_is_rejected() {
        let s = coherent_state(&SuUnitary::identity(2).unwrap(), 2).unwrap();
        assert_eq!(
            project_sector(&inject(&s), 1, 1),
            Err(Error::ZeroProbabilitySector { n_a: 1, n_b: 1 })
        );
        assert!(project_sector(&inject(&s), 1, 2).is_err());
    }

    #[test]
    fn sector_simulation_matches_first_quantized_oracle() {
        let t = Tunneling::from_polar(0.6, 0.8, 0.9).unwrap();
        for n in 1..=6 {
            let s = superposition(2, n, 100 + n as u64);
            let once = apply_tunneling(&inject(&s), &t);
            assert!(max_block_diff(&once, &tensor_power_tunneling(&inject(&s), &t).unwrap()) < 1e-10);
            // both modes populated
            let t2 = Tunneling::from_polar(0.3, 0.91f64.sqrt(), -0.2).unwrap();
            let twice = apply_tunneling(&once, &t2);
            assert!(max_block_diff(&twice, &tensor_power_tunneling(&once, &t2).unwrap()) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn oracle_is_size_capped() {
        let s = coherent_state(&SuUnitary::identity(3).unwrap(), 7).unwrap();
        assert!(matches!(tensor_power_tunneling(&inject(&s), &Tunneling::balanced()), Err(Error::SizeCap(_))));
    }

    #[test]
    fn config_validation() {
        let s = coherent_state(&SuUnitary::identity(2).unwrap(), 3).unwrap();
        let mut cfg = ProtocolConfig::balanced((1, 2), 5, 0);
        assert!(run_protocol(&s, &cfg).is_ok());
        cfg.target = (0, 3);
        assert!(run_protocol(&s, &cfg).is_err());
        cfg.target = (2, 2);
        assert!(run_protocol(&s, &cfg).is_err());
        let bad = ProtocolConfig { r: 1.0, t: 0.0, ..ProtocolConfig::balanced((1, 2), 5, 0) };
        assert!(run_protocol(&s, &bad).is_err());
        let bad = ProtocolConfig { r: 0.0, t: 1.0, ..bad };
        assert!(run_protocol(&s, &bad).is_err());
    }

    #[test]
    fn zero_rounds_fail_immediately() {
        let s = coherent_state(&SuUnitary::identity(2).unwrap(), 2).unwrap();
        let trace = run_protocol(&s, &ProtocolConfig::balanced((1, 1), 0, 3)).unwrap();
        assert!(!trace.success);
        assert_eq!(trace.round_count(), 0);
        assert_eq!(trace.fidelity, None);
        assert_eq!(trace.final_state, inject(&s));
    }

    #[test]
    fn superposition_successes_match_isometry() {
        let s = superposition(2, 3, 58);
        let cfg = ProtocolConfig::balanced((1, 2), 20, 9);
        let traces = run_batch(&s, &cfg, 200).unwrap();
        let successes: Vec<_> = traces.iter().filter(|t| t.success).collect();
        assert!(!successes.is_empty());
        assert!(successes.iter().any(|t| t.round_count() > 1));
        for t in successes {
            assert!(t.fidelity.unwrap() >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn failed_rounds_keep_coherent_structure() {
        let u = haar_random_su(2, &mut substream(59, 0)).unwrap();
        let s = coherent_state(&u, 4).unwrap();
        let cfg = ProtocolConfig::balanced((2, 2), 1, 0);
        let mut checked = 0;
        for trace in run_batch(&s, &cfg, 50).unwrap().into_iter().filter(|t| !t.success) {
            let (na, nb) = trace.rounds[0].outcome;
            let o = project_sector(&trace.final_state, na, nb).unwrap();
            let expected = coherent_state(&u, na).unwrap().state().tensor(coherent_state(&u, nb).unwrap().state());
            assert!(fidelity(&o.state, &expected).unwrap() >= 1.0 - 1e-10);
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn first_round_frequency_within_three_sigma() {
        let s = coherent_state(&haar_random_su(2, &mut substream(60, 0)).unwrap(), 2).unwrap();
        let cfg = ProtocolConfig::balanced((1, 1), 1, 11);
        let runs = 2000;
        let hits = run_batch(&s, &cfg, runs).unwrap().iter().filter(|t| t.success).count();
        let p = 0.5;
        let sigma = (p * (1.0 - p) / runs as f64).sqrt();
        assert!((hits as f64 / runs as f64 - p).abs() < 3.0 * sigma);
    }
}
