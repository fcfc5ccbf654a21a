use nc2ent::gcnot::{
    beamsplitter_params, linspace, optimal_epsilon, output_entanglement, GcnotParams,
};
use nc2ent::linalg::{entanglement_entropy, schmidt_decompose, StateVector, C64};
use nc2ent::modesplit::{
    apply_tunneling, coherent_sector_probability, inject, project_sector, run_protocol_with_rng,
    sector_probabilities, ProtocolConfig,
};
use nc2ent::random::substream;
use nc2ent::symmetric::{coherent_state, haar_random_su, SymmetricState};
use nc2ent::{Error, Result};

fn basis_input(input: u8) -> Result<StateVector> {
    match input {
        0 => StateVector::from_real(&[1.0, 0.0]),
        1 => StateVector::from_real(&[0.0, 1.0]),
        _ => Err(Error::InvalidParameter(format!(
            "input must be 0 or 1, got {input}"
        ))),
    }
}

pub fn gcnot_surface(
    theta_min: f64,
    theta_max: f64,
    n_theta: usize,
    n_mu: usize,
    input: u8,
) -> Result<Vec<f64>> {
    let input = basis_input(input)?;
    let mut out = Vec::with_capacity(n_theta * n_mu);
    for theta in linspace(theta_min, theta_max, n_theta) {
        // mu = 0 is excluded (infinite epsilon)
        for k in 1..=n_mu {
            let mu = k as f64 / n_mu as f64;
            out.push(match GcnotParams::from_mu(theta, mu) {
                Ok(p) => output_entanglement(&p, &input)?,
                Err(_) => f64::NAN,
            });
        }
    }
    Ok(out)
}

pub fn gcnot_optimum(theta: f64, input: u8) -> Result<Vec<f64>> {
    let opt = optimal_epsilon(theta, &basis_input(input)?)?;
    Ok(vec![opt.mu, opt.epsilon, opt.ebits])
}

fn config(n: usize, nx: usize, r: f64, phi: f64, seed: u64) -> Result<ProtocolConfig> {
    if !(r.abs() <= 1.0) {
        return Err(Error::InvalidParameter(format!("|r| = {r} exceeds 1")));
    }
    if nx > n {
        return Err(Error::InvalidParameter(format!(
            "target {nx} exceeds N = {n}"
        )));
    }
    Ok(ProtocolConfig {
        r,
        t: (1.0 - r * r).sqrt(),
        phi,
        target: (nx, n - nx),
        max_rounds: 1,
        seed,
    })
}

fn random_input(k: usize, n: usize, superposition: bool, seed: u64) -> Result<SymmetricState> {
    let mut rng = substream(seed, u64::MAX);
    let a = coherent_state(&haar_random_su(k, &mut rng)?, n)?;
    if !superposition {
        return Ok(a);
    }
    let b = coherent_state(&haar_random_su(k, &mut rng)?, n)?;
    let one = C64::new(1.0, 0.0);
    SymmetricState::superposition(&[(one, &a), (one, &b)])
}

pub fn sector_distribution(
    k: usize,
    n: usize,
    r: f64,
    phi: f64,
    superposition: bool,
    seed: u64,
) -> Result<Vec<f64>> {
    let tunneling = config(n, 0, r, phi, seed)?.tunneling()?;
    let state = apply_tunneling(
        &inject(&random_input(k, n, superposition, seed)?),
        &tunneling,
    );
    // probabilities, then post-selected entropies (NaN for empty sectors)
    let mut out = vec![f64::NAN; 2 * (n + 1)];
    for (n_a, n_b, p) in sector_probabilities(&state) {
        out[n_a] = p;
        if let Ok(o) = project_sector(&state, n_a, n_b) {
            out[n + 1 + n_a] =
                entanglement_entropy(&schmidt_decompose(&o.state, o.cut.0, o.cut.1)?);
        }
    }
    Ok(out)
}

pub fn modesplit_frequency(
    k: usize,
    n: usize,
    nx: usize,
    r: f64,
    phi: f64,
    runs: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let cfg = config(n, nx, r, phi, seed)?;
    let tunneling = cfg.validate(n)?;
    let input = random_input(k, n, false, seed)?;
    let mut hits = 0usize;
    for run in 0..runs {
        hits += usize::from(
            run_protocol_with_rng(&input, &cfg, &mut substream(seed, run as u64))?.success,
        );
    }
    let freq = if runs == 0 {
        f64::NAN
    } else {
        hits as f64 / runs as f64
    };
    Ok(vec![
        freq,
        coherent_sector_probability(nx, n - nx, &tunneling),
    ])
}

pub fn beamsplitter_xy(overlap: f64, epsilon: f64) -> Result<Vec<f64>> {
    let (x, y) = beamsplitter_params(overlap, epsilon)?;
    Ok(vec![x, y])
}
