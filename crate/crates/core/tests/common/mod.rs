#![allow(dead_code)]

use std::collections::BTreeMap;

use fluctlab::channels::{haar_random_channel, random_unitary_mixture, KrausChannel};
use fluctlab::numerics::{diag, ComplexMatrix};
use fluctlab::random::{haar_unitary, random_hermitian, seeded_rng};
use fluctlab::states::Hamiltonian;
use fluctlab::thermo::Scenario;
use rand::Rng;

pub const BETAS: [f64; 3] = [0.2, 1.0, 5.0];

/// Random H, H', β and a Haar-dilated channel with 1-4 Kraus operators, d in 2..=5.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = seeded_rng(seed);
    let dim = rng.random_range(2..=5);
    let n_kraus = rng.random_range(1..=4);
    let beta = BETAS[(seed % 3) as usize];
    let h_i = Hamiltonian::new(random_hermitian(dim, &mut rng)).unwrap();
    let h_f = Hamiltonian::new(random_hermitian(dim, &mut rng)).unwrap();
    let ch = haar_random_channel(dim, n_kraus, rng.random());
    Scenario::new(format!("random-{seed}"), beta, h_i, h_f, ch).unwrap()
}

/// Same as [`random_scenario`] but with a random unitary mixture (unital).
pub fn random_unital_scenario(seed: u64) -> Scenario {
    let mut rng = seeded_rng(seed ^ 0x5eed_0000);
    let dim = rng.random_range(2..=5);
    let n = rng.random_range(1..=4);
    let beta = BETAS[(seed % 3) as usize];
    let h_i = Hamiltonian::new(random_hermitian(dim, &mut rng)).unwrap();
    let h_f = Hamiltonian::new(random_hermitian(dim, &mut rng)).unwrap();
    let ch = random_unitary_mixture(dim, n, rng.random());
    Scenario::new(format!("unital-{seed}"), beta, h_i, h_f, ch).unwrap()
}

/// `V diag(energies) V†` for a random unitary V, i.e. a rotated degenerate spectrum.
pub fn rotated_hamiltonian(energies: &[f64], seed: u64) -> Hamiltonian {
    let u = haar_unitary(energies.len(), &mut seeded_rng(seed));
    Hamiltonian::new(&u * diag(energies) * u.adjoint()).unwrap()
}

/// Scenarios whose Hamiltonians have degenerate levels and degenerate gaps.
pub fn degenerate_scenarios() -> Vec<Scenario> {
    let spectra: [&[f64]; 3] = [&[0.0, 1.0, 1.0, 2.0], &[0.0, 0.0, 1.0], &[-1.0, 0.0, 0.0, 1.0, 1.0]];
    let mut out = Vec::new();
    for (k, spec) in spectra.iter().enumerate() {
        for (j, &beta) in BETAS.iter().enumerate() {
            let seed = (10 * k + j) as u64;
            let d = spec.len();
            let h_diag = Hamiltonian::diagonal(spec).unwrap();
            let h_rot = rotated_hamiltonian(spec, seed + 900);
            let ch = haar_random_channel(d, 1 + j, seed + 100);
            out.push(
                Scenario::new(format!("degenerate-{k}-{j}"), beta, h_diag.clone(), h_diag, ch.clone()).unwrap(),
            );
            out.push(
                Scenario::new(format!("degenerate-rot-{k}-{j}"), beta, h_rot.clone(), h_rot, ch).unwrap(),
            );
        }
    }
    out
}

/// Independent brute-force TPM enumeration for diagonal Hamiltonians.
///
/// Works directly on matrix entries in the computational basis, keyed by the
/// gap rounded to 1e-9, with plain scalar arithmetic throughout. Shares no
/// code with the crate's distribution module.
pub struct TpmOracle {
    pub forward: BTreeMap<i64, f64>,
    pub backward_raw: BTreeMap<i64, f64>,
    pub gamma: f64,
    pub delta_u: f64,
    pub delta_f: f64,
    pub kl: f64,
    pub x: f64,
}

fn key(gap: f64) -> i64 {
    (gap * 1e9).round() as i64
}

fn boltzmann(energies: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let z: f64 = energies.iter().map(|e| (-beta * e).exp()).sum();
    (energies.iter().map(|e| (-beta * e).exp() / z).collect(), z)
}

pub fn tpm_oracle(ops: &[ComplexMatrix], e_initial: &[f64], e_final: &[f64], beta: f64) -> TpmOracle {
    let d = e_initial.len();
    let (p_init, z) = boltzmann(e_initial, beta);
    let (p_final, z_final) = boltzmann(e_final, beta);
    let mut forward = BTreeMap::new();
    let mut backward_raw = BTreeMap::new();
    let mut gamma = 0.0;
    for m in 0..d {
        for n in 0..d {
            let mut t = 0.0;
            for a in ops {
                let z = a[(n, m)];
                t += z.re * z.re + z.im * z.im;
            }
            let k = key(e_final[n] - e_initial[m]);
            *forward.entry(k).or_insert(0.0) += t * p_init[m];
            *backward_raw.entry(k).or_insert(0.0) += t * p_final[n];
            gamma += t * p_final[n];
        }
    }
    let delta_u = forward.iter().map(|(&k, &p)| k as f64 * 1e-9 * p).sum();
    let delta_f = -(z_final.ln() - z.ln()) / beta;
    let mut kl = 0.0;
    for (k, &pf) in &forward {
        if pf > 0.0 {
            kl += pf * (pf / (backward_raw[k] / gamma)).ln();
        }
    }
    TpmOracle {
        forward,
        backward_raw,
        gamma,
        delta_u,
        delta_f,
        kl,
        x: -gamma.ln() / beta,
    }
}

/// Parses `key = value` lines, ignoring `#` comments.
pub fn read_golden(text: &str) -> BTreeMap<String, f64> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (k, v) = l.split_once('=').expect("key = value");
            (k.trim().to_string(), v.trim().parse().expect("float"))
        })
        .collect()
}

pub fn channel_ops(ch: &KrausChannel) -> Vec<ComplexMatrix> {
    ch.ops().to_vec()
}
