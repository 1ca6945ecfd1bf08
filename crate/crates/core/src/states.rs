//! Hamiltonians, density matrices, Gibbs states and entropies (natural log, nats).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    ensure_dim, ensure_square, hermitian_eig, hermiticity_deviation, identity, is_finite,
    max_abs_diff, symmetrize, trace_product_re, ComplexMatrix, SpectralDecomposition, EIGEN_CLAMP,
    KERNEL_TOL,
};

/// Hermitian energy operator with its spectrum cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: ComplexMatrix,
    spectrum: SpectralDecomposition,
}

impl Hamiltonian {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let spectrum = hermitian_eig(&matrix)?;
        Ok(Self {
            matrix: symmetrize(&matrix),
            spectrum,
        })
    }

    pub fn diagonal(energies: &[f64]) -> Result<Self> {
        Self::new(crate::numerics::diag(energies))
    }

    /// Builds the Hamiltonian from a chosen eigenbasis. Useful when the basis
    /// inside a degenerate eigenspace matters to the caller.
    pub fn from_spectrum(spectrum: SpectralDecomposition) -> Self {
        Self {
            matrix: spectrum.reconstruct(),
            spectrum,
        }
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn energies(&self) -> &[f64] {
        self.spectrum.eigenvalues()
    }

    /// Eigenvectors as columns, in the order of [`Self::energies`].
    pub fn basis(&self) -> &ComplexMatrix {
        self.spectrum.eigenvectors()
    }

    pub fn spectral_range(&self) -> f64 {
        self.spectrum.range()
    }

    /// `tr(ρ H)`.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        trace_product_re(rho.matrix(), &self.matrix)
    }
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        ensure_square(&matrix)?;
        if !is_finite(&matrix) {
            return Err(Error::NonFinite);
        }
        let herm = hermiticity_deviation(&matrix);
        if herm > KERNEL_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > KERNEL_TOL || tr.im.abs() > KERNEL_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}")));
        }
        let min = hermitian_eig(&matrix)?.eigenvalues()[0];
        if min < -KERNEL_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self(symmetrize(&matrix)))
    }

    /// Wraps a matrix already known to be a state (e.g. the output of a CPTP map).
    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self(symmetrize(&matrix))
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let v = ComplexMatrix::from_column_slice(psi.len(), 1, psi);
        Self::new(&v * v.adjoint())
    }

    /// `|k⟩⟨k|` in the computational basis.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(identity(dim).unscale(dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Diagonal of ρ in the given orthonormal basis: ⟨b_k|ρ|b_k⟩.
    pub fn populations_in(&self, basis: &ComplexMatrix) -> Vec<f64> {
        let rotated = basis.adjoint() * &self.0 * basis;
        (0..self.dim()).map(|k| rotated[(k, k)].re).collect()
    }

    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

/// Gibbs state `e^{-βH}/Z` of a Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    hamiltonian: Hamiltonian,
    beta: f64,
    state: DensityMatrix,
    populations: Vec<f64>,
    log_partition: f64,
    free_energy: f64,
}

pub fn gibbs_state(h: &Hamiltonian, beta: f64) -> Result<ThermalState> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidBeta(beta));
    }
    let energies = h.energies();
    let e_min = energies[0];
    let weights: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
    let shifted_z: f64 = weights.iter().sum();
    let populations: Vec<f64> = weights.iter().map(|w| w / shifted_z).collect();
    let log_partition = shifted_z.ln() - beta * e_min;
    let basis = h.basis();
    let n = h.dim();
    let scaled = ComplexMatrix::from_fn(n, n, |i, j| basis[(i, j)] * populations[j]);
    let state = DensityMatrix::new_unchecked(scaled * basis.adjoint());
    Ok(ThermalState {
        hamiltonian: h.clone(),
        beta,
        state,
        populations,
        log_partition,
        free_energy: -log_partition / beta,
    })
}

impl ThermalState {
    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Boltzmann weights in the order of the Hamiltonian's energies.
    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    pub fn partition_function(&self) -> f64 {
        self.log_partition.exp()
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn free_energy(&self) -> f64 {
        self.free_energy
    }

    pub fn internal_energy(&self) -> f64 {
        self.hamiltonian
            .energies()
            .iter()
            .zip(&self.populations)
            .map(|(e, p)| e * p)
            .sum()
    }

    /// Von Neumann entropy evaluated from the populations.
    pub fn entropy(&self) -> f64 {
        shannon(&self.populations)
    }

    /// `log ρ_eq = -βH - log Z`, formed exactly from the spectrum so that tiny
    /// populations never pass through a logarithm.
    pub fn log_state(&self) -> ComplexMatrix {
        let basis = self.hamiltonian.basis();
        let n = self.dim();
        let logs: Vec<f64> = self
            .hamiltonian
            .energies()
            .iter()
            .map(|&e| -self.beta * e - self.log_partition)
            .collect();
        let scaled = ComplexMatrix::from_fn(n, n, |i, j| basis[(i, j)] * logs[j]);
        symmetrize(&(scaled * basis.adjoint()))
    }
}

fn shannon(probs: &[f64]) -> f64 {
    probs
        .iter()
        .map(|&p| p.clamp(0.0, 1.0))
        .filter(|&p| p > EIGEN_CLAMP)
        .map(|p| -p * p.ln())
        .sum()
}

/// `-tr[ρ log ρ]` with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    // A valid state always decomposes.
    let spec = hermitian_eig(rho.matrix()).expect("density matrix is Hermitian");
    shannon(spec.eigenvalues())
}

/// Quantum relative entropy `S(ρ‖σ) = tr[ρ log ρ] - tr[ρ log σ]`.
///
/// Returns `SupportViolation` when ρ puts weight on σ's kernel, where the
/// relative entropy is infinite.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    ensure_dim(sigma.matrix(), rho.dim())?;
    let spec = hermitian_eig(sigma.matrix())?;
    let pops = rho.populations_in(spec.eigenvectors());
    let mut cross = 0.0;
    let mut outside = 0.0;
    for (&lambda, &p) in spec.eigenvalues().iter().zip(&pops) {
        if lambda > EIGEN_CLAMP {
            cross += p * lambda.ln();
        } else {
            outside += p.max(0.0);
        }
    }
    if outside > EIGEN_CLAMP {
        return Err(Error::SupportViolation { weight: outside });
    }
    Ok(-von_neumann_entropy(rho) - cross)
}

/// `S = -tr[ρ log ρ_eq] = S(ρ‖ρ_eq) + S_V(ρ)`, the entropy that satisfies
/// `tr[ρH] = F + S/β` for any state ρ.
pub fn nonequilibrium_entropy(rho: &DensityMatrix, reference: &ThermalState) -> Result<f64> {
    ensure_dim(rho.matrix(), reference.dim())?;
    Ok(-trace_product_re(rho.matrix(), &reference.log_state()))
}

/// `S(ρ‖ρ_eq)` using the exact thermal logarithm. Prefer this over
/// [`relative_entropy`] when the reference is a Gibbs state at large β.
pub fn relative_entropy_to_thermal(rho: &DensityMatrix, reference: &ThermalState) -> Result<f64> {
    Ok(nonequilibrium_entropy(rho, reference)? - von_neumann_entropy(rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, diag, real_matrix};
    use crate::random::{haar_unitary, random_hermitian, random_simplex, seeded_rng};

    const P0: f64 = 0.731_058_578_630_004_9;
    const P1: f64 = 0.268_941_421_369_995_1;

    fn qubit() -> Hamiltonian {
        Hamiltonian::diagonal(&[0.0, 1.0]).unwrap()
    }

    fn random_state(dim: usize, seed: u64) -> DensityMatrix {
        let mut rng = seeded_rng(seed);
        let u = haar_unitary(dim, &mut rng);
        let p = random_simplex(dim, &mut rng);
        DensityMatrix::new(&u * diag(&p) * u.adjoint()).unwrap()
    }

    #[test]
    fn gibbs_qubit_beta_one() {
        let t = gibbs_state(&qubit(), 1.0).unwrap();
        assert!((t.populations()[0] - P0).abs() < 1e-15);
        assert!((t.populations()[1] - P1).abs() < 1e-15);
        assert!((t.partition_function() - (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((t.free_energy() + t.log_partition()).abs() < 1e-15);
    }

    #[test]
    fn gibbs_high_temperature_limit() {
        let t = gibbs_state(&qubit(), 1e-12).unwrap();
        assert!((t.populations()[0] - 0.5).abs() < 1e-9);
        assert!((t.populations()[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gibbs_degenerate_is_maximally_mixed() {
        let h = Hamiltonian::diagonal(&[0.0, 0.0]).unwrap();
        for beta in [0.1, 1.0, 30.0] {
            let t = gibbs_state(&h, beta).unwrap();
            assert!(t.state().distance(&DensityMatrix::maximally_mixed(2)) < 1e-15);
        }
    }

    #[test]
    fn gibbs_rejects_bad_beta() {
        for beta in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(gibbs_state(&qubit(), beta), Err(Error::InvalidBeta(_))));
        }
    }

    #[test]
    fn gibbs_large_beta_does_not_overflow() {
        let h = Hamiltonian::diagonal(&[-500.0, 0.0, 500.0]).unwrap();
        let t = gibbs_state(&h, 10.0).unwrap();
        assert!((t.populations()[0] - 1.0).abs() < 1e-15);
        assert!(t.free_energy().is_finite());
        assert!((t.free_energy() + 500.0).abs() < 1e-9);
    }

    #[test]
    fn gibbs_populations_normalized_and_monotone() {
        let mut rng = seeded_rng(9);
        for k in 0..50 {
            let h = Hamiltonian::new(random_hermitian(2 + k % 6, &mut rng)).unwrap();
            let t = gibbs_state(&h, 0.2 + k as f64 * 0.1).unwrap();
            assert!((t.populations().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(t.populations().windows(2).all(|w| w[0] >= w[1]));
            let direct = crate::numerics::matrix_function(h.spectrum(), |e| (-t.beta() * e).exp())
                .unwrap()
                .unscale(t.partition_function());
            assert!(max_abs_diff(&direct, t.state().matrix()) < 1e-10);
        }
    }

    #[test]
    fn von_neumann_examples() {
        assert!(von_neumann_entropy(&DensityMatrix::basis_state(2, 0)).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((von_neumann_entropy(&mixed) - 2f64.ln()).abs() < 1e-15);
        let rho = DensityMatrix::new(diag(&[0.731059, 0.268941])).unwrap();
        // -Σ p ln p on the rounded populations
        assert!((von_neumann_entropy(&rho) - 0.582_203).abs() < 1e-5);
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = random_state(3, 1);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-12);

        let sigma = DensityMatrix::new(diag(&[0.731059, 0.268941])).unwrap();
        let s = relative_entropy(&DensityMatrix::basis_state(2, 0), &sigma).unwrap();
        assert!((s + 0.731059f64.ln()).abs() < 1e-12);
        assert!((s - 0.313262).abs() < 1e-6);

        let err = relative_entropy(&DensityMatrix::basis_state(2, 1), &DensityMatrix::basis_state(2, 0));
        assert!(matches!(err, Err(Error::SupportViolation { .. })));
    }

    #[test]
    fn klein_inequality() {
        for seed in 0..40 {
            let dim = 2 + (seed as usize) % 5;
            let rho = random_state(dim, seed);
            let sigma = random_state(dim, seed + 1000);
            let s = relative_entropy(&rho, &sigma).unwrap();
            assert!(s > 1e-8, "distinct states must have positive divergence, got {s}");
        }
    }

    #[test]
    fn nonequilibrium_entropy_examples() {
        let t = gibbs_state(&qubit(), 1.0).unwrap();
        let s_eq = nonequilibrium_entropy(t.state(), &t).unwrap();
        assert!((s_eq - von_neumann_entropy(t.state())).abs() < 1e-12);
        assert!((s_eq - t.entropy()).abs() < 1e-12);

        let s = nonequilibrium_entropy(&DensityMatrix::basis_state(2, 0), &t).unwrap();
        assert!((s + P0.ln()).abs() < 1e-14);

        let flat = gibbs_state(&Hamiltonian::diagonal(&[0.0, 0.0]).unwrap(), 3.0).unwrap();
        let s = nonequilibrium_entropy(&DensityMatrix::maximally_mixed(2), &flat).unwrap();
        assert!((s - 2f64.ln()).abs() < 1e-14);

        let wrong = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            nonequilibrium_entropy(&wrong, &t),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn helmholtz_identity_on_random_states() {
        let mut rng = seeded_rng(77);
        for seed in 0..60u64 {
            let dim = 2 + (seed as usize) % 6;
            let h = Hamiltonian::new(random_hermitian(dim, &mut rng)).unwrap();
            let beta = [0.2, 1.0, 5.0][seed as usize % 3];
            let t = gibbs_state(&h, beta).unwrap();
            let rho = random_state(dim, seed + 500);
            let s = nonequilibrium_entropy(&rho, &t).unwrap();
            let via_energy = beta * (h.expectation(&rho) - t.free_energy());
            assert!((s - via_energy).abs() < 1e-10);
            let sr = relative_entropy_to_thermal(&rho, &t).unwrap();
            let sr_generic = relative_entropy(&rho, t.state()).unwrap();
            assert!((sr - sr_generic).abs() < 1e-8);
        }
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(diag(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(diag(&[1.2, -0.2])).is_err());
        assert!(DensityMatrix::new(real_matrix(&[&[0.5, 0.5], &[0.0, 0.5]])).is_err());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
        assert!(von_neumann_entropy(&plus).abs() < 1e-12);
    }
}
