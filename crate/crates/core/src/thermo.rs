//! Thermodynamic bookkeeping for one open process.
//!
//! A [`Scenario`] fixes the initial Hamiltonian `H`, the final Hamiltonian
//! `H'`, the inverse temperature β and the channel. [`analyze`] computes the
//! energy change two ways, the free-energy change, γ and `X = -β⁻¹ log γ`, the
//! KL divergence between forward and renormalized backward distributions, the
//! excess energy, the entropy changes, and the residual of every identity
//! relating them.
//!
//! Heat and dissipated work are never reported separately; only their sum
//! (the excess energy) is determined by the state and the map.

use std::collections::BTreeMap;

use crate::channels::{apply, backward_of, is_unital, KrausChannel};
use crate::distributions::{
    backward_distribution_with, crooks_residual, exp_average, forward_distribution_with, gamma_of,
    kl_divergence, renormalize_backward, EnergyDistribution, DEFAULT_BIN_SCALE,
};
use crate::error::{Error, Result};
use crate::states::{
    gibbs_state, nonequilibrium_entropy, relative_entropy_to_thermal, von_neumann_entropy,
    DensityMatrix, Hamiltonian, ThermalState,
};

/// Initial Hamiltonian, final Hamiltonian, inverse temperature and channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub beta: f64,
    pub h_initial: Hamiltonian,
    pub h_final: Hamiltonian,
    pub channel: KrausChannel,
    /// Relative width used to merge nearly equal energy gaps.
    pub bin_scale: f64,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        beta: f64,
        h_initial: Hamiltonian,
        h_final: Hamiltonian,
        channel: KrausChannel,
    ) -> Result<Self> {
        let name = name.into();
        let check = || -> Result<()> {
            if !(beta.is_finite() && beta > 0.0) {
                return Err(Error::InvalidBeta(beta));
            }
            let d = h_initial.dim();
            for found in [h_final.dim(), channel.dim()] {
                if found != d {
                    return Err(Error::DimensionMismatch { expected: d, found });
                }
            }
            Ok(())
        };
        check().map_err(|e| e.in_scenario(&name))?;
        Ok(Self {
            name,
            beta,
            h_initial,
            h_final,
            channel,
            bin_scale: DEFAULT_BIN_SCALE,
        })
    }

    pub fn with_bin_scale(mut self, scale: f64) -> Self {
        self.bin_scale = scale;
        self
    }

    pub fn dim(&self) -> usize {
        self.h_initial.dim()
    }
}

pub const REPORT_FIELDS: &[&str] = &[
    "delta_u",
    "delta_u_moment",
    "delta_f",
    "gamma",
    "x",
    "kl",
    "excess_energy",
    "delta_s",
    "delta_s_v",
    "s_r_final",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationReport {
    /// `tr(H'ρ') - tr(Hρ_eq)`
    pub delta_u: f64,
    /// First moment of the forward distribution.
    pub delta_u_moment: f64,
    pub delta_f: f64,
    pub gamma: f64,
    pub x: f64,
    pub kl: f64,
    pub excess_energy: f64,
    /// `K + βX`
    pub delta_s: f64,
    /// `S_V(ρ') - S_V(ρ_eq)`, computed directly.
    pub delta_s_v: f64,
    pub s_r_final: f64,
    pub residuals: BTreeMap<String, f64>,
}

impl FluctuationReport {
    /// Scalar fields in [`REPORT_FIELDS`] order.
    pub fn fields(&self) -> [(&'static str, f64); 10] {
        [
            ("delta_u", self.delta_u),
            ("delta_u_moment", self.delta_u_moment),
            ("delta_f", self.delta_f),
            ("gamma", self.gamma),
            ("x", self.x),
            ("kl", self.kl),
            ("excess_energy", self.excess_energy),
            ("delta_s", self.delta_s),
            ("delta_s_v", self.delta_s_v),
            ("s_r_final", self.s_r_final),
        ]
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals.get(name).copied()
    }

    /// Largest residual; NaN if any residual is NaN.
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .values()
            .fold(0.0, |a: f64, &b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
    }

    /// Residuals at or above `threshold` (NaN counts as a violation).
    pub fn violations(&self, threshold: f64) -> Vec<(&str, f64)> {
        self.residuals
            .iter()
            .filter(|(_, &v)| v.is_nan() || v >= threshold)
            .map(|(k, &v)| (k.as_str(), v))
            .collect()
    }
}

/// Everything computed for a scenario.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub initial_eq: ThermalState,
    pub final_eq: ThermalState,
    /// `ρ' = Λ(ρ_eq)`
    pub final_state: DensityMatrix,
    pub unital: bool,
    pub forward: EnergyDistribution,
    /// `P̃_B`, unnormalized.
    pub backward_raw: EnergyDistribution,
    /// `P_B = P̃_B / γ`
    pub backward: EnergyDistribution,
    pub report: FluctuationReport,
}

/// `ΔU = tr(H'Λ(ρ_eq)) - tr(Hρ_eq)`.
pub fn internal_energy_change(ch: &KrausChannel, init: &ThermalState, h_final: &Hamiltonian) -> Result<f64> {
    let rho_final = apply(ch, init.state())?;
    crate::numerics::ensure_dim(h_final.matrix(), init.dim())?;
    Ok(h_final.expectation(&rho_final) - init.hamiltonian().expectation(init.state()))
}

/// `⟨E⟩_excess = β⁻¹K + X`.
pub fn excess_energy(kl: f64, x: f64, beta: f64) -> f64 {
    kl / beta + x
}

/// `ΔS = K + βX`.
pub fn entropy_change(kl: f64, x: f64, beta: f64) -> f64 {
    kl + beta * x
}

/// `X = -β⁻¹ log γ`.
pub fn x_of_gamma(gamma: f64, beta: f64) -> f64 {
    -gamma.ln() / beta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonNeumannChange {
    /// `S_V(ρ') - S_V(ρ_eq)`
    pub direct: f64,
    /// `K + βX - S(ρ'‖ρ'_eq)`
    pub via_identity: f64,
}

impl VonNeumannChange {
    pub fn residual(&self) -> f64 {
        (self.direct - self.via_identity).abs()
    }
}

/// Change of von Neumann entropy, both directly and through the fluctuation
/// quantities.
pub fn von_neumann_change(
    ch: &KrausChannel,
    init: &ThermalState,
    h_final: &Hamiltonian,
    final_eq: &ThermalState,
) -> Result<VonNeumannChange> {
    let beta = init.beta();
    let pf = forward_distribution_with(ch, init, h_final, DEFAULT_BIN_SCALE)?;
    let raw = backward_distribution_with(&backward_of(ch), final_eq, init.hamiltonian(), DEFAULT_BIN_SCALE)?;
    let pb = renormalize_backward(&raw)?;
    let kl = kl_divergence(&pf, &pb)?;
    let x = x_of_gamma(gamma_of(ch, final_eq), beta);
    let rho_final = apply(ch, init.state())?;
    let s_r = relative_entropy_to_thermal(&rho_final, final_eq)?;
    Ok(VonNeumannChange {
        direct: von_neumann_entropy(&rho_final) - init.entropy(),
        via_identity: entropy_change(kl, x, beta) - s_r,
    })
}

/// Runs the full pipeline for a scenario.
pub fn analyze(scenario: &Scenario) -> Result<Analysis> {
    analyze_inner(scenario).map_err(|e| e.in_scenario(&scenario.name))
}

pub fn build_report(scenario: &Scenario) -> Result<FluctuationReport> {
    analyze(scenario).map(|a| a.report)
}

fn analyze_inner(s: &Scenario) -> Result<Analysis> {
    let beta = s.beta;
    let ch = &s.channel;
    let initial_eq = gibbs_state(&s.h_initial, beta)?;
    let final_eq = gibbs_state(&s.h_final, beta)?;
    let final_state = apply(ch, initial_eq.state())?;

    let forward = forward_distribution_with(ch, &initial_eq, &s.h_final, s.bin_scale)?;
    let backward_raw = backward_distribution_with(&backward_of(ch), &final_eq, &s.h_initial, s.bin_scale)?;
    let backward = renormalize_backward(&backward_raw)?;

    let delta_u = s.h_final.expectation(&final_state) - initial_eq.internal_energy();
    let delta_u_moment = forward.first_moment();
    let delta_f = final_eq.free_energy() - initial_eq.free_energy();
    let gamma = gamma_of(ch, &final_eq);
    let x = x_of_gamma(gamma, beta);
    let kl = kl_divergence(&forward, &backward)?;
    let crooks = crooks_residual(&forward, &backward, beta, delta_f, x)?;
    let excess = excess_energy(kl, x, beta);
    let delta_s = entropy_change(kl, x, beta);
    let s_r_final = relative_entropy_to_thermal(&final_state, &final_eq)?;
    let delta_s_v = von_neumann_entropy(&final_state) - initial_eq.entropy();

    // Non-equilibrium entropy route: S(ρ') relative to ρ'_eq minus S(ρ_eq).
    let delta_s_noneq = nonequilibrium_entropy(&final_state, &final_eq)?
        - nonequilibrium_entropy(initial_eq.state(), &initial_eq)?;

    let mut residuals = BTreeMap::new();
    let mut put = |name: &str, v: f64| {
        residuals.insert(name.to_string(), v);
    };
    put("forward_norm", (forward.total_mass() - 1.0).abs());
    put("backward_mass_vs_gamma", (backward_raw.total_mass() - gamma).abs());
    put(
        "jarzynski_forward",
        (exp_average(&forward, -beta, beta * delta_f) - gamma).abs(),
    );
    put(
        "jarzynski_backward",
        (exp_average(&backward_raw, beta, -beta * delta_f) - 1.0).abs(),
    );
    put("crooks_max", crooks);
    put("energy_decomposition", (delta_u - kl / beta - x - delta_f).abs());
    put("entropy_law", (beta * (delta_u - delta_f) - delta_s).abs());
    put("von_neumann_identity", (delta_s_v - (delta_s - s_r_final)).abs());
    put("helmholtz", (delta_u - delta_s_noneq / beta - delta_f).abs());
    put("entropy_vs_nonequilibrium", (delta_s - delta_s_noneq).abs());
    put("moment_vs_trace", (delta_u - delta_u_moment).abs());
    put("gamma_vs_x", (gamma - (-beta * x).exp()).abs());

    let report = FluctuationReport {
        delta_u,
        delta_u_moment,
        delta_f,
        gamma,
        x,
        kl,
        excess_energy: excess,
        delta_s,
        delta_s_v,
        s_r_final,
        residuals,
    };
    Ok(Analysis {
        unital: is_unital(ch).unital,
        initial_eq,
        final_eq,
        final_state,
        forward,
        backward_raw,
        backward,
        report,
    })
}
