//! Two-point-measurement energy-change distributions.
//!
//! The forward process measures `H` in its eigenbasis, applies the channel,
//! then measures `H'`. Each transition `m → n` contributes a δ-atom at
//! `ΔU = E'_n - E_m`. The backward process starts from the Gibbs state of `H'`,
//! applies `ρ' ↦ Σ B_l† ρ' B_l` and measures `H`; its atoms are stored on the
//! same `ΔU = E'_n - E_m` axis so forward and backward line up atom for atom.
//!
//! Atoms closer than the bin tolerance are merged. Bins are formed from the
//! gap values alone, never from the masses, so both directions share the same
//! bins.

use nalgebra::DMatrix;

use crate::channels::{BackwardChannel, KrausChannel};
use crate::error::{Error, Result};
use crate::numerics::{ensure_dim, trace_product_re, ComplexMatrix};
use crate::states::{Hamiltonian, ThermalState};

/// Masses below this are treated as absent.
pub const ABSENT_MASS: f64 = 1e-14;
/// Masses above this are treated as present.
pub const PRESENT_MASS: f64 = 1e-12;
/// Default relative bin width.
pub const DEFAULT_BIN_SCALE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub delta_u: f64,
    pub mass: f64,
}

/// Finite list of δ-atoms sorted by `delta_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDistribution {
    atoms: Vec<Atom>,
    total_mass: f64,
    bin_tolerance: f64,
}

impl EnergyDistribution {
    /// Builds a distribution from raw atoms, merging atoms within `bin_tolerance`
    /// and dropping absent ones.
    pub fn from_atoms(mut raw: Vec<Atom>, bin_tolerance: f64) -> Self {
        raw.sort_by(|a, b| a.delta_u.total_cmp(&b.delta_u));
        let positions: Vec<f64> = raw.iter().map(|a| a.delta_u).collect();
        let masses: Vec<f64> = raw.iter().map(|a| a.mass).collect();
        let bins = cluster_sorted(&positions, bin_tolerance);
        Self::from_bins(&bins, |k| masses[k], bin_tolerance)
    }

    fn from_bins(bins: &[Bin], mass_of: impl Fn(usize) -> f64, bin_tolerance: f64) -> Self {
        let atoms: Vec<Atom> = bins
            .iter()
            .map(|bin| Atom {
                delta_u: bin.position,
                mass: bin.members.iter().map(|&k| mass_of(k)).sum::<f64>().max(0.0),
            })
            .filter(|a| a.mass >= ABSENT_MASS)
            .collect();
        let total_mass = atoms.iter().map(|a| a.mass).sum();
        Self {
            atoms,
            total_mass,
            bin_tolerance,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn bin_tolerance(&self) -> f64 {
        self.bin_tolerance
    }

    /// `Σ ΔU · mass`.
    pub fn first_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.delta_u * a.mass).sum()
    }

    /// Mass of the atom within the bin tolerance of `delta_u`, or 0.
    pub fn mass_at(&self, delta_u: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| (a.delta_u - delta_u).abs() <= self.bin_tolerance)
            .map_or(0.0, |a| a.mass)
    }
}

/// Transition data for the forward measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    /// `probs[(n, m)] = p(n|m) = Σ_l |⟨E'_n|A_l|E_m⟩|²`
    pub probs: DMatrix<f64>,
    /// `⟨E_m|ρ_eq|E_m⟩`
    pub initial_pops: Vec<f64>,
    /// `gaps[(n, m)] = E'_n - E_m`
    pub gaps: DMatrix<f64>,
}

impl TransitionTable {
    pub fn new(ch: &KrausChannel, init: &ThermalState, h_final: &Hamiltonian) -> Result<Self> {
        let d = init.dim();
        ensure_dim(h_final.matrix(), d)?;
        if ch.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: ch.dim(),
            });
        }
        let h_initial = init.hamiltonian();
        Ok(Self {
            probs: transition_weights(ch.ops(), h_initial.basis(), h_final.basis()),
            initial_pops: init.populations().to_vec(),
            gaps: gap_matrix(h_initial, h_final),
        })
    }

    /// Largest deviation of a column sum of `probs` from 1.
    pub fn column_sum_deviation(&self) -> f64 {
        self.probs
            .column_iter()
            .map(|col| (col.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `w[(n, m)] = Σ_l |⟨out_n|K_l|in_m⟩|²`.
fn transition_weights(ops: &[ComplexMatrix], basis_in: &ComplexMatrix, basis_out: &ComplexMatrix) -> DMatrix<f64> {
    let d = basis_in.nrows();
    let mut w = DMatrix::<f64>::zeros(d, d);
    let out_dag = basis_out.adjoint();
    for op in ops {
        let elements = &out_dag * op * basis_in;
        for n in 0..d {
            for m in 0..d {
                w[(n, m)] += elements[(n, m)].norm_sqr();
            }
        }
    }
    w
}

fn gap_matrix(h_initial: &Hamiltonian, h_final: &Hamiltonian) -> DMatrix<f64> {
    let e = h_initial.energies();
    let e_final = h_final.energies();
    DMatrix::from_fn(e_final.len(), e.len(), |n, m| e_final[n] - e[m])
}

/// `scale · max(1, range(H) + range(H'))`.
pub fn bin_tolerance(h_initial: &Hamiltonian, h_final: &Hamiltonian, scale: f64) -> f64 {
    scale * (h_initial.spectral_range() + h_final.spectral_range()).max(1.0)
}

struct Bin {
    position: f64,
    members: Vec<usize>,
}

/// Single-linkage clustering of sorted values: neighbours within `tol` share a bin.
/// The bin position is the plain mean of its members.
fn cluster_sorted(values: &[f64], tol: f64) -> Vec<Bin> {
    let mut bins: Vec<Bin> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (k, &v) in values.iter().enumerate() {
        match bins.last_mut() {
            Some(bin) if v - last <= tol => bin.members.push(k),
            _ => bins.push(Bin {
                position: 0.0,
                members: vec![k],
            }),
        }
        last = v;
    }
    for bin in &mut bins {
        bin.position = bin.members.iter().map(|&k| values[k]).sum::<f64>() / bin.members.len() as f64;
    }
    bins
}

/// Bins the `(n, m)` gaps; member indices address `gaps` in column-major order.
fn bin_gaps(gaps: &DMatrix<f64>, tol: f64) -> (Vec<Bin>, Vec<usize>) {
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    order.sort_by(|&a, &b| gaps[a].total_cmp(&gaps[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&k| gaps[k]).collect();
    (cluster_sorted(&sorted, tol), order)
}

fn distribution_from_weights(gaps: &DMatrix<f64>, weights: &DMatrix<f64>, tol: f64) -> EnergyDistribution {
    let (bins, order) = bin_gaps(gaps, tol);
    EnergyDistribution::from_bins(&bins, |k| weights[order[k]], tol)
}

/// Forward energy-change distribution `P_F(ΔU)` with the default bin scale.
pub fn forward_distribution(
    ch: &KrausChannel,
    init: &ThermalState,
    h_final: &Hamiltonian,
) -> Result<EnergyDistribution> {
    forward_distribution_with(ch, init, h_final, DEFAULT_BIN_SCALE)
}

pub fn forward_distribution_with(
    ch: &KrausChannel,
    init: &ThermalState,
    h_final: &Hamiltonian,
    bin_scale: f64,
) -> Result<EnergyDistribution> {
    let table = TransitionTable::new(ch, init, h_final)?;
    let d = init.dim();
    let weights = DMatrix::from_fn(d, d, |n, m| table.probs[(n, m)] * table.initial_pops[m]);
    let tol = bin_tolerance(init.hamiltonian(), h_final, bin_scale);
    Ok(distribution_from_weights(&table.gaps, &weights, tol))
}

/// Unnormalized backward distribution `P̃_B(-ΔU)`, stored at `ΔU = E'_n - E_m`.
/// Its total mass is `tr[Σ B_l B_l† ρ'_eq]`.
pub fn backward_distribution(
    b: &BackwardChannel,
    final_eq: &ThermalState,
    h_initial: &Hamiltonian,
) -> Result<EnergyDistribution> {
    backward_distribution_with(b, final_eq, h_initial, DEFAULT_BIN_SCALE)
}

pub fn backward_distribution_with(
    b: &BackwardChannel,
    final_eq: &ThermalState,
    h_initial: &Hamiltonian,
    bin_scale: f64,
) -> Result<EnergyDistribution> {
    let d = final_eq.dim();
    ensure_dim(h_initial.matrix(), d)?;
    if b.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: b.dim(),
        });
    }
    let h_final = final_eq.hamiltonian();
    // ⟨E_m|B_l†|E'_n⟩⟨E'_n|B_l|E_m⟩ = |⟨E'_n|B_l|E_m⟩|²
    let probs = transition_weights(b.ops(), h_initial.basis(), h_final.basis());
    let pops = final_eq.populations();
    let weights = DMatrix::from_fn(d, d, |n, m| probs[(n, m)] * pops[n]);
    let gaps = gap_matrix(h_initial, h_final);
    let tol = bin_tolerance(h_initial, h_final, bin_scale);
    Ok(distribution_from_weights(&gaps, &weights, tol))
}

/// `γ = tr[Σ_l A_l A_l† ρ'_eq]`.
pub fn gamma_of(ch: &KrausChannel, final_eq: &ThermalState) -> f64 {
    trace_product_re(&ch.unitality_operator(), final_eq.state().matrix())
}

/// `P_B = P̃_B / γ`.
pub fn renormalize_backward(p: &EnergyDistribution) -> Result<EnergyDistribution> {
    if p.total_mass.is_nan() || p.total_mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let atoms: Vec<Atom> = p
        .atoms
        .iter()
        .map(|a| Atom {
            delta_u: a.delta_u,
            mass: a.mass / p.total_mass,
        })
        .collect();
    let total_mass = atoms.iter().map(|a| a.mass).sum();
    Ok(EnergyDistribution {
        atoms,
        total_mass,
        bin_tolerance: p.bin_tolerance,
    })
}

/// `Σ mass · exp(coefficient · ΔU + offset)`.
pub fn exp_average(p: &EnergyDistribution, coefficient: f64, offset: f64) -> f64 {
    p.atoms
        .iter()
        .map(|a| a.mass * (coefficient * a.delta_u + offset).exp())
        .sum()
}

/// Pairs atoms of two distributions by position. Unmatched atoms pair with zero mass.
fn matched_atoms(a: &EnergyDistribution, b: &EnergyDistribution) -> Vec<(f64, f64, f64)> {
    let tol = a.bin_tolerance.max(b.bin_tolerance);
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.atoms.len().max(b.atoms.len()));
    while i < a.atoms.len() || j < b.atoms.len() {
        match (a.atoms.get(i), b.atoms.get(j)) {
            (Some(x), Some(y)) if (x.delta_u - y.delta_u).abs() <= tol => {
                out.push((x.delta_u, x.mass, y.mass));
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.delta_u < y.delta_u => {
                out.push((x.delta_u, x.mass, 0.0));
                i += 1;
            }
            (Some(_), Some(y)) | (None, Some(y)) => {
                out.push((y.delta_u, 0.0, y.mass));
                j += 1;
            }
            (Some(x), None) => {
                out.push((x.delta_u, x.mass, 0.0));
                i += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

fn one_sided(forward: f64, backward: f64) -> bool {
    (forward > PRESENT_MASS && backward < ABSENT_MASS) || (backward > PRESENT_MASS && forward < ABSENT_MASS)
}

/// Largest `|log(P_F/P_B) - β(ΔU - ΔF - X)|` over the common support.
///
/// `pb` must be the renormalized backward distribution. Atoms present on one
/// side and absent on the other give `SupportMismatch`.
pub fn crooks_residual(
    pf: &EnergyDistribution,
    pb: &EnergyDistribution,
    beta: f64,
    delta_f: f64,
    x: f64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (delta_u, forward, backward) in matched_atoms(pf, pb) {
        if one_sided(forward, backward) {
            return Err(Error::SupportMismatch {
                delta_u,
                forward,
                backward,
            });
        }
        if forward < ABSENT_MASS || backward < ABSENT_MASS {
            continue;
        }
        let residual = ((forward / backward).ln() - beta * (delta_u - delta_f - x)).abs();
        worst = worst.max(residual);
    }
    Ok(worst)
}

/// `K[P_F ‖ P_B] = Σ P_F log(P_F / P_B)`.
pub fn kl_divergence(pf: &EnergyDistribution, pb: &EnergyDistribution) -> Result<f64> {
    let mut k = 0.0;
    for (delta_u, forward, backward) in matched_atoms(pf, pb) {
        if forward > PRESENT_MASS && backward < ABSENT_MASS {
            return Err(Error::SupportMismatch {
                delta_u,
                forward,
                backward,
            });
        }
        if forward > ABSENT_MASS && backward >= ABSENT_MASS {
            k += forward * (forward / backward).ln();
        }
    }
    Ok(k)
}
