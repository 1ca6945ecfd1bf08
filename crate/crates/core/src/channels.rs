//! CPTP channels in Kraus form.
//!
//! A [`KrausChannel`] holds square operators `A_l` with `Σ A_l† A_l = I`. From
//! it we derive a Stinespring [`Dilation`] with the ancilla prepared in `|0⟩`
//! and the canonical backward process, the adjoint map `ρ ↦ Σ A_l† ρ A_l`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    c, ensure_dim, ensure_square, identity, is_finite, kron, max_abs_diff, partial_trace_ancilla,
    unitarity_deviation, ComplexMatrix, KERNEL_TOL,
};
use crate::random::{haar_unitary, random_simplex, seeded_rng};
use crate::states::DensityMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<ComplexMatrix>,
    dim: usize,
    label: String,
}

/// Checks that `ops` is a non-empty list of equal-size square matrices
/// satisfying `Σ A_l† A_l = I` and wraps it as a channel.
pub fn validate_channel(ops: Vec<ComplexMatrix>) -> Result<KrausChannel> {
    KrausChannel::new(ops, "kraus")
}

fn sum_of_products(ops: &[ComplexMatrix], dagger_first: bool) -> ComplexMatrix {
    let dim = ops[0].nrows();
    ops.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, a| {
        if dagger_first {
            acc + a.adjoint() * a
        } else {
            acc + a * a.adjoint()
        }
    })
}

fn check_op_list(ops: &[ComplexMatrix]) -> Result<usize> {
    let first = ops.first().ok_or(Error::EmptyKrausList)?;
    let dim = ensure_square(first)?;
    for op in ops {
        ensure_dim(op, dim)?;
        if !is_finite(op) {
            return Err(Error::NonFinite);
        }
    }
    Ok(dim)
}

impl KrausChannel {
    pub fn new(ops: Vec<ComplexMatrix>, label: impl Into<String>) -> Result<Self> {
        let dim = check_op_list(&ops)?;
        let deviation = max_abs_diff(&sum_of_products(&ops, true), &identity(dim));
        if deviation > KERNEL_TOL {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self {
            ops,
            dim,
            label: label.into(),
        })
    }

    pub fn unitary(u: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        Self::new(vec![u], label)
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `Σ_l A_l A_l†`; equal to the identity iff the channel is unital.
    pub fn unitality_operator(&self) -> ComplexMatrix {
        sum_of_products(&self.ops, false)
    }

    /// Linear action on an arbitrary matrix.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.ops
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, a| {
                acc + a * m * a.adjoint()
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitality {
    pub unital: bool,
    /// `max |Σ A_l A_l† - I|`
    pub deviation: f64,
}

pub fn is_unital(c: &KrausChannel) -> Unitality {
    let deviation = max_abs_diff(&c.unitality_operator(), &identity(c.dim()));
    Unitality {
        unital: deviation < KERNEL_TOL,
        deviation,
    }
}

/// `Λ(ρ) = Σ_l A_l ρ A_l†`.
pub fn apply(c: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    ensure_dim(rho.matrix(), c.dim())?;
    Ok(DensityMatrix::new_unchecked(c.apply_matrix(rho.matrix())))
}

/// Unitary `U` on system ⊗ ancilla with `Λ(ρ) = tr_A[U (ρ ⊗ |0⟩⟨0|) U†]`.
///
/// Composite indices are system-major: `|i⟩ ⊗ |a⟩ ↦ i·d_anc + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dilation {
    unitary: ComplexMatrix,
    d_sys: usize,
    d_anc: usize,
}

impl Dilation {
    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn d_sys(&self) -> usize {
        self.d_sys
    }

    pub fn d_anc(&self) -> usize {
        self.d_anc
    }

    /// `A_l = ⟨l|U|0⟩` for each ancilla basis state `l`.
    pub fn recovered_kraus(&self) -> Vec<ComplexMatrix> {
        let (d, n) = (self.d_sys, self.d_anc);
        (0..n)
            .map(|l| ComplexMatrix::from_fn(d, d, |i, j| self.unitary[(i * n + l, j * n)]))
            .collect()
    }

    /// `tr_A[U (m ⊗ |0⟩⟨0|) U†]`.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        ensure_dim(m, self.d_sys)?;
        let mut anc = ComplexMatrix::zeros(self.d_anc, self.d_anc);
        anc[(0, 0)] = c(1.0, 0.0);
        let joint = &self.unitary * kron(m, &anc) * self.unitary.adjoint();
        partial_trace_ancilla(&joint, self.d_sys, self.d_anc)
    }
}

/// Stinespring dilation of a channel.
///
/// The isometry `|ψ⟩ ⊗ |0⟩ ↦ Σ_l A_l|ψ⟩ ⊗ |l⟩` fixes the `|j⟩ ⊗ |0⟩` columns;
/// the rest are completed by Gram–Schmidt over the standard basis, always
/// taking the candidate with the largest residual norm and projecting twice.
pub fn dilate(ch: &KrausChannel) -> Dilation {
    let d = ch.dim();
    let n = ch.ops().len();
    let total = d * n;
    let mut unitary = ComplexMatrix::zeros(total, total);
    for (l, a) in ch.ops().iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                unitary[(i * n + l, j * n)] = a[(i, j)];
            }
        }
    }
    if n == 1 {
        return Dilation {
            unitary,
            d_sys: d,
            d_anc: 1,
        };
    }

    let mut basis: Vec<Vec<Complex64>> = (0..d)
        .map(|j| unitary.column(j * n).iter().copied().collect())
        .collect();
    let mut candidates: Vec<usize> = (0..total).collect();
    let free_slots = (0..d).flat_map(|j| (1..n).map(move |k| j * n + k));
    for slot in free_slots {
        let mut best: Option<(usize, Vec<Complex64>, f64)> = None;
        for (pos, &k) in candidates.iter().enumerate() {
            let mut v = vec![c(0.0, 0.0); total];
            v[k] = c(1.0, 0.0);
            project_out(&mut v, &basis);
            project_out(&mut v, &basis);
            let norm = vec_norm(&v);
            if best.as_ref().is_none_or(|(_, _, b)| norm > *b) {
                best = Some((pos, v, norm));
            }
        }
        let (pos, mut v, norm) = best.expect("candidate pool cannot run dry before the basis is complete");
        candidates.remove(pos);
        for z in &mut v {
            *z /= norm;
        }
        for (i, z) in v.iter().enumerate() {
            unitary[(i, slot)] = *z;
        }
        basis.push(v);
    }
    Dilation {
        unitary,
        d_sys: d,
        d_anc: n,
    }
}

fn project_out(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for q in basis {
        let overlap: Complex64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
        for (x, a) in v.iter_mut().zip(q) {
            *x -= overlap * a;
        }
    }
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Backward process `ρ' ↦ Σ_l B_l† ρ' B_l`.
///
/// Because the forward map is trace preserving, the backward map is unital
/// (`Σ B_l† B_l = I`). It preserves trace only when the forward map is unital.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardChannel {
    ops: Vec<ComplexMatrix>,
    trace_preserving: bool,
}

impl BackwardChannel {
    /// Accepts an externally chosen operator list, for example from a dilation
    /// unitary other than the forward one.
    pub fn from_ops(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = check_op_list(&ops)?;
        let deviation = max_abs_diff(&sum_of_products(&ops, true), &identity(dim));
        if deviation > KERNEL_TOL {
            return Err(Error::BackwardNotUnital { deviation });
        }
        let trace_preserving =
            max_abs_diff(&sum_of_products(&ops, false), &identity(dim)) < KERNEL_TOL;
        Ok(Self {
            ops,
            trace_preserving,
        })
    }

    /// `B_l = ⟨l|V|0⟩`, so that `Σ B_l† ρ' B_l = ⟨0|V† (ρ' ⊗ I) V|0⟩`.
    pub fn from_dilation(v: &Dilation) -> Result<Self> {
        Self::from_ops(v.recovered_kraus())
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// Unnormalized output `Σ_l B_l† m B_l`.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        self.ops
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, b| acc + b.adjoint() * m * b)
    }
}

/// Canonical backward process: the adjoint channel, `B_l = A_l`.
pub fn backward_of(ch: &KrausChannel) -> BackwardChannel {
    BackwardChannel {
        ops: ch.ops().to_vec(),
        trace_preserving: is_unital(ch).unital,
    }
}

/// Channel from `⟨l|U|0⟩` blocks of a Haar-random unitary on `dim·n_kraus` dimensions.
pub fn haar_random_channel(dim: usize, n_kraus: usize, seed: u64) -> KrausChannel {
    let n = n_kraus.max(1);
    let u = haar_unitary(dim * n, &mut seeded_rng(seed));
    let ops = (0..n)
        .map(|l| ComplexMatrix::from_fn(dim, dim, |i, j| u[(i * n + l, j * n)]))
        .collect();
    KrausChannel {
        ops,
        dim,
        label: format!("random(seed={seed}, n_kraus={n})"),
    }
}

/// Random mixture of `n` Haar unitaries with simplex-uniform weights. Always unital.
pub fn random_unitary_mixture(dim: usize, n: usize, seed: u64) -> KrausChannel {
    let mut rng = seeded_rng(seed);
    let n = n.max(1);
    let weights = random_simplex(n, &mut rng);
    let ops = weights
        .iter()
        .map(|&w| haar_unitary(dim, &mut rng).scale(w.sqrt()))
        .collect();
    KrausChannel {
        ops,
        dim,
        label: format!("unitary_mixture(seed={seed}, n={n})"),
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "identity",
    "unitary",
    "dephasing",
    "depolarizing",
    "amplitude_damping",
    "thermal_attenuator",
    "random",
    "unitary_mixture",
];

/// Named channel family.
///
/// | name | params |
/// |------|--------|
/// | `identity` | none |
/// | `unitary` | none (Haar, from `seed`) |
/// | `dephasing` | `[p]`: `(1-p)ρ + p·diag(ρ)` |
/// | `depolarizing` | `[p]`: `(1-p)ρ + p·I/d` |
/// | `amplitude_damping` | `[p]`: every excited level decays to `|0⟩` with probability `p` |
/// | `thermal_attenuator` | `[p, n̄]`: qubit generalized amplitude damping toward a bath with occupation `n̄` |
/// | `random` | `[n_kraus]`: Haar dilation, from `seed` |
/// | `unitary_mixture` | `[n]`: convex mixture of `n` Haar unitaries, from `seed` |
pub fn preset(name: &str, params: &[f64], dim: usize, seed: u64) -> Result<KrausChannel> {
    let bad = |message: String| Error::ParamOutOfRange {
        preset: name.to_string(),
        message,
    };
    let expect_len = |n: usize| {
        if params.len() == n {
            Ok(())
        } else {
            Err(bad(format!("expected {n} parameter(s), got {}", params.len())))
        }
    };
    let probability = |x: f64, what: &str| {
        if (0.0..=1.0).contains(&x) {
            Ok(x)
        } else {
            Err(bad(format!("{what} must lie in [0, 1], got {x}")))
        }
    };
    let count = |x: f64, what: &str| {
        if x.fract() == 0.0 && (1.0..=64.0).contains(&x) {
            Ok(x as usize)
        } else {
            Err(bad(format!("{what} must be an integer in [1, 64], got {x}")))
        }
    };
    if dim == 0 {
        return Err(bad("dimension must be positive".into()));
    }

    let ops = match name {
        "identity" => {
            expect_len(0)?;
            vec![identity(dim)]
        }
        "unitary" => {
            expect_len(0)?;
            vec![haar_unitary(dim, &mut seeded_rng(seed))]
        }
        "dephasing" => {
            expect_len(1)?;
            let p = probability(params[0], "p")?;
            let mut ops = vec![identity(dim).scale((1.0 - p).sqrt())];
            ops.extend((0..dim).map(|k| {
                let mut proj = ComplexMatrix::zeros(dim, dim);
                proj[(k, k)] = c(p.sqrt(), 0.0);
                proj
            }));
            ops
        }
        "depolarizing" => {
            expect_len(1)?;
            let p = probability(params[0], "p")?;
            let d2 = (dim * dim) as f64;
            let mut ops = Vec::with_capacity(dim * dim);
            for a in 0..dim {
                for b in 0..dim {
                    let w = if a == 0 && b == 0 {
                        1.0 - p + p / d2
                    } else {
                        p / d2
                    };
                    ops.push(weyl(dim, a, b).scale(w.sqrt()));
                }
            }
            ops
        }
        "amplitude_damping" => {
            expect_len(1)?;
            let p = probability(params[0], "p")?;
            let mut a0 = ComplexMatrix::zeros(dim, dim);
            a0[(0, 0)] = c(1.0, 0.0);
            for k in 1..dim {
                a0[(k, k)] = c((1.0 - p).sqrt(), 0.0);
            }
            let mut ops = vec![a0];
            ops.extend((1..dim).map(|k| {
                let mut jump = ComplexMatrix::zeros(dim, dim);
                jump[(0, k)] = c(p.sqrt(), 0.0);
                jump
            }));
            ops
        }
        "thermal_attenuator" => {
            expect_len(2)?;
            if dim != 2 {
                return Err(bad(format!("defined for qubits only, got dim = {dim}")));
            }
            let p = probability(params[0], "p")?;
            let nbar = params[1];
            if !(nbar.is_finite() && nbar >= 0.0) {
                return Err(bad(format!("n̄ must be finite and non-negative, got {nbar}")));
            }
            // Excited-state weight of the bath.
            let q = nbar / (2.0 * nbar + 1.0);
            let (sd, su) = ((1.0 - q).sqrt(), q.sqrt());
            let (keep, jump) = ((1.0 - p).sqrt(), p.sqrt());
            let mut down0 = ComplexMatrix::zeros(2, 2);
            down0[(0, 0)] = c(sd, 0.0);
            down0[(1, 1)] = c(sd * keep, 0.0);
            let mut down1 = ComplexMatrix::zeros(2, 2);
            down1[(0, 1)] = c(sd * jump, 0.0);
            let mut up0 = ComplexMatrix::zeros(2, 2);
            up0[(0, 0)] = c(su * keep, 0.0);
            up0[(1, 1)] = c(su, 0.0);
            let mut up1 = ComplexMatrix::zeros(2, 2);
            up1[(1, 0)] = c(su * jump, 0.0);
            vec![down0, down1, up0, up1]
        }
        "random" => {
            expect_len(1)?;
            let n = count(params[0], "n_kraus")?;
            return Ok(haar_random_channel(dim, n, seed));
        }
        "unitary_mixture" => {
            expect_len(1)?;
            let n = count(params[0], "n")?;
            return Ok(random_unitary_mixture(dim, n, seed));
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };

    let ops: Vec<ComplexMatrix> = ops.into_iter().filter(|a| a.norm() > 0.0).collect();
    KrausChannel::new(ops, name)
}

/// Generalized Pauli `X^a Z^b` with `X|k⟩ = |k+1⟩`, `Z|k⟩ = ω^k|k⟩`.
fn weyl(dim: usize, a: usize, b: usize) -> ComplexMatrix {
    let omega = 2.0 * std::f64::consts::PI / dim as f64;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for k in 0..dim {
        m[((k + a) % dim, k)] = Complex64::from_polar(1.0, omega * (b * k) as f64);
    }
    m
}

/// `max |U†U - I|` for a candidate dilation.
pub fn dilation_unitarity(d: &Dilation) -> f64 {
    unitarity_deviation(d.unitary())
}
