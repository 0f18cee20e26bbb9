//! Quantum subspace expansion in the span of `C_i |ψ_0>`.
//!
//! `H̃_ij = <ψ_0| C_i† H C_j |ψ_0>` and `S̃_ij = <ψ_0| C_i† C_j |ψ_0>` are built
//! either from the state directly or from reduced density matrices after
//! normal ordering `C_i† H C_j` into at most three-body terms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{factorial, rank};
use crate::cumulant::reconstruct_3rdm;
use crate::error::{Error, Result};
use crate::fermion::{majorana_to_ladder, normal_order, LadderMonomial, MajoranaPolynomial};
use crate::rdm::RdmTensor;
use crate::statevector::{hermitian_eigen, inner, StateVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub struct QseProblem {
    pub hamiltonian: MajoranaPolynomial,
    pub couplers: Vec<LadderMonomial>,
    pub reference: StateVector,
}

impl QseProblem {
    pub fn new(hamiltonian: MajoranaPolynomial, couplers: Vec<LadderMonomial>, reference: StateVector) -> Result<Self> {
        if couplers.is_empty() {
            return Err(Error::InvalidParameter("QSE needs at least one coupler".into()));
        }
        if hamiltonian.n_modes() != reference.n_modes() {
            return Err(Error::DimensionMismatch { expected: reference.n_modes(), found: hamiltonian.n_modes() });
        }
        Ok(Self { hamiltonian, couplers, reference })
    }

    /// Couplers `C_i = a_i` for every mode.
    pub fn annihilation(hamiltonian: MajoranaPolynomial, reference: StateVector) -> Result<Self> {
        let couplers = (0..reference.n_modes())
            .map(|i| LadderMonomial::from_modes(&[], &[i], Complex64::new(1.0, 0.0)))
            .collect();
        Self::new(hamiltonian, couplers, reference)
    }

    pub fn n_modes(&self) -> usize {
        self.reference.n_modes()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QseMatrices {
    pub h: DMatrix<Complex64>,
    pub s: DMatrix<Complex64>,
    /// Largest `|M − M†|` entry over both matrices before symmetrization.
    pub asymmetry: f64,
}

impl QseMatrices {
    /// Replaces both matrices with their Hermitian parts.
    pub fn symmetrized(h: DMatrix<Complex64>, s: DMatrix<Complex64>) -> Self {
        let dev = |m: &DMatrix<Complex64>| (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        let asymmetry = dev(&h).max(dev(&s));
        let herm = |m: DMatrix<Complex64>| (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        Self { h: herm(h), s: herm(s), asymmetry }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max);
        d(&self.h, &other.h).max(d(&self.s, &other.s))
    }
}

pub fn qse_matrices_exact(problem: &QseProblem) -> Result<QseMatrices> {
    let h = problem.hamiltonian.to_pauli_sum()?;
    let basis: Vec<Vec<Complex64>> =
        problem.couplers.iter().map(|c| problem.reference.apply_ladder(c)).collect::<Result<_>>()?;
    let h_basis: Vec<Vec<Complex64>> = basis
        .par_iter()
        .map(|v| {
            let mut out = vec![ZERO; v.len()];
            h.apply_add(v, &mut out);
            out
        })
        .collect();
    let m = basis.len();
    let hm = DMatrix::from_fn(m, m, |i, j| inner(&basis[i], &h_basis[j]));
    let sm = DMatrix::from_fn(m, m, |i, j| inner(&basis[i], &basis[j]));
    Ok(QseMatrices::symmetrized(hm, sm))
}

/// How three-body content of `C_i† H C_j` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Three-body terms dropped.
    Trunc2,
    /// Three-body terms from the cumulant reconstruction of `³D` from `¹D, ²D`.
    Cum3,
    /// Three-body terms from a measured `³D`.
    Direct3,
}

impl Pipeline {
    pub const ALL: [Pipeline; 3] = [Pipeline::Trunc2, Pipeline::Cum3, Pipeline::Direct3];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Trunc2 => "trunc2",
            Pipeline::Cum3 => "cum3",
            Pipeline::Direct3 => "direct3",
        }
    }
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Pipeline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown pipeline {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct RdmSource {
    pub d1: RdmTensor,
    pub d2: RdmTensor,
    pub d3: Option<RdmTensor>,
}

impl RdmSource {
    pub fn exact(state: &StateVector) -> Result<Self> {
        Ok(Self { d1: state.exact_rdm(1)?, d2: state.exact_rdm(2)?, d3: Some(state.exact_rdm(3)?) })
    }
}

/// One normal-ordered term `c · a†_C a_D` with `|C| = |D| = order`, stored by
/// sorted-combination ranks.
#[derive(Clone, Copy, Debug)]
struct RdmTerm {
    coeff: Complex64,
    order: usize,
    upper: usize,
    lower: usize,
}

/// `C_i† H C_j` and `C_i† C_j` compiled to RDM lookups.
#[derive(Clone, Debug)]
pub struct QseExpansion {
    n_modes: usize,
    dim: usize,
    h_terms: Vec<Vec<RdmTerm>>,
    s_terms: Vec<Vec<RdmTerm>>,
}

/// `a†_C a_D` with both blocks ascending equals `(−1)^{m(m−1)/2} m! ᵐD^C_D`.
fn compile(terms: &[LadderMonomial]) -> Result<Vec<RdmTerm>> {
    let mut out = Vec::new();
    for t in terms {
        let cre = t.creators();
        let ann = t.annihilators();
        if cre.len() != ann.len() {
            continue;
        }
        let m = cre.len();
        if m > 3 {
            return Err(Error::OrderInsufficient { have: 3, need: m });
        }
        let sign = if (m * m.saturating_sub(1) / 2) % 2 == 1 { -1.0 } else { 1.0 };
        out.push(RdmTerm { coeff: t.coeff * (sign * factorial(m)), order: m, upper: rank(&cre), lower: rank(&ann) });
    }
    Ok(out)
}

impl QseExpansion {
    pub fn new(problem: &QseProblem) -> Result<Self> {
        let h_ladder = majorana_to_ladder(&problem.hamiltonian);
        let c = &problem.couplers;
        let dim = c.len();
        let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).collect();
        let compiled: Vec<(Vec<RdmTerm>, Vec<RdmTerm>)> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let left = c[i].adjoint();
                let mut h_products = Vec::new();
                for term in &h_ladder {
                    h_products.extend(normal_order(&left.times(term).times(&c[j])));
                }
                let s_products = normal_order(&left.times(&c[j]));
                Ok((compile(&h_products)?, compile(&s_products)?))
            })
            .collect::<Result<_>>()?;
        let (h_terms, s_terms) = compiled.into_iter().unzip();
        Ok(Self { n_modes: problem.n_modes(), dim, h_terms, s_terms })
    }

    /// Largest body order appearing in the compiled Hamiltonian elements.
    pub fn max_order(&self) -> usize {
        self.h_terms.iter().flatten().map(|t| t.order).max().unwrap_or(0)
    }

    pub fn evaluate(&self, rdms: &RdmSource, pipeline: Pipeline) -> Result<QseMatrices> {
        for (k, t) in [(1, &rdms.d1), (2, &rdms.d2)] {
            if t.order() != k || t.n_modes() != self.n_modes {
                return Err(Error::ShapeMismatch(format!("source {k}-RDM has the wrong shape")));
            }
        }
        let reconstructed;
        let d3: Option<&RdmTensor> = match pipeline {
            Pipeline::Trunc2 => None,
            Pipeline::Cum3 => {
                reconstructed = reconstruct_3rdm(&rdms.d1, &rdms.d2)?;
                Some(&reconstructed)
            }
            Pipeline::Direct3 => Some(
                rdms.d3.as_ref().ok_or(Error::MissingTensor { order: 3, pipeline: "direct3" })?,
            ),
        };
        if let Some(t) = d3 {
            if t.order() != 3 || t.n_modes() != self.n_modes {
                return Err(Error::ShapeMismatch("source 3-RDM has the wrong shape".into()));
            }
        }
        let lookup = |terms: &[RdmTerm]| -> Complex64 {
            terms
                .iter()
                .map(|t| match t.order {
                    0 => t.coeff,
                    1 => t.coeff * rdms.d1.get(t.upper, t.lower),
                    2 => t.coeff * rdms.d2.get(t.upper, t.lower),
                    _ => d3.map_or(ZERO, |d| t.coeff * d.get(t.upper, t.lower)),
                })
                .sum()
        };
        let n = self.dim;
        let h = DMatrix::from_fn(n, n, |i, j| lookup(&self.h_terms[i * n + j]));
        let s = DMatrix::from_fn(n, n, |i, j| lookup(&self.s_terms[i * n + j]));
        Ok(QseMatrices::symmetrized(h, s))
    }
}

pub fn qse_matrices_from_rdms(problem: &QseProblem, rdms: &RdmSource, pipeline: Pipeline) -> Result<QseMatrices> {
    QseExpansion::new(problem)?.evaluate(rdms, pipeline)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QseResult {
    /// Ascending.
    pub energies: Vec<f64>,
    /// Coefficients on the original couplers, one vector per energy.
    pub vectors: Vec<Vec<Complex64>>,
    pub retained: usize,
    /// Absolute cutoff applied to the overlap eigenvalues.
    pub threshold: f64,
}

pub const DEFAULT_THRESHOLD: f64 = 1e-6;

/// Canonical orthogonalization: overlap eigenvalues at or below
/// `epsilon · s_max` are discarded before solving `H̃ X = S̃ X E`.
pub fn solve_gev(m: &QseMatrices, epsilon: f64) -> Result<QseResult> {
    let n = m.s.nrows();
    if m.s.ncols() != n || m.h.nrows() != n || m.h.ncols() != n {
        return Err(Error::ShapeMismatch("QSE matrices must be square and equal in size".into()));
    }
    let (s_vals, s_vecs) = hermitian_eigen(m.s.clone());
    let s_max = s_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(s_max > 1e-14) {
        return Err(Error::SingularOverlap);
    }
    let threshold = epsilon * s_max;
    let kept: Vec<usize> = (0..n).filter(|&i| s_vals[i] > threshold).collect();
    if kept.is_empty() {
        return Err(Error::SingularOverlap);
    }
    let x = DMatrix::from_fn(n, kept.len(), |r, c| s_vecs[kept[c]][r] / s_vals[kept[c]].sqrt());
    let reduced = x.adjoint() * &m.h * &x;
    let reduced = (&reduced + reduced.adjoint()) * Complex64::new(0.5, 0.0);
    let (energies, ys) = hermitian_eigen(reduced);
    let vectors = ys
        .iter()
        .map(|y| {
            let y = nalgebra::DVector::from_column_slice(y);
            (&x * y).iter().copied().collect()
        })
        .collect();
    Ok(QseResult { energies, vectors, retained: kept.len(), threshold })
}

/// Lowest retained QSE eigenvalue minus the exact target energy.
pub fn excited_energy_error(result: &QseResult, exact: f64) -> f64 {
    result.energies[0] - exact
}
