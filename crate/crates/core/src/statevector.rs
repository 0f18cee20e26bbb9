//! Dense state vectors over `2^N` occupation basis states.
//!
//! Bit convention: bit `p` of a basis index is the occupation `z_p` of mode
//! `p`, so mode 0 is the least significant bit. Fermionic signs follow the
//! Jordan–Wigner ordering of [`crate::fermion`]: `a_p` picks up
//! `(-1)^{number of occupied modes below p}`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::combinatorics::{binomial, combination_masks, combinations, factorial};
use crate::error::{Error, Result};
use crate::fermion::{LadderMonomial, MajoranaPolynomial, PauliSum};
use crate::pauli::PauliString;
use crate::rdm::RdmTensor;

pub const MAX_MODES: usize = 16;
pub const NORM_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_modes: usize,
    amps: Vec<Complex64>,
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn check_modes(n_modes: usize) -> Result<()> {
    if n_modes > MAX_MODES {
        Err(Error::TooManyModes(n_modes))
    } else {
        Ok(())
    }
}

#[inline]
fn below_parity(b: usize, p: usize) -> bool {
    (b & ((1usize << p) - 1)).count_ones() & 1 == 1
}

/// `out = a_p v` (when `dagger` is false) or `out = a_p† v`.
pub fn apply_ladder_op(v: &[Complex64], mode: usize, dagger: bool) -> Vec<Complex64> {
    let bit = 1usize << mode;
    let mut out = vec![ZERO; v.len()];
    for (b, &amp) in v.iter().enumerate() {
        let occupied = b & bit != 0;
        if occupied == dagger || amp == ZERO {
            continue;
        }
        out[b ^ bit] = if below_parity(b, mode) { -amp } else { amp };
    }
    out
}

impl StateVector {
    /// Computational basis state with occupation bits `bits`.
    pub fn basis(n_modes: usize, bits: u64) -> Result<Self> {
        check_modes(n_modes)?;
        if bits >> n_modes != 0 {
            return Err(Error::InvalidParameter(format!("basis bits {bits:#b} exceed {n_modes} modes")));
        }
        let mut amps = vec![ZERO; 1 << n_modes];
        amps[bits as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { n_modes, amps })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        Self::basis(n_modes, 0)
    }

    /// Wraps amplitudes that must already be normalized.
    pub fn from_amplitudes(n_modes: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_modes(n_modes)?;
        if amps.len() != 1 << n_modes {
            return Err(Error::ShapeMismatch(format!("{} amplitudes for {} modes", amps.len(), n_modes)));
        }
        let drift = (norm_sqr(&amps).sqrt() - 1.0).abs();
        if drift > NORM_TOL {
            return Err(Error::NotNormalized(drift));
        }
        Ok(Self { n_modes, amps })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(n_modes: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        check_modes(n_modes)?;
        if amps.len() != 1 << n_modes {
            return Err(Error::ShapeMismatch(format!("{} amplitudes for {} modes", amps.len(), n_modes)));
        }
        let n = norm_sqr(&amps).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        amps.iter_mut().for_each(|a| *a /= n);
        Ok(Self { n_modes, amps })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    pub fn overlap(&self, other: &Self) -> Complex64 {
        inner(&self.amps, &other.amps)
    }

    fn check_pauli(&self, p: &PauliString) -> Result<()> {
        if p.n_qubits() != self.n_modes {
            return Err(Error::DimensionMismatch { expected: self.n_modes, found: p.n_qubits() });
        }
        Ok(())
    }

    pub fn apply_pauli(&self, p: &PauliString) -> Result<Self> {
        self.check_pauli(p)?;
        let mut out = vec![ZERO; self.amps.len()];
        p.apply_into(&self.amps, &mut out);
        Ok(Self { n_modes: self.n_modes, amps: out })
    }

    pub fn expectation_pauli(&self, p: &PauliString) -> Result<Complex64> {
        self.check_pauli(p)?;
        Ok(p.sandwich(&self.amps))
    }

    pub fn expectation(&self, op: &MajoranaPolynomial) -> Result<Complex64> {
        if op.n_modes() != self.n_modes {
            return Err(Error::DimensionMismatch { expected: self.n_modes, found: op.n_modes() });
        }
        Ok(op.to_pauli_sum()?.sandwich(&self.amps))
    }

    /// Projective measurement of a Hermitian Pauli string. Returns the ±1
    /// outcome and the normalized post-measurement state.
    pub fn measure_pauli<R: Rng + ?Sized>(&self, p: &PauliString, rng: &mut R) -> Result<(i8, Self)> {
        let mut next = self.clone();
        let mut scratch = Vec::new();
        let outcome = next.measure_pauli_in_place(p, rng, &mut scratch)?;
        Ok((outcome, next))
    }

    pub fn measure_pauli_in_place<R: Rng + ?Sized>(
        &mut self,
        p: &PauliString,
        rng: &mut R,
        scratch: &mut Vec<Complex64>,
    ) -> Result<i8> {
        self.check_pauli(p)?;
        if !p.is_hermitian() {
            return Err(Error::NonHermitianPauli);
        }
        scratch.clear();
        scratch.resize(self.amps.len(), ZERO);
        p.apply_into(&self.amps, scratch);
        let mean = inner(&self.amps, scratch).re;
        let p_plus = ((1.0 + mean) / 2.0).clamp(0.0, 1.0);
        let outcome: i8 = if rng.random::<f64>() < p_plus { 1 } else { -1 };
        let prob = if outcome == 1 { p_plus } else { 1.0 - p_plus };
        if prob < 1e-14 {
            return Err(Error::VanishingBranch(prob));
        }
        let s = f64::from(outcome);
        let scale = 0.5 / prob.sqrt();
        for (a, pa) in self.amps.iter_mut().zip(scratch.iter()) {
            *a = (*a + pa * s) * scale;
        }
        Ok(outcome)
    }

    /// Applies a product of ladder operators (rightmost first). The result is
    /// generally unnormalized, hence returned as a raw vector.
    pub fn apply_ladder(&self, m: &LadderMonomial) -> Result<Vec<Complex64>> {
        if let Some(mode) = m.max_mode().filter(|&mode| mode >= self.n_modes) {
            return Err(Error::ModeOutOfRange { index: mode, n_modes: self.n_modes });
        }
        let mut v = self.amps.clone();
        for f in m.factors.iter().rev() {
            v = apply_ladder_op(&v, f.mode, f.dagger);
        }
        v.iter_mut().for_each(|a| *a *= m.coeff);
        Ok(v)
    }

    /// `<N>` and `<N²> - <N>²` for the total number operator.
    pub fn number_moments(&self) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (b, a) in self.amps.iter().enumerate() {
            let w = a.norm_sqr();
            let n = b.count_ones() as f64;
            m1 += w * n;
            m2 += w * n * n;
        }
        (m1, m2 - m1 * m1)
    }

    /// `exp(g) |ψ>` for anti-Hermitian `g`, by scaled Taylor steps applied to
    /// the vector.
    pub fn apply_exp_antihermitian<G: LinearOperator + ?Sized>(&self, g: &G, opts: &ExpOptions) -> Result<Self> {
        if g.n_modes() != self.n_modes {
            return Err(Error::DimensionMismatch { expected: self.n_modes, found: g.n_modes() });
        }
        let dim = self.amps.len();
        let mut buf = vec![ZERO; dim];
        if opts.check_antihermitian {
            g.apply_add(&self.amps, &mut buf);
            let re = inner(&self.amps, &buf).re;
            if re.abs() > 1e-10 * g.norm_bound().max(1.0) {
                return Err(Error::NotAntiHermitian(re));
            }
        }
        let bound = g.norm_bound();
        if bound == 0.0 {
            return Ok(self.clone());
        }
        let steps = (bound / opts.step_norm).ceil().max(1.0);
        if steps > opts.max_steps as f64 {
            return Err(Error::NonConvergence(format!("{steps} steps exceed budget {}", opts.max_steps)));
        }
        let steps = steps as usize;
        let h = 1.0 / steps as f64;
        let mut v = self.amps.clone();
        let mut term = vec![ZERO; dim];
        for _ in 0..steps {
            term.copy_from_slice(&v);
            let mut converged = false;
            for k in 1..=opts.max_terms {
                buf.iter_mut().for_each(|x| *x = ZERO);
                g.apply_add(&term, &mut buf);
                let f = h / k as f64;
                let mut tn = 0.0;
                for ((t, b), acc) in term.iter_mut().zip(&buf).zip(v.iter_mut()) {
                    *t = b * f;
                    *acc += *t;
                    tn += t.norm_sqr();
                }
                if tn.sqrt() <= 1e-18 {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NonConvergence(format!("Taylor series exceeded {} terms", opts.max_terms)));
            }
        }
        let n = norm_sqr(&v).sqrt();
        let ref_norm = self.norm();
        if (n - ref_norm).abs() > opts.tol {
            return Err(Error::NonConvergence(format!("norm drift {:e}", (n - ref_norm).abs())));
        }
        v.iter_mut().for_each(|a| *a *= ref_norm / n);
        Ok(Self { n_modes: self.n_modes, amps: v })
    }

    /// Von Neumann entropy (bits) of the reduced state on the modes in `cut`.
    pub fn half_chain_entropy(&self, cut: &[usize]) -> Result<f64> {
        let n = self.n_modes;
        let mut in_a = vec![false; n];
        for &m in cut {
            if m >= n {
                return Err(Error::ModeOutOfRange { index: m, n_modes: n });
            }
            if in_a[m] {
                return Err(Error::InvalidParameter(format!("mode {m} repeated in cut")));
            }
            in_a[m] = true;
        }
        if cut.is_empty() || cut.len() == n {
            return Err(Error::InvalidParameter("cut must be a nonempty proper subset".into()));
        }
        let mut a: Vec<usize> = (0..n).filter(|&m| in_a[m]).collect();
        let mut b: Vec<usize> = (0..n).filter(|&m| !in_a[m]).collect();
        if a.len() > b.len() {
            std::mem::swap(&mut a, &mut b);
        }
        let gather = |idx: usize, modes: &[usize]| -> usize {
            modes.iter().enumerate().fold(0, |acc, (k, &m)| acc | (((idx >> m) & 1) << k))
        };
        let (da, db) = (1usize << a.len(), 1usize << b.len());
        let mut m = DMatrix::<Complex64>::zeros(da, db);
        for (idx, &amp) in self.amps.iter().enumerate() {
            if amp != ZERO {
                m[(gather(idx, &a), gather(idx, &b))] = amp;
            }
        }
        let rho = &m * m.adjoint();
        let eig = rho.symmetric_eigen();
        let total: f64 = eig.eigenvalues.iter().sum();
        Ok(eig
            .eigenvalues
            .iter()
            .map(|&l| l / total)
            .filter(|&l| l > 1e-15)
            .map(|l| -l * l.log2())
            .sum::<f64>()
            .max(0.0))
    }

    /// `ᵏD^I_J = (1/k!) <φ_I|φ_J>` with `φ_J = a_{j_k} … a_{j_1} |ψ>`.
    pub fn exact_rdm(&self, k: usize) -> Result<RdmTensor> {
        if k > self.n_modes {
            return Err(Error::ShapeMismatch(format!("{k}-RDM on {} modes", self.n_modes)));
        }
        let combos = combinations(self.n_modes, k);
        let phis: Vec<Vec<Complex64>> = combos
            .iter()
            .map(|c| c.iter().fold(self.amps.clone(), |v, &j| apply_ladder_op(&v, j, false)))
            .collect();
        let scale = 1.0 / factorial(k);
        let mut t = RdmTensor::zeros(self.n_modes, k);
        for i in 0..phis.len() {
            for j in i..phis.len() {
                let v = inner(&phis[i], &phis[j]) * scale;
                t.set(i, j, v);
                t.set(j, i, v.conj());
            }
        }
        Ok(t)
    }

    /// Raw little-endian `(re, im)` f64 pairs in basis order.
    pub fn write_amplitudes<W: Write>(&self, mut w: W) -> Result<()> {
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_amplitudes<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let count = bytes.len() / 16;
        if bytes.len() % 16 != 0 || !count.is_power_of_two() {
            return Err(Error::Format(format!("{} bytes is not a 2^N amplitude dump", bytes.len())));
        }
        let amps = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Self::from_amplitudes(count.trailing_zeros() as usize, amps)
    }
}

/// Linear action on raw amplitude vectors.
pub trait LinearOperator: Sync {
    fn n_modes(&self) -> usize;
    /// `out += A · input`.
    fn apply_add(&self, input: &[Complex64], out: &mut [Complex64]);
    /// Any upper bound on the operator norm.
    fn norm_bound(&self) -> f64;
}

impl LinearOperator for PauliSum {
    fn n_modes(&self) -> usize {
        PauliSum::n_modes(self)
    }
    fn apply_add(&self, input: &[Complex64], out: &mut [Complex64]) {
        PauliSum::apply_add(self, input, out)
    }
    fn norm_bound(&self) -> f64 {
        self.one_norm()
    }
}

#[derive(Clone, Debug)]
pub struct ExpOptions {
    /// Allowed norm drift before renormalization.
    pub tol: f64,
    /// Norm bound of the generator per Taylor step.
    pub step_norm: f64,
    pub max_terms: usize,
    pub max_steps: usize,
    pub check_antihermitian: bool,
}

impl Default for ExpOptions {
    fn default() -> Self {
        Self { tol: 1e-10, step_norm: 0.5, max_terms: 60, max_steps: 100_000, check_antihermitian: false }
    }
}

/// Basis states with exactly `particles` occupied modes, increasing as integers.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorBasis {
    n_modes: usize,
    particles: usize,
    states: Vec<u64>,
}

impl SectorBasis {
    pub fn new(n_modes: usize, particles: usize) -> Result<Self> {
        check_modes(n_modes)?;
        if particles > n_modes {
            return Err(Error::InvalidParameter(format!("{particles} particles in {n_modes} modes")));
        }
        let states = combination_masks(n_modes, particles);
        debug_assert_eq!(states.len() as u64, binomial(n_modes, particles));
        Ok(Self { n_modes, particles, states })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }
    pub fn particles(&self) -> usize {
        self.particles
    }
    pub fn states(&self) -> &[u64] {
        &self.states
    }
    pub fn len(&self) -> usize {
        self.states.len()
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.states.binary_search(&bits).ok()
    }

    /// Embeds sector coefficients into the full `2^N` space.
    pub fn embed(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut amps = vec![ZERO; 1 << self.n_modes];
        for (&b, &c) in self.states.iter().zip(coeffs) {
            amps[b as usize] = c;
        }
        amps
    }
}

#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub particles: usize,
    /// Ascending.
    pub energies: Vec<f64>,
    pub states: Vec<StateVector>,
}

/// Dense Hermitian matrix of `h` in the sector basis. Fails when `h` couples
/// the sector to other particle numbers.
pub fn sector_matrix(h: &MajoranaPolynomial, basis: &SectorBasis) -> Result<DMatrix<Complex64>> {
    if h.n_modes() != basis.n_modes() {
        return Err(Error::DimensionMismatch { expected: basis.n_modes(), found: h.n_modes() });
    }
    let ps = h.to_pauli_sum()?;
    let dim = basis.len();
    let mut mat = DMatrix::<Complex64>::zeros(dim, dim);
    let mut off: std::collections::HashMap<(u64, usize), Complex64> = Default::default();
    for (c, p) in ps.terms() {
        let cc = *c * crate::pauli::i_pow(p.xz_exponent());
        for (col, &b) in basis.states().iter().enumerate() {
            let v = if (p.z_mask() & b).count_ones() & 1 == 1 { -cc } else { cc };
            let target = b ^ p.x_mask();
            match basis.index_of(target) {
                Some(row) => mat[(row, col)] += v,
                None => *off.entry((target, col)).or_insert(ZERO) += v,
            }
        }
    }
    let worst = off.values().map(|v| v.norm()).fold(0.0, f64::max);
    if worst > 1e-12 {
        return Err(Error::NotNumberConserving(worst));
    }
    Ok(mat)
}

pub fn sector_eigensolve(h: &MajoranaPolynomial, basis: &SectorBasis) -> Result<SectorSpectrum> {
    let mat = sector_matrix(h, basis)?;
    let herm = (&mat + mat.adjoint()) * Complex64::new(0.5, 0.0);
    let (energies, vectors) = hermitian_eigen(herm);
    let states = vectors
        .into_iter()
        .map(|v| StateVector::normalized(basis.n_modes(), basis.embed(&v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SectorSpectrum { particles: basis.particles(), energies, states })
}

/// Eigenpairs of a Hermitian matrix in ascending eigenvalue order.
pub fn hermitian_eigen(m: DMatrix<Complex64>) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (values, vectors)
}
