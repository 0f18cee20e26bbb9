//! Ladder and Majorana operator algebra and the Jordan–Wigner image.
//!
//! Conventions used throughout the crate:
//!
//! * `γ_{2p} = a_p + a_p†`, `γ_{2p+1} = -i (a_p - a_p†)`, so that
//!   `a_p = (γ_{2p} + i γ_{2p+1}) / 2` and `a_p† = (γ_{2p} - i γ_{2p+1}) / 2`.
//! * Jordan–Wigner: `γ_{2p} ↦ Z_0 … Z_{p-1} X_p`, `γ_{2p+1} ↦ Z_0 … Z_{p-1} Y_p`,
//!   hence `Z_p = -i γ_{2p} γ_{2p+1} = 1 - 2 n_p`.
//! * A Majorana monomial is keyed by the bitmask of its (strictly increasing)
//!   indices; products are reduced with `γ_μ γ_ν = -γ_ν γ_μ` and `γ_μ² = 1`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::combinatorics::mask_to_indices;
use crate::error::{Error, Result};
use crate::pauli::{i_pow, Pauli, PauliString};

/// Coefficients at or below this magnitude are dropped from polynomials.
pub const PRUNE_TOL: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Sign exponent (0 or 1) of reordering `γ_A γ_B` into canonical order.
#[inline]
pub fn product_sign(a: u64, b: u64) -> u32 {
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        let above = if j >= 63 { 0 } else { !((2u64 << j) - 1) };
        swaps += (a & above).count_ones();
        rest &= rest - 1;
    }
    swaps & 1
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MajoranaMonomial {
    pub mask: u64,
    pub coeff: Complex64,
}

impl MajoranaMonomial {
    pub fn new(indices: &[usize], coeff: Complex64) -> Result<Self> {
        let mut mask = 0u64;
        let mut sorted = indices.to_vec();
        let odd = crate::combinatorics::sort_with_parity(&mut sorted);
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidCombination(format!("repeated index {}", w[0])));
            }
        }
        for &i in &sorted {
            if i >= 64 {
                return Err(Error::InvalidCombination(format!("index {i} exceeds 63")));
            }
            mask |= 1 << i;
        }
        Ok(Self { mask, coeff: if odd { -coeff } else { coeff } })
    }

    pub fn indices(&self) -> Vec<usize> {
        mask_to_indices(self.mask)
    }

    pub fn degree(&self) -> u32 {
        self.mask.count_ones()
    }

    /// Jordan–Wigner image as `(scalar, pauli)` with `coeff · γ_μ = scalar · pauli`.
    pub fn to_pauli(&self, n_modes: usize) -> Result<(Complex64, PauliString)> {
        Ok((self.coeff, jw_pauli(self.mask, n_modes)?))
    }
}

/// Pauli image of the bare product `γ_{μ_1} γ_{μ_2} …` for the set bits of `mask`.
pub fn jw_pauli(mask: u64, n_modes: usize) -> Result<PauliString> {
    let mut acc = PauliString::identity(n_modes);
    for mu in mask_to_indices(mask) {
        acc = acc * jw_gamma(mu, n_modes)?;
    }
    Ok(acc)
}

/// Pauli image of a single Majorana operator.
pub fn jw_gamma(mu: usize, n_modes: usize) -> Result<PauliString> {
    if mu >= 2 * n_modes {
        return Err(Error::MajoranaOutOfRange { index: mu, n_modes });
    }
    let p = mu / 2;
    let string = (1u64 << p) - 1;
    let head = PauliString::single(n_modes, p, if mu.is_multiple_of(2) { Pauli::X } else { Pauli::Y })?;
    PauliString::from_parts(n_modes, head.phase_exponent(), head.x_mask(), head.z_mask() | string)
}

/// Sparse sum of canonical Majorana monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct MajoranaPolynomial {
    n_modes: usize,
    terms: BTreeMap<u64, Complex64>,
}

impl MajoranaPolynomial {
    pub fn zero(n_modes: usize) -> Self {
        Self { n_modes, terms: BTreeMap::new() }
    }

    pub fn identity(n_modes: usize) -> Self {
        Self::scalar(n_modes, ONE)
    }

    pub fn scalar(n_modes: usize, c: Complex64) -> Self {
        let mut p = Self::zero(n_modes);
        p.add_term(0, c);
        p
    }

    pub fn gamma(n_modes: usize, mu: usize) -> Result<Self> {
        if mu >= 2 * n_modes {
            return Err(Error::MajoranaOutOfRange { index: mu, n_modes });
        }
        let mut p = Self::zero(n_modes);
        p.add_term(1 << mu, ONE);
        Ok(p)
    }

    pub fn from_monomial(n_modes: usize, m: MajoranaMonomial) -> Result<Self> {
        if n_modes < 32 && m.mask >> (2 * n_modes) != 0 {
            return Err(Error::MajoranaOutOfRange {
                index: 63 - m.mask.leading_zeros() as usize,
                n_modes,
            });
        }
        let mut p = Self::zero(n_modes);
        p.add_term(m.mask, m.coeff);
        Ok(p)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mask: u64) -> Complex64 {
        self.terms.get(&mask).copied().unwrap_or(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = MajoranaMonomial> + '_ {
        self.terms.iter().map(|(&mask, &coeff)| MajoranaMonomial { mask, coeff })
    }

    /// Adds `c · γ_mask`, pruning the entry if it cancels.
    pub fn add_term(&mut self, mask: u64, c: Complex64) {
        let e = self.terms.entry(mask).or_insert(ZERO);
        *e += c;
        if e.norm() <= PRUNE_TOL {
            self.terms.remove(&mask);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.n_modes = self.n_modes.max(other.n_modes);
        for (&m, &c) in &other.terms {
            self.add_term(m, c);
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.n_modes);
        for (&m, &v) in &self.terms {
            out.add_term(m, v * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n_modes.max(other.n_modes));
        for (&a, &ca) in &self.terms {
            for (&b, &cb) in &other.terms {
                let c = ca * cb;
                out.add_term(a ^ b, if product_sign(a, b) == 1 { -c } else { c });
            }
        }
        out
    }

    /// Hermitian adjoint: reversing a degree-d product gives sign (-1)^{d(d-1)/2}.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.n_modes);
        for (&m, &c) in &self.terms {
            let d = m.count_ones() as u64;
            let flip = (d * d.saturating_sub(1) / 2) % 2 == 1;
            out.add_term(m, if flip { -c.conj() } else { c.conj() });
        }
        out
    }

    /// Largest coefficient difference to another polynomial.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let diff = self.add(&other.scale(-ONE));
        diff.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_difference(&self.adjoint()) <= tol
    }

    /// Compiles the polynomial to its Jordan–Wigner Pauli sum.
    pub fn to_pauli_sum(&self) -> Result<PauliSum> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for m in self.terms() {
            let (c, p) = m.to_pauli(self.n_modes)?;
            terms.push((c * p.phase(), p.with_extra_phase(4 - p.phase_exponent())));
        }
        Ok(PauliSum { n_modes: self.n_modes, terms })
    }
}

/// A linear combination of Hermitian-form Pauli strings, ready for
/// application to state vectors.
#[derive(Clone, Debug)]
pub struct PauliSum {
    n_modes: usize,
    terms: Vec<(Complex64, PauliString)>,
}

impl PauliSum {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn terms(&self) -> &[(Complex64, PauliString)] {
        &self.terms
    }

    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.norm()).sum()
    }

    /// `out += self · input`.
    pub fn apply_add(&self, input: &[Complex64], out: &mut [Complex64]) {
        for (c, p) in &self.terms {
            let c = *c * i_pow(p.xz_exponent());
            let x = p.x_mask() as usize;
            let z = p.z_mask();
            for (b, &amp) in input.iter().enumerate() {
                let v = c * amp;
                if (z & b as u64).count_ones() & 1 == 1 {
                    out[b ^ x] -= v;
                } else {
                    out[b ^ x] += v;
                }
            }
        }
    }

    pub fn sandwich(&self, psi: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|(c, p)| *c * p.sandwich(psi)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LadderOp {
    pub mode: usize,
    pub dagger: bool,
}

impl LadderOp {
    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }
    pub fn annihilate(mode: usize) -> Self {
        Self { mode, dagger: false }
    }
}

/// Ordered product of ladder operators with a scalar coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderMonomial {
    pub factors: Vec<LadderOp>,
    pub coeff: Complex64,
}

impl LadderMonomial {
    pub fn new(factors: Vec<LadderOp>, coeff: Complex64) -> Self {
        Self { factors, coeff }
    }

    pub fn identity(coeff: Complex64) -> Self {
        Self { factors: Vec::new(), coeff }
    }

    /// `coeff · a†_{c_1} … a†_{c_m} a_{d_1} … a_{d_n}`.
    pub fn from_modes(creators: &[usize], annihilators: &[usize], coeff: Complex64) -> Self {
        let factors = creators
            .iter()
            .map(|&m| LadderOp::create(m))
            .chain(annihilators.iter().map(|&m| LadderOp::annihilate(m)))
            .collect();
        Self { factors, coeff }
    }

    /// Creators before annihilators, each block strictly increasing by mode.
    pub fn is_normal_ordered(&self) -> bool {
        let split = self.factors.iter().position(|f| !f.dagger).unwrap_or(self.factors.len());
        let (cre, ann) = self.factors.split_at(split);
        ann.iter().all(|f| !f.dagger)
            && cre.windows(2).all(|w| w[0].mode < w[1].mode)
            && ann.windows(2).all(|w| w[0].mode < w[1].mode)
    }

    pub fn creators(&self) -> Vec<usize> {
        self.factors.iter().filter(|f| f.dagger).map(|f| f.mode).collect()
    }

    pub fn annihilators(&self) -> Vec<usize> {
        self.factors.iter().filter(|f| !f.dagger).map(|f| f.mode).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            factors: self.factors.iter().rev().map(|f| LadderOp { mode: f.mode, dagger: !f.dagger }).collect(),
            coeff: self.coeff.conj(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { factors: self.factors.clone(), coeff: self.coeff * c }
    }

    /// Product `self · other`.
    pub fn times(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Self { factors, coeff: self.coeff * other.coeff }
    }

    pub fn max_mode(&self) -> Option<usize> {
        self.factors.iter().map(|f| f.mode).max()
    }
}

/// Expands a ladder product into Majorana form.
pub fn ladder_to_majorana(m: &LadderMonomial, n_modes: usize) -> Result<MajoranaPolynomial> {
    let mut acc = MajoranaPolynomial::scalar(n_modes, m.coeff);
    for f in &m.factors {
        if f.mode >= n_modes {
            return Err(Error::ModeOutOfRange { index: f.mode, n_modes });
        }
        let mut factor = MajoranaPolynomial::zero(n_modes);
        factor.add_term(1 << (2 * f.mode), Complex64::new(0.5, 0.0));
        factor.add_term(1 << (2 * f.mode + 1), Complex64::new(0.0, if f.dagger { -0.5 } else { 0.5 }));
        acc = acc.mul(&factor);
    }
    Ok(acc)
}

/// Sum of ladder monomials expanded into Majorana form.
pub fn ladder_sum_to_majorana(terms: &[LadderMonomial], n_modes: usize) -> Result<MajoranaPolynomial> {
    let mut acc = MajoranaPolynomial::zero(n_modes);
    for t in terms {
        acc.add_assign(&ladder_to_majorana(t, n_modes)?);
    }
    Ok(acc)
}

/// Rewrites a ladder product exactly as a merged sum of normal-ordered terms.
pub fn normal_order(m: &LadderMonomial) -> Vec<LadderMonomial> {
    let mut merged: BTreeMap<Vec<LadderOp>, Complex64> = BTreeMap::new();
    let mut stack = vec![m.clone()];
    while let Some(mut term) = stack.pop() {
        if term.coeff.norm() <= PRUNE_TOL {
            continue;
        }
        let swap_at = term.factors.windows(2).position(|w| !w[0].dagger && w[1].dagger);
        match swap_at {
            Some(i) => {
                let (a, b) = (term.factors[i], term.factors[i + 1]);
                if a.mode == b.mode {
                    let mut contracted = term.factors.clone();
                    contracted.drain(i..i + 2);
                    stack.push(LadderMonomial { factors: contracted, coeff: term.coeff });
                }
                term.factors.swap(i, i + 1);
                term.coeff = -term.coeff;
                stack.push(term);
            }
            None => {
                let split = term.factors.iter().position(|f| !f.dagger).unwrap_or(term.factors.len());
                let mut cre: Vec<usize> = term.factors[..split].iter().map(|f| f.mode).collect();
                let mut ann: Vec<usize> = term.factors[split..].iter().map(|f| f.mode).collect();
                let odd = crate::combinatorics::sort_with_parity(&mut cre)
                    ^ crate::combinatorics::sort_with_parity(&mut ann);
                if cre.windows(2).any(|w| w[0] == w[1]) || ann.windows(2).any(|w| w[0] == w[1]) {
                    continue;
                }
                let canon = LadderMonomial::from_modes(&cre, &ann, if odd { -term.coeff } else { term.coeff });
                *merged.entry(canon.factors).or_insert(ZERO) += canon.coeff;
            }
        }
    }
    merged
        .into_iter()
        .filter(|(_, c)| c.norm() > PRUNE_TOL)
        .map(|(factors, coeff)| LadderMonomial { factors, coeff })
        .collect()
}

/// Converts a Majorana polynomial into merged normal-ordered ladder terms.
pub fn majorana_to_ladder(poly: &MajoranaPolynomial) -> Vec<LadderMonomial> {
    let mut merged: BTreeMap<Vec<LadderOp>, Complex64> = BTreeMap::new();
    for mono in poly.terms() {
        // each γ is a two-term ladder sum; expand the product
        let idx = mono.indices();
        let mut partial: Vec<LadderMonomial> = vec![LadderMonomial::identity(mono.coeff)];
        for mu in idx {
            let p = mu / 2;
            let (ca, cc) = if mu % 2 == 0 {
                (ONE, ONE)
            } else {
                (Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0))
            };
            let mut next = Vec::with_capacity(partial.len() * 2);
            for t in &partial {
                next.push(t.times(&LadderMonomial::new(vec![LadderOp::annihilate(p)], ca)));
                next.push(t.times(&LadderMonomial::new(vec![LadderOp::create(p)], cc)));
            }
            partial = next;
        }
        for t in partial {
            for n in normal_order(&t) {
                *merged.entry(n.factors).or_insert(ZERO) += n.coeff;
            }
        }
    }
    merged
        .into_iter()
        .filter(|(_, c)| c.norm() > PRUNE_TOL)
        .map(|(factors, coeff)| LadderMonomial { factors, coeff })
        .collect()
}
