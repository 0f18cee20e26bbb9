//! Pauli strings over `n` qubits in symplectic (x-mask, z-mask) form.
//!
//! A string represents `i^phase * ⊗_q σ_q` with `σ_q` equal to I, X, Z or Y
//! for `(x_q, z_q)` = (0,0), (1,0), (0,1), (1,1). Internally products are
//! computed in the `X^x Z^z` form, using `Y = i X Z`.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    phase: u8,
    x: u64,
    z: u64,
}

pub const fn i_pow(e: u8) -> Complex64 {
    match e & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { n, phase: 0, x: 0, z: 0 }
    }

    /// Builds a string from masks and a power of `i` (Hermitian-form phase).
    pub fn from_parts(n: usize, phase: u8, x: u64, z: u64) -> Result<Self> {
        let used = x | z;
        if n < 64 && used >> n != 0 {
            return Err(Error::ModeOutOfRange { index: 63 - used.leading_zeros() as usize, n_modes: n });
        }
        Ok(Self { n, phase: phase & 3, x, z })
    }

    pub fn single(n: usize, qubit: usize, p: Pauli) -> Result<Self> {
        if qubit >= n {
            return Err(Error::ModeOutOfRange { index: qubit, n_modes: n });
        }
        let b = 1u64 << qubit;
        let (x, z) = match p {
            Pauli::I => (0, 0),
            Pauli::X => (b, 0),
            Pauli::Y => (b, b),
            Pauli::Z => (0, b),
        };
        Ok(Self { n, phase: 0, x, z })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }
    pub fn x_mask(&self) -> u64 {
        self.x
    }
    pub fn z_mask(&self) -> u64 {
        self.z
    }
    /// Power of `i` multiplying the Hermitian-form tensor product.
    pub fn phase_exponent(&self) -> u8 {
        self.phase
    }
    pub fn phase(&self) -> Complex64 {
        i_pow(self.phase)
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    pub fn pauli_at(&self, q: usize) -> Pauli {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => Pauli::I,
            (1, 0) => Pauli::X,
            (0, 1) => Pauli::Z,
            _ => Pauli::Y,
        }
    }

    /// Exponent `e` with `self = i^e X^x Z^z`.
    #[inline]
    pub fn xz_exponent(&self) -> u8 {
        (self.phase + ((self.x & self.z).count_ones() % 4) as u8) & 3
    }

    /// Multiplies the phase by `i^e`.
    pub fn with_extra_phase(mut self, e: u8) -> Self {
        self.phase = (self.phase + e) & 3;
        self
    }

    /// Folds a scalar into the phase when it is one of ±1, ±i (to `tol`).
    pub fn absorb_unit(self, c: Complex64, tol: f64) -> Option<Self> {
        (0..4u8)
            .find(|&e| (c - i_pow(e)).norm() <= tol)
            .map(|e| self.with_extra_phase(e))
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// `out[b ^ x] = c * (-1)^{|z & b|} * input[b]` with `c = i^e`.
    pub fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        let c = i_pow(self.xz_exponent());
        for (b, &amp) in input.iter().enumerate() {
            let sign = if (self.z & b as u64).count_ones() & 1 == 1 { -c } else { c };
            out[b ^ self.x as usize] = sign * amp;
        }
    }

    /// `<psi| P |psi>` for an arbitrary (not necessarily normalized) vector.
    pub fn sandwich(&self, psi: &[Complex64]) -> Complex64 {
        let c = i_pow(self.xz_exponent());
        let x = self.x as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, &amp) in psi.iter().enumerate() {
            let v = psi[b ^ x].conj() * amp;
            if (self.z & b as u64).count_ones() & 1 == 1 {
                acc -= v;
            } else {
                acc += v;
            }
        }
        acc * c
    }
}

impl std::ops::Mul for PauliString {
    type Output = PauliString;

    fn mul(self, rhs: PauliString) -> PauliString {
        debug_assert_eq!(self.n, rhs.n);
        let e = self.xz_exponent() as u32 + rhs.xz_exponent() as u32 + 2 * (self.z & rhs.x).count_ones();
        let x = self.x ^ rhs.x;
        let z = self.z ^ rhs.z;
        let herm = (e + 4 * 16 - (x & z).count_ones()) % 4;
        PauliString { n: self.n.max(rhs.n), phase: herm as u8, x, z }
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sign = ["+", "+i", "-", "-i"][self.phase as usize];
        write!(f, "{sign}")?;
        if self.x | self.z == 0 {
            return write!(f, "I");
        }
        for q in 0..self.n {
            let s = match self.pauli_at(q) {
                Pauli::I => continue,
                Pauli::X => "X",
                Pauli::Y => "Y",
                Pauli::Z => "Z",
            };
            write!(f, "{s}{q}")?;
        }
        Ok(())
    }
}
