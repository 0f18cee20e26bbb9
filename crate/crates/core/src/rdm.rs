//! Antisymmetric k-body tensors stored over pairs of sorted index combinations.
//!
//! Element `(I, J)` with `I`, `J` strictly increasing holds
//! `ᵏD^I_J = (1/k!) <a†_{i_1} … a†_{i_k} a_{j_k} … a_{j_1}>`. Access with
//! arbitrary index tuples applies the permutation signs; repeated indices
//! give zero.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, combinations, rank, sort_with_parity, unrank};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RdmTensor {
    order: usize,
    n_modes: usize,
    dim: usize,
    values: Vec<Complex64>,
}

impl RdmTensor {
    pub fn zeros(n_modes: usize, order: usize) -> Self {
        let dim = binomial(n_modes, order) as usize;
        Self { order, n_modes, dim, values: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Number of sorted combinations, C(N, k).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, upper_rank: usize, lower_rank: usize) -> Complex64 {
        self.values[upper_rank * self.dim + lower_rank]
    }

    #[inline]
    pub fn set(&mut self, upper_rank: usize, lower_rank: usize, v: Complex64) {
        self.values[upper_rank * self.dim + lower_rank] = v;
    }

    /// Sorted combination for a rank.
    pub fn combination(&self, r: usize) -> Vec<usize> {
        unrank(r, self.order)
    }

    pub fn combinations(&self) -> Vec<Vec<usize>> {
        combinations(self.n_modes, self.order)
    }

    /// Element for arbitrary index tuples, with antisymmetry applied.
    pub fn element(&self, upper: &[usize], lower: &[usize]) -> Result<Complex64> {
        if upper.len() != self.order || lower.len() != self.order {
            return Err(Error::ShapeMismatch(format!(
                "expected {} upper and lower indices, got {} and {}",
                self.order,
                upper.len(),
                lower.len()
            )));
        }
        if let Some(&bad) = upper.iter().chain(lower).find(|&&i| i >= self.n_modes) {
            return Err(Error::ModeOutOfRange { index: bad, n_modes: self.n_modes });
        }
        let mut u = upper.to_vec();
        let mut l = lower.to_vec();
        let odd = sort_with_parity(&mut u) ^ sort_with_parity(&mut l);
        if u.windows(2).any(|w| w[0] == w[1]) || l.windows(2).any(|w| w[0] == w[1]) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let v = self.get(rank(&u), rank(&l));
        Ok(if odd { -v } else { v })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.order != other.order || self.n_modes != other.n_modes {
            return Err(Error::ShapeMismatch(format!(
                "order {} on {} modes vs order {} on {} modes",
                self.order, self.n_modes, other.order, other.n_modes
            )));
        }
        Ok(())
    }

    /// `self + c · other`.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += b * c;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `max |D^I_J - conj(D^J_I)|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// `sum_I D^I_I`.
    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Order-1 tensor as a square matrix `m[i][j] = ¹D^i_j`.
    pub fn to_matrix(&self) -> Result<Vec<Vec<Complex64>>> {
        if self.order != 1 {
            return Err(Error::ShapeMismatch("matrix view needs an order-1 tensor".into()));
        }
        Ok((0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let combos = self.combinations();
        let mut entries = Vec::new();
        for (ri, ci) in combos.iter().enumerate() {
            for (rj, cj) in combos.iter().enumerate() {
                let v = self.get(ri, rj);
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push(TensorEntry { upper: ci.clone(), lower: cj.clone(), value: [v.re, v.im] });
                }
            }
        }
        let doc = TensorDocument {
            format: TENSOR_FORMAT.into(),
            version: TENSOR_VERSION,
            order: self.order,
            n_modes: self.n_modes,
            entries,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TensorDocument = serde_json::from_str(s)?;
        if doc.format != TENSOR_FORMAT || doc.version != TENSOR_VERSION {
            return Err(Error::Format(format!("unsupported tensor document {} v{}", doc.format, doc.version)));
        }
        let mut t = Self::zeros(doc.n_modes, doc.order);
        for e in doc.entries {
            let sorted = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]) && v.len() == doc.order;
            if !sorted(&e.upper) || !sorted(&e.lower) || e.upper.iter().chain(&e.lower).any(|&i| i >= doc.n_modes) {
                return Err(Error::Format("tensor entry indices must be sorted combinations".into()));
            }
            t.set(rank(&e.upper), rank(&e.lower), Complex64::new(e.value[0], e.value[1]));
        }
        Ok(t)
    }

    /// Compact binary form: magic, version, order, n_modes (u32 LE each),
    /// then `dim²` little-endian (re, im) f64 pairs in rank order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        for v in [TENSOR_VERSION, self.order as u32, self.n_modes as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format("bad tensor magic".into()));
        }
        let mut word = [0u8; 4];
        let mut header = [0u32; 3];
        for h in header.iter_mut() {
            r.read_exact(&mut word)?;
            *h = u32::from_le_bytes(word);
        }
        if header[0] != TENSOR_VERSION {
            return Err(Error::Format(format!("unsupported tensor version {}", header[0])));
        }
        let mut t = Self::zeros(header[2] as usize, header[1] as usize);
        let mut buf = [0u8; 8];
        for v in t.values.iter_mut() {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf);
            r.read_exact(&mut buf)?;
            *v = Complex64::new(re, f64::from_le_bytes(buf));
        }
        Ok(t)
    }
}

const TENSOR_FORMAT: &str = "rdm-tensor";
const TENSOR_VERSION: u32 = 1;
const BINARY_MAGIC: &[u8; 4] = b"RDMT";

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    upper: Vec<usize>,
    lower: Vec<usize>,
    value: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct TensorDocument {
    format: String,
    version: u32,
    order: usize,
    n_modes: usize,
    entries: Vec<TensorEntry>,
}
