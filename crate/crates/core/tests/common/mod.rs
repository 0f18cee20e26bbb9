//! Dense reference operators built from Kronecker products, independent of
//! the bitmask arithmetic in the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use shadowrdm::rng::stream_rng;
use shadowrdm::statevector::StateVector;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn pauli(kind: char) -> DMatrix<C> {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match kind {
        'I' => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        'X' => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        'Y' => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        'Z' => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => unreachable!(),
    }
}

/// `ops[n-1] ⊗ … ⊗ ops[0]`, so qubit 0 is the least significant bit.
pub fn kron(ops: &[char]) -> DMatrix<C> {
    ops.iter().fold(DMatrix::from_element(1, 1, c(1.0, 0.0)), |acc, &k| pauli(k).kronecker(&acc))
}

/// `γ_{2p} = Z…Z X_p`, `γ_{2p+1} = Z…Z Y_p`.
pub fn gamma(mu: usize, n: usize) -> DMatrix<C> {
    let p = mu / 2;
    let ops: Vec<char> = (0..n)
        .map(|q| {
            if q < p {
                'Z'
            } else if q == p {
                if mu.is_multiple_of(2) { 'X' } else { 'Y' }
            } else {
                'I'
            }
        })
        .collect();
    kron(&ops)
}

pub fn annihilator(p: usize, n: usize) -> DMatrix<C> {
    (gamma(2 * p, n) + gamma(2 * p + 1, n) * c(0.0, 1.0)) * c(0.5, 0.0)
}

pub fn creator(p: usize, n: usize) -> DMatrix<C> {
    annihilator(p, n).adjoint()
}

pub fn identity(n: usize) -> DMatrix<C> {
    DMatrix::identity(1 << n, 1 << n)
}

/// `Γ_μ = (−i)^{|μ|/2} γ_{μ_1} … γ_{μ_2j}`.
pub fn big_gamma(mu: &[usize], n: usize) -> DMatrix<C> {
    let phase = [c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0), c(0.0, 1.0)][(mu.len() / 2) % 4];
    mu.iter().fold(identity(n), |acc, &m| acc * gamma(m, n)) * phase
}

pub fn vec_of(s: &StateVector) -> DVector<C> {
    DVector::from_column_slice(s.amplitudes())
}

pub fn expect(op: &DMatrix<C>, s: &StateVector) -> C {
    let v = vec_of(s);
    (v.adjoint() * op * &v)[(0, 0)]
}

/// `(1/k!) <a†_{u_1}…a†_{u_k} a_{l_k}…a_{l_1}>` with dense matrices.
pub fn dense_rdm_element(s: &StateVector, upper: &[usize], lower: &[usize]) -> C {
    let n = s.n_modes();
    let mut op = identity(n);
    for &u in upper {
        op *= creator(u, n);
    }
    for &l in lower.iter().rev() {
        op *= annihilator(l, n);
    }
    let k = upper.len();
    expect(&op, s) / (1..=k).product::<usize>() as f64
}

/// Normalized random state supported on one particle-number sector.
pub fn random_sector_state(n: usize, particles: usize, seed: u64) -> StateVector {
    use rand::Rng;
    let mut rng = stream_rng(seed, 777);
    let amps: Vec<C> = (0..1usize << n)
        .map(|b| {
            if b.count_ones() as usize == particles {
                c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            } else {
                c(0.0, 0.0)
            }
        })
        .collect();
    StateVector::normalized(n, amps).unwrap()
}

/// All even permutations of `0..len`.
pub fn alternating_group(len: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut all = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; len], &mut all);
    all.into_iter()
        .filter(|p| {
            // parity from inversion count
            let inv: usize = (0..len).map(|i| (i + 1..len).filter(|&j| p[i] > p[j]).count()).sum();
            inv.is_multiple_of(2)
        })
        .collect()
}

/// `P(z) = <ψ| ∏_p (1 + s_p O_p)/2 |ψ>` with `O_p = −i γ_{π(2p)} γ_{π(2p+1)}`.
pub fn outcome_distribution(s: &StateVector, perm: &[usize]) -> Vec<f64> {
    let n = s.n_modes();
    let ops: Vec<DMatrix<C>> =
        (0..n).map(|p| gamma(perm[2 * p], n) * gamma(perm[2 * p + 1], n) * c(0.0, -1.0)).collect();
    (0..1u64 << n)
        .map(|z| {
            let mut proj = identity(n);
            for (p, o) in ops.iter().enumerate() {
                let sign = if z >> p & 1 == 1 { -1.0 } else { 1.0 };
                proj *= (identity(n) + o * c(sign, 0.0)) * c(0.5, 0.0);
            }
            expect(&proj, s).re
        })
        .collect()
}

/// Pearson chi-square p-value for observed counts against expected probabilities.
pub fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (counts.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}
