//! Number-conserving fermionic classical shadows.
//!
//! A snapshot draws an even permutation `π` of the `2N` Majorana indices and
//! measures the commuting pair operators `O_p = -i γ_{π(2p)} γ_{π(2p+1)}` on
//! the state, which is the same as rotating by the Gaussian unitary of `π`
//! and reading out in the computational basis. The unitary itself is never
//! built.
//!
//! For a snapshot, a monomial `Γ_μ` can only be hit through the single set
//! `ν = π⁻¹(μ)`, and only if `ν` is a union of pairs `{2p, 2p+1}`. Each hit
//! contributes `±1`, so the accumulator keeps exact integer sums and the
//! `λ_{N,j}⁻¹ = C(2N,2j)/C(N,j)` weight is applied at read-out.

use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, combination_masks, factorial, mask_to_indices, rank_mask, unrank};
use crate::error::{Error, Result};
use crate::fermion::{jw_pauli, product_sign};
use crate::pauli::{i_pow, PauliString};
use crate::rdm::RdmTensor;
use crate::rng::stream_rng;
use crate::statevector::StateVector;

/// Bijection on `0..2N` with even parity; `map[a] = π(a)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvenPermutation {
    map: Vec<usize>,
}

impl EvenPermutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &v in &map {
            if v >= map.len() || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidPermutation);
            }
        }
        if !map.len().is_multiple_of(2) || !crate::combinatorics::is_even_permutation(&map) {
            return Err(Error::InvalidPermutation);
        }
        Ok(Self { map })
    }

    pub fn identity(n_modes: usize) -> Self {
        Self { map: (0..2 * n_modes).collect() }
    }

    pub fn n_modes(&self) -> usize {
        self.map.len() / 2
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    #[inline]
    pub fn apply(&self, a: usize) -> usize {
        self.map[a]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (a, &b) in self.map.iter().enumerate() {
            inv[b] = a;
        }
        Self { map: inv }
    }
}

/// Uniform draw from Alt(2N): a Fisher–Yates shuffle, followed by swapping
/// the values 0 and 1 when the shuffle came out odd.
pub fn sample_even_permutation<R: Rng + ?Sized>(n_modes: usize, rng: &mut R) -> EvenPermutation {
    let len = 2 * n_modes;
    let mut map: Vec<usize> = (0..len).collect();
    let mut odd = false;
    for i in (1..len).rev() {
        let j = rng.random_range(0..=i);
        if i != j {
            map.swap(i, j);
            odd = !odd;
        }
    }
    if odd {
        let a = map.iter().position(|&v| v == 0).unwrap_or(0);
        let b = map.iter().position(|&v| v == 1).unwrap_or(0);
        map.swap(a, b);
    }
    EvenPermutation { map }
}

/// One shadow sample: the permutation and outcome bits `z_p` (bit `p` of `z`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub permutation: EvenPermutation,
    pub z: u64,
}

impl Snapshot {
    pub fn bit(&self, p: usize) -> bool {
        self.z >> p & 1 == 1
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub depolarizing: f64,
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        Self { depolarizing: 0.0 }
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        let n = Self { depolarizing: p };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.depolarizing) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("depolarizing rate {} outside [0, 1]", self.depolarizing)))
        }
    }
}

/// Hermitian Pauli form of `-i γ_a γ_b`.
pub fn pair_operator(a: usize, b: usize, n_modes: usize) -> Result<PauliString> {
    let p = jw_pauli((1u64 << a) | (1u64 << b), n_modes)?;
    // γ_a γ_b = -γ_b γ_a when a > b
    let c = if a < b { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) };
    p.absorb_unit(c, 1e-12).ok_or(Error::NonHermitianPauli)
}

/// Reusable buffers for repeated snapshot acquisition on one state.
pub struct SnapshotSampler<'a> {
    state: &'a StateVector,
    noise: NoiseParams,
    work: StateVector,
    scratch: Vec<Complex64>,
}

impl<'a> SnapshotSampler<'a> {
    pub fn new(state: &'a StateVector, noise: NoiseParams) -> Result<Self> {
        noise.validate()?;
        Ok(Self { state, noise, work: state.clone(), scratch: Vec::new() })
    }

    pub fn measure<R: Rng + ?Sized>(&mut self, perm: &EvenPermutation, rng: &mut R) -> Result<u64> {
        let n = self.state.n_modes();
        if perm.n_modes() != n {
            return Err(Error::DimensionMismatch { expected: n, found: perm.n_modes() });
        }
        if self.noise.depolarizing > 0.0 && rng.random::<f64>() < self.noise.depolarizing {
            return Ok(rng.random::<u64>() & low_mask(n));
        }
        self.work.clone_from(self.state);
        let mut z = 0u64;
        for p in 0..n {
            let op = pair_operator(perm.apply(2 * p), perm.apply(2 * p + 1), n)?;
            if self.work.measure_pauli_in_place(&op, rng, &mut self.scratch)? < 0 {
                z |= 1 << p;
            }
        }
        Ok(z)
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Snapshot> {
        let permutation = sample_even_permutation(self.state.n_modes(), rng);
        let z = self.measure(&permutation, rng)?;
        Ok(Snapshot { permutation, z })
    }
}

fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn acquire_snapshot<R: Rng + ?Sized>(
    state: &StateVector,
    perm: &EvenPermutation,
    noise: NoiseParams,
    rng: &mut R,
) -> Result<Snapshot> {
    let z = SnapshotSampler::new(state, noise)?.measure(perm, rng)?;
    Ok(Snapshot { permutation: perm.clone(), z })
}

/// `λ_{N,j}⁻¹ = C(2N, 2j) / C(N, j)`.
pub fn inverse_lambda(n_modes: usize, j: usize) -> f64 {
    binomial(2 * n_modes, 2 * j) as f64 / binomial(n_modes, j) as f64
}

fn check_mu(mu: &[usize], n_modes: usize) -> Result<u64> {
    if !mu.len().is_multiple_of(2) {
        return Err(Error::InvalidCombination(format!("odd monomial length {}", mu.len())));
    }
    if mu.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidCombination("monomial indices must be strictly increasing".into()));
    }
    if let Some(&bad) = mu.iter().find(|&&m| m >= 2 * n_modes) {
        return Err(Error::MajoranaOutOfRange { index: bad, n_modes });
    }
    Ok(mu.iter().fold(0, |m, &i| m | 1 << i))
}

/// Single-snapshot estimate of `<Γ_μ>` computed by gathering `ν = π⁻¹(μ)`.
pub fn snapshot_estimate(snap: &Snapshot, mu: &[usize]) -> Result<f64> {
    let n = snap.permutation.n_modes();
    check_mu(mu, n)?;
    let inv = snap.permutation.inverse();
    let mut nu: Vec<usize> = mu.iter().map(|&m| inv.apply(m)).collect();
    nu.sort_unstable();
    let mut pairs = 0u64;
    for w in nu.chunks(2) {
        if w[0] % 2 != 0 || w[1] != w[0] + 1 {
            return Ok(0.0);
        }
        pairs |= 1 << (w[0] / 2);
    }
    // sign aligning π(sorted ν) with sorted μ
    let mut mask = 0u64;
    let mut parity = (snap.z & pairs).count_ones();
    for &v in &nu {
        let b = 1u64 << snap.permutation.apply(v);
        parity += product_sign(mask, b);
        mask |= b;
    }
    let sign = if parity.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * inverse_lambda(n, mu.len() / 2))
}

/// Source of `<Γ_μ>` values for even monomials up to some degree.
pub trait MajoranaExpectations: Sync {
    fn n_modes(&self) -> usize;
    fn max_degree(&self) -> usize;
    /// `<Γ_μ>` for the Majorana index set `mask` (even size).
    fn gamma_expectation(&self, mask: u64) -> f64;
}

/// Mergeable running sums of single-snapshot estimates of `<Γ_μ>` for all
/// even `|μ| ≤ max_degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowAccumulator {
    n_modes: usize,
    max_degree: usize,
    n_snapshots: u64,
    /// `sums[j][rank(μ)]` for `|μ| = 2j`, in units of `λ_{N,j}⁻¹`.
    sums: Vec<Vec<i64>>,
    hits: Vec<Vec<u64>>,
    pair_sets: Vec<Vec<u64>>,
}

impl ShadowAccumulator {
    pub fn new(n_modes: usize, max_degree: usize) -> Result<Self> {
        if !max_degree.is_multiple_of(2) || max_degree > 2 * n_modes {
            return Err(Error::InvalidParameter(format!(
                "accumulator degree {max_degree} must be even and at most {}",
                2 * n_modes
            )));
        }
        if n_modes > 31 {
            return Err(Error::TooManyModes(n_modes));
        }
        let jmax = max_degree / 2;
        let sums = (0..=jmax).map(|j| vec![0; binomial(2 * n_modes, 2 * j) as usize]).collect();
        let hits = (0..=jmax).map(|j| vec![0; binomial(2 * n_modes, 2 * j) as usize]).collect();
        let pair_sets = (0..=jmax).map(|j| combination_masks(n_modes, j)).collect();
        Ok(Self { n_modes, max_degree, n_snapshots: 0, sums, hits, pair_sets })
    }

    pub fn n_snapshots(&self) -> u64 {
        self.n_snapshots
    }

    pub fn accumulate(&mut self, snap: &Snapshot) -> Result<()> {
        let n = self.n_modes;
        if snap.permutation.n_modes() != n {
            return Err(Error::DimensionMismatch { expected: n, found: snap.permutation.n_modes() });
        }
        let pi = snap.permutation.as_slice();
        self.n_snapshots += 1;
        self.sums[0][0] += 1;
        self.hits[0][0] += 1;
        for j in 1..self.sums.len() {
            for &set in &self.pair_sets[j] {
                let mut mask = 0u64;
                let mut parity = (snap.z & set).count_ones();
                let mut rest = set;
                while rest != 0 {
                    let p = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    for b in [1u64 << pi[2 * p], 1u64 << pi[2 * p + 1]] {
                        parity += product_sign(mask, b);
                        mask |= b;
                    }
                }
                let r = rank_mask(mask);
                self.sums[j][r] += if parity.is_multiple_of(2) { 1 } else { -1 };
                self.hits[j][r] += 1;
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.n_modes != other.n_modes || self.max_degree != other.max_degree {
            return Err(Error::ShapeMismatch(format!(
                "accumulators ({}, {}) and ({}, {})",
                self.n_modes, self.max_degree, other.n_modes, other.max_degree
            )));
        }
        self.n_snapshots += other.n_snapshots;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(())
    }

    fn slot(&self, mask: u64) -> Option<(usize, usize)> {
        let d = mask.count_ones() as usize;
        if !d.is_multiple_of(2) || d > self.max_degree || (mask >> (2 * self.n_modes)) != 0 {
            return None;
        }
        Some((d / 2, rank_mask(mask)))
    }

    /// Mean estimate of `<Γ_μ>`; `μ` must be sorted and even.
    pub fn estimate(&self, mu: &[usize]) -> Result<f64> {
        let mask = self.checked_mask(mu)?;
        Ok(self.gamma_expectation(mask))
    }

    /// Standard error of the mean estimate of `<Γ_μ>`.
    pub fn standard_error(&self, mu: &[usize]) -> Result<f64> {
        let mask = self.checked_mask(mu)?;
        let (j, r) = self.slot(mask).expect("checked");
        let n = self.n_snapshots as f64;
        if self.n_snapshots < 2 {
            return Ok(f64::INFINITY);
        }
        let w = inverse_lambda(self.n_modes, j);
        let mean = w * self.sums[j][r] as f64 / n;
        let second = w * w * self.hits[j][r] as f64 / n;
        Ok(((second - mean * mean).max(0.0) / (n - 1.0)).sqrt())
    }

    fn checked_mask(&self, mu: &[usize]) -> Result<u64> {
        let mask = check_mu(mu, self.n_modes)?;
        if mu.len() > self.max_degree {
            return Err(Error::OrderInsufficient { have: self.max_degree, need: mu.len() });
        }
        Ok(mask)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut entries = Vec::new();
        for (j, (sums, hits)) in self.sums.iter().zip(&self.hits).enumerate() {
            for (r, (&sum, &hit)) in sums.iter().zip(hits).enumerate() {
                if hit != 0 {
                    entries.push(AccumulatorEntry { mu: unrank(r, 2 * j), sum, hits: hit });
                }
            }
        }
        let doc = AccumulatorDocument {
            format: ACC_FORMAT.into(),
            version: ACC_VERSION,
            n_modes: self.n_modes,
            max_degree: self.max_degree,
            n_snapshots: self.n_snapshots,
            entries,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: AccumulatorDocument = serde_json::from_str(s)?;
        if doc.format != ACC_FORMAT || doc.version != ACC_VERSION {
            return Err(Error::Format(format!("unsupported accumulator document {} v{}", doc.format, doc.version)));
        }
        let mut acc = Self::new(doc.n_modes, doc.max_degree)?;
        acc.n_snapshots = doc.n_snapshots;
        for e in doc.entries {
            let mask = acc.checked_mask(&e.mu).map_err(|e| Error::Format(e.to_string()))?;
            let (j, r) = acc.slot(mask).expect("checked");
            acc.sums[j][r] = e.sum;
            acc.hits[j][r] = e.hits;
        }
        Ok(acc)
    }
}

impl MajoranaExpectations for ShadowAccumulator {
    fn n_modes(&self) -> usize {
        self.n_modes
    }

    fn max_degree(&self) -> usize {
        self.max_degree
    }

    fn gamma_expectation(&self, mask: u64) -> f64 {
        match self.slot(mask) {
            Some((j, r)) if self.n_snapshots > 0 => {
                inverse_lambda(self.n_modes, j) * self.sums[j][r] as f64 / self.n_snapshots as f64
            }
            _ => 0.0,
        }
    }
}

const ACC_FORMAT: &str = "shadow-accumulator";
const ACC_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct AccumulatorEntry {
    mu: Vec<usize>,
    sum: i64,
    hits: u64,
}

#[derive(Serialize, Deserialize)]
struct AccumulatorDocument {
    format: String,
    version: u32,
    n_modes: usize,
    max_degree: usize,
    n_snapshots: u64,
    entries: Vec<AccumulatorEntry>,
}

/// Exact `<Γ_μ>` of a state, the infinite-shot limit of the estimator.
#[derive(Clone, Debug)]
pub struct ExactExpectations {
    n_modes: usize,
    max_degree: usize,
    values: Vec<Vec<f64>>,
}

impl ExactExpectations {
    pub fn from_state(state: &StateVector, max_degree: usize) -> Result<Self> {
        let n = state.n_modes();
        if !max_degree.is_multiple_of(2) || max_degree > 2 * n {
            return Err(Error::InvalidParameter(format!("degree {max_degree} must be even and at most {}", 2 * n)));
        }
        let values = (0..=max_degree / 2)
            .map(|j| {
                combination_masks(2 * n, 2 * j)
                    .into_par_iter()
                    .map(|mask| {
                        // Γ_μ = (-i)^j γ_μ
                        let p = jw_pauli(mask, n)?;
                        Ok((i_pow((3 * j % 4) as u8) * p.sandwich(state.amplitudes())).re)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_modes: n, max_degree, values })
    }
}

impl MajoranaExpectations for ExactExpectations {
    fn n_modes(&self) -> usize {
        self.n_modes
    }

    fn max_degree(&self) -> usize {
        self.max_degree
    }

    fn gamma_expectation(&self, mask: u64) -> f64 {
        let d = mask.count_ones() as usize;
        if !d.is_multiple_of(2) || d > self.max_degree {
            return 0.0;
        }
        self.values[d / 2][rank_mask(mask)]
    }
}

/// Median over groups of per-group means. Off by default; the plain mean is
/// the merged accumulator.
#[derive(Clone, Debug)]
pub struct MedianOfMeans {
    groups: Vec<ShadowAccumulator>,
}

impl MedianOfMeans {
    pub fn new(groups: Vec<ShadowAccumulator>) -> Result<Self> {
        let first = groups.first().ok_or_else(|| Error::InvalidParameter("no groups".into()))?;
        if groups.iter().any(|g| g.n_modes != first.n_modes || g.max_degree != first.max_degree) {
            return Err(Error::ShapeMismatch("median-of-means groups differ in shape".into()));
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[ShadowAccumulator] {
        &self.groups
    }
}

impl MajoranaExpectations for MedianOfMeans {
    fn n_modes(&self) -> usize {
        self.groups[0].n_modes
    }

    fn max_degree(&self) -> usize {
        self.groups[0].max_degree
    }

    fn gamma_expectation(&self, mask: u64) -> f64 {
        let mut v: Vec<f64> = self.groups.iter().map(|g| g.gamma_expectation(mask)).collect();
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        }
    }
}

/// `(1/k!) <a†_{u_1} … a†_{u_k} a_{l_k} … a_{l_1}>` from Majorana expectations,
/// expanding each ladder factor as `(γ_{2p} ∓ i γ_{2p+1}) / 2`.
fn ladder_element<S: MajoranaExpectations + ?Sized>(src: &S, upper: &[usize], lower: &[usize]) -> Complex64 {
    let k = upper.len();
    let factors: Vec<(usize, bool)> =
        upper.iter().map(|&m| (m, true)).chain(lower.iter().rev().map(|&m| (m, false))).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for choice in 0u32..(1 << factors.len()) {
        let mut mask = 0u64;
        let mut parity = 0u32;
        let mut e = 0u32;
        for (t, &(mode, dagger)) in factors.iter().enumerate() {
            let g = 2 * mode + (choice >> t & 1) as usize;
            if g % 2 == 1 {
                e += if dagger { 3 } else { 1 };
            }
            let b = 1u64 << g;
            parity += product_sign(mask, b);
            mask ^= b;
        }
        let d = mask.count_ones();
        if !d.is_multiple_of(2) {
            continue;
        }
        // <γ_μ> = i^j <Γ_μ>
        let v = src.gamma_expectation(mask);
        if v == 0.0 {
            continue;
        }
        let c = i_pow(((e + d / 2) % 4) as u8);
        total += if parity.is_multiple_of(2) { c * v } else { -c * v };
    }
    total / (4f64.powi(k as i32) * factorial(k))
}

/// Builds `ᵏD` from Majorana expectations. Elements with `I ≤ J` are
/// computed and the rest mirrored, so the result is Hermitian by construction.
pub fn assemble_rdm<S: MajoranaExpectations + ?Sized>(src: &S, k: usize) -> Result<RdmTensor> {
    if src.max_degree() < 2 * k {
        return Err(Error::OrderInsufficient { have: src.max_degree(), need: 2 * k });
    }
    let n = src.n_modes();
    let mut out = RdmTensor::zeros(n, k);
    let dim = out.dim();
    let combos: Vec<Vec<usize>> = (0..dim).map(|r| unrank(r, k)).collect();
    let rows: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|i| (i..dim).map(|j| ladder_element(src, &combos[i], &combos[j])).collect())
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + off;
            if i == j {
                out.set(i, i, Complex64::new(v.re, 0.0));
            } else {
                out.set(i, j, v);
                out.set(j, i, v.conj());
            }
        }
    }
    Ok(out)
}

/// A deterministic shot budget: snapshot `s` belongs to batch
/// `s / batch_size`, and batch `b` draws from stream `b` of `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionPlan {
    pub n_snapshots: u64,
    pub max_degree: usize,
    pub noise: NoiseParams,
    pub seed: u64,
    pub batch_size: u64,
}

impl AcquisitionPlan {
    pub const DEFAULT_BATCH: u64 = 2048;

    pub fn new(n_snapshots: u64, max_degree: usize, seed: u64) -> Self {
        Self { n_snapshots, max_degree, noise: NoiseParams::noiseless(), seed, batch_size: Self::DEFAULT_BATCH }
    }

    pub fn with_noise(mut self, noise: NoiseParams) -> Self {
        self.noise = noise;
        self
    }

    pub fn n_batches(&self) -> u64 {
        self.n_snapshots.div_ceil(self.batch_size.max(1))
    }
}

fn collect_batch(state: &StateVector, plan: &AcquisitionPlan, b: u64) -> Result<ShadowAccumulator> {
    let mut acc = ShadowAccumulator::new(state.n_modes(), plan.max_degree)?;
    let mut sampler = SnapshotSampler::new(state, plan.noise)?;
    let mut rng = stream_rng(plan.seed, b);
    let start = b * plan.batch_size;
    let end = (start + plan.batch_size).min(plan.n_snapshots);
    for _ in start..end {
        acc.accumulate(&sampler.sample(&mut rng)?)?;
    }
    Ok(acc)
}

/// Accumulates the given batches in parallel. The result does not depend on
/// the thread count because the integer sums commute.
pub fn collect_batches(state: &StateVector, plan: &AcquisitionPlan, batches: Range<u64>) -> Result<ShadowAccumulator> {
    if plan.batch_size == 0 {
        return Err(Error::InvalidParameter("batch size must be positive".into()));
    }
    let empty = ShadowAccumulator::new(state.n_modes(), plan.max_degree)?;
    batches
        .into_par_iter()
        .map(|b| collect_batch(state, plan, b))
        .try_reduce(|| empty.clone(), |mut a, b| {
            a.merge(&b)?;
            Ok(a)
        })
}

pub fn collect_shadows(state: &StateVector, plan: &AcquisitionPlan) -> Result<ShadowAccumulator> {
    collect_batches(state, plan, 0..plan.n_batches())
}

/// Like [`collect_shadows`] but keeps batch `b` in group `b % n_groups`.
/// Merging the groups reproduces the plain accumulator exactly.
pub fn collect_grouped(state: &StateVector, plan: &AcquisitionPlan, n_groups: usize) -> Result<MedianOfMeans> {
    if n_groups == 0 {
        return Err(Error::InvalidParameter("median-of-means needs at least one group".into()));
    }
    let groups = (0..n_groups as u64)
        .into_par_iter()
        .map(|g| {
            let mut acc = ShadowAccumulator::new(state.n_modes(), plan.max_degree)?;
            let mut b = g;
            while b < plan.n_batches() {
                acc.merge(&collect_batch(state, plan, b)?)?;
                b += n_groups as u64;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    MedianOfMeans::new(groups)
}

/// Pair-mode subsets `p` whose Majorana pairs `{2p, 2p+1}` make up `mask`,
/// or `None` if `mask` is not a pair union.
pub fn pair_modes(mask: u64) -> Option<Vec<usize>> {
    let idx = mask_to_indices(mask);
    idx.chunks(2)
        .map(|w| (w.len() == 2 && w[0] % 2 == 0 && w[1] == w[0] + 1).then_some(w[0] / 2))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::hf_state;

    #[test]
    fn alt2_is_trivial() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..20 {
            assert_eq!(sample_even_permutation(1, &mut rng), EvenPermutation::identity(1));
        }
    }

    #[test]
    fn permutation_validation() {
        assert!(EvenPermutation::new(vec![1, 0, 2, 3]).is_err());
        assert!(EvenPermutation::new(vec![1, 0, 3, 2]).is_ok());
        assert!(EvenPermutation::new(vec![0, 0, 1, 2]).is_err());
        let p = EvenPermutation::new(vec![1, 2, 0, 3]).unwrap();
        assert_eq!(p.inverse().inverse(), p);
    }

    #[test]
    fn identity_snapshot_reads_occupations() {
        let s = hf_state(4, &[0, 1]).unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..10 {
            let snap = acquire_snapshot(&s, &EvenPermutation::identity(4), NoiseParams::noiseless(), &mut rng).unwrap();
            assert_eq!(snap.z, 0b0011);
        }
    }

    #[test]
    fn estimator_examples() {
        let snap = Snapshot { permutation: EvenPermutation::identity(2), z: 0 };
        assert_eq!(snapshot_estimate(&snap, &[0, 1]).unwrap(), 3.0);
        assert_eq!(snapshot_estimate(&snap, &[0, 2]).unwrap(), 0.0);
        assert_eq!(snapshot_estimate(&snap, &[]).unwrap(), 1.0);
        assert!(snapshot_estimate(&snap, &[0]).is_err());
        assert!(snapshot_estimate(&snap, &[0, 4]).is_err());
    }

    #[test]
    fn scatter_matches_gather() {
        let n = 4;
        let mut rng = stream_rng(5, 0);
        let mut acc = ShadowAccumulator::new(n, 4).unwrap();
        let snaps: Vec<Snapshot> = (0..50)
            .map(|_| Snapshot { permutation: sample_even_permutation(n, &mut rng), z: rng.random::<u64>() & 0xF })
            .collect();
        for s in &snaps {
            acc.accumulate(s).unwrap();
        }
        for j in 0..=2 {
            let w = inverse_lambda(n, j);
            for mu in crate::combinatorics::combinations(2 * n, 2 * j) {
                // both sides are integer multiples of λ⁻¹; compare the integers
                let gathered: i64 = snaps.iter().map(|s| (snapshot_estimate(s, &mu).unwrap() / w).round() as i64).sum();
                let scattered = acc.estimate(&mu).unwrap() * snaps.len() as f64 / w;
                assert_eq!(scattered.round() as i64, gathered);
                assert!((scattered - gathered as f64).abs() < 1e-9);
            }
        }
        assert_eq!(acc.estimate(&[]).unwrap(), 1.0);
    }

    #[test]
    fn merge_and_json() {
        let s = hf_state(3, &[0, 1]).unwrap();
        let plan = AcquisitionPlan { batch_size: 7, ..AcquisitionPlan::new(40, 4, 9) };
        let whole = collect_shadows(&s, &plan).unwrap();
        let mut a = collect_batches(&s, &plan, 0..3).unwrap();
        a.merge(&collect_batches(&s, &plan, 3..plan.n_batches()).unwrap()).unwrap();
        assert_eq!(a, whole);
        assert_eq!(ShadowAccumulator::from_json(&whole.to_json().unwrap()).unwrap(), whole);
        let grouped = collect_grouped(&s, &plan, 3).unwrap();
        let mut merged = ShadowAccumulator::new(3, 4).unwrap();
        for g in grouped.groups() {
            merged.merge(g).unwrap();
        }
        assert_eq!(merged, whole);
    }

    #[test]
    fn exact_expectations_reproduce_rdms() {
        let (s, _) = crate::models::random_uccsd(4, 0.4, 2).unwrap();
        let ex = ExactExpectations::from_state(&s, 4).unwrap();
        for k in 1..=2 {
            let d = assemble_rdm(&ex, k).unwrap();
            assert!(d.max_abs_diff(&s.exact_rdm(k).unwrap()).unwrap() < 1e-12);
        }
        assert!(matches!(assemble_rdm(&ex, 3), Err(Error::OrderInsufficient { .. })));
    }

    #[test]
    fn pair_mode_detection() {
        assert_eq!(pair_modes(0b1100), Some(vec![1]));
        assert_eq!(pair_modes(0b0110), None);
    }
}
