//! Grassmann wedge products, cumulant decomposition of reduced density
//! matrices, cumulant-truncated reconstruction of 3- and 4-RDMs, and the L1
//! accuracy ratio.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::combinatorics::{combinations, factorial, rank, sort_with_parity};
use crate::error::{Error, Result};
use crate::rdm::RdmTensor;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Signed splits of a sorted combination `c` into a `p`-subset and its
/// complement: `(sign, rank(S), rank(c \ S))`, where the sign is that of the
/// permutation `(S, c \ S)` of `c`.
fn splits(c: &[usize], p: usize) -> Vec<(f64, usize, usize)> {
    let k = c.len();
    combinations(k, p)
        .into_iter()
        .map(|pos| {
            let mut order = pos.clone();
            let rest: Vec<usize> = (0..k).filter(|i| !pos.contains(i)).collect();
            order.extend(&rest);
            let odd = sort_with_parity(&mut order);
            let s: Vec<usize> = pos.iter().map(|&i| c[i]).collect();
            let r: Vec<usize> = rest.iter().map(|&i| c[i]).collect();
            (if odd { -1.0 } else { 1.0 }, rank(&s), rank(&r))
        })
        .collect()
}

fn check_pair(a: &RdmTensor, b: &RdmTensor) -> Result<()> {
    if a.n_modes() != b.n_modes() {
        return Err(Error::ShapeMismatch(format!("{} vs {} modes", a.n_modes(), b.n_modes())));
    }
    if a.order() == 0 || b.order() == 0 {
        return Err(Error::ShapeMismatch("wedge operands need order >= 1".into()));
    }
    if a.order() + b.order() > a.n_modes() {
        return Err(Error::OrderOverflow(a.order() + b.order()));
    }
    Ok(())
}

/// `(a ∧ b)^I_J = C(p+q, p)⁻² Σ_{S ⊂ I, T ⊂ J} sgn(S) sgn(T) a^S_T b^{I∖S}_{J∖T}`,
/// which is the double permutation sum with the redundant orderings folded.
pub fn wedge(a: &RdmTensor, b: &RdmTensor) -> Result<RdmTensor> {
    check_pair(a, b)?;
    let (p, q) = (a.order(), b.order());
    let n = a.n_modes();
    let mut out = RdmTensor::zeros(n, p + q);
    let dim = out.dim();
    let table: Vec<Vec<(f64, usize, usize)>> = combinations(n, p + q).iter().map(|c| splits(c, p)).collect();
    let norm = {
        let c = crate::combinatorics::binomial(p + q, p) as f64;
        1.0 / (c * c)
    };
    out.values_mut().par_chunks_mut(dim).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate() {
            let mut acc = ZERO;
            for &(si, ai, bi) in &table[i] {
                for &(sj, aj, bj) in &table[j] {
                    acc += a.get(ai, aj) * b.get(bi, bj) * (si * sj);
                }
            }
            *slot = acc * norm;
        }
    });
    Ok(out)
}

/// All permutations of `0..n` with their parities.
fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
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
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out.into_iter()
        .map(|p| {
            let odd = !crate::combinatorics::is_even_permutation(&p);
            (p, odd)
        })
        .collect()
}

/// Literal `((p+q)!)⁻² Σ_{π,σ} sgn(π) sgn(σ) a b` over full index tuples.
/// Slow; kept as a cross-check for [`wedge`].
pub fn wedge_reference(a: &RdmTensor, b: &RdmTensor) -> Result<RdmTensor> {
    check_pair(a, b)?;
    let (p, q) = (a.order(), b.order());
    if p + q > 4 {
        return Err(Error::OrderOverflow(p + q));
    }
    let n = a.n_modes();
    let mut out = RdmTensor::zeros(n, p + q);
    let perms = permutations(p + q);
    let norm = 1.0 / (factorial(p + q) * factorial(p + q));
    let combos = combinations(n, p + q);
    for (ri, ci) in combos.iter().enumerate() {
        for (rj, cj) in combos.iter().enumerate() {
            let mut acc = ZERO;
            for (sigma, s_odd) in &perms {
                let up: Vec<usize> = sigma.iter().map(|&x| ci[x]).collect();
                for (pi, p_odd) in &perms {
                    let lo: Vec<usize> = pi.iter().map(|&x| cj[x]).collect();
                    let term = a.element(&up[..p], &lo[..p])? * b.element(&up[p..], &lo[p..])?;
                    acc += if s_odd ^ p_odd { -term } else { term };
                }
            }
            out.set(ri, rj, acc * norm);
        }
    }
    Ok(out)
}

/// `a ∧ a ∧ … ∧ a` with `m ≥ 1` factors.
pub fn wedge_power(a: &RdmTensor, m: usize) -> Result<RdmTensor> {
    if m == 0 {
        return Err(Error::InvalidParameter("wedge power needs at least one factor".into()));
    }
    let mut acc = a.clone();
    for _ in 1..m {
        acc = wedge(&acc, a)?;
    }
    Ok(acc)
}

fn expect_order(t: &RdmTensor, k: usize, n: usize) -> Result<()> {
    if t.order() != k || t.n_modes() != n {
        return Err(Error::ShapeMismatch(format!(
            "expected order {k} on {n} modes, got order {} on {} modes",
            t.order(),
            t.n_modes()
        )));
    }
    Ok(())
}

/// Connected parts `Δ1, Δ2` and optionally `Δ3`.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantSet {
    pub delta1: RdmTensor,
    pub delta2: RdmTensor,
    pub delta3: Option<RdmTensor>,
}

/// `Δ1 = D1`, `Δ2 = D2 − D1∧D1`, `Δ3 = D3 − 3 Δ2∧Δ1 − Δ1∧Δ1∧Δ1`.
pub fn cumulants_from_rdms(d1: &RdmTensor, d2: &RdmTensor, d3: Option<&RdmTensor>) -> Result<CumulantSet> {
    let n = d1.n_modes();
    expect_order(d1, 1, n)?;
    expect_order(d2, 2, n)?;
    let delta2 = d2.sub(&wedge(d1, d1)?)?;
    let delta3 = match d3 {
        Some(d3) => {
            expect_order(d3, 3, n)?;
            let connected = wedge(&delta2, d1)?.scale(3.0).add_scaled(&wedge_power(d1, 3)?, 1.0)?;
            Some(d3.sub(&connected)?)
        }
        None => None,
    };
    Ok(CumulantSet { delta1: d1.clone(), delta2, delta3 })
}

/// Inverse of [`cumulants_from_rdms`]: returns `(D1, D2, D3?)`.
pub fn reassemble(c: &CumulantSet) -> Result<(RdmTensor, RdmTensor, Option<RdmTensor>)> {
    let d1 = c.delta1.clone();
    let d2 = c.delta2.add_scaled(&wedge(&d1, &d1)?, 1.0)?;
    let d3 = match &c.delta3 {
        Some(delta3) => Some(
            delta3
                .add_scaled(&wedge(&c.delta2, &d1)?, 3.0)?
                .add_scaled(&wedge_power(&d1, 3)?, 1.0)?,
        ),
        None => None,
    };
    Ok((d1, d2, d3))
}

/// `³D ≈ 3 ²D∧¹D − 2 ¹D∧¹D∧¹D`, exact when the third cumulant vanishes.
pub fn reconstruct_3rdm(d1: &RdmTensor, d2: &RdmTensor) -> Result<RdmTensor> {
    let n = d1.n_modes();
    expect_order(d1, 1, n)?;
    expect_order(d2, 2, n)?;
    if n < 3 {
        return Err(Error::OrderOverflow(3));
    }
    wedge(d2, d1)?.scale(3.0).add_scaled(&wedge_power(d1, 3)?, -2.0)
}

/// `⁴D ≈ 6 Δ2∧Δ1∧Δ1 + 3 Δ2∧Δ2 + Δ1^∧4`, exact when `Δ3 = Δ4 = 0`.
pub fn reconstruct_4rdm(d1: &RdmTensor, d2: &RdmTensor) -> Result<RdmTensor> {
    let n = d1.n_modes();
    expect_order(d1, 1, n)?;
    expect_order(d2, 2, n)?;
    if n < 4 {
        return Err(Error::OrderOverflow(4));
    }
    let d11 = wedge(d1, d1)?;
    let delta2 = d2.sub(&d11)?;
    wedge(&delta2, &d11)?
        .scale(6.0)
        .add_scaled(&wedge(&delta2, &delta2)?, 3.0)?
        .add_scaled(&wedge(&d11, &d11)?, 1.0)
}

/// How an L1 distance counts tensor entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum L1Convention {
    /// Every ordered index tuple, `(k!)²` copies of each sorted pair.
    #[default]
    FullTuple,
    /// Sorted `(I, J)` pairs only.
    SortedPairs,
}

fn check_same(a: &RdmTensor, b: &RdmTensor) -> Result<()> {
    if a.order() != b.order() || a.n_modes() != b.n_modes() {
        return Err(Error::ShapeMismatch(format!(
            "order {} on {} modes vs order {} on {} modes",
            a.order(),
            a.n_modes(),
            b.order(),
            b.n_modes()
        )));
    }
    Ok(())
}

pub fn l1_distance(a: &RdmTensor, b: &RdmTensor, convention: L1Convention) -> Result<f64> {
    check_same(a, b)?;
    let sorted: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).sum();
    Ok(match convention {
        L1Convention::SortedPairs => sorted,
        L1Convention::FullTuple => {
            let f = factorial(a.order());
            sorted * f * f
        }
    })
}

/// L1 distance restricted to sampled sorted pairs `(rank(I), rank(J))`.
pub fn l1_distance_sampled(a: &RdmTensor, b: &RdmTensor, pairs: &[(usize, usize)]) -> Result<f64> {
    check_same(a, b)?;
    let dim = a.dim();
    pairs
        .iter()
        .map(|&(i, j)| {
            if i >= dim || j >= dim {
                return Err(Error::ShapeMismatch(format!("pair ({i}, {j}) outside dimension {dim}")));
            }
            Ok((a.get(i, j) - b.get(i, j)).norm())
        })
        .sum()
}

/// Ratio below which a denominator is treated as zero, relative to
/// `1 + |exact|₁`.
pub const ZERO_DENOMINATOR_RTOL: f64 = 1e-10;

/// `r = |D − D_cum|₁ / |D − D_naive|₁`, optionally over sampled sorted pairs.
pub fn accuracy_ratio(
    exact: &RdmTensor,
    est_cum: &RdmTensor,
    est_naive: &RdmTensor,
    sample: Option<&[(usize, usize)]>,
) -> Result<f64> {
    let zero = RdmTensor::zeros(exact.n_modes(), exact.order());
    let dist = |x: &RdmTensor, y: &RdmTensor| match sample {
        Some(s) => l1_distance_sampled(x, y, s),
        None => l1_distance(x, y, L1Convention::FullTuple),
    };
    let num = dist(exact, est_cum)?;
    let den = dist(exact, est_naive)?;
    let scale = 1.0 + dist(exact, &zero)?;
    if den <= ZERO_DENOMINATOR_RTOL * scale {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// Distinct uniformly drawn sorted-pair positions of a `dim × dim` tensor.
/// Returns every position when `count ≥ dim²`.
pub fn sample_index_pairs<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let total = dim * dim;
    let mut picks = rand::seq::index::sample(rng, total, count.min(total)).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|f| (f / dim, f % dim)).collect()
}
