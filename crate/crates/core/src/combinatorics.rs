//! Binomials, colexicographic ranking of combinations, and permutation parity.
//!
//! Combinations are handled either as strictly increasing index slices or as
//! `u64` bitmasks. Ranks use the combinatorial number system,
//! `rank(c_0 < c_1 < ... < c_{k-1}) = sum_i C(c_i, i + 1)`, which orders
//! combinations exactly as their bitmasks order as integers.

const TABLE: usize = 65;

/// Pascal triangle up to n = 64, saturating at `u64::MAX` (never reached for
/// the sizes used in this crate).
pub struct BinomialTable {
    rows: Vec<[u64; TABLE]>,
}

impl BinomialTable {
    fn new() -> Self {
        let mut rows = vec![[0u64; TABLE]; TABLE];
        for n in 0..TABLE {
            rows[n][0] = 1;
            for k in 1..=n {
                rows[n][k] = rows[n - 1][k - 1].saturating_add(if k < n { rows[n - 1][k] } else { 0 });
            }
        }
        Self { rows }
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize) -> u64 {
        if k > n || n >= TABLE {
            0
        } else {
            self.rows[n][k]
        }
    }
}

pub fn table() -> &'static BinomialTable {
    static T: std::sync::OnceLock<BinomialTable> = std::sync::OnceLock::new();
    T.get_or_init(BinomialTable::new)
}

#[inline]
pub fn binomial(n: usize, k: usize) -> u64 {
    table().get(n, k)
}

/// Rank of a strictly increasing combination.
#[inline]
pub fn rank(indices: &[usize]) -> usize {
    let t = table();
    indices
        .iter()
        .enumerate()
        .map(|(i, &c)| t.get(c, i + 1) as usize)
        .sum()
}

/// Rank of the combination encoded by the set bits of `mask`.
#[inline]
pub fn rank_mask(mut mask: u64) -> usize {
    let t = table();
    let mut r = 0usize;
    let mut i = 1;
    while mask != 0 {
        let c = mask.trailing_zeros() as usize;
        r += t.get(c, i) as usize;
        i += 1;
        mask &= mask - 1;
    }
    r
}

/// Inverse of [`rank`] for combinations of size `k`.
pub fn unrank(mut r: usize, k: usize) -> Vec<usize> {
    let t = table();
    let mut out = vec![0usize; k];
    for i in (0..k).rev() {
        // largest c with C(c, i+1) <= r
        let mut c = i;
        while (t.get(c + 1, i + 1) as usize) <= r {
            c += 1;
        }
        out[i] = c;
        r -= t.get(c, i + 1) as usize;
    }
    out
}

pub fn mask_to_indices(mut mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        out.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    out
}

pub fn indices_to_mask(indices: &[usize]) -> u64 {
    indices.iter().fold(0u64, |m, &i| m | (1u64 << i))
}

/// All `k`-subsets of `0..n` as bitmasks, in rank order.
pub fn combination_masks(n: usize, k: usize) -> Vec<u64> {
    assert!(n <= 64);
    let count = binomial(n, k) as usize;
    let mut out = Vec::with_capacity(count);
    if k == 0 {
        out.push(0);
        return out;
    }
    if k > n {
        return out;
    }
    let limit: u128 = 1u128 << n;
    let mut v: u64 = (1u64 << k) - 1;
    loop {
        out.push(v);
        // Gosper's hack
        let c = v & v.wrapping_neg();
        let r = v as u128 + c as u128;
        if r >= limit {
            break;
        }
        let r = r as u64;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// All `k`-subsets of `0..n` as index vectors, in rank order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    combination_masks(n, k).into_iter().map(mask_to_indices).collect()
}

/// True when the permutation (given as an image array) is even.
pub fn is_even_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut transpositions = 0usize;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions.is_multiple_of(2)
}

/// Sorts `values` in place and returns true when an odd number of swaps was
/// needed. Intended for the short sequences (length <= 8) met here.
#[inline]
pub fn sort_with_parity(values: &mut [usize]) -> bool {
    let mut odd = false;
    for i in 1..values.len() {
        let mut j = i;
        while j > 0 && values[j - 1] > values[j] {
            values.swap(j - 1, j);
            odd = !odd;
            j -= 1;
        }
    }
    odd
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}
