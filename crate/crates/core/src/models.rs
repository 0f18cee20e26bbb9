//! Spinless Hubbard Hamiltonians and the reference and random states used by
//! the experiments.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{ladder_sum_to_majorana, LadderMonomial, MajoranaPolynomial};
use crate::rng::stream_rng;
use crate::statevector::{sector_eigensolve, ExpOptions, SectorBasis, StateVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lattice {
    Chain { length: usize },
    Grid { lx: usize, ly: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HubbardParams {
    pub lattice: Lattice,
    #[serde(default)]
    pub boundary: Boundary,
    pub t: f64,
    pub u: f64,
    #[serde(default)]
    pub mu: f64,
}

impl HubbardParams {
    pub fn chain(length: usize, t: f64, u: f64, mu: f64) -> Self {
        Self { lattice: Lattice::Chain { length }, boundary: Boundary::Open, t, u, mu }
    }

    pub fn grid(lx: usize, ly: usize, t: f64, u: f64, mu: f64) -> Self {
        Self { lattice: Lattice::Grid { lx, ly }, boundary: Boundary::Open, t, u, mu }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.lattice {
            Lattice::Chain { length } if length < 2 => {
                Err(Error::InvalidParameter(format!("chain length {length} < 2")))
            }
            Lattice::Grid { lx, ly } if lx < 2 || ly < 2 => {
                Err(Error::InvalidParameter(format!("grid {lx}x{ly} needs both sides >= 2")))
            }
            _ => Ok(()),
        }
    }

    pub fn n_sites(&self) -> usize {
        match self.lattice {
            Lattice::Chain { length } => length,
            Lattice::Grid { lx, ly } => lx * ly,
        }
    }

    /// Short label such as `chain9` or `grid3x3`.
    pub fn label(&self) -> String {
        match self.lattice {
            Lattice::Chain { length } => format!("chain{length}"),
            Lattice::Grid { lx, ly } => format!("grid{lx}x{ly}"),
        }
    }

    /// Nearest-neighbour bonds `(i, j)` with `i < j`, deduplicated.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let periodic = self.boundary == Boundary::Periodic;
        let mut edges = Vec::new();
        let mut push = |a: usize, b: usize| {
            if a != b {
                edges.push((a.min(b), a.max(b)));
            }
        };
        match self.lattice {
            Lattice::Chain { length } => {
                for i in 0..length - 1 {
                    push(i, i + 1);
                }
                if periodic {
                    push(length - 1, 0);
                }
            }
            Lattice::Grid { lx, ly } => {
                let site = |x: usize, y: usize| x + lx * y;
                for y in 0..ly {
                    for x in 0..lx {
                        if x + 1 < lx {
                            push(site(x, y), site(x + 1, y));
                        } else if periodic {
                            push(site(x, y), site(0, y));
                        }
                        if y + 1 < ly {
                            push(site(x, y), site(x, y + 1));
                        } else if periodic {
                            push(site(x, y), site(x, 0));
                        }
                    }
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}

/// Hamiltonian terms before any algebraic merging: two hopping terms per
/// bond, one chemical-potential term per site, one interaction per bond.
pub fn hubbard_ladder_terms(p: &HubbardParams) -> Result<Vec<LadderMonomial>> {
    p.validate()?;
    let edges = p.edges();
    let re = |v: f64| Complex64::new(v, 0.0);
    let mut terms = Vec::with_capacity(3 * edges.len() + p.n_sites());
    for &(i, j) in &edges {
        terms.push(LadderMonomial::from_modes(&[i], &[j], re(-p.t)));
        terms.push(LadderMonomial::from_modes(&[j], &[i], re(-p.t)));
    }
    for i in 0..p.n_sites() {
        terms.push(LadderMonomial::from_modes(&[i], &[i], re(-p.mu)));
    }
    for &(i, j) in &edges {
        let ni = LadderMonomial::from_modes(&[i], &[i], re(p.u));
        let nj = LadderMonomial::from_modes(&[j], &[j], re(1.0));
        terms.push(ni.times(&nj));
    }
    Ok(terms)
}

pub fn build_hubbard(p: &HubbardParams) -> Result<MajoranaPolynomial> {
    ladder_sum_to_majorana(&hubbard_ladder_terms(p)?, p.n_sites())
}

/// Modes `0..⌈N/2⌉`.
pub fn half_filling(n_modes: usize) -> Vec<usize> {
    (0..n_modes.div_ceil(2)).collect()
}

/// `a†_{λ_1} a†_{λ_2} … |0>` with `λ` ascending; with this ordering the
/// amplitude on the occupied bitstring is +1.
pub fn hf_state(n_modes: usize, occupied: &[usize]) -> Result<StateVector> {
    let mut bits = 0u64;
    for &m in occupied {
        if m >= n_modes {
            return Err(Error::ModeOutOfRange { index: m, n_modes });
        }
        bits |= 1 << m;
    }
    StateVector::basis(n_modes, bits)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleExcitation {
    pub create: usize,
    pub annihilate: usize,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleExcitation {
    pub create: [usize; 2],
    pub annihilate: [usize; 2],
    pub amplitude: f64,
}

/// Amplitudes of `T = Σ t_im a_i† a_m + Σ t_ijmn a_i† a_j† a_m a_n` over
/// unoccupied `i < j` and occupied `m < n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UccsdParams {
    pub n_modes: usize,
    pub sigma: f64,
    pub seed: u64,
    pub singles: Vec<SingleExcitation>,
    pub doubles: Vec<DoubleExcitation>,
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(format!("sigma {sigma}: {e}")))
}

impl UccsdParams {
    pub fn random(n_modes: usize, sigma: f64, seed: u64) -> Result<Self> {
        if n_modes < 2 {
            return Err(Error::InvalidParameter("UCCSD needs at least two modes".into()));
        }
        let dist = normal(sigma)?;
        let mut rng = stream_rng(seed, 0x0CC5D);
        let occ = half_filling(n_modes);
        let unocc: Vec<usize> = (occ.len()..n_modes).collect();
        let mut singles = Vec::new();
        for &i in &unocc {
            for &m in &occ {
                singles.push(SingleExcitation { create: i, annihilate: m, amplitude: dist.sample(&mut rng) });
            }
        }
        let mut doubles = Vec::new();
        for (a, &i) in unocc.iter().enumerate() {
            for &j in &unocc[a + 1..] {
                for (b, &m) in occ.iter().enumerate() {
                    for &n in &occ[b + 1..] {
                        doubles.push(DoubleExcitation {
                            create: [i, j],
                            annihilate: [m, n],
                            amplitude: dist.sample(&mut rng),
                        });
                    }
                }
            }
        }
        Ok(Self { n_modes, sigma, seed, singles, doubles })
    }

    /// Ladder terms of the anti-Hermitian generator `T - T†`.
    pub fn generator_terms(&self) -> Vec<LadderMonomial> {
        let mut terms = Vec::new();
        let mut push = |t: LadderMonomial| {
            if t.coeff.norm() > 0.0 {
                terms.push(t.adjoint().scaled(-1.0));
                terms.push(t);
            }
        };
        for s in &self.singles {
            push(LadderMonomial::from_modes(&[s.create], &[s.annihilate], Complex64::new(s.amplitude, 0.0)));
        }
        for d in &self.doubles {
            push(LadderMonomial::from_modes(&d.create, &d.annihilate, Complex64::new(d.amplitude, 0.0)));
        }
        terms
    }

    /// `exp(T - T†) |HF>`.
    pub fn state(&self) -> Result<StateVector> {
        let hf = hf_state(self.n_modes, &half_filling(self.n_modes))?;
        let g = ladder_sum_to_majorana(&self.generator_terms(), self.n_modes)?.to_pauli_sum()?;
        hf.apply_exp_antihermitian(&g, &ExpOptions::default())
    }
}

pub fn random_uccsd(n_modes: usize, sigma: f64, seed: u64) -> Result<(StateVector, UccsdParams)> {
    let params = UccsdParams::random(n_modes, sigma, seed)?;
    Ok((params.state()?, params))
}

/// Per-layer amplitudes of the Trotterized pair coupled-cluster ansatz.
/// Spatial orbital `i` occupies modes `(2i, 2i + 1) = (α, β)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpccgsdLayer {
    /// Generalized singles over every ordered mode pair `r ≠ s`, one
    /// exponential each.
    pub singles: Vec<SingleExcitation>,
    /// Paired doubles moving the pair on orbital `j` to orbital `i`, over
    /// every ordered `i ≠ j`.
    pub pair_doubles: Vec<(usize, usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpccgsdParams {
    pub n_modes: usize,
    pub sigma: f64,
    pub seed: u64,
    pub layers: Vec<UpccgsdLayer>,
}

impl UpccgsdParams {
    pub fn random(n_modes: usize, layers: usize, sigma: f64, seed: u64) -> Result<Self> {
        if n_modes < 2 || !n_modes.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("pair ansatz needs an even mode count, got {n_modes}")));
        }
        let dist = normal(sigma)?;
        let mut rng = stream_rng(seed, 0x0BCC6);
        let orbitals = n_modes / 2;
        let layers = (0..layers)
            .map(|_| {
                let mut singles = Vec::new();
                for r in 0..n_modes {
                    for s in (0..n_modes).filter(|&s| s != r) {
                        singles.push(SingleExcitation { create: r, annihilate: s, amplitude: dist.sample(&mut rng) });
                    }
                }
                let mut pair_doubles = Vec::new();
                for i in 0..orbitals {
                    for j in (0..orbitals).filter(|&j| j != i) {
                        pair_doubles.push((i, j, dist.sample(&mut rng)));
                    }
                }
                UpccgsdLayer { singles, pair_doubles }
            })
            .collect();
        Ok(Self { n_modes, sigma, seed, layers })
    }

    pub fn state(&self) -> Result<StateVector> {
        q_upccgsd(self)
    }
}

/// Applies `∏_l (∏ singles)(∏ pair doubles) |HF>`; the rightmost factor
/// acts first.
pub fn q_upccgsd(params: &UpccgsdParams) -> Result<StateVector> {
    let n = params.n_modes;
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("pair ansatz needs an even mode count, got {n}")));
    }
    let mut state = hf_state(n, &half_filling(n))?;
    let opts = ExpOptions::default();
    let apply = |state: &mut StateVector, t: LadderMonomial| -> Result<()> {
        if t.coeff.norm() == 0.0 {
            return Ok(());
        }
        let terms = [t.adjoint().scaled(-1.0), t];
        let g = ladder_sum_to_majorana(&terms, n)?.to_pauli_sum()?;
        *state = state.apply_exp_antihermitian(&g, &opts)?;
        Ok(())
    };
    for layer in params.layers.iter().rev() {
        for &(i, j, amp) in layer.pair_doubles.iter().rev() {
            let t = LadderMonomial::from_modes(&[2 * i, 2 * i + 1], &[2 * j, 2 * j + 1], Complex64::new(amp, 0.0));
            apply(&mut state, t)?;
        }
        for s in layer.singles.iter().rev() {
            let t = LadderMonomial::from_modes(&[s.create], &[s.annihilate], Complex64::new(s.amplitude, 0.0));
            apply(&mut state, t)?;
        }
    }
    Ok(state)
}

/// Independent complex Gaussian amplitudes on the `particles` sector.
pub fn haar_sector_state(n_modes: usize, particles: usize, seed: u64) -> Result<StateVector> {
    let basis = SectorBasis::new(n_modes, particles)?;
    let mut rng = stream_rng(seed, 0x4AA2);
    let coeffs: Vec<Complex64> = (0..basis.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    StateVector::normalized(n_modes, basis.embed(&coeffs))
}

#[derive(Clone, Debug)]
pub struct GroundSector {
    pub particles: usize,
    pub energy: f64,
    pub state: StateVector,
}

/// Lowest energy over all particle-number sectors; ties go to the smallest
/// particle number.
pub fn scan_ground_sector(h: &MajoranaPolynomial) -> Result<GroundSector> {
    let n = h.n_modes();
    let mut best: Option<GroundSector> = None;
    for particles in 0..=n {
        let spec = sector_eigensolve(h, &SectorBasis::new(n, particles)?)?;
        let e = spec.energies[0];
        if best.as_ref().is_none_or(|b| e < b.energy - 1e-12) {
            best = Some(GroundSector { particles, energy: e, state: spec.states[0].clone() });
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty mode set".into()))
}

/// Lowest eigenvalue of `h` restricted to one particle-number sector.
pub fn sector_ground_energy(h: &MajoranaPolynomial, particles: usize) -> Result<f64> {
    Ok(sector_eigensolve(h, &SectorBasis::new(h.n_modes(), particles)?)?.energies[0])
}

/// Convenience for callers that want a uniform draw in `[0, 1)` from a
/// crate stream without naming the generator type.
pub fn uniform_from_stream(seed: u64, stream: u64) -> f64 {
    stream_rng(seed, stream).random()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_count_before_merging() {
        let p = HubbardParams::grid(3, 3, 1.0, 1.0, 0.0);
        let e = p.edges().len();
        assert_eq!(e, 12);
        assert_eq!(hubbard_ladder_terms(&p).unwrap().len(), 2 * e + 9 + e);
        let periodic = HubbardParams::chain(4, 1.0, 1.0, 0.0).with_boundary(Boundary::Periodic);
        assert_eq!(periodic.edges(), vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert_eq!(HubbardParams::chain(2, 1.0, 1.0, 0.0).with_boundary(Boundary::Periodic).edges().len(), 1);
    }

    #[test]
    fn two_site_spectrum() {
        let h = build_hubbard(&HubbardParams::chain(2, 1.0, 1.0, 0.0)).unwrap();
        assert!(h.is_hermitian(1e-14));
        let mut all = Vec::new();
        for n in 0..=2 {
            all.extend(sector_eigensolve(&h, &SectorBasis::new(2, n).unwrap()).unwrap().energies);
        }
        let expect = [0.0, -1.0, 1.0, 1.0];
        for (a, b) in all.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{all:?}");
        }
        let g = scan_ground_sector(&h).unwrap();
        assert_eq!(g.particles, 1);
    }

    #[test]
    fn invalid_lattice() {
        assert!(build_hubbard(&HubbardParams::chain(1, 1.0, 1.0, 0.0)).is_err());
        assert!(build_hubbard(&HubbardParams::grid(1, 3, 1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn zero_sigma_returns_reference() {
        let (s, _) = random_uccsd(6, 0.0, 3).unwrap();
        assert_eq!(s, hf_state(6, &[0, 1, 2]).unwrap());
        let q0 = UpccgsdParams::random(6, 0, 0.5, 1).unwrap();
        assert_eq!(q0.state().unwrap(), hf_state(6, &[0, 1, 2]).unwrap());
    }

    #[test]
    fn random_states_conserve_number() {
        let (s, p) = random_uccsd(4, 0.7, 11).unwrap();
        assert_eq!(p.singles.len(), 4);
        assert_eq!(p.doubles.len(), 1);
        let (m, var) = s.number_moments();
        assert!((m - 2.0).abs() < 1e-10 && var < 1e-10);
        let q = UpccgsdParams::random(6, 2, 0.7, 5).unwrap().state().unwrap();
        let (m, var) = q.number_moments();
        assert!((m - 3.0).abs() < 1e-10 && var < 1e-10);
        let h = haar_sector_state(6, 2, 9).unwrap();
        let (m, var) = h.number_moments();
        assert!((m - 2.0).abs() < 1e-10 && var < 1e-10);
        assert!(UpccgsdParams::random(5, 1, 0.1, 0).is_err());
        let layer = &UpccgsdParams::random(4, 1, 0.1, 0).unwrap().layers[0];
        assert_eq!((layer.singles.len(), layer.pair_doubles.len()), (12, 2));
    }

    #[test]
    fn random_builders_are_deterministic() {
        assert_eq!(random_uccsd(6, 0.3, 4).unwrap().0, random_uccsd(6, 0.3, 4).unwrap().0);
        assert_ne!(random_uccsd(6, 0.3, 4).unwrap().0, random_uccsd(6, 0.3, 5).unwrap().0);
        assert_eq!(haar_sector_state(6, 3, 2).unwrap(), haar_sector_state(6, 3, 2).unwrap());
    }
}
