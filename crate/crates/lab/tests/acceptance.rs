//! Acceptance suite: one `PASS`, `FAIL` or `SKIP` line per criterion.
//!
//! Run with `cargo test -p shadowrdm-lab --test acceptance --release`.
//! Pass a substring to run only matching criteria. Exits nonzero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use shadowrdm::cumulant::{cumulants_from_rdms, reassemble, reconstruct_3rdm, reconstruct_4rdm, wedge_reference};
use shadowrdm::models::{build_hubbard, haar_sector_state, hf_state, random_uccsd, scan_ground_sector, HubbardParams, UccsdParams};
use shadowrdm::qse::{qse_matrices_exact, solve_gev, Pipeline, QseExpansion, QseProblem, RdmSource, DEFAULT_THRESHOLD};
use shadowrdm::rdm::RdmTensor;
use shadowrdm::rng::{derive_seed, stream_rng};
use shadowrdm::shadows::{
    assemble_rdm, collect_shadows, snapshot_estimate, AcquisitionPlan, EvenPermutation, NoiseParams, ShadowAccumulator,
    Snapshot, SnapshotSampler,
};
use shadowrdm::statevector::StateVector;
use shadowrdm_lab::config::{ExperimentConfig, ShotCount};
use shadowrdm_lab::results::{median, write_csv, ResultRow};
use shadowrdm_lab::{execute, RunOptions};
use statrs::distribution::{ChiSquared, ContinuousCDF};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::{Fail, Pass, Skip};

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

// ---------------------------------------------------------------- dense oracle

fn kron_chain(factors: &[DMatrix<C>]) -> DMatrix<C> {
    // qubit 0 is the least significant bit, so it goes rightmost
    factors.iter().rev().fold(DMatrix::from_element(1, 1, c(1.0, 0.0)), |acc, f| acc.kronecker(f))
}

fn dense_gamma(mu: usize, n: usize) -> DMatrix<C> {
    let i2 = DMatrix::<C>::identity(2, 2);
    let x = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let y = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let z = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let p = mu / 2;
    let factors: Vec<DMatrix<C>> = (0..n)
        .map(|q| match q.cmp(&p) {
            std::cmp::Ordering::Less => z.clone(),
            std::cmp::Ordering::Equal => if mu % 2 == 0 { x.clone() } else { y.clone() },
            std::cmp::Ordering::Greater => i2.clone(),
        })
        .collect();
    kron_chain(&factors)
}

fn dense_expect(s: &StateVector, m: &DMatrix<C>) -> C {
    let v = DMatrix::from_column_slice(s.amplitudes().len(), 1, s.amplitudes());
    (v.adjoint() * m * &v)[(0, 0)]
}

fn even_permutations(len: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut all = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; len], &mut all);
    all.retain(|p| {
        let inversions = (0..len).flat_map(|i| (i + 1..len).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
        inversions % 2 == 0
    });
    all
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect()).collect()
}

// ---------------------------------------------------------------- criteria

fn exhaustive_unbiasedness() -> Verdict {
    let n = 3;
    let state = haar_sector_state(n, 2, 11).unwrap();
    let gammas: Vec<DMatrix<C>> = (0..2 * n).map(|m| dense_gamma(m, n)).collect();
    let id = DMatrix::<C>::identity(1 << n, 1 << n);
    let perms = even_permutations(2 * n);
    let mus: Vec<Vec<usize>> = [2, 4, 6].iter().flat_map(|&d| subsets(2 * n, d)).collect();
    let mut avg = vec![0.0; mus.len()];
    for p in &perms {
        let perm = EvenPermutation::new(p.clone()).unwrap();
        let ops: Vec<DMatrix<C>> =
            (0..n).map(|q| &gammas[p[2 * q]] * &gammas[p[2 * q + 1]] * c(0.0, -1.0)).collect();
        for z in 0..1u64 << n {
            let proj = (0..n).fold(id.clone(), |acc, q| {
                let s = if z >> q & 1 == 1 { -1.0 } else { 1.0 };
                acc * (&id + &ops[q] * c(s, 0.0)) * c(0.5, 0.0)
            });
            let prob = dense_expect(&state, &proj).re;
            let snap = Snapshot { permutation: perm.clone(), z };
            for (a, mu) in avg.iter_mut().zip(&mus) {
                *a += prob * snapshot_estimate(&snap, mu).unwrap() / perms.len() as f64;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (a, mu) in avg.iter().zip(&mus) {
        let j = mu.len() / 2;
        // Γ_μ = (−i)^j γ_μ
        let g = mu.iter().fold(id.clone(), |acc, &m| acc * &gammas[m]) * c(0.0, -1.0).powi(j as i32);
        worst = worst.max((a - dense_expect(&state, &g).re).abs());
    }
    verdict(
        perms.len() == 360 && worst < 1e-10,
        format!("{} permutations, {} operators, max deviation {worst:.2e} (tol 1e-10)", perms.len(), mus.len()),
    )
}

fn variance_scaling() -> Verdict {
    let h = build_hubbard(&HubbardParams::chain(4, 1.0, 1.0, 0.0)).unwrap();
    let state = scan_ground_sector(&h).unwrap().state;
    let reps = 200u64;
    let mut scaled = Vec::new();
    for ns in [1_000u64, 10_000, 100_000] {
        let tensors: Vec<RdmTensor> = (0..reps)
            .map(|r| {
                let acc = collect_shadows(&state, &AcquisitionPlan::new(ns, 4, derive_seed(0xACC, &[r, ns]))).unwrap();
                assemble_rdm(&acc, 2).unwrap()
            })
            .collect();
        let len = tensors[0].values().len();
        let mut total = 0.0;
        for e in 0..len {
            let mean: C = tensors.iter().map(|t| t.values()[e]).sum::<C>() / reps as f64;
            total += tensors.iter().map(|t| (t.values()[e] - mean).norm_sqr()).sum::<f64>() / (reps - 1) as f64;
        }
        scaled.push((ns, total * ns as f64));
    }
    let mean = scaled.iter().map(|s| s.1).sum::<f64>() / scaled.len() as f64;
    let worst = scaled.iter().map(|s| (s.1 / mean - 1.0).abs()).fold(0.0, f64::max);
    let detail = scaled.iter().map(|(n, v)| format!("N_s={n}: N_s·Var={v:.4}")).collect::<Vec<_>>().join(", ");
    verdict(worst <= 0.2, format!("{detail}; max relative spread {worst:.3} (tol 0.2, {reps} reps)"))
}

fn cumulant_algebra() -> Verdict {
    let (mut round, mut ident) = (0.0f64, 0.0f64);
    for seed in 0..20 {
        let (s, _) = random_uccsd(6, 0.4, 900 + seed).unwrap();
        let (d1, d2, d3) = (s.exact_rdm(1).unwrap(), s.exact_rdm(2).unwrap(), s.exact_rdm(3).unwrap());
        let cs = cumulants_from_rdms(&d1, &d2, Some(&d3)).unwrap();
        let (r1, r2, r3) = reassemble(&cs).unwrap();
        round = round
            .max(r1.max_abs_diff(&d1).unwrap())
            .max(r2.max_abs_diff(&d2).unwrap())
            .max(r3.unwrap().max_abs_diff(&d3).unwrap());
        // literal permutation-sum wedge on both sides
        let d111 = wedge_reference(&wedge_reference(&d1, &d1).unwrap(), &d1).unwrap();
        let lhs = wedge_reference(&d2, &d1).unwrap().scale(3.0).add_scaled(&d111, -2.0).unwrap();
        let rhs = d3.sub(cs.delta3.as_ref().unwrap()).unwrap();
        ident = ident.max(lhs.max_abs_diff(&rhs).unwrap());
    }
    let mut slater = 0.0f64;
    let mut rotated = UccsdParams::random(6, 0.5, 4).unwrap();
    rotated.doubles.iter_mut().for_each(|d| d.amplitude = 0.0);
    for s in [hf_state(6, &[0, 1, 2]).unwrap(), rotated.state().unwrap()] {
        let (d1, d2) = (s.exact_rdm(1).unwrap(), s.exact_rdm(2).unwrap());
        slater = slater
            .max(reconstruct_3rdm(&d1, &d2).unwrap().max_abs_diff(&s.exact_rdm(3).unwrap()).unwrap())
            .max(reconstruct_4rdm(&d1, &d2).unwrap().max_abs_diff(&s.exact_rdm(4).unwrap()).unwrap());
    }
    verdict(
        round < 1e-12 && ident < 1e-12 && slater < 1e-10,
        format!(
            "round trip {round:.2e} (tol 1e-12), identity {ident:.2e} over 20 states (tol 1e-12), Slater 3/4-RDM {slater:.2e} (tol 1e-10)"
        ),
    )
}

fn seeds_list(n: u64) -> String {
    (0..n).map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

/// Runs an experiment and keeps its rows under the cargo target directory
/// for later inspection.
fn run(toml: &str) -> Vec<ResultRow> {
    let cfg = ExperimentConfig::from_toml_str(toml).unwrap();
    let rows = execute(&cfg, &RunOptions::default(), None).unwrap().rows;
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    write_csv(&dir.join(format!("{}.csv", cfg.kind.name())), &rows).unwrap();
    rows
}

fn fig1_trend() -> Verdict {
    let rows = run(&format!(
        r#"
schema_version = 1
kind = "ratio-sweep"
seeds = [{}]
[ratio-sweep]
n_modes = [8]
sigma = [0.02, 0.1, 0.3]
shots = [1000, 10000, 100000, 1000000]
"#,
        seeds_list(20)
    ));
    let shots = [1_000u64, 10_000, 100_000, 1_000_000];
    let mut ok = true;
    let mut parts = Vec::new();
    for sigma in [0.02, 0.1, 0.3] {
        let curve = |q: &str| -> Vec<f64> {
            shots
                .iter()
                .map(|&s| {
                    let v: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.quantity == q && r.sigma == Some(sigma) && r.shots == Some(ShotCount::Finite(s)))
                        .map(|r| r.value)
                        .collect();
                    median(&v).unwrap_or(f64::NAN)
                })
                .collect()
        };
        // verdict on the full-tensor ratio; the sampled one is informational
        let full = curve("r3_full");
        let sampled = curve("r3");
        let mono = full.windows(2).all(|w| w[1] >= w[0]);
        let low = full[0] < 1.0;
        ok &= mono && low;
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/");
        parts.push(format!(
            "σ={sigma}: median r3 {}{} (200-pair sampled {})",
            fmt(&full),
            if mono && low { "" } else { " ✗" },
            fmt(&sampled)
        ));
    }
    verdict(ok, format!("N_s 1e3/1e4/1e5/1e6, 20 seeds; {}", parts.join("; ")))
}

fn qse_oracle_chain() -> Verdict {
    let (mut direct, mut bound) = (0.0f64, f64::INFINITY);
    for n in [5, 9] {
        let h = build_hubbard(&HubbardParams::chain(n, 1.0, 1.0, 0.0)).unwrap();
        let g = scan_ground_sector(&h).unwrap();
        let target = shadowrdm::models::sector_ground_energy(&h, g.particles - 1).unwrap();
        let problem = QseProblem::annihilation(h, g.state.clone()).unwrap();
        let exact = qse_matrices_exact(&problem).unwrap();
        let from_rdm = QseExpansion::new(&problem)
            .unwrap()
            .evaluate(&RdmSource::exact(&g.state).unwrap(), Pipeline::Direct3)
            .unwrap();
        direct = direct.max(exact.max_abs_diff(&from_rdm));
        for m in [&exact, &from_rdm] {
            bound = bound.min(solve_gev(m, DEFAULT_THRESHOLD).unwrap().energies[0] - target);
        }
    }
    // U = 0: no three-body content, so every pipeline sees the same inputs
    let h = build_hubbard(&HubbardParams::chain(5, 1.0, 0.0, 0.3)).unwrap();
    let (s, _) = random_uccsd(5, 0.4, 2).unwrap();
    let exp = QseExpansion::new(&QseProblem::annihilation(h, s.clone()).unwrap()).unwrap();
    let acc = collect_shadows(&s, &AcquisitionPlan::new(5_000, 6, 8)).unwrap();
    let src = RdmSource {
        d1: assemble_rdm(&acc, 1).unwrap(),
        d2: assemble_rdm(&acc, 2).unwrap(),
        d3: Some(assemble_rdm(&acc, 3).unwrap()),
    };
    let t = exp.evaluate(&src, Pipeline::Trunc2).unwrap();
    let coincide = [Pipeline::Cum3, Pipeline::Direct3]
        .iter()
        .map(|&p| t.max_abs_diff(&exp.evaluate(&src, p).unwrap()))
        .fold(0.0, f64::max);
    verdict(
        direct < 1e-10 && bound >= -1e-10 && coincide < 1e-12,
        format!(
            "direct3 vs exact {direct:.2e} (tol 1e-10, N=5,9); min E_QSE − E_exact {bound:.3e} (≥ −1e-10); U=0 spread {coincide:.2e} (tol 1e-12)"
        ),
    )
}

const GRID: &str = r#"
[{kind}.model]
lattice = { grid = { lx = 3, ly = 3 } }
t = 1.0
u = 1.0
mu = 0.0
"#;

fn grid_model(kind: &str) -> String {
    GRID.replace("{kind}", kind)
}

const SHOTS: [u64; 3] = [1_000, 10_000, 100_000];

/// Overlap cutoff for the 3x3 ground state. Its exact overlap spectrum has
/// three occupied directions near 0.99 and six at or below 0.012; 0.1 sits
/// in that gap. Near-empty directions are pure shot noise at desk-scale
/// budgets and would otherwise dominate the lowest eigenvalue.
const GRID_THRESHOLD: f64 = 0.1;

fn deviation_curve(rows: &[ResultRow], pipe: &str) -> Vec<f64> {
    let base = rows
        .iter()
        .find(|r| r.quantity == "energy" && r.pipeline == pipe && r.seed.is_none())
        .expect("baseline row")
        .value;
    SHOTS
        .iter()
        .map(|&s| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.quantity == "energy" && r.pipeline == pipe && r.shots == Some(ShotCount::Finite(s)) && r.seed.is_some())
                .map(|r| (r.value - base).abs())
                .collect();
            median(&v).unwrap_or(f64::NAN)
        })
        .collect()
}

fn fig2_trend() -> Verdict {
    let rows = run(&format!(
        "schema_version = 1\nkind = \"qse-shots\"\nseeds = [{}]\n[qse-shots]\nshots = [1000, 10000, 100000]\nthreshold = {GRID_THRESHOLD}\n{}",
        seeds_list(20),
        grid_model("qse-shots")
    ));
    let mut ok = true;
    let mut parts = Vec::new();
    let mut curves = std::collections::BTreeMap::new();
    for p in Pipeline::ALL {
        let dev = deviation_curve(&rows, p.name());
        let mono = dev.windows(2).all(|w| w[1] <= w[0]);
        ok &= mono;
        parts.push(format!(
            "{p}: {}{}",
            dev.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join("/"),
            if mono { "" } else { " ✗" }
        ));
        curves.insert(p.name(), dev);
    }
    let adv: Vec<u64> =
        SHOTS.iter().enumerate().filter(|&(i, _)| curves["cum3"][i] < curves["direct3"][i]).map(|(_, &s)| s).collect();
    ok &= !adv.is_empty();
    verdict(
        ok,
        format!("3x3 U=1, ε={GRID_THRESHOLD}, 20 seeds, median |E − baseline| at N_s 1e3/1e4/1e5: {}; cum3 < direct3 at N_s {adv:?}", parts.join("; ")),
    )
}

fn fig3_property() -> Verdict {
    let rows = run(&format!(
        "schema_version = 1\nkind = \"qse-noise-heatmap\"\nseeds = [{}]\n[qse-noise-heatmap]\nshots = [1000, 10000, 100000]\nnoise = [0.0, 0.01]\nthreshold = {GRID_THRESHOLD}\n{}",
        seeds_list(20),
        grid_model("qse-noise-heatmap")
    ));
    let favorable = |p: f64| -> (Vec<u64>, Vec<f64>) {
        let meds: Vec<f64> = SHOTS
            .iter()
            .map(|&s| {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.quantity == "diff" && r.noise == Some(p) && r.shots == Some(ShotCount::Finite(s)))
                    .map(|r| r.value)
                    .collect();
                median(&v).unwrap_or(f64::NAN)
            })
            .collect();
        (SHOTS.iter().zip(&meds).filter(|(_, &m)| m > 0.0).map(|(&s, _)| s).collect(), meds)
    };
    let (s0, m0) = favorable(0.0);
    let (s1, m1) = favorable(0.01);
    let contains = s0.iter().all(|s| s1.contains(s));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:+.2e}")).collect::<Vec<_>>().join("/");
    verdict(
        contains,
        format!(
            "3x3 U=1, ε={GRID_THRESHOLD}, 20 seeds; median(E_direct3 − E_cum3) at N_s 1e3/1e4/1e5: p=0 {} → {s0:?}; p=1e-2 {} → {s1:?}{}",
            fmt(&m0),
            fmt(&m1),
            match (contains, s0.is_empty(), s0 == s1) {
                (true, true, false) => " (p=0 set empty, containment holds trivially)",
                (true, _, true) => " (sets equal)",
                _ => "",
            }
        ),
    )
}

fn noise_endpoints() -> Verdict {
    let n = 3;
    let state = haar_sector_state(n, 1, 5).unwrap();
    let mut sampler = SnapshotSampler::new(&state, NoiseParams::depolarizing(1.0).unwrap()).unwrap();
    let mut rng = stream_rng(0xE0D, 0);
    let mut acc = ShadowAccumulator::new(n, 2 * n).unwrap();
    let mut counts = [0u64; 8];
    let shots = 100_000;
    for _ in 0..shots {
        let snap = sampler.sample(&mut rng).unwrap();
        counts[snap.z as usize] += 1;
        acc.accumulate(&snap).unwrap();
    }
    let expected = shots as f64 / 8.0;
    let chi2: f64 = counts.iter().map(|&k| (k as f64 - expected).powi(2) / expected).sum();
    let p_value = ChiSquared::new(7.0).unwrap().sf(chi2);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for d in [2, 4, 6] {
        for mu in subsets(2 * n, d) {
            let z = acc.estimate(&mu).unwrap().abs() / acc.standard_error(&mu).unwrap();
            worst = worst.max(z);
            count += 1;
        }
    }
    verdict(
        p_value > 1e-3 && worst <= 5.0,
        format!("p=1, N=3, 1e5 shots: chi-square p-value {p_value:.3} (> 1e-3); max |est|/se {worst:.2} over {count} operators (≤ 5)"),
    )
}

/// Largest later drop of the median curve in pooled standard errors.
fn decline_statistic(points: &[(f64, Vec<f64>)]) -> f64 {
    let stats: Vec<(f64, f64)> = points
        .iter()
        .map(|(_, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            // asymptotic standard error of a median
            (median(v).unwrap(), 1.2533 * sd / n.sqrt())
        })
        .collect();
    let mut d = f64::NEG_INFINITY;
    for i in 0..stats.len() {
        for j in i + 1..stats.len() {
            let se = stats[i].1.hypot(stats[j].1);
            if se > 0.0 {
                d = d.max((stats[i].0 - stats[j].0) / se);
            }
        }
    }
    d
}

const DECLINE_Z: f64 = 3.0;

fn entropy_suite() -> Verdict {
    let sigmas = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0];
    let rows = run(&format!(
        "schema_version = 1\nkind = \"entropy-sweep\"\nseeds = [{}]\n[entropy-sweep]\nn_modes = [8]\nsigma = [{}]\n",
        seeds_list(100),
        sigmas.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
    ));
    let zero = rows
        .iter()
        .filter(|r| r.quantity == "entropy" && r.sigma == Some(0.0))
        .map(|r| r.value.abs())
        .fold(0.0, f64::max);
    let curve = |a: &str| -> Vec<(f64, Vec<f64>)> {
        sigmas[1..]
            .iter()
            .map(|&s| {
                (s, rows.iter().filter(|r| r.quantity == "entropy" && r.ansatz == a && r.sigma == Some(s)).map(|r| r.value).collect())
            })
            .collect()
    };
    let describe = |c: &[(f64, Vec<f64>)]| {
        c.iter().map(|(s, v)| format!("{s}:{:.2}", median(v).unwrap())).collect::<Vec<_>>().join(" ")
    };
    let uccsd = curve("uccsd");
    let d_uccsd = decline_statistic(&uccsd);
    let mut ok = zero < 1e-10 && d_uccsd > DECLINE_Z;
    let mut parts = vec![
        format!("σ=0 max entropy {zero:.1e} (tol 1e-10)"),
        format!(
            "uccsd decline z={d_uccsd:.2} (need > {DECLINE_Z}{}) [{}]",
            if d_uccsd > DECLINE_Z { "" } else { ", not detected ✗" },
            describe(&uccsd)
        ),
    ];
    for a in ["upccgsd1", "upccgsd2"] {
        let c = curve(a);
        let d = decline_statistic(&c);
        let rises = median(&c.last().unwrap().1).unwrap() > median(&c[0].1).unwrap();
        ok &= d <= DECLINE_Z && rises;
        parts.push(format!("{a} decline z={d:.2} (need ≤ {DECLINE_Z}) [{}]", describe(&c)));
    }
    let haar: Vec<f64> = rows.iter().filter(|r| r.quantity == "entropy" && r.ansatz == "haar").map(|r| r.value).collect();
    parts.push(format!("haar median {:.2}", median(&haar).unwrap()));
    verdict(ok, format!("N=8, 100 seeds, bits; {}", parts.join("; ")))
}

fn throughput(threads: usize, shots: u64) -> f64 {
    let (state, _) = random_uccsd(8, 0.3, 1).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let plan = AcquisitionPlan::new(shots, 6, 3);
    pool.install(|| {
        collect_shadows(&state, &AcquisitionPlan::new(4_096, 6, 2)).unwrap();
        let t = Instant::now();
        let acc = collect_shadows(&state, &plan).unwrap();
        acc.n_snapshots() as f64 / t.elapsed().as_secs_f64()
    })
}

fn performance_floor() -> Verdict {
    let rate = throughput(1, 200_000);
    verdict(rate >= 2_000.0, format!("N=8, order 6, 1 thread: {rate:.0} snapshots/s (floor 2000)"))
}

fn performance_scaling() -> Verdict {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    if cores < 8 {
        return Skip(format!("needs 8 cores, machine has {cores}"));
    }
    let one = throughput(1, 200_000);
    let eight = throughput(8, 1_600_000);
    let eff = eight / (8.0 * one);
    verdict(eff >= 0.7, format!("1 thread {one:.0}/s, 8 threads {eight:.0}/s, efficiency {eff:.2} (≥ 0.70)"))
}

fn main() -> ExitCode {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("exhaustive-unbiasedness", exhaustive_unbiasedness),
        ("variance-scaling", variance_scaling),
        ("cumulant-algebra", cumulant_algebra),
        ("fig1-ratio-trend", fig1_trend),
        ("qse-oracle-chain", qse_oracle_chain),
        ("fig2-qse-shots-trend", fig2_trend),
        ("fig3-noise-region", fig3_property),
        ("noise-endpoints", noise_endpoints),
        ("entropy-suite", entropy_suite),
        ("performance-floor", performance_floor),
        ("performance-scaling", performance_scaling),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        if filter.as_deref().is_some_and(|flt| !name.contains(flt)) {
            continue;
        }
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match v {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{tag} {name}: {detail} [{secs:.1} s]");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
