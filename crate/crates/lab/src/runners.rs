//! One runner per experiment kind. Work items (parameter point × seed) run
//! on the rayon pool and come back in a fixed order, so the rows depend only
//! on the config and the seed offset.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shadowrdm::cumulant::{accuracy_ratio, l1_distance, l1_distance_sampled, reconstruct_3rdm, sample_index_pairs, L1Convention};
use shadowrdm::models::{
    build_hubbard, half_filling, haar_sector_state, hf_state, random_uccsd, scan_ground_sector, sector_ground_energy,
    HubbardParams, UpccgsdParams,
};
use shadowrdm::qse::{solve_gev, Pipeline, QseExpansion, QseProblem, QseResult, RdmSource};
use shadowrdm::rdm::RdmTensor;
use shadowrdm::rng::{derive_seed, stream_rng};
use shadowrdm::shadows::{
    assemble_rdm, collect_batches, collect_grouped, collect_shadows, AcquisitionPlan, ExactExpectations,
    MajoranaExpectations, NoiseParams, ShadowAccumulator,
};
use shadowrdm::statevector::StateVector;

use crate::config::{
    Ansatz, EntropySweep, ExperimentConfig, ExperimentKind, QseNoiseHeatmap, QseShots, RatioSweep, RdmEstimate,
    ShotCount, StateSpec,
};
use crate::error::{LabError, LabResult};
use crate::results::{mean_stderr, ResultRow};

const TAG_STATE: u64 = 0x57A7E;
const TAG_SHOTS: u64 = 0x5407;
const TAG_INDEX: u64 = 0x1DE;
const TAG_HAAR: u64 = 0x4AA2;
const TAG_PAIR: u64 = 0x9A1A;

/// Largest system for which `rdm-estimate` also computes exact RDMs.
pub const EXACT_ORACLE_MAX_MODES: usize = 12;

pub struct RunContext<'a> {
    pub config: &'a ExperimentConfig,
    pub hash: String,
    /// Seeds after applying the offset.
    pub seeds: Vec<u64>,
    /// Where tensor files and checkpoints go.
    pub out_dir: Option<PathBuf>,
    /// Stop `rdm-estimate` once this many batches are checkpointed.
    pub stop_after_batches: Option<u64>,
    snapshots: AtomicU64,
}

impl<'a> RunContext<'a> {
    pub fn new(config: &'a ExperimentConfig, seed_offset: u64) -> Self {
        Self {
            config,
            hash: config.hash(seed_offset),
            seeds: config.seeds_with_offset(seed_offset),
            out_dir: None,
            stop_after_batches: None,
            snapshots: AtomicU64::new(0),
        }
    }

    pub fn snapshots(&self) -> u64 {
        self.snapshots.load(Ordering::Relaxed)
    }

    fn count(&self, n: u64) {
        self.snapshots.fetch_add(n, Ordering::Relaxed);
    }

    fn row(&self, n_modes: usize, quantity: &str, value: f64) -> ResultRow {
        ResultRow::new(self.config.kind, &self.hash, n_modes, quantity, value)
    }
}

pub fn run(ctx: &RunContext) -> LabResult<Vec<ResultRow>> {
    let cfg = ctx.config;
    match cfg.kind {
        ExperimentKind::RatioSweep => ratio_sweep(ctx, cfg.ratio_sweep.as_ref().expect("validated")),
        ExperimentKind::QseShots => qse_shots(ctx, cfg.qse_shots.as_ref().expect("validated")),
        ExperimentKind::QseNoiseHeatmap => qse_noise_heatmap(ctx, cfg.qse_noise_heatmap.as_ref().expect("validated")),
        ExperimentKind::EntropySweep => entropy_sweep(ctx, cfg.entropy_sweep.as_ref().expect("validated")),
        ExperimentKind::RdmEstimate => rdm_estimate(ctx, cfg.rdm_estimate.as_ref().expect("validated")),
    }
}

pub fn state_seed(seed: u64, n_modes: usize, sigma: f64) -> u64 {
    derive_seed(seed, &[TAG_STATE, n_modes as u64, sigma.to_bits()])
}

/// Snapshot stream for the QSE experiments. It ignores the noise rate, so
/// every noise level sees the same permutations and branch draws.
pub fn qse_shot_seed(seed: u64, shots: u64) -> u64 {
    derive_seed(seed, &[TAG_SHOTS, shots])
}

fn ratio_shot_seed(seed: u64, n_modes: usize, sigma: f64, shots: u64) -> u64 {
    derive_seed(seed, &[TAG_SHOTS, n_modes as u64, sigma.to_bits(), shots])
}

/// `¹D … ᵏD` from exact expectations or from `shots` snapshots.
#[allow(clippy::too_many_arguments)]
fn estimate_rdms(
    ctx: &RunContext,
    state: &StateVector,
    shots: ShotCount,
    max_order: usize,
    seed: u64,
    noise: f64,
    batch_size: u64,
) -> LabResult<Vec<RdmTensor>> {
    fn assemble<S: MajoranaExpectations>(src: &S, max_order: usize) -> LabResult<Vec<RdmTensor>> {
        (1..=max_order).map(|k| Ok(assemble_rdm(src, k)?)).collect()
    }
    match shots {
        ShotCount::Exact => assemble(&ExactExpectations::from_state(state, 2 * max_order)?, max_order),
        ShotCount::Finite(n) => {
            let plan = AcquisitionPlan {
                batch_size,
                ..AcquisitionPlan::new(n, 2 * max_order, seed).with_noise(NoiseParams::depolarizing(noise)?)
            };
            let acc = collect_shadows(state, &plan)?;
            ctx.count(acc.n_snapshots());
            assemble(&acc, max_order)
        }
    }
}

fn clock<T>(f: impl FnOnce() -> LabResult<T>) -> LabResult<(T, f64)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64()))
}

fn ratio_sweep(ctx: &RunContext, r: &RatioSweep) -> LabResult<Vec<ResultRow>> {
    let items: Vec<(usize, f64, u64)> = r
        .n_modes
        .iter()
        .flat_map(|&n| r.sigma.iter().flat_map(move |&s| ctx.seeds.iter().map(move |&seed| (n, s, seed))))
        .collect();
    let per_item = items
        .par_iter()
        .map(|&(n, sigma, seed)| -> LabResult<Vec<ResultRow>> {
            let (state, _) = random_uccsd(n, sigma, state_seed(seed, n, sigma))?;
            let exact = state.exact_rdm(3)?;
            let pairs = (r.index_samples > 0).then(|| {
                let mut rng = stream_rng(derive_seed(seed, &[TAG_INDEX, n as u64, sigma.to_bits()]), 0);
                sample_index_pairs(exact.dim(), r.index_samples, &mut rng)
            });
            let dist = |a: &RdmTensor, b: &RdmTensor| -> LabResult<f64> {
                Ok(match &pairs {
                    Some(p) => l1_distance_sampled(a, b, p)?,
                    None => l1_distance(a, b, r.l1_convention)?,
                })
            };
            let mut rows = Vec::new();
            for &shots in &r.shots {
                let shot_seed = match shots {
                    ShotCount::Finite(k) => ratio_shot_seed(seed, n, sigma, k),
                    ShotCount::Exact => 0,
                };
                let ((ratio, full, l1_cum, l1_naive), secs) = clock(|| {
                    let d = estimate_rdms(ctx, &state, shots, 3, shot_seed, 0.0, r.batch_size)?;
                    let cum = reconstruct_3rdm(&d[0], &d[1])?;
                    // Full-tuple and sorted-pair sums differ by a constant
                    // factor, so the ratio is convention-free.
                    let ratio = accuracy_ratio(&exact, &cum, &d[2], pairs.as_deref());
                    let full = pairs.is_some().then(|| accuracy_ratio(&exact, &cum, &d[2], None));
                    Ok((ratio, full, dist(&exact, &cum)?, dist(&exact, &d[2])?))
                })?;
                let base = |q: &str, v: f64| {
                    let mut row = ctx.row(n, q, v);
                    row.seed = Some(seed);
                    row.ansatz = "uccsd".into();
                    row.sigma = Some(sigma);
                    row.shots = Some(shots);
                    row.runtime_s = secs;
                    row
                };
                let ratio_row = |q: &str, ratio: shadowrdm::Result<f64>| match ratio {
                    Ok(v) => Ok(base(q, v)),
                    Err(shadowrdm::Error::ZeroDenominator) => {
                        Ok(ResultRow { status: "zero-denominator".into(), ..base(q, f64::NAN) })
                    }
                    Err(e) => Err(LabError::from(e)),
                };
                rows.push(ratio_row("r3", ratio)?);
                if let Some(full) = full {
                    // the sampled ratio's full-tensor counterpart on the same snapshots
                    rows.push(ratio_row("r3_full", full)?);
                }
                rows.push(base("l1_cum", l1_cum));
                rows.push(base("l1_naive", l1_naive));
            }
            Ok(rows)
        })
        .collect::<LabResult<Vec<_>>>()?;
    Ok(per_item.into_iter().flatten().collect())
}

/// A pipeline's solution and overlap asymmetry, or why it has none.
type PipelineOutcome = (Pipeline, Result<(QseResult, f64), &'static str>);

/// A Hubbard ground state and its QSE expansion.
pub struct QseSetup {
    pub model: HubbardParams,
    pub state: StateVector,
    pub particles: usize,
    /// Exact ground energy of the sector with one particle removed.
    pub target: f64,
    pub expansion: QseExpansion,
}

impl QseSetup {
    pub fn new(model: &HubbardParams) -> LabResult<Self> {
        let h = build_hubbard(model)?;
        let g = scan_ground_sector(&h)?;
        if g.particles == 0 {
            return Err(LabError::Config("ground state is the vacuum; nothing to annihilate".into()));
        }
        let target = sector_ground_energy(&h, g.particles - 1)?;
        let problem = QseProblem::annihilation(h, g.state.clone())?;
        Ok(Self {
            model: model.clone(),
            state: g.state,
            particles: g.particles,
            target,
            expansion: QseExpansion::new(&problem)?,
        })
    }

    fn n_modes(&self) -> usize {
        self.model.n_sites()
    }

    /// Solves every pipeline from one RDM source; `Err` carries the status.
    pub fn solve(
        &self,
        source: &RdmSource,
        pipelines: &[Pipeline],
        threshold: f64,
    ) -> LabResult<Vec<PipelineOutcome>> {
        pipelines
            .iter()
            .map(|&p| {
                let m = self.expansion.evaluate(source, p)?;
                Ok((
                    p,
                    match solve_gev(&m, threshold) {
                        Ok(res) => Ok((res, m.asymmetry)),
                        Err(shadowrdm::Error::SingularOverlap) => Err("singular-overlap"),
                        Err(e) => return Err(e.into()),
                    },
                ))
            })
            .collect()
    }

    pub fn source(
        &self,
        ctx: &RunContext,
        shots: ShotCount,
        needs_d3: bool,
        seed: u64,
        noise: f64,
        batch_size: u64,
    ) -> LabResult<RdmSource> {
        let order = if needs_d3 { 3 } else { 2 };
        let seed = match shots {
            ShotCount::Finite(k) => qse_shot_seed(seed, k),
            ShotCount::Exact => 0,
        };
        let mut d = estimate_rdms(ctx, &self.state, shots, order, seed, noise, batch_size)?.into_iter();
        Ok(RdmSource { d1: d.next().expect("order 1"), d2: d.next().expect("order 2"), d3: d.next() })
    }
}

fn qse_rows(
    ctx: &RunContext,
    setup: &QseSetup,
    solved: &[PipelineOutcome],
    fill: &dyn Fn(ResultRow) -> ResultRow,
) -> Vec<ResultRow> {
    let n = setup.n_modes();
    let mut rows = Vec::new();
    for (p, res) in solved {
        let mut push = |q: &str, v: f64, status: &str| {
            let mut row = fill(ctx.row(n, q, v));
            row.pipeline = p.name().into();
            row.status = status.into();
            rows.push(row);
        };
        match res {
            Ok((r, asym)) => {
                let e = r.energies[0];
                push("energy", e, "ok");
                push("energy_error", e - setup.target, "ok");
                push("abs_error", (e - setup.target).abs(), "ok");
                push("retained", r.retained as f64, "ok");
                push("asymmetry", *asym, "ok");
            }
            Err(status) => {
                for q in ["energy", "energy_error", "abs_error"] {
                    push(q, f64::NAN, status);
                }
            }
        }
    }
    rows
}

fn describe_model(row: ResultRow, setup: &QseSetup) -> ResultRow {
    ResultRow { lattice: setup.model.label(), ansatz: "ground".into(), ..row }
}

/// Exact-RDM baseline rows, one set per pipeline, plus the target energy.
fn qse_baselines(ctx: &RunContext, setup: &QseSetup, pipelines: &[Pipeline], threshold: f64) -> LabResult<Vec<ResultRow>> {
    let exact = RdmSource::exact(&setup.state)?;
    let fill = |row: ResultRow| ResultRow { shots: Some(ShotCount::Exact), ..describe_model(row, setup) };
    let mut rows = vec![
        fill(ctx.row(setup.n_modes(), "target_energy", setup.target)),
        fill(ctx.row(setup.n_modes(), "ground_particles", setup.particles as f64)),
    ];
    rows.extend(qse_rows(ctx, setup, &setup.solve(&exact, pipelines, threshold)?, &fill));
    Ok(rows)
}

fn qse_shots(ctx: &RunContext, q: &QseShots) -> LabResult<Vec<ResultRow>> {
    let setup = QseSetup::new(&q.model)?;
    let mut rows = qse_baselines(ctx, &setup, &q.pipelines, q.threshold)?;
    let needs_d3 = q.pipelines.contains(&Pipeline::Direct3);
    let items: Vec<(ShotCount, u64)> =
        q.shots.iter().flat_map(|&s| ctx.seeds.iter().map(move |&seed| (s, seed))).collect();
    let per_item = items
        .par_iter()
        .map(|&(shots, seed)| -> LabResult<Vec<ResultRow>> {
            let (solved, secs) = clock(|| {
                let src = setup.source(ctx, shots, needs_d3, seed, q.noise, q.batch_size)?;
                setup.solve(&src, &q.pipelines, q.threshold)
            })?;
            let fill = |row: ResultRow| ResultRow {
                seed: Some(seed),
                shots: Some(shots),
                noise: Some(q.noise),
                runtime_s: secs,
                ..describe_model(row, &setup)
            };
            Ok(qse_rows(ctx, &setup, &solved, &fill))
        })
        .collect::<LabResult<Vec<_>>>()?;
    rows.extend(per_item.into_iter().flatten());
    Ok(rows)
}

fn qse_noise_heatmap(ctx: &RunContext, q: &QseNoiseHeatmap) -> LabResult<Vec<ResultRow>> {
    const PIPES: [Pipeline; 2] = [Pipeline::Direct3, Pipeline::Cum3];
    let setup = QseSetup::new(&q.model)?;
    let mut rows = qse_baselines(ctx, &setup, &PIPES, q.threshold)?;
    let items: Vec<(ShotCount, f64, u64)> = q
        .shots
        .iter()
        .flat_map(|&s| q.noise.iter().flat_map(move |&p| ctx.seeds.iter().map(move |&seed| (s, p, seed))))
        .collect();
    let per_item = items
        .par_iter()
        .map(|&(shots, p, seed)| -> LabResult<Vec<ResultRow>> {
            let (solved, secs) = clock(|| {
                let src = setup.source(ctx, shots, true, seed, p, q.batch_size)?;
                setup.solve(&src, &PIPES, q.threshold)
            })?;
            let fill = |row: ResultRow| ResultRow {
                seed: Some(seed),
                shots: Some(shots),
                noise: Some(p),
                runtime_s: secs,
                ..describe_model(row, &setup)
            };
            let mut out: Vec<ResultRow> = qse_rows(ctx, &setup, &solved, &fill)
                .into_iter()
                .filter(|r| r.quantity == "energy" || r.quantity == "abs_error")
                .collect();
            let diff = match (&solved[0].1, &solved[1].1) {
                (Ok((naive, _)), Ok((cum, _))) => fill(ctx.row(setup.n_modes(), "diff", naive.energies[0] - cum.energies[0])),
                (Err(s), _) | (_, Err(s)) => {
                    ResultRow { status: (*s).into(), ..fill(ctx.row(setup.n_modes(), "diff", f64::NAN)) }
                }
            };
            out.push(diff);
            Ok(out)
        })
        .collect::<LabResult<Vec<_>>>()?;
    rows.extend(per_item.into_iter().flatten());
    Ok(rows)
}

/// The first `⌊N/2⌋` modes.
pub fn half_cut(n_modes: usize) -> Vec<usize> {
    (0..n_modes / 2).collect()
}

pub fn ansatz_state(ansatz: Ansatz, n_modes: usize, sigma: f64, seed: u64) -> LabResult<StateVector> {
    Ok(match ansatz {
        Ansatz::Uccsd => random_uccsd(n_modes, sigma, state_seed(seed, n_modes, sigma))?.0,
        Ansatz::Upccgsd(q) => {
            let s = derive_seed(seed, &[TAG_PAIR, q as u64, n_modes as u64, sigma.to_bits()]);
            UpccgsdParams::random(n_modes, q, sigma, s)?.state()?
        }
    })
}

pub fn haar_state(n_modes: usize, seed: u64) -> LabResult<StateVector> {
    Ok(haar_sector_state(n_modes, n_modes.div_ceil(2), derive_seed(seed, &[TAG_HAAR, n_modes as u64]))?)
}

fn entropy_sweep(ctx: &RunContext, e: &EntropySweep) -> LabResult<Vec<ResultRow>> {
    // (n, σ, ansatz); `None` marks the Haar reference
    let mut points: Vec<(usize, Option<f64>, Option<Ansatz>)> = Vec::new();
    for &n in &e.n_modes {
        for &a in &e.ansatze {
            points.extend(e.sigma.iter().map(|&s| (n, Some(s), Some(a))));
        }
        if e.haar_reference {
            points.push((n, None, None));
        }
    }
    let per_point = points
        .par_iter()
        .map(|&(n, sigma, ansatz)| -> LabResult<Vec<ResultRow>> {
            let label = ansatz.map(|a| a.to_string()).unwrap_or_else(|| "haar".into());
            let fill = |row: ResultRow| ResultRow { ansatz: label.clone(), sigma, ..row };
            let mut rows = Vec::new();
            let mut values = Vec::new();
            for &seed in &ctx.seeds {
                let (s, secs) = clock(|| {
                    let state = match ansatz {
                        Some(a) => ansatz_state(a, n, sigma.expect("ansatz points carry sigma"), seed)?,
                        None => haar_state(n, seed)?,
                    };
                    Ok(state.half_chain_entropy(&half_cut(n))?)
                })?;
                values.push(s);
                rows.push(ResultRow { seed: Some(seed), runtime_s: secs, ..fill(ctx.row(n, "entropy", s)) });
            }
            let (mean, se) = mean_stderr(&values);
            rows.push(fill(ctx.row(n, "entropy_mean", mean)));
            rows.push(fill(ctx.row(n, "entropy_stderr", se)));
            Ok(rows)
        })
        .collect::<LabResult<Vec<_>>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn build_state(spec: &StateSpec, seed: u64) -> LabResult<StateVector> {
    Ok(match spec {
        StateSpec::HartreeFock { n_modes } => hf_state(*n_modes, &half_filling(*n_modes))?,
        StateSpec::Uccsd { n_modes, sigma } => ansatz_state(Ansatz::Uccsd, *n_modes, *sigma, seed)?,
        StateSpec::Haar { n_modes, particles } => {
            haar_sector_state(*n_modes, *particles, derive_seed(seed, &[TAG_HAAR, *n_modes as u64]))?
        }
        StateSpec::HubbardGround { model } => scan_ground_sector(&build_hubbard(model)?)?.state,
        StateSpec::Amplitudes { n_modes, path } => {
            let s = StateVector::read_amplitudes(std::io::BufReader::new(std::fs::File::open(path)?))?;
            if s.n_modes() != *n_modes {
                return Err(LabError::Config(format!("{path} holds {} modes, config says {n_modes}", s.n_modes())));
            }
            s
        }
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config_hash: String,
    seed: u64,
    batches_done: u64,
    accumulator: String,
}

const CHECKPOINT_FORMAT: &str = "shadowrdm-checkpoint";

fn load_checkpoint(path: &Path, hash: &str, seed: u64) -> LabResult<Option<(ShadowAccumulator, u64)>> {
    if !path.exists() {
        return Ok(None);
    }
    let c: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if c.format != CHECKPOINT_FORMAT || c.version != 1 {
        return Err(LabError::Results(format!("{} is not a version-1 checkpoint", path.display())));
    }
    if c.config_hash != hash || c.seed != seed {
        // belongs to another run; start over
        return Ok(None);
    }
    Ok(Some((ShadowAccumulator::from_json(&c.accumulator)?, c.batches_done)))
}

fn save_checkpoint(path: &Path, hash: &str, seed: u64, done: u64, acc: &ShadowAccumulator) -> LabResult<()> {
    let c = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: 1,
        config_hash: hash.into(),
        seed,
        batches_done: done,
        accumulator: acc.to_json()?,
    };
    // write then rename so an interruption never leaves a torn file
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_string(&c)?)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

fn rdm_estimate(ctx: &RunContext, r: &RdmEstimate) -> LabResult<Vec<ResultRow>> {
    let out = ctx.out_dir.as_deref().ok_or_else(|| LabError::Config("rdm-estimate needs an output directory".into()))?;
    let n = r.state.n_modes();
    let degree = 2 * r.max_order;
    let mut rows = Vec::new();
    for &seed in &ctx.seeds {
        let t0 = Instant::now();
        let dir = out.join(format!("seed-{seed}"));
        std::fs::create_dir_all(&dir)?;
        let state = build_state(&r.state, seed)?;
        let rdms: Vec<RdmTensor> = match r.shots {
            ShotCount::Exact => {
                let src = ExactExpectations::from_state(&state, degree)?;
                (1..=r.max_order).map(|k| assemble_rdm(&src, k)).collect::<Result<_, _>>()?
            }
            ShotCount::Finite(shots) => {
                let plan = AcquisitionPlan {
                    batch_size: r.batch_size,
                    ..AcquisitionPlan::new(shots, degree, qse_shot_seed(seed, shots))
                        .with_noise(NoiseParams::depolarizing(r.noise)?)
                };
                if r.median_of_means > 0 {
                    let mom = collect_grouped(&state, &plan, r.median_of_means)?;
                    ctx.count(shots);
                    (1..=r.max_order).map(|k| assemble_rdm(&mom, k)).collect::<Result<_, _>>()?
                } else {
                    let acc = collect_with_checkpoints(ctx, &state, &plan, r.checkpoint_every, &dir, seed)?;
                    (1..=r.max_order).map(|k| assemble_rdm(&acc, k)).collect::<Result<_, _>>()?
                }
            }
        };
        for (k, d) in rdms.iter().enumerate() {
            std::fs::write(dir.join(format!("rdm_{}.json", k + 1)), d.to_json()?)?;
            d.write_binary(std::io::BufWriter::new(std::fs::File::create(dir.join(format!("rdm_{}.bin", k + 1)))?))?;
        }
        let cum = (r.max_order >= 2 && n >= 3).then(|| reconstruct_3rdm(&rdms[0], &rdms[1])).transpose()?;
        if let Some(c) = &cum {
            std::fs::write(dir.join("rdm_3_cum.json"), c.to_json()?)?;
        }
        let secs = t0.elapsed().as_secs_f64();
        let fill = |q: String, v: f64| ResultRow {
            seed: Some(seed),
            ansatz: r.state.label(),
            shots: Some(r.shots),
            noise: Some(r.noise),
            runtime_s: secs,
            lattice: match &r.state {
                StateSpec::HubbardGround { model } => model.label(),
                _ => String::new(),
            },
            sigma: match &r.state {
                StateSpec::Uccsd { sigma, .. } => Some(*sigma),
                _ => None,
            },
            ..ctx.row(n, &q, v)
        };
        for (k, d) in rdms.iter().enumerate() {
            rows.push(fill(format!("trace_rdm{}", k + 1), d.trace().re));
        }
        if n <= EXACT_ORACLE_MAX_MODES {
            let order = r.max_order.max(if cum.is_some() { 3 } else { 0 });
            let exact: Vec<RdmTensor> = (1..=order).map(|k| state.exact_rdm(k)).collect::<Result<_, _>>()?;
            for (k, d) in rdms.iter().enumerate() {
                rows.push(fill(format!("l1_rdm{}", k + 1), l1_distance(&exact[k], d, L1Convention::FullTuple)?));
                rows.push(fill(format!("max_abs_error_rdm{}", k + 1), exact[k].max_abs_diff(d)?));
            }
            if let Some(c) = &cum {
                rows.push(fill("l1_rdm3_cum".into(), l1_distance(&exact[2], c, L1Convention::FullTuple)?));
            }
        }
    }
    Ok(rows)
}

fn collect_with_checkpoints(
    ctx: &RunContext,
    state: &StateVector,
    plan: &AcquisitionPlan,
    every: u64,
    dir: &Path,
    seed: u64,
) -> LabResult<ShadowAccumulator> {
    let total = plan.n_batches();
    let path = dir.join("checkpoint.json");
    let (mut acc, mut done) = match (every > 0).then(|| load_checkpoint(&path, &ctx.hash, seed)).transpose()?.flatten() {
        Some(resumed) => resumed,
        None => (ShadowAccumulator::new(state.n_modes(), plan.max_degree)?, 0),
    };
    let step = if every == 0 { total.max(1) } else { every };
    while done < total {
        if ctx.stop_after_batches.is_some_and(|stop| done >= stop) {
            return Err(LabError::Interrupted(done));
        }
        let end = (done + step).min(total);
        let part = collect_batches(state, plan, done..end)?;
        ctx.count(part.n_snapshots());
        acc.merge(&part)?;
        done = end;
        if every > 0 {
            save_checkpoint(&path, &ctx.hash, seed, done, &acc)?;
        }
    }
    Ok(acc)
}
