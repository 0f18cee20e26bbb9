//! The `results.csv` schema shared by every experiment.
//!
//! Columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `experiment` | experiment kind, e.g. `ratio-sweep` |
//! | `config_hash` | 16 hex digits identifying config and seed offset |
//! | `seed` | instance seed; empty for baselines and summaries |
//! | `n_modes` | number of fermionic modes |
//! | `lattice` | Hubbard lattice label, empty for random states |
//! | `ansatz` | state family or label |
//! | `sigma` | parameter spread of the random ansatz |
//! | `shots` | snapshot count, or `exact` |
//! | `noise` | depolarizing rate |
//! | `pipeline` | QSE RDM pipeline |
//! | `quantity` | name of the measured value |
//! | `value` | the measurement |
//! | `status` | `ok`, or why `value` is not a number |
//! | `runtime_s` | wall time of the work item (not deterministic) |
//!
//! Floats are written with 17 significant digits so they round-trip.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::config::{ExperimentKind, ShotCount};
use crate::error::{LabError, LabResult};

pub const HEADER: [&str; 14] = [
    "experiment",
    "config_hash",
    "seed",
    "n_modes",
    "lattice",
    "ansatz",
    "sigma",
    "shots",
    "noise",
    "pipeline",
    "quantity",
    "value",
    "status",
    "runtime_s",
];

pub const STATUS_OK: &str = "ok";

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub n_modes: usize,
    pub lattice: String,
    pub ansatz: String,
    pub sigma: Option<f64>,
    pub shots: Option<ShotCount>,
    pub noise: Option<f64>,
    pub pipeline: String,
    pub quantity: String,
    pub value: f64,
    pub status: String,
    pub runtime_s: f64,
}

impl ResultRow {
    /// A row with the identifying columns set and everything else blank.
    pub fn new(kind: ExperimentKind, config_hash: &str, n_modes: usize, quantity: &str, value: f64) -> Self {
        Self {
            experiment: kind.name().to_string(),
            config_hash: config_hash.to_string(),
            seed: None,
            n_modes,
            lattice: String::new(),
            ansatz: String::new(),
            sigma: None,
            shots: None,
            noise: None,
            pipeline: String::new(),
            quantity: quantity.to_string(),
            value,
            status: STATUS_OK.to_string(),
            runtime_s: 0.0,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    fn record(&self) -> [String; 14] {
        let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        [
            self.experiment.clone(),
            self.config_hash.clone(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.n_modes.to_string(),
            self.lattice.clone(),
            self.ansatz.clone(),
            opt(self.sigma),
            self.shots.map(|s| s.to_string()).unwrap_or_default(),
            opt(self.noise),
            self.pipeline.clone(),
            self.quantity.clone(),
            fmt_float(self.value),
            self.status.clone(),
            fmt_float(self.runtime_s),
        ]
    }

    fn from_record(r: &csv::StringRecord) -> LabResult<Self> {
        if r.len() != HEADER.len() {
            return Err(LabError::Results(format!("expected {} columns, found {}", HEADER.len(), r.len())));
        }
        let bad = |col: &str, v: &str| LabError::Results(format!("bad {col} {v:?}"));
        let float = |i: usize| -> LabResult<f64> { r[i].parse().map_err(|_| bad(HEADER[i], &r[i])) };
        let opt_float = |i: usize| -> LabResult<Option<f64>> {
            if r[i].is_empty() {
                Ok(None)
            } else {
                float(i).map(Some)
            }
        };
        Ok(Self {
            experiment: r[0].to_string(),
            config_hash: r[1].to_string(),
            seed: if r[2].is_empty() { None } else { Some(r[2].parse().map_err(|_| bad("seed", &r[2]))?) },
            n_modes: r[3].parse().map_err(|_| bad("n_modes", &r[3]))?,
            lattice: r[4].to_string(),
            ansatz: r[5].to_string(),
            sigma: opt_float(6)?,
            shots: if r[7].is_empty() { None } else { Some(r[7].parse().map_err(|_| bad("shots", &r[7]))?) },
            noise: opt_float(8)?,
            pipeline: r[9].to_string(),
            quantity: r[10].to_string(),
            value: float(11)?,
            status: r[12].to_string(),
            runtime_s: float(13)?,
        })
    }
}

/// 17 significant digits; `NaN` and infinities in Rust's spelling.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn write_rows<W: Write>(w: W, rows: &[ResultRow]) -> LabResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    for row in rows {
        out.write_record(row.record())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> LabResult<()> {
    write_rows(std::fs::File::create(path)?, rows)
}

/// Parses a results file, checking the header.
pub fn read_rows<R: Read>(r: R) -> LabResult<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(LabError::Results(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    reader.records().map(|rec| ResultRow::from_record(&rec?)).collect()
}

pub fn read_csv(path: &Path) -> LabResult<Vec<ResultRow>> {
    read_rows(std::fs::File::open(path)?)
}

/// Reads several result files for joint aggregation, refusing to mix
/// rows produced by different configurations.
pub fn read_consistent(paths: &[&Path]) -> LabResult<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_csv(p)?);
    }
    config_hash(&rows)?;
    Ok(rows)
}

/// The single config hash carried by `rows`.
pub fn config_hash(rows: &[ResultRow]) -> LabResult<Option<String>> {
    let hashes: BTreeSet<&str> = rows.iter().map(|r| r.config_hash.as_str()).collect();
    let mut it = hashes.into_iter();
    match (it.next(), it.next()) {
        (None, _) => Ok(None),
        (Some(h), None) => Ok(Some(h.to_string())),
        (Some(a), Some(b)) => Err(LabError::MixedConfig(a.to_string(), b.to_string())),
    }
}

/// Median of the finite entries; `None` if there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Values of successful rows matching `pred`, in file order.
pub fn select<'a>(rows: &'a [ResultRow], pred: impl Fn(&ResultRow) -> bool + 'a) -> Vec<f64> {
    rows.iter().filter(|r| r.is_ok() && pred(r)).map(|r| r.value).collect()
}
