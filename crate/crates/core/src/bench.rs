//! Kernel micro-benchmarks producing hardware-style reports.
//!
//! Each kernel computes one matrix-vector product over a random weight matrix.
//! The quantized kernels receive a pre-quantized int8 activation; the float
//! baseline is a plain `f32` loop. Timings are per call.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ternary::{
    lut_matvec, quantize_2bit, quantize_absmean, quantize_activation, ternary_matvec,
    twobit_matvec, QuantError, QuantizedActivation, TernaryMatrix, TwoBitMatrix,
};
use crate::Matrix;

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_WARMUP: usize = 10;
pub const MIN_ITERATIONS: usize = 100;
/// Header bytes of a stored weight block: magic, version, rows, cols, scale.
pub const BLOCK_OVERHEAD_BYTES: usize = 4 + 2 + 4 + 4 + 8;
/// Label for [`BenchReport::intent_accuracy`].
pub const ACCURACY_LABEL: &str =
    "intent-classifier accuracy on held-out synthetic commands (closest analogue of a task accuracy column)";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid bench config: {0}")]
    Config(String),
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error("malformed report: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kernel {
    #[serde(rename = "float-naive")]
    FloatNaive,
    #[serde(rename = "ternary")]
    Ternary,
    #[serde(rename = "lut")]
    Lut,
    #[serde(rename = "twobit")]
    TwoBit,
}

impl Kernel {
    pub const ALL: [Kernel; 4] = [
        Kernel::FloatNaive,
        Kernel::Ternary,
        Kernel::Lut,
        Kernel::TwoBit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::FloatNaive => "float-naive",
            Kernel::Ternary => "ternary",
            Kernel::Lut => "lut",
            Kernel::TwoBit => "twobit",
        }
    }

    /// Bytes of stored weights for a `rows × cols` matrix.
    pub fn memory_bytes(self, rows: usize, cols: usize) -> usize {
        match self {
            Kernel::FloatNaive => 4 * rows * cols,
            _ => (rows * cols).div_ceil(4) + BLOCK_OVERHEAD_BYTES,
        }
    }

    /// Per-call working memory beyond weights, input and output.
    pub fn scratch_bytes(self, cols: usize) -> usize {
        match self {
            Kernel::Lut => cols.div_ceil(4) * 256 * 4,
            _ => 0,
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "float" | "float-naive" => Ok(Kernel::FloatNaive),
            "ternary" => Ok(Kernel::Ternary),
            "lut" => Ok(Kernel::Lut),
            "twobit" | "2bit" => Ok(Kernel::TwoBit),
            _ => Err(BenchError::Config(format!(
                "unknown kernel '{s}' (expected float, ternary, lut or twobit)"
            ))),
        }
    }
}

/// Matrix shape `rows × cols`, written `ROWSxCOLS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub rows: usize,
    pub cols: usize,
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl FromStr for Dims {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BenchError::Config(format!("bad dims '{s}' (expected ROWSxCOLS)"));
        let (r, c) = s.split_once(['x', 'X', '*']).ok_or_else(bad)?;
        let rows = r.trim().parse().map_err(|_| bad())?;
        let cols = c.trim().parse().map_err(|_| bad())?;
        if rows == 0 || cols == 0 {
            return Err(bad());
        }
        Ok(Dims { rows, cols })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub dims: Vec<Dims>,
    pub kernels: Vec<Kernel>,
    pub warmup: usize,
    pub iterations: usize,
    /// `1` times the single-threaded kernels; more splits rows across threads.
    pub threads: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dims: vec![
                Dims {
                    rows: 128,
                    cols: 128,
                },
                Dims {
                    rows: 256,
                    cols: 384,
                },
            ],
            kernels: Kernel::ALL.to_vec(),
            warmup: 20,
            iterations: 200,
            threads: 1,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.dims.is_empty() || self.kernels.is_empty() {
            return Err(BenchError::Config(
                "need at least one kernel and one shape".into(),
            ));
        }
        if self.warmup < MIN_WARMUP || self.iterations < MIN_ITERATIONS {
            return Err(BenchError::Config(format!(
                "need >= {MIN_WARMUP} warmup and >= {MIN_ITERATIONS} timed iterations"
            )));
        }
        if self.threads == 0 {
            return Err(BenchError::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpuFingerprint {
    pub model: String,
    pub arch: String,
    pub logical_cpus: usize,
    /// Threads used by the timed kernels.
    pub threads: usize,
}

impl CpuFingerprint {
    pub fn detect(threads: usize) -> Self {
        let model = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|info| {
                info.lines()
                    .find(|l| l.starts_with("model name") || l.starts_with("Model"))
                    .and_then(|l| l.split_once(':'))
                    .map(|(_, v)| v.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".into());
        Self {
            model,
            arch: std::env::consts::ARCH.into(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            threads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub kernel: Kernel,
    pub dims: Dims,
    pub threads: usize,
    pub warmup: usize,
    pub iterations: usize,
    pub median_ns: f64,
    pub p95_ns: f64,
    pub mean_ns: f64,
    pub memory_bytes: usize,
    pub scratch_bytes: usize,
    /// Multiply-accumulates per second at the median latency.
    pub throughput_ops: f64,
    /// Float-naive median over this kernel's median, when float was timed.
    pub speedup_vs_float: Option<f64>,
}

/// Relative speeds at one shape. `ordering_holds` is true when
/// ternary ≥ twobit ≥ float-naive in speed; a false value is a flag, not a
/// failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub dims: Dims,
    /// Twobit median over ternary median; above 1 means ternary is faster.
    pub ternary_vs_twobit: Option<f64>,
    pub lut_vs_twobit: Option<f64>,
    pub ordering_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub cpu: CpuFingerprint,
    pub rows: Vec<BenchRow>,
    pub comparisons: Vec<Comparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent_accuracy_label: Option<String>,
}

impl BenchReport {
    pub fn row(&self, kernel: Kernel, dims: Dims) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.kernel == kernel && r.dims == dims)
    }

    pub fn with_intent_accuracy(mut self, accuracy: f64) -> Self {
        self.intent_accuracy = Some(accuracy);
        self.intent_accuracy_label = Some(ACCURACY_LABEL.into());
        self
    }

    /// Structural checks: schema version, iteration minimums, finite and
    /// ordered latencies, storage sizes matching the formats, and one
    /// comparison per shape.
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Malformed(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema version {}", self.schema_version));
        }
        if self.rows.is_empty() {
            return bad("no rows".into());
        }
        for r in &self.rows {
            let id = format!("{} {}", r.kernel, r.dims);
            if r.warmup < MIN_WARMUP || r.iterations < MIN_ITERATIONS {
                return bad(format!("{id}: too few iterations"));
            }
            let finite = [r.median_ns, r.p95_ns, r.mean_ns, r.throughput_ops]
                .iter()
                .all(|v| v.is_finite() && *v > 0.0);
            if !finite || r.p95_ns < r.median_ns {
                return bad(format!("{id}: bad latency figures"));
            }
            if r.memory_bytes != r.kernel.memory_bytes(r.dims.rows, r.dims.cols) {
                return bad(format!(
                    "{id}: memory {} does not match format",
                    r.memory_bytes
                ));
            }
            if r.threads == 0 {
                return bad(format!("{id}: zero threads"));
            }
        }
        let mut shapes: Vec<Dims> = self.rows.iter().map(|r| r.dims).collect();
        shapes.dedup();
        for d in shapes {
            if !self.comparisons.iter().any(|c| c.dims == d) {
                return bad(format!("no comparison for {d}"));
            }
        }
        if let Some(a) = self.intent_accuracy {
            if !(0.0..=1.0).contains(&a) || self.intent_accuracy_label.is_none() {
                return bad("intent accuracy must be in [0, 1] and labelled".into());
            }
        }
        Ok(())
    }

    /// Fixed-width text table, one line per row.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "cpu: {} ({}, {} logical, {} timed threads)\n{:<12} {:>9} {:>12} {:>12} {:>10} {:>14} {:>8}\n",
            self.cpu.model,
            self.cpu.arch,
            self.cpu.logical_cpus,
            self.cpu.threads,
            "kernel",
            "dims",
            "median_us",
            "p95_us",
            "mem_B",
            "MAC/s",
            "vs_f32"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12} {:>9} {:>12.3} {:>12.3} {:>10} {:>14.3e} {:>8}\n",
                r.kernel.name(),
                r.dims.to_string(),
                r.median_ns / 1e3,
                r.p95_ns / 1e3,
                r.memory_bytes,
                r.throughput_ops,
                r.speedup_vs_float
                    .map_or("-".into(), |s| format!("{s:.2}x")),
            ));
        }
        for c in &self.comparisons {
            out.push_str(&format!(
                "{}: ternary/twobit {} lut/twobit {} ordering {}\n",
                c.dims,
                c.ternary_vs_twobit
                    .map_or("-".into(), |s| format!("{s:.2}x")),
                c.lut_vs_twobit.map_or("-".into(), |s| format!("{s:.2}x")),
                match c.ordering_holds {
                    Some(true) => "holds",
                    Some(false) => "FLAGGED",
                    None => "-",
                }
            ));
        }
        if let (Some(a), Some(l)) = (self.intent_accuracy, &self.intent_accuracy_label) {
            out.push_str(&format!("{l}: {:.2}%\n", 100.0 * a));
        }
        out
    }
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Median of sorted samples; the mean of the middle pair for even counts.
pub fn median(sorted: &[f64]) -> f64 {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// `f32` weights, one slice per row band.
struct FloatBand {
    rows: usize,
    cols: usize,
    w: Vec<f32>,
}

fn float_matvec(b: &FloatBand, x: &[f32], out: &mut [f32]) {
    for (r, o) in out.iter_mut().enumerate().take(b.rows) {
        let row = &b.w[r * b.cols..(r + 1) * b.cols];
        let mut acc = 0.0f32;
        for c in 0..b.cols {
            acc += row[c] * x[c];
        }
        *o = acc;
    }
}

/// One shape's operands, split into row bands for the threaded kernels.
struct Operands {
    float: Vec<FloatBand>,
    ternary: Vec<TernaryMatrix>,
    twobit: Vec<TwoBitMatrix>,
    xf: Vec<f32>,
    xq: QuantizedActivation,
}

fn bands(rows: usize, threads: usize) -> Vec<std::ops::Range<usize>> {
    let k = threads.min(rows).max(1);
    let base = rows / k;
    let extra = rows % k;
    let mut start = 0;
    (0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

fn operands(d: Dims, threads: usize, rng: &mut ChaCha8Rng) -> Result<Operands, BenchError> {
    let data: Vec<f64> = (0..d.rows * d.cols)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let w = Matrix::from_vec(d.rows, d.cols, data);
    let x: Vec<f64> = (0..d.cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let t = quantize_absmean(&w)?;
    let tb = quantize_2bit(&w)?;
    let trits = t.to_trits();
    let levels = tb.to_levels();
    let mut ops = Operands {
        float: Vec::new(),
        ternary: Vec::new(),
        twobit: Vec::new(),
        xf: x.iter().map(|&v| v as f32).collect(),
        xq: quantize_activation(&x)?,
    };
    for band in bands(d.rows, threads) {
        let span = band.start * d.cols..band.end * d.cols;
        ops.float.push(FloatBand {
            rows: band.len(),
            cols: d.cols,
            w: (span.clone())
                .map(|i| w.row(i / d.cols)[i % d.cols] as f32)
                .collect(),
        });
        ops.ternary.push(TernaryMatrix::from_trits(
            band.len(),
            d.cols,
            &trits[span.clone()],
            t.scale(),
        )?);
        ops.twobit.push(TwoBitMatrix::from_levels(
            band.len(),
            d.cols,
            &levels[span],
            tb.scale(),
        )?);
    }
    Ok(ops)
}

/// Runs `kernel` over every band, on scoped threads when there is more
/// than one band.
fn run_once(kernel: Kernel, ops: &Operands, out: &mut [f32]) -> Result<(), QuantError> {
    let one = |i: usize, out: &mut [f32]| -> Result<(), QuantError> {
        match kernel {
            Kernel::FloatNaive => float_matvec(&ops.float[i], &ops.xf, out),
            Kernel::Ternary => {
                black_box(ternary_matvec(&ops.ternary[i], &ops.xq)?);
            }
            Kernel::Lut => {
                black_box(lut_matvec(&ops.ternary[i], &ops.xq)?);
            }
            Kernel::TwoBit => {
                black_box(twobit_matvec(&ops.twobit[i], &ops.xq)?);
            }
        }
        Ok(())
    };
    if ops.float.len() == 1 {
        return one(0, out);
    }
    std::thread::scope(|s| {
        let mut rest = &mut *out;
        let handles: Vec<_> = ops
            .float
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let (mine, tail) = std::mem::take(&mut rest).split_at_mut(b.rows);
                rest = tail;
                s.spawn(move || one(i, mine))
            })
            .collect();
        handles
            .into_iter()
            .try_for_each(|h| h.join().expect("bench worker panicked"))
    })
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut comparisons = Vec::new();
    for &d in &cfg.dims {
        let ops = operands(d, cfg.threads, &mut rng)?;
        let mut out = vec![0f32; d.rows];
        let mut medians: Vec<(Kernel, f64)> = Vec::new();
        for &k in &cfg.kernels {
            for _ in 0..cfg.warmup {
                run_once(k, &ops, &mut out)?;
            }
            let mut samples = Vec::with_capacity(cfg.iterations);
            for _ in 0..cfg.iterations {
                let start = Instant::now();
                run_once(k, black_box(&ops), &mut out)?;
                black_box(&out);
                samples.push((start.elapsed().as_nanos() as f64).max(1.0));
            }
            samples.sort_by(f64::total_cmp);
            let med = median(&samples);
            medians.push((k, med));
            rows.push(BenchRow {
                kernel: k,
                dims: d,
                threads: ops.float.len(),
                warmup: cfg.warmup,
                iterations: cfg.iterations,
                median_ns: med,
                p95_ns: percentile(&samples, 95.0),
                mean_ns: samples.iter().sum::<f64>() / samples.len() as f64,
                memory_bytes: k.memory_bytes(d.rows, d.cols),
                scratch_bytes: k.scratch_bytes(d.cols),
                throughput_ops: (d.rows * d.cols) as f64 / (med * 1e-9),
                speedup_vs_float: None,
            });
        }
        let get = |k: Kernel| medians.iter().find(|m| m.0 == k).map(|m| m.1);
        let shape_rows = rows.len() - medians.len();
        if let Some(f) = get(Kernel::FloatNaive) {
            for r in &mut rows[shape_rows..] {
                r.speedup_vs_float = Some(f / r.median_ns);
            }
        }
        let ratio = |a: Kernel, b: Kernel| Some(get(b)? / get(a)?);
        comparisons.push(Comparison {
            dims: d,
            ternary_vs_twobit: ratio(Kernel::Ternary, Kernel::TwoBit),
            lut_vs_twobit: ratio(Kernel::Lut, Kernel::TwoBit),
            ordering_holds: match (
                get(Kernel::Ternary),
                get(Kernel::TwoBit),
                get(Kernel::FloatNaive),
            ) {
                (Some(t), Some(b), Some(f)) => Some(t <= b && b <= f),
                _ => None,
            },
        });
    }
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        cpu: CpuFingerprint::detect(cfg.threads),
        rows,
        comparisons,
        intent_accuracy: None,
        intent_accuracy_label: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(kernels: Vec<Kernel>, threads: usize) -> BenchConfig {
        BenchConfig {
            dims: vec![Dims { rows: 16, cols: 24 }, Dims { rows: 7, cols: 5 }],
            kernels,
            warmup: MIN_WARMUP,
            iterations: MIN_ITERATIONS,
            threads,
            seed: 1,
        }
    }

    #[test]
    fn dims_parse() {
        assert_eq!(
            "256x384".parse::<Dims>().unwrap(),
            Dims {
                rows: 256,
                cols: 384
            }
        );
        assert!("256".parse::<Dims>().is_err());
        assert!("0x3".parse::<Dims>().is_err());
        assert!("ax3".parse::<Dims>().is_err());
    }

    #[test]
    fn kernel_names_round_trip() {
        for k in Kernel::ALL {
            assert_eq!(k.name().parse::<Kernel>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), k.name());
        }
        assert_eq!("float".parse::<Kernel>().unwrap(), Kernel::FloatNaive);
        assert!("fp16".parse::<Kernel>().is_err());
    }

    #[test]
    fn percentiles() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 95.0), 95.0);
        assert_eq!(percentile(&v, 100.0), 100.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(median(&v), 50.5);
        assert_eq!(median(&[3.0]), 3.0);
    }

    #[test]
    fn bands_cover_rows() {
        for rows in 1..20 {
            for t in 1..6 {
                let b = bands(rows, t);
                assert_eq!(b.first().unwrap().start, 0);
                assert_eq!(b.last().unwrap().end, rows);
                assert!(b.windows(2).all(|w| w[0].end == w[1].start));
                assert!(b.iter().all(|r| !r.is_empty()));
            }
        }
    }

    #[test]
    fn report_is_complete_and_valid() {
        let report = run_bench(&quick(Kernel::ALL.to_vec(), 1)).unwrap();
        assert_eq!(report.rows.len(), 8);
        report.validate().unwrap();
        for c in &report.comparisons {
            assert!(c.ternary_vs_twobit.is_some());
            assert!(c.ordering_holds.is_some());
        }
        let text = serde_json::to_string(&report).unwrap();
        let back: BenchReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        assert!(report.to_table().contains("twobit"));
    }

    #[test]
    fn threaded_rows_are_reported() {
        let report = run_bench(&quick(vec![Kernel::Ternary, Kernel::FloatNaive], 3)).unwrap();
        report.validate().unwrap();
        assert_eq!(
            report
                .row(Kernel::Ternary, Dims { rows: 16, cols: 24 })
                .unwrap()
                .threads,
            3
        );
        assert_eq!(report.cpu.threads, 3);
        let cmp = &report.comparisons[0];
        assert_eq!(cmp.ternary_vs_twobit, None);
        assert_eq!(cmp.ordering_holds, None);
    }

    #[test]
    fn config_minimums_enforced() {
        let mut cfg = quick(vec![Kernel::Lut], 1);
        cfg.iterations = 99;
        assert!(run_bench(&cfg).is_err());
        cfg.iterations = 100;
        cfg.warmup = 9;
        assert!(run_bench(&cfg).is_err());
        cfg.warmup = 10;
        cfg.threads = 0;
        assert!(run_bench(&cfg).is_err());
    }

    #[test]
    fn malformed_reports_are_caught() {
        let good = run_bench(&quick(vec![Kernel::Ternary], 1)).unwrap();
        let mut r = good.clone();
        r.rows[0].memory_bytes += 1;
        assert!(r.validate().is_err());
        let mut r = good.clone();
        r.rows[0].p95_ns = r.rows[0].median_ns / 2.0;
        assert!(r.validate().is_err());
        let mut r = good.clone();
        r.rows[0].iterations = 5;
        assert!(r.validate().is_err());
        let mut r = good.clone();
        r.comparisons.clear();
        assert!(r.validate().is_err());
        let mut r = good.clone();
        r.intent_accuracy = Some(0.9);
        assert!(r.validate().is_err());
        assert!(good.with_intent_accuracy(0.9).validate().is_ok());
    }
}
