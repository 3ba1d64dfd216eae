//! Statistical reductions over wave samples: Monte Carlo measurement
//! synthesis, frequency-band ergodic averages, and the deterministic
//! quadrature references they converge to.

use std::io::Write;

use crate::error::{Error, Result};
use crate::forward::{distance, ReceiverSet, WaveSampleSet};
use crate::greens;
use crate::randsrc::{Grid, StrengthField};
use crate::Dim;

/// Which observable the measurement table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    /// 64 k^4 E[(Re u)^2 - (Im u)^2]; the stable data of the modified
    /// integral equation.
    ExpectationDifference,
    /// 64 k^4 E|u|^2; kept for the instability demonstration only.
    Magnitude,
}

fn observable(kind: MeasurementKind, re: f64, im: f64) -> f64 {
    match kind {
        MeasurementKind::ExpectationDifference => re * re - im * im,
        MeasurementKind::Magnitude => re * re + im * im,
    }
}

/// Per-(receiver, frequency) measurement averages with Monte Carlo standard
/// errors.
#[derive(Debug, Clone)]
pub struct MeasurementTable {
    values: Vec<f64>,
    stderrs: Vec<f64>,
    pub receivers: usize,
    pub frequencies: Vec<f64>,
    pub kind: MeasurementKind,
}

impl MeasurementTable {
    fn index(&self, receiver: usize, freq: usize) -> usize {
        receiver * self.frequencies.len() + freq
    }

    pub fn value(&self, receiver: usize, freq: usize) -> f64 {
        self.values[self.index(receiver, freq)]
    }

    pub fn stderr(&self, receiver: usize, freq: usize) -> f64 {
        self.stderrs[self.index(receiver, freq)]
    }

    /// Column of values at one frequency, in receiver order.
    pub fn column(&self, freq: usize) -> Vec<f64> {
        (0..self.receivers).map(|i| self.value(i, freq)).collect()
    }

    pub fn frequency_index(&self, k: f64) -> Result<usize> {
        self.frequencies
            .iter()
            .position(|&f| (f - k).abs() <= 1e-12 * k.abs().max(1.0))
            .ok_or_else(|| Error::Config(format!("no measurement column for k = {k}")))
    }

    /// Concatenate tables over disjoint frequency lists; receivers and kind
    /// must match. Lets callers synthesize one frequency at a time and
    /// release the wave samples in between.
    pub fn merge(tables: &[MeasurementTable]) -> Result<MeasurementTable> {
        let first = tables
            .first()
            .ok_or_else(|| Error::Config("merge: no measurement tables".into()))?;
        let nf: usize = tables.iter().map(|t| t.frequencies.len()).sum();
        let mut out = MeasurementTable {
            values: vec![0.0; first.receivers * nf],
            stderrs: vec![0.0; first.receivers * nf],
            receivers: first.receivers,
            frequencies: Vec::with_capacity(nf),
            kind: first.kind,
        };
        for t in tables {
            if t.receivers != first.receivers || t.kind != first.kind {
                return Err(Error::Config("merge: incompatible measurement tables".into()));
            }
            let base = out.frequencies.len();
            out.frequencies.extend_from_slice(&t.frequencies);
            for i in 0..t.receivers {
                for f in 0..t.frequencies.len() {
                    out.values[i * nf + base + f] = t.value(i, f);
                    out.stderrs[i * nf + base + f] = t.stderr(i, f);
                }
            }
        }
        if out
            .frequencies
            .windows(2)
            .any(|w| w[0] >= w[1])
        {
            return Err(Error::Config("merge: frequencies must ascend across tables".into()));
        }
        Ok(out)
    }

    /// CSV export with header `i1,i2,x1,x2,k,M,stderr`; `grids` must be the
    /// measurement grids whose concatenated nodes produced the receiver
    /// ordering.
    pub fn write_csv(&self, grids: &[Grid], out: &mut impl Write) -> Result<()> {
        let total: usize = grids.iter().map(|g| g.num_nodes()).sum();
        if total != self.receivers {
            return Err(Error::Config(format!(
                "measurement CSV: {} grid nodes for {} receivers",
                total, self.receivers
            )));
        }
        writeln!(out, "i1,i2,x1,x2,k,M,stderr")?;
        let mut i = 0;
        for g in grids {
            for j in 0..g.num_nodes() {
                let mi = g.multi_index(j);
                let p = g.node(j);
                for (f, &k) in self.frequencies.iter().enumerate() {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        mi[0],
                        mi[1],
                        p[0],
                        p[1],
                        k,
                        self.value(i, f),
                        self.stderr(i, f)
                    )?;
                }
                i += 1;
            }
        }
        Ok(())
    }

    /// Inverse of `write_csv`: rebuild a table from rows ordered
    /// receiver-major with the frequency column cycling fastest.
    pub fn read_csv(kind: MeasurementKind, input: impl std::io::BufRead) -> Result<MeasurementTable> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "i1,i2,x1,x2,k,M,stderr" {
            return Err(Error::Parse("measurement CSV: bad or missing header".into()));
        }
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(Error::Parse(format!("measurement CSV row {}: 7 columns expected", row + 2)));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("measurement CSV row {}: bad number '{s}'", row + 2)))
            };
            rows.push((parse(cols[4])?, parse(cols[5])?, parse(cols[6])?));
        }
        if rows.is_empty() {
            return Err(Error::Parse("measurement CSV: no data rows".into()));
        }
        // the frequency column cycles fastest: the first block before k
        // returns to its opening value fixes the frequency list
        let nf = rows[1..]
            .iter()
            .position(|r| r.0 == rows[0].0)
            .map_or(rows.len(), |p| p + 1);
        let ks: Vec<f64> = rows[..nf].iter().map(|r| r.0).collect();
        if rows.len() % nf != 0 {
            return Err(Error::Parse("measurement CSV: ragged frequency blocks".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.0 != ks[i % nf] {
                return Err(Error::Parse(format!(
                    "measurement CSV row {}: frequency {} out of order",
                    i + 2,
                    r.0
                )));
            }
        }
        let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let stderrs: Vec<f64> = rows.iter().map(|r| r.2).collect();
        Ok(MeasurementTable {
            receivers: values.len() / ks.len(),
            values,
            stderrs,
            frequencies: ks,
            kind,
        })
    }
}

/// Sample average of 64 k^4 times the chosen quadratic observable over
/// paths, with the normal-approximation standard error per entry.
pub fn measurement_mc(samples: &WaveSampleSet, kind: MeasurementKind) -> Result<MeasurementTable> {
    if samples.paths < 2 {
        return Err(Error::Precondition(
            "measurement_mc needs at least 2 paths".into(),
        ));
    }
    let nf = samples.frequencies.len();
    let p = samples.paths as f64;
    let mut values = vec![0.0; samples.receivers * nf];
    let mut stderrs = vec![0.0; samples.receivers * nf];
    for i in 0..samples.receivers {
        for (f, &k) in samples.frequencies.iter().enumerate() {
            let scale = 64.0 * k.powi(4);
            let mut mean = 0.0;
            for path in 0..samples.paths {
                let u = samples.value(i, path, f);
                mean += scale * observable(kind, u.re, u.im);
            }
            mean /= p;
            let mut var = 0.0;
            for path in 0..samples.paths {
                let u = samples.value(i, path, f);
                let x = scale * observable(kind, u.re, u.im);
                var += (x - mean) * (x - mean);
            }
            var /= p - 1.0;
            values[i * nf + f] = mean;
            stderrs[i * nf + f] = (var / p).sqrt();
        }
    }
    Ok(MeasurementTable {
        values,
        stderrs,
        receivers: samples.receivers,
        frequencies: samples.frequencies.clone(),
        kind,
    })
}

/// Deterministic quadrature of the measurement expectation,
/// M(x_i,k) = sum_j |I_j| G(|x_i - y_j|, k) mu(y_j), with the kernel chosen
/// by `kind`. This is the exact expectation of `measurement_mc` under the
/// forward discretization.
pub fn measurement_quadrature(
    receivers: &ReceiverSet,
    grid: &Grid,
    field: &StrengthField,
    frequencies: &[f64],
    kind: MeasurementKind,
) -> Result<MeasurementTable> {
    if grid.dim() != Dim::Two {
        return Err(Error::Config("measurement quadrature is 2D".into()));
    }
    receivers.validate_outside(grid)?;
    let area = grid.cell_area();
    let nf = frequencies.len();
    let mut values = vec![0.0; receivers.len() * nf];
    let mu: Vec<f64> = field.sample_on(grid);
    for i in 0..receivers.len() {
        let x = receivers.point(i);
        for (f, &k) in frequencies.iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..grid.num_nodes() {
                let r = distance(x, &grid.node(j)[..2]);
                let g = match kind {
                    MeasurementKind::ExpectationDifference => greens::measurement_kernel_g(r, k)?,
                    MeasurementKind::Magnitude => greens::magnitude_kernel(r, k)?,
                };
                acc += area * g * mu[j];
            }
            values[i * nf + f] = acc;
        }
    }
    Ok(MeasurementTable {
        stderrs: vec![0.0; values.len()],
        values,
        receivers: receivers.len(),
        frequencies: frequencies.to_vec(),
        kind,
    })
}

/// Frequency-band average (1/T) int_T^{2T} k^{m+7-d} |u(x;k)|^2 dk from a
/// single path, one value per receiver.
#[derive(Debug, Clone)]
pub struct ErgodicEstimate {
    pub values: Vec<f64>,
    pub band: (f64, f64),
    pub exponent: f64,
    pub nodes: usize,
}

impl ErgodicEstimate {
    /// CSV export with header `x1,x2[,x3],Td_hat,Td_ref,ratio`; `refs` holds
    /// the reference T_d values in receiver order.
    pub fn write_csv(
        &self,
        receivers: &ReceiverSet,
        refs: &[f64],
        out: &mut impl Write,
    ) -> Result<()> {
        if receivers.len() != self.values.len() || refs.len() != self.values.len() {
            return Err(Error::Config("ergodic CSV: length mismatch".into()));
        }
        match receivers.dim() {
            Dim::Two => writeln!(out, "x1,x2,Td_hat,Td_ref,ratio")?,
            Dim::Three => writeln!(out, "x1,x2,x3,Td_hat,Td_ref,ratio")?,
        }
        for i in 0..self.values.len() {
            let p = receivers.point(i);
            for (a, &c) in p.iter().enumerate() {
                if a > 0 {
                    write!(out, ",")?;
                }
                let _ = a;
                write!(out, "{c}")?;
            }
            let ratio = if refs[i] != 0.0 {
                self.values[i] / refs[i]
            } else {
                f64::NAN
            };
            writeln!(out, ",{},{},{}", self.values[i], refs[i], ratio)?;
        }
        Ok(())
    }
}

/// Trapezoid-rule band average over [T, 2T] for one path. The sample set's
/// frequency grid must start at T and end at 2T.
pub fn ergodic_average(
    samples: &WaveSampleSet,
    path: usize,
    m: f64,
    dim: Dim,
    t_band: f64,
) -> Result<ErgodicEstimate> {
    if path >= samples.paths {
        return Err(Error::Config(format!(
            "ergodic_average: path {path} of {}",
            samples.paths
        )));
    }
    if t_band <= 0.0 {
        return Err(Error::Config("ergodic_average: band start must be positive".into()));
    }
    let ks = &samples.frequencies;
    if ks.len() < 2 {
        return Err(Error::Config("ergodic_average: need at least 2 frequency nodes".into()));
    }
    let tol = 1e-9 * t_band;
    if (ks[0] - t_band).abs() > tol || (ks[ks.len() - 1] - 2.0 * t_band).abs() > tol {
        return Err(Error::Config(format!(
            "ergodic_average: frequency grid [{}, {}] does not cover the band [{}, {}]",
            ks[0],
            ks[ks.len() - 1],
            t_band,
            2.0 * t_band
        )));
    }
    let exponent = m + 7.0 - dim.value() as f64;
    let mut values = vec![0.0; samples.receivers];
    for i in 0..samples.receivers {
        let mut acc = 0.0;
        for seg in 0..ks.len() - 1 {
            let (ka, kb) = (ks[seg], ks[seg + 1]);
            let fa = ka.powf(exponent) * samples.value(i, path, seg).norm_sqr();
            let fb = kb.powf(exponent) * samples.value(i, path, seg + 1).norm_sqr();
            acc += 0.5 * (fa + fb) * (kb - ka);
        }
        values[i] = acc / t_band;
    }
    Ok(ErgodicEstimate {
        values,
        band: (t_band, 2.0 * t_band),
        exponent,
        nodes: ks.len(),
    })
}

/// T_d(x) = (1/(16 (2 pi)^{d-1})) int_D mu(zeta) |x - zeta|^{-(d-1)} d zeta
/// by the cell-corner rule of the forward discretization.
pub fn reference_td(x: &[f64], field: &StrengthField, grid: &Grid, dim: Dim) -> Result<f64> {
    if dim != grid.dim() || x.len() != dim.value() {
        return Err(Error::Config("reference_td: dimension mismatch".into()));
    }
    let (lo, hi) = grid.bounds();
    let mut inside = true;
    for (axis, &c) in x.iter().enumerate() {
        if c < lo[axis] || c > hi[axis] {
            inside = false;
        }
    }
    if inside {
        return Err(Error::Precondition(format!(
            "reference_td: point {x:?} lies inside the source domain"
        )));
    }
    let d = dim.value();
    let c_d = 1.0 / (16.0 * (2.0 * std::f64::consts::PI).powi(d as i32 - 1));
    let area = grid.cell_area();
    let mut acc = 0.0;
    for j in 0..grid.num_nodes() {
        let y = grid.node(j);
        let r = distance(x, &y[..d]);
        acc += area * field.evaluate(&y[..d]) / r.powi(d as i32 - 1);
    }
    Ok(c_d * acc)
}

/// Per-frequency ratios k^{m+7-d} E^|u|^2 / T_d(x), averaged over receivers
/// with a nonzero reference; `None` marks frequencies where every reference
/// vanishes.
#[derive(Debug, Clone)]
pub struct AsymptoticsReport {
    pub frequencies: Vec<f64>,
    pub ratios: Vec<Option<f64>>,
}

pub fn variance_asymptotics_check(
    samples: &WaveSampleSet,
    receivers: &ReceiverSet,
    field: &StrengthField,
    grid: &Grid,
    m: f64,
    dim: Dim,
) -> Result<AsymptoticsReport> {
    if receivers.len() != samples.receivers {
        return Err(Error::Config("asymptotics check: receiver count mismatch".into()));
    }
    let refs: Vec<f64> = (0..receivers.len())
        .map(|i| reference_td(receivers.point(i), field, grid, dim))
        .collect::<Result<_>>()?;
    let exponent = m + 7.0 - dim.value() as f64;
    let p = samples.paths as f64;
    let mut ratios = Vec::with_capacity(samples.frequencies.len());
    for (f, &k) in samples.frequencies.iter().enumerate() {
        let scale = k.powf(exponent);
        let mut acc = 0.0;
        let mut count = 0usize;
        for i in 0..receivers.len() {
            if refs[i] == 0.0 {
                continue;
            }
            let mean_sq: f64 = (0..samples.paths)
                .map(|path| samples.value(i, path, f).norm_sqr())
                .sum::<f64>()
                / p;
            acc += scale * mean_sq / refs[i];
            count += 1;
        }
        ratios.push(if count == 0 { None } else { Some(acc / count as f64) });
    }
    Ok(AsymptoticsReport {
        frequencies: samples.frequencies.clone(),
        ratios,
    })
}
