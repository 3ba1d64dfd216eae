//! Regularized block-Kaczmarz inversion of the measurement systems and of
//! the ergodic integral equation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::io::Write;

use crate::error::{Error, Result};
use crate::estimators::{ErgodicEstimate, MeasurementKind, MeasurementTable};
use crate::forward::{distance, ReceiverSet};
use crate::greens;
use crate::randsrc::{Grid, StrengthField};
use crate::Dim;

/// One linear block b_n = A_n q tied to a measurement domain and a
/// frequency. A_n depends only on geometry and k.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub k: f64,
    pub domain: usize,
}

/// Rows follow the receiver ordering restricted to `domain`; columns follow
/// the source node ordering (row-major over the grid).
pub fn assemble_block(
    receivers: &ReceiverSet,
    domain: usize,
    grid: &Grid,
    k: f64,
    measurements: &MeasurementTable,
) -> Result<BlockSystem> {
    if grid.dim() != Dim::Two {
        return Err(Error::Assembly("block assembly is 2D".into()));
    }
    if measurements.receivers != receivers.len() {
        return Err(Error::Assembly(format!(
            "measurement table has {} receivers, set has {}",
            measurements.receivers,
            receivers.len()
        )));
    }
    let freq = measurements
        .frequency_index(k)
        .map_err(|_| Error::Assembly(format!("no measurement entries for k = {k}")))?;
    let rows: Vec<usize> = (0..receivers.len())
        .filter(|&i| receivers.labels()[i] == domain)
        .collect();
    if rows.is_empty() {
        return Err(Error::Assembly(format!("domain {domain} has no receivers")));
    }
    let nodes = grid.num_nodes();
    let area = grid.cell_area();
    let kernel = |r: f64| -> Result<f64> {
        match measurements.kind {
            MeasurementKind::ExpectationDifference => greens::measurement_kernel_g(r, k),
            MeasurementKind::Magnitude => greens::magnitude_kernel(r, k),
        }
    };
    let mut a = DMatrix::zeros(rows.len(), nodes);
    let mut b = DVector::zeros(rows.len());
    for (row, &i) in rows.iter().enumerate() {
        let x = receivers.point(i);
        for j in 0..nodes {
            let r = distance(x, &grid.node(j)[..2]);
            a[(row, j)] = area * kernel(r)?;
        }
        b[row] = measurements.value(i, freq);
    }
    Ok(BlockSystem { a, b, k, domain })
}

/// Block with its Gram factor (gamma I + A A^T) cached for reuse across
/// sweeps.
pub struct FactoredBlock {
    pub system: BlockSystem,
    chol: Cholesky<f64, Dyn>,
}

impl FactoredBlock {
    pub fn new(system: BlockSystem, gamma: f64) -> Result<FactoredBlock> {
        if gamma < 0.0 || !gamma.is_finite() {
            return Err(Error::Config(format!("gamma = {gamma} must be nonnegative")));
        }
        let mut gram = &system.a * system.a.transpose();
        for i in 0..gram.nrows() {
            gram[(i, i)] += gamma;
        }
        let chol = Cholesky::new(gram).ok_or_else(|| Error::LinearSolve {
            block: system.domain.to_string(),
            reason: format!("gamma I + A A^T not positive definite at k = {}", system.k),
        })?;
        Ok(FactoredBlock { system, chol })
    }

    /// q <- q + A^T (gamma I + A A^T)^{-1} (b - A q).
    pub fn update(&self, q: &mut DVector<f64>) {
        let residual = &self.system.b - &self.system.a * &*q;
        let w = self.chol.solve(&residual);
        *q += self.system.a.transpose() * w;
    }

    pub fn residual_norm(&self, q: &DVector<f64>) -> f64 {
        (&self.system.b - &self.system.a * q).norm()
    }
}

/// One cyclic pass over the blocks in the given order.
pub fn kaczmarz_sweep(
    blocks: &[BlockSystem],
    q_in: &DVector<f64>,
    gamma: f64,
) -> Result<DVector<f64>> {
    let factored: Vec<FactoredBlock> = blocks
        .iter()
        .map(|b| FactoredBlock::new(b.clone(), gamma))
        .collect::<Result<_>>()?;
    let mut q = q_in.clone();
    for f in &factored {
        f.update(&mut q);
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy)]
pub struct ResidualRecord {
    /// Global sweep counter across the whole run, starting at 1.
    pub sweep: usize,
    pub k: f64,
    /// Sum over blocks of ||b_n - A_n q||_2 after the sweep.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub q: Vec<f64>,
    pub residuals: Vec<ResidualRecord>,
    pub gamma: f64,
    pub sweeps_per_frequency: usize,
    pub frequencies: Vec<f64>,
    pub seed: u64,
}

impl ReconstructionResult {
    /// CSV export with header `j1,j2,y1,y2,mu_true,mu_rec`.
    pub fn write_csv(
        &self,
        grid: &Grid,
        truth: &StrengthField,
        out: &mut impl Write,
    ) -> Result<()> {
        if self.q.len() != grid.num_nodes() {
            return Err(Error::Config("reconstruction CSV: node count mismatch".into()));
        }
        writeln!(out, "j1,j2,y1,y2,mu_true,mu_rec")?;
        for j in 0..grid.num_nodes() {
            let mi = grid.multi_index(j);
            let p = grid.node(j);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                mi[0],
                mi[1],
                p[0],
                p[1],
                truth.evaluate(&p[..2]),
                self.q[j]
            )?;
        }
        Ok(())
    }

    /// CSV export with header `sweep,frequency,residual`.
    pub fn write_residual_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "sweep,frequency,residual")?;
        for r in &self.residuals {
            writeln!(out, "{},{},{}", r.sweep, r.k, r.residual)?;
        }
        Ok(())
    }

    pub fn relative_l2_error(&self, truth: &[f64]) -> f64 {
        let num: f64 = self
            .q
            .iter()
            .zip(truth.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den: f64 = truth.iter().map(|b| b * b).sum();
        (num / den).sqrt()
    }
}

/// Multi-frequency inversion: for each frequency in ascending order, run L
/// sweeps over its blocks, warm-starting q from the previous frequency.
/// Block factors live only while their frequency is being processed. The
/// optional clamp zeroes negative entries of q after every sweep.
pub fn invert(
    blocks_by_frequency: Vec<Vec<BlockSystem>>,
    gamma: f64,
    sweeps: usize,
    q0: &[f64],
    clamp: bool,
    seed: u64,
) -> Result<ReconstructionResult> {
    if sweeps == 0 {
        return Err(Error::Config("invert: sweep count must be at least 1".into()));
    }
    if blocks_by_frequency.is_empty() || blocks_by_frequency.iter().any(|g| g.is_empty()) {
        return Err(Error::Config("invert: empty frequency group".into()));
    }
    let cols = blocks_by_frequency[0][0].a.ncols();
    let domains: Vec<usize> = blocks_by_frequency[0].iter().map(|b| b.domain).collect();
    let mut frequencies = Vec::with_capacity(blocks_by_frequency.len());
    for group in &blocks_by_frequency {
        let k = group[0].k;
        for b in group {
            if b.a.ncols() != cols {
                return Err(Error::Config("invert: inconsistent column counts".into()));
            }
            if (b.k - k).abs() > 1e-12 * k.abs().max(1.0) {
                return Err(Error::Config("invert: mixed frequencies in one group".into()));
            }
        }
        let group_domains: Vec<usize> = group.iter().map(|b| b.domain).collect();
        if group_domains != domains {
            return Err(Error::Config("invert: block geometry differs across frequencies".into()));
        }
        if let Some(&prev) = frequencies.last() {
            if k <= prev {
                return Err(Error::Config("invert: frequencies must ascend".into()));
            }
        }
        frequencies.push(k);
    }
    if q0.len() != cols {
        return Err(Error::Config(format!(
            "invert: q0 has {} entries for {} source nodes",
            q0.len(),
            cols
        )));
    }

    let mut q = DVector::from_column_slice(q0);
    let mut residuals = Vec::with_capacity(frequencies.len() * sweeps);
    let mut sweep_counter = 0;
    for group in blocks_by_frequency {
        let k = group[0].k;
        let factored: Vec<FactoredBlock> = group
            .into_iter()
            .map(|b| FactoredBlock::new(b, gamma))
            .collect::<Result<_>>()?;
        for _ in 0..sweeps {
            for f in &factored {
                f.update(&mut q);
            }
            if clamp {
                q.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            sweep_counter += 1;
            residuals.push(ResidualRecord {
                sweep: sweep_counter,
                k,
                residual: factored.iter().map(|f| f.residual_norm(&q)).sum(),
            });
        }
    }
    Ok(ReconstructionResult {
        q: q.iter().copied().collect(),
        residuals,
        gamma,
        sweeps_per_frequency: sweeps,
        frequencies,
        seed,
    })
}

/// Solve T_d(x_i) = sum_j |I_j| c_d |x_i - y_j|^{-(d-1)} mu(y_j) with
/// c_d = 1/(16 (2 pi)^{d-1}), one Kaczmarz block per receiver domain.
pub fn invert_ergodic(
    td: &ErgodicEstimate,
    grid: &Grid,
    receivers: &ReceiverSet,
    dim: Dim,
    gamma: f64,
    sweeps: usize,
    clamp: bool,
    seed: u64,
) -> Result<ReconstructionResult> {
    if receivers.len() != td.values.len() {
        return Err(Error::Config("invert_ergodic: receiver count mismatch".into()));
    }
    if grid.dim() != dim || receivers.dim() != dim {
        return Err(Error::Config("invert_ergodic: dimension mismatch".into()));
    }
    receivers.validate_outside(grid)?;
    let d = dim.value();
    let c_d = 1.0 / (16.0 * (2.0 * std::f64::consts::PI).powi(d as i32 - 1));
    let area = grid.cell_area();
    let nodes = grid.num_nodes();
    let mut blocks = Vec::new();
    for domain in 0..receivers.domain_count() {
        let rows: Vec<usize> = (0..receivers.len())
            .filter(|&i| receivers.labels()[i] == domain)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let mut a = DMatrix::zeros(rows.len(), nodes);
        let mut b = DVector::zeros(rows.len());
        for (row, &i) in rows.iter().enumerate() {
            let x = receivers.point(i);
            for j in 0..nodes {
                let r = distance(x, &grid.node(j)[..d]);
                a[(row, j)] = area * c_d / r.powi(d as i32 - 1);
            }
            b[row] = td.values[i];
        }
        blocks.push(BlockSystem {
            a,
            b,
            k: 0.0,
            domain,
        });
    }
    invert(vec![blocks], gamma, sweeps, &vec![0.0; nodes], clamp, seed).map(|mut r| {
        r.frequencies.clear();
        r
    })
}
