//! Monte Carlo forward solver: quadrature of the stochastic volume integral
//! against one noise realization, per receiver, path and frequency.

use num_complex::Complex64;
use std::io::Write;

use crate::error::{Error, Result};
use crate::greens;
use crate::randsrc::{sample_white_noise, Grid, NoiseRealization, StrengthField};
use crate::Dim;

/// Measurement points outside the source domain, tagged with the domain
/// U_n they belong to.
#[derive(Debug, Clone)]
pub struct ReceiverSet {
    points: Vec<[f64; 3]>,
    labels: Vec<usize>,
    dim: Dim,
}

impl ReceiverSet {
    pub fn new(points: Vec<[f64; 3]>, labels: Vec<usize>, dim: Dim) -> Result<ReceiverSet> {
        if points.len() != labels.len() {
            return Err(Error::Config("receiver set: points/labels length mismatch".into()));
        }
        Ok(ReceiverSet { points, labels, dim })
    }

    /// Union of measurement-grid nodes; label = grid position in the list.
    pub fn from_grids(grids: &[Grid]) -> Result<ReceiverSet> {
        let dim = grids
            .first()
            .ok_or_else(|| Error::Config("receiver set: no measurement grids".into()))?
            .dim();
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (n, g) in grids.iter().enumerate() {
            if g.dim() != dim {
                return Err(Error::Config("receiver set: mixed dimensions".into()));
            }
            for j in 0..g.num_nodes() {
                points.push(g.node(j));
                labels.push(n);
            }
        }
        Ok(ReceiverSet { points, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i][..self.dim.value()]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn domain_count(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Every receiver must keep a positive distance to the source bounding
    /// box.
    pub fn validate_outside(&self, source: &Grid) -> Result<()> {
        let (lo, hi) = source.bounds();
        for (i, p) in self.points.iter().enumerate() {
            let d = dist_to_box(&p[..self.dim.value()], &lo, &hi);
            if d <= 0.0 {
                return Err(Error::Precondition(format!(
                    "receiver {i} at {:?} lies inside the source domain",
                    &p[..self.dim.value()]
                )));
            }
        }
        Ok(())
    }
}

fn dist_to_box(p: &[f64], lo: &[f64; 3], hi: &[f64; 3]) -> f64 {
    let mut d2 = 0.0;
    for (axis, &c) in p.iter().enumerate() {
        let e = (lo[axis] - c).max(0.0).max(c - hi[axis]);
        d2 += e * e;
    }
    d2.sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Which fundamental solution the quadrature uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKernel {
    /// phi_2d or phi_3d depending on the grid dimension.
    Exact,
    /// N-truncated 2D kernel (2D grids only).
    Truncated(usize),
}

fn kernel_value(kernel: FieldKernel, dim: Dim, r: f64, k: f64) -> Result<Complex64> {
    match (kernel, dim) {
        (FieldKernel::Exact, Dim::Two) => greens::phi_2d(r, k),
        (FieldKernel::Exact, Dim::Three) => greens::phi_3d(r, k),
        (FieldKernel::Truncated(n), Dim::Two) => greens::truncated_phi_2d(r, k, n),
        (FieldKernel::Truncated(_), Dim::Three) => Err(Error::Config(
            "truncated kernel is defined for 2D only".into(),
        )),
    }
}

/// Dense quadrature matrix B with B[i][j] = -Phi(|x_i - y_j|, k) sqrt(mu(y_j)),
/// so that u = B * increments.
pub struct QuadratureMatrix {
    entries: Vec<Complex64>,
    receivers: usize,
    nodes: usize,
    pub k: f64,
}

impl QuadratureMatrix {
    pub fn assemble(
        receivers: &ReceiverSet,
        k: f64,
        field: &StrengthField,
        grid: &Grid,
        kernel: FieldKernel,
    ) -> Result<QuadratureMatrix> {
        if k <= 0.0 || !k.is_finite() {
            return Err(Error::Domain(format!("wavenumber k = {k}")));
        }
        if receivers.dim() != grid.dim() {
            return Err(Error::Config("receiver/grid dimension mismatch".into()));
        }
        receivers.validate_outside(grid)?;
        let d = grid.dim().value();
        let nodes = grid.num_nodes();
        let mut entries = Vec::with_capacity(receivers.len() * nodes);
        let roots: Vec<f64> = (0..nodes)
            .map(|j| field.evaluate(&grid.node(j)[..d]).sqrt())
            .collect();
        for i in 0..receivers.len() {
            let x = receivers.point(i);
            for j in 0..nodes {
                let r = distance(x, &grid.node(j)[..d]);
                entries.push(-kernel_value(kernel, grid.dim(), r, k)? * roots[j]);
            }
        }
        Ok(QuadratureMatrix {
            entries,
            receivers: receivers.len(),
            nodes,
            k,
        })
    }

    /// u_i = sum_j B[i][j] * dW_j.
    pub fn apply(&self, increments: &[f64]) -> Result<Vec<Complex64>> {
        if increments.len() != self.nodes {
            return Err(Error::Config(format!(
                "increment array length {} for {} quadrature nodes",
                increments.len(),
                self.nodes
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.receivers];
        for i in 0..self.receivers {
            let row = &self.entries[i * self.nodes..(i + 1) * self.nodes];
            let mut acc = Complex64::new(0.0, 0.0);
            for (b, &w) in row.iter().zip(increments.iter()) {
                acc += b * w;
            }
            out[i] = acc;
        }
        Ok(out)
    }
}

fn forward_field(
    receivers: &ReceiverSet,
    k: f64,
    noise: &NoiseRealization,
    field: &StrengthField,
    grid: &Grid,
    kernel: FieldKernel,
) -> Result<Vec<Complex64>> {
    let matrix = QuadratureMatrix::assemble(receivers, k, field, grid, kernel)?;
    matrix.apply(&noise.increments)
}

/// 2D wave field u(x_i; k) by Ito quadrature of the stochastic integral:
/// u_num = -sum_j Phi_2d(|x_i - y_j|, k) sqrt(mu(y_j)) dW_j.
pub fn forward_field_2d(
    receivers: &ReceiverSet,
    k: f64,
    noise: &NoiseRealization,
    field: &StrengthField,
    grid: &Grid,
) -> Result<Vec<Complex64>> {
    if grid.dim() != Dim::Two {
        return Err(Error::Config("forward_field_2d needs a 2D grid".into()));
    }
    forward_field(receivers, k, noise, field, grid, FieldKernel::Exact)
}

/// 3D counterpart with the exponential-sum kernel.
pub fn forward_field_3d(
    receivers: &ReceiverSet,
    k: f64,
    noise: &NoiseRealization,
    field: &StrengthField,
    grid: &Grid,
) -> Result<Vec<Complex64>> {
    if grid.dim() != Dim::Three {
        return Err(Error::Config("forward_field_3d needs a 3D grid".into()));
    }
    forward_field(receivers, k, noise, field, grid, FieldKernel::Exact)
}

/// 2D field computed with the order-3 truncation of the Hankel expansion.
pub fn truncated_field_2d(
    receivers: &ReceiverSet,
    k: f64,
    noise: &NoiseRealization,
    field: &StrengthField,
    grid: &Grid,
) -> Result<Vec<Complex64>> {
    if grid.dim() != Dim::Two {
        return Err(Error::Config("truncated_field_2d needs a 2D grid".into()));
    }
    forward_field(receivers, k, noise, field, grid, FieldKernel::Truncated(3))
}

/// Complex wave samples indexed by (receiver, path, frequency).
#[derive(Debug, Clone)]
pub struct WaveSampleSet {
    pub values: Vec<Complex64>,
    pub receivers: usize,
    pub paths: usize,
    pub frequencies: Vec<f64>,
    pub seed: u64,
}

impl WaveSampleSet {
    pub fn index(&self, receiver: usize, path: usize, freq: usize) -> usize {
        (receiver * self.paths + path) * self.frequencies.len() + freq
    }

    pub fn value(&self, receiver: usize, path: usize, freq: usize) -> Complex64 {
        self.values[self.index(receiver, path, freq)]
    }

    /// CSV export with header `receiver_idx,path,k,re_u,im_u`.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "receiver_idx,path,k,re_u,im_u")?;
        for i in 0..self.receivers {
            for p in 0..self.paths {
                for (f, &k) in self.frequencies.iter().enumerate() {
                    let v = self.value(i, p, f);
                    writeln!(out, "{i},{p},{k},{},{}", v.re, v.im)?;
                }
            }
        }
        Ok(())
    }
}

/// Batch the forward solve over paths and frequencies. Within one path the
/// same noise realization is reused across every frequency; this is the
/// single-realization structure the ergodic estimators rely on.
pub fn sweep(
    receivers: &ReceiverSet,
    frequencies: &[f64],
    field: &StrengthField,
    grid: &Grid,
    paths: usize,
    seed: u64,
) -> Result<WaveSampleSet> {
    sweep_with(receivers, frequencies, field, grid, paths, seed, FieldKernel::Exact)
}

/// As `sweep`, with an explicit kernel choice (used for the truncated 2D
/// field).
pub fn sweep_with(
    receivers: &ReceiverSet,
    frequencies: &[f64],
    field: &StrengthField,
    grid: &Grid,
    paths: usize,
    seed: u64,
    kernel: FieldKernel,
) -> Result<WaveSampleSet> {
    if paths == 0 {
        return Err(Error::Config("sweep: path count must be at least 1".into()));
    }
    if frequencies.is_empty() {
        return Err(Error::Config("sweep: empty frequency list".into()));
    }
    if frequencies.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("sweep: frequencies must be strictly increasing".into()));
    }
    let nf = frequencies.len();
    let mut samples = WaveSampleSet {
        values: vec![Complex64::new(0.0, 0.0); receivers.len() * paths * nf],
        receivers: receivers.len(),
        paths,
        frequencies: frequencies.to_vec(),
        seed,
    };
    for (fi, &k) in frequencies.iter().enumerate() {
        let matrix = QuadratureMatrix::assemble(receivers, k, field, grid, kernel)?;
        for p in 0..paths {
            // regeneration is deterministic per (seed, path), so every
            // frequency sees the identical increment array
            let noise = sample_white_noise(grid, seed, p as u64);
            let u = matrix.apply(&noise.increments)?;
            for (i, &v) in u.iter().enumerate() {
                let idx = samples.index(i, p, fi);
                samples.values[idx] = v;
            }
        }
    }
    Ok(samples)
}
