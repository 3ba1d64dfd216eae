//! Source-side randomness: grids, strength fields, white-noise increments,
//! spectrally sampled fractional Gaussian fields, and the leading kernel
//! constants of the covariance operator.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::specfun::gamma;
use crate::Dim;

// ---------------------------------------------------------------------------
// Grid

/// Uniform rectangular lattice. Nodes are indexed row-major with the last
/// axis varying fastest; node j also labels the quadrature cell
/// I_j = [y_j, y_j + spacing] on each axis, of constant area
/// `cell_area = prod(spacing)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    origin: [f64; 3],
    spacing: [f64; 3],
    counts: [usize; 3],
    dim: Dim,
}

impl Grid {
    pub fn new(origin: &[f64], spacing: &[f64], counts: &[usize], dim: Dim) -> Result<Grid> {
        let d = dim.value();
        if origin.len() != d || spacing.len() != d || counts.len() != d {
            return Err(Error::Config("grid: axis list lengths must equal dim".into()));
        }
        if spacing.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Config("grid: spacing must be positive".into()));
        }
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::Config("grid: counts must be at least 2".into()));
        }
        let mut g = Grid {
            origin: [0.0; 3],
            spacing: [1.0; 3],
            counts: [1; 3],
            dim,
        };
        g.origin[..d].copy_from_slice(origin);
        g.spacing[..d].copy_from_slice(spacing);
        g.counts[..d].copy_from_slice(counts);
        Ok(g)
    }

    /// 2D grid with `intervals + 1` nodes per axis covering [lo, hi]^2.
    pub fn square(lo: f64, hi: f64, intervals: usize) -> Result<Grid> {
        let h = (hi - lo) / intervals as f64;
        Grid::new(&[lo, lo], &[h, h], &[intervals + 1, intervals + 1], Dim::Two)
    }

    /// 3D grid with `intervals + 1` nodes per axis covering [lo, hi]^3.
    pub fn cube(lo: f64, hi: f64, intervals: usize) -> Result<Grid> {
        let h = (hi - lo) / intervals as f64;
        Grid::new(
            &[lo, lo, lo],
            &[h, h, h],
            &[intervals + 1; 3],
            Dim::Three,
        )
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim.value()]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim.value()]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim.value()]
    }

    pub fn num_nodes(&self) -> usize {
        self.counts().iter().product()
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let d = self.dim.value();
        let mut out = [0usize; 3];
        for axis in (0..d).rev() {
            out[axis] = idx % self.counts[axis];
            idx /= self.counts[axis];
        }
        out
    }

    pub fn node(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut p = [0.0; 3];
        for axis in 0..self.dim.value() {
            p[axis] = self.origin[axis] + mi[axis] as f64 * self.spacing[axis];
        }
        p
    }

    /// Axis-aligned bounding box of the nodes.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut hi = [0.0; 3];
        for axis in 0..self.dim.value() {
            hi[axis] = self.origin[axis] + (self.counts[axis] - 1) as f64 * self.spacing[axis];
        }
        (self.origin, hi)
    }
}

// ---------------------------------------------------------------------------
// Strength fields

/// Definition of the strength mu.
#[derive(Debug, Clone)]
pub enum StrengthDef {
    /// 4 e^{-4 |y|^2} in any dimension.
    Example1,
    /// mu~(3 y1, 3 y2), a three-bump profile with negative lobes.
    Example2,
    /// Values on a grid, bilinearly interpolated; zero outside the grid.
    Tabulated { grid: Grid, values: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct StrengthField {
    def: StrengthDef,
    clamp: bool,
}

fn example2_tilde(y1: f64, y2: f64) -> f64 {
    0.3 * (1.0 - y1).powi(2) * (-y1 * y1 - (y2 + 1.0).powi(2)).exp()
        - (0.2 * y1 - y1.powi(3) - y2.powi(5)) * (-y1 * y1 - y2 * y2).exp()
        - 0.03 * (-(y1 + 1.0).powi(2) - y2 * y2).exp()
}

impl StrengthField {
    pub fn example1() -> StrengthField {
        StrengthField {
            def: StrengthDef::Example1,
            clamp: true,
        }
    }

    pub fn example2() -> StrengthField {
        StrengthField {
            def: StrengthDef::Example2,
            clamp: true,
        }
    }

    pub fn zero() -> StrengthField {
        StrengthField {
            def: StrengthDef::Tabulated {
                grid: Grid::square(-1.0, 1.0, 1).unwrap(),
                values: vec![0.0; 4],
            },
            clamp: true,
        }
    }

    pub fn tabulated(grid: Grid, values: Vec<f64>) -> Result<StrengthField> {
        if values.len() != grid.num_nodes() {
            return Err(Error::Config(format!(
                "tabulated field: {} values for {} nodes",
                values.len(),
                grid.num_nodes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("tabulated field: non-finite value".into()));
        }
        Ok(StrengthField {
            def: StrengthDef::Tabulated { grid, values },
            clamp: true,
        })
    }

    pub fn with_clamp(mut self, clamp: bool) -> StrengthField {
        self.clamp = clamp;
        self
    }

    /// Evaluate mu(y); with the clamp policy on, the result is never
    /// negative.
    pub fn evaluate(&self, y: &[f64]) -> f64 {
        let raw = match &self.def {
            StrengthDef::Example1 => {
                let r2: f64 = y.iter().map(|c| c * c).sum();
                4.0 * (-4.0 * r2).exp()
            }
            StrengthDef::Example2 => example2_tilde(3.0 * y[0], 3.0 * y[1]),
            StrengthDef::Tabulated { grid, values } => interpolate(grid, values, y),
        };
        if self.clamp {
            raw.max(0.0)
        } else {
            raw
        }
    }

    /// Node samples over a grid, in node order.
    pub fn sample_on(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.num_nodes())
            .map(|j| self.evaluate(&grid.node(j)[..grid.dim().value()]))
            .collect()
    }

    /// Load a tabulated 2D field from CSV with header `j1,j2,y1,y2,mu`,
    /// row-major over the grid.
    pub fn from_csv(path: &Path) -> Result<StrengthField> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut rows: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                if line.trim() != "j1,j2,y1,y2,mu" {
                    return Err(Error::Parse(format!(
                        "strength CSV: unexpected header {line:?}"
                    )));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("strength CSV line {}: {line:?}", lineno + 1)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            rows.push((
                parse(f[0])? as usize,
                parse(f[1])? as usize,
                parse(f[2])?,
                parse(f[3])?,
                parse(f[4])?,
            ));
        }
        if rows.len() < 4 {
            return Err(Error::Parse("strength CSV: too few rows".into()));
        }
        let n1 = rows.iter().map(|r| r.0).max().unwrap() + 1;
        let n2 = rows.iter().map(|r| r.1).max().unwrap() + 1;
        if rows.len() != n1 * n2 {
            return Err(Error::Parse(format!(
                "strength CSV: {} rows for a {n1}x{n2} grid",
                rows.len()
            )));
        }
        let origin = [rows[0].2, rows[0].3];
        let d1 = rows[n2].2 - origin[0];
        let d2 = rows[1].3 - origin[1];
        let grid = Grid::new(&origin, &[d1, d2], &[n1, n2], Dim::Two)?;
        let mut values = vec![0.0; n1 * n2];
        for r in &rows {
            values[r.0 * n2 + r.1] = r.4;
        }
        StrengthField::tabulated(grid, values)
    }

    /// Write node samples over `grid` in the tabulated CSV format.
    pub fn write_csv(&self, grid: &Grid, out: &mut impl Write) -> Result<()> {
        writeln!(out, "j1,j2,y1,y2,mu")?;
        for j in 0..grid.num_nodes() {
            let mi = grid.multi_index(j);
            let p = grid.node(j);
            writeln!(
                out,
                "{},{},{},{},{}",
                mi[0],
                mi[1],
                p[0],
                p[1],
                self.evaluate(&p[..2])
            )?;
        }
        Ok(())
    }
}

fn interpolate(grid: &Grid, values: &[f64], y: &[f64]) -> f64 {
    let d = grid.dim().value();
    debug_assert_eq!(d, 2, "tabulated interpolation is 2D");
    let mut frac = [0.0; 2];
    let mut base = [0usize; 2];
    for axis in 0..2 {
        let t = (y[axis] - grid.origin[axis]) / grid.spacing[axis];
        if t < 0.0 || t > (grid.counts[axis] - 1) as f64 {
            return 0.0;
        }
        let i = (t.floor() as usize).min(grid.counts[axis] - 2);
        base[axis] = i;
        frac[axis] = t - i as f64;
    }
    let n2 = grid.counts[1];
    let at = |i: usize, j: usize| values[i * n2 + j];
    let (i, j) = (base[0], base[1]);
    let (s, t) = (frac[0], frac[1]);
    at(i, j) * (1.0 - s) * (1.0 - t)
        + at(i + 1, j) * s * (1.0 - t)
        + at(i, j + 1) * (1.0 - s) * t
        + at(i + 1, j + 1) * s * t
}

// ---------------------------------------------------------------------------
// White noise

/// One sample path of white-noise increments delta_j W over the grid cells.
#[derive(Debug, Clone)]
pub struct NoiseRealization {
    pub increments: Vec<f64>,
    pub seed: u64,
    pub path_index: u64,
    cell_area: f64,
}

impl NoiseRealization {
    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }

    /// Nodal white-noise density values delta_j W / |I_j|.
    pub fn nodal_values(&self) -> Vec<f64> {
        self.increments.iter().map(|w| w / self.cell_area).collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Independent stream per (seed, path, cell); reproducible and
/// order-independent.
fn cell_normal(seed: u64, path_index: u64, cell: u64) -> f64 {
    let s = splitmix64(splitmix64(splitmix64(seed) ^ path_index) ^ cell);
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    StandardNormal.sample(&mut rng)
}

/// delta_j W = sqrt(|I_j|) xi_j with xi_j iid standard normal, deterministic
/// per (seed, path_index).
pub fn sample_white_noise(grid: &Grid, seed: u64, path_index: u64) -> NoiseRealization {
    let area = grid.cell_area();
    let root = area.sqrt();
    let increments = (0..grid.num_nodes())
        .map(|j| root * cell_normal(seed, path_index, j as u64))
        .collect();
    NoiseRealization {
        increments,
        seed,
        path_index,
        cell_area: area,
    }
}

// ---------------------------------------------------------------------------
// Fractional fields

/// Microlocally isotropic source model of order -m.
#[derive(Debug, Clone)]
pub struct FieldModel {
    pub order_m: f64,
    pub strength: StrengthField,
    pub dim: Dim,
}

impl FieldModel {
    pub fn new(order_m: f64, strength: StrengthField, dim: Dim) -> Result<FieldModel> {
        let d = dim.value() as f64;
        if !(order_m > d - 6.0 && order_m <= d) {
            return Err(Error::Config(format!(
                "field order m = {order_m} outside admissible band ({}, {}]",
                d - 6.0,
                d
            )));
        }
        Ok(FieldModel {
            order_m,
            strength,
            dim,
        })
    }
}

fn fft_axis(data: &mut [Complex64], shape: &[usize], axis: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let n = shape[axis];
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    // stride of the axis and number of 1D lines
    let stride: usize = shape[axis + 1..].iter().product();
    let lines = data.len() / n;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for line in 0..lines {
        // decompose line index into (outer, inner) around the axis
        let inner = line % stride;
        let outer = line / stride;
        let base = outer * n * stride + inner;
        for i in 0..n {
            buf[i] = data[base + i * stride];
        }
        fft.process(&mut buf);
        for i in 0..n {
            data[base + i * stride] = buf[i];
        }
    }
}

/// One realization of sqrt(mu) (-Lap)^{-m/4} W-dot on the grid nodes,
/// sampled by spectral filtering of white noise on a periodic embedding box
/// of twice the grid extent. The m = 0 case bypasses the transform and
/// returns sqrt(mu) times the nodal white-noise values bit-exactly.
pub fn sample_fractional_field(
    grid: &Grid,
    model: &FieldModel,
    seed: u64,
    path_index: u64,
) -> Result<Vec<f64>> {
    if model.dim != grid.dim() {
        return Err(Error::Config("fractional field: grid/model dim mismatch".into()));
    }
    let d = grid.dim().value();
    let m = model.order_m;

    if m == 0.0 {
        let noise = sample_white_noise(grid, seed, path_index);
        let nodal = noise.nodal_values();
        return Ok((0..grid.num_nodes())
            .map(|j| model.strength.evaluate(&grid.node(j)[..d]).sqrt() * nodal[j])
            .collect());
    }

    // periodic embedding: twice the node extent on each axis
    let shape: Vec<usize> = grid.counts().iter().map(|&c| 2 * (c - 1)).collect();
    let total: usize = shape.iter().product();
    let area = grid.cell_area();
    let inv_root_area = 1.0 / area.sqrt();
    let mut field: Vec<Complex64> = (0..total)
        .map(|j| Complex64::new(inv_root_area * cell_normal(seed, path_index, j as u64), 0.0))
        .collect();

    for axis in 0..d {
        fft_axis(&mut field, &shape, axis, false);
    }

    // multiply mode by |xi|^{-m/2}; zero mode removed
    let sides: Vec<f64> = (0..d)
        .map(|a| shape[a] as f64 * grid.spacing()[a])
        .collect();
    for idx in 0..total {
        let mut rem = idx;
        let mut xi2 = 0.0;
        for axis in (0..d).rev() {
            let i = rem % shape[axis];
            rem /= shape[axis];
            let f = if i <= shape[axis] / 2 {
                i as f64
            } else {
                i as f64 - shape[axis] as f64
            };
            let w = 2.0 * std::f64::consts::PI * f / sides[axis];
            xi2 += w * w;
        }
        if xi2 == 0.0 {
            field[idx] = Complex64::new(0.0, 0.0);
        } else {
            field[idx] *= xi2.powf(-m / 4.0);
        }
    }

    for axis in 0..d {
        fft_axis(&mut field, &shape, axis, true);
    }
    let norm = 1.0 / total as f64;

    // restrict to the grid nodes (first counts entries per axis) and apply
    // the strength
    let mut out = vec![0.0; grid.num_nodes()];
    for j in 0..grid.num_nodes() {
        let mi = grid.multi_index(j);
        let mut idx = 0;
        for axis in 0..d {
            // the last node aliases periodically onto index 0 of the box
            let i = mi[axis] % shape[axis];
            idx = idx * shape[axis] + i;
        }
        let mu = model.strength.evaluate(&grid.node(j)[..d]);
        out[j] = mu.sqrt() * field[idx].re * norm;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Kernel constants (covariance leading terms)

/// Leading-term classification of the covariance kernel by the Hurst
/// parameter H = (m-d)/2.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelCase {
    /// H a nonnegative integer: C1 |x-y|^{2H} ln|x-y|.
    LogHomogeneous { constant: f64 },
    /// H not a nonnegative integer, m > 0: C2 |x-y|^{2H}.
    PowerHomogeneous { constant: f64 },
    /// m in (-2n-2, -2n): C2 |x-y|^{2H} with delta-correction weights c_j.
    PowerWithDeltaCorrections { constant: f64, weights: Vec<f64> },
    /// m = -2n: (-Lap)^n delta(x-y).
    DeltaDerivative { laplacian_power: u32 },
}

/// Leading constant of the covariance kernel per the Hurst-parameter case
/// split. Valid for m in (d-6, d+2).
pub fn kernel_leading_constant(m: f64, dim: Dim) -> Result<KernelCase> {
    let d = dim.value() as f64;
    if !(m > d - 6.0 && m < d + 2.0) {
        return Err(Error::Domain(format!(
            "kernel constant: m = {m} outside ({}, {})",
            d - 6.0,
            d + 2.0
        )));
    }
    let h = 0.5 * (m - d);
    let tol = 1e-12;
    let is_int = |x: f64| (x - x.round()).abs() < tol;

    if h >= -tol && is_int(h) {
        let hn = h.round() as u32;
        let h_fact: f64 = (1..=hn).map(|i| i as f64).product::<f64>().max(1.0);
        let sign = if hn % 2 == 0 { -1.0 } else { 1.0 };
        let c1 = sign * 2f64.powf(-m + 1.0) * std::f64::consts::PI.powf(-d / 2.0)
            / (h_fact * gamma(m / 2.0));
        return Ok(KernelCase::LogHomogeneous { constant: c1 });
    }
    if m > 0.0 {
        let c2 = 2f64.powf(-m) * std::f64::consts::PI.powf(-d / 2.0) * gamma(-h) / gamma(m / 2.0);
        return Ok(KernelCase::PowerHomogeneous { constant: c2 });
    }
    if is_int(-m / 2.0) {
        return Ok(KernelCase::DeltaDerivative {
            laplacian_power: (-m / 2.0).round() as u32,
        });
    }
    // m in (-2n-2, -2n)
    let n = (-m / 2.0).floor() as usize;
    let c2 = 2f64.powf(-m) * std::f64::consts::PI.powf(-d / 2.0) * gamma(-h) / gamma(m / 2.0);
    if !c2.is_finite() {
        return Err(Error::Domain(format!(
            "kernel constant: Gamma pole at m = {m}, d = {d}"
        )));
    }
    let a_d = 2.0 * std::f64::consts::PI.powf(d / 2.0) / gamma(d / 2.0);
    let mut weights = vec![1.0];
    for j in 1..=n {
        let denom: f64 = (0..j).map(|i| d + 2.0 * i as f64).product();
        let j_fact: f64 = (1..=j).map(|i| i as f64).product();
        weights.push(a_d / (2f64.powi(j as i32) * j_fact * denom));
    }
    Ok(KernelCase::PowerWithDeltaCorrections {
        constant: c2,
        weights,
    })
}
