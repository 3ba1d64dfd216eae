//! 16-bit binary PGM (P5) heatmaps of nodal values on a 2D grid.

use std::io::Write;
use std::path::Path;

use biharm::error::{Error, Result};
use biharm::randsrc::Grid;

/// Min-max normalized per file; the scale lives in the header comment so the
/// image stays invertible. Rows run top-to-bottom in decreasing y2.
pub fn write_heatmap(path: &Path, grid: &Grid, values: &[f64]) -> Result<()> {
    let counts = grid.counts();
    let (w, h) = (counts[0], counts[1]);
    if values.len() != grid.num_nodes() {
        return Err(Error::Config("heatmap: value count does not match grid".into()));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config("heatmap: non-finite values".into()));
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "P5")?;
    writeln!(out, "# scale min={lo} max={hi}")?;
    writeln!(out, "{w} {h}")?;
    writeln!(out, "65535")?;
    for row in 0..h {
        let i2 = h - 1 - row;
        for i1 in 0..w {
            // node index is row-major with the last axis fastest
            let v = values[i1 * h + i2];
            let g = ((v - lo) / span * 65535.0).round() as u16;
            out.write_all(&g.to_be_bytes())?;
        }
    }
    Ok(())
}
