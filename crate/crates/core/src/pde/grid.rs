use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Rect, Region};
use crate::linalg::Point;
use crate::par;
use crate::quadrature::compensated_sum;

/// Smallest admissible number of cells per direction.
pub const MIN_CELLS: usize = 16;

/// Default subsamples per direction used to anti-alias indicators.
pub const INDICATOR_SUBSAMPLES: usize = 4;

/// Uniform cell-centred grid on a rectangle. Cell `(i, j)` has centre
/// `(x_min + (i + ½)Δx, y_min + (j + ½)Δy)` and flat index `j·nx + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(rect: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx < MIN_CELLS || ny < MIN_CELLS {
            return Err(Error::InvalidGrid(format!("need at least {MIN_CELLS} cells per direction, got {nx}×{ny}")));
        }
        let finite = [rect.x_min, rect.x_max, rect.y_min, rect.y_max].iter().all(|v| v.is_finite());
        if !finite || rect.width() <= 0.0 || rect.height() <= 0.0 {
            return Err(Error::InvalidGrid(format!("degenerate rectangle {rect:?}")));
        }
        Ok(Grid { rect, nx, ny })
    }

    /// `[-half_width, half_width]²` with `n × n` cells.
    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Grid::new(Rect::centered(half_width), n, n)
    }

    pub fn dx(&self) -> f64 {
        self.rect.width() / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.rect.height() / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn min_spacing(&self) -> f64 {
        self.dx().min(self.dy())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        [self.rect.x_min + (i as f64 + 0.5) * self.dx(), self.rect.y_min + (j as f64 + 0.5) * self.dy()]
    }

    /// Required distance between a disk of radius `r` and the rectangle edge
    /// for diffusivities up to `eps_max`.
    pub fn required_margin(eps_max: f64) -> f64 {
        5.0 * (2.0 * eps_max).sqrt()
    }

    /// Checks that the origin-centred disk of radius `radius` sits inside the
    /// rectangle with the margin required at `eps_max`.
    pub fn check_encloses(&self, radius: f64, eps_max: f64) -> Result<()> {
        if !radius.is_finite() {
            return Err(Error::InvalidGrid(
                "the family is not Euclidean outside any ball, so no finite rectangle can stand in for the plane".into(),
            ));
        }
        let need = Grid::required_margin(eps_max);
        let have = self.rect.margin_around_disk(radius);
        if have < need {
            return Err(Error::InvalidGrid(format!(
                "margin {have:.4} around radius {radius} is below the required {need:.4} at eps = {eps_max}"
            )));
        }
        Ok(())
    }

    /// Samples `f` at every cell centre, in flat-index order.
    pub fn sample(&self, f: impl Fn(Point) -> f64 + Sync + Send) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        par::for_each_row(&mut out, self.nx, |j, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(self.center(i, j));
            }
        });
        out
    }
}

/// Cell-centred scalar field together with the mass weights `ρ` of its cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
    density: Arc<[f64]>,
}

/// JSON sidecar describing a binary field dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub bounds: [f64; 4],
    pub dtype: String,
    pub layout: String,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>, density: Arc<[f64]>) -> Result<Self> {
        if values.len() != grid.len() || density.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values and {} weights for {} cells",
                values.len(),
                density.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("field value at cell {k} is not finite")));
        }
        if let Some(k) = density.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
            let (i, j) = (k % grid.nx, k / grid.nx);
            let c = grid.center(i, j);
            return Err(Error::NonPositiveDensity { value: density[k], x: c[0], y: c[1] });
        }
        Ok(GridField { grid, values, density })
    }

    /// Tabulates `ρ` at cell centres.
    pub fn density_of(grid: &Grid, rho: impl Fn(Point) -> f64 + Sync + Send) -> Arc<[f64]> {
        grid.sample(rho).into()
    }

    pub fn from_fn(
        grid: Grid,
        density: Arc<[f64]>,
        f: impl Fn(Point) -> f64 + Sync + Send,
    ) -> Result<Self> {
        let values = grid.sample(f);
        GridField::new(grid, values, density)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn density(&self) -> &Arc<[f64]> {
        &self.density
    }

    pub(crate) fn values_mut(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    /// Same grid and weights, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        GridField::new(self.grid, values, self.density.clone())
    }

    /// `Σ u ρ ΔxΔy`.
    pub fn mass(&self) -> f64 {
        let area = self.grid.cell_area();
        compensated_sum(self.values.iter().zip(self.density.iter()).map(|(u, r)| u * r)) * area
    }

    /// `⟨u, v⟩ = Σ u v ρ ΔxΔy`.
    pub fn inner(&self, other: &GridField) -> f64 {
        let area = self.grid.cell_area();
        compensated_sum(
            self.values.iter().zip(&other.values).zip(self.density.iter()).map(|((u, v), r)| u * v * r),
        ) * area
    }

    /// `1 − u`, the complement of an indicator inside the rectangle.
    pub fn complement(&self) -> GridField {
        GridField { grid: self.grid, values: self.values.iter().map(|u| 1.0 - u).collect(), density: self.density.clone() }
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }

    /// `‖u − v‖₂ / ‖v‖₂` with the plain cell-area inner product.
    pub fn relative_l2_diff(&self, reference: &GridField) -> f64 {
        let num = compensated_sum(self.values.iter().zip(&reference.values).map(|(a, b)| (a - b) * (a - b)));
        let den = compensated_sum(reference.values.iter().map(|b| b * b));
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    /// Bilinear interpolation between cell centres, clamped at the border.
    pub fn interpolate(&self, x: Point) -> f64 {
        let g = &self.grid;
        let fx = ((x[0] - g.rect.x_min) / g.dx() - 0.5).clamp(0.0, (g.nx - 1) as f64);
        let fy = ((x[1] - g.rect.y_min) / g.dy() - 0.5).clamp(0.0, (g.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(g.nx - 2);
        let j0 = (fy.floor() as usize).min(g.ny - 2);
        let (sx, sy) = (fx - i0 as f64, fy - j0 as f64);
        let v = |i: usize, j: usize| self.values[g.index(i, j)];
        (1.0 - sy) * ((1.0 - sx) * v(i0, j0) + sx * v(i0 + 1, j0)) + sy * ((1.0 - sx) * v(i0, j0 + 1) + sx * v(i0 + 1, j0 + 1))
    }

    pub fn header(&self) -> FieldHeader {
        let r = self.grid.rect;
        FieldHeader {
            nx: self.grid.nx,
            ny: self.grid.ny,
            bounds: [r.x_min, r.x_max, r.y_min, r.y_max],
            dtype: "float64 little-endian".into(),
            layout: "row-major, index j*nx + i".into(),
        }
    }

    /// Writes `<stem>.bin` (raw values) and `<stem>.json` (header).
    pub fn dump(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        let mut bin = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{stem}.bin")))?);
        for v in &self.values {
            bin.write_all(&v.to_le_bytes())?;
        }
        bin.flush()?;
        let header = serde_json::to_string_pretty(&self.header()).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(format!("{stem}.json")), header + "\n")
    }
}

/// Cell values equal to the fraction of a 4×4 subsample of each cell that
/// lies in `region`.
pub fn discretize_indicator(region: &Region, grid: &Grid, density: Arc<[f64]>) -> Result<GridField> {
    discretize_indicator_with(region, grid, density, INDICATOR_SUBSAMPLES)
}

/// [`discretize_indicator`] with `n × n` subsamples per cell.
pub fn discretize_indicator_with(
    region: &Region,
    grid: &Grid,
    density: Arc<[f64]>,
    n: usize,
) -> Result<GridField> {
    if n == 0 {
        return Err(Error::InvalidArgument("indicator subsampling needs at least one sample".into()));
    }
    let bb = region.bounding_box();
    if !grid.rect.contains_rect(&bb) {
        return Err(Error::InvalidRegion(format!("region bounding box {bb:?} is not inside the grid {:?}", grid.rect)));
    }
    let (dx, dy) = (grid.dx(), grid.dy());
    let inv = 1.0 / (n * n) as f64;
    let mut values = vec![0.0; grid.len()];
    par::for_each_row(&mut values, grid.nx, |j, row| {
        let y0 = grid.rect.y_min + j as f64 * dy;
        if y0 > bb.y_max || y0 + dy < bb.y_min {
            return;
        }
        for (i, v) in row.iter_mut().enumerate() {
            let x0 = grid.rect.x_min + i as f64 * dx;
            if x0 > bb.x_max || x0 + dx < bb.x_min {
                continue;
            }
            let mut hits = 0usize;
            for a in 0..n {
                for b in 0..n {
                    let p = [x0 + (a as f64 + 0.5) * dx / n as f64, y0 + (b as f64 + 0.5) * dy / n as f64];
                    hits += region.contains(p) as usize;
                }
            }
            *v = hits as f64 * inv;
        }
    });
    GridField::new(*grid, values, density)
}
