//! Monotone flux-form discretisation of `u ↦ ρ⁻¹ div(ρ G ∇u)`.
//!
//! At each cell the index-space tensor `D = H⁻¹ ρ G H⁻¹` (with
//! `H = diag(Δx, Δy)`) is split by Selling's formula into non-negative weights
//! on at most three lattice offsets. Edge weights are symmetric averages of the
//! two adjacent cells' weights, so the operator conserves `Σ ρ u` exactly and
//! every off-diagonal coefficient is non-negative.

use crate::error::{Error, Result};
use crate::geometry::{CoefficientField, SeparableTensor};
use crate::linalg::{Point, Sym2};
use crate::par;

use super::grid::Grid;

pub(crate) type Offset = [i32; 2];

/// Selling decomposition `D = Σ λ_k e_k e_kᵀ` of a positive definite tensor,
/// with `λ_k ≥ 0` and offsets `e_k` in canonical sign (first non-zero entry
/// positive).
pub fn selling_decomposition(d: Sym2) -> Result<[(Offset, f64); 3]> {
    selling_from(d, DEFAULT_SUPERBASE).map(|(_, parts)| parts)
}

const DEFAULT_SUPERBASE: [Offset; 3] = [[1, 0], [0, 1], [-1, -1]];

/// Selling's algorithm started from an arbitrary superbase; returns the
/// obtuse superbase it reached together with the decomposition.
fn selling_from(d: Sym2, start: [Offset; 3]) -> Result<([Offset; 3], [(Offset, f64); 3])> {
    if !(d.a11 > 0.0 && d.det() > 0.0 && d.is_finite()) {
        return Err(Error::NotPositiveDefinite { a11: d.a11, a12: d.a12, a22: d.a22 });
    }
    let ip = |u: Offset, v: Offset| d.bilinear([u[0] as f64, u[1] as f64], [v[0] as f64, v[1] as f64]);
    let mut b = start;
    // Each flip strictly lowers Σ|e_k|²_D, so this terminates; the cap only
    // guards against rounding ties.
    for _ in 0..200 {
        let pair = [(0, 1), (0, 2), (1, 2)].into_iter().find(|&(i, j)| ip(b[i], b[j]) > 0.0);
        let Some((i, j)) = pair else { break };
        let k = 3 - i - j;
        let (ei, ej) = (b[i], b[j]);
        b[i] = [-ei[0], -ei[1]];
        b[k] = [ei[0] - ej[0], ei[1] - ej[1]];
    }
    let mut out = [([0, 0], 0.0); 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let lambda = (-ip(b[j], b[k])).max(0.0);
        out[i] = (canonical([-b[i][1], b[i][0]]), lambda);
    }
    Ok((b, out))
}

fn canonical(e: Offset) -> Offset {
    if e[0] < 0 || (e[0] == 0 && e[1] < 0) {
        [-e[0], -e[1]]
    } else {
        e
    }
}

/// Where the diffusion tensor comes from.
enum Source<'a> {
    /// `a(t, x) = Σ φ_k(t) A_k(x)` with the `A_k` tabulated per cell.
    Separable { schedules: SeparableTensor<'a>, fields: Vec<Vec<Sym2>> },
    /// Pointwise evaluation of the coefficient field at every cell.
    Pointwise(&'a dyn CoefficientField),
}

/// Offsets a cell may use before its edge set is reset.
const MAX_KNOWN: usize = 8;

#[derive(Debug, Clone, Copy)]
struct CellSplit {
    /// Obtuse superbase from the last assembly; the next one starts here,
    /// since it rarely changes between time steps.
    base: [Offset; 3],
    parts: [(Offset, f64); 3],
    /// Tensor the split was computed for; an identical tensor is not split
    /// again.
    tensor: Sym2,
    /// Every offset this cell has used since its edges were last laid out.
    /// Edges for offsets no longer in use keep weight zero.
    known: [Offset; MAX_KNOWN],
    known_len: usize,
}

impl CellSplit {
    fn known(&self) -> &[Offset] {
        &self.known[..self.known_len]
    }

    /// Records the offsets of the current split; returns whether the edge
    /// layout has to change.
    fn absorb(&mut self) -> bool {
        let mut changed = false;
        for (e, l) in self.parts {
            if l > 0.0 && !self.known().contains(&e) {
                changed = true;
                if self.known_len == MAX_KNOWN {
                    self.known_len = 0;
                    for (e, l) in self.parts {
                        if l > 0.0 {
                            self.known[self.known_len] = e;
                            self.known_len += 1;
                        }
                    }
                    return true;
                }
                self.known[self.known_len] = e;
                self.known_len += 1;
            }
        }
        changed
    }

    /// Weight of each known offset under the current split.
    fn known_weights(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (e, l) in self.parts {
            if l > 0.0 {
                let k = self.known().iter().position(|&o| o == e).expect("offset recorded by absorb");
                out[k] = l;
            }
        }
    }
}

const NO_SOURCE: u32 = u32::MAX;

/// Assembles and applies the discrete operator on a fixed grid.
///
/// The operator is stored as compressed rows: row `x` lists each neighbour
/// `y` once, with the symmetric edge weight `w(x, y)`. The row structure only
/// depends on which offsets carry positive weight, so it is rebuilt only when
/// that pattern changes; otherwise assembly just refreshes the weights.
pub(crate) struct Operator<'a> {
    grid: Grid,
    density: &'a [f64],
    source: Source<'a>,
    cells: Vec<CellSplit>,
    structure_valid: bool,
    row_start: Vec<usize>,
    row_len: Vec<usize>,
    cols: Vec<u32>,
    /// The (at most two) known offsets whose weights make up each entry, as
    /// `cell · MAX_KNOWN + k`.
    sources: Vec<[u32; 2]>,
    /// Flat `cell · MAX_KNOWN + k` table of known-offset weights.
    lam: Vec<f64>,
    weights: Vec<f64>,
    /// `max_x Σ_y w(x, y) / ρ_x` of the current assembly.
    pub max_rate: f64,
}

impl<'a> Operator<'a> {
    pub fn new(grid: Grid, density: &'a [f64], coeffs: &'a dyn CoefficientField) -> Self {
        let source = match coeffs.separable_diffusion() {
            Some(schedules) => {
                let fields = (0..schedules.len()).map(|k| grid.sample_sym(|x| schedules.field(k, x))).collect();
                Source::Separable { schedules, fields }
            }
            None => Source::Pointwise(coeffs),
        };
        let n = grid.len();
        Operator {
            grid,
            density,
            source,
            cells: vec![
                CellSplit {
                    base: DEFAULT_SUPERBASE,
                    parts: [([0, 0], 0.0); 3],
                    tensor: Sym2::ZERO,
                    known: [[0, 0]; MAX_KNOWN],
                    known_len: 0,
                };
                n
            ],
            structure_valid: false,
            row_start: vec![0; n + 1],
            row_len: vec![0; n],
            cols: Vec::new(),
            sources: Vec::new(),
            lam: vec![0.0; n * MAX_KNOWN],
            weights: Vec::new(),
            max_rate: 0.0,
        }
    }

    /// Largest eigenvalue of `a` over all cells and the given times.
    pub fn max_eigenvalue(&self, times: &[f64]) -> Result<f64> {
        let n = self.grid.len();
        let per_time = |t: f64| -> Result<f64> {
            let vals = match &self.source {
                Source::Separable { schedules, fields } => {
                    let phi: Vec<f64> = (0..fields.len()).map(|k| schedules.schedule(k, t)).collect();
                    par::map_indexed(n, |c| {
                        let a = fields.iter().zip(&phi).fold(Sym2::ZERO, |acc, (f, p)| acc + f[c].scale(*p));
                        Ok(a.eigenvalues().1)
                    })
                }
                Source::Pointwise(coeffs) => par::map_indexed(n, |c| {
                    let x = self.grid.center(c % self.grid.nx, c / self.grid.nx);
                    coeffs.diffusion(t, x).map(|a| a.max_eigenvalue())
                }),
            };
            vals.into_iter().try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
        };
        times.iter().try_fold(0.0f64, |m, &t| per_time(t).map(|v| m.max(v)))
    }

    /// Neighbour of cell `(i, j)` at lattice offset `e`, if inside the grid.
    fn neighbour(&self, i: usize, j: usize, e: Offset) -> Option<usize> {
        let (nx, ny) = (self.grid.nx as i64, self.grid.ny as i64);
        let (a, b) = (i as i64 + e[0] as i64, j as i64 + e[1] as i64);
        (a >= 0 && a < nx && b >= 0 && b < ny).then(|| (b * nx + a) as usize)
    }

    /// Visits `(k·2 + s, y)` for every known offset `e_k` of cell `x` and
    /// sign `s` whose neighbour `y = x ± e_k` is inside the grid.
    fn for_each_edge(&self, x: usize, mut f: impl FnMut(usize, usize)) {
        let nx = self.grid.nx;
        let (i, j) = (x % nx, x / nx);
        for (k, &e) in self.cells[x].known().iter().enumerate() {
            for (s, e) in [e, [-e[0], -e[1]]].into_iter().enumerate() {
                if let Some(y) = self.neighbour(i, j, e) {
                    f(2 * k + s, y);
                }
            }
        }
    }

    /// Records the offsets used at the given times, so that later assemblies
    /// over that time range seldom need to lay out new edges.
    pub fn prime(&mut self, times: &[f64]) -> Result<()> {
        for &t in times {
            self.split(&[(t, 1.0)])?;
        }
        Ok(())
    }

    /// Assembles the operator for the tensor `Σ_q w_q a(t_q, ·)`.
    pub fn assemble(&mut self, samples: &[(f64, f64)]) -> Result<()> {
        if self.split(samples)? || !self.structure_valid {
            self.rebuild_structure();
        }
        self.refresh_weights();
        Ok(())
    }

    /// Selling split of every cell; returns whether any cell met a new offset.
    fn split(&mut self, samples: &[(f64, f64)]) -> Result<bool> {
        let grid = self.grid;
        let nx = grid.nx;
        let (hx2, hy2, hxy) = (grid.dx() * grid.dx(), grid.dy() * grid.dy(), grid.dx() * grid.dy());
        let density = self.density;
        let to_index = |a: Sym2, rho: f64| {
            // D = H⁻¹ (ρ a / 2) H⁻¹
            let s = 0.5 * rho;
            Sym2::new(s * a.a11 / hx2, s * a.a12 / hxy, s * a.a22 / hy2)
        };
        let coef: Vec<f64> = match &self.source {
            Source::Separable { schedules, fields } => (0..fields.len())
                .map(|k| samples.iter().map(|&(t, w)| w * schedules.schedule(k, t)).sum())
                .collect(),
            Source::Pointwise(_) => Vec::new(),
        };
        let source = &self.source;
        let tensor = |c: usize| -> Result<Sym2> {
            match source {
                Source::Separable { fields, .. } => {
                    Ok(fields.iter().zip(&coef).fold(Sym2::ZERO, |acc, (f, p)| acc + f[c].scale(*p)))
                }
                Source::Pointwise(coeffs) => {
                    let x: Point = grid.center(c % nx, c / nx);
                    let mut a = Sym2::ZERO;
                    for &(t, w) in samples {
                        a = a + coeffs.diffusion(t, x)?.sym().scale(w);
                    }
                    Ok(a)
                }
            }
        };
        let changed = par::try_map_rows(&mut self.cells, nx, |j, row| -> Result<bool> {
            let mut changed = false;
            for (i, cell) in row.iter_mut().enumerate() {
                let c = j * nx + i;
                let d = to_index(tensor(c)?, density[c]);
                if d != cell.tensor {
                    (cell.base, cell.parts) = selling_from(d, cell.base)?;
                    cell.tensor = d;
                    changed |= cell.absorb();
                }
            }
            Ok(changed)
        })?;
        Ok(changed.into_iter().any(|c| c))
    }

    fn refresh_weights(&mut self) {
        let density = self.density;
        let nx = self.grid.nx;
        let cells = &self.cells;
        par::for_each_row(&mut self.lam, MAX_KNOWN * nx, |j, row| {
            for (i, out) in row.chunks_mut(MAX_KNOWN).enumerate() {
                cells[j * nx + i].known_weights(out);
            }
        });
        let (lam, sources, row_start, row_len) = (&self.lam, &self.sources, &self.row_start, &self.row_len);
        let lam = |s: u32| if s == NO_SOURCE { 0.0 } else { lam[s as usize] };
        // One part per grid row; rows of the matrix are contiguous within it.
        let mut parts = Vec::with_capacity(self.grid.ny);
        let mut rest = &mut self.weights[..];
        for j in 0..self.grid.ny {
            let len = row_start[(j + 1) * nx] - row_start[j * nx];
            let (part, tail) = rest.split_at_mut(len);
            parts.push(part);
            rest = tail;
        }
        // w(x, y) = ½(λ_x(e) + λ_y(e)); the row of y sums the same two terms.
        let rates = par::map_parts(parts, |j, part| {
            let base = row_start[j * nx];
            let mut max_rate = 0.0f64;
            for x in j * nx..(j + 1) * nx {
                let s = row_start[x];
                let mut sum = 0.0;
                for e in s..s + row_len[x] {
                    let [a, b] = sources[e];
                    let w = 0.5 * (lam(a) + lam(b));
                    part[e - base] = w;
                    sum += w;
                }
                max_rate = max_rate.max(sum / density[x]);
            }
            max_rate
        });
        self.max_rate = rates.into_iter().fold(0.0, f64::max);
    }

    fn rebuild_structure(&mut self) {
        let n = self.grid.len();
        let mut degree = vec![0usize; n];
        for x in 0..n {
            self.for_each_edge(x, |_, y| {
                degree[x] += 1;
                degree[y] += 1;
            });
        }
        self.row_start[0] = 0;
        for x in 0..n {
            self.row_start[x + 1] = self.row_start[x] + degree[x];
        }
        // Raw entries (neighbour, source), duplicates included.
        let mut raw = vec![(0u32, NO_SOURCE); self.row_start[n]];
        let mut cursor = self.row_start[..n].to_vec();
        for x in 0..n {
            self.for_each_edge(x, |q, y| {
                let src = (x * MAX_KNOWN + q / 2) as u32;
                raw[cursor[x]] = (y as u32, src);
                cursor[x] += 1;
                raw[cursor[y]] = (x as u32, src);
                cursor[y] += 1;
            });
        }
        let mut cols = vec![0u32; raw.len()];
        let mut sources = vec![[NO_SOURCE; 2]; raw.len()];
        for x in 0..n {
            let (s, e) = (self.row_start[x], self.row_start[x + 1]);
            let row = &mut raw[s..e];
            row.sort_unstable();
            let mut len = 0;
            for k in 0..row.len() {
                let (y, src) = row[k];
                if len > 0 && cols[s + len - 1] == y {
                    sources[s + len - 1][1] = src;
                } else {
                    cols[s + len] = y;
                    sources[s + len] = [src, NO_SOURCE];
                    len += 1;
                }
            }
            self.row_len[x] = len;
        }
        self.weights = vec![0.0; cols.len()];
        self.cols = cols;
        self.sources = sources;
        self.structure_valid = true;
    }

    /// `out = base + c · ρ⁻¹ div(ρ G ∇u)` (with `base` omitted when `None`).
    pub fn apply(&self, u: &[f64], c: f64, base: Option<&[f64]>, out: &mut [f64]) {
        let nx = self.grid.nx;
        let (row_start, row_len, cols, weights) = (&self.row_start, &self.row_len, &self.cols, &self.weights);
        let density = self.density;
        par::for_each_row(out, nx, |j, row| {
            for (i, o) in row.iter_mut().enumerate() {
                let x = j * nx + i;
                let ux = u[x];
                let s = row_start[x];
                let mut acc = 0.0;
                for k in s..s + row_len[x] {
                    acc += weights[k] * (u[cols[k] as usize] - ux);
                }
                let b = base.map_or(0.0, |b| b[x]);
                *o = b + c * acc / density[x];
            }
        });
    }

    /// Distinct lattice offsets carrying positive weight.
    #[cfg(test)]
    pub fn offsets(&self) -> Vec<Offset> {
        let mut out: Vec<Offset> = Vec::new();
        for cell in &self.cells {
            for &(e, l) in &cell.parts {
                if l > 0.0 && !out.contains(&e) {
                    out.push(e);
                }
            }
        }
        out.sort();
        out
    }
}

impl Grid {
    pub(crate) fn sample_sym(&self, f: impl Fn(Point) -> Sym2 + Sync + Send) -> Vec<Sym2> {
        par::map_indexed(self.len(), |c| f(self.center(c % self.nx, c / self.nx)))
    }
}
