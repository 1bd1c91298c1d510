use crate::error::{Error, Result};

/// Tolerance for row, column and total mass checks.
pub const MASS_TOL: f64 = 1e-12;

/// Checkerboard copula: uniform law inside each cell of an `m x m` grid.
///
/// `mass(i, j)` is the probability of the cell `[i/m, (i+1)/m) x [j/m, (j+1)/m)`,
/// so the first index runs along `u` and the second along `v`. Every row and
/// column of the mass matrix sums to `1/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkerboard {
    m: usize,
    masses: Vec<f64>,
    // col_cum[i * (m + 1) + j] = sum of mass(i, j') for j' < j
    col_cum: Vec<f64>,
    // row_cum[j * (m + 1) + i] = sum of mass(i', j) for i' < i
    row_cum: Vec<f64>,
    // corners[i * (m + 1) + j] = C(i/m, j/m)
    corners: Vec<f64>,
    // running total of masses in row-major order, for sampling
    cumulative: Vec<f64>,
}

impl Checkerboard {
    /// Builds a checkerboard from row-major masses (`masses[i * m + j]`).
    pub fn new(m: usize, masses: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("checkerboard size", "m must be at least 1"));
        }
        if masses.len() != m * m {
            return Err(Error::invalid(
                "checkerboard shape",
                format!("expected {} masses, got {}", m * m, masses.len()),
            ));
        }
        let mut masses = masses;
        for (k, w) in masses.iter_mut().enumerate() {
            if !w.is_finite() || *w < -MASS_TOL {
                return Err(Error::invalid(
                    "nonnegative masses",
                    format!("mass ({}, {}) = {}", k / m, k % m, w),
                ));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let target = 1.0 / m as f64;
        for i in 0..m {
            let row: f64 = masses[i * m..(i + 1) * m].iter().sum();
            if (row - target).abs() > MASS_TOL {
                return Err(Error::invalid(
                    "uniform margins",
                    format!("masses along u-index {i} sum to {row}, expected {target}"),
                ));
            }
            let col: f64 = (0..m).map(|k| masses[k * m + i]).sum();
            if (col - target).abs() > MASS_TOL {
                return Err(Error::invalid(
                    "uniform margins",
                    format!("masses along v-index {i} sum to {col}, expected {target}"),
                ));
            }
        }

        let stride = m + 1;
        let mut col_cum = vec![0.0; m * stride];
        let mut row_cum = vec![0.0; m * stride];
        for i in 0..m {
            for j in 0..m {
                col_cum[i * stride + j + 1] = col_cum[i * stride + j] + masses[i * m + j];
                row_cum[j * stride + i + 1] = row_cum[j * stride + i] + masses[i * m + j];
            }
        }
        let mut corners = vec![0.0; stride * stride];
        for i in 0..m {
            for j in 0..=m {
                corners[(i + 1) * stride + j] = corners[i * stride + j] + col_cum[i * stride + j];
            }
        }
        let mut acc = 0.0;
        let cumulative = masses
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();

        Ok(Checkerboard {
            m,
            masses,
            col_cum,
            row_cum,
            corners,
            cumulative,
        })
    }

    /// Builds a checkerboard from `m` rows of `m` masses; row `i` holds `mass(i, .)`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::invalid(
                "checkerboard shape",
                "mass matrix must be square",
            ));
        }
        Checkerboard::new(m, rows.iter().flatten().copied().collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.masses[i * self.m + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.masses.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// Mass of cells `(i, j')` with `j' < j`.
    pub(crate) fn col_cum(&self, i: usize, j: usize) -> f64 {
        self.col_cum[i * (self.m + 1) + j]
    }

    /// Mass of cells `(i', j)` with `i' < i`.
    pub(crate) fn row_cum(&self, j: usize, i: usize) -> f64 {
        self.row_cum[j * (self.m + 1) + i]
    }

    /// `C(i/m, j/m)`.
    pub fn corner(&self, i: usize, j: usize) -> f64 {
        self.corners[i * (self.m + 1) + j]
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let scaled = t * self.m as f64;
        let k = (scaled.floor() as usize).min(self.m - 1);
        (k, scaled - k as f64)
    }

    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let (i, a) = self.locate(u);
        let (j, b) = self.locate(v);
        self.corner(i, j)
            + a * self.col_cum(i, j)
            + b * self.row_cum(j, i)
            + a * b * self.mass(i, j)
    }

    pub fn partial1(&self, u: f64, v: f64) -> f64 {
        let (i, _) = self.locate(u);
        let (j, b) = self.locate(v);
        self.m as f64 * (self.col_cum(i, j) + b * self.mass(i, j))
    }

    /// `∫_s^1 ∂₁C(u, v) dv`.
    pub fn upper_partial_integral(&self, u: f64, s: f64) -> f64 {
        let (i, _) = self.locate(u);
        let (j0, b0) = self.locate(s);
        let partial = self.col_cum(i, j0) * (1.0 - b0) + self.mass(i, j0) * (1.0 - b0 * b0) / 2.0;
        let full: f64 = (j0 + 1..self.m)
            .map(|j| self.col_cum(i, j) + self.mass(i, j) / 2.0)
            .sum();
        partial + full
    }

    /// `∫∫ (∂₁C)²`, integrated cell by cell.
    pub fn norm_partial1_sq(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                let c = self.col_cum(i, j);
                let w = self.mass(i, j);
                total += c * c + c * w + w * w / 3.0;
            }
        }
        total
    }

    /// Cell edges `k/m`.
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.m).map(|k| k as f64 / self.m as f64).collect()
    }

    /// Cell containing the probability level `p` in row-major order.
    pub(crate) fn cell_at(&self, p: f64) -> (usize, usize) {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let target = p * total;
        let mut k = self.cumulative.partition_point(|&c| c <= target);
        if k >= self.masses.len() {
            k = self.masses.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        }
        (k / self.m, k % self.m)
    }
}
