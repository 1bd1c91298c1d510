use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::checkerboard::{Checkerboard, MASS_TOL};
use super::Copula;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Increasing,
    Decreasing,
}

impl Orientation {
    pub fn sign(self) -> i8 {
        match self {
            Orientation::Increasing => 1,
            Orientation::Decreasing => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Option<Self> {
        match sign {
            1 => Some(Orientation::Increasing),
            -1 => Some(Orientation::Decreasing),
            _ => None,
        }
    }
}

/// One strip of a shuffle: the square `[x_lo, x_lo + width) x [y_lo, y_lo + width)`
/// carrying a diagonal (increasing) or anti-diagonal (decreasing) line of mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x_lo: f64,
    pub width: f64,
    pub y_lo: f64,
    pub orientation: Orientation,
}

impl Segment {
    pub fn increasing(x_lo: f64, width: f64, y_lo: f64) -> Self {
        Segment {
            x_lo,
            width,
            y_lo,
            orientation: Orientation::Increasing,
        }
    }

    pub fn x_hi(&self) -> f64 {
        self.x_lo + self.width
    }

    /// Image of `u` under the strip's linear map (valid for `u` in the strip).
    pub fn map(&self, u: f64) -> f64 {
        let t = u - self.x_lo;
        match self.orientation {
            Orientation::Increasing => self.y_lo + t,
            Orientation::Decreasing => self.y_lo + self.width - t,
        }
    }

    pub fn slope(&self) -> f64 {
        f64::from(self.orientation.sign())
    }

    /// Lebesgue measure of `{t in strip : t <= u, S(t) <= v}`.
    pub fn cdf_contribution(&self, u: f64, v: f64) -> f64 {
        let hi = u.min(self.x_hi());
        let len = match self.orientation {
            Orientation::Increasing => hi.min(self.x_lo + v - self.y_lo) - self.x_lo,
            Orientation::Decreasing => {
                hi - self.x_lo.max(self.x_lo + self.width + self.y_lo - v)
            }
        };
        len.clamp(0.0, self.width)
    }
}

/// Shuffle of Min: the law of `(U, S(U))` for a piecewise linear,
/// measure-preserving bijection `S` of `[0, 1]` with slopes `±1`.
///
/// Shuffles come in two representations. An explicit list of segments, and a
/// grid form built from the cell masses of an `m x m` checkerboard where the
/// sub-strip `(i, j)` has width `mass(i, j)`, is stacked inside column `i` in
/// order of `j` and inside row `j` in order of `i`. The grid form never stores
/// the `m²` segments, so `m` in the tens of thousands is cheap.
#[derive(Debug, Clone)]
pub struct ShuffleOfMin {
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    Segments(Arc<Vec<Segment>>),
    Grid(Arc<GridShuffle>),
}

#[derive(Debug)]
struct GridShuffle {
    m: usize,
    source: GridSource,
}

#[derive(Debug)]
enum GridSource {
    Table(Arc<Checkerboard>),
    /// Cell masses read off the copula's cdf at the grid corners.
    Copula(Copula),
}

impl GridShuffle {
    fn pt(&self, k: usize) -> f64 {
        k as f64 / self.m as f64
    }

    fn corner(&self, i: usize, j: usize) -> f64 {
        match &self.source {
            GridSource::Table(cb) => cb.corner(i, j),
            GridSource::Copula(c) => c.cdf(self.pt(i), self.pt(j)),
        }
    }

    fn col_cum(&self, i: usize, j: usize) -> f64 {
        match &self.source {
            GridSource::Table(cb) => cb.col_cum(i, j),
            GridSource::Copula(_) => self.corner(i + 1, j) - self.corner(i, j),
        }
    }

    fn row_cum(&self, j: usize, i: usize) -> f64 {
        match &self.source {
            GridSource::Table(cb) => cb.row_cum(j, i),
            GridSource::Copula(_) => self.corner(i, j + 1) - self.corner(i, j),
        }
    }

    fn mass(&self, i: usize, j: usize) -> f64 {
        match &self.source {
            GridSource::Table(cb) => cb.mass(i, j),
            GridSource::Copula(_) => (self.col_cum(i, j + 1) - self.col_cum(i, j)).max(0.0),
        }
    }

    fn index(&self, t: f64) -> usize {
        ((t * self.m as f64).floor() as usize).min(self.m - 1)
    }

    fn transport(&self, u: f64) -> f64 {
        let i = self.index(u);
        let off = u - self.pt(i);
        // largest j with col_cum(i, j) <= off
        let (mut lo, mut hi) = (0usize, self.m);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.col_cum(i, mid) <= off {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let j = lo;
        self.pt(j) + self.row_cum(j, i) + (off - self.col_cum(i, j))
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        let i = self.index(u);
        let j = self.index(v);
        let a = u - self.pt(i);
        let b = v - self.pt(j);
        let below = self.col_cum(i, j);
        let left = self.row_cum(j, i);
        let w = self.mass(i, j);
        let cell = (a.min(below + w).min(below + b - left) - below).clamp(0.0, w);
        self.corner(i, j) + a.min(below) + b.min(left) + cell
    }

    fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::new();
        for i in 0..self.m {
            for j in 0..self.m {
                let w = self.mass(i, j);
                if w > 0.0 {
                    out.push(Segment::increasing(
                        self.pt(i) + self.col_cum(i, j),
                        w,
                        self.pt(j) + self.row_cum(j, i),
                    ));
                }
            }
        }
        out
    }
}

fn check_partition(mut intervals: Vec<(f64, f64)>, axis: &'static str) -> Result<()> {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut cursor = 0.0;
    for (lo, hi) in intervals {
        if (lo - cursor).abs() > MASS_TOL {
            let what = if lo > cursor { "gap" } else { "overlap" };
            return Err(Error::invalid(
                if axis == "x" { "x-intervals partition [0,1)" } else { "y-intervals partition [0,1)" },
                format!("{what} at {axis} = {cursor}"),
            ));
        }
        cursor = hi;
    }
    if (cursor - 1.0).abs() > MASS_TOL {
        return Err(Error::invalid(
            if axis == "x" { "x-intervals partition [0,1)" } else { "y-intervals partition [0,1)" },
            format!("{axis}-intervals end at {cursor}, expected 1"),
        ));
    }
    Ok(())
}

impl ShuffleOfMin {
    /// Validates the strips and builds the shuffle; segments are reordered by `x_lo`.
    pub fn from_segments(mut segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("nonempty segments", "a shuffle needs at least one strip"));
        }
        for (k, s) in segments.iter().enumerate() {
            if !(s.x_lo.is_finite() && s.width.is_finite() && s.y_lo.is_finite()) {
                return Err(Error::invalid("finite segments", format!("segment {k} is not finite")));
            }
            if s.width <= 0.0 {
                return Err(Error::invalid(
                    "positive width",
                    format!("segment {k} has width {}", s.width),
                ));
            }
            if s.x_lo < -MASS_TOL
                || s.y_lo < -MASS_TOL
                || s.x_hi() > 1.0 + MASS_TOL
                || s.y_lo + s.width > 1.0 + MASS_TOL
            {
                return Err(Error::invalid(
                    "segment inside unit square",
                    format!("segment {k} = {s:?}"),
                ));
            }
        }
        check_partition(segments.iter().map(|s| (s.x_lo, s.x_hi())).collect(), "x")?;
        check_partition(
            segments.iter().map(|s| (s.y_lo, s.y_lo + s.width)).collect(),
            "y",
        )?;
        segments.sort_by(|a, b| a.x_lo.total_cmp(&b.x_lo));
        Ok(ShuffleOfMin {
            repr: Repr::Segments(Arc::new(segments)),
        })
    }

    /// Single increasing strip: the Fréchet upper bound `min(u, v)`.
    pub fn identity() -> Self {
        ShuffleOfMin {
            repr: Repr::Segments(Arc::new(vec![Segment::increasing(0.0, 1.0, 0.0)])),
        }
    }

    /// `k = perm.len()` equal strips; strip `i` is moved to vertical position `perm[i]`
    /// and flipped when `flips[i]` is set.
    pub fn from_permutation(perm: &[usize], flips: &[bool]) -> Result<Self> {
        let k = perm.len();
        let mut seen = vec![false; k];
        for &p in perm {
            if p >= k || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument(format!(
                    "{perm:?} is not a permutation of 0..{k}"
                )));
            }
        }
        let w = 1.0 / k as f64;
        let segments = perm
            .iter()
            .enumerate()
            .map(|(i, &p)| Segment {
                x_lo: i as f64 * w,
                width: w,
                y_lo: p as f64 * w,
                orientation: if flips.get(i).copied().unwrap_or(false) {
                    Orientation::Decreasing
                } else {
                    Orientation::Increasing
                },
            })
            .collect();
        ShuffleOfMin::from_segments(segments)
    }

    /// Grid shuffle whose cell masses are those of `cb`.
    pub fn from_checkerboard(cb: Arc<Checkerboard>) -> Self {
        ShuffleOfMin {
            repr: Repr::Grid(Arc::new(GridShuffle {
                m: cb.m(),
                source: GridSource::Table(cb),
            })),
        }
    }

    /// Grid shuffle whose cell masses are the `copula`-volumes of the `m x m` cells,
    /// evaluated on demand from the copula's cdf.
    pub fn from_copula_grid(copula: Copula, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("strip count m must be at least 1".into()));
        }
        Ok(ShuffleOfMin {
            repr: Repr::Grid(Arc::new(GridShuffle {
                m,
                source: GridSource::Copula(copula),
            })),
        })
    }

    /// Grid size `m` for grid shuffles.
    pub fn grid_size(&self) -> Option<usize> {
        match &self.repr {
            Repr::Segments(_) => None,
            Repr::Grid(g) => Some(g.m),
        }
    }

    /// The strips ordered by `x_lo`. Materializes up to `m²` strips for grid shuffles.
    pub fn segments(&self) -> Vec<Segment> {
        match &self.repr {
            Repr::Segments(s) => s.as_ref().clone(),
            Repr::Grid(g) => g.segments(),
        }
    }

    /// The transport map `S(u)`; `u` is clamped to `[0, 1]`.
    pub fn transport(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.repr {
            Repr::Segments(segs) => {
                let k = segs.partition_point(|s| s.x_lo <= u).saturating_sub(1);
                segs[k].map(u)
            }
            Repr::Grid(g) => g.transport(u),
        }
    }

    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        match &self.repr {
            Repr::Segments(segs) => segs.iter().map(|s| s.cdf_contribution(u, v)).sum(),
            Repr::Grid(g) => g.cdf(u, v),
        }
    }

    /// `1(S(u) <= v)`.
    pub fn partial1(&self, u: f64, v: f64) -> f64 {
        if self.transport(u) <= v {
            1.0
        } else {
            0.0
        }
    }

    /// `∫_s^1 ∂₁C(u, v) dv = 1 - max(s, S(u))`.
    pub fn upper_partial_integral(&self, u: f64, s: f64) -> f64 {
        1.0 - s.max(self.transport(u))
    }

    /// `∫∫ 1(S(u) <= v) du dv = ∫ (1 - S(u)) du`, integrated strip by strip.
    pub fn norm_partial1_sq(&self) -> f64 {
        match &self.repr {
            Repr::Segments(segs) => segs
                .iter()
                .map(|s| s.width * (1.0 - s.y_lo - s.width / 2.0))
                .sum(),
            // the y-stacking of a grid shuffle partitions [0, 1) by construction
            Repr::Grid(_) => 0.5,
        }
    }
}
