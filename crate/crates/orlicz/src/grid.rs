//! Tabulated real functions on monotone grids: the common currency for the
//! generator `W`, its conjugate, `p·log ψ(p)` curves and moment curves.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A real function tabulated on a strictly increasing grid, with declared
/// linear extrapolation slopes beyond the window.
///
/// Slope semantics: a finite slope extends the function linearly; an
/// infinite slope means the window end is a hard domain boundary. On the
/// left this makes the first grid point a closed boundary (the function is
/// `+∞` to the left of it); on the right it marks the window as a
/// truncation of an unbounded domain, so conjugate suprema attained there
/// are treated as unresolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFunctionRepr", into = "GridFunctionRepr")]
pub struct GridFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
    convex: bool,
}

impl GridFunction {
    /// Build with both window ends hard (`±∞` outside).
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::with_slopes(grid, values, f64::INFINITY, f64::INFINITY)
    }

    pub fn with_slopes(
        grid: Vec<f64>,
        values: Vec<f64>,
        left_slope: f64,
        right_slope: f64,
    ) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidGrid("grid needs at least 2 points".into()));
        }
        if grid.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "grid/value length mismatch: {} vs {}",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("grid not strictly increasing".into()));
        }
        if grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("grid values must be finite".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("ordinates must be finite".into()));
        }
        if left_slope.is_nan() || right_slope.is_nan() {
            return Err(Error::InvalidGrid("extrapolation slopes must not be NaN".into()));
        }
        Ok(Self {
            grid,
            values,
            left_slope,
            right_slope,
            convex: false,
        })
    }

    /// Flag the function as convex, verifying discrete second differences
    /// up to `eps_rel` times the value range.
    pub fn flag_convex(mut self, eps_rel: f64) -> Result<Self> {
        let scale = self.value_scale();
        let eps = eps_rel * scale;
        for i in 1..self.grid.len() - 1 {
            let (x0, x1, x2) = (self.grid[i - 1], self.grid[i], self.grid[i + 1]);
            let (f0, f1, f2) = (self.values[i - 1], self.values[i], self.values[i + 1]);
            // chord value above the middle node, scaled to avoid division
            let lhs = f0 * (x2 - x1) + f2 * (x1 - x0) - f1 * (x2 - x0);
            if lhs < -eps * (x2 - x0) {
                return Err(Error::NonConvex(format!(
                    "second difference at grid index {i} (z = {x1}) is negative"
                )));
            }
        }
        self.convex = true;
        Ok(self)
    }

    fn value_scale(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (hi - lo).max(hi.abs()).max(1.0)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn left_slope(&self) -> f64 {
        self.left_slope
    }

    pub fn right_slope(&self) -> f64 {
        self.right_slope
    }

    pub fn is_convex_flagged(&self) -> bool {
        self.convex
    }

    pub fn min_x(&self) -> f64 {
        self.grid[0]
    }

    pub fn max_x(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Evaluate by linear interpolation; extrapolates with the declared
    /// slopes, returning `+∞` beyond a hard end.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x < self.grid[0] {
            return if self.left_slope.is_infinite() {
                f64::INFINITY
            } else {
                self.values[0] + self.left_slope * (x - self.grid[0])
            };
        }
        if x > self.grid[n - 1] {
            return if self.right_slope.is_infinite() {
                f64::INFINITY
            } else {
                self.values[n - 1] + self.right_slope * (x - self.grid[n - 1])
            };
        }
        match self.grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
            Ok(i) => self.values[i],
            Err(i) => {
                let (x0, x1) = (self.grid[i - 1], self.grid[i]);
                let t = (x - x0) / (x1 - x0);
                self.values[i - 1] * (1.0 - t) + self.values[i] * t
            }
        }
    }

    /// Chord slopes between consecutive nodes (`len() - 1` entries).
    pub fn node_slopes(&self) -> Vec<f64> {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, f)| (f[1] - f[0]) / (x[1] - x[0]))
            .collect()
    }

    /// Write as CSV (`z,value`) next to a `.meta.json` sidecar holding the
    /// slopes and convexity flag. `null` in the sidecar encodes a hard end.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "z,value")?;
        for (z, v) in self.grid.iter().zip(&self.values) {
            writeln!(f, "{z},{v}")?;
        }
        let meta = GridSidecar {
            left_slope: finite_or_none(self.left_slope),
            right_slope: finite_or_none(self.right_slope),
            convex: self.convex,
        };
        let sidecar = sidecar_path(path);
        std::fs::write(sidecar, serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path)?;
        let mut lines = BufReader::new(f).lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "z,value" => {}
            _ => return Err(Error::Format("expected header `z,value`".into())),
        }
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("bad CSV row: {line}")))?;
            grid.push(parse_f64(a)?);
            values.push(parse_f64(b)?);
        }
        let meta: GridSidecar = match std::fs::read_to_string(sidecar_path(path)) {
            Ok(s) => serde_json::from_str(&s)?,
            Err(_) => GridSidecar::default(),
        };
        let gf = Self::with_slopes(
            grid,
            values,
            meta.left_slope.unwrap_or(f64::INFINITY),
            meta.right_slope.unwrap_or(f64::INFINITY),
        )?;
        if meta.convex {
            gf.flag_convex(1e-9)
        } else {
            Ok(gf)
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
}

fn finite_or_none(s: f64) -> Option<f64> {
    s.is_finite().then_some(s)
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta.json");
    os.into()
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct GridSidecar {
    left_slope: Option<f64>,
    right_slope: Option<f64>,
    #[serde(default)]
    convex: bool,
}

/// Serialized form; `null` slopes encode hard window ends (JSON has no ∞).
#[derive(Serialize, Deserialize)]
struct GridFunctionRepr {
    grid: Vec<f64>,
    values: Vec<f64>,
    left_slope: Option<f64>,
    right_slope: Option<f64>,
    #[serde(default)]
    convex: bool,
}

impl From<GridFunction> for GridFunctionRepr {
    fn from(g: GridFunction) -> Self {
        Self {
            left_slope: finite_or_none(g.left_slope),
            right_slope: finite_or_none(g.right_slope),
            convex: g.convex,
            grid: g.grid,
            values: g.values,
        }
    }
}

impl TryFrom<GridFunctionRepr> for GridFunction {
    type Error = Error;

    fn try_from(r: GridFunctionRepr) -> Result<Self> {
        let g = GridFunction::with_slopes(
            r.grid,
            r.values,
            r.left_slope.unwrap_or(f64::INFINITY),
            r.right_slope.unwrap_or(f64::INFINITY),
        )?;
        if r.convex {
            g.flag_convex(1e-9)
        } else {
            Ok(g)
        }
    }
}

/// Tabulate `f` on the given grid.
pub fn tabulate(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
    let values = grid.iter().map(|&x| f(x)).collect();
    GridFunction::new(grid, values)
}
