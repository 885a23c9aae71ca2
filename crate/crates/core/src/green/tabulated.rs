//! User-supplied Green tensors sampled on a frequency grid.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Matrix3;
use num_complex::Complex64;

use super::{bulk_green, equal_point_im_vacuum, GreenProvider, GreenTensor, Site};
use crate::error::{Error, Result};
use crate::permittivity::{check_frequency, PermittivityModel};

pub const TABLE_HEADER: &str = "# omega Re(Gxx) Im(Gxx) Re(Gxy) Im(Gxy) Re(Gxz) Im(Gxz) \
Re(Gyx) Im(Gyx) Re(Gyy) Im(Gyy) Re(Gyz) Im(Gyz) Re(Gzx) Im(Gzx) Re(Gzy) Im(Gzy) Re(Gzz) Im(Gzz)";

const CHANNELS: usize = 18;
const RECIPROCITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Linear,
    Cubic,
}

/// Whether a table holds the whole tensor or only the part scattered by
/// the surroundings (the vacuum part is then added analytically).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Full,
    Reflection,
}

/// Samples for one ordered pair of sites.
#[derive(Debug, Clone)]
pub struct TableEntry {
    pub a: usize,
    pub b: usize,
    pub kind: TableKind,
    grid: Vec<f64>,
    values: Vec<[f64; CHANNELS]>,
    curvature: Vec<[f64; CHANNELS]>,
}

fn flatten(m: &Matrix3<Complex64>) -> [f64; CHANNELS] {
    let mut out = [0.0; CHANNELS];
    for i in 0..3 {
        for j in 0..3 {
            let k = 2 * (3 * i + j);
            out[k] = m[(i, j)].re;
            out[k + 1] = m[(i, j)].im;
        }
    }
    out
}

fn unflatten(v: &[f64; CHANNELS]) -> Matrix3<Complex64> {
    Matrix3::from_fn(|i, j| {
        let k = 2 * (3 * i + j);
        Complex64::new(v[k], v[k + 1])
    })
}

/// Second derivatives of the natural cubic spline through `(x, y)`.
fn natural_spline(x: &[f64], y: &[[f64; CHANNELS]]) -> Vec<[f64; CHANNELS]> {
    let n = x.len();
    let mut m = vec![[0.0; CHANNELS]; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations.
    let mut diag = vec![0.0; n];
    let mut rhs = vec![[0.0; CHANNELS]; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        for c in 0..CHANNELS {
            rhs[i][c] = 6.0 * ((y[i + 1][c] - y[i][c]) / h1 - (y[i][c] - y[i - 1][c]) / h0);
        }
        if i > 1 {
            let w = h0 / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            for c in 0..CHANNELS {
                rhs[i][c] -= w * rhs[i - 1][c];
            }
        }
    }
    for i in (1..n - 1).rev() {
        for c in 0..CHANNELS {
            let next = if i + 1 < n - 1 { upper[i] * m[i + 1][c] } else { 0.0 };
            m[i][c] = (rhs[i][c] - next) / diag[i];
        }
    }
    m
}

impl TableEntry {
    pub fn new(
        a: usize,
        b: usize,
        kind: TableKind,
        grid: Vec<f64>,
        matrices: &[Matrix3<Complex64>],
        interpolation: Interpolation,
    ) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::invalid(format!("table ({a},{b}) needs at least two frequencies")));
        }
        if grid.len() != matrices.len() {
            return Err(Error::invalid(format!(
                "table ({a},{b}): {} frequencies but {} matrices",
                grid.len(),
                matrices.len()
            )));
        }
        for (i, w) in grid.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::invalid(format!("table ({a},{b}): frequency #{i} is not a positive number")));
            }
            if i > 0 && grid[i - 1] >= *w {
                return Err(Error::invalid(format!(
                    "table ({a},{b}): frequency grid not strictly increasing at row {i}"
                )));
            }
        }
        if a == b && kind == TableKind::Full {
            return Err(Error::invalid(format!(
                "table ({a},{a}): equal-point data must be of kind `reflection`"
            )));
        }
        let values: Vec<_> = matrices.iter().map(flatten).collect();
        if let Some(i) = values.iter().position(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::invalid(format!("table ({a},{b}): non-finite entry at row {i}")));
        }
        let curvature = match interpolation {
            Interpolation::Cubic => natural_spline(&grid, &values),
            Interpolation::Linear => vec![[0.0; CHANNELS]; grid.len()],
        };
        Ok(TableEntry { a, b, kind, grid, values, curvature })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn matrix_at_node(&self, i: usize) -> Matrix3<Complex64> {
        unflatten(&self.values[i])
    }

    pub fn evaluate(&self, omega: f64) -> Result<Matrix3<Complex64>> {
        let (lo, hi) = self.range();
        if !(omega >= lo && omega <= hi) {
            return Err(Error::Range { omega, lo, hi });
        }
        let n = self.grid.len();
        let j = self.grid.partition_point(|&x| x <= omega).clamp(1, n - 1);
        let i = j - 1;
        let h = self.grid[j] - self.grid[i];
        let b = (omega - self.grid[i]) / h;
        let a = 1.0 - b;
        let ca = (a * a * a - a) * h * h / 6.0;
        let cb = (b * b * b - b) * h * h / 6.0;
        let mut out = [0.0; CHANNELS];
        for c in 0..CHANNELS {
            out[c] = a * self.values[i][c]
                + b * self.values[j][c]
                + ca * self.curvature[i][c]
                + cb * self.curvature[j][c];
        }
        Ok(unflatten(&out))
    }
}

/// Collection of pair tables; the vacuum tensor is added to reflection data.
#[derive(Debug, Clone, Default)]
pub struct TabulatedGreen {
    entries: Vec<TableEntry>,
}

impl TabulatedGreen {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a table, checking reciprocity against a stored mirror pair.
    pub fn insert(&mut self, entry: TableEntry) -> Result<()> {
        if self.entries.iter().any(|e| e.a == entry.a && e.b == entry.b) {
            return Err(Error::invalid(format!("duplicate table for pair ({},{})", entry.a, entry.b)));
        }
        if let Some(mirror) = self.entries.iter().find(|e| e.a == entry.b && e.b == entry.a && e.a != e.b) {
            if mirror.kind != entry.kind {
                return Err(Error::invalid(format!(
                    "pairs ({},{}) and ({},{}) have different table kinds",
                    entry.a, entry.b, entry.b, entry.a
                )));
            }
            let (lo, hi) = mirror.range();
            for (k, &w) in entry.grid.iter().enumerate() {
                if w < lo || w > hi {
                    continue;
                }
                let g = entry.matrix_at_node(k);
                let t = mirror.evaluate(w)?.transpose();
                let scale = g.iter().chain(t.iter()).fold(0.0f64, |m, z| m.max(z.norm()));
                let diff = (g - t).iter().fold(0.0f64, |m, z| m.max(z.norm()));
                if diff > RECIPROCITY_TOL * scale {
                    return Err(Error::invalid(format!(
                        "tables ({},{}) and ({},{}) violate reciprocity at ω = {w:e} (relative mismatch {:.2e})",
                        entry.a,
                        entry.b,
                        entry.b,
                        entry.a,
                        diff / scale
                    )));
                }
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    fn lookup(&self, a: usize, b: usize, omega: f64) -> Result<Option<(TableKind, Matrix3<Complex64>)>> {
        if let Some(e) = self.entries.iter().find(|e| e.a == a && e.b == b) {
            return Ok(Some((e.kind, e.evaluate(omega)?)));
        }
        if let Some(e) = self.entries.iter().find(|e| e.a == b && e.b == a) {
            return Ok(Some((e.kind, e.evaluate(omega)?.transpose())));
        }
        Ok(None)
    }
}

impl GreenProvider for TabulatedGreen {
    fn tensor(&self, a: &Site, b: &Site, omega: f64) -> Result<GreenTensor> {
        check_frequency(omega)?;
        match self.lookup(a.index, b.index, omega)? {
            Some((TableKind::Full, m)) => Ok(GreenTensor(m)),
            Some((TableKind::Reflection, m)) => {
                Ok(bulk_green(&PermittivityModel::Vacuum, &a.position, &b.position, omega)? + GreenTensor(m))
            }
            None => Err(Error::invalid(format!(
                "no tabulated Green tensor for pair ({},{})",
                a.index, b.index
            ))),
        }
    }

    fn equal_point_im(&self, a: &Site, omega: f64) -> Result<Matrix3<f64>> {
        let vac = equal_point_im_vacuum(omega)?;
        Ok(match self.reflection(a, omega)? {
            Some(r) => vac + r.im(),
            None => vac,
        })
    }

    fn reflection(&self, a: &Site, omega: f64) -> Result<Option<GreenTensor>> {
        check_frequency(omega)?;
        Ok(self.lookup(a.index, a.index, omega)?.map(|(_, m)| GreenTensor(m)))
    }

    fn support(&self) -> Option<(f64, f64)> {
        self.entries.iter().map(|e| e.range()).reduce(|(l0, h0), (l1, h1)| (l0.max(l1), h0.min(h1)))
    }
}

/// Parses one pair table: whitespace or comma separated, 19 columns.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<Matrix3<Complex64>>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading Green table {}", path.display()), e))?;
    parse_table(&text).map_err(|e| match e {
        Error::Invalid(m) => Error::invalid(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn parse_table(text: &str) -> Result<(Vec<f64>, Vec<Matrix3<Complex64>>)> {
    let expected: Vec<&str> = TABLE_HEADER.trim_start_matches('#').split_whitespace().collect();
    let mut grid = Vec::new();
    let mut mats = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let cols: Vec<&str> = rest.split_whitespace().collect();
            if cols.first() == Some(&"omega") && cols != expected {
                return Err(Error::invalid(format!(
                    "line {}: header does not match `{TABLE_HEADER}`",
                    lineno + 1
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != CHANNELS + 1 {
            return Err(Error::invalid(format!(
                "line {}: expected {} columns, found {}",
                lineno + 1,
                CHANNELS + 1,
                fields.len()
            )));
        }
        let mut nums = [0.0; CHANNELS + 1];
        for (k, f) in fields.iter().enumerate() {
            nums[k] = f
                .parse()
                .map_err(|_| Error::invalid(format!("line {}: cannot parse `{f}`", lineno + 1)))?;
        }
        grid.push(nums[0]);
        let mut flat = [0.0; CHANNELS];
        flat.copy_from_slice(&nums[1..]);
        mats.push(unflatten(&flat));
    }
    if grid.is_empty() {
        return Err(Error::invalid("table holds no data rows"));
    }
    Ok((grid, mats))
}

pub fn format_table(grid: &[f64], matrices: &[Matrix3<Complex64>]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for (w, m) in grid.iter().zip(matrices) {
        let _ = write!(out, "{w:.17e}");
        for x in flatten(m) {
            let _ = write!(out, " {x:.17e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_table(path: &Path, grid: &[f64], matrices: &[Matrix3<Complex64>]) -> Result<()> {
    std::fs::write(path, format_table(grid, matrices))
        .map_err(|e| Error::io(format!("writing Green table {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn sample_bulk(grid: &[f64], ra: Vector3<f64>, rb: Vector3<f64>) -> Vec<Matrix3<Complex64>> {
        let m = PermittivityModel::constant(2.0, 0.2).unwrap();
        grid.iter().map(|&w| bulk_green(&m, &ra, &rb, w).unwrap().0).collect()
    }

    #[test]
    fn node_identity_two_points() {
        let grid = vec![1e15, 2e15];
        let mats = vec![
            Matrix3::from_fn(|i, j| Complex64::new(i as f64 + 0.5, j as f64 - 0.25)),
            Matrix3::from_fn(|i, j| Complex64::new(-(i as f64), 3.0 * j as f64)),
        ];
        for interp in [Interpolation::Cubic, Interpolation::Linear] {
            let e = TableEntry::new(0, 1, TableKind::Full, grid.clone(), &mats, interp).unwrap();
            assert_eq!(e.evaluate(1e15).unwrap(), mats[0]);
            assert_eq!(e.evaluate(2e15).unwrap(), mats[1]);
        }
    }

    #[test]
    fn dense_sampling_reproduces_bulk() {
        let ra = Vector3::new(0.0, 0.0, 0.0);
        let rb = Vector3::new(1.2e-7, 0.4e-7, -0.3e-7);
        let grid: Vec<f64> = (0..=400).map(|i| 1.5e15 + 2.5e12 * i as f64).collect();
        let mats = sample_bulk(&grid, ra, rb);
        let e = TableEntry::new(0, 1, TableKind::Full, grid.clone(), &mats, Interpolation::Cubic).unwrap();
        let m = PermittivityModel::constant(2.0, 0.2).unwrap();
        for k in [100, 200, 300] {
            let w = 0.5 * (grid[k] + grid[k + 1]);
            let exact = bulk_green(&m, &ra, &rb, w).unwrap();
            let got = e.evaluate(w).unwrap();
            let err = (got - exact.0).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            assert!(err <= 1e-6 * exact.max_abs(), "k={k} err={err:e}");
        }
    }

    #[test]
    fn out_of_range_is_reported() {
        let grid = vec![1e15, 2e15];
        let mats = vec![Matrix3::zeros(); 2];
        let e = TableEntry::new(0, 1, TableKind::Full, grid, &mats, Interpolation::Cubic).unwrap();
        match e.evaluate(0.5e15) {
            Err(Error::Range { lo, hi, .. }) => {
                assert_eq!(lo, 1e15);
                assert_eq!(hi, 2e15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_grids_and_values() {
        let mats = vec![Matrix3::zeros(); 3];
        assert!(TableEntry::new(0, 1, TableKind::Full, vec![1.0, 1.0, 2.0], &mats, Interpolation::Linear).is_err());
        let mut bad = mats.clone();
        bad[1][(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(TableEntry::new(0, 1, TableKind::Full, vec![1.0, 2.0, 3.0], &bad, Interpolation::Linear).is_err());
    }

    #[test]
    fn reciprocity_check_on_insert() {
        let grid = vec![1e15, 1.5e15, 2e15];
        let m: Vec<_> = grid
            .iter()
            .map(|w| Matrix3::from_fn(|i, j| Complex64::new(w * 1e-15 * (i + 2 * j) as f64, 0.1)))
            .collect();
        let mt: Vec<_> = m.iter().map(|x| x.transpose()).collect();
        let mut t = TabulatedGreen::new();
        t.insert(TableEntry::new(0, 1, TableKind::Full, grid.clone(), &m, Interpolation::Cubic).unwrap()).unwrap();
        t.insert(TableEntry::new(1, 0, TableKind::Full, grid.clone(), &mt, Interpolation::Cubic).unwrap()).unwrap();

        let mut t2 = TabulatedGreen::new();
        t2.insert(TableEntry::new(0, 1, TableKind::Full, grid.clone(), &m, Interpolation::Cubic).unwrap()).unwrap();
        let err = t2.insert(TableEntry::new(1, 0, TableKind::Full, grid, &m, Interpolation::Cubic).unwrap());
        assert!(matches!(err, Err(Error::Invalid(_))));
    }

    #[test]
    fn mirror_lookup_transposes() {
        let grid = vec![1e15, 2e15];
        let m = vec![Matrix3::from_fn(|i, j| Complex64::new((3 * i + j) as f64, 0.0)); 2];
        let mut t = TabulatedGreen::new();
        t.insert(TableEntry::new(0, 1, TableKind::Full, grid, &m, Interpolation::Linear).unwrap()).unwrap();
        let s0 = Site::new(0, Vector3::zeros());
        let s1 = Site::new(1, Vector3::new(1e-7, 0.0, 0.0));
        let g10 = t.tensor(&s1, &s0, 1.5e15).unwrap();
        assert_eq!(g10.0, m[0].transpose());
    }

    #[test]
    fn file_round_trip() {
        let ra = Vector3::new(0.0, 0.0, 0.0);
        let rb = Vector3::new(0.0, 2e-7, 0.0);
        let grid: Vec<f64> = (0..5).map(|i| 1e15 + 1e14 * i as f64).collect();
        let mats = sample_bulk(&grid, ra, rb);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pair.dat");
        write_table(&path, &grid, &mats).unwrap();
        let (g2, m2) = read_table(&path).unwrap();
        assert_eq!(g2, grid);
        assert_eq!(m2, mats);
    }

    #[test]
    fn parser_reports_line_numbers() {
        let text = format!("{TABLE_HEADER}\n1.0 2.0\n");
        let err = parse_table(&text).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let bad_header = "# omega Re(Gxx)\n";
        assert!(parse_table(bad_header).is_err());
    }

    #[test]
    fn reflection_adds_to_vacuum_equal_point() {
        let grid = vec![1e15, 3e15];
        let r = vec![Matrix3::identity().map(|x: f64| Complex64::new(0.0, x * 1e5)); 2];
        let mut t = TabulatedGreen::new();
        t.insert(TableEntry::new(0, 0, TableKind::Reflection, grid, &r, Interpolation::Cubic).unwrap()).unwrap();
        let s = Site::new(0, Vector3::zeros());
        let im = t.equal_point_im(&s, 2e15).unwrap();
        let vac = equal_point_im_vacuum(2e15).unwrap();
        assert!((im[(1, 1)] - vac[(1, 1)] - 1e5).abs() < 1e-9);
    }
}
