use std::sync::Arc;

use num_complex::Complex64;

use super::FieldError;

/// Radial node placement for polar grids. Geometric grading (`r_k = R rho^k`)
/// resolves blow-up near the puncture; uniform spacing keeps polynomial
/// fields exactly differentiable by the finite-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialSpacing {
    Uniform,
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone)]
pub enum GridKind {
    Polar {
        n_r: usize,
        n_theta: usize,
        spacing: RadialSpacing,
        /// Ascending radii, innermost first; the outermost equals the radius.
        radii: Vec<f64>,
    },
    Cartesian {
        n: usize,
        /// Lattice coordinates of the retained nodes.
        nodes: Vec<(f64, f64)>,
        /// For each lattice row, the contiguous runs of retained node
        /// indices (start_node_index, lattice_column_start, length).
        row_runs: Vec<Vec<(usize, usize, usize)>>,
        /// Same per lattice column.
        col_runs: Vec<Vec<(usize, usize, usize)>>,
        /// Node index by (row, col), usize::MAX where excluded.
        index: Vec<usize>,
        step: f64,
    },
}

/// A punctured-disk grid: every node satisfies `eps <= |z| <= radius`.
#[derive(Debug, Clone)]
pub struct DiskGrid {
    pub radius: f64,
    pub eps: f64,
    pub kind: GridKind,
}

impl DiskGrid {
    /// Polar grid with `n_r` rings and `n_theta` equispaced angles
    /// (`n_theta` must be a power of two so angular transforms are exact).
    pub fn polar(
        radius: f64,
        n_r: usize,
        n_theta: usize,
        spacing: RadialSpacing,
    ) -> Result<Arc<DiskGrid>, FieldError> {
        if !n_theta.is_power_of_two() || n_theta < 8 {
            return Err(FieldError::GridTooCoarse(format!(
                "n_theta must be a power of two >= 8, got {n_theta}"
            )));
        }
        if n_r < 4 {
            return Err(FieldError::GridTooCoarse(format!("n_r = {n_r} < 4")));
        }
        let radii: Vec<f64> = match spacing {
            RadialSpacing::Uniform => (1..=n_r)
                .map(|i| radius * i as f64 / n_r as f64)
                .collect(),
            RadialSpacing::Geometric { ratio } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(FieldError::GridTooCoarse(format!(
                        "geometric ratio must be in (0,1), got {ratio}"
                    )));
                }
                (0..n_r)
                    .map(|i| radius * ratio.powi((n_r - 1 - i) as i32))
                    .collect()
            }
        };
        let eps = radii[0];
        Ok(Arc::new(DiskGrid {
            radius,
            eps,
            kind: GridKind::Polar {
                n_r,
                n_theta,
                spacing,
                radii,
            },
        }))
    }

    /// Geometric polar grid whose innermost ring sits at `radius * inner_frac`.
    pub fn polar_reaching(
        radius: f64,
        n_r: usize,
        n_theta: usize,
        inner_frac: f64,
    ) -> Result<Arc<DiskGrid>, FieldError> {
        let ratio = inner_frac.powf(1.0 / (n_r as f64 - 1.0));
        DiskGrid::polar(radius, n_r, n_theta, RadialSpacing::Geometric { ratio })
    }

    /// Cartesian lattice over `[-radius, radius]^2` masked to the annulus
    /// `eps <= |z| <= radius`; the origin node is excluded by construction.
    pub fn cartesian(radius: f64, n: usize) -> Result<Arc<DiskGrid>, FieldError> {
        if n < 16 {
            return Err(FieldError::GridTooCoarse(format!("n = {n} < 16")));
        }
        let step = 2.0 * radius / (n - 1) as f64;
        let eps = 0.75 * step;
        let coord = |i: usize| -radius + step * i as f64;
        let mut nodes = Vec::new();
        let mut index = vec![usize::MAX; n * n];
        for row in 0..n {
            for col in 0..n {
                let (x, y) = (coord(col), coord(row));
                let r = (x * x + y * y).sqrt();
                if r >= eps && r <= radius + 1e-12 {
                    index[row * n + col] = nodes.len();
                    nodes.push((x, y));
                }
            }
        }
        let mut row_runs = vec![Vec::new(); n];
        let mut col_runs = vec![Vec::new(); n];
        for row in 0..n {
            let mut col = 0;
            while col < n {
                if index[row * n + col] != usize::MAX {
                    let start_col = col;
                    let start_idx = index[row * n + col];
                    while col < n && index[row * n + col] != usize::MAX {
                        col += 1;
                    }
                    row_runs[row].push((start_idx, start_col, col - start_col));
                } else {
                    col += 1;
                }
            }
        }
        for col in 0..n {
            let mut row = 0;
            while row < n {
                if index[row * n + col] != usize::MAX {
                    let start_row = row;
                    let start_idx = index[row * n + col];
                    while row < n && index[row * n + col] != usize::MAX {
                        row += 1;
                    }
                    col_runs[col].push((start_idx, start_row, row - start_row));
                } else {
                    row += 1;
                }
            }
        }
        Ok(Arc::new(DiskGrid {
            radius,
            eps,
            kind: GridKind::Cartesian {
                n,
                nodes,
                row_runs,
                col_runs,
                index,
                step,
            },
        }))
    }

    pub fn node_count(&self) -> usize {
        match &self.kind {
            GridKind::Polar { n_r, n_theta, .. } => n_r * n_theta,
            GridKind::Cartesian { nodes, .. } => nodes.len(),
        }
    }

    pub fn is_polar(&self) -> bool {
        matches!(self.kind, GridKind::Polar { .. })
    }

    pub fn polar_dims(&self) -> Option<(usize, usize)> {
        match &self.kind {
            GridKind::Polar { n_r, n_theta, .. } => Some((*n_r, *n_theta)),
            _ => None,
        }
    }

    pub fn radii(&self) -> &[f64] {
        match &self.kind {
            GridKind::Polar { radii, .. } => radii,
            _ => &[],
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        match &self.kind {
            GridKind::Polar { n_theta, .. } => {
                2.0 * std::f64::consts::PI * j as f64 / *n_theta as f64
            }
            _ => 0.0,
        }
    }

    /// Complex coordinate of a node.
    pub fn node_z(&self, idx: usize) -> Complex64 {
        match &self.kind {
            GridKind::Polar { n_theta, radii, .. } => {
                let (i_r, i_th) = (idx / n_theta, idx % n_theta);
                Complex64::from_polar(radii[i_r], self.theta(i_th))
            }
            GridKind::Cartesian { nodes, .. } => {
                let (x, y) = nodes[idx];
                Complex64::new(x, y)
            }
        }
    }

    /// Ring index nearest to radius `r` (polar only).
    pub fn nearest_ring(&self, r: f64) -> usize {
        let radii = self.radii();
        let mut best = 0;
        let mut gap = f64::INFINITY;
        for (i, &ri) in radii.iter().enumerate() {
            let g = (ri - r).abs();
            if g < gap {
                gap = g;
                best = i;
            }
        }
        best
    }
}

/// Sampled complex vector field on a [`DiskGrid`]: `m` components per node.
#[derive(Debug, Clone)]
pub struct GridField {
    pub grid: Arc<DiskGrid>,
    pub m: usize,
    /// Node-major storage: `values[node * m + component]`.
    pub values: Vec<Complex64>,
}

impl GridField {
    pub fn zeros(grid: Arc<DiskGrid>, m: usize) -> Self {
        let n = grid.node_count();
        GridField {
            grid,
            m,
            values: vec![Complex64::new(0.0, 0.0); n * m],
        }
    }

    pub fn from_fn(
        grid: Arc<DiskGrid>,
        m: usize,
        mut f: impl FnMut(Complex64) -> Vec<Complex64>,
    ) -> Result<Self, FieldError> {
        let mut out = GridField::zeros(grid.clone(), m);
        for idx in 0..grid.node_count() {
            let v = f(grid.node_z(idx));
            if v.len() != m {
                return Err(FieldError::ShapeMismatch {
                    expected: m,
                    got: v.len(),
                });
            }
            for (c, val) in v.into_iter().enumerate() {
                out.values[idx * m + c] = val;
            }
        }
        out.check_finite()?;
        Ok(out)
    }

    pub fn scalar_from_fn(
        grid: Arc<DiskGrid>,
        mut f: impl FnMut(Complex64) -> Complex64,
    ) -> Result<Self, FieldError> {
        GridField::from_fn(grid, 1, |z| vec![f(z)])
    }

    pub fn check_finite(&self) -> Result<(), FieldError> {
        if self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(())
        } else {
            Err(FieldError::NonFinite)
        }
    }

    #[inline]
    pub fn get(&self, idx: usize, comp: usize) -> Complex64 {
        self.values[idx * self.m + comp]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, comp: usize, v: Complex64) {
        self.values[idx * self.m + comp] = v;
    }

    pub fn component(&self, comp: usize) -> GridField {
        let n = self.grid.node_count();
        let mut values = Vec::with_capacity(n);
        for idx in 0..n {
            values.push(self.get(idx, comp));
        }
        GridField {
            grid: self.grid.clone(),
            m: 1,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_im(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Maximum magnitude over nodes with `r_lo <= |z| <= r_hi`.
    pub fn max_abs_annulus(&self, r_lo: f64, r_hi: f64) -> f64 {
        let mut best: f64 = 0.0;
        for idx in 0..self.grid.node_count() {
            let r = self.grid.node_z(idx).norm();
            if r >= r_lo && r <= r_hi {
                for c in 0..self.m {
                    best = best.max(self.get(idx, c).norm());
                }
            }
        }
        best
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridField {
        GridField {
            grid: self.grid.clone(),
            m: self.m,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &GridField, f: impl Fn(Complex64, Complex64) -> Complex64) -> GridField {
        assert_eq!(self.values.len(), other.values.len());
        GridField {
            grid: self.grid.clone(),
            m: self.m,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, a: Complex64) -> GridField {
        self.map(|v| v * a)
    }

    pub fn add(&self, other: &GridField) -> GridField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridField) -> GridField {
        self.zip(other, |a, b| a - b)
    }

    /// CSV dump with header `r,theta,comp0_re,comp0_im,...`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<(), FieldError> {
        use std::io::Write;
        let mut out = String::new();
        out.push_str("r,theta");
        for c in 0..self.m {
            out.push_str(&format!(",comp{c}_re,comp{c}_im"));
        }
        out.push('\n');
        for idx in 0..self.grid.node_count() {
            let z = self.grid.node_z(idx);
            let (r, th) = (z.norm(), z.arg().rem_euclid(2.0 * std::f64::consts::PI));
            out.push_str(&format!("{r:.17e},{th:.17e}"));
            for c in 0..self.m {
                let v = self.get(idx, c);
                out.push_str(&format!(",{:.17e},{:.17e}", v.re, v.im));
            }
            out.push('\n');
        }
        let tmp = path.with_extension("csv.tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(out.as_bytes())?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Reads a CSV produced by [`GridField::write_csv`] onto `grid`, which
    /// must match the file row-for-row.
    pub fn read_csv(grid: Arc<DiskGrid>, m: usize, path: &std::path::Path) -> Result<Self, FieldError> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let _header = lines
            .next()
            .ok_or_else(|| FieldError::Parse("empty file".into()))?;
        let mut field = GridField::zeros(grid.clone(), m);
        let mut count = 0usize;
        for (idx, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 2 + 2 * m {
                return Err(FieldError::Parse(format!(
                    "row {idx}: expected {} columns, got {}",
                    2 + 2 * m,
                    cols.len()
                )));
            }
            for c in 0..m {
                let re: f64 = cols[2 + 2 * c]
                    .trim()
                    .parse()
                    .map_err(|e| FieldError::Parse(format!("row {idx}: {e}")))?;
                let im: f64 = cols[3 + 2 * c]
                    .trim()
                    .parse()
                    .map_err(|e| FieldError::Parse(format!("row {idx}: {e}")))?;
                field.set(idx, c, Complex64::new(re, im));
            }
            count += 1;
        }
        if count != grid.node_count() {
            return Err(FieldError::Parse(format!(
                "expected {} rows, got {count}",
                grid.node_count()
            )));
        }
        Ok(field)
    }
}
