//! Fractal boundary-curve networks blended into surfaces.
//!
//! Every grid line carries a univariate fractal spline: rows (`y = y_j`) use
//! the `x`-partials, columns (`x = x_i`) the `y`-partials. On each patch the
//! four boundary curves are combined with cubic Hermite blenders,
//!
//! ```text
//! Φ = b0(θ) ψ*(x_i, y) + b3(θ) ψ*(x_{i+1}, y)
//!   + b0(φ) ψ(x, y_j)  + b3(φ) ψ(x, y_{j+1})
//!   - Σ b(θ) b(φ) z_corner
//! ```
//!
//! Boundary curves are only known on their sample grids, so the blended
//! surface is exposed on the tensor lattice of those samples.

use serde::Serialize;

use crate::constraints::{
    above_line_feasible, rectangle_feasible, FeasibleRange, LineConstraint, RectangleConstraint,
};
use crate::error::{Error, Result};
use crate::ifs::{FixedPointTable, KnotVector};
use crate::spline::{estimate_derivatives, HermiteCurveData, RationalQuarticFif, ShapeParams};

/// Gridded values with both partial derivatives, stored row-major as
/// `[i * ny + j]` for the point `(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceGridData {
    x: KnotVector,
    y: KnotVector,
    z: Vec<f64>,
    zx: Vec<f64>,
    zy: Vec<f64>,
}

impl SurfaceGridData {
    pub fn new(
        x: KnotVector,
        y: KnotVector,
        z: Vec<f64>,
        zx: Vec<f64>,
        zy: Vec<f64>,
    ) -> Result<Self> {
        let size = x.len() * y.len();
        for (what, v) in [("values", &z), ("x-partials", &zx), ("y-partials", &zy)] {
            if v.len() != size {
                return Err(Error::LengthMismatch {
                    what,
                    expected: size,
                    got: v.len(),
                });
            }
            if let Some(index) = v.iter().position(|a| !a.is_finite()) {
                return Err(Error::NonFiniteValue {
                    what,
                    index,
                    value: v[index],
                });
            }
        }
        Ok(Self { x, y, z, zx, zy })
    }

    /// Values only; partials come from [`estimate_partials`].
    pub fn from_values(x: KnotVector, y: KnotVector, z: Vec<f64>) -> Result<Self> {
        let (zx, zy) = estimate_partials(&x, &y, &z)?;
        Self::new(x, y, z, zx, zy)
    }

    /// Samples a function and its partials on the grid.
    pub fn sample(
        x: KnotVector,
        y: KnotVector,
        f: impl Fn(f64, f64) -> f64,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut z = Vec::new();
        let mut zx = Vec::new();
        let mut zy = Vec::new();
        for &xi in x.knots() {
            for &yj in y.knots() {
                z.push(f(xi, yj));
                zx.push(fx(xi, yj));
                zy.push(fy(xi, yj));
            }
        }
        Self::new(x, y, z, zx, zy)
    }

    pub fn x(&self) -> &KnotVector {
        &self.x
    }

    pub fn y(&self) -> &KnotVector {
        &self.y
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn z(&self, i: usize, j: usize) -> f64 {
        self.z[i * self.ny() + j]
    }

    pub fn zx(&self, i: usize, j: usize) -> f64 {
        self.zx[i * self.ny() + j]
    }

    pub fn zy(&self, i: usize, j: usize) -> f64 {
        self.zy[i * self.ny() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }

    pub fn x_partials(&self) -> &[f64] {
        &self.zx
    }

    pub fn y_partials(&self) -> &[f64] {
        &self.zy
    }

    /// Hermite data along the row `y = y_j`.
    pub fn row(&self, j: usize) -> Result<HermiteCurveData> {
        let z = (0..self.nx()).map(|i| self.z(i, j)).collect();
        let d = (0..self.nx()).map(|i| self.zx(i, j)).collect();
        HermiteCurveData::new(self.x.clone(), z, d)
    }

    /// Hermite data along the column `x = x_i`.
    pub fn column(&self, i: usize) -> Result<HermiteCurveData> {
        let z = (0..self.ny()).map(|j| self.z(i, j)).collect();
        let d = (0..self.ny()).map(|j| self.zy(i, j)).collect();
        HermiteCurveData::new(self.y.clone(), z, d)
    }

    /// Swaps the roles of `x` and `y`.
    pub fn transpose(&self) -> Self {
        let (nx, ny) = (self.nx(), self.ny());
        let t = |v: &[f64]| -> Vec<f64> {
            (0..ny)
                .flat_map(|j| (0..nx).map(move |i| v[i * ny + j]))
                .collect()
        };
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
            z: t(&self.z),
            zx: t(&self.zy),
            zy: t(&self.zx),
        }
    }
}

/// Arithmetic-mean partials along rows (`z^x`) and columns (`z^y`).
pub fn estimate_partials(
    x: &KnotVector,
    y: &KnotVector,
    z: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (nx, ny) = (x.len(), y.len());
    if z.len() != nx * ny {
        return Err(Error::LengthMismatch {
            what: "values",
            expected: nx * ny,
            got: z.len(),
        });
    }
    let mut zx = vec![0.0; nx * ny];
    let mut zy = vec![0.0; nx * ny];
    for j in 0..ny {
        let row: Vec<f64> = (0..nx).map(|i| z[i * ny + j]).collect();
        for (i, d) in estimate_derivatives(x, &row)?.into_iter().enumerate() {
            zx[i * ny + j] = d;
        }
    }
    for i in 0..nx {
        let d = estimate_derivatives(y, &z[i * ny..(i + 1) * ny])?;
        zy[i * ny..(i + 1) * ny].copy_from_slice(&d);
    }
    Ok((zx, zy))
}

/// Scaling factors and shape parameters for one grid line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineParams {
    pub scaling: Vec<f64>,
    pub shape: ShapeParams,
}

impl LineParams {
    pub fn new(scaling: Vec<f64>, lambda: Vec<f64>) -> Self {
        Self {
            scaling,
            shape: ShapeParams::Single(lambda),
        }
    }

    pub fn classical(segments: usize, lambda: f64) -> Self {
        Self::new(vec![0.0; segments], vec![lambda; segments])
    }
}

/// Parameters for the whole network, tagged by direction: `horizontal[j]`
/// drives the row `y = y_j`, `vertical[i]` the column `x = x_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkParams {
    pub horizontal: Vec<LineParams>,
    pub vertical: Vec<LineParams>,
}

impl NetworkParams {
    pub fn classical(data: &SurfaceGridData, lambda: f64) -> Self {
        Self {
            horizontal: (0..data.ny())
                .map(|_| LineParams::classical(data.nx() - 1, lambda))
                .collect(),
            vertical: (0..data.nx())
                .map(|_| LineParams::classical(data.ny() - 1, lambda))
                .collect(),
        }
    }
}

fn build_lines(
    direction: &'static str,
    params: &[LineParams],
    count: usize,
    line: impl Fn(usize) -> Result<HermiteCurveData>,
) -> Result<Vec<RationalQuarticFif>> {
    if params.len() != count {
        return Err(Error::LengthMismatch {
            what: "grid line parameters",
            expected: count,
            got: params.len(),
        });
    }
    params
        .iter()
        .enumerate()
        .map(|(k, p)| {
            line(k)
                .and_then(|data| {
                    RationalQuarticFif::assemble(data, p.shape.clone(), p.scaling.clone())
                })
                .map_err(|e| Error::GridLine {
                    direction,
                    line: k,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// One fractal spline per row `y = y_j`.
pub fn boundary_curves_x(
    data: &SurfaceGridData,
    params: &[LineParams],
) -> Result<Vec<RationalQuarticFif>> {
    build_lines("horizontal", params, data.ny(), |j| data.row(j))
}

/// One fractal spline per column `x = x_i`.
pub fn boundary_curves_y(
    data: &SurfaceGridData,
    params: &[LineParams],
) -> Result<Vec<RationalQuarticFif>> {
    build_lines("vertical", params, data.nx(), |i| data.column(i))
}

/// Cubic Hermite blenders `((1-t)^2 (1+2t), t^2 (3-2t))`.
pub fn hermite_blenders(t: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "blender argument {t} outside [0, 1]"
        )));
    }
    let s = 1.0 - t;
    Ok((s * s * (1.0 + 2.0 * t), t * t * (3.0 - 2.0 * t)))
}

/// A blended surface with its sampled boundary network.
#[derive(Debug, Clone)]
pub struct BlendedSurface {
    data: SurfaceGridData,
    horizontal: Vec<RationalQuarticFif>,
    vertical: Vec<RationalQuarticFif>,
    rows: Vec<FixedPointTable>,
    columns: Vec<FixedPointTable>,
}

impl BlendedSurface {
    /// Assembles the boundary network and samples every line at `resolution`
    /// points per subinterval (rounded up to the nested grid).
    pub fn build(
        data: SurfaceGridData,
        params: &NetworkParams,
        resolution: usize,
        tol: f64,
    ) -> Result<Self> {
        let horizontal = boundary_curves_x(&data, &params.horizontal)?;
        let vertical = boundary_curves_y(&data, &params.vertical)?;
        let rows = horizontal
            .iter()
            .map(|c| c.sample(resolution, tol))
            .collect::<Result<Vec<_>>>()?;
        let columns = vertical
            .iter()
            .map(|c| c.sample(resolution, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            data,
            horizontal,
            vertical,
            rows,
            columns,
        })
    }

    pub fn data(&self) -> &SurfaceGridData {
        &self.data
    }

    pub fn horizontal(&self) -> &[RationalQuarticFif] {
        &self.horizontal
    }

    pub fn vertical(&self) -> &[RationalQuarticFif] {
        &self.vertical
    }

    pub fn row_table(&self, j: usize) -> &FixedPointTable {
        &self.rows[j]
    }

    pub fn column_table(&self, i: usize) -> &FixedPointTable {
        &self.columns[i]
    }

    /// Lattice abscissae along `x`.
    pub fn lattice_x(&self) -> &[f64] {
        self.rows[0].xs()
    }

    /// Lattice ordinates along `y`.
    pub fn lattice_y(&self) -> &[f64] {
        self.columns[0].xs()
    }

    /// Surface value at lattice indices `(ix, iy)`.
    pub fn value_at_index(&self, ix: usize, iy: usize) -> f64 {
        let (mx, my) = (
            self.rows[0].per_subinterval(),
            self.columns[0].per_subinterval(),
        );
        let i = (ix / mx).min(self.data.nx() - 2);
        let j = (iy / my).min(self.data.ny() - 2);
        let (x, y) = (self.lattice_x()[ix], self.lattice_y()[iy]);
        let xk = self.data.x.knots();
        let yk = self.data.y.knots();
        let theta = ((x - xk[i]) / self.data.x.width(i)).clamp(0.0, 1.0);
        let phi = ((y - yk[j]) / self.data.y.width(j)).clamp(0.0, 1.0);
        let (p0, p3) = hermite_blenders(theta).expect("clamped");
        let (q0, q3) = hermite_blenders(phi).expect("clamped");

        let across_x = p0 * self.columns[i].values()[iy] + p3 * self.columns[i + 1].values()[iy];
        let across_y = q0 * self.rows[j].values()[ix] + q3 * self.rows[j + 1].values()[ix];
        let corners = p0 * (q0 * self.data.z(i, j) + q3 * self.data.z(i, j + 1))
            + p3 * (q0 * self.data.z(i + 1, j) + q3 * self.data.z(i + 1, j + 1));
        across_x + across_y - corners
    }

    /// Surface value at a lattice point; anything else is refused.
    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        let ix = self.rows[0].index_of(x);
        let iy = self.columns[0].index_of(y);
        match (ix, iy) {
            (Some(ix), Some(iy)) => Ok(self.value_at_index(ix, iy)),
            _ => Err(Error::OffLattice { x, y }),
        }
    }

    /// Values on an evenly strided sub-lattice with at most `count` points per
    /// axis (always including both ends), as `(xs, ys, values[ix * ys.len() + iy])`.
    pub fn probe(&self, count: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let pick = |len: usize| -> Vec<usize> {
            let count = count.clamp(2, len);
            (0..count).map(|k| k * (len - 1) / (count - 1)).collect()
        };
        let ix = pick(self.lattice_x().len());
        let iy = pick(self.lattice_y().len());
        let xs = ix.iter().map(|&i| self.lattice_x()[i]).collect();
        let ys = iy.iter().map(|&j| self.lattice_y()[j]).collect();
        let values = ix
            .iter()
            .flat_map(|&i| iy.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.value_at_index(i, j))
            .collect();
        (xs, ys, values)
    }
}

/// Surface value at a lattice point.
pub fn coons_blend(surface: &BlendedSurface, x: f64, y: f64) -> Result<f64> {
    surface.value(x, y)
}

/// Per-line feasible ranges: `horizontal[j]` for the row `y = y_j`,
/// `vertical[i]` for the column `x = x_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceFeasible {
    pub horizontal: Vec<FeasibleRange>,
    pub vertical: Vec<FeasibleRange>,
}

impl SurfaceFeasible {
    pub fn is_empty(&self) -> bool {
        self.horizontal
            .iter()
            .chain(&self.vertical)
            .any(FeasibleRange::is_empty)
    }
}

/// The plane `t = c (1 - x/a - y/b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneConstraint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PlaneConstraint {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a != 0.0 && b != 0.0 && a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "plane intercepts must be finite and nonzero: a = {a}, b = {b}"
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn at(&self, x: f64, y: f64) -> f64 {
        self.c * (1.0 - x / self.a - y / self.b)
    }

    /// The plane's trace along the row `y = y0`.
    pub fn row_line(&self, y0: f64) -> LineConstraint {
        LineConstraint::new(-self.c / self.a, self.c * (1.0 - y0 / self.b))
    }

    /// The plane's trace along the column `x = x0`.
    pub fn column_line(&self, x0: f64) -> LineConstraint {
        LineConstraint::new(-self.c / self.b, self.c * (1.0 - x0 / self.a))
    }
}

fn line_error(direction: &'static str, line: usize, e: Error) -> Error {
    Error::GridLine {
        direction,
        line,
        source: Box::new(e),
    }
}

/// Per-line ranges keeping every boundary curve inside `[c, d]`.
pub fn surface_box_feasible(
    data: &SurfaceGridData,
    b: &RectangleConstraint,
) -> Result<SurfaceFeasible> {
    b.check(data.values())?;
    let horizontal = (0..data.ny())
        .map(|j| rectangle_feasible(&data.row(j)?, b).map_err(|e| line_error("horizontal", j, e)))
        .collect::<Result<_>>()?;
    let vertical = (0..data.nx())
        .map(|i| rectangle_feasible(&data.column(i)?, b).map_err(|e| line_error("vertical", i, e)))
        .collect::<Result<_>>()?;
    Ok(SurfaceFeasible {
        horizontal,
        vertical,
    })
}

/// Per-line ranges keeping every boundary curve strictly above the plane.
pub fn surface_above_plane_feasible(
    data: &SurfaceGridData,
    plane: &PlaneConstraint,
) -> Result<SurfaceFeasible> {
    let below: Vec<usize> = (0..data.nx())
        .flat_map(|i| (0..data.ny()).map(move |j| (i, j)))
        .filter(|&(i, j)| !(data.z(i, j) > plane.at(data.x.knots()[i], data.y.knots()[j])))
        .map(|(i, j)| i * data.ny() + j)
        .collect();
    if !below.is_empty() {
        return Err(Error::Constraint {
            indices: below,
            reason: "grid values must lie strictly above the plane (index = i * ny + j)".into(),
        });
    }
    let horizontal = (0..data.ny())
        .map(|j| {
            above_line_feasible(&data.row(j)?, &plane.row_line(data.y.knots()[j]))
                .map_err(|e| line_error("horizontal", j, e))
        })
        .collect::<Result<_>>()?;
    let vertical = (0..data.nx())
        .map(|i| {
            above_line_feasible(&data.column(i)?, &plane.column_line(data.x.knots()[i]))
                .map_err(|e| line_error("vertical", i, e))
        })
        .collect::<Result<_>>()?;
    Ok(SurfaceFeasible {
        horizontal,
        vertical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(nx: usize, ny: usize) -> (KnotVector, KnotVector) {
        (
            KnotVector::uniform(0.0, 1.0, nx).unwrap(),
            KnotVector::uniform(0.0, 2.0, ny).unwrap(),
        )
    }

    #[test]
    fn blenders() {
        assert_eq!(hermite_blenders(0.0).unwrap(), (1.0, 0.0));
        assert_eq!(hermite_blenders(1.0).unwrap(), (0.0, 1.0));
        assert_eq!(hermite_blenders(0.5).unwrap(), (0.5, 0.5));
        for k in 0..=100 {
            let (a, b) = hermite_blenders(k as f64 / 100.0).unwrap();
            assert!(a >= 0.0 && b >= 0.0 && (a + b - 1.0).abs() < 1e-15);
        }
        assert!(hermite_blenders(1.5).is_err());
    }

    #[test]
    fn partials_of_simple_sheets() {
        let (x, y) = grid(4, 5);
        let z: Vec<f64> = x
            .knots()
            .iter()
            .flat_map(|&a| y.knots().iter().map(move |&b| a + 2.0 * b))
            .collect();
        let (zx, zy) = estimate_partials(&x, &y, &z).unwrap();
        assert!(zx.iter().all(|v| (v - 1.0).abs() < 1e-13));
        assert!(zy.iter().all(|v| (v - 2.0).abs() < 1e-13));

        let (x, y) = grid(3, 3);
        let z: Vec<f64> = x
            .knots()
            .iter()
            .flat_map(|&a| y.knots().iter().map(move |&b| a * b))
            .collect();
        let data = SurfaceGridData::from_values(x, y.clone(), z).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((data.zx(i, j) - y.knots()[j]).abs() < 1e-14);
            }
        }
        let t = data.transpose();
        let (tzx, _) = estimate_partials(t.x(), t.y(), t.values()).unwrap();
        assert_eq!(t.x_partials(), &tzx[..]);
    }

    #[test]
    fn constant_sheet() {
        let (x, y) = grid(4, 3);
        let data = SurfaceGridData::new(x, y, vec![5.0; 12], vec![0.0; 12], vec![0.0; 12]).unwrap();
        let mut params = NetworkParams::classical(&data, 1.5);
        params.horizontal[1].scaling = vec![0.1, -0.2, 0.3];
        let s = BlendedSurface::build(data, &params, 16, 1e-12).unwrap();
        let (_, _, v) = s.probe(40);
        assert!(v.iter().all(|z| (z - 5.0).abs() < 1e-12));
    }

    #[test]
    fn corner_interpolation_and_lattice_refusal() {
        let (x, y) = grid(4, 3);
        let data = SurfaceGridData::sample(
            x.clone(),
            y.clone(),
            |a, b| (a * b).sin(),
            |a, b| b * (a * b).cos(),
            |a, b| a * (a * b).cos(),
        )
        .unwrap();
        let mut params = NetworkParams::classical(&data, 1.0);
        for p in params
            .horizontal
            .iter_mut()
            .chain(params.vertical.iter_mut())
        {
            p.scaling.iter_mut().for_each(|a| *a = 0.1);
        }
        let s = BlendedSurface::build(data.clone(), &params, 16, 1e-12).unwrap();
        for (i, &xi) in x.knots().iter().enumerate() {
            for (j, &yj) in y.knots().iter().enumerate() {
                assert!((coons_blend(&s, xi, yj).unwrap() - data.z(i, j)).abs() < 1e-12);
            }
        }
        assert!(matches!(
            s.value(0.123456789, 0.0),
            Err(Error::OffLattice { .. })
        ));
    }

    #[test]
    fn cap_errors_name_the_line() {
        let (x, y) = grid(4, 3);
        let data = SurfaceGridData::from_values(x, y, (0..12).map(f64::from).collect()).unwrap();
        let mut params = NetworkParams::classical(&data, 1.0);
        params.vertical[2].scaling[1] = 0.9;
        match BlendedSurface::build(data, &params, 4, 1e-10) {
            Err(Error::GridLine {
                direction: "vertical",
                line: 2,
                source,
            }) => {
                assert!(matches!(*source, Error::ScalingCap { index: 1, .. }))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn plane_traces() {
        let p = PlaneConstraint::new(2.0, 4.0, 3.0).unwrap();
        let row = p.row_line(1.0);
        let col = p.column_line(0.5);
        for t in [0.0, 0.3, 1.7] {
            assert!((row.at(t) - p.at(t, 1.0)).abs() < 1e-15);
            assert!((col.at(t) - p.at(0.5, t)).abs() < 1e-15);
        }
        assert!(PlaneConstraint::new(0.0, 1.0, 1.0).is_err());
    }
}
