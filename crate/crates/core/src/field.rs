//! Physical and spectral field containers on a [`LayerGrid`], the partial
//! Fourier transform in the horizontal directions, and spectral derivatives.
//!
//! Storage layout is `[component][horizontal index][vertical node]`, so the
//! vertical profile of one component of one mode is a contiguous slice.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::LayerGrid;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tensor rank of a field. Matrix component `(i, j)` is stored at `i * N + j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    Vector,
    Matrix,
}

impl Rank {
    pub fn components(self, dim: usize) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => dim,
            Rank::Matrix => dim * dim,
        }
    }

    fn raised(self) -> Result<Rank> {
        match self {
            Rank::Scalar => Ok(Rank::Vector),
            Rank::Vector => Ok(Rank::Matrix),
            Rank::Matrix => Err(Error::InvalidArgument("cannot raise rank of a matrix field".into())),
        }
    }
}

pub(crate) fn same_grid(a: &Arc<LayerGrid>, b: &Arc<LayerGrid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Real samples on the grid points.
#[derive(Debug, Clone)]
pub struct PhysicalField {
    grid: Arc<LayerGrid>,
    rank: Rank,
    data: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(grid: &Arc<LayerGrid>, rank: Rank) -> Self {
        let len = rank.components(grid.dim()) * grid.n_points() * grid.n_vertical();
        Self {
            grid: grid.clone(),
            rank,
            data: vec![0.0; len],
        }
    }

    /// Sample `f(x', z)` at every grid point; `f` returns one value per component.
    pub fn from_fn<F>(grid: &Arc<LayerGrid>, rank: Rank, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> Vec<f64>,
    {
        let mut out = Self::zeros(grid, rank);
        let nc = out.n_components();
        for p in 0..grid.n_points() {
            let x = grid.point_coords(p);
            for (i, &z) in grid.vertical_nodes().iter().enumerate() {
                let v = f(&x, z);
                assert_eq!(v.len(), nc, "component count");
                for (c, vc) in v.into_iter().enumerate() {
                    out.set(c, p, i, vc);
                }
            }
        }
        out
    }

    pub fn from_raw(grid: &Arc<LayerGrid>, rank: Rank, data: Vec<f64>) -> Result<Self> {
        let len = rank.components(grid.dim()) * grid.n_points() * grid.n_vertical();
        if data.len() != len {
            return Err(Error::ShapeMismatch {
                expected: format!("{len} samples"),
                found: format!("{} samples", data.len()),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            rank,
            data,
        })
    }

    pub fn grid(&self) -> &Arc<LayerGrid> {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn n_components(&self) -> usize {
        self.rank.components(self.grid.dim())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    fn offset(&self, c: usize, p: usize, i: usize) -> usize {
        (c * self.grid.n_points() + p) * self.grid.n_vertical() + i
    }

    #[inline]
    pub fn get(&self, c: usize, p: usize, i: usize) -> f64 {
        self.data[self.offset(c, p, i)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, p: usize, i: usize, v: f64) {
        let o = self.offset(c, p, i);
        self.data[o] = v;
    }

    /// All components at one point, in storage order.
    pub fn point_values(&self, p: usize, i: usize) -> Vec<f64> {
        (0..self.n_components()).map(|c| self.get(c, p, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Horizontal Fourier coefficients `f^(k', z_i)` of a real or complex field.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<LayerGrid>,
    rank: Rank,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<LayerGrid>, rank: Rank) -> Self {
        let len = rank.components(grid.dim()) * grid.n_points() * grid.n_vertical();
        Self {
            grid: grid.clone(),
            rank,
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Transform of samples of `f(x', z)`; see [`PhysicalField::from_fn`].
    pub fn from_fn<F>(grid: &Arc<LayerGrid>, rank: Rank, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> Vec<f64>,
    {
        forward_transform(&PhysicalField::from_fn(grid, rank, f))
    }

    /// Stack scalar fields into a vector (N components) or matrix (N^2).
    pub fn from_components(components: &[SpectralField]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("no components".into()))?;
        let grid = first.grid.clone();
        let dim = grid.dim();
        let rank = match components.len() {
            n if n == dim => Rank::Vector,
            n if n == dim * dim => Rank::Matrix,
            1 => Rank::Scalar,
            n => {
                return Err(Error::ShapeMismatch {
                    expected: format!("1, {dim} or {} components", dim * dim),
                    found: n.to_string(),
                })
            }
        };
        let mut data = Vec::with_capacity(components.len() * first.data.len());
        for c in components {
            same_grid(&grid, &c.grid)?;
            if c.rank != Rank::Scalar {
                return Err(Error::InvalidArgument("components must be scalar".into()));
            }
            data.extend_from_slice(&c.data);
        }
        Ok(Self { grid, rank, data })
    }

    pub fn grid(&self) -> &Arc<LayerGrid> {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn n_components(&self) -> usize {
        self.rank.components(self.grid.dim())
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    fn block(&self) -> usize {
        self.grid.n_points() * self.grid.n_vertical()
    }

    /// Vertical profile of component `c` of mode `m`.
    pub fn profile(&self, c: usize, m: usize) -> &[Complex64] {
        let nz = self.grid.n_vertical();
        let o = c * self.block() + m * nz;
        &self.data[o..o + nz]
    }

    pub fn profile_mut(&mut self, c: usize, m: usize) -> &mut [Complex64] {
        let nz = self.grid.n_vertical();
        let o = c * self.block() + m * nz;
        &mut self.data[o..o + nz]
    }

    pub fn component(&self, c: usize) -> SpectralField {
        let b = self.block();
        SpectralField {
            grid: self.grid.clone(),
            rank: Rank::Scalar,
            data: self.data[c * b..(c + 1) * b].to_vec(),
        }
    }

    pub fn components(&self) -> Vec<SpectralField> {
        (0..self.n_components()).map(|c| self.component(c)).collect()
    }

    pub fn set_component(&mut self, c: usize, value: &SpectralField) -> Result<()> {
        same_grid(&self.grid, &value.grid)?;
        let b = self.block();
        self.data[c * b..(c + 1) * b].copy_from_slice(&value.data);
        Ok(())
    }

    pub fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        if self.rank != other.rank {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.rank),
                found: format!("{:?}", other.rank),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &SpectralField) -> Result<()> {
        self.check_compatible(x)?;
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += v * a;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Discrete L2 norm of the coefficient array (Parseval-compatible).
    pub fn coefficient_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Zero every coefficient on a Nyquist mode.
    pub fn zero_nyquist(&mut self) {
        let nz = self.grid.n_vertical();
        let modes: Vec<usize> = (0..self.grid.n_points())
            .filter(|&m| self.grid.modes()[m].nyquist)
            .collect();
        for c in 0..self.n_components() {
            for &m in &modes {
                let o = c * self.block() + m * nz;
                self.data[o..o + nz].iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            }
        }
    }

    /// Largest deviation from Hermitian symmetry `f^(-k) = conj f^(k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let nz = self.grid.n_vertical();
        let mut worst: f64 = 0.0;
        for c in 0..self.n_components() {
            for m in 0..self.grid.n_points() {
                let mc = self.grid.conjugate_position(m);
                let a = self.profile(c, m);
                let b = self.profile(c, mc);
                for i in 0..nz {
                    worst = worst.max((a[i] - b[i].conj()).norm());
                }
            }
        }
        worst
    }

    /// Values at the top node `z = d`, indexed `[component][mode]`.
    pub fn top_trace(&self) -> Vec<Vec<Complex64>> {
        let nz = self.grid.n_vertical();
        (0..self.n_components())
            .map(|c| {
                (0..self.grid.n_points())
                    .map(|m| self.profile(c, m)[nz - 1])
                    .collect()
            })
            .collect()
    }
}

impl<'a> Add<&'a SpectralField> for &'a SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &'a SpectralField) -> SpectralField {
        self.check_compatible(rhs).expect("incompatible fields in addition");
        let mut out = self.clone();
        out.data.iter_mut().zip(&rhs.data).for_each(|(a, b)| *a += b);
        out
    }
}

impl<'a> Sub<&'a SpectralField> for &'a SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &'a SpectralField) -> SpectralField {
        self.check_compatible(rhs).expect("incompatible fields in subtraction");
        let mut out = self.clone();
        out.data.iter_mut().zip(&rhs.data).for_each(|(a, b)| *a -= b);
        out
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

/// Horizontal FFT of every component at every vertical node, normalized so
/// that the inverse is a plain sum over modes.
pub fn forward_transform(field: &PhysicalField) -> SpectralField {
    let grid = field.grid.clone();
    let mut out = SpectralField::zeros(&grid, field.rank);
    let np = grid.n_points();
    let nz = grid.n_vertical();
    let scale = 1.0 / np as f64;
    let mut line = vec![Complex64::new(0.0, 0.0); np];
    for c in 0..field.n_components() {
        for i in 0..nz {
            for (p, l) in line.iter_mut().enumerate() {
                *l = Complex64::new(field.get(c, p, i), 0.0);
            }
            horizontal_fft(&grid, &mut line, true);
            for (m, l) in line.iter().enumerate() {
                out.profile_mut(c, m)[i] = l * scale;
            }
        }
    }
    out
}

/// Inverse of [`forward_transform`]. Imaginary parts are discarded; for a
/// Hermitian-symmetric field they are at round-off level.
pub fn inverse_transform(field: &SpectralField) -> PhysicalField {
    inverse_transform_checked(field).0
}

/// Inverse transform together with the largest discarded imaginary part.
pub fn inverse_transform_checked(field: &SpectralField) -> (PhysicalField, f64) {
    let grid = field.grid.clone();
    let mut out = PhysicalField::zeros(&grid, field.rank);
    let np = grid.n_points();
    let nz = grid.n_vertical();
    let mut line = vec![Complex64::new(0.0, 0.0); np];
    let mut max_imag: f64 = 0.0;
    for c in 0..field.n_components() {
        for i in 0..nz {
            for (m, l) in line.iter_mut().enumerate() {
                *l = field.profile(c, m)[i];
            }
            horizontal_fft(&grid, &mut line, false);
            for (p, l) in line.iter().enumerate() {
                out.set(c, p, i, l.re);
                max_imag = max_imag.max(l.im.abs());
            }
        }
    }
    (out, max_imag)
}

fn horizontal_fft(grid: &LayerGrid, line: &mut [Complex64], forward: bool) {
    let plan = if forward {
        &grid.plans.forward
    } else {
        &grid.plans.inverse
    };
    let n = grid.n_horizontal();
    match grid.dim() {
        2 => plan.process(line),
        _ => {
            // rows (contiguous in the second index)
            for row in line.chunks_mut(n) {
                plan.process(row);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = line[i * n + j];
                }
                plan.process(&mut col);
                for i in 0..n {
                    line[i * n + j] = col[i];
                }
            }
        }
    }
}

/// Symbol of `d/dx_axis` for a horizontal axis; zero on the Nyquist index.
pub fn horizontal_symbol(grid: &LayerGrid, mode: usize, axis: usize) -> Complex64 {
    let m = &grid.modes()[mode];
    let nyq = -(grid.n_horizontal() as i64) / 2;
    if m.index[axis] == nyq {
        Complex64::new(0.0, 0.0)
    } else {
        I * m.frequency[axis]
    }
}

/// Apply a real matrix to every vertical profile of a field.
pub(crate) fn apply_vertical(field: &SpectralField, mat: &nalgebra::DMatrix<f64>) -> SpectralField {
    let grid = field.grid.clone();
    let nz = grid.n_vertical();
    let mut out = SpectralField::zeros(&grid, field.rank);
    for c in 0..field.n_components() {
        for m in 0..grid.n_points() {
            let src = field.profile(c, m);
            let dst = out.profile_mut(c, m);
            for (r, d) in dst.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..nz {
                    acc += src[k] * mat[(r, k)];
                }
                *d = acc;
            }
        }
    }
    out
}

/// Collocation derivative in `z` of order 1 or 2.
pub fn vertical_derivative(field: &SpectralField, order: usize) -> Result<SpectralField> {
    let grid = field.grid.clone();
    match order {
        1 | 2 if grid.n_vertical() < order + 2 => Err(Error::InvalidGrid(format!(
            "{} vertical nodes are too few for order {order}",
            grid.n_vertical()
        ))),
        1 => Ok(apply_vertical(field, grid.d1())),
        2 => Ok(apply_vertical(field, grid.d2())),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

/// Partial derivative along `axis` (`0..N-1`; the last axis is `z`).
pub fn partial(field: &SpectralField, axis: usize) -> SpectralField {
    let grid = field.grid.clone();
    let dim = grid.dim();
    assert!(axis < dim, "axis {axis} out of range");
    if axis == dim - 1 {
        return apply_vertical(field, grid.d1());
    }
    let mut out = field.clone();
    for c in 0..field.n_components() {
        for m in 0..grid.n_points() {
            let s = horizontal_symbol(&grid, m, axis);
            out.profile_mut(c, m).iter_mut().for_each(|v| *v *= s);
        }
    }
    out
}

/// Gradient: scalar to vector, vector to the Jacobian matrix `J_ik = d_k u_i`.
pub fn gradient(field: &SpectralField) -> Result<SpectralField> {
    let dim = field.grid.dim();
    let rank = field.rank.raised()?;
    let mut out = SpectralField::zeros(&field.grid, rank);
    for c in 0..field.n_components() {
        let comp = field.component(c);
        for k in 0..dim {
            out.set_component(c * dim + k, &partial(&comp, k))?;
        }
    }
    Ok(out)
}

/// Divergence of a vector field, or row-wise divergence `(Div M)_i = sum_j d_j M_ij`.
pub fn divergence(field: &SpectralField) -> Result<SpectralField> {
    let grid = field.grid.clone();
    let dim = grid.dim();
    match field.rank {
        Rank::Vector => {
            let mut out = SpectralField::zeros(&grid, Rank::Scalar);
            for j in 0..dim {
                out.axpy(1.0, &partial(&field.component(j), j))?;
            }
            Ok(out)
        }
        Rank::Matrix => {
            let mut rows = Vec::with_capacity(dim);
            for i in 0..dim {
                let mut acc = SpectralField::zeros(&grid, Rank::Scalar);
                for j in 0..dim {
                    acc.axpy(1.0, &partial(&field.component(i * dim + j), j))?;
                }
                rows.push(acc);
            }
            SpectralField::from_components(&rows)
        }
        Rank::Scalar => Err(Error::InvalidArgument("divergence of a scalar field".into())),
    }
}

/// Componentwise Laplacian, consistent with `divergence(gradient(.))`.
pub fn laplacian(field: &SpectralField) -> SpectralField {
    let grid = field.grid.clone();
    let dim = grid.dim();
    let mut out = apply_vertical(field, grid.d2());
    for c in 0..field.n_components() {
        for m in 0..grid.n_points() {
            let mut s = Complex64::new(0.0, 0.0);
            for a in 0..dim - 1 {
                let k = horizontal_symbol(&grid, m, a);
                s += k * k;
            }
            let src: Vec<Complex64> = field.profile(c, m).to_vec();
            for (d, v) in out.profile_mut(c, m).iter_mut().zip(src) {
                *d += v * s;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_has_only_mean_mode() {
        let g = make_grid(2, 1.0, 2.0 * PI, 8, 9).unwrap();
        let f = SpectralField::from_fn(&g, Rank::Scalar, |_, _| vec![1.0]);
        for m in 0..g.n_points() {
            for v in f.profile(0, m) {
                if m == 0 {
                    assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
                } else {
                    assert!(v.norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn single_harmonic_occupies_plus_minus_one() {
        let g = make_grid(2, 1.0, 2.0 * PI, 8, 9).unwrap();
        let f = SpectralField::from_fn(&g, Rank::Scalar, |x, z| vec![x[0].sin() * (1.0 + z * z)]);
        let p1 = g.mode_position(&[1]).unwrap();
        let m1 = g.mode_position(&[-1]).unwrap();
        for m in 0..g.n_points() {
            let mag = f.profile(0, m).iter().fold(0.0f64, |a, v| a.max(v.norm()));
            if m == p1 || m == m1 {
                assert!(mag > 0.4);
            } else {
                assert!(mag < 1e-15, "mode {m} has {mag}");
            }
        }
    }

    #[test]
    fn round_trip_and_parseval_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2usize, 3] {
            let g = make_grid(dim, 1.3, 2.0, 8, 7).unwrap();
            for _ in 0..100 {
                let data: Vec<f64> = (0..g.n_points() * g.n_vertical() * dim)
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                let phys = PhysicalField::from_raw(&g, Rank::Vector, data.clone()).unwrap();
                let spec = forward_transform(&phys);
                let (back, imag) = inverse_transform_checked(&spec);
                let norm = data.iter().map(|v| v * v).sum::<f64>().sqrt();
                let err = back
                    .data()
                    .iter()
                    .zip(&data)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(err < 1e-12 * norm);
                assert!(imag < 1e-12 * norm);
                // Parseval: sum |f|^2 / n_points = sum |c|^2
                let lhs = norm * norm / g.n_points() as f64;
                let rhs = spec.coefficient_norm().powi(2);
                assert!((lhs - rhs).abs() < 1e-10 * lhs);
                assert!(spec.hermitian_defect() < 1e-13);
            }
        }
    }

    #[test]
    fn vertical_derivatives_of_polynomials() {
        let g = make_grid(2, 2.0, 1.0, 4, 9).unwrap();
        let lin = SpectralField::from_fn(&g, Rank::Scalar, |_, z| vec![z]);
        let d = vertical_derivative(&lin, 1).unwrap();
        let quad = SpectralField::from_fn(&g, Rank::Scalar, |_, z| vec![z * z]);
        let d2 = vertical_derivative(&quad, 2).unwrap();
        for i in 0..g.n_vertical() {
            assert!((d.profile(0, 0)[i].re - 1.0).abs() < 1e-12);
            assert!((d2.profile(0, 0)[i].re - 2.0).abs() < 1e-11);
        }
        assert!(matches!(vertical_derivative(&lin, 3), Err(Error::UnsupportedOrder(3))));
    }

    #[test]
    fn vertical_derivative_of_cosine_profile() {
        let d = 1.0;
        let g = make_grid(2, d, 2.0 * PI, 4, 33).unwrap();
        let k = PI / (2.0 * d);
        let f = SpectralField::from_fn(&g, Rank::Scalar, |_, z| vec![(k * z).cos()]);
        let df = vertical_derivative(&f, 1).unwrap();
        let err = g
            .vertical_nodes()
            .iter()
            .enumerate()
            .map(|(i, z)| (df.profile(0, 0)[i].re + k * (k * z).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "max error {err}");
    }

    #[test]
    fn divergence_of_gradient_matches_laplacian() {
        let g = make_grid(3, 1.0, 2.0 * PI, 8, 9).unwrap();
        let f = SpectralField::from_fn(&g, Rank::Scalar, |x, z| {
            vec![(x[0] + 2.0 * x[1]).cos() * z * z + (3.0 * x[1]).sin()]
        });
        let a = divergence(&gradient(&f).unwrap()).unwrap();
        let b = laplacian(&f);
        assert!((&a - &b).max_abs() < 1e-10 * b.max_abs());
    }

    #[test]
    fn linear_operations_keep_hermitian_symmetry() {
        let g = make_grid(2, 1.0, 2.0 * PI, 8, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..2 * g.n_points() * g.n_vertical())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let f = forward_transform(&PhysicalField::from_raw(&g, Rank::Vector, data).unwrap());
        assert!(gradient(&f).unwrap().hermitian_defect() < 1e-12);
        assert!(divergence(&f).unwrap().hermitian_defect() < 1e-12);
        assert!(laplacian(&f).hermitian_defect() < 1e-11);
    }
}
