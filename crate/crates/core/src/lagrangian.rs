//! Lagrangian bookkeeping: the deformation `B = int_0^t grad u`, the inverse
//! `A^{-1}` of `A = I + B`, the nonlinear terms `F`, `G`, `G`-vector and `H`,
//! the flow map and the push-forward to the moving domain.
//!
//! Pointwise algebra runs on grid samples; derivatives are spectral in the
//! horizontal directions and Chebyshev in `z`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::{forward_transform, gradient, inverse_transform, laplacian, partial, same_grid, PhysicalField, Rank, SpectralField};
use crate::grid::LayerGrid;
use crate::norms::Trajectory;

/// Determinant below which the deformation is treated as degenerate.
pub const MIN_DETERMINANT: f64 = 0.1;

/// Row-major `n x n` matrix, `n <= 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Mat {
    n: usize,
    v: [f64; 9],
}

impl Mat {
    fn zero(n: usize) -> Self {
        Self { n, v: [0.0; 9] }
    }

    fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.v[i * n + i] = 1.0;
        }
        m
    }

    fn at(f: &PhysicalField, p: usize, i: usize) -> Self {
        let n = f.grid().dim();
        let mut m = Self::zero(n);
        for c in 0..n * n {
            m.v[c] = f.get(c, p, i);
        }
        m
    }

    fn store(&self, f: &mut PhysicalField, p: usize, i: usize) {
        for c in 0..self.n * self.n {
            f.set(c, p, i, self.v[c]);
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.n + j]
    }

    fn t(&self) -> Self {
        let mut m = Self::zero(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.v[j * self.n + i] = self.get(i, j);
            }
        }
        m
    }

    fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut m = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                m.v[i * n + j] = (0..n).map(|k| self.get(i, k) * o.get(k, j)).sum();
            }
        }
        m
    }

    fn add(&self, o: &Self) -> Self {
        let mut m = *self;
        m.v.iter_mut().zip(&o.v).for_each(|(a, b)| *a += b);
        m
    }

    fn sub(&self, o: &Self) -> Self {
        let mut m = *self;
        m.v.iter_mut().zip(&o.v).for_each(|(a, b)| *a -= b);
        m
    }

    fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        m.v.iter_mut().for_each(|a| *a *= s);
        m
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|k| self.get(i, k) * x[k]).sum()).collect()
    }

    fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    fn det(&self) -> f64 {
        let g = |i, j| self.get(i, j);
        match self.n {
            1 => g(0, 0),
            2 => g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0),
            _ => {
                g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                    + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
            }
        }
    }

    /// Inverse by the adjugate; exact for the identity.
    fn inverse(&self) -> Self {
        let n = self.n;
        let d = self.det();
        let g = |i, j| self.get(i, j);
        let mut m = Self::zero(n);
        match n {
            1 => m.v[0] = 1.0 / d,
            2 => {
                m.v = [g(1, 1) / d, -g(0, 1) / d, -g(1, 0) / d, g(0, 0) / d, 0.0, 0.0, 0.0, 0.0, 0.0];
            }
            _ => {
                for i in 0..3 {
                    for j in 0..3 {
                        let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                        let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                        m.v[i * 3 + j] = (g(r0, c0) * g(r1, c1) - g(r0, c1) * g(r1, c0)) / d;
                    }
                }
            }
        }
        m
    }

    fn max_abs(&self) -> f64 {
        self.v[..self.n * self.n].iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn singular_values(&self) -> Vec<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.v[..self.n * self.n])
            .singular_values()
            .as_slice()
            .to_vec()
    }
}

fn vector_at(f: &PhysicalField, p: usize, i: usize) -> Vec<f64> {
    f.point_values(p, i)
}

/// Run `op` at every grid point, writing `out_rank` values.
fn pointwise<F>(grid: &Arc<LayerGrid>, out_rank: Rank, op: F) -> PhysicalField
where
    F: Fn(usize, usize) -> Vec<f64>,
{
    let mut out = PhysicalField::zeros(grid, out_rank);
    for p in 0..grid.n_points() {
        for i in 0..grid.n_vertical() {
            for (c, v) in op(p, i).into_iter().enumerate() {
                out.set(c, p, i, v);
            }
        }
    }
    out
}

fn identity_field(grid: &Arc<LayerGrid>) -> PhysicalField {
    let n = grid.dim();
    pointwise(grid, Rank::Matrix, |_, _| Mat::identity(n).v[..n * n].to_vec())
}

/// `B`, `A = I + B`, `A^{-1}`, `A^{-1} - I` and `det A` at one time.
#[derive(Debug, Clone)]
pub struct DeformationState {
    time: f64,
    b: SpectralField,
    b_points: PhysicalField,
    a: PhysicalField,
    ainv: PhysicalField,
    cal_b: PhysicalField,
    cal_b_hat: SpectralField,
    det_a: PhysicalField,
}

impl DeformationState {
    /// `B = 0` at `t = 0`.
    pub fn identity(grid: &Arc<LayerGrid>) -> Self {
        let zero = PhysicalField::zeros(grid, Rank::Matrix);
        let mut det = PhysicalField::zeros(grid, Rank::Scalar);
        det.data_mut().iter_mut().for_each(|d| *d = 1.0);
        Self {
            time: 0.0,
            b: SpectralField::zeros(grid, Rank::Matrix),
            b_points: zero.clone(),
            a: identity_field(grid),
            ainv: identity_field(grid),
            cal_b: zero,
            cal_b_hat: SpectralField::zeros(grid, Rank::Matrix),
            det_a: det,
        }
    }

    /// State for a given deformation `B` (a matrix field).
    pub fn from_deformation(b: SpectralField, time: f64) -> Result<Self> {
        if b.rank() != Rank::Matrix {
            return Err(Error::InvalidArgument("deformation must be a matrix field".into()));
        }
        let grid = b.grid().clone();
        let n = grid.dim();
        let b_points = inverse_transform(&b);
        let mut a = PhysicalField::zeros(&grid, Rank::Matrix);
        let mut ainv = PhysicalField::zeros(&grid, Rank::Matrix);
        let mut cal_b = PhysicalField::zeros(&grid, Rank::Matrix);
        let mut det_a = PhysicalField::zeros(&grid, Rank::Scalar);
        let mut worst = f64::INFINITY;
        for p in 0..grid.n_points() {
            for i in 0..grid.n_vertical() {
                let am = Mat::identity(n).add(&Mat::at(&b_points, p, i));
                let d = am.det();
                worst = worst.min(d);
                let inv = am.inverse();
                am.store(&mut a, p, i);
                inv.store(&mut ainv, p, i);
                inv.sub(&Mat::identity(n)).store(&mut cal_b, p, i);
                det_a.set(0, p, i, d);
            }
        }
        if !(worst >= MIN_DETERMINANT) {
            return Err(Error::Degenerate { det: worst, time });
        }
        let cal_b_hat = forward_transform(&cal_b);
        Ok(Self {
            time,
            b,
            b_points,
            a,
            ainv,
            cal_b,
            cal_b_hat,
            det_a,
        })
    }

    pub fn grid(&self) -> &Arc<LayerGrid> {
        self.b.grid()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn b(&self) -> &SpectralField {
        &self.b
    }

    pub fn a(&self) -> &PhysicalField {
        &self.a
    }

    pub fn ainv(&self) -> &PhysicalField {
        &self.ainv
    }

    pub fn cal_b(&self) -> &PhysicalField {
        &self.cal_b
    }

    pub fn det_a(&self) -> &PhysicalField {
        &self.det_a
    }

    /// `max |A A^{-1} - I|` over the grid.
    pub fn inverse_residual(&self) -> f64 {
        let grid = self.grid();
        let n = grid.dim();
        let mut worst: f64 = 0.0;
        for p in 0..grid.n_points() {
            for i in 0..grid.n_vertical() {
                let r = Mat::at(&self.a, p, i).mul(&Mat::at(&self.ainv, p, i)).sub(&Mat::identity(n));
                worst = worst.max(r.max_abs());
            }
        }
        worst
    }

    /// `max |det A - 1|`.
    pub fn max_det_defect(&self) -> f64 {
        self.det_a.data().iter().fold(0.0, |m, d| m.max((d - 1.0).abs()))
    }
}

/// Advance `B` by the trapezoid rule over one step of length `tau`.
pub fn accumulate_deformation(
    state: &DeformationState,
    grad_prev: &SpectralField,
    grad_next: &SpectralField,
    tau: f64,
) -> Result<DeformationState> {
    same_grid(state.grid(), grad_prev.grid())?;
    same_grid(state.grid(), grad_next.grid())?;
    if grad_prev.rank() != Rank::Matrix || grad_next.rank() != Rank::Matrix {
        return Err(Error::InvalidArgument("velocity gradients must be matrix fields".into()));
    }
    let mut b = state.b.clone();
    b.axpy(0.5 * tau, grad_prev)?;
    b.axpy(0.5 * tau, grad_next)?;
    DeformationState::from_deformation(b, state.time + tau)
}

/// Deformation states at every sample of a trajectory.
pub fn deformation_history(traj: &Trajectory) -> Result<Vec<DeformationState>> {
    let first = traj.samples().first().ok_or(Error::EmptyTrajectory)?;
    let grid = first.velocity.grid().clone();
    let mut states = Vec::with_capacity(traj.len());
    states.push(DeformationState::identity(&grid));
    let mut prev = gradient(&first.velocity)?;
    for n in 1..traj.len() {
        let next = gradient(traj.velocity(n))?;
        let s = accumulate_deformation(&states[n - 1], &prev, &next, traj.step())?;
        states.push(s);
        prev = next;
    }
    Ok(states)
}

fn check_velocity(state: &DeformationState, u: &SpectralField) -> Result<()> {
    same_grid(state.grid(), u.grid())?;
    if u.rank() != Rank::Vector {
        return Err(Error::InvalidArgument("expected a vector field".into()));
    }
    Ok(())
}

/// `tr(calB J)` at every point, `J = grad u`.
fn cal_b_contraction(state: &DeformationState, jac: &PhysicalField) -> PhysicalField {
    pointwise(state.grid(), Rank::Scalar, |p, i| {
        vec![Mat::at(&state.cal_b, p, i).mul(&Mat::at(jac, p, i)).trace()]
    })
}

/// `G(u) = -calB^T : grad u`.
pub fn nonlinear_g(state: &DeformationState, u: &SpectralField) -> Result<SpectralField> {
    check_velocity(state, u)?;
    let jac = inverse_transform(&gradient(u)?);
    Ok(forward_transform(&cal_b_contraction(state, &jac)).scaled(-1.0))
}

/// `G(u) = -calB u`, a vector field whose divergence is `G(u)` when `A` is a flow-map gradient.
pub fn nonlinear_g_vector(state: &DeformationState, u: &SpectralField) -> Result<SpectralField> {
    check_velocity(state, u)?;
    let up = inverse_transform(u);
    let out = pointwise(state.grid(), Rank::Vector, |p, i| {
        Mat::at(&state.cal_b, p, i).apply(&vector_at(&up, p, i)).into_iter().map(|x| -x).collect()
    });
    Ok(forward_transform(&out))
}

/// `H(u) = -mu [D calB^T + (J calB + B^T J (I + calB)) (I + calB^T)]`, `D = J + J^T`.
pub fn nonlinear_h(state: &DeformationState, u: &SpectralField, mu: f64) -> Result<SpectralField> {
    check_velocity(state, u)?;
    let n = state.grid().dim();
    let jac = inverse_transform(&gradient(u)?);
    let out = pointwise(state.grid(), Rank::Matrix, |p, i| {
        let j = Mat::at(&jac, p, i);
        let cb = Mat::at(&state.cal_b, p, i);
        let bt = Mat::at(&state.b_points, p, i).t();
        let id = Mat::identity(n);
        let d = j.add(&j.t());
        let inner = j.mul(&cb).add(&bt.mul(&j).mul(&id.add(&cb)));
        let h = d.mul(&cb.t()).add(&inner.mul(&id.add(&cb.t()))).scale(-mu);
        h.v[..n * n].to_vec()
    });
    Ok(forward_transform(&out))
}

/// The `e_N` column of a matrix field, as a vector field.
pub fn normal_column(m: &SpectralField) -> Result<SpectralField> {
    if m.rank() != Rank::Matrix {
        return Err(Error::InvalidArgument("expected a matrix field".into()));
    }
    let n = m.grid().dim();
    let cols: Vec<SpectralField> = (0..n).map(|i| m.component(i * n + n - 1)).collect();
    SpectralField::from_components(&cols)
}

/// `H(u) e_N` as a vector field (only its top trace enters the boundary condition).
pub fn nonlinear_h_trace(state: &DeformationState, u: &SpectralField, mu: f64) -> Result<SpectralField> {
    normal_column(&nonlinear_h(state, u, mu)?)
}

/// `F(u) = -B^T d_t u + mu B^T Delta u + mu grad(calB^T : grad u) + mu (I + B^T)(L2 u + L1 u)`
/// with `L2 = sum calB_ji (2 delta_ik + calB_ki) d_j d_k` and
/// `L1 = sum (delta_ij + calB_ji)(d_j calB_ki) d_k`.
pub fn nonlinear_f(state: &DeformationState, du_dt: &SpectralField, u: &SpectralField, mu: f64) -> Result<SpectralField> {
    check_velocity(state, u)?;
    check_velocity(state, du_dt)?;
    let grid = state.grid().clone();
    let n = grid.dim();
    let jac_hat = gradient(u)?;
    let jac = inverse_transform(&jac_hat);
    let hess: Vec<PhysicalField> = u
        .components()
        .iter()
        .map(|c| Ok(inverse_transform(&gradient(&gradient(c)?)?)))
        .collect::<Result<_>>()?;
    let lap = inverse_transform(&laplacian(u));
    let dt = inverse_transform(du_dt);
    let dcal: Vec<PhysicalField> = (0..n).map(|j| inverse_transform(&partial(&state.cal_b_hat, j))).collect();
    let contraction = forward_transform(&cal_b_contraction(state, &jac));
    let grad_c = inverse_transform(&gradient(&contraction)?);
    let out = pointwise(&grid, Rank::Vector, |p, i| {
        let cb = Mat::at(&state.cal_b, p, i);
        let ainv = Mat::at(&state.ainv, p, i);
        let bt = Mat::at(&state.b_points, p, i).t();
        // second-order coefficients 2 calB + calB calB^T
        let c2 = cb.scale(2.0).add(&cb.mul(&cb.t()));
        // first-order coefficients c_k = sum_ij ainv_ji d_j calB_ki
        let c1: Vec<f64> = (0..n)
            .map(|k| {
                let mut s = 0.0;
                for ii in 0..n {
                    for j in 0..n {
                        s += ainv.get(j, ii) * dcal[j].get(k * n + ii, p, i);
                    }
                }
                s
            })
            .collect();
        let w: Vec<f64> = (0..n)
            .map(|l| {
                let mut s = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        s += c2.get(j, k) * hess[l].get(j * n + k, p, i);
                    }
                    s += c1[j] * jac.get(l * n + j, p, i);
                }
                s
            })
            .collect();
        let id_bt = Mat::identity(n).add(&bt);
        let term_dt = bt.apply(&vector_at(&dt, p, i));
        let term_lap = bt.apply(&vector_at(&lap, p, i));
        let term_w = id_bt.apply(&w);
        (0..n)
            .map(|l| -term_dt[l] + mu * (term_lap[l] + grad_c.get(l, p, i) + term_w[l]))
            .collect()
    });
    Ok(forward_transform(&out))
}

/// Particle positions `Theta(xi, t_n) = xi + int_0^{t_n} u` and `grad Theta`.
#[derive(Debug, Clone)]
pub struct FlowMap {
    step: f64,
    displacement: Vec<SpectralField>,
    jacobian: Vec<PhysicalField>,
    integrated_gradient: f64,
}

impl FlowMap {
    pub fn len(&self) -> usize {
        self.displacement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacement.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `Theta - xi` at sample `n`.
    pub fn displacement(&self, n: usize) -> &SpectralField {
        &self.displacement[n]
    }

    /// `Theta(., t_n)` at the grid points.
    pub fn theta(&self, n: usize) -> PhysicalField {
        let d = &self.displacement[n];
        let disp = inverse_transform(d);
        let grid = d.grid();
        let nodes = grid.vertical_nodes();
        let dim = grid.dim();
        pointwise(grid, Rank::Vector, |p, i| {
            let mut x = grid.point_coords(p);
            x.push(nodes[i]);
            (0..dim).map(|c| x[c] + disp.get(c, p, i)).collect()
        })
    }

    /// `grad Theta(., t_n)` at the grid points.
    pub fn jacobian(&self, n: usize) -> &PhysicalField {
        &self.jacobian[n]
    }

    /// `max |det grad Theta(., t_n) - 1|`.
    pub fn det_defect(&self, n: usize) -> f64 {
        let jac = &self.jacobian[n];
        let grid = jac.grid();
        let mut worst: f64 = 0.0;
        for p in 0..grid.n_points() {
            for i in 0..grid.n_vertical() {
                worst = worst.max((Mat::at(jac, p, i).det() - 1.0).abs());
            }
        }
        worst
    }

    /// `sum_n tau |grad u(t_n)|_inf` over all samples (spectral norm per point).
    pub fn integrated_gradient(&self) -> f64 {
        self.integrated_gradient
    }
}

/// Accumulate the flow map of a Lagrangian velocity trajectory by the trapezoid rule.
pub fn flow_map(traj: &Trajectory) -> Result<FlowMap> {
    let first = traj.samples().first().ok_or(Error::EmptyTrajectory)?;
    let grid = first.velocity.grid().clone();
    let n = grid.dim();
    let tau = traj.step();
    let mut displacement = Vec::with_capacity(traj.len());
    let mut jacobian = Vec::with_capacity(traj.len());
    let mut disp = SpectralField::zeros(&grid, Rank::Vector);
    let mut integrated = 0.0;
    for k in 0..traj.len() {
        if k > 0 {
            disp.axpy(0.5 * tau, traj.velocity(k - 1))?;
            disp.axpy(0.5 * tau, traj.velocity(k))?;
        }
        let jac_u = inverse_transform(&gradient(traj.velocity(k))?);
        let mut sup: f64 = 0.0;
        for p in 0..grid.n_points() {
            for i in 0..grid.n_vertical() {
                let m = Mat::at(&jac_u, p, i);
                if m.max_abs() > 0.0 {
                    sup = sup.max(m.singular_values().into_iter().fold(0.0, f64::max));
                }
            }
        }
        integrated += tau * sup;
        let gd = inverse_transform(&gradient(&disp)?);
        jacobian.push(pointwise(&grid, Rank::Matrix, |p, i| {
            Mat::identity(n).add(&Mat::at(&gd, p, i)).v[..n * n].to_vec()
        }));
        displacement.push(disp.clone());
    }
    Ok(FlowMap {
        step: tau,
        displacement,
        jacobian,
        integrated_gradient: integrated,
    })
}

/// Bijectivity diagnostics of a flow map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianReport {
    /// Smallest singular value of `grad Theta` over all points and samples.
    pub min_singular_value: f64,
    pub max_det_defect: f64,
    pub integrated_gradient: f64,
    /// False only if `integrated_gradient <= 1/4` but `min_singular_value < 3/4`.
    pub pass: bool,
}

pub fn jacobian_diagnostics(flow: &FlowMap) -> JacobianReport {
    let mut smin = f64::INFINITY;
    let mut defect: f64 = 0.0;
    for jac in &flow.jacobian {
        let grid = jac.grid();
        for p in 0..grid.n_points() {
            for i in 0..grid.n_vertical() {
                let m = Mat::at(jac, p, i);
                defect = defect.max((m.det() - 1.0).abs());
                smin = smin.min(m.singular_values().into_iter().fold(f64::INFINITY, f64::min));
            }
        }
    }
    let ig = flow.integrated_gradient;
    JacobianReport {
        min_singular_value: smin,
        max_det_defect: defect,
        integrated_gradient: ig,
        pass: ig > 0.25 || smin >= 0.75,
    }
}

/// Eulerian samples `(x, v(x), pi(x))` at `x = Theta(xi, t)` with
/// quadrature weights already multiplied by `|det grad Theta|`.
#[derive(Debug, Clone)]
pub struct EulerianSamples {
    pub positions: Vec<Vec<f64>>,
    pub velocity: Vec<Vec<f64>>,
    pub pressure: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EulerianSamples {
    /// `(sum w |v|^q)^{1/q}`.
    pub fn velocity_lq_norm(&self, q: f64) -> f64 {
        self.velocity
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * v.iter().map(|x| x * x).sum::<f64>().powf(0.5 * q))
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

/// Forward-sample velocity and pressure of sample `n` on the moving domain.
pub fn push_forward(traj: &Trajectory, flow: &FlowMap, n: usize) -> Result<EulerianSamples> {
    if n >= traj.len() || n >= flow.len() {
        return Err(Error::InvalidArgument(format!("sample {n} is outside the trajectory")));
    }
    let u = inverse_transform(traj.velocity(n));
    let q = inverse_transform(traj.pressure(n));
    let theta = flow.theta(n);
    let jac = flow.jacobian(n);
    let grid = u.grid().clone();
    let w = grid.cc_weights();
    let cell = grid.cell_area();
    let mut out = EulerianSamples {
        positions: Vec::new(),
        velocity: Vec::new(),
        pressure: Vec::new(),
        weights: Vec::new(),
    };
    for p in 0..grid.n_points() {
        for i in 0..grid.n_vertical() {
            let det = Mat::at(jac, p, i).det();
            if !(det > 0.0) {
                return Err(Error::Degenerate {
                    det,
                    time: n as f64 * flow.step,
                });
            }
            out.positions.push(theta.point_values(p, i));
            out.velocity.push(u.point_values(p, i));
            out.pressure.push(q.get(0, p, i));
            out.weights.push(w[i] * cell * det);
        }
    }
    Ok(out)
}
