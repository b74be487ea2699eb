//! Numerical solution of the Cauchy problem u_t = Δ_F u on a truncated tree.
//!
//! The time scheme works on the integrating-factor form
//! d/dt (e^t u) = e^t F(children). Over one step the kernel e^z is
//! integrated exactly against a linear interpolant of F (weights w_a, w_b
//! below), with the endpoint value supplied by a first-pass explicit
//! predictor and one corrector sweep. The scheme is second order in dt,
//! reproduces the pure-decay mode e^{-t} exactly, and its one-step update is
//! a positive combination with coefficients summing to one, so the discrete
//! maximum and comparison principles hold to rounding. Since the kernel
//! quadrature is exact, the discretized integral operator K_f keeps the
//! continuous contraction constant 1 - e^{-T}.
//!
//! Within a step, every vertex update depends only on the previous time
//! level; vertex sweeps run in parallel when the `parallel` feature is on
//! and the level is large enough to pay for it.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::AveragingSpec;
use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::tree::TreeShape;

/// Below this many vertices per level a parallel sweep is not worth it.
#[cfg(feature = "parallel")]
const PAR_MIN_LEN: usize = 4096;

/// Uniform grid t_k = k t_end / steps on [0, t_end].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::ParamDomain {
                name: "t_end",
                value: t_end,
                range: "(0, inf)",
            });
        }
        if steps == 0 {
            return Err(Error::ParamDomain {
                name: "steps",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        Ok(TimeGrid { t_end, steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    /// Node t_k.
    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.t_end / self.steps as f64
    }

    /// Number of nodes, steps + 1.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Value assigned to children below the truncation depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosureRule {
    /// Ghost vertices hold 0; exact for finite-support data with
    /// a(f) <= depth.
    ZeroBoundary,
    /// Ghost vertices follow the decaying eigen-solution
    /// k (1-lambda)^level e^{-lambda t}.
    GeometricEnvelope { k: f64, lambda: f64 },
    /// Ghost vertices follow the scaling eigen-solution
    /// c lambda^level e^{(lambda-1) t}.
    EigenExtension { c: f64, lambda: f64 },
}

impl ClosureRule {
    /// Value of a ghost vertex at the given level and time. All m ghost
    /// children of a truncation-boundary vertex share it, and F of an
    /// all-equal vector is that value, so one number per level suffices.
    pub fn ghost_value(&self, level: usize, t: f64) -> f64 {
        match *self {
            ClosureRule::ZeroBoundary => 0.0,
            ClosureRule::GeometricEnvelope { k, lambda } => {
                k * (1.0 - lambda).powi(level as i32) * (-lambda * t).exp()
            }
            ClosureRule::EigenExtension { c, lambda } => {
                c * lambda.powi(level as i32) * ((lambda - 1.0) * t).exp()
            }
        }
    }
}

/// u(x, t_k) on the truncated tree times the grid, stored time-major.
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub shape: TreeShape,
    pub grid: TimeGrid,
    pub closure: ClosureRule,
    pub spec: AveragingSpec,
    pub datum: InitialDatum,
    values: Vec<f64>,
}

impl SolutionField {
    pub fn at(&self, rank: usize, k: usize) -> f64 {
        self.values[k * self.shape.vertex_count() + rank]
    }

    /// All vertex values at node k, rank order.
    pub fn node_values(&self, k: usize) -> &[f64] {
        let nv = self.shape.vertex_count();
        &self.values[k * nv..(k + 1) * nv]
    }

    pub fn max_abs_at(&self, k: usize) -> f64 {
        self.node_values(k)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn sup_norm_trajectory(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|k| self.max_abs_at(k)).collect()
    }

    pub fn root_trajectory(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|k| self.at(0, k)).collect()
    }
}

/// out[x] = F(values of the children of x), with children below the
/// truncation supplied by the closure rule at time `t`.
pub fn apply_operator(
    shape: &TreeShape,
    spec: &AveragingSpec,
    closure: &ClosureRule,
    u: &[f64],
    t: f64,
    out: &mut [f64],
) {
    operator_impl(shape, spec, closure, u, t, out, true);
}

/// Sequential variant of [`apply_operator`], kept callable regardless of the
/// `parallel` feature so the two can be benchmarked against each other.
pub fn apply_operator_seq(
    shape: &TreeShape,
    spec: &AveragingSpec,
    closure: &ClosureRule,
    u: &[f64],
    t: f64,
    out: &mut [f64],
) {
    operator_impl(shape, spec, closure, u, t, out, false);
}

fn operator_impl(
    shape: &TreeShape,
    spec: &AveragingSpec,
    closure: &ClosureRule,
    u: &[f64],
    t: f64,
    out: &mut [f64],
    allow_parallel: bool,
) {
    debug_assert_eq!(u.len(), shape.vertex_count());
    debug_assert_eq!(out.len(), shape.vertex_count());
    let m = shape.branching();
    let depth = shape.depth();
    for level in 0..depth {
        let off = shape.level_offset(level);
        let cnt = shape.level_len(level);
        let child_off = shape.level_offset(level + 1);
        let dst = &mut out[off..off + cnt];
        let src = &u[child_off..child_off + cnt * m];
        map_level(dst, src, m, spec, allow_parallel);
    }
    // the stored bottom level sees only ghost children, all equal, and F of
    // an all-equal vector is that value
    let g = closure.ghost_value(depth + 1, t);
    out[shape.level_offset(depth)..].fill(g);
}

#[cfg(feature = "parallel")]
fn map_level(dst: &mut [f64], src: &[f64], m: usize, spec: &AveragingSpec, allow_parallel: bool) {
    if allow_parallel && dst.len() >= PAR_MIN_LEN {
        dst.par_iter_mut()
            .zip(src.par_chunks_exact(m))
            .for_each(|(o, ch)| *o = spec.eval_hot(ch));
    } else {
        for (o, ch) in dst.iter_mut().zip(src.chunks_exact(m)) {
            *o = spec.eval_hot(ch);
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn map_level(dst: &mut [f64], src: &[f64], m: usize, spec: &AveragingSpec, _allow_parallel: bool) {
    for (o, ch) in dst.iter_mut().zip(src.chunks_exact(m)) {
        *o = spec.eval_hot(ch);
    }
}

/// One-step driver holding the state and scratch buffers.
pub struct Stepper {
    shape: TreeShape,
    spec: AveragingSpec,
    closure: ClosureRule,
    grid: TimeGrid,
    u: Vec<f64>,
    f_cur: Vec<f64>,
    pred: Vec<f64>,
    f_pred: Vec<f64>,
    step: usize,
    em: f64,
    w_a: f64,
    w_b: f64,
}

impl Stepper {
    pub fn new(
        shape: TreeShape,
        spec: AveragingSpec,
        datum: &InitialDatum,
        grid: TimeGrid,
        closure: ClosureRule,
    ) -> Result<Self> {
        if spec.arity() != shape.branching() {
            return Err(Error::ArityMismatch {
                arity: spec.arity(),
                expected: shape.branching(),
            });
        }
        let u = datum.initial_values(&shape);
        let nv = u.len();
        let h = grid.dt();
        let (w_a, w_b) = kernel_weights(h);
        let mut f_cur = vec![0.0; nv];
        apply_operator(&shape, &spec, &closure, &u, 0.0, &mut f_cur);
        Ok(Stepper {
            shape,
            spec,
            closure,
            grid,
            u,
            f_cur,
            pred: vec![0.0; nv],
            f_pred: vec![0.0; nv],
            step: 0,
            em: (-h).exp(),
            w_a,
            w_b,
        })
    }

    pub fn t(&self) -> f64 {
        self.grid.node(self.step)
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// F(children) at the current (corrected) state.
    pub fn operator_values(&self) -> &[f64] {
        &self.f_cur
    }

    /// Kernel quadrature weights (w_a, w_b) for one step of width dt.
    pub fn kernel_weights(&self) -> (f64, f64) {
        (self.w_a, self.w_b)
    }

    /// March one step. Errors when a non-finite value appears, naming the
    /// offending vertex and step.
    pub fn advance(&mut self) -> Result<()> {
        let t1 = self.grid.node(self.step + 1);
        let w_sum = self.w_a + self.w_b;
        // explicit first pass
        for i in 0..self.u.len() {
            self.pred[i] = self.em * (self.u[i] + w_sum * self.f_cur[i]);
        }
        apply_operator(&self.shape, &self.spec, &self.closure, &self.pred, t1, &mut self.f_pred);
        // corrector sweep
        for i in 0..self.u.len() {
            self.u[i] = self.em * (self.u[i] + self.w_a * self.f_cur[i] + self.w_b * self.f_pred[i]);
        }
        self.step += 1;
        if let Some(rank) = self.u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure {
                vertex: self.shape.path_of(rank).to_string(),
                rank,
                step: self.step,
            });
        }
        apply_operator(&self.shape, &self.spec, &self.closure, &self.u, t1, &mut self.f_cur);
        Ok(())
    }
}

/// Exact integrals of e^z against the two linear hat functions on a step of
/// width h: the update is e^{t+h} u(t+h) = e^t (u(t) + w_a F(t) + w_b F(t+h)).
fn kernel_weights(h: f64) -> (f64, f64) {
    let em1 = h.exp_m1(); // e^h - 1, stable for small h
    let w_b = (1.0 + em1) - em1 / h;
    let w_a = em1 - w_b;
    (w_a, w_b)
}

/// Solve the initial-value problem, storing the full (vertex x time) field.
pub fn solve_ivp(
    shape: TreeShape,
    spec: AveragingSpec,
    datum: &InitialDatum,
    grid: TimeGrid,
    closure: ClosureRule,
) -> Result<SolutionField> {
    let nv = shape.vertex_count();
    let mut values = Vec::with_capacity(nv * grid.len());
    solve_with_observer(shape, spec, datum, grid, closure, |_, _, u| {
        values.extend_from_slice(u)
    })?;
    Ok(SolutionField {
        shape,
        grid,
        closure,
        spec,
        datum: datum.clone(),
        values,
    })
}

/// Streaming solve: the observer sees (node index, t_k, values) at every
/// node including k = 0, and only two time levels are ever held. Returns the
/// final values.
pub fn solve_with_observer(
    shape: TreeShape,
    spec: AveragingSpec,
    datum: &InitialDatum,
    grid: TimeGrid,
    closure: ClosureRule,
    mut observer: impl FnMut(usize, f64, &[f64]),
) -> Result<Vec<f64>> {
    let mut stepper = Stepper::new(shape, spec, datum, grid, closure)?;
    observer(0, 0.0, stepper.values());
    for k in 1..grid.len() {
        stepper.advance()?;
        observer(k, grid.node(k), stepper.values());
    }
    Ok(stepper.u)
}

/// Per-node diagnostics of a streaming solve.
#[derive(Debug, Clone)]
pub struct SolveSummary {
    pub root_trajectory: Vec<f64>,
    pub sup_norm_trajectory: Vec<f64>,
    /// Max defect of the discretized integral equation over interior
    /// vertices and nodes; `None` unless requested.
    pub residual: Option<f64>,
    pub final_values: Vec<f64>,
}

/// Streaming solve keeping only per-node aggregates, with an optional
/// running residual of the discretized integral identity
/// u(x,t) = e^{-t} f(x) + ∫ e^{z-t} F(children at z) dz
/// over interior vertices (level < depth).
pub fn solve_summary(
    shape: TreeShape,
    spec: AveragingSpec,
    datum: &InitialDatum,
    grid: TimeGrid,
    closure: ClosureRule,
    track_residual: bool,
) -> Result<SolveSummary> {
    let mut stepper = Stepper::new(shape, spec, datum, grid, closure)?;
    let interior = shape.level_offset(shape.depth());
    let (w_a, w_b) = stepper.kernel_weights();

    let mut root = Vec::with_capacity(grid.len());
    let mut sup = Vec::with_capacity(grid.len());
    root.push(stepper.values()[0]);
    sup.push(max_abs(stepper.values()));

    let mut residual = 0.0f64;
    let mut f0 = Vec::new();
    let mut accum = Vec::new();
    let mut f_prev = Vec::new();
    if track_residual {
        f0 = stepper.values()[..interior].to_vec();
        accum = vec![0.0; interior];
        f_prev = stepper.operator_values()[..interior].to_vec();
    }

    for k in 1..grid.len() {
        stepper.advance()?;
        root.push(stepper.values()[0]);
        sup.push(max_abs(stepper.values()));
        if track_residual {
            let e_prev = grid.node(k - 1).exp();
            let emt = (-grid.node(k)).exp();
            let f_new = stepper.operator_values();
            let u = stepper.values();
            for i in 0..interior {
                accum[i] += e_prev * (w_a * f_prev[i] + w_b * f_new[i]);
                let defect = (u[i] - emt * (f0[i] + accum[i])).abs();
                if defect > residual {
                    residual = defect;
                }
                f_prev[i] = f_new[i];
            }
        }
    }

    Ok(SolveSummary {
        root_trajectory: root,
        sup_norm_trajectory: sup,
        residual: track_residual.then_some(residual),
        final_values: stepper.u,
    })
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Max defect |u(x,t_k) - (K_f u)(x,t_k)| of a completed field over interior
/// vertices and all nodes, using the same kernel quadrature as the stepper.
/// For exact solutions sampled on the grid this is O(dt^2).
pub fn residual_norm(field: &SolutionField, spec: &AveragingSpec) -> f64 {
    let shape = &field.shape;
    let grid = &field.grid;
    let nv = shape.vertex_count();
    let interior = shape.level_offset(shape.depth());
    let (w_a, w_b) = kernel_weights(grid.dt());

    let f0: Vec<f64> = field.node_values(0).to_vec();
    let mut accum = vec![0.0f64; interior];
    let mut f_prev = vec![0.0f64; nv];
    let mut f_next = vec![0.0f64; nv];
    apply_operator(shape, spec, &field.closure, field.node_values(0), 0.0, &mut f_prev);

    let mut worst = 0.0f64;
    for k in 1..grid.len() {
        let t = grid.node(k);
        apply_operator(shape, spec, &field.closure, field.node_values(k), t, &mut f_next);
        let e_prev = grid.node(k - 1).exp();
        let emt = (-t).exp();
        let u = field.node_values(k);
        for i in 0..interior {
            accum[i] += e_prev * (w_a * f_prev[i] + w_b * f_next[i]);
            let defect = (u[i] - emt * (f0[i] + accum[i])).abs();
            if defect > worst {
                worst = defect;
            }
        }
        std::mem::swap(&mut f_prev, &mut f_next);
    }
    worst
}

/// Picard iteration of the discretized integral operator K_f, starting from
/// u0(x,t) = e^{-t} f(x). Returns the converged field and the trace of
/// successive sup-distances; their ratios stay below 1 - e^{-T} because the
/// kernel quadrature is exact.
pub fn picard_iterate(
    shape: TreeShape,
    spec: AveragingSpec,
    datum: &InitialDatum,
    grid: TimeGrid,
    closure: ClosureRule,
    max_iter: usize,
    tol: f64,
) -> Result<(SolutionField, Vec<f64>)> {
    if spec.arity() != shape.branching() {
        return Err(Error::ArityMismatch {
            arity: spec.arity(),
            expected: shape.branching(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::ParamDomain {
            name: "tol",
            value: tol,
            range: "(0, inf)",
        });
    }
    let nv = shape.vertex_count();
    let nodes = grid.len();
    let (w_a, w_b) = kernel_weights(grid.dt());
    let f0 = datum.initial_values(&shape);

    let mut cur = vec![0.0f64; nv * nodes];
    for k in 0..nodes {
        let emt = (-grid.node(k)).exp();
        for i in 0..nv {
            cur[k * nv + i] = emt * f0[i];
        }
    }

    let mut next = vec![0.0f64; nv * nodes];
    let mut accum = vec![0.0f64; nv];
    let mut f_prev = vec![0.0f64; nv];
    let mut f_node = vec![0.0f64; nv];
    let mut trace = Vec::new();

    for _ in 0..max_iter {
        accum.fill(0.0);
        apply_operator(&shape, &spec, &closure, &cur[..nv], 0.0, &mut f_prev);
        next[..nv].copy_from_slice(&f0);
        for k in 1..nodes {
            let t = grid.node(k);
            apply_operator(&shape, &spec, &closure, &cur[k * nv..(k + 1) * nv], t, &mut f_node);
            let e_prev = grid.node(k - 1).exp();
            let emt = (-t).exp();
            for i in 0..nv {
                accum[i] += e_prev * (w_a * f_prev[i] + w_b * f_node[i]);
                next[k * nv + i] = emt * (f0[i] + accum[i]);
            }
            std::mem::swap(&mut f_prev, &mut f_node);
        }
        let dist = cur
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        trace.push(dist);
        std::mem::swap(&mut cur, &mut next);
        if dist <= tol {
            let field = SolutionField {
                shape,
                grid,
                closure,
                spec,
                datum: datum.clone(),
                values: cur,
            };
            return Ok((field, trace));
        }
    }
    let last = trace.last().copied().unwrap_or(f64::NAN);
    Err(Error::IterationLimit {
        tol,
        max_iter,
        last,
        trace,
    })
}

/// Certified bound on the root error introduced by zero-closure at `depth`:
/// tail_sup * (1 - e^{-t} Σ_{j<depth} t^j / j!), i.e. tail_sup times the
/// Poisson(t) tail probability P(N >= depth). Combines the comparison
/// principle with the per-level contribution t^j e^{-t} / j!.
pub fn truncation_tail_bound(depth: usize, t: f64, tail_sup: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::ParamDomain {
            name: "t",
            value: t,
            range: "[0, inf)",
        });
    }
    if !(tail_sup >= 0.0) {
        return Err(Error::ParamDomain {
            name: "tail_sup",
            value: tail_sup,
            range: "[0, inf)",
        });
    }
    let mut partial = 0.0f64;
    let mut term = 1.0f64; // t^j / j!
    for j in 0..depth {
        partial += term;
        term *= t / (j + 1) as f64;
    }
    let tail = 1.0 - (-t).exp() * partial;
    Ok(tail_sup * tail.clamp(0.0, 1.0))
}
