//! Radial finite-element eigensolvers on geodesic balls `B_R` for the fixed
//! membrane, clamped plate and buckling plate problems, and Rellich quotient
//! checks for radial test functions.
//!
//! Membrane forms use continuous quadratic elements; the fourth-order forms
//! use Hermite cubics so that `u` and `u′` are continuous. Both spaces are
//! conforming, so every discrete eigenvalue bounds the radial infimum from
//! above.

mod rellich;

pub use rellich::{rellich_quotient_check, RellichCheck, RellichMode, RellichTerm};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, GapError, Result};
use crate::modelspace::ModelSpace;
use crate::report::{SweepReport, SweepRow};

pub const MIN_MESH: usize = 64;
pub const DEFAULT_MESH: usize = 512;
pub const DEFAULT_QUAD_ORDER: usize = 10;
/// Largest relative residual a reported eigenpair may carry.
pub const RESIDUAL_TOL: f64 = 1e-8;

const TARGET_RESIDUAL: f64 = 1e-12;
const REFINEMENT_STEPS: usize = 2;
const MAX_ITERATIONS: usize = 400;
const SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProblemKind {
    /// `−Δu = λu`, `u = 0` on the boundary.
    Membrane,
    /// `Δ²u = λu`, `u = ∂u/∂n = 0` on the boundary.
    Clamped,
    /// `Δ²u = −λΔu`, `u = ∂u/∂n = 0` on the boundary.
    Buckling,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 3] = [ProblemKind::Membrane, ProblemKind::Clamped, ProblemKind::Buckling];

    pub fn is_fourth_order(self) -> bool {
        !matches!(self, ProblemKind::Membrane)
    }

    /// The curvature lower bound for `λ₁` on every ball: `(n−1)²κ²/4` for
    /// membrane and buckling, `(n−1)⁴κ⁴/16` for clamped.
    pub fn gap_bound(self, space: &ModelSpace) -> f64 {
        let m = (space.dim() - 1.0) * space.kappa();
        match self {
            ProblemKind::Membrane | ProblemKind::Buckling => 0.25 * m * m,
            ProblemKind::Clamped => m.powi(4) / 16.0,
        }
    }

    /// `λ(B_r) = λ(B_1)·r^{−power}` in Euclidean space.
    pub fn scaling_power(self) -> i32 {
        match self {
            ProblemKind::Clamped => 4,
            ProblemKind::Membrane | ProblemKind::Buckling => 2,
        }
    }

    pub fn theorem(self) -> &'static str {
        match self {
            ProblemKind::Membrane => "McKean",
            ProblemKind::Clamped => "T1.1",
            ProblemKind::Buckling => "T1.2",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Membrane => "membrane",
            ProblemKind::Clamped => "clamped",
            ProblemKind::Buckling => "buckling",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = GapError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "membrane" => Ok(ProblemKind::Membrane),
            "clamped" => Ok(ProblemKind::Clamped),
            "buckling" => Ok(ProblemKind::Buckling),
            other => Err(invalid("kind", format!("unknown problem kind `{other}`"))),
        }
    }
}

/// A radial eigenproblem on the geodesic ball `B_R` of a model space, on a
/// uniform mesh of `mesh` nodes from 0 to `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialEigenProblem {
    pub kind: ProblemKind,
    pub space: ModelSpace,
    pub radius: f64,
    pub mesh: usize,
    pub quad_order: usize,
    /// Impose `u′(0) = 0` for fourth-order problems. Always on for `n = 2`,
    /// where `Δu` is not square integrable otherwise.
    pub origin_slope: bool,
}

impl RadialEigenProblem {
    pub fn new(kind: ProblemKind, space: ModelSpace, radius: f64, mesh: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("R", format!("ball radius must be positive, got {radius}")));
        }
        if mesh < MIN_MESH {
            return Err(invalid("mesh", format!("need at least {MIN_MESH} nodes, got {mesh}")));
        }
        Ok(Self {
            kind,
            space,
            radius,
            mesh,
            quad_order: DEFAULT_QUAD_ORDER,
            origin_slope: false,
        })
    }

    pub fn with_quad_order(mut self, order: usize) -> Result<Self> {
        if !(2..=24).contains(&order) {
            return Err(invalid("quad_order", format!("must be in 2..=24, got {order}")));
        }
        self.quad_order = order;
        Ok(self)
    }

    pub fn with_origin_slope(mut self, on: bool) -> Self {
        self.origin_slope = on;
        self
    }

    /// Uniform mesh points `0 = t₀ < … < t_{mesh−1} = R`.
    pub fn nodes(&self) -> Vec<f64> {
        uniform_nodes(self.radius, self.mesh - 1)
    }

    fn clamp_origin_slope(&self) -> bool {
        self.kind.is_fourth_order() && (self.origin_slope || self.space.n() == 2)
    }
}

fn uniform_nodes(radius: f64, elements: usize) -> Vec<f64> {
    (0..=elements)
        .map(|i| if i == elements { radius } else { radius * i as f64 / elements as f64 })
        .collect()
}

/// Symmetric banded matrix, lower band stored row by row:
/// `data[i·(bw+1) + k] = A[i][i−k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    size: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(size: usize, bandwidth: usize) -> Self {
        Self {
            size,
            bandwidth,
            data: vec![0.0; size * (bandwidth + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        (i - j <= self.bandwidth).then(|| i * (self.bandwidth + 1) + (i - j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry inside the band");
        self.data[s] += v;
    }

    /// `y = A·x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let w = self.bandwidth + 1;
        for i in 0..self.size {
            let row = &self.data[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for k in 1..=self.bandwidth.min(i) {
                let j = i - k;
                y[i] += row[k] * x[j];
                y[j] += row[k] * x[i];
            }
        }
    }

    fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.size];
        self.mul_vec(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// `A ← DAD` for diagonal `D`.
    fn scale(&mut self, d: &[f64]) {
        let w = self.bandwidth + 1;
        for i in 0..self.size {
            for k in 0..=self.bandwidth.min(i) {
                self.data[i * w + k] *= d[i] * d[i - k];
            }
        }
    }

    /// `self − σ·other`, on the wider of the two bands.
    fn shifted(&self, sigma: f64, other: &BandedMatrix) -> BandedMatrix {
        let bw = self.bandwidth.max(other.bandwidth);
        let mut out = BandedMatrix::zeros(self.size, bw);
        for i in 0..self.size {
            for k in 0..=bw.min(i) {
                out.data[i * (bw + 1) + k] = self.get(i, i - k) - sigma * other.get(i, i - k);
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| self.get(i, j))
    }

    /// Banded Cholesky factor `A = LLᵀ`; fails unless `A` is positive
    /// definite.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let (n, bw) = (self.size, self.bandwidth);
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                let mut sum = self.get(i, j);
                for m in i.saturating_sub(bw)..j {
                    sum -= l[i * w + (i - m)] * l[j * w + (j - m)];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(GapError::Solver {
                            message: format!("matrix is not positive definite (pivot {i} = {sum:e})"),
                            log: Vec::new(),
                        });
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        Ok(BandedCholesky {
            size: n,
            bandwidth: bw,
            data: l,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    size: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    /// Solves `LLᵀx = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw) = (self.size, self.bandwidth);
        let w = bw + 1;
        for i in 0..n {
            let mut s = b[i];
            for m in i.saturating_sub(bw)..i {
                s -= self.data[i * w + (i - m)] * b[m];
            }
            b[i] = s / self.data[i * w];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for r in i + 1..n.min(i + bw + 1) {
                s -= self.data[r * w + (r - i)] * b[r];
            }
            b[i] = s / self.data[i * w];
        }
    }
}

/// Assembled pencil `(A, B)` on the free degrees of freedom.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub a: BandedMatrix,
    pub b: BandedMatrix,
    pub nodes: Vec<f64>,
    /// Free index of the value unknown at each node; `None` where `u = 0`
    /// is imposed.
    pub value_index: Vec<Option<usize>>,
    a_form: SampledForm,
    b_form: SampledForm,
}

/// A quadratic form `xᵀMx = Σ_g s_g(x)²` kept as its quadrature-point samples
/// `s_g(x) = Σ c·x[i]`. Unlike the assembled `M`, whose entries cancel to
/// `O(h⁻⁴)` relative precision for fourth-order forms, sums of squares keep
/// Rayleigh quotients accurate to rounding.
#[derive(Debug, Clone, Default)]
struct SampledForm {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SampledForm {
    fn sample(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(i, c)| c * x[i]).sum()).collect()
    }

    /// `M·x` via the samples.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (row, s) in self.rows.iter().zip(self.sample(x)) {
            for &(i, c) in row {
                out[i] += c * s;
            }
        }
        out
    }

    /// Form of `D·M·D` for diagonal `D`.
    fn scale(&mut self, d: &[f64]) {
        for row in &mut self.rows {
            row.iter_mut().for_each(|(i, c)| *c *= d[*i]);
        }
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let n = order;
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 0 { 1.0 } else { p1 };
                dp = n as f64 * (x * pn - p0) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Values, first and second derivatives in `t` of the local basis at `ξ`
/// on an element of width `h`.
fn local_basis(fourth_order: bool, xi: f64, h: f64) -> Vec<[f64; 3]> {
    if fourth_order {
        let (x2, x3) = (xi * xi, xi * xi * xi);
        vec![
            [1.0 - 3.0 * x2 + 2.0 * x3, (-6.0 * xi + 6.0 * x2) / h, (-6.0 + 12.0 * xi) / (h * h)],
            [h * (xi - 2.0 * x2 + x3), 1.0 - 4.0 * xi + 3.0 * x2, (-4.0 + 6.0 * xi) / h],
            [3.0 * x2 - 2.0 * x3, (6.0 * xi - 6.0 * x2) / h, (6.0 - 12.0 * xi) / (h * h)],
            [h * (-x2 + x3), -2.0 * xi + 3.0 * x2, (-2.0 + 6.0 * xi) / h],
        ]
    } else {
        vec![
            [(1.0 - xi) * (1.0 - 2.0 * xi), (4.0 * xi - 3.0) / h, 4.0 / (h * h)],
            [4.0 * xi * (1.0 - xi), (4.0 - 8.0 * xi) / h, -8.0 / (h * h)],
            [xi * (2.0 * xi - 1.0), (4.0 * xi - 1.0) / h, 4.0 / (h * h)],
        ]
    }
}

fn assemble_elements(prob: &RadialEigenProblem, elements: usize) -> Result<Assembled> {
    let fourth = prob.kind.is_fourth_order();
    let nodes = uniform_nodes(prob.radius, elements);
    // global numbering: Hermite (u_i, u′_i) at 2i, 2i+1; quadratic node i at
    // 2i and midpoint of element e at 2e+1
    let global = if fourth { 2 * (elements + 1) } else { 2 * elements + 1 };
    let mut fixed = vec![false; global];
    if fourth {
        fixed[global - 2] = true;
        fixed[global - 1] = true;
        if prob.clamp_origin_slope() {
            fixed[1] = true;
        }
    } else {
        fixed[global - 1] = true;
    }
    let mut map = vec![None; global];
    let mut free = 0;
    for (g, slot) in map.iter_mut().enumerate() {
        if !fixed[g] {
            *slot = Some(free);
            free += 1;
        }
    }
    let bandwidth = if fourth { 3 } else { 2 };
    let mut a = BandedMatrix::zeros(free, bandwidth);
    let mut b = BandedMatrix::zeros(free, bandwidth);
    let rule = gauss_legendre(prob.quad_order);
    let ln_w_end = prob.space.ln_volume_weight(prob.radius)?;
    let local_len = if fourth { 4 } else { 3 };
    let mut ka = vec![0.0; local_len * local_len];
    let mut kb = vec![0.0; local_len * local_len];
    let mut a_form = SampledForm::default();
    let mut b_form = SampledForm::default();
    for e in 0..elements {
        let (t0, t1) = (nodes[e], nodes[e + 1]);
        let h = t1 - t0;
        ka.iter_mut().for_each(|v| *v = 0.0);
        kb.iter_mut().for_each(|v| *v = 0.0);
        for &(xi, omega) in &rule {
            let t = t0 + h * xi;
            // weights relative to w(R) keep large balls in range
            let w = omega * h * (prob.space.ln_volume_weight(t)? - ln_w_end).exp();
            let drift = prob.space.drift(t)?;
            let basis = local_basis(fourth, xi, h);
            let sample = |f: &dyn Fn(&[f64; 3]) -> f64| -> Vec<(usize, f64)> {
                basis
                    .iter()
                    .enumerate()
                    .filter_map(|(i, bi)| map[2 * e + i].map(|g| (g, w.sqrt() * f(bi))))
                    .collect()
            };
            match prob.kind {
                ProblemKind::Membrane => {
                    a_form.rows.push(sample(&|bi| bi[1]));
                    b_form.rows.push(sample(&|bi| bi[0]));
                }
                ProblemKind::Clamped => {
                    a_form.rows.push(sample(&|bi| bi[2] + drift * bi[1]));
                    b_form.rows.push(sample(&|bi| bi[0]));
                }
                ProblemKind::Buckling => {
                    a_form.rows.push(sample(&|bi| bi[2] + drift * bi[1]));
                    b_form.rows.push(sample(&|bi| bi[1]));
                }
            }
            for (i, bi) in basis.iter().enumerate() {
                for (j, bj) in basis.iter().enumerate().take(i + 1) {
                    let (av, bv) = match prob.kind {
                        ProblemKind::Membrane => (bi[1] * bj[1], bi[0] * bj[0]),
                        ProblemKind::Clamped => {
                            ((bi[2] + drift * bi[1]) * (bj[2] + drift * bj[1]), bi[0] * bj[0])
                        }
                        ProblemKind::Buckling => {
                            ((bi[2] + drift * bi[1]) * (bj[2] + drift * bj[1]), bi[1] * bj[1])
                        }
                    };
                    ka[i * local_len + j] += w * av;
                    kb[i * local_len + j] += w * bv;
                }
            }
        }
        let dofs: Vec<usize> = (0..local_len).map(|i| 2 * e + i).collect();
        for i in 0..local_len {
            for j in 0..=i {
                if let (Some(gi), Some(gj)) = (map[dofs[i]], map[dofs[j]]) {
                    let (va, vb) = (ka[i * local_len + j], kb[i * local_len + j]);
                    a.add(gi, gj, va);
                    b.add(gi, gj, vb);
                }
            }
        }
    }
    if (0..free).any(|i| !(b.get(i, i) > 0.0) || !a.get(i, i).is_finite()) {
        return Err(GapError::Solver {
            message: "singular or non-finite diagonal in B; ball too large for the weight range".into(),
            log: Vec::new(),
        });
    }
    let value_index = (0..nodes.len()).map(|i| map[2 * i]).collect();
    Ok(Assembled {
        a,
        b,
        nodes,
        value_index,
        a_form,
        b_form,
    })
}

/// Stiffness-like `A` and mass-like `B` on the problem's own mesh, with the
/// essential conditions at `R` (and `u′(0) = 0` where imposed) removed.
pub fn assemble(prob: &RadialEigenProblem) -> Result<Assembled> {
    assemble_elements(prob, prob.mesh - 1)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub kind: ProblemKind,
    /// Lowest radial eigenvalues on the requested mesh, ascending.
    pub eigenvalues: Vec<f64>,
    /// Richardson extrapolation against the half-resolution mesh.
    pub extrapolated: Vec<f64>,
    pub coarse_eigenvalues: Vec<f64>,
    /// Convergence order of `λ₁` seen across three meshes, when resolvable.
    pub observed_order: Option<f64>,
    /// `‖Ax − λBx‖_{A⁻¹} / ‖λBx‖_{A⁻¹}` per pair.
    pub residuals: Vec<f64>,
    pub nodes: Vec<f64>,
    /// Nodal values of each eigenfunction, `B`-normalised, largest entry
    /// positive.
    pub eigenvectors: Vec<Vec<f64>>,
    pub mesh_used: usize,
    pub iterations: usize,
    pub log: Vec<String>,
}

struct MeshSolution {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    iterations: usize,
    nodes: Vec<f64>,
    log: Vec<String>,
}

/// Lowest `m` eigenpairs of the symmetric-definite pencil by shift-invert
/// subspace iteration with Rayleigh–Ritz. Returns `(values, B-orthonormal
/// vectors, residuals, iterations)`.
///
/// The assembled `A` only drives `K = A − σB`; projections and residuals
/// use the sampled forms, so Ritz values carry no `ε‖A‖` rounding floor.
fn subspace_iteration(
    a: &BandedMatrix,
    b: &BandedMatrix,
    forms: (&SampledForm, &SampledForm),
    m: usize,
    sigma: f64,
    log: &mut Vec<String>,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>, usize)> {
    let n = a.size();
    let q = (2 * m).max(m + 4).min(n);
    let chol = match a.shifted(sigma, b).cholesky() {
        Ok(c) => c,
        Err(e) if sigma != 0.0 => {
            log.push(format!("shift {sigma} rejected ({e}); retrying unshifted"));
            a.cholesky()?
        }
        Err(e) => return Err(e),
    };
    let energy = a.cholesky()?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut x: Vec<Vec<f64>> = (0..q).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    for it in 1..=MAX_ITERATIONS {
        let mut y = Vec::with_capacity(q);
        for xi in &x {
            let bx = forms.1.apply(xi);
            let mut yi = bx.clone();
            chol.solve_in_place(&mut yi);
            // refinement against the sampled K removes the assembled-K floor
            for _ in 0..REFINEMENT_STEPS {
                let (ay, by) = (forms.0.apply(&yi), forms.1.apply(&yi));
                let mut defect: Vec<f64> = (0..n).map(|k| bx[k] - (ay[k] - sigma * by[k])).collect();
                chol.solve_in_place(&mut defect);
                yi.iter_mut().zip(&defect).for_each(|(v, c)| *v += c);
            }
            let norm = b.quadratic_form(&yi).sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(GapError::Solver {
                    message: "iteration vector collapsed".into(),
                    log: log.clone(),
                });
            }
            yi.iter_mut().for_each(|v| *v /= norm);
            y.push(yi);
        }
        let (lambdas, coef) = rayleigh_ritz(forms, &y, log)?;
        x = (0..q)
            .map(|c| {
                let mut v = vec![0.0; n];
                for (k, yk) in y.iter().enumerate() {
                    let w = coef[(k, c)];
                    v.iter_mut().zip(yk).for_each(|(vi, yv)| *vi += w * yv);
                }
                v
            })
            .collect();
        let res: Vec<f64> = (0..m)
            .map(|i| {
                let ax = forms.0.apply(&x[i]);
                let bx = forms.1.apply(&x[i]);
                let r: Vec<f64> = ax.iter().zip(&bx).map(|(a, v)| a - lambdas[i] * v).collect();
                dual_residual(&energy, &r, lambdas[i], &bx)
            })
            .collect();
        let worst = res.iter().copied().fold(0.0, f64::max);
        if worst < best * 0.5 {
            best = worst;
            stale = 0;
        } else {
            stale += 1;
        }
        if worst < TARGET_RESIDUAL || (stale >= 8 && worst < RESIDUAL_TOL) {
            log.push(format!("converged after {it} iterations, max residual {worst:e}"));
            return Ok((lambdas[..m].to_vec(), x[..m].to_vec(), res, it));
        }
        if it % 25 == 0 {
            log.push(format!("iteration {it}: max residual {worst:e}"));
        }
    }
    log.push(format!("no convergence after {MAX_ITERATIONS} iterations, best residual {best:e}"));
    Err(GapError::Solver {
        message: "subspace iteration did not converge".into(),
        log: log.clone(),
    })
}

/// `‖r‖_{A⁻¹} / ‖λBx‖_{A⁻¹}` for `r = Ax − λBx`: the residual in the energy
/// dual norm.
fn dual_residual(energy: &BandedCholesky, r: &[f64], lambda: f64, bx: &[f64]) -> f64 {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let mut z = r.to_vec();
    energy.solve_in_place(&mut z);
    let mut w = bx.to_vec();
    energy.solve_in_place(&mut w);
    (dot(r, &z).max(0.0) / (lambda * lambda * dot(bx, &w))).sqrt()
}

/// Ritz values (ascending) of `(YᵀAY, YᵀBY)` from the sampled forms, with
/// `B`-orthonormal coefficient vectors.
fn rayleigh_ritz(forms: (&SampledForm, &SampledForm), y: &[Vec<f64>], log: &[String]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let q = y.len();
    let gram = |form: &SampledForm| {
        let s: Vec<Vec<f64>> = y.iter().map(|v| form.sample(v)).collect();
        DMatrix::from_fn(q, q, |i, j| s[i].iter().zip(&s[j]).map(|(a, b)| a * b).sum::<f64>())
    };
    let kr = gram(forms.0);
    let br = gram(forms.1);
    let fail = |what: &str| GapError::Solver {
        message: format!("Rayleigh–Ritz step failed: {what}"),
        log: log.to_vec(),
    };
    let l = br.cholesky().ok_or_else(|| fail("projected B is not positive definite"))?.l();
    let linv = l.try_inverse().ok_or_else(|| fail("singular projected B"))?;
    let c = &linv * kr * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lt = linv.transpose();
    let vecs = DMatrix::from_fn(q, q, |r, c| (lt.row(r) * eig.eigenvectors.column(order[c]))[(0, 0)]);
    Ok((vals, vecs))
}

fn solve_on(prob: &RadialEigenProblem, m: usize, elements: usize) -> Result<MeshSolution> {
    let mut asm = assemble_elements(prob, elements)?;
    let d: Vec<f64> = (0..asm.b.size()).map(|i| 1.0 / asm.b.get(i, i).sqrt()).collect();
    asm.a.scale(&d);
    asm.b.scale(&d);
    asm.a_form.scale(&d);
    asm.b_form.scale(&d);
    let mut log = vec![format!(
        "{} on B_{} ({}), {elements} elements, {} unknowns",
        prob.kind,
        prob.radius,
        prob.space,
        asm.a.size()
    )];
    let sigma = 0.99 * prob.kind.gap_bound(&prob.space);
    let (values, vecs, residuals, iterations) = subspace_iteration(&asm.a, &asm.b, (&asm.a_form, &asm.b_form), m, sigma, &mut log)?;
    let vectors = vecs
        .iter()
        .map(|v| {
            let mut nodal: Vec<f64> = asm.value_index.iter().map(|ix| ix.map_or(0.0, |i| v[i] * d[i])).collect();
            let peak = nodal.iter().copied().fold(0.0, |acc: f64, x| if x.abs() > acc.abs() { x } else { acc });
            if peak < 0.0 {
                nodal.iter_mut().for_each(|x| *x = -*x);
            }
            nodal
        })
        .collect();
    Ok(MeshSolution {
        values,
        vectors,
        residuals,
        iterations,
        nodes: asm.nodes,
        log,
    })
}

/// Order `p` with `(λ₃ − λ₂)/(λ₂ − λ₁) = (h₃^p − h₂^p)/(h₂^p − h₁^p)` for
/// element counts `e₁ > e₂ > e₃`, by bisection.
fn observed_order(lams: [f64; 3], elems: [usize; 3]) -> Option<f64> {
    let (d1, d2) = (lams[1] - lams[0], lams[2] - lams[1]);
    if !(d1.abs() > 1e-12 * lams[0].abs()) || d1.signum() != d2.signum() {
        return None;
    }
    let target = d2 / d1;
    let h = elems.map(|e| 1.0 / e as f64);
    let g = |p: f64| (h[2].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[0].powf(p)) - target;
    let (mut lo, mut hi) = (0.25, 16.0);
    if g(lo).signum() == g(hi).signum() {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == g(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Lowest `m` radial eigenvalues of `prob`, with Richardson extrapolation
/// against a mesh of half as many elements.
pub fn solve(prob: &RadialEigenProblem, m: usize) -> Result<SpectralResult> {
    if m == 0 || m > prob.mesh / 4 {
        return Err(invalid("m", format!("need 1 <= m <= mesh/4 = {}, got {m}", prob.mesh / 4)));
    }
    let e = prob.mesh - 1;
    let e2 = e / 2;
    let e4 = e / 4;
    let fine = solve_on(prob, m, e)?;
    let coarse = solve_on(prob, m, e2)?;
    let mut log = fine.log.clone();
    log.extend(coarse.log.iter().cloned());
    for (i, r) in fine.residuals.iter().enumerate() {
        if !(*r < RESIDUAL_TOL) {
            return Err(GapError::Solver {
                message: format!("pair {i} has residual {r:e}"),
                log,
            });
        }
    }
    let ratio = (e as f64 / e2 as f64).powi(4);
    let extrapolated = fine
        .values
        .iter()
        .zip(&coarse.values)
        .map(|(f, c)| f + (f - c) / (ratio - 1.0))
        .collect();
    let observed = match solve_on(prob, 1, e4) {
        Ok(s) => observed_order([fine.values[0], coarse.values[0], s.values[0]], [e, e2, e4]),
        Err(err) => {
            log.push(format!("quarter mesh failed: {err}"));
            None
        }
    };
    Ok(SpectralResult {
        kind: prob.kind,
        eigenvalues: fine.values,
        extrapolated,
        coarse_eigenvalues: coarse.values,
        observed_order: observed,
        residuals: fine.residuals,
        nodes: fine.nodes,
        eigenvectors: fine.vectors,
        mesh_used: prob.mesh,
        iterations: fine.iterations,
        log,
    })
}

/// All generalized eigenvalues of the assembled pencil by dense
/// factorization, ascending. The inverse pencil `(B, A)` is factored so the
/// lowest eigenvalues carry relative rather than absolute accuracy.
pub fn dense_eigenvalues(prob: &RadialEigenProblem) -> Result<Vec<f64>> {
    let mut asm = assemble(prob)?;
    let d: Vec<f64> = (0..asm.b.size()).map(|i| 1.0 / asm.b.get(i, i).sqrt()).collect();
    asm.a.scale(&d);
    asm.b.scale(&d);
    let inverse = crate::oracle::dense_generalized_eigenvalues(&asm.b.to_dense(), &asm.a.to_dense())?;
    let mut values: Vec<f64> = inverse.iter().rev().map(|mu| 1.0 / mu).collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// `λ₁(B_r)·r^{power}/λ₁(B_1)` in Euclidean space; 1 in theory.
pub fn scaling_ratio(kind: ProblemKind, n: usize, r: f64, mesh: usize) -> Result<f64> {
    let space = ModelSpace::euclidean(n)?;
    let one = solve(&RadialEigenProblem::new(kind, space, 1.0, mesh)?, 1)?;
    let scaled = solve(&RadialEigenProblem::new(kind, space, r, mesh)?, 1)?;
    Ok(scaled.eigenvalues[0] * r.powi(kind.scaling_power()) / one.eigenvalues[0])
}

/// Rows `(R, λ₁(B_R), limit, gap)` with extra columns for the extrapolated
/// value and residual. Asserts `λ₁ > limit` per row and a strictly
/// decreasing gap. Radii are solved in parallel.
pub fn gap_convergence_study(kind: ProblemKind, space: &ModelSpace, radii: &[f64], mesh: usize) -> Result<SweepReport> {
    if space.is_euclidean() {
        return Err(invalid("kappa", "gap studies need kappa > 0"));
    }
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("R", "radii must be non-empty and strictly increasing"));
    }
    let problems = radii
        .iter()
        .map(|&r| RadialEigenProblem::new(kind, *space, r, mesh))
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<SpectralResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = problems.iter().map(|p| s.spawn(move || solve(p, 1))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(GapError::Solver { message: "worker panicked".into(), log: Vec::new() })))
            .collect()
    });
    let limit = kind.gap_bound(space);
    let mut report = SweepReport::new(
        kind.theorem(),
        format!("{kind} gap on geodesic balls, {space}"),
        ["R", "lambda1", "limit", "gap"],
        &["extrapolated", "residual"],
    );
    for (&r, res) in radii.iter().zip(results) {
        match res {
            Ok(sol) => {
                let lam = sol.eigenvalues[0];
                let pass = lam > limit;
                if !pass {
                    report.fail(format!("R={r}: lambda1 {lam} does not exceed {limit}"));
                }
                report.rows.push(SweepRow {
                    parameter: r,
                    computed: lam,
                    reference: limit,
                    residual: lam - limit,
                    extra: vec![sol.extrapolated[0], sol.residuals[0]],
                    pass,
                    error: None,
                });
            }
            Err(e) => {
                report.fail(format!("R={r}: {e}"));
                report.rows.push(SweepRow {
                    parameter: r,
                    computed: f64::NAN,
                    reference: limit,
                    residual: f64::NAN,
                    extra: vec![f64::NAN, f64::NAN],
                    pass: false,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    if report.rows.windows(2).any(|w| !(w[1].residual < w[0].residual)) {
        report.fail("gap is not strictly decreasing in R");
    }
    Ok(report)
}
