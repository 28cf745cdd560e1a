//! Sparse assembly of the lagged-diffusivity and Newton operators, backed by
//! faer's sparse LU.

use super::{DriftScheme, SolverError};
use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};

/// Cell-centered block lattice: `n[i]` cells of width `h[i]` starting at `lo[i]`.
#[derive(Debug, Clone)]
pub(crate) struct Lattice {
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub lo: Vec<f64>,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..].iter().product()
    }

    pub fn axis_index(&self, k: usize, axis: usize) -> usize {
        (k / self.stride(axis)) % self.n[axis]
    }

    pub fn center(&self, axis: usize, j: usize) -> f64 {
        self.lo[axis] + (j as f64 + 0.5) * self.h[axis]
    }

    pub fn coords(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.center(i, self.axis_index(k, i))).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }
}

/// Treatment of the outer faces of a lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Side {
    /// Zero flux.
    Wall,
    /// Exterior value supplied by a ghost function (zero when absent).
    Dirichlet,
}

/// Per-cell diffusion coefficient multiplying u in the linearized flux.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Coefficient {
    /// max(u, eps)^(m-1): L(d u) reproduces L(u^m) at the lagged state.
    Lagged { eps: f64 },
    /// m u^(m-1): Jacobian of u -> u^m.
    Jacobian,
}

pub(crate) struct Operator<'a> {
    pub lat: &'a Lattice,
    pub m: &'a [f64],
    /// Drift coefficients alpha sigma_i; all zero for the physical equation.
    pub c: &'a [f64],
    pub drift: DriftScheme,
    pub low: Side,
    pub high: Side,
}

/// Chord slope of w = u^m between two states, m u^(m-1) when they coincide.
fn chord(ul: f64, ur: f64, m: f64) -> f64 {
    let du = ur - ul;
    if du.abs() > 1e-12 * ul.max(ur) {
        (ur.powf(m) - ul.powf(m)) / du
    } else {
        m * ul.max(ur).max(f64::MIN_POSITIVE).powf(m - 1.0)
    }
}

impl Operator<'_> {
    /// Weights (w_l, w_r) of the face value c y_f v_f for an interior face.
    fn face_weights(&self, axis: usize, yf: f64, ul: f64, ur: f64) -> (f64, f64) {
        let c = self.c[axis];
        let upwind = if yf > 0.0 { (0.0, 1.0) } else { (1.0, 0.0) };
        match self.drift {
            DriftScheme::Upwind => upwind,
            DriftScheme::Hybrid => {
                let a = chord(ul, ur, self.m[axis]);
                let pe = (c * yf).abs() * self.lat.h[axis] / (2.0 * a);
                if pe <= 1.0 {
                    (0.5, 0.5)
                } else {
                    upwind
                }
            }
        }
    }

    /// Triplets of the linear operator K(state) (rows = equations) plus the
    /// boundary source b so that the semi-discrete right-hand side is K u + b.
    /// The emission order depends only on the lattice, so the sparsity pattern
    /// is the same for every state.
    pub fn assemble(
        &self,
        state: &[f64],
        coef: Coefficient,
        ghost: Option<&dyn Fn(&[f64]) -> f64>,
    ) -> (Vec<Triplet<usize, usize, f64>>, Vec<f64>) {
        let lat = self.lat;
        let len = lat.len();
        let mut diag = vec![0.0; len];
        let mut off = Vec::with_capacity(len * 4 * lat.dim());
        let mut b = vec![0.0; len];
        let d = |k: usize, axis: usize| -> f64 {
            let m = self.m[axis];
            match coef {
                Coefficient::Lagged { eps } => state[k].max(eps).powf(m - 1.0),
                Coefficient::Jacobian => m * state[k].powf(m - 1.0),
            }
        };
        for axis in 0..lat.dim() {
            let n = lat.n[axis];
            let s = lat.stride(axis);
            let h = lat.h[axis];
            let h2 = h * h;
            let c = self.c[axis];
            for k in 0..len {
                let j = lat.axis_index(k, axis);
                if j + 1 < n {
                    let r = k + s;
                    let (dl, dr) = (d(k, axis), d(r, axis));
                    off.push(Triplet::new(k, r, dr / h2));
                    off.push(Triplet::new(r, k, dl / h2));
                    diag[k] -= dl / h2;
                    diag[r] -= dr / h2;
                    let yf = lat.center(axis, j) + 0.5 * h;
                    let (wl, wr) = self.face_weights(axis, yf, state[k], state[r]);
                    let f = c * yf / h;
                    diag[k] += f * wl;
                    off.push(Triplet::new(k, r, f * wr));
                    off.push(Triplet::new(r, k, -f * wl));
                    diag[r] -= f * wr;
                }
                let boundary = [(j == 0, self.low, -1.0), (j + 1 == n, self.high, 1.0)];
                for (at, side, dir) in boundary {
                    if !at || side == Side::Wall {
                        continue;
                    }
                    diag[k] -= d(k, axis) / h2;
                    if let Some(gf) = ghost {
                        let mut x = lat.coords(k);
                        x[axis] += dir * h;
                        let g = gf(&x).max(0.0);
                        let yf = lat.center(axis, j) + dir * 0.5 * h;
                        b[k] += g.powf(self.m[axis]) / h2 + c * yf.abs() * g / h;
                    }
                }
            }
        }
        let mut trip: Vec<Triplet<usize, usize, f64>> = (0..len).map(|k| Triplet::new(k, k, diag[k])).collect();
        trip.extend(off);
        (trip, b)
    }

    /// Nonlinear right-hand side sum_i L_i(u^m_i) + A(u) u with walls.
    pub fn residual(&self, state: &[f64]) -> Vec<f64> {
        let (trip, b) = self.assemble(state, Coefficient::Lagged { eps: 0.0 }, None);
        let mut out = b;
        for t in &trip {
            out[t.row] += t.val * state[t.col];
        }
        out
    }
}

/// Sparse LU with the symbolic factorization cached across solves with the
/// same pattern.
#[derive(Default)]
pub(crate) struct SparseLu {
    symbolic: Option<SymbolicLu<usize>>,
}

impl SparseLu {
    pub fn solve(&mut self, n: usize, trip: &[Triplet<usize, usize, f64>], rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, trip)
            .map_err(|e| SolverError::LinearSolve(format!("{e:?}")))?;
        if self.symbolic.is_none() {
            let sym = SymbolicLu::try_new(a.symbolic()).map_err(|e| SolverError::LinearSolve(format!("{e:?}")))?;
            self.symbolic = Some(sym);
        }
        let sym = self.symbolic.as_ref().expect("symbolic factorization present").clone();
        let lu = Lu::try_new_with_symbolic(sym, a.as_ref()).map_err(|e| SolverError::LinearSolve(format!("{e:?}")))?;
        let mut x = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        lu.solve_in_place(x.as_mut());
        let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Numerical("linear solve produced non-finite values".into()));
        }
        Ok(out)
    }
}

/// Identity scaled by `s` minus `scale` times the operator.
pub(crate) fn shifted(trip: &[Triplet<usize, usize, f64>], n: usize, s: f64, scale: f64) -> Vec<Triplet<usize, usize, f64>> {
    let mut out: Vec<Triplet<usize, usize, f64>> = trip.iter().map(|t| Triplet::new(t.row, t.col, -scale * t.val)).collect();
    for (k, t) in out.iter_mut().enumerate().take(n) {
        debug_assert_eq!(t.row, k);
        t.val += s;
    }
    out
}
