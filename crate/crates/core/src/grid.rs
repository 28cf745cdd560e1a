//! Cell-centered tensor grids, nonnegative fields and the discrete calculus.

use crate::real::{pairwise_sum, pairwise_sum_by};
use crate::Real;
use thiserror::Error;

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid dimension {0} not in 1..=3")]
    Dimension(usize),
    #[error("axis {axis}: cell count {n} must be even and at least 4")]
    CellCount { axis: usize, n: usize },
    #[error("axis {axis}: half-extent {half} must be positive and finite")]
    Extent { axis: usize, half: f64 },
    #[error("field has {got} values, grid has {expected} cells")]
    Length { expected: usize, got: usize },
    #[error("cell {index}: value {value} is negative or not finite")]
    BadValue { index: usize, value: f64 },
    #[error("box axis {axis}: interval [{lo}, {hi}] is empty")]
    EmptyBox { axis: usize, lo: f64, hi: f64 },
    #[error("box has dimension {got}, grid has {expected}")]
    BoxDimension { expected: usize, got: usize },
}

/// Grid on [-L_1, L_1] x ... x [-L_N, L_N] with n_i cells per axis. Cells are
/// stored lexicographically: the first axis varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid<T> {
    half: Vec<T>,
    n: Vec<usize>,
}

impl<T: Real> TensorGrid<T> {
    pub fn new(half: Vec<T>, n: Vec<usize>) -> Result<Self, GridError> {
        if half.is_empty() || half.len() > MAX_DIM || half.len() != n.len() {
            return Err(GridError::Dimension(half.len().max(n.len())));
        }
        for (axis, (&l, &k)) in half.iter().zip(&n).enumerate() {
            if k < 4 || k % 2 != 0 {
                return Err(GridError::CellCount { axis: axis + 1, n: k });
            }
            if !(l > T::zero() && l.is_finite()) {
                return Err(GridError::Extent { axis: axis + 1, half: l.as_f64() });
            }
        }
        Ok(TensorGrid { half, n })
    }

    /// Same grid with the same per-axis spacing on all axes.
    pub fn cube(dim: usize, half: T, n: usize) -> Result<Self, GridError> {
        Self::new(vec![half; dim], vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn half(&self) -> &[T] {
        &self.half
    }

    pub fn h(&self, axis: usize) -> T {
        T::lit(2.0) * self.half[axis] / T::from_usize_lossy(self.n[axis])
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> T {
        (0..self.dim()).fold(T::one(), |v, i| v * self.h(i))
    }

    /// Center of cell `j` along `axis`.
    pub fn center(&self, axis: usize, j: usize) -> T {
        -self.half[axis] + (T::from_usize_lossy(j) + T::lit(0.5)) * self.h(axis)
    }

    pub fn centers(&self, axis: usize) -> Vec<T> {
        (0..self.n[axis]).map(|j| self.center(axis, j)).collect()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..].iter().product()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.n).fold(0, |acc, (&j, &k)| acc * k + j)
    }

    pub fn unflat(&self, mut k: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for axis in (0..self.dim()).rev() {
            idx[axis] = k % self.n[axis];
            k /= self.n[axis];
        }
        idx
    }

    /// Cell index along `axis` of flat cell `k`.
    pub fn axis_index(&self, k: usize, axis: usize) -> usize {
        (k / self.stride(axis)) % self.n[axis]
    }

    pub fn coords(&self, k: usize) -> [T; MAX_DIM] {
        let idx = self.unflat(k);
        let mut x = [T::zero(); MAX_DIM];
        for axis in 0..self.dim() {
            x[axis] = self.center(axis, idx[axis]);
        }
        x
    }

    /// Grid with every half-extent multiplied by the matching factor.
    pub fn scaled(&self, factors: &[T]) -> Self {
        let half = self.half.iter().zip(factors).map(|(&l, &f)| l * f).collect();
        TensorGrid { half, n: self.n.clone() }
    }
}

/// Nonnegative cell values on a grid, stamped with a time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: TensorGrid<T>,
    values: Vec<T>,
    time: T,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: TensorGrid<T>, values: Vec<T>, time: T) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Length { expected: grid.len(), got: values.len() });
        }
        if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= T::zero())) {
            return Err(GridError::BadValue { index, value: v.as_f64() });
        }
        Ok(ScalarField { grid, values, time })
    }

    pub(crate) fn from_parts(grid: TensorGrid<T>, values: Vec<T>, time: T) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        ScalarField { grid, values, time }
    }

    pub fn zeros(grid: TensorGrid<T>, time: T) -> Self {
        let values = vec![T::zero(); grid.len()];
        ScalarField { grid, values, time }
    }

    pub fn grid(&self) -> &TensorGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn with_time(mut self, time: T) -> Self {
        self.time = time;
        self
    }

    /// Snapshot CSV: header `x1,...,xN,u`, one row per cell in storage order,
    /// 17 significant digits.
    pub fn to_csv(&self) -> String {
        let d = self.grid.dim();
        let mut out = String::new();
        let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(["u".to_string()]).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (k, &v) in self.values.iter().enumerate() {
            let x = self.grid.coords(k);
            for xi in x.iter().take(d) {
                out.push_str(&format!("{:.16e},", xi.as_f64()));
            }
            out.push_str(&format!("{:.16e}\n", v.as_f64()));
        }
        out
    }
}

/// Per-axis interval [lo_i, hi_i].
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Real> AxisBox<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self, GridError> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > MAX_DIM {
            return Err(GridError::Dimension(lo.len().max(hi.len())));
        }
        for (axis, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            if !(a < b) {
                return Err(GridError::EmptyBox { axis: axis + 1, lo: a.as_f64(), hi: b.as_f64() });
            }
        }
        Ok(AxisBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn length(&self, axis: usize) -> T {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> T {
        (0..self.dim()).fold(T::one(), |v, i| v * self.length(i))
    }
}

/// Samples `f` at cell centers. Negative round-off is clamped to zero.
pub fn sample<T: Real>(f: impl Fn(&[T]) -> T, grid: &TensorGrid<T>, t: T) -> Result<ScalarField<T>, GridError> {
    let d = grid.dim();
    let mut values = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let x = grid.coords(k);
        let v = f(&x[..d]);
        if !v.is_finite() {
            return Err(GridError::BadValue { index: k, value: v.as_f64() });
        }
        values.push(v.max(T::zero()));
    }
    Ok(ScalarField::from_parts(grid.clone(), values, t))
}

pub fn mass<T: Real>(u: &ScalarField<T>) -> T {
    pairwise_sum(u.values()) * u.grid().cell_volume()
}

pub fn lp_norm<T: Real>(u: &ScalarField<T>, p: T) -> T {
    assert!(p >= T::one(), "p must be at least 1");
    let vals = u.values();
    let s = pairwise_sum_by(vals.len(), &|k| vals[k].powf(p));
    (s * u.grid().cell_volume()).powf(T::one() / p)
}

/// L^p norm of a signed cell array on `grid`.
pub fn lp_norm_signed<T: Real>(grid: &TensorGrid<T>, vals: &[T], p: T) -> T {
    let s = pairwise_sum_by(vals.len(), &|k| vals[k].abs().powf(p));
    (s * grid.cell_volume()).powf(T::one() / p)
}

pub fn sup_norm<T: Real>(u: &ScalarField<T>) -> T {
    u.values().iter().fold(T::zero(), |a, &b| a.max(b))
}

/// Fraction of cell `j` along `axis` lying inside [lo, hi].
fn overlap<T: Real>(g: &TensorGrid<T>, axis: usize, j: usize, lo: T, hi: T) -> T {
    let h = g.h(axis);
    let c = g.center(axis, j);
    let a = (c - h / T::lit(2.0)).max(lo);
    let b = (c + h / T::lit(2.0)).min(hi);
    ((b - a) / h).max(T::zero())
}

/// Mass inside the box, weighting cells by their overlap with it.
pub fn local_mass<T: Real>(u: &ScalarField<T>, b: &AxisBox<T>) -> Result<T, GridError> {
    let g = u.grid();
    if b.dim() != g.dim() {
        return Err(GridError::BoxDimension { expected: g.dim(), got: b.dim() });
    }
    let weights: Vec<Vec<T>> = (0..g.dim())
        .map(|i| (0..g.n()[i]).map(|j| overlap(g, i, j, b.lo[i], b.hi[i])).collect())
        .collect();
    let vals = u.values();
    let s = pairwise_sum_by(vals.len(), &|k| {
        let idx = g.unflat(k);
        (0..g.dim()).fold(vals[k], |acc, i| acc * weights[i][idx[i]])
    });
    Ok(s * g.cell_volume())
}

/// Value used beyond the grid boundary by the stencils.
pub enum Ghost<'a, T> {
    /// Zero exterior value.
    Zero,
    /// Zero flux through the boundary face.
    Mirror,
    /// Exterior value evaluated at the ghost cell center.
    Exterior(&'a dyn Fn(&[T]) -> T),
}

impl<T: Real> Ghost<'_, T> {
    /// Ghost value next to boundary cell `k` (`outward` is -1 or +1), or
    /// `None` for a zero-flux face.
    fn value(&self, g: &TensorGrid<T>, k: usize, axis: usize, outward: T) -> Option<T> {
        match self {
            Ghost::Zero => Some(T::zero()),
            Ghost::Mirror => None,
            Ghost::Exterior(f) => {
                let mut x = g.coords(k);
                x[axis] += outward * g.h(axis);
                Some(f(&x[..g.dim()]))
            }
        }
    }
}

/// Three-point second difference of `w` along `axis`, in grid order.
pub fn second_difference<T: Real>(g: &TensorGrid<T>, w: &[T], axis: usize, ghost: &Ghost<'_, T>) -> Vec<T> {
    let n = g.n()[axis];
    let s = g.stride(axis);
    let h2 = g.h(axis) * g.h(axis);
    let two = T::lit(2.0);
    let mut out = vec![T::zero(); w.len()];
    for k in 0..w.len() {
        let j = g.axis_index(k, axis);
        let c = w[k];
        let left = if j > 0 { Some(w[k - s]) } else { ghost.value(g, k, axis, -T::one()) };
        let right = if j + 1 < n { Some(w[k + s]) } else { ghost.value(g, k, axis, T::one()) };
        // a missing neighbor is a zero-flux face
        let l = left.unwrap_or(c);
        let r = right.unwrap_or(c);
        out[k] = (l - two * c + r) / h2;
    }
    out
}

/// Donor-cell discretization of c * d/dy_i (y_i v), conservative in flux
/// form. The transport velocity -c y_i points toward the origin, so every
/// face takes the value of its outer neighbor.
pub fn upwind_drift_divergence<T: Real>(
    g: &TensorGrid<T>,
    v: &[T],
    axis: usize,
    c: T,
    ghost: &Ghost<'_, T>,
) -> Vec<T> {
    assert!(c >= T::zero(), "drift coefficient must be nonnegative");
    let n = g.n()[axis];
    let s = g.stride(axis);
    let h = g.h(axis);
    // flux c * y_f * v_f through the face below (side < 0) or above cell k
    let face = |k: usize, j: usize, side: i32| -> T {
        let offset = if side < 0 { -h } else { h } / T::lit(2.0);
        let yf = g.center(axis, j) + offset;
        let vf = if side < 0 {
            if j == 0 {
                match ghost.value(g, k, axis, -T::one()) {
                    Some(gv) => gv,
                    None => return T::zero(),
                }
            } else if yf < T::zero() {
                v[k - s]
            } else {
                v[k]
            }
        } else if j + 1 == n {
            match ghost.value(g, k, axis, T::one()) {
                Some(gv) => gv,
                None => return T::zero(),
            }
        } else if yf > T::zero() {
            v[k + s]
        } else {
            v[k]
        };
        c * yf * vf
    };
    let mut out = vec![T::zero(); v.len()];
    for k in 0..v.len() {
        let j = g.axis_index(k, axis);
        out[k] = (face(k, j, 1) - face(k, j, -1)) / h;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_layout() {
        let g = TensorGrid::new(vec![1.0f64, 2.0], vec![4, 6]).unwrap();
        assert_eq!(g.stride(0), 6);
        assert_eq!(g.stride(1), 1);
        assert_eq!(g.flat(&[2, 3]), 15);
        assert_eq!(&g.unflat(15)[..2], &[2, 3]);
        assert!((g.center(1, 0) + 2.0 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_odd_and_small_counts() {
        assert!(TensorGrid::new(vec![1.0], vec![5]).is_err());
        assert!(TensorGrid::new(vec![1.0], vec![2]).is_err());
        assert!(TensorGrid::new(vec![0.0], vec![4]).is_err());
        assert!(TensorGrid::<f64>::new(vec![1.0; 4], vec![4; 4]).is_err());
    }

    #[test]
    fn constant_field_integrals() {
        let g = TensorGrid::cube(2, 1.0f64, 10).unwrap();
        let u = sample(|_| 1.0, &g, 0.0).unwrap();
        assert!((mass(&u) - 4.0).abs() < 1e-13);
        let b = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!((local_mass(&u, &b).unwrap() - 1.0).abs() < 1e-13);
        let b = AxisBox::new(vec![0.05, -0.3], vec![0.37, 0.9]).unwrap();
        assert!((local_mass(&u, &b).unwrap() - 0.32 * 1.2).abs() < 1e-13);
    }

    #[test]
    fn stencil_exact_on_quadratics() {
        let g = TensorGrid::new(vec![3.0], vec![12]).unwrap();
        let lin: Vec<f64> = g.centers(0).iter().map(|x| 2.0 * x + 1.0).collect();
        let quad: Vec<f64> = g.centers(0).iter().map(|x| x * x).collect();
        let d1 = second_difference(&g, &lin, 0, &Ghost::Zero);
        let d2 = second_difference(&g, &quad, 0, &Ghost::Zero);
        for j in 1..11 {
            assert!(d1[j].abs() < 1e-11);
            assert!((d2[j] - 2.0).abs() < 1e-11);
        }
    }

    #[test]
    fn drift_telescopes_with_wall() {
        let g = TensorGrid::new(vec![2.0, 1.0], vec![8, 6]).unwrap();
        let v: Vec<f64> = (0..g.len()).map(|k| 1.0 + (k as f64 * 0.7).sin().abs()).collect();
        for axis in 0..2 {
            let d = upwind_drift_divergence(&g, &v, axis, 0.8, &Ghost::Mirror);
            assert!(d.iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
