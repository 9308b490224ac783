//! Scalar fields on a uniform lattice over a box, with a Dirichlet collar.
//!
//! The collar is the layer of nodes outside the open box that carries the
//! boundary payoff; a token stepping at most ε per move can never overshoot
//! an ε-wide collar.

use crate::error::{Error, Result};
use crate::geom;

/// Highest lattice dimension supported (stack buffers size this).
pub const MAX_DIM: usize = 8;

/// Axis-aligned box [lo, hi]ⁿ. The game domain Ω is its interior.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidInput(
                "box bounds must be nonempty and matching".into(),
            ));
        }
        if !geom::all_finite(&lo) || !geom::all_finite(&hi) {
            return Err(Error::InvalidInput("box bounds must be finite".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::InvalidInput(
                "box must satisfy lo < hi on every axis".into(),
            ));
        }
        Ok(BoxDomain { lo, hi })
    }

    /// [-r, r]ⁿ
    pub fn centered(n: usize, r: f64) -> Result<Self> {
        BoxDomain::new(vec![-r; n], vec![r; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Strict interior membership: the open box.
    pub fn contains_interior(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(xi, (lo, hi))| *xi > *lo && *xi < *hi)
    }
}

/// A scalar field sampled on the lattice covering box plus collar.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: BoxDomain,
    h: f64,
    collar_width: f64,
    origin: Vec<f64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Allocates the lattice with all values zero. Node count per axis is
    /// `round((hi-lo+2*collar)/h) + 1`.
    pub fn zeros(domain: BoxDomain, h: f64, collar_width: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(
                "lattice spacing h must be positive".into(),
            ));
        }
        if !(collar_width >= 0.0) || !collar_width.is_finite() {
            return Err(Error::InvalidInput(
                "collar width must be nonnegative".into(),
            ));
        }
        let n = domain.dim();
        if n > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "dimension {n} exceeds supported maximum {MAX_DIM}"
            )));
        }
        let mut dims = Vec::with_capacity(n);
        for d in 0..n {
            let span = domain.hi()[d] - domain.lo()[d] + 2.0 * collar_width;
            let count = (span / h).round() as usize + 1;
            if count < 2 {
                return Err(Error::InvalidInput(format!(
                    "axis {d} has fewer than 2 lattice nodes"
                )));
            }
            dims.push(count);
        }
        let mut strides = vec![1usize; n];
        for d in (0..n.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * dims[d + 1];
        }
        let total: usize = dims.iter().product();
        let origin: Vec<f64> = domain.lo().iter().map(|lo| lo - collar_width).collect();
        Ok(GridFunction {
            domain,
            h,
            collar_width,
            origin,
            dims,
            strides,
            values: vec![0.0; total],
        })
    }

    /// Fills every node from a closure of the node position.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(
        domain: BoxDomain,
        h: f64,
        collar_width: f64,
        f: F,
    ) -> Result<Self> {
        let mut g = GridFunction::zeros(domain, h, collar_width)?;
        let mut pos = vec![0.0; g.dim()];
        for flat in 0..g.len() {
            g.node_position_into(flat, &mut pos);
            g.values[flat] = f(&pos);
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn collar_width(&self) -> f64 {
        self.collar_width
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn node_position(&self, flat: usize) -> Vec<f64> {
        let mut pos = vec![0.0; self.dim()];
        self.node_position_into(flat, &mut pos);
        pos
    }

    pub fn node_position_into(&self, flat: usize, pos: &mut [f64]) {
        let mut rem = flat;
        for (d, slot) in pos.iter_mut().enumerate().take(self.dims.len()) {
            let idx = rem / self.strides[d];
            rem %= self.strides[d];
            *slot = self.origin[d] + idx as f64 * self.h;
        }
    }

    /// Whether the node lies in the open box (game domain). Nodes on the
    /// topological boundary or beyond belong to the collar.
    pub fn is_interior(&self, flat: usize) -> bool {
        let tol = 1e-9 * self.h;
        let mut rem = flat;
        for d in 0..self.dim() {
            let idx = rem / self.strides[d];
            rem %= self.strides[d];
            let x = self.origin[d] + idx as f64 * self.h;
            if x <= self.domain.lo()[d] + tol || x >= self.domain.hi()[d] - tol {
                return false;
            }
        }
        true
    }

    /// Flat indices of all interior nodes, in lattice order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_interior(i)).collect()
    }

    /// Multilinear interpolation at an arbitrary point of the lattice hull.
    /// Allocation-free: this sits on the hot path of every solver sweep.
    pub fn interpolate(&self, p: &[f64]) -> Result<f64> {
        if p.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "point dimension {} does not match grid dimension {}",
                p.len(),
                self.dim()
            )));
        }
        let n = self.dim();
        let tol = 1e-9 * self.h;
        let mut cell = [0usize; MAX_DIM];
        let mut frac = [0.0_f64; MAX_DIM];
        for d in 0..n {
            let span = (self.dims[d] - 1) as f64 * self.h;
            let s = p[d] - self.origin[d];
            if s < -tol || s > span + tol {
                return Err(Error::OutOfDomain(format!(
                    "coordinate {d} = {} outside lattice hull [{}, {}]",
                    p[d],
                    self.origin[d],
                    self.origin[d] + span
                )));
            }
            let s = s.clamp(0.0, span);
            let mut c = (s / self.h).floor() as usize;
            if c >= self.dims[d] - 1 {
                c = self.dims[d] - 2;
            }
            cell[d] = c;
            frac[d] = (s / self.h - c as f64).clamp(0.0, 1.0);
        }
        // Accumulate over the 2^n cell corners.
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0;
            for d in 0..n {
                let up = (corner >> d) & 1 == 1;
                w *= if up { frac[d] } else { 1.0 - frac[d] };
                flat += (cell[d] + up as usize) * self.strides[d];
            }
            if w != 0.0 {
                acc += w * self.values[flat];
            }
        }
        Ok(acc)
    }

    /// Interpolation stencil at `p`: the (flat node, weight) pairs the
    /// multilinear rule combines. Must stay arithmetic-identical to
    /// `interpolate`; used by solvers that compile frozen stencils.
    pub fn interp_stencil(&self, p: &[f64], out: &mut Vec<(usize, f64)>) -> Result<()> {
        let n = self.dim();
        let tol = 1e-9 * self.h;
        let mut cell = [0usize; MAX_DIM];
        let mut frac = [0.0_f64; MAX_DIM];
        for d in 0..n {
            let span = (self.dims[d] - 1) as f64 * self.h;
            let s = p[d] - self.origin[d];
            if s < -tol || s > span + tol {
                return Err(Error::OutOfDomain(format!(
                    "coordinate {d} = {} outside lattice hull",
                    p[d]
                )));
            }
            let s = s.clamp(0.0, span);
            let mut c = (s / self.h).floor() as usize;
            if c >= self.dims[d] - 1 {
                c = self.dims[d] - 2;
            }
            cell[d] = c;
            frac[d] = (s / self.h - c as f64).clamp(0.0, 1.0);
        }
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0;
            for d in 0..n {
                let up = (corner >> d) & 1 == 1;
                w *= if up { frac[d] } else { 1.0 - frac[d] };
                flat += (cell[d] + up as usize) * self.strides[d];
            }
            if w != 0.0 {
                out.push((flat, w));
            }
        }
        Ok(())
    }

    /// Sets every collar node from the payoff closure.
    pub fn fill_collar<F: Fn(&[f64]) -> f64>(&mut self, g: F) {
        let mut pos = vec![0.0; self.dim()];
        for flat in 0..self.len() {
            if !self.is_interior(flat) {
                self.node_position_into(flat, &mut pos);
                self.values[flat] = g(&pos);
            }
        }
    }

    /// Min and max of the collar values.
    pub fn collar_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for flat in 0..self.len() {
            if !self.is_interior(flat) {
                lo = lo.min(self.values[flat]);
                hi = hi.max(self.values[flat]);
            }
        }
        (lo, hi)
    }

    /// Writes the field as CSV with columns x1..xn,u covering every node in
    /// lattice order.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.dim();
        let header: Vec<String> = (1..=n)
            .map(|d| format!("x{d}"))
            .chain(["u".into()])
            .collect();
        writeln!(w, "{}", header.join(","))?;
        let mut pos = vec![0.0; n];
        for flat in 0..self.len() {
            self.node_position_into(flat, &mut pos);
            for x in &pos {
                write!(w, "{x},")?;
            }
            writeln!(w, "{}", self.values[flat])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid() -> GridFunction {
        let domain = BoxDomain::centered(2, 1.0).unwrap();
        GridFunction::from_fn(domain, 0.25, 0.5, |x| x[0] + 2.0 * x[1]).unwrap()
    }

    #[test]
    fn node_count_matches_formula() {
        let g = unit_grid();
        // (2 + 1) / 0.25 + 1 = 13 nodes per axis.
        assert_eq!(g.dims(), &[13, 13]);
        assert_eq!(g.len(), 169);
    }

    #[test]
    fn interior_excludes_boundary_nodes() {
        let g = unit_grid();
        let interior = g.interior_nodes();
        // Nodes strictly inside (-1,1)^2: 7 per axis.
        assert_eq!(interior.len(), 49);
        for &i in &interior {
            let p = g.node_position(i);
            assert!(g.domain().contains_interior(&p));
        }
    }

    #[test]
    fn interpolation_is_exact_for_multilinear_functions() {
        // x + 2y + 3xy is multilinear, so interpolation reproduces it.
        let domain = BoxDomain::centered(2, 1.0).unwrap();
        let g = GridFunction::from_fn(domain, 0.2, 0.2, |x| x[0] + 2.0 * x[1] + 3.0 * x[0] * x[1])
            .unwrap();
        for p in [[0.13, -0.71], [0.999, 0.999], [-1.19, 1.19], [0.0, 0.0]] {
            let exact = p[0] + 2.0 * p[1] + 3.0 * p[0] * p[1];
            assert!((g.interpolate(&p).unwrap() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_out_of_hull_errors() {
        let g = unit_grid();
        assert!(matches!(
            g.interpolate(&[2.0, 0.0]),
            Err(Error::OutOfDomain(_))
        ));
        assert!(matches!(
            g.interpolate(&[0.0, -1.51]),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn collar_fill_and_range() {
        let domain = BoxDomain::centered(1, 1.0).unwrap();
        let mut g = GridFunction::zeros(domain, 0.5, 0.5).unwrap();
        g.fill_collar(|x| x[0]);
        let (lo, hi) = g.collar_range();
        assert_eq!(lo, -1.5);
        assert_eq!(hi, 1.5);
        // Interior untouched.
        for &i in &g.interior_nodes() {
            assert_eq!(g.values()[i], 0.0);
        }
    }

    #[test]
    fn csv_round_trips_node_count() {
        let g = unit_grid();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), g.len() + 1);
        assert!(text.starts_with("x1,x2,u"));
    }
}
