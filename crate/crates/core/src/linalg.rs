//! Symmetric matrices, their spectra, and the min-max form of the j-th
//! eigenvalue over sampled subspace families.

use crate::error::{Error, Result};
use crate::frames::FrameFamily;
use crate::geom;

/// A real symmetric matrix. Entries are symmetrized on construction so that
/// `entry(i, j) == entry(j, i)` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    entries: Vec<f64>, // row-major, n*n
}

impl SymMatrix {
    /// Builds from row-major entries, averaging the off-diagonal pair
    /// `(a_ij, a_ji)` so the stored matrix is exactly symmetric.
    pub fn new(n: usize, entries: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("matrix dimension must be >= 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        if !geom::all_finite(entries) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        let mut sym = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                sym[i * n + j] = 0.5 * (entries[i * n + j] + entries[j * n + i]);
            }
        }
        Ok(SymMatrix { n, entries: sym })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        SymMatrix::new(n, &flat)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut entries = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            entries[i * n + i] = *d;
        }
        SymMatrix::new(n, &entries)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix::diagonal(&vec![1.0; n]).expect("identity is well formed")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Quadratic form ⟨Mv, v⟩.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            let row: f64 = self.entries[i * self.n..(i + 1) * self.n]
                .iter()
                .zip(v)
                .map(|(m, x)| m * x)
                .sum();
            acc += row * v[i];
        }
        acc
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.entries[i * self.n + j] * v[j])
                    .sum()
            })
            .collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.entry(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Restriction ⟨M b_k, b_l⟩ to the span of the given orthonormal basis.
    pub fn restrict(&self, basis: &[&[f64]]) -> SymMatrix {
        let m = basis.len();
        let mut entries = vec![0.0; m * m];
        let images: Vec<Vec<f64>> = basis.iter().map(|b| self.mul_vec(b)).collect();
        for k in 0..m {
            for l in 0..m {
                entries[k * m + l] = geom::dot(&images[k], basis[l]);
            }
        }
        SymMatrix::new(m, &entries).expect("restriction is well formed")
    }
}

/// Eigenvalues in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Full eigendecomposition: ascending eigenvalues plus the matching
/// orthonormal eigenvectors (as rows of `vectors`).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub spectrum: Spectrum,
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi rotation diagonalization. Converges when the off-diagonal
/// Frobenius norm drops below `1e-13 * ||m||_F`. Equal eigenvalues keep their
/// pre-sort order (stable sort), so results are deterministic.
pub fn eigen_decompose(m: &SymMatrix) -> Result<EigenDecomposition> {
    let n = m.dim();
    let mut a = m.entries.clone();
    // Eigenvector accumulator, starts as identity; row k will hold the k-th
    // eigenvector.
    let mut vecs = vec![0.0; n * n];
    for i in 0..n {
        vecs[i * n + i] = 1.0;
    }

    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let tol = 1e-13 * scale;
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let max_sweeps = 64;
    let mut sweep = 0;
    while off(&a) > tol {
        sweep += 1;
        if sweep > max_sweeps {
            return Err(Error::InvalidInput(
                "jacobi rotations did not converge (pathological input?)".into(),
            ));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vpk = vecs[p * n + k];
                    let vqk = vecs[q * n + k];
                    vecs[p * n + k] = c * vpk - s * vqk;
                    vecs[q * n + k] = s * vpk + c * vqk;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| vecs[i * n..(i + 1) * n].to_vec())
        .collect();

    Ok(EigenDecomposition {
        spectrum: Spectrum { values },
        vectors,
    })
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn eigenvalues_symmetric(m: &SymMatrix) -> Result<Spectrum> {
    Ok(eigen_decompose(m)?.spectrum)
}

fn check_j(m: &SymMatrix, j: usize) -> Result<()> {
    if j < 1 || j > m.dim() {
        return Err(Error::InvalidInput(format!(
            "subspace dimension j={j} out of range 1..={}",
            m.dim()
        )));
    }
    Ok(())
}

/// Min over candidate j-dimensional subspaces (j-subsets of each frame's
/// axes) of the exact maximum of ⟨Mv, v⟩ over unit v in the subspace. The
/// within-subspace supremum is the top eigenvalue of the restricted matrix,
/// so the result never undershoots the j-th eigenvalue and matches it exactly
/// whenever an eigenframe of `m` belongs to the family.
pub fn lambda_j_minmax(m: &SymMatrix, j: usize, frames: &FrameFamily) -> Result<f64> {
    check_j(m, j)?;
    if frames.dim() != m.dim() {
        return Err(Error::InvalidInput(format!(
            "frame dimension {} does not match matrix dimension {}",
            frames.dim(),
            m.dim()
        )));
    }
    let mut best = f64::INFINITY;
    for frame in frames.frames() {
        for subset in subsets(m.dim(), j) {
            let basis: Vec<&[f64]> = subset.iter().map(|&i| frame.axis(i)).collect();
            let restricted = m.restrict(&basis);
            let top = eigenvalues_symmetric(&restricted)?
                .values()
                .last()
                .copied()
                .unwrap();
            if top < best {
                best = top;
            }
        }
    }
    Ok(best)
}

/// Same search, but the within-subspace supremum is taken over a sampled
/// direction set only: the subspace axes plus `dirs_per_subspace`
/// low-discrepancy points of its unit sphere. Lower-bounds the exact variant
/// subspace by subspace; exact for matrices diagonal in a family frame.
pub fn lambda_j_minmax_sampled(
    m: &SymMatrix,
    j: usize,
    frames: &FrameFamily,
    dirs_per_subspace: usize,
) -> Result<f64> {
    check_j(m, j)?;
    if frames.dim() != m.dim() {
        return Err(Error::InvalidInput(format!(
            "frame dimension {} does not match matrix dimension {}",
            frames.dim(),
            m.dim()
        )));
    }
    let sample = geom::sphere_sample(j, dirs_per_subspace);
    let mut best = f64::INFINITY;
    for frame in frames.frames() {
        for subset in subsets(m.dim(), j) {
            let basis: Vec<&[f64]> = subset.iter().map(|&i| frame.axis(i)).collect();
            let mut sup = f64::NEG_INFINITY;
            for b in &basis {
                sup = sup.max(m.quadratic_form(b));
            }
            for coeffs in &sample {
                let mut v = vec![0.0; m.dim()];
                for (c, b) in coeffs.iter().zip(&basis) {
                    v = geom::axpy(&v, *c, b);
                }
                sup = sup.max(m.quadratic_form(&v));
            }
            if sup < best {
                best = sup;
            }
        }
    }
    Ok(best)
}

/// Weighted sum Σ_i α_i λ_i(m) with eigenvalues from the Jacobi oracle.
pub fn weighted_eig_sum(m: &SymMatrix, w: &crate::weights::AlphaWeights) -> Result<f64> {
    if w.dim() != m.dim() {
        return Err(Error::InvalidInput(format!(
            "weight dimension {} does not match matrix dimension {}",
            w.dim(),
            m.dim()
        )));
    }
    let spectrum = eigenvalues_symmetric(m)?;
    Ok(w.alphas()
        .iter()
        .zip(spectrum.values())
        .map(|(a, l)| a * l)
        .sum())
}

/// All j-element subsets of {0, .., n-1} in lexicographic order.
pub(crate) fn subsets(n: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(j);
    fn rec(start: usize, n: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, j, cur, out);
            cur.pop();
        }
    }
    rec(0, n, j, &mut cur, &mut out);
    out
}
