//! Families of orthonormal frames. Subspace candidates for the infimum are
//! spans of j-subsets of frame axes; directions for the supremum are frame
//! axes plus a low-discrepancy sample of each subspace's unit sphere.

use crate::error::{Error, Result};
use crate::geom;
use crate::rng::CounterRng;

const ORTHO_TOL: f64 = 1e-10;

/// One orthonormal frame: `n` orthonormal axes of Rⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    n: usize,
    axes: Vec<f64>, // row-major, axis k = axes[k*n..(k+1)*n]
}

impl Frame {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        let n = axes.len();
        if n == 0 || axes.iter().any(|a| a.len() != n) {
            return Err(Error::InvalidInput(
                "frame must be square and nonempty".into(),
            ));
        }
        let flat: Vec<f64> = axes.iter().flatten().copied().collect();
        if !geom::all_finite(&flat) {
            return Err(Error::InvalidInput("frame entries must be finite".into()));
        }
        let frame = Frame { n, axes: flat };
        let dev = frame.orthonormality_defect();
        if dev > ORTHO_TOL {
            return Err(Error::InvalidInput(format!(
                "frame is not orthonormal (defect {dev:.3e} > {ORTHO_TOL:.0e})"
            )));
        }
        Ok(frame)
    }

    pub fn canonical(n: usize) -> Self {
        let mut axes = vec![0.0; n * n];
        for i in 0..n {
            axes[i * n + i] = 1.0;
        }
        Frame { n, axes }
    }

    /// 2-D rotation frame at the given angle.
    pub fn rotation_2d(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Frame {
            n: 2,
            axes: vec![c, s, -s, c],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn axis(&self, k: usize) -> &[f64] {
        &self.axes[k * self.n..(k + 1) * self.n]
    }

    pub fn axes(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n).map(move |k| self.axis(k))
    }

    /// Max |⟨aᵢ, aⱼ⟩ − δᵢⱼ| over all axis pairs (Frobenius-style defect).
    pub fn orthonormality_defect(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let d = geom::dot(self.axis(i), self.axis(j));
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((d - target).abs());
            }
        }
        dev
    }
}

/// A set of orthonormal frames plus the per-subspace direction budget. The
/// canonical frame is always a member.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFamily {
    n: usize,
    frames: Vec<Frame>,
    dirs_per_subspace: usize,
}

impl FrameFamily {
    /// Just the canonical frame.
    pub fn canonical(n: usize, dirs_per_subspace: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if dirs_per_subspace == 0 {
            return Err(Error::InvalidInput("dirs_per_subspace must be >= 1".into()));
        }
        Ok(FrameFamily {
            n,
            frames: vec![Frame::canonical(n)],
            dirs_per_subspace,
        })
    }

    /// Canonical frame plus `extra` random orthonormal frames drawn
    /// deterministically from `seed` (Gaussian matrices orthonormalized by
    /// Gram-Schmidt).
    pub fn with_random_frames(
        n: usize,
        extra: usize,
        dirs_per_subspace: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut family = FrameFamily::canonical(n, dirs_per_subspace)?;
        let mut count = 0;
        let mut attempt = 0u64;
        while count < extra {
            let mut rng = CounterRng::for_substream(seed, 0xF7A3, attempt);
            attempt += 1;
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.next_gaussian()).collect())
                .collect();
            if let Some(axes) = geom::orthonormalize(&rows) {
                family.frames.push(Frame::new(axes)?);
                count += 1;
            }
        }
        Ok(family)
    }

    /// n = 2 family of `count` rotation frames at uniform angles k·(π/2)/count;
    /// their axes tile the half-circle of directions with gap π/(2·count).
    /// The k = 0 frame is the canonical one.
    pub fn rotations_2d(count: usize, dirs_per_subspace: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidInput(
                "need at least one rotation frame".into(),
            ));
        }
        let mut family = FrameFamily::canonical(2, dirs_per_subspace)?;
        for k in 1..count {
            let theta = k as f64 * std::f64::consts::FRAC_PI_2 / count as f64;
            family.frames.push(Frame::rotation_2d(theta));
        }
        Ok(family)
    }

    pub fn push_frame(&mut self, axes: Vec<Vec<f64>>) -> Result<()> {
        let frame = Frame::new(axes)?;
        if frame.dim() != self.n {
            return Err(Error::InvalidInput(format!(
                "frame dimension {} does not match family dimension {}",
                frame.dim(),
                self.n
            )));
        }
        self.frames.push(frame);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn dirs_per_subspace(&self) -> usize {
        self.dirs_per_subspace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_contains_identity_frame() {
        let fam = FrameFamily::canonical(3, 4).unwrap();
        assert_eq!(fam.frames().len(), 1);
        assert_eq!(fam.frames()[0].axis(1), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn random_frames_are_orthonormal() {
        let fam = FrameFamily::with_random_frames(4, 10, 4, 1234).unwrap();
        assert_eq!(fam.frames().len(), 11);
        for f in fam.frames() {
            assert!(f.orthonormality_defect() <= 1e-10);
        }
    }

    #[test]
    fn random_frames_are_deterministic() {
        let a = FrameFamily::with_random_frames(3, 5, 4, 99).unwrap();
        let b = FrameFamily::with_random_frames(3, 5, 4, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_orthonormal_frame() {
        let mut fam = FrameFamily::canonical(2, 4).unwrap();
        let r = fam.push_frame(vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        assert!(r.is_err());
    }

    #[test]
    fn rotation_frame() {
        let f = Frame::rotation_2d(std::f64::consts::FRAC_PI_4);
        assert!(f.orthonormality_defect() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.axis(0)[0] - s).abs() < 1e-15);
        assert!((f.axis(0)[1] - s).abs() < 1e-15);
    }
}
