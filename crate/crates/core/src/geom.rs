//! Small dense vector helpers and deterministic sphere sampling.

/// Dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// a + s*b
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn is_unit(v: &[f64], tol: f64) -> bool {
    (norm(v) - 1.0).abs() <= tol
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Inverse of the standard normal CDF (Acklam's rational approximation,
/// relative error below 1.2e-9). Good enough to map low-discrepancy points
/// onto the sphere; never used where more precision matters.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -inverse_normal_cdf(1.0 - p)
    }
}

/// Deterministic low-discrepancy sample of the unit sphere in `dim`
/// dimensions: the Kronecker R_d sequence in the cube mapped through the
/// inverse normal CDF and normalized. For `dim == 1` this degenerates to
/// alternating signs.
pub fn sphere_sample(dim: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(dim >= 1);
    if dim == 1 {
        return (0..count)
            .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }])
            .collect();
    }
    // phi_d: unique positive root of x^(d+1) = x + 1.
    let mut phi = 1.5_f64;
    for _ in 0..64 {
        phi = (phi + 1.0).powf(1.0 / (dim as f64 + 1.0));
    }
    let alphas: Vec<f64> = (1..=dim).map(|k| phi.powi(-(k as i32))).collect();

    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut z = Vec::with_capacity(dim);
        for alpha in &alphas {
            let mut u = (0.5 + (i as f64 + 1.0) * alpha).fract();
            u = u.clamp(1e-12, 1.0 - 1e-12);
            z.push(inverse_normal_cdf(u));
        }
        let n = norm(&z);
        if n < 1e-9 {
            // Essentially impossible for the R_d sequence; fall back to an axis.
            let mut v = vec![0.0; dim];
            v[i % dim] = 1.0;
            out.push(v);
        } else {
            out.push(scale(&z, 1.0 / n));
        }
    }
    out
}

/// Gram-Schmidt orthonormalization of the columns given as rows of `vecs`.
/// Returns None when the input is numerically rank deficient.
pub fn orthonormalize(vecs: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vecs.len());
    for v in vecs {
        let mut w = v.clone();
        for q in &out {
            let c = dot(&w, q);
            w = axpy(&w, -c, q);
        }
        // Second pass for numerical orthogonality.
        for q in &out {
            let c = dot(&w, q);
            w = axpy(&w, -c, q);
        }
        let n = norm(&w);
        if n < 1e-10 {
            return None;
        }
        out.push(scale(&w, 1.0 / n));
    }
    Some(out)
}

/// A deterministic unit vector orthogonal to `y` (requires `y != 0`,
/// dimension at least 2). Starts from the coordinate axis least aligned
/// with `y`.
pub fn unit_orthogonal(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    debug_assert!(n >= 2);
    let ny = norm(y);
    debug_assert!(ny > 0.0);
    let yhat = scale(y, 1.0 / ny);
    let k = (0..n)
        .min_by(|&a, &b| yhat[a].abs().partial_cmp(&yhat[b].abs()).unwrap())
        .unwrap();
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    let w = axpy(&e, -dot(&e, &yhat), &yhat);
    scale(&w, 1.0 / norm(&w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_normal_matches_known_points() {
        assert!(inverse_normal_cdf(0.5).abs() < 1e-9);
        assert!((inverse_normal_cdf(0.975) - 1.959963984540054).abs() < 1e-7);
        assert!((inverse_normal_cdf(0.025) + 1.959963984540054).abs() < 1e-7);
    }

    #[test]
    fn sphere_sample_is_unit_and_deterministic() {
        for dim in 1..=4 {
            let pts = sphere_sample(dim, 37);
            assert_eq!(pts.len(), 37);
            for p in &pts {
                assert!(is_unit(p, 1e-9));
            }
            assert_eq!(pts, sphere_sample(dim, 37));
        }
    }

    #[test]
    fn sphere_sample_covers_directions() {
        // Crude equidistribution check: means stay near zero.
        let pts = sphere_sample(3, 500);
        for d in 0..3 {
            let mean: f64 = pts.iter().map(|p| p[d]).sum::<f64>() / 500.0;
            assert!(mean.abs() < 0.1, "axis {d} mean {mean}");
        }
    }

    #[test]
    fn unit_orthogonal_is_orthogonal() {
        let y = vec![0.3, -1.2, 0.5];
        let e = unit_orthogonal(&y);
        assert!(dot(&e, &y).abs() < 1e-12);
        assert!(is_unit(&e, 1e-12));
    }

    #[test]
    fn orthonormalize_produces_orthonormal_set() {
        let vecs = vec![
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
        ];
        let q = orthonormalize(&vecs).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&q[i], &q[j]) - expect).abs() < 1e-12);
            }
        }
    }
}
