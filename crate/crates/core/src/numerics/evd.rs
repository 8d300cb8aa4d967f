use super::{CMat, Cplx, LinalgError};

const MAX_SWEEPS: usize = 100;
const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenpairs of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EvdResult {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, in eigenvalue order.
    pub eigenvectors: CMat,
}

impl EvdResult {
    /// Q·Λ·Qᴴ
    pub fn reconstruct(&self) -> CMat {
        let q = &self.eigenvectors;
        q.matmul(&CMat::diagonal(&self.eigenvalues)).matmul(&q.adjoint())
    }
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary and then applies the classical real symmetric Jacobi rotation, so
/// the combined 2×2 unitary zeroes `a_pq` exactly.
pub fn hermitian_evd(a: &CMat) -> Result<EvdResult, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "hermitian_evd needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scale = a.frobenius_norm();
    let asymmetry = a.hermitian_asymmetry();
    if asymmetry > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(LinalgError::NotHermitian { asymmetry });
    }

    let n = a.rows();
    // Work on the exactly Hermitian part.
    let mut m = CMat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()));
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let mut v = CMat::identity(n);

    let off_target = (1e-14 * scale).powi(2);
    let mut converged = n < 2 || scale == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        converged = off_diagonal_sqr(&m) <= off_target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let eigenvectors = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EvdResult {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_sqr(m: &CMat) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s
}

fn rotate(m: &mut CMat, v: &mut CMat, p: usize, q: usize) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    // Negligible pivot relative to both diagonal entries: just clear it.
    if mag <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        m[(p, q)] = Cplx::new(0.0, 0.0);
        m[(q, p)] = Cplx::new(0.0, 0.0);
        return;
    }
    let phase = apq / mag; // e^{iφ}
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U = [[c, s], [-s·e^{-iφ}, c·e^{-iφ}]] on the (p, q) plane.
    let u_pp = Cplx::new(c, 0.0);
    let u_pq = Cplx::new(s, 0.0);
    let u_qp = -s * phase.conj();
    let u_qq = c * phase.conj();

    let n = m.rows();
    // A ← A·U
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * u_pp + akq * u_qp;
        m[(k, q)] = akp * u_pq + akq * u_qq;
    }
    // A ← Uᴴ·A
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        m[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    m[(p, q)] = Cplx::new(0.0, 0.0);
    m[(q, p)] = Cplx::new(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;
    // V ← V·U
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::test_util::{random_mat, random_unitary};
    use crate::numerics::CVec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_orthonormal(q: &CMat) {
        let qhq = q.adjoint().matmul(q);
        assert!(qhq.max_abs_diff(&CMat::identity(q.cols())) < 1e-10);
    }

    #[test]
    fn identity_spectrum() {
        let r = hermitian_evd(&CMat::identity(4)).unwrap();
        assert_eq!(r.eigenvalues, vec![1.0; 4]);
        assert_orthonormal(&r.eigenvectors);
    }

    #[test]
    fn rank_one_spectrum() {
        // ‖a‖² = 10
        let a = CVec::new(vec![
            Cplx::new(1.0, 2.0),
            Cplx::new(0.0, -2.0),
            Cplx::new(1.0, 0.0),
            Cplx::new(0.0, 0.0),
        ]);
        let r = hermitian_evd(&CMat::outer(&a, &a)).unwrap();
        assert!((r.eigenvalues[0] - 10.0).abs() < 1e-12);
        for &l in &r.eigenvalues[1..] {
            assert!(l.abs() < 1e-12);
        }
        // Leading eigenvector is a/‖a‖ up to phase.
        let q0 = r.eigenvectors.column(0);
        assert!((q0.dot(&a).norm() - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn recovers_planted_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let q = random_unitary(&mut rng, 6);
            let mut lambda: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
            let a = q.matmul(&CMat::diagonal(&lambda)).matmul(&q.adjoint());
            let r = hermitian_evd(&a).unwrap();
            lambda.sort_by(|x, y| y.total_cmp(x));
            for (got, want) in r.eigenvalues.iter().zip(&lambda) {
                assert!((got - want).abs() < 1e-10, "{got} vs {want}");
            }
            assert_orthonormal(&r.eigenvectors);
            let resid = r.reconstruct().sub(&a).frobenius_norm();
            assert!(resid < 1e-10 * a.frobenius_norm());
        }
    }

    #[test]
    fn trace_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=10 {
            let b = random_mat(&mut rng, n, n);
            let a = b.add(&b.adjoint());
            let r = hermitian_evd(&a).unwrap();
            let sum: f64 = r.eigenvalues.iter().sum();
            let tr = a.trace().re;
            assert!((sum - tr).abs() <= 1e-9 * tr.abs().max(1.0));
            assert!(r.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = CMat::identity(3);
        a[(0, 1)] = Cplx::new(0.5, 0.0);
        assert!(matches!(hermitian_evd(&a), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            hermitian_evd(&CMat::zeros(2, 3)),
            Err(LinalgError::DimensionMismatch(_))
        ));
    }
}
