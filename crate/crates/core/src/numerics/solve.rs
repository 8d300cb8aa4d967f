use super::{CMat, CVec, Cplx, LinalgError};

const PIVOT_TOL: f64 = 1e-14;

/// LU factorization with partial pivoting, packed L\U in one matrix.
struct Lu {
    lu: CMat,
    perm: Vec<usize>,
}

fn factor(a: &CMat) -> Result<Lu, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let threshold = PIVOT_TOL * a.frobenius_norm();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (pivot_row, pivot) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty pivot range");
        if pivot <= threshold || pivot == 0.0 {
            return Err(LinalgError::Singular { pivot, column: k });
        }
        if pivot_row != k {
            perm.swap(k, pivot_row);
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / d;
            lu[(i, k)] = f;
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= f * u;
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    fn solve(&self, b: &[Cplx]) -> CVec {
        let n = self.lu.rows();
        let mut x: Vec<Cplx> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                x[i] = x[i] - l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                x[i] = x[i] - u * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        CVec::new(x)
    }
}

/// Solves a·x = b.
pub fn solve(a: &CMat, b: &[Cplx]) -> Result<CVec, LinalgError> {
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix has {} rows, right-hand side has {}",
            a.rows(),
            b.len()
        )));
    }
    Ok(factor(a)?.solve(b))
}

/// Solves a·X = B column by column, factoring once.
pub(crate) fn solve_many(a: &CMat, b: &CMat) -> Result<CMat, LinalgError> {
    if a.rows() != b.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix has {} rows, right-hand side has {}",
            a.rows(),
            b.rows()
        )));
    }
    let lu = factor(a)?;
    let cols: Vec<CVec> = (0..b.cols()).map(|j| lu.solve(&b.column(j))).collect();
    Ok(CMat::from_columns(&cols))
}

pub fn inverse(a: &CMat) -> Result<CMat, LinalgError> {
    solve_many(a, &CMat::identity(a.rows()))
}

/// (σ²·I + Σ p_l·v_l·v_lᴴ)⁻¹ through the Woodbury identity.
///
/// With U = V·P the inverse is (1/σ²)·[I − U·(σ²·I_L + Vᴴ·U)⁻¹·Vᴴ], which
/// needs only an L×L solve and tolerates zero-power paths.
pub fn inv_by_lemma(sigma2: f64, v_int: &CMat, p_int: &[f64]) -> Result<CMat, LinalgError> {
    if !(sigma2 > 0.0) {
        return Err(LinalgError::NonPositiveNoise(sigma2));
    }
    if v_int.cols() != p_int.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "{} steering columns but {} powers",
            v_int.cols(),
            p_int.len()
        )));
    }
    let n = v_int.rows();
    let l = p_int.len();
    let ident = CMat::identity(n);
    if l == 0 {
        return Ok(ident.scale_re(1.0 / sigma2));
    }
    let u = CMat::from_fn(n, l, |i, j| v_int[(i, j)] * p_int[j]);
    let v_h = v_int.adjoint();
    let inner = v_h.matmul(&u).add_diagonal(sigma2);
    let correction = u.matmul(&solve_many(&inner, &v_h)?);
    Ok(ident.sub(&correction).scale_re(1.0 / sigma2))
}
