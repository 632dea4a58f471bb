//! State-space primitives: pole placement, Lyapunov solve, SISO
//! transfer-function realization, feedforward gain.

use nalgebra::{Complex, DMatrix, DVector, Matrix3, RowDVector, Vector3};

use crate::error::Error;

/// Linear SISO realization (A, b, c).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: RowDVector<f64>) -> Result<Self, Error> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || c.len() != n {
            return Err(Error::InvalidParameter(format!(
                "inconsistent dimensions: A is {}x{}, b has {} rows, c has {} columns",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// DC gain -c A^-1 b; `None` if A is singular.
    pub fn dc_gain(&self) -> Option<f64> {
        let inv = self.a.clone().try_inverse()?;
        Some(-(&self.c * inv * &self.b)[0])
    }
}

/// True when all eigenvalues of `a` have negative real part. The 2x2 case
/// uses the trace/determinant criterion.
pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    if a.nrows() == 2 {
        let tr = a[(0, 0)] + a[(1, 1)];
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        return tr < 0.0 && det > 0.0;
    }
    a.complex_eigenvalues().iter().all(|l| l.re < 0.0)
}

/// Coefficients of prod (s - p_i), highest power first, monic.
fn char_poly(poles: &[Complex<f64>]) -> Result<Vec<f64>, Error> {
    // Conjugate closure check: the multiset of conjugates equals the multiset
    // of poles.
    let mut remaining: Vec<Complex<f64>> = poles.to_vec();
    for p in poles {
        let conj = p.conj();
        match remaining
            .iter()
            .position(|q| (q - conj).norm() <= 1e-9 * (1.0 + conj.norm()))
        {
            Some(i) => {
                remaining.swap_remove(i);
            }
            None => return Err(Error::PolesNotConjugate),
        }
    }
    let mut coeffs = vec![Complex::new(1.0, 0.0)];
    for p in poles {
        let mut next = vec![Complex::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * p;
        }
        coeffs = next;
    }
    Ok(coeffs.into_iter().map(|c| c.re).collect())
}

/// Controllability matrix [b, Ab, ..., A^(n-1) b].
fn controllability(a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut cols = DMatrix::zeros(n, n);
    let mut v = b.clone();
    for j in 0..n {
        cols.set_column(j, &v);
        v = a * v;
    }
    cols
}

/// State-feedback pole placement via Ackermann's formula.
///
/// Returns the gain row K and the closed-loop matrix A_m = A - b K whose
/// spectrum matches `poles`.
pub fn place_poles(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    poles: &[Complex<f64>],
) -> Result<(RowDVector<f64>, DMatrix<f64>), Error> {
    let n = a.nrows();
    if poles.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected {n} poles, got {}",
            poles.len()
        )));
    }
    let coeffs = char_poly(poles)?;
    let ctrb = controllability(a, b);
    let ctrb_inv = ctrb
        .clone()
        .try_inverse()
        .ok_or(Error::Uncontrollable)?;
    // phi(A) = A^n + c1 A^(n-1) + ... + cn I
    let mut phi = DMatrix::<f64>::zeros(n, n);
    let mut power = DMatrix::<f64>::identity(n, n);
    for &c in coeffs.iter().rev() {
        phi += &power * c;
        power = a * power;
    }
    let mut e_n = RowDVector::zeros(n);
    e_n[n - 1] = 1.0;
    let k = e_n * ctrb_inv * phi;
    let a_m = a - b * &k;
    Ok((k, a_m))
}

/// Solve A_m^T P + P A_m = -Q for symmetric positive-definite P.
///
/// The 2x2 case is solved exactly through its three independent entries;
/// general n uses the vectorized Kronecker system.
pub fn lyapunov_solve(a_m: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, Error> {
    let n = a_m.nrows();
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::InvalidParameter(
            "Q dimensions do not match A_m".into(),
        ));
    }
    if (q - q.transpose()).amax() > 1e-12 || !q.clone().cholesky().is_some() {
        return Err(Error::QNotPositiveDefinite);
    }
    if !is_hurwitz(a_m) {
        return Err(Error::NotHurwitz);
    }
    let p = if n == 2 {
        lyapunov_2x2(a_m, q)
    } else {
        lyapunov_kron(a_m, q)?
    };
    // Symmetrize away round-off.
    Ok((&p + p.transpose()) * 0.5)
}

fn lyapunov_2x2(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let (a11, a12, a21, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    // Unknowns (p11, p12, p22); rows are the (1,1), (1,2), (2,2) entries of
    // A^T P + P A = -Q.
    let m = Matrix3::new(
        2.0 * a11,
        2.0 * a21,
        0.0,
        a12,
        a11 + a22,
        a21,
        0.0,
        2.0 * a12,
        2.0 * a22,
    );
    let rhs = Vector3::new(-q[(0, 0)], -q[(0, 1)], -q[(1, 1)]);
    let sol = m.lu().solve(&rhs).expect("Hurwitz 2x2 Lyapunov is regular");
    DMatrix::from_row_slice(2, 2, &[sol[0], sol[1], sol[1], sol[2]])
}

fn lyapunov_kron(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, Error> {
    let n = a.nrows();
    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    // vec(A^T P) = (I (x) A^T) vec(P); vec(P A) = (A^T (x) I) vec(P)
    let sys = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_column_slice((-q).as_slice());
    let vec_p = sys.lu().solve(&rhs).ok_or(Error::NotHurwitz)?;
    Ok(DMatrix::from_column_slice(n, n, vec_p.as_slice()))
}

/// Feedforward gain k_g = -1/(c A_m^-1 b), making the ideal loop DC gain 1.
pub fn feedforward_gain(
    a_m: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &RowDVector<f64>,
) -> Result<f64, Error> {
    let inv = a_m
        .clone()
        .try_inverse()
        .ok_or(Error::SingularFeedforward)?;
    let g = (c * inv * b)[0];
    if g.abs() < 1e-12 {
        return Err(Error::SingularFeedforward);
    }
    Ok(-1.0 / g)
}

/// Controllable-canonical realization of num(s)/den(s).
///
/// Coefficients are highest power first. The ratio must be strictly proper.
pub fn realize_siso_tf(num: &[f64], den: &[f64]) -> Result<StateSpaceModel, Error> {
    if den.is_empty() || den[0] == 0.0 {
        return Err(Error::InvalidParameter(
            "leading denominator coefficient must be nonzero".into(),
        ));
    }
    if num.is_empty() {
        return Err(Error::InvalidParameter("empty numerator".into()));
    }
    let n = den.len() - 1;
    if num.len() > n {
        return Err(Error::ImproperTransferFunction {
            num: num.len() - 1,
            den: n,
        });
    }
    // Normalize to a monic denominator.
    let den: Vec<f64> = den.iter().map(|d| d / den[0]).collect();
    let num: Vec<f64> = num.iter().map(|v| v / 1.0).collect();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -den[n - j];
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let mut c = RowDVector::zeros(n);
    // num = b_1 s^(m) + ... + b_last; c_j picks up the coefficient of s^j.
    for (i, &v) in num.iter().rev().enumerate() {
        c[i] = v;
    }
    StateSpaceModel::new(a, b, c)
}
