//! Small dense matrix kernel for the multidimensional Ornstein-Uhlenbeck model:
//! matrix exponential, the Gramians `V_t` and `Ṽ_t`, and the algebraic Lyapunov
//! solution `V`.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{domain, Error, Result};

/// A finite `n × n` real matrix, `n ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return domain(format!("expected a nonempty square matrix, got {}x{}", m.nrows(), m.ncols()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return domain("matrix entries must be finite");
        }
        Ok(Self(m))
    }

    /// Builds a matrix from row slices.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return domain("rows must all have length equal to the row count");
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn scaled_identity(n: usize, a: f64) -> Self {
        Self(DMatrix::identity(n, n) * a)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// A `d × r` diffusion coefficient `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix(DMatrix<f64>);

impl DiffusionMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return domain("diffusion matrix must be nonempty");
        }
        if m.iter().any(|v| !v.is_finite()) {
            return domain("diffusion entries must be finite");
        }
        Ok(Self(m))
    }

    pub fn scaled_identity(d: usize, sigma: f64) -> Self {
        Self(DMatrix::identity(d, d) * sigma)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `ΣΣᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.0 * self.0.transpose()
    }
}

/// A symmetric positive definite covariance matrix tied to a time `t`, carried
/// with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct Gramian {
    t: f64,
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl Gramian {
    /// Symmetrizes `m` and factors it. Fails with a computation error when the
    /// asymmetry exceeds `1e-10` relative or the factorization breaks down.
    pub fn new(t: f64, m: DMatrix<f64>) -> Result<Self> {
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax() / scale;
        if asym > 1e-10 {
            return Err(Error::Computation {
                message: "Gramian is not symmetric".into(),
                primary: asym,
                reference: 0.0,
            });
        }
        let matrix = (&m + m.transpose()) * 0.5;
        let chol = Cholesky::new(matrix.clone()).ok_or_else(|| Error::Computation {
            message: "Gramian is not positive definite".into(),
            primary: matrix.min(),
            reference: 0.0,
        })?;
        Ok(Self { t, matrix, chol })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// `vᵀ G⁻¹ v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let l = self.chol.l_dirty();
        let n = v.len();
        // Forward substitution with the lower factor; only the lower triangle is read.
        let mut w = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..n {
            let mut s = v[i];
            for (j, wj) in w.iter().enumerate().take(i) {
                s -= l[(i, j)] * wj;
            }
            w[i] = s / l[(i, i)];
            acc += w[i] * w[i];
        }
        acc
    }
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

/// `e^{tA}` by scaling and squaring with the degree-13 Padé approximant.
pub fn matrix_exp(a: &SquareMatrix, t: f64) -> Result<SquareMatrix> {
    if !t.is_finite() {
        return domain("time must be finite");
    }
    Ok(SquareMatrix(expm(&(a.as_matrix() * t))?))
}

pub(crate) fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.iter().any(|v| !v.is_finite()) {
        return domain("matrix exponential of a non-finite matrix");
    }
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(squarings);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or_else(|| Error::Computation {
        message: "Padé denominator is singular".into(),
        primary: norm,
        reference: THETA13,
    })?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_shapes(a: &SquareMatrix, s: &DiffusionMatrix) -> Result<()> {
    if a.dim() != s.dim() {
        return domain(format!("drift is {0}x{0} but diffusion has {1} rows", a.dim(), s.dim()));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("time must be positive and finite, got {t}"));
    }
    Ok(())
}

/// `∫₀ᵗ e^{(t-v)A} Q e^{(t-v)Aᵀ} dv` by the block exponential of
/// `[[A, Q], [0, -Aᵀ]]`: with `E = e^{tM}` the integral is `E₁₂ E₁₁ᵀ`.
fn block_gramian(a: &DMatrix<f64>, q: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(a * t));
    m.view_mut((0, n), (n, n)).copy_from(&(q * t));
    m.view_mut((n, n), (n, n)).copy_from(&(-a.transpose() * t));
    let e = expm(&m)?;
    let e11 = e.view((0, 0), (n, n)).into_owned();
    let e12 = e.view((0, n), (n, n)).into_owned();
    Ok(e12 * e11.transpose())
}

/// Composite Simpson rule for the same integral, stepping `e^{hA}` by products.
pub(crate) fn simpson_gramian(a: &DMatrix<f64>, q: &DMatrix<f64>, t: f64, panels: usize) -> Result<DMatrix<f64>> {
    let panels = panels.max(2) + panels % 2;
    let h = t / panels as f64;
    let step = expm(&(a * h))?;
    let n = a.nrows();
    let mut phi = DMatrix::<f64>::identity(n, n);
    let mut acc = DMatrix::<f64>::zeros(n, n);
    // Integrate over u = t - v, from 0 to t: e^{uA} Q e^{uAᵀ}.
    for k in 0..=panels {
        let w = if k == 0 || k == panels {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += (&phi * q * phi.transpose()) * w;
        phi = &step * phi;
    }
    Ok(acc * (h / 3.0))
}

fn validation_panels(a: &DMatrix<f64>, t: f64) -> usize {
    let stiffness = one_norm(a) * t;
    ((400.0 * stiffness).ceil() as usize).clamp(256, 1 << 16)
}

fn validated_gramian(a: &DMatrix<f64>, q: &DMatrix<f64>, t: f64) -> Result<Gramian> {
    let block = block_gramian(a, q, t)?;
    let simpson = simpson_gramian(a, q, t, validation_panels(a, t))?;
    let scale = block.amax().max(f64::MIN_POSITIVE);
    let gap = (&block - &simpson).amax() / scale;
    if !(gap <= 1e-8) {
        return Err(Error::Computation {
            message: "block-exponential Gramian disagrees with Simpson quadrature".into(),
            primary: block.amax(),
            reference: simpson.amax(),
        });
    }
    Gramian::new(t, block)
}

/// `V_t = ∫₀ᵗ e^{(t-v)A} ΣΣᵀ e^{(t-v)Aᵀ} dv`.
///
/// Computed with the block exponential and cross-checked against composite
/// Simpson quadrature; a disagreement beyond `1e-8` relative is an error.
pub fn gramian_vt(a: &SquareMatrix, s: &DiffusionMatrix, t: f64) -> Result<Gramian> {
    check_shapes(a, s)?;
    check_time(t)?;
    validated_gramian(a.as_matrix(), &s.covariance(), t)
}

/// `Ṽ_t = ∫₀ᵗ e^{-vA} ΣΣᵀ e^{-vAᵀ} dv`, i.e. `V_t` for the drift `-A`.
pub fn gramian_vt_tilde(a: &SquareMatrix, s: &DiffusionMatrix, t: f64) -> Result<Gramian> {
    check_shapes(a, s)?;
    check_time(t)?;
    validated_gramian(&(-a.as_matrix()), &s.covariance(), t)
}

/// True when every eigenvalue of `a` has real part below `-1e-10`.
pub fn is_stable(a: &SquareMatrix) -> bool {
    a.as_matrix()
        .clone()
        .complex_eigenvalues()
        .iter()
        .all(|l| l.re < -1e-10)
}

/// Unique solution `V` of `AV + VAᵀ = -ΣΣᵀ` for stable `A`, from the Kronecker-sum
/// linear system `(I ⊗ A + A ⊗ I) vec V = -vec(ΣΣᵀ)`.
pub fn lyapunov_solve(a: &SquareMatrix, s: &DiffusionMatrix) -> Result<Gramian> {
    check_shapes(a, s)?;
    if !is_stable(a) {
        return Err(Error::Precondition(
            "Lyapunov solution requires every eigenvalue of A to have negative real part".into(),
        ));
    }
    let am = a.as_matrix();
    let n = am.nrows();
    let q = s.covariance();
    let id = DMatrix::<f64>::identity(n, n);
    let op = id.kronecker(am) + am.kronecker(&id);
    let rhs = DMatrix::from_iterator(n * n, 1, q.iter().map(|v| -v));
    let sol = op.lu().solve(&rhs).ok_or_else(|| Error::Computation {
        message: "Kronecker-sum operator is singular".into(),
        primary: 0.0,
        reference: 0.0,
    })?;
    let v = DMatrix::from_column_slice(n, n, sol.as_slice());
    let residual = (am * &v + &v * am.transpose() + &q).amax() / q.amax().max(f64::MIN_POSITIVE);
    if residual > 1e-10 {
        return Err(Error::Computation {
            message: "Lyapunov residual too large".into(),
            primary: residual,
            reference: 1e-10,
        });
    }
    Gramian::new(f64::INFINITY, v)
}
