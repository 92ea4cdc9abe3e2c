//! Passivity certificates for square systems: the symmetric matrix `T` with
//! `AᵀT = TA`, `TB = Cᵀ`, the passivity check built on it, and the residual
//! of the passivity LMI for a supplied `Q`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{StateSpaceModel, DEFAULT_RANK_TOL};

/// Symmetric `T` solving `AᵀT = TA`, `TB = Cᵀ`, with its residuals and
/// definiteness data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TCertificate {
    #[serde(serialize_with = "crate::io::serialize_matrix")]
    pub t: DMatrix<f64>,
    /// `‖AᵀT − TA‖₂ / (1 + 2‖A‖₂‖T‖₂)`.
    pub residual_sylvester: f64,
    /// `‖TB − Cᵀ‖₂ / (1 + ‖T‖₂‖B‖₂ + ‖C‖₂)`.
    pub residual_output: f64,
    /// `max |T − Tᵀ| / (1 + max |T|)`.
    pub symmetry_defect: f64,
    pub min_eig_t: f64,
    /// `λ_min(−(TA + AᵀT)/2)`.
    pub min_eig_ta_negated: f64,
    pub minimal: bool,
    pub warnings: Vec<String>,
}

impl TCertificate {
    /// Measures a candidate `T` against `sys`.
    pub fn from_matrix(sys: &StateSpaceModel, t: DMatrix<f64>) -> Result<Self> {
        sys.require_square("TCertificate")?;
        let n = sys.states();
        if t.shape() != (n, n) {
            return Err(Error::domain(format!("T must be {n}x{n}, got {}x{}", t.nrows(), t.ncols())));
        }
        let a = sys.a();
        let t_norm = linalg::spectral_norm(&t);
        let sylvester = a.transpose() * &t - &t * a;
        let output = &t * sys.b() - sys.c().transpose();
        let ta = &t * a;
        let (min_eig_t, min_eig_ta_negated) = if n == 0 {
            (0.0, 0.0)
        } else {
            (linalg::min_sym_eig(&t), -linalg::max_sym_eig(&ta))
        };
        let minimal = sys.is_minimal(DEFAULT_RANK_TOL)?.is_minimal();
        let mut warnings = Vec::new();
        if !minimal {
            warnings.push("system is not minimal; T need not be unique".to_string());
        }
        Ok(Self {
            residual_sylvester: linalg::spectral_norm(&sylvester)
                / (1.0 + 2.0 * linalg::spectral_norm(a) * t_norm),
            residual_output: linalg::spectral_norm(&output)
                / (1.0 + t_norm * linalg::spectral_norm(sys.b()) + linalg::spectral_norm(sys.c())),
            symmetry_defect: linalg::asymmetry(&t) / (1.0 + linalg::max_abs(&t)),
            min_eig_t,
            min_eig_ta_negated,
            minimal,
            warnings,
            t,
        })
    }

    /// All three defining equations hold within `tol`.
    pub fn residuals_ok(&self, tol: f64) -> bool {
        self.residual_sylvester <= tol && self.residual_output <= tol && self.symmetry_defect <= tol
    }

    /// Residuals within `tol`, `T ⪰ −tol‖T‖` and `TA ⪯ tol‖T‖‖A‖`.
    pub fn is_valid(&self, tol: f64, sys: &StateSpaceModel) -> bool {
        let t_norm = linalg::spectral_norm(&self.t);
        self.residuals_ok(tol)
            && self.min_eig_t >= -tol * t_norm
            && self.min_eig_ta_negated >= -tol * (1.0 + t_norm * linalg::spectral_norm(sys.a()))
    }
}

/// Least-squares solve of `AᵀT − TA = 0`, `TB = Cᵀ` over the `n(n+1)/2`
/// entries of a symmetric `T`.
///
/// Each equation row is scaled to unit norm, except rows whose coefficients
/// are below `tol · ‖A‖₂` (Sylvester) or `tol · ‖B‖₂` (output), which are
/// dropped as roundoff. Singular values of the stacked
/// system below `tol · σ_max` count towards the nullity, and a nonzero
/// nullity is reported as [`Error::NonUnique`]. An inconsistent system still
/// returns its least-squares `T`, with the misfit visible in the residuals.
pub fn solve_t(sys: &StateSpaceModel, tol: f64) -> Result<TCertificate> {
    sys.require_square("solve_t")?;
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let n = sys.states();
    let m = sys.inputs();
    if n == 0 {
        return TCertificate::from_matrix(sys, DMatrix::zeros(0, 0));
    }
    let index = |i: usize, j: usize| {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // row-major upper triangle
        i * n - i * (i + 1) / 2 + j
    };
    let unknowns = n * (n + 1) / 2;
    let a = sys.a();
    let b = sys.b();
    let c = sys.c();
    // Rows with coefficients below these floors are roundoff (e.g. A ≈ λI
    // after a coordinate change); normalizing them would turn noise into
    // constraints.
    let sylvester_floor = tol * linalg::spectral_norm(a);
    let output_floor = tol * linalg::spectral_norm(b);
    let mut rows: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for r in 0..n {
        for col in (r + 1)..n {
            // (AᵀT − TA)[r, col] = Σₖ A[k, r] T[k, col] − T[r, k] A[k, col]
            let mut row = vec![0.0; unknowns];
            for k in 0..n {
                row[index(k, col)] += a[(k, r)];
                row[index(r, k)] -= a[(k, col)];
            }
            rows.push((row, 0.0, sylvester_floor));
        }
    }
    for r in 0..n {
        for col in 0..m {
            // (TB)[r, col] = Σₖ T[r, k] B[k, col] = C[col, r]
            let mut row = vec![0.0; unknowns];
            for k in 0..n {
                row[index(r, k)] += b[(k, col)];
            }
            rows.push((row, c[(col, r)], output_floor));
        }
    }
    let mut k_mat = DMatrix::zeros(rows.len(), unknowns);
    let mut rhs = DVector::zeros(rows.len());
    for (i, (row, value, floor)) in rows.iter().enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || norm <= *floor {
            continue;
        }
        for (j, v) in row.iter().enumerate() {
            k_mat[(i, j)] = v / norm;
        }
        rhs[i] = value / norm;
    }
    let (rows_count, cols_count) = k_mat.shape();
    let svd = k_mat.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > tol * sigma_max).count();
    let nullity = cols_count - rank.min(rows_count);
    if nullity > 0 || sigma_max == 0.0 {
        return Err(Error::NonUnique {
            nullity: nullity.max(1),
        });
    }
    let x = svd
        .solve(&rhs, tol * sigma_max)
        .map_err(|e| Error::Numeric(format!("least-squares solve failed: {e}")))?;
    let mut t = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            t[(i, j)] = x[index(i, j)];
            t[(j, i)] = x[index(i, j)];
        }
    }
    TCertificate::from_matrix(sys, t)
}

/// Outcome of [`lemma_passivity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaVerdict {
    pub verdict: bool,
    /// `λ_min(D) / (1 + max|D|)`.
    pub d_min_eig: f64,
    /// `λ_min(T) / (1 + ‖T‖)`.
    pub t_min_eig: f64,
    /// `λ_max((TA + AᵀT)/2) / (1 + ‖T‖‖A‖)`.
    pub ta_max_eig: f64,
}

/// Passivity of a reciprocal system certified by `T`: true iff `D` is
/// symmetric PSD, `T ⪰ 0` and `TA ⪯ 0`, each within `tol` relative to the
/// matrix scale.
pub fn lemma_passivity_check(sys: &StateSpaceModel, cert: &TCertificate, tol: f64) -> Result<LemmaVerdict> {
    sys.require_square("lemma_passivity_check")?;
    if cert.t.shape() != (sys.states(), sys.states()) {
        return Err(Error::domain("certificate does not match the system dimension"));
    }
    if !cert.residuals_ok(tol) {
        return Err(Error::domain(format!(
            "certificate residuals exceed {tol:e}: sylvester {:.3e}, output {:.3e}, symmetry {:.3e}",
            cert.residual_sylvester, cert.residual_output, cert.symmetry_defect
        )));
    }
    let d = sys.d();
    let d_scale = 1.0 + linalg::max_abs(d);
    let d_min_eig = linalg::min_sym_eig(d) / d_scale;
    let d_sym = linalg::asymmetry(d) / d_scale <= tol;
    let t_norm = linalg::spectral_norm(&cert.t);
    let (t_min_eig, ta_max_eig) = if sys.states() == 0 {
        (0.0, 0.0)
    } else {
        let ta = &cert.t * sys.a();
        (
            linalg::min_sym_eig(&cert.t) / (1.0 + t_norm),
            linalg::max_sym_eig(&ta) / (1.0 + t_norm * linalg::spectral_norm(sys.a())),
        )
    };
    Ok(LemmaVerdict {
        verdict: d_sym && d_min_eig >= -tol && t_min_eig >= -tol && ta_max_eig <= tol,
        d_min_eig,
        t_min_eig,
        ta_max_eig,
    })
}

/// Largest eigenvalue of `[[AᵀQ + QA, QB − Cᵀ], [BᵀQ − C, −D − Dᵀ]]`;
/// `Q` certifies passivity when this is `≤ 0` up to tolerance.
pub fn lmi_residual(sys: &StateSpaceModel, q: &DMatrix<f64>, tol: f64) -> Result<f64> {
    sys.require_square("lmi_residual")?;
    let n = sys.states();
    let m = sys.inputs();
    if q.shape() != (n, n) {
        return Err(Error::domain(format!("Q must be {n}x{n}, got {}x{}", q.nrows(), q.ncols())));
    }
    if linalg::asymmetry(q) > tol * (1.0 + linalg::max_abs(q)) {
        return Err(Error::domain(format!(
            "Q is not symmetric (defect {:.3e})",
            linalg::asymmetry(q)
        )));
    }
    let a = sys.a();
    let off = q * sys.b() - sys.c().transpose();
    let mut block = DMatrix::zeros(n + m, n + m);
    block
        .view_mut((0, 0), (n, n))
        .copy_from(&(a.transpose() * q + q * a));
    block.view_mut((0, n), (n, m)).copy_from(&off);
    block.view_mut((n, 0), (m, n)).copy_from(&off.transpose());
    block
        .view_mut((n, n), (m, m))
        .copy_from(&(-(sys.d() + sys.d().transpose())));
    Ok(linalg::max_sym_eig(&block))
}

/// `(positive, negative, zero)` eigenvalue counts of `T`, eigenvalues with
/// modulus at most `tol · ‖T‖₂` counting as zero.
pub fn signature_inertia(cert: &TCertificate, tol: f64) -> (usize, usize, usize) {
    let threshold = tol * linalg::spectral_norm(&cert.t);
    let eigs = linalg::sym_eigenvalues(&cert.t);
    let pos = eigs.iter().filter(|v| **v > threshold).count();
    let neg = eigs.iter().filter(|v| **v < -threshold).count();
    (pos, neg, eigs.len() - pos - neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TOL: f64 = 1e-8;

    fn first_order() -> StateSpaceModel {
        StateSpaceModel::from_rows(1, 1, 1, &[-1.0], &[1.0], &[1.0], &[0.0]).unwrap()
    }

    fn symmetric_two_mode() -> StateSpaceModel {
        StateSpaceModel::from_rows(
            2, 2, 2,
            &[-1.0, 0.2, 0.2, -3.0],
            &[1.0, 0.5, -0.3, 2.0],
            &[1.0, -0.3, 0.5, 2.0],
            &[0.0; 4],
        )
        .unwrap()
    }

    #[test]
    fn identity_certifies_symmetric_realization() {
        let sys = symmetric_two_mode();
        let cert = solve_t(&sys, TOL).unwrap();
        assert_relative_eq!(cert.t, DMatrix::identity(2, 2), epsilon = 1e-12);
        assert!(cert.residual_sylvester < 1e-14 && cert.residual_output < 1e-14);
        assert!(cert.is_valid(TOL, &sys));
        assert_eq!(signature_inertia(&cert, TOL), (2, 0, 0));
    }

    #[test]
    fn transformation_law() {
        let sys = symmetric_two_mode();
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, -0.4, 0.7]);
        let hat = sys.transformed(&s).unwrap();
        let cert = solve_t(&hat, TOL).unwrap();
        let s_inv = s.clone().try_inverse().unwrap();
        let expected = s_inv.transpose() * &s_inv;
        assert_relative_eq!(cert.t, expected, epsilon = 1e-9);
        assert!(cert.residual_sylvester <= 1e-9 && cert.residual_output <= 1e-9);
    }

    #[test]
    fn non_minimal_system_is_not_unique() {
        let sys = StateSpaceModel::from_rows(2, 1, 1, &[-1.0, 0.0, 0.0, -2.0], &[1.0, 0.0], &[1.0, 0.0], &[0.0])
            .unwrap();
        assert!(matches!(solve_t(&sys, TOL), Err(Error::NonUnique { nullity: 1 })));
    }

    #[test]
    fn gyrator_has_no_symmetric_certificate() {
        let sys = StateSpaceModel::from_rows(
            2, 2, 2,
            &[-1.0, 0.0, 0.0, -1.0],
            &[1.0, 0.0, 0.0, 1.0],
            &[0.1, -1.0, 1.0, 0.1],
            &[0.0; 4],
        )
        .unwrap();
        match solve_t(&sys, TOL) {
            Ok(cert) => assert!(!cert.residuals_ok(TOL) || signature_inertia(&cert, TOL).1 > 0),
            Err(e) => assert!(matches!(e, Error::NonUnique { .. })),
        }
    }

    #[test]
    fn lemma_examples() {
        let sys = first_order();
        let cert = TCertificate::from_matrix(&sys, DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert!(lemma_passivity_check(&sys, &cert, TOL).unwrap().verdict);

        let flipped = StateSpaceModel::from_rows(1, 1, 1, &[-1.0], &[1.0], &[-1.0], &[0.0]).unwrap();
        let neg = TCertificate::from_matrix(&flipped, DMatrix::from_element(1, 1, -1.0)).unwrap();
        assert!(neg.residuals_ok(TOL));
        assert!(!lemma_passivity_check(&flipped, &neg, TOL).unwrap().verdict);

        let rc_like = StateSpaceModel::from_rows(1, 2, 2, &[-1.0], &[1.0, 1.0], &[1.0, 1.0], &[0.0, 1.0, 1.0, 0.0])
            .unwrap();
        let cert = TCertificate::from_matrix(&rc_like, DMatrix::from_element(1, 1, 1.0)).unwrap();
        let v = lemma_passivity_check(&rc_like, &cert, TOL).unwrap();
        assert!(!v.verdict);
        assert_relative_eq!(v.d_min_eig, -0.5, epsilon = 1e-14);

        let wrong = TCertificate::from_matrix(&sys, DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert!(lemma_passivity_check(&sys, &wrong, TOL).is_err());
    }

    #[test]
    fn lmi_examples() {
        let sys = first_order();
        let q = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(lmi_residual(&sys, &q, TOL).unwrap(), 0.0);

        let c_norm = 1.0;
        assert!(lmi_residual(&sys, &DMatrix::zeros(1, 1), TOL).unwrap() >= c_norm);

        let with_d = sys.with_feedthrough(DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert!(lmi_residual(&with_d, &q, TOL).unwrap() <= 0.0);

        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(lmi_residual(&symmetric_two_mode(), &asym, TOL).is_err());
    }

    #[test]
    fn inertia_examples() {
        let sys = symmetric_two_mode();
        let cert = TCertificate::from_matrix(&sys, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))).unwrap();
        assert_eq!(signature_inertia(&cert, TOL), (1, 1, 0));
        let cert = TCertificate::from_matrix(&sys, DMatrix::identity(2, 2)).unwrap();
        assert_eq!(signature_inertia(&cert, TOL), (2, 0, 0));
    }

    #[test]
    fn scalar_a_after_coordinate_change() {
        let sys = StateSpaceModel::from_rows(2, 2, 2, &[-2.0, 0.0, 0.0, -2.0], &[1.0, 0.5, 0.0, 1.0], &[1.0, 0.0, 0.5, 1.0], &[0.0; 4])
            .unwrap();
        let s = DMatrix::from_row_slice(2, 2, &[1.3, 0.7, -0.4, 0.9]);
        let moved = sys.transformed(&s).unwrap();
        let t = solve_t(&moved, TOL).unwrap();
        assert!(t.residuals_ok(TOL), "{t:?}");
        let s_inv = s.try_inverse().unwrap();
        let expected = s_inv.transpose() * s_inv;
        assert!((&t.t - &expected).norm() <= 1e-12 * expected.norm());
    }
}
