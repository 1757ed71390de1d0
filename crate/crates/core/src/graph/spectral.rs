//! Perron roots of nonnegative matrices and dominant eigenvalues of Metzler
//! matrices.
//!
//! The power iteration runs on `M + σI` with `σ` bounded by the largest
//! row/column sum, which keeps the iteration aperiodic without moving the
//! Perron root relative to the rest of the spectrum. When the iterate is
//! strictly positive the Collatz–Wielandt bounds
//! `min_i (Mu)_i/u_i ≤ ρ(M) ≤ max_i (Mu)_i/u_i` give a two-sided stopping
//! certificate; when some entries have decayed below `1e-8·‖u‖∞` (reducible
//! input) the normwise residual is used instead.

use nalgebra::{Complex, DMatrix, Schur};
use thiserror::Error;

use super::SparseMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("matrix has a negative entry")]
    NegativeEntry,
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("shift {shift} is below the largest recovery rate {max_diagonal}")]
    InsufficientShift { shift: f64, max_diagonal: f64 },
    #[error("diagonal length {got} does not match matrix dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dense Schur decomposition did not converge")]
    SchurNoConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Absolute tolerance on the eigenvalue / residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200_000,
        }
    }
}

impl SpectralOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    /// `ρ(M)` for [`spectral_radius`], `λ₁` for the Metzler variants.
    pub value: f64,
    /// Nonnegative eigenvector estimate, normalised to unit max-norm.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `max_i |(Mu)_i − value·u_i| / ‖u‖∞`.
    pub residual: f64,
    /// True if the rank-one perturbation fallback was needed.
    pub perturbed: bool,
}

/// Spectral radius of a nonnegative square matrix by shifted power iteration.
pub fn spectral_radius(
    matrix: &SparseMatrix,
    opts: &SpectralOptions,
) -> Result<SpectralResult, SpectralError> {
    let n = matrix.dim();
    for i in 0..n {
        for &(_, v) in matrix.row(i) {
            if !v.is_finite() {
                return Err(SpectralError::NonFinite);
            }
            if v < 0.0 {
                return Err(SpectralError::NegativeEntry);
            }
        }
    }
    if matrix.nnz() == 0 || matrix.max_abs() == 0.0 {
        return Ok(SpectralResult {
            value: 0.0,
            vector: vec![1.0; n],
            iterations: 0,
            residual: 0.0,
            perturbed: false,
        });
    }

    let classes = matrix.strong_components();
    if classes.len() == 1 {
        return irreducible_radius(matrix, opts);
    }
    reducible_radius(matrix, &classes, opts)
}

fn irreducible_radius(
    matrix: &SparseMatrix,
    opts: &SpectralOptions,
) -> Result<SpectralResult, SpectralError> {
    match power_iterate(matrix, 0.0, opts) {
        Ok(r) => Ok(r),
        Err(_) => {
            let eta = 1e-12 * matrix.max_abs();
            let mut r = power_iterate(matrix, eta, opts)?;
            r.perturbed = true;
            Ok(r)
        }
    }
}

/// Radius of a reducible matrix from its irreducible diagonal blocks.
///
/// Power iteration on the whole matrix converges only like `1/k` when two
/// classes share the dominant eigenvalue with one feeding the other (a
/// defective eigenvalue). Here `ρ` is the largest class radius. The
/// eigenvector is the Perron vector of a dominant class with no dominant
/// class downstream, extended to the classes it feeds by solving
/// `(ρI − M_LL) u_L = Σ_K M_LK u_K`. Those blocks have radius below `ρ`,
/// so the solve is an M-matrix system with a nonnegative solution.
fn reducible_radius(
    matrix: &SparseMatrix,
    classes: &[Vec<usize>],
    opts: &SpectralOptions,
) -> Result<SpectralResult, SpectralError> {
    let n = matrix.dim();
    let mut iterations = 0;
    let mut class_of = vec![0; n];
    let mut radii = Vec::with_capacity(classes.len());
    let mut vectors = Vec::with_capacity(classes.len());
    for (c, class) in classes.iter().enumerate() {
        for &i in class {
            class_of[i] = c;
        }
        if class.len() == 1 {
            let i = class[0];
            let d: f64 = matrix
                .row(i)
                .iter()
                .filter(|&&(j, _)| j == i)
                .map(|&(_, v)| v)
                .sum();
            radii.push(d);
            vectors.push(vec![1.0]);
        } else {
            let r = irreducible_radius(&matrix.submatrix(class), opts)?;
            iterations += r.iterations;
            radii.push(r.value);
            vectors.push(r.vector);
        }
    }
    let rho = radii.iter().copied().fold(0.0_f64, f64::max);
    // Classes within `gap` of ρ count as dominant; the rest are solved
    // against ρ with at least that much room.
    let gap = 1e-6 * rho.max(matrix.max_abs());
    let dominant = (0..classes.len())
        .rev()
        .find(|&c| radii[c] >= rho - gap)
        .expect("at least one class");

    let mut u = vec![0.0; n];
    for (&i, &v) in classes[dominant].iter().zip(&vectors[dominant]) {
        u[i] = v;
    }
    let mut active = vec![false; classes.len()];
    active[dominant] = true;
    for c in dominant + 1..classes.len() {
        let class = &classes[c];
        let rhs: Vec<f64> = class
            .iter()
            .map(|&i| {
                matrix
                    .row(i)
                    .iter()
                    .filter(|&&(j, _)| class_of[j] != c && active[class_of[j]])
                    .map(|&(j, v)| v * u[j])
                    .sum()
            })
            .collect();
        if rhs.iter().all(|&r| r == 0.0) {
            continue;
        }
        active[c] = true;
        let (sol, its) = solve_shifted_block(&matrix.submatrix(class), rho, &rhs, opts)?;
        iterations += its;
        for (&i, v) in class.iter().zip(sol) {
            u[i] = v;
        }
    }

    let mu = matrix.mul_vec(&u);
    let u_max = u.iter().copied().fold(0.0_f64, f64::max);
    let residual = (0..n)
        .map(|i| (mu[i] - rho * u[i]).abs())
        .fold(0.0_f64, f64::max)
        / u_max;
    Ok(finish(rho, u, iterations, residual))
}

/// Nonnegative solution of `(ρI − A) x = b` for nonnegative `A`, `b` with
/// `ρ(A) < ρ`: dense LU for small blocks, otherwise the fixed point
/// `x ← (A x + b) / ρ`, which increases monotonically from `b / ρ`.
fn solve_shifted_block(
    a: &SparseMatrix,
    rho: f64,
    b: &[f64],
    opts: &SpectralOptions,
) -> Result<(Vec<f64>, usize), SpectralError> {
    const DENSE_LIMIT: usize = 500;
    let m = a.dim();
    if m <= DENSE_LIMIT {
        let mut lhs = -a.to_dense();
        for i in 0..m {
            lhs[(i, i)] += rho;
        }
        let x = lhs
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(b))
            .ok_or(SpectralError::NoConvergence {
                iterations: 0,
                residual: f64::INFINITY,
            })?;
        return Ok((x.iter().map(|v| v.max(0.0)).collect(), 1));
    }
    let mut x: Vec<f64> = b.iter().map(|v| v / rho).collect();
    let mut ax = vec![0.0; m];
    for iter in 1..=opts.max_iter {
        a.mul_vec_into(&x, &mut ax);
        let mut change = 0.0_f64;
        let mut scale = 0.0_f64;
        for i in 0..m {
            let v = (ax[i] + b[i]) / rho;
            change = change.max((v - x[i]).abs());
            scale = scale.max(v);
            x[i] = v;
        }
        if change <= opts.tol * scale.max(1.0) {
            return Ok((x, iter));
        }
    }
    Err(SpectralError::NoConvergence {
        iterations: opts.max_iter,
        residual: f64::NAN,
    })
}

fn power_iterate(
    matrix: &SparseMatrix,
    eta: f64,
    opts: &SpectralOptions,
) -> Result<SpectralResult, SpectralError> {
    let n = matrix.dim();
    let row_bound = matrix.row_sums().into_iter().fold(0.0_f64, f64::max);
    let col_bound = matrix
        .transpose()
        .row_sums()
        .into_iter()
        .fold(0.0_f64, f64::max);
    let sigma = row_bound.min(col_bound) + eta * n as f64;

    let mut u = vec![1.0; n];
    let mut mu = vec![0.0; n];
    let mut last_residual = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        matrix.mul_vec_into(&u, &mut mu);
        let u_sum: f64 = u.iter().sum();
        // (M + η11ᵀ)u
        let bump = eta * u_sum;
        let u_max = u.iter().fold(0.0_f64, |a, &x| a.max(x));

        let shifted_sum: f64 = (0..n).map(|i| mu[i] + bump + sigma * u[i]).sum();
        let lambda_est = shifted_sum / u_sum - sigma;

        // Residual is always measured against the unperturbed matrix.
        let residual = (0..n)
            .map(|i| (mu[i] - lambda_est * u[i]).abs())
            .fold(0.0_f64, f64::max)
            / u_max;
        last_residual = residual;

        let u_min = u.iter().fold(f64::INFINITY, |a, &x| a.min(x));
        let positive = u_min > 1e-8 * u_max;
        if positive {
            let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                let r = mu[i] / u[i];
                (lo.min(r), hi.max(r))
            });
            if hi - lo <= 2.0 * opts.tol {
                let value = 0.5 * (lo + hi);
                let residual = (0..n)
                    .map(|i| (mu[i] - value * u[i]).abs())
                    .fold(0.0_f64, f64::max)
                    / u_max;
                return Ok(finish(value, u, iter, residual));
            }
        }
        if !positive && residual <= opts.tol {
            return Ok(finish(lambda_est, u, iter, residual));
        }

        let mut next_max = 0.0_f64;
        for i in 0..n {
            let v = mu[i] + bump + sigma * u[i];
            mu[i] = v;
            next_max = next_max.max(v);
        }
        if next_max == 0.0 {
            // M + σI annihilated u: only possible for the zero matrix.
            return Ok(finish(0.0, vec![1.0; n], iter, 0.0));
        }
        for i in 0..n {
            u[i] = mu[i] / next_max;
        }
    }
    Err(SpectralError::NoConvergence {
        iterations: opts.max_iter,
        residual: last_residual,
    })
}

fn finish(value: f64, mut u: Vec<f64>, iterations: usize, residual: f64) -> SpectralResult {
    let m = u.iter().fold(0.0_f64, |a, &x| a.max(x));
    if m > 0.0 {
        u.iter_mut().for_each(|x| *x /= m);
    }
    SpectralResult {
        value,
        vector: u,
        iterations,
        residual,
        perturbed: false,
    }
}

/// `λ₁(B − D)` for nonnegative `B` and diagonal `D = diag(d)`, computed as
/// `ρ(B − D + shift·I) − shift`. Requires `shift ≥ max_i d_i`.
pub fn dominant_metzler_eigenvalue(
    b: &SparseMatrix,
    d: &[f64],
    shift: f64,
    opts: &SpectralOptions,
) -> Result<SpectralResult, SpectralError> {
    if d.len() != b.dim() {
        return Err(SpectralError::DimensionMismatch {
            expected: b.dim(),
            got: d.len(),
        });
    }
    let max_diagonal = d.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(x));
    if !(shift >= max_diagonal) {
        return Err(SpectralError::InsufficientShift {
            shift,
            max_diagonal,
        });
    }
    if !b.is_nonnegative() {
        return Err(SpectralError::NegativeEntry);
    }
    let diag: Vec<f64> = d.iter().map(|&di| shift - di).collect();
    let shifted = b.add_diagonal(&diag);
    let mut r = spectral_radius(&shifted, opts)?;
    r.value -= shift;
    Ok(r)
}

/// Dominant eigenvalue of a Metzler matrix (nonnegative off-diagonal).
pub fn metzler_abscissa(
    m: &SparseMatrix,
    opts: &SpectralOptions,
) -> Result<SpectralResult, SpectralError> {
    let n = m.dim();
    let mut diag = vec![0.0; n];
    let mut off = vec![Vec::new(); n];
    for (i, row) in off.iter_mut().enumerate() {
        for &(j, v) in m.row(i) {
            if i == j {
                diag[i] += v;
            } else {
                row.push((j, v));
            }
        }
    }
    let off = SparseMatrix::from_rows(n, off);
    let d: Vec<f64> = diag.iter().map(|x| -x).collect();
    let shift = d.iter().fold(0.0_f64, |a, &x| a.max(x));
    dominant_metzler_eigenvalue(&off, &d, shift, opts)
}

/// Full spectrum via a dense Schur decomposition with a bounded number of
/// QR sweeps. Plain QR stalls on some exactly periodic matrices (a cycle
/// with zero diagonal), so on failure the matrix is shifted by a multiple of
/// the identity and the shift is subtracted back out.
pub fn dense_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, SpectralError> {
    let n = m.nrows();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    let scale = m.amax().max(1.0);
    for factor in [0.0, 0.37, -0.61, 1.13] {
        let s = factor * scale;
        let shifted = m + DMatrix::<f64>::identity(n, n) * s;
        if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, 100 * n.max(10)) {
            return Ok(schur.complex_eigenvalues().iter().map(|z| z - s).collect());
        }
    }
    Err(SpectralError::SchurNoConvergence)
}

/// Largest real part over the full spectrum. Intended for small matrices.
pub fn dense_spectral_abscissa(m: &DMatrix<f64>) -> Result<f64, SpectralError> {
    Ok(dense_eigenvalues(m)?
        .iter()
        .fold(f64::NEG_INFINITY, |a, z| a.max(z.re)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Digraph;

    fn dense_radius(m: &DMatrix<f64>) -> f64 {
        dense_eigenvalues(m)
            .unwrap()
            .iter()
            .fold(0.0_f64, |a, z| a.max(z.norm()))
    }

    fn cycle_matrix(weights: &[f64]) -> SparseMatrix {
        let m = weights.len();
        let g = Digraph::from_edges(m, (0..m).map(|i| (i, (i + 1) % m, weights[i]))).unwrap();
        g.adjacency_matrix()
    }

    #[test]
    fn unit_cycle_has_radius_one() {
        for m in [2, 3, 6, 11, 40] {
            let r =
                spectral_radius(&cycle_matrix(&vec![1.0; m]), &SpectralOptions::default()).unwrap();
            assert!((r.value - 1.0).abs() < 1e-10, "m={m}: {}", r.value);
        }
    }

    #[test]
    fn undirected_star_radius() {
        for n in [2usize, 5, 10, 37] {
            let edges = (1..n).flat_map(|j| [(0, j, 1.0), (j, 0, 1.0)]);
            let g = Digraph::from_edges(n, edges).unwrap();
            let r = spectral_radius(&g.adjacency_matrix(), &SpectralOptions::default()).unwrap();
            assert!(((r.value - ((n - 1) as f64).sqrt()).abs()) < 1e-10);
        }
    }

    #[test]
    fn certificate_holds_componentwise() {
        let m = cycle_matrix(&[0.2, 3.0, 1.5, 0.7]);
        let opts = SpectralOptions::default();
        let r = spectral_radius(&m, &opts).unwrap();
        let mu = m.mul_vec(&r.vector);
        for i in 0..4 {
            assert!(mu[i] <= (r.value + opts.tol) * r.vector[i] + 1e-15);
            assert!(mu[i] >= (r.value - opts.tol) * r.vector[i] - 1e-15);
        }
        let gm = (0.2f64 * 3.0 * 1.5 * 0.7).powf(0.25);
        assert!((r.value - gm).abs() < 1e-10);
    }

    #[test]
    fn zero_matrix() {
        let r = spectral_radius(&SparseMatrix::zeros(3), &SpectralOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn rejects_negative_entries() {
        let m = SparseMatrix::from_rows(1, vec![vec![(0, -1.0)]]);
        assert_eq!(
            spectral_radius(&m, &SpectralOptions::default()),
            Err(SpectralError::NegativeEntry)
        );
    }

    #[test]
    fn reducible_block_triangular_matches_dense() {
        // source node feeding a 3-cycle
        let g = Digraph::from_edges(
            4,
            [
                (0, 1, 1.0),
                (0, 2, 1.0),
                (0, 3, 1.0),
                (1, 2, 1.0),
                (2, 3, 1.0),
                (3, 1, 1.0),
            ],
        )
        .unwrap();
        let a = g.adjacency_matrix();
        let r = spectral_radius(&a, &SpectralOptions::default()).unwrap();
        assert!((r.value - dense_radius(&a.to_dense())).abs() < 1e-10);
        assert!((r.value - 1.0).abs() < 1e-10);
        assert!(r.residual < 1e-10);
    }

    #[test]
    fn metzler_examples() {
        let opts = SpectralOptions::default();
        let b = SparseMatrix::zeros(3);
        let d = [0.5, 0.2, 0.9];
        let r = dominant_metzler_eigenvalue(&b, &d, 1.0, &opts).unwrap();
        assert!((r.value + 0.2).abs() < 1e-12);

        let b = SparseMatrix::from_rows(1, vec![vec![(0, 0.7)]]);
        let r = dominant_metzler_eigenvalue(&b, &[0.3], 0.3, &opts).unwrap();
        assert!((r.value - 0.4).abs() < 1e-12);

        let b = cycle_matrix(&[0.5; 6]);
        let r = dominant_metzler_eigenvalue(&b, &[0.3; 6], 0.3, &opts).unwrap();
        assert!((r.value - 0.2).abs() < 1e-10);
        let mut dense = b.to_dense();
        for i in 0..6 {
            dense[(i, i)] -= 0.3;
        }
        assert!((dense_spectral_abscissa(&dense).unwrap() - 0.2).abs() < 1e-10);
    }

    #[test]
    fn metzler_rejects_small_shift() {
        let b = SparseMatrix::zeros(2);
        assert!(matches!(
            dominant_metzler_eigenvalue(&b, &[0.1, 0.4], 0.3, &SpectralOptions::default()),
            Err(SpectralError::InsufficientShift { .. })
        ));
    }

    #[test]
    fn metzler_shift_invariance() {
        let b = cycle_matrix(&[0.4, 0.1, 0.9, 0.3, 0.2]).add_diagonal(&[0.1, 0.0, 0.0, 0.2, 0.0]);
        let d = [0.3, 0.5, 0.2, 0.4, 0.6];
        let opts = SpectralOptions::default();
        let a = dominant_metzler_eigenvalue(&b, &d, 0.6, &opts)
            .unwrap()
            .value;
        let c = dominant_metzler_eigenvalue(&b, &d, 5.0, &opts)
            .unwrap()
            .value;
        assert!((a - c).abs() < 1e-10);
    }

    #[test]
    fn metzler_abscissa_handles_negative_diagonal() {
        let m = SparseMatrix::from_rows(
            2,
            vec![vec![(0, -1.0), (1, 2.0)], vec![(0, 0.5), (1, -3.0)]],
        );
        let r = metzler_abscissa(&m, &SpectralOptions::default()).unwrap();
        assert!((r.value - dense_spectral_abscissa(&m.to_dense()).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn defective_reducible_eigenvalue() {
        // node 0 has radius 0.5 on its own and feeds a 3-cycle of radius 0.5
        let rows = vec![
            vec![(0, 0.5)],
            vec![(0, 1.0), (3, 0.5)],
            vec![(1, 0.5)],
            vec![(2, 0.5)],
        ];
        let m = SparseMatrix::from_rows(4, rows);
        let r = spectral_radius(&m, &SpectralOptions::default()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12, "{}", r.value);
        assert!(r.residual < 1e-10);
        assert_eq!(r.vector[0], 0.0);
    }

    #[test]
    fn dominant_upstream_class_extends_downstream() {
        // 2-cycle of radius 2 feeding a self-loop of weight 0.5
        let rows = vec![vec![(1, 2.0)], vec![(0, 2.0)], vec![(0, 1.0), (2, 0.5)]];
        let m = SparseMatrix::from_rows(3, rows);
        let r = spectral_radius(&m, &SpectralOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        // (2 − 0.5) u₂ = u₀
        assert!((r.vector[2] - r.vector[0] / 1.5).abs() < 1e-12);
        assert!(r.residual < 1e-10);
    }

    #[test]
    fn reducible_matches_dense() {
        use rand::{Rng, SeedableRng};
        let opts = SpectralOptions::default();
        for seed in 0..20u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(6..=10);
            let mut next = || rng.random::<f64>();
            // lower-triangular pattern plus two small cycles: reducible
            let mut rows = vec![Vec::new(); n];
            for (i, row) in rows.iter_mut().enumerate() {
                for j in 0..i {
                    if next() < 0.3 {
                        row.push((j, next()));
                    }
                }
                row.push((i, next()));
            }
            rows[0].push((1, next()));
            rows[n - 1].push((n - 2, next()));
            rows[n - 2].push((n - 1, next()));
            let m = SparseMatrix::from_rows(n, rows);
            let r = spectral_radius(&m, &opts).unwrap();
            assert!(
                (r.value - dense_radius(&m.to_dense())).abs() < 1e-9,
                "seed {seed}"
            );
            assert!(r.residual < 1e-8, "seed {seed}: residual {}", r.residual);
        }
    }
}
