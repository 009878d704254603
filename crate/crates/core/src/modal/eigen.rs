use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network_model::StateSpaceModel;

/// Eigenbases with a condition number above this are rejected.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Relative imaginary part tolerated on an eigenvalue that should be real.
const IMAG_TOLERANCE: f64 = 1e-9;

/// Eigenvalues and eigenvectors of a state matrix, `A V = V Λ`.
///
/// Modes are sorted by decreasing `|λ|`, so the smallest time constant comes
/// first. Eigenvector columns have unit Euclidean norm.
#[derive(Clone, Debug)]
pub struct Eigenbasis {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub condition: f64,
}

impl Eigenbasis {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `τ = -1/λ` per mode.
    pub fn time_constants(&self) -> Vec<f64> {
        self.values.iter().map(|&l| -1.0 / l).collect()
    }
}

pub fn eigendecompose(model: &StateSpaceModel) -> Result<Eigenbasis> {
    eigendecompose_matrix(model.a())
}

/// Eigendecomposition of a real matrix with a real spectrum.
///
/// State matrices of RC circuits are `-C⁻¹K` with `K` symmetric, so a positive
/// diagonal `D` makes `D⁻¹AD` symmetric. That similarity is recovered from the
/// sparsity pattern of `A` and the symmetric solver is used; any other matrix
/// falls back to a Schur-based route.
pub fn eigendecompose_matrix(a: &DMatrix<f64>) -> Result<Eigenbasis> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "state matrix must be square and non-empty, got {:?}",
            a.shape()
        )));
    }
    let (values, vectors) = match diagonal_symmetrizer(a) {
        Some(scale) => symmetric_route(a, &scale),
        None => general_route(a)?,
    };

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].abs().total_cmp(&values[i].abs()).then(i.cmp(&j)));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| values[i]));
    let mut vectors = vectors.select_columns(&order);
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }

    let sv = vectors.clone().singular_values();
    let condition = if sv.min() > 0.0 {
        sv.max() / sv.min()
    } else {
        f64::INFINITY
    };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned {
            cond: condition,
            limit: CONDITION_LIMIT,
        });
    }
    let inverse = vectors.clone().try_inverse().ok_or(Error::IllConditioned {
        cond: f64::INFINITY,
        limit: CONDITION_LIMIT,
    })?;
    Ok(Eigenbasis {
        values,
        vectors,
        inverse,
        condition,
    })
}

/// Positive scaling `d` such that `S_ij = A_ij d_j / d_i` is symmetric, if one exists.
fn diagonal_symmetrizer(a: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = a.nrows();
    let mut d = vec![f64::NAN; n];
    for root in 0..n {
        if !d[root].is_nan() {
            continue;
        }
        d[root] = 1.0;
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (aij, aji) = (a[(i, j)], a[(j, i)]);
                if aij == 0.0 && aji == 0.0 {
                    continue;
                }
                if aij * aji <= 0.0 {
                    return None;
                }
                if d[j].is_nan() {
                    d[j] = d[i] * (aji / aij).sqrt();
                    queue.push_back(j);
                }
            }
        }
    }
    // Cycles must agree with the spanning-tree scaling.
    for i in 0..n {
        for j in (i + 1)..n {
            let sij = a[(i, j)] * d[j] / d[i];
            let sji = a[(j, i)] * d[i] / d[j];
            if (sij - sji).abs() > 1e-9 * sij.abs().max(sji.abs()) {
                return None;
            }
        }
    }
    Some(DVector::from_vec(d))
}

fn symmetric_route(a: &DMatrix<f64>, d: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let s = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * d[j] / d[i]);
    let s = (&s + s.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    // V = D W
    let vectors = DMatrix::from_diagonal(d) * eig.eigenvectors;
    (eig.eigenvalues, vectors)
}

fn general_route(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let complex = a.clone().complex_eigenvalues();
    let mut values = DVector::zeros(n);
    for (i, z) in complex.iter().enumerate() {
        if z.im.abs() > IMAG_TOLERANCE * z.re.abs() {
            return Err(Error::Spectrum(format!(
                "complex eigenvalue {:.6e}{:+.6e}i",
                z.re, z.im
            )));
        }
        values[i] = z.re;
    }
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let shifted = a - DMatrix::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .expect("non-empty");
        vectors.set_column(k, &v_t.row(imin).transpose());
    }
    Ok((values, vectors))
}
