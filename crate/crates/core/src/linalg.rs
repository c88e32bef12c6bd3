//! Dense Hermitian eigen-decomposition and ladder-operator matrices.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigenpairs of a real symmetric matrix, ascending.
pub fn eigh_real(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), m.ncols());
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        fix_sign_real(&mut v);
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Eigenvalues only, ascending.
pub fn eigvals_real(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenpairs of a complex Hermitian matrix, ascending.
pub fn eigh_complex(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), m.ncols());
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        fix_phase_complex(&mut v);
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

// Largest-magnitude component made positive so eigenvectors are reproducible.
fn fix_sign_real(v: &mut DVector<f64>) {
    if let Some((_, &x)) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
    {
        if x < 0.0 {
            v.neg_mut();
        }
    }
}

fn fix_phase_complex(v: &mut DVector<Complex64>) {
    if let Some((_, &z)) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()).then(b.0.cmp(&a.0)))
    {
        if z.norm() > 0.0 {
            let phase = z.conj() / z.norm();
            v.iter_mut().for_each(|c| *c *= phase);
        }
    }
}

/// `a + a†` truncated to `dim` oscillator states.
pub fn ladder_sum(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        let s = (k as f64).sqrt();
        m[(k - 1, k)] = s;
        m[(k, k - 1)] = s;
    }
    m
}

/// `a† - a` truncated to `dim` oscillator states (real antisymmetric).
pub fn ladder_diff(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        let s = (k as f64).sqrt();
        m[(k, k - 1)] = s;
        m[(k - 1, k)] = -s;
    }
    m
}

/// `a` truncated to `dim` states.
pub fn annihilation(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        m[(k - 1, k)] = (k as f64).sqrt();
    }
    m
}

/// Nodes and eigenvectors of the truncated `a + a†` matrix.
pub struct QuadratureBasis {
    pub nodes: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

static QUADRATURE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureBasis>>>> = OnceLock::new();

/// The spectral decomposition of `a + a†` is universal for a given size, so it
/// is computed once per size and shared.
pub fn quadrature_basis(size: usize) -> Arc<QuadratureBasis> {
    let cache = QUADRATURE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("quadrature cache poisoned").get(&size) {
        return Arc::clone(b);
    }
    let (nodes, vectors) = eigh_real(&ladder_sum(size));
    let basis = Arc::new(QuadratureBasis { nodes, vectors });
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .entry(size)
        .or_insert_with(|| Arc::clone(&basis))
        .clone()
}

/// Matrix of `f(scale · (a + a†))` on the first `dim` oscillator states,
/// evaluated spectrally in an enlarged basis of `aux` states.
pub fn oscillator_function<F: Fn(f64) -> f64>(dim: usize, aux: usize, scale: f64, f: F) -> DMatrix<f64> {
    let basis = quadrature_basis(aux.max(dim));
    let v = basis.vectors.rows(0, dim);
    let weights: Vec<f64> = basis.nodes.iter().map(|&x| f(scale * x)).collect();
    let mut scaled = v.clone_owned();
    for (j, w) in weights.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*w);
    }
    let mut out = &scaled * v.transpose();
    // symmetrize away rounding
    for i in 0..dim {
        for j in 0..i {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    out
}

/// Kronecker product of two real matrices.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorts_ascending() {
        let m = DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let (vals, vecs) = eigh_real(&m);
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        assert!((vecs[(1, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_reproduces_square() {
        // x² is a polynomial of low degree, so the spectral evaluation is exact
        // away from the truncation edge.
        let dim = 20;
        let sq = oscillator_function(dim, 40, 1.0, |x| x * x);
        let x = ladder_sum(40);
        let exact = (&x * &x).view((0, 0), (dim, dim)).clone_owned();
        assert!((sq - exact).amax() < 1e-10);
    }

    #[test]
    fn complex_eigh_matches_real_for_real_input() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let c = m.map(|x| Complex64::new(x, 0.0));
        let (a, _) = eigh_real(&m);
        let (b, _) = eigh_complex(&c);
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    }
}
