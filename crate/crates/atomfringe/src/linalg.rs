//! Small dense complex-matrix helpers for qubit registers: Kronecker products,
//! partial transpose and partial trace over tensor factors, Hermitian spectra
//! and trace norms.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn herm_eigenvalues(m: &CMat) -> Vec<f64> {
    // Symmetrize first so tiny non-Hermitian rounding never reaches the solver.
    let h = (m + m.adjoint()).scale(0.5);
    let mut v: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().cloned().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Trace norm ||X||_1 of a Hermitian matrix (sum of |eigenvalues|).
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    herm_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

/// Principal square root of a Hermitian PSD matrix; eigenvalues below zero
/// are clipped before the square root.
pub fn herm_sqrt(m: &CMat) -> CMat {
    let h = (m + m.adjoint()).scale(0.5);
    let n = h.nrows();
    let se = h.symmetric_eigen();
    let mut out = CMat::zeros(n, n);
    for k in 0..n {
        let lam = se.eigenvalues[k].max(0.0).sqrt();
        let vk = se.eigenvectors.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += vk[i] * vk[j].conj() * C64::new(lam, 0.0);
            }
        }
    }
    out
}

/// Transpose the `which`-th qubit factor of an n-qubit operator.
pub fn partial_transpose(rho: &CMat, which: usize, n_qubits: usize) -> CMat {
    let dim = 1usize << n_qubits;
    assert_eq!(rho.nrows(), dim);
    let bit = n_qubits - 1 - which; // qubit 0 is the most significant factor
    let mask = 1usize << bit;
    let mut out = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let ii = (i & !mask) | (j & mask);
            let jj = (j & !mask) | (i & mask);
            out[(ii, jj)] = rho[(i, j)];
        }
    }
    out
}

/// Partial trace keeping the qubits listed in `keep` (ascending order of the
/// original register), tracing the rest out.
pub fn partial_trace_keep(rho: &CMat, keep: &[usize], n_qubits: usize) -> CMat {
    let dim = 1usize << n_qubits;
    assert_eq!(rho.nrows(), dim);
    let kd = 1usize << keep.len();
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !keep.contains(q)).collect();
    let td = 1usize << traced.len();
    let expand = |bits: usize, qubits: &[usize]| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in qubits.iter().enumerate() {
            if bits >> (qubits.len() - 1 - pos) & 1 == 1 {
                idx |= 1 << (n_qubits - 1 - q);
            }
        }
        idx
    };
    let mut out = CMat::zeros(kd, kd);
    for a in 0..kd {
        for b in 0..kd {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..td {
                let row = expand(a, keep) | expand(t, &traced);
                let col = expand(b, keep) | expand(t, &traced);
                acc += rho[(row, col)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Outer product |v><v|.
pub fn projector(v: &CVec) -> CMat {
    v * v.adjoint()
}
