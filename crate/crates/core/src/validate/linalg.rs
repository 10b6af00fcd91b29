//! Dense helpers for symmetric matrices up to 4x4: determinant, inverse via
//! the adjugate, and eigenvalues by cyclic Jacobi rotations. Kept hand-rolled
//! so the oracle path stays a glass box.

/// Row-major square matrix view.
pub fn det(n: usize, a: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    match n {
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        _ => {
            let mut acc = 0.0;
            for j in 0..n {
                let m = minor(n, a, 0, j);
                let c = det(n - 1, &m);
                let signed = if j % 2 == 0 { c } else { -c };
                acc += a[j] * signed;
            }
            acc
        }
    }
}

fn minor(n: usize, a: &[f64], row: usize, col: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((n - 1) * (n - 1));
    for i in 0..n {
        if i == row {
            continue;
        }
        for j in 0..n {
            if j == col {
                continue;
            }
            out.push(a[i * n + j]);
        }
    }
    out
}

/// Inverse through the adjugate; returns `None` when the determinant is not
/// usable.
pub fn inverse(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let d = det(n, a);
    if !d.is_finite() || d == 0.0 {
        return None;
    }
    if n == 1 {
        return Some(vec![1.0 / a[0]]);
    }
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let m = minor(n, a, j, i);
            let c = det(n - 1, &m);
            let signed = if (i + j) % 2 == 0 { c } else { -c };
            inv[i * n + j] = signed / d;
        }
    }
    Some(inv)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
pub fn sym_eigenvalues(n: usize, a: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off <= 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    eigs
}

/// Spectral condition number of a symmetric matrix; `f64::INFINITY` when the
/// smallest eigenvalue magnitude underflows.
pub fn sym_condition(n: usize, a: &[f64]) -> f64 {
    let eigs = sym_eigenvalues(n, a);
    let max = eigs.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    let min = eigs.iter().fold(f64::INFINITY, |acc, e| acc.min(e.abs()));
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}
