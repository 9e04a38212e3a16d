//! Small numerical kernels shared by the field operations.

/// Finite-difference weights on arbitrary nodes (Fornberg's recursion).
/// Returns, for each derivative order `0..=m`, the weights applied to the
/// samples at `nodes` to approximate the derivative at `x0`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    assert!(n >= m + 1, "need at least m+1 nodes");
    let mut c = vec![vec![0.0f64; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * ((k as f64) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - (k as f64) * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    // Transpose to weights-per-derivative-order.
    (0..=m)
        .map(|k| (0..n).map(|i| c[i][k]).collect())
        .collect()
}

/// Stencil window `[start, start+len)` of `len` nodes around `center` inside
/// `0..total`, centered where possible.
pub fn stencil_window(center: usize, len: usize, total: usize) -> usize {
    let half = len / 2;
    if center <= half {
        0
    } else if center + (len - half) > total {
        total - len
    } else {
        center - half
    }
}

/// Solves a tridiagonal system in place (Thomas algorithm).
/// `lower[i]` multiplies x[i-1] in row i, `diag[i]` x[i], `upper[i]` x[i+1].
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [num_complex::Complex64],
) {
    let n = diag.len();
    let mut c = vec![0.0f64; n];
    let mut d = vec![num_complex::Complex64::new(0.0, 0.0); n];
    let mut beta = diag[0];
    assert!(beta.abs() > 0.0, "singular tridiagonal system");
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        assert!(beta.abs() > 0.0, "singular tridiagonal system");
        if i < n - 1 {
            c[i] = upper[i] / beta;
        }
        d[i] = (rhs[i] - d[i - 1] * lower[i]) / beta;
    }
    rhs[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = d[i] - rhs[i + 1] * c[i];
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence. Deterministic for any fixed `n`.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_central_second_derivative() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[2][0] - 1.0).abs() < 1e-12);
        assert!((w[2][1] + 2.0).abs() < 1e-12);
        assert!((w[2][2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fornberg_differentiates_quartic_exactly() {
        let nodes = [0.1, 0.35, 0.5, 0.77, 1.0];
        let f: Vec<f64> = nodes.iter().map(|x| x.powi(4)).collect();
        let w = fornberg_weights(0.5, &nodes, 1);
        let d: f64 = w[1].iter().zip(&f).map(|(a, b)| a * b).sum();
        assert!((d - 4.0 * 0.5f64.powi(3)).abs() < 1e-10);
    }

    #[test]
    fn tridiagonal_solve() {
        use num_complex::Complex64;
        let lower = [0.0, 1.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let upper = [1.0, 1.0, 1.0, 0.0];
        let x_true = [1.0, -2.0, 3.0, 0.5];
        let mut rhs = vec![Complex64::new(0.0, 0.0); 4];
        for i in 0..4 {
            let mut v = diag[i] * x_true[i];
            if i > 0 {
                v += lower[i] * x_true[i - 1];
            }
            if i < 3 {
                v += upper[i] * x_true[i + 1];
            }
            rhs[i] = Complex64::new(v, -v);
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        for i in 0..4 {
            assert!((rhs[i].re - x_true[i]).abs() < 1e-12);
            assert!((rhs[i].im + x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_nodes(8);
        // integral of x^10 over [-1,1] = 2/11; degree 10 < 2*8 so exact.
        let val: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(10)).sum();
        assert!((val - 2.0 / 11.0).abs() < 1e-13);
    }
}
