//! Small dense helpers over row-major `Vec<f64>` storage.
//!
//! Every matrix handled here is at most a few hundred rows wide, so plain
//! slices are sufficient and keep the arithmetic order fully deterministic.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `m * x` for a row-major `d x d` matrix.
pub fn mat_vec(m: &[f64], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    debug_assert_eq!(m.len(), d * d);
    if d == 0 {
        return Vec::new();
    }
    m.chunks_exact(d).map(|row| dot(row, x)).collect()
}

/// `xᵀ m x` for a row-major `d x d` matrix.
pub fn quad_form(m: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    debug_assert_eq!(m.len(), d * d);
    if d == 0 {
        return 0.0;
    }
    m.chunks_exact(d)
        .zip(x)
        .map(|(row, xi)| xi * dot(row, x))
        .sum()
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky factor.
///
/// Returns `None` if a pivot is not strictly positive.
pub fn spd_inverse(m: &[f64], d: usize) -> Option<Vec<f64>> {
    // lower-triangular factor L with m = L Lᵀ
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = m[i * d + j];
            for p in 0..j {
                s -= l[i * d + p] * l[j * d + p];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    // L⁻¹ by forward substitution, column by column
    let mut linv = vec![0.0; d * d];
    for c in 0..d {
        for i in c..d {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for p in c..i {
                s -= l[i * d + p] * linv[p * d + c];
            }
            linv[i * d + c] = s / l[i * d + i];
        }
    }
    // m⁻¹ = L⁻ᵀ L⁻¹
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = 0.0;
            for p in i..d {
                s += linv[p * d + i] * linv[p * d + j];
            }
            inv[i * d + j] = s;
            inv[j * d + i] = s;
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_inverse_of_small_matrix() {
        let m = [4.0, 2.0, 2.0, 3.0];
        let inv = spd_inverse(&m, 2).unwrap();
        // det = 8
        let expected = [3.0 / 8.0, -2.0 / 8.0, -2.0 / 8.0, 4.0 / 8.0];
        for (a, b) in inv.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn spd_inverse_rejects_indefinite() {
        assert!(spd_inverse(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn quad_form_matches_mat_vec() {
        let m = [2.0, 0.5, 0.5, 1.0];
        let x = [0.3, -0.7];
        assert!((quad_form(&m, &x) - dot(&x, &mat_vec(&m, &x))).abs() < 1e-15);
    }
}
