//! Small dense helpers on slices. Matrices are row-major `m × m`.

use alloc::vec;
use alloc::vec::Vec;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Minkowski product with signature `(-, +, ..., +)`.
pub fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + dot(&a[1..], &b[1..])
}

pub fn quad_form(mat: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let m = u.len();
    let mut acc = 0.0;
    for i in 0..m {
        let row = &mat[i * m..(i + 1) * m];
        acc += u[i] * dot(row, v);
    }
    acc
}

/// Inverse by Gauss–Jordan elimination with partial pivoting. `None` if singular.
pub fn invert(mat: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut a = mat.to_vec();
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for col in 0..m {
        let mut piv = col;
        let mut best = libm::fabs(a[col * m + col]);
        for r in col + 1..m {
            let v = libm::fabs(a[r * m + col]);
            if v > best {
                best = v;
                piv = r;
            }
        }
        if !(best > 1e-300) {
            return None;
        }
        if piv != col {
            for j in 0..m {
                a.swap(col * m + j, piv * m + j);
                inv.swap(col * m + j, piv * m + j);
            }
        }
        let d = a[col * m + col];
        for j in 0..m {
            a[col * m + j] /= d;
            inv[col * m + j] /= d;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = a[r * m + col];
            if f != 0.0 {
                for j in 0..m {
                    a[r * m + j] -= f * a[col * m + j];
                    inv[r * m + j] -= f * inv[col * m + j];
                }
            }
        }
    }
    Some(inv)
}

/// Cholesky factor test: true when `mat` is symmetric positive definite.
#[cfg(test)]
pub fn is_spd(mat: &[f64], m: usize) -> bool {
    for i in 0..m {
        for j in 0..i {
            let (a, b) = (mat[i * m + j], mat[j * m + i]);
            if libm::fabs(a - b) > 1e-9 * (1.0 + libm::fabs(a) + libm::fabs(b)) {
                return false;
            }
        }
    }
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = mat[i * m + j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return false;
                }
                l[i * m + i] = libm::sqrt(s);
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    true
}
