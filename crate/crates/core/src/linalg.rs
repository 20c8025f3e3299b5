//! Small fixed-size linear algebra helpers.

use nalgebra::{DMatrix, SMatrix, SVector, Vector2};

/// Eigenvalues of a symmetric matrix, sorted ascending.
pub fn sym_eigenvalues<const D: usize>(m: &SMatrix<f64, D, D>) -> Vec<f64> {
    let dm = DMatrix::from_fn(D, D, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut ev: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Eigenvalues of `m` restricted to the hyperplane orthogonal to the unit vector `n`.
pub fn tangential_eigenvalues<const D: usize>(m: &SMatrix<f64, D, D>, n: &SVector<f64, D>) -> Vec<f64> {
    let basis = tangent_basis(n);
    let k = basis.len();
    let dm = DMatrix::from_fn(k, k, |i, j| {
        0.5 * (basis[i].dot(&(m * basis[j])) + basis[j].dot(&(m * basis[i])))
    });
    let mut ev: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `n`.
pub fn tangent_basis<const D: usize>(n: &SVector<f64, D>) -> Vec<SVector<f64, D>> {
    let mut basis: Vec<SVector<f64, D>> = Vec::with_capacity(D.saturating_sub(1));
    for i in 0..D {
        let mut e = SVector::<f64, D>::zeros();
        e[i] = 1.0;
        let mut v = e - n * n.dot(&e);
        for b in &basis {
            v -= b * b.dot(&v);
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / norm);
        }
        if basis.len() + 1 == D {
            break;
        }
    }
    basis
}

/// Counterclockwise rotation by a quarter turn.
#[inline]
pub fn perp(v: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

#[inline]
pub fn cross(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Distance between two angles on the circle.
#[inline]
pub fn angle_dist(a: f64, b: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let d = (a - b).rem_euclid(tau);
    d.min(tau - d)
}

#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    theta.rem_euclid(std::f64::consts::TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    #[test]
    fn eigenvalues_match_known_spectrum() {
        let m = Matrix3::new(2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0);
        let ev = sym_eigenvalues(&m);
        let s2 = 2f64.sqrt();
        for (got, want) in ev.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn tangential_spectrum_drops_normal_direction() {
        let m = Matrix3::from_diagonal(&nalgebra::Vector3::new(0.0, 2.0, 5.0));
        let ev = tangential_eigenvalues(&m, &nalgebra::Vector3::x());
        assert_eq!(ev.len(), 2);
        assert!((ev[0] - 2.0).abs() < 1e-14 && (ev[1] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let n = nalgebra::Vector3::new(1.0, 2.0, -0.5).normalize();
        let b = tangent_basis(&n);
        assert_eq!(b.len(), 2);
        assert!(b[0].dot(&n).abs() < 1e-14 && b[1].dot(&n).abs() < 1e-14);
        assert!(b[0].dot(&b[1]).abs() < 1e-14);
    }

    #[test]
    fn angle_dist_wraps() {
        assert!((angle_dist(0.1, std::f64::consts::TAU - 0.1) - 0.2).abs() < 1e-14);
    }
}
