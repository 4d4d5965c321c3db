//! Partial-wave series for plane-wave scattering by a sound-soft sphere.

use num_complex::Complex64;

use crate::mesh::Vec3;

/// Spherical Bessel functions `j_0..=j_n` by downward (Miller) recurrence.
pub fn spherical_j(n: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; n + 1];
        out[0] = 1.0;
        return out;
    }
    let start = n + 20 + x as usize + (10.0 * x.sqrt()) as usize;
    let mut out = vec![0.0; n + 1];
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    for k in (1..=start).rev() {
        let jm1 = (2 * k + 1) as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if k - 1 <= n {
            out[k - 1] = j;
        }
        if j.abs() > 1e250 {
            // rescale to avoid overflow
            jp1 *= 1e-250;
            j *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    // normalise against whichever closed form is better conditioned
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let scale = if j0.abs() >= j1.abs() || n == 0 { j0 / out[0] } else { j1 / out[1] };
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Spherical Neumann functions `y_0..=y_n` by upward recurrence.
pub fn spherical_y(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    out[0] = -x.cos() / x;
    if n >= 1 {
        out[1] = -x.cos() / (x * x) - x.sin() / x;
    }
    for k in 1..n {
        out[k + 1] = (2 * k + 1) as f64 / x * out[k] - out[k - 1];
    }
    out
}

/// Legendre polynomials `P_0..=P_n` at `t`.
pub fn legendre(n: usize, t: f64) -> Vec<f64> {
    let mut p = vec![1.0; n + 1];
    if n >= 1 {
        p[1] = t;
    }
    for k in 1..n {
        p[k + 1] = ((2 * k + 1) as f64 * t * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
    }
    p
}

/// Partial-wave coefficients `(i/κ)(2n+1)A_n`, `A_n = −j_n(κa)/h_n^{(2)}(κa)`,
/// truncated once terms fall below 1e-14 of the leading magnitude, or at
/// `max_terms` if given.
pub fn sphere_coefficients(a: f64, kappa: f64, max_terms: Option<usize>) -> Vec<Complex64> {
    let x = kappa * a;
    let cap = max_terms.unwrap_or(x as usize + 60);
    let j = spherical_j(cap, x);
    let y = spherical_y(cap, x);
    let mut out: Vec<Complex64> = Vec::with_capacity(cap + 1);
    let mut biggest = 0.0f64;
    for n in 0..=cap {
        let h = Complex64::new(j[n], -y[n]);
        let an = -j[n] / h;
        let c = Complex64::i() / kappa * (2 * n + 1) as f64 * an;
        biggest = biggest.max(c.norm());
        out.push(c);
        if max_terms.is_none() && n as f64 > x && c.norm() < 1e-14 * biggest && !y[n].is_infinite() {
            break;
        }
        if !y[n].is_finite() {
            out.pop();
            break;
        }
    }
    out
}

/// Far-field amplitude at angle `cos θ = r̂·d` from precomputed coefficients.
pub fn sphere_series(coeffs: &[Complex64], cos_theta: f64) -> Complex64 {
    let p = legendre(coeffs.len().saturating_sub(1), cos_theta);
    coeffs.iter().zip(&p).map(|(c, p)| c * p).sum()
}

/// Analytic far field of a sound-soft sphere of radius `a` (centred at the
/// origin) for incidence direction `d`.
pub fn sphere_farfield_oracle(a: f64, kappa: f64, d: &Vec3, directions: &[Vec3]) -> Vec<Complex64> {
    let coeffs = sphere_coefficients(a, kappa, None);
    let d = d.normalize();
    directions
        .iter()
        .map(|r| sphere_series(&coeffs, r.normalize().dot(&d).clamp(-1.0, 1.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_closed_forms() {
        let x = 2.7;
        let j = spherical_j(3, x);
        let j2 = (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x);
        assert!((j[2] - j2).abs() < 1e-15);
        let y = spherical_y(2, x);
        let y2 = (-3.0 / (x * x) + 1.0) * x.cos() / x - 3.0 * x.sin() / (x * x);
        assert!((y[2] - y2).abs() < 1e-14);
    }

    #[test]
    fn wronskian() {
        // j_n y_{n-1} − j_{n-1} y_n = 1/x²
        for &x in &[0.05, 1.0, 3.1, 12.0] {
            let j = spherical_j(15, x);
            let y = spherical_y(15, x);
            for n in 1..8 {
                let w = j[n] * y[n - 1] - j[n - 1] * y[n];
                assert!((w * x * x - 1.0).abs() < 1e-10, "x={x} n={n}");
            }
        }
    }

    #[test]
    fn convergence_with_more_terms() {
        let c = sphere_coefficients(1.0, 2.0, None);
        let n = c.len();
        let more = sphere_coefficients(1.0, 2.0, Some(n - 1 + 5));
        for t in [-1.0, -0.3, 0.2, 1.0] {
            assert!((sphere_series(&c, t) - sphere_series(&more, t)).norm() < 1e-12);
        }
    }

    #[test]
    fn small_sphere_limit() {
        let a = 1.0;
        let f = sphere_farfield_oracle(a, 0.01, &Vec3::z(), &[Vec3::x(), -Vec3::z()]);
        for v in f {
            assert!((v - Complex64::new(-a, 0.0)).norm() < 0.03 * a);
        }
    }

    #[test]
    fn axisymmetric() {
        let d = Vec3::new(1.0, 2.0, -0.5).normalize();
        // two directions with equal r̂·d
        let e1 = d.cross(&Vec3::x()).normalize();
        let e2 = d.cross(&e1);
        let r1 = d * 0.3 + e1 * (1.0f64 - 0.09).sqrt();
        let r2 = d * 0.3 + e2 * (1.0f64 - 0.09).sqrt();
        let f = sphere_farfield_oracle(1.0, 2.0, &d, &[r1, r2]);
        assert!((f[0] - f[1]).norm() < 1e-12);
    }
}
