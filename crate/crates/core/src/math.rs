//! Small numerical helpers shared across modules.

/// Ceiling that treats values within a relative `1e-12` of an integer as
/// that integer, so exact multiples are not pushed up by rounding noise.
pub fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((mid + half * x, half * w));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_tolerates_rounding_noise() {
        assert_eq!(ceil_tol(1.0000000000000002), 1.0);
        assert_eq!(ceil_tol(2.999999999999999), 3.0);
        assert_eq!(ceil_tol(1.5), 2.0);
        assert_eq!(ceil_tol(0.0), 0.0);
        assert_eq!(ceil_tol(-0.3), 0.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let q = gauss_legendre(8, 0.0, 2.0);
        let i: f64 = q.iter().map(|(x, w)| w * x.powi(7)).sum();
        assert!((i - 2f64.powi(8) / 8.0).abs() < 1e-10);
        let s: f64 = q.iter().map(|(_, w)| w).sum();
        assert!((s - 2.0).abs() < 1e-13);
    }
}
