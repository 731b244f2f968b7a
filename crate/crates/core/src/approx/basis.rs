use crate::error::{Error, Result};

/// Monomials `x^a y^b` with `a + b ≤ degree`, graded order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    degree: u32,
    exps: Vec<[u32; 2]>,
}

impl Basis {
    pub fn new(degree: u32) -> Self {
        let mut exps = Vec::with_capacity(Self::count(degree));
        for d in 0..=degree {
            for b in 0..=d {
                exps.push([d - b, b]);
            }
        }
        Basis { degree, exps }
    }

    /// `binomial(degree + 2, degree)`.
    pub fn count(degree: u32) -> usize {
        let p = degree as usize;
        (p + 1) * (p + 2) / 2
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[[u32; 2]] {
        &self.exps
    }

    /// Value and derivatives `[f, fx, fy, fxx, fxy, fyy]` of monomial `k` at the
    /// scaled local coordinates `(xi, eta)`. Derivatives are with respect to
    /// the scaled coordinates.
    pub fn eval(&self, k: usize, xi: f64, eta: f64) -> [f64; 6] {
        let [a, b] = self.exps[k];
        let pw = |x: f64, n: u32, d: u32| -> f64 {
            if d > n {
                return 0.0;
            }
            let mut c = 1.0;
            for t in 0..d {
                c *= (n - t) as f64;
            }
            c * x.powi((n - d) as i32)
        };
        [
            pw(xi, a, 0) * pw(eta, b, 0),
            pw(xi, a, 1) * pw(eta, b, 0),
            pw(xi, a, 0) * pw(eta, b, 1),
            pw(xi, a, 2) * pw(eta, b, 0),
            pw(xi, a, 1) * pw(eta, b, 1),
            pw(xi, a, 0) * pw(eta, b, 2),
        ]
    }
}

fn check_order(m: u32) -> Result<()> {
    if m % 2 == 0 {
        return Err(Error::InvalidConfig(format!("PHS order must be odd, got {m}")));
    }
    Ok(())
}

/// `(r / scale)^m`.
pub fn phs_value(r: f64, scale: f64, m: u32) -> Result<f64> {
    check_order(m)?;
    if !(scale > 0.0) || r < 0.0 {
        return Err(Error::InvalidInput(format!("phs_value: r = {r}, scale = {scale}")));
    }
    Ok((r / scale).powi(m as i32))
}

/// `[φ, φx, φy, φxx, φxy, φyy]` for `φ = (|d| / scale)^m` with `d = p − center`.
///
/// For `m ≥ 3` all entries vanish continuously at `d = 0`.
pub fn phs_derivatives(d: [f64; 2], scale: f64, m: u32) -> [f64; 6] {
    let r2 = d[0] * d[0] + d[1] * d[1];
    if r2 == 0.0 {
        return [0.0; 6];
    }
    let r = r2.sqrt();
    let mf = m as f64;
    let inv = scale.powi(-(m as i32));
    let rm2 = r.powi(m as i32 - 2);
    let rm4 = rm2 / r2;
    [
        r.powi(m as i32) * inv,
        mf * rm2 * d[0] * inv,
        mf * rm2 * d[1] * inv,
        mf * ((mf - 2.0) * rm4 * d[0] * d[0] + rm2) * inv,
        mf * (mf - 2.0) * rm4 * d[0] * d[1] * inv,
        mf * ((mf - 2.0) * rm4 * d[1] * d[1] + rm2) * inv,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts() {
        assert_eq!(Basis::count(2), 6);
        assert_eq!(Basis::count(3), 10);
        assert_eq!(Basis::count(5), 21);
        let b = Basis::new(2);
        assert_eq!(b.exponents(), &[[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]);
    }

    #[test]
    fn phs_values() {
        assert_eq!(phs_value(0.3, 0.3, 3).unwrap(), 1.0);
        assert_eq!(phs_value(0.0, 0.3, 3).unwrap(), 0.0);
        assert!((phs_value(2.0, 1.0, 3).unwrap() - 8.0).abs() < 1e-15);
        assert!(phs_value(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn phs_derivatives_match_finite_differences() {
        let s = 0.7;
        let d = [0.31, -0.18];
        let e = 1e-5;
        for m in [1u32, 3, 5] {
            let f = |x: [f64; 2]| phs_derivatives(x, s, m);
            let c = f(d);
            let gx = (f([d[0] + e, d[1]])[0] - f([d[0] - e, d[1]])[0]) / (2.0 * e);
            let gy = (f([d[0], d[1] + e])[0] - f([d[0], d[1] - e])[0]) / (2.0 * e);
            let hxx = (f([d[0] + e, d[1]])[1] - f([d[0] - e, d[1]])[1]) / (2.0 * e);
            let hxy = (f([d[0], d[1] + e])[1] - f([d[0], d[1] - e])[1]) / (2.0 * e);
            let hyy = (f([d[0], d[1] + e])[2] - f([d[0], d[1] - e])[2]) / (2.0 * e);
            for (a, b) in [(c[1], gx), (c[2], gy), (c[3], hxx), (c[4], hxy), (c[5], hyy)] {
                assert!((a - b).abs() < 1e-7 * (1.0 + a.abs()), "m={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn monomial_derivatives() {
        let b = Basis::new(3);
        // x^2 y at (2, 3): value 12, fx 12, fy 4, fxx 6, fxy 4, fyy 0
        let k = b.exponents().iter().position(|e| *e == [2, 1]).unwrap();
        assert_eq!(b.eval(k, 2.0, 3.0), [12.0, 12.0, 4.0, 6.0, 4.0, 0.0]);
    }
}
