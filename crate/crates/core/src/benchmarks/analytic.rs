//! Closed-form elastic fields of the benchmark problems.

use crate::constitutive::PlaneMode;
use crate::error::{Error, Result};
use crate::point::Point;

/// Stress components `[σ11, σ22, σ12]`.
pub type Stress2 = [f64; 3];

/// Cantilever of length `length` and depth `depth` loaded by an end shear of
/// resultant `force`, occupying `[0, L] × [0, D]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamParams {
    pub length: f64,
    pub depth: f64,
    pub force: f64,
    pub young: f64,
    pub poisson: f64,
}

impl BeamParams {
    pub fn inertia(&self) -> f64 {
        self.depth.powi(3) / 12.0
    }
}

pub fn timoshenko_exact(x1: f64, x2: f64, p: &BeamParams) -> Point {
    let (l, d, nu) = (p.length, p.depth, p.poisson);
    let c = p.force / (6.0 * p.young * p.inertia());
    let y = x2 - 0.5 * d;
    let u1 = c * y * ((6.0 * l - 3.0 * x1) * x1 + (2.0 + nu) * (x2 * x2 - d * x2));
    let u2 = -c * (3.0 * nu * y * y * (l - x1) + (4.0 + 5.0 * nu) * d * d * x1 / 4.0 + (3.0 * l - x1) * x1 * x1);
    [u1, u2]
}

pub fn timoshenko_stress(x1: f64, x2: f64, p: &BeamParams) -> Stress2 {
    let i = p.inertia();
    let y = x2 - 0.5 * p.depth;
    [
        p.force * y * (p.length - x1) / i,
        0.0,
        p.force / (2.0 * i) * (y * y - 0.25 * p.depth * p.depth),
    ]
}

/// Infinite plate with a circular hole of radius `radius` under far-field
/// tension `sigma_inf` along x1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoleParams {
    pub radius: f64,
    pub sigma_inf: f64,
    pub young: f64,
    pub poisson: f64,
    pub mode: PlaneMode,
}

impl HoleParams {
    pub fn shear_modulus(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    /// Kolosov constant.
    pub fn beta(&self) -> f64 {
        let nu = self.poisson;
        match self.mode {
            PlaneMode::PlaneStress => (3.0 - nu) / (1.0 + nu),
            PlaneMode::PlaneStrain => 3.0 - 4.0 * nu,
        }
    }

    fn check(&self, r: f64) -> Result<()> {
        if r < self.radius * (1.0 - 1e-12) {
            return Err(Error::OutsideDomain {
                x: r,
                y: 0.0,
                what: format!("radius below the hole radius {}", self.radius),
            });
        }
        Ok(())
    }
}

pub fn plate_hole_exact(r: f64, theta: f64, p: &HoleParams) -> Result<Point> {
    p.check(r)?;
    let a = p.radius;
    let b = p.beta();
    let pre = p.sigma_inf * a / (8.0 * p.shear_modulus());
    let (q, q3) = (a / r, (a / r).powi(3));
    let (c1, c3) = (theta.cos(), (3.0 * theta).cos());
    let (s1, s3) = (theta.sin(), (3.0 * theta).sin());
    let u1 = pre * ((b + 1.0) * c1 / q + 2.0 * q * ((b + 1.0) * c1 + c3) - 2.0 * q3 * c3);
    let u2 = pre * ((b - 3.0) * s1 / q + 2.0 * q * ((1.0 - b) * s1 + s3) - 2.0 * q3 * s3);
    Ok([u1, u2])
}

/// Cartesian Kirsch stresses.
pub fn plate_hole_stress(r: f64, theta: f64, p: &HoleParams) -> Result<Stress2> {
    p.check(r)?;
    let q2 = (p.radius / r).powi(2);
    let q4 = q2 * q2;
    let (c2, c4) = ((2.0 * theta).cos(), (4.0 * theta).cos());
    let (s2, s4) = ((2.0 * theta).sin(), (4.0 * theta).sin());
    let s = p.sigma_inf;
    Ok([
        s * (1.0 - q2 * (1.5 * c2 + c4) + 1.5 * q4 * c4),
        s * (-q2 * (0.5 * c2 - c4) - 1.5 * q4 * c4),
        s * (-q2 * (0.5 * s2 + s4) + 1.5 * q4 * s4),
    ])
}

/// Thick cylinder under internal pressure `pressure`, plane strain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusParams {
    pub r_in: f64,
    pub r_out: f64,
    pub pressure: f64,
    pub young: f64,
    pub poisson: f64,
}

impl AnnulusParams {
    fn check(&self, r: f64) -> Result<()> {
        let tol = 1e-12 * self.r_out;
        if r < self.r_in - tol || r > self.r_out + tol {
            return Err(Error::OutsideDomain {
                x: r,
                y: 0.0,
                what: format!("radius outside [{}, {}]", self.r_in, self.r_out),
            });
        }
        Ok(())
    }

    fn lame(&self) -> (f64, f64) {
        let nu = self.poisson;
        let g = self.young / (2.0 * (1.0 + nu));
        let lambda = self.young * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        (g, lambda)
    }
}

/// Radial displacement.
pub fn annulus_exact(r: f64, p: &AnnulusParams) -> Result<f64> {
    p.check(r)?;
    let (g, lambda) = p.lame();
    let (ri2, ro2) = (p.r_in * p.r_in, p.r_out * p.r_out);
    Ok(-ri2 * p.pressure * r / (2.0 * (g + lambda) * (ri2 - ro2)) - ri2 * ro2 * p.pressure / (2.0 * g * (ri2 - ro2) * r))
}

/// `(σ_rr, σ_φφ)`.
pub fn annulus_stress(r: f64, p: &AnnulusParams) -> Result<(f64, f64)> {
    p.check(r)?;
    let (ri2, ro2) = (p.r_in * p.r_in, p.r_out * p.r_out);
    let a = p.pressure * ri2 / (ro2 - ri2);
    let b = p.pressure * ri2 * ro2 / (ro2 - ri2);
    Ok((a - b / (r * r), a + b / (r * r)))
}

/// Cartesian displacement of the annulus at `x`.
pub fn annulus_displacement(x: Point, p: &AnnulusParams) -> Result<Point> {
    let r = x[0].hypot(x[1]);
    let ur = annulus_exact(r, p)?;
    Ok([ur * x[0] / r, ur * x[1] / r])
}

/// Cartesian stress of the annulus at `x`.
pub fn annulus_cartesian_stress(x: Point, p: &AnnulusParams) -> Result<Stress2> {
    let r = x[0].hypot(x[1]);
    let (srr, spp) = annulus_stress(r, p)?;
    let (c, s) = (x[0] / r, x[1] / r);
    Ok([srr * c * c + spp * s * s, srr * s * s + spp * c * c, (srr - spp) * c * s])
}

/// Polar components `(σ_rr, σ_φφ, σ_rφ)` of a Cartesian stress at `x`.
pub fn to_polar(x: Point, s: Stress2) -> (f64, f64, f64) {
    let phi = x[1].atan2(x[0]);
    let (c, sn) = (phi.cos(), phi.sin());
    let srr = s[0] * c * c + s[1] * sn * sn + 2.0 * s[2] * sn * c;
    let spp = s[0] * sn * sn + s[1] * c * c - 2.0 * s[2] * sn * c;
    let srp = (s[1] - s[0]) * sn * c + s[2] * (c * c - sn * sn);
    (srr, spp, srp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beam() -> BeamParams {
        BeamParams {
            length: 2.0,
            depth: 0.5,
            force: 1.0,
            young: 1.0,
            poisson: 0.3,
        }
    }

    /// Plane stress `[σ11, σ22, σ12]` from central differences of `u`.
    fn fd_stress(u: impl Fn(f64, f64) -> Point, x: f64, y: f64, e: f64, nu: f64, plane_strain: bool) -> Stress2 {
        let h = 1e-5;
        let ux = |i: usize| (u(x + h, y)[i] - u(x - h, y)[i]) / (2.0 * h);
        let uy = |i: usize| (u(x, y + h)[i] - u(x, y - h)[i]) / (2.0 * h);
        let (e11, e22, g12) = (ux(0), uy(1), uy(0) + ux(1));
        let g = e / (2.0 * (1.0 + nu));
        if plane_strain {
            let lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
            [(lam + 2.0 * g) * e11 + lam * e22, lam * e11 + (lam + 2.0 * g) * e22, g * g12]
        } else {
            let c = e / (1.0 - nu * nu);
            [c * (e11 + nu * e22), c * (nu * e11 + e22), g * g12]
        }
    }

    #[test]
    fn beam_fixed_point_and_stress() {
        let p = beam();
        let u = timoshenko_exact(0.0, p.depth / 2.0, &p);
        assert_eq!(u, [0.0, 0.0]);
        for &(x, y) in &[(0.3, 0.1), (1.2, 0.45), (1.9, 0.25)] {
            let s = fd_stress(|a, b| timoshenko_exact(a, b, &p), x, y, p.young, p.poisson, false);
            let ex = timoshenko_stress(x, y, &p);
            assert!(s[1].abs() < 1e-6, "σ22 = {}", s[1]);
            assert!((s[0] - ex[0]).abs() < 1e-6);
            assert!((s[2] - ex[2]).abs() < 1e-6);
        }
        // end shear resultant equals −F
        let n = 2000;
        let dy = p.depth / n as f64;
        let total: f64 = (0..n)
            .map(|k| timoshenko_stress(p.length, (k as f64 + 0.5) * dy, &p)[2] * dy)
            .sum();
        assert!((total + p.force).abs() < 1e-6);
    }

    #[test]
    fn beam_axial_displacement_odd_about_midplane() {
        let p = beam();
        let a = timoshenko_exact(0.7, 0.25 + 0.1, &p)[0];
        let b = timoshenko_exact(0.7, 0.25 - 0.1, &p)[0];
        assert!((a + b).abs() < 1e-12);
    }

    fn hole(mode: PlaneMode) -> HoleParams {
        HoleParams {
            radius: 0.25,
            sigma_inf: 1.0,
            young: 1.0,
            poisson: 0.3,
            mode,
        }
    }

    #[test]
    fn hole_symmetry_and_concentration() {
        let p = hole(PlaneMode::PlaneStress);
        for &r in &[0.25, 0.4, 0.9] {
            assert!(plate_hole_exact(r, 0.0, &p).unwrap()[1].abs() < 1e-14);
        }
        let s = plate_hole_stress(0.25, std::f64::consts::FRAC_PI_2, &p).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-12);
        assert!(plate_hole_exact(0.2, 0.0, &p).is_err());
        // far field along the axis: ε11 → σ∞ (β+1)/(8G)·2/R
        let r = 1e4;
        let d = (plate_hole_exact(r + 1.0, 0.0, &p).unwrap()[0] - plate_hole_exact(r - 1.0, 0.0, &p).unwrap()[0]) / 2.0;
        let lim = p.sigma_inf * (p.beta() + 1.0) / (8.0 * p.shear_modulus());
        assert!((d - lim).abs() < 1e-6 * lim);
    }

    #[test]
    fn hole_displacement_matches_kirsch_stress() {
        for mode in [PlaneMode::PlaneStress, PlaneMode::PlaneStrain] {
            let p = hole(mode);
            let u = |x: f64, y: f64| plate_hole_exact(x.hypot(y), y.atan2(x), &p).unwrap();
            for &(x, y) in &[(0.3, 0.2), (0.1, 0.6), (0.8, 0.8)] {
                let s = fd_stress(u, x, y, p.young, p.poisson, mode == PlaneMode::PlaneStrain);
                let ex = plate_hole_stress(x.hypot(y), y.atan2(x), &p).unwrap();
                for k in 0..3 {
                    assert!((s[k] - ex[k]).abs() < 1e-6, "{mode:?} {k}: {} vs {}", s[k], ex[k]);
                }
            }
        }
    }

    #[test]
    fn cosine_reading_of_last_term_breaks_equilibrium() {
        let p = hole(PlaneMode::PlaneStress);
        let pre = p.sigma_inf * p.radius / (8.0 * p.shear_modulus());
        let cos_variant = |x: f64, y: f64| {
            let (r, t) = (x.hypot(y), y.atan2(x));
            let mut u = plate_hole_exact(r, t, &p).unwrap();
            let q3 = (p.radius / r).powi(3);
            u[1] += pre * 2.0 * q3 * ((3.0 * t).sin() - (3.0 * t).cos());
            u
        };
        let (x, y) = (0.3, 0.2);
        let s = fd_stress(cos_variant, x, y, p.young, p.poisson, false);
        let ex = plate_hole_stress(x.hypot(y), y.atan2(x), &p).unwrap();
        let err = (0..3).map(|k| (s[k] - ex[k]).abs()).fold(0.0, f64::max);
        assert!(err > 1e-2);
    }

    fn ring() -> AnnulusParams {
        AnnulusParams {
            r_in: 1.0,
            r_out: 2.0,
            pressure: 1.0,
            young: 1.0,
            poisson: 0.3,
        }
    }

    #[test]
    fn annulus_stress_from_displacement() {
        let p = ring();
        let u = |x: f64, y: f64| annulus_displacement([x, y], &p).unwrap();
        for &(x, y) in &[(1.1, 0.2), (0.5, 1.5), (1.2, 1.2)] {
            let s = fd_stress(u, x, y, p.young, p.poisson, true);
            let ex = annulus_cartesian_stress([x, y], &p).unwrap();
            for k in 0..3 {
                assert!((s[k] - ex[k]).abs() < 1e-6);
            }
        }
        let (srr_in, _) = annulus_stress(1.0, &p).unwrap();
        let (srr_out, _) = annulus_stress(2.0, &p).unwrap();
        assert!((srr_in + 1.0).abs() < 1e-12 && srr_out.abs() < 1e-12);
    }

    #[test]
    fn annulus_monotone_and_limits() {
        let p = ring();
        let mut prev = f64::INFINITY;
        for k in 0..=20 {
            let r = 1.0 + k as f64 / 20.0;
            let u = annulus_exact(r, &p).unwrap();
            assert!(u > 0.0 && u < prev);
            prev = u;
        }
        assert!(annulus_exact(0.99, &p).is_err());
        assert!(annulus_exact(2.01, &p).is_err());
        // very large outer radius: the 1/r term dominates near the hole
        let big = AnnulusParams { r_out: 1e4, ..p };
        let g = p.young / (2.0 * (1.0 + p.poisson));
        let u = annulus_exact(1.0, &big).unwrap();
        assert!((u - 1.0 / (2.0 * g)).abs() < 1e-6);
        // direct substitution at the inner radius
        let (ri2, ro2) = (1.0, 4.0);
        let lam = 0.3 / (1.3 * 0.4);
        let gg = 1.0 / 2.6;
        let want = -ri2 / (2.0 * (gg + lam) * (ri2 - ro2)) - ri2 * ro2 / (2.0 * gg * (ri2 - ro2));
        assert_eq!(annulus_exact(1.0, &p).unwrap(), want);
    }

    #[test]
    fn polar_roundtrip() {
        let p = ring();
        let x = [0.9, 1.1];
        let (srr, spp, srp) = to_polar(x, annulus_cartesian_stress(x, &p).unwrap());
        let (er, ep) = annulus_stress(x[0].hypot(x[1]), &p).unwrap();
        assert!((srr - er).abs() < 1e-12 && (spp - ep).abs() < 1e-12 && srp.abs() < 1e-12);
    }
}
