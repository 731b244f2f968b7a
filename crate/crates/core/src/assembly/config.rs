use std::fmt;
use std::str::FromStr;

use crate::approx::StencilParams;
use crate::error::{Error, Result};
use crate::point::{scale, sub, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Approach {
    Direct,
    Composed,
    Hybrid,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::Direct => "direct",
            Approach::Composed => "composed",
            Approach::Hybrid => "hybrid",
        })
    }
}

impl FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Approach::Direct),
            "composed" => Ok(Approach::Composed),
            "hybrid" => Ok(Approach::Hybrid),
            other => Err(Error::InvalidConfig(format!("unknown approach `{other}`"))),
        }
    }
}

/// Which rows enter the residual norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualNorm {
    AllRows,
    ForceRows,
}

impl fmt::Display for ResidualNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResidualNorm::AllRows => "all",
            ResidualNorm::ForceRows => "force",
        })
    }
}

impl FromStr for ResidualNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(ResidualNorm::AllRows),
            "force" => Ok(ResidualNorm::ForceRows),
            other => Err(Error::InvalidConfig(format!("unknown residual norm `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproachConfig {
    pub approach: Approach,
    /// Secondary-node offset as a fraction of the local spacing.
    pub alpha_d: f64,
    /// Order of the virtual finite-difference stencil (2 or 4).
    pub p_fd: u32,
    /// Inward shift of boundary collocation points as a fraction of spacing.
    pub alpha_s: f64,
    pub stencil: StencilParams,
}

impl ApproachConfig {
    pub fn new(approach: Approach) -> Self {
        ApproachConfig {
            approach,
            alpha_d: 0.5,
            p_fd: 2,
            alpha_s: 0.0,
            stencil: StencilParams::default(),
        }
    }

    /// Checks ranges and clamps `alpha_d` to its maximum; returns warnings.
    pub fn validate(&mut self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.p_fd != 2 && self.p_fd != 4 {
            return Err(Error::InvalidConfig(format!("p_fd must be 2 or 4, got {}", self.p_fd)));
        }
        if !(self.alpha_d > 0.0) {
            return Err(Error::InvalidConfig(format!("alpha_d must be positive, got {}", self.alpha_d)));
        }
        let max = alpha_d_max(self.p_fd);
        if self.alpha_d > max {
            let msg = format!(
                "alpha_d = {} exceeds {} for p_fd = {}; clamped",
                self.alpha_d, max, self.p_fd
            );
            log::warn!("{msg}");
            warnings.push(msg);
            self.alpha_d = max;
        }
        if !(self.alpha_s >= 0.0) || !self.alpha_s.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha_s must be nonnegative, got {}", self.alpha_s)));
        }
        if self.stencil.m % 2 == 0 {
            return Err(Error::InvalidConfig(format!("PHS order must be odd, got {}", self.stencil.m)));
        }
        if self.stencil.n_support() < crate::approx::Basis::count(self.stencil.degree) {
            return Err(Error::InvalidConfig(format!(
                "support size {} is smaller than the {} augmentation monomials",
                self.stencil.n_support(),
                crate::approx::Basis::count(self.stencil.degree)
            )));
        }
        Ok(warnings)
    }
}

pub fn alpha_d_max(p_fd: u32) -> f64 {
    if p_fd == 4 {
        0.5
    } else {
        1.0
    }
}

/// `p − alpha_s·h·n`.
pub fn shifted_eval_point(p: Point, n: Point, alpha_s: f64, h: f64) -> Point {
    sub(p, scale(n, alpha_s * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift() {
        assert_eq!(shifted_eval_point([1.0, 2.0], [0.0, 1.0], 0.0, 0.1), [1.0, 2.0]);
        let q = shifted_eval_point([1.0, 0.0], [1.0, 0.0], 0.5, 0.033);
        assert!((q[0] - (1.0 - 0.0165)).abs() < 1e-15 && q[1] == 0.0);
        // a node on y = 0 with normal (0, -1) moves off the line; with (1, 0) it stays
        assert_eq!(shifted_eval_point([0.5, 0.0], [1.0, 0.0], 0.5, 0.1)[1], 0.0);
        assert!(shifted_eval_point([0.5, 0.0], [0.0, -1.0], 0.5, 0.1)[1] > 0.0);
    }

    #[test]
    fn alpha_d_clamp() {
        let mut c = ApproachConfig::new(Approach::Hybrid);
        c.alpha_d = 0.9;
        c.p_fd = 4;
        let w = c.validate().unwrap();
        assert_eq!(c.alpha_d, 0.5);
        assert_eq!(w.len(), 1);
        c.p_fd = 3;
        assert!(c.validate().is_err());
    }
}
