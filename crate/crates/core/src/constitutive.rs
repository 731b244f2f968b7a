//! Small-strain isotropic elasticity and von Mises plasticity with isotropic
//! hardening, in Voigt-4 notation `(11, 22, 33, 12)` with engineering shear
//! strain.

use crate::error::{Error, Result};

pub type Voigt = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlaneMode {
    PlaneStrain,
    PlaneStress,
}

impl PlaneMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PlaneMode::PlaneStrain => "plane_strain",
            PlaneMode::PlaneStress => "plane_stress",
        }
    }
}

/// Hardening part `τ(ε̄ᵖ)` of the yield stress `σ_y = σ_y0 + τ(ε̄ᵖ)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Hardening {
    /// `τ = H·ε̄ᵖ`.
    Linear(f64),
    /// Piecewise linear through `(ε̄ᵖ_k, τ_k)` with `ε̄ᵖ_0 = 0, τ_0 = 0`;
    /// the last slope continues past the table.
    Table(Vec<[f64; 2]>),
}

impl Hardening {
    fn segment(&self, ep: f64) -> (f64, f64) {
        match self {
            Hardening::Linear(h) => (h * ep, *h),
            Hardening::Table(pts) => {
                let k = pts
                    .windows(2)
                    .position(|w| ep <= w[1][0])
                    .unwrap_or(pts.len() - 2);
                let [e0, t0] = pts[k];
                let [e1, t1] = pts[k + 1];
                let slope = (t1 - t0) / (e1 - e0);
                (t0 + slope * (ep - e0), slope)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Material {
    pub young: f64,
    pub poisson: f64,
    pub sigma_y0: f64,
    pub hardening: Hardening,
    pub mode: PlaneMode,
}

impl Material {
    pub fn elastic(young: f64, poisson: f64, mode: PlaneMode) -> Result<Self> {
        let m = Material {
            young,
            poisson,
            sigma_y0: f64::INFINITY,
            hardening: Hardening::Linear(0.0),
            mode,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn plastic(young: f64, poisson: f64, sigma_y0: f64, hardening: Hardening) -> Result<Self> {
        let m = Material {
            young,
            poisson,
            sigma_y0,
            hardening,
            mode: PlaneMode::PlaneStrain,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.young > 0.0) {
            return Err(Error::InvalidConfig(format!("Young's modulus must be positive, got {}", self.young)));
        }
        if self.poisson >= 0.5 {
            return Err(Error::InvalidConfig("Poisson ratio 0.5 is the incompressible limit".into()));
        }
        if !(self.poisson > -1.0) {
            return Err(Error::InvalidConfig(format!("Poisson ratio must exceed -1, got {}", self.poisson)));
        }
        if !(self.sigma_y0 > 0.0) {
            return Err(Error::InvalidConfig(format!("initial yield stress must be positive, got {}", self.sigma_y0)));
        }
        if self.is_plastic() && self.mode == PlaneMode::PlaneStress {
            return Err(Error::InvalidConfig("plasticity is only supported in plane strain".into()));
        }
        match &self.hardening {
            Hardening::Linear(h) if !h.is_finite() => {
                return Err(Error::InvalidConfig("hardening modulus must be finite".into()))
            }
            Hardening::Table(pts) => {
                if pts.len() < 2 || pts[0] != [0.0, 0.0] {
                    return Err(Error::InvalidConfig(
                        "hardening table needs at least two points starting at (0, 0)".into(),
                    ));
                }
                if pts.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(Error::InvalidConfig("hardening table strains must increase".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_plastic(&self) -> bool {
        self.sigma_y0.is_finite()
    }

    /// Shear modulus `μ = G`.
    pub fn mu(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    pub fn lambda(&self) -> f64 {
        self.poisson * self.young / ((1.0 + self.poisson) * (1.0 - 2.0 * self.poisson))
    }

    /// `(σ_y, H)` at accumulated plastic strain `ep`.
    pub fn yield_stress(&self, ep: f64) -> (f64, f64) {
        let (tau, h) = self.hardening.segment(ep);
        (self.sigma_y0 + tau, h)
    }

    pub fn elastic_tensor(&self) -> Mat4 {
        let mu = self.mu();
        match self.mode {
            PlaneMode::PlaneStrain => {
                let l = self.lambda();
                let a = 2.0 * mu + l;
                [
                    [a, l, l, 0.0],
                    [l, a, l, 0.0],
                    [l, l, a, 0.0],
                    [0.0, 0.0, 0.0, mu],
                ]
            }
            PlaneMode::PlaneStress => {
                let c = self.young / (1.0 - self.poisson * self.poisson);
                let nc = self.poisson * c;
                [
                    [c, nc, 0.0, 0.0],
                    [nc, c, 0.0, 0.0],
                    [0.0, 0.0, 0.0, 0.0],
                    [0.0, 0.0, 0.0, mu],
                ]
            }
        }
    }
}

/// History at one material point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MaterialState {
    pub stress: Voigt,
    pub strain: Voigt,
    pub elastic_strain: Voigt,
    pub plastic_strain: Voigt,
    pub epbar: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tangent {
    pub d: Mat4,
    pub plastic: bool,
}

/// Result of one return-mapping call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Update {
    pub state: MaterialState,
    pub tangent: Tangent,
    pub dgamma: f64,
}

pub fn mat_vec(d: &Mat4, v: &Voigt) -> Voigt {
    std::array::from_fn(|i| (0..4).map(|k| d[i][k] * v[k]).sum())
}

/// Deviatoric part of a Voigt stress.
pub fn deviator(s: &Voigt) -> Voigt {
    let p = (s[0] + s[1] + s[2]) / 3.0;
    [s[0] - p, s[1] - p, s[2] - p, s[3]]
}

/// `J₂ = ½ s:s` of a Voigt stress.
pub fn j2(s: &Voigt) -> f64 {
    let d = deviator(s);
    0.5 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) + d[3] * d[3]
}

pub fn von_mises(s: &Voigt) -> f64 {
    (3.0 * j2(s)).sqrt()
}

/// `Φ = √(3 J₂) − σ_y(ε̄ᵖ)`.
pub fn yield_function(stress: &Voigt, epbar: f64, model: &Material) -> f64 {
    von_mises(stress) - model.yield_stress(epbar).0
}

/// Elastic predictor / radial-return corrector for the increment `de`.
pub fn return_map(state: &MaterialState, de: &Voigt, model: &Material) -> Result<Update> {
    let de_el = model.elastic_tensor();
    let dsig = mat_vec(&de_el, de);
    let trial: Voigt = std::array::from_fn(|i| state.stress[i] + dsig[i]);
    let strain: Voigt = std::array::from_fn(|i| state.strain[i] + de[i]);
    let elastic = Update {
        state: MaterialState {
            stress: trial,
            strain,
            elastic_strain: std::array::from_fn(|i| state.elastic_strain[i] + de[i]),
            plastic_strain: state.plastic_strain,
            epbar: state.epbar,
        },
        tangent: Tangent {
            d: de_el,
            plastic: false,
        },
        dgamma: 0.0,
    };
    if !model.is_plastic() {
        return Ok(elastic);
    }

    let s_tr = deviator(&trial);
    let q_tr = von_mises(&trial);
    let sy0 = model.sigma_y0;
    let phi_tr = q_tr - model.yield_stress(state.epbar).0;
    if phi_tr <= NEWTON_RTOL * sy0 {
        return Ok(elastic);
    }

    let g = model.mu();
    let mut dgamma = 0.0;
    let mut residual = phi_tr;
    let mut h_cur = model.yield_stress(state.epbar).1;
    let mut iter = 0;
    while residual.abs() > NEWTON_RTOL * sy0 {
        if iter == NEWTON_MAX_ITER {
            return Err(Error::MaterialNonConvergence {
                point: usize::MAX,
                residual,
            });
        }
        dgamma -= residual / (-3.0 * g - h_cur);
        let (sy, h) = model.yield_stress(state.epbar + dgamma);
        h_cur = h;
        residual = q_tr - 3.0 * g * dgamma - sy;
        iter += 1;
    }
    if dgamma < 0.0 {
        return Err(Error::Internal(format!("negative plastic multiplier {dgamma:e}")));
    }

    let factor = 1.0 - 3.0 * g * dgamma / q_tr;
    let p = (trial[0] + trial[1] + trial[2]) / 3.0;
    let stress = [
        factor * s_tr[0] + p,
        factor * s_tr[1] + p,
        factor * s_tr[2] + p,
        factor * s_tr[3],
    ];
    // Δεᵖ = Δγ·(3/2)·s/q, shear stored as engineering strain
    let c = 1.5 * dgamma / q_tr;
    let dep = [c * s_tr[0], c * s_tr[1], c * s_tr[2], 2.0 * c * s_tr[3]];
    let plastic_strain: Voigt = std::array::from_fn(|i| state.plastic_strain[i] + dep[i]);
    let elastic_strain: Voigt = std::array::from_fn(|i| strain[i] - plastic_strain[i]);
    let tangent = consistent_tangent_at(&s_tr, dgamma, h_cur, model)?;
    Ok(Update {
        state: MaterialState {
            stress,
            strain,
            elastic_strain,
            plastic_strain,
            epbar: state.epbar + dgamma,
        },
        tangent,
        dgamma,
    })
}

/// Algorithmic tangent of the radial return for trial deviator `s_tr`, with
/// the hardening slope taken at `epbar_n + dgamma`.
pub fn consistent_tangent(s_tr: &Voigt, dgamma: f64, epbar_n: f64, model: &Material) -> Result<Tangent> {
    consistent_tangent_at(s_tr, dgamma, model.yield_stress(epbar_n + dgamma).1, model)
}

fn consistent_tangent_at(s_tr: &Voigt, dgamma: f64, h: f64, model: &Material) -> Result<Tangent> {
    let de = model.elastic_tensor();
    if dgamma == 0.0 {
        return Ok(Tangent { d: de, plastic: false });
    }
    let snorm = (s_tr[0] * s_tr[0] + s_tr[1] * s_tr[1] + s_tr[2] * s_tr[2] + 2.0 * s_tr[3] * s_tr[3]).sqrt();
    if snorm == 0.0 {
        return Err(Error::DegenerateFlow);
    }
    let q_tr = (1.5f64).sqrt() * snorm;
    let g = model.mu();
    let a = 6.0 * g * g * dgamma / q_tr;
    let b = 6.0 * g * g * (dgamma / q_tr - 1.0 / (3.0 * g + h));
    let n: Voigt = std::array::from_fn(|i| s_tr[i] / snorm);
    // deviatoric projector acting on engineering strain
    let id: Mat4 = [
        [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 0.0],
        [-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0, 0.0],
        [-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0, 0.0],
        [0.0, 0.0, 0.0, 0.5],
    ];
    let d = std::array::from_fn(|i| std::array::from_fn(|k| de[i][k] - a * id[i][k] + b * n[i] * n[k]));
    Ok(Tangent { d, plastic: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn steel_like(h: f64) -> Material {
        Material::plastic(200.0, 0.3, 0.25, Hardening::Linear(h)).unwrap()
    }

    #[test]
    fn lame_constants() {
        let m = Material::elastic(1.0, 0.25, PlaneMode::PlaneStrain).unwrap();
        assert!((m.mu() - 0.4).abs() < 1e-15);
        assert!((m.lambda() - 0.4).abs() < 1e-15);
        assert!(Material::elastic(1.0, 0.5, PlaneMode::PlaneStrain).is_err());
        assert!(Material::plastic(1.0, 0.3, 1.0, Hardening::Linear(0.0))
            .map(|mut m| {
                m.mode = PlaneMode::PlaneStress;
                m.validate()
            })
            .unwrap()
            .is_err());
    }

    #[test]
    fn hydrostatic_and_uniaxial() {
        let m = Material::elastic(1.0, 0.25, PlaneMode::PlaneStrain).unwrap();
        let a = 1e-3;
        let s = mat_vec(&m.elastic_tensor(), &[a, a, a, 0.0]);
        let k = 2.0 * m.mu() + 3.0 * m.lambda();
        for v in &s[..3] {
            assert!((v - k * a).abs() < 1e-15);
        }
        let ps = Material::elastic(3.0, 0.2, PlaneMode::PlaneStress).unwrap();
        let d = ps.elastic_tensor();
        // σ22 = 0 requires ε22 = −ν ε11
        let s = mat_vec(&d, &[1.0, -0.2, 0.0, 0.0]);
        assert!(s[1].abs() < 1e-14);
        assert!((s[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn yield_function_values() {
        let m = steel_like(0.0);
        assert_eq!(yield_function(&[0.0; 4], 0.0, &m), -0.25);
        assert!(yield_function(&[0.25, 0.0, 0.0, 0.0], 0.0, &m).abs() < 1e-15);
        assert!(yield_function(&[0.0, 0.0, 0.0, 0.25 / 3f64.sqrt()], 0.0, &m).abs() < 1e-15);
    }

    #[test]
    fn zero_increment_keeps_state() {
        let m = steel_like(1.0);
        let s0 = MaterialState::default();
        let u = return_map(&s0, &[0.0; 4], &m).unwrap();
        assert_eq!(u.state, s0);
        assert_eq!(u.tangent.d, m.elastic_tensor());
    }

    #[test]
    fn perfect_plasticity_closed_form() {
        let m = steel_like(0.0);
        let de = [4e-3, -1e-3, 0.0, 3e-3];
        let s0 = MaterialState::default();
        let u = return_map(&s0, &de, &m).unwrap();
        let trial = mat_vec(&m.elastic_tensor(), &de);
        let expect = (von_mises(&trial) - m.sigma_y0) / (3.0 * m.mu());
        assert!(expect > 0.0);
        assert!((u.dgamma - expect).abs() < 1e-14 * expect.max(1.0));
        assert!(yield_function(&u.state.stress, u.state.epbar, &m).abs() < 1e-9 * m.sigma_y0);
        // radial return keeps the deviator collinear with the trial deviator
        let st = deviator(&trial);
        let sn = deviator(&u.state.stress);
        let ratio = sn[0] / st[0];
        for i in 0..4 {
            assert!((sn[i] - ratio * st[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn tabulated_hardening_matches_linear() {
        let lin = steel_like(5.0);
        let mut tab = lin.clone();
        tab.hardening = Hardening::Table(vec![[0.0, 0.0], [0.01, 0.05], [1.0, 5.0]]);
        let de = [6e-3, -2e-3, 0.0, 1e-3];
        let a = return_map(&MaterialState::default(), &de, &lin).unwrap();
        let b = return_map(&MaterialState::default(), &de, &tab).unwrap();
        assert!((a.dgamma - b.dgamma).abs() < 1e-15);
    }

    #[test]
    fn large_hardening_limit() {
        let m = steel_like(1e12);
        let de = [4e-3, 0.0, 0.0, 0.0];
        let u = return_map(&MaterialState::default(), &de, &m).unwrap();
        for i in 0..4 {
            for k in 0..4 {
                let e = m.elastic_tensor()[i][k];
                assert!((u.tangent.d[i][k] - e).abs() < 1e-6 * 200.0, "{i}{k}");
            }
        }
    }

    #[test]
    fn degenerate_flow() {
        let m = steel_like(0.0);
        assert!(matches!(
            consistent_tangent(&[0.0; 4], 1e-3, 0.0, &m),
            Err(Error::DegenerateFlow)
        ));
        assert_eq!(consistent_tangent(&[1.0, 0.0, -1.0, 0.0], 0.0, 0.0, &m).unwrap().d, m.elastic_tensor());
    }

    /// Best relative error of a central-difference tangent over a step sweep.
    pub(crate) fn fd_tangent_error(state: &MaterialState, de: &Voigt, m: &Material) -> f64 {
        let u = return_map(state, de, m).unwrap();
        let d = u.tangent.d;
        let dn = d.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        [1e-6, 1e-7, 1e-8]
            .iter()
            .map(|&eps| {
                let mut err = 0.0;
                for k in 0..4 {
                    let mut p = *de;
                    let mut q = *de;
                    p[k] += eps;
                    q[k] -= eps;
                    let sp = return_map(state, &p, m).unwrap().state.stress;
                    let sq = return_map(state, &q, m).unwrap().state.stress;
                    for i in 0..4 {
                        let fd = (sp[i] - sq[i]) / (2.0 * eps);
                        err += (fd - d[i][k]).powi(2);
                    }
                }
                err.sqrt() / dn
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let de = [2e-3, -1.5e-3, 0.0, 2.5e-3];
        for h in [0.0, 25.0] {
            let m = steel_like(h);
            assert!(fd_tangent_error(&MaterialState::default(), &de, &m) < 1e-5);
        }
        let small = [1e-5, 0.0, 0.0, 0.0];
        assert!(fd_tangent_error(&MaterialState::default(), &small, &steel_like(0.0)) < 1e-5);
    }

    proptest! {
        #[test]
        fn kuhn_tucker_and_split(
            e in proptest::array::uniform4(-5e-3f64..5e-3),
            pre in proptest::array::uniform4(-2e-3f64..2e-3),
            h in 0.0f64..50.0,
        ) {
            let m = steel_like(h);
            let mut e = e;
            e[2] = 0.0;
            let mut pre = pre;
            pre[2] = 0.0;
            let s1 = return_map(&MaterialState::default(), &pre, &m).unwrap().state;
            let u = return_map(&s1, &e, &m).unwrap();
            let phi = yield_function(&u.state.stress, u.state.epbar, &m);
            prop_assert!(phi <= 1e-9 * m.sigma_y0);
            prop_assert!(u.dgamma >= 0.0);
            prop_assert!((u.dgamma * phi).abs() <= 1e-9 * m.sigma_y0 * u.dgamma.max(1e-300));
            let dep: Voigt = std::array::from_fn(|i| u.state.plastic_strain[i] - s1.plastic_strain[i]);
            prop_assert!((dep[0] + dep[1] + dep[2]).abs() <= 1e-12);
            for i in 0..4 {
                let split = u.state.elastic_strain[i] + u.state.plastic_strain[i];
                prop_assert!((split - u.state.strain[i]).abs() <= 1e-12);
            }
            prop_assert!(u.state.epbar >= s1.epbar);
            for i in 0..4 {
                for k in 0..4 {
                    prop_assert!((u.tangent.d[i][k] - u.tangent.d[k][i]).abs() <= 1e-9 * 200.0);
                }
            }
        }

        #[test]
        fn epbar_matches_plastic_strain_norm(e in proptest::array::uniform4(-5e-3f64..5e-3), h in 0.0f64..50.0) {
            let m = steel_like(h);
            let mut e = e;
            e[2] = 0.0;
            let u = return_map(&MaterialState::default(), &e, &m).unwrap();
            let ep = u.state.plastic_strain;
            let nrm = (ep[0] * ep[0] + ep[1] * ep[1] + ep[2] * ep[2] + 0.5 * ep[3] * ep[3]).sqrt();
            prop_assert!(((2.0f64 / 3.0).sqrt() * nrm - u.state.epbar).abs() <= 1e-10);
        }
    }
}
