use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::analytic::{
    annulus_cartesian_stress, annulus_displacement, plate_hole_exact, plate_hole_stress, timoshenko_exact,
    timoshenko_stress, AnnulusParams, BeamParams, HoleParams, Stress2,
};
use crate::assembly::{ApproachConfig, BcFn, Discretization, Problem};
use crate::constitutive::{Hardening, Material, PlaneMode};
use crate::error::{Error, Result};
use crate::geometry::{generate_nodes, BcTag, DomainSpec, NodeCloud, Segment};
use crate::point::Point;
use crate::solver::{LoadProgram, NrSettings, SolveReport, Solver, SolverState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseId {
    Timoshenko,
    PlateHole,
    Annulus,
    AnnulusPlastic,
    PlateHolePlastic,
}

impl CaseId {
    pub const ALL: [CaseId; 5] = [
        CaseId::Timoshenko,
        CaseId::PlateHole,
        CaseId::Annulus,
        CaseId::AnnulusPlastic,
        CaseId::PlateHolePlastic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::Timoshenko => "timoshenko",
            CaseId::PlateHole => "plate_hole",
            CaseId::Annulus => "annulus",
            CaseId::AnnulusPlastic => "annulus_plastic",
            CaseId::PlateHolePlastic => "plate_hole_plastic",
        }
    }

    pub fn is_plastic(self) -> bool {
        matches!(self, CaseId::AnnulusPlastic | CaseId::PlateHolePlastic)
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown case `{s}`")))
    }
}

/// Geometry, material and loading of one benchmark. Lengths in m, stresses
/// and moduli in Pa, the end force in N per unit thickness.
///
/// The load parameter of a solve is the physical load amplitude: the end
/// force for the beam, the far-field stress for the plate and the internal
/// pressure for the annulus.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkCase {
    pub id: CaseId,
    pub length: f64,
    pub depth: f64,
    pub force: f64,
    pub r_in: f64,
    pub r_out: f64,
    /// Opening angle of the annulus sector.
    pub sector: f64,
    pub pressure: f64,
    /// Edge length of the quarter plate.
    pub side: f64,
    pub hole_radius: f64,
    pub sigma_inf: f64,
    pub young: f64,
    pub poisson: f64,
    pub sigma_y0: f64,
    pub hardening: f64,
    pub mode: PlaneMode,
    pub load_min: f64,
    pub load_max: f64,
    pub load_step: f64,
}

impl BenchmarkCase {
    pub fn new(id: CaseId) -> Self {
        let mut c = BenchmarkCase {
            id,
            length: 2.0,
            depth: 0.5,
            force: 1.0,
            r_in: 1.0,
            r_out: 2.0,
            sector: FRAC_PI_2,
            pressure: 1.0,
            side: 1.0,
            hole_radius: 0.25,
            sigma_inf: 1.0,
            young: 1.0,
            poisson: 0.3,
            sigma_y0: f64::INFINITY,
            hardening: 0.0,
            mode: match id {
                CaseId::Timoshenko | CaseId::PlateHole => PlaneMode::PlaneStress,
                _ => PlaneMode::PlaneStrain,
            },
            load_min: 1.0,
            load_max: 1.0,
            load_step: 1.0,
        };
        match id {
            CaseId::Timoshenko | CaseId::PlateHole | CaseId::Annulus => {}
            CaseId::AnnulusPlastic => {
                c.sector = FRAC_PI_2 / 3.0;
                c.sigma_y0 = 20.0;
                c.hardening = 0.0;
                (c.load_min, c.load_max, c.load_step) = (8.0, 10.5, 0.1);
                c.pressure = c.load_max;
            }
            CaseId::PlateHolePlastic => {
                c.sigma_y0 = 0.1;
                c.hardening = 0.25;
                (c.load_min, c.load_max, c.load_step) = (0.0, 0.1, 0.01);
                c.sigma_inf = c.load_max;
            }
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("depth", self.depth),
            ("r_in", self.r_in),
            ("r_out", self.r_out),
            ("sector", self.sector),
            ("side", self.side),
            ("hole_radius", self.hole_radius),
            ("young", self.young),
            ("sigma_y0", self.sigma_y0),
            ("load_step", self.load_step),
        ];
        for (key, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{key} must be positive, got {v}")));
            }
        }
        if !(self.r_in < self.r_out) {
            return Err(Error::InvalidConfig(format!(
                "r_in ({}) must be smaller than r_out ({})",
                self.r_in, self.r_out
            )));
        }
        if !(self.hole_radius < self.side) {
            return Err(Error::InvalidConfig("hole_radius must be smaller than side".into()));
        }
        if self.sector > FRAC_PI_2 + 1e-12 {
            return Err(Error::InvalidConfig("annulus sector may not exceed a quarter".into()));
        }
        if !(self.load_max >= self.load_min) {
            return Err(Error::InvalidConfig("load_max must not be below load_min".into()));
        }
        self.material()?;
        Ok(())
    }

    pub fn material(&self) -> Result<Material> {
        if self.id.is_plastic() {
            let m = Material {
                young: self.young,
                poisson: self.poisson,
                sigma_y0: self.sigma_y0,
                hardening: Hardening::Linear(self.hardening),
                mode: self.mode,
            };
            m.validate()?;
            Ok(m)
        } else {
            Material::elastic(self.young, self.poisson, self.mode)
        }
    }

    /// Load amplitude of the elastic cases.
    pub fn nominal_load(&self) -> f64 {
        match self.id {
            CaseId::Timoshenko => self.force,
            CaseId::PlateHole | CaseId::PlateHolePlastic => self.sigma_inf,
            CaseId::Annulus | CaseId::AnnulusPlastic => self.pressure,
        }
    }

    /// One increment at the nominal load for elastic cases, the configured
    /// load range for plastic ones.
    pub fn load_program(&self) -> Result<LoadProgram> {
        if self.id.is_plastic() {
            LoadProgram::range(self.load_min, self.load_max, self.load_step)
        } else {
            Ok(LoadProgram::single(self.nominal_load()))
        }
    }

    /// The beam solution is written for plane stress; plane strain uses the
    /// usual effective constants.
    fn beam(&self, force: f64) -> BeamParams {
        let (young, poisson) = match self.mode {
            PlaneMode::PlaneStress => (self.young, self.poisson),
            PlaneMode::PlaneStrain => {
                let nu = self.poisson;
                (self.young / (1.0 - nu * nu), nu / (1.0 - nu))
            }
        };
        BeamParams {
            length: self.length,
            depth: self.depth,
            force,
            young,
            poisson,
        }
    }

    fn hole(&self, sigma_inf: f64) -> HoleParams {
        HoleParams {
            radius: self.hole_radius,
            sigma_inf,
            young: self.young,
            poisson: self.poisson,
            mode: self.mode,
        }
    }

    /// The annulus solution is written for plane strain.
    fn ring(&self, pressure: f64) -> AnnulusParams {
        let (young, poisson) = match self.mode {
            PlaneMode::PlaneStrain => (self.young, self.poisson),
            PlaneMode::PlaneStress => {
                let nu = self.poisson;
                (self.young * (1.0 + 2.0 * nu) / ((1.0 + nu) * (1.0 + nu)), nu / (1.0 + nu))
            }
        };
        AnnulusParams {
            r_in: self.r_in,
            r_out: self.r_out,
            pressure,
            young,
            poisson,
        }
    }

    /// Linear elastic displacement at load `load`. For the plastic cases this
    /// is the reference of the purely elastic increments only.
    pub fn elastic_displacement(&self, x: Point, load: f64) -> Result<Point> {
        match self.id {
            CaseId::Timoshenko => Ok(timoshenko_exact(x[0], x[1], &self.beam(load))),
            CaseId::PlateHole | CaseId::PlateHolePlastic => {
                plate_hole_exact(x[0].hypot(x[1]), x[1].atan2(x[0]), &self.hole(load))
            }
            CaseId::Annulus | CaseId::AnnulusPlastic => annulus_displacement(x, &self.ring(load)),
        }
    }

    pub fn elastic_stress(&self, x: Point, load: f64) -> Result<Stress2> {
        match self.id {
            CaseId::Timoshenko => Ok(timoshenko_stress(x[0], x[1], &self.beam(load))),
            CaseId::PlateHole | CaseId::PlateHolePlastic => {
                plate_hole_stress(x[0].hypot(x[1]), x[1].atan2(x[0]), &self.hole(load))
            }
            CaseId::Annulus | CaseId::AnnulusPlastic => annulus_cartesian_stress(x, &self.ring(load)),
        }
    }

    /// Counterclockwise boundary loop with boundary-condition tags.
    pub fn segments(&self) -> Vec<Segment> {
        match self.id {
            CaseId::Timoshenko => {
                let (l, d) = (self.length, self.depth);
                vec![
                    Segment::line([0.0, 0.0], [l, 0.0], BcTag::Traction),
                    Segment::line([l, 0.0], [l, d], BcTag::Traction),
                    Segment::line([l, d], [0.0, d], BcTag::Traction),
                    Segment::line([0.0, d], [0.0, 0.0], BcTag::Dirichlet),
                ]
            }
            CaseId::PlateHole | CaseId::PlateHolePlastic => {
                let (s, a) = (self.side, self.hole_radius);
                vec![
                    Segment::line([a, 0.0], [s, 0.0], BcTag::FreeSlip),
                    Segment::line([s, 0.0], [s, s], BcTag::Traction),
                    Segment::line([s, s], [0.0, s], BcTag::Traction),
                    Segment::line([0.0, s], [0.0, a], BcTag::FreeSlip),
                    Segment::arc([0.0, 0.0], a, FRAC_PI_2, 0.0, false, BcTag::Traction),
                ]
            }
            CaseId::Annulus | CaseId::AnnulusPlastic => {
                let (ri, ro, t) = (self.r_in, self.r_out, self.sector);
                let e = [t.cos(), t.sin()];
                vec![
                    Segment::line([ri, 0.0], [ro, 0.0], BcTag::FreeSlip),
                    Segment::arc([0.0, 0.0], ro, 0.0, t, true, BcTag::Traction),
                    Segment::line([ro * e[0], ro * e[1]], [ri * e[0], ri * e[1]], BcTag::FreeSlip),
                    Segment::arc([0.0, 0.0], ri, t, 0.0, false, BcTag::Traction),
                ]
            }
        }
    }

    /// Corner points of the domain (segment start points).
    pub fn corners(&self) -> Vec<Point> {
        self.segments().iter().map(|s| s.start()).collect()
    }

    pub fn domain(&self, h: f64) -> Result<DomainSpec> {
        self.validate()?;
        DomainSpec::with_uniform_spacing(self.segments(), h)
    }

    /// Dirichlet data and traction loads derived from the elastic solution.
    pub fn boundary_data(&self) -> (BcFn, BcFn) {
        let c1 = self.clone();
        let c2 = self.clone();
        let dirichlet: BcFn = Arc::new(move |p, _n, load| match c1.id {
            CaseId::Timoshenko => c1.elastic_displacement(p, load).unwrap_or([f64::NAN; 2]),
            _ => [0.0, 0.0],
        });
        let traction: BcFn = Arc::new(move |p, n, load| {
            let s = c2.elastic_stress(p, load).unwrap_or([f64::NAN; 3]);
            [s[0] * n[0] + s[2] * n[1], s[2] * n[0] + s[1] * n[1]]
        });
        (dirichlet, traction)
    }

    pub fn problem_for_cloud(&self, cloud: NodeCloud, domain: DomainSpec) -> Result<Problem> {
        let (dirichlet, traction) = self.boundary_data();
        Ok(Problem {
            cloud,
            material: self.material()?,
            domain: Some(domain),
            dirichlet,
            traction,
        })
    }

    /// Generates the node cloud at uniform spacing `h` and sets up the problem.
    pub fn problem(&self, h: f64, seed: u64) -> Result<Problem> {
        let domain = self.domain(h)?;
        let cloud = generate_nodes(&domain, seed)?;
        self.problem_for_cloud(cloud, domain)
    }
}

/// Outcome of a complete load program on one benchmark.
pub struct CaseRun {
    pub problem: Problem,
    pub disc: Discretization,
    pub report: SolveReport,
    pub state: SolverState,
    /// Committed state after every converged increment, if requested.
    pub history: Vec<SolverState>,
}

/// Builds the problem and discretization and runs the case's load program.
pub fn run_case(
    case: &BenchmarkCase,
    h: f64,
    seed: u64,
    config: &ApproachConfig,
    settings: &NrSettings,
    keep_history: bool,
) -> Result<CaseRun> {
    let problem = case.problem(h, seed)?;
    let disc = Discretization::build(&problem, config)?;
    let program = case.load_program()?;
    let mut history = Vec::new();
    let (report, state) = {
        let mut solver = Solver::new(&problem, &disc, settings.clone());
        let report = solver.run(&program, |_, st| {
            if keep_history {
                history.push(st.clone());
            }
            Ok(())
        })?;
        (report, solver.state().clone())
    };
    Ok(CaseRun {
        problem,
        disc,
        report,
        state,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_ids_roundtrip() {
        for id in CaseId::ALL {
            assert_eq!(id.as_str().parse::<CaseId>().unwrap(), id);
            BenchmarkCase::new(id).validate().unwrap();
        }
        assert!("beam".parse::<CaseId>().is_err());
    }

    #[test]
    fn invalid_geometry_rejected() {
        let mut c = BenchmarkCase::new(CaseId::Annulus);
        c.r_in = 3.0;
        assert!(c.validate().is_err());
        let mut c = BenchmarkCase::new(CaseId::Timoshenko);
        c.depth = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn domains_have_expected_area() {
        let a = BenchmarkCase::new(CaseId::Annulus).domain(0.05).unwrap().area();
        assert!((a - 0.75 * std::f64::consts::PI).abs() < 1e-4);
        let p = BenchmarkCase::new(CaseId::PlateHole).domain(0.05).unwrap().area();
        assert!((p - (1.0 - std::f64::consts::PI * 0.0625 / 4.0)).abs() < 1e-4);
        let s = BenchmarkCase::new(CaseId::AnnulusPlastic).domain(0.05).unwrap().area();
        assert!((s - 1.5 * std::f64::consts::PI / 6.0).abs() < 1e-4);
    }

    #[test]
    fn tractions_match_loads() {
        let c = BenchmarkCase::new(CaseId::Annulus);
        let (_, t) = c.boundary_data();
        // inner arc: normal toward the centre, traction pushes outward
        let f = t([0.0, 1.0], [0.0, -1.0], 2.0);
        assert!(f[0].abs() < 1e-12 && (f[1] - 2.0).abs() < 1e-12);
        let f = t([2.0, 0.0], [1.0, 0.0], 2.0);
        assert!(f[0].abs() < 1e-12);
        let c = BenchmarkCase::new(CaseId::PlateHole);
        let (_, t) = c.boundary_data();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let f = t([0.25 * r, 0.25 * r], [-r, -r], 1.0);
        assert!(f[0].abs() < 1e-12 && f[1].abs() < 1e-12);
    }

    #[test]
    fn elastic_fields_consistent_in_both_modes() {
        let probes = [
            (CaseId::Timoshenko, [0.7, 0.1]),
            (CaseId::PlateHole, [0.4, 0.3]),
            (CaseId::Annulus, [1.1, 0.9]),
        ];
        for (id, x) in probes {
            for mode in [PlaneMode::PlaneStress, PlaneMode::PlaneStrain] {
                let mut c = BenchmarkCase::new(id);
                c.mode = mode;
                let d = c.material().unwrap().elastic_tensor();
                let h = 1e-5;
                let u = |dx: f64, dy: f64| c.elastic_displacement([x[0] + dx, x[1] + dy], 1.0).unwrap();
                let ux = [(u(h, 0.0)[0] - u(-h, 0.0)[0]) / (2.0 * h), (u(h, 0.0)[1] - u(-h, 0.0)[1]) / (2.0 * h)];
                let uy = [(u(0.0, h)[0] - u(0.0, -h)[0]) / (2.0 * h), (u(0.0, h)[1] - u(0.0, -h)[1]) / (2.0 * h)];
                let e = [ux[0], uy[1], 0.0, uy[0] + ux[1]];
                let s = crate::constitutive::mat_vec(&d, &e);
                let ex = c.elastic_stress(x, 1.0).unwrap();
                for (a, b) in [(s[0], ex[0]), (s[1], ex[1]), (s[3], ex[2])] {
                    assert!((a - b).abs() < 1e-6, "{id} {mode:?}: {a} vs {b}");
                }
            }
        }
    }
}
