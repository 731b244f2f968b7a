use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::cases::BenchmarkCase;
use super::metrics::{aid_metric, condition_number, e2_norm, fit_slope, FieldSampler};
use crate::approx::StencilParams;
use crate::assembly::{Approach, ApproachConfig, Discretization, Problem};
use crate::constitutive::Tangent;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::solver::{NrSettings, Solver};

/// Cartesian parameter grid over one benchmark case.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub case: BenchmarkCase,
    pub hs: Vec<f64>,
    pub degrees: Vec<u32>,
    pub alpha_d: Vec<f64>,
    pub alpha_s: Vec<f64>,
    pub approaches: Vec<Approach>,
    pub m: u32,
    pub p_fd: u32,
    pub seed: u64,
    pub settings: NrSettings,
    /// Compute the dense condition number of the elastic system matrix.
    pub condition: bool,
    pub dense_limit: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.case.validate()?;
        let empty = [
            ("hs", self.hs.is_empty()),
            ("degrees", self.degrees.is_empty()),
            ("alpha_d", self.alpha_d.is_empty()),
            ("alpha_s", self.alpha_s.is_empty()),
            ("approaches", self.approaches.is_empty()),
        ];
        if let Some((key, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidConfig(format!("sweep list `{key}` is empty")));
        }
        if let Some(h) = self.hs.iter().find(|h| !(**h > 0.0)) {
            return Err(Error::InvalidConfig(format!("spacing must be positive, got {h}")));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &approach in &self.approaches {
            for &degree in &self.degrees {
                for &alpha_d in &self.alpha_d {
                    for &alpha_s in &self.alpha_s {
                        for &h in &self.hs {
                            out.push(CellKey {
                                approach,
                                degree,
                                alpha_d,
                                alpha_s,
                                h,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellKey {
    pub approach: Approach,
    pub degree: u32,
    pub alpha_d: f64,
    pub alpha_s: f64,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub key: CellKey,
    pub n_nodes: usize,
    pub e2: Option<f64>,
    pub kappa: Option<f64>,
    pub e_int: Option<f64>,
    /// Largest number of Newton iterations over the increments.
    pub iterations: Option<usize>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub approach: Approach,
    pub degree: u32,
    pub alpha_d: f64,
    pub alpha_s: f64,
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepTable {
    pub cells: Vec<CellResult>,
    pub slopes: Vec<SlopeFit>,
}

pub const SWEEP_METRICS: [&str; 4] = ["e2", "kappa", "e_int", "iterations"];

impl SweepTable {
    /// CSV of one metric (`e2`, `kappa`, `e_int` or `iterations`) over all cells.
    pub fn to_csv(&self, metric: &str) -> Result<String> {
        if !SWEEP_METRICS.contains(&metric) {
            return Err(Error::InvalidInput(format!("unknown sweep metric `{metric}`")));
        }
        let mut s = format!("approach,h,p,alpha_d,alpha_s,n_nodes,{metric},status\n");
        for c in &self.cells {
            let v = match metric {
                "e2" => c.e2.map(|v| format!("{v:.6e}")),
                "kappa" => c.kappa.map(|v| format!("{v:.6e}")),
                "e_int" => c.e_int.map(|v| format!("{v:.6e}")),
                _ => c.iterations.map(|v| v.to_string()),
            };
            let status = match &c.error {
                Some(e) => e.replace([',', '\n'], ";"),
                None if c.converged => "ok".into(),
                None => "not_converged".into(),
            };
            writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                c.key.approach,
                c.key.h,
                c.key.degree,
                c.key.alpha_d,
                c.key.alpha_s,
                c.n_nodes,
                v.unwrap_or_default(),
                status
            )
            .unwrap();
        }
        Ok(s)
    }

    pub fn slopes_csv(&self) -> String {
        let mut s = String::from("approach,p,alpha_d,alpha_s,slope\n");
        for f in &self.slopes {
            writeln!(
                s,
                "{},{},{},{},{}",
                f.approach,
                f.degree,
                f.alpha_d,
                f.alpha_s,
                f.slope.map(|v| format!("{v:.4}")).unwrap_or_default()
            )
            .unwrap();
        }
        s
    }
}

fn elastic_tangents(problem: &Problem, disc: &Discretization) -> Vec<Tangent> {
    vec![
        Tangent {
            d: problem.material.elastic_tensor(),
            plastic: false,
        };
        disc.points().len()
    ]
}

fn run_cell(spec: &SweepSpec, key: CellKey, problem: &Problem) -> CellResult {
    let mut out = CellResult {
        key,
        n_nodes: problem.cloud.len(),
        e2: None,
        kappa: None,
        e_int: None,
        iterations: None,
        converged: false,
        error: None,
    };
    let config = ApproachConfig {
        approach: key.approach,
        alpha_d: key.alpha_d,
        p_fd: spec.p_fd,
        alpha_s: key.alpha_s,
        stencil: StencilParams::new(spec.m, key.degree),
    };
    let result = (|| -> Result<()> {
        let disc = Discretization::build(problem, &config)?;
        if spec.condition {
            let vals = disc.tangent_values(&elastic_tangents(problem, &disc));
            match condition_number(disc.pattern(), &vals, spec.dense_limit) {
                Ok(k) => out.kappa = Some(k),
                Err(e) => log::warn!("condition number skipped: {e}"),
            }
        }
        let program = spec.case.load_program()?;
        let mut solver = Solver::new(problem, &disc, spec.settings.clone());
        let report = solver.run(&program, |_, _| Ok(()))?;
        out.converged = report.all_converged();
        out.iterations = report.steps.iter().map(|s| s.iterations).max();
        if let Some(failed) = report.steps.iter().find(|s| !s.converged) {
            out.error = failed.error.clone();
        }
        let state = solver.state();
        if out.converged && !spec.case.id.is_plastic() {
            let exact: Vec<Point> = disc
                .positions()
                .iter()
                .map(|&p| spec.case.elastic_displacement(p, state.load))
                .collect::<Result<_>>()?;
            out.e2 = Some(e2_norm(&state.u, &exact)?);
        }
        let sampler = FieldSampler::new(disc.positions(), disc.supports(), &config.stencil);
        out.e_int = aid_metric(&state.u, problem.cloud.kinds(), &sampler).ok();
        Ok(())
    })();
    if let Err(e) = result {
        out.error = Some(e.to_string());
    }
    out
}

/// Runs every cell of the grid. Failing cells are recorded and the sweep
/// continues. Node clouds are shared between cells with the same spacing.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let mut problems = Vec::with_capacity(spec.hs.len());
    for &h in &spec.hs {
        problems.push(spec.case.problem(h, spec.seed)?);
    }
    let problem_for = |h: f64| {
        let k = spec.hs.iter().position(|x| *x == h).expect("spacing from the grid");
        &problems[k]
    };
    let cells: Vec<CellResult> = spec
        .cells()
        .into_par_iter()
        .map(|key| run_cell(spec, key, problem_for(key.h)))
        .collect();

    // slope fits over h for every other parameter combination
    let mut groups: BTreeMap<String, (CellKey, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for c in &cells {
        let k = format!(
            "{}|{}|{:e}|{:e}",
            c.key.approach, c.key.degree, c.key.alpha_d, c.key.alpha_s
        );
        let entry = groups.entry(k).or_insert_with(|| (c.key, Vec::new(), Vec::new()));
        if let Some(e) = c.e2 {
            entry.1.push(c.key.h);
            entry.2.push(e);
        }
    }
    let mut slopes: Vec<SlopeFit> = groups
        .into_values()
        .map(|(key, hs, es)| SlopeFit {
            approach: key.approach,
            degree: key.degree,
            alpha_d: key.alpha_d,
            alpha_s: key.alpha_s,
            slope: fit_slope(&hs, &es),
        })
        .collect();
    slopes.sort_by(|a, b| {
        (a.approach as u8, a.degree)
            .cmp(&(b.approach as u8, b.degree))
            .then(a.alpha_d.total_cmp(&b.alpha_d))
            .then(a.alpha_s.total_cmp(&b.alpha_s))
    });
    Ok(SweepTable { cells, slopes })
}
