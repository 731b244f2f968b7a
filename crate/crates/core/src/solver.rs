//! Incremental loading with full Newton-Raphson iterations.

use std::fmt::Write as _;

use crate::assembly::{Discretization, Evaluation, Problem, ResidualNorm};
use crate::constitutive::MaterialState;
use crate::error::{Error, Result};
use crate::linsolve::norm2;

/// Monotone schedule of load parameter values, one per increment.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadProgram {
    loads: Vec<f64>,
}

impl LoadProgram {
    /// `min, min + step, …, max` (inclusive, `max` reached up to rounding).
    pub fn range(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidConfig(format!("load step must be positive, got {step}")));
        }
        if !(max >= min) {
            return Err(Error::InvalidConfig(format!("load range [{min}, {max}] is empty")));
        }
        let n = ((max - min) / step + 1e-9).floor() as usize;
        Ok(LoadProgram {
            loads: (0..=n).map(|k| min + k as f64 * step).collect(),
        })
    }

    pub fn from_loads(loads: Vec<f64>) -> Result<Self> {
        if loads.is_empty() {
            return Err(Error::InvalidConfig("load program is empty".into()));
        }
        if loads.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("load program must be strictly increasing".into()));
        }
        Ok(LoadProgram { loads })
    }

    pub fn single(load: f64) -> Self {
        LoadProgram { loads: vec![load] }
    }

    pub fn loads(&self) -> &[f64] {
        &self.loads
    }

    pub fn len(&self) -> usize {
        self.loads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loads.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NrSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub norm: ResidualNorm,
    /// Below this external-force norm the residual is measured absolutely.
    pub absolute_threshold: f64,
}

impl Default for NrSettings {
    fn default() -> Self {
        NrSettings {
            tolerance: 1e-7,
            max_iterations: 70,
            norm: ResidualNorm::AllRows,
            absolute_threshold: 1e-14,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub load: f64,
    /// Number of linear solves performed.
    pub iterations: usize,
    /// Relative residual `e` before the first and after every solve.
    pub residuals: Vec<f64>,
    /// Largest absolute nodal residual component for the same iterates.
    pub max_residuals: Vec<f64>,
    pub converged: bool,
    /// Active evaluation points that yielded in this increment.
    pub plastic_points: usize,
    /// All material points, passive ones included, that yielded.
    pub yielded_points: usize,
    pub max_dgamma: f64,
    pub error: Option<String>,
}

impl StepReport {
    pub fn is_plastic(&self) -> bool {
        self.plastic_points > 0
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&f64::NAN)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub steps: Vec<StepReport>,
}

impl SolveReport {
    pub fn all_converged(&self) -> bool {
        !self.steps.is_empty() && self.steps.iter().all(|s| s.converged)
    }

    fn plastic_iterations(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .steps
            .iter()
            .filter(|s| s.converged && s.is_plastic())
            .map(|s| s.iterations)
            .collect();
        v.sort_unstable();
        v
    }

    pub fn min_iterations(&self) -> Option<usize> {
        self.plastic_iterations().first().copied()
    }

    pub fn max_iterations(&self) -> Option<usize> {
        self.plastic_iterations().last().copied()
    }

    pub fn median_iterations(&self) -> Option<f64> {
        let v = self.plastic_iterations();
        if v.is_empty() {
            return None;
        }
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 {
            v[m] as f64
        } else {
            0.5 * (v[m - 1] + v[m]) as f64
        })
    }

    /// Mean Newton order over converged plastic steps with a defined order.
    pub fn mean_nr_order(&self) -> Option<f64> {
        mean_order(self.steps.iter().filter(|s| s.converged && s.is_plastic()))
    }

    /// One CSV row per attempted increment.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "step,load,iterations,converged,plastic_points,yielded_points,max_dgamma,final_residual,nr_order,error\n",
        );
        for st in &self.steps {
            writeln!(
                s,
                "{},{},{},{},{},{},{:.6e},{:.6e},{},{}",
                st.step,
                st.load,
                st.iterations,
                st.converged,
                st.plastic_points,
                st.yielded_points,
                st.max_dgamma,
                st.final_residual(),
                measure_nr_order(&st.max_residuals).map(|k| format!("{k:.4}")).unwrap_or_default(),
                st.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
            )
            .unwrap();
        }
        s
    }

    /// `step iter residual` rows followed by a summary block.
    pub fn to_table(&self) -> String {
        let mut s = String::from("step iter residual\n");
        for st in &self.steps {
            for (i, e) in st.residuals.iter().enumerate() {
                writeln!(s, "{} {} {:.16e}", st.step, i, e).unwrap();
            }
        }
        s.push_str("# summary\n");
        writeln!(s, "# steps {}", self.steps.len()).unwrap();
        writeln!(s, "# converged {}", self.all_converged()).unwrap();
        let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_else(|| "undefined".into());
        writeln!(s, "# i_min {}", fmt_opt(self.min_iterations().map(|v| v as f64))).unwrap();
        writeln!(s, "# i_max {}", fmt_opt(self.max_iterations().map(|v| v as f64))).unwrap();
        writeln!(s, "# i_median {}", fmt_opt(self.median_iterations())).unwrap();
        writeln!(s, "# nr_order {}", fmt_opt(self.mean_nr_order())).unwrap();
        for st in &self.steps {
            writeln!(
                s,
                "# step {} load {} iterations {} converged {} plastic_points {}{}",
                st.step,
                st.load,
                st.iterations,
                st.converged,
                st.plastic_points,
                st.error.as_ref().map(|e| format!(" error {e}")).unwrap_or_default()
            )
            .unwrap();
        }
        s
    }
}

/// Mean of the per-step orders that are defined.
pub fn mean_order<'a>(steps: impl Iterator<Item = &'a StepReport>) -> Option<f64> {
    let ks: Vec<f64> = steps.filter_map(|s| measure_nr_order(&s.max_residuals)).collect();
    if ks.is_empty() {
        None
    } else {
        Some(ks.iter().sum::<f64>() / ks.len() as f64)
    }
}

/// Order `k` of `ρ_{i+1} = A₀ ρ_i^k` fitted by least squares over the longest
/// strictly decreasing tail of `rho`. `None` with fewer than three points.
pub fn measure_nr_order(rho: &[f64]) -> Option<f64> {
    let usable: Vec<f64> = rho.iter().copied().take_while(|r| r.is_finite() && *r > 0.0).collect();
    if usable.len() < 3 {
        return None;
    }
    let mut start = usable.len() - 1;
    while start > 0 && usable[start] < usable[start - 1] {
        start -= 1;
    }
    let tail = &usable[start..];
    if tail.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = tail[..tail.len() - 1].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = tail[1..].iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Committed solution: nodal displacements and per-point material history.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub u: Vec<f64>,
    pub states: Vec<MaterialState>,
    pub load: f64,
}

/// Newton-Raphson driver over one discretization.
pub struct Solver<'a> {
    problem: &'a Problem,
    disc: &'a Discretization,
    settings: NrSettings,
    state: SolverState,
    step: usize,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a Problem, disc: &'a Discretization, settings: NrSettings) -> Self {
        Solver {
            problem,
            disc,
            settings,
            state: SolverState {
                u: vec![0.0; disc.n_dofs()],
                states: disc.initial_states(),
                load: 0.0,
            },
            step: 0,
        }
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn discretization(&self) -> &Discretization {
        self.disc
    }

    fn measure(&self, ev: &Evaluation, f_ext: &[f64]) -> (f64, f64) {
        let pick = |v: &[f64]| -> Vec<f64> {
            match self.settings.norm {
                ResidualNorm::AllRows => v.to_vec(),
                ResidualNorm::ForceRows => v
                    .iter()
                    .zip(self.disc.rows())
                    .filter(|(_, row)| !row.is_displacement())
                    .map(|(x, _)| *x)
                    .collect(),
            }
        };
        let r = pick(&ev.residual);
        let fe = pick(f_ext);
        let fnorm = norm2(&fe);
        let rnorm = norm2(&r);
        let e = if fnorm > self.settings.absolute_threshold {
            rnorm / fnorm
        } else {
            rnorm
        };
        let rho = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (e, rho)
    }

    /// Runs one load increment. On convergence the state is committed; on
    /// failure the committed state is left untouched.
    pub fn step(&mut self, load: f64) -> StepReport {
        self.step += 1;
        let mut report = StepReport {
            step: self.step,
            load,
            iterations: 0,
            residuals: Vec::new(),
            max_residuals: Vec::new(),
            converged: false,
            plastic_points: 0,
            yielded_points: 0,
            max_dgamma: 0.0,
            error: None,
        };
        match self.iterate(load, &mut report) {
            Ok(Some((du, ev))) => {
                for (u, d) in self.state.u.iter_mut().zip(&du) {
                    *u += d;
                }
                let mut plastic = 0;
                let mut max_dg = 0.0f64;
                for (k, dg) in ev.dgamma.iter().enumerate() {
                    if *dg > 0.0 {
                        report.yielded_points += 1;
                    }
                    if *dg > 0.0 && self.disc.is_active(k) {
                        plastic += 1;
                        max_dg = max_dg.max(*dg);
                    }
                }
                report.plastic_points = plastic;
                report.max_dgamma = max_dg;
                self.state.states = ev.states;
                self.state.load = load;
                report.converged = true;
            }
            Ok(None) => {
                report.error = Some(format!(
                    "no convergence within {} iterations",
                    self.settings.max_iterations
                ));
            }
            Err(e) => report.error = Some(e.to_string()),
        }
        report
    }

    fn iterate(&self, load: f64, report: &mut StepReport) -> Result<Option<(Vec<f64>, Evaluation)>> {
        let material = &self.problem.material;
        let f_ext = self.disc.external_force(self.problem, load);
        let mut du = vec![0.0; self.disc.n_dofs()];
        let mut ev = self
            .disc
            .evaluate(material, &self.state.states, &self.state.u, &du, &f_ext)?;
        let (e, rho) = self.measure(&ev, &f_ext);
        report.residuals.push(e);
        report.max_residuals.push(rho);
        let mut e = e;
        while e > self.settings.tolerance {
            if report.iterations == self.settings.max_iterations || !e.is_finite() {
                // yielding at the last iterate tells whether the failed step was plastic
                report.yielded_points = ev.dgamma.iter().filter(|g| **g > 0.0).count();
                return Ok(None);
            }
            let vals = self.disc.tangent_values(&ev.tangents);
            let rhs: Vec<f64> = ev.residual.iter().map(|r| -r).collect();
            let delta = self.disc.pattern().solve(&vals, &rhs)?;
            for (d, x) in du.iter_mut().zip(&delta) {
                *d += x;
            }
            report.iterations += 1;
            ev = self
                .disc
                .evaluate(material, &self.state.states, &self.state.u, &du, &f_ext)?;
            let (en, rho) = self.measure(&ev, &f_ext);
            report.residuals.push(en);
            report.max_residuals.push(rho);
            e = en;
        }
        Ok(Some((du, ev)))
    }

    /// Runs every increment of `program`, calling `on_commit` after each
    /// converged step. Stops at the first failed step.
    pub fn run(
        &mut self,
        program: &LoadProgram,
        mut on_commit: impl FnMut(&StepReport, &SolverState) -> Result<()>,
    ) -> Result<SolveReport> {
        let mut out = SolveReport::default();
        for &load in program.loads() {
            let rep = self.step(load);
            let ok = rep.converged;
            if ok {
                on_commit(&rep, &self.state)?;
            }
            out.steps.push(rep);
            if !ok {
                break;
            }
        }
        Ok(out)
    }
}
