//! Run configuration files and text artifacts.
//!
//! Configuration is a flat `key = value` document. `#` starts a comment, lists
//! are comma separated and unknown keys are rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::approx::StencilParams;
use crate::assembly::{Approach, ApproachConfig, Discretization};
use crate::benchmarks::{BenchmarkCase, CaseId, SweepSpec};
use crate::constitutive::PlaneMode;
use crate::error::{Error, Result};
use crate::geometry::spacing_from_density;
use crate::solver::{NrSettings, SolverState};

pub const REQUIRED_KEYS: [&str; 2] = ["case", "h (or rho)"];

const KEYS: &[&str] = &[
    "case",
    "approach",
    "m",
    "p",
    "support_size",
    "p_fd",
    "alpha_d",
    "alpha_s",
    "h",
    "rho",
    "seed",
    "tolerance",
    "max_iterations",
    "residual_norm",
    "out",
    "mode",
    "young",
    "poisson",
    "sigma_y0",
    "hardening",
    "length",
    "depth",
    "force",
    "r_in",
    "r_out",
    "sector",
    "pressure",
    "side",
    "hole_radius",
    "sigma_inf",
    "load_min",
    "load_max",
    "load_step",
    "sweep_h",
    "sweep_p",
    "sweep_alpha_d",
    "sweep_alpha_s",
    "sweep_approach",
    "condition",
    "dense_limit",
];

/// Parameter grid of a sweep; empty lists fall back to the single values of
/// the run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub hs: Vec<f64>,
    pub degrees: Vec<u32>,
    pub alpha_d: Vec<f64>,
    pub alpha_s: Vec<f64>,
    pub approaches: Vec<Approach>,
    pub condition: bool,
    pub dense_limit: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            hs: Vec::new(),
            degrees: Vec::new(),
            alpha_d: Vec::new(),
            alpha_s: Vec::new(),
            approaches: Vec::new(),
            condition: false,
            dense_limit: 4000,
        }
    }
}

/// Fully validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: BenchmarkCase,
    pub approach: ApproachConfig,
    pub h: f64,
    pub seed: u64,
    pub settings: NrSettings,
    pub out: Option<PathBuf>,
    pub sweep: SweepGrid,
    /// Adjustments made during validation (clamped values).
    pub warnings: Vec<String>,
}

fn parse_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Parse {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| parse_err(key, format!("cannot parse `{v}`: {e}")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn parse_mode(key: &str, v: &str) -> Result<PlaneMode> {
    match v {
        "plane_strain" => Ok(PlaneMode::PlaneStrain),
        "plane_stress" => Ok(PlaneMode::PlaneStress),
        _ => Err(parse_err(key, format!("expected plane_strain or plane_stress, got `{v}`"))),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(parse_err(key, format!("expected true or false, got `{v}`"))),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            parse_err(&format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`"))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(parse_err(k, "unknown key"));
        }
        if pairs.iter().any(|(seen, _)| seen == k) {
            return Err(parse_err(k, "given more than once"));
        }
        pairs.push((k.to_string(), v.to_string()));
    }
    let get = |k: &str| pairs.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());

    let missing: Vec<&str> = [
        get("case").is_none().then_some("case"),
        (get("h").is_none() && get("rho").is_none()).then_some("h (or rho)"),
    ]
    .into_iter()
    .flatten()
    .collect();
    if !missing.is_empty() {
        return Err(parse_err(
            &missing.join(", "),
            format!("missing required key(s); required: {}", REQUIRED_KEYS.join(", ")),
        ));
    }

    let id: CaseId = get("case").unwrap().parse().map_err(|e: Error| parse_err("case", e.to_string()))?;
    let mut case = BenchmarkCase::new(id);
    let mut approach = ApproachConfig::new(Approach::Hybrid);
    let mut settings = NrSettings::default();
    let mut sweep = SweepGrid::default();
    let mut seed = 0u64;
    let mut out = None;
    let mut h = None;
    let mut support_size = None;

    for (k, v) in &pairs {
        let (k, v) = (k.as_str(), v.as_str());
        match k {
            "case" => {}
            "approach" => approach.approach = v.parse().map_err(|e: Error| parse_err(k, e.to_string()))?,
            "m" => approach.stencil.m = num(k, v)?,
            "p" => approach.stencil.degree = num(k, v)?,
            "support_size" => support_size = Some(num::<usize>(k, v)?),
            "p_fd" => approach.p_fd = num(k, v)?,
            "alpha_d" => approach.alpha_d = num(k, v)?,
            "alpha_s" => approach.alpha_s = num(k, v)?,
            "h" => {
                if get("rho").is_some() {
                    return Err(parse_err(k, "give either h or rho, not both"));
                }
                h = Some(num::<f64>(k, v)?);
            }
            "rho" => {
                let rho: f64 = num(k, v)?;
                h = Some(spacing_from_density(rho).map_err(|e| parse_err(k, e.to_string()))?);
            }
            "seed" => seed = num(k, v)?,
            "tolerance" => settings.tolerance = num(k, v)?,
            "max_iterations" => settings.max_iterations = num(k, v)?,
            "residual_norm" => settings.norm = v.parse().map_err(|e: Error| parse_err(k, e.to_string()))?,
            "out" => out = Some(PathBuf::from(v)),
            "mode" => case.mode = parse_mode(k, v)?,
            "young" => case.young = num(k, v)?,
            "poisson" => case.poisson = num(k, v)?,
            "sigma_y0" => case.sigma_y0 = num(k, v)?,
            "hardening" => case.hardening = num(k, v)?,
            "length" => case.length = num(k, v)?,
            "depth" => case.depth = num(k, v)?,
            "force" => case.force = num(k, v)?,
            "r_in" => case.r_in = num(k, v)?,
            "r_out" => case.r_out = num(k, v)?,
            "sector" => case.sector = num(k, v)?,
            "pressure" => case.pressure = num(k, v)?,
            "side" => case.side = num(k, v)?,
            "hole_radius" => case.hole_radius = num(k, v)?,
            "sigma_inf" => case.sigma_inf = num(k, v)?,
            "load_min" => case.load_min = num(k, v)?,
            "load_max" => case.load_max = num(k, v)?,
            "load_step" => case.load_step = num(k, v)?,
            "sweep_h" => sweep.hs = list(k, v)?,
            "sweep_p" => sweep.degrees = list(k, v)?,
            "sweep_alpha_d" => sweep.alpha_d = list(k, v)?,
            "sweep_alpha_s" => sweep.alpha_s = list(k, v)?,
            "sweep_approach" => {
                sweep.approaches = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|e: Error| parse_err(k, e.to_string())))
                    .collect::<Result<_>>()?
            }
            "condition" => sweep.condition = parse_bool(k, v)?,
            "dense_limit" => sweep.dense_limit = num(k, v)?,
            _ => unreachable!("key list checked above"),
        }
    }
    approach.stencil = StencilParams {
        support_size,
        ..approach.stencil
    };
    let h = h.expect("checked above");
    if !(h > 0.0) || !h.is_finite() {
        return Err(parse_err("h", format!("must be positive and finite, got {h}")));
    }
    if sweep.hs.iter().any(|x| !(*x > 0.0)) {
        return Err(parse_err("sweep_h", "spacings must be positive"));
    }
    if !(settings.tolerance > 0.0) {
        return Err(parse_err("tolerance", "must be positive"));
    }
    if settings.max_iterations == 0 {
        return Err(parse_err("max_iterations", "must be at least 1"));
    }
    if case.id.is_plastic() && case.mode == PlaneMode::PlaneStress {
        return Err(parse_err("mode", "plane_stress cannot be combined with a plastic case"));
    }
    case.validate().map_err(|e| parse_err("case", e.to_string()))?;
    let warnings = approach.validate().map_err(|e| parse_err("approach", e.to_string()))?;
    for w in &warnings {
        log::warn!("{w}");
    }
    for &a in &sweep.alpha_d {
        let mut c = approach.clone();
        c.alpha_d = a;
        c.validate().map_err(|e| parse_err("sweep_alpha_d", e.to_string()))?;
    }
    Ok(RunConfig {
        case,
        approach,
        h,
        seed,
        settings,
        out,
        sweep,
        warnings,
    })
}

impl RunConfig {
    /// Effective configuration with every default spelled out. Parsing the
    /// echo yields the same configuration.
    pub fn echo(&self) -> String {
        let c = &self.case;
        let a = &self.approach;
        let s = &self.settings;
        let mut t = String::from("# effective configuration\n");
        let mut kv = |k: &str, v: String| writeln!(t, "{k} = {v}").unwrap();
        kv("case", c.id.to_string());
        kv("approach", a.approach.to_string());
        kv("m", a.stencil.m.to_string());
        kv("p", a.stencil.degree.to_string());
        if let Some(n) = a.stencil.support_size {
            kv("support_size", n.to_string());
        }
        kv("p_fd", a.p_fd.to_string());
        kv("alpha_d", a.alpha_d.to_string());
        kv("alpha_s", a.alpha_s.to_string());
        kv("h", self.h.to_string());
        kv("seed", self.seed.to_string());
        kv("tolerance", s.tolerance.to_string());
        kv("max_iterations", s.max_iterations.to_string());
        kv("residual_norm", s.norm.to_string());
        if let Some(o) = &self.out {
            kv("out", o.display().to_string());
        }
        kv("mode", c.mode.as_str().to_string());
        kv("young", c.young.to_string());
        kv("poisson", c.poisson.to_string());
        kv("sigma_y0", c.sigma_y0.to_string());
        kv("hardening", c.hardening.to_string());
        kv("length", c.length.to_string());
        kv("depth", c.depth.to_string());
        kv("force", c.force.to_string());
        kv("r_in", c.r_in.to_string());
        kv("r_out", c.r_out.to_string());
        kv("sector", c.sector.to_string());
        kv("pressure", c.pressure.to_string());
        kv("side", c.side.to_string());
        kv("hole_radius", c.hole_radius.to_string());
        kv("sigma_inf", c.sigma_inf.to_string());
        kv("load_min", c.load_min.to_string());
        kv("load_max", c.load_max.to_string());
        kv("load_step", c.load_step.to_string());
        let g = &self.sweep;
        if !g.hs.is_empty() {
            kv("sweep_h", join(&g.hs));
        }
        if !g.degrees.is_empty() {
            kv("sweep_p", join(&g.degrees));
        }
        if !g.alpha_d.is_empty() {
            kv("sweep_alpha_d", join(&g.alpha_d));
        }
        if !g.alpha_s.is_empty() {
            kv("sweep_alpha_s", join(&g.alpha_s));
        }
        if !g.approaches.is_empty() {
            kv("sweep_approach", join(&g.approaches));
        }
        kv("condition", g.condition.to_string());
        kv("dense_limit", g.dense_limit.to_string());
        t
    }

    /// Sweep over the configured grid; empty grid lists use the run values.
    pub fn sweep_spec(&self) -> SweepSpec {
        let g = &self.sweep;
        let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        SweepSpec {
            case: self.case.clone(),
            hs: or(&g.hs, self.h),
            degrees: if g.degrees.is_empty() {
                vec![self.approach.stencil.degree]
            } else {
                g.degrees.clone()
            },
            alpha_d: or(&g.alpha_d, self.approach.alpha_d),
            alpha_s: or(&g.alpha_s, self.approach.alpha_s),
            approaches: if g.approaches.is_empty() {
                vec![self.approach.approach]
            } else {
                g.approaches.clone()
            },
            m: self.approach.stencil.m,
            p_fd: self.approach.p_fd,
            seed: self.seed,
            settings: self.settings.clone(),
            condition: g.condition,
            dense_limit: g.dense_limit,
        }
    }
}

/// Node field table `x y u1 u2 s11 s22 s33 s12 epbar`, one row per node.
pub fn field_table(disc: &Discretization, state: &SolverState) -> String {
    let mut s = String::with_capacity(disc.n_nodes() * 200);
    s.push_str("# x y u1 u2 s11 s22 s33 s12 epbar\n");
    for (l, p) in disc.positions().iter().enumerate() {
        let st = &state.states[l];
        writeln!(
            s,
            "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
            p[0],
            p[1],
            state.u[2 * l],
            state.u[2 * l + 1],
            st.stress[0],
            st.stress[1],
            st.stress[2],
            st.stress[3],
            st.epbar
        )
        .unwrap();
    }
    s
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn create_dir(path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_lists_required_keys() {
        let e = parse_config("").unwrap_err().to_string();
        assert!(e.contains("case") && e.contains("h (or rho)"), "{e}");
        let e = parse_config("# only a comment\n\n").unwrap_err().to_string();
        assert!(e.contains("required"));
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse_config("case = annulus\nh = 0.1\nfoo = 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { ref key, .. } if key == "foo"));
    }

    #[test]
    fn clamps_secondary_offset_for_fourth_order() {
        let c = parse_config("case = annulus\nh = 0.1\nalpha_d = 0.9\np_fd = 4\n").unwrap();
        assert_eq!(c.approach.alpha_d, 0.5);
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn plastic_plane_stress_rejected() {
        let e = parse_config("case = annulus_plastic\nh = 0.1\nmode = plane_stress\n").unwrap_err();
        assert!(matches!(e, Error::Parse { ref key, .. } if key == "mode"));
        assert!(parse_config("case = annulus\nh = 0.1\nrho = 30\n").is_err());
        assert!(parse_config("case = annulus\nh = -1\n").is_err());
        assert!(parse_config("case = annulus\nh = 0.1\nh = 0.2\n").is_err());
        assert!(parse_config("case = annulus\nh = 0.1\napproach = fem\n").is_err());
    }

    #[test]
    fn full_plastic_annulus_accepted_and_echo_roundtrips() {
        let text = "case = annulus_plastic\napproach = hybrid\nh = 0.025\nalpha_d = 0.5\nalpha_s = 0.5\n\
                    p = 2\nm = 3\np_fd = 2\nsigma_y0 = 20\nhardening = 0\nload_min = 8\nload_max = 10.5\n\
                    load_step = 0.1\ntolerance = 1e-7\nmax_iterations = 70\nseed = 7\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.case.load_program().unwrap().len(), 26);
        let echo = c.echo();
        let again = parse_config(&echo).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.echo(), echo);
    }

    #[test]
    fn sweep_lists_roundtrip() {
        let text = "case = annulus\nrho = 400\nsweep_h = 0.066, 0.033\nsweep_p = 2,3\nsweep_approach = composed, hybrid\nout = runs/a\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.sweep.hs, vec![0.066, 0.033]);
        assert_eq!(c.sweep.approaches, vec![Approach::Composed, Approach::Hybrid]);
        let again = parse_config(&c.echo()).unwrap();
        assert_eq!(again, c);
        let spec = c.sweep_spec();
        assert_eq!(spec.degrees, vec![2, 3]);
        assert_eq!(spec.alpha_s, vec![0.0]);
    }
}
