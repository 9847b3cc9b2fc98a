//! Line-oriented `key = value` run configuration with `[section]` headers.
//!
//! A configuration starts from a preset (`preset = <name>` at the top, or
//! the command line) and overrides individual fields. Boundary values may
//! be written as numbers, `free`, or multiples of `U0` and `L`, e.g.
//! `u.right = L`, `u.indenter = 0 U0`, `u.symmetry = normal`.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::evolution::{IterationCaps, MeshSpec, Scenario, Segment, Tolerances};
use crate::material::MaterialParams;
use crate::subsolvers::{BoundaryLoad, PlasticMethod};

use super::presets::preset_config;

/// One component of a prescribed boundary displacement at unit load time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Free,
    Value(f64),
    /// Multiple of the load amplitude `U0`.
    Amplitude(f64),
    /// Multiple of the domain length `L`.
    Length(f64),
}

impl Component {
    fn parse(token: &str) -> Option<Component> {
        let scaled = |suffix: &str| -> Option<f64> {
            let head = token.strip_suffix(suffix)?;
            match head {
                "" => Some(1.0),
                "-" => Some(-1.0),
                h => h.strip_suffix('*')?.parse().ok(),
            }
        };
        if token == "free" {
            Some(Component::Free)
        } else if let Some(m) = scaled("U0") {
            Some(Component::Amplitude(m))
        } else if let Some(m) = scaled("L") {
            Some(Component::Length(m))
        } else {
            token
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .map(Component::Value)
        }
    }

    fn render(self) -> String {
        let scaled = |m: f64, s: &str| {
            if m == 1.0 {
                s.to_string()
            } else if m == -1.0 {
                format!("-{s}")
            } else {
                format!("{m}*{s}")
            }
        };
        match self {
            Component::Free => "free".into(),
            Component::Value(x) => format!("{x}"),
            Component::Amplitude(m) => scaled(m, "U0"),
            Component::Length(m) => scaled(m, "L"),
        }
    }

    fn resolve(self, u0: f64, length: f64) -> Option<f64> {
        match self {
            Component::Free => None,
            Component::Value(x) => Some(x),
            Component::Amplitude(m) => Some(m * u0),
            Component::Length(m) => Some(m * length),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadSpec {
    Components([Component; 2]),
    NormalZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshConfig {
    /// Bar length, or horizontal extent of a rectangle.
    pub length: f64,
    /// Vertical extent; `None` selects a 1D bar.
    pub height: Option<f64>,
    pub dx: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    pub t_final: f64,
    pub h: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub restart_budget: usize,
    pub backtracking: bool,
    pub backtracking_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcConfig {
    pub u0: f64,
    pub segments: Vec<Segment<f64>>,
    /// Loads in precedence order.
    pub loads: Vec<(String, LoadSpec)>,
    pub phase_dirichlet: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub snapshot_stride: usize,
    pub audit: bool,
    pub verification_plastic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: String,
    pub name: String,
    pub mesh: MeshConfig,
    pub material: MaterialParams<f64>,
    pub time: TimeConfig,
    pub bc: BcConfig,
    pub output: OutputConfig,
}

const SECTIONS: [&str; 5] = ["mesh", "material", "time", "bc", "output"];

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| parse_err(line, format!("`{key}` expects a number, got `{value}`")))
}

fn count(line: usize, key: &str, value: &str) -> Result<usize> {
    value.parse::<usize>().map_err(|_| {
        parse_err(
            line,
            format!("`{key}` expects a non-negative integer, got `{value}`"),
        )
    })
}

fn boolean(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(parse_err(
            line,
            format!("`{key}` expects true or false, got `{value}`"),
        )),
    }
}

fn identifier(line: usize, what: &str, s: &str) -> Result<String> {
    if s.is_empty()
        || !s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(parse_err(line, format!("invalid {what} `{s}`")));
    }
    Ok(s.to_string())
}

/// Strips a trailing `#` comment.
fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Name of the preset a configuration text selects, if any.
fn declared_preset(text: &str) -> Result<Option<String>> {
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.starts_with('[') {
            break;
        }
        if let Some((k, v)) = line.split_once('=') {
            if k.trim() == "preset" {
                return Ok(Some(identifier(i + 1, "preset name", v.trim())?));
            }
        }
    }
    Ok(None)
}

/// Parses `text` on top of the preset it names; `preset_override` (from
/// the command line) takes precedence. Without either, `traction1d` is the
/// base.
pub fn parse_config(text: &str, preset_override: Option<&str>) -> Result<RunConfig> {
    let preset = match preset_override {
        Some(p) => p.to_string(),
        None => declared_preset(text)?.unwrap_or_else(|| "traction1d".to_string()),
    };
    let mut cfg = preset_config(&preset)?;
    let mut section: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(lineno, format!("malformed section header `{line}`")))?
                .trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|s| **s == name)
                    .copied()
                    .ok_or_else(|| parse_err(lineno, format!("unknown section `[{name}]`")))?,
            );
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(lineno, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(parse_err(lineno, format!("missing value for `{key}`")));
        }
        apply(&mut cfg, section, key, value, lineno)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply(
    cfg: &mut RunConfig,
    section: Option<&str>,
    key: &str,
    value: &str,
    line: usize,
) -> Result<()> {
    let unknown = || {
        let place = section
            .map(|s| format!("[{s}]"))
            .unwrap_or_else(|| "top level".into());
        Err(parse_err(line, format!("unknown key `{key}` in {place}")))
    };
    match section {
        None => match key {
            "preset" => {}
            "name" => cfg.name = identifier(line, "scenario name", value)?,
            _ => return unknown(),
        },
        Some("mesh") => match key {
            "L" | "Lx" => cfg.mesh.length = number(line, key, value)?,
            "Ly" => cfg.mesh.height = Some(number(line, key, value)?),
            "dx" => cfg.mesh.dx = number(line, key, value)?,
            _ => return unknown(),
        },
        Some("material") => {
            let m = &mut cfg.material;
            match key {
                "model" => {
                    m.model = value
                        .parse()
                        .map_err(|_| parse_err(line, format!("unknown model `{value}`")))?
                }
                "K" => m.young = number(line, key, value)?,
                "nu" => m.poisson = number(line, key, value)?,
                "tau" => m.yield_stress = number(line, key, value)?,
                "beta1" => m.beta1 = number(line, key, value)?,
                "beta2" => m.beta2 = number(line, key, value)?,
                "k" => m.hardening = number(line, key, value)?,
                "epsilon" => m.epsilon = number(line, key, value)?,
                "eta" => m.eta = number(line, key, value)?,
                _ => return unknown(),
            }
        }
        Some("time") => {
            let t = &mut cfg.time;
            match key {
                "t_final" => t.t_final = number(line, key, value)?,
                "h" => t.h = number(line, key, value)?,
                "delta1" => t.delta1 = number(line, key, value)?,
                "delta2" => t.delta2 = number(line, key, value)?,
                "max_outer" => t.max_outer = count(line, key, value)?,
                "max_inner" => t.max_inner = count(line, key, value)?,
                "restart_budget" => t.restart_budget = count(line, key, value)?,
                "backtracking" => t.backtracking = boolean(line, key, value)?,
                "backtracking_tol" => t.backtracking_tol = number(line, key, value)?,
                _ => return unknown(),
            }
        }
        Some("bc") => apply_bc(&mut cfg.bc, key, value, line)?,
        Some("output") => {
            let o = &mut cfg.output;
            match key {
                "dir" => o.dir = Some(PathBuf::from(value)),
                "snapshot_stride" => o.snapshot_stride = count(line, key, value)?,
                "audit" => o.audit = boolean(line, key, value)?,
                "verification_plastic" => o.verification_plastic = boolean(line, key, value)?,
                _ => return unknown(),
            }
        }
        Some(_) => return unknown(),
    }
    Ok(())
}

fn apply_bc(bc: &mut BcConfig, key: &str, value: &str, line: usize) -> Result<()> {
    if key == "U0" {
        bc.u0 = number(line, key, value)?;
    } else if key == "phase_dirichlet" {
        bc.phase_dirichlet = value
            .split(',')
            .map(|s| identifier(line, "tag", s.trim()))
            .collect::<Result<_>>()?;
    } else if let Some(tag) = key.strip_prefix("tag.") {
        let tag = identifier(line, "tag", tag)?;
        let parts: Vec<&str> = value.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(
                line,
                format!("`{key}` expects `<side> <from> <to>`, got `{value}`"),
            ));
        }
        let seg = Segment {
            tag: tag.clone(),
            side: identifier(line, "side", parts[0])?,
            interval: [number(line, key, parts[1])?, number(line, key, parts[2])?],
        };
        match bc.segments.iter_mut().find(|s| s.tag == tag) {
            Some(s) => *s = seg,
            None => bc.segments.push(seg),
        }
    } else if let Some(tag) = key.strip_prefix("u.") {
        let tag = identifier(line, "tag", tag)?;
        let parts: Vec<&str> = value.split_whitespace().collect();
        let spec = match parts.as_slice() {
            ["normal"] => LoadSpec::NormalZero,
            [a] => LoadSpec::Components([comp(line, key, a)?, Component::Free]),
            [a, b] => LoadSpec::Components([comp(line, key, a)?, comp(line, key, b)?]),
            _ => {
                return Err(parse_err(
                    line,
                    format!("`{key}` expects one or two components or `normal`, got `{value}`"),
                ))
            }
        };
        match bc.loads.iter_mut().find(|(t, _)| *t == tag) {
            Some(entry) => entry.1 = spec,
            None => bc.loads.push((tag, spec)),
        }
    } else {
        return Err(parse_err(line, format!("unknown key `{key}` in [bc]")));
    }
    Ok(())
}

fn comp(line: usize, key: &str, token: &str) -> Result<Component> {
    Component::parse(token)
        .ok_or_else(|| parse_err(line, format!("`{key}`: cannot read component `{token}`")))
}

fn validation(key: &str, message: impl Into<String>) -> Error {
    Error::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn dim(&self) -> usize {
        if self.mesh.height.is_some() {
            2
        } else {
            1
        }
    }

    /// Checks every field and the scenario they describe.
    pub fn validate(&self) -> Result<()> {
        if self.output.snapshot_stride == 0 {
            return Err(validation("snapshot_stride", "snapshot_stride must be ≥ 1"));
        }
        if !self.bc.u0.is_finite() {
            return Err(validation("U0", "U0 must be finite"));
        }
        if self.dim() == 1
            && self
                .bc
                .loads
                .iter()
                .any(|(_, l)| *l == LoadSpec::NormalZero)
        {
            return Err(validation(
                "bc",
                "`normal` boundary conditions need a 2D mesh",
            ));
        }
        if self.dim() == 1 && !self.bc.segments.is_empty() {
            return Err(validation("bc", "boundary segments need a 2D mesh"));
        }
        self.to_scenario().map(|_| ())
    }

    /// The scenario described by this configuration.
    pub fn to_scenario(&self) -> Result<Scenario<f64>> {
        let mesh = match self.mesh.height {
            None => MeshSpec::Interval {
                length: self.mesh.length,
                dx: self.mesh.dx,
            },
            Some(ly) => MeshSpec::Rectangle {
                lx: self.mesh.length,
                ly,
                dx: self.mesh.dx,
                segments: self.bc.segments.clone(),
            },
        };
        let loads = self
            .bc
            .loads
            .iter()
            .map(|(tag, spec)| match spec {
                LoadSpec::NormalZero => BoundaryLoad::normal_zero(tag),
                LoadSpec::Components([a, b]) => BoundaryLoad::components(
                    tag,
                    a.resolve(self.bc.u0, self.mesh.length),
                    b.resolve(self.bc.u0, self.mesh.length),
                ),
            })
            .collect();
        let t = &self.time;
        let scenario = Scenario {
            name: self.name.clone(),
            mesh,
            params: self.material,
            final_time: t.t_final,
            time_step: t.h,
            loads,
            phase_dirichlet: self.bc.phase_dirichlet.clone(),
            tolerances: Tolerances {
                delta1: t.delta1,
                delta2: t.delta2,
                backtracking: t.backtracking_tol,
            },
            caps: IterationCaps {
                outer: t.max_outer,
                inner: t.max_inner,
                restart_budget: t.restart_budget,
            },
            backtracking: t.backtracking,
            plastic_method: if self.output.verification_plastic {
                PlasticMethod::GradientDescent
            } else {
                PlasticMethod::Shrinkage
            },
        };
        let as_validation = |e: Error| match e {
            Error::InvalidParameter { name, reason } => {
                let message = format!("{name} {reason}");
                validation(&name, message)
            }
            Error::Conflict(m) => validation("bc", m),
            other => other,
        };
        scenario.validate().map_err(as_validation)?;
        let mesh = scenario.mesh.build().map_err(as_validation)?;
        for (tag, _) in &self.bc.loads {
            if !mesh.has_tag(tag) {
                return Err(validation(
                    &format!("u.{tag}"),
                    format!("unknown boundary tag `{tag}`"),
                ));
            }
        }
        for tag in &self.bc.phase_dirichlet {
            if !mesh.has_tag(tag) {
                return Err(validation(
                    "phase_dirichlet",
                    format!("unknown boundary tag `{tag}`"),
                ));
            }
        }
        Ok(scenario)
    }

    /// Full text form; `parse_config(render(c))` reproduces `c`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "preset = {}", self.preset);
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "\n[mesh]\nL = {}", self.mesh.length);
        if let Some(ly) = self.mesh.height {
            let _ = writeln!(s, "Ly = {ly}");
        }
        let _ = writeln!(s, "dx = {}", self.mesh.dx);
        let m = &self.material;
        let _ = writeln!(
            s,
            "\n[material]\nmodel = {}\nK = {}\nnu = {}\ntau = {}\nbeta1 = {}\nbeta2 = {}\nk = {}\nepsilon = {}\neta = {}",
            m.model.name(),
            m.young,
            m.poisson,
            m.yield_stress,
            m.beta1,
            m.beta2,
            m.hardening,
            m.epsilon,
            m.eta
        );
        let t = &self.time;
        let _ = writeln!(
            s,
            "\n[time]\nt_final = {}\nh = {}\ndelta1 = {}\ndelta2 = {}\nmax_outer = {}\nmax_inner = {}\nrestart_budget = {}\nbacktracking = {}\nbacktracking_tol = {}",
            t.t_final, t.h, t.delta1, t.delta2, t.max_outer, t.max_inner, t.restart_budget, t.backtracking, t.backtracking_tol
        );
        let _ = writeln!(s, "\n[bc]\nU0 = {}", self.bc.u0);
        for seg in &self.bc.segments {
            let _ = writeln!(
                s,
                "tag.{} = {} {} {}",
                seg.tag, seg.side, seg.interval[0], seg.interval[1]
            );
        }
        for (tag, spec) in &self.bc.loads {
            let v = match spec {
                LoadSpec::NormalZero => "normal".to_string(),
                LoadSpec::Components([a, b]) => format!("{} {}", a.render(), b.render()),
            };
            let _ = writeln!(s, "u.{tag} = {v}");
        }
        if !self.bc.phase_dirichlet.is_empty() {
            let _ = writeln!(
                s,
                "phase_dirichlet = {}",
                self.bc.phase_dirichlet.join(", ")
            );
        }
        let o = &self.output;
        let _ = writeln!(s, "\n[output]");
        if let Some(dir) = &o.dir {
            let _ = writeln!(s, "dir = {}", dir.display());
        }
        let _ = writeln!(
            s,
            "snapshot_stride = {}\naudit = {}\nverification_plastic = {}",
            o.snapshot_stride, o.audit, o.verification_plastic
        );
        s
    }
}

impl std::str::FromStr for RunConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_config(s, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_on_top_of_preset() {
        let c = parse_config("[material]\nK = 4\ntau = 1.5", Some("traction1d")).unwrap();
        assert_eq!(c.material.young, 4.0);
        assert_eq!(c.material.yield_stress, 1.5);
        let c = parse_config("preset = traction1d\n[material]\ntau = 0.8\n", None).unwrap();
        assert_eq!(c.material.yield_stress, 0.8);
    }

    #[test]
    fn empty_text_gives_preset_defaults() {
        let c = parse_config("", Some("traction1d")).unwrap();
        assert_eq!(c.mesh.length, 10.0);
        assert_eq!(c.material.young, 4.0);
        assert_eq!(c.material.yield_stress, 1.5);
        assert_eq!(c.mesh.dx, 0.015);
        assert_eq!(c.time.h, 0.025);
        assert_eq!(c.material.eta, 1e-6);
        assert_eq!(c.material.epsilon, 0.094);
    }

    #[test]
    fn negative_yield_stress_is_rejected() {
        let err = parse_config("[material]\ntau = -1", Some("traction1d")).unwrap_err();
        match err {
            Error::Validation { key, message } => {
                assert_eq!(key, "tau");
                assert!(message.contains("tau must be ≥ 0"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        for (text, line) in [
            ("[material]\nK = 4\ntua = 1", 3),
            ("\n\n[nope]", 3),
            ("[time]\nh = abc", 2),
            ("[bc]\nu.right = 1 2 3", 2),
            ("just words", 1),
        ] {
            match parse_config(text, Some("traction1d")) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(
            parse_config("", Some("nope")),
            Err(Error::UnknownPreset(_))
        ));
    }

    #[test]
    fn render_round_trips_every_preset() {
        for name in super::super::presets::PRESETS {
            let c = parse_config("", Some(name)).unwrap();
            let again = parse_config(&c.render(), None).unwrap();
            assert_eq!(c, again, "{name}");
        }
        let c = parse_config(
            "preset = plasticine-model3\n[bc]\nU0 = 0.5\nu.extra = -2*U0 free\ntag.extra = right 0.2 0.4\n[output]\ndir = /tmp/x y\n",
            None,
        )
        .unwrap();
        assert_eq!(parse_config(&c.render(), None).unwrap(), c);
    }

    #[test]
    fn component_tokens() {
        assert_eq!(Component::parse("U0"), Some(Component::Amplitude(1.0)));
        assert_eq!(Component::parse("-U0"), Some(Component::Amplitude(-1.0)));
        assert_eq!(Component::parse("0.5*L"), Some(Component::Length(0.5)));
        assert_eq!(Component::parse("free"), Some(Component::Free));
        assert_eq!(Component::parse("2.5"), Some(Component::Value(2.5)));
        assert_eq!(Component::parse("x"), None);
        for c in [
            Component::Amplitude(-2.0),
            Component::Length(1.0),
            Component::Value(-0.0),
            Component::Free,
        ] {
            assert_eq!(Component::parse(&c.render()), Some(c));
        }
    }
}
