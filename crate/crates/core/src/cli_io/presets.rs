//! Named scenario presets used as configuration bases.

use crate::error::{Error, Result};
use crate::evolution::Segment;
use crate::material::{MaterialParams, Model};

use super::config::{
    BcConfig, Component, LoadSpec, MeshConfig, OutputConfig, RunConfig, TimeConfig,
};

pub const PRESETS: [&str; 6] = [
    "traction1d",
    "traction1d-model1",
    "traction1d-model2",
    "traction1d-model3",
    "traction2d-model3",
    "plasticine-model3",
];

fn time(t_final: f64, h: f64) -> TimeConfig {
    TimeConfig {
        t_final,
        h,
        delta1: 1e-5,
        delta2: 1e-5,
        max_outer: 500,
        max_inner: 500,
        restart_budget: 3,
        backtracking: true,
        backtracking_tol: 1e-6,
    }
}

fn output() -> OutputConfig {
    OutputConfig {
        dir: None,
        snapshot_stride: 10,
        audit: false,
        verification_plastic: false,
    }
}

fn fixed(tag: &str, a: Component, b: Component) -> (String, LoadSpec) {
    (tag.to_string(), LoadSpec::Components([a, b]))
}

fn segment(tag: &str, side: &str, a: f64, b: f64) -> Segment<f64> {
    Segment {
        tag: tag.into(),
        side: side.into(),
        interval: [a, b],
    }
}

/// Bar of length 10 stretched by moving its right end to `t·L`.
fn traction1d(name: &str, model: Model, tau: f64, beta1: f64, beta2: f64, k: f64) -> RunConfig {
    use Component::{Free, Length, Value};
    RunConfig {
        preset: name.into(),
        name: name.into(),
        mesh: MeshConfig {
            length: 10.0,
            height: None,
            dx: 0.015,
        },
        material: MaterialParams {
            young: 4.0,
            poisson: 0.0,
            yield_stress: tau,
            beta1,
            beta2,
            hardening: k,
            epsilon: 0.094,
            eta: 1e-6,
            model,
        },
        time: time(4.0, 0.025),
        bc: BcConfig {
            u0: 1.0,
            segments: Vec::new(),
            loads: vec![
                fixed("left", Value(0.0), Free),
                fixed("right", Length(1.0), Free),
            ],
            phase_dirichlet: vec!["left".into(), "right".into()],
        },
        output: output(),
    }
}

fn traction2d() -> RunConfig {
    use Component::{Amplitude, Value};
    RunConfig {
        preset: "traction2d-model3".into(),
        name: "traction2d-model3".into(),
        mesh: MeshConfig {
            length: 2.0,
            height: Some(1.0),
            dx: 0.05,
        },
        material: MaterialParams {
            young: 10.0,
            poisson: 0.252,
            yield_stress: 1.0,
            beta1: 0.0,
            beta2: 0.0,
            hardening: 100.0,
            epsilon: 0.25,
            eta: 1e-6,
            model: Model::Model3,
        },
        time: time(5.0, 0.1),
        bc: BcConfig {
            u0: 1.0,
            segments: Vec::new(),
            loads: vec![
                fixed("left", Value(0.0), Value(0.0)),
                fixed("right", Amplitude(1.0), Value(0.0)),
            ],
            phase_dirichlet: vec!["left".into(), "right".into()],
        },
        output: output(),
    }
}

/// Unit square pressed from below on `[0.3, 0.7]`, held at the top, with a
/// symmetry line on the left.
fn plasticine() -> RunConfig {
    use Component::{Amplitude, Value};
    RunConfig {
        preset: "plasticine-model3".into(),
        name: "plasticine-model3".into(),
        mesh: MeshConfig {
            length: 1.0,
            height: Some(1.0),
            dx: 0.017,
        },
        material: MaterialParams {
            young: 100.0,
            poisson: 0.252,
            yield_stress: 1.0,
            beta1: 0.0,
            beta2: 0.0,
            hardening: 100.0,
            epsilon: 0.15,
            eta: 1e-6,
            model: Model::Model3,
        },
        time: time(2.0, 0.05),
        bc: BcConfig {
            u0: 1.0,
            segments: vec![
                segment("indenter", "bottom", 0.3, 0.7),
                segment("fixed", "top", 0.0, 1.0),
                segment("symmetry", "left", 0.0, 1.0),
            ],
            loads: vec![
                fixed("indenter", Value(0.0), Amplitude(1.0)),
                fixed("fixed", Value(0.0), Value(0.0)),
                ("symmetry".into(), LoadSpec::NormalZero),
            ],
            phase_dirichlet: vec!["indenter".into(), "fixed".into()],
        },
        output: output(),
    }
}

/// The configuration a preset name stands for.
pub fn preset_config(name: &str) -> Result<RunConfig> {
    Ok(match name {
        "traction1d" => traction1d(name, Model::Model0, 1.5, 0.0, 0.0, 0.0),
        "traction1d-model1" => traction1d(name, Model::Model1, 1.0, 0.01, 0.0, 0.0),
        "traction1d-model2" => traction1d(name, Model::Model2, 1.0, 0.0, 0.1, 0.0),
        "traction1d-model3" => traction1d(name, Model::Model3, 1.0, 0.0, 0.0, 0.5),
        "traction2d-model3" => traction2d(),
        "plasticine-model3" => plasticine(),
        other => return Err(Error::UnknownPreset(other.to_string())),
    })
}
