#![allow(dead_code)]

use varfrac::cli_io::{preset_config, RunConfig};
use varfrac::evolution::{IterationCaps, MeshSpec, Scenario, Tolerances};
use varfrac::material::MaterialParams;
use varfrac::{BoundaryLoad, PlasticMethod};

/// Scenario of a preset after applying `edit` to its configuration.
pub fn preset_scenario(name: &str, edit: impl FnOnce(&mut RunConfig)) -> Scenario<f64> {
    let mut cfg = preset_config(name).unwrap();
    edit(&mut cfg);
    cfg.to_scenario().unwrap()
}

/// Bar `(0, length)` pulled at its right end to `t·length`, `v = 1` at both ends.
pub fn bar(
    length: f64,
    dx: f64,
    params: MaterialParams<f64>,
    h: f64,
    final_time: f64,
    backtracking: bool,
) -> Scenario<f64> {
    Scenario {
        name: "bar".into(),
        mesh: MeshSpec::Interval { length, dx },
        params,
        final_time,
        time_step: h,
        loads: vec![
            BoundaryLoad::components("left", Some(0.0), None),
            BoundaryLoad::components("right", Some(length), None),
        ],
        phase_dirichlet: vec!["left".into(), "right".into()],
        tolerances: Tolerances::default(),
        caps: IterationCaps::default(),
        backtracking,
        plastic_method: PlasticMethod::Shrinkage,
    }
}

/// Golden-section minimizer of a convex scalar function on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
