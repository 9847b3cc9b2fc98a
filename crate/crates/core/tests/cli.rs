use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use varfrac::cli_io::{self, read_energy_csv, read_vtk, RunOptions};

const SMALL: &str = "preset = traction1d
name = small
[mesh]
L = 1
dx = 0.05
[time]
t_final = 0.5
h = 0.05
[output]
snapshot_stride = 3
";

fn varfrac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varfrac"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_consistent_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.cfg", SMALL);
    let out = tmp.path().join("out");
    let o = varfrac(&["run", &cfg, "--out", out.to_str().unwrap(), "--audit"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("dissipation check: ok"));

    let rendered = fs::read_to_string(out.join("run.cfg")).unwrap();
    let loaded = cli_io::load_config(
        Path::new(&cfg),
        &RunOptions {
            out: Some(out.clone()),
            audit: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(cli_io::parse_config(&rendered, None).unwrap(), loaded);

    let rows = read_energy_csv(&fs::read_to_string(out.join("energy.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 11);
    assert!(rows.windows(2).all(|w| w[1].t > w[0].t));
    for r in &rows {
        let sum = r.elastic + r.plastic_cum + r.surface;
        assert!((r.total - sum).abs() <= 1e-12 * sum.abs().max(1e-300));
    }

    let trace = cli_io::read_trace(&out).unwrap();
    let mesh = trace.scenario.mesh.build().unwrap();
    for n in [0, 3, 6, 9, 10] {
        let snap = read_vtk(&fs::read_to_string(cli_io::snapshot_path(&out, n)).unwrap()).unwrap();
        let state = snap.to_state(1);
        let want = &trace.steps[n].state;
        assert_eq!(state.t, want.t);
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-15);
        assert!(close(&state.u, &want.u) && close(&state.v, &want.v));
        assert_eq!(snap.cells.len(), mesh.num_elements());
        assert!(snap.cell_types.iter().all(|&c| c == 3));
    }
    assert!(!cli_io::snapshot_path(&out, 1).exists());

    let o = varfrac(&["audit", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let audit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("audit.json")).unwrap()).unwrap();
    assert_eq!(audit["dissipation_ok"], serde_json::Value::Bool(true));
}

#[test]
fn runs_are_bit_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.cfg", SMALL);
    let mut tables = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        assert!(varfrac(&["run", &cfg, "--out", out.to_str().unwrap()])
            .status
            .success());
        tables.push((
            fs::read(out.join("energy.csv")).unwrap(),
            fs::read(cli_io::snapshot_path(&out, 10)).unwrap(),
        ));
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn invalid_configurations_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("[material]\ntau = -1\n", "tau must be ≥ 0"),
        ("[material]\nK = 4\ntua = 1\n", "line 3"),
        ("[bc]\nu.nowhere = 0\n", "nowhere"),
        ("[time]\nh = 0.3\n", "h"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("bad{i}.cfg"), text);
        let o = varfrac(&["run", &cfg, "--out", tmp.path().join("x").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{text}: {}", stderr(&o));
    }
    let cfg = write_config(tmp.path(), "empty.cfg", "");
    let o = varfrac(&["run", &cfg, "--preset", "no-such-preset"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_failures_exit_with_code_4() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.cfg");
    assert_eq!(
        varfrac(&["run", missing.to_str().unwrap()]).status.code(),
        Some(4)
    );
    assert_eq!(
        varfrac(&["audit", tmp.path().to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn iteration_cap_exhaustion_exits_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}[time]\nmax_inner = 1\nmax_outer = 1\n");
    let cfg = write_config(tmp.path(), "capped.cfg", &text);
    let o = varfrac(&["run", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("step 1"), "{}", stderr(&o));
}

#[test]
fn command_line_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "o.cfg", "[time]\nt_final = 0.1\n");
    let out = tmp.path().join("elsewhere");
    let opts = RunOptions {
        preset: Some("traction1d-model2".into()),
        out: Some(out.clone()),
        no_backtracking: true,
        audit: true,
    };
    let c = cli_io::load_config(Path::new(&cfg), &opts).unwrap();
    assert_eq!(c.material.model, varfrac::Model::Model2);
    assert!(!c.time.backtracking && c.output.audit);
    assert_eq!(cli_io::output_dir(&c), out);
}
