//! Legacy ASCII VTK snapshots: `v` and `u` on nodes, `p` and `|p|` on
//! elements. Values are written in shortest round-trip form, so reading a
//! snapshot back reproduces the state exactly.

use std::io::Write;

use crate::energy::State;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::tensor::Sym2;

pub fn write_vtk<W: Write>(mesh: &Mesh<f64>, state: &State<f64>, mut out: W) -> Result<()> {
    state.check_shape(mesh)?;
    let dim = mesh.dim();
    let nn = mesh.num_nodes();
    let ne = mesh.num_elements();
    let k = mesh.nodes_per_element();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "t={:e}", state.t)?;
    writeln!(out, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nn} double")?;
    for [x, y] in mesh.nodes() {
        writeln!(out, "{x:e} {y:e} 0")?;
    }
    writeln!(out, "CELLS {ne} {}", ne * (k + 1))?;
    for el in mesh.elements() {
        write!(out, "{k}")?;
        for n in el {
            write!(out, " {n}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "CELL_TYPES {ne}")?;
    let cell_type = if dim == 1 { 3 } else { 5 };
    for _ in 0..ne {
        writeln!(out, "{cell_type}")?;
    }
    writeln!(
        out,
        "POINT_DATA {nn}\nSCALARS v double 1\nLOOKUP_TABLE default"
    )?;
    for v in &state.v {
        writeln!(out, "{v:e}")?;
    }
    writeln!(out, "VECTORS u double")?;
    for i in 0..nn {
        let uy = if dim == 2 { state.u[2 * i + 1] } else { 0.0 };
        writeln!(out, "{:e} {uy:e} 0", state.u[dim * i])?;
    }
    writeln!(out, "CELL_DATA {ne}\nTENSORS p double")?;
    for p in &state.p {
        writeln!(
            out,
            "{:e} {:e} 0\n{:e} {:e} 0\n0 0 0",
            p.xx, p.xy, p.xy, p.yy
        )?;
    }
    writeln!(out, "SCALARS p_norm double 1\nLOOKUP_TABLE default")?;
    for p in &state.p {
        writeln!(out, "{:e}", p.norm())?;
    }
    Ok(())
}

/// Contents of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub points: Vec<[f64; 2]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub v: Vec<f64>,
    /// Node displacements, always two components.
    pub u: Vec<[f64; 2]>,
    pub p: Vec<Sym2<f64>>,
    pub p_norm: Vec<f64>,
}

impl Snapshot {
    /// Rebuilds a state with the dof layout of a `dim`-dimensional mesh.
    pub fn to_state(&self, dim: usize) -> State<f64> {
        let u = match dim {
            1 => self.u.iter().map(|u| u[0]).collect(),
            _ => self.u.iter().flat_map(|u| *u).collect(),
        };
        State {
            t: self.t,
            u,
            v: self.v.clone(),
            p: self.p.clone(),
        }
    }
}

struct Tokens<'a> {
    inner: std::iter::Peekable<std::str::SplitWhitespace<'a>>,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        self.inner
            .next()
            .ok_or_else(|| Error::Format(format!("unexpected end of file reading {what}")))
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let got = self.next(word)?;
        if got != word {
            return Err(Error::Format(format!("expected `{word}`, found `{got}`")));
        }
        Ok(())
    }

    fn num<F: std::str::FromStr>(&mut self, what: &str) -> Result<F> {
        let tok = self.next(what)?;
        tok.parse()
            .map_err(|_| Error::Format(format!("cannot read {what} from `{tok}`")))
    }

    fn nums(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        (0..n).map(|_| self.num(what)).collect()
    }
}

pub fn read_vtk(text: &str) -> Result<Snapshot> {
    let mut lines = text.lines();
    if !lines
        .next()
        .is_some_and(|l| l.starts_with("# vtk DataFile"))
    {
        return Err(Error::Format("missing VTK header".into()));
    }
    let title = lines.next().unwrap_or_default();
    let t = title
        .trim()
        .strip_prefix("t=")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format(format!("cannot read time from title `{title}`")))?;
    let rest: String = lines.collect::<Vec<_>>().join("\n");
    let mut tk = Tokens {
        inner: rest.split_whitespace().peekable(),
    };
    tk.expect("ASCII")?;
    tk.expect("DATASET")?;
    tk.expect("UNSTRUCTURED_GRID")?;
    tk.expect("POINTS")?;
    let nn: usize = tk.num("point count")?;
    tk.expect("double")?;
    let xyz = tk.nums(3 * nn, "coordinates")?;
    let points = xyz.chunks(3).map(|c| [c[0], c[1]]).collect();
    tk.expect("CELLS")?;
    let ne: usize = tk.num("cell count")?;
    let _size: usize = tk.num("cell list size")?;
    let mut cells = Vec::with_capacity(ne);
    for _ in 0..ne {
        let k: usize = tk.num("cell size")?;
        let c = (0..k)
            .map(|_| tk.num("node index"))
            .collect::<Result<Vec<usize>>>()?;
        if c.iter().any(|&n| n >= nn) {
            return Err(Error::Format("cell references a missing point".into()));
        }
        cells.push(c);
    }
    tk.expect("CELL_TYPES")?;
    let _: usize = tk.num("cell type count")?;
    let cell_types = (0..ne)
        .map(|_| tk.num("cell type"))
        .collect::<Result<_>>()?;
    tk.expect("POINT_DATA")?;
    let _: usize = tk.num("point data count")?;
    for w in ["SCALARS", "v", "double", "1", "LOOKUP_TABLE", "default"] {
        tk.expect(w)?;
    }
    let v = tk.nums(nn, "v")?;
    for w in ["VECTORS", "u", "double"] {
        tk.expect(w)?;
    }
    let u = tk
        .nums(3 * nn, "u")?
        .chunks(3)
        .map(|c| [c[0], c[1]])
        .collect();
    tk.expect("CELL_DATA")?;
    let _: usize = tk.num("cell data count")?;
    for w in ["TENSORS", "p", "double"] {
        tk.expect(w)?;
    }
    let p = tk
        .nums(9 * ne, "p")?
        .chunks(9)
        .map(|c| Sym2::new(c[0], c[4], c[1]))
        .collect();
    for w in [
        "SCALARS",
        "p_norm",
        "double",
        "1",
        "LOOKUP_TABLE",
        "default",
    ] {
        tk.expect(w)?;
    }
    let p_norm = tk.nums(ne, "p_norm")?;
    Ok(Snapshot {
        t,
        points,
        cells,
        cell_types,
        v,
        u,
        p,
        p_norm,
    })
}
