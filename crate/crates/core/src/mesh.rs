//! 1D interval meshes and structured 2D triangulations of rectangles.
//!
//! Nodal (P1) fields live on `nodes`, element-wise (P0) fields on `elements`.
//! Boundary tags are stored per (side, node) pair: every boundary node on a
//! given side carries exactly one tag, which starts out as the side name and
//! may be replaced by a sub-segment tag.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }

    pub fn parse(name: &str) -> Option<Side> {
        match name {
            "left" => Some(Side::Left),
            "right" => Some(Side::Right),
            "bottom" => Some(Side::Bottom),
            "top" => Some(Side::Top),
            _ => None,
        }
    }

    /// Unit outward normal for the axis-aligned sides of a rectangle.
    pub fn outward_normal(self) -> [i8; 2] {
        match self {
            Side::Left => [-1, 0],
            Side::Right => [1, 0],
            Side::Bottom => [0, -1],
            Side::Top => [0, 1],
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    dim: usize,
    extent: [T; 2],
    divisions: [usize; 2],
    nodes: Vec<[T; 2]>,
    elements: Vec<[usize; 3]>,
    measures: Vec<T>,
    gradients: Vec<[[T; 2]; 3]>,
    boundary: BTreeMap<(Side, usize), String>,
}

/// Number of elements along a side of length `length` for target spacing `dx`.
fn division_count<T: Real>(length: T, dx: T) -> usize {
    let n = (length / dx).round().to_usize().unwrap_or(1);
    n.max(1)
}

fn check_positive<T: Real>(name: &str, x: T) -> Result<()> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::invalid(
            name,
            format!("must be positive and finite, got {x}"),
        ));
    }
    Ok(())
}

impl<T: Real> Mesh<T> {
    /// Uniform mesh of `(0, length)` with `round(length/dx)` elements.
    pub fn interval(length: T, dx: T) -> Result<Self> {
        check_positive("L", length)?;
        check_positive("dx", dx)?;
        let n = division_count(length, dx);
        let h = length / T::from_usize(n).unwrap();
        let nodes: Vec<[T; 2]> = (0..=n)
            .map(|i| {
                let x = if i == n {
                    length
                } else {
                    T::from_usize(i).unwrap() * h
                };
                [x, T::zero()]
            })
            .collect();
        let elements: Vec<[usize; 3]> = (0..n).map(|e| [e, e + 1, usize::MAX]).collect();
        let mut boundary = BTreeMap::new();
        boundary.insert((Side::Left, 0), Side::Left.name().to_string());
        boundary.insert((Side::Right, n), Side::Right.name().to_string());
        let mut mesh = Mesh {
            dim: 1,
            extent: [length, T::zero()],
            divisions: [n, 0],
            nodes,
            elements,
            measures: Vec::new(),
            gradients: Vec::new(),
            boundary,
        };
        mesh.compute_geometry()?;
        Ok(mesh)
    }

    /// Structured triangulation of `(0, lx) × (0, ly)`; every grid cell is
    /// split along its lower-left to upper-right diagonal.
    pub fn rectangle(lx: T, ly: T, dx: T) -> Result<Self> {
        check_positive("Lx", lx)?;
        check_positive("Ly", ly)?;
        check_positive("dx", dx)?;
        let nx = division_count(lx, dx);
        let ny = division_count(ly, dx);
        let hx = lx / T::from_usize(nx).unwrap();
        let hy = ly / T::from_usize(ny).unwrap();
        let coord = |i: usize, n: usize, h: T, l: T| {
            if i == n {
                l
            } else {
                T::from_usize(i).unwrap() * h
            }
        };
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([coord(i, nx, hx, lx), coord(j, ny, hy, ly)]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (n00, n10, n11, n01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                elements.push([n00, n10, n11]);
                elements.push([n00, n11, n01]);
            }
        }
        let mut boundary = BTreeMap::new();
        for j in 0..=ny {
            boundary.insert((Side::Left, id(0, j)), Side::Left.name().to_string());
            boundary.insert((Side::Right, id(nx, j)), Side::Right.name().to_string());
        }
        for i in 0..=nx {
            boundary.insert((Side::Bottom, id(i, 0)), Side::Bottom.name().to_string());
            boundary.insert((Side::Top, id(i, ny)), Side::Top.name().to_string());
        }
        let mut mesh = Mesh {
            dim: 2,
            extent: [lx, ly],
            divisions: [nx, ny],
            nodes,
            elements,
            measures: Vec::new(),
            gradients: Vec::new(),
            boundary,
        };
        mesh.compute_geometry()?;
        Ok(mesh)
    }

    fn compute_geometry(&mut self) -> Result<()> {
        let mut measures = Vec::with_capacity(self.elements.len());
        let mut gradients = Vec::with_capacity(self.elements.len());
        for (e, cell) in self.elements.iter().enumerate() {
            if self.dim == 1 {
                let h = self.nodes[cell[1]][0] - self.nodes[cell[0]][0];
                if !(h > T::zero()) {
                    return Err(Error::Shape(format!("element {e} has non-positive length")));
                }
                measures.push(h);
                let g = T::one() / h;
                gradients.push([[-g, T::zero()], [g, T::zero()], [T::zero(), T::zero()]]);
            } else {
                let [a, b, c] = [
                    self.nodes[cell[0]],
                    self.nodes[cell[1]],
                    self.nodes[cell[2]],
                ];
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                let area = T::half() * det;
                if !(area > T::zero()) {
                    return Err(Error::Shape(format!("element {e} has non-positive area")));
                }
                measures.push(area);
                // grad N_i = rot90(opposite edge) / (2 area)
                let g = |p: [T; 2], q: [T; 2]| [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
                gradients.push([g(b, c), g(c, a), g(a, b)]);
            }
        }
        self.measures = measures;
        self.gradients = gradients;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per element (2 in 1D, 3 in 2D).
    pub fn nodes_per_element(&self) -> usize {
        self.dim + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Displacement degrees of freedom (`dim` per node).
    pub fn num_dofs(&self) -> usize {
        self.dim * self.nodes.len()
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> [T; 2] {
        self.nodes[i]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.dim + 1]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.elements.iter().map(move |c| &c[..self.dim + 1])
    }

    pub fn measure(&self, e: usize) -> T {
        self.measures[e]
    }

    pub fn measures(&self) -> &[T] {
        &self.measures
    }

    /// Constant gradients of the element's P1 basis functions.
    pub fn gradients(&self, e: usize) -> &[[T; 2]] {
        &self.gradients[e][..self.dim + 1]
    }

    pub fn extent(&self) -> [T; 2] {
        self.extent
    }

    pub fn divisions(&self) -> [usize; 2] {
        self.divisions
    }

    /// Total length (1D) or area (2D).
    pub fn domain_measure(&self) -> T {
        crate::scalar::pairwise_sum(&self.measures)
    }

    /// Grid spacing along the given side.
    pub fn side_spacing(&self, side: Side) -> T {
        match (self.dim, side) {
            (1, _) => self.extent[0] / T::from_usize(self.divisions[0]).unwrap(),
            (_, Side::Bottom | Side::Top) => {
                self.extent[0] / T::from_usize(self.divisions[0]).unwrap()
            }
            _ => self.extent[1] / T::from_usize(self.divisions[1]).unwrap(),
        }
    }

    /// Length of a side (zero for the end points of an interval).
    pub fn side_length(&self, side: Side) -> T {
        match (self.dim, side) {
            (1, _) => T::zero(),
            (_, Side::Bottom | Side::Top) => self.extent[0],
            _ => self.extent[1],
        }
    }

    pub fn sides(&self) -> &'static [Side] {
        if self.dim == 1 {
            &[Side::Left, Side::Right]
        } else {
            &[Side::Left, Side::Right, Side::Bottom, Side::Top]
        }
    }

    /// Coordinate of a node measured along a side.
    fn side_coordinate(&self, side: Side, node: usize) -> T {
        match (self.dim, side) {
            (1, _) => T::zero(),
            (_, Side::Bottom | Side::Top) => self.nodes[node][0],
            _ => self.nodes[node][1],
        }
    }

    /// Tag carried by `node` on `side`, if the node lies on that side.
    pub fn tag_on(&self, side: Side, node: usize) -> Option<&str> {
        self.boundary.get(&(side, node)).map(String::as_str)
    }

    /// All (side, node, tag) boundary entries in deterministic order.
    pub fn boundary_entries(&self) -> impl Iterator<Item = (Side, usize, &str)> + '_ {
        self.boundary.iter().map(|(&(s, n), t)| (s, n, t.as_str()))
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.boundary.values().any(|t| t == tag)
    }

    /// Sorted, de-duplicated list of nodes carrying `tag` on any side.
    pub fn nodes_with_tag(&self, tag: &str) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary
            .iter()
            .filter(|(_, t)| t.as_str() == tag)
            .map(|(&(_, n), _)| n)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Distinct tag names in sorted order.
    pub fn tags(&self) -> Vec<String> {
        let mut tags: Vec<String> = self.boundary.values().cloned().collect();
        tags.sort();
        tags.dedup();
        tags
    }

    /// Re-tags the boundary nodes of `side` whose side coordinate lies in
    /// `[a, b]`, with a half-spacing tolerance at both ends.
    pub fn tag_boundary_segment(&self, side: &str, interval: [T; 2], tag: &str) -> Result<Self> {
        let side_id = Side::parse(side)
            .filter(|s| self.sides().contains(s))
            .ok_or_else(|| Error::invalid("side", format!("unknown side `{side}`")))?;
        if tag.is_empty() || tag.contains(char::is_whitespace) {
            return Err(Error::invalid("tag", format!("invalid tag name `{tag}`")));
        }
        let [a, b] = interval;
        let length = self.side_length(side_id);
        let slack = T::lit(1e-12) * (T::one() + length);
        if !(a <= b) || a < -slack || b > length + slack {
            return Err(Error::invalid(
                "interval",
                format!("[{a}, {b}] is outside side `{side}` of extent [0, {length}]"),
            ));
        }
        let tol = if self.dim == 1 {
            T::zero()
        } else {
            T::half() * self.side_spacing(side_id) * (T::one() - T::lit(1e-9))
        };
        let selected: Vec<usize> = self
            .boundary
            .keys()
            .filter(|(s, _)| *s == side_id)
            .map(|&(_, n)| n)
            .filter(|&n| {
                let s = self.side_coordinate(side_id, n);
                s >= a - tol && s <= b + tol
            })
            .collect();
        let mut out = self.clone();
        for &n in &selected {
            let current = &self.boundary[&(side_id, n)];
            if current != side_id.name() && current != tag {
                return Err(Error::Conflict(format!(
                    "node {n} on side `{side}` already carries sub-tag `{current}`"
                )));
            }
            out.boundary.insert((side_id, n), tag.to_string());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interval_examples() {
        let m = Mesh::interval(1.0, 0.5).unwrap();
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.num_nodes(), 3);
        let xs: Vec<f64> = m.nodes().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert_eq!(m.tag_on(Side::Left, 0), Some("left"));
        assert_eq!(m.tag_on(Side::Right, 2), Some("right"));

        let m = Mesh::interval(10.0, 0.015).unwrap();
        assert_eq!(m.num_elements(), 667);
        assert_relative_eq!(m.measure(0), 10.0 / 667.0, max_relative = 1e-12);

        let m = Mesh::interval(10.0, 20.0).unwrap();
        assert_eq!(m.num_elements(), 1);
        assert_eq!(m.nodes(), &[[0.0, 0.0], [10.0, 0.0]]);
    }

    #[test]
    fn interval_rejects_bad_inputs() {
        assert!(matches!(
            Mesh::interval(0.0, 0.1),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            Mesh::interval(1.0, -0.1),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn rectangle_examples() {
        let m = Mesh::rectangle(1.0, 1.0, 0.5).unwrap();
        assert_eq!((m.num_elements(), m.num_nodes()), (8, 9));
        let m = Mesh::rectangle(2.0, 1.0, 0.5).unwrap();
        assert_eq!((m.num_elements(), m.num_nodes()), (16, 15));
        let m = Mesh::rectangle(1.0, 1.0, 0.017).unwrap();
        assert_relative_eq!(m.domain_measure(), 1.0, max_relative = 1e-12);
        assert!(Mesh::rectangle(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn gradients_sum_to_zero() {
        let m = Mesh::rectangle(2.0, 1.0, 0.3).unwrap();
        for e in 0..m.num_elements() {
            let g = m.gradients(e);
            let sx: f64 = g.iter().map(|v| v[0]).sum();
            let sy: f64 = g.iter().map(|v| v[1]).sum();
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        }
    }

    #[test]
    fn segment_tagging() {
        let m = Mesh::rectangle(1.0, 1.0, 0.25).unwrap();
        let t = m
            .tag_boundary_segment("bottom", [0.25, 0.75], "omega3")
            .unwrap();
        assert_eq!(t.nodes_with_tag("omega3").len(), 3);
        let t = m
            .tag_boundary_segment("left", [0.0, 1.0], "omega6")
            .unwrap();
        assert_eq!(t.nodes_with_tag("omega6").len(), 5);
        assert!(!t.has_tag("left"));
        assert!(m.tag_boundary_segment("bottom", [2.0, 3.0], "x").is_err());
        assert!(m.tag_boundary_segment("front", [0.0, 1.0], "x").is_err());
        let t = m.tag_boundary_segment("bottom", [0.0, 0.5], "a").unwrap();
        assert!(matches!(
            t.tag_boundary_segment("bottom", [0.5, 1.0], "b"),
            Err(Error::Conflict(_))
        ));
    }

    #[test]
    fn f32_mesh_builds() {
        let m = Mesh::<f32>::rectangle(1.0, 1.0, 0.25).unwrap();
        assert!((m.domain_measure() - 1.0).abs() < 1e-6);
    }
}
