//! Structured tensor-product meshes with per-axis cell widths.
//!
//! Vertices are numbered lexicographically with x fastest. Elements are
//! axis-aligned boxes whose local nodes run counter-clockwise on the
//! low-z face and then on the high-z face, starting at the reference
//! corner (-1,-1,-1).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Per-axis cell widths plus a boundary condition on each of the two faces
/// normal to that axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSpec {
    pub widths: Vec<Vec<f64>>,
    pub faces: Vec<[BoundaryCondition; 2]>,
}

impl MeshSpec {
    pub fn new(widths: Vec<Vec<f64>>, faces: Vec<[BoundaryCondition; 2]>) -> Result<Self> {
        let spec = MeshSpec { widths, faces };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.widths.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidMesh(format!("dimension {dim} not in 1..=3")));
        }
        if self.faces.len() != dim {
            return Err(Error::InvalidMesh(format!(
                "{} boundary pairs for a {dim}D mesh",
                self.faces.len()
            )));
        }
        for (a, w) in self.widths.iter().enumerate() {
            if w.len() < 2 {
                return Err(Error::InvalidMesh(format!("axis {a} has fewer than 2 cells")));
            }
            if let Some(bad) = w.iter().find(|&&h| !(h > 0.0) || !h.is_finite()) {
                return Err(Error::InvalidMesh(format!("axis {a} has cell width {bad}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.widths.len()
    }

    /// `cells` cells of width `h` per axis, every face Neumann.
    pub fn uniform(dim: usize, cells: usize, h: f64) -> Result<Self> {
        Self::new(
            vec![vec![h; cells]; dim],
            vec![[BoundaryCondition::Neumann; 2]; dim],
        )
    }

    /// Uniform mesh whose last axis is stretched: spacing `h` on the first
    /// `dim - 1` axes and `alpha * h` on the last one.
    pub fn uniaxial(dim: usize, cells: usize, h: f64, alpha: f64) -> Result<Self> {
        let mut widths = vec![vec![h; cells]; dim];
        widths[dim - 1] = vec![alpha * h; cells];
        Self::new(widths, vec![[BoundaryCondition::Neumann; 2]; dim])
    }

    pub fn with_face(mut self, axis: usize, side: usize, bc: BoundaryCondition) -> Self {
        self.faces[axis][side] = bc;
        self
    }

    pub fn with_all_faces(mut self, bc: BoundaryCondition) -> Self {
        self.faces.iter_mut().for_each(|f| *f = [bc; 2]);
        self
    }

    /// 2D graded tensor mesh: three blocks per axis, Dirichlet on y = 0.
    pub fn tensor_2d(gamma1: f64, gamma2: f64) -> Result<Self> {
        let spec = MeshSpec {
            widths: vec![tensor_axis(gamma1)?, tensor_axis(gamma2)?],
            faces: vec![[BoundaryCondition::Neumann; 2]; 2],
        }
        .with_face(1, 0, BoundaryCondition::Dirichlet);
        spec.validate()?;
        Ok(spec)
    }

    /// 3D graded tensor mesh: the 2D layout extruded through 80 uniform
    /// z-cells of width 0.1, Dirichlet on y = 0.
    pub fn tensor_3d(gamma1: f64, gamma2: f64) -> Result<Self> {
        let spec = MeshSpec {
            widths: vec![tensor_axis(gamma1)?, tensor_axis(gamma2)?, vec![0.1; 80]],
            faces: vec![[BoundaryCondition::Neumann; 2]; 3],
        }
        .with_face(1, 0, BoundaryCondition::Dirichlet);
        spec.validate()?;
        Ok(spec)
    }

    /// Cube of `cells` cells per axis with x/y spacing `1/cells` and z
    /// spacing `alpha/cells`; Neumann on the two x faces, Dirichlet on the
    /// other four.
    pub fn z_stretched_box(cells: usize, alpha: f64) -> Result<Self> {
        let h = 1.0 / cells as f64;
        Ok(Self::uniaxial(3, cells, h, alpha)?
            .with_all_faces(BoundaryCondition::Dirichlet)
            .with_face(0, 0, BoundaryCondition::Neumann)
            .with_face(0, 1, BoundaryCondition::Neumann))
    }
}

/// Widths of a block of the given length whose cells grow geometrically from
/// about `first` to exactly `last`.
///
/// The cell count is the smallest `n` for which the progression running
/// exactly from `first` to `last` in `n` cells covers the block. The ratio
/// is then re-fitted with the last width pinned so the widths sum to
/// `length`; the first cell absorbs the difference.
pub fn graded_block(length: f64, first: f64, last: f64) -> Result<Vec<f64>> {
    if !(length > 0.0 && first > 0.0 && last > 0.0) {
        return Err(Error::InvalidMesh(format!(
            "graded block needs positive sizes (length {length}, first {first}, last {last})"
        )));
    }
    if first >= length || last >= length {
        return Err(Error::InvalidMesh(format!(
            "degenerate grading: cell size exceeds block length {length}"
        )));
    }
    let rel = ((first - last) / first.max(last)).abs();
    if rel < 1e-12 {
        let n = (length / first).round().max(1.0) as usize;
        return Ok(vec![length / n as f64; n]);
    }

    let end_to_end_sum = |n: usize| -> f64 {
        if n == 1 {
            return last;
        }
        let q = (last / first).powf(1.0 / (n - 1) as f64);
        (0..n).map(|k| first * q.powi(k as i32)).sum()
    };
    let mut n = 2usize;
    while end_to_end_sum(n) < length {
        n += 1;
    }

    // widths last * r^-(n-1-k); find r with Σ = length by bisection
    let sum_back = |r: f64| -> f64 { (0..n).map(|k| last * r.powi(-(k as i32))).sum() };
    let (mut lo, mut hi) = (0.5f64.min(first / last), 2.0f64.max(last / first));
    while sum_back(lo) < length {
        lo *= 0.5;
    }
    while sum_back(hi) > length {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum_back(mid) > length {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let mut w: Vec<f64> = (0..n).map(|k| last * r.powi(k as i32 - (n as i32 - 1))).collect();
    w[n - 1] = last;
    let rest: f64 = w[1..].iter().sum();
    w[0] = length - rest;
    Ok(w)
}

/// One axis of the graded tensor meshes: a unit block of 10 cells, a graded
/// block of length 3(γ+1) from 0.1 to γ/10, and a block of length γ in 10
/// cells.
pub fn tensor_axis(gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidMesh(format!("stretch factor {gamma} must be positive")));
    }
    let mut w = vec![0.1; 10];
    w.extend(graded_block(3.0 * (gamma + 1.0), 0.1, gamma / 10.0)?);
    w.extend(std::iter::repeat(gamma / 10.0).take(10));
    Ok(w)
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    /// Points per axis; unused axes hold 1.
    points: [usize; 3],
    axis_coords: Vec<Vec<f64>>,
    coords: Vec<[f64; 3]>,
    elements: Vec<usize>,
    dirichlet: Vec<bool>,
}

/// Reference-corner sign pattern of each local element node.
pub(crate) const LOCAL_NODES_3D: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

pub(crate) fn local_nodes(dim: usize) -> &'static [[usize; 3]] {
    match dim {
        1 => &LOCAL_NODES_3D[..2],
        2 => &LOCAL_NODES_3D[..4],
        _ => &LOCAL_NODES_3D[..],
    }
}

pub fn build_mesh(spec: &MeshSpec) -> Result<Mesh> {
    spec.validate()?;
    let dim = spec.dim();
    let mut points = [1usize; 3];
    let mut axis_coords = Vec::with_capacity(dim);
    for (a, w) in spec.widths.iter().enumerate() {
        points[a] = w.len() + 1;
        let mut c = Vec::with_capacity(w.len() + 1);
        let mut x = 0.0;
        c.push(x);
        for &h in w {
            x += h;
            c.push(x);
        }
        axis_coords.push(c);
    }
    let [nx, ny, nz] = points;
    let nv = nx * ny * nz;
    let mut coords = Vec::with_capacity(nv);
    let mut dirichlet = vec![false; nv];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let idx = [i, j, k];
                let mut p = [0.0; 3];
                let mut fixed = false;
                for a in 0..dim {
                    p[a] = axis_coords[a][idx[a]];
                    if (idx[a] == 0 && spec.faces[a][0] == BoundaryCondition::Dirichlet)
                        || (idx[a] == points[a] - 1 && spec.faces[a][1] == BoundaryCondition::Dirichlet)
                    {
                        fixed = true;
                    }
                }
                dirichlet[coords.len()] = fixed;
                coords.push(p);
            }
        }
    }

    let cells = [nx - 1, (ny - 1).max(1), (nz - 1).max(1)];
    let local = local_nodes(dim);
    let mut elements = Vec::with_capacity(cells.iter().product::<usize>() * local.len());
    for k in 0..cells[2] {
        for j in 0..cells[1] {
            for i in 0..cells[0] {
                for l in local {
                    elements.push((i + l[0]) + nx * ((j + l[1]) + ny * (k + l[2])));
                }
            }
        }
    }
    Ok(Mesh {
        dim,
        points,
        axis_coords,
        coords,
        elements,
        dirichlet,
    })
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> [usize; 3] {
        self.points
    }

    pub fn axis_coords(&self, axis: usize) -> &[f64] {
        &self.axis_coords[axis]
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        1 << self.dim
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len() / self.nodes_per_element()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let m = self.nodes_per_element();
        &self.elements[e * m..(e + 1) * m]
    }

    pub fn is_dirichlet(&self, v: usize) -> bool {
        self.dirichlet[v]
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn vertex_index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.points[0] * (ijk[1] + self.points[1] * ijk[2])
    }

    pub fn lattice_position(&self, v: usize) -> [usize; 3] {
        let [nx, ny, _] = self.points;
        [v % nx, (v / nx) % ny, v / (nx * ny)]
    }

    /// Cell widths of element `e` along each axis (1.0 on unused axes).
    pub fn element_widths(&self, e: usize) -> [f64; 3] {
        let base = self.lattice_position(self.element(e)[0]);
        let mut h = [1.0; 3];
        for a in 0..self.dim {
            h[a] = self.axis_coords[a][base[a] + 1] - self.axis_coords[a][base[a]];
        }
        h
    }

    /// One `x y z` line per vertex.
    pub fn write_coordinates<W: Write>(&self, mut w: W) -> Result<()> {
        write_coordinates(&self.coords, &mut w)
    }
}

pub fn write_coordinates<W: Write>(coords: &[[f64; 3]], w: &mut W) -> Result<()> {
    let mut s = String::with_capacity(coords.len() * 64);
    for p in coords {
        s.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", p[0], p[1], p[2]));
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_vertices() {
        let spec = MeshSpec::new(
            vec![vec![1.0; 3]],
            vec![[BoundaryCondition::Neumann; 2]],
        )
        .unwrap();
        let m = build_mesh(&spec).unwrap();
        assert_eq!(m.axis_coords(0), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(m.num_elements(), 3);
    }

    #[test]
    fn ratio_one_grading_is_uniform() {
        let w = graded_block(6.0, 0.1, 0.1).unwrap();
        assert_eq!(w.len(), 60);
        assert!(w.iter().all(|&h| (h - 0.1).abs() < 1e-14));
        let w = tensor_axis(1.0).unwrap();
        assert_eq!(w.len(), 80);
    }

    #[test]
    fn strongly_graded_block() {
        let w = graded_block(3.0 * 201.0, 0.1, 20.0).unwrap();
        assert_eq!(*w.last().unwrap(), 20.0);
        assert!(w.windows(2).all(|p| p[1] > p[0]), "widths must increase");
        let total: f64 = w.iter().sum();
        assert!((total - 603.0).abs() < 1e-9);
        assert!(w[0] > 0.0 && w[0] <= 0.1 + 1e-12);
    }

    #[test]
    fn shrinking_block_for_small_gamma() {
        let w = graded_block(3.0 * 1.5, 0.1, 0.05).unwrap();
        assert_eq!(*w.last().unwrap(), 0.05);
        assert!(w.windows(2).all(|p| p[1] <= p[0]));
        assert!((w.iter().sum::<f64>() - 4.5).abs() < 1e-10);
    }

    #[test]
    fn degenerate_grading_rejected() {
        assert!(graded_block(0.05, 0.1, 0.2).is_err());
        assert!(MeshSpec::uniform(2, 1, 1.0).is_err());
        assert!(MeshSpec::uniaxial(2, 4, 1.0, -1.0).is_err());
    }

    #[test]
    fn element_ordering_and_dirichlet_faces() {
        let spec = MeshSpec::uniform(3, 2, 1.0)
            .unwrap()
            .with_face(2, 0, BoundaryCondition::Dirichlet);
        let m = build_mesh(&spec).unwrap();
        assert_eq!(m.num_vertices(), 27);
        assert_eq!(m.num_elements(), 8);
        // first element: CCW on z=0 face then z=1 face
        assert_eq!(m.element(0), &[0, 1, 4, 3, 9, 10, 13, 12]);
        assert!((0..9).all(|v| m.is_dirichlet(v)));
        assert!((9..27).all(|v| !m.is_dirichlet(v)));
        assert_eq!(m.lattice_position(14), [2, 1, 1]);
    }

    #[test]
    fn coordinates_monotone_and_exported() {
        let m = build_mesh(&MeshSpec::tensor_2d(4.5459, 1.2877).unwrap()).unwrap();
        for a in 0..2 {
            assert!(m.axis_coords(a).windows(2).all(|p| p[1] > p[0]));
        }
        let mut buf = Vec::new();
        m.write_coordinates(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), m.num_vertices());
        assert_eq!(text.lines().next().unwrap().split_whitespace().count(), 3);
    }
}
