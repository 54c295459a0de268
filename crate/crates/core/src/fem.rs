//! Bilinear/trilinear finite-element Poisson assembly on structured meshes.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::mesh::{build_mesh, local_nodes, Mesh, MeshSpec};
use crate::sparse::CsrMatrix;
use crate::strength::{scale_signed_classical, scale_symmetric_sa, soc_matrix, Scaling, SocKind};

const GAUSS: f64 = 0.577_350_269_189_625_8; // 1/√3

/// Element stiffness ∫∇φ_j·∇φ_i for an axis-aligned box with the given
/// widths, by 2-point Gauss quadrature per axis (exact for these
/// polynomials). Row-major, `2^d × 2^d`.
pub fn element_stiffness(h: &[f64]) -> Result<Vec<f64>> {
    let dim = h.len();
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidMesh(format!("element dimension {dim}")));
    }
    if let Some(bad) = h.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidMesh(format!("element width {bad} must be positive")));
    }
    let nodes = local_nodes(dim);
    let m = nodes.len();
    let sign = |k: usize, a: usize| if nodes[k][a] == 1 { 1.0 } else { -1.0 };
    let det_j: f64 = h.iter().map(|x| 0.5 * x).product();
    let mut k = vec![0.0; m * m];
    let mut grad = vec![[0.0f64; 3]; m];
    for q in 0..(1usize << dim) {
        let xi: Vec<f64> = (0..dim)
            .map(|a| if q >> a & 1 == 1 { GAUSS } else { -GAUSS })
            .collect();
        for (n, g) in grad.iter_mut().enumerate() {
            for a in 0..dim {
                let mut d = 0.5 * sign(n, a) * 2.0 / h[a];
                for b in (0..dim).filter(|&b| b != a) {
                    d *= 0.5 * (1.0 + sign(n, b) * xi[b]);
                }
                g[a] = d;
            }
        }
        for i in 0..m {
            for j in 0..m {
                let s: f64 = (0..dim).map(|a| grad[i][a] * grad[j][a]).sum();
                k[i * m + j] += s * det_j;
            }
        }
    }
    Ok(k)
}

pub fn element_stiffness_2d(hx: f64, hy: f64) -> Result<[[f64; 4]; 4]> {
    let k = element_stiffness(&[hx, hy])?;
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        row.copy_from_slice(&k[4 * i..4 * i + 4]);
    }
    Ok(out)
}

pub fn element_stiffness_3d(hx: f64, hy: f64, hz: f64) -> Result<[[f64; 8]; 8]> {
    let k = element_stiffness(&[hx, hy, hz])?;
    let mut out = [[0.0; 8]; 8];
    for (i, row) in out.iter_mut().enumerate() {
        row.copy_from_slice(&k[8 * i..8 * i + 8]);
    }
    Ok(out)
}

/// Multilinear manufactured solution Π(1 + x_a): 1+x+y+xy in 2D and
/// 1+x+y+z+xy+xz+yz+xyz in 3D.
pub fn manufactured_solution(p: &[f64; 3], dim: usize) -> f64 {
    p[..dim].iter().map(|x| 1.0 + x).product()
}

/// Poisson system with Dirichlet vertices eliminated.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub a: CsrMatrix,
    pub f: Vec<f64>,
    pub u0: Vec<f64>,
    /// Manufactured solution at the free dofs.
    pub exact: Vec<f64>,
    pub free_coords: Vec<[f64; 3]>,
    pub dof_of_vertex: Vec<Option<usize>>,
    pub vertex_of_dof: Vec<usize>,
    dim: usize,
    points: [usize; 3],
}

fn slot_of(offset: [i64; 3]) -> usize {
    ((offset[2] + 1) * 9 + (offset[1] + 1) * 3 + (offset[0] + 1)) as usize
}

/// Scatter-add the element matrices into the full vertex matrix, then
/// condense out the Dirichlet vertices. The right-hand side is the
/// consistent load of the manufactured solution, so that solution
/// satisfies the retained equations exactly.
pub fn assemble(mesh: &Mesh) -> Result<AssembledSystem> {
    let dim = mesh.dim();
    let points = mesh.points_per_axis();
    let nv = mesh.num_vertices();
    let nfree = mesh.dirichlet_mask().iter().filter(|&&d| !d).count();
    if nfree == 0 {
        return Err(Error::InvalidMesh("mesh has no free degrees of freedom".into()));
    }

    // full matrix stored as 27 neighbor slots per vertex
    let mut slots = vec![0.0f64; nv * 27];
    let mut present = vec![false; nv * 27];
    let mut cache: HashMap<[u64; 3], Vec<f64>> = HashMap::new();
    let m = mesh.nodes_per_element();
    for e in 0..mesh.num_elements() {
        let h = mesh.element_widths(e);
        let key = [h[0].to_bits(), h[1].to_bits(), h[2].to_bits()];
        if !cache.contains_key(&key) {
            cache.insert(key, element_stiffness(&h[..dim])?);
        }
        let ke = &cache[&key];
        let nodes = mesh.element(e);
        for (li, &vi) in nodes.iter().enumerate() {
            let pi = mesh.lattice_position(vi);
            for (lj, &vj) in nodes.iter().enumerate() {
                let pj = mesh.lattice_position(vj);
                let off = [
                    pj[0] as i64 - pi[0] as i64,
                    pj[1] as i64 - pi[1] as i64,
                    pj[2] as i64 - pi[2] as i64,
                ];
                let s = vi * 27 + slot_of(off);
                slots[s] += ke[li * m + lj];
                present[s] = true;
            }
        }
    }

    let mut dof_of_vertex = vec![None; nv];
    let mut vertex_of_dof = Vec::with_capacity(nfree);
    for v in 0..nv {
        if !mesh.is_dirichlet(v) {
            dof_of_vertex[v] = Some(vertex_of_dof.len());
            vertex_of_dof.push(v);
        }
    }
    let coords = mesh.coords();
    let u_star: Vec<f64> = coords.iter().map(|p| manufactured_solution(p, dim)).collect();

    let mut row_offsets = Vec::with_capacity(nfree + 1);
    row_offsets.push(0);
    let mut col_indices = Vec::with_capacity(nfree * 3usize.pow(dim as u32));
    let mut values = Vec::with_capacity(col_indices.capacity());
    let mut f = Vec::with_capacity(nfree);
    let stride = [1i64, points[0] as i64, (points[0] * points[1]) as i64];
    for &v in &vertex_of_dof {
        let base = v * 27;
        let mut load = 0.0;
        let mut eliminated = 0.0;
        for s in 0..27 {
            if !present[base + s] {
                continue;
            }
            let off = [(s % 3) as i64 - 1, ((s / 3) % 3) as i64 - 1, (s / 9) as i64 - 1];
            let w = (v as i64 + off[0] * stride[0] + off[1] * stride[1] + off[2] * stride[2]) as usize;
            let val = slots[base + s];
            load += val * u_star[w];
            match dof_of_vertex[w] {
                Some(c) => {
                    col_indices.push(c);
                    values.push(val);
                }
                None => eliminated += val * u_star[w],
            }
        }
        f.push(load - eliminated);
        row_offsets.push(col_indices.len());
    }
    let a = CsrMatrix::from_parts(nfree, nfree, row_offsets, col_indices, values);
    let exact = vertex_of_dof.iter().map(|&v| u_star[v]).collect();
    let free_coords = vertex_of_dof.iter().map(|&v| coords[v]).collect();
    Ok(AssembledSystem {
        a,
        f,
        u0: vec![0.0; nfree],
        exact,
        free_coords,
        dof_of_vertex,
        vertex_of_dof,
        dim,
        points,
    })
}

/// Build the mesh and assemble in one step.
pub fn assemble_spec(spec: &MeshSpec) -> Result<(Mesh, AssembledSystem)> {
    let mesh = build_mesh(spec)?;
    let sys = assemble(&mesh)?;
    Ok((mesh, sys))
}

impl AssembledSystem {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    /// Row of `m` (same pattern/dof numbering as `self.a`) at `vertex`,
    /// keyed by lattice offset. Fails unless every lattice neighbor of the
    /// vertex is a free dof.
    pub fn stencil_of(&self, m: &CsrMatrix, vertex: usize) -> Result<BTreeMap<[i32; 3], f64>> {
        let [nx, ny, _] = self.points;
        let pos = [vertex % nx, (vertex / nx) % ny, vertex / (nx * ny)];
        let row = self
            .dof_of_vertex
            .get(vertex)
            .copied()
            .flatten()
            .ok_or_else(|| Error::InvalidMesh(format!("vertex {vertex} is not a free dof")))?;
        for a in 0..self.dim {
            if pos[a] == 0 || pos[a] + 1 >= self.points[a] {
                return Err(Error::InvalidMesh(format!("vertex {vertex} lies on the boundary")));
            }
        }
        let (cols, vals) = m.row(row);
        let expected = 3usize.pow(self.dim as u32);
        if cols.len() != expected {
            return Err(Error::InvalidMesh(format!(
                "vertex {vertex} has {} neighbors, expected {expected}",
                cols.len()
            )));
        }
        let mut out = BTreeMap::new();
        for (&c, &v) in cols.iter().zip(vals) {
            let w = self.vertex_of_dof[c];
            let q = [w % nx, (w / nx) % ny, w / (nx * ny)];
            let off = [
                q[0] as i32 - pos[0] as i32,
                q[1] as i32 - pos[1] as i32,
                q[2] as i32 - pos[2] as i32,
            ];
            out.insert(off, v);
        }
        Ok(out)
    }

    pub fn interior_stencil(&self, vertex: usize) -> Result<BTreeMap<[i32; 3], f64>> {
        self.stencil_of(&self.a, vertex)
    }

    /// The vertex nearest the middle of the lattice.
    pub fn center_vertex(&self) -> usize {
        let [nx, ny, nz] = self.points;
        (nx / 2) + nx * ((ny / 2) + ny * (nz / 2))
    }
}

/// Stencil entry classes of a structured mesh, named by the axes along
/// which the neighbor is displaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum StencilClass {
    X,
    Y,
    Z,
    XY,
    XZ,
    YZ,
    XYZ,
}

impl StencilClass {
    pub fn of_offset(off: [i32; 3]) -> Option<Self> {
        match (off[0] != 0, off[1] != 0, off[2] != 0) {
            (true, false, false) => Some(Self::X),
            (false, true, false) => Some(Self::Y),
            (false, false, true) => Some(Self::Z),
            (true, true, false) => Some(Self::XY),
            (true, false, true) => Some(Self::XZ),
            (false, true, true) => Some(Self::YZ),
            (true, true, true) => Some(Self::XYZ),
            (false, false, false) => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::X => "x",
            Self::Y => "y",
            Self::Z => "z",
            Self::XY => "xy",
            Self::XZ => "xz",
            Self::YZ => "yz",
            Self::XYZ => "xyz",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CriterionPoint {
    pub alpha: f64,
    pub class: StencilClass,
    pub value: f64,
}

/// Scaled strength values of each stencil class at an interior vertex of a
/// uniaxially stretched mesh (last axis stretched by α), one entry per
/// class per α.
pub fn criterion_curves(
    dim: usize,
    soc: SocKind,
    scaling: Scaling,
    alphas: &[f64],
) -> Result<Vec<CriterionPoint>> {
    let mut out = Vec::new();
    for &alpha in alphas {
        let spec = MeshSpec::uniaxial(dim, 4, 1.0, alpha)?;
        let (_, sys) = assemble_spec(&spec)?;
        let s = soc_matrix(&sys.a, Some(&sys.free_coords), soc)?;
        let v = match scaling {
            Scaling::SymmetricSa => scale_symmetric_sa(&s)?,
            Scaling::SignedClassical => scale_signed_classical(&s),
        };
        let stencil = sys.stencil_of(&v.as_matrix(), sys.center_vertex())?;
        let mut per_class: BTreeMap<StencilClass, f64> = BTreeMap::new();
        for (off, val) in stencil {
            if let Some(c) = StencilClass::of_offset(off) {
                // the class is symmetric; keep the all-positive representative
                if off.iter().all(|&o| o >= 0) {
                    per_class.insert(c, val);
                }
            }
        }
        out.extend(per_class.into_iter().map(|(class, value)| CriterionPoint { alpha, class, value }));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundaryCondition;
    use crate::sparse::dense_lu_solve;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn element_2d_isotropic() {
        let k = element_stiffness_2d(1.0, 1.0).unwrap();
        assert!(rel(k[0][0], 2.0 / 3.0) < 1e-14);
        assert!(rel(k[0][1], -1.0 / 6.0) < 1e-14);
        assert!(rel(k[0][2], -1.0 / 3.0) < 1e-14);
        assert!(rel(k[0][3], -1.0 / 6.0) < 1e-14);
        let k = element_stiffness_2d(1.0, 2.0).unwrap();
        assert!(rel(k[0][0], 10.0 / 12.0) < 1e-14);
    }

    #[test]
    fn element_3d_isotropic() {
        let k = element_stiffness_3d(1.0, 1.0, 1.0).unwrap();
        assert!(rel(k[0][0], 1.0 / 3.0) < 1e-14);
        assert!(k[0][1].abs() < 1e-15 && k[0][4].abs() < 1e-15);
        assert!(rel(k[0][2], -1.0 / 12.0) < 1e-14);
        assert!(rel(k[0][6], -1.0 / 12.0) < 1e-14);
    }

    #[test]
    fn element_rejects_bad_widths() {
        assert!(element_stiffness_2d(0.0, 1.0).is_err());
        assert!(element_stiffness_3d(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn dirichlet_box_single_unknown() {
        let spec = MeshSpec::uniform(2, 2, 0.5)
            .unwrap()
            .with_all_faces(BoundaryCondition::Dirichlet);
        let (_, sys) = assemble_spec(&spec).unwrap();
        assert_eq!(sys.a.nrows(), 1);
        let x = dense_lu_solve(&sys.a, &sys.f).unwrap();
        assert!((x[0] - 2.25).abs() < 1e-12);
    }

    #[test]
    fn interior_rows_sum_to_zero() {
        let (mesh, sys) = assemble_spec(&MeshSpec::uniaxial(3, 4, 0.3, 7.0).unwrap()).unwrap();
        let st = sys.interior_stencil(mesh.vertex_index([2, 2, 2])).unwrap();
        let s: f64 = st.values().sum();
        assert!(s.abs() < 1e-13 * st[&[0, 0, 0]]);
    }

    #[test]
    fn boundary_vertex_has_no_stencil() {
        let (_, sys) = assemble_spec(&MeshSpec::uniform(2, 4, 1.0).unwrap()).unwrap();
        assert!(sys.interior_stencil(0).is_err());
    }

    #[test]
    fn manufactured_solution_is_reproduced() {
        let spec = MeshSpec::new(
            vec![vec![0.1, 0.3, 0.2, 0.7], vec![1.0, 0.25, 0.5]],
            vec![[BoundaryCondition::Dirichlet, BoundaryCondition::Neumann]; 2],
        )
        .unwrap();
        let (_, sys) = assemble_spec(&spec).unwrap();
        let x = dense_lu_solve(&sys.a, &sys.f).unwrap();
        for (u, e) in x.iter().zip(&sys.exact) {
            assert!((u - e).abs() < 1e-10);
        }
        assert!(sys.a.is_symmetric(1e-12));
    }
}
