use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{compensated_sum, GridDomain, GridShape, VectorField};
use crate::linalg::{nested_dissection, SparseLdl, TripletBuilder};

const NONE: u32 = u32::MAX;

/// How the saddle system of a region is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalMethod {
    /// Sparse `LDLᵀ` of the regularized KKT matrix plus iterative refinement.
    Direct,
    /// Preconditioned conjugate gradients on the multiplier (Schur complement)
    /// with a sparse Cholesky factor of the velocity block.
    Uzawa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Regions with at most this many cells use [`LocalMethod::Direct`].
    pub direct_max_cells: usize,
    /// Relative constraint residual targeted by either method.
    pub tolerance: f64,
    /// Regularization of the multiplier block in the direct method.
    pub regularization: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { direct_max_cells: 64 * 64, tolerance: 1e-12, regularization: 1e-7, max_iterations: 2000 }
    }
}

impl SolverOptions {
    /// Direct factorization regardless of region size.
    pub fn direct() -> Self {
        Self { direct_max_cells: usize::MAX, ..Self::default() }
    }

    pub fn uzawa() -> Self {
        Self { direct_max_cells: 0, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
struct Face {
    comp: u8,
    pos: usize,
}

#[derive(Debug, Clone)]
enum Factor {
    Direct(SparseLdl),
    Uzawa { a: SparseLdl, inv_diag: Vec<f64> },
}

/// Minimum-energy zero-trace solver of `div v = g` on a connected set of
/// cells: minimize `½ Σ |Dv|² h²` over face fluxes interior to the set
/// subject to the discrete divergence constraint in every cell.
#[derive(Debug, Clone)]
pub struct RegionSystem {
    shape: GridShape,
    cells: Vec<usize>,
    faces: Vec<Face>,
    /// Per cell: up to four `(face, sign)` entries of the divergence row.
    rows: Vec<[(u32, f64); 4]>,
    /// Per face: same-component neighbours to the right and above.
    face_links: Vec<[u32; 2]>,
    factor: Factor,
    opts: SolverOptions,
}

/// Face fluxes produced by a region solve.
#[derive(Debug, Clone)]
pub struct LocalSolution {
    pub method: LocalMethod,
    pub iterations: usize,
    /// `‖B v − h g‖ / ‖h g‖` on the region.
    pub residual: f64,
    faces: Vec<(u8, usize)>,
    pub values: Vec<f64>,
}

impl LocalSolution {
    /// Adds `a · v` into a full-array field.
    pub fn scatter_into(&self, a: f64, v: &mut VectorField) {
        for (&(comp, pos), &x) in self.faces.iter().zip(&self.values) {
            if comp == 0 {
                v.v1[pos] += a * x;
            } else {
                v.v2[pos] += a * x;
            }
        }
    }

    pub fn faces(&self) -> impl Iterator<Item = (u8, usize, f64)> + '_ {
        self.faces.iter().zip(&self.values).map(|(&(c, p), &x)| (c, p, x))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }
}

impl RegionSystem {
    /// `cells` must be sorted, inside `dom`, and 4-connected.
    pub fn new(dom: &GridDomain, cells: &[usize], opts: SolverOptions) -> Result<Self> {
        let shape = *dom.shape();
        if cells.is_empty() {
            return Err(Error::InvalidParameter("empty region".into()));
        }
        let (mut i0, mut j0, mut i1, mut j1) = (usize::MAX, usize::MAX, 0, 0);
        for &k in cells {
            if !dom.contains(k) {
                return Err(Error::InvalidParameter(format!("region cell {k} is outside the domain")));
            }
            let (i, j) = shape.coords(k);
            i0 = i0.min(i);
            j0 = j0.min(j);
            i1 = i1.max(i + 1);
            j1 = j1.max(j + 1);
        }
        let bw = i1 - i0;
        let bh = j1 - j0;
        let local = |k: usize| {
            let (i, j) = shape.coords(k);
            (j - j0) * bw + (i - i0)
        };
        let mut cell_id = vec![NONE; bw * bh];
        for (c, &k) in cells.iter().enumerate() {
            cell_id[local(k)] = c as u32;
        }
        let in_region = |i: usize, j: usize| i < i1 && j < j1 && cell_id[(j - j0) * bw + (i - i0)] != NONE;

        let mut faces = Vec::new();
        let mut face_id = [vec![NONE; bw * bh], vec![NONE; bw * bh]];
        for &k in cells {
            let (i, j) = shape.coords(k);
            if in_region(i + 1, j) {
                face_id[0][local(k)] = faces.len() as u32;
                faces.push(Face { comp: 0, pos: k });
            }
            if in_region(i, j + 1) {
                face_id[1][local(k)] = faces.len() as u32;
                faces.push(Face { comp: 1, pos: k });
            }
        }
        let fid = |comp: usize, i: isize, j: isize| -> u32 {
            if i < i0 as isize || j < j0 as isize || i >= i1 as isize || j >= j1 as isize {
                NONE
            } else {
                face_id[comp][(j as usize - j0) * bw + (i as usize - i0)]
            }
        };

        let mut rows = Vec::with_capacity(cells.len());
        for &k in cells {
            let (i, j) = shape.coords(k);
            let (i, j) = (i as isize, j as isize);
            let mut row = [(NONE, 0.0); 4];
            row[0] = (fid(0, i, j), 1.0);
            row[1] = (fid(0, i - 1, j), -1.0);
            row[2] = (fid(1, i, j), 1.0);
            row[3] = (fid(1, i, j - 1), -1.0);
            rows.push(row);
        }
        let face_links: Vec<[u32; 2]> = faces
            .iter()
            .map(|f| {
                let (i, j) = shape.coords(f.pos);
                let (i, j) = (i as isize, j as isize);
                [fid(f.comp as usize, i + 1, j), fid(f.comp as usize, i, j + 1)]
            })
            .collect();

        let nf = faces.len();
        let nc = cells.len();
        let face_coord = |f: &Face| {
            let (i, j) = shape.coords(f.pos);
            if f.comp == 0 {
                [2 * i as i32 + 1, 2 * j as i32]
            } else {
                [2 * i as i32, 2 * j as i32 + 1]
            }
        };
        let use_direct = nc <= opts.direct_max_cells;
        let factor = if use_direct {
            let mut kkt = TripletBuilder::with_capacity(nf + nc, 3 * nf + 5 * nc);
            add_velocity_block(&mut kkt, &face_links);
            for (c, row) in rows.iter().enumerate() {
                for &(f, s) in row {
                    if f != NONE {
                        kkt.add(nf + c, f as usize, s);
                    }
                }
                kkt.add(nf + c, nf + c, -opts.regularization);
            }
            let mut coords: Vec<[i32; 2]> = faces.iter().map(face_coord).collect();
            coords.extend(cells.iter().map(|&k| {
                let (i, j) = shape.coords(k);
                [2 * i as i32, 2 * j as i32]
            }));
            Factor::Direct(SparseLdl::factor(&kkt, Some(nested_dissection(&coords, 2)))?)
        } else {
            let mut a = TripletBuilder::with_capacity(nf, 3 * nf);
            add_velocity_block(&mut a, &face_links);
            let coords: Vec<[i32; 2]> = faces.iter().map(face_coord).collect();
            let a = SparseLdl::factor_positive(&a, Some(nested_dissection(&coords, 2)))?;
            // diagonal of B diag(A)⁻¹ Bᵀ
            let inv_diag = rows
                .iter()
                .map(|row| {
                    let m = row.iter().filter(|e| e.0 != NONE).count();
                    if m == 0 {
                        0.0
                    } else {
                        4.0 / m as f64
                    }
                })
                .collect();
            Factor::Uzawa { a, inv_diag }
        };
        Ok(Self { shape, cells: cells.to_vec(), faces, rows, face_links, factor, opts })
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn method(&self) -> LocalMethod {
        match self.factor {
            Factor::Direct(_) => LocalMethod::Direct,
            Factor::Uzawa { .. } => LocalMethod::Uzawa,
        }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    /// Solves with right-hand side `g` given per region cell (same order as
    /// [`cells`](Self::cells)). `g` must have zero sum up to `1e-10 Σ|g|`; the
    /// remaining rounding-level mean is projected out before solving.
    pub fn solve(&self, g: &[f64]) -> Result<LocalSolution> {
        let nc = self.cells.len();
        if g.len() != nc {
            return Err(Error::GridMismatch);
        }
        let total = compensated_sum(g.iter().copied());
        let abs = compensated_sum(g.iter().map(|x| x.abs()));
        if total.abs() > 1e-10 * abs {
            return Err(Error::MeanNotZero { mean: total / nc as f64, tolerance: 1e-10 * abs / nc as f64 });
        }
        let h = self.shape.h;
        let mean = total / nc as f64;
        let c: Vec<f64> = g.iter().map(|&x| (x - mean) * h).collect();
        let c_norm = norm2(&c);
        let faces = self.faces.iter().map(|f| (f.comp, f.pos)).collect();
        if c_norm == 0.0 || self.faces.is_empty() {
            return Ok(LocalSolution {
                method: self.method(),
                iterations: 0,
                residual: 0.0,
                faces,
                values: vec![0.0; self.faces.len()],
            });
        }
        let (values, iterations) = match &self.factor {
            Factor::Direct(ldl) => self.solve_direct(ldl, &c, c_norm),
            Factor::Uzawa { a, inv_diag } => self.solve_uzawa(a, inv_diag, &c, c_norm)?,
        };
        let bv = self.apply_b(&values);
        let residual = norm2(&bv.iter().zip(&c).map(|(a, b)| a - b).collect::<Vec<_>>()) / c_norm;
        Ok(LocalSolution { method: self.method(), iterations, residual, faces, values })
    }

    fn solve_direct(&self, ldl: &SparseLdl, c: &[f64], c_norm: f64) -> (Vec<f64>, usize) {
        let nf = self.faces.len();
        let mut rhs = vec![0.0; nf];
        rhs.extend_from_slice(c);
        let mut x = ldl.solve(&rhs);
        let mut steps = 1;
        for _ in 0..self.opts.max_iterations.min(50) {
            // residual of the unregularized system
            let (v, lam) = x.split_at(nf);
            let mut r = self.apply_a(v);
            let btl = self.apply_bt(lam);
            for f in 0..nf {
                r[f] = -(r[f] + btl[f]);
            }
            let bv = self.apply_b(v);
            let mut rc: Vec<f64> = c.iter().zip(&bv).map(|(a, b)| a - b).collect();
            let rv_norm = norm2(&r[..nf]);
            let rc_norm = norm2(&rc);
            if rc_norm <= self.opts.tolerance * c_norm && rv_norm <= self.opts.tolerance * c_norm {
                break;
            }
            r.append(&mut rc);
            let dx = ldl.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            steps += 1;
        }
        x.truncate(nf);
        (x, steps)
    }

    fn solve_uzawa(&self, a: &SparseLdl, inv_diag: &[f64], c: &[f64], c_norm: f64) -> Result<(Vec<f64>, usize)> {
        let nc = self.cells.len();
        let schur = |p: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let w = a.solve(&self.apply_bt(p));
            (self.apply_b(&w), w)
        };
        let precond = |r: &[f64]| -> Vec<f64> {
            let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, b)| a * b).collect();
            let m = compensated_sum(z.iter().copied()) / nc as f64;
            z.iter_mut().for_each(|x| *x -= m);
            z
        };
        let mut lam = vec![0.0; nc];
        let mut v = vec![0.0; self.faces.len()];
        let mut r = c.to_vec();
        let mut z = precond(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut it = 0;
        while it < self.opts.max_iterations {
            it += 1;
            let (sp, w) = schur(&p);
            let alpha = rz / dot(&p, &sp);
            for i in 0..nc {
                lam[i] += alpha * p[i];
                r[i] -= alpha * sp[i];
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi += alpha * wi;
            }
            if norm2(&r) <= self.opts.tolerance * c_norm {
                // confirm against the true residual
                let bv = self.apply_b(&v);
                let true_r: Vec<f64> = c.iter().zip(&bv).map(|(a, b)| a - b).collect();
                if norm2(&true_r) <= self.opts.tolerance * c_norm {
                    return Ok((v, it));
                }
                r = true_r;
            }
            z = precond(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..nc {
                p[i] = z[i] + beta * p[i];
            }
        }
        let bv = self.apply_b(&v);
        let res = norm2(&c.iter().zip(&bv).map(|(a, b)| a - b).collect::<Vec<_>>()) / c_norm;
        if res <= 1e-8 {
            log::warn!("uzawa stopped at relative residual {res:e} after {it} iterations");
            return Ok((v, it));
        }
        Err(Error::NonConvergence { iterations: it, residual: res })
    }

    fn apply_a(&self, v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().map(|x| 4.0 * x).collect();
        for (f, links) in self.face_links.iter().enumerate() {
            for &g in links {
                if g != NONE {
                    out[f] -= v[g as usize];
                    out[g as usize] -= v[f];
                }
            }
        }
        out
    }

    fn apply_b(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().filter(|e| e.0 != NONE).map(|&(f, s)| s * v[f as usize]).sum())
            .collect()
    }

    fn apply_bt(&self, lam: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.faces.len()];
        for (row, &l) in self.rows.iter().zip(lam) {
            for &(f, s) in row {
                if f != NONE {
                    out[f as usize] += s * l;
                }
            }
        }
        out
    }

    /// `½ Σ |Dv|² h²` of the zero-extended face field.
    pub fn energy(&self, values: &[f64]) -> f64 {
        0.5 * dot(values, &self.apply_a(values))
    }
}

fn add_velocity_block(b: &mut TripletBuilder, links: &[[u32; 2]]) {
    for (f, l) in links.iter().enumerate() {
        b.add(f, f, 4.0);
        for &g in l {
            if g != NONE {
                b.add(g as usize, f, -1.0);
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
