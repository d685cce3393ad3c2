use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::norms::{div_norms, residual, DivNorms};
use super::region::{LocalMethod, LocalSolution, RegionSystem, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{
    compensated_sum, jacobian_magnitude, BoundaryCondition, DistanceField, GridDomain, GridShape, NeumaierSum,
    ScalarField, VectorField,
};
use crate::whitney::{decompose_rhs, WhitneyTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    WhitneyConstructive,
    GlobalBaseline,
}

/// The two estimate blocks of the constructive proof, evaluated per cube:
/// `D_j = ∫|D S_j T_j f|^q`, `U_j = ℓ_j^{-q} ∫|S_j T_j f|^q`, `F_j = ∫|T_j f|^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateChains {
    pub q: f64,
    /// `∫_Ω |Dv|^q`
    pub grad_total: f64,
    /// `∫_Ω |v|^q / ρ^q`
    pub weighted_total: f64,
    pub sum_grad: f64,
    pub sum_weighted: f64,
    pub sum_pieces: f64,
    /// `∫_Ω |f|^q`
    pub f_total: f64,
    pub max_local_grad_ratio: f64,
    pub max_local_weighted_ratio: f64,
    pub overlap: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivSolution {
    pub method: Method,
    #[serde(skip)]
    pub v: VectorField,
    /// `‖div v − f‖₂ / ‖f‖₂`
    pub residual: f64,
    /// `½ ∫ |Dv|²`
    pub energy: f64,
    pub norms: DivNorms,
    /// Worst relative constraint residual among the local solves.
    pub max_local_residual: f64,
    pub max_iterations: usize,
    pub chains: Option<EstimateChains>,
    /// Norms for `p ≠ 2` are evaluated on the `p = 2` energy minimizer.
    pub p2_minimizer: bool,
}

fn energy_of(v: &VectorField) -> f64 {
    let h2 = v.shape.h * v.shape.h;
    0.5 * compensated_sum(jacobian_magnitude(v).into_iter().map(|x| x * x)) * h2
}

/// Minimum-energy zero-trace solution on one connected cell set; `g` is read
/// on `cells` only.
pub fn local_solve(
    dom: &GridDomain,
    cells: &[usize],
    g: &ScalarField,
    opts: SolverOptions,
) -> Result<(VectorField, LocalSolution)> {
    g.check_grid(dom.shape())?;
    let sys = RegionSystem::new(dom, cells, opts)?;
    let vals: Vec<f64> = cells.iter().map(|&k| g.values[k]).collect();
    let sol = sys.solve(&vals)?;
    let mut v = VectorField::zeros(*dom.shape());
    sol.scatter_into(1.0, &mut v);
    v.bc = BoundaryCondition::ZeroTrace;
    Ok((v, sol))
}

/// Factored local systems on every dilated cube of a tree, reusable across
/// right-hand sides.
pub struct WhitneySolver {
    tree: WhitneyTree,
    systems: Vec<RegionSystem>,
}

impl WhitneySolver {
    pub fn new(dom: &GridDomain, tree: WhitneyTree, opts: SolverOptions) -> Result<Self> {
        if !tree.decomposition().shape().compatible(dom.shape()) {
            return Err(Error::GridMismatch);
        }
        let systems = (0..tree.len())
            .into_par_iter()
            .map(|c| RegionSystem::new(dom, tree.decomposition().region(c), opts))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::DecompositionFailed(e.to_string()))?;
        Ok(Self { tree, systems })
    }

    pub fn tree(&self) -> &WhitneyTree {
        &self.tree
    }

    /// Number of local systems using each method.
    pub fn method_counts(&self) -> (usize, usize) {
        let direct = self.systems.iter().filter(|s| s.method() == LocalMethod::Direct).count();
        (direct, self.systems.len() - direct)
    }

    /// `v = Σ_j S_j T_j f`, with norms measured in `L^p`.
    pub fn solve(&self, dom: &GridDomain, rho: &DistanceField, f: &ScalarField, p: f64) -> Result<DivSolution> {
        let shape = *dom.shape();
        f.check_grid(&shape)?;
        let dec = decompose_rhs(f, &self.tree)?;
        let locals: Vec<Option<LocalSolution>> = dec
            .pieces()
            .par_iter()
            .zip(self.systems.par_iter())
            .map(|(piece, sys)| if piece.is_zero() { Ok(None) } else { sys.solve(&piece.values).map(Some) })
            .collect::<Result<_>>()?;

        let mut acc1 = vec![NeumaierSum::new(); shape.len()];
        let mut acc2 = vec![NeumaierSum::new(); shape.len()];
        let mut max_local_residual = 0.0f64;
        let mut max_iterations = 0;
        for sol in locals.iter().flatten() {
            max_local_residual = max_local_residual.max(sol.residual);
            max_iterations = max_iterations.max(sol.iterations);
            for (comp, pos, x) in sol.faces() {
                if comp == 0 {
                    acc1[pos].add(x);
                } else {
                    acc2[pos].add(x);
                }
            }
        }
        let v = VectorField {
            shape,
            v1: acc1.iter().map(|s| s.value()).collect(),
            v2: acc2.iter().map(|s| s.value()).collect(),
            bc: BoundaryCondition::ZeroTrace,
        };

        let h = shape.h;
        let h2 = h * h;
        let q = p;
        let mut chains = EstimateChains {
            q,
            grad_total: 0.0,
            weighted_total: 0.0,
            sum_grad: 0.0,
            sum_weighted: 0.0,
            sum_pieces: 0.0,
            f_total: compensated_sum(dom.cells().iter().map(|&k| f.values[k].abs().powf(q))) * h2,
            max_local_grad_ratio: 0.0,
            max_local_weighted_ratio: 0.0,
            overlap: self.tree.decomposition().overlap_constant(),
        };
        let per_cube: Vec<(f64, f64, f64)> = locals
            .par_iter()
            .enumerate()
            .map(|(c, sol)| {
                let fj = compensated_sum(dec.piece(c).values.iter().map(|x| x.abs().powf(q))) * h2;
                match sol {
                    None => (0.0, 0.0, fj),
                    Some(sol) => {
                        let (dj, mj) = local_powers(sol, &shape, q);
                        let len = self.tree.cubes()[c].length(h);
                        (dj, mj / len.powf(q), fj)
                    }
                }
            })
            .collect();
        for &(dj, uj, fj) in &per_cube {
            chains.sum_grad += dj;
            chains.sum_weighted += uj;
            chains.sum_pieces += fj;
            if fj > 0.0 {
                chains.max_local_grad_ratio = chains.max_local_grad_ratio.max(dj / fj);
                chains.max_local_weighted_ratio = chains.max_local_weighted_ratio.max(uj / fj);
            }
        }
        chains.grad_total = compensated_sum(jacobian_magnitude(&v).into_iter().map(|x| x.powf(q))) * h2;
        chains.weighted_total = compensated_sum(
            dom.cells().iter().map(|&k| (v.magnitude_at(k) / rho.at(k)).powf(q)),
        ) * h2;

        let residual = residual(dom, &v, f)?;
        let norms = div_norms(dom, rho, &v, f, p);
        Ok(DivSolution {
            method: Method::WhitneyConstructive,
            energy: energy_of(&v),
            v,
            residual,
            norms,
            max_local_residual,
            max_iterations,
            chains: Some(chains),
            p2_minimizer: p != 2.0,
        })
    }
}

/// `(∫|D w|^q, ∫|w|^q)` for a local solution `w`, zero-extended.
fn local_powers(sol: &LocalSolution, shape: &GridShape, q: f64) -> (f64, f64) {
    let (mut i0, mut j0, mut i1, mut j1) = (usize::MAX, usize::MAX, 0, 0);
    for (_, pos, _) in sol.faces() {
        let (i, j) = shape.coords(pos);
        i0 = i0.min(i);
        j0 = j0.min(j);
        i1 = i1.max(i);
        j1 = j1.max(j);
    }
    if i0 == usize::MAX {
        return (0.0, 0.0);
    }
    // one extra column/row on the low side for the forward differences into the support
    let i0 = i0 - 1;
    let j0 = j0 - 1;
    let bw = i1 - i0 + 2;
    let bh = j1 - j0 + 2;
    let mut w = [vec![0.0; bw * bh], vec![0.0; bw * bh]];
    for (comp, pos, x) in sol.faces() {
        let (i, j) = shape.coords(pos);
        w[comp as usize][(j - j0) * bw + (i - i0)] = x;
    }
    let h = shape.h;
    let h2 = h * h;
    let mut grad = NeumaierSum::new();
    let mut mag = NeumaierSum::new();
    for jj in 0..bh {
        for ii in 0..bw {
            let l = jj * bw + ii;
            let mut s = 0.0;
            for c in &w {
                let here = c[l];
                let right = if ii + 1 < bw { c[l + 1] } else { 0.0 };
                let up = if jj + 1 < bh { c[l + bw] } else { 0.0 };
                s += (right - here).powi(2) + (up - here).powi(2);
            }
            grad.add((s.sqrt() / h).powf(q));
            mag.add((w[0][l].powi(2) + w[1][l].powi(2)).sqrt().powf(q));
        }
    }
    (grad.value() * h2, mag.value() * h2)
}

pub fn solve_whitney(
    dom: &GridDomain,
    rho: &DistanceField,
    tree: WhitneyTree,
    f: &ScalarField,
    p: f64,
) -> Result<DivSolution> {
    WhitneySolver::new(dom, tree, SolverOptions::default())?.solve(dom, rho, f, p)
}

/// Minimum-energy solution over the whole domain, factored once.
pub struct GlobalSolver {
    system: RegionSystem,
}

impl GlobalSolver {
    pub fn new(dom: &GridDomain, opts: SolverOptions) -> Result<Self> {
        Ok(Self { system: RegionSystem::new(dom, dom.cells(), opts)? })
    }

    pub fn method(&self) -> LocalMethod {
        self.system.method()
    }

    pub fn solve(&self, dom: &GridDomain, rho: &DistanceField, f: &ScalarField, p: f64) -> Result<DivSolution> {
        let shape = *dom.shape();
        f.check_grid(&shape)?;
        let vals: Vec<f64> = dom.cells().iter().map(|&k| f.values[k]).collect();
        let sol = self.system.solve(&vals)?;
        let mut v = VectorField::zeros(shape);
        sol.scatter_into(1.0, &mut v);
        v.bc = BoundaryCondition::ZeroTrace;
        let residual = residual(dom, &v, f)?;
        let norms = div_norms(dom, rho, &v, f, p);
        Ok(DivSolution {
            method: Method::GlobalBaseline,
            energy: energy_of(&v),
            v,
            residual,
            norms,
            max_local_residual: sol.residual,
            max_iterations: sol.iterations,
            chains: None,
            p2_minimizer: p != 2.0,
        })
    }
}

pub fn solve_global(dom: &GridDomain, rho: &DistanceField, f: &ScalarField, p: f64) -> Result<DivSolution> {
    GlobalSolver::new(dom, SolverOptions::direct())?.solve(dom, rho, f, p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionRow {
    pub index: usize,
    pub method: Method,
    pub residual: f64,
    /// `‖v‖_{W^{1,p}} / ‖f‖_p`
    pub ratio_w1p: f64,
    /// `(‖v/ρ‖_p + ‖Dv‖_p) / ‖f‖_p`
    pub ratio_weighted: f64,
    /// `‖v/ρ‖_p / ‖f‖_p`
    pub ratio_v_over_rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub p: f64,
    pub rows: Vec<ConditionRow>,
}

impl ConditionReport {
    fn max_of(&self, method: Method, pick: impl Fn(&ConditionRow) -> f64) -> f64 {
        self.rows.iter().filter(|r| r.method == method).map(pick).fold(0.0, f64::max)
    }

    pub fn max_w1p(&self, method: Method) -> f64 {
        self.max_of(method, |r| r.ratio_w1p)
    }

    pub fn max_weighted(&self, method: Method) -> f64 {
        self.max_of(method, |r| r.ratio_weighted)
    }

    pub fn max_v_over_rho(&self, method: Method) -> f64 {
        self.max_of(method, |r| r.ratio_v_over_rho)
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

/// Solves every `f` of the batch with both methods and tabulates the
/// condition ratios. Pass `None` for a solver to skip that method.
pub fn condition_report(
    dom: &GridDomain,
    rho: &DistanceField,
    batch: &[ScalarField],
    p: f64,
    whitney: Option<&WhitneySolver>,
    global: Option<&GlobalSolver>,
) -> Result<ConditionReport> {
    let mut rows = Vec::new();
    for (index, f) in batch.iter().enumerate() {
        let mut sols = Vec::new();
        if let Some(w) = whitney {
            sols.push(w.solve(dom, rho, f, p)?);
        }
        if let Some(g) = global {
            sols.push(g.solve(dom, rho, f, p)?);
        }
        for s in sols {
            rows.push(ConditionRow {
                index,
                method: s.method,
                residual: s.residual,
                ratio_w1p: s.norms.ratio_w1p,
                ratio_weighted: s.norms.ratio_weighted,
                ratio_v_over_rho: s.norms.ratio_v_over_rho,
            });
        }
    }
    Ok(ConditionReport { p, rows })
}
