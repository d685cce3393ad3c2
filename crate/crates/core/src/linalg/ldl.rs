use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Collects `(row, col, value)` entries of a symmetric matrix. Each off-diagonal
/// coupling is given once, in either orientation; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self { n, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i, j, v));
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pivots {
    Positive,
    Nonzero,
}

/// `P A Pᵀ = L D Lᵀ` with unit lower-triangular `L` and a caller-supplied
/// fill-reducing permutation. Up-looking factorization driven by the
/// elimination tree; no pivoting, so it is meant for positive definite and
/// quasi-definite matrices.
#[derive(Debug, Clone)]
pub struct SparseLdl {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<u32>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl SparseLdl {
    /// Factors a symmetric positive definite matrix; a nonpositive pivot is an
    /// error. `perm[new] = old`; `None` keeps the natural ordering.
    pub fn factor_positive(builder: &TripletBuilder, perm: Option<Vec<usize>>) -> Result<Self> {
        Self::factor_impl(builder, perm, Pivots::Positive)
    }

    /// Factors a symmetric matrix whose leading minors in the given ordering
    /// are all nonsingular (e.g. quasi-definite `[A Bᵀ; B −εI]`).
    pub fn factor(builder: &TripletBuilder, perm: Option<Vec<usize>>) -> Result<Self> {
        Self::factor_impl(builder, perm, Pivots::Nonzero)
    }

    fn factor_impl(builder: &TripletBuilder, perm: Option<Vec<usize>>, pivots: Pivots) -> Result<Self> {
        let n = builder.n;
        let perm = perm.unwrap_or_else(|| (0..n).collect());
        if perm.len() != n {
            return Err(Error::InvalidParameter("permutation length mismatch".into()));
        }
        let mut iperm = vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let (cp, ci, cx) = permuted_upper(builder, &iperm);

        let parent = etree(n, &cp, &ci);
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];

        let mut colcount = vec![0usize; n];
        for k in 0..n {
            let top = ereach(k, &cp, &ci, &parent, &mut stack, &mut mark);
            for &i in &stack[top..n] {
                colcount[i] += 1;
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + colcount[k];
        }
        let nnz = lp[n];
        let mut li = vec![0u32; nnz];
        let mut lx = vec![0.0; nnz];
        let mut d = vec![0.0; n];
        let mut fill: Vec<usize> = lp[..n].to_vec();
        let mut y = vec![0.0; n];
        mark.iter_mut().for_each(|m| *m = NONE);

        for k in 0..n {
            let top = ereach(k, &cp, &ci, &parent, &mut stack, &mut mark);
            y[k] = 0.0;
            for p in cp[k]..cp[k + 1] {
                y[ci[p]] += cx[p];
            }
            let mut dk = y[k];
            y[k] = 0.0;
            for t in top..n {
                let i = stack[t];
                let yi = y[i];
                y[i] = 0.0;
                for p in lp[i]..fill[i] {
                    y[li[p] as usize] -= lx[p] * yi;
                }
                let lki = yi / d[i];
                dk -= lki * yi;
                let p = fill[i];
                fill[i] += 1;
                li[p] = k as u32;
                lx[p] = lki;
            }
            let bad = match pivots {
                Pivots::Positive => !(dk > 0.0),
                Pivots::Nonzero => dk == 0.0,
            };
            if bad || !dk.is_finite() {
                return Err(Error::SingularSystem(format!("pivot {k} is {dk:e}")));
            }
            d[k] = dk;
        }
        Ok(Self { n, perm, iperm, lp, li, lx, d })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored off-diagonal entries of `L`.
    pub fn nnz(&self) -> usize {
        self.lx.len()
    }

    /// `(positive, negative)` pivot counts, the inertia of the matrix.
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|&&x| x > 0.0).count();
        (pos, self.n - pos)
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        self.solve_permuted(&mut y);
        for (old, slot) in b.iter_mut().enumerate() {
            *slot = y[self.iperm[old]];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    fn solve_permuted(&self, y: &mut [f64]) {
        let (lp, li, lx) = (&self.lp, &self.li, &self.lx);
        for j in 0..self.n {
            let yj = y[j];
            if yj != 0.0 {
                for p in lp[j]..lp[j + 1] {
                    y[li[p] as usize] -= lx[p] * yj;
                }
            }
        }
        for (yj, dj) in y.iter_mut().zip(&self.d) {
            *yj /= dj;
        }
        for j in (0..self.n).rev() {
            let mut s = y[j];
            for p in lp[j]..lp[j + 1] {
                s -= lx[p] * y[li[p] as usize];
            }
            y[j] = s;
        }
    }
}

/// Upper triangle of `P A Pᵀ` in compressed columns with sorted rows and
/// duplicates summed.
fn permuted_upper(builder: &TripletBuilder, iperm: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let n = builder.n;
    let mut ap = vec![0usize; n + 1];
    for &(i, j, _) in &builder.entries {
        ap[iperm[i].max(iperm[j]) + 1] += 1;
    }
    for k in 0..n {
        ap[k + 1] += ap[k];
    }
    let mut next = ap.clone();
    let mut ai = vec![0usize; ap[n]];
    let mut ax = vec![0.0; ap[n]];
    for &(i, j, v) in &builder.entries {
        let (a, b) = (iperm[i], iperm[j]);
        let col = a.max(b);
        let p = next[col];
        next[col] += 1;
        ai[p] = a.min(b);
        ax[p] = v;
    }
    let mut cp = vec![0usize; n + 1];
    let mut ci = Vec::with_capacity(ai.len());
    let mut cx = Vec::with_capacity(ai.len());
    let mut scratch: Vec<(usize, f64)> = Vec::new();
    for k in 0..n {
        scratch.clear();
        scratch.extend((ap[k]..ap[k + 1]).map(|p| (ai[p], ax[p])));
        scratch.sort_unstable_by_key(|e| e.0);
        let mut last = NONE;
        for &(r, v) in &scratch {
            if r == last {
                *cx.last_mut().unwrap() += v;
            } else {
                ci.push(r);
                cx.push(v);
                last = r;
            }
        }
        cp[k + 1] = ci.len();
    }
    (cp, ci, cx)
}

fn etree(n: usize, cp: &[usize], ci: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for p in cp[k]..cp[k + 1] {
            let mut i = ci[p];
            while i != NONE && i < k {
                let inext = ancestor[i];
                ancestor[i] = k;
                if inext == NONE {
                    parent[i] = k;
                }
                i = inext;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L`, returned in `stack[top..]` in
/// topological order. `mark` uses `k` as the visit stamp.
fn ereach(
    k: usize,
    cp: &[usize],
    ci: &[usize],
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = k;
    for p in cp[k]..cp[k + 1] {
        let mut i = ci[p];
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::nested_dissection;

    fn laplacian(nx: usize, ny: usize, shift: f64) -> (TripletBuilder, Vec<[i32; 2]>) {
        let n = nx * ny;
        let mut b = TripletBuilder::new(n);
        let mut coords = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                coords.push([i as i32, j as i32]);
                b.add(k, k, 4.0 + shift);
                if i + 1 < nx {
                    b.add(k, k + 1, -1.0);
                }
                if j + 1 < ny {
                    b.add(k + nx, k, -1.0);
                }
            }
        }
        (b, coords)
    }

    #[test]
    fn quasi_definite_saddle_system_solves() {
        // [A Bᵀ; B −εI] with A = tridiag(−1, 4, −1) and B = [1 −1 0; 0 1 −1]
        let eps = 1e-9;
        let mut k = TripletBuilder::new(5);
        for i in 0..3 {
            k.add(i, i, 4.0);
        }
        k.add(0, 1, -1.0);
        k.add(1, 2, -1.0);
        k.add(3, 0, 1.0);
        k.add(3, 1, -1.0);
        k.add(4, 1, 1.0);
        k.add(4, 2, -1.0);
        k.add(3, 3, -eps);
        k.add(4, 4, -eps);
        let coords = vec![[0, 0], [2, 0], [4, 0], [1, 0], [3, 0]];
        let ldl = SparseLdl::factor(&k, Some(nested_dissection(&coords, 2))).unwrap();
        assert_eq!(ldl.inertia(), (3, 2));
        let rhs = [0.0, 0.0, 0.0, 1.0, 2.0];
        let x = ldl.solve(&rhs);
        let r = apply(&k, &x);
        for i in 0..5 {
            assert!((r[i] - rhs[i]).abs() < 1e-9, "row {i}");
        }
    }

    fn apply(b: &TripletBuilder, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for &(i, j, v) in &b.entries {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }

    #[test]
    fn solves_dirichlet_laplacian_with_and_without_ordering() {
        let (b, coords) = laplacian(23, 17, 0.0);
        let n = b.dim();
        let x_true: Vec<f64> = (0..n).map(|k| ((k * 37) % 11) as f64 - 5.0).collect();
        let rhs = apply(&b, &x_true);
        for perm in [None, Some(nested_dissection(&coords, 1))] {
            let chol = SparseLdl::factor_positive(&b, perm).unwrap();
            let x = chol.solve(&rhs);
            let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "error {err}");
        }
    }

    #[test]
    fn nested_dissection_reduces_fill() {
        let (b, coords) = laplacian(64, 64, 0.0);
        let natural = SparseLdl::factor_positive(&b, None).unwrap();
        let nd = SparseLdl::factor_positive(&b, Some(nested_dissection(&coords, 1))).unwrap();
        assert!(nd.nnz() < natural.nnz());
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(1, 1, 1.0);
        b.add(0, 1, 2.0);
        assert!(matches!(SparseLdl::factor_positive(&b, None), Err(Error::SingularSystem(_))));
        let ldl = SparseLdl::factor(&b, None).unwrap();
        assert_eq!(ldl.inertia(), (1, 1));
        let x = ldl.solve(&[1.0, 0.0]);
        assert!((x[0] + 1.0 / 3.0).abs() < 1e-14 && (x[1] - 2.0 / 3.0).abs() < 1e-14);
    }
}
