use super::domain::{GridDomain, GridShape};

/// Distance from each domain cell center to the nearest exterior cell center.
/// Exterior cells carry 0, so domain cells are always at least `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    shape: GridShape,
    rho: Vec<f64>,
}

impl DistanceField {
    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn h(&self) -> f64 {
        self.shape.h
    }

    pub fn values(&self) -> &[f64] {
        &self.rho
    }

    #[inline]
    pub fn at(&self, idx: usize) -> f64 {
        self.rho[idx]
    }

    /// Index of the largest distance (first in storage order on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &r) in self.rho.iter().enumerate() {
            if r > self.rho[best] {
                best = k;
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.rho[self.argmax()]
    }
}

/// Exact Euclidean distance transform (separable lower-envelope algorithm).
pub fn distance_transform(dom: &GridDomain) -> DistanceField {
    let shape = *dom.shape();
    let d2 = exact_edt_squared(dom.mask(), shape.nx, shape.ny);
    let rho = d2
        .iter()
        .zip(dom.mask())
        .map(|(&d, &inside)| if inside { d.sqrt() * shape.h } else { 0.0 })
        .collect();
    DistanceField { shape, rho }
}

/// Squared distance, in cell units, from every cell to the nearest `false`
/// cell of a row-major `nx * ny` mask. `false` cells get 0; a mask with no
/// `false` cell yields `f64::INFINITY` everywhere.
pub fn exact_edt_squared(mask: &[bool], nx: usize, ny: usize) -> Vec<f64> {
    assert_eq!(mask.len(), nx * ny, "mask length does not match dimensions");
    let inf = f64::INFINITY;
    let mut grid: Vec<f64> = mask.iter().map(|&m| if m { inf } else { 0.0 }).collect();
    let n = nx.max(ny);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for i in 0..nx {
        for j in 0..ny {
            f[j] = grid[j * nx + i];
        }
        lower_envelope(&f[..ny], &mut d[..ny], &mut v, &mut z);
        for j in 0..ny {
            grid[j * nx + i] = d[j];
        }
    }
    for j in 0..ny {
        let row = &mut grid[j * nx..(j + 1) * nx];
        f[..nx].copy_from_slice(row);
        lower_envelope(&f[..nx], &mut d[..nx], &mut v, &mut z);
        row.copy_from_slice(&d[..nx]);
    }
    grid
}

/// One-dimensional squared distance transform of a sampled function `f`
/// (Felzenszwalb-Huttenlocher). Infinite samples are not sites.
fn lower_envelope(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k: isize = -1;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let p = v[k as usize];
            let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k as usize] = q;
            z[k as usize] = s;
            z[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        d.iter_mut().for_each(|x| *x = f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        d[q] = dq * dq + f[p];
    }
}
