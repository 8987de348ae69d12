//! Multigrid-preconditioned conjugate gradients for the masked operator
//! `A u = u − ¼ Σ_{neighbours in mask} u` on a rectangular grid.
//!
//! Cells outside the mask hold known values that the caller folds into the
//! right-hand side, so every vector handled here is zero off the mask. The
//! V-cycle uses red-black Gauss–Seidel in symmetric order, bilinear
//! prolongation, full-weighting restriction and rediscretised coarse
//! operators, which keeps the preconditioner symmetric positive definite.

use crate::error::{Error, Result};

/// Row-major rectangular grid with a mask of unknown cells. The outermost
/// rows and columns must be outside the mask.
#[derive(Clone, Debug)]
pub struct MaskedGrid {
    pub nx: usize,
    pub ny: usize,
    pub mask: Vec<bool>,
}

impl MaskedGrid {
    pub fn new(nx: usize, ny: usize, mask: Vec<bool>) -> Result<Self> {
        if nx < 3 || ny < 3 || mask.len() != nx * ny {
            return Err(Error::Domain("grid must be at least 3x3 and match its mask".into()));
        }
        for i in 0..nx {
            if mask[i] || mask[(ny - 1) * nx + i] {
                return Err(Error::Domain("mask touches the grid border".into()));
            }
        }
        for j in 0..ny {
            if mask[j * nx] || mask[j * nx + nx - 1] {
                return Err(Error::Domain("mask touches the grid border".into()));
            }
        }
        Ok(MaskedGrid { nx, ny, mask })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nx * self.ny == 0
    }

    pub fn unknowns(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

struct Level {
    nx: usize,
    ny: usize,
    mask: Vec<bool>,
    scale: f64,
    u: Vec<f64>,
    f: Vec<f64>,
    r: Vec<f64>,
}

/// Convergence report of a PCG solve.
#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

pub struct Multigrid {
    levels: Vec<Level>,
    sweeps: usize,
    coarse_sweeps: usize,
}

#[inline]
fn nbr_sum(v: &[f64], k: usize, nx: usize) -> f64 {
    debug_assert!(k >= nx + 1 && k + nx + 1 <= v.len());
    // SAFETY: unknown cells never touch the border, so all four neighbours
    // of `k` are in bounds.
    unsafe { *v.get_unchecked(k - 1) + *v.get_unchecked(k + 1) + *v.get_unchecked(k - nx) + *v.get_unchecked(k + nx) }
}

impl Multigrid {
    pub fn new(grid: &MaskedGrid) -> Self {
        let mut levels = Vec::new();
        let (mut nx, mut ny, mut mask, mut scale) = (grid.nx, grid.ny, grid.mask.clone(), 1.0);
        loop {
            let n = nx * ny;
            levels.push(Level { nx, ny, mask: mask.clone(), scale, u: vec![0.0; n], f: vec![0.0; n], r: vec![0.0; n] });
            let (cx, cy) = (nx / 2 + 1, ny / 2 + 1);
            if cx < 5 || cy < 5 {
                break;
            }
            let mut cmask = vec![false; cx * cy];
            let mut count = 0usize;
            for jc in 1..cy - 1 {
                for ic in 1..cx - 1 {
                    let (i, j) = (2 * ic, 2 * jc);
                    if i < nx && j < ny && mask[j * nx + i] {
                        cmask[jc * cx + ic] = true;
                        count += 1;
                    }
                }
            }
            if count == 0 {
                break;
            }
            nx = cx;
            ny = cy;
            mask = cmask;
            scale *= 0.25;
        }
        Multigrid { levels, sweeps: 2, coarse_sweeps: 40 }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// out = A x on the finest level.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let l = &self.levels[0];
        apply_level(l.nx, l.ny, &l.mask, l.scale, x, out);
    }

    fn smooth(level: &mut Level, color: usize) {
        let (nx, ny, s) = (level.nx, level.ny, level.scale);
        let inv = 1.0 / s;
        for j in 1..ny - 1 {
            let mut i = 1 + ((j + 1 + color) & 1);
            while i < nx - 1 {
                let k = j * nx + i;
                if level.mask[k] {
                    let v = level.f[k] * inv + 0.25 * nbr_sum(&level.u, k, nx);
                    level.u[k] = v;
                }
                i += 2;
            }
        }
    }

    fn vcycle(&mut self, l: usize) {
        let last = l + 1 == self.levels.len();
        {
            let lev = &mut self.levels[l];
            lev.u.iter_mut().for_each(|v| *v = 0.0);
        }
        if last {
            let n = self.coarse_sweeps;
            let lev = &mut self.levels[l];
            for _ in 0..n {
                Self::smooth(lev, 0);
                Self::smooth(lev, 1);
            }
            for _ in 0..n {
                Self::smooth(lev, 1);
                Self::smooth(lev, 0);
            }
            return;
        }
        for _ in 0..self.sweeps {
            Self::smooth(&mut self.levels[l], 0);
            Self::smooth(&mut self.levels[l], 1);
        }
        {
            let lev = &mut self.levels[l];
            let (nx, ny, s) = (lev.nx, lev.ny, lev.scale);
            for k in 0..nx * ny {
                lev.r[k] = if lev.mask[k] { lev.f[k] - s * (lev.u[k] - 0.25 * nbr_sum(&lev.u, k, nx)) } else { 0.0 };
            }
        }
        {
            let (fine, coarse) = self.levels.split_at_mut(l + 1);
            let (f, c) = (&fine[l], &mut coarse[0]);
            restrict(f.nx, &f.r, c.nx, c.ny, &c.mask, &mut c.f);
        }
        self.vcycle(l + 1);
        {
            let (fine, coarse) = self.levels.split_at_mut(l + 1);
            let (f, c) = (&mut fine[l], &coarse[0]);
            prolong_add(c.nx, &c.u, f.nx, f.ny, &f.mask, &mut f.u);
        }
        for _ in 0..self.sweeps {
            Self::smooth(&mut self.levels[l], 1);
            Self::smooth(&mut self.levels[l], 0);
        }
    }

    /// z = M⁻¹ r (one V-cycle).
    pub fn precondition(&mut self, r: &[f64], z: &mut [f64]) {
        self.levels[0].f.copy_from_slice(r);
        self.vcycle(0);
        z.copy_from_slice(&self.levels[0].u);
    }

    /// Solves A x = b, starting from the given `x`, until the max-norm of the
    /// residual is at most `tol`.
    pub fn solve(&mut self, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats> {
        let n = b.len();
        let mask = self.levels[0].mask.clone();
        for k in 0..n {
            if !mask[k] {
                x[k] = 0.0;
            }
        }
        let mut r = vec![0.0; n];
        let mut q = vec![0.0; n];
        self.apply(x, &mut q);
        for k in 0..n {
            r[k] = if mask[k] { b[k] - q[k] } else { 0.0 };
        }
        let mut res = max_abs(&r);
        if res <= tol {
            return Ok(SolveStats { iterations: 0, residual: res });
        }
        let mut z = vec![0.0; n];
        self.precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for it in 1..=max_iter {
            self.apply(&p, &mut q);
            let alpha = rz / dot(&p, &q);
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * q[k];
            }
            res = max_abs(&r);
            if res <= tol {
                // confirm against the true residual
                self.apply(x, &mut q);
                let mut true_res: f64 = 0.0;
                for k in 0..n {
                    if mask[k] {
                        true_res = true_res.max((b[k] - q[k]).abs());
                    }
                }
                if true_res <= tol {
                    return Ok(SolveStats { iterations: it, residual: true_res });
                }
                for k in 0..n {
                    r[k] = if mask[k] { b[k] - q[k] } else { 0.0 };
                }
            }
            self.precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        Err(Error::Numeric { what: format!("multigrid PCG did not converge in {max_iter} iterations"), residual: res })
    }
}

fn apply_level(nx: usize, ny: usize, mask: &[bool], s: f64, x: &[f64], out: &mut [f64]) {
    for k in 0..nx * ny {
        out[k] = if mask[k] { s * (x[k] - 0.25 * nbr_sum(x, k, nx)) } else { 0.0 };
    }
}

fn restrict(fnx: usize, r: &[f64], cnx: usize, cny: usize, cmask: &[bool], out: &mut [f64]) {
    for jc in 0..cny {
        for ic in 0..cnx {
            let kc = jc * cnx + ic;
            if !cmask[kc] {
                out[kc] = 0.0;
                continue;
            }
            let k = 2 * jc * fnx + 2 * ic;
            let centre = r[k];
            let edges = r[k - 1] + r[k + 1] + r[k - fnx] + r[k + fnx];
            let corners = r[k - fnx - 1] + r[k - fnx + 1] + r[k + fnx - 1] + r[k + fnx + 1];
            out[kc] = 0.25 * (centre + 0.5 * edges + 0.25 * corners);
        }
    }
}

fn prolong_add(cnx: usize, uc: &[f64], fnx: usize, fny: usize, fmask: &[bool], uf: &mut [f64]) {
    for j in 1..fny - 1 {
        let (j0, j1, wj) = if j % 2 == 0 { (j / 2, j / 2, 1.0) } else { ((j - 1) / 2, (j + 1) / 2, 0.5) };
        for i in 1..fnx - 1 {
            let k = j * fnx + i;
            if !fmask[k] {
                continue;
            }
            let v = if i % 2 == 0 {
                let ic = i / 2;
                if j0 == j1 {
                    uc[j0 * cnx + ic]
                } else {
                    wj * (uc[j0 * cnx + ic] + uc[j1 * cnx + ic])
                }
            } else {
                let (i0, i1) = ((i - 1) / 2, (i + 1) / 2);
                if j0 == j1 {
                    0.5 * (uc[j0 * cnx + i0] + uc[j0 * cnx + i1])
                } else {
                    0.25 * (uc[j0 * cnx + i0] + uc[j0 * cnx + i1] + uc[j1 * cnx + i0] + uc[j1 * cnx + i1])
                }
            };
            uf[k] += v;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_grid(r: i64) -> (MaskedGrid, i64) {
        let side = (2 * r + 3) as usize;
        let off = r + 1;
        let mut mask = vec![false; side * side];
        for j in 0..side as i64 {
            for i in 0..side as i64 {
                let (x, y) = (i - off, j - off);
                if x * x + y * y < r * r {
                    mask[(j as usize) * side + i as usize] = true;
                }
            }
        }
        (MaskedGrid::new(side, side, mask).unwrap(), off)
    }

    #[test]
    fn pcg_solves_discrete_dirichlet_problem() {
        // u = x² − y² is discrete harmonic; boundary data enters via b.
        let (g, off) = disk_grid(40);
        let n = g.len();
        let exact = |k: usize| {
            let (i, j) = ((k % g.nx) as i64 - off, (k / g.nx) as i64 - off);
            (i * i - j * j) as f64
        };
        let mut b = vec![0.0; n];
        for k in 0..n {
            if g.mask[k] {
                for kk in [k - 1, k + 1, k - g.nx, k + g.nx] {
                    if !g.mask[kk] {
                        b[k] += 0.25 * exact(kk);
                    }
                }
            }
        }
        let mut mg = Multigrid::new(&g);
        assert!(mg.depth() >= 4);
        let mut x = vec![0.0; n];
        let st = mg.solve(&b, &mut x, 1e-11, 100).unwrap();
        assert!(st.iterations < 30, "iterations {}", st.iterations);
        for k in 0..n {
            if g.mask[k] {
                assert!((x[k] - exact(k)).abs() < 1e-6);
            }
        }
    }
}
