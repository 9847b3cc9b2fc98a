//! Small symmetric linear algebra kernels: banded Cholesky and
//! Jacobi-preconditioned conjugate gradients.

use crate::scalar::Real;

/// Symmetric matrix in lower band storage.
#[derive(Debug, Clone)]
pub struct SymBand<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Real> SymBand<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBand {
            n,
            bw,
            data: vec![T::zero(); n * (bw + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            T::zero()
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds `val` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, val: T) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        assert!(
            i - j <= self.bw,
            "entry ({i}, {j}) outside band {}",
            self.bw
        );
        let s = self.slot(i, j);
        self.data[s] += val;
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.data[self.slot(i, i)]).collect()
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        y.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let mut acc = T::zero();
            for j in lo..i {
                let a = row[self.bw + j - i];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc + row[self.bw] * x[i];
        }
    }

    /// In-place Cholesky factorization `A = L Lᵀ`; `None` if a pivot is not
    /// positive.
    pub fn cholesky(mut self) -> Option<BandCholesky<T>> {
        let bw = self.bw;
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = self.data[self.slot(i, j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= self.data[self.slot(i, k)] * self.data[self.slot(j, k)];
                }
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return None;
                    }
                    let si = self.slot(i, i);
                    self.data[si] = s.sqrt();
                } else {
                    let ij = self.slot(i, j);
                    self.data[ij] = s / self.data[self.slot(j, j)];
                }
            }
        }
        Some(BandCholesky { factor: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky<T> {
    factor: SymBand<T>,
}

impl<T: Real> BandCholesky<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let l = &self.factor;
        let n = l.n;
        let bw = l.bw;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.data[l.slot(i, k)] * y[k];
            }
            y[i] = s / l.data[l.slot(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= l.data[l.slot(k, i)] * y[k];
            }
            y[i] = s / l.data[l.slot(i, i)];
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Jacobi-preconditioned CG for `A x = b`, starting from `x`.
pub fn conjugate_gradient<T: Real>(
    apply: impl Fn(&[T], &mut [T]),
    diag: &[T],
    b: &[T],
    x: &mut [T],
    rel_tol: T,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    let dot = |a: &[T], c: &[T]| a.iter().zip(c).fold(T::zero(), |s, (p, q)| s + *p * *q);
    let bnorm = dot(b, b).sqrt().max(T::min_positive_value());
    let mut r = vec![T::zero(); n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let precond = |r: &[T], z: &mut [T]| {
        for i in 0..n {
            z[i] = if diag[i] > T::zero() {
                r[i] / diag[i]
            } else {
                r[i]
            };
        }
    };
    let mut z = vec![T::zero(); n];
    precond(&r, &mut z);
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let mut ad = vec![T::zero(); n];
    let mut res = dot(&r, &r).sqrt() / bnorm;
    for it in 0..max_iter {
        if res <= rel_tol {
            return CgOutcome {
                iterations: it,
                relative_residual: res.as_f64(),
                converged: true,
            };
        }
        apply(&d, &mut ad);
        let dad = dot(&d, &ad);
        if !(dad > T::zero()) {
            break;
        }
        let alpha = rz / dad;
        for i in 0..n {
            x[i] += alpha * d[i];
            r[i] -= alpha * ad[i];
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + beta * d[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
    }
    CgOutcome {
        iterations: max_iter,
        relative_residual: res.as_f64(),
        converged: res <= rel_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, bw: usize, rng: &mut ChaCha8Rng) -> (SymBand<f64>, Vec<Vec<f64>>) {
        let mut a = SymBand::zeros(n, bw);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a.add(i, j, x);
                dense[i][j] += x;
                dense[j][i] += x;
            }
        }
        for i in 0..n {
            let d = 2.0 * bw as f64 + 1.0;
            a.add(i, i, d);
            dense[i][i] += d;
        }
        (a, dense)
    }

    #[test]
    fn banded_cholesky_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, bw) in &[(1, 0), (5, 1), (40, 3), (60, 10)] {
            let (a, dense) = random_spd(n, bw, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = a.clone().cholesky().unwrap().solve(&b);
            for i in 0..n {
                let ax: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum();
                assert!((ax - b[i]).abs() < 1e-12, "n={n} bw={bw} row {i}");
            }
            let mut y = vec![0.0; n];
            a.matvec(&x, &mut y);
            for i in 0..n {
                assert!((y[i] - b[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = SymBand::<f64>::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn cg_agrees_with_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (a, _) = random_spd(50, 4, &mut rng);
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let direct = a.clone().cholesky().unwrap().solve(&b);
        let mut x = vec![0.0; 50];
        let out = conjugate_gradient(|p, q| a.matvec(p, q), &a.diagonal(), &b, &mut x, 1e-13, 500);
        assert!(out.converged);
        for (p, q) in x.iter().zip(&direct) {
            assert!((p - q).abs() < 1e-10);
        }
    }
}
