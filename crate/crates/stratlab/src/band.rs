//! Banded linear systems in LAPACK-style band storage, factored with
//! partial pivoting. Pivoting fill needs `kl` extra superdiagonals, so the
//! storage holds `2*kl + ku + 1` diagonals per column.

/// Banded `n x n` matrix with `kl` subdiagonals and `ku` superdiagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major band storage; entry `(i, j)` lives at
    /// `ab[j * ldab + (kl + ku + i - j)]`.
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, ab: vec![0.0; ldab * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kl(&self) -> usize {
        self.kl
    }

    pub fn ku(&self) -> usize {
        self.ku
    }

    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j <= i + self.ku && i <= j + self.kl, "({i},{j}) outside band");
        j * self.ldab() + (self.kl + self.ku + i - j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.ab[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.ab[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i + self.ku || i > j + self.kl {
            0.0
        } else {
            self.ab[j * self.ldab() + (self.kl + self.ku + i - j)]
        }
    }

    /// Zero an entire logical row (used when replacing operator rows with
    /// boundary-condition rows).
    pub fn clear_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            self.set(i, j, 0.0);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Band-times-band product; bandwidths add.
    pub fn mul(&self, rhs: &BandMatrix) -> BandMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let (kl, ku) = (self.kl + rhs.kl, self.ku + rhs.ku);
        let mut out = BandMatrix::zeros(n, kl.min(n - 1), ku.min(n - 1));
        for i in 0..n {
            let clo = i.saturating_sub(self.kl);
            let chi = (i + self.ku).min(n - 1);
            for c in clo..=chi {
                let a = self.get(i, c);
                if a == 0.0 {
                    continue;
                }
                let jlo = c.saturating_sub(rhs.kl);
                let jhi = (c + rhs.ku).min(n - 1);
                for j in jlo..=jhi {
                    let b = rhs.get(c, j);
                    if b != 0.0 {
                        out.add(i, j, a * b);
                    }
                }
            }
        }
        out
    }

    /// LU factorization with partial pivoting (unblocked GBTRF).
    /// On a zero pivot the offending column index is returned.
    pub fn factor(mut self) -> Result<BandLu, usize> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let ldab = self.ldab();
        let kv = kl + ku; // row index of the diagonal in band storage
        let ab = &mut self.ab;
        let mut ipiv = vec![0usize; n];
        // Columns beyond this index hold no data touched so far (fill tracking).
        let mut ju = 0usize;

        for j in 0..n {
            let km = kl.min(n - 1 - j); // active subdiagonal count
            // Pivot search in column j, logical rows j..=j+km.
            let mut p = 0usize;
            let mut pmax = ab[j * ldab + kv].abs();
            for q in 1..=km {
                let v = ab[j * ldab + kv + q].abs();
                if v > pmax {
                    pmax = v;
                    p = q;
                }
            }
            ipiv[j] = j + p;
            if pmax == 0.0 {
                return Err(j);
            }
            ju = ju.max((j + ku + p).min(n - 1));
            // Swap logical rows j and j+p across columns j..=ju.
            if p != 0 {
                for c in j..=ju {
                    let r1 = c * ldab + (kv + j - c);
                    let r2 = c * ldab + (kv + j + p - c);
                    ab.swap(r1, r2);
                }
            }
            if km > 0 {
                let piv = ab[j * ldab + kv];
                for q in 1..=km {
                    ab[j * ldab + kv + q] /= piv;
                }
                for c in (j + 1)..=ju {
                    let t = ab[c * ldab + (kv + j - c)];
                    if t != 0.0 {
                        for q in 1..=km {
                            ab[c * ldab + (kv + j + q - c)] -= ab[j * ldab + kv + q] * t;
                        }
                    }
                }
            }
        }
        Ok(BandLu { n, kl, ku, ab: self.ab, ipiv })
    }
}

/// Factored banded system; `solve_in_place` reuses the factorization.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let ldab = 2 * kl + ku + 1;
        let kv = kl + ku;
        // Forward: apply P and L.
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                for q in 1..=km {
                    b[j + q] -= self.ab[j * ldab + kv + q] * bj;
                }
            }
        }
        // Back substitution with U (bandwidth kl + ku after fill).
        for j in (0..n).rev() {
            let bj = b[j] / self.ab[j * ldab + kv];
            b[j] = bj;
            let lo = j.saturating_sub(kl + ku);
            for i in lo..j {
                b[i] -= self.ab[j * ldab + (kv + i - j)] * bj;
            }
        }
    }
}
