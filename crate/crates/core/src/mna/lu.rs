/// Dense LU factorization with partial pivoting, row-major storage.
#[derive(Debug, Clone)]
pub(crate) struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

/// Index of the column whose pivot vanished.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SingularAt(pub usize);

impl Lu {
    pub fn factor(n: usize, mut a: Vec<f64>) -> Result<Lu, SingularAt> {
        debug_assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * 1e-18;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|r| (r, a[r * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > tiny) {
                return Err(SingularAt(k));
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for r in (k + 1)..n {
                let f = a[r * n + k] / pivot;
                if f == 0.0 {
                    continue;
                }
                a[r * n + k] = f;
                for c in (k + 1)..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
            }
        }
        Ok(Lu { n, a, perm })
    }

    /// Solve in place; `b` is overwritten with the solution.
    pub fn solve(&self, b: &mut [f64], work: &mut Vec<f64>) {
        let n = self.n;
        work.clear();
        work.extend(self.perm.iter().map(|&p| b[p]));
        for r in 0..n {
            let mut s = work[r];
            for c in 0..r {
                s -= self.a[r * n + c] * work[c];
            }
            work[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = work[r];
            for c in (r + 1)..n {
                s -= self.a[r * n + c] * work[c];
            }
            work[r] = s / self.a[r * n + r];
        }
        b.copy_from_slice(work);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_pivoting_system() {
        // [0 2; 3 1] x = [4; 5] -> x = [1, 2]
        let lu = Lu::factor(2, vec![0.0, 2.0, 3.0, 1.0]).unwrap();
        let mut b = vec![4.0, 5.0];
        lu.solve(&mut b, &mut Vec::new());
        assert!((b[0] - 1.0).abs() < 1e-15 && (b[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn detects_singular() {
        assert!(Lu::factor(2, vec![1.0, 2.0, 2.0, 4.0]).is_err());
    }
}
