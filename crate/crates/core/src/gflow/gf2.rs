//! Linear systems over GF(2) with many unit right-hand sides.

#[derive(Clone, Debug, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn zeros(bits: usize) -> Self {
        BitRow(vec![0; bits.div_ceil(64)])
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn xor_with(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }
}

/// Reduced row echelon form of `A` together with the row operations that
/// produced it, so `A x = e_t` can be answered for any unit vector `e_t`
/// after a single elimination.
#[derive(Clone, Debug)]
pub struct Gf2System {
    nrows: usize,
    ncols: usize,
    /// Accumulated row operations, one bit per original row.
    ops: Vec<BitRow>,
    /// `pivots[r] = Some(c)` when reduced row `r` has its leading one in column `c`.
    pivots: Vec<Option<usize>>,
}

impl Gf2System {
    /// `entries(r, c)` gives `A[r][c]`.
    pub fn new(nrows: usize, ncols: usize, entries: impl Fn(usize, usize) -> bool) -> Self {
        let mut reduced: Vec<BitRow> = (0..nrows)
            .map(|r| {
                let mut row = BitRow::zeros(ncols);
                for c in 0..ncols {
                    if entries(r, c) {
                        row.set(c);
                    }
                }
                row
            })
            .collect();
        let mut ops: Vec<BitRow> = (0..nrows)
            .map(|r| {
                let mut row = BitRow::zeros(nrows);
                row.set(r);
                row
            })
            .collect();
        let mut pivots = vec![None; nrows];

        let mut rank = 0;
        for c in 0..ncols {
            let Some(p) = (rank..nrows).find(|&r| reduced[r].get(c)) else {
                continue;
            };
            reduced.swap(rank, p);
            ops.swap(rank, p);
            let (pivot_row, pivot_ops) = (reduced[rank].clone(), ops[rank].clone());
            for r in 0..nrows {
                if r != rank && reduced[r].get(c) {
                    reduced[r].xor_with(&pivot_row);
                    ops[r].xor_with(&pivot_ops);
                }
            }
            pivots[rank] = Some(c);
            rank += 1;
            if rank == nrows {
                break;
            }
        }
        Gf2System {
            nrows,
            ncols,
            ops,
            pivots,
        }
    }

    /// A solution of `A x = e_t` as the list of columns set in `x`.
    pub fn solve_unit(&self, t: usize) -> Option<Vec<usize>> {
        assert!(t < self.nrows, "target row out of range");
        let mut x = Vec::new();
        for r in 0..self.nrows {
            let rhs = self.ops[r].get(t);
            match self.pivots[r] {
                Some(c) => {
                    if rhs {
                        x.push(c);
                    }
                }
                None if rhs => return None,
                None => {}
            }
        }
        debug_assert!(x.iter().all(|&c| c < self.ncols));
        x.sort_unstable();
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &[Vec<u8>]) {
        let (nr, nc) = (a.len(), a[0].len());
        let sys = Gf2System::new(nr, nc, |r, c| a[r][c] == 1);
        for t in 0..nr {
            // brute force over all x
            let brute = (0u32..1 << nc).find(|x| {
                (0..nr).all(|r| {
                    let v = (0..nc).filter(|&c| x >> c & 1 == 1 && a[r][c] == 1).count() % 2;
                    v == usize::from(r == t)
                })
            });
            match sys.solve_unit(t) {
                Some(cols) => {
                    for (r, row) in a.iter().enumerate().take(nr) {
                        let v = cols.iter().filter(|&&c| row[c] == 1).count() % 2;
                        assert_eq!(v, usize::from(r == t));
                    }
                    assert!(brute.is_some());
                }
                None => assert!(brute.is_none(), "solver missed a solution for row {t}"),
            }
        }
    }

    #[test]
    fn agrees_with_enumeration() {
        check(&[vec![1, 0], vec![0, 1]]);
        check(&[vec![1, 1], vec![1, 1]]);
        check(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]);
        check(&[vec![0, 0, 1], vec![1, 0, 0]]);
        check(&[vec![1, 0, 1, 1], vec![0, 1, 1, 0], vec![1, 1, 0, 1]]);
    }

    #[test]
    fn wide_rows_cross_word_boundaries() {
        let n = 130;
        // A = identity with an extra 1 to the right; invertible, so every unit target solves
        let sys = Gf2System::new(n, n, |r, c| c == r || c == r + 1);
        for t in [0, 63, 64, 129] {
            let x = sys.solve_unit(t).unwrap();
            for r in 0..n {
                let v = x.iter().filter(|&&c| c == r || c == r + 1).count() % 2;
                assert_eq!(v, usize::from(r == t));
            }
        }
    }
}
