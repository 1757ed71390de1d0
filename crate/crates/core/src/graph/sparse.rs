use nalgebra::DMatrix;

/// Square sparse matrix stored as one entry list per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    /// Rows may contain repeated columns; they are summed on access.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), dim, "row count must equal dimension");
        debug_assert!(rows.iter().flatten().all(|&(j, _)| j < dim));
        Self { dim, rows }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let dim = m.nrows();
        let rows = (0..dim)
            .map(|i| {
                (0..dim)
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self { dim, rows }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.rows.iter().flatten().all(|&(_, v)| v >= 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, &(_, v)| acc.max(v.abs()))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(_, v)| v).sum())
            .collect()
    }

    /// `out = self * x`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(j, v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// Multiplies row `i` by `scale[i]`.
    pub fn scale_rows(&self, scale: &[f64]) -> Self {
        let rows = self
            .rows
            .iter()
            .zip(scale)
            .map(|(row, &s)| row.iter().map(|&(j, v)| (j, v * s)).collect())
            .collect();
        Self {
            dim: self.dim,
            rows,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.scale_rows(&vec![s; self.dim])
    }

    /// `self + diag(d)`.
    pub fn add_diagonal(&self, d: &[f64]) -> Self {
        let mut rows = self.rows.clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if d[i] != 0.0 {
                row.push((i, d[i]));
            }
        }
        Self {
            dim: self.dim,
            rows,
        }
    }

    /// Strongly connected classes of the nonzero pattern (entry `(i, j)`
    /// read as "row `i` depends on `j`"), listed so that every class comes
    /// after all classes it depends on. Iterative Tarjan.
    pub fn strong_components(&self) -> Vec<Vec<usize>> {
        const UNSEEN: usize = usize::MAX;
        let n = self.dim;
        let mut index = vec![UNSEEN; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut classes = Vec::new();
        let mut next = 0;
        // (node, position in its row)
        let mut call: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if index[root] != UNSEEN {
                continue;
            }
            call.push((root, 0));
            while let Some(&(v, start)) = call.last() {
                if start == 0 && index[v] == UNSEEN {
                    index[v] = next;
                    low[v] = next;
                    next += 1;
                    stack.push(v);
                    on_stack[v] = true;
                }
                let row = &self.rows[v];
                let mut pos = start;
                let mut child = None;
                while pos < row.len() {
                    let (w, value) = row[pos];
                    pos += 1;
                    if value == 0.0 || w == v {
                        continue;
                    }
                    if index[w] == UNSEEN {
                        child = Some(w);
                        break;
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                }
                call.last_mut().expect("frame").1 = pos;
                if let Some(w) = child {
                    call.push((w, 0));
                    continue;
                }
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut class = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        class.push(w);
                        if w == v {
                            break;
                        }
                    }
                    class.sort_unstable();
                    classes.push(class);
                }
            }
        }
        classes
    }

    /// Principal submatrix on `nodes`, reindexed in the given order.
    pub fn submatrix(&self, nodes: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.dim];
        for (k, &i) in nodes.iter().enumerate() {
            local[i] = k;
        }
        let rows = nodes
            .iter()
            .map(|&i| {
                self.rows[i]
                    .iter()
                    .filter(|&&(j, _)| local[j] != usize::MAX)
                    .map(|&(j, v)| (local[j], v))
                    .collect()
            })
            .collect();
        Self {
            dim: nodes.len(),
            rows,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.dim];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                rows[j].push((i, v));
            }
        }
        Self {
            dim: self.dim,
            rows,
        }
    }
}
