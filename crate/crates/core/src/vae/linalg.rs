//! Dense row-major matrices and the few kernels the model needs.

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// out += self · x
    pub fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// out += selfᵀ · v
    pub fn tmatvec_add(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
    }

    /// self += a · bᵀ
    pub fn outer_add(&mut self, a: &[f64], b: &[f64]) {
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (r, bj) in row.iter_mut().zip(b) {
                *r += ai * bj;
            }
        }
    }

    /// out += column `j`
    pub fn column_add(&self, j: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o += self.data[i * self.cols + j];
        }
    }

    /// column `j` += a
    pub fn add_to_column(&mut self, j: usize, a: &[f64]) {
        for (i, ai) in a.iter().enumerate() {
            self.data[i * self.cols + j] += ai;
        }
    }

    pub fn add_vec(&mut self, a: &[f64]) {
        for (d, x) in self.data.iter_mut().zip(a) {
            *d += x;
        }
    }

    pub fn add_scaled(&mut self, other: &Matrix, k: f64) {
        for (d, x) in self.data.iter_mut().zip(&other.data) {
            *d += k * x;
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = p.iter().sum();
    for x in &mut p {
        *x /= s;
    }
    p
}
