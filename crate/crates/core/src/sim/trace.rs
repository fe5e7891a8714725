use crate::linalg::Vector;

/// Dense row-per-sample storage for a vector signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    dim: usize,
    data: Vec<f64>,
}

impl Trace {
    pub fn new(dim: usize) -> Self {
        Self { dim, data: Vec::new() }
    }

    pub fn with_capacity(dim: usize, samples: usize) -> Self {
        Self { dim, data: Vec::with_capacity(dim * samples) }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn row_vector(&self, k: usize) -> Vector {
        Vector::from_column_slice(self.row(k))
    }

    /// Samples of one component.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.data.iter().skip(i).step_by(self.dim.max(1)).copied().collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    /// `max_k ‖row_k‖₂`.
    pub fn max_norm(&self) -> f64 {
        self.rows().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    /// `max_k ‖row_k − other.row_k‖₂`; traces must have equal shape.
    pub fn max_distance(&self, other: &Trace) -> f64 {
        assert_eq!((self.dim, self.len()), (other.dim, other.len()), "trace shapes differ");
        self.rows()
            .zip(other.rows())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_components() {
        let mut t = Trace::new(2);
        t.push(&[1.0, 2.0]);
        t.push(&[3.0, 4.0]);
        assert_eq!(t.len(), 2);
        assert_eq!(t.row(1), &[3.0, 4.0]);
        assert_eq!(t.component(1), vec![2.0, 4.0]);
        assert_eq!(t.max_norm(), 5.0);
        let mut z = Trace::new(2);
        z.push(&[1.0, 2.0]);
        z.push(&[0.0, 0.0]);
        assert_eq!(t.max_distance(&z), 5.0);
    }
}
