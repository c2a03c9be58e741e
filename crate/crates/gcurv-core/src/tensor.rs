//! Dense dynamically-ranked tensors with row-major storage.
//!
//! Components are addressed by multi-index; an optional single-pair symmetry
//! flag keeps mirrored entries consistent on writes. Variance is carried as
//! metadata so callers can sanity-check contractions.

/// Index variance of one tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Up,
    Down,
}

/// Declared symmetry between one pair of slots, enforced on `set`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Symmetric(usize, usize),
    Antisymmetric(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    variance: Vec<Variance>,
    data: Vec<T>,
    sym: Option<Symmetry>,
}

impl<T: Clone + Default> Tensor<T> {
    /// Zero-filled tensor; `dims` and `variance` must have equal length.
    pub fn new(dims: Vec<usize>, variance: Vec<Variance>) -> Self {
        assert_eq!(dims.len(), variance.len(), "one variance per slot");
        let len = dims.iter().product::<usize>().max(1);
        Tensor { dims, variance, data: vec![T::default(); len], sym: None }
    }

    /// Square tensor: `rank` slots of size `n` with uniform variance.
    pub fn square(n: usize, rank: usize, variance: Variance) -> Self {
        Tensor::new(vec![n; rank], vec![variance; rank])
    }

    pub fn with_symmetry(mut self, sym: Symmetry) -> Self {
        let (p, q) = match sym {
            Symmetry::Symmetric(p, q) | Symmetry::Antisymmetric(p, q) => (p, q),
        };
        assert!(p < self.dims.len() && q < self.dims.len() && p != q, "symmetry slots out of range");
        assert_eq!(self.dims[p], self.dims[q], "symmetric slots must have equal size");
        self.sym = Some(sym);
        self
    }
}

impl<T> Tensor<T> {
    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.dims.len(), "index rank mismatch");
        let mut off = 0;
        for (k, (&i, &n)) in idx.iter().zip(&self.dims).enumerate() {
            assert!(i < n, "index {i} out of range for slot {k} of size {n}");
            off = off * n + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    /// Iterate all multi-indices in row-major order.
    pub fn indices(&self) -> MultiIndexIter {
        MultiIndexIter { dims: self.dims.clone(), next: Some(vec![0; self.dims.len()]) }
    }
}

impl<T: Clone + std::ops::Neg<Output = T>> Tensor<T> {
    /// Write one component; if a symmetry pair is declared the mirrored
    /// component is written too (negated for the antisymmetric case).
    pub fn set(&mut self, idx: &[usize], value: T) {
        let off = self.offset(idx);
        self.data[off] = value.clone();
        match self.sym {
            None => {}
            Some(Symmetry::Symmetric(p, q)) => {
                let mut m = idx.to_vec();
                m.swap(p, q);
                let moff = self.offset(&m);
                self.data[moff] = value;
            }
            Some(Symmetry::Antisymmetric(p, q)) => {
                let mut m = idx.to_vec();
                m.swap(p, q);
                let moff = self.offset(&m);
                if moff != off {
                    self.data[moff] = -value;
                }
            }
        }
    }
}

impl Tensor<f64> {
    /// Largest absolute component, the workhorse of residual reporting.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Componentwise scaling.
    pub fn scale_by(mut self, f: f64) -> Tensor<f64> {
        for v in &mut self.data {
            *v *= f;
        }
        self
    }

    /// Componentwise difference, shapes must agree.
    pub fn sub(&self, other: &Tensor<f64>) -> Tensor<f64> {
        assert_eq!(self.dims, other.dims, "shape mismatch");
        let mut out = self.clone();
        out.sym = None;
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }
}

/// Row-major iterator over all multi-indices of a shape.
pub struct MultiIndexIter {
    dims: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl MultiIndexIter {
    pub fn new(dims: Vec<usize>) -> Self {
        let next = Some(vec![0; dims.len()]);
        MultiIndexIter { dims, next }
    }
}

impl Iterator for MultiIndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        if self.dims.iter().any(|&n| n == 0) {
            return None;
        }
        let mut succ = current.clone();
        for k in (0..self.dims.len()).rev() {
            succ[k] += 1;
            if succ[k] < self.dims[k] {
                self.next = Some(succ);
                return Some(current);
            }
            succ[k] = 0;
        }
        // Wrapped around: `current` was the last index.
        self.next = None;
        Some(current)
    }
}
