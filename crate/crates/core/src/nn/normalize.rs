use ndarray::{Array2, ArrayView2};

/// Running per-feature mean and variance (Welford) used to standardize
/// network inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    pub count: u64,
    pub mean: Vec<f64>,
    /// Sum of squared deviations; variance is `m2 / count`.
    pub m2: Vec<f64>,
}

const MIN_STD: f64 = 1e-2;
const CLIP: f64 = 5.0;

impl Normalizer {
    pub fn new(dim: usize) -> Self {
        Normalizer {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn update(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim(), "normalizer width mismatch");
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    pub fn variance(&self) -> Vec<f64> {
        if self.count == 0 {
            return vec![1.0; self.dim()];
        }
        self.m2.iter().map(|s| s / self.count as f64).collect()
    }

    /// `(x - mean) / max(std, 0.01)` clipped to `[-5, 5]`. Identity until the
    /// first update.
    pub fn normalize_into(&self, x: &[f64], out: &mut [f64]) {
        if self.count == 0 {
            out.copy_from_slice(x);
            return;
        }
        let n = self.count as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let std = (self.m2[i] / n).sqrt().max(MIN_STD);
            *o = ((x[i] - self.mean[i]) / std).clamp(-CLIP, CLIP);
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.normalize_into(x, &mut out);
        out
    }

    pub fn normalize_batch(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (row, mut o) in x.rows().into_iter().zip(out.rows_mut()) {
            let src = row.to_vec();
            self.normalize_into(&src, o.as_slice_mut().expect("row-major"));
        }
        out
    }
}
