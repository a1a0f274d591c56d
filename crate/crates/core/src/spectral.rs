//! Cached FFT plans shared by every module.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub(crate) struct FftPair {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
    pub scratch_len: usize,
}

impl FftPair {
    pub fn scratch(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.scratch_len]
    }

    pub fn forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    pub fn inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, scratch);
    }
}

pub(crate) fn plans(n: usize) -> FftPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, FftPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(n);
            let inverse = planner.plan_fft_inverse(n);
            let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
            FftPair { forward, inverse, scratch_len }
        })
        .clone()
}

/// `exp(i angle)`.
#[inline]
pub(crate) fn cis(angle: f64) -> Complex64 {
    let (s, c) = angle.sin_cos();
    Complex64::new(c, s)
}

/// Spectral shift `f(y) -> f(y - shift)` of a periodic column, in place.
pub(crate) fn shift_column(column: &mut [Complex64], wavenumbers: &[f64], shift: f64, fft: &FftPair) {
    let mut scratch = fft.scratch();
    fft.forward(column, &mut scratch);
    let norm = 1.0 / column.len() as f64;
    for (v, &k) in column.iter_mut().zip(wavenumbers) {
        *v *= cis(-k * shift) * norm;
    }
    fft.inverse(column, &mut scratch);
}
