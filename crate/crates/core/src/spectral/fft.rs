//! Multi-dimensional real-to-complex transforms built from 1D plans.
//!
//! Physical samples are stored row-major with the last axis fastest. The
//! spectral array keeps the non-redundant half of the last axis
//! (`n / 2 + 1` bins) and the full range on every other axis.

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

/// Column batch size for strided passes.
const BATCH: usize = 32;

pub(crate) struct Transform {
    dim: usize,
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl Transform {
    pub(crate) fn new(dim: usize, n: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        Self {
            dim,
            n,
            r2c: real.plan_fft_forward(n),
            c2r: real.plan_fft_inverse(n),
            fwd: cplx.plan_fft_forward(n),
            inv: cplx.plan_fft_inverse(n),
        }
    }

    fn half(&self) -> usize {
        self.n / 2 + 1
    }

    fn lines(&self) -> usize {
        self.n.pow(self.dim as u32 - 1)
    }

    pub(crate) fn physical_len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub(crate) fn spectral_len(&self) -> usize {
        self.lines() * self.half()
    }

    /// Unnormalized forward transform.
    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.physical_len());
        let (n, nh) = (self.n, self.half());
        let mut out = vec![Complex64::default(); self.spectral_len()];
        let mut line = self.r2c.make_input_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for (src, dst) in values.chunks_exact(n).zip(out.chunks_exact_mut(nh)) {
            line.copy_from_slice(src);
            self.r2c
                .process_with_scratch(&mut line, dst, &mut scratch)
                .expect("r2c lengths are fixed by the plan");
        }
        for axis in (0..self.dim - 1).rev() {
            self.strided_pass(&mut out, axis, &self.fwd);
        }
        out
    }

    /// Inverse transform normalized so that `inverse(forward(f)) == f`.
    pub(crate) fn inverse(&self, spectral: &[Complex64]) -> Vec<f64> {
        assert_eq!(spectral.len(), self.spectral_len());
        let (n, nh) = (self.n, self.half());
        let mut work = spectral.to_vec();
        for axis in 0..self.dim - 1 {
            self.strided_pass(&mut work, axis, &self.inv);
        }
        let scale = 1.0 / self.physical_len() as f64;
        let mut out = vec![0.0; self.physical_len()];
        let mut scratch = self.c2r.make_scratch_vec();
        for (src, dst) in work.chunks_exact_mut(nh).zip(out.chunks_exact_mut(n)) {
            // Self-conjugate bins of a real line carry no imaginary part.
            src[0].im = 0.0;
            src[nh - 1].im = 0.0;
            self.c2r
                .process_with_scratch(src, dst, &mut scratch)
                .expect("c2r lengths are fixed by the plan");
            for v in dst.iter_mut() {
                *v *= scale;
            }
        }
        out
    }

    /// Complex FFT along `axis` (< dim - 1) of the spectral array.
    fn strided_pass(&self, data: &mut [Complex64], axis: usize, plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let inner = n.pow((self.dim - 2 - axis) as u32) * self.half();
        let block = n * inner;
        let mut buf = vec![Complex64::default(); BATCH * n];
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        for chunk in data.chunks_exact_mut(block) {
            let mut start = 0;
            while start < inner {
                let width = BATCH.min(inner - start);
                let buf = &mut buf[..width * n];
                for j in 0..n {
                    let row = &chunk[j * inner + start..j * inner + start + width];
                    for (b, v) in row.iter().enumerate() {
                        buf[b * n + j] = *v;
                    }
                }
                plan.process_with_scratch(buf, &mut scratch);
                for j in 0..n {
                    let row = &mut chunk[j * inner + start..j * inner + start + width];
                    for (b, v) in row.iter_mut().enumerate() {
                        *v = buf[b * n + j];
                    }
                }
                start += width;
            }
        }
    }
}
