//! Orthonormal type-I discrete sine transform, the eigenbasis of the
//! Dirichlet 3-point Laplacian.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// `y_k = sqrt(2/(m+1)) sum_i x_i sin(pi i k / (m+1))`, an involution.
#[derive(Clone)]
pub struct Dst1<T: Real> {
    m: usize,
    fft: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Real> std::fmt::Debug for Dst1<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dst1").field("m", &self.m).finish()
    }
}

impl<T: Real> Dst1<T> {
    pub fn new(m: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (m + 1));
        let scale = (T::lit(2.0) / T::from_usize(m + 1).unwrap()).sqrt();
        Self { m, fft, scale }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Transforms `m` values read with `stride` starting at `data[0]`, in place.
    fn apply_strided(&self, data: &mut [T], stride: usize, buf: &mut Vec<Complex<T>>) {
        let m = self.m;
        let len = 2 * (m + 1);
        buf.clear();
        buf.resize(len, Complex::new(T::zero(), T::zero()));
        for i in 0..m {
            let v = data[i * stride];
            buf[i + 1].re = v;
            buf[len - 1 - i].re = -v;
        }
        self.fft.process(buf);
        let half = -self.scale / T::lit(2.0);
        for k in 0..m {
            data[k * stride] = buf[k + 1].im * half;
        }
    }

    pub fn apply(&self, data: &mut [T]) {
        let mut buf = Vec::new();
        self.apply_strided(data, 1, &mut buf);
    }
}

/// Tensor-product DST over `n` lateral axes of `m` points each.
#[derive(Clone, Debug)]
pub struct SineTransform<T: Real> {
    n: usize,
    dst: Dst1<T>,
}

impl<T: Real> SineTransform<T> {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, dst: Dst1::new(m) }
    }

    pub fn per_axis(&self) -> usize {
        self.dst.len()
    }

    pub fn len(&self) -> usize {
        self.dst.len().pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-place forward (= inverse) transform of a flat vector, axis 1 fastest.
    pub fn apply(&self, data: &mut [T]) {
        let m = self.dst.len();
        let mut buf = Vec::with_capacity(2 * (m + 1));
        if self.n == 1 {
            self.dst.apply_strided(data, 1, &mut buf);
        } else {
            for row in data.chunks_mut(m) {
                self.dst.apply_strided(row, 1, &mut buf);
            }
            for col in 0..m {
                self.dst.apply_strided(&mut data[col..], m, &mut buf);
            }
        }
    }

    /// Eigenvalues of the unit-spacing Dirichlet Laplacian `-Delta_h` per mode.
    pub fn laplacian_eigenvalues(&self) -> Vec<T> {
        let m = self.dst.len();
        let one_d: Vec<T> = (1..=m)
            .map(|k| {
                let th = T::lit(std::f64::consts::PI) * T::from_usize(k).unwrap()
                    / T::from_usize(m + 1).unwrap();
                T::lit(2.0) - T::lit(2.0) * th.cos()
            })
            .collect();
        if self.n == 1 {
            one_d
        } else {
            let mut out = Vec::with_capacity(m * m);
            for k2 in 0..m {
                for k1 in 0..m {
                    out.push(one_d[k1] + one_d[k2]);
                }
            }
            out
        }
    }
}
