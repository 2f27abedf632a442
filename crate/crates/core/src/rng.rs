//! Reproducible random streams.
//!
//! A stream is identified by `(seed, stream_id)` and maps onto ChaCha8 with
//! the 64-bit stream selector, so every Monte Carlo trial can own a stream
//! that does not depend on scheduling.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// One CN(0, 1) draw: real and imaginary parts each N(0, 1/2).
pub fn sample_cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn fill_cn01_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| sample_cn01(rng)).collect();
    ComplexMatrix::from_row_major(rows, cols, data)
}

/// i.i.d. CN(0, 1) matrix drawn from the start of `stream`.
pub fn sample_cn01_matrix(rows: usize, cols: usize, stream: &RandomStream) -> ComplexMatrix {
    fill_cn01_matrix(rows, cols, &mut stream.rng())
}
