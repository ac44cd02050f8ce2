//! Single-site spin algebra.
//!
//! Spin lengths are stored as the integer `2s`, so half-integer spins and
//! magnetic quantum numbers stay exact. Local basis index `d` corresponds to
//! `m = s - d`, i.e. `sz = diag(s, s - 1, ..., -s)`.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinLength {
    two_s: u32,
}

impl SpinLength {
    pub const ZERO: Self = Self::from_twice(0);
    pub const HALF: Self = Self::from_twice(1);
    pub const ONE: Self = Self::from_twice(2);
    pub const THREE_HALVES: Self = Self::from_twice(3);
    pub const TWO: Self = Self::from_twice(4);
    pub const FIVE_HALVES: Self = Self::from_twice(5);

    pub const fn from_twice(two_s: u32) -> Self {
        Self { two_s }
    }

    pub const fn twice(self) -> u32 {
        self.two_s
    }

    pub fn value(self) -> f64 {
        self.two_s as f64 / 2.0
    }

    /// Local Hilbert-space dimension `2s + 1`.
    pub const fn dim(self) -> usize {
        self.two_s as usize + 1
    }

    pub const fn is_zero(self) -> bool {
        self.two_s == 0
    }

    /// `s(s + 1)`
    pub fn casimir(self) -> f64 {
        let s = self.value();
        s * (s + 1.0)
    }

    /// Magnetic quantum number of local index `d`.
    pub fn m(self, d: usize) -> f64 {
        (self.two_s as f64 - 2.0 * d as f64) / 2.0
    }

    /// `2m` of local index `d`.
    pub fn two_m(self, d: usize) -> i64 {
        self.two_s as i64 - 2 * d as i64
    }

    /// `<m+1| s+ |m>` for local index `d` (zero at the top of the ladder).
    pub fn raise_coeff(self, d: usize) -> f64 {
        if d == 0 {
            return 0.0;
        }
        // 4(s(s+1) - m(m+1)) = 2s(2s+2) - 2m(2m+2)
        let ts = self.two_s as i64;
        let tm = self.two_m(d);
        (((ts * (ts + 2) - tm * (tm + 2)) as f64) / 4.0).sqrt()
    }

    /// `<m-1| s- |m>` for local index `d` (zero at the bottom of the ladder).
    pub fn lower_coeff(self, d: usize) -> f64 {
        if d + 1 >= self.dim() {
            return 0.0;
        }
        self.raise_coeff(d + 1)
    }
}

impl fmt::Display for SpinLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.two_s % 2 == 0 {
            write!(f, "{}", self.two_s / 2)
        } else {
            write!(f, "{}/2", self.two_s)
        }
    }
}

impl FromStr for SpinLength {
    type Err = Error;

    /// Accepts `"3/2"`, `"1"`, `"1.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidSpin(s.to_string());
        if let Some((num, den)) = t.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            let den: u32 = den.trim().parse().map_err(|_| bad())?;
            return match den {
                1 => Ok(Self::from_twice(2 * num)),
                2 => Ok(Self::from_twice(num)),
                _ => Err(bad()),
            };
        }
        let v: f64 = t.parse().map_err(|_| bad())?;
        let twice = 2.0 * v;
        if !v.is_finite() || v < 0.0 || (twice - twice.round()).abs() > 1e-12 {
            return Err(bad());
        }
        Ok(Self::from_twice(twice.round() as u32))
    }
}

/// Dense spin operators of one site (ħ = 1).
#[derive(Clone, Debug)]
pub struct LocalSpinMatrices {
    pub spin: SpinLength,
    pub sx: Mat<Complex64>,
    pub sy: Mat<Complex64>,
    pub sz: Mat<Complex64>,
    pub splus: Mat<Complex64>,
    pub sminus: Mat<Complex64>,
}

pub fn local_spin_matrices(spin: SpinLength) -> LocalSpinMatrices {
    let n = spin.dim();
    let zero = Complex64::new(0.0, 0.0);
    let sz = Mat::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(spin.m(i), 0.0)
        } else {
            zero
        }
    });
    // s+ maps index d to d - 1
    let splus = Mat::from_fn(n, n, |i, j| {
        if j >= 1 && i == j - 1 {
            Complex64::new(spin.raise_coeff(j), 0.0)
        } else {
            zero
        }
    });
    let sminus = Mat::from_fn(n, n, |i, j| splus[(j, i)].conj());
    let sx = Mat::from_fn(n, n, |i, j| (splus[(i, j)] + sminus[(i, j)]) * 0.5);
    let sy = Mat::from_fn(n, n, |i, j| {
        (splus[(i, j)] - sminus[(i, j)]) * Complex64::new(0.0, -0.5)
    });
    LocalSpinMatrices {
        spin,
        sx,
        sy,
        sz,
        splus,
        sminus,
    }
}
