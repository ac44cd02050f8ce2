//! Vectors in a [`ProductBasis`] and single-site spin expectations.

use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::ProductBasis;
use crate::error::{Error, Result};
use crate::operator::{Scalar, SparseHermitianOperator};

#[derive(Clone, Debug, PartialEq)]
pub enum Amplitudes {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Amplitudes {
    pub fn len(&self) -> usize {
        match self {
            Self::Real(v) => v.len(),
            Self::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Complex64 {
        match self {
            Self::Real(v) => Complex64::new(v[i], 0.0),
            Self::Complex(v) => v[i],
        }
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            Self::Real(v) => v.iter().map(|x| x.to_complex()).collect(),
            Self::Complex(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct State {
    basis: Arc<ProductBasis>,
    amps: Amplitudes,
}

impl State {
    pub fn new(basis: Arc<ProductBasis>, amps: Amplitudes) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: amps.len(),
            });
        }
        Ok(Self { basis, amps })
    }

    pub fn basis(&self) -> &Arc<ProductBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &Amplitudes {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.amps.get(i).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `(<s_x>, <s_y>, <s_z>)` of one site.
    pub fn site_expectation(&self, site: usize) -> [f64; 3] {
        let b = &self.basis;
        let spin = b.spins()[site];
        let stride = b.stride(site);
        let mut sz = 0.0;
        let mut splus = Complex64::new(0.0, 0.0);
        for i in 0..self.dim() {
            let f = b.full_index(i);
            let d = b.digit(f, site);
            let a = self.amps.get(i);
            sz += a.norm_sqr() * spin.m(d);
            // <psi| s+ |psi> picks up conj(a_{f'}) a_f with f' = raised f
            let up = spin.raise_coeff(d);
            if up != 0.0 {
                if let Some(j) = b.index_of(f - stride) {
                    splus += self.amps.get(j).conj() * a * up;
                }
            }
        }
        [splus.re, splus.im, sz]
    }

    /// Embedding into the unrestricted product space.
    pub fn to_full(&self) -> State {
        if !self.basis.is_sector() {
            return self.clone();
        }
        let full = Arc::new(self.basis.to_full());
        let amps = match &self.amps {
            Amplitudes::Real(v) => {
                let mut out = vec![0.0; full.dim()];
                for (i, x) in v.iter().enumerate() {
                    out[self.basis.full_index(i)] = *x;
                }
                Amplitudes::Real(out)
            }
            Amplitudes::Complex(v) => {
                let mut out = vec![Complex64::new(0.0, 0.0); full.dim()];
                for (i, x) in v.iter().enumerate() {
                    out[self.basis.full_index(i)] = *x;
                }
                Amplitudes::Complex(out)
            }
        };
        State { basis: full, amps }
    }
}

/// `<psi| op |psi>` (real part; exact for Hermitian `op`).
pub fn expectation(state: &State, op: &SparseHermitianOperator) -> Result<f64> {
    if op.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: state.dim(),
        });
    }
    let value = match (op, state.amplitudes()) {
        (SparseHermitianOperator::Real(m), Amplitudes::Real(x)) => {
            let mut y = vec![0.0; x.len()];
            m.matvec(x, &mut y);
            crate::operator::dot(x, &y)
        }
        _ => {
            let x = state.amplitudes().to_complex();
            let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
            op.matvec_complex(&x, &mut y);
            crate::operator::dot(&x, &y).re
        }
    };
    Ok(value)
}
