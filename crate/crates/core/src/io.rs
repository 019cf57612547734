//! JSON forms of matrices, systems and representations.
//!
//! Matrices are arrays of rows. A real entry is a number; a complex entry
//! is `[re, im]`. Coefficients are trigonometric polynomials
//! `C + Σ_f (A_f cos(2πft/T) + B_f sin(2πft/T))`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::Coef;
use crate::hamiltonian::{LinearHamiltonianSystem, SturmSystem};
use crate::scalar::{CMat, RMat};

pub const SYSTEM_SCHEMA: &str = "equi-index/system/v1";
pub const REP_SCHEMA: &str = "equi-index/rep/v1";
pub const FRAME_SCHEMA: &str = "equi-index/frame/v1";
pub const ORBIT_SCHEMA: &str = "equi-index/orbit/v1";
pub const REPORT_SCHEMA: &str = "equi-index/report/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Real(Vec<Vec<f64>>),
    Complex(Vec<Vec<[f64; 2]>>),
}

fn shape<E>(rows: &[Vec<E>]) -> Result<(usize, usize)> {
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::DimensionMismatch("matrix rows have different lengths".into()));
    }
    Ok((rows.len(), c))
}

impl MatrixJson {
    pub fn from_real(m: &RMat<f64>) -> Self {
        Self::Real((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
    }

    pub fn from_complex(m: &CMat<f64>) -> Self {
        Self::Complex((0..m.nrows()).map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect()).collect())
    }

    pub fn to_complex(&self) -> Result<CMat<f64>> {
        match self {
            Self::Real(rows) => {
                let (r, c) = shape(rows)?;
                Ok(CMat::from_fn(r, c, |i, j| num_complex::Complex::new(rows[i][j], 0.0)))
            }
            Self::Complex(rows) => {
                let (r, c) = shape(rows)?;
                Ok(CMat::from_fn(r, c, |i, j| num_complex::Complex::new(rows[i][j][0], rows[i][j][1])))
            }
        }
    }

    /// Fails on a nonzero imaginary part.
    pub fn to_real(&self) -> Result<RMat<f64>> {
        let c = self.to_complex()?;
        if c.iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidInput("expected a real matrix".into()));
        }
        Ok(c.map(|z| z.re))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigCoefJson {
    pub constant: MatrixJson,
    #[serde(default)]
    pub cos: Vec<MatrixJson>,
    #[serde(default)]
    pub sin: Vec<MatrixJson>,
}

impl TrigCoefJson {
    pub fn constant(m: &RMat<f64>) -> Self {
        Self { constant: MatrixJson::from_real(m), cos: Vec::new(), sin: Vec::new() }
    }

    /// Checks every matrix is `size × size` and symmetric.
    pub fn to_coef(&self, size: usize, period: f64) -> Result<Coef<f64>> {
        self.build(size, period, true)
    }

    /// As [`Self::to_coef`] without the symmetry requirement (for `Q`).
    pub fn to_coef_any(&self, size: usize, period: f64) -> Result<Coef<f64>> {
        self.build(size, period, false)
    }

    fn build(&self, size: usize, period: f64, symmetric: bool) -> Result<Coef<f64>> {
        let c0 = self.constant.to_real()?;
        let cos = self.cos.iter().map(MatrixJson::to_real).collect::<Result<Vec<_>>>()?;
        let sin = self.sin.iter().map(MatrixJson::to_real).collect::<Result<Vec<_>>>()?;
        for m in std::iter::once(&c0).chain(&cos).chain(&sin) {
            if m.shape() != (size, size) {
                return Err(Error::DimensionMismatch(format!("coefficient must be {size}x{size}")));
            }
            if symmetric && (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                return Err(Error::InvalidInput("coefficient matrices must be symmetric".into()));
            }
        }
        Ok(Arc::new(move |t| {
            let w = std::f64::consts::TAU * t / period;
            let mut out = c0.clone();
            for (f, a) in cos.iter().enumerate() {
                out += a * (w * (f + 1) as f64).cos();
            }
            for (f, b) in sin.iter().enumerate() {
                out += b * (w * (f + 1) as f64).sin();
            }
            out
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemKind {
    /// `z' = J B(t) z` on `R^{2m}` in `(p, x)` order.
    Hamiltonian { b: TrigCoefJson },
    /// `-(P u' + Q u)' + Qᵀu' + R u = 0` on `R^m`.
    Sturm { p: TrigCoefJson, q: TrigCoefJson, r: TrigCoefJson },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub schema: String,
    pub m: usize,
    pub period: f64,
    #[serde(flatten)]
    pub kind: SystemKind,
}

impl SystemFile {
    fn check(&self) -> Result<()> {
        check_schema(&self.schema, SYSTEM_SCHEMA)?;
        if self.m == 0 || !(self.period > 0.0) {
            return Err(Error::InvalidInput("need m > 0 and period > 0".into()));
        }
        Ok(())
    }

    /// The Hamiltonian system, Legendre-reducing a Sturm file.
    pub fn hamiltonian(&self) -> Result<LinearHamiltonianSystem<f64>> {
        self.check()?;
        match &self.kind {
            SystemKind::Hamiltonian { b } => {
                Ok(LinearHamiltonianSystem::new(self.m, self.period, b.to_coef(2 * self.m, self.period)?))
            }
            SystemKind::Sturm { .. } => crate::hamiltonian::legendre_reduce(&self.sturm()?),
        }
    }

    pub fn sturm(&self) -> Result<SturmSystem<f64>> {
        self.check()?;
        match &self.kind {
            SystemKind::Sturm { p, q, r } => Ok(SturmSystem::new(
                self.m,
                self.period,
                p.to_coef(self.m, self.period)?,
                q.to_coef_any(self.m, self.period)?,
                r.to_coef(self.m, self.period)?,
            )),
            SystemKind::Hamiltonian { .. } => Err(Error::InvalidInput("a Sturm system is required".into())),
        }
    }

    pub fn is_sturm(&self) -> bool {
        matches!(self.kind, SystemKind::Sturm { .. })
    }
}

/// `D_n` generators: `M` (or `S` for Sturm systems) and `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepFile {
    pub schema: String,
    pub n: usize,
    pub m: MatrixJson,
    pub nn: MatrixJson,
}

impl RepFile {
    pub fn matrices(&self) -> Result<(CMat<f64>, CMat<f64>)> {
        check_schema(&self.schema, REP_SCHEMA)?;
        Ok((self.m.to_complex()?, self.nn.to_complex()?))
    }

    pub fn real_matrices(&self) -> Result<(RMat<f64>, RMat<f64>)> {
        check_schema(&self.schema, REP_SCHEMA)?;
        Ok((self.m.to_real()?, self.nn.to_real()?))
    }
}

/// A Lagrangian frame (columns) of `C^{2m}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameFile {
    pub schema: String,
    pub frame: MatrixJson,
}

impl FrameFile {
    pub fn frame(&self) -> Result<CMat<f64>> {
        check_schema(&self.schema, FRAME_SCHEMA)?;
        self.frame.to_complex()
    }
}

pub fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::InvalidInput(format!("schema '{found}' is not '{expected}'")));
    }
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}
