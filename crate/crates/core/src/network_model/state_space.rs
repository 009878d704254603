use nalgebra::{DMatrix, DVector};

use super::circuit::{InputKind, InputSpec};
use crate::error::{Error, Result};

/// Relative singular-value floor below which the state matrix is treated as singular.
const SINGULAR_RCOND: f64 = 1e-14;

/// Linear time-invariant model `x' = Ax + Bu`, `y = Cx + Du`.
#[derive(Clone, Debug)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    state_names: Vec<String>,
    inputs: Vec<InputSpec>,
    output_names: Vec<String>,
}

impl StateSpaceModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        state_names: Vec<String>,
        inputs: Vec<InputSpec>,
        output_names: Vec<String>,
    ) -> Result<Self> {
        let ns = state_names.len();
        let nu = inputs.len();
        let ny = output_names.len();
        if ns == 0 {
            return Err(Error::InvalidArgument("model has no states".into()));
        }
        let dims_ok = a.shape() == (ns, ns) && b.shape() == (ns, nu) && c.shape() == (ny, ns) && d.shape() == (ny, nu);
        if !dims_ok {
            return Err(Error::InvalidArgument(format!(
                "inconsistent dimensions: A {:?}, B {:?}, C {:?}, D {:?} for {ns} states, {nu} inputs, {ny} outputs",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        if a.iter()
            .chain(b.iter())
            .chain(c.iter())
            .chain(d.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument(
                "model matrices contain non-finite values".into(),
            ));
        }
        let sv = a.clone().singular_values();
        let (smin, smax) = (sv.min(), sv.max());
        if smax == 0.0 || smin / smax < SINGULAR_RCOND {
            return Err(Error::Singular(format!(
                "state matrix is not invertible (singular value ratio {:.3e})",
                if smax == 0.0 { 0.0 } else { smin / smax }
            )));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            state_names,
            inputs,
            output_names,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }
    pub fn inputs(&self) -> &[InputSpec] {
        &self.inputs
    }
    pub fn input_names(&self) -> impl Iterator<Item = &str> {
        self.inputs.iter().map(|i| i.name.as_str())
    }
    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }
    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }
    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }
    pub fn n_outputs(&self) -> usize {
        self.output_names.len()
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|i| i.name == name)
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.output_names.iter().position(|o| o == name)
    }

    pub fn input_kind(&self, j: usize) -> InputKind {
        self.inputs[j].kind
    }

    /// Same dynamics observed through different outputs.
    pub fn with_outputs(&self, c: DMatrix<f64>, d: DMatrix<f64>, output_names: Vec<String>) -> Result<Self> {
        let ny = output_names.len();
        if c.shape() != (ny, self.n_states()) || d.shape() != (ny, self.n_inputs()) {
            return Err(Error::InvalidArgument(format!(
                "output matrices {:?}/{:?} do not fit {ny} outputs",
                c.shape(),
                d.shape()
            )));
        }
        Ok(Self {
            c,
            d,
            output_names,
            ..self.clone()
        })
    }

    /// Builds an input vector from named values; unnamed inputs are zero.
    pub fn input_vector<'a>(&self, values: impl IntoIterator<Item = (&'a str, f64)>) -> Result<DVector<f64>> {
        let mut u = DVector::zeros(self.n_inputs());
        for (name, value) in values {
            let j = self
                .input_index(name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown input {name:?}")))?;
            u[j] = value;
        }
        Ok(u)
    }

    /// Solves `A x = rhs`.
    pub(crate) fn solve_a(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.a
            .clone()
            .lu()
            .solve(rhs)
            .ok_or_else(|| Error::Singular("state matrix is not invertible".into()))
    }

    /// Steady-state output for constant inputs, `y = (-C A⁻¹ B + D) u`.
    pub fn steady_output(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let bu = &self.b * u;
        let x = self.solve_a(&DMatrix::from_column_slice(bu.len(), 1, bu.as_slice()))?;
        Ok(-(&self.c * x.column(0)) + &self.d * u)
    }
}
