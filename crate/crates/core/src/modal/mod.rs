//! Modal analysis of the state matrix.
//!
//! The step response is evaluated exactly through the eigenbasis,
//! `e^{At} = V e^{Λt} V⁻¹`, and the same basis splits the response into a sum
//! of exponentials: an initial-condition term, a step-input term and a
//! steady value.

mod classify;
mod eigen;

use nalgebra::{DMatrix, DVector};

pub use classify::{classify_modes, ClassifiedMode, ModeClass, ModeThresholds};
pub use eigen::{eigendecompose, eigendecompose_matrix, Eigenbasis, CONDITION_LIMIT};

use crate::error::{Error, Result};
use crate::network_model::StateSpaceModel;

/// Precomputed eigenbasis of a model for repeated exact evaluation.
#[derive(Clone, Debug)]
pub struct Propagator {
    basis: Eigenbasis,
    /// `C V`
    cv: DMatrix<f64>,
    /// `V⁻¹ B`
    vinv_b: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl Propagator {
    pub fn new(model: &StateSpaceModel) -> Result<Self> {
        let basis = eigendecompose(model)?;
        let cv = model.c() * &basis.vectors;
        let vinv_b = &basis.inverse * model.b();
        Ok(Self {
            basis,
            cv,
            vinv_b,
            d: model.d().clone(),
        })
    }

    pub fn basis(&self) -> &Eigenbasis {
        &self.basis
    }

    /// State-transition matrix `Φ(t) = V e^{Λt} V⁻¹`.
    pub fn transition(&self, t: f64) -> DMatrix<f64> {
        let exp = DMatrix::from_diagonal(&self.basis.values.map(|l| (l * t).exp()));
        &self.basis.vectors * exp * &self.basis.inverse
    }

    /// Response to the constant input `u` from the state `x0`.
    pub fn trajectory(&self, x0: &DVector<f64>, u: &DVector<f64>) -> Trajectory<'_> {
        Trajectory {
            propagator: self,
            z0: &self.basis.inverse * x0,
            zb: &self.vinv_b * u,
            du: &self.d * u,
        }
    }
}

/// Exact trajectory under a constant input, held in modal coordinates.
#[derive(Clone, Debug)]
pub struct Trajectory<'p> {
    propagator: &'p Propagator,
    z0: DVector<f64>,
    zb: DVector<f64>,
    du: DVector<f64>,
}

impl Trajectory<'_> {
    fn modal_state(&self, t: f64) -> DVector<f64> {
        let values = &self.propagator.basis.values;
        DVector::from_iterator(
            values.len(),
            values.iter().enumerate().map(|(i, &l)| {
                // A⁻¹(e^{At} − I) in modal coordinates is expm1(λt)/λ.
                (l * t).exp() * self.z0[i] + (l * t).exp_m1() / l * self.zb[i]
            }),
        )
    }

    pub fn state_at(&self, t: f64) -> DVector<f64> {
        &self.propagator.basis.vectors * self.modal_state(t)
    }

    pub fn output_at(&self, t: f64) -> DVector<f64> {
        &self.propagator.cv * self.modal_state(t) + &self.du
    }
}

/// Steady state under constant inputs, `x(0) = -A⁻¹ B u0`.
pub fn initial_state(model: &StateSpaceModel, u0: &DVector<f64>) -> Result<DVector<f64>> {
    let bu = model.b() * u0;
    let lu = model.a().clone().lu();
    let singular = || Error::Singular("state matrix is not invertible".into());
    let mut x = -lu.solve(&bu).ok_or_else(singular)?;
    // Iterative refinement keeps the residual small relative to |Bu| on stiff models.
    for _ in 0..2 {
        let r = model.a() * &x + &bu;
        x -= lu.solve(&r).ok_or_else(singular)?;
    }
    let residual = (model.a() * &x + &bu).norm();
    if residual > 1e-10 * bu.norm() {
        return Err(Error::Singular(format!(
            "steady state residual {residual:.3e} is too large"
        )));
    }
    Ok(x)
}

/// Output series `y(t) = C[e^{At}x0 + A⁻¹(e^{At} − I)Bu] + Du` at each time.
pub fn step_response(
    model: &StateSpaceModel,
    u: &DVector<f64>,
    x0: &DVector<f64>,
    times: &[f64],
) -> Result<Vec<DVector<f64>>> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(format!("negative or non-finite time {t}")));
    }
    let propagator = Propagator::new(model)?;
    let trajectory = propagator.trajectory(x0, u);
    Ok(times.iter().map(|&t| trajectory.output_at(t)).collect())
}

/// Response written as `y(t) = Σ_i (init_i + input_i) e^{λ_i t} + steady`.
#[derive(Clone, Debug)]
pub struct ModalDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub time_constants: Vec<f64>,
    /// Output-by-mode coefficients from the initial state, `C V diag(V⁻¹ x0)`.
    pub init_amplitudes: DMatrix<f64>,
    /// Output-by-mode coefficients from the step input, `C A⁻¹ V diag(V⁻¹ B u)`.
    pub input_amplitudes: DMatrix<f64>,
    /// `(-C A⁻¹ B + D) u`
    pub steady_value: DVector<f64>,
    pub output_names: Vec<String>,
}

impl ModalDecomposition {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Total coefficient of `e^{λ_i t}` on one output.
    pub fn amplitude(&self, output: usize, mode: usize) -> f64 {
        self.init_amplitudes[(output, mode)] + self.input_amplitudes[(output, mode)]
    }

    /// Reconstructs the outputs at time `t` from the exponential terms.
    pub fn evaluate(&self, t: f64) -> DVector<f64> {
        let weights = DVector::from_iterator(self.n_modes(), self.eigenvalues.iter().map(|&l| (l * t).exp()));
        (&self.init_amplitudes + &self.input_amplitudes) * weights + &self.steady_value
    }
}

pub fn modal_decomposition(model: &StateSpaceModel, u: &DVector<f64>, x0: &DVector<f64>) -> Result<ModalDecomposition> {
    let propagator = Propagator::new(model)?;
    modal_decomposition_with(&propagator, model, u, x0)
}

pub(crate) fn modal_decomposition_with(
    propagator: &Propagator,
    model: &StateSpaceModel,
    u: &DVector<f64>,
    x0: &DVector<f64>,
) -> Result<ModalDecomposition> {
    let basis = propagator.basis();
    if let Some(l) = basis.values.iter().find(|&&l| l >= 0.0) {
        return Err(Error::Spectrum(format!("non-decaying mode with eigenvalue {l:.6e}")));
    }
    let z0 = &basis.inverse * x0;
    let zb = &propagator.vinv_b * u;
    let n = basis.len();
    // A⁻¹ V = V Λ⁻¹
    let init = DMatrix::from_fn(model.n_outputs(), n, |o, i| propagator.cv[(o, i)] * z0[i]);
    let input = DMatrix::from_fn(model.n_outputs(), n, |o, i| {
        propagator.cv[(o, i)] * zb[i] / basis.values[i]
    });
    let steady_value = model.steady_output(u)?;
    Ok(ModalDecomposition {
        eigenvalues: basis.values.iter().copied().collect(),
        eigenvectors: basis.vectors.clone(),
        time_constants: basis.time_constants(),
        init_amplitudes: init,
        input_amplitudes: input,
        steady_value,
        output_names: model.output_names().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network_model::InputSpec;
    use approx::assert_relative_eq;

    fn first_order(g: f64, c: f64) -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_element(1, 1, -g / c),
            DMatrix::from_row_slice(1, 2, &[g / c, 1.0 / c]),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 2),
            vec!["air".into()],
            vec![InputSpec::temperature("T_o"), InputSpec::flow("P", "air")],
            vec!["air".into()],
        )
        .unwrap()
    }

    #[test]
    fn initial_state_cases() {
        let m = first_order(100.0, 1e6);
        let x = initial_state(&m, &DVector::from_vec(vec![0.0, 0.0])).unwrap();
        assert_eq!(x[0], 0.0);
        let x = initial_state(&m, &DVector::from_vec(vec![0.0, 500.0])).unwrap();
        assert_relative_eq!(x[0], 5.0, max_relative = 1e-14);
    }

    #[test]
    fn first_order_heating_closed_form() {
        let m = first_order(100.0, 1e6);
        let u = DVector::from_vec(vec![0.0, 1000.0]);
        let x0 = DVector::zeros(1);
        let y = step_response(&m, &u, &x0, &[0.0, 1e4]).unwrap();
        assert_eq!(y[0][0], 0.0);
        assert_relative_eq!(y[1][0], 10.0 * (1.0 - (-1.0f64).exp()), max_relative = 1e-13);
        assert!((y[1][0] - 6.3212).abs() < 1e-4);
    }

    #[test]
    fn negative_time_rejected() {
        let m = first_order(100.0, 1e6);
        let z = DVector::zeros(2);
        assert!(step_response(&m, &z, &DVector::zeros(1), &[-1.0]).is_err());
    }

    #[test]
    fn first_order_decomposition() {
        let m = first_order(100.0, 1e6);
        let d = modal_decomposition(&m, &DVector::from_vec(vec![0.0, 1000.0]), &DVector::zeros(1)).unwrap();
        assert_eq!(d.n_modes(), 1);
        assert_relative_eq!(d.input_amplitudes[(0, 0)], -10.0, max_relative = 1e-13);
        assert_eq!(d.init_amplitudes[(0, 0)], 0.0);
        assert_relative_eq!(d.steady_value[0], 10.0, max_relative = 1e-13);

        let zero = modal_decomposition(&m, &DVector::zeros(2), &DVector::zeros(1)).unwrap();
        assert_eq!(zero.amplitude(0, 0), 0.0);
        assert_eq!(zero.steady_value[0], 0.0);
    }

    #[test]
    fn transition_at_zero_is_identity() {
        let p = Propagator::new(&first_order(10.0, 1e3)).unwrap();
        assert_relative_eq!(p.transition(0.0)[(0, 0)], 1.0, max_relative = 1e-15);
    }
}
