#![allow(dead_code)]

use cvqkd_core::gaussian::{
    apply_symplectic, beam_splitter, phase_rotation, squeezer, BeamSplitterConvention,
    GaussianState, SymplecticMatrix,
};
use cvqkd_core::linalg::Matrix;
use proptest::prelude::*;

/// One elementary symplectic operation on an `n`-mode system.
#[derive(Debug, Clone)]
pub enum Gate {
    Split { t: f64, a: usize, b: usize, reflect: bool },
    Squeeze { mode: usize, r: f64 },
    Rotate { mode: usize, theta: f64 },
}

impl Gate {
    pub fn matrix(&self, n: usize) -> SymplecticMatrix {
        match *self {
            Gate::Split { t, a, b, reflect } => {
                let conv = if reflect {
                    BeamSplitterConvention::Reflection
                } else {
                    BeamSplitterConvention::Rotation
                };
                beam_splitter(n, t, a % n, (a + 1 + b % (n - 1)) % n, conv).unwrap()
            }
            Gate::Squeeze { mode, r } => squeezer(n, mode % n, r).unwrap(),
            Gate::Rotate { mode, theta } => phase_rotation(n, mode % n, theta).unwrap(),
        }
    }
}

pub fn gate() -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0.0..=1.0f64, 0..8usize, 0..8usize, any::<bool>())
            .prop_map(|(t, a, b, reflect)| Gate::Split { t, a, b, reflect }),
        (0..8usize, -1.0..1.0f64).prop_map(|(mode, r)| Gate::Squeeze { mode, r }),
        (0..8usize, -3.2..3.2f64).prop_map(|(mode, theta)| Gate::Rotate { mode, theta }),
    ]
}

pub fn circuit(n: usize, gates: &[Gate]) -> SymplecticMatrix {
    gates
        .iter()
        .fold(SymplecticMatrix::identity(n), |acc, g| g.matrix(n).compose(&acc).unwrap())
}

/// Thermal product state with the given variances, scrambled by `gates`.
pub fn physical_state(variances: &[f64], gates: &[Gate]) -> GaussianState {
    let diag: Vec<f64> = variances.iter().flat_map(|&v| [v, v]).collect();
    let n = variances.len();
    let thermal = GaussianState::new(Matrix::from_diagonal(&diag)).unwrap();
    apply_symplectic(&thermal, &circuit(n, gates)).unwrap()
}

pub fn physical_state_strategy(
    max_modes: usize,
) -> impl Strategy<Value = (Vec<f64>, Vec<Gate>)> {
    (2..=max_modes).prop_flat_map(|n| {
        (
            proptest::collection::vec(1.0..6.0f64, n),
            proptest::collection::vec(gate(), 0..12),
        )
    })
}
