//! Shared fixtures and closed-form oracles for the five-spring network.

#![allow(dead_code)]

pub mod convex;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sweepcert_core::construction::build_process;
use sweepcert_core::network::{five_spring_network, validate_network, Loading};
use sweepcert_core::SweepingProcess;

pub fn fig1(a: [f64; 5], c_minus: [f64; 5], c_plus: [f64; 5], l1: f64) -> SweepingProcess {
    let net = validate_network(five_spring_network(a, c_minus, c_plus, Loading::new(0.0, l1))).unwrap();
    build_process(&net).unwrap()
}

pub fn fig1_sym(a: [f64; 5], c_plus: [f64; 5], l1: f64) -> SweepingProcess {
    fig1(a, c_plus.map(|x| -x), c_plus, l1)
}

pub fn random_stiffness<R: Rng>(rng: &mut R) -> [f64; 5] {
    core::array::from_fn(|_| rng.gen_range(0.2..5.0))
}

/// Printed terminal stress `A y*` of a scenario; `vertex` is 0 for the
/// vertex scenarios and 1 or 2 (lower, upper limit of the flipped spring)
/// otherwise.
pub fn printed_vertex(scenario: usize, vertex: usize, cm: &[f64; 5], cp: &[f64; 5]) -> [f64; 5] {
    let pick = |j: usize| if vertex == 1 { cm[j - 1] } else { cp[j - 1] };
    let p = |j: usize| cp[j - 1];
    let m = |j: usize| cm[j - 1];
    match scenario {
        1 => {
            let c3 = pick(3);
            [p(1), p(2), c3, p(1) - c3, p(2) + c3]
        }
        2 => {
            let c4 = pick(4);
            [p(1), p(2), p(1) - c4, c4, p(1) + p(2) - c4]
        }
        3 => {
            let c5 = pick(5);
            [p(1), p(2), -p(2) + c5, p(1) + p(2) - c5, c5]
        }
        4 => {
            let c1 = pick(1);
            [c1, -c1 + p(4) + p(5), c1 - p(4), p(4), p(5)]
        }
        5 => {
            let c2 = pick(2);
            [-c2 + p(4) + p(5), c2, -c2 + p(5), p(4), p(5)]
        }
        6 => {
            let c3 = pick(3);
            [c3 + p(4), -c3 + p(5), c3, p(4), p(5)]
        }
        7 => [p(1), -m(3) + p(5), m(3), -m(3) + p(1), p(5)],
        8 => [p(3) + p(4), p(2), p(3), p(4), p(2) + p(3)],
        _ => unreachable!(),
    }
}

/// Printed margin `ε0` of each scenario.
pub fn printed_eps0(scenario: usize, a: &[f64; 5], l1: f64) -> f64 {
    let [a1, a2, a3, a4, a5] = *a;
    match scenario {
        1..=3 => {
            let k = a4 * a5 + a3 * (a4 + a5);
            let h = |x: f64, y: f64| l1 * (x * k / (x * (a3 + y) + k)).sqrt();
            h(a2, a4).min(h(a1, a5))
        }
        4..=6 => {
            let k = a1 * a2 + a3 * (a1 + a2);
            let h = |x: f64, y: f64| l1 * (x * k / (x * (a3 + y) + k)).sqrt();
            h(a5, a1).min(h(a4, a2))
        }
        7 => (a2 * a5 / (a2 + a5))
            .sqrt()
            .min((a1 * a4 / (a1 + a4)).sqrt())
            .min((a2 * a3 * a4 / (a2 * a3 + a2 * a4 + a3 * a4)).sqrt())
            * l1,
        8 => (a1 * a4 / (a1 + a4))
            .sqrt()
            .min((a2 * a5 / (a2 + a5)).sqrt())
            .min((a1 * a3 * a5 / (a1 * a3 + a1 * a5 + a3 * a5)).sqrt())
            * l1,
        _ => unreachable!(),
    }
}

/// Printed correction `σ1 = σ2` of scenarios 1 to 6.
pub fn printed_sigma(scenario: usize, a: &[f64; 5]) -> f64 {
    let [a1, a2, a3, a4, a5] = *a;
    let p = a3 * a4 + a2 * (a3 + a4) + a3 * a5 + a4 * a5 + a1 * (a2 + a3 + a5);
    let raw = match scenario {
        1 => (a1 + a4) * (a2 + a5) * (a4 * a5 + a3 * (a4 + a5)) / (a4 * a5 * p),
        2 => (a3 * (a2 + a5) + a1 * (a2 + a3 + a5)) * (a4 * a5 + a3 * (a4 + a5)) / (a3 * a5 * p),
        3 => (a1 * (a2 + a3) + a3 * a4 + a2 * (a3 + a4)) * (a4 * a5 + a3 * (a4 + a5)) / (a3 * a4 * p),
        4 => (a2 * a3 + a1 * (a2 + a3)) * (a2 * (a3 + a4) + a4 * a5 + a3 * (a4 + a5)) / (a2 * a3 * p),
        5 => (a2 * a3 + a1 * (a2 + a3)) * (a4 * a5 + a1 * (a3 + a5) + a3 * (a4 + a5)) / (a1 * a3 * p),
        6 => (a2 * a3 + a1 * (a2 + a3)) * (a1 + a4) * (a2 + a5) / (a1 * a2 * p),
        _ => unreachable!(),
    };
    raw.max(1.0)
}

pub fn dvec(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// The printed `M`, `V_basis` and `D⊥` of the five-spring network; the
/// printed `V_basis` is given as `A V_basis`.
pub fn printed_pieces(a: &[f64; 5]) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 2, &[
        0.0, 0.0,
        1.0, 1.0,
        1.0, -1.0,
        0.0, 0.0,
    ]);
    #[rustfmt::skip]
    let av = [
        0.0, 1.0, 1.0,
        0.0, 1.0, -1.0,
        1.0, 0.0, 1.0,
        -1.0, 1.0, 0.0,
        1.0, 1.0, 0.0,
    ];
    let v = DMatrix::from_fn(5, 3, |i, j| av[3 * i + j] / a[i]);
    #[rustfmt::skip]
    let p = DMatrix::from_row_slice(5, 2, &[
        0.0, 1.0,
        0.0, -1.0,
        1.0, 1.0,
        -1.0, 0.0,
        1.0, 0.0,
    ]);
    (m, v, p)
}

/// The printed frame `[Rᵀ; D⊥ᵀ]` for the printed `D⊥`.
pub fn printed_frame() -> DMatrix<f64> {
    #[rustfmt::skip]
    let frame = DMatrix::from_row_slice(3, 5, &[
        1.0, 0.0, 1.0, 0.0, 1.0,
        0.0, 0.0, 1.0, -1.0, 1.0,
        1.0, -1.0, 1.0, 0.0, 0.0,
    ]);
    frame
}

/// Reference scenario rows: `I0` and the flip families.
pub fn printed_scenarios() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("{(+,1),(+,2)}", vec!["I1={(-,3)}", "I2={(+,3)}"]),
        ("{(+,1),(+,2)}", vec!["I1={(-,4)}", "I2={(+,4)}"]),
        ("{(+,1),(+,2)}", vec!["I1={(-,5)}", "I2={(+,5)}"]),
        ("{(+,4),(+,5)}", vec!["I1={(-,1)}", "I2={(+,1)}"]),
        ("{(+,4),(+,5)}", vec!["I1={(-,2)}", "I2={(+,2)}"]),
        ("{(+,4),(+,5)}", vec!["I1={(-,3)}", "I2={(+,3)}"]),
        ("{(+,1),(-,3),(+,5)}", vec![]),
        ("{(+,2),(+,3),(+,4)}", vec![]),
    ]
}
