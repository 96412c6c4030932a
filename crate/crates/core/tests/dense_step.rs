mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::{dense_laplacian, max_abs_diff, tanh_sinh, to_vec, weight_oracle};
use fracphase_core::scheme::{HistoryMode, SchemeConfig, SchemeKind, Solver};
use fracphase_core::spectral::{BoundaryCondition, Domain, Field, SpatialGrid};
use fracphase_core::timegrid::{weights, TimeMesh, WeightFamily};
use nalgebra::{DMatrix, DVector};

fn grid8() -> Arc<SpatialGrid> {
    SpatialGrid::new(8, 8, Domain::square(0.0, 2.0 * PI), BoundaryCondition::Periodic).unwrap()
}

/// Solve one step of the scheme by assembling the coupled `(φ', R')` system densely.
fn dense_step(
    scheme: SchemeKind,
    cfg: &SchemeConfig,
    mesh: &TimeMesh,
    lap: &DMatrix<f64>,
    cell: f64,
    phis: &[DVector<f64>],
    rs: &[f64],
) -> (DVector<f64>, f64) {
    let n = phis.len() - 1;
    let alpha = cfg.alpha();
    let tau = mesh.tau(n + 1);
    let w = weights(scheme.family(), mesh, n, alpha).unwrap();
    let c = w.local() / tau;
    let mut hist = DVector::zeros(phis[0].len());
    for k in 0..n {
        hist += (&phis[k + 1] - &phis[k]) * (w.history(k) / mesh.tau(k + 1));
    }
    let (phi, r) = (&phis[n], rs[n]);
    let cn = scheme.is_crank_nicolson();
    let (phi_bar, r_bar) = if cn && n > 0 {
        let e = 0.5 * tau / mesh.tau(n);
        (phi * (1.0 + e) - &phis[n - 1] * e, (1.0 + e) * r - e * rs[n - 1])
    } else {
        (phi.clone(), r)
    };
    let lap_bar = lap * &phi_bar;
    let gamma = phi_bar.map(|p| p * p * p - p) - &lap_bar * cfg.theta2 + hist;

    let len = phi.len();
    let (impl_coef, expl_coef) = if cn {
        (0.5 * cfg.eps2, 0.5 * cfg.eps2)
    } else {
        (cfg.eps2, 0.0)
    };
    let mut a = DMatrix::zeros(len + 1, len + 1);
    let mut b = DVector::zeros(len + 1);
    let op = DMatrix::identity(len, len) * c - lap * impl_coef;
    a.view_mut((0, 0), (len, len)).copy_from(&op);
    // field equation: the auxiliary ratio multiplies γ
    let (r_col, r_const) = if cn {
        (1.0 / (2.0 * r_bar), r / (2.0 * r_bar))
    } else {
        (1.0 / r, 0.0)
    };
    for i in 0..len {
        a[(i, len)] = gamma[i] * r_col;
    }
    let rhs = phi * c + (lap * phi) * expl_coef - lap_bar * cfg.theta2 - &gamma * r_const;
    b.rows_mut(0, len).copy_from(&rhs);
    // scalar equation: R' - R = (γ, φ' - φ) / (2 R̄)
    for j in 0..len {
        a[(len, j)] = -cell * gamma[j] / (2.0 * r_bar);
    }
    a[(len, len)] = 1.0;
    b[len] = r - cell * gamma.dot(phi) / (2.0 * r_bar);
    let z = a.lu().solve(&b).expect("nonsingular step system");
    (z.rows(0, len).into_owned(), z[len])
}

fn compare_with_dense(scheme: SchemeKind, theta2: f64, steps: usize) {
    let grid = grid8();
    let mesh = Arc::new(TimeMesh::uniform(steps, 0.1 * steps as f64).unwrap());
    let cfg = SchemeConfig::new(scheme, 0.5, 0.1)
        .unwrap()
        .with_theta2(theta2)
        .unwrap()
        .with_c0(1.0)
        .with_history(HistoryMode::Direct);
    let solver = Solver::new(cfg.clone(), grid.clone(), mesh.clone()).unwrap();
    let phi0 = Field::from_fn(&grid, |x, y| 0.1 * x.sin() * y.cos());
    let mut state = solver.init_state(phi0.clone()).unwrap();
    let lap = dense_laplacian(&grid);
    let cell = grid.cell_area();

    // R⁰ from the dense operators
    let v0 = to_vec(&phi0);
    let bulk: f64 = v0.iter().map(|p| 0.25 * (p * p - 1.0).powi(2)).sum::<f64>() * cell;
    let grad = -cell * v0.dot(&(&lap * &v0));
    let r0 = (bulk + 0.5 * theta2 * grad + 1.0).sqrt();
    assert!((state.r - r0).abs() <= 1e-13 * r0, "R0 {} vs {r0}", state.r);

    let mut phis = vec![v0];
    let mut rs = vec![state.r];
    for _ in 0..steps {
        let (phi_d, r_d) = dense_step(scheme, &cfg, &mesh, &lap, cell, &phis, &rs);
        solver.step(&mut state).unwrap();
        let err = max_abs_diff(&phi_d, state.phi.values());
        let scale = phi_d.amax();
        assert!(
            err <= 1e-11 * scale,
            "{scheme} step {}: field differs by {err:e}",
            state.n
        );
        assert!(
            (state.r - r_d).abs() <= 1e-11 * r_d.abs(),
            "{scheme} step {}: R {} vs {r_d}",
            state.n,
            state.r
        );
        phis.push(to_vec(&state.phi));
        rs.push(state.r);
    }
}

#[test]
fn l1_step_matches_dense_solve() {
    compare_with_dense(SchemeKind::L1, 0.0, 3);
}

#[test]
fn l1cn_step_matches_dense_solve() {
    compare_with_dense(SchemeKind::L1Cn, 0.0, 3);
}

#[test]
fn l1plus_step_matches_dense_solve() {
    compare_with_dense(SchemeKind::L1Plus, 0.0, 3);
}

#[test]
fn stabilized_steps_match_dense_solve() {
    for scheme in SchemeKind::ALL {
        compare_with_dense(scheme, 0.05, 4);
    }
}

#[test]
fn tanh_sinh_handles_endpoint_singularities() {
    let v = tanh_sinh(1.0, 1e-14, |ua, _| ua.powf(-0.9));
    assert!((v - 10.0).abs() <= 1e-11 * 10.0, "{v}");
    let v = tanh_sinh(2.0, 1e-14, |_, ub| ub.powf(-0.5));
    assert!((v - 2.0 * 2f64.sqrt()).abs() <= 1e-12, "{v}");
    let v = tanh_sinh(PI, 1e-14, |ua, _| ua.sin());
    assert!((v - 2.0).abs() <= 1e-13, "{v}");
}

#[test]
fn weights_match_quadrature_on_a_graded_mesh() {
    let mesh = TimeMesh::graded(12, 2.5, 1.0).unwrap();
    for family in [WeightFamily::L1, WeightFamily::L1Cn, WeightFamily::L1Plus] {
        for n in [0, 1, 5, 11] {
            let w = weights(family, &mesh, n, 0.4).unwrap();
            for j in 0..=n {
                let exact = weight_oracle(family, &mesh, n, j, 0.4);
                let rel = (w.b[j] - exact).abs() / exact.abs();
                assert!(rel <= 1e-10, "{family:?} n={n} j={j}: {} vs {exact} ({rel:e})", w.b[j]);
            }
        }
    }
}
