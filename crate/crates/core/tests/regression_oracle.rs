//! OLS against an exact rational solver, plus algebraic properties.

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use stampede_core::regression::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

type Q = BigRational;

fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// Solves `XᵀX β = Xᵀy` exactly by Gauss-Jordan elimination over ℚ.
fn rational_ols(rows: &[Vec<i64>], y: &[i64]) -> Vec<Q> {
    let p = rows[0].len();
    let mut a: Vec<Vec<Q>> = vec![vec![q(0); p + 1]; p];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += q(r[i] * r[j]);
            }
            a[i][p] += q(r[i] * yi);
        }
    }
    for col in 0..p {
        let piv = (col..p).find(|&r| a[r][col] != q(0)).expect("full rank");
        a.swap(col, piv);
        let d = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = &*v / &d;
        }
        for r in 0..p {
            if r != col && a[r][col] != q(0) {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(&pivot_row) {
                    *v -= &f * pv;
                }
            }
        }
    }
    a.into_iter().map(|row| row[p].clone()).collect()
}

fn to_f64(v: &Q) -> f64 {
    let n: f64 = v.numer().to_string().parse().unwrap();
    let d: f64 = v.denom().to_string().parse().unwrap();
    n / d
}

const DENSITY: [i64; 5] = [8, 7, 6, 6, 8];
const ADMIN: [i64; 5] = [3, 4, 5, 6, 4];
const FATALITIES: [i64; 5] = [700, 50, 39, 36, 48];
const YEARS: [i32; 5] = [1954, 1986, 2003, 2013, 2025];

fn panel_fit() -> (DesignMatrix, RegressionFit) {
    let x = DesignMatrix::from_columns(
        vec![
            ("density", DENSITY.iter().map(|&v| v as f64).collect()),
            ("admin_score", ADMIN.iter().map(|&v| v as f64).collect()),
        ],
        true,
    )
    .unwrap();
    let y: Vec<f64> = FATALITIES.iter().map(|&v| v as f64).collect();
    let fit = fit_ols(&x, &y).unwrap();
    (x, fit)
}

#[test]
fn panel_matches_exact_rational_oracle() {
    let rows: Vec<Vec<i64>> = (0..5).map(|i| vec![1, DENSITY[i], ADMIN[i]]).collect();
    let exact = rational_ols(&rows, &FATALITIES);
    assert_eq!(
        exact,
        vec![
            Q::new(6065.into(), 4.into()),
            Q::new((-211).into(), 4.into()),
            q(-221)
        ]
    );

    let (_, fit) = panel_fit();
    for (b, e) in fit.coefficients.iter().zip(&exact) {
        assert!((b - to_f64(e)).abs() < 1e-9, "{b} vs {e}");
    }
    assert_eq!(fit.names, ["intercept", "density", "admin_score"]);
    assert_eq!(fit.dof, 2);
}

#[test]
fn panel_residuals_are_orthogonal_to_every_column() {
    let (x, fit) = panel_fit();
    for (j, g) in x.t_mul(&fit.residuals).iter().enumerate() {
        assert!(g.abs() < 1e-8, "column {j}: {g}");
    }
}

#[test]
fn panel_inference_is_consistent() {
    let (_, fit) = panel_fit();
    let inf = fit.inference().unwrap();
    let ssr: f64 = fit.residuals.iter().map(|e| e * e).sum();
    assert!((inf.sigma2 - ssr / 2.0).abs() < 1e-9 * ssr);
    let t = StudentsT::new(0.0, 1.0, 2.0).unwrap();
    for j in 0..3 {
        assert!((inf.t_stats[j] - fit.coefficients[j] / inf.std_errors[j]).abs() < 1e-9);
        let expected = 2.0 * t.sf(inf.t_stats[j].abs());
        assert!((inf.p_values[j] - expected).abs() < 1e-10);
    }
    assert!((0.0..=1.0).contains(&fit.r_squared));
}

#[test]
fn prediction_uses_fitted_coefficients() {
    let (_, fit) = panel_fit();
    assert!((predict(&fit, &[1.0, 8.0, 3.0]).unwrap() - 431.25).abs() < 1e-9);
}

#[test]
fn trend_matches_rational_slope() {
    let years: Vec<i64> = YEARS.iter().map(|&y| y as i64).collect();
    let rows: Vec<Vec<i64>> = years.iter().map(|&y| vec![1, y]).collect();
    let exact = rational_ols(&rows, &FATALITIES);
    assert_eq!(exact[1], Q::new((-69494).into(), 7607.into()));

    let y: Vec<f64> = FATALITIES.iter().map(|&v| v as f64).collect();
    let fit = fit_trend(&YEARS, &y).unwrap();
    assert!((fit.slope - (-9.1355)).abs() < 1e-3);
    assert!((fit.slope - to_f64(&exact[1])).abs() < 1e-12);
    assert!((fit.intercept - to_f64(&exact[0])).abs() < 1e-8);
}

#[test]
fn t_tail_matches_statrs() {
    for dof in [1u64, 2, 3, 5, 10, 30, 100, 1000] {
        let dist = StudentsT::new(0.0, 1.0, dof as f64).unwrap();
        for t in [
            -40.0, -5.0, -1.5, -0.3, 0.0, 0.1, 0.7, 1.0, 2.0, 4.303, 12.0, 80.0,
        ] {
            let ours = student_t_sf(t, dof).unwrap();
            let theirs = dist.sf(t);
            assert!(
                (ours - theirs).abs() <= 1e-12 + 1e-9 * theirs,
                "dof {dof}, t {t}: {ours} vs {theirs}"
            );
        }
    }
}

fn design(cols: &[Vec<f64>]) -> DesignMatrix {
    DesignMatrix::from_columns(
        cols.iter()
            .enumerate()
            .map(|(i, c)| (format!("x{i}"), c.clone()))
            .collect(),
        true,
    )
    .unwrap()
}

prop_compose! {
    fn problem()(n in 6usize..25, p in 1usize..4)
        (cols in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, n), p),
         y in prop::collection::vec(-100.0f64..100.0, n)) -> (Vec<Vec<f64>>, Vec<f64>) {
        (cols, y)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn residuals_orthogonal((cols, y) in problem()) {
        let x = design(&cols);
        if let Ok(fit) = fit_ols(&x, &y) {
            let scale = y.iter().map(|v| v.abs()).sum::<f64>().max(1.0) * 10.0 * y.len() as f64;
            for g in x.t_mul(&fit.residuals) {
                prop_assert!(g.abs() < 1e-9 * scale);
            }
            prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        }
    }

    #[test]
    fn refitting_fitted_values_is_idempotent((cols, y) in problem()) {
        let x = design(&cols);
        if let Ok(fit) = fit_ols(&x, &y) {
            let again = fit_ols(&x, &fit.fitted).unwrap();
            for (a, b) in fit.coefficients.iter().zip(&again.coefficients) {
                prop_assert!((a - b).abs() < 1e-7 * (1.0 + a.abs()));
            }
            let scale = fit.fitted.iter().map(|v| v.abs()).fold(1.0, f64::max);
            prop_assert!(again.residuals.iter().all(|e| e.abs() < 1e-9 * scale));
        }
    }

    #[test]
    fn affine_response_maps_coefficients(
        (cols, y) in problem(),
        a in -5.0f64..5.0,
        shift in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let x = design(&cols);
        if let Ok(fit) = fit_ols(&x, &y) {
            let c = &shift[..x.n_cols()];
            let y2: Vec<f64> = y.iter().zip(x.mul(c)).map(|(yi, xc)| a * yi + xc).collect();
            let fit2 = fit_ols(&x, &y2).unwrap();
            for ((b, b2), cj) in fit.coefficients.iter().zip(&fit2.coefficients).zip(c) {
                let expected = a * b + cj;
                prop_assert!((b2 - expected).abs() < 1e-6 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn t_tail_is_symmetric_and_monotone(t in -50.0f64..50.0, dt in 0.0f64..5.0, dof in 1u64..200) {
        let s = student_t_sf(t, dof).unwrap();
        let mirror = student_t_sf(-t, dof).unwrap();
        prop_assert!((s + mirror - 1.0).abs() < 1e-12);
        prop_assert!(student_t_sf(t + dt, dof).unwrap() <= s + 1e-15);
        prop_assert!((0.0..=1.0).contains(&s));
    }
}
