use rrm::assembly::assemble_transmission;
use rrm::basis::RrmSpace;
use rrm::fields::CoefficientField;
use rrm::grid::{build_uniform_grid, classify, Domain};
use rrm::linalg::{solve_quadratic_eigen_with, EigenMethod, EigenOptions};
use rrm::output::{perturbation_table, transmission_table};
use rrm::problems::{run_perturbation, run_transmission, ExactPreset, GridKind, PerturbationConfig, TransmissionConfig};

fn transmission_space(domain: Domain, n: usize) -> RrmSpace {
    let g = build_uniform_grid(domain, n).unwrap();
    let t = classify(&g).unwrap();
    RrmSpace::interior(&g, &t).unwrap()
}

#[test]
fn dense_and_shift_invert_agree() {
    for (domain, n) in [(Domain::UnitSquare, 16), (Domain::LShape, 8)] {
        let s = transmission_space(domain, n);
        let m = assemble_transmission(&s, &CoefficientField::AFFINE_PRESET).unwrap();
        let solve = |method| {
            let opts = EigenOptions {
                method,
                ..Default::default()
            };
            solve_quadratic_eigen_with(&m.a, &m.b, &m.c, 6, &opts).unwrap()
        };
        let d = solve(EigenMethod::Dense);
        let a = solve(EigenMethod::ShiftInvert);
        for (x, y) in d.lambdas.iter().zip(&a.lambdas) {
            assert!((x - y).abs() <= 1e-9 * x, "{domain}: {x} vs {y}");
        }
        assert!(a.residuals.iter().all(|&r| r <= 1e-8));
    }
}

#[test]
fn lshape_perturbation_matches_square_rates() {
    let cfg = PerturbationConfig {
        domain: Domain::LShape,
        grid: GridKind::Uniform,
        levels: vec![8, 16, 32],
        eps: vec![1.0, 1e-6],
        beta: CoefficientField::AFFINE_PRESET,
        exact: ExactPreset::Example51,
        max_n: None,
    };
    let s = run_perturbation(&cfg).unwrap();
    for r in &s.series[0].rates.rates {
        assert!((r.unwrap() - 1.0).abs() < 0.1);
    }
    for r in &s.series[1].rates.rates {
        assert!((r.unwrap() - 2.0).abs() < 0.1);
    }
    assert!(s.warnings.is_empty(), "{:?}", s.warnings);
}

#[test]
fn tables_are_bit_reproducible() {
    let cfg = PerturbationConfig {
        domain: Domain::UnitSquare,
        grid: GridKind::Graded { ratio: 0.4 },
        levels: vec![8, 16],
        eps: vec![1e-2],
        beta: CoefficientField::constant(3.0),
        exact: ExactPreset::Example51,
        max_n: None,
    };
    let a = perturbation_table(&run_perturbation(&cfg).unwrap()).to_csv("m").unwrap();
    let b = perturbation_table(&run_perturbation(&cfg).unwrap()).to_csv("m").unwrap();
    assert_eq!(a, b);

    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(a.as_bytes());
    assert_eq!(reader.headers().unwrap().get(0), Some("eps"));
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].get(9), Some(""));
    assert!(rows[1][9].parse::<f64>().is_ok());
}

#[test]
fn transmission_levels_decrease() {
    let cfg = TransmissionConfig {
        domain: Domain::UnitSquare,
        levels: vec![8, 16, 32],
        beta: CoefficientField::AFFINE_PRESET,
        k: 6,
        max_n: None,
    };
    let s = run_transmission(&cfg).unwrap();
    assert!(s.warnings.is_empty(), "{:?}", s.warnings);
    assert!(s.table.rates.iter().all(Option::is_some));
    let t = transmission_table(&s);
    assert_eq!(t.columns, ["index", "lambda_n8", "lambda_n16", "lambda_n32", "rate"]);
    assert_eq!(t.rows.len(), 6);
}
