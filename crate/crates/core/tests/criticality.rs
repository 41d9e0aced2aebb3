use virtlev_core::criticality::*;
use virtlev_core::jost::{classify_threshold_1d, DEFAULT_TOLERANCE};
use virtlev_core::potential::Potential1D;
use virtlev_core::weighted_space::{Grid1D, Mesh, RadialGrid};
use virtlev_core::Complex64;

type C = Complex64;

const H: f64 = 0.05;

fn line(r: f64) -> Mesh {
    Mesh::Line(Grid1D::with_spacing(r, H).unwrap())
}

fn radial(r: f64) -> Mesh {
    Mesh::Radial(RadialGrid::with_spacing(r, H).unwrap())
}

fn bump() -> Potential1D {
    Potential1D::bump(C::new(1.0, 0.0), 1.0).unwrap()
}

#[test]
fn free_line_has_a_null_state() {
    let form = QuadraticForm::new(line(400.0), &Potential1D::zero()).unwrap();
    let result = null_state_iteration(&form, 1.0, 64).unwrap();
    match &result.verdict {
        Dichotomy::NullState { phi } => {
            assert!(phi.iter().all(|&p| p > 0.0));
            let pts = form.mesh().points();
            let dev = phi.iter().zip(pts).filter(|(_, x)| x.abs() <= 1.0).map(|(p, _)| (p - 1.0).abs()).fold(0.0, f64::max);
            assert!(dev <= 0.05, "{dev}");
        }
        other => panic!("{}", other.label()),
    }
    assert_eq!(result.trace.len(), 64);
    assert!(result.trace.iter().all(|e| e.lambda < 0.0));
    assert!(result.trace.windows(2).all(|w| w[1].lambda > w[0].lambda));
    assert_eq!(result.trace[63].sup_dist_to_limit, 0.0);
}

#[test]
fn tent_functions_have_vanishing_energy() {
    let form = QuadraticForm::new(line(100.0), &Potential1D::zero()).unwrap();
    for j in [1.0, 2.0, 5.0, 20.0, 80.0] {
        let tent: Vec<f64> = form.mesh().points().iter().map(|x| (1.0 - x.abs() / j).max(0.0)).collect();
        let energy = form.evaluate(&tent);
        assert!((energy - 2.0 / j).abs() < 1e-10, "j = {j}: {energy}");
    }
}

#[test]
fn free_radial_3d_has_a_weighted_gap() {
    let form = QuadraticForm::new(radial(200.0), &Potential1D::zero()).unwrap();
    let result = null_state_iteration(&form, 1.0, 64).unwrap();
    match &result.verdict {
        Dichotomy::WeightedGap { c, w, margin } => {
            assert!(*c > 0.0);
            assert!(*margin >= -NONNEGATIVE_TOL);
            for t in [1.0, 0.75, 0.5, 0.1, 0.01] {
                let scaled: Vec<f64> = w.iter().map(|v| t * v).collect();
                let (holds, m) = hardy_gap_check(&form, &scaled).unwrap();
                assert!(holds, "t = {t}: {m}");
            }
        }
        other => panic!("{}", other.label()),
    }
}

#[test]
fn nonnegative_bump_has_a_weighted_gap() {
    let form = QuadraticForm::new(line(200.0), &bump()).unwrap();
    let result = null_state_iteration(&form, 1.0, 64).unwrap();
    assert_eq!(result.verdict.label(), "WeightedGap");
    assert!(result.trace.iter().any(|e| e.lambda >= 0.0));
}

#[test]
fn verdicts_are_stable_under_domain_doubling() {
    let cases: [(Box<dyn Fn(f64) -> Mesh>, Potential1D, &str); 3] = [
        (Box::new(line), Potential1D::zero(), "NullState"),
        (Box::new(radial), Potential1D::zero(), "WeightedGap"),
        (Box::new(line), bump(), "WeightedGap"),
    ];
    for (mesh, v, expected) in &cases {
        let mut cs = Vec::new();
        for r in [400.0, 800.0] {
            let form = QuadraticForm::new(mesh(r), v).unwrap();
            let result = null_state_iteration(&form, 1.0, 64).unwrap();
            assert_eq!(result.verdict.label(), *expected, "R = {r}");
            if let Dichotomy::WeightedGap { c, .. } = result.verdict {
                cs.push(c);
            }
        }
        if cs.len() == 2 {
            assert!((cs[0] - cs[1]).abs() <= 0.05 * cs[0], "{cs:?}");
        }
    }
}

#[test]
fn hardy_inequality_below_the_sharp_constant() {
    let form = QuadraticForm::new(radial(100.0), &Potential1D::zero()).unwrap();
    let w: Vec<f64> = form.mesh().points().iter().map(|r| 0.125 / (r * r)).collect();
    let (holds, margin) = hardy_gap_check(&form, &w).unwrap();
    assert!(holds, "{margin}");
    let zero = vec![0.0; form.mesh().len()];
    let (holds, margin) = hardy_gap_check(&form, &zero).unwrap();
    assert!(holds && margin >= 0.0);
}

#[test]
fn fixed_positive_weight_fails_on_a_large_line() {
    let w_of = |form: &QuadraticForm| -> Vec<f64> {
        form.mesh().points().iter().map(|x| if x.abs() <= 1.0 { 0.01 } else { 0.0 }).collect()
    };
    let small = QuadraticForm::new(line(20.0), &Potential1D::zero()).unwrap();
    assert!(hardy_gap_check(&small, &w_of(&small)).unwrap().0);
    let large = QuadraticForm::new(line(800.0), &Potential1D::zero()).unwrap();
    let (holds, margin) = hardy_gap_check(&large, &w_of(&large)).unwrap();
    assert!(!holds && margin < 0.0);
}

#[test]
fn null_states_match_jost_virtual_levels() {
    let g = Grid1D::new(4.0, 801).unwrap();
    for v in [
        Potential1D::zero(),
        bump(),
        Potential1D::indicator(C::new(1.0, 0.0), 1.0).unwrap(),
        Potential1D::bump(C::new(0.3, 0.0), 2.0).unwrap(),
        Potential1D::indicator(C::new(0.05, 0.0), 0.5).unwrap(),
    ] {
        let form = QuadraticForm::new(line(400.0), &v).unwrap();
        let verdict = null_state_iteration(&form, 1.0, 64).unwrap().verdict;
        let jost = classify_threshold_1d(&v, &g, DEFAULT_TOLERANCE).unwrap().classification;
        assert_ne!(verdict.label(), "Inconclusive");
        assert_eq!(verdict.label() == "NullState", jost.is_virtual(), "{v:?}");
    }
}

#[test]
fn invalid_forms_are_rejected() {
    assert!(QuadraticForm::new(Mesh::lattice(8), &Potential1D::zero()).is_err());
    let complex = Potential1D::bump(C::new(1.0, 1.0), 1.0).unwrap();
    assert!(QuadraticForm::new(line(20.0), &complex).is_err());
    assert!(QuadraticForm::new(line(20.0), &Potential1D::square_well(1.0).unwrap()).is_err());
    let form = QuadraticForm::new(line(20.0), &Potential1D::zero()).unwrap();
    assert!(null_state_iteration(&form, 0.0, 64).is_err());
    assert!(null_state_iteration(&form, 1.0, 1).is_err());
    assert!(hardy_gap_check(&form, &[1.0]).is_err());
    let negative = vec![-1.0; form.mesh().len()];
    assert!(hardy_gap_check(&form, &negative).is_err());
}

#[test]
fn trace_csv() {
    let form = QuadraticForm::new(line(50.0), &Potential1D::zero()).unwrap();
    let result = null_state_iteration(&form, 1.0, 8).unwrap();
    let csv = result.to_csv().render();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "j,lambda,sup_dist_to_limit");
    assert_eq!(lines.count(), 8);
}
