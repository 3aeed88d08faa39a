use ergolab::cocycle::TransferMatrix;
use ergolab::dynamics::{circle_distance, Point, Transformation};
use ergolab::halfplane::{mobius, HalfPlanePoint};
use ergolab::potentials::{default_n0, mollify, SamplingFunction, StepFunction};
use ergolab::report::fmt_num;
use num_complex::Complex64;
use proptest::prelude::*;

fn irrational() -> impl Strategy<Value = f64> {
    (1u32..50).prop_map(|k| (k as f64 * 2f64.sqrt()).fract())
}

proptest! {
    #[test]
    fn inverse_undoes_apply(alpha in irrational(), w in 0.0f64..1.0) {
        let t = Transformation::rotation(alpha).unwrap();
        let p = Point::on_circle(w);
        let back = t.inverse_apply(&t.apply(&p).unwrap()).unwrap();
        prop_assert!(circle_distance(back.coords()[0], w) <= 1e-15);
    }

    #[test]
    fn transfer_matrices_are_unimodular(re in -50.0f64..50.0, im in -5.0f64..5.0, v in -50.0f64..50.0) {
        let m = TransferMatrix::schrodinger(Complex64::new(re, im), v);
        prop_assert!((m.det() - 1.0).norm() <= 1e-12);
    }

    #[test]
    fn upper_half_plane_is_preserved(
        re in -10.0f64..10.0, im in 1e-6f64..5.0, v in -10.0f64..10.0,
        zr in -10.0f64..10.0, zi in 1e-6f64..10.0,
    ) {
        let m = TransferMatrix::schrodinger(Complex64::new(re, im), v);
        let z = mobius(&m, Complex64::new(zr, zi)).unwrap();
        prop_assert!(HalfPlanePoint::new(z).is_ok());
        prop_assert!(z.im > 0.0);
    }

    #[test]
    fn mollified_values_stay_in_range(
        values in proptest::collection::vec(-5.0f64..5.0, 2..8),
        n in 1u32..2000,
        theta in 0.0f64..1.0,
    ) {
        let s = StepFunction::uniform(values.clone()).unwrap();
        let m = mollify(&s, n, default_n0(&s)).unwrap();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = m.eval_theta(theta);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn step_text_round_trips(values in proptest::collection::vec(-5.0f64..5.0, 1..6)) {
        let f = SamplingFunction::Step(StepFunction::uniform(values).unwrap());
        prop_assert_eq!(SamplingFunction::from_text(&f.to_text()).unwrap(), f);
    }

    #[test]
    fn formatted_numbers_keep_twelve_digits(x in -1e12f64..1e12) {
        let back: f64 = fmt_num(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs().max(1e-300));
    }
}
