use polylab::estimators::Moments;
use polylab::exact::ExactSum;
use polylab::field::{FieldGrid, GridSpec};
use polylab::kernels::{Kernel, RhoSquared};
use polylab::quad::QuadConfig;
use proptest::prelude::*;

fn any_kernel() -> impl Strategy<Value = Kernel> {
    (0usize..3, 0.1f64..10.0, 0.2f64..5.0, -0.9f64..0.9).prop_map(|(f, a, s, al)| match f {
        0 => Kernel::gaussian(a, s).unwrap(),
        1 => Kernel::power_ir(a, al, s).unwrap(),
        _ => Kernel::summable(a, s).unwrap(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn b_hat_is_even_and_nonnegative(k in any_kernel(), p in -50.0f64..50.0) {
        let (a, b) = (k.b_hat(p), k.b_hat(-p));
        prop_assert_eq!(a, b);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn b_is_even_and_peaked(k in any_kernel(), x in 0.01f64..20.0) {
        let (a, b) = (k.eval_b(x).unwrap(), k.eval_b(-x).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12));
        prop_assert!(a <= k.eval_b(0.0).unwrap() * (1.0 + 1e-9));
    }

    #[test]
    fn rho_squared_is_linear_in_amplitude(a in 0.1f64..10.0, s in 0.2f64..5.0, c in 0.1f64..10.0) {
        let one = Kernel::<f64>::summable(a, s).unwrap().rho_squared(QuadConfig::default()).unwrap();
        let many = Kernel::<f64>::summable(c * a, s).unwrap().rho_squared(QuadConfig::default()).unwrap();
        match (one, many) {
            (RhoSquared::Finite(x), RhoSquared::Finite(y)) => prop_assert!((y - c * x).abs() <= 1e-10 * y),
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn exact_sum_ignores_order(xs in prop::collection::vec(-1e300f64..1e300, 0..40), perm in any::<u64>()) {
        let a = ExactSum::from_values(xs.iter().copied());
        let mut ys = xs.clone();
        let n = ys.len().max(1) as u64;
        ys.rotate_left((perm % n) as usize);
        ys.reverse();
        let b = ExactSum::from_values(ys.iter().copied());
        prop_assert_eq!(a.value(), b.value());
    }

    #[test]
    fn exact_sum_merge_is_associative(xs in prop::collection::vec(-1e6f64..1e6, 3..60), cut in 1usize..1000) {
        let i = cut % (xs.len() - 1) + 1;
        let j = (i + cut / 7) % xs.len();
        let (i, j) = (i.min(j), i.max(j));
        let parts: Vec<ExactSum> = [&xs[..i], &xs[i..j], &xs[j..]].iter().map(|s| ExactSum::from_values(s.iter().copied())).collect();
        let mut left = parts[0].clone();
        left.merge(&parts[1]);
        left.merge(&parts[2]);
        let mut right = parts[1].clone();
        right.merge(&parts[2]);
        let mut r = parts[0].clone();
        r.merge(&right);
        prop_assert_eq!(left.value(), r.value());
        prop_assert_eq!(left.value(), ExactSum::from_values(xs.iter().copied()).value());
        let mut back = left.clone();
        back.unmerge(&parts[2]);
        let mut front = parts[0].clone();
        front.merge(&parts[1]);
        prop_assert_eq!(back.value(), front.value());
    }

    #[test]
    fn moments_merge_matches_single_pass(rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), 2..80), cut in 0usize..80) {
        let cut = cut % rows.len();
        let mut whole = Moments::new(2, 4);
        let (mut a, mut b) = (Moments::new(2, 4), Moments::new(2, 4));
        for (i, r) in rows.iter().enumerate() {
            whole.push(i as u64, r);
            if i < cut { a.push(i as u64, r) } else { b.push(i as u64, r) }
        }
        b.merge(&a);
        prop_assert_eq!(whole.means(), b.means());
        prop_assert_eq!(whole.count(), b.count());
    }
}

fn smooth(spec: GridSpec, phase: f64) -> FieldGrid {
    let l = 32.0;
    FieldGrid::from_fn(spec, spec.plan(), move |x: f64| {
        (std::f64::consts::TAU * x / l + phase).sin() + 0.3 * (3.0 * std::f64::consts::TAU * x / l).cos()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifts_compose(a in -40.0f64..40.0, b in -40.0f64..40.0, phase in 0.0f64..6.0) {
        let spec = GridSpec::new(32.0, 64).unwrap();
        let f = smooth(spec, phase);
        let two = f.shift(a).shift(b);
        let one = f.shift(a + b);
        for (x, y) in two.values.iter().zip(&one.values) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolation_is_periodic(x in -100.0f64..100.0, m in -3i32..3, phase in 0.0f64..6.0) {
        let spec = GridSpec::new(32.0, 64).unwrap();
        let f = smooth(spec, phase);
        let (a, b) = (f.interpolate(x), f.interpolate(x + 32.0 * m as f64));
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn exact_sum_recovers_cancelled_terms() {
    assert_eq!(ExactSum::from_values([1e100, 1.0, -1e100]).value(), 1.0);
    assert_eq!(ExactSum::from_values([0.1f64; 10]).value(), 1.0);
    assert_eq!(ExactSum::from_values([f64::MAX, f64::MAX, -f64::MAX]).value(), f64::MAX);
    assert_eq!(ExactSum::from_values([5e-324, 5e-324]).value(), 1e-323);
    assert_eq!(ExactSum::new().value(), 0.0);
    assert!(ExactSum::from_values([1.0, f64::INFINITY]).value().is_infinite());
    assert!(ExactSum::from_values([f64::INFINITY, f64::NEG_INFINITY]).value().is_nan());
    let mut s = ExactSum::from_values([1.5f32, 2.25]);
    s.add(-0.75f32);
    assert_eq!(s.value_as::<f32>(), 3.0);
}
