use proptest::prelude::*;

use crate::domain::{DomainSpec, Point};
use crate::kernel::{KernelConfig, KernelEvaluator};
use crate::reconstruction::{pool_adjacent_violators, quantile, savitzky_golay_derivative};

fn weighted_mean(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>()
}

proptest! {
    #[test]
    fn pava_is_monotone_and_mean_preserving(
        pairs in prop::collection::vec((-10.0f64..10.0, 0.1f64..5.0), 1..60)
    ) {
        let (v, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let fit = pool_adjacent_violators(&v, &w);
        prop_assert_eq!(fit.len(), v.len());
        prop_assert!(fit.windows(2).all(|p| p[0] <= p[1] + 1e-12));
        prop_assert!((weighted_mean(&fit, &w) - weighted_mean(&v, &w)).abs() < 1e-9);
        let again = pool_adjacent_violators(&fit, &w);
        prop_assert!(again.iter().zip(&fit).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn quantile_stays_in_range(mut v in prop::collection::vec(-5.0f64..5.0, 1..100), q in 0.0f64..=1.0) {
        v.sort_by(f64::total_cmp);
        let x = quantile(&v, q);
        prop_assert!(x >= v[0] && x <= v[v.len() - 1]);
    }

    #[test]
    fn savitzky_golay_is_exact_on_quadratics(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, w in 1usize..6) {
        let dt = 0.01;
        let y: Vec<f64> = (0..40).map(|j| { let t = j as f64 * dt; a + b * t + c * t * t }).collect();
        let d = savitzky_golay_derivative(&y, dt, w).unwrap();
        for (j, dj) in d.iter().enumerate() {
            let t = j as f64 * dt;
            prop_assert!((dj - (b + 2.0 * c * t)).abs() < 1e-8);
        }
    }

    #[test]
    fn rectangle_kernel_is_symmetric_and_positive(
        x in (0.0f64..=1.0, 0.0f64..=2.0), y in (0.0f64..=1.0, 0.0f64..=2.0), tau in 1e-3f64..5.0
    ) {
        let k = KernelEvaluator::new(DomainSpec::rectangle(1.0, 2.0).unwrap(), KernelConfig::default()).unwrap();
        let (p, q) = (Point::new(x.0, x.1), Point::new(y.0, y.1));
        let u = k.value(p, q, tau).unwrap();
        prop_assert!(u > 0.0);
        prop_assert!((u - k.value(q, p, tau).unwrap()).abs() <= 1e-12 * u.max(1.0));
    }
}
