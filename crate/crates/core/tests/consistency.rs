use lifebet::fitting::{fit_gompertz_mle, loglik_gompertz, loglik_gradient, FitConfig};
use lifebet::models::{DistributionSpec, GompertzParams, LifetimeSample};
use lifebet::stpetersburg::{expected_gain, simulate, ExpectedGain, GameConfig};
use lifebet_oracle::{central_gradient, ks_statistic};
use num_traits::ToPrimitive;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn truth() -> GompertzParams {
    GompertzParams::with_mode(80.0, 0.1).unwrap()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        (xs[m - 1] + xs[m]) / 2.0
    } else {
        xs[m]
    }
}

#[test]
fn mle_error_shrinks_with_sample_size() {
    let law = DistributionSpec::Gompertz(truth());
    let medians: Vec<f64> = [1_000, 10_000, 100_000]
        .iter()
        .map(|&n| {
            let errors: Vec<f64> = (0..20u64)
                .into_par_iter()
                .map(|seed| {
                    let s = law.sample(n, 1000 + seed).unwrap();
                    let fit = fit_gompertz_mle(&s, &FitConfig::default()).unwrap();
                    assert!(fit.converged, "n = {n}, seed = {seed}");
                    (fit.params.gompertz().b() - truth().b()).abs()
                })
                .collect();
            median(errors)
        })
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "median |b error| by n: {medians:?}");
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..10 {
        let g = GompertzParams::new((-12.0 + 6.0 * unit(&mut rng)).exp(), 0.05 + 0.15 * unit(&mut rng)).unwrap();
        let seed = rng.next_u64();
        let n = 50 + (unit(&mut rng) * 500.0) as usize;
        let sample = DistributionSpec::Gompertz(g).sample(n, seed).unwrap();
        // Evaluate away from the optimum so the gradient is not near zero.
        let at = GompertzParams::new(g.eta() * (0.5 + unit(&mut rng)), g.b() * (0.8 + 0.4 * unit(&mut rng))).unwrap();
        let analytic = loglik_gradient(&at, &sample).unwrap();
        let numeric = central_gradient(
            |x| loglik_gompertz(&GompertzParams::new(x[0].exp(), x[1].exp()).unwrap(), &sample).unwrap(),
            &[at.ln_eta(), at.b().ln()],
            1e-5,
        );
        for (a, f) in analytic.iter().zip(&numeric) {
            assert!(((a - f) / f).abs() < 1e-6, "analytic {a} vs numeric {f}");
        }
    }
}

#[test]
fn samples_follow_their_law() {
    let laws = [
        DistributionSpec::Gompertz(truth()),
        DistributionSpec::makeham(0.002, (-9.0f64).exp(), 0.11).unwrap(),
        DistributionSpec::normal(75.0, 10.0).unwrap(),
        DistributionSpec::exponential(0.05).unwrap(),
        DistributionSpec::uniform_bounded(100.0).unwrap(),
    ];
    let n = 20_000;
    for law in laws {
        let s = law.sample(n, 99).unwrap();
        let d = ks_statistic(s.values(), |t| law.cdf(t).unwrap());
        // Kolmogorov 0.1% critical value.
        assert!(d < 1.95 / (n as f64).sqrt(), "{law}: D = {d}");
    }
}

#[test]
fn sample_reproducibility() {
    let law = DistributionSpec::Gompertz(truth());
    assert_eq!(law.sample(1000, 5).unwrap(), law.sample(1000, 5).unwrap());
    assert_ne!(law.sample(1000, 5).unwrap(), law.sample(1000, 6).unwrap());
    let s = law.sample(10, 5).unwrap();
    assert_eq!(s.seed(), Some(5));
    assert_eq!(LifetimeSample::new(s.values().to_vec()).unwrap().seed(), None);
}

#[test]
fn truncated_game_mean_is_within_three_standard_errors() {
    let config = GameConfig::max_flips(20).unwrap();
    let ExpectedGain::Finite(exact) = expected_gain(&config) else { panic!("truncated game diverges") };
    let exact = exact.to_f64().unwrap();
    for seed in [1, 2, 3, 42] {
        let s = simulate(&config, 100_000, seed, 4).unwrap();
        let se = s.std_error.unwrap();
        assert!((s.mean - exact).abs() <= 3.0 * se, "seed {seed}: mean {} exact {exact} se {se}", s.mean);
    }
}

#[test]
fn first_flip_heads_half_the_time() {
    let s = simulate(&GameConfig::Unlimited, 100_000, 8, 3).unwrap();
    // Three binomial standard deviations is about 0.47 percentage points.
    assert!((s.frequency(0) - 0.5).abs() < 0.005, "{}", s.frequency(0));
    assert_eq!(s.busts, 0);
}
