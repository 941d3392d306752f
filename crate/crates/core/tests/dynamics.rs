use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use squid_core::dynamics::{coupling_matrix, rhs};
use squid_core::ode;
use squid_core::{integrate, Amplitudes, Error, IntegratorConfig, ModelParams};

fn zero_params() -> ModelParams {
    ModelParams {
        omega: 0.0,
        omega_a: 0.0,
        omega_b: 0.0,
        freq_a: 20.0,
        freq_b: 10.0,
        omega01_0: 20.0,
        omega20_0: 20.0,
        omega00: 0.0,
        v1: 0.0,
        v2: 0.0,
    }
}

fn random_state(rng: &mut impl Rng) -> Amplitudes {
    let mut c = [C64::new(0.0, 0.0); 4];
    for z in c.iter_mut() {
        *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let n = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Amplitudes(c.map(|z| z / n))
}

fn random_params(rng: &mut impl Rng) -> ModelParams {
    ModelParams {
        omega: rng.gen_range(0.5..1.5),
        omega_a: rng.gen_range(0.01..0.2),
        omega_b: rng.gen_range(0.01..0.2),
        freq_a: rng.gen_range(5.0..40.0),
        freq_b: rng.gen_range(2.5..20.0),
        omega01_0: rng.gen_range(5.0..40.0),
        omega20_0: rng.gen_range(5.0..40.0),
        omega00: 0.0,
        v1: rng.gen_range(0.0..2e-4),
        v2: rng.gen_range(0.0..2e-4),
    }
}

#[test]
fn coefficient_matrix_is_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let p = random_params(&mut rng);
        let t = rng.gen_range(0.0..5000.0);
        // column k of M from the rhs applied to the k-th unit vector: M e_k = i dc/dt
        let mut m = [[C64::new(0.0, 0.0); 4]; 4];
        for k in 0..4 {
            let col = rhs(t, &Amplitudes::basis(k), &p);
            for j in 0..4 {
                m[j][k] = C64::new(0.0, 1.0) * col.0[j];
            }
        }
        let direct = coupling_matrix(t, &p);
        for i in 0..4 {
            for j in 0..4 {
                assert!((m[i][j] - m[j][i].conj()).norm() <= 1e-14);
                assert!((m[i][j] - direct[i][j]).norm() <= 1e-14);
            }
        }
    }
}

#[test]
fn resonant_rabi_quarter_period() {
    let p = ModelParams { omega_a: 1.0, ..zero_params() };
    let cfg = IntegratorConfig::default().with_sample_interval(0.1);
    let tr = integrate(&Amplitudes::basis(0), &p, FRAC_PI_2, &cfg).unwrap();
    let (t, c) = tr.last().unwrap();
    assert_eq!(t, FRAC_PI_2);
    assert!((c.0[1].norm_sqr() - 1.0).abs() <= 1e-8);
    assert!(c.0[0].norm() <= 1e-8);
    for (t, c) in tr.times.iter().zip(&tr.amplitudes) {
        assert!((c.0[0] - C64::from(t.cos())).norm() <= 1e-8);
        assert!((c.0[1] - C64::new(0.0, -t.sin())).norm() <= 1e-8);
    }
}

#[test]
fn zero_coupling_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..5 {
        let c0 = random_state(&mut rng);
        let p = ModelParams { v1: 1e-3, v2: 2e-3, ..zero_params() };
        let tr = integrate(&c0, &p, 10.0, &IntegratorConfig::default()).unwrap();
        for c in &tr.amplitudes {
            assert_eq!(c, &c0);
        }
    }
}

/// Two-level sweep through the c2/c3 crossing at rate α, starting and ending
/// 400 Ω away from resonance.
fn lz_params(alpha: f64) -> ModelParams {
    let (w01, w20) = (100.0, 500.0);
    let v = alpha / (w01 + w20);
    ModelParams { omega: 1.0, omega01_0: w01, omega20_0: w20, v1: v, v2: v, ..zero_params() }
}

fn rk4(p: &ModelParams, c0: [C64; 4], t_end: f64, h: f64) -> [C64; 4] {
    let f = |t: f64, c: &[C64; 4]| rhs(t, &Amplitudes(*c), p).0;
    let add = |a: &[C64; 4], b: &[C64; 4], s: f64| std::array::from_fn::<C64, 4, _>(|k| a[k] + b[k] * s);
    let n = (t_end / h).round() as usize;
    let mut c = c0;
    for i in 0..n {
        let t = i as f64 * h;
        let k1 = f(t, &c);
        let k2 = f(t + 0.5 * h, &add(&c, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &add(&c, &k2, 0.5 * h));
        let k4 = f(t + h, &add(&c, &k3, h));
        c = std::array::from_fn(|k| c[k] + (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]) * (h / 6.0));
    }
    c
}

#[test]
fn landau_zener_survival() {
    for alpha in [4.0, 8.0] {
        let p = lz_params(alpha);
        assert!((p.omega01_0 * p.v1 + p.omega20_0 * p.v2 - alpha).abs() < 1e-12);
        assert_eq!(p.diabatic_crossings()[1], Some(100.0 / alpha * 4.0));
        let t_end = 2.0 * 400.0 / alpha;
        let tr = integrate(&Amplitudes::basis(1), &p, t_end, &IntegratorConfig::default()).unwrap();
        let survival = tr.last().unwrap().1 .0[1].norm_sqr();
        let exact = (-2.0 * PI / alpha).exp();
        assert!((survival / exact - 1.0).abs() < 0.02, "alpha {alpha}: {survival} vs {exact}");

        let fixed = rk4(&p, Amplitudes::basis(1).0, t_end, 2e-4);
        assert!((fixed[1].norm_sqr() - survival).abs() < 1e-6, "rk4 {} adaptive {survival}", fixed[1].norm_sqr());
    }
}

#[test]
fn unitarity_over_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let cfg = IntegratorConfig::default().with_sample_interval(10.0);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let c0 = random_state(&mut rng);
        let tr = integrate(&c0, &p, 1000.0, &cfg).unwrap();
        assert!(tr.last().unwrap().1.norm_drift() <= 1e-8);
    }
}

#[test]
fn time_reversal_recovers_initial_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let cfg = IntegratorConfig::default().with_sample_interval(50.0);
    for _ in 0..5 {
        let p = random_params(&mut rng);
        let c0 = random_state(&mut rng);
        let t_end = 500.0;
        let forward = integrate(&c0, &p, t_end, &cfg).unwrap();
        let end = forward.last().unwrap().1.conj();
        // d(s) = conj c(T − s) obeys dd/ds = −i conj(M(T − s)) d
        let reversed = |s: f64, d: &[C64; 4]| {
            let m = coupling_matrix(t_end - s, &p);
            std::array::from_fn(|j| {
                let acc: C64 = (0..4).map(|k| m[j][k].conj() * d[k]).sum();
                C64::new(0.0, -1.0) * acc
            })
        };
        let (_, states, _) = ode::integrate(reversed, 0.0, end.0, t_end, &cfg).unwrap();
        let back = Amplitudes(*states.last().unwrap()).conj();
        for k in 0..4 {
            assert!((back.0[k] - c0.0[k]).norm() <= 1e-6);
        }
    }
}

#[test]
fn halving_tolerance_converges() {
    let p = ModelParams::pair_generation();
    let loose = IntegratorConfig::default().with_tolerances(1e-10, 1e-12);
    let tight = IntegratorConfig::default().with_tolerances(5e-11, 5e-13);
    let a = integrate(&Amplitudes::basis(0), &p, 1000.0, &loose).unwrap();
    let b = integrate(&Amplitudes::basis(0), &p, 1000.0, &tight).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
        for k in 0..4 {
            assert!((x.0[k].norm_sqr() - y.0[k].norm_sqr()).abs() <= 10.0 * 1e-10);
        }
    }
}

#[test]
fn drift_beyond_bound_is_a_stability_error() {
    let p = ModelParams::pair_generation();
    let cfg = IntegratorConfig { rtol: 1e-3, atol: 1e-3, sample_drift_bound: 1e-12, ..Default::default() };
    match integrate(&Amplitudes::basis(0), &p, 500.0, &cfg) {
        Err(Error::Stability { t, .. }) => assert!(t > 0.0 && t <= 500.0),
        other => panic!("expected stability error, got {other:?}"),
    }
}

#[test]
fn rejects_unnormalized_initial_state() {
    let c = Amplitudes([C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    assert!(matches!(
        integrate(&c, &ModelParams::default(), 1.0, &IntegratorConfig::default()),
        Err(Error::Normalization { .. })
    ));
}
