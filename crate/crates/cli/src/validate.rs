//! Seeded property suite behind the `validate` subcommand.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use squid_core::dynamics::{coupling_matrix, rhs};
use squid_core::measures::{concurrence, eof_from_concurrence, r_eigenvalues_general, sqrt_r_eigenvalues};
use squid_core::{integrate, partial_trace, Amplitudes, Factor, IntegratorConfig, ModelParams};

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// Largest observed deviation against the property's tolerance.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

const PAIRS: [(Factor, Factor); 6] = [
    (Factor::A, Factor::B),
    (Factor::A, Factor::P),
    (Factor::A, Factor::T),
    (Factor::B, Factor::P),
    (Factor::B, Factor::T),
    (Factor::P, Factor::T),
];

// occupation (A, B, P, T) of the four basis states
const LABELS: [[usize; 4]; 4] = [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]];

fn slot(f: Factor) -> usize {
    match f {
        Factor::A => 0,
        Factor::B => 1,
        Factor::P => 2,
        Factor::T => 3,
    }
}

fn random_state(rng: &mut impl Rng) -> Amplitudes {
    let c: [C64; 4] = std::array::from_fn(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
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

fn brute_force_trace(c: &Amplitudes, keep: (Factor, Factor)) -> [[C64; 4]; 4] {
    let mut psi = [C64::new(0.0, 0.0); 16];
    for (k, occ) in LABELS.iter().enumerate() {
        psi[occ[0] | occ[1] << 1 | occ[2] << 2 | occ[3] << 3] += c.0[k];
    }
    let (x, y) = (slot(keep.0), slot(keep.1));
    let bit = |n: usize, s: usize| (n >> s) & 1;
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..16 {
        for j in 0..16 {
            if (0..4).filter(|s| *s != x && *s != y).any(|s| bit(i, s) != bit(j, s)) {
                continue;
            }
            out[bit(i, x) + 2 * bit(i, y)][bit(j, x) + 2 * bit(j, y)] += psi[i] * psi[j].conj();
        }
    }
    out
}

fn record(name: &'static str, cases: usize, worst: f64, tolerance: f64) -> PropertyResult {
    PropertyResult { name, passed: worst <= tolerance, cases, worst, tolerance }
}

/// Run every property with `cases` random draws (the integration property
/// uses `cases / 10`, at least one).
pub fn run_suite(seed: u64, cases: usize) -> Result<ValidationReport, squid_core::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut props = Vec::new();

    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let c = random_state(&mut rng);
        for pair in PAIRS {
            let rho = partial_trace(&c, pair)?;
            let bf = brute_force_trace(&c, pair);
            for (i, row) in bf.iter().enumerate() {
                for (j, z) in row.iter().enumerate() {
                    worst = worst.max((rho.get(i, j) - z).norm());
                }
            }
        }
    }
    props.push(record("partial-trace-brute-force", cases, worst, 1e-12));

    let (mut w_routes, mut w_x): (f64, f64) = (0.0, 0.0);
    for _ in 0..cases {
        let c = random_state(&mut rng);
        for pair in PAIRS {
            let rho = partial_trace(&c, pair)?;
            let s = sqrt_r_eigenvalues(&rho)?;
            let g = r_eigenvalues_general(&rho)?;
            for k in 0..4 {
                w_routes = w_routes.max((s[k] * s[k] - g[k]).abs());
            }
            let e = |i: usize, j: usize| rho.get(i, j);
            let x = 2.0
                * (e(0, 3).norm() - (e(1, 1).re * e(2, 2).re).max(0.0).sqrt())
                    .max(e(1, 2).norm() - (e(0, 0).re * e(3, 3).re).max(0.0).sqrt())
                    .max(0.0);
            w_x = w_x.max((concurrence(&rho)? - x).abs());
        }
    }
    props.push(record("r-matrix-eigensolver-routes", cases, w_routes, 1e-9));
    props.push(record("concurrence-x-state-closed-form", cases, w_x, 1e-10));

    let mut w_h: f64 = 0.0;
    for _ in 0..cases {
        let p = random_params(&mut rng);
        let t = rng.gen_range(0.0..5000.0);
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
                w_h = w_h.max((m[i][j] - m[j][i].conj()).norm()).max((m[i][j] - direct[i][j]).norm());
            }
        }
    }
    props.push(record("coupling-matrix-hermitian", cases, w_h, 1e-14));

    let mut prev = -1.0;
    let mut w_mono: f64 = 0.0;
    for k in 0..=10_000 {
        let e = eof_from_concurrence(k as f64 / 10_000.0)?;
        w_mono = w_mono.max(prev - e).max(-e).max(e - 1.0);
        prev = e;
    }
    props.push(record("eof-monotone-in-range", 10_001, w_mono.max(0.0), 0.0));

    let draws = (cases / 10).max(1);
    let cfg = IntegratorConfig::default().with_sample_interval(100.0);
    let mut w_norm: f64 = 0.0;
    for _ in 0..draws {
        let p = random_params(&mut rng);
        let c0 = random_state(&mut rng);
        let tr = integrate(&c0, &p, 1000.0, &cfg)?;
        w_norm = w_norm.max(tr.last().expect("samples").1.norm_drift());
    }
    props.push(record("unitarity-t1000", draws, w_norm, 1e-8));

    Ok(ValidationReport { seed, passed: props.iter().all(|p| p.passed), properties: props })
}
