//! Statevector simulation against explicit 2^n × 2^n matrix products.

use num_complex::Complex64 as C;
use qgat_core::statevector::{amplitude_encode, GateOp, StateVector};
use qgat_core::vqc::{build_layout, circuit_forward, CircuitParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Mat = Vec<Vec<C>>;

fn eye(d: usize) -> Mat {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    if i == j {
                        C::new(1.0, 0.0)
                    } else {
                        C::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect()
}

fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![C::new(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

/// `⊗_w ops[w]` with wire 0 as the most significant factor.
fn on_wires(n: usize, ops: &[(usize, Mat)]) -> Mat {
    let mut m = vec![vec![C::new(1.0, 0.0)]];
    for w in 0..n {
        let f = ops
            .iter()
            .find(|(x, _)| *x == w)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| eye(2));
        m = kron(&m, &f);
    }
    m
}

fn matrix(n: usize, gate: &GateOp) -> Mat {
    let c = |re: f64, im: f64| C::new(re, im);
    match *gate {
        GateOp::Ry { wire, angle } => {
            let (s, co) = (angle / 2.0).sin_cos();
            on_wires(
                n,
                &[(
                    wire,
                    vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]],
                )],
            )
        }
        GateOp::Rz { wire, angle } => {
            let m = vec![
                vec![C::from_polar(1.0, -angle / 2.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), C::from_polar(1.0, angle / 2.0)],
            ];
            on_wires(n, &[(wire, m)])
        }
        GateOp::Cnot { control, target } => {
            let p0 = vec![
                vec![c(1.0, 0.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), c(0.0, 0.0)],
            ];
            let p1 = vec![
                vec![c(0.0, 0.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), c(1.0, 0.0)],
            ];
            let x = vec![
                vec![c(0.0, 0.0), c(1.0, 0.0)],
                vec![c(1.0, 0.0), c(0.0, 0.0)],
            ];
            add(
                &on_wires(n, &[(control, p0)]),
                &on_wires(n, &[(control, p1), (target, x)]),
            )
        }
        GateOp::CPhase {
            control,
            target,
            angle,
        } => {
            let d = 1 << n;
            let mut m = eye(d);
            for (i, row) in m.iter_mut().enumerate() {
                let bit = |w: usize| (i >> (n - 1 - w)) & 1 == 1;
                if bit(control) && bit(target) {
                    row[i] = C::from_polar(1.0, angle);
                }
            }
            m
        }
    }
}

fn matvec(m: &Mat, v: &[C]) -> Vec<C> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn random_gate(n: usize, rng: &mut ChaCha8Rng) -> GateOp {
    let wire = rng.random_range(0..n);
    let angle = rng.random_range(-7.0..7.0);
    let other = if n > 1 {
        (wire + rng.random_range(1..n)) % n
    } else {
        wire
    };
    match if n == 1 {
        rng.random_range(0..2)
    } else {
        rng.random_range(0..4)
    } {
        0 => GateOp::Ry { wire, angle },
        1 => GateOp::Rz { wire, angle },
        2 => GateOp::Cnot {
            control: wire,
            target: other,
        },
        _ => GateOp::CPhase {
            control: wire,
            target: other,
            angle,
        },
    }
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Vec<C> {
    let v: Vec<C> = (0..1 << n)
        .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

#[test]
fn random_gate_sequences_match_dense_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let n = 1 + trial % 4;
        let amps = random_state(n, &mut rng);
        let mut sv = StateVector::from_amplitudes(amps.clone()).unwrap();
        let mut dense = amps;
        for _ in 0..12 {
            let g = random_gate(n, &mut rng);
            sv.apply_gate(&g).unwrap();
            dense = matvec(&matrix(n, &g), &dense);
        }
        for (a, b) in sv.amplitudes().iter().zip(&dense) {
            assert!((a - b).norm() < 1e-12, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn ansatz_matches_dense_circuit() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..30 {
        let n = 2 + trial % 3;
        let layers = 1 + trial % 3;
        let params = CircuitParams::random(layers, n, &mut rng);
        let layout = build_layout(n, layers).unwrap();
        let x: Vec<f64> = (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect();

        let mut psi: Vec<C> = amplitude_encode(&x, n).unwrap().amplitudes().to_vec();
        for l in 0..layers {
            for q in 0..n {
                let [m1, m2, m3] = [0, 1, 2].map(|k| params.get(l, q, k));
                for g in [
                    GateOp::Rz { wire: q, angle: m3 },
                    GateOp::Ry { wire: q, angle: m2 },
                    GateOp::Rz { wire: q, angle: m1 },
                ] {
                    psi = matvec(&matrix(n, &g), &psi);
                }
            }
            let r = (l % (n - 1)) + 1;
            for ctrl in 0..n {
                psi = matvec(
                    &matrix(
                        n,
                        &GateOp::Cnot {
                            control: ctrl,
                            target: (ctrl + r) % n,
                        },
                    ),
                    &psi,
                );
            }
        }
        let expect: Vec<f64> = (0..n)
            .map(|q| {
                psi.iter()
                    .enumerate()
                    .map(|(i, a)| {
                        if (i >> (n - 1 - q)) & 1 == 0 {
                            a.norm_sqr()
                        } else {
                            -a.norm_sqr()
                        }
                    })
                    .sum()
            })
            .collect();
        let got = circuit_forward(&x, &params, &layout).unwrap();
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
