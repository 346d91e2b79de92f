//! Reference implementations that share no code with the library: explicit
//! 2^n × 2^n gate matrices and brute-force metric definitions.

use num_complex::Complex64 as C;
use qgat_core::statevector::GateOp;

pub type Mat = Vec<Vec<C>>;

fn zero() -> C {
    C::new(0.0, 0.0)
}

fn one() -> C {
    C::new(1.0, 0.0)
}

fn eye(d: usize) -> Mat {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { one() } else { zero() })
                .collect()
        })
        .collect()
}

fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![zero(); ra * rb]; ra * rb];
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

/// `⊗_w ops[w]`, identity on unlisted wires, wire 0 most significant.
fn on_wires(n: usize, ops: &[(usize, Mat)]) -> Mat {
    let mut m = vec![vec![one()]];
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

pub fn gate_matrix(n: usize, gate: &GateOp) -> Mat {
    match *gate {
        GateOp::Ry { wire, angle } => {
            let (s, c) = (angle / 2.0).sin_cos();
            let m = vec![
                vec![C::new(c, 0.0), C::new(-s, 0.0)],
                vec![C::new(s, 0.0), C::new(c, 0.0)],
            ];
            on_wires(n, &[(wire, m)])
        }
        GateOp::Rz { wire, angle } => {
            let m = vec![
                vec![C::from_polar(1.0, -angle / 2.0), zero()],
                vec![zero(), C::from_polar(1.0, angle / 2.0)],
            ];
            on_wires(n, &[(wire, m)])
        }
        GateOp::Cnot { control, target } => {
            let p0 = vec![vec![one(), zero()], vec![zero(), zero()]];
            let p1 = vec![vec![zero(), zero()], vec![zero(), one()]];
            let x = vec![vec![zero(), one()], vec![one(), zero()]];
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
            let mut m = eye(1 << n);
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

pub fn matvec(m: &Mat, v: &[C]) -> Vec<C> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `⟨Z_q⟩` for every wire.
pub fn expect_z(psi: &[C], n: usize) -> Vec<f64> {
    (0..n)
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
        .collect()
}

/// Ansatz from its definition: per wire RZ(μ3), RY(μ2), RZ(μ1), then a
/// CNOT ring `(i, (i + r) mod n)` with `r = (ℓ mod (n − 1)) + 1`.
pub fn ansatz_expectations(x: &[f64], angles: &[f64], n: usize, layers: usize) -> Vec<f64> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut psi: Vec<C> = x.iter().map(|v| C::new(v / norm, 0.0)).collect();
    for l in 0..layers {
        for q in 0..n {
            let mu = |k: usize| angles[(l * n + q) * 3 + k];
            for g in [
                GateOp::Rz {
                    wire: q,
                    angle: mu(2),
                },
                GateOp::Ry {
                    wire: q,
                    angle: mu(1),
                },
                GateOp::Rz {
                    wire: q,
                    angle: mu(0),
                },
            ] {
                psi = matvec(&gate_matrix(n, &g), &psi);
            }
        }
        let r = (l % (n - 1)) + 1;
        for c in 0..n {
            psi = matvec(
                &gate_matrix(
                    n,
                    &GateOp::Cnot {
                        control: c,
                        target: (c + r) % n,
                    },
                ),
                &psi,
            );
        }
    }
    expect_z(&psi, n)
}

pub fn accuracy(logits: &[Vec<f64>], y: &[usize], rows: &[usize]) -> f64 {
    let hits = rows
        .iter()
        .filter(|&&r| {
            let best = logits[r].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            logits[r].iter().position(|&v| v == best) == Some(y[r])
        })
        .count();
    hits as f64 / rows.len() as f64
}

pub fn micro_f1(logits: &[Vec<f64>], targets: &[Vec<bool>]) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (row, t) in logits.iter().zip(targets) {
        for (&v, &b) in row.iter().zip(t) {
            match (v > 0.0, b) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
        }
    }
    if tp + fp + fneg == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
    }
}

pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let (mut wins, mut pairs) = (0.0, 0usize);
    for (&si, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
        for (&sj, _) in scores.iter().zip(labels).filter(|(_, &l)| !l) {
            pairs += 1;
            wins += if si > sj {
                1.0
            } else if si == sj {
                0.5
            } else {
                0.0
            };
        }
    }
    (pairs > 0).then(|| wins / pairs as f64)
}

/// A positive hits when fewer than `k` negatives score at least as high.
pub fn hits_at_k(pos: &[f64], neg: &[f64], k: usize) -> f64 {
    let hits = pos
        .iter()
        .filter(|&&p| neg.len() < k || neg.iter().filter(|&&q| q >= p).count() < k)
        .count();
    hits as f64 / pos.len() as f64
}

pub fn mrr(pos: &[f64], neg: &[f64]) -> f64 {
    pos.iter()
        .map(|&p| {
            let above = neg.iter().filter(|&&q| q > p).count() as f64;
            let ties = neg.iter().filter(|&&q| q == p).count() as f64;
            1.0 / (1.0 + above + 0.5 * ties)
        })
        .sum::<f64>()
        / pos.len() as f64
}
