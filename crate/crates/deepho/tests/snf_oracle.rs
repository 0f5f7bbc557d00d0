//! Cross-checks the Smith normal form and integer solver against independent
//! brute-force oracles on dense random matrices.

use deepho::linalg::{snf, solve_integer_linear, SparseIntMatrix};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Determinantal-divisors oracle: the k-th invariant factor equals
/// `gcd(k-minors) / gcd((k-1)-minors)`. Entirely independent of any matrix
/// reduction code; exact in i128 for matrices up to 6x6 with small entries.
fn oracle_snf(m: Vec<Vec<i128>>) -> Vec<i128> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let n = rows.min(cols);

    fn det(m: &[Vec<i128>], rs: &[usize], cs: &[usize]) -> i128 {
        if rs.len() == 1 {
            return m[rs[0]][cs[0]];
        }
        let mut acc = 0i128;
        let mut sign = 1i128;
        let rest: Vec<usize> = rs[1..].to_vec();
        for (idx, &c) in cs.iter().enumerate() {
            let sub: Vec<usize> =
                cs.iter().enumerate().filter(|&(i, _)| i != idx).map(|(_, &cc)| cc).collect();
            acc += sign * m[rs[0]][c] * det(m, &rest, &sub);
            sign = -sign;
        }
        acc
    }

    fn gcd(a: i128, b: i128) -> i128 {
        let (mut a, mut b) = (a.abs(), b.abs());
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    }

    let mut divisors = vec![1i128]; // d_0 = 1
    for k in 1..=n {
        let mut g = 0i128;
        for rs in subsets(rows, k) {
            for cs in subsets(cols, k) {
                g = gcd(g, det(&m, &rs, &cs));
            }
        }
        if g == 0 {
            break;
        }
        divisors.push(g);
    }
    (1..divisors.len()).map(|k| divisors[k] / divisors[k - 1]).collect()
}

fn random_matrix(rng: &mut ChaCha8Rng) -> Vec<Vec<i128>> {
    let rows = rng.gen_range(1..=6);
    let cols = rng.gen_range(1..=6);
    (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-9..=9)).collect()).collect()
}

fn to_sparse(m: &[Vec<i128>]) -> SparseIntMatrix {
    let rows = m.len();
    let cols = m[0].len();
    let mut s = SparseIntMatrix::new(rows, cols);
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0 {
                s.set(i, j, BigInt::from(v));
            }
        }
    }
    s
}

#[test]
fn snf_matches_determinantal_divisor_oracle_on_500_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for case in 0..500 {
        let dense = random_matrix(&mut rng);
        let a = to_sparse(&dense);
        let s = snf(&a);
        let got: Vec<BigInt> = s.diag.clone();
        let want: Vec<BigInt> = oracle_snf(dense.clone()).into_iter().map(BigInt::from).collect();
        assert_eq!(got, want, "case {}: invariant factors disagree for {:?}", case, dense);
        // divisibility chain
        for w in s.diag.windows(2) {
            assert!((&w[1] % &w[0]).is_zero(), "case {}: diag not dividing", case);
        }
        // U A V = D, with U, V unimodular (checked via explicit inverses).
        let u = s.u_matrix();
        let v = s.v_matrix();
        let uav = u.mul(&a).mul(&v);
        assert_eq!(uav, s.d_matrix(), "case {}: U A V != D", case);
        // U and V invert to identity through the op logs.
        for col in 0..s.rows {
            let mut e = vec![BigInt::zero(); s.rows];
            e[col] = BigInt::one();
            s.apply_u(&mut e);
            s.apply_u_inv(&mut e);
            let want_e: Vec<BigInt> =
                (0..s.rows).map(|i| if i == col { BigInt::one() } else { BigInt::zero() }).collect();
            assert_eq!(e, want_e, "case {}: U inverse mismatch", case);
        }
        for col in 0..s.cols {
            let mut e = vec![BigInt::zero(); s.cols];
            e[col] = BigInt::one();
            s.apply_v(&mut e);
            s.apply_v_inv(&mut e);
            let want_e: Vec<BigInt> =
                (0..s.cols).map(|i| if i == col { BigInt::one() } else { BigInt::zero() }).collect();
            assert_eq!(e, want_e, "case {}: V inverse mismatch", case);
        }
        // Kernel vectors actually lie in the kernel.
        for kv in s.kernel_basis() {
            let img = a.mul_vec(&kv);
            assert!(img.iter().all(|x| x.is_zero()), "case {}: kernel vector fails", case);
        }
    }
}

/// Independent solver oracle: dense column-style Hermite elimination over Q
/// with exact integers is overkill here; instead verify positive verdicts by
/// substitution and negative verdicts against exhaustive small search when
/// the solution box is tractable, plus a rank-based rational check.
fn rational_solvable(a: &[Vec<i128>], b: &[i128]) -> bool {
    // fraction-free Gaussian elimination on [A | b]
    let rows = a.len();
    let cols = a[0].len();
    let mut m: Vec<Vec<i128>> =
        a.iter().zip(b).map(|(r, &bv)| r.iter().cloned().chain([bv]).collect()).collect();
    let mut rank_a = 0;
    let mut pivots = Vec::new();
    for col in 0..cols {
        let Some(p) = (rank_a..rows).find(|&i| m[i][col] != 0) else { continue };
        m.swap(rank_a, p);
        for i in 0..rows {
            if i != rank_a && m[i][col] != 0 {
                let (pa, pb) = (m[rank_a][col], m[i][col]);
                for j in 0..=cols {
                    m[i][j] = m[i][j] * pa - m[rank_a][j] * pb;
                }
            }
        }
        pivots.push(col);
        rank_a += 1;
        if rank_a == rows {
            break;
        }
    }
    // inconsistent iff some zero-row of A has nonzero b
    for row in &m {
        if row[..cols].iter().all(|&v| v == 0) && row[cols] != 0 {
            return false;
        }
    }
    true
}

#[test]
fn integer_solver_verdicts_cross_checked() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut yes = 0;
    let mut no = 0;
    for case in 0..500 {
        let dense = random_matrix(&mut rng);
        let rows = dense.len();
        let cols = dense[0].len();
        let a = to_sparse(&dense);
        // Half the cases: b in the image (solvable by construction).
        let in_image = rng.gen_bool(0.5);
        let b: Vec<i128> = if in_image {
            let x: Vec<i128> = (0..cols).map(|_| rng.gen_range(-4..=4)).collect();
            (0..rows).map(|i| (0..cols).map(|j| dense[i][j] * x[j]).sum()).collect()
        } else {
            (0..rows).map(|_| rng.gen_range(-9..=9)).collect()
        };
        let bb: Vec<BigInt> = b.iter().map(|&v| BigInt::from(v)).collect();
        match solve_integer_linear(&a, &bb) {
            Some(x) => {
                yes += 1;
                let img = a.mul_vec(&x);
                assert_eq!(img, bb, "case {}: solver returned a non-solution", case);
            }
            None => {
                no += 1;
                assert!(!in_image, "case {}: solver missed a known solution", case);
                // If it is rationally solvable, trust the divisibility
                // criterion but double-check with a bounded search on tiny
                // systems.
                if cols <= 3 && rational_solvable(&dense, &b) {
                    let bound = 30i128;
                    let mut found = false;
                    let mut x = vec![-bound; cols];
                    'search: loop {
                        let ok = (0..rows)
                            .all(|i| (0..cols).map(|j| dense[i][j] * x[j]).sum::<i128>() == b[i]);
                        if ok {
                            found = true;
                            break;
                        }
                        for j in 0..cols {
                            x[j] += 1;
                            if x[j] <= bound {
                                continue 'search;
                            }
                            x[j] = -bound;
                        }
                        break;
                    }
                    assert!(!found, "case {}: solver said None but solution exists", case);
                }
            }
        }
    }
    // Sanity: both verdicts exercised.
    assert!(yes > 100 && no > 50, "unexpected verdict distribution: {} / {}", yes, no);
}
