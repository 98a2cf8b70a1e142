//! Brute-force reference values for J₀, J₁, Y₀, Y₁.
//!
//! Written independently of the library's `specfun` module so the two can be
//! compared: this code favors transparency over speed. Ascending power series
//! (summed in double-double arithmetic to absorb cancellation) cover x ≤ 30;
//! beyond that the large-argument expansions of the phase–amplitude functions
//! P and Q are summed to their smallest term, which at x > 30 lies below
//! 1e-25. Both regimes are accurate to well under 1e-13 relative, the
//! tolerance the comparison tests use.

/// Double-double value a + b with |b| ≤ ½ ulp(a).
#[derive(Clone, Copy)]
pub struct Q2(f64, f64);

impl Q2 {
    pub fn new(x: f64) -> Q2 {
        Q2(x, 0.0)
    }

    pub fn value(self) -> f64 {
        self.0 + self.1
    }

    pub fn add(self, o: Q2) -> Q2 {
        let s = self.0 + o.0;
        let v = s - self.0;
        let e = (self.0 - (s - v)) + (o.0 - v);
        let lo = e + self.1 + o.1;
        let hi = s + lo;
        Q2(hi, lo - (hi - s))
    }

    pub fn sub(self, o: Q2) -> Q2 {
        self.add(Q2(-o.0, -o.1))
    }

    pub fn mul(self, o: Q2) -> Q2 {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p);
        let lo = e + self.0 * o.1 + self.1 * o.0;
        let hi = p + lo;
        Q2(hi, lo - (hi - p))
    }

    pub fn div(self, o: Q2) -> Q2 {
        let q1 = self.0 / o.0;
        let r = self.sub(o.mul(Q2::new(q1)));
        let q2 = r.0 / o.0;
        let r2 = r.sub(o.mul(Q2::new(q2)));
        let q3 = r2.0 / o.0;
        Q2::new(q1).add(Q2::new(q2)).add(Q2::new(q3))
    }
}

/// π to double-double precision (hi = nearest f64, lo = remainder).
fn pi_q2() -> Q2 {
    Q2(std::f64::consts::PI, 1.2246467991473532e-16)
}

/// Euler–Mascheroni constant to double-double precision.
fn gamma_q2() -> Q2 {
    Q2(0.5772156649015329, -4.942915152430645e-18)
}

const SERIES_MAX: f64 = 30.0;

/// Ascending series for J_n, n ∈ {0, 1}.
fn j_series(n: usize, x: f64) -> Q2 {
    let z = Q2::new(x).mul(Q2::new(x));
    let mut term = if n == 0 {
        Q2::new(1.0)
    } else {
        Q2::new(x / 2.0)
    };
    let mut sum = term;
    for k in 1..400 {
        let kf = k as f64;
        term = term.mul(z).div(Q2::new(-4.0 * kf * (kf + n as f64)));
        sum = sum.add(term);
        if term.0.abs() < 1e-42 * (sum.0.abs() + 1.0) {
            break;
        }
    }
    sum
}

/// Ascending series for Y_n, n ∈ {0, 1}, via the standard logarithmic form.
fn y_series(n: usize, x: f64) -> Q2 {
    let z = Q2::new(x).mul(Q2::new(x));
    let two_over_pi = Q2::new(2.0).div(pi_q2());
    let log_term = Q2::new((0.5 * x).ln());
    if n == 0 {
        // Y0 = (2/π)(ln(x/2)+γ) J0 + (2/π) Σ_{k≥1} (−1)^{k+1} H_k (x²/4)^k/(k!)²
        let mut sum = Q2::new(0.0);
        let mut term = Q2::new(1.0);
        let mut h = Q2::new(0.0);
        for k in 1..400 {
            let kf = k as f64;
            term = term.mul(z).div(Q2::new(4.0 * kf * kf));
            h = h.add(Q2::new(1.0).div(Q2::new(kf)));
            let t = term.mul(h);
            sum = if k % 2 == 1 { sum.add(t) } else { sum.sub(t) };
            if term.0.abs() * (h.0 + 1.0) < 1e-42 * (sum.0.abs() + 1.0) {
                break;
            }
        }
        two_over_pi
            .mul(log_term.add(gamma_q2()))
            .mul(j_series(0, x))
            .add(two_over_pi.mul(sum))
    } else {
        // Y1 = (2/π) ln(x/2) J1 − 2/(πx)
        //      − (1/π) Σ_{k≥0} (ψ(k+1)+ψ(k+2)) (−1)^k (x/2)^{2k+1}/(k!(k+1)!)
        let mut term = Q2::new(x / 2.0); // (x/2)^{2k+1}/(k!(k+1)!)
        let mut psi = gamma_q2().mul(Q2::new(-2.0)).add(Q2::new(1.0)); // ψ(1)+ψ(2)
        let mut sum = term.mul(psi);
        let mut sign = 1.0;
        for k in 1..400 {
            let kf = k as f64;
            term = term.mul(z).div(Q2::new(4.0 * kf * (kf + 1.0)));
            psi = psi
                .add(Q2::new(1.0).div(Q2::new(kf)))
                .add(Q2::new(1.0).div(Q2::new(kf + 1.0)));
            sign = -sign;
            let t = term.mul(psi).mul(Q2::new(sign));
            sum = sum.add(t);
            if term.0.abs() * (psi.0.abs() + 1.0) < 1e-42 * (sum.0.abs() + 1.0) {
                break;
            }
        }
        two_over_pi
            .mul(log_term)
            .mul(j_series(1, x))
            .sub(two_over_pi.div(Q2::new(x)))
            .sub(sum.div(pi_q2()))
    }
}

/// Large-argument P_n and Q_n, summed to the smallest term.
fn pq_asymptotic(n: usize, x: f64) -> (f64, f64) {
    let four_nu_sq = (4 * n * n) as f64;
    let mut p = Q2::new(0.0);
    let mut q = Q2::new(0.0);
    // a_j / x^j with alternating assignment to P (even j) and Q (odd j).
    let mut a = Q2::new(1.0);
    let mut prev = f64::INFINITY;
    for j in 0..60i32 {
        let jf = j as f64;
        let term_mag = a.0.abs() / x.powi(j);
        if term_mag > prev {
            break; // divergence point of the asymptotic series
        }
        prev = term_mag;
        let term = a.div(pow_q2(x, j));
        let signed = match j % 4 {
            0 => term,               // +P
            1 => term,               // +Q
            2 => Q2(-term.0, -term.1), // −P
            _ => Q2(-term.0, -term.1), // −Q
        };
        if j % 2 == 0 {
            p = p.add(signed);
        } else {
            q = q.add(signed);
        }
        if term_mag < 1e-30 {
            break;
        }
        let odd = (2 * j + 1) as f64;
        a = a
            .mul(Q2::new(four_nu_sq - odd * odd))
            .div(Q2::new(8.0 * (jf + 1.0)));
    }
    (p.value(), q.value())
}

fn pow_q2(x: f64, j: i32) -> Q2 {
    let mut acc = Q2::new(1.0);
    for _ in 0..j {
        acc = acc.mul(Q2::new(x));
    }
    acc
}

fn jy_large(n: usize, x: f64) -> (f64, f64) {
    let (p, q) = pq_asymptotic(n, x);
    let amp = (2.0 / (std::f64::consts::PI * x)).sqrt();
    let chi = x - (0.25 + 0.5 * n as f64) * std::f64::consts::PI;
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// Reference J_n(x), n ∈ {0,1}, for 0 ≤ x ≤ 1e6.
pub fn j(n: usize, x: f64) -> f64 {
    assert!(n <= 1 && x >= 0.0);
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_MAX {
        j_series(n, x).value()
    } else {
        jy_large(n, x).0
    }
}

/// Reference Y_n(x), n ∈ {0,1}, for 0 < x ≤ 1e6.
pub fn y(n: usize, x: f64) -> f64 {
    assert!(n <= 1 && x > 0.0);
    if x <= SERIES_MAX {
        y_series(n, x).value()
    } else {
        jy_large(n, x).1
    }
}

/// (J_n, Y_n) forced through the ascending series (valid for x ≲ 36).
pub fn jy_from_series(n: usize, x: f64) -> (f64, f64) {
    (j_series(n, x).value(), y_series(n, x).value())
}

/// (J_n, Y_n) forced through the large-argument expansion (valid for x ≳ 28).
pub fn jy_from_asymptotic(n: usize, x: f64) -> (f64, f64) {
    jy_large(n, x)
}
