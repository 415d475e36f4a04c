//! Independent oracles shared by the integration and acceptance suites.
//!
//! Nothing here calls into the library's regression or special-function code.
#![allow(dead_code)]

/// Simple regression solved from the raw (uncentered) normal equations.
#[derive(Debug, Clone, Copy)]
pub struct OracleFit {
    pub beta: f64,
    pub intercept: f64,
    pub r2: f64,
    pub se_beta: f64,
    pub se_intercept: f64,
}

/// Solves [[n, Σx], [Σx, Σx²]]·[a, b] = [Σy, Σxy] by Cramer's rule on
/// log-space data, with sums accumulated in compensated (Neumaier) arithmetic.
pub fn normal_equations(xs: &[f64], ys: &[f64]) -> OracleFit {
    let n = xs.len() as f64;
    let sx = ksum(xs.iter().copied());
    let sy = ksum(ys.iter().copied());
    let sxx = ksum(xs.iter().map(|x| x * x));
    let sxy = ksum(xs.iter().zip(ys).map(|(x, y)| x * y));
    let det = n * sxx - sx * sx;
    let beta = (n * sxy - sx * sy) / det;
    let intercept = (sy * sxx - sx * sxy) / det;
    let sse = ksum(xs.iter().zip(ys).map(|(x, y)| {
        let e = y - intercept - beta * x;
        e * e
    }));
    let syy = ksum(ys.iter().map(|y| y * y));
    let cov = n * sxy - sx * sy;
    let s2 = sse / (n - 2.0);
    OracleFit {
        beta,
        intercept,
        r2: cov * cov / (det * (n * syy - sy * sy)),
        se_beta: (s2 * n / det).sqrt(),
        se_intercept: (s2 * sxx / det).sqrt(),
    }
}

fn ksum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Two-sided Student-t tail by quadrature of the density.
///
/// Substituting s = sqrt(df)·tan θ maps the density to a multiple of
/// cos^(df−1) θ on (−π/2, π/2), so
/// P(|T| ≥ t) = ∫_{θt}^{π/2} cos^(df−1) / ∫_0^{π/2} cos^(df−1), θt = atan(|t|/sqrt(df)).
/// Both integrals use adaptive Simpson with a relative stopping rule; no gamma
/// function is involved.
pub fn t_two_sided_quadrature(t: f64, df: f64) -> f64 {
    let f = |theta: f64| {
        let c = theta.cos();
        if c <= 0.0 {
            0.0
        } else {
            ((df - 1.0) * c.ln()).exp()
        }
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let theta_t = (t.abs() / df.sqrt()).atan();
    let total = integrate(&f, 0.0, half_pi);
    let tail = integrate(&f, theta_t, half_pi);
    tail / total
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const PANELS: usize = 256;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            let (flo, fhi, fmid) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = simpson(lo, hi, flo, fmid, fhi);
            adaptive(f, lo, hi, flo, fmid, fhi, whole, 30)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, depth: u32) -> f64 {
    const RTOL: f64 = 1e-13;
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * RTOL * (left + right).abs() {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, depth - 1) + adaptive(f, m, b, fm, frm, fb, right, depth - 1)
}

/// Relative difference with the larger magnitude as the scale.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Small deterministic generator for test inputs (xorshift64*).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Positive value with ln uniform on [ln lo, ln hi].
    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.range(lo.ln(), hi.ln()).exp()
    }
}
