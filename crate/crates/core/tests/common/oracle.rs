//! Independent numerical oracles for tests: quadrature, KS tests and brute-force
//! enumeration. Nothing here calls into the library.
#![allow(dead_code)]

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    // Split into panels first so narrow peaks are not missed.
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            let (fa, fb) = (f(lo), f(hi));
            let (m, fm, whole) = simpson(f, lo, fa, hi, fb);
            rec(f, lo, fa, hi, fb, m, fm, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// `E[X^k]` under GIG(p, chi, psi), by quadrature in `u = ln x`.
pub fn gig_moment(p: f64, chi: f64, psi: f64, k: f64) -> f64 {
    let logk = |x: f64| (p - 1.0) * x.ln() - 0.5 * (chi / x + psi * x);
    let (lo, hi, shift) = log_range(&|u: f64| logk(u.exp()) + u);
    let num = integrate(&|u: f64| (logk(u.exp()) + u + k * u - shift).exp(), lo, hi, 1e-13);
    let den = integrate(&|u: f64| (logk(u.exp()) + u - shift).exp(), lo, hi, 1e-13);
    num / den
}

/// Finds a `u` range outside of which `exp(g(u) - max g)` is negligible.
fn log_range<G: Fn(f64) -> f64>(g: &G) -> (f64, f64, f64) {
    let grid: Vec<f64> = (0..=8000).map(|i| -200.0 + i as f64 * 0.05).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| g(u)).collect();
    let max = vals.iter().cloned().filter(|v| v.is_finite()).fold(f64::MIN, f64::max);
    let keep: Vec<usize> = (0..grid.len()).filter(|&i| vals[i] - max > -60.0).collect();
    let lo = grid[keep[0].saturating_sub(1)];
    let hi = grid[(keep[keep.len() - 1] + 1).min(grid.len() - 1)];
    (lo, hi, max)
}

/// Mean of N(mu, 1) truncated to `x > 0` (positive) or `x <= 0`.
pub fn truncated_normal_mean(mu: f64, positive: bool) -> f64 {
    let dens = |x: f64| (-(x - mu) * (x - mu) / 2.0).exp();
    let (a, b) = if positive { (0.0, mu.max(0.0) + 40.0) } else { (mu.min(0.0) - 40.0, 0.0) };
    integrate(&|x| x * dens(x), a, b, 1e-14) / integrate(&dens, a, b, 1e-14)
}

/// Numerical CDF built by cumulative quadrature of an unnormalized density over a grid.
pub struct GridCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridCdf {
    /// `log_density` is an unnormalized log density on `(lo, hi)`; `log_scale` integrates in
    /// `u = ln x` (for positive supports).
    pub fn new<F: Fn(f64) -> f64>(log_density: F, lo: f64, hi: f64, log_scale: bool) -> Self {
        let n = 400_000;
        let (ulo, uhi) = if log_scale { (lo.ln(), hi.ln()) } else { (lo, hi) };
        let g = |u: f64| {
            if log_scale {
                log_density(u.exp()) + u
            } else {
                log_density(u)
            }
        };
        let h = (uhi - ulo) / n as f64;
        let shift = (0..=n).map(|i| g(ulo + i as f64 * h)).filter(|v| v.is_finite()).fold(f64::MIN, f64::max);
        let f = |u: f64| {
            let v = (g(u) - shift).exp();
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        let mut xs = Vec::with_capacity(n + 1);
        let mut cdf = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        let mut fa = f(ulo);
        for i in 0..=n {
            let u = ulo + i as f64 * h;
            if i > 0 {
                let fm = f(u - 0.5 * h);
                let fb = f(u);
                acc += h / 6.0 * (fa + 4.0 * fm + fb);
                fa = fb;
            }
            xs.push(if log_scale { u.exp() } else { u });
            cdf.push(acc);
        }
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        Self { xs, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let i = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        c0 + (c1 - c0) * (x - x0) / (x1 - x0)
    }
}

/// Two-sided one-sample Kolmogorov-Smirnov test. Returns `(D, p-value)`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> (f64, f64) {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let en = n.sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    (d, kolmogorov_q(lambda))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Posterior over all 2^T regime paths of a two-state chain with per-period transition
/// matrices (`pmats[t][i][j]` = Pr(S_t = j | S_{t-1} = i); `pmats[0]` unused), initial
/// distribution `init`, and log likelihoods `loglik[t][j]`. Index bit `t` of the path id is
/// the state at time `t`.
pub fn enumerate_paths(loglik: &[[f64; 2]], pmats: &[[[f64; 2]; 2]], init: [f64; 2]) -> Vec<f64> {
    let n = loglik.len();
    let mut w = vec![0.0; 1 << n];
    for (id, wi) in w.iter_mut().enumerate() {
        let s = |t: usize| (id >> t) & 1;
        let mut lp = init[s(0)].ln() + loglik[0][s(0)];
        for t in 1..n {
            lp += pmats[t][s(t - 1)][s(t)].ln() + loglik[t][s(t)];
        }
        *wi = lp;
    }
    let max = w.iter().cloned().fold(f64::MIN, f64::max);
    let total: f64 = w.iter().map(|v| (v - max).exp()).sum();
    w.iter().map(|v| (v - max).exp() / total).collect()
}

/// Filtered Pr(S_t = 1 | data up to t) by enumerating prefixes.
pub fn enumerate_filtered(loglik: &[[f64; 2]], pmats: &[[[f64; 2]; 2]], init: [f64; 2]) -> Vec<f64> {
    (1..=loglik.len())
        .map(|len| {
            let probs = enumerate_paths(&loglik[..len], &pmats[..len], init);
            probs
                .iter()
                .enumerate()
                .filter(|(id, _)| (id >> (len - 1)) & 1 == 1)
                .map(|(_, p)| p)
                .sum()
        })
        .collect()
}

/// Sample autocorrelation-free reference: the AR(1) inefficiency factor (1 + rho)/(1 - rho).
pub fn ar1_inefficiency(rho: f64) -> f64 {
    (1.0 + rho) / (1.0 - rho)
}
