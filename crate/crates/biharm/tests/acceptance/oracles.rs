//! Independent references for J0, Y0, K0: power series near the origin,
//! large-argument asymptotic seeds, and Taylor marching of the defining ODE
//! x y'' + y' + s x y = 0 (s = +1 for J0/Y0, s = -1 for K0) in between.
//! Shares no code path with the library implementation.

const EULER: f64 = 0.577_215_664_901_532_9;

/// (J0, J0') from the ascending series; accurate for x <= ~8.
fn series_j0(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let mut term = 1.0_f64;
    let mut val = 1.0_f64;
    let mut dval = 0.0_f64;
    for n in 1..60 {
        term *= -q / ((n * n) as f64);
        val += term;
        dval += term * 2.0 * n as f64 / x;
        if term.abs() < 1e-20 * val.abs().max(1.0) {
            break;
        }
    }
    (val, dval)
}

/// (Y0, Y0') from the logarithmic series.
fn series_y0(x: f64) -> (f64, f64) {
    let (j0, dj0) = series_j0(x);
    let q = 0.25 * x * x;
    let lg = (0.5 * x).ln() + EULER;
    let mut term = 1.0_f64;
    let mut harmonic = 0.0_f64;
    let mut s = 0.0_f64;
    let mut ds = 0.0_f64;
    for n in 1..60 {
        term *= -q / ((n * n) as f64);
        harmonic += 1.0 / n as f64;
        // (-1)^{n+1} H_n q^n / (n!)^2 = -term * H_n
        s -= term * harmonic;
        ds -= term * harmonic * 2.0 * n as f64 / x;
        if term.abs() * harmonic < 1e-20 * (s.abs() + 1.0) {
            break;
        }
    }
    let c = std::f64::consts::FRAC_2_PI;
    (c * (lg * j0 + s), c * (j0 / x + lg * dj0 + ds))
}

/// (K0, -K1) = (K0, K0') from the asymptotic series; accurate for x >= 30.
fn asym_k0(x: f64) -> (f64, f64) {
    let pref = (std::f64::consts::FRAC_PI_2 / x).sqrt() * (-x).exp();
    let mut sum = [0.0_f64; 2];
    for (slot, nu2_4) in [(0usize, 0.0_f64), (1, 4.0)] {
        let mut a = 1.0_f64;
        let mut acc = 1.0_f64;
        for j in 1..25 {
            let odd = (2 * j - 1) as f64;
            a *= (nu2_4 - odd * odd) / (j as f64 * 8.0 * x);
            acc += a;
            if a.abs() < 1e-18 {
                break;
            }
        }
        sum[slot] = acc;
    }
    (pref * sum[0], -pref * sum[1])
}

/// One Taylor step of x y'' + y' + s x y = 0 from a to a + h.
fn taylor_step(a: f64, h: f64, y: f64, dy: f64, s: f64) -> (f64, f64) {
    let mut c = [0.0_f64; 44];
    c[0] = y;
    c[1] = dy;
    for n in 0..42 {
        let prev = if n == 0 { 0.0 } else { c[n - 1] };
        let np1 = (n + 1) as f64;
        c[n + 2] = -(np1 * np1 * c[n + 1] + s * (a * c[n] + prev))
            / (a * (n + 2) as f64 * np1);
    }
    let mut val = 0.0_f64;
    let mut dval = 0.0_f64;
    for n in (0..44).rev() {
        val = val * h + c[n];
        if n >= 1 {
            dval = dval * h + n as f64 * c[n];
        }
    }
    (val, dval)
}

/// March (y, y') from a to target; steps stay well inside the convergence
/// disk |h| < a around each expansion point.
fn march(mut a: f64, target: f64, mut y: f64, mut dy: f64, s: f64) -> (f64, f64) {
    while (target - a).abs() > 1e-300 {
        let rem = target - a;
        let cap = (0.4 * a).min(0.5);
        let h = rem.clamp(-cap, cap);
        let (ny, ndy) = taylor_step(a, h, y, dy, s);
        y = ny;
        dy = ndy;
        a += h;
        if (target - a).abs() < 1e-14 * target.abs().max(1.0) {
            break;
        }
    }
    (y, dy)
}

pub fn j0(x: f64) -> f64 {
    if x <= 6.0 {
        series_j0(x).0
    } else {
        let (y, dy) = series_j0(6.0);
        march(6.0, x, y, dy, 1.0).0
    }
}

pub fn y0(x: f64) -> f64 {
    if x <= 6.0 {
        series_y0(x).0
    } else {
        let (y, dy) = series_y0(6.0);
        march(6.0, x, y, dy, 1.0).0
    }
}

pub fn k0(x: f64) -> f64 {
    if x >= 30.0 {
        asym_k0(x).0
    } else {
        let (y, dy) = asym_k0(30.0);
        march(30.0, x, y, dy, -1.0).0
    }
}
