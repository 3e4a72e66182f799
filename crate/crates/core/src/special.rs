//! Log-factorials and integer-order Bessel functions.

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// Bessel function of the first kind `J_n(x)` for any integer order.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    libm::jn(n as i32, x)
}

/// `x mod m` in `[0, m)`.
pub fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = libm::fmod(x, m);
    if r < 0.0 {
        // r + m can round up to m for tiny negative r
        let y = r + m;
        if y >= m {
            0.0
        } else {
            y
        }
    } else {
        r
    }
}

/// Smallest `N` with `Σ_{|n|>N} J_n(2 g_L)² < 1e-14`.
///
/// This is the number of PINEM sidebands kept on either side of the carrier.
pub fn bessel_cutoff(g_l: f64) -> usize {
    let x = 2.0 * g_l.abs();
    let mut n = 0usize;
    loop {
        // J_n(x)² decays super-exponentially once n > x, 60 extra terms is plenty
        let mut tail = 0.0;
        for k in (n + 1)..(n + 61) {
            let j = bessel_j(k as i64, x);
            tail += 2.0 * j * j;
        }
        if tail < 1e-14 {
            return n;
        }
        n += 1;
    }
}

/// Largest harmonic index worth keeping for Bessel amplitudes whose argument
/// never exceeds `x_max`: beyond it `|J_n| < tol` for every argument in range.
pub fn harmonic_cutoff(x_max: f64, tol: f64) -> usize {
    let x = x_max.abs();
    let mut n = 1usize;
    // |J_n(y)| is increasing in |y| on [0, n] so checking y = x suffices past n > x
    while (n as f64) <= x || bessel_j(n as i64, x).abs() >= tol {
        n += 1;
    }
    n - 1
}
