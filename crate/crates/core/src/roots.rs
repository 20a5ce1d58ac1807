//! One-dimensional root finding for monotone increasing functions.

/// Largest multiplier tried when bracketing.
pub(crate) const LAMBDA_CAP: f64 = 1_048_576.0;

/// Finds `x` in `[lo, hi]` with `f(x) = target` for increasing `f`, given
/// `f(lo) < target <= f(hi)`. Illinois-modified regula falsi with a bisection
/// safeguard; stops when `|f(x) - target| <= ftol` or the bracket collapses.
pub(crate) fn solve_increasing(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    flo: f64,
    mut hi: f64,
    fhi: f64,
    target: f64,
    ftol: f64,
) -> (f64, f64) {
    let (mut glo, mut ghi) = (flo - target, fhi - target);
    let mut side = 0i8;
    let mut best = (hi, fhi);
    for it in 0..200 {
        let mut x = if it % 4 == 3 || ghi == glo {
            0.5 * (lo + hi)
        } else {
            (lo * ghi - hi * glo) / (ghi - glo)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        let gx = fx - target;
        if gx >= 0.0 {
            best = (x, fx);
        }
        if gx.abs() <= ftol {
            return (x, fx);
        }
        if gx < 0.0 {
            lo = x;
            glo = gx;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            ghi = gx;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    best
}

/// Doubles from `start` until `f(x) >= target`; `None` past [`LAMBDA_CAP`].
pub(crate) fn bracket_up(mut f: impl FnMut(f64) -> f64, start: f64, target: f64) -> Option<(f64, f64)> {
    let mut x = start;
    loop {
        let fx = f(x);
        if fx >= target {
            return Some((x, fx));
        }
        if x >= LAMBDA_CAP {
            return None;
        }
        x *= 2.0;
    }
}
