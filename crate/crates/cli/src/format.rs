//! Number formatting shared by the summary and CSV writers.

/// Fixed-point decimal with at least nine significant digits; zero prints as
/// `0.000000000`.
pub fn num(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0.000000000".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(9, 40) as usize;
    format!("{v:.decimals$}")
}
