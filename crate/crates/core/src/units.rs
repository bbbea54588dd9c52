//! Unit conventions and conversions.
//!
//! Everything stored in this crate is SI (m, s, m/s, m/s²). Speeds cross the
//! API boundary in km/h only where a caller explicitly asks for it; the
//! conversion factor is exactly 1/3.6.

/// Standard gravity, m/s².
pub const G: f64 = 9.81;

/// Exact km/h → m/s conversion.
pub fn kmh_to_ms(v_kmh: f64) -> f64 {
    v_kmh / 3.6
}

/// Exact m/s → km/h conversion.
pub fn ms_to_kmh(v_ms: f64) -> f64 {
    v_ms * 3.6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kmh_roundtrip_is_exact_for_decimal_speeds() {
        for v in [0.0, 50.0, 80.0, 130.0] {
            assert_eq!(ms_to_kmh(kmh_to_ms(v)), v);
        }
    }

    #[test]
    fn known_conversions() {
        assert!((kmh_to_ms(36.0) - 10.0).abs() < 1e-12);
        assert!((kmh_to_ms(130.0) - 36.111111111111114).abs() < 1e-12);
    }
}
