//! Numeric text formatting shared by every CSV writer.
//!
//! Values are written with 9 significant digits, using the shortest decimal
//! that parses back to the rounded value. Rounding first and then printing
//! the shortest representation makes `parse(write(quantize(x)))` bit-exact.

/// Rounds to 9 significant digits.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

pub fn fmt_sig9(x: f64) -> String {
    quantize(x).to_string()
}

pub fn fmt_flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn short_forms() {
        assert_eq!(fmt_sig9(0.5), "0.5");
        assert_eq!(fmt_sig9(1.0 / 120.0), "0.00833333333");
        assert_eq!(fmt_sig9(-0.0), "-0");
        assert_eq!(fmt_sig9(123456789012.0), "123456789000");
    }

    proptest! {
        #[test]
        fn quantized_values_round_trip(x in -1e6f64..1e6) {
            let q = quantize(x);
            let back: f64 = fmt_sig9(q).parse().unwrap();
            prop_assert_eq!(back.to_bits(), q.to_bits());
            prop_assert_eq!(quantize(q).to_bits(), q.to_bits());
        }
    }
}
