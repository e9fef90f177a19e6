//! Locale-independent number formatting for CSV output.

/// Significant digits carried by every number written to CSV.
pub const SIGNIFICANT_DIGITS: usize = 15;

/// Formats `x` with [`SIGNIFICANT_DIGITS`] significant digits in positional
/// notation (never exponent form), trailing zeros removed. Non-finite
/// values format as the empty string, which CSV readers treat as missing.
pub fn number(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    // Round once, in scientific form, then lay the digits out positionally.
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };

    let mut out = String::with_capacity(digits.len() + 8);
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(digits);
    } else {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            out.push_str(digits);
            for _ in digits.len()..int_len {
                out.push('0');
            }
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

/// `None` and non-finite values become empty fields.
pub fn optional(x: Option<f64>) -> String {
    x.map(number).unwrap_or_default()
}
