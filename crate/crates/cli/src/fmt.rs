//! Fixed float formatting for every text output.

/// Shortest decimal with at most 12 significant digits, scientific outside
/// `1e-5 ≤ |x| < 1e12`. Negative zero prints as `0`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(num(123456.789), "123456.789");
        assert_eq!(num(9.9999999999999), "10");
        assert_eq!(num(1e-7), "1e-7");
        assert_eq!(num(1.5e13), "1.5e13");
        assert_eq!(num(std::f64::consts::LN_2), "0.69314718056");
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn parses_back_within_precision() {
        for x in [std::f64::consts::PI, -1234.5678e-3, 7.0e-6, 42.0] {
            let y: f64 = num(x).parse().unwrap();
            assert!((x - y).abs() <= 1e-11 * x.abs());
        }
    }
}
