/// `printf("%.{sig}g")`: `sig` significant digits, trailing zeros dropped,
/// scientific notation outside `1e-4 <= |x| < 10^sig`.
pub fn fmt_g(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = sig.max(1);
    // The exponent after rounding to `p` digits decides the style.
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Six significant digits, the precision of every summary table.
pub fn g6(x: f64) -> String {
    fmt_g(x, 6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(g6(2.1324), "2.1324");
        assert_eq!(g6(20.150634), "20.1506");
        assert_eq!(g6(0.37021234), "0.370212");
        assert_eq!(g6(100.0), "100");
        assert_eq!(g6(1234567.0), "1.23457e+06");
        assert_eq!(g6(0.0001), "0.0001");
        assert_eq!(g6(0.00001234), "1.234e-05");
        assert_eq!(g6(999999.5), "1e+06");
        assert_eq!(g6(-0.5), "-0.5");
        assert_eq!(g6(0.0), "0");
        assert_eq!(g6(2.0), "2");
    }
}
