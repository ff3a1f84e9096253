//! Engineering-notation values.
//!
//! Suffixes are case-sensitive: `m` is milli and `M` is mega. There is no
//! `meg` spelling. Scaling is applied by shifting the decimal exponent
//! before conversion, so `3.6M` parses to exactly the same `f64` as
//! `3.6e6`.

const SUFFIXES: [(char, i32); 7] = [
    ('p', -12),
    ('n', -9),
    ('u', -6),
    ('m', -3),
    ('k', 3),
    ('M', 6),
    ('G', 9),
];

fn suffix_exponent(c: char) -> Option<i32> {
    SUFFIXES.iter().find(|(s, _)| *s == c).map(|(_, e)| *e)
}

fn suffix_for_exponent(e: i32) -> Option<char> {
    SUFFIXES.iter().find(|(_, x)| *x == e).map(|(s, _)| *s)
}

/// Parse a value such as `220p`, `3.6M`, `1e-3`, or `-0.5`.
pub fn parse_value(text: &str) -> Result<f64, String> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut mantissa = String::new();
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        mantissa.push(bytes[i] as char);
        i += 1;
    }
    let mut digits = 0;
    let mut seen_dot = false;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_digit() {
            digits += 1;
        } else if c == b'.' && !seen_dot {
            seen_dot = true;
        } else {
            break;
        }
        mantissa.push(c as char);
        i += 1;
    }
    if digits == 0 {
        return Err(format!("expected a number, found '{text}'"));
    }
    let mut exponent: i32 = 0;
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let start = i + 1;
        let mut j = start;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let digits_start = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j == digits_start {
            return Err(format!("malformed exponent in '{text}'"));
        }
        exponent = text[start..j]
            .parse()
            .map_err(|_| format!("exponent out of range in '{text}'"))?;
        i = j;
    }
    let rest = &text[i..];
    let mut chars = rest.chars();
    match (chars.next(), chars.next()) {
        (None, _) => {}
        (Some(c), None) => match suffix_exponent(c) {
            Some(e) => exponent += e,
            None => return Err(format!("unknown suffix '{c}' in '{text}'")),
        },
        _ => return Err(format!("unexpected trailing text '{rest}' in '{text}'")),
    }
    let value: f64 = format!("{mantissa}e{exponent}")
        .parse()
        .map_err(|_| format!("invalid number '{text}'"))?;
    if !value.is_finite() {
        return Err(format!("value out of range: '{text}'"));
    }
    Ok(value)
}

/// Canonical engineering form: shortest round-trip digits, with the suffix
/// chosen so the mantissa lies in `[1, 1000)`. Values outside the suffix
/// range fall back to exponent notation.
pub fn format_value(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return format!("{value}");
    }
    // `{:e}` yields the shortest digits that round-trip, e.g. "3.6e6".
    let sci = format!("{:e}", value.abs());
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let sign = if value < 0.0 { "-" } else { "" };

    let group = exp.div_euclid(3) * 3;
    if group == 0 || suffix_for_exponent(group).is_some() {
        let suffix = suffix_for_exponent(group).map(String::from).unwrap_or_default();
        // Position of the decimal point within `digits`.
        let point = (exp - group + 1) as usize;
        let body = if digits.len() <= point {
            format!("{digits}{}", "0".repeat(point - digits.len()))
        } else {
            format!("{}.{}", &digits[..point], &digits[point..])
        };
        format!("{sign}{body}{suffix}")
    } else {
        format!("{sign}{mant}e{exp}")
    }
}
