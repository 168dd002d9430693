//! Exact rational helpers used wherever a statement is number-theoretic
//! (moment identities, lattices of means) and floating point cannot certify it.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn from_u64(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact binary value of a finite float.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Fractional part `x - floor(x)`, in `[0, 1)`.
pub fn frac(x: &Rational) -> Rational {
    x - x.floor()
}

pub fn floor_u64(x: &Rational) -> Option<u64> {
    x.floor().to_integer().to_u64()
}

pub fn ceil_u64(x: &Rational) -> Option<u64> {
    x.ceil().to_integer().to_u64()
}

pub fn is_integer(x: &Rational) -> bool {
    x.is_integer()
}

/// Largest `h > 0` with every value in `h * N0`; `None` when all values are 0.
///
/// For reduced fractions `p_i / q_i` this is `gcd(p_i) / lcm(q_i)`.
pub fn lattice_generator<'a, I>(values: I) -> Option<Rational>
where
    I: IntoIterator<Item = &'a Rational>,
{
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for v in values {
        if v.is_zero() {
            continue;
        }
        let v = v.abs();
        num = num.gcd(v.numer());
        den = den.lcm(v.denom());
    }
    if num.is_zero() {
        None
    } else {
        Some(Rational::new(num, den))
    }
}

/// Parses `3`, `-2`, `0.125`, `1/3` or `2.5e-3` exactly.
pub fn parse(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n = parse(n)?;
        let d = parse(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, fraction) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && fraction.is_empty() {
        return None;
    }
    if !whole.chars().chain(fraction.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{whole}{fraction}");
    let n: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().ok()? };
    let scale = exponent - fraction.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(n);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -value } else { value })
}

/// Canonical text form: integers as `n`, everything else as `p/q`.
pub fn format(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_and_fraction_forms() {
        assert_eq!(parse("3"), Some(int(3)));
        assert_eq!(parse("0.125"), Some(ratio(1, 8)));
        assert_eq!(parse("1/3"), Some(ratio(1, 3)));
        assert_eq!(parse("2.5e-1"), Some(ratio(1, 4)));
        assert_eq!(parse("-1.5"), Some(ratio(-3, 2)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("abc"), None);
        assert_eq!(parse("."), None);
    }

    #[test]
    fn lattice_generator_is_gcd_over_lcm() {
        let vals = [ratio(1, 2), ratio(3, 4), int(0)];
        assert_eq!(lattice_generator(vals.iter()), Some(ratio(1, 4)));
        assert_eq!(lattice_generator([int(0)].iter()), None);
        let vals = [ratio(2, 3), int(2)];
        assert_eq!(lattice_generator(vals.iter()), Some(ratio(2, 3)));
    }

    #[test]
    fn conversion_rounds_to_nearest() {
        assert_eq!(to_f64(&ratio(1, 3)), 1.0 / 3.0);
        assert_eq!(to_f64(&ratio(2, 10)), 0.2);
        let x = from_f64(0.1).unwrap();
        assert_eq!(to_f64(&(x.clone() * int(7))), 0.1 * 7.0);
        assert_eq!(frac(&ratio(7, 2)), ratio(1, 2));
    }
}
