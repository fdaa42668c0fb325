//! Base-2 entropy helpers with the convention `0 log 0 = 0`.

/// Binary entropy without range checks; callers guarantee `0 <= q <= 1`.
#[inline]
pub fn h2(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        0.0
    } else {
        -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
    }
}

/// Shannon entropy of a (not necessarily normalized) mass vector, in bits.
pub fn entropy(masses: &[f64]) -> f64 {
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    masses
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| {
            let p = m / total;
            -p * p.log2()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        assert_eq!(h2(0.0), 0.0);
        assert_eq!(h2(1.0), 0.0);
        assert!((h2(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_normalizes() {
        assert!((entropy(&[2.0, 2.0]) - 1.0).abs() < 1e-15);
        assert_eq!(entropy(&[0.0, 3.0]), 0.0);
        assert_eq!(entropy(&[]), 0.0);
    }
}
