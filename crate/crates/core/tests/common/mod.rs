//! Brute-force enumeration shared by the oracle and acceptance targets.

#![allow(dead_code)]

pub fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

pub fn entropy_of(masses: &[f64]) -> f64 {
    let z: f64 = masses.iter().sum();
    masses
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| -(m / z) * (m / z).log2())
        .sum()
}

pub struct Round {
    pub p: f64,
    pub h_good: f64,
    pub h_bad: f64,
}

/// Walks all `2^N` noise words. Column `j` of `F^{(x)s}` has a one in row
/// `i` exactly when `i & j == j`; round `t` splits on column `t - 1`.
pub fn enumerate_rounds(q: f64, s: u32) -> Vec<Round> {
    let n = 1usize << s;
    let col = |j: usize| -> Vec<usize> { (0..n).filter(|&i| i & j == j).collect() };
    let prob = |e: usize| -> f64 {
        let w = e.count_ones() as i32;
        q.powi(w) * (1.0 - q).powi(n as i32 - w)
    };
    // bit i of `e` is position i of the word
    let dot = |e: usize, c: &[usize]| c.iter().filter(|&&i| e >> i & 1 == 1).count() % 2;
    let mut alive: Vec<usize> = (0..1usize << n).collect();
    let mut out = Vec::new();
    for t in 1..n {
        let c = col(t - 1);
        let (good, bad): (Vec<usize>, Vec<usize>) = alive.iter().partition(|&&e| dot(e, &c) == 0);
        let mg: Vec<f64> = good.iter().map(|&e| prob(e)).collect();
        let mb: Vec<f64> = bad.iter().map(|&e| prob(e)).collect();
        let total: f64 = mg.iter().chain(&mb).sum();
        out.push(Round {
            p: mb.iter().sum::<f64>() / total,
            h_good: entropy_of(&mg),
            h_bad: entropy_of(&mb),
        });
        alive = good;
    }
    out
}
