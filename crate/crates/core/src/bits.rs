//! Bit-level helpers shared by the table-based modules.

/// Gathers the bits of `x` selected by `mask` into the low bits of the
/// result, preserving their order (a software `pext`).
#[inline]
pub fn compress(x: usize, mask: usize) -> usize {
    let mut out = 0;
    let mut m = mask;
    let mut k = 0;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if x & low != 0 {
            out |= 1 << k;
        }
        k += 1;
        m &= m - 1;
    }
    out
}

/// Inverse of [`compress`]: scatters the low bits of `y` onto the positions
/// selected by `mask`.
#[inline]
pub fn expand(y: usize, mask: usize) -> usize {
    let mut out = 0;
    let mut m = mask;
    let mut k = 0;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if y & (1 << k) != 0 {
            out |= low;
        }
        k += 1;
        m &= m - 1;
    }
    out
}

/// Coordinates (0-based) present in `mask`, ascending.
pub fn coords_of(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize)
        .filter(|&i| mask & (1 << i) != 0)
        .collect()
}

pub fn mask_of(coords: &[usize]) -> usize {
    coords.iter().fold(0, |m, &i| m | (1 << i))
}

/// `+1` if bit `i` of `x` is set, `-1` otherwise.
#[inline]
pub fn sign_at(x: usize, i: usize) -> f64 {
    if x & (1 << i) != 0 {
        1.0
    } else {
        -1.0
    }
}

/// Binomial coefficient, saturating at `u64::MAX`.
pub fn binomial(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// A 2×2 matrix acting on one coordinate of a tensor-product table.
///
/// Row index is the output bit, column index the input bit, so a pair
/// `(v0, v1)` becomes `(m[0][0]·v0 + m[0][1]·v1, m[1][0]·v0 + m[1][1]·v1)`.
pub type Kernel = [[f64; 2]; 2];

/// Applies `kernels[i]` along coordinate `i` of `values` in place.
///
/// This is the k·2^k butterfly behind the biased Fourier transform, the
/// conditional-mean tables and the (δ,ε) placement search.
pub fn tensor_apply(values: &mut [f64], kernels: &[Kernel]) {
    debug_assert_eq!(values.len(), 1 << kernels.len());
    for (i, m) in kernels.iter().enumerate() {
        let half = 1 << i;
        for block in values.chunks_exact_mut(half << 1) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (v0, v1) = (*a, *b);
                *a = m[0][0] * v0 + m[0][1] * v1;
                *b = m[1][0] * v0 + m[1][1] * v1;
            }
        }
    }
}

/// Contracts coordinate after coordinate with the row vectors `weights[i]`,
/// returning the scalar `Σ_x values[x] ∏_i weights[i][x_i]`.
pub fn tensor_contract(values: &[f64], weights: &[[f64; 2]]) -> f64 {
    debug_assert_eq!(values.len(), 1 << weights.len());
    let mut buf = values.to_vec();
    let mut len = buf.len();
    for w in weights.iter().rev() {
        len >>= 1;
        for j in 0..len {
            buf[j] = w[0] * buf[j] + w[1] * buf[j + len];
        }
    }
    buf[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compress_expand_roundtrip() {
        let mask = 0b1011_0100;
        for y in 0..16 {
            assert_eq!(compress(expand(y, mask), mask), y);
        }
        assert_eq!(compress(0b1111_1111, mask), 0b1111);
        assert_eq!(compress(0b0000_0100, mask), 0b0001);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(0, 0), 1);
    }

    #[test]
    fn contract_matches_naive_sum() {
        let values: Vec<f64> = (0..8).map(|x| x as f64 * 0.5 - 1.0).collect();
        let w = [[0.2, 0.8], [0.7, 0.3], [0.5, 0.5]];
        let naive: f64 = (0..8)
            .map(|x| values[x] * (0..3).map(|i| w[i][(x >> i) & 1]).product::<f64>())
            .sum();
        assert!((tensor_contract(&values, &w) - naive).abs() < 1e-15);
    }

    #[test]
    fn tensor_apply_identity_and_swap() {
        let mut v = vec![1.0, 2.0, 3.0, 4.0];
        tensor_apply(&mut v, &[[[1.0, 0.0], [0.0, 1.0]]; 2]);
        assert_eq!(v, vec![1.0, 2.0, 3.0, 4.0]);
        // swapping the two halves of coordinate 1 exchanges x and x ^ 2
        tensor_apply(&mut v, &[[[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]]]);
        assert_eq!(v, vec![3.0, 4.0, 1.0, 2.0]);
    }
}
