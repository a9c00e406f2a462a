//! AVX-512 pair sweep for the exponents used in practice.

use std::arch::x86_64::*;

use super::forces::Soa;

/// Same sums as the portable sweep, eight pairs at a time, with `1/r` from
/// `rsqrt14` refined by two Newton steps (within a few ulp of the exact
/// value). `FIFTH` selects exponent 5, otherwise exponent 2.
///
/// # Safety
/// The CPU must support AVX-512F.
#[target_feature(enable = "avx512f")]
pub(crate) unsafe fn sweep<const FIFTH: bool, const FORCES: bool>(
    p: &Soa,
    strength: f64,
    f: &mut Soa,
) -> (f64, f64, f64) {
    let n = p.x.len();
    let mut s = _mm512_setzero_pd();
    let mut u = _mm512_setzero_pd();
    let mut m = _mm512_set1_pd(f64::INFINITY);
    let half = _mm512_set1_pd(0.5);
    let three_halves = _mm512_set1_pd(1.5);
    for i in 0..n {
        let start = i + 2;
        let end = if i == 0 { n - 1 } else { n };
        if start >= end {
            continue;
        }
        let (xi, yi, zi) = (_mm512_set1_pd(p.x[i]), _mm512_set1_pd(p.y[i]), _mm512_set1_pd(p.z[i]));
        // lanes past the end see a bead at unit distance and are masked out
        let far = _mm512_set1_pd(p.x[i] + 1.0);
        let (mut gx, mut gy, mut gz) = (_mm512_setzero_pd(), _mm512_setzero_pd(), _mm512_setzero_pd());
        let mut j = start;
        while j < end {
            let mask: __mmask8 = if end - j >= 8 { 0xff } else { (1u8 << (end - j)) - 1 };
            let cx = _mm512_mask_loadu_pd(far, mask, p.x.as_ptr().add(j));
            let cy = _mm512_mask_loadu_pd(yi, mask, p.y.as_ptr().add(j));
            let cz = _mm512_mask_loadu_pd(zi, mask, p.z.as_ptr().add(j));
            let dx = _mm512_sub_pd(xi, cx);
            let dy = _mm512_sub_pd(yi, cy);
            let dz = _mm512_sub_pd(zi, cz);
            let r2 = _mm512_fmadd_pd(dz, dz, _mm512_fmadd_pd(dy, dy, _mm512_mul_pd(dx, dx)));
            let h = _mm512_mul_pd(half, r2);
            let mut y = _mm512_rsqrt14_pd(r2);
            for _ in 0..2 {
                y = _mm512_mul_pd(y, _mm512_fnmadd_pd(_mm512_mul_pd(h, y), y, three_halves));
            }
            let inv2 = _mm512_mul_pd(y, y);
            s = _mm512_mask_add_pd(s, mask, s, y);
            m = _mm512_mask_min_pd(m, mask, m, r2);
            let (e, c) = if FIFTH {
                let q = _mm512_mul_pd(inv2, inv2);
                (q, _mm512_mul_pd(q, inv2))
            } else {
                (y, _mm512_mul_pd(inv2, y))
            };
            u = _mm512_mask_add_pd(u, mask, u, e);
            if FORCES {
                // unit strength here; the caller scales
                for (dst, d, g) in [(f.x.as_mut_ptr(), dx, &mut gx), (f.y.as_mut_ptr(), dy, &mut gy), (f.z.as_mut_ptr(), dz, &mut gz)] {
                    *g = _mm512_mask3_fmadd_pd(d, c, *g, mask);
                    let old = _mm512_maskz_loadu_pd(mask, dst.add(j));
                    _mm512_mask_storeu_pd(dst.add(j), mask, _mm512_fnmadd_pd(d, c, old));
                }
            }
            j += 8;
        }
        if FORCES {
            f.x[i] += _mm512_reduce_add_pd(gx);
            f.y[i] += _mm512_reduce_add_pd(gy);
            f.z[i] += _mm512_reduce_add_pd(gz);
        }
    }
    let (simon, pot, min_r2) = (_mm512_reduce_add_pd(s), _mm512_reduce_add_pd(u), _mm512_reduce_min_pd(m));
    if FORCES {
        for v in f.x.iter_mut().chain(f.y.iter_mut()).chain(f.z.iter_mut()) {
            *v *= strength;
        }
    }
    (simon, pot, min_r2)
}
