#include "sensor_kernels.hpp"

#include <immintrin.h>

namespace qis::sensor::detail {

bool cpu_supports_avx2() { return __builtin_cpu_supports("avx2") != 0; }

namespace {

// 32x32 -> 64 bit products of all 8 lanes against a broadcast constant,
// returned as separate low/high 32-bit halves.
inline void mul_hilo(__m256i x, __m256i m, __m256i& lo, __m256i& hi) {
    const __m256i pe = _mm256_mul_epu32(x, m);                        // lanes 0,2,4,6
    const __m256i po = _mm256_mul_epu32(_mm256_srli_epi64(x, 32), m); // lanes 1,3,5,7
    lo = _mm256_blend_epi32(pe, _mm256_slli_epi64(po, 32), 0b10101010);
    hi = _mm256_blend_epi32(_mm256_srli_epi64(pe, 32), po, 0b10101010);
}

// Eight Philox4x32 blocks in SoA layout: cN holds word N of every block.
struct Philox8 {
    __m256i c0, c1, c2, c3;
};

inline Philox8 philox8(Philox8 ctr, rng::Philox4x32::Key key) {
    __m256i k0 = _mm256_set1_epi32(static_cast<int>(key[0]));
    __m256i k1 = _mm256_set1_epi32(static_cast<int>(key[1]));
    const __m256i m0 = _mm256_set1_epi32(static_cast<int>(rng::Philox4x32::kMul0));
    const __m256i m1 = _mm256_set1_epi32(static_cast<int>(rng::Philox4x32::kMul1));
    const __m256i w0 = _mm256_set1_epi32(static_cast<int>(rng::Philox4x32::kWeyl0));
    const __m256i w1 = _mm256_set1_epi32(static_cast<int>(rng::Philox4x32::kWeyl1));
    for (int round = 0; round < 10; ++round) {
        __m256i lo0, hi0, lo1, hi1;
        mul_hilo(ctr.c0, m0, lo0, hi0);
        mul_hilo(ctr.c2, m1, lo1, hi1);
        const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(hi1, ctr.c1), k0);
        const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(hi0, ctr.c3), k1);
        ctr.c0 = n0;
        ctr.c1 = lo1;
        ctr.c2 = n2;
        ctr.c3 = lo0;
        k0 = _mm256_add_epi32(k0, w0);
        k1 = _mm256_add_epi32(k1, w1);
    }
    return ctr;
}

// Exact u64 -> double for values below 2^52 via the exponent-bias trick,
// matching the scalar conversion bit for bit.
inline __m256d u52_to_double(__m256i v52) {
    const __m256i bias = _mm256_set1_epi64x(0x4330000000000000LL); // 2^52
    const __m256d biased = _mm256_castsi256_pd(_mm256_or_si256(v52, bias));
    return _mm256_sub_pd(biased, _mm256_set1_pd(0x1p52));
}

inline std::uint64_t hsum_epi64(__m256i v) {
    const __m128i lo = _mm256_castsi256_si128(v);
    const __m128i hi = _mm256_extracti128_si256(v, 1);
    const __m128i s = _mm_add_epi64(lo, hi);
    return static_cast<std::uint64_t>(_mm_extract_epi64(s, 0)) +
           static_cast<std::uint64_t>(_mm_extract_epi64(s, 1));
}

} // namespace

void capture_row_avx2(const CaptureJob& job) {
    double cdf[kMaxCdfLen];
    const __m256i lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d scale = _mm256_set1_pd(0x1p-52);

    for (int x = 0; x < job.width; ++x) {
        const double theta = job.theta[x];
        if (theta == 0.0) {
            job.sums[x] = 0;
            continue;
        }
        const std::uint32_t pixel = job.pixel_base + static_cast<std::uint32_t>(x);
        std::uint64_t acc = 0;

        if (theta >= kInversionCutoff) {
            for (std::uint32_t jot = 0; jot < job.jots; ++jot) {
                for (std::uint32_t frame = 0; frame < job.frames; ++frame) {
                    acc += draw_clipped_ptrd(theta, job.capacity, pixel, frame, jot, job.key);
                }
            }
            job.sums[x] = acc;
            continue;
        }

        const int len = build_inversion_cdf(theta, job.capacity, cdf);
        const __m256i pixel_v = _mm256_set1_epi32(static_cast<int>(pixel));

        for (std::uint32_t jot = 0; jot < job.jots; ++jot) {
            const __m256i jot_v = _mm256_set1_epi32(static_cast<int>(jot));
            std::uint32_t frame = 0;
            for (; frame + 8 <= job.frames; frame += 8) {
                Philox8 ctr;
                ctr.c0 = pixel_v;
                ctr.c1 = _mm256_add_epi32(_mm256_set1_epi32(static_cast<int>(frame)), lane);
                ctr.c2 = jot_v;
                ctr.c3 = _mm256_setzero_si256();
                const Philox8 out = philox8(ctr, job.key);

                // bits = (word0 << 32) | word1 per block; block order within
                // the vectors is shuffled by the unpack but the row sum does
                // not depend on it.
                const __m256i bits_a = _mm256_unpacklo_epi32(out.c1, out.c0);
                const __m256i bits_b = _mm256_unpackhi_epi32(out.c1, out.c0);
                const __m256d u_a =
                    _mm256_mul_pd(_mm256_add_pd(u52_to_double(_mm256_srli_epi64(bits_a, 12)), half), scale);
                const __m256d u_b =
                    _mm256_mul_pd(_mm256_add_pd(u52_to_double(_mm256_srli_epi64(bits_b, 12)), half), scale);

                __m256i cnt_a = _mm256_setzero_si256();
                __m256i cnt_b = _mm256_setzero_si256();
                for (int k = 0; k < len; ++k) {
                    const __m256d c = _mm256_set1_pd(cdf[k]);
                    const __m256d gt_a = _mm256_cmp_pd(u_a, c, _CMP_GT_OQ);
                    const __m256d gt_b = _mm256_cmp_pd(u_b, c, _CMP_GT_OQ);
                    if ((_mm256_movemask_pd(gt_a) | _mm256_movemask_pd(gt_b)) == 0) break;
                    cnt_a = _mm256_sub_epi64(cnt_a, _mm256_castpd_si256(gt_a));
                    cnt_b = _mm256_sub_epi64(cnt_b, _mm256_castpd_si256(gt_b));
                }
                acc += hsum_epi64(cnt_a) + hsum_epi64(cnt_b);
            }
            for (; frame < job.frames; ++frame) {
                acc += draw_from_cdf(cdf, len, pixel, frame, jot, job.key);
            }
        }
        job.sums[x] = acc;
    }
}

} // namespace qis::sensor::detail
