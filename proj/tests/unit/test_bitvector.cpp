#include <gtest/gtest.h>

#include <random>

#include "fmgram/bitvector.hpp"

using namespace fmgram;

namespace {

BitBuilder from_string(std::string_view bits) {
    BitBuilder b;
    for (char ch : bits) b.push_back(ch == '1');
    return b;
}

// Random bits with a given density, optionally as runs.
BitBuilder random_bits(std::mt19937_64& rng, uint64_t m, double density, bool runs) {
    BitBuilder b;
    std::bernoulli_distribution flip(density);
    std::geometric_distribution<int> run_len(0.02);
    bool cur = false;
    while (b.size() < m) {
        if (runs) {
            cur = flip(rng);
            for (int k = run_len(rng) + 1; k > 0 && b.size() < m; --k) b.push_back(cur);
        } else {
            b.push_back(flip(rng));
        }
    }
    return b;
}

class BitVectorEncodings : public ::testing::TestWithParam<BitEncoding> {};

}  // namespace

TEST_P(BitVectorEncodings, SmallFixture) {
    BitVector bv(from_string("10110"), GetParam());
    EXPECT_EQ(bv.size(), 5u);
    EXPECT_EQ(bv.rank1(0), 0u);
    EXPECT_EQ(bv.rank1(3), 2u);
    EXPECT_EQ(bv.rank1(4), 3u);
    EXPECT_EQ(bv.rank1(5), 3u);
    EXPECT_EQ(bv.rank0(5), 2u);
    EXPECT_EQ(bv.select1(1), 0u);
    EXPECT_EQ(bv.select1(3), 3u);
    EXPECT_EQ(bv.select0(1), 1u);
    EXPECT_EQ(bv.select0(2), 4u);
    EXPECT_THROW(bv.rank1(6), Error);
    EXPECT_THROW(bv.select1(4), Error);
    EXPECT_THROW(bv.select0(3), Error);
    EXPECT_THROW(bv.select1(0), Error);
}

TEST_P(BitVectorEncodings, EmptyVector) {
    BitVector bv(BitBuilder{}, GetParam());
    EXPECT_EQ(bv.size(), 0u);
    EXPECT_EQ(bv.rank1(0), 0u);
    EXPECT_THROW(bv.access(0), Error);
}

TEST_P(BitVectorEncodings, RankMatchesScanOracle) {
    std::mt19937_64 rng(7);
    struct Case {
        uint64_t m;
        double density;
        bool runs;
    };
    for (Case c : {Case{1'000'000, 0.5, false}, Case{1'000'000, 0.01, false}, Case{1'000'000, 0.995, false},
                   Case{300'000, 0.5, true}, Case{70'000, 0.0, false}, Case{70'000, 1.0, false}}) {
        BitBuilder raw = random_bits(rng, c.m, c.density, c.runs);
        BitVector bv(raw, GetParam());
        std::vector<uint64_t> prefix(c.m + 1, 0);
        for (uint64_t i = 0; i < c.m; ++i) prefix[i + 1] = prefix[i] + raw.get(i);
        ASSERT_EQ(bv.ones(), prefix[c.m]);
        std::uniform_int_distribution<uint64_t> pos(0, c.m);
        for (int q = 0; q < 100'000; ++q) {
            uint64_t i = pos(rng);
            ASSERT_EQ(bv.rank1(i), prefix[i]) << "m=" << c.m << " i=" << i;
            if (i < c.m) {
                auto [bit, r] = bv.access_rank(i);
                ASSERT_EQ(bit, raw.get(i));
                ASSERT_EQ(r, bit ? prefix[i] : i - prefix[i]);
            }
        }
    }
}

TEST_P(BitVectorEncodings, SelectRankIdentities) {
    std::mt19937_64 rng(11);
    for (double density : {0.5, 0.03, 0.97}) {
        const uint64_t m = 200'000;
        BitBuilder raw = random_bits(rng, m, density, density == 0.5);
        BitVector bv(raw, GetParam());
        uint64_t ones = bv.ones(), zeros = m - ones;
        std::uniform_int_distribution<uint64_t> pick(1, std::max<uint64_t>(1, ones));
        for (int q = 0; q < 20'000 && ones > 0; ++q) {
            uint64_t k = pick(rng);
            uint64_t p = bv.select1(k);
            ASSERT_TRUE(bv.access(p));
            ASSERT_EQ(bv.rank1(p), k - 1);
        }
        std::uniform_int_distribution<uint64_t> pick0(1, std::max<uint64_t>(1, zeros));
        for (int q = 0; q < 20'000 && zeros > 0; ++q) {
            uint64_t k = pick0(rng);
            uint64_t p = bv.select0(k);
            ASSERT_FALSE(bv.access(p));
            ASSERT_EQ(bv.rank0(p), k - 1);
        }
        // rank∘select bracket: select1(rank1(i)+1) > i >= select1(rank1(i)).
        std::uniform_int_distribution<uint64_t> pos(0, m - 1);
        for (int q = 0; q < 5'000; ++q) {
            uint64_t i = pos(rng);
            uint64_t r = bv.rank1(i);
            if (r + 1 <= ones) ASSERT_GE(bv.select1(r + 1), i);
            if (r >= 1) ASSERT_LT(bv.select1(r), i);
        }
    }
}

TEST_P(BitVectorEncodings, SerializationRoundTrip) {
    std::mt19937_64 rng(3);
    BitBuilder raw = random_bits(rng, 150'000, 0.2, true);
    BitVector bv(raw, GetParam());
    WordWriter w;
    bv.save(w);
    WordReader r(w.words());
    BitVector back = BitVector::load(r);
    EXPECT_TRUE(r.done());
    EXPECT_EQ(back.encoding(), bv.encoding());
    std::uniform_int_distribution<uint64_t> pos(0, 150'000);
    for (int q = 0; q < 10'000; ++q) {
        uint64_t i = pos(rng);
        ASSERT_EQ(back.rank1(i), bv.rank1(i));
    }
}

INSTANTIATE_TEST_SUITE_P(Encodings, BitVectorEncodings,
                         ::testing::Values(BitEncoding::Plain, BitEncoding::Rrr, BitEncoding::Auto));

TEST(PlainBits, DirectoryOverheadStaysSmall) {
    std::mt19937_64 rng(5);
    const uint64_t m = 4'000'000;
    BitBuilder raw = random_bits(rng, m, 0.5, false);
    BitVector bv(raw, BitEncoding::Plain);
    double overhead = static_cast<double>(bv.stored_bits()) / static_cast<double>(m) - 1.0;
    EXPECT_LT(overhead, 0.03);
}

TEST(RrrBits, CompressesSkewedAndRunnyBits) {
    std::mt19937_64 rng(9);
    const uint64_t m = 2'000'000;
    BitBuilder sparse = random_bits(rng, m, 1.0 / 32, false);
    BitVector a(sparse, BitEncoding::Auto);
    EXPECT_EQ(a.encoding(), BitEncoding::Rrr);
    // H(1/32) ~ 0.20 bits per bit, plus class and superblock overhead.
    EXPECT_LT(static_cast<double>(a.stored_bits()) / m, 0.30);

    BitBuilder dense = random_bits(rng, m, 0.5, false);
    BitVector b(dense, BitEncoding::Auto);
    EXPECT_EQ(b.encoding(), BitEncoding::Plain);

    // RRR at density 0.3 would save only a few percent, so Auto keeps it plain.
    BitVector c(random_bits(rng, m, 0.3, false), BitEncoding::Auto);
    EXPECT_EQ(c.encoding(), BitEncoding::Plain);
    BitVector d(random_bits(rng, m, 0.1, false), BitEncoding::Auto);
    EXPECT_EQ(d.encoding(), BitEncoding::Rrr);
}

TEST(SelectInWord, EveryBitOfAWord) {
    uint64_t w = 0xF0F0'0000'8000'0001ull;
    std::vector<unsigned> expect;
    for (unsigned i = 0; i < 64; ++i)
        if ((w >> i) & 1) expect.push_back(i);
    for (unsigned k = 0; k < expect.size(); ++k) EXPECT_EQ(select_in_word(w, k), expect[k]);
}
