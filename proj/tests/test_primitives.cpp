// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/keccak.hpp>
#include <dmpt/nibbles.hpp>
#include <dmpt/rlp.hpp>

#include <gtest/gtest.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <fstream>
#include <random>

using namespace dmpt;

namespace
{
nlohmann::json load_vectors()
{
    std::ifstream f{DMPT_VECTORS "/trie_vectors.json"};
    return nlohmann::json::parse(f);
}

Digest openssl_sha3_256(BytesView data)
{
    Digest d;
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), d.bytes.data(), &len, EVP_sha3_256(), nullptr);
    return d;
}
}  // namespace

TEST(keccak, empty_input)
{
    EXPECT_EQ(keccak256(BytesView{}).hex(),
        "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470");
}

TEST(keccak, empty_trie_digest_golden)
{
    // keccak256(0x80), produced by pycryptodome's Keccak.
    EXPECT_EQ(empty_trie_digest().hex(),
        "56e81f171bcc55a6ff8345e692c0f86e5b48e01b996cadc001622fb5e363b421");
}

TEST(keccak, third_party_vectors)
{
    const auto v = load_vectors();
    ASSERT_FALSE(v["keccak"].empty());
    for (const auto& t : v["keccak"])
    {
        const auto in = from_hex(t["in"].get<std::string>());
        EXPECT_EQ(keccak256(in).hex(), t["out"].get<std::string>()) << "len " << in.size();
    }
}

TEST(keccak, permutation_matches_openssl_sha3)
{
    // Same sponge with the FIPS-202 domain byte must agree with OpenSSL.
    std::mt19937_64 rng{7};
    for (size_t len = 0; len < 600; len += 1 + len / 8)
    {
        Bytes data(len);
        for (auto& b : data)
            b = static_cast<uint8_t>(rng());
        EXPECT_EQ(keccak_sponge256(data, 0x06), openssl_sha3_256(data)) << "len " << len;
    }
}

TEST(rlp, strings_and_lists)
{
    EXPECT_EQ(hex(rlp::encode_string(as_view("dog"))), "83646f67");
    EXPECT_EQ(hex(rlp::encode_string(BytesView{})), "80");
    EXPECT_EQ(hex(rlp::encode_uint(0)), "80");
    EXPECT_EQ(hex(rlp::encode_uint(15)), "0f");
    EXPECT_EQ(hex(rlp::encode_uint(1024)), "820400");
    const auto l = rlp::ListBuilder{}.string(as_view("cat")).string(as_view("dog")).finish();
    EXPECT_EQ(hex(l), "c88363617483646f67");

    const std::string lorem = "Lorem ipsum dolor sit amet, consectetur adipisicing elit";
    EXPECT_EQ(hex(rlp::encode_string(as_view(lorem))).substr(0, 4), "b838");
}

TEST(rlp, decoder_rejects_non_canonical)
{
    EXPECT_THROW(rlp::decode(from_hex("8105")), rlp::DecodeError);      // single byte wrapped
    EXPECT_THROW(rlp::decode(from_hex("b80100")), rlp::DecodeError);    // long form for short
    EXPECT_THROW(rlp::decode(from_hex("b90000")), rlp::DecodeError);    // leading zero length
    EXPECT_THROW(rlp::decode(from_hex("83646f")), rlp::DecodeError);    // truncated
    EXPECT_THROW(rlp::decode(from_hex("83646f6700")), rlp::DecodeError);  // trailing
    EXPECT_THROW(rlp::to_uint(rlp::decode(from_hex("820001"))), rlp::DecodeError);
    EXPECT_EQ(rlp::to_uint(rlp::decode(from_hex("820400"))), 1024u);
}

TEST(rlp, roundtrip_property)
{
    std::mt19937_64 rng{11};
    for (int trial = 0; trial < 500; ++trial)
    {
        rlp::ListBuilder lb;
        std::vector<Bytes> strings;
        const auto n = rng() % 6;
        for (size_t i = 0; i < n; ++i)
        {
            Bytes s(rng() % 80);
            for (auto& b : s)
                b = static_cast<uint8_t>(rng());
            lb.string(s);
            strings.push_back(s);
        }
        const auto enc = lb.finish();
        const auto items = rlp::members(rlp::decode(enc));
        ASSERT_EQ(items.size(), strings.size());
        for (size_t i = 0; i < n; ++i)
            EXPECT_TRUE(equal(rlp::to_string(items[i]), strings[i]));
    }
}

TEST(nibbles, hex_prefix_examples)
{
    EXPECT_EQ(hex(hex_prefix_encode(Nibbles{1, 2, 3, 4, 5}, false)), "112345");
    EXPECT_EQ(hex(hex_prefix_encode(Nibbles{0, 1, 2, 3, 4, 5}, false)), "00012345");
    EXPECT_EQ(hex(hex_prefix_encode(Nibbles{0, 15, 1, 12, 11, 8}, true)), "200f1cb8");
    EXPECT_EQ(hex(hex_prefix_encode(Nibbles{15, 1, 12, 11, 8}, true)), "3f1cb8");
    EXPECT_EQ(hex(hex_prefix_encode(Nibbles{}, true)), "20");
}

TEST(nibbles, hex_prefix_roundtrip_property)
{
    std::mt19937 rng{3};
    for (int trial = 0; trial < 2000; ++trial)
    {
        Nibbles n(rng() % 70);
        for (auto& x : n)
            x = static_cast<uint8_t>(rng() % 16);
        const bool leaf = rng() % 2;
        const auto d = hex_prefix_decode(hex_prefix_encode(n, leaf));
        EXPECT_EQ(d.nibbles, n);
        EXPECT_EQ(d.leaf, leaf);
        for (auto x : d.nibbles)
            EXPECT_LT(x, 16);
    }
}

TEST(nibbles, hex_prefix_rejects_bad_flags)
{
    EXPECT_THROW(hex_prefix_decode(from_hex("40")), std::invalid_argument);
    EXPECT_THROW(hex_prefix_decode(from_hex("0112")), std::invalid_argument);
    EXPECT_THROW(hex_prefix_decode(BytesView{}), std::invalid_argument);
}
