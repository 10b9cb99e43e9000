#include "panogs/codecs.hpp"
#include "panogs/errors.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace panogs;

TEST(Codecs, Sha256KnownVectors)
{
    const std::string abc = "abc";
    EXPECT_EQ(sha256_hex(Bytes(abc.begin(), abc.end())),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex({}), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Codecs, Base64KnownVectors)
{
    const std::pair<const char*, const char*> cases[] = {
        {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foobar", "Zm9vYmFy"}};
    for (const auto& [plain, enc] : cases) {
        const Bytes raw(plain, plain + std::strlen(plain));
        EXPECT_EQ(base64_encode(raw), enc);
        EXPECT_EQ(base64_decode(enc), raw);
    }
    EXPECT_THROW(base64_decode("abc"), IoError);
}

TEST(Codecs, PngRoundTripIsExactOnQuantizedValues)
{
    Image rgb(7, 5, 3);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 7; ++x) {
            for (int c = 0; c < 3; ++c) {
                rgb.at(x, y, c) = ((x * 37 + y * 11 + c * 71) % 256) / 255.0;
            }
        }
    }
    EXPECT_EQ(decode_png(encode_png(rgb)), rgb);
    const Image gray(3, 4, 1, 128 / 255.0);
    const auto back = decode_png(encode_png(gray));
    EXPECT_EQ(back.channels(), 1);
    EXPECT_EQ(back, gray);
}

TEST(Codecs, MaskPngUses255ForSet)
{
    Mask m(6, 3);
    m.set(1, 2, true);
    m.set(5, 0, true);
    const auto png = encode_mask_png(m);
    EXPECT_EQ(decode_mask_png(png), m);
    const auto gray = decode_png(png);
    EXPECT_EQ(gray.at(1, 2), 1.0);
    EXPECT_EQ(gray.at(0, 0), 0.0);
}

TEST(Codecs, PfmLayoutIsBottomUpLittleEndian)
{
    Image map(2, 2, 1);
    map.at(0, 0) = 1.0;
    map.at(1, 0) = 2.0;
    map.at(0, 1) = 3.0;
    map.at(1, 1) = 4.0;
    const auto bytes = encode_pfm(map);
    const std::string header = "Pf\n2 2\n-1.0\n";
    ASSERT_EQ(bytes.size(), header.size() + 16);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + static_cast<long>(header.size())), header);
    float first = 0.0F;
    std::memcpy(&first, bytes.data() + header.size(), 4);
    EXPECT_EQ(first, 3.0F);
    EXPECT_EQ(decode_pfm(bytes), map);
}

TEST(Codecs, PfmRejectsColorAndTruncation)
{
    const std::string color = "PF\n1 1\n-1.0\n";
    EXPECT_THROW(decode_pfm(Bytes(color.begin(), color.end())), IoError);
    auto bytes = encode_pfm(Image(3, 3, 1, 0.5));
    bytes.pop_back();
    EXPECT_THROW(decode_pfm(bytes), IoError);
    EXPECT_THROW(encode_pfm(Image(2, 2, 3)), ContractError);
}
