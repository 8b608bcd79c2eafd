#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "gfflab/errors.hpp"
#include "gfflab/field.hpp"
#include "gfflab/snapshot.hpp"

using namespace gfflab;

namespace {

bool same_bits(const FieldSample& a, const FieldSample& b) {
  return a.spec == b.spec && a.kind == b.kind && a.seed == b.seed && a.pin.has_value() == b.pin.has_value() &&
         std::memcmp(a.values.data(), b.values.data(), sizeof(double) * a.values.size()) == 0;
}

}  // namespace

TEST(Snapshot, RoundTripIsBitIdentical) {
  const FieldSample f = sample_pinned({24, 20, 0.25, Point(-1, 3)}, Point(2, 5.5), 1.0, 77);
  const FieldSample g = decode_snapshot(encode_snapshot(f));
  EXPECT_TRUE(same_bits(f, g));
  ASSERT_TRUE(g.pin.has_value());
  EXPECT_EQ(g.pin->subtracted, f.pin->subtracted);
  EXPECT_EQ(g.pin->radius, f.pin->radius);

  const auto path = std::filesystem::temp_directory_path() / "gfflab_snapshot_test.gffm";
  const FieldSample z = sample_zero_boundary({9, 7}, 3);
  save_snapshot(z, path);
  EXPECT_TRUE(same_bits(z, load_snapshot(path)));
  std::filesystem::remove(path);
}

TEST(Snapshot, TruncationReportsByteOffset) {
  const std::string bytes = encode_snapshot(constant_field({4, 4}, 1.5));
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
    try {
      decode_snapshot(std::string_view(bytes).substr(0, cut));
      FAIL() << "accepted truncated payload of " << cut << " bytes";
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
    }
  }
}

TEST(Snapshot, RejectsBadMagicVersionAndTrailingBytes) {
  std::string bytes = encode_snapshot(constant_field({3, 3}, 0.0));
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_snapshot(bad), ParseError);
  bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(decode_snapshot(bad), ParseError);
  EXPECT_THROW(decode_snapshot(bytes + "x"), ParseError);
}

TEST(Snapshot, ChecksumIsStable) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}
