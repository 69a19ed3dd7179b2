#include <gtest/gtest.h>

#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/kv_config.hpp"

namespace sgrpo {
namespace {

TEST(KvConfig, ParsesCommentsAndOverrides) {
  auto cfg = KvConfig::parse("# comment\nlr = 1e-3\n\nsteps=10\nlr = 2e-3\nflag = yes\n");
  EXPECT_DOUBLE_EQ(cfg.get_double("lr", 0), 2e-3);
  EXPECT_EQ(cfg.get_int("steps", 0), 10);
  EXPECT_TRUE(cfg.get_bool("flag", false));
  EXPECT_EQ(cfg.get_int("missing", 7), 7);
}

TEST(KvConfig, ErrorsNameTheProblem) {
  EXPECT_THROW(KvConfig::parse("no equals sign"), Error);
  auto cfg = KvConfig::parse("steps = ten");
  EXPECT_THROW(cfg.get_int("steps", 0), Error);
  EXPECT_THROW(cfg.get_double("steps", 0), Error);
}

}  // namespace
}  // namespace sgrpo
