// Copyright 2026 The lgadecode Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lga/lm.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <zlib.h>

#include "lga/error.hpp"
#include "support/oracles.hpp"
#include "support/random_lm.hpp"

namespace lga {
namespace {

const char* kFixture =
    "\\data\\\n"
    "ngram 1=2\n"
    "ngram 2=1\n"
    "\n"
    "\\1-grams:\n"
    "-0.5\ta\t-0.3\n"
    "-0.7\tb\t-0.1\n"
    "\n"
    "\\2-grams:\n"
    "-0.2\ta b\n"
    "\n"
    "\\end\\\n";

LMState context_of(const NGramLM& lm, std::initializer_list<const char*> words) {
  LMState s;
  for (const char* w : words) s.context.push_back(lm.word_id(w).value_or(kUnknownWord));
  return s;
}

TEST(ArpaParseTest, HandFixture) {
  const NGramLM lm = NGramLM::parse_arpa(kFixture);
  EXPECT_EQ(lm.order(), 2);
  EXPECT_EQ(lm.count(1), 2u);
  EXPECT_EQ(lm.count(2), 1u);
  EXPECT_EQ(lm.vocab_size(), 2u);
  const WordId ab[] = {*lm.word_id("a"), *lm.word_id("b")};
  const NGramEntry* e = lm.find(ab);
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->log10_prob, -0.2);
  EXPECT_EQ(e->backoff, 0.0);  // missing backoff reads as zero
  EXPECT_EQ(lm.find(std::span(ab, 1))->backoff, -0.3);
}

TEST(ArpaParseTest, ReserializationIsStable) {
  const NGramLM lm = NGramLM::parse_arpa(kFixture);
  std::ostringstream out;
  lm.write_arpa(out);
  const NGramLM again = NGramLM::parse_arpa(out.str());
  EXPECT_EQ(again, lm);
  std::ostringstream twice;
  again.write_arpa(twice);
  EXPECT_EQ(twice.str(), out.str());
}

TEST(ArpaParseTest, CountMismatch) {
  const std::string text =
      "\\data\\\nngram 1=2\n\n\\1-grams:\n-1\ta\n-1\tb\n-1\tc\n\n\\end\\\n";
  EXPECT_THROW(NGramLM::parse_arpa(text), FormatError);
}

TEST(ArpaParseTest, MissingSections) {
  EXPECT_THROW(NGramLM::parse_arpa(""), FormatError);
  EXPECT_THROW(NGramLM::parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\n-1\ta\n"), FormatError);
  EXPECT_THROW(NGramLM::parse_arpa("\\1-grams:\n-1\ta\n\\end\\\n"), FormatError);
}

TEST(ArpaParseTest, MalformedLines) {
  auto with_unigram = [](const std::string& line) {
    return "\\data\\\nngram 1=1\n\n\\1-grams:\n" + line + "\n\n\\end\\\n";
  };
  EXPECT_NO_THROW(NGramLM::parse_arpa(with_unigram("-1\ta\t-0.5")));
  EXPECT_THROW(NGramLM::parse_arpa(with_unigram("abc\ta")), FormatError);
  EXPECT_THROW(NGramLM::parse_arpa(with_unigram("-1\ta\t-0.5\textra")), FormatError);
  EXPECT_THROW(NGramLM::parse_arpa(with_unigram("-1")), FormatError);
  EXPECT_THROW(NGramLM::parse_arpa(with_unigram("0.5\ta")), FormatError);
  EXPECT_THROW(NGramLM::parse_arpa("\\data\\\nngram 2=1\n\n\\end\\\n"), FormatError);
  // Bigram whose history is not a unigram.
  EXPECT_THROW(NGramLM::parse_arpa("\\data\\\nngram 1=1\nngram 2=1\n\n\\1-grams:\n-1\ta\n\n\\2-grams:\n"
                                   "-1\tz a\n\n\\end\\\n"),
               FormatError);
}

TEST(ArpaParseTest, PreambleAndCrlfTolerated) {
  const std::string text = "some header\r\n\\data\\\r\nngram 1=1\r\n\r\n\\1-grams:\r\n-1.5 a\r\n\r\n\\end\\\r\n";
  const NGramLM lm = NGramLM::parse_arpa(text);
  EXPECT_EQ(lm.score_word({}, "a").log10_prob, -1.5);
}

TEST(ArpaLoadTest, PlainAndGzipFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "lga_lm_test";
  std::filesystem::create_directories(dir);
  const auto plain = dir / "lm.arpa";
  std::ofstream(plain) << kFixture;
  const auto gz = dir / "lm.arpa.gz";
  gzFile f = gzopen(gz.string().c_str(), "wb");
  gzputs(f, kFixture);
  gzclose(f);
  EXPECT_EQ(NGramLM::load(plain), NGramLM::parse_arpa(kFixture));
  EXPECT_EQ(NGramLM::load(gz), NGramLM::parse_arpa(kFixture));
  EXPECT_THROW(NGramLM::load(dir / "missing.arpa"), IoError);
  std::filesystem::remove_all(dir);
}

TEST(ScoreWordTest, DirectHitAndBackoff) {
  const NGramLM lm = NGramLM::parse_arpa(kFixture);
  EXPECT_EQ(lm.score_word(context_of(lm, {"a"}), "b").log10_prob, -0.2);
  EXPECT_EQ(lm.score_word(context_of(lm, {"b"}), "a").log10_prob, -0.1 + -0.5);
}

TEST(ScoreWordTest, OovPenaltyWithoutUnk) {
  const NGramLM lm = NGramLM::parse_arpa(kFixture);
  EXPECT_EQ(lm.score_word(context_of(lm, {"a"}), "zzz").log10_prob, -10.0);
  const NGramLM custom = NGramLM::parse_arpa(kFixture, -4.0);
  EXPECT_EQ(custom.score_word({}, "zzz").log10_prob, -4.0);
}

TEST(ScoreWordTest, UnkEntryUsedWhenPresent) {
  const NGramLM lm = NGramLM::parse_arpa(
      "\\data\\\nngram 1=2\n\n\\1-grams:\n-0.5\ta\t-0.25\n-3\t<unk>\n\n\\end\\\n");
  ASSERT_TRUE(lm.unk_id().has_value());
  EXPECT_EQ(lm.score_word(context_of(lm, {"a"}), "q").log10_prob, -3.0);
}

TEST(ScoreWordTest, MatchCaseExactly) {
  const NGramLM lm = NGramLM::parse_arpa(kFixture);
  EXPECT_EQ(lm.score_word({}, "A").log10_prob, -10.0);
}

TEST(ScoreWordTest, StateKeepsLastOrderMinusOneWords) {
  const NGramLM lm = NGramLM::parse_arpa(kFixture);
  const auto scored = lm.score_word(context_of(lm, {"b", "a"}), "b");
  EXPECT_EQ(scored.next.context, context_of(lm, {"b"}).context);
}

TEST(ScoreSequenceTest, Examples) {
  const NGramLM lm = NGramLM::parse_arpa(kFixture);
  EXPECT_EQ(lm.score_sequence(std::vector<std::string>{}), 0.0);
  EXPECT_EQ(lm.score_sequence(std::vector<std::string>{"a"}), -0.5);
  EXPECT_EQ(lm.score_sequence(std::vector<std::string>{"a", "b"}), -0.5 + -0.2);
}

TEST(ScoreSequenceTest, StartsFromSentenceBegin) {
  const NGramLM lm = NGramLM::parse_arpa(
      "\\data\\\nngram 1=2\nngram 2=1\n\n\\1-grams:\n-99\t<s>\t-0.4\n-0.6\ta\n\n\\2-grams:\n-0.1\t<s> a\n\n\\end\\\n");
  EXPECT_EQ(lm.begin_state().context.size(), 1u);
  EXPECT_EQ(lm.score_sequence(std::vector<std::string>{"a"}), -0.1);
  EXPECT_EQ(lm.score_sequence(std::vector<std::string>{"a", "a"}), -0.1 + -0.6);
}

TEST(LmPropertyTest, BackoffMatchesLongestSuffixOracle) {
  std::mt19937 rng(2024);
  int cases = 0;
  for (int model = 0; model < 5; ++model) {
    const oracle::RandomModel m = oracle::random_model(rng);
    const NGramLM lm = NGramLM::parse_arpa(m.text);
    std::uniform_int_distribution<std::size_t> pick(0, m.words.size() - 1), len(0, 4);
    for (int i = 0; i < 200; ++i, ++cases) {
      std::vector<std::string> ctx(len(rng));
      for (auto& w : ctx) w = m.words[pick(rng)];
      const std::string w = m.words[pick(rng)];
      LMState state;
      for (const auto& c : ctx) state.context.push_back(*lm.word_id(c));
      const double got = lm.score_word(state, w).log10_prob;
      EXPECT_EQ(got, oracle::backoff_score(m.table, 3, ctx, w));
      // Truncating the context to order-1 words changes nothing.
      LMState tail;
      const std::size_t keep = std::min<std::size_t>(2, state.context.size());
      tail.context.assign(state.context.end() - static_cast<std::ptrdiff_t>(keep), state.context.end());
      EXPECT_EQ(lm.score_word(tail, w).log10_prob, got);
    }
  }
  EXPECT_EQ(cases, 1000);
}

TEST(LmPropertyTest, RoundTripAndIncrementalScoring) {
  std::mt19937 rng(77);
  for (int model = 0; model < 5; ++model) {
    const oracle::RandomModel m = oracle::random_model(rng);
    const NGramLM lm = NGramLM::parse_arpa(m.text);
    std::ostringstream out;
    lm.write_arpa(out);
    EXPECT_EQ(NGramLM::parse_arpa(out.str()), lm);

    std::uniform_int_distribution<std::size_t> pick(1, m.words.size() - 1);
    std::vector<std::string> a(3), b(4);
    for (auto& w : a) w = m.words[pick(rng)];
    for (auto& w : b) w = m.words[pick(rng)];
    std::vector<std::string> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    LMState state = lm.begin_state();
    double threaded = 0.0;
    for (const auto& w : ab) {
      auto s = lm.score_word(state, w);
      threaded += s.log10_prob;
      state = s.next;
    }
    EXPECT_EQ(lm.score_sequence(ab), threaded);
  }
}

}  // namespace
}  // namespace lga
