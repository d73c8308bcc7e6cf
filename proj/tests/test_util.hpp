#ifndef SIMCAMP_TEST_UTIL_HPP
#define SIMCAMP_TEST_UTIL_HPP

#include <atomic>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "simcamp/common.hpp"
#include "simcamp/scenario_gen.hpp"
#include "simcamp/trace.hpp"

namespace simcamp::testing {

/// Letters a, b, c, ... as an alphabet of the given size.
inline Alphabet letters(std::size_t n = 4) {
  std::vector<std::string> t;
  for (std::size_t i = 0; i < n; ++i) t.emplace_back(1, static_cast<char>('a' + i));
  return Alphabet(t);
}

/// "aab" -> [0, 0, 1]
inline InputTrace word(std::string_view w) {
  std::vector<Symbol> s;
  for (char c : w) s.push_back(static_cast<Symbol>(c - 'a'));
  return InputTrace(s);
}

inline std::vector<InputTrace> words(std::initializer_list<std::string_view> ws) {
  std::vector<InputTrace> out;
  for (auto w : ws) out.push_back(word(w));
  return out;
}

inline std::string str(std::span<const Symbol> w) {
  std::string s;
  for (Symbol u : w) s.push_back(static_cast<char>('a' + u));
  return s;
}

/// Distinct random traces, unsorted. Horizons vary in [min_h, max_h].
inline std::vector<InputTrace> random_slice(Rng& rng, std::size_t alphabet, std::size_t min_h,
                                            std::size_t max_h, std::size_t count) {
  std::set<std::vector<Symbol>> seen;
  std::vector<InputTrace> out;
  std::size_t attempts = 0;
  while (out.size() < count && attempts++ < count * 50) {
    const std::size_t h = min_h + rng.below(max_h - min_h + 1);
    std::vector<Symbol> w(h);
    for (auto& u : w) u = static_cast<Symbol>(rng.below(alphabet));
    if (seen.insert(w).second) out.emplace_back(w);
  }
  return out;
}

/// Binary words of length h with no two consecutive 1s.
inline ConstraintSpec no_consecutive_ones(std::size_t h) {
  ConstraintSpec spec;
  spec.alphabet = Alphabet({"0", "1"});
  spec.horizon = h;
  Dfa d;
  d.num_states = 3;
  d.alphabet_size = 2;
  d.start = 0;
  d.accepting = {true, true, false};
  d.next = {0, 1, 0, 2, 2, 2};
  spec.monitors.push_back(d);
  return spec;
}

inline Dfa random_dfa(Rng& rng, std::size_t alphabet, std::size_t states) {
  Dfa d;
  d.num_states = states;
  d.alphabet_size = alphabet;
  d.start = rng.below(states);
  d.accepting.resize(states);
  for (std::size_t s = 0; s < states; ++s) d.accepting[s] = rng.below(3) != 0;
  d.next.resize(states * alphabet);
  for (auto& t : d.next) t = rng.below(states);
  return d;
}

/// All accepted words of the spec, in lexicographic order, by odometer enumeration.
inline std::vector<std::vector<Symbol>> brute_force_words(const ConstraintSpec& spec) {
  const std::size_t k = spec.alphabet.size();
  std::vector<Symbol> w(spec.horizon, 0);
  std::vector<std::vector<Symbol>> out;
  while (true) {
    if (spec.accepts(w)) out.push_back(w);
    std::size_t i = spec.horizon;
    while (i > 0 && w[i - 1] + 1u == k) w[--i] = 0;
    if (i == 0) break;
    ++w[i - 1];
  }
  return out;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("simcamp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace simcamp::testing

#endif
