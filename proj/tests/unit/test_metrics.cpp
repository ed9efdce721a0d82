#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "hsclean/errors.hpp"
#include "hsclean/metrics.hpp"

using namespace hsclean;

namespace {

ConfusionMatrix from_counts(const std::vector<std::vector<std::size_t>>& counts) {
  ConfusionMatrix m(static_cast<int>(counts.size()));
  for (std::size_t r = 0; r < counts.size(); ++r)
    for (std::size_t c = 0; c < counts.size(); ++c)
      if (counts[r][c]) m.add(static_cast<int>(r + 1), static_cast<int>(c + 1), counts[r][c]);
  return m;
}

}  // namespace

TEST_CASE("confusion accumulation") {
  const std::vector<int> t{1, 2, 3, 3}, p{1, 2, 3, 3};
  const auto m = confusion(t, p, 3);
  CHECK(m.trace() == 4);
  CHECK(m(3, 3) == 2);

  const auto single = confusion(std::vector<int>{1}, std::vector<int>{2}, 2);
  CHECK(single(1, 2) == 1);
  CHECK(single.trace() == 0);

  const std::vector<int> a_t{1, 2, 2}, a_p{2, 2, 1}, b_t{1, 1}, b_p{1, 2};
  auto sum = confusion(a_t, a_p, 2);
  sum += confusion(b_t, b_p, 2);
  CHECK(sum == confusion(std::vector<int>{1, 2, 2, 1, 1}, std::vector<int>{2, 2, 1, 1, 2}, 2));

  CHECK_THROWS_AS(confusion(std::vector<int>{0}, std::vector<int>{1}, 2), DataError);
  CHECK_THROWS_AS(confusion(std::vector<int>{1}, std::vector<int>{3}, 2), DataError);
  CHECK_THROWS_AS(confusion(std::vector<int>{1}, std::vector<int>{1, 1}, 2), DataError);
}

TEST_CASE("hand-computed kappa example") {
  const auto m = from_counts({{35, 5}, {10, 50}});
  CHECK(std::abs(overall_accuracy(m) - 0.85) <= 1e-10);
  CHECK(std::abs(kappa(m) - 0.34 / 0.49) <= 1e-10);
  CHECK(kappa(m) == doctest::Approx(0.69388).epsilon(1e-5));
  CHECK(std::abs(average_accuracy(m).value - (35.0 / 40 + 50.0 / 60) / 2) <= 1e-12);
}

TEST_CASE("perfect and chance-level matrices") {
  const auto diag = from_counts({{4, 0, 0}, {0, 7, 0}, {0, 0, 1}});
  CHECK(overall_accuracy(diag) == 1.0);
  CHECK(average_accuracy(diag).value == 1.0);
  CHECK(kappa(diag) == 1.0);

  const auto chance = from_counts({{25, 25}, {25, 25}});
  CHECK(overall_accuracy(chance) == 0.5);
  CHECK(kappa(chance) == 0.0);

  // Rank-1 joint distribution: agreement equals chance.
  const auto rank1 = from_counts({{2, 4}, {3, 6}});
  CHECK(std::abs(kappa(rank1)) < 1e-12);

  // Single class, all correct: p_e = 1.
  const auto one = from_counts({{9}});
  CHECK(kappa(one) == 1.0);
}

TEST_CASE("average accuracy skips classes without test samples") {
  const auto m = from_counts({{3, 1, 0}, {0, 0, 0}, {0, 1, 1}});
  const auto aa = average_accuracy(m);
  CHECK(aa.excluded_classes == std::vector<int>{2});
  CHECK(aa.value == doctest::Approx((0.75 + 0.5) / 2));
}

TEST_CASE("empty confusion matrices are rejected") {
  const ConfusionMatrix m(3);
  CHECK_THROWS_AS(overall_accuracy(m), DataError);
  CHECK_THROWS_AS(average_accuracy(m), DataError);
  CHECK_THROWS_AS(kappa(m), DataError);
}

TEST_CASE("classification maps") {
  const LabelField one(1, 1, {1});
  const auto img = render_map(one, Palette{{1, Rgb{255, 0, 0}}});
  CHECK(img.pixels[0] == Rgb{255, 0, 0});

  const LabelField bg(1, 2, {0, 1});
  CHECK(render_map(bg, Palette{{1, Rgb{1, 2, 3}}}).pixels[0] == Rgb{0, 0, 0});
  CHECK_THROWS_AS(render_map(LabelField(1, 1, {2}), Palette{{1, Rgb{1, 2, 3}}}), DataError);

  const auto palette = default_palette(16);
  CHECK(palette.size() == 16);
  std::set<Rgb> distinct;
  for (const auto& [k, v] : palette) distinct.insert(v);
  CHECK(distinct.size() == 16);

  std::vector<int> labels(35);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 17);
  const LabelField field(5, 7, labels);
  const auto map = render_map(field, palette);
  test::TempDir dir("ppm");
  write_ppm(map, dir / "m.ppm");
  const auto back = read_ppm(dir / "m.ppm");
  CHECK(back.height == 5);
  CHECK(back.width == 7);
  CHECK(back.pixels == map.pixels);
  CHECK(std::filesystem::file_size(dir / "m.ppm") == std::string("P6\n7 5\n255\n").size() + 35 * 3);
}
