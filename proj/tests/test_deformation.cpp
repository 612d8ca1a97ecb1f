// Curve tables, resampling, distances and thickness selection.

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "handkit/deformation.hpp"
#include "handkit/mesh_io.hpp"
#include "handkit/synthetic.hpp"

using namespace handkit;

namespace {

DeformationCurve curve(std::vector<CurveSample> s, std::string label = "c") { return {std::move(s), std::move(label)}; }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

std::vector<ThicknessCandidate> shipped_candidates() {
  std::vector<ThicknessCandidate> out;
  for (const auto& c : synthetic::curve_family()) {
    if (auto s = sigma_from_label(c.label)) out.push_back({*s, c});
  }
  return out;
}

}  // namespace

TEST(LoadCurves, ThreeLabelsTenRows) {
  std::string text = "label,strain,force\n";
  for (const char* label : {"human", "sigma=0.4", "sigma=0.5"}) {
    for (int k = 0; k < 10; ++k) text += std::string(label) + "," + std::to_string(0.1 * k) + "," + std::to_string(k) + "\n";
  }
  const auto curves = load_curves(text);
  ASSERT_EQ(curves.size(), 3u);
  for (const auto& c : curves) EXPECT_EQ(c.samples.size(), 10u);
  EXPECT_EQ(curves[1].label, "sigma=0.4");
}

TEST(LoadCurves, Errors) {
  EXPECT_EQ(kind_of([] { load_curves("strain,force,label\n0.1,1,a\n0.1,2,a\n"); }), ErrorKind::NonMonotoneStrain);
  EXPECT_EQ(kind_of([] { load_curves(""); }), ErrorKind::MalformedTable);
  EXPECT_EQ(kind_of([] { load_curves("strain,force\n0.1,1\n"); }), ErrorKind::MalformedTable);
  EXPECT_EQ(kind_of([] { load_curves("strain,force,label\n0.1,x,a\n0.2,1,a\n"); }), ErrorKind::MalformedTable);
}

TEST(LoadCurves, WriteRoundTrip) {
  const auto family = synthetic::curve_family();
  const auto back = load_curves(write_curves(family));
  ASSERT_EQ(back.size(), family.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].label, family[i].label);
    for (std::size_t k = 0; k < back[i].samples.size(); ++k) {
      EXPECT_EQ(back[i].samples[k].force, family[i].samples[k].force);
    }
  }
}

TEST(Resample, Midpoint) {
  const auto r = resample_curve(curve({{0, 0}, {1, 10}}), {0.5});
  EXPECT_DOUBLE_EQ(r.samples[0].force, 5.0);
}

TEST(Resample, SampleStrainsAreExact) {
  const auto c = synthetic::human_curve();
  std::vector<double> grid;
  for (const auto& s : c.samples) grid.push_back(s.strain);
  const auto r = resample_curve(c, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_EQ(r.samples[k].force, c.samples[k].force);
}

TEST(Resample, OutOfRange) {
  EXPECT_EQ(kind_of([] { resample_curve(curve({{0, 0}, {1, 10}}), {1.5}); }), ErrorKind::GridOutOfRange);
}

TEST(CurveDistance, Examples) {
  const auto a = synthetic::human_curve();
  EXPECT_EQ(curve_distance(a, a), 0.0);
  auto b = a;
  for (auto& s : b.samples) s.force += 1.0;
  EXPECT_NEAR(curve_distance(a, b), 1.0, 1e-12);
  EXPECT_NEAR(curve_distance(a, b, 100, CurveMetric::max_abs), 1.0, 1e-12);
  EXPECT_EQ(kind_of([] { curve_distance(curve({{0, 0}, {1, 1}}), curve({{2, 0}, {3, 1}})); }), ErrorKind::EmptyOverlap);
}

TEST(CurveDistance, Symmetric) {
  const auto fam = synthetic::curve_family();
  EXPECT_DOUBLE_EQ(curve_distance(fam[1], fam[4]), curve_distance(fam[4], fam[1]));
}

TEST(SelectThickness, ShippedFamilyPicksPointFour) {
  const auto human = synthetic::human_curve();
  const auto r = select_thickness(shipped_candidates(), human);
  EXPECT_EQ(r.sigma_star, 0.4);
  ASSERT_EQ(r.distances.size(), 5u);
  EXPECT_EQ(r.distances[1].first, 0.4);
  EXPECT_EQ(r.distances[1].second, 0.0);
}

TEST(SelectThickness, OrderDoesNotMatter) {
  const auto human = synthetic::human_curve();
  auto candidates = shipped_candidates();
  const auto reference = select_thickness(candidates, human);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(candidates.begin(), candidates.end(), rng);
    const auto r = select_thickness(candidates, human);
    EXPECT_EQ(r.sigma_star, reference.sigma_star);
    EXPECT_EQ(r.distances, reference.distances);
  }
}

TEST(SelectThickness, SingleCandidateAndTies) {
  auto human = synthetic::human_curve();
  for (auto& s : human.samples) s.force += 5.0;
  auto up = human, down = human;
  for (auto& s : up.samples) s.force += 2.0;
  for (auto& s : down.samples) s.force -= 2.0;
  EXPECT_EQ(select_thickness({{0.7, up}}, human).sigma_star, 0.7);
  EXPECT_EQ(select_thickness({{0.6, up}, {0.5, down}}, human).sigma_star, 0.5);
  EXPECT_EQ(select_thickness({{0.5, down}, {0.6, up}}, human).sigma_star, 0.5);
  SelectionOptions larger;
  larger.prefer_smaller_sigma = false;
  EXPECT_EQ(select_thickness({{0.5, down}, {0.6, up}}, human, larger).sigma_star, 0.6);
  EXPECT_EQ(kind_of([&] { select_thickness({{0.5, up}, {0.5, down}}, human); }), ErrorKind::InvalidArgument);
}

TEST(SelectThickness, EmptyOverlapNamesSigma) {
  const auto human = curve({{0, 0}, {0.1, 1}}, "human");
  try {
    select_thickness({{0.3, curve({{0.2, 0}, {0.3, 1}})}}, human);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyOverlap);
    EXPECT_NE(std::string(e.what()).find("0.3"), std::string::npos);
  }
}

TEST(SelectThickness, ShippedFileMatchesGenerator) {
  const auto bytes = read_file_bytes(std::string(HANDKIT_DATA_DIR) + "/demo/curves.csv");
  const auto curves = load_curves(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  EXPECT_EQ(write_curves(curves), write_curves(synthetic::curve_family()));
}
