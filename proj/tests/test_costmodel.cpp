#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "tadkit/costmodel.hpp"
#include "tadkit/rng.hpp"

using namespace tadkit;

TEST_CASE("macs formulas per layer kind") {
  CHECK(layer_macs(LayerSpec::dense_of(10, 5), {10}) == 50);

  // L=104, K=5, pad 0 -> L_out=100.
  CHECK(layer_macs(LayerSpec::conv1d_of(3, 8, 5), {104, 3}) == 100ull * 8 * 3 * 5);
  CHECK(layer_macs(LayerSpec::dwsep_conv1d_of(3, 8, 5), {104, 3}) ==
        100ull * 3 * 5 + 100ull * 3 * 8);
  CHECK(layer_macs(LayerSpec::dwsep_conv1d_of(3, 8, 5), {104, 3}) <
        layer_macs(LayerSpec::conv1d_of(3, 8, 5), {104, 3}));

  CHECK(layer_macs(LayerSpec::conv2d_of(3, 8, 3, 3, 1, 1), {3, 16, 16}) ==
        16ull * 16 * 8 * 3 * 3 * 3);

  CHECK(layer_macs(LayerSpec::maxpool1d_of(2, 2), {16, 4}) == 0);
  CHECK(layer_macs(LayerSpec::global_avg_pool_of(), {16, 4}) == 0);
  CHECK(layer_macs(LayerSpec::activation_of(ActivationFn::relu), {16, 4}) == 0);
  CHECK(layer_macs(LayerSpec::flatten_of(), {16, 4}) == 0);
}

TEST_CASE("macs scale linearly with out channels") {
  Rng rng(5);
  for (int it = 0; it < 50; ++it) {
    const std::size_t cin = 1 + rng.below(6), cout = 1 + rng.below(12);
    const std::size_t k = 1 + rng.below(5);
    const std::size_t L = k + rng.below(60);
    const auto m1 = layer_macs(LayerSpec::conv1d_of(cin, cout, k), {L, cin});
    const auto m2 = layer_macs(LayerSpec::conv1d_of(cin, 2 * cout, k), {L, cin});
    CHECK(m2 == 2 * m1);
  }
}

TEST_CASE("peak ram follows the live-set rule") {
  ModelSpec single;
  single.input_shape = {224};
  single.layers = {LayerSpec::dense_of(224, 1)};
  single.head = {HeadKind::regression, 1};
  CHECK(peak_ram(single) == (224 + 1) * 4);

  ModelSpec two;
  two.input_shape = {224};
  two.layers = {LayerSpec::dense_of(224, 64), LayerSpec::dense_of(64, 1)};
  two.head = {HeadKind::regression, 1};
  CHECK(peak_ram(two) == (224 + 64) * 4);
  CHECK(peak_ram(two) == 1152);

  ModelSpec flatten_only;
  flatten_only.input_shape = {4, 8};
  flatten_only.layers = {LayerSpec::flatten_of()};
  flatten_only.head = {HeadKind::regression, 32};
  CHECK(peak_ram(flatten_only) == 2ull * 32 * 4);

  ModelSpec empty;
  empty.input_shape = {10};
  empty.layers = {};
  empty.head = {HeadKind::regression, 10};
  CHECK(peak_ram(empty) == 2ull * 10 * 4);
}

TEST_CASE("appending small zero-cost layers keeps the peak") {
  ModelSpec base;
  base.input_shape = {224};
  base.layers = {LayerSpec::dense_of(224, 64), LayerSpec::dense_of(64, 1)};
  base.head = {HeadKind::regression, 1};
  const auto before = peak_ram(base);
  base.layers.push_back(LayerSpec::activation_of(ActivationFn::relu));
  CHECK(peak_ram(base) == before);
}

TEST_CASE("profile aggregates layer costs") {
  ModelSpec spec;
  spec.input_shape = {104, 3};
  spec.layers = {LayerSpec::conv1d_of(3, 8, 5), LayerSpec::activation_of(ActivationFn::relu),
                 LayerSpec::flatten_of(), LayerSpec::dense_of(800, 1)};
  spec.head = {HeadKind::binary_classifier, 1};
  const auto report = profile(spec);
  REQUIRE(report.layers.size() == 5);  // + sigmoid head stage
  std::uint64_t macs = 0, params = 0;
  for (const auto& l : report.layers) {
    macs += l.macs;
    params += l.params;
  }
  CHECK(report.total_macs == macs);
  CHECK(report.total_params == params);
  CHECK(report.total_macs == 12000 + 800);
  CHECK(report.total_params == (8 * 3 * 5 + 8) + (800 + 1));
  CHECK(report.layers[4].kind == "activation(sigmoid)");
  CHECK(report.rom_kb == (report.total_params * 4 + 1023) / 1024);

  ModelSpec empty;
  empty.input_shape = {16};
  empty.head = {HeadKind::regression, 16};
  const auto er = profile(empty);
  CHECK(er.total_macs == 0);
  CHECK(er.total_params == 0);
  CHECK(er.peak_ram_bytes == 2 * 16 * 4);
}

TEST_CASE("macs additivity over a model") {
  ModelSpec spec;
  spec.input_shape = {64, 2};
  spec.layers = {LayerSpec::conv1d_of(2, 4, 3, 1, 1), LayerSpec::dwsep_conv1d_of(4, 6, 3, 1, 1),
                 LayerSpec::global_avg_pool_of(), LayerSpec::dense_of(6, 1)};
  spec.head = {HeadKind::regression, 1};
  const auto report = profile(spec);
  std::vector<std::size_t> shape = spec.input_shape;
  std::uint64_t want = 0;
  for (const auto& l : spec.layers) {
    want += layer_macs(l, shape);
    shape = layer_output_shape(l, shape, "test");
  }
  CHECK(report.total_macs == want);
}

TEST_CASE("budget percentages reproduce the published table") {
  const auto cubesat = platform_by_name("cubesat");
  const auto opssat = platform_by_name("ops-sat");

  const double ram[6] = {1606, 8193, 2043, 122, 1024, 59};
  const double rom[6] = {1268, 4902, 1294, 149, 508, 166};
  const std::string ram_cubesat[6] = {"9.80", "50.01", "12.47", "0.74", "6.25", "0.36"};
  const std::string rom_cubesat[6] = {"1.93", "7.48", "1.97", "0.23", "0.78", "0.25"};
  const std::string ram_opssat[6] = {"0.15", "0.78", "0.19", "0.01", "0.10", "0.01"};
  const std::string rom_opssat[6] = {"0.02", "0.06", "0.02", "< 0.01", "0.01", "< 0.01"};

  for (int i = 0; i < 6; ++i) {
    const auto cs = budget_report(ram[i], rom[i], cubesat);
    CHECK(cs.ram_pct == ram_cubesat[i]);
    CHECK(cs.rom_pct == rom_cubesat[i]);
    const auto os = budget_report(ram[i], rom[i], opssat);
    CHECK(os.ram_pct == ram_opssat[i]);
    CHECK(os.rom_pct == rom_opssat[i]);
  }
}

TEST_CASE("unknown platform is a config error") {
  CHECK_THROWS_AS(platform_by_name("voyager"), ConfigError);
}
