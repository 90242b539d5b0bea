#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>
#include <vector>

#include "d2d/error.hpp"
#include "d2d/saliency.hpp"

namespace d2d::tools {
namespace {

template <typename F>
double median_ms(int repeats, F&& f) {
  std::vector<double> times;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

double checksum(const SaliencyMap& m) {
  double s = 0.0;
  for (double v : m.values.values()) s += v;
  return s;
}

double max_rel_diff(const SaliencyMap& a, const SaliencyMap& ref) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double r = ref.values.values()[i];
    const double d = std::abs(a.values.values()[i] - r);
    worst = std::max(worst, r != 0.0 ? d / std::abs(r) : d);
  }
  return worst;
}

}  // namespace

std::string run_bench(const BenchOptions& o) {
  if (o.repeats < 1) fail(ErrorKind::Validation, "bench needs at least one repeat");
  std::mt19937 rng(o.seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> data(o.rows * o.cols * o.channels);
  for (auto& v : data) v = dist(rng);
  // Identity geometry keeps arbitrary bench shapes valid.
  const DescriptorMap map(o.rows, o.cols, o.channels, std::move(data), GridGeometry::identity(),
                          ImageSize{static_cast<int>(o.rows), static_cast<int>(o.cols)});
  RsWindow window;
  window.radius = o.radius;
  window.sample_step = o.step;

  SaliencyMap as_out, naive_out, fast_out;
  const double t_as = median_ms(o.repeats, [&] { as_out = absolute_saliency(map); });
  const double t_naive = median_ms(o.repeats, [&] { naive_out = relative_saliency_naive(map, window); });
  const double t_fast = median_ms(o.repeats, [&] { fast_out = relative_saliency(map, window); });

  std::ostringstream out;
  out << "kernel,rows,cols,channels,radius,step,repeats,median_ms,checksum,max_rel_diff_vs_naive\n";
  auto row = [&](const char* name, double ms, const SaliencyMap& m, double rel) {
    out << name << ',' << o.rows << ',' << o.cols << ',' << o.channels << ',' << o.radius << ','
        << o.step << ',' << o.repeats << ',' << std::fixed << std::setprecision(4) << ms << ','
        << std::setprecision(6) << checksum(m) << ',' << std::scientific << std::setprecision(3)
        << rel << std::defaultfloat << '\n';
  };
  row("as", t_as, as_out, 0.0);
  row("rs_naive", t_naive, naive_out, 0.0);
  row("rs_optimized", t_fast, fast_out, max_rel_diff(fast_out, naive_out));
  return out.str();
}

}  // namespace d2d::tools
