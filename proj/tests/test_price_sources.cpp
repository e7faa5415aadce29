#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "pwstable/price_sources.hpp"
#include "test_support.hpp"

using namespace pwstable;
namespace ts = testing_support;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("pwstable_" + name);
  std::ofstream(path) << body;
  return path.string();
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(NormalSpec, DefaultSupportIsSixSigma) {
  const auto d = NormalSpec::with_default_support(100.0, 100.0);
  EXPECT_DOUBLE_EQ(d.support_lo, 40.0);
  EXPECT_DOUBLE_EQ(d.support_hi, 160.0);
}

TEST(NormalSpec, LowerSupportClampedAtFloor) {
  const auto d = NormalSpec::with_default_support(100.0, 10000.0);
  EXPECT_DOUBLE_EQ(d.support_lo, kPriceFloor);
}

TEST(NormalSpec, RejectsBadParameters) {
  EXPECT_THROW(NormalSpec::with_default_support(100.0, -1.0), InvalidArgument);
  EXPECT_THROW(NormalSpec::with_default_support(-5.0, 1.0), InvalidArgument);
  EXPECT_THROW(NormalSpec::make(100.0, 1.0, 50.0, 50.0), InvalidArgument);
  EXPECT_THROW(NormalSpec::make(100.0, 1.0, 0.0, 50.0), InvalidArgument);
}

TEST(Distribution, CdfAtNinetiethPercentile) {
  const auto d = NormalSpec::with_default_support(100.0, 100.0);
  EXPECT_NEAR(cdf(d, 100.0 + 10.0 * 1.2815515655446004), 0.9, 1e-12);
  EXPECT_NEAR(cdf(d, 100.0), 0.5, 1e-15);
}

TEST(Distribution, PointMassIsDegenerate) {
  const auto d = NormalSpec::with_default_support(100.0, 0.0);
  EXPECT_THROW(pdf(d, 100.0), DomainError);
  EXPECT_THROW(cdf(d, 100.0), DomainError);
  EXPECT_DOUBLE_EQ(cond_mean_below(d, 120.0), 100.0);
  EXPECT_DOUBLE_EQ(cond_mean_above(d, 80.0), 100.0);
  EXPECT_THROW(cond_mean_below(d, 90.0), DomainError);
}

TEST(Distribution, HalfNormalConditionalMean) {
  // Half-normal mean sigma sqrt(2/pi) = 0.7978845608 sigma, cut at 6 sigma:
  // (phi(0) - phi(6)) / (Phi(0) - Phi(-6)) = 0.7978845502254658.
  const auto d = NormalSpec::with_default_support(100.0, 1.0);
  EXPECT_NEAR(cond_mean_below(d, 100.0) - 100.0, -0.7978845502254658, 1e-11);
  EXPECT_NEAR(cond_mean_above(d, 100.0) - 100.0, 0.7978845502254658, 1e-11);
}

TEST(Distribution, ConditionalMeansMatchQuadrature) {
  // Frozen from an independent quadrature over the truncated N(100, 100).
  const auto d = NormalSpec::with_default_support(100.0, 100.0);
  EXPECT_NEAR(cond_mean_below(d, 100.0), 92.02115449774533, 1e-9);
  EXPECT_NEAR(cond_mean_below(d, 93.87969993577398), 87.7597356119479, 1e-8);
  EXPECT_NEAR(cond_mean_above(d, 112.82912373049443), 117.56114012232719, 1e-8);
}

TEST(Distribution, EmptyConditioningEventRaises) {
  const auto d = NormalSpec::with_default_support(100.0, 100.0);
  EXPECT_THROW(cond_mean_below(d, 30.0), DomainError);
  EXPECT_THROW(cond_mean_above(d, 170.0), DomainError);
  EXPECT_NE(error_of([&] { cond_mean_below(d, 30.0); }).find("empty conditioning event"),
            std::string::npos);
}

TEST(Distribution, ConditionalMeansBracketThreshold) {
  ts::Gen g(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto d = NormalSpec::with_default_support(g.uniform(10.0, 500.0), g.uniform(0.5, 400.0));
    const double x = g.uniform(d.mu - 3.0 * d.sigma(), d.mu + 3.0 * d.sigma());
    if (x <= d.support_lo) continue;
    EXPECT_LE(cond_mean_below(d, x), x);
    EXPECT_GE(cond_mean_above(d, x), x);
    EXPECT_GE(cond_mean_below(d, x), d.support_lo);
  }
}

TEST(FirstMoment, ExpansionMatchesQuadrature) {
  ts::Gen g(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const double mu = g.uniform(1.0, 300.0);
    const double sigma2 = g.uniform(0.01, 900.0);
    const auto d = NormalSpec::with_default_support(mu, sigma2);
    const double sd = std::sqrt(sigma2);
    double a = mu + g.uniform(-4.0, 4.0) * sd;
    double b = mu + g.uniform(-4.0, 4.0) * sd;
    if (a > b) std::swap(a, b);
    const double quad =
        ts::integrate([&](double x) { return x * ts::normal_pdf(x, mu, sigma2); }, a, b);
    const double closed = partial_first_moment(d, a, b);
    if (std::abs(quad) < 1e-300) continue;
    EXPECT_LE(ts::rel_err(closed, quad), 1e-8) << "mu=" << mu << " s2=" << sigma2 << " [" << a
                                               << "," << b << "]";
  }
}

TEST(Streams, IidIsDeterministicAndInSupport) {
  const auto d = NormalSpec::with_default_support(100.0, 100.0);
  const auto a = sample_iid(d, 500, 42);
  const auto b = sample_iid(d, 500, 42);
  const auto c = sample_iid(d, 500, 43);
  EXPECT_EQ(a.prices, b.prices);
  EXPECT_NE(a.prices, c.prices);
  for (double p : a.prices) {
    EXPECT_GE(p, d.support_lo);
    EXPECT_LE(p, d.support_hi);
  }
  EXPECT_EQ(a.seed, 42u);
  EXPECT_EQ(a.source, SourceTag::iid);
}

TEST(Streams, IidSampleMomentsMatch) {
  const auto d = NormalSpec::with_default_support(100.0, 100.0);
  const auto s = sample_iid(d, 200000, 7);
  double sum = 0.0;
  double sq = 0.0;
  for (double p : s.prices) {
    sum += p;
    sq += p * p;
  }
  const double n = static_cast<double>(s.size());
  const double mean = sum / n;
  EXPECT_NEAR(mean, 100.0, 0.1);
  EXPECT_NEAR(sq / n - mean * mean, 100.0, 1.5);
}

TEST(Streams, PointMassIsConstant) {
  const auto s = sample_iid(NormalSpec::with_default_support(250.0, 0.0), 20, 1);
  for (double p : s.prices) EXPECT_EQ(p, 250.0);
}

TEST(Streams, RandomWalkStartsAtP0AndClamps) {
  const auto w = WalkSpec::make(-5.0, 1.0, 10.0);
  const auto s = random_walk(w, 100, 3);
  EXPECT_EQ(s[0], 10.0);
  EXPECT_GT(s.clamp_count, 0u);
  for (double p : s.prices) EXPECT_GE(p, w.floor);
  EXPECT_EQ(s.prices.back(), w.floor);
}

TEST(Streams, RandomWalkIncrementStatistics) {
  const auto w = WalkSpec::make(-0.056, 16.7, 1e6);
  const auto s = random_walk(w, 100000, 5);
  const WalkSpec est = step_stats(s);
  EXPECT_EQ(s.clamp_count, 0u);
  EXPECT_NEAR(est.sigma_step, 16.7, 0.15);
  EXPECT_NEAR(est.mu_step, -0.056, 0.2);
  EXPECT_EQ(est.p0, 1e6);
}

TEST(Streams, WalkRejectsBadSpec) {
  EXPECT_THROW(WalkSpec::make(0.0, -1.0, 10.0), InvalidArgument);
  EXPECT_THROW(WalkSpec::make(0.0, 1.0, 0.0), InvalidArgument);
}

TEST(Series, RejectsNonPositivePrices) {
  EXPECT_THROW(PriceSeries::make({1.0, 0.0}), InvalidArgument);
  EXPECT_THROW(PriceSeries::make({}), InvalidArgument);
}

TEST(Csv, LoadsPricesInFileOrder) {
  const auto path = write_temp("ok.csv",
                               "\xEF\xBB\xBFtimestamp,open,close\n"
                               "2021-01-01 00:00,1,100.5\n"
                               "\"2021-01-01 01:00\",2,\"101.25\"\n"
                               "\n"
                               "2021-01-01 02:00,3,99\n");
  const auto s = load_csv(path, "timestamp", "close");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], 100.5);
  EXPECT_EQ(s[1], 101.25);
  EXPECT_EQ(s[2], 99.0);
  EXPECT_EQ(s.source, SourceTag::csv);
}

TEST(Csv, ErrorsNameTheRow) {
  const auto bad = write_temp("bad.csv", "timestamp,close\na,1\nb,2\nc,oops\n");
  const std::string msg = error_of([&] { load_csv(bad, "timestamp", "close"); });
  EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;

  const auto neg = write_temp("neg.csv", "timestamp,close\na,-4\n");
  EXPECT_NE(error_of([&] { load_csv(neg, "timestamp", "close"); }).find("row 1"),
            std::string::npos);

  const auto short_row = write_temp("short.csv", "timestamp,close\na,1\nb\n");
  EXPECT_NE(error_of([&] { load_csv(short_row, "timestamp", "close"); }).find("row 2"),
            std::string::npos);
}

TEST(Csv, MissingColumnAndFile) {
  const auto path = write_temp("nocol.csv", "time,close\na,1\n");
  EXPECT_NE(error_of([&] { load_csv(path, "timestamp", "close"); }).find("missing column"),
            std::string::npos);
  EXPECT_THROW(load_csv("/nonexistent/dir/x.csv", "timestamp", "close"), InvalidArgument);
  const auto empty = write_temp("empty.csv", "");
  EXPECT_THROW(load_csv(empty, "timestamp", "close"), InvalidArgument);
}
