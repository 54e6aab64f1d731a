#include "kftune/direct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "kftune/error.hpp"

namespace kftune {

void SearchBox::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size())
    throw InvalidArgument("SearchBox: lower and upper must be non-empty and of equal size");
  if (!lower.allFinite() || !upper.allFinite())
    throw InvalidArgument("SearchBox: bounds must be finite");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(lower(i) < upper(i)))
      throw InvalidArgument("SearchBox: lower must be below upper in dimension " +
                            std::to_string(i));
}

bool SearchBox::contains(const VectorXd& q) const {
  if (q.size() != lower.size()) return false;
  return (q.array() >= lower.array()).all() && (q.array() <= upper.array()).all();
}

VectorXd SearchBox::to_unit(const VectorXd& q) const {
  return ((q - lower).array() / (upper - lower).array()).matrix();
}

VectorXd SearchBox::from_unit(const VectorXd& u) const {
  VectorXd q = lower + (u.array() * (upper - lower).array()).matrix();
  return q.cwiseMax(lower).cwiseMin(upper);
}

SearchBox SearchBox::unit(int dim) { return {VectorXd::Zero(dim), VectorXd::Ones(dim)}; }

VectorXd Rectangle::side_lengths() const {
  VectorXd s(level.size());
  for (Eigen::Index i = 0; i < level.size(); ++i) s(i) = std::pow(3.0, -level(i));
  return s;
}

double Rectangle::size() const { return 0.5 * side_lengths().norm(); }

namespace {

constexpr double kNonFinitePenalty = 1e12;

struct Search {
  const std::function<double(const VectorXd&)>& objective;
  const SearchBox& box;
  long budget;
  long evaluations = 0;
  VectorXd best_x;
  double best_value = std::numeric_limits<double>::infinity();

  double eval(const VectorXd& unit_point) {
    const VectorXd x = box.from_unit(unit_point);
    double v = objective(x);
    if (!std::isfinite(v)) v = kNonFinitePenalty;
    ++evaluations;
    if (v < best_value) {
      best_value = v;
      best_x = x;
    }
    return v;
  }
};

// Indices of potentially optimal rectangles.
std::vector<std::size_t> potentially_optimal(const std::vector<Rectangle>& rects, double f_min,
                                             double epsilon) {
  // Best rectangle for every distinct size, sizes ascending.
  std::vector<std::pair<double, std::size_t>> by_size;
  by_size.reserve(rects.size());
  for (std::size_t i = 0; i < rects.size(); ++i) by_size.emplace_back(rects[i].size(), i);
  std::sort(by_size.begin(), by_size.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    if (rects[a.second].value != rects[b.second].value)
      return rects[a.second].value < rects[b.second].value;
    return a.second < b.second;
  });
  std::vector<std::pair<double, std::size_t>> groups;
  for (const auto& entry : by_size) {
    if (!groups.empty() && std::abs(entry.first - groups.back().first) <= 1e-12 * entry.first)
      continue;
    groups.push_back(entry);
  }

  std::vector<std::size_t> selected;
  const double threshold = f_min - epsilon * std::abs(f_min);
  for (std::size_t j = 0; j < groups.size(); ++j) {
    const double dj = groups[j].first;
    const double fj = rects[groups[j].second].value;
    double k_low = 0.0;
    double k_high = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < j; ++i) {
      const double di = groups[i].first;
      const double fi = rects[groups[i].second].value;
      k_low = std::max(k_low, (fj - fi) / (dj - di));
    }
    for (std::size_t i = j + 1; i < groups.size(); ++i) {
      const double di = groups[i].first;
      const double fi = rects[groups[i].second].value;
      k_high = std::min(k_high, (fi - fj) / (di - dj));
    }
    if (k_high <= 0.0 || k_low > k_high) continue;
    if (std::isfinite(k_high) && fj - k_high * dj > threshold) continue;
    selected.push_back(groups[j].second);
  }
  return selected;
}

}  // namespace

DirectResult direct_optimize(const std::function<double(const VectorXd&)>& objective,
                             const SearchBox& box, const DirectOptions& options) {
  box.validate();
  if (options.budget < 1) throw InvalidArgument("direct_optimize: budget must be at least 1");
  const int d = box.dim();

  Search search{objective, box, options.budget, 0, VectorXd(), std::numeric_limits<double>::infinity()};
  std::vector<Rectangle> rects;
  {
    Rectangle root;
    root.center = VectorXd::Constant(d, 0.5);
    root.level = VectorXi::Zero(d);
    root.value = search.eval(root.center);
    rects.push_back(std::move(root));
  }

  long iterations = 0;
  int stalled = 0;
  while (search.evaluations < options.budget) {
    const double best_before = search.best_value;
    const auto chosen = potentially_optimal(rects, search.best_value, options.epsilon);
    bool exhausted = false;
    for (std::size_t idx : chosen) {
      const long remaining = options.budget - search.evaluations;
      if (remaining < 2) {
        exhausted = true;
        break;
      }
      // Longest sides are those with the smallest level.
      const Rectangle parent = rects[idx];
      const int min_level = parent.level.minCoeff();
      std::vector<int> dims;
      for (int i = 0; i < d; ++i)
        if (parent.level(i) == min_level) dims.push_back(i);
      if (static_cast<long>(dims.size()) * 2 > remaining) dims.resize(remaining / 2);

      const double delta = std::pow(3.0, -(min_level + 1));
      struct Probe {
        int dim;
        VectorXd lo, hi;
        double f_lo, f_hi;
      };
      std::vector<Probe> probes;
      for (int i : dims) {
        Probe p{i, parent.center, parent.center, 0.0, 0.0};
        p.lo(i) -= delta;
        p.hi(i) += delta;
        p.f_lo = search.eval(p.lo);
        p.f_hi = search.eval(p.hi);
        probes.push_back(std::move(p));
      }
      std::stable_sort(probes.begin(), probes.end(), [](const Probe& a, const Probe& b) {
        return std::min(a.f_lo, a.f_hi) < std::min(b.f_lo, b.f_hi);
      });

      VectorXi level = parent.level;
      for (const auto& p : probes) {
        level(p.dim) += 1;
        rects.push_back({p.lo, level, p.f_lo});
        rects.push_back({p.hi, level, p.f_hi});
      }
      rects[idx].level = level;
    }
    ++iterations;
    if (exhausted) break;

    if (best_before - search.best_value < options.stall_tolerance) {
      if (++stalled >= options.stall_iterations) break;
    } else {
      stalled = 0;
    }
  }

  return {search.best_x, search.best_value, search.evaluations, iterations};
}

}  // namespace kftune
