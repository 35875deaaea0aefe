#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slsmpc/csv.hpp"
#include "slsmpc/error.hpp"
#include "slsmpc/pair_table.hpp"

namespace slsmpc {

inline constexpr double kProbEps = 1e-6;

/// Monotone step function from one view's similarity to P(same class).
/// values[s] applies to similarities in [seg_bounds[s], seg_bounds[s+1]);
/// anything outside the bounds clamps to the end segments.
struct PiecewiseProbFn {
  std::size_t view = 0;
  std::vector<double> seg_bounds;
  std::vector<double> seg_means;
  std::vector<double> values;

  std::size_t segments() const { return values.size(); }

  std::size_t segment_of(double w) const {
    // interior cut points are seg_bounds[1 .. I-1]
    auto first = seg_bounds.begin() + 1;
    auto last = seg_bounds.end() - 1;
    return static_cast<std::size_t>(std::upper_bound(first, last, w) - first);
  }

  double operator()(double w) const { return values[segment_of(w)]; }

  /// Monotone, in [0, 1], first value 0, last value 1.
  bool satisfies_constraints() const {
    if (values.size() < 2 || values.front() != 0.0 || values.back() != 1.0) return false;
    for (std::size_t s = 0; s < values.size(); ++s) {
      if (!(values[s] >= 0.0 && values[s] <= 1.0)) return false;
      if (s && values[s] < values[s - 1]) return false;
    }
    return true;
  }
};

/// Which consistency loss the trainer minimizes: `mixed` aligns single and
/// cross functionals with the geometric mix; `direct` aligns single with
/// multi and cross directly.
enum class ConsistencyForm { mixed, direct };

struct TrainConfig {
  std::size_t segments = 1000;
  std::size_t indi = 10;
  std::size_t indj_plus_1 = 4;
  double lambda = 20.0;
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.00005;
  std::size_t epochs = 2000;
  double early_stop_tol = 1e-8;
  std::size_t early_stop_window = 50;
  std::uint64_t seed = 0;

  ConsistencyForm form = ConsistencyForm::mixed;
  bool use_consistency1 = true;
  bool use_consistency2 = true;
  bool use_constraint = true;

  void validate() const {
    if (segments < 4) throw ArgumentError("segment count must be at least 4");
    if (indi < 1 || indi > segments / 4) throw ArgumentError("indi must lie in [1, I/4]");
    if (indj_plus_1 < 1 || indj_plus_1 > segments / 4) throw ArgumentError("indj+1 must lie in [1, I/4]");
    if (!(lambda > 0.0)) throw ArgumentError("lambda must be positive");
    if (!(lr > 0.0)) throw ArgumentError("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ArgumentError("momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw ArgumentError("weight decay must be nonnegative");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"segments", c.segments},
                     {"indi", c.indi},
                     {"indj_plus_1", c.indj_plus_1},
                     {"lambda", c.lambda},
                     {"lr", c.lr},
                     {"momentum", c.momentum},
                     {"weight_decay", c.weight_decay},
                     {"epochs", c.epochs},
                     {"early_stop_tol", c.early_stop_tol},
                     {"early_stop_window", c.early_stop_window},
                     {"seed", c.seed},
                     {"consistency", c.form == ConsistencyForm::mixed ? "mixed" : "direct"},
                     {"use_consistency1", c.use_consistency1},
                     {"use_consistency2", c.use_consistency2},
                     {"use_constraint", c.use_constraint}};
}

/// Missing keys keep the values already in `c`.
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("segments", c.segments);
  get("indi", c.indi);
  get("indj_plus_1", c.indj_plus_1);
  get("lambda", c.lambda);
  get("lr", c.lr);
  get("momentum", c.momentum);
  get("weight_decay", c.weight_decay);
  get("epochs", c.epochs);
  get("early_stop_tol", c.early_stop_tol);
  get("early_stop_window", c.early_stop_window);
  get("seed", c.seed);
  if (j.contains("consistency")) {
    const auto form = j.at("consistency").get<std::string>();
    if (form == "mixed") {
      c.form = ConsistencyForm::mixed;
    } else if (form == "direct") {
      c.form = ConsistencyForm::direct;
    } else {
      throw ArgumentError("unknown consistency form '" + form + "'");
    }
  }
  get("use_consistency1", c.use_consistency1);
  get("use_consistency2", c.use_consistency2);
  get("use_constraint", c.use_constraint);
}

inline double clamp_prob(double f) { return std::clamp(f, kProbEps, 1.0 - kProbEps); }

/// Product-of-odds fusion f1..fM -> prod f / (prod f + prod (1 - f)),
/// evaluated as a logistic of summed log-odds with inputs clamped to
/// [eps, 1 - eps]. An empty input gives the uninformative 0.5.
inline double eval_fjoint(std::span<const double> fvals) {
  double logit = 0.0;
  auto term = [](double f) {
    const double g = clamp_prob(f);
    return std::log(g) - std::log1p(-g);
  };
  if (fvals.size() <= 2) {
    for (double f : fvals) logit += term(f);
  } else {
    // summed in sorted order so the result does not depend on view order
    std::vector<double> terms(fvals.size());
    std::transform(fvals.begin(), fvals.end(), terms.begin(), term);
    std::sort(terms.begin(), terms.end());
    for (double t : terms) logit += t;
  }
  return 1.0 / (1.0 + std::exp(-logit));
}

inline double eval_fjoint(std::initializer_list<double> fvals) {
  return eval_fjoint(std::span<const double>(fvals.begin(), fvals.size()));
}

inline std::vector<double> eval_fsingle(const PiecewiseProbFn& fn) { return fn.values; }

/// Geometric blend sqrt(multi * (single + sum cross) / M), M = cross.size() + 1.
inline std::vector<double> eval_fmix(std::span<const double> single, const std::vector<std::vector<double>>& cross,
                                     std::span<const double> multi) {
  const double m_count = static_cast<double>(cross.size() + 1);
  std::vector<double> out(single.size());
  for (std::size_t s = 0; s < single.size(); ++s) {
    double avg = std::clamp(single[s], 0.0, 1.0);
    for (const auto& c : cross) avg += std::clamp(c[s], 0.0, 1.0);
    avg /= m_count;
    const double prod = std::clamp(multi[s], 0.0, 1.0) * avg;
    out[s] = std::sqrt(std::max(prod, kProbEps));
  }
  return out;
}

/// Pool-adjacent-violators: L2 projection onto nondecreasing sequences.
inline void isotonic_project(std::span<double> v) {
  struct Block {
    double sum;
    std::size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  blocks.reserve(v.size());
  for (double x : v) {
    blocks.push_back({x, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      auto last = blocks.back();
      blocks.pop_back();
      blocks.back().sum += last.sum;
      blocks.back().count += last.count;
    }
  }
  std::size_t pos = 0;
  for (const auto& b : blocks) {
    const double mean = b.mean();
    for (std::size_t c = 0; c < b.count; ++c) v[pos++] = mean;
  }
}

/// Enforces the monotone-function constraints in place: clamp to [0, 1],
/// isotonic projection of the interior, endpoints pinned to 0 and 1.
inline void project_monotone(std::vector<double>& f) {
  if (f.size() < 2) return;
  std::span<double> interior(f.data() + 1, f.size() - 2);
  for (double& x : interior) x = std::clamp(x, 0.0, 1.0);
  isotonic_project(interior);
  f.front() = 0.0;
  f.back() = 1.0;
}

/// Per-segment functionals of all views, indexed [view][segment];
/// cross is [view][other view][segment] and empty on the diagonal.
struct Functionals {
  std::vector<std::vector<double>> single;
  std::vector<std::vector<std::vector<double>>> cross;
  std::vector<std::vector<double>> multi;
  std::vector<std::vector<double>> mix;
};

struct LossParts {
  double total = 0.0;
  double consistency = 0.0;
  double constraint = 0.0;
};

/// The self-supervised training objective over one pair table. Holds the
/// sparse segment co-occurrence structure so that functionals, loss, and
/// analytic gradient can be evaluated for any parameter vectors.
class ConsistencyObjective {
 public:
  using Params = std::vector<std::vector<double>>;

  // The config is not validated here so that functionals can be evaluated on
  // tables with very few segments; train() and loss() validate.
  ConsistencyObjective(const PairTable& table, const TrainConfig& cfg) : table_(&table), cfg_(cfg) {
    if (cfg.indi + cfg.indj_plus_1 > table.n_segments()) throw ArgumentError("pinned ranges exceed segment count");
    if (table.n_segments() != cfg.segments) {
      throw ArgumentError("pair table has " + std::to_string(table.n_segments()) + " segments, config asks for " +
                          std::to_string(cfg.segments));
    }
    const auto m_count = table.n_views();
    const auto seg_count = table.n_segments();
    cross_.assign(m_count, std::vector<std::vector<std::vector<Link>>>(m_count));
    for (std::size_t m = 0; m < m_count; ++m) {
      for (std::size_t b = 0; b < m_count; ++b) {
        if (b == m) continue;
        auto& rows = cross_[m][b];
        rows.resize(seg_count);
        std::vector<double> hist(seg_count, 0.0);
        for (std::size_t s = 0; s < seg_count; ++s) {
          std::vector<std::uint32_t> touched;
          std::size_t co = 0;
          for (auto t : table.members(m, s)) {
            if (!table.observed(t, b)) continue;
            const auto sb = static_cast<std::size_t>(table.seg(t, b));
            if (hist[sb] == 0.0) touched.push_back(static_cast<std::uint32_t>(sb));
            hist[sb] += 1.0;
            ++co;
          }
          std::sort(touched.begin(), touched.end());
          for (auto sb : touched) {
            rows[s].push_back({sb, hist[sb] / static_cast<double>(co)});
            hist[sb] = 0.0;
          }
        }
      }
    }
  }

  const PairTable& table() const { return *table_; }
  const TrainConfig& config() const { return cfg_; }

  Functionals functionals(const Params& f) const {
    Functionals out;
    std::vector<double> joint;
    forward(f, out, joint);
    return out;
  }

  LossParts loss(const Params& f) const { return evaluate(f, nullptr); }

  LossParts loss_and_gradient(const Params& f, Params& grad) const { return evaluate(f, &grad); }

  /// Uniform ramp 0 -> 1 for every view.
  Params initial_params() const {
    Params f(table_->n_views(), std::vector<double>(table_->n_segments()));
    for (auto& v : f)
      for (std::size_t s = 0; s < v.size(); ++s) v[s] = static_cast<double>(s) / static_cast<double>(v.size() - 1);
    return f;
  }

 private:
  struct Link {
    std::uint32_t seg;
    double weight;
  };

  void forward(const Params& f, Functionals& fx, std::vector<double>& joint) const {
    const auto& table = *table_;
    const auto m_count = table.n_views();
    const auto seg_count = table.n_segments();
    fx.single = f;
    fx.cross.assign(m_count, std::vector<std::vector<double>>(m_count));
    for (std::size_t m = 0; m < m_count; ++m) {
      for (std::size_t b = 0; b < m_count; ++b) {
        if (b == m) continue;
        auto& c = fx.cross[m][b];
        c.resize(seg_count);
        for (std::size_t s = 0; s < seg_count; ++s) {
          const auto& links = cross_[m][b][s];
          if (links.empty()) {
            c[s] = f[m][s];
            continue;
          }
          double acc = 0.0;
          for (const auto& l : links) acc += l.weight * f[b][l.seg];
          c[s] = acc;
        }
      }
    }
    joint.resize(table.size());
    std::vector<double> vals;
    for (std::size_t t = 0; t < table.size(); ++t) {
      vals.clear();
      for (std::size_t m = 0; m < m_count; ++m)
        if (table.observed(t, m)) vals.push_back(f[m][static_cast<std::size_t>(table.seg(t, m))]);
      joint[t] = eval_fjoint(vals);
    }
    fx.multi.assign(m_count, std::vector<double>(seg_count, 0.0));
    for (std::size_t m = 0; m < m_count; ++m) {
      for (std::size_t s = 0; s < seg_count; ++s) {
        const auto& mem = table.members(m, s);
        double acc = 0.0;
        for (auto t : mem) acc += joint[t];
        fx.multi[m][s] = acc / static_cast<double>(mem.size());
      }
    }
    fx.mix.resize(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
      std::vector<std::vector<double>> others;
      for (std::size_t b = 0; b < m_count; ++b)
        if (b != m) others.push_back(fx.cross[m][b]);
      fx.mix[m] = eval_fmix(fx.single[m], others, fx.multi[m]);
    }
  }

  LossParts evaluate(const Params& f, Params* grad) const {
    const auto& table = *table_;
    const auto m_count = table.n_views();
    const auto seg_count = table.n_segments();
    const double md = static_cast<double>(m_count);
    const double id = static_cast<double>(seg_count);

    Functionals fx;
    std::vector<double> joint;
    forward(f, fx, joint);

    // adjoints of the functionals
    std::vector<std::vector<double>> g_single(m_count, std::vector<double>(seg_count, 0.0));
    std::vector<std::vector<double>> g_multi = g_single;
    std::vector<std::vector<double>> g_mix = g_single;
    std::vector<std::vector<std::vector<double>>> g_cross(m_count, std::vector<std::vector<double>>(m_count));
    for (std::size_t m = 0; m < m_count; ++m)
      for (std::size_t b = 0; b < m_count; ++b)
        if (b != m) g_cross[m][b].assign(seg_count, 0.0);

    LossParts parts;
    double cons_sum = 0.0;
    // Consistency: mixed form is (1/M)(L1 + L2) with L1, L2 each averaged by
    // 1/(M I); direct form averages each squared gap by 1/(M I).
    const double cons_scale = cfg_.form == ConsistencyForm::mixed ? 1.0 / (md * md * id) : 1.0 / (md * id);
    const double lam = cfg_.lambda;
    for (std::size_t m = 0; m < m_count; ++m) {
      for (std::size_t s = 0; s < seg_count; ++s) {
        const double single = fx.single[m][s];
        const double target = cfg_.form == ConsistencyForm::mixed ? fx.mix[m][s] : fx.multi[m][s];
        auto& g_target = cfg_.form == ConsistencyForm::mixed ? g_mix[m][s] : g_multi[m][s];
        if (cfg_.use_consistency1) {
          const double d = single - target;
          cons_sum += d * d;
          g_single[m][s] += lam * cons_scale * 2.0 * d;
          g_target -= lam * cons_scale * 2.0 * d;
        }
        if (cfg_.use_consistency2) {
          for (std::size_t b = 0; b < m_count; ++b) {
            if (b == m) continue;
            const double c = fx.cross[m][b][s];
            if (cfg_.form == ConsistencyForm::mixed) {
              const double d = c - target;
              cons_sum += d * d;
              g_cross[m][b][s] += lam * cons_scale * 2.0 * d;
              g_target -= lam * cons_scale * 2.0 * d;
            } else {
              const double d = single - c;
              cons_sum += d * d;
              g_single[m][s] += lam * cons_scale * 2.0 * d;
              g_cross[m][b][s] -= lam * cons_scale * 2.0 * d;
            }
          }
        }
      }
    }
    parts.consistency = cons_sum * cons_scale;

    if (cfg_.use_constraint) {
      double cst = 0.0;
      auto pin = [&](double value, double goal, double& g) {
        const double d = value - goal;
        cst += d * d;
        g += 2.0 * d;
      };
      const std::size_t hi_start = seg_count - cfg_.indj_plus_1;
      for (std::size_t m = 0; m < m_count; ++m) {
        for (std::size_t s = 0; s < seg_count; ++s) {
          double goal;
          if (s < cfg_.indi) {
            goal = 0.0;
          } else if (s >= hi_start) {
            goal = 1.0;
          } else {
            continue;
          }
          pin(fx.multi[m][s], goal, g_multi[m][s]);
          pin(fx.single[m][s], goal, g_single[m][s]);
          for (std::size_t b = 0; b < m_count; ++b)
            if (b != m) pin(fx.cross[m][b][s], goal, g_cross[m][b][s]);
        }
      }
      parts.constraint = cst;
    }
    parts.total = lam * parts.consistency + parts.constraint;
    if (!grad) return parts;

    Params& g = *grad;
    g.assign(m_count, std::vector<double>(seg_count, 0.0));

    // mix = sqrt(max(multi * avg, eps)), avg = (single + sum_b cross) / M
    if (cfg_.form == ConsistencyForm::mixed) {
      for (std::size_t m = 0; m < m_count; ++m) {
        for (std::size_t s = 0; s < seg_count; ++s) {
          if (g_mix[m][s] == 0.0) continue;
          double avg = std::clamp(fx.single[m][s], 0.0, 1.0);
          for (std::size_t b = 0; b < m_count; ++b)
            if (b != m) avg += std::clamp(fx.cross[m][b][s], 0.0, 1.0);
          avg /= md;
          const double multi = std::clamp(fx.multi[m][s], 0.0, 1.0);
          if (multi * avg < kProbEps) continue;
          const double d_prod = g_mix[m][s] / (2.0 * fx.mix[m][s]);
          auto inside = [](double x) { return x >= 0.0 && x <= 1.0; };
          if (inside(fx.multi[m][s])) g_multi[m][s] += d_prod * avg;
          const double d_avg = d_prod * multi / md;
          if (inside(fx.single[m][s])) g_single[m][s] += d_avg;
          for (std::size_t b = 0; b < m_count; ++b)
            if (b != m && inside(fx.cross[m][b][s])) g_cross[m][b][s] += d_avg;
        }
      }
    }

    for (std::size_t m = 0; m < m_count; ++m)
      for (std::size_t s = 0; s < seg_count; ++s) g[m][s] += g_single[m][s];

    for (std::size_t m = 0; m < m_count; ++m) {
      for (std::size_t b = 0; b < m_count; ++b) {
        if (b == m) continue;
        for (std::size_t s = 0; s < seg_count; ++s) {
          const double gc = g_cross[m][b][s];
          if (gc == 0.0) continue;
          const auto& links = cross_[m][b][s];
          if (links.empty()) {
            g[m][s] += gc;
            continue;
          }
          for (const auto& l : links) g[b][l.seg] += gc * l.weight;
        }
      }
    }

    // multi = mean of joint over segment members;
    // d joint / d f_v = J (1 - J) / (f_v (1 - f_v)) inside the clamp
    std::vector<double> g_joint(table.size(), 0.0);
    for (std::size_t m = 0; m < m_count; ++m) {
      for (std::size_t s = 0; s < seg_count; ++s) {
        if (g_multi[m][s] == 0.0) continue;
        const auto& mem = table.members(m, s);
        const double share = g_multi[m][s] / static_cast<double>(mem.size());
        for (auto t : mem) g_joint[t] += share;
      }
    }
    for (std::size_t t = 0; t < table.size(); ++t) {
      if (g_joint[t] == 0.0) continue;
      const double j = joint[t];
      const double jj = j * (1.0 - j);
      for (std::size_t m = 0; m < m_count; ++m) {
        if (!table.observed(t, m)) continue;
        const auto s = static_cast<std::size_t>(table.seg(t, m));
        const double v = f[m][s];
        if (v <= kProbEps || v >= 1.0 - kProbEps) continue;
        g[m][s] += g_joint[t] * jj / (v * (1.0 - v));
      }
    }
    return parts;
  }

  const PairTable* table_;
  TrainConfig cfg_;
  // cross_[m][b][s]: distribution of view-b segments over the pairs of view-m segment s
  std::vector<std::vector<std::vector<std::vector<Link>>>> cross_;
};

namespace detail {

inline ConsistencyObjective::Params values_of(const std::vector<PiecewiseProbFn>& fns) {
  ConsistencyObjective::Params f;
  for (const auto& fn : fns) f.push_back(fn.values);
  return f;
}

inline TrainConfig config_for(const PairTable& table) {
  TrainConfig cfg;
  cfg.segments = table.n_segments();
  cfg.indi = std::max<std::size_t>(1, std::min<std::size_t>(cfg.indi, table.n_segments() / 4));
  cfg.indj_plus_1 = std::max<std::size_t>(1, std::min<std::size_t>(cfg.indj_plus_1, table.n_segments() / 4));
  return cfg;
}

}  // namespace detail

/// Wraps per-view values as functions carrying the table's segment geometry.
inline std::vector<PiecewiseProbFn> make_functions(const PairTable& table, const ConsistencyObjective::Params& f) {
  std::vector<PiecewiseProbFn> fns;
  for (std::size_t m = 0; m < table.n_views(); ++m) {
    fns.push_back({m, table.seg_bounds(m), table.seg_means(m), f[m]});
  }
  return fns;
}

/// Functions initialized to the uniform ramp 0 -> 1.
inline std::vector<PiecewiseProbFn> initial_functions(const PairTable& table) {
  return make_functions(table, ConsistencyObjective(table, detail::config_for(table)).initial_params());
}

inline std::vector<double> eval_fcross(const PairTable& table, const std::vector<PiecewiseProbFn>& fns, std::size_t m,
                                       std::size_t b) {
  if (m == b) throw ArgumentError("cross functional needs two distinct views");
  ConsistencyObjective obj(table, detail::config_for(table));
  return obj.functionals(detail::values_of(fns)).cross[m][b];
}

inline std::vector<double> eval_fmulti(const PairTable& table, const std::vector<PiecewiseProbFn>& fns,
                                       std::size_t m) {
  ConsistencyObjective obj(table, detail::config_for(table));
  return obj.functionals(detail::values_of(fns)).multi[m];
}

inline LossParts loss(const PairTable& table, const std::vector<PiecewiseProbFn>& fns, TrainConfig cfg) {
  cfg.validate();
  cfg.form = ConsistencyForm::mixed;
  return ConsistencyObjective(table, cfg).loss(detail::values_of(fns));
}

/// Consistency term of the direct (single vs multi, single vs cross) form.
inline double loss_variant_direct(const PairTable& table, const std::vector<PiecewiseProbFn>& fns, TrainConfig cfg) {
  cfg.validate();
  cfg.form = ConsistencyForm::direct;
  return ConsistencyObjective(table, cfg).loss(detail::values_of(fns)).consistency;
}

struct TrainResult {
  std::vector<PiecewiseProbFn> functions;
  std::vector<LossParts> log;  // loss at the start of each epoch
  LossParts final_loss;
  Functionals functionals;  // of the final functions
  std::size_t epochs_run = 0;
};

using EpochObserver = std::function<void(std::size_t epoch, const std::vector<std::vector<double>>& values)>;

/// Full-batch momentum gradient descent with L2 weight decay on the free values f_2..f_{I-1}, projected back onto the
/// monotone constraint set after every step. Stops after `epochs` steps or
/// when the total loss improves less than early_stop_tol over
/// early_stop_window epochs.
inline TrainResult train(const PairTable& table, const TrainConfig& cfg, const EpochObserver& observer = {}) {
  cfg.validate();
  ConsistencyObjective obj(table, cfg);
  auto f = obj.initial_params();
  auto velocity = f;
  for (auto& v : velocity) std::fill(v.begin(), v.end(), 0.0);
  ConsistencyObjective::Params grad;

  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto parts = obj.loss_and_gradient(f, grad);
    if (!std::isfinite(parts.total)) {
      throw DivergenceError("probability-function training diverged at epoch " + std::to_string(epoch) +
                            " (loss " + std::to_string(parts.total) + ")");
    }
    result.log.push_back(parts);
    for (std::size_t m = 0; m < f.size(); ++m) {
      auto& fm = f[m];
      auto& vm = velocity[m];
      for (std::size_t s = 1; s + 1 < fm.size(); ++s) {
        const double d = grad[m][s] + cfg.weight_decay * fm[s];
        if (!std::isfinite(d)) throw DivergenceError("non-finite gradient at epoch " + std::to_string(epoch));
        vm[s] = cfg.momentum * vm[s] + d;
        fm[s] -= cfg.lr * vm[s];
        if (!std::isfinite(fm[s])) throw DivergenceError("non-finite parameter at epoch " + std::to_string(epoch));
      }
      project_monotone(fm);
    }
    result.epochs_run = epoch + 1;
    if (observer) observer(epoch, f);
    const auto w = cfg.early_stop_window;
    if (w > 0 && result.log.size() > w) {
      const double before = result.log[result.log.size() - 1 - w].total;
      if (before - parts.total < cfg.early_stop_tol) break;
    }
  }
  result.final_loss = obj.loss(f);
  result.functionals = obj.functionals(f);
  result.functions = make_functions(table, f);
  return result;
}

inline nlohmann::json functions_to_json(const std::vector<PiecewiseProbFn>& fns, const TrainConfig& cfg) {
  nlohmann::json j;
  j["config"] = cfg;
  j["views"] = nlohmann::json::array();
  for (const auto& fn : fns) {
    j["views"].push_back({{"view", fn.view},
                          {"seg_bounds", fn.seg_bounds},
                          {"seg_means", fn.seg_means},
                          {"values", fn.values}});
  }
  return j;
}

inline void save_functions(const std::filesystem::path& path, const std::vector<PiecewiseProbFn>& fns,
                           const TrainConfig& cfg) {
  auto out = csv::open_out(path);
  out << functions_to_json(fns, cfg).dump(1) << '\n';
}

struct LoadedFunctions {
  std::vector<PiecewiseProbFn> functions;
  TrainConfig config;
};

inline LoadedFunctions load_functions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  LoadedFunctions out;
  try {
    nlohmann::json j;
    in >> j;
    if (j.contains("config")) j.at("config").get_to(out.config);
    for (const auto& v : j.at("views")) {
      PiecewiseProbFn fn;
      fn.view = v.at("view").get<std::size_t>();
      fn.seg_bounds = v.at("seg_bounds").get<std::vector<double>>();
      fn.seg_means = v.at("seg_means").get<std::vector<double>>();
      fn.values = v.at("values").get<std::vector<double>>();
      if (fn.seg_bounds.size() != fn.values.size() + 1 || fn.seg_means.size() != fn.values.size()) {
        throw DataError(path.string() + ": inconsistent segment arrays for view " + std::to_string(fn.view));
      }
      out.functions.push_back(std::move(fn));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return out;
}

inline void write_loss_log(const std::filesystem::path& path, const std::vector<LossParts>& log) {
  auto out = csv::open_out(path);
  out << "epoch,total,consistency,constraint\n";
  for (std::size_t e = 0; e < log.size(); ++e) {
    out << e << ',' << csv::format_double(log[e].total) << ',' << csv::format_double(log[e].consistency) << ','
        << csv::format_double(log[e].constraint) << '\n';
  }
}

}  // namespace slsmpc
