#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "conga/analytics.hpp"
#include "conga/brownian.hpp"
#include "conga/chain.hpp"
#include "conga/cusp.hpp"
#include "conga/field.hpp"
#include "conga/geometry.hpp"
#include "conga/hermite.hpp"
#include "conga/io.hpp"
#include "conga/quadrature.hpp"
#include "conga/random.hpp"

namespace conga {

struct ExperimentConfig {
    std::string experiment;
    double alpha = 0.5;
    std::vector<double> t_grid;
    double delta = 0.1;
    int replicas = 50;
    std::uint64_t seed = 42;
    std::size_t quadrature_points = 1024;
    std::string output_path;
    int workers = 0; // 0 = hardware concurrency

    void validate() const {
        if (experiment.empty()) throw std::invalid_argument("config: experiment name is empty");
        if (!(delta > 0.0 && delta < alpha && alpha < 1.0))
            throw std::invalid_argument("config: need 0 < delta < alpha < 1");
        if (replicas < 1) throw std::invalid_argument("config: replicas must be >= 1");
        if (t_grid.empty()) throw std::invalid_argument("config: t_grid is empty");
        for (std::size_t i = 0; i + 1 < t_grid.size(); ++i)
            if (!(t_grid[i] < t_grid[i + 1]))
                throw std::invalid_argument("config: t_grid must be strictly increasing");
        if (quadrature_points < 64)
            throw std::invalid_argument("config: quadrature_points must be >= 64");
        if (workers < 0) throw std::invalid_argument("config: workers must be >= 0");
    }
};

struct ReportRow {
    double t = 0.0;
    double estimate = 0.0;
    double halfwidth = 0.0; // 95% normal-approximation half-width
    double prediction = 0.0;
    double ratio = 0.0;
    std::map<std::string, double> extra;
};

struct ExperimentReport {
    std::string experiment;
    std::vector<ReportRow> rows;
    double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
    double exponent_stderr = 0.0;
    bool pass = false;
    double runtime_seconds = 0.0;
    std::vector<std::string> notes;
};

/// Source of standard normal draws per (root, stream index); injectable so
/// tests can run every experiment on the zero path.
using NormalFactory =
    std::function<std::function<double()>(std::uint64_t, std::uint64_t)>;

inline NormalFactory seeded_normals() {
    return [](std::uint64_t root, std::uint64_t idx) {
        return [s = NormalStream(SeedSpec{root, idx})]() mutable { return s(); };
    };
}

inline NormalFactory zero_normals() {
    return [](std::uint64_t, std::uint64_t) {
        return [] { return 0.0; };
    };
}

// ---------------------------------------------------------------------------
// replica pool: deterministic per-index work, index-ordered aggregation
// ---------------------------------------------------------------------------

template <class T, class Fn>
std::vector<T> run_replicas(int replicas, int workers, Fn&& fn) {
    std::vector<T> out(static_cast<std::size_t>(replicas));
    int nw = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    nw = std::clamp(nw, 1, replicas);
    if (nw == 1) {
        for (int i = 0; i < replicas; ++i) out[static_cast<std::size_t>(i)] = fn(i);
        return out;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w) {
        pool.emplace_back([&] {
            for (int i; (i = next.fetch_add(1)) < replicas;) {
                try {
                    out[static_cast<std::size_t>(i)] = fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return out;
}

namespace stats {
inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}
inline double variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += sqr(x - m);
    return s / static_cast<double>(v.size() - 1);
}
inline double halfwidth95(const std::vector<double>& v) {
    return 1.96 * std::sqrt(variance(v) / static_cast<double>(v.size()));
}
inline double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(
        std::clamp(std::ceil(q * static_cast<double>(v.size())) - 1.0, 0.0,
                   static_cast<double>(v.size() - 1)));
    return v[idx];
}
} // namespace stats

// constants shared by the registered experiments
inline constexpr double kCouplingEta = 0.05;   // exponent slack in the coupling stats
inline constexpr double kFreezingEta = 0.3;    // tail location parameter
inline constexpr double kLoopRadiusFactor = 1.0;
inline constexpr double kIntensityUpperBound = 0.5;
inline constexpr int kRuleMinReplicas = 50;    // pass rules need at least this many

namespace exp_detail {

inline BrownianPath path01(const NormalFactory& normals, std::uint64_t root,
                           std::uint64_t idx, double t, int dims) {
    auto gen = normals(root, idx);
    return build_path_increments(gen, 1.0, 1.0 / t, dims);
}

inline void require_rule_replicas(const ExperimentConfig& cfg, ExperimentReport& rep) {
    if (cfg.replicas < kRuleMinReplicas) {
        rep.pass = false;
        rep.notes.push_back("pass rule not certified: replicas < 50");
    }
}

// rel_tie absorbs exact ties of common-random-number comparisons (truncation
// dust orders of magnitude below any genuine violation)
inline bool non_increasing(const std::vector<double>& v, double rel_tie = 0.0) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
        if (v[i + 1] > v[i] * (1.0 + rel_tie)) return false;
    return true;
}

inline bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
        if (v[i + 1] >= v[i]) return false;
    return true;
}

} // namespace exp_detail

// ---------------------------------------------------------------------------
// coupling of the discrete chain to the smooth field
// ---------------------------------------------------------------------------

inline ExperimentReport exp_coupling(const ExperimentConfig& cfg,
                                     const NormalFactory& normals = seeded_normals()) {
    ExperimentReport rep;
    rep.experiment = "coupling";
    std::vector<double> pos_stats, der_stats, interp_stats;
    // one master probe grid spanning every window, so the per-n sup runs over
    // nested subsets of the same k positions
    std::vector<int> master;
    {
        const double klo = std::pow(cfg.t_grid.front(), 0.3);
        const double khi = cfg.alpha * cfg.t_grid.back();
        for (int i = 0; i < 64; ++i) {
            const double f = static_cast<double>(i) / 63.0;
            const int k = static_cast<int>(std::lround(klo * std::pow(khi / klo, f)));
            if (master.empty() || k > master.back()) master.push_back(k);
        }
    }
    for (double td : cfg.t_grid) {
        const int n = static_cast<int>(td);
        KernelSpec spec{cfg.alpha, static_cast<double>(n), cfg.quadrature_points, 6.0};
        std::vector<int> ks;
        for (int k : master)
            if (k >= std::pow(n, 0.3) && k <= cfg.alpha * n) ks.push_back(k);
        struct Stat {
            std::vector<double> pos2, der2, interp2; // per-k squared errors
            double max_pos = 0.0;                    // per-replica max statistic
        };
        auto per = run_replicas<Stat>(cfg.replicas, cfg.workers, [&](int r) {
            // increments consumed in reversed time order: the weight at lag l
            // multiplies the same draw for every n, so the trend comparison
            // across the grid runs on common random numbers
            auto gen = normals(cfg.seed, static_cast<std::uint64_t>(r));
            std::vector<double> values(static_cast<std::size_t>(n) + 1, 0.0);
            {
                std::vector<double> draws(static_cast<std::size_t>(n));
                for (auto& d : draws) d = gen();
                for (std::size_t i = 1; i < values.size(); ++i)
                    values[i] = values[i - 1] + draws[values.size() - 1 - i];
            }
            auto path = path_from_values(std::move(values), 1.0);
            auto frame = run_conga({cfg.alpha, n, 1}, path, {}, true);
            auto interp = interpolate_frame(frame);
            Stat s;
            for (int k : ks) {
                const double xk = static_cast<double>(k);
                const double u = eval_u(path, xk, n, spec);
                const double du = eval_u_derivative(path, xk, n, spec);
                const double xkp = frame.position(k + 1).x;
                const double dxk = frame.position(k + 2).x - xkp;
                s.pos2.push_back(sqr(std::pow(xk, 0.25 - kCouplingEta) * (xkp - u)));
                s.der2.push_back(sqr(std::pow(xk, 0.75 - kCouplingEta) * (dxk - du)));
                const double xm = std::min(xk + 0.5, cfg.alpha * n); // between nodes
                const double um = eval_u(path, xm, n, spec);
                s.interp2.push_back(
                    std::max(sqr(std::pow(xk, 0.25 - kCouplingEta) * (interp.value(xk).x - u)),
                             sqr(std::pow(xm, 0.25 - kCouplingEta) * (interp.value(xm).x - um))));
                s.max_pos = std::max(s.max_pos, std::sqrt(s.pos2.back()));
            }
            return s;
        });
        // sup over k of the replica root-mean-square scaled error
        auto sup_rms = [&](auto member) {
            double sup = 0.0;
            for (std::size_t i = 0; i < ks.size(); ++i) {
                double acc = 0.0;
                for (const auto& s : per) acc += (s.*member)[i];
                sup = std::max(sup, std::sqrt(acc / static_cast<double>(per.size())));
            }
            return sup;
        };
        std::vector<double> max_pos;
        for (const auto& s : per) max_pos.push_back(s.max_pos);
        ReportRow row;
        row.t = td;
        row.estimate = sup_rms(&Stat::pos2);
        row.halfwidth = stats::halfwidth95(max_pos);
        row.extra["derivative_stat"] = sup_rms(&Stat::der2);
        row.extra["interpolated_stat"] = sup_rms(&Stat::interp2);
        row.extra["per_replica_max_mean"] = stats::mean(max_pos);
        rep.rows.push_back(row);
        pos_stats.push_back(row.estimate);
        der_stats.push_back(row.extra["derivative_stat"]);
        interp_stats.push_back(row.extra["interpolated_stat"]);
    }
    rep.pass = exp_detail::non_increasing(pos_stats, 1e-3) &&
               exp_detail::non_increasing(der_stats, 1e-3) &&
               exp_detail::non_increasing(interp_stats, 1e-3);
    exp_detail::require_rule_replicas(cfg, rep);
    rep.notes.push_back("rule: scaled sup errors (sup over k of the replica-RMS scaled "
                        "coupling error, common random numbers across n) non-increasing "
                        "along the n grid up to a 1e-3 tie slack; the per-replica max "
                        "statistic is reported unguarded");
    return rep;
}

// ---------------------------------------------------------------------------
// variance transition at the cutoff
// ---------------------------------------------------------------------------

inline ExperimentReport exp_variance_cutoff(const ExperimentConfig& cfg,
                                            const NormalFactory& normals = seeded_normals()) {
    ExperimentReport rep;
    rep.experiment = "variance_cutoff";
    const std::vector<double> lambdas{0.25, 0.75};
    std::vector<double> n25, n75, v25, v75;
    bool mc_ok = true, mc_done = false;
    double t_mc = 0.0; // largest desk-scale grid point gets the MC check
    for (double t : cfg.t_grid)
        if (t <= 10000.0) t_mc = t;
    for (double t : cfg.t_grid) {
        auto scan = variance_cutoff_scan(t, lambdas, cfg.alpha);
        ReportRow row;
        row.t = t;
        row.estimate = scan[0].variance;
        row.prediction = scan[0].prediction;
        row.ratio = scan[0].variance / scan[0].prediction;
        row.extra["var_075"] = scan[1].variance;
        row.extra["pred_075"] = scan[1].prediction;
        n25.push_back(scan[0].variance / scan[0].prediction);
        n75.push_back(scan[1].variance / scan[1].prediction);
        v25.push_back(scan[0].variance);
        v75.push_back(scan[1].variance);

        if (t == t_mc) {
            // Monte Carlo check against the quadrature at desk scale
            KernelSpec spec{cfg.alpha, t, cfg.quadrature_points, 6.0};
            const int n = static_cast<int>(t);
            for (std::size_t li = 0; li < lambdas.size(); ++li) {
                const double x = scan[li].x;
                auto vals = run_replicas<double>(cfg.replicas, cfg.workers, [&](int r) {
                    auto gen = normals(cfg.seed, static_cast<std::uint64_t>(r) * 2 + li);
                    auto path = build_path_increments(gen, static_cast<double>(n), 1.0, 1);
                    return eval_u(path, x, t, spec);
                });
                const double mcvar = stats::variance(vals);
                // variance-estimator half-width via the chi-square normal approx
                const double hw = 1.96 * mcvar * std::sqrt(2.0 / (cfg.replicas - 1.0));
                row.extra[li == 0 ? "mc_var_025" : "mc_var_075"] = mcvar;
                row.extra[li == 0 ? "mc_hw_025" : "mc_hw_075"] = hw;
                if (std::abs(mcvar - scan[li].variance) > 3.0 * hw) mc_ok = false;
                mc_done = true;
                if (li == 0) row.halfwidth = hw;
            }
        }
        rep.rows.push_back(row);
    }
    bool envelope = true;
    for (std::size_t i = 1; i < n25.size(); ++i) {
        envelope = envelope && n25[i] / n25[0] >= 1.0 / 3.0 && n25[i] / n25[0] <= 3.0;
        envelope = envelope && n75[i] / n75[0] >= 1.0 / 3.0 && n75[i] / n75[0] <= 3.0;
    }
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < v25.size(); ++i)
        monotone = monotone && v25[i] < v25[i + 1] && v75[i] > v75[i + 1];
    rep.pass = envelope && monotone && mc_ok && mc_done;
    exp_detail::require_rule_replicas(cfg, rep);
    rep.notes.push_back("rule: rate envelope stable within [1/3,3] of the smallest t; "
                        "variance grows below the cutoff and decays above it; MC variance "
                        "within 3 half-widths of quadrature at the largest desk-scale t");
    return rep;
}

// ---------------------------------------------------------------------------
// critical points: first intensity and concentration of the count
// ---------------------------------------------------------------------------

namespace exp_detail {

inline std::vector<double> critical_points_of_field(const BrownianPath& p01, double a, double b,
                                                    const KernelSpec& spec, int comp = 0) {
    const int n = static_cast<int>(std::ceil(4.0 * std::sqrt(spec.t) * (b - a))) + 2;
    std::vector<double> xs(static_cast<std::size_t>(n)), vals(xs.size());
    for (int i = 0; i < n; ++i) {
        xs[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1.0);
        vals[static_cast<std::size_t>(i)] =
            eval_scaled_derivative(p01, xs[static_cast<std::size_t>(i)], 1, spec, comp);
    }
    return find_critical_points(
        xs, vals, [&](double x) { return eval_scaled_derivative(p01, x, 1, spec, comp); });
}

} // namespace exp_detail

inline ExperimentReport exp_intensity(const ExperimentConfig& cfg,
                                      const NormalFactory& normals = seeded_normals()) {
    ExperimentReport rep;
    rep.experiment = "intensity";
    const double a = cfg.delta, b = kIntensityUpperBound;
    std::vector<double> ratio_vars;
    bool mean_ok = true, gap_ok = true;
    bool have_t2000 = false;
    for (double t : cfg.t_grid) {
        KernelSpec spec{cfg.alpha, t, cfg.quadrature_points, 6.0};
        auto counts = run_replicas<double>(cfg.replicas, cfg.workers, [&](int r) {
            auto p01 = exp_detail::path01(normals, cfg.seed, static_cast<std::uint64_t>(r), t, 1);
            return static_cast<double>(
                exp_detail::critical_points_of_field(p01, a, b, spec).size());
        });
        const double predict = expected_critical_points(a, b, t, cfg.alpha);
        std::vector<double> ratios;
        for (double c : counts) ratios.push_back(c / predict);
        ReportRow row;
        row.t = t;
        row.estimate = stats::mean(counts);
        row.halfwidth = stats::halfwidth95(counts);
        row.prediction = predict;
        row.ratio = row.estimate / predict;
        row.extra["ratio_variance"] = stats::variance(ratios);
        // closed/exact intensity gap over the probe range
        double gap = 0.0;
        for (double x : {a, 0.5 * (a + b), b})
            gap = std::max(gap, std::abs(first_intensity(x, t, cfg.alpha, IntensityMode::exact) /
                                             first_intensity(x, t, cfg.alpha) -
                                         1.0));
        row.extra["intensity_gap"] = gap;
        gap_ok = gap_ok && gap <= 5.0 * std::sqrt(std::log(t) / t);
        if (t == 2000.0) {
            have_t2000 = true;
            mean_ok = std::abs(row.ratio - 1.0) <= 0.05;
        }
        ratio_vars.push_back(row.extra["ratio_variance"]);
        rep.rows.push_back(row);
    }
    rep.pass = gap_ok && mean_ok && exp_detail::strictly_decreasing(ratio_vars);
    if (!have_t2000) rep.notes.push_back("note: t = 2000 not in grid, mean rule skipped");
    exp_detail::require_rule_replicas(cfg, rep);
    rep.notes.push_back("rule: mean count within 5% of the intensity integral at t = 2000; "
                        "Var(N/EN) strictly decreasing; closed/exact gap within the "
                        "5 sqrt(log t / t) envelope");
    return rep;
}

// ---------------------------------------------------------------------------
// spacing: cells with two or more critical points become rare
// ---------------------------------------------------------------------------

inline ExperimentReport exp_spacing(const ExperimentConfig& cfg,
                                    const NormalFactory& normals = seeded_normals()) {
    ExperimentReport rep;
    rep.experiment = "spacing";
    const double a = cfg.delta, b = kIntensityUpperBound;
    std::vector<double> fractions;
    for (double t : cfg.t_grid) {
        KernelSpec spec{cfg.alpha, t, cfg.quadrature_points, 6.0};
        const double at = std::pow(t, -0.25) * std::log(t);
        const double cell = at / std::sqrt(t);
        const double coarse_cell =
            10.0 * (b - a) / std::max(1.0, expected_critical_points(a, b, t, cfg.alpha));
        struct Frac {
            double fine, coarse;
        };
        auto per = run_replicas<Frac>(cfg.replicas, cfg.workers, [&](int r) {
            auto p01 = exp_detail::path01(normals, cfg.seed, static_cast<std::uint64_t>(r), t, 1);
            auto roots = exp_detail::critical_points_of_field(p01, a, b, spec);
            auto crowded_fraction = [&](double w) {
                const int ncell = static_cast<int>(std::ceil((b - a) / w));
                std::vector<int> counts(static_cast<std::size_t>(ncell), 0);
                for (double root : roots) {
                    auto j = static_cast<std::size_t>((root - a) / w);
                    counts[std::min(j, counts.size() - 1)] += 1;
                }
                int crowded = 0;
                for (int c : counts) crowded += c >= 2 ? 1 : 0;
                return static_cast<double>(crowded) / static_cast<double>(ncell);
            };
            return Frac{crowded_fraction(cell), crowded_fraction(coarse_cell)};
        });
        std::vector<double> fine, coarse;
        for (auto& f : per) {
            fine.push_back(f.fine);
            coarse.push_back(f.coarse);
        }
        ReportRow row;
        row.t = t;
        row.estimate = stats::mean(fine);
        row.halfwidth = stats::halfwidth95(fine);
        row.extra["coarse_fraction"] = stats::mean(coarse);
        rep.rows.push_back(row);
        fractions.push_back(row.estimate);
    }
    rep.pass = fractions.back() <= fractions.front() &&
               rep.rows.front().extra["coarse_fraction"] >= 0.5;
    exp_detail::require_rule_replicas(cfg, rep);
    rep.notes.push_back("rule: crowded-cell fraction decreases along the t grid; coarse cells "
                        "are crowded (sanity inversion)");
    return rep;
}

// ---------------------------------------------------------------------------
// length of the two dimensional curve
// ---------------------------------------------------------------------------

inline ExperimentReport exp_length(const ExperimentConfig& cfg,
                                   const NormalFactory& normals = seeded_normals()) {
    ExperimentReport rep;
    rep.experiment = "length";
    std::vector<double> means, ts, vars;
    for (double t : cfg.t_grid) {
        KernelSpec spec{cfg.alpha, t, cfg.quadrature_points, 6.0};
        const int m =
            static_cast<int>(std::ceil(8.0 * std::sqrt(t) * (cfg.alpha - cfg.delta))) + 2;
        auto lengths = run_replicas<double>(cfg.replicas, cfg.workers, [&](int r) {
            auto p01 = exp_detail::path01(normals, cfg.seed, static_cast<std::uint64_t>(r), t, 2);
            double len = 0.0;
            Vec2 prev{};
            for (int i = 0; i < m; ++i) {
                const double x = cfg.delta + (cfg.alpha - cfg.delta) * i / (m - 1.0);
                const Vec2 v = eval_scaled2(p01, x, spec);
                if (i > 0) len += (v - prev).norm();
                prev = v;
            }
            return len;
        });
        ReportRow row;
        row.t = t;
        row.estimate = stats::mean(lengths);
        row.halfwidth = stats::halfwidth95(lengths);
        row.prediction = expected_length(cfg.delta, cfg.alpha, t);
        row.ratio = row.estimate / row.prediction;
        row.extra["var_length"] = stats::variance(lengths);
        // concentration tails at r sqrt(log t) around the mean
        for (int r = 1; r <= 3; ++r) {
            int hits = 0;
            for (double l : lengths)
                if (std::abs(l - row.estimate) >= r * std::sqrt(std::log(t))) ++hits;
            row.extra["tail_freq_" + std::to_string(r)] =
                static_cast<double>(hits) / static_cast<double>(lengths.size());
        }
        rep.rows.push_back(row);
        means.push_back(row.estimate);
        ts.push_back(t);
        vars.push_back(row.extra["var_length"]);
    }
    const auto fit = fit_power_law(ts, means);
    rep.fitted_exponent = fit.exponent;
    rep.exponent_stderr = fit.std_error;
    const double quad = expected_length(cfg.delta, cfg.alpha, cfg.t_grid.back(),
                                        LengthMode::exact);
    const double closed = expected_length(cfg.delta, cfg.alpha, cfg.t_grid.back());
    rep.rows.back().extra["quadrature_mode"] = quad;
    // Gaussian-form self-consistency: with C2 fitted at r = 1, the r = 3
    // frequency must sit below exp(-9 C2); vacuous when no tail is observed.
    bool tails_ok = true;
    {
        const double f1 = rep.rows.back().extra.at("tail_freq_1");
        const double f3 = rep.rows.back().extra.at("tail_freq_3");
        if (f1 > 0.0) tails_ok = f3 <= std::exp(9.0 * std::log(f1));
    }
    rep.pass = std::abs(fit.exponent - 0.25) <= 0.03 && vars.back() <= 3.0 * vars.front() &&
               std::abs(quad / closed - 1.0) <= 0.02 && tails_ok;
    exp_detail::require_rule_replicas(cfg, rep);
    rep.notes.push_back("rule: growth exponent 0.25 +- 0.03; variance bounded (<= 3x across "
                        "the grid); quadrature mode within 2% of the closed form; tail "
                        "frequencies consistent with the Gaussian concentration form");
    return rep;
}

// ---------------------------------------------------------------------------
// closeness of the scaled curve to the driving path
// ---------------------------------------------------------------------------

inline ExperimentReport exp_brownian_closeness(const ExperimentConfig& cfg,
                                               const NormalFactory& normals = seeded_normals()) {
    ExperimentReport rep;
    rep.experiment = "brownian_closeness";
    std::vector<double> p99s, raws, ts;
    for (double t : cfg.t_grid) {
        KernelSpec spec{cfg.alpha, t, cfg.quadrature_points, 6.0};
        std::vector<double> xg;
        {
            const double xlo = std::pow(t, -0.5), xhi = cfg.alpha;
            for (int i = 0; i < 120; ++i)
                xg.push_back(xlo * std::pow(xhi / xlo, i / 119.0));
            for (int i = 1; i < 80; ++i) xg.push_back(xhi * i / 80.0);
            std::sort(xg.begin(), xg.end());
            xg.erase(std::unique(xg.begin(), xg.end()), xg.end());
            while (!xg.empty() && xg.front() < std::pow(t, -0.5)) xg.erase(xg.begin());
        }
        struct Sup {
            double norm, raw;
        };
        auto per = run_replicas<Sup>(cfg.replicas, cfg.workers, [&](int r) {
            auto p01 = exp_detail::path01(normals, cfg.seed, static_cast<std::uint64_t>(r), t, 2);
            Sup s{0.0, 0.0};
            for (double x : xg) {
                const Vec2 u = eval_scaled2(p01, x, spec);
                const Vec2 w = p01.value2(1.0 - x / cfg.alpha);
                const double d = (u - w).norm();
                const double scale = std::sqrt(-std::sqrt(x / t) * std::log(x / t));
                s.raw = std::max(s.raw, d);
                s.norm = std::max(s.norm, d / scale);
            }
            return s;
        });
        std::vector<double> norms, rawsup;
        for (auto& s : per) {
            norms.push_back(s.norm);
            rawsup.push_back(s.raw);
        }
        ReportRow row;
        row.t = t;
        row.estimate = stats::quantile(norms, 0.99);
        row.halfwidth = stats::halfwidth95(norms);
        row.extra["raw_sup_mean"] = stats::mean(rawsup);
        rep.rows.push_back(row);
        p99s.push_back(row.estimate);
        raws.push_back(row.extra["raw_sup_mean"]);
        ts.push_back(t);
    }
    const auto fit = fit_power_law(ts, raws);
    rep.fitted_exponent = fit.exponent;
    rep.exponent_stderr = fit.std_error;
    const double spread = *std::max_element(p99s.begin(), p99s.end()) /
                          *std::min_element(p99s.begin(), p99s.end());
    rep.pass = spread <= 2.0 && std::abs(fit.exponent + 0.25) <= 0.05;
    exp_detail::require_rule_replicas(cfg, rep);
    rep.notes.push_back("rule: normalized sup 99th percentile t-independent within a factor "
                        "2; raw sup falls like t^{-1/4} +- 0.05");
    return rep;
}

// ---------------------------------------------------------------------------
// small loops of the two dimensional curve
// ---------------------------------------------------------------------------

inline ExperimentReport exp_loop_count(const ExperimentConfig& cfg,
                                       const NormalFactory& normals = seeded_normals()) {
    ExperimentReport rep;
    rep.experiment = "loop_count";
    std::vector<double> means, ts;
    bool bound_ok = true;
    for (double t : cfg.t_grid) {
        KernelSpec spec{cfg.alpha, t, cfg.quadrature_points, 6.0};
        const double threshold =
            2.0 * kLoopRadiusFactor * std::pow(std::log(t) / t, 0.25);
        const int m =
            static_cast<int>(std::ceil(8.0 * std::sqrt(t) * (cfg.alpha - cfg.delta))) + 2;
        struct Out {
            double small_loops;
            bool bounded;
        };
        auto per = run_replicas<Out>(cfg.replicas, cfg.workers, [&](int r) {
            auto p01 = exp_detail::path01(normals, cfg.seed, static_cast<std::uint64_t>(r), t, 2);
            SampledCurve curve;
            curve.params.resize(static_cast<std::size_t>(m));
            curve.points.resize(curve.params.size());
            int flips_x = 0, flips_y = 0;
            Vec2 prev{}, dprev{};
            for (int i = 0; i < m; ++i) {
                const double x = cfg.delta + (cfg.alpha - cfg.delta) * i / (m - 1.0);
                const Vec2 v = eval_scaled2(p01, x, spec);
                curve.params[static_cast<std::size_t>(i)] = x;
                curve.points[static_cast<std::size_t>(i)] = v;
                if (i > 0) {
                    const Vec2 d = v - prev;
                    if (i > 1) {
                        if (d.x * dprev.x < 0.0) ++flips_x;
                        if (d.y * dprev.y < 0.0) ++flips_y;
                    }
                    dprev = d;
                }
                prev = v;
            }
            auto loops = extract_loops(curve, find_self_intersections(curve), false);
            int small = 0;
            for (auto& l : loops) {
                if (loop_size_upper_bound(l, curve) <= threshold)
                    ++small;
                else if (loop_size(l, curve) <= threshold)
                    ++small;
            }
            // a loop forces a sign change of each coordinate's increments
            const bool bounded =
                static_cast<int>(loops.size()) <= std::min(flips_x, flips_y);
            return Out{static_cast<double>(small), bounded};
        });
        std::vector<double> counts;
        for (auto& o : per) {
            counts.push_back(o.small_loops);
            bound_ok = bound_ok && o.bounded;
        }
        ReportRow row;
        row.t = t;
        row.estimate = stats::mean(counts);
        row.halfwidth = stats::halfwidth95(counts);
        row.extra["size_threshold"] = threshold;
        rep.rows.push_back(row);
        means.push_back(row.estimate);
        ts.push_back(t);
    }
    const auto fit = fit_power_law(ts, means);
    rep.fitted_exponent = fit.exponent;
    rep.exponent_stderr = fit.std_error;
    rep.pass = bound_ok && std::abs(fit.exponent - 0.5) <= 0.1;
    exp_detail::require_rule_replicas(cfg, rep);
    rep.notes.push_back("rule: small-loop count grows like sqrt(t) (exponent 0.5 +- 0.1); "
                        "loops never exceed either coordinate's turning count");
    return rep;
}

// ---------------------------------------------------------------------------
// cusp tracking: synthetic oracle gates, real-field scan reported
// ---------------------------------------------------------------------------

inline ExperimentReport exp_cusp_tracking(const ExperimentConfig& cfg,
                                          const NormalFactory& normals = seeded_normals()) {
    ExperimentReport rep;
    rep.experiment = "cusp_tracking";
    const double p0 = 0.3, tau0 = 2.0;
    auto field = synthetic_cusp_field(p0, tau0, 1.0, 1.0, 0.3, 0.2);

    // detection and death of the synthetic loop
    FieldWindow win{p0 - 1.3, p0 + 1.3, tau0 - 1.0, tau0 + 1.0, 80, 60};
    auto cusps = detect_singularity(field, win, 0.5);
    bool match_ok = cusps.size() == 1;
    double death_err = 1e300;
    if (match_ok) {
        std::vector<double> taus;
        for (double s = 0.25; s > 1e-6; s *= 0.7) taus.push_back(tau0 - s);
        auto track = track_loop(field, taus, p0 - 1.0, p0 + 1.0);
        match_ok = track.outcome == LoopTrack::Outcome::died;
        if (match_ok)
            death_err = std::max(std::abs(track.death_p - cusps[0].first),
                                 std::abs(track.death_tau - cusps[0].second));
    }

    // rescaled convergence ladder on the s grid (t_grid doubles as the ladder)
    auto rec = natural_frame(field, p0, tau0, 0.02);
    std::vector<double> grid;
    for (int i = 0; i <= 160; ++i) grid.push_back(-1.9 + 3.8 * i / 160.0);
    auto ghat = limit_loop(rec.a2, rec.b3, grid);
    std::vector<double> ladder = cfg.t_grid; // s values, increasing per config
    std::vector<double> dists, elong, svals;
    for (auto it = ladder.rbegin(); it != ladder.rend(); ++it) {
        const double s = *it;
        auto fs = rescale_dying_loop(field, rec, s, grid);
        const double d = curve_distance(fs, ghat);
        // aspect ratio of the unrescaled loop
        double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
        const double ext = std::sqrt(3.0 * s) * 1.1;
        for (int i = 0; i <= 200; ++i) {
            const double p = p0 - ext + 2.0 * ext * i / 200.0;
            const Vec2 v = field(p, tau0 - s);
            xlo = std::min(xlo, v.x);
            xhi = std::max(xhi, v.x);
            ylo = std::min(ylo, v.y);
            yhi = std::max(yhi, v.y);
        }
        dists.push_back(d);
        elong.push_back((xhi - xlo) / (yhi - ylo));
        svals.push_back(s);
        ReportRow row;
        row.t = s;
        row.estimate = d;
        row.extra["elongation"] = (xhi - xlo) / (yhi - ylo);
        rep.rows.push_back(row);
    }
    const auto efit = fit_power_law(svals, elong);
    rep.fitted_exponent = efit.exponent;
    rep.exponent_stderr = efit.std_error;

    bool zeta_ok = true;
    for (int n = 0; n <= 8; ++n) {
        auto zc = zeta_coefficients(n, -1.0);
        auto hc = hermite_coefficients(n);
        for (std::size_t i = 0; i < zc.size(); ++i) zeta_ok = zeta_ok && zc[i] == hc[i];
    }

    // real-field scan: found singularities and their death matching, reported
    int found_total = 0, matched = 0;
    const int scan_reps = std::min(cfg.replicas, 8);
    for (int r = 0; r < scan_reps; ++r) {
        auto gen = normals(cfg.seed, 1000 + static_cast<std::uint64_t>(r));
        auto path = build_path_increments(gen, 80.0, 0.25, 2);
        if (path.sup_abs(0) == 0.0 && path.sup_abs(1) == 0.0) continue; // zero double
        HeatField hf(path, 256);
        auto f = hf.as_field();
        FieldWindow rwin{20.0, 45.0, 1.5, 4.0, 100, 50};
        for (auto& c : detect_singularity(f, rwin, 0.12)) {
            // keep only candidates that Newton drove to an actual zero of the speed
            if (cusp_detail::d1(f, c.first, c.second, 0.02).norm() > 0.02) continue;
            ++found_total;
            try {
                auto rc = natural_frame(f, c.first, c.second, 0.05, 5e-2);
                (void)rc;
                const double s0 = 0.2;
                const double halfwin = 1.3 * std::sqrt(3.0 * s0);
                std::vector<double> taus;
                for (double s = s0; s > 2e-4; s *= 0.75) taus.push_back(c.second - s);
                auto tr = track_loop(f, taus, c.first - halfwin, c.first + halfwin, 257, 5e-2);
                if (tr.outcome == LoopTrack::Outcome::died &&
                    std::abs(tr.death_p - c.first) < 5e-2 &&
                    std::abs(tr.death_tau - c.second) < 5e-2)
                    ++matched;
            } catch (const std::exception&) {
                // degenerate or shallow candidate; counted as unmatched
            }
        }
    }
    rep.rows.front().extra["death_site_error"] = death_err;
    rep.rows.front().extra["real_found"] = found_total;
    rep.rows.front().extra["real_matched"] = matched;
    rep.rows.front().extra["zeta_hermite_exact"] = zeta_ok ? 1.0 : 0.0;

    rep.pass = match_ok && death_err <= 1e-3 && exp_detail::strictly_decreasing(dists) &&
               std::abs(efit.exponent + 0.5) <= 0.1 && zeta_ok;
    rep.notes.push_back("rule: synthetic death coincides with the detected cusp within 1e-3; "
                        "rescaled-loop distances decrease along the s ladder; elongation "
                        "slope -0.5 +- 0.1; zeta(., -1) equals the Hermite polynomials");
    return rep;
}

// ---------------------------------------------------------------------------
// freezing of the rescaled tail
// ---------------------------------------------------------------------------

inline ExperimentReport exp_freezing(const ExperimentConfig& cfg,
                                     const NormalFactory& normals = seeded_normals()) {
    ExperimentReport rep;
    rep.experiment = "freezing";
    KernelSpec spec0{cfg.alpha, cfg.t_grid.back(), cfg.quadrature_points, 6.0};
    const double c = kFreezingEta / (sqr(spec0.rho()) * cfg.alpha * (1.0 + kFreezingEta));
    const double horizon = -std::log(1e-12) / c * 1.05;
    const double step = 0.05;

    std::vector<double> mses, ts, heads;
    const double t_head_max = 2.0 * cfg.t_grid.back();
    for (double t : cfg.t_grid) {
        KernelSpec spec{cfg.alpha, t, cfg.quadrature_points, 6.0};
        struct Out {
            double se, head;
        };
        auto per = run_replicas<Out>(cfg.replicas, cfg.workers, [&](int r) {
            auto gen = normals(cfg.seed, static_cast<std::uint64_t>(r) * 2);
            auto path = build_path_increments(gen, horizon, step, 1);
            const double vt = tail_rescaled(path, kFreezingEta, t, spec);
            const double v = freezing_limit(path, kFreezingEta, spec);
            // head control on its own long unit-grid path
            auto gen2 = normals(cfg.seed, static_cast<std::uint64_t>(r) * 2 + 1);
            auto head_path = build_path_increments(gen2, t_head_max, 1.0, 1);
            double disp = 0.0;
            for (int i = 0; i <= 40; ++i) {
                const double x = cfg.delta + (cfg.alpha - cfg.delta) * i / 40.0;
                const double u1 = eval_u(head_path, x * t, t, spec) / std::sqrt(t);
                KernelSpec spec2 = spec;
                spec2.t = 2.0 * t;
                const double u2 =
                    eval_u(head_path, 2.0 * x * t, 2.0 * t, spec2) / std::sqrt(2.0 * t);
                disp = std::max(disp, std::abs(u1 - u2));
            }
            return Out{sqr(vt - v), disp};
        });
        std::vector<double> ses, disps;
        for (auto& o : per) {
            ses.push_back(o.se);
            disps.push_back(o.head);
        }
        ReportRow row;
        row.t = t;
        row.estimate = stats::mean(ses);
        row.halfwidth = stats::halfwidth95(ses);
        row.prediction = std::pow(t, -1.5);
        row.ratio = row.estimate / row.prediction;
        row.extra["head_displacement"] = stats::mean(disps);
        rep.rows.push_back(row);
        mses.push_back(row.estimate);
        ts.push_back(t);
        heads.push_back(row.extra["head_displacement"]);
    }
    const bool zero_case = mses.back() == 0.0; // zero-path double
    if (!zero_case) {
        const auto fit = fit_power_law(ts, mses);
        rep.fitted_exponent = fit.exponent;
        rep.exponent_stderr = fit.std_error;
        const double head_min = *std::min_element(heads.begin(), heads.end());
        const double head_max = *std::max_element(heads.begin(), heads.end());
        rep.pass = std::abs(fit.exponent + 1.5) <= 0.2 && head_min >= 0.2 * head_max;
    }
    exp_detail::require_rule_replicas(cfg, rep);
    rep.notes.push_back("rule: mean squared error falls with slope -1.5 +- 0.2; the scaled "
                        "head keeps moving between t and 2t (no freezing at path scale)");
    return rep;
}

// ---------------------------------------------------------------------------
// registry, config and report I/O
// ---------------------------------------------------------------------------

struct RegistryEntry {
    std::string name;
    std::string claim;
    std::string rule;
    ExperimentReport (*run)(const ExperimentConfig&, const NormalFactory&);
};

inline const std::vector<RegistryEntry>& experiment_registry() {
    static const std::vector<RegistryEntry> entries{
        {"coupling", "chain positions and increments couple to the smooth field with "
                     "errors falling in the chain index",
         "scaled sup errors non-increasing over the n grid", &exp_coupling},
        {"variance_cutoff", "the field variance transitions sharply near the cutoff location",
         "rate envelope stable in [1/3,3]; monotone on each side; MC within 3 half-widths",
         &exp_variance_cutoff},
        {"intensity", "critical points arrive with the closed-form first intensity and the "
                      "count concentrates around its mean",
         "mean within 5% at t=2000; Var(N/EN) strictly decreasing; gap envelope",
         &exp_intensity},
        {"spacing", "critical points do not crowd: cells much finer than the mean spacing "
                    "rarely hold two",
         "crowded-cell fraction decreasing; coarse-cell sanity inversion", &exp_spacing},
        {"length", "curve length grows like t^{1/4} with bounded variance",
         "exponent 0.25 +- 0.03; Var ratio <= 3; quadrature vs closed form within 2%",
         &exp_length},
        {"brownian_closeness", "the scaled curve tracks the driving path at rate t^{-1/4} "
                               "with a log correction",
         "normalized p99 stable within factor 2; raw exponent -0.25 +- 0.05",
         &exp_brownian_closeness},
        {"loop_count", "the number of small loops grows like sqrt(t)",
         "exponent 0.5 +- 0.1; loop count bounded by coordinate turning counts",
         &exp_loop_count},
        {"cusp_tracking", "dying loops elongate, converge to the universal loop after "
                          "rescaling, and die exactly at cusp singularities",
         "synthetic death/cusp match within 1e-3; distance ladder decreasing; elongation "
         "slope -0.5 +- 0.1; zeta/Hermite identity exact",
         &exp_cusp_tracking},
        {"freezing", "the rescaled tail value converges to its limit functional",
         "MSE slope -1.5 +- 0.2; scaled head keeps moving (negative control)",
         &exp_freezing},
    };
    return entries;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       const NormalFactory& normals = seeded_normals()) {
    cfg.validate();
    for (const auto& e : experiment_registry()) {
        if (e.name == cfg.experiment) {
            const auto start = std::chrono::steady_clock::now();
            ExperimentReport rep = e.run(cfg, normals);
            rep.runtime_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
            return rep;
        }
    }
    throw std::invalid_argument("unknown experiment: " + cfg.experiment);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    nlohmann::json j;
    in >> j;
    ExperimentConfig cfg;
    auto require = [&](const char* key) {
        if (!j.contains(key))
            throw std::runtime_error(std::string("config: missing required key '") + key + "'");
    };
    require("experiment");
    require("alpha");
    require("t_grid");
    require("delta");
    require("replicas");
    require("seed");
    cfg.experiment = j.at("experiment").get<std::string>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.t_grid = j.at("t_grid").get<std::vector<double>>();
    cfg.delta = j.at("delta").get<double>();
    cfg.replicas = j.at("replicas").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("quadrature_points"))
        cfg.quadrature_points = j.at("quadrature_points").get<std::size_t>();
    if (j.contains("output_path")) cfg.output_path = j.at("output_path").get<std::string>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
    cfg.validate();
    return cfg;
}

inline void emit_config(const ExperimentConfig& cfg, std::ostream& out) {
    out << "{\n  \"experiment\": \"" << cfg.experiment << "\",\n";
    out << "  \"alpha\": " << format_float(cfg.alpha) << ",\n  \"t_grid\": [";
    for (std::size_t i = 0; i < cfg.t_grid.size(); ++i)
        out << (i ? ", " : "") << format_float(cfg.t_grid[i]);
    out << "],\n  \"delta\": " << format_float(cfg.delta);
    out << ",\n  \"replicas\": " << cfg.replicas;
    out << ",\n  \"seed\": " << cfg.seed;
    out << ",\n  \"quadrature_points\": " << cfg.quadrature_points;
    out << ",\n  \"output_path\": \"" << cfg.output_path << "\"";
    out << ",\n  \"workers\": " << cfg.workers << "\n}\n";
}

/// Report JSON, floats at 17 significant digits.
inline void emit_report_json(const ExperimentReport& rep, std::ostream& out) {
    out << "{\n  \"experiment\": \"" << rep.experiment << "\",\n";
    out << "  \"pass\": " << (rep.pass ? "true" : "false") << ",\n";
    out << "  \"runtime_seconds\": " << format_float(rep.runtime_seconds) << ",\n";
    if (std::isfinite(rep.fitted_exponent)) {
        out << "  \"fitted_exponent\": " << format_float(rep.fitted_exponent) << ",\n";
        out << "  \"exponent_stderr\": " << format_float(rep.exponent_stderr) << ",\n";
    }
    out << "  \"notes\": [";
    for (std::size_t i = 0; i < rep.notes.size(); ++i)
        out << (i ? ", " : "") << '"' << rep.notes[i] << '"';
    out << "],\n  \"rows\": [\n";
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        out << "    {\"t\": " << format_float(r.t) << ", \"estimate\": "
            << format_float(r.estimate) << ", \"halfwidth\": " << format_float(r.halfwidth)
            << ", \"prediction\": " << format_float(r.prediction)
            << ", \"ratio\": " << format_float(r.ratio);
        for (const auto& [k, v] : r.extra) out << ", \"" << k << "\": " << format_float(v);
        out << '}' << (i + 1 < rep.rows.size() ? "," : "") << '\n';
    }
    out << "  ]\n}\n";
}

/// Flat CSV: one row per t-grid entry.
inline void emit_report_csv(const ExperimentReport& rep, std::ostream& out) {
    std::vector<std::string> keys;
    for (const auto& row : rep.rows)
        for (const auto& [k, v] : row.extra)
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    out << "t,estimate,halfwidth,prediction,ratio";
    for (const auto& k : keys) out << ',' << k;
    out << '\n';
    for (const auto& row : rep.rows) {
        out << format_float(row.t) << ',' << format_float(row.estimate) << ','
            << format_float(row.halfwidth) << ',' << format_float(row.prediction) << ','
            << format_float(row.ratio);
        for (const auto& k : keys) {
            auto it = row.extra.find(k);
            out << ',';
            if (it != row.extra.end()) out << format_float(it->second);
        }
        out << '\n';
    }
}

inline void emit_report(const ExperimentReport& rep, const std::string& dir) {
    const std::string base = dir.empty() ? rep.experiment : dir + "/" + rep.experiment;
    std::ofstream js(base + ".json", std::ios::binary);
    if (!js) throw std::runtime_error("emit_report: cannot write " + base + ".json");
    emit_report_json(rep, js);
    std::ofstream cs(base + ".csv", std::ios::binary);
    emit_report_csv(rep, cs);
}

} // namespace conga
