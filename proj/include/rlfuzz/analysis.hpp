#pragma once

#include <string>
#include <vector>

#include "rlfuzz/coverage.hpp"
#include "rlfuzz/ddqn.hpp"

namespace rlfuzz::analysis {

// Action counts over all steps of a model's generated test cases.
struct PolicyHistogram {
    std::vector<std::string> action_names;
    std::vector<uint64_t> counts;

    void add(int action) { ++counts.at(size_t(action)); }
    uint64_t total() const;
    // normalized view; sums to 1 (all-zero counts become the uniform view)
    std::vector<double> distribution() const;

    // persisted as "action_name<TAB>count" lines
    std::string to_text() const;
    static PolicyHistogram from_text(const std::string& text);
    void save(const std::string& path) const;
    static PolicyHistogram load(const std::string& path);

    static PolicyHistogram for_actions(const ddqn::ActionSpace& actions);
};

// D(P||Q) = sum p_i * ln(p_i / q_i), natural log. Both distributions receive
// the smoothing epsilon on every cell and are renormalized first.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q,
                     double smoothing = 1e-9);

// pairwise KL matrix; diagonal zero, generally asymmetric
std::vector<std::vector<double>> policy_similarity_matrix(
    const std::vector<PolicyHistogram>& histograms, double smoothing = 1e-9);

std::string matrix_to_csv(const std::vector<std::vector<double>>& m,
                          const std::vector<std::string>& labels = {});

struct CoverageReport {
    std::vector<size_t> candidate_totals;
    std::vector<size_t> baseline_totals;
    std::vector<size_t> tcn_totals;
    size_t candidate_best = 0;
    size_t baseline_best = 0;
    size_t tcn_best = 0;
    size_t unique_vs_baseline = 0;  // best candidate set minus the baseline union
    size_t unique_vs_tcn = 0;
    double improvement_vs_baseline = 0.0;  // (best_cand - best_base) / best_base
    double improvement_vs_tcn = 0.0;

    std::string to_csv() const;
    std::string summary_line() const;  // e.g. "+7.7% vs best baseline"
};

CoverageReport build_report(const std::vector<cov::CoverageSet>& candidate_sets,
                            const std::vector<cov::CoverageSet>& baseline_sets,
                            const std::vector<cov::CoverageSet>& tcn_sets = {});

}  // namespace rlfuzz::analysis
