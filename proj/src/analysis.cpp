#include "rlfuzz/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rlfuzz::analysis {

uint64_t PolicyHistogram::total() const {
    uint64_t t = 0;
    for (uint64_t c : counts) t += c;
    return t;
}

std::vector<double> PolicyHistogram::distribution() const {
    std::vector<double> d(counts.size(), 0.0);
    uint64_t t = total();
    if (t == 0) {
        if (!d.empty()) std::fill(d.begin(), d.end(), 1.0 / double(d.size()));
        return d;
    }
    for (size_t i = 0; i < counts.size(); ++i) d[i] = double(counts[i]) / double(t);
    return d;
}

std::string PolicyHistogram::to_text() const {
    std::string out;
    for (size_t i = 0; i < action_names.size(); ++i)
        out += action_names[i] + "\t" + std::to_string(counts[i]) + "\n";
    return out;
}

PolicyHistogram PolicyHistogram::from_text(const std::string& text) {
    PolicyHistogram h;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("histogram line " + std::to_string(lineno) + ": missing tab");
        h.action_names.push_back(line.substr(0, tab));
        h.counts.push_back(std::stoull(line.substr(tab + 1)));
    }
    if (h.action_names.empty()) throw std::runtime_error("histogram file: no entries");
    return h;
}

void PolicyHistogram::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write histogram file: " + path);
    f << to_text();
}

PolicyHistogram PolicyHistogram::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open histogram file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_text(ss.str());
}

PolicyHistogram PolicyHistogram::for_actions(const ddqn::ActionSpace& actions) {
    PolicyHistogram h;
    for (int a = 0; a < actions.size(); ++a) h.action_names.push_back(actions.action_name(a));
    h.counts.assign(size_t(actions.size()), 0);
    return h;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q,
                     double smoothing) {
    if (p.size() != q.size() || p.empty())
        throw std::invalid_argument("kl_divergence: distributions must share a nonempty support");

    auto smooth = [smoothing](const std::vector<double>& d) {
        std::vector<double> s(d.size());
        double z = 0.0;
        for (size_t i = 0; i < d.size(); ++i) {
            s[i] = d[i] + smoothing;
            z += s[i];
        }
        for (auto& x : s) x /= z;
        return s;
    };
    std::vector<double> ps = smooth(p), qs = smooth(q);

    double kl = 0.0;
    for (size_t i = 0; i < ps.size(); ++i) kl += ps[i] * std::log(ps[i] / qs[i]);
    return kl < 0.0 ? 0.0 : kl;  // clamp the tiny negative rounding residue
}

std::vector<std::vector<double>> policy_similarity_matrix(
    const std::vector<PolicyHistogram>& histograms, double smoothing) {
    if (histograms.size() < 2)
        throw std::invalid_argument("policy_similarity_matrix: need at least two histograms");
    size_t n = histograms.size();
    std::vector<std::vector<double>> dists;
    for (const auto& h : histograms) {
        if (h.counts.size() != histograms[0].counts.size())
            throw std::invalid_argument("policy_similarity_matrix: support mismatch");
        dists.push_back(h.distribution());
    }
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            m[i][j] = i == j ? 0.0 : kl_divergence(dists[i], dists[j], smoothing);
    return m;
}

std::string matrix_to_csv(const std::vector<std::vector<double>>& m,
                          const std::vector<std::string>& labels) {
    std::string out;
    char buf[48];
    if (!labels.empty()) {
        out += "label";
        for (const auto& l : labels) out += "," + l;
        out += "\n";
    }
    for (size_t i = 0; i < m.size(); ++i) {
        if (!labels.empty()) out += labels[i];
        for (size_t j = 0; j < m[i].size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.6f", m[i][j]);
            if (j || !labels.empty()) out += ",";
            out += buf;
        }
        out += "\n";
    }
    return out;
}

CoverageReport build_report(const std::vector<cov::CoverageSet>& candidate_sets,
                            const std::vector<cov::CoverageSet>& baseline_sets,
                            const std::vector<cov::CoverageSet>& tcn_sets) {
    if (candidate_sets.empty() || baseline_sets.empty())
        throw std::invalid_argument("build_report: candidate and baseline sets required");

    CoverageReport r;
    size_t best_cand_idx = 0;
    for (size_t i = 0; i < candidate_sets.size(); ++i) {
        r.candidate_totals.push_back(candidate_sets[i].size());
        if (candidate_sets[i].size() > candidate_sets[best_cand_idx].size()) best_cand_idx = i;
    }
    for (const auto& s : baseline_sets) r.baseline_totals.push_back(s.size());
    for (const auto& s : tcn_sets) r.tcn_totals.push_back(s.size());

    r.candidate_best = *std::max_element(r.candidate_totals.begin(), r.candidate_totals.end());
    r.baseline_best = *std::max_element(r.baseline_totals.begin(), r.baseline_totals.end());
    if (!r.tcn_totals.empty())
        r.tcn_best = *std::max_element(r.tcn_totals.begin(), r.tcn_totals.end());

    cov::CoverageSet baseline_union = cov::coverage_union(baseline_sets);
    r.unique_vs_baseline =
        cov::coverage_unique(candidate_sets[best_cand_idx], baseline_union).size();
    if (!tcn_sets.empty()) {
        cov::CoverageSet tcn_union = cov::coverage_union(tcn_sets);
        r.unique_vs_tcn = cov::coverage_unique(candidate_sets[best_cand_idx], tcn_union).size();
    }

    r.improvement_vs_baseline =
        (double(r.candidate_best) - double(r.baseline_best)) / double(r.baseline_best);
    if (r.tcn_best > 0)
        r.improvement_vs_tcn = (double(r.candidate_best) - double(r.tcn_best)) / double(r.tcn_best);
    return r;
}

std::string CoverageReport::to_csv() const {
    std::string out = "metric,value\n";
    char buf[64];
    auto add = [&](const char* k, double v, bool pct) {
        std::snprintf(buf, sizeof buf, pct ? "%s,%.4f\n" : "%s,%.0f\n", k, v);
        out += buf;
    };
    for (size_t i = 0; i < candidate_totals.size(); ++i)
        add(("candidate_total_" + std::to_string(i)).c_str(), double(candidate_totals[i]), false);
    for (size_t i = 0; i < baseline_totals.size(); ++i)
        add(("baseline_total_" + std::to_string(i)).c_str(), double(baseline_totals[i]), false);
    for (size_t i = 0; i < tcn_totals.size(); ++i)
        add(("tcn_total_" + std::to_string(i)).c_str(), double(tcn_totals[i]), false);
    add("candidate_best", double(candidate_best), false);
    add("baseline_best", double(baseline_best), false);
    if (tcn_best) add("tcn_best", double(tcn_best), false);
    add("unique_vs_baseline", double(unique_vs_baseline), false);
    if (tcn_best) add("unique_vs_tcn", double(unique_vs_tcn), false);
    add("improvement_vs_baseline_pct", improvement_vs_baseline * 100.0, true);
    if (tcn_best) add("improvement_vs_tcn_pct", improvement_vs_tcn * 100.0, true);
    return out;
}

std::string CoverageReport::summary_line() const {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%+.1f%% vs best baseline (%zu vs %zu blocks)",
                  improvement_vs_baseline * 100.0, candidate_best, baseline_best);
    return buf;
}

}  // namespace rlfuzz::analysis
